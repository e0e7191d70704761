//! Command-line surface and the parsed experiment configuration.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use urn_core::kappa::KappaSpec;
use urn_core::quadrant::IncrementLaw;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "urnlab", version, about = "Simulation and exact computation for the simple harmonic urn")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, Args)]
pub struct GlobalArgs {
    /// Master seed; every replica stream is derived from it.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Independent replicas for Monte Carlo commands.
    #[arg(long, global = true, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub replicas: u64,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Working precision in bits for high-precision evaluations.
    #[arg(long = "prec-bits", global = true, default_value_t = 128, value_parser = clap::value_parser!(u64).range(64..=65536))]
    pub prec_bits: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Simple,
    Leaky,
    Noisy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EmbedKind {
    /// Traversal time of the continuous-time chain.
    Fast,
    /// Final V of the death/birth embedding.
    Slow,
    /// Exact expected time and area at the given sizes.
    Poly,
    /// Mean of A + iB at time t against its rotation.
    Martingale,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PercKind {
    /// Coalescence of the oriented paths from (a,0) and (b,0).
    Coalesce,
    /// In-graph sizes of (0,m).
    Ingraph,
    /// Expected traversal times T(x,0) from the first-step recurrence.
    Tsolve,
    /// Lattice image of the dual path from (z0 − ½, ½).
    Dual,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ClassifyKind {
    Verdict,
    Diffusion,
    Tail,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Every acceptance criterion.
    Core,
    /// Deterministic numerical criteria only.
    Quick,
}

fn parse_kappa(s: &str) -> Result<KappaSpec, String> {
    s.parse::<KappaSpec>().map_err(|e| e.to_string())
}

fn parse_law(s: &str) -> Result<IncrementLaw, String> {
    s.parse::<IncrementLaw>().map_err(|e| e.to_string())
}

#[derive(Clone, Debug, Subcommand)]
pub enum Command {
    /// Simulate urn paths, one summary row per replica.
    Simulate {
        #[arg(long, value_enum, default_value_t = Model::Simple)]
        model: Model,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        z0: u64,
        /// κ law, e.g. point:1, twopoint:0:2:1/2, geom:1/2, pmf:0=1/4,1=3/4.
        #[arg(long, value_parser = parse_kappa, default_value = "point:0")]
        kappa: KappaSpec,
        /// Traversals per replica for the simple model.
        #[arg(long, default_value_t = 10)]
        traversals: u64,
        #[arg(long, default_value_t = 10_000_000)]
        step_cap: u64,
    },
    /// Exact transition law p(n, ·).
    Exact {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        /// Certified bound on the omitted tail mass.
        #[arg(long, default_value_t = 1e-12)]
        tail_tol: f64,
    },
    /// Renewal function of the uniform renewal process.
    Renewal {
        /// Comma-separated evaluation times.
        #[arg(long, value_delimiter = ',', default_value = "5,10,20,30")]
        t: Vec<f64>,
        /// Conjugate root pairs in the pole expansion.
        #[arg(long, default_value_t = 40)]
        pairs: usize,
        /// Emit the characteristic roots instead.
        #[arg(long)]
        roots: bool,
        /// Add Monte Carlo moments of N(t) over the replicas.
        #[arg(long)]
        mc: bool,
    },
    /// Continuous-time embeddings and the exact time/area formulas.
    Embed {
        #[arg(long = "mode", alias = "kind", value_enum, default_value_t = EmbedKind::Fast)]
        kind: EmbedKind,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        /// Time for the martingale check.
        #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
        time: f64,
    },
    /// Percolation coupling on the covering surface.
    Perc {
        #[arg(long = "experiment", alias = "kind", value_enum, default_value_t = PercKind::Coalesce)]
        kind: PercKind,
        #[arg(long, default_value_t = 5)]
        a: i64,
        #[arg(long, default_value_t = 9)]
        b: i64,
        /// Full turns allowed before giving up on coalescence.
        #[arg(long = "budget", alias = "turns", default_value_t = 6)]
        turns: i64,
        /// Largest m (ingraph) or x (tsolve).
        #[arg(long, default_value_t = 5)]
        max: u64,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        /// Start z0 of the dual path.
        #[arg(long, default_value_t = 5)]
        z0: i64,
        /// Dual path length.
        #[arg(long = "window", alias = "len", default_value_t = 200)]
        len: usize,
    },
    /// Recurrence classification and scaling diagnostics for the noisy urn.
    Classify {
        #[arg(long, value_enum, default_value_t = ClassifyKind::Verdict)]
        kind: ClassifyKind,
        #[arg(long, value_parser = parse_kappa, default_value = "point:0")]
        kappa: KappaSpec,
        /// Largest state served from the tabulated transition law.
        #[arg(long, default_value_t = 2000)]
        table_max: u64,
        #[arg(long, default_value_t = 100)]
        start: u64,
        #[arg(long, default_value_t = 100_000)]
        escape_above: u64,
        #[arg(long, value_delimiter = ',', default_value = "10,20,30")]
        grid: Vec<f64>,
        /// Samples per grid point or per fit.
        #[arg(long = "budget", alias = "samples", default_value_t = 100_000)]
        samples: u64,
        /// Horizon k for the diffusion marginal.
        #[arg(long, default_value_t = 2000)]
        horizon: u64,
    },
    /// Random walk across the positive quadrant.
    Quadrant {
        #[arg(long, value_parser = parse_law, default_value = "uniform")]
        law: IncrementLaw,
        #[arg(long, default_value_t = 5.0)]
        a0: f64,
        #[arg(long, default_value_t = 10)]
        crossings: usize,
        /// Replicas; overrides --replicas when given.
        #[arg(long)]
        samples: Option<u64>,
        /// Emit the recurrence classification instead of crossings.
        #[arg(long)]
        classify: bool,
    },
    /// Run the acceptance checks.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::Core)]
        suite: Suite,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Exact { .. } => "exact",
            Command::Renewal { .. } => "renewal",
            Command::Embed { .. } => "embed",
            Command::Perc { .. } => "perc",
            Command::Classify { .. } => "classify",
            Command::Quadrant { .. } => "quadrant",
            Command::Verify { .. } => "verify",
        }
    }
}

/// Everything a run depends on; results are a pure function of this value.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub command: Command,
    pub seed: u64,
    pub replicas: u64,
    pub prec_bits: usize,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl From<Cli> for ExperimentConfig {
    fn from(cli: Cli) -> Self {
        ExperimentConfig {
            command: cli.command,
            seed: cli.global.seed,
            replicas: cli.global.replicas,
            prec_bits: cli.global.prec_bits as usize,
            format: cli.global.format,
            out: cli.global.out,
        }
    }
}
