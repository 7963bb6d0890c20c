//! `ips-lab`: simulation, criterion evaluation and parameter sweeps for
//! interacting particle systems on rings.

mod commands;
mod config;
mod output;
mod presets;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "ips-lab", version, about, args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Continuous-time simulation on a ring, rendered as a space-time PGM.
    Simulate(SimulateArgs),
    /// Synchronous-update simulation on a ring, one PGM row per step.
    Pca(PcaArgs),
    /// Evaluates the contractivity criterion for a basis or searches a basis grid.
    Criterion(CriterionArgs),
    /// Criterion verdicts over a two-parameter slice of nearest-neighbour rules.
    Sweep(SweepArgs),
    /// Additive or cancellative decomposition and the resulting ergodicity rate.
    Decompose(DecomposeArgs),
    /// Two-stage contact process: closed-form inequalities against the generic criterion.
    TwoStage(TwoStageArgs),
    /// Compares the forward simulator and the perfect sampler with the exact law on a small ring.
    OracleCheck(OracleArgs),
    /// Monte Carlo covariance decay, disagreement density or boundary-start marginals.
    Estimate(EstimateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct RuleArg {
    /// Preset name, `p11,p10,p01,p00`, inline JSON or a rule JSON file.
    /// Append `+alternate` to a nearest-neighbour rule to rename 0 and 1 on odd sites.
    #[arg(long)]
    pub rule: String,
}

#[derive(Args, Debug, Clone)]
pub struct InitArg {
    /// `zeros`, `ones` (top symbol), `random`, `random:p0,p1,…` or a digit pattern such as `0110`.
    #[arg(long, default_value = "random")]
    pub init: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ClockArg {
    Exp,
    Delta1,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub rule: RuleArg,
    #[arg(long, default_value_t = 128)]
    pub n: usize,
    #[arg(long, default_value_t = 64.0)]
    pub t: f64,
    #[arg(long, value_enum, default_value_t = ClockArg::Exp)]
    pub clock: ClockArg,
    /// Rate of the exponential clocks.
    #[arg(long, default_value_t = 1.0)]
    pub rate: f64,
    #[command(flatten)]
    pub init: InitArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rows of the raster, evenly spaced from time 0 to `t`.
    #[arg(long, default_value_t = 64)]
    pub frames: usize,
    /// Raster output; standard output when absent.
    #[arg(long)]
    pub pgm: Option<PathBuf>,
    /// Event list as CSV `time,site,symbol`.
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Binary P5 instead of ASCII P2.
    #[arg(long)]
    pub binary: bool,
}

#[derive(Args, Debug)]
pub struct PcaArgs {
    #[command(flatten)]
    pub rule: RuleArg,
    #[arg(long, default_value_t = 128)]
    pub n: usize,
    #[arg(long, default_value_t = 64)]
    pub steps: usize,
    #[command(flatten)]
    pub init: InitArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub pgm: Option<PathBuf>,
    #[arg(long)]
    pub events: Option<PathBuf>,
    #[arg(long)]
    pub binary: bool,
}

#[derive(Args, Debug, Clone)]
pub struct BasisArgs {
    /// `x,y` for alphabet 2, or `x1,x2,…;y1,y2,…`.
    #[arg(long, conflicts_with = "search")]
    pub basis: Option<String>,
    /// Grid search over bases instead of a fixed basis.
    #[arg(long)]
    pub search: bool,
    /// Search grid for x as `min:max:steps`.
    #[arg(long)]
    pub x_grid: Option<String>,
    /// Search grid for y as `min:max:steps`.
    #[arg(long)]
    pub y_grid: Option<String>,
    /// Strictness: pass requires `α < 1 − eps`.
    #[arg(long, default_value_t = ips_core::basis::DEFAULT_EPS)]
    pub eps: f64,
}

#[derive(Args, Debug)]
pub struct CriterionArgs {
    #[command(flatten)]
    pub rule: RuleArg,
    #[command(flatten)]
    pub basis: BasisArgs,
    /// Also evaluate the synchronous-update criterion for the chosen basis.
    #[arg(long)]
    pub pca: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    P11,
    P10,
    P01,
    P00,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value_t = Axis::P10)]
    pub x_axis: Axis,
    #[arg(long, value_enum, default_value_t = Axis::P01)]
    pub y_axis: Axis,
    /// `min:max:steps`.
    #[arg(long, default_value = "0:1:101")]
    pub x_range: String,
    #[arg(long, default_value = "0:1:101")]
    pub y_range: String,
    /// The two remaining parameters, e.g. `p11=0,p00=0.1`.
    #[arg(long)]
    pub fixed: String,
    #[command(flatten)]
    pub basis: BasisArgs,
    /// Marks failing cells in the Gray region (gray in the PGM, extra CSV column).
    #[arg(long)]
    pub gray_overlay: bool,
    /// CSV output; with this set a JSON summary goes to standard output.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Region raster: pass black, fail white, largest y on top.
    #[arg(long)]
    pub pgm: Option<PathBuf>,
    #[arg(long)]
    pub binary: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Additive,
    Cancellative,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub rule: RuleArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Additive)]
    pub mode: ModeArg,
    /// Allow a negative identity coefficient.
    #[arg(long)]
    pub extended: bool,
}

#[derive(Args, Debug)]
pub struct TwoStageArgs {
    #[arg(long)]
    pub lam: f64,
    #[arg(long)]
    pub gam: f64,
    #[arg(long)]
    pub del: f64,
    #[arg(long, default_value_t = 2)]
    pub n_size: usize,
    #[arg(long, default_value_t = ips_core::basis::DEFAULT_EPS)]
    pub eps: f64,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[command(flatten)]
    pub rule: RuleArg,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 100_000)]
    pub replicas: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "zeros")]
    pub init: String,
    /// Also compare `time_scale(rule, λ)` at `t` with the rule at `λt`.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Largest accepted total-variation distance.
    #[arg(long, default_value_t = 0.01)]
    pub tol: f64,
    /// Smallest accepted chi-squared p-value for the time-scaling check.
    #[arg(long, default_value_t = 0.001)]
    pub alpha: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EstimateKind {
    Covariance,
    Disagreement,
    Marginals,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub rule: RuleArg,
    #[arg(long, value_enum, default_value_t = EstimateKind::Covariance)]
    pub kind: EstimateKind,
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Observation times as `min:max:steps`.
    #[arg(long, default_value = "0:20:11")]
    pub times: String,
    #[arg(long, default_value_t = 2000)]
    pub replicas: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub init: InitArg,
    /// Basis of the observable `χ_{j,a}` and of the bound, `x,y` or `x1,…;y1,…`.
    #[arg(long)]
    pub basis: Option<String>,
    /// Letter `a` of the observable.
    #[arg(long, default_value_t = 1)]
    pub letter: u8,
    #[arg(long, default_value_t = ips_core::basis::DEFAULT_EPS)]
    pub eps: f64,
    /// CSV output; with this set a JSON summary goes to standard output.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("IPS_LAB_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| anyhow::anyhow!("IPS_LAB_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run() -> anyhow::Result<ExitCode> {
    init_threads()?;
    let args = config::expand(std::env::args_os().collect())?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            e.print()?;
            return Ok(ExitCode::from(if e.use_stderr() { 2 } else { 0 }));
        }
    };
    commands::dispatch(cli.command)
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<std::io::Error>())
        .any(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
