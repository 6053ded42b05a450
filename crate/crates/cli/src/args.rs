use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "gravcorr",
    version,
    about = "Gravity-mediated optical correlations between two optomechanical cavities"
)]
pub struct Cli {
    /// TOML or JSON parameter file; built-in presets are used when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output path (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Output format; reports default to JSON, curves to CSV.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Random seed for stochastic commands.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Output spectra S_XX, S_NN, S_XY on a frequency grid.
    Spectra(SpectraArgs),
    /// Optimal-filter and closed-form SNR at a given integration time.
    Snr(SnrArgs),
    /// Integration time needed for a target SNR.
    Tau(TauArgs),
    /// Logarithmic negativity of the output modes at resonance.
    Negativity(NegativityArgs),
    /// Thermal threshold for gravity-mediated entanglement.
    Threshold(ThresholdArgs),
    /// Geometric form factor of two coaxial test masses.
    Formfactor(FormfactorArgs),
    /// Time-domain Monte Carlo of the correlation estimator.
    Montecarlo(MontecarloArgs),
    /// Runs a scalar command over values of one parameter.
    Sweep(SweepArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectra(_) => "spectra",
            Command::Snr(_) => "snr",
            Command::Tau(_) => "tau",
            Command::Negativity(_) => "negativity",
            Command::Threshold(_) => "threshold",
            Command::Formfactor(_) => "formfactor",
            Command::Montecarlo(_) => "montecarlo",
            Command::Sweep(_) => "sweep",
        }
    }

    pub fn default_format(&self) -> Format {
        match self {
            Command::Spectra(_) | Command::Formfactor(_) | Command::Sweep(_) => Format::Csv,
            _ => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SpectraArgs {
    /// Lowest frequency, Hz (with --fmax-hz; default is the SNR grid).
    #[arg(long, requires = "fmax_hz")]
    pub fmin_hz: Option<f64>,
    #[arg(long, requires = "fmin_hz")]
    pub fmax_hz: Option<f64>,
    #[arg(long, default_value_t = 2001)]
    pub points: usize,
    /// Logarithmic spacing.
    #[arg(long)]
    pub log: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SnrArgs {
    /// Integration time, s (default one year).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Move cavity B to its optimal read-out power first.
    #[arg(long)]
    pub optimize_b: bool,
    /// Rescale cavity A's power so that n_th/C_A equals this value.
    #[arg(long)]
    pub noise_ratio: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct TauArgs {
    #[arg(long, default_value_t = 1.0)]
    pub target_snr: f64,
    /// Rescale cavity A's power so that n_th/C_A equals this value.
    #[arg(long)]
    pub noise_ratio: Option<f64>,
    /// Keep cavity B's configured power instead of the optimum.
    #[arg(long)]
    pub keep_b: bool,
}

#[derive(Debug, Clone, Args)]
pub struct NegativityArgs {
    /// Mode bandwidth, rad/s (default gamma_m).
    #[arg(long)]
    pub delta_omega: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Regime {
    Gaussian,
    NonGaussian,
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    /// Also compare interaction and decoherence rates in this regime.
    #[arg(long, value_enum, requires_all = ["dxq", "d"])]
    pub regime: Option<Regime>,
    /// Quantum position spread, m.
    #[arg(long)]
    pub dxq: Option<f64>,
    /// Mean separation, m.
    #[arg(long)]
    pub d: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Shape {
    Sphere,
    Disk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Derived,
    Paper,
}

#[derive(Debug, Clone, Args)]
pub struct FormfactorArgs {
    #[arg(long, value_enum, default_value = "disk")]
    pub shape: Shape,
    /// Disk radius over thickness.
    #[arg(long, default_value_t = 1.5)]
    pub aspect: f64,
    /// Body radius, m.
    #[arg(long, default_value_t = 0.01)]
    pub radius: f64,
    /// Smallest centre separation, m (default: contact).
    #[arg(long)]
    pub dmin: Option<f64>,
    /// Largest centre separation, m (default: five times contact).
    #[arg(long)]
    pub dmax: Option<f64>,
    #[arg(long, default_value_t = 25)]
    pub points: usize,
    #[arg(long, value_enum, default_value = "derived")]
    pub convention: ConventionArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Quantum,
    SchroedingerNewton,
    None,
}

#[derive(Debug, Clone, Args)]
pub struct MontecarloArgs {
    /// Sample interval, s.
    #[arg(long, default_value_t = gravcorr::montecarlo::DESK_DT_S)]
    pub dt: f64,
    /// Integration times, s, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "100,215.44346900318845,464.15888336127773,1000"
    )]
    pub tau: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    /// Multiplier on omega_g (replaces the configured value).
    #[arg(long)]
    pub boost: Option<f64>,
    /// Gravity model override.
    #[arg(long, value_enum)]
    pub gravity_model: Option<ModelArg>,
    /// Per-trial CSV with columns trial, tau_s, c_xy.
    #[arg(long)]
    pub trials_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepCommand {
    Tau,
    Snr,
    Threshold,
    Negativity,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Dotted parameter key, e.g. mechanical.omega_m_hz (both sides) or
    /// optical_b.power_w.
    #[arg(long)]
    pub key: String,
    /// Comma-separated values.
    #[arg(
        long,
        value_delimiter = ',',
        conflicts_with = "range",
        required_unless_present = "range"
    )]
    pub values: Option<Vec<f64>>,
    /// start:stop:count.
    #[arg(long)]
    pub range: Option<String>,
    /// Geometric spacing for --range.
    #[arg(long)]
    pub log: bool,
    #[arg(long, value_enum, default_value = "tau")]
    pub command: SweepCommand,
    /// Integration time for snr, s.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub target_snr: f64,
    #[arg(long)]
    pub noise_ratio: Option<f64>,
    #[arg(long)]
    pub optimize_b: bool,
    #[arg(long)]
    pub keep_b: bool,
    #[arg(long)]
    pub delta_omega: Option<f64>,
}
