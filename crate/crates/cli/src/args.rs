use clap::{Args, Parser, Subcommand, ValueEnum};
use loolsim::{BasisTag, SubspaceLabel};

#[derive(Parser, Debug)]
#[command(
    name = "loolsim",
    version,
    about = "Two-photon LG-mode entanglement: HOM scans, eraser curves, witness and tomography"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Write results here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<std::path::PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Coincidence probability versus delay for two single photons.
    HomScan(ScanArgs),
    /// Symmetric and antisymmetric eraser expectations versus delay.
    Eraser(EraserArgs),
    /// MUB witness estimate of the fidelity from simulated counts.
    Witness(StateArgs),
    /// Full 36-setting tomography with witness cross-check.
    Tomo(TomoArgs),
    /// Schmidt decomposition of a pump × phase-matching joint spectrum.
    Schmidt(SchmidtArgs),
    /// Single-photon amplitudes through beamsplitter then SLM mixer.
    Lift(LiftArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    Gauss,
    Sinc,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum StateKind {
    /// Output of the ideal optical chain.
    Ideal,
    /// Classical mixture of |l0> and |0l>.
    Mixed,
    /// Maximally mixed two-qubit state.
    White,
    /// Optical chain with plate mode overlap `--eta`.
    Crosstalk,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum WeightingArg {
    Unweighted,
    Poisson,
}

#[derive(Args, Debug, Clone)]
#[group(multiple = false)]
pub struct SubspaceArgs {
    /// Azimuthal index l of the excited mode (default 3).
    #[arg(long = "l", allow_negative_numbers = true)]
    pub l: Option<i32>,
    /// Radial index p of the excited mode.
    #[arg(long = "p")]
    pub p: Option<u32>,
}

impl SubspaceArgs {
    pub fn label(&self) -> Result<SubspaceLabel, String> {
        let (basis, index) = match (self.l, self.p) {
            (_, Some(p)) => (BasisTag::Radial, p as i32),
            (Some(l), None) => (BasisTag::Azimuthal, l),
            (None, None) => (BasisTag::Azimuthal, 3),
        };
        SubspaceLabel::new(basis, index).map_err(|e| e.to_string())
    }
}

#[derive(Args, Debug, Clone)]
pub struct SpectrumArgs {
    #[arg(long, value_enum, default_value_t = Profile::Gauss)]
    pub profile: Profile,
    /// Spectral amplitude width in rad/ps (Gaussian σ, or 1/A for sinc).
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Scan start in ps (default -4/σ).
    #[arg(long, allow_negative_numbers = true)]
    pub tau_min: Option<f64>,
    /// Scan end in ps (default 4/σ).
    #[arg(long, allow_negative_numbers = true)]
    pub tau_max: Option<f64>,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    /// Two-photon mode overlap of the inputs, in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
}

#[derive(Args, Debug, Clone)]
pub struct ScanArgs {
    #[command(flatten)]
    pub spectrum: SpectrumArgs,
}

#[derive(Args, Debug, Clone)]
pub struct EraserArgs {
    #[command(flatten)]
    pub subspace: SubspaceArgs,
    #[command(flatten)]
    pub spectrum: SpectrumArgs,
}

#[derive(Args, Debug, Clone)]
pub struct StateArgs {
    #[command(flatten)]
    pub subspace: SubspaceArgs,
    #[arg(long, value_enum, default_value_t = StateKind::Ideal)]
    pub state: StateKind,
    /// Plate mode overlap for `--state crosstalk`, in [0, 1].
    #[arg(long, default_value_t = 0.95)]
    pub eta: f64,
    /// Beamsplitter reflectivity for the optical-chain states.
    #[arg(long, default_value_t = 0.5)]
    pub r: f64,
    /// Mean coincidences per setting at unit probability.
    #[arg(long, default_value_t = 100_000)]
    pub counts: u64,
    #[arg(long, env = "LOOLSIM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Bootstrap resamples for the error bars.
    #[arg(long, default_value_t = 1000)]
    pub resamples: usize,
}

#[derive(Args, Debug, Clone)]
pub struct TomoArgs {
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long, value_enum, default_value_t = WeightingArg::Unweighted)]
    pub weighting: WeightingArg,
}

#[derive(Args, Debug, Clone)]
pub struct SchmidtArgs {
    #[arg(long, value_enum, default_value_t = Profile::Gauss)]
    pub profile: Profile,
    /// Pump amplitude width in rad/ps, acting on ω1 + ω2.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Phase-matching width in rad/ps, acting on ω1 - ω2.
    #[arg(long, default_value_t = 3.0)]
    pub phase_matching: f64,
    /// Grid nodes per frequency axis.
    #[arg(long, default_value_t = 128)]
    pub points: usize,
    /// Schmidt modes kept.
    #[arg(long, default_value_t = 32)]
    pub modes: usize,
    #[arg(long, allow_negative_numbers = true)]
    pub tau_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub tau_max: Option<f64>,
    /// Delay points for the HOM curve.
    #[arg(long, default_value_t = 41)]
    pub delays: usize,
}

#[derive(Args, Debug, Clone)]
pub struct LiftArgs {
    /// SLM mixing angle in radians.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub r: f64,
    #[command(flatten)]
    pub subspace: SubspaceArgs,
}
