use thiserror::Error;

use crate::fock::{BasisTag, ModeIndex, Path};
use crate::measurement::SubspaceLabel;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("both photons occupy path {0:?}; the two inputs must be on distinct paths")]
    PathsNotDistinct(Path),

    #[error("radial mode index must be non-negative, got {0}")]
    NegativeRadialLabel(i32),

    #[error("matrix is not unitary (max |U^H U - I| = {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("matrix is {rows}x{cols} but the mode map lists {modes} modes")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        modes: usize,
    },

    #[error("mode {0} appears more than once in the mode map")]
    DuplicateMode(ModeIndex),

    #[error("mode {0} is not covered by the mode map")]
    UnmappedMode(ModeIndex),

    #[error("expected a {expected}-photon state, found photon number {found:?}")]
    PhotonNumber { expected: u32, found: Option<u32> },

    #[error("no coincidence terms survive post-selection (success probability 0)")]
    NoCoincidence,

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("reflectivity {0} is outside [0, 1]")]
    ReflectivityOutOfRange(f64),

    #[error("{what} must lie in [0, 1], got {value}")]
    OutOfUnitInterval { what: &'static str, value: f64 },

    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("operation is undefined for {0:?} mode labels")]
    UnsupportedBasis(BasisTag),

    #[error("beamsplitter pair ({0}, {1}) must couple a path-A mode to a path-B mode with the same label")]
    InvalidPairing(ModeIndex, ModeIndex),

    #[error("the two mixed labels must differ (both are {0})")]
    IdenticalLabels(i32),

    #[error("{what} is not normalised: norm^2 = {norm_sq}")]
    Unnormalized { what: &'static str, norm_sq: f64 },

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    #[error("imaginary residue {0:.3e} exceeds tolerance")]
    ImaginaryResidue(f64),

    #[error("state or operator has support outside the {0} subspace")]
    SubspaceMismatch(SubspaceLabel),

    #[error("{0} evaluated to a non-finite value; parameters are outside the representable range")]
    NonFinite(&'static str),

    #[error("empty or degenerate range")]
    EmptyRange,

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("measurement setting is not one of the mutually unbiased basis states")]
    UnknownSetting,

    #[error("missing setting: MUB {mub}, outcomes ({alice}, {bob})")]
    MissingSetting {
        mub: usize,
        alice: usize,
        bob: usize,
    },

    #[error("a setting group has zero total counts")]
    EmptySettingGroup,

    #[error("measurement settings are not informationally complete (design rank {rank} < 16)")]
    RankDeficient { rank: usize },

    #[error("records mix subspaces {0} and {1}")]
    MixedSubspaces(SubspaceLabel, SubspaceLabel),

    #[error("no records supplied")]
    NoRecords,
}
