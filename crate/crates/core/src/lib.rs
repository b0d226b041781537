//! Simulation of unbalanced two-photon Laguerre-Gaussian entanglement.
//!
//! Two uncorrelated photons, one shifted in LG mode space, meet on a
//! beamsplitter; conditioning on one photon per output port leaves the pair
//! in `(|l,0> - |0,l>)/sqrt(2)` (or the radial `p` analogue). The crate
//! covers the whole chain:
//!
//! * [`fock`]: creation-operator algebra on labelled modes, post-selection,
//!   permanent-based two-photon amplitudes.
//! * [`optics`]: beamsplitters, SLM mode mixers, mirrors, phase plates.
//! * [`spectral`]: HOM coincidence probabilities for separable and entangled
//!   spectra, Schmidt decomposition of joint spectral amplitudes.
//! * [`measurement`]: two-party projectors on the `{|0>, |l>}` qubit,
//!   eraser curves, MUB settings, Poisson count simulation, MUB witness.
//! * [`tomography`]: projected least-squares state reconstruction.
//! * [`experiment`]: end-to-end state preparation through the optical chain.

pub mod error;
pub mod experiment;
pub mod fock;
pub mod measurement;
pub mod optics;
mod special;
pub mod spectral;
pub mod tomography;

pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};
pub use experiment::{prepare, Preparation, PreparedState};
pub use fock::{
    apply_mode_unitary, coincidence_probability, inner_product, make_two_photon_input, permanent,
    post_select_coincidence, two_photon_lift, BasisTag, ModeIndex, Occupation, OccupationTerm,
    Path, PhotonState, PostSelected,
};
pub use measurement::{
    eraser_expectation, eraser_scan, expected_records, mub_settings, read_records_csv,
    simulate_counts, witness_fidelity, witness_settings, write_records_csv, BootstrapConfig,
    CoincidenceRecord, CountModel, DensityMatrix, EraserCurve, Ket2, SubspaceLabel,
    TwoPartyProjector, TwoPhotonState, WitnessEstimate,
};
pub use optics::{
    beamsplitter, compose, mirror, phase_plate, slm_mixer, vortex_plate, ModeRelabel, ModeUnitary,
};
pub use spectral::{
    coincidence_prob_entangled, coincidence_prob_gauss, coincidence_prob_schmidt,
    coincidence_prob_separable, coincidence_prob_sinc, hom_scan, linspace, schmidt_decompose,
    visibility, HomScan, HomSource, InterferenceKind, JointSpectralAmplitude, Quadrature,
    SchmidtDecomposition, SpectralModel, Visibility,
};
pub use tomography::{
    fidelity, linear_inversion, linear_inversion_weighted, project_to_physical, reconstruct,
    tomo_pipeline, tomo_pipeline_with, PipelineConfig, TomographyReport, TomographySet, Weighting,
};
