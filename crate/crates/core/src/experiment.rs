//! End-to-end state preparation: two Gaussian-mode photons, a mode-shifting
//! plate in path A, a beamsplitter, and coincidence post-selection.

use crate::error::{Error, Result};
use crate::fock::{
    apply_mode_unitary, make_two_photon_input, post_select_coincidence, ModeIndex, Path,
    PhotonState,
};
use crate::measurement::{DensityMatrix, SubspaceLabel};
use crate::optics::{beamsplitter, vortex_plate};

/// Source and optics parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Preparation {
    pub label: SubspaceLabel,
    /// Beamsplitter reflectivity.
    pub reflectivity: f64,
    /// Amplitude-squared overlap of the plate output with the target mode.
    pub eta: f64,
}

impl Preparation {
    pub fn ideal(label: SubspaceLabel) -> Self {
        Preparation {
            label,
            reflectivity: 0.5,
            eta: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PreparedState {
    /// Normalised coincidence-conditioned Fock state.
    pub post_selected: PhotonState,
    pub success_probability: f64,
    /// Post-selected state with undetected bins traced out.
    pub density: DensityMatrix,
}

/// Runs the optical chain and returns the heralded two-photon state.
pub fn prepare(p: &Preparation) -> Result<PreparedState> {
    let basis = p.label.basis;
    let mode = |path, label| ModeIndex::new(path, basis, label);
    let input = make_two_photon_input(mode(Path::A, 0)?, mode(Path::B, 0)?)?;
    let shifted = vortex_plate(Path::A, p.label.index, p.eta)?.apply(&input)?;

    let mut pairs = Vec::new();
    for label in [0, p.label.index] {
        for bin in [0, ModeIndex::JUNK_BIN] {
            pairs.push((
                mode(Path::A, label)?.with_bin(bin),
                mode(Path::B, label)?.with_bin(bin),
            ));
        }
    }
    let bs = beamsplitter(p.reflectivity, &pairs)?;
    let out = post_select_coincidence(&apply_mode_unitary(&shifted, &bs)?)?;
    if out.success_probability == 0.0 {
        return Err(Error::NoCoincidence);
    }
    let density = DensityMatrix::from_photon_state(&out.state, p.label)?;
    Ok(PreparedState {
        post_selected: out.state,
        success_probability: out.success_probability,
        density,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frob(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
        (a.matrix() - b.matrix())
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn ideal_chain_gives_chi_with_half_success() {
        for label in [SubspaceLabel::azimuthal(3), SubspaceLabel::radial(1)] {
            let s = prepare(&Preparation::ideal(label)).unwrap();
            assert!((s.success_probability - 0.5).abs() < 1e-12);
            assert!(frob(&s.density, &DensityMatrix::chi(label)) < 1e-12);
        }
    }

    #[test]
    fn imperfect_plate_mixes_in_classical_correlations() {
        let label = SubspaceLabel::azimuthal(3);
        for eta in [1.0, 0.95, 0.8, 0.0] {
            let s = prepare(&Preparation {
                eta,
                ..Preparation::ideal(label)
            })
            .unwrap();
            assert!(frob(&s.density, &DensityMatrix::crosstalk(label, eta).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn unbalanced_splitter() {
        let label = SubspaceLabel::azimuthal(2);
        let r = 0.3;
        let s = prepare(&Preparation {
            reflectivity: r,
            ..Preparation::ideal(label)
        })
        .unwrap();
        assert!((s.success_probability - (r * r + (1.0 - r) * (1.0 - r))).abs() < 1e-12);
        assert!(prepare(&Preparation {
            reflectivity: 1.2,
            ..Preparation::ideal(label)
        })
        .is_err());
    }
}
