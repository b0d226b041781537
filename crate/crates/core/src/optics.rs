//! Linear-optical elements as mode unitaries and mode relabellings.
//!
//! Matrices act on creation operators: column `m` of a [`ModeUnitary`] is the
//! image of `a†_{modes[m]}`, i.e. `a†_m -> sum_k U[k, m] a†_{modes[k]}`.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fock::{transform, BasisTag, ModeIndex, ModeTransform, Path, PhotonState};
use crate::C64;

pub const UNITARITY_TOLERANCE: f64 = 1e-10;

/// Largest entry of `|U^H U - I|`.
pub fn unitarity_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.ncols();
    let gram = m.adjoint() * m;
    let mut worst: f64 = 0.0;
    for r in 0..n {
        for c in 0..n {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((gram[(r, c)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeUnitary {
    matrix: DMatrix<C64>,
    modes: Vec<ModeIndex>,
}

impl ModeUnitary {
    pub fn new(matrix: DMatrix<C64>, modes: Vec<ModeIndex>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() != modes.len() {
            return Err(Error::ShapeMismatch {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
                modes: modes.len(),
            });
        }
        let mut seen = BTreeSet::new();
        for m in &modes {
            if !seen.insert(*m) {
                return Err(Error::DuplicateMode(*m));
            }
        }
        let u = ModeUnitary { matrix, modes };
        u.check_unitary()?;
        Ok(u)
    }

    pub fn identity(modes: Vec<ModeIndex>) -> Result<Self> {
        let n = modes.len();
        Self::new(DMatrix::identity(n, n), modes)
    }

    pub fn check_unitary(&self) -> Result<()> {
        let deviation = unitarity_deviation(&self.matrix);
        if deviation > UNITARITY_TOLERANCE {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(())
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn position(&self, mode: &ModeIndex) -> Option<usize> {
        self.modes.iter().position(|m| m == mode)
    }

    /// `<row| U |col>` in single-photon space; modes outside the map are
    /// treated as acted on by the identity.
    pub fn element(&self, row: &ModeIndex, col: &ModeIndex) -> C64 {
        match (self.position(row), self.position(col)) {
            (Some(r), Some(c)) => self.matrix[(r, c)],
            (None, None) if row == col => C64::new(1.0, 0.0),
            _ => C64::new(0.0, 0.0),
        }
    }

    /// Matrix over `modes` (a superset of this map), identity elsewhere.
    pub fn extended_to(&self, modes: &[ModeIndex]) -> DMatrix<C64> {
        DMatrix::from_fn(modes.len(), modes.len(), |r, c| {
            self.element(&modes[r], &modes[c])
        })
    }

    /// Single-photon amplitude vector over `self.modes()` mapped by `U`.
    pub fn apply_to_amplitudes(&self, amplitudes: &DVector<C64>) -> Result<DVector<C64>> {
        if amplitudes.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: amplitudes.len(),
            });
        }
        Ok(&self.matrix * amplitudes)
    }
}

impl ModeTransform for ModeUnitary {
    fn creation_image(&self, mode: &ModeIndex) -> Result<Vec<(ModeIndex, C64)>> {
        let col = self.position(mode).ok_or(Error::UnmappedMode(*mode))?;
        Ok(self
            .modes
            .iter()
            .enumerate()
            .map(|(k, &m)| (m, self.matrix[(k, col)]))
            .filter(|(_, c)| c.norm() > 0.0)
            .collect())
    }
}

/// Beamsplitter of reflectivity `r` coupling each `(A, label)` mode with the
/// `(B, label)` mode it is paired with:
///
/// ```text
/// a† -> sqrt(1-r) a† + sqrt(r) b†
/// b† -> sqrt(r) a† - sqrt(1-r) b†
/// ```
///
/// Internal labels are never mixed. Mode order is `A0, B0, A1, B1, ...`.
pub fn beamsplitter(r: f64, pairs: &[(ModeIndex, ModeIndex)]) -> Result<ModeUnitary> {
    if !(0.0..=1.0).contains(&r) || r.is_nan() {
        return Err(Error::ReflectivityOutOfRange(r));
    }
    for &(a, b) in pairs {
        if a.path() != Path::A
            || b.path() != Path::B
            || a.basis() != b.basis()
            || a.label() != b.label()
            || a.bin() != b.bin()
        {
            return Err(Error::InvalidPairing(a, b));
        }
    }
    let t = (1.0 - r).sqrt();
    let s = r.sqrt();
    let n = 2 * pairs.len();
    let mut m = DMatrix::zeros(n, n);
    for k in 0..pairs.len() {
        let (i, j) = (2 * k, 2 * k + 1);
        m[(i, i)] = C64::new(t, 0.0);
        m[(j, i)] = C64::new(s, 0.0);
        m[(i, j)] = C64::new(s, 0.0);
        m[(j, j)] = C64::new(-t, 0.0);
    }
    let modes = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    ModeUnitary::new(m, modes)
}

/// Beamsplitter over `(A, l)` / `(B, l)` for every listed label.
pub fn beamsplitter_on_labels(r: f64, basis: BasisTag, labels: &[i32]) -> Result<ModeUnitary> {
    let pairs = labels
        .iter()
        .map(|&l| {
            Ok((
                ModeIndex::new(Path::A, basis, l)?,
                ModeIndex::new(Path::B, basis, l)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    beamsplitter(r, &pairs)
}

/// Lossless two-label mixer acting identically in both paths:
///
/// ```text
/// l1 -> cos θ l1 + i sin θ l2
/// l2 -> i sin θ l1 + cos θ l2
/// ```
///
/// Mode order is `(A,l1), (B,l1), (A,l2), (B,l2)`.
pub fn slm_mixer(theta: f64, basis: BasisTag, l1: i32, l2: i32) -> Result<ModeUnitary> {
    if l1 == l2 {
        return Err(Error::IdenticalLabels(l1));
    }
    let modes = vec![
        ModeIndex::new(Path::A, basis, l1)?,
        ModeIndex::new(Path::B, basis, l1)?,
        ModeIndex::new(Path::A, basis, l2)?,
        ModeIndex::new(Path::B, basis, l2)?,
    ];
    let c = C64::new(theta.cos(), 0.0);
    let s = C64::new(0.0, theta.sin());
    let mut m = DMatrix::zeros(4, 4);
    for p in 0..2 {
        m[(p, p)] = c;
        m[(p + 2, p + 2)] = c;
        m[(p + 2, p)] = s;
        m[(p, p + 2)] = s;
    }
    ModeUnitary::new(m, modes)
}

/// `first` followed by `second`. The mode map is the union (first's modes,
/// then any new ones from second); each factor acts as the identity on modes
/// it does not list.
pub fn compose(first: &ModeUnitary, second: &ModeUnitary) -> Result<ModeUnitary> {
    let mut modes = first.modes().to_vec();
    for m in second.modes() {
        if !modes.contains(m) {
            modes.push(*m);
        }
    }
    let product = second.extended_to(&modes) * first.extended_to(&modes);
    ModeUnitary::new(product, modes)
}

/// Haar-random `n x n` unitary from the QR decomposition of a complex
/// Gaussian matrix, with the phases of `R`'s diagonal absorbed into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<C64> {
    let z = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) / 2f64.sqrt()
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for row in 0..n {
            q[(row, k)] *= phase;
        }
    }
    q
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relabel {
    /// `l -> -l` (azimuthal only).
    Mirror,
    /// `l -> l + delta`.
    Shift(i32),
}

/// Permutation of mode labels on one path; amplitudes are untouched.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeRelabel {
    pub path: Path,
    pub kind: Relabel,
}

/// Mirror reflection in `path`: flips the OAM sign. The global `i` phase of
/// the reflection is dropped.
pub fn mirror(path: Path) -> ModeRelabel {
    ModeRelabel {
        path,
        kind: Relabel::Mirror,
    }
}

/// Ideal phase plate in `path` adding `delta` quanta of OAM. On radial
/// labels it acts as an ideal `p -> p + delta` mode converter.
pub fn phase_plate(path: Path, delta: i32) -> ModeRelabel {
    ModeRelabel {
        path,
        kind: Relabel::Shift(delta),
    }
}

impl ModeRelabel {
    pub fn map_mode(&self, mode: &ModeIndex) -> Result<ModeIndex> {
        if mode.path() != self.path {
            return Ok(*mode);
        }
        match (self.kind, mode.basis()) {
            (Relabel::Mirror, BasisTag::Azimuthal) => mode.with_label(-mode.label()),
            (Relabel::Shift(d), BasisTag::Azimuthal | BasisTag::Radial) => {
                mode.with_label(mode.label() + d)
            }
            (_, basis) => Err(Error::UnsupportedBasis(basis)),
        }
    }

    pub fn apply(&self, state: &PhotonState) -> Result<PhotonState> {
        transform(state, self)
    }
}

impl ModeTransform for ModeRelabel {
    fn creation_image(&self, mode: &ModeIndex) -> Result<Vec<(ModeIndex, C64)>> {
        Ok(vec![(self.map_mode(mode)?, C64::new(1.0, 0.0))])
    }
}

/// Phase plate whose output overlaps the target LG mode with probability
/// `eta`. The remainder goes to a sink mode carrying the same label but a
/// distinct, undetected bin ([`ModeIndex::JUNK_BIN`]), so detectors register
/// it as the target label without the ability to interfere with it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrosstalkPlate {
    pub path: Path,
    pub delta: i32,
    pub eta: f64,
}

pub fn vortex_plate(path: Path, delta: i32, eta: f64) -> Result<CrosstalkPlate> {
    if !(0.0..=1.0).contains(&eta) || eta.is_nan() {
        return Err(Error::OutOfUnitInterval {
            what: "mode overlap eta",
            value: eta,
        });
    }
    Ok(CrosstalkPlate { path, delta, eta })
}

impl CrosstalkPlate {
    pub fn apply(&self, state: &PhotonState) -> Result<PhotonState> {
        transform(state, self)
    }
}

impl ModeTransform for CrosstalkPlate {
    fn creation_image(&self, mode: &ModeIndex) -> Result<Vec<(ModeIndex, C64)>> {
        let shifted = phase_plate(self.path, self.delta).map_mode(mode)?;
        if mode.path() != self.path || self.eta == 1.0 {
            return Ok(vec![(shifted, C64::new(1.0, 0.0))]);
        }
        let mut image = vec![(shifted, C64::new(self.eta.sqrt(), 0.0))];
        if self.eta < 1.0 {
            image.push((
                shifted.with_bin(ModeIndex::JUNK_BIN),
                C64::new((1.0 - self.eta).sqrt(), 0.0),
            ));
        }
        Ok(image)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{make_two_photon_input, post_select_coincidence, Occupation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn max_abs(m: &DMatrix<C64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn az(path: Path, l: i32) -> ModeIndex {
        ModeIndex::azimuthal(path, l)
    }

    #[test]
    fn balanced_splitter_matches_block_matrix() {
        let u = beamsplitter_on_labels(0.5, BasisTag::Azimuthal, &[3, 0]).unwrap();
        let h = 0.5f64.sqrt();
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(4, 4, &[
            c(h, 0.), c(h, 0.), c(0., 0.), c(0., 0.),
            c(h, 0.), c(-h, 0.), c(0., 0.), c(0., 0.),
            c(0., 0.), c(0., 0.), c(h, 0.), c(h, 0.),
            c(0., 0.), c(0., 0.), c(h, 0.), c(-h, 0.),
        ]);
        assert!(max_abs(&(u.matrix() - expected)) < 1e-15);
        assert_eq!(
            u.modes(),
            &[
                az(Path::A, 3),
                az(Path::B, 3),
                az(Path::A, 0),
                az(Path::B, 0)
            ]
        );
    }

    #[test]
    fn splitter_limits() {
        let t = beamsplitter_on_labels(0.0, BasisTag::Azimuthal, &[0]).unwrap();
        assert_eq!(t.matrix()[(0, 0)], c(1.0, 0.0));
        assert_eq!(t.matrix()[(1, 1)], c(-1.0, 0.0));
        assert_eq!(t.matrix()[(0, 1)], c(0.0, 0.0));

        let m = beamsplitter_on_labels(1.0, BasisTag::Azimuthal, &[0]).unwrap();
        assert_eq!(m.matrix()[(0, 0)], c(0.0, 0.0));
        assert_eq!(m.matrix()[(1, 0)], c(1.0, 0.0));
        assert_eq!(m.matrix()[(0, 1)], c(1.0, 0.0));
    }

    #[test]
    fn reflectivity_out_of_range() {
        assert_eq!(
            beamsplitter_on_labels(1.2, BasisTag::Azimuthal, &[0]).unwrap_err(),
            Error::ReflectivityOutOfRange(1.2)
        );
        assert!(beamsplitter_on_labels(-0.1, BasisTag::Azimuthal, &[0]).is_err());
    }

    #[test]
    fn splitter_rejects_mismatched_pairs() {
        let err = beamsplitter(0.5, &[(az(Path::A, 1), az(Path::B, 2))]).unwrap_err();
        assert!(matches!(err, Error::InvalidPairing(..)));
    }

    #[test]
    fn slm_mixer_entries() {
        assert!(
            max_abs(
                &(slm_mixer(0.0, BasisTag::Azimuthal, 3, 0).unwrap().matrix()
                    - DMatrix::identity(4, 4))
            ) < 1e-15
        );
        let u = slm_mixer(std::f64::consts::FRAC_PI_4, BasisTag::Azimuthal, 3, 0).unwrap();
        let h = 0.5f64.sqrt();
        assert!((u.matrix()[(0, 0)] - c(h, 0.0)).norm() < 1e-15);
        assert!((u.matrix()[(2, 0)] - c(0.0, h)).norm() < 1e-15);
        assert!((u.matrix()[(1, 3)] - c(0.0, h)).norm() < 1e-15);
        assert_eq!(u.matrix()[(1, 0)], c(0.0, 0.0));
        assert!(slm_mixer(0.3, BasisTag::Azimuthal, 2, 2).is_err());
    }

    #[test]
    fn block_structure() {
        let bs = beamsplitter_on_labels(0.3, BasisTag::Azimuthal, &[3, 0]).unwrap();
        for r in 0..4 {
            for k in 0..4 {
                if bs.modes()[r].label() != bs.modes()[k].label() {
                    assert_eq!(bs.matrix()[(r, k)], c(0.0, 0.0));
                }
            }
        }
        let slm = slm_mixer(0.7, BasisTag::Azimuthal, 3, 0).unwrap();
        for r in 0..4 {
            for k in 0..4 {
                if slm.modes()[r].path() != slm.modes()[k].path() {
                    assert_eq!(slm.matrix()[(r, k)], c(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn compose_identity_and_self_inverse_splitter() {
        let bs = beamsplitter_on_labels(0.5, BasisTag::Azimuthal, &[3, 0]).unwrap();
        let id = ModeUnitary::identity(bs.modes().to_vec()).unwrap();
        assert!(max_abs(&(compose(&bs, &id).unwrap().matrix() - bs.matrix())) < 1e-15);

        let twice = compose(&bs, &bs).unwrap();
        assert!(max_abs(&(twice.matrix() - DMatrix::<C64>::identity(4, 4))) < 1e-15);
    }

    #[test]
    fn compose_extends_by_identity() {
        let bs0 = beamsplitter_on_labels(0.5, BasisTag::Azimuthal, &[0]).unwrap();
        let bs1 = beamsplitter_on_labels(0.5, BasisTag::Azimuthal, &[1]).unwrap();
        let both = compose(&bs0, &bs1).unwrap();
        assert_eq!(both.dim(), 4);
        let direct = beamsplitter_on_labels(0.5, BasisTag::Azimuthal, &[0, 1]).unwrap();
        assert!(max_abs(&(both.matrix() - direct.matrix())) < 1e-15);
    }

    #[test]
    fn haar_samples_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..6 {
            assert!(unitarity_deviation(&haar_unitary(n, &mut rng)) < 1e-12);
        }
    }

    #[test]
    fn non_unitary_rejected() {
        let m = DMatrix::from_element(2, 2, c(1.0, 0.0));
        assert!(matches!(
            ModeUnitary::new(m, vec![az(Path::A, 0), az(Path::B, 0)]),
            Err(Error::NotUnitary { .. })
        ));
        let dup = ModeUnitary::identity(vec![az(Path::A, 0), az(Path::A, 0)]);
        assert!(matches!(dup, Err(Error::DuplicateMode(_))));
    }

    #[test]
    fn mirror_and_plate_relabel() {
        let m = mirror(Path::A);
        assert_eq!(m.map_mode(&az(Path::A, 1)).unwrap(), az(Path::A, -1));
        assert_eq!(m.map_mode(&az(Path::A, 0)).unwrap(), az(Path::A, 0));
        assert_eq!(m.map_mode(&az(Path::B, 2)).unwrap(), az(Path::B, 2));
        assert_eq!(
            m.map_mode(&ModeIndex::radial(Path::A, 1)).unwrap_err(),
            Error::UnsupportedBasis(BasisTag::Radial)
        );

        assert_eq!(
            phase_plate(Path::A, 3).map_mode(&az(Path::A, 0)).unwrap(),
            az(Path::A, 3)
        );
        assert_eq!(
            phase_plate(Path::A, 0).map_mode(&az(Path::A, 5)).unwrap(),
            az(Path::A, 5)
        );
        assert_eq!(
            phase_plate(Path::A, -2)
                .map_mode(&ModeIndex::radial(Path::A, 1))
                .unwrap_err(),
            Error::NegativeRadialLabel(-1)
        );
    }

    #[test]
    fn relabel_round_trips() {
        let s = make_two_photon_input(az(Path::A, 2), az(Path::B, -1)).unwrap();
        let m = mirror(Path::A);
        assert_eq!(m.apply(&m.apply(&s).unwrap()).unwrap(), s);
        let fwd = phase_plate(Path::B, 4).apply(&s).unwrap();
        assert_eq!(phase_plate(Path::B, -4).apply(&fwd).unwrap(), s);
    }

    #[test]
    fn spiral_plate_then_splitter_gives_l00l() {
        let s = make_two_photon_input(az(Path::A, 0), az(Path::B, 0)).unwrap();
        let s = phase_plate(Path::A, 2).apply(&s).unwrap();
        let bs = beamsplitter_on_labels(0.5, BasisTag::Azimuthal, &[2, 0]).unwrap();
        let ps =
            post_select_coincidence(&crate::fock::apply_mode_unitary(&s, &bs).unwrap()).unwrap();
        let h = 0.5f64.sqrt();
        let expected = PhotonState::from_terms([
            (
                Occupation::from_modes([az(Path::A, 0), az(Path::B, 2)]),
                c(h, 0.0),
            ),
            (
                Occupation::from_modes([az(Path::A, 2), az(Path::B, 0)]),
                c(-h, 0.0),
            ),
        ]);
        // exact, including sign
        assert!((crate::fock::inner_product(&expected, &ps.state) - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn crosstalk_plate_splits_amplitude() {
        let s = make_two_photon_input(az(Path::A, 0), az(Path::B, 0)).unwrap();
        let out = vortex_plate(Path::A, 3, 0.81).unwrap().apply(&s).unwrap();
        assert_eq!(out.terms().len(), 2);
        let good = Occupation::from_modes([az(Path::A, 3), az(Path::B, 0)]);
        assert!((out.amplitude(&good) - c(0.9, 0.0)).norm() < 1e-12);
        assert!(vortex_plate(Path::A, 3, 1.5).is_err());
        let ideal = vortex_plate(Path::A, 3, 1.0).unwrap().apply(&s).unwrap();
        assert_eq!(ideal, phase_plate(Path::A, 3).apply(&s).unwrap());
    }
}
