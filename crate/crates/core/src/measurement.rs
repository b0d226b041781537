//! Projective measurements on the two-party `{|0>, |l>}` qubit.
//!
//! Two-party vectors and matrices use the basis `{|00>, |0l>, |l0>, |ll>}`
//! with index `2a + b`, where `a` is the path-A (Alice) label index and `b`
//! the path-B (Bob) one; `|l0>` means Alice holds `l` and Bob the Gaussian.

use std::collections::BTreeMap;
use std::fmt;
use std::io;

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{BasisTag, ModeIndex, Path, PhotonState};
use crate::spectral::{hom_scan, HomSource, Quadrature};
use crate::C64;

/// Tolerance on `|c0|^2 + |c1|^2 = 1`.
pub const KET_TOLERANCE: f64 = 1e-12;
/// Hermiticity, positivity and trace tolerance for density matrices.
pub const DENSITY_TOLERANCE: f64 = 1e-10;
/// Coincidence window quoted for record metadata (seconds).
pub const DEFAULT_WINDOW: f64 = 0.2e-9;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// The two-mode subspace `{|0>, |index>}` of a label family, e.g. `l=3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubspaceLabel {
    pub basis: BasisTag,
    pub index: i32,
}

impl SubspaceLabel {
    pub fn new(basis: BasisTag, index: i32) -> Result<Self> {
        if index == 0 {
            return Err(Error::IdenticalLabels(0));
        }
        if basis == BasisTag::Radial && index < 0 {
            return Err(Error::NegativeRadialLabel(index));
        }
        Ok(SubspaceLabel { basis, index })
    }

    pub fn azimuthal(l: i32) -> Self {
        Self::new(BasisTag::Azimuthal, l).expect("OAM index must be non-zero")
    }

    pub fn radial(p: u32) -> Self {
        Self::new(BasisTag::Radial, p as i32).expect("radial index must be non-zero")
    }

    /// Mode label carried by qubit value `k` (0 or 1).
    pub fn mode_label(&self, k: usize) -> i32 {
        if k == 0 {
            0
        } else {
            self.index
        }
    }

    /// Qubit value of a mode label, if it lies in the subspace.
    pub fn qubit_of(&self, label: i32) -> Option<usize> {
        if label == 0 {
            Some(0)
        } else if label == self.index {
            Some(1)
        } else {
            None
        }
    }
}

impl fmt::Display for SubspaceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.basis {
            BasisTag::Azimuthal => write!(f, "l={}", self.index),
            BasisTag::Radial => write!(f, "p={}", self.index),
            BasisTag::Polarization => write!(f, "pol"),
            BasisTag::Generic => write!(f, "g={}", self.index),
        }
    }
}

/// Normalised single-party state `c0|0> + c1|index>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKet2")]
pub struct Ket2 {
    c0: C64,
    c1: C64,
    label: SubspaceLabel,
}

#[derive(Deserialize)]
struct RawKet2 {
    c0: C64,
    c1: C64,
    label: SubspaceLabel,
}

impl TryFrom<RawKet2> for Ket2 {
    type Error = Error;
    fn try_from(raw: RawKet2) -> Result<Self> {
        Ket2::new(raw.c0, raw.c1, raw.label)
    }
}

impl Ket2 {
    pub fn new(c0: C64, c1: C64, label: SubspaceLabel) -> Result<Self> {
        let norm_sq = c0.norm_sqr() + c1.norm_sqr();
        if (norm_sq - 1.0).abs() > KET_TOLERANCE {
            return Err(Error::Unnormalized {
                what: "two-level ket",
                norm_sq,
            });
        }
        Ok(Ket2 { c0, c1, label })
    }

    /// Rescales `(c0, c1)` to unit norm.
    pub fn normalized(c0: C64, c1: C64, label: SubspaceLabel) -> Result<Self> {
        let norm = (c0.norm_sqr() + c1.norm_sqr()).sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(Ket2 {
            c0: c0 / norm,
            c1: c1 / norm,
            label,
        })
    }

    /// `|0>`, the Gaussian mode.
    pub fn gauss(label: SubspaceLabel) -> Self {
        Ket2 {
            c0: c(1.0, 0.0),
            c1: c(0.0, 0.0),
            label,
        }
    }

    /// `|l>` (or `|p>`).
    pub fn excited(label: SubspaceLabel) -> Self {
        Ket2 {
            c0: c(0.0, 0.0),
            c1: c(1.0, 0.0),
            label,
        }
    }

    pub fn plus(label: SubspaceLabel) -> Self {
        Ket2 {
            c0: c(FRAC_1_SQRT_2, 0.0),
            c1: c(FRAC_1_SQRT_2, 0.0),
            label,
        }
    }

    pub fn minus(label: SubspaceLabel) -> Self {
        Ket2 {
            c0: c(FRAC_1_SQRT_2, 0.0),
            c1: c(-FRAC_1_SQRT_2, 0.0),
            label,
        }
    }

    pub fn plus_i(label: SubspaceLabel) -> Self {
        Ket2 {
            c0: c(FRAC_1_SQRT_2, 0.0),
            c1: c(0.0, FRAC_1_SQRT_2),
            label,
        }
    }

    pub fn minus_i(label: SubspaceLabel) -> Self {
        Ket2 {
            c0: c(FRAC_1_SQRT_2, 0.0),
            c1: c(0.0, -FRAC_1_SQRT_2),
            label,
        }
    }

    pub fn c0(&self) -> C64 {
        self.c0
    }

    pub fn c1(&self) -> C64 {
        self.c1
    }

    pub fn label(&self) -> SubspaceLabel {
        self.label
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Ket2) -> C64 {
        self.c0.conj() * other.c0 + self.c1.conj() * other.c1
    }

    /// True if the two kets are the same ray.
    pub fn same_ray(&self, other: &Ket2, tol: f64) -> bool {
        self.label == other.label && (self.inner(other).norm_sqr() - 1.0).abs() < tol
    }

    /// Product vector `self ⊗ bob` in the two-party basis.
    pub fn tensor(&self, bob: &Ket2) -> Vector4<C64> {
        Vector4::new(
            self.c0 * bob.c0,
            self.c0 * bob.c1,
            self.c1 * bob.c0,
            self.c1 * bob.c1,
        )
    }
}

impl fmt::Display for Ket2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})|0> + ({})|{}>", self.c0, self.c1, self.label.index)
    }
}

/// `scale · |a><a| ⊗ |b><b|` with normalised `a`, `b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwoPartyProjector {
    pub alice: Ket2,
    pub bob: Ket2,
    /// Effective weight on the normalised rank-1 projector.
    pub scale: f64,
    /// Prefactor as quoted against unnormalised kets (equal to `scale`
    /// when the projector was built from normalised kets).
    pub prefactor: f64,
}

impl TwoPartyProjector {
    pub fn new(alice: Ket2, bob: Ket2, scale: f64) -> Result<Self> {
        if alice.label != bob.label {
            return Err(Error::MixedSubspaces(alice.label, bob.label));
        }
        if !(scale > 0.0 && scale <= 1.0 + DENSITY_TOLERANCE) {
            return Err(Error::OutOfUnitInterval {
                what: "projector scale",
                value: scale,
            });
        }
        Ok(TwoPartyProjector {
            alice,
            bob,
            scale,
            prefactor: scale,
        })
    }

    /// `prefactor · (a0|0> + a1|l>)(h.c.) ⊗ (b0|0> + b1|l>)(h.c.)` with
    /// unnormalised amplitude pairs, as in `1/4 (|0>+|l>)(<0|+<l|) ⊗ ...`.
    /// The norms are folded into the effective scale.
    pub fn from_unnormalized(
        prefactor: f64,
        alice: (C64, C64),
        bob: (C64, C64),
        label: SubspaceLabel,
    ) -> Result<Self> {
        let na = alice.0.norm_sqr() + alice.1.norm_sqr();
        let nb = bob.0.norm_sqr() + bob.1.norm_sqr();
        let a = Ket2::normalized(alice.0, alice.1, label)?;
        let b = Ket2::normalized(bob.0, bob.1, label)?;
        let mut p = Self::new(a, b, prefactor * na * nb)?;
        p.prefactor = prefactor;
        Ok(p)
    }

    /// `1/4 (|0>+|l>)(<0|+<l|) ⊗ (|0>+|l>)(<0|+<l|)`: both parties on `|+>`.
    pub fn symmetric(label: SubspaceLabel) -> Self {
        let one = c(1.0, 0.0);
        Self::from_unnormalized(0.25, (one, one), (one, one), label).expect("valid projector")
    }

    /// `1/4 (|0>+|l>)(<0|+<l|) ⊗ (|0>-|l>)(<0|-<l|)`: Alice `|+>`, Bob `|->`.
    pub fn antisymmetric(label: SubspaceLabel) -> Self {
        let one = c(1.0, 0.0);
        Self::from_unnormalized(0.25, (one, one), (one, -one), label).expect("valid projector")
    }

    /// The bump projector: identical in form to [`Self::antisymmetric`].
    pub fn bump(label: SubspaceLabel) -> Self {
        Self::antisymmetric(label)
    }

    pub fn label(&self) -> SubspaceLabel {
        self.alice.label
    }

    pub fn matrix(&self) -> Matrix4<C64> {
        let v = self.alice.tensor(&self.bob);
        v * v.adjoint() * c(self.scale, 0.0)
    }
}

/// 4x4 density matrix on one two-party subspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDensity", into = "RawDensity")]
pub struct DensityMatrix {
    matrix: Matrix4<C64>,
    label: SubspaceLabel,
}

/// JSON layout: `{"subspace": .., "real": [[..4]; 4], "imag": [[..4]; 4]}`.
#[derive(Serialize, Deserialize)]
struct RawDensity {
    subspace: SubspaceLabel,
    real: [[f64; 4]; 4],
    imag: [[f64; 4]; 4],
}

impl From<DensityMatrix> for RawDensity {
    fn from(d: DensityMatrix) -> Self {
        let mut real = [[0.0; 4]; 4];
        let mut imag = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                real[i][j] = d.matrix[(i, j)].re;
                imag[i][j] = d.matrix[(i, j)].im;
            }
        }
        RawDensity {
            subspace: d.label,
            real,
            imag,
        }
    }
}

impl TryFrom<RawDensity> for DensityMatrix {
    type Error = Error;
    fn try_from(raw: RawDensity) -> Result<Self> {
        let m = Matrix4::from_fn(|i, j| c(raw.real[i][j], raw.imag[i][j]));
        DensityMatrix::new(m, raw.subspace)
    }
}

impl DensityMatrix {
    pub fn new(matrix: Matrix4<C64>, label: SubspaceLabel) -> Result<Self> {
        let herm = (matrix - matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if herm > DENSITY_TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {herm:.3e})"
            )));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > DENSITY_TOLERANCE || trace.im.abs() > DENSITY_TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!("trace is {trace}")));
        }
        let min = min_eigenvalue(&matrix);
        if min < -DENSITY_TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(DensityMatrix { matrix, label })
    }

    pub fn from_pure(ket: &Vector4<C64>, label: SubspaceLabel) -> Result<Self> {
        let norm_sq = ket.norm_squared();
        if (norm_sq - 1.0).abs() > KET_TOLERANCE {
            return Err(Error::Unnormalized {
                what: "two-party ket",
                norm_sq,
            });
        }
        Self::new(ket * ket.adjoint(), label)
    }

    /// `(|l0> - |0l>)/sqrt(2)`.
    pub fn chi_ket() -> Vector4<C64> {
        Vector4::new(
            c(0.0, 0.0),
            c(-FRAC_1_SQRT_2, 0.0),
            c(FRAC_1_SQRT_2, 0.0),
            c(0.0, 0.0),
        )
    }

    pub fn chi(label: SubspaceLabel) -> Self {
        Self::from_pure(&Self::chi_ket(), label).expect("chi is normalised")
    }

    /// Classically correlated `1/2 (|l0><l0| + |0l><0l|)`.
    pub fn classical_mixture(label: SubspaceLabel) -> Self {
        let mut m = Matrix4::zeros();
        m[(1, 1)] = c(0.5, 0.0);
        m[(2, 2)] = c(0.5, 0.0);
        DensityMatrix { matrix: m, label }
    }

    pub fn maximally_mixed(label: SubspaceLabel) -> Self {
        DensityMatrix {
            matrix: Matrix4::identity() * c(0.25, 0.0),
            label,
        }
    }

    /// `eta |chi><chi| + (1 - eta) rho_c`: the post-selected state when a
    /// fraction `1 - eta` of the shifted photon's amplitude leaks into a mode
    /// the detectors cannot tell apart from the target but which carries no
    /// coherence with it.
    pub fn crosstalk(label: SubspaceLabel, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::OutOfUnitInterval {
                what: "mode overlap eta",
                value: eta,
            });
        }
        Self::chi(label).mix(&Self::classical_mixture(label), eta)
    }

    /// `w self + (1 - w) other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<Self> {
        if self.label != other.label {
            return Err(Error::MixedSubspaces(self.label, other.label));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::OutOfUnitInterval {
                what: "mixing weight",
                value: w,
            });
        }
        Self::new(
            self.matrix * c(w, 0.0) + other.matrix * c(1.0 - w, 0.0),
            self.label,
        )
    }

    /// Traces the auxiliary bins out of a post-selected two-photon state
    /// with one photon per path.
    pub fn from_photon_state(state: &PhotonState, label: SubspaceLabel) -> Result<Self> {
        let groups = bin_groups(state, label)?;
        let mut m = Matrix4::zeros();
        for v in groups.values() {
            m += v * v.adjoint();
        }
        let trace = m.trace().re;
        if trace == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Self::new(m / c(trace, 0.0), label)
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.matrix
    }

    pub fn label(&self) -> SubspaceLabel {
        self.label
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.matrix)
    }

    pub fn purity(&self) -> f64 {
        (self.matrix * self.matrix).trace().re
    }

    /// `<a b| rho |a b>`.
    pub fn born_probability(&self, alice: &Ket2, bob: &Ket2) -> Result<f64> {
        for k in [alice, bob] {
            if k.label != self.label {
                return Err(Error::SubspaceMismatch(self.label));
            }
        }
        let v = alice.tensor(bob);
        Ok((v.adjoint() * self.matrix * v)[(0, 0)].re)
    }

    pub fn expectation(&self, proj: &TwoPartyProjector) -> Result<f64> {
        Ok(proj.scale * self.born_probability(&proj.alice, &proj.bob)?)
    }

    /// `<t| rho |t>` for a normalised two-party ket.
    pub fn overlap(&self, target: &Vector4<C64>) -> f64 {
        (target.adjoint() * self.matrix * target)[(0, 0)].re
    }
}

pub(crate) fn min_eigenvalue(m: &Matrix4<C64>) -> f64 {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    SymmetricEigen::new(h)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Splits a two-photon state into subspace vectors, one per combination
/// of undetected bins.
fn bin_groups(
    state: &PhotonState,
    label: SubspaceLabel,
) -> Result<BTreeMap<(u32, u32), Vector4<C64>>> {
    let mut groups: BTreeMap<(u32, u32), Vector4<C64>> = BTreeMap::new();
    for term in state.terms() {
        let occ = &term.occupation;
        if occ.total() != 2 || occ.photons_in(Path::A) != 1 || occ.photons_in(Path::B) != 1 {
            return Err(Error::SubspaceMismatch(label));
        }
        let find = |path: Path| -> Result<(usize, u32)> {
            let (m, _): &(ModeIndex, u32) = occ
                .iter()
                .find(|(m, _)| m.path() == path)
                .expect("one photon per path");
            if m.basis() != label.basis {
                return Err(Error::SubspaceMismatch(label));
            }
            let q = label
                .qubit_of(m.label())
                .ok_or(Error::SubspaceMismatch(label))?;
            Ok((q, m.bin()))
        };
        let (qa, ba) = find(Path::A)?;
        let (qb, bb) = find(Path::B)?;
        groups.entry((ba, bb)).or_insert_with(Vector4::zeros)[2 * qa + qb] += term.amplitude;
    }
    Ok(groups)
}

/// State argument of [`eraser_expectation`].
#[derive(Clone, Debug)]
pub enum TwoPhotonState {
    Pure(PhotonState),
    Mixed(DensityMatrix),
}

impl From<PhotonState> for TwoPhotonState {
    fn from(s: PhotonState) -> Self {
        TwoPhotonState::Pure(s)
    }
}

impl From<&PhotonState> for TwoPhotonState {
    fn from(s: &PhotonState) -> Self {
        TwoPhotonState::Pure(s.clone())
    }
}

impl From<DensityMatrix> for TwoPhotonState {
    fn from(d: DensityMatrix) -> Self {
        TwoPhotonState::Mixed(d)
    }
}

impl From<&DensityMatrix> for TwoPhotonState {
    fn from(d: &DensityMatrix) -> Self {
        TwoPhotonState::Mixed(d.clone())
    }
}

/// `<psi|P|psi>` for Fock states (summed over undetected bins) or
/// `Tr(rho P)` for density matrices.
pub fn eraser_expectation(
    state: impl Into<TwoPhotonState>,
    proj: &TwoPartyProjector,
) -> Result<f64> {
    let label = proj.label();
    match state.into() {
        TwoPhotonState::Pure(psi) => {
            let groups = bin_groups(&psi, label)?;
            let v = proj.alice.tensor(&proj.bob);
            let total: f64 = groups.values().map(|g| v.dotc(g).norm_sqr()).sum();
            Ok(proj.scale * total)
        }
        TwoPhotonState::Mixed(rho) => {
            if rho.label != label {
                return Err(Error::SubspaceMismatch(rho.label));
            }
            rho.expectation(proj)
        }
    }
}

/// One projector's expectation along a delay scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EraserCurve {
    pub taus: Vec<f64>,
    /// Two-photon coherence `1 - 2 p(τ)` of the underlying HOM curve.
    pub coherence: Vec<f64>,
    pub values: Vec<f64>,
}

/// Eraser expectation versus delay.
///
/// At delay `τ` the post-selected state is
/// `V(τ) |chi><chi| + (1 - V(τ)) rho_c` with `V = 1 - 2 p(τ)` taken from the
/// source's HOM coincidence curve, so the ideal values hold at zero delay
/// and both projector families relax to the mixed-state value as `|τ|`
/// grows.
pub fn eraser_scan(
    source: &HomSource,
    proj: &TwoPartyProjector,
    tau_min: f64,
    tau_max: f64,
    n_points: usize,
    q: &Quadrature,
) -> Result<EraserCurve> {
    let label = proj.label();
    let coherent = DensityMatrix::chi(label).expectation(proj)?;
    let incoherent = DensityMatrix::classical_mixture(label).expectation(proj)?;
    let scan = hom_scan(source, tau_min, tau_max, n_points, q)?;
    let coherence: Vec<f64> = scan.probabilities.iter().map(|p| 1.0 - 2.0 * p).collect();
    let values = coherence
        .iter()
        .map(|v| v * coherent + (1.0 - v) * incoherent)
        .collect();
    Ok(EraserCurve {
        taus: scan.taus,
        coherence,
        values,
    })
}

/// The three mutually unbiased bases `{|0>,|l>}`, `{|+>,|->}`, `{|+i>,|-i>}`.
pub fn mub_settings(label: SubspaceLabel) -> [[Ket2; 2]; 3] {
    [
        [Ket2::gauss(label), Ket2::excited(label)],
        [Ket2::plus(label), Ket2::minus(label)],
        [Ket2::plus_i(label), Ket2::minus_i(label)],
    ]
}

/// `(mub, outcome)` of a ket that is one of the six MUB states.
pub fn identify_mub_state(k: &Ket2) -> Option<(usize, usize)> {
    let mubs = mub_settings(k.label);
    (0..3)
        .flat_map(|m| (0..2).map(move |o| (m, o)))
        .find(|&(m, o)| mubs[m][o].same_ray(k, 1e-9))
}

/// The 12 same-basis settings used by the witness, grouped by MUB.
pub fn witness_settings(label: SubspaceLabel) -> Vec<(Ket2, Ket2)> {
    let mubs = mub_settings(label);
    let mut out = Vec::with_capacity(12);
    for basis in &mubs {
        for a in basis {
            for b in basis {
                out.push((*a, *b));
            }
        }
    }
    out
}

/// Coincidence counts for one product setting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceRecord {
    pub setting_alice: Ket2,
    pub setting_bob: Ket2,
    pub counts: u64,
    /// Coincidence window in seconds (metadata only).
    pub integration_window: f64,
}

/// Flat CSV layout of a [`CoincidenceRecord`]. Columns, in order:
/// `basis, index, alice_c0_re, alice_c0_im, alice_c1_re, alice_c1_im,
/// bob_c0_re, bob_c0_im, bob_c1_re, bob_c1_im, counts, window_s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceRow {
    pub basis: BasisTag,
    pub index: i32,
    pub alice_c0_re: f64,
    pub alice_c0_im: f64,
    pub alice_c1_re: f64,
    pub alice_c1_im: f64,
    pub bob_c0_re: f64,
    pub bob_c0_im: f64,
    pub bob_c1_re: f64,
    pub bob_c1_im: f64,
    pub counts: u64,
    pub window_s: f64,
}

impl From<&CoincidenceRecord> for CoincidenceRow {
    fn from(r: &CoincidenceRecord) -> Self {
        let (a, b) = (&r.setting_alice, &r.setting_bob);
        CoincidenceRow {
            basis: a.label.basis,
            index: a.label.index,
            alice_c0_re: a.c0.re,
            alice_c0_im: a.c0.im,
            alice_c1_re: a.c1.re,
            alice_c1_im: a.c1.im,
            bob_c0_re: b.c0.re,
            bob_c0_im: b.c0.im,
            bob_c1_re: b.c1.re,
            bob_c1_im: b.c1.im,
            counts: r.counts,
            window_s: r.integration_window,
        }
    }
}

impl TryFrom<CoincidenceRow> for CoincidenceRecord {
    type Error = Error;
    fn try_from(row: CoincidenceRow) -> Result<Self> {
        let label = SubspaceLabel::new(row.basis, row.index)?;
        Ok(CoincidenceRecord {
            setting_alice: Ket2::new(
                c(row.alice_c0_re, row.alice_c0_im),
                c(row.alice_c1_re, row.alice_c1_im),
                label,
            )?,
            setting_bob: Ket2::new(
                c(row.bob_c0_re, row.bob_c0_im),
                c(row.bob_c1_re, row.bob_c1_im),
                label,
            )?,
            counts: row.counts,
            integration_window: row.window_s,
        })
    }
}

/// Writes records as CSV with a header row.
pub fn write_records_csv<W: io::Write>(records: &[CoincidenceRecord], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(CoincidenceRow::from(r))
            .map_err(io::Error::other)?;
    }
    w.flush()
}

/// Reads records written by [`write_records_csv`].
pub fn read_records_csv<R: io::Read>(input: R) -> io::Result<Vec<CoincidenceRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    rdr.deserialize::<CoincidenceRow>()
        .map(|row| {
            let row = row.map_err(io::Error::other)?;
            CoincidenceRecord::try_from(row)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
        })
        .collect()
}

/// Count-simulation parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountModel {
    /// Mean coincidences per setting at unit Born probability.
    pub total_per_setting: u64,
    /// Flat accidental-coincidence mean added to every setting.
    pub background_per_setting: f64,
    pub window: f64,
}

impl CountModel {
    pub fn new(total_per_setting: u64) -> Self {
        CountModel {
            total_per_setting,
            background_per_setting: 0.0,
            window: DEFAULT_WINDOW,
        }
    }
}

/// Per-setting generator: one seed, independent stream per setting index.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn poisson(mean: f64, rng: &mut ChaCha8Rng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .expect("positive finite mean")
        .sample(rng) as u64
}

/// Poisson coincidence counts with mean `total_per_setting × P(a, b)`.
pub fn simulate_counts(
    rho: &DensityMatrix,
    settings: &[(Ket2, Ket2)],
    total_per_setting: u64,
    seed: u64,
) -> Result<Vec<CoincidenceRecord>> {
    simulate_counts_with(rho, settings, &CountModel::new(total_per_setting), seed)
}

pub fn simulate_counts_with(
    rho: &DensityMatrix,
    settings: &[(Ket2, Ket2)],
    model: &CountModel,
    seed: u64,
) -> Result<Vec<CoincidenceRecord>> {
    if model.total_per_setting == 0 {
        return Err(Error::NonPositive {
            what: "counts per setting",
            value: 0.0,
        });
    }
    if !(model.background_per_setting >= 0.0) {
        return Err(Error::NonPositive {
            what: "background rate",
            value: model.background_per_setting,
        });
    }
    settings
        .par_iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let p = rho.born_probability(a, b)?.max(0.0);
            let mean = model.total_per_setting as f64 * p + model.background_per_setting;
            let counts = poisson(mean, &mut stream_rng(seed, i as u64));
            Ok(CoincidenceRecord {
                setting_alice: *a,
                setting_bob: *b,
                counts,
                integration_window: model.window,
            })
        })
        .collect()
}

/// Bootstrap settings shared by the witness and tomography estimators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            resamples: 1000,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn with_seed(seed: u64) -> Self {
        BootstrapConfig {
            seed,
            ..Self::default()
        }
    }

    /// `stat` evaluated on Poisson resamples of `counts`. Resample `r`
    /// draws from stream `r` of the seed, so the result does not depend on
    /// thread scheduling. Resamples where `stat` is undefined are dropped.
    pub(crate) fn replicates<F>(&self, counts: &[f64], stat: F) -> Vec<f64>
    where
        F: Fn(&[f64]) -> Option<f64> + Sync,
    {
        (0..self.resamples)
            .into_par_iter()
            .filter_map(|r| {
                let mut rng = stream_rng(self.seed, r as u64);
                let resampled: Vec<f64> = counts
                    .iter()
                    .map(|&n| poisson(n, &mut rng) as f64)
                    .collect();
                stat(&resampled)
            })
            .collect()
    }

    /// Sample standard deviation of the bootstrap replicates.
    pub(crate) fn sigma<F>(&self, counts: &[f64], stat: F) -> f64
    where
        F: Fn(&[f64]) -> Option<f64> + Sync,
    {
        std_dev(&self.replicates(counts, stat))
    }
}

pub(crate) fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// Root-mean-square deviation of `values` from `center`.
pub(crate) fn rms_about(values: &[f64], center: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| (v - center).powi(2)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Witness result: `F = <chi|rho|chi>` estimate with its bootstrap error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WitnessEstimate {
    pub fidelity: f64,
    pub sigma: f64,
    /// Correlators `<ZZ>`, `<XX>`, `<YY>` for MUB 1, 2, 3.
    pub correlators: [f64; 3],
}

/// Gathers same-basis counts as `counts[mub][2 * alice + bob]`.
fn witness_counts(records: &[CoincidenceRecord]) -> Result<(SubspaceLabel, [[f64; 4]; 3])> {
    let first = records.first().ok_or(Error::NoRecords)?;
    let label = first.setting_alice.label;
    let mut counts = [[0.0; 4]; 3];
    let mut seen = [[false; 4]; 3];
    for r in records {
        for k in [&r.setting_alice, &r.setting_bob] {
            if k.label != label {
                return Err(Error::MixedSubspaces(label, k.label));
            }
        }
        let (ma, oa) = identify_mub_state(&r.setting_alice).ok_or(Error::UnknownSetting)?;
        let (mb, ob) = identify_mub_state(&r.setting_bob).ok_or(Error::UnknownSetting)?;
        if ma != mb {
            continue;
        }
        counts[ma][2 * oa + ob] += r.counts as f64;
        seen[ma][2 * oa + ob] = true;
    }
    for (m, row) in seen.iter().enumerate() {
        if let Some(k) = row.iter().position(|s| !s) {
            return Err(Error::MissingSetting {
                mub: m + 1,
                alice: k / 2,
                bob: k % 2,
            });
        }
    }
    Ok((label, counts))
}

/// Correlators from per-MUB counts, each MUB normalised separately.
/// `None` if some MUB has no counts.
fn correlators(counts: &[f64]) -> Option<[f64; 3]> {
    let mut out = [0.0; 3];
    for (m, c) in counts.chunks_exact(4).enumerate() {
        let total: f64 = c.iter().sum();
        if total <= 0.0 {
            return None;
        }
        // outcome 0 carries eigenvalue +1, outcome 1 eigenvalue -1
        out[m] = (c[0] - c[1] - c[2] + c[3]) / total;
    }
    Some(out)
}

fn fidelity_from_correlators(cor: &[f64; 3]) -> f64 {
    0.25 * (1.0 - cor[0] - cor[1] - cor[2])
}

/// Fidelity with `(|l0> - |0l>)/sqrt(2)` from the 12 same-basis settings:
/// `F = (1 - <ZZ> - <XX> - <YY>) / 4`, exact for any state confined to the
/// subspace. Cross-basis records are ignored; repeated settings are summed.
pub fn witness_fidelity(
    records: &[CoincidenceRecord],
    bootstrap: &BootstrapConfig,
) -> Result<WitnessEstimate> {
    let (_, counts) = witness_counts(records)?;
    let flat: Vec<f64> = counts.iter().flatten().copied().collect();
    let cor = correlators(&flat).ok_or(Error::EmptySettingGroup)?;
    let sigma = bootstrap.sigma(&flat, |c| {
        correlators(c).map(|k| fidelity_from_correlators(&k))
    });
    Ok(WitnessEstimate {
        fidelity: fidelity_from_correlators(&cor),
        sigma,
        correlators: cor,
    })
}

/// Records carrying exact expected counts `scale × P(a, b)` (rounded).
pub fn expected_records(
    rho: &DensityMatrix,
    settings: &[(Ket2, Ket2)],
    scale: f64,
) -> Result<Vec<CoincidenceRecord>> {
    settings
        .iter()
        .map(|(a, b)| {
            let p = rho.born_probability(a, b)?.max(0.0);
            Ok(CoincidenceRecord {
                setting_alice: *a,
                setting_bob: *b,
                counts: (scale * p).round() as u64,
                integration_window: DEFAULT_WINDOW,
            })
        })
        .collect()
}
