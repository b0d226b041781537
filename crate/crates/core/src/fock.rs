//! Bosonic creation-operator algebra over labelled single-photon modes.
//!
//! A [`PhotonState`] is a superposition of occupation-number basis states.
//! Amplitudes are stored against the *normalised* Fock states, so
//! `(a†)^n |0>` contributes a factor `sqrt(n!)` when a product of creation
//! operators is converted into a term.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Terms whose merged amplitude falls below this magnitude are dropped.
pub const MERGE_THRESHOLD: f64 = 1e-14;

/// Tolerance on `sum |amplitude|^2 = 1` for states flagged as normalised.
pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Path {
    A,
    B,
}

impl Path {
    pub fn other(self) -> Path {
        match self {
            Path::A => Path::B,
            Path::B => Path::A,
        }
    }
}

/// How a mode's integer label is interpreted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BasisTag {
    /// OAM index `l`, any sign.
    Azimuthal,
    /// Radial index `p >= 0`.
    Radial,
    /// `0 = H`, `1 = V`.
    Polarization,
    Generic,
}

/// A single-photon mode: path, transverse label and an auxiliary bin.
///
/// The bin carries degrees of freedom that detectors do not resolve
/// (frequency bins, or the sink mode of an imperfect phase plate). Two
/// indices name the same mode iff every field matches. The derived ordering
/// (path, basis, label, bin) is the canonical order used for term merging.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    path: Path,
    basis: BasisTag,
    label: i32,
    bin: u32,
}

impl ModeIndex {
    /// Bin reserved for light scattered out of the ideal mode by a plate.
    pub const JUNK_BIN: u32 = u32::MAX;

    pub fn new(path: Path, basis: BasisTag, label: i32) -> Result<Self> {
        if basis == BasisTag::Radial && label < 0 {
            return Err(Error::NegativeRadialLabel(label));
        }
        Ok(ModeIndex {
            path,
            basis,
            label,
            bin: 0,
        })
    }

    pub fn azimuthal(path: Path, l: i32) -> Self {
        ModeIndex {
            path,
            basis: BasisTag::Azimuthal,
            label: l,
            bin: 0,
        }
    }

    pub fn radial(path: Path, p: u32) -> Self {
        ModeIndex {
            path,
            basis: BasisTag::Radial,
            label: p as i32,
            bin: 0,
        }
    }

    pub fn polarization(path: Path, vertical: bool) -> Self {
        ModeIndex {
            path,
            basis: BasisTag::Polarization,
            label: vertical as i32,
            bin: 0,
        }
    }

    pub fn with_bin(self, bin: u32) -> Self {
        ModeIndex { bin, ..self }
    }

    pub fn with_path(self, path: Path) -> Self {
        ModeIndex { path, ..self }
    }

    /// Same path, basis and bin with a new label.
    pub fn with_label(self, label: i32) -> Result<Self> {
        if self.basis == BasisTag::Radial && label < 0 {
            return Err(Error::NegativeRadialLabel(label));
        }
        Ok(ModeIndex { label, ..self })
    }

    pub fn path(&self) -> Path {
        self.path
    }

    pub fn basis(&self) -> BasisTag {
        self.basis
    }

    pub fn label(&self) -> i32 {
        self.label
    }

    pub fn bin(&self) -> u32 {
        self.bin
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = match self.path {
            Path::A => "A",
            Path::B => "B",
        };
        match self.basis {
            BasisTag::Azimuthal => write!(f, "{path}[l={}]", self.label)?,
            BasisTag::Radial => write!(f, "{path}[p={}]", self.label)?,
            BasisTag::Polarization => {
                write!(f, "{path}[{}]", if self.label == 0 { "H" } else { "V" })?
            }
            BasisTag::Generic => write!(f, "{path}[{}]", self.label)?,
        }
        match self.bin {
            0 => Ok(()),
            Self::JUNK_BIN => write!(f, "#junk"),
            b => write!(f, "#{b}"),
        }
    }
}

/// Occupation numbers of a Fock basis state, sorted by mode, zeros omitted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Occupation(Vec<(ModeIndex, u32)>);

impl Occupation {
    pub fn new<I: IntoIterator<Item = (ModeIndex, u32)>>(counts: I) -> Self {
        let mut map = BTreeMap::new();
        for (mode, n) in counts {
            *map.entry(mode).or_insert(0) += n;
        }
        Occupation(map.into_iter().filter(|&(_, n)| n > 0).collect())
    }

    /// One photon per listed mode; repeated modes accumulate.
    pub fn from_modes<I: IntoIterator<Item = ModeIndex>>(modes: I) -> Self {
        Self::new(modes.into_iter().map(|m| (m, 1)))
    }

    pub fn vacuum() -> Self {
        Occupation(Vec::new())
    }

    pub fn iter(&self) -> impl Iterator<Item = &(ModeIndex, u32)> {
        self.0.iter()
    }

    pub fn count(&self, mode: &ModeIndex) -> u32 {
        self.0
            .binary_search_by(|(m, _)| m.cmp(mode))
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|&(_, n)| n).sum()
    }

    pub fn photons_in(&self, path: Path) -> u32 {
        self.0
            .iter()
            .filter(|(m, _)| m.path == path)
            .map(|&(_, n)| n)
            .sum()
    }

    /// `prod_k n_k!`
    pub fn factorial_product(&self) -> f64 {
        self.0.iter().map(|&(_, n)| factorial(n)).product()
    }
}

impl fmt::Display for Occupation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "|vac>");
        }
        write!(f, "|")?;
        for (i, (mode, n)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{n}:{mode}")?;
        }
        write!(f, ">")
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

#[derive(Clone, Debug, PartialEq)]
pub struct OccupationTerm {
    pub occupation: Occupation,
    pub amplitude: C64,
}

/// Superposition of Fock basis states with distinct occupations.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PhotonState {
    terms: Vec<OccupationTerm>,
    normalized: bool,
}

impl PhotonState {
    /// Builds a state, merging repeated occupations. The result is not
    /// flagged as normalised; call [`PhotonState::normalize`] for that.
    pub fn from_terms<I: IntoIterator<Item = (Occupation, C64)>>(terms: I) -> Self {
        let mut map: BTreeMap<Occupation, C64> = BTreeMap::new();
        for (occ, amp) in terms {
            *map.entry(occ).or_insert(C64::new(0.0, 0.0)) += amp;
        }
        Self::from_map(map, false)
    }

    fn from_map(map: BTreeMap<Occupation, C64>, normalized: bool) -> Self {
        let terms = map
            .into_iter()
            .filter(|(_, amp)| amp.norm() >= MERGE_THRESHOLD)
            .map(|(occupation, amplitude)| OccupationTerm {
                occupation,
                amplitude,
            })
            .collect();
        PhotonState { terms, normalized }
    }

    pub fn vacuum() -> Self {
        PhotonState {
            terms: vec![OccupationTerm {
                occupation: Occupation::vacuum(),
                amplitude: C64::new(1.0, 0.0),
            }],
            normalized: true,
        }
    }

    pub fn terms(&self) -> &[OccupationTerm] {
        &self.terms
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn norm_squared(&self) -> f64 {
        self.terms.iter().map(|t| t.amplitude.norm_sqr()).sum()
    }

    pub fn normalize(self) -> Result<Self> {
        let norm = self.norm_squared().sqrt();
        if norm < MERGE_THRESHOLD {
            return Err(Error::ZeroNorm);
        }
        let terms = self
            .terms
            .into_iter()
            .map(|t| OccupationTerm {
                amplitude: t.amplitude / norm,
                ..t
            })
            .collect();
        Ok(PhotonState {
            terms,
            normalized: true,
        })
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let map = self
            .terms
            .iter()
            .map(|t| (t.occupation.clone(), t.amplitude * factor))
            .collect();
        Self::from_map(map, false)
    }

    /// Common photon number of every term, or `None` for a superposition of
    /// different photon numbers (or the empty state).
    pub fn photon_number(&self) -> Option<u32> {
        let mut totals = self.terms.iter().map(|t| t.occupation.total());
        let first = totals.next()?;
        totals.all(|n| n == first).then_some(first)
    }

    pub fn amplitude(&self, occupation: &Occupation) -> C64 {
        self.terms
            .binary_search_by(|t| t.occupation.cmp(occupation))
            .map(|i| self.terms[i].amplitude)
            .unwrap_or(C64::new(0.0, 0.0))
    }

    /// Every mode occupied in at least one term, in canonical order.
    pub fn modes(&self) -> Vec<ModeIndex> {
        let mut modes: Vec<ModeIndex> = self
            .terms
            .iter()
            .flat_map(|t| t.occupation.iter().map(|&(m, _)| m))
            .collect();
        modes.sort();
        modes.dedup();
        modes
    }

    /// Equality up to a global phase: `|<x|y>| = |x| |y|` within `tol`.
    pub fn equals_up_to_phase(&self, other: &PhotonState, tol: f64) -> bool {
        let overlap = inner_product(self, other).norm();
        let norms = (self.norm_squared() * other.norm_squared()).sqrt();
        (overlap - norms).abs() <= tol && (self.norm_squared() - other.norm_squared()).abs() <= tol
    }
}

impl fmt::Display for PhotonState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(
                f,
                "({:.6}{:+.6}i){}",
                t.amplitude.re, t.amplitude.im, t.occupation
            )?;
        }
        Ok(())
    }
}

/// A linear map on creation operators, `a†_m -> sum_k c_k a†_k`.
pub trait ModeTransform {
    fn creation_image(&self, mode: &ModeIndex) -> Result<Vec<(ModeIndex, C64)>>;
}

/// Substitutes every creation operator by its image and re-expands.
///
/// Photon number is conserved term by term. If the input was flagged as
/// normalised the output is renormalised, which only removes rounding drift
/// for norm-preserving transforms.
pub fn transform<T: ModeTransform + ?Sized>(state: &PhotonState, op: &T) -> Result<PhotonState> {
    let mut images: BTreeMap<ModeIndex, Vec<(ModeIndex, C64)>> = BTreeMap::new();
    for mode in state.modes() {
        images.insert(mode, op.creation_image(&mode)?);
    }

    let mut out: BTreeMap<Occupation, C64> = BTreeMap::new();
    for term in &state.terms {
        // Monomials are keyed by the sorted multiset of their creation operators.
        let mut partial: BTreeMap<Vec<ModeIndex>, C64> = BTreeMap::new();
        partial.insert(
            Vec::new(),
            term.amplitude / term.occupation.factorial_product().sqrt(),
        );
        for &(mode, n) in term.occupation.iter() {
            let image = &images[&mode];
            for _ in 0..n {
                let mut next: BTreeMap<Vec<ModeIndex>, C64> = BTreeMap::new();
                for (ops, coeff) in &partial {
                    for &(target, c) in image {
                        let mut key = ops.clone();
                        let pos = key.partition_point(|m| *m <= target);
                        key.insert(pos, target);
                        *next.entry(key).or_insert(C64::new(0.0, 0.0)) += coeff * c;
                    }
                }
                partial = next;
            }
        }
        for (ops, coeff) in partial {
            let occ = Occupation::from_modes(ops);
            let amp = coeff * occ.factorial_product().sqrt();
            *out.entry(occ).or_insert(C64::new(0.0, 0.0)) += amp;
        }
    }

    let result = PhotonState::from_map(out, false);
    if state.normalized {
        result.normalize()
    } else {
        Ok(result)
    }
}

/// `a†_{m1} b†_{m2} |vac>` for photons on distinct paths.
pub fn make_two_photon_input(m1: ModeIndex, m2: ModeIndex) -> Result<PhotonState> {
    if m1.path == m2.path {
        return Err(Error::PathsNotDistinct(m1.path));
    }
    Ok(PhotonState {
        terms: vec![OccupationTerm {
            occupation: Occupation::from_modes([m1, m2]),
            amplitude: C64::new(1.0, 0.0),
        }],
        normalized: true,
    })
}

/// Applies a mode unitary; every occupied mode must appear in its mode map.
pub fn apply_mode_unitary(
    state: &PhotonState,
    u: &crate::optics::ModeUnitary,
) -> Result<PhotonState> {
    transform(state, u)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PostSelected {
    pub state: PhotonState,
    /// Weight of the retained coincidence terms relative to the input norm.
    pub success_probability: f64,
}

/// Keeps the terms with exactly one photon in each path and renormalises.
/// Probability of one photon per path; zero when no such term exists.
pub fn coincidence_probability(state: &PhotonState) -> Result<f64> {
    match post_select_coincidence(state) {
        Ok(p) => Ok(p.success_probability),
        Err(Error::NoCoincidence) => Ok(0.0),
        Err(e) => Err(e),
    }
}

pub fn post_select_coincidence(state: &PhotonState) -> Result<PostSelected> {
    match state.photon_number() {
        Some(2) => {}
        found => return Err(Error::PhotonNumber { expected: 2, found }),
    }
    let total = state.norm_squared();
    let kept: BTreeMap<Occupation, C64> = state
        .terms
        .iter()
        .filter(|t| t.occupation.photons_in(Path::A) == 1 && t.occupation.photons_in(Path::B) == 1)
        .map(|t| (t.occupation.clone(), t.amplitude))
        .collect();
    let kept = PhotonState::from_map(kept, false);
    if kept.is_empty() {
        return Err(Error::NoCoincidence);
    }
    let success_probability = kept.norm_squared() / total;
    Ok(PostSelected {
        state: kept.normalize()?,
        success_probability,
    })
}

/// `<x|y>`, antilinear in `x`.
pub fn inner_product(x: &PhotonState, y: &PhotonState) -> C64 {
    let (mut i, mut j) = (0, 0);
    let mut acc = C64::new(0.0, 0.0);
    while i < x.terms.len() && j < y.terms.len() {
        match x.terms[i].occupation.cmp(&y.terms[j].occupation) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += x.terms[i].amplitude.conj() * y.terms[j].amplitude;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// Matrix permanent by Ryser's formula with Gray-code subset updates.
///
/// # Panics
/// If `m` is not square.
pub fn permanent(m: &DMatrix<C64>) -> C64 {
    assert!(m.is_square(), "permanent needs a square matrix");
    let n = m.nrows();
    if n == 0 {
        return C64::new(1.0, 0.0);
    }
    let mut row_sums = vec![C64::new(0.0, 0.0); n];
    let mut total = C64::new(0.0, 0.0);
    let mut gray = 0usize;
    for k in 1..(1usize << n) {
        let next = k ^ (k >> 1);
        let col = (gray ^ next).trailing_zeros() as usize;
        let sign = if next & (1 << col) != 0 { 1.0 } else { -1.0 };
        for (r, s) in row_sums.iter_mut().enumerate() {
            *s += m[(r, col)] * sign;
        }
        gray = next;
        let prod: C64 = row_sums.iter().product();
        if (n - next.count_ones() as usize).is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    total
}

/// Two-photon transition amplitudes `<out| U |in>` for every unordered
/// output mode pair, from permanents of 2x2 submatrices.
///
/// Keys are `(m, n)` with `m <= n` in canonical mode order. The amplitude is
/// `perm(U[out, in]) / sqrt(prod n_out! prod n_in!)`.
pub fn two_photon_lift(
    u: &crate::optics::ModeUnitary,
    input: (ModeIndex, ModeIndex),
) -> Result<BTreeMap<(ModeIndex, ModeIndex), C64>> {
    u.check_unitary()?;
    let modes = u.modes();
    let col = |m: &ModeIndex| u.position(m).ok_or(Error::UnmappedMode(*m));
    let (i, j) = (col(&input.0)?, col(&input.1)?);
    let in_factor: f64 = if i == j { 2.0 } else { 1.0 };
    let mat = u.matrix();

    let mut table = BTreeMap::new();
    for k in 0..modes.len() {
        for l in k..modes.len() {
            let sub = DMatrix::from_row_slice(
                2,
                2,
                &[mat[(k, i)], mat[(k, j)], mat[(l, i)], mat[(l, j)]],
            );
            let out_factor = if k == l { 2.0 } else { 1.0 };
            let amp = permanent(&sub) / (in_factor * out_factor).sqrt();
            let key = if modes[k] <= modes[l] {
                (modes[k], modes[l])
            } else {
                (modes[l], modes[k])
            };
            table.insert(key, amp);
        }
    }
    Ok(table)
}
