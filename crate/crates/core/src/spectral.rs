//! Temporal-spectral distinguishability and HOM coincidence probabilities.
//!
//! Frequencies are angular (rad/s) and delays in seconds. The delay is
//! applied to the path-B photon as `b†(ω) -> b†(ω) e^{-iωτ}`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::cos_over_square_tail;
use crate::C64;

/// Tolerance on `int |φ|^2 dω = 1` for single-photon spectra.
pub const MODEL_NORM_TOLERANCE: f64 = 1e-8;
/// Tolerance on `sum |f|^2 dω^2 = 1` for joint spectra.
pub const JSA_NORM_TOLERANCE: f64 = 1e-6;
/// Largest imaginary part tolerated in a probability before it is dropped.
pub const IMAGINARY_TOLERANCE: f64 = 1e-9;

/// Single-photon spectral amplitude `φ(ω)`.
#[derive(Clone, Debug, PartialEq)]
pub enum SpectralModel {
    /// `π^{-1/4} σ^{-1/2} exp(-(ω-mean)^2 / 2σ^2)`.
    Gaussian { sigma: f64, mean: f64 },
    /// `sqrt(a/π) sin(aω)/(aω)`: a flat-top wavepacket of duration `2a`.
    Sinc { a: f64 },
    /// Sampled amplitudes on increasing frequencies, zero outside, linearly
    /// interpolated between samples.
    Grid {
        omega: Vec<f64>,
        amplitude: Vec<C64>,
    },
}

impl SpectralModel {
    pub fn gaussian(sigma: f64, mean: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::NonPositive {
                what: "spectral width sigma",
                value: sigma,
            });
        }
        Ok(SpectralModel::Gaussian { sigma, mean })
    }

    pub fn sinc(a: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::NonPositive {
                what: "sinc half-duration A",
                value: a,
            });
        }
        Ok(SpectralModel::Sinc { a })
    }

    /// Checks the grid shape only; see [`SpectralModel::normalized`].
    pub fn grid(omega: Vec<f64>, amplitude: Vec<C64>) -> Result<Self> {
        if omega.len() != amplitude.len() {
            return Err(Error::InvalidGrid(format!(
                "{} frequencies but {} amplitudes",
                omega.len(),
                amplitude.len()
            )));
        }
        if omega.len() < 2 {
            return Err(Error::InvalidGrid("need at least two samples".into()));
        }
        if omega.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid(
                "frequencies must be strictly increasing".into(),
            ));
        }
        Ok(SpectralModel::Grid { omega, amplitude })
    }

    /// Rescales a grid model to unit norm; closed forms are returned as is.
    pub fn normalized(self) -> Result<Self> {
        match self {
            SpectralModel::Grid { omega, amplitude } => {
                let norm = trapezoid_norm(&omega, &amplitude).sqrt();
                if norm == 0.0 {
                    return Err(Error::ZeroNorm);
                }
                let amplitude = amplitude.into_iter().map(|a| a / norm).collect();
                Ok(SpectralModel::Grid { omega, amplitude })
            }
            other => Ok(other),
        }
    }

    pub fn amplitude(&self, w: f64) -> C64 {
        match self {
            SpectralModel::Gaussian { sigma, mean } => {
                let z = (w - mean) / sigma;
                C64::new(
                    (-0.5 * z * z).exp() / (std::f64::consts::PI.powf(0.25) * sigma.sqrt()),
                    0.0,
                )
            }
            SpectralModel::Sinc { a } => {
                let x = a * w;
                let s = if x.abs() < 1e-8 {
                    1.0 - x * x / 6.0
                } else {
                    x.sin() / x
                };
                C64::new((a / std::f64::consts::PI).sqrt() * s, 0.0)
            }
            SpectralModel::Grid { omega, amplitude } => interpolate(omega, amplitude, w),
        }
    }

    /// `int |φ|^2 dω`: exactly 1 for closed forms, trapezoid for grids.
    pub fn norm_squared(&self) -> f64 {
        match self {
            SpectralModel::Grid { omega, amplitude } => trapezoid_norm(omega, amplitude),
            _ => 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            SpectralModel::Gaussian { sigma, .. } if !(sigma > 0.0) => Err(Error::NonPositive {
                what: "spectral width sigma",
                value: sigma,
            }),
            SpectralModel::Sinc { a } if !(a > 0.0) => Err(Error::NonPositive {
                what: "sinc half-duration A",
                value: a,
            }),
            _ => {
                let norm_sq = self.norm_squared();
                if !((norm_sq - 1.0).abs() <= MODEL_NORM_TOLERANCE) {
                    return Err(Error::Unnormalized {
                        what: "spectral model",
                        norm_sq,
                    });
                }
                Ok(())
            }
        }
    }

    fn window(&self, q: &Quadrature) -> (f64, f64) {
        match self {
            SpectralModel::Gaussian { sigma, mean } => (
                mean - q.gaussian_half_width * sigma,
                mean + q.gaussian_half_width * sigma,
            ),
            SpectralModel::Sinc { a } => (-q.sinc_half_width / a, q.sinc_half_width / a),
            SpectralModel::Grid { omega, .. } => (omega[0], omega[omega.len() - 1]),
        }
    }
}

fn interpolate(omega: &[f64], amplitude: &[C64], w: f64) -> C64 {
    if w < omega[0] || w > omega[omega.len() - 1] {
        return C64::new(0.0, 0.0);
    }
    let i = omega.partition_point(|&x| x <= w).clamp(1, omega.len() - 1);
    let (x0, x1) = (omega[i - 1], omega[i]);
    let t = (w - x0) / (x1 - x0);
    amplitude[i - 1] * (1.0 - t) + amplitude[i] * t
}

fn trapezoid_norm(omega: &[f64], amplitude: &[C64]) -> f64 {
    omega
        .windows(2)
        .zip(amplitude.windows(2))
        .map(|(w, a)| 0.5 * (w[1] - w[0]) * (a[0].norm_sqr() + a[1].norm_sqr()))
        .sum()
}

/// Composite-trapezoid settings for the single-photon overlap integrals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    /// Nodes per window when a Gaussian bounds the integrand.
    pub points: usize,
    /// Gaussian window half-width in units of `sigma`.
    pub gaussian_half_width: f64,
    /// Sinc window half-width in units of `1/A`; the `1/ω^2` tail beyond it
    /// is added analytically.
    pub sinc_half_width: f64,
    /// Nodes per window for sinc-sinc integrands.
    pub sinc_points: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            points: 1024,
            gaussian_half_width: 8.0,
            sinc_half_width: 400.0,
            sinc_points: 16384,
        }
    }
}

/// Nodes and trapezoid weights.
fn trapezoid_nodes(omega: impl Iterator<Item = f64>) -> Vec<(f64, f64)> {
    let pts: Vec<f64> = omega.collect();
    let n = pts.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { pts[i] - pts[i - 1] } else { 0.0 };
            let right = if i + 1 < n { pts[i + 1] - pts[i] } else { 0.0 };
            (pts[i], 0.5 * (left + right))
        })
        .collect()
}

/// Evenly spaced samples including both ends.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// `(∫ φ*(ω) χ(ω) e^{-iωτ} dω, ∫ χ*(ω) φ(ω) e^{iωτ} dω)`.
fn overlap_pair(phi: &SpectralModel, chi: &SpectralModel, tau: f64, q: &Quadrature) -> (C64, C64) {
    let nodes = match (phi, chi) {
        (SpectralModel::Grid { omega, .. }, _) | (_, SpectralModel::Grid { omega, .. }) => {
            let (lo, hi) = if let SpectralModel::Grid { .. } = phi {
                chi.window(q)
            } else {
                phi.window(q)
            };
            trapezoid_nodes(omega.iter().copied().filter(|&w| w >= lo && w <= hi))
        }
        _ => {
            let (a_lo, a_hi) = phi.window(q);
            let (b_lo, b_hi) = chi.window(q);
            let (lo, hi) = (a_lo.max(b_lo), a_hi.min(b_hi));
            if hi <= lo {
                return (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            }
            let both_sinc = matches!(
                (phi, chi),
                (SpectralModel::Sinc { .. }, SpectralModel::Sinc { .. })
            );
            let n = if both_sinc { q.sinc_points } else { q.points };
            trapezoid_nodes(linspace(lo, hi, n).into_iter())
        }
    };

    let mut first = C64::new(0.0, 0.0);
    let mut second = C64::new(0.0, 0.0);
    for &(w, weight) in &nodes {
        let (p, c) = (phi.amplitude(w), chi.amplitude(w));
        let phase = C64::from_polar(1.0, -w * tau);
        first += p.conj() * c * phase * weight;
        second += c.conj() * p * phase.conj() * weight;
    }

    if let (SpectralModel::Sinc { a: a1 }, SpectralModel::Sinc { a: a2 }) = (phi, chi) {
        // sin(a1ω) sin(a2ω) cos(ωτ) / (π sqrt(a1 a2) ω^2) over |ω| > W
        let w = q.sinc_half_width / a1.min(*a2);
        let (d, s) = (a1 - a2, a1 + a2);
        let tail = (cos_over_square_tail(d + tau, w) + cos_over_square_tail(d - tau, w)
            - cos_over_square_tail(s + tau, w)
            - cos_over_square_tail(s - tau, w))
            / (2.0 * std::f64::consts::PI * (a1 * a2).sqrt());
        first += tail;
        second += tail;
    }
    (first, second)
}

/// General separable-photon coincidence probability
/// `1/2 - 1/2 ∫φ*χ e^{-iωτ} ∫χ*φ e^{iωτ}`, by trapezoidal quadrature.
pub fn coincidence_prob_separable(
    phi: &SpectralModel,
    chi: &SpectralModel,
    tau: f64,
) -> Result<f64> {
    coincidence_prob_separable_with(phi, chi, tau, &Quadrature::default())
}

pub fn coincidence_prob_separable_with(
    phi: &SpectralModel,
    chi: &SpectralModel,
    tau: f64,
    q: &Quadrature,
) -> Result<f64> {
    phi.validate()?;
    chi.validate()?;
    if q.points < 2 || q.sinc_points < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: q.points.min(q.sinc_points),
        });
    }
    let (first, second) = overlap_pair(phi, chi, tau, q);
    Ok(0.5 - 0.5 * (first * second).re)
}

/// Closed form for two Gaussian spectra:
/// `1/2 - σaσb/(σa²+σb²) exp(-(σa²σb²τ² + (ωa-ωb)²)/(σa²+σb²))`.
pub fn coincidence_prob_gauss(
    sigma_a: f64,
    sigma_b: f64,
    mean_a: f64,
    mean_b: f64,
    tau: f64,
) -> Result<f64> {
    for s in [sigma_a, sigma_b] {
        if !(s > 0.0) {
            return Err(Error::NonPositive {
                what: "spectral width sigma",
                value: s,
            });
        }
    }
    let (va, vb) = (sigma_a * sigma_a, sigma_b * sigma_b);
    let dm = mean_a - mean_b;
    Ok(0.5 - sigma_a * sigma_b / (va + vb) * (-(va * vb * tau * tau + dm * dm) / (va + vb)).exp())
}

/// Closed form for two identical sinc spectra:
/// `1/2 - (|τ| - |τ/2 - A| - |τ/2 + A|)^2 / (8A^2)`.
pub fn coincidence_prob_sinc(a: f64, tau: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::NonPositive {
            what: "sinc half-duration A",
            value: a,
        });
    }
    let k = tau.abs() - (tau / 2.0 - a).abs() - (tau / 2.0 + a).abs();
    Ok(0.5 - k * k / (8.0 * a * a))
}

/// Joint spectral amplitude `f(ω1, ω2)` sampled on a square uniform grid;
/// `values[(i, j)] = f(omega[i], omega[j])`, photon 1 in path A.
#[derive(Clone, Debug, PartialEq)]
pub struct JointSpectralAmplitude {
    omega: Vec<f64>,
    values: DMatrix<C64>,
}

impl JointSpectralAmplitude {
    pub fn new(omega: Vec<f64>, values: DMatrix<C64>) -> Result<Self> {
        let n = omega.len();
        if n < 2 {
            return Err(Error::InvalidGrid("need at least two samples".into()));
        }
        if values.nrows() != n || values.ncols() != n {
            return Err(Error::InvalidGrid(format!(
                "values are {}x{} but the axis has {n} samples",
                values.nrows(),
                values.ncols()
            )));
        }
        let h = omega[1] - omega[0];
        if !(h > 0.0)
            || omega
                .windows(2)
                .any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0))
        {
            return Err(Error::InvalidGrid(
                "axis must be uniformly spaced and increasing".into(),
            ));
        }
        if values
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::NonFinite("joint spectral amplitude"));
        }
        Ok(JointSpectralAmplitude { omega, values })
    }

    pub fn from_fn(omega: Vec<f64>, f: impl Fn(f64, f64) -> C64) -> Result<Self> {
        let n = omega.len();
        let values = DMatrix::from_fn(n, n, |i, j| f(omega[i], omega[j]));
        Self::new(omega, values)
    }

    /// `f(ω1, ω2) = φ(ω1) χ(ω2)`.
    pub fn separable(omega: Vec<f64>, phi: &SpectralModel, chi: &SpectralModel) -> Result<Self> {
        Self::from_fn(omega, |w1, w2| phi.amplitude(w1) * chi.amplitude(w2))
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm_squared().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        if !norm.is_finite() {
            return Err(Error::NonFinite("joint spectral amplitude norm"));
        }
        self.values /= C64::new(norm, 0.0);
        Ok(self)
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn values(&self) -> &DMatrix<C64> {
        &self.values
    }

    pub fn spacing(&self) -> f64 {
        self.omega[1] - self.omega[0]
    }

    /// `sum |f|^2 dω^2`.
    pub fn norm_squared(&self) -> f64 {
        let h = self.spacing();
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * h * h
    }

    fn validate(&self) -> Result<()> {
        let norm_sq = self.norm_squared();
        if !((norm_sq - 1.0).abs() <= JSA_NORM_TOLERANCE) {
            return Err(Error::Unnormalized {
                what: "joint spectral amplitude",
                norm_sq,
            });
        }
        Ok(())
    }
}

fn real_part(z: C64) -> Result<f64> {
    if z.im.abs() > IMAGINARY_TOLERANCE {
        return Err(Error::ImaginaryResidue(z.im));
    }
    Ok(z.re)
}

/// `1/2 - 1/2 ∫∫ f*(ω1,ω2) f(ω2,ω1) e^{i(ω2-ω1)τ}` as a double sum.
pub fn coincidence_prob_entangled(jsa: &JointSpectralAmplitude, tau: f64) -> Result<f64> {
    jsa.validate()?;
    let h = jsa.spacing();
    let n = jsa.omega.len();
    let phase: Vec<C64> = jsa
        .omega
        .iter()
        .map(|&w| C64::from_polar(1.0, w * tau))
        .collect();
    let f = &jsa.values;
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            acc += f[(i, j)].conj() * f[(j, i)] * phase[j] * phase[i].conj();
        }
    }
    Ok(0.5 - 0.5 * real_part(acc * h * h)?)
}

/// `f(ω1, ω2) = sum_k u_k φ_k(ω1) ϕ_k(ω2)` with orthonormal mode families.
#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtDecomposition {
    /// Non-negative, descending, `sum u_k^2 = 1` after truncation.
    pub coefficients: Vec<f64>,
    /// `φ_k` (photon in path A), as grid models on the JSA axis.
    pub signal_modes: Vec<SpectralModel>,
    /// `ϕ_k` (photon in path B).
    pub idler_modes: Vec<SpectralModel>,
    /// `sum u_k^2` discarded by the rank cutoff, before rescaling.
    pub truncation_weight: f64,
    omega: Vec<f64>,
}

fn grid_amplitudes(m: &SpectralModel) -> &[C64] {
    match m {
        SpectralModel::Grid { amplitude, .. } => amplitude,
        _ => unreachable!("Schmidt modes are always grid models"),
    }
}

impl SchmidtDecomposition {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    /// Effective number of modes `K = 1 / sum u_k^4`.
    pub fn schmidt_number(&self) -> f64 {
        1.0 / self.coefficients.iter().map(|u| u.powi(4)).sum::<f64>()
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// Resamples `sum_k u_k φ_k(ω1) ϕ_k(ω2)` on the original grid.
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let n = self.omega.len();
        let mut out = DMatrix::zeros(n, n);
        for (k, &u) in self.coefficients.iter().enumerate() {
            let (phi, chi) = (
                grid_amplitudes(&self.signal_modes[k]),
                grid_amplitudes(&self.idler_modes[k]),
            );
            for i in 0..n {
                for j in 0..n {
                    out[(i, j)] += phi[i] * chi[j] * u;
                }
            }
        }
        out
    }
}

/// SVD of the discretised JSA, truncated to at most `rank_cutoff` modes.
pub fn schmidt_decompose(
    jsa: &JointSpectralAmplitude,
    rank_cutoff: usize,
) -> Result<SchmidtDecomposition> {
    jsa.validate()?;
    let h = jsa.spacing();
    let scaled = jsa.values.map(|z| z * h);
    let svd = scaled.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });

    let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    let keep: Vec<usize> = order
        .into_iter()
        .take(rank_cutoff.max(1))
        .filter(|&k| svd.singular_values[k] > 0.0)
        .collect();
    let kept: f64 = keep.iter().map(|&k| svd.singular_values[k].powi(2)).sum();
    let rescale = (kept / total).sqrt();

    let root_h = h.sqrt();
    let mut coefficients = Vec::with_capacity(keep.len());
    let mut signal_modes = Vec::with_capacity(keep.len());
    let mut idler_modes = Vec::with_capacity(keep.len());
    for &k in &keep {
        coefficients.push(svd.singular_values[k] / total.sqrt() / rescale);
        let phi = u.column(k).iter().map(|z| z / root_h).collect();
        let chi = v_t.row(k).iter().map(|z| z / root_h).collect();
        signal_modes.push(SpectralModel::Grid {
            omega: jsa.omega.clone(),
            amplitude: phi,
        });
        idler_modes.push(SpectralModel::Grid {
            omega: jsa.omega.clone(),
            amplitude: chi,
        });
    }
    Ok(SchmidtDecomposition {
        coefficients,
        signal_modes,
        idler_modes,
        truncation_weight: (total - kept) / total,
        omega: jsa.omega.clone(),
    })
}

/// `1/2 - 1/2 sum_{k,k'} u_k u_k' ∫φ_k* ϕ_k' e^{-iωτ} ∫ϕ_k* φ_k' e^{iωτ}`
/// using the same rectangle sums as [`coincidence_prob_entangled`].
pub fn coincidence_prob_schmidt(s: &SchmidtDecomposition, tau: f64) -> Result<f64> {
    let h = s.omega[1] - s.omega[0];
    let phase: Vec<C64> = s
        .omega
        .iter()
        .map(|&w| C64::from_polar(1.0, -w * tau))
        .collect();
    let r = s.rank();
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..r {
        let (phi_k, chi_k) = (
            grid_amplitudes(&s.signal_modes[k]),
            grid_amplitudes(&s.idler_modes[k]),
        );
        for kp in 0..r {
            let (phi_kp, chi_kp) = (
                grid_amplitudes(&s.signal_modes[kp]),
                grid_amplitudes(&s.idler_modes[kp]),
            );
            let mut x = C64::new(0.0, 0.0);
            let mut y = C64::new(0.0, 0.0);
            for i in 0..s.omega.len() {
                x += phi_k[i].conj() * chi_kp[i] * phase[i];
                y += chi_k[i].conj() * phi_kp[i] * phase[i].conj();
            }
            acc += x * y * (s.coefficients[k] * s.coefficients[kp] * h * h);
        }
    }
    Ok(0.5 - 0.5 * real_part(acc)?)
}

/// Spectral configuration for a delay scan.
#[derive(Clone, Debug, PartialEq)]
pub enum HomSource {
    /// Uncorrelated photons. `indistinguishability` scales the two-photon
    /// overlap, e.g. the mode overlap `eta` of an imperfect phase plate.
    Separable {
        photon_a: SpectralModel,
        photon_b: SpectralModel,
        indistinguishability: f64,
    },
    Entangled(JointSpectralAmplitude),
}

impl HomSource {
    pub fn separable(photon_a: SpectralModel, photon_b: SpectralModel) -> Self {
        HomSource::Separable {
            photon_a,
            photon_b,
            indistinguishability: 1.0,
        }
    }

    pub fn coincidence_probability(&self, tau: f64, q: &Quadrature) -> Result<f64> {
        match self {
            HomSource::Separable {
                photon_a,
                photon_b,
                indistinguishability,
            } => {
                if !(0.0..=1.0).contains(indistinguishability) {
                    return Err(Error::OutOfUnitInterval {
                        what: "indistinguishability",
                        value: *indistinguishability,
                    });
                }
                let p = match (photon_a, photon_b) {
                    (
                        SpectralModel::Gaussian {
                            sigma: sa,
                            mean: ma,
                        },
                        SpectralModel::Gaussian {
                            sigma: sb,
                            mean: mb,
                        },
                    ) => coincidence_prob_gauss(*sa, *sb, *ma, *mb, tau)?,
                    (SpectralModel::Sinc { a }, SpectralModel::Sinc { a: b }) if a == b => {
                        coincidence_prob_sinc(*a, tau)?
                    }
                    _ => coincidence_prob_separable_with(photon_a, photon_b, tau, q)?,
                };
                // p = 1/2 - |I|^2 / 2, and only the overlap |I|^2 is scaled
                Ok(0.5 - indistinguishability * (0.5 - p))
            }
            HomSource::Entangled(jsa) => coincidence_prob_entangled(jsa, tau),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InterferenceKind {
    Dip,
    Bump,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Visibility {
    pub kind: InterferenceKind,
    pub value: f64,
    pub baseline: f64,
    pub extremum: f64,
}

/// Baseline-relative visibility of a sampled curve.
///
/// The baseline is the mean of the outermost 10% of samples (half from each
/// end, at least one per end); the extremum is the sample farthest from it.
/// Dips give `(baseline - min)/baseline`, bumps `(max - baseline)/baseline`.
pub fn visibility(values: &[f64]) -> Result<Visibility> {
    let n = values.len();
    if n < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: n });
    }
    let per_end = ((n as f64 * 0.05).round() as usize).max(1);
    let outer: Vec<f64> = values[..per_end]
        .iter()
        .chain(&values[n - per_end..])
        .copied()
        .collect();
    let baseline = outer.iter().sum::<f64>() / outer.len() as f64;
    let extremum = values
        .iter()
        .copied()
        .max_by(|a, b| (a - baseline).abs().total_cmp(&(b - baseline).abs()))
        .expect("non-empty");
    if baseline <= 0.0 {
        return Err(Error::NonPositive {
            what: "visibility baseline",
            value: baseline,
        });
    }
    let (kind, value) = if extremum <= baseline {
        (InterferenceKind::Dip, (baseline - extremum) / baseline)
    } else {
        (InterferenceKind::Bump, (extremum - baseline) / baseline)
    };
    Ok(Visibility {
        kind,
        value,
        baseline,
        extremum,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomScan {
    pub taus: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub visibility: Visibility,
}

/// Samples the coincidence probability on `n_points` delays in
/// `[tau_min, tau_max]`. Points are evaluated in parallel; output order
/// follows the delay grid.
pub fn hom_scan(
    source: &HomSource,
    tau_min: f64,
    tau_max: f64,
    n_points: usize,
    q: &Quadrature,
) -> Result<HomScan> {
    if n_points < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: n_points,
        });
    }
    if !(tau_max > tau_min) {
        return Err(Error::EmptyRange);
    }
    let taus = linspace(tau_min, tau_max, n_points);
    let probabilities = taus
        .par_iter()
        .map(|&t| source.coincidence_probability(t, q))
        .collect::<Result<Vec<f64>>>()?;
    if probabilities.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("coincidence probability"));
    }
    let visibility = visibility(&probabilities)?;
    Ok(HomScan {
        taus,
        probabilities,
        visibility,
    })
}
