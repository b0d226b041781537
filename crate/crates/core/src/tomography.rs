//! Projected least-squares tomography of the two-party qubit.
//!
//! The density matrix is parametrised as `rho = 1/4 sum x_ij σ_i ⊗ σ_j`
//! (σ_0 = I, Alice first). Each measured setting contributes one real
//! linear equation; the 16 coefficients are fit by SVD least squares on
//! frequencies normalised within each basis pair, then the Hermitian
//! estimate is projected onto the physical set.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, SymmetricEigen, Vector4};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measurement::{
    identify_mub_state, mub_settings, rms_about, simulate_counts_with, std_dev, BootstrapConfig,
    CoincidenceRecord, CountModel, DensityMatrix, Ket2, SubspaceLabel, WitnessEstimate,
};
use crate::C64;

/// Singular values below `RANK_TOLERANCE × s_max` count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// The six local states in order `|0>, |l>, |+>, |->, |+i>, |-i>`.
pub fn local_states(label: SubspaceLabel) -> [Ket2; 6] {
    let m = mub_settings(label);
    [m[0][0], m[0][1], m[1][0], m[1][1], m[2][0], m[2][1]]
}

/// Counts on the 36 product settings; `counts[ka][kb]` with `k = 2 mub + outcome`.
#[derive(Clone, Debug, PartialEq)]
pub struct TomographySet {
    label: SubspaceLabel,
    counts: [[Option<f64>; 6]; 6],
}

impl TomographySet {
    /// The 36 product settings, Alice-major.
    pub fn settings(label: SubspaceLabel) -> Vec<(Ket2, Ket2)> {
        let local = local_states(label);
        local
            .iter()
            .flat_map(|a| local.iter().map(move |b| (*a, *b)))
            .collect()
    }

    /// Sums counts per setting. Every record must use one of the six MUB
    /// states; settings may be missing, but each basis pair must then be
    /// entirely absent.
    pub fn from_records(records: &[CoincidenceRecord]) -> Result<Self> {
        let first = records.first().ok_or(Error::NoRecords)?;
        let label = first.setting_alice.label();
        let mut counts = [[None; 6]; 6];
        for r in records {
            for k in [&r.setting_alice, &r.setting_bob] {
                if k.label() != label {
                    return Err(Error::MixedSubspaces(label, k.label()));
                }
            }
            let (ma, oa) = identify_mub_state(&r.setting_alice).ok_or(Error::UnknownSetting)?;
            let (mb, ob) = identify_mub_state(&r.setting_bob).ok_or(Error::UnknownSetting)?;
            let slot: &mut Option<f64> = &mut counts[2 * ma + oa][2 * mb + ob];
            *slot = Some(slot.unwrap_or(0.0) + r.counts as f64);
        }
        let set = TomographySet { label, counts };
        set.check_groups()?;
        Ok(set)
    }

    /// Exact Born probabilities used as frequencies.
    pub fn from_probabilities(rho: &DensityMatrix) -> Result<Self> {
        let local = local_states(rho.label());
        let mut counts = [[None; 6]; 6];
        for (ka, a) in local.iter().enumerate() {
            for (kb, b) in local.iter().enumerate() {
                counts[ka][kb] = Some(rho.born_probability(a, b)?);
            }
        }
        Ok(TomographySet {
            label: rho.label(),
            counts,
        })
    }

    /// Replaces the counts, keeping the set of present settings.
    fn with_counts(&self, flat: &[f64]) -> Self {
        let mut out = self.clone();
        let mut it = flat.iter();
        for row in out.counts.iter_mut() {
            for slot in row.iter_mut().filter(|s| s.is_some()) {
                *slot = Some(*it.next().expect("one value per present setting"));
            }
        }
        out
    }

    /// Expected counts under the (possibly unphysical) `rho` for every
    /// present setting, scaled by the observed total of its basis-pair group.
    fn model_counts(&self, rho: &Matrix4<C64>) -> Vec<f64> {
        let local = local_states(self.label);
        let mut out = Vec::new();
        for ka in 0..6 {
            for kb in 0..6 {
                if self.counts[ka][kb].is_none() {
                    continue;
                }
                let (ma, mb) = (ka / 2, kb / 2);
                let total: f64 = self.group(ma, mb).iter().map(|x| x.unwrap_or(0.0)).sum();
                let v = local[ka].tensor(&local[kb]);
                out.push(total * (v.adjoint() * rho * v)[(0, 0)].re.max(0.0));
            }
        }
        out
    }

    fn present_counts(&self) -> Vec<f64> {
        self.counts.iter().flatten().filter_map(|x| *x).collect()
    }

    pub fn label(&self) -> SubspaceLabel {
        self.label
    }

    pub fn count(&self, ka: usize, kb: usize) -> Option<f64> {
        self.counts[ka][kb]
    }

    fn check_groups(&self) -> Result<()> {
        for ma in 0..3 {
            for mb in 0..3 {
                let present = self.group(ma, mb).iter().filter(|x| x.is_some()).count();
                if present != 0 && present != 4 {
                    let k = self
                        .group(ma, mb)
                        .iter()
                        .position(|x| x.is_none())
                        .expect("one missing");
                    return Err(Error::MissingSetting {
                        mub: ma * 3 + mb + 1,
                        alice: k / 2,
                        bob: k % 2,
                    });
                }
            }
        }
        Ok(())
    }

    fn group(&self, ma: usize, mb: usize) -> [Option<f64>; 4] {
        [
            self.counts[2 * ma][2 * mb],
            self.counts[2 * ma][2 * mb + 1],
            self.counts[2 * ma + 1][2 * mb],
            self.counts[2 * ma + 1][2 * mb + 1],
        ]
    }
}

/// Row weighting of the least-squares problem.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    /// Ordinary least squares on normalised frequencies.
    #[default]
    Unweighted,
    /// Rows scaled by `N_group / sqrt(max(n, 1))`, the inverse Poisson
    /// standard deviation of each frequency.
    Poisson,
}

fn pauli(i: usize) -> Matrix2<C64> {
    let (o, z, one) = (c(0.0, 0.0), c(0.0, 1.0), c(1.0, 0.0));
    match i {
        0 => Matrix2::new(one, o, o, one),
        1 => Matrix2::new(o, one, one, o),
        2 => Matrix2::new(o, -z, z, o),
        _ => Matrix2::new(one, o, o, -one),
    }
}

fn bloch(k: &Ket2) -> [f64; 4] {
    let x = k.c0().conj() * k.c1();
    [
        1.0,
        2.0 * x.re,
        2.0 * x.im,
        k.c0().norm_sqr() - k.c1().norm_sqr(),
    ]
}

/// Equations and right-hand side for the present, non-empty groups.
fn linear_system(
    set: &TomographySet,
    weighting: Weighting,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let local = local_states(set.label);
    let blochs: Vec<[f64; 4]> = local.iter().map(bloch).collect();
    let mut rows: Vec<[f64; 16]> = Vec::new();
    let mut rhs = Vec::new();
    for ma in 0..3 {
        for mb in 0..3 {
            let g = set.group(ma, mb);
            if g.iter().any(|x| x.is_none()) {
                continue;
            }
            let total: f64 = g.iter().map(|x| x.expect("present")).sum();
            if !(total > 0.0) {
                return Err(Error::EmptySettingGroup);
            }
            for (k, n) in g.iter().enumerate() {
                let n = n.expect("present");
                let (ka, kb) = (2 * ma + k / 2, 2 * mb + k % 2);
                let w = match weighting {
                    Weighting::Unweighted => 1.0,
                    Weighting::Poisson => total / n.max(1.0).sqrt(),
                };
                let mut row = [0.0; 16];
                for i in 0..4 {
                    for j in 0..4 {
                        row[4 * i + j] = 0.25 * blochs[ka][i] * blochs[kb][j] * w;
                    }
                }
                rows.push(row);
                rhs.push(n / total * w);
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::RankDeficient { rank: 0 });
    }
    let a = DMatrix::from_fn(rows.len(), 16, |r, k| rows[r][k]);
    Ok((a, DVector::from_vec(rhs)))
}

fn assemble(x: &DVector<f64>) -> Matrix4<C64> {
    let mut rho = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            rho += pauli(i).kronecker(&pauli(j)) * c(0.25 * x[4 * i + j], 0.0);
        }
    }
    (rho + rho.adjoint()) * c(0.5, 0.0)
}

/// Least-squares estimate (Hermitian, possibly with negative eigenvalues).
pub fn linear_inversion(set: &TomographySet) -> Result<Matrix4<C64>> {
    linear_inversion_weighted(set, Weighting::Unweighted)
}

pub fn linear_inversion_weighted(
    set: &TomographySet,
    weighting: Weighting,
) -> Result<Matrix4<C64>> {
    let (a, b) = linear_system(set, weighting)?;
    let svd = a.svd(true, true);
    let s_max = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > RANK_TOLERANCE * s_max)
        .count();
    if rank < 16 {
        return Err(Error::RankDeficient { rank });
    }
    let x = svd
        .solve(&b, RANK_TOLERANCE * s_max)
        .expect("u and v_t were computed");
    Ok(assemble(&x))
}

/// Euclidean projection of `v` onto the probability simplex.
///
/// Sort-based: ties keep their original order, so the result is
/// deterministic for repeated entries.
pub fn project_onto_simplex(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &idx) in order.iter().enumerate() {
        cumulative += v[idx];
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if v[idx] - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Frobenius-nearest density matrix: eigen-decompose the Hermitian part,
/// project the spectrum onto the simplex and reassemble.
pub fn project_to_physical(m: &Matrix4<C64>, label: SubspaceLabel) -> DensityMatrix {
    let h = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let lambda = project_onto_simplex(eig.eigenvalues.as_slice());
    let d = Matrix4::from_diagonal(&Vector4::from_iterator(lambda.iter().map(|&x| c(x, 0.0))));
    let v = eig.eigenvectors;
    let rho = v * d * v.adjoint();
    let rho = (rho + rho.adjoint()) * c(0.5, 0.0);
    let trace = rho.trace().re;
    DensityMatrix::new(rho / c(trace, 0.0), label)
        .expect("simplex projection yields a density matrix")
}

/// `<t|rho|t>` for a normalised 4-component target ket.
pub fn fidelity(rho: &DensityMatrix, target: &[C64]) -> Result<f64> {
    if target.len() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            found: target.len(),
        });
    }
    let t = Vector4::from_column_slice(target);
    let norm_sq = t.norm_squared();
    if (norm_sq - 1.0).abs() > 1e-10 {
        return Err(Error::Unnormalized {
            what: "fidelity target",
            norm_sq,
        });
    }
    Ok(rho.overlap(&t).clamp(0.0, 1.0))
}

/// Linear inversion followed by projection.
pub fn reconstruct(
    set: &TomographySet,
    weighting: Weighting,
) -> Result<(Matrix4<C64>, DensityMatrix)> {
    let ls = linear_inversion_weighted(set, weighting)?;
    let rho = project_to_physical(&ls, set.label);
    Ok((ls, rho))
}

/// Pipeline parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineConfig {
    pub counts: CountModel,
    pub seed: u64,
    pub weighting: Weighting,
    /// Resamples for both error bars; `resamples == 0` skips them. The
    /// seed is derived from `seed` unless overridden here.
    pub bootstrap_resamples: usize,
}

impl PipelineConfig {
    pub fn new(counts_per_setting: u64, seed: u64) -> Self {
        PipelineConfig {
            counts: CountModel::new(counts_per_setting),
            seed,
            weighting: Weighting::Unweighted,
            bootstrap_resamples: BootstrapConfig::default().resamples,
        }
    }

    fn bootstrap(&self) -> BootstrapConfig {
        BootstrapConfig {
            resamples: self.bootstrap_resamples,
            seed: self.seed ^ 0x5eed_b007_5eed_b007,
        }
    }
}

/// Output of [`tomo_pipeline`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TomographyReport {
    pub rho_hat: DensityMatrix,
    /// Fidelity of `rho_hat` with `(|l0> - |0l>)/sqrt(2)`.
    pub fidelity: f64,
    /// Bootstrap standard deviation of `fidelity`.
    pub fidelity_sigma: f64,
    /// Parametric-bootstrap RMS error: counts are redrawn from the
    /// least-squares fitted frequencies (clipped at zero, scaled by the
    /// observed group totals), reconstructed, and the refit fidelities
    /// compared with `fidelity`. Unlike `fidelity_sigma` this captures the
    /// bias of the projected estimator, which dominates for nearly pure
    /// states.
    pub fidelity_rms_error: f64,
    /// Raw least-squares estimate, real and imaginary parts.
    pub ls_real: [[f64; 4]; 4],
    pub ls_imag: [[f64; 4]; 4],
    pub ls_min_eigenvalue: f64,
    pub witness: WitnessEstimate,
    pub records: Vec<CoincidenceRecord>,
}

impl TomographyReport {
    /// Combined error bar `sqrt(σ_w^2 + e_t^2)` of the witness and
    /// tomography fidelities, with `e_t` the bootstrap RMS error.
    pub fn combined_sigma(&self) -> f64 {
        self.witness.sigma.hypot(self.fidelity_rms_error)
    }

    /// `|F_witness - F_tomo| <= k · combined_sigma()`.
    pub fn estimates_agree(&self, k: f64) -> bool {
        let sigma = self.combined_sigma();
        (self.witness.fidelity - self.fidelity).abs() <= k * sigma
    }
}

/// Simulates counts on all 36 settings from `rho_true`, reconstructs, and
/// scores against the ideal state; also runs the MUB witness on the same
/// records.
pub fn tomo_pipeline(
    rho_true: &DensityMatrix,
    counts_per_setting: u64,
    seed: u64,
) -> Result<TomographyReport> {
    tomo_pipeline_with(rho_true, &PipelineConfig::new(counts_per_setting, seed))
}

pub fn tomo_pipeline_with(
    rho_true: &DensityMatrix,
    config: &PipelineConfig,
) -> Result<TomographyReport> {
    let label = rho_true.label();
    let target = DensityMatrix::chi_ket();
    let records = simulate_counts_with(
        rho_true,
        &TomographySet::settings(label),
        &config.counts,
        config.seed,
    )?;
    let set = TomographySet::from_records(&records)?;
    let (ls, rho_hat) = reconstruct(&set, config.weighting)?;
    let fid = fidelity(&rho_hat, target.as_slice())?;

    let boot = config.bootstrap();
    let replicates = boot.replicates(&set.present_counts(), |counts| {
        let (_, r) = reconstruct(&set.with_counts(counts), config.weighting).ok()?;
        Some(r.overlap(&target))
    });
    let fidelity_sigma = std_dev(&replicates);
    let means = set.model_counts(&ls);
    let parametric = boot.replicates(&means, |counts| {
        let (_, r) = reconstruct(&set.with_counts(counts), config.weighting).ok()?;
        Some(r.overlap(&target))
    });
    let fidelity_rms_error = rms_about(&parametric, fid);
    let witness = crate::measurement::witness_fidelity(&records, &boot)?;

    let split = |f: fn(&C64) -> f64| {
        let mut out = [[0.0; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = f(&ls[(i, j)]);
            }
        }
        out
    };
    Ok(TomographyReport {
        ls_real: split(|z| z.re),
        ls_imag: split(|z| z.im),
        ls_min_eigenvalue: crate::measurement::min_eigenvalue(&ls),
        rho_hat,
        fidelity: fid,
        fidelity_sigma,
        fidelity_rms_error,
        witness,
        records,
    })
}
