//! Acceptance checks, one line per criterion.
//!
//! Run with `cargo test -p loolsim-core --test acceptance`. Each criterion
//! prints `PASS` or `FAIL` with the measured quantity. Criteria listed in
//! `KNOWN_UNATTAINABLE` are evaluated and reported like the others but do
//! not fail the run; every other failure exits non-zero.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use loolsim::experiment::{prepare, Preparation};
use loolsim::measurement::witness_settings;
use loolsim::optics::{beamsplitter_on_labels, haar_unitary};
use loolsim::spectral::{coincidence_prob_schmidt, linspace};
use loolsim::tomography::{reconstruct, PipelineConfig, Weighting};
use loolsim::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The reference amplitude vector has squared norm 3/2 for every θ, so no
/// unitary acting on a normalised input can produce it.
const KNOWN_UNATTAINABLE: &[u32] = &[8];

/// Seeds (of 100) in which witness and tomography fidelities must agree
/// within 2σ. A calibrated 2σ band covers 95.4%; 90 is the 1% lower
/// binomial quantile for that coverage.
const AGREEMENT_MIN: usize = 90;

struct Check {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Check {
    Check {
        pass,
        detail: detail.into(),
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn labels() -> [SubspaceLabel; 2] {
    [SubspaceLabel::azimuthal(3), SubspaceLabel::radial(1)]
}

fn criterion_1() -> Check {
    let mut worst = 0.0f64;
    for label in labels() {
        let prepared = prepare(&Preparation::ideal(label)).unwrap();
        let sym = TwoPartyProjector::symmetric(label);
        let asym = TwoPartyProjector::antisymmetric(label);
        let chi = DensityMatrix::chi(label);
        for state in [
            measurement::TwoPhotonState::from(&prepared.post_selected),
            measurement::TwoPhotonState::from(&chi),
        ] {
            worst = worst.max(eraser_expectation(state.clone(), &sym).unwrap().abs());
            worst = worst.max((eraser_expectation(state, &asym).unwrap() - 0.5).abs());
        }
    }
    check(
        worst <= 1e-12,
        format!("max |error| = {worst:.2e} over l=3, p=1 (tol 1e-12)"),
    )
}

fn criterion_2() -> Check {
    let mut worst = 0.0f64;
    for label in labels() {
        let rc = DensityMatrix::classical_mixture(label);
        for proj in [
            TwoPartyProjector::symmetric(label),
            TwoPartyProjector::antisymmetric(label),
        ] {
            worst = worst.max((eraser_expectation(&rc, &proj).unwrap() - 0.25).abs());
        }
    }
    check(
        worst <= 1e-12,
        format!("max |Tr(rho_c P) - 1/4| = {worst:.2e} (tol 1e-12)"),
    )
}

fn criterion_3() -> Check {
    // spiral phase plate (+2) on path A, then a balanced beamsplitter
    let label = SubspaceLabel::azimuthal(2);
    let input = make_two_photon_input(
        ModeIndex::azimuthal(Path::A, 0),
        ModeIndex::azimuthal(Path::B, 0),
    )
    .unwrap();
    let shifted = phase_plate(Path::A, 2).apply(&input).unwrap();
    let bs = beamsplitter_on_labels(0.5, BasisTag::Azimuthal, &[0, 2]).unwrap();
    let chi = post_select_coincidence(&apply_mode_unitary(&shifted, &bs).unwrap())
        .unwrap()
        .state;
    let expected = PhotonState::from_terms([
        (
            Occupation::from_modes([
                ModeIndex::azimuthal(Path::A, 0),
                ModeIndex::azimuthal(Path::B, 2),
            ]),
            c(0.5f64.sqrt(), 0.0),
        ),
        (
            Occupation::from_modes([
                ModeIndex::azimuthal(Path::A, 2),
                ModeIndex::azimuthal(Path::B, 0),
            ]),
            c(-0.5f64.sqrt(), 0.0),
        ),
    ]);
    let state_err = (inner_product(&expected, &chi) - c(1.0, 0.0)).norm();
    let bump = TwoPartyProjector::bump(label);
    let pure = (eraser_expectation(&chi, &bump).unwrap() - 0.5).abs();
    let mixed =
        (eraser_expectation(DensityMatrix::classical_mixture(label), &bump).unwrap() - 0.25).abs();
    let worst = state_err.max(pure).max(mixed);
    check(
        worst <= 1e-12,
        format!("|<chi|P|chi> - 1/2| = {pure:.2e}, |Tr(rho P) - 1/4| = {mixed:.2e}, state error {state_err:.2e}"),
    )
}

fn criterion_4() -> Check {
    let bs = beamsplitter_on_labels(0.5, BasisTag::Azimuthal, &[0, 3]).unwrap();
    let a0 = ModeIndex::azimuthal(Path::A, 0);
    let b0 = ModeIndex::azimuthal(Path::B, 0);
    let same = apply_mode_unitary(&make_two_photon_input(a0, b0).unwrap(), &bs).unwrap();
    let p_same = coincidence_probability(&same).unwrap();
    let bunched = PhotonState::from_terms([
        (Occupation::new([(a0, 2)]), c(0.5f64.sqrt(), 0.0)),
        (Occupation::new([(b0, 2)]), c(-0.5f64.sqrt(), 0.0)),
    ]);
    let overlap = inner_product(&bunched, &same).norm();
    let distinct = make_two_photon_input(a0, ModeIndex::azimuthal(Path::B, 3)).unwrap();
    let p_distinct = coincidence_probability(&apply_mode_unitary(&distinct, &bs).unwrap()).unwrap();
    let pass = p_same.abs() <= 1e-12
        && (overlap - 1.0).abs() <= 1e-10
        && (p_distinct - 0.5).abs() <= 1e-12;
    check(
        pass,
        format!(
            "P_c(same) = {p_same:.2e}, |overlap| = {overlap:.12}, P_c(distinct) = {p_distinct:.12}"
        ),
    )
}

fn criterion_5() -> Check {
    let start = Instant::now();
    let mut worst_gauss = 0.0f64;
    let cases = [(1.0, 1.0, 0.0, 0.0), (1.0, 1.5, 0.0, 0.3)];
    for &(sa, sb, ma, mb) in &cases {
        let (pa, pb) = (
            SpectralModel::gaussian(sa, ma).unwrap(),
            SpectralModel::gaussian(sb, mb).unwrap(),
        );
        for tau in linspace(-5.0, 5.0, 100) {
            let q = coincidence_prob_separable(&pa, &pb, tau).unwrap();
            worst_gauss =
                worst_gauss.max((q - coincidence_prob_gauss(sa, sb, ma, mb, tau).unwrap()).abs());
        }
    }
    let mut worst_sinc = 0.0f64;
    let s = SpectralModel::sinc(1.0).unwrap();
    for tau in linspace(-3.0, 3.0, 100) {
        let q = coincidence_prob_separable(&s, &s, tau).unwrap();
        worst_sinc = worst_sinc.max((q - coincidence_prob_sinc(1.0, tau).unwrap()).abs());
    }
    let elapsed = start.elapsed();
    check(
        worst_gauss <= 1e-6 && worst_sinc <= 1e-6 && elapsed < Duration::from_secs(10),
        format!("max |closed - quadrature|: gauss {worst_gauss:.2e}, sinc {worst_sinc:.2e}; {elapsed:.2?} (< 10 s)"),
    )
}

fn random_mode(rng: &mut ChaCha8Rng) -> impl Fn(f64) -> C64 {
    let mu: f64 = rng.random_range(-1.5..1.5);
    let s: f64 = rng.random_range(0.5..1.2);
    let k: f64 = rng.random_range(-1.0..1.0);
    move |w: f64| C64::from_polar((-(w - mu).powi(2) / (2.0 * s * s)).exp(), k * w)
}

fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let omega = linspace(-7.0, 7.0, 64);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let rank = rng.random_range(1..=4);
        let terms: Vec<_> = (0..rank)
            .map(|_| {
                let coef = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                (coef, random_mode(&mut rng), random_mode(&mut rng))
            })
            .collect();
        let jsa = JointSpectralAmplitude::from_fn(omega.clone(), |x, y| {
            terms.iter().map(|(k, f, g)| k * f(x) * g(y)).sum()
        })
        .unwrap()
        .normalized()
        .unwrap();
        let schmidt = schmidt_decompose(&jsa, 4).unwrap();
        for tau in linspace(-3.0, 3.0, 13) {
            let direct = coincidence_prob_entangled(&jsa, tau).unwrap();
            let via = coincidence_prob_schmidt(&schmidt, tau).unwrap();
            worst = worst.max((direct - via).abs());
        }
    }
    let (g1, g2) = (
        SpectralModel::gaussian(1.0, -1.0).unwrap(),
        SpectralModel::gaussian(1.0, 1.2).unwrap(),
    );
    let anti = JointSpectralAmplitude::from_fn(omega, |x, y| {
        g1.amplitude(x) * g2.amplitude(y) - g2.amplitude(x) * g1.amplitude(y)
    })
    .unwrap()
    .normalized()
    .unwrap();
    let p_anti = coincidence_prob_entangled(&anti, 0.0).unwrap();
    check(
        worst <= 1e-6 && (p_anti - 1.0).abs() <= 1e-6,
        format!("max |Schmidt - direct| = {worst:.2e} on 5 random JSAs; antisymmetric p(0) = {p_anti:.12}"),
    )
}

/// Max deviation between the permanent table and the operator expansion
/// over every one- and two-mode input.
fn lift_deviation(u: &ModeUnitary) -> f64 {
    let modes = u.modes().to_vec();
    let mut worst = 0.0f64;
    for i in 0..modes.len() {
        for j in i..modes.len() {
            let occ = if i == j {
                Occupation::new([(modes[i], 2)])
            } else {
                Occupation::from_modes([modes[i], modes[j]])
            };
            let input = PhotonState::from_terms([(occ, c(1.0, 0.0))]);
            let expanded = apply_mode_unitary(&input, u).unwrap();
            let table = two_photon_lift(u, (modes[i], modes[j])).unwrap();
            for ((m, n), amp) in &table {
                let out = if m == n {
                    Occupation::new([(*m, 2)])
                } else {
                    Occupation::from_modes([*m, *n])
                };
                worst = worst.max((expanded.amplitude(&out) - amp).norm());
            }
        }
    }
    worst
}

fn criterion_7() -> Check {
    let modes = vec![
        ModeIndex::azimuthal(Path::A, 0),
        ModeIndex::azimuthal(Path::B, 0),
        ModeIndex::azimuthal(Path::A, 3),
        ModeIndex::azimuthal(Path::B, 3),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_haar = 0.0f64;
    for _ in 0..200 {
        let u = ModeUnitary::new(haar_unitary(4, &mut rng), modes.clone()).unwrap();
        worst_haar = worst_haar.max(lift_deviation(&u));
    }
    let bs = beamsplitter_on_labels(0.5, BasisTag::Azimuthal, &[0, 3]).unwrap();
    let mut worst_slm = 0.0f64;
    for theta in linspace(0.0, PI, 20) {
        let u = compose(&bs, &slm_mixer(theta, BasisTag::Azimuthal, 0, 3).unwrap()).unwrap();
        worst_slm = worst_slm.max(lift_deviation(&u));
    }
    check(
        worst_haar <= 1e-10 && worst_slm <= 1e-10,
        format!("max |perm - expansion|: 200 Haar {worst_haar:.2e}, 20 SLM·BS {worst_slm:.2e}"),
    )
}

fn criterion_8() -> Check {
    let mut worst = 0.0f64;
    let mut norm_sq_target = 0.0;
    for theta in linspace(0.0, PI, 20) {
        let bs = beamsplitter_on_labels(0.5, BasisTag::Azimuthal, &[3, 0]).unwrap();
        let slm = slm_mixer(theta, BasisTag::Azimuthal, 3, 0).unwrap();
        let u = compose(&bs, &slm).unwrap();
        // a†_{l1} b†_{l2}: unit amplitude on (A, l1) and (B, l2)
        let input = DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let got = u.apply_to_amplitudes(&input).unwrap();
        let (co, si) = (c(theta.cos(), 0.0), c(0.0, theta.sin()));
        let target = DVector::from_vec(vec![co, co - si, si, si - co]) / c(2.0f64.sqrt(), 0.0);
        norm_sq_target = target.norm_squared();
        worst = worst.max((got - target).iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    check(
        worst <= 1e-12,
        format!(
            "max |U x - target| = {worst:.3} over 20 θ; target norm^2 = {norm_sq_target:.3}, \
             unreachable by a unitary from a norm^2 = 2 input"
        ),
    )
}

fn frobenius(a: &nalgebra::Matrix4<C64>, b: &nalgebra::Matrix4<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn random_density(rng: &mut ChaCha8Rng, label: SubspaceLabel) -> DensityMatrix {
    let g = DMatrix::from_fn(4, 4, |_, _| {
        c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let m = &g * g.adjoint();
    let m = nalgebra::Matrix4::from_fn(|i, j| m[(i, j)]);
    let t = m.trace();
    DensityMatrix::new(m / t, label).unwrap()
}

fn criterion_9() -> Check {
    let start = Instant::now();
    let label = SubspaceLabel::azimuthal(3);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut round_trip = 0.0f64;
    let mut states = vec![
        DensityMatrix::chi(label),
        DensityMatrix::classical_mixture(label),
        DensityMatrix::maximally_mixed(label),
    ];
    states.extend((0..10).map(|_| random_density(&mut rng, label)));
    for rho in &states {
        let set = TomographySet::from_probabilities(rho).unwrap();
        let (_, hat) = reconstruct(&set, Weighting::Unweighted).unwrap();
        round_trip = round_trip.max(frobenius(hat.matrix(), rho.matrix()));
    }

    let chi = DensityMatrix::chi(label);
    let mut high = 0;
    let mut agree = 0;
    let mut worst_z = 0.0f64;
    for seed in 0..100 {
        let report = tomo_pipeline(&chi, 100_000, seed).unwrap();
        if report.fidelity >= 0.99 {
            high += 1;
        }
        if report.estimates_agree(2.0) {
            agree += 1;
        }
        let sigma = report.combined_sigma();
        worst_z = worst_z.max((report.witness.fidelity - report.fidelity).abs() / sigma);
    }
    let elapsed = start.elapsed();
    check(
        round_trip <= 1e-9 && high >= 95 && agree >= AGREEMENT_MIN && elapsed < Duration::from_secs(60),
        format!(
            "round trip {round_trip:.2e}; F >= 0.99 in {high}/100 seeds; witness within 2σ in {agree}/100 \
             (need {AGREEMENT_MIN}; max |ΔF|/σ = {worst_z:.2}); {elapsed:.2?} (< 60 s)"
        ),
    )
}

fn criterion_10() -> Check {
    let label = SubspaceLabel::azimuthal(3);
    let etas = [1.0, 0.95, 0.9, 0.8];
    let means: Vec<f64> = etas
        .iter()
        .map(|&eta| {
            let rho = prepare(&Preparation {
                eta,
                ..Preparation::ideal(label)
            })
            .unwrap()
            .density;
            let total: f64 = (0..20)
                .map(|seed| {
                    let mut cfg = PipelineConfig::new(100_000, 1000 + seed);
                    cfg.bootstrap_resamples = 0;
                    tomography::tomo_pipeline_with(&rho, &cfg).unwrap().fidelity
                })
                .sum();
            total / 20.0
        })
        .collect();
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = etas
        .iter()
        .zip(&means)
        .map(|(e, f)| format!("η={e}: {f:.4}"))
        .collect();
    check(decreasing, format!("mean F {}", shown.join(", ")))
}

fn main() -> ExitCode {
    // keep the witness settings helper exercised from the public API
    assert_eq!(witness_settings(SubspaceLabel::azimuthal(3)).len(), 12);

    let criteria: [(u32, &str, fn() -> Check); 10] = [
        (1, "eraser expectations", criterion_1),
        (2, "mixed-state plateau", criterion_2),
        (3, "bump projector", criterion_3),
        (4, "HOM bunching", criterion_4),
        (5, "closed forms vs quadrature", criterion_5),
        (6, "entangled-photon formula", criterion_6),
        (7, "two-photon lift", criterion_7),
        (8, "SLM·BS amplitude vector", criterion_8),
        (9, "tomography round trip", criterion_9),
        (10, "crosstalk monotonicity", criterion_10),
    ];
    let mut unexpected = 0;
    for (id, name, run) in criteria {
        let start = Instant::now();
        let result = run();
        let status = if result.pass { "PASS" } else { "FAIL" };
        let note = if !result.pass && KNOWN_UNATTAINABLE.contains(&id) {
            " [known unattainable]"
        } else {
            ""
        };
        println!(
            "criterion {id:>2} {status} {name}: {} ({:.2?}){note}",
            result.detail,
            start.elapsed()
        );
        if !result.pass && !KNOWN_UNATTAINABLE.contains(&id) {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        println!("{unexpected} criterion/criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
