//! One function per subcommand. Each validates its parameters, runs the
//! simulation and returns a [`Report`] holding both output encodings.

use loolsim::optics::beamsplitter_on_labels;
use loolsim::{
    apply_mode_unitary, coincidence_prob_schmidt, compose, eraser_scan, hom_scan, linspace,
    make_two_photon_input, post_select_coincidence, prepare, schmidt_decompose, simulate_counts,
    slm_mixer, tomo_pipeline_with, witness_fidelity, witness_settings, write_records_csv,
    BootstrapConfig, DensityMatrix, HomSource, JointSpectralAmplitude, ModeIndex, Path,
    PipelineConfig, Preparation, Quadrature, SpectralModel, SubspaceLabel, TwoPartyProjector,
    Weighting, C64,
};
use serde_json::{json, Value};

use crate::args::{
    EraserArgs, LiftArgs, Profile, ScanArgs, SchmidtArgs, SpectrumArgs, StateArgs, StateKind,
    TomoArgs, WeightingArg,
};
use crate::CliError;

/// Informational coincidence window recorded in every output.
pub const COINCIDENCE_WINDOW_S: f64 = 0.2e-9;

/// Offset between the count seed and the bootstrap seed.
const BOOTSTRAP_SEED_SALT: u64 = 0x5eed_b007_5eed_b007;

pub struct Report {
    pub summary: Vec<(String, String)>,
    pub json: Value,
    pub csv: Vec<u8>,
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn require(ok: bool, msg: impl Into<String>) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(config_error(msg))
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    require(
        v.is_finite() && v > 0.0,
        format!("--{name} must be positive and finite, got {v}"),
    )
}

fn unit_interval(name: &str, v: f64) -> Result<(), CliError> {
    require(
        (0.0..=1.0).contains(&v),
        format!("--{name} must lie in [0, 1], got {v}"),
    )
}

fn metadata(command: &str, parameters: Value) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "coincidence_window_s": COINCIDENCE_WINDOW_S,
        "units": { "tau": "ps", "omega": "rad/ps" },
        "parameters": parameters,
    })
}

fn csv_table<const N: usize>(header: [&str; N], rows: &[[f64; N]]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|x| x.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

fn tau_range(
    tau_min: Option<f64>,
    tau_max: Option<f64>,
    width: f64,
) -> Result<(f64, f64), CliError> {
    let lo = tau_min.unwrap_or(-4.0 / width);
    let hi = tau_max.unwrap_or(4.0 / width);
    require(
        lo.is_finite() && hi.is_finite() && lo < hi,
        format!("delay range must satisfy --tau-min < --tau-max, got [{lo}, {hi}]"),
    )?;
    Ok((lo, hi))
}

fn photon(profile: Profile, sigma: f64) -> Result<SpectralModel, CliError> {
    Ok(match profile {
        Profile::Gauss => SpectralModel::gaussian(sigma, 0.0)?,
        Profile::Sinc => SpectralModel::sinc(1.0 / sigma)?,
    })
}

struct Scan {
    source: HomSource,
    tau_min: f64,
    tau_max: f64,
    parameters: Value,
}

fn scan_setup(s: &SpectrumArgs) -> Result<Scan, CliError> {
    positive("sigma", s.sigma)?;
    unit_interval("eta", s.eta)?;
    require(
        s.points >= 3,
        format!("--points must be at least 3, got {}", s.points),
    )?;
    let (tau_min, tau_max) = tau_range(s.tau_min, s.tau_max, s.sigma)?;
    let model = photon(s.profile, s.sigma)?;
    let source = HomSource::Separable {
        photon_a: model.clone(),
        photon_b: model,
        indistinguishability: s.eta,
    };
    let parameters = json!({
        "profile": format!("{:?}", s.profile).to_lowercase(),
        "sigma": s.sigma,
        "eta": s.eta,
        "tau_min": tau_min,
        "tau_max": tau_max,
        "points": s.points,
    });
    Ok(Scan {
        source,
        tau_min,
        tau_max,
        parameters,
    })
}

pub fn hom_scan_cmd(a: &ScanArgs) -> Result<Report, CliError> {
    let scan = scan_setup(&a.spectrum)?;
    let q = Quadrature::default();
    let out = hom_scan(
        &scan.source,
        scan.tau_min,
        scan.tau_max,
        a.spectrum.points,
        &q,
    )?;
    let rows: Vec<[f64; 2]> = out
        .taus
        .iter()
        .zip(&out.probabilities)
        .map(|(&t, &p)| [t, p])
        .collect();
    let v = out.visibility;
    Ok(Report {
        summary: vec![
            ("points".into(), out.taus.len().to_string()),
            ("baseline".into(), format!("{:.6}", v.baseline)),
            ("extremum".into(), format!("{:.6}", v.extremum)),
            (
                format!("{:?} visibility", v.kind).to_lowercase(),
                format!("{:.6}", v.value),
            ),
        ],
        csv: csv_table(["tau_ps", "probability"], &rows)?,
        json: json!({
            "metadata": metadata("hom-scan", scan.parameters),
            "tau_ps": out.taus,
            "probability": out.probabilities,
            "visibility": v,
        }),
    })
}

pub fn eraser_cmd(a: &EraserArgs) -> Result<Report, CliError> {
    let label = a.subspace.label().map_err(config_error)?;
    let scan = scan_setup(&a.spectrum)?;
    let q = Quadrature::default();
    let n = a.spectrum.points;
    let sym = TwoPartyProjector::symmetric(label);
    let asym = TwoPartyProjector::antisymmetric(label);
    let s = eraser_scan(&scan.source, &sym, scan.tau_min, scan.tau_max, n, &q)?;
    let b = eraser_scan(&scan.source, &asym, scan.tau_min, scan.tau_max, n, &q)?;
    // Born probability of the normalised projector, free of the 1/4 and
    // ket-norm bookkeeping.
    let sym_cond: Vec<f64> = s.values.iter().map(|v| v / sym.scale).collect();
    let asym_cond: Vec<f64> = b.values.iter().map(|v| v / asym.scale).collect();

    let rows: Vec<[f64; 6]> = (0..s.taus.len())
        .map(|k| {
            [
                s.taus[k],
                s.coherence[k],
                s.values[k],
                b.values[k],
                sym_cond[k],
                asym_cond[k],
            ]
        })
        .collect();
    let centre = s
        .taus
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.abs().total_cmp(&y.1.abs()))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let last = s.taus.len() - 1;

    let mut parameters = scan.parameters;
    parameters["subspace"] = json!(label.to_string());
    Ok(Report {
        summary: vec![
            ("subspace".into(), label.to_string()),
            ("prefactor".into(), format!("{}", sym.prefactor)),
            (
                format!("sym / asym at tau = {:.4} ps", s.taus[centre]),
                format!("{:.6} / {:.6}", s.values[centre], b.values[centre]),
            ),
            (
                format!("sym / asym at tau = {:.4} ps", s.taus[last]),
                format!("{:.6} / {:.6}", s.values[last], b.values[last]),
            ),
        ],
        csv: csv_table(
            [
                "tau_ps",
                "coherence",
                "symmetric",
                "antisymmetric",
                "symmetric_conditional",
                "antisymmetric_conditional",
            ],
            &rows,
        )?,
        json: json!({
            "metadata": metadata("eraser", parameters),
            "subspace": label.to_string(),
            "prefactor": sym.prefactor,
            "effective_scale": { "symmetric": sym.scale, "antisymmetric": asym.scale },
            "tau_ps": s.taus,
            "coherence": s.coherence,
            "symmetric": s.values,
            "antisymmetric": b.values,
            "symmetric_conditional": sym_cond,
            "antisymmetric_conditional": asym_cond,
        }),
    })
}

fn build_state(a: &StateArgs, label: SubspaceLabel) -> Result<DensityMatrix, CliError> {
    unit_interval("eta", a.eta)?;
    unit_interval("r", a.r)?;
    require(a.counts > 0, "--counts must be positive")?;
    Ok(match a.state {
        StateKind::Ideal => {
            prepare(&Preparation {
                reflectivity: a.r,
                ..Preparation::ideal(label)
            })?
            .density
        }
        StateKind::Crosstalk => {
            prepare(&Preparation {
                label,
                reflectivity: a.r,
                eta: a.eta,
            })?
            .density
        }
        StateKind::Mixed => DensityMatrix::classical_mixture(label),
        StateKind::White => DensityMatrix::maximally_mixed(label),
    })
}

fn state_parameters(a: &StateArgs, label: SubspaceLabel) -> Value {
    json!({
        "subspace": label.to_string(),
        "state": format!("{:?}", a.state).to_lowercase(),
        "eta": a.eta,
        "r": a.r,
        "counts": a.counts,
        "seed": a.seed,
        "resamples": a.resamples,
    })
}

pub fn witness_cmd(a: &StateArgs) -> Result<Report, CliError> {
    let label = a.subspace.label().map_err(config_error)?;
    let rho = build_state(a, label)?;
    let exact = rho.overlap(&DensityMatrix::chi_ket());
    let records = simulate_counts(&rho, &witness_settings(label), a.counts, a.seed)?;
    let boot = BootstrapConfig {
        resamples: a.resamples,
        seed: a.seed ^ BOOTSTRAP_SEED_SALT,
    };
    let w = witness_fidelity(&records, &boot)?;

    let mut csv = Vec::new();
    write_records_csv(&records, &mut csv)?;
    Ok(Report {
        summary: vec![
            ("subspace".into(), label.to_string()),
            (
                "fidelity".into(),
                format!("{:.6} ± {:.6}", w.fidelity, w.sigma),
            ),
            ("exact fidelity".into(), format!("{exact:.6}")),
            (
                "<ZZ>, <XX>, <YY>".into(),
                format!(
                    "{:.5}, {:.5}, {:.5}",
                    w.correlators[0], w.correlators[1], w.correlators[2]
                ),
            ),
        ],
        csv,
        json: json!({
            "metadata": metadata("witness", state_parameters(a, label)),
            "exact_fidelity": exact,
            "estimate": w,
            "records": records,
        }),
    })
}

pub fn tomo_cmd(a: &TomoArgs) -> Result<Report, CliError> {
    let s = &a.state;
    let label = s.subspace.label().map_err(config_error)?;
    let rho = build_state(s, label)?;
    let exact = rho.overlap(&DensityMatrix::chi_ket());
    let mut config = PipelineConfig::new(s.counts, s.seed);
    config.bootstrap_resamples = s.resamples;
    config.weighting = match a.weighting {
        WeightingArg::Unweighted => Weighting::Unweighted,
        WeightingArg::Poisson => Weighting::Poisson,
    };
    let report = tomo_pipeline_with(&rho, &config)?;

    let m = report.rho_hat.matrix();
    let rows: Vec<[f64; 6]> = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .map(|(i, j)| {
            [
                i as f64,
                j as f64,
                m[(i, j)].re,
                m[(i, j)].im,
                report.ls_real[i][j],
                report.ls_imag[i][j],
            ]
        })
        .collect();
    let mut parameters = state_parameters(s, label);
    parameters["weighting"] = json!(format!("{:?}", a.weighting).to_lowercase());
    Ok(Report {
        summary: vec![
            ("subspace".into(), label.to_string()),
            (
                "tomography fidelity".into(),
                format!(
                    "{:.6} ± {:.6} (rms error {:.6})",
                    report.fidelity, report.fidelity_sigma, report.fidelity_rms_error
                ),
            ),
            (
                "witness fidelity".into(),
                format!(
                    "{:.6} ± {:.6}",
                    report.witness.fidelity, report.witness.sigma
                ),
            ),
            ("exact fidelity".into(), format!("{exact:.6}")),
            (
                "agree within 2 sigma".into(),
                report.estimates_agree(2.0).to_string(),
            ),
            (
                "least-squares min eigenvalue".into(),
                format!("{:.3e}", report.ls_min_eigenvalue),
            ),
        ],
        csv: csv_table(["row", "col", "rho_re", "rho_im", "ls_re", "ls_im"], &rows)?,
        json: json!({
            "metadata": metadata("tomo", parameters),
            "exact_fidelity": exact,
            "agree_2sigma": report.estimates_agree(2.0),
            "combined_sigma": report.combined_sigma(),
            "report": report,
        }),
    })
}

/// `K = (a² + b²) / (2ab)` for a Gaussian in `ω1 + ω2` (width `a`) times a
/// Gaussian in `ω1 - ω2` (width `b`): the Schmidt weights are geometric with
/// ratio `((b - a)/(b + a))²`.
fn gaussian_schmidt_number(a: f64, b: f64) -> f64 {
    (a * a + b * b) / (2.0 * a * b)
}

pub fn schmidt_cmd(a: &SchmidtArgs) -> Result<Report, CliError> {
    positive("sigma", a.sigma)?;
    positive("phase-matching", a.phase_matching)?;
    require(
        a.points >= 8,
        format!("--points must be at least 8, got {}", a.points),
    )?;
    require(a.modes >= 1, "--modes must be at least 1")?;
    require(
        a.delays >= 3,
        format!("--delays must be at least 3, got {}", a.delays),
    )?;
    let (tau_min, tau_max) = tau_range(a.tau_min, a.tau_max, a.phase_matching)?;

    // sum coordinate spans sqrt(2) × its width along the grid diagonal
    let half = 6.0 * a.sigma.max(a.phase_matching) / 2.0f64.sqrt();
    let omega = linspace(-half, half, a.points);
    let (sp, pm, profile) = (a.sigma, a.phase_matching, a.profile);
    let jsa = JointSpectralAmplitude::from_fn(omega, move |w1, w2| {
        let pump = (-(w1 + w2).powi(2) / (2.0 * sp * sp)).exp();
        let matching = match profile {
            Profile::Gauss => (-(w1 - w2).powi(2) / (2.0 * pm * pm)).exp(),
            Profile::Sinc => {
                let x = (w1 - w2) / pm;
                if x.abs() < 1e-8 {
                    1.0
                } else {
                    x.sin() / x
                }
            }
        };
        C64::new(pump * matching, 0.0)
    })?
    .normalized()?;
    let s = schmidt_decompose(&jsa, a.modes)?;
    let taus = linspace(tau_min, tau_max, a.delays);
    let probability = taus
        .iter()
        .map(|&t| coincidence_prob_schmidt(&s, t))
        .collect::<loolsim::Result<Vec<f64>>>()?;

    let analytic = match a.profile {
        Profile::Gauss => Some(gaussian_schmidt_number(a.sigma, a.phase_matching)),
        Profile::Sinc => None,
    };
    let rows: Vec<[f64; 3]> = s
        .coefficients
        .iter()
        .enumerate()
        .map(|(k, &u)| [k as f64, u, u * u])
        .collect();
    let mut summary = vec![
        ("modes kept".into(), s.rank().to_string()),
        (
            "schmidt number".into(),
            format!("{:.6}", s.schmidt_number()),
        ),
        (
            "truncation weight".into(),
            format!("{:.3e}", s.truncation_weight),
        ),
        (
            "leading coefficient".into(),
            format!("{:.6}", s.coefficients[0]),
        ),
    ];
    if let Some(k) = analytic {
        summary.push(("analytic schmidt number".into(), format!("{k:.6}")));
    }
    Ok(Report {
        summary,
        csv: csv_table(["mode", "coefficient", "weight"], &rows)?,
        json: json!({
            "metadata": metadata("schmidt", json!({
                "profile": format!("{:?}", a.profile).to_lowercase(),
                "sigma": a.sigma,
                "phase_matching": a.phase_matching,
                "points": a.points,
                "modes": a.modes,
                "tau_min": tau_min,
                "tau_max": tau_max,
            })),
            "coefficients": s.coefficients,
            "schmidt_number": s.schmidt_number(),
            "analytic_schmidt_number": analytic,
            "truncation_weight": s.truncation_weight,
            "tau_ps": taus,
            "probability": probability,
        }),
    })
}

fn complex_pair(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn lift_cmd(a: &LiftArgs) -> Result<Report, CliError> {
    unit_interval("r", a.r)?;
    require(a.theta.is_finite(), "--theta must be finite")?;
    let label = a.subspace.label().map_err(config_error)?;
    let basis = label.basis;
    let bs = beamsplitter_on_labels(a.r, basis, &[label.index, 0])?;
    let slm = slm_mixer(a.theta, basis, label.index, 0)?;
    let u = compose(&bs, &slm)?;

    // unit amplitude on (A, l) and on (B, 0), mapped by the single-photon matrix
    let a_l = ModeIndex::new(Path::A, basis, label.index)?;
    let b_0 = ModeIndex::new(Path::B, basis, 0)?;
    let computed: Vec<C64> = u
        .modes()
        .iter()
        .map(|m| u.element(m, &a_l) + u.element(m, &b_0))
        .collect();
    let (co, si) = (C64::new(a.theta.cos(), 0.0), C64::new(0.0, a.theta.sin()));
    let root2 = std::f64::consts::SQRT_2;
    let reference: Vec<C64> = [co, co - si, si, si - co]
        .iter()
        .map(|z| z / root2)
        .collect();
    let max_dev = computed
        .iter()
        .zip(&reference)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>();

    let input = make_two_photon_input(a_l, b_0)?;
    let out = apply_mode_unitary(&input, &u)?;
    let two_photon: serde_json::Map<String, Value> = out
        .terms()
        .iter()
        .map(|t| (t.occupation.to_string(), complex_pair(t.amplitude)))
        .collect();
    let (success, coincidences) = match post_select_coincidence(&out) {
        Ok(h) => (
            h.success_probability,
            h.state
                .terms()
                .iter()
                .map(|t| (t.occupation.to_string(), complex_pair(t.amplitude)))
                .collect(),
        ),
        Err(loolsim::Error::NoCoincidence) => (0.0, serde_json::Map::new()),
        Err(e) => return Err(e.into()),
    };

    let modes: Vec<String> = u.modes().iter().map(|m| m.to_string()).collect();
    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record([
        "mode",
        "computed_re",
        "computed_im",
        "reference_re",
        "reference_im",
    ])?;
    for k in 0..modes.len() {
        csv.write_record([
            modes[k].clone(),
            computed[k].re.to_string(),
            computed[k].im.to_string(),
            reference[k].re.to_string(),
            reference[k].im.to_string(),
        ])?;
    }
    let csv = csv.into_inner().map_err(|e| CliError::Io(e.into_error()))?;

    Ok(Report {
        summary: vec![
            ("modes".into(), modes.join(", ")),
            ("max |computed - reference|".into(), format!("{max_dev:.6}")),
            (
                "norm^2 computed / reference".into(),
                format!("{:.6} / {:.6}", norm(&computed), norm(&reference)),
            ),
            ("coincidence probability".into(), format!("{:.6}", success)),
        ],
        csv,
        json: json!({
            "metadata": metadata("lift", json!({
                "subspace": label.to_string(),
                "theta": a.theta,
                "r": a.r,
            })),
            "modes": modes,
            "computed": computed.iter().map(|&z| complex_pair(z)).collect::<Vec<_>>(),
            "reference": reference.iter().map(|&z| complex_pair(z)).collect::<Vec<_>>(),
            "max_deviation": max_dev,
            "computed_norm_squared": norm(&computed),
            "reference_norm_squared": norm(&reference),
            "two_photon_output": two_photon,
            "coincidence_probability": success,
            "post_selected": coincidences,
        }),
    })
}
