//! Subcommand orchestration: wires the configuration file to the model
//! layer and writes every result as deterministic CSV.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::path::PathBuf;

use nalgebra::DMatrix;
use num_complex::Complex64;

use circulator_core::bell::{
    chsh_general, chsh_operator_oracle, refined_scan_maximum, violation_scan,
    MeasurementVector,
};
use circulator_core::elimination::{
    effective_hamiltonian_couplings, eliminate, validity_report, xi_factors, EffectiveModel,
    ValidityReport,
};
use circulator_core::full_model::compare_models;
use circulator_core::model::{
    linearize, solve_mean_field, LinearizedModel, MeanField, PhysicalParams,
};
use circulator_core::scattering::{
    default_grid, find_circulator_point, linspace, phenomenological_model, spectrum, sweep,
    SweepAxis, SweepTemplate, PORT_NAMES,
};

use crate::config::{parse_config, GridSpec, OutputFormat, OutputSpec, RunConfig};
use crate::error::{CliError, Result};
use crate::table::{fmt_float, write_table};

pub const SUBCOMMANDS: [&str; 6] =
    ["effective-params", "spectrum", "sweep", "bell", "validate", "circulator-search"];

/// Mean-field solver settings used by every microscopic pipeline.
const MEAN_FIELD_TOL: f64 = 1e-12;
const MEAN_FIELD_MAX_ITER: usize = 10_000;

/// One parsed command-line invocation.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub subcommand: String,
    pub config_path: PathBuf,
    pub output_override: Option<PathBuf>,
    pub grid_override: Option<String>,
}

/// Dispatches a subcommand; returns the files written.
pub fn run(inv: &Invocation) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(&inv.config_path).map_err(|source| CliError::Io {
        path: inv.config_path.display().to_string(),
        source,
    })?;
    let mut cfg = parse_config(&text)?;
    if let Some(path) = &inv.output_override {
        cfg.output = Some(OutputSpec {
            path: path.display().to_string(),
            format: OutputFormat::Csv,
        });
    }
    if let Some(flag) = &inv.grid_override {
        cfg.grid = Some(parse_grid_flag(flag)?);
    }
    match inv.subcommand.as_str() {
        "effective-params" => effective_params_cmd(&cfg),
        "spectrum" => spectrum_cmd(&cfg),
        "sweep" => sweep_cmd(&cfg),
        "bell" => bell_cmd(&cfg),
        "validate" => validate_cmd(&cfg),
        "circulator-search" => circulator_search_cmd(&cfg),
        other => Err(CliError::Usage(format!(
            "unknown subcommand `{other}`; expected one of: {}",
            SUBCOMMANDS.join(", ")
        ))),
    }
}

/// Parses the `--grid omega_min:omega_max:points` override.
fn parse_grid_flag(flag: &str) -> Result<GridSpec> {
    let parts: Vec<&str> = flag.split(':').collect();
    let parsed = if parts.len() == 3 {
        let omega_min = parts[0].trim().parse::<f64>().ok();
        let omega_max = parts[1].trim().parse::<f64>().ok();
        let points = parts[2].trim().parse::<usize>().ok();
        omega_min.zip(omega_max).zip(points)
    } else {
        None
    };
    parsed
        .map(|((omega_min, omega_max), points)| GridSpec { omega_min, omega_max, points })
        .ok_or_else(|| {
            CliError::Usage(format!(
                "--grid must be `omega_min:omega_max:points`, got `{flag}`"
            ))
        })
}

fn output_path(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.output
        .as_ref()
        .map(|o| PathBuf::from(&o.path))
        .ok_or_else(|| {
            CliError::Config(
                "no output path: add an [output] section with `path = ...` or pass --output"
                    .into(),
            )
        })
}

/// Microscopic pipeline: normalize → mean field → linearize.
fn pipeline(p: &PhysicalParams) -> Result<(MeanField, LinearizedModel)> {
    let p = p.clone().normalized()?;
    let mf = solve_mean_field(&p, MEAN_FIELD_TOL, MEAN_FIELD_MAX_ITER)?;
    let lm = linearize(&p, &mf)?;
    Ok((mf, lm))
}

/// Effective model from whichever model section is present (exactly one).
fn effective_from_cfg(cfg: &RunConfig) -> Result<EffectiveModel> {
    match (&cfg.physical, &cfg.phenomenological) {
        (Some(_), Some(_)) => Err(CliError::Config(
            "exactly one of [physical] and [phenomenological] may be present for this subcommand"
                .into(),
        )),
        (Some(p), None) => {
            let (_, lm) = pipeline(p)?;
            Ok(eliminate(&lm)?)
        }
        (None, Some((couplings, rates))) => Ok(phenomenological_model(couplings, rates)?),
        (None, None) => Err(CliError::Config(
            "a model section is required: add [physical] or [phenomenological]".into(),
        )),
    }
}

fn grid_points(cfg: &RunConfig, em: &EffectiveModel) -> Vec<f64> {
    match &cfg.grid {
        Some(g) => linspace(g.omega_min, g.omega_max, g.points),
        None => default_grid(em),
    }
}

fn pair_name(out_port: &str, in_port: &str) -> String {
    format!("T_{out_port}{in_port}")
}

fn validity_rows(rows: &mut Vec<Vec<String>>, validity: &ValidityReport, kind_prefix: &str) {
    for check in &validity.checks {
        rows.push(vec![
            format!("{kind_prefix}_ratio"),
            check.name.to_string(),
            fmt_float(check.value),
        ]);
        rows.push(vec![
            format!("{kind_prefix}_pass"),
            check.name.to_string(),
            (check.pass as u8).to_string(),
        ]);
    }
    rows.push(vec![
        format!("{kind_prefix}_all_pass"),
        "all".to_string(),
        (validity.all_pass as u8).to_string(),
    ]);
}

/// `effective-params`: microscopic working point, elimination factors,
/// effective parameters, Hermiticity defects, validity ratios.
fn effective_params_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    if cfg.phenomenological.is_some() {
        return Err(CliError::Config(
            "effective-params derives the effective model microscopically; remove \
             [phenomenological] and provide [physical]"
                .into(),
        ));
    }
    let p = cfg.physical.as_ref().ok_or_else(|| {
        CliError::Config("effective-params requires a [physical] section".into())
    })?;
    let path = output_path(cfg)?;
    let (mf, lm) = pipeline(p)?;
    let xf = xi_factors(&lm)?;
    let em = eliminate(&lm)?;
    let defects = effective_hamiltonian_couplings(&em)?;
    let validity = validity_report(&lm)?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    let plain = |rows: &mut Vec<Vec<String>>, name: &str, value: f64| {
        rows.push(vec![name.to_string(), fmt_float(value), String::new()]);
    };
    let pair = |rows: &mut Vec<Vec<String>>, name: &str, value: Complex64| {
        rows.push(vec![format!("{name}_re"), fmt_float(value.re), String::new()]);
        rows.push(vec![format!("{name}_im"), fmt_float(value.im), String::new()]);
    };
    pair(&mut rows, "alpha1", mf.alpha1);
    pair(&mut rows, "alpha2", mf.alpha2);
    pair(&mut rows, "beta1", mf.beta1);
    pair(&mut rows, "beta2", mf.beta2);
    plain(&mut rows, "delta_c1_prime", mf.delta_c1_prime);
    plain(&mut rows, "residual", mf.residual);
    rows.push(vec![
        "multistable".to_string(),
        (mf.multistable as u8).to_string(),
        String::new(),
    ]);
    pair(&mut rows, "g1_linearized", lm.g1);
    pair(&mut rows, "g2_linearized", lm.g2);
    pair(&mut rows, "cj", lm.cj);
    plain(&mut rows, "xi_c", xf.xi_c);
    plain(&mut rows, "xi_m1", xf.xi_m1);
    plain(&mut rows, "xi_m2", xf.xi_m2);
    pair(&mut rows, "xi", xf.xi);
    pair(&mut rows, "xi_1", xf.xi_1);
    pair(&mut rows, "xi_2", xf.xi_2);
    plain(&mut rows, "delta_eff", em.delta_eff);
    plain(&mut rows, "omega_eff1", em.omega_eff1);
    plain(&mut rows, "omega_eff2", em.omega_eff2);
    plain(&mut rows, "kappa_eff", em.kappa_eff);
    plain(&mut rows, "gamma_eff1", em.gamma_eff1);
    plain(&mut rows, "gamma_eff2", em.gamma_eff2);
    pair(&mut rows, "g_prime1", em.gp1);
    pair(&mut rows, "g_prime2", em.gp2);
    pair(&mut rows, "g_dprime1", em.gpp1);
    pair(&mut rows, "g_dprime2", em.gpp2);
    pair(&mut rows, "v1", em.v1);
    pair(&mut rows, "v2", em.v2);
    plain(&mut rows, "g_defect1", defects.g_defect1);
    plain(&mut rows, "g_defect2", defects.g_defect2);
    plain(&mut rows, "v_defect", defects.v_defect);
    for check in &validity.checks {
        rows.push(vec![
            format!("ratio {}", check.name),
            fmt_float(check.value),
            if check.pass { "pass".into() } else { "warn".into() },
        ]);
    }
    rows.push(vec![
        "validity_all_pass".to_string(),
        (validity.all_pass as u8).to_string(),
        String::new(),
    ]);

    write_table(&path, &["quantity", "value", "status"], &rows)?;
    Ok(vec![path])
}

/// `spectrum`: per-frequency CSV of all nine transmissions and the complex
/// scattering amplitudes.
fn spectrum_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let em = effective_from_cfg(cfg)?;
    let path = output_path(cfg)?;
    let omegas = grid_points(cfg, &em);
    let spec = spectrum(&em, &omegas)?;

    let mut header: Vec<String> = vec!["omega".to_string()];
    for out_port in PORT_NAMES {
        for in_port in PORT_NAMES {
            header.push(format!("T_{out_port}{in_port}"));
        }
    }
    for out_port in PORT_NAMES {
        for in_port in PORT_NAMES {
            header.push(format!("Gamma_{out_port}{in_port}_re"));
            header.push(format!("Gamma_{out_port}{in_port}_im"));
        }
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();

    let mut rows = Vec::with_capacity(spec.omegas.len());
    for (k, omega) in spec.omegas.iter().enumerate() {
        let mut row = Vec::with_capacity(header.len());
        row.push(fmt_float(*omega));
        for p in 0..3 {
            for q in 0..3 {
                row.push(fmt_float(spec.t[k][p][q]));
            }
        }
        for p in 0..3 {
            for q in 0..3 {
                row.push(fmt_float(spec.gammas[k][(p, q)].re));
                row.push(fmt_float(spec.gammas[k][(p, q)].im));
            }
        }
        rows.push(row);
    }
    write_table(&path, &header_refs, &rows)?;
    Ok(vec![path])
}

/// `sweep`: metric values over one or two named parameter axes.
fn sweep_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let spec = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep requires a [sweep] section".into()))?;
    let template = match (&cfg.physical, &cfg.phenomenological) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "exactly one of [physical] and [phenomenological] may be present for sweep"
                    .into(),
            ))
        }
        (Some(p), None) => {
            let (_, lm) = pipeline(p)?;
            SweepTemplate::Effective(eliminate(&lm)?)
        }
        (None, Some((couplings, rates))) => SweepTemplate::Phenomenological {
            couplings: couplings.clone(),
            rates: rates.clone(),
        },
        (None, None) => {
            return Err(CliError::Config(
                "a model section is required: add [physical] or [phenomenological]".into(),
            ))
        }
    };
    let path = output_path(cfg)?;
    let mut axes = vec![SweepAxis {
        name: spec.axis1.name.clone(),
        start: spec.axis1.start,
        stop: spec.axis1.stop,
        count: spec.axis1.count,
    }];
    if let Some(axis2) = &spec.axis2 {
        axes.push(SweepAxis {
            name: axis2.name.clone(),
            start: axis2.start,
            stop: axis2.stop,
            count: axis2.count,
        });
    }
    let grid = sweep(&template, &axes, &spec.metric)?;

    let mut header: Vec<&str> = grid.axis_names.iter().map(String::as_str).collect();
    header.push(&spec.metric);
    let mut rows = Vec::with_capacity(grid.values.len());
    match grid.axis_values.len() {
        1 => {
            for (x, v) in grid.axis_values[0].iter().zip(&grid.values) {
                rows.push(vec![fmt_float(*x), fmt_float(*v)]);
            }
        }
        _ => {
            let inner = grid.axis_values[1].len();
            for (k, v) in grid.values.iter().enumerate() {
                let x = grid.axis_values[0][k / inner];
                let y = grid.axis_values[1][k % inner];
                rows.push(vec![fmt_float(x), fmt_float(y), fmt_float(*v)]);
            }
        }
    }
    write_table(&path, &header, &rows)?;
    Ok(vec![path])
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn uniform(state: &mut u64) -> f64 {
    (splitmix(state) >> 11) as f64 / (1u64 << 53) as f64
}

/// One standard-normal sample via Box–Muller.
fn normal(state: &mut u64) -> f64 {
    let u1 = uniform(state);
    let u2 = uniform(state);
    (-2.0 * (1.0 - u1).ln()).sqrt() * (TAU * u2).cos()
}

/// Seeded random normalized state on the lowest 3 Fock levels of each mode.
fn random_low_state(state: &mut u64) -> DMatrix<Complex64> {
    let mut c = DMatrix::from_fn(3, 3, |_, _| Complex64::new(normal(state), normal(state)));
    let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    c /= Complex64::new(norm, 0.0);
    c
}

const BELL_RANDOM_STATES: usize = 1000;
const BELL_RNG_SEED: u64 = 0x5EED_0BE1_1CAB_1E05;

/// `bell`: closed-form violation scan plus the operator-oracle comparison
/// table. The scan implements the reduced closed form literally; the oracle
/// table reports the independent operator evaluation side by side, including
/// the known normalization discrepancy between the two, without merging them.
fn bell_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let spec = cfg
        .bell
        .as_ref()
        .ok_or_else(|| CliError::Config("bell requires a [bell] section".into()))?;
    let scan_path = output_path(cfg)?;
    let oracle_path = scan_path.with_extension("oracle.csv");

    let theta_grid = linspace(spec.theta_min, spec.theta_max, spec.theta_points);
    let alpha2_grid = linspace(spec.alpha2_min, spec.alpha2_max, spec.alpha2_points);
    let scan = violation_scan(&theta_grid, &alpha2_grid)?;

    let mut rows = Vec::with_capacity(scan.values.len());
    let n_alpha = scan.alpha2_grid.len();
    for (k, value) in scan.values.iter().enumerate() {
        rows.push(vec![
            fmt_float(scan.theta_grid[k / n_alpha]),
            fmt_float(scan.alpha2_grid[k % n_alpha]),
            fmt_float(*value),
            u8::from(scan.violation_mask[k]).to_string(),
        ]);
    }
    write_table(&scan_path, &["theta", "alpha2", "chsh", "violation"], &rows)?;

    // Oracle table: evaluate all three constructions at the refined optimum
    // and the standard maximally-violating configuration.
    let refined = refined_scan_maximum(&scan)?;
    let alpha2 = refined.alpha2;
    let alpha1 = (1.0 - alpha2 * alpha2).max(0.0).sqrt();
    let a1 = Complex64::new(alpha1, 0.0);
    let a2 = Complex64::new(alpha2, 0.0);
    let general_at_max =
        chsh_general(refined.theta, refined.theta, 0.0, 0.0, a1, a2, a1, a2);

    let vector_at_max = MeasurementVector::new(refined.theta.rem_euclid(PI), 0.0)?;
    let mut product_state = DMatrix::<Complex64>::zeros(2, 2);
    for m in 0..2 {
        for n in 0..2 {
            let coeff = [a1, a2];
            product_state[(m, n)] = coeff[m] * coeff[n];
        }
    }
    let operator_same_settings = chsh_operator_oracle(
        &product_state,
        &vector_at_max,
        &vector_at_max,
        &vector_at_max,
        &vector_at_max,
        spec.n_trunc,
    )?;

    let mut bell_state = DMatrix::<Complex64>::zeros(2, 2);
    let half = Complex64::new(0.5f64.sqrt(), 0.0);
    bell_state[(0, 0)] = half;
    bell_state[(1, 1)] = half;
    let tsirelson = chsh_operator_oracle(
        &bell_state,
        &MeasurementVector::new(FRAC_PI_2, 0.0)?,
        &MeasurementVector::new(0.0, 0.0)?,
        &MeasurementVector::new(PI / 4.0, 0.0)?,
        &MeasurementVector::new(3.0 * PI / 4.0, 0.0)?,
        spec.n_trunc,
    )?;

    let mut rng = BELL_RNG_SEED;
    let mut bound_max = 0.0f64;
    for _ in 0..BELL_RANDOM_STATES {
        let state = random_low_state(&mut rng);
        let v = chsh_operator_oracle(
            &state,
            &vector_at_max,
            &vector_at_max,
            &vector_at_max,
            &vector_at_max,
            spec.n_trunc,
        )?;
        bound_max = bound_max.max(v.abs());
    }

    let oracle_rows = vec![
        vec!["closed_form_max_theta".to_string(), fmt_float(refined.theta)],
        vec!["closed_form_max_alpha2".to_string(), fmt_float(refined.alpha2)],
        vec!["closed_form_max_value".to_string(), fmt_float(refined.value)],
        vec!["general_formula_at_max".to_string(), fmt_float(general_at_max)],
        vec![
            "operator_same_settings_at_max".to_string(),
            fmt_float(operator_same_settings),
        ],
        vec!["operator_tsirelson".to_string(), fmt_float(tsirelson)],
        vec!["random_state_bound_max".to_string(), fmt_float(bound_max)],
        vec![
            "discrepancy_general_minus_closed".to_string(),
            fmt_float(general_at_max - refined.value),
        ],
    ];
    write_table(&oracle_path, &["quantity", "value"], &oracle_rows)?;
    Ok(vec![scan_path, oracle_path])
}

/// `validate`: full- vs effective-model agreement per port pair plus the
/// elimination validity ratios.
fn validate_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let p = cfg
        .physical
        .as_ref()
        .ok_or_else(|| CliError::Config("validate requires a [physical] section".into()))?;
    let path = output_path(cfg)?;
    let (_, lm) = pipeline(p)?;
    let omegas = grid_points(cfg, &eliminate(&lm)?);
    let report = compare_models(&lm, &omegas)?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    for pair in &report.pairs {
        let key = pair_name(pair.out_port, pair.in_port);
        let metrics: [(&str, f64); 7] = [
            ("max_abs_dev", pair.max_abs_dev),
            ("max_rel_dev", pair.max_rel_dev),
            ("full_peak_omega", pair.full_peak_omega),
            ("full_peak", pair.full_peak),
            ("eff_peak_omega", pair.eff_peak_omega),
            ("eff_peak", pair.eff_peak),
            ("peak_rel_dev", pair.peak_rel_dev),
        ];
        for (kind, value) in metrics {
            rows.push(vec![kind.to_string(), key.clone(), fmt_float(value)]);
        }
    }
    validity_rows(&mut rows, &report.validity, "validity");
    write_table(&path, &["kind", "key", "value"], &rows)?;
    Ok(vec![path])
}

/// `circulator-search`: loop-phase optima of the matched-magnitude device.
fn circulator_search_cmd(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let (couplings, rates) = cfg.phenomenological.as_ref().ok_or_else(|| {
        CliError::Config("circulator-search requires a [phenomenological] section".into())
    })?;
    let path = output_path(cfg)?;
    let points = find_circulator_point(couplings, rates)?;
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|pt| {
            vec![
                fmt_float(pt.loop_phase),
                fmt_float(pt.magnitude),
                fmt_float(pt.omega),
                fmt_float(pt.t_forward),
                fmt_float(pt.t_backward),
                fmt_float(pt.isolation_db),
            ]
        })
        .collect();
    write_table(
        &path,
        &["loop_phase", "magnitude", "omega", "t_forward", "t_backward", "isolation_db"],
        &rows,
    )?;
    Ok(vec![path])
}
