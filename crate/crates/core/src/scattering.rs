//! Frequency-domain scattering of the effective three-mode model.
//!
//! The reduced model for (â₂, b̂₁, b̂₂) is written compactly as
//! Q̇ = −M·Q + L·Q_in with the input-output relation Q_out = L·Q − Q_in,
//! giving the scattering matrix Γ(ω) = L(M − iωI)⁻¹L − I and power
//! transmission T[out][in] = |Γ[out][in]|². Port order is [a₂, b₁, b₂];
//! rows are output ports and columns input ports.

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::elimination::{EffectiveModel, ModelSource};
use crate::error::{ModelError, Result};
use crate::model::IM;

/// Port labels in matrix order: fiber cavity output, then the two mechanics.
pub const PORT_NAMES: [&str; 3] = ["a2", "b1", "b2"];

/// Resolves a port label to its matrix index.
pub fn port_index(name: &str) -> Result<usize> {
    PORT_NAMES
        .iter()
        .position(|p| *p == name)
        .ok_or_else(|| ModelError::UnknownName {
            name: name.to_string(),
            valid: PORT_NAMES.iter().map(|p| p.to_string()).collect(),
        })
}

/// Magnitude/phase parameterization of the effective couplings:
/// G′_j = G_{j0}·e^{−iθ_j} and V₁ = V₀·e^{−iθ₃} = V₂*.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhenomenologicalCouplings {
    pub g10: f64,
    pub g20: f64,
    pub v0: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
}

fn fold_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative inputs.
    if t >= TAU {
        t - TAU
    } else {
        t
    }
}

impl PhenomenologicalCouplings {
    pub fn validate(&self) -> Result<()> {
        for (name, mag) in [("g10", self.g10), ("g20", self.g20), ("v0", self.v0)] {
            if !(mag.is_finite() && mag >= 0.0) {
                return Err(ModelError::Domain(format!(
                    "coupling magnitude {name} must be finite and nonnegative, got {mag}"
                )));
            }
        }
        for (name, theta) in [
            ("theta1", self.theta1),
            ("theta2", self.theta2),
            ("theta3", self.theta3),
        ] {
            if !theta.is_finite() {
                return Err(ModelError::Domain(format!(
                    "phase {name} must be finite, got {theta}"
                )));
            }
        }
        Ok(())
    }

    /// Same couplings with all phases folded into [0, 2π).
    pub fn normalized(&self) -> Self {
        Self {
            theta1: fold_angle(self.theta1),
            theta2: fold_angle(self.theta2),
            theta3: fold_angle(self.theta3),
            ..*self
        }
    }

    /// The gauge-invariant accumulated phase θ₁ + θ₃ − θ₂ around the
    /// three-mode loop, folded into [0, 2π). This is the only phase
    /// combination that affects transmission magnitudes.
    pub fn loop_phase(&self) -> f64 {
        fold_angle(self.theta1 + self.theta3 - self.theta2)
    }
}

/// The six real frequencies/rates of the effective model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveRates {
    pub delta_eff: f64,
    pub omega_eff1: f64,
    pub omega_eff2: f64,
    pub kappa_eff: f64,
    pub gamma_eff1: f64,
    pub gamma_eff2: f64,
}

impl EffectiveRates {
    pub fn of(em: &EffectiveModel) -> Self {
        Self {
            delta_eff: em.delta_eff,
            omega_eff1: em.omega_eff1,
            omega_eff2: em.omega_eff2,
            kappa_eff: em.kappa_eff,
            gamma_eff1: em.gamma_eff1,
            gamma_eff2: em.gamma_eff2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("delta_eff", self.delta_eff),
            ("omega_eff1", self.omega_eff1),
            ("omega_eff2", self.omega_eff2),
        ] {
            if !value.is_finite() {
                return Err(ModelError::Domain(format!(
                    "effective frequency {name} must be finite, got {value}"
                )));
            }
        }
        for (name, rate) in [
            ("kappa_eff", self.kappa_eff),
            ("gamma_eff1", self.gamma_eff1),
            ("gamma_eff2", self.gamma_eff2),
        ] {
            if !(rate.is_finite() && rate > 0.0) {
                return Err(ModelError::Domain(format!(
                    "effective rate {name} must be positive, got {rate}"
                )));
            }
        }
        Ok(())
    }
}

/// Builds an effective model directly from measured magnitudes and phases
/// with the Hermitian closure G″_j = G′_j* and V₂ = V₁*.
pub fn phenomenological_model(
    pc: &PhenomenologicalCouplings,
    rates: &EffectiveRates,
) -> Result<EffectiveModel> {
    pc.validate()?;
    rates.validate()?;
    let gp1 = Complex64::from_polar(pc.g10, -pc.theta1);
    let gp2 = Complex64::from_polar(pc.g20, -pc.theta2);
    let v1 = Complex64::from_polar(pc.v0, -pc.theta3);
    Ok(EffectiveModel {
        delta_eff: rates.delta_eff,
        omega_eff1: rates.omega_eff1,
        omega_eff2: rates.omega_eff2,
        kappa_eff: rates.kappa_eff,
        gamma_eff1: rates.gamma_eff1,
        gamma_eff2: rates.gamma_eff2,
        gp1,
        gp2,
        gpp1: gp1.conj(),
        gpp2: gp2.conj(),
        v1,
        v2: v1.conj(),
        source: ModelSource::Phenomenological,
    })
}

/// Drift matrix M and damping square roots L of the three-mode model.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMatrix {
    pub m: Matrix3<Complex64>,
    pub l: Vector3<f64>,
}

/// Assembles M and L from the effective model.
pub fn build_m(em: &EffectiveModel) -> Result<CoefficientMatrix> {
    for (name, rate) in [
        ("kappa_eff", em.kappa_eff),
        ("gamma_eff1", em.gamma_eff1),
        ("gamma_eff2", em.gamma_eff2),
    ] {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(ModelError::Domain(format!(
                "effective rate {name} must be positive, got {rate}"
            )));
        }
    }
    let half = Complex64::new(0.5, 0.0);
    let m = Matrix3::new(
        half * em.kappa_eff + IM * em.delta_eff,
        -IM * em.gp1,
        -IM * em.gp2,
        -IM * em.gpp1,
        half * em.gamma_eff1 + IM * em.omega_eff1,
        -IM * em.v1,
        -IM * em.gpp2,
        -IM * em.v2,
        half * em.gamma_eff2 + IM * em.omega_eff2,
    );
    let l = Vector3::new(
        em.kappa_eff.sqrt(),
        em.gamma_eff1.sqrt(),
        em.gamma_eff2.sqrt(),
    );
    Ok(CoefficientMatrix { m, l })
}

/// Scattering matrix Γ(ω) = L(M − iωI)⁻¹L − I.
pub fn gamma_at(cm: &CoefficientMatrix, omega: f64) -> Result<Matrix3<Complex64>> {
    if !omega.is_finite() {
        return Err(ModelError::Domain(format!(
            "probe frequency must be finite, got {omega}"
        )));
    }
    let a = cm.m - Matrix3::identity() * (IM * omega);
    let inv = a.try_inverse().ok_or_else(|| {
        ModelError::Singular(format!("drift matrix M - i*omega*I is singular at omega = {omega}"))
    })?;
    let mut gamma = Matrix3::zeros();
    for p in 0..3 {
        for q in 0..3 {
            gamma[(p, q)] = cm.l[p] * inv[(p, q)] * cm.l[q];
        }
        gamma[(p, p)] -= 1.0;
    }
    Ok(gamma)
}

/// Power transmission T[out][in] = |Γ[out][in]|².
pub fn transmission(gamma: &Matrix3<Complex64>) -> [[f64; 3]; 3] {
    let mut t = [[0.0; 3]; 3];
    for p in 0..3 {
        for q in 0..3 {
            t[p][q] = gamma[(p, q)].norm_sqr();
        }
    }
    t
}

/// Per-frequency Γ and T over a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionSpectrum {
    pub omegas: Vec<f64>,
    pub gammas: Vec<Matrix3<Complex64>>,
    pub t: Vec<[[f64; 3]; 3]>,
}

/// Validates a frequency grid: nonempty, finite, strictly increasing.
pub fn check_grid(omegas: &[f64]) -> Result<()> {
    if omegas.is_empty() {
        return Err(ModelError::Domain("frequency grid is empty".into()));
    }
    if let Some(bad) = omegas.iter().find(|w| !w.is_finite()) {
        return Err(ModelError::Domain(format!(
            "frequency grid contains a non-finite value {bad}"
        )));
    }
    if let Some(idx) = omegas.windows(2).position(|w| w[1] <= w[0]) {
        return Err(ModelError::Domain(format!(
            "frequency grid must be strictly increasing; violated between indices {idx} and {}",
            idx + 1
        )));
    }
    Ok(())
}

/// Uniform grid of `n` points over [min, max] inclusive.
pub fn linspace(min: f64, max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let step = (max - min) / (n - 1) as f64;
            (0..n).map(|i| min + step * i as f64).collect()
        }
    }
}

/// Default 2001-point grid centered on the mean of (Δ_eff, ω_eff1, ω_eff2)
/// spanning ±5 times the largest effective linewidth.
pub fn default_grid(em: &EffectiveModel) -> Vec<f64> {
    let center = (em.delta_eff + em.omega_eff1 + em.omega_eff2) / 3.0;
    let hw = 5.0 * em.kappa_eff.max(em.gamma_eff1).max(em.gamma_eff2);
    linspace(center - hw, center + hw, 2001)
}

/// Evaluates Γ and T on the grid.
pub fn spectrum(em: &EffectiveModel, omegas: &[f64]) -> Result<TransmissionSpectrum> {
    check_grid(omegas)?;
    let cm = build_m(em)?;
    let mut gammas = Vec::with_capacity(omegas.len());
    let mut t = Vec::with_capacity(omegas.len());
    for (idx, &omega) in omegas.iter().enumerate() {
        let gamma = gamma_at(&cm, omega).map_err(|e| match e {
            ModelError::Singular(msg) => {
                ModelError::Singular(format!("{msg} (grid index {idx})"))
            }
            other => other,
        })?;
        t.push(transmission(&gamma));
        gammas.push(gamma);
    }
    Ok(TransmissionSpectrum { omegas: omegas.to_vec(), gammas, t })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumKind {
    Maximum,
    Minimum,
}

/// Location and value of a scanned extremum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub omega: f64,
    pub value: f64,
}

const COARSE_POINTS: usize = 2001;
const REFINE_TOL: f64 = 1e-10;

/// Coarse scan plus golden-section refinement of a scalar objective over a
/// closed interval. Tracks the best evaluated point so the result is never
/// worse than the coarse-grid optimum.
pub(crate) fn scan_extremum(
    f: &dyn Fn(f64) -> Result<f64>,
    window: (f64, f64),
    n_coarse: usize,
    kind: ExtremumKind,
    tol: f64,
) -> Result<Extremum> {
    let (wmin, wmax) = window;
    if !(wmin.is_finite() && wmax.is_finite() && wmin <= wmax) {
        return Err(ModelError::Domain(format!(
            "scan window must be a finite nonempty interval, got [{wmin}, {wmax}]"
        )));
    }
    let sign = match kind {
        ExtremumKind::Maximum => -1.0,
        ExtremumKind::Minimum => 1.0,
    };
    let mut best = Extremum { omega: wmin, value: f(wmin)? };
    let mut best_idx = 0usize;
    let grid = linspace(wmin, wmax, n_coarse);
    for (idx, &omega) in grid.iter().enumerate().skip(1) {
        let value = f(omega)?;
        if sign * value < sign * best.value {
            best = Extremum { omega, value };
            best_idx = idx;
        }
    }
    if grid.len() < 2 {
        return Ok(best);
    }
    let mut lo = grid[best_idx.saturating_sub(1)];
    let mut hi = grid[(best_idx + 1).min(grid.len() - 1)];
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - gr * (hi - lo);
    let mut x2 = lo + gr * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let track = |omega: f64, value: f64, best: &mut Extremum| {
        if sign * value < sign * best.value {
            *best = Extremum { omega, value };
        }
    };
    track(x1, f1, &mut best);
    track(x2, f2, &mut best);
    while hi - lo > tol {
        if sign * f1 < sign * f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = f(x1)?;
            track(x1, f1, &mut best);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = f(x2)?;
            track(x2, f2, &mut best);
        }
    }
    Ok(best)
}

/// Finds the extremum of T[out][in](ω) over a frequency window by coarse
/// scan (2001 points) plus golden-section refinement to |Δω| ≤ 1e−10.
pub fn extremum_scan(
    em: &EffectiveModel,
    out_port: usize,
    in_port: usize,
    window: (f64, f64),
    kind: ExtremumKind,
) -> Result<Extremum> {
    for port in [out_port, in_port] {
        if port >= 3 {
            return Err(ModelError::Domain(format!(
                "port index {port} out of range; ports are {}",
                PORT_NAMES.join(", ")
            )));
        }
    }
    let cm = build_m(em)?;
    let f = move |omega: f64| -> Result<f64> {
        Ok(gamma_at(&cm, omega)?[(out_port, in_port)].norm_sqr())
    };
    scan_extremum(&f, window, COARSE_POINTS, kind, REFINE_TOL)
}

/// Default extremum-search window: the spectrum grid span widened by the
/// coupling magnitudes so split normal modes stay inside the window.
pub fn default_window(em: &EffectiveModel) -> (f64, f64) {
    let center = (em.delta_eff + em.omega_eff1 + em.omega_eff2) / 3.0;
    let max_rate = em.kappa_eff.max(em.gamma_eff1).max(em.gamma_eff2);
    let max_coupling = [em.gp1, em.gp2, em.gpp1, em.gpp2, em.v1, em.v2]
        .iter()
        .map(|c| c.norm())
        .fold(0.0f64, f64::max);
    let hw = 5.0 * max_rate + 3.0 * max_coupling;
    (center - hw, center + hw)
}

/// Scalar observables a sweep can tabulate: frequency-domain extrema of any
/// transmission entry, or one of the effective frequencies/rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Extremum { kind: ExtremumKind, out_port: usize, in_port: usize },
    Field(FieldMetric),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldMetric {
    DeltaEff,
    OmegaEff1,
    OmegaEff2,
    KappaEff,
    GammaEff1,
    GammaEff2,
}

const FIELD_METRIC_NAMES: [(&str, FieldMetric); 6] = [
    ("delta_eff", FieldMetric::DeltaEff),
    ("omega_eff1", FieldMetric::OmegaEff1),
    ("omega_eff2", FieldMetric::OmegaEff2),
    ("kappa_eff", FieldMetric::KappaEff),
    ("gamma_eff1", FieldMetric::GammaEff1),
    ("gamma_eff2", FieldMetric::GammaEff2),
];

/// All recognized metric names, in listing order.
pub fn metric_names() -> Vec<String> {
    let mut names = Vec::with_capacity(24);
    for kind in ["Max", "Min"] {
        for out in PORT_NAMES {
            for inp in PORT_NAMES {
                names.push(format!("{kind}T_{out}{inp}"));
            }
        }
    }
    names.extend(FIELD_METRIC_NAMES.iter().map(|(n, _)| n.to_string()));
    names
}

/// Parses a metric name such as `MaxT_a2b1`, `MinT_b1a2`, or `kappa_eff`.
pub fn parse_metric(name: &str) -> Result<Metric> {
    let unknown = || ModelError::UnknownName { name: name.to_string(), valid: metric_names() };
    for (kind_name, kind) in [("Max", ExtremumKind::Maximum), ("Min", ExtremumKind::Minimum)] {
        if let Some(ports) = name.strip_prefix(kind_name).and_then(|r| r.strip_prefix("T_")) {
            if ports.len() == 4 {
                let out_port = PORT_NAMES.iter().position(|p| *p == &ports[..2]);
                let in_port = PORT_NAMES.iter().position(|p| *p == &ports[2..]);
                if let (Some(out_port), Some(in_port)) = (out_port, in_port) {
                    return Ok(Metric::Extremum { kind, out_port, in_port });
                }
            }
            return Err(unknown());
        }
    }
    FIELD_METRIC_NAMES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, fm)| Metric::Field(*fm))
        .ok_or_else(unknown)
}

/// Evaluates a metric on one effective model; `window` overrides the
/// default extremum-search window.
pub fn eval_metric(em: &EffectiveModel, metric: Metric, window: Option<(f64, f64)>) -> Result<f64> {
    match metric {
        Metric::Field(fm) => Ok(match fm {
            FieldMetric::DeltaEff => em.delta_eff,
            FieldMetric::OmegaEff1 => em.omega_eff1,
            FieldMetric::OmegaEff2 => em.omega_eff2,
            FieldMetric::KappaEff => em.kappa_eff,
            FieldMetric::GammaEff1 => em.gamma_eff1,
            FieldMetric::GammaEff2 => em.gamma_eff2,
        }),
        Metric::Extremum { kind, out_port, in_port } => {
            let window = window.unwrap_or_else(|| default_window(em));
            Ok(extremum_scan(em, out_port, in_port, window, kind)?.value)
        }
    }
}

/// One named sweep axis with an inclusive uniform range.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl SweepAxis {
    fn values(&self) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(ModelError::Domain(format!(
                "sweep axis {} must have at least one point",
                self.name
            )));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(ModelError::Domain(format!(
                "sweep axis {} has a non-finite range [{}, {}]",
                self.name, self.start, self.stop
            )));
        }
        Ok(linspace(self.start, self.stop, self.count))
    }
}

/// Base model a sweep perturbs: a fixed effective model, or the
/// phenomenological parameterization (magnitudes, phases, rates).
#[derive(Debug, Clone, PartialEq)]
pub enum SweepTemplate {
    Effective(EffectiveModel),
    Phenomenological { couplings: PhenomenologicalCouplings, rates: EffectiveRates },
}

const EFFECTIVE_AXIS_NAMES: [&str; 6] = [
    "delta_eff",
    "omega_eff1",
    "omega_eff2",
    "kappa_eff",
    "gamma_eff1",
    "gamma_eff2",
];

const PHENOMENOLOGICAL_AXIS_NAMES: [&str; 12] = [
    "g10",
    "g20",
    "v0",
    "theta1",
    "theta2",
    "theta3",
    "delta_eff",
    "omega_eff1",
    "omega_eff2",
    "kappa_eff",
    "gamma_eff1",
    "gamma_eff2",
];

fn set_rate_field(rates: &mut EffectiveRates, name: &str, value: f64) -> bool {
    match name {
        "delta_eff" => rates.delta_eff = value,
        "omega_eff1" => rates.omega_eff1 = value,
        "omega_eff2" => rates.omega_eff2 = value,
        "kappa_eff" => rates.kappa_eff = value,
        "gamma_eff1" => rates.gamma_eff1 = value,
        "gamma_eff2" => rates.gamma_eff2 = value,
        _ => return false,
    }
    true
}

fn set_coupling_field(pc: &mut PhenomenologicalCouplings, name: &str, value: f64) -> bool {
    match name {
        "g10" => pc.g10 = value,
        "g20" => pc.g20 = value,
        "v0" => pc.v0 = value,
        "theta1" => pc.theta1 = value,
        "theta2" => pc.theta2 = value,
        "theta3" => pc.theta3 = value,
        _ => return false,
    }
    true
}

impl SweepTemplate {
    fn axis_names(&self) -> &'static [&'static str] {
        match self {
            SweepTemplate::Effective(_) => &EFFECTIVE_AXIS_NAMES,
            SweepTemplate::Phenomenological { .. } => &PHENOMENOLOGICAL_AXIS_NAMES,
        }
    }

    fn instantiate(&self, assignments: &[(&str, f64)]) -> Result<EffectiveModel> {
        match self {
            SweepTemplate::Effective(em) => {
                let mut em = em.clone();
                for (name, value) in assignments {
                    let ok = match *name {
                        "delta_eff" => {
                            em.delta_eff = *value;
                            true
                        }
                        "omega_eff1" => {
                            em.omega_eff1 = *value;
                            true
                        }
                        "omega_eff2" => {
                            em.omega_eff2 = *value;
                            true
                        }
                        "kappa_eff" => {
                            em.kappa_eff = *value;
                            true
                        }
                        "gamma_eff1" => {
                            em.gamma_eff1 = *value;
                            true
                        }
                        "gamma_eff2" => {
                            em.gamma_eff2 = *value;
                            true
                        }
                        _ => false,
                    };
                    debug_assert!(ok, "axis name validated before instantiation");
                }
                Ok(em)
            }
            SweepTemplate::Phenomenological { couplings, rates } => {
                let mut pc = *couplings;
                let mut rates = *rates;
                for (name, value) in assignments {
                    let ok = set_coupling_field(&mut pc, name, *value)
                        || set_rate_field(&mut rates, name, *value);
                    debug_assert!(ok, "axis name validated before instantiation");
                }
                phenomenological_model(&pc, &rates)
            }
        }
    }
}

/// Row-major metric values over a 1- or 2-axis rectangular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub axis_names: Vec<String>,
    pub axis_values: Vec<Vec<f64>>,
    /// Metric values; with two axes the first axis is the slow (outer) index.
    pub values: Vec<f64>,
}

/// Tabulates a named metric over 1–2 named parameter axes of the template.
/// Ordering is row-major by axis declaration order and independent of any
/// evaluation schedule.
pub fn sweep(template: &SweepTemplate, axes: &[SweepAxis], metric_name: &str) -> Result<SweepGrid> {
    if axes.is_empty() || axes.len() > 2 {
        return Err(ModelError::Domain(format!(
            "sweep takes one or two axes, got {}",
            axes.len()
        )));
    }
    let metric = parse_metric(metric_name)?;
    let valid = template.axis_names();
    for axis in axes {
        if !valid.contains(&axis.name.as_str()) {
            return Err(ModelError::UnknownName {
                name: axis.name.clone(),
                valid: valid.iter().map(|n| n.to_string()).collect(),
            });
        }
    }
    if axes.len() == 2 && axes[0].name == axes[1].name {
        return Err(ModelError::Domain(format!(
            "sweep axes must be distinct, both are {}",
            axes[0].name
        )));
    }
    let axis_values: Vec<Vec<f64>> = axes.iter().map(|a| a.values()).collect::<Result<_>>()?;
    let mut values = Vec::new();
    match axis_values.as_slice() {
        [v1] => {
            values.reserve(v1.len());
            for &x1 in v1 {
                let em = template.instantiate(&[(axes[0].name.as_str(), x1)])?;
                values.push(eval_metric(&em, metric, None)?);
            }
        }
        [v1, v2] => {
            values.reserve(v1.len() * v2.len());
            for &x1 in v1 {
                for &x2 in v2 {
                    let em = template.instantiate(&[
                        (axes[0].name.as_str(), x1),
                        (axes[1].name.as_str(), x2),
                    ])?;
                    values.push(eval_metric(&em, metric, None)?);
                }
            }
        }
        _ => unreachable!("axis count validated above"),
    }
    Ok(SweepGrid {
        axis_names: axes.iter().map(|a| a.name.clone()).collect(),
        axis_values,
        values,
    })
}

/// One isolation optimum of the matched circulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirculatorPoint {
    pub loop_phase: f64,
    pub magnitude: f64,
    pub omega: f64,
    pub t_forward: f64,
    pub t_backward: f64,
    pub isolation_db: f64,
}

const PHASE_COARSE_POINTS: usize = 720;
const BACKWARD_COARSE_POINTS: usize = 801;

fn circulator_objective(
    m: f64,
    rates: &EffectiveRates,
    loop_phase: f64,
) -> Result<(f64, f64, f64, f64)> {
    let pc = PhenomenologicalCouplings {
        g10: m,
        g20: m,
        v0: m,
        theta1: loop_phase,
        theta2: 0.0,
        theta3: 0.0,
    };
    let em = phenomenological_model(&pc, rates)?;
    let cm = build_m(&em)?;
    let center = (rates.delta_eff + rates.omega_eff1 + rates.omega_eff2) / 3.0;
    let hw = 5.0 * rates.kappa_eff.max(rates.gamma_eff1).max(rates.gamma_eff2) + 3.0 * m;
    let backward = |omega: f64| -> Result<f64> { Ok(gamma_at(&cm, omega)?[(1, 0)].norm_sqr()) };
    let min_bwd = scan_extremum(
        &backward,
        (center - hw, center + hw),
        BACKWARD_COARSE_POINTS,
        ExtremumKind::Minimum,
        1e-12,
    )?;
    let gamma = gamma_at(&cm, min_bwd.omega)?;
    let t_forward = gamma[(0, 1)].norm_sqr();
    let t_backward = gamma[(1, 0)].norm_sqr();
    let isolation_db = 10.0 * (t_forward / t_backward.max(f64::MIN_POSITIVE)).log10();
    Ok((min_bwd.omega, t_forward, t_backward, isolation_db))
}

/// Searches the matched circulator (G₁₀ = G₂₀ = V₀) for the loop phases
/// maximizing isolation 10·log₁₀(T_fwd/T_bwd) between ports a₂ and b₁ at a
/// common probe frequency. Returns the distinct optima (the two circulation
/// directions) sorted by loop phase.
///
/// The search fixes the gauge θ₁ = Θ, θ₂ = θ₃ = 0; by loop-phase gauge
/// invariance this loses no generality.
pub fn find_circulator_point(
    pc: &PhenomenologicalCouplings,
    rates: &EffectiveRates,
) -> Result<Vec<CirculatorPoint>> {
    pc.validate()?;
    rates.validate()?;
    let m = pc.g10;
    let scale = m.max(pc.g20).max(pc.v0);
    if scale <= 0.0 {
        return Err(ModelError::Domain(
            "circulator search requires a positive coupling magnitude".into(),
        ));
    }
    if (pc.g10 - pc.g20).abs() > 1e-12 * scale || (pc.g10 - pc.v0).abs() > 1e-12 * scale {
        return Err(ModelError::Domain(format!(
            "circulator search requires matched magnitudes G10 = G20 = V0, got ({}, {}, {})",
            pc.g10, pc.g20, pc.v0
        )));
    }

    let step = TAU / PHASE_COARSE_POINTS as f64;
    let mut iso = Vec::with_capacity(PHASE_COARSE_POINTS);
    for k in 0..PHASE_COARSE_POINTS {
        let (_, _, _, isolation_db) = circulator_objective(m, rates, step * k as f64)?;
        iso.push(isolation_db);
    }

    let n = iso.len();
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&k| iso[k] >= iso[(k + n - 1) % n] && iso[k] >= iso[(k + 1) % n])
        .collect();
    peaks.sort_by(|&a, &b| iso[b].total_cmp(&iso[a]));
    let mut selected: Vec<usize> = Vec::new();
    for k in peaks {
        let distinct = selected.iter().all(|&s| {
            let d = (k as isize - s as isize).rem_euclid(n as isize) as usize;
            d.min(n - d) > 2
        });
        if distinct {
            selected.push(k);
        }
        if selected.len() == 2 {
            break;
        }
    }

    let mut points = Vec::with_capacity(selected.len());
    for k in selected {
        let lo = step * (k as f64 - 1.0);
        let hi = step * (k as f64 + 1.0);
        let objective =
            |theta: f64| -> Result<f64> { Ok(circulator_objective(m, rates, theta)?.3) };
        let best = scan_extremum(&objective, (lo, hi), 3, ExtremumKind::Maximum, 1e-11)?;
        let (omega, t_forward, t_backward, isolation_db) =
            circulator_objective(m, rates, best.omega)?;
        points.push(CirculatorPoint {
            loop_phase: fold_angle(best.omega),
            magnitude: m,
            omega,
            t_forward,
            t_backward,
            isolation_db,
        });
    }
    points.sort_by(|a, b| a.loop_phase.total_cmp(&b.loop_phase));
    Ok(points)
}

/// Drift eigenvalues and the stability verdict of a coefficient matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub eigenvalues: Vec<Complex64>,
    /// Smallest real part; the slowest decay rate when positive.
    pub margin: f64,
    pub stable: bool,
}

/// Eigenvalues of a square complex matrix.
pub(crate) fn complex_eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let eigs = m.clone().eigenvalues().ok_or_else(|| {
        ModelError::Singular("eigenvalue computation did not converge".into())
    })?;
    Ok(eigs.iter().copied().collect())
}

/// Eigenvalues of M; the frequency-domain steady state exists iff every
/// eigenvalue has a positive real part (drift Q̇ = −M·Q decays).
pub fn stability_check(cm: &CoefficientMatrix) -> Result<StabilityReport> {
    let m = DMatrix::from_fn(3, 3, |i, j| cm.m[(i, j)]);
    let eigenvalues = complex_eigenvalues(&m)?;
    let margin = eigenvalues.iter().map(|e| e.re).fold(f64::INFINITY, f64::min);
    Ok(StabilityReport { eigenvalues, margin, stable: margin > 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn equal_rates(rate: f64) -> EffectiveRates {
        EffectiveRates {
            delta_eff: 1.0,
            omega_eff1: 1.0,
            omega_eff2: 1.0,
            kappa_eff: rate,
            gamma_eff1: rate,
            gamma_eff2: rate,
        }
    }

    fn sample_pc(theta1: f64, theta2: f64, theta3: f64) -> PhenomenologicalCouplings {
        PhenomenologicalCouplings { g10: 0.02, g20: 0.02, v0: 0.02, theta1, theta2, theta3 }
    }

    fn max_t_dev(t1: &[[f64; 3]; 3], t2: &[[f64; 3]; 3]) -> f64 {
        let mut dev = 0.0f64;
        for p in 0..3 {
            for q in 0..3 {
                dev = dev.max((t1[p][q] - t2[p][q]).abs());
            }
        }
        dev
    }

    #[test]
    fn coefficient_matrix_entries_and_hermitian_sum() {
        let pc = sample_pc(0.7, 1.9, 4.1);
        let em = phenomenological_model(&pc, &equal_rates(0.05)).unwrap();
        let cm = build_m(&em).unwrap();
        assert_eq!(cm.m[(0, 0)], Complex64::new(0.025, 1.0));
        assert_eq!(cm.m[(0, 1)], -IM * Complex64::from_polar(0.02, -0.7));
        assert_eq!(cm.m[(1, 0)], -IM * Complex64::from_polar(0.02, 0.7));
        assert_eq!(cm.m[(1, 2)], -IM * Complex64::from_polar(0.02, -4.1));
        assert_eq!(cm.l[0], 0.05f64.sqrt());
        // Hermitian closure: M + M† is exactly the diagonal damping matrix.
        let sum = cm.m + cm.m.adjoint();
        for p in 0..3 {
            for q in 0..3 {
                let expect =
                    if p == q { Complex64::new(0.05, 0.0) } else { Complex64::ZERO };
                assert_eq!(sum[(p, q)], expect);
            }
        }
    }

    #[test]
    fn nonpositive_rate_rejected() {
        let mut em = phenomenological_model(&sample_pc(0.0, 0.0, 0.0), &equal_rates(0.05)).unwrap();
        em.kappa_eff = 0.0;
        assert!(matches!(build_m(&em), Err(ModelError::Domain(_))));
    }

    #[test]
    fn decoupled_mode_matches_scalar_formula() {
        let pc = PhenomenologicalCouplings {
            g10: 0.0,
            g20: 0.0,
            v0: 0.0,
            theta1: 0.0,
            theta2: 0.0,
            theta3: 0.0,
        };
        let rates = EffectiveRates { delta_eff: 1.3, ..equal_rates(0.04) };
        let em = phenomenological_model(&pc, &rates).unwrap();
        let cm = build_m(&em).unwrap();
        for omega in [0.9, 1.3, 1.71] {
            let gamma = gamma_at(&cm, omega).unwrap();
            let expect = 0.04 / Complex64::new(0.02, 1.3 - omega) - 1.0;
            assert!((gamma[(0, 0)] - expect).norm() < 1e-14);
            for p in 0..3 {
                for q in 0..3 {
                    if p != q {
                        assert_eq!(gamma[(p, q)], Complex64::ZERO);
                    }
                }
            }
        }
        // On resonance the reflection is total with a phase flip.
        let gamma = gamma_at(&cm, 1.3).unwrap();
        assert!((gamma[(0, 0)] - Complex64::ONE).norm() < 1e-14);
    }

    #[test]
    fn hermitian_config_is_unitary_with_unit_row_sums() {
        let pc = sample_pc(2.1, 0.4, 5.5);
        let rates = EffectiveRates {
            delta_eff: 0.98,
            omega_eff1: 1.0,
            omega_eff2: 1.03,
            kappa_eff: 0.05,
            gamma_eff1: 0.02,
            gamma_eff2: 0.07,
        };
        let em = phenomenological_model(&pc, &rates).unwrap();
        let cm = build_m(&em).unwrap();
        for omega in [0.8, 0.99, 1.0, 1.02, 1.4] {
            let gamma = gamma_at(&cm, omega).unwrap();
            let resid = gamma.adjoint() * gamma - Matrix3::identity();
            assert!(resid.iter().all(|z| z.norm() < 1e-10), "nonunitary at omega={omega}");
            let t = transmission(&gamma);
            for row in t {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_phases_give_reciprocal_transmission() {
        let em = phenomenological_model(&sample_pc(0.0, PI, 0.0), &equal_rates(0.05)).unwrap();
        let spec = spectrum(&em, &default_grid(&em)).unwrap();
        for t in &spec.t {
            for p in 0..3 {
                for q in 0..3 {
                    assert!((t[p][q] - t[q][p]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn gauge_rephasing_preserves_transmission() {
        let base = sample_pc(1.1, 0.6, 2.8);
        let rates = equal_rates(0.03);
        let em0 = phenomenological_model(&base, &rates).unwrap();
        let cm0 = build_m(&em0).unwrap();
        for chi in [0.3, -1.7, 4.0] {
            let gauged = PhenomenologicalCouplings {
                theta1: base.theta1 + chi,
                theta3: base.theta3 - chi,
                ..base
            };
            assert!((gauged.loop_phase() - base.loop_phase()).abs() < 1e-12);
            let em1 = phenomenological_model(&gauged, &rates).unwrap();
            let cm1 = build_m(&em1).unwrap();
            for omega in [0.95, 1.0, 1.05] {
                let t0 = transmission(&gamma_at(&cm0, omega).unwrap());
                let t1 = transmission(&gamma_at(&cm1, omega).unwrap());
                assert!(max_t_dev(&t0, &t1) <= 1e-12);
            }
        }
    }

    #[test]
    fn loop_phase_reversal_transposes_transmission() {
        let pc = sample_pc(2.2, 0.9, 1.4);
        let reversed = PhenomenologicalCouplings {
            theta1: -pc.theta1,
            theta2: -pc.theta2,
            theta3: -pc.theta3,
            ..pc
        };
        let rates = equal_rates(0.05);
        let cm = build_m(&phenomenological_model(&pc, &rates).unwrap()).unwrap();
        let cm_rev = build_m(&phenomenological_model(&reversed, &rates).unwrap()).unwrap();
        for omega in [0.92, 1.0, 1.07] {
            let t = transmission(&gamma_at(&cm, omega).unwrap());
            let t_rev = transmission(&gamma_at(&cm_rev, omega).unwrap());
            for p in 0..3 {
                for q in 0..3 {
                    assert!((t[p][q] - t_rev[q][p]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn high_frequency_transmission_is_identity() {
        let em = phenomenological_model(&sample_pc(1.0, 2.0, 3.0), &equal_rates(0.05)).unwrap();
        let cm = build_m(&em).unwrap();
        let far = 1.0 + 1e4 * 0.05;
        for omega in [far, -far + 2.0] {
            let t = transmission(&gamma_at(&cm, omega).unwrap());
            for p in 0..3 {
                for q in 0..3 {
                    let expect = if p == q { 1.0 } else { 0.0 };
                    assert!((t[p][q] - expect).abs() <= 1e-4);
                }
            }
        }
    }

    #[test]
    fn grid_validation_rejects_bad_grids() {
        assert!(matches!(check_grid(&[]), Err(ModelError::Domain(_))));
        assert!(matches!(check_grid(&[0.0, 0.0, 1.0]), Err(ModelError::Domain(_))));
        assert!(matches!(check_grid(&[0.0, f64::NAN]), Err(ModelError::Domain(_))));
        assert!(check_grid(&[0.0, 0.5, 1.0]).is_ok());
    }

    #[test]
    fn extremum_finds_coupled_resonance_peak() {
        // One Hermitian coupling g between a₂ and b₁ with matched rates κ:
        // T[b1←a2](δ) = κ²g²/((κ²/4 − δ² + g²)² + κ²δ²), single peak at
        // detuning δ = 0 of height κ²g²/(κ²/4 + g²)² whenever g < κ/2.
        let (kappa, g) = (0.05, 0.02);
        let pc = PhenomenologicalCouplings {
            g10: g,
            g20: 0.0,
            v0: 0.0,
            theta1: 0.0,
            theta2: 0.0,
            theta3: 0.0,
        };
        let em = phenomenological_model(&pc, &equal_rates(kappa)).unwrap();
        let ext = extremum_scan(&em, 1, 0, (0.5, 1.5), ExtremumKind::Maximum).unwrap();
        let a = kappa * kappa / 4.0 + g * g;
        assert!((ext.omega - 1.0).abs() < 1e-6);
        assert!((ext.value - kappa * kappa * g * g / (a * a)).abs() < 1e-9);
    }

    #[test]
    fn backward_blocking_point_matches_analytic_location() {
        // Matched magnitudes equal to the common rate: the backward path
        // T[b1<-a2] vanishes at loop phase 7π/6 and probe detuning m·cos(7π/6).
        let rate = 0.05;
        let m = rate;
        let pc = PhenomenologicalCouplings {
            g10: m,
            g20: m,
            v0: m,
            theta1: 7.0 * PI / 6.0,
            theta2: 0.0,
            theta3: 0.0,
        };
        let em = phenomenological_model(&pc, &equal_rates(rate)).unwrap();
        let window = (1.0 - 0.5, 1.0 + 0.5);
        let min = extremum_scan(&em, 1, 0, window, ExtremumKind::Minimum).unwrap();
        let expect_omega = 1.0 + m * (7.0 * PI / 6.0).cos();
        assert!((min.omega - expect_omega).abs() < 1e-6);
        assert!(min.value < 1e-15);
        // Forward transmission is unity there (matched rates).
        let cm = build_m(&em).unwrap();
        let t = transmission(&gamma_at(&cm, min.omega).unwrap());
        assert!(t[0][1] > 1.0 - 1e-9);
    }

    #[test]
    fn circulator_search_finds_both_directions() {
        let rate = 0.05;
        let pc = PhenomenologicalCouplings {
            g10: rate,
            g20: rate,
            v0: rate,
            theta1: 0.0,
            theta2: 0.0,
            theta3: 0.0,
        };
        let points = find_circulator_point(&pc, &equal_rates(rate)).unwrap();
        assert_eq!(points.len(), 2);
        assert!((points[0].loop_phase - 7.0 * PI / 6.0).abs() < 0.05);
        assert!((points[1].loop_phase - 11.0 * PI / 6.0).abs() < 0.05);
        for p in &points {
            assert!(p.t_forward >= 0.99, "forward {}", p.t_forward);
            assert!(p.t_backward <= 0.01, "backward {}", p.t_backward);
            assert!(p.isolation_db > 60.0);
        }
    }

    #[test]
    fn circulator_search_rejects_mismatched_magnitudes() {
        let pc = PhenomenologicalCouplings {
            g10: 0.05,
            g20: 0.04,
            v0: 0.05,
            theta1: 0.0,
            theta2: 0.0,
            theta3: 0.0,
        };
        assert!(matches!(
            find_circulator_point(&pc, &equal_rates(0.05)),
            Err(ModelError::Domain(_))
        ));
    }

    #[test]
    fn zero_loop_phase_has_no_isolation() {
        let rate = 0.05;
        let (_, fwd, bwd, iso) = circulator_objective(rate, &equal_rates(rate), 0.0).unwrap();
        assert!((fwd - bwd).abs() <= 1e-12);
        assert!(iso.abs() <= 1e-9);
    }

    #[test]
    fn stability_margins() {
        let pc = sample_pc(1.0, 2.0, 3.0);
        let em = phenomenological_model(
            &PhenomenologicalCouplings { g10: 0.0, g20: 0.0, v0: 0.0, ..pc },
            &equal_rates(0.05),
        )
        .unwrap();
        let rep = stability_check(&build_m(&em).unwrap()).unwrap();
        assert!(rep.stable);
        assert!((rep.margin - 0.025).abs() < 1e-12);

        // Hermitian couplings keep the drift stable at any magnitude.
        let strong = PhenomenologicalCouplings { g10: 5.0, g20: 3.0, v0: 4.0, ..pc };
        let em_strong = phenomenological_model(&strong, &equal_rates(0.05)).unwrap();
        let rep = stability_check(&build_m(&em_strong).unwrap()).unwrap();
        assert!(rep.stable);

        // Constructed gain: flip the damping sign on one decoupled entry.
        let mut cm = build_m(&em).unwrap();
        cm.m[(0, 0)] = Complex64::new(-0.025, 1.0);
        let rep = stability_check(&cm).unwrap();
        assert!(!rep.stable);
        assert!(rep.margin < 0.0);
        assert_eq!(rep.eigenvalues.len(), 3);
    }

    #[test]
    fn metric_names_and_parsing() {
        let names = metric_names();
        assert_eq!(names.len(), 24);
        assert!(names.contains(&"MaxT_a2b1".to_string()));
        assert!(names.contains(&"MinT_b1a2".to_string()));
        assert!(names.contains(&"kappa_eff".to_string()));
        assert!(matches!(
            parse_metric("MaxT_a2b1"),
            Ok(Metric::Extremum { kind: ExtremumKind::Maximum, out_port: 0, in_port: 1 })
        ));
        assert!(matches!(
            parse_metric("MinT_b2b1"),
            Ok(Metric::Extremum { kind: ExtremumKind::Minimum, out_port: 2, in_port: 1 })
        ));
        assert!(matches!(parse_metric("delta_eff"), Ok(Metric::Field(FieldMetric::DeltaEff))));
        match parse_metric("MaxT_a2a9") {
            Err(ModelError::UnknownName { name, valid }) => {
                assert_eq!(name, "MaxT_a2a9");
                assert_eq!(valid.len(), 24);
            }
            other => panic!("expected unknown-name error, got {other:?}"),
        }
    }

    #[test]
    fn single_point_sweep_equals_direct_evaluation() {
        let pc = sample_pc(1.0, 0.2, 0.4);
        let rates = equal_rates(0.05);
        let template = SweepTemplate::Phenomenological { couplings: pc, rates };
        let grid = sweep(
            &template,
            &[SweepAxis { name: "theta1".into(), start: 1.0, stop: 9.0, count: 1 }],
            "MaxT_a2b1",
        )
        .unwrap();
        assert_eq!(grid.values.len(), 1);
        assert_eq!(grid.axis_values[0], vec![1.0]);
        let em = phenomenological_model(&pc, &rates).unwrap();
        let direct = eval_metric(&em, parse_metric("MaxT_a2b1").unwrap(), None).unwrap();
        assert_eq!(grid.values[0], direct);
    }

    #[test]
    fn dominant_first_coupling_transmits_regardless_of_phase() {
        // With only the a2-b1 coupling active there is no loop, so the
        // maximum transmission is phase-independent and near unity.
        let pc = PhenomenologicalCouplings {
            g10: 0.5,
            g20: 0.0,
            v0: 0.0,
            theta1: 0.0,
            theta2: 0.0,
            theta3: 0.0,
        };
        let template =
            SweepTemplate::Phenomenological { couplings: pc, rates: equal_rates(0.05) };
        let grid = sweep(
            &template,
            &[SweepAxis { name: "theta1".into(), start: 0.0, stop: TAU, count: 9 }],
            "MaxT_a2b1",
        )
        .unwrap();
        for v in &grid.values {
            assert!(*v >= 0.99);
            assert!((v - grid.values[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn two_axis_sweep_is_row_major() {
        let template = SweepTemplate::Effective(
            phenomenological_model(&sample_pc(0.3, 0.1, 0.2), &equal_rates(0.05)).unwrap(),
        );
        let grid = sweep(
            &template,
            &[
                SweepAxis { name: "delta_eff".into(), start: 0.0, stop: 1.0, count: 2 },
                SweepAxis { name: "kappa_eff".into(), start: 0.01, stop: 0.02, count: 3 },
            ],
            "delta_eff",
        )
        .unwrap();
        assert_eq!(grid.values, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let grid = sweep(
            &template,
            &[
                SweepAxis { name: "delta_eff".into(), start: 0.0, stop: 1.0, count: 2 },
                SweepAxis { name: "kappa_eff".into(), start: 0.01, stop: 0.02, count: 3 },
            ],
            "kappa_eff",
        )
        .unwrap();
        assert_eq!(grid.values, vec![0.01, 0.015, 0.02, 0.01, 0.015, 0.02]);
    }

    #[test]
    fn sweep_rejects_unknown_axis() {
        let template = SweepTemplate::Effective(
            phenomenological_model(&sample_pc(0.3, 0.1, 0.2), &equal_rates(0.05)).unwrap(),
        );
        match sweep(
            &template,
            &[SweepAxis { name: "g10".into(), start: 0.0, stop: 1.0, count: 2 }],
            "delta_eff",
        ) {
            Err(ModelError::UnknownName { name, valid }) => {
                assert_eq!(name, "g10");
                assert_eq!(valid.len(), 6);
            }
            other => panic!("expected unknown-name error, got {other:?}"),
        }
    }

    #[test]
    fn phase_folding_and_loop_phase() {
        let pc = PhenomenologicalCouplings {
            g10: 1.0,
            g20: 1.0,
            v0: 1.0,
            theta1: -0.5,
            theta2: 7.0,
            theta3: TAU,
        };
        let n = pc.normalized();
        assert!((n.theta1 - (TAU - 0.5)).abs() < 1e-15);
        assert!((n.theta2 - (7.0 - TAU)).abs() < 1e-15);
        assert_eq!(n.theta3, 0.0);
        assert!((pc.loop_phase() - (TAU - 7.5).rem_euclid(TAU)).abs() < 1e-12);
        assert_eq!(port_index("a2").unwrap(), 0);
        assert_eq!(port_index("b2").unwrap(), 2);
        assert!(matches!(port_index("a1"), Err(ModelError::UnknownName { .. })));
    }
}
