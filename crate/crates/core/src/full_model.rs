//! The unreduced four-mode model: frequency- and time-domain solutions, and
//! quantitative agreement checks against the eliminated three-mode model.
//!
//! Mode order is [a₁, a₂, b₁, b₂] with drift Q̇ = −M₄·Q + N₄·Q_in. The fiber
//! cascading correlates the two cavity inputs: the port-1 drive enters
//! cavity 1 directly and cavity 2 through the relay phase e^{−iφ}, and vice
//! versa, while the mechanical baths couple diagonally. Outputs follow the
//! per-port relation ô_out = √κ·ô − ô_in. Only the three slow ports
//! [a₂, b₁, b₂] are compared against the effective model; the fast cavity
//! acts as an internal loss channel.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix4, Vector4};
use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::elimination::{eliminate, validity_report, ValidityReport};
use crate::error::{ModelError, Result};
use crate::model::{LinearizedModel, IM};
use crate::scattering::{
    build_m, check_grid, complex_eigenvalues, gamma_at, scan_extremum, transmission,
    CoefficientMatrix, ExtremumKind, PORT_NAMES,
};

/// Indices of the slow physical ports [a₂, b₁, b₂] within the mode order.
const SLOW: [usize; 3] = [1, 2, 3];

/// Drift, input-coupling, and output-coupling matrices of the four-mode model.
#[derive(Debug, Clone, PartialEq)]
pub struct FullModel {
    pub m4: Matrix4<Complex64>,
    pub n4: Matrix4<Complex64>,
    pub lout: Vector4<f64>,
}

/// Assembles the four-mode drift and coupling matrices.
pub fn build_full(lm: &LinearizedModel) -> Result<FullModel> {
    lm.validate()?;
    let half = Complex64::new(0.5, 0.0);
    let m4 = Matrix4::new(
        half * lm.kappa1 + IM * lm.delta_c1_prime,
        -lm.cj,
        IM * lm.g1,
        IM * lm.g2,
        -lm.cj,
        half * lm.kappa2 + IM * lm.delta_c2,
        Complex64::ZERO,
        Complex64::ZERO,
        IM * lm.g1.conj(),
        Complex64::ZERO,
        half * lm.gamma1 + IM * lm.omega_m1,
        IM * lm.v,
        IM * lm.g2.conj(),
        Complex64::ZERO,
        IM * lm.v,
        half * lm.gamma2 + IM * lm.omega_m2,
    );
    // Fiber relay phase e^{−iφ}; without a fiber the cavity noises decouple.
    let relay = if lm.cj == Complex64::ZERO { Complex64::ZERO } else { lm.cj / lm.cj.norm() };
    let (sk1, sk2) = (lm.kappa1.sqrt(), lm.kappa2.sqrt());
    let (sg1, sg2) = (lm.gamma1.sqrt(), lm.gamma2.sqrt());
    let n4 = Matrix4::new(
        Complex64::new(sk1, 0.0),
        -relay * sk1,
        Complex64::ZERO,
        Complex64::ZERO,
        -relay * sk2,
        Complex64::new(sk2, 0.0),
        Complex64::ZERO,
        Complex64::ZERO,
        Complex64::ZERO,
        Complex64::ZERO,
        Complex64::new(sg1, 0.0),
        Complex64::ZERO,
        Complex64::ZERO,
        Complex64::ZERO,
        Complex64::ZERO,
        Complex64::new(sg2, 0.0),
    );
    Ok(FullModel { m4, n4, lout: Vector4::new(sk1, sk2, sg1, sg2) })
}

/// Scattering matrix between the slow ports at one probe frequency:
/// S = restrict(Lout·(M₄ − iωI)⁻¹·N₄) − I.
pub fn full_scattering_at(fm: &FullModel, omega: f64) -> Result<Matrix3<Complex64>> {
    if !omega.is_finite() {
        return Err(ModelError::Domain(format!(
            "probe frequency must be finite, got {omega}"
        )));
    }
    let a = fm.m4 - Matrix4::identity() * (IM * omega);
    let inv = a.try_inverse().ok_or_else(|| {
        ModelError::Singular(format!("drift matrix M4 - i*omega*I is singular at omega = {omega}"))
    })?;
    let x = inv * fm.n4;
    let mut s = Matrix3::zeros();
    for p in 0..3 {
        for q in 0..3 {
            s[(p, q)] = fm.lout[SLOW[p]] * x[(SLOW[p], SLOW[q])];
        }
        s[(p, p)] -= 1.0;
    }
    Ok(s)
}

/// Slow-port scattering and transmission of the four-mode model on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FullSpectrum {
    pub omegas: Vec<f64>,
    pub s: Vec<Matrix3<Complex64>>,
    pub t: Vec<[[f64; 3]; 3]>,
}

pub fn full_spectrum(fm: &FullModel, omegas: &[f64]) -> Result<FullSpectrum> {
    check_grid(omegas)?;
    let mut s_all = Vec::with_capacity(omegas.len());
    let mut t = Vec::with_capacity(omegas.len());
    for (idx, &omega) in omegas.iter().enumerate() {
        let s = full_scattering_at(fm, omega).map_err(|e| match e {
            ModelError::Singular(msg) => ModelError::Singular(format!("{msg} (grid index {idx})")),
            other => other,
        })?;
        t.push(transmission(&s));
        s_all.push(s);
    }
    Ok(FullSpectrum { omegas: omegas.to_vec(), s: s_all, t })
}

/// Agreement between the two models for one port pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairAgreement {
    pub out_port: &'static str,
    pub in_port: &'static str,
    /// Largest |T_full − T_eff| over the grid.
    pub max_abs_dev: f64,
    /// Largest relative deviation over grid points with non-negligible T.
    pub max_rel_dev: f64,
    pub full_peak_omega: f64,
    pub full_peak: f64,
    pub eff_peak_omega: f64,
    pub eff_peak: f64,
    /// |peak_full − peak_eff| / max(peak_full, peak_eff).
    pub peak_rel_dev: f64,
}

/// Full- vs effective-model agreement over a grid, with the elimination
/// validity ratios of the underlying parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub pairs: Vec<PairAgreement>,
    pub validity: ValidityReport,
}

/// Compares effective-model and full-model transmissions on a shared grid.
/// Peaks are golden-refined per model so the comparison is grid-insensitive.
pub fn compare_models(lm: &LinearizedModel, omegas: &[f64]) -> Result<ComparisonReport> {
    check_grid(omegas)?;
    let em = eliminate(lm)?;
    let cm = build_m(&em)?;
    let fm = build_full(lm)?;
    let validity = validity_report(lm)?;

    let mut t_eff = Vec::with_capacity(omegas.len());
    let mut t_full = Vec::with_capacity(omegas.len());
    for &omega in omegas {
        t_eff.push(transmission(&gamma_at(&cm, omega)?));
        t_full.push(transmission(&full_scattering_at(&fm, omega)?));
    }

    let mut pairs = Vec::with_capacity(9);
    for p in 0..3 {
        for q in 0..3 {
            let mut max_abs_dev = 0.0f64;
            let mut pair_scale = 0.0f64;
            let mut full_best = 0usize;
            let mut eff_best = 0usize;
            for i in 0..omegas.len() {
                let (tf, te) = (t_full[i][p][q], t_eff[i][p][q]);
                max_abs_dev = max_abs_dev.max((tf - te).abs());
                pair_scale = pair_scale.max(tf.max(te));
                if tf > t_full[full_best][p][q] {
                    full_best = i;
                }
                if te > t_eff[eff_best][p][q] {
                    eff_best = i;
                }
            }
            let floor = 1e-12 * pair_scale;
            let mut max_rel_dev = 0.0f64;
            for i in 0..omegas.len() {
                let (tf, te) = (t_full[i][p][q], t_eff[i][p][q]);
                let denom = tf.max(te);
                if denom > floor {
                    max_rel_dev = max_rel_dev.max((tf - te).abs() / denom);
                }
            }
            let refine = |best: usize, f: &dyn Fn(f64) -> Result<f64>| -> Result<(f64, f64)> {
                let lo = omegas[best.saturating_sub(1)];
                let hi = omegas[(best + 1).min(omegas.len() - 1)];
                let ext = scan_extremum(f, (lo, hi), 3, ExtremumKind::Maximum, 1e-12)?;
                Ok((ext.omega, ext.value))
            };
            let f_full =
                |w: f64| -> Result<f64> { Ok(full_scattering_at(&fm, w)?[(p, q)].norm_sqr()) };
            let f_eff = |w: f64| -> Result<f64> { Ok(gamma_at(&cm, w)?[(p, q)].norm_sqr()) };
            let (full_peak_omega, full_peak) = refine(full_best, &f_full)?;
            let (eff_peak_omega, eff_peak) = refine(eff_best, &f_eff)?;
            let peak_denom = full_peak.max(eff_peak);
            let peak_rel_dev =
                if peak_denom > 0.0 { (full_peak - eff_peak).abs() / peak_denom } else { 0.0 };
            pairs.push(PairAgreement {
                out_port: PORT_NAMES[p],
                in_port: PORT_NAMES[q],
                max_abs_dev,
                max_rel_dev,
                full_peak_omega,
                full_peak,
                eff_peak_omega,
                eff_peak,
                peak_rel_dev,
            });
        }
    }
    Ok(ComparisonReport { pairs, validity })
}

/// State-space form ẋ = −M·x + B·u, y = C·x + D·u of either model, with the
/// three slow ports as inputs and outputs (D = −I is the input reflection).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearChannel {
    pub m: DMatrix<Complex64>,
    pub b: DMatrix<Complex64>,
    pub c: DMatrix<Complex64>,
    pub d: DMatrix<Complex64>,
}

impl LinearChannel {
    pub fn from_coefficient_matrix(cm: &CoefficientMatrix) -> Self {
        let m = DMatrix::from_fn(3, 3, |i, j| cm.m[(i, j)]);
        let diag = DMatrix::from_fn(3, 3, |i, j| {
            if i == j { Complex64::new(cm.l[i], 0.0) } else { Complex64::ZERO }
        });
        Self { m, b: diag.clone(), c: diag, d: -DMatrix::identity(3, 3) }
    }

    pub fn from_full_model(fm: &FullModel) -> Self {
        let m = DMatrix::from_fn(4, 4, |i, j| fm.m4[(i, j)]);
        let b = DMatrix::from_fn(4, 3, |i, j| fm.n4[(i, SLOW[j])]);
        let c = DMatrix::from_fn(3, 4, |i, j| {
            if SLOW[i] == j { Complex64::new(fm.lout[j], 0.0) } else { Complex64::ZERO }
        });
        Self { m, b, c, d: -DMatrix::identity(3, 3) }
    }

    /// Number of signal ports (always 3: a₂, b₁, b₂).
    pub fn ports(&self) -> usize {
        self.d.nrows()
    }

    /// Frequency response S(ω) = C·(M − iωI)⁻¹·B + D.
    pub fn response_at(&self, omega: f64) -> Result<Matrix3<Complex64>> {
        if !omega.is_finite() {
            return Err(ModelError::Domain(format!(
                "probe frequency must be finite, got {omega}"
            )));
        }
        let n = self.m.nrows();
        let a = &self.m - DMatrix::identity(n, n) * (IM * omega);
        let x = a.lu().solve(&self.b).ok_or_else(|| {
            ModelError::Singular(format!(
                "drift matrix M - i*omega*I is singular at omega = {omega}"
            ))
        })?;
        let s = &self.c * x + &self.d;
        Ok(Matrix3::from_fn(|i, j| s[(i, j)]))
    }
}

/// Steady-state response extracted from a time-domain integration.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeDomainResponse {
    pub omega: f64,
    pub in_port: usize,
    /// Demodulated output amplitudes divided by the drive amplitude; the
    /// entries estimate the S-matrix column of the driven port.
    pub amplitudes: Vec<Complex64>,
    /// |amplitudes|²: power transmission per output port.
    pub power: Vec<f64>,
    /// Transient horizon actually integrated before demodulation.
    pub horizon: f64,
    /// Final per-period amplitude drift relative to the drive amplitude.
    pub drift: f64,
}

/// Default relative tolerance of the adaptive integrator.
pub const DEFAULT_RTOL: f64 = 1e-10;

const DEMOD_SAMPLES: usize = 64;
const MAX_EXTRA_PERIODS: usize = 200;
const STEADY_DRIFT_TOL: f64 = 1e-9;
const MAX_STEPS: usize = 2_000_000;

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = B1 - 5179.0 / 57600.0;
const E3: f64 = B3 - 7571.0 / 16695.0;
const E4: f64 = B4 - 393.0 / 640.0;
const E5: f64 = B5 + 92097.0 / 339200.0;
const E6: f64 = B6 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;

struct DrivenSystem<'a> {
    m: &'a DMatrix<Complex64>,
    bcol: DVector<Complex64>,
    omega: f64,
    amp: Complex64,
}

impl DrivenSystem<'_> {
    fn drive(&self, t: f64) -> Complex64 {
        self.amp * Complex64::from_polar(1.0, -self.omega * t)
    }

    fn deriv(&self, t: f64, y: &DVector<Complex64>) -> DVector<Complex64> {
        let mut dy = -(self.m * y);
        dy += &self.bcol * self.drive(t);
        dy
    }
}

struct Integrator<'a> {
    sys: DrivenSystem<'a>,
    t: f64,
    y: DVector<Complex64>,
    k1: DVector<Complex64>,
    h: f64,
    rtol: f64,
    atol: f64,
    steps: usize,
}

impl Integrator<'_> {
    /// Advances the state to exactly `t_target` with adaptive error control.
    fn advance_to(&mut self, t_target: f64) -> Result<()> {
        let combine = |y: &DVector<Complex64>, h: f64, terms: &[(f64, &DVector<Complex64>)]| {
            let mut out = y.clone();
            for (coef, k) in terms {
                out += *k * Complex64::new(h * coef, 0.0);
            }
            out
        };
        while self.t < t_target {
            self.steps += 1;
            if self.steps > MAX_STEPS {
                return Err(ModelError::NoConvergence {
                    iterations: self.steps,
                    residual: t_target - self.t,
                    tolerance: 0.0,
                });
            }
            let h = self.h.min(t_target - self.t);
            let (t, y, k1) = (self.t, &self.y, &self.k1);
            let k2 = self.sys.deriv(t + C2 * h, &combine(y, h, &[(A21, k1)]));
            let k3 = self.sys.deriv(t + C3 * h, &combine(y, h, &[(A31, k1), (A32, &k2)]));
            let k4 =
                self.sys.deriv(t + C4 * h, &combine(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
            let k5 = self.sys.deriv(
                t + C5 * h,
                &combine(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = self.sys.deriv(
                t + h,
                &combine(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y5 = combine(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let k7 = self.sys.deriv(t + h, &y5);
            let err = combine(
                &DVector::zeros(y.len()),
                h,
                &[(E1, k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
            );
            let mut sum = 0.0f64;
            for i in 0..err.len() {
                let scale = self.atol + self.rtol * self.y[i].norm().max(y5[i].norm());
                let ratio = err[i].norm() / scale;
                sum += ratio * ratio;
            }
            let wrms = (sum / err.len() as f64).sqrt();
            if wrms <= 1.0 {
                self.t = t + h;
                self.y = y5;
                self.k1 = k7;
            } else if h < 1e-13 * self.t.abs().max(1.0) {
                return Err(ModelError::NoConvergence {
                    iterations: self.steps,
                    residual: wrms,
                    tolerance: 1.0,
                });
            }
            let factor = (0.9 * wrms.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
            self.h = (h * factor).max(f64::MIN_POSITIVE);
        }
        Ok(())
    }
}

/// Integrates the channel driven at `omega` on `in_port` until the
/// demodulated output amplitudes are steady, then returns the normalized
/// steady-state response. The drift must be stable; the horizon, when given,
/// must cover at least 20 decay times of the slowest mode.
pub fn time_domain_response(
    ch: &LinearChannel,
    in_port: usize,
    omega: f64,
    amplitude: Complex64,
    horizon: Option<f64>,
    rtol: f64,
) -> Result<TimeDomainResponse> {
    if in_port >= ch.ports() {
        return Err(ModelError::Domain(format!(
            "input port index {in_port} out of range; ports are {}",
            PORT_NAMES.join(", ")
        )));
    }
    if !omega.is_finite() {
        return Err(ModelError::Domain(format!("drive frequency must be finite, got {omega}")));
    }
    if !(amplitude.re.is_finite() && amplitude.im.is_finite()) {
        return Err(ModelError::Domain("drive amplitude must be finite".into()));
    }
    if !(rtol.is_finite() && rtol > 0.0 && rtol < 1.0) {
        return Err(ModelError::Domain(format!(
            "integrator tolerance must lie in (0, 1), got {rtol}"
        )));
    }

    let eigenvalues = complex_eigenvalues(&ch.m)?;
    let margin = eigenvalues.iter().map(|e| e.re).fold(f64::INFINITY, f64::min);
    if !(margin > 0.0) {
        // Report the dynamical rates of the drift ẋ = −M·x, whose real
        // parts are positive exactly where the system grows.
        return Err(ModelError::Unstable {
            margin,
            eigenvalues: eigenvalues.iter().map(|e| -e).collect(),
        });
    }
    let required = 20.0 / margin;
    let horizon = match horizon {
        None => required,
        Some(h) if h.is_finite() && h >= required => h,
        Some(h) => {
            return Err(ModelError::Domain(format!(
                "horizon {h} is shorter than the required transient decay time {required}"
            )));
        }
    };

    let amp_norm = amplitude.norm();
    if amp_norm == 0.0 {
        return Ok(TimeDomainResponse {
            omega,
            in_port,
            amplitudes: vec![Complex64::ZERO; 3],
            power: vec![0.0; 3],
            horizon,
            drift: 0.0,
        });
    }

    let period = if omega == 0.0 { TAU / margin } else { TAU / omega.abs() };
    let n = ch.m.nrows();
    let sys = DrivenSystem {
        m: &ch.m,
        bcol: DVector::from_fn(n, |i, _| ch.b[(i, in_port)]),
        omega,
        amp: amplitude,
    };
    let y0 = DVector::zeros(n);
    let k1 = sys.deriv(0.0, &y0);
    let mut stepper = Integrator {
        sys,
        t: 0.0,
        y: y0,
        k1,
        h: period / 200.0,
        rtol,
        atol: rtol * amp_norm,
        steps: 0,
    };
    stepper.advance_to(horizon)?;

    let demod = |stepper: &mut Integrator, t_start: f64| -> Result<Vec<Complex64>> {
        let mut acc = vec![Complex64::ZERO; 3];
        for j in 0..DEMOD_SAMPLES {
            let t = t_start + period * j as f64 / DEMOD_SAMPLES as f64;
            stepper.advance_to(t)?;
            let u = stepper.sys.drive(t);
            let y_out = &ch.c * &stepper.y;
            let carrier = Complex64::from_polar(1.0, omega * t);
            for p in 0..3 {
                let mut val = y_out[p];
                if p == in_port {
                    val += ch.d[(p, p)] * u;
                }
                acc[p] += val * carrier;
            }
        }
        Ok(acc.iter().map(|a| a / DEMOD_SAMPLES as f64).collect())
    };

    let mut t_start = horizon;
    let mut prev = demod(&mut stepper, t_start)?;
    let mut drift = f64::INFINITY;
    for _ in 0..MAX_EXTRA_PERIODS {
        t_start += period;
        let cur = demod(&mut stepper, t_start)?;
        drift = cur
            .iter()
            .zip(&prev)
            .map(|(c, p)| (c - p).norm())
            .fold(0.0f64, f64::max)
            / amp_norm;
        prev = cur;
        if drift < STEADY_DRIFT_TOL {
            let amplitudes: Vec<Complex64> = prev.iter().map(|a| a / amplitude).collect();
            let power = amplitudes.iter().map(|a| a.norm_sqr()).collect();
            return Ok(TimeDomainResponse { omega, in_port, amplitudes, power, horizon, drift });
        }
    }
    Err(ModelError::NoConvergence {
        iterations: MAX_EXTRA_PERIODS,
        residual: drift,
        tolerance: STEADY_DRIFT_TOL,
    })
}
