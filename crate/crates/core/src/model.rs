//! Laboratory-level model: physical parameters, classical steady state, and
//! linearization.
//!
//! The device is a driven optomechanical cavity (mode â₁ coupled to two
//! mechanical modes b̂₁, b̂₂) linked by a fiber to an auxiliary cavity â₂.
//! All frequencies and rates are dimensionless in one shared reference unit;
//! detunings are taken with respect to the drive frequencies.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;

use crate::error::{ModelError, Result};

pub(crate) const IM: Complex64 = Complex64::new(0.0, 1.0);

/// Laboratory parameters of the driven two-cavity, two-mechanical-mode loop.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    /// Optomechanical cavity resonance frequency.
    pub omega_c1: f64,
    /// Auxiliary cavity resonance frequency.
    pub omega_c2: f64,
    /// Mechanical resonance frequencies.
    pub omega_m1: f64,
    pub omega_m2: f64,
    /// Single-photon optomechanical couplings of cavity 1 to each mechanical mode.
    pub g1: f64,
    pub g2: f64,
    /// Direct mechanical cross coupling.
    pub v: f64,
    /// Cavity amplitude decay rates.
    pub kappa1: f64,
    pub kappa2: f64,
    /// Mechanical amplitude decay rates.
    pub gamma1: f64,
    pub gamma2: f64,
    /// Complex drive amplitudes.
    pub eps1: Complex64,
    pub eps2: Complex64,
    /// Drive frequencies.
    pub omega_d1: f64,
    pub omega_d2: f64,
    /// Fiber propagation phase.
    pub phi: f64,
}

impl PhysicalParams {
    /// Checks signs and finiteness: frequencies and decay rates must be
    /// strictly positive; couplings, drives, and the fiber phase only finite.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega_c1", self.omega_c1),
            ("omega_c2", self.omega_c2),
            ("omega_m1", self.omega_m1),
            ("omega_m2", self.omega_m2),
            ("omega_d1", self.omega_d1),
            ("omega_d2", self.omega_d2),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::Domain(format!(
                    "{name} must be finite and strictly positive, got {value}"
                )));
            }
        }
        let finite = [
            ("g1", self.g1),
            ("g2", self.g2),
            ("v", self.v),
            ("phi", self.phi),
            ("Re eps1", self.eps1.re),
            ("Im eps1", self.eps1.im),
            ("Re eps2", self.eps2.re),
            ("Im eps2", self.eps2.im),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(ModelError::Domain(format!("{name} must be finite, got {value}")));
            }
        }
        Ok(())
    }

    /// Returns the parameters with `phi` folded into `[0, 2π)`.
    pub fn normalized(mut self) -> Result<Self> {
        self.validate()?;
        self.phi = self.phi.rem_euclid(std::f64::consts::TAU);
        Ok(self)
    }
}

/// Classical steady-state amplitudes and the mechanically shifted detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanField {
    pub alpha1: Complex64,
    pub alpha2: Complex64,
    pub beta1: Complex64,
    pub beta2: Complex64,
    /// Shifted detuning Δ′_c1 = Δ_c1 + 2·Σ_j g_j·Re β_j.
    pub delta_c1_prime: f64,
    /// Max-norm residual of the four fixed-point equations at the returned point.
    pub residual: f64,
    /// Set when the iteration detected competing branches (period-two residual
    /// oscillation); the converged branch is still returned.
    pub multistable: bool,
}

/// Fluctuation-level model after linearization around the mean field.
///
/// `cj` is a free field here: [`linearize`] always fills it with
/// √(κ₁κ₂)e^{−iφ}, but downstream sweeps may treat the fiber coupling as an
/// independent knob (e.g. coupling-landscape scans), so the constraint is not
/// enforced structurally.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedModel {
    /// Shifted detuning of cavity 1 and bare detuning of cavity 2.
    pub delta_c1_prime: f64,
    pub delta_c2: f64,
    /// Mechanical resonance frequencies.
    pub omega_m1: f64,
    pub omega_m2: f64,
    /// Linearized optomechanical couplings G_j = g_j·α₁.
    pub g1: Complex64,
    pub g2: Complex64,
    /// Fiber-mediated cavity-cavity coupling cJ = √(κ₁κ₂)·e^{−iφ}.
    pub cj: Complex64,
    /// Mechanical cross coupling.
    pub v: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl LinearizedModel {
    /// Checks rate/frequency positivity and finiteness of every field.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega_m1", self.omega_m1),
            ("omega_m2", self.omega_m2),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::Domain(format!(
                    "{name} must be finite and strictly positive, got {value}"
                )));
            }
        }
        let finite = [
            ("delta_c1_prime", self.delta_c1_prime),
            ("delta_c2", self.delta_c2),
            ("v", self.v),
            ("Re G1", self.g1.re),
            ("Im G1", self.g1.im),
            ("Re G2", self.g2.re),
            ("Im G2", self.g2.im),
            ("Re cJ", self.cj.re),
            ("Im cJ", self.cj.im),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(ModelError::Domain(format!("{name} must be finite, got {value}")));
            }
        }
        Ok(())
    }
}

/// Detunings of each cavity from its drive, Δ_cj = ω_cj − ω_dj.
pub fn derive_detunings(p: &PhysicalParams) -> (f64, f64) {
    (p.omega_c1 - p.omega_d1, p.omega_c2 - p.omega_d2)
}

/// Fiber-mediated coupling cJ = √(κ₁κ₂)·e^{−iφ}.
///
/// The Langevin drift on â₁ contributed by â₂ is exactly `cJ·â₂` (and
/// symmetrically on â₂ from â₁); at φ = π/2 this reproduces the familiar
/// `−iJ` beam-splitter convention with real J = √(κ₁κ₂).
pub fn fiber_coupling(kappa1: f64, kappa2: f64, phi: f64) -> Result<Complex64> {
    if !(kappa1.is_finite() && kappa1 > 0.0) || !(kappa2.is_finite() && kappa2 > 0.0) {
        return Err(ModelError::Domain(format!(
            "cavity decay rates must be positive, got kappa1 = {kappa1}, kappa2 = {kappa2}"
        )));
    }
    if !phi.is_finite() {
        return Err(ModelError::Domain(format!("phi must be finite, got {phi}")));
    }
    Ok(Complex64::from_polar((kappa1 * kappa2).sqrt(), -phi))
}

/// Right-hand sides of the four steady-state equations at a candidate point.
///
/// F₁ = −(iΔ′_c1 + κ₁/2)α₁ − iε₁ + cJ·α₂
/// F₂ = −(iΔ_c2 + κ₂/2)α₂ − iε₂ + cJ·α₁
/// F₃ⱼ = −(iω_mj + γ_j/2)β_j − i·g_j|α₁|² − iV·β_{3−j}
fn steady_state_rhs(
    p: &PhysicalParams,
    dc1: f64,
    dc2: f64,
    cj: Complex64,
    x: [Complex64; 4],
) -> [Complex64; 4] {
    let [a1, a2, b1, b2] = x;
    let dprime = dc1 + 2.0 * (p.g1 * b1.re + p.g2 * b2.re);
    let n1 = a1.norm_sqr();
    [
        -(IM * dprime + 0.5 * p.kappa1) * a1 - IM * p.eps1 + cj * a2,
        -(IM * dc2 + 0.5 * p.kappa2) * a2 - IM * p.eps2 + cj * a1,
        -(IM * p.omega_m1 + 0.5 * p.gamma1) * b1 - IM * (p.g1 * n1) - IM * p.v * b2,
        -(IM * p.omega_m2 + 0.5 * p.gamma2) * b2 - IM * (p.g2 * n1) - IM * p.v * b1,
    ]
}

fn max_abs(rhs: &[Complex64; 4]) -> f64 {
    rhs.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Solves the 2×2 complex system [[m11, m12], [m21, m22]]·x = (r1, r2).
fn solve2(
    m11: Complex64,
    m12: Complex64,
    m21: Complex64,
    m22: Complex64,
    r1: Complex64,
    r2: Complex64,
) -> Result<(Complex64, Complex64)> {
    let det = m11 * m22 - m12 * m21;
    if det.norm() == 0.0 {
        return Err(ModelError::Singular(
            "2x2 block in the mean-field solve has zero determinant".into(),
        ));
    }
    Ok(((r1 * m22 - r2 * m12) / det, (m11 * r2 - m21 * r1) / det))
}

fn mean_field_from(
    p: &PhysicalParams,
    dc1: f64,
    x: [Complex64; 4],
    residual: f64,
    multistable: bool,
) -> MeanField {
    MeanField {
        alpha1: x[0],
        alpha2: x[1],
        beta1: x[2],
        beta2: x[3],
        delta_c1_prime: dc1 + 2.0 * (p.g1 * x[2].re + p.g2 * x[3].re),
        residual,
        multistable,
    }
}

/// Solves the classical fixed point of the driven system.
///
/// Damped block iteration (each block an exact 2×2 complex solve, the shifted
/// detuning rebuilt from β every pass) with a finite-difference Newton
/// fallback after 50 iterations. Undriven systems return the exact null
/// without iterating. Competing branches show up as a period-two oscillation
/// of the iterates and are flagged via [`MeanField::multistable`] while the
/// damping is tightened until one branch converges.
pub fn solve_mean_field(p: &PhysicalParams, tol: f64, max_iter: usize) -> Result<MeanField> {
    p.validate()?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(ModelError::Domain(format!("tol must be positive, got {tol}")));
    }
    let (dc1, dc2) = derive_detunings(p);
    let cj = fiber_coupling(p.kappa1, p.kappa2, p.phi)?;

    if p.eps1 == Complex64::ZERO && p.eps2 == Complex64::ZERO {
        return Ok(mean_field_from(p, dc1, [Complex64::ZERO; 4], 0.0, false));
    }

    let mut x = [Complex64::ZERO; 4];
    let mut damping = 0.7;
    let mut multistable = false;
    let mut prev1: Option<[Complex64; 4]> = None;
    let mut prev2: Option<[Complex64; 4]> = None;

    for iter in 0..max_iter {
        if iter == 50 {
            return newton_mean_field(p, dc1, dc2, cj, x, tol, max_iter - iter, multistable);
        }
        let dprime = dc1 + 2.0 * (p.g1 * x[2].re + p.g2 * x[3].re);
        let (a1, a2) = solve2(
            IM * dprime + 0.5 * p.kappa1,
            -cj,
            -cj,
            IM * dc2 + 0.5 * p.kappa2,
            -IM * p.eps1,
            -IM * p.eps2,
        )?;
        let n1 = a1.norm_sqr();
        let (b1, b2) = solve2(
            IM * p.omega_m1 + 0.5 * p.gamma1,
            IM * p.v,
            IM * p.v,
            IM * p.omega_m2 + 0.5 * p.gamma2,
            -IM * (p.g1 * n1),
            -IM * (p.g2 * n1),
        )?;
        let target = [a1, a2, b1, b2];
        let old = x;
        for k in 0..4 {
            x[k] = old[k] + damping * (target[k] - old[k]);
        }

        let residual = max_abs(&steady_state_rhs(p, dc1, dc2, cj, x));
        if residual <= tol {
            return Ok(mean_field_from(p, dc1, x, residual, multistable));
        }

        // Period-two iterate oscillation: close to the state two steps ago but
        // far from the previous one indicates two competing branches.
        if let (Some(p1), Some(p2)) = (&prev1, &prev2) {
            let scale = x.iter().map(|z| z.norm()).fold(1.0, f64::max);
            let d1: f64 = x.iter().zip(p1).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            let d2: f64 = x.iter().zip(p2).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            if d2 < 1e-6 * scale && d1 > 1e3 * d2.max(tol) {
                multistable = true;
                damping *= 0.5;
            }
        }
        prev2 = prev1;
        prev1 = Some(old);
    }

    let residual = max_abs(&steady_state_rhs(p, dc1, dc2, cj, x));
    Err(ModelError::NoConvergence { iterations: max_iter, residual, tolerance: tol })
}

fn pack(x: [Complex64; 4]) -> SVector<f64, 8> {
    SVector::<f64, 8>::from([x[0].re, x[0].im, x[1].re, x[1].im, x[2].re, x[2].im, x[3].re, x[3].im])
}

fn unpack(v: &SVector<f64, 8>) -> [Complex64; 4] {
    [
        Complex64::new(v[0], v[1]),
        Complex64::new(v[2], v[3]),
        Complex64::new(v[4], v[5]),
        Complex64::new(v[6], v[7]),
    ]
}

/// Newton refinement of the steady state on the 8 real unknowns with a
/// central finite-difference Jacobian and step halving.
#[allow(clippy::too_many_arguments)]
fn newton_mean_field(
    p: &PhysicalParams,
    dc1: f64,
    dc2: f64,
    cj: Complex64,
    x0: [Complex64; 4],
    tol: f64,
    max_iter: usize,
    multistable: bool,
) -> Result<MeanField> {
    let rhs_vec = |v: &SVector<f64, 8>| -> SVector<f64, 8> {
        pack(steady_state_rhs(p, dc1, dc2, cj, unpack(v)))
    };
    let mut v = pack(x0);
    let mut f = rhs_vec(&v);
    let mut residual = f.amax();
    for iter in 0..max_iter.max(1) {
        if residual <= tol {
            return Ok(mean_field_from(p, dc1, unpack(&v), residual, multistable));
        }
        let mut jac = SMatrix::<f64, 8, 8>::zeros();
        for k in 0..8 {
            let h = 1e-7 * (1.0 + v[k].abs());
            let mut vp = v;
            vp[k] += h;
            let mut vm = v;
            vm[k] -= h;
            let col = (rhs_vec(&vp) - rhs_vec(&vm)) / (2.0 * h);
            jac.set_column(k, &col);
        }
        let step = jac.lu().solve(&(-f)).ok_or_else(|| {
            ModelError::Singular("Jacobian in the mean-field Newton step is singular".into())
        })?;
        // Backtracking: halve the step until the residual stops growing.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let cand = v + lambda * step;
            let fc = rhs_vec(&cand);
            let rc = fc.amax();
            if rc < residual {
                v = cand;
                f = fc;
                residual = rc;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(ModelError::NoConvergence {
                iterations: iter + 1,
                residual,
                tolerance: tol,
            });
        }
    }
    if residual <= tol {
        return Ok(mean_field_from(p, dc1, unpack(&v), residual, multistable));
    }
    Err(ModelError::NoConvergence { iterations: max_iter, residual, tolerance: tol })
}

/// Assembles the fluctuation model around a converged mean field:
/// G_j = g_j·α₁, cJ from `fiber_coupling`, Δ′_c1 taken from the mean field.
pub fn linearize(p: &PhysicalParams, mf: &MeanField) -> Result<LinearizedModel> {
    p.validate()?;
    let (_, dc2) = derive_detunings(p);
    Ok(LinearizedModel {
        delta_c1_prime: mf.delta_c1_prime,
        delta_c2: dc2,
        omega_m1: p.omega_m1,
        omega_m2: p.omega_m2,
        g1: p.g1 * mf.alpha1,
        g2: p.g2 * mf.alpha1,
        cj: fiber_coupling(p.kappa1, p.kappa2, p.phi)?,
        v: p.v,
        kappa1: p.kappa1,
        kappa2: p.kappa2,
        gamma1: p.gamma1,
        gamma2: p.gamma2,
    })
}
