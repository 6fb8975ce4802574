//! Bell-CHSH evaluation for the two slow bosonic output modes, three ways:
//! a reduced closed form in one angle and one superposition coefficient, a
//! general four-term expression in the state coefficients, and an
//! independent operator oracle built from parity pseudospins on a truncated
//! Fock space. The three constructions answer different normalizations of
//! the same question and are reported side by side, never merged.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

use crate::error::{ModelError, Result};
use crate::scattering::{scan_extremum, ExtremumKind};

/// Bloch-sphere direction of a pseudospin measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementVector {
    /// Polar angle in [0, π].
    pub theta: f64,
    /// Azimuthal angle in [0, 2π).
    pub phi: f64,
}

impl MeasurementVector {
    /// Builds a vector, folding the azimuth into [0, 2π).
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !phi.is_finite() {
            return Err(ModelError::Domain(format!("azimuthal angle must be finite, got {phi}")));
        }
        let mut phi = phi.rem_euclid(TAU);
        if phi >= TAU {
            phi -= TAU;
        }
        let v = Self { theta, phi };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta.is_finite() && (0.0..=PI).contains(&self.theta)) {
            return Err(ModelError::Domain(format!(
                "polar angle must lie in [0, pi], got {}",
                self.theta
            )));
        }
        if !(self.phi.is_finite() && (0.0..TAU).contains(&self.phi)) {
            return Err(ModelError::Domain(format!(
                "azimuthal angle must lie in [0, 2*pi), got {}",
                self.phi
            )));
        }
        Ok(())
    }
}

/// Parity pseudospin operators on a Fock space truncated at an even
/// dimension: ŝ_z = Σ(|2n+1⟩⟨2n+1| − |2n⟩⟨2n|), ŝ_− = Σ|2n⟩⟨2n+1|,
/// ŝ_+ = ŝ_−†.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudospinSet {
    pub s_z: DMatrix<Complex64>,
    pub s_plus: DMatrix<Complex64>,
    pub s_minus: DMatrix<Complex64>,
    pub n_trunc: usize,
}

/// Builds the pseudospin matrices. The dimension must be even (so the
/// highest level completes a parity pair) and at least 4.
pub fn build_pseudospin(n_trunc: usize) -> Result<PseudospinSet> {
    if n_trunc < 4 || n_trunc % 2 != 0 {
        return Err(ModelError::Domain(format!(
            "truncation dimension must be an even integer >= 4, got {n_trunc}"
        )));
    }
    let s_z = DMatrix::from_fn(n_trunc, n_trunc, |i, j| {
        if i == j {
            Complex64::new(if i % 2 == 0 { -1.0 } else { 1.0 }, 0.0)
        } else {
            Complex64::ZERO
        }
    });
    let mut s_minus = DMatrix::zeros(n_trunc, n_trunc);
    for n in 0..n_trunc / 2 {
        s_minus[(2 * n, 2 * n + 1)] = Complex64::ONE;
    }
    let s_plus = s_minus.adjoint();
    Ok(PseudospinSet { s_z, s_plus, s_minus, n_trunc })
}

/// Measurement operator a·ŝ = ŝ_z·cosθ + sinθ(e^{iφ}ŝ_− + e^{−iφ}ŝ_+).
pub fn spin_component(ps: &PseudospinSet, v: &MeasurementVector) -> DMatrix<Complex64> {
    let phase = Complex64::from_polar(1.0, v.phi);
    &ps.s_z * Complex64::new(v.theta.cos(), 0.0)
        + (&ps.s_minus * phase + &ps.s_plus * phase.conj()) * Complex64::new(v.theta.sin(), 0.0)
}

/// Reduced closed form 2(cosθ + sinθ·α₂√(1−α₂²))².
pub fn chsh_closed_form(theta: f64, alpha2: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(ModelError::Domain(format!("angle must be finite, got {theta}")));
    }
    if !(alpha2.is_finite() && (0.0..=1.0).contains(&alpha2)) {
        return Err(ModelError::Domain(format!(
            "superposition coefficient must lie in [0, 1], got {alpha2}"
        )));
    }
    let s = alpha2 * (1.0 - alpha2 * alpha2).sqrt();
    let base = theta.cos() + theta.sin() * s;
    Ok(2.0 * base * base)
}

/// General four-term CHSH expression in the two-mode superposition
/// coefficients: β_j belong to the mode measured along the a-vector and
/// α_j to the mode measured along the b-vector. The azimuths enter through
/// the phases of the coefficient products.
#[allow(clippy::too_many_arguments)]
pub fn chsh_general(
    theta_a: f64,
    theta_b: f64,
    phi_a: f64,
    phi_b: f64,
    alpha1: Complex64,
    alpha2: Complex64,
    beta1: Complex64,
    beta2: Complex64,
) -> f64 {
    let (ca, sa) = (theta_a.cos(), theta_a.sin());
    let (cb, sb) = (theta_b.cos(), theta_b.sin());
    let ea = Complex64::from_polar(1.0, phi_a);
    let eb = Complex64::from_polar(1.0, phi_b);
    let alpha_pair = 2.0 * (alpha1.conj() * alpha2 * eb).re;
    let beta_pair = 2.0 * (beta1.conj() * beta2 * ea).re;
    let quad = 2.0 * (alpha1.conj() * alpha2 * beta1 * beta2.conj() * eb * ea.conj()).re;
    2.0 * (ca * cb + ca * sb * alpha_pair + sa * cb * beta_pair + 2.0 * sa * sb * quad)
}

/// Expectation ⟨A⊗B⟩ on a two-mode state given as a coefficient matrix C
/// (rows: first-mode Fock index, columns: second-mode Fock index).
fn tensor_expectation(
    c: &DMatrix<Complex64>,
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
) -> Complex64 {
    let acb = a * c * b.transpose();
    c.iter().zip(acb.iter()).map(|(cc, x)| cc.conj() * x).sum()
}

/// CHSH expectation ⟨(a·ŝ₁)⊗(b·ŝ₂) + (a·ŝ₁)⊗(b′·ŝ₂) + (a′·ŝ₁)⊗(b·ŝ₂)
/// − (a′·ŝ₁)⊗(b′·ŝ₂)⟩ on a normalized two-mode state, evaluated with dense
/// truncated operators.
pub fn chsh_operator_oracle(
    state: &DMatrix<Complex64>,
    a: &MeasurementVector,
    a_prime: &MeasurementVector,
    b: &MeasurementVector,
    b_prime: &MeasurementVector,
    n_trunc: usize,
) -> Result<f64> {
    let ps = build_pseudospin(n_trunc)?;
    for v in [a, a_prime, b, b_prime] {
        v.validate()?;
    }
    let needed = state.nrows().max(state.ncols());
    if needed > n_trunc {
        return Err(ModelError::Truncation { needed, available: n_trunc });
    }
    let norm_sqr: f64 = state.iter().map(|z| z.norm_sqr()).sum();
    if (norm_sqr - 1.0).abs() > 1e-12 {
        return Err(ModelError::Domain(format!(
            "state must be normalized to 1 within 1e-12, got squared norm {norm_sqr}"
        )));
    }
    let mut c = DMatrix::zeros(n_trunc, n_trunc);
    for i in 0..state.nrows() {
        for j in 0..state.ncols() {
            c[(i, j)] = state[(i, j)];
        }
    }
    let op_a = spin_component(&ps, a);
    let op_ap = spin_component(&ps, a_prime);
    let op_b = spin_component(&ps, b);
    let op_bp = spin_component(&ps, b_prime);
    let total = tensor_expectation(&c, &op_a, &op_b)
        + tensor_expectation(&c, &op_a, &op_bp)
        + tensor_expectation(&c, &op_ap, &op_b)
        - tensor_expectation(&c, &op_ap, &op_bp);
    if total.im.abs() > 1e-12 {
        return Err(ModelError::Domain(format!(
            "CHSH expectation has a nonreal residue {} (operators are Hermitian)",
            total.im
        )));
    }
    Ok(total.re)
}

/// Closed-form CHSH values over a (θ, α₂) grid with the violation mask.
#[derive(Debug, Clone, PartialEq)]
pub struct BellScan {
    pub theta_grid: Vec<f64>,
    pub alpha2_grid: Vec<f64>,
    /// Row-major with θ as the outer (slow) index.
    pub values: Vec<f64>,
    /// `true` where the value exceeds the local-realism bound 2.
    pub violation_mask: Vec<bool>,
}

/// Evaluates the closed form on the rectangular grid.
pub fn violation_scan(theta_grid: &[f64], alpha2_grid: &[f64]) -> Result<BellScan> {
    if theta_grid.is_empty() || alpha2_grid.is_empty() {
        return Err(ModelError::Domain("scan grids must be nonempty".into()));
    }
    let mut values = Vec::with_capacity(theta_grid.len() * alpha2_grid.len());
    for &theta in theta_grid {
        for &alpha2 in alpha2_grid {
            values.push(chsh_closed_form(theta, alpha2)?);
        }
    }
    let violation_mask = values.iter().map(|v| *v > 2.0).collect();
    Ok(BellScan {
        theta_grid: theta_grid.to_vec(),
        alpha2_grid: alpha2_grid.to_vec(),
        values,
        violation_mask,
    })
}

/// Location and value of the refined closed-form maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedMaximum {
    pub theta: f64,
    pub alpha2: f64,
    pub value: f64,
}

/// Refines the grid maximum of a scan by alternating golden-section ascent
/// in θ and α₂ until the search radius shrinks below 1e−12.
pub fn refined_scan_maximum(scan: &BellScan) -> Result<RefinedMaximum> {
    let (best, _) = scan
        .values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("scan grids are nonempty by construction");
    let n_alpha = scan.alpha2_grid.len();
    let mut theta = scan.theta_grid[best / n_alpha];
    let mut alpha2 = scan.alpha2_grid[best % n_alpha];
    let grid_radius = |grid: &[f64]| -> f64 {
        if grid.len() < 2 {
            0.1
        } else {
            grid.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max)
        }
    };
    let mut r_theta = grid_radius(&scan.theta_grid);
    let mut r_alpha = grid_radius(&scan.alpha2_grid);
    let mut value = chsh_closed_form(theta, alpha2)?;
    while r_theta > 1e-12 || r_alpha > 1e-12 {
        let f_theta = |t: f64| chsh_closed_form(t, alpha2);
        let ext = scan_extremum(
            &f_theta,
            (theta - r_theta, theta + r_theta),
            33,
            ExtremumKind::Maximum,
            (r_theta * 1e-3).max(1e-13),
        )?;
        theta = ext.omega;
        let f_alpha = |a: f64| chsh_closed_form(theta, a);
        let ext = scan_extremum(
            &f_alpha,
            ((alpha2 - r_alpha).max(0.0), (alpha2 + r_alpha).min(1.0)),
            33,
            ExtremumKind::Maximum,
            (r_alpha * 1e-3).max(1e-13),
        )?;
        alpha2 = ext.omega;
        value = ext.value;
        r_theta *= 0.5;
        r_alpha *= 0.5;
    }
    Ok(RefinedMaximum { theta, alpha2, value })
}
