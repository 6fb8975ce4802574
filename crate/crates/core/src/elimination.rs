//! Adiabatic elimination of the fast cavity mode.
//!
//! When the optomechanical cavity decays much faster than everything it is
//! coupled to (κ₁ ≫ κ₂, γ_j), its field follows the slow modes
//! instantaneously and can be integrated out. The result is an effective
//! three-mode model for (â₂, b̂₁, b̂₂) with renormalized detuning,
//! frequencies, rates, and fiber-mediated couplings, controlled by six
//! correction factors built from the elimination denominators
//! D = Δ′_c1 − Δ_c2, D_j = Δ′_c1 − ω_mj, K = (κ₁−κ₂)/2, K_j = (κ₁−γ_j)/2.

use num_complex::Complex64;

use crate::error::{ModelError, Result};
use crate::model::{LinearizedModel, IM};

/// Correction factors of the elimination.
#[derive(Debug, Clone, PartialEq)]
pub struct XiFactors {
    /// Cavity weight ξ_c = J²/(D² + K²) with J = |cJ| (dimensionless).
    pub xi_c: f64,
    /// Mechanical weights ξ_mj = |G_j|²/(D_j² + K_j²) (dimensionless).
    pub xi_m1: f64,
    pub xi_m2: f64,
    /// Mechanical response factors ξ_j = (D_j + iK_j)/(D_j² + K_j²).
    pub xi_1: Complex64,
    pub xi_2: Complex64,
    /// Cavity response factor ξ = (D + iK)/(D² + K²).
    pub xi: Complex64,
}

/// Provenance of an [`EffectiveModel`]: derived microscopically by
/// [`eliminate`], or assembled directly from measured/phenomenological
/// magnitudes and phases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelSource {
    Microscopic,
    Phenomenological,
}

/// Reduced three-mode model for (â₂, b̂₁, b̂₂).
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveModel {
    pub delta_eff: f64,
    pub omega_eff1: f64,
    pub omega_eff2: f64,
    pub kappa_eff: f64,
    pub gamma_eff1: f64,
    pub gamma_eff2: f64,
    /// Cavity→mechanics couplings G′_j.
    pub gp1: Complex64,
    pub gp2: Complex64,
    /// Mechanics→cavity couplings G″_j.
    pub gpp1: Complex64,
    pub gpp2: Complex64,
    /// Eliminated-path mechanical cross couplings V_j.
    pub v1: Complex64,
    pub v2: Complex64,
    pub source: ModelSource,
}

/// One dimensionless validity ratio with its pass/warn flag.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioCheck {
    pub name: &'static str,
    pub value: f64,
    /// `true` when the ratio is at or below the threshold.
    pub pass: bool,
}

/// Collected validity ratios for the elimination premises.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    pub threshold: f64,
    pub checks: Vec<RatioCheck>,
    pub all_pass: bool,
}

/// Hermiticity defects of the eliminated couplings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermiticityReport {
    /// |G′₁* − G″₁|
    pub g_defect1: f64,
    /// |G′₂* − G″₂|
    pub g_defect2: f64,
    /// |V₁* − V₂|
    pub v_defect: f64,
}

struct Denominators {
    d: f64,
    d1: f64,
    d2: f64,
    den_c: f64,
    den_1: f64,
    den_2: f64,
}

fn denominators(lm: &LinearizedModel) -> Result<Denominators> {
    let d = lm.delta_c1_prime - lm.delta_c2;
    let k = 0.5 * (lm.kappa1 - lm.kappa2);
    let d1 = lm.delta_c1_prime - lm.omega_m1;
    let k1 = 0.5 * (lm.kappa1 - lm.gamma1);
    let d2 = lm.delta_c1_prime - lm.omega_m2;
    let k2 = 0.5 * (lm.kappa1 - lm.gamma2);
    let den_c = d * d + k * k;
    let den_1 = d1 * d1 + k1 * k1;
    let den_2 = d2 * d2 + k2 * k2;
    if den_c == 0.0 {
        return Err(ModelError::Singular(
            "elimination denominator vanishes: delta_c1_prime = delta_c2 together with kappa1 = kappa2".into(),
        ));
    }
    if den_1 == 0.0 {
        return Err(ModelError::Singular(
            "elimination denominator vanishes: delta_c1_prime = omega_m1 together with kappa1 = gamma1".into(),
        ));
    }
    if den_2 == 0.0 {
        return Err(ModelError::Singular(
            "elimination denominator vanishes: delta_c1_prime = omega_m2 together with kappa1 = gamma2".into(),
        ));
    }
    Ok(Denominators { d, d1, d2, den_c, den_1, den_2 })
}

/// Computes the six correction factors, using J = |cJ|.
pub fn xi_factors(lm: &LinearizedModel) -> Result<XiFactors> {
    lm.validate()?;
    let dn = denominators(lm)?;
    let k = 0.5 * (lm.kappa1 - lm.kappa2);
    let k1 = 0.5 * (lm.kappa1 - lm.gamma1);
    let k2 = 0.5 * (lm.kappa1 - lm.gamma2);
    let j2 = lm.cj.norm_sqr();
    Ok(XiFactors {
        xi_c: j2 / dn.den_c,
        xi_m1: lm.g1.norm_sqr() / dn.den_1,
        xi_m2: lm.g2.norm_sqr() / dn.den_2,
        xi_1: Complex64::new(dn.d1, k1) / dn.den_1,
        xi_2: Complex64::new(dn.d2, k2) / dn.den_2,
        xi: Complex64::new(dn.d, k) / dn.den_c,
    })
}

/// Eliminates the fast cavity, producing the effective three-mode model.
///
/// Effective parameters:
/// Δ_eff = Δ_c2 − ξ_c·D, ω_effj = ω_mj − ξ_mj·D_j,
/// κ_eff = κ₂ + ξ_c(κ₁−κ₂), γ_effj = γ_j + ξ_mj(κ₁−γ_j),
/// G′_j = J·G_j·ξ_j, G″_j = J·G_j*·ξ, V_j = G_j*·G_{3−j}·ξ_{3−j} − V,
/// where J = i·cJ so that the standard φ = π/2 fiber gives the real
/// J = √(κ₁κ₂) exactly while arbitrary fiber phases stay supported.
pub fn eliminate(lm: &LinearizedModel) -> Result<EffectiveModel> {
    let xf = xi_factors(lm)?;
    let dn = denominators(lm)?;
    let j_eff = IM * lm.cj;

    let kappa_eff = lm.kappa2 + xf.xi_c * (lm.kappa1 - lm.kappa2);
    let gamma_eff1 = lm.gamma1 + xf.xi_m1 * (lm.kappa1 - lm.gamma1);
    let gamma_eff2 = lm.gamma2 + xf.xi_m2 * (lm.kappa1 - lm.gamma2);
    for (name, rate) in [
        ("kappa_eff", kappa_eff),
        ("gamma_eff1", gamma_eff1),
        ("gamma_eff2", gamma_eff2),
    ] {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(ModelError::Domain(format!(
                "elimination produced nonpositive effective rate {name} = {rate} \
                 (parameters far outside the elimination's validity)"
            )));
        }
    }

    Ok(EffectiveModel {
        delta_eff: lm.delta_c2 - xf.xi_c * dn.d,
        omega_eff1: lm.omega_m1 - xf.xi_m1 * dn.d1,
        omega_eff2: lm.omega_m2 - xf.xi_m2 * dn.d2,
        kappa_eff,
        gamma_eff1,
        gamma_eff2,
        gp1: j_eff * lm.g1 * xf.xi_1,
        gp2: j_eff * lm.g2 * xf.xi_2,
        gpp1: j_eff * lm.g1.conj() * xf.xi,
        gpp2: j_eff * lm.g2.conj() * xf.xi,
        v1: lm.g1.conj() * lm.g2 * xf.xi_2 - lm.v,
        v2: lm.g2.conj() * lm.g1 * xf.xi_1 - lm.v,
        source: ModelSource::Microscopic,
    })
}

/// Dimensionless premise ratios with the default warn threshold 0.2.
pub fn validity_report(lm: &LinearizedModel) -> Result<ValidityReport> {
    validity_report_with(lm, 0.2)
}

/// Premise ratios of the elimination (J ≪ Δ_c2, G_j, V ≪ ω_mj, γ_j, κ₂ ≪ κ₁)
/// against a configurable warn threshold. Ratios above the threshold are
/// flagged, never rejected: sweeps intentionally leave the strict regime.
pub fn validity_report_with(lm: &LinearizedModel, threshold: f64) -> Result<ValidityReport> {
    lm.validate()?;
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(ModelError::Domain(format!(
            "validity threshold must be positive, got {threshold}"
        )));
    }
    let j = lm.cj.norm();
    let entries = [
        ("J/delta_c2", j / lm.delta_c2.abs()),
        ("G1/omega_m1", lm.g1.norm() / lm.omega_m1),
        ("G2/omega_m2", lm.g2.norm() / lm.omega_m2),
        ("V/omega_m1", lm.v.abs() / lm.omega_m1),
        ("V/omega_m2", lm.v.abs() / lm.omega_m2),
        ("gamma1/kappa1", lm.gamma1 / lm.kappa1),
        ("gamma2/kappa1", lm.gamma2 / lm.kappa1),
        ("kappa2/kappa1", lm.kappa2 / lm.kappa1),
    ];
    let checks: Vec<RatioCheck> = entries
        .into_iter()
        .map(|(name, value)| RatioCheck { name, value, pass: value <= threshold })
        .collect();
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(ValidityReport { threshold, checks, all_pass })
}

/// Hermiticity defects |G′_j* − G″_j| and |V₁* − V₂| of a microscopically
/// derived effective model: how far the eliminated dynamics is from a
/// Hamiltonian (energy-conserving coupling) form. The defects vanish
/// asymptotically as κ₁ grows; at moderate κ₁ the eliminated couplings are
/// genuinely dissipative and the defects are order J·G/κ₁.
pub fn effective_hamiltonian_couplings(em: &EffectiveModel) -> Result<HermiticityReport> {
    if em.source != ModelSource::Microscopic {
        return Err(ModelError::Domain(
            "hermiticity defects are defined for microscopically derived models only".into(),
        ));
    }
    Ok(HermiticityReport {
        g_defect1: (em.gp1.conj() - em.gpp1).norm(),
        g_defect2: (em.gp2.conj() - em.gpp2).norm(),
        v_defect: (em.v1.conj() - em.v2).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn fig_regime(cj_mag: f64, g: f64) -> LinearizedModel {
        LinearizedModel {
            delta_c1_prime: 1.0001,
            delta_c2: 1.0,
            omega_m1: 1.0,
            omega_m2: 1.0,
            g1: Complex64::new(g, 0.0),
            g2: Complex64::new(g, 0.0),
            cj: Complex64::from_polar(cj_mag, -FRAC_PI_2),
            v: 0.0,
            kappa1: 0.1,
            kappa2: 0.01,
            gamma1: 1e-3,
            gamma2: 1e-3,
        }
    }

    #[test]
    fn xi_factors_match_direct_formulas() {
        let lm = fig_regime(1.0, 0.02);
        let xf = xi_factors(&lm).unwrap();
        let d = 1e-4;
        let k = 0.045;
        let den = d * d + k * k;
        assert!((xf.xi_c - 1.0 / den).abs() / (1.0 / den) < 1e-14);
        assert!((xf.xi_c - 493.7).abs() / 493.7 < 1e-3);
        assert!((xf.xi - Complex64::new(d, k) / den).norm() < 1e-12);
        let d1 = 1e-4;
        let k1 = 0.5 * (0.1 - 1e-3);
        let den1 = d1 * d1 + k1 * k1;
        assert!((xf.xi_m1 - 0.02f64.powi(2) / den1).abs() < 1e-12);
        assert!((xf.xi_1 - Complex64::new(d1, k1) / den1).norm() < 1e-12);
    }

    #[test]
    fn xi_degenerate_detuning_limit() {
        let mut lm = fig_regime(0.5, 0.0);
        lm.delta_c1_prime = 1.0;
        let xf = xi_factors(&lm).unwrap();
        let k = 0.5 * (lm.kappa1 - lm.kappa2);
        assert!((xf.xi - IM * (2.0 / (lm.kappa1 - lm.kappa2))).norm() < 1e-12);
        assert!((xf.xi_c - 0.25 / (k * k)).abs() < 1e-9);
        assert_eq!(xf.xi_m1, 0.0);
        assert_eq!(xf.xi_m2, 0.0);
    }

    #[test]
    fn xi_sign_structure() {
        let mut lm = fig_regime(0.3, 0.01);
        lm.delta_c1_prime = 0.95; // below mechanical resonance
        let xf = xi_factors(&lm).unwrap();
        assert!(xf.xi_1.re < 0.0); // sign of D₁ = Δ′_c1 − ω_m1 < 0
        assert!(xf.xi_1.im > 0.0); // sign of K₁ = (κ₁−γ₁)/2 > 0
        assert!(xf.xi_c >= 0.0 && xf.xi_m1 >= 0.0 && xf.xi_m2 >= 0.0);
    }

    #[test]
    fn degenerate_denominator_is_singular() {
        let mut lm = fig_regime(0.1, 0.01);
        lm.kappa2 = lm.kappa1;
        lm.delta_c1_prime = lm.delta_c2;
        let err = xi_factors(&lm).unwrap_err();
        assert!(matches!(err, ModelError::Singular(_)));
        assert!(err.to_string().contains("delta_c1_prime = delta_c2"));
    }

    #[test]
    fn eliminate_reconstructs_spec_formulas() {
        let lm = fig_regime(0.0316227766016838, 0.02);
        let xf = xi_factors(&lm).unwrap();
        let em = eliminate(&lm).unwrap();
        let d = lm.delta_c1_prime - lm.delta_c2;
        assert_eq!(em.delta_eff, lm.delta_c2 - xf.xi_c * d);
        assert_eq!(em.kappa_eff, lm.kappa2 + xf.xi_c * (lm.kappa1 - lm.kappa2));
        assert_eq!(em.omega_eff1, lm.omega_m1 - xf.xi_m1 * (lm.delta_c1_prime - lm.omega_m1));
        assert_eq!(em.gamma_eff1, lm.gamma1 + xf.xi_m1 * (lm.kappa1 - lm.gamma1));
        assert_eq!(em.source, ModelSource::Microscopic);
        // At φ = π/2 the substituted coupling i·cJ is exactly the real |cJ|.
        let j = lm.cj.norm();
        assert!((em.gp1 - j * lm.g1 * xf.xi_1).norm() < 1e-18);
        assert!((em.gpp1 - j * lm.g1.conj() * xf.xi).norm() < 1e-18);
        assert!((em.v1 - (lm.g1.conj() * lm.g2 * xf.xi_2)).norm() < 1e-18);
    }

    #[test]
    fn no_fiber_decouples_cavity_sector() {
        let mut lm = fig_regime(0.5, 0.01);
        lm.cj = Complex64::ZERO;
        let em = eliminate(&lm).unwrap();
        assert_eq!(em.delta_eff, lm.delta_c2);
        assert_eq!(em.kappa_eff, lm.kappa2);
        assert_eq!(em.gp1, Complex64::ZERO);
        assert_eq!(em.gp2, Complex64::ZERO);
        assert_eq!(em.gpp1, Complex64::ZERO);
        assert_eq!(em.gpp2, Complex64::ZERO);
        // V_j keeps its eliminated mechanical path even without the fiber.
        let xf = xi_factors(&lm).unwrap();
        assert!((em.v1 - lm.g1.conj() * lm.g2 * xf.xi_2).norm() < 1e-18);
    }

    #[test]
    fn symmetric_mechanics_give_equal_cross_couplings() {
        let lm = fig_regime(0.03, 0.015);
        let em = eliminate(&lm).unwrap();
        assert_eq!(em.v1, em.v2);
    }

    #[test]
    fn uncoupled_mechanics_keep_bare_frequencies() {
        let lm = fig_regime(0.03, 0.0);
        let em = eliminate(&lm).unwrap();
        assert_eq!(em.omega_eff1, lm.omega_m1);
        assert_eq!(em.gamma_eff1, lm.gamma1);
        assert_eq!(em.omega_eff2, lm.omega_m2);
        assert_eq!(em.gamma_eff2, lm.gamma2);
    }

    #[test]
    fn positivity_in_the_hierarchical_regime() {
        let lm = fig_regime(0.8, 0.03);
        let em = eliminate(&lm).unwrap();
        assert!(em.kappa_eff >= lm.kappa2);
        assert!(em.gamma_eff1 >= lm.gamma1);
        assert!(em.gamma_eff2 >= lm.gamma2);
    }

    #[test]
    fn hermiticity_defects_decrease_with_kappa1() {
        // κ₁ grows with everything else fixed, including the fiber coupling.
        let mut defects = Vec::new();
        for kappa1 in [0.1, 1.0, 10.0] {
            let mut lm = fig_regime(0.0316227766016838, 0.02);
            lm.kappa1 = kappa1;
            let em = eliminate(&lm).unwrap();
            let rep = effective_hamiltonian_couplings(&em).unwrap();
            defects.push((rep.g_defect1, rep.g_defect2, rep.v_defect));
        }
        for w in defects.windows(2) {
            assert!(w[1].0 < w[0].0);
            assert!(w[1].1 < w[0].1);
            assert!(w[1].2 < w[0].2);
        }
    }

    #[test]
    fn fully_degenerate_denominators_are_exactly_hermitian() {
        // With a real fiber coupling, Δ′_c1 = Δ_c2 = ω_mj and γ_j = κ₂ the
        // factors ξ_j = ξ are purely imaginary, so G′* = G″ holds exactly
        // for real couplings.
        let lm = LinearizedModel {
            delta_c1_prime: 1.0,
            delta_c2: 1.0,
            omega_m1: 1.0,
            omega_m2: 1.0,
            g1: Complex64::new(0.01, 0.0),
            g2: Complex64::new(0.02, 0.0),
            cj: Complex64::new(0.05, 0.0),
            v: 0.0,
            kappa1: 0.1,
            kappa2: 0.004,
            gamma1: 0.004,
            gamma2: 0.004,
        };
        let em = eliminate(&lm).unwrap();
        let rep = effective_hamiltonian_couplings(&em).unwrap();
        assert!(rep.g_defect1 < 1e-18);
        assert!(rep.g_defect2 < 1e-18);
        // The mechanics-mediated cross coupling keeps its imaginary
        // eliminated-path factor: V₁ = V₂ by symmetry, defect 2|Im V₁|.
        assert!((rep.v_defect - 2.0 * em.v1.im.abs()).abs() < 1e-18);
    }

    #[test]
    fn zero_couplings_have_zero_defects() {
        let lm = fig_regime(0.03, 0.0);
        let em = eliminate(&lm).unwrap();
        let rep = effective_hamiltonian_couplings(&em).unwrap();
        assert_eq!(rep.g_defect1, 0.0);
        assert_eq!(rep.g_defect2, 0.0);
        assert_eq!(rep.v_defect, 0.0);
    }

    #[test]
    fn coupling_magnitudes_fall_like_inverse_kappa1() {
        // |G′| ∝ 1/κ₁ asymptotically: fit the log-log slope over two decades.
        let mut mags = Vec::new();
        for kappa1 in [1.0, 10.0, 100.0] {
            let mut lm = fig_regime(0.0316227766016838, 0.02);
            lm.kappa1 = kappa1;
            let em = eliminate(&lm).unwrap();
            mags.push(em.gp1.norm());
        }
        let slope = (mags[0] / mags[2]).ln() / 100f64.ln();
        assert!((slope - 1.0).abs() < 0.05, "decay exponent {slope}");
    }

    #[test]
    fn validity_ratios_and_flags() {
        let lm = fig_regime(0.0316227766016838, 0.02);
        let rep = validity_report(&lm).unwrap();
        assert_eq!(rep.threshold, 0.2);
        let get = |name: &str| rep.checks.iter().find(|c| c.name == name).unwrap();
        assert!((get("kappa2/kappa1").value - 0.1).abs() < 1e-15);
        assert!(get("kappa2/kappa1").pass);
        assert!((get("gamma1/kappa1").value - 0.01).abs() < 1e-15);
        assert!(get("gamma1/kappa1").pass);

        let mut warn = fig_regime(2.0, 0.02);
        warn.kappa2 = warn.kappa1;
        let rep = validity_report(&warn).unwrap();
        let get = |name: &str| rep.checks.iter().find(|c| c.name == name).unwrap().clone();
        assert_eq!(get("kappa2/kappa1").value, 1.0);
        assert!(!get("kappa2/kappa1").pass);
        assert_eq!(get("J/delta_c2").value, 2.0);
        assert!(!get("J/delta_c2").pass);
        assert!(!rep.all_pass);
    }

    #[test]
    fn phenomenological_source_rejected_for_defects() {
        let mut em = eliminate(&fig_regime(0.03, 0.01)).unwrap();
        em.source = ModelSource::Phenomenological;
        assert!(matches!(
            effective_hamiltonian_couplings(&em),
            Err(ModelError::Domain(_))
        ));
    }
}
