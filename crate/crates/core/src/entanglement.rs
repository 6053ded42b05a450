//! Two-mode covariance matrix of the outgoing fields at the mechanical
//! resonance, logarithmic negativity and the thermal-decoherence bounds on
//! gravity-mediated entanglement.
//!
//! Quadratures are ordered `(X_A, Y_A, X_B, Y_B)` and normalised so that
//! vacuum has `V = 1`, with symplectic form `Ω = ⊕ [[0, 1], [-1, 0]]`.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::full_output_covariance_spectrum;
use crate::error::{require_positive, Error, Result};
use crate::params::{MechanicalParams, PhysicalConstants, SystemParams};

/// Relative tolerance used for structural checks on covariance matrices.
const STRUCTURE_TOL: f64 = 1e-10;
/// Smallest partially-transposed symplectic eigenvalue squared that still
/// counts as separable; absorbs rounding in `det V` at the threshold.
const NU_SQ_TOL: f64 = 1e-12;

/// Hermitian covariance matrix of the two optical modes at `ω_m`.
///
/// Entries are stored as complex numbers: the autocorrelation off-diagonal
/// `K` is purely imaginary on resonance and only the Hermitian matrix gives
/// `det V_A = 1 + |G|² + N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovMatrix4 {
    pub v: Matrix4<Complex64>,
    /// Mode bandwidth, rad/s; metadata only.
    pub delta_omega: f64,
}

/// Two-mode symplectic form.
pub fn symplectic_form() -> Matrix4<f64> {
    let mut o = Matrix4::zeros();
    o[(0, 1)] = 1.0;
    o[(1, 0)] = -1.0;
    o[(2, 3)] = 1.0;
    o[(3, 2)] = -1.0;
    o
}

/// Symmetrised covariance from the double-sided cross-spectral matrix.
///
/// With `𝒳 = √(Δω/π) X(ω)` and `δ(0) ≈ 1/Δω`, every entry is `2 S(ω)`
/// independently of `Δω`.
pub fn spectrum_to_covariance(s: &Matrix4<Complex64>) -> Matrix4<Complex64> {
    s * Complex64::new(2.0, 0.0)
}

fn det2(m: Matrix2<Complex64>) -> Complex64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

impl CovMatrix4 {
    pub fn from_real(v: Matrix4<f64>, delta_omega: f64) -> Self {
        CovMatrix4 {
            v: v.map(|x| Complex64::new(x, 0.0)),
            delta_omega,
        }
    }

    pub fn identity(delta_omega: f64) -> Self {
        Self::from_real(Matrix4::identity(), delta_omega)
    }

    pub fn block_a(&self) -> Matrix2<Complex64> {
        self.v.fixed_view::<2, 2>(0, 0).into_owned()
    }

    pub fn block_b(&self) -> Matrix2<Complex64> {
        self.v.fixed_view::<2, 2>(2, 2).into_owned()
    }

    pub fn block_ab(&self) -> Matrix2<Complex64> {
        self.v.fixed_view::<2, 2>(0, 2).into_owned()
    }

    /// Elementwise real part (diagnostic only; not a valid covariance
    /// matrix on resonance).
    pub fn real_part(&self) -> Matrix4<f64> {
        self.v.map(|z| z.re)
    }

    pub fn is_hermitian(&self) -> bool {
        (self.v - self.v.adjoint()).norm() <= STRUCTURE_TOL * self.v.norm().max(1.0)
    }

    /// Smallest eigenvalue of `V + iΩ`; non-negative for a physical state.
    pub fn uncertainty_min_eigenvalue(&self) -> f64 {
        let omega = symplectic_form().map(|x| Complex64::new(0.0, x));
        let m = self.v + omega;
        let m = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
        m.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn satisfies_uncertainty(&self) -> bool {
        self.uncertainty_min_eigenvalue() >= -STRUCTURE_TOL * self.v.norm().max(1.0)
    }

    /// Checks Hermiticity, the uncertainty relation and `Δω > 0`.
    pub fn validate(&self) -> Result<()> {
        require_positive("delta_omega", self.delta_omega)?;
        if !self.is_hermitian() {
            return Err(Error::NonPhysical(
                "covariance matrix is not Hermitian".into(),
            ));
        }
        if !self.satisfies_uncertainty() {
            return Err(Error::NonPhysical(format!(
                "covariance matrix violates V + iΩ ≥ 0 (min eigenvalue {:.3e})",
                self.uncertainty_min_eigenvalue()
            )));
        }
        Ok(())
    }

    /// True when `V` has the structure of two identical cavities read at
    /// resonance: vacuum amplitude quadratures, `V_A = V_B` and a purely
    /// anti-diagonal `V_AB`.
    pub fn is_symmetric_pair(&self) -> bool {
        let v = &self.v;
        let tol = STRUCTURE_TOL * v.norm().max(1.0);
        (v[(0, 0)] - 1.0).norm() <= tol
            && (v[(2, 2)] - 1.0).norm() <= tol
            && (self.block_a() - self.block_b()).norm() <= tol
            && v[(0, 2)].norm() <= tol
            && v[(1, 3)].norm() <= tol
    }
}

/// Covariance matrix of the outgoing fields at `ω_m`.
///
/// Requires equal coupling rates in both cavities (equal `K`); use the same
/// power in both before calling.
pub fn covariance_at_resonance(sys: &SystemParams, delta_omega: f64) -> Result<CovMatrix4> {
    let (wa, wb) = (sys.omega_q_a(), sys.omega_q_b());
    if (wa - wb).abs() > 1e-12 * wa.abs().max(wb.abs()) {
        return Err(Error::Config(format!(
            "covariance matrix requires equal coupling rates (omega_q A = {wa:.6e}, B = {wb:.6e})"
        )));
    }
    if !(delta_omega >= sys.gamma_m()) {
        return Err(Error::domain(
            "delta_omega",
            format!(
                "mode bandwidth {delta_omega:.3e} rad/s must be at least gamma_m = {:.3e} rad/s",
                sys.gamma_m()
            ),
        ));
    }
    let s = full_output_covariance_spectrum(sys.omega_m(), sys);
    Ok(CovMatrix4 {
        v: spectrum_to_covariance(&s),
        delta_omega,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegativityReport {
    pub e_n: f64,
    /// `det V_A + det V_B - 2 det V_AB`.
    pub sigma: f64,
    pub det_v: f64,
    /// Smallest symplectic eigenvalue of the partially transposed matrix.
    pub nu_minus: f64,
    pub entangled: bool,
    /// `(2n̄+1)(|α|²+|β|²)`, read from `det V_A - 1 - |G|²`.
    pub condition_lhs: f64,
    /// `2|G|`, read from `|V_{X_A Y_B}|`.
    pub condition_rhs: f64,
    /// `-ln(√(1+|G|²+N) - |G|)`; present only for the symmetric-pair
    /// structure.
    pub e_n_explicit: Option<f64>,
}

/// Logarithmic negativity
/// `E_N = max{-½ ln[(Σ - √(Σ² - 4 det V))/2], 0}`.
pub fn log_negativity(cov: &CovMatrix4) -> Result<NegativityReport> {
    let det_a = det2(cov.block_a()).re;
    let det_b = det2(cov.block_b()).re;
    let det_ab = det2(cov.block_ab()).re;
    let sigma = det_a + det_b - 2.0 * det_ab;
    let det_v = cov.v.determinant().re;

    let mut disc = sigma * sigma - 4.0 * det_v;
    if disc < 0.0 {
        if disc < -1e-12 * sigma * sigma {
            return Err(Error::domain(
                "covariance",
                format!("Σ² - 4 det V = {disc:.3e} < 0; matrix is not a physical state"),
            ));
        }
        disc = 0.0;
    }
    let larger = sigma + disc.sqrt();
    if !(larger > 0.0) || det_v < 0.0 {
        return Err(Error::domain(
            "covariance",
            format!("Σ = {sigma:.3e}, det V = {det_v:.3e} do not describe a physical state"),
        ));
    }
    // smaller root of ν⁴ - Σν² + det V without cancellation
    let nu_sq = 2.0 * det_v / larger;
    let e_n = if nu_sq < 1.0 - NU_SQ_TOL {
        -0.5 * nu_sq.ln()
    } else {
        0.0
    };

    let g = cov.v[(0, 3)].norm();
    let condition_lhs = det_a - 1.0 - g * g;
    let condition_rhs = 2.0 * g;
    let e_n_explicit = cov
        .is_symmetric_pair()
        // √(1+|G|²+N) - |G| written without cancellation
        .then(|| -((det_a - g * g) / (det_a.sqrt() + g)).ln());
    if let Some(explicit) = e_n_explicit {
        debug_assert!(
            (explicit.max(0.0) - e_n).abs() <= 1e-9 * e_n.abs().max(1.0) || e_n == 0.0,
            "explicit E_N {explicit} disagrees with {e_n}"
        );
    }
    Ok(NegativityReport {
        e_n,
        sigma,
        det_v,
        nu_minus: nu_sq.sqrt(),
        entangled: e_n > 0.0,
        condition_lhs,
        condition_rhs,
        e_n_explicit,
    })
}

/// One side-by-side comparison `lhs` vs `rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionSides {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementCondition {
    /// `(2n̄_B+1)(|α_B|²+|β_B|²) < 2|G|` at `ω_m`, dimensionless.
    pub exact: ConditionSides,
    /// `γ_m k_B T ≤ ħ ω_g² / 2`, W; `ħ G ρ` for Λ = 2.
    pub reduced: ConditionSides,
    /// Largest `T/Q_m` allowed by the reduced condition, K.
    pub tq_bound: f64,
}

/// Exact and reduced entanglement conditions at the mechanical resonance.
pub fn entanglement_condition(sys: &SystemParams) -> EntanglementCondition {
    let r = crate::dynamics::response_at(sys.omega_m(), sys);
    let n = sys.n_th_b();
    let lhs = (2.0 * n + 1.0) * (r.alpha_b.norm_sqr() + r.beta_b.norm_sqr());
    let rhs = 2.0 * r.g_cross.norm();

    let mech = &sys.cavity_b.mech;
    let c = &sys.constants;
    let red_lhs = mech.gamma_m() * c.k_b * mech.temperature;
    let red_rhs = c.hbar * sys.omega_g().powi(2) / 2.0;
    EntanglementCondition {
        exact: ConditionSides {
            lhs,
            rhs,
            satisfied: lhs < rhs,
        },
        reduced: ConditionSides {
            lhs: red_lhs,
            rhs: red_rhs,
            satisfied: red_rhs > 0.0 && red_lhs <= red_rhs,
        },
        tq_bound: red_rhs / (c.k_b * mech.omega_m),
    }
}

/// Size of the quantum superposition relative to the separation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoherenceRegime {
    /// `δx_q ≪ d`.
    Gaussian,
    /// `δx_q ≫ d`.
    NonGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceGeometry {
    /// Mean separation, m.
    pub d: f64,
    /// Quantum position spread, m.
    pub delta_xq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceBound {
    /// `||H_AB|| / ħ`, 1/s.
    pub interaction_rate: f64,
    /// `2 m γ_m k_B T δx_q² / ħ²`, 1/s.
    pub decoherence_rate: f64,
    pub satisfied: bool,
}

/// Compares the gravitational interaction rate with the thermal
/// decoherence rate.
///
/// Gaussian: `||H_AB|| = 2 Λ G m ρ δx_q²`; non-Gaussian: `||H_AB|| = G m²/d`.
pub fn decoherence_bound(
    mech: &MechanicalParams,
    regime: DecoherenceRegime,
    geometry: DecoherenceGeometry,
    lambda_form: f64,
    consts: &PhysicalConstants,
) -> Result<DecoherenceBound> {
    require_positive("d", geometry.d)?;
    require_positive("delta_xq", geometry.delta_xq)?;
    let ratio = geometry.delta_xq / geometry.d;
    let dx2 = geometry.delta_xq * geometry.delta_xq;
    let g = consts.g_newton;
    let m = mech.mass;
    let h_ab = match regime {
        DecoherenceRegime::Gaussian => {
            if ratio > 0.1 {
                log::warn!("gaussian regime assumes delta_xq << d, but delta_xq/d = {ratio:.3e}");
            }
            2.0 * lambda_form * g * m * mech.density * dx2
        }
        DecoherenceRegime::NonGaussian => {
            if ratio < 10.0 {
                log::warn!(
                    "non-gaussian regime assumes delta_xq >> d, but delta_xq/d = {ratio:.3e}"
                );
            }
            g * m * m / geometry.d
        }
    };
    let interaction_rate = h_ab / consts.hbar;
    let decoherence_rate = 2.0 * m * mech.gamma_m() * consts.k_b * mech.temperature * dx2
        / (consts.hbar * consts.hbar);
    Ok(DecoherenceBound {
        interaction_rate,
        decoherence_rate,
        satisfied: interaction_rate >= decoherence_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::GravityModel;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Paper-structure matrix from K, G and N = (2n̄+1)(|α|²+|β|²).
    fn structured(k: Complex64, g: Complex64, n: f64) -> CovMatrix4 {
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        let d = c(1.0 + k.norm_sqr() + g.norm_sqr() + n, 0.0);
        let v = Matrix4::new(
            one,
            k.conj(),
            zero,
            g.conj(),
            k,
            d,
            g,
            zero,
            zero,
            g.conj(),
            one,
            k.conj(),
            g,
            zero,
            k,
            d,
        );
        CovMatrix4 {
            v,
            delta_omega: 1.0,
        }
    }

    #[test]
    fn identity_is_separable() {
        let r = log_negativity(&CovMatrix4::identity(1.0)).unwrap();
        assert_eq!(r.e_n, 0.0);
        assert!(!r.entangled);
        assert_relative_eq!(r.nu_minus, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn unit_coupling_at_zero_temperature() {
        let r = log_negativity(&structured(c(0.0, 0.0), c(1.0, 0.0), 0.0)).unwrap();
        let expected = -(2f64.sqrt() - 1.0).ln();
        assert_relative_eq!(r.e_n, expected, max_relative = 1e-12);
        assert_relative_eq!(r.e_n, 0.881_373_587_019_543, max_relative = 1e-12);
        assert_relative_eq!(r.e_n_explicit.unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn threshold_gives_zero() {
        // N = 2|G| with values exact in binary
        let r = log_negativity(&structured(c(0.0, 0.0), c(1.5, 0.0), 3.0)).unwrap();
        assert_eq!(r.e_n, 0.0);
        assert!(!r.entangled);
        assert_eq!(r.condition_lhs, r.condition_rhs);
        let r = log_negativity(&structured(c(0.0, -0.75), c(-1.5, 0.0), 3.0)).unwrap();
        assert_eq!(r.e_n, 0.0);
    }

    #[test]
    fn complex_ponderomotive_term_leaves_negativity_unchanged() {
        let base = log_negativity(&structured(c(0.0, 0.0), c(0.8, 0.0), 0.5)).unwrap();
        // on resonance K is imaginary while G is real
        for k in [c(0.0, 3.0), c(0.0, -0.4), c(0.0, 40.0)] {
            let r = log_negativity(&structured(k, c(0.8, 0.0), 0.5)).unwrap();
            assert_relative_eq!(r.e_n, base.e_n, max_relative = 1e-9);
            assert_relative_eq!(r.e_n, r.e_n_explicit.unwrap(), max_relative = 1e-9);
        }
    }

    #[test]
    fn unphysical_matrix_is_rejected() {
        let mut v = Matrix4::identity();
        v[(0, 0)] = -1.0;
        let cov = CovMatrix4::from_real(v, 1.0);
        assert!(cov.validate().is_err());
        assert!(log_negativity(&cov).is_err());
    }

    #[test]
    fn resonance_matrix_matches_paper_structure() {
        let sys = SystemParams::reference();
        let cov = covariance_at_resonance(&sys, sys.gamma_m()).unwrap();
        let r = crate::dynamics::response_at(sys.omega_m(), &sys);
        let n = sys.n_th_a();
        let v = &cov.v;
        assert_relative_eq!(v[(0, 0)].re, 1.0, max_relative = 1e-14);
        assert_eq!(v[(1, 0)], r.k_a);
        assert_eq!(v[(0, 3)], r.g_cross.conj());
        assert_eq!(v[(1, 2)], r.g_cross);
        let d = 1.0
            + r.k_a.norm_sqr()
            + r.g_cross.norm_sqr()
            + (2.0 * n + 1.0) * (r.alpha_a.norm_sqr() + r.beta_a.norm_sqr());
        assert_relative_eq!(v[(1, 1)].re, d, max_relative = 1e-12);
        // on resonance, K is imaginary, G real
        assert!(r.k_a.re.abs() < 1e-12 * r.k_a.norm());
        assert!(r.g_cross.im.abs() < 1e-12 * r.g_cross.norm());
        assert!(cov.is_symmetric_pair());
        assert!(cov.validate().is_ok());
        assert_eq!(cov.real_part()[(1, 0)], v[(1, 0)].re);
    }

    #[test]
    fn resonance_preconditions() {
        let mut sys = SystemParams::reference();
        assert!(matches!(
            covariance_at_resonance(&sys, 0.5 * sys.gamma_m()),
            Err(Error::Domain { .. })
        ));
        sys.cavity_b.optical.power_cav *= 1.5;
        assert!(matches!(
            covariance_at_resonance(&sys, sys.gamma_m()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn no_light_gives_two_vacua() {
        let mut sys = SystemParams::reference();
        for cav in [&mut sys.cavity_a, &mut sys.cavity_b] {
            cav.optical.power_cav = 0.0;
        }
        let cov = covariance_at_resonance(&sys, 1.0).unwrap();
        assert!((cov.v - Matrix4::identity().map(|x: f64| c(x, 0.0))).norm() < 1e-15);
    }

    #[test]
    fn no_gravity_is_separable() {
        let mut sys = SystemParams::reference();
        sys.gravity_model = GravityModel::None;
        let cov = covariance_at_resonance(&sys, 1.0).unwrap();
        assert_eq!(cov.block_ab().norm(), 0.0);
        let r = log_negativity(&cov).unwrap();
        assert_eq!(r.e_n, 0.0);
    }

    /// With `R = Q_m ω_g²/ω_m²`, on resonance `|G| = 2C R` and
    /// `N = (2n̄+1) 4C (1 + R²)`, so `N - 2|G| ≥ 4C(1 - R + R²) > 0`: the
    /// symmetric resonance state is never entangled once the thermal cross
    /// path is kept.
    #[test]
    fn resonance_state_with_cross_path_is_never_entangled() {
        for (t, q, boost) in [
            (0.0, 1e6, 1.0),
            (0.0, 1e6, 3.9e3),
            (1e-12, 1e9, 125.0),
            (0.0, 1e3, 1e4),
        ] {
            let mut sys = SystemParams::reference();
            sys.gravity.boost = boost;
            for cav in [&mut sys.cavity_a, &mut sys.cavity_b] {
                cav.mech.temperature = t;
                cav.mech.q_m = q;
                cav.optical.power_cav = 1e-10;
            }
            let cond = entanglement_condition(&sys).exact;
            assert!(!cond.satisfied);
            let r = log_negativity(&covariance_at_resonance(&sys, 1.0).unwrap()).unwrap();
            assert!(!r.entangled && r.e_n == 0.0);
        }
    }

    #[test]
    fn reference_room_temperature_is_not_entangled() {
        let sys = SystemParams::reference();
        let r = log_negativity(&covariance_at_resonance(&sys, 1.0).unwrap()).unwrap();
        assert!(!r.entangled);
        let cond = entanglement_condition(&sys);
        assert!(!cond.exact.satisfied && !cond.reduced.satisfied);
    }

    #[test]
    fn reduced_condition_boundary() {
        let mut sys = SystemParams::reference();
        let tq = entanglement_condition(&sys).tq_bound;
        assert!((tq / 1.5e-18 - 1.0).abs() < 0.05, "{tq}");
        for cav in [&mut sys.cavity_a, &mut sys.cavity_b] {
            cav.mech.temperature = tq * cav.mech.q_m;
        }
        let cond = entanglement_condition(&sys);
        assert!((cond.reduced.lhs / cond.reduced.rhs - 1.0).abs() < 1e-6);
        for cav in [&mut sys.cavity_a, &mut sys.cavity_b] {
            cav.mech.temperature *= 1.0 - 1e-9;
        }
        assert!(entanglement_condition(&sys).reduced.satisfied);
        for cav in [&mut sys.cavity_a, &mut sys.cavity_b] {
            cav.mech.temperature = 0.0;
        }
        assert!(entanglement_condition(&sys).reduced.satisfied);
    }

    #[test]
    fn exact_and_reduced_agree_in_thermal_regime() {
        let base = SystemParams::reference();
        let mut checked = 0;
        for ti in 0..40 {
            for qi in 0..10 {
                let mut sys = base;
                let t = 10f64.powf(-12.0 + 0.3 * ti as f64);
                let q = 10f64.powf(4.0 + 0.5 * qi as f64);
                for cav in [&mut sys.cavity_a, &mut sys.cavity_b] {
                    cav.mech.temperature = t;
                    cav.mech.q_m = q;
                }
                let ratio = crate::dynamics::beta_alpha_ratio_at_resonance(&sys);
                if sys.n_th_b() <= 1e3 || ratio >= 1e-3 {
                    continue;
                }
                let cond = entanglement_condition(&sys);
                assert_eq!(cond.exact.satisfied, cond.reduced.satisfied, "T={t} Q={q}");
                checked += 1;
            }
        }
        // |β/α| < 1e-3 forces Q_m ω_g²/ω_m² < 1e-3 < 2n̄, so both verdicts are negative here
        assert!(checked >= 20, "{checked}");
    }

    #[test]
    fn gaussian_bound_is_independent_of_spread() {
        let sys = SystemParams::reference();
        let c = &sys.constants;
        let mut mech = sys.cavity_a.mech;
        let tq_limit = c.hbar * c.g_newton * mech.density * 2.0 / (2.0 * c.k_b * mech.omega_m);
        for (t_over, expect) in [(0.5, true), (2.0, false)] {
            mech.temperature = t_over * tq_limit * mech.q_m;
            let verdicts: Vec<bool> = [1e-18, 1e-15, 1e-12]
                .iter()
                .map(|&dx| {
                    decoherence_bound(
                        &mech,
                        DecoherenceRegime::Gaussian,
                        DecoherenceGeometry {
                            d: 1e-2,
                            delta_xq: dx,
                        },
                        1.0,
                        c,
                    )
                    .unwrap()
                    .satisfied
                })
                .collect();
            assert!(verdicts.iter().all(|&v| v == expect), "{verdicts:?}");
        }
    }

    #[test]
    fn non_gaussian_chain_endpoint() {
        let sys = SystemParams::reference();
        let c = &sys.constants;
        let mut mech = sys.cavity_a.mech;
        let d = (mech.mass / mech.density).cbrt();
        // temperature where γ_m k_B T = ħ G m / (2 d δx²) with δx = d, i.e. ħGρ/2
        mech.temperature = c.hbar * c.g_newton * mech.density / (2.0 * mech.gamma_m() * c.k_b);
        let b = decoherence_bound(
            &mech,
            DecoherenceRegime::NonGaussian,
            DecoherenceGeometry { d, delta_xq: d },
            2.0,
            c,
        )
        .unwrap();
        assert_relative_eq!(b.interaction_rate, b.decoherence_rate, max_relative = 1e-12);
    }

    #[test]
    fn non_positive_geometry_is_rejected() {
        let sys = SystemParams::reference();
        let g = DecoherenceGeometry {
            d: 0.0,
            delta_xq: 1.0,
        };
        assert!(decoherence_bound(
            &sys.cavity_a.mech,
            DecoherenceRegime::NonGaussian,
            g,
            2.0,
            &sys.constants
        )
        .is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]

            #[test]
            fn negativity_non_increasing_in_occupation(
                g in 0.01f64..50.0,
                noise in 0.0f64..5.0,
                n in 0.0f64..10.0,
                dn in 0.0f64..10.0,
                k_im in -20.0f64..20.0,
            ) {
                let at = |occ: f64| {
                    let cov = structured(c(0.0, k_im), c(g, 0.0), (2.0 * occ + 1.0) * noise);
                    log_negativity(&cov).unwrap().e_n
                };
                let (cold, hot) = (at(n), at(n + dn));
                prop_assert!(hot <= cold * (1.0 + 1e-9) + 1e-12, "{} > {}", hot, cold);
            }

            #[test]
            fn structured_verdicts_agree(
                g in 0.0f64..20.0,
                n in 0.0f64..40.0,
                k_im in -30.0f64..30.0,
            ) {
                let r = log_negativity(&structured(c(0.0, k_im), c(g, 0.0), n)).unwrap();
                prop_assert_eq!(r.entangled, n < 2.0 * g);
                prop_assert_eq!(r.entangled, r.e_n_explicit.unwrap() > 0.0);
                prop_assert!((r.e_n - r.e_n_explicit.unwrap().max(0.0)).abs() <= 1e-9 * r.e_n.max(1.0));
            }

            #[test]
            fn resonance_matrix_is_physical(
                log_t in -12.0f64..3.0,
                log_q in 3.0f64..9.0,
                log_p in -1.0f64..4.0,
                log_boost in 0.0f64..4.0,
            ) {
                let mut sys = SystemParams::reference();
                sys.gravity.boost = 10f64.powf(log_boost);
                for cav in [&mut sys.cavity_a, &mut sys.cavity_b] {
                    cav.mech.temperature = 10f64.powf(log_t);
                    cav.mech.q_m = 10f64.powf(log_q);
                    cav.optical.power_cav = 10f64.powf(log_p);
                }
                let cov = covariance_at_resonance(&sys, 1.0).unwrap();
                prop_assert!(cov.is_hermitian());
                prop_assert!(cov.satisfies_uncertainty());
                let r = log_negativity(&cov).unwrap();
                let explicit = r.e_n_explicit.unwrap();
                prop_assert!((explicit.max(0.0) - r.e_n).abs() <= 1e-9 * r.e_n.max(1.0) || r.e_n == 0.0 && explicit <= 1e-9);
                prop_assert_eq!(r.entangled, r.condition_lhs < r.condition_rhs);
                prop_assert_eq!(r.entangled, entanglement_condition(&sys).exact.satisfied);
            }

            #[test]
            fn non_gaussian_implies_density_bound(
                log_m in -6.0f64..0.0,
                log_rho in 3.0f64..4.5,
                d_scale in 1.0f64..5.0,
                dx_scale in 1.0f64..100.0,
                log_tq in -22.0f64..-15.0,
            ) {
                let consts = PhysicalConstants::default();
                let rho = 10f64.powf(log_rho);
                let m = 10f64.powf(log_m);
                let d = (m / rho).cbrt() * d_scale;
                let mut mech = SystemParams::reference().cavity_a.mech;
                mech.mass = m;
                mech.density = rho;
                mech.temperature = 10f64.powf(log_tq) * mech.q_m;
                let b = decoherence_bound(
                    &mech,
                    DecoherenceRegime::NonGaussian,
                    DecoherenceGeometry { d, delta_xq: d * dx_scale },
                    2.0,
                    &consts,
                ).unwrap();
                if b.satisfied {
                    prop_assert!(mech.gamma_m() * consts.k_b * mech.temperature <= consts.hbar * consts.g_newton * rho);
                }
            }
        }
    }
}
