//! Logarithmic negativity cross-checked against the partially transposed
//! symplectic spectrum of random Gaussian states.

use gravcorr::entanglement::{
    covariance_at_resonance, entanglement_condition, log_negativity, symplectic_form, CovMatrix4,
};
use gravcorr::SystemParams;
use nalgebra::Matrix4;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rotation(theta_a: f64, theta_b: f64) -> Matrix4<f64> {
    let (ca, sa) = (theta_a.cos(), theta_a.sin());
    let (cb, sb) = (theta_b.cos(), theta_b.sin());
    Matrix4::new(
        ca, sa, 0.0, 0.0, //
        -sa, ca, 0.0, 0.0, //
        0.0, 0.0, cb, sb, //
        0.0, 0.0, -sb, cb,
    )
}

fn beam_splitter(theta: f64) -> Matrix4<f64> {
    let (c, s) = (theta.cos(), theta.sin());
    Matrix4::new(
        c, 0.0, s, 0.0, //
        0.0, c, 0.0, s, //
        -s, 0.0, c, 0.0, //
        0.0, -s, 0.0, c,
    )
}

fn passive(rng: &mut ChaCha8Rng) -> Matrix4<f64> {
    let tau = std::f64::consts::TAU;
    rotation(rng.random_range(0.0..tau), rng.random_range(0.0..tau))
        * beam_splitter(rng.random_range(0.0..tau))
        * rotation(rng.random_range(0.0..tau), rng.random_range(0.0..tau))
}

/// Random two-mode symplectic matrix, Bloch–Messiah form `O₁ Z O₂`.
fn random_symplectic(rng: &mut ChaCha8Rng) -> Matrix4<f64> {
    let (r1, r2): (f64, f64) = (rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2));
    let z = Matrix4::from_diagonal(&nalgebra::Vector4::new(
        r1.exp(),
        (-r1).exp(),
        r2.exp(),
        (-r2).exp(),
    ));
    passive(rng) * z * passive(rng)
}

/// `V = S diag(ν₁, ν₁, ν₂, ν₂) Sᵀ` with `ν ≥ 1`.
fn random_state(rng: &mut ChaCha8Rng) -> (Matrix4<f64>, Matrix4<f64>) {
    let s = random_symplectic(rng);
    let nu1 = 1.0 + rng.random_range(0.0..2.0f64).powi(2);
    let nu2 = 1.0 + rng.random_range(0.0..2.0f64).powi(2);
    let d = Matrix4::from_diagonal(&nalgebra::Vector4::new(nu1, nu1, nu2, nu2));
    (s * d * s.transpose(), s)
}

/// Independent oracle: `-ln ν̃₋` from the eigenvalues `±iν̃` of `Ω Ṽ`,
/// `Ṽ` the covariance with `Y_B → -Y_B`.
fn ppt_negativity(v: &Matrix4<f64>) -> f64 {
    let p = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, 1.0, -1.0));
    let vt = p * v * p;
    let eig = (symplectic_form() * vt).complex_eigenvalues();
    let nu_min = eig.iter().map(|z| z.im.abs()).fold(f64::INFINITY, f64::min);
    (-nu_min.ln()).max(0.0)
}

#[test]
fn generated_matrices_are_symplectic() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let omega = symplectic_form();
    for _ in 0..50 {
        let s = random_symplectic(&mut rng);
        assert!((s * omega * s.transpose() - omega).norm() < 1e-10);
    }
}

#[test]
fn negativity_matches_ppt_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut entangled = 0;
    for i in 0..2000 {
        let (v, _) = random_state(&mut rng);
        let cov = CovMatrix4::from_real(v, 1.0);
        assert!(cov.satisfies_uncertainty(), "draw {i}");
        let report = log_negativity(&cov).unwrap();
        let oracle = ppt_negativity(&v);
        assert!(
            (report.e_n - oracle).abs() <= 1e-9 * oracle.max(1.0),
            "draw {i}: {} vs {oracle}",
            report.e_n
        );
        if oracle > 0.0 {
            entangled += 1;
        }
    }
    assert!(entangled > 200, "only {entangled} entangled draws");
}

/// Resonance matrices of the coupled cavities across temperature, Q and
/// gravity boost, at a power that keeps the matrix well conditioned
/// (C ≈ 1). With the thermal cross path the model never entangles, so both
/// verdicts must be negative everywhere.
#[test]
fn verdict_matches_condition_over_parameter_cube() {
    let base = SystemParams::reference();
    for ti in 0..10 {
        for qi in 0..10 {
            for bi in 0..10 {
                let mut sys = base;
                sys.gravity.boost = 10f64.powf(0.25 * bi as f64);
                for cav in [&mut sys.cavity_a, &mut sys.cavity_b] {
                    cav.mech.temperature = 10f64.powf(-12.0 + 1.3 * ti as f64);
                    cav.mech.q_m = 10f64.powf(3.0 + 0.7 * qi as f64);
                    cav.optical.power_cav = 1.3e-10;
                }
                let report = log_negativity(&covariance_at_resonance(&sys, 1.0).unwrap()).unwrap();
                let cond = entanglement_condition(&sys).exact;
                assert_eq!(
                    report.entangled, cond.satisfied,
                    "T index {ti}, Q index {qi}, boost index {bi}"
                );
                assert!(!report.entangled);
            }
        }
    }
}

fn structured(k: f64, g: f64, n: f64) -> CovMatrix4 {
    let mut v = Matrix4::<Complex64>::identity();
    let d = Complex64::new(1.0 + k * k + g * g + n, 0.0);
    v[(1, 1)] = d;
    v[(3, 3)] = d;
    v[(1, 0)] = Complex64::new(0.0, k);
    v[(0, 1)] = Complex64::new(0.0, -k);
    v[(3, 2)] = Complex64::new(0.0, k);
    v[(2, 3)] = Complex64::new(0.0, -k);
    v[(0, 3)] = Complex64::new(g, 0.0);
    v[(3, 0)] = Complex64::new(g, 0.0);
    v[(1, 2)] = Complex64::new(g, 0.0);
    v[(2, 1)] = Complex64::new(g, 0.0);
    CovMatrix4 {
        v,
        delta_omega: 1.0,
    }
}

/// Paper-structure matrices over a cube of |G|, N and |K|.
#[test]
fn verdict_matches_condition_over_structured_cube() {
    let mut positives = 0;
    for gi in 0..10 {
        for ni in 0..10 {
            for ki in 0..10 {
                let g = 0.05 + 0.9 * gi as f64;
                let n = 0.37 * ni as f64 * (1.0 + gi as f64);
                let k = -10.0 + 2.1 * ki as f64;
                let r = log_negativity(&structured(k, g, n)).unwrap();
                assert_eq!(r.entangled, n < 2.0 * g, "G {g}, N {n}, K {k}");
                let explicit = r.e_n_explicit.unwrap();
                assert!((r.e_n - explicit.max(0.0)).abs() < 1e-9 * r.e_n.max(1.0));
                positives += r.entangled as usize;
            }
        }
    }
    assert!(positives > 100 && positives < 900, "{positives}");
}
