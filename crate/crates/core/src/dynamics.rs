//! Frequency-domain linear response of the coupled cavities.
//!
//! With the cavity modes adiabatically eliminated, the outgoing quadratures
//! obey
//!
//! ```text
//! [X_A]   [1   0  0   0] [X_A]   [0   0 ]
//! [Y_A] = [K_A 1  G   0] [Y_A] + [α_A β_A] [Q_A^th]
//! [X_B]   [0   0  1   0] [X_B]   [0   0 ] [Q_B^th]
//! [Y_B]   [G   0  K_B 1] [Y_B]   [β_B α_B]
//! ```
//!
//! where the right-hand vectors are the ingoing vacuum quadratures and the
//! normalised thermal forces. All spectra are double-sided; the ingoing
//! vacuum has spectral density 1/2 and the thermal forces `n̄_th + 1/2`.

use std::io::Write;

use nalgebra::{Matrix4, Matrix4x2, Vector2, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::params::{GravityModel, MechanicalParams, SystemParams};

/// Mechanical susceptibility `χ_qq(ω) = -ω_m / (ω² - ω_m² + i γ_m ω)`.
pub fn susceptibility(omega: f64, mech: &MechanicalParams) -> Complex64 {
    let wm = mech.omega_m;
    -wm / Complex64::new(omega * omega - wm * wm, mech.gamma_m() * omega)
}

/// Transfer coefficients at a single angular frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyResponse {
    pub omega: f64,
    pub chi_qq: Complex64,
    pub k_a: Complex64,
    pub k_b: Complex64,
    pub g_cross: Complex64,
    pub alpha_a: Complex64,
    pub alpha_b: Complex64,
    pub beta_a: Complex64,
    pub beta_b: Complex64,
}

impl FrequencyResponse {
    /// Input matrix acting on `(X_A, Y_A, X_B, Y_B)^in`.
    pub fn input_matrix(&self) -> Matrix4<Complex64> {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Matrix4::new(
            one,
            zero,
            zero,
            zero, //
            self.k_a,
            one,
            self.g_cross,
            zero, //
            zero,
            zero,
            one,
            zero, //
            self.g_cross,
            zero,
            self.k_b,
            one,
        )
    }

    /// Matrix acting on `(Q_A^th, Q_B^th)`.
    pub fn thermal_matrix(&self) -> Matrix4x2<Complex64> {
        let zero = Complex64::new(0.0, 0.0);
        Matrix4x2::new(
            zero,
            zero, //
            self.alpha_a,
            self.beta_a, //
            zero,
            zero, //
            self.beta_b,
            self.alpha_b,
        )
    }
}

/// Evaluates every transfer coefficient at `omega`.
///
/// Under [`GravityModel::SchroedingerNewton`] the gravity-mediated coupling
/// of quantum fluctuations vanishes (`G = 0`); the classical thermal cross
/// path (`β`) survives only if `sys.sn_keep_thermal_cross` is set.
pub fn response_at(omega: f64, sys: &SystemParams) -> FrequencyResponse {
    let mech = &sys.cavity_a.mech;
    let wm = mech.omega_m;
    let gm = mech.gamma_m();
    let chi = susceptibility(omega, mech);

    let wg2 = sys.omega_g().powi(2);
    let (quantum_wg2, thermal_wg2) = match sys.gravity_model {
        GravityModel::Quantum => (wg2, wg2),
        GravityModel::SchroedingerNewton if sys.sn_keep_thermal_cross => (0.0, wg2),
        GravityModel::SchroedingerNewton | GravityModel::None => (0.0, 0.0),
    };

    let (wqa, wqb) = (sys.omega_q_a(), sys.omega_q_b());
    let (ga, gb) = (sys.gamma_a(), sys.gamma_b());

    let k_a = -4.0 * wqa * wqa * chi / ga;
    let k_b = -4.0 * wqb * wqb * chi / gb;
    let g_cross = 4.0 * wqa * wqb * quantum_wg2 * chi * chi / ((ga * gb).sqrt() * wm);
    let alpha_a = 2.0 * (2.0 * gm / ga).sqrt() * wqa * chi;
    let alpha_b = 2.0 * (2.0 * gm / gb).sqrt() * wqb * chi;
    let beta_a = alpha_a * chi * thermal_wg2 / wm;
    let beta_b = alpha_b * chi * thermal_wg2 / wm;

    FrequencyResponse {
        omega,
        chi_qq: chi,
        k_a,
        k_b,
        g_cross,
        alpha_a,
        alpha_b,
        beta_a,
        beta_b,
    }
}

/// `|β/α|` at the mechanical resonance, `Q_m ω_g²/ω_m²`.
pub fn beta_alpha_ratio_at_resonance(sys: &SystemParams) -> f64 {
    sys.q_m() * sys.omega_g().powi(2) / sys.omega_m().powi(2)
}

/// Logs a warning when the adiabatic-elimination assumption `γ ≫ ω_m` is
/// doubtful for either cavity.
pub fn warn_if_not_adiabatic(sys: &SystemParams) {
    let wm = sys.omega_m();
    for (name, g) in [("A", sys.gamma_a()), ("B", sys.gamma_b())] {
        if wm > g / 10.0 {
            log::warn!(
                "cavity {name}: omega_m = {wm:.3e} rad/s exceeds gamma/10 = {:.3e} rad/s; \
                 adiabatic elimination of the cavity mode is questionable",
                g / 10.0
            );
        }
    }
}

/// Output spectra relevant to the `X_A`–`Y_B` correlation measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraSet {
    /// Angular frequencies, rad/s.
    pub grid: Vec<f64>,
    /// Amplitude quadrature of A.
    pub s_xx: Vec<f64>,
    /// Part of `Y_B` uncorrelated with `X_A`.
    pub s_nn: Vec<f64>,
    /// Cross spectrum of `X_A` and `Y_B`.
    pub s_xy: Vec<Complex64>,
    /// Full phase-quadrature spectrum of B, `S_NN + |S_XY|²/S_XX`.
    pub s_yy: Vec<f64>,
}

impl SpectraSet {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// Spectral values at one frequency; see [`output_spectra`].
pub(crate) fn spectra_point(
    r: &FrequencyResponse,
    n_a: f64,
    n_b: f64,
) -> (f64, f64, Complex64, f64) {
    let s_xy = r.g_cross.conj() * 0.5;
    let s_xx = 0.5;
    let s_nn = 0.5
        * (1.0
            + r.k_b.norm_sqr()
            + (2.0 * n_a + 1.0) * r.beta_b.norm_sqr()
            + (2.0 * n_b + 1.0) * r.alpha_b.norm_sqr());
    let s_yy = s_nn + s_xy.norm_sqr() / s_xx;
    (s_xx, s_nn, s_xy, s_yy)
}

/// Evaluates `S_XX`, `S_NN`, `S_XY` (and `S_YY`) on `grid`:
///
/// `S_XY = G*/2`, `S_XX = 1/2`,
/// `S_NN = [1 + |K_B|² + (2n̄_A+1)|β_B|² + (2n̄_B+1)|α_B|²]/2`.
pub fn output_spectra(grid: &[f64], sys: &SystemParams) -> SpectraSet {
    warn_if_not_adiabatic(sys);
    let (n_a, n_b) = (sys.n_th_a(), sys.n_th_b());
    let mut out = SpectraSet {
        grid: grid.to_vec(),
        s_xx: Vec::with_capacity(grid.len()),
        s_nn: Vec::with_capacity(grid.len()),
        s_xy: Vec::with_capacity(grid.len()),
        s_yy: Vec::with_capacity(grid.len()),
    };
    for &w in grid {
        let (s_xx, s_nn, s_xy, s_yy) = spectra_point(&response_at(w, sys), n_a, n_b);
        out.s_xx.push(s_xx);
        out.s_nn.push(s_nn);
        out.s_xy.push(s_xy);
        out.s_yy.push(s_yy);
    }
    out
}

/// Full double-sided cross-spectral matrix of `(X_A, Y_A, X_B, Y_B)^out`,
/// with entry `(i, j)` the spectrum of `⟨O_i(t) O_j(0)⟩`.
pub fn full_output_covariance_spectrum(omega: f64, sys: &SystemParams) -> Matrix4<Complex64> {
    let r = response_at(omega, sys);
    let m = r.input_matrix();
    let t = r.thermal_matrix();
    let vacuum = Matrix4::from_diagonal(&Vector4::repeat(Complex64::new(0.5, 0.0)));
    let thermal = nalgebra::Matrix2::from_diagonal(&Vector2::new(
        Complex64::new(sys.n_th_a() + 0.5, 0.0),
        Complex64::new(sys.n_th_b() + 0.5, 0.0),
    ));
    m * vacuum * m.adjoint() + t * thermal * t.adjoint()
}

/// Writes one CSV row per grid point with columns
/// `freq_hz, s_xx, s_nn, re_s_xy, im_s_xy, abs_g, abs_k, abs_alpha, abs_beta`
/// (K, α and β of cavity B, the read-out side). Every line of `header` is
/// emitted first as a `#` comment.
pub fn write_spectra_csv<W: Write>(
    mut out: W,
    grid: &[f64],
    sys: &SystemParams,
    header: &[String],
) -> std::io::Result<()> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    writeln!(
        out,
        "# double-sided spectral densities, vacuum level 1/2; columns abs_k/abs_alpha/abs_beta refer to cavity B"
    )?;
    writeln!(
        out,
        "freq_hz,s_xx,s_nn,re_s_xy,im_s_xy,abs_g,abs_k,abs_alpha,abs_beta"
    )?;
    let (n_a, n_b) = (sys.n_th_a(), sys.n_th_b());
    for &w in grid {
        let r = response_at(w, sys);
        let (s_xx, s_nn, s_xy, _) = spectra_point(&r, n_a, n_b);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            w / (2.0 * std::f64::consts::PI),
            s_xx,
            s_nn,
            s_xy.re,
            s_xy.im,
            r.g_cross.norm(),
            r.k_b.norm(),
            r.alpha_b.norm(),
            r.beta_b.norm()
        )?;
    }
    Ok(())
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix4x2, Vector4};

    fn reference() -> SystemParams {
        SystemParams::reference()
    }

    #[test]
    fn susceptibility_limits() {
        let mech = reference().cavity_a.mech;
        let static_chi = susceptibility(0.0, &mech);
        assert_relative_eq!(static_chi.re, 1.0 / mech.omega_m, max_relative = 1e-15);
        assert_eq!(static_chi.im, 0.0);

        let res = susceptibility(mech.omega_m, &mech);
        assert!(res.re.abs() < 1e-12 * res.im.abs());
        assert_relative_eq!(res.im, 1.0 / mech.gamma_m(), max_relative = 1e-12);
        assert_relative_eq!(res.norm(), mech.q_m / mech.omega_m, max_relative = 1e-12);

        for w in [0.3, 6.0, 6.2831, 40.0] {
            let a = susceptibility(-w, &mech);
            let b = susceptibility(w, &mech).conj();
            assert_relative_eq!(a.re, b.re, max_relative = 1e-14);
            assert_relative_eq!(a.im, b.im, max_relative = 1e-14);
        }
    }

    #[test]
    fn cross_coupling_peak_matches_cooperativity_form() {
        let sys = reference();
        let r = response_at(sys.omega_m(), &sys);
        let expected = 2.0
            * (sys.cooperativity_a() * sys.cooperativity_b()).sqrt()
            * sys.q_m()
            * (sys.omega_g() / sys.omega_m()).powi(2);
        assert_relative_eq!(r.g_cross.norm(), expected, max_relative = 1e-10);
    }

    #[test]
    fn decoupled_limit() {
        let mut sys = reference();
        sys.gravity.boost = 0.0;
        let r = response_at(sys.omega_m() * 1.001, &sys);
        assert_eq!(r.g_cross.norm(), 0.0);
        assert_eq!(r.beta_a.norm(), 0.0);
        assert_eq!(r.beta_b.norm(), 0.0);
        assert!(r.k_b.norm() > 0.0 && r.alpha_b.norm() > 0.0);
    }

    #[test]
    fn schroedinger_newton_removes_quantum_coupling_only() {
        let sys = reference();
        let mut sn = sys;
        sn.gravity_model = GravityModel::SchroedingerNewton;
        let w = sys.omega_m();
        let (q, s) = (response_at(w, &sys), response_at(w, &sn));
        assert_eq!(s.g_cross.norm(), 0.0);
        assert_eq!(s.alpha_b, q.alpha_b);
        assert_eq!(s.k_b, q.k_b);
        assert_eq!(s.beta_b.norm(), 0.0);
        sn.sn_keep_thermal_cross = true;
        let kept = response_at(w, &sn);
        assert_eq!(kept.g_cross.norm(), 0.0);
        assert_eq!(kept.beta_b, q.beta_b);
    }

    #[test]
    fn spectra_basic_properties() {
        let sys = reference();
        let wm = sys.omega_m();
        let gm = sys.gamma_m();
        let grid: Vec<f64> = (-200..=200).map(|k| wm + k as f64 * 0.1 * gm).collect();
        let s = output_spectra(&grid, &sys);
        assert!(s.s_xx.iter().all(|&v| v == 0.5));
        assert!(s.s_nn.iter().all(|&v| v >= 0.5));
        let peak = s
            .s_xy
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0;
        assert_eq!(peak, 200);
        for i in 0..s.len() {
            assert!(s.s_xy[i].norm_sqr() <= s.s_xx[i] * s.s_yy[i]);
        }

        let mut off = sys;
        off.gravity_model = GravityModel::None;
        let s0 = output_spectra(&grid, &off);
        assert!(s0.s_xy.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn vacuum_plus_zero_point_floor() {
        let mut sys = reference();
        sys.cavity_b.mech.temperature = 0.0;
        sys.cavity_a.mech.temperature = 0.0;
        sys.gravity.boost = 0.0;
        let w = sys.omega_m();
        let r = response_at(w, &sys);
        let s = output_spectra(&[w], &sys);
        let expected = 0.5 * (1.0 + r.k_b.norm_sqr() + r.alpha_b.norm_sqr());
        assert_relative_eq!(s.s_nn[0], expected, max_relative = 1e-14);
    }

    #[test]
    fn beta_alpha_ratio_identity() {
        let sys = reference();
        for w in [0.1, 3.0, sys.omega_m(), 9.0] {
            let r = response_at(w, &sys);
            let ratio = r.beta_b / r.alpha_b;
            let expected = r.chi_qq * sys.omega_g().powi(2) / sys.omega_m();
            assert_relative_eq!(
                ratio.re,
                expected.re,
                max_relative = 1e-12,
                epsilon = 1e-300
            );
            assert_relative_eq!(ratio.im, expected.im, max_relative = 1e-12);
        }
        let r = response_at(sys.omega_m(), &sys);
        assert_relative_eq!(
            (r.beta_b / r.alpha_b).norm(),
            beta_alpha_ratio_at_resonance(&sys),
            max_relative = 1e-9
        );
        assert!(beta_alpha_ratio_at_resonance(&sys) < 0.1);
    }

    #[test]
    fn coefficients_are_conjugate_symmetric() {
        let sys = reference();
        for w in [0.5, 6.28, 6.2832, 12.0] {
            let p = response_at(w, &sys);
            let m = response_at(-w, &sys);
            for (a, b) in [
                (p.k_a, m.k_a),
                (p.g_cross, m.g_cross),
                (p.alpha_b, m.alpha_b),
                (p.beta_b, m.beta_b),
            ] {
                assert_relative_eq!(a.re, b.re, max_relative = 1e-13);
                assert_relative_eq!(a.im, -b.im, max_relative = 1e-13);
            }
        }
    }

    /// Independent route: propagate unit-variance uncorrelated inputs
    /// through the full matrix element by element and compare with the
    /// closed-form spectra.
    #[test]
    fn matrix_route_matches_closed_form() {
        let mut sys = reference();
        sys.cavity_b.mech.temperature = 120.0;
        let (n_a, n_b) = (sys.n_th_a(), sys.n_th_b());
        for w in [1.0, sys.omega_m() - 3.0 * sys.gamma_m(), sys.omega_m(), 7.5] {
            let r = response_at(w, &sys);
            let m = r.input_matrix();
            let t: Matrix4x2<Complex64> = r.thermal_matrix();
            let input_psd = Vector4::repeat(0.5);
            let thermal_psd = [n_a + 0.5, n_b + 0.5];
            let mut s_yy = 0.0;
            let mut s_xy = Complex64::new(0.0, 0.0);
            for k in 0..4 {
                s_yy += m[(3, k)].norm_sqr() * input_psd[k];
                s_xy += m[(0, k)] * m[(3, k)].conj() * input_psd[k];
            }
            for k in 0..2 {
                s_yy += t[(3, k)].norm_sqr() * thermal_psd[k];
            }
            let s = output_spectra(&[w], &sys);
            assert_relative_eq!(s.s_yy[0], s_yy, max_relative = 1e-12);
            assert_relative_eq!(
                s.s_xy[0].re,
                s_xy.re,
                max_relative = 1e-12,
                epsilon = 1e-300
            );
            assert_relative_eq!(
                s.s_xy[0].im,
                s_xy.im,
                max_relative = 1e-12,
                epsilon = 1e-300
            );

            let full = full_output_covariance_spectrum(w, &sys);
            assert_relative_eq!(full[(3, 3)].re, s_yy, max_relative = 1e-12);
            assert_relative_eq!(full[(0, 0)].re, 0.5, max_relative = 1e-15);
            assert_eq!(full[(0, 3)], s.s_xy[0]);
            assert_eq!(full[(3, 0)], s.s_xy[0].conj());
        }
    }

    #[test]
    fn csv_layout() {
        let sys = reference();
        let mut buf = Vec::new();
        write_spectra_csv(&mut buf, &[6.0, 6.2831853], &sys, &["params: test".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# params"));
        let header = lines.iter().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(
            *header,
            "freq_hz,s_xx,s_nn,re_s_xy,im_s_xy,abs_g,abs_k,abs_alpha,abs_beta"
        );
        assert_eq!(lines.iter().filter(|l| !l.starts_with('#')).count(), 3);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn full_spectrum_is_hermitian_psd(
                f_m in 0.5f64..20.0,
                q in 10.0f64..1e6,
                t_a in 0.0f64..300.0,
                t_b in 0.0f64..300.0,
                p_b in 1.0f64..5000.0,
                boost in 0.0f64..1e3,
                detune in -50.0f64..50.0,
            ) {
                let mut sys = SystemParams::reference();
                for c in [&mut sys.cavity_a, &mut sys.cavity_b] {
                    c.mech.omega_m = 2.0 * std::f64::consts::PI * f_m;
                    c.mech.q_m = q;
                }
                sys.cavity_a.mech.temperature = t_a;
                sys.cavity_b.mech.temperature = t_b;
                sys.cavity_b.optical.power_cav = p_b;
                sys.gravity.boost = boost;
                let w = sys.omega_m() + detune * sys.gamma_m();
                let s = full_output_covariance_spectrum(w, &sys);
                let herm = (s - s.adjoint()).norm();
                prop_assert!(herm <= 1e-12 * s.norm());
                let eig = s.symmetric_eigenvalues();
                let scale = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                prop_assert!(eig.iter().all(|&v| v >= -1e-9 * scale));
            }
        }
    }
}
