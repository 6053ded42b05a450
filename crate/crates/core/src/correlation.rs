//! Signal-to-noise ratio of the `X_A`–`Y_B` cross-correlation measurement.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    output_spectra, response_at, spectra_point, warn_if_not_adiabatic, SpectraSet,
};
use crate::error::{require_positive, Error, Result};
use crate::params::{power_for_omega_q, SystemParams, YEAR_S};
use crate::quad;

/// Half-width of the dense window around `±ω_m`, in units of `γ_m`.
pub const DENSE_HALF_WIDTH: f64 = 20.0;
/// Grid points per `γ_m` inside the dense window.
pub const POINTS_PER_GAMMA_M: usize = 50;

const QUAD_REL_TOL: f64 = 1e-10;

/// Frequency grid for the SNR integral: a logarithmic grid over
/// `ω_m·[1e-3, 1e3]` on each side of zero, merged with dense linear
/// windows of half-width 20 `γ_m` around `±ω_m`.
pub fn snr_grid(sys: &SystemParams) -> Vec<f64> {
    let wm = sys.omega_m();
    let gm = sys.gamma_m();
    let half = DENSE_HALF_WIDTH * gm;
    let n_dense = (2.0 * DENSE_HALF_WIDTH) as usize * POINTS_PER_GAMMA_M;
    let lo = (wm - half).max(0.0);
    let hi = wm + half;
    let coarse = 241;
    let mut pos: Vec<f64> = (0..coarse)
        .map(|i| wm * 10f64.powf(-3.0 + 6.0 * i as f64 / (coarse - 1) as f64))
        .filter(|&w| w < lo || w > hi)
        .collect();
    pos.extend((0..=n_dense).map(|i| lo + (hi - lo) * i as f64 / n_dense as f64));
    // geometric transition from the dense spacing out to the coarse spacing
    let coarse_step = wm * (10f64.powf(6.0 / (coarse - 1) as f64) - 1.0);
    let mut step = (hi - lo) / n_dense as f64;
    let (mut below, mut above) = (lo, hi);
    while step < coarse_step {
        step *= 1.15;
        below -= step;
        above += step;
        pos.push(below);
        pos.push(above);
    }
    pos.retain(|&w| w > 0.0);
    pos.sort_by(f64::total_cmp);
    pos.dedup();
    let mut grid: Vec<f64> = pos.iter().rev().map(|&w| -w).collect();
    grid.extend(pos);
    grid
}

pub(crate) fn check_grid_coverage(grid: &[f64], sys: &SystemParams) -> Result<()> {
    let need = sys.omega_m() + DENSE_HALF_WIDTH * sys.gamma_m();
    let (lo, hi) = match (grid.first(), grid.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::Config("empty frequency grid".into())),
    };
    if lo > -need || hi < need {
        return Err(Error::Config(format!(
            "frequency grid [{lo:.4e}, {hi:.4e}] rad/s does not cover ±(ω_m + 20γ_m) = ±{need:.4e} rad/s"
        )));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(
            "frequency grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Logs a warning when `tau` is shorter than ten mechanical damping times.
pub fn warn_if_tau_short(sys: &SystemParams, tau: f64) {
    let floor = 10.0 * 2.0 * PI / sys.gamma_m();
    if tau < floor {
        log::warn!(
            "tau = {tau:.3e} s is below 10 damping times ({floor:.3e} s); the stationary SNR formula is unreliable"
        );
    }
}

/// Matched filter `F ∝ S_XY* / (S_XX S_NN)` on the grid of `spectra`,
/// scaled to unit peak magnitude (all zeros when `S_XY` vanishes).
pub fn optimal_filter(spectra: &SpectraSet) -> Result<Vec<Complex64>> {
    let mut f = Vec::with_capacity(spectra.len());
    for i in 0..spectra.len() {
        let d = spectra.s_xx[i] * spectra.s_nn[i];
        if !(spectra.s_xx[i] > 0.0 && spectra.s_nn[i] > 0.0) {
            return Err(Error::domain(
                "spectra",
                format!(
                    "noise spectrum must be positive (S_XX·S_NN = {d} at ω = {})",
                    spectra.grid[i]
                ),
            ));
        }
        f.push(spectra.s_xy[i].conj() / d);
    }
    let peak = f.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if peak > 0.0 {
        for z in &mut f {
            *z /= peak;
        }
    }
    Ok(f)
}

fn trapezoid<F: Fn(usize) -> f64>(grid: &[f64], f: F) -> f64 {
    (1..grid.len())
        .map(|i| 0.5 * (grid[i] - grid[i - 1]) * (f(i) + f(i - 1)))
        .sum()
}

/// General SNR of a correlation filter `F`, evaluated by the trapezoid
/// rule on the grid of `spectra`:
///
/// `√τ · Re∫ S_XY F dω/2π / [∫ |F|² S_XX S_NN dω/2π]^{1/2}`.
///
/// Returns 0 for an identically zero filter.
pub fn snr_functional(spectra: &SpectraSet, filter: &[Complex64], tau: f64) -> f64 {
    assert_eq!(
        filter.len(),
        spectra.len(),
        "filter and spectra grids differ"
    );
    let g = &spectra.grid;
    let num = trapezoid(g, |i| (spectra.s_xy[i] * filter[i]).re) / (2.0 * PI);
    let den = trapezoid(g, |i| {
        filter[i].norm_sqr() * spectra.s_xx[i] * spectra.s_nn[i]
    }) / (2.0 * PI);
    if den <= 0.0 {
        return 0.0;
    }
    tau.sqrt() * num / den.sqrt()
}

/// Optimal-filter SNR on a tabulated grid (trapezoid rule).
pub fn snr_tabulated(spectra: &SpectraSet, tau: f64) -> f64 {
    let integral = trapezoid(&spectra.grid, |i| {
        spectra.s_xy[i].norm_sqr() / (spectra.s_xx[i] * spectra.s_nn[i])
    }) / (2.0 * PI);
    (tau * integral).sqrt()
}

fn snr_integrand(w: f64, sys: &SystemParams, n_a: f64, n_b: f64) -> f64 {
    let (s_xx, s_nn, s_xy, _) = spectra_point(&response_at(w, sys), n_a, n_b);
    s_xy.norm_sqr() / (s_xx * s_nn)
}

/// `∫ dω/2π f(ω)` by adaptive quadrature between the nodes of `grid` plus
/// both semi-infinite tails.
pub(crate) fn line_integral<F: Fn(f64) -> f64>(f: F, grid: &[f64]) -> Result<f64> {
    let rough = trapezoid(grid, |i| f(grid[i]));
    if rough == 0.0 {
        return Ok(0.0);
    }
    let abs_tol = QUAD_REL_TOL * rough.abs();
    let body = quad::adaptive_with_breakpoints(&f, grid, QUAD_REL_TOL, abs_tol, 200)?;
    let hi = *grid.last().expect("grid checked non-empty");
    let lo = *grid.first().expect("grid checked non-empty");
    let upper = quad::adaptive_to_infinity(&f, hi, QUAD_REL_TOL, abs_tol, 200)?;
    let lower = quad::adaptive_to_infinity(|x| f(2.0 * lo - x), lo, QUAD_REL_TOL, abs_tol, 200)?;
    Ok((body.value + upper.value + lower.value) / (2.0 * PI))
}

/// `∫ dω/2π |S_XY|²/(S_XX S_NN)` by adaptive quadrature between the nodes
/// of `grid` plus both semi-infinite tails.
pub fn snr_rate(sys: &SystemParams, grid: &[f64]) -> Result<f64> {
    check_grid_coverage(grid, sys)?;
    warn_if_not_adiabatic(sys);
    let (n_a, n_b) = (sys.n_th_a(), sys.n_th_b());
    line_integral(|w| snr_integrand(w, sys, n_a, n_b), grid)
}

/// Optimal-filter SNR `√τ·[∫ dω/2π |S_XY|²/(S_XX S_NN)]^{1/2}` with the
/// exact integrand. Warns (but proceeds) when `tau` is shorter than ten
/// damping times.
pub fn snr_numeric(sys: &SystemParams, tau: f64, grid: &[f64]) -> Result<f64> {
    require_positive("tau", tau)?;
    warn_if_tau_short(sys, tau);
    Ok((tau * snr_rate(sys, grid)?).sqrt())
}

/// Read-out power of cavity B that maximises the on-resonance SNR
/// integrand: `ω_q^B = √(γ_B γ_m / 4)`, i.e. `C_B = 1/2`.
pub fn optimize_power_b(sys: &SystemParams) -> Result<f64> {
    let omega_q = (sys.gamma_b() * sys.gamma_m() / 4.0).sqrt();
    power_for_omega_q(
        omega_q,
        &sys.cavity_b.optical,
        &sys.cavity_b.mech,
        &sys.constants,
    )
}

/// Copy of `sys` with cavity B at [`optimize_power_b`].
pub fn with_optimal_power_b(sys: &SystemParams) -> Result<SystemParams> {
    let mut out = *sys;
    out.cavity_b.optical.power_cav = optimize_power_b(sys)?;
    Ok(out)
}

fn warn_if_power_b_not_optimal(sys: &SystemParams) {
    let c_b = sys.cooperativity_b();
    if (c_b - 0.5).abs() > 1e-6 {
        log::warn!(
            "closed-form SNR assumes C_B = 1/2 but C_B = {c_b:.4e}; result is not the optimum"
        );
    }
}

/// Closed-form SNR after on-resonance optimisation of cavity B:
/// `√(τ C_A Q_m ω_g⁴ / (2(n̄_th^B + 1) ω_m³))`.
pub fn snr_closed_form(sys: &SystemParams, tau: f64) -> f64 {
    warn_if_power_b_not_optimal(sys);
    let wm = sys.omega_m();
    let wg4 = sys.omega_g().powi(4);
    (tau * sys.cooperativity_a() * sys.q_m() * wg4 / (2.0 * (sys.n_th_b() + 1.0) * wm.powi(3)))
        .sqrt()
}

/// Integration time needed for a target SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RequiredTau {
    Finite {
        seconds: f64,
    },
    /// The SNR never grows (no gravitational coupling).
    Unreachable,
}

impl RequiredTau {
    /// Seconds, `∞` when unreachable.
    pub fn seconds(&self) -> f64 {
        match *self {
            RequiredTau::Finite { seconds } => seconds,
            RequiredTau::Unreachable => f64::INFINITY,
        }
    }

    pub fn years(&self) -> f64 {
        self.seconds() / YEAR_S
    }

    pub fn is_reachable(&self) -> bool {
        matches!(self, RequiredTau::Finite { .. })
    }
}

/// Inverts [`snr_closed_form`] for `target_snr`.
pub fn required_tau(sys: &SystemParams, target_snr: f64) -> Result<RequiredTau> {
    require_positive("target_snr", target_snr)?;
    let rate = snr_closed_form(sys, 1.0).powi(2);
    if rate <= 0.0 || !rate.is_finite() {
        return Ok(RequiredTau::Unreachable);
    }
    Ok(RequiredTau::Finite {
        seconds: target_snr * target_snr / rate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrReport {
    pub snr_numeric: f64,
    pub snr_closed_form: f64,
    /// Integration time, s.
    pub tau: f64,
    /// Angular frequencies of `filter`, rad/s.
    pub grid: Vec<f64>,
    /// Matched filter on `grid`, unit peak.
    pub filter: Vec<Complex64>,
    /// Cavity B power after optimisation, W; absent if B was left as given.
    pub optimized_power_b: Option<f64>,
}

/// Both SNR routes at integration time `tau`; optionally moves cavity B to
/// its optimal power first.
pub fn snr_report(sys: &SystemParams, tau: f64, optimize_b: bool) -> Result<SnrReport> {
    let (sys, optimized_power_b) = if optimize_b {
        let s = with_optimal_power_b(sys)?;
        (s, Some(s.cavity_b.optical.power_cav))
    } else {
        (*sys, None)
    };
    let grid = snr_grid(&sys);
    let snr_numeric = snr_numeric(&sys, tau, &grid)?;
    let spectra = output_spectra(&grid, &sys);
    let filter = optimal_filter(&spectra)?;
    Ok(SnrReport {
        snr_numeric,
        snr_closed_form: snr_closed_form(&sys, tau),
        tau,
        grid,
        filter,
        optimized_power_b,
    })
}
