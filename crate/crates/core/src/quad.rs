//! One-dimensional quadrature: adaptive Gauss–Kronrod for smooth integrands
//! and tanh-sinh (double exponential) for integrands with endpoint
//! singularities.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub abs_err: f64,
}

impl Quadrature {
    pub fn rel_err(&self) -> f64 {
        if self.value == 0.0 {
            self.abs_err
        } else {
            self.abs_err / self.value.abs()
        }
    }
}

impl std::ops::Add for Quadrature {
    type Output = Quadrature;
    fn add(self, rhs: Quadrature) -> Quadrature {
        Quadrature {
            value: self.value + rhs.value,
            abs_err: self.abs_err + rhs.abs_err,
        }
    }
}

impl std::iter::Sum for Quadrature {
    fn sum<I: Iterator<Item = Quadrature>>(iter: I) -> Quadrature {
        iter.fold(
            Quadrature {
                value: 0.0,
                abs_err: 0.0,
            },
            |acc, q| acc + q,
        )
    }
}

// 15-point Kronrod abscissae and weights with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Quadrature {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let err = ((kronrod - gauss) * half).abs();
    let value = kronrod * half;
    // floor at rounding level so tolerances below epsilon still terminate
    let floor = 50.0 * f64::EPSILON * value.abs();
    Quadrature {
        value,
        abs_err: err.max(floor),
    }
}

/// Adaptive Gauss–Kronrod (G7/K15) quadrature of `f` over `[a, b]`.
///
/// Bisects the interval with the largest error estimate until the total
/// error is below `max(abs_tol, rel_tol·|I|)`. Fails with
/// [`Error::Quadrature`] after `max_intervals` panels.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            abs_err: 0.0,
        });
    }
    let mut panels = vec![(a, b, kronrod15(&mut f, a, b))];
    loop {
        let total: Quadrature = panels.iter().map(|p| p.2).sum();
        let target = abs_tol.max(rel_tol.max(100.0 * f64::EPSILON) * total.value.abs());
        if total.abs_err <= target {
            return Ok(total);
        }
        if panels.len() >= max_intervals {
            return Err(Error::Quadrature {
                estimate: total.value,
                error_bound: total.abs_err,
            });
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2.abs_err.total_cmp(&y.1 .2.abs_err))
            .expect("at least one panel");
        let (lo, hi, _) = panels.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval exhausted at machine resolution
            let total: Quadrature =
                panels.iter().map(|p| p.2).sum::<Quadrature>() + kronrod15(&mut f, lo, hi);
            return Err(Error::Quadrature {
                estimate: total.value,
                error_bound: total.abs_err,
            });
        }
        panels.push((lo, mid, kronrod15(&mut f, lo, mid)));
        panels.push((mid, hi, kronrod15(&mut f, mid, hi)));
    }
}

/// Adaptive quadrature over consecutive sub-intervals delimited by
/// `breakpoints` (sorted ascending).
pub fn adaptive_with_breakpoints<F: FnMut(f64) -> f64>(
    mut f: F,
    breakpoints: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Result<Quadrature> {
    let mut total = Quadrature {
        value: 0.0,
        abs_err: 0.0,
    };
    let n = breakpoints.len().saturating_sub(1).max(1);
    for w in breakpoints.windows(2) {
        total = total
            + adaptive(
                &mut f,
                w[0],
                w[1],
                rel_tol,
                abs_tol / n as f64,
                max_intervals,
            )?;
    }
    Ok(total)
}

/// Integral of `f` over `[a, ∞)` via the map `x = a + t/(1-t)`.
pub fn adaptive_to_infinity<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Result<Quadrature> {
    adaptive(
        |t| {
            let one_minus = 1.0 - t;
            let x = a + t / one_minus;
            let v = f(x) / (one_minus * one_minus);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        rel_tol,
        abs_tol,
        max_intervals,
    )
}

const TANH_SINH_T_MAX: f64 = 3.2;
const TANH_SINH_MAX_LEVEL: u32 = 11;

/// Tanh-sinh quadrature of `f` over `[a, b]`.
///
/// Integrable singularities or infinite slopes at either endpoint are
/// handled without special treatment; `f` is never evaluated exactly at
/// `a` or `b`. The step is halved until two successive levels agree to
/// `rel_tol`; the error estimate is the last level difference.
pub fn tanh_sinh<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<Quadrature> {
    tanh_sinh_abs(f, a, b, rel_tol, 0.0)
}

/// [`tanh_sinh`] that also accepts a level difference below `abs_tol`.
pub fn tanh_sinh_abs<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            abs_err: 0.0,
        });
    }
    let half = 0.5 * (b - a);
    let center = 0.5 * (a + b);
    let pi_2 = std::f64::consts::FRAC_PI_2;

    // contribution of the nodes at ±t, measured from the nearer endpoint
    let mut pair = |t: f64| -> f64 {
        let u = pi_2 * t.sinh();
        let cosh_u = u.cosh();
        let weight = half * pi_2 * t.cosh() / (cosh_u * cosh_u);
        // distance of the node from the endpoint, 1 - tanh(u) in stable form
        let gap = half * 2.0 / (1.0 + (2.0 * u).exp());
        let mut s = 0.0;
        if t == 0.0 {
            return weight * f(center);
        }
        let hi = b - gap;
        let lo = a + gap;
        if hi < b && hi > a {
            s += f(hi);
        }
        if lo > a && lo < b {
            s += f(lo);
        }
        weight * s
    };

    let mut h = 1.0;
    let mut sum = pair(0.0);
    let mut k = 1;
    while (k as f64) * h <= TANH_SINH_T_MAX {
        sum += pair(k as f64 * h);
        k += 1;
    }
    let mut estimate = sum * h;
    let mut delta = f64::INFINITY;
    for _level in 1..=TANH_SINH_MAX_LEVEL {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= TANH_SINH_T_MAX {
            sum += pair(k as f64 * h);
            k += 2;
        }
        let next = sum * h;
        delta = (next - estimate).abs();
        estimate = next;
        let floor = 100.0 * f64::EPSILON * estimate.abs();
        if delta <= rel_tol * estimate.abs() || delta <= floor.max(abs_tol) {
            return Ok(Quadrature {
                value: estimate,
                abs_err: delta.max(floor),
            });
        }
    }
    Err(Error::Quadrature {
        estimate,
        error_bound: delta,
    })
}
