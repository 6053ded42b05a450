//! Finite-difference derivatives refined by Richardson extrapolation.

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub value: f64,
    /// Difference between the two highest extrapolation levels.
    pub abs_err: f64,
}

/// Richardson tableau over step sizes `h, h/2, h/4, ...`, where the leading
/// error term of `estimates[i]` scales as `h^(first_order + j)` at column j.
fn richardson(estimates: &[f64], first_order: i32, order_step: i32) -> Derivative {
    let mut column = estimates.to_vec();
    let mut prev_best = column[0];
    let mut best = column[0];
    let mut order = first_order;
    while column.len() > 1 {
        let factor = 2f64.powi(order);
        column = column
            .windows(2)
            .map(|w| (factor * w[1] - w[0]) / (factor - 1.0))
            .collect();
        prev_best = best;
        best = column[column.len() - 1];
        order += order_step;
    }
    let abs_err = if estimates.len() == 1 {
        f64::INFINITY
    } else {
        (best - prev_best).abs()
    };
    Derivative {
        value: best,
        abs_err,
    }
}

/// Central-difference derivative of `f` at `x` with initial step `h`,
/// extrapolated over `levels` successive halvings of the step.
pub fn central<F>(mut f: F, x: f64, h: f64, levels: usize) -> Result<Derivative>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut estimates = Vec::with_capacity(levels);
    let mut step = h;
    for _ in 0..levels.max(1) {
        estimates.push((f(x + step)? - f(x - step)?) / (2.0 * step));
        step *= 0.5;
    }
    Ok(richardson(&estimates, 2, 2))
}

/// One-sided derivative at `x` from the 4-point forward stencil
/// `(-11 f0 + 18 f1 - 9 f2 + 2 f3) / 6h`, extrapolated like [`central`].
///
/// Only evaluates `f` on `[x, x + 3h]`, so it can be used at a boundary of
/// the domain.
pub fn forward<F>(mut f: F, x: f64, h: f64, levels: usize) -> Result<Derivative>
where
    F: FnMut(f64) -> Result<f64>,
{
    let levels = levels.max(1);
    // the finest level needs f at x + k·h/2^(levels-1); cache on that lattice
    let fine = h / 2f64.powi(levels as i32 - 1);
    let max_index = 3usize << (levels - 1);
    let mut cache: Vec<Option<f64>> = vec![None; max_index + 1];
    let mut eval = |i: usize| -> Result<f64> {
        if let Some(v) = cache[i] {
            return Ok(v);
        }
        let v = f(x + i as f64 * fine)?;
        cache[i] = Some(v);
        Ok(v)
    };
    let mut estimates = Vec::with_capacity(levels);
    for level in 0..levels {
        let stride = 1usize << (levels - 1 - level);
        let step = fine * stride as f64;
        let f0 = eval(0)?;
        let f1 = eval(stride)?;
        let f2 = eval(2 * stride)?;
        let f3 = eval(3 * stride)?;
        estimates.push((-11.0 * f0 + 18.0 * f1 - 9.0 * f2 + 2.0 * f3) / (6.0 * step));
    }
    Ok(richardson(&estimates, 3, 1))
}
