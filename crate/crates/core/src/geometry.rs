//! Gravitational form factor of coaxial test-mass pairs.
//!
//! Bodies are axisymmetric (spheres and disk-shaped cylinders) and share the
//! z-axis; body A is centred at the origin and body B at `z = d`. The
//! attraction is integrated slice by slice: two coaxial uniform sheets of
//! radii `r₁`, `r₂` at axial distance `u` attract with
//!
//! ```text
//! K(r₁, r₂, u) = ∫₀^{r₁+r₂} 2πs · Lens(r₁, r₂, s) · u/(s² + u²)^{3/2} ds
//! ```
//!
//! per unit areal density product, where `Lens` is the overlap area of two
//! circles with centre distance `s`. For two disks the axial integrals are
//! done in closed form, leaving a single quadrature over `s`.

use std::cell::RefCell;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::numdiff;
use crate::params::PhysicalConstants;
use crate::quad::{self, Quadrature};

const FORCE_REL_TOL: f64 = 1e-13;
const NESTED_REL_TOL: f64 = 1e-10;
const DIFF_STEP: f64 = 1e-3;
const DIFF_LEVELS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BodyShape {
    Sphere {
        radius: f64,
    },
    /// Cylinder with its axis along z.
    Disk {
        radius: f64,
        thickness: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Body {
    pub shape: BodyShape,
    /// kg/m³.
    pub density: f64,
}

impl Body {
    pub fn sphere(radius: f64, density: f64) -> Result<Self> {
        let b = Body {
            shape: BodyShape::Sphere { radius },
            density,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn disk(radius: f64, thickness: f64, density: f64) -> Result<Self> {
        let b = Body {
            shape: BodyShape::Disk { radius, thickness },
            density,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("density", self.density)?;
        match self.shape {
            BodyShape::Sphere { radius } => require_positive("radius", radius),
            BodyShape::Disk { radius, thickness } => {
                require_positive("radius", radius)?;
                require_positive("thickness", thickness)
            }
        }
    }

    pub fn volume(&self) -> f64 {
        match self.shape {
            BodyShape::Sphere { radius } => 4.0 / 3.0 * PI * radius.powi(3),
            BodyShape::Disk { radius, thickness } => PI * radius * radius * thickness,
        }
    }

    pub fn mass(&self) -> f64 {
        self.density * self.volume()
    }

    /// Half of the axial extent.
    pub fn half_length(&self) -> f64 {
        match self.shape {
            BodyShape::Sphere { radius } => radius,
            BodyShape::Disk { thickness, .. } => 0.5 * thickness,
        }
    }

    /// Same body with every length multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Body {
        let shape = match self.shape {
            BodyShape::Sphere { radius } => BodyShape::Sphere { radius: radius * k },
            BodyShape::Disk { radius, thickness } => BodyShape::Disk {
                radius: radius * k,
                thickness: thickness * k,
            },
        };
        Body { shape, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyPair {
    pub a: Body,
    pub b: Body,
}

impl BodyPair {
    pub fn identical(body: Body) -> Self {
        BodyPair { a: body, b: body }
    }

    /// Centre-to-centre separation at which the bodies touch.
    pub fn contact_separation(&self) -> f64 {
        self.a.half_length() + self.b.half_length()
    }

    /// Geometric-mean mass `√(m_A m_B)`.
    pub fn mean_mass(&self) -> f64 {
        (self.a.mass() * self.b.mass()).sqrt()
    }

    pub fn mean_density(&self) -> f64 {
        (self.a.density * self.b.density).sqrt()
    }

    pub fn mean_volume(&self) -> f64 {
        (self.a.volume() * self.b.volume()).sqrt()
    }

    pub fn scaled(&self, k: f64) -> BodyPair {
        BodyPair {
            a: self.a.scaled(k),
            b: self.b.scaled(k),
        }
    }

    fn validate(&self) -> Result<()> {
        self.a.validate()?;
        self.b.validate()
    }

    fn check_separation(&self, d: f64) -> Result<()> {
        let contact = self.contact_separation();
        if !(d >= contact * (1.0 - 1e-12)) {
            return Err(Error::domain(
                "d",
                format!("separation {d:.6e} m is below contact {contact:.6e} m"),
            ));
        }
        Ok(())
    }
}

/// Overlap area of two circles of radii `r1`, `r2` with centre distance `s`.
pub fn lens_area(r1: f64, r2: f64, s: f64) -> f64 {
    let (rmin, rmax) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
    if s <= rmax - rmin {
        return PI * rmin * rmin;
    }
    if s >= r1 + r2 {
        return 0.0;
    }
    let c1 = ((s * s + r1 * r1 - r2 * r2) / (2.0 * s * r1)).clamp(-1.0, 1.0);
    let c2 = ((s * s + r2 * r2 - r1 * r1) / (2.0 * s * r2)).clamp(-1.0, 1.0);
    let k = ((-s + r1 + r2) * (s + r1 - r2) * (s - r1 + r2) * (s + r1 + r2)).max(0.0);
    r1 * r1 * c1.acos() + r2 * r2 * c2.acos() - 0.5 * k.sqrt()
}

/// Records the first quadrature failure inside nested closures, keeping the
/// outer integration going with the best estimate.
struct FailureSlot(RefCell<Option<Error>>);

impl FailureSlot {
    fn new() -> Self {
        FailureSlot(RefCell::new(None))
    }

    fn take(&self, q: Result<Quadrature>) -> f64 {
        match q {
            Ok(q) => q.value,
            Err(e) => {
                let estimate = match &e {
                    Error::Quadrature { estimate, .. } => *estimate,
                    _ => f64::NAN,
                };
                self.0.borrow_mut().get_or_insert(e);
                estimate
            }
        }
    }

    fn finish(self, q: Result<Quadrature>) -> Result<Quadrature> {
        let q = q?;
        match self.0.into_inner() {
            None => Ok(q),
            Some(Error::Quadrature { error_bound, .. }) => Err(Error::Quadrature {
                estimate: q.value,
                error_bound: error_bound.max(q.abs_err),
            }),
            Some(other) => Err(other),
        }
    }
}

/// Attraction between two coaxial uniform sheets (unit areal densities,
/// `G = 1`) of radii `r1`, `r2` at axial distance `u > 0`.
pub fn sheet_kernel(r1: f64, r2: f64, u: f64, rel_tol: f64) -> Result<Quadrature> {
    if r1 <= 0.0 || r2 <= 0.0 {
        return Ok(Quadrature {
            value: 0.0,
            abs_err: 0.0,
        });
    }
    let rmin = r1.min(r2);
    let delta = (r1 - r2).abs();
    // full-overlap part in closed form
    let inner = 2.0 * PI * PI * rmin * rmin * (1.0 - u / (delta * delta + u * u).sqrt());
    let rest = quad::tanh_sinh(
        |s| 2.0 * PI * s * lens_area(r1, r2, s) * u / (s * s + u * u).powf(1.5),
        delta,
        r1 + r2,
        rel_tol,
    )?;
    Ok(Quadrature {
        value: inner + rest.value,
        abs_err: rest.abs_err + 4.0 * f64::EPSILON * inner,
    })
}

/// `asinh((c + l)/s) - asinh((c - l)/s)` for `c ≥ l ≥ 0`, without the
/// cancellation of the direct difference when `l` is small.
fn asinh_gap(c: f64, l: f64, s: f64) -> f64 {
    if s == 0.0 {
        return if c > l { ((c + l) / (c - l)).ln() } else { 0.0 };
    }
    let (x, y) = ((c + l) / s, (c - l) / s);
    let num = 4.0 * c * l / (s * s);
    (num / (x * (1.0 + y * y).sqrt() + y * (1.0 + x * x).sqrt())).asinh()
}

/// `∫∫ (z_b - z_a)/(s² + (z_b - z_a)²)^{3/2}` over `z_a ∈ [-la, la]`,
/// `z_b ∈ [d - lb, d + lb]`, for `d ≥ la + lb`.
fn slab_axial_integral(s: f64, d: f64, la: f64, lb: f64) -> f64 {
    let (l, big) = if la <= lb { (la, lb) } else { (lb, la) };
    asinh_gap(d - big, l, s) - asinh_gap(d + big, l, s)
}

fn disk_force_unit(ra: f64, ha: f64, rb: f64, hb: f64, d: f64) -> Result<Quadrature> {
    let delta = (ra - rb).abs();
    let integrand = |s: f64| {
        2.0 * PI * s * lens_area(ra, rb, s) * slab_axial_integral(s, d, 0.5 * ha, 0.5 * hb)
    };
    let outer = quad::tanh_sinh(integrand, delta, ra + rb, FORCE_REL_TOL)?;
    if delta == 0.0 {
        return Ok(outer);
    }
    let full = quad::tanh_sinh(integrand, 0.0, delta, FORCE_REL_TOL)?;
    Ok(outer + full)
}

/// Half of the axial extent of `body` at cylindrical radius `rho`.
fn half_height(body: &Body, rho: f64) -> f64 {
    match body.shape {
        BodyShape::Sphere { radius } => (radius * radius - rho * rho).max(0.0).sqrt(),
        BodyShape::Disk { thickness, .. } => 0.5 * thickness,
    }
}

fn lateral_radius(body: &Body) -> f64 {
    match body.shape {
        BodyShape::Sphere { radius } | BodyShape::Disk { radius, .. } => radius,
    }
}

/// Tanh-sinh over `[a, b]` split at the interior points `cuts`.
fn tanh_sinh_split<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    cuts: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Quadrature> {
    let mut nodes = vec![a];
    nodes.extend(cuts.iter().copied().filter(|&c| c > a && c < b));
    nodes.push(b);
    let mut total = Quadrature {
        value: 0.0,
        abs_err: 0.0,
    };
    for w in nodes.windows(2) {
        total = total + quad::tanh_sinh_abs(&mut f, w[0], w[1], rel_tol, abs_tol)?;
    }
    Ok(total)
}

/// Attraction for any pair of axisymmetric bodies, `G = 1`, unit
/// densities. Each body is a bundle of axial line segments; the axial
/// double integral between two segments is closed-form, leaving quadratures
/// over both cylindrical radii and the relative azimuth.
fn generic_force_unit(pair: &BodyPair, d: f64) -> Result<Quadrature> {
    let (ra_max, rb_max) = (lateral_radius(&pair.a), lateral_radius(&pair.b));
    // absolute floors so the inner rules stop on negligible rim pieces
    let scale = pair.a.volume() * pair.b.volume() / (d * d);
    let mid_abs = NESTED_REL_TOL * scale / (2.0 * PI * ra_max);
    let inner_abs = mid_abs / (2.0 * rb_max);
    let slot = FailureSlot::new();
    let outer = quad::tanh_sinh(
        |rho_a| {
            let la = half_height(&pair.a, rho_a);
            let q = tanh_sinh_split(
                |rho_b| {
                    let lb = half_height(&pair.b, rho_b);
                    let q = quad::tanh_sinh_abs(
                        |phi| {
                            let s2 =
                                rho_a * rho_a + rho_b * rho_b - 2.0 * rho_a * rho_b * phi.cos();
                            slab_axial_integral(s2.max(0.0).sqrt(), d, la, lb)
                        },
                        0.0,
                        PI,
                        NESTED_REL_TOL,
                        inner_abs,
                    );
                    // both half-turns of the azimuth
                    2.0 * rho_b * slot.take(q)
                },
                0.0,
                rb_max,
                &[rho_a],
                NESTED_REL_TOL,
                mid_abs,
            );
            2.0 * PI * rho_a * slot.take(q)
        },
        0.0,
        ra_max,
        NESTED_REL_TOL,
    );
    slot.finish(outer)
}

/// Which integration route to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceMethod {
    /// In-plane quadrature with the analytic slab integral for disk pairs,
    /// nested slices otherwise.
    Auto,
    /// Three nested quadratures for every shape.
    NestedSlices,
}

/// Magnitude of the mutual Newtonian attraction at centre separation `d`,
/// N, with its quadrature error bound.
pub fn axial_force(pair: &BodyPair, d: f64, consts: &PhysicalConstants) -> Result<Quadrature> {
    axial_force_with(pair, d, consts, ForceMethod::Auto)
}

pub fn axial_force_with(
    pair: &BodyPair,
    d: f64,
    consts: &PhysicalConstants,
    method: ForceMethod,
) -> Result<Quadrature> {
    pair.validate()?;
    pair.check_separation(d)?;
    let unit = match (pair.a.shape, pair.b.shape, method) {
        (
            BodyShape::Disk {
                radius: ra,
                thickness: ha,
            },
            BodyShape::Disk {
                radius: rb,
                thickness: hb,
            },
            ForceMethod::Auto,
        ) => disk_force_unit(ra, ha, rb, hb, d),
        _ => generic_force_unit(pair, d),
    };
    let scale = consts.g_newton * pair.a.density * pair.b.density;
    let scale_quad = |q: Quadrature| Quadrature {
        value: q.value * scale,
        abs_err: q.abs_err * scale,
    };
    unit.map(scale_quad).map_err(|e| match e {
        Error::Quadrature {
            estimate,
            error_bound,
        } => Error::Quadrature {
            estimate: estimate * scale,
            error_bound: error_bound * scale,
        },
        other => other,
    })
}

/// Normalisation of the form factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `Λ = |dF/dd| / (2 m G ρ)`: point masses give `V/d³`, touching
    /// spheres `π/6`.
    #[default]
    Derived,
    /// `Λ = |dF/dd| / (m G ρ)`, twice [`Convention::Derived`]
    /// (touching spheres `π/3`).
    Paper,
}

impl Convention {
    fn factor(self) -> f64 {
        match self {
            Convention::Derived => 0.5,
            Convention::Paper => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormFactor {
    pub lambda: f64,
    pub est_rel_err: f64,
}

/// Form factor at separation `d` from the numerical derivative of the
/// force: central differences (initial step `d·1e-3`, three Richardson
/// levels), or a one-sided 4-point stencil when the central stencil would
/// cross contact.
pub fn form_factor(pair: &BodyPair, d: f64, convention: Convention) -> Result<FormFactor> {
    form_factor_with(pair, d, convention, ForceMethod::Auto)
}

pub fn form_factor_with(
    pair: &BodyPair,
    d: f64,
    convention: Convention,
    method: ForceMethod,
) -> Result<FormFactor> {
    pair.validate()?;
    pair.check_separation(d)?;
    // Λ is independent of G and ρ; work in units with G = ρ = 1
    let unit_pair = BodyPair {
        a: Body {
            density: 1.0,
            ..pair.a
        },
        b: Body {
            density: 1.0,
            ..pair.b
        },
    };
    let consts = PhysicalConstants {
        g_newton: 1.0,
        ..PhysicalConstants::default()
    };
    let mut worst_force_err: f64 = 0.0;
    let mut force = |x: f64| -> Result<f64> {
        let q = axial_force_with(
            &unit_pair,
            x.max(unit_pair.contact_separation()),
            &consts,
            method,
        )?;
        worst_force_err = worst_force_err.max(q.abs_err);
        Ok(q.value)
    };
    let h = d * DIFF_STEP;
    let contact = unit_pair.contact_separation();
    let (deriv, smallest_step) = if d - h > contact {
        (numdiff::central(&mut force, d, h, DIFF_LEVELS)?, h / 4.0)
    } else {
        (numdiff::forward(&mut force, d, h, DIFF_LEVELS)?, h / 4.0)
    };
    let slope = deriv.value.abs();
    let mass = unit_pair.mean_mass();
    let lambda = convention.factor() * slope / mass;
    let abs_err = deriv.abs_err + 4.0 * worst_force_err / smallest_step;
    let est_rel_err = if slope > 0.0 {
        abs_err / slope
    } else {
        f64::INFINITY
    };
    Ok(FormFactor {
        lambda,
        est_rel_err,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormFactorCurve {
    pub pair: BodyPair,
    pub convention: Convention,
    /// Centre-to-centre separations, m.
    pub d: Vec<f64>,
    pub lambda: Vec<f64>,
    pub est_rel_err: Vec<f64>,
    /// Index of the largest Λ.
    pub argmax: usize,
}

impl FormFactorCurve {
    /// `ω_g² = Λ G ρ` at every point, with the pair's mean density.
    pub fn omega_g_sq(&self, consts: &PhysicalConstants) -> Vec<f64> {
        let scale = match self.convention {
            Convention::Derived => 1.0,
            Convention::Paper => 0.5,
        };
        let rho = self.pair.mean_density();
        // ω_g² follows the derived normalisation, where point masses give G m / d³
        self.lambda
            .iter()
            .map(|l| l * scale * 2.0 * consts.g_newton * rho)
            .collect()
    }
}

/// Form factor on `n_points` linearly spaced separations in
/// `[d_min, d_max]`, evaluated in parallel.
pub fn form_factor_curve(
    pair: &BodyPair,
    d_min: f64,
    d_max: f64,
    n_points: usize,
    convention: Convention,
) -> Result<FormFactorCurve> {
    pair.validate()?;
    pair.check_separation(d_min)?;
    if !(d_max >= d_min) || n_points == 0 {
        return Err(Error::Config(format!(
            "invalid curve range d_min = {d_min}, d_max = {d_max}, points = {n_points}"
        )));
    }
    let d: Vec<f64> = (0..n_points)
        .map(|i| {
            if n_points == 1 {
                d_min
            } else {
                d_min + (d_max - d_min) * i as f64 / (n_points - 1) as f64
            }
        })
        .collect();
    let points: Vec<FormFactor> = d
        .par_iter()
        .map(|&x| form_factor(pair, x, convention))
        .collect::<Result<_>>()?;
    let lambda: Vec<f64> = points.iter().map(|p| p.lambda).collect();
    let argmax = lambda
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(FormFactorCurve {
        pair: *pair,
        convention,
        d,
        est_rel_err: points.iter().map(|p| p.est_rel_err).collect(),
        lambda,
        argmax,
    })
}
