//! Physical constants, system parameters and the derived rates every other
//! module consumes.
//!
//! Cavity bandwidth convention: when a finesse is given, the cavity
//! bandwidth is the amplitude half-linewidth `γ = π c / (2 L F)`. With a
//! 1064 nm laser this reproduces the reference gram-scale parameter set
//! (`n̄_th / C ≈ 0.4` for m = 1 g, P = 2 kW, F = 6000, T = 300 K).

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{require_non_negative, require_positive, Error, Result};

/// Seconds in a Julian year.
pub const YEAR_S: f64 = 365.25 * 86_400.0;

pub const DEFAULT_WAVELENGTH_M: f64 = 1064e-9;
pub const DEFAULT_LAMBDA_FORM: f64 = 2.0;
pub const DEFAULT_DENSITY_KG_M3: f64 = 19_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// m³ kg⁻¹ s⁻²
    pub g_newton: f64,
    /// J·s
    pub hbar: f64,
    /// J/K
    pub k_b: f64,
    /// m/s
    pub c: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            g_newton: 6.674e-11,
            hbar: 1.0546e-34,
            k_b: 1.381e-23,
            c: 2.998e8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanicalParams {
    /// Resonance, rad/s.
    pub omega_m: f64,
    pub q_m: f64,
    /// kg
    pub mass: f64,
    /// kg/m³
    pub density: f64,
    /// K
    pub temperature: f64,
}

impl MechanicalParams {
    /// Damping rate `γ_m = ω_m / Q_m`.
    pub fn gamma_m(&self) -> f64 {
        self.omega_m / self.q_m
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("omega_m", self.omega_m)?;
        if !(self.q_m.is_finite() && self.q_m >= 1.0) {
            return Err(Error::domain(
                "q_m",
                format!("must be >= 1, got {}", self.q_m),
            ));
        }
        require_positive("mass", self.mass)?;
        require_positive("density", self.density)?;
        require_non_negative("temperature", self.temperature)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CavityBandwidth {
    Finesse(f64),
    /// Explicit half-linewidth in rad/s.
    Explicit(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalParams {
    /// Intra-cavity power, W.
    pub power_cav: f64,
    /// m
    pub wavelength: f64,
    /// m
    pub cavity_length: f64,
    pub bandwidth: CavityBandwidth,
}

impl OpticalParams {
    /// Laser angular frequency `ω_0 = 2πc/λ`.
    pub fn laser_omega(&self, consts: &PhysicalConstants) -> f64 {
        2.0 * PI * consts.c / self.wavelength
    }

    /// Cavity bandwidth γ in rad/s.
    pub fn gamma(&self, consts: &PhysicalConstants) -> f64 {
        match self.bandwidth {
            CavityBandwidth::Finesse(f) => PI * consts.c / (2.0 * self.cavity_length * f),
            CavityBandwidth::Explicit(g) => g,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("power_cav", self.power_cav)?;
        require_positive("wavelength", self.wavelength)?;
        require_positive("cavity_length", self.cavity_length)?;
        match self.bandwidth {
            CavityBandwidth::Finesse(f) => require_positive("finesse", f),
            CavityBandwidth::Explicit(g) => require_positive("bandwidth", g),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub mech: MechanicalParams,
    pub optical: OpticalParams,
}

/// Gravitational coupling between the two mirrors.
///
/// `ω_g² = boost² · Λ · G · ρ`. The boost multiplies ω_g itself and exists
/// only for Monte Carlo studies; physical runs leave it at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GravityCoupling {
    pub lambda_form: f64,
    pub boost: f64,
}

impl Default for GravityCoupling {
    fn default() -> Self {
        GravityCoupling {
            lambda_form: DEFAULT_LAMBDA_FORM,
            boost: 1.0,
        }
    }
}

impl GravityCoupling {
    pub fn omega_g_sq(&self, consts: &PhysicalConstants, density: f64) -> f64 {
        self.boost * self.boost * self.lambda_form * consts.g_newton * density
    }

    pub fn omega_g(&self, consts: &PhysicalConstants, density: f64) -> f64 {
        self.omega_g_sq(consts, density).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GravityModel {
    /// Quantum Newtonian coupling `ħ ω_g²/ω_m Q_A Q_B`.
    #[default]
    Quantum,
    /// Gravity sourced by expectation values only: no coupling of quantum
    /// fluctuations.
    SchroedingerNewton,
    /// Gravity switched off.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub constants: PhysicalConstants,
    pub cavity_a: CavityParams,
    pub cavity_b: CavityParams,
    pub gravity: GravityCoupling,
    pub gravity_model: GravityModel,
    /// Under the Schrödinger–Newton model, keep the classical thermally
    /// driven cross term (β path). Ignored for the other models.
    pub sn_keep_thermal_cross: bool,
}

impl SystemParams {
    /// Builds a system, checking every field and the shared-oscillator
    /// assumption (both mirrors have the same ω_m, Q_m, mass and density).
    pub fn new(
        constants: PhysicalConstants,
        cavity_a: CavityParams,
        cavity_b: CavityParams,
        gravity: GravityCoupling,
        gravity_model: GravityModel,
    ) -> Result<Self> {
        let sys = SystemParams {
            constants,
            cavity_a,
            cavity_b,
            gravity,
            gravity_model,
            sn_keep_thermal_cross: false,
        };
        sys.validate()?;
        Ok(sys)
    }

    /// Both cavities identical.
    pub fn symmetric(cavity: CavityParams, gravity: GravityCoupling) -> Result<Self> {
        Self::new(
            PhysicalConstants::default(),
            cavity,
            cavity,
            gravity,
            GravityModel::Quantum,
        )
    }

    /// Gram-scale room-temperature reference set: 1 g mirror at 1 Hz with
    /// Q_m = 10⁶, 2 kW intra-cavity power, finesse 6000, 1 m cavity,
    /// ρ = 19 g/cm³ and Λ = 2.
    pub fn reference() -> Self {
        let cavity = CavityParams {
            mech: MechanicalParams {
                omega_m: 2.0 * PI,
                q_m: 1e6,
                mass: 1e-3,
                density: DEFAULT_DENSITY_KG_M3,
                temperature: 300.0,
            },
            optical: OpticalParams {
                power_cav: 2000.0,
                wavelength: DEFAULT_WAVELENGTH_M,
                cavity_length: 1.0,
                bandwidth: CavityBandwidth::Finesse(6000.0),
            },
        };
        Self::symmetric(cavity, GravityCoupling::default()).expect("reference parameters are valid")
    }

    pub fn validate(&self) -> Result<()> {
        let c = &self.constants;
        for (name, v) in [
            ("g_newton", c.g_newton),
            ("hbar", c.hbar),
            ("k_b", c.k_b),
            ("c", c.c),
        ] {
            require_positive(name, v)?;
        }
        self.cavity_a.mech.validate()?;
        self.cavity_b.mech.validate()?;
        self.cavity_a.optical.validate()?;
        self.cavity_b.optical.validate()?;
        require_positive("lambda_form", self.gravity.lambda_form)?;
        require_non_negative("boost", self.gravity.boost)?;
        let (ma, mb) = (&self.cavity_a.mech, &self.cavity_b.mech);
        for (name, a, b) in [
            ("omega_m", ma.omega_m, mb.omega_m),
            ("q_m", ma.q_m, mb.q_m),
            ("mass", ma.mass, mb.mass),
            ("density", ma.density, mb.density),
        ] {
            if a != b {
                return Err(Error::Config(format!(
                    "both oscillators must share {name} (A = {a}, B = {b})"
                )));
            }
        }
        Ok(())
    }

    pub fn omega_m(&self) -> f64 {
        self.cavity_a.mech.omega_m
    }

    pub fn gamma_m(&self) -> f64 {
        self.cavity_a.mech.gamma_m()
    }

    pub fn q_m(&self) -> f64 {
        self.cavity_a.mech.q_m
    }

    pub fn density(&self) -> f64 {
        self.cavity_a.mech.density
    }

    /// Gravitational coupling rate including the model switch: zero for
    /// [`GravityModel::None`].
    pub fn omega_g(&self) -> f64 {
        match self.gravity_model {
            GravityModel::None => 0.0,
            _ => self.gravity.omega_g(&self.constants, self.density()),
        }
    }

    pub fn omega_q_a(&self) -> f64 {
        omega_q_unchecked(&self.cavity_a, &self.constants)
    }

    pub fn omega_q_b(&self) -> f64 {
        omega_q_unchecked(&self.cavity_b, &self.constants)
    }

    pub fn gamma_a(&self) -> f64 {
        self.cavity_a.optical.gamma(&self.constants)
    }

    pub fn gamma_b(&self) -> f64 {
        self.cavity_b.optical.gamma(&self.constants)
    }

    pub fn cooperativity_a(&self) -> f64 {
        2.0 * self.omega_q_a().powi(2) / (self.gamma_a() * self.gamma_m())
    }

    pub fn cooperativity_b(&self) -> f64 {
        2.0 * self.omega_q_b().powi(2) / (self.gamma_b() * self.gamma_m())
    }

    pub fn n_th_a(&self) -> f64 {
        thermal_occupation(&self.cavity_a.mech, &self.constants)
    }

    pub fn n_th_b(&self) -> f64 {
        thermal_occupation(&self.cavity_b.mech, &self.constants)
    }

    /// Same system with cavity A's power rescaled so that
    /// `n̄_th^B / C_A` equals `ratio`.
    pub fn with_noise_to_cooperativity(&self, ratio: f64) -> Result<Self> {
        require_positive("noise_to_cooperativity", ratio)?;
        let current = self.n_th_b() / self.cooperativity_a();
        if !current.is_finite() || current <= 0.0 {
            return Err(Error::Config(
                "n̄_th/C is undefined at zero temperature".into(),
            ));
        }
        let mut out = *self;
        out.cavity_a.optical.power_cav *= current / ratio;
        out.validate()?;
        Ok(out)
    }
}

fn omega_q_unchecked(cavity: &CavityParams, consts: &PhysicalConstants) -> f64 {
    let o = &cavity.optical;
    let m = &cavity.mech;
    (2.0 * o.power_cav * o.laser_omega(consts) / (m.mass * consts.c * o.cavity_length * m.omega_m))
        .sqrt()
}

/// Optomechanical coupling rate `ω_q = √(2 P ω_0 / (m c L ω_m))`.
pub fn coupling_rate_omega_q(
    optical: &OpticalParams,
    mech: &MechanicalParams,
    consts: &PhysicalConstants,
) -> Result<f64> {
    optical.validate()?;
    mech.validate()?;
    Ok(omega_q_unchecked(
        &CavityParams {
            mech: *mech,
            optical: *optical,
        },
        consts,
    ))
}

/// Intra-cavity power that produces the coupling rate `omega_q`; inverse of
/// [`coupling_rate_omega_q`].
pub fn power_for_omega_q(
    omega_q: f64,
    optical: &OpticalParams,
    mech: &MechanicalParams,
    consts: &PhysicalConstants,
) -> Result<f64> {
    require_positive("omega_q", omega_q)?;
    Ok(
        omega_q * omega_q * mech.mass * consts.c * optical.cavity_length * mech.omega_m
            / (2.0 * optical.laser_omega(consts)),
    )
}

/// Cooperativity `C = 2 ω_q² / (γ γ_m)`.
pub fn cooperativity(omega_q: f64, gamma: f64, gamma_m: f64) -> Result<f64> {
    require_positive("gamma", gamma)?;
    require_positive("gamma_m", gamma_m)?;
    require_non_negative("omega_q", omega_q)?;
    Ok(2.0 * omega_q * omega_q / (gamma * gamma_m))
}

/// High-temperature thermal occupation `k_B T / (ħ ω_m)`.
pub fn thermal_occupation(mech: &MechanicalParams, consts: &PhysicalConstants) -> f64 {
    consts.k_b * mech.temperature / (consts.hbar * mech.omega_m)
}

/// Both sides of the thermal-decoherence requirement for entanglement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    /// `γ_m k_B T`, W.
    pub lhs: f64,
    /// `ħ G ρ Λ/2`, W (equals `ħ G ρ` for the default Λ = 2).
    pub rhs: f64,
    /// Largest `T/Q_m` satisfying `lhs ≤ rhs`, K.
    pub tq_bound: f64,
}

impl Threshold {
    pub fn satisfied(&self) -> bool {
        self.lhs <= self.rhs
    }
}

pub fn entanglement_threshold(
    mech: &MechanicalParams,
    lambda_form: f64,
    consts: &PhysicalConstants,
) -> Threshold {
    let rhs = consts.hbar * consts.g_newton * mech.density * lambda_form / 2.0;
    Threshold {
        lhs: mech.gamma_m() * consts.k_b * mech.temperature,
        rhs,
        tq_bound: rhs / (consts.k_b * mech.omega_m),
    }
}
