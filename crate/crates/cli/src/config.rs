//! Configuration files.
//!
//! A file (TOML, or JSON when the extension is `.json`) has up to six
//! tables: `mechanical_a`, `mechanical_b`, `optical_a`, `optical_b`,
//! `gravity` and `model`. The B tables are optional; each missing B field
//! takes the A value. Unknown tables or keys are errors.
//!
//! Parsing yields a [`ResolvedConfig`] with every field filled in. Its
//! serialisation has the same layout as the input, so the echo stored in
//! each output is itself a valid config file that resolves to the same
//! [`SystemParams`] bit for bit.

use std::f64::consts::PI;
use std::path::Path;

use gravcorr::params::{DEFAULT_DENSITY_KG_M3, DEFAULT_LAMBDA_FORM, DEFAULT_WAVELENGTH_M};
use gravcorr::{
    CavityBandwidth, CavityParams, GravityCoupling, GravityModel, MechanicalParams, OpticalParams,
    PhysicalConstants, SystemParams,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

const MECHANICAL_KEYS: [&str; 5] = [
    "omega_m_hz",
    "q_m",
    "mass_kg",
    "density_kg_m3",
    "temperature_k",
];
const OPTICAL_KEYS: [&str; 5] = [
    "power_w",
    "wavelength_m",
    "length_m",
    "finesse",
    "bandwidth_rad_s",
];
const GRAVITY_KEYS: [&str; 2] = ["lambda_form", "boost"];
const MODEL_KEYS: [&str; 2] = ["gravity_model", "sn_keep_thermal_cross"];
const TABLES: [(&str, &[&str]); 6] = [
    ("mechanical_a", &MECHANICAL_KEYS),
    ("mechanical_b", &MECHANICAL_KEYS),
    ("optical_a", &OPTICAL_KEYS),
    ("optical_b", &OPTICAL_KEYS),
    ("gravity", &GRAVITY_KEYS),
    ("model", &MODEL_KEYS),
];

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    mechanical_a: Option<MechanicalTable>,
    mechanical_b: Option<MechanicalTable>,
    optical_a: Option<OpticalTable>,
    optical_b: Option<OpticalTable>,
    gravity: Option<GravityTable>,
    model: Option<ModelTable>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MechanicalTable {
    omega_m_hz: Option<f64>,
    q_m: Option<f64>,
    mass_kg: Option<f64>,
    density_kg_m3: Option<f64>,
    temperature_k: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OpticalTable {
    power_w: Option<f64>,
    wavelength_m: Option<f64>,
    length_m: Option<f64>,
    finesse: Option<f64>,
    bandwidth_rad_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GravityTable {
    lambda_form: Option<f64>,
    boost: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelTable {
    gravity_model: Option<GravityModel>,
    sn_keep_thermal_cross: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mechanical {
    pub omega_m_hz: f64,
    pub q_m: f64,
    pub mass_kg: f64,
    pub density_kg_m3: f64,
    pub temperature_k: f64,
}

/// Exactly one of `finesse` and `bandwidth_rad_s` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optical {
    pub power_w: f64,
    pub wavelength_m: f64,
    pub length_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finesse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_rad_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gravity {
    pub lambda_form: f64,
    pub boost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub gravity_model: GravityModel,
    pub sn_keep_thermal_cross: bool,
}

/// Fully defaulted configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub mechanical_a: Mechanical,
    pub mechanical_b: Mechanical,
    pub optical_a: Optical,
    pub optical_b: Optical,
    pub gravity: Gravity,
    pub model: Model,
}

fn required(table: &str, key: &str, v: Option<f64>) -> CliResult<f64> {
    v.ok_or_else(|| CliError::validation(format!("{table}.{key}"), "missing required key"))
}

/// Rejects unknown tables and keys by their dotted name.
fn check_keys(doc: &Value) -> CliResult<()> {
    let top = doc
        .as_object()
        .ok_or_else(|| CliError::validation("<root>", "expected a table of tables"))?;
    for (table, inner) in top {
        let Some((_, keys)) = TABLES.iter().find(|(name, _)| name == table) else {
            return Err(CliError::validation(table.as_str(), "unknown table"));
        };
        let inner = inner
            .as_object()
            .ok_or_else(|| CliError::validation(table.as_str(), "expected a table"))?;
        for key in inner.keys() {
            if !keys.contains(&key.as_str()) {
                return Err(CliError::validation(
                    format!("{table}.{key}"),
                    format!("unknown key (expected one of {})", keys.join(", ")),
                ));
            }
        }
    }
    Ok(())
}

fn resolve_mechanical(
    a: &MechanicalTable,
    b: Option<&MechanicalTable>,
) -> CliResult<(Mechanical, Mechanical)> {
    let t = "mechanical_a";
    let ma = Mechanical {
        omega_m_hz: required(t, "omega_m_hz", a.omega_m_hz)?,
        q_m: required(t, "q_m", a.q_m)?,
        mass_kg: required(t, "mass_kg", a.mass_kg)?,
        density_kg_m3: a.density_kg_m3.unwrap_or(DEFAULT_DENSITY_KG_M3),
        temperature_k: required(t, "temperature_k", a.temperature_k)?,
    };
    let b = b.copied().unwrap_or_default();
    let mb = Mechanical {
        omega_m_hz: b.omega_m_hz.unwrap_or(ma.omega_m_hz),
        q_m: b.q_m.unwrap_or(ma.q_m),
        mass_kg: b.mass_kg.unwrap_or(ma.mass_kg),
        density_kg_m3: b.density_kg_m3.unwrap_or(ma.density_kg_m3),
        temperature_k: b.temperature_k.unwrap_or(ma.temperature_k),
    };
    Ok((ma, mb))
}

fn resolve_optical(a: &OpticalTable, b: Option<&OpticalTable>) -> CliResult<(Optical, Optical)> {
    let t = "optical_a";
    if a.finesse.is_some() && a.bandwidth_rad_s.is_some() {
        return Err(CliError::validation(
            t,
            "give either finesse or bandwidth_rad_s, not both",
        ));
    }
    if a.finesse.is_none() && a.bandwidth_rad_s.is_none() {
        return Err(CliError::validation(
            format!("{t}.finesse"),
            "missing required key (or bandwidth_rad_s)",
        ));
    }
    let oa = Optical {
        power_w: required(t, "power_w", a.power_w)?,
        wavelength_m: a.wavelength_m.unwrap_or(DEFAULT_WAVELENGTH_M),
        length_m: required(t, "length_m", a.length_m)?,
        finesse: a.finesse,
        bandwidth_rad_s: a.bandwidth_rad_s,
    };
    let b = b.copied().unwrap_or_default();
    let (finesse, bandwidth_rad_s) = match (b.finesse, b.bandwidth_rad_s) {
        (Some(_), Some(_)) => {
            return Err(CliError::validation(
                "optical_b",
                "give either finesse or bandwidth_rad_s, not both",
            ))
        }
        (None, None) => (oa.finesse, oa.bandwidth_rad_s),
        pair => pair,
    };
    let ob = Optical {
        power_w: b.power_w.unwrap_or(oa.power_w),
        wavelength_m: b.wavelength_m.unwrap_or(oa.wavelength_m),
        length_m: b.length_m.unwrap_or(oa.length_m),
        finesse,
        bandwidth_rad_s,
    };
    Ok((oa, ob))
}

fn positive(field: String, v: f64) -> CliResult<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::validation(
            field,
            format!("must be positive, got {v}"),
        ))
    }
}

fn non_negative(field: String, v: f64) -> CliResult<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(CliError::validation(
            field,
            format!("must be non-negative, got {v}"),
        ))
    }
}

/// Smallest-magnitude frequency in Hz whose `2π·f` reproduces `omega`
/// exactly, so that echoes of built-in presets resolve bit for bit.
fn hz_for(omega: f64) -> CliResult<f64> {
    let guess = omega / (2.0 * PI);
    let mut candidates = [guess; 7];
    for (i, c) in candidates.iter_mut().enumerate() {
        let steps = i as i64 - 3;
        *c = f64::from_bits((guess.to_bits() as i64 + steps) as u64);
    }
    candidates.sort_by(|x, y| (x - guess).abs().total_cmp(&(y - guess).abs()));
    candidates
        .into_iter()
        .find(|&hz| 2.0 * PI * hz == omega)
        .ok_or_else(|| {
            CliError::validation("omega_m_hz", format!("no exact Hz value for {omega} rad/s"))
        })
}

impl Mechanical {
    fn validate(&self, table: &str) -> CliResult<()> {
        positive(format!("{table}.omega_m_hz"), self.omega_m_hz)?;
        if !(self.q_m.is_finite() && self.q_m >= 1.0) {
            return Err(CliError::validation(
                format!("{table}.q_m"),
                format!("must be >= 1, got {}", self.q_m),
            ));
        }
        positive(format!("{table}.mass_kg"), self.mass_kg)?;
        positive(format!("{table}.density_kg_m3"), self.density_kg_m3)?;
        non_negative(format!("{table}.temperature_k"), self.temperature_k)
    }

    fn to_params(self) -> MechanicalParams {
        MechanicalParams {
            omega_m: 2.0 * PI * self.omega_m_hz,
            q_m: self.q_m,
            mass: self.mass_kg,
            density: self.density_kg_m3,
            temperature: self.temperature_k,
        }
    }

    fn from_params(m: &MechanicalParams) -> CliResult<Self> {
        Ok(Mechanical {
            omega_m_hz: hz_for(m.omega_m)?,
            q_m: m.q_m,
            mass_kg: m.mass,
            density_kg_m3: m.density,
            temperature_k: m.temperature,
        })
    }
}

impl Optical {
    fn validate(&self, table: &str) -> CliResult<()> {
        positive(format!("{table}.power_w"), self.power_w)?;
        positive(format!("{table}.wavelength_m"), self.wavelength_m)?;
        positive(format!("{table}.length_m"), self.length_m)?;
        match (self.finesse, self.bandwidth_rad_s) {
            (Some(f), None) => positive(format!("{table}.finesse"), f),
            (None, Some(g)) => positive(format!("{table}.bandwidth_rad_s"), g),
            _ => Err(CliError::validation(
                table,
                "exactly one of finesse and bandwidth_rad_s must be set",
            )),
        }
    }

    fn to_params(self) -> OpticalParams {
        let bandwidth = match (self.finesse, self.bandwidth_rad_s) {
            (Some(f), _) => CavityBandwidth::Finesse(f),
            (None, Some(g)) => CavityBandwidth::Explicit(g),
            (None, None) => unreachable!("validated"),
        };
        OpticalParams {
            power_cav: self.power_w,
            wavelength: self.wavelength_m,
            cavity_length: self.length_m,
            bandwidth,
        }
    }

    fn from_params(o: &OpticalParams) -> Self {
        let (finesse, bandwidth_rad_s) = match o.bandwidth {
            CavityBandwidth::Finesse(f) => (Some(f), None),
            CavityBandwidth::Explicit(g) => (None, Some(g)),
        };
        Optical {
            power_w: o.power_cav,
            wavelength_m: o.wavelength,
            length_m: o.cavity_length,
            finesse,
            bandwidth_rad_s,
        }
    }
}

impl ResolvedConfig {
    /// Gram-scale reference set, identical to [`SystemParams::reference`].
    pub fn reference() -> Self {
        Self::from_system(&SystemParams::reference()).expect("reference set has an exact Hz value")
    }

    /// Echo of an existing system.
    pub fn from_system(sys: &SystemParams) -> CliResult<Self> {
        if sys.constants != PhysicalConstants::default() {
            return Err(CliError::Usage(
                "config files cannot express non-default constants".into(),
            ));
        }
        Ok(ResolvedConfig {
            mechanical_a: Mechanical::from_params(&sys.cavity_a.mech)?,
            mechanical_b: Mechanical::from_params(&sys.cavity_b.mech)?,
            optical_a: Optical::from_params(&sys.cavity_a.optical),
            optical_b: Optical::from_params(&sys.cavity_b.optical),
            gravity: Gravity {
                lambda_form: sys.gravity.lambda_form,
                boost: sys.gravity.boost,
            },
            model: Model {
                gravity_model: sys.gravity_model,
                sn_keep_thermal_cross: sys.sn_keep_thermal_cross,
            },
        })
    }

    pub fn validate(&self) -> CliResult<()> {
        self.mechanical_a.validate("mechanical_a")?;
        self.mechanical_b.validate("mechanical_b")?;
        self.optical_a.validate("optical_a")?;
        self.optical_b.validate("optical_b")?;
        positive("gravity.lambda_form".into(), self.gravity.lambda_form)?;
        non_negative("gravity.boost".into(), self.gravity.boost)
    }

    /// Validated system parameters.
    pub fn to_system(&self) -> CliResult<SystemParams> {
        self.validate()?;
        let cavity = |m: Mechanical, o: Optical| CavityParams {
            mech: m.to_params(),
            optical: o.to_params(),
        };
        let mut sys = SystemParams::new(
            PhysicalConstants::default(),
            cavity(self.mechanical_a, self.optical_a),
            cavity(self.mechanical_b, self.optical_b),
            GravityCoupling {
                lambda_form: self.gravity.lambda_form,
                boost: self.gravity.boost,
            },
            self.model.gravity_model,
        )?;
        sys.sn_keep_thermal_cross = self.model.sn_keep_thermal_cross;
        Ok(sys)
    }

    /// Sets one numeric field by dotted key. `mechanical.*` and `optical.*`
    /// set both sides; setting `finesse` clears `bandwidth_rad_s` and the
    /// other way round.
    pub fn set(&mut self, key: &str, value: f64) -> CliResult<()> {
        let unknown = || CliError::validation(key, "unknown parameter key");
        let (table, field) = key.split_once('.').ok_or_else(unknown)?;
        match table {
            "mechanical" | "mechanical_a" | "mechanical_b" => {
                let both = table == "mechanical";
                let mut targets: Vec<&mut Mechanical> = Vec::new();
                if both || table == "mechanical_a" {
                    targets.push(&mut self.mechanical_a);
                }
                if both || table == "mechanical_b" {
                    targets.push(&mut self.mechanical_b);
                }
                for m in targets {
                    let slot = match field {
                        "omega_m_hz" => &mut m.omega_m_hz,
                        "q_m" => &mut m.q_m,
                        "mass_kg" => &mut m.mass_kg,
                        "density_kg_m3" => &mut m.density_kg_m3,
                        "temperature_k" => &mut m.temperature_k,
                        _ => return Err(unknown()),
                    };
                    *slot = value;
                }
            }
            "optical" | "optical_a" | "optical_b" => {
                let both = table == "optical";
                let mut targets: Vec<&mut Optical> = Vec::new();
                if both || table == "optical_a" {
                    targets.push(&mut self.optical_a);
                }
                if both || table == "optical_b" {
                    targets.push(&mut self.optical_b);
                }
                for o in targets {
                    match field {
                        "power_w" => o.power_w = value,
                        "wavelength_m" => o.wavelength_m = value,
                        "length_m" => o.length_m = value,
                        "finesse" => {
                            o.finesse = Some(value);
                            o.bandwidth_rad_s = None;
                        }
                        "bandwidth_rad_s" => {
                            o.bandwidth_rad_s = Some(value);
                            o.finesse = None;
                        }
                        _ => return Err(unknown()),
                    }
                }
            }
            "gravity" => match field {
                "lambda_form" => self.gravity.lambda_form = value,
                "boost" => self.gravity.boost = value,
                _ => return Err(unknown()),
            },
            _ => return Err(unknown()),
        }
        Ok(())
    }
}

impl Default for ResolvedConfig {
    fn default() -> Self {
        Self::reference()
    }
}

fn resolve(file: ConfigFile) -> CliResult<ResolvedConfig> {
    let ma = file
        .mechanical_a
        .ok_or_else(|| CliError::validation("mechanical_a", "missing required table"))?;
    let (mechanical_a, mechanical_b) = resolve_mechanical(&ma, file.mechanical_b.as_ref())?;
    mechanical_a.validate("mechanical_a")?;
    mechanical_b.validate("mechanical_b")?;
    let oa = file
        .optical_a
        .ok_or_else(|| CliError::validation("optical_a", "missing required table"))?;
    let (optical_a, optical_b) = resolve_optical(&oa, file.optical_b.as_ref())?;
    let g = file.gravity.unwrap_or_default();
    let m = file.model.unwrap_or_default();
    let cfg = ResolvedConfig {
        mechanical_a,
        mechanical_b,
        optical_a,
        optical_b,
        gravity: Gravity {
            lambda_form: g.lambda_form.unwrap_or(DEFAULT_LAMBDA_FORM),
            boost: g.boost.unwrap_or(1.0),
        },
        model: Model {
            gravity_model: m.gravity_model.unwrap_or_default(),
            sn_keep_thermal_cross: m.sn_keep_thermal_cross.unwrap_or(false),
        },
    };
    cfg.to_system()?;
    Ok(cfg)
}

/// Text format of a config document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigFormat {
    Toml,
    Json,
}

impl ConfigFormat {
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => ConfigFormat::Json,
            _ => ConfigFormat::Toml,
        }
    }
}

/// Parses and resolves config text; `origin` names the source in errors.
pub fn parse_config_str(
    text: &str,
    format: ConfigFormat,
    origin: &str,
) -> CliResult<ResolvedConfig> {
    let parse_err = |message: String| CliError::Parse {
        path: origin.to_string(),
        message,
    };
    let doc: Value = match format {
        ConfigFormat::Toml => toml::from_str(text).map_err(|e| parse_err(e.to_string()))?,
        ConfigFormat::Json => serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?,
    };
    check_keys(&doc)?;
    let file: ConfigFile = serde_json::from_value(doc).map_err(|e| parse_err(e.to_string()))?;
    resolve(file)
}

/// Reads, parses and resolves a config file.
pub fn parse_config(path: &Path) -> CliResult<ResolvedConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
    parse_config_str(
        &text,
        ConfigFormat::for_path(path),
        &path.display().to_string(),
    )
}
