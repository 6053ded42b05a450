//! Subcommand implementations. Each returns a [`Payload`]; rendering and
//! provenance live in [`crate::output`].

use gravcorr::correlation::{
    required_tau, snr_closed_form, snr_grid, snr_numeric, snr_report, with_optimal_power_b,
};
use gravcorr::entanglement::{
    covariance_at_resonance, decoherence_bound, entanglement_condition, log_negativity,
    DecoherenceGeometry, DecoherenceRegime,
};
use gravcorr::geometry::{form_factor_curve, Body, BodyPair, BodyShape, Convention};
use gravcorr::montecarlo::{run_ensemble, EnsembleConfig, TrialRecord};
use gravcorr::params::{entanglement_threshold, YEAR_S};
use gravcorr::{GravityModel, SystemParams};
use serde_json::{json, Map, Value};

use crate::args::{
    ConventionArg, FormfactorArgs, ModelArg, MontecarloArgs, NegativityArgs, Regime, Shape,
    SnrArgs, SpectraArgs, SweepArgs, SweepCommand, TauArgs, ThresholdArgs,
};
use crate::config::ResolvedConfig;
use crate::error::{CliError, CliResult};

/// Tabular result: numeric columns plus summary fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub summary: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Report(Map<String, Value>),
    Table(Table),
    /// Spectra keep their dedicated CSV writer.
    Spectra {
        grid: Vec<f64>,
        sys: SystemParams,
    },
    /// Ensemble report plus the per-trial records.
    Ensemble {
        report: Map<String, Value>,
        trials: Vec<TrialRecord>,
    },
}

fn obj(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("object literal"),
    }
}

/// Non-finite numbers become `null`.
fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn model_name(m: GravityModel) -> Value {
    serde_json::to_value(m).expect("enum serialises")
}

fn with_noise_ratio(sys: &SystemParams, ratio: Option<f64>) -> CliResult<SystemParams> {
    Ok(match ratio {
        Some(r) => sys.with_noise_to_cooperativity(r)?,
        None => *sys,
    })
}

fn system_summary(sys: &SystemParams) -> Map<String, Value> {
    obj(json!({
        "power_a_w": num(sys.cavity_a.optical.power_cav),
        "power_b_w": num(sys.cavity_b.optical.power_cav),
        "cooperativity_a": num(sys.cooperativity_a()),
        "cooperativity_b": num(sys.cooperativity_b()),
        "n_th_a": num(sys.n_th_a()),
        "n_th_b": num(sys.n_th_b()),
        "noise_to_cooperativity": num(sys.n_th_b() / sys.cooperativity_a()),
        "omega_g_rad_s": num(sys.omega_g()),
        "gravity_model": model_name(sys.gravity_model),
        "boost": num(sys.gravity.boost),
    }))
}

pub fn spectra(sys: &SystemParams, args: &SpectraArgs) -> CliResult<Payload> {
    let grid = match (args.fmin_hz, args.fmax_hz) {
        (Some(lo), Some(hi)) => {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) || args.points < 2 {
                return Err(CliError::Usage(format!(
                    "need fmin < fmax and at least 2 points (got {lo}, {hi}, {})",
                    args.points
                )));
            }
            if args.log && lo <= 0.0 {
                return Err(CliError::Usage("--log needs fmin-hz > 0".into()));
            }
            let two_pi = 2.0 * std::f64::consts::PI;
            let n = (args.points - 1) as f64;
            (0..args.points)
                .map(|i| {
                    let t = i as f64 / n;
                    let f = if args.log {
                        lo * (hi / lo).powf(t)
                    } else {
                        lo + (hi - lo) * t
                    };
                    two_pi * f
                })
                .collect()
        }
        _ => snr_grid(sys),
    };
    Ok(Payload::Spectra { grid, sys: *sys })
}

pub fn snr(sys: &SystemParams, args: &SnrArgs) -> CliResult<Map<String, Value>> {
    let tau = args.tau.unwrap_or(YEAR_S);
    let base = with_noise_ratio(sys, args.noise_ratio)?;
    let report = snr_report(&base, tau, args.optimize_b)?;
    let effective = if args.optimize_b {
        with_optimal_power_b(&base)?
    } else {
        base
    };
    let mut out = obj(json!({
        "snr_numeric": num(report.snr_numeric),
        "snr_closed_form": num(report.snr_closed_form),
        "numeric_over_closed_form": num(report.snr_numeric / report.snr_closed_form),
        "tau_s": num(tau),
        "tau_years": num(tau / YEAR_S),
        "power_b_opt_w": report.optimized_power_b.map_or(Value::Null, num),
    }));
    out.extend(system_summary(&effective));
    Ok(out)
}

pub fn tau(sys: &SystemParams, args: &TauArgs) -> CliResult<Map<String, Value>> {
    let base = with_noise_ratio(sys, args.noise_ratio)?;
    let (effective, power_b_opt) = if args.keep_b {
        (base, None)
    } else {
        let s = with_optimal_power_b(&base)?;
        (s, Some(s.cavity_b.optical.power_cav))
    };
    let required = required_tau(&effective, args.target_snr)?;
    let (seconds, closed, numeric) = if required.is_reachable() {
        let s = required.seconds();
        let numeric = snr_numeric(&effective, s, &snr_grid(&effective))?;
        (s, snr_closed_form(&effective, s), numeric)
    } else {
        (f64::INFINITY, 0.0, 0.0)
    };
    let mut out = obj(json!({
        "tau_s": num(seconds),
        "tau_years": num(seconds / YEAR_S),
        "reachable": required.is_reachable(),
        "target_snr": num(args.target_snr),
        "snr_closed_form": num(closed),
        "snr_numeric": num(numeric),
        "power_b_opt_w": power_b_opt.map_or(Value::Null, num),
    }));
    out.extend(system_summary(&effective));
    Ok(out)
}

pub fn negativity(sys: &SystemParams, args: &NegativityArgs) -> CliResult<Map<String, Value>> {
    let delta_omega = args.delta_omega.unwrap_or(sys.gamma_m());
    let cov = covariance_at_resonance(sys, delta_omega)?;
    let r = log_negativity(&cov)?;
    let cond = entanglement_condition(sys);
    Ok(obj(json!({
        "e_n": num(r.e_n),
        "sigma": num(r.sigma),
        "det_v": num(r.det_v),
        "nu_minus": num(r.nu_minus),
        "entangled": r.entangled,
        "e_n_explicit": r.e_n_explicit.map_or(Value::Null, num),
        "condition_exact": serde_json::to_value(cond.exact).expect("serialises"),
        "condition_reduced": serde_json::to_value(cond.reduced).expect("serialises"),
        "tq_bound_k": num(cond.tq_bound),
        "delta_omega_rad_s": num(delta_omega),
    })))
}

pub fn threshold(sys: &SystemParams, args: &ThresholdArgs) -> CliResult<Map<String, Value>> {
    let mech = &sys.cavity_a.mech;
    let t = entanglement_threshold(mech, sys.gravity.lambda_form, &sys.constants);
    let mut out = obj(json!({
        "lhs_w": num(t.lhs),
        "rhs_w": num(t.rhs),
        "tq_bound_k": num(t.tq_bound),
        "t_over_q_k": num(mech.temperature / mech.q_m),
        "satisfied": t.satisfied(),
    }));
    if let (Some(regime), Some(dxq), Some(d)) = (args.regime, args.dxq, args.d) {
        let regime = match regime {
            Regime::Gaussian => DecoherenceRegime::Gaussian,
            Regime::NonGaussian => DecoherenceRegime::NonGaussian,
        };
        let b = decoherence_bound(
            mech,
            regime,
            DecoherenceGeometry { d, delta_xq: dxq },
            sys.gravity.lambda_form,
            &sys.constants,
        )?;
        out.insert(
            "decoherence".into(),
            json!({
                "regime": serde_json::to_value(regime).expect("serialises"),
                "interaction_rate_hz": num(b.interaction_rate),
                "decoherence_rate_hz": num(b.decoherence_rate),
                "satisfied": b.satisfied,
            }),
        );
    }
    Ok(out)
}

pub fn formfactor(density: f64, args: &FormfactorArgs) -> CliResult<Payload> {
    let (body, length, column) = match args.shape {
        Shape::Sphere => (Body::sphere(args.radius, density)?, args.radius, "d_over_r"),
        Shape::Disk => {
            if !(args.aspect.is_finite() && args.aspect > 0.0) {
                return Err(CliError::validation(
                    "aspect",
                    format!("must be positive, got {}", args.aspect),
                ));
            }
            let thickness = args.radius / args.aspect;
            (
                Body::disk(args.radius, thickness, density)?,
                thickness,
                "d_over_h",
            )
        }
    };
    let pair = BodyPair::identical(body);
    let contact = pair.contact_separation();
    let d_min = args.dmin.unwrap_or(contact);
    let d_max = args.dmax.unwrap_or(5.0 * contact);
    let convention = match args.convention {
        ConventionArg::Derived => Convention::Derived,
        ConventionArg::Paper => Convention::Paper,
    };
    let curve = form_factor_curve(&pair, d_min, d_max, args.points, convention)?;
    let rows = curve
        .d
        .iter()
        .zip(&curve.lambda)
        .zip(&curve.est_rel_err)
        .map(|((d, l), e)| vec![d / length, *l, *e])
        .collect();
    let (radius, thickness) = match body.shape {
        BodyShape::Sphere { radius } => (radius, Value::Null),
        BodyShape::Disk { radius, thickness } => (radius, num(thickness)),
    };
    let summary = obj(json!({
        "shape": match args.shape { Shape::Sphere => "sphere", Shape::Disk => "disk" },
        "radius_m": num(radius),
        "thickness_m": thickness,
        "convention": serde_json::to_value(convention).expect("serialises"),
        "d_at_max_m": num(curve.d[curve.argmax]),
        "lambda_max": num(curve.lambda[curve.argmax]),
    }));
    Ok(Payload::Table(Table {
        columns: vec![column.into(), "lambda".into(), "est_rel_err".into()],
        rows,
        summary,
    }))
}

/// Applies the montecarlo overrides to the input configuration.
pub fn montecarlo_overrides(config: &mut ResolvedConfig, args: &MontecarloArgs) {
    if let Some(b) = args.boost {
        config.gravity.boost = b;
    }
    if let Some(m) = args.gravity_model {
        config.model.gravity_model = match m {
            ModelArg::Quantum => GravityModel::Quantum,
            ModelArg::SchroedingerNewton => GravityModel::SchroedingerNewton,
            ModelArg::None => GravityModel::None,
        };
    }
}

pub fn montecarlo(sys: &SystemParams, seed: u64, args: &MontecarloArgs) -> CliResult<Payload> {
    let cfg = EnsembleConfig {
        dt: args.dt,
        taus: args.tau.clone(),
        n_trials: args.trials,
        seed,
        filter_template: None,
        keep_trials: args.trials_csv.is_some(),
    };
    let r = run_ensemble(sys, &cfg)?;
    let per_tau: Vec<Value> = r
        .per_tau
        .iter()
        .map(|s| {
            let mut v = serde_json::to_value(s).expect("serialises");
            v["consistent_with_zero_3sigma"] = Value::Bool(s.consistent_with_zero(3.0));
            v
        })
        .collect();
    let report = obj(json!({
        "n_trials": r.n_trials,
        "seed": seed,
        "dt_s": num(args.dt),
        "boost": num(r.boost),
        "gravity_model": model_name(sys.gravity_model),
        "mu_hat": num(r.mu_hat),
        "sigma_hat": num(r.sigma_hat),
        "snr_empirical": num(r.snr_empirical),
        "snr_analytic": num(r.snr_analytic),
        "empirical_over_analytic": num(r.snr_empirical / r.snr_analytic),
        "growth_exponent": r.growth_exponent.map_or(Value::Null, num),
        "taus_s": r.taus.iter().map(|&t| num(t)).collect::<Vec<_>>(),
        "per_tau": per_tau,
    }));
    Ok(Payload::Ensemble {
        report,
        trials: r.trials,
    })
}

fn sweep_values(args: &SweepArgs) -> CliResult<Vec<f64>> {
    if let Some(v) = &args.values {
        if v.is_empty() {
            return Err(CliError::Usage("--values is empty".into()));
        }
        return Ok(v.clone());
    }
    let spec = args.range.as_deref().unwrap_or_default();
    let bad = || CliError::Usage(format!("--range expects start:stop:count, got `{spec}`"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, count] = parts.as_slice() else {
        return Err(bad());
    };
    let start: f64 = start.parse().map_err(|_| bad())?;
    let stop: f64 = stop.parse().map_err(|_| bad())?;
    let count: usize = count.parse().map_err(|_| bad())?;
    if count < 2 {
        return Err(bad());
    }
    if args.log && !(start > 0.0 && stop > 0.0) {
        return Err(CliError::Usage("--log needs positive range bounds".into()));
    }
    let n = (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            let t = i as f64 / n;
            if args.log {
                start * (stop / start).powf(t)
            } else {
                start + (stop - start) * t
            }
        })
        .collect())
}

/// Least-squares slope of `ln y` against `ln x`; `None` unless every pair
/// is positive and finite.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn sweep(config: &ResolvedConfig, args: &SweepArgs) -> CliResult<Payload> {
    let values = sweep_values(args)?;
    let columns: &[&str] = match args.command {
        SweepCommand::Tau => &["tau_s", "tau_years", "snr_numeric"],
        SweepCommand::Snr => &["snr_numeric", "snr_closed_form"],
        SweepCommand::Threshold => &["tq_bound_k", "lhs_w", "rhs_w"],
        SweepCommand::Negativity => &["e_n", "sigma", "det_v"],
    };
    let mut rows = Vec::with_capacity(values.len());
    for &v in &values {
        let mut cfg = *config;
        cfg.set(&args.key, v)?;
        let sys = cfg.to_system()?;
        let report = match args.command {
            SweepCommand::Tau => tau(
                &sys,
                &TauArgs {
                    target_snr: args.target_snr,
                    noise_ratio: args.noise_ratio,
                    keep_b: args.keep_b,
                },
            )?,
            SweepCommand::Snr => snr(
                &sys,
                &SnrArgs {
                    tau: args.tau,
                    optimize_b: args.optimize_b,
                    noise_ratio: args.noise_ratio,
                },
            )?,
            SweepCommand::Threshold => threshold(
                &sys,
                &ThresholdArgs {
                    regime: None,
                    dxq: None,
                    d: None,
                },
            )?,
            SweepCommand::Negativity => negativity(
                &sys,
                &NegativityArgs {
                    delta_omega: args.delta_omega,
                },
            )?,
        };
        let mut row = vec![v];
        row.extend(
            columns
                .iter()
                .map(|c| report.get(*c).and_then(Value::as_f64).unwrap_or(f64::NAN)),
        );
        rows.push(row);
    }
    let mut slopes = Map::new();
    for (j, c) in columns.iter().enumerate() {
        let y: Vec<f64> = rows.iter().map(|r| r[j + 1]).collect();
        slopes.insert(
            (*c).to_string(),
            loglog_slope(&values, &y).map_or(Value::Null, num),
        );
    }
    let command =
        serde_json::to_value(format!("{:?}", args.command).to_lowercase()).expect("string");
    let summary = obj(json!({
        "key": args.key,
        "command": command,
        "loglog_slope": slopes,
    }));
    let mut header = vec![args.key.clone()];
    header.extend(columns.iter().map(|c| c.to_string()));
    Ok(Payload::Table(Table {
        columns: header,
        rows,
        summary,
    }))
}
