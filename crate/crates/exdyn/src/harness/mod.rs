//! Experiment configuration, the full estimation pipeline, and sweep drivers.
//!
//! An experiment is: generate an orbit, evaluate the observable along it,
//! take block maxima, fit the GEV with subsample uncertainty. Configs are
//! plain JSON with the field names spelled exactly as in [`ExperimentConfig`]
//! (`N_blocklen`, `N_bmax`, `N_samp`, ...). Sweeps rerun the pipeline over a
//! list of block lengths or parameter values, one fresh orbit per row, with
//! the row seed derived from the base seed and the row's value so results do
//! not depend on list order.

pub mod diagnostics;
pub mod export;

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    self, lyapunov_spectrum, lorenz63_default_beta, TailPrediction,
};
use crate::dynamics::{
    orbit, to_cartesian, Initial, Kind, OrbitConfig, SystemId, SystemSpec, SUBSTEPS_DEFAULT,
    TRANSIENT_DEFAULT,
};
use crate::extremes::block_maxima_stream;
use crate::gevfit::{fit_with_uncertainty, EstimateReport};
use crate::observables::Observable;
use crate::util::derive_seed;
use crate::{Error, Result};

/// Seed for spectra computed while resolving predictions; fixed so that the
/// predicted column never depends on the experiment seed.
const PREDICTION_SEED: u64 = 0x5EED_CAFE;
/// Exponents above this count as unstable directions when splitting a
/// Kaplan-Yorke dimension into d_u and d_s.
const UNSTABLE_TOL: f64 = 0.02;
/// Default spectrum lengths for predictions that need a dimension estimate.
pub const SPECTRUM_STEPS_MAP: u64 = 2_000_000;
pub const SPECTRUM_STEPS_FLOW: u64 = 200_000;

fn default_n_samp() -> u64 {
    100
}

fn default_transient() -> u64 {
    TRANSIENT_DEFAULT
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Sweep request: rerun the experiment for each value of one parameter.
/// `param` is `"blocklen"` or one of the observable/system parameter names
/// understood by [`param_sweep`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: String,
    pub values: Vec<f64>,
}

/// How to compute the predicted shape parameter reported next to the
/// estimates. Variants that need an attractor dimension run a Lyapunov
/// spectrum internally (length `spectrum_steps`, or a kind-dependent
/// default) unless the dimension is given explicitly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PredictionRequest {
    /// Distance-power observable on the torus map (regime from the centre).
    ThomDistance,
    /// Separable power observable on the torus map.
    ThomPowerSum,
    /// Planar section observable on the solenoid.
    SolenoidPlanar,
    /// Distance-power observable on the solenoid.
    SolenoidDistance,
    /// Distance-power observable maximized on the attractor itself.
    DistPowerOnAttractor {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spectrum_steps: Option<u64>,
    },
    /// Smooth observable with a quadratic maximum at a generic point:
    /// -1/xi = (d_u + d_neutral)/2 + d_s, with the split read off a computed
    /// Kaplan-Yorke dimension (flows contribute one neutral direction).
    GenericSection {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spectrum_steps: Option<u64>,
    },
    /// Explicit unstable/stable split: -1/xi = d_u/2 + d_s.
    General {
        d_u: f64,
        #[serde(default)]
        d_s: f64,
    },
    /// Coordinate section of the Lorenz convection flow; beta defaults to
    /// the classical-parameter rate ratio.
    Lorenz63Planar {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta: Option<f64>,
        #[serde(default)]
        d_s_tilde: f64,
    },
}

/// One complete experiment. Serialized field names are the config file
/// contract; everything beyond system/observable/lengths has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    pub observable: Observable,
    #[serde(rename = "N_blocklen")]
    pub n_blocklen: u64,
    #[serde(rename = "N_bmax")]
    pub n_bmax: u64,
    #[serde(rename = "N_samp", default = "default_n_samp")]
    pub n_samp: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_transient")]
    pub transient: u64,
    /// Flow sample interval; None picks the system default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substeps: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<PredictionRequest>,
}

impl ExperimentConfig {
    /// Total iterates consumed by one run.
    pub fn n_iterates(&self) -> Result<u64> {
        self.n_blocklen.checked_mul(self.n_bmax).ok_or_else(|| {
            Error::InvalidConfig(format!(
                "N_blocklen * N_bmax overflows: {} * {}",
                self.n_blocklen, self.n_bmax
            ))
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_blocklen == 0 || self.n_bmax == 0 || self.n_samp == 0 {
            return Err(Error::InvalidConfig(
                "N_blocklen, N_bmax and N_samp must be positive".into(),
            ));
        }
        self.n_iterates()?;
        if self.n_bmax % self.n_samp != 0 {
            return Err(Error::InvalidConfig(format!(
                "N_samp ({}) must divide N_bmax ({})",
                self.n_samp, self.n_bmax
            )));
        }
        if self.n_bmax / self.n_samp < 3 {
            return Err(Error::InvalidConfig(format!(
                "subsamples of {} maxima are too small to fit; need N_bmax/N_samp >= 3",
                self.n_bmax / self.n_samp
            )));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
            }
        }
        if self.substeps == Some(0) {
            return Err(Error::InvalidConfig("substeps must be positive".into()));
        }
        self.observable.validate()?;
        if !self.observable.accepts_dim(self.system.state_dim()) {
            return Err(Error::DimensionMismatch {
                expected: self.system.state_dim(),
                got: if self.system.state_dim() == 2 { 3 } else { 2 },
            });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

/// Run one experiment end to end: orbit, observable, block maxima, fit.
/// Streams the series (nothing proportional to N_blocklen * N_bmax is ever
/// materialized), so long runs are memory-flat. Deterministic given the
/// config. Errors carry the pipeline stage they surfaced in.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<EstimateReport> {
    cfg.validate().map_err(|e| e.at_stage("config"))?;
    let compiled = cfg
        .observable
        .compiled_for(cfg.system.state_dim())
        .map_err(|e| e.at_stage("config"))?;
    let ocfg = OrbitConfig {
        initial: Initial::Seeded,
        transient: cfg.transient,
        n_samples: cfg.n_iterates().map_err(|e| e.at_stage("config"))?,
        dt: cfg.dt,
        substeps: cfg.substeps.unwrap_or(SUBSTEPS_DEFAULT),
        seed: cfg.seed,
    };
    let orb = orbit(&cfg.system, &ocfg).map_err(|e| e.at_stage("orbit"))?;
    let sys = cfg.system;
    let samples = orb.map(move |r| r.map(|s| compiled.eval(to_cartesian(&sys, s))));
    let bm = block_maxima_stream(samples, cfg.n_blocklen, cfg.n_bmax).map_err(|e| match e {
        Error::Divergence { .. } | Error::NonFiniteState | Error::NonFiniteSubstep { .. } => {
            e.at_stage("orbit")
        }
        other => other.at_stage("maxima"),
    })?;
    fit_with_uncertainty(&bm, cfg.n_samp).map_err(|e| e.at_stage("fit"))
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// One sweep result row. Field order matches the CSV column contract.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub xi_hat: f64,
    pub xi_sd: f64,
    pub mu_hat: f64,
    pub mu_sd: f64,
    pub sigma_hat: f64,
    pub sigma_sd: f64,
    pub predicted_xi: Option<f64>,
    pub n_iterates: u64,
}

fn experiment_row(sweep_value: f64, row_cfg: &ExperimentConfig) -> Result<SweepRow> {
    let predicted_xi = match &row_cfg.prediction {
        Some(req) => Some(resolve_prediction(req, &row_cfg.system, &row_cfg.observable)?.xi),
        None => None,
    };
    let report = run_experiment(row_cfg)?;
    Ok(SweepRow {
        sweep_value,
        xi_hat: report.xi_hat,
        xi_sd: report.xi_sd,
        mu_hat: report.mu_hat,
        mu_sd: report.mu_sd,
        sigma_hat: report.sigma_hat,
        sigma_sd: report.sigma_sd,
        predicted_xi,
        n_iterates: row_cfg.n_iterates()?,
    })
}

fn collect_rows(results: Vec<(usize, Result<SweepRow>)>) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (index, result) in results {
        match result {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((index, Box::new(e))),
        }
    }
    if failures.is_empty() {
        Ok(rows)
    } else {
        Err(Error::SweepFailed { failures })
    }
}

/// One row per block length; everything else comes from `cfg`. Rows run
/// concurrently but are returned in input order, and each row's seed is
/// derived from (base seed, block length), so a given length always produces
/// the same numbers no matter where it appears in the list.
pub fn blocklen_sweep(cfg: &ExperimentConfig, blocklens: &[u64]) -> Result<Vec<SweepRow>> {
    let results: Vec<(usize, Result<SweepRow>)> = blocklens
        .par_iter()
        .enumerate()
        .map(|(index, &blocklen)| {
            let mut row_cfg = cfg.clone();
            row_cfg.n_blocklen = blocklen;
            row_cfg.seed = derive_seed(cfg.seed, blocklen);
            row_cfg.sweep = None;
            (index, experiment_row(blocklen as f64, &row_cfg))
        })
        .collect();
    collect_rows(results)
}

/// One row per parameter value, with `param` applied to the observable or
/// system and `predicted_xi` recomputed for each modified configuration.
/// Row seeds derive from (base seed, value bits): order-independent.
pub fn param_sweep(cfg: &ExperimentConfig, param: &str, values: &[f64]) -> Result<Vec<SweepRow>> {
    let results: Vec<(usize, Result<SweepRow>)> = values
        .par_iter()
        .enumerate()
        .map(|(index, &value)| {
            let row = apply_param(cfg, param, value).and_then(|mut row_cfg| {
                row_cfg.seed = derive_seed(cfg.seed, value.to_bits());
                row_cfg.sweep = None;
                experiment_row(value, &row_cfg)
            });
            (index, row)
        })
        .collect();
    collect_rows(results)
}

/// Dispatch on the config's sweep spec; a missing spec runs the single
/// configured experiment as a one-row block-length "sweep".
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    match &cfg.sweep {
        None => blocklen_sweep(cfg, &[cfg.n_blocklen]),
        Some(spec) if spec.param == "blocklen" => {
            let blocklens = spec
                .values
                .iter()
                .map(|&v| {
                    let r = v.round();
                    if v.is_finite() && (v - r).abs() < 1e-9 && r >= 1.0 {
                        Ok(r as u64)
                    } else {
                        Err(Error::InvalidConfig(format!(
                            "blocklen sweep values must be positive integers, got {v}"
                        )))
                    }
                })
                .collect::<Result<Vec<u64>>>()?;
            blocklen_sweep(cfg, &blocklens)
        }
        Some(spec) => param_sweep(cfg, &spec.param, &spec.values),
    }
}

/// Return `cfg` with one named parameter replaced. Supported names: `a`,
/// `b` (power-sum exponents), `alpha`, `x_M`, `y_M` (distance/power-sum
/// centre), `theta` (plane observables), `lambda` (solenoid contraction),
/// and `t` (radial perturbation scaling the distance centre by 1 + t).
pub fn apply_param(cfg: &ExperimentConfig, param: &str, value: f64) -> Result<ExperimentConfig> {
    let mut out = cfg.clone();
    let unknown = || Error::UnknownParam { name: param.to_string() };
    match param {
        "a" => match &mut out.observable {
            Observable::PowerSum { a, .. } => *a = value,
            _ => return Err(unknown()),
        },
        "b" => match &mut out.observable {
            Observable::PowerSum { b, .. } => *b = value,
            _ => return Err(unknown()),
        },
        "alpha" => match &mut out.observable {
            Observable::DistPower { alpha, .. } => *alpha = value,
            _ => return Err(unknown()),
        },
        "x_M" => match &mut out.observable {
            Observable::DistPower { center, .. } => center[0] = value,
            Observable::PowerSum { center, .. } => center[0] = value,
            _ => return Err(unknown()),
        },
        "y_M" => match &mut out.observable {
            Observable::DistPower { center, .. } => center[1] = value,
            Observable::PowerSum { center, .. } => center[1] = value,
            _ => return Err(unknown()),
        },
        "theta" => match &mut out.observable {
            Observable::PlaneThetaXy { theta, .. }
            | Observable::PlaneThetaXz { theta, .. }
            | Observable::PlaneTheta2d { theta } => *theta = value,
            _ => return Err(unknown()),
        },
        "lambda" => match out.system {
            SystemSpec::Solenoid { k, .. } => out.system = SystemSpec::solenoid(value, k)?,
            _ => return Err(unknown()),
        },
        "t" => match &mut out.observable {
            Observable::DistPower { center, .. } => {
                for c in center.iter_mut() {
                    *c *= 1.0 + value;
                }
            }
            _ => return Err(unknown()),
        },
        _ => return Err(unknown()),
    }
    out.observable.validate()?;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Predictions
// ---------------------------------------------------------------------------

fn default_spectrum_steps(sys: &SystemSpec) -> u64 {
    match sys.kind() {
        Kind::Map => SPECTRUM_STEPS_MAP,
        Kind::Flow => SPECTRUM_STEPS_FLOW,
    }
}

fn mismatch(req: &str, what: &str) -> Error {
    Error::InvalidConfig(format!("prediction `{req}` needs {what}"))
}

/// Turn a prediction request into a number for this (system, observable)
/// pair by delegating to the analysis module. The whole computation is
/// deterministic: spectra run under a fixed internal seed.
pub fn resolve_prediction(
    req: &PredictionRequest,
    system: &SystemSpec,
    observable: &Observable,
) -> Result<TailPrediction> {
    use PredictionRequest as R;
    match req {
        R::ThomDistance => match (system, observable) {
            (SystemSpec::Thom, Observable::DistPower { center, alpha, .. })
                if center.len() == 2 =>
            {
                analysis::predict_thom_dist(center[0], center[1], *alpha)
            }
            _ => Err(mismatch("thom_distance", "the torus map and a 2-d dist_power observable")),
        },
        R::ThomPowerSum => match (system, observable) {
            (SystemSpec::Thom, Observable::PowerSum { a, b, .. }) => {
                analysis::predict_thom_power_sum(*a, *b)
            }
            _ => Err(mismatch("thom_power_sum", "the torus map and a power_sum observable")),
        },
        R::SolenoidPlanar => match system {
            SystemSpec::Solenoid { lambda, .. } => analysis::predict_solenoid_planar(*lambda),
            _ => Err(mismatch("solenoid_planar", "the solenoid system")),
        },
        R::SolenoidDistance => match (system, observable) {
            (SystemSpec::Solenoid { lambda, .. }, Observable::DistPower { alpha, .. }) => {
                analysis::predict_solenoid_dist(*lambda, *alpha)
            }
            _ => Err(mismatch("solenoid_distance", "the solenoid and a dist_power observable")),
        },
        R::DistPowerOnAttractor { dim, spectrum_steps } => {
            let alpha = match observable {
                Observable::DistPower { alpha, .. } => *alpha,
                _ => return Err(mismatch("dist_power_on_attractor", "a dist_power observable")),
            };
            let d = match dim {
                Some(d) => *d,
                None => {
                    let steps = spectrum_steps.unwrap_or_else(|| default_spectrum_steps(system));
                    lyapunov_spectrum(system, steps, PREDICTION_SEED)?.dimension()
                }
            };
            analysis::predict_dist_power_on_attractor(d, alpha)
        }
        R::GenericSection { spectrum_steps } => {
            let steps = spectrum_steps.unwrap_or_else(|| default_spectrum_steps(system));
            let spec = lyapunov_spectrum(system, steps, PREDICTION_SEED)?;
            let dim = spec.dimension();
            let neutral = match system.kind() {
                Kind::Map => 0.0,
                Kind::Flow => 1.0,
            };
            let d_u = spec.exponents.iter().filter(|&&x| x > UNSTABLE_TOL).count() as f64;
            let d_s = (dim - d_u - neutral).max(0.0);
            analysis::predict_general(d_u + neutral, d_s)
        }
        R::General { d_u, d_s } => analysis::predict_general(*d_u, *d_s),
        R::Lorenz63Planar { beta, d_s_tilde } => match system {
            SystemSpec::Lorenz63 { .. } => analysis::predict_lorenz63_planar(
                beta.unwrap_or_else(lorenz63_default_beta),
                *d_s_tilde,
            ),
            _ => Err(mismatch("lorenz63_planar", "the lorenz63 system")),
        },
    }
}

/// Pick the prediction rule this library knows for a (system, observable)
/// pair, or None when no rule applies.
pub fn infer_prediction(system: &SystemSpec, observable: &Observable) -> Option<PredictionRequest> {
    use Observable as O;
    use PredictionRequest as R;
    match (system.id(), observable) {
        (SystemId::Thom, O::DistPower { .. }) => Some(R::ThomDistance),
        (SystemId::Thom, O::PowerSum { .. }) => Some(R::ThomPowerSum),
        (SystemId::Solenoid, O::DistPower { .. }) => Some(R::SolenoidDistance),
        (
            SystemId::Solenoid,
            O::PlaneThetaXy { .. } | O::PlaneThetaXz { .. } | O::Linear { .. } | O::CoordX,
        ) => Some(R::SolenoidPlanar),
        (
            SystemId::Lorenz63,
            O::CoordX | O::PlaneThetaXy { .. } | O::PlaneThetaXz { .. } | O::Linear { .. },
        ) => Some(R::Lorenz63Planar { beta: None, d_s_tilde: 0.0 }),
        (_, O::DistPower { .. }) => {
            Some(R::DistPowerOnAttractor { dim: None, spectrum_steps: None })
        }
        (
            _,
            O::PlaneTheta2d { .. }
            | O::CoordX
            | O::Linear { .. }
            | O::PlaneThetaXy { .. }
            | O::PlaneThetaXz { .. },
        ) => Some(R::GenericSection { spectrum_steps: None }),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// CLI-facing config assembly
// ---------------------------------------------------------------------------

/// Scale presets for the run lengths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// Smoke-test scale: N_bmax = 10^3, N_blocklen = 10^3.
    Fast,
    /// Publication scale: N_bmax = 5*10^4, N_blocklen = 10^4.
    Paper,
}

impl Profile {
    pub fn n_blocklen(self) -> u64 {
        match self {
            Profile::Fast => 1_000,
            Profile::Paper => 10_000,
        }
    }

    pub fn n_bmax(self) -> u64 {
        match self {
            Profile::Fast => 1_000,
            Profile::Paper => 50_000,
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Profile> {
        match s {
            "fast" => Ok(Profile::Fast),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::InvalidConfig(format!(
                "unknown profile `{other}` (expected fast or paper)"
            ))),
        }
    }
}

/// Command-line overrides layered on top of a config file. Precedence, low
/// to high: config file, profile preset, individual flags.
#[derive(Clone, Debug, Default)]
pub struct ConfigOverrides {
    /// Bare system id ("thom") or a full system JSON object.
    pub system: Option<String>,
    /// Bare family name ("coord_x") or a full observable JSON object.
    pub observable: Option<String>,
    pub blocklen: Option<u64>,
    pub bmax: Option<u64>,
    pub nsamp: Option<u64>,
    pub seed: Option<u64>,
    pub transient: Option<u64>,
    pub profile: Option<Profile>,
}

/// Parse a `--system` argument into config JSON.
pub fn parse_system_arg(text: &str) -> Result<serde_json::Value> {
    let t = text.trim();
    if t.starts_with('{') {
        Ok(serde_json::from_str(t)?)
    } else {
        Ok(serde_json::json!({ "system_id": t }))
    }
}

/// Parse an `--observable` argument into config JSON.
pub fn parse_observable_arg(text: &str) -> Result<serde_json::Value> {
    let t = text.trim();
    if t.starts_with('{') {
        Ok(serde_json::from_str(t)?)
    } else {
        Ok(serde_json::json!({ "family": t }))
    }
}

/// `--system` argument to a validated system.
pub fn system_from_arg(text: &str) -> Result<SystemSpec> {
    Ok(serde_json::from_value(parse_system_arg(text)?)?)
}

/// `--observable` argument to a validated observable.
pub fn observable_from_arg(text: &str) -> Result<Observable> {
    let obs: Observable = serde_json::from_value(parse_observable_arg(text)?)?;
    obs.validate()?;
    Ok(obs)
}

/// Merge an optional config file (JSON text) with CLI overrides into a
/// validated config. Merging is by top-level field.
pub fn assemble_config(file_json: Option<&str>, ov: &ConfigOverrides) -> Result<ExperimentConfig> {
    let mut base = serde_json::Map::new();
    if let Some(text) = file_json {
        match serde_json::from_str::<serde_json::Value>(text)? {
            serde_json::Value::Object(map) => base = map,
            _ => return Err(Error::InvalidConfig("config must be a JSON object".into())),
        }
    }
    if let Some(p) = ov.profile {
        base.insert("N_blocklen".into(), p.n_blocklen().into());
        base.insert("N_bmax".into(), p.n_bmax().into());
    }
    if let Some(s) = &ov.system {
        base.insert("system".into(), parse_system_arg(s)?);
    }
    if let Some(o) = &ov.observable {
        base.insert("observable".into(), parse_observable_arg(o)?);
    }
    if let Some(v) = ov.blocklen {
        base.insert("N_blocklen".into(), v.into());
    }
    if let Some(v) = ov.bmax {
        base.insert("N_bmax".into(), v.into());
    }
    if let Some(v) = ov.nsamp {
        base.insert("N_samp".into(), v.into());
    }
    if let Some(v) = ov.seed {
        base.insert("seed".into(), v.into());
    }
    if let Some(v) = ov.transient {
        base.insert("transient".into(), v.into());
    }
    let cfg: ExperimentConfig = serde_json::from_value(serde_json::Value::Object(base))?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::SignForm;

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            system: SystemSpec::thom(),
            observable: Observable::power_sum([0.51, 0.509], 2.0, 2.0).unwrap(),
            n_blocklen: 200,
            n_bmax: 300,
            n_samp: 5,
            seed: 42,
            transient: 1_000,
            dt: None,
            substeps: None,
            sweep: None,
            prediction: None,
        }
    }

    #[test]
    fn config_json_field_names_are_verbatim() {
        let text = r#"{
            "system": { "system_id": "solenoid", "params": { "lambda": 0.3 } },
            "observable": { "family": "plane_theta_xy", "theta": 0.0 },
            "N_blocklen": 1000,
            "N_bmax": 2000,
            "N_samp": 50,
            "seed": 7,
            "prediction": { "kind": "solenoid_planar" }
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.n_blocklen, 1000);
        assert_eq!(cfg.n_bmax, 2000);
        assert_eq!(cfg.n_samp, 50);
        assert_eq!(cfg.transient, 100_000); // default
        assert!(matches!(cfg.system, SystemSpec::Solenoid { lambda, .. } if lambda == 0.3));
        assert_eq!(cfg.prediction, Some(PredictionRequest::SolenoidPlanar));
        cfg.validate().unwrap();

        // Defaults: N_samp = 100, seed = 0.
        let minimal = r#"{
            "system": { "system_id": "thom" },
            "observable": { "family": "coord_x" },
            "N_blocklen": 10,
            "N_bmax": 300
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(minimal).unwrap();
        assert_eq!(cfg.n_samp, 100);
        assert_eq!(cfg.seed, 0);

        // Unknown fields are config errors, not silent noise.
        assert!(serde_json::from_str::<ExperimentConfig>(
            r#"{ "system": { "system_id": "thom" }, "observable": { "family": "coord_x" },
                 "N_blocklen": 10, "N_bmax": 300, "block_len": 5 }"#
        )
        .is_err());
    }

    #[test]
    fn config_roundtrips_through_json() {
        let mut cfg = small_cfg();
        cfg.sweep = Some(SweepSpec { param: "b".into(), values: vec![1.0, 2.0] });
        cfg.prediction = Some(PredictionRequest::ThomPowerSum);
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn validation_rejects_bad_shapes() {
        let mut cfg = small_cfg();
        cfg.n_samp = 7; // does not divide 300
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));

        let mut cfg = small_cfg();
        cfg.n_samp = 150; // subsamples of 2 cannot be fit
        assert!(cfg.validate().is_err());

        let mut cfg = small_cfg();
        cfg.observable = Observable::CoordX;
        cfg.n_samp = 100;
        cfg.validate().unwrap();

        let mut cfg = small_cfg();
        cfg.observable =
            Observable::PlaneThetaXz { theta: 0.0, x0: 0.0, z0: 0.0 }; // needs 3-d
        assert!(matches!(cfg.validate(), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn run_experiment_is_deterministic_and_staged() {
        let cfg = small_cfg();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_bmax, 300);
        assert_eq!(a.n_blocklen, 200);
        assert_eq!(a.n_samp, 5);
        assert!(a.xi_hat.is_finite() && a.xi_sd >= 0.0);

        let mut bad = cfg;
        bad.n_samp = 7;
        match run_experiment(&bad) {
            Err(Error::Stage { stage, .. }) => assert_eq!(stage, "config"),
            other => panic!("expected a staged config error, got {other:?}"),
        }
    }

    #[test]
    fn n_samp_one_gives_zero_uncertainty() {
        let mut cfg = small_cfg();
        cfg.n_samp = 1;
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.xi_sd, 0.0);
        assert_eq!(report.mu_sd, 0.0);
        assert_eq!(report.sigma_sd, 0.0);
    }

    #[test]
    fn single_length_sweep_equals_run_experiment() {
        let cfg = small_cfg();
        let rows = blocklen_sweep(&cfg, &[cfg.n_blocklen]).unwrap();
        assert_eq!(rows.len(), 1);

        let mut row_cfg = cfg.clone();
        row_cfg.seed = derive_seed(cfg.seed, cfg.n_blocklen);
        let report = run_experiment(&row_cfg).unwrap();
        assert_eq!(rows[0].xi_hat, report.xi_hat);
        assert_eq!(rows[0].mu_hat, report.mu_hat);
        assert_eq!(rows[0].sigma_sd, report.sigma_sd);
        assert_eq!(rows[0].sweep_value, cfg.n_blocklen as f64);
        assert_eq!(rows[0].n_iterates, cfg.n_blocklen * cfg.n_bmax);
        assert_eq!(rows[0].predicted_xi, None);

        // run_sweep with no sweep spec is the same single row.
        assert_eq!(run_sweep(&cfg).unwrap(), rows);
    }

    #[test]
    fn sweep_rows_do_not_depend_on_list_order() {
        let mut cfg = small_cfg();
        cfg.prediction = Some(PredictionRequest::ThomPowerSum);
        let fwd = param_sweep(&cfg, "b", &[1.0, 2.0]).unwrap();
        let rev = param_sweep(&cfg, "b", &[2.0, 1.0]).unwrap();
        assert_eq!(fwd[0], rev[1]);
        assert_eq!(fwd[1], rev[0]);
        // Prediction recomputed per value: -1/xi = 1/a + 1/b.
        assert_eq!(fwd[0].predicted_xi, Some(-1.0 / (0.5 + 1.0)));
        assert_eq!(fwd[1].predicted_xi, Some(-1.0 / (0.5 + 0.5)));

        let bl_fwd = blocklen_sweep(&cfg, &[100, 200]).unwrap();
        let bl_rev = blocklen_sweep(&cfg, &[200, 100]).unwrap();
        assert_eq!(bl_fwd[0], bl_rev[1]);
        assert_eq!(bl_fwd[1], bl_rev[0]);
    }

    #[test]
    fn empty_sweep_is_empty() {
        let cfg = small_cfg();
        assert!(param_sweep(&cfg, "b", &[]).unwrap().is_empty());
        assert!(blocklen_sweep(&cfg, &[]).unwrap().is_empty());
    }

    #[test]
    fn sweep_failures_carry_row_indices() {
        let cfg = small_cfg();
        // b = -1 fails observable validation in row 1.
        match param_sweep(&cfg, "b", &[1.0, -1.0]) {
            Err(Error::SweepFailed { failures }) => {
                assert_eq!(failures.len(), 1);
                assert_eq!(failures[0].0, 1);
            }
            other => panic!("expected SweepFailed, got {other:?}"),
        }
        assert!(matches!(
            param_sweep(&cfg, "no_such_knob", &[1.0]),
            Err(Error::SweepFailed { .. })
        ));
    }

    #[test]
    fn apply_param_touches_the_right_field() {
        let cfg = small_cfg();
        let c = apply_param(&cfg, "a", 3.0).unwrap();
        assert!(matches!(c.observable, Observable::PowerSum { a, .. } if a == 3.0));
        let c = apply_param(&cfg, "x_M", 0.25).unwrap();
        assert!(matches!(c.observable, Observable::PowerSum { center, .. } if center[0] == 0.25));

        let mut dist_cfg = small_cfg();
        dist_cfg.observable =
            Observable::dist_power(&[0.5, 0.6], 1.0, SignForm::OneMinus).unwrap();
        let c = apply_param(&dist_cfg, "alpha", 2.5).unwrap();
        assert!(matches!(c.observable, Observable::DistPower { alpha, .. } if alpha == 2.5));
        let c = apply_param(&dist_cfg, "t", 0.1).unwrap();
        match &c.observable {
            Observable::DistPower { center, .. } => {
                assert!((center[0] - 0.55).abs() < 1e-15);
                assert!((center[1] - 0.66).abs() < 1e-15);
            }
            other => panic!("unexpected observable {other:?}"),
        }

        let mut sol_cfg = small_cfg();
        sol_cfg.system = SystemSpec::with_defaults(SystemId::Solenoid);
        sol_cfg.observable = Observable::PlaneThetaXy { theta: 0.0, x0: 0.0, y0: 0.0 };
        let c = apply_param(&sol_cfg, "lambda", 0.3).unwrap();
        assert!(matches!(c.system, SystemSpec::Solenoid { lambda, .. } if lambda == 0.3));
        let c = apply_param(&sol_cfg, "theta", 0.25).unwrap();
        assert!(matches!(c.observable, Observable::PlaneThetaXy { theta, .. } if theta == 0.25));
        // Solenoid admissibility still applies through sweeps.
        assert!(apply_param(&sol_cfg, "lambda", 0.7).is_err());

        assert!(matches!(
            apply_param(&cfg, "theta", 0.1),
            Err(Error::UnknownParam { .. })
        ));
    }

    #[test]
    fn prediction_resolution_matches_analysis() {
        let sol = SystemSpec::solenoid(0.2, 0.5).unwrap();
        let obs = Observable::PlaneThetaXy { theta: 0.0, x0: 0.0, y0: 0.0 };
        let got = resolve_prediction(&PredictionRequest::SolenoidPlanar, &sol, &obs).unwrap();
        let want = analysis::predict_solenoid_planar(0.2).unwrap();
        assert_eq!(got.xi, want.xi);
        // 1/2 + log2/log(1/lambda)
        assert!((got.neg_inv_xi - (0.5 + 2.0f64.ln() / 5.0f64.ln())).abs() < 1e-15);

        let thom = SystemSpec::thom();
        let dist = Observable::dist_power(&[1.2, 1.2], 1.0, SignForm::OneMinus).unwrap();
        let got =
            resolve_prediction(&PredictionRequest::ThomDistance, &thom, &dist).unwrap();
        assert_eq!(got.xi, -0.5);
        assert_eq!(got.rule, "thom_dist_outside_corner");

        // Mismatched pairs are config errors.
        assert!(resolve_prediction(&PredictionRequest::ThomDistance, &sol, &obs).is_err());
        assert!(
            resolve_prediction(&PredictionRequest::SolenoidPlanar, &thom, &dist).is_err()
        );
    }

    #[test]
    fn spectrum_backed_predictions_use_requested_steps() {
        // Short spectra keep this test quick; only consistency is checked.
        let henon = SystemSpec::with_defaults(SystemId::Henon);
        let obs = Observable::dist_power(&[0.0, 0.0], 2.0, SignForm::OneMinus).unwrap();
        let req = PredictionRequest::DistPowerOnAttractor {
            dim: None,
            spectrum_steps: Some(20_000),
        };
        let got = resolve_prediction(&req, &henon, &obs).unwrap();
        let dim = lyapunov_spectrum(&henon, 20_000, PREDICTION_SEED).unwrap().dimension();
        assert_eq!(got.xi, analysis::predict_dist_power_on_attractor(dim, 2.0).unwrap().xi);

        let coord = Observable::CoordX;
        let req = PredictionRequest::GenericSection { spectrum_steps: Some(20_000) };
        let got = resolve_prediction(&req, &henon, &coord).unwrap();
        // Henon: one unstable direction, no neutral ones.
        let want = analysis::predict_general(1.0, dim - 1.0).unwrap();
        assert_eq!(got.xi, want.xi);

        let fixed = PredictionRequest::DistPowerOnAttractor {
            dim: Some(1.25),
            spectrum_steps: None,
        };
        let got = resolve_prediction(&fixed, &henon, &obs).unwrap();
        assert_eq!(got.neg_inv_xi, 0.625);
    }

    #[test]
    fn inference_picks_documented_rules() {
        use PredictionRequest as R;
        let thom = SystemSpec::thom();
        let sol = SystemSpec::with_defaults(SystemId::Solenoid);
        let l63 = SystemSpec::with_defaults(SystemId::Lorenz63);
        let l84 = SystemSpec::with_defaults(SystemId::Lorenz84);
        let henon = SystemSpec::with_defaults(SystemId::Henon);

        let dist2 = Observable::dist_power(&[0.5, 0.5], 1.0, SignForm::OneMinus).unwrap();
        let dist3 =
            Observable::dist_power(&[0.5, 0.5, 0.5], 1.0, SignForm::OneMinus).unwrap();
        let ps = Observable::power_sum([0.5, 0.5], 2.0, 1.0).unwrap();
        let plane = Observable::PlaneThetaXy { theta: 0.0, x0: 0.0, y0: 0.0 };
        let p2d = Observable::PlaneTheta2d { theta: 0.0 };

        assert_eq!(infer_prediction(&thom, &dist2), Some(R::ThomDistance));
        assert_eq!(infer_prediction(&thom, &ps), Some(R::ThomPowerSum));
        assert_eq!(infer_prediction(&sol, &dist3), Some(R::SolenoidDistance));
        assert_eq!(infer_prediction(&sol, &plane), Some(R::SolenoidPlanar));
        assert_eq!(
            infer_prediction(&l63, &Observable::CoordX),
            Some(R::Lorenz63Planar { beta: None, d_s_tilde: 0.0 })
        );
        assert_eq!(
            infer_prediction(&l84, &Observable::CoordX),
            Some(R::GenericSection { spectrum_steps: None })
        );
        assert_eq!(
            infer_prediction(&henon, &dist2),
            Some(R::DistPowerOnAttractor { dim: None, spectrum_steps: None })
        );
        assert_eq!(
            infer_prediction(&henon, &p2d),
            Some(R::GenericSection { spectrum_steps: None })
        );
        assert_eq!(infer_prediction(&henon, &ps), None);
    }

    #[test]
    fn config_assembly_layers_overrides() {
        let file = r#"{
            "system": { "system_id": "thom" },
            "observable": { "family": "power_sum", "center": [0.51, 0.509], "a": 2.0, "b": 1.0 },
            "N_blocklen": 77,
            "N_bmax": 500,
            "seed": 3
        }"#;
        // Profile overrides the file lengths; explicit flags beat both.
        let ov = ConfigOverrides {
            profile: Some(Profile::Fast),
            bmax: Some(600),
            seed: Some(9),
            ..ConfigOverrides::default()
        };
        let cfg = assemble_config(Some(file), &ov).unwrap();
        assert_eq!(cfg.n_blocklen, 1_000); // profile
        assert_eq!(cfg.n_bmax, 600); // flag
        assert_eq!(cfg.seed, 9); // flag
        assert!(matches!(cfg.system, SystemSpec::Thom));

        // Flags alone are enough when they pin the required fields.
        let ov = ConfigOverrides {
            system: Some("henon".into()),
            observable: Some("coord_x".into()),
            blocklen: Some(50),
            bmax: Some(300),
            ..ConfigOverrides::default()
        };
        let cfg = assemble_config(None, &ov).unwrap();
        assert_eq!(cfg.system.id(), SystemId::Henon);
        assert_eq!(cfg.observable, Observable::CoordX);

        // Missing required fields surface as config errors.
        assert!(assemble_config(None, &ConfigOverrides::default()).is_err());

        let profile: Profile = "paper".parse().unwrap();
        assert_eq!(profile.n_bmax(), 50_000);
        assert!("quick".parse::<Profile>().is_err());
    }

    #[test]
    fn observable_and_system_args_accept_json_or_names() {
        assert_eq!(system_from_arg("thom").unwrap(), SystemSpec::Thom);
        let sys =
            system_from_arg(r#"{ "system_id": "solenoid", "params": { "lambda": 0.4 } }"#)
                .unwrap();
        assert!(matches!(sys, SystemSpec::Solenoid { lambda, .. } if lambda == 0.4));
        assert!(system_from_arg("nosuch").is_err());

        assert_eq!(observable_from_arg("coord_x").unwrap(), Observable::CoordX);
        let obs = observable_from_arg(
            r#"{ "family": "dist_power", "center": [0.1, 0.2], "alpha": 1.5 }"#,
        )
        .unwrap();
        assert!(matches!(obs, Observable::DistPower { alpha, .. } if alpha == 1.5));
        // Invalid parameters are rejected at parse time.
        assert!(observable_from_arg(
            r#"{ "family": "dist_power", "center": [0.1, 0.2], "alpha": -1.0 }"#
        )
        .is_err());
    }
}
