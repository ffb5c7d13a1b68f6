//! Run configuration: one TOML file describes the plant, the controller
//! (explicit coefficients or a design request), and whatever the subcommand
//! needs (corridor, scenario, sweep). Every cross-field rule is checked here
//! so commands never touch the filesystem with a half-valid config.

use impulse_dose_core::bifurcation::{Start, SweepConfig, SweepParameter};
use impulse_dose_core::cycle::CycleSpec;
use impulse_dose_core::design::{synthesize, DesignRequest, DesignResult};
use impulse_dose_core::feasibility::Corridor;
use impulse_dose_core::model::{build_plant, GSplit, HillNonlinearity, LinearPlant, PlantParams};
use impulse_dose_core::modulation::{ModulationConfig, SaturationBounds};
use impulse_dose_core::nalgebra::Vector3;
use serde::Deserialize;

use crate::Failure;

/// Default config printed by `--print-defaults`; kept round-trippable so a
/// saved copy is immediately runnable.
pub const DEFAULT_CONFIG: &str = r#"# impulse-dose run configuration (TOML).
# Every value below is the built-in default; omitted sections fall back to
# exactly these values.

[plant]
alpha = 0.0374            # rate scale, 0 < alpha <= 0.1
v = [1.0, 4.0, 10.0]      # rate multipliers; rates are a_i = v_i * alpha
# g1 = 0.0374             # explicit gain split (give both or neither);
# g2 = 0.0559504          # the product must equal v1*v2*v3*alpha^3

[hill]
c50 = 3.2425              # concentration of half effect
gamma = 2.6677            # Hill exponent, 0 < gamma <= 10

[bounds]                  # saturation box of the modulation maps
phi_lo = 10.0             # shortest inter-dose interval (min)
phi_hi = 40.0             # longest inter-dose interval (min)
f_lo = 0.0                # smallest dose (ug); 0 allows skipped doses
f_hi = 500.0              # largest dose (ug)

# Exactly one of [design] | [modulation] for design/simulate/bifurcate.

[design]                  # synthesize coefficients for a target cycle
lambda = 300.0            # dose of the designed 1-cycle (ug)
period = 20.0             # interval of the designed 1-cycle (min)
f_slope = -0.15           # dose feedback slope dF/dybar at the cycle (<= 0)
phi_slope = 0.29          # interval feedback slope dPhi/dybar (>= 0)

# [modulation]            # ... or give the coefficients directly
# k1 = 21.5133            # interval intercept (min)
# k2 = -0.7119            # interval slope per percent effect (<= 0)
# k3 = 299.2173           # dose intercept (ug)
# k4 = 0.3682             # dose slope per percent effect (>= 0)

[corridor]                # feasibility target; optional corridor check for design
y_min = 2.0               # lowest admissible effect (percent)
y_max = 10.0              # highest admissible effect (percent)
lambda_max = 500.0        # dose budget for the sufficient condition

[cycle]                   # the (lambda, period) feasibility interrogates
lambda = 415.8412         # minimal-dose regimen for the corridor above
period = 37.3834          # longest interval whose swing still fits

[scenario]                # simulate
x0 = [0.0, 0.0, 0.0]      # initial state (nonnegative)
# bolus = 450.0           # force this first dose from x0
horizon_impulses = 60     # exactly one of horizon_impulses | horizon_time
# horizon_time = 1200.0   # minutes
dense_dt = 0.05           # dense output sample spacing (min)

[sweep]                   # bifurcate
parameter = "alpha"       # "alpha" | "gamma"
lo = 0.0274
hi = 0.04824
steps = 25
transient_impulses = 500  # impulses discarded before recording
record_impulses = 128     # impulses recorded for period detection
max_period = 32           # largest period searched (<= record_impulses/2)
tol = 1e-6                # relative tolerance for period detection
# start = [269.6, 84.6, 13.6]  # explicit start state; default: continuation
                               # from the nominal closed-loop steady state
"#;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    plant: Option<PlantSection>,
    hill: Option<HillSection>,
    bounds: Option<BoundsSection>,
    design: Option<DesignSection>,
    modulation: Option<ModulationSection>,
    corridor: Option<CorridorSection>,
    cycle: Option<CycleSection>,
    scenario: Option<ScenarioSection>,
    sweep: Option<SweepSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlantSection {
    alpha: Option<f64>,
    v: Option<[f64; 3]>,
    g1: Option<f64>,
    g2: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HillSection {
    c50: Option<f64>,
    gamma: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsSection {
    phi_lo: Option<f64>,
    phi_hi: Option<f64>,
    f_lo: Option<f64>,
    f_hi: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DesignSection {
    lambda: f64,
    period: f64,
    f_slope: f64,
    phi_slope: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModulationSection {
    k1: f64,
    k2: f64,
    k3: f64,
    k4: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorridorSection {
    y_min: f64,
    y_max: f64,
    lambda_max: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CycleSection {
    lambda: f64,
    period: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioSection {
    x0: Option<[f64; 3]>,
    bolus: Option<f64>,
    horizon_impulses: Option<usize>,
    horizon_time: Option<f64>,
    dense_dt: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    parameter: String,
    lo: f64,
    hi: f64,
    steps: usize,
    transient_impulses: Option<usize>,
    record_impulses: Option<usize>,
    max_period: Option<usize>,
    tol: Option<f64>,
    start: Option<[f64; 3]>,
}

/// The controller a command resolved from the config.
pub enum Controller {
    /// Explicit `[modulation]` coefficients.
    Explicit(ModulationConfig),
    /// Synthesized from a `[design]` request.
    Designed(Box<DesignResult>),
}

impl Controller {
    pub fn modulation(&self) -> &ModulationConfig {
        match self {
            Controller::Explicit(m) => m,
            Controller::Designed(d) => &d.modulation,
        }
    }
}

/// Scenario resolved to core types.
pub struct ResolvedScenario {
    pub scenario: impulse_dose_core::sim::Scenario,
    pub horizon: impulse_dose_core::sim::Horizon,
    pub dense_dt: f64,
}

fn config_err(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| config_err(format!("config parse error: {e}")))
    }

    pub fn plant_params(&self) -> Result<PlantParams, Failure> {
        let nominal = PlantParams::nominal();
        let section = self.plant.as_ref();
        let alpha = section.and_then(|p| p.alpha).unwrap_or(nominal.alpha);
        let v = section.and_then(|p| p.v).unwrap_or(nominal.v);
        let g_split = match section.map(|p| (p.g1, p.g2)) {
            None | Some((None, None)) => GSplit::Default,
            Some((Some(g1), Some(g2))) => GSplit::Explicit { g1, g2 },
            _ => return Err(config_err("plant: g1 and g2 must be given together")),
        };
        Ok(PlantParams { alpha, v, g_split })
    }

    pub fn plant(&self) -> Result<LinearPlant, Failure> {
        build_plant(&self.plant_params()?).map_err(|e| config_err(format!("plant: {e}")))
    }

    pub fn hill(&self) -> Result<HillNonlinearity, Failure> {
        let nominal = HillNonlinearity::nominal();
        let c50 = self.hill.as_ref().and_then(|h| h.c50).unwrap_or(nominal.c50);
        let gamma = self.hill.as_ref().and_then(|h| h.gamma).unwrap_or(nominal.gamma);
        HillNonlinearity::new(c50, gamma).map_err(|e| config_err(format!("hill: {e}")))
    }

    pub fn bounds(&self) -> SaturationBounds {
        let d = SaturationBounds::default_clinical();
        match &self.bounds {
            None => d,
            Some(b) => SaturationBounds {
                phi_lo: b.phi_lo.unwrap_or(d.phi_lo),
                phi_hi: b.phi_hi.unwrap_or(d.phi_hi),
                f_lo: b.f_lo.unwrap_or(d.f_lo),
                f_hi: b.f_hi.unwrap_or(d.f_hi),
            },
        }
    }

    /// The `[design]` request, required by `design`.
    pub fn design_request(&self) -> Result<DesignRequest, Failure> {
        if self.modulation.is_some() && self.design.is_some() {
            return Err(config_err(
                "exactly one of [modulation], [design] may be present, got both",
            ));
        }
        let d = self
            .design
            .as_ref()
            .ok_or_else(|| config_err("design: [design] section is required"))?;
        Ok(DesignRequest {
            spec: CycleSpec::new(d.lambda, d.period)
                .map_err(|e| config_err(format!("design: {e}")))?,
            f_slope: d.f_slope,
            phi_slope: d.phi_slope,
            bounds: self.bounds(),
            plant: self.plant_params()?,
            hill: self.hill()?,
        })
    }

    /// Exactly one of `[modulation]` / `[design]`, resolved to a controller.
    pub fn controller(&self) -> Result<Controller, Failure> {
        match (&self.modulation, &self.design) {
            (Some(_), Some(_)) => {
                Err(config_err("exactly one of [modulation], [design] may be present, got both"))
            }
            (None, None) => Err(config_err(
                "a controller is required: give [modulation] or [design]",
            )),
            (Some(m), None) => {
                let modulation =
                    ModulationConfig::new(m.k1, m.k2, m.k3, m.k4, self.bounds(), self.hill()?)
                        .map_err(|e| config_err(format!("modulation: {e}")))?;
                Ok(Controller::Explicit(modulation))
            }
            (None, Some(_)) => {
                let result = synthesize(&self.design_request()?)
                    .map_err(|e| config_err(format!("design: {e}")))?;
                Ok(Controller::Designed(Box::new(result)))
            }
        }
    }

    pub fn corridor(&self, hill: &HillNonlinearity) -> Result<Option<(Corridor, f64)>, Failure> {
        match &self.corridor {
            None => Ok(None),
            Some(c) => {
                let corridor = Corridor::new(c.y_min, c.y_max, hill)
                    .map_err(|e| config_err(format!("corridor: {e}")))?;
                let lambda_max = c.lambda_max.unwrap_or(500.0);
                if !(lambda_max > 0.0) {
                    return Err(config_err(format!(
                        "corridor: lambda_max must be > 0, got {lambda_max}"
                    )));
                }
                Ok(Some((corridor, lambda_max)))
            }
        }
    }

    pub fn required_corridor(&self) -> Result<(Corridor, f64), Failure> {
        self.corridor(&self.hill()?)?
            .ok_or_else(|| config_err("feasibility: [corridor] section is required"))
    }

    pub fn cycle_spec(&self) -> Result<CycleSpec, Failure> {
        let c = self
            .cycle
            .as_ref()
            .ok_or_else(|| config_err("feasibility: [cycle] section is required"))?;
        CycleSpec::new(c.lambda, c.period).map_err(|e| config_err(format!("cycle: {e}")))
    }

    pub fn scenario(&self) -> Result<ResolvedScenario, Failure> {
        use impulse_dose_core::sim::{Horizon, Scenario};
        let s = self
            .scenario
            .as_ref()
            .ok_or_else(|| config_err("simulate: [scenario] section is required"))?;
        let horizon = match (s.horizon_impulses, s.horizon_time) {
            (Some(n), None) => Horizon::Impulses(n),
            (None, Some(t)) => Horizon::Time(t),
            _ => {
                return Err(config_err(
                    "scenario: exactly one of horizon_impulses, horizon_time is required",
                ))
            }
        };
        let x0 = s.x0.unwrap_or([0.0, 0.0, 0.0]);
        Ok(ResolvedScenario {
            scenario: Scenario { x0: Vector3::new(x0[0], x0[1], x0[2]), bolus: s.bolus },
            horizon,
            dense_dt: s.dense_dt.unwrap_or(0.05),
        })
    }

    pub fn sweep_config(&self) -> Result<SweepConfig, Failure> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| config_err("bifurcate: [sweep] section is required"))?;
        let parameter = match s.parameter.as_str() {
            "alpha" => SweepParameter::Alpha,
            "gamma" => SweepParameter::Gamma,
            other => {
                return Err(config_err(format!(
                    "sweep: parameter must be \"alpha\" or \"gamma\", got \"{other}\""
                )))
            }
        };
        let mut cfg = SweepConfig::new(parameter, s.lo, s.hi, s.steps);
        if let Some(n) = s.transient_impulses {
            cfg.transient_impulses = n;
        }
        if let Some(n) = s.record_impulses {
            cfg.record_impulses = n;
        }
        if let Some(n) = s.max_period {
            cfg.max_period = n;
        }
        if let Some(t) = s.tol {
            cfg.tol = t;
        }
        if let Some(x0) = s.start {
            cfg.start = Start::State(Vector3::new(x0[0], x0[1], x0[2]));
        }
        cfg.validate().map_err(|e| config_err(format!("sweep: {e}")))?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips() {
        let cfg = FileConfig::parse(DEFAULT_CONFIG).unwrap();
        cfg.plant().unwrap();
        cfg.hill().unwrap();
        cfg.design_request().unwrap();
        cfg.controller().unwrap();
        cfg.required_corridor().unwrap();
        cfg.cycle_spec().unwrap();
        cfg.scenario().unwrap();
        cfg.sweep_config().unwrap();
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(FileConfig::parse("[plant]\nalphaa = 0.03\n").is_err());
        assert!(FileConfig::parse("[plannt]\nalpha = 0.03\n").is_err());
    }

    #[test]
    fn horizon_must_be_unambiguous() {
        let both = "[scenario]\nhorizon_impulses = 5\nhorizon_time = 100.0\n";
        assert!(FileConfig::parse(both).unwrap().scenario().is_err());
        let neither = "[scenario]\ndense_dt = 0.1\n";
        assert!(FileConfig::parse(neither).unwrap().scenario().is_err());
    }

    #[test]
    fn split_gains_must_come_in_pairs() {
        let half = "[plant]\ng1 = 0.0374\n";
        assert!(FileConfig::parse(half).unwrap().plant_params().is_err());
    }
}
