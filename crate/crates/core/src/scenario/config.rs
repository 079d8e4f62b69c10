use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::estimator::{
    table_gammas, Algorithm, GainConfig, GradientMode, ParameterBox, ParameterVector, PerParameter, SgaTrace,
};
use crate::machine::Integrator;
use crate::per_unit::{MachineConfig, MachineParams};
use crate::plant::{validate_events, MechanicalParams, SpeedMode, StepEvent};

/// A complete closed-loop run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub duration_s: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_t_samp")]
    pub t_samp_s: f64,
    #[serde(default = "default_decimation")]
    pub log_decimation: u32,
    /// Relative half-width of the convergence band.
    #[serde(default = "default_band")]
    pub band: f64,
    #[serde(default)]
    pub machine: MachineConfig,
    #[serde(default)]
    pub plant: PlantConfig,
    #[serde(default)]
    pub control: ControlConfig,
    pub estimator: EstimatorConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<StepEvent>,
}

fn default_t_samp() -> f64 {
    125e-6
}

fn default_decimation() -> u32 {
    8
}

fn default_band() -> f64 {
    0.01
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    /// Initial (and, in prescribed mode, imposed) electrical speed.
    #[serde(default)]
    pub speed_pu: f64,
    #[serde(default)]
    pub noise_sigma_pu: f64,
    #[serde(default)]
    pub speed_mode: SpeedMode,
    #[serde(rename = "inertia_H_s", default = "default_inertia")]
    pub inertia_h_s: f64,
    #[serde(default = "default_substeps")]
    pub substeps: u32,
    #[serde(default)]
    pub integrator: Integrator,
}

fn default_inertia() -> f64 {
    0.5
}

fn default_substeps() -> u32 {
    1
}

impl Default for PlantConfig {
    fn default() -> Self {
        PlantConfig {
            speed_pu: 0.0,
            noise_sigma_pu: 0.0,
            speed_mode: SpeedMode::Prescribed,
            inertia_h_s: default_inertia(),
            substeps: default_substeps(),
            integrator: Integrator::Trapezoidal,
        }
    }
}

impl PlantConfig {
    pub fn mechanics(&self) -> MechanicalParams {
        MechanicalParams { inertia_h: self.inertia_h_s, speed_mode: self.speed_mode }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    /// The load torque is also the torque command; speed is imposed.
    #[default]
    Torque,
    /// A speed loop produces the torque command against the load torque.
    Speed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlConfig {
    #[serde(default)]
    pub mode: ControlMode,
    #[serde(default)]
    pub load_torque_pu: f64,
    #[serde(default = "default_limit")]
    pub u_max_pu: f64,
    #[serde(default = "default_limit")]
    pub i_max_pu: f64,
    #[serde(default = "default_speed_kp")]
    pub speed_kp: f64,
    #[serde(default = "default_speed_ti")]
    pub speed_ti_s: f64,
    #[serde(default = "default_torque_limit")]
    pub torque_limit_pu: f64,
}

fn default_limit() -> f64 {
    1.5
}

fn default_speed_kp() -> f64 {
    10.0
}

fn default_speed_ti() -> f64 {
    0.4
}

fn default_torque_limit() -> f64 {
    1.0
}

impl Default for ControlConfig {
    fn default() -> Self {
        ControlConfig {
            mode: ControlMode::Torque,
            load_torque_pu: 0.0,
            u_max_pu: default_limit(),
            i_max_pu: default_limit(),
            speed_kp: default_speed_kp(),
            speed_ti_s: default_speed_ti(),
            torque_limit_pu: default_torque_limit(),
        }
    }
}

/// Estimator settings as written in a scenario file. Unset gains fall back
/// to the default gain table for the chosen algorithm, unset bounds to ±30%
/// around the initial estimate, and the initial estimate to the machine's
/// nominal values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    pub algorithm: Algorithm,
    #[serde(rename = "gamma_L", default, skip_serializing_if = "Option::is_none")]
    pub gamma_l: Option<PerParameter<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_r: Option<PerParameter<f64>>,
    #[serde(default = "default_gradient_mode")]
    pub gradient_mode: PerParameter<GradientMode>,
    #[serde(default)]
    pub sga_trace: SgaTrace,
    #[serde(default = "yes")]
    pub scheduling: bool,
    #[serde(default = "default_n_lim1")]
    pub n_lim1_pu: f64,
    #[serde(default = "default_n_lim2")]
    pub n_lim2_pu: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<ParameterBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<ParameterVector>,
    /// Seeds the Hessian with `r0` (and `R0 = r0 I / 2`) instead of the
    /// steady gradient at the starting operating point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub det_r_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pinv_tol: Option<f64>,
    #[serde(default = "default_reseed")]
    pub reseed_after_s: f64,
}

fn default_gradient_mode() -> PerParameter<GradientMode> {
    PerParameter { psi_m: GradientMode::SteadyState, r_s: GradientMode::SteadyState }
}

fn yes() -> bool {
    true
}

fn default_n_lim1() -> f64 {
    0.1
}

fn default_n_lim2() -> f64 {
    0.01
}

fn default_reseed() -> f64 {
    0.5
}

impl EstimatorConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        EstimatorConfig {
            algorithm,
            gamma_l: None,
            gamma_r: None,
            gradient_mode: default_gradient_mode(),
            sga_trace: SgaTrace::Full,
            scheduling: true,
            n_lim1_pu: default_n_lim1(),
            n_lim2_pu: default_n_lim2(),
            bounds: None,
            initial: None,
            r0: None,
            r_floor: None,
            det_r_floor: None,
            i_floor: None,
            pinv_tol: None,
            reseed_after_s: default_reseed(),
        }
    }

    /// Initial estimate, defaulting to the nominal machine.
    pub fn initial_estimate(&self, nominal: &MachineParams) -> ParameterVector {
        self.initial
            .unwrap_or(ParameterVector { psi_m: nominal.psi_m, r_s: nominal.r_s })
    }

    /// Fills every unset value from the defaults.
    pub fn resolve(&self, nominal: &MachineParams) -> Result<GainConfig> {
        let mut cfg = GainConfig::table_defaults(self.algorithm);
        let (gl, gr) = table_gammas(self.algorithm);
        cfg.gamma_l = self.gamma_l.unwrap_or(gl);
        cfg.gamma_r = self.gamma_r.unwrap_or(gr);
        cfg.gradient_mode = self.gradient_mode;
        cfg.sga_trace = self.sga_trace;
        cfg.scheduling = self.scheduling;
        cfg.n_lim1 = self.n_lim1_pu;
        cfg.n_lim2 = self.n_lim2_pu;
        cfg.bounds = self
            .bounds
            .unwrap_or_else(|| ParameterBox::around(&self.initial_estimate(nominal), 0.3));
        cfg.r_floor = self.r_floor.unwrap_or(cfg.r_floor);
        cfg.det_r_floor = self.det_r_floor.unwrap_or(cfg.det_r_floor);
        cfg.i_floor = self.i_floor.unwrap_or(cfg.i_floor);
        cfg.pinv_tol = self.pinv_tol.unwrap_or(cfg.pinv_tol);
        cfg.validate()?;
        if !(self.reseed_after_s >= 0.0) {
            return invalid("reseed_after_s must be non-negative");
        }
        Ok(cfg)
    }
}

impl Scenario {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(s)?;
        Ok(sc)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Number of loop samples.
    pub fn steps(&self) -> u64 {
        (self.duration_s / self.t_samp_s).round() as u64
    }

    /// Full consistency check. `run` calls this first.
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return invalid(format!("duration_s must be positive, got {}", self.duration_s));
        }
        if !(self.t_samp_s.is_finite() && self.t_samp_s > 0.0) {
            return invalid(format!("t_samp_s must be positive, got {}", self.t_samp_s));
        }
        if self.steps() == 0 {
            return invalid("duration is shorter than one sample");
        }
        if self.log_decimation == 0 {
            return invalid("log_decimation must be at least 1");
        }
        if !(self.band.is_finite() && self.band > 0.0) {
            return invalid(format!("band must be positive, got {}", self.band));
        }
        let params = self.machine.params()?;
        self.machine.base()?;

        let p = &self.plant;
        if !p.speed_pu.is_finite() {
            return invalid("plant.speed_pu must be finite");
        }
        if !(p.noise_sigma_pu.is_finite() && p.noise_sigma_pu >= 0.0) {
            return invalid(format!("noise_sigma_pu must be >= 0, got {}", p.noise_sigma_pu));
        }
        if p.substeps == 0 {
            return invalid("plant.substeps must be at least 1");
        }
        p.mechanics().validate()?;

        let c = &self.control;
        for (name, v) in [("u_max_pu", c.u_max_pu), ("i_max_pu", c.i_max_pu), ("torque_limit_pu", c.torque_limit_pu)] {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("control.{name} must be positive, got {v}"));
            }
        }
        if !c.load_torque_pu.is_finite() {
            return invalid("control.load_torque_pu must be finite");
        }
        if c.mode == ControlMode::Speed {
            if p.speed_mode != SpeedMode::Dynamic {
                return invalid("speed control needs plant.speed_mode = \"dynamic\"");
            }
            if !(c.speed_kp > 0.0 && c.speed_ti_s > 0.0) {
                return invalid("speed_kp and speed_ti_s must be positive");
            }
        }

        let gains = self.estimator.resolve(&params)?;
        let theta0 = self.estimator.initial_estimate(&params);
        if !gains.bounds.contains(&theta0) {
            return invalid(format!("initial estimate {theta0:?} lies outside the parameter box"));
        }
        if let Some(r0) = self.estimator.r0 {
            if !(r0.is_finite() && r0 > 0.0) {
                return invalid(format!("estimator.r0 must be positive, got {r0}"));
            }
        }

        validate_events(&params, &self.events)?;
        let last_sample = (self.steps() - 1) as f64 * self.t_samp_s;
        if let Some(ev) = self.events.iter().find(|e| e.time_s > last_sample) {
            return invalid(format!("event at t={} s lies after the last sample of the run", ev.time_s));
        }
        Ok(())
    }
}
