//! The simulated machine: stator dynamics with the true (possibly stepped)
//! parameters, torque, shaft dynamics, an ideal averaging inverter and a
//! noisy current sensor.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::machine::{ElectricalModel, Integrator};
use crate::per_unit::{wrap_angle, DqVector, MachineParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState {
    pub i: DqVector,
    /// Electrical speed, pu.
    pub n: f64,
    /// Electrical angle in `[0, 2π)`.
    pub theta: f64,
    /// True machine parameters.
    pub params: MachineParams,
}

impl PlantState {
    pub fn new(params: MachineParams, n: f64) -> Self {
        PlantState { i: DqVector::ZERO, n, theta: 0.0, params }
    }

    pub fn torque(&self) -> f64 {
        torque(&self.params, self.i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedMode {
    /// Shaft speed is imposed by the load machine.
    #[default]
    Prescribed,
    /// Shaft speed follows the torque balance.
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MechanicalParams {
    /// Inertia constant `H`, seconds.
    pub inertia_h: f64,
    pub speed_mode: SpeedMode,
}

impl MechanicalParams {
    pub fn validate(&self) -> Result<()> {
        if self.speed_mode == SpeedMode::Dynamic && !(self.inertia_h.is_finite() && self.inertia_h > 0.0) {
            return invalid(format!("inertia_H_s must be positive in dynamic speed mode, got {}", self.inertia_h));
        }
        Ok(())
    }
}

/// Electromagnetic torque, pu.
pub fn torque(params: &MachineParams, i: DqVector) -> f64 {
    params.psi_m * i.q + (params.x_d - params.x_q) * i.d * i.q
}

/// Stator current derivative, per second.
pub fn electrical_derivative(state: &PlantState, u: DqVector, omega_n: f64) -> DqVector {
    ElectricalModel::new(state.params, omega_n).derivative(state.i, u, state.n)
}

/// Advances the shaft speed by one step. In prescribed mode the scheduled
/// speed is returned unchanged.
pub fn mechanical_step(
    n: f64,
    tau_e: f64,
    tau_l: f64,
    mech: &MechanicalParams,
    dt: f64,
    scheduled: f64,
) -> f64 {
    match mech.speed_mode {
        SpeedMode::Prescribed => scheduled,
        SpeedMode::Dynamic => n + dt * (tau_e - tau_l) / (2.0 * mech.inertia_h),
    }
}

/// Advances the stator current over `dt` with `u` and the present speed
/// held constant, in `substeps` equal sub-intervals. The angle advances with
/// the same speed.
pub fn integrate_electrical(
    state: &PlantState,
    u: DqVector,
    dt: f64,
    omega_n: f64,
    method: Integrator,
    substeps: u32,
) -> PlantState {
    let model = ElectricalModel::new(state.params, omega_n);
    let k = substeps.max(1);
    let h = dt / k as f64;
    let mut i = state.i;
    for _ in 0..k {
        i = model.step(i, u, state.n, h, method);
    }
    PlantState {
        i,
        theta: wrap_angle(state.theta + omega_n * state.n * dt),
        ..*state
    }
}

/// Sampled stator current with additive Gaussian noise per axis.
pub fn measure<R: Rng + ?Sized>(state: &PlantState, noise_sigma: f64, rng: &mut R) -> DqVector {
    if noise_sigma <= 0.0 {
        return state.i;
    }
    let normal = Normal::new(0.0, noise_sigma).expect("noise sigma is finite and positive");
    DqVector::new(state.i.d + normal.sample(rng), state.i.q + normal.sample(rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventTarget {
    PsiM,
    RS,
    XD,
    XQ,
    LoadTorque,
    SpeedRef,
}

/// A scheduled change of a true parameter or of an operating target.
/// Exactly one of `factor` (relative) or `value` (absolute pu) is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepEvent {
    pub time_s: f64,
    pub target: EventTarget,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

impl StepEvent {
    pub fn factor(time_s: f64, target: EventTarget, factor: f64) -> Self {
        StepEvent { time_s, target, factor: Some(factor), value: None }
    }

    pub fn value(time_s: f64, target: EventTarget, value: f64) -> Self {
        StepEvent { time_s, target, factor: None, value: Some(value) }
    }

    fn apply_to(&self, old: f64) -> f64 {
        match (self.factor, self.value) {
            (Some(f), _) => old * f,
            (None, Some(v)) => v,
            (None, None) => old,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.time_s.is_finite() && self.time_s >= 0.0) {
            return invalid(format!("event time must be >= 0, got {}", self.time_s));
        }
        match (self.factor, self.value) {
            (Some(f), None) if f.is_finite() => Ok(()),
            (None, Some(v)) if v.is_finite() => Ok(()),
            _ => invalid("event needs exactly one finite 'factor' or 'value'"),
        }
    }
}

/// Operating targets that events may change besides the machine parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DriveTargets {
    pub load_torque: f64,
    pub speed_ref: f64,
}

/// Applies every event with `time_s` in `[t_from, t_to)`. Returns how many
/// were applied. The estimator is never told.
pub fn apply_step_events(
    state: &mut PlantState,
    targets: &mut DriveTargets,
    events: &[StepEvent],
    t_from: f64,
    t_to: f64,
) -> usize {
    let mut applied = 0;
    for ev in events.iter().filter(|e| e.time_s >= t_from && e.time_s < t_to) {
        let p = &mut state.params;
        match ev.target {
            EventTarget::PsiM => p.psi_m = ev.apply_to(p.psi_m),
            EventTarget::RS => p.r_s = ev.apply_to(p.r_s),
            EventTarget::XD => p.x_d = ev.apply_to(p.x_d),
            EventTarget::XQ => p.x_q = ev.apply_to(p.x_q),
            EventTarget::LoadTorque => targets.load_torque = ev.apply_to(targets.load_torque),
            EventTarget::SpeedRef => targets.speed_ref = ev.apply_to(targets.speed_ref),
        }
        applied += 1;
    }
    applied
}

/// Checks that an event list is sorted and keeps the parameters valid when
/// replayed from `initial`.
pub fn validate_events(initial: &MachineParams, events: &[StepEvent]) -> Result<()> {
    let mut state = PlantState::new(*initial, 0.0);
    let mut targets = DriveTargets::default();
    let mut last = 0.0;
    for ev in events {
        ev.validate()?;
        if ev.time_s < last {
            return invalid("events must be sorted by time");
        }
        last = ev.time_s;
        apply_step_events(&mut state, &mut targets, std::slice::from_ref(ev), ev.time_s, f64::INFINITY);
        if let Err(e) = state.params.validate() {
            return invalid(format!("event at t={} s yields invalid parameters: {e}", ev.time_s));
        }
    }
    Ok(())
}
