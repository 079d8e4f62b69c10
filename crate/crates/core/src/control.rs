//! Field-oriented control: MTPA current references, PI current loops with
//! decoupling feedforward, voltage limiting and an optional speed loop.
//!
//! Everything here takes the *estimated* machine parameters. The controller
//! never sees the plant's true values.

use crate::error::{Error, Result};
use crate::per_unit::{DqVector, MachineParams};

/// Saliency below which the machine is treated as surface-mounted.
const SALIENCY_EPS: f64 = 1e-6;

/// MTPA current references for a torque command.
///
/// Closed-form cube-root solution for an IPMSM; falls back to pure q-axis
/// current when `x_q - x_d` vanishes.
pub fn mtpa_reference(tau_ref: f64, est: &MachineParams) -> Result<(f64, f64)> {
    let psi = est.psi_m;
    if !(psi > 0.0) {
        return Err(Error::Infeasible(format!("MTPA needs psi_m > 0, got {psi}")));
    }
    let dx = est.x_q - est.x_d;
    if dx.abs() < SALIENCY_EPS {
        return Ok((0.0, tau_ref / psi));
    }
    let a = psi / 3.0;
    let id = (a - (a * a * a + dx * dx * tau_ref * tau_ref / (3.0 * psi)).cbrt()) / dx;
    let den = psi - dx * id;
    if den.abs() < 1e-9 {
        return Err(Error::Infeasible(format!("i_q denominator {den:e} too small")));
    }
    Ok((id, tau_ref / den))
}

/// Scales `u` radially onto the circle of radius `u_max` if it lies outside.
pub fn voltage_limit(u: DqVector, u_max: f64) -> DqVector {
    let mag = u.norm();
    if mag <= u_max {
        u
    } else {
        u * (u_max / mag)
    }
}

/// Parallel-form PI: `out = kp * (e + (1/ti) * ∫e)`, clamped to `±output_limit`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PiState {
    pub kp: f64,
    /// Integral time, seconds.
    pub ti: f64,
    pub integrator: f64,
    pub output_limit: f64,
}

impl PiState {
    pub fn new(kp: f64, ti: f64, output_limit: f64) -> Self {
        PiState { kp, ti, integrator: 0.0, output_limit }
    }
}

/// One PI sample. When the output saturates and the error pushes further
/// out, the integrator is frozen except for back-calculation that moves it
/// toward zero.
pub fn pi_step(reference: f64, meas: f64, state: PiState, dt: f64) -> (f64, PiState) {
    let e = reference - meas;
    let p = state.kp * e;
    let raw = p + state.integrator;
    let lim = state.output_limit;
    let out = raw.clamp(-lim, lim);
    let saturated = out != raw;
    let integrator = if saturated && e * raw > 0.0 {
        let back = state.integrator + (out - raw) * dt / state.ti;
        if back.abs() < state.integrator.abs() {
            back
        } else {
            state.integrator
        }
    } else {
        state.integrator + p * dt / state.ti
    };
    (out, PiState { integrator, ..state })
}

/// PI gains for one current axis by pole-zero cancellation of the stator time
/// constant, with the sampling and inverter delay lumped into
/// `t_eq = 2 * t_samp`.
pub fn tune_current_pi(x_axis: f64, r_s: f64, omega_n: f64, t_samp: f64) -> (f64, f64) {
    let t_eq = 2.0 * t_samp;
    let kp = x_axis / (omega_n * 2.0 * t_eq);
    let ti = x_axis / (r_s * omega_n);
    (kp, ti)
}

/// Current and torque references handed to the current loop.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct References {
    pub torque_ref: f64,
    pub id_ref: f64,
    pub iq_ref: f64,
    pub speed_ref: f64,
}

impl References {
    /// MTPA references for `tau_ref`, scaled back onto the current-limit
    /// circle if needed.
    pub fn from_torque(tau_ref: f64, speed_ref: f64, est: &MachineParams, i_max: f64) -> Result<Self> {
        let (mut id, mut iq) = mtpa_reference(tau_ref, est)?;
        let mag = id.hypot(iq);
        if mag > i_max {
            id *= i_max / mag;
            iq *= i_max / mag;
        }
        Ok(References { torque_ref: tau_ref, id_ref: id, iq_ref: iq, speed_ref })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentController {
    pub pi_d: PiState,
    pub pi_q: PiState,
    pub u_max: f64,
}

impl CurrentController {
    pub fn tuned(est: &MachineParams, omega_n: f64, t_samp: f64, u_max: f64) -> Self {
        let (kp_d, ti_d) = tune_current_pi(est.x_d, est.r_s, omega_n, t_samp);
        let (kp_q, ti_q) = tune_current_pi(est.x_q, est.r_s, omega_n, t_samp);
        CurrentController {
            pi_d: PiState::new(kp_d, ti_d, u_max),
            pi_q: PiState::new(kp_q, ti_q, u_max),
            u_max,
        }
    }

    /// Voltage command for the next sample.
    pub fn step(&mut self, refs: &References, i_meas: DqVector, n: f64, est: &MachineParams, dt: f64) -> DqVector {
        let (vd, pi_d) = pi_step(refs.id_ref, i_meas.d, self.pi_d, dt);
        let (vq, pi_q) = pi_step(refs.iq_ref, i_meas.q, self.pi_q, dt);
        self.pi_d = pi_d;
        self.pi_q = pi_q;
        let ff = decoupling_feedforward(refs, n, est);
        voltage_limit(DqVector::new(vd, vq) + ff, self.u_max)
    }
}

/// Cross-coupling and back-EMF compensation computed from the references.
pub fn decoupling_feedforward(refs: &References, n: f64, est: &MachineParams) -> DqVector {
    DqVector::new(
        -n * est.x_q * refs.iq_ref,
        n * est.x_d * refs.id_ref + n * est.psi_m,
    )
}

/// Speed loop producing the torque command, clamped to `±output_limit`.
pub fn speed_controller(n_ref: f64, n: f64, state: PiState, dt: f64) -> (f64, PiState) {
    pi_step(n_ref, n, state, dt)
}
