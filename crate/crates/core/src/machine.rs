//! Linear stator model in rotor coordinates.
//!
//! For a fixed electrical speed `n` the stator current obeys
//! `di/dt = A(n) i + b(u, n)` with
//!
//! ```text
//! A = omega_n * [ -r_s/x_d      n*x_q/x_d ]
//!               [ -n*x_d/x_q   -r_s/x_q   ]
//! b = omega_n * [ u_d/x_d, (u_q - n*psi_m)/x_q ]
//! ```
//!
//! The plant and the predictor share this model: the plant with the true
//! parameters, the predictor with the estimates.

use serde::{Deserialize, Serialize};

use crate::linalg::Mat2;
use crate::per_unit::{DqVector, MachineParams};

/// Fixed-step discretisation of the electrical dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    ExplicitEuler,
    #[default]
    Trapezoidal,
}

/// `MachineParams` paired with the nominal frequency that turns per-unit
/// reactances into time constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElectricalModel {
    pub params: MachineParams,
    pub omega_n: f64,
}

impl ElectricalModel {
    pub fn new(params: MachineParams, omega_n: f64) -> Self {
        ElectricalModel { params, omega_n }
    }

    /// System matrix `A(n)`, per second.
    pub fn system_matrix(&self, n: f64) -> Mat2 {
        let MachineParams { x_d, x_q, r_s, .. } = self.params;
        let w = self.omega_n;
        Mat2::new(
            -w * r_s / x_d,
            w * n * x_q / x_d,
            -w * n * x_d / x_q,
            -w * r_s / x_q,
        )
    }

    /// Input term `b(u, n)`, per second.
    pub fn input(&self, u: DqVector, n: f64) -> DqVector {
        let MachineParams { x_d, x_q, psi_m, .. } = self.params;
        let w = self.omega_n;
        DqVector::new(w * u.d / x_d, w * (u.q - n * psi_m) / x_q)
    }

    /// `di/dt` for the given current, voltage and speed.
    pub fn derivative(&self, i: DqVector, u: DqVector, n: f64) -> DqVector {
        let MachineParams { x_d, x_q, r_s, psi_m } = self.params;
        let w = self.omega_n;
        DqVector::new(
            w / x_d * (u.d - r_s * i.d + n * x_q * i.q),
            w / x_q * (u.q - r_s * i.q - n * x_d * i.d - n * psi_m),
        )
    }

    /// One step with `u` and `n` held over the interval.
    pub fn step(&self, i: DqVector, u: DqVector, n: f64, dt: f64, method: Integrator) -> DqVector {
        match method {
            Integrator::ExplicitEuler => i + self.derivative(i, u, n) * dt,
            Integrator::Trapezoidal => {
                let a = self.system_matrix(n);
                let forcing = self.input(u, n) * dt;
                trapezoidal_linear(a, i, forcing, dt)
            }
        }
    }

    /// Steady-state current for constant `u`, `n`: solves `A i = -b`.
    pub fn steady_state(&self, u: DqVector, n: f64) -> Option<DqVector> {
        self.system_matrix(n).solve(-self.input(u, n))
    }

    /// Voltage that holds the current `i` in steady state at speed `n`.
    pub fn steady_voltage(&self, i: DqVector, n: f64) -> DqVector {
        let MachineParams { x_d, x_q, r_s, psi_m } = self.params;
        DqVector::new(r_s * i.d - n * x_q * i.q, r_s * i.q + n * x_d * i.d + n * psi_m)
    }
}

/// Trapezoidal step of `x' = A x + f` where `forcing` is the integral of `f`
/// over the step, `dt/2 * (f_k + f_{k+1})`. Exact 2x2 solve of
/// `(I - dt/2 A) x_{k+1} = (I + dt/2 A) x_k + forcing`.
pub fn trapezoidal_linear(a: Mat2, x: DqVector, forcing: DqVector, dt: f64) -> DqVector {
    let h = 0.5 * dt;
    let lhs = Mat2::IDENTITY - a * h;
    let rhs = (Mat2::IDENTITY + a * h).mul_vec(x) + forcing;
    lhs.solve(rhs)
        .expect("trapezoidal system matrix is nonsingular for dt > 0, r_s >= 0, x > 0")
}
