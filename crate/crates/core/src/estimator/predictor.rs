//! Open-loop current predictor and its parameter sensitivities.
//!
//! The predictor integrates the stator model with the estimated
//! `(psi_m, r_s)` and the known reactances, driven only by the applied
//! voltage and the measured speed. The prediction gradient `Ψ` holds
//! `dî/dθ̂`, one row per parameter:
//!
//! ```text
//! Ψ = [ dî_d/dψ̂_m   dî_q/dψ̂_m ]   = [ Ψ11 Ψ12 ]
//!     [ dî_d/dr̂_s   dî_q/dr̂_s ]     [ Ψ21 Ψ22 ]
//! ```
//!
//! The prediction-error gradient is `dε/dθ̂ = -Ψᵀ` because the measured
//! current does not depend on the estimates.

use crate::linalg::Mat2;
use crate::machine::{trapezoidal_linear, ElectricalModel, Integrator};
use crate::per_unit::{DqVector, MachineParams};

use super::ParameterVector;

/// Reactances assumed known (identified offline).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnownReactances {
    pub x_d: f64,
    pub x_q: f64,
}

impl KnownReactances {
    pub fn from_params(p: &MachineParams) -> Self {
        KnownReactances { x_d: p.x_d, x_q: p.x_q }
    }
}

/// Rows of `Ψ`: sensitivities of the predicted current to `ψ̂_m` and `r̂_s`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PredictionGradient {
    /// `(Ψ11, Ψ12) = dî/dψ̂_m`
    pub psi: DqVector,
    /// `(Ψ21, Ψ22) = dî/dr̂_s`
    pub rs: DqVector,
}

impl PredictionGradient {
    pub fn matrix(&self) -> Mat2 {
        Mat2::from_rows(self.psi, self.rs)
    }

    /// `tr{Ψ Ψᵀ}`, the sum of all four squared entries.
    pub fn trace(&self) -> f64 {
        self.psi.norm_sq() + self.rs.norm_sq()
    }

    /// `Ψ Ψᵀ` (parameter by parameter).
    pub fn outer(&self) -> Mat2 {
        let m = self.matrix();
        m * m.transpose()
    }

    pub fn is_finite(&self) -> bool {
        self.psi.is_finite() && self.rs.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PredictorState {
    pub i_hat: DqVector,
    /// Dynamic prediction gradient, integrated alongside `i_hat`.
    pub grad: PredictionGradient,
}

pub(crate) fn model_for(theta: &ParameterVector, x: &KnownReactances, omega_n: f64) -> ElectricalModel {
    ElectricalModel::new(
        MachineParams { x_d: x.x_d, x_q: x.x_q, r_s: theta.r_s, psi_m: theta.psi_m },
        omega_n,
    )
}

/// Advances only the predicted current by one trapezoidal step.
pub fn predict_current(
    i_hat: DqVector,
    u: DqVector,
    n: f64,
    theta: &ParameterVector,
    x: &KnownReactances,
    omega_n: f64,
    dt: f64,
) -> DqVector {
    model_for(theta, x, omega_n).step(i_hat, u, n, dt, Integrator::Trapezoidal)
}

/// Advances the dynamic gradient states from `i_hat_prev` to `i_hat_next`.
///
/// Both sensitivity systems share the predictor's system matrix. The `ψ̂_m`
/// row is forced by `-n` on the q-axis, the `r̂_s` row by `-î`. Forcing is
/// averaged over the step, which makes the result the exact derivative of
/// the discrete trapezoidal predictor.
pub fn gradient_dynamic_step(
    grad: PredictionGradient,
    i_hat_prev: DqVector,
    i_hat_next: DqVector,
    n: f64,
    theta: &ParameterVector,
    x: &KnownReactances,
    omega_n: f64,
    dt: f64,
) -> PredictionGradient {
    let a = model_for(theta, x, omega_n).system_matrix(n);
    let f_psi = DqVector::new(0.0, -omega_n * n / x.x_q) * dt;
    let i_avg = (i_hat_prev + i_hat_next) * 0.5;
    let f_rs = DqVector::new(-omega_n * i_avg.d / x.x_d, -omega_n * i_avg.q / x.x_q) * dt;
    PredictionGradient {
        psi: trapezoidal_linear(a, grad.psi, f_psi, dt),
        rs: trapezoidal_linear(a, grad.rs, f_rs, dt),
    }
}

/// One predictor sample: advances `î` and the dynamic gradients together.
pub fn predictor_step(
    state: &PredictorState,
    u: DqVector,
    n: f64,
    theta: &ParameterVector,
    x: &KnownReactances,
    omega_n: f64,
    dt: f64,
) -> PredictorState {
    let i_hat = predict_current(state.i_hat, u, n, theta, x, omega_n, dt);
    let grad = gradient_dynamic_step(state.grad, state.i_hat, i_hat, n, theta, x, omega_n, dt);
    PredictorState { i_hat, grad }
}

/// `ε = i_meas - î`.
pub fn prediction_error(i_meas: DqVector, i_hat: DqVector) -> DqVector {
    i_meas - i_hat
}

/// Steady-state prediction gradient at speed `n` and predicted current
/// `i_hat`, with `D = r̂_s² + n² x_d x_q` (floored at `d_floor`).
pub fn gradient_steady_state(
    theta: &ParameterVector,
    x: &KnownReactances,
    n: f64,
    i_hat: DqVector,
    d_floor: f64,
) -> PredictionGradient {
    let r = theta.r_s;
    let den = (r * r + n * n * x.x_d * x.x_q).max(d_floor);
    PredictionGradient {
        psi: DqVector::new(-n * n * x.x_q / den, -n * r / den),
        rs: DqVector::new(
            (-r * i_hat.d - n * x.x_q * i_hat.q) / den,
            (-r * i_hat.q + n * x.x_d * i_hat.d) / den,
        ),
    }
}

/// Steady-state prediction error for parameter errors
/// `δ = true - estimate` of all four electrical parameters, evaluated at the
/// true stator current `i`. Denominators use the estimates.
pub fn steady_state_error(
    est: &MachineParams,
    n: f64,
    i: DqVector,
    delta: &MachineParams,
) -> DqVector {
    let MachineParams { x_d, x_q, r_s: r, .. } = *est;
    let den = r * r + n * n * x_d * x_q;
    let ed = -(n * n * x_q / den) * delta.psi_m
        - (r * i.d + n * x_q * i.q) / den * delta.r_s
        - (n * n * x_q * i.d / den) * delta.x_d
        + (n * r * i.q / den) * delta.x_q;
    let eq = -(n * r / den) * delta.psi_m
        - (r * i.q - n * x_d * i.d) / den * delta.r_s
        - (n * r * i.d / den) * delta.x_d
        - (n * n * x_d * i.q / den) * delta.x_q;
    DqVector::new(ed, eq)
}

#[cfg(test)]
mod tests {
    use super::*;

    const W: f64 = 2.0 * std::f64::consts::PI * 50.0;
    const DT: f64 = 125e-6;

    fn x() -> KnownReactances {
        KnownReactances { x_d: 0.6392, x_q: 1.3817 }
    }

    fn theta() -> ParameterVector {
        ParameterVector { psi_m: 0.895, r_s: 0.04803 }
    }

    #[test]
    fn predictor_rests_without_excitation() {
        let mut s = PredictorState::default();
        for _ in 0..1000 {
            s = predictor_step(&s, DqVector::ZERO, 0.0, &theta(), &x(), W, DT);
        }
        assert_eq!(s.i_hat, DqVector::ZERO);
        assert_eq!(s.grad.psi, DqVector::ZERO);
    }

    #[test]
    fn psi_gradient_unforced_at_standstill() {
        let mut s = PredictorState { i_hat: DqVector::new(0.1, 0.4), ..Default::default() };
        let u = DqVector::new(0.005, 0.02);
        for _ in 0..1000 {
            s = predictor_step(&s, u, 0.0, &theta(), &x(), W, DT);
            assert_eq!(s.grad.psi, DqVector::ZERO);
        }
    }

    #[test]
    fn standstill_steady_gradient() {
        let i = DqVector::new(-0.12, 0.4);
        let g = gradient_steady_state(&theta(), &x(), 0.0, i, 1e-12);
        assert_eq!(g.psi.d, 0.0);
        assert_eq!(g.psi.q, 0.0);
        assert!((g.rs.d + i.d / 0.04803).abs() < 1e-12);
        assert!((g.rs.q + i.q / 0.04803).abs() < 1e-12);
    }

    #[test]
    fn high_speed_psi_gradient_limit() {
        let g = gradient_steady_state(&theta(), &x(), 1e4, DqVector::ZERO, 1e-12);
        assert!((g.psi.d + 1.0 / x().x_d).abs() < 1e-9);
    }

    #[test]
    fn psi12_is_odd_in_speed() {
        for n in [0.05, 0.3, 0.9] {
            let a = gradient_steady_state(&theta(), &x(), n, DqVector::ZERO, 1e-12);
            let b = gradient_steady_state(&theta(), &x(), -n, DqVector::ZERO, 1e-12);
            assert_eq!(a.psi.q, -b.psi.q);
            assert_eq!(a.psi.d, b.psi.d);
        }
    }

    #[test]
    fn underestimated_flux_gives_negative_d_error() {
        let est = MachineParams { x_d: 0.6392, x_q: 1.3817, r_s: 0.04803, psi_m: 0.8 };
        let delta = MachineParams { x_d: 0.0, x_q: 0.0, r_s: 0.0, psi_m: 0.08 };
        for n in [0.1, 0.4, 1.0] {
            assert!(steady_state_error(&est, n, DqVector::new(-0.1, 0.4), &delta).d < 0.0);
        }
    }
}
