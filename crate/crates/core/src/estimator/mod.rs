//! Recursive prediction-error estimation of magnet flux linkage and stator
//! resistance.
//!
//! Each sample runs, in order: predictor step, prediction error, gradient,
//! Hessian update, gain, speed scheduling, parameter update and projection
//! into the admissible box. The error is always formed with the estimate of
//! the previous sample.

mod gains;
mod predictor;

pub use gains::{
    gain_schedule, gamma_from_t0, gna_gain_exact, gna_update, hessian_gamma, phyint_gain, phyint_update,
    project_parameters, pseudoinverse_2x2, sga_update, GnaBranch, HessianState, Update,
};
pub use predictor::{
    gradient_dynamic_step, gradient_steady_state, predict_current, prediction_error, predictor_step,
    steady_state_error, KnownReactances, PredictionGradient, PredictorState,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::Mat2;
use crate::per_unit::{DqVector, MachineParams};

/// Estimated parameters `θ̂ = [ψ̂_m, r̂_s]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterVector {
    pub psi_m: f64,
    pub r_s: f64,
}

/// Admissible parameter box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterBox {
    pub psi_m_min: f64,
    pub psi_m_max: f64,
    pub r_s_min: f64,
    pub r_s_max: f64,
}

impl ParameterBox {
    /// `±fraction` around `nominal`.
    pub fn around(nominal: &ParameterVector, fraction: f64) -> Self {
        ParameterBox {
            psi_m_min: nominal.psi_m * (1.0 - fraction),
            psi_m_max: nominal.psi_m * (1.0 + fraction),
            r_s_min: nominal.r_s * (1.0 - fraction),
            r_s_max: nominal.r_s * (1.0 + fraction),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |a: f64, b: f64| a.is_finite() && b.is_finite() && a < b;
        if !ok(self.psi_m_min, self.psi_m_max) || !ok(self.r_s_min, self.r_s_max) {
            return invalid(format!("parameter box must have min < max on both axes: {self:?}"));
        }
        if self.r_s_min <= 0.0 {
            return invalid("r_s lower bound must be positive");
        }
        Ok(())
    }

    pub fn contains(&self, t: &ParameterVector) -> bool {
        (self.psi_m_min..=self.psi_m_max).contains(&t.psi_m) && (self.r_s_min..=self.r_s_max).contains(&t.r_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Sga,
    Gna,
    #[serde(rename = "phyint")]
    PhyInt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    Dynamic,
    #[default]
    SteadyState,
}

/// Which squared gradients normalise the SGA step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SgaTrace {
    /// Full trace of `ΨΨᵀ` for both rows.
    #[default]
    Full,
    /// Each row normalised by its own squared gradient.
    PerParameter,
    /// Each gain entry normalised by its own squared gradient entry.
    PerElement,
}

/// A value per estimated parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerParameter<T> {
    pub psi_m: T,
    pub r_s: T,
}

/// Resolved gain settings used by the update functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainConfig {
    pub algorithm: Algorithm,
    pub gamma_l: PerParameter<f64>,
    pub gamma_r: PerParameter<f64>,
    pub gradient_mode: PerParameter<GradientMode>,
    pub sga_trace: SgaTrace,
    pub scheduling: bool,
    pub n_lim1: f64,
    pub n_lim2: f64,
    pub r_floor: f64,
    pub det_r_floor: f64,
    pub i_floor: f64,
    pub d_floor: f64,
    pub pinv_tol: f64,
    pub bounds: ParameterBox,
}

impl GainConfig {
    /// Forgetting factors of the default gain table for `algorithm`,
    /// scheduler at 0.1 / 0.01 pu, box ±30% around the nominal machine.
    pub fn table_defaults(algorithm: Algorithm) -> Self {
        let (gamma_l, gamma_r) = table_gammas(algorithm);
        let nominal = ParameterVector { psi_m: 0.895, r_s: 0.04803 };
        GainConfig {
            algorithm,
            gamma_l,
            gamma_r,
            gradient_mode: PerParameter { psi_m: GradientMode::SteadyState, r_s: GradientMode::SteadyState },
            sga_trace: SgaTrace::Full,
            scheduling: true,
            n_lim1: 0.1,
            n_lim2: 0.01,
            r_floor: 1e-6,
            det_r_floor: 1e-10,
            i_floor: 0.02,
            d_floor: 1e-12,
            pinv_tol: 1e-9,
            bounds: ParameterBox::around(&nominal, 0.3),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, g) in [
            ("gamma_L.psi_m", self.gamma_l.psi_m),
            ("gamma_L.r_s", self.gamma_l.r_s),
            ("gamma_r.psi_m", self.gamma_r.psi_m),
            ("gamma_r.r_s", self.gamma_r.r_s),
        ] {
            if !(g > 0.0 && g <= 1.0) {
                return invalid(format!("{name} must lie in (0, 1], got {g}"));
            }
        }
        if self.n_lim1.abs() < self.n_lim2.abs() {
            return invalid(format!(
                "scheduler needs |n_lim1| >= |n_lim2|, got {} and {}",
                self.n_lim1, self.n_lim2
            ));
        }
        for (name, f) in [
            ("r_floor", self.r_floor),
            ("det_r_floor", self.det_r_floor),
            ("d_floor", self.d_floor),
            ("pinv_tol", self.pinv_tol),
        ] {
            if !(f > 0.0 && f.is_finite()) {
                return invalid(format!("{name} must be positive, got {f}"));
            }
        }
        if !(self.i_floor >= 0.0) {
            return invalid("i_floor must be non-negative");
        }
        self.bounds.validate()
    }
}

/// `(gamma_L, gamma_r)` from the default gain table.
pub fn table_gammas(algorithm: Algorithm) -> (PerParameter<f64>, PerParameter<f64>) {
    match algorithm {
        Algorithm::Sga | Algorithm::PhyInt => (
            PerParameter { psi_m: 3.25e-4, r_s: 6.25e-5 },
            PerParameter { psi_m: 6.25e-4, r_s: 6.25e-4 },
        ),
        Algorithm::Gna => (
            PerParameter { psi_m: 3.25e-4, r_s: 7.5e-6 },
            PerParameter { psi_m: 6.25e-4, r_s: 6.25e-5 },
        ),
    }
}

/// Everything that arrives at the estimator in one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub i_meas: DqVector,
    /// Voltage applied over the interval that just ended.
    pub u: DqVector,
    /// Speed over the interval that just ended.
    pub n_prev: f64,
    /// Speed now.
    pub n: f64,
}

/// Per-sample output for logging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOutput {
    pub i_hat: DqVector,
    pub eps: DqVector,
    pub theta: ParameterVector,
    pub gain: Mat2,
    pub scalar_r: f64,
    pub det_r: f64,
    pub branch: Option<GnaBranch>,
}

/// Online estimator state.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimator {
    pub cfg: GainConfig,
    pub x: KnownReactances,
    pub omega_n: f64,
    pub dt: f64,
    pub theta: ParameterVector,
    pub predictor: PredictorState,
    pub hessian: HessianState,
    /// Dead time after which a re-enabled scheduler row re-seeds the
    /// predictor and gradient states, seconds.
    pub reseed_after_s: f64,
    disabled_for: [f64; 2],
    pub exact_steps: u64,
    pub pinv_steps: u64,
}

impl Estimator {
    /// Starts the estimator at `theta0` with the predictor at `i0`. The
    /// Hessian is seeded from the steady gradient at the expected operating
    /// point `(n0, i_op)`, or from `r0 * I / 2` when `r0` is given.
    pub fn new(
        cfg: GainConfig,
        x: KnownReactances,
        omega_n: f64,
        dt: f64,
        theta0: ParameterVector,
        i0: DqVector,
        n0: f64,
        i_op: DqVector,
        r0: Option<f64>,
    ) -> Result<Self> {
        cfg.validate()?;
        if !cfg.bounds.contains(&theta0) {
            return invalid(format!("initial estimate {theta0:?} lies outside the parameter box"));
        }
        let op_grad = gradient_steady_state(&theta0, &x, n0, i_op, cfg.d_floor);
        let hessian = match r0 {
            Some(r0) if r0 > 0.0 => HessianState::scaled_identity(r0),
            Some(r0) => return invalid(format!("r0 must be positive, got {r0}")),
            None => HessianState::from_gradient(&op_grad, 1.0),
        };
        let grad = gradient_steady_state(&theta0, &x, n0, i0, cfg.d_floor);
        Ok(Estimator {
            cfg,
            x,
            omega_n,
            dt,
            theta: theta0,
            predictor: PredictorState { i_hat: i0, grad },
            hessian,
            reseed_after_s: 0.5,
            disabled_for: [0.0; 2],
            exact_steps: 0,
            pinv_steps: 0,
        })
    }

    pub fn known_params(&self) -> MachineParams {
        MachineParams { x_d: self.x.x_d, x_q: self.x.x_q, r_s: self.theta.r_s, psi_m: self.theta.psi_m }
    }

    fn reseed(&mut self, u: DqVector, n: f64) {
        let model = predictor::model_for(&self.theta, &self.x, self.omega_n);
        if let Some(i_ss) = model.steady_state(u, n) {
            self.predictor.i_hat = i_ss;
        }
        self.predictor.grad = gradient_steady_state(&self.theta, &self.x, n, self.predictor.i_hat, self.cfg.d_floor);
    }

    pub fn step(&mut self, s: &Sample) -> EstimatorOutput {
        let (row1, row2) = gains::row_enables(s.n, &self.cfg);
        let mut reseed = false;
        for (k, on) in [row1, row2].into_iter().enumerate() {
            if on {
                if self.disabled_for[k] >= self.reseed_after_s {
                    reseed = true;
                }
                self.disabled_for[k] = 0.0;
            } else {
                self.disabled_for[k] += self.dt;
            }
        }

        self.predictor = predictor_step(&self.predictor, s.u, s.n_prev, &self.theta, &self.x, self.omega_n, self.dt);
        if reseed {
            self.reseed(s.u, s.n_prev);
        }
        let eps = prediction_error(s.i_meas, self.predictor.i_hat);

        let steady = gradient_steady_state(&self.theta, &self.x, s.n, self.predictor.i_hat, self.cfg.d_floor);
        let dynamic = self.predictor.grad;
        let grad = PredictionGradient {
            psi: match self.cfg.gradient_mode.psi_m {
                GradientMode::SteadyState => steady.psi,
                GradientMode::Dynamic => dynamic.psi,
            },
            rs: match self.cfg.gradient_mode.r_s {
                GradientMode::SteadyState => steady.rs,
                GradientMode::Dynamic => dynamic.rs,
            },
        };

        let upd = match self.cfg.algorithm {
            Algorithm::Sga => sga_update(self.theta, eps, &grad, &self.hessian, s.n, &self.cfg),
            Algorithm::Gna => gna_update(self.theta, eps, &grad, &self.hessian, s.n, &self.cfg),
            Algorithm::PhyInt => {
                let mut u = phyint_update(self.theta, eps, s.n, self.predictor.i_hat, &self.x, &self.cfg);
                u.hessian = self.hessian;
                u
            }
        };
        match upd.branch {
            Some(GnaBranch::Exact) => self.exact_steps += 1,
            Some(GnaBranch::Pseudoinverse) => self.pinv_steps += 1,
            None => {}
        }
        self.theta = upd.theta;
        self.hessian = upd.hessian;
        EstimatorOutput {
            i_hat: self.predictor.i_hat,
            eps,
            theta: self.theta,
            gain: upd.gain,
            scalar_r: self.hessian.scalar_r,
            det_r: self.hessian.matrix_r.det(),
            branch: upd.branch,
        }
    }
}
