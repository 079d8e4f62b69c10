use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{ControlMode, Scenario};
use super::metrics::{convergence_metrics, ConvergenceReport};
use crate::control::{speed_controller, CurrentController, PiState, References};
use crate::error::{Error, Result};
use crate::estimator::{Estimator, EstimatorOutput, KnownReactances, Sample};
use crate::linalg::Mat2;
use crate::machine::ElectricalModel;
use crate::per_unit::{DqVector, MachineParams};
use crate::plant::{
    apply_step_events, integrate_electrical, measure, mechanical_step, DriveTargets, EventTarget, MechanicalParams,
    PlantState,
};

/// One logged sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogRecord {
    pub t_s: f64,
    pub n_pu: f64,
    pub i_d: f64,
    pub i_q: f64,
    pub i_hat_d: f64,
    pub i_hat_q: f64,
    pub eps_d: f64,
    pub eps_q: f64,
    pub psi_m_hat: f64,
    pub r_s_hat: f64,
    pub psi_m_true: f64,
    pub r_s_true: f64,
    #[serde(rename = "L11")]
    pub l11: f64,
    #[serde(rename = "L12")]
    pub l12: f64,
    #[serde(rename = "L21")]
    pub l21: f64,
    #[serde(rename = "L22")]
    pub l22: f64,
    pub r_scalar: f64,
    #[serde(rename = "det_R")]
    pub det_r: f64,
}

impl LogRecord {
    pub const HEADER: [&'static str; 18] = [
        "t_s", "n_pu", "i_d", "i_q", "i_hat_d", "i_hat_q", "eps_d", "eps_q", "psi_m_hat", "r_s_hat", "psi_m_true",
        "r_s_true", "L11", "L12", "L21", "L22", "r_scalar", "det_R",
    ];
}

/// Full-rate estimate trajectories, kept regardless of log decimation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub n: Vec<f64>,
    pub psi_m_hat: Vec<f64>,
    pub r_s_hat: Vec<f64>,
    pub det_r: Vec<f64>,
}

/// Closed loop of plant, current control and estimator, advanced one
/// sample at a time.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub scenario: Scenario,
    pub plant: PlantState,
    pub estimator: Estimator,
    pub controller: CurrentController,
    pub targets: DriveTargets,
    speed_pi: PiState,
    mech: MechanicalParams,
    omega_n: f64,
    rng: ChaCha8Rng,
    /// Voltage applied over the current interval (computed one sample ago).
    u_applied: DqVector,
    /// Voltage and speed of the interval that just ended.
    last_interval: Option<(DqVector, f64)>,
    k: u64,
}

impl Simulation {
    /// Validates the scenario and places plant, controller and estimator at
    /// the steady state of the starting operating point.
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let sc = scenario.clone();
        let truth = sc.machine.params()?;
        let omega_n = sc.machine.base()?.omega_n;
        let dt = sc.t_samp_s;
        let gains = sc.estimator.resolve(&truth)?;
        let theta0 = sc.estimator.initial_estimate(&truth);
        let x = KnownReactances::from_params(&truth);
        let est = MachineParams { r_s: theta0.r_s, psi_m: theta0.psi_m, ..truth };

        let n0 = sc.plant.speed_pu;
        let tau0 = sc.control.load_torque_pu;
        let refs = References::from_torque(tau0, n0, &est, sc.control.i_max_pu)?;
        let i_ref = DqVector::new(refs.id_ref, refs.iq_ref);

        let mut plant = PlantState::new(truth, n0);
        plant.i = i_ref;
        let mut controller = CurrentController::tuned(&est, omega_n, dt, sc.control.u_max_pu);
        controller.pi_d.integrator = est.r_s * i_ref.d;
        controller.pi_q.integrator = est.r_s * i_ref.q;
        let u0 = ElectricalModel::new(truth, omega_n).steady_voltage(i_ref, n0);

        let mut speed_pi = PiState::new(sc.control.speed_kp, sc.control.speed_ti_s, sc.control.torque_limit_pu);
        speed_pi.integrator = tau0;

        let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
        let i_meas0 = measure(&plant, sc.plant.noise_sigma_pu, &mut rng);
        let mut estimator = Estimator::new(gains, x, omega_n, dt, theta0, i_meas0, n0, i_ref, sc.estimator.r0)?;
        estimator.reseed_after_s = sc.estimator.reseed_after_s;

        let sim = Simulation {
            targets: DriveTargets { load_torque: tau0, speed_ref: n0 },
            mech: sc.plant.mechanics(),
            scenario: sc,
            plant,
            estimator,
            controller,
            speed_pi,
            omega_n,
            rng,
            u_applied: u0,
            last_interval: None,
            k: 0,
        };
        Ok(sim)
    }

    pub fn time(&self) -> f64 {
        self.k as f64 * self.scenario.t_samp_s
    }

    pub fn step_index(&self) -> u64 {
        self.k
    }

    pub fn is_finished(&self) -> bool {
        self.k >= self.scenario.steps()
    }

    /// Voltage and starting speed of the interval just simulated, as the
    /// estimator will see them on the next sample.
    pub fn last_interval(&self) -> Option<(DqVector, f64)> {
        self.last_interval
    }

    fn check_finite(&self) -> Result<()> {
        let what = if !self.plant.i.is_finite() {
            Some("plant current")
        } else if !self.plant.n.is_finite() {
            Some("rotor speed")
        } else if !self.estimator.predictor.i_hat.is_finite() {
            Some("predicted current")
        } else if !(self.estimator.theta.psi_m.is_finite() && self.estimator.theta.r_s.is_finite()) {
            Some("parameter estimate")
        } else if !self.u_applied.is_finite() {
            Some("voltage command")
        } else {
            None
        };
        match what {
            None => Ok(()),
            Some(w) => Err(Error::Divergence {
                step: self.k,
                time_s: self.time(),
                what: format!("{w} is not finite; last valid step {}", self.k.saturating_sub(1)),
            }),
        }
    }

    /// Runs one sample: measure, estimate, control, then advance the plant
    /// over one sampling interval. Returns the record of this sample.
    pub fn step(&mut self) -> Result<LogRecord> {
        self.check_finite()?;
        let dt = self.scenario.t_samp_s;
        let t = self.time();
        let i_meas = measure(&self.plant, self.scenario.plant.noise_sigma_pu, &mut self.rng);

        let out = match self.last_interval {
            Some((u, n_prev)) => {
                self.estimator.step(&Sample { i_meas, u, n_prev, n: self.plant.n })
            }
            None => EstimatorOutput {
                i_hat: self.estimator.predictor.i_hat,
                eps: DqVector::ZERO,
                theta: self.estimator.theta,
                gain: Mat2::ZERO,
                scalar_r: self.estimator.hessian.scalar_r,
                det_r: self.estimator.hessian.matrix_r.det(),
                branch: None,
            },
        };
        self.check_finite()?;

        let record = LogRecord {
            t_s: t,
            n_pu: self.plant.n,
            i_d: i_meas.d,
            i_q: i_meas.q,
            i_hat_d: out.i_hat.d,
            i_hat_q: out.i_hat.q,
            eps_d: out.eps.d,
            eps_q: out.eps.q,
            psi_m_hat: out.theta.psi_m,
            r_s_hat: out.theta.r_s,
            psi_m_true: self.plant.params.psi_m,
            r_s_true: self.plant.params.r_s,
            l11: out.gain.m11,
            l12: out.gain.m12,
            l21: out.gain.m21,
            l22: out.gain.m22,
            r_scalar: out.scalar_r,
            det_r: out.det_r,
        };

        apply_step_events(&mut self.plant, &mut self.targets, &self.scenario.events, t, t + dt);

        let est = self.estimator.known_params();
        let speed_mode = self.scenario.control.mode == ControlMode::Speed;
        let tau_ref = if speed_mode {
            let (tau, s) = speed_controller(self.targets.speed_ref, self.plant.n, self.speed_pi, dt);
            self.speed_pi = s;
            tau
        } else {
            self.targets.load_torque
        };
        let refs = References::from_torque(tau_ref, self.targets.speed_ref, &est, self.scenario.control.i_max_pu)?;
        let u_cmd = self.controller.step(&refs, i_meas, self.plant.n, &est, dt);

        let u = self.u_applied;
        let n_start = self.plant.n;
        let p = &self.scenario.plant;
        let mut next = integrate_electrical(&self.plant, u, dt, self.omega_n, p.integrator, p.substeps);
        let tau_e = self.plant.torque();
        next.n = mechanical_step(n_start, tau_e, self.targets.load_torque, &self.mech, dt, self.targets.speed_ref);
        self.plant = next;

        self.last_interval = Some((u, n_start));
        self.u_applied = u_cmd;
        self.k += 1;
        Ok(record)
    }
}

/// Everything a finished run reports besides the streamed log.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub psi_m: ConvergenceReport,
    pub r_s: ConvergenceReport,
    pub trajectory: Trajectory,
    pub final_truth: MachineParams,
    pub steps: u64,
    pub gna_exact_steps: u64,
    pub gna_pinv_steps: u64,
}

/// Runs `scenario` to the end, handing every `log_decimation`-th record to
/// `sink`. Metrics use every sample.
pub fn run_with<F: FnMut(&LogRecord)>(scenario: &Scenario, mut sink: F) -> Result<RunSummary> {
    let mut sim = Simulation::new(scenario)?;
    let total = sim.scenario.steps();
    let dec = sim.scenario.log_decimation as u64;
    let mut tr = Trajectory::default();
    for v in [&mut tr.t, &mut tr.n, &mut tr.psi_m_hat, &mut tr.r_s_hat, &mut tr.det_r] {
        v.reserve(total as usize);
    }
    while !sim.is_finished() {
        let k = sim.step_index();
        let rec = sim.step()?;
        if k % dec == 0 {
            sink(&rec);
        }
        tr.t.push(rec.t_s);
        tr.n.push(rec.n_pu);
        tr.psi_m_hat.push(rec.psi_m_hat);
        tr.r_s_hat.push(rec.r_s_hat);
        tr.det_r.push(rec.det_r);
    }

    let sc = &sim.scenario;
    let truth = sim.plant.params;
    let start_of = |target: EventTarget| {
        sc.events.iter().find(|e| e.target == target).map_or(0.0, |e| e.time_s)
    };
    let psi_m = convergence_metrics(&tr.t, &tr.psi_m_hat, truth.psi_m, sc.band, start_of(EventTarget::PsiM))?;
    let r_s = convergence_metrics(&tr.t, &tr.r_s_hat, truth.r_s, sc.band, start_of(EventTarget::RS))?;
    Ok(RunSummary {
        psi_m,
        r_s,
        trajectory: tr,
        final_truth: truth,
        steps: total,
        gna_exact_steps: sim.estimator.exact_steps,
        gna_pinv_steps: sim.estimator.pinv_steps,
    })
}

/// Runs `scenario` and collects the decimated log.
pub fn run(scenario: &Scenario) -> Result<(Vec<LogRecord>, RunSummary)> {
    let mut log = Vec::new();
    let summary = run_with(scenario, |r| log.push(*r))?;
    Ok((log, summary))
}
