//! Offline surfaces over the speed-torque plane: eigenvalues of the stator
//! model, discrete stability of the two integrators, steady-state error
//! sensitivity, steady prediction gradients and the Hessian measures used by
//! SGA and GNA.
//!
//! Every cell is evaluated independently, so callers may compute cells in
//! any order or in parallel and get identical results.

use num_complex::Complex64;
use serde::Serialize;

use crate::control::mtpa_reference;
use crate::error::{invalid, Result};
use crate::estimator::{gradient_steady_state, steady_state_error, KnownReactances, ParameterVector, PredictionGradient};
use crate::machine::Integrator;
use crate::per_unit::{DqVector, MachineParams};

/// Rectangular grid of speeds and torques, both pu.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingGrid {
    pub speed_axis: Vec<f64>,
    pub torque_axis: Vec<f64>,
}

impl OperatingGrid {
    /// `points` evenly spaced values on each of `[n_min, n_max]` and
    /// `[tau_min, tau_max]`.
    pub fn uniform(n_range: (f64, f64), n_points: usize, tau_range: (f64, f64), tau_points: usize) -> Result<Self> {
        let g = OperatingGrid {
            speed_axis: linspace(n_range.0, n_range.1, n_points)?,
            torque_axis: linspace(tau_range.0, tau_range.1, tau_points)?,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [("speed", &self.speed_axis), ("torque", &self.torque_axis)] {
            if axis.is_empty() {
                return invalid(format!("{name} axis is empty"));
            }
            if axis.iter().any(|v| !v.is_finite()) {
                return invalid(format!("{name} axis has non-finite values"));
            }
            if axis.windows(2).any(|w| w[1] <= w[0]) {
                return invalid(format!("{name} axis must be strictly increasing"));
            }
        }
        Ok(())
    }

    /// All `(n, tau)` pairs, speed-major.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.speed_axis
            .iter()
            .flat_map(move |&n| self.torque_axis.iter().map(move |&t| (n, t)))
    }

    pub fn len(&self) -> usize {
        self.speed_axis.len() * self.torque_axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for OperatingGrid {
    /// 81 x 81 over `[-1, 1]` pu in speed and torque.
    fn default() -> Self {
        OperatingGrid::uniform((-1.0, 1.0), 81, (-1.0, 1.0), 81).expect("default grid is valid")
    }
}

fn linspace(a: f64, b: f64, k: usize) -> Result<Vec<f64>> {
    match k {
        0 => invalid("grid needs at least one point per axis"),
        1 => Ok(vec![a]),
        _ => {
            if !(b > a) {
                return invalid(format!("axis range [{a}, {b}] is empty"));
            }
            let m = (k - 1) as f64;
            Ok((0..k).map(|j| a + (b - a) * (j as f64) / m).collect())
        }
    }
}

/// Eigenvalues of the stator model, per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair {
    pub lambda1: Complex64,
    pub lambda2: Complex64,
}

/// Closed-form eigenvalues of the stator system matrix at speed `n`:
/// `λ = -(1/T_d + 1/T_q)/2 ± sqrt((1/T_d - 1/T_q)²/4 - (ω_n n)²)`.
pub fn eigenvalues(theta: &ParameterVector, x: &KnownReactances, n: f64, omega_n: f64) -> EigenPair {
    let a = omega_n * theta.r_s / x.x_d;
    let b = omega_n * theta.r_s / x.x_q;
    let mean = -(a + b) / 2.0;
    let disc = (a - b) * (a - b) / 4.0 - (omega_n * n) * (omega_n * n);
    let root = Complex64::new(disc, 0.0).sqrt();
    EigenPair { lambda1: mean + root, lambda2: mean - root }
}

/// Discrete pole for `λ` and whether it lies strictly inside the unit circle.
pub fn discrete_stability(lambda: Complex64, dt: f64, method: Integrator) -> (Complex64, bool) {
    let one = Complex64::new(1.0, 0.0);
    let z = match method {
        Integrator::ExplicitEuler => one + lambda * dt,
        Integrator::Trapezoidal => (one + lambda * (dt / 2.0)) / (one - lambda * (dt / 2.0)),
    };
    (z, z.norm() < 1.0)
}

/// How the stator current of a grid cell is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum CellLoading {
    /// MTPA currents for the cell torque, computed with the estimates.
    #[default]
    Mtpa,
    /// The torque axis is read as `i_q` and `i_d` is fixed.
    Direct { i_d: f64 },
}

/// Inputs shared by all cells of a map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapSetup {
    pub theta: ParameterVector,
    pub x: KnownReactances,
    /// True minus estimated value of each electrical parameter.
    pub delta: MachineParams,
    pub omega_n: f64,
    pub dt: f64,
    pub loading: CellLoading,
    /// Cells whose steady voltage exceeds this magnitude are absent.
    pub u_max: Option<f64>,
}

impl MapSetup {
    /// Laboratory machine reactances, `ψ̂_m = 0.895`, flux estimate 10% low.
    pub fn table_defaults() -> Self {
        let theta = ParameterVector { psi_m: 0.895, r_s: 0.04803 };
        MapSetup {
            theta,
            x: KnownReactances { x_d: 0.6392, x_q: 1.3817 },
            delta: MachineParams { x_d: 0.0, x_q: 0.0, r_s: 0.0, psi_m: 0.1 * theta.psi_m },
            omega_n: 2.0 * std::f64::consts::PI * 50.0,
            dt: 125e-6,
            loading: CellLoading::Mtpa,
            u_max: None,
        }
    }

    fn estimate(&self) -> MachineParams {
        MachineParams { x_d: self.x.x_d, x_q: self.x.x_q, r_s: self.theta.r_s, psi_m: self.theta.psi_m }
    }

    /// Steady stator current of a cell, or `None` when it cannot be reached.
    pub fn cell_current(&self, n: f64, tau: f64) -> Option<DqVector> {
        let i = match self.loading {
            CellLoading::Mtpa => {
                let (id, iq) = mtpa_reference(tau, &self.estimate()).ok()?;
                DqVector::new(id, iq)
            }
            CellLoading::Direct { i_d } => DqVector::new(i_d, tau),
        };
        if !i.is_finite() {
            return None;
        }
        if let Some(u_max) = self.u_max {
            let est = self.estimate();
            let u = DqVector::new(
                est.r_s * i.d - n * est.x_q * i.q,
                est.r_s * i.q + n * est.x_d * i.d + n * est.psi_m,
            );
            if u.norm() > u_max {
                return None;
            }
        }
        Some(i)
    }
}

/// Everything evaluated at one feasible grid cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellValues {
    pub n: f64,
    pub tau: f64,
    pub i: DqVector,
    pub eps: DqVector,
    pub grad: PredictionGradient,
    pub r_scalar: f64,
    pub det_r: f64,
    pub eig: EigenPair,
    pub z_euler: Complex64,
    pub z_trap: Complex64,
}

/// Evaluates one cell; `None` marks an infeasible operating point.
pub fn evaluate_cell(setup: &MapSetup, n: f64, tau: f64) -> Option<CellValues> {
    let i = setup.cell_current(n, tau)?;
    let eps = steady_state_error(&setup.estimate(), n, i, &setup.delta);
    let grad = gradient_steady_state(&setup.theta, &setup.x, n, i, f64::MIN_POSITIVE);
    let (r_scalar, det_r) = hessian_measures(&grad);
    let eig = eigenvalues(&setup.theta, &setup.x, n, setup.omega_n);
    let dominant = |m: Integrator| {
        let (z1, _) = discrete_stability(eig.lambda1, setup.dt, m);
        let (z2, _) = discrete_stability(eig.lambda2, setup.dt, m);
        if z1.norm() >= z2.norm() {
            z1
        } else {
            z2
        }
    };
    Some(CellValues {
        n,
        tau,
        i,
        eps,
        grad,
        r_scalar,
        det_r,
        eig,
        z_euler: dominant(Integrator::ExplicitEuler),
        z_trap: dominant(Integrator::Trapezoidal),
    })
}

/// Scalar Hessian `r = tr{ΨΨᵀ}` and `det R` of the matrix Hessian
/// `R = ΨΨᵀ`, written out in gradient entries.
pub fn hessian_measures(g: &PredictionGradient) -> (f64, f64) {
    let (p11, p12, p21, p22) = (g.psi.d, g.psi.q, g.rs.d, g.rs.q);
    let r = p11 * p11 + p12 * p12 + p21 * p21 + p22 * p22;
    let det = p11 * p11 * p22 * p22 + p12 * p12 * p21 * p21 - 2.0 * p11 * p12 * p21 * p22;
    (r, det)
}

/// Steady-state prediction error per cell; `None` where infeasible.
pub fn sensitivity_map(grid: &OperatingGrid, setup: &MapSetup) -> Vec<Option<DqVector>> {
    grid.cells().map(|(n, t)| evaluate_cell(setup, n, t).map(|c| c.eps)).collect()
}

/// Steady prediction gradient per cell.
pub fn gradient_map(grid: &OperatingGrid, setup: &MapSetup) -> Vec<Option<PredictionGradient>> {
    grid.cells().map(|(n, t)| evaluate_cell(setup, n, t).map(|c| c.grad)).collect()
}

/// `(r, det R)` per cell.
pub fn hessian_map(grid: &OperatingGrid, setup: &MapSetup) -> Vec<Option<(f64, f64)>> {
    grid.cells()
        .map(|(n, t)| evaluate_cell(setup, n, t).map(|c| (c.r_scalar, c.det_r)))
        .collect()
}

/// Which columns of a map row are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    Sensitivity,
    Gradient,
    Hessian,
    Eigen,
    All,
}

impl std::str::FromStr for Surface {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sensitivity" => Surface::Sensitivity,
            "gradient" => Surface::Gradient,
            "hessian" => Surface::Hessian,
            "eigen" => Surface::Eigen,
            "all" => Surface::All,
            _ => return invalid(format!("unknown surface '{s}' (sensitivity, gradient, hessian, eigen, all)")),
        })
    }
}

/// One CSV row. Unrequested or infeasible values are left empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct MapRow {
    pub n_pu: f64,
    pub tau_pu: f64,
    pub eps_d: Option<f64>,
    pub eps_q: Option<f64>,
    pub psi11: Option<f64>,
    pub psi12: Option<f64>,
    pub psi21: Option<f64>,
    pub psi22: Option<f64>,
    pub r_scalar: Option<f64>,
    #[serde(rename = "det_R")]
    pub det_r: Option<f64>,
    pub re_l1: Option<f64>,
    pub im_l1: Option<f64>,
    pub re_l2: Option<f64>,
    pub im_l2: Option<f64>,
    pub z_euler_mag: Option<f64>,
    pub z_trap_mag: Option<f64>,
}

impl MapRow {
    pub const HEADER: [&'static str; 16] = [
        "n_pu", "tau_pu", "eps_d", "eps_q", "psi11", "psi12", "psi21", "psi22", "r_scalar", "det_R", "re_l1",
        "im_l1", "re_l2", "im_l2", "z_euler_mag", "z_trap_mag",
    ];

    pub fn new(n: f64, tau: f64, cell: Option<&CellValues>, surface: Surface) -> Self {
        let mut row = MapRow { n_pu: n, tau_pu: tau, ..Default::default() };
        let Some(c) = cell else { return row };
        let want = |s: Surface| surface == Surface::All || surface == s;
        if want(Surface::Sensitivity) {
            row.eps_d = Some(c.eps.d);
            row.eps_q = Some(c.eps.q);
        }
        if want(Surface::Gradient) {
            row.psi11 = Some(c.grad.psi.d);
            row.psi12 = Some(c.grad.psi.q);
            row.psi21 = Some(c.grad.rs.d);
            row.psi22 = Some(c.grad.rs.q);
        }
        if want(Surface::Hessian) {
            row.r_scalar = Some(c.r_scalar);
            row.det_r = Some(c.det_r);
        }
        if want(Surface::Eigen) {
            row.re_l1 = Some(c.eig.lambda1.re);
            row.im_l1 = Some(c.eig.lambda1.im);
            row.re_l2 = Some(c.eig.lambda2.re);
            row.im_l2 = Some(c.eig.lambda2.im);
            row.z_euler_mag = Some(c.z_euler.norm());
            row.z_trap_mag = Some(c.z_trap.norm());
        }
        row
    }
}

/// Rows for the whole grid, speed-major.
pub fn map_rows(grid: &OperatingGrid, setup: &MapSetup, surface: Surface) -> Vec<MapRow> {
    grid.cells()
        .map(|(n, t)| MapRow::new(n, t, evaluate_cell(setup, n, t).as_ref(), surface))
        .collect()
}
