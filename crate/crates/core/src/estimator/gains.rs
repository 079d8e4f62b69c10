//! Gain computation: stochastic gradient (SGA), Gauss-Newton (GNA) and the
//! physically interpretative gains (PhyInt), plus the speed scheduler and
//! the parameter projection applied after every update.

use crate::linalg::Mat2;
use crate::per_unit::DqVector;

use super::predictor::{KnownReactances, PredictionGradient};
use super::{GainConfig, ParameterBox, ParameterVector, SgaTrace};
use crate::error::{invalid, Result};

/// Hessian approximations. `scalar_r` (or `row_r`, `element_r` in the
/// narrower SGA modes) feeds SGA; `matrix_r` feeds GNA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianState {
    pub scalar_r: f64,
    pub row_r: [f64; 2],
    /// Squared gradient entries, filtered one by one.
    pub element_r: Mat2,
    pub matrix_r: Mat2,
}

impl HessianState {
    /// Hessian matching the steady gradient `grad`, with `fallback` for an
    /// unexcited operating point.
    pub fn from_gradient(grad: &PredictionGradient, fallback: f64) -> Self {
        let tr = grad.trace();
        let or_fallback = |v: f64| if v > 0.0 { v } else { fallback };
        HessianState {
            scalar_r: or_fallback(tr),
            row_r: [or_fallback(grad.psi.norm_sq()), or_fallback(grad.rs.norm_sq())],
            element_r: squared(&grad.matrix()),
            matrix_r: grad.outer(),
        }
    }

    /// Scalar `r0` with `R0 = r0 * I / 2`.
    pub fn scaled_identity(r0: f64) -> Self {
        HessianState {
            scalar_r: r0,
            row_r: [r0, r0],
            element_r: Mat2::new(r0, r0, r0, r0),
            matrix_r: Mat2::IDENTITY * (0.5 * r0),
        }
    }
}

fn squared(m: &Mat2) -> Mat2 {
    Mat2::new(m.m11 * m.m11, m.m12 * m.m12, m.m21 * m.m21, m.m22 * m.m22)
}

/// Which inverse produced the GNA gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GnaBranch {
    Exact,
    Pseudoinverse,
}

/// Result of one gain/update step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Update {
    pub theta: ParameterVector,
    pub hessian: HessianState,
    /// Gain after scheduling, as applied.
    pub gain: Mat2,
    pub branch: Option<GnaBranch>,
}

/// Forgetting factor from the sample time and the integral time constant.
pub fn gamma_from_t0(t_samp: f64, t0: f64) -> Result<f64> {
    if !(t_samp > 0.0 && t_samp.is_finite()) {
        return invalid(format!("sample time must be positive, got {t_samp}"));
    }
    if !(t0 >= t_samp) {
        return invalid(format!("T0 = {t0} s is shorter than the sample time {t_samp} s"));
    }
    Ok(t_samp / t0)
}

/// Componentwise clamp into the admissible box.
pub fn project_parameters(theta: ParameterVector, b: &ParameterBox) -> ParameterVector {
    ParameterVector {
        psi_m: theta.psi_m.clamp(b.psi_m_min, b.psi_m_max),
        r_s: theta.r_s.clamp(b.r_s_min, b.r_s_max),
    }
}

/// Row 1 (`ψ̂_m`) passes only for `|n| > |n_lim1|`, row 2 (`r̂_s`) only for
/// `|n| < |n_lim2|`.
pub fn gain_schedule(gain: Mat2, n: f64, cfg: &GainConfig) -> Mat2 {
    if !cfg.scheduling {
        return gain;
    }
    let (r1, r2) = row_enables(n, cfg);
    Mat2::from_rows(
        if r1 { gain.row1() } else { DqVector::ZERO },
        if r2 { gain.row2() } else { DqVector::ZERO },
    )
}

pub(crate) fn row_enables(n: f64, cfg: &GainConfig) -> (bool, bool) {
    if !cfg.scheduling {
        return (true, true);
    }
    (n.abs() > cfg.n_lim1.abs(), n.abs() < cfg.n_lim2.abs())
}

/// Hessian forgetting factor in effect at speed `n`: the `r̂_s` value inside
/// the standstill window, the `ψ̂_m` value elsewhere.
pub fn hessian_gamma(n: f64, cfg: &GainConfig) -> f64 {
    if n.abs() < cfg.n_lim2.abs() {
        cfg.gamma_r.r_s
    } else {
        cfg.gamma_r.psi_m
    }
}

fn apply(theta: ParameterVector, gain: Mat2, eps: DqVector, b: &ParameterBox) -> ParameterVector {
    let step = gain.mul_vec(eps);
    project_parameters(
        ParameterVector { psi_m: theta.psi_m + step.d, r_s: theta.r_s + step.q },
        b,
    )
}

fn row_scaled(m: Mat2, g_psi: f64, g_rs: f64) -> Mat2 {
    Mat2::from_rows(m.row1() * g_psi, m.row2() * g_rs)
}

/// Stochastic gradient step: `r ← r + γ_r (tr{ΨΨᵀ} - r)`, `L = γ_L Ψ / r`.
pub fn sga_update(
    theta: ParameterVector,
    eps: DqVector,
    grad: &PredictionGradient,
    hess: &HessianState,
    n: f64,
    cfg: &GainConfig,
) -> Update {
    let g_r = hessian_gamma(n, cfg);
    let mut h = *hess;
    h.scalar_r += g_r * (grad.trace() - h.scalar_r);
    h.row_r[0] += g_r * (grad.psi.norm_sq() - h.row_r[0]);
    h.row_r[1] += g_r * (grad.rs.norm_sq() - h.row_r[1]);
    let psi = grad.matrix();
    h.element_r = h.element_r + (squared(&psi) - h.element_r) * g_r;
    let r = match cfg.sga_trace {
        SgaTrace::Full => Mat2::new(h.scalar_r, h.scalar_r, h.scalar_r, h.scalar_r),
        SgaTrace::PerParameter => Mat2::new(h.row_r[0], h.row_r[0], h.row_r[1], h.row_r[1]),
        SgaTrace::PerElement => h.element_r,
    };
    let (g1, g2, fl) = (cfg.gamma_l.psi_m, cfg.gamma_l.r_s, cfg.r_floor);
    let raw = Mat2::new(
        g1 * psi.m11 / r.m11.max(fl),
        g1 * psi.m12 / r.m12.max(fl),
        g2 * psi.m21 / r.m21.max(fl),
        g2 * psi.m22 / r.m22.max(fl),
    );
    let gain = gain_schedule(raw, n, cfg);
    Update { theta: apply(theta, gain, eps, &cfg.bounds), hessian: h, gain, branch: None }
}

/// Gauss-Newton step: `R ← R + γ_r (ΨΨᵀ - R)`, `L = γ_L R⁻¹ Ψ`, with the
/// Moore-Penrose pseudoinverse whenever `det R` drops below the floor.
pub fn gna_update(
    theta: ParameterVector,
    eps: DqVector,
    grad: &PredictionGradient,
    hess: &HessianState,
    n: f64,
    cfg: &GainConfig,
) -> Update {
    let g_r = hessian_gamma(n, cfg);
    let mut h = *hess;
    h.matrix_r = h.matrix_r + (grad.outer() - h.matrix_r) * g_r;
    h.scalar_r += g_r * (grad.trace() - h.scalar_r);
    let r = h.matrix_r;
    let det = r.det();
    let psi = grad.matrix();
    let (g_psi, g_rs) = (cfg.gamma_l.psi_m, cfg.gamma_l.r_s);
    let (raw, branch) = if det >= cfg.det_r_floor {
        (gna_gain_exact(&r, &psi, g_psi, g_rs), GnaBranch::Exact)
    } else {
        let pinv = pseudoinverse_2x2(&r, cfg.pinv_tol) * psi;
        (row_scaled(pinv, g_psi, g_rs), GnaBranch::Pseudoinverse)
    };
    let gain = gain_schedule(raw, n, cfg);
    Update { theta: apply(theta, gain, eps, &cfg.bounds), hessian: h, gain, branch: Some(branch) }
}

/// Explicit `R⁻¹ Ψ` for symmetric `R` written out element by element, each
/// row scaled by its own forgetting factor.
pub fn gna_gain_exact(r: &Mat2, psi: &Mat2, gamma_psi: f64, gamma_rs: f64) -> Mat2 {
    let det = r.m11 * r.m22 - r.m12 * r.m21;
    let (p11, p12, p21, p22) = (psi.m11, psi.m12, psi.m21, psi.m22);
    Mat2::new(
        gamma_psi / det * (p11 * r.m22 - p21 * r.m12),
        gamma_psi / det * (p12 * r.m22 - p22 * r.m12),
        gamma_rs / det * (p21 * r.m11 - p11 * r.m12),
        gamma_rs / det * (p22 * r.m11 - p12 * r.m12),
    )
}

/// Moore-Penrose pseudoinverse of a symmetric 2x2 matrix.
///
/// Uses the Jacobi rotation that diagonalises `R`; eigenvalues with
/// magnitude below `tol * max|λ|` are treated as zero.
pub fn pseudoinverse_2x2(r: &Mat2, tol: f64) -> Mat2 {
    let (a, b, c) = (r.m11, 0.5 * (r.m12 + r.m21), r.m22);
    let phi = 0.5 * (2.0 * b).atan2(a - c);
    let (s, co) = phi.sin_cos();
    let l1 = a * co * co + 2.0 * b * s * co + c * s * s;
    let l2 = a * s * s - 2.0 * b * s * co + c * co * co;
    let lmax = l1.abs().max(l2.abs());
    if lmax == 0.0 || !lmax.is_finite() {
        return Mat2::ZERO;
    }
    let cut = tol * lmax;
    let v1 = DqVector::new(co, s);
    let v2 = DqVector::new(-s, co);
    let mut p = Mat2::ZERO;
    if l1.abs() > cut {
        p = p + Mat2::outer(v1, v1) * (1.0 / l1);
    }
    if l2.abs() > cut {
        p = p + Mat2::outer(v2, v2) * (1.0 / l2);
    }
    p
}

/// Physically interpretative gains.
///
/// `L11 = -γ x_d` acts on `ε_d` alone. The `r̂_s` row inverts the steady-state
/// error sensitivity per axis; an axis whose denominator is smaller than
/// `i_floor` times its coefficient norm contributes nothing this step.
pub fn phyint_update(
    theta: ParameterVector,
    eps: DqVector,
    n: f64,
    i_hat: DqVector,
    x: &KnownReactances,
    cfg: &GainConfig,
) -> Update {
    let gain = gain_schedule(phyint_gain(&theta, n, i_hat, x, cfg), n, cfg);
    Update {
        theta: apply(theta, gain, eps, &cfg.bounds),
        hessian: HessianState::scaled_identity(0.0),
        gain,
        branch: None,
    }
}

/// Unscheduled PhyInt gain matrix.
pub fn phyint_gain(
    theta: &ParameterVector,
    n: f64,
    i_hat: DqVector,
    x: &KnownReactances,
    cfg: &GainConfig,
) -> Mat2 {
    let r = theta.r_s;
    let d = r * r + n * n * x.x_d * x.x_q;
    let den_d = -r * i_hat.d - n * x.x_q * i_hat.q;
    let den_q = -r * i_hat.q + n * x.x_d * i_hat.d;
    let l21 = if den_d.abs() >= cfg.i_floor * r.hypot(n * x.x_q) && den_d != 0.0 {
        cfg.gamma_l.r_s * d / den_d
    } else {
        0.0
    };
    let l22 = if den_q.abs() >= cfg.i_floor * r.hypot(n * x.x_d) && den_q != 0.0 {
        cfg.gamma_l.r_s * d / den_q
    } else {
        0.0
    };
    Mat2::new(-cfg.gamma_l.psi_m * x.x_d, 0.0, l21, l22)
}
