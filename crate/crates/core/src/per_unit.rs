//! Per-unit base system, SI to per-unit conversion and the rotor-frame
//! (Park) rotation shared by the plant, the controller and the estimator.
//!
//! Bases follow the amplitude-invariant, peak-phase convention:
//! `u_base = sqrt(2/3) * U_n`, `i_base = sqrt(2) * I_n`, `psi_base = u_base / omega_n`.
//! With these bases the per-unit stator equations keep the same form as in SI
//! with `omega_n * psi_base = u_base`.

use std::f64::consts::{PI, SQRT_2};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A two-component value in the rotor (d, q) frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DqVector {
    pub d: f64,
    pub q: f64,
}

impl DqVector {
    pub const ZERO: DqVector = DqVector { d: 0.0, q: 0.0 };

    pub const fn new(d: f64, q: f64) -> Self {
        DqVector { d, q }
    }

    pub fn norm(&self) -> f64 {
        self.d.hypot(self.q)
    }

    pub fn norm_sq(&self) -> f64 {
        self.d * self.d + self.q * self.q
    }

    pub fn dot(&self, o: DqVector) -> f64 {
        self.d * o.d + self.q * o.q
    }

    pub fn is_finite(&self) -> bool {
        self.d.is_finite() && self.q.is_finite()
    }
}

impl Add for DqVector {
    type Output = DqVector;
    fn add(self, o: DqVector) -> DqVector {
        DqVector::new(self.d + o.d, self.q + o.q)
    }
}

impl AddAssign for DqVector {
    fn add_assign(&mut self, o: DqVector) {
        self.d += o.d;
        self.q += o.q;
    }
}

impl Sub for DqVector {
    type Output = DqVector;
    fn sub(self, o: DqVector) -> DqVector {
        DqVector::new(self.d - o.d, self.q - o.q)
    }
}

impl Neg for DqVector {
    type Output = DqVector;
    fn neg(self) -> DqVector {
        DqVector::new(-self.d, -self.q)
    }
}

impl Mul<f64> for DqVector {
    type Output = DqVector;
    fn mul(self, s: f64) -> DqVector {
        DqVector::new(self.d * s, self.q * s)
    }
}

/// A two-component value in the stator-fixed (alpha, beta) frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AlphaBeta {
    pub alpha: f64,
    pub beta: f64,
}

impl AlphaBeta {
    pub const fn new(alpha: f64, beta: f64) -> Self {
        AlphaBeta { alpha, beta }
    }

    pub fn norm(&self) -> f64 {
        self.alpha.hypot(self.beta)
    }
}

/// Rotates a stationary-frame vector by `-theta` into rotor coordinates.
pub fn park(v: AlphaBeta, theta: f64) -> DqVector {
    let (s, c) = theta.sin_cos();
    DqVector::new(c * v.alpha + s * v.beta, -s * v.alpha + c * v.beta)
}

/// Rotates a rotor-frame vector by `+theta` back into stator coordinates.
pub fn inverse_park(v: DqVector, theta: f64) -> AlphaBeta {
    let (s, c) = theta.sin_cos();
    AlphaBeta::new(c * v.d - s * v.q, s * v.d + c * v.q)
}

/// Wraps an electrical angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(2.0 * PI);
    // rem_euclid can return exactly 2π for tiny negative inputs
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

/// Base values of the per-unit system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseQuantities {
    /// Peak phase voltage, V.
    pub u_base: f64,
    /// Peak phase current, A.
    pub i_base: f64,
    /// Ohm.
    pub z_base: f64,
    /// Weber.
    pub psi_base: f64,
    /// Nominal electrical angular frequency, rad/s.
    pub omega_n: f64,
    /// Newton-metre.
    pub torque_base: f64,
    pub pole_pairs: u32,
}

impl BaseQuantities {
    /// Builds the base set from nameplate ratings (line-to-line rms voltage,
    /// rms phase current, electrical frequency in Hz).
    pub fn new(
        rated_voltage_ll: f64,
        rated_current: f64,
        rated_frequency: f64,
        pole_pairs: u32,
    ) -> Result<Self> {
        for (name, v) in [
            ("rated voltage", rated_voltage_ll),
            ("rated current", rated_current),
            ("rated frequency", rated_frequency),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if pole_pairs == 0 {
            return invalid("pole pairs must be positive");
        }
        let u_base = (2.0f64 / 3.0).sqrt() * rated_voltage_ll;
        let i_base = SQRT_2 * rated_current;
        let omega_n = 2.0 * PI * rated_frequency;
        let psi_base = u_base / omega_n;
        Ok(BaseQuantities {
            u_base,
            i_base,
            z_base: u_base / i_base,
            psi_base,
            omega_n,
            torque_base: 1.5 * pole_pairs as f64 * psi_base * i_base,
            pole_pairs,
        })
    }
}

/// Convenience wrapper matching the nameplate-driven constructor.
pub fn make_base(
    rated_voltage_ll: f64,
    rated_current: f64,
    rated_frequency: f64,
    pole_pairs: u32,
) -> Result<BaseQuantities> {
    BaseQuantities::new(rated_voltage_ll, rated_current, rated_frequency, pole_pairs)
}

/// Per-unit electrical parameters of the machine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MachineParams {
    pub x_d: f64,
    pub x_q: f64,
    pub r_s: f64,
    pub psi_m: f64,
}

impl MachineParams {
    pub fn validate(&self) -> Result<()> {
        let MachineParams { x_d, x_q, r_s, psi_m } = *self;
        if !(x_d.is_finite() && x_d > 0.0 && x_q.is_finite() && x_q > 0.0) {
            return invalid(format!("reactances must be positive, got x_d={x_d}, x_q={x_q}"));
        }
        if !(r_s.is_finite() && r_s >= 0.0) {
            return invalid(format!("r_s must be non-negative, got {r_s}"));
        }
        if !(psi_m.is_finite() && psi_m >= 0.0) {
            return invalid(format!("psi_m must be non-negative, got {psi_m}"));
        }
        if x_q < x_d {
            return invalid(format!("saliency convention requires x_q >= x_d, got x_d={x_d}, x_q={x_q}"));
        }
        Ok(())
    }

    /// Open-circuit time constants `(T_d, T_q)` in seconds.
    pub fn time_constants(&self, omega_n: f64) -> (f64, f64) {
        (
            self.x_d / (self.r_s * omega_n),
            self.x_q / (self.r_s * omega_n),
        )
    }
}

/// Machine data in SI units, as listed on a datasheet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiMachineData {
    pub r_s_ohm: f64,
    pub l_d_h: f64,
    pub l_q_h: f64,
    pub psi_m_wb: f64,
}

pub fn to_per_unit(si: &SiMachineData, base: &BaseQuantities) -> Result<MachineParams> {
    for (name, v) in [
        ("Rs_ohm", si.r_s_ohm),
        ("Ld_H", si.l_d_h),
        ("Lq_H", si.l_q_h),
        ("psi_m_Wb", si.psi_m_wb),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return invalid(format!("{name} must be non-negative, got {v}"));
        }
    }
    Ok(MachineParams {
        r_s: si.r_s_ohm / base.z_base,
        x_d: base.omega_n * si.l_d_h / base.z_base,
        x_q: base.omega_n * si.l_q_h / base.z_base,
        psi_m: si.psi_m_wb / base.psi_base,
    })
}

pub fn to_si(pu: &MachineParams, base: &BaseQuantities) -> SiMachineData {
    SiMachineData {
        r_s_ohm: pu.r_s * base.z_base,
        l_d_h: pu.x_d * base.z_base / base.omega_n,
        l_q_h: pu.x_q * base.z_base / base.omega_n,
        psi_m_wb: pu.psi_m * base.psi_base,
    }
}

/// Flat key-value machine description.
///
/// Ratings define the base system; the SI parameters are converted with it.
/// Any `*_pu` key overrides the converted value. Only the amplitude-invariant
/// dq transform is accepted (`transform = "amplitude_invariant"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineConfig {
    #[serde(rename = "rated_voltage_ll_V")]
    pub rated_voltage_ll_v: f64,
    #[serde(rename = "rated_current_A")]
    pub rated_current_a: f64,
    pub pole_pairs: u32,
    #[serde(rename = "rated_frequency_Hz", default, skip_serializing_if = "Option::is_none")]
    pub rated_frequency_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rated_speed_rpm: Option<f64>,
    #[serde(rename = "Rs_ohm", default, skip_serializing_if = "Option::is_none")]
    pub rs_ohm: Option<f64>,
    #[serde(rename = "Ld_H", default, skip_serializing_if = "Option::is_none")]
    pub ld_h: Option<f64>,
    #[serde(rename = "Lq_H", default, skip_serializing_if = "Option::is_none")]
    pub lq_h: Option<f64>,
    #[serde(rename = "psi_m_Wb", default, skip_serializing_if = "Option::is_none")]
    pub psi_m_wb: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xd_pu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xq_pu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rs_pu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi_m_pu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<String>,
}

impl Default for MachineConfig {
    /// The 3 kW laboratory IPMSM. The magnet flux uses the offline-identified
    /// 0.895 pu rather than the 1.14 Wb datasheet value.
    fn default() -> Self {
        MachineConfig {
            rated_voltage_ll_v: 400.0,
            rated_current_a: 4.93,
            pole_pairs: 3,
            rated_frequency_hz: None,
            rated_speed_rpm: Some(1000.0),
            rs_ohm: Some(2.25),
            ld_h: Some(0.0953),
            lq_h: Some(0.206),
            psi_m_wb: Some(1.14),
            xd_pu: None,
            xq_pu: None,
            rs_pu: None,
            psi_m_pu: Some(0.895),
            transform: None,
        }
    }
}

impl MachineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        Ok(toml::from_str(s)?)
    }

    pub fn rated_frequency(&self) -> Result<f64> {
        match (self.rated_frequency_hz, self.rated_speed_rpm) {
            (Some(f), _) => Ok(f),
            (None, Some(rpm)) => Ok(rpm * self.pole_pairs as f64 / 60.0),
            (None, None) => invalid("machine config needs rated_frequency_Hz or rated_speed_rpm"),
        }
    }

    pub fn base(&self) -> Result<BaseQuantities> {
        if let Some(t) = &self.transform {
            if t != "amplitude_invariant" {
                return invalid(format!("unsupported transform convention '{t}'"));
            }
        }
        BaseQuantities::new(
            self.rated_voltage_ll_v,
            self.rated_current_a,
            self.rated_frequency()?,
            self.pole_pairs,
        )
    }

    /// Resolves the per-unit parameters, applying overrides last.
    pub fn params(&self) -> Result<MachineParams> {
        let base = self.base()?;
        let pick = |pu: Option<f64>, si: Option<f64>, conv: &dyn Fn(f64) -> f64, name: &str| {
            match (pu, si) {
                (Some(v), _) => Ok(v),
                (None, Some(s)) => {
                    if !(s.is_finite() && s >= 0.0) {
                        invalid(format!("{name} must be non-negative, got {s}"))
                    } else {
                        Ok(conv(s))
                    }
                }
                (None, None) => invalid(format!("machine config is missing {name}")),
            }
        };
        let p = MachineParams {
            r_s: pick(self.rs_pu, self.rs_ohm, &|r| r / base.z_base, "Rs_ohm / rs_pu")?,
            x_d: pick(self.xd_pu, self.ld_h, &|l| base.omega_n * l / base.z_base, "Ld_H / xd_pu")?,
            x_q: pick(self.xq_pu, self.lq_h, &|l| base.omega_n * l / base.z_base, "Lq_H / xq_pu")?,
            psi_m: pick(self.psi_m_pu, self.psi_m_wb, &|p| p / base.psi_base, "psi_m_Wb / psi_m_pu")?,
        };
        p.validate()?;
        Ok(p)
    }
}
