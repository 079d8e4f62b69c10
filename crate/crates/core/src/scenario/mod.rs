//! Scenario files, the closed-loop runner, convergence metrics and the
//! bundled presets.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! name = "flux-step"
//! duration_s = 6.0
//! seed = 1
//!
//! [plant]
//! speed_pu = 0.3
//! noise_sigma_pu = 0.0
//!
//! [control]
//! load_torque_pu = 0.4
//!
//! [estimator]
//! algorithm = "gna"      # "sga", "gna" or "phyint"
//!
//! [[events]]
//! time_s = 1.0
//! target = "psi_m"       # psi_m, r_s, x_d, x_q, load_torque, speed_ref
//! factor = 0.92
//! ```

mod config;
mod metrics;
mod runner;

pub use config::{ControlConfig, ControlMode, EstimatorConfig, PlantConfig, Scenario};
pub use metrics::{convergence_metrics, ConvergenceReport};
pub use runner::{run, run_with, LogRecord, RunSummary, Simulation, Trajectory};

use crate::error::Result;

const PRESETS: [(&str, &str); 16] = [
    ("fig7a", include_str!("../../presets/fig7a.toml")),
    ("fig7b", include_str!("../../presets/fig7b.toml")),
    ("fig7c", include_str!("../../presets/fig7c.toml")),
    ("fig7d", include_str!("../../presets/fig7d.toml")),
    ("fig8a", include_str!("../../presets/fig8a.toml")),
    ("fig8b", include_str!("../../presets/fig8b.toml")),
    ("fig8c", include_str!("../../presets/fig8c.toml")),
    ("fig8d", include_str!("../../presets/fig8d.toml")),
    ("fig9a", include_str!("../../presets/fig9a.toml")),
    ("fig9b", include_str!("../../presets/fig9b.toml")),
    ("fig9c", include_str!("../../presets/fig9c.toml")),
    ("fig9d", include_str!("../../presets/fig9d.toml")),
    ("fig10a", include_str!("../../presets/fig10a.toml")),
    ("fig10b", include_str!("../../presets/fig10b.toml")),
    ("fig10c", include_str!("../../presets/fig10c.toml")),
    ("fig10d", include_str!("../../presets/fig10d.toml")),
];

/// Names of the bundled presets, in library order.
pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// All bundled presets, parsed.
pub fn preset_library() -> Result<Vec<Scenario>> {
    PRESETS.iter().map(|(_, text)| Scenario::from_toml_str(text)).collect()
}

/// One preset by name, `None` if there is no such preset.
pub fn preset(name: &str) -> Option<Result<Scenario>> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| Scenario::from_toml_str(text))
}
