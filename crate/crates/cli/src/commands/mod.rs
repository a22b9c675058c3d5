//! Subcommand implementations. Each command is a library function so the
//! integration and acceptance suites can drive it directly.

pub mod compare;
pub mod ensembles;
pub mod gibbs_check;
pub mod pde;
pub mod simulate;

use crate::config::ModelConfig;
use crate::{CliError, Result};
use std::path::Path;

/// Region index of a lattice site: reservoirs surround the bulk `0..=N`.
pub(crate) fn region_of_site(x: i64, n: usize) -> usize {
    if x < 0 {
        0
    } else if x <= n as i64 {
        1
    } else {
        2
    }
}

pub(crate) fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

pub(crate) fn model_meta(model: &ModelConfig, q: f64) -> Vec<(&'static str, String)> {
    vec![
        ("theta", format!("{}", model.theta)),
        ("alpha", format!("{}", model.alpha)),
        ("beta", format!("{}", model.beta)),
        ("q", format!("{q}")),
        ("n", format!("{}", model.n)),
    ]
}

pub(crate) fn model_json(model: &ModelConfig, q: f64) -> serde_json::Value {
    serde_json::json!({
        "theta": model.theta,
        "alpha": model.alpha,
        "beta": model.beta,
        "q": q,
        "n": model.n,
    })
}

pub(crate) fn initial_json(initial: &crate::config::InitialProfile) -> serde_json::Value {
    use crate::config::InitialProfile;
    match initial {
        InitialProfile::Step { left, bulk, right } => serde_json::json!({
            "profile": "step", "left": left, "bulk": bulk, "right": right,
        }),
        InitialProfile::Constant { value } => {
            serde_json::json!({ "profile": "constant", "value": value })
        }
        InitialProfile::Piecewise { points } => serde_json::json!({
            "profile": "piecewise",
            "points": points.iter().map(|(u, v)| serde_json::json!([u, v])).collect::<Vec<_>>(),
        }),
    }
}
