//! `latgas pde`: solves the macroscopic system on the configured grid and
//! reports mass bookkeeping, weak-form residuals, and interface matching.

use super::{ensure_out_dir, initial_json, model_json, model_meta};
use crate::config::RunConfig;
use crate::io::{write_json, write_profile_csv, ProfileRow};
use crate::{CliError, Result};
use latgas_core::ensembles::EnsembleTable;
use latgas_core::observables::TestFunction;
use latgas_core::pde::{weak_residual, PdeSeries, PdeState};
use std::path::{Path, PathBuf};

pub struct PdeOutputs {
    pub profiles: PathBuf,
    pub report: PathBuf,
    pub manifest: PathBuf,
    pub mass_drift: f64,
    pub max_lambda_mismatch: f64,
    pub residuals: Vec<(String, f64)>,
    pub refine_ratios: Option<Vec<(String, f64)>>,
}

pub fn run(config: &RunConfig, refine: bool, out_dir: &Path) -> Result<PdeOutputs> {
    let params = config.model.params()?;
    let table = EnsembleTable::from_params(&params);
    ensure_out_dir(out_dir)?;

    let snapshots = &config.pde.snapshots;
    let t_end = *snapshots.last().unwrap();
    let series = solve(config, &table, config.pde.cells)?;

    // mass bookkeeping across snapshots
    let du = series.du();
    let masses: Vec<f64> = series
        .states
        .iter()
        .map(|state| state.iter().flatten().sum::<f64>() * du)
        .collect();
    let mass_drift = masses
        .iter()
        .map(|m| (m - masses[0]).abs())
        .fold(0.0f64, f64::max);

    // interface potential matching, recovered through the inverse maps
    let mut max_mismatch = 0.0f64;
    for state in &series.states {
        let probe = PdeState::from_cells(table, state.clone()).map_err(CliError::runtime)?;
        max_mismatch = max_mismatch.max(probe.interface_lambda_mismatch().map_err(CliError::runtime)?);
    }

    // weak-form residual battery (needs the series to start at time zero)
    let mut residuals = Vec::new();
    if series.times.first().is_some_and(|&t0| t0.abs() < 1e-9) && series.times.len() >= 2 {
        for g in TestFunction::battery() {
            let r = weak_residual(&series, &g, &table, t_end).map_err(CliError::runtime)?;
            residuals.push((g.name().to_string(), r));
        }
    }

    let refine_ratios = if refine {
        let fine = solve(config, &table, 2 * config.pde.cells)?;
        let mut ratios = Vec::new();
        for m in 1..=3 {
            let g = TestFunction::sine_mode(m);
            let coarse_r = weak_residual(&series, &g, &table, t_end).map_err(CliError::runtime)?;
            let fine_r = weak_residual(&fine, &g, &table, t_end).map_err(CliError::runtime)?;
            ratios.push((g.name().to_string(), (coarse_r / fine_r).abs()));
        }
        // L¹ self-convergence distance at the final time
        let mut l1 = 0.0;
        for region in 0..3 {
            let coarse_cells = &series.states.last().unwrap()[region];
            let fine_cells = &fine.states.last().unwrap()[region];
            for (i, c) in coarse_cells.iter().enumerate() {
                let f = 0.5 * (fine_cells[2 * i] + fine_cells[2 * i + 1]);
                l1 += (c - f).abs() * du;
            }
        }
        ratios.push(("l1_self_distance".to_string(), l1));
        Some(ratios)
    } else {
        None
    };

    let mut meta = model_meta(&config.model, params.q());
    meta.push(("kind", "pde".into()));
    meta.push(("cells_per_region", format!("{}", config.pde.cells)));
    meta.push(("safety", format!("{}", config.pde.safety)));

    let profiles = out_dir.join("pde_profiles.csv");
    let mut rows = Vec::new();
    for (s, &t) in series.times.iter().enumerate() {
        for region in 0..3 {
            let centers = series.cell_centers(region);
            for (i, &u) in centers.iter().enumerate() {
                rows.push(ProfileRow {
                    t,
                    u,
                    rho_mean: series.states[s][region][i],
                    rho_se: 0.0,
                });
            }
        }
    }
    write_profile_csv(&profiles, &meta, rows.into_iter())?;

    let report = out_dir.join("pde_report.json");
    write_json(
        &report,
        &serde_json::json!({
            "schema": 1,
            "command": "pde",
            "masses": masses,
            "mass_drift": mass_drift,
            "max_lambda_mismatch": max_mismatch,
            "weak_residuals": residuals
                .iter()
                .map(|(name, r)| serde_json::json!({ "g": name, "residual": r }))
                .collect::<Vec<_>>(),
            "refine": refine_ratios.as_ref().map(|rs| {
                rs.iter()
                    .map(|(name, v)| serde_json::json!({ "name": name, "value": v }))
                    .collect::<Vec<_>>()
            }),
        }),
    )?;

    let manifest = out_dir.join("pde_manifest.json");
    write_json(
        &manifest,
        &serde_json::json!({
            "schema": 1,
            "command": "pde",
            "version": env!("CARGO_PKG_VERSION"),
            "model": model_json(&config.model, params.q()),
            "initial": initial_json(&config.initial),
            "pde": {
                "cells_per_region": config.pde.cells,
                "safety": config.pde.safety,
                "snapshots": snapshots,
                "refine": refine,
            },
            "outputs": { "profiles": "pde_profiles.csv", "report": "pde_report.json" },
        }),
    )?;

    Ok(PdeOutputs {
        profiles,
        report,
        manifest,
        mass_drift,
        max_lambda_mismatch: max_mismatch,
        residuals,
        refine_ratios,
    })
}

fn solve(config: &RunConfig, table: &EnsembleTable, cells: usize) -> Result<PdeSeries> {
    let snapshots = &config.pde.snapshots;
    let t_end = *snapshots.last().unwrap();
    let initial = config.initial.clone();
    let mut state = PdeState::new(*table, cells, &move |region, u| initial.eval(region, u))
        .map_err(CliError::validation)?;
    state.set_safety(config.pde.safety).map_err(CliError::validation)?;
    state.run_to(t_end, snapshots).map_err(CliError::runtime)
}
