//! `latgas compare`: time-integrated pairing distance between a simulated
//! profile set and a solver profile set.
//!
//! Both profiles are evaluated at the lattice sites `x/N` and paired with
//! each battery function under the truncated Cesàro weighting of the
//! averaged empirical density, i.e. the reported distance for `G` is
//! `∫ |Σ_x w_x(k) G(x/N) (ρ̂_sim(x,s) - ρ_pde(x/N,s)) / N| ds`
//! (trapezoid in `s`). Weighting both sides identically makes the metric
//! vanish as the profiles converge; the weights carry total mass below one
//! (the Cesàro normalization is recorded in the report).

use super::region_of_site;
use crate::io::{read_profile_csv, write_json, ProfileCsv};
use crate::{CliError, Result};
use latgas_core::observables::{cesaro_site_weights, TestFunction};
use latgas_core::pde::REGION_LEFT;
use std::path::{Path, PathBuf};

pub struct CompareArgs<'a> {
    pub sim: &'a Path,
    pub pde: &'a Path,
    pub traces: Option<&'a Path>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub tol_distance: f64,
    pub tol_gap: f64,
    pub out: &'a Path,
}

#[derive(Debug)]
pub struct CompareReport {
    pub distances: Vec<(String, f64)>,
    pub max_distance: f64,
    pub distance_pass: bool,
    pub final_gaps: Option<(f64, f64)>,
    pub gap_pass: Option<bool>,
    pub report_path: PathBuf,
}

pub fn run(args: &CompareArgs) -> Result<CompareReport> {
    let sim = read_profile_csv(args.sim)?;
    let pde = read_profile_csv(args.pde)?;

    let n = match args.n {
        Some(n) => n,
        None => sim.meta_usize("n")?,
    };
    let k = match args.k {
        Some(k) => k,
        None => sim.meta_usize("averaging_k")?,
    };

    let sim_times = sim.times();
    let pde_times = pde.times();
    if sim_times.len() != pde_times.len()
        || sim_times
            .iter()
            .zip(&pde_times)
            .any(|(a, b)| (a - b).abs() > 1e-9)
    {
        return Err(CliError::Validation(format!(
            "snapshot grids differ: {sim_times:?} vs {pde_times:?}"
        )));
    }
    if sim_times.len() < 2 {
        return Err(CliError::Validation("need at least two snapshots to integrate".into()));
    }

    let sites: Vec<f64> = (-(n as i64)..=2 * n as i64)
        .map(|x| x as f64 / n as f64)
        .collect();
    let weights = cesaro_site_weights(n, k).map_err(CliError::validation)?;

    let sim_values = values_at_sites(&sim, &sim_times, n, &sites)?;
    let pde_values = values_at_sites(&pde, &pde_times, n, &sites)?;

    let battery = TestFunction::battery();
    let mut distances = Vec::with_capacity(battery.len());
    let mut max_distance = 0.0f64;
    for g in &battery {
        let g_at_sites: Vec<f64> = sites.iter().map(|&u| g.eval(u)).collect();
        let pair_diff = |s: usize| -> f64 {
            let mut acc = 0.0;
            for i in 0..sites.len() {
                acc += weights[i] * g_at_sites[i] * (sim_values[s][i] - pde_values[s][i]);
            }
            acc / n as f64
        };
        let mut dist = 0.0;
        for s in 0..sim_times.len() - 1 {
            let ds = sim_times[s + 1] - sim_times[s];
            dist += 0.5 * ds * (pair_diff(s).abs() + pair_diff(s + 1).abs());
        }
        distances.push((g.name().to_string(), dist));
        max_distance = max_distance.max(dist);
    }
    let distance_pass = max_distance <= args.tol_distance;

    let (final_gaps, gap_pass) = match args.traces {
        Some(path) => {
            let (gap0, gap1) = read_final_gaps(path)?;
            let pass = gap0 <= args.tol_gap && gap1 <= args.tol_gap;
            (Some((gap0, gap1)), Some(pass))
        }
        None => (None, None),
    };

    let cesaro_weight: f64 =
        (1..k).map(|m| (m - 1) as f64 / m as f64).sum::<f64>() / k as f64;
    let report_path = args.out.join("compare_report.json");
    super::ensure_out_dir(args.out)?;
    write_json(
        &report_path,
        &serde_json::json!({
            "schema": 1,
            "command": "compare",
            "version": env!("CARGO_PKG_VERSION"),
            "inputs": {
                "sim": args.sim.display().to_string(),
                "pde": args.pde.display().to_string(),
                "traces": args.traces.map(|p| p.display().to_string()),
            },
            "n": n,
            "averaging_k": k,
            "cesaro_total_weight": cesaro_weight,
            "weighting": "both profiles paired under the truncated Cesàro site weights",
            "snapshots": sim_times,
            "distances": distances
                .iter()
                .map(|(g, d)| serde_json::json!({ "g": g, "distance": d }))
                .collect::<Vec<_>>(),
            "max_distance": max_distance,
            "tol_distance": args.tol_distance,
            "distance_pass": distance_pass,
            "final_gaps": final_gaps.map(|(g0, g1)| serde_json::json!({ "gap0": g0, "gap1": g1 })),
            "tol_gap": args.tol_gap,
            "gap_pass": gap_pass,
        }),
    )?;

    Ok(CompareReport {
        distances,
        max_distance,
        distance_pass,
        final_gaps,
        gap_pass,
        report_path,
    })
}

/// Evaluates a profile file at the lattice sites. Site-resolved files are
/// used directly; cell-centred solver files are interpolated per region.
fn values_at_sites(
    file: &ProfileCsv,
    times: &[f64],
    n: usize,
    sites: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let rows = file.snapshot(t);
        if rows.len() == sites.len()
            && rows
                .iter()
                .zip(sites)
                .all(|(row, &u)| (row.u - u).abs() <= 1e-9)
        {
            out.push(rows.iter().map(|r| r.rho_mean).collect());
            continue;
        }
        // group cell centres by region and interpolate
        let mut regions: [Vec<(f64, f64)>; 3] = Default::default();
        for row in &rows {
            let region = if row.u < 0.0 {
                0
            } else if row.u < 1.0 {
                1
            } else {
                2
            };
            regions[region].push((row.u, row.rho_mean));
        }
        let m = regions[0].len();
        if m < 2 || regions.iter().any(|r| r.len() != m) {
            return Err(CliError::Validation(format!(
                "profile at t = {t} is neither site-resolved nor a three-region cell grid"
            )));
        }
        let values = sites
            .iter()
            .enumerate()
            .map(|(i, &u)| {
                let x = i as i64 - n as i64;
                let region = region_of_site(x, n);
                interpolate(&regions[region], REGION_LEFT[region], u)
            })
            .collect();
        out.push(values);
    }
    Ok(out)
}

fn interpolate(cells: &[(f64, f64)], left_edge: f64, u: f64) -> f64 {
    let m = cells.len();
    let du = 1.0 / m as f64;
    let s = (u - left_edge) / du - 0.5;
    if s <= 0.0 {
        return cells[0].1;
    }
    if s >= (m - 1) as f64 {
        return cells[m - 1].1;
    }
    let i = s.floor() as usize;
    let w = s - i as f64;
    cells[i].1 * (1.0 - w) + cells[i + 1].1 * w
}

/// Pulls `gap0` and `gap1` from the last row of a traces CSV.
fn read_final_gaps(path: &Path) -> Result<(f64, f64)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut header: Option<Vec<String>> = None;
    let mut last: Option<Vec<f64>> = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if header.is_none() {
            header = Some(line.split(',').map(|s| s.trim().to_string()).collect());
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        if let Ok(row) = row {
            last = Some(row);
        }
    }
    let header = header
        .ok_or_else(|| CliError::Validation(format!("{}: no header", path.display())))?;
    let last =
        last.ok_or_else(|| CliError::Validation(format!("{}: no data rows", path.display())))?;
    let col = |name: &str| -> Result<f64> {
        let idx = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Validation(format!("{}: no column {name}", path.display())))?;
        Ok(last[idx])
    };
    Ok((col("gap0")?, col("gap1")?))
}
