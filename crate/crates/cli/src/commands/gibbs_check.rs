//! `latgas gibbs-check`: sampler correctness against enumeration oracles
//! and a concentration sweep for the block densities.

use super::ensure_out_dir;
use crate::config::RunConfig;
use crate::io::write_json;
use crate::runner::{derive_seed, run_indexed};
use crate::{CliError, Result};
use latgas_core::ensembles::{lambda_of_rho, Family};
use latgas_core::gibbs::{enumerate_probabilities, exact_marginals, sample_chain, GibbsSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};

pub struct GibbsCheckOutputs {
    pub report: PathBuf,
    pub all_passed: bool,
    pub tv_results: Vec<(f64, f64)>,
    pub lln_ok: bool,
}

pub fn run(config: &RunConfig, threads: usize, out_dir: &Path) -> Result<GibbsCheckOutputs> {
    let params = config.model.params()?;
    let g = &config.gibbs;
    ensure_out_dir(out_dir)?;
    let q = params.q();
    let base_seed = config.simulate.seed;

    // total-variation distance of the chain sampler against enumeration
    let tv_jobs: Vec<f64> = g.lambdas.clone();
    let tv_results: Vec<std::result::Result<(f64, f64, f64), String>> =
        run_indexed(tv_jobs.len(), threads, |j| {
            let lambda = tv_jobs[j];
            tv_check(g.interval, lambda, q, g.samples, derive_seed(base_seed, 100 + j as u64))
                .map_err(|e| e.to_string())
        });
    let mut tv_pairs = Vec::new();
    let mut marginal_err_max = 0.0f64;
    for res in tv_results {
        let (lambda, tv, marg_err) = res.map_err(CliError::Runtime)?;
        marginal_err_max = marginal_err_max.max(marg_err);
        tv_pairs.push((lambda, tv));
    }
    let tv_pass = tv_pairs.iter().all(|&(_, tv)| tv <= g.tv_tolerance);
    let marginal_pass = marginal_err_max <= 1e-12;

    // law-of-large-numbers sweep: exceedance of |M_B - rho| >= delta must
    // decrease strictly in the block size, for both families
    struct LlnCase {
        family: &'static str,
        rho: f64,
        exceedance: Vec<f64>,
        decreasing: bool,
    }
    let mut lln_cases: Vec<(Family, f64)> = Vec::new();
    for &rho in &g.lln_densities {
        lln_cases.push((Family::Minus, rho));
        lln_cases.push((Family::Plus, rho));
    }
    let lln_results: Vec<std::result::Result<LlnCase, String>> =
        run_indexed(lln_cases.len(), threads, |j| {
            let (family, rho) = lln_cases[j];
            let lambda = lambda_of_rho(rho, family, q).map_err(|e| e.to_string())?;
            let mut exceedance = Vec::new();
            for (bi, &l) in g.lln_blocks.iter().enumerate() {
                let size = 2 * l + 1;
                let spec = GibbsSpec::free(size, family, lambda, q);
                let seed = derive_seed(base_seed, 500 + (j * 16 + bi) as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut hits = 0usize;
                for _ in 0..g.lln_samples {
                    let s = sample_chain(&spec, &mut rng).map_err(|e| e.to_string())?;
                    let m = s.iter().map(|&v| v as f64).sum::<f64>() / size as f64;
                    if (m - rho).abs() >= g.lln_delta {
                        hits += 1;
                    }
                }
                exceedance.push(hits as f64 / g.lln_samples as f64);
            }
            let decreasing = exceedance.windows(2).all(|w| w[1] < w[0]);
            Ok(LlnCase {
                family: match family {
                    Family::Minus => "minus",
                    Family::Plus => "plus",
                },
                rho,
                exceedance,
                decreasing,
            })
        });
    let mut lln_json = Vec::new();
    let mut lln_ok = true;
    for res in lln_results {
        let case = res.map_err(CliError::Runtime)?;
        lln_ok &= case.decreasing;
        lln_json.push(serde_json::json!({
            "family": case.family,
            "rho": case.rho,
            "blocks": g.lln_blocks,
            "exceedance": case.exceedance,
            "decreasing": case.decreasing,
        }));
    }

    let all_passed = tv_pass && marginal_pass && lln_ok;
    let report = out_dir.join("gibbs_report.json");
    write_json(
        &report,
        &serde_json::json!({
            "schema": 1,
            "command": "gibbs-check",
            "version": env!("CARGO_PKG_VERSION"),
            "q": q,
            "interval": g.interval,
            "samples": g.samples,
            "tv": tv_pairs
                .iter()
                .map(|(lam, tv)| serde_json::json!({ "lambda": lam, "tv_distance": tv }))
                .collect::<Vec<_>>(),
            "tv_tolerance": g.tv_tolerance,
            "tv_pass": tv_pass,
            "marginal_error_max": marginal_err_max,
            "marginal_pass": marginal_pass,
            "lln": lln_json,
            "lln_delta": g.lln_delta,
            "lln_samples": g.lln_samples,
            "lln_pass": lln_ok,
            "all_passed": all_passed,
        }),
    )?;

    Ok(GibbsCheckOutputs { report, all_passed, tv_results: tv_pairs, lln_ok })
}

/// TV distance between the sampler's histogram and the enumerated law,
/// plus the worst marginal error against enumeration.
fn tv_check(
    interval: usize,
    lambda: f64,
    q: f64,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64, f64)> {
    let spec = GibbsSpec::free(interval, Family::Plus, lambda, q);
    let probs = enumerate_probabilities(&spec).map_err(CliError::runtime)?;
    let marginals = exact_marginals(&spec).map_err(CliError::runtime)?;
    let mut marg_err = 0.0f64;
    for site in 0..interval {
        let exact: f64 = probs
            .iter()
            .enumerate()
            .filter(|(state, _)| (state >> site) & 1 == 1)
            .map(|(_, p)| p)
            .sum();
        marg_err = marg_err.max((marginals[site] - exact).abs());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hist = vec![0u64; 1 << interval];
    for _ in 0..samples {
        let s = sample_chain(&spec, &mut rng).map_err(CliError::runtime)?;
        let mut idx = 0usize;
        for (i, &v) in s.iter().enumerate() {
            idx |= (v as usize) << i;
        }
        hist[idx] += 1;
    }
    let tv = 0.5
        * hist
            .iter()
            .zip(&probs)
            .map(|(&h, &p)| (h as f64 / samples as f64 - p).abs())
            .sum::<f64>();
    Ok((lambda, tv, marg_err))
}
