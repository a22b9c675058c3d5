//! Reversibility checks: trajectories started from an exact Gibbs sample
//! stay distributed by it, so empirical statistics must match the exact
//! marginals.

use latgas_core::gibbs::{full_lattice_marginals, sample_full_lattice};
use latgas_core::kmc::SimState;
use latgas_core::model::ModelParams;
use latgas_core::observables::{interface_traces, two_block_potential_gap, InterfaceTraces};
use latgas_core::ensembles::EnsembleTable;
use latgas_core::stats::mean_se;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn time_averaged_occupations_match_exact_marginals() {
    let n = 32usize;
    let params = ModelParams::new(1.0, 2.0, 0.0, n).unwrap();
    let lambda = 0.2;
    let replicas = 300usize;
    let snapshots = [0.25, 0.5, 0.75, 1.0];
    let marginals = full_lattice_marginals(&params, lambda).unwrap();

    // per replica: time-averaged occupation per site
    let mut per_replica: Vec<Vec<f64>> = Vec::with_capacity(replicas);
    for r in 0..replicas {
        let mut rng = ChaCha8Rng::seed_from_u64(9000 + r as u64);
        let cfg0 = sample_full_lattice(&params, lambda, &mut rng).unwrap();
        let mut sim = SimState::new(&params, cfg0, 77_000 + r as u64).unwrap();
        let snaps = sim.run_until(1.0, &snapshots).unwrap();
        let mut avg = vec![0.0f64; params.lattice_len()];
        for cfg in &snaps.configs {
            for (i, &v) in cfg.occupancies().iter().enumerate() {
                avg[i] += v as f64;
            }
        }
        for v in &mut avg {
            *v /= snapshots.len() as f64;
        }
        per_replica.push(avg);
    }

    let mut violations = 0usize;
    let sites = params.lattice_len();
    let mut column = vec![0.0f64; replicas];
    for site in 0..sites {
        for (r, prof) in per_replica.iter().enumerate() {
            column[r] = prof[site];
        }
        let (mean, se) = mean_se(&column);
        if (mean - marginals[site]).abs() > 3.0 * se.max(1e-12) {
            violations += 1;
        }
    }
    // ~0.3% of sites expected outside 3σ; allow a small margin
    assert!(
        violations as f64 <= 0.05 * sites as f64,
        "{violations} of {sites} sites outside 3 standard errors"
    );
}

#[test]
fn equilibrium_interface_traces_and_potential_gaps() {
    let n = 64usize;
    let l = 8usize;
    let params = ModelParams::new(1.0, 2.0, 0.0, n).unwrap();
    let table = EnsembleTable::from_params(&params);
    let lambda = 0.1;
    let replicas = 150usize;

    let marginals = full_lattice_marginals(&params, lambda).unwrap();
    let block_mean = |center: i64| -> f64 {
        let li = l as i64;
        let mut acc = 0.0;
        for x in center - li..=center + li {
            acc += marginals[(x + n as i64) as usize];
        }
        acc / (2 * l + 1) as f64
    };
    let ni = n as i64;
    let li = l as i64;
    let expected = [
        block_mean(-li - 1),
        block_mean(li + 1),
        block_mean(ni - li - 1),
        block_mean(ni + li + 2),
    ];

    let mut observed: [Vec<f64>; 4] = Default::default();
    for r in 0..replicas {
        let mut rng = ChaCha8Rng::seed_from_u64(31_000 + r as u64);
        let cfg0 = sample_full_lattice(&params, lambda, &mut rng).unwrap();
        let mut sim = SimState::new(&params, cfg0, 55_000 + r as u64).unwrap();
        let snaps = sim.run_until(0.3, &[0.3]).unwrap();
        let traces = interface_traces(&snaps.configs[0], l).unwrap();
        for (slot, v) in observed.iter_mut().zip(traces.as_array()) {
            slot.push(v);
        }
    }

    let mut means = [0.0f64; 4];
    for (k, slot) in observed.iter().enumerate() {
        let (mean, se) = mean_se(slot);
        means[k] = mean;
        assert!(
            (mean - expected[k]).abs() <= 4.0 * se,
            "trace {k}: {mean} vs {} (se {se})",
            expected[k]
        );
    }

    // the replica-mean traces carry matching chemical potentials
    let traces = InterfaceTraces {
        left_of_zero: means[0],
        right_of_zero: means[1],
        left_of_one: means[2],
        right_of_one: means[3],
    };
    let gaps = two_block_potential_gap(&traces, &table).unwrap();
    assert!(gaps.gap0 < 0.1 && gaps.gap1 < 0.1, "{gaps:?}");
}

#[test]
fn block_density_distribution_is_time_invariant() {
    // two-sample KS between block densities at t = 0 and t = 0.5
    let n = 32usize;
    let params = ModelParams::new(1.0, 2.0, 0.0, n).unwrap();
    let lambda = 0.0;
    let replicas = 400usize;
    let mut at_zero = Vec::with_capacity(replicas);
    let mut at_half = Vec::with_capacity(replicas);
    for r in 0..replicas {
        let mut rng = ChaCha8Rng::seed_from_u64(4_100 + r as u64);
        let cfg0 = sample_full_lattice(&params, lambda, &mut rng).unwrap();
        let mut sim = SimState::new(&params, cfg0, 8_800 + r as u64).unwrap();
        let snaps = sim.run_until(0.5, &[0.0, 0.5]).unwrap();
        let l = 4usize;
        at_zero
            .push(latgas_core::observables::block_density(&snaps.configs[0], n as i64 / 2, l).unwrap());
        at_half
            .push(latgas_core::observables::block_density(&snaps.configs[1], n as i64 / 2, l).unwrap());
    }
    let d = latgas_core::stats::ks_statistic(&at_zero, &at_half);
    let crit = latgas_core::stats::ks_critical(0.01, replicas, replicas);
    assert!(d < crit, "KS statistic {d} exceeds the 1% threshold {crit}");
}
