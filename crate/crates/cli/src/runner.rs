//! Deterministic replica fan-out.
//!
//! Each replica derives its own seed from the base seed and its index by a
//! fixed 64-bit mix, so results are independent of the thread count; the
//! caller reduces results in index order.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut x = z;
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Stable 64-bit seed for stream `stream` derived from `base`.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    splitmix64(base ^ splitmix64(stream.wrapping_add(0xA076_1D64_78BD_642F)))
}

/// Human-readable statement of the seeding policy, recorded in manifests.
pub const SEED_POLICY: &str =
    "seed(stream) = splitmix64(base xor splitmix64(stream + 0xA0761D6478BD642F)); \
     replica r uses seed(r) with sub-streams seed(seed(r), 0) for the initial \
     configuration and seed(seed(r), 1) for the dynamics";

/// Name of the pseudo-random generator backing every stochastic component.
pub const RNG_NAME: &str = "chacha8";

/// Runs `job(0..count)` on a small worker pool and returns results in
/// index order.
pub fn run_indexed<T, F>(count: usize, threads: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let threads = threads.max(1).min(count.max(1));
    if threads == 1 {
        return (0..count).map(job).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<T>>> = (0..count).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let result = job(i);
                *slots[i].lock().unwrap() = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("worker filled every slot"))
        .collect()
}

/// Thread count: explicit flag, then the `LATGAS_THREADS` environment
/// variable, then the machine's available parallelism.
pub fn resolve_threads(flag: Option<usize>) -> usize {
    if let Some(t) = flag {
        return t.max(1);
    }
    if let Ok(env) = std::env::var("LATGAS_THREADS") {
        if let Ok(t) = env.trim().parse::<usize>() {
            return t.max(1);
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_stable_and_distinct() {
        // frozen: seed derivation must never change across releases
        assert_eq!(derive_seed(1, 0), derive_seed(1, 0));
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
        let a: Vec<u64> = (0..100).map(|r| derive_seed(42, r)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(b.len(), a.len());
    }

    #[test]
    fn pool_results_are_in_index_order_for_any_thread_count() {
        for threads in [1, 2, 3, 8] {
            let out = run_indexed(17, threads, |i| i * i);
            assert_eq!(out, (0..17).map(|i| i * i).collect::<Vec<_>>());
        }
    }
}
