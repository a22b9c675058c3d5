//! Empirical densities paired against test functions, block densities,
//! interface traces, and replica statistics.
//!
//! The empirical pairing of a configuration with `G` is
//! `⟨π, G⟩ = (1/N) Σ_x G(x/N) η_x`. Its truncated variant `π^{N,k}` drops
//! the `k` sites nearest each of the four macroscopic edges `-1, 0, 1, 2`,
//! and the averaged variant is the literal double Cesàro mean
//! `π̃^{N,k} = (1/k) Σ_{m=1}^{k-1} (1/m) Σ_{j=1}^{m-1} π^{N,j}`,
//! kept with exactly these index ranges (the `m = 1` term is empty, and
//! the total weight is below one for finite `k`).

use crate::ensembles::{clamp_density, EnsembleTable, DENSITY_CLAMP};
use crate::model::Configuration;
use crate::stats::mean_se;
use crate::{Error, Result};

/// Twice differentiable function on `[-1, 2]` vanishing at the anchor
/// points `-1, 0, 1, 2`.
pub struct TestFunction {
    name: String,
    f: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    d1: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    d2: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl TestFunction {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        for anchor in [-1.0, 0.0, 1.0, 2.0] {
            let v = f(anchor);
            if v.abs() > 1e-12 {
                return Err(Error::AnchorViolation { at: anchor, value: v });
            }
        }
        Ok(Self { name: name.into(), f: Box::new(f), d1: Box::new(d1), d2: Box::new(d2) })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    pub fn deriv(&self, u: f64) -> f64 {
        (self.d1)(u)
    }

    pub fn second_deriv(&self, u: f64) -> f64 {
        (self.d2)(u)
    }

    /// `sin(mπu)`, which vanishes at all four anchors for integer `m`.
    pub fn sine_mode(m: u32) -> Self {
        let w = m as f64 * std::f64::consts::PI;
        Self::new(
            format!("sin({m}.pi.u)"),
            move |u| (w * u).sin(),
            move |u| w * (w * u).cos(),
            move |u| -w * w * (w * u).sin(),
        )
        .expect("sine modes vanish at the anchors")
    }

    /// Compactly supported `C²` bump `(1 - s²)³` with `s = (u-c)/w`.
    pub fn bump(center: f64, halfwidth: f64) -> Result<Self> {
        let (c, w) = (center, halfwidth);
        Self::new(
            format!("bump({c},{w})"),
            move |u| {
                let s = (u - c) / w;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    let t = 1.0 - s * s;
                    t * t * t
                }
            },
            move |u| {
                let s = (u - c) / w;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    let t = 1.0 - s * s;
                    -6.0 * s * t * t / w
                }
            },
            move |u| {
                let s = (u - c) / w;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    let t = 1.0 - s * s;
                    t * (30.0 * s * s - 6.0) / (w * w)
                }
            },
        )
    }

    /// The fixed comparison battery: four sine modes plus two bumps per
    /// macroscopic subinterval.
    pub fn battery() -> Vec<TestFunction> {
        let mut out: Vec<TestFunction> = (1..=4).map(TestFunction::sine_mode).collect();
        for c in [-0.7, -0.3, 0.3, 0.7, 1.3, 1.7] {
            out.push(TestFunction::bump(c, 0.25).expect("bump supports avoid the anchors"));
        }
        out
    }
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction").field("name", &self.name).finish()
    }
}

/// `⟨π^N, G⟩ = (1/N) Σ_{x=-N}^{2N} G(x/N) η_x`.
pub fn pair_empirical(cfg: &Configuration, g: &TestFunction) -> f64 {
    let n = cfg.n_sites() as f64;
    let mut acc = 0.0;
    for (x, occ) in cfg.sites() {
        if occ == 1 {
            acc += g.eval(x as f64 / n);
        }
    }
    acc / n
}

/// Truncation windows of `π^{N,k}`: the parts of the three regions at
/// distance at least `k` from every macroscopic edge.
fn truncation_windows(n: i64, k: i64) -> [(i64, i64); 3] {
    [(-n + k, -k), (k, n - k), (n + k, 2 * n - k)]
}

/// `⟨π^{N,k}, G⟩`: the pairing restricted to the truncation windows.
/// Windows may be empty for large `k`; they contribute zero.
pub fn truncated_empirical(cfg: &Configuration, g: &TestFunction, k: usize) -> Result<f64> {
    let n = cfg.n_sites();
    if k < 1 || k > n {
        return Err(Error::InvalidWindow { k, n, reason: "need 1 <= k <= N" });
    }
    let nf = n as f64;
    let mut acc = 0.0;
    for (lo, hi) in truncation_windows(n as i64, k as i64) {
        for x in lo..=hi {
            if cfg.get(x) == 1 {
                acc += g.eval(x as f64 / nf);
            }
        }
    }
    Ok(acc / nf)
}

/// `⟨π̃^{N,k}, G⟩` with the literal index ranges
/// `(1/k) Σ_{m=1}^{k-1} (1/m) Σ_{j=1}^{m-1} ⟨π^{N,j}, G⟩`.
pub fn averaged_empirical(cfg: &Configuration, g: &TestFunction, k: usize) -> Result<f64> {
    let n = cfg.n_sites();
    if k < 3 || k > n / 2 {
        return Err(Error::InvalidWindow { k, n, reason: "need 3 <= k <= N/2" });
    }
    let mut truncated = vec![0.0; k - 1]; // truncated[j] for j = 1..=k-2
    for j in 1..=k - 2 {
        truncated[j] = truncated_empirical(cfg, g, j)?;
    }
    let mut acc = 0.0;
    for m in 1..=k - 1 {
        let mut inner = 0.0;
        for j in 1..m {
            inner += truncated[j];
        }
        acc += inner / m as f64;
    }
    Ok(acc / k as f64)
}

/// Per-site multiplicities of the double Cesàro average: site `x` (indexed
/// from `-N`) carries weight `(1/k) Σ_{m=1}^{k-1} (1/m) Σ_{j=1}^{m-1} 1{x ∈ W_j}`,
/// so that `⟨π̃^{N,k}, G⟩ = (1/N) Σ_x weight_x G(x/N) η_x`. Applying the
/// same weights to two density profiles makes their pairings directly
/// comparable.
pub fn cesaro_site_weights(n: usize, k: usize) -> Result<Vec<f64>> {
    if k < 3 || k > n / 2 {
        return Err(Error::InvalidWindow { k, n, reason: "need 3 <= k <= N/2" });
    }
    // coefficient of π^{N,j}: (1/k) Σ_{m=j+1}^{k-1} 1/m, cumulated over j
    let mut coeff = vec![0.0f64; k - 1];
    for j in 1..=k - 2 {
        let mut c = 0.0;
        for m in j + 1..=k - 1 {
            c += 1.0 / m as f64;
        }
        coeff[j] = c / k as f64;
    }
    let mut prefix = vec![0.0f64; k];
    for j in 1..=k - 2 {
        prefix[j] = prefix[j - 1] + coeff[j];
    }
    prefix[k - 1] = prefix[k - 2];
    let ni = n as i64;
    let weights = (0..=3 * ni)
        .map(|i| {
            let x = i - ni;
            // windows are nested in j; the site belongs to W_j iff j <= j_max
            let j_max = if x < 0 {
                (x + ni).min(-x)
            } else if x <= ni {
                x.min(ni - x)
            } else {
                (x - ni).min(2 * ni - x)
            };
            let j_max = j_max.clamp(0, k as i64 - 2) as usize;
            prefix[j_max]
        })
        .collect();
    Ok(weights)
}

/// Block density `M_{B_l(center)}`: particle fraction of the `2l+1` sites
/// centred at `center`.
pub fn block_density(cfg: &Configuration, center: i64, l: usize) -> Result<f64> {
    let li = l as i64;
    if center - li < cfg.min_site() || center + li > cfg.max_site() {
        return Err(Error::BlockOutOfLattice { center, l });
    }
    let mut count = 0u64;
    for x in center - li..=center + li {
        count += cfg.get(x) as u64;
    }
    Ok(count as f64 / (2 * l + 1) as f64)
}

/// Block-density estimates of the one-sided limits at the two interfaces:
/// the innermost blocks that fit inside each adjacent region, avoiding the
/// sites touched by the boundary bonds where possible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceTraces {
    /// `ρ̂(0-)`: block centred at `-l-1` (left reservoir).
    pub left_of_zero: f64,
    /// `ρ̂(0+)`: block centred at `l+1` (bulk).
    pub right_of_zero: f64,
    /// `ρ̂(1-)`: block centred at `N-l-1` (bulk).
    pub left_of_one: f64,
    /// `ρ̂(1+)`: block centred at `N+l+2` (right reservoir).
    pub right_of_one: f64,
}

impl InterfaceTraces {
    pub fn as_array(&self) -> [f64; 4] {
        [self.left_of_zero, self.right_of_zero, self.left_of_one, self.right_of_one]
    }
}

pub fn interface_traces(cfg: &Configuration, l: usize) -> Result<InterfaceTraces> {
    let n = cfg.n_sites();
    if l < 1 || l > n / 4 {
        return Err(Error::InvalidWindow { k: l, n, reason: "need 1 <= l <= N/4" });
    }
    let ni = n as i64;
    let li = l as i64;
    Ok(InterfaceTraces {
        left_of_zero: block_density(cfg, -li - 1, l)?,
        right_of_zero: block_density(cfg, li + 1, l)?,
        left_of_one: block_density(cfg, ni - li - 1, l)?,
        right_of_one: block_density(cfg, ni + li + 2, l)?,
    })
}

/// Chemical-potential mismatches across the interfaces, evaluated on trace
/// estimates: `gap0 = |λ⁻(ρ̂(0-)) - λ⁺(ρ̂(0+))|` and
/// `gap1 = |λ⁺(ρ̂(1-)) - λ⁻(ρ̂(1+))|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialGaps {
    pub gap0: f64,
    pub gap1: f64,
    /// Set when a trace had to be clamped away from `{0, 1}`.
    pub clamped: bool,
}

pub fn two_block_potential_gap(
    traces: &InterfaceTraces,
    table: &EnsembleTable,
) -> Result<PotentialGaps> {
    let vals = traces.as_array();
    let clamped = vals
        .iter()
        .any(|&v| !(DENSITY_CLAMP..=1.0 - DENSITY_CLAMP).contains(&v));
    let c: Vec<f64> = vals.iter().map(|&v| clamp_density(v)).collect();
    let gap0 = (table.lambda_minus(c[0])? - table.lambda_plus(c[1])?).abs();
    let gap1 = (table.lambda_plus(c[2])? - table.lambda_minus(c[3])?).abs();
    Ok(PotentialGaps { gap0, gap1, clamped })
}

/// Density profile on a fixed grid with pointwise standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    pub positions: Vec<f64>,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

/// Pointwise mean and standard error across replicas; replicas must share
/// the grid and the result is deterministic in the given replica order.
pub fn replica_mean_profile(positions: &[f64], replicas: &[Vec<f64>]) -> Result<DensityProfile> {
    if replicas.len() < 2 {
        return Err(Error::GridMismatch("need at least two replicas".into()));
    }
    if replicas.iter().any(|r| r.len() != positions.len()) {
        return Err(Error::GridMismatch("replica grids differ in length".into()));
    }
    let mut mean = Vec::with_capacity(positions.len());
    let mut se = Vec::with_capacity(positions.len());
    let mut column = vec![0.0; replicas.len()];
    for j in 0..positions.len() {
        for (i, r) in replicas.iter().enumerate() {
            column[i] = r[j];
        }
        let (m, s) = mean_se(&column);
        mean.push(m);
        se.push(s);
    }
    Ok(DensityProfile { positions: positions.to_vec(), mean, se })
}
