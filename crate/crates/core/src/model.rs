//! Configurations, the bond Hamiltonian, region layout, and exchange rates.
//!
//! The lattice covers the sites `x ∈ {-N, …, 2N}`. Bonds are labelled by
//! their left site `x ∈ {-N, …, 2N-1}` and fall into three classes:
//!
//! * `FiniteRange` (`1 ≤ x ≤ N-2`): rate
//!   `η_x(1-η_{x+1})(θ + α η_{x-1} + β η_{x+2}) + η_{x+1}(1-η_x)(θ + α η_{x+2} + β η_{x-1})`;
//! * `Boundary` (`x ∈ {-1, 0, N-1, N}`): symmetric-exclusion rate times
//!   `exp(-ΔH/2)`, where `ΔH` is the energy change of the swap;
//! * `Ssep` (everything else): unit rate whenever the bond is occupied on
//!   exactly one side.
//!
//! The Hamiltonian charges `q = ln((θ+α)/(θ+β))` per occupied bond among
//! `x ∈ {0, …, N-1}`. Every rate satisfies exact detailed balance with
//! respect to it: `c(η) e^{ΔH(η)} = c(η^{x,x+1})`.

use crate::{Error, Result};

/// Region of a site: the two reservoirs and the interacting bulk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Sites `-N..=-1`.
    LeftReservoir,
    /// Sites `0..=N`.
    Bulk,
    /// Sites `N+1..=2N`.
    RightReservoir,
}

/// Classification of the bond `(x, x+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondKind {
    Ssep,
    FiniteRange,
    Boundary,
}

/// Rate parameters `(θ, α, β)` and the lattice size `N`.
///
/// `θ` must be strictly positive (an isolated particle hops at rate `θ`, so
/// non-degeneracy of the rates requires it), and `θ+α`, `θ+β`, `θ+α+β` must
/// all be positive so that every occupied window moves at a positive rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    theta: f64,
    alpha: f64,
    beta: f64,
    n: usize,
    q: f64,
}

impl ModelParams {
    pub fn new(theta: f64, alpha: f64, beta: f64, n: usize) -> Result<Self> {
        for (name, v) in [("theta", theta), ("alpha", alpha), ("beta", beta)] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} = {v} is not finite")));
            }
        }
        if theta <= 0.0 {
            return Err(Error::InvalidParams(format!("theta = {theta} must be > 0")));
        }
        if theta + alpha <= 0.0 || theta + beta <= 0.0 || theta + alpha + beta <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "need theta+alpha > 0, theta+beta > 0, theta+alpha+beta > 0 \
                 (got {}, {}, {})",
                theta + alpha,
                theta + beta,
                theta + alpha + beta
            )));
        }
        if n < 4 {
            return Err(Error::InvalidParams(format!("N = {n} must be at least 4")));
        }
        let q = ((theta + alpha) / (theta + beta)).ln();
        Ok(Self { theta, alpha, beta, n, q })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Pair coupling `q = ln((θ+α)/(θ+β))`; zero exactly when `α = β`.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// Lattice scale `N`; the lattice covers `-N..=2N`.
    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn min_site(&self) -> i64 {
        -(self.n as i64)
    }

    pub fn max_site(&self) -> i64 {
        2 * self.n as i64
    }

    /// Number of lattice sites, `3N + 1`.
    pub fn lattice_len(&self) -> usize {
        3 * self.n + 1
    }

    pub fn min_bond(&self) -> i64 {
        self.min_site()
    }

    pub fn max_bond(&self) -> i64 {
        self.max_site() - 1
    }

    /// Number of bonds, `3N`.
    pub fn bond_count(&self) -> usize {
        3 * self.n
    }

    pub fn region_of(&self, x: i64) -> Result<Region> {
        self.check_site(x)?;
        let n = self.n as i64;
        Ok(if x < 0 {
            Region::LeftReservoir
        } else if x <= n {
            Region::Bulk
        } else {
            Region::RightReservoir
        })
    }

    pub fn bond_kind(&self, x: i64) -> Result<BondKind> {
        self.check_bond(x)?;
        Ok(self.bond_kind_unchecked(x))
    }

    pub(crate) fn bond_kind_unchecked(&self, x: i64) -> BondKind {
        let n = self.n as i64;
        if x == -1 || x == 0 || x == n - 1 || x == n {
            BondKind::Boundary
        } else if x >= 1 && x <= n - 2 {
            BondKind::FiniteRange
        } else {
            BondKind::Ssep
        }
    }

    pub(crate) fn check_site(&self, x: i64) -> Result<()> {
        if x < self.min_site() || x > self.max_site() {
            return Err(Error::SiteOutOfRange {
                site: x,
                min: self.min_site(),
                max: self.max_site(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_bond(&self, x: i64) -> Result<()> {
        if x < self.min_bond() || x > self.max_bond() {
            return Err(Error::SiteOutOfRange {
                site: x,
                min: self.min_bond(),
                max: self.max_bond(),
            });
        }
        Ok(())
    }
}

/// Occupancy vector over the sites `-N..=2N`, entries in `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    occ: Vec<u8>,
    n: usize,
}

impl Configuration {
    /// The empty configuration for a lattice of scale `N`.
    pub fn empty(n: usize) -> Self {
        Self { occ: vec![0; 3 * n + 1], n }
    }

    /// Builds a configuration from raw occupancies indexed from site `-N`.
    pub fn from_occupancies(occ: Vec<u8>, n: usize) -> Result<Self> {
        if occ.len() != 3 * n + 1 {
            return Err(Error::InvalidParams(format!(
                "occupancy vector has length {}, lattice needs {}",
                occ.len(),
                3 * n + 1
            )));
        }
        if occ.iter().any(|&v| v > 1) {
            return Err(Error::InvalidParams("occupancies must be 0 or 1".into()));
        }
        Ok(Self { occ, n })
    }

    /// Fills each site `x` from `f(x)`.
    pub fn from_fn(n: usize, mut f: impl FnMut(i64) -> u8) -> Self {
        let mut cfg = Self::empty(n);
        for x in -(n as i64)..=(2 * n as i64) {
            let v = f(x);
            cfg.occ[(x + n as i64) as usize] = (v != 0) as u8;
        }
        cfg
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn min_site(&self) -> i64 {
        -(self.n as i64)
    }

    pub fn max_site(&self) -> i64 {
        2 * self.n as i64
    }

    #[inline]
    fn idx(&self, x: i64) -> usize {
        (x + self.n as i64) as usize
    }

    /// Occupancy of site `x`; panics outside the lattice.
    #[inline]
    pub fn get(&self, x: i64) -> u8 {
        self.occ[self.idx(x)]
    }

    /// Occupancy of site `x`, with missing sites outside the lattice read
    /// as empty. This makes 4-site rate windows total at the lattice ends.
    #[inline]
    pub fn get_clamped(&self, x: i64) -> u8 {
        if x < self.min_site() || x > self.max_site() {
            0
        } else {
            self.occ[self.idx(x)]
        }
    }

    pub fn set(&mut self, x: i64, v: u8) {
        let i = self.idx(x);
        self.occ[i] = (v != 0) as u8;
    }

    /// Total particle number over the whole lattice.
    pub fn particle_count(&self) -> usize {
        self.occ.iter().map(|&v| v as usize).sum()
    }

    /// Raw occupancies indexed from site `-N`.
    pub fn occupancies(&self) -> &[u8] {
        &self.occ
    }

    /// Iterates `(site, occupancy)` pairs in site order.
    pub fn sites(&self) -> impl Iterator<Item = (i64, u8)> + '_ {
        let n = self.n as i64;
        self.occ.iter().enumerate().map(move |(i, &v)| (i as i64 - n, v))
    }

    #[inline]
    pub(crate) fn swap_bond_unchecked(&mut self, x: i64) {
        let i = self.idx(x);
        self.occ.swap(i, i + 1);
    }
}

/// Energy `H(η) = q Σ_{x=0}^{N-1} η_x η_{x+1}`.
pub fn hamiltonian(cfg: &Configuration, params: &ModelParams) -> f64 {
    let n = params.n_sites() as i64;
    let mut bonds = 0u64;
    for x in 0..n {
        bonds += (cfg.get(x) & cfg.get(x + 1)) as u64;
    }
    params.q() * bonds as f64
}

/// Energy change `H(η^{x,x+1}) - H(η)` of swapping the bond `(x, x+1)`,
/// computed from the four-site window around the bond.
pub fn delta_h_swap(cfg: &Configuration, x: i64, params: &ModelParams) -> Result<f64> {
    params.check_bond(x)?;
    Ok(delta_h_swap_unchecked(cfg, x, params))
}

#[inline]
pub(crate) fn delta_h_swap_unchecked(cfg: &Configuration, x: i64, params: &ModelParams) -> f64 {
    params.q() * delta_h_units(cfg, x, params.n_sites() as i64) as f64
}

/// Swap energy change in units of `q`: only the bonds `(x-1, x)` and
/// `(x+1, x+2)` that lie inside the Hamiltonian's range react to a swap at
/// `(x, x+1)`; the bond `(x, x+1)` itself is symmetric under the swap.
#[inline]
fn delta_h_units(cfg: &Configuration, x: i64, n: i64) -> i64 {
    let a = cfg.get(x) as i64;
    let b = cfg.get(x + 1) as i64;
    if a == b {
        return 0;
    }
    let mut units = 0;
    if x >= 1 && x <= n {
        units += cfg.get(x - 1) as i64 * (b - a);
    }
    if x >= -1 && x <= n - 2 {
        units += cfg.get(x + 2) as i64 * (a - b);
    }
    units
}

/// Exchange rate `c_{x,x+1}(η)`; zero exactly when `η_x = η_{x+1}`.
pub fn bond_rate(cfg: &Configuration, x: i64, params: &ModelParams) -> Result<f64> {
    params.check_bond(x)?;
    Ok(RateContext::new(params).bond_rate(cfg, x))
}

/// Returns the configuration with `η_x` and `η_{x+1}` exchanged.
pub fn swap(cfg: &Configuration, x: i64, params: &ModelParams) -> Result<Configuration> {
    params.check_bond(x)?;
    let mut out = cfg.clone();
    out.swap_bond_unchecked(x);
    Ok(out)
}

/// Precomputed constants for fast rate evaluation inside the simulator.
#[derive(Debug, Clone)]
pub(crate) struct RateContext {
    params: ModelParams,
    /// `exp(-ΔH/2)` for `ΔH/q ∈ {-1, 0, 1}`, indexed by `ΔH/q + 1`.
    boundary_factor: [f64; 3],
}

impl RateContext {
    pub(crate) fn new(params: &ModelParams) -> Self {
        let half_q = 0.5 * params.q();
        Self {
            params: *params,
            boundary_factor: [half_q.exp(), 1.0, (-half_q).exp()],
        }
    }

    pub(crate) fn params(&self) -> &ModelParams {
        &self.params
    }

    #[inline]
    pub(crate) fn bond_rate(&self, cfg: &Configuration, x: i64) -> f64 {
        let a = cfg.get(x);
        let b = cfg.get(x + 1);
        if a == b {
            return 0.0;
        }
        match self.params.bond_kind_unchecked(x) {
            BondKind::Ssep => 1.0,
            BondKind::FiniteRange => {
                let left = cfg.get(x - 1) as f64;
                let right = cfg.get(x + 2) as f64;
                let p = &self.params;
                if a == 1 {
                    p.theta + p.alpha * left + p.beta * right
                } else {
                    p.theta + p.alpha * right + p.beta * left
                }
            }
            BondKind::Boundary => {
                let units = delta_h_units(cfg, x, self.params.n_sites() as i64);
                self.boundary_factor[(units + 1) as usize]
            }
        }
    }
}
