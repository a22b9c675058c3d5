//! Conservative finite-volume solver for the macroscopic system.
//!
//! Three unit-length regions discretize `(-1,0) ∪ (0,1) ∪ (1,2)` with `M`
//! cells each. The reservoirs diffuse linearly (`∂_t ρ = ∂²_u ρ`), the bulk
//! nonlinearly (`∂_t ρ = ∂²_u Φ(ρ)`). External edges carry zero flux. At
//! the two interior interfaces a trace pair `(ρ*_L, ρ*_R)` is solved for a
//! single chemical potential `λ*` — enforcing `λ_L(ρ*_L) = λ_R(ρ*_R)` by
//! construction — such that the two half-cell fluxes agree; the common
//! value is used as the edge flux. When both sides share a family the
//! construction collapses to the standard central difference.

use crate::ensembles::{clamp_density, EnsembleTable, Family};
use crate::observables::TestFunction;
use crate::{Error, Result};

/// Left edges of the three regions; each region has unit length.
pub const REGION_LEFT: [f64; 3] = [-1.0, 0.0, 1.0];

/// Ensemble family of each region.
pub const REGION_FAMILY: [Family; 3] = [Family::Minus, Family::Plus, Family::Minus];

/// Flux map entering `∂²_u φ(ρ)` on a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionFlux {
    /// Reservoirs: `φ(ρ) = ρ`.
    Identity,
    /// Bulk: `φ(ρ) = Φ(ρ)`.
    Bulk,
}

impl RegionFlux {
    pub fn of_region(region: usize) -> Self {
        if region == 1 {
            RegionFlux::Bulk
        } else {
            RegionFlux::Identity
        }
    }

    #[inline]
    pub fn phi(&self, table: &EnsembleTable, rho: f64) -> f64 {
        match self {
            RegionFlux::Identity => rho,
            RegionFlux::Bulk => table
                .phi(rho.clamp(0.0, 1.0))
                .expect("cell densities stay in the unit interval"),
        }
    }

    #[inline]
    pub fn phi_slope(&self, table: &EnsembleTable, rho: f64) -> f64 {
        match self {
            RegionFlux::Identity => 1.0,
            RegionFlux::Bulk => table
                .phi_slope(rho.clamp(0.0, 1.0))
                .expect("cell densities stay in the unit interval"),
        }
    }
}

/// The family and flux map on both sides of an interior interface.
#[derive(Debug, Clone, Copy)]
pub struct InterfaceCoupler {
    pub left_family: Family,
    pub right_family: Family,
    pub left_flux: RegionFlux,
    pub right_flux: RegionFlux,
}

impl InterfaceCoupler {
    /// The interface at `u = 0` (reservoir | bulk).
    pub fn at_zero() -> Self {
        Self {
            left_family: Family::Minus,
            right_family: Family::Plus,
            left_flux: RegionFlux::Identity,
            right_flux: RegionFlux::Bulk,
        }
    }

    /// The interface at `u = 1` (bulk | reservoir).
    pub fn at_one() -> Self {
        Self {
            left_family: Family::Plus,
            right_family: Family::Minus,
            left_flux: RegionFlux::Bulk,
            right_flux: RegionFlux::Identity,
        }
    }
}

/// Solved interface state: the matched potential, its trace pair, and the
/// common edge flux.
#[derive(Debug, Clone, Copy)]
pub struct InterfaceSolution {
    pub flux: f64,
    pub lambda: f64,
    pub trace_left: f64,
    pub trace_right: f64,
}

/// Solves for the single potential `λ*` whose traces
/// `ρ*_L = ρ_L(λ*)`, `ρ*_R = ρ_R(λ*)` equalize the half-cell gradients
/// `[φ_L(ρ*_L) - φ_L(ρ_left)] / (du/2)` and
/// `[φ_R(ρ_right) - φ_R(ρ*_R)] / (du/2)`,
/// and returns the resulting common flux. The defect is strictly
/// increasing in `λ*`, so the root is unique; a warm start from the
/// previous solve cuts the Newton iterations.
pub fn interface_flux(
    rho_left: f64,
    rho_right: f64,
    coupler: &InterfaceCoupler,
    du: f64,
    table: &EnsembleTable,
    warm: Option<f64>,
) -> Result<InterfaceSolution> {
    if !(0.0..=1.0).contains(&rho_left) || !(0.0..=1.0).contains(&rho_right) {
        return Err(Error::DensityOutOfRange {
            value: if (0.0..=1.0).contains(&rho_left) { rho_right } else { rho_left },
        });
    }
    let q = table.q();
    let phi_l = coupler.left_flux.phi(table, rho_left);
    let phi_r = coupler.right_flux.phi(table, rho_right);
    let defect = |lam: f64| {
        let tl = crate::ensembles::rho_of_lambda(lam, coupler.left_family, q);
        let tr = crate::ensembles::rho_of_lambda(lam, coupler.right_family, q);
        (coupler.left_flux.phi(table, tl) - phi_l) + (coupler.right_flux.phi(table, tr) - phi_r)
    };
    let slope = |lam: f64| {
        let tl = crate::ensembles::rho_of_lambda(lam, coupler.left_family, q);
        let tr = crate::ensembles::rho_of_lambda(lam, coupler.right_family, q);
        coupler.left_flux.phi_slope(table, tl) * table.rho_slope(lam, coupler.left_family)
            + coupler.right_flux.phi_slope(table, tr) * table.rho_slope(lam, coupler.right_family)
    };

    let lam_l = table.lambda(clamp_density(rho_left), coupler.left_family)?;
    let lam_r = table.lambda(clamp_density(rho_right), coupler.right_family)?;
    let mut lo = lam_l.min(lam_r);
    let mut hi = lam_l.max(lam_r);
    // widen degenerate brackets so the root never sits on an endpoint
    let pad = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
    lo -= pad;
    hi += pad;
    // the defect is increasing: saturate when no sign change exists
    // (possible only with clamped near-vacuum or near-full cells)
    let mut lambda = if defect(lo) > 0.0 {
        lo
    } else if defect(hi) < 0.0 {
        hi
    } else {
        let mut lambda = match warm {
            Some(w) if w > lo && w < hi => w,
            _ => 0.5 * (lo + hi),
        };
        for _ in 0..100 {
            let f = defect(lambda);
            if f > 0.0 {
                hi = lambda;
            } else {
                lo = lambda;
            }
            let mut next = lambda - f / slope(lambda);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - lambda).abs() <= 1e-15 * (1.0 + lambda.abs()) {
                lambda = next;
                break;
            }
            lambda = next;
        }
        lambda
    };
    // polish once from the bracket midpoint if the loop exited on it
    if !lambda.is_finite() {
        lambda = 0.5 * (lo + hi);
    }
    let trace_left = crate::ensembles::rho_of_lambda(lambda, coupler.left_family, q);
    let trace_right = crate::ensembles::rho_of_lambda(lambda, coupler.right_family, q);
    let grad = (coupler.left_flux.phi(table, trace_left) - phi_l) / (0.5 * du);
    Ok(InterfaceSolution { flux: -grad, lambda, trace_left, trace_right })
}

/// Flat-potential stationary state: solves
/// `2 ρ⁻(λ*) + ρ⁺(λ*) = total_mass` and returns `λ*` with the piecewise
/// densities `(ρ⁻, ρ⁺, ρ⁻)`.
pub fn stationary_profile(total_mass: f64, table: &EnsembleTable) -> Result<(f64, [f64; 3])> {
    if !(total_mass > 0.0 && total_mass < 3.0) {
        return Err(Error::MassOutOfRange { value: total_mass });
    }
    let h = |lam: f64| 2.0 * table.rho_minus(lam) + table.rho_plus(lam) - total_mass;
    let mut lo = -40.0;
    let mut hi = 40.0;
    while h(lo) > 0.0 && lo > -320.0 {
        lo *= 2.0;
    }
    while h(hi) < 0.0 && hi < 320.0 {
        hi *= 2.0;
    }
    let mut lam = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = h(lam);
        if f > 0.0 {
            hi = lam;
        } else {
            lo = lam;
        }
        let slope = 2.0 * table.rho_slope(lam, Family::Minus) + table.rho_slope(lam, Family::Plus);
        let mut next = lam - f / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - lam).abs() <= 1e-16 * (1.0 + lam.abs()) {
            lam = next;
            break;
        }
        lam = next;
    }
    Ok((lam, [table.rho_minus(lam), table.rho_plus(lam), table.rho_minus(lam)]))
}

/// Snapshots of the solver state on its cell grid.
#[derive(Debug, Clone)]
pub struct PdeSeries {
    pub cells_per_region: usize,
    pub times: Vec<f64>,
    pub states: Vec<[Vec<f64>; 3]>,
}

impl PdeSeries {
    pub fn du(&self) -> f64 {
        1.0 / self.cells_per_region as f64
    }

    pub fn cell_centers(&self, region: usize) -> Vec<f64> {
        let du = self.du();
        (0..self.cells_per_region)
            .map(|i| REGION_LEFT[region] + (i as f64 + 0.5) * du)
            .collect()
    }

    /// Piecewise-linear interpolation between cell centres inside a region,
    /// constant beyond the outermost centres.
    pub fn interpolate(&self, state_idx: usize, region: usize, u: f64) -> f64 {
        let cells = &self.states[state_idx][region];
        let m = self.cells_per_region;
        let du = self.du();
        let s = (u - REGION_LEFT[region]) / du - 0.5;
        if s <= 0.0 {
            return cells[0];
        }
        if s >= (m - 1) as f64 {
            return cells[m - 1];
        }
        let i = s.floor() as usize;
        let w = s - i as f64;
        cells[i] * (1.0 - w) + cells[i + 1] * w
    }
}

/// Solver state on the three-region grid.
#[derive(Debug, Clone)]
pub struct PdeState {
    table: EnsembleTable,
    m: usize,
    du: f64,
    rho: [Vec<f64>; 3],
    t: f64,
    safety: f64,
    warm: [Option<f64>; 2],
}

/// 5-point Gauss–Legendre rule on [-1, 1].
const GAUSS_NODES: [f64; 5] = [
    -0.906179845938664,
    -0.538469310105683,
    0.0,
    0.538469310105683,
    0.906179845938664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.236926885056189,
    0.478628670499366,
    0.568888888888889,
    0.478628670499366,
    0.236926885056189,
];

impl PdeState {
    /// Initializes cell averages of `rho0(region, u)` by 5-point Gauss
    /// quadrature per cell.
    pub fn new(
        table: EnsembleTable,
        cells_per_region: usize,
        rho0: &dyn Fn(usize, f64) -> f64,
    ) -> Result<Self> {
        if cells_per_region < 2 {
            return Err(Error::InvalidParams("need at least two cells per region".into()));
        }
        let m = cells_per_region;
        let du = 1.0 / m as f64;
        let mut rho: [Vec<f64>; 3] = [vec![0.0; m], vec![0.0; m], vec![0.0; m]];
        for region in 0..3 {
            for i in 0..m {
                let left = REGION_LEFT[region] + i as f64 * du;
                let mid = left + 0.5 * du;
                let mut avg = 0.0;
                for (node, weight) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                    avg += weight * rho0(region, mid + 0.5 * du * node);
                }
                avg *= 0.5;
                if !(-1e-12..=1.0 + 1e-12).contains(&avg) {
                    return Err(Error::DensityOutOfRange { value: avg });
                }
                rho[region][i] = avg.clamp(0.0, 1.0);
            }
        }
        Ok(Self { table, m, du, rho, t: 0.0, safety: 0.4, warm: [None, None] })
    }

    /// Starts from given cell averages.
    pub fn from_cells(table: EnsembleTable, cells: [Vec<f64>; 3]) -> Result<Self> {
        let m = cells[0].len();
        if m < 2 || cells.iter().any(|c| c.len() != m) {
            return Err(Error::GridMismatch("regions must share the cell count".into()));
        }
        if cells.iter().flatten().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::DensityOutOfRange { value: f64::NAN });
        }
        Ok(Self { table, m, du: 1.0 / m as f64, rho: cells, t: 0.0, safety: 0.4, warm: [None, None] })
    }

    pub fn table(&self) -> &EnsembleTable {
        &self.table
    }

    /// Adjusts the CFL safety factor; must lie in `(0, 0.5]`.
    pub fn set_safety(&mut self, safety: f64) -> Result<()> {
        if !(safety > 0.0 && safety <= 0.5) {
            return Err(Error::InvalidParams(format!(
                "CFL safety factor {safety} outside (0, 0.5]"
            )));
        }
        self.safety = safety;
        Ok(())
    }

    pub fn cells_per_region(&self) -> usize {
        self.m
    }

    pub fn du(&self) -> f64 {
        self.du
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn cells(&self, region: usize) -> &[f64] {
        &self.rho[region]
    }

    pub fn state(&self) -> [Vec<f64>; 3] {
        self.rho.clone()
    }

    pub fn cell_centers(&self, region: usize) -> Vec<f64> {
        (0..self.m)
            .map(|i| REGION_LEFT[region] + (i as f64 + 0.5) * self.du)
            .collect()
    }

    /// Total mass `Σ ρ_i Δu`; conserved exactly by the scheme.
    pub fn mass(&self) -> f64 {
        self.rho.iter().flatten().sum::<f64>() * self.du
    }

    /// Largest stable explicit step, `safety · Δu² / (2 max φ')`.
    pub fn max_stable_dt(&self) -> f64 {
        let mut max_slope = 1.0f64; // reservoirs have unit slope
        for &v in &self.rho[1] {
            max_slope = max_slope.max(RegionFlux::Bulk.phi_slope(&self.table, v));
        }
        self.safety * self.du * self.du / (2.0 * max_slope)
    }

    /// All `3M + 1` edge fluxes of the current state, external edges first
    /// and last (identically zero), the two interface edges solved by
    /// potential matching.
    pub fn edge_fluxes(&mut self) -> Result<Vec<f64>> {
        let m = self.m;
        let mut fluxes = vec![0.0; 3 * m + 1];
        for region in 0..3 {
            let map = RegionFlux::of_region(region);
            for i in 1..m {
                let phi_prev = map.phi(&self.table, self.rho[region][i - 1]);
                let phi_next = map.phi(&self.table, self.rho[region][i]);
                fluxes[region * m + i] = -(phi_next - phi_prev) / self.du;
            }
        }
        for (which, coupler) in [InterfaceCoupler::at_zero(), InterfaceCoupler::at_one()]
            .into_iter()
            .enumerate()
        {
            let left = self.rho[which][m - 1];
            let right = self.rho[which + 1][0];
            let sol = interface_flux(left, right, &coupler, self.du, &self.table, self.warm[which])?;
            self.warm[which] = Some(sol.lambda);
            fluxes[(which + 1) * m] = sol.flux;
        }
        Ok(fluxes)
    }

    /// Solves both interfaces for the current state and reports the larger
    /// potential mismatch `|λ_L(ρ*_L) - λ_R(ρ*_R)|` recovered through the
    /// inverse maps.
    pub fn interface_lambda_mismatch(&self) -> Result<f64> {
        let m = self.m;
        let mut worst = 0.0f64;
        for (which, coupler) in [InterfaceCoupler::at_zero(), InterfaceCoupler::at_one()]
            .into_iter()
            .enumerate()
        {
            let left = self.rho[which][m - 1];
            let right = self.rho[which + 1][0];
            let sol = interface_flux(left, right, &coupler, self.du, &self.table, self.warm[which])?;
            let ll = self.table.lambda(sol.trace_left, coupler.left_family)?;
            let lr = self.table.lambda(sol.trace_right, coupler.right_family)?;
            worst = worst.max((ll - lr).abs());
        }
        Ok(worst)
    }

    /// One conservative explicit Euler step. Fails before mutating the
    /// state when `dt` violates the stability bound.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let max = self.max_stable_dt();
        if dt > max * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt, max });
        }
        let fluxes = self.edge_fluxes()?;
        let m = self.m;
        let scale = dt / self.du;
        for region in 0..3 {
            for i in 0..m {
                let e = region * m + i;
                self.rho[region][i] -= scale * (fluxes[e + 1] - fluxes[e]);
            }
        }
        self.t += dt;
        Ok(())
    }

    /// Advances to `t_end`, stepping at the stability limit and landing
    /// exactly on each snapshot time.
    pub fn run_to(&mut self, t_end: f64, snapshots: &[f64]) -> Result<PdeSeries> {
        if !(t_end >= self.t) {
            return Err(Error::BadSnapshots(format!(
                "t_end {t_end} precedes current time {}",
                self.t
            )));
        }
        if snapshots.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::BadSnapshots("snapshot times must be sorted".into()));
        }
        if let (Some(&first), Some(&last)) = (snapshots.first(), snapshots.last()) {
            if first < self.t || last > t_end + 1e-12 {
                return Err(Error::BadSnapshots(format!(
                    "snapshots [{first}, {last}] outside [{}, {t_end}]",
                    self.t
                )));
            }
        }
        let mut series = PdeSeries {
            cells_per_region: self.m,
            times: Vec::with_capacity(snapshots.len()),
            states: Vec::with_capacity(snapshots.len()),
        };
        let mut next = 0usize;
        loop {
            while next < snapshots.len() && snapshots[next] <= self.t + 1e-12 {
                series.times.push(snapshots[next]);
                series.states.push(self.state());
                next += 1;
            }
            if self.t >= t_end - 1e-12 {
                break;
            }
            let mut dt = self.max_stable_dt().min(t_end - self.t);
            if next < snapshots.len() {
                dt = dt.min(snapshots[next] - self.t);
            }
            self.step(dt)?;
        }
        Ok(series)
    }
}

/// Trapezoid rule over region nodes: the two region edges (carrying the
/// outermost cell values) plus all cell centres.
fn region_integral(cells: &[f64], du: f64, region: usize, f: impl Fn(f64, f64) -> f64) -> f64 {
    let m = cells.len();
    let left_edge = REGION_LEFT[region];
    let mut nodes = Vec::with_capacity(m + 2);
    nodes.push((left_edge, cells[0]));
    for (i, &v) in cells.iter().enumerate() {
        nodes.push((left_edge + (i as f64 + 0.5) * du, v));
    }
    nodes.push((left_edge + 1.0, cells[m - 1]));
    let mut acc = 0.0;
    for w in nodes.windows(2) {
        let (u0, v0) = w[0];
        let (u1, v1) = w[1];
        acc += 0.5 * (u1 - u0) * (f(u0, v0) + f(u1, v1));
    }
    acc
}

/// Signed residual of the weak-form identity over `[0, t]`:
/// `∫ρ(t)G - ∫ρ₀G` minus the time integral of
/// `∫₀¹ Φ(ρ)G'' + (∫₋₁⁰ + ∫₁²) ρG'' + G'(-1)ρ(-1⁺) + G'(0)(Φ(ρ(0⁺)) - ρ(0⁻))
///  + G'(1)(ρ(1⁺) - Φ(ρ(1⁻))) - G'(2)ρ(2⁻)`,
/// with trapezoid quadrature in `u` and `s` and traces from the outermost
/// cells.
pub fn weak_residual(
    series: &PdeSeries,
    g: &TestFunction,
    table: &EnsembleTable,
    t: f64,
) -> Result<f64> {
    if series.times.is_empty() || series.times[0].abs() > 1e-9 {
        return Err(Error::BadSnapshots("series must start at time zero".into()));
    }
    let last = series
        .times
        .iter()
        .rposition(|&s| s <= t + 1e-9)
        .ok_or_else(|| Error::BadSnapshots("no snapshots at or before t".into()))?;
    if (series.times[last] - t).abs() > 1e-9 {
        return Err(Error::BadSnapshots(format!(
            "series does not contain a snapshot at t = {t}"
        )));
    }
    let du = series.du();
    let pair = |state: &[Vec<f64>; 3]| -> f64 {
        let mut acc = 0.0;
        for region in 0..3 {
            acc += region_integral(&state[region], du, region, |u, v| v * g.eval(u));
        }
        acc
    };
    let integrand = |state: &[Vec<f64>; 3]| -> f64 {
        let mut acc = 0.0;
        acc += region_integral(&state[0], du, 0, |u, v| v * g.second_deriv(u));
        acc += region_integral(&state[1], du, 1, |u, v| {
            RegionFlux::Bulk.phi(table, v) * g.second_deriv(u)
        });
        acc += region_integral(&state[2], du, 2, |u, v| v * g.second_deriv(u));
        let m = series.cells_per_region;
        let trace_m1 = state[0][0];
        let trace_0m = state[0][m - 1];
        let trace_0p = state[1][0];
        let trace_1m = state[1][m - 1];
        let trace_1p = state[2][0];
        let trace_2m = state[2][m - 1];
        acc += g.deriv(-1.0) * trace_m1;
        acc += g.deriv(0.0) * (RegionFlux::Bulk.phi(table, trace_0p) - trace_0m);
        acc += g.deriv(1.0) * (trace_1p - RegionFlux::Bulk.phi(table, trace_1m));
        acc -= g.deriv(2.0) * trace_2m;
        acc
    };
    let lhs = pair(&series.states[last]) - pair(&series.states[0]);
    let mut rhs = 0.0;
    for i in 0..last {
        let ds = series.times[i + 1] - series.times[i];
        rhs += 0.5 * ds * (integrand(&series.states[i]) + integrand(&series.states[i + 1]));
    }
    Ok(lhs - rhs)
}
