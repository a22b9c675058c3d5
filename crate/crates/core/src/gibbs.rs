//! Exact samplers and enumeration oracles for finite-volume Gibbs
//! distributions.
//!
//! On an interval `K` of `len` sites the `Plus` distribution weighs a
//! configuration `η` by `exp(λ N_K(η) - q Σ η_i η_{i+1})`, optionally with
//! boundary occupancies `ω` just outside `K` contributing the two adjacent
//! bond energies; the `Minus` distribution drops the energy entirely (so a
//! boundary condition is irrelevant for it). Sampling is exact: a forward
//! pass accumulates partial partition vectors site by site, a backward pass
//! then draws each site conditionally. No Markov chain, no equilibration.

use crate::ensembles::Family;
use crate::model::{Configuration, ModelParams};
use crate::{Error, Result};
use rand::Rng;

/// A finite-volume Gibbs distribution on a contiguous interval.
#[derive(Debug, Clone, Copy)]
pub struct GibbsSpec {
    pub len: usize,
    pub family: Family,
    pub lambda: f64,
    pub q: f64,
    /// Occupancies of the two sites just outside the interval, when the
    /// distribution carries a boundary condition. Only these two sites can
    /// couple to the inside for the nearest-neighbour energy.
    pub boundary: Option<(u8, u8)>,
}

impl GibbsSpec {
    /// Free-boundary distribution.
    pub fn free(len: usize, family: Family, lambda: f64, q: f64) -> Self {
        Self { len, family, lambda, q, boundary: None }
    }

    /// Distribution with boundary occupancies `(left, right)`.
    pub fn with_boundary(len: usize, lambda: f64, q: f64, left: u8, right: u8) -> Self {
        Self {
            len,
            family: Family::Plus,
            lambda,
            q,
            boundary: Some(((left != 0) as u8, (right != 0) as u8)),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.len == 0 {
            return Err(Error::InvalidParams("Gibbs interval must be non-empty".into()));
        }
        Ok(())
    }

    fn effective_q(&self) -> f64 {
        match self.family {
            Family::Plus => self.q,
            Family::Minus => 0.0,
        }
    }

    fn effective_boundary(&self) -> Option<(u8, u8)> {
        match self.family {
            Family::Plus => self.boundary,
            Family::Minus => None,
        }
    }
}

fn bernoulli_p(lambda: f64) -> f64 {
    if lambda >= 0.0 {
        1.0 / (1.0 + (-lambda).exp())
    } else {
        let e = lambda.exp();
        e / (1.0 + e)
    }
}

/// Forward partition vectors, normalized per site. `f[i][a]` is
/// proportional to the total weight of all prefixes `η_0..η_i` with
/// `η_i = a`, including the left boundary bond when present.
fn forward_pass(spec: &GibbsSpec) -> Vec<[f64; 2]> {
    let q = spec.effective_q();
    let field = [1.0, spec.lambda.exp()];
    let bond = (-q).exp();
    let left = spec.effective_boundary().map_or(1.0, |(l, _)| {
        if l == 1 {
            bond
        } else {
            1.0
        }
    });
    let mut f = Vec::with_capacity(spec.len);
    let mut cur = [field[0], field[1] * left];
    normalize(&mut cur);
    f.push(cur);
    for _ in 1..spec.len {
        let prev = *f.last().unwrap();
        let mut next = [
            (prev[0] + prev[1]) * field[0],
            (prev[0] + prev[1] * bond) * field[1],
        ];
        normalize(&mut next);
        f.push(next);
    }
    f
}

fn normalize(v: &mut [f64; 2]) {
    let s = v[0] + v[1];
    v[0] /= s;
    v[1] /= s;
}

/// Draws one exact sample from the distribution; `O(len)` per sample.
pub fn sample_chain(spec: &GibbsSpec, rng: &mut impl Rng) -> Result<Vec<u8>> {
    spec.validate()?;
    if spec.family == Family::Minus {
        let p = bernoulli_p(spec.lambda);
        return Ok((0..spec.len).map(|_| (rng.gen::<f64>() < p) as u8).collect());
    }
    let f = forward_pass(spec);
    let bond = (-spec.effective_q()).exp();
    let right = spec.effective_boundary().map_or(1.0, |(_, r)| {
        if r == 1 {
            bond
        } else {
            1.0
        }
    });
    let mut out = vec![0u8; spec.len];
    let last = f[spec.len - 1];
    let w = [last[0], last[1] * right];
    out[spec.len - 1] = draw(w, rng);
    for i in (0..spec.len - 1).rev() {
        let next = out[i + 1];
        let couple = if next == 1 { bond } else { 1.0 };
        let w = [f[i][0], f[i][1] * couple];
        out[i] = draw(w, rng);
    }
    Ok(out)
}

fn draw(w: [f64; 2], rng: &mut impl Rng) -> u8 {
    let p1 = w[1] / (w[0] + w[1]);
    (rng.gen::<f64>() < p1) as u8
}

/// Exact per-site occupation probabilities, `O(len)`.
pub fn exact_marginals(spec: &GibbsSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if spec.family == Family::Minus {
        return Ok(vec![bernoulli_p(spec.lambda); spec.len]);
    }
    let f = forward_pass(spec);
    let q = spec.effective_q();
    let field = [1.0, spec.lambda.exp()];
    let bond = (-q).exp();
    let right = spec.effective_boundary().map_or(1.0, |(_, r)| {
        if r == 1 {
            bond
        } else {
            1.0
        }
    });
    // backward partition vectors: b[i][a] ∝ weight of all suffixes given η_i = a
    let mut b = vec![[1.0f64, 1.0]; spec.len];
    b[spec.len - 1] = [1.0, right];
    for i in (0..spec.len - 1).rev() {
        let nb = b[i + 1];
        let mut cur = [
            nb[0] * field[0] + nb[1] * field[1],
            nb[0] * field[0] + nb[1] * field[1] * bond,
        ];
        normalize(&mut cur);
        b[i] = cur;
    }
    Ok((0..spec.len)
        .map(|i| {
            let w1 = f[i][1] * b[i][1];
            let w0 = f[i][0] * b[i][0];
            w1 / (w0 + w1)
        })
        .collect())
}

/// Exact probabilities of all `2^len` states, for small intervals; state
/// bit `i` holds the occupancy of site `i`. Test oracle for the samplers.
pub fn enumerate_probabilities(spec: &GibbsSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if spec.len > 20 {
        return Err(Error::InvalidParams(format!(
            "enumeration over 2^{} states refused",
            spec.len
        )));
    }
    let q = spec.effective_q();
    let boundary = spec.effective_boundary();
    let mut weights = Vec::with_capacity(1 << spec.len);
    let mut total = 0.0;
    for state in 0u32..(1u32 << spec.len) {
        let mut count = 0i64;
        let mut bonds = 0i64;
        for i in 0..spec.len {
            let occ = ((state >> i) & 1) as i64;
            count += occ;
            if i + 1 < spec.len {
                bonds += occ * ((state >> (i + 1)) & 1) as i64;
            }
        }
        let mut energy = q * bonds as f64;
        if let Some((l, r)) = boundary {
            energy += q * (l as i64 * (state & 1) as i64) as f64;
            energy += q * (r as i64 * ((state >> (spec.len - 1)) & 1) as i64) as f64;
        }
        let w = (spec.lambda * count as f64 - energy).exp();
        weights.push(w);
        total += w;
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

/// Exact sample of the full-lattice Gibbs measure at chemical potential
/// `λ`: the energy couples only bonds inside `0..=N`, so the reservoirs are
/// independent Bernoulli sites and the bulk is a free-boundary chain.
pub fn sample_full_lattice(
    params: &ModelParams,
    lambda: f64,
    rng: &mut impl Rng,
) -> Result<Configuration> {
    let n = params.n_sites();
    let p = bernoulli_p(lambda);
    let mut cfg = Configuration::empty(n);
    for x in params.min_site()..0 {
        cfg.set(x, (rng.gen::<f64>() < p) as u8);
    }
    let bulk_spec = GibbsSpec::free(n + 1, Family::Plus, lambda, params.q());
    let bulk = sample_chain(&bulk_spec, rng)?;
    for (i, v) in bulk.iter().enumerate() {
        cfg.set(i as i64, *v);
    }
    for x in (n as i64 + 1)..=params.max_site() {
        cfg.set(x, (rng.gen::<f64>() < p) as u8);
    }
    Ok(cfg)
}

/// Exact site marginals of the full-lattice Gibbs measure, indexed from
/// site `-N`.
pub fn full_lattice_marginals(params: &ModelParams, lambda: f64) -> Result<Vec<f64>> {
    let n = params.n_sites();
    let p = bernoulli_p(lambda);
    let mut out = vec![p; 3 * n + 1];
    let bulk_spec = GibbsSpec::free(n + 1, Family::Plus, lambda, params.q());
    let bulk = exact_marginals(&bulk_spec)?;
    out[n..=2 * n].copy_from_slice(&bulk);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const LN3: f64 = 1.0986122886681098;

    fn tv_distance(hist: &[u64], probs: &[f64], samples: u64) -> f64 {
        0.5 * hist
            .iter()
            .zip(probs)
            .map(|(&h, &p)| (h as f64 / samples as f64 - p).abs())
            .sum::<f64>()
    }

    #[test]
    fn free_family_is_iid_bernoulli() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let lambda = 0.8;
        let spec = GibbsSpec::free(16, Family::Minus, lambda, LN3);
        let p = lambda.exp() / (1.0 + lambda.exp());
        let samples = 100_000usize;
        let mut sum = 0u64;
        for _ in 0..samples {
            sum += sample_chain(&spec, &mut rng)
                .unwrap()
                .iter()
                .map(|&v| v as u64)
                .sum::<u64>();
        }
        let mean = sum as f64 / (samples * 16) as f64;
        let sigma = (p * (1.0 - p) / (samples * 16) as f64).sqrt();
        assert!((mean - p).abs() < 3.0 * sigma, "{mean} vs {p}");
        for m in exact_marginals(&spec).unwrap() {
            assert!((m - p).abs() < 1e-15);
        }
    }

    #[test]
    fn chain_sampler_matches_enumeration() {
        let spec = GibbsSpec::free(8, Family::Plus, 0.0, LN3);
        let probs = enumerate_probabilities(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples = 200_000u64;
        let mut hist = vec![0u64; 1 << 8];
        for _ in 0..samples {
            let s = sample_chain(&spec, &mut rng).unwrap();
            let mut idx = 0usize;
            for (i, &v) in s.iter().enumerate() {
                idx |= (v as usize) << i;
            }
            hist[idx] += 1;
        }
        let tv = tv_distance(&hist, &probs, samples);
        assert!(tv < 0.02, "TV = {tv}");
    }

    #[test]
    fn marginals_match_enumeration_exactly() {
        for spec in [
            GibbsSpec::free(8, Family::Plus, 0.3, LN3),
            GibbsSpec::with_boundary(8, -0.2, LN3, 1, 0),
            GibbsSpec::with_boundary(6, 0.0, -0.7, 1, 1),
        ] {
            let probs = enumerate_probabilities(&spec).unwrap();
            let marginals = exact_marginals(&spec).unwrap();
            for site in 0..spec.len {
                let exact: f64 = probs
                    .iter()
                    .enumerate()
                    .filter(|(state, _)| (state >> site) & 1 == 1)
                    .map(|(_, p)| p)
                    .sum();
                assert!(
                    (marginals[site] - exact).abs() < 1e-12,
                    "site {site}: {} vs {exact}",
                    marginals[site]
                );
            }
        }
    }

    #[test]
    fn zero_coupling_collapses_to_free_family() {
        let plus = GibbsSpec::free(10, Family::Plus, 0.4, 0.0);
        let minus = GibbsSpec::free(10, Family::Minus, 0.4, 0.0);
        let p = enumerate_probabilities(&plus).unwrap();
        let m = enumerate_probabilities(&minus).unwrap();
        for (a, b) in p.iter().zip(&m) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn interior_marginal_approaches_thermodynamic_density() {
        let spec = GibbsSpec::free(64, Family::Plus, 0.3, LN3);
        let marginals = exact_marginals(&spec).unwrap();
        let rho = crate::ensembles::rho_of_lambda(0.3, Family::Plus, LN3);
        assert!((marginals[32] - rho).abs() < 1e-6);
    }

    #[test]
    fn boundary_condition_ratio_bound() {
        // ν_K(η|ω) / ν_K(η) stays within e^{±4|q|}
        for q in [LN3, -0.9] {
            let bound = (4.0 * q.abs()).exp();
            let free = enumerate_probabilities(&GibbsSpec::free(8, Family::Plus, 0.2, q)).unwrap();
            for (l, r) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let cond =
                    enumerate_probabilities(&GibbsSpec::with_boundary(8, 0.2, q, l, r)).unwrap();
                for (pc, pf) in cond.iter().zip(&free) {
                    let ratio = pc / pf;
                    assert!(ratio <= bound * (1.0 + 1e-12) && ratio >= (1.0 - 1e-12) / bound);
                }
            }
        }
    }

    #[test]
    fn full_lattice_sampler_matches_enumeration_small() {
        // N = 3: ten sites, energy on bonds 0..=2
        let params = ModelParams::new(1.0, 2.0, 0.0, 4).unwrap();
        let lambda = 0.2;
        let marg = full_lattice_marginals(&params, lambda).unwrap();
        let p = lambda.exp() / (1.0 + lambda.exp());
        for x in 0..4 {
            assert!((marg[x] - p).abs() < 1e-15, "reservoir site");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples = 200_000usize;
        let mut sums = vec![0u64; params.lattice_len()];
        for _ in 0..samples {
            let cfg = sample_full_lattice(&params, lambda, &mut rng).unwrap();
            for (i, &v) in cfg.occupancies().iter().enumerate() {
                sums[i] += v as u64;
            }
        }
        for (i, &s) in sums.iter().enumerate() {
            let mean = s as f64 / samples as f64;
            let sigma = (marg[i] * (1.0 - marg[i]) / samples as f64).sqrt();
            assert!((mean - marg[i]).abs() < 4.0 * sigma, "site {i}: {mean} vs {}", marg[i]);
        }
    }

    #[test]
    fn block_density_concentration_improves_with_block_size() {
        // law of large numbers under the free and interacting measures
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for family in [Family::Minus, Family::Plus] {
            let rho = 0.35;
            let lam = crate::ensembles::lambda_of_rho(rho, family, LN3).unwrap();
            let mut exceed = Vec::new();
            for l in [10usize, 40] {
                let size = 2 * l + 1;
                let spec = GibbsSpec::free(size, family, lam, LN3);
                let mut count = 0u32;
                for _ in 0..2000 {
                    let s = sample_chain(&spec, &mut rng).unwrap();
                    let m = s.iter().map(|&v| v as f64).sum::<f64>() / size as f64;
                    if (m - rho).abs() >= 0.1 {
                        count += 1;
                    }
                }
                exceed.push(count);
            }
            assert!(exceed[1] < exceed[0], "family {family:?}: {exceed:?}");
        }
    }
}
