//! Thermodynamics of the two reference Gibbs families.
//!
//! The `Minus` family is the free (non-interacting) lattice gas, invariant
//! for the symmetric exclusion dynamics; its pressure is
//! `p⁻(λ) = ln(1 + e^λ)` exactly. The `Plus` family carries the pair energy
//! `q` per occupied bond; its pressure `p⁺(λ) = ln μ(λ, q)` is the log of
//! the leading eigenvalue of the 2×2 transfer matrix
//! `T(a, b) = exp(-q a b + λ(a + b)/2)`.
//!
//! Densities are the pressure derivatives `ρ±(λ) = p±'(λ)`, strictly
//! increasing with range `(0, 1)`; their inverses `λ±(ρ)` are the chemical
//! potentials. Free energies `q±(ρ) = p±(λ±_ρ) - ρ λ±_ρ` realize the
//! Legendre pair. The bulk flux `Φ` uses the closed form at `θ = 1` with
//! `r = (α-β)/(1+α)`, normalized so that `Φ(0) = 0`, and is lifted to
//! general `θ` by `Φ_θ(ρ; α, β) = θ Φ_1(ρ; α/θ, β/θ)`.

use crate::model::ModelParams;
use crate::{Error, Result};

/// Reference family: `Plus` interacts through the pair energy `q`,
/// `Minus` is free.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Plus,
    Minus,
}

/// Densities are kept strictly inside the unit interval; the chemical
/// potential diverges at the endpoints.
pub const DENSITY_CLAMP: f64 = 1e-9;

/// Clamps a density into `[DENSITY_CLAMP, 1 - DENSITY_CLAMP]`.
pub fn clamp_density(rho: f64) -> f64 {
    rho.max(DENSITY_CLAMP).min(1.0 - DENSITY_CLAMP)
}

/// Symmetric positive 2×2 transfer matrix `T(a,b) = e^{-q a b + λ(a+b)/2}`.
#[derive(Debug, Clone, Copy)]
pub struct TransferMatrix {
    lambda: f64,
    q: f64,
}

impl TransferMatrix {
    pub fn new(lambda: f64, q: f64) -> Self {
        Self { lambda, q }
    }

    pub fn entries(&self) -> [[f64; 2]; 2] {
        let half = (0.5 * self.lambda).exp();
        [[1.0, half], [half, (self.lambda - self.q).exp()]]
    }

    /// Leading (Perron) eigenvalue; real, simple and positive since the
    /// entries are positive.
    pub fn leading_eigenvalue(&self) -> f64 {
        let w = (self.lambda - self.q).exp();
        let disc = (1.0 - w) * (1.0 - w) + 4.0 * self.lambda.exp();
        0.5 * (1.0 + w + disc.sqrt())
    }

    /// `(μ, μ', μ'')`: the leading eigenvalue and its first two derivatives
    /// along `λ`.
    pub fn eigenvalue_jet(&self) -> (f64, f64, f64) {
        let w = (self.lambda - self.q).exp();
        let e = self.lambda.exp();
        let tr = 1.0 + w;
        let det = w - e;
        let d = (1.0 - w) * (1.0 - w) + 4.0 * e; // = tr² - 4 det
        let d1 = 2.0 * tr * w - 4.0 * det;
        let d2 = 2.0 * w * w + 2.0 * tr * w - 4.0 * det;
        let s = d.sqrt();
        let s1 = d1 / (2.0 * s);
        let s2 = d2 / (2.0 * s) - d1 * d1 / (4.0 * d * s);
        let mu = 0.5 * (tr + s);
        (mu, 0.5 * (w + s1), 0.5 * (w + s2))
    }
}

/// Free pressure `p⁻(λ) = ln(1 + e^λ)`.
pub fn pressure_minus(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        lambda.exp().ln_1p()
    } else {
        lambda + (-lambda).exp().ln_1p()
    }
}

/// Interacting pressure `p⁺(λ) = ln μ(λ, q)` via the transfer matrix.
pub fn pressure_plus(lambda: f64, q: f64) -> f64 {
    TransferMatrix::new(lambda, q).leading_eigenvalue().ln()
}

/// The same pressure written as the explicit root of the characteristic
/// quadratic; kept as an algebraically independent cross-check route.
pub fn pressure_plus_closed_form(lambda: f64, q: f64) -> f64 {
    let w = (lambda - q).exp();
    let e = lambda.exp();
    (w + 1.0 + ((w + 1.0) * (w + 1.0) - 4.0 * (w - e)).sqrt()).ln() - 2f64.ln()
}

/// Density `ρ±(λ) = p±'(λ)`, strictly increasing with range `(0, 1)`.
pub fn rho_of_lambda(lambda: f64, family: Family, q: f64) -> f64 {
    match family {
        Family::Minus => logistic(lambda),
        Family::Plus => {
            let (mu, d1, _) = TransferMatrix::new(lambda, q).eigenvalue_jet();
            d1 / mu
        }
    }
}

/// Slope `ρ±'(λ) = p±''(λ)`, the density susceptibility; strictly positive.
pub fn rho_of_lambda_slope(lambda: f64, family: Family, q: f64) -> f64 {
    match family {
        Family::Minus => {
            let s = logistic(lambda);
            s * (1.0 - s)
        }
        Family::Plus => {
            let (mu, d1, d2) = TransferMatrix::new(lambda, q).eigenvalue_jet();
            let r = d1 / mu;
            d2 / mu - r * r
        }
    }
}

fn logistic(lambda: f64) -> f64 {
    if lambda >= 0.0 {
        1.0 / (1.0 + (-lambda).exp())
    } else {
        let e = lambda.exp();
        e / (1.0 + e)
    }
}

/// Chemical potential `λ±(ρ)`: the unique solution of `ρ±(λ) = ρ`.
///
/// The density must lie strictly inside `(0, 1)`; the endpoints map to
/// `±∞` and are not represented.
pub fn lambda_of_rho(rho: f64, family: Family, q: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::DensityOutOfRange { value: rho });
    }
    match family {
        Family::Minus => Ok((rho / (1.0 - rho)).ln()),
        Family::Plus => Ok(invert_rho_plus(rho, q)),
    }
}

fn invert_rho_plus(rho: f64, q: f64) -> f64 {
    // bracket, expanding geometrically as a safety valve; ρ⁺(±40) is within
    // ~1e-17 of the endpoints for moderate q
    let mut lo = -40.0;
    let mut hi = 40.0;
    while rho_of_lambda(lo, Family::Plus, q) > rho && lo > -320.0 {
        lo *= 2.0;
    }
    while rho_of_lambda(hi, Family::Plus, q) < rho && hi < 320.0 {
        hi *= 2.0;
    }
    // safeguarded Newton on ρ⁺(λ) - ρ
    let mut lambda = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = rho_of_lambda(lambda, Family::Plus, q) - rho;
        if f > 0.0 {
            hi = lambda;
        } else {
            lo = lambda;
        }
        let slope = rho_of_lambda_slope(lambda, Family::Plus, q);
        let mut next = lambda - f / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - lambda).abs() <= 1e-15 * (1.0 + lambda.abs()) {
            return next;
        }
        lambda = next;
    }
    lambda
}

/// Free energy `q±(ρ) = p±(λ±_ρ) - ρ λ±_ρ`; concave in `ρ`.
pub fn q_of_rho(rho: f64, family: Family, q: f64) -> Result<f64> {
    let lambda = lambda_of_rho(rho, family, q)?;
    let p = match family {
        Family::Minus => pressure_minus(lambda),
        Family::Plus => pressure_plus(lambda, q),
    };
    Ok(p - rho * lambda)
}

/// Exact log of the fixed-particle-number partition sum
/// `Σ_η 1{N_K(η) = n} e^{-H_K(η)}` on an interval of `size` sites with free
/// boundary, by dynamic programming over (site, count, last occupancy).
pub fn canonical_log_partition(size: usize, n: usize, family: Family, q: f64) -> Result<f64> {
    if size == 0 || size > 30 {
        return Err(Error::InvalidParams(format!(
            "canonical partition size {size} outside [1, 30]"
        )));
    }
    if n > size {
        return Err(Error::CountOutOfRange { n, max: size });
    }
    let q = match family {
        Family::Plus => q,
        Family::Minus => 0.0,
    };
    let bond = (-q).exp();
    // w[c][last]: total weight of prefixes with c particles, last occupancy
    let mut w = vec![[0.0f64; 2]; n + 2];
    w[0][0] = 1.0;
    if n >= 1 {
        w[1][1] = 1.0;
    }
    for _ in 1..size {
        let mut next = vec![[0.0f64; 2]; n + 2];
        for c in 0..=n {
            for last in 0..2 {
                let v = w[c][last];
                if v == 0.0 {
                    continue;
                }
                next[c][0] += v;
                let weight = if last == 1 { bond } else { 1.0 };
                next[c + 1][1] += v * weight;
            }
        }
        w = next;
    }
    Ok((w[n][0] + w[n][1]).ln())
}

/// Log of the grand-canonical partition sum on an interval of `size` sites
/// with free boundary: `ln Σ_η e^{λ N(η) - H(η)}`.
pub fn log_grand_partition(size: usize, lambda: f64, family: Family, q: f64) -> Result<f64> {
    if size == 0 {
        return Err(Error::InvalidParams("grand partition needs size >= 1".into()));
    }
    match family {
        Family::Minus => Ok(size as f64 * pressure_minus(lambda)),
        Family::Plus => {
            let field = lambda.exp();
            let bond = (-q).exp();
            let mut z = [1.0f64, field];
            let mut log_z = 0.0;
            for _ in 1..size {
                let z0 = z[0] + z[1];
                let z1 = (z[0] + z[1] * bond) * field;
                let scale = z0 + z1;
                log_z += scale.ln();
                z = [z0 / scale, z1 / scale];
            }
            Ok(log_z + (z[0] + z[1]).ln())
        }
    }
}

/// Callable table of the ensemble maps for one parameter set.
///
/// Internally normalized to `θ = 1` (the chemical-potential maps depend on
/// the parameters only through `q`, which is invariant under the
/// rescaling); `Φ` is lifted back by the factor `θ`.
#[derive(Debug, Clone, Copy)]
pub struct EnsembleTable {
    theta: f64,
    /// α/θ
    a: f64,
    /// β/θ
    b: f64,
    q: f64,
}

impl EnsembleTable {
    pub fn new(theta: f64, alpha: f64, beta: f64) -> Result<Self> {
        // reuse the model's admissibility checks (N plays no role here)
        let params = ModelParams::new(theta, alpha, beta, 4)?;
        Ok(Self::from_params(&params))
    }

    pub fn from_params(params: &ModelParams) -> Self {
        Self {
            theta: params.theta(),
            a: params.alpha() / params.theta(),
            b: params.beta() / params.theta(),
            q: params.q(),
        }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn p_minus(&self, lambda: f64) -> f64 {
        pressure_minus(lambda)
    }

    pub fn p_plus(&self, lambda: f64) -> f64 {
        pressure_plus(lambda, self.q)
    }

    pub fn rho_minus(&self, lambda: f64) -> f64 {
        rho_of_lambda(lambda, Family::Minus, self.q)
    }

    pub fn rho_plus(&self, lambda: f64) -> f64 {
        rho_of_lambda(lambda, Family::Plus, self.q)
    }

    pub fn rho(&self, lambda: f64, family: Family) -> f64 {
        rho_of_lambda(lambda, family, self.q)
    }

    pub fn rho_slope(&self, lambda: f64, family: Family) -> f64 {
        rho_of_lambda_slope(lambda, family, self.q)
    }

    pub fn lambda_minus(&self, rho: f64) -> Result<f64> {
        lambda_of_rho(rho, Family::Minus, self.q)
    }

    pub fn lambda_plus(&self, rho: f64) -> Result<f64> {
        lambda_of_rho(rho, Family::Plus, self.q)
    }

    pub fn lambda(&self, rho: f64, family: Family) -> Result<f64> {
        lambda_of_rho(rho, family, self.q)
    }

    pub fn q_minus(&self, rho: f64) -> Result<f64> {
        q_of_rho(rho, Family::Minus, self.q)
    }

    pub fn q_plus(&self, rho: f64) -> Result<f64> {
        q_of_rho(rho, Family::Plus, self.q)
    }

    /// Bulk flux `Φ(ρ)`, normalized so that `Φ(0) = 0`; strictly increasing
    /// on `[0, 1]`.
    pub fn phi(&self, rho: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&rho) || rho.is_nan() {
            return Err(Error::DensityOutOfRange { value: rho });
        }
        let (a, b) = (self.a, self.b);
        let value = if a == b {
            rho + a * rho * rho
        } else {
            let r = (a - b) / (1.0 + a);
            let s = (1.0 - 4.0 * r * rho * (1.0 - rho)).sqrt();
            a / r - (2.0 / r) * (a * (1.0 - rho) + b * rho) / (1.0 + s)
        };
        Ok(self.theta * value)
    }

    /// Derivative `Φ'(ρ)`.
    pub fn phi_slope(&self, rho: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&rho) || rho.is_nan() {
            return Err(Error::DensityOutOfRange { value: rho });
        }
        let (a, b) = (self.a, self.b);
        let value = if a == b {
            1.0 + 2.0 * a * rho
        } else {
            let r = (a - b) / (1.0 + a);
            let u = a + (b - a) * rho;
            let s = (1.0 - 4.0 * r * rho * (1.0 - rho)).sqrt();
            let v = 1.0 + s;
            let v1 = -2.0 * r * (1.0 - 2.0 * rho) / s;
            -(2.0 / r) * ((b - a) * v - u * v1) / (v * v)
        };
        Ok(self.theta * value)
    }
}

/// Flux entering the spec of the macroscopic bulk equation; see
/// [`EnsembleTable::phi`].
pub fn phi(rho: f64, params: &ModelParams) -> Result<f64> {
    EnsembleTable::from_params(params).phi(rho)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN3: f64 = 1.0986122886681098;

    #[test]
    fn pressure_minus_examples() {
        assert!((pressure_minus(0.0) - 2f64.ln()).abs() < 1e-15);
        // monotone decay to 0 as λ → -∞
        let mut prev = pressure_minus(-1.0);
        for k in 2..40 {
            let v = pressure_minus(-k as f64);
            assert!(v < prev && v > 0.0);
            prev = v;
        }
        assert!(pressure_minus(-40.0) < 1e-15);
        // derivative matches the logistic density
        let rho = 0.3f64;
        let lam = (rho / (1.0 - rho)).ln();
        let h = 1e-6;
        let num = (pressure_minus(lam + h) - pressure_minus(lam - h)) / (2.0 * h);
        assert!((num - rho).abs() < 1e-9);
    }

    #[test]
    fn pressure_plus_reduces_to_minus_at_q0() {
        for lam in [-5.0, -1.0, 0.0, 0.7, 3.0, 5.0] {
            assert!((pressure_plus(lam, 0.0) - pressure_minus(lam)).abs() < 1e-14);
        }
    }

    #[test]
    fn pressure_plus_at_lambda0_q_ln3() {
        // leading eigenvalue of [[1, 1], [1, 1/3]] is (2 + √10)/3
        let expect = ((2.0 + 10f64.sqrt()) / 3.0).ln();
        assert!((pressure_plus(0.0, LN3) - expect).abs() < 1e-14);
        assert!((pressure_plus_closed_form(0.0, LN3) - expect).abs() < 1e-14);
    }

    #[test]
    fn transfer_matrix_agrees_with_closed_form_on_grid() {
        for i in 0..=20 {
            let lam = -5.0 + 0.5 * i as f64;
            for j in 0..=8 {
                let q = -2.0 + 0.5 * j as f64;
                let tm = pressure_plus(lam, q);
                let cf = pressure_plus_closed_form(lam, q);
                assert!(
                    (tm - cf).abs() <= 1e-12 * tm.abs().max(1.0),
                    "λ={lam} q={q}: {tm} vs {cf}"
                );
            }
        }
    }

    #[test]
    fn finite_size_pressure_converges() {
        // log Z_l / l -> p⁺ with an O(1/l) gap; exact enumeration for l = 8
        let (lam, q) = (0.4, LN3);
        let p_inf = pressure_plus(lam, q);
        let mut enumerated = 0.0f64;
        for state in 0u32..(1 << 8) {
            let mut energy = 0.0;
            let mut count = 0;
            for i in 0..8 {
                let occ = (state >> i) & 1;
                count += occ;
                if i + 1 < 8 {
                    energy += q * (occ * ((state >> (i + 1)) & 1)) as f64;
                }
            }
            enumerated += (lam * count as f64 - energy).exp();
        }
        let z8 = log_grand_partition(8, lam, Family::Plus, q).unwrap();
        assert!((z8 - enumerated.ln()).abs() < 1e-12);

        let errs: Vec<f64> = [8usize, 16, 32]
            .iter()
            .map(|&l| (log_grand_partition(l, lam, Family::Plus, q).unwrap() / l as f64 - p_inf).abs())
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2]);
        // O(1/l): halving the error when doubling l
        assert!(errs[0] / errs[1] > 1.5 && errs[0] / errs[1] < 3.0);
        assert!(errs[1] / errs[2] > 1.5 && errs[1] / errs[2] < 3.0);
    }

    #[test]
    fn rho_of_lambda_examples() {
        assert!((rho_of_lambda(0.0, Family::Minus, 0.0) - 0.5).abs() < 1e-15);
        assert!((rho_of_lambda(0.0, Family::Plus, 0.0) - 0.5).abs() < 1e-15);
        let r = rho_of_lambda(0.0, Family::Plus, LN3);
        assert!(r > 0.0 && r < 0.5, "repulsive coupling lowers the density, got {r}");
        // Richardson central difference of the pressure as an oracle
        for lam in [-2.0, 0.0, 1.3] {
            let d = |h: f64| (pressure_plus(lam + h, LN3) - pressure_plus(lam - h, LN3)) / (2.0 * h);
            let c1 = d(1e-4);
            let c2 = d(5e-5);
            let richardson = (4.0 * c2 - c1) / 3.0;
            assert!((c1 - c2).abs() < 1e-8);
            assert!((rho_of_lambda(lam, Family::Plus, LN3) - richardson).abs() < 1e-8);
        }
    }

    #[test]
    fn rho_slope_matches_central_difference() {
        for (lam, q) in [(0.0, LN3), (-1.5, 0.8), (2.0, -1.0)] {
            let h = 1e-5;
            let num = (rho_of_lambda(lam + h, Family::Plus, q)
                - rho_of_lambda(lam - h, Family::Plus, q))
                / (2.0 * h);
            let ana = rho_of_lambda_slope(lam, Family::Plus, q);
            assert!((num - ana).abs() < 1e-8, "λ={lam} q={q}");
            assert!(ana > 0.0);
        }
    }

    #[test]
    fn lambda_of_rho_examples() {
        assert_eq!(lambda_of_rho(0.5, Family::Minus, 0.0).unwrap(), 0.0);
        assert!(lambda_of_rho(0.0, Family::Plus, 1.0).is_err());
        assert!(lambda_of_rho(1.0, Family::Minus, 0.0).is_err());
        // q = 0 collapse: both families give the same map
        for i in 1..20 {
            let rho = i as f64 / 20.0;
            let lm = lambda_of_rho(rho, Family::Minus, 0.0).unwrap();
            let lp = lambda_of_rho(rho, Family::Plus, 0.0).unwrap();
            assert!((lm - lp).abs() < 1e-12, "rho={rho}");
        }
    }

    #[test]
    fn lambda_rho_round_trips() {
        for q in [-1.0, 0.0, LN3, 2.0] {
            for i in 1..=19 {
                let rho = 0.05 * i as f64;
                for family in [Family::Minus, Family::Plus] {
                    let lam = lambda_of_rho(rho, family, q).unwrap();
                    let back = rho_of_lambda(lam, family, q);
                    assert!((back - rho).abs() < 1e-10, "family {family:?} q={q} rho={rho}");
                }
            }
            for i in 0..=16 {
                let lam = -8.0 + i as f64;
                for family in [Family::Minus, Family::Plus] {
                    let rho = rho_of_lambda(lam, family, q);
                    let back = lambda_of_rho(rho, family, q).unwrap();
                    assert!((back - lam).abs() < 1e-10 * lam.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn phi_examples() {
        // α = β: Φ(ρ) = θρ + αρ²
        let t = EnsembleTable::new(1.0, 1.0, 1.0).unwrap();
        assert!((t.phi(0.5).unwrap() - 0.75).abs() < 1e-15);
        // general closed form at θ=1, α=2, β=0
        let t = EnsembleTable::new(1.0, 2.0, 0.0).unwrap();
        let expect = 3.0 - 4.5 * (1.0 - 1.0 / 3f64.sqrt());
        assert!((t.phi(0.5).unwrap() - expect).abs() < 1e-12);
        assert!((expect - 1.09808).abs() < 1e-5);
        assert_eq!(t.phi(0.0).unwrap(), 0.0);
        assert!(t.phi(-0.1).is_err());
        assert!(t.phi(1.1).is_err());
        // θ-rescaling lifts the flux linearly
        let theta = 2.0;
        let lifted = EnsembleTable::new(theta, 2.0 * theta, 0.0).unwrap();
        for i in 0..=10 {
            let rho = 0.1 * i as f64;
            let base = t.phi(rho).unwrap();
            assert!((lifted.phi(rho).unwrap() - theta * base).abs() < 1e-12);
        }
    }

    #[test]
    fn phi_general_form_approaches_quadratic_as_r_vanishes() {
        let alpha = 1.0;
        for eps in [1e-3, 1e-4] {
            let t = EnsembleTable::new(1.0, alpha, alpha - eps).unwrap();
            let quad = EnsembleTable::new(1.0, alpha, alpha).unwrap();
            let mut max_err = 0.0f64;
            for i in 0..=20 {
                let rho = 0.05 * i as f64;
                max_err = max_err.max((t.phi(rho).unwrap() - quad.phi(rho).unwrap()).abs());
            }
            assert!(max_err < 2.0 * eps, "eps={eps}: {max_err}");
            assert!(max_err > 0.0);
        }
    }

    #[test]
    fn phi_is_strictly_increasing_and_slope_is_exact() {
        for (theta, alpha, beta) in [(1.0, 2.0, 0.0), (1.0, 1.0, 1.0), (1.0, 0.5, 1.5), (2.0, 3.0, 1.0)] {
            let t = EnsembleTable::new(theta, alpha, beta).unwrap();
            let mut prev = t.phi(0.0).unwrap();
            for i in 1..=100 {
                let rho = i as f64 / 100.0;
                let v = t.phi(rho).unwrap();
                assert!(v > prev, "({theta},{alpha},{beta}) at rho={rho}");
                prev = v;
            }
            for i in 1..10 {
                let rho = 0.1 * i as f64;
                let h = 1e-6;
                let num = (t.phi(rho + h).unwrap() - t.phi(rho - h).unwrap()) / (2.0 * h);
                assert!((num - t.phi_slope(rho).unwrap()).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn q_of_rho_examples() {
        assert!((q_of_rho(0.5, Family::Minus, 0.0).unwrap() - 2f64.ln()).abs() < 1e-14);
        // Bernoulli entropy for the free family
        for i in 1..=9 {
            let rho: f64 = 0.1 * i as f64;
            let entropy = -rho * rho.ln() - (1.0 - rho) * (1.0 - rho).ln();
            assert!((q_of_rho(rho, Family::Minus, 0.0).unwrap() - entropy).abs() < 1e-12);
        }
    }

    #[test]
    fn q_plus_matches_canonical_finite_size() {
        let q = LN3;
        let rho = 0.4;
        let limit = q_of_rho(rho, Family::Plus, q).unwrap();
        let mut errs = Vec::new();
        for size in [12usize, 16, 20] {
            let n = (rho * size as f64).floor() as usize;
            let lz = canonical_log_partition(size, n, Family::Plus, q).unwrap();
            errs.push((lz / size as f64 - limit).abs());
        }
        // frozen against an independent dynamic-program evaluation (the DP
        // itself cross-checks brute-force enumeration in another test)
        assert!((errs[2] - 0.064343).abs() < 1e-4, "finite-size error at 20 sites: {}", errs[2]);
        assert!(errs[0] > errs[1] && errs[1] > errs[2]);
    }

    #[test]
    fn canonical_partition_examples() {
        // free family counts subsets
        for (s, n) in [(5usize, 2usize), (8, 3), (10, 0), (10, 10)] {
            let mut binom = 1.0f64;
            for i in 1..=n {
                binom *= (s - n + i) as f64 / i as f64;
            }
            let lz = canonical_log_partition(s, n, Family::Minus, 1.7).unwrap();
            assert!((lz - binom.ln()).abs() < 1e-12);
        }
        // two sites, both occupied: single state with one bond
        let q = 0.9;
        assert!((canonical_log_partition(2, 2, Family::Plus, q).unwrap() + q).abs() < 1e-14);
        // three sites, two particles: states 110, 011 (energy q) and 101 (energy 0)
        let expect = (2.0 * (-q as f64).exp() + 1.0).ln();
        assert!((canonical_log_partition(3, 2, Family::Plus, q).unwrap() - expect).abs() < 1e-14);
        assert!(canonical_log_partition(3, 4, Family::Plus, q).is_err());
        assert!(canonical_log_partition(0, 0, Family::Plus, q).is_err());
    }

    #[test]
    fn pressures_convex_free_energies_concave() {
        for q in [-2.0, 0.0, LN3] {
            for family in [Family::Minus, Family::Plus] {
                let p = |lam: f64| match family {
                    Family::Minus => pressure_minus(lam),
                    Family::Plus => pressure_plus(lam, q),
                };
                let mut vals = Vec::new();
                for i in 0..=80 {
                    vals.push(p(-4.0 + 0.1 * i as f64));
                }
                for w in vals.windows(3) {
                    assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-9);
                }
                let mut qs = Vec::new();
                for i in 2..=98 {
                    qs.push(q_of_rho(0.01 * i as f64, family, q).unwrap());
                }
                for w in qs.windows(3) {
                    assert!(w[2] - 2.0 * w[1] + w[0] <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn legendre_duality_on_grid() {
        for q in [0.0, LN3] {
            for family in [Family::Minus, Family::Plus] {
                let p = |lam: f64| match family {
                    Family::Minus => pressure_minus(lam),
                    Family::Plus => pressure_plus(lam, q),
                };
                for rho in [0.2, 0.5, 0.8] {
                    let mut min = f64::INFINITY;
                    let mut i = 0;
                    while i <= 3200 {
                        let lam = -8.0 + 0.005 * i as f64;
                        min = min.min(p(lam) - rho * lam);
                        i += 1;
                    }
                    let exact = q_of_rho(rho, family, q).unwrap();
                    // grid resolution: curvature × (Δλ/2)²
                    assert!((min - exact).abs() < 1e-5, "family {family:?} rho={rho}");
                    assert!(min >= exact - 1e-12);
                }
            }
        }
    }

    #[test]
    fn q0_collapse_of_pressures() {
        for lam in [-3.0, -0.4, 0.0, 1.1, 4.0] {
            assert!((pressure_plus(lam, 0.0) - pressure_minus(lam)).abs() < 1e-12);
        }
    }
}
