//! Parameter types, validated constructors, log-densities, and moments for
//! the six distribution families: Poisson, gamma, negative binomial,
//! Dirichlet, multinomial, and Dirichlet-multinomial.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::raw;

/// Simplex membership tolerance at construction; inputs inside it are
/// rescaled to sum to 1.
pub const SIMPLEX_SUM_TOL: f64 = 1e-9;

fn ensure_positive(x: f64, what: &str) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be positive and finite, got {x}")))
    }
}

fn validate_concentrations(alphas: &[f64]) -> Result<()> {
    if alphas.len() < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 concentration entries, got {}",
            alphas.len()
        )));
    }
    for (i, &a) in alphas.iter().enumerate() {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Domain(format!("concentration [{i}] must be positive, got {a}")));
        }
    }
    Ok(())
}

/// Poisson rate parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoissonParam {
    lambda: f64,
}

impl PoissonParam {
    pub fn new(lambda: f64) -> Result<Self> {
        ensure_positive(lambda, "lambda")?;
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Gamma shape/rate parameters with mean alpha/beta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaParam {
    alpha: f64,
    beta: f64,
}

impl GammaParam {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        ensure_positive(alpha, "alpha")?;
        ensure_positive(beta, "beta")?;
        Ok(Self { alpha, beta })
    }

    /// Mean parametrization: rate is alpha / mu.
    pub fn from_mean(alpha: f64, mu: f64) -> Result<Self> {
        ensure_positive(alpha, "alpha")?;
        ensure_positive(mu, "mu")?;
        Ok(Self { alpha, beta: alpha / mu })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mu(&self) -> f64 {
        self.alpha / self.beta
    }
}

/// Negative binomial shape/theta parameters.
///
/// theta = mu / (mu + alpha) is probability-like (the PMF reads it as a
/// success probability) but also plays the role of a scale parameter for the
/// gamma mixing density; both readings are in use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NegBinParam {
    alpha: f64,
    theta: f64,
}

impl NegBinParam {
    pub fn new(alpha: f64, theta: f64) -> Result<Self> {
        ensure_positive(alpha, "alpha")?;
        if !(theta.is_finite() && theta > 0.0 && theta < 1.0) {
            return Err(Error::Domain(format!("theta must lie in (0, 1), got {theta}")));
        }
        Ok(Self { alpha, theta })
    }

    /// Mean parametrization: theta = mu / (mu + alpha).
    pub fn from_mean(alpha: f64, mu: f64) -> Result<Self> {
        ensure_positive(alpha, "alpha")?;
        ensure_positive(mu, "mu")?;
        Self::new(alpha, mu / (mu + alpha))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn mu(&self) -> f64 {
        self.alpha * self.theta / (1.0 - self.theta)
    }
}

/// Dirichlet concentration vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirichletParam {
    alphas: Vec<f64>,
}

impl DirichletParam {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        validate_concentrations(&alphas)?;
        Ok(Self { alphas })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    /// Total concentration alpha_0 = sum alpha_i.
    pub fn alpha0(&self) -> f64 {
        self.alphas.iter().sum()
    }

    /// Mean point on the simplex: pi_i = alpha_i / alpha_0.
    pub fn mean_simplex(&self) -> Vec<f64> {
        let a0 = self.alpha0();
        self.alphas.iter().map(|a| a / a0).collect()
    }
}

/// Multinomial total count and cell probabilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultinomialParam {
    m: u64,
    probs: SimplexVector,
}

impl MultinomialParam {
    pub fn new(m: u64, probs: SimplexVector) -> Self {
        Self { m, probs }
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn probs(&self) -> &SimplexVector {
        &self.probs
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }
}

/// Dirichlet-multinomial total count and concentrations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirMultParam {
    m: u64,
    alphas: Vec<f64>,
}

impl DirMultParam {
    pub fn new(m: u64, alphas: Vec<f64>) -> Result<Self> {
        validate_concentrations(&alphas)?;
        Ok(Self { m, alphas })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn alpha0(&self) -> f64 {
        self.alphas.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.alphas.len()
    }
}

/// Non-negative integer count vector with cached total.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountVector {
    counts: Vec<u64>,
    total: u64,
}

impl CountVector {
    pub fn new(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        Self { counts, total }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

impl From<Vec<u64>> for CountVector {
    fn from(counts: Vec<u64>) -> Self {
        Self::new(counts)
    }
}

/// Non-negative real vector summing to 1, stored with all coordinates
/// (including the implied last one) to keep indexing uniform.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexVector {
    coords: Vec<f64>,
    renormalized: bool,
}

impl SimplexVector {
    /// Validates non-negativity and a total within [`SIMPLEX_SUM_TOL`] of 1,
    /// then rescales so the stored coordinates sum to 1 up to round-off.
    /// Whether a rescale changed the input is recorded.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::Domain(format!(
                "simplex vector needs at least 2 coordinates, got {}",
                coords.len()
            )));
        }
        for (i, &z) in coords.iter().enumerate() {
            if !(z.is_finite() && z >= 0.0) {
                return Err(Error::Domain(format!(
                    "simplex coordinate [{i}] must be finite and >= 0, got {z}"
                )));
            }
        }
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::Domain(format!(
                "simplex coordinates sum to {sum}, outside 1 +- {SIMPLEX_SUM_TOL:e}"
            )));
        }
        let renormalized = (sum - 1.0).abs() > f64::EPSILON;
        let coords = if renormalized {
            coords.iter().map(|z| z / sum).collect()
        } else {
            coords
        };
        Ok(Self { coords, renormalized })
    }

    /// Builds the full vector from the first n free coordinates, appending
    /// 1 - sum as the last coordinate.
    pub fn from_free_coords(free: &[f64]) -> Result<Self> {
        let sum: f64 = free.iter().sum();
        if sum > 1.0 + SIMPLEX_SUM_TOL {
            return Err(Error::Domain(format!("free coordinates sum to {sum} > 1")));
        }
        let mut coords = free.to_vec();
        coords.push((1.0 - sum).max(0.0));
        Self::new(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The first n coordinates (dropping the implied last one).
    pub fn free_coords(&self) -> &[f64] {
        &self.coords[..self.coords.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// True when construction rescaled the input to restore an exact sum.
    pub fn was_renormalized(&self) -> bool {
        self.renormalized
    }
}

/// ln p(x | lambda) = -lambda + x ln lambda - ln x!
pub fn poisson_log_pmf(p: &PoissonParam, x: u64) -> f64 {
    poisson_log_pmf_raw(p.lambda, x)
}

pub(crate) fn poisson_log_pmf_raw(lambda: f64, x: u64) -> f64 {
    let xf = x as f64;
    -lambda + xf * lambda.ln() - raw::ln_gamma(xf + 1.0)
}

/// ln f(lam | alpha, beta) = alpha ln beta - ln Gamma(alpha)
/// + (alpha - 1) ln lam - beta lam, for lam > 0.
pub fn gamma_log_pdf(p: &GammaParam, lam: f64) -> Result<f64> {
    if !(lam.is_finite() && lam > 0.0) {
        return Err(Error::Domain(format!("gamma density point must be positive, got {lam}")));
    }
    Ok(gamma_log_pdf_raw(p.alpha, p.beta, lam))
}

pub(crate) fn gamma_log_pdf_raw(alpha: f64, beta: f64, lam: f64) -> f64 {
    alpha * beta.ln() - raw::ln_gamma(alpha) + (alpha - 1.0) * lam.ln() - beta * lam
}

/// ln p(x | alpha, theta) = ln Gamma(alpha + x) - ln Gamma(alpha) - ln x!
/// + x ln theta + alpha ln(1 - theta).
pub fn negbin_log_pmf(p: &NegBinParam, x: u64) -> f64 {
    negbin_log_pmf_raw(p.alpha, p.theta, x)
}

pub(crate) fn negbin_log_pmf_raw(alpha: f64, theta: f64, x: u64) -> f64 {
    let xf = x as f64;
    raw::ln_gamma(alpha + xf) - raw::ln_gamma(alpha) - raw::ln_gamma(xf + 1.0)
        + xf * theta.ln()
        + alpha * (-theta).ln_1p()
}

/// Mean parametrization constructor: theta = mu / (mu + alpha).
pub fn negbin_from_mean(alpha: f64, mu: f64) -> Result<NegBinParam> {
    NegBinParam::from_mean(alpha, mu)
}

/// ln Dirichlet density over all coordinates of `z`.
///
/// Boundary coordinates (exact zeros) follow the limit of the density: a zero
/// with concentration 1 contributes nothing, with concentration > 1 the
/// density is 0 (returns -inf), and with concentration < 1 it diverges, which
/// is reported as [`Error::DensityDiverges`].
pub fn dirichlet_log_pdf(p: &DirichletParam, z: &SimplexVector) -> Result<f64> {
    if p.dim() != z.len() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: z.len() });
    }
    let mut acc = -raw::ln_multi_beta(p.alphas());
    for (i, (&a, &zi)) in p.alphas().iter().zip(z.coords()).enumerate() {
        if zi == 0.0 {
            if a < 1.0 {
                return Err(Error::DensityDiverges { index: i });
            }
            if a > 1.0 {
                return Ok(f64::NEG_INFINITY);
            }
            // a == 1: (a - 1) ln 0 = 0
        } else {
            acc += (a - 1.0) * zi.ln();
        }
    }
    Ok(acc)
}

/// ln p(x | m, pi) = ln m! - sum ln x_i! + sum x_i ln pi_i, with the
/// convention 0 ln 0 = 0 for cells where both x_i and pi_i vanish.
pub fn multinomial_log_pmf(p: &MultinomialParam, x: &CountVector) -> Result<f64> {
    if p.dim() != x.len() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: x.len() });
    }
    if x.total() != p.m() {
        return Err(Error::TotalMismatch { expected: p.m(), got: x.total() });
    }
    let mut acc = raw::ln_gamma(p.m() as f64 + 1.0);
    for (&xi, &pi) in x.counts().iter().zip(p.probs().coords()) {
        let xf = xi as f64;
        acc -= raw::ln_gamma(xf + 1.0);
        if xi > 0 {
            if pi == 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            acc += xf * pi.ln();
        }
    }
    Ok(acc)
}

/// ln p(x | m, alpha) = ln[Gamma(alpha_0) m! / Gamma(alpha_0 + m)]
/// + sum_i ln[Gamma(alpha_i + x_i) / (Gamma(alpha_i) x_i!)].
pub fn dirmult_log_pmf(p: &DirMultParam, x: &CountVector) -> Result<f64> {
    if p.dim() != x.len() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: x.len() });
    }
    if x.total() != p.m() {
        return Err(Error::TotalMismatch { expected: p.m(), got: x.total() });
    }
    Ok(dirmult_log_pmf_raw(p.alphas(), x))
}

pub(crate) fn dirmult_log_pmf_raw(alphas: &[f64], x: &CountVector) -> f64 {
    let a0: f64 = alphas.iter().sum();
    let m = x.total() as f64;
    let mut acc = raw::ln_gamma(a0) + raw::ln_gamma(m + 1.0) - raw::ln_gamma(a0 + m);
    for (&a, &xi) in alphas.iter().zip(x.counts()) {
        let xf = xi as f64;
        acc += raw::ln_gamma(a + xf) - raw::ln_gamma(a) - raw::ln_gamma(xf + 1.0);
    }
    acc
}

/// Mean and variance, componentwise for the vector-valued families.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSummary {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

pub trait Moments {
    fn moments(&self) -> MomentSummary;
}

impl Moments for PoissonParam {
    fn moments(&self) -> MomentSummary {
        MomentSummary { mean: vec![self.lambda], variance: vec![self.lambda] }
    }
}

impl Moments for GammaParam {
    fn moments(&self) -> MomentSummary {
        MomentSummary {
            mean: vec![self.mu()],
            variance: vec![self.alpha / (self.beta * self.beta)],
        }
    }
}

impl Moments for NegBinParam {
    /// Mean mu = alpha theta / (1 - theta), variance mu + mu^2 / alpha.
    fn moments(&self) -> MomentSummary {
        let mu = self.mu();
        MomentSummary { mean: vec![mu], variance: vec![mu + mu * mu / self.alpha] }
    }
}

impl Moments for DirichletParam {
    /// Mean pi_i = alpha_i / alpha_0, variance pi_i (1 - pi_i) / (alpha_0 + 1).
    fn moments(&self) -> MomentSummary {
        let a0 = self.alpha0();
        let mean = self.mean_simplex();
        let variance = mean.iter().map(|&pi| pi * (1.0 - pi) / (a0 + 1.0)).collect();
        MomentSummary { mean, variance }
    }
}

impl Moments for MultinomialParam {
    fn moments(&self) -> MomentSummary {
        let m = self.m as f64;
        let mean: Vec<f64> = self.probs.coords().iter().map(|&pi| m * pi).collect();
        let variance = self.probs.coords().iter().map(|&pi| m * pi * (1.0 - pi)).collect();
        MomentSummary { mean, variance }
    }
}

impl Moments for DirMultParam {
    /// Mean m alpha_i / alpha_0; variance picks up the (alpha_0 + m) /
    /// (alpha_0 + 1) overdispersion factor relative to the multinomial.
    fn moments(&self) -> MomentSummary {
        let a0 = self.alpha0();
        let m = self.m as f64;
        let mean: Vec<f64> = self.alphas.iter().map(|&a| m * a / a0).collect();
        let factor = (a0 + m) / (a0 + 1.0);
        let variance = self
            .alphas
            .iter()
            .map(|&a| {
                let pi = a / a0;
                m * pi * (1.0 - pi) * factor
            })
            .collect();
        MomentSummary { mean, variance }
    }
}

/// All count vectors of the given dimension summing to `total`,
/// in lexicographic order.
pub fn enumerate_counts(dim: usize, total: u64) -> Vec<CountVector> {
    fn rec(dim: usize, total: u64, prefix: &mut Vec<u64>, out: &mut Vec<CountVector>) {
        if dim == 1 {
            prefix.push(total);
            out.push(CountVector::new(prefix.clone()));
            prefix.pop();
            return;
        }
        for v in 0..=total {
            prefix.push(v);
            rec(dim - 1, total - v, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if dim == 0 {
        return out;
    }
    rec(dim, total, &mut Vec::with_capacity(dim), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN_HALF: f64 = -std::f64::consts::LN_2;

    #[test]
    fn poisson_log_pmf_examples() {
        let p = PoissonParam::new(1.0).unwrap();
        assert!((poisson_log_pmf(&p, 0) - (-1.0)).abs() < 1e-15);

        let p = PoissonParam::new(2.0).unwrap();
        assert!((poisson_log_pmf(&p, 2) - (2f64.ln() - 2.0)).abs() < 1e-14);

        // frozen arbitrary-precision reference
        let p = PoissonParam::new(7.3).unwrap();
        assert!((poisson_log_pmf(&p, 40) - (-38.105665788583577626)).abs() < 1e-12);
    }

    #[test]
    fn poisson_param_validation() {
        assert!(PoissonParam::new(0.0).is_err());
        assert!(PoissonParam::new(-1.0).is_err());
        assert!(PoissonParam::new(f64::INFINITY).is_err());
    }

    #[test]
    fn gamma_log_pdf_examples() {
        let p = GammaParam::new(1.0, 1.0).unwrap();
        assert!((gamma_log_pdf(&p, 2.0).unwrap() - (-2.0)).abs() < 1e-15);

        let p = GammaParam::new(2.0, 1.0).unwrap();
        assert!((gamma_log_pdf(&p, 1.0).unwrap() - (-1.0)).abs() < 1e-14);

        // frozen arbitrary-precision reference
        let p = GammaParam::new(3.5, 0.7).unwrap();
        assert!((gamma_log_pdf(&p, 4.2).unwrap() - (-1.8016245929093309963)).abs() < 1e-13);

        assert!(gamma_log_pdf(&p, 0.0).is_err());
        assert!(gamma_log_pdf(&p, -1.0).is_err());
    }

    #[test]
    fn gamma_param_mean_identity() {
        let p = GammaParam::from_mean(3.0, 1.5).unwrap();
        assert!((p.mu() * p.beta() - p.alpha()).abs() < 1e-15);
        assert!((p.mu() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn negbin_log_pmf_examples() {
        let p = NegBinParam::new(2.0, 0.5).unwrap();
        assert!((negbin_log_pmf(&p, 0) - 2.0 * 0.5f64.ln()).abs() < 1e-14);

        // geometric special case: alpha = 1
        let p = NegBinParam::new(1.0, 0.3).unwrap();
        let want = (0.3f64.powi(3) * 0.7).ln();
        assert!((negbin_log_pmf(&p, 3) - want).abs() < 1e-13);

        // frozen arbitrary-precision reference (rising-factorial oracle)
        let p = NegBinParam::new(0.5, 0.9).unwrap();
        assert!((negbin_log_pmf(&p, 12) - (-4.2408506610410789917)).abs() < 1e-12);
    }

    #[test]
    fn negbin_rising_factorial_oracle() {
        // pmf = rising(alpha, x)/x! * theta^x (1-theta)^alpha computed in
        // plain products, independent of the log-gamma path.
        let (alpha, theta, x) = (0.5f64, 0.9f64, 12u64);
        let mut rising = 1.0;
        let mut fact = 1.0;
        for k in 0..x {
            rising *= alpha + k as f64;
            fact *= (k + 1) as f64;
        }
        let oracle = (rising / fact) * theta.powi(x as i32) * (1.0 - theta).powf(alpha);
        let p = NegBinParam::new(alpha, theta).unwrap();
        assert!((negbin_log_pmf(&p, x) - oracle.ln()).abs() < 1e-12);
    }

    #[test]
    fn negbin_from_mean_examples() {
        assert!((negbin_from_mean(3.0, 3.0).unwrap().theta() - 0.5).abs() < 1e-15);
        assert!((negbin_from_mean(2.0, 8.0).unwrap().theta() - 0.8).abs() < 1e-15);
        assert!(negbin_from_mean(1.0, 0.0).is_err());
        assert!(negbin_from_mean(0.0, 1.0).is_err());
        assert!(NegBinParam::new(1.0, 0.0).is_err());
        assert!(NegBinParam::new(1.0, 1.0).is_err());
    }

    #[test]
    fn dirichlet_log_pdf_examples() {
        let uniform = DirichletParam::new(vec![1.0, 1.0]).unwrap();
        let z = SimplexVector::new(vec![0.3, 0.7]).unwrap();
        assert!(dirichlet_log_pdf(&uniform, &z).unwrap().abs() < 1e-14);

        let flat3 = DirichletParam::new(vec![1.0, 1.0, 1.0]).unwrap();
        let z = SimplexVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert!((dirichlet_log_pdf(&flat3, &z).unwrap() - 2f64.ln()).abs() < 1e-14);

        // Beta(2,3) closed form: 12 * z * (1-z)^2 at z = 0.4
        let beta23 = DirichletParam::new(vec![2.0, 3.0]).unwrap();
        let z = SimplexVector::new(vec![0.4, 0.6]).unwrap();
        let want = (12.0 * 0.4 * 0.36f64).ln();
        assert!((dirichlet_log_pdf(&beta23, &z).unwrap() - want).abs() < 1e-13);

        // frozen arbitrary-precision reference
        let p = DirichletParam::new(vec![1.3, 2.7, 0.9]).unwrap();
        let z = SimplexVector::new(vec![0.2, 0.5, 0.3]).unwrap();
        assert!((dirichlet_log_pdf(&p, &z).unwrap() - 1.0947506162458099615).abs() < 1e-13);
    }

    #[test]
    fn dirichlet_log_pdf_boundary_cases() {
        let z0 = SimplexVector::new(vec![0.0, 1.0]).unwrap();
        // concentration 1 at the zero coordinate: finite limit
        let p = DirichletParam::new(vec![1.0, 2.0]).unwrap();
        assert!(dirichlet_log_pdf(&p, &z0).unwrap().is_finite());
        // concentration > 1: density 0
        let p = DirichletParam::new(vec![2.0, 2.0]).unwrap();
        assert_eq!(dirichlet_log_pdf(&p, &z0).unwrap(), f64::NEG_INFINITY);
        // concentration < 1: diverges
        let p = DirichletParam::new(vec![0.5, 2.0]).unwrap();
        assert_eq!(dirichlet_log_pdf(&p, &z0), Err(Error::DensityDiverges { index: 0 }));
        // dimension mismatch
        let p3 = DirichletParam::new(vec![1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(dirichlet_log_pdf(&p3, &z0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn multinomial_log_pmf_examples() {
        let p = MultinomialParam::new(2, SimplexVector::new(vec![0.5, 0.5]).unwrap());
        let x = CountVector::new(vec![1, 1]);
        assert!((multinomial_log_pmf(&p, &x).unwrap() - LN_HALF).abs() < 1e-14);

        // m = 0: certain outcome
        let p = MultinomialParam::new(0, SimplexVector::new(vec![0.4, 0.6]).unwrap());
        let x = CountVector::new(vec![0, 0]);
        assert_eq!(multinomial_log_pmf(&p, &x).unwrap(), 0.0);

        // exact-rational oracle: C(5;1,2,2) * 0.2 * 0.3^2 * 0.5^2 = 0.135
        let p = MultinomialParam::new(5, SimplexVector::new(vec![0.2, 0.3, 0.5]).unwrap());
        let x = CountVector::new(vec![1, 2, 2]);
        let coeff = 120.0 / (1.0 * 2.0 * 2.0);
        let oracle = coeff * 0.2 * 0.3f64.powi(2) * 0.5f64.powi(2);
        assert!((multinomial_log_pmf(&p, &x).unwrap() - oracle.ln()).abs() < 1e-13);
    }

    #[test]
    fn multinomial_log_pmf_error_and_zero_conventions() {
        let p = MultinomialParam::new(3, SimplexVector::new(vec![0.5, 0.5]).unwrap());
        let x = CountVector::new(vec![1, 1]);
        assert_eq!(
            multinomial_log_pmf(&p, &x),
            Err(Error::TotalMismatch { expected: 3, got: 2 })
        );

        // zero-probability cell with a positive count: log-probability -inf
        let p = MultinomialParam::new(1, SimplexVector::new(vec![0.0, 1.0]).unwrap());
        assert_eq!(
            multinomial_log_pmf(&p, &CountVector::new(vec![1, 0])).unwrap(),
            f64::NEG_INFINITY
        );
        // zero-probability cell with a zero count contributes nothing
        assert_eq!(multinomial_log_pmf(&p, &CountVector::new(vec![0, 1])).unwrap(), 0.0);
    }

    #[test]
    fn dirmult_log_pmf_examples() {
        let p = DirMultParam::new(1, vec![1.0, 1.0]).unwrap();
        assert!((dirmult_log_pmf(&p, &CountVector::new(vec![1, 0])).unwrap() - LN_HALF).abs() < 1e-14);

        // brute-force enumeration oracle: uniform over the 4 outcomes at m=3
        let p = DirMultParam::new(3, vec![1.0, 1.0]).unwrap();
        let mut total = 0.0;
        for x in enumerate_counts(2, 3) {
            let lp = dirmult_log_pmf(&p, &x).unwrap();
            assert!((lp - 0.25f64.ln()).abs() < 1e-13, "outcome {:?}", x.counts());
            total += lp.exp();
        }
        assert!((total - 1.0).abs() < 1e-12);

        // frozen arbitrary-precision reference (rising-factorial oracle)
        let p = DirMultParam::new(4, vec![2.0, 3.0, 0.5]).unwrap();
        let x = CountVector::new(vec![1, 2, 1]);
        assert!((dirmult_log_pmf(&p, &x).unwrap() - (-2.7617061536025515682)).abs() < 1e-12);
    }

    #[test]
    fn dirmult_rising_factorial_oracle() {
        // pmf = m!/rising(a0, m) * prod rising(a_i, x_i)/x_i!
        let alphas = [2.0, 3.0, 0.5];
        let xs = [1u64, 2, 1];
        let rising = |a: f64, k: u64| (0..k).fold(1.0, |acc, j| acc * (a + j as f64));
        let fact = |k: u64| (1..=k).fold(1.0, |acc, j| acc * j as f64);
        let m: u64 = xs.iter().sum();
        let a0: f64 = alphas.iter().sum();
        let mut oracle = fact(m) / rising(a0, m);
        for (a, &x) in alphas.iter().zip(&xs) {
            oracle *= rising(*a, x) / fact(x);
        }
        let p = DirMultParam::new(m, alphas.to_vec()).unwrap();
        let got = dirmult_log_pmf(&p, &CountVector::new(xs.to_vec())).unwrap();
        assert!((got - oracle.ln()).abs() < 1e-13);
    }

    #[test]
    fn moments_match_closed_forms() {
        let nb = NegBinParam::new(2.0, 0.5).unwrap();
        let m = nb.moments();
        assert!((m.mean[0] - 2.0).abs() < 1e-14); // alpha theta / (1-theta)
        assert!((m.variance[0] - 4.0).abs() < 1e-14); // mu + mu^2/alpha

        let d = DirichletParam::new(vec![1.0, 1.0, 2.0]).unwrap();
        assert_eq!(d.moments().mean, vec![0.25, 0.25, 0.5]);

        let dm = DirMultParam::new(10, vec![1.0, 3.0]).unwrap();
        assert_eq!(dm.moments().mean, vec![2.5, 7.5]);

        let p = PoissonParam::new(3.5).unwrap();
        assert_eq!(p.moments().mean, vec![3.5]);
        assert_eq!(p.moments().variance, vec![3.5]);
    }

    #[test]
    fn simplex_vector_construction() {
        let s = SimplexVector::new(vec![0.25, 0.75]).unwrap();
        assert!(!s.was_renormalized());

        // inside tolerance: rescaled and recorded
        let s = SimplexVector::new(vec![0.25 + 4e-10, 0.75]).unwrap();
        assert!(s.was_renormalized());
        assert!((s.coords().iter().sum::<f64>() - 1.0).abs() < 1e-15);

        assert!(SimplexVector::new(vec![0.2, 0.75]).is_err());
        assert!(SimplexVector::new(vec![-0.1, 1.1]).is_err());
        assert!(SimplexVector::new(vec![1.0]).is_err());

        let s = SimplexVector::from_free_coords(&[0.2, 0.3]).unwrap();
        assert_eq!(s.coords(), &[0.2, 0.3, 0.5]);
        assert_eq!(s.free_coords(), &[0.2, 0.3]);
    }

    #[test]
    fn count_vector_totals() {
        let x = CountVector::new(vec![1, 2, 3]);
        assert_eq!(x.total(), 6);
        assert_eq!(x.len(), 3);
        let empty = CountVector::new(vec![]);
        assert_eq!(empty.total(), 0);
    }

    #[test]
    fn enumerate_counts_sizes() {
        // stars and bars: C(m + n - 1, n - 1)
        assert_eq!(enumerate_counts(2, 3).len(), 4);
        assert_eq!(enumerate_counts(3, 10).len(), 66);
        assert_eq!(enumerate_counts(4, 6).len(), 84);
        assert!(enumerate_counts(3, 4).iter().all(|x| x.total() == 4));
    }

    #[test]
    fn discrete_normalization_on_truncated_support() {
        // Poisson and NB: truncate where the cumulative tail drops below
        // 1e-10, computed by iterating the PMF recurrence, then check the
        // exp(log_pmf) sum lands in [1 - 1e-8, 1].
        for &lambda in &[0.5, 4.0, 50.0] {
            let p = PoissonParam::new(lambda).unwrap();
            let mut cum = 0.0;
            let mut term = (-lambda).exp();
            let mut k = 0u64;
            while cum + term < 1.0 - 1e-10 {
                cum += term;
                k += 1;
                term *= lambda / k as f64;
                assert!(k < 10_000);
            }
            let sum: f64 = (0..=k).map(|x| poisson_log_pmf(&p, x).exp()).sum();
            assert!((1.0 - 1e-8..=1.0 + 1e-12).contains(&sum), "lambda={lambda}, sum={sum}");
        }
        for &(alpha, theta) in &[(0.5, 0.9), (2.0, 0.5), (5.0, 0.1)] {
            let p = NegBinParam::new(alpha, theta).unwrap();
            let mut cum = 0.0;
            let mut term = (1.0f64 - theta).powf(alpha);
            let mut k = 0u64;
            while cum + term < 1.0 - 1e-10 {
                cum += term;
                term *= theta * (alpha + k as f64) / (k as f64 + 1.0);
                k += 1;
                assert!(k < 100_000);
            }
            let sum: f64 = (0..=k).map(|x| negbin_log_pmf(&p, x).exp()).sum();
            assert!((1.0 - 1e-8..=1.0 + 1e-12).contains(&sum), "({alpha},{theta}), sum={sum}");
        }
    }

    #[test]
    fn multinomial_and_dirmult_full_enumeration_normalizes() {
        for dim in 2..=4usize {
            for m in 0..=6u64 {
                let probs = match dim {
                    2 => vec![0.4, 0.6],
                    3 => vec![0.2, 0.3, 0.5],
                    _ => vec![0.1, 0.2, 0.3, 0.4],
                };
                let alphas = match dim {
                    2 => vec![2.0, 3.0],
                    3 => vec![2.0, 3.0, 0.5],
                    _ => vec![1.0, 2.0, 3.0, 0.7],
                };
                let mp = MultinomialParam::new(m, SimplexVector::new(probs).unwrap());
                let dp = DirMultParam::new(m, alphas).unwrap();
                let mut msum = 0.0;
                let mut dsum = 0.0;
                for x in enumerate_counts(dim, m) {
                    msum += multinomial_log_pmf(&mp, &x).unwrap().exp();
                    dsum += dirmult_log_pmf(&dp, &x).unwrap().exp();
                }
                assert!((msum - 1.0).abs() < 1e-12, "multinomial dim={dim} m={m}: {msum}");
                assert!((dsum - 1.0).abs() < 1e-12, "dirmult dim={dim} m={m}: {dsum}");
            }
        }
    }

    #[test]
    fn negbin_approaches_poisson_for_large_shape() {
        // max_x |NB log pmf - Poisson log pmf| decreases from alpha = 1e3 to 1e6
        let mu = 4.0;
        let pois = PoissonParam::new(mu).unwrap();
        let gap = |alpha: f64| {
            let nb = NegBinParam::from_mean(alpha, mu).unwrap();
            (0..=(10.0 * mu) as u64)
                .map(|x| (negbin_log_pmf(&nb, x) - poisson_log_pmf(&pois, x)).abs())
                .fold(0.0, f64::max)
        };
        let g3 = gap(1e3);
        let g6 = gap(1e6);
        assert!(g6 < g3, "gap should shrink with alpha: {g3} -> {g6}");
    }

    mod prop {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn negbin_mean_round_trip(alpha in 1e-3..1e3f64, mu in 1e-3..1e3f64) {
                let p = NegBinParam::from_mean(alpha, mu).unwrap();
                prop_assert!(((p.mu() - mu) / mu).abs() <= 1e-12);
                prop_assert!(((p.theta() - mu / (mu + alpha)) / p.theta()).abs() <= 1e-14);
            }

            #[test]
            fn simplex_rescale_keeps_direction(
                coords in proptest::collection::vec(1e-6..1.0f64, 2..6)
            ) {
                let sum: f64 = coords.iter().sum();
                let scaled: Vec<f64> = coords.iter().map(|c| c / sum).collect();
                let s = SimplexVector::new(scaled.clone()).unwrap();
                for (a, b) in s.coords().iter().zip(&scaled) {
                    prop_assert!((a - b).abs() <= 1e-12);
                }
            }
        }
    }
}
