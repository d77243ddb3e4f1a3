//! Seeded, reproducible random generation for every family. Composition
//! samplers mirror the constructive definitions (gamma-mixed Poisson,
//! Dirichlet-weighted multinomial); the conditioning samplers realize the
//! conditioned-independents constructions by rejection and exist mainly as
//! cross-checks for the composition paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dist::{
    negbin_log_pmf_raw, poisson_log_pmf_raw, CountVector, DirMultParam, DirichletParam,
    GammaParam, MultinomialParam, NegBinParam, PoissonParam, SimplexVector,
};
use crate::error::{Error, Result};

/// Attempt cap for the conditioned rejection samplers.
pub const REJECTION_CAP: u64 = 1_000_000;
/// Up-front acceptance-probability guard for the conditioned samplers.
pub const MIN_ACCEPTANCE: f64 = 1e-4;

/// Deterministic random stream addressed by (seed, stream id, counter).
///
/// Identical (seed, stream id) pairs reproduce bit-identical draw sequences;
/// distinct stream ids give statistically independent streams, so concurrent
/// tasks each derive their own stream instead of sharing one.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Fresh stream with the same seed and a new stream id, starting at
    /// counter zero.
    pub fn substream(&self, stream_id: u64) -> Self {
        Self::new(self.seed, stream_id)
    }

    /// Position in the underlying counter-based stream.
    pub fn counter(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Uniform in [0, 1).
    pub(crate) fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Uniform in (0, 1).
    fn u01_open(&mut self) -> f64 {
        loop {
            let u = self.uniform();
            if u > 0.0 {
                return u;
            }
        }
    }

    fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }
}

/// Gamma(alpha, rate) draw by the Marsaglia-Tsang squeeze method, with the
/// alpha < 1 boost (draw at alpha + 1, scale by U^{1/alpha}).
pub fn sample_gamma(r: &mut RngStream, p: &GammaParam) -> f64 {
    sample_gamma_raw(r, p.alpha(), p.beta())
}

pub(crate) fn sample_gamma_raw(r: &mut RngStream, shape: f64, rate: f64) -> f64 {
    if shape < 1.0 {
        let boost = r.u01_open().powf(1.0 / shape);
        return marsaglia_tsang(r, shape + 1.0) * boost / rate;
    }
    marsaglia_tsang(r, shape) / rate
}

fn marsaglia_tsang(r: &mut RngStream, shape: f64) -> f64 {
    debug_assert!(shape >= 1.0);
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let (x, v) = loop {
            let x = r.standard_normal();
            let v = 1.0 + c * x;
            if v > 0.0 {
                break (x, v * v * v);
            }
        };
        let u = r.u01_open();
        if u < 1.0 - 0.0331 * (x * x) * (x * x) {
            return d * v;
        }
        if u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Poisson draw: inversion by sequential search below `POISSON_PTRS_CUTOFF`,
/// Hormann's PTRS transformed rejection above it.
pub fn sample_poisson(r: &mut RngStream, p: &PoissonParam) -> u64 {
    sample_poisson_raw(r, p.lambda())
}

/// Rate threshold between the inversion and transformed-rejection samplers.
pub const POISSON_PTRS_CUTOFF: f64 = 10.0;

pub(crate) fn sample_poisson_raw(r: &mut RngStream, lambda: f64) -> u64 {
    if lambda < POISSON_PTRS_CUTOFF {
        poisson_inversion(r, lambda)
    } else {
        poisson_ptrs(r, lambda)
    }
}

fn poisson_inversion(r: &mut RngStream, lambda: f64) -> u64 {
    let mut k = 0u64;
    let mut prob = (-lambda).exp();
    let mut cum = prob;
    let u = r.uniform();
    // cum saturates below 1 once prob underflows; the cap breaks the
    // (astronomically unlikely) stall for u above the saturation point
    let cap = (10.0 * lambda) as u64 + 100;
    while u > cum && k < cap {
        k += 1;
        prob *= lambda / k as f64;
        cum += prob;
    }
    k
}

fn poisson_ptrs(r: &mut RngStream, lambda: f64) -> u64 {
    let slam = lambda.sqrt();
    let loglam = lambda.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = r.uniform() - 0.5;
        let v = r.uniform();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if (v * inv_alpha / (a / (us * us) + b)).ln()
            <= k * loglam - lambda - crate::special::raw::ln_gamma(k + 1.0)
        {
            return k as u64;
        }
    }
}

/// Negative binomial draw by its gamma-Poisson composition: lambda ~
/// Gamma(alpha, (1 - theta)/theta), then x ~ Poisson(lambda).
pub fn sample_negbin(r: &mut RngStream, p: &NegBinParam) -> u64 {
    sample_negbin_raw(r, p.alpha(), p.theta())
}

pub(crate) fn sample_negbin_raw(r: &mut RngStream, alpha: f64, theta: f64) -> u64 {
    let rate = (1.0 - theta) / theta;
    let lambda = sample_gamma_raw(r, alpha, rate);
    if lambda <= 0.0 {
        // shape < 1 boost can underflow to zero mean
        return 0;
    }
    sample_poisson_raw(r, lambda)
}

/// Dirichlet draw as normalized independent Gamma(alpha_i, 1) variates.
pub fn sample_dirichlet(r: &mut RngStream, p: &DirichletParam) -> SimplexVector {
    loop {
        let draws: Vec<f64> = p.alphas().iter().map(|&a| sample_gamma_raw(r, a, 1.0)).collect();
        let sum: f64 = draws.iter().sum();
        if sum > 0.0 && sum.is_finite() {
            let coords: Vec<f64> = draws.iter().map(|x| x / sum).collect();
            if let Ok(s) = SimplexVector::new(coords) {
                return s;
            }
        }
        // all components underflowed (tiny concentrations); redraw
    }
}

/// Multinomial draw by the sequential conditional-binomial scheme. The
/// returned counts always sum to m.
pub fn sample_multinomial(r: &mut RngStream, p: &MultinomialParam) -> CountVector {
    sample_multinomial_raw(r, p.m(), p.probs().coords())
}

pub(crate) fn sample_multinomial_raw(r: &mut RngStream, m: u64, probs: &[f64]) -> CountVector {
    let k = probs.len();
    let mut counts = vec![0u64; k];
    let mut remaining = m;
    let mut rest = 1.0f64;
    for i in 0..k.saturating_sub(1) {
        if remaining == 0 || rest <= 0.0 {
            break;
        }
        let cell = (probs[i] / rest).clamp(0.0, 1.0);
        let x = sample_binomial(r, remaining, cell);
        counts[i] = x;
        remaining -= x;
        rest -= probs[i];
    }
    counts[k - 1] += remaining;
    CountVector::new(counts)
}

/// Binomial(n, p) by inversion (BINV). p is mirrored above 1/2 and n is
/// split recursively whenever q^n would underflow.
fn sample_binomial(r: &mut RngStream, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    if p > 0.5 {
        return n - sample_binomial(r, n, 1.0 - p);
    }
    let q = 1.0 - p;
    if n as f64 * q.ln() < -700.0 {
        let half = n / 2;
        return sample_binomial(r, half, p) + sample_binomial(r, n - half, p);
    }
    let s = p / q;
    let a = (n as f64 + 1.0) * s;
    let mut prob = (n as f64 * q.ln()).exp();
    let mut cum = prob;
    let mut x = 0u64;
    let u = r.uniform();
    while u > cum && x < n {
        x += 1;
        prob *= a / x as f64 - s;
        cum += prob;
    }
    x
}

/// Multinomial draw realized by its conditioning construction: independent
/// Poisson(lambda_i) vectors are rejected until their sum equals m. The
/// result is distributed as a multinomial with pi_i = lambda_i / lambda_0.
///
/// The acceptance probability P(sum = m) is estimated up front from the
/// Poisson PMF of the total; below [`MIN_ACCEPTANCE`] the call is refused.
pub fn sample_multinomial_by_conditioning(
    r: &mut RngStream,
    lambdas: &[f64],
    m: u64,
) -> Result<CountVector> {
    if lambdas.is_empty() {
        return Err(Error::EmptyData);
    }
    for (i, &lam) in lambdas.iter().enumerate() {
        if !(lam.is_finite() && lam > 0.0) {
            return Err(Error::Domain(format!("lambda [{i}] must be positive, got {lam}")));
        }
    }
    let lambda0: f64 = lambdas.iter().sum();
    let acceptance = poisson_log_pmf_raw(lambda0, m).exp();
    if acceptance < MIN_ACCEPTANCE {
        return Err(Error::AcceptanceTooLow { acceptance, floor: MIN_ACCEPTANCE });
    }
    for _ in 0..REJECTION_CAP {
        let mut counts = Vec::with_capacity(lambdas.len());
        let mut total = 0u64;
        for &lam in lambdas {
            let x = sample_poisson_raw(r, lam);
            total += x;
            if total > m {
                break;
            }
            counts.push(x);
        }
        if total == m && counts.len() == lambdas.len() {
            return Ok(CountVector::new(counts));
        }
    }
    Err(Error::RejectionBudgetExceeded { cap: REJECTION_CAP, acceptance })
}

/// Dirichlet-multinomial draw by composition: pi ~ Dirichlet(alpha),
/// then x ~ Multinomial(m, pi).
pub fn sample_dirmult(r: &mut RngStream, p: &DirMultParam) -> CountVector {
    let dir = DirichletParam::new(p.alphas().to_vec()).expect("validated at construction");
    let weights = sample_dirichlet(r, &dir);
    sample_multinomial_raw(r, p.m(), weights.coords())
}

/// Dirichlet-multinomial draw by its conditioning construction: independent
/// NB(alpha_i, theta) vectors rejected until their sum equals m. Any theta
/// in (0, 1) yields the same conditional distribution; theta only changes
/// the acceptance rate.
pub fn sample_dirmult_by_conditioning(
    r: &mut RngStream,
    alphas: &[f64],
    theta: f64,
    m: u64,
) -> Result<CountVector> {
    if alphas.is_empty() {
        return Err(Error::EmptyData);
    }
    for (i, &a) in alphas.iter().enumerate() {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Domain(format!("alpha [{i}] must be positive, got {a}")));
        }
    }
    if !(theta.is_finite() && theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain(format!("theta must lie in (0, 1), got {theta}")));
    }
    let alpha0: f64 = alphas.iter().sum();
    let acceptance = negbin_log_pmf_raw(alpha0, theta, m).exp();
    if acceptance < MIN_ACCEPTANCE {
        return Err(Error::AcceptanceTooLow { acceptance, floor: MIN_ACCEPTANCE });
    }
    for _ in 0..REJECTION_CAP {
        let mut counts = Vec::with_capacity(alphas.len());
        let mut total = 0u64;
        for &a in alphas {
            let x = sample_negbin_raw(r, a, theta);
            total += x;
            if total > m {
                break;
            }
            counts.push(x);
        }
        if total == m && counts.len() == alphas.len() {
            return Ok(CountVector::new(counts));
        }
    }
    Err(Error::RejectionBudgetExceeded { cap: REJECTION_CAP, acceptance })
}
