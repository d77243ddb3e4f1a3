//! Maximum-likelihood and method-of-moments estimation: closed-form Poisson,
//! profile Newton in ln alpha for the negative binomial, and digamma
//! fixed-point iteration with a Newton polish for the Dirichlet-multinomial.

use serde::Serialize;

use crate::dist::{
    dirmult_log_pmf_raw, negbin_log_pmf_raw, poisson_log_pmf_raw, CountVector, DirichletParam,
    NegBinParam, PoissonParam,
};
use crate::error::{Error, Result};
use crate::special::raw::{digamma, trigamma};

/// Newton convergence threshold on |d loglik / d ln alpha| for the NB fit.
pub const SCORE_TOL: f64 = 1e-10;
/// Fixed-point convergence threshold on the parameter step infinity-norm.
pub const STEP_TOL: f64 = 1e-8;
/// A fit reports converged only when its exit gradient norm is below this.
pub const GRAD_TOL: f64 = 1e-8;
/// Iteration cap for the NB profile Newton.
pub const MAX_NEWTON_ITERS: u32 = 100;
/// Iteration cap for the Dirichlet-multinomial fixed point.
pub const MAX_FIXED_POINT_ITERS: u32 = 500;
/// Shape cap reported for under-dispersed (boundary) NB fits.
pub const NEGBIN_ALPHA_CAP: f64 = 1e8;
/// Rate floor reported for all-zero Poisson data.
pub const POISSON_LAMBDA_FLOOR: f64 = 1e-12;
/// Total concentration above which a Dirichlet-multinomial fit is flagged as
/// effectively multinomial.
pub const NEAR_MULTINOMIAL_ALPHA0: f64 = 1e7;

/// Terminal state of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitStatus {
    Converged,
    /// All-zero data; the rate was pinned at its configured floor.
    DegenerateFloor,
    /// Sample variance did not exceed the mean; shape pinned at its cap.
    BoundaryUnderdispersed,
    /// No overdispersion relative to a multinomial; total concentration
    /// exceeded [`NEAR_MULTINOMIAL_ALPHA0`].
    NearMultinomial,
    IterationLimit,
}

/// Fitted parameters with optimizer diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult<P> {
    pub params: P,
    pub log_likelihood: f64,
    pub iterations: u32,
    pub converged: bool,
    /// Exit score norm in ln-parameter space; identically 0 for closed-form
    /// fits, where the score vanishes by construction.
    pub gradient_norm: f64,
    pub status: FitStatus,
}

fn sample_mean(data: &[u64]) -> f64 {
    let sum: u128 = data.iter().map(|&x| x as u128).sum();
    sum as f64 / data.len() as f64
}

/// Unbiased sample variance (n - 1 denominator).
fn sample_variance(data: &[u64], mean: f64) -> f64 {
    let n = data.len() as f64;
    data.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Closed-form Poisson MLE: the sample mean. All-zero data is pinned at
/// [`POISSON_LAMBDA_FLOOR`] and flagged.
pub fn fit_poisson(data: &[u64]) -> Result<FitResult<PoissonParam>> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let mean = sample_mean(data);
    let (lambda, status) = if mean > 0.0 {
        (mean, FitStatus::Converged)
    } else {
        (POISSON_LAMBDA_FLOOR, FitStatus::DegenerateFloor)
    };
    let params = PoissonParam::new(lambda)?;
    let log_likelihood = data.iter().map(|&x| poisson_log_pmf_raw(lambda, x)).sum();
    Ok(FitResult {
        params,
        log_likelihood,
        iterations: 0,
        converged: true,
        gradient_norm: 0.0,
        status,
    })
}

/// Method-of-moments NB initializer: alpha = mean^2 / (variance - mean).
/// Requires variance > mean.
pub fn moments_init_negbin(data: &[u64]) -> Result<NegBinParam> {
    if data.len() < 2 {
        return Err(Error::Domain("need at least 2 observations".into()));
    }
    let mean = sample_mean(data);
    let var = sample_variance(data, mean);
    if var <= mean {
        return Err(Error::Domain(format!(
            "moment initializer requires variance > mean (got variance {var}, mean {mean})"
        )));
    }
    NegBinParam::from_mean(mean * mean / (var - mean), mean)
}

/// Value/weight table so repeated digamma sums run over distinct counts only.
struct FreqTable {
    pairs: Vec<(f64, f64)>,
}

impl FreqTable {
    fn new(values: impl Iterator<Item = u64>) -> Self {
        let mut map = std::collections::BTreeMap::new();
        for v in values {
            *map.entry(v).or_insert(0u64) += 1;
        }
        Self { pairs: map.into_iter().map(|(v, w)| (v as f64, w as f64)).collect() }
    }

    /// sum over values of weight * [psi(a + v) - psi(a)]
    fn digamma_diff(&self, a: f64) -> f64 {
        let base = digamma(a);
        self.pairs
            .iter()
            .map(|&(v, w)| if v == 0.0 { 0.0 } else { w * (digamma(a + v) - base) })
            .sum()
    }

    /// sum over values of weight * [psi'(a + v) - psi'(a)]
    fn trigamma_diff(&self, a: f64) -> f64 {
        let base = trigamma(a);
        self.pairs
            .iter()
            .map(|&(v, w)| if v == 0.0 { 0.0 } else { w * (trigamma(a + v) - base) })
            .sum()
    }
}

/// Profile log-likelihood of the NB shape with the mean fixed at the sample
/// mean (the mean score solves exactly there for any alpha).
pub fn negbin_profile_loglik(data: &[u64], alpha: f64) -> f64 {
    let mean = sample_mean(data);
    let theta = mean / (mean + alpha);
    data.iter().map(|&x| negbin_log_pmf_raw(alpha, theta, x)).sum()
}

/// d/d(ln alpha) of the profile log-likelihood.
pub fn negbin_profile_score(data: &[u64], alpha: f64) -> f64 {
    let table = FreqTable::new(data.iter().copied());
    let mean = sample_mean(data);
    let n = data.len() as f64;
    alpha * profile_score_alpha(&table, n, mean, alpha)
}

/// d^2/d(alpha)^2 of the profile log-likelihood; the observed information of
/// the shape estimate is the negative of this at the optimum.
pub fn negbin_profile_curvature(data: &[u64], alpha: f64) -> f64 {
    let table = FreqTable::new(data.iter().copied());
    let mean = sample_mean(data);
    let n = data.len() as f64;
    profile_curvature_alpha(&table, n, mean, alpha)
}

fn profile_score_alpha(table: &FreqTable, n: f64, mean: f64, alpha: f64) -> f64 {
    table.digamma_diff(alpha) + n * (alpha / (mean + alpha)).ln()
}

fn profile_curvature_alpha(table: &FreqTable, n: f64, mean: f64, alpha: f64) -> f64 {
    table.trigamma_diff(alpha) + n * (1.0 / alpha - 1.0 / (mean + alpha))
}

/// NB maximum likelihood: mean at the sample mean, shape by Newton in
/// ln alpha on the profile score, started from the moment estimate.
///
/// Under-dispersed data (variance <= mean) has no interior optimum; the fit
/// returns the shape cap with a boundary status instead of failing.
pub fn fit_negbin(data: &[u64]) -> Result<FitResult<NegBinParam>> {
    if data.len() < 2 {
        return Err(Error::Domain("need at least 2 observations".into()));
    }
    let mean = sample_mean(data);
    let n = data.len() as f64;
    let var = sample_variance(data, mean);
    if var <= mean || mean == 0.0 {
        let mu = if mean > 0.0 { mean } else { POISSON_LAMBDA_FLOOR };
        let params = NegBinParam::from_mean(NEGBIN_ALPHA_CAP, mu)?;
        let table = FreqTable::new(data.iter().copied());
        let score = NEGBIN_ALPHA_CAP * profile_score_alpha(&table, n, mu, NEGBIN_ALPHA_CAP);
        let log_likelihood =
            data.iter().map(|&x| negbin_log_pmf_raw(params.alpha(), params.theta(), x)).sum();
        return Ok(FitResult {
            params,
            log_likelihood,
            iterations: 0,
            converged: false,
            gradient_norm: score.abs(),
            status: FitStatus::BoundaryUnderdispersed,
        });
    }

    let table = FreqTable::new(data.iter().copied());
    let init = (mean * mean / (var - mean)).clamp(1e-3, 1e6);
    let mut s = init.ln();
    let mut iterations = 0u32;
    let mut score = f64::NAN;
    let mut status = FitStatus::IterationLimit;
    while iterations < MAX_NEWTON_ITERS {
        iterations += 1;
        let alpha = s.exp();
        if alpha > NEGBIN_ALPHA_CAP {
            status = FitStatus::BoundaryUnderdispersed;
            s = NEGBIN_ALPHA_CAP.ln();
            score = NEGBIN_ALPHA_CAP * profile_score_alpha(&table, n, mean, NEGBIN_ALPHA_CAP);
            break;
        }
        let h = profile_score_alpha(&table, n, mean, alpha);
        score = alpha * h;
        if score.abs() <= SCORE_TOL {
            status = FitStatus::Converged;
            break;
        }
        let hp = profile_curvature_alpha(&table, n, mean, alpha);
        let d_score = score + alpha * alpha * hp;
        let mut step = if d_score < 0.0 { -score / d_score } else { score.signum() };
        step = step.clamp(-2.0, 2.0);
        // backtrack on profile log-likelihood decreases
        let ll_here = negbin_profile_loglik_from(&table, n, mean, alpha);
        let mut halved = 0;
        loop {
            let cand = (s + step).exp();
            if negbin_profile_loglik_from(&table, n, mean, cand) >= ll_here - 1e-12 * ll_here.abs()
                || halved >= 30
            {
                break;
            }
            step *= 0.5;
            halved += 1;
        }
        if step.abs() < 1e-13 {
            status = if score.abs() <= GRAD_TOL { FitStatus::Converged } else { status };
            break;
        }
        s += step;
    }

    let alpha = s.exp().min(NEGBIN_ALPHA_CAP);
    let params = NegBinParam::from_mean(alpha, mean)?;
    let log_likelihood =
        data.iter().map(|&x| negbin_log_pmf_raw(params.alpha(), params.theta(), x)).sum();
    Ok(FitResult {
        params,
        log_likelihood,
        iterations,
        converged: status == FitStatus::Converged,
        gradient_norm: score.abs(),
        status,
    })
}

fn negbin_profile_loglik_from(table: &FreqTable, n: f64, mean: f64, alpha: f64) -> f64 {
    // constants in x drop out of the comparison; keep them anyway for clarity
    let theta = mean / (mean + alpha);
    let mut acc = n * alpha * (-theta).ln_1p();
    for &(v, w) in &table.pairs {
        acc += w * negbin_term(alpha, theta, v);
    }
    acc
}

fn negbin_term(alpha: f64, theta: f64, v: f64) -> f64 {
    crate::special::raw::ln_gamma(alpha + v) - crate::special::raw::ln_gamma(alpha)
        - crate::special::raw::ln_gamma(v + 1.0)
        + v * theta.ln()
}

/// Column-major summaries of a Dirichlet-multinomial sample.
struct DirMultData {
    columns: Vec<FreqTable>,
    totals: FreqTable,
    dim: usize,
}

impl DirMultData {
    fn new(rows: &[CountVector]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::Domain("need at least 2 rows".into()));
        }
        let dim = rows[0].len();
        if dim < 2 {
            return Err(Error::Domain(format!("need at least 2 categories, got {dim}")));
        }
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
            }
        }
        for col in 0..dim {
            if rows.iter().all(|row| row.counts()[col] == 0) {
                return Err(Error::DegenerateCategory { index: col });
            }
        }
        if rows.iter().all(|row| row.total() == 0) {
            return Err(Error::Domain("every row has total 0".into()));
        }
        let columns = (0..dim)
            .map(|col| FreqTable::new(rows.iter().map(|row| row.counts()[col])))
            .collect();
        let totals = FreqTable::new(rows.iter().map(|row| row.total()));
        Ok(Self { columns, totals, dim })
    }

    /// Gradient of the log-likelihood in alpha (linear space).
    fn gradient(&self, alphas: &[f64]) -> Vec<f64> {
        let a0: f64 = alphas.iter().sum();
        let den = self.totals.digamma_diff(a0);
        alphas
            .iter()
            .zip(&self.columns)
            .map(|(&a, col)| col.digamma_diff(a) - den)
            .collect()
    }

    fn loglik(&self, alphas: &[f64]) -> f64 {
        let a0: f64 = alphas.iter().sum();
        let mut acc = 0.0;
        for &(m, w) in &self.totals.pairs {
            acc += w
                * (crate::special::raw::ln_gamma(a0) + crate::special::raw::ln_gamma(m + 1.0)
                    - crate::special::raw::ln_gamma(a0 + m));
        }
        for (a, col) in alphas.iter().zip(&self.columns) {
            for &(v, w) in &col.pairs {
                acc += w
                    * (crate::special::raw::ln_gamma(a + v) - crate::special::raw::ln_gamma(*a)
                        - crate::special::raw::ln_gamma(v + 1.0));
            }
        }
        acc
    }
}

/// Joint log-likelihood of `rows` under concentrations `alphas`, equal to the
/// sum of [`crate::dist::dirmult_log_pmf`] over the rows.
pub fn dirmult_loglik(rows: &[CountVector], alphas: &[f64]) -> f64 {
    rows.iter().map(|row| dirmult_log_pmf_raw(alphas, row)).sum()
}

/// Gradient of [`dirmult_loglik`] with respect to ln alpha_i.
pub fn dirmult_score(rows: &[CountVector], alphas: &[f64]) -> Result<Vec<f64>> {
    let data = DirMultData::new(rows)?;
    Ok(data.gradient(alphas).iter().zip(alphas).map(|(g, a)| g * a).collect())
}

/// One digamma fixed-point update of the concentrations. The update never
/// decreases the log-likelihood.
pub fn dirmult_fixed_point_step(rows: &[CountVector], alphas: &[f64]) -> Result<Vec<f64>> {
    let data = DirMultData::new(rows)?;
    Ok(fixed_point_step(&data, alphas))
}

fn fixed_point_step(data: &DirMultData, alphas: &[f64]) -> Vec<f64> {
    let a0: f64 = alphas.iter().sum();
    let den = data.totals.digamma_diff(a0);
    alphas
        .iter()
        .zip(&data.columns)
        .map(|(&a, col)| a * col.digamma_diff(a) / den)
        .collect()
}

/// Method-of-moments Dirichlet-multinomial initializer from the mean
/// proportions and the per-category proportion variances.
pub fn moments_init_dirmult(rows: &[CountVector]) -> Result<DirichletParam> {
    let data = DirMultData::new(rows)?;
    let dim = data.dim;
    let grand_total: f64 = rows.iter().map(|r| r.total() as f64).sum();
    let mean_props: Vec<f64> = (0..dim)
        .map(|c| rows.iter().map(|r| r.counts()[c] as f64).sum::<f64>() / grand_total)
        .collect();

    // invert Var(p) = pi (1 - pi) (a0 + m) / (m (a0 + 1)) per category,
    // using the mean row total for m; fall back to a0 = dim when flat
    let mean_m = grand_total / rows.len() as f64;
    let mut estimates = Vec::new();
    for c in 0..dim {
        let props: Vec<f64> = rows
            .iter()
            .filter(|r| r.total() > 0)
            .map(|r| r.counts()[c] as f64 / r.total() as f64)
            .collect();
        if props.len() < 2 {
            continue;
        }
        let mp = props.iter().sum::<f64>() / props.len() as f64;
        let vp = props.iter().map(|p| (p - mp) * (p - mp)).sum::<f64>()
            / (props.len() as f64 - 1.0);
        let denom = mp * (1.0 - mp);
        if vp > 0.0 && denom > 0.0 && mean_m > 1.0 {
            let w = vp / denom;
            let a0 = mean_m * (1.0 - w) / (w * mean_m - 1.0);
            if a0.is_finite() && a0 > 0.0 {
                estimates.push(a0);
            }
        }
    }
    let a0 = if estimates.is_empty() {
        dim as f64
    } else {
        estimates.sort_by(f64::total_cmp);
        estimates[estimates.len() / 2].clamp(1e-2, 1e6)
    };
    DirichletParam::new(mean_props.iter().map(|p| (p * a0).max(1e-6)).collect())
}

/// Dirichlet-multinomial maximum likelihood over the concentration vector:
/// monotone digamma fixed-point iteration to [`STEP_TOL`], then a Newton
/// polish in ln alpha using the diagonal-plus-rank-one Hessian.
///
/// Rows may carry different totals; the fitted record is the concentration
/// vector. Data without overdispersion drives the total concentration to the
/// [`NEAR_MULTINOMIAL_ALPHA0`] flag threshold.
pub fn fit_dirmult(rows: &[CountVector]) -> Result<FitResult<DirichletParam>> {
    let data = DirMultData::new(rows)?;
    let init = moments_init_dirmult(rows)?;
    let mut alphas = init.alphas().to_vec();
    let mut iterations = 0u32;
    let mut status = FitStatus::IterationLimit;

    while iterations < MAX_FIXED_POINT_ITERS {
        iterations += 1;
        let next = fixed_point_step(&data, &alphas);
        let step_inf = next
            .iter()
            .zip(&alphas)
            .map(|(n, o)| (n - o).abs())
            .fold(0.0, f64::max);
        alphas = next;
        let a0: f64 = alphas.iter().sum();
        if a0 > NEAR_MULTINOMIAL_ALPHA0 {
            status = FitStatus::NearMultinomial;
            break;
        }
        if step_inf <= STEP_TOL {
            status = FitStatus::Converged;
            break;
        }
    }

    // Newton polish in s = ln alpha; Hessian there is diag + c alpha alpha^T
    if status != FitStatus::NearMultinomial {
        for _ in 0..50 {
            iterations += 1;
            let grad = data.gradient(&alphas);
            let grad_s: Vec<f64> = grad.iter().zip(&alphas).map(|(g, a)| g * a).collect();
            if grad_s.iter().map(|g| g.abs()).fold(0.0, f64::max) <= 1e-10 {
                break;
            }
            let a0: f64 = alphas.iter().sum();
            let c = trigamma(a0) * data.totals.pairs.iter().map(|&(_, w)| w).sum::<f64>()
                - data
                    .totals
                    .pairs
                    .iter()
                    .map(|&(m, w)| if m == 0.0 { w * trigamma(a0) } else { w * trigamma(a0 + m) })
                    .sum::<f64>();
            let diag: Vec<f64> = alphas
                .iter()
                .zip(&data.columns)
                .zip(&grad_s)
                .map(|((&a, col), &gs)| a * a * col.trigamma_diff(a) + gs)
                .collect();
            if diag.iter().any(|&d| d >= 0.0) {
                break; // not in the concave basin; keep the fixed-point result
            }
            let u_d_g: f64 =
                alphas.iter().zip(&diag).zip(&grad_s).map(|((a, d), g)| a * g / d).sum();
            let u_d_u: f64 = alphas.iter().zip(&diag).map(|(a, d)| a * a / d).sum();
            let denom = 1.0 + c * u_d_u;
            if denom.abs() < 1e-14 {
                break;
            }
            let ll_here = data.loglik(&alphas);
            let mut scale = 1.0f64;
            let mut accepted = false;
            for _ in 0..30 {
                let cand: Vec<f64> = alphas
                    .iter()
                    .zip(&diag)
                    .zip(&grad_s)
                    .map(|((&a, &d), &g)| {
                        let delta = -(g / d - c * u_d_g / denom * a / d);
                        a * (scale * delta.clamp(-1.0, 1.0)).exp()
                    })
                    .collect();
                if data.loglik(&cand) >= ll_here - 1e-12 * ll_here.abs() {
                    alphas = cand;
                    accepted = true;
                    break;
                }
                scale *= 0.5;
            }
            if !accepted {
                break;
            }
            if alphas.iter().sum::<f64>() > NEAR_MULTINOMIAL_ALPHA0 {
                status = FitStatus::NearMultinomial;
                break;
            }
        }
    }

    let grad_s_norm = data
        .gradient(&alphas)
        .iter()
        .zip(&alphas)
        .map(|(g, a)| (g * a).abs())
        .fold(0.0, f64::max);
    let converged = status != FitStatus::NearMultinomial && grad_s_norm <= GRAD_TOL;
    if converged {
        status = FitStatus::Converged;
    } else if status == FitStatus::Converged {
        status = FitStatus::IterationLimit;
    }
    let params = DirichletParam::new(alphas)?;
    let log_likelihood = dirmult_loglik(rows, params.alphas());
    Ok(FitResult {
        params,
        log_likelihood,
        iterations,
        converged,
        gradient_norm: grad_s_norm,
        status,
    })
}
