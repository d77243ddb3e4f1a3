//! Constructive counterparts of the closed-form densities: each compound or
//! conditioning relationship is computed from its defining construction
//! (mixture integral, conditioned independents, change of variables) so that
//! it can be compared against the closed form in [`crate::dist`] as a
//! machine-checked equivalence.

use serde::{Deserialize, Serialize};

use crate::dist::{
    gamma_log_pdf_raw, negbin_log_pmf_raw, poisson_log_pmf_raw, CountVector, SimplexVector,
};
use crate::error::{Error, Result};
use crate::quad;

/// Outcome of comparing two log-scale routes to the same quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceResult {
    pub lhs_log_value: f64,
    pub rhs_log_value: f64,
    pub abs_diff: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl EquivalenceResult {
    pub fn compare(lhs_log_value: f64, rhs_log_value: f64, tolerance: f64) -> Self {
        let abs_diff = (lhs_log_value - rhs_log_value).abs();
        Self { lhs_log_value, rhs_log_value, abs_diff, tolerance, passed: abs_diff <= tolerance }
    }
}

fn validate_rates(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::EmptyData);
    }
    for (i, &v) in values.iter().enumerate() {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Domain(format!("{what} [{i}] must be positive, got {v}")));
        }
    }
    Ok(())
}

/// Marginal probability P(X = x) of a Poisson whose rate is gamma-mixed with
/// shape `alpha` and mean `mu`, computed by adaptive quadrature of
/// int_0^inf Poisson(x | lam) Gamma(lam | alpha, alpha/mu) dlam.
///
/// The substitution lam = mu t / (1 - t) maps the half line onto (0, 1); the
/// integrand is evaluated in log space and exponentiated after subtracting
/// its maximum. Agrees with exp([`crate::dist::negbin_log_pmf`]) for the
/// matching parameters; the two routes share no code beyond ln Gamma.
pub fn negbin_via_poisson_gamma(alpha: f64, mu: f64, x: u64) -> Result<f64> {
    validate_rates(&[alpha], "alpha")?;
    validate_rates(&[mu], "mu")?;
    let rate = alpha / mu;
    let g = |t: f64| {
        let lam = mu * t / (1.0 - t);
        if !(lam.is_finite() && lam > 0.0) {
            return f64::NEG_INFINITY;
        }
        // d lam = mu / (1-t)^2 dt
        poisson_log_pmf_raw(lam, x) + gamma_log_pdf_raw(alpha, rate, lam) + mu.ln()
            - 2.0 * (1.0 - t).ln()
    };
    let log_value = quad::integrate_log_01(&g)?;
    Ok(log_value.exp())
}

/// Log-probability of `x` under independent Poissons conditioned on their
/// sum: sum_i ln Poisson(x_i | lambda_i) - ln Poisson(M | lambda_0).
///
/// Deliberately reuses the same special-function calls as the closed-form
/// multinomial PMF so a comparison between the two isolates the algebraic
/// identity rather than special-function error. Invariant under rescaling
/// all lambdas by a common factor.
pub fn multinomial_via_conditioned_poissons(lambdas: &[f64], x: &CountVector) -> Result<f64> {
    validate_rates(lambdas, "lambda")?;
    if lambdas.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: lambdas.len(), got: x.len() });
    }
    let lambda0: f64 = lambdas.iter().sum();
    let joint: f64 = lambdas
        .iter()
        .zip(x.counts())
        .map(|(&lam, &xi)| poisson_log_pmf_raw(lam, xi))
        .sum();
    Ok(joint - poisson_log_pmf_raw(lambda0, x.total()))
}

/// Log-probability of `x` under independent negative binomials with common
/// theta conditioned on their sum:
/// sum_i ln NB(x_i | alpha_i, theta) - ln NB(M | alpha_0, theta).
///
/// theta cancels algebraically in this ratio, so the result is the same for
/// every theta in (0, 1); the cancellation only happens because all
/// components share theta.
pub fn dirmult_via_conditioned_negbins(alphas: &[f64], theta: f64, x: &CountVector) -> Result<f64> {
    validate_rates(alphas, "alpha")?;
    if !(theta.is_finite() && theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain(format!("theta must lie in (0, 1), got {theta}")));
    }
    if alphas.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: alphas.len(), got: x.len() });
    }
    let alpha0: f64 = alphas.iter().sum();
    let joint: f64 = alphas
        .iter()
        .zip(x.counts())
        .map(|(&a, &xi)| negbin_log_pmf_raw(a, theta, xi))
        .sum();
    Ok(joint - negbin_log_pmf_raw(alpha0, theta, x.total()))
}

/// Jacobian of the map (z, y) -> x with x_i = y z_i (i = 1..n) and
/// x_{n+1} = y (1 - sum z_i), stored dense in row-major order.
///
/// Nonzero pattern: d x_i / d z_i = y, d x_i / d y = z_i,
/// d x_{n+1} / d z_i = -y, d x_{n+1} / d y = 1 - sum z_i.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrix {
    n: usize,
    y: f64,
    z: Vec<f64>,
    entries: Vec<f64>,
}

impl JacobianMatrix {
    /// Matrix side length, n + 1.
    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn free_coords(&self) -> &[f64] {
        &self.z
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim() + col]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
}

/// Builds the change-of-variables Jacobian for the n free simplex
/// coordinates `z` (all positive, summing below 1) and scale `y > 0`.
pub fn build_jacobian(z: &[f64], y: f64) -> Result<JacobianMatrix> {
    if z.is_empty() {
        return Err(Error::EmptyData);
    }
    for (i, &zi) in z.iter().enumerate() {
        if !(zi.is_finite() && zi > 0.0) {
            return Err(Error::Domain(format!("z[{i}] must be positive, got {zi}")));
        }
    }
    let sum: f64 = z.iter().sum();
    if sum >= 1.0 {
        return Err(Error::Domain(format!("free coordinates must sum below 1, got {sum}")));
    }
    if !(y.is_finite() && y > 0.0) {
        return Err(Error::Domain(format!("y must be positive, got {y}")));
    }
    let n = z.len();
    let dim = n + 1;
    let mut entries = vec![0.0; dim * dim];
    for i in 0..n {
        entries[i * dim + i] = y;
        entries[i * dim + n] = z[i];
        entries[n * dim + i] = -y;
    }
    entries[n * dim + n] = 1.0 - sum;
    Ok(JacobianMatrix { n, y, z: z.to_vec(), entries })
}

/// Determinant by LU factorization with partial pivoting. This route never
/// uses the closed form y^n, so it serves as an independent check of it.
pub fn jacobian_determinant(j: &JacobianMatrix) -> Result<f64> {
    let dim = j.dim();
    let mut a = j.entries.clone();
    let mut det = 1.0f64;
    for col in 0..dim {
        let mut pivot_row = col;
        let mut pivot_abs = a[col * dim + col].abs();
        for row in (col + 1)..dim {
            let v = a[row * dim + col].abs();
            if v > pivot_abs {
                pivot_abs = v;
                pivot_row = row;
            }
        }
        if pivot_abs == 0.0 || !pivot_abs.is_finite() {
            return Err(Error::SingularMatrix);
        }
        if pivot_row != col {
            for k in 0..dim {
                a.swap(col * dim + k, pivot_row * dim + k);
            }
            det = -det;
        }
        let pivot = a[col * dim + col];
        det *= pivot;
        for row in (col + 1)..dim {
            let factor = a[row * dim + col] / pivot;
            if factor != 0.0 {
                for k in col..dim {
                    a[row * dim + k] -= factor * a[col * dim + k];
                }
            }
        }
    }
    Ok(det)
}

/// Log Dirichlet density at `z` computed from the normalized-gamma
/// construction with unit rate: the joint density of (z, y) is the product
/// of independent Gamma(alpha_i, beta) densities at y z_i times the Jacobian
/// factor y^n, and y is integrated out numerically.
pub fn dirichlet_density_via_gamma_construction(alphas: &[f64], z: &SimplexVector) -> Result<f64> {
    dirichlet_density_via_gamma_construction_with_rate(alphas, z, 1.0)
}

/// Same construction with an explicit gamma rate. The rate cancels in the
/// marginal, so results for different rates agree up to quadrature error.
pub fn dirichlet_density_via_gamma_construction_with_rate(
    alphas: &[f64],
    z: &SimplexVector,
    beta: f64,
) -> Result<f64> {
    validate_rates(alphas, "alpha")?;
    validate_rates(&[beta], "beta")?;
    if alphas.len() < 2 {
        return Err(Error::Domain("need at least 2 concentration entries".into()));
    }
    if alphas.len() != z.len() {
        return Err(Error::DimensionMismatch { expected: alphas.len(), got: z.len() });
    }
    for (i, &zi) in z.coords().iter().enumerate() {
        if zi <= 0.0 {
            return Err(Error::Domain(format!(
                "construction needs an interior simplex point; coordinate [{i}] is {zi}"
            )));
        }
    }
    let n = alphas.len() - 1;
    let alpha0: f64 = alphas.iter().sum();
    // Y ~ Gamma(alpha_0, beta); center the (0,1) substitution on its mean.
    let mean_y = alpha0 / beta;
    let g = |t: f64| {
        let y = mean_y * t / (1.0 - t);
        if !(y.is_finite() && y > 0.0) {
            return f64::NEG_INFINITY;
        }
        let mut acc = n as f64 * y.ln() + mean_y.ln() - 2.0 * (1.0 - t).ln();
        for (&a, &zi) in alphas.iter().zip(z.coords()) {
            acc += gamma_log_pdf_raw(a, beta, y * zi);
        }
        acc
    };
    quad::integrate_log_01(&g)
}
