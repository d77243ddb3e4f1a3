//! Numerically stable special functions underpinning every log-density and
//! fitting routine in the crate.
//!
//! All probability computation elsewhere in the library happens in log space;
//! linear-space values only materialize at API edges. The public functions
//! here validate their domain and return [`Error::Domain`] on violation; the
//! `raw` submodule exposes the unchecked kernels for internal hot paths where
//! validity is guaranteed by construction.

use crate::error::{Error, Result};

/// Unchecked kernels. Callers must guarantee the domain preconditions.
pub(crate) mod raw {
    /// ln(pi)
    pub const LN_PI: f64 = 1.144_729_885_849_400_2;
    /// ln(2 * sqrt(e / pi))
    const LN_2_SQRT_E_OVER_PI: f64 = 0.620_782_237_635_245_2;

    /// Lanczos coefficients for g = 10.900511, n = 11 (Pugh 2004, p. 116).
    const LANCZOS_DK: [f64; 11] = [
        2.485_740_891_387_535_5e-5,
        1.051_423_785_817_219_7,
        -3.456_870_972_220_162_5,
        4.512_277_094_668_948,
        -2.982_852_253_235_766_4,
        1.056_397_115_771_267,
        -1.954_287_731_916_458_7e-1,
        1.709_705_434_044_412e-2,
        -5.719_261_174_043_057e-4,
        4.633_994_733_599_057e-6,
        -2.719_949_084_886_077_2e-9,
    ];
    const LANCZOS_R: f64 = 10.900511;

    /// ln Gamma(x) for x > 0.
    pub fn ln_gamma(x: f64) -> f64 {
        debug_assert!(x > 0.0);
        if x == 1.0 || x == 2.0 {
            // exact zeros keep log-PMFs exact at their x = 0 anchors
            return 0.0;
        }
        if x < 0.5 {
            // reflection through Gamma(x)Gamma(1-x) = pi / sin(pi x)
            let s = LANCZOS_DK
                .iter()
                .enumerate()
                .skip(1)
                .fold(LANCZOS_DK[0], |s, (k, d)| s + d / (k as f64 - x));
            LN_PI
                - (std::f64::consts::PI * x).sin().ln()
                - s.ln()
                - LN_2_SQRT_E_OVER_PI
                - (0.5 - x) * ((0.5 - x + LANCZOS_R) / std::f64::consts::E).ln()
        } else {
            let s = LANCZOS_DK
                .iter()
                .enumerate()
                .skip(1)
                .fold(LANCZOS_DK[0], |s, (k, d)| s + d / (x + k as f64 - 1.0));
            s.ln()
                + LN_2_SQRT_E_OVER_PI
                + (x - 0.5) * ((x - 0.5 + LANCZOS_R) / std::f64::consts::E).ln()
        }
    }

    /// Recurrence-shift threshold for the psi-function asymptotic series.
    const PSI_SHIFT: f64 = 6.0;

    /// B_{2k}/(2k) for k = 1..8, the digamma asymptotic coefficients.
    const DIGAMMA_ASYMP: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 120.0,
        1.0 / 252.0,
        -1.0 / 240.0,
        1.0 / 132.0,
        -691.0 / 32760.0,
        1.0 / 12.0,
        -3617.0 / 8160.0,
    ];

    /// digamma(x) = d/dx ln Gamma(x) for x > 0.
    ///
    /// Shifts x up to >= 6 with psi(x) = psi(x+1) - 1/x, then evaluates the
    /// asymptotic series psi(z) ~ ln z - 1/(2z) - sum B_{2k}/(2k z^{2k}).
    pub fn digamma(x: f64) -> f64 {
        debug_assert!(x > 0.0);
        let mut acc = 0.0;
        let mut z = x;
        while z < PSI_SHIFT {
            acc -= 1.0 / z;
            z += 1.0;
        }
        let inv = 1.0 / z;
        let inv2 = inv * inv;
        let mut tail = 0.0;
        for c in DIGAMMA_ASYMP.iter().rev() {
            tail = (tail + c) * inv2;
        }
        acc + z.ln() - 0.5 * inv - tail
    }

    /// B_{2k} for k = 1..8, the trigamma asymptotic coefficients.
    const TRIGAMMA_ASYMP: [f64; 8] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
    ];

    /// trigamma(x) = d^2/dx^2 ln Gamma(x) for x > 0.
    ///
    /// Same shift as [`digamma`] with psi'(x) = psi'(x+1) + 1/x^2, then
    /// psi'(z) ~ 1/z + 1/(2z^2) + sum B_{2k} z^{-(2k+1)}.
    pub fn trigamma(x: f64) -> f64 {
        debug_assert!(x > 0.0);
        let mut acc = 0.0;
        let mut z = x;
        while z < PSI_SHIFT {
            acc += 1.0 / (z * z);
            z += 1.0;
        }
        let inv = 1.0 / z;
        let inv2 = inv * inv;
        let mut tail = 0.0;
        for c in TRIGAMMA_ASYMP.iter().rev() {
            tail = (tail + c) * inv2;
        }
        acc + inv + 0.5 * inv2 + inv * tail
    }

    /// ln of the multivariate beta function: sum ln Gamma(a_i) - ln Gamma(sum a_i).
    pub fn ln_multi_beta(alphas: &[f64]) -> f64 {
        let total: f64 = alphas.iter().sum();
        alphas.iter().map(|&a| ln_gamma(a)).sum::<f64>() - ln_gamma(total)
    }

    /// Regularized lower incomplete gamma P(a, x) for a > 0, x >= 0.
    ///
    /// Series expansion for x < a + 1, Lentz continued fraction for the
    /// complement otherwise.
    pub fn reg_gamma_p(a: f64, x: f64) -> f64 {
        debug_assert!(a > 0.0 && x >= 0.0);
        if x == 0.0 {
            return 0.0;
        }
        let ln_prefactor = a * x.ln() - x - ln_gamma(a);
        if x < a + 1.0 {
            // P(a,x) = x^a e^{-x} / Gamma(a) * sum_{n>=0} x^n / (a (a+1) ... (a+n))
            let mut term = 1.0 / a;
            let mut sum = term;
            let mut n = 1.0;
            while n < 10_000.0 {
                term *= x / (a + n);
                sum += term;
                if term.abs() < sum.abs() * 1e-17 {
                    break;
                }
                n += 1.0;
            }
            (sum * ln_prefactor.exp()).clamp(0.0, 1.0)
        } else {
            // Q(a,x) by modified Lentz on the standard continued fraction.
            const TINY: f64 = 1e-300;
            let mut b = x + 1.0 - a;
            let mut c = 1.0 / TINY;
            let mut d = 1.0 / b;
            let mut h = d;
            for i in 1..10_000 {
                let an = -(i as f64) * (i as f64 - a);
                b += 2.0;
                d = an * d + b;
                if d.abs() < TINY {
                    d = TINY;
                }
                c = b + an / c;
                if c.abs() < TINY {
                    c = TINY;
                }
                d = 1.0 / d;
                let del = d * c;
                h *= del;
                if (del - 1.0).abs() < 1e-16 {
                    break;
                }
            }
            let q = ln_prefactor.exp() * h;
            (1.0 - q).clamp(0.0, 1.0)
        }
    }

    /// ln sum exp(v_i), overflow-free; returns -inf for all -inf input.
    pub fn log_sum_exp(values: &[f64]) -> f64 {
        debug_assert!(!values.is_empty());
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        if max.is_infinite() {
            return f64::INFINITY;
        }
        let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
        max + sum.ln()
    }
}

fn ensure_positive(x: f64, what: &str) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be positive and finite, got {x}")))
    }
}

/// ln Gamma(x) for x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    ensure_positive(x, "x")?;
    Ok(raw::ln_gamma(x))
}

/// psi(x) = d/dx ln Gamma(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    ensure_positive(x, "x")?;
    Ok(raw::digamma(x))
}

/// psi'(x) for x > 0.
pub fn trigamma(x: f64) -> Result<f64> {
    ensure_positive(x, "x")?;
    Ok(raw::trigamma(x))
}

/// ln B(a_1, ..., a_k) = sum ln Gamma(a_i) - ln Gamma(sum a_i), k >= 2.
pub fn log_beta_multivariate(alphas: &[f64]) -> Result<f64> {
    if alphas.len() < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 concentration entries, got {}",
            alphas.len()
        )));
    }
    for &a in alphas {
        ensure_positive(a, "concentration entry")?;
    }
    Ok(raw::ln_multi_beta(alphas))
}

/// Regularized lower incomplete gamma P(a, x), monotone in x with
/// P(a, 0) = 0 and limit 1 as x grows.
pub fn regularized_gamma_p(a: f64, x: f64) -> Result<f64> {
    ensure_positive(a, "a")?;
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!("x must be finite and >= 0, got {x}")));
    }
    Ok(raw::reg_gamma_p(a, x))
}

/// ln sum exp(v_i) without overflow for inputs spanning +-700.
/// -inf entries are allowed; an all -inf vector returns -inf.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("log_sum_exp of an empty vector".into()));
    }
    Ok(raw::log_sum_exp(values))
}
