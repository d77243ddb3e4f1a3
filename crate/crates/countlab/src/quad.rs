//! Adaptive Gauss-Kronrod (G7/K15) quadrature used by the constructive
//! distribution checks. Half-infinite integrals are mapped onto (0, 1) by the
//! caller; log-space integrands are rescaled by their grid maximum before
//! exponentiation so the adaptive pass works on O(1) values.

use crate::error::{Error, Result};

/// 15-point Kronrod nodes, positive half (node 0 first).
const KRONROD_NODES: [f64; 8] = [
    0.0,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
];

const KRONROD_WEIGHTS: [f64; 8] = [
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
];

/// 7-point Gauss weights for the even Kronrod nodes (0, 2, 4, 6).
const GAUSS_WEIGHTS: [f64; 4] = [
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
];

/// One G7/K15 evaluation on [a, b]: (kronrod value, |kronrod - gauss|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = KRONROD_WEIGHTS[0] * fc;
    let mut gauss = GAUSS_WEIGHTS[0] * fc;
    for i in 1..8 {
        let dx = half * KRONROD_NODES[i];
        let fsum = f(center - dx) + f(center + dx);
        kronrod += KRONROD_WEIGHTS[i] * fsum;
        if i % 2 == 0 {
            gauss += GAUSS_WEIGHTS[i / 2] * fsum;
        }
    }
    kronrod *= half;
    gauss *= half;
    (kronrod, (kronrod - gauss).abs())
}

struct Interval {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// Integrates `f` over [0, 1], refining the worst interval until the summed
/// error estimate meets `eps_rel` relative to the running value (or `eps_abs`).
/// Returns (value, error estimate); never fails, callers decide whether the
/// achieved estimate is acceptable.
pub(crate) fn integrate_01<F: Fn(f64) -> f64>(
    f: &F,
    eps_abs: f64,
    eps_rel: f64,
    max_intervals: usize,
) -> (f64, f64) {
    let (v, e) = gk15(f, 0.0, 1.0);
    let mut intervals = vec![Interval { a: 0.0, b: 1.0, value: v, error: e }];
    loop {
        let total_value: f64 = intervals.iter().map(|i| i.value).sum();
        let total_error: f64 = intervals.iter().map(|i| i.error).sum();
        let target = eps_abs.max(eps_rel * total_value.abs());
        if total_error <= target || intervals.len() >= max_intervals {
            return (total_value, total_error);
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap();
        let Interval { a, b, .. } = intervals.swap_remove(worst);
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            // interval no longer splittable at f64 resolution
            let (v, e) = gk15(f, a, b);
            intervals.push(Interval { a, b, value: v, error: e });
            return (
                intervals.iter().map(|i| i.value).sum(),
                intervals.iter().map(|i| i.error).sum(),
            );
        }
        let (lv, le) = gk15(f, a, mid);
        let (rv, re) = gk15(f, mid, b);
        intervals.push(Interval { a, b: mid, value: lv, error: le });
        intervals.push(Interval { a: mid, b, value: rv, error: re });
    }
}

/// Relative error target for the constructive-check integrals.
pub(crate) const QUAD_REL_TARGET: f64 = 1e-11;
/// Achieved-error ceiling above which the integral is reported as
/// non-convergent.
pub(crate) const QUAD_REL_CEILING: f64 = 1e-9;
const MAX_INTERVALS: usize = 2000;
const SCAN_POINTS: usize = 128;

/// Integrates exp(g(t)) over t in (0, 1) where `g` is a log-space integrand
/// (may return -inf); returns the log of the integral. The grid maximum of g
/// is subtracted before exponentiation to keep the adaptive pass in floating
/// range.
pub(crate) fn integrate_log_01<G: Fn(f64) -> f64>(g: &G) -> Result<f64> {
    let mut peak = f64::NEG_INFINITY;
    for i in 1..SCAN_POINTS {
        let t = i as f64 / SCAN_POINTS as f64;
        peak = peak.max(g(t));
    }
    if peak == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let f = |t: f64| {
        let v = g(t);
        if v == f64::NEG_INFINITY {
            0.0
        } else {
            (v - peak).exp()
        }
    };
    let (value, error) = integrate_01(&f, f64::MIN_POSITIVE, QUAD_REL_TARGET, MAX_INTERVALS);
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::QuadratureNonConvergence {
            achieved: f64::INFINITY,
            target: QUAD_REL_CEILING,
        });
    }
    let rel = error / value;
    if rel > QUAD_REL_CEILING {
        return Err(Error::QuadratureNonConvergence { achieved: rel, target: QUAD_REL_CEILING });
    }
    Ok(peak + value.ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        // K15 integrates degree <= 22 exactly: x^8 over [0,1] = 1/9
        let (v, e) = integrate_01(&|x: f64| x.powi(8), 1e-14, 1e-14, 100);
        assert!((v - 1.0 / 9.0).abs() < 1e-15);
        assert!(e < 1e-12);
    }

    #[test]
    fn smooth_transcendental() {
        // int_0^1 e^x dx = e - 1
        let (v, _) = integrate_01(&f64::exp, 1e-14, 1e-13, 200);
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn integrable_endpoint_singularity() {
        // int_0^1 x^{-1/2} dx = 2; needs adaptive refinement near 0
        let (v, e) = integrate_01(&|x: f64| 1.0 / x.sqrt(), 1e-12, 1e-11, 2000);
        assert!((v - 2.0).abs() < 1e-9, "value {v}, err {e}");
    }

    #[test]
    fn log_space_gaussian_bump() {
        // ln integrand of a narrow Gaussian bump; integral known in closed form
        let mu = 0.3;
        let sigma = 0.01;
        let g = |t: f64| {
            let z = (t - mu) / sigma;
            -0.5 * z * z - (sigma * (2.0 * std::f64::consts::PI).sqrt()).ln()
        };
        let log_value = integrate_log_01(&g).unwrap();
        // integral over (0,1) of the density is essentially 1
        assert!(log_value.abs() < 1e-10, "log value {log_value}");
    }

    #[test]
    fn all_neg_inf_integrand_is_zero_mass() {
        let log_value = integrate_log_01(&|_t| f64::NEG_INFINITY).unwrap();
        assert_eq!(log_value, f64::NEG_INFINITY);
    }
}
