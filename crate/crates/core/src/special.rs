//! Log-gamma and the regularized incomplete gamma functions.

use crate::error::{Error, Result};

const MAX_ITER: usize = 10_000;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Returns `(P(a, x), Q(a, x))`.
///
/// Series expansion of P when `x < a + 1`, Lentz continued fraction for Q
/// otherwise; the other half is obtained by complement.
pub fn regularized_gamma(a: f64, x: f64) -> Result<(f64, f64)> {
    if !a.is_finite() || a <= 0.0 {
        return Err(Error::InvalidArgument(format!("gamma shape must be positive, got {a}")));
    }
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite argument {x}")));
    }
    if x < 0.0 {
        return Err(Error::InvalidArgument(format!("negative argument {x}")));
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }

    let log_prefactor = a * x.ln() - x - ln_gamma(a);

    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut denom = a;
        for _ in 0..MAX_ITER {
            denom += 1.0;
            term *= x / denom;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                let p = (sum.ln() + log_prefactor).exp().min(1.0);
                return Ok((p, 1.0 - p));
            }
        }
        Err(Error::Numeric(format!("gamma series did not converge (a={a}, x={x})")))
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
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
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                let q = (log_prefactor + h.ln()).exp().min(1.0);
                return Ok((1.0 - q, q));
            }
        }
        Err(Error::Numeric(format!(
            "gamma continued fraction did not converge (a={a}, x={x})"
        )))
    }
}
