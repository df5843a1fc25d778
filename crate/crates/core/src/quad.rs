//! Numerical quadrature: adaptive Gauss-Kronrod (7/15), tanh-sinh for
//! endpoint singularities, and Gauss-Legendre nodes for fixed panels.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub err: f64,
    pub evals: usize,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive G7K15 on a finite interval. Bisects the worst segment until the
/// summed error estimate is below `max(abs_tol, rel_tol*|I|)`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, err: 0.0, evals: 0 });
    }
    let mut segs: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(64);
    let (v, e) = gk15(&mut f, a, b);
    segs.push((a, b, v, e));
    let mut evals = 15;
    for _ in 0..4000 {
        let total: f64 = segs.iter().map(|s| s.2).sum();
        let err: f64 = segs.iter().map(|s| s.3).sum();
        if !total.is_finite() {
            return Err(Error::NoConvergence("non-finite integrand".into()));
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(QuadResult { value: total, err, evals });
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (lo, hi, _, _) = segs.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        evals += 30;
        segs.push((lo, mid, v1, e1));
        segs.push((mid, hi, v2, e2));
    }
    let total: f64 = segs.iter().map(|s| s.2).sum();
    let err: f64 = segs.iter().map(|s| s.3).sum();
    Err(Error::NoConvergence(format!(
        "adaptive quadrature stalled at value {total:e} with error estimate {err:e}"
    )))
}

/// Integral over `[a, ∞)` through the map `x = a + u/(1-u)`.
pub fn integrate_to_inf<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<QuadResult> {
    integrate(
        |u| {
            if u >= 1.0 {
                return 0.0;
            }
            let w = 1.0 - u;
            let v = f(a + u / w);
            if v == 0.0 {
                0.0
            } else {
                v / (w * w)
            }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

/// Tanh-sinh quadrature on `[a, b]`. The integrand receives the abscissa and
/// its distances to both endpoints, which stay accurate near the ends.
pub fn tanh_sinh<F: FnMut(f64, f64, f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<QuadResult> {
    use std::f64::consts::FRAC_PI_2;
    let half = 0.5 * (b - a);
    let mut eval = |t: f64| -> f64 {
        // x = tanh(pi/2 sinh t); 1 - x and 1 + x computed without cancellation
        let s = FRAC_PI_2 * t.sinh();
        let e = (-2.0 * s.abs()).exp();
        let one_minus = 2.0 * e / (1.0 + e);
        let (dl, dr) = if s >= 0.0 {
            (half * (2.0 - one_minus), half * one_minus)
        } else {
            (half * one_minus, half * (2.0 - one_minus))
        };
        if dl <= 0.0 || dr <= 0.0 {
            return 0.0;
        }
        let cosh_s = s.cosh();
        let w = FRAC_PI_2 * t.cosh() / (cosh_s * cosh_s);
        if w == 0.0 || !w.is_finite() {
            return 0.0;
        }
        let x = if dl < dr { a + dl } else { b - dr };
        let v = f(x, dl, dr);
        if v == 0.0 {
            0.0
        } else {
            v * w * half
        }
    };
    let t_max = 6.5;
    let mut h = 0.5;
    let mut evals = 0;
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * h <= t_max {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        evals += 2;
        k += 1;
    }
    let mut prev = sum * h;
    for _ in 0..10 {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= t_max {
            let t = k as f64 * h;
            sum += eval(t) + eval(-t);
            evals += 2;
            k += 2;
        }
        let cur = sum * h;
        let err = (cur - prev).abs();
        if err <= tol * cur.abs().max(1e-300) {
            return Ok(QuadResult { value: cur, err, evals });
        }
        prev = cur;
    }
    Err(Error::NoConvergence(format!(
        "tanh-sinh did not reach relative tolerance {tol:e}"
    )))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = z;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_polynomial_and_exp() {
        let r = integrate(|x| x.exp(), 0.0, 1.0, 1e-14, 1e-14).unwrap();
        assert!((r.value - (1f64.exp() - 1.0)).abs() < 1e-14);
        let r = integrate(|x| x.sqrt(), 0.0, 1.0, 1e-12, 1e-12).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn semi_infinite() {
        let r = integrate_to_inf(|x| (-x).exp(), 0.0, 1e-13, 1e-13).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        // ∫_0^1 x^{-1/2} (1-x)^{-0.3} dx = B(1/2, 0.7)
        let r = tanh_sinh(|_, dl, dr| dl.powf(-0.5) * dr.powf(-0.3), 0.0, 1.0, 1e-13).unwrap();
        let b = (crate::special::ln_gamma(0.5) + crate::special::ln_gamma(0.7)
            - crate::special::ln_gamma(1.2))
        .exp();
        assert!((r.value - b).abs() < 1e-11 * b, "{} vs {}", r.value, b);
    }

    #[test]
    fn legendre_rule() {
        let (x, w) = gauss_legendre(20);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((m - 2.0 / 11.0).abs() < 1e-14);
    }
}
