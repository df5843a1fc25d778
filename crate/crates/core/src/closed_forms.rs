//! Special functions and the closed-form absorption laws of the three
//! bundled models. These are independent of the series engine and serve as
//! its oracles.

use crate::error::{Error, Result};
use crate::quad::tanh_sinh;
use crate::special::{gamma_sign, ln_gamma, rgamma};
use crate::sum::Neumaier;

pub use crate::special::{ln_gamma as log_gamma, regularized_gamma_lower};

const EPS: f64 = f64::EPSILON;

#[derive(Debug, Clone, Copy)]
pub struct SpecialFnConfig {
    pub series_tol: f64,
    pub max_terms: usize,
}

impl SpecialFnConfig {
    pub fn new(series_tol: f64, max_terms: usize) -> Result<Self> {
        if !(series_tol >= 1e-15) || max_terms == 0 {
            return Err(Error::Domain(format!(
                "series_tol must be >= 1e-15 and max_terms positive (got {series_tol:e}, {max_terms})"
            )));
        }
        Ok(SpecialFnConfig { series_tol, max_terms })
    }
}

impl Default for SpecialFnConfig {
    fn default() -> Self {
        SpecialFnConfig { series_tol: 1e-15, max_terms: 100_000 }
    }
}

/// A value with an absolute error bound and the number of terms used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Approx {
    pub value: f64,
    pub err: f64,
    pub terms: usize,
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// Sign and log-magnitude of `1/Γ(x)`; `None` at the poles of `Γ`.
fn signed_ln_rgamma(x: f64) -> Option<(f64, f64)> {
    if is_nonpositive_integer(x) {
        None
    } else {
        Some((gamma_sign(x), -ln_gamma(x)))
    }
}

/// Sums `Σ t_n` with `t_0 = 1`, `t_n = t_{n−1}·ratio(n)`.
fn ratio_series<R: Fn(usize) -> f64>(ratio: R, cfg: &SpecialFnConfig) -> Result<Approx> {
    let mut sum = Neumaier::new();
    let mut term = 1.0f64;
    sum.add(term);
    let mut abs = 1.0;
    let mut small = 0;
    for n in 1..=cfg.max_terms {
        let r = ratio(n);
        term *= r;
        if term == 0.0 {
            let v = sum.value();
            return Ok(Approx { value: v, err: 2.0 * EPS * abs, terms: n });
        }
        if !term.is_finite() {
            return Err(Error::Precision(format!("series terms overflow after {n} terms")));
        }
        sum.add(term);
        abs += term.abs();
        let v = sum.value();
        if term.abs() <= cfg.series_tol * v.abs() + 1e-300 {
            small += 1;
        } else {
            small = 0;
        }
        if small >= 2 {
            let q = r.abs();
            let tail = if q < 1.0 { term.abs() * q / (1.0 - q) } else { term.abs() };
            return Ok(Approx { value: v, err: tail + 2.0 * EPS * abs, terms: n });
        }
    }
    Err(Error::NoConvergence(format!("series did not converge in {} terms", cfg.max_terms)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KummerMode {
    Auto,
    Series,
    Asymptotic,
}

/// Confluent hypergeometric `Φ(a, c; z) = Σ (a)_n/((c)_n n!) zⁿ`.
pub fn kummer_phi(a: f64, c: f64, z: f64) -> Result<f64> {
    Ok(kummer_phi_with(a, c, z, KummerMode::Auto, &SpecialFnConfig::default())?.value)
}

pub fn kummer_phi_with(a: f64, c: f64, z: f64, mode: KummerMode, cfg: &SpecialFnConfig) -> Result<Approx> {
    if is_nonpositive_integer(c) {
        return Err(Error::Pole(format!("Φ(a, c; z) has a pole at c = {c}")));
    }
    let direct = |a: f64, z: f64| ratio_series(|n| (a + n as f64 - 1.0) * z / ((c + n as f64 - 1.0) * n as f64), cfg);
    match mode {
        KummerMode::Series => direct(a, z),
        KummerMode::Asymptotic => {
            if z >= 0.0 {
                return Err(Error::Domain("asymptotic mode is for Φ(a, c; −x) with x > 0".into()));
            }
            kummer_asymptotic(a, c, -z, cfg)
        }
        KummerMode::Auto => {
            if z >= 0.0 || is_nonpositive_integer(a) {
                return direct(a, z);
            }
            let x = -z;
            if x > 40.0 && !is_nonpositive_integer(c - a) {
                if let Ok(r) = kummer_asymptotic(a, c, x, cfg) {
                    if r.err <= 1e-14 * r.value.abs() {
                        return Ok(r);
                    }
                }
            }
            // Φ(a, c; −x) = e^{−x} Φ(c−a, c; x)
            let r = direct(c - a, x)?;
            let e = (-x).exp();
            Ok(Approx { value: e * r.value, err: e * r.err + EPS * (e * r.value).abs(), terms: r.terms })
        }
    }
}

/// `Φ(a, c; −x) ~ Γ(c)/Γ(c−a) x^{−a} Σ (a)_s (a−c+1)_s/s! x^{−s}`, truncated
/// at the smallest term.
fn kummer_asymptotic(a: f64, c: f64, x: f64, cfg: &SpecialFnConfig) -> Result<Approx> {
    let mut sum = Neumaier::new();
    let mut term = 1.0f64;
    sum.add(term);
    let mut last = 1.0f64;
    let mut terms = 0;
    for s in 1..cfg.max_terms {
        let sf = s as f64;
        let next = term * (a + sf - 1.0) * (a - c + sf) / (sf * x);
        if next.abs() >= last && s > 1 {
            break;
        }
        term = next;
        terms = s;
        if term == 0.0 {
            break;
        }
        sum.add(term);
        last = term.abs();
        if last <= cfg.series_tol * sum.value().abs() {
            break;
        }
    }
    let sign = gamma_sign(c) * gamma_sign(c - a);
    let lnpref = ln_gamma(c) - ln_gamma(c - a) - a * x.ln();
    let pref = sign * lnpref.exp();
    // the exponentially small companion series
    let expo = (ln_gamma(c) - ln_gamma(a).min(700.0) - x + (a - c) * x.ln()).exp();
    let value = pref * sum.value();
    Ok(Approx { value, err: pref.abs() * last + expo + 4.0 * EPS * value.abs(), terms })
}

/// Gauss hypergeometric `₂F₁(a, b; c; z)` for real `z < 1` (any `z` when
/// the series terminates).
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    Ok(gauss_2f1_with(a, b, c, z, &SpecialFnConfig::default())?.value)
}

pub fn gauss_2f1_with(a: f64, b: f64, c: f64, z: f64, cfg: &SpecialFnConfig) -> Result<Approx> {
    if is_nonpositive_integer(c) {
        return Err(Error::Pole(format!("₂F₁ has a pole at c = {c}")));
    }
    let direct = |a: f64, b: f64, c: f64, z: f64| {
        ratio_series(
            |n| {
                let k = n as f64 - 1.0;
                (a + k) * (b + k) * z / ((c + k) * n as f64)
            },
            cfg,
        )
    };
    if is_nonpositive_integer(a) || is_nonpositive_integer(b) {
        return direct(a, b, c, z);
    }
    if !(z < 1.0) {
        return Err(Error::Domain(format!("₂F₁ needs z < 1, got {z}")));
    }
    if z.abs() <= 0.5 {
        return direct(a, b, c, z);
    }
    if z >= -2.0 {
        if z > 0.0 {
            return direct(a, b, c, z);
        }
        // Pfaff: (1−z)^{−a} ₂F₁(a, c−b; c; z/(z−1))
        let r = direct(a, c - b, c, z / (z - 1.0))?;
        let p = (1.0 - z).powf(-a);
        return Ok(Approx { value: p * r.value, err: p * r.err + 2.0 * EPS * (p * r.value).abs(), terms: r.terms });
    }
    let d = b - a;
    if (d - d.round()).abs() > 1e-7 {
        return inverse_z(a, b, c, z, cfg);
    }
    // degenerate connection coefficients: average symmetric perturbations
    let h = 1e-5 * b.abs().max(1.0);
    let f1 = inverse_z(a, b + h, c, z, cfg)?;
    let f2 = inverse_z(a, b - h, c, z, cfg)?;
    let g1 = inverse_z(a, b + 2.0 * h, c, z, cfg)?;
    let g2 = inverse_z(a, b - 2.0 * h, c, z, cfg)?;
    let avg1 = 0.5 * (f1.value + f2.value);
    let avg2 = 0.5 * (g1.value + g2.value);
    // bias is O(h²); extrapolate
    let value = (4.0 * avg1 - avg2) / 3.0;
    let err = (avg1 - avg2).abs() / 3.0 + f1.err + f2.err + g1.err + g2.err;
    Ok(Approx { value, err, terms: f1.terms.max(f2.terms) })
}

/// Connection formula at `1/z` for `z < −1`, `b − a` not an integer.
fn inverse_z(a: f64, b: f64, c: f64, z: f64, cfg: &SpecialFnConfig) -> Result<Approx> {
    let w = 1.0 / z;
    let x = -z;
    let part = |a: f64, b: f64| -> Result<(f64, f64, usize)> {
        // Γ(c)Γ(b−a)/(Γ(b)Γ(c−a)) (−z)^{−a} ₂F₁(a, a−c+1; a−b+1; 1/z)
        if rgamma(b) == 0.0 || rgamma(c - a) == 0.0 {
            return Ok((0.0, 0.0, 0));
        }
        let s = ratio_series(
            |n| {
                let k = n as f64 - 1.0;
                (a + k) * (a - c + 1.0 + k) * w / ((a - b + 1.0 + k) * n as f64)
            },
            cfg,
        )?;
        let sign = gamma_sign(c) * gamma_sign(b - a) * gamma_sign(b) * gamma_sign(c - a);
        let lp = ln_gamma(c) + ln_gamma(b - a) - ln_gamma(b) - ln_gamma(c - a) - a * x.ln();
        let p = sign * lp.exp();
        Ok((p * s.value, p.abs() * s.err + 2.0 * EPS * (p * s.value).abs(), s.terms))
    };
    let (v1, e1, n1) = part(a, b)?;
    let (v2, e2, n2) = part(b, a)?;
    let value = v1 + v2;
    Ok(Approx { value, err: e1 + e2 + EPS * (v1.abs() + v2.abs()), terms: n1.max(n2) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WrightVariant {
    Cdf,
    Pdf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WrightMode {
    Auto,
    Series,
    Tail,
}

/// `F(z) = Σ Γ(n+1−α̃)/Γ(αn+α−d) zⁿ` with `d = 0` (cdf) or `d = 1` (pdf),
/// the Wright function entering the law of the stable maximum.
pub fn wright_2psi1(alpha: f64, z: f64, variant: WrightVariant) -> Result<Approx> {
    wright_2psi1_with(alpha, z, variant, WrightMode::Auto, &SpecialFnConfig::default())
}

pub fn wright_2psi1_with(
    alpha: f64,
    z: f64,
    variant: WrightVariant,
    mode: WrightMode,
    cfg: &SpecialFnConfig,
) -> Result<Approx> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::Domain(format!("Wright function needs 1 < α < 2, got {alpha}")));
    }
    if z > 0.0 {
        return Err(Error::Domain(format!("Wright function is implemented for z <= 0, got {z}")));
    }
    let d = match variant {
        WrightVariant::Cdf => 0.0,
        WrightVariant::Pdf => 1.0,
    };
    match mode {
        WrightMode::Series => wright_series(alpha, z, d, cfg),
        WrightMode::Tail => wright_tail(alpha, -z, d),
        WrightMode::Auto => {
            let s = wright_series(alpha, z, d, cfg);
            if let Ok(r) = s {
                if r.err <= 1e-12 * r.value.abs().max(1e-300) {
                    return Ok(r);
                }
            }
            let t = wright_tail(alpha, -z, d);
            match (s, t) {
                (Ok(s), Ok(t)) => Ok(if s.err <= t.err { s } else { t }),
                (Ok(s), Err(_)) => Ok(s),
                (Err(_), Ok(t)) => Ok(t),
                (Err(e), Err(_)) => Err(e),
            }
        }
    }
}

fn wright_series(alpha: f64, z: f64, d: f64, cfg: &SpecialFnConfig) -> Result<Approx> {
    let at = 1.0 / alpha;
    let y = z.abs();
    let mut sum = Neumaier::new();
    let mut abs = 0.0;
    let mut small = 0;
    let ly = if y > 0.0 { y.ln() } else { f64::NEG_INFINITY };
    for n in 0..cfg.max_terms {
        let nf = n as f64;
        let den = alpha * nf + alpha - d;
        let t = if n > 0 && y == 0.0 {
            0.0
        } else {
            match signed_ln_rgamma(den) {
                None => 0.0,
                Some((sg, lr)) => {
                    let sign = sg * if n % 2 == 1 { -1.0 } else { 1.0 };
                    let lz = if n == 0 { 0.0 } else { nf * ly };
                    sign * (ln_gamma(nf + 1.0 - at) + lr + lz).exp()
                }
            }
        };
        if !t.is_finite() {
            return Err(Error::Precision("Wright series terms overflow".into()));
        }
        sum.add(t);
        abs += t.abs() * (t.abs().ln().abs() + 16.0);
        let v = sum.value();
        if n > 0 && t.abs() <= cfg.series_tol * v.abs() + 1e-300 {
            small += 1;
        } else {
            small = 0;
        }
        if small >= 2 || (y == 0.0 && n == 0) {
            return Ok(Approx { value: v, err: 2.0 * t.abs() + EPS * abs, terms: n + 1 });
        }
    }
    Err(Error::NoConvergence(format!("Wright series did not converge in {} terms", cfg.max_terms)))
}

/// Large-argument expansion of `F(−y)` from the two families of left poles.
fn wright_tail(alpha: f64, y: f64, d: f64) -> Result<Approx> {
    if !(y > 0.0) {
        return Err(Error::Domain("tail mode needs a negative argument".into()));
    }
    let at = 1.0 / alpha;
    let ly = y.ln();
    // family A: (−1)^k/k! Γ(1+k−α̃)Γ(α̃−k)/Γ(1−d−αk) y^{α̃−1−k}
    let term_a = |k: usize| -> f64 {
        let kf = k as f64;
        let Some((sr, lr)) = signed_ln_rgamma(1.0 - d - alpha * kf) else {
            return 0.0;
        };
        let sign = if k % 2 == 1 { -1.0 } else { 1.0 } * gamma_sign(at - kf) * sr;
        let l = ln_gamma(1.0 + kf - at) + ln_gamma(at - kf) - ln_gamma(kf + 1.0) + lr + (at - 1.0 - kf) * ly;
        sign * l.exp()
    };
    // family B: (−1)^k Γ(−k−α̃)/Γ(−αk−d) y^{−1−k}
    let term_b = |k: usize| -> f64 {
        let kf = k as f64;
        let Some((sr, lr)) = signed_ln_rgamma(-alpha * kf - d) else {
            return 0.0;
        };
        let sign = if k % 2 == 1 { -1.0 } else { 1.0 } * gamma_sign(-kf - at) * sr;
        let l = ln_gamma(-kf - at) + lr + (-1.0 - kf) * ly;
        sign * l.exp()
    };
    let optimal = |f: &dyn Fn(usize) -> f64| -> (f64, f64, usize) {
        let mut s = Neumaier::new();
        let mut last = f64::INFINITY;
        let mut k = 0;
        let mut zero_run = 0;
        loop {
            let t = f(k);
            if t == 0.0 {
                zero_run += 1;
                if zero_run > 3 || k > 400 {
                    return (s.value(), 0.0, k);
                }
                k += 1;
                continue;
            }
            zero_run = 0;
            if t.abs() > last || k > 400 {
                return (s.value(), last, k);
            }
            s.add(t);
            last = t.abs();
            if last <= 1e-17 * s.value().abs() {
                return (s.value(), last, k);
            }
            k += 1;
        }
    };
    let (va, ea, ka) = optimal(&term_a);
    let (vb, eb, kb) = optimal(&term_b);
    let value = va + vb;
    Ok(Approx { value, err: ea + eb + 4.0 * EPS * (va.abs() + vb.abs()), terms: ka + kb })
}

fn stable_constant(alpha: f64) -> f64 {
    crate::special::sin_pi(1.0 / alpha) / std::f64::consts::PI
}

/// `P(sup_{s≤1} Ẑ_s < x)` for a spectrally positive α-stable `Ẑ` with
/// `E[e^{−uẐ_t}] = e^{t u^α}`.
pub fn stable_max_cdf(alpha: f64, x: f64) -> Result<Approx> {
    stable_max(alpha, x, WrightVariant::Cdf)
}

/// Density of the stable maximum at time 1.
pub fn stable_max_pdf(alpha: f64, x: f64) -> Result<Approx> {
    stable_max(alpha, x, WrightVariant::Pdf)
}

fn stable_max(alpha: f64, x: f64, variant: WrightVariant) -> Result<Approx> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("stable maximum needs x > 0, got {x}")));
    }
    let f = wright_2psi1(alpha, -x.powf(alpha), variant)?;
    let pow = match variant {
        WrightVariant::Cdf => alpha - 1.0,
        WrightVariant::Pdf => alpha - 2.0,
    };
    let scale = stable_constant(alpha) * x.powf(pow);
    let mut value = scale * f.value;
    let err = scale * f.err;
    if variant == WrightVariant::Cdf && err <= 1e-10 {
        value = value.clamp(0.0, 1.0);
    }
    Ok(Approx { value, err, terms: f.terms })
}

/// `φ(q)` of the Bessel exponent `2u² + 2bu − q`.
pub fn bessel_phi(b: f64, q: f64) -> f64 {
    0.5 * ((2.0 * q + b * b).sqrt() - b)
}

fn bessel_check(b: f64, q: f64, t: f64) -> Result<()> {
    if !(q > 0.0 || (q == 0.0 && b < 0.0)) {
        return Err(Error::NoAbsorption(format!("Bessel model with b = {b}, q = {q}")));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    Ok(())
}

/// Kesten constant of the Bessel model.
pub fn bessel_kesten(b: f64, q: f64) -> Result<f64> {
    bessel_check(b, q, 1.0)?;
    if q == 0.0 {
        // (2G)^{−1} tail: P(G < 1/(2t)) ~ (2t)^{b}/Γ(1−b)
        return Ok(2f64.powf(b) * rgamma(1.0 - b));
    }
    let phi = bessel_phi(b, q);
    let varrho = b + 2.0 * phi;
    Ok((ln_gamma(varrho + 1.0 - phi) - ln_gamma(varrho + 1.0) - phi * 2f64.ln()).exp())
}

/// `P(T₀ > t)` for the Bessel model started at 1.
pub fn bessel_survival(b: f64, q: f64, t: f64) -> Result<f64> {
    bessel_check(b, q, t)?;
    if q == 0.0 {
        return Ok(regularized_gamma_lower(-b, 0.5 / t));
    }
    let phi = bessel_phi(b, q);
    let varrho = b + 2.0 * phi;
    let c = bessel_kesten(b, q)?;
    Ok(c * t.powf(-phi) * kummer_phi(phi, varrho + 1.0, -0.5 / t)?)
}

/// Density of `T₀` (Kummer form for `q > 0`).
pub fn bessel_density(b: f64, q: f64, t: f64) -> Result<f64> {
    bessel_check(b, q, t)?;
    if q == 0.0 {
        let l = b * 2f64.ln() - ln_gamma(-b) + (b - 1.0) * t.ln() - 0.5 / t;
        return Ok(l.exp());
    }
    let phi = bessel_phi(b, q);
    let varrho = b + 2.0 * phi;
    let c = bessel_kesten(b, q)?;
    Ok(phi * c * t.powf(-phi - 1.0) * kummer_phi(1.0 + phi, varrho + 1.0, -0.5 / t)?)
}

/// Density of `T₀` for `q > 0` from the Beta-integral representation.
pub fn bessel_density_beta(b: f64, q: f64, t: f64) -> Result<f64> {
    bessel_check(b, q, t)?;
    if q == 0.0 {
        return bessel_density(b, q, t);
    }
    let phi = bessel_phi(b, q);
    let e = b + phi - 1.0;
    let r = tanh_sinh(|u, dl, dr| (-0.5 * u / t).exp() * dr.powf(e) * dl.powf(phi), 0.0, 1.0, 1e-14)?;
    let pref = ((b + phi).ln() - phi * 2f64.ln() - ln_gamma(phi)).exp() * t.powf(-phi - 1.0);
    Ok(pref * r.value)
}

/// `(φ(q), φ̄(q))` of the saw-tooth exponent.
pub fn sawtooth_phi(beta: f64, delta: f64, q: f64) -> (f64, f64) {
    let m = q - (delta - 1.0);
    let bar = (m * m + 4.0 * (delta + beta - 1.0) * q).sqrt();
    (0.5 * (m + bar), bar)
}

fn sawtooth_check(beta: f64, delta: f64, q: f64) -> Result<()> {
    if !(beta > 0.0 && delta + beta - 1.0 > 0.0) {
        return Err(Error::InvalidModel(format!(
            "saw-tooth needs β > 0 and δ+β−1 > 0 (β = {beta}, δ = {delta})"
        )));
    }
    if q < 0.0 {
        return Err(Error::InvalidModel(format!("kill rate must be nonnegative, got {q}")));
    }
    if q == 0.0 && !(1.0 - beta < delta && delta < 1.0) {
        return Err(Error::NoAbsorption(format!("saw-tooth with q = 0 needs 1−β < δ < 1 (δ = {delta})")));
    }
    Ok(())
}

/// Kesten constant of the saw-tooth model.
pub fn sawtooth_kesten(beta: f64, delta: f64, q: f64) -> Result<f64> {
    sawtooth_check(beta, delta, q)?;
    if q == 0.0 {
        return Ok((ln_gamma(1.0 + beta) - ln_gamma(2.0 - delta) - ln_gamma(beta + delta)).exp());
    }
    let (phi, bar) = sawtooth_phi(beta, delta, q);
    Ok((ln_gamma(beta + delta + phi) + ln_gamma(1.0 + bar - phi)
        - ln_gamma(1.0 + bar)
        - ln_gamma(beta + delta))
        .exp())
}

/// `P(T₀ > t)` for the saw-tooth model started at 1.
pub fn sawtooth_survival(beta: f64, delta: f64, q: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    let c = sawtooth_kesten(beta, delta, q)?;
    if q == 0.0 {
        return Ok(c * t.powf(delta - 1.0) * gauss_2f1(1.0 - delta, 1.0 + beta, 2.0 - delta, -1.0 / t)?);
    }
    let (phi, bar) = sawtooth_phi(beta, delta, q);
    Ok(c * t.powf(-phi) * gauss_2f1(phi, beta + delta + phi, 1.0 + bar, -1.0 / t)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{erf, gamma};

    #[test]
    fn kummer_values() {
        assert_eq!(kummer_phi(0.7, 1.3, 0.0).unwrap(), 1.0);
        assert!((kummer_phi(1.0, 1.0, 1.0).unwrap() - std::f64::consts::E).abs() < 1e-15);
        assert!((kummer_phi(1.5, 1.5, -0.5).unwrap() - (-0.5f64).exp()).abs() < 1e-16);
        // Φ(1/2, 3/2; −x²) = √π erf(x)/(2x)
        for x in [0.3f64, 2.0, 9.0] {
            let want = std::f64::consts::PI.sqrt() * erf(x) / (2.0 * x);
            let got = kummer_phi(0.5, 1.5, -x * x).unwrap();
            assert!((got - want).abs() < 1e-13 * want, "x={x}: {got} vs {want}");
        }
        let cfg = SpecialFnConfig::default();
        let a = kummer_phi_with(0.5, 1.5, -100.0, KummerMode::Asymptotic, &cfg).unwrap();
        let want = std::f64::consts::PI.sqrt() / 20.0;
        assert!((a.value - want).abs() < 1e-14);
        assert!(kummer_phi(1.0, -2.0, 1.0).is_err());
    }

    #[test]
    fn hypergeometric_values() {
        assert_eq!(gauss_2f1(0.3, 0.4, 0.5, 0.0).unwrap(), 1.0);
        let l2 = gauss_2f1(1.0, 1.0, 2.0, -1.0).unwrap();
        assert!((l2 - 2f64.ln()).abs() < 1e-15);
        // −ln(1−z)/z in every branch
        for z in [-0.3, -1.5, -7.0, -1e4, 0.8] {
            let want = -(1.0 - z as f64).ln() / z;
            let got = gauss_2f1(1.0, 1.0, 2.0, z).unwrap();
            assert!((got - want).abs() < 1e-9 * want, "z={z}: {got} vs {want}");
        }
        // (1−z)^{−a}
        for z in [-0.7, -3.0, -50.0] {
            let got = gauss_2f1(0.6, 1.7, 1.7, z).unwrap();
            assert!((got - (1.0 - z as f64).powf(-0.6)).abs() < 1e-12, "z={z}");
        }
        // terminating Chu–Vandermonde sum at z = 1
        let (n, beta, delta) = (2.0, 1.0, 0.5);
        let got = gauss_2f1(-n, 1.0 + beta, 2.0 - delta, 1.0).unwrap();
        let want = gamma(2.0 - delta) * gamma(n + 1.0 - delta - beta)
            / (gamma(2.0 - delta + n) * gamma(1.0 - delta - beta));
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn wright_series_and_tail() {
        let alpha = 1.5;
        let r = wright_2psi1(alpha, 0.0, WrightVariant::Cdf).unwrap();
        assert!((r.value - gamma(1.0 - 1.0 / alpha) / gamma(alpha)).abs() < 1e-14);
        // 200-term alternating sum at z = −1
        let mut s = 0.0;
        for n in 0..200 {
            let nf = n as f64;
            let t = gamma(nf + 1.0 - 1.0 / alpha) * rgamma(alpha * nf + alpha);
            s += if n % 2 == 0 { t } else { -t };
            if t < 1e-300 {
                break;
            }
        }
        let r = wright_2psi1(alpha, -1.0, WrightVariant::Cdf).unwrap();
        assert!((r.value - s).abs() < 1e-14);
        let cfg = SpecialFnConfig::default();
        for (variant, tol) in [(WrightVariant::Cdf, 1e-4), (WrightVariant::Pdf, 1e-3)] {
            for y in [8.0f64, 10.0] {
                let a = wright_2psi1_with(alpha, -y, variant, WrightMode::Series, &cfg).unwrap();
                let b = wright_2psi1_with(alpha, -y, variant, WrightMode::Tail, &cfg).unwrap();
                assert!((a.value - b.value).abs() < tol * a.value.abs(), "y={y}: {} vs {}", a.value, b.value);
            }
        }
        // high-precision reference values at y = 12
        let c = wright_2psi1(alpha, -12.0, WrightVariant::Cdf).unwrap();
        assert!((c.value - 1.540_889_183_572_964).abs() < 1e-10);
        let p = wright_2psi1(alpha, -12.0, WrightVariant::Pdf).unwrap();
        assert!((p.value - 0.070_260_489_918_079).abs() < 1e-8);
    }

    #[test]
    fn stable_maximum_limits() {
        for alpha in [1.2, 1.5, 1.8] {
            assert!(stable_max_cdf(alpha, 1e-12).unwrap().value < 1e-2);
            let big = stable_max_cdf(alpha, 1e3).unwrap();
            assert!((big.value - 1.0).abs() < 1e-3, "{alpha}: {big:?}");
            let mut prev = 0.0;
            for i in 1..40 {
                let v = stable_max_cdf(alpha, 0.2 * i as f64).unwrap().value;
                assert!(v >= prev);
                prev = v;
            }
        }
        // Brownian boundary check: the density integrates to the cdf
        let alpha = 1.5;
        let cdf = stable_max_cdf(alpha, 2.0).unwrap().value;
        let int = crate::quad::integrate(|x| stable_max_pdf(alpha, x).unwrap().value, 0.0, 2.0, 1e-11, 1e-11)
            .unwrap()
            .value;
        assert!((cdf - int).abs() < 1e-8, "{cdf} vs {int}");
    }

    #[test]
    fn bessel_closed_forms() {
        let s = bessel_survival(-0.5, 0.0, 1.0).unwrap();
        assert!((s - erf(0.5f64.sqrt())).abs() < 1e-15);
        let d = bessel_density(-0.5, 0.0, 1.0).unwrap();
        assert!((d - (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
        let tot = crate::quad::integrate_to_inf(|t| bessel_density(-0.5, 0.0, t).unwrap(), 0.0, 1e-12, 1e-12)
            .unwrap()
            .value;
        assert!((tot - 1.0).abs() < 1e-8);
        for t in [0.5, 2.0, 20.0] {
            let k = bessel_density(0.3, 1.0, t).unwrap();
            let bta = bessel_density_beta(0.3, 1.0, t).unwrap();
            assert!((k - bta).abs() < 1e-9 * k.max(1e-3), "t={t}: {k} vs {bta}");
        }
        assert!((bessel_phi(0.0, 4.0) - 2f64.sqrt()).abs() < 1e-15);
        assert!(bessel_survival(0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn sawtooth_closed_form() {
        let c = sawtooth_kesten(1.0, 0.5, 0.0).unwrap();
        assert!((c - 4.0 / std::f64::consts::PI).abs() < 1e-14);
        let t = 1e8;
        let s = sawtooth_survival(1.0, 0.5, 0.0, t).unwrap();
        assert!((s * t.sqrt() / c - 1.0).abs() < 1e-6);
        assert!((sawtooth_survival(1.0, 0.5, 0.0, 1e-6).unwrap() - 1.0).abs() < 1e-4);
        let mut prev = 1.0;
        for i in 0..60 {
            let t = 10f64.powf(-3.0 + 0.1 * i as f64);
            let v = sawtooth_survival(1.0, 0.5, 0.7, t).unwrap();
            assert!(v <= prev + 1e-14 && v >= 0.0);
            prev = v;
        }
    }
}
