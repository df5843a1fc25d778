//! The law of the absorption time `T₀` of the self-similar process started
//! at 1: survival function, density and its derivatives, the distribution
//! function `P`, the Laplace transform and exit-problem Mellin transforms.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::levy::{ExponentHandle, LevyModel, Regime};
use crate::series::{EvalReport, Factor, KappaBranch, Method, SeriesEval};
use crate::special::{gamma, ln_gamma, rgamma};

/// Error bound under which a series value of `S` is accepted directly.
const CERTIFY: f64 = 1e-10;
const INTEGER_WIDTH: f64 = 1e-6;

/// `γ = φ(q)` for a killed exponent, the Cramér root `θ` otherwise.
pub fn select_gamma(h: &ExponentHandle) -> Result<f64> {
    let q = h.model.kill_q;
    if q > 0.0 {
        return h.inverse_phi(q);
    }
    match h.theta {
        Some(t) if h.mean_xi1 < 0.0 => Ok(t),
        _ => Err(Error::NoAbsorption(format!(
            "q = 0 and E[ξ₁] = {} >= 0",
            h.mean_xi1
        ))),
    }
}

#[derive(Debug)]
pub struct AbsorptionLaw {
    pub base: Arc<ExponentHandle>,
    pub gamma: f64,
    pub tilted: SeriesEval,
    pub c_gamma: f64,
    pub alpha_tilde_gamma: f64,
    base_series: OnceLock<std::result::Result<SeriesEval, Error>>,
    // smallest certified point for the small-t bracket
    small_t: OnceLock<std::result::Result<(f64, f64, f64), Error>>,
}

impl AbsorptionLaw {
    pub fn new(model: LevyModel) -> Result<Self> {
        Self::from_handle(Arc::new(ExponentHandle::new(model)?))
    }

    pub fn from_handle(base: Arc<ExponentHandle>) -> Result<Self> {
        let gamma = select_gamma(&base)?;
        let tilted_h = base.tilt(gamma)?;
        if !(tilted_h.mean_xi1 > 0.0) {
            return Err(Error::Domain(format!(
                "tilted exponent has ψ_γ'(0) = {} <= 0",
                tilted_h.mean_xi1
            )));
        }
        let tilted = SeriesEval::new(Arc::new(tilted_h))?;
        let rho = base.model.alpha_tilde * gamma;
        let c_gamma = kesten_constant(&tilted, rho)?;
        Ok(AbsorptionLaw {
            base,
            gamma,
            tilted,
            c_gamma,
            alpha_tilde_gamma: rho,
            base_series: OnceLock::new(),
            small_t: OnceLock::new(),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.base.model.alpha
    }

    pub fn regime(&self) -> Regime {
        self.base.regime
    }

    fn rho(&self) -> f64 {
        self.alpha_tilde_gamma
    }

    fn direct_survival(&self, t: f64) -> Result<EvalReport<f64>> {
        let rho = self.rho();
        let o = self.tilted.o_rho(rho, 1.0 / t)?;
        let scale = self.c_gamma * t.powf(-rho);
        Ok(EvalReport {
            value: scale * o.value,
            trunc_order: o.trunc_order,
            method: o.method,
            err_bound: scale * o.err_bound,
        })
    }

    /// Anchor `(t0, S(t0), err)` of the small-t bracket `S(t) ∈ [S(t0) − err, 1]`:
    /// the point of a fixed ladder giving the narrowest bracket.
    fn bracket_anchor(&self) -> Result<(f64, f64, f64)> {
        let r = self.small_t.get_or_init(|| {
            let mut best: Option<(f64, f64, f64)> = None;
            let mut t0 = 1e-6;
            for _ in 0..200 {
                if let Ok(r) = self.direct_survival(t0) {
                    let width = 1.0 - r.value + r.err_bound;
                    match best {
                        Some((_, s, e)) if 1.0 - s + e <= width => {
                            // widths only grow once the value is certified
                            if r.err_bound <= CERTIFY {
                                break;
                            }
                        }
                        _ if r.value.is_finite() && r.err_bound.is_finite() => best = Some((t0, r.value, r.err_bound)),
                        _ => {}
                    }
                }
                t0 *= 1.25;
            }
            best.ok_or_else(|| Error::Precision("no usable survival value for the small-t bracket".into()))
        });
        r.clone()
    }

    /// `S(t) = P(T₀ > t) = C_γ t^{−α̃γ} O_{ψ_γ}(α̃γ; 1/t)`.
    pub fn survival_s(&self, t: f64) -> Result<EvalReport<f64>> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("survival needs t > 0, got {t}")));
        }
        let out = match self.direct_survival(t) {
            Ok(r) if r.err_bound <= CERTIFY => r,
            first => {
                let (t0, s0, e0) = self.bracket_anchor()?;
                // S is decreasing and bounded by 1
                let lo = (s0 - e0).max(0.0);
                let half = 0.5 * (1.0 - lo);
                match first {
                    Ok(r) if t0 > t && r.err_bound > half => EvalReport {
                        value: 0.5 * (1.0 + lo),
                        trunc_order: 0,
                        method: Method::MonotoneBracket,
                        err_bound: half,
                    },
                    Ok(r) => r,
                    Err(_) if t0 > t => EvalReport {
                        value: 0.5 * (1.0 + lo),
                        trunc_order: 0,
                        method: Method::MonotoneBracket,
                        err_bound: half,
                    },
                    Err(e) => return Err(e),
                }
            }
        };
        if !(out.value >= -1e-9 && out.value <= 1.0 + 1e-9) {
            return Err(Error::Precision(format!(
                "survival value {} at t = {t} escapes [0, 1]",
                out.value
            )));
        }
        Ok(out)
    }

    /// `s^{(m)}(t)`, the `m`-th derivative of the density of `T₀`.
    pub fn density_s(&self, t: f64, m: usize) -> Result<EvalReport<f64>> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("density needs t > 0, got {t}")));
        }
        let rho = self.rho();
        let mf = m as f64;
        let o = self.tilted.o_rho(mf + 1.0 + rho, 1.0 / t)?;
        let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
        let ln_scale = ln_gamma(mf + 1.0 + rho) - ln_gamma(rho) + self.c_gamma.ln() - (rho + 1.0 + mf) * t.ln();
        let scale = sign * ln_scale.exp();
        Ok(EvalReport {
            value: scale * o.value,
            trunc_order: o.trunc_order,
            method: o.method,
            err_bound: scale.abs() * o.err_bound,
        })
    }

    /// `P(x) = S(x^{−α})`, the probability that the process started at `x`
    /// survives beyond time 1.
    pub fn distribution_p(&self, x: f64) -> Result<EvalReport<f64>> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("P needs x > 0, got {x}")));
        }
        self.survival_s(x.powf(-self.alpha()))
    }

    fn base_series(&self) -> Result<&SeriesEval> {
        self.base_series
            .get_or_init(|| SeriesEval::new(self.base.clone()))
            .as_ref()
            .map_err(|e| e.clone())
    }

    /// `E_x[e^{−rT₀}] = I_ψ(y) − Γ(1−α̃θ) C_θ y^{α̃θ} I_{ψ_θ}(y)`, `y = r x^α`.
    pub fn laplace_n(&self, r: f64, x: f64) -> Result<f64> {
        let h = &self.base;
        if h.model.kill_q != 0.0 || !(h.mean_xi1 < 0.0) {
            return Err(Error::Domain("Laplace transform formula needs q = 0 and E[ξ₁] < 0".into()));
        }
        if !(self.gamma < self.alpha()) {
            return Err(Error::Domain(format!(
                "Laplace transform formula needs θ = {} < α = {}",
                self.gamma,
                self.alpha()
            )));
        }
        if !(r >= 0.0) || !(x > 0.0) {
            return Err(Error::Domain(format!("laplace_N needs r >= 0 and x > 0 (r = {r}, x = {x})")));
        }
        if r == 0.0 {
            return Ok(1.0);
        }
        let y = r * x.powf(self.alpha());
        let rho = self.rho();
        let i_base = self.base_series()?.i_one(y)?;
        let i_tilt = self.tilted.i_one(y)?;
        Ok(i_base.value - gamma(1.0 - rho) * self.c_gamma * y.powf(rho) * i_tilt.value)
    }

    /// `E_x[e^{−r T_a}] = I_ψ(r x^α)/I_ψ(r a^α)` for the first passage above
    /// `a ≥ x`.
    pub fn hitting_laplace(&self, r: f64, x: f64, a: f64) -> Result<f64> {
        if !(r >= 0.0 && x > 0.0 && x <= a) {
            return Err(Error::Domain(format!("hitting transform needs r >= 0, 0 < x <= a (r={r}, x={x}, a={a})")));
        }
        let s = self.base_series()?;
        let al = self.alpha();
        Ok(s.i_one(r * x.powf(al))?.value / s.i_one(r * a.powf(al))?.value)
    }

    /// `O_{ψ_γ}(ρ; z)`; at `ρ = α̃γ` the survival function takes over when
    /// the series cannot certify the value.
    fn o_tilted(&self, rho: f64, z: f64) -> Result<f64> {
        let direct = self.tilted.o_rho(rho, z);
        match direct {
            Ok(r) if r.err_bound <= 1e-10 * r.value.abs().max(1e-300) => Ok(r.value),
            other => {
                if (rho - self.rho()).abs() <= 1e-14 * rho.abs().max(1.0) && z > 0.0 {
                    // O(α̃γ; z) = z^{−α̃γ}... inverted: S(1/z) = C z^{α̃γ} O(α̃γ; z)
                    let s = self.survival_s(1.0 / z)?;
                    Ok(s.value * z.powf(-rho) / self.c_gamma)
                } else {
                    Ok(other?.value)
                }
            }
        }
    }

    fn check_exit_domain(&self, spec: &ExitSpec, rho: f64) -> Result<()> {
        let z = spec.chi.abs() * spec.level_a.powf(self.alpha());
        if spec.lambda < 0.0 {
            // below α̃γ positivity holds for every level
            if rho > self.rho() * (1.0 + 1e-14) {
                let k = self.tilted.first_kappa_zero(z, KappaBranch::OPlus, rho)?;
                if k <= rho {
                    return Err(Error::Domain(format!(
                        "Re(ρ) = {rho} is not below the first zero κ⁺ = {k} of O(·; {z})"
                    )));
                }
            }
        } else {
            if let Regime::BoundedVariation { b } = self.tilted.exponent().regime {
                if !(spec.lambda * spec.level_a.powf(self.alpha()) < b) {
                    return Err(Error::Domain(format!(
                        "λ a^α = {} must be below b = {b}",
                        spec.lambda * spec.level_a.powf(self.alpha())
                    )));
                }
            }
            if rho < 0.0 {
                let k = self.tilted.first_kappa_zero(z, KappaBranch::IMinus, -rho)?;
                if k <= -rho {
                    return Err(Error::Domain(format!(
                        "Re(ρ) = {rho} is not above −κ⁻ = {} for I(·; {z})",
                        -k
                    )));
                }
            }
        }
        Ok(())
    }

    fn exit_ratio(&self, spec: &ExitSpec, rho: f64) -> Result<f64> {
        self.check_exit_domain(spec, rho)?;
        let al = self.alpha();
        let zx = spec.chi.abs() * spec.start_x.powf(al);
        let za = spec.chi.abs() * spec.level_a.powf(al);
        if spec.lambda < 0.0 {
            Ok(self.o_tilted(rho, zx)? / self.o_tilted(rho, za)?)
        } else {
            Ok(self.tilted.i_rho(rho, zx)?.value / self.tilted.i_rho(rho, za)?.value)
        }
    }

    /// Mellin transform of `(1 + χT_a^{(λ)})₊` at real `ρ`.
    ///
    /// `Tilted` gives `E^{(γ)}_x[(1+χT_a)₊^{−ρ}]` under the tilted law;
    /// `Absorbed` gives `E_x[(1+χT_a)₊^{−ρ}; T_a < T₀ ∧ ζ]`.
    pub fn exit_mellin(&self, spec: &ExitSpec, rho: f64, mode: ExitMode) -> Result<f64> {
        if spec.start_x == spec.level_a {
            return Ok(1.0);
        }
        match mode {
            ExitMode::Tilted => self.exit_ratio(spec, rho),
            ExitMode::Absorbed => {
                let ratio = self.exit_ratio(spec, rho + self.rho())?;
                Ok((spec.start_x / spec.level_a).powf(self.gamma) * ratio)
            }
        }
    }

    /// `Q_x[T_a^{(λ)} < T₀ ∧ ζ^λ]`.
    pub fn exit_probability(&self, spec: &ExitSpec) -> Result<f64> {
        self.exit_mellin(spec, 0.0, ExitMode::Absorbed)
    }

    /// Complex-`ρ` variant of the tilted Mellin transform (direct series and
    /// continuation only).
    pub fn exit_mellin_complex(&self, spec: &ExitSpec, rho: Complex64) -> Result<Complex64> {
        if spec.start_x == spec.level_a {
            return Ok(Complex64::new(1.0, 0.0));
        }
        self.check_exit_domain(spec, rho.re)?;
        let al = self.alpha();
        let zx = Complex64::new(spec.chi.abs() * spec.start_x.powf(al), 0.0);
        let za = Complex64::new(spec.chi.abs() * spec.level_a.powf(al), 0.0);
        if spec.lambda < 0.0 {
            Ok(self.tilted.series_o_rho(rho, zx)?.value / self.tilted.series_o_rho(rho, za)?.value)
        } else {
            Ok(self.tilted.series_i_rho(rho, zx)?.value / self.tilted.series_i_rho(rho, za)?.value)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitMode {
    Tilted,
    Absorbed,
}

/// Moving level `a(1 + χs)^{α̃}` for the process started at `x ≤ a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitSpec {
    pub lambda: f64,
    pub chi: f64,
    pub zeta: f64,
    pub level_a: f64,
    pub start_x: f64,
}

impl ExitSpec {
    pub fn new(lambda: f64, alpha: f64, level_a: f64, start_x: f64) -> Result<Self> {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::Domain(format!("λ must be nonzero and finite, got {lambda}")));
        }
        if !(level_a > 0.0 && start_x > 0.0 && start_x <= level_a) {
            return Err(Error::Domain(format!("need 0 < x <= a, got x = {start_x}, a = {level_a}")));
        }
        let chi = alpha * lambda;
        let zeta = if lambda >= 0.0 { f64::INFINITY } else { 1.0 / (alpha * lambda.abs()) };
        Ok(ExitSpec { lambda, chi, zeta, level_a, start_x })
    }
}

/// Kesten constant `C_γ = lim t^{α̃γ} S(t)` from the tilted series.
pub fn kesten_constant(tilted: &SeriesEval, rho: f64) -> Result<f64> {
    let h = tilted.exponent();
    let alpha = tilted.alpha();
    match h.regime {
        Regime::BoundedVariation { .. } => {
            let a = tilted.product_a_s(-rho, Factor::Phi)?;
            Ok(alpha.powf(-rho) / a.value)
        }
        Regime::UnboundedVariation => {
            let n1 = rho.round();
            if n1 >= 1.0 && (rho - n1).abs() <= INTEGER_WIDTH {
                let c = kesten_integer(h, alpha, n1 as usize - 1)?;
                let lo = kesten_noninteger(tilted, n1 - 1e-3)?;
                let hi = kesten_noninteger(tilted, n1 + 1e-3)?;
                let avg = 0.5 * (lo + hi);
                if (avg - c).abs() > 1e-4 * c.abs() {
                    return Err(Error::Precision(format!(
                        "integer-branch Kesten constant {c} disagrees with neighbouring values {avg}"
                    )));
                }
                Ok(c)
            } else {
                kesten_noninteger(tilted, rho)
            }
        }
    }
}

fn kesten_noninteger(tilted: &SeriesEval, rho: f64) -> Result<f64> {
    let alpha = tilted.alpha();
    let a = tilted.product_a_s(-rho, Factor::BarPhi)?;
    // Γ(1−ρ) keeps its sign through the pole crossings of a_{−ρ}
    Ok(alpha.powf(-2.0 * rho) / (rgamma(1.0 - rho) * a.value))
}

fn kesten_integer(h: &ExponentHandle, alpha: f64, n: usize) -> Result<f64> {
    let mut prod = 1.0;
    let mut fact = 1.0;
    for j in 1..=n {
        prod *= h.try_psi(-alpha * j as f64)?;
        fact *= j as f64;
    }
    let sign = if n % 2 == 1 { -1.0 } else { 1.0 };
    Ok(sign * fact / (alpha * h.mean_xi1 * prod))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms;
    use crate::models;
    use crate::special::erf;

    #[test]
    fn gamma_selection() {
        let h = ExponentHandle::new(models::bessel(-1.0, 0.0).unwrap()).unwrap();
        assert!((select_gamma(&h).unwrap() - 1.0).abs() < 1e-12);
        let h = ExponentHandle::new(models::bessel(0.0, 4.0).unwrap()).unwrap();
        assert!((select_gamma(&h).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        let h = ExponentHandle::new(models::sawtooth(1.0, 0.5, 0.0).unwrap()).unwrap();
        assert!((select_gamma(&h).unwrap() - 0.5).abs() < 1e-12);
        let h = ExponentHandle::new(models::bessel(0.5, 0.0).unwrap()).unwrap();
        assert!(matches!(select_gamma(&h), Err(Error::NoAbsorption(_))));
    }

    #[test]
    fn kesten_constants() {
        let law = AbsorptionLaw::new(models::sawtooth(1.0, 0.5, 0.0).unwrap()).unwrap();
        assert!((law.c_gamma - 4.0 / std::f64::consts::PI).abs() < 1e-10);
        let law = AbsorptionLaw::new(models::bessel(-0.5, 0.0).unwrap()).unwrap();
        assert!((law.c_gamma - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-10);
        let law = AbsorptionLaw::new(models::bessel(-1.0, 0.0).unwrap()).unwrap();
        assert!((law.c_gamma - 0.5).abs() < 1e-12);
        let law = AbsorptionLaw::new(models::bessel(0.3, 1.0).unwrap()).unwrap();
        let want = closed_forms::bessel_kesten(0.3, 1.0).unwrap();
        assert!((law.c_gamma - want).abs() < 1e-10 * want);
        let law = AbsorptionLaw::new(models::sawtooth(1.5, 0.7, 0.4).unwrap()).unwrap();
        let want = closed_forms::sawtooth_kesten(1.5, 0.7, 0.4).unwrap();
        assert!((law.c_gamma - want).abs() < 1e-10 * want);
    }

    #[test]
    fn survival_matches_closed_forms() {
        let law = AbsorptionLaw::new(models::bessel(-0.5, 0.0).unwrap()).unwrap();
        let s = law.survival_s(1.0).unwrap();
        assert!((s.value - erf(0.5f64.sqrt())).abs() < 1e-12);
        let small = law.survival_s(1e-6).unwrap();
        assert!((small.value - 1.0).abs() < 1e-4);
        let law = AbsorptionLaw::new(models::sawtooth(1.0, 0.5, 0.0).unwrap()).unwrap();
        for t in [0.5, 1.0, 5.0, 50.0] {
            let got = law.survival_s(t).unwrap().value;
            let want = closed_forms::sawtooth_survival(1.0, 0.5, 0.0, t).unwrap();
            assert!((got - want).abs() < 1e-10, "t={t}: {got} vs {want}");
        }
    }

    #[test]
    fn density_derivatives() {
        let law = AbsorptionLaw::new(models::bessel(-0.5, 0.0).unwrap()).unwrap();
        let d = law.density_s(1.0, 0).unwrap().value;
        let want = (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((d - want).abs() < 1e-12);
        for m in 0..3 {
            let v = law.density_s(100.0, m).unwrap().value;
            let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
            assert!(sign * v > 0.0);
        }
    }

    #[test]
    fn laplace_transform_basics() {
        let law = AbsorptionLaw::new(models::sawtooth(1.0, 0.5, 0.0).unwrap()).unwrap();
        assert_eq!(law.laplace_n(0.0, 1.0).unwrap(), 1.0);
        let mut prev = 1.0;
        for i in 1..10 {
            let v = law.laplace_n(0.25 * i as f64, 1.0).unwrap();
            assert!(v < prev && v > 0.0);
            prev = v;
        }
    }

    #[test]
    fn exit_probability_limits() {
        let law = AbsorptionLaw::new(models::bessel(-0.5, 0.0).unwrap()).unwrap();
        let spec = ExitSpec::new(-1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(law.exit_probability(&spec).unwrap(), 1.0);
        let spec = ExitSpec::new(-1.0, 1.0, 1e3, 1.0).unwrap();
        let p = law.exit_probability(&spec).unwrap();
        let want = law.distribution_p(1.0).unwrap().value;
        assert!((p - want).abs() < 1e-6, "{p} vs {want}");
        let spec = ExitSpec::new(-1.0, 1.0, 2.0, 0.5).unwrap();
        let p = law.exit_probability(&spec).unwrap();
        assert!(p > 0.0 && p < 1.0);
    }
}
