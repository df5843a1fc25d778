//! Spectrally negative Lévy exponents.
//!
//! A model is the triplet `(b̄, σ, ν)` with kill rate `q` and self-similarity
//! index `α`, and
//!
//! ```text
//! ψ(u) = b̄u + (σ/2)u² + ∫(e^{ur} − 1 − ur·1{|r|<1}) ν(dr) − q.
//! ```
//!
//! Both supported jump measures are finite, so internally the exponent is
//! kept in the form `ψ(u) = ℓu + (σ/2)u² + ∫(e^{ur} − 1) ν(dr) − q` with
//! `ℓ = b̄ − ∫_{−1}^0 r ν(dr)`. When `σ = 0` the paths have bounded variation
//! and `ℓ` is the drift `b`.

use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::quad;
use crate::roots::newton_bracketed;
use crate::special::{exprel, exprel2};

const ROOT_TOL: f64 = 1e-15;

/// One component `λ c e^{c r} dr` (`r < 0`) of an exponential mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub rate: f64,
    pub intensity: f64,
}

/// Piecewise-linear jump density on a grid of negative abscissas, with an
/// exponential left tail `d₀ e^{κ(r − r₀)}` beyond the first node and zero
/// density between the last node and the origin. `exp_tilt` multiplies the
/// whole density by `e^{exp_tilt·r}` (Esscher transform).
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    r: Vec<f64>,
    dens: Vec<f64>,
    tail_rate: f64,
    exp_tilt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum JumpMeasure {
    None,
    ExpMixture(Vec<ExpTerm>),
    Tabulated(TabulatedDensity),
}

impl TabulatedDensity {
    /// `points` are `(r, density)` pairs with `r < 0`, in any order.
    pub fn new(mut points: Vec<(f64, f64)>, tail_rate: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidModel("tabulated density needs at least two nodes".into()));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in points.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidModel(format!("duplicate node r = {}", w[0].0)));
            }
        }
        for &(r, d) in &points {
            if !(r < 0.0) || !r.is_finite() {
                return Err(Error::InvalidModel(format!("tabulated node r = {r} is not negative")));
            }
            if !(d >= 0.0) || !d.is_finite() {
                return Err(Error::InvalidModel(format!("density {d} at r = {r} is not >= 0")));
            }
        }
        if !(tail_rate > 0.0) {
            return Err(Error::InvalidModel("tail decay rate must be positive".into()));
        }
        let t = TabulatedDensity {
            r: points.iter().map(|p| p.0).collect(),
            dens: points.iter().map(|p| p.1).collect(),
            tail_rate,
            exp_tilt: 0.0,
        };
        let m = t.integrate(|r| 1.0f64.min(r * r))?;
        if !m.is_finite() || m <= 0.0 {
            return Err(Error::InvalidModel(format!("∫(1∧r²)ν(dr) = {m} is not positive and finite")));
        }
        Ok(t)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.r
    }

    pub fn values(&self) -> &[f64] {
        &self.dens
    }

    pub fn tail_rate(&self) -> f64 {
        self.tail_rate
    }

    pub fn exp_tilt(&self) -> f64 {
        self.exp_tilt
    }

    fn tilted(&self, gamma: f64) -> Self {
        let mut t = self.clone();
        t.exp_tilt += gamma;
        t
    }

    /// Decay rate of the (tilted) left tail; the exponent is finite for `u > −rate`.
    pub fn effective_tail_rate(&self) -> f64 {
        self.tail_rate + self.exp_tilt
    }

    /// Untilted interpolant.
    fn base(&self, r: f64) -> f64 {
        let n = self.r.len();
        if r < self.r[0] {
            return self.dens[0] * (self.tail_rate * (r - self.r[0])).exp();
        }
        if r > self.r[n - 1] {
            return 0.0;
        }
        let i = match self.r.partition_point(|&x| x <= r) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let (r0, r1) = (self.r[i], self.r[i + 1]);
        let w = (r - r0) / (r1 - r0);
        self.dens[i] * (1.0 - w) + self.dens[i + 1] * w
    }

    /// Density of ν at `r`.
    pub fn density(&self, r: f64) -> f64 {
        self.base(r) * (self.exp_tilt * r).exp()
    }

    /// `∫ g(r) ν(dr)` by adaptive Gauss-Kronrod on each grid segment (split
    /// at `r = −1`) plus the exponential tail.
    pub fn integrate<G: Fn(f64) -> f64>(&self, g: G) -> Result<f64> {
        let mut total = 0.0;
        let n = self.r.len();
        let mut cuts: Vec<f64> = self.r.clone();
        if self.r[0] < -1.0 && self.r[n - 1] > -1.0 && !self.r.contains(&-1.0) {
            cuts.push(-1.0);
            cuts.sort_by(|a, b| a.total_cmp(b));
        }
        for w in cuts.windows(2) {
            let res = quad::integrate(|r| g(r) * self.density(r), w[0], w[1], 1e-15, 1e-12)?;
            total += res.value;
        }
        let r0 = self.r[0];
        let d0 = self.dens[0];
        if d0 > 0.0 {
            let kappa = self.tail_rate;
            let tilt = self.exp_tilt;
            let res = quad::integrate_to_inf(
                |y| {
                    let r = r0 - y;
                    g(r) * d0 * (-kappa * y).exp() * (tilt * r).exp()
                },
                0.0,
                1e-15,
                1e-12,
            )?;
            total += res.value;
        }
        Ok(total)
    }

    /// Total mass and cumulative masses of the grid segments (for sampling).
    pub fn segment_masses(&self) -> Result<(f64, Vec<f64>)> {
        let mut out = Vec::with_capacity(self.r.len());
        let d0 = self.dens[0];
        let tail = if d0 > 0.0 {
            let kappa = self.effective_tail_rate();
            d0 * (self.exp_tilt * self.r[0]).exp() / kappa
        } else {
            0.0
        };
        out.push(tail);
        let mut acc = tail;
        for w in self.r.windows(2) {
            let res = quad::integrate(|r| self.density(r), w[0], w[1], 1e-15, 1e-13)?;
            acc += res.value;
            out.push(acc);
        }
        Ok((acc, out))
    }
}

/// Lévy triplet plus kill rate and self-similarity index.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyModel {
    pub bbar: f64,
    pub sigma: f64,
    pub measure: JumpMeasure,
    pub kill_q: f64,
    pub alpha: f64,
    pub alpha_tilde: f64,
    lin: f64,
}

fn exp_term_compensator(t: &ExpTerm) -> f64 {
    // ∫_{-1}^0 r λ c e^{cr} dr
    let c = t.rate;
    t.intensity * ((-c).exp() * (1.0 + 1.0 / c) - 1.0 / c)
}

fn compensator(measure: &JumpMeasure) -> Result<f64> {
    Ok(match measure {
        JumpMeasure::None => 0.0,
        JumpMeasure::ExpMixture(terms) => terms.iter().map(exp_term_compensator).sum(),
        JumpMeasure::Tabulated(t) => t.integrate(|r| if r > -1.0 { r } else { 0.0 })?,
    })
}

impl LevyModel {
    /// Model from the Lévy-Khintchine drift `b̄`.
    pub fn new(bbar: f64, sigma: f64, measure: JumpMeasure, kill_q: f64, alpha: f64) -> Result<Self> {
        let comp = compensator(&measure)?;
        Self::build(bbar, bbar - comp, sigma, measure, kill_q, alpha)
    }

    /// Model from the linear coefficient `ℓ = b̄ − ∫_{−1}^0 rν(dr)`, which is
    /// the drift `b` of a bounded-variation process.
    pub fn with_drift(b: f64, sigma: f64, measure: JumpMeasure, kill_q: f64, alpha: f64) -> Result<Self> {
        let comp = compensator(&measure)?;
        Self::build(b + comp, b, sigma, measure, kill_q, alpha)
    }

    fn build(bbar: f64, lin: f64, sigma: f64, measure: JumpMeasure, kill_q: f64, alpha: f64) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidModel(m));
        if !bbar.is_finite() {
            return bad(format!("bbar = {bbar} is not finite"));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return bad(format!("sigma = {sigma} must be >= 0"));
        }
        if !(kill_q >= 0.0) || !kill_q.is_finite() {
            return bad(format!("kill_q = {kill_q} must be >= 0"));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return bad(format!("alpha = {alpha} must be > 0"));
        }
        if let JumpMeasure::ExpMixture(terms) = &measure {
            if terms.is_empty() {
                return bad("exp_mixture needs at least one term".into());
            }
            for t in terms {
                if !(t.rate > 0.0 && t.rate.is_finite()) || !(t.intensity > 0.0 && t.intensity.is_finite()) {
                    return bad(format!("exp_mixture term ({}, {}) must have positive rate and intensity", t.rate, t.intensity));
                }
            }
        }
        if sigma == 0.0 {
            if measure == JumpMeasure::None && bbar <= 0.0 {
                return bad("degenerate model: pure non-positive drift".into());
            }
            if lin <= 0.0 {
                return bad(format!(
                    "bounded-variation model with drift b = {lin} <= 0 is a negative subordinator"
                ));
            }
        }
        Ok(LevyModel { bbar, sigma, measure, kill_q, alpha, alpha_tilde: 1.0 / alpha, lin })
    }

    /// Linear coefficient `ℓ`; equals the drift `b` when `σ = 0`.
    pub fn linear_coefficient(&self) -> f64 {
        self.lin
    }

    /// Same model with a different kill rate.
    pub fn with_kill(&self, q: f64) -> Result<Self> {
        Self::build(self.bbar, self.lin, self.sigma, self.measure.clone(), q, self.alpha)
    }

    /// Total jump intensity `ν(−∞, 0)`.
    pub fn jump_mass(&self) -> Result<f64> {
        match &self.measure {
            JumpMeasure::None => Ok(0.0),
            JumpMeasure::ExpMixture(terms) => Ok(terms.iter().map(|t| t.intensity).sum()),
            JumpMeasure::Tabulated(t) => t.integrate(|_| 1.0),
        }
    }

    /// Infimum of the real half-line on which `ψ` is finite.
    pub fn exponent_lower_bound(&self) -> f64 {
        match &self.measure {
            JumpMeasure::None => f64::NEG_INFINITY,
            JumpMeasure::ExpMixture(terms) => -terms.iter().map(|t| t.rate).fold(f64::INFINITY, f64::min),
            JumpMeasure::Tabulated(t) => {
                if t.dens[0] > 0.0 {
                    -t.effective_tail_rate()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    BoundedVariation { b: f64 },
    UnboundedVariation,
}

/// Evaluator for `ψ` and its derived objects.
#[derive(Debug)]
pub struct ExponentHandle {
    pub model: LevyModel,
    pub regime: Regime,
    /// `E[ξ₁] = ψ'(0⁺)`; the supported measures always give a finite value.
    pub mean_xi1: f64,
    pub theta: Option<f64>,
    phi_cache: Mutex<Vec<(f64, f64)>>,
}

impl Clone for ExponentHandle {
    fn clone(&self) -> Self {
        ExponentHandle {
            model: self.model.clone(),
            regime: self.regime,
            mean_xi1: self.mean_xi1,
            theta: self.theta,
            phi_cache: Mutex::new(self.phi_cache.lock().unwrap().clone()),
        }
    }
}

impl ExponentHandle {
    pub fn new(model: LevyModel) -> Result<Self> {
        let regime = if model.sigma == 0.0 {
            Regime::BoundedVariation { b: model.lin }
        } else {
            Regime::UnboundedVariation
        };
        let mut h = ExponentHandle { model, regime, mean_xi1: 0.0, theta: None, phi_cache: Mutex::new(Vec::new()) };
        h.mean_xi1 = h.try_jump_prime(0.0)? + h.model.lin;
        if h.model.kill_q == 0.0 && h.mean_xi1 < 0.0 {
            h.theta = Some(h.find_cramer_root()?);
        }
        Ok(h)
    }

    pub fn alpha(&self) -> f64 {
        self.model.alpha
    }

    /// `∫(e^{ur} − 1) ν(dr)`.
    fn try_jump(&self, u: f64) -> Result<f64> {
        match &self.model.measure {
            JumpMeasure::None => Ok(0.0),
            JumpMeasure::ExpMixture(terms) => Ok(-terms.iter().map(|t| t.intensity * u / (t.rate + u)).sum::<f64>()),
            JumpMeasure::Tabulated(t) => t.integrate(|r| (u * r).exp_m1()),
        }
    }

    fn try_jump_prime(&self, u: f64) -> Result<f64> {
        match &self.model.measure {
            JumpMeasure::None => Ok(0.0),
            JumpMeasure::ExpMixture(terms) => Ok(-terms
                .iter()
                .map(|t| t.intensity * t.rate / ((t.rate + u) * (t.rate + u)))
                .sum::<f64>()),
            JumpMeasure::Tabulated(t) => t.integrate(|r| r * (u * r).exp()),
        }
    }

    fn check_domain(&self, u: f64) -> Result<()> {
        let lb = self.model.exponent_lower_bound();
        if u <= lb {
            return Err(Error::Domain(format!("ψ({u}) is infinite: exponent defined for u > {lb}")));
        }
        Ok(())
    }

    /// `ψ(u)` (including `−q`) on the whole domain `u > exponent_lower_bound()`.
    pub fn try_psi(&self, u: f64) -> Result<f64> {
        self.check_domain(u)?;
        let m = &self.model;
        Ok(m.lin * u + 0.5 * m.sigma * u * u + self.try_jump(u)? - m.kill_q)
    }

    /// `ψ(u)`, NaN where the exponent cannot be evaluated.
    pub fn psi(&self, u: f64) -> f64 {
        self.try_psi(u).unwrap_or(f64::NAN)
    }

    /// `ψ'(u)`.
    pub fn try_psi_prime(&self, u: f64) -> Result<f64> {
        self.check_domain(u)?;
        Ok(self.model.lin + self.model.sigma * u + self.try_jump_prime(u)?)
    }

    pub fn psi_prime(&self, u: f64) -> f64 {
        self.try_psi_prime(u).unwrap_or(f64::NAN)
    }

    /// `ψ(u)` for `u ≥ 0` (`ψ̄(u) = ψ(u) − q` when the model is killed).
    pub fn eval_psi(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::Domain(format!("eval_psi needs u >= 0, got {u}")));
        }
        self.try_psi(u)
    }

    /// `ψ'(u)` for `u ≥ 0`; at zero this is `E[ξ₁]`.
    pub fn eval_psi_prime(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::Domain(format!("eval_psi_prime needs u >= 0, got {u}")));
        }
        if u == 0.0 {
            return Ok(self.mean_xi1);
        }
        self.try_psi_prime(u)
    }

    /// Positive root of the unkilled exponent equal to `target`, searched
    /// above `lo`.
    fn solve_unkilled(&self, target: f64, lo: f64) -> Result<f64> {
        let q = self.model.kill_q;
        let f = |u: f64| -> Result<f64> { Ok(self.try_psi(u)? + q - target) };
        let mut hi = lo.max(1.0);
        let mut guard = 0;
        while f(hi)? <= 0.0 {
            hi *= 2.0;
            guard += 1;
            if guard > 1100 {
                return Err(Error::NoConvergence(format!("ψ stays below {target} on [0, {hi:e}]")));
            }
        }
        let root = newton_bracketed(
            |u| (self.psi(u) + q - target, self.psi_prime(u)),
            lo,
            hi,
            ROOT_TOL,
        )?;
        Ok(root)
    }

    fn find_cramer_root(&self) -> Result<f64> {
        let theta = self.solve_unkilled(0.0, 0.0)?;
        if !(theta > 0.0) {
            return Err(Error::NoCramerRoot(format!("root search returned {theta}")));
        }
        Ok(theta)
    }

    /// Cramér root `θ > 0` of `ψ`; needs `q = 0` and `E[ξ₁] < 0`.
    pub fn cramer_root(&self) -> Result<f64> {
        if self.model.kill_q != 0.0 {
            return Err(Error::NoCramerRoot("model is killed (q > 0)".into()));
        }
        self.theta.ok_or_else(|| {
            Error::NoCramerRoot(format!("E[ξ₁] = {} is not negative", self.mean_xi1))
        })
    }

    /// `φ(q)`: the largest root of `ψ(u) = q` for the unkilled exponent.
    pub fn inverse_phi(&self, q: f64) -> Result<f64> {
        if !(q > 0.0) {
            return Err(Error::Domain(format!("inverse_phi needs q > 0, got {q}")));
        }
        if let Some(&(_, v)) = self.phi_cache.lock().unwrap().iter().find(|(k, _)| *k == q) {
            return Ok(v);
        }
        let lo = if self.mean_xi1 < 0.0 {
            // unkilled Cramér root
            match self.theta {
                Some(t) => t,
                None => self.solve_unkilled(0.0, 0.0)?,
            }
        } else {
            0.0
        };
        let v = self.solve_unkilled(q, lo)?;
        let mut cache = self.phi_cache.lock().unwrap();
        if cache.len() < 256 {
            cache.push((q, v));
        }
        Ok(v)
    }

    /// Esscher transform `u ↦ ψ(u + γ) − ψ(γ)`, represented exactly as a new
    /// conservative model. `γ` must be `θ` (unkilled) or `φ(q)` (killed).
    pub fn tilt(&self, gamma: f64) -> Result<ExponentHandle> {
        if !(gamma > 0.0) {
            return Err(Error::Domain(format!("tilt parameter {gamma} must be positive")));
        }
        let q = self.model.kill_q;
        let expected = if q > 0.0 { self.inverse_phi(q)? } else { self.cramer_root()? };
        if (gamma - expected).abs() > 1e-9 * expected.max(1.0) {
            return Err(Error::Domain(format!(
                "tilt parameter {gamma} does not match the root {expected} selected by the regime"
            )));
        }
        self.tilt_unchecked(gamma)
    }

    /// Esscher transform for any `γ` inside the exponent's domain.
    pub fn tilt_unchecked(&self, gamma: f64) -> Result<ExponentHandle> {
        self.check_domain(gamma)?;
        let m = &self.model;
        let measure = match &m.measure {
            JumpMeasure::None => JumpMeasure::None,
            JumpMeasure::ExpMixture(terms) => JumpMeasure::ExpMixture(
                terms
                    .iter()
                    .map(|t| ExpTerm {
                        rate: t.rate + gamma,
                        intensity: t.intensity * t.rate / (t.rate + gamma),
                    })
                    .collect(),
            ),
            JumpMeasure::Tabulated(t) => JumpMeasure::Tabulated(t.tilted(gamma)),
        };
        let lin = m.lin + m.sigma * gamma;
        let comp = compensator(&measure)?;
        let model = LevyModel::build(lin + comp, lin, m.sigma, measure, 0.0, m.alpha)?;
        ExponentHandle::new(model)
    }

    pub fn classify_regime(&self) -> Regime {
        self.regime
    }

    /// Drift `b` of a bounded-variation model.
    pub fn bv_drift(&self) -> Result<f64> {
        match self.regime {
            Regime::BoundedVariation { b } => Ok(b),
            Regime::UnboundedVariation => Err(Error::Domain("model has unbounded variation".into())),
        }
    }

    fn vhat_raw(&self, s: f64) -> Result<f64> {
        match &self.model.measure {
            JumpMeasure::None => Ok(0.0),
            JumpMeasure::ExpMixture(terms) => Ok(terms.iter().map(|t| t.intensity / (s + t.rate)).sum()),
            JumpMeasure::Tabulated(t) => t.integrate(|r| -r * exprel(s * r)),
        }
    }

    /// `v̂(s) = ∫₀^∞ e^{−sr} ν(−∞,−r) dr`.
    pub fn tail_laplace_vhat(&self, s: f64) -> Result<f64> {
        self.bv_drift()?;
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("v̂ needs s >= 0, got {s}")));
        }
        self.vhat_raw(s)
    }

    /// `φ(u) = b − v̂(u)`, so that `ψ(u) + q = uφ(u)`; valid on the whole
    /// exponent domain including negative `u`.
    pub fn phi_factor(&self, u: f64) -> Result<f64> {
        let b = self.bv_drift()?;
        self.check_domain(u)?;
        Ok(b - self.vhat_raw(u)?)
    }

    /// `φ̄(u) = ψ(u)/u²` for a conservative exponent (`ψ(0) = 0`).
    pub fn barphi_factor(&self, u: f64) -> Result<f64> {
        if self.model.kill_q != 0.0 {
            return Err(Error::Domain("φ̄ is defined for conservative (tilted) exponents".into()));
        }
        if u == 0.0 {
            return Err(Error::Pole("φ̄ has a pole at u = 0".into()));
        }
        self.check_domain(u)?;
        if u.abs() >= 1.0 {
            return Ok(self.try_psi(u)? / (u * u));
        }
        // σ/2 + ψ'(0)/u + ∫ r² (e^{ur} − 1 − ur)/(ur)² ν(dr)
        let m = &self.model;
        let k = match &m.measure {
            JumpMeasure::None => 0.0,
            JumpMeasure::ExpMixture(terms) => terms.iter().map(|t| t.intensity / (t.rate * (t.rate + u))).sum(),
            JumpMeasure::Tabulated(t) => t.integrate(|r| r * r * exprel2(u * r))?,
        };
        Ok(0.5 * m.sigma + self.mean_xi1 / u + k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sawtooth(beta: f64, delta: f64) -> ExponentHandle {
        let m = LevyModel::with_drift(
            1.0,
            0.0,
            JumpMeasure::ExpMixture(vec![ExpTerm { rate: delta + beta - 1.0, intensity: beta }]),
            0.0,
            1.0,
        )
        .unwrap();
        ExponentHandle::new(m).unwrap()
    }

    fn bessel(b: f64, q: f64) -> ExponentHandle {
        ExponentHandle::new(LevyModel::new(2.0 * b, 4.0, JumpMeasure::None, q, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn sawtooth_values() {
        let h = sawtooth(1.0, 0.5);
        assert!((h.eval_psi(1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((h.eval_psi_prime(0.0).unwrap() + 1.0).abs() < 1e-15);
        assert!((h.cramer_root().unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(h.classify_regime(), Regime::BoundedVariation { b: 1.0 });
        assert!((h.tail_laplace_vhat(2.0).unwrap() - 1.0 / 2.5).abs() < 1e-15);
    }

    #[test]
    fn sawtooth_tilt_closed_form() {
        let h = sawtooth(1.0, 0.5);
        let t = h.tilt(0.5).unwrap();
        assert_eq!(t.eval_psi(0.0).unwrap(), 0.0);
        for &u in &[0.1, 1.0, 3.0, 17.0] {
            let want = u * (u + 0.5) / (u + 1.0);
            assert!((t.eval_psi(u).unwrap() - want).abs() < 1e-14 * (1.0 + want));
        }
        assert!(t.eval_psi_prime(0.0).unwrap() > 0.0);
    }

    #[test]
    fn bessel_roots() {
        let h = bessel(-1.0, 0.0);
        assert!((h.cramer_root().unwrap() - 1.0).abs() < 1e-14);
        assert!((h.eval_psi_prime(0.0).unwrap() + 2.0).abs() < 1e-15);
        assert_eq!(h.classify_regime(), Regime::UnboundedVariation);
        let k = bessel(0.0, 4.0);
        assert!(k.eval_psi(2f64.sqrt()).unwrap().abs() < 1e-13);
        assert!((k.inverse_phi(4.0).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        for &b in &[-1.0, -0.3, 0.0, 0.7] {
            let h = bessel(b, 0.0);
            for &q in &[0.5, 1.0, 3.0] {
                let want = 0.5 * ((2.0 * q + b * b).sqrt() - b);
                assert!((h.inverse_phi(q).unwrap() - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn sawtooth_inverse_phi() {
        let (beta, delta) = (1.0, 0.5);
        let h = sawtooth(beta, delta);
        for &q in &[0.2, 1.0, 5.0] {
            let pb = ((q - (delta - 1.0)) * (q - (delta - 1.0)) + 4.0 * (delta + beta - 1.0) * q).sqrt();
            let want = 0.5 * (q - (delta - 1.0) + pb);
            assert!((h.inverse_phi(q).unwrap() - want).abs() < 1e-13);
        }
    }

    #[test]
    fn barphi_forms_agree() {
        let t = bessel(-1.0, 0.0).tilt(1.0).unwrap();
        assert!((t.barphi_factor(1.0).unwrap() - 4.0).abs() < 1e-14);
        let m = LevyModel::new(
            -0.4,
            0.6,
            JumpMeasure::ExpMixture(vec![ExpTerm { rate: 2.0, intensity: 1.5 }, ExpTerm { rate: 0.7, intensity: 0.3 }]),
            0.0,
            1.3,
        )
        .unwrap();
        let h = ExponentHandle::new(m).unwrap();
        let th = h.cramer_root().unwrap();
        let t = h.tilt(th).unwrap();
        for &u in &[0.3, 0.9, 0.999, 1.0, 1.5] {
            let direct = t.psi(u) / (u * u);
            assert!((t.barphi_factor(u).unwrap() - direct).abs() < 1e-12 * direct.abs());
        }
        assert!((t.barphi_factor(1e7).unwrap() - 0.3).abs() < 1e-6);
    }

    #[test]
    fn tabulated_matches_mixture() {
        // a fine tabulation of 2e^{2r} on [-8, -1e-6] with the exact tail
        let nodes: Vec<(f64, f64)> = (0..=4000)
            .map(|i| {
                let r = -8.0 + (8.0 - 1e-6) * i as f64 / 4000.0;
                (r, 2.0 * (2.0 * r).exp())
            })
            .collect();
        let tab = TabulatedDensity::new(nodes, 2.0).unwrap();
        let a = ExponentHandle::new(LevyModel::with_drift(0.3, 0.0, JumpMeasure::Tabulated(tab), 0.0, 1.0).unwrap()).unwrap();
        let b = ExponentHandle::new(
            LevyModel::with_drift(0.3, 0.0, JumpMeasure::ExpMixture(vec![ExpTerm { rate: 2.0, intensity: 1.0 }]), 0.0, 1.0)
                .unwrap(),
        )
        .unwrap();
        for &u in &[0.0, 0.5, 2.0, 10.0] {
            assert!((a.psi(u) - b.psi(u)).abs() < 1e-5, "u={u}: {} vs {}", a.psi(u), b.psi(u));
        }
        let th = a.cramer_root().unwrap();
        assert!((th - b.cramer_root().unwrap()).abs() < 1e-5);
        let ta = a.tilt(th).unwrap();
        assert!(ta.psi(0.0).abs() < 1e-13);
        assert!((ta.psi(1.0) - b.tilt_unchecked(th).unwrap().psi(1.0)).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_models() {
        assert!(LevyModel::new(1.0, -1.0, JumpMeasure::None, 0.0, 1.0).is_err());
        assert!(LevyModel::new(-1.0, 0.0, JumpMeasure::None, 0.0, 1.0).is_err());
        assert!(LevyModel::new(1.0, 0.0, JumpMeasure::None, 0.0, 0.0).is_err());
        assert!(LevyModel::new(1.0, 0.0, JumpMeasure::ExpMixture(vec![ExpTerm { rate: -1.0, intensity: 1.0 }]), 0.0, 1.0).is_err());
        let h = bessel(0.5, 0.0);
        assert!(h.cramer_root().is_err());
        let k = bessel(-1.0, 0.0);
        assert!(k.tilt(0.7).is_err());
    }
}
