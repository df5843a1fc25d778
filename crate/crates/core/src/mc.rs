//! Monte Carlo oracle: simulation of the Lévy process `ξ`, the exponential
//! functional `Σ = ∫ e^{αξ_s} ds`, the exit problem of the self-similar
//! process through the Lamperti clock, and the maximum of a spectrally
//! positive stable process.
//!
//! Every path `i` draws from its own ChaCha stream (`seed`, stream `i`), so
//! results do not depend on the number of paths simulated before it or on the
//! thread count. Reductions use pairwise summation in path order.
//!
//! Gaussian segments are integrated with the exact linear part plus the
//! Brownian-bridge area (an independent `N(0, σh³/12)` variable). Each pair
//! of fine steps is also combined into one coarse step on the same path, and
//! the fine/coarse gap is reported as discretisation bias.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::absorption::{select_gamma, ExitSpec};
use crate::error::{Error, Result};
use crate::levy::{ExponentHandle, JumpMeasure, LevyModel};
use crate::special::exprel;
use crate::sum::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCConfig {
    pub paths: usize,
    /// Base Euler step in the time of `ξ`.
    pub dt: f64,
    /// Largest `ξ`-time a path may run before it is flagged.
    pub horizon: f64,
    pub seed: u64,
    /// Tabulated jumps smaller than this are replaced by their mean.
    pub small_jump_cutoff: f64,
    /// Paths stop once `e^{αξ} ≤ eps_tail·Σ`.
    pub eps_tail: f64,
}

impl Default for MCConfig {
    fn default() -> Self {
        MCConfig { paths: 200_000, dt: 1e-4, horizon: 1e4, seed: 20_240_601, small_jump_cutoff: 1e-8, eps_tail: 1e-5 }
    }
}

impl MCConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::Domain("paths must be positive".into()));
        }
        if !(self.dt > 0.0 && self.dt <= 1e-2) {
            return Err(Error::Domain(format!("dt must lie in (0, 1e-2], got {}", self.dt)));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::Domain(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.small_jump_cutoff > 0.0) {
            return Err(Error::Domain("small_jump_cutoff must be positive".into()));
        }
        if !(self.eps_tail > 0.0 && self.eps_tail < 1.0) {
            return Err(Error::Domain(format!("eps_tail must lie in (0, 1), got {}", self.eps_tail)));
        }
        Ok(())
    }

    fn check_ci(&self) -> Result<()> {
        self.validate()?;
        if self.paths < 1000 {
            return Err(Error::Domain(format!("at least 1000 paths are needed for a confidence interval, got {}", self.paths)));
        }
        Ok(())
    }

    fn rng(&self, path: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(path);
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub value: f64,
    pub std_err: f64,
    pub paths_used: usize,
    pub truncation_bias_bound: f64,
}

impl MCEstimate {
    pub fn z_score(&self, reference: f64) -> f64 {
        if self.std_err > 0.0 {
            (self.value - reference) / self.std_err
        } else if self.value == reference {
            0.0
        } else {
            f64::INFINITY
        }
    }

    /// `|value − reference| ≤ k·std_err + truncation_bias_bound`.
    pub fn agrees_with(&self, reference: f64, k: f64) -> bool {
        (self.value - reference).abs() <= k * self.std_err + self.truncation_bias_bound
    }

    fn binomial(p: f64, n: usize, bias: f64) -> Self {
        MCEstimate {
            value: p,
            std_err: (p * (1.0 - p) / n as f64).sqrt(),
            paths_used: n,
            truncation_bias_bound: bias,
        }
    }
}

fn mean_of(flags: impl Iterator<Item = bool>, n: usize) -> f64 {
    let v: Vec<f64> = flags.map(|b| if b { 1.0 } else { 0.0 }).collect();
    pairwise_sum(&v) / n as f64
}

#[derive(Debug, Clone)]
enum Jumps {
    None,
    Mixture { cum: Vec<f64>, rates: Vec<f64> },
    Table { cum: Vec<f64>, nodes: Vec<f64>, dens: Vec<f64>, tilt: f64, tail_rate: f64, cutoff: f64 },
}

/// Simulation parameters of `ξ`: `ξ_t = ℓt + √σ W_t + (compound Poisson)`.
#[derive(Debug, Clone)]
struct Dynamics {
    drift: f64,
    sd: f64,
    alpha: f64,
    kill_q: f64,
    rate: f64,
    jumps: Jumps,
}

impl Dynamics {
    fn new(model: &LevyModel, cutoff: f64) -> Result<Self> {
        let mut drift = model.linear_coefficient();
        let (rate, jumps) = match &model.measure {
            JumpMeasure::None => (0.0, Jumps::None),
            JumpMeasure::ExpMixture(terms) => {
                let mut cum = Vec::with_capacity(terms.len());
                let mut acc = 0.0;
                for t in terms {
                    acc += t.intensity;
                    cum.push(acc);
                }
                (acc, Jumps::Mixture { cum, rates: terms.iter().map(|t| t.rate).collect() })
            }
            JumpMeasure::Tabulated(t) => {
                let (total, cum) = t.segment_masses()?;
                let small = t.integrate(|r| if r > -cutoff { r } else { 0.0 })?;
                drift += small;
                (
                    total,
                    Jumps::Table {
                        cum,
                        nodes: t.nodes().to_vec(),
                        dens: t.values().to_vec(),
                        tilt: t.exp_tilt(),
                        tail_rate: t.effective_tail_rate(),
                        cutoff,
                    },
                )
            }
        };
        Ok(Dynamics { drift, sd: model.sigma.sqrt(), alpha: model.alpha, kill_q: model.kill_q, rate, jumps })
    }

    fn next_jump<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.rate > 0.0 {
            let e: f64 = rng.sample(Exp1);
            e / self.rate
        } else {
            f64::INFINITY
        }
    }

    /// A jump size (negative), or 0 for a jump below the cutoff.
    fn jump<R: Rng>(&self, rng: &mut R) -> f64 {
        match &self.jumps {
            Jumps::None => 0.0,
            Jumps::Mixture { cum, rates } => {
                let u: f64 = rng.gen::<f64>() * cum[cum.len() - 1];
                let i = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
                let e: f64 = rng.sample(Exp1);
                -e / rates[i]
            }
            Jumps::Table { cum, nodes, dens, tilt, tail_rate, cutoff } => {
                let total = cum[cum.len() - 1];
                let u: f64 = rng.gen::<f64>() * total;
                let seg = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
                let r = if seg == 0 {
                    let e: f64 = rng.sample(Exp1);
                    nodes[0] - e / tail_rate
                } else {
                    let (r0, r1) = (nodes[seg - 1], nodes[seg]);
                    let (d0, d1) = (dens[seg - 1], dens[seg]);
                    let env = d0.max(d1) * (tilt * r0).exp().max((tilt * r1).exp());
                    loop {
                        let r = r0 + (r1 - r0) * rng.gen::<f64>();
                        let w = (r - r0) / (r1 - r0);
                        let d = (d0 * (1.0 - w) + d1 * w) * (tilt * r).exp();
                        if rng.gen::<f64>() * env <= d {
                            break r;
                        }
                    }
                };
                if r > -cutoff {
                    0.0
                } else {
                    r
                }
            }
        }
    }

    fn kill_time<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.kill_q > 0.0 {
            let e: f64 = rng.sample(Exp1);
            e / self.kill_q
        } else {
            f64::INFINITY
        }
    }
}

/// `∫₀^h e^{α(x₀ + sΔ/h + bridge)} ds` to first order in the bridge area.
#[inline]
fn segment_integral(alpha: f64, x0: f64, delta: f64, h: f64, area: f64) -> f64 {
    let lin = h * (alpha * x0).exp() * exprel(alpha * delta);
    lin + alpha * (alpha * (x0 + 0.5 * delta)).exp() * area
}

/// Same as [`segment_integral`] given `e₀ = e^{αx₀}` and `r = e^{αΔ} − 1`.
#[inline]
fn segment_from(alpha: f64, e0: f64, delta: f64, r: f64, h: f64, area: f64) -> f64 {
    let ad = alpha * delta;
    let lin = if ad.abs() > 1e-8 { h * e0 * r / ad } else { h * e0 * (1.0 + 0.5 * ad) };
    lin + alpha * e0 * (1.0 + r).sqrt() * area
}

/// Two fine Gaussian steps of size `h` and the coupled coarse step.
struct Pair {
    d1: f64,
    d2: f64,
    /// `e^{αξ}` after the second fine step.
    e2: f64,
    fine1: f64,
    fine2: f64,
    coarse: f64,
}

#[inline]
fn pair_step<R: Rng>(rng: &mut R, alpha: f64, drift: f64, sd: f64, h: f64, e0: f64) -> Pair {
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    let w1: f64 = rng.sample(StandardNormal);
    let w2: f64 = rng.sample(StandardNormal);
    let sh = sd * h.sqrt();
    let sa = sd * (h * h * h / 12.0).sqrt();
    let d1 = drift * h + sh * z1;
    let d2 = drift * h + sh * z2;
    let (a1, a2) = (sa * w1, sa * w2);
    let r1 = (alpha * d1).exp_m1();
    let r2 = (alpha * d2).exp_m1();
    let e1 = e0 * (1.0 + r1);
    let e2 = e1 * (1.0 + r2);
    let rc = r1 + r2 + r1 * r2;
    Pair {
        d1,
        d2,
        e2,
        fine1: segment_from(alpha, e0, d1, r1, h, a1),
        fine2: segment_from(alpha, e1, d2, r2, h, a2),
        coarse: segment_from(alpha, e0, d1 + d2, rc, 2.0 * h, a1 + a2 + 0.5 * h * (d1 - d2)),
    }
}

/// One truncated path of `Σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaPath {
    /// `∫₀^T e^{αξ_s} ds` with the fine scheme.
    pub fine: f64,
    /// The same with coupled coarse steps.
    pub coarse: f64,
    /// `e^{αξ_T}` at the stopping time.
    pub end_factor: f64,
    /// Final `ξ_T`.
    pub xi_end: f64,
    /// True when the horizon was reached before the stopping rule fired.
    pub flagged: bool,
    /// True when the path ended at its exponential kill time.
    pub killed: bool,
}

#[derive(Clone, Copy)]
enum Stop {
    /// Relative tail rule (or the kill time when `q > 0`).
    Tail,
    /// Fixed `ξ`-time.
    At(f64),
}

fn simulate_path(dynm: &Dynamics, cfg: &MCConfig, path: u64, stop: Stop) -> SigmaPath {
    let mut rng = cfg.rng(path);
    let alpha = dynm.alpha;
    let kill = dynm.kill_time(&mut rng);
    let end = match stop {
        Stop::Tail => kill.min(cfg.horizon),
        Stop::At(t) => t.min(kill),
    };
    let use_tail = matches!(stop, Stop::Tail) && dynm.kill_q == 0.0;
    let mut u = 0.0;
    let mut xi = 0.0f64;
    let mut fine = 0.0;
    let mut coarse = 0.0;
    let mut next_jump = dynm.next_jump(&mut rng);
    let hmax = 0.1f64.max(cfg.dt);
    let drift = dynm.drift;
    let sd = dynm.sd;
    let mut flagged = false;
    let mut e = 1.0f64;
    loop {
        if use_tail && fine > 0.0 && e <= cfg.eps_tail * fine {
            break;
        }
        if u >= end {
            if use_tail {
                flagged = true;
            }
            break;
        }
        let target = next_jump.min(end);
        if sd == 0.0 {
            // linear between jumps: exact
            let tau = target - u;
            let inc = segment_integral(alpha, xi, drift * tau, tau, 0.0);
            fine += inc;
            coarse += inc;
            xi += drift * tau;
            u = target;
        } else {
            let ratio = if fine > 0.0 { fine / e } else { 1.0 };
            let h = cfg.dt * ratio.clamp(1.0, hmax / cfg.dt);
            if u + 2.0 * h <= target {
                let p = pair_step(&mut rng, alpha, drift, sd, h, e);
                fine += p.fine1 + p.fine2;
                coarse += p.coarse;
                xi += p.d1 + p.d2;
                e = p.e2;
                u += 2.0 * h;
                continue;
            }
            // remaining piece up to the event, shared by both schemes
            let tau = target - u;
            if tau > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                let w: f64 = rng.sample(StandardNormal);
                let d = drift * tau + sd * tau.sqrt() * z;
                let a = sd * (tau * tau * tau / 12.0).sqrt() * w;
                let inc = segment_integral(alpha, xi, d, tau, a);
                fine += inc;
                coarse += inc;
                xi += d;
            }
            u = target;
        }
        if u >= next_jump && next_jump <= end {
            xi += dynm.jump(&mut rng);
            next_jump = u + dynm.next_jump(&mut rng);
        }
        e = (alpha * xi).exp();
    }
    SigmaPath { fine, coarse, end_factor: (alpha * xi).exp(), xi_end: xi, flagged, killed: kill <= u }
}

/// Simulates one truncated path of `Σ` (path index `path` of the stream).
pub fn simulate_sigma(model: &LevyModel, cfg: &MCConfig, path: u64) -> Result<SigmaPath> {
    cfg.validate()?;
    let h = ExponentHandle::new(model.clone())?;
    select_gamma(&h)?;
    let dynm = Dynamics::new(model, cfg.small_jump_cutoff)?;
    Ok(simulate_path(&dynm, cfg, path, Stop::Tail))
}

/// Completed samples of `Σ` for all paths.
#[derive(Debug, Clone)]
pub struct SigmaSamples {
    /// `Σ_T + e^{αξ_T} Σ_T^{π(i)}` with partner `π(i) = i+1 mod N`.
    pub fine: Vec<f64>,
    pub coarse: Vec<f64>,
    /// Fine sample completed to the second level with `π(π(i))`.
    pub second: Vec<f64>,
    pub flagged: Vec<bool>,
}

pub fn sample_sigma(model: &LevyModel, cfg: &MCConfig) -> Result<SigmaSamples> {
    cfg.validate()?;
    let h = ExponentHandle::new(model.clone())?;
    select_gamma(&h)?;
    let dynm = Dynamics::new(model, cfg.small_jump_cutoff)?;
    let paths: Vec<SigmaPath> = (0..cfg.paths as u64)
        .into_par_iter()
        .map(|i| simulate_path(&dynm, cfg, i, Stop::Tail))
        .collect();
    let n = paths.len();
    let killed = model.kill_q > 0.0;
    let mut fine = Vec::with_capacity(n);
    let mut coarse = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n);
    for i in 0..n {
        let p = &paths[i];
        if killed {
            fine.push(p.fine);
            coarse.push(p.coarse);
            second.push(p.fine);
            continue;
        }
        let j = (i + 1) % n;
        let k = (i + 2) % n;
        let pj = &paths[j];
        fine.push(p.fine + p.end_factor * pj.fine);
        coarse.push(p.coarse + p.end_factor * pj.coarse);
        second.push(p.fine + p.end_factor * (pj.fine + pj.end_factor * paths[k].fine));
    }
    Ok(SigmaSamples { fine, coarse, second, flagged: paths.iter().map(|p| p.flagged).collect() })
}

/// `P(T₀ > t)` for the process started at `x`, i.e. `P(x^α Σ > t)`.
pub fn estimate_survival(model: &LevyModel, cfg: &MCConfig, t_grid: &[f64], x: f64) -> Result<Vec<MCEstimate>> {
    cfg.check_ci()?;
    if !(x > 0.0) {
        return Err(Error::Domain(format!("starting point must be positive, got {x}")));
    }
    let s = sample_sigma(model, cfg)?;
    let n = s.fine.len();
    let scale = x.powf(model.alpha);
    let flag_frac = mean_of(s.flagged.iter().copied(), n);
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if t <= 0.0 {
            out.push(MCEstimate { value: 1.0, std_err: 0.0, paths_used: n, truncation_bias_bound: 0.0 });
            continue;
        }
        let p = mean_of(s.fine.iter().map(|&v| scale * v > t), n);
        let pc = mean_of(s.coarse.iter().map(|&v| scale * v > t), n);
        let flips = mean_of(s.fine.iter().zip(&s.second).map(|(&a, &b)| (scale * a > t) != (scale * b > t)), n);
        out.push(MCEstimate::binomial(p, n, (p - pc).abs() + flips + flag_frac));
    }
    Ok(out)
}

/// Pairs of samples for the random affine equation
/// `Σ =d ∫₀¹ e^{αξ_s} ds + e^{αξ₁} Σ'`: the left side from paths
/// `[0, n)`, the right side from paths `[n, 2n)` recombined with independent
/// copies from `[2n, 3n)`.
pub fn affine_samples(model: &LevyModel, cfg: &MCConfig, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    let h = ExponentHandle::new(model.clone())?;
    select_gamma(&h)?;
    let dynm = Dynamics::new(model, cfg.small_jump_cutoff)?;
    let nn = n as u64;
    let full = |range: std::ops::Range<u64>| -> Vec<SigmaPath> {
        range.into_par_iter().map(|i| simulate_path(&dynm, cfg, i, Stop::Tail)).collect()
    };
    let complete = |v: &[SigmaPath]| -> Vec<f64> {
        let m = v.len();
        (0..m)
            .map(|i| {
                if model.kill_q > 0.0 {
                    v[i].fine
                } else {
                    v[i].fine + v[i].end_factor * v[(i + 1) % m].fine
                }
            })
            .collect()
    };
    let lhs = complete(&full(0..nn));
    let heads: Vec<SigmaPath> = (nn..2 * nn)
        .into_par_iter()
        .map(|i| simulate_path(&dynm, cfg, i, Stop::At(1.0)))
        .collect();
    let tails = complete(&full(2 * nn..3 * nn));
    let rhs = heads
        .iter()
        .zip(&tails)
        .map(|(hd, tl)| if hd.killed { hd.fine } else { hd.fine + hd.end_factor * tl })
        .collect();
    Ok((lhs, rhs))
}

/// Two-sample Kolmogorov–Smirnov statistic and its 1% critical value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(|p, q| p.total_cmp(q));
    y.sort_by(|p, q| p.total_cmp(q));
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let (nf, mf) = (n as f64, m as f64);
    let crit = 1.627_624 * ((nf + mf) / (nf * mf)).sqrt();
    (d, crit)
}

#[derive(Debug, Clone, Copy)]
struct ExitPath {
    /// Conditional probability of crossing given the path (fine / coarse).
    fine: f64,
    coarse: f64,
    /// Bound on crossings after truncation, plus 1 if flagged.
    residual: f64,
}

/// `Q_x[T_a^{(λ)} < T₀ ∧ ζ^λ]`: the process started at `x` reaches the
/// moving level `a(1 + χs)^{α̃}` before absorption, `λ < 0`.
///
/// The self-similar path is `X_s = x e^{ξ_{A_s}}` with `s = x^α Σ_{A_s}`;
/// in `ξ`-time the level becomes the barrier
/// `log(a/x) + α̃ log(1 − |χ| x^α Σ_u)`. Between grid points the
/// Brownian-bridge crossing probability is accumulated instead of sampled.
pub fn estimate_exit(model: &LevyModel, cfg: &MCConfig, spec: &ExitSpec) -> Result<MCEstimate> {
    cfg.check_ci()?;
    if !(spec.lambda < 0.0) {
        return Err(Error::Domain("exit simulation covers λ < 0 only".into()));
    }
    let h = ExponentHandle::new(model.clone())?;
    let gamma = select_gamma(&h)?;
    let dynm = Dynamics::new(model, cfg.small_jump_cutoff)?;
    let n = cfg.paths;
    if spec.start_x >= spec.level_a {
        return Ok(MCEstimate { value: 1.0, std_err: 0.0, paths_used: n, truncation_bias_bound: 0.0 });
    }
    let paths: Vec<ExitPath> = (0..n as u64)
        .into_par_iter()
        .map(|i| exit_path(&dynm, cfg, spec, gamma, i))
        .collect();
    let f: Vec<f64> = paths.iter().map(|p| p.fine).collect();
    let c: Vec<f64> = paths.iter().map(|p| p.coarse).collect();
    let r: Vec<f64> = paths.iter().map(|p| p.residual).collect();
    let nf = n as f64;
    let mean = pairwise_sum(&f) / nf;
    let mean_c = pairwise_sum(&c) / nf;
    let sq: Vec<f64> = f.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (nf - 1.0);
    Ok(MCEstimate {
        value: mean,
        std_err: (var / nf).sqrt(),
        paths_used: n,
        truncation_bias_bound: (mean - mean_c).abs() + pairwise_sum(&r) / nf,
    })
}

fn exit_path(dynm: &Dynamics, cfg: &MCConfig, spec: &ExitSpec, gamma: f64, path: u64) -> ExitPath {
    let mut rng = cfg.rng(path);
    let alpha = dynm.alpha;
    let at = 1.0 / alpha;
    let xa = spec.start_x.powf(alpha);
    let k = spec.chi.abs() * xa;
    let l0 = (spec.level_a / spec.start_x).ln();
    // barrier in ξ-space as a function of the accumulated clock
    let barrier = |sig: f64| -> f64 {
        let v = 1.0 - k * sig;
        if v <= 0.0 {
            f64::NEG_INFINITY
        } else {
            l0 + at * v.ln()
        }
    };
    let kill = dynm.kill_time(&mut rng);
    let end = kill.min(cfg.horizon);
    let drift = dynm.drift;
    let sd = dynm.sd;
    let var = sd * sd;
    let hmax = 0.1f64.max(cfg.dt);
    let mut u = 0.0;
    let mut xi = 0.0f64;
    let (mut sf, mut sc) = (0.0f64, 0.0f64);
    // probabilities of not having crossed yet
    let (mut wf, mut wc) = (1.0f64, 1.0f64);
    let mut next_jump = dynm.next_jump(&mut rng);
    let bridge = |d0: f64, d1: f64, h: f64| -> f64 {
        if d0 <= 0.0 || d1 <= 0.0 {
            1.0
        } else if var == 0.0 {
            0.0
        } else {
            let x = 2.0 * d0 * d1 / (var * h);
            if x > 45.0 {
                0.0
            } else {
                (-x).exp()
            }
        }
    };
    let mut e = 1.0f64;
    loop {
        if wf == 0.0 && wc == 0.0 {
            return ExitPath { fine: 1.0, coarse: 1.0, residual: 0.0 };
        }
        if kill.is_infinite() && sf > 0.0 && e <= cfg.eps_tail * sf {
            // later crossings need ξ to climb back to the barrier
            let gap = barrier(sf * (1.0 + 10.0 * cfg.eps_tail)) - xi;
            let res = if gap.is_finite() && gap > 0.0 { (-gamma * gap).exp() } else { 1.0 };
            return ExitPath { fine: 1.0 - wf, coarse: 1.0 - wc, residual: res.min(1.0) };
        }
        if u >= end {
            let res = if kill <= cfg.horizon { 0.0 } else { 1.0 };
            return ExitPath { fine: 1.0 - wf, coarse: 1.0 - wc, residual: res };
        }
        let target = next_jump.min(end);
        if sd == 0.0 {
            // ξ − barrier increases between jumps: test the left limit at the jump
            let tau = target - u;
            let inc = segment_integral(alpha, xi, drift * tau, tau, 0.0);
            sf += inc;
            sc += inc;
            xi += drift * tau;
            u = target;
            if xi >= barrier(sf) {
                wf = 0.0;
            }
            if xi >= barrier(sc) {
                wc = 0.0;
            }
        } else {
            let bf0 = barrier(sf);
            let dist = (bf0 - xi).max(0.0);
            let tail = if sf > 0.0 { sf / e } else { 1.0 };
            let near = dist * dist / (36.0 * var * cfg.dt);
            let h = cfg.dt * tail.min(near).clamp(1.0, hmax / cfg.dt);
            if u + 2.0 * h <= target {
                let p = pair_step(&mut rng, alpha, drift, sd, h, e);
                let x1 = xi + p.d1;
                let x2 = x1 + p.d2;
                let top = xi.max(x1).max(x2);
                let bf2 = barrier(sf + p.fine1 + p.fine2);
                let bc0 = barrier(sc);
                let bc2 = barrier(sc + p.coarse);
                // the barrier only moves down, so its end value bounds the pair
                let far = 22.5 * var * h;
                if bf2 <= top || (bf2 - top) * (bf2 - top) <= far {
                    let bf1 = barrier(sf + p.fine1);
                    wf *= 1.0 - bridge(bf0 - xi, bf1 - x1, h);
                    wf *= 1.0 - bridge(bf1 - x1, bf2 - x2, h);
                }
                if bc2 <= top || (bc2 - top) * (bc2 - top) <= 2.0 * far {
                    wc *= 1.0 - bridge(bc0 - xi, bc2 - x2, 2.0 * h);
                }
                sf += p.fine1 + p.fine2;
                sc += p.coarse;
                xi = x2;
                e = p.e2;
                u += 2.0 * h;
                continue;
            }
            let tau = target - u;
            if tau > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                let w: f64 = rng.sample(StandardNormal);
                let d = drift * tau + sd * tau.sqrt() * z;
                let a = sd * (tau * tau * tau / 12.0).sqrt() * w;
                let b0c = barrier(sc) - xi;
                let inc = segment_integral(alpha, xi, d, tau, a);
                sf += inc;
                sc += inc;
                wf *= 1.0 - bridge(bf0 - xi, barrier(sf) - (xi + d), tau);
                wc *= 1.0 - bridge(b0c, barrier(sc) - (xi + d), tau);
                xi += d;
            }
            u = target;
        }
        if u >= next_jump && next_jump <= end {
            xi += dynm.jump(&mut rng);
            next_jump = u + dynm.next_jump(&mut rng);
        }
        e = (alpha * xi).exp();
    }
}

/// Strictly α-stable variate with skewness 1 and `E[e^{−uY}] = e^{u^α}`
/// (Chambers–Mallows–Stuck).
pub fn stable_positive<R: Rng>(alpha: f64, rng: &mut R) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    let tan = (FRAC_PI_2 * alpha).tan();
    let b = tan.atan() / alpha;
    let s = (1.0 + tan * tan).powf(0.5 / alpha);
    let scale = (-(FRAC_PI_2 * alpha).cos()).powf(1.0 / alpha);
    let v = PI * (rng.gen::<f64>() - 0.5);
    let w: f64 = rng.sample(Exp1);
    let x = s * (alpha * (v + b)).sin() / v.cos().powf(1.0 / alpha)
        * ((v - alpha * (v + b)).cos() / w).powf((1.0 - alpha) / alpha);
    scale * x
}

/// `P(sup_{s≤1} Ẑ_s < x)` on a grid of `x`, with the grid maximum of the
/// path on steps `dt` and a coarse maximum over every other point giving
/// the refinement bias.
pub fn simulate_stable_max(alpha: f64, cfg: &MCConfig, x_grid: &[f64]) -> Result<Vec<MCEstimate>> {
    cfg.check_ci()?;
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::Domain(format!("stable index must lie in (1, 2), got {alpha}")));
    }
    let steps = (1.0 / cfg.dt).round().max(2.0) as usize;
    let step_scale = (1.0 / steps as f64).powf(1.0 / alpha);
    let maxima: Vec<(f64, f64)> = (0..cfg.paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = cfg.rng(i);
            let mut z = 0.0f64;
            let (mut mf, mut mc) = (0.0f64, 0.0f64);
            for k in 1..=steps {
                z += step_scale * stable_positive(alpha, &mut rng);
                mf = mf.max(z);
                if k % 2 == 0 {
                    mc = mc.max(z);
                }
            }
            (mf, mc)
        })
        .collect();
    let n = maxima.len();
    // discrete-maximum error scales like dt^{1/α}
    let factor = 1.0 / (2f64.powf(1.0 / alpha) - 1.0);
    Ok(x_grid
        .iter()
        .map(|&x| {
            let p = mean_of(maxima.iter().map(|m| m.0 < x), n);
            let pc = mean_of(maxima.iter().map(|m| m.1 < x), n);
            MCEstimate::binomial(p, n, factor * (p - pc).abs())
        })
        .collect())
}
