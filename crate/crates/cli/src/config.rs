//! TOML run configuration.
//!
//! ```toml
//! [model]
//! alpha = 1.0
//! drift = 1.0        # or bbar, the Lévy-Khintchine drift
//! sigma = 0.0
//! kill_q = 0.0
//!
//! [model.jumps]
//! type = "exp_mixture"   # "none" | "exp_mixture" | "tabulated"
//! rates = [0.5]
//! intensities = [1.0]
//! # file = "nu.csv" and tail_rate = 2.0 for "tabulated"
//!
//! [grid]
//! start = 0.5
//! stop = 50.0
//! count = 32
//! spacing = "log"
//!
//! [mc]
//! paths = 200000
//! dt = 1e-4
//! seed = 7
//! ```

use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use ssabsorb::levy::{ExpTerm, JumpMeasure, LevyModel, TabulatedDensity};
use ssabsorb::mc::MCConfig;
use toml::Spanned;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let n = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    return self.stop;
                }
                let w = i as f64 / n;
                match self.spacing {
                    Spacing::Linear => self.start + (self.stop - self.start) * w,
                    Spacing::Log => (self.start.ln() + (self.stop.ln() - self.start.ln()) * w).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub series_rel: f64,
    pub series_max_terms: usize,
    pub cancellation_limit: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { series_rel: 1e-13, series_max_terms: 100_000, cancellation_limit: 1e12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitParams {
    pub lambda: f64,
    pub level_a: f64,
    pub start_x: f64,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: LevyModel,
    pub grid: Option<Grid>,
    pub tolerances: Tolerances,
    pub mc: Option<MCConfig>,
    pub exit: Option<ExitParams>,
    /// Mellin exponents for the `exit` command.
    pub exit_rho: Vec<f64>,
    /// Highest derivative order for the `density` command.
    pub derivatives: usize,
    /// Starting point for the `laplace` command.
    pub laplace_x: f64,
    pub output_path: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: Spanned<RawModel>,
    grid: Option<RawGrid>,
    tolerances: Option<RawTolerances>,
    mc: Option<RawMc>,
    exit: Option<RawExit>,
    density: Option<RawDensity>,
    laplace: Option<RawLaplace>,
    output: Option<RawOutput>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    alpha: Spanned<f64>,
    bbar: Option<Spanned<f64>>,
    drift: Option<Spanned<f64>>,
    #[serde(default)]
    sigma: Option<Spanned<f64>>,
    #[serde(default)]
    kill_q: Option<Spanned<f64>>,
    jumps: Option<Spanned<RawJumps>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJumps {
    #[serde(rename = "type")]
    kind: Spanned<String>,
    rates: Option<Spanned<Vec<f64>>>,
    intensities: Option<Spanned<Vec<f64>>>,
    file: Option<Spanned<String>>,
    tail_rate: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    start: Spanned<f64>,
    stop: Spanned<f64>,
    count: Spanned<i64>,
    spacing: Option<Spanned<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    series_rel: Option<Spanned<f64>>,
    series_max_terms: Option<Spanned<i64>>,
    cancellation_limit: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMc {
    paths: Option<Spanned<i64>>,
    dt: Option<Spanned<f64>>,
    horizon: Option<Spanned<f64>>,
    seed: Option<Spanned<i64>>,
    small_jump_cutoff: Option<Spanned<f64>>,
    eps_tail: Option<Spanned<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExit {
    lambda: Spanned<f64>,
    level_a: Spanned<f64>,
    start_x: Spanned<f64>,
    rho: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDensity {
    derivatives: Spanned<i64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLaplace {
    x: Spanned<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: String,
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn line(&self, span: Range<usize>) -> usize {
        self.text[..span.start.min(self.text.len())].matches('\n').count() + 1
    }

    fn err<T>(&self, span: Range<usize>, key: &str, constraint: &str) -> Result<T, CliError> {
        Err(CliError::Config(format!("line {}: `{key}` {constraint}", self.line(span))))
    }

    fn check(&self, v: &Spanned<f64>, key: &str, ok: bool, constraint: &str) -> Result<f64, CliError> {
        if ok && v.get_ref().is_finite() {
            Ok(*v.get_ref())
        } else {
            self.err(v.span(), key, &format!("{constraint}, got {}", v.get_ref()))
        }
    }

    fn positive(&self, v: &Spanned<f64>, key: &str) -> Result<f64, CliError> {
        self.check(v, key, *v.get_ref() > 0.0, "must be > 0")
    }

    fn count(&self, v: &Spanned<i64>, key: &str, min: i64) -> Result<usize, CliError> {
        if *v.get_ref() >= min {
            Ok(*v.get_ref() as usize)
        } else {
            self.err(v.span(), key, &format!("must be >= {min}, got {}", v.get_ref()))
        }
    }
}

/// Parses and validates a configuration. Relative tabulated-measure paths are
/// resolved against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<RunConfig, CliError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    let cx = Ctx { text };
    let model_span = raw.model.span();
    let m = raw.model.into_inner();

    let alpha = cx.positive(&m.alpha, "model.alpha")?;
    let sigma = match &m.sigma {
        Some(s) => cx.check(s, "model.sigma", *s.get_ref() >= 0.0, "must be >= 0")?,
        None => 0.0,
    };
    let kill_q = match &m.kill_q {
        Some(q) => cx.check(q, "model.kill_q", *q.get_ref() >= 0.0, "must be >= 0")?,
        None => 0.0,
    };
    let measure = match &m.jumps {
        None => JumpMeasure::None,
        Some(j) => parse_jumps(&cx, j, base_dir)?,
    };
    let model = match (&m.bbar, &m.drift) {
        (Some(b), None) => {
            let v = cx.check(b, "model.bbar", true, "must be finite")?;
            LevyModel::new(v, sigma, measure, kill_q, alpha).map_err(|e| model_error(&cx, b.span(), e))?
        }
        (None, Some(d)) => {
            let v = cx.check(d, "model.drift", true, "must be finite")?;
            LevyModel::with_drift(v, sigma, measure, kill_q, alpha).map_err(|e| model_error(&cx, d.span(), e))?
        }
        (Some(b), Some(_)) => return cx.err(b.span(), "model.bbar", "conflicts with `model.drift`; give exactly one"),
        (None, None) => return cx.err(model_span, "model", "needs one of `bbar` or `drift`"),
    };

    let grid = match raw.grid {
        None => None,
        Some(g) => {
            let start = cx.positive(&g.start, "grid.start")?;
            let stop = cx.check(&g.stop, "grid.stop", *g.stop.get_ref() >= start, "must be >= grid.start")?;
            let count = cx.count(&g.count, "grid.count", 1)?;
            let spacing = match &g.spacing {
                None => Spacing::Log,
                Some(s) => match s.get_ref().as_str() {
                    "log" => Spacing::Log,
                    "linear" => Spacing::Linear,
                    other => return cx.err(s.span(), "grid.spacing", &format!("must be \"linear\" or \"log\", got \"{other}\"")),
                },
            };
            Some(Grid { start, stop, count, spacing })
        }
    };

    let mut tolerances = Tolerances::default();
    if let Some(t) = raw.tolerances {
        if let Some(v) = &t.series_rel {
            tolerances.series_rel = cx.positive(v, "tolerances.series_rel")?;
        }
        if let Some(v) = &t.series_max_terms {
            tolerances.series_max_terms = cx.count(v, "tolerances.series_max_terms", 1)?;
        }
        if let Some(v) = &t.cancellation_limit {
            tolerances.cancellation_limit =
                cx.check(v, "tolerances.cancellation_limit", *v.get_ref() > 1.0, "must be > 1")?;
        }
    }

    let mc = match raw.mc {
        None => None,
        Some(r) => {
            let mut c = MCConfig::default();
            if let Some(v) = &r.paths {
                c.paths = cx.count(v, "mc.paths", 1)?;
            }
            if let Some(v) = &r.dt {
                c.dt = cx.check(v, "mc.dt", *v.get_ref() > 0.0 && *v.get_ref() <= 1e-2, "must lie in (0, 1e-2]")?;
            }
            if let Some(v) = &r.horizon {
                c.horizon = cx.positive(v, "mc.horizon")?;
            }
            if let Some(v) = &r.seed {
                c.seed = cx.count(v, "mc.seed", 0)? as u64;
            }
            if let Some(v) = &r.small_jump_cutoff {
                c.small_jump_cutoff = cx.positive(v, "mc.small_jump_cutoff")?;
            }
            if let Some(v) = &r.eps_tail {
                c.eps_tail = cx.check(v, "mc.eps_tail", *v.get_ref() > 0.0 && *v.get_ref() < 1.0, "must lie in (0, 1)")?;
            }
            Some(c)
        }
    };

    let (exit, exit_rho) = match raw.exit {
        None => (None, vec![0.0]),
        Some(e) => {
            let lambda = cx.check(&e.lambda, "exit.lambda", true, "must be finite")?;
            let level_a = cx.positive(&e.level_a, "exit.level_a")?;
            let start_x = cx.check(
                &e.start_x,
                "exit.start_x",
                *e.start_x.get_ref() > 0.0 && *e.start_x.get_ref() <= level_a,
                "must lie in (0, exit.level_a]",
            )?;
            (Some(ExitParams { lambda, level_a, start_x }), e.rho.unwrap_or_else(|| vec![0.0]))
        }
    };
    let derivatives = match raw.density {
        None => 0,
        Some(d) => cx.count(&d.derivatives, "density.derivatives", 0)?,
    };
    let laplace_x = match raw.laplace {
        None => 1.0,
        Some(l) => cx.positive(&l.x, "laplace.x")?,
    };
    Ok(RunConfig {
        model,
        grid,
        tolerances,
        mc,
        exit,
        exit_rho,
        derivatives,
        laplace_x,
        output_path: raw.output.map(|o| base_dir.join(o.path)),
    })
}

fn model_error(cx: &Ctx, span: Range<usize>, e: ssabsorb::Error) -> CliError {
    CliError::Config(format!("line {}: invalid model: {e}", cx.line(span)))
}

fn parse_jumps(cx: &Ctx, j: &Spanned<RawJumps>, base_dir: &Path) -> Result<JumpMeasure, CliError> {
    let jr = j.get_ref();
    match jr.kind.get_ref().as_str() {
        "none" => Ok(JumpMeasure::None),
        "exp_mixture" => {
            let (Some(rates), Some(ints)) = (&jr.rates, &jr.intensities) else {
                return cx.err(j.span(), "model.jumps", "of type exp_mixture needs `rates` and `intensities`");
            };
            if rates.get_ref().len() != ints.get_ref().len() || rates.get_ref().is_empty() {
                return cx.err(ints.span(), "model.jumps.intensities", "must be non-empty and as long as `rates`");
            }
            if rates.get_ref().iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                return cx.err(rates.span(), "model.jumps.rates", "must all be > 0");
            }
            if ints.get_ref().iter().any(|r| !(*r > 0.0 && r.is_finite())) {
                return cx.err(ints.span(), "model.jumps.intensities", "must all be > 0");
            }
            Ok(JumpMeasure::ExpMixture(
                rates
                    .get_ref()
                    .iter()
                    .zip(ints.get_ref())
                    .map(|(&rate, &intensity)| ExpTerm { rate, intensity })
                    .collect(),
            ))
        }
        "tabulated" => {
            let (Some(file), Some(tail)) = (&jr.file, &jr.tail_rate) else {
                return cx.err(j.span(), "model.jumps", "of type tabulated needs `file` and `tail_rate`");
            };
            let kappa = cx.positive(tail, "model.jumps.tail_rate")?;
            let path = base_dir.join(file.get_ref());
            let body = std::fs::read_to_string(&path).map_err(|e| {
                CliError::Config(format!("line {}: cannot read `{}`: {e}", cx.line(file.span()), path.display()))
            })?;
            let points = read_table(&body).map_err(|m| CliError::Config(format!("{}: {m}", path.display())))?;
            TabulatedDensity::new(points, kappa)
                .map(JumpMeasure::Tabulated)
                .map_err(|e| model_error(cx, file.span(), e))
        }
        other => cx.err(
            jr.kind.span(),
            "model.jumps.type",
            &format!("must be \"none\", \"exp_mixture\" or \"tabulated\", got \"{other}\""),
        ),
    }
}

/// `r,density` rows; blank lines, `#` comments and a header are skipped.
fn read_table(body: &str) -> Result<Vec<(f64, f64)>, String> {
    let mut out = Vec::new();
    for (i, line) in body.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split(',').map(str::trim);
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(format!("line {}: expected two comma-separated columns", i + 1));
        };
        match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(r), Ok(d)) => out.push((r, d)),
            _ if out.is_empty() => continue,
            _ => return Err(format!("line {}: cannot parse `{line}`", i + 1)),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        let g = Grid { start: 0.5, stop: 50.0, count: 3, spacing: Spacing::Log };
        let p = g.points();
        assert_eq!(p[0], 0.5);
        assert!((p[1] - 5.0).abs() < 1e-14 && (p[2] - 50.0).abs() < 1e-13);
        let g = Grid { start: 1.0, stop: 2.0, count: 1, spacing: Spacing::Linear };
        assert_eq!(g.points(), vec![1.0]);
    }

    #[test]
    fn table_skips_header_and_comments() {
        let t = read_table("r,density\n# note\n-0.5, 1.0\n-1.0,0.5\n").unwrap();
        assert_eq!(t, vec![(-0.5, 1.0), (-1.0, 0.5)]);
        assert!(read_table("r,density\n-0.5\n").is_err());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "[model]\nalpha = 1.0\nbbar = 0.5\n\n[grid]\nstart = -1.0\nstop = 2.0\ncount = 4\n";
        let msg = parse_config(text, Path::new(".")).unwrap_err().to_string();
        assert!(msg.contains("line 6") && msg.contains("grid.start"), "{msg}");
    }
}
