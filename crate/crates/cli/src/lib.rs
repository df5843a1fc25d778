//! Batch front end: parse a run configuration, evaluate, write CSV.

pub mod config;

use std::fmt::Write as _;

use ssabsorb::absorption::{AbsorptionLaw, ExitMode, ExitSpec};
use ssabsorb::levy::Regime;
use ssabsorb::mc::{self, MCConfig};
use ssabsorb::validation::{self, Options};

pub use config::{parse_config, Grid, RunConfig, Spacing};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric error: {0}")]
    Numeric(#[from] ssabsorb::Error),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Validation(_) => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Constants,
    Survival,
    Density,
    Laplace,
    Exit,
    Mc,
    Validate,
}

/// Command-line overrides of the configuration.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
}

/// Shortest representation that round-trips.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

fn law(cfg: &RunConfig) -> Result<AbsorptionLaw, CliError> {
    let mut law = AbsorptionLaw::new(cfg.model.clone())?;
    let t = &cfg.tolerances;
    law.tilted.config.eps_rel = t.series_rel;
    law.tilted.config.n_max = t.series_max_terms;
    law.tilted.config.cancellation_limit = t.cancellation_limit;
    Ok(law)
}

fn grid(cfg: &RunConfig, what: &str) -> Result<Vec<f64>, CliError> {
    cfg.grid
        .map(|g| g.points())
        .ok_or_else(|| CliError::Config(format!("the {what} command needs a [grid] section")))
}

fn mc_config(cfg: &RunConfig, ov: Overrides) -> MCConfig {
    let mut c = cfg.mc.unwrap_or_default();
    if let Some(s) = ov.seed {
        c.seed = s;
    }
    if let Some(p) = ov.paths {
        c.paths = p;
    }
    c
}

/// Runs an analytic or Monte Carlo command and returns its CSV output.
pub fn run(cmd: Command, cfg: &RunConfig, ov: Overrides) -> Result<String, CliError> {
    let mut out = String::new();
    match cmd {
        Command::Constants => {
            let law = law(cfg)?;
            let h = &law.base;
            out.push_str("quantity,value\n");
            if cfg.model.kill_q > 0.0 {
                writeln!(out, "phi_q,{}", num(law.gamma)).unwrap();
            } else {
                writeln!(out, "theta,{}", num(law.gamma)).unwrap();
            }
            writeln!(out, "gamma,{}", num(law.gamma)).unwrap();
            writeln!(out, "alpha_tilde_gamma,{}", num(law.alpha_tilde_gamma)).unwrap();
            writeln!(out, "c_gamma,{}", num(law.c_gamma)).unwrap();
            match h.regime {
                Regime::BoundedVariation { b } => {
                    out.push_str("regime,bounded_variation\n");
                    writeln!(out, "b,{}", num(b)).unwrap();
                }
                Regime::UnboundedVariation => out.push_str("regime,unbounded_variation\n"),
            }
        }
        Command::Survival | Command::Density => {
            let law = law(cfg)?;
            let ms = if cmd == Command::Density { cfg.derivatives } else { 0 };
            out.push_str("t,S,s,method,trunc_order,err_bound");
            out.push_str(if cmd == Command::Density { ",m\n" } else { "\n" });
            for t in grid(cfg, "survival/density")? {
                let s = law.survival_s(t)?;
                for m in 0..=ms {
                    let d = law.density_s(t, m)?;
                    let err = s.err_bound.max(d.err_bound);
                    write!(
                        out,
                        "{},{},{},{},{},{}",
                        num(t),
                        num(s.value),
                        num(d.value),
                        s.method.as_str(),
                        s.trunc_order.max(d.trunc_order),
                        num(err)
                    )
                    .unwrap();
                    if cmd == Command::Density {
                        write!(out, ",{m}").unwrap();
                    }
                    out.push('\n');
                }
            }
        }
        Command::Laplace => {
            let law = law(cfg)?;
            out.push_str("r,x,laplace\n");
            for r in grid(cfg, "laplace")? {
                let v = law.laplace_n(r, cfg.laplace_x)?;
                writeln!(out, "{},{},{}", num(r), num(cfg.laplace_x), num(v)).unwrap();
            }
        }
        Command::Exit => {
            let law = law(cfg)?;
            let e = cfg
                .exit
                .ok_or_else(|| CliError::Config("the exit command needs an [exit] section".into()))?;
            let spec = ExitSpec::new(e.lambda, cfg.model.alpha, e.level_a, e.start_x)?;
            out.push_str("lambda,a,x,rho,tilted,absorbed\n");
            for &rho in &cfg.exit_rho {
                let tilted = law.exit_mellin(&spec, rho, ExitMode::Tilted)?;
                let absorbed = law.exit_mellin(&spec, rho, ExitMode::Absorbed)?;
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    num(e.lambda),
                    num(e.level_a),
                    num(e.start_x),
                    num(rho),
                    num(tilted),
                    num(absorbed)
                )
                .unwrap();
            }
        }
        Command::Mc => {
            let ts = grid(cfg, "mc")?;
            let mcfg = mc_config(cfg, ov);
            let law = law(cfg)?;
            let est = mc::estimate_survival(&cfg.model, &mcfg, &ts, 1.0)?;
            out.push_str("t,mc_value,std_err,bias_bound,analytic,z_score\n");
            for (&t, e) in ts.iter().zip(&est) {
                let a = law.survival_s(t)?.value;
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    num(t),
                    num(e.value),
                    num(e.std_err),
                    num(e.truncation_bias_bound),
                    num(a),
                    num(e.z_score(a))
                )
                .unwrap();
            }
        }
        Command::Validate => unreachable!("validate runs through `validate`"),
    }
    Ok(out)
}

/// Runs the acceptance criteria; the text lists one PASS/FAIL line each.
pub fn validate(ov: Overrides, only: Option<u8>) -> (bool, String) {
    let mut opts = Options::default();
    if let Some(s) = ov.seed {
        opts.mc.seed = s;
    }
    if let Some(p) = ov.paths {
        opts.mc.paths = p;
    }
    let outcomes = match only {
        Some(id) => vec![validation::run(id, &opts)],
        None => validation::run_all(&opts),
    };
    let ok = outcomes.iter().all(|o| o.passed);
    let text = outcomes.iter().map(|o| format!("{o}\n")).collect();
    (ok, text)
}
