use std::path::Path;
use std::process::Command as Proc;

use ssabsorb::levy::Regime;
use ssabsorb_cli::{parse_config, run, CliError, Command, Overrides};

const SAWTOOTH: &str = r#"
[model]
alpha = 1.0
drift = 1.0
sigma = 0.0

[model.jumps]
type = "exp_mixture"
rates = [0.5]
intensities = [1.0]
"#;

const BESSEL: &str = r#"
[model]
alpha = 1.0
bbar = -1.0
sigma = 4.0

[grid]
start = 0.5
stop = 50.0
count = 32
spacing = "log"
"#;

fn parse(text: &str) -> Result<ssabsorb_cli::RunConfig, CliError> {
    parse_config(text, Path::new("."))
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn sawtooth_parses_as_bounded_variation() {
    let cfg = parse(SAWTOOTH).unwrap();
    let law = ssabsorb::absorption::AbsorptionLaw::new(cfg.model).unwrap();
    match law.regime() {
        Regime::BoundedVariation { b } => assert!((b - 1.0).abs() < 1e-15, "b = {b}"),
        r => panic!("expected bounded variation, got {r:?}"),
    }
}

#[test]
fn negative_sigma_is_rejected_with_line() {
    let text = SAWTOOTH.replace("sigma = 0.0", "sigma = -1.0");
    let err = parse(&text).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let msg = err.to_string();
    assert!(msg.contains("line 5") && msg.contains("model.sigma"), "{msg}");
}

#[test]
fn missing_alpha_is_rejected() {
    let text = SAWTOOTH.replace("alpha = 1.0\n", "");
    let err = parse(&text).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("alpha"), "{err}");
}

#[test]
fn unknown_key_is_rejected() {
    let text = SAWTOOTH.replace("sigma = 0.0", "sigma = 0.0\nsgima = 1.0");
    assert!(parse(&text).is_err());
}

#[test]
fn sawtooth_constants() {
    let cfg = parse(SAWTOOTH).unwrap();
    let out = run(Command::Constants, &cfg, Overrides::default()).unwrap();
    let get = |k: &str| -> String {
        out.lines().find_map(|l| l.strip_prefix(&format!("{k},")).map(str::to_owned)).unwrap()
    };
    let gamma: f64 = get("gamma").parse().unwrap();
    let c: f64 = get("c_gamma").parse().unwrap();
    assert!((gamma - 0.5).abs() < 1e-12);
    assert!((c - 4.0 / std::f64::consts::PI).abs() < 1e-9, "C = {c}");
    assert_eq!(get("regime"), "bounded_variation");
}

#[test]
fn bessel_survival_matches_erf() {
    let cfg = parse(BESSEL).unwrap();
    let out = run(Command::Survival, &cfg, Overrides::default()).unwrap();
    assert!(out.starts_with("t,S,s,method,trunc_order,err_bound\n"));
    let rows = rows(&out);
    assert_eq!(rows.len(), 32);
    for r in rows {
        let t: f64 = r[0].parse().unwrap();
        let s: f64 = r[1].parse().unwrap();
        let want = libm::erf((0.5 / t).sqrt());
        assert!((s - want).abs() < 1e-8, "t={t}: {s} vs {want}");
    }
}

#[test]
fn density_adds_order_column() {
    let text = format!("{BESSEL}\n[density]\nderivatives = 2\n");
    let cfg = parse(&text).unwrap();
    let out = run(Command::Density, &cfg, Overrides::default()).unwrap();
    assert!(out.starts_with("t,S,s,method,trunc_order,err_bound,m\n"));
    assert_eq!(rows(&out).len(), 32 * 3);
}

#[test]
fn missing_grid_is_a_config_error() {
    let cfg = parse(SAWTOOTH).unwrap();
    let err = run(Command::Survival, &cfg, Overrides::default()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn mc_output_is_byte_identical() {
    let text = format!("{SAWTOOTH}\n[grid]\nstart = 0.5\nstop = 5.0\ncount = 3\n\n[mc]\npaths = 2000\nseed = 11\n");
    let cfg = parse(&text).unwrap();
    let a = run(Command::Mc, &cfg, Overrides::default()).unwrap();
    let b = run(Command::Mc, &cfg, Overrides::default()).unwrap();
    assert_eq!(a, b);
    assert!(a.starts_with("t,mc_value,std_err,bias_bound,analytic,z_score\n"));
    let c = run(Command::Mc, &cfg, Overrides { seed: Some(12), paths: None }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("bessel.toml");
    std::fs::write(&good, BESSEL).unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, BESSEL.replace("alpha = 1.0", "alpha = -1.0")).unwrap();
    let out = dir.path().join("s.csv");
    let exe = env!("CARGO_BIN_EXE_ssabsorb");

    let st = Proc::new(exe).args(["survival", "--config"]).arg(&good).arg("--out").arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let first = std::fs::read(&out).unwrap();
    Proc::new(exe).args(["survival", "--config"]).arg(&good).arg("--out").arg(&out).status().unwrap();
    assert_eq!(first, std::fs::read(&out).unwrap());

    let st = Proc::new(exe).args(["survival", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&st.stderr).contains("model.alpha"));

    let st = Proc::new(exe).arg("survival").output().unwrap();
    assert_eq!(st.status.code(), Some(2));
}
