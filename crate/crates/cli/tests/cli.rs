use std::path::Path;
use std::process::{Command, Output};

use ridegame::wardrop::we_idp;
use ridegame::{MarketParams, PriceModel, QosMetric};
use ridegame_cli::ScenarioConfig;
use tempfile::TempDir;

fn ridegame(args: &[&str]) -> Output {
    ridegame_env(args, &[])
}

fn ridegame_env(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ridegame"));
    cmd.args(args).env_remove("RIDEGAME_OUT_DIR").env_remove("RIDEGAME_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

const FIG5: &str = "[market]\nLambda = 2.0\neta = 1.0\n";

#[test]
fn we_symmetric_and_band_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "we.toml", &format!("{FIG5}[we]\nprices = [[5.0, 5.0], [6.0, 3.0], [3.0, 6.5]]\n"));
    let out = stdout(&ridegame(&["we", "--config", &cfg]));
    let (header, rows) = csv_rows(&out);
    assert_eq!(header, ["phi1", "phi2", "lambda1", "lambda2", "gap", "m1", "m2"]);
    assert_eq!(rows[0][2], rows[0][3]);
    let params = MarketParams::with_rates(2.0, 1.0);
    let model = PriceModel::quadratic(0.1, 9.0);
    for row in &rows[1..] {
        let s = we_idp(&params, &model, QosMetric::Blocking, num(&row[0]), num(&row[1]));
        assert!((num(&row[2]) - s.lambda1).abs() < 1e-10);
        assert!((num(&row[3]) - s.lambda2).abs() < 1e-10);
    }
}

#[test]
fn we_with_beta_sweep() {
    let dir = TempDir::new().unwrap();
    let text = format!("{FIG5}[sweep]\nvariable = \"beta\"\nstart = 0.1\nstop = 0.5\nsteps = 3\n[we]\nprices = [[4.0, 6.0]]\n");
    let cfg = write(&dir, "we.toml", &text);
    let (header, rows) = csv_rows(&stdout(&ridegame(&["we", "--config", &cfg])));
    assert_eq!(header[0], "beta");
    assert_eq!(rows.len(), 3);
    for row in &rows {
        let total = num(&row[3]) + num(&row[4]);
        assert!((total - 2.0).abs() < 1e-9);
    }
}

#[test]
fn malformed_config_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "bad.toml", "[market\nLambda = 1");
    let o = ridegame(&["we", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config error"));

    let cfg = write(&dir, "neg.toml", "[market]\nLambda = -1.0\neta = 1.0\n");
    assert_eq!(ridegame(&["we", "--config", &cfg]).status.code(), Some(2));

    let cfg = write(&dir, "unknown.toml", "colour = 3\n");
    assert_eq!(ridegame(&["we", "--config", &cfg]).status.code(), Some(2));

    let cfg = write(&dir, "table.toml", "[model_table]\npath = \"missing.csv\"\nphi_h = 9.0\n");
    assert_eq!(ridegame(&["compare", "--config", &cfg]).status.code(), Some(2));

    assert_eq!(ridegame(&["we", "--config", "/nonexistent/file.toml"]).status.code(), Some(2));
}

#[test]
fn sweep_rho_matches_closed_forms() {
    let (header, rows) = csv_rows(&stdout(&ridegame(&["sweep-rho"])));
    assert_eq!(header.len(), 11);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let row = rows.iter().find(|r| (num(&r[0]) - 0.5).abs() < 1e-12).expect("rho = 0.5 row");
    // Λ = 1, e = 0.5, a = 0.1: φ_R = √((1 − ρ)/3)/a and φ_L = m(φ_R)/e.
    let phi_r = (0.5f64 / 3.0).sqrt() / 0.1;
    let m_r = (1.0 - (0.1 * phi_r).powi(2) - 0.5) * phi_r;
    assert!((num(&row[col("duopoly_b_price_high")]) - phi_r).abs() < 1e-6);
    assert!((num(&row[col("duopoly_b_price_low")]) - m_r / 0.5).abs() < 1e-6);
    assert!((num(&row[col("duopoly_b_payoff")]) - m_r).abs() < 1e-6);

    let mut prev = 0.0;
    for r in &rows {
        let rho = num(&r[0]);
        if (rho - 1.0).abs() < 1e-9 {
            assert!(num(&r[col("duopoly_b_payoff")]) < 1e-6);
        } else if rho > 1.0 {
            assert_eq!(num(&r[col("duopoly_b_price_high")]), 0.0);
            assert_eq!(num(&r[col("duopoly_b_payoff")]), 0.0);
            assert_eq!(r[col("regime")], "saturated");
        }
        let pay = num(&r[col("monopoly_payoff")]);
        assert!(pay >= prev - 1e-9, "monopoly payoff fell at rho = {rho}");
        prev = pay;
    }
    let last = num(&rows[rows.len() - 1][col("monopoly_payoff")]);
    let before = num(&rows[rows.len() - 2][col("monopoly_payoff")]);
    assert_eq!(last, before, "monopoly payoff saturates");
}

#[test]
fn sweep_rho_rejects_beta_sweep() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "s.toml", "[sweep]\nvariable = \"beta\"\nstart = 0.0\nstop = 1.0\nsteps = 3\n");
    assert_eq!(ridegame(&["sweep-rho", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn equilibria_on_mixed_regime() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "f5.toml", FIG5);
    let v: serde_json::Value = serde_json::from_str(&stdout(&ridegame(&["equilibria", "--config", &cfg]))).unwrap();
    assert_eq!(v["duopoly_b"]["equilibrium"]["kind"], "MixedNE");
    let s = &v["duopoly_b"]["equilibrium"]["strategy"];
    assert!((s["phi_l"].as_f64().unwrap() - 2.7217).abs() < 1e-3);
    assert!((s["phi_r"].as_f64().unwrap() - 4.0825).abs() < 1e-3);
    for cond in ["stability", "cyclicity", "minimality"] {
        assert_eq!(v["ec"][cond]["passed"], true, "{cond}");
    }
}

#[test]
fn compare_dominance_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "f5.toml", FIG5);
    let v: serde_json::Value =
        serde_json::from_str(&stdout(&ridegame(&["compare", "--config", &cfg, "--format", "json"]))).unwrap();
    for flag in ["price_b_le_monopoly", "monopoly_le_price_u", "payoff_b_le_monopoly", "payoff_u_le_monopoly"] {
        assert_eq!(v["dominance"][flag], true, "{flag}");
    }
}

#[test]
fn simulate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "sim.toml", "[market]\nLambda = 2.0\neta = 0.5\np = 0.5\nbeta = 1.0\n[simulate]\nphi = 5.0\nevents = 50000\n");
    let a = stdout(&ridegame(&["simulate", "--config", &cfg, "--seed", "42"]));
    let b = stdout(&ridegame(&["simulate", "--config", &cfg, "--seed", "42"]));
    let c = stdout(&ridegame(&["simulate", "--config", &cfg, "--seed", "43"]));
    assert_eq!(a, b);
    assert_ne!(a, c);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["seed"], 42);
    assert_eq!(v["events"], 50000);
}

#[test]
fn config_echo_round_trips() {
    let dir = TempDir::new().unwrap();
    let text = "seed = 3\nmetric = \"delay\"\n[market]\nLambda = 2.0\neta = 1.0\nbeta = 0.01\nalpha = 0.05\n\
                [model]\nfamily = \"linear\"\nslope = 0.1\nphi_h = 9.0\n\
                [sweep]\nvariable = \"rho\"\nstart = 0.1\nstop = 0.9\nsteps = 5\n\
                [simulate]\nphi = 4.0\ntime = 100.0\n[equilibria]\neps_ec = 0.2\neps_ec_beta = 0.001\n";
    let cfg_path = write(&dir, "rt.toml", text);
    let o = ridegame(&["compare", "--config", &cfg_path, "--seed", "9", "--echo-config"]);
    assert!(o.status.success());
    let echoed = ScenarioConfig::from_toml(&String::from_utf8(o.stderr).unwrap()).unwrap();
    let mut expected = ScenarioConfig::load(Path::new(&cfg_path)).unwrap();
    expected.seed = 9;
    assert_eq!(echoed, expected);
    let again = ScenarioConfig::from_toml(&echoed.to_toml().unwrap()).unwrap();
    assert_eq!(again, echoed);

    let defaults = ScenarioConfig::default();
    assert_eq!(ScenarioConfig::from_toml(&defaults.to_toml().unwrap()).unwrap(), defaults);
    assert_eq!(ScenarioConfig::from_toml("").unwrap(), defaults);
}

#[test]
fn regime_failure_exits_3() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "sqrt.toml", "[model]\nfamily = \"sqrt\"\nscale = 9.0\nphi_h = 9.0\n");
    let o = ridegame(&["validate-model", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(!v["checks"].as_array().unwrap().is_empty());
    assert!(ridegame(&["validate-model"]).status.success());

    // Mixed-regime verification requested outside the mixed regime.
    let cfg = write(&dir, "br.toml", "[market]\nLambda = 2.0\neta = 1.0\n[br]\niters = 2\nburn_in = 2\n");
    assert_eq!(ridegame(&["br", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn output_locations_and_tables() {
    let dir = TempDir::new().unwrap();
    let table = write(&dir, "f.csv", "phi,f\n0,1\n3,0.9\n6,0.6\n9,0.1\n");
    let cfg = write(&dir, "t.toml", &format!("[model_table]\npath = \"{table}\"\nphi_h = 9.0\n"));
    let o = ridegame_env(&["compare", "--config", &cfg], &[("RIDEGAME_OUT_DIR", dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let written = std::fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    assert!(written.starts_with("market,price_low,price_high,payoff\n"));

    let out = dir.path().join("nested/br.json");
    let o = ridegame(&["br", "--out", out.to_str().unwrap(), "--format", "json", "--threads", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!(v["classification"]["kind"].is_string());
}

#[test]
fn csv_floats_use_twelve_significant_digits() {
    let (_, rows) = csv_rows(&stdout(&ridegame(&["compare"])));
    let price = &rows[0][1];
    let digits = price.chars().filter(|c| c.is_ascii_digit()).count();
    assert_eq!(digits, 12, "{price}");
}
