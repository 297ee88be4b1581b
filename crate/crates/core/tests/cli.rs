//! The command line driver on small configurations.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

use serde_json::{json, Value};

struct Run {
    code: i32,
    out: PathBuf,
    _dir: tempfile::TempDir,
}

impl Run {
    fn summary(&self) -> Value {
        serde_json::from_str(&fs::read_to_string(self.out.join("summary.json")).unwrap()).unwrap()
    }

    fn result(&self, key: &str) -> f64 {
        self.summary()["results"][key].as_f64().unwrap()
    }

    /// Rows of a CSV table, header checked.
    fn table(&self, name: &str, header: &str) -> Vec<Vec<String>> {
        let text = fs::read_to_string(self.out.join(format!("{name}.csv"))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), header);
        lines.map(|l| l.split(',').map(str::to_string).collect()).collect()
    }

    fn column(&self, name: &str, header: &str, col: usize) -> Vec<f64> {
        self.table(name, header).iter().map(|r| r[col].parse().unwrap()).collect()
    }
}

fn run(cmd: &str, config: Value) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    fs::write(&path, config.to_string()).unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_germ-reconstruct"))
        .args([cmd, "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    Run { code: status.code().unwrap(), out, _dir: dir }
}

/// Grid `J = 14` with four levels, small dictionaries and panels.
fn base(gamma: f64) -> Value {
    json!({
        "grid": {"half_length": 8, "level": 14},
        "reconstruction": {
            "n0": 0, "n_max": 4, "path": "positive",
            "norm": {
                "exponents": {"alpha": 0.0, "beta": 0.0, "gamma": gamma, "ordered": true},
                "p": "inf", "q": "inf", "q1": "inf", "epsilon": 1.0,
                "window": {"lo": -0.5, "hi": 0.5}, "n_max": 4, "points_per_annulus": 8, "r": 2,
                "dictionary": {"r": 2, "s": -1, "size": 4, "seed": 7}, "x_resolution": 4
            }
        },
        "panel": {"size": 5}
    })
}

fn with(mut v: Value, key: &str, value: Value) -> Value {
    v[key] = value;
    v
}

#[test]
fn tweak_check_passes_and_rejects_large_scales() {
    let r = run("tweak-check", with(base(1.0), "tweak", json!({"r": 1, "cases": 5, "telescoping_levels": 3})));
    assert_eq!(r.code, 0);
    let rows = r.table("checks", "check_name,value,tolerance,pass");
    assert!(rows.iter().all(|row| row[3] == "true"));
    assert!(rows.iter().any(|row| row[0] == "moment_0"));
    let r = run("tweak-check", with(base(1.0), "tweak", json!({"r": 1, "scales": [0.6]})));
    assert_eq!(r.code, 2);
}

#[test]
fn coherence_examples() {
    let c = with(base(1.0), "germ", json!({"kind": "constant", "signal": {"kind": "trig", "frequency": 2.0}}));
    let r = run("coherence", c);
    assert_eq!(r.code, 0);
    assert_eq!(r.result("coherence"), 0.0);

    let mut m = with(base(1.0), "germ", json!({"kind": "monomial"}));
    m["reconstruction"]["norm"]["exponents"]["beta"] = json!(1.0);
    let r = run("coherence", m);
    assert_eq!(r.code, 0);
    let value = r.result("coherence");
    assert!(value > 0.9 && value <= 1.0, "{value}");

    // F_{x+h} - F_x = 2h(z - x) - h^2 for the Taylor germ of z^2.
    let mut t = with(
        base(1.5),
        "germ",
        json!({"kind": "taylor", "signal": {"kind": "poly", "coefficients": [0.0, 0.0, 1.0]}, "beta": 1.5}),
    );
    t["grid"]["level"] = json!(16);
    t["reconstruction"]["norm"]["n_max"] = json!(3);
    let r = run("coherence", t);
    assert_eq!(r.code, 0);
    for row in r.table("f_table", "n,h,f_value") {
        let n: i32 = row[0].parse().unwrap();
        let h: f64 = row[1].parse().unwrap();
        let f: f64 = row[2].parse().unwrap();
        let expected = h * h / ((-n as f64).exp2() + h.abs()).powf(1.5);
        assert!((f - expected).abs() <= 1e-6, "n {n} h {h}: {f} vs {expected}");
    }
}

#[test]
fn reconstruct_examples() {
    let r = run("reconstruct", with(base(1.0), "germ", json!({"kind": "zero"})));
    assert_eq!(r.code, 0);
    for v in r.column("bound", "n,value,unnormalized", 1) {
        assert_eq!(v, 0.0);
    }
    for v in r.column("series", "k,u_prime,u_second", 1) {
        assert_eq!(v, 0.0);
    }

    let mut m = with(base(1.0), "germ", json!({"kind": "monomial"}));
    m["reconstruction"]["norm"]["exponents"]["beta"] = json!(1.0);
    let r = run("reconstruct", m);
    assert_eq!(r.code, 0);
    assert!((r.result("slope") + 1.0).abs() <= 0.05);

    let t = json!({"kind": "taylor", "signal": {"kind": "trig", "frequency": 2.0, "phase": 0.3}, "beta": 2.5});
    let c = with(with(base(2.5), "germ", t), "tolerance", json!(1e-3));
    let r = run("reconstruct", c);
    assert_eq!(r.code, 0);
    assert!(r.result("max_rel_err") <= 1e-3);
    assert!(r.summary()["config"]["reconstruction"]["n_max"] == json!(4));

    let mut deep = with(base(1.0), "germ", json!({"kind": "monomial"}));
    deep["reconstruction"]["n_max"] = json!(9);
    assert_eq!(run("reconstruct", deep).code, 3);
}

fn young_config(g: Value, g_derivative: bool, f: Value, alpha: f64) -> Value {
    let mut c = base(alpha + 1.5);
    c["reconstruction"]["n_max"] = json!(7);
    c["young"] = json!({
        "alpha": alpha, "beta": 1.5, "p1": "inf", "p2": "inf", "q1": "inf", "q2": "inf", "r": 2,
        "g": g, "g_derivative": g_derivative, "f": f
    });
    c
}

#[test]
fn young_examples() {
    let sin = json!({"kind": "trig", "frequency": 1.0, "phase": -std::f64::consts::FRAC_PI_2});
    let r = run("young", young_config(json!({"kind": "trig", "frequency": 1.0}), false, sin.clone(), -0.4));
    assert_eq!(r.code, 0);
    assert!(r.result("max_rel_err") <= 1e-3);
    for k in ["v1", "v2", "v3", "v4"] {
        assert!(r.result(k).is_finite());
    }
    let w = json!({"kind": "weierstrass", "a": 0.5, "b": 3.0, "terms": 6});
    let alpha = -(0.5f64).ln() / 3f64.ln() - 1.0;
    let one = json!({"kind": "poly", "coefficients": [1.0]});
    let r = run("young", young_config(w.clone(), true, one, alpha));
    assert_eq!(r.code, 0);
    assert!(r.result("max_rel_err") <= 1e-3);
    let r = run("young", young_config(w, true, sin, alpha));
    assert_eq!(r.code, 0);
    assert!(r.result("max_rel_err") <= 0.05);
    assert_eq!(r.table("pairings", "psi,center,scale,value,oracle,rel_err").len(), 5);
}

#[test]
fn besov_examples() {
    let mut c = base(1.0);
    c["reconstruction"]["norm"]["window"] = json!({"lo": -1.0, "hi": 1.0});
    c["besov"] = json!({"signal": {"kind": "dirac", "location": 0.0}, "alpha": -1.0});
    c["tolerance"] = json!(1e-6);
    let r = run("besov", c.clone());
    assert_eq!(r.code, 0);
    assert!(r.result("ratio_spread") <= 1e-6);

    c["besov"] = json!({"signal": {"kind": "poly", "coefficients": [0.0]}, "alpha": -0.5});
    let r = run("besov", c.clone());
    assert_eq!(r.code, 0);
    assert_eq!(r.result("value"), 0.0);

    // Taylor remainders of z^2 vanish; what is left is sup|z^2| + sup|2z| + 2 on K.
    c["reconstruction"]["norm"]["window"] = json!({"lo": -0.5, "hi": 0.5});
    c["besov"] = json!({
        "signal": {"kind": "poly", "coefficients": [0.0, 0.0, 1.0]},
        "alpha": 0.5, "taylor_alpha": 2.5, "h0": 1.0
    });
    c["tolerance"] = Value::Null;
    let r = run("besov", c);
    assert_eq!(r.code, 0);
    assert!((r.result("taylor_norm") - 3.25).abs() < 1e-12, "{}", r.result("taylor_norm"));
    assert!(r.out.join("local_means.csv").exists());
}

#[test]
fn bad_configs_exit_with_precondition_code() {
    let r = run("coherence", json!({"grid": {"half_length": 8, "level": 14}, "unknown": 1}));
    assert_eq!(r.code, 2);
    let r = run("young", with(base(1.0), "young", json!({"alpha": -0.4, "beta": 2.0})));
    assert_eq!(r.code, 2);
}
