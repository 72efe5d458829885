use std::process::{Command, Output};

fn ratbounds(args: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ratbounds")).args(args.split_whitespace()).output().expect("run ratbounds")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(args: &str) -> serde_json::Value {
    let out = ratbounds(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_str(&stdout(&out)).unwrap()
}

// CSV rows below the comment header, as records
fn rows(text: &str) -> Vec<csv::StringRecord> {
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    csv::Reader::from_reader(body.as_bytes()).records().map(|r| r.unwrap()).collect()
}

#[test]
fn bounds_json() {
    let v = json("bounds --n 4 --sigma-f 5");
    assert_eq!(v["model"], "main");
    assert_eq!(v["unique"], true);
    assert_eq!(v["theta_bar"], 0.0);
    assert_eq!(v["x_e_bar"], "-inf");
    assert_eq!(v["x_n_lo"], "+inf");

    let v = json("bounds --n 4 --sigma-f 0.1");
    assert_eq!(v["unique"], false);
    let t = v["theta_bar"].as_f64().unwrap();
    assert!(t > 0.375 && t < 0.45, "{t}");
}

#[test]
fn bounds_small_noise_uses_limits() {
    let v = json("bounds --n 2 --sigma-f 0.0001");
    assert_eq!(v["method"], "limits");
    assert!((v["theta_bar"].as_f64().unwrap() - 0.25).abs() < 1e-3);
}

#[test]
fn extension_and_laplace() {
    let v = json("bounds --n 4 --sigma-l 0.5 --gamma 1");
    assert_eq!(v["model"], "extension");
    assert_eq!(v["sigma_f"], 0.5);
    assert_eq!(v["unique"], true);

    let v = json("bounds --n 4 --sigma-f 0.75 --family laplace");
    assert_eq!(v["family"], "laplace");
    assert_eq!(v["unique"], true);
}

#[test]
fn critical_values() {
    let v = json("critical --n 4");
    assert!((v["sigma_f_hat"].as_f64().unwrap() - 0.257122).abs() < 1e-5);
    let v = json("critical --n 4 --gamma 1");
    assert!((v["sigma_l_hat"].as_f64().unwrap() - 0.2648).abs() < 1e-3);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        "bounds --sigma-f -1",
        "critical --n 1",
        "verify --suite bogus",
        "bounds --family cauchy --sigma-f 1",
        "sweep --var sigma-f --start 1 --stop 0.1 --points 0",
    ] {
        assert_eq!(ratbounds(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn unwritable_output_exits_4() {
    let out = ratbounds("sweep --var n --start 2 --stop 3 --points 2 --sigma-f 0.5 --out /nonexistent/dir/x.csv");
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn sweep_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |path: &str, jobs: &str| {
        format!("sweep --var sigma-f --start 0.05 --stop 0.5 --points 12 --spacing log --jobs {jobs} --out {path}")
    };
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (p, jobs) in [(&a, "1"), (&b, "4")] {
        assert_eq!(ratbounds(&args(p.to_str().unwrap(), jobs)).status.code(), Some(0));
    }
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert_eq!(a, b);
    let recs = rows(std::str::from_utf8(&a).unwrap());
    assert_eq!(recs.len(), 12);
    assert_eq!(&recs[0][2], "0.05");
    assert_eq!(&recs[11][2], "0.5");
}

#[test]
fn sweep_over_n_raises_critical_noise() {
    let out = ratbounds("sweep --var n --start 2 --stop 10 --points 9 --sigma-f 0.1");
    assert_eq!(out.status.code(), Some(0));
    let hats: Vec<f64> = rows(&stdout(&out)).iter().map(|r| r[16].parse().unwrap()).collect();
    assert_eq!(hats.len(), 9);
    assert!(hats.windows(2).all(|w| w[1] > w[0]), "{hats:?}");
}

#[test]
fn residual_curve_crosses_twice() {
    let out = ratbounds("sweep --curve residual --n 4 --sigma-f 0.1 --z 0 --start -1 --stop 1 --points 2001");
    assert_eq!(out.status.code(), Some(0));
    let r: Vec<f64> = rows(&stdout(&out)).iter().map(|r| r[3].parse().unwrap()).collect();
    let changes = r.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count();
    assert_eq!(changes, 2);
}

#[test]
fn analytic_suite_passes() {
    let out = ratbounds("verify --suite analytic");
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("owens_t"));
}
