use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn thinzeta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thinzeta"))
        .args(args)
        .env_remove("THINZETA_CACHE")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&stdout(&thinzeta(args))).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| v.to_string().parse().unwrap())
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

fn primes_to(n: u64) -> Vec<u64> {
    (2..=n).filter(|&p| is_prime(p)).collect()
}

#[test]
fn set_listing_matches_trial_division() {
    let text = stdout(&thinzeta(&["set", "--kind", "index", "--k", "100", "--b", "1", "--xmax", "1e4"]));
    let listed: Vec<u64> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.parse().unwrap())
        .collect();
    let expected: Vec<u64> = primes_to(10_000).into_iter().step_by(100).collect();
    assert_eq!(listed, expected);
    assert!(text.contains("# count = 13"));
}

#[test]
fn full_set_zeta_at_two() {
    let v = json(&["zeta", "--kind", "index", "--k", "1", "--b", "1", "--s", "2+0i", "--X", "1e5"]);
    let exact = std::f64::consts::PI.powi(2) / 6.0;
    assert!((f(&v["value_re"]) - exact).abs() <= f(&v["err"]).max(1e-14));
    assert!(f(&v["value_im"]).abs() <= f(&v["err"]).max(1e-14));
    assert_eq!(v["certified"], Value::Bool(true));
}

#[test]
fn dirichlet_l_at_one_is_pi_over_four() {
    let v = json(&["lfun", "--disc", "-4", "--s", "1+0i"]);
    assert!((f(&v["re"]) - std::f64::consts::FRAC_PI_4).abs() <= f(&v["err"]) + 1e-15);
}

#[test]
fn exit_codes() {
    assert_eq!(thinzeta(&["basis", "--help"]).status.code(), Some(0));
    assert_eq!(thinzeta(&["--version"]).status.code(), Some(0));
    assert_eq!(thinzeta(&["basis", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(thinzeta(&["frobnicate"]).status.code(), Some(2));
    let out = thinzeta(&["set", "--kind", "index", "--xmax", "1e6", "--sieve-limit", "1e5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sieve_limit"));
    assert_eq!(thinzeta(&["vinny", "--N", "1000", "--s", "5"]).status.code(), Some(1));
    assert_eq!(thinzeta(&["zeta", "--op", "zeta", "--s", "0.5+2j"]).status.code(), Some(2));
}

#[test]
fn sieve_writes_tzpt() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.tzpt");
    let v = json(&["sieve", "--limit", "100", "--write", path.to_str().unwrap()]);
    assert_eq!(v["count"], 25);
    assert_eq!(v["largest"], 97);
    let bytes = std::fs::read(&path).unwrap();
    let mut expected = b"TZPT".to_vec();
    expected.push(1);
    expected.extend(100u64.to_le_bytes());
    expected.extend(25u64.to_le_bytes());
    for p in primes_to(100) {
        expected.extend(p.to_le_bytes());
    }
    assert_eq!(bytes, expected);
}

fn read_tzcv(path: &Path) -> (u64, u64, Vec<bool>) {
    let bytes = std::fs::read(path).unwrap();
    assert_eq!(&bytes[..4], b"TZCV");
    assert_eq!(bytes[4], 1);
    let h = u64::from_le_bytes(bytes[5..13].try_into().unwrap());
    let n = u64::from_le_bytes(bytes[13..21].try_into().unwrap());
    let body = &bytes[21..];
    assert_eq!(body.len() as u64, (n + 1).div_ceil(8));
    let bits = (0..=n).map(|i| body[(i / 8) as usize] >> (i % 8) & 1 == 1).collect();
    (h, n, bits)
}

#[test]
fn basis_export_matches_brute_force() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.tzcv");
    let v = json(&[
        "basis",
        "--kind",
        "index",
        "--k",
        "3",
        "--b",
        "1",
        "--N",
        "2000",
        "--window",
        "200:2000",
        "--hmax",
        "8",
        "--export",
        path.to_str().unwrap(),
    ]);
    let (h, n, bits) = read_tzcv(&path);
    assert_eq!(n, 2000);
    assert_eq!(h, v["h"].as_u64().unwrap());

    let set: Vec<u64> = primes_to(2000).into_iter().step_by(3).collect();
    let mut layer = vec![false; 2001];
    layer[0] = true;
    for _ in 0..h {
        let mut next = vec![false; 2001];
        for (m, _) in layer.iter().enumerate().filter(|(_, &b)| b) {
            for &p in &set {
                if let Some(slot) = next.get_mut(m + p as usize) {
                    *slot = true;
                }
            }
        }
        layer = next;
    }
    assert_eq!(bits, layer);
}

#[test]
fn shiu_runs_are_deterministic_records() {
    let args = ["shiu", "--c", "1", "--d", "4", "--limit", "1e5"];
    let a = stdout(&thinzeta(&args));
    assert_eq!(a, stdout(&thinzeta(&args)));

    let primes = primes_to(100_000);
    let mut records = Vec::new();
    let mut best = 0;
    let mut i = 0;
    while i < primes.len() {
        let mut j = i;
        while j < primes.len() && primes[j] % 4 == 1 {
            j += 1;
        }
        if j - i > best {
            best = j - i;
            records.push((primes[i], best));
        }
        i = j + 1;
    }
    let got: Vec<(u64, usize)> = a
        .lines()
        .skip(1)
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            (cells[1].parse().unwrap(), cells[2].parse().unwrap())
        })
        .collect();
    assert_eq!(got, records);
}

#[test]
fn decompositions_are_valid() {
    let v = json(&["vinny", "--N", "100001", "--s", "6"]);
    let parts: Vec<u64> = v["parts"].as_array().unwrap().iter().map(|p| p.as_u64().unwrap()).collect();
    assert_eq!(parts.len(), 6);
    assert_eq!(parts.iter().sum::<u64>(), 100_001);
    assert!(parts.iter().all(|&p| is_prime(p) && (p == 2 || 12 * p >= 100_001)));

    let v = json(&["haselgrove", "--n", "100001"]);
    let parts: Vec<u64> = v["parts"].as_array().unwrap().iter().map(|p| p.as_u64().unwrap()).collect();
    assert_eq!(parts.iter().sum::<u64>(), 100_001);
    assert!(parts.iter().all(|&p| is_prime(p)));
}

#[test]
fn config_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "kind = index\nk = 100\nb = 1\nsieve_limit = 1e4\n").unwrap();
    let c = cfg.to_str().unwrap();

    let text = stdout(&thinzeta(&["--config", c, "set", "--xmax", "1e4"]));
    assert!(text.contains("# k = 100"));
    let text = stdout(&thinzeta(&["--config", c, "set", "--k", "50", "--xmax", "1e4"]));
    assert!(text.contains("# k = 50"));
    // file sieve_limit applies unless a flag raises it
    assert_eq!(thinzeta(&["--config", c, "set", "--xmax", "1e5"]).status.code(), Some(1));
    stdout(&thinzeta(&["--config", c, "set", "--xmax", "1e5", "--sieve-limit", "1e5"]));

    std::fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(thinzeta(&["--config", c, "sieve", "--limit", "10"]).status.code(), Some(2));
}

#[test]
fn out_file_and_cache_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let cache = dir.path().join("cache");
    std::fs::create_dir(&cache).unwrap();
    let args = [
        "--cache-dir",
        cache.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "char",
        "--disc",
        "-4",
        "--x",
        "1e5",
    ];
    assert!(stdout(&thinzeta(&args)).is_empty());
    let first = std::fs::read_to_string(&out).unwrap();
    stdout(&thinzeta(&args));
    assert_eq!(first, std::fs::read_to_string(&out).unwrap());
    let v: Value = serde_json::from_str(&first).unwrap();
    let expected = primes_to(100_000).iter().filter(|&&p| p % 4 == 3).count() as u64;
    assert_eq!(v["count"], expected);
}

#[test]
fn json_floats_round_trip() {
    let v = json(&["zeta", "--op", "zeta", "--s", "0.5+14.134725i"]);
    let raw = v["value_im"].to_string();
    let x: f64 = raw.parse().unwrap();
    assert_eq!(format!("{x:.16e}").parse::<f64>().unwrap().to_bits(), x.to_bits());
    assert!(f(&v["value_re"]).abs() < 1e-6);
}

#[test]
fn zeta_grid_is_csv() {
    let text = stdout(&thinzeta(&["zeta", "--op", "zeta", "--sigma-grid", "2:3:2", "--t-grid", "0:0:1"]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "sigma,t,re,im,err,certified");
    assert_eq!(lines.len(), 3);
    let re3: f64 = lines[2].split(',').nth(2).unwrap().parse().unwrap();
    // ζ(3), Apéry's constant
    assert!((re3 - 1.202_056_903_159_594_2).abs() < 1e-13);
}
