use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_oscillotex"));
    c.env_remove("OSCILLOTEX_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let o = run(args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let head = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (head, rows)
}

fn col(head: &[String], name: &str) -> usize {
    head.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn stokes2_newtonian_phase_is_quarter_pi() {
    let d = tempfile::tempdir().unwrap();
    ok(&["stokes2", "--omega", "2", "--eps", "0", "--out-dir", s(d.path())]);
    let (h, rows) = csv(&d.path().join("impedance.csv"));
    assert_eq!(h, ["omega", "re_z", "im_z", "abs_z", "arg_z", "re_zw1", "im_zw1"]);
    let arg = rows[0][col(&h, "arg_z")];
    assert!((arg - std::f64::consts::FRAC_PI_4).abs() <= 2e-3, "arg Z = {arg}");
    let (ph, prow) = csv(&d.path().join("profile.csv"));
    assert_eq!(ph, ["omega", "y", "re_u", "im_u"]);
    assert_eq!(prow.len(), 513);
    assert_eq!(prow[0][col(&ph, "re_u")], 1.0);
}

#[test]
fn toeplitz_eps_zero_has_zero_sidebands() {
    let d = tempfile::tempdir().unwrap();
    ok(&["toeplitz", "--family", "cosine", "--eps", "0", "--out-dir", s(d.path())]);
    let (h, rows) = csv(&d.path().join("signature.csv"));
    assert_eq!(h.len(), 15);
    for name in ["R_plus", "R_minus", "Phi_M", "T_plus", "T_minus", "A_plus", "A_minus"] {
        assert_eq!(rows[0][col(&h, name)], 0.0, "{name}");
    }
    let (mh, modes) = csv(&d.path().join("modes.csv"));
    let (m, n) = (col(&mh, "m"), col(&mh, "norm_l2"));
    assert_eq!(modes.len(), 17);
    for r in &modes {
        if r[m] != 0.0 {
            assert_eq!(r[n], 0.0);
        } else {
            assert!(r[n] > 0.0);
        }
    }
    let cert: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("certificate.json")).unwrap()).unwrap();
    assert_eq!(cert[0]["k_max"], 0.0);
    assert_eq!(cert[0]["remainder_bounds"].as_array().unwrap().len(), 4);
}

#[test]
fn toeplitz_sweep_small_eps_sidebands_scale_linearly() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let base = ["toeplitz", "--omega-sweep", "0.5:5:3", "--grid-n", "60", "--modes-m", "3", "--no-transfer"];
    let mut a = base.to_vec();
    a.extend(["--eps", "1e-3", "--out-dir", s(d1.path())]);
    ok(&a);
    let mut b = base.to_vec();
    b.extend(["--eps", "2e-3", "--out-dir", s(d2.path())]);
    ok(&b);
    let (h, r1) = csv(&d1.path().join("signature.csv"));
    let (_, r2) = csv(&d2.path().join("signature.csv"));
    assert_eq!(r1.len(), 3);
    let rp = col(&h, "R_plus");
    for (x, y) in r1.iter().zip(&r2) {
        let ratio = y[rp] / x[rp];
        assert!((ratio - 2.0).abs() < 1e-2, "ratio {ratio}");
        // symmetric baseline and cosine coupling
        assert!((x[rp] - x[col(&h, "R_minus")]).abs() <= 1e-10 * x[rp]);
    }
}

#[test]
fn rerun_reproduces_checksums_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["stokes2", "--omega-sweep", "0.5:8:6", "--eps", "0.1", "--grid-n", "128"];
    let mut x = args.to_vec();
    x.extend(["--threads", "1", "--out-dir", s(a.path())]);
    ok(&x);
    let mut y = args.to_vec();
    y.extend(["--out-dir", s(b.path())]);
    let o = bin().args(&y).env("OSCILLOTEX_THREADS", "3").output().unwrap();
    assert!(o.status.success());
    let (ma, mb) = (manifest(a.path()), manifest(b.path()));
    assert_eq!(ma["threads"], 1);
    assert_eq!(mb["threads"], 3);
    assert_eq!(ma["scenario_hash"], mb["scenario_hash"]);
    assert_eq!(ma["outputs"], mb["outputs"]);
    for o in ma["outputs"].as_array().unwrap() {
        let p = o["path"].as_str().unwrap();
        assert_eq!(std::fs::read(a.path().join(p)).unwrap(), std::fs::read(b.path().join(p)).unwrap());
    }
}

#[test]
fn validation_failures_exit_2() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("o");
    for args in [
        vec!["stokes2", "--mu0", "-1"],
        vec!["stokes2", "--omega", "1", "--omega-sweep", "1,2"],
        vec!["couette", "--layers", "0.5:0,0.5:1.7"],
        vec!["toeplitz", "--method", "lu"],
        vec!["toeplitz", "--eps", "1.5"],
        vec!["stokes2", "--no-such-flag"],
    ] {
        let mut a = args.clone();
        a.extend(["--out-dir", s(&out)]);
        let o = run(&a);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    assert!(!out.exists(), "nothing is written on validation failure");
}

#[test]
fn numeric_failure_exits_3_without_outputs() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("o");
    let o = run(&[
        "toeplitz", "--phi0", "-1.4", "--omega", "9.6566", "--eps", "0.4", "--method", "neumann:2", "--out-dir",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("certificate"));
    assert!(!out.exists());
}

#[test]
fn io_failure_exits_4() {
    let d = tempfile::tempdir().unwrap();
    let file = d.path().join("f");
    std::fs::write(&file, b"x").unwrap();
    let o = run(&["stokes2", "--out-dir", s(&file.join("sub"))]);
    assert_eq!(o.status.code(), Some(4));
    let o = run(&["stokes2", "--config", s(&d.path().join("missing.toml"))]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.toml");
    std::fs::write(
        &cfg,
        "schema_version = 1\nout_dir = \"res\"\nformat = \"json\"\n[stokes2]\nomega_sweep = \"1,2,4\"\ngrid_n = 128\neps = 0.05\n",
    )
    .unwrap();
    ok(&["stokes2", "--config", s(&cfg), "--eps", "0"]);
    let m = manifest(&d.path().join("res"));
    assert_eq!(m["scenario"]["eps"], 0.0);
    assert_eq!(m["scenario"]["grid_n"], 128);
    assert_eq!(m["scenario"]["omegas"].as_array().unwrap().len(), 3);
    let t: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.path().join("res/impedance.json")).unwrap()).unwrap();
    assert_eq!(t["rows"].as_array().unwrap().len(), 3);

    let bad = d.path().join("bad.json");
    std::fs::write(&bad, r#"{"schema_version": 7}"#).unwrap();
    assert_eq!(run(&["stokes2", "--config", s(&bad)]).status.code(), Some(2));
}

#[test]
fn couette_operator_export_round_trips_into_diagnostics() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("op");
    ok(&["couette", "--layers", "0.5:0,0.5:0.6", "--emit", "operator", "--grid-n", "16", "--omega", "3", "--out-dir", s(&out)]);
    let header: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("operator.json")).unwrap()).unwrap();
    let payload = std::fs::read(out.join("operator.bin")).unwrap();
    let n = 15usize;
    assert_eq!(payload.len(), 2 * 16 * n * n);
    let l = &header["matrices"][1];
    assert_eq!(l["name"], "l");
    let off = l["offset"].as_u64().unwrap() as usize;
    let entry = |base: usize, i: usize, j: usize| {
        let at = base + 16 * (i * n + j);
        (
            f64::from_le_bytes(payload[at..at + 8].try_into().unwrap()),
            f64::from_le_bytes(payload[at + 8..at + 16].try_into().unwrap()),
        )
    };
    // L − A_φ = iωρ on the diagonal; both are tridiagonal
    let (ar, ai) = entry(0, 4, 4);
    let (lr, li) = entry(off, 4, 4);
    assert_eq!(lr, ar);
    assert!((li - ai - 3.0).abs() < 1e-12);
    assert_eq!(entry(0, 0, 2), (0.0, 0.0));
    let h = header["h"].as_f64().unwrap();
    assert!(((entry(0, 0, 0).0) - 2.0 / (h * h)).abs() < 1e-9);

    let nr = d.path().join("nr");
    ok(&["diag", "numrange", "--operator", s(&out.join("operator.json")), "--tan-bound", "0.7", "--out-dir", s(&nr)]);
    let sum: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(nr.join("numrange_summary.json")).unwrap()).unwrap();
    assert_eq!(sum["dim"], 15);
    assert_eq!(sum["sector"]["pass"], true);
    assert_eq!(sum["probes"].as_array().unwrap().len(), 5);
    assert!(sum["probes"].as_array().unwrap().iter().all(|p| p["pass"] == true));
    assert!(sum["delta_nn"].as_f64().unwrap() > 0.0);

    let ps = d.path().join("ps");
    ok(&["diag", "pseudo", "--operator", s(&out.join("operator.json")), "--re", "0:10:3", "--im", "-5:5:2", "--out-dir", s(&ps)]);
    let (h, rows) = csv(&ps.join("pseudospectrum.csv"));
    assert_eq!(h, ["re_lambda", "im_lambda", "sigma_min"]);
    assert_eq!(rows.len(), 6);
    // imaginary part is the outer index
    assert_eq!((rows[0][1], rows[2][1], rows[3][1]), (-5.0, -5.0, 5.0));
    assert!(rows.iter().all(|r| r[2] > 0.0));
}

fn write_field(dir: &Path, nx: usize, ny: usize, h: f64, f: impl Fn(f64, f64) -> (f64, f64)) -> std::path::PathBuf {
    let mut buf = Vec::new();
    let x0 = -0.5 * h * (nx - 1) as f64;
    let y0 = -0.5 * h * (ny - 1) as f64;
    let vals: Vec<(f64, f64)> = (0..ny)
        .flat_map(|j| (0..nx).map(move |i| (i, j)))
        .map(|(i, j)| f(x0 + i as f64 * h, y0 + j as f64 * h))
        .collect();
    for (u, _) in &vals {
        buf.extend_from_slice(&u.to_le_bytes());
        buf.extend_from_slice(&0f64.to_le_bytes());
    }
    for (_, v) in &vals {
        buf.extend_from_slice(&v.to_le_bytes());
        buf.extend_from_slice(&0f64.to_le_bytes());
    }
    std::fs::write(dir.join("field.bin"), &buf).unwrap();
    let header = serde_json::json!({
        "schema_version": 1, "nx": nx, "ny": ny, "x0": x0, "y0": y0, "dx": h, "dy": h, "data": "field.bin"
    });
    let p = dir.join("field.json");
    std::fs::write(&p, header.to_string()).unwrap();
    p
}

#[test]
fn corner_functionals_from_ingested_field() {
    let d = tempfile::tempdir().unwrap();
    let field = write_field(d.path(), 41, 41, 0.05, |_, _| (0.0, 0.0));
    let out = d.path().join("z");
    ok(&["diag", "corner", "--field", s(&field), "--center", "0,0", "--radii", "0.2,0.5", "--out-dir", s(&out)]);
    let (_, rows) = csv(&out.join("corner.csv"));
    assert!(rows.iter().all(|r| r[1..].iter().all(|v| *v == 0.0)));

    // rigid rotation (y, −x): vorticity −2, so E(r) ≈ 4πr²
    let field = write_field(d.path(), 81, 81, 0.025, |x, y| (y, -x));
    let out = d.path().join("rot");
    ok(&["diag", "corner", "--field", s(&field), "--center", "0,0", "--radii", "0.2,0.4,0.6", "--out-dir", s(&out)]);
    let (h, rows) = csv(&out.join("corner.csv"));
    let e = col(&h, "enstrophy");
    for r in &rows {
        let exact = 4.0 * std::f64::consts::PI * r[0] * r[0];
        assert!((r[e] - exact).abs() / exact < 0.1, "{} vs {exact}", r[e]);
        assert!(r[col(&h, "strain")].abs() < 1e-10);
    }
    assert!(rows.windows(2).all(|w| w[1][e] >= w[0][e]));

    let out = d.path().join("clip");
    let o = ok(&["diag", "corner", "--field", s(&field), "--radii", "0.5,2", "--out-dir", s(&out)]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("clipped"));
    assert_eq!(manifest(&out)["warnings"].as_array().unwrap().len(), 1);

    std::fs::write(d.path().join("field.bin"), b"short").unwrap();
    assert_eq!(run(&["diag", "corner", "--field", s(&field), "--out-dir", s(&out)]).status.code(), Some(2));
}

#[test]
fn couette_traction_matches_fd_and_single_layer_closed_form() {
    let d = tempfile::tempdir().unwrap();
    ok(&["couette", "--layers", "1:0", "--omega", "2", "--grid-n", "400", "--out-dir", s(d.path())]);
    let (h, rows) = csv(&d.path().join("traction.csv"));
    let (re, im) = (rows[0][col(&h, "re_tau_bottom")], rows[0][col(&h, "im_tau_bottom")]);
    // μ k / sinh(kH) with k = (1+i) for ω = 2, μ = ρ = 1, H = 1
    let (c, sx) = (1f64.cos(), 1f64.sin());
    let (sr, si) = (1f64.sinh() * c, 1f64.cosh() * sx);
    let den = sr * sr + si * si;
    let (er, ei) = ((sr + si) / den, (sr - si) / den);
    assert!((re - er).abs() < 1e-12 && (im - ei).abs() < 1e-12, "{re} {im} vs {er} {ei}");
    let fd = rows[0][col(&h, "re_tau_fd")];
    assert!((fd - re).abs() < 1e-4);
}

#[test]
fn verify_quick_passes_and_mutation_is_detected() {
    let o = ok(&["verify", "quick", "--criterion", "1,7,11,12"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 4);

    let o = run(&["verify", "quick", "--criterion", "11", "--mutate-bessel"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stdout).contains("[FAIL] criterion 11"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("jacobi-anger"));

    let o = ok(&["verify", "quick", "--criterion", "4", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["pass"], true);
    assert_eq!(run(&["verify", "quick", "--criterion", "13"]).status.code(), Some(2));
}
