use std::io::Cursor;
use std::path::Path;
use std::process::{Command, Output};

use krylov_grad::record::{Format, RunRecord, parse_records};

const BIN: &str = env!("CARGO_BIN_EXE_krylov-grad");

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("KRYLOV_GRAD_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn records(out: &Output) -> Vec<RunRecord> {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    parse_records(Cursor::new(&out.stdout), Format::Csv).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn identity_mtx(dir: &Path, n: usize) -> String {
    let mut text = format!("%%MatrixMarket matrix coordinate real symmetric\n{n} {n} {n}\n");
    for k in 1..=n {
        text.push_str(&format!("{k} {k} 1.0\n"));
    }
    write(dir, "identity.mtx", &text)
}

#[test]
fn quadform_log_of_identity_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = identity_mtx(dir.path(), 5);
    let r = records(&run(&["quadform", "--matrix", &path, "--function", "log"]));
    assert_eq!(r.len(), 1);
    assert_eq!(r[0].value, Some(0.0));
    assert_eq!(r[0].reference_value, Some(0.0));
    assert_eq!(r[0].value_rel_error, Some(0.0));
    assert_eq!(r[0].n, Some(5));
}

#[test]
fn quadform_phase_reports_imaginary_part() {
    let r = records(&run(&["quadform", "--diag", "2", "--function", "phase:0.5"]));
    let (re, im) = (r[0].value.unwrap(), r[0].value_imag.unwrap());
    assert!((re - 1f64.cos()).abs() < 1e-15);
    assert!((im + 1f64.sin()).abs() < 1e-15);
}

#[test]
fn quadform_matches_reference_on_random_matrix() {
    for f in ["log", "exp", "sqrt", "inv"] {
        let r = records(&run(&[
            "quadform", "--random", "60", "--steps", "60", "--probe", "gaussian", "--function", f,
            "--seed", "3",
        ]));
        assert!(r[0].value_rel_error.unwrap() < 1e-10, "{f}: {:?}", r[0].value_rel_error);
    }
}

#[test]
fn probe_file_is_read() {
    let dir = tempfile::tempdir().unwrap();
    let probe = write(dir.path(), "u.txt", "1 2\n3\n");
    let r = records(&run(&[
        "quadform", "--diag", "1,2,3", "--probe", &format!("file:{probe}"), "--function", "inv",
    ]));
    assert!((r[0].value.unwrap() - (1.0 + 2.0 + 3.0)).abs() < 1e-14);
    let bad = write(dir.path(), "v.txt", "1 2\n");
    let out = run(&["quadform", "--diag", "1,2,3", "--probe", &format!("file:{bad}")]);
    assert!(!out.status.success());
}

#[test]
fn identical_invocations_give_identical_bytes() {
    let args = ["logdet", "--random", "80", "--probes", "12", "--steps", "30", "--seed", "9"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run_env(&args, &[("KRYLOV_GRAD_THREADS", "1")]);
    let d = run_env(&args, &[("KRYLOV_GRAD_THREADS", "4")]);
    assert_eq!(a.stdout, c.stdout);
    assert_eq!(a.stdout, d.stdout);
    let other = run(&["logdet", "--random", "80", "--probes", "12", "--steps", "30", "--seed", "10"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn invalid_thread_cap_fails() {
    for v in ["0", "many", "-2"] {
        let out = run_env(&["logdet", "--random", "20", "--probes", "2"], &[("KRYLOV_GRAD_THREADS", v)]);
        assert!(!out.status.success(), "{v}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn logdet_is_close_to_dense_reference() {
    let r = records(&run(&[
        "logdet", "--random", "100", "--probes", "100", "--steps", "40", "--seed", "1",
    ]));
    let r = &r[0];
    let (est, exact, se) = (r.value.unwrap(), r.reference_value.unwrap(), r.std_error.unwrap());
    assert!((est - exact).abs() <= 4.0 * se, "{est} vs {exact} (se {se})");
    assert_eq!(r.grad.len(), 2);
    assert_eq!(r.reference_grad.len(), 2);
    assert_eq!(r.probes, Some(100));
}

#[test]
fn gradcheck_error_decays_with_depth() {
    let r = records(&run(&[
        "gradcheck", "--rbf", "500,2", "--probe", "rademacher", "--param-sweep", "5,10,20,40,60",
        "--seed", "4",
    ]));
    let fwd: Vec<f64> = r.iter().map(|x| x.value_rel_error.unwrap()).collect();
    let grad: Vec<f64> = r.iter().map(|x| x.grad_rel_error.unwrap()).collect();
    assert_eq!(r.iter().map(|x| x.m.unwrap()).collect::<Vec<_>>(), [5, 10, 20, 40, 60]);
    for w in fwd.windows(2).chain(grad.windows(2)) {
        assert!(w[1] < w[0], "{fwd:?} {grad:?}");
    }
    assert!(fwd[4] < 1e-10 && grad[4] < 1e-8, "{fwd:?} {grad:?}");
    assert_eq!(r[0].theta, [0.9, 1.1, 0.15]);
}

#[test]
fn gradcheck_sweep_agrees_with_single_depth_runs() {
    let sweep = records(&run(&["gradcheck", "--random", "40", "--param-sweep", "3:6", "--probe", "gaussian"]));
    assert_eq!(sweep.len(), 4);
    let single = records(&run(&["gradcheck", "--random", "40", "--steps", "5", "--probe", "gaussian"]));
    assert_eq!(sweep[2].grad, single[0].grad);
    assert_eq!(sweep[2].value, single[0].value);
}

#[test]
fn errorstudy_gradient_error_is_within_bound() {
    let r = records(&run(&["errorstudy", "--random", "30", "--steps", "12", "--probe", "gaussian", "--seed", "2"]));
    assert_eq!(r.len(), 24);
    for row in &r {
        assert!(row.note.is_empty(), "{}", row.note);
        let bound = row.error_bound.unwrap();
        let boundary = row.boundary_term.unwrap();
        let fd = row.fd_derivative.unwrap();
        let observed = row.method_error.unwrap();
        assert!(boundary.abs() <= bound * (1.0 + 1e-12), "m={:?}", row.m);
        // central differences at h = 1e-6 resolve the derivative to about
        // 1e-7 relative
        let resolution = 1e-7 * fd.abs().max(1.0);
        assert!(observed <= bound + resolution, "m={:?}: {observed} > {bound}", row.m);
        assert!((observed - boundary.abs()).abs() <= resolution, "m={:?}", row.m);
    }
}

#[test]
fn netsens_matches_dense_reference() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "g.txt", "# ring with chords\n10 11\n11 12\n12 13\n13 14\n14 10\n10 12\n11 14\n");
    let tn = records(&run(&["netsens", "--graph", &graph, "--kind", "tn", "--i", "10", "--j", "13", "--steps", "5"]));
    assert!(tn[0].value_rel_error.unwrap() < 1e-12);
    assert_eq!(tn[0].query, "tn i=10 j=13");
    let sc = records(&run(&[
        "netsens", "--graph", &graph, "--kind", "sc", "--i", "10", "--j", "12", "--ell", "10", "--steps", "5",
    ]));
    assert!(sc[0].value_rel_error.unwrap() < 1e-12);
    let missing = run(&["netsens", "--graph", &graph, "--kind", "sc", "--i", "10", "--j", "12"]);
    assert_eq!(missing.status.code(), Some(2));
    let unknown = run(&["netsens", "--graph", &graph, "--kind", "tn", "--i", "1", "--j", "12"]);
    assert!(!unknown.status.success());
}

#[test]
fn hamlearn_trajectory() {
    let r = records(&run(&[
        "hamlearn", "--sites", "2", "--samples", "6", "--steps", "60", "--m", "4", "--seed", "3",
    ]));
    assert_eq!(r.len(), 61);
    assert!(r[0].grad_rel_error.unwrap() < 1e-8);
    assert_eq!(r[0].grad.len(), 5);
    assert!(r[60].loss.unwrap() < r[0].loss.unwrap());
    assert!(r[60].param_error.unwrap() < r[0].param_error.unwrap());
    assert_eq!(r[60].theta.len(), 5);
    assert!(r[30].theta.is_empty());
}

#[test]
fn jsonl_output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let o = run(&[
        "quadform", "--diag", "1:4:4", "--format", "jsonl", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read(&out).unwrap();
    let r = parse_records(Cursor::new(text), Format::Jsonl).unwrap();
    assert_eq!(r[0].experiment, "quadform");
}

#[test]
fn flags_are_validated_before_computing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never.csv");
    let cases: &[&[&str]] = &[
        &["gradcheck", "--diag", "1,2", "--function", "phase:1"],
        &["quadform", "--diag", "1,2", "--function", "cosh"],
        &["quadform", "--diag", "1,2", "--reorth", "partial"],
        &["quadform", "--diag", "1,2", "--rbf", "3,2"],
        &["quadform"],
        &["quadform", "--diag", "1,2", "--theta", "1,2"],
        &["gradcheck", "--diag", "1,2", "--param-sweep", "0,3"],
        &["logdet", "--diag", "1,2", "--probe", "e1"],
        &["hamlearn", "--function", "log"],
        &["errorstudy", "--random", "10", "--fd-step", "-1"],
    ];
    for args in cases {
        let mut a = args.to_vec();
        a.extend(["--out", out.to_str().unwrap()]);
        let o = run(&a);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(!out.exists());
}

#[test]
fn failed_computation_gives_nonzero_exit() {
    let o = run(&["quadform", "--diag", "-1,2", "--function", "log", "--probe", "rademacher"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["quadform", "--matrix", "/nonexistent.mtx"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn large_problems_skip_the_reference() {
    let r = records(&run(&["quadform", "--diag", "1:2:3001", "--steps", "5", "--probe", "rademacher"]));
    assert_eq!(r[0].reference_value, None);
    let r = records(&run(&[
        "quadform", "--diag", "1:2:3001", "--steps", "5", "--probe", "rademacher", "--force-reference",
    ]));
    assert!(r[0].reference_value.is_some());
}
