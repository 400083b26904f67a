use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ipad_core::data::{pgm_write, test_scene};

fn ipad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ipad")).args(args).output().expect("binary runs")
}

fn ipad_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ipad"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(dir.join("summary.json")).unwrap()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: [&str; 10] = ["--n", "8", "--m", "12", "--p", "150", "--k", "2", "--seed", "3"];

#[test]
fn synth_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut args = vec!["synth", "--variant", "ipad-admm", "--max-outer", "60", "--out", path(&out)];
    args.extend(SMALL);
    let res = ipad(&args);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    for f in [
        "trace.csv",
        "summary.json",
        "resolved.toml",
        "plot_w_change.csv",
        "plot_d_change.csv",
        "plot_psi_change.csv",
        "plot_inner_counts.csv",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("t,psi,dx_rel,dy_rel,ex_norm,ey_norm,inner_x,inner_y,elapsed_s"));
    assert_eq!(trace.lines().count(), 62);
    let s = summary(&out);
    assert_eq!(s["variant"], "ipad-admm");
    assert_eq!(s["outer_iterations"], 60);
    assert_eq!(s["seed"], 3);
    assert_eq!(s["criterion_violations"], 0);
    assert_eq!(s["descent_violations"], 0);
    assert_eq!(s["config"]["synthetic"]["p"], 150);
    assert_eq!(s["config"]["solver"]["max_outer"], 60);
}

#[test]
fn resolved_config_reruns_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let mut args = vec!["synth", "--variant", "ipad-p2a", "--max-outer", "40", "--no-wall-clock", "--out", path(&first)];
    args.extend(SMALL);
    assert_eq!(code(&ipad(&args)), 0);

    // Re-run from the written configuration alone, into another directory.
    let second = dir.path().join("second");
    let cfg = first.join("resolved.toml");
    let res = ipad(&["synth", "--config", path(&cfg), "--out", path(&second)]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(fs::read(first.join("trace.csv")).unwrap(), fs::read(second.join("trace.csv")).unwrap());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "[run]\nvariant = \"palm\"\nwall_clock = false\n[solver]\nmax_outer = 5\n\
         [synthetic]\nn = 8\nm = 12\np = 100\nk = 2\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    let res = ipad(&["synth", "--config", path(&cfg), "--max-outer", "7", "--out", path(&out)]);
    assert_eq!(code(&res), 0);
    let s = summary(&out);
    assert_eq!(s["variant"], "palm");
    assert_eq!(s["outer_iterations"], 7);
    assert_eq!(s["total_time_s"], 0.0);
}

#[test]
fn audit_reports_clean_and_injected_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let mut args = vec!["synth", "--variant", "ipad-admm", "--max-outer", "30", "--out", path(&out)];
    args.extend(SMALL);
    assert_eq!(code(&ipad(&args)), 0);
    let trace = out.join("trace.csv");

    let a = summary(&out)["descent_a"].as_f64().unwrap().to_string();
    let res = ipad(&["audit", "--trace", path(&trace), "--a", &a]);
    assert_eq!(code(&res), 0, "{}", stdout(&res));
    assert!(stdout(&res).contains("0 violations"));

    // Inflate ex_norm on step 5 far beyond C_x‖Δx‖.
    let text = fs::read_to_string(&trace).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let mut cells: Vec<String> = lines[6].split(',').map(str::to_owned).collect();
    cells[4] = "1e6".into();
    lines[6] = cells.join(",");
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, lines.join("\n") + "\n").unwrap();
    let res = ipad(&["audit", "--trace", path(&bad)]);
    assert_eq!(code(&res), 3);
    assert!(stdout(&res).contains("criterion violations at t = [5]"));
}

#[test]
fn denoise_improves_on_the_noisy_image() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("scene.pgm");
    pgm_write(&test_scene(64, 64), &img).unwrap();
    let out = dir.path().join("d");
    let res = ipad(&["denoise", "--image", path(&img), "--sigma", "20", "--variant", "ipad-admm", "--out", path(&out)]);
    assert_eq!(code(&res), 0, "{}{}", stdout(&res), String::from_utf8_lossy(&res.stderr));
    let s = summary(&out);
    let noisy = s["psnr_noisy"].as_f64().unwrap();
    let recovered = s["psnr_recovered"].as_f64().unwrap();
    assert!(recovered > noisy + 1.0, "{recovered} vs {noisy}");
    assert!(out.join("noisy.pgm").is_file() && out.join("recovered.pgm").is_file());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");

    // bad configuration
    let res = ipad(&["synth", "--c-y", "1", "--eta-y", "1.5", "--out", path(&out)]);
    assert_eq!(code(&res), 1);
    let res = ipad(&["synth", "--variant", "nope"]);
    assert_eq!(code(&res), 1);
    let cfg = dir.path().join("typo.toml");
    fs::write(&cfg, "[run]\nvarient = \"palm\"\n").unwrap();
    assert_eq!(code(&ipad(&["synth", "--config", path(&cfg)])), 1);

    // unreadable input
    let missing = dir.path().join("missing.pgm");
    assert_eq!(code(&ipad(&["denoise", "--image", path(&missing), "--out", path(&out)])), 2);
    assert_eq!(code(&ipad(&["synth", "--config", path(&missing)])), 2);

    // inner budget exhausted: one ADMM step cannot pass the error test
    let res = ipad(&[
        "denoise", "--scene-size", "32", "--variant", "ipad-admm", "--admm-steps", "1", "--admm-rho", "0.5",
        "--out", path(&out),
    ]);
    assert_eq!(code(&res), 3, "{}", stdout(&res));
    assert_eq!(summary(&out)["termination"], "stalled");
}

#[test]
fn compare_rows_follow_input_order_and_repeat_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp");
    let mut args = vec![
        "compare", "--variants", "ipad-p2a,palm,ipad-p2a", "--max-outer", "40", "--no-wall-clock", "--out", path(&out),
    ];
    args.extend(SMALL);
    let res = ipad_env(&args, "IPAD_THREADS", "3");
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let table = fs::read_to_string(out.join("compare.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("variant,outer_iterations,wall_time_s,final_psi,criterion_violations"));
    assert!(rows[1].starts_with("ipad-p2a,"));
    assert!(rows[2].starts_with("palm,"));
    assert_eq!(rows[1], rows[3]);

    // the two-step code budget shows in the trace
    let trace = fs::read_to_string(out.join("00-ipad-p2a").join("trace.csv")).unwrap();
    for line in trace.lines().skip(1) {
        let inner_x: usize = line.split(',').nth(6).unwrap().parse().unwrap();
        assert!(inner_x <= 2);
    }

    // worker count does not change the results
    let out1 = dir.path().join("cmp1");
    let mut args1 = args.clone();
    let pos = args1.iter().position(|a| *a == path(&out)).unwrap();
    args1[pos] = path(&out1);
    assert_eq!(code(&ipad_env(&args1, "IPAD_THREADS", "1")), 0);
    assert_eq!(table, fs::read_to_string(out1.join("compare.csv")).unwrap());
    assert_eq!(
        fs::read(out.join("01-palm").join("trace.csv")).unwrap(),
        fs::read(out1.join("01-palm").join("trace.csv")).unwrap()
    );
}

#[test]
fn compare_needs_two_members() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    let res = ipad(&["compare", "--variants", "palm", "--out", path(&out)]);
    assert_eq!(code(&res), 1);
}
