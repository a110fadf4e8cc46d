mod common;

use std::fs;

use serde_json::Value;

use common::{bin, check_golden, csv_as_json};
use l4dec::commands::{
    cmd_compare, cmd_decompose, cmd_landscape, cmd_sweep, cmd_synth, resolve_grid, CompareArgs, DecomposeArgs,
    FormatArg, LandscapeArgs, MethodArg, ModeArg, SweepArgs, SynthArgs,
};
use l4dec::io::read_matrix;

fn read_json(path: &std::path::Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn synth_args(out: &std::path::Path) -> SynthArgs {
    SynthArgs {
        p: Some(8),
        r: Some(2),
        theta: Some(0.3),
        n: Some(400),
        seed: Some(3),
        out: Some(out.to_path_buf()),
        ..Default::default()
    }
}

#[test]
fn synth_golden_and_byte_identical_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let small = SynthArgs {
        p: Some(5),
        r: Some(2),
        n: Some(6),
        format: Some(FormatArg::Csv),
        ..synth_args(&dir.path().join("a"))
    };
    cmd_synth(small.clone()).unwrap();
    cmd_synth(SynthArgs { out: Some(dir.path().join("b")), ..small }).unwrap();
    let mut bundle = serde_json::Map::new();
    for f in ["A.csv", "X.csv", "Y.csv", "manifest.json"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        assert_eq!(a, fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
        let text = String::from_utf8(a).unwrap();
        let value = if f.ends_with(".json") { serde_json::from_str(&text).unwrap() } else { csv_as_json(&text) };
        bundle.insert(f.to_string(), value);
    }
    check_golden("synth.json", &Value::Object(bundle));
}

#[test]
fn decompose_golden_for_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("bundle");
    cmd_synth(synth_args(&bundle)).unwrap();
    let mut reports = serde_json::Map::new();
    for method in [MethodArg::L4, MethodArg::Adm] {
        let out = dir.path().join(format!("{method:?}"));
        let rep = cmd_decompose(DecomposeArgs {
            bundle: Some(bundle.clone()),
            method: Some(method),
            deterministic: Some(true),
            out: Some(out.clone()),
            ..Default::default()
        })
        .unwrap();
        assert!(rep.recovery.is_some());
        let est = read_matrix(&out.join("A_est.l4mx")).unwrap();
        assert_eq!(est.shape(), (8, 2));
        if method == MethodArg::L4 {
            let traces = fs::read_to_string(out.join("traces.csv")).unwrap();
            assert!(traces.starts_with("column,iter,value,grad_norm,min_curv,step_kind\n"));
        }
        reports.insert(format!("{method:?}"), read_json(&out.join("report.json")));
    }
    check_golden("decompose.json", &Value::Object(reports));
}

#[test]
fn decompose_recovers_every_column_at_p100_r10() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("bundle");
    cmd_synth(SynthArgs {
        p: Some(100),
        r: Some(10),
        theta: Some(0.1),
        n: Some(5000),
        seed: Some(7),
        out: Some(bundle.clone()),
        ..Default::default()
    })
    .unwrap();
    let rep = cmd_decompose(DecomposeArgs {
        bundle: Some(bundle),
        out: Some(dir.path().join("out")),
        ..Default::default()
    })
    .unwrap();
    let rec = rep.recovery.unwrap();
    assert_eq!(rec.per_column_err.len(), 10);
    assert!(rec.per_column_err.iter().all(|&e| e <= 0.01), "{:?}", rec.per_column_err);
    assert!(rec.success);
    assert!(rep.wall_time_secs.is_some());
}

#[test]
fn sweep_golden_and_trend() {
    let dir = tempfile::tempdir().unwrap();
    let csv = cmd_sweep(SweepArgs {
        mode: Some(ModeArg::FullMatrix),
        p: Some(20),
        r_values: Some(vec![2, 4]),
        theta_values: Some(vec![0.1, 0.3]),
        n_values: Some(vec![800]),
        trials: Some(2),
        base_seed: Some(5),
        deterministic: Some(true),
        out: Some(dir.path().to_path_buf()),
        ..Default::default()
    })
    .unwrap();
    assert_eq!(csv, fs::read_to_string(dir.path().join("sweep.csv")).unwrap());
    assert_eq!(csv.lines().count(), 5);
    assert!(!dir.path().join("timings.json").exists());
    let svg = fs::read_to_string(dir.path().join("heatmap.svg")).unwrap();
    assert!(!svg.contains("<metadata>"));
    check_golden("sweep.json", &csv_as_json(&csv));
}

#[test]
fn desk_sweep_follows_the_rank_trend() {
    let dir = tempfile::tempdir().unwrap();
    cmd_sweep(SweepArgs {
        out: Some(dir.path().to_path_buf()),
        ..Default::default()
    })
    .unwrap();
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<Vec<String>> = csv.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 6);
    let rate = |r: &str, theta: &str| -> f64 {
        rows.iter().find(|c| c[1] == r && c[2] == theta).unwrap()[6].parse().unwrap()
    };
    assert!(rate("5", "0.1") >= rate("10", "0.3"));
    assert!(dir.path().join("timings.json").exists());
}

#[test]
fn landscape_golden_identity() {
    let dir = tempfile::tempdir().unwrap();
    let rep = cmd_landscape(LandscapeArgs {
        identity: Some(true),
        r: Some(3),
        theta: Some(0.1),
        samples: Some(40),
        starts: Some(4),
        seed: Some(1),
        deterministic: Some(true),
        out: Some(dir.path().to_path_buf()),
        ..Default::default()
    })
    .unwrap();
    let single = &rep.analytic_points[0];
    assert_eq!(single.k, 1);
    assert!((single.alpha - 1.0).abs() < 1e-12);
    assert!(!rep.outside_theory);
    check_golden("landscape.json", &read_json(&dir.path().join("landscape.json")));
}

#[test]
fn landscape_flags_parameters_outside_the_theory() {
    let dir = tempfile::tempdir().unwrap();
    let rep = cmd_landscape(LandscapeArgs {
        p: Some(6),
        r: Some(6),
        theta: Some(0.5),
        big_c_star: Some(0.65),
        samples: Some(10),
        starts: Some(0),
        out: Some(dir.path().to_path_buf()),
        ..Default::default()
    })
    .unwrap();
    assert!(rep.outside_theory);
    assert!(read_json(&dir.path().join("landscape.json"))["outside_theory"].as_bool().unwrap());
}

#[test]
fn compare_golden() {
    let dir = tempfile::tempdir().unwrap();
    cmd_compare(CompareArgs {
        p: Some(12),
        r: Some(2),
        n: Some(300),
        theta_values: Some(vec![0.2]),
        trials: Some(2),
        out: Some(dir.path().to_path_buf()),
        ..Default::default()
    })
    .unwrap();
    let csv = fs::read_to_string(dir.path().join("compare.csv")).unwrap();
    assert!(csv.starts_with("theta,seed,l4_err,adm_err,l4_better\n"));
    let mut all = serde_json::Map::new();
    all.insert("rows".into(), csv_as_json(&csv));
    all.insert("summary".into(), read_json(&dir.path().join("summary.json")));
    check_golden("compare.json", &Value::Object(all));
}

#[test]
fn config_file_fills_unset_flags_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.json");
    fs::write(&cfg, r#"{"p": 40, "r_values": [3], "trials": 7, "mode": "full-matrix"}"#).unwrap();
    let status = bin()
        .args(["sweep", "--config"])
        .arg(&cfg)
        .args(["--trials", "1", "--n", "300", "--theta", "0.2", "--deterministic", "--out"])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let csv = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap().split(',').take(5).collect::<Vec<_>>(), ["40", "3", "0.2", "300", "1"]);
}

#[test]
fn paper_scale_selects_the_full_grid() {
    let grid = resolve_grid(&SweepArgs { paper_scale: Some(true), ..Default::default() });
    assert_eq!(grid.trials, 200);
    assert_eq!(grid.p, 100);
    assert_eq!(grid.r_values, vec![10, 30, 50, 70]);
    assert_eq!(grid.theta_values.len(), 20);
    assert_eq!(grid.theta_values[19], 0.58);
    assert_eq!(grid.n_values, vec![5000]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| bin().args(args).current_dir(dir.path()).output().unwrap();

    let ok = run(&["synth", "--p", "6", "--r", "2", "--theta", "0.2", "--n", "50", "--seed", "9", "--out", "b"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&ok.stdout), "seed: 9\n");

    let bad_dims = run(&["synth", "--p", "4", "--r", "4", "--theta", "0.2", "--n", "50", "--out", "c"]);
    assert_eq!(bad_dims.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_dims.stderr).contains("dimension"));

    assert_eq!(run(&["decompose", "--input", "missing.l4mx", "--r", "2", "--out", "d"]).status.code(), Some(1));
    assert_eq!(run(&["decompose", "--bundle", "b", "--r", "9", "--out", "d"]).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--mode", "nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["landscape", "--samples", "0", "--out", "l"]).status.code(), Some(2));

    // Rank-deficient data: r exceeds the numerical rank.
    let y = l4dec::io::encode_csv(&nalgebra::DMatrix::from_fn(6, 30, |i, j| ((i + 1) * (j % 3 + 1)) as f64));
    fs::write(dir.path().join("rank1.csv"), y).unwrap();
    assert_eq!(run(&["decompose", "--input", "rank1.csv", "--r", "2", "--out", "e"]).status.code(), Some(3));
}
