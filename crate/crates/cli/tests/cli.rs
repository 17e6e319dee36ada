use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn stc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stc")).args(args).output().expect("spawn stc")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn synth(preset: &str, dir: &Path) {
    let out = stc(&["synth", "--preset", preset, "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
}

fn truncate_sequence(dir: &Path, keep: usize) {
    let mut frames: Vec<_> = fs::read_dir(dir.join("img")).unwrap().map(|e| e.unwrap().path()).collect();
    frames.sort();
    for f in &frames[keep..] {
        fs::remove_file(f).unwrap();
    }
    let gt = fs::read_to_string(dir.join("groundtruth_rect.txt")).unwrap();
    let kept: String = gt.lines().take(keep).map(|l| format!("{l}\n")).collect();
    fs::write(dir.join("groundtruth_rect.txt"), kept).unwrap();
}

#[test]
fn synth_then_track_and_rerun_from_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let seq = tmp.path().join("seq");
    synth("translation-100", &seq);
    assert_eq!(fs::read_dir(seq.join("img")).unwrap().count(), 100);
    assert_eq!(fs::read_to_string(seq.join("groundtruth_rect.txt")).unwrap().lines().count(), 100);
    truncate_sequence(&seq, 12);

    let gt_first = fs::read_to_string(seq.join("groundtruth_rect.txt")).unwrap().lines().next().unwrap().to_string();
    let out1 = tmp.path().join("run1");
    let o = stc(&[
        "track", "--seq", seq.to_str().unwrap(), "--init", &gt_first, "--rho", "0.2",
        "--out", out1.to_str().unwrap(), "--dump-confidence", "--overlay",
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let stdout = text(&o.stdout);
    assert!(stdout.contains("rho=0.2\n"), "{stdout}");
    assert!(stdout.contains("frames=12 "), "{stdout}");
    assert!(fs::read_to_string(out1.join("run_manifest.txt")).unwrap().contains("rho=0.2\n"));
    let results1 = fs::read_to_string(out1.join("results.txt")).unwrap();
    assert_eq!(results1.lines().count(), 12);
    assert_eq!(results1.lines().next().unwrap(), gt_first);
    assert_eq!(fs::read_dir(out1.join("confidence")).unwrap().count(), 11);
    assert_eq!(fs::read_dir(out1.join("overlay")).unwrap().count(), 12);
    assert!(fs::read(out1.join("confidence/0002.pgm")).unwrap().starts_with(b"P5\n80 80\n255\n"));

    let out2 = tmp.path().join("run2");
    let manifest = out1.join("run_manifest.txt");
    let o = stc(&[
        "track", "--seq", seq.to_str().unwrap(), "--init", &gt_first,
        "--manifest", manifest.to_str().unwrap(), "--out", out2.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert_eq!(fs::read_to_string(out2.join("results.txt")).unwrap(), results1);
    assert_eq!(fs::read_to_string(out2.join("run_manifest.txt")).unwrap(), fs::read_to_string(&manifest).unwrap());
}

#[test]
fn eval_prints_metrics_and_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let seq = tmp.path().join("seq");
    synth("translation-100", &seq);
    truncate_sequence(&seq, 20);
    let out = tmp.path().join("out");
    let o = stc(&["eval", "--seq", seq.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(text(&o.stdout).contains(&csv));
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "seq");
    assert_eq!(row[1], "20");
    assert!(row[2].parse::<f64>().unwrap() <= 2.0);
    assert_eq!(row[3], "1.0000");

    truncate_sequence(&seq, 1);
    let o = stc(&["eval", "--seq", seq.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("seq,1,0.0000,1.0000,"), "{csv}");
}

#[test]
fn failures_exit_nonzero_without_results() {
    let tmp = tempfile::tempdir().unwrap();
    let seq = tmp.path().join("seq");
    synth("occlusion-60", &seq);
    truncate_sequence(&seq, 5);
    let out = tmp.path().join("out");
    let seq_s = seq.to_str().unwrap();
    let out_s = out.to_str().unwrap();

    fs::write(seq.join("groundtruth_rect.txt"), "1,1,40,40\n1,1,40,40\n1,1,40\n1,1,40,40\n1,1,40,40\n").unwrap();
    let o = stc(&["eval", "--seq", seq_s, "--out", out_s]);
    assert!(!o.status.success());
    assert!(text(&o.stderr).contains("line 3"), "{}", text(&o.stderr));

    fs::remove_file(seq.join("groundtruth_rect.txt")).unwrap();
    let o = stc(&["track", "--seq", seq_s, "--out", out_s]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o.stderr));
    let o = stc(&["eval", "--seq", seq_s, "--out", out_s]);
    assert!(!o.status.success());
    assert!(text(&o.stderr).contains("ground truth"));

    // a corrupt frame aborts the run before any results are written
    fs::write(seq.join("img/0003.png"), b"not a png").unwrap();
    let o = stc(&["track", "--seq", seq_s, "--init", "140,100,40,40", "--out", out_s]);
    assert!(!o.status.success());
    assert!(!out.join("results.txt").exists());

    let o = stc(&["track", "--seq", seq_s, "--init", "140,100,40,40", "--rho", "1.5", "--out", out_s]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn grammar_errors() {
    let o = stc(&["track", "--seq", "x", "--rhoo", "0.2"]);
    assert!(!o.status.success());
    assert!(text(&o.stderr).contains("--rhoo"));

    let tmp = tempfile::tempdir().unwrap();
    let o = stc(&["synth", "--preset", "spin-10", "--out", tmp.path().to_str().unwrap()]);
    assert!(!o.status.success());
    let err = text(&o.stderr);
    for p in ["translation-100", "occlusion-60", "zoom-60"] {
        assert!(err.contains(p), "{err}");
    }

    let o = stc(&["bench", "--frames", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_reports_median_and_spread() {
    let o = stc(&["bench", "--frames", "10", "--runs", "5"]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let line = text(&o.stdout);
    assert!(line.contains("window=80x40"), "{line}");
    for key in ["median_fps=", "min_fps=", "max_fps=", "runs=5"] {
        assert!(line.contains(key), "{line}");
    }
}
