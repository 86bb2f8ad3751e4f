use std::path::Path;
use std::process::Command;

fn curvelab(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_curvelab")).args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("exp.toml");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    (header, lines.map(|l| l.split(',').map(String::from).collect()).collect())
}

#[test]
fn empty_schedule_gives_header_only() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "[lattice]\nannuli = 0\n");
    let out = d.path().join("out");
    let o = curvelab(&["gen-locus", "--config", &cfg], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("locus.csv")).unwrap();
    assert_eq!(text, "re,im,annulus_index,offset_re,offset_im,case_tag\n");
}

#[test]
fn locus_is_identical_across_thread_counts() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "[offsets]\nmode = \"sigma\"\n[lattice]\nannuli = 2\nfirst_index = 3\n");
    let a = d.path().join("a");
    let b = d.path().join("b");
    assert!(curvelab(&["gen-locus", "--config", &cfg, "--threads", "1"], &a).status.success());
    assert!(curvelab(&["gen-locus", "--config", &cfg, "--threads", "4"], &b).status.success());
    let x = std::fs::read(a.join("locus.csv")).unwrap();
    assert_eq!(x, std::fs::read(b.join("locus.csv")).unwrap());
    let (h, rows) = read_csv(&a.join("locus.csv"));
    assert_eq!(h.len(), 6);
    assert!(rows.iter().any(|r| r[5] == "II"));
    // 17 significant digits
    let mant = rows[0][0].trim_start_matches('-').split('e').next().unwrap().replace('.', "");
    assert_eq!(mant.len(), 17);
}

#[test]
fn area_scan_rows_increase() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("out");
    let o = curvelab(&["area-scan"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&out.join("area_scan.csv"));
    assert_eq!(h, ["r", "area", "error", "T", "jensen_T", "length", "ratio", "flagged"]);
    assert_eq!(rows.len(), 4);
    let areas: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(areas.windows(2).all(|w| w[1] > w[0]), "{areas:?}");
    for r in &rows {
        let t: f64 = r[3].parse().unwrap();
        let j: f64 = r[4].parse().unwrap();
        assert!((t - j).abs() < 0.01 * j, "{r:?}");
    }
}

#[test]
fn bad_config_writes_nothing() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "[model]\nalpha = 0.05\neps1 = -1.0\n");
    let out = d.path().join("out");
    let o = curvelab(&["gen-locus", "--config", &cfg], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model.eps1"));
    assert!(!out.exists());

    let cfg = write_config(d.path(), "[torus]\nslope = 1.5\n");
    let o = curvelab(&["torus", "--config", &cfg], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("torus.slope"));
    assert!(!out.exists());
}

#[test]
fn torus_table() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("out");
    assert!(curvelab(&["torus"], &out).status.success());
    let (h, rows) = read_csv(&out.join("torus_counts.csv"));
    assert_eq!(h, ["r", "count", "count_over_r2"]);
    assert_eq!(rows.len(), 3);
    let q: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    let (lo, hi) = (q.iter().cloned().fold(f64::INFINITY, f64::min), q.iter().cloned().fold(0.0, f64::max));
    assert!(hi <= 2.0 * lo, "{q:?}");
}

#[test]
fn profile_and_psi_grid() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(
        d.path(),
        "[lattice]\nannuli = 1\n[profiler]\nselectors = [\"THIRD\", \"CASE({1},odd)\"]\n[scan]\neval_n = 11\neval_extent = 30.0\n",
    );
    let out = d.path().join("out");
    let o = curvelab(&["profile", "--config", &cfg], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&out.join("profile.csv"));
    assert_eq!(h, ["selector", "j", "r", "region_label", "fraction", "total_area"]);
    assert_eq!(rows.len(), 3);
    let sum: f64 = rows.iter().map(|r| r[4].parse::<f64>().unwrap()).sum();
    assert!((sum - 1.0).abs() < 1e-12);
    let verdicts = std::fs::read_to_string(out.join("profile_verdicts.txt")).unwrap();
    assert!(verdicts.contains("THIRD") && verdicts.contains("CASE({1},odd): skipped"), "{verdicts}");

    let o = curvelab(&["eval-psi", "--config", &cfg], &out);
    assert!(o.status.success());
    let (h, rows) = read_csv(&out.join("psi_grid.csv"));
    assert_eq!(h.len(), 5);
    assert_eq!(rows.len(), 121);
}

#[test]
fn unknown_flag_rejected() {
    let d = tempfile::tempdir().unwrap();
    let o = curvelab(&["gen-locus", "--bogus"], d.path());
    assert!(!o.status.success());
}
