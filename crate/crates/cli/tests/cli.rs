use std::fs;
use std::process::{Command, Output};

fn oscillab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oscillab"))
        .args(args)
        .env_remove("OSCILLAB_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const SPEC: &str = "kind = bmo-composition
map = strain
grid.t = 0.5, 1, 1.5, 2
functions = log; trig
n = 64
stride = 8
output = runs/strain.csv
";

#[test]
fn seminorm_prints_one_row() {
    let o = oscillab(&["seminorm", "--f", "log", "--map", "quarter:k=1", "--grid-n", "64"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "name,p,a,K_phi,seminorm,argmax_center,argmax_radius");
    assert_eq!(lines.len(), 2);
    let row: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(row[0], "log");
    assert_eq!(row[3], "2");
}

#[test]
fn seminorm_reads_grid_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    let mut text = String::from("16,2,2,0,-1,-1\n");
    for j in 0..16 {
        for i in 0..16 {
            text.push_str(&format!("{i},{j},{}\n", i as f64));
        }
    }
    fs::write(&path, text).unwrap();
    let o = oscillab(&["seminorm", "--f", path.to_str().unwrap(), "--stride", "2", "--radii", "0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with(path.to_str().unwrap()));
}

#[test]
fn whitney_emits_balls_and_summary() {
    let o = oscillab(&["whitney", "--map", "shear:lambda=1", "--ball", "0,0,0.4", "--grid-n", "128"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("k,center_x,center_y,radius,dist_to_complement\n"));
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("# covering_statistic=") && last.contains("disjoint=true"));
}

#[test]
fn carleson_reports_pullback() {
    let o = oscillab(&["carleson", "--density", "band", "--map", "strain:t=1", "--grid-n", "128"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "band");
    // The band is invariant under any map.
    assert_eq!(row[3], row[4]);
    assert_eq!(row[8], "true");
}

#[test]
fn transport_writes_growth_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_oscillab"))
        .args(["transport", "--field", "strain", "--u0", "holder:a=0.5,axis=1", "--a", "0.5"])
        .args(["--T", "1", "--grid-n", "64", "--out", "growth.csv"])
        .env("OSCILLAB_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("growth.csv")).unwrap();
    assert!(text.starts_with("t,seminorm,l2,min,max\n"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 6);
    assert!(text.contains("# fit exponential"));
}

#[test]
fn perturbed_runs_on_the_torus() {
    let o = oscillab(&["perturbed", "--field", "cellular:lip=2", "--w0", "plog", "--T", "0.5", "--grid-n", "32"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().filter(|l| !l.starts_with('#')).count(), 4);
    let bad = oscillab(&["perturbed", "--field", "strain", "--w0", "plog", "--dt", "0.1", "--every", "0.25"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn sweep_is_byte_identical_across_runs_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("s.spec");
    fs::write(&spec, SPEC).unwrap();
    let run = |jobs: &str, sub: &str| {
        let out = dir.path().join(sub);
        let o = Command::new(env!("CARGO_BIN_EXE_oscillab"))
            .args(["sweep", spec.to_str().unwrap(), "--jobs", jobs, "--plot", "p.svg"])
            .env("OSCILLAB_OUT", &out)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("fit log log coeffs"));
        assert!(fs::read_to_string(out.join("p.svg")).unwrap().starts_with("<svg"));
        fs::read(out.join("runs/strain.csv")).unwrap()
    };
    let a = run("1", "a");
    let b = run("3", "b");
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 9);
}

#[test]
fn empty_sweep_reports_no_fit() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("e.spec");
    fs::write(&spec, "kind = bmo-composition\nmap = strain\ngrid.t =\nn = 64\n").unwrap();
    let o = oscillab(&["sweep", spec.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("map,params,K_analytic,K_estimated,seminorm_in,seminorm_out,ratio,function\n"));
    assert!(text.contains("NoFit"));
}

#[test]
fn spec_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.spec");
    fs::write(&spec, "kind = holder\nstride = many\n").unwrap();
    let o = oscillab(&["sweep", spec.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("stride"));
    let o = oscillab(&["seminorm", "--f", "wave"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_exit_codes() {
    let o = oscillab(&["report", "--criteria", "10"]);
    assert_eq!(o.status.code(), Some(1), "skipped criteria must fail the run");
    let text = stdout(&o);
    assert!(text.contains("PASS criterion 10"));
    assert!(text.contains("SKIP criterion 1 "));
    assert!(text.contains("summary passed=1 failed=0 skipped=9"));

    let o = oscillab(&["report", "--negative-control"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL criterion 2 (covering lemma (scaling control))"));
}

#[test]
fn plot_command_groups_series() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    fs::write(&csv, "K_analytic,ratio,function\n2,1,a\n4,2,a\n2,1.5,b\n").unwrap();
    let svg = dir.path().join("d.svg");
    let o = oscillab(&["plot", csv.to_str().unwrap(), "--out", svg.to_str().unwrap(), "--log-x"]);
    assert!(o.status.success());
    let text = fs::read_to_string(svg).unwrap();
    assert_eq!(text.matches("<circle").count(), 3);
}
