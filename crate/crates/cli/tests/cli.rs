use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use elastic_core::{CellId, GeoCoord, GridSpec, MassGrid, MetricGraph};
use elastic_geo::codec::read_metric;
use elastic_geo::gridfile::write_grid;
use elastic_geo::massfile::write_mass;
use tempfile::TempDir;

fn elastic(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elastic")).current_dir(dir).args(args).output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "status {:?}\nstderr: {}", out.status, String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn grid(nx: u32, ny: u32) -> GridSpec {
    GridSpec::new(GeoCoord::new(48.85, 2.35).unwrap(), 100.0, nx, ny).unwrap()
}

/// Data rows of a CSV with `#` metadata lines and a header.
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn uniform_mass(dir: &Path, g: GridSpec, m: f64) -> PathBuf {
    let p = dir.join("mass.csv");
    write_mass(&p, &MassGrid::uniform(g, m).unwrap(), &[]).unwrap();
    p
}

// ---- mass ----

#[test]
fn mass_from_empty_quality_is_constant_a() {
    let d = TempDir::new().unwrap();
    write_grid(&d.path().join("grid.txt"), &grid(4, 3)).unwrap();
    fs::write(d.path().join("q.csv"), "").unwrap();
    ok(&elastic(d.path(), &["mass", "--grid", "grid.txt", "--quality", "q.csv", "--r-small", "100", "--r-large", "200"]));
    let r = rows(&d.path().join("mass.csv"));
    assert_eq!(r.len(), 12);
    assert!(r.iter().all(|row| row[1].parse::<f64>().unwrap() == 1.0 / 13.0));
}

#[test]
fn mass_matches_hand_arithmetic() {
    let d = TempDir::new().unwrap();
    write_grid(&d.path().join("grid.txt"), &grid(3, 1)).unwrap();
    fs::write(d.path().join("q.csv"), "cell_index,q\n1,1\n2,2\n").unwrap();
    let out = ok(&elastic(d.path(), &["mass", "--grid", "grid.txt", "--quality", "q.csv", "--r-small", "100", "--r-large", "200"]));
    assert!(out.contains("avg_q 3"));
    // a = 1/13; both calibration cells see q = 3 within 100 m; b = (1 - 5/13)/3
    let m: Vec<f64> = rows(&d.path().join("mass.csv")).iter().map(|r| r[1].parse().unwrap()).collect();
    let expected = [1.0 / 13.0, 11.0 / 39.0, 19.0 / 39.0];
    for (got, want) in m.iter().zip(expected) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
    let text = fs::read_to_string(d.path().join("mass.csv")).unwrap();
    assert!(text.contains("# mass: a=0.07692307692307693,"));
    assert!(text.contains("# config: "));
}

#[test]
fn mass_bad_header_exits_2_with_line() {
    let d = TempDir::new().unwrap();
    write_grid(&d.path().join("grid.txt"), &grid(3, 1)).unwrap();
    fs::write(d.path().join("q.csv"), "# quality\ncell,q\n1,1\n").unwrap();
    let out = elastic(d.path(), &["mass", "--grid", "grid.txt", "--quality", "q.csv"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("q.csv:2:"));
    assert!(!d.path().join("mass.csv").exists());
}

#[test]
fn mass_is_idempotent_and_reads_config() {
    let d = TempDir::new().unwrap();
    write_grid(&d.path().join("grid.txt"), &grid(6, 5)).unwrap();
    fs::write(d.path().join("q.csv"), "col,row,amenity,building\n1,1,3,10\n4,2,1,0\n").unwrap();
    fs::write(d.path().join("run.conf"), "grid = grid.txt\nquality = q.csv\nr_small = 100\nr_large = 250\nout_dir = out\n").unwrap();
    ok(&elastic(d.path(), &["--config", "run.conf", "mass"]));
    let first = fs::read(d.path().join("out/mass.csv")).unwrap();
    ok(&elastic(d.path(), &["--config", "run.conf", "mass"]));
    assert_eq!(first, fs::read(d.path().join("out/mass.csv")).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert!(text.contains("weights=amenity:1;building:0.1"));
    assert!(text.contains("r_large=250"));
    // flag overrides the file
    ok(&elastic(d.path(), &["--config", "run.conf", "--r-large", "300", "mass"]));
    assert!(fs::read_to_string(d.path().join("out/mass.csv")).unwrap().contains("r_large=300"));
}

// ---- build ----

#[test]
fn build_uniform_is_clean_and_deterministic() {
    let d = TempDir::new().unwrap();
    uniform_mass(d.path(), grid(40, 40), 0.05);
    let args = ["--l-top", "2", "--frame", "0.05", "build", "--mass", "mass.csv", "-o"];
    let a = ok(&elastic(d.path(), &[&args[..], &["a.elgm"]].concat()));
    let b = ok(&elastic(d.path(), &[&args[..], &["b.elgm"]].concat()));
    assert!(a.contains("violations 0"));
    let edges = |s: &str| s.lines().find(|l| l.starts_with("edges ")).unwrap().to_string();
    assert_eq!(edges(&a), edges(&b));
    assert_eq!(fs::read(d.path().join("a.elgm")).unwrap(), fs::read(d.path().join("b.elgm")).unwrap());
    assert!(rows(&d.path().join("audit.csv")).is_empty());
    let g = read_metric(&d.path().join("a.elgm")).unwrap().graph;
    assert!(!g.usable().is_empty());
}

#[test]
fn build_whole_grid_fence_warns() {
    let d = TempDir::new().unwrap();
    uniform_mass(d.path(), grid(5, 4), 0.05);
    fs::write(d.path().join("f.csv"), "fence_id,col_min,row_min,col_max,row_max\nall,0,0,4,3\n").unwrap();
    let out = elastic(d.path(), &["--l-top", "2", "--fences", "f.csv", "build", "--edges-csv", "e.csv"]);
    let stdout = ok(&out);
    assert!(stdout.contains("\nedges 0\n"));
    assert!(stdout.contains("usable 0"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning: no usable cells"));
    assert!(rows(&d.path().join("e.csv")).iter().all(|r| r[2] == "0"));
}

#[test]
fn build_mass_starved_exits_cleanly() {
    let d = TempDir::new().unwrap();
    uniform_mass(d.path(), grid(4, 4), 0.05);
    let out = elastic(d.path(), &["--l-top", "2", "--frame", "0", "build"]);
    let stdout = ok(&out);
    assert!(stdout.contains("stuck 16"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ran out of candidates"));
    assert!(d.path().join("metric.elgm").exists());
}

#[test]
fn build_rejects_bad_inputs() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&elastic(d.path(), &["build"])), 1);
    uniform_mass(d.path(), grid(4, 4), 0.05);
    assert_eq!(code(&elastic(d.path(), &["--l-top", "-1", "build"])), 2);
    fs::write(d.path().join("f.csv"), "fence_id,cell_index\na,99\n").unwrap();
    assert_eq!(code(&elastic(d.path(), &["--fences", "f.csv", "build"])), 2);
}

// ---- sample ----

/// 12×12, mass 0.2, no frame: everything usable. Fence on a 2×2 block.
fn sample_fixture(d: &Path, frame: &str) -> MetricGraph {
    uniform_mass(d, grid(12, 12), 0.2);
    fs::write(d.join("f.csv"), "fence_id,col_min,row_min,col_max,row_max\nhome,2,2,3,3\n").unwrap();
    ok(&elastic(d, &["--l-top", "2", "--frame", frame, "--fences", "f.csv", "build"]));
    read_metric(&d.join("metric.elgm")).unwrap().graph
}

fn sampled_cells(g: &GridSpec, out: &str) -> Vec<CellId> {
    out.lines()
        .skip(1)
        .map(|l| {
            let (lat, lon) = l.split_once(',').unwrap();
            g.cell_of(g.project(lat.parse().unwrap(), lon.parse().unwrap()).unwrap()).unwrap()
        })
        .collect()
}

#[test]
fn sample_fenced_input_is_uniform_over_fence() {
    let d = TempDir::new().unwrap();
    let g = sample_fixture(d.path(), "0");
    let out = ok(&elastic(d.path(), &["--seed", "11", "sample", "--col", "2", "--row", "3", "--count", "10000"]));
    let cells = sampled_cells(g.grid(), &out);
    assert_eq!(cells.len(), 10_000);
    let fence = &g.fences().fences()[0];
    let mut counts = vec![0f64; fence.len()];
    for c in &cells {
        counts[fence.iter().position(|f| f == c).expect("draw outside the fence")] += 1.0;
    }
    let e = 10_000.0 / fence.len() as f64;
    let chi2: f64 = counts.iter().map(|c| (c - e).powi(2) / e).sum();
    assert!(chi2 < 11.345, "chi2 {chi2}"); // df 3, α = 0.01
}

#[test]
fn sample_is_seeded() {
    let d = TempDir::new().unwrap();
    sample_fixture(d.path(), "0");
    let run = |seed: &str| ok(&elastic(d.path(), &["--seed", seed, "sample", "--cell", "70", "--count", "50"]));
    assert_eq!(run("5"), run("5"));
    assert_ne!(run("5"), run("6"));
    let pl = |seed: &str| ok(&elastic(d.path(), &["--seed", seed, "sample", "--cell", "70", "--mechanism", "pl", "--r-star", "200", "--count", "5"]));
    assert_eq!(pl("1"), pl("1"));
}

#[test]
fn sample_mean_error_matches_expected_error() {
    let d = TempDir::new().unwrap();
    let g = sample_fixture(d.path(), "0");
    let x = g.grid().cell(8, 7).unwrap();
    let out = ok(&elastic(d.path(), &["--seed", "3", "sample", "--cell", &x.0.to_string(), "--count", "20000"]));
    let cells = sampled_cells(g.grid(), &out);
    let mean = cells.iter().map(|&z| g.grid().euclidean(x, z).unwrap()).sum::<f64>() / cells.len() as f64;
    let exact = elastic_geo::commands::expected_error_raster(&g).unwrap()[x.index()].unwrap();
    assert!((mean - exact).abs() < 0.05 * exact, "{mean} vs {exact}");
}

#[test]
fn sample_rejects_frame_input() {
    let d = TempDir::new().unwrap();
    sample_fixture(d.path(), "0.1");
    let out = elastic(d.path(), &["sample", "--col", "0", "--row", "5"]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("frame"));
    assert_eq!(code(&elastic(d.path(), &["sample", "--cell", "500"])), 2);
    ok(&elastic(d.path(), &["sample", "--col", "6", "--row", "6"]));
}

#[test]
fn sample_accepts_coordinates() {
    let d = TempDir::new().unwrap();
    let g = sample_fixture(d.path(), "0");
    let c = g.grid().unproject(g.grid().center(CellId(30)));
    let out = ok(&elastic(d.path(), &["sample", "--lat", &c.lat.to_string(), "--lon", &c.lon.to_string(), "--count", "3"]));
    assert_eq!(out.lines().count(), 4);
}

// ---- eval ----

fn checkin_lines(g: &GridSpec, spec: &[(&str, u32, u32)]) -> String {
    let mut s = String::new();
    for (i, &(user, cell, n)) in spec.iter().enumerate() {
        let c = g.unproject(g.center(CellId(cell)));
        for k in 0..n {
            s.push_str(&format!("{user}\t2010-10-19T23:{:02}:{:02}Z\t{}\t{}\tv{i}\n", k % 60, i % 60, c.lat, c.lon));
        }
    }
    s.push_str("garbage line\n");
    s
}

fn eval_fixture(d: &Path) -> GridSpec {
    let g = *sample_fixture(d, "0").grid();
    let spec = [("ann", 50, 5), ("ann", 51, 2), ("bob", 64, 3), ("bob", 77, 1), ("cy", 90, 4), ("dee", 140, 2)];
    fs::write(d.join("c.tsv"), checkin_lines(&g, &spec)).unwrap();
    fs::write(d.join("r.csv"), "col_min,row_min,col_max,row_max\n1,4,10,10\n").unwrap();
    g
}

#[test]
fn eval_identity_has_zero_error() {
    let d = TempDir::new().unwrap();
    eval_fixture(d.path());
    let out = elastic(d.path(), &["eval", "--checkins", "c.tsv", "--region", "r.csv", "--mechanisms", "identity"]);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("skipped 1 malformed"));
    for r in rows(&d.path().join("summary.csv")) {
        assert_eq!(r[2].parse::<f64>().unwrap(), 0.0);
    }
    let users = rows(&d.path().join("users_identity_binary.csv"));
    assert_eq!(users.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(), ["ann", "bob", "cy"]);
    assert_eq!(users[0][1], "7");
    assert!(users.iter().all(|r| r[2] == "0"));
}

#[test]
fn eval_calibrates_pl_to_em_utility() {
    let d = TempDir::new().unwrap();
    eval_fixture(d.path());
    ok(&elastic(d.path(), &["eval", "--checkins", "c.tsv", "--region", "r.csv", "--loss", "euclidean,binary,threshold:250"]));
    let s = rows(&d.path().join("summary.csv"));
    let util = |m: &str| s.iter().find(|r| r[0] == m && r[1] == "euclidean").unwrap()[3].parse::<f64>().unwrap();
    assert!((util("pl") - util("em")).abs() <= 1e-6 * util("em"));
    assert_eq!(s.len(), 6);
    assert!(d.path().join("users_pl_threshold_250.csv").exists());
    let text = fs::read_to_string(d.path().join("summary.csv")).unwrap();
    assert!(text.contains("# eval: region_cells=70,checkins=17,malformed=1,users=3,target="));
}

#[test]
fn eval_empty_intersection_exits_5() {
    let d = TempDir::new().unwrap();
    eval_fixture(d.path());
    fs::write(d.path().join("r2.csv"), "cell_index\n0\n1\n").unwrap();
    let out = elastic(d.path(), &["eval", "--checkins", "c.tsv", "--region", "r2.csv"]);
    assert_eq!(code(&out), 5);
    assert_eq!(code(&elastic(d.path(), &["eval", "--checkins", "c.tsv", "--region", "r.csv", "--loss", "hamming"])), 2);
}

#[test]
fn eval_exports_matrix() {
    let d = TempDir::new().unwrap();
    eval_fixture(d.path());
    ok(&elastic(d.path(), &["eval", "--checkins", "c.tsv", "--region", "r.csv", "--mechanisms", "em", "--matrix-csv", "k.csv"]));
    let k = rows(&d.path().join("k.csv"));
    let total: f64 = k.iter().filter(|r| r[0] == "50").map(|r| r[2].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert!(k.iter().all(|r| r[2].parse::<f64>().unwrap() > 0.0));
}

// ---- heatmap ----

#[test]
fn heatmap_mass_of_zero_quality_is_a() {
    let d = TempDir::new().unwrap();
    write_grid(&d.path().join("grid.txt"), &grid(7, 3)).unwrap();
    fs::write(d.path().join("q.csv"), "cell_index,q\n").unwrap();
    ok(&elastic(d.path(), &["--grid", "grid.txt", "--quality", "q.csv", "--r-small", "100", "--r-large", "200", "mass"]));
    let out = ok(&elastic(d.path(), &["heatmap", "--quantity", "mass"]));
    let r: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(r.len(), 21);
    assert!(r.iter().all(|l| l.ends_with(&format!(",{}", 1.0 / 13.0))));
    assert!(r[0].starts_with("0,0,") && r[20].starts_with("6,2,"));
}

#[test]
fn heatmap_unknown_quantity_exits_2() {
    let d = TempDir::new().unwrap();
    assert_eq!(code(&elastic(d.path(), &["heatmap", "--quantity", "entropy"])), 2);
}

#[test]
fn heatmap_expected_error_dense_below_sparse() {
    let d = TempDir::new().unwrap();
    let g = grid(40, 20);
    let m: Vec<f64> = g.cells().map(|c| if g.col_row(c).0 < 20 { 0.5 } else { 0.04 }).collect();
    write_mass(&d.path().join("mass.csv"), &MassGrid::new(g, m).unwrap(), &[]).unwrap();
    ok(&elastic(d.path(), &["--l-top", "2", "--frame", "0.05", "build"]));
    ok(&elastic(d.path(), &["heatmap", "--quantity", "expected_error", "-o", "e.csv"]));
    ok(&elastic(d.path(), &["heatmap", "--quantity", "l_reach", "-o", "l.csv"]));
    assert_eq!(rows(&d.path().join("l.csv")).len(), 40 * 20);
    let r = rows(&d.path().join("e.csv"));
    assert_eq!(r.len(), 40 * 20);
    let median = |dense: bool| {
        let mut v: Vec<f64> = r
            .iter()
            .filter(|row| !row[2].is_empty() && (row[0].parse::<u32>().unwrap() < 20) == dense)
            .map(|row| row[2].parse().unwrap())
            .collect();
        assert!(!v.is_empty());
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    assert!(median(true) < median(false), "{} vs {}", median(true), median(false));
}

#[test]
fn corrupt_metric_reports_offset() {
    let d = TempDir::new().unwrap();
    sample_fixture(d.path(), "0");
    let mut bytes = fs::read(d.path().join("metric.elgm")).unwrap();
    bytes.truncate(100);
    fs::write(d.path().join("bad.elgm"), bytes).unwrap();
    let out = elastic(d.path(), &["sample", "--metric", "bad.elgm", "--cell", "5"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("byte "));
}
