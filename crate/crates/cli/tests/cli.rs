//! Command-line behaviour: exit codes, produced files and their formats.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gridmap::geometry::regions_to_geojson;
use gridmap::network::build_network;
use gridmap::snake::grid_size;
use gridmap::synthetic::{tiling, wiggly_tiling};
use gridmap::{LayoutJson, Region, RegionSet};
use gridmap_cli::{run_pipeline, PipelineConfig};

fn gridmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridmap"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn write_regions(dir: &Path, name: &str, regions: &[Region]) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(
        &path,
        serde_json::to_vec(&regions_to_geojson(regions)).unwrap(),
    )
    .unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_input_exits_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = gridmap(&[
        "generate",
        "--input",
        "/no/such/file.geojson",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("stage load"), "{stderr}");
}

#[test]
fn invalid_config_exits_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_regions(dir.path(), "in.geojson", &tiling(2, 2));
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"alhpa": 5}"#).unwrap();
    let out = gridmap(&[
        "generate",
        "--input",
        s(&input),
        "--config",
        s(&cfg),
        "--out",
        s(&dir.path().join("out")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage config"));
}

#[test]
fn generate_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_regions(dir.path(), "in.geojson", &tiling(2, 2));
    let out_dir = dir.path().join("out");
    let out = gridmap(&[
        "generate",
        "--input",
        s(&input),
        "--out",
        s(&out_dir),
        "--trace",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in [
        "layout.json",
        "metrics.csv",
        "trace.csv",
        "original.svg",
        "network.svg",
        "grid.svg",
    ] {
        assert!(out_dir.join(name).is_file(), "{name} missing");
    }

    let layout: LayoutJson =
        serde_json::from_slice(&std::fs::read(out_dir.join("layout.json")).unwrap()).unwrap();
    let mut cells: Vec<(i64, i64)> = layout.assignment.iter().map(|a| (a.row, a.col)).collect();
    cells.sort();
    cells.dedup();
    assert_eq!(cells.len(), 4, "each region gets its own cell");

    let metrics = std::fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
    let mut lines = metrics.lines();
    assert_eq!(
        lines.next().unwrap(),
        "shift_x,shift_y,md,seed,c_location,c_adjacent,c_orientation,c_shape,topsis_closeness,chosen"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 12);
    assert_eq!(rows.iter().filter(|r| r.ends_with(",true")).count(), 1);

    let trace = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert!(trace.starts_with("step,f_max,max_displacement,stop_reason\n"));
    assert!(trace.trim_end().ends_with("converged"));

    for name in ["original.svg", "network.svg", "grid.svg"] {
        let text = std::fs::read_to_string(out_dir.join(name)).unwrap();
        roxmltree::Document::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    let grid = std::fs::read_to_string(out_dir.join("grid.svg")).unwrap();
    for id in ["r0c0", "r0c1", "r1c0", "r1c1"] {
        assert!(
            grid.contains(&format!(">{id}</text>")),
            "label {id} missing"
        );
    }
}

#[test]
fn network_svg_has_one_line_per_edge() {
    let regions = wiggly_tiling(3, 2);
    let rs = RegionSet::new(regions.clone(), None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let input = write_regions(dir.path(), "in.geojson", &regions);
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"md": [0.0], "shifts": [[0.0, 0.0]]}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = gridmap(&[
        "generate",
        "--input",
        s(&input),
        "--config",
        s(&cfg),
        "--out",
        s(&out_dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let result = run_pipeline(rs.clone(), &PipelineConfig::from_path(&cfg).unwrap()).unwrap();
    let edges = result.chosen_run().network.edges().len();
    let s_grid = grid_size(rs.total_area(), rs.len()).unwrap();
    assert_eq!(
        edges,
        build_network(&rs, None, s_grid).unwrap().edges().len()
    );

    let svg = std::fs::read_to_string(out_dir.join("network.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let lines = doc
        .descendants()
        .filter(|n| n.has_tag_name("line") && n.attribute("class") == Some("edge"))
        .count();
    assert_eq!(lines, edges);
}

#[test]
fn render_command_draws_labelled_cells() {
    let dir = tempfile::tempdir().unwrap();
    let layout = dir.path().join("layout.json");
    std::fs::write(
        &layout,
        r#"{"origin":{"x":0.0,"y":1.0},"s":1.0,"shift":[0.0,0.0],
            "cells":[{"row":0,"col":0}],
            "assignment":[{"region_id":"only","row":0,"col":0}],"total_cost":0.0}"#,
    )
    .unwrap();
    let svg = dir.path().join("nested").join("grid.svg");
    let out = gridmap(&["render", "--layout", s(&layout), "--out", s(&svg)]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    assert_eq!(
        doc.descendants()
            .filter(|n| n.has_tag_name("polygon"))
            .count(),
        1
    );
    assert!(text.contains(">only</text>"));

    let out = gridmap(&[
        "render",
        "--layout",
        s(&dir.path().join("none.json")),
        "--out",
        s(&svg),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_reports_one_row_per_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_regions(dir.path(), "in.geojson", &wiggly_tiling(3, 6));
    let csv_path = dir.path().join("bench.csv");
    let out = gridmap(&[
        "bench",
        "--input",
        s(&input),
        "--tols",
        "0,0.01,0.03,0.06,0.2",
        "--out",
        s(&csv_path),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        [
            "simplify_tol",
            "n_region",
            "n_boundary",
            "n_sum",
            "n_ratio",
            "wall_time_s"
        ]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 5);
    let n_boundary: Vec<usize> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(
        n_boundary.windows(2).all(|w| w[1] <= w[0]),
        "{n_boundary:?}"
    );
    for r in &rows {
        let (nr, nb, ns): (usize, usize, usize) = (
            r[1].parse().unwrap(),
            r[2].parse().unwrap(),
            r[3].parse().unwrap(),
        );
        assert_eq!(ns, nr + nb);
        assert_eq!(r[4].parse::<f64>().unwrap(), nr as f64 / nb as f64);
    }

    let out = gridmap(&[
        "bench",
        "--input",
        s(&input),
        "--tols",
        "0,abc",
        "--out",
        s(&csv_path),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_variable_must_be_numeric() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_regions(dir.path(), "in.geojson", &tiling(2, 2));
    let out = Command::new(env!("CARGO_BIN_EXE_gridmap"))
        .args([
            "generate",
            "--input",
            s(&input),
            "--out",
            s(&dir.path().join("o")),
        ])
        .env("GRIDMAP_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
