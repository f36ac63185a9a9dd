//! Deterministic output writers: per-engine CSV/JSON series files, the
//! cross-engine comparison, and the machine-readable run summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use moment_lab_core::moments::{
    ermakov_invariant, higher_invariant, uncertainty_product, MomentState,
};
use serde_json::json;

use crate::config::{Engine, Format, Loaded};
use crate::engines::EngineRun;
use crate::Failure;

const TOOL: &str = concat!("moment-lab ", env!("CARGO_PKG_VERSION"));

/// Degrees tracked by a series, read off its first state.
fn degrees(run: &EngineRun) -> Vec<u32> {
    run.series.states[0]
        .layers()
        .iter()
        .map(|l| l.n())
        .collect()
}

/// Invariant columns, in a fixed order so the schema follows from the tracked
/// degrees alone: C (the degree-2 quadratic), Delta (the covariance
/// determinant), then C{n} for every even tracked degree.
fn invariant_names(degrees: &[u32]) -> Vec<String> {
    let mut names = Vec::new();
    if degrees.contains(&2) {
        names.push("C".to_string());
    }
    if degrees.contains(&1) && degrees.contains(&2) {
        names.push("Delta".to_string());
    }
    for &n in degrees {
        if n >= 2 && n % 2 == 0 {
            names.push(format!("C{n}"));
        }
    }
    names
}

fn invariant_values(state: &MomentState, degrees: &[u32]) -> Vec<f64> {
    let mut values = Vec::new();
    if degrees.contains(&2) {
        values.push(
            ermakov_invariant(state.layer(2).expect("layer present"))
                .expect("degree checked"),
        );
    }
    if degrees.contains(&1) && degrees.contains(&2) {
        values.push(
            uncertainty_product(state.layer(1).unwrap(), state.layer(2).unwrap())
                .expect("layer degrees checked"),
        );
    }
    for &n in degrees {
        if n >= 2 && n % 2 == 0 {
            values.push(higher_invariant(state.layer(n).expect("layer present")));
        }
    }
    values
}

fn metadata_lines(loaded: &Loaded, run: &EngineRun) -> String {
    let cfg = &loaded.cfg;
    let mut meta = String::new();
    let _ = writeln!(meta, "# engine: {}", run.engine);
    let _ = writeln!(meta, "# tool: {TOOL}");
    let _ = writeln!(meta, "# m: {:e}", loaded.params.m());
    let _ = writeln!(meta, "# hbar: {:e}", loaded.params.hbar());
    let _ = writeln!(
        meta,
        "# units: natural units fixed by the m and hbar values above; every column shares them"
    );
    let _ = writeln!(meta, "# v0: {:e}", cfg.potential.v0);
    let _ = writeln!(meta, "# v4: {:e}", cfg.potential.v4);
    let _ = writeln!(meta, "# profile: {}", cfg.potential.profile);
    let _ = writeln!(
        meta,
        "# run: t0={:e} t1={:e} dt={:e} n_max={} sample_stride={}",
        cfg.run.t0, cfg.run.t1, cfg.run.dt, cfg.run.n_max, cfg.run.sample_stride
    );
    for (name, value) in &run.diagnostics {
        let _ = writeln!(meta, "# {name}: {value:e}");
    }
    meta
}

fn csv_text(loaded: &Loaded, run: &EngineRun) -> String {
    let degrees = degrees(run);
    let mut text = metadata_lines(loaded, run);

    // Column On_l is the degree-n symmetrized moment with l momentum factors;
    // the label stays clear of the delimiter.
    let mut header = vec!["t".to_string()];
    for &n in &degrees {
        for l in 0..=n {
            header.push(format!("O{n}_{l}"));
        }
    }
    header.extend(invariant_names(&degrees));
    let _ = writeln!(text, "{}", header.join(","));

    for state in &run.series.states {
        let mut row = vec![format!("{:e}", state.t)];
        for &n in &degrees {
            let layer = state.layer(n).expect("uniform layer structure");
            for l in 0..=n {
                row.push(format!("{:e}", layer.value(l)));
            }
        }
        for v in invariant_values(state, &degrees) {
            row.push(format!("{v:e}"));
        }
        let _ = writeln!(text, "{}", row.join(","));
    }
    text
}

fn json_value(loaded: &Loaded, run: &EngineRun) -> serde_json::Value {
    let degrees = degrees(run);
    let cfg = &loaded.cfg;
    let times: Vec<f64> = run.series.states.iter().map(|s| s.t).collect();

    let mut layers = serde_json::Map::new();
    for &n in &degrees {
        let rows: Vec<Vec<f64>> = run
            .series
            .states
            .iter()
            .map(|s| s.layer(n).unwrap().values().to_vec())
            .collect();
        layers.insert(n.to_string(), json!(rows));
    }

    let mut invariants = serde_json::Map::new();
    for (idx, name) in invariant_names(&degrees).into_iter().enumerate() {
        let column: Vec<f64> = run
            .series
            .states
            .iter()
            .map(|s| invariant_values(s, &degrees)[idx])
            .collect();
        invariants.insert(name, json!(column));
    }

    let diagnostics: serde_json::Map<String, serde_json::Value> = run
        .diagnostics
        .iter()
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect();

    json!({
        "engine": run.engine.name(),
        "tool": TOOL,
        "system": {"m": loaded.params.m(), "hbar": loaded.params.hbar()},
        "potential": {
            "v0": cfg.potential.v0,
            "v4": cfg.potential.v4,
            "profile": cfg.potential.profile.to_string(),
        },
        "run": {
            "t0": cfg.run.t0,
            "t1": cfg.run.t1,
            "dt": cfg.run.dt,
            "n_max": cfg.run.n_max,
            "sample_stride": cfg.run.sample_stride,
        },
        "times": times,
        "layers": layers,
        "invariants": invariants,
        "diagnostics": diagnostics,
    })
}

/// Write every requested format for every engine run; returns the paths
/// written.
pub fn write_engine_outputs(
    out_dir: &Path,
    loaded: &Loaded,
    runs: &[EngineRun],
) -> Result<Vec<PathBuf>, Failure> {
    let mut written = Vec::new();
    for run in runs {
        for format in &loaded.cfg.output.formats {
            let (name, text) = match format {
                Format::Csv => (
                    format!("{}.csv", run.engine.name()),
                    csv_text(loaded, run),
                ),
                Format::Json => (
                    format!("{}.json", run.engine.name()),
                    format!("{:#}\n", json_value(loaded, run)),
                ),
            };
            let path = out_dir.join(name);
            fs::write(&path, text).map_err(|e| Failure {
                code: 2,
                message: format!("cannot write {}: {e}", path.display()),
            })?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Worst normalized disagreement between two engine series, per degree and
/// overall. Samples are matched by time; differences are scaled by
/// max(1, |a|, |b|).
pub struct PairComparison {
    pub a: Engine,
    pub b: Engine,
    pub matched: usize,
    pub per_degree: Vec<(u32, f64)>,
    pub overall: f64,
}

pub fn compare_runs(runs: &[EngineRun]) -> Vec<PairComparison> {
    let mut out = Vec::new();
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            out.push(compare_pair(&runs[i], &runs[j]));
        }
    }
    out
}

fn compare_pair(a: &EngineRun, b: &EngineRun) -> PairComparison {
    let common: Vec<u32> = degrees(a)
        .into_iter()
        .filter(|n| degrees(b).contains(n))
        .collect();
    let mut per_degree: Vec<(u32, f64)> = common.iter().map(|&n| (n, 0.0)).collect();
    let mut matched = 0usize;

    let mut jb = 0usize;
    for sa in &a.series.states {
        while jb < b.series.states.len() && b.series.states[jb].t < sa.t - 1e-9 {
            jb += 1;
        }
        let Some(sb) = b.series.states.get(jb) else {
            break;
        };
        if (sb.t - sa.t).abs() > 1e-9 {
            continue;
        }
        matched += 1;
        for (n, worst) in per_degree.iter_mut() {
            let (la, lb) = (sa.layer(*n).unwrap(), sb.layer(*n).unwrap());
            for l in 0..=*n {
                let (va, vb) = (la.value(l), lb.value(l));
                let denom = va.abs().max(vb.abs()).max(1.0);
                *worst = worst.max((va - vb).abs() / denom);
            }
        }
    }
    let overall = per_degree.iter().fold(0.0f64, |acc, (_, w)| acc.max(*w));
    PairComparison {
        a: a.engine,
        b: b.engine,
        matched,
        per_degree,
        overall,
    }
}

/// Human-readable comparison lines for stdout.
pub fn comparison_lines(comparisons: &[PairComparison]) -> Vec<String> {
    comparisons
        .iter()
        .map(|c| {
            let mut line = format!(
                "comparison {} vs {}: {} matched samples, worst {:.3e}",
                c.a, c.b, c.matched, c.overall
            );
            for (n, w) in &c.per_degree {
                let _ = write!(line, " | degree {n}: {w:.3e}");
            }
            line
        })
        .collect()
}

/// Write summary.json: engines, their diagnostics, and all comparisons.
pub fn write_summary(
    out_dir: &Path,
    runs: &[EngineRun],
    comparisons: &[PairComparison],
) -> Result<PathBuf, Failure> {
    let engines: Vec<serde_json::Value> = runs
        .iter()
        .map(|run| {
            let diagnostics: serde_json::Map<String, serde_json::Value> = run
                .diagnostics
                .iter()
                .map(|(k, v)| (k.to_string(), json!(v)))
                .collect();
            json!({
                "name": run.engine.name(),
                "samples": run.series.states.len(),
                "diagnostics": diagnostics,
            })
        })
        .collect();
    let comparisons: Vec<serde_json::Value> = comparisons
        .iter()
        .map(|c| {
            let per_degree: serde_json::Map<String, serde_json::Value> = c
                .per_degree
                .iter()
                .map(|(n, w)| (n.to_string(), json!(w)))
                .collect();
            json!({
                "a": c.a.name(),
                "b": c.b.name(),
                "matched": c.matched,
                "overall": c.overall,
                "per_degree": per_degree,
            })
        })
        .collect();
    let value = json!({
        "tool": TOOL,
        "engines": engines,
        "comparisons": comparisons,
    });
    let path = out_dir.join("summary.json");
    fs::write(&path, format!("{value:#}\n")).map_err(|e| Failure {
        code: 2,
        message: format!("cannot write {}: {e}", path.display()),
    })?;
    Ok(path)
}
