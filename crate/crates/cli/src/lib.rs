//! Command-line front end: run configured engines side by side, sweep a
//! parameter across values, or execute the built-in verification suites.
//!
//! Exit codes: 0 success, 1 verification-suite failure, 2 invalid input or
//! configuration, 3 numerical guard tripped mid-run.

pub mod config;
pub mod engines;
pub mod output;
pub mod verify;

use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use moment_lab_core::moments::ermakov_invariant;
use moment_lab_core::Error;

use config::Config;

/// Terminal failure: a message for stderr and the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Guard { .. } => 3,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

#[derive(Parser)]
#[command(
    name = "moment-lab",
    version,
    about = "Moment dynamics of a quantum particle in a time-dependent potential",
    propagate_version = true
)]
struct Cli {
    /// Output directory (overrides the config and MOMENT_LAB_OUT).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for sweeps; 0 keeps the library default.
    #[arg(long, global = true, default_value_t = 0, value_name = "N")]
    threads: usize,

    /// Permit profiles where ω(t)² vanishes or changes sign.
    #[arg(long, global = true)]
    allow_inverted: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every engine listed in a config file and compare their output.
    Run {
        /// JSON configuration file.
        config: PathBuf,
    },
    /// Run one self-check suite; exits 1 if any check fails.
    Verify {
        suite: Suite,
        /// Override the spectral grid size (oracle suite only).
        #[arg(long, value_name = "N")]
        grid_n: Option<usize>,
    },
    /// Re-run a config across several values of one parameter.
    Sweep {
        /// JSON configuration file.
        config: PathBuf,
        /// Dotted path into the config, e.g. potential.profile.epsilon.
        #[arg(long)]
        param: String,
        /// Comma-separated values substituted at the path.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
}

/// The verification suites, from exact algebra to the spectral cross-check.
#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum Suite {
    /// Exact operator-algebra identities.
    Algebra,
    /// Closed-form moment solutions against the layer equations.
    ClosedForm,
    /// Conserved quantities and their sensitivity.
    Invariants,
    /// Spectral integrator against the moment hierarchy.
    Oracle,
}

pub fn run() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .try_init()
        .ok();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            e.print().ok();
            return code;
        }
    };

    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .ok();
    }

    let result = match &cli.cmd {
        Cmd::Run { config } => cmd_run(config, cli.out.as_deref(), cli.allow_inverted),
        Cmd::Verify { suite, grid_n } => return verify::run_suite(*suite, *grid_n),
        Cmd::Sweep { config, param, values } => {
            cmd_sweep(config, param, values, cli.out.as_deref(), cli.allow_inverted)
        }
    };

    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

/// Output directory precedence: --out, then the config, then MOMENT_LAB_OUT,
/// then ./out.
fn resolve_out(cli_out: Option<&Path>, cfg: &Config) -> PathBuf {
    if let Some(dir) = cli_out {
        return dir.to_path_buf();
    }
    if let Some(dir) = &cfg.output.directory {
        return dir.clone();
    }
    if let Some(dir) = std::env::var_os("MOMENT_LAB_OUT") {
        return PathBuf::from(dir);
    }
    PathBuf::from("out")
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure {
        code: 2,
        message: format!("cannot create output directory {}: {e}", dir.display()),
    })
}

fn cmd_run(config: &Path, out: Option<&Path>, allow_inverted: bool) -> Result<(), Failure> {
    let cfg = Config::load(config)?;
    let out_dir = resolve_out(out, &cfg);
    let loaded = cfg.prepare(allow_inverted)?;

    let runs = engines::run_engines(&loaded)?;
    for run in &runs {
        let last = run.series.last();
        let mut line = format!(
            "engine {}: {} samples, final t = {:.6}",
            run.engine,
            run.series.states.len(),
            last.t
        );
        for (name, value) in &run.diagnostics {
            line.push_str(&format!(", {name} = {value:.3e}"));
        }
        println!("{line}");
    }

    let comparisons = output::compare_runs(&runs);
    for line in output::comparison_lines(&comparisons) {
        println!("{line}");
    }

    ensure_dir(&out_dir)?;
    let mut written = output::write_engine_outputs(&out_dir, &loaded, &runs)?;
    written.push(output::write_summary(&out_dir, &runs, &comparisons)?);
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Substitute `text` at the dotted `path` inside a JSON tree. Values that
/// parse as JSON literals are inserted typed; anything else is a string.
fn override_path(
    tree: &mut serde_json::Value,
    path: &str,
    text: &str,
) -> Result<(), Failure> {
    let mut node = &mut *tree;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        let next = match node {
            serde_json::Value::Object(map) => map.get_mut(*seg),
            serde_json::Value::Array(items) => seg
                .parse::<usize>()
                .ok()
                .and_then(|idx| items.get_mut(idx)),
            _ => None,
        };
        let Some(next) = next else {
            return Err(Failure {
                code: 2,
                message: format!("sweep path '{path}' has no entry '{seg}' in the config"),
            });
        };
        if last {
            *next = serde_json::from_str(text)
                .unwrap_or_else(|_| serde_json::Value::String(text.to_string()));
            return Ok(());
        }
        node = next;
    }
    unreachable!("split('.') yields at least one segment")
}

fn subdir_name(param: &str, value: &str) -> String {
    format!("{param}={value}")
        .chars()
        .map(|c| if c == '/' || c == '\\' || c.is_whitespace() { '_' } else { c })
        .collect()
}

fn cmd_sweep(
    config: &Path,
    param: &str,
    values: &[String],
    out: Option<&Path>,
    allow_inverted: bool,
) -> Result<(), Failure> {
    let text = fs::read_to_string(config).map_err(|e| Failure {
        code: 2,
        message: format!("cannot read {}: {e}", config.display()),
    })?;
    let base: serde_json::Value = serde_json::from_str(&text).map_err(|e| Failure {
        code: 2,
        message: format!("{} is not valid JSON: {e}", config.display()),
    })?;
    let base_cfg = Config::parse(&text)?;
    let out_dir = resolve_out(out, &base_cfg);
    ensure_dir(&out_dir)?;

    // Validate the path once against the base tree so a typo fails before
    // any run starts.
    {
        let mut probe = base.clone();
        override_path(&mut probe, param, &values[0])?;
    }

    use rayon::prelude::*;
    let results: Vec<Result<Vec<String>, Failure>> = values
        .par_iter()
        .map(|value| sweep_one(&base, param, value, &out_dir, allow_inverted))
        .collect();

    let mut rows = Vec::new();
    let mut first_failure: Option<Failure> = None;
    for (value, result) in values.iter().zip(results) {
        match result {
            Ok(mut r) => rows.append(&mut r),
            Err(f) => {
                eprintln!("error: {param} = {value}: {}", f.message);
                first_failure.get_or_insert(Failure {
                    code: f.code,
                    message: format!("sweep member {param} = {value} failed"),
                });
            }
        }
    }

    let mut csv = String::from("param,value,engine,samples,final_t,C2_final,vs_first_overall\n");
    for row in &rows {
        csv.push_str(row);
        csv.push('\n');
    }
    let path = out_dir.join("sweep_summary.csv");
    fs::write(&path, csv).map_err(|e| Failure {
        code: 2,
        message: format!("cannot write {}: {e}", path.display()),
    })?;
    println!("wrote {}", path.display());

    match first_failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

/// Run one sweep member into its own subdirectory; returns summary rows.
fn sweep_one(
    base: &serde_json::Value,
    param: &str,
    value: &str,
    out_dir: &Path,
    allow_inverted: bool,
) -> Result<Vec<String>, Failure> {
    let mut tree = base.clone();
    override_path(&mut tree, param, value)?;
    let cfg: Config = serde_json::from_value(tree).map_err(|e| Failure {
        code: 2,
        message: format!("config invalid after override: {e}"),
    })?;
    let sub = out_dir.join(subdir_name(param, value));
    ensure_dir(&sub)?;
    let loaded = cfg.prepare(allow_inverted)?;
    let runs = engines::run_engines(&loaded)?;
    output::write_engine_outputs(&sub, &loaded, &runs)?;
    let comparisons = output::compare_runs(&runs);
    output::write_summary(&sub, &runs, &comparisons)?;

    let first = runs[0].engine;
    let rows = runs
        .iter()
        .map(|run| {
            let last = run.series.last();
            let c2 = last
                .layer(2)
                .and_then(|l| ermakov_invariant(l).ok())
                .map(|c| format!("{c:e}"))
                .unwrap_or_default();
            let vs_first = comparisons
                .iter()
                .find(|c| c.a.name() == first.name() && c.b.name() == run.engine.name())
                .map(|c| format!("{:e}", c.overall))
                .unwrap_or_default();
            format!(
                "{param},{value},{},{},{:e},{c2},{vs_first}",
                run.engine.name(),
                run.series.states.len(),
                last.t
            )
        })
        .collect();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_replaces_nested_and_typed_values() {
        let mut tree: serde_json::Value = serde_json::from_str(
            r#"{"potential": {"profile": {"type": "sinusoidal", "epsilon": 0.1}},
                "run": {"dt": 0.001},
                "breakpoints": [[0.0, 1.0], [2.0, 1.5]]}"#,
        )
        .unwrap();
        override_path(&mut tree, "potential.profile.epsilon", "0.4").unwrap();
        assert_eq!(tree["potential"]["profile"]["epsilon"], 0.4);
        override_path(&mut tree, "breakpoints.1.1", "2.5").unwrap();
        assert_eq!(tree["breakpoints"][1][1], 2.5);
        override_path(&mut tree, "potential.profile.type", "constant").unwrap();
        assert_eq!(tree["potential"]["profile"]["type"], "constant");
        assert!(override_path(&mut tree, "potential.missing", "1").is_err());
    }

    #[test]
    fn subdir_names_are_path_safe() {
        assert_eq!(
            subdir_name("run.dt", "1e-3"),
            "run.dt=1e-3"
        );
        assert_eq!(subdir_name("a/b", "x y"), "a_b=x_y");
    }
}
