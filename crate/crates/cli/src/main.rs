mod args;
mod job;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde_json::{json, Value};

use args::{Cli, Format};
use job::{Artifact, JobError};

const SCHEMA_VERSION: &str = "1";

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(cli: &Cli) -> Result<(), JobError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(JobError::Config {
                field: "threads",
                reason: "must be at least 1".into(),
            });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| JobError::Config {
                field: "threads",
                reason: e.to_string(),
            })?;
    }
    let format = cli.format.unwrap_or_else(|| cli.command.default_format());
    let mut artifact = job::run(&cli.command, format, cli.threads)?;
    let meta = metadata(&artifact, cli.no_timestamp);
    match (&cli.out, format) {
        (Some(path), Format::Csv) => {
            write_atomic(path, artifact.csv.as_bytes())?;
            let sidecar = path.with_extension(match path.extension() {
                Some(ext) => format!("{}.meta.json", ext.to_string_lossy()),
                None => "meta.json".into(),
            });
            write_atomic(&sidecar, &pretty(&meta))?;
        }
        (Some(path), Format::Json) => write_atomic(path, &pretty(&with_result(meta, &artifact)))?,
        (None, Format::Csv) => std::io::stdout().write_all(artifact.csv.as_bytes())?,
        (None, Format::Json) => {
            std::io::stdout().write_all(&pretty(&with_result(meta, &artifact)))?
        }
    }
    match artifact.deferred_error.take() {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn metadata(artifact: &Artifact, no_timestamp: bool) -> Value {
    let mut meta = json!({
        "schema_version": SCHEMA_VERSION,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config": artifact.config,
    });
    if !no_timestamp {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        meta["generated_unix"] = json!(secs);
    }
    meta
}

fn with_result(mut meta: Value, artifact: &Artifact) -> Value {
    meta["result"] = artifact.json.clone();
    meta
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("json values serialize");
    out.push(b'\n');
    out
}

/// Temp file in the destination directory, then rename over the target.
fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
