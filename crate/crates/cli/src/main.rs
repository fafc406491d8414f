//! `pentaspec run <config>`: batch spectral computations driven by a TOML file.

mod config;
mod output;
mod tasks;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use config::{ConfigError, Format, JobConfig};
use output::{write_report, write_text, ErrorBody, Report};
use tasks::JobError;

#[derive(Parser)]
#[command(name = "pentaspec", version, about = "Spectra of penta-diagonal band operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the job described by a config file.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output.dir`.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Seed for Monte-Carlo norm sampling.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

struct Job {
    config_path: PathBuf,
    out_dir: Option<PathBuf>,
    format: Option<Format>,
    seed: u64,
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn base_report(seed: u64) -> Report {
    Report {
        tool: "pentaspec",
        version: env!("CARGO_PKG_VERSION"),
        library_version: pentaspec::VERSION,
        config_sha256: None,
        timestamp_unix: timestamp(),
        task: None,
        seed,
        acknowledge_hypothesis: false,
        heuristic: false,
        status: "ok",
        exit_code: 0,
        files: Vec::new(),
        result: None,
        error: None,
    }
}

fn execute(job: &Job, report: &mut Report) -> Result<PathBuf, (Option<PathBuf>, JobError)> {
    let fallback = job.out_dir.clone();
    let text = fs::read(&job.config_path).map_err(|source| {
        let e = ConfigError::Read {
            path: job.config_path.clone(),
            source,
        };
        (fallback.clone(), JobError::Config(e.to_string()))
    })?;
    report.config_sha256 = Some(format!("{:x}", Sha256::digest(&text)));
    let text = String::from_utf8(text).map_err(|e| (fallback.clone(), JobError::Config(e.to_string())))?;
    let cfg = JobConfig::parse(&text).map_err(|e| (fallback.clone(), JobError::Config(e.to_string())))?;

    let dir = job
        .out_dir
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("pentaspec-out"));
    let format = job.format.or(cfg.output.format).unwrap_or(Format::Both);
    report.task = serde_json::to_value(cfg.task).ok().and_then(|v| v.as_str().map(String::from));
    report.acknowledge_hypothesis = cfg.acknowledge_hypothesis;
    let fail = |e: JobError| (Some(dir.clone()), e);
    fs::create_dir_all(&dir).map_err(|e| fail(e.into()))?;

    let out = tasks::run(&cfg, job.seed).map_err(fail)?;
    report.heuristic = out.heuristic;
    if format.csv() {
        for (name, body) in &out.csv {
            write_text(&dir, name, body).map_err(|e| fail(e.into()))?;
            report.files.push(name.clone());
        }
    }
    if !out.plot.series.is_empty() {
        write_text(&dir, "plot.dat", &out.plot.data()).map_err(|e| fail(e.into()))?;
        write_text(&dir, "plot.gp", &out.plot.script("plot.dat")).map_err(|e| fail(e.into()))?;
        report.files.push("plot.dat".into());
        report.files.push("plot.gp".into());
    }
    if format.json() {
        report.result = Some(out.result);
    }
    Ok(dir)
}

fn finish(dir: &Path, report: &Report) {
    if let Err(e) = fs::create_dir_all(dir).and_then(|_| write_report(dir, report)) {
        eprintln!("error: cannot write {}: {e}", dir.join("report.json").display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run {
        config,
        out_dir,
        format,
        threads,
        seed,
    } = cli.command;
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let job = Job {
        config_path: config,
        out_dir,
        format,
        seed,
    };
    let mut report = base_report(seed);
    match execute(&job, &mut report) {
        Ok(dir) => {
            finish(&dir, &report);
            ExitCode::SUCCESS
        }
        Err((dir, err)) => {
            let code = err.exit_code();
            eprintln!("error: {}", err.message());
            report.status = "error";
            report.exit_code = code;
            report.error = Some(ErrorBody {
                kind: err.kind(),
                message: err.message(),
                attachment: err.attachment(),
            });
            finish(&dir.unwrap_or_else(|| PathBuf::from("pentaspec-out")), &report);
            ExitCode::from(code as u8)
        }
    }
}
