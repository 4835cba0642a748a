use std::collections::BTreeMap;
use std::fs;
use std::io::IsTerminal;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use espim_cli::analyze::{self, AnalyzeOptions, REGION_COLUMNS, SCATTER_COLUMNS};
use espim_cli::collector::{self, CollectorConfig, DEFAULT_MAX_BODY_BYTES, TOKEN_ENV};
use espim_cli::design::{parse_resolution, Design, DesignScore};
use espim_cli::output::{csv_bytes, expand_inputs, write_atomic};
use espim_cli::{ExitClass, Failure, DEFAULT_SEED};
use espim_core::fixation::FixationParams;
use espim_core::session::parse_session;
use espim_core::stats::{resolution_diff, Resolution};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "espim", version, about = "Eye-strain scoring and session analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check session logs against the schema and invariants.
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Compute metrics and the full analysis battery over session logs.
    Analyze {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Replace a session's gaze stream with a CSV (`ID=PATH`).
        #[arg(long = "gaze-csv", value_parser = parse_gaze_csv)]
        gaze_csv: Vec<(String, PathBuf)>,
    },
    /// Score interface designs without eye-tracking data.
    Estimate {
        /// `screen=WxH,shape=circle|rectangle,w=..,[h=..,]d=..,td=..[,name=..]`
        #[arg(long = "design", required = true)]
        designs: Vec<Design>,
        #[arg(long)]
        json: bool,
    },
    /// Cluster target, fixation, click and error positions into regions.
    Cluster {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Directory for clusters.csv and scatter.csv; prints regions when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Successive score differences over a resolution series.
    ResolutionDiff {
        /// CSV with `resolution,espim` columns, e.g. `1920x1080,34.34`.
        input: PathBuf,
    },
    /// Run the session collector.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = TOKEN_ENV, hide_env_values = true)]
        token: Option<String>,
        #[arg(long, default_value_t = DEFAULT_MAX_BODY_BYTES)]
        max_body_bytes: usize,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 60.0)]
    dispersion_px: f64,
    #[arg(long, default_value_t = 200.0)]
    min_fixation_ms: f64,
    /// Number of k-means regions.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Leave out invalid sessions instead of aborting.
    #[arg(long)]
    skip_invalid: bool,
}

impl Common {
    fn options(&self) -> AnalyzeOptions {
        AnalyzeOptions {
            fixation: FixationParams {
                dispersion_px: self.dispersion_px,
                min_duration_ms: self.min_fixation_ms,
            },
            seed: self.seed,
            k: self.k,
            skip_invalid: self.skip_invalid,
            gaze_csv: BTreeMap::new(),
        }
    }
}

fn parse_gaze_csv(s: &str) -> Result<(String, PathBuf), String> {
    let (id, path) = s.split_once('=').ok_or("expected ID=PATH")?;
    Ok((id.to_string(), PathBuf::from(path)))
}

fn validate(paths: &[PathBuf]) -> Result<(), Failure> {
    let files = expand_inputs(paths).map_err(|e| Failure::io(e.to_string()))?;
    let mut worst = ExitClass::Ok;
    for path in files {
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                worst = ExitClass::Io;
                continue;
            }
        };
        match parse_session(&bytes) {
            Ok(s) => println!("ok {} ({})", path.display(), s.session_id),
            Err(e) => {
                let class = if e.is_truncated() { ExitClass::Io } else { ExitClass::Invalid };
                println!("invalid {}", path.display());
                for v in e.violations() {
                    println!("  {v}");
                }
                if class as u8 > worst as u8 {
                    worst = class;
                }
            }
        }
    }
    match worst {
        ExitClass::Ok => Ok(()),
        class => Err(Failure { class, message: "some inputs failed validation".into() }),
    }
}

fn run_analyze(paths: &[PathBuf], out: &Path, opts: AnalyzeOptions) -> Result<(), Failure> {
    let report = analyze::analyze(paths, &opts)?;
    for w in &report.warnings {
        tracing::warn!("{w}");
    }
    let written = analyze::write_report(&report, out)?;
    println!("analyzed {} session(s)", report.sessions.len());
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn estimate(designs: &[Design], json: bool) -> Result<(), Failure> {
    let mut scores = Vec::new();
    for (i, d) in designs.iter().enumerate() {
        let name = if d.name.is_empty() { format!("design-{}", i + 1) } else { d.name.clone() };
        let estimate = d.score().map_err(|e| Failure::invalid(format!("{name}: {e}")))?;
        scores.push(DesignScore { name, estimate });
    }
    if json {
        let text = serde_json::to_string_pretty(&scores).map_err(|e| Failure::io(e.to_string()))?;
        println!("{text}");
        return Ok(());
    }
    println!("{:<16} {:>10} {:>10} {:>10}", "design", "low", "mid", "high");
    for s in &scores {
        println!(
            "{:<16} {:>10.4} {:>10.4} {:>10.4}",
            s.name,
            s.estimate.low.value(),
            s.estimate.mid.value(),
            s.estimate.high.value()
        );
    }
    if scores.len() > 1 {
        let mut order: Vec<&DesignScore> = scores.iter().collect();
        order.sort_by(|a, b| a.estimate.mid.value().total_cmp(&b.estimate.mid.value()));
        let names: Vec<&str> = order.iter().map(|s| s.name.as_str()).collect();
        println!("ordering (lowest strain first): {}", names.join(" < "));
    }
    Ok(())
}

fn cluster(paths: &[PathBuf], out: Option<&Path>, opts: &AnalyzeOptions) -> Result<(), Failure> {
    if opts.k == 0 {
        return Err(Failure::usage("--k must be at least 1"));
    }
    let loaded = analyze::load_sessions(paths, opts)?;
    if loaded.sessions.is_empty() {
        return Err(Failure::invalid("no valid sessions"));
    }
    let mut warnings = loaded.warnings;
    let regions = analyze::region_report(&loaded.sessions, opts, &mut warnings)?;
    for w in &warnings {
        tracing::warn!("{w}");
    }
    let summary = regions
        .clusters
        .as_ref()
        .ok_or_else(|| Failure::invalid(warnings.last().cloned().unwrap_or_default()))?;
    let rows = analyze::region_rows("cluster", summary);
    let table = csv_bytes(&REGION_COLUMNS, &rows).map_err(|e| Failure::io(e.to_string()))?;
    match out {
        None => print!("{}", String::from_utf8_lossy(&table)),
        Some(dir) => {
            let scatter: Vec<_> = summary
                .scatter
                .iter()
                .map(|p| ("cluster", p.x, p.y, p.kind.as_str(), &p.region))
                .collect();
            let scatter = csv_bytes(&SCATTER_COLUMNS, &scatter).map_err(|e| Failure::io(e.to_string()))?;
            fs::create_dir_all(dir).map_err(|e| Failure::io(format!("{}: {e}", dir.display())))?;
            for (name, bytes) in [("clusters.csv", table), ("scatter.csv", scatter)] {
                let path = dir.join(name);
                write_atomic(&path, &bytes).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn run_resolution_diff(input: &Path) -> Result<(), Failure> {
    let mut reader = csv::Reader::from_path(input).map_err(|e| Failure::io(format!("{}: {e}", input.display())))?;
    let mut points = Vec::new();
    for (i, record) in reader.deserialize::<(String, f64)>().enumerate() {
        let (res, value) = record.map_err(|e| Failure::invalid(format!("row {}: {e}", i + 1)))?;
        let (w, h) = parse_resolution(&res).map_err(|e| Failure::invalid(format!("row {}: {e}", i + 1)))?;
        points.push((Resolution::new(w as u32, h as u32), value));
    }
    points.sort_by_key(|p| p.0.pixels());
    let table = resolution_diff(&points).map_err(|e| Failure::invalid(e.to_string()))?;
    println!("resolution,espim,diff");
    for r in &table.rows {
        println!("{},{},{:.2}", r.resolution, r.value, r.diff);
    }
    println!("total,,{:.2}", table.total);
    Ok(())
}

fn serve(bind: SocketAddr, out: PathBuf, token: Option<String>, max_body_bytes: usize) -> Result<(), Failure> {
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::io(e.to_string()))?;
    let config = CollectorConfig { out_dir: out, token: token.filter(|t| !t.is_empty()), max_body_bytes };
    runtime
        .block_on(collector::serve(bind, config))
        .map_err(|e| Failure::io(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { paths } => validate(&paths),
        Command::Analyze { paths, out, common, gaze_csv } => {
            let mut opts = common.options();
            for (id, path) in gaze_csv {
                if opts.gaze_csv.insert(id.clone(), path).is_some() {
                    return Err(Failure::usage(format!("--gaze-csv given twice for `{id}`")));
                }
            }
            run_analyze(&paths, &out, opts)
        }
        Command::Estimate { designs, json } => estimate(&designs, json),
        Command::Cluster { paths, out, common } => cluster(&paths, out.as_deref(), &common.options()),
        Command::ResolutionDiff { input } => run_resolution_diff(&input),
        Command::Serve { bind, out, token, max_body_bytes } => serve(bind, out, token, max_body_bytes),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .with_ansi(std::io::stderr().is_terminal())
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { ExitClass::Usage as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.class as u8)
        }
    }
}
