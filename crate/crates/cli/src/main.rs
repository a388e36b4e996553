use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use morphkit_cli::config::ConfigFile;
use morphkit_cli::run::{self, RunInputs, DEFAULT_TICKS};
use morphkit_cli::{validate, Failure};
use morphkit_core::Engine;
use morphkit_service::ServeOptions;

#[derive(Parser)]
#[command(name = "morphkit", version, about = "Validate, run and serve morph specifications")]
struct Cli {
    /// Engine settings file (default: ./morphkit.toml when present).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check morph files. Exit 0 when clean, 1 on syntax or schema errors,
    /// 2 on semantic errors. Diagnostics go to stderr as JSONL.
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Print, for each state, how it matches these vis spec files.
        #[arg(long, num_args = 1..)]
        explain: Vec<PathBuf>,
    },
    /// Run a scenario headlessly and write the event log.
    Run {
        #[arg(long)]
        scene: PathBuf,
        /// Morph files or directories of them.
        #[arg(long, required = true, num_args = 1..)]
        morphs: Vec<PathBuf>,
        /// JSONL trace of timestamped scene commands.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TICKS)]
        ticks: u64,
        #[arg(long, env = "DEIMOS_SEED")]
        seed: Option<u64>,
        /// Event log destination (JSONL).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write per-tick signal values (JSONL) here.
        #[arg(long)]
        trace_signals: Option<PathBuf>,
        /// Write resolved keyframes of every started transition (JSONL) here.
        #[arg(long)]
        dump_keyframes: Option<PathBuf>,
    },
    /// Print a morph's state machine as Graphviz DOT.
    ExportDot { path: PathBuf },
    /// Run the engine live and stream its state over a websocket.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        morphs: Vec<PathBuf>,
        #[arg(long, default_value_t = 60.0)]
        hz: f64,
        #[arg(long, env = "DEIMOS_SEED")]
        seed: Option<u64>,
        /// Static playground bundle to serve over HTTP.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        /// Record the session's commands and events into this directory.
        #[arg(long)]
        record: Option<PathBuf>,
    },
}

fn write_file(path: &PathBuf, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))
}

/// Writes to stdout, ignoring a closed pipe (`morphkit run ... | head`).
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn main_inner(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Cmd::Validate { paths, explain } => {
            let report = validate::validate(&paths, &explain)?;
            let mut err = std::io::stderr().lock();
            for d in &report.diagnostics {
                writeln!(err, "{d}")?;
            }
            let text: String = report.explain.iter().map(|e| format!("{e}\n")).collect();
            emit(&text);
            Ok(report.exit)
        }
        Cmd::Run {
            scene,
            morphs,
            trace,
            ticks,
            seed,
            out,
            trace_signals,
            dump_keyframes,
        } => {
            let config = ConfigFile::load(cli.config.as_deref())?.engine_config(seed);
            let inputs = RunInputs {
                scene,
                morphs,
                trace,
                ticks,
                config,
                trace_signals: trace_signals.is_some(),
                dump_keyframes: dump_keyframes.is_some(),
            };
            let output = run::run(&inputs)?;
            if let Some(p) = &out {
                write_file(p, &output.log)?;
            }
            if let (Some(p), Some(text)) = (&trace_signals, &output.signals) {
                write_file(p, text)?;
            }
            if let (Some(p), Some(text)) = (&dump_keyframes, &output.keyframes) {
                write_file(p, text)?;
            }
            emit(&format!("{}\n", serde_json::to_string_pretty(&output.summary)?));
            Ok(0)
        }
        Cmd::ExportDot { path } => {
            emit(&morphkit_cli::export_dot(&path)?);
            Ok(0)
        }
        Cmd::Serve {
            port,
            host,
            scene,
            morphs,
            hz,
            seed,
            static_dir,
            record,
        } => {
            let config = ConfigFile::load(cli.config.as_deref())?.engine_config(seed);
            let engine = Engine::new(config, run::load_scene(&scene)?, morphkit_cli::load_morphs(&morphs)?)?;
            let opts = ServeOptions {
                host,
                port,
                hz,
                static_dir,
                record,
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(morphkit_service::serve(engine, opts))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => match e.downcast_ref::<Failure>() {
            Some(f) => {
                eprintln!("{f}");
                ExitCode::from(f.code)
            }
            None => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
    }
}
