use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use persona_gui::app::load_app_model_file;
use persona_gui::campaign::{
    analyze, emit_report, run_campaign, CampaignConfig, CampaignError, CampaignReport, PolicyKind,
    ReportFormat, TRACE_DIR,
};

#[derive(Parser)]
#[command(name = "persona-gui", version, about = "Persona-guided GUI testing campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Scripted,
    Remote,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    TableDoc,
    CsvBundle,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign and write traces plus report.
    Run {
        /// JSON campaign config; other flags override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// App model path or bundled app name (repeatable).
        #[arg(long = "app")]
        apps: Vec<String>,
        /// Comma-separated agent names, e.g. P_A,P_B,P_X.
        #[arg(long, value_delimiter = ',')]
        agents: Vec<String>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        baseline_reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        policy: Option<PolicyArg>,
        #[arg(long)]
        budget_steps: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild the report from stored traces.
    Analyze {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a stored report.json in another format.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "table-doc")]
        format: FormatArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check an app model file against the schema.
    ValidateModel {
        #[arg(long)]
        app: PathBuf,
    },
}

fn exit_for(e: &CampaignError) -> ExitCode {
    match e {
        CampaignError::ConfigInvalid(_) | CampaignError::Model(_) | CampaignError::Persona(_) => {
            ExitCode::from(1)
        }
        CampaignError::Io(_) | CampaignError::Metric(_) => ExitCode::from(2),
    }
}

#[allow(clippy::too_many_arguments)]
fn build_config(
    config: Option<PathBuf>,
    apps: Vec<String>,
    agents: Vec<String>,
    runs: Option<usize>,
    baseline_reps: Option<usize>,
    seed: Option<u64>,
    policy: Option<PolicyArg>,
    budget_steps: Option<usize>,
    workers: Option<usize>,
    out: Option<PathBuf>,
) -> Result<CampaignConfig, CampaignError> {
    let mut cfg = match config {
        Some(path) => {
            let text = fs::read_to_string(&path)
                .map_err(|e| CampaignError::ConfigInvalid(format!("{}: {e}", path.display())))?;
            CampaignConfig::from_json(&text)?
        }
        None => CampaignConfig::demo(0, "campaign_out"),
    };
    if !apps.is_empty() {
        cfg.apps = apps;
    }
    if !agents.is_empty() {
        cfg.agents = agents;
    }
    if let Some(r) = runs {
        cfg.runs_per_config = r;
    }
    if let Some(r) = baseline_reps {
        cfg.baseline_repetitions = r;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(p) = policy {
        cfg.policy = match p {
            PolicyArg::Scripted => PolicyKind::Scripted,
            PolicyArg::Remote => PolicyKind::Remote,
        };
    }
    if let Some(n) = budget_steps {
        cfg.budget.max_steps = n;
    }
    if workers.is_some() {
        cfg.workers = workers;
    }
    if let Some(o) = out {
        cfg.out_dir = o;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run {
            config,
            apps,
            agents,
            runs,
            baseline_reps,
            seed,
            policy,
            budget_steps,
            workers,
            out,
        } => {
            let cfg = match build_config(
                config, apps, agents, runs, baseline_reps, seed, policy, budget_steps, workers, out,
            ) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return exit_for(&e);
                }
            };
            match run_campaign(&cfg) {
                Ok(run) => {
                    println!(
                        "{} sessions, traces in {}, report in {}",
                        run.traces.len(),
                        cfg.out_dir.join(TRACE_DIR).display(),
                        cfg.out_dir.join("report.md").display()
                    );
                    let failures = run.failures();
                    if failures > 0 {
                        eprintln!("{failures} session(s) ended in a failure; see traces");
                        return ExitCode::from(2);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_for(&e)
                }
            }
        }
        Command::Analyze { traces, out } => match analyze(&traces, &out) {
            Ok(r) => {
                println!("{} sessions analyzed; report in {}", r.provenance.sessions, out.display());
                if r.provenance.failed_sessions > 0 {
                    return ExitCode::from(2);
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_for(&e)
            }
        },
        Command::Report { input, format, out } => {
            let report: CampaignReport = match fs::read_to_string(&input)
                .map_err(|e| e.to_string())
                .and_then(|t| serde_json::from_str(&t).map_err(|e| e.to_string()))
            {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {}: {e}", input.display());
                    return ExitCode::from(1);
                }
            };
            let format = match format {
                FormatArg::TableDoc => ReportFormat::TableDoc,
                FormatArg::CsvBundle => ReportFormat::CsvBundle,
            };
            match emit_report(&report, format, &out) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_for(&e)
                }
            }
        }
        Command::ValidateModel { app } => match load_app_model_file(&app) {
            Ok(model) => {
                println!(
                    "{}: ok ({} screens, {} bugs)",
                    model.app_id,
                    model.screens.len(),
                    model.bugs.len()
                );
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{}: {e}", app.display());
                ExitCode::from(1)
            }
        },
    }
}
