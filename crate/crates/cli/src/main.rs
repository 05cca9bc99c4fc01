use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use dosefind::harness::{write_curves_csv, write_meta, write_summary_csv, write_sweep_csv};
use dosefind::scenario::load_scenario;
use dosefind::{run_experiment, sweep, HyperParams, PolicyKind, Scenario, SweepParam};

#[derive(Parser)]
#[command(version, about = "Budgeted contextual dose-finding trial simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replicate trials on one scenario and write summary.csv and curves.csv.
    Run(Common),
    /// Repeat the experiment over a grid of budgets or horizon ratios.
    Sweep {
        #[arg(long, value_parser = parse_param)]
        param: SweepParam,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario TOML; the built-in six-dose scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value = "c3t-budget,c3t-budget-e,c-ucb,c-kl-ucb,c-indep-ts,c-3p3")]
    policies: String,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_param(s: &str) -> Result<SweepParam, String> {
    s.parse().map_err(|e: dosefind::Error| e.to_string())
}

struct Setup {
    scenario: Scenario,
    params: HyperParams,
    policies: Vec<PolicyKind>,
    source: String,
}

impl Common {
    fn setup(&self) -> Result<Setup> {
        let (scenario, params, source) = match &self.scenario {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                (load_scenario(path)?, HyperParams::from_toml_str(&text)?, path.display().to_string())
            }
            None => (Scenario::reference(), HyperParams::default(), "built-in".to_string()),
        };
        let policies = PolicyKind::parse_list(&self.policies)?;
        anyhow::ensure!(!policies.is_empty(), "no policies given");
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        Ok(Setup {
            scenario,
            params,
            policies,
            source,
        })
    }

    fn meta(&self, setup: &Setup, extra: Vec<(&'static str, String)>) -> Vec<(&'static str, String)> {
        let names: Vec<&str> = setup.policies.iter().map(|p| p.name()).collect();
        let mut entries = vec![
            ("version", env!("CARGO_PKG_VERSION").to_string()),
            ("scenario", setup.source.clone()),
            ("policies", names.join(",")),
            ("reps", self.reps.to_string()),
            ("base_seed", self.seed.to_string()),
            ("seed_derivation", "splitmix64(splitmix64(base ^ fnv1a(policy)) ^ splitmix64(rep * golden)); grid points reuse the same seeds".into()),
            ("params", format!("{:?}", setup.params)),
            ("per_patient_rates", "divide by treated count; replications with none treated are skipped".into()),
            ("toxicity_compliance", "replications with no treated patient in the subgroup are excluded and counted in compliance_excluded".into()),
            ("conventional_safety_calls", "never-allocated doses without a model fit are called safe".into()),
        ];
        entries.extend(extra);
        entries
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(common) => {
            let setup = common.setup()?;
            let summaries = run_experiment(&setup.scenario, &setup.policies, &setup.params, common.reps, common.seed)?;
            write_summary_csv(create(&common.out, "summary.csv")?, &summaries)?;
            write_curves_csv(create(&common.out, "curves.csv")?, &summaries)?;
            write_meta(create(&common.out, "meta.txt")?, &common.meta(&setup, Vec::new()))?;
            for m in &summaries {
                println!(
                    "{:<13} error {:.3}  type-I {:.3}  type-II {:.3}  efficacy {:.3}  toxicity {:.3}",
                    m.policy.name(),
                    m.total_error.mean,
                    m.safe_type1.mean,
                    m.safe_type2.mean,
                    m.efficacy_per_patient.mean,
                    m.toxicity_per_patient.mean
                );
            }
        }
        Command::Sweep { param, grid, common } => {
            let setup = common.setup()?;
            let rows = sweep(&setup.scenario, param, &grid, &setup.policies, &setup.params, common.reps, common.seed)?;
            write_sweep_csv(create(&common.out, "sweep.csv")?, &rows)?;
            let grid_text: Vec<String> = grid.iter().map(f64::to_string).collect();
            let extra = vec![("sweep_param", param.name().to_string()), ("grid", grid_text.join(","))];
            write_meta(create(&common.out, "meta.txt")?, &common.meta(&setup, extra))?;
            for r in &rows {
                println!(
                    "{}={:<5} B={:<4} T={:<5} {:<13} error {:.3} ± {:.3}",
                    param.name(),
                    r.value,
                    r.budget,
                    r.horizon,
                    r.summary.policy.name(),
                    r.summary.total_error.mean,
                    r.summary.total_error.se
                );
            }
        }
    }
    Ok(())
}
