use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use advlin::oneshot::{rate_report, ClassifierKind, RateQuery};
use advlin::scenarios::render_vector;
use advlin::{run, CliError, CliResult, ExperimentConfig, Scenario};
use advlin_core::{MeanLayout, NormOrder};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "advlin", version, about = "Adversarial rates of linear classifiers on Gaussian mixtures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// JSON experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
}

#[derive(Args, Clone)]
struct QueryArgs {
    #[arg(long)]
    mu: Option<f64>,
    /// Sets both eta_a and eta_s.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    eta_a: Option<f64>,
    #[arg(long)]
    eta_s: Option<f64>,
    /// Norm order: a number >= 1 or `inf`.
    #[arg(long)]
    p: Option<NormOrder>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    /// `axis` or `uniform`.
    #[arg(long)]
    layout: Option<MeanLayout>,
    /// `bayes` or `svm`.
    #[arg(long)]
    classifier: Option<ClassifierKind>,
    /// Report a Monte Carlo estimate over this many draws instead of the closed form.
    #[arg(long)]
    monte_carlo: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Rate table over mu_grid, or a one-shot JSON report when query flags are given.
    #[command(allow_negative_numbers = true)]
    Rates {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        query: QueryArgs,
    },
    /// Rates over p_grid x eta_grid.
    Sweep(RunArgs),
    /// Formula vs simulation over mu_grid x eta_grid.
    Figure2(RunArgs),
    /// Small-bias rate curves.
    Figure3(RunArgs),
    /// Sparse-SVM defense.
    Figure4(RunArgs),
    /// Noise norm moments.
    LpNoise(RunArgs),
    /// Clean, random, adversarial and strong-adversarial images.
    Image(RunArgs),
    /// Render a length-361 vector (whitespace or comma separated) as a PGM.
    Render {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

impl QueryArgs {
    fn is_query(&self) -> bool {
        self.mu.is_some()
            || self.eta.is_some()
            || self.eta_a.is_some()
            || self.eta_s.is_some()
            || self.p.is_some()
            || self.d.is_some()
            || self.sigma.is_some()
            || self.layout.is_some()
            || self.classifier.is_some()
            || self.monte_carlo.is_some()
    }

    fn to_query(&self, seed: Option<u64>) -> RateQuery {
        let base = RateQuery::default();
        RateQuery {
            mu: self.mu.unwrap_or(base.mu),
            eta_a: self.eta_a.or(self.eta).unwrap_or(base.eta_a),
            eta_s: self.eta_s.or(self.eta).unwrap_or(base.eta_s),
            p: self.p.unwrap_or(base.p),
            d: self.d.unwrap_or(base.d),
            sigma: self.sigma.unwrap_or(base.sigma),
            layout: self.layout.unwrap_or(base.layout),
            classifier: self.classifier.unwrap_or(base.classifier),
            monte_carlo: self.monte_carlo,
            seed: seed.unwrap_or(base.seed),
            ..base
        }
    }
}

fn load_config(scenario: Scenario, args: &RunArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig {
            scenario,
            ..ExperimentConfig::default()
        },
    };
    if cfg.scenario != scenario {
        return Err(CliError::Config(format!(
            "config is for scenario '{}' but '{scenario}' was requested",
            cfg.scenario
        )));
    }
    if let Some(out) = &args.out {
        cfg.output = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_scenario(scenario: Scenario, args: &RunArgs) -> CliResult<()> {
    let cfg = load_config(scenario, args)?;
    let summary = run(&cfg)?;
    eprintln!("wrote {} ({} rows)", summary.csv.display(), summary.table.len());
    Ok(())
}

fn read_vector(path: &PathBuf) -> CliResult<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| CliError::Config(format!("not a number: '{t}'")))
        })
        .collect()
}

fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Rates { run, query } => {
            if query.is_query() && run.config.is_none() {
                let report = rate_report(&query.to_query(run.seed))?;
                let json = serde_json::to_string_pretty(&report)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                let mut stdout = std::io::stdout().lock();
                // A closed pipe is not an error for a one-shot report.
                let _ = writeln!(stdout, "{json}");
                Ok(())
            } else {
                run_scenario(Scenario::Rates, &run)
            }
        }
        Command::Sweep(a) => run_scenario(Scenario::Sweep, &a),
        Command::Figure2(a) => run_scenario(Scenario::Figure2, &a),
        Command::Figure3(a) => run_scenario(Scenario::Figure3, &a),
        Command::Figure4(a) => run_scenario(Scenario::Figure4, &a),
        Command::LpNoise(a) => run_scenario(Scenario::LpNoise, &a),
        Command::Image(a) => run_scenario(Scenario::Image, &a),
        Command::Render { input, out } => render_vector(&read_vector(&input)?, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("advlin: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
