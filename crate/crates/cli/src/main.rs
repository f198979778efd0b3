use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use pm_lab::catalog;
use pm_lab::harness::{run_batch, PolicySpec, SimulationConfig};
use pm_lab::{Analysis, Game, GameClass, GameDescription, HarnessError, SimplexPoint, DEFAULT_ALPHA};

mod report;

/// Finite stochastic partial monitoring: analyze games, simulate CBP and
/// baselines, sweep benchmark settings.
#[derive(Debug, Parser)]
#[command(name = "pm-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cell decomposition, neighbors, observability and observer plan.
    Analyze {
        #[command(flatten)]
        source: GameSource,
        /// Print a machine-readable report.
        #[arg(long)]
        json: bool,
        /// Exit with status 2 if the game is hopeless.
        #[arg(long)]
        require_learnable: bool,
    },
    /// Play one policy against one i.i.d. opponent.
    Simulate {
        #[command(flatten)]
        source: GameSource,
        /// cbp, random or fixed:i (1-based action).
        #[arg(long, default_value = "cbp")]
        policy: String,
        /// Outcome distribution, comma separated.
        #[arg(long)]
        opponent: String,
        #[arg(long)]
        horizon: u64,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        /// Per-run CSV; the aggregate goes next to it as `<stem>.aggregate.csv`.
        /// Without it the aggregate is printed.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every opponent of a benchmark setting and take the pointwise max.
    Sweep {
        /// benign, harsh or easy.
        #[arg(long)]
        setting: String,
        #[arg(long, default_value = "cbp")]
        policy: String,
        #[arg(long)]
        horizon: u64,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct GameSource {
    /// Game description JSON.
    #[arg(long)]
    game: Option<PathBuf>,
    /// easy or dynamic-pricing:N,M,c
    #[arg(long)]
    preset: Option<String>,
}

/// CBP asked to play a hopeless game, or `--require-learnable` failed.
#[derive(Debug)]
struct Refusal(String);

impl std::fmt::Display for Refusal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Refusal {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match configure_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Refusal>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var("PM_LAB_THREADS") else { return Ok(()) };
    let n: usize = value.trim().parse().with_context(|| format!("PM_LAB_THREADS must be a count, got {value:?}"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Analyze { source, json, require_learnable } => {
            let analysis = Analysis::new(load_game(&source)?)?;
            if json {
                emit(&(serde_json::to_string_pretty(&report::analysis_json(&analysis))? + "\n"))?;
            } else {
                emit(&report::analysis_text(&analysis))?;
            }
            if require_learnable && analysis.class() == GameClass::Hopeless {
                return Err(Refusal("game is hopeless".into()).into());
            }
            Ok(())
        }
        Command::Simulate { source, policy, opponent, horizon, runs, seed, alpha, out } => {
            let analysis = Analysis::new(load_game(&source)?)?.shared();
            let policy = parse_policy(&policy, alpha)?;
            let p = parse_opponent(&opponent, analysis.game.outcomes())?;
            let config = SimulationConfig::new(analysis, policy, p, horizon, runs, seed)?;
            let report = run_batch(std::slice::from_ref(&config)).map_err(refusal)?;
            match out {
                Some(path) => {
                    create_parent(&path)?;
                    report.write_runs_csv(create(&path)?)?;
                    report.write_aggregate_csv(create(&aggregate_path(&path))?)?;
                }
                None => {
                    let mut buf = Vec::new();
                    report.write_aggregate_csv(&mut buf)?;
                    emit(&String::from_utf8(buf)?)?;
                }
            }
            Ok(())
        }
        Command::Sweep { setting, policy, horizon, runs, seed, alpha, out } => {
            let named = catalog::setting_by_name(&setting)
                .ok_or_else(|| anyhow!("unknown setting {setting:?}; expected benign, harsh or easy"))?;
            let policy = parse_policy(&policy, alpha)?;
            let analysis = Analysis::new(named.game.clone())?.shared();
            let configs = named
                .opponents
                .iter()
                .map(|o| SimulationConfig::new(analysis.clone(), policy, o.p.clone(), horizon, runs, seed))
                .collect::<Result<Vec<_>, _>>()?;
            let report = run_batch(&configs).map_err(refusal)?;
            std::fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
            report.write_runs_csv(create(&out.join("runs.csv"))?)?;
            report.write_aggregate_csv(create(&out.join("aggregate.csv"))?)?;
            report.write_max_csv(create(&out.join("max.csv"))?)?;
            std::fs::write(out.join("setting.json"), serde_json::to_string_pretty(&named.to_json())? + "\n")?;
            Ok(())
        }
    }
}

/// Write to stdout; a reader that went away early is not an error.
fn emit(text: &str) -> anyhow::Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn refusal(e: HarnessError) -> anyhow::Error {
    match e {
        HarnessError::Hopeless => Refusal(e.to_string()).into(),
        e => e.into(),
    }
}

fn load_game(source: &GameSource) -> anyhow::Result<Game> {
    match (&source.game, &source.preset) {
        (Some(path), None) => Ok(Game::new(GameDescription::from_path(path)?)?),
        (None, Some(name)) => preset(name),
        _ => bail!("give exactly one of --game and --preset"),
    }
}

fn preset(name: &str) -> anyhow::Result<Game> {
    if name == "easy" {
        return Ok(catalog::easy_game());
    }
    let Some(params) = name.strip_prefix("dynamic-pricing:") else {
        bail!("unknown preset {name:?}; expected easy or dynamic-pricing:N,M,c");
    };
    let parts: Vec<&str> = params.split(',').map(str::trim).collect();
    let [n, m, c] = parts.as_slice() else {
        bail!("dynamic-pricing takes N,M,c, got {params:?}");
    };
    Ok(catalog::dynamic_pricing(
        n.parse().context("N must be a positive integer")?,
        m.parse().context("M must be a positive integer")?,
        c.parse().context("c must be a number")?,
    )?)
}

fn parse_policy(s: &str, alpha: f64) -> anyhow::Result<PolicySpec> {
    match s {
        "cbp" => Ok(PolicySpec::Cbp { alpha }),
        "random" => Ok(PolicySpec::UniformRandom),
        _ => {
            let Some(i) = s.strip_prefix("fixed:") else {
                bail!("unknown policy {s:?}; expected cbp, random or fixed:i");
            };
            let i: usize = i.parse().with_context(|| format!("bad action in {s:?}"))?;
            if i == 0 {
                bail!("actions are numbered from 1");
            }
            Ok(PolicySpec::Fixed(i - 1))
        }
    }
}

fn parse_opponent(s: &str, outcomes: usize) -> anyhow::Result<SimplexPoint> {
    let p = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad probability {x:?}")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    if p.len() != outcomes {
        bail!("opponent has {} entries, game has {outcomes} outcomes", p.len());
    }
    Ok(SimplexPoint::normalized(p, 1e-6)?)
}

fn aggregate_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "runs".into());
    path.with_file_name(format!("{stem}.aggregate.csv"))
}

fn create_parent(path: &Path) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    Ok(())
}

fn create(path: &Path) -> anyhow::Result<std::io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(std::io::BufWriter::new(f))
}
