//! `hproj`: command-line front end.
//!
//! Exit codes: 0 success, 1 property violation, 2 usage or validation error,
//! 3 I/O error.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hproj::ability_model::linspace;
use hproj::adoption_path::{self, PathThresholds, RegimeRow};
use hproj::delegation_sim::{self, AdoptionShares, BatchSummary};
use hproj::diagnostics::{self, DifficultyScale, DistortionReport};
use hproj::kl_equilibrium::{self, AdoptionReport, RegionCell};
use hproj::reasonableness::{self, ReasonablenessModel};
use hproj::suites::{run_suite, Suite, SuiteReport};
use hproj::{
    AbilityPrior, AgentSpec, BeliefKind, BeliefRule, DecisionRule, ItemOutcome, LinkKind,
    PoolEnvironment, SimilarityTable, TruthModel,
};

use config::{open, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] hproj::Error),
    #[error("{0}")]
    Violation(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_owned(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Violation(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io { .. } | CliError::Core(hproj::Error::Io(_)) => 3,
            CliError::Core(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Parser)]
#[command(
    name = "hproj",
    version,
    about = "Human-projection beliefs, adoption equilibria and delegation simulation"
)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file for the command's table.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Props,
    Theorem1,
    Path,
    Reasonableness,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Run a randomised property suite.
    Verify {
        #[arg(value_enum)]
        suite: SuiteArg,
        #[arg(long)]
        instances: Option<usize>,
    },
    /// Enumerate adoption equilibria and classify them (JSON).
    Equilibria(TruthArgs),
    /// Classify a grid of two-task AI technologies.
    RegionSweep {
        #[command(flatten)]
        truth: TruthArgs,
        #[arg(long, default_value_t = 99)]
        grid: usize,
    },
    /// Adoption thresholds along a budget frontier.
    Path {
        #[command(flatten)]
        truth: TruthArgs,
        #[arg(long, num_args = 1.., allow_negative_numbers = true)]
        weights_a: Option<Vec<f64>>,
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long)]
        tau_points: Option<usize>,
    },
    /// Monte Carlo delegation episodes.
    Simulate {
        #[arg(long, value_enum)]
        agent: Option<AgentArg>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        exploration: Option<f64>,
        #[arg(long, value_enum)]
        rule: Option<RuleArg>,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long, num_args = 2)]
        human: Option<Vec<f64>>,
        #[arg(long, num_args = 2)]
        ai: Option<Vec<f64>>,
    },
    /// Predicted usefulness after observed reasonableness scores.
    Reasonableness {
        #[arg(long, num_args = 1..)]
        scores: Option<Vec<f64>>,
        #[arg(long, num_args = 1..)]
        support: Option<Vec<f64>>,
        #[arg(long)]
        similarity: Option<PathBuf>,
        #[arg(long, num_args = 1..)]
        useful: Option<Vec<String>>,
        #[arg(long)]
        answer: Option<String>,
    },
    /// Level wedge, slope gap and average belief at errors.
    Distortion {
        #[arg(long)]
        items: Option<PathBuf>,
        #[arg(long)]
        beliefs: Option<PathBuf>,
        #[arg(long, allow_negative_numbers = true)]
        intercept: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        slope: Option<f64>,
        #[arg(long, value_enum)]
        scale: Option<ScaleArg>,
        /// Use the unclamped belief line.
        #[arg(long)]
        raw: bool,
    },
}

#[derive(Args, Clone, Default)]
struct TruthArgs {
    /// True AI success rates, one per task.
    #[arg(long, num_args = 1..)]
    qa: Option<Vec<f64>>,
    /// Human success rates, one per task.
    #[arg(long, num_args = 1..)]
    qh: Option<Vec<f64>>,
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    deltas: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    theta_h: Option<f64>,
    #[arg(long, value_enum)]
    link: Option<LinkArg>,
    #[arg(long)]
    discrimination: Option<f64>,
    #[arg(long, num_args = 1..)]
    rewards: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LinkArg {
    Logistic,
    NormalOgive,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AgentArg {
    SingleIndex,
    PoolSpecific,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RuleArg {
    KlPointBelief,
    Map,
    PosteriorMean,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScaleArg {
    Unit,
    Percent,
}

struct Ctx {
    cfg: RunConfig,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<Format>,
}

impl Ctx {
    fn emit(&self, bytes: &[u8]) -> Result<(), CliError> {
        match &self.out {
            Some(p) => write_file(p, bytes),
            None => write_stdout(bytes),
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn write_stdout(bytes: &[u8]) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(bytes).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::io(Path::new("<stdout>"), e)),
        _ => Ok(()),
    }
}

fn json<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(value).expect("serialisable output");
    s.push(b'\n');
    s
}

fn truth_from(ctx: &Ctx, args: &TruthArgs) -> Result<TruthModel, CliError> {
    let mut model_cfg = ctx.cfg.model.clone();
    if let Some(l) = args.link {
        model_cfg.link = match l {
            LinkArg::Logistic => LinkKind::Logistic,
            LinkArg::NormalOgive => LinkKind::NormalOgive,
        };
    }
    if let Some(a) = args.discrimination {
        model_cfg.discrimination = a;
    }
    let mut t = ctx.cfg.truth.clone();
    if let Some(q) = &args.qa {
        t.q_ai = q.clone();
    }
    if let Some(q) = &args.qh {
        t.q_human = Some(q.clone());
        t.deltas = None;
    }
    if let Some(d) = &args.deltas {
        t.deltas = Some(d.clone());
        t.q_human = None;
    }
    if let Some(th) = args.theta_h {
        t.human_theta = th;
    }
    if let Some(r) = &args.rewards {
        t.rewards = Some(r.clone());
    }
    t.build(model_cfg.build(true)?)
}

fn cmd_verify(ctx: &Ctx, suite: SuiteArg, instances: Option<usize>) -> Result<(), CliError> {
    let suites: Vec<Suite> = match suite {
        SuiteArg::Props => vec![Suite::Props],
        SuiteArg::Theorem1 => vec![Suite::Theorem1],
        SuiteArg::Path => vec![Suite::Path],
        SuiteArg::Reasonableness => vec![Suite::Reasonableness],
        SuiteArg::All => Suite::ALL.to_vec(),
    };
    let model = if ctx.cfg.model_section {
        Some(ctx.cfg.model.build(false)?)
    } else {
        None
    };
    let seed = ctx.seed.unwrap_or(0);
    let reports = suites
        .iter()
        .map(|&s| run_suite(s, instances, seed, model.as_ref()))
        .collect::<Result<Vec<SuiteReport>, _>>()?;
    let body = match ctx.format {
        Some(Format::Json) => json(&reports),
        Some(Format::Csv) => {
            let mut s = String::from("suite,passed,instances,counterexample\n");
            for r in &reports {
                let ce = r
                    .counterexample
                    .as_deref()
                    .unwrap_or("")
                    .replace('"', "\"\"");
                s.push_str(&format!(
                    "{},{},{},\"{ce}\"\n",
                    r.suite,
                    r.passed(),
                    r.cases
                ));
            }
            s.into_bytes()
        }
        None => reports
            .iter()
            .map(|r| format!("{r}\n"))
            .collect::<String>()
            .into_bytes(),
    };
    ctx.emit(&body)?;
    match reports.iter().find(|r| !r.passed()) {
        Some(r) => Err(CliError::Violation(r.to_string())),
        None => Ok(()),
    }
}

#[derive(Serialize)]
struct EquilibriaOutput<'a> {
    human_theta: f64,
    deltas: Vec<f64>,
    q_human: &'a [f64],
    q_ai: &'a [f64],
    #[serde(flatten)]
    report: AdoptionReport,
}

fn cmd_equilibria(ctx: &Ctx, args: &TruthArgs) -> Result<(), CliError> {
    let truth = truth_from(ctx, args)?;
    let report = kl_equilibrium::classify_adoption(&truth)?;
    let body = match ctx.format {
        Some(Format::Csv) => {
            let mut s =
                String::from("profile,theta_star,kl_value,adoption_class,boundary_belief\n");
            for r in &report.equilibria {
                let theta = r.theta_star.map(|t| format!("{t:.6}")).unwrap_or_default();
                s.push_str(&format!(
                    "{},{theta},{:.6},{},{}\n",
                    r.profile, r.kl_value, r.adoption_class, r.boundary_belief
                ));
            }
            s.into_bytes()
        }
        _ => json(&EquilibriaOutput {
            human_theta: truth.human_theta(),
            deltas: truth.domain().human_difficulties(),
            q_human: truth.q_human(),
            q_ai: truth.q_ai(),
            report,
        }),
    };
    ctx.emit(&body)
}

fn cmd_region_sweep(ctx: &Ctx, args: &TruthArgs, grid: usize) -> Result<(), CliError> {
    let truth = truth_from(ctx, args)?;
    let cells: Vec<RegionCell> = kl_equilibrium::region_sweep(&truth, grid)?;
    let body = match ctx.format {
        Some(Format::Json) => json(&cells),
        _ => {
            let mut buf = Vec::new();
            kl_equilibrium::write_region_csv(&cells, &mut buf)?;
            buf
        }
    };
    ctx.emit(&body)
}

fn cmd_path(
    ctx: &Ctx,
    args: &TruthArgs,
    weights_a: Option<Vec<f64>>,
    rate: Option<f64>,
    tau_points: Option<usize>,
) -> Result<(), CliError> {
    let truth = truth_from(ctx, args)?;
    let mut fc = ctx.cfg.frontier.clone();
    if let Some(a) = weights_a {
        fc.weights_a = a;
    }
    if let Some(r) = rate {
        fc.rate = Some(r);
        fc.budget_taus = None;
        fc.budget_values = None;
    }
    if let Some(n) = tau_points {
        fc.tau_points = n;
    }
    if fc.tau_points < 2 {
        return Err(CliError::Usage("tau grid needs at least 2 points".into()));
    }
    let frontier = fc.build()?;
    let th: PathThresholds = adoption_path::thresholds(&frontier, &truth)?;
    let rows: Vec<RegimeRow> = adoption_path::regime_table(
        &frontier,
        &truth,
        &linspace(0.0, frontier.tau_bar(), fc.tau_points),
    )?;
    let (head, table) = match ctx.format {
        Some(Format::Json) => (json(&th), json(&rows)),
        _ => {
            let (mut a, mut b) = (Vec::new(), Vec::new());
            adoption_path::write_thresholds_csv(&th, &mut a)?;
            adoption_path::write_regime_csv(&rows, &mut b)?;
            (a, b)
        }
    };
    match &ctx.out {
        Some(p) => {
            write_file(p, &table)?;
            write_stdout(&head)
        }
        None => {
            write_stdout(&head)?;
            write_stdout(b"\n")?;
            write_stdout(&table)
        }
    }
}

#[derive(Serialize)]
struct SimulationOutput<'a> {
    seed: u64,
    episodes: usize,
    environment: &'a PoolEnvironment,
    agent: &'a AgentSpec,
    shares: AdoptionShares,
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    ctx: &Ctx,
    agent: Option<AgentArg>,
    episodes: Option<usize>,
    exploration: Option<f64>,
    rule: Option<RuleArg>,
    rounds: Option<usize>,
    human: Option<Vec<f64>>,
    ai: Option<Vec<f64>>,
) -> Result<(), CliError> {
    let seed = ctx.seed.or(ctx.cfg.seed).ok_or_else(|| {
        CliError::Usage("simulate requires a seed (--seed or `seed` in the config)".into())
    })?;
    let sc = &ctx.cfg.sim;
    let pair = |v: Option<Vec<f64>>, d: [f64; 2]| v.map(|v| [v[0], v[1]]).unwrap_or(d);
    let env = PoolEnvironment::from_rates(
        pair(human, sc.human),
        pair(ai, sc.ai),
        rounds.unwrap_or(sc.rounds_per_pool),
    )?;
    let spec = AgentSpec {
        belief_kind: match agent {
            Some(AgentArg::SingleIndex) => BeliefKind::SingleIndexHp,
            Some(AgentArg::PoolSpecific) => BeliefKind::PoolSpecific,
            None => sc.agent,
        },
        exploration: exploration.unwrap_or(sc.exploration),
        decision_rule: match rule {
            Some(RuleArg::KlPointBelief) => DecisionRule::KlPointBelief,
            Some(RuleArg::Map) => DecisionRule::Map,
            Some(RuleArg::PosteriorMean) => DecisionRule::PosteriorMean,
            None => sc.decision_rule,
        },
        ability_prior: sc.ability_prior,
        pool_grid_points: sc.pool_grid_points,
    };
    let n = episodes.unwrap_or(sc.episodes);
    let summary: BatchSummary = delegation_sim::run_batch(&env, &spec, n, seed)?;
    let output = SimulationOutput {
        seed,
        episodes: n,
        environment: &env,
        agent: &spec,
        shares: delegation_sim::adoption_shares(&summary),
    };
    if let Some(p) = &ctx.out {
        let table = match ctx.format {
            Some(Format::Json) => json(&summary.episodes),
            _ => {
                let mut b = Vec::new();
                delegation_sim::write_episodes_csv(&summary, &mut b)?;
                b
            }
        };
        write_file(p, &table)?;
    }
    write_stdout(&json(&output))
}

#[derive(Serialize)]
struct ScoreRow {
    score: f64,
    predicted_usefulness: f64,
}

#[derive(Serialize)]
struct ReasonablenessOutput {
    support: Vec<f64>,
    answer_score: Option<f64>,
    history: Vec<f64>,
    predicted_usefulness: f64,
    next_score: Vec<ScoreRow>,
    score_mlrp: bool,
}

fn cmd_reasonableness(
    ctx: &Ctx,
    scores: Option<Vec<f64>>,
    support: Option<Vec<f64>>,
    similarity: Option<PathBuf>,
    useful: Option<Vec<String>>,
    answer: Option<String>,
) -> Result<(), CliError> {
    let rc = &ctx.cfg.reasonableness;
    let model =
        ReasonablenessModel::exponential_tilt(support.unwrap_or_else(|| rc.support.clone()))?;
    if rc.theta_points < 1
        || !rc.theta_min.is_finite()
        || !rc.theta_max.is_finite()
        || rc.theta_min >= rc.theta_max
    {
        return Err(CliError::Usage("invalid reasonableness theta grid".into()));
    }
    let grid = linspace(rc.theta_min, rc.theta_max, rc.theta_points);
    let prior = AbilityPrior::uniform(grid.clone())?;
    let mut history = scores.unwrap_or_else(|| rc.scores.clone());

    let similarity = similarity.or_else(|| rc.similarity.clone());
    let answer = answer.or_else(|| rc.answer.clone());
    let useful = useful.unwrap_or_else(|| rc.useful.clone());
    let answer_score = match (similarity, answer) {
        (Some(path), Some(ans)) => {
            let table = SimilarityTable::from_csv(open(&path)?)?;
            let r = reasonableness::reasonableness_score(&useful, &ans, &table)?;
            history.push(r);
            Some(r)
        }
        (None, None) => None,
        _ => {
            return Err(CliError::Usage(
                "scoring an answer needs both a similarity table and an answer id".into(),
            ))
        }
    };

    let posterior = reasonableness::score_posterior(&prior, &model, &history)?;
    let next_score = model
        .support()
        .iter()
        .map(|&r| {
            Ok(ScoreRow {
                score: r,
                predicted_usefulness: reasonableness::predicted_usefulness(&posterior, &model, r)?,
            })
        })
        .collect::<Result<Vec<_>, hproj::Error>>()?;
    let output = ReasonablenessOutput {
        support: model.support().to_vec(),
        answer_score,
        predicted_usefulness: posterior.expectation(|t| model.useful_rate(t))?,
        history,
        next_score,
        score_mlrp: reasonableness::verify_score_mlrp(&model, &grid)?.passed(),
    };
    let body = match ctx.format {
        Some(Format::Json) => json(&output),
        _ => {
            let mut s = String::from("score,predicted_usefulness\n");
            for r in &output.next_score {
                s.push_str(&format!("{:.6},{:.6}\n", r.score, r.predicted_usefulness));
            }
            s.into_bytes()
        }
    };
    ctx.emit(&body)
}

#[derive(Serialize)]
struct DistortionOutput {
    rule: BeliefRule,
    #[serde(flatten)]
    report: DistortionReport,
}

fn cmd_distortion(
    ctx: &Ctx,
    items: Option<PathBuf>,
    beliefs: Option<PathBuf>,
    intercept: Option<f64>,
    slope: Option<f64>,
    scale: Option<ScaleArg>,
    raw: bool,
) -> Result<(), CliError> {
    let dc = &ctx.cfg.distortion;
    let scale = match scale {
        Some(ScaleArg::Unit) => DifficultyScale::Unit,
        Some(ScaleArg::Percent) => DifficultyScale::Percent,
        None => dc.scale,
    };
    let items_path = items
        .or_else(|| dc.items.clone())
        .ok_or_else(|| CliError::Usage("distortion needs an item file (--items)".into()))?;
    let outcomes = ItemOutcome::from_csv(open(&items_path)?, scale)?;
    let beliefs = beliefs.or_else(|| dc.beliefs.clone());
    let intercept = intercept.or(dc.intercept);
    let mut rule =
        match (beliefs, intercept) {
            (Some(p), None) => {
                diagnostics::fit_belief_rule(&diagnostics::read_beliefs_csv(open(&p)?, scale)?)?
            }
            (None, Some(a)) => BeliefRule::new(a, slope.or(dc.slope).unwrap_or(0.0))?,
            _ => return Err(CliError::Usage(
                "give exactly one of a belief file (--beliefs) or a rule (--intercept [--slope])"
                    .into(),
            )),
        };
    if raw || !dc.clamp {
        rule = rule.unclamped();
    }
    let report = diagnostics::distortion_report(&rule, &outcomes)?;
    let body = match ctx.format {
        Some(Format::Json) => json(&DistortionOutput { rule, report }),
        _ => {
            let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
            format!(
                "items,accuracy,level_wedge,slope_gap,avg_belief_at_errors,clamped_items,intercept,slope\n{},{:.6},{:.6},{},{},{},{:.6},{:.6}\n",
                report.items,
                report.accuracy,
                report.level_wedge,
                opt(report.slope_gap),
                opt(report.avg_belief_at_errors),
                report.clamped_items,
                rule.intercept,
                rule.slope
            )
            .into_bytes()
        }
    };
    ctx.emit(&body)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let ctx = Ctx {
        seed: cli.seed.or(cfg.seed),
        out: cli.out.clone().or_else(|| cfg.out.clone()),
        format: cli.format,
        cfg,
    };
    match cli.command {
        Command::Verify { suite, instances } => cmd_verify(&ctx, suite, instances),
        Command::Equilibria(args) => cmd_equilibria(&ctx, &args),
        Command::RegionSweep { truth, grid } => cmd_region_sweep(&ctx, &truth, grid),
        Command::Path {
            truth,
            weights_a,
            rate,
            tau_points,
        } => cmd_path(&ctx, &truth, weights_a, rate, tau_points),
        Command::Simulate {
            agent,
            episodes,
            exploration,
            rule,
            rounds,
            human,
            ai,
        } => cmd_simulate(&ctx, agent, episodes, exploration, rule, rounds, human, ai),
        Command::Reasonableness {
            scores,
            support,
            similarity,
            useful,
            answer,
        } => cmd_reasonableness(&ctx, scores, support, similarity, useful, answer),
        Command::Distortion {
            items,
            beliefs,
            intercept,
            slope,
            scale,
            raw,
        } => cmd_distortion(&ctx, items, beliefs, intercept, slope, scale, raw),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hproj: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
