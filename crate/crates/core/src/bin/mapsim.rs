//! `mapsim` command-line front end.
//!
//! Exit codes: 0 on success, 2 when the scenario admits no feasible
//! deployment, 1 on usage, configuration or I/O errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use mapsim_core::channel::{compute_radio_state, LinkTable, RadioContext, Realization, Site};
use mapsim_core::deployment::{
    exhaustive_search, random_deployment, simba, DeploymentPlan, Evaluator, ExhaustiveConfig, SearchOutcome,
    SimbaConfig,
};
use mapsim_core::experiments::{self, AssociationSpec, PolicySource, SearchSpec};
use mapsim_core::marl::{self, ActionSelection, Associator, EvaluationConfig, PolicyModel, TrainConfig};
use mapsim_core::rng::{self, streams};
use mapsim_core::scenario::{load_scenario_file, preset, preset_names, Scenario};
use mapsim_core::{association, Error};

#[derive(Parser, Debug)]
#[command(name = "mapsim", version, about = "Aerial access point placement and user association simulator")]
struct Cli {
    /// Preset name (smallscale, mediumscale) or path to a scenario TOML file.
    #[arg(long, global = true, default_value = "smallscale")]
    scenario: String,
    /// Base seed; defaults to the scenario's own seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Deployment cost vs iterations for SIMBA, random and exhaustive search.
    Fig2(SearchArgs),
    /// QoS-satisfied fraction and deployed MAP count per method.
    Fig3(SearchArgs),
    /// Log sum-rate and QoS vs number of deployed UAVs, MARL vs MAX-SNR.
    Fig5(Fig5Args),
    /// Log sum-rate and handover frequency vs user density.
    Fig6(Fig6Args),
    /// Search a deployment and write it as JSON.
    Deploy(DeployArgs),
    /// Train an association policy on a deployment.
    Train(TrainArgs),
    /// Evaluate a policy or the MAX-SNR baseline on a deployment.
    Evaluate(EvaluateArgs),
    /// Per-link budget of a deployment for the scenario's users, as CSV.
    LinkBudgetDump(LinkBudgetArgs),
}

#[derive(Args, Debug)]
struct SearchArgs {
    /// Number of seeds (seed, seed+1, ...).
    #[arg(long, default_value_t = 30)]
    seeds: u64,
    /// SIMBA Monte-Carlo draws per step (M).
    #[arg(long, default_value_t = 10)]
    monte_carlo: usize,
    /// SIMBA episodes (T) and random-search iterations.
    #[arg(long, default_value_t = 100)]
    episodes: usize,
    /// Largest exhaustive enumeration allowed.
    #[arg(long, default_value_t = mapsim_core::deployment::DEFAULT_ENUMERATION_BUDGET)]
    exhaustive_budget: u128,
}

#[derive(Args, Debug)]
struct PolicyArgs {
    /// Training configuration TOML (defaults for missing keys).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the number of training episodes.
    #[arg(long)]
    train_episodes: Option<usize>,
    /// Load `policy_uav<n>.json` checkpoints from here instead of training.
    #[arg(long)]
    policy_dir: Option<PathBuf>,
    /// Evaluation episodes per sweep point.
    #[arg(long, default_value_t = 100)]
    eval_episodes: usize,
    /// Evaluation episode length; defaults to the scenario horizon.
    #[arg(long)]
    eval_length: Option<usize>,
}

#[derive(Args, Debug)]
struct Fig5Args {
    /// Comma-separated UAV counts.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6")]
    uavs: Vec<usize>,
    #[command(flatten)]
    policy: PolicyArgs,
}

#[derive(Args, Debug)]
struct Fig6Args {
    /// Comma-separated user densities (UEs per square metre).
    #[arg(long, value_delimiter = ',', default_value = "0.0005,0.001,0.003,0.005,0.007,0.009")]
    densities: Vec<f64>,
    /// UAVs deployed for the sweep.
    #[arg(long, default_value_t = 4)]
    uavs: usize,
    #[command(flatten)]
    policy: PolicyArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    Simba,
    Exhaustive,
    Random,
}

#[derive(Args, Debug)]
struct DeployArgs {
    #[arg(long, value_enum, default_value_t = Method::Simba)]
    method: Method,
    #[arg(long, default_value_t = 10)]
    monte_carlo: usize,
    /// SIMBA episodes or random iterations.
    #[arg(long, default_value_t = 100)]
    episodes: usize,
    #[arg(long, default_value_t = mapsim_core::deployment::DEFAULT_ENUMERATION_BUDGET)]
    exhaustive_budget: u128,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Deployment plan JSON written by `deploy`.
    #[arg(long)]
    deployment: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    episodes: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Baseline {
    MaxSnr,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    deployment: PathBuf,
    /// Policy checkpoint to evaluate.
    #[arg(long, conflicts_with = "baseline", required_unless_present = "baseline")]
    policy: Option<PathBuf>,
    #[arg(long, value_enum)]
    baseline: Option<Baseline>,
    #[arg(long, default_value_t = 100)]
    episodes: usize,
    #[arg(long)]
    length: Option<usize>,
    /// Users per episode; defaults to the scenario population.
    #[arg(long)]
    users: Option<usize>,
    /// Sample requests from the policy instead of taking the most likely one.
    #[arg(long)]
    stochastic: bool,
}

#[derive(Args, Debug)]
struct LinkBudgetArgs {
    /// Deployment plan JSON; without it, comma-separated grid locations.
    #[arg(long, conflicts_with = "locations")]
    deployment: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    locations: Vec<usize>,
}

enum Outcome {
    Done,
    Infeasible,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Infeasible) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn load_scenario(name: &str, seed: Option<u64>) -> Result<Scenario, Error> {
    let scenario = if preset_names().contains(&name) {
        preset(name)?
    } else if Path::new(name).exists() {
        load_scenario_file(Path::new(name))?
    } else {
        return Err(mapsim_core::error::ScenarioError::UnknownPreset(name.to_string()).into());
    };
    Ok(match seed {
        Some(s) => scenario.with_seed(s),
        None => scenario,
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn train_config(path: Option<&Path>, episodes: Option<usize>) -> Result<TrainConfig, Error> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let de = toml::Deserializer::new(&text);
            serde_path_to_error::deserialize(de).map_err(|e| Error::Usage(format!("{}: {e}", p.display())))?
        }
        None => TrainConfig::default(),
    };
    if let Some(e) = episodes {
        cfg.episodes = e;
    }
    cfg.validate().map_err(Error::Usage)?;
    Ok(cfg)
}

fn search_spec(args: &SearchArgs, base: u64) -> SearchSpec {
    SearchSpec {
        seeds: (0..args.seeds.max(1)).map(|i| base + i).collect(),
        simba: SimbaConfig { monte_carlo_iters: args.monte_carlo, episodes: args.episodes, rng_seed: base },
        random_iterations: Some(args.episodes),
        exhaustive_budget: Some(args.exhaustive_budget),
    }
}

fn association_spec(args: &PolicyArgs, seed: u64) -> Result<AssociationSpec, Error> {
    let policy = match &args.policy_dir {
        Some(dir) => PolicySource::Directory(dir.clone()),
        None => PolicySource::Train(train_config(args.config.as_deref(), args.train_episodes)?),
    };
    Ok(AssociationSpec {
        seed,
        evaluation: EvaluationConfig {
            episodes: args.eval_episodes,
            episode_length: args.eval_length,
            ..EvaluationConfig::default()
        },
        policy,
        simba: SimbaConfig { rng_seed: seed, ..SimbaConfig::default() },
    })
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let scenario = load_scenario(&cli.scenario, cli.seed)?;
    let seed = cli.seed.unwrap_or(scenario.rng_seed);
    let out = cli.out.as_path();
    match &cli.command {
        Command::Fig2(args) => {
            let cmp = experiments::run_fig2(&scenario, &search_spec(args, seed), Some(out))?;
            for s in cmp.cost_series() {
                info!("{}: final mean best cost {:.4}", s.method, s.final_mean().unwrap_or(f64::NAN));
            }
            cmp.notes.iter().for_each(|n| info!("{n}"));
        }
        Command::Fig3(args) => {
            let cmp = experiments::run_fig3(&scenario, &search_spec(args, seed), Some(out))?;
            for s in cmp.qos_table() {
                info!("{} {}: {:.4}", s.method, s.metric, s.points[0].mean);
            }
        }
        Command::Fig5(args) => {
            let spec = association_spec(&args.policy, seed)?;
            let sweep = experiments::run_fig5(&scenario, &args.uavs, &spec, Some(out))?;
            for p in &sweep.points {
                info!("{} UAVs: marl {:.3} max-snr {:.3}", p.x, p.marl.log_sum_rate.mean, p.max_snr.log_sum_rate.mean);
            }
        }
        Command::Fig6(args) => {
            let spec = association_spec(&args.policy, seed)?;
            let sweep = experiments::run_fig6(&scenario, &args.densities, args.uavs, &spec, Some(out))?;
            for p in &sweep.points {
                info!(
                    "lambda {}: handover marl {:.4} max-snr {:.4}",
                    p.x, p.marl.handover_frequency.mean, p.max_snr.handover_frequency.mean
                );
            }
        }
        Command::Deploy(args) => return deploy(&scenario, args, seed, out),
        Command::Train(args) => {
            let plan: DeploymentPlan = read_json(&args.deployment)?;
            let cfg = train_config(args.config.as_deref(), args.episodes)?;
            let outcome = marl::train(&scenario, &plan, &cfg, seed)?;
            fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            outcome.policy.save(&out.join("policy.json"))?;
            let path = out.join("learning_curve.csv");
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["episode", "mean_reward"])?;
            for (i, r) in outcome.curve.iter().enumerate() {
                w.write_record([i.to_string(), r.to_string()])?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            write_text(&out.join("train_config.toml"), &toml::to_string_pretty(&cfg).expect("config serialises"))?;
            info!(
                "best checkpoint from episode {} written to {}",
                outcome.best_episode,
                out.join("policy.json").display()
            );
        }
        Command::Evaluate(args) => {
            let plan: DeploymentPlan = read_json(&args.deployment)?;
            let policy = args.policy.as_deref().map(PolicyModel::load).transpose()?;
            let associator = match &policy {
                Some(p) => Associator::Policy {
                    policy: p,
                    selection: if args.stochastic { ActionSelection::Sample } else { ActionSelection::Greedy },
                },
                None => Associator::MaxSnr,
            };
            let cfg = EvaluationConfig {
                episodes: args.episodes,
                episode_length: args.length,
                n_users: args.users,
                alpha: 1.0,
            };
            let report = marl::evaluate(associator, &scenario, &plan, &cfg, seed)?;
            fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            write_metrics_csv(&out.join(format!("metrics_{}.csv", report.method)), &report)?;
            let json = serde_json::to_string_pretty(&report)?;
            write_text(&out.join(format!("evaluation_{}.json", report.method)), &json)?;
            println!(
                "{}: log sum-rate {:.3} ± {:.3}, sum rate {:.1} Mbps, QoS {:.3}, handover {:.4}",
                report.method,
                report.log_sum_rate.mean,
                report.log_sum_rate.ci95,
                report.sum_rate_mbps.mean,
                report.qos_fraction.mean,
                report.handover_frequency.mean
            );
        }
        Command::LinkBudgetDump(args) => {
            let plan = match &args.deployment {
                Some(p) => read_json::<DeploymentPlan>(p)?,
                None => DeploymentPlan::from_locations(&scenario, &args.locations, &Default::default())?,
            };
            link_budget_dump(&scenario, &plan, seed, out)?;
        }
    }
    Ok(Outcome::Done)
}

fn deploy(scenario: &Scenario, args: &DeployArgs, seed: u64, out: &Path) -> Result<Outcome, Error> {
    let ev = Evaluator::for_scenario(scenario);
    let outcome: SearchOutcome = match args.method {
        Method::Simba => {
            let cfg = SimbaConfig { monte_carlo_iters: args.monte_carlo, episodes: args.episodes, rng_seed: seed };
            simba(&ev, &cfg).search
        }
        Method::Random => random_deployment(&ev, args.episodes, seed),
        Method::Exhaustive => {
            exhaustive_search(&ev, &ExhaustiveConfig { budget: args.exhaustive_budget, ..ExhaustiveConfig::default() })?
        }
    };
    let Some(plan) = outcome.plan() else {
        eprintln!("no deployment could be evaluated");
        return Ok(Outcome::Infeasible);
    };
    let eval = ev.evaluate_plan(plan.clone());
    let report = ev.report(&eval);
    write_text(&out.join("plan.json"), &serde_json::to_string_pretty(plan)?)?;
    write_text(&out.join("constraints.json"), &serde_json::to_string_pretty(&report)?)?;
    write_text(&out.join(format!("{}.resolved.toml", scenario.name)), &scenario.resolved_toml())?;
    println!(
        "{} MAPs at {:?}, cost {:.4}, QoS satisfied {:.3}, feasible {}",
        plan.deployed_count,
        plan.locations(),
        plan.total_cost,
        eval.satisfied_fraction(),
        outcome.is_feasible()
    );
    if outcome.is_feasible() {
        Ok(Outcome::Done)
    } else {
        eprintln!("infeasible: best-effort plan written");
        Ok(Outcome::Infeasible)
    }
}

fn write_metrics_csv(path: &Path, report: &marl::EvaluationReport) -> Result<(), Error> {
    let mut w = csv::Writer::from_path(path)?;
    let n_aps = report.per_step.first().map_or(0, |s| s.load.len());
    let mut header = vec![
        "t".to_string(),
        "R_alpha".into(),
        "sum_rate_mbps".into(),
        "qos_satisfied_fraction".into(),
        "handover_freq".into(),
    ];
    header.extend((0..n_aps).map(|ap| format!("load_ap{ap}")));
    header.push("episodes".into());
    w.write_record(&header)?;
    for s in &report.per_step {
        let mut row = vec![
            s.t.to_string(),
            s.utility.to_string(),
            s.sum_rate_mbps.to_string(),
            s.qos_fraction.to_string(),
            s.handover_fraction.to_string(),
        ];
        row.extend(s.load.iter().map(|l| l.to_string()));
        row.push(report.episodes.len().to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn link_budget_dump(scenario: &Scenario, plan: &DeploymentPlan, seed: u64, out: &Path) -> Result<(), Error> {
    let sites = Site::all(scenario);
    let links = LinkTable::for_scenario(
        scenario,
        sites,
        &scenario.users,
        Realization::Sampled,
        &mut rng::stream(seed, streams::CHANNEL),
    );
    let txs = plan.transmitters();
    let ctx = RadioContext::new(&links, &txs);
    let assoc = association::max_snr_association(&ctx, scenario.aps.len());
    let state = compute_radio_state(&links, &txs, assoc.serving());
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let path = out.join("link_budget.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record([
        "ap_id",
        "ue",
        "distance_m",
        "los",
        "pathloss_db",
        "tx_power_dbm",
        "tx_gain_dbi",
        "rx_gain_dbi",
        "rss_dbm",
        "aoa_deg",
        "covered",
        "associated",
        "snr_db",
        "sinr_db",
        "bandwidth_hz",
        "rate_bps",
    ])?;
    for (slot, t) in state.transmitters.iter().enumerate() {
        for ue in 0..state.n_users {
            let l = state.get(slot, ue);
            let b = &l.budget;
            w.write_record([
                t.ap_id.to_string(),
                ue.to_string(),
                b.distance_m.to_string(),
                b.los.map_or("-".into(), |v| v.to_string()),
                b.pathloss_db.to_string(),
                b.tx_power_dbm.to_string(),
                b.tx_gain_dbi.to_string(),
                b.rx_gain_dbi.to_string(),
                b.rss_dbm.to_string(),
                b.aoa_deg.to_string(),
                l.covered.to_string(),
                l.associated.to_string(),
                l.snr_db.to_string(),
                l.sinr_db.to_string(),
                l.bandwidth_hz.to_string(),
                l.rate_bps.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    println!("{} rows written to {}", state.n_slots() * state.n_users, path.display());
    Ok(())
}
