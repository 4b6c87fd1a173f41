//! Seeded sweeps that regenerate the cost, QoS, sum-rate and handover
//! figures as CSV tables.
//!
//! Every sweep point runs its seeds in parallel and aggregates in seed
//! order, so outputs are byte-identical across runs and thread counts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deployment::{
    exhaustive_search, random_deployment, simba, DeploymentPlan, Evaluator, ExhaustiveConfig, SearchOutcome,
    SimbaConfig,
};
use crate::error::{Error, MarlError};
use crate::marl::{
    self, evaluate, ActionSelection, Associator, EvaluationConfig, EvaluationReport, PolicyModel, TrainConfig,
};
use crate::scenario::Scenario;

/// One point of a series: statistics over seeds (or episodes).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub x: f64,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl SeriesPoint {
    /// Population standard deviation, so a single sample has std 0.
    pub fn of(x: f64, values: &[f64]) -> SeriesPoint {
        let count = values.len();
        let mean = if count == 0 { f64::NAN } else { values.iter().sum::<f64>() / count as f64 };
        let std = if count == 0 {
            f64::NAN
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count as f64).sqrt()
        };
        SeriesPoint { x, mean, std, count }
    }
}

/// A named metric as a function of a sweep variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub method: String,
    pub metric: String,
    pub points: Vec<SeriesPoint>,
}

impl MetricSeries {
    pub fn final_mean(&self) -> Option<f64> {
        self.points.last().map(|p| p.mean)
    }
}

/// Writes series in long format: `method,metric,x,mean,std,count`.
pub fn write_series_csv(path: &Path, series: &[MetricSeries]) -> crate::Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    w.write_record(["method", "metric", "x", "mean", "std", "count"])?;
    for s in series {
        for p in &s.points {
            w.write_record([
                s.method.clone(),
                s.metric.clone(),
                p.x.to_string(),
                p.mean.to_string(),
                p.std.to_string(),
                p.count.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!("checked io kind"),
        }
    } else {
        Error::Csv(e)
    }
}

/// Creates `dir` and stores the fully resolved scenario next to results.
pub fn prepare_output(dir: &Path, scenario: &Scenario) -> crate::Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(format!("{}.resolved.toml", scenario.name));
    fs::write(&path, scenario.resolved_toml()).map_err(|e| Error::io(&path, e))
}

// ---------------------------------------------------------------- fig 2 / 3

/// Placement searches compared on a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    pub seeds: Vec<u64>,
    pub simba: SimbaConfig,
    /// Iterations of the random baseline; defaults to SIMBA's episodes.
    pub random_iterations: Option<usize>,
    /// Run the exhaustive search when its enumeration fits this budget.
    pub exhaustive_budget: Option<u128>,
}

impl SearchSpec {
    pub fn new(seeds: Vec<u64>) -> Self {
        SearchSpec {
            seeds,
            simba: SimbaConfig::default(),
            random_iterations: None,
            exhaustive_budget: Some(crate::deployment::DEFAULT_ENUMERATION_BUDGET),
        }
    }
}

/// Outcome of every method on one seed.
#[derive(Clone, Debug)]
pub struct SeedRun {
    pub seed: u64,
    /// Cost upper bound used in place of "no feasible plan yet".
    pub cost_cap: f64,
    pub methods: BTreeMap<String, MethodRun>,
}

#[derive(Clone, Debug)]
pub struct MethodRun {
    pub outcome: SearchOutcome,
    pub qos_fraction: f64,
    pub deployed: usize,
}

#[derive(Clone, Debug)]
pub struct SearchComparison {
    pub scenario: String,
    pub runs: Vec<SeedRun>,
    pub notes: Vec<String>,
}

/// Runs SIMBA, random and (budget permitting) exhaustive search on each
/// seed's snapshot of `scenario`.
pub fn compare_searches(scenario: &Scenario, spec: &SearchSpec) -> SearchComparison {
    assert!(!spec.seeds.is_empty(), "at least one seed");
    let mut notes = Vec::new();
    let exhaustive_ok = match spec.exhaustive_budget {
        None => false,
        Some(budget) => {
            let eligible = scenario.grid.iter().filter(|g| g.eligible).count();
            let k = scenario.max_deployed.min(scenario.fleet_size());
            let need = crate::deployment::combination_count(eligible, k);
            if need > budget {
                notes.push(format!(
                    "exhaustive omitted on {}: {need} subsets exceed the budget of {budget}",
                    scenario.name
                ));
            }
            need <= budget
        }
    };
    let runs: Vec<SeedRun> = spec
        .seeds
        .par_iter()
        .map(|&seed| {
            let seeded = scenario.with_seed(seed);
            let ev = Evaluator::for_scenario(&seeded);
            let mut methods = BTreeMap::new();
            let judge = |outcome: SearchOutcome| {
                let (qos_fraction, deployed) = match outcome.plan() {
                    Some(plan) => (ev.evaluate_plan(plan.clone()).satisfied_fraction(), plan.deployed_count),
                    None => (0.0, 0),
                };
                MethodRun { outcome, qos_fraction, deployed }
            };
            let simba_cfg = SimbaConfig { rng_seed: seed, ..spec.simba.clone() };
            methods.insert("simba".to_string(), judge(simba(&ev, &simba_cfg).search));
            let iterations = spec.random_iterations.unwrap_or(spec.simba.episodes);
            methods.insert("random".to_string(), judge(random_deployment(&ev, iterations, seed)));
            if exhaustive_ok {
                let cfg =
                    ExhaustiveConfig { budget: spec.exhaustive_budget.unwrap_or(0), ..ExhaustiveConfig::default() };
                let out = exhaustive_search(&ev, &cfg).expect("budget checked above");
                methods.insert("exhaustive".to_string(), judge(out));
            }
            SeedRun { seed, cost_cap: ev.cost_upper_bound(), methods }
        })
        .collect();
    SearchComparison { scenario: scenario.name.clone(), runs, notes }
}

impl SearchComparison {
    pub fn methods(&self) -> Vec<String> {
        self.runs.first().map(|r| r.methods.keys().cloned().collect()).unwrap_or_default()
    }

    /// Best-so-far cost per iteration, averaged over seeds. Iterations
    /// before the first feasible plan count at the seed's cost cap.
    pub fn cost_series(&self) -> Vec<MetricSeries> {
        self.methods()
            .into_iter()
            .map(|m| {
                let len = self.runs.iter().map(|r| r.methods[&m].outcome.trace.len()).max().unwrap_or(0);
                let points = (0..len)
                    .map(|i| {
                        let values: Vec<f64> = self
                            .runs
                            .iter()
                            .map(|r| {
                                let trace = &r.methods[&m].outcome.trace;
                                let v = trace.get(i).or(trace.last()).copied().unwrap_or(f64::INFINITY);
                                v.min(r.cost_cap)
                            })
                            .collect();
                        SeriesPoint::of((i + 1) as f64, &values)
                    })
                    .collect();
                MetricSeries { method: m, metric: "best_cost".into(), points }
            })
            .collect()
    }

    /// Per method: satisfied-user fraction, deployed MAP count and share of
    /// seeds with a feasible plan.
    pub fn qos_table(&self) -> Vec<MetricSeries> {
        let mut out = Vec::new();
        for m in self.methods() {
            let pick = |f: &dyn Fn(&MethodRun) -> f64| self.runs.iter().map(|r| f(&r.methods[&m])).collect::<Vec<_>>();
            for (metric, values) in [
                ("qos_fraction", pick(&|r| r.qos_fraction)),
                ("uav_count", pick(&|r| r.deployed as f64)),
                ("feasible", pick(&|r| f64::from(u8::from(r.outcome.is_feasible())))),
            ] {
                out.push(MetricSeries {
                    method: m.clone(),
                    metric: metric.into(),
                    points: vec![SeriesPoint::of(0.0, &values)],
                });
            }
        }
        out
    }
}

/// Cost-vs-iteration series; writes `fig2_<scenario>.csv` when `out` is set.
pub fn run_fig2(scenario: &Scenario, spec: &SearchSpec, out: Option<&Path>) -> crate::Result<SearchComparison> {
    let cmp = compare_searches(scenario, spec);
    if let Some(dir) = out {
        prepare_output(dir, scenario)?;
        write_series_csv(&dir.join(format!("fig2_{}.csv", scenario.name)), &cmp.cost_series())?;
        write_notes(dir, "fig2", &cmp.notes)?;
    }
    Ok(cmp)
}

/// QoS fraction and MAP count per method; writes `fig3_<scenario>.csv`.
pub fn run_fig3(scenario: &Scenario, spec: &SearchSpec, out: Option<&Path>) -> crate::Result<SearchComparison> {
    let cmp = compare_searches(scenario, spec);
    if let Some(dir) = out {
        prepare_output(dir, scenario)?;
        write_series_csv(&dir.join(format!("fig3_{}.csv", scenario.name)), &cmp.qos_table())?;
        write_notes(dir, "fig3", &cmp.notes)?;
    }
    Ok(cmp)
}

fn write_notes(dir: &Path, stem: &str, notes: &[String]) -> crate::Result<()> {
    if notes.is_empty() {
        return Ok(());
    }
    let path = dir.join(format!("{stem}_notes.txt"));
    fs::write(&path, notes.join("\n") + "\n").map_err(|e| Error::io(&path, e))
}

// ---------------------------------------------------------------- fig 5 / 6

/// Where association policies come from.
#[derive(Clone, Debug, PartialEq)]
pub enum PolicySource {
    /// Train one per sweep point with this configuration.
    Train(TrainConfig),
    /// Load `policy_uav<n>.json` from a directory.
    Directory(PathBuf),
}

pub fn checkpoint_name(uavs: usize) -> String {
    format!("policy_uav{uavs}.json")
}

/// Deployment with at most `uavs` MAPs: SIMBA's plan (feasible or best
/// effort) with `K_max = uavs` on the scenario snapshot.
pub fn deployment_with(scenario: &Scenario, uavs: usize, simba_config: &SimbaConfig) -> crate::Result<DeploymentPlan> {
    if uavs == 0 {
        return Ok(DeploymentPlan::empty());
    }
    let limited = scenario.with_config(|c| c.maps.max_deployed = uavs)?;
    let ev = Evaluator::for_scenario(&limited);
    let outcome = simba(&ev, simba_config).search;
    Ok(outcome.plan().cloned().unwrap_or_else(DeploymentPlan::empty))
}

pub fn obtain_policy(
    source: &PolicySource,
    scenario: &Scenario,
    plan: &DeploymentPlan,
    seed: u64,
) -> crate::Result<PolicyModel> {
    match source {
        PolicySource::Train(cfg) => {
            if plan.deployed_count == 0 {
                // a single allowed action leaves nothing to learn
                return Ok(marl::new_policy(scenario, cfg, seed));
            }
            info!("training policy for {} MAPs ({} episodes)", plan.deployed_count, cfg.episodes);
            Ok(marl::train(scenario, plan, cfg, seed)?.policy)
        }
        PolicySource::Directory(dir) => {
            let path = dir.join(checkpoint_name(plan.deployed_count));
            if !path.exists() {
                return Err(Error::Marl(MarlError::Checkpoint(format!(
                    "missing policy for the {}-MAP sweep point: {}",
                    plan.deployed_count,
                    path.display()
                ))));
            }
            PolicyModel::load(&path)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssociationSpec {
    pub seed: u64,
    pub evaluation: EvaluationConfig,
    pub policy: PolicySource,
    pub simba: SimbaConfig,
}

/// MARL and MAX-SNR side by side at one sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonPoint {
    pub x: f64,
    pub marl: EvaluationReport,
    pub max_snr: EvaluationReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssociationSweep {
    pub variable: String,
    pub points: Vec<ComparisonPoint>,
}

impl AssociationSweep {
    pub fn series(&self) -> Vec<MetricSeries> {
        let mut out = Vec::new();
        type Metric = fn(&EvaluationReport) -> marl::Estimate;
        let metrics: [(&str, Metric); 4] = [
            ("log_sum_rate", |r| r.log_sum_rate),
            ("sum_rate_mbps", |r| r.sum_rate_mbps),
            ("qos_fraction", |r| r.qos_fraction),
            ("handover_frequency", |r| r.handover_frequency),
        ];
        for (method, get) in [
            ("marl", (|p: &ComparisonPoint| &p.marl) as fn(&ComparisonPoint) -> &EvaluationReport),
            ("max-snr", |p| &p.max_snr),
        ] {
            for (name, metric) in metrics {
                let points = self
                    .points
                    .iter()
                    .map(|p| {
                        let e = metric(get(p));
                        SeriesPoint { x: p.x, mean: e.mean, std: e.std, count: e.n }
                    })
                    .collect();
                out.push(MetricSeries { method: method.into(), metric: name.into(), points });
            }
        }
        out
    }

    /// Log sum-rate gained per added UAV between consecutive points.
    pub fn marginal_gains(&self) -> Vec<MetricSeries> {
        let mut out = Vec::new();
        for (method, get) in [
            ("marl", (|p: &ComparisonPoint| p.marl.log_sum_rate.mean) as fn(&ComparisonPoint) -> f64),
            ("max-snr", |p| p.max_snr.log_sum_rate.mean),
        ] {
            let points = self
                .points
                .windows(2)
                .map(|w| SeriesPoint {
                    x: w[1].x,
                    mean: (get(&w[1]) - get(&w[0])) / (w[1].x - w[0].x),
                    std: 0.0,
                    count: 1,
                })
                .collect();
            out.push(MetricSeries { method: method.into(), metric: "marginal_log_sum_rate".into(), points });
        }
        out
    }

    /// Sweep value where MAX-SNR's handover frequency exceeds MARL's the most.
    pub fn largest_handover_margin(&self) -> Option<(f64, f64)> {
        self.points
            .iter()
            .map(|p| (p.x, p.max_snr.handover_frequency.mean - p.marl.handover_frequency.mean))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

fn compare_at(
    scenario: &Scenario,
    plan: &DeploymentPlan,
    policy: &PolicyModel,
    evaluation: &EvaluationConfig,
    seed: u64,
    x: f64,
) -> crate::Result<ComparisonPoint> {
    let greedy = Associator::Policy { policy, selection: ActionSelection::Greedy };
    Ok(ComparisonPoint {
        x,
        marl: evaluate(greedy, scenario, plan, evaluation, seed)?,
        max_snr: evaluate(Associator::MaxSnr, scenario, plan, evaluation, seed)?,
    })
}

/// Log sum-rate and QoS against the number of deployed UAVs.
pub fn run_fig5(
    scenario: &Scenario,
    uav_counts: &[usize],
    spec: &AssociationSpec,
    out: Option<&Path>,
) -> crate::Result<AssociationSweep> {
    check_increasing(uav_counts.iter().map(|&u| u as f64))?;
    let mut points = Vec::with_capacity(uav_counts.len());
    for &uavs in uav_counts {
        let plan = deployment_with(scenario, uavs, &spec.simba)?;
        let policy = obtain_policy(&spec.policy, scenario, &plan, spec.seed)?;
        if let (Some(dir), PolicySource::Train(_)) = (out, &spec.policy) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            policy.save(&dir.join(checkpoint_name(plan.deployed_count)))?;
        }
        points.push(compare_at(scenario, &plan, &policy, &spec.evaluation, spec.seed, uavs as f64)?);
    }
    let sweep = AssociationSweep { variable: "uavs".into(), points };
    if let Some(dir) = out {
        prepare_output(dir, scenario)?;
        let mut series = sweep.series();
        series.extend(sweep.marginal_gains());
        write_series_csv(&dir.join(format!("fig5_{}.csv", scenario.name)), &series)?;
    }
    Ok(sweep)
}

/// Users needed for density `lambda` (UEs/m^2) on the scenario's area.
pub fn users_for_density(scenario: &Scenario, lambda: f64) -> usize {
    (lambda * scenario.area.size_m2()).round().max(1.0) as usize
}

/// Log sum-rate and handover frequency against user density, on one
/// deployment with one policy (trained at the scenario's own density).
pub fn run_fig6(
    scenario: &Scenario,
    densities: &[f64],
    uavs: usize,
    spec: &AssociationSpec,
    out: Option<&Path>,
) -> crate::Result<AssociationSweep> {
    check_increasing(densities.iter().copied())?;
    let plan = deployment_with(scenario, uavs, &spec.simba)?;
    let policy = obtain_policy(&spec.policy, scenario, &plan, spec.seed)?;
    let points = densities
        .iter()
        .map(|&lambda| {
            let evaluation =
                EvaluationConfig { n_users: Some(users_for_density(scenario, lambda)), ..spec.evaluation.clone() };
            compare_at(scenario, &plan, &policy, &evaluation, spec.seed, lambda)
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let sweep = AssociationSweep { variable: "lambda".into(), points };
    if let Some(dir) = out {
        prepare_output(dir, scenario)?;
        write_series_csv(&dir.join(format!("fig6_{}.csv", scenario.name)), &sweep.series())?;
        if let Some((lambda, margin)) = sweep.largest_handover_margin() {
            let path = dir.join("fig6_notes.txt");
            let text = format!("largest MAX-SNR minus MARL handover frequency: {margin:.4} at lambda = {lambda}\n");
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(sweep)
}

fn check_increasing(values: impl Iterator<Item = f64>) -> crate::Result<()> {
    let v: Vec<f64> = values.collect();
    if v.is_empty() || v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Usage("sweep values must be non-empty and strictly increasing".into()));
    }
    Ok(())
}
