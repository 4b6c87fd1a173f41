//! Acceptance harness: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so that every line reaches the
//! terminal under `cargo test`. The process exits 0 regardless of the
//! verdicts so a shortfall is reported rather than hidden behind a red build;
//! set `ACCEPTANCE_STRICT=1` to turn any blocking FAIL into a non-zero exit.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use mapsim_core::association::{network_utility, qos_satisfaction, AssociationMatrix, RATE_FLOOR_BPS};
use mapsim_core::channel::{
    expected_pathloss, los_probability_mmwave, los_probability_sub6, pathloss_ground, pathloss_mmwave, pathloss_sub6,
    GroundParams, LinkType, MmwaveAirParams, Shadowing, Sub6AirParams,
};
use mapsim_core::deployment::{simba, DeploymentPlan, Evaluator, SimbaConfig};
use mapsim_core::experiments::{compare_searches, deployment_with, users_for_density, SearchComparison, SearchSpec};
use mapsim_core::marl::{
    discounted_returns, evaluate, loss_and_gradients, masked_softmax, train, ActionSelection, Associator,
    EvaluationConfig, EvaluationReport, FeatureScales, ObservationLayout, PolicyModel, Sample, TrainConfig,
};
use mapsim_core::rng::stream;
use mapsim_core::scenario::{elevation_angle, in_coverage, preset, Scenario, Vec3};
use proptest::prelude::*;
use proptest::test_runner::{Config as ProptestConfig, TestRunner};
use rand::Rng;
use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, StudentsT};

// ------------------------------------------------------------ tolerances

const SEEDS: u64 = 30;
const SIMBA_M: usize = 10;
const SIMBA_T: usize = 100;

/// Criterion 1.
const EXHAUSTIVE_GAP: f64 = 0.05;
const EXHAUSTIVE_SHARE: f64 = 0.90;
const SMALL_RUNTIME_LIMIT: Duration = Duration::from_secs(300);
/// Criterion 2.
const SMALL_QOS: f64 = 1.0;
const MEDIUM_QOS: f64 = 0.85;
/// Criterion 3.
const MEDIUM_MAP_TARGET: f64 = 4.22;
const MEDIUM_MAP_TOLERANCE: f64 = 0.5;
/// Criterion 4 (and 6).
const SIGNIFICANCE: f64 = 0.05;
/// Slack for comparing means of identical floating-point traces.
const COST_EPS: f64 = 1e-9;
/// Criterion 5.
const TIMING_R2: f64 = 0.95;
const TIMING_M: [usize; 5] = [2, 4, 6, 8, 10];
const TIMING_T: [usize; 5] = [10, 20, 30, 40, 50];
const TIMING_FIXED_M: usize = 5;
const TIMING_FIXED_T: usize = 20;
const TIMING_REPEATS: usize = 3;
/// Criterion 6: desk-scale training budget and evaluation size.
const MARL_UAVS: usize = 4;
const MARL_MIN_MAPS: usize = 3;
const MARL_TRAIN_EPISODES: usize = 300;
const MARL_LEARNING_RATE: f64 = 3e-4;
const MARL_EVAL_EPISODES: usize = 100;
const MARL_STRETCH_GAIN: f64 = 0.015;
const MARL_SEED: u64 = 0;
/// Criterion 7.
const HANDOVER_DENSITIES: [f64; 6] = [0.0005, 0.001, 0.003, 0.005, 0.007, 0.009];
const HANDOVER_EPISODES: usize = 30;
/// Criterion 8.
const PATHLOSS_TOL_DB: f64 = 0.01;
const GRADIENT_REL_TOL: f64 = 1e-4;
const PROPERTY_CASES: u32 = 100_000;

// -------------------------------------------------------------- reporting

struct Verdict {
    id: &'static str,
    title: &'static str,
    pass: bool,
    blocking: bool,
    detail: String,
}

fn report(v: &Verdict) {
    let tag = if v.pass { "PASS" } else { "FAIL" };
    let kind = if v.blocking { "" } else { " (non-blocking)" };
    println!("criterion {:<9} [{tag}] {}{kind}: {}", v.id, v.title, v.detail);
}

// ---------------------------------------------------------------- helpers

fn seeds() -> Vec<u64> {
    (0..SEEDS).collect()
}

fn search_spec() -> SearchSpec {
    SearchSpec {
        simba: SimbaConfig { monte_carlo_iters: SIMBA_M, episodes: SIMBA_T, rng_seed: 0 },
        random_iterations: Some(SIMBA_T),
        ..SearchSpec::new(seeds())
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Least-squares slope and coefficient of determination of `y` on `x`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// P(X >= wins) for X ~ Binomial(n, 1/2); 1 when there are no informative pairs.
fn sign_test_p(wins: u64, n: u64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if wins == 0 {
        return 1.0;
    }
    Binomial::new(0.5, n).expect("valid binomial").sf(wins - 1)
}

fn medium() -> Scenario {
    preset("mediumscale").expect("bundled preset")
}

fn small() -> Scenario {
    preset("smallscale").expect("bundled preset")
}

// ------------------------------------------------------------ criteria 1-4

fn criterion_1(cmp: &SearchComparison, elapsed: Duration) -> Verdict {
    let mut within = 0;
    let mut worst: f64 = 0.0;
    for run in &cmp.runs {
        let optimum = run.methods["exhaustive"].outcome.best.as_ref().map(|b| b.total_cost);
        let found = run.methods["simba"].outcome.best.as_ref().map(|b| b.total_cost);
        if let (Some(opt), Some(got)) = (optimum, found) {
            let gap = (got - opt) / opt;
            worst = worst.max(gap);
            if gap <= EXHAUSTIVE_GAP {
                within += 1;
            }
        }
    }
    let share = within as f64 / cmp.runs.len() as f64;
    Verdict {
        id: "1",
        title: "SmallScale SIMBA vs exhaustive optimum",
        pass: share >= EXHAUSTIVE_SHARE && elapsed < SMALL_RUNTIME_LIMIT,
        blocking: true,
        detail: format!(
            "{within}/{} seeds within {:.0}% (need {:.0}%), worst gap {:.2}%; {:.1} s for all three searches (limit {} s)",
            cmp.runs.len(),
            EXHAUSTIVE_GAP * 100.0,
            EXHAUSTIVE_SHARE * 100.0,
            worst * 100.0,
            elapsed.as_secs_f64(),
            SMALL_RUNTIME_LIMIT.as_secs()
        ),
    }
}

fn simba_qos(cmp: &SearchComparison) -> f64 {
    mean(&cmp.runs.iter().map(|r| r.methods["simba"].qos_fraction).collect::<Vec<_>>())
}

fn criterion_2(small: &SearchComparison, medium: &SearchComparison) -> Verdict {
    let (qs, qm) = (simba_qos(small), simba_qos(medium));
    Verdict {
        id: "2",
        title: "QoS satisfaction of SIMBA deployments",
        pass: qs >= SMALL_QOS - 1e-12 && qm >= MEDIUM_QOS,
        blocking: true,
        detail: format!("SmallScale {qs:.4} (need {SMALL_QOS:.2}), MediumScale {qm:.4} (need >= {MEDIUM_QOS:.2})"),
    }
}

fn criterion_3(medium: &SearchComparison) -> Verdict {
    let counts: Vec<f64> = medium.runs.iter().map(|r| r.methods["simba"].deployed as f64).collect();
    let feasible = medium.runs.iter().filter(|r| r.methods["simba"].outcome.is_feasible()).count();
    let m = mean(&counts);
    Verdict {
        id: "3",
        title: "MediumScale deployed MAP count",
        pass: (m - MEDIUM_MAP_TARGET).abs() <= MEDIUM_MAP_TOLERANCE,
        blocking: true,
        detail: format!(
            "mean {m:.2} MAPs (target {MEDIUM_MAP_TARGET} +/- {MEDIUM_MAP_TOLERANCE}); feasible on {feasible}/{} seeds",
            counts.len()
        ),
    }
}

/// Per-index mean dominance plus a sign test on the per-seed mean of the
/// best-so-far curve over the shared indices (ties dropped).
fn dominance(cmp: &SearchComparison) -> (bool, usize, f64, u64, u64, f64) {
    let series = cmp.cost_series();
    let get = |m: &str| series.iter().find(|s| s.method == m).expect("method present");
    let (s, r) = (get("simba"), get("random"));
    let shared = s.points.len().min(r.points.len());
    let violations: Vec<usize> = (0..shared).filter(|&i| s.points[i].mean > r.points[i].mean + COST_EPS).collect();
    let worst = (0..shared).map(|i| s.points[i].mean - r.points[i].mean).fold(f64::NEG_INFINITY, f64::max);

    let (mut wins, mut informative) = (0u64, 0u64);
    for run in &cmp.runs {
        let area = |m: &str| {
            let t = &run.methods[m].outcome.trace;
            (0..shared).map(|i| t.get(i).or(t.last()).copied().unwrap_or(f64::INFINITY).min(run.cost_cap)).sum::<f64>()
        };
        let (a, b) = (area("simba"), area("random"));
        if (a - b).abs() > COST_EPS {
            informative += 1;
            if a < b {
                wins += 1;
            }
        }
    }
    let p = sign_test_p(wins, informative);
    (violations.is_empty(), violations.len(), worst, wins, informative, p)
}

fn criterion_4(small: &SearchComparison, medium: &SearchComparison) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, cmp) in [("SmallScale", small), ("MediumScale", medium)] {
        let (ok, violations, worst, wins, n, p) = dominance(cmp);
        pass &= ok && p < SIGNIFICANCE;
        parts.push(format!(
            "{name}: {violations} indices where SIMBA's mean exceeds random's (max excess {worst:.4}), sign test {wins}/{n} wins p={p:.3e}"
        ));
    }
    Verdict {
        id: "4",
        title: "SIMBA dominates random search",
        pass,
        blocking: true,
        detail: format!("{} (need 0 indices and p < {SIGNIFICANCE})", parts.join("; ")),
    }
}

// -------------------------------------------------------------- criterion 5

fn time_simba(ev: &Evaluator<'_>, m: usize, t: usize) -> f64 {
    let mut samples: Vec<f64> = (0..TIMING_REPEATS)
        .map(|rep| {
            let start = Instant::now();
            std::hint::black_box(simba(ev, &SimbaConfig { monte_carlo_iters: m, episodes: t, rng_seed: rep as u64 }));
            start.elapsed().as_secs_f64()
        })
        .collect();
    samples.sort_by(f64::total_cmp);
    samples[samples.len() / 2]
}

fn criterion_5() -> Verdict {
    let scenario = medium();
    let ev = Evaluator::for_scenario(&scenario);
    let xm: Vec<f64> = TIMING_M.iter().map(|&m| m as f64).collect();
    let ym: Vec<f64> = TIMING_M.iter().map(|&m| time_simba(&ev, m, TIMING_FIXED_T)).collect();
    let xt: Vec<f64> = TIMING_T.iter().map(|&t| t as f64).collect();
    let yt: Vec<f64> = TIMING_T.iter().map(|&t| time_simba(&ev, TIMING_FIXED_M, t)).collect();
    let (_, r2m) = linear_fit(&xm, &ym);
    let (_, r2t) = linear_fit(&xt, &yt);
    Verdict {
        id: "5",
        title: "SIMBA wall time linear in M and T",
        pass: r2m > TIMING_R2 && r2t > TIMING_R2,
        blocking: true,
        detail: format!(
            "R^2 vs M = {r2m:.4} (T={TIMING_FIXED_T}), R^2 vs T = {r2t:.4} (M={TIMING_FIXED_M}), need > {TIMING_R2}; \
             median of {TIMING_REPEATS} runs on MediumScale"
        ),
    }
}

// ---------------------------------------------------------- criteria 6 and 7

struct Trained {
    scenario: Scenario,
    plan: DeploymentPlan,
    policy: PolicyModel,
    train_time: Duration,
}

fn train_policy() -> Trained {
    let scenario = medium();
    let plan = deployment_with(&scenario, MARL_UAVS, &SimbaConfig::default()).expect("deployment");
    let config =
        TrainConfig { episodes: MARL_TRAIN_EPISODES, learning_rate: MARL_LEARNING_RATE, ..TrainConfig::default() };
    let start = Instant::now();
    let outcome = train(&scenario, &plan, &config, MARL_SEED).expect("training");
    Trained { scenario, plan, policy: outcome.policy, train_time: start.elapsed() }
}

fn paired(
    marl: &EvaluationReport,
    base: &EvaluationReport,
    f: fn(&mapsim_core::marl::EpisodeSummary) -> f64,
) -> Vec<f64> {
    marl.episodes.iter().zip(&base.episodes).map(|(a, b)| f(a) - f(b)).collect()
}

fn criterion_6(t: &Trained) -> (Verdict, Verdict) {
    let cfg = EvaluationConfig { episodes: MARL_EVAL_EPISODES, ..EvaluationConfig::default() };
    let greedy = Associator::Policy { policy: &t.policy, selection: ActionSelection::Greedy };
    let seed = MARL_SEED + 1;
    let marl = evaluate(greedy, &t.scenario, &t.plan, &cfg, seed).expect("evaluation");
    let base = evaluate(Associator::MaxSnr, &t.scenario, &t.plan, &cfg, seed).expect("evaluation");
    let diffs = paired(&marl, &base, |e| e.log_sum_rate);
    let n = diffs.len() as f64;
    let md = mean(&diffs);
    let sd = (diffs.iter().map(|d| (d - md).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let tstat = md / (sd / n.sqrt());
    let p = StudentsT::new(0.0, 1.0, n - 1.0).expect("valid t").sf(tstat);
    let maps = t.plan.deployed_count;
    let gain = marl.log_sum_rate.mean / base.log_sum_rate.mean - 1.0;
    let main = Verdict {
        id: "6",
        title: "MARL log sum-rate not below MAX-SNR (MediumScale)",
        pass: maps >= MARL_MIN_MAPS && p < SIGNIFICANCE,
        blocking: true,
        detail: format!(
            "{maps} MAPs, {MARL_TRAIN_EPISODES} training episodes ({:.0} s); MARL {:.2} vs MAX-SNR {:.2} over {} paired episodes, \
             mean difference {md:.2}, one-sided t p={p:.3e} (need p < {SIGNIFICANCE})",
            t.train_time.as_secs_f64(),
            marl.log_sum_rate.mean,
            base.log_sum_rate.mean,
            diffs.len()
        ),
    };
    let stretch = Verdict {
        id: "6-stretch",
        title: "MARL log sum-rate gain",
        pass: gain >= MARL_STRETCH_GAIN,
        blocking: false,
        detail: format!("gain {:+.2}% (target {:+.1}%)", gain * 100.0, MARL_STRETCH_GAIN * 100.0),
    };
    (main, stretch)
}

fn criterion_7(t: &Trained) -> Verdict {
    let greedy = Associator::Policy { policy: &t.policy, selection: ActionSelection::Greedy };
    let (mut x, mut y_marl, mut y_base) = (Vec::new(), Vec::new(), Vec::new());
    let mut means = Vec::new();
    for &lambda in &HANDOVER_DENSITIES {
        let cfg = EvaluationConfig {
            episodes: HANDOVER_EPISODES,
            n_users: Some(users_for_density(&t.scenario, lambda)),
            ..EvaluationConfig::default()
        };
        let seed = MARL_SEED + 2;
        let marl = evaluate(greedy, &t.scenario, &t.plan, &cfg, seed).expect("evaluation");
        let base = evaluate(Associator::MaxSnr, &t.scenario, &t.plan, &cfg, seed).expect("evaluation");
        for (a, b) in marl.episodes.iter().zip(&base.episodes) {
            x.push(lambda);
            y_marl.push(a.handover_frequency);
            y_base.push(b.handover_frequency);
        }
        means.push(format!("{lambda}: {:.3}/{:.3}", marl.handover_frequency.mean, base.handover_frequency.mean));
    }
    let (slope_marl, _) = linear_fit(&x, &y_marl);
    let (slope_base, _) = linear_fit(&x, &y_base);
    Verdict {
        id: "7",
        title: "handover frequency slope vs user density",
        pass: slope_marl <= slope_base,
        blocking: true,
        detail: format!(
            "MARL slope {slope_marl:.3} vs MAX-SNR slope {slope_base:.3} per UE/m^2 over {} densities x {HANDOVER_EPISODES} episodes \
             (MARL/MAX-SNR means {})",
            HANDOVER_DENSITIES.len(),
            means.join(", ")
        ),
    }
}

// -------------------------------------------------------------- criterion 8

fn oracle_pathloss() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    let mut check = |name: &str, got: f64, want: f64, tol: f64| -> Result<(), String> {
        let err = (got - want).abs();
        worst = worst.max(err);
        if err <= tol {
            Ok(())
        } else {
            Err(format!("{name}: got {got}, expected {want}"))
        }
    };
    let sub6 = Sub6AirParams { los_shadow_mean_db: 0.0, nlos_shadow_mean_db: 0.0, ..Sub6AirParams::default() };
    check(
        "sub6 LoS probability at 90 deg",
        los_probability_sub6(90.0, &Sub6AirParams::default()),
        0.6 * 75f64.powf(0.11),
        1e-12,
    )?;
    check("sub6 LoS probability at 15 deg", los_probability_sub6(15.0, &Sub6AirParams::default()), 0.0, 0.0)?;
    let pl = |d: f64, f: f64| pathloss_sub6(d, f, LinkType::Los, &sub6, Shadowing::Off).map_err(|e| e.to_string());
    check("sub6 unit inputs", pl(1.0, 1.0)?, -27.55, PATHLOSS_TOL_DB)?;
    check("sub6 100 m at 2 GHz", pl(100.0, 2000.0)?, 78.47, PATHLOSS_TOL_DB)?;
    check("sub6 distance doubling", pl(74.0, 2000.0)? - pl(37.0, 2000.0)?, 6.02, PATHLOSS_TOL_DB)?;

    let mm = MmwaveAirParams::default();
    let mmpl = |d: f64, l: LinkType| pathloss_mmwave(d, l, &mm, Shadowing::Off).map_err(|e| e.to_string());
    check("mmwave LoS at 1 m", mmpl(1.0, LinkType::Los)?, mm.los_alpha_db, PATHLOSS_TOL_DB)?;
    check("mmwave LoS at 100 m", mmpl(100.0, LinkType::Los)?, 101.4, PATHLOSS_TOL_DB)?;
    if mmpl(50.0, LinkType::Nlos)? < mmpl(50.0, LinkType::Los)? {
        return Err("mmwave NLoS below LoS".into());
    }
    let none = MmwaveAirParams { building_density_per_m: 0.0, ..MmwaveAirParams::default() };
    check("mmwave LoS without buildings", los_probability_mmwave(500.0, 35.0, 0.0, &none), 1.0, 0.0)?;
    let one = MmwaveAirParams { building_density_per_m: 0.01, epsilon: 4.0, ..MmwaveAirParams::default() };
    let factor = 1.0 - (-20.0 / (2.0 * 16.0f64)).exp();
    check("mmwave LoS with one building", los_probability_mmwave(150.0, 20.0, 20.0, &one), factor * factor, 1e-12)?;

    let g = GroundParams::default();
    let gpl = |d: f64, f: f64| pathloss_ground(d, f, &g, Shadowing::Off).map_err(|e| e.to_string());
    check("ground 100 m at 2 GHz", gpl(100.0, 2.0)?, 94.12, PATHLOSS_TOL_DB)?;
    check("ground unit inputs", gpl(1.0, 1.0)?, g.beta_db, PATHLOSS_TOL_DB)?;
    check("ground frequency additivity", gpl(80.0, 28.0)? - gpl(80.0, 1.0)?, 10.0 * g.gamma * 28f64.log10(), 1e-9)?;

    check("expected path loss midpoint", expected_pathloss(0.5, 100.0, 120.0), 110.0, 1e-12)?;
    check("expected path loss pure LoS", expected_pathloss(1.0, 100.0, 120.0), 100.0, 1e-12)?;

    let o = Vec3::new(0.0, 0.0, 0.0);
    check("elevation at nadir", elevation_angle(o, Vec3::new(0.0, 0.0, 35.0)), 90.0, 1e-12)?;
    check("elevation at 45 deg", elevation_angle(o, Vec3::new(35.0, 0.0, 35.0)), 45.0, 1e-9)?;
    check("elevation at 30 deg", elevation_angle(o, Vec3::new(60.62, 0.0, 35.0)), 30.0, 0.01)?;
    let map = Vec3::new(0.0, 0.0, 35.0);
    if !in_coverage(map, 120.0, Vec3::new(60.0, 0.0, 0.0)) || in_coverage(map, 120.0, Vec3::new(61.0, 0.0, 0.0)) {
        return Err("coverage cone radius at 35 m / 120 deg".into());
    }
    Ok(format!("19 closed forms, max abs error {worst:.2e}"))
}

fn oracle_gradients() -> Result<String, String> {
    let scenario = small();
    let config = TrainConfig { hidden_sizes: vec![6], entropy_coef: 0.05, ..TrainConfig::default() };
    let layout = ObservationLayout { n_aps: 3, n_neighbors: 0 };
    let mut rng = stream(8, 0);
    let mut policy = PolicyModel::new(layout, FeatureScales::for_scenario(&scenario, 1.0), &config, &mut rng);
    let dim = layout.dim();
    let samples: Vec<Sample> = (0..8)
        .map(|i| {
            let features: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let allowed = vec![true, i % 4 != 0, true];
            let out = policy.forward(&features, &allowed).expect("policy forward");
            let action = [0, 2, 1][i % 3];
            let action = if allowed[action] { action } else { 0 };
            Sample {
                old_log_prob: out.log_probs[action] + rng.random_range(-0.05..0.05),
                value: out.value,
                ret: rng.random_range(-1.0..1.0),
                advantage: rng.random_range(-1.0..1.0),
                features,
                allowed,
                action,
            }
        })
        .collect();
    let batch: Vec<&Sample> = samples.iter().collect();
    let (_, ga, gc) = loss_and_gradients(&policy, &batch, &config);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for (critic, grads) in [(false, &ga), (true, &gc)] {
        for (i, &analytic) in grads.iter().enumerate() {
            let at = |v: f64, p: &mut PolicyModel| {
                let params = if critic { p.critic.params_mut() } else { p.actor.params_mut() };
                let orig = params[i];
                params[i] = v;
                let loss = loss_and_gradients(p, &batch, &config).0.total(&config);
                let params = if critic { p.critic.params_mut() } else { p.actor.params_mut() };
                params[i] = orig;
                loss
            };
            let orig = if critic { policy.critic.params()[i] } else { policy.actor.params()[i] };
            let fd = (at(orig + h, &mut policy) - at(orig - h, &mut policy)) / (2.0 * h);
            let scale = fd.abs().max(analytic.abs());
            if scale > 1e-7 {
                worst = worst.max((fd - analytic).abs() / scale);
            }
        }
    }
    if worst < GRADIENT_REL_TOL {
        Ok(format!("{} parameters, max relative error {worst:.2e}", ga.len() + gc.len()))
    } else {
        Err(format!("max relative gradient error {worst:.2e}"))
    }
}

fn oracle_returns() -> Result<String, String> {
    let mut rng = stream(9, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let len = rng.random_range(1..40);
        let rewards: Vec<f64> = (0..len).map(|_| rng.random_range(-5.0..5.0)).collect();
        let gamma = rng.random_range(0.0..1.0);
        let fast = discounted_returns(&rewards, gamma);
        for t in 0..len {
            let mut brute = 0.0;
            for (k, r) in rewards[t..].iter().enumerate() {
                brute += gamma.powi(k as i32) * r;
            }
            worst = worst.max((fast[t] - brute).abs());
        }
    }
    if worst < 1e-9 {
        Ok(format!("200 sequences, max error {worst:.1e}"))
    } else {
        Err(format!("max error {worst:.1e}"))
    }
}

fn oracle_utility() -> Result<String, String> {
    let utility = |x: f64, alpha: f64| if alpha == 1.0 { x.ln() } else { x.powf(1.0 - alpha) / (1.0 - alpha) };
    let mut rng = stream(10, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..2000 {
        let n = rng.random_range(1..=3);
        let alpha = [0.0, 0.5, 1.0, 2.0][rng.random_range(0..4)];
        let rates: Vec<f64> =
            (0..n).map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..5e8) }).collect();
        let demands: Vec<f64> = (0..n).map(|_| rng.random_range(1e6..4e8)).collect();
        let serving: Vec<Option<usize>> = (0..n).map(|_| [None, Some(0), Some(1)][rng.random_range(0..3)]).collect();
        let assoc = AssociationMatrix::from_serving(2, serving.clone());
        let got = network_utility(&rates, &demands, &assoc, alpha).map_err(|e| e.to_string())?;
        let mut want = 0.0;
        for j in 0..n {
            if serving[j].is_some() {
                want += utility(rates[j].min(demands[j]).max(RATE_FLOOR_BPS), alpha);
            }
        }
        worst = worst.max((got - want).abs() / want.abs().max(1.0));
    }
    if worst < 1e-12 {
        Ok(format!("2000 instances, max relative error {worst:.1e}"))
    } else {
        Err(format!("max error {worst:.1e}"))
    }
}

fn oracle_properties() -> Result<String, String> {
    let mut runner = TestRunner::new(ProptestConfig {
        cases: PROPERTY_CASES,
        failure_persistence: None,
        ..ProptestConfig::default()
    });
    let strategy = (
        prop_oneof![Just(0.0), 0.0..1e10f64, Just(f64::MAX)],
        prop_oneof![Just(0.0), 1e-3..1e10f64],
        prop::collection::vec((-60.0..60.0f64, any::<bool>()), 1..8),
    );
    runner
        .run(&strategy, |(rate, demand, logits)| {
            let k = qos_satisfaction(rate, demand);
            prop_assert!((0.0..=1.0).contains(&k), "kappa {} for R={} D={}", k, rate, demand);
            let mut allowed: Vec<bool> = logits.iter().map(|l| l.1).collect();
            allowed[0] = true;
            let values: Vec<f64> = logits.iter().map(|l| l.0).collect();
            let (probs, _) = masked_softmax(&values, &allowed);
            let total: f64 = probs.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12, "probabilities sum to {}", total);
            prop_assert!(probs.iter().zip(&allowed).all(|(p, a)| *p >= 0.0 && (*a || *p == 0.0)));
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!("{PROPERTY_CASES} randomized cases"))
}

fn criterion_8() -> Verdict {
    let parts: [(&str, Result<String, String>); 5] = [
        ("a", oracle_pathloss()),
        ("b", oracle_gradients()),
        ("c", oracle_returns()),
        ("d", oracle_utility()),
        ("e", oracle_properties()),
    ];
    let pass = parts.iter().all(|(_, r)| r.is_ok());
    let detail = parts
        .iter()
        .map(|(k, r)| match r {
            Ok(s) => format!("({k}) ok, {s}"),
            Err(s) => format!("({k}) FAILED, {s}"),
        })
        .collect::<Vec<_>>()
        .join("; ");
    Verdict { id: "8", title: "numerical oracle suite", pass, blocking: true, detail }
}

// -------------------------------------------------------------- criterion 9

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_mapsim"))
        .current_dir(dir)
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .map_err(|e| e.to_string())?;
    match out.status.code() {
        Some(0) | Some(2) => Ok(()),
        _ => Err(format!("`mapsim {}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr))),
    }
}

/// Every subcommand, with the outputs of `deploy` and `train` feeding the
/// commands that read them.
const CLI_RUNS: &[&[&str]] = &[
    &["fig2", "--out", "fig2", "--seeds", "3", "--monte-carlo", "4", "--episodes", "10"],
    &["fig3", "--out", "fig3", "--seeds", "3", "--monte-carlo", "4", "--episodes", "10"],
    &["deploy", "--out", "deploy", "--seed", "4"],
    &["train", "--out", "train", "--deployment", "deploy/plan.json", "--config", "train.toml", "--seed", "4"],
    &[
        "evaluate",
        "--out",
        "eval",
        "--deployment",
        "deploy/plan.json",
        "--policy",
        "train/policy.json",
        "--episodes",
        "3",
        "--length",
        "5",
    ],
    &[
        "evaluate",
        "--out",
        "eval",
        "--deployment",
        "deploy/plan.json",
        "--baseline",
        "max-snr",
        "--episodes",
        "3",
        "--length",
        "5",
    ],
    &["link-budget-dump", "--out", "links", "--deployment", "deploy/plan.json"],
    &["fig5", "--out", "fig5", "--uavs", "0,1", "--config", "train.toml", "--eval-episodes", "2", "--eval-length", "4"],
    &[
        "fig6",
        "--out",
        "fig6",
        "--densities",
        "0.001,0.002",
        "--uavs",
        "1",
        "--config",
        "train.toml",
        "--eval-episodes",
        "2",
        "--eval-length",
        "4",
    ],
];

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).expect("inside dir").to_string_lossy().into_owned();
                files.push((rel, std::fs::read(&path).expect("readable file")));
            }
        }
    }
    files.sort();
    files
}

fn criterion_9() -> Verdict {
    let outcome = (|| -> Result<String, String> {
        let mut snaps = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            std::fs::write(dir.path().join("train.toml"), "episodes = 3\nepisode_length = 6\n")
                .map_err(|e| e.to_string())?;
            for args in CLI_RUNS {
                run_cli(dir.path(), args)?;
            }
            snaps.push(snapshot(dir.path()));
        }
        let (a, b) = (&snaps[0], &snaps[1]);
        let names: Vec<&str> = a.iter().map(|f| f.0.as_str()).collect();
        if names != b.iter().map(|f| f.0.as_str()).collect::<Vec<_>>() {
            return Err("the two runs produced different file sets".into());
        }
        let differing: Vec<&str> = a.iter().zip(b).filter(|(x, y)| x.1 != y.1).map(|(x, _)| x.0.as_str()).collect();
        if differing.is_empty() {
            Ok(format!("{} subcommand runs, {} output files byte-identical across two runs", CLI_RUNS.len(), a.len()))
        } else {
            Err(format!("files differ: {}", differing.join(", ")))
        }
    })();
    Verdict {
        id: "9",
        title: "deterministic CLI outputs",
        pass: outcome.is_ok(),
        blocking: true,
        detail: outcome.unwrap_or_else(|e| e),
    }
}

// -------------------------------------------------------------------- main

fn main() {
    // `cargo test -- --list` and filters are meaningless for this harness.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut verdicts = Vec::new();
    let mut emit = |v: Verdict| {
        report(&v);
        verdicts.push(v);
    };

    let start = Instant::now();
    let small_cmp = compare_searches(&small(), &search_spec());
    let small_time = start.elapsed();
    let medium_cmp = compare_searches(&medium(), &search_spec());

    emit(criterion_1(&small_cmp, small_time));
    emit(criterion_2(&small_cmp, &medium_cmp));
    emit(criterion_3(&medium_cmp));
    emit(criterion_4(&small_cmp, &medium_cmp));
    emit(criterion_5());
    let trained = train_policy();
    let (main6, stretch6) = criterion_6(&trained);
    emit(main6);
    emit(stretch6);
    emit(criterion_7(&trained));
    emit(criterion_8());
    emit(criterion_9());

    let failed: Vec<&str> = verdicts.iter().filter(|v| v.blocking && !v.pass).map(|v| v.id).collect();
    let passed = verdicts.iter().filter(|v| v.blocking && v.pass).count();
    println!(
        "acceptance: {passed} passed, {} failed{} ({:.0} s)",
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" [{}]", failed.join(", ")) },
        start.elapsed().as_secs_f64()
    );
    if strict && !failed.is_empty() {
        std::process::exit(1);
    }
}
