//! One function per experiment kind; each returns the table to emit.

use std::path::PathBuf;

use rayon::prelude::*;

use stabcheck_core::adversarial::{
    adversarial_pair, btrain_condition, critical_c, instability_lower_bound, AdversarialWrap,
    CorruptionKind, SeedFunctionMethod, SeedRegion, Trigger,
};
use stabcheck_core::binom_test::{
    kappa_floor, mc_power, power_closed_form, BinomialStrategy, BinomialTestConfig, PowerSetup,
};
use stabcheck_core::bounds::{
    data_counts_suite, multinomial_suite, partition_suite, theorem1_bound, theorem2_bound,
    theorem3_bound, PowerBoundInputs, SpaceSize, SuiteReport,
};
use stabcheck_core::harness::{
    coupled_run, detect_events, run_test, BudgetLedger, EventQuery, ExitReason, HarnessSeeds,
    ModelAccess, RandomStrategy, TestInputs,
};
use stabcheck_core::seed::derive_key;
use stabcheck_core::stability::{
    check_enumeration_cap, estimate_delta_star_exact_with, estimate_delta_star_mc, ExactOptions,
};
use stabcheck_core::zoo::SeedThresholdLearner;
use stabcheck_core::{
    sample_dataset, FiniteDistribution, Learner, RandomSeed, SharedLearner, Space,
};

use crate::config::ExperimentConfig;
use crate::output::{num, Table};
use crate::CliError;

fn access(cfg: &ExperimentConfig) -> Result<ModelAccess, CliError> {
    match cfg.access.as_str() {
        "transparent" => Ok(ModelAccess::Transparent),
        "black-box" => Ok(ModelAccess::BlackBox),
        other => Err(CliError::Config(format!(
            "access must be 'transparent' or 'black-box', got '{other}'"
        ))),
    }
}

fn finite(v: SpaceSize, what: &str) -> Result<u64, CliError> {
    match v {
        SpaceSize::Finite(v) => Ok(v),
        SpaceSize::Infinite => Err(CliError::Config(format!("{what} must be finite here"))),
    }
}

fn exact_options(cfg: &ExperimentConfig) -> ExactOptions {
    ExactOptions {
        cap: cfg.enumeration_cap,
        ..ExactOptions::default()
    }
}

pub fn estimate_stability(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let dist = cfg.distribution()?;
    let learner = cfg.learner()?;
    let (mc, exact) = match cfg.method.as_str() {
        "monte-carlo" => (true, false),
        "exact" => (false, true),
        "auto" => (
            true,
            check_enumeration_cap(&dist, cfg.n, cfg.enumeration_cap).is_ok(),
        ),
        other => {
            return Err(CliError::Config(format!(
                "method must be monte-carlo, exact or auto, got '{other}'"
            )))
        }
    };
    let mut t = Table::new(&["method", "epsilon", "n", "trials", "estimate", "std_error"]);
    let mut estimates = Vec::new();
    if mc {
        estimates.push(estimate_delta_star_mc(
            learner.as_ref(),
            &dist,
            cfg.n,
            cfg.epsilon,
            cfg.trials,
            cfg.seed,
        )?);
    }
    if exact {
        let opts = ExactOptions {
            seed_key: derive_key(cfg.seed, 0x5eed),
            ..exact_options(cfg)
        };
        estimates.push(estimate_delta_star_exact_with(
            learner.as_ref(),
            &dist,
            cfg.n,
            cfg.epsilon,
            &opts,
        )?);
    }
    for e in estimates {
        t.push(vec![
            e.method.as_str().into(),
            num(e.epsilon),
            e.n.to_string(),
            e.trials.to_string(),
            num(e.point_estimate),
            num(e.std_error),
        ]);
    }
    Ok(t)
}

/// Budgets and input sizes for `k` complete pairs.
fn pair_budgets(n: usize, k: u64) -> (u64, usize, usize) {
    (k * (2 * n as u64 - 1), k as usize * n, k as usize)
}

fn power_setup(cfg: &ExperimentConfig, delta: f64, k: Option<u64>) -> Result<PowerSetup, CliError> {
    let access = access(cfg)?;
    let (b_train, nl, nu) = match k {
        Some(k) => pair_budgets(cfg.n, k),
        None => {
            let (b, nl, nu) = pair_budgets(cfg.n, 5);
            (
                cfg.b_train
                    .map(|v| finite(v, "b_train"))
                    .transpose()?
                    .unwrap_or(b),
                cfg.n_labeled.unwrap_or(nl),
                cfg.n_unlabeled.unwrap_or(nu),
            )
        }
    };
    let config = BinomialTestConfig::new(cfg.epsilon, delta, cfg.alpha, cfg.n, b_train, nl, nu)?;
    let b_eval = cfg.b_eval.map(|v| finite(v, "b_eval")).transpose()?;
    Ok(PowerSetup {
        config,
        b_train,
        b_eval,
        n_labeled: nl,
        n_unlabeled: nu,
        access,
    })
}

pub fn run_binom_test(
    cfg: &ExperimentConfig,
    trace_path: Option<PathBuf>,
) -> Result<Table, CliError> {
    let dist = cfg.distribution()?;
    let learner = cfg.learner()?;
    let setup = power_setup(cfg, cfg.delta, None)?;
    let inputs = setup.sample_inputs(&dist, derive_key(cfg.seed, 1))?;
    let mut strategy = BinomialStrategy::new(setup.config.clone());
    let trace = run_test(
        &mut strategy,
        learner.as_ref(),
        &inputs,
        setup.ledger()?,
        setup.access,
        HarnessSeeds::new(derive_key(cfg.seed, 2)),
    )?;
    let b = strategy.statistic(
        &inputs,
        &stabcheck_core::harness::History::new(&trace.rounds, trace.header.access),
    )?;
    if let Some(p) = &trace_path {
        trace.save(p)?;
    }
    let mut t = Table::new(&[
        "verdict",
        "statistic",
        "kappa_floor",
        "used_train",
        "used_eval",
        "exit",
        "trace",
    ]);
    t.push(vec![
        trace.verdict.as_u8().to_string(),
        b.map_or("none".into(), |b| b.to_string()),
        setup.config.kappa_floor.to_string(),
        trace.ledger.used_train.to_string(),
        trace.ledger.used_eval.to_string(),
        exit_name(trace.exit).into(),
        trace_path.map_or("-".into(), |p| p.display().to_string()),
    ]);
    Ok(t)
}

fn exit_name(e: ExitReason) -> &'static str {
    match e {
        ExitReason::Stopped => "stopped",
        ExitReason::TrainBudget => "train-budget",
        ExitReason::EvalBudget => "eval-budget",
        ExitReason::RoundLimit => "round-limit",
    }
}

pub fn power_experiment(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let dist = cfg.distribution()?;
    let mut t = Table::new(&[
        "delta_star",
        "delta",
        "kappa_floor",
        "alpha",
        "mc_power",
        "closed_form",
        "std_error",
        "trials",
    ]);
    let mut row = 0u64;
    for &delta in &cfg.deltas {
        let mut stars = cfg.delta_stars.clone();
        if !stars.contains(&delta) {
            stars.push(delta);
        }
        for &ds in &stars {
            let learner = SeedThresholdLearner::new(ds)?;
            for &k in &cfg.kappas {
                if k == 0 {
                    return Err(CliError::Config("kappas must be positive".into()));
                }
                let setup = power_setup(cfg, delta, Some(k))?;
                let est = mc_power(
                    &learner,
                    &dist,
                    &setup,
                    cfg.trials,
                    derive_key(cfg.seed, row),
                )?;
                let closed = power_closed_form(cfg.alpha, ds, delta, k)?;
                t.push(vec![
                    num(ds),
                    num(delta),
                    k.to_string(),
                    num(cfg.alpha),
                    num(est.rate),
                    num(closed.value),
                    num(est.std_error),
                    cfg.trials.to_string(),
                ]);
                row += 1;
            }
        }
    }
    Ok(t)
}

/// The configured distribution on a space one larger in each coordinate,
/// leaving the new feature and response free for a point mass.
fn embed(dist: &FiniteDistribution) -> Result<FiniteDistribution, CliError> {
    let s = dist.space();
    let big = Space::new(s.x_size + 1, s.y_size + 1)?;
    let mut probs = vec![0.0; big.atoms()];
    for x in 0..s.x_size as usize {
        for y in 0..s.y_size as usize {
            probs[x * big.y_size as usize + y] = dist.probs()[x * s.y_size as usize + y];
        }
    }
    Ok(FiniteDistribution::new(big, probs)?)
}

/// Share of coupled runs whose verdicts agree among runs where the trigger
/// event held; `NaN` if it never held.
fn coupling_agreement(
    cfg: &ExperimentConfig,
    base: &dyn Learner,
    wrap: &AdversarialWrap,
    dist: &FiniteDistribution,
    query: &EventQuery,
    access: ModelAccess,
) -> Result<f64, CliError> {
    let n = cfg.n;
    let strategy = RandomStrategy {
        n,
        max_size: n + 2,
        max_eval: 2,
        stop_prob: 0.3,
    };
    let runs: Vec<(bool, bool)> = (0..cfg.trials)
        .into_par_iter()
        .map(|run| {
            let labeled = sample_dataset(dist, 2 * n, &RandomSeed::derived(cfg.seed ^ 0xc0, run));
            let mut rng = RandomSeed::derived(cfg.seed ^ 0xc1, run).stream();
            let inputs = TestInputs::new(labeled, dist.sample_features(n, &mut rng))?;
            let (a, b) = coupled_run(
                &strategy,
                base,
                wrap,
                &inputs,
                BudgetLedger::with_eval(4 * n as u64, 2 * n as u64)?,
                access,
                HarnessSeeds::new(derive_key(cfg.seed, run)),
            )?;
            let f = detect_events(&a, query);
            let held = [f.e_y, f.e_x, f.e_x_eval, f.e_r, f.e_q]
                .into_iter()
                .flatten()
                .all(|v| v);
            Ok((held, a.verdict == b.verdict))
        })
        .collect::<Result<_, stabcheck_core::Error>>()?;
    let held = runs.iter().filter(|r| r.0).count();
    let agree = runs.iter().filter(|r| r.0 && r.1).count();
    Ok(if held == 0 {
        f64::NAN
    } else {
        agree as f64 / held as f64
    })
}

pub fn adversarial_demo(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let base_dist = embed(&cfg.distribution()?)?;
    let learner: SharedLearner = cfg.learner()?;
    let opts = exact_options(cfg);
    let ds =
        estimate_delta_star_exact_with(learner.as_ref(), &base_dist, cfg.n, cfg.epsilon, &opts)?
            .point_estimate;
    if ds > cfg.delta {
        return Err(CliError::Config(format!(
            "base learner has delta* = {ds} > delta = {}; nothing to hide",
            cfg.delta
        )));
    }
    let space = base_dist.space();
    let mut t = Table::new(&[
        "kind",
        "c",
        "n",
        "lower_bound",
        "exact_instability",
        "coupled_verdict_agreement_rate",
    ]);
    for kind in &cfg.kinds {
        let corruption = match kind.as_str() {
            "response" => Some(CorruptionKind::Response),
            "feature-train" => Some(CorruptionKind::FeatureTrain),
            "feature-eval" => Some(CorruptionKind::FeatureEval),
            "seed-region" => None,
            other => {
                return Err(CliError::Config(format!(
                    "unknown adversarial kind '{other}'"
                )))
            }
        };
        let row = match corruption {
            Some(k) => {
                let c = (critical_c(k, cfg.n, cfg.delta, ds)? + cfg.c_offset).min(1.0);
                let target = match k {
                    CorruptionKind::Response => space.y_size - 1,
                    _ => space.x_size - 1,
                };
                let (wrap, dist) = adversarial_pair(
                    k,
                    learner.clone(),
                    &base_dist,
                    cfg.n,
                    cfg.epsilon,
                    c,
                    target,
                )?;
                let exact =
                    estimate_delta_star_exact_with(&wrap, &dist, cfg.n, cfg.epsilon, &opts)?;
                let query = EventQuery {
                    n: cfg.n,
                    response: (k == CorruptionKind::Response).then_some(target),
                    feature: (k != CorruptionKind::Response).then_some(target),
                    ..EventQuery::default()
                };
                // evaluating the trigger feature is only hidden from black-box tests
                let access = match k {
                    CorruptionKind::FeatureEval => ModelAccess::BlackBox,
                    _ => ModelAccess::Transparent,
                };
                let agreement =
                    coupling_agreement(cfg, learner.as_ref(), &wrap, &dist, &query, access)?;
                [
                    k.as_str().to_string(),
                    num(c),
                    cfg.n.to_string(),
                    num(instability_lower_bound(k, c, cfg.n, ds)),
                    num(exact.point_estimate),
                    num(agreement),
                ]
            }
            None => {
                let leb = (cfg.delta + cfg.c_offset).min(1.0);
                let region = SeedRegion::interval(1.0 - leb, 1.0)?;
                let cond = btrain_condition(
                    learner.as_ref(),
                    &base_dist,
                    cfg.n,
                    cfg.epsilon,
                    &region,
                    cfg.delta,
                    SeedFunctionMethod::Exact {
                        cap: cfg.enumeration_cap,
                    },
                )?;
                let wrap = AdversarialWrap::new(
                    learner.clone(),
                    Trigger::SeedRegion(region.clone()),
                    cfg.n,
                    cfg.epsilon,
                    space,
                )?;
                let exact =
                    estimate_delta_star_exact_with(&wrap, &base_dist, cfg.n, cfg.epsilon, &opts)?;
                let query = EventQuery {
                    n: cfg.n,
                    region: Some(region),
                    ..EventQuery::default()
                };
                let agreement = coupling_agreement(
                    cfg,
                    learner.as_ref(),
                    &wrap,
                    &base_dist,
                    &query,
                    ModelAccess::Transparent,
                )?;
                [
                    "seed-region".to_string(),
                    num(leb),
                    cfg.n.to_string(),
                    num(cond.condition_value),
                    num(exact.point_estimate),
                    num(agreement),
                ]
            }
        };
        t.push(row.to_vec());
    }
    Ok(t)
}

pub fn bounds(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let n = cfg.n as u64;
    let nl = cfg.n_labeled.unwrap_or(10 * cfg.n) as u64;
    let nu = cfg.n_unlabeled.unwrap_or(0) as u64;
    let inp = PowerBoundInputs {
        alpha: cfg.alpha,
        epsilon: cfg.epsilon,
        delta: cfg.delta,
        delta_star: cfg.delta_star,
        n,
        n_labeled: nl,
        n_unlabeled: nu,
        b_train: cfg.b_train.unwrap_or(SpaceSize::Infinite),
        b_eval: cfg.b_eval.unwrap_or(SpaceSize::Infinite),
        x_size: cfg
            .x_size
            .unwrap_or(SpaceSize::Finite(u64::from(cfg.space.x_size))),
        y_size: cfg
            .y_size
            .unwrap_or(SpaceSize::Finite(u64::from(cfg.space.y_size))),
    };
    let t1 = theorem1_bound(&inp)?;
    let t3 = theorem3_bound(&inp)?;
    let max_mass = match cfg.max_point_mass {
        Some(m) => m,
        None => cfg.distribution()?.max_point_mass(),
    };
    let t2 = theorem2_bound(&inp, cfg.theorem2_c, max_mass)?;
    let b = match inp.b_train {
        SpaceSize::Finite(b) => b,
        SpaceSize::Infinite => u64::MAX,
    };
    let kf = kappa_floor(cfg.n, b, nl as usize, nu as usize)?;
    let binomial = if kf == 0 {
        0.0
    } else {
        power_closed_form(cfg.alpha, cfg.delta_star, cfg.delta, kf)?.value
    };
    let mut t = Table::new(&[
        "alpha",
        "delta",
        "delta_star",
        "n",
        "n_labeled",
        "n_unlabeled",
        "b_train",
        "b_eval",
        "x_size",
        "y_size",
        "computational",
        "y_term",
        "x_term",
        "minimum",
        "eval_term",
        "black_box_minimum",
        "deterministic",
        "deterministic_c",
        "deterministic_c_defaulted",
        "kappa_floor",
        "binomial_power",
    ]);
    t.push(vec![
        num(inp.alpha),
        num(inp.delta),
        num(inp.delta_star),
        n.to_string(),
        nl.to_string(),
        nu.to_string(),
        inp.b_train.to_string(),
        inp.b_eval.to_string(),
        inp.x_size.to_string(),
        inp.y_size.to_string(),
        num(t1.computational),
        num(t1.y_term),
        num(t1.x_term),
        num(t1.minimum),
        num(t3.eval_term),
        num(t3.minimum),
        num(t2.value),
        num(t2.c),
        t2.c_defaulted.to_string(),
        kf.to_string(),
        num(binomial),
    ]);
    Ok(t)
}

pub fn lemma_check(cfg: &ExperimentConfig) -> Result<(Table, bool), CliError> {
    if cfg.max_cells < 2 {
        return Err(CliError::Config("max_cells must be at least 2".into()));
    }
    let mut reports: Vec<SuiteReport> = Vec::new();
    for m in 2..=cfg.max_cells {
        let cap = 1.0 / (m as f64 - 1.0);
        for frac in [0.1, 0.5, 0.95] {
            reports.push(partition_suite(m, frac * cap, cfg.trials, cfg.seed)?);
        }
    }
    for m in 2..=cfg.max_cells.min(4) {
        reports.push(multinomial_suite(m, cfg.n_max, cfg.trials, cfg.seed)?);
    }
    reports.push(data_counts_suite(
        cfg.max_cells,
        cfg.n_max,
        &[(2, 3), (3, 3), (2, 4), (3, 4), (4, 4)],
    )?);
    let mut t = Table::new(&["suite", "m", "gamma", "cases", "failures", "worst_margin"]);
    let mut ok = true;
    for r in &reports {
        ok &= r.passed();
        t.push(vec![
            r.suite.clone(),
            r.m.to_string(),
            num(r.gamma),
            r.cases.to_string(),
            r.failures.to_string(),
            num(r.worst_margin),
        ]);
    }
    Ok((t, ok))
}
