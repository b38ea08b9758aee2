use cbb_core::data::{DemandSeries, HolidaySet, INTERVALS_PER_DAY};
use cbb_core::eval::{
    compare_methods, generate_synthetic, run_expanding_window, Method, RunConfig, SynthSpec,
};
use cbb_core::{Error, RegressorSpec};
use chrono::NaiveDate;

fn series() -> DemandSeries {
    let spec = SynthSpec {
        days: 60,
        ..SynthSpec::default()
    };
    generate_synthetic(&spec, 8).unwrap()
}

fn config(method: Method) -> RunConfig {
    RunConfig {
        split: NaiveDate::from_ymd_opt(2021, 2, 20),
        test_days: Some(3),
        method,
        model: RegressorSpec::least_squares(),
        replicates: 200,
        clusters: 3,
        recluster_every: 2,
        seed: 5,
        ..RunConfig::default()
    }
}

#[test]
fn three_day_horizon_runs_every_stage_three_times() {
    let out = run_expanding_window(&series(), &HolidaySet::default(), &config(Method::Cbb)).unwrap();
    assert_eq!(out.forecasts.len(), 3);
    assert_eq!(out.observed.len(), 3);
    assert_eq!(out.refits, 3);
    assert_eq!(out.memory_updates, 3);
    let days: Vec<usize> = out.forecasts.iter().map(|f| f.day).collect();
    assert_eq!(days, vec![50, 51, 52]);
    assert_eq!(out.scores.len(), 4);
    for f in &out.forecasts {
        assert_eq!(f.point.len(), INTERVALS_PER_DAY);
        assert!(f.cluster.is_some());
        for b in &f.bands {
            assert!(b.lower.iter().zip(&b.upper).all(|(l, u)| l <= u));
        }
    }
    // test days have no earlier same-date day in memory, so they are added
    assert_eq!(out.memory.memory().len(), 49 + 3);
    let z = out.memory.memory().get(52).unwrap();
    for ((y, p), r) in out.observed[2].values.iter().zip(&out.forecasts[2].point).zip(z) {
        assert!((y - p - r).abs() < 1e-9);
    }
}

#[test]
fn fixed_seed_reproduces_every_output() {
    for method in [Method::Cbb, Method::BlockBb, Method::Bagging] {
        let a = run_expanding_window(&series(), &HolidaySet::default(), &config(method)).unwrap();
        let b = run_expanding_window(&series(), &HolidaySet::default(), &config(method)).unwrap();
        assert_eq!(a.forecasts, b.forecasts, "{method}");
        assert_eq!(a.scores, b.scores, "{method}");
    }
}

#[test]
fn exactly_learnable_target_gives_full_coverage_and_zero_width() {
    let days = 40;
    let start = NaiveDate::from_ymd_opt(2021, 1, 1).unwrap();
    let demand = vec![50.0; days * INTERVALS_PER_DAY];
    let temperature = (0..days * INTERVALS_PER_DAY).map(|k| 40.0 + (k % 17) as f64).collect();
    let flat = DemandSeries::new(start, demand, temperature, 1).unwrap();
    for model in [RegressorSpec::least_squares(), RegressorSpec::boosted_trees()] {
        let cfg = RunConfig {
            split: NaiveDate::from_ymd_opt(2021, 2, 1),
            test_days: Some(5),
            model,
            replicates: 50,
            ..RunConfig::default()
        };
        let out = run_expanding_window(&flat, &HolidaySet::default(), &cfg).unwrap();
        for s in &out.scores {
            assert_eq!(s.cp, 1.0);
            assert!(s.ws.abs() < 1e-9);
        }
    }
}

#[test]
fn compare_single_config_matches_direct_run() {
    let cfg = config(Method::BlockBb);
    let direct = run_expanding_window(&series(), &HolidaySet::default(), &cfg).unwrap();
    let cmp = compare_methods(&series(), &HolidaySet::default(), std::slice::from_ref(&cfg)).unwrap();
    assert_eq!(cmp.rows.len(), cfg.alphas.len());
    for (row, s) in cmp.rows.iter().zip(&direct.scores) {
        assert_eq!((row.method.as_str(), row.model.as_str()), ("blockbb", "ols"));
        assert_eq!((row.ws, row.cp), (s.ws, s.cp));
    }
}

#[test]
fn single_cluster_cbb_scores_match_block_bootstrap() {
    let cbb = RunConfig { clusters: 1, ..config(Method::Cbb) };
    let block = RunConfig { clusters: 1, ..config(Method::BlockBb) };
    let cmp = compare_methods(&series(), &HolidaySet::default(), &[cbb, block]).unwrap();
    let (a, b) = cmp.rows.split_at(4);
    for (x, y) in a.iter().zip(b) {
        assert_eq!((x.ws, x.cp), (y.ws, y.cp));
    }
}

#[test]
fn compare_rejects_mixed_splits() {
    let a = config(Method::Cbb);
    let b = RunConfig {
        test_days: Some(2),
        ..config(Method::BlockBb)
    };
    assert!(matches!(
        compare_methods(&series(), &HolidaySet::default(), &[a, b]),
        Err(Error::Config(_))
    ));
}

#[test]
fn invalid_inputs_fail_before_the_loop() {
    let poisoned = series()
        .map_demand(50..51, |_, s, v| if s == 10 { f64::NAN } else { v });
    assert!(poisoned.is_err(), "non-finite demand is rejected at construction");

    let err = run_expanding_window(
        &series(),
        &HolidaySet::default(),
        &RunConfig { split: None, ..config(Method::Cbb) },
    )
    .unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}
