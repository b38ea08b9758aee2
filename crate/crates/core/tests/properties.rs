use cbb_core::bootstrap::{quantile_ranks, Band, IntervalForecast};
use cbb_core::cluster::{kmeans, lloyd};
use cbb_core::data::{aggregate_sites, DayVector, DemandSeries, FeatureMatrix};
use cbb_core::metrics::{aggregate_scores, winkler_point};
use cbb_core::point_models::{gbt, ols, TreeParams};
use chrono::NaiveDate;
use proptest::prelude::*;

/// Least squares with an intercept by Gaussian elimination on the normal equations.
fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let q = x[0].len() + 1;
    let mut a = vec![vec![0.0; q + 1]; q];
    for (xi, yi) in x.iter().zip(y) {
        let z: Vec<f64> = std::iter::once(1.0).chain(xi.iter().copied()).collect();
        for r in 0..q {
            for c in 0..q {
                a[r][c] += z[r] * z[c];
            }
            a[r][q] += z[r] * yi;
        }
    }
    for col in 0..q {
        let piv = (col..q).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        for r in 0..q {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=q {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..q).map(|r| a[r][q] / a[r][r]).collect()
}

fn design() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..=6).prop_flat_map(|p| {
        (p + 8..=50).prop_flat_map(move |n| {
            (
                prop::collection::vec(prop::collection::vec(-5.0..5.0f64, p), n),
                prop::collection::vec(-20.0..20.0f64, n),
            )
        })
    })
}

fn series(start: NaiveDate, demand: Vec<f64>, temperature: Vec<f64>) -> DemandSeries {
    DemandSeries::new(start, demand, temperature, 1).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn least_squares_matches_normal_equations((x, y) in design()) {
        let rows = FeatureMatrix::from_rows(x[0].len(), &x, &y).unwrap();
        let model = ols::fit(&rows, true).unwrap();
        let oracle = normal_equations(&x, &y);
        let ours: Vec<f64> = std::iter::once(model.intercept).chain(model.coefficients).collect();
        for (a, b) in ours.iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn boosting_never_raises_training_error(
        (x, y) in design(),
        trees in 1usize..20,
        depth in 1usize..4,
        lr in 0.05..1.0f64,
    ) {
        let rows = FeatureMatrix::from_rows(x[0].len(), &x, &y).unwrap();
        let params = TreeParams { tree_count: trees, max_depth: depth, learning_rate: lr, min_samples_leaf: 2 };
        let mut mse = Vec::new();
        gbt::fit_traced(&rows, &params, |p| {
            mse.push(p.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>());
        })
        .unwrap();
        for w in mse.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn lloyd_wss_is_monotone(
        points in prop::collection::vec(prop::collection::vec(-10.0..10.0f64, 3), 4..30),
        k in 1usize..4,
    ) {
        let refs: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
        let init = points[..k].to_vec();
        let run = lloyd(&refs, init, 100);
        for w in run.wss_history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * w[0].max(1.0));
        }
    }

    #[test]
    fn kmeans_partition_ignores_input_order(
        offsets in prop::collection::vec((0usize..3, -1.0..1.0f64, -1.0..1.0f64), 6..24),
        rotate in 0usize..24,
    ) {
        // three well-separated groups
        let centers = [(0.0, 0.0), (50.0, 0.0), (0.0, 50.0)];
        let days: Vec<DayVector> = offsets
            .iter()
            .enumerate()
            .map(|(d, &(g, dx, dy))| DayVector { day: d, values: vec![centers[g].0 + dx, centers[g].1 + dy] })
            .collect();
        let groups = offsets.iter().map(|o| o.0).collect::<std::collections::BTreeSet<_>>().len();
        let mut shuffled = days.clone();
        shuffled.rotate_left(rotate % days.len());
        shuffled.reverse();
        let a = kmeans(&days, groups, 1).unwrap();
        let b = kmeans(&shuffled, groups, 1).unwrap();
        prop_assert!((a.wss - b.wss).abs() <= 1e-9 * a.wss.max(1.0));
        let mut pa: Vec<Vec<usize>> = a.members();
        let mut pb: Vec<Vec<usize>> = b.members();
        pa.sort();
        pb.sort();
        prop_assert_eq!(pa, pb);
    }

    #[test]
    fn site_aggregation_commutes(
        a in prop::collection::vec(0.0..100.0f64, 96),
        b in prop::collection::vec(0.0..100.0f64, 96),
        ta in prop::collection::vec(-10.0..100.0f64, 96),
        tb in prop::collection::vec(-10.0..100.0f64, 96),
    ) {
        let start = NaiveDate::from_ymd_opt(2022, 3, 1).unwrap();
        let sa = series(start, a, ta);
        let sb = series(start, b, tb);
        let ab = aggregate_sites(&[sa.clone(), sb.clone()]).unwrap();
        let ba = aggregate_sites(&[sb, sa]).unwrap();
        prop_assert_eq!(ab.demand(), ba.demand());
        prop_assert_eq!(ab.temperature(), ba.temperature());
        prop_assert_eq!(ab.site_count(), 2);
    }

    #[test]
    fn widening_a_covering_interval_adds_twice_the_margin(
        lo in -50.0..50.0f64,
        width in 0.0..20.0f64,
        frac in 0.0..=1.0f64,
        delta in 0.0..10.0f64,
        alpha in 0.01..0.5f64,
    ) {
        let hi = lo + width;
        let y = lo + frac * width;
        let base = winkler_point(y, lo, hi, alpha).unwrap();
        let wide = winkler_point(y, lo - delta, hi + delta, alpha).unwrap();
        prop_assert!((wide - base - 2.0 * delta).abs() <= 1e-9 * (1.0 + wide.abs()));
    }

    #[test]
    fn winkler_splits_into_width_and_penalty(
        values in prop::collection::vec((-10.0..10.0f64, 0.0..5.0f64, -15.0..15.0f64), 8),
        alpha in 0.01..0.5f64,
    ) {
        let (lower, upper): (Vec<f64>, Vec<f64>) = values.iter().map(|&(l, w, _)| (l, l + w)).unzip();
        let obs: Vec<f64> = values.iter().map(|v| v.2).collect();
        let forecasts: Vec<IntervalForecast> = (0..2)
            .map(|d| IntervalForecast {
                day: d,
                point: vec![0.0; 4],
                bands: vec![Band { alpha, lower: lower[d * 4..d * 4 + 4].to_vec(), upper: upper[d * 4..d * 4 + 4].to_vec() }],
                replicates: 2,
                cluster: None,
            })
            .collect();
        let observed: Vec<DayVector> =
            (0..2).map(|d| DayVector { day: d, values: obs[d * 4..d * 4 + 4].to_vec() }).collect();
        let r = aggregate_scores(&forecasts, &observed, alpha).unwrap();
        prop_assert!((r.ws - r.mean_width - r.mean_penalty).abs() <= 1e-9 * r.ws.max(1.0));
        prop_assert!(r.mean_penalty >= 0.0);
        prop_assert!((0.0..=1.0).contains(&r.cp));
    }

    #[test]
    fn quantile_ranks_stay_ordered_and_in_range(n in 2usize..5000, alpha in 0.001..0.999f64) {
        let (lo, hi) = quantile_ranks(n, alpha);
        prop_assert!(1 <= lo && lo <= hi && hi <= n);
    }
}
