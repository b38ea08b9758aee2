use rand::Rng;
use rayon::prelude::*;

use super::{intervals_from_paths, BootstrapSettings, IntervalForecast, ResidualMemory};
use crate::data::{FeatureMatrix, INTERVALS_PER_DAY};
use crate::error::{Error, Result};
use crate::point_models::{fit, FittedModel, RegressorSpec};
use crate::rng::{substream, Domain};

/// Bootstrap aggregating baseline.
///
/// Fits `spec` on the training rows, then for each replicate perturbs the
/// fitted training values with block-bootstrapped residual days from
/// `memory`, refits on the perturbed targets and predicts every test row.
/// Interval bounds per test row come from the spread of the replicate
/// predictions; the point forecast is the unperturbed model's prediction.
pub fn bagging_forecast(
    train: &FeatureMatrix,
    spec: &RegressorSpec,
    memory: &ResidualMemory,
    test: &FeatureMatrix,
    settings: &BootstrapSettings,
) -> Result<Vec<IntervalForecast>> {
    settings.validate()?;
    if !train.len().is_multiple_of(INTERVALS_PER_DAY) || !test.len().is_multiple_of(INTERVALS_PER_DAY) {
        return Err(Error::PartialDay("bagging needs whole training and test days".into()));
    }
    let base = fit(spec, train)?;
    let fitted = base.predict(train)?;
    let point = base.predict(test)?;

    let predictions: Vec<Vec<f64>> = (0..settings.replicates)
        .into_par_iter()
        .map(|r| {
            replicate(train, &fitted, spec, memory, test, settings.seed, r).map_err(|e| {
                Error::Replicate {
                    replicate: r,
                    source: Box::new(e),
                }
            })
        })
        .collect::<Result<_>>()?;

    test.labels()
        .chunks_exact(INTERVALS_PER_DAY)
        .enumerate()
        .map(|(k, labels)| {
            let rows = k * INTERVALS_PER_DAY..(k + 1) * INTERVALS_PER_DAY;
            let paths: Vec<Vec<f64>> = predictions.iter().map(|p| p[rows.clone()].to_vec()).collect();
            intervals_from_paths(labels[0].0, point[rows].to_vec(), &paths, &settings.alphas, None)
        })
        .collect()
}

/// Targets of one perturbed copy of the training set.
pub fn perturbed_targets(
    fitted: &[f64],
    memory: &ResidualMemory,
    seed: u64,
    replicate: usize,
) -> Vec<f64> {
    let pool = memory.pool();
    let l = memory.block_length().get();
    let mut rng = substream(seed, Domain::BaggingReplicate, &[replicate as u64]);
    let mut targets = Vec::with_capacity(fitted.len());
    for day in fitted.chunks_exact(INTERVALS_PER_DAY) {
        for (pos, block) in day.chunks_exact(l).enumerate() {
            let z = &pool[rng.random_range(0..pool.len())][pos * l..(pos + 1) * l];
            targets.extend(block.iter().zip(z).map(|(y, e)| y + e));
        }
    }
    targets
}

fn replicate(
    train: &FeatureMatrix,
    fitted: &[f64],
    spec: &RegressorSpec,
    memory: &ResidualMemory,
    test: &FeatureMatrix,
    seed: u64,
    r: usize,
) -> Result<Vec<f64>> {
    let perturbed = train.with_targets(perturbed_targets(fitted, memory, seed, r))?;
    let model: FittedModel = fit(spec, &perturbed)?;
    model.predict(test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bootstrap::BlockLength;
    use crate::data::DayVector;

    fn rows(days: usize, arity: usize, first_day: usize) -> FeatureMatrix {
        let mut m = FeatureMatrix::new(arity);
        for d in 0..days {
            for s in 0..INTERVALS_PER_DAY {
                let x: Vec<f64> = (0..arity).map(|k| ((d * 7 + s * (k + 3)) % 11) as f64).collect();
                let y = 20.0 + x.iter().sum::<f64>() * 0.5 + (s % 5) as f64;
                m.push(&x, y, (first_day + d, s)).unwrap();
            }
        }
        m
    }

    fn memory(values: &[f64]) -> ResidualMemory {
        ResidualMemory::new(
            values
                .iter()
                .enumerate()
                .map(|(d, &v)| DayVector::new(d, vec![v; INTERVALS_PER_DAY]).unwrap()),
            BlockLength::default(),
        )
        .unwrap()
    }

    fn settings(replicates: usize) -> BootstrapSettings {
        BootstrapSettings {
            alphas: vec![0.10],
            replicates,
            seed: 11,
        }
    }

    #[test]
    fn zero_memory_collapses_to_point() {
        let out = bagging_forecast(
            &rows(3, 2, 1),
            &RegressorSpec::least_squares(),
            &memory(&[0.0, 0.0]),
            &rows(2, 2, 4),
            &settings(8),
        )
        .unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].day, 4);
        for f in &out {
            let band = &f.bands[0];
            for s in 0..INTERVALS_PER_DAY {
                assert!((band.lower[s] - f.point[s]).abs() < 1e-9);
                assert!((band.upper[s] - f.point[s]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn replicates_are_deterministic() {
        let run = || {
            bagging_forecast(
                &rows(3, 2, 1),
                &RegressorSpec::boosted_trees(),
                &memory(&[1.0, -2.0, 0.5]),
                &rows(1, 2, 4),
                &settings(2),
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn intercept_only_spread_matches_closed_form() {
        // with no features every replicate predicts mean(fitted) + mean of the
        // drawn blocks, each block being ±c with probability one half
        let c = 2.0;
        let train = rows(4, 0, 1);
        let blocks = train.len() / BlockLength::default().get();
        let mem = memory(&[c, -c]);
        let fitted = vec![train.targets().iter().sum::<f64>() / train.len() as f64; train.len()];
        let n = 4000;
        let means: Vec<f64> = (0..n)
            .map(|r| {
                let t = perturbed_targets(&fitted, &mem, 9, r);
                t.iter().sum::<f64>() / t.len() as f64 - fitted[0]
            })
            .collect();
        let mean = means.iter().sum::<f64>() / n as f64;
        let sd = (means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let expected = c / (blocks as f64).sqrt();
        assert!(mean.abs() < 4.0 * expected / (n as f64).sqrt());
        assert!((sd / expected - 1.0).abs() < 0.05, "sd {sd} vs {expected}");

        let out = bagging_forecast(
            &train,
            &RegressorSpec::least_squares(),
            &mem,
            &rows(1, 0, 5),
            &settings(n),
        )
        .unwrap();
        let band = &out[0].bands[0];
        let width = band.upper[0] - band.lower[0];
        let z90 = 1.6448536269514722;
        assert!((width / (2.0 * z90 * expected) - 1.0).abs() < 0.1, "width {width}");
    }

    #[test]
    fn partial_days_are_rejected() {
        let mut test = rows(1, 2, 4);
        test.push(&[1.0, 2.0], 3.0, (5, 0)).unwrap();
        let err = bagging_forecast(
            &rows(2, 2, 1),
            &RegressorSpec::least_squares(),
            &memory(&[1.0]),
            &test,
            &settings(4),
        );
        assert!(matches!(err, Err(Error::PartialDay(_))));
    }
}
