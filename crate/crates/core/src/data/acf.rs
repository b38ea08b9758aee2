use crate::error::{Error, Result};

/// Sample autocorrelations and partial autocorrelations for lags `0..=max_lag`.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlogram {
    pub acf: Vec<f64>,
    pub pacf: Vec<f64>,
}

/// Sample ACF and Durbin–Levinson PACF. Lag 0 is 1 in both.
pub fn acf_pacf(values: &[f64], max_lag: usize) -> Result<Correlogram> {
    if max_lag == 0 {
        return Err(Error::InvalidArgument("max_lag must be positive".into()));
    }
    let n = values.len();
    if n <= max_lag + 1 {
        return Err(Error::InvalidArgument(format!(
            "need more than {} values for lag {max_lag}, got {n}",
            max_lag + 1
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("correlogram input".into()));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let denom: f64 = centered.iter().map(|v| v * v).sum();
    if denom <= f64::EPSILON * n as f64 * mean.abs().max(1.0).powi(2) {
        return Err(Error::ZeroVariance);
    }
    let acf: Vec<f64> = (0..=max_lag)
        .map(|k| {
            if k == 0 {
                1.0
            } else {
                centered[..n - k]
                    .iter()
                    .zip(&centered[k..])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    / denom
            }
        })
        .collect();

    let mut pacf = vec![1.0; max_lag + 1];
    let mut phi = vec![0.0; max_lag + 1];
    let mut prev = vec![0.0; max_lag + 1];
    let mut v: f64 = 1.0;
    for k in 1..=max_lag {
        let num = acf[k] - (1..k).map(|j| prev[j] * acf[k - j]).sum::<f64>();
        let reflection = if v.abs() < f64::MIN_POSITIVE { 0.0 } else { num / v };
        phi[k] = reflection;
        for j in 1..k {
            phi[j] = prev[j] - reflection * prev[k - j];
        }
        v *= 1.0 - reflection * reflection;
        pacf[k] = reflection;
        prev[..=k].copy_from_slice(&phi[..=k]);
    }
    Ok(Correlogram { acf, pacf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn lag_zero_is_one() {
        let c = acf_pacf(&noise(200, 1), 10).unwrap();
        assert_eq!(c.acf[0], 1.0);
        assert!(c.acf.iter().all(|r| (-1.0..=1.0).contains(r)));
    }

    #[test]
    fn white_noise_stays_in_band() {
        let n = 4000;
        let c = acf_pacf(&noise(n, 2), 40).unwrap();
        let band = 2.0 / (n as f64).sqrt();
        let inside = c.acf[1..].iter().filter(|r| r.abs() <= band).count();
        assert!(inside as f64 >= 0.9 * 40.0, "{inside} of 40 inside");
    }

    #[test]
    fn ar1_pacf_cuts_off_after_lag_one() {
        let e = noise(10_000, 3);
        let mut x = vec![0.0; e.len()];
        for t in 1..e.len() {
            x[t] = 0.8 * x[t - 1] + e[t];
        }
        let c = acf_pacf(&x, 5).unwrap();
        assert!((c.pacf[1] - 0.8).abs() < 0.03, "pacf1 {}", c.pacf[1]);
        assert!(c.pacf[2].abs() < 0.1, "pacf2 {}", c.pacf[2]);
        assert!((c.pacf[1] - c.acf[1]).abs() < 1e-12);
    }

    #[test]
    fn constant_sequence_is_rejected() {
        assert!(matches!(acf_pacf(&[3.0; 50], 5), Err(Error::ZeroVariance)));
    }

    #[test]
    fn short_sequence_is_rejected() {
        assert!(acf_pacf(&[1.0, 2.0, 3.0], 2).is_err());
    }
}
