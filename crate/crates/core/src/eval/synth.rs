//! Deterministic synthetic demand for property and acceptance runs.
//!
//! Demand is `level(day) * profile(slot) + noise`: `level` combines the base
//! load, an annual cosine peaking mid-January, a weekend multiplier and an
//! optional high-demand regime; `profile` has morning and evening peaks.
//! Noise is an AR(1) process over consecutive instants with unit stationary
//! variance, scaled either by a constant or by the current level.

use chrono::{Datelike, NaiveDate, Weekday};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{DemandSeries, INTERVALS_PER_DAY};
use crate::error::{Error, Result};
use crate::rng::{substream, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// Standard deviation in kW, independent of level.
    Constant { sigma: f64 },
    /// Standard deviation as a fraction of the noiseless demand.
    Proportional { cv: f64 },
}

/// Months in which demand and noise are scaled up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub months: Vec<u32>,
    pub level_multiplier: f64,
    pub noise_multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub start: NaiveDate,
    pub days: usize,
    /// Mean demand level in kW; every component scales with it.
    pub base_kw: f64,
    /// Relative depth of the intra-day profile.
    pub daily_amplitude: f64,
    /// Relative weekend change in level.
    pub weekend_effect: f64,
    /// Relative amplitude of the annual cycle.
    pub annual_amplitude: f64,
    pub noise: NoiseModel,
    /// Lag-one correlation of the noise between consecutive instants.
    pub noise_ar: f64,
    pub regime: Option<Regime>,
    pub temperature_mean_f: f64,
    pub temperature_amplitude_f: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2021, 1, 1).expect("valid date"),
            days: 365 + 90,
            base_kw: 40.0,
            daily_amplitude: 0.5,
            weekend_effect: 0.1,
            annual_amplitude: 0.25,
            noise: NoiseModel::Proportional { cv: 0.05 },
            noise_ar: 0.6,
            regime: None,
            temperature_mean_f: 52.0,
            temperature_amplitude_f: 18.0,
        }
    }
}

impl SynthSpec {
    /// No annual cycle and constant-variance noise.
    pub fn stationary(sigma: f64) -> Self {
        Self {
            annual_amplitude: 0.0,
            noise: NoiseModel::Constant { sigma },
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = [
            self.base_kw,
            self.daily_amplitude,
            self.weekend_effect,
            self.annual_amplitude,
            self.noise_ar,
            self.temperature_mean_f,
            self.temperature_amplitude_f,
        ]
        .iter()
        .all(|v| v.is_finite());
        let noise_ok = match self.noise {
            NoiseModel::Constant { sigma } => sigma.is_finite() && sigma >= 0.0,
            NoiseModel::Proportional { cv } => cv.is_finite() && cv >= 0.0,
        };
        if !finite || !noise_ok || self.noise_ar.abs() >= 1.0 || self.days == 0 {
            return Err(Error::Config("synthetic spec has invalid parameters".into()));
        }
        Ok(())
    }
}

fn profile(slot: usize, amplitude: f64) -> f64 {
    let h = slot as f64 / 4.0;
    let morning = (-(h - 7.5).powi(2) / 3.0).exp();
    let evening = (-(h - 19.0).powi(2) / 6.0).exp();
    1.0 + amplitude * (0.6 * morning + evening - 0.45)
}

/// Generate a series; identical `(spec, seed)` gives an identical series.
pub fn generate_synthetic(spec: &SynthSpec, seed: u64) -> Result<DemandSeries> {
    spec.validate()?;
    let mut rng = substream(seed, Domain::Synthetic, &[0]);
    let n = spec.days * INTERVALS_PER_DAY;
    let mut demand = Vec::with_capacity(n);
    let mut temperature = Vec::with_capacity(n);
    let innovation = (1.0 - spec.noise_ar * spec.noise_ar).sqrt();
    let mut e: f64 = StandardNormal.sample(&mut rng);
    for day in 0..spec.days {
        let date = spec.start + chrono::Duration::days(day as i64);
        let season = (2.0 * std::f64::consts::PI * (date.ordinal0() as f64 - 15.0) / 365.25).cos();
        let mut level = spec.base_kw * (1.0 + spec.annual_amplitude * season);
        if matches!(date.weekday(), Weekday::Sat | Weekday::Sun) {
            level *= 1.0 + spec.weekend_effect;
        }
        let mut noise_scale = 1.0;
        if let Some(r) = spec.regime.as_ref().filter(|r| r.months.contains(&date.month())) {
            level *= r.level_multiplier;
            noise_scale = r.noise_multiplier;
        }
        for slot in 0..INTERVALS_PER_DAY {
            let clean = level * profile(slot, spec.daily_amplitude);
            let sigma = match spec.noise {
                NoiseModel::Constant { sigma } => sigma,
                NoiseModel::Proportional { cv } => cv * clean,
            } * noise_scale;
            demand.push((clean + sigma * e).max(0.0));
            let z: f64 = StandardNormal.sample(&mut rng);
            e = spec.noise_ar * e + innovation * z;

            let h = slot as f64 / 4.0;
            temperature.push(
                spec.temperature_mean_f - spec.temperature_amplitude_f * season
                    + 8.0 * (2.0 * std::f64::consts::PI * (h - 9.0) / 24.0).sin(),
            );
        }
    }
    DemandSeries::new(spec.start, demand, temperature, 1)
}
