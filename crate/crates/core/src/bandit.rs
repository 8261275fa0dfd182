//! Internet-ads bandit simulation.
//!
//! Each trial draws `M` click rates uniformly from `[rate_low, rate_high]`,
//! shows every ad to `floor(N / M)` visitors (one Bernoulli click each),
//! splits every ad's clicks in two halves and evaluates the four estimators
//! of the best click rate against the true maximum rate.

use rand::Rng;

use crate::error::BanditError;
use crate::estimators::{split_samples, EstimateReport};
use crate::parallel::map_trials;
use crate::record::{Metric, RunRecord};
use crate::seeding::trial_rng;
use crate::stats::Summary;

type Result<T> = std::result::Result<T, BanditError>;

pub const EXPERIMENT: &str = "bandit";

pub const ESTIMATOR_NAMES: [&str; 4] = ["single", "double", "clipped_double", "ac_clipped_double"];

#[derive(Debug, Clone, PartialEq)]
pub struct BanditConfig {
    pub num_visitors: usize,
    pub num_ads: usize,
    pub rate_low: f64,
    pub rate_high: f64,
    pub candidate_fraction: f64,
    pub num_trials: usize,
    pub master_seed: u64,
}

impl Default for BanditConfig {
    fn default() -> Self {
        Self {
            num_visitors: 30_000,
            num_ads: 30,
            rate_low: 0.02,
            rate_high: 0.05,
            candidate_fraction: 0.15,
            num_trials: 2_000,
            master_seed: 0,
        }
    }
}

impl BanditConfig {
    pub fn validate(&self) -> Result<()> {
        let (low, high) = (self.rate_low, self.rate_high);
        if !(0.0..=1.0).contains(&low) || !(0.0..=1.0).contains(&high) || low >= high {
            return Err(BanditError::InvalidRates { low, high });
        }
        if self.num_ads < 2 {
            return Err(BanditError::TooFewAds(self.num_ads));
        }
        if self.num_visitors < 2 * self.num_ads {
            return Err(BanditError::TooFewVisitors {
                visitors: self.num_visitors,
                ads: self.num_ads,
            });
        }
        if !(self.candidate_fraction > 0.0 && self.candidate_fraction <= 1.0) {
            return Err(BanditError::InvalidCandidateFraction(
                self.candidate_fraction,
            ));
        }
        if self.num_trials == 0 {
            return Err(BanditError::NoTrials);
        }
        Ok(())
    }

    /// Candidate count `max(1, round(fraction * M))`, halves rounded up.
    pub fn candidate_count(&self) -> usize {
        candidate_count(self.candidate_fraction, self.num_ads)
    }

    pub fn samples_per_ad(&self) -> usize {
        self.num_visitors / self.num_ads
    }
}

pub fn candidate_count(fraction: f64, num_ads: usize) -> usize {
    let scaled = fraction * num_ads as f64;
    // 0.15 * 30 lands a hair under 4.5 in binary; snap before rounding
    let snapped = (scaled * 1e9).round() / 1e9;
    ((snapped + 0.5).floor() as usize).clamp(1, num_ads)
}

pub fn sample_click_rates<R: Rng + ?Sized>(
    num_ads: usize,
    rate_low: f64,
    rate_high: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if num_ads < 2 {
        return Err(BanditError::TooFewAds(num_ads));
    }
    if !(0.0..=1.0).contains(&rate_low) || !(0.0..=1.0).contains(&rate_high) || rate_low > rate_high
    {
        return Err(BanditError::InvalidRates {
            low: rate_low,
            high: rate_high,
        });
    }
    Ok((0..num_ads)
        .map(|_| rate_low + (rate_high - rate_low) * rng.random::<f64>())
        .collect())
}

pub fn run_trial<R: Rng + ?Sized>(config: &BanditConfig, rng: &mut R) -> Result<EstimateReport> {
    config.validate()?;
    let rates = sample_click_rates(config.num_ads, config.rate_low, config.rate_high, rng)?;
    run_trial_with_rates(config, &rates, rng)
}

/// Runs one trial on fixed click rates instead of sampled ones.
pub fn run_trial_with_rates<R: Rng + ?Sized>(
    config: &BanditConfig,
    rates: &[f64],
    rng: &mut R,
) -> Result<EstimateReport> {
    if rates.len() != config.num_ads {
        return Err(BanditError::RateCountMismatch {
            expected: config.num_ads,
            got: rates.len(),
        });
    }
    let n = config.samples_per_ad();
    let clicks: Vec<Vec<f64>> = rates
        .iter()
        .map(|&m| {
            (0..n)
                .map(|_| if rng.random_bool(m) { 1.0 } else { 0.0 })
                .collect()
        })
        .collect();
    let triple = split_samples(&clicks, rng)?.triple();
    let true_max = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(EstimateReport::compute(
        &triple,
        config.candidate_count(),
        true_max,
        rng,
    )?)
}

/// Upper bound on the expected single estimate for known rates, with
/// per-ad sample-mean variance `m (1 - m) / n`.
pub fn single_bias_bound(rates: &[f64], samples_per_ad: usize) -> Result<f64> {
    let variances: Vec<f64> = rates
        .iter()
        .map(|m| m * (1.0 - m) / samples_per_ad as f64)
        .collect();
    let mu_star = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(crate::estimators::single_estimator_upper_bound(
        mu_star, &variances,
    )?)
}

/// Runs `config.num_trials` seeded trials for one setting, in trial order.
pub fn run_setting(
    config: &BanditConfig,
    setting: &str,
    workers: usize,
) -> std::result::Result<Vec<EstimateReport>, crate::error::HarnessError> {
    config.validate()?;
    let reports = map_trials(config.num_trials, workers, |t| {
        let mut rng = trial_rng(config.master_seed, EXPERIMENT, setting, t as u64);
        run_trial(config, &mut rng)
    })?;
    Ok(reports.into_iter().collect::<Result<Vec<_>>>()?)
}

pub fn estimator_values(reports: &[EstimateReport], which: usize) -> Vec<f64> {
    reports
        .iter()
        .map(|r| match which {
            0 => r.single,
            1 => r.double,
            2 => r.clipped_double,
            _ => r.ac_clipped_double,
        })
        .collect()
}

/// Signed per-trial errors `estimate - true_max` for one estimator.
pub fn estimator_errors(reports: &[EstimateReport], which: usize) -> Vec<f64> {
    estimator_values(reports, which)
        .into_iter()
        .zip(reports)
        .map(|(v, r)| v - r.true_max)
        .collect()
}

/// Bias and bias² rows for every estimator. The bias² standard error is the
/// delta-method value `2 |bias| stderr(bias)`.
pub fn summarize_setting(setting: &str, reports: &[EstimateReport]) -> Vec<RunRecord> {
    let mut out = Vec::with_capacity(2 * ESTIMATOR_NAMES.len());
    for (which, name) in ESTIMATOR_NAMES.iter().enumerate() {
        let s = Summary::of(&estimator_errors(reports, which));
        let row = |metric, value, stderr| RunRecord {
            experiment: EXPERIMENT.to_string(),
            setting: setting.to_string(),
            algorithm: name.to_string(),
            trial_count: reports.len(),
            metric,
            value,
            stderr,
        };
        out.push(row(Metric::Bias, s.mean, s.stderr));
        out.push(row(
            Metric::Bias2,
            s.mean * s.mean,
            2.0 * s.mean.abs() * s.stderr,
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Visitors,
    Ads,
    RateUpper,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Visitors => "visitors",
            SweepAxis::Ads => "ads",
            SweepAxis::RateUpper => "rate_upper",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "visitors" => Some(SweepAxis::Visitors),
            "ads" => Some(SweepAxis::Ads),
            "rate_upper" | "rate-upper" | "rate_high" | "rate-high" => Some(SweepAxis::RateUpper),
            _ => None,
        }
    }

    /// The three published sweeps.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepAxis::Visitors => (1..=10).map(|i| (i * 30_000) as f64).collect(),
            SweepAxis::Ads => (1..=10).map(|i| (i * 10) as f64).collect(),
            SweepAxis::RateUpper => (3..=10).map(|i| i as f64 / 100.0).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl SweepSpec {
    pub fn published(axis: SweepAxis) -> Self {
        Self {
            axis,
            values: axis.default_values(),
        }
    }

    /// Config for one swept value, plus its `axis=value` label.
    pub fn apply(&self, base: &BanditConfig, value: f64) -> Result<(BanditConfig, String)> {
        let invalid = || BanditError::InvalidSweepValue {
            axis: self.axis.name(),
            value,
        };
        let mut cfg = base.clone();
        let label = match self.axis {
            SweepAxis::Visitors | SweepAxis::Ads => {
                if !(value >= 1.0 && value.fract() == 0.0 && value <= 1e12) {
                    return Err(invalid());
                }
                let v = value as usize;
                if self.axis == SweepAxis::Visitors {
                    cfg.num_visitors = v;
                } else {
                    cfg.num_ads = v;
                }
                format!("{}={}", self.axis.name(), v)
            }
            SweepAxis::RateUpper => {
                cfg.rate_high = value;
                format!("{}={}", self.axis.name(), value)
            }
        };
        cfg.validate().map_err(|_| invalid())?;
        Ok((cfg, label))
    }
}

/// Runs every setting of the sweep and returns bias rows in sweep order.
pub fn run_sweep(
    config: &BanditConfig,
    sweep: &SweepSpec,
    workers: usize,
) -> std::result::Result<Vec<RunRecord>, crate::error::HarnessError> {
    let settings = sweep
        .values
        .iter()
        .map(|&v| sweep.apply(config, v))
        .collect::<Result<Vec<_>>>()?;
    let mut records = Vec::new();
    for (cfg, label) in &settings {
        let reports = run_setting(cfg, label, workers)?;
        records.extend(summarize_setting(label, &reports));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn candidate_count_rule() {
        assert_eq!(candidate_count(0.15, 30), 5);
        assert_eq!(candidate_count(0.15, 10), 2);
        assert_eq!(candidate_count(0.15, 20), 3);
        assert_eq!(candidate_count(0.15, 100), 15);
        assert_eq!(candidate_count(0.15, 2), 1);
        assert_eq!(candidate_count(1.0, 7), 7);
        assert_eq!(candidate_count(0.01, 5), 1);
    }

    #[test]
    fn click_rates_within_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rates = sample_click_rates(30, 0.02, 0.05, &mut rng).unwrap();
        assert_eq!(rates.len(), 30);
        assert!(rates.iter().all(|r| (0.02..=0.05).contains(r)));
        let again = sample_click_rates(30, 0.02, 0.05, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(rates, again);
        let tight = sample_click_rates(5, 0.3, 0.3 + 1e-12, &mut rng).unwrap();
        assert!(tight.iter().all(|r| (r - 0.3).abs() < 1e-11));
        assert!(sample_click_rates(5, 0.5, 0.2, &mut rng).is_err());
        assert!(sample_click_rates(1, 0.1, 0.2, &mut rng).is_err());
    }

    #[test]
    fn certain_clicks_have_no_bias() {
        let cfg = BanditConfig {
            num_visitors: 100,
            num_ads: 5,
            ..BanditConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = run_trial_with_rates(&cfg, &[1.0; 5], &mut rng).unwrap();
        assert_eq!(
            (r.single, r.double, r.clipped_double, r.ac_clipped_double),
            (1.0, 1.0, 1.0, 1.0)
        );
        assert_eq!(r.true_max, 1.0);
    }

    #[test]
    fn config_validation() {
        assert!(BanditConfig::default().validate().is_ok());
        let bad_ads = BanditConfig {
            num_ads: 1,
            ..BanditConfig::default()
        };
        assert_eq!(bad_ads.validate(), Err(BanditError::TooFewAds(1)));
        let few_visitors = BanditConfig {
            num_visitors: 59,
            ..BanditConfig::default()
        };
        assert!(few_visitors.validate().is_err());
        let rates = BanditConfig {
            rate_low: 0.05,
            rate_high: 0.05,
            ..BanditConfig::default()
        };
        assert!(rates.validate().is_err());
    }

    #[test]
    fn sweep_values_and_labels() {
        assert_eq!(SweepAxis::Visitors.default_values().len(), 10);
        assert_eq!(SweepAxis::Ads.default_values().len(), 10);
        let rates = SweepAxis::RateUpper.default_values();
        assert_eq!(rates.len(), 8);
        assert_eq!(rates[0], 0.03);
        assert_eq!(rates[7], 0.1);
        let spec = SweepSpec::published(SweepAxis::Ads);
        let (cfg, label) = spec.apply(&BanditConfig::default(), 40.0).unwrap();
        assert_eq!((cfg.num_ads, label.as_str()), (40, "ads=40"));
        assert!(spec.apply(&BanditConfig::default(), 2.5).is_err());
        let spec = SweepSpec::published(SweepAxis::RateUpper);
        assert!(spec.apply(&BanditConfig::default(), 0.01).is_err());
    }

    #[test]
    fn sweep_emits_eight_rows_per_setting() {
        let cfg = BanditConfig {
            num_visitors: 600,
            num_ads: 10,
            num_trials: 20,
            ..BanditConfig::default()
        };
        let spec = SweepSpec {
            axis: SweepAxis::Visitors,
            values: vec![600.0, 1200.0],
        };
        let rows = run_sweep(&cfg, &spec, 2).unwrap();
        assert_eq!(rows.len(), 2 * 4 * 2);
        for pair in rows.chunks(2) {
            assert_eq!(pair[0].metric, Metric::Bias);
            assert_eq!(pair[1].metric, Metric::Bias2);
            assert!(pair[1].value >= 0.0);
            assert!((pair[1].value - pair[0].value.powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn trials_respect_estimator_invariants() {
        let cfg = BanditConfig {
            num_trials: 200,
            ..BanditConfig::default()
        };
        for r in run_setting(&cfg, "check", 4).unwrap() {
            assert!(r.clipped_double <= r.single);
            assert!(r.ac_clipped_double <= r.single);
            assert!(r.clipped_double <= r.double);
            assert_eq!(r.k, 5);
        }
    }
}
