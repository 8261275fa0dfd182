use std::fmt;

/// Metric names carried in the `metric` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Bias,
    Bias2,
    MeanReward,
    VStart,
    QError,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Bias => "bias",
            Metric::Bias2 => "bias2",
            Metric::MeanReward => "mean_reward",
            Metric::VStart => "v_start",
            Metric::QError => "q_error",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One aggregated output row.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub experiment: String,
    /// `axis=value`
    pub setting: String,
    pub algorithm: String,
    pub trial_count: usize,
    pub metric: Metric,
    pub value: f64,
    pub stderr: f64,
}
