use serde::{Deserialize, Serialize};

use super::bars::BarSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Overall,
    Month,
}

/// Summary of one group of prices.
///
/// Skewness and kurtosis use the bias-adjusted sample estimators (`G1`,
/// `G2`). Kurtosis is excess kurtosis, so a normal sample scores near 0.
/// Either moment is `None` when undefined: too few values, or kurtosis of a
/// constant sample. Skewness of a constant sample is reported as 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub group: String,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
}

/// Statistics of `values`, or `None` for an empty slice.
pub fn summarize(group: impl Into<String>, values: &[f64]) -> Option<StatsReport> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    };
    let central = |p: i32| values.iter().map(|x| (x - mean).powi(p)).sum::<f64>();
    let (m2, m3, m4) = (central(2), central(3), central(4));

    let skewness = if values.len() < 3 {
        None
    } else if m2 == 0.0 {
        Some(0.0)
    } else {
        let g1 = (m3 / n) / (m2 / n).powf(1.5);
        Some((n * (n - 1.0)).sqrt() / (n - 2.0) * g1)
    };
    let excess_kurtosis = if values.len() < 4 || m2 == 0.0 {
        None
    } else {
        let g2 = (m4 / n) / (m2 / n).powi(2) - 3.0;
        Some((n - 1.0) / ((n - 2.0) * (n - 3.0)) * ((n + 1.0) * g2 + 6.0))
    };

    Some(StatsReport {
        group: group.into(),
        count: values.len(),
        mean,
        median,
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        skewness,
        excess_kurtosis,
    })
}

/// Close-price statistics, overall or per calendar month (`YYYY-MM`).
/// Groups without data do not appear.
pub fn descriptive_stats(series: &BarSeries, group_by: GroupBy) -> Vec<StatsReport> {
    match group_by {
        GroupBy::Overall => summarize("overall", &series.closes()).into_iter().collect(),
        GroupBy::Month => series
            .bars()
            .chunk_by(|a, b| {
                a.timestamp.format("%Y-%m").to_string() == b.timestamp.format("%Y-%m").to_string()
            })
            .filter_map(|run| {
                let label = run[0].timestamp.format("%Y-%m").to_string();
                let closes: Vec<f64> = run.iter().map(|b| b.close).collect();
                summarize(label, &closes)
            })
            .collect(),
    }
}
