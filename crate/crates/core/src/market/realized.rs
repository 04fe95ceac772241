use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::returns::{ReturnRow, ReturnSeries};

/// Bipower scaling `μ₁⁻² = π/2`, with `μ₁ = E|N(0,1)| = √(2/π)`.
pub const BV_SCALE: f64 = std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RvWindow {
    Day,
    Month,
}

/// Realized measures of one window, in squared return units (percent²
/// for percent returns).
///
/// `realized_volatility = Σ r²`, `bipower_variation = (π/2)·Σ|r_i||r_{i−1}|`
/// over adjacent returns in the window, and
/// `jump_component = max(RV − BV, 0)`. With fewer than two returns BV and
/// the jump component are absent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RvRow {
    pub window: String,
    pub end: NaiveDateTime,
    pub n_returns: usize,
    pub realized_volatility: f64,
    pub bipower_variation: Option<f64>,
    pub jump_component: Option<f64>,
}

pub type RvSeries = Vec<RvRow>;

impl RvRow {
    pub fn from_returns(window: impl Into<String>, end: NaiveDateTime, returns: &[f64]) -> Self {
        let rv: f64 = returns.iter().map(|r| r * r).sum();
        let bv = (returns.len() >= 2).then(|| {
            BV_SCALE
                * returns
                    .windows(2)
                    .map(|w| w[0].abs() * w[1].abs())
                    .sum::<f64>()
        });
        RvRow {
            window: window.into(),
            end,
            n_returns: returns.len(),
            realized_volatility: rv,
            bipower_variation: bv,
            jump_component: bv.map(|bv| (rv - bv).max(0.0)),
        }
    }
}

/// Realized volatility, bipower variation and jump component per day or
/// per month.
pub fn realized_measures(returns: &ReturnSeries, window: RvWindow) -> RvSeries {
    let label = |r: &ReturnRow| match window {
        RvWindow::Day => r.timestamp.format("%Y-%m-%d").to_string(),
        RvWindow::Month => r.timestamp.format("%Y-%m").to_string(),
    };
    let rows = returns
        .rows
        .chunk_by(|a, b| label(a) == label(b))
        .map(|run| {
            let values: Vec<f64> = run.iter().map(|r| r.pct_change).collect();
            RvRow::from_returns(label(&run[0]), run[run.len() - 1].timestamp, &values)
        })
        .collect();
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, NaiveDate};

    fn t0() -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2021, 2, 1)
            .unwrap()
            .and_hms_opt(9, 45, 0)
            .unwrap()
    }

    fn row(v: &[f64]) -> RvRow {
        RvRow::from_returns("w", t0(), v)
    }

    #[test]
    fn hand_examples() {
        let r = row(&[0.0; 5]);
        assert_eq!(
            (r.realized_volatility, r.bipower_variation, r.jump_component),
            (0.0, Some(0.0), Some(0.0))
        );

        let r = row(&[1.0, -1.0, 1.0]);
        assert_eq!(r.realized_volatility, 3.0);
        assert_eq!(r.bipower_variation, Some(std::f64::consts::PI));
        assert_eq!(r.jump_component, Some(0.0));

        let r = row(&[0.0, 0.0, 10.0, 0.0]);
        assert_eq!(r.realized_volatility, 100.0);
        assert_eq!(r.bipower_variation, Some(0.0));
        assert_eq!(r.jump_component, Some(100.0));
    }

    #[test]
    fn single_return_has_no_bipower() {
        let r = row(&[0.4]);
        assert!((r.realized_volatility - 0.16).abs() < 1e-15);
        assert_eq!(r.bipower_variation, None);
        assert_eq!(r.jump_component, None);
    }

    #[test]
    fn windows_by_day_and_month() {
        let mut rows = Vec::new();
        for d in 0..3 {
            for k in 0..4 {
                rows.push(ReturnRow {
                    timestamp: t0() + Duration::days(d * 14) + Duration::minutes(5 * k),
                    session: 0,
                    pct_change: 0.1 * (k + 1) as f64,
                });
            }
        }
        let series = ReturnSeries { rows };
        let daily = realized_measures(&series, RvWindow::Day);
        assert_eq!(daily.len(), 3);
        assert_eq!(daily[0].window, "2021-02-01");
        assert_eq!(daily[0].n_returns, 4);
        let monthly = realized_measures(&series, RvWindow::Month);
        assert_eq!(
            monthly.iter().map(|r| r.n_returns).collect::<Vec<_>>(),
            vec![8, 4]
        );
        assert!(monthly.iter().all(|r| r.realized_volatility >= 0.0));
    }
}
