//! Synthetic minute bars drawn from the generalized model.
//!
//! Each trading day is one unit of model time split into the calendar's
//! minutes. A day is either calm (`θ = 0`) or jumpy (`θ = 1`), and the
//! variance carries over from one day's close to the next day's open.

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::bars::{Bar, BarSeries};
use super::calendar::SessionCalendar;
use crate::bns::{self, LogPriceOptions, ModelParams};
use crate::error::{invalid, Result};
use crate::levy::{SubordinatorSpec, TimeGrid};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub start: NaiveDate,
    pub days: usize,
    pub s0: f64,
    /// `theta` is overridden per day.
    pub params: ModelParams,
    /// Chance that a day runs on the strong subordinator.
    pub jumpy_day_probability: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    /// Index-like levels: about 0.05% one-minute diffusion and jumps that
    /// average 0.12% of the price.
    fn default() -> Self {
        Self {
            start: NaiveDate::from_ymd_opt(2021, 1, 4).expect("valid date"),
            days: 20,
            s0: 5000.0,
            params: ModelParams {
                mu: 0.0,
                beta: 0.0,
                rho: -60.0,
                lambda: 4.0,
                theta: 0.0,
                sigma0_sq: 6e-5,
                base: SubordinatorSpec {
                    intensity: 3.0,
                    jump_rate: 50_000.0,
                },
                strong: SubordinatorSpec {
                    intensity: 15.0,
                    jump_rate: 50_000.0,
                },
            },
            jumpy_day_probability: 0.3,
            seed: 2021,
        }
    }
}

/// Regime of one generated day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SyntheticDay {
    pub date: NaiveDate,
    pub theta: f64,
    pub jumps: usize,
}

/// Generates `cfg.days` weekdays of bars on `calendar`, prices rounded to
/// cents.
pub fn synthetic_bars(
    cfg: &SyntheticConfig,
    calendar: &SessionCalendar,
) -> Result<(BarSeries, Vec<SyntheticDay>)> {
    cfg.params.validate()?;
    if !(cfg.s0 > 0.0) {
        return Err(invalid("s0 must be > 0"));
    }
    let minutes: Vec<(usize, chrono::NaiveTime)> = calendar
        .sessions()
        .iter()
        .enumerate()
        .flat_map(|(i, s)| {
            let n = (s.close - s.open).num_minutes();
            (1..=n).map(move |m| (i, s.open + Duration::minutes(m)))
        })
        .collect();
    let grid = TimeGrid::over(1.0, minutes.len())?;

    let mut regime_rng = rng::rng_for(cfg.seed, rng::stream::PATH, u64::MAX);
    let mut bars = Vec::with_capacity(cfg.days * minutes.len());
    let mut days = Vec::with_capacity(cfg.days);
    let mut date = cfg.start;
    let mut level = 0.0;
    let mut sigma_sq = cfg.params.sigma0_sq;
    for d in 0..cfg.days {
        while matches!(date.weekday(), Weekday::Sat | Weekday::Sun) {
            date = date.succ_opt().expect("date in range");
        }
        let theta = if regime_rng.random::<f64>() < cfg.jumpy_day_probability {
            1.0
        } else {
            0.0
        };
        let params = ModelParams {
            theta,
            sigma0_sq: sigma_sq,
            ..cfg.params
        };
        let path = bns::simulate(
            &params,
            &grid,
            rng::derive_seed(cfg.seed, rng::stream::PATH, d as u64),
            &LogPriceOptions::default(),
        )?;
        let x = path.log_price.x_true();
        for (k, &(session, time)) in minutes.iter().enumerate() {
            let price = cfg.s0 * (level + x[k + 1]).exp();
            bars.push(Bar {
                timestamp: date.and_time(time),
                close: (price * 100.0).round() / 100.0,
                session,
            });
        }
        level += x[x.len() - 1];
        sigma_sq = *path.variance.values().last().expect("non-empty path");
        days.push(SyntheticDay {
            date,
            theta,
            jumps: path.variance.driving().events().len(),
        });
        date = date.succ_opt().expect("date in range");
    }
    Ok((BarSeries::from_bars_unchecked(bars, calendar.clone()), days))
}
