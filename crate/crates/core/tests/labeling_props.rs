use bns_core::labeling::{build_dataset, index_series, mark_big_jumps, Direction, LabelingConfig};
use bns_core::market::{ReturnRow, ReturnSeries};
use chrono::{Duration, NaiveDate};
use proptest::prelude::*;

/// Returns laid out minute by minute; `breaks[i]` starts a new session at row i.
fn make_series(values: &[f64], breaks: &[bool]) -> ReturnSeries {
    let t0 = NaiveDate::from_ymd_opt(2021, 1, 4)
        .unwrap()
        .and_hms_opt(9, 41, 0)
        .unwrap();
    let mut session = 0;
    let rows = values
        .iter()
        .zip(breaks)
        .enumerate()
        .map(|(i, (&v, &b))| {
            if b && i > 0 {
                session += 1;
            }
            ReturnRow {
                timestamp: t0 + Duration::minutes(i as i64),
                session,
                pct_change: v,
            }
        })
        .collect();
    ReturnSeries { rows }
}

/// Scans every position, checks the whole window and horizon share the
/// anchor's session, then counts qualifying moves one by one.
fn brute_force(series: &ReturnSeries, cfg: &LabelingConfig) -> Vec<(usize, u8)> {
    let rows = &series.rows;
    let big = |x: f64| match cfg.direction {
        Direction::Down => -x >= cfg.k,
        Direction::Up => x >= cfg.k,
        Direction::Both => x.abs() >= cfg.k,
    };
    let mut out = Vec::new();
    for i in 0..rows.len() {
        if i + 1 < cfg.window_len || i + cfg.lookahead >= rows.len() {
            continue;
        }
        let lo = i + 1 - cfg.window_len;
        let hi = i + cfg.lookahead;
        if (lo..=hi).any(|j| rows[j].segment() != rows[i].segment()) {
            continue;
        }
        let count = rows[i + 1..=hi]
            .iter()
            .filter(|r| big(r.pct_change))
            .count();
        out.push((i, u8::from(count >= cfg.min_jumps)));
    }
    out
}

fn returns_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (0usize..=200).prop_flat_map(|n| {
        let value = prop_oneof![
            4 => -0.3f64..0.3,
            1 => Just(-0.1),
            1 => Just(0.1),
        ];
        (
            proptest::collection::vec(value, n),
            proptest::collection::vec(proptest::bool::weighted(0.03), n),
        )
    })
}

fn direction() -> impl Strategy<Value = Direction> {
    prop_oneof![
        Just(Direction::Down),
        Just(Direction::Up),
        Just(Direction::Both)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn theta_matches_brute_force(
        (values, breaks) in returns_strategy(),
        window_len in 1usize..15,
        lookahead in 1usize..15,
        min_jumps in 1usize..4,
        dir in direction(),
    ) {
        let cfg = LabelingConfig { window_len, lookahead, min_jumps, direction: dir, ..Default::default() };
        let series = make_series(&values, &breaks);
        let indexed = index_series(&series);
        let marks = mark_big_jumps(&indexed.values(), &cfg);
        let ds = build_dataset(&indexed, &marks, &cfg).unwrap();
        let got: Vec<(usize, u8)> = ds.rows.iter().map(|r| (r.index, r.theta)).collect();
        prop_assert_eq!(got, brute_force(&series, &cfg));
        for r in &ds.rows {
            prop_assert_eq!(&r.features[..], &values[r.index + 1 - window_len..=r.index]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn raising_k_never_adds_positives(
        (values, breaks) in returns_strategy(),
        k1 in 0.01f64..0.3,
        dk in 0.0f64..0.2,
        dir in direction(),
    ) {
        let series = make_series(&values, &breaks);
        let indexed = index_series(&series);
        let lo = LabelingConfig { k: k1, direction: dir, ..Default::default() };
        let hi = LabelingConfig { k: k1 + dk, ..lo };
        let (m_lo, m_hi) = (mark_big_jumps(&indexed.values(), &lo), mark_big_jumps(&indexed.values(), &hi));
        prop_assert!(m_lo.0.iter().zip(&m_hi.0).all(|(a, b)| *a || !*b));
        let p_lo = build_dataset(&indexed, &m_lo, &lo).unwrap().positives();
        let p_hi = build_dataset(&indexed, &m_hi, &hi).unwrap().positives();
        prop_assert!(p_hi <= p_lo);
    }

    #[test]
    fn raising_min_jumps_never_adds_positives(
        (values, breaks) in returns_strategy(),
        m in 1usize..5,
    ) {
        let series = make_series(&values, &breaks);
        let indexed = index_series(&series);
        let a = LabelingConfig { min_jumps: m, direction: Direction::Both, ..Default::default() };
        let b = LabelingConfig { min_jumps: m + 1, ..a };
        let marks = mark_big_jumps(&indexed.values(), &a);
        let pa = build_dataset(&indexed, &marks, &a).unwrap().positives();
        let pb = build_dataset(&indexed, &marks, &b).unwrap().positives();
        prop_assert!(pb <= pa);
    }
}
