use proptest::prelude::*;
use rand::seq::SliceRandom;
use vizbench_core::report::{percentile, PerformanceReport, QueryMeasurement, QueryStatus, DEFAULT_THRESHOLD_MS};
use vizbench_core::spec::LoadGroup;
use vizbench_testkit::rng;

fn measurement(batch: usize, issue: f64, latency: f64) -> QueryMeasurement {
    QueryMeasurement {
        batch_index: batch,
        batch_timestamp: 1000 * batch as i64,
        node: format!("n{}", batch % 3),
        relationship: format!("r{}", batch % 2),
        load_group: [LoadGroup::SingleLow, LoadGroup::SingleHigh, LoadGroup::ManyHigh][batch % 3],
        detail_level: 0,
        sql: "SELECT a FROM t".into(),
        issue_ms: issue,
        first_result_ms: issue + latency / 2.0,
        completion_ms: issue + latency,
        latency_ms: latency,
        status: QueryStatus::Ok,
        error: None,
        rows: Some(batch),
    }
}

/// Reference nearest-rank: smallest value with at least p% of the sample at
/// or below it.
fn reference_percentile(sample: &[f64], p: u32) -> f64 {
    let mut v = sample.to_vec();
    v.sort_by(f64::total_cmp);
    *v.iter()
        .find(|&&x| 100 * v.iter().filter(|&&y| y <= x).count() >= p as usize * v.len())
        .unwrap()
}

#[test]
fn p50_of_one_to_ten_is_five() {
    let ms: Vec<_> = (1..=10).map(|i| measurement(i, 0.0, i as f64)).collect();
    let r = PerformanceReport::build("t", &ms, DEFAULT_THRESHOLD_MS);
    let q = r.query_latency.unwrap();
    assert_eq!(q.p50_ms, 5.0);
    assert_eq!(q.p90_ms, 9.0);
    assert_eq!(q.max_ms, 10.0);
}

#[test]
fn half_of_batches_violate_threshold() {
    let ms = vec![measurement(0, 0.0, 400.0), measurement(1, 1000.0, 600.0)];
    let r = PerformanceReport::build("t", &ms, 500.0);
    assert_eq!(r.threshold_violation_fraction, Some(0.5));
    let all_fast = vec![measurement(0, 0.0, 400.0), measurement(1, 1000.0, 400.0)];
    assert_eq!(PerformanceReport::build("t", &all_fast, 500.0).threshold_violation_fraction, Some(0.0));
}

#[test]
fn errors_count_but_do_not_enter_percentiles() {
    let mut ms: Vec<_> = (1..=6).map(|i| measurement(i, 0.0, i as f64)).collect();
    ms[5].status = QueryStatus::Error;
    ms[5].latency_ms = 10_000.0;
    let r = PerformanceReport::build("t", &ms, DEFAULT_THRESHOLD_MS);
    assert_eq!((r.errors, r.ok), (1, 5));
    assert_eq!(r.query_latency.unwrap().max_ms, 5.0);
}

#[test]
fn shuffling_measurements_leaves_report_unchanged() {
    let mut r = rng(9);
    let mut ms: Vec<_> = (0..40)
        .map(|i| measurement(i / 4, (i / 4) as f64 * 700.0, ((i * 37) % 23) as f64 + 0.5))
        .collect();
    let reference = PerformanceReport::build("t", &ms, DEFAULT_THRESHOLD_MS).to_json();
    for _ in 0..100 {
        ms.shuffle(&mut r);
        assert_eq!(PerformanceReport::build("t", &ms, DEFAULT_THRESHOLD_MS).to_json(), reference);
    }
}

proptest! {
    #[test]
    fn percentiles_are_sample_members(sample in proptest::collection::vec(0.0f64..1e4, 1..200), p in 1u32..=100) {
        let mut v = sample.clone();
        v.sort_by(f64::total_cmp);
        let got = percentile(&v, p).unwrap();
        prop_assert!(sample.contains(&got));
        prop_assert_eq!(got, reference_percentile(&sample, p));
    }

    #[test]
    fn breakdowns_sum_to_totals(lat in proptest::collection::vec((0.0f64..900.0, 0u8..3), 0..60), t1 in 0.0f64..1000.0, t2 in 0.0f64..1000.0) {
        let ms: Vec<_> = lat
            .iter()
            .enumerate()
            .map(|(i, &(l, s))| {
                let mut m = measurement(i / 3, (i / 3) as f64 * 1000.0, l);
                m.status = [QueryStatus::Ok, QueryStatus::Error, QueryStatus::Timeout][s as usize];
                m
            })
            .collect();
        let r = PerformanceReport::build("t", &ms, t1.min(t2));
        let by_group: usize = r.by_load_group.values().map(|g| g.queries).sum();
        let by_rel: usize = r.by_relationship.values().map(|g| g.queries).sum();
        prop_assert_eq!(by_group, r.queries);
        prop_assert_eq!(by_rel, r.queries);
        prop_assert_eq!(r.by_load_group.values().map(|g| g.errors).sum::<usize>(), r.errors);
        let high = PerformanceReport::build("t", &ms, t1.max(t2));
        if let (Some(a), Some(b)) = (r.threshold_violation_fraction, high.threshold_violation_fraction) {
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(b <= a);
        }
    }
}
