use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use vizbench_core::simulate::{
    parse_domains, simulate_interactions, simulate_trace, Domains, GapRange, SimError, UserModelConfig,
};
use vizbench_core::spec::{parse_interaction_log, write_interaction_log, InterfaceSpec};
use vizbench_testkit::fixtures::{covid_interface, tableau_interface, COVID_DOMAINS, COVID_MODEL};

fn tableau_domains() -> Domains {
    parse_domains(
        r#"{"covid.date":{"min":20210101,"max":20210131},
            "covid.county":{"values":["Bucks","Chester","Delaware","Montgomery"]},
            "covid.metric":{"values":["cases","deaths"]}}"#,
    )
    .unwrap()
}

#[test]
fn seed_42_is_reproducible_and_valid() {
    let iface = covid_interface();
    let domains = parse_domains(COVID_DOMAINS).unwrap();
    let cfg = UserModelConfig::from_json(COVID_MODEL).unwrap();
    let a = write_interaction_log(&simulate_interactions(&iface, &domains, &cfg).unwrap());
    let b = write_interaction_log(&simulate_interactions(&iface, &domains, &cfg).unwrap());
    assert_eq!(a, b);
    assert_eq!(parse_interaction_log(&a, &iface).unwrap().len(), 100);
}

#[test]
fn different_seeds_differ() {
    let iface = tableau_interface();
    let mut cfg = UserModelConfig::default();
    let a = simulate_interactions(&iface, &tableau_domains(), &cfg).unwrap();
    cfg.seed = 43;
    let b = simulate_interactions(&iface, &tableau_domains(), &cfg).unwrap();
    assert_ne!(a, b);
}

#[test]
fn missing_domain_is_reported() {
    let mut d = tableau_domains();
    d.remove(&"covid.metric".parse().unwrap());
    let err = simulate_interactions(&tableau_interface(), &d, &UserModelConfig::default()).unwrap_err();
    assert_eq!(err, SimError::DomainMissing("covid.metric".into()));
}

#[test]
fn subset_larger_than_widget_pool_is_rejected() {
    let cfg = UserModelConfig { widget_subset_size: Some(4), ..Default::default() };
    assert!(matches!(
        simulate_interactions(&tableau_interface(), &tableau_domains(), &cfg),
        Err(SimError::Config(_))
    ));
}

#[test]
fn burst_probability_one_makes_every_gap_a_think_gap() {
    let mut cfg = UserModelConfig::default();
    cfg.burst_length.p = 1.0;
    cfg.n_interactions = 50;
    let trace = simulate_trace(&tableau_interface(), &tableau_domains(), &cfg).unwrap();
    let bursts: Vec<usize> = trace.iter().map(|s| s.burst).collect();
    assert_eq!(bursts, (0..50).collect::<Vec<_>>());
    assert!(trace.windows(2).all(|w| w[1].event.timestamp - w[0].event.timestamp > 1200));
}

#[test]
fn zero_weight_widgets_never_act() {
    let mut weights = indexmap::IndexMap::new();
    weights.insert("date_slider".to_string(), 1.0);
    weights.insert("county_list".to_string(), 0.0);
    weights.insert("metric_radio".to_string(), 2.0);
    let cfg = UserModelConfig { widget_weights: Some(weights), n_interactions: 300, ..Default::default() };
    let trace = simulate_trace(&tableau_interface(), &tableau_domains(), &cfg).unwrap();
    let used: BTreeSet<&str> = trace.iter().map(|s| s.widget.as_str()).collect();
    assert_eq!(used, BTreeSet::from(["date_slider", "metric_radio"]));
}

fn check_trace(iface: &InterfaceSpec, cfg: &UserModelConfig) -> Result<(), TestCaseError> {
    let trace = simulate_trace(iface, &tableau_domains(), cfg).unwrap();
    prop_assert_eq!(trace.len(), cfg.n_interactions);
    let events: Vec<_> = trace.iter().map(|s| s.event.clone()).collect();
    prop_assert!(parse_interaction_log(&write_interaction_log(&events), iface).is_ok());
    let GapRange { lo, hi } = cfg.intra_burst_gap_ms;
    for w in trace.windows(2) {
        let gap = (w[1].event.timestamp - w[0].event.timestamp) as u64;
        if w[0].burst == w[1].burst {
            prop_assert!((lo..=hi).contains(&gap), "intra gap {}", gap);
        } else {
            prop_assert!(gap > hi, "think gap {}", gap);
        }
    }
    let k = cfg.widget_subset_size.unwrap_or(3);
    let mut per_burst: BTreeMap<usize, BTreeSet<&str>> = BTreeMap::new();
    for s in &trace {
        per_burst.entry(s.burst).or_default().insert(&s.widget);
    }
    prop_assert!(per_burst.values().all(|w| w.len() <= k));
    prop_assert_eq!(trace[0].event.timestamp, cfg.start_timestamp_ms);
    Ok(())
}

proptest! {
    #[test]
    fn traces_respect_the_model(seed in any::<u64>(), p in 0.05f64..=1.0, k in 1usize..=3, lo in 1u64..300, span in 0u64..700, n in 1usize..80) {
        let cfg = UserModelConfig {
            seed,
            n_interactions: n,
            burst_length: vizbench_core::simulate::GeometricParams { p },
            intra_burst_gap_ms: GapRange { lo, hi: lo + span },
            widget_subset_size: Some(k),
            ..Default::default()
        };
        check_trace(&tableau_interface(), &cfg)?;
    }
}
