//! Synthetic interaction logs from a two-state bursty user model, and replay
//! schedules for observed logs.
//!
//! The generator alternates bursts of activity on a small, weighted subset of
//! widgets with longer think-time pauses:
//!
//! * subset: `k` widgets drawn by weight without replacement,
//! * burst length: Geometric(p) on {1, 2, ...},
//! * gap inside a burst: uniform integer in `[lo, hi]` ms,
//! * think time between bursts: LogNormal(mu, sigma) ms, at least `hi + 1`.
//!
//! Every random draw goes through [`PortableRng`], which turns the raw 64-bit
//! output of ChaCha8 (seeded with `seed_from_u64`) into uniforms with explicit
//! formulas, so a given seed produces the same log on every platform.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Number;

use crate::spec::{
    AttributeKind, AttributeRef, FieldTest, InteractionEvent, InterfaceSpec, Literal, Predicate,
    WidgetClass,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid user model: {0}")]
    Config(String),
    #[error("no value domain for attribute `{0}`")]
    DomainMissing(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RngAlgorithm {
    #[default]
    Chacha8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricParams {
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogNormalParams {
    /// Mean of ln(ms).
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapRange {
    pub lo: u64,
    pub hi: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UserModelConfig {
    pub seed: u64,
    pub rng: RngAlgorithm,
    pub n_interactions: usize,
    pub burst_length: GeometricParams,
    pub think_time_ms: LogNormalParams,
    pub intra_burst_gap_ms: GapRange,
    /// `None` uses min(3, usable widgets).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub widget_subset_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub widget_weights: Option<IndexMap<String, f64>>,
    pub start_timestamp_ms: i64,
}

pub const DEFAULT_SUBSET_SIZE: usize = 3;

impl Default for UserModelConfig {
    fn default() -> Self {
        UserModelConfig {
            seed: 42,
            rng: RngAlgorithm::Chacha8,
            n_interactions: 100,
            burst_length: GeometricParams { p: 0.25 },
            think_time_ms: LogNormalParams {
                mu: 8000f64.ln(),
                sigma: 0.6,
            },
            intra_burst_gap_ms: GapRange { lo: 200, hi: 1200 },
            widget_subset_size: None,
            widget_weights: None,
            start_timestamp_ms: 1_610_000_000_000,
        }
    }
}

/// z such that P(Z < z) = 0.01 for a standard normal.
const NORMAL_P01: f64 = -2.326_347_874_040_840_8;

impl UserModelConfig {
    pub fn from_json(text: &str) -> Result<UserModelConfig, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let p = self.burst_length.p;
        if !(p > 0.0 && p <= 1.0) {
            return Err(SimError::Config(format!("burst_length.p = {p} must lie in (0, 1]")));
        }
        let GapRange { lo, hi } = self.intra_burst_gap_ms;
        if lo < 1 || lo > hi {
            return Err(SimError::Config(format!(
                "intra_burst_gap_ms [{lo}, {hi}] must satisfy 1 <= lo <= hi"
            )));
        }
        let LogNormalParams { mu, sigma } = self.think_time_ms;
        if !mu.is_finite() || !sigma.is_finite() || sigma < 0.0 {
            return Err(SimError::Config("think_time_ms needs finite mu and sigma >= 0".into()));
        }
        let p01 = (mu + sigma * NORMAL_P01).exp();
        if p01 <= hi as f64 {
            return Err(SimError::Config(format!(
                "think time 1st percentile {p01:.0} ms must exceed the intra-burst maximum {hi} ms"
            )));
        }
        if self.widget_subset_size == Some(0) {
            return Err(SimError::Config("widget_subset_size must be >= 1".into()));
        }
        if let Some(weights) = &self.widget_weights {
            if weights.values().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(SimError::Config("widget weights must be finite and >= 0".into()));
            }
            if !weights.values().any(|w| *w > 0.0) {
                return Err(SimError::Config("at least one widget weight must be positive".into()));
            }
        }
        if self.start_timestamp_ms < 0 {
            return Err(SimError::Config("start_timestamp_ms must be >= 0".into()));
        }
        Ok(())
    }
}

/// Values an attribute can take, used to fill event parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum Domain {
    Categorical { values: Vec<String> },
    Numeric { min: f64, max: f64 },
}

/// Domains keyed by `table.attribute`.
pub type Domains = BTreeMap<AttributeRef, Domain>;

pub fn parse_domains(text: &str) -> Result<Domains, SimError> {
    let raw: IndexMap<String, Domain> =
        serde_json::from_str(text).map_err(|e| SimError::Config(format!("domains file: {e}")))?;
    raw.into_iter()
        .map(|(k, v)| {
            let attr = k
                .parse::<AttributeRef>()
                .map_err(|e| SimError::Config(format!("domains file: {e}")))?;
            Ok((attr, v))
        })
        .collect()
}

pub fn domains_to_json(domains: &Domains) -> String {
    let map: IndexMap<String, &Domain> = domains.iter().map(|(k, v)| (k.to_string(), v)).collect();
    serde_json::to_string_pretty(&map).expect("domains serialize")
}

/// Uniform and derived draws from ChaCha8 with fixed, documented formulas.
#[derive(Debug, Clone)]
pub struct PortableRng {
    inner: ChaCha8Rng,
}

impl PortableRng {
    pub fn new(seed: u64) -> Self {
        PortableRng {
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Top 53 bits of the next output scaled to [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Integer in [0, n).
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    /// Integer in [lo, hi].
    pub fn between(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.below((hi - lo + 1) as usize) as u64
    }

    /// Geometric on {1, 2, ...} by inversion.
    pub fn geometric(&mut self, p: f64) -> u64 {
        if p >= 1.0 {
            return 1;
        }
        let u = self.uniform();
        1 + ((1.0 - u).ln() / (1.0 - p).ln()).floor() as u64
    }

    /// Standard normal via Box-Muller (cosine branch, one normal per call).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn lognormal(&mut self, mu: f64, sigma: f64) -> f64 {
        (mu + sigma * self.normal()).exp()
    }
}

/// One generated event with its burst bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedEvent {
    pub event: InteractionEvent,
    pub burst: usize,
    pub widget: String,
}

struct Candidate<'a> {
    name: &'a str,
    class: WidgetClass,
    weight: f64,
    relationships: Vec<Vec<(String, AttributeKind, &'a Domain)>>,
    relationship_names: Vec<&'a str>,
}

/// Generate `cfg.n_interactions` events with burst annotations.
pub fn simulate_trace(
    iface: &InterfaceSpec,
    domains: &Domains,
    cfg: &UserModelConfig,
) -> Result<Vec<SimulatedEvent>, SimError> {
    cfg.validate()?;
    let mut candidates = Vec::new();
    for w in &iface.widgets {
        let rels: Vec<_> = iface.relationships.iter().filter(|r| r.source == w.name).collect();
        if rels.is_empty() {
            continue;
        }
        let weight = match &cfg.widget_weights {
            Some(m) => m.get(&w.name).copied().unwrap_or(0.0),
            None => 1.0,
        };
        let mut relationships = Vec::new();
        for r in &rels {
            let mut attrs = Vec::new();
            for a in &r.attribute {
                let kind = a
                    .kind(&iface.database)
                    .ok_or_else(|| SimError::DomainMissing(a.to_string()))?;
                let domain = domains
                    .get(a)
                    .ok_or_else(|| SimError::DomainMissing(a.to_string()))?;
                match (kind, domain) {
                    (AttributeKind::Categorical, Domain::Categorical { values }) if !values.is_empty() => {}
                    (AttributeKind::Numerical, Domain::Numeric { min, max }) if min <= max => {}
                    _ => {
                        return Err(SimError::Config(format!(
                            "domain for `{a}` does not match its {kind:?} kind or is empty"
                        )))
                    }
                }
                attrs.push((a.attribute.clone(), kind, domain));
            }
            relationships.push(attrs);
        }
        candidates.push(Candidate {
            name: &w.name,
            class: w.widget_class,
            weight,
            relationships,
            relationship_names: rels.iter().map(|r| r.name.as_str()).collect(),
        });
    }
    if let Some(weights) = &cfg.widget_weights {
        if let Some(unknown) = weights.keys().find(|k| !candidates.iter().any(|c| c.name == k.as_str())) {
            return Err(SimError::Config(format!(
                "weight given for `{unknown}`, which is not a widget sourcing any relationship"
            )));
        }
    }
    let usable = candidates.iter().filter(|c| c.weight > 0.0).count();
    if usable == 0 {
        return Err(SimError::Config("no widget sources a relationship".into()));
    }
    let k = match cfg.widget_subset_size {
        Some(k) if k > usable => {
            return Err(SimError::Config(format!(
                "widget_subset_size {k} exceeds the {usable} usable widgets"
            )))
        }
        Some(k) => k,
        None => DEFAULT_SUBSET_SIZE.min(usable),
    };

    let mut rng = PortableRng::new(cfg.seed);
    let mut out = Vec::with_capacity(cfg.n_interactions);
    let mut t = cfg.start_timestamp_ms;
    let GapRange { lo, hi } = cfg.intra_burst_gap_ms;
    let mut burst = 0;
    while out.len() < cfg.n_interactions {
        let subset = weighted_subset(&mut rng, &candidates, k);
        let length = rng.geometric(cfg.burst_length.p);
        for j in 0..length {
            if out.len() == cfg.n_interactions {
                break;
            }
            if !out.is_empty() {
                let gap = if j == 0 {
                    let think = rng.lognormal(cfg.think_time_ms.mu, cfg.think_time_ms.sigma).round();
                    (think.min(i64::MAX as f64 / 4.0) as i64).max(hi as i64 + 1)
                } else {
                    rng.between(lo, hi) as i64
                };
                t += gap;
            }
            let cand = &candidates[subset[rng.below(subset.len())]];
            let r = rng.below(cand.relationships.len());
            let parameters = sample_parameters(&mut rng, cand.class, &cand.relationships[r]);
            out.push(SimulatedEvent {
                event: InteractionEvent::data(cand.relationship_names[r], t, parameters),
                burst,
                widget: cand.name.to_string(),
            });
        }
        burst += 1;
    }
    Ok(out)
}

pub fn simulate_interactions(
    iface: &InterfaceSpec,
    domains: &Domains,
    cfg: &UserModelConfig,
) -> Result<Vec<InteractionEvent>, SimError> {
    Ok(simulate_trace(iface, domains, cfg)?
        .into_iter()
        .map(|s| s.event)
        .collect())
}

fn weighted_subset(rng: &mut PortableRng, candidates: &[Candidate], k: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..candidates.len()).filter(|&i| candidates[i].weight > 0.0).collect();
    let mut chosen = Vec::with_capacity(k);
    for _ in 0..k {
        let total: f64 = pool.iter().map(|&i| candidates[i].weight).sum();
        let target = rng.uniform() * total;
        let mut acc = 0.0;
        let mut pick = pool.len() - 1;
        for (pos, &i) in pool.iter().enumerate() {
            acc += candidates[i].weight;
            if target < acc {
                pick = pos;
                break;
            }
        }
        chosen.push(pool.remove(pick));
    }
    chosen
}

fn is_continuous(class: WidgetClass) -> bool {
    use WidgetClass::*;
    matches!(class, Slider | Hover | Panning | Brush | ZoomQualitative | ZoomQuantitative)
}

fn sample_parameters(
    rng: &mut PortableRng,
    class: WidgetClass,
    attrs: &[(String, AttributeKind, &Domain)],
) -> Predicate {
    let mut parts: Vec<Predicate> = attrs
        .iter()
        .map(|(name, _, domain)| Predicate::field(name.clone(), sample_test(rng, class, domain)))
        .collect();
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        Predicate::And(parts)
    }
}

fn sample_test(rng: &mut PortableRng, class: WidgetClass, domain: &Domain) -> FieldTest {
    match domain {
        Domain::Categorical { values } => {
            if matches!(class, WidgetClass::Checkbox | WidgetClass::ListBox) {
                let m = 1 + rng.below(values.len().min(3));
                let mut idx: Vec<usize> = (0..values.len()).collect();
                let mut picked = Vec::with_capacity(m);
                for _ in 0..m {
                    picked.push(idx.remove(rng.below(idx.len())));
                }
                picked.sort_unstable();
                FieldTest::OneOf(picked.into_iter().map(|i| Literal::Text(values[i].clone())).collect())
            } else {
                FieldTest::Equal(Literal::Text(values[rng.below(values.len())].clone()))
            }
        }
        Domain::Numeric { min, max } => {
            if is_continuous(class) {
                let a = numeric_value(rng, *min, *max);
                let b = numeric_value(rng, *min, *max);
                let (lo, hi) = if a.1 <= b.1 { (a, b) } else { (b, a) };
                FieldTest::Range(lo.0, hi.0)
            } else {
                let v = numeric_value(rng, *min, *max).0;
                match rng.below(4) {
                    0 => FieldTest::Lt(v),
                    1 => FieldTest::Lte(v),
                    2 => FieldTest::Gt(v),
                    _ => FieldTest::Gte(v),
                }
            }
        }
    }
}

/// Uniform value in [min, max]; integers when both bounds are integral,
/// otherwise rounded to 4 decimals.
fn numeric_value(rng: &mut PortableRng, min: f64, max: f64) -> (Literal, f64) {
    let integral = min.fract() == 0.0 && max.fract() == 0.0 && max - min < 9.0e15;
    if integral {
        let v = min as i64 + rng.between(0, (max - min) as u64) as i64;
        (Literal::Number(Number::from(v)), v as f64)
    } else {
        let raw = min + rng.uniform() * (max - min);
        let v = ((raw * 1e4).round() / 1e4).clamp(min, max);
        let lit = Number::from_f64(v).map(Literal::Number).unwrap_or(Literal::Number(0.into()));
        (lit, v)
    }
}

/// Playback speed for an observed log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Speed {
    Factor(f64),
    /// Issue everything at once.
    Stress,
}

impl Speed {
    pub fn parse(s: &str) -> Result<Speed, String> {
        match s {
            "inf" | "infinity" | "stress" => Ok(Speed::Stress),
            _ => {
                let f: f64 = s.parse().map_err(|_| format!("invalid speed `{s}`"))?;
                if f.is_infinite() && f > 0.0 {
                    Ok(Speed::Stress)
                } else if f > 0.0 {
                    Ok(Speed::Factor(f))
                } else {
                    Err(format!("speed must be positive, got {s}"))
                }
            }
        }
    }
}

/// Wall-clock offsets (ms from the first event) for timestamps.
pub fn schedule_offsets(timestamps: &[i64], speed: Speed) -> Vec<f64> {
    let Some(&first) = timestamps.first() else {
        return Vec::new();
    };
    timestamps
        .iter()
        .map(|&t| match speed {
            Speed::Stress => 0.0,
            Speed::Factor(f) => (t - first) as f64 / f,
        })
        .collect()
}

pub fn replay_schedule(events: &[InteractionEvent], speed: Speed) -> Vec<(&InteractionEvent, f64)> {
    let ts: Vec<i64> = events.iter().map(|e| e.timestamp).collect();
    events.iter().zip(schedule_offsets(&ts, speed)).collect()
}
