//! Structured outcomes of identity checks.

use num_complex::Complex64 as C;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledValue {
    pub label: String,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub label: String,
    pub abs: f64,
    pub rel: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// One identity check: the values computed, pairwise discrepancies and a verdict.
///
/// A comparison of `a` and `b` passes when `|a − b| ≤ tol · max(|a|, |b|, floor)`;
/// `rel` is `|a − b| / max(|a|, |b|, floor)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity_name: String,
    pub inputs_digest: String,
    pub values: Vec<LabeledValue>,
    pub discrepancies: Vec<Discrepancy>,
    pub tolerance: f64,
    pub pass: bool,
}

impl IdentityReport {
    pub fn new(identity_name: impl Into<String>, inputs_digest: impl Into<String>) -> Self {
        IdentityReport {
            identity_name: identity_name.into(),
            inputs_digest: inputs_digest.into(),
            values: Vec::new(),
            discrepancies: Vec::new(),
            tolerance: 0.0,
            pass: true,
        }
    }

    pub fn value(&mut self, label: impl Into<String>, v: C) -> &mut Self {
        self.values.push(LabeledValue { label: label.into(), re: v.re, im: v.im });
        self
    }

    pub fn real(&mut self, label: impl Into<String>, v: f64) -> &mut Self {
        self.value(label, C::new(v, 0.0))
    }

    /// Records `|a − b|` against `tolerance` relative to `max(|a|, |b|, floor)`.
    pub fn compare(&mut self, label: impl Into<String>, a: C, b: C, tolerance: f64, floor: f64) -> &mut Self {
        let abs = (a - b).norm();
        let scale = a.norm().max(b.norm()).max(floor);
        let rel = if scale > 0.0 { abs / scale } else { 0.0 };
        self.record(Discrepancy { label: label.into(), abs, rel, tolerance, pass: abs <= tolerance * scale })
    }

    pub fn compare_real(&mut self, label: impl Into<String>, a: f64, b: f64, tolerance: f64, floor: f64) -> &mut Self {
        self.compare(label, C::new(a, 0.0), C::new(b, 0.0), tolerance, floor)
    }

    /// Records a quantity that must not exceed `limit`.
    pub fn bound(&mut self, label: impl Into<String>, value: f64, limit: f64) -> &mut Self {
        self.record(Discrepancy {
            label: label.into(),
            abs: value,
            rel: value,
            tolerance: limit,
            pass: value <= limit,
        })
    }

    /// Adds an already evaluated discrepancy.
    pub fn push_discrepancy(&mut self, d: Discrepancy) -> &mut Self {
        self.record(d)
    }

    fn record(&mut self, d: Discrepancy) -> &mut Self {
        self.pass &= d.pass;
        if self.discrepancies.is_empty() || d.tolerance < self.tolerance {
            self.tolerance = d.tolerance;
        }
        self.discrepancies.push(d);
        self
    }

    /// Re-evaluates every discrepancy against a single tolerance.
    pub fn rejudge(&mut self, tolerance: f64) {
        for d in &mut self.discrepancies {
            d.tolerance = tolerance;
            d.pass = d.rel <= tolerance;
        }
        self.tolerance = tolerance;
        self.pass = self.discrepancies.iter().all(|d| d.pass);
    }

    pub fn worst_rel(&self) -> f64 {
        self.discrepancies.iter().map(|d| d.rel).fold(0.0, f64::max)
    }

    /// Folds per-trial reports into one: the worst discrepancy per label,
    /// plus trial and failure counts. Labels keep their first-seen order.
    pub fn aggregate(name: impl Into<String>, digest: impl Into<String>, trials: &[IdentityReport]) -> Self {
        let mut out = IdentityReport::new(name, digest);
        let mut worst: Vec<Discrepancy> = Vec::new();
        for d in trials.iter().flat_map(|r| &r.discrepancies) {
            match worst.iter_mut().find(|w| w.label == d.label) {
                Some(w) => {
                    let take_new = (!d.pass && w.pass) || (d.pass == w.pass && d.rel > w.rel);
                    if take_new {
                        *w = d.clone();
                    }
                }
                None => worst.push(d.clone()),
            }
        }
        let failures = trials.iter().filter(|r| !r.pass).count();
        out.real("trials", trials.len() as f64);
        out.real("failed_trials", failures as f64);
        for d in worst {
            out.record(d);
        }
        out.pass &= failures == 0;
        out
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compare_uses_floor_and_scale() {
        let mut r = IdentityReport::new("x", "d");
        r.compare_real("small", 1e-14, 0.0, 1e-10, 1.0);
        assert!(r.pass);
        r.compare_real("large", 1e6, 1e6 + 1e-3, 1e-10, 1.0);
        assert!(!r.pass);
        assert_eq!(r.tolerance, 1e-10);
    }

    #[test]
    fn aggregate_keeps_worst() {
        let mut a = IdentityReport::new("t", "");
        a.compare_real("p", 1.0, 1.0 + 1e-12, 1e-10, 1.0);
        let mut b = IdentityReport::new("t", "");
        b.compare_real("p", 1.0, 1.0 + 1e-11, 1e-10, 1.0);
        let agg = IdentityReport::aggregate("t", "N=4", &[a, b]);
        assert!(agg.pass);
        assert_eq!(agg.discrepancies.len(), 1);
        assert!(agg.discrepancies[0].abs > 5e-12);
        let json = agg.to_json_line();
        let back: IdentityReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, agg);
    }
}
