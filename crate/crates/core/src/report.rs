//! The common report record for every inequality evaluation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::scalar::{Mode, Scalar, ScalarValue};

/// One evaluation of an inequality `lhs ≤ rhs`.
///
/// `ratio = lhs / rhs` whenever `rhs > 0`; a zero right-hand side with a
/// positive left-hand side is flagged `degenerate` instead of dividing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub name: String,
    pub params: BTreeMap<String, ScalarValue>,
    pub lhs: ScalarValue,
    pub rhs: ScalarValue,
    pub ratio: Option<ScalarValue>,
    pub holds: bool,
    pub witness: Option<String>,
    pub mode: Mode,
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub flags: BTreeMap<String, bool>,
}

impl LemmaReport {
    pub fn compare<S: Scalar>(name: impl Into<String>, lhs: S, rhs: S) -> Self {
        let positive_rhs = rhs > S::zero();
        let ratio = positive_rhs.then(|| (lhs.clone() / rhs.clone()).to_value());
        let degenerate = !positive_rhs && lhs > S::zero();
        Self {
            name: name.into(),
            params: BTreeMap::new(),
            holds: !degenerate && lhs.le_tol(&rhs),
            lhs: lhs.to_value(),
            rhs: rhs.to_value(),
            ratio,
            witness: None,
            mode: S::MODE,
            seed: None,
            degenerate,
            flags: BTreeMap::new(),
        }
    }

    pub fn param<S: Scalar>(mut self, key: &str, v: &S) -> Self {
        self.params.insert(key.to_string(), v.to_value());
        self
    }

    pub fn param_value(mut self, key: &str, v: ScalarValue) -> Self {
        self.params.insert(key.to_string(), v);
        self
    }

    pub fn param_f64(self, key: &str, v: f64) -> Self {
        self.param_value(key, ScalarValue::Float(v))
    }

    pub fn param_int(self, key: &str, v: u64) -> Self {
        self.param_value(key, ScalarValue::Exact(num::BigRational::from_integer(v.into())))
    }

    pub fn witness(mut self, w: impl ToString) -> Self {
        self.witness = Some(w.to_string());
        self
    }

    pub fn flag(mut self, key: &str, v: bool) -> Self {
        self.flags.insert(key.to_string(), v);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn ratio_f64(&self) -> Option<f64> {
        self.ratio.as_ref().map(ScalarValue::to_f64)
    }

    /// `ratio · rhs == lhs`, exactly in exact mode and to 1e-12 relative otherwise.
    pub fn ratio_consistent(&self) -> bool {
        let Some(ratio) = &self.ratio else {
            return true;
        };
        match (ratio, &self.rhs, &self.lhs) {
            (ScalarValue::Exact(r), ScalarValue::Exact(b), ScalarValue::Exact(a)) => r * b == *a,
            _ => {
                let (r, b, a) = (ratio.to_f64(), self.rhs.to_f64(), self.lhs.to_f64());
                (r * b - a).abs() <= 1e-12 * a.abs().max(r * b).max(f64::MIN_POSITIVE)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigRational;

    #[test]
    fn degenerate_rhs_is_flagged() {
        let r = LemmaReport::compare("t", 1.0f64, 0.0);
        assert!(r.degenerate && !r.holds && r.ratio.is_none());
        let z = LemmaReport::compare("t", 0.0f64, 0.0);
        assert!(!z.degenerate && z.holds);
    }

    #[test]
    fn ratio_times_rhs_is_lhs_exactly() {
        let r = LemmaReport::compare(
            "t",
            BigRational::from_ratio(7, 3),
            BigRational::from_ratio(5, 11),
        );
        assert!(r.ratio_consistent());
        assert!(!r.holds);
        let json = serde_json::to_string(&r).unwrap();
        let back: LemmaReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
