use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::floatfmt::{serialize_f64, serialize_opt_f64};

/// Which inequality a record checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundId {
    /// `int_0^inf exp(-a |x + tau V|^2) dtau <= sqrt(pi/a) / |V|`.
    Ray,
    /// Decay of the kernel-weighted Maxwellian, `<= C(gamma, alpha, beta) / (t+1)^{3+gamma}`.
    Decay,
    /// Soft-potential bound on `N1(t)`.
    N1,
    /// Time-integrated bound on `N2`.
    N2,
    /// `||f(t)||_P <= e^D ||f_0||_P`.
    Gronwall,
    /// `||f(t)||_P^mu <= ||f_0||_P^mu / (1 - barC)`.
    FixedPoint,
    /// `||f - fbar||_{L^p_M}(t) <= G_p ||f_0 - fbar_0||_{L^p_M}`.
    Difference,
    /// Pointwise differential inequality for `G = |g - gbar|`.
    DifferenceRate,
}

impl BoundId {
    pub const ALL: [BoundId; 8] = [
        BoundId::Ray,
        BoundId::Decay,
        BoundId::N1,
        BoundId::N2,
        BoundId::Gronwall,
        BoundId::FixedPoint,
        BoundId::Difference,
        BoundId::DifferenceRate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundId::Ray => "ray",
            BoundId::Decay => "decay",
            BoundId::N1 => "n1",
            BoundId::N2 => "n2",
            BoundId::Gronwall => "gronwall",
            BoundId::FixedPoint => "fixed_point",
            BoundId::Difference => "difference",
            BoundId::DifferenceRate => "difference_rate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|id| id.as_str() == s)
    }
}

impl fmt::Display for BoundId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Monte Carlo error above the configured cap.
    Inconclusive,
    /// Hypotheses not met or constants undefined for these parameters.
    Unavailable,
}

/// Monte Carlo settings shared by the sampled verifiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    /// Largest accepted `error / |lhs|`.
    pub rel_error_cap: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { samples: 20_000, seed: 0, rel_error_cap: 0.1 }
    }
}

/// One evaluated inequality `lhs <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheckRecord {
    pub bound: BoundId,
    pub index: usize,
    pub seed: Option<u64>,
    pub inputs: BTreeMap<String, Value>,
    #[serde(serialize_with = "serialize_f64")]
    pub lhs: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub lhs_error: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub rhs: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub margin: f64,
    /// Right-hand side under the alternative constant reading, when one exists.
    #[serde(serialize_with = "serialize_opt_f64", skip_serializing_if = "Option::is_none")]
    pub alt_rhs: Option<f64>,
    pub status: CheckStatus,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl BoundCheckRecord {
    /// Applies the acceptance rule: inconclusive if `lhs_error > cap |lhs|`,
    /// otherwise pass iff `rhs - lhs >= -3 lhs_error`.
    pub fn judge(bound: BoundId, index: usize, seed: Option<u64>, inputs: Inputs, lhs: f64, lhs_error: f64, rhs: f64, cap: Option<f64>) -> Self {
        let lhs_error = lhs_error.abs();
        let margin = if rhs == f64::INFINITY && lhs.is_finite() { f64::INFINITY } else { rhs - lhs };
        let status = if !lhs.is_finite() || lhs_error.is_nan() || rhs.is_nan() {
            CheckStatus::Fail
        } else if cap.is_some_and(|c| lhs_error > c * lhs.abs()) {
            CheckStatus::Inconclusive
        } else if margin >= -3.0 * lhs_error {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        Self {
            bound,
            index,
            seed,
            inputs: inputs.0,
            lhs,
            lhs_error,
            rhs,
            margin,
            alt_rhs: None,
            status,
            pass: status == CheckStatus::Pass,
            note: None,
        }
    }

    pub fn unavailable(bound: BoundId, index: usize, inputs: Inputs, reason: impl Into<String>) -> Self {
        Self {
            bound,
            index,
            seed: None,
            inputs: inputs.0,
            lhs: f64::NAN,
            lhs_error: 0.0,
            rhs: f64::NAN,
            margin: f64::NAN,
            alt_rhs: None,
            status: CheckStatus::Unavailable,
            pass: false,
            note: Some(reason.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn with_alt_rhs(mut self, alt: f64) -> Self {
        self.alt_rhs = Some(alt);
        self
    }

    /// Whether `lhs <= alt_rhs` holds under the same error rule.
    pub fn alt_holds(&self) -> Option<bool> {
        self.alt_rhs.map(|a| a - self.lhs >= -3.0 * self.lhs_error)
    }
}

/// Ordered name/value pairs echoed into a record.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Inputs(pub BTreeMap<String, Value>);

impl Inputs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num(mut self, key: &str, x: f64) -> Self {
        let v = serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(crate::floatfmt::format_f64(x)));
        self.0.insert(key.to_string(), v);
        self
    }

    pub fn vec3(mut self, key: &str, x: &crate::Vec3) -> Self {
        self.0.insert(key.to_string(), Value::from(vec![x[0], x[1], x[2]]));
        self
    }

    pub fn text(mut self, key: &str, s: impl Into<String>) -> Self {
        self.0.insert(key.to_string(), Value::String(s.into()));
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn judge_rule() {
        let r = BoundCheckRecord::judge(BoundId::Ray, 0, None, Inputs::new(), 1.0, 0.1, 0.8, None);
        assert_eq!(r.status, CheckStatus::Pass);
        assert!(r.margin < 0.0);
        let r = BoundCheckRecord::judge(BoundId::Ray, 0, None, Inputs::new(), 1.0, 0.01, 0.8, None);
        assert_eq!(r.status, CheckStatus::Fail);
        let r = BoundCheckRecord::judge(BoundId::N1, 0, Some(3), Inputs::new(), 1.0, 0.5, 10.0, Some(0.1));
        assert_eq!(r.status, CheckStatus::Inconclusive);
        assert!(!r.pass);
        let r = BoundCheckRecord::judge(BoundId::Gronwall, 0, None, Inputs::new(), 1.0, 0.0, f64::INFINITY, None);
        assert!(r.pass);
        assert_eq!(r.margin, f64::INFINITY);
    }

    #[test]
    fn ids_round_trip() {
        for id in BoundId::ALL {
            assert_eq!(BoundId::parse(id.as_str()), Some(id));
            assert_eq!(serde_json::to_string(&id).unwrap(), format!("\"{}\"", id.as_str()));
        }
    }

    #[test]
    fn infinite_rhs_serialises_as_text() {
        let r = BoundCheckRecord::judge(BoundId::Gronwall, 0, None, Inputs::new().num("P", 2.0), 1.0, 0.0, f64::INFINITY, None);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"rhs\":\"inf\""), "{s}");
    }
}
