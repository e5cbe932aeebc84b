use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Defaults for the exponent split `P = mu p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanDefaults {
    /// `mu` used when `P >= 1`.
    pub mu0: f64,
    /// `p` used when `P < 1`.
    pub p0: f64,
}

impl Default for PlanDefaults {
    fn default() -> Self {
        Self { mu0: 0.5, p0: 2.0 }
    }
}

impl PlanDefaults {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu0 > 0.0 && self.mu0 < 1.0) {
            return Err(Error::param("mu0", format!("must lie in (0, 1), got {}", self.mu0)));
        }
        if !(self.p0 > 1.0 && self.p0.is_finite()) {
            return Err(Error::param("p0", format!("must exceed 1, got {}", self.p0)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanCase {
    /// `P >= 1`: fix `mu`, set `p = P / mu`.
    I,
    /// `P < 1`: fix `p`, set `mu = P / p`.
    Ii,
}

/// Split of a target exponent `P` into `mu in (0,1)` and `p > 1` with
/// `mu p = P` holding exactly in rational arithmetic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentPlan {
    #[serde(rename = "P")]
    pub target: f64,
    pub mu: f64,
    pub p: f64,
    pub case: PlanCase,
    #[serde(serialize_with = "ser_ratio")]
    pub mu_exact: BigRational,
    #[serde(serialize_with = "ser_ratio")]
    pub p_exact: BigRational,
}

fn ser_ratio<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

fn exact(x: f64, name: &'static str) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::param(name, format!("not a finite number: {x}")))
}

impl ExponentPlan {
    /// A plan with explicitly chosen `mu` and `p`.
    pub fn from_pair(mu: f64, p: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::param("mu", format!("must lie in (0, 1), got {mu}")));
        }
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::param("p", format!("must exceed 1, got {p}")));
        }
        let (mu_exact, p_exact) = (exact(mu, "mu")?, exact(p, "p")?);
        let target_exact = &mu_exact * &p_exact;
        let target = target_exact.to_f64().unwrap_or(mu * p);
        let case = if target_exact >= BigRational::one() { PlanCase::I } else { PlanCase::Ii };
        Ok(Self { target, mu, p, case, mu_exact, p_exact })
    }

    /// Keeps `mu` and sets `p = P / mu` exactly.
    pub fn with_mu(target: f64, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::param("mu", format!("must lie in (0, 1), got {mu}")));
        }
        let big_p = exact(target, "P")?;
        let mu_exact = exact(mu, "mu")?;
        let p_exact = &big_p / &mu_exact;
        if p_exact <= BigRational::one() {
            return Err(Error::param("mu", format!("P/mu must exceed 1, got P={target}, mu={mu}")));
        }
        let case = if big_p >= BigRational::one() { PlanCase::I } else { PlanCase::Ii };
        Ok(Self { target, mu, p: p_exact.to_f64().expect("finite rational"), case, mu_exact, p_exact })
    }

    /// `mu p` as an exact rational.
    pub fn product(&self) -> BigRational {
        &self.mu_exact * &self.p_exact
    }
}

impl fmt::Display for ExponentPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P={} (mu={}, p={})", self.target, self.mu_exact, self.p_exact)
    }
}

/// Splits a finite target exponent `P` into `(mu, p)`.
pub fn exponent_plan(target: f64, defaults: &PlanDefaults) -> Result<ExponentPlan> {
    defaults.validate()?;
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::param("P", format!("target exponent must be positive and finite, got {target}")));
    }
    let big_p = exact(target, "P")?;
    let one = BigRational::one();
    let two = BigRational::from_integer(BigInt::from(2));
    let (mu, p, case) = if big_p >= one {
        let mu = exact(defaults.mu0, "mu0")?;
        let p = &big_p / &mu;
        if p > one {
            (mu, p, PlanCase::I)
        } else {
            (&big_p / &two, two, PlanCase::I)
        }
    } else {
        let p = exact(defaults.p0, "p0")?;
        (&big_p / &p, p, PlanCase::Ii)
    };
    debug_assert!(&mu * &p == big_p);
    if !(mu > BigRational::from_integer(BigInt::from(0)) && mu < one && p > one) {
        return Err(Error::param("P", format!("no admissible split for P={target}")));
    }
    Ok(ExponentPlan {
        target,
        mu: mu.to_f64().expect("finite rational"),
        p: p.to_f64().expect("finite rational"),
        case,
        mu_exact: mu,
        p_exact: p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn case_examples() {
        let d = PlanDefaults::default();
        let a = exponent_plan(2.0, &d).unwrap();
        assert_eq!((a.mu, a.p, a.case), (0.5, 4.0, PlanCase::I));
        let b = exponent_plan(0.5, &d).unwrap();
        assert_eq!((b.mu, b.p, b.case), (0.25, 2.0, PlanCase::Ii));
        let c = exponent_plan(1.0, &d).unwrap();
        assert_eq!((c.mu, c.p, c.case), (0.5, 2.0, PlanCase::I));
        assert_eq!(serde_json::to_value(&a).unwrap()["mu_exact"], "1/2");
    }

    #[test]
    fn rejects_bad_targets() {
        let d = PlanDefaults::default();
        assert!(exponent_plan(0.0, &d).is_err());
        assert!(exponent_plan(f64::INFINITY, &d).is_err());
        assert!(exponent_plan(1.0, &PlanDefaults { mu0: 1.0, p0: 2.0 }).is_err());
        assert!(exponent_plan(0.5, &PlanDefaults { mu0: 0.5, p0: 1.0 }).is_err());
    }

    proptest! {
        #[test]
        fn product_is_exact(target in 1e-3f64..1e3, mu0 in 0.01f64..0.99, p0 in 1.01f64..8.0) {
            let plan = exponent_plan(target, &PlanDefaults { mu0, p0 }).unwrap();
            prop_assert!(plan.product() == BigRational::from_float(target).unwrap());
            prop_assert!(plan.mu > 0.0 && plan.mu < 1.0 && plan.p > 1.0);
            prop_assert_eq!(plan.case == PlanCase::I, target >= 1.0);
        }
    }
}
