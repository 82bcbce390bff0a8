//! Verification reports and fixed-precision float serialization.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// One named comparison `lhs <= rhs` (or `lhs == rhs` for identities).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    #[serde(with = "float17")]
    pub lhs: f64,
    #[serde(with = "float17")]
    pub rhs: f64,
    #[serde(with = "float17")]
    pub margin: f64,
    #[serde(with = "float17")]
    pub tol: f64,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl VerificationReport {
    /// Inequality `lhs <= rhs` up to `rel_tol * scale`.
    pub fn inequality(check: &str, lhs: f64, rhs: f64, rel_tol: f64) -> Self {
        let tol = rel_tol * scale(lhs, rhs);
        let margin = rhs - lhs;
        Self {
            check: check.to_string(),
            lhs,
            rhs,
            margin,
            tol,
            pass: !lhs.is_nan() && (rhs == f64::INFINITY || (tol.is_finite() && margin >= -tol)),
            notes: Vec::new(),
        }
    }

    /// Identity `lhs == rhs`; `mass` is the absolute size of the summed terms,
    /// which bounds the rounding error better than the result when terms cancel.
    pub fn identity(check: &str, lhs: f64, rhs: f64, mass: f64, rel_tol: f64) -> Self {
        let tol = rel_tol * scale(lhs, rhs).max(mass.abs());
        let margin = (lhs - rhs).abs();
        Self {
            check: check.to_string(),
            lhs,
            rhs,
            margin,
            tol,
            pass: tol.is_finite() && margin <= tol,
            notes: Vec::new(),
        }
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: lhs={:.6e} rhs={:.6e} margin={:.3e} tol={:.1e} {}",
            self.check,
            self.lhs,
            self.rhs,
            self.margin,
            self.tol,
            if self.pass { "pass" } else { "FAIL" }
        )
    }
}

/// max(1, |lhs|, |rhs|)
pub fn scale(lhs: f64, rhs: f64) -> f64 {
    1f64.max(lhs.abs()).max(rhs.abs())
}

/// 17 significant digits; non-finite values become `null`.
pub fn format_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{:.16e}", x)
    } else {
        "null".to_string()
    }
}

pub mod float17 {
    use super::*;
    use serde_json::value::RawValue;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(format_f64(*x)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

pub mod vec_float17 {
    use super::*;
    use serde::ser::SerializeSeq;

    struct One(f64);

    impl Serialize for One {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            float17::serialize(&self.0, s)
        }
    }

    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for &x in xs {
            seq.serialize_element(&One(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let v = Vec::<Option<f64>>::deserialize(d)?;
        Ok(v.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect())
    }
}

pub mod opt_float17 {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => float17::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<f64>::deserialize(d)
    }
}
