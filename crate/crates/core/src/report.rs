//! CSV and JSON emitters.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), which
//! round-trips every finite `f64`. JSON keys follow struct field order.

use serde::{Deserialize, Serialize};

use crate::meanlab::DefectReport;
use crate::Result;

/// `x` with 17 significant digits; non-finite values as `NaN`, `inf`, `-inf`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn raw<S: serde::Serializer>(x: f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return s.serialize_none();
    }
    let v = serde_json::value::RawValue::from_string(fmt_f64(x)).map_err(serde::ser::Error::custom)?;
    v.serialize(s)
}

/// Serde adapter writing an `f64` as a 17-digit JSON number (`null` if not finite).
pub mod f17 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        super::raw(*x, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// [`f17`] for optional values; `None` is `null`.
pub mod f17_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => super::raw(*v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<f64>::deserialize(d)
    }
}

pub const DEFECT_HEADER: &str = "experiment,group,N,R,alpha,M,seed,estimate,std_error,wall_ms";
pub const GEOMETRY_HEADER: &str = "n,s,exact,mc_estimate,mc_se,M,seed";

/// One row of a shifted-ball overlap sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryRow {
    pub n: usize,
    #[serde(with = "f17")]
    pub s: f64,
    #[serde(with = "f17")]
    pub exact: f64,
    #[serde(with = "f17")]
    pub mc_estimate: f64,
    #[serde(with = "f17")]
    pub mc_se: f64,
    pub m: usize,
    pub seed: u64,
}

pub fn defect_csv(reports: &[DefectReport]) -> String {
    let mut out = String::from(DEFECT_HEADER);
    out.push('\n');
    for r in reports {
        let alpha = r.alpha.map(fmt_f64).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.experiment,
            r.group,
            r.n,
            fmt_f64(r.radius),
            alpha,
            r.m,
            r.seed,
            fmt_f64(r.estimate),
            fmt_f64(r.std_error),
            r.wall_ms
        ));
    }
    out
}

pub fn geometry_csv(rows: &[GeometryRow]) -> String {
    let mut out = String::from(GEOMETRY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n,
            fmt_f64(r.s),
            fmt_f64(r.exact),
            fmt_f64(r.mc_estimate),
            fmt_f64(r.mc_se),
            r.m,
            r.seed
        ));
    }
    out
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| crate::Error::Argument(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn reports_from_json(s: &str) -> Result<Vec<DefectReport>> {
    serde_json::from_str(s).map_err(|e| crate::Error::Argument(format!("bad report JSON: {e}")))
}
