//! Serialization of reals rounded to 15 significant digits, with infinities
//! and NaN written as the strings `"inf"`, `"-inf"` and `"nan"`.

use serde::ser::SerializeSeq;
use serde::Serializer;

pub fn round15(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.14e}").parse().unwrap_or(x)
}

pub fn f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    let x = *x;
    if x.is_nan() {
        s.serialize_str("nan")
    } else if x.is_infinite() {
        s.serialize_str(if x > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(round15(x))
    }
}

pub fn opt_f64<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => f64(v, s),
        None => s.serialize_none(),
    }
}

struct Wrap(f64);

impl serde::Serialize for Wrap {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        f64(&self.0, s)
    }
}

pub fn vec_f64<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for &x in v {
        seq.serialize_element(&Wrap(x))?;
    }
    seq.end()
}

pub fn opt_pair<S: Serializer>(v: &Option<(f64, f64)>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some((a, b)) => vec_f64(&[*a, *b], s),
        None => s.serialize_none(),
    }
}

pub fn matrix<S: Serializer>(m: &crate::linalg::Matrix, s: S) -> Result<S::Ok, S::Error> {
    let rows = m.to_rows();
    let mut seq = s.serialize_seq(Some(rows.len()))?;
    for r in rows {
        let wrapped: Vec<Wrap> = r.into_iter().map(Wrap).collect();
        seq.serialize_element(&wrapped)?;
    }
    seq.end()
}
