//! JSON encoding shared by all domain types.
//!
//! Complex scalars are `[re, im]`, matrices are nested row-major arrays of
//! complex scalars. Every top-level document is an envelope
//! `{"schema": "povmc/1", "kind": ..., "data": ...}`.

use serde::de::{DeserializeOwned, Error as _};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};

pub const SCHEMA: &str = "povmc/1";
pub const SDP_SCHEMA: &str = "povmc-sdp/1";

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cx(C64);

impl Serialize for Cx {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cx {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Cx(C64::new(re, im)))
    }
}

/// Row-major matrix wrapper used by the `with` modules below.
#[derive(Debug, Clone, PartialEq)]
struct Mat(CMatrix);

impl Serialize for Mat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Cx>> = (0..self.0.nrows()).map(|i| (0..self.0.ncols()).map(|j| Cx(self.0[(i, j)])).collect()).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<Cx>>::deserialize(d)?;
        let nrows = rows.len();
        if nrows == 0 {
            return Err(D::Error::custom("matrix must have at least one row"));
        }
        let ncols = rows[0].len();
        if ncols == 0 {
            return Err(D::Error::custom("matrix must have at least one column"));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
            return Err(D::Error::custom(format!("row {bad} has {} entries, expected {ncols}", rows[bad].len())));
        }
        Ok(Mat(CMatrix::from_fn(nrows, ncols, |i, j| rows[i][j].0)))
    }
}

macro_rules! with_module {
    ($name:ident, $ty:ty, $wrap:ty, $to:expr, $from:expr) => {
        pub mod $name {
            use super::*;

            pub fn serialize<S: Serializer>(v: &$ty, s: S) -> std::result::Result<S::Ok, S::Error> {
                let w: $wrap = ($to)(v);
                w.serialize(s)
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<$ty, D::Error> {
                let w = <$wrap>::deserialize(d)?;
                Ok(($from)(w))
            }
        }
    };
}

with_module!(complex, C64, Cx, |v: &C64| Cx(*v), |w: Cx| w.0);
with_module!(matrix, CMatrix, Mat, |v: &CMatrix| Mat(v.clone()), |w: Mat| w.0);
with_module!(matrices, Vec<CMatrix>, Vec<Mat>, |v: &Vec<CMatrix>| v.iter().cloned().map(Mat).collect::<Vec<_>>(), |w: Vec<Mat>| w
    .into_iter()
    .map(|m| m.0)
    .collect());
with_module!(
    matrices2,
    Vec<Vec<CMatrix>>,
    Vec<Vec<Mat>>,
    |v: &Vec<Vec<CMatrix>>| v.iter().map(|row| row.iter().cloned().map(Mat).collect::<Vec<_>>()).collect::<Vec<_>>(),
    |w: Vec<Vec<Mat>>| w.into_iter().map(|row| row.into_iter().map(|m| m.0).collect()).collect()
);
with_module!(
    opt_matrices,
    Option<Vec<CMatrix>>,
    Option<Vec<Mat>>,
    |v: &Option<Vec<CMatrix>>| v.as_ref().map(|v| v.iter().cloned().map(Mat).collect::<Vec<_>>()),
    |w: Option<Vec<Mat>>| w.map(|w| w.into_iter().map(|m| m.0).collect())
);
with_module!(vector, CVector, Vec<Cx>, |v: &CVector| v.iter().map(|z| Cx(*z)).collect::<Vec<_>>(), |w: Vec<Cx>| CVector::from_iterator(
    w.len(),
    w.into_iter().map(|z| z.0)
));
with_module!(
    vectors,
    Vec<CVector>,
    Vec<Vec<Cx>>,
    |v: &Vec<CVector>| v.iter().map(|v| v.iter().map(|z| Cx(*z)).collect::<Vec<_>>()).collect::<Vec<_>>(),
    |w: Vec<Vec<Cx>>| w.into_iter().map(|v| CVector::from_iterator(v.len(), v.into_iter().map(|z| z.0))).collect()
);

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Envelope {
    schema: String,
    kind: String,
    data: Value,
}

/// Wraps `data` in a `povmc/1` envelope of the given kind.
pub fn to_document<T: Serialize>(kind: &str, data: &T) -> Result<Value> {
    let env = Envelope { schema: SCHEMA.to_string(), kind: kind.to_string(), data: serde_json::to_value(data)? };
    Ok(serde_json::to_value(env)?)
}

/// Parses an envelope and returns `(kind, data)`. Schema mismatches are
/// rejected here so callers only dispatch on `kind`.
pub fn read_envelope(text: &str) -> Result<(String, Value)> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let env: Envelope = serde_path_to_error::deserialize(de).map_err(|e| Error::Json(format!("at `{}`: {}", e.path(), e.inner())))?;
    if env.schema != SCHEMA && env.schema != SDP_SCHEMA {
        return Err(Error::Json(format!("at `schema`: unsupported schema {:?}, expected {SCHEMA:?}", env.schema)));
    }
    Ok((env.kind, env.data))
}

/// Deserializes the `data` payload of an envelope. Errors carry a pointer
/// such as `data.povms[1].effects[0][2]`.
pub fn from_data<T: DeserializeOwned>(data: Value) -> Result<T> {
    serde_path_to_error::deserialize(data).map_err(|e| Error::Json(format!("at `data.{}`: {}", e.path(), e.inner())))
}

/// Reads a whole document and checks that its kind matches.
pub fn from_document<T: DeserializeOwned>(text: &str, kind: &str) -> Result<T> {
    let (found, data) = read_envelope(text)?;
    if found != kind {
        return Err(Error::Json(format!("at `kind`: expected {kind:?}, found {found:?}")));
    }
    from_data(data)
}

pub fn to_pretty(v: &Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}
