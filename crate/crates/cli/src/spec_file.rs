//! Versioned JSON file formats for channels, supermaps, instruments and
//! states.
//!
//! Complex numbers are `[re, im]` pairs. Each component is written as a
//! decimal string with 17 significant digits; plain JSON numbers are also
//! accepted on input so fixtures can be written by hand.

use std::collections::BTreeMap;
use std::fmt;

use evosym::{ComplexMatrix, C64};
use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

pub const FORMAT_VERSION: &str = "1";

/// A file that could not be turned into the object it describes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{path}: cannot read file: {message}")]
    Io { path: String, message: String },

    #[error("{path}:{line}:{column}: {message}")]
    Syntax {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}:{}: field `{field}`: {message}", line.map_or("?".to_string(), |l| l.to_string()))]
    Field {
        path: String,
        line: Option<usize>,
        field: String,
        message: String,
    },
}

/// One complex entry, serialized as `["<re>", "<im>"]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry(pub C64);

pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl Serialize for Entry {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [format_f64(self.0.re), format_f64(self.0.im)].serialize(s)
    }
}

struct Real(f64);

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Real;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a real number or a decimal string")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Real, E> {
                Ok(Real(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Real, E> {
                match v.trim().parse::<f64>() {
                    Ok(x) if x.is_finite() => Ok(Real(x)),
                    _ => Err(E::custom(format!("`{v}` is not a finite decimal number"))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

impl<'de> Deserialize<'de> for Entry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Entry;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a complex entry [re, im]")
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Entry, A::Error> {
                let re: Real = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let im: Real = seq.next_element()?.ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                Ok(Entry(C64::new(re.0, im.0)))
            }
        }
        d.deserialize_seq(V)
    }
}

pub type RawMatrix = Vec<Vec<Entry>>;

pub fn raw_matrix(m: &ComplexMatrix) -> RawMatrix {
    (0..m.rows())
        .map(|r| (0..m.cols()).map(|c| Entry(m[(r, c)])).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Kraus,
    Choi,
}

/// A linear map given by its Kraus operators or its Choi matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpecFile {
    pub format_version: String,
    pub name: String,
    pub d_in: usize,
    pub d_out: usize,
    pub representation: Representation,
    pub data: serde_json::Value,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

/// A supermap as a dense matrix on row-major vectorized Choi matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperMapSpecFile {
    pub format_version: String,
    pub name: String,
    pub in_dims: [usize; 2],
    pub out_dims: [usize; 2],
    pub data: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    pub name: String,
    pub representation: Representation,
    pub data: serde_json::Value,
}

/// A finite list of branches with shared dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentSpecFile {
    pub format_version: String,
    pub name: String,
    pub d_in: usize,
    pub d_out: usize,
    pub branches: Vec<BranchSpec>,
}

/// A density matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpecFile {
    pub format_version: String,
    pub name: String,
    pub dim: usize,
    pub data: serde_json::Value,
}

/// Locates the first line of `text` containing `"key"`, for diagnostics.
fn key_line(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

/// Parsing context: file path and contents, for diagnostics.
pub struct Source<'a> {
    pub path: &'a str,
    pub text: &'a str,
}

impl<'a> Source<'a> {
    pub fn field_error(&self, field: &str, message: impl Into<String>) -> ParseError {
        let key = field.split(['[', '.']).next().unwrap_or(field);
        ParseError::Field {
            path: self.path.to_string(),
            line: key_line(self.text, key),
            field: field.to_string(),
            message: message.into(),
        }
    }

    pub fn parse<T: for<'de> Deserialize<'de>>(&self) -> Result<T, ParseError> {
        serde_json::from_str(self.text).map_err(|e| ParseError::Syntax {
            path: self.path.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string().split(" at line ").next().unwrap_or_default().to_string(),
        })
    }

    fn check_version(&self, v: &str) -> Result<(), ParseError> {
        if v != FORMAT_VERSION {
            return Err(self.field_error(
                "format_version",
                format!("unsupported version `{v}`, expected `{FORMAT_VERSION}`"),
            ));
        }
        Ok(())
    }

    /// A `rows x cols` matrix from the JSON value at `field`.
    pub fn matrix(&self, field: &str, value: &serde_json::Value, rows: usize, cols: usize) -> Result<ComplexMatrix, ParseError> {
        let raw: RawMatrix = serde_json::from_value(value.clone())
            .map_err(|e| self.field_error(field, format!("expected a matrix of [re, im] entries: {e}")))?;
        if raw.len() != rows {
            return Err(self.field_error(field, format!("expected {rows} rows, found {}", raw.len())));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for (r, row) in raw.iter().enumerate() {
            if row.len() != cols {
                return Err(self.field_error(
                    &format!("{field}[{r}]"),
                    format!("expected {cols} columns, found {}", row.len()),
                ));
            }
            data.extend(row.iter().map(|e| e.0));
        }
        Ok(ComplexMatrix::new(rows, cols, data).expect("shape checked"))
    }

    fn dims(&self, field: &str, d: usize) -> Result<(), ParseError> {
        if d == 0 {
            return Err(self.field_error(field, "dimension must be at least 1"));
        }
        Ok(())
    }
}

/// Parsed contents of a map-valued field: either Kraus operators or a Choi
/// matrix.
pub enum MapData {
    Kraus(Vec<ComplexMatrix>),
    Choi(ComplexMatrix),
}

impl Source<'_> {
    fn map_data(
        &self,
        field: &str,
        rep: Representation,
        value: &serde_json::Value,
        d_in: usize,
        d_out: usize,
    ) -> Result<MapData, ParseError> {
        match rep {
            Representation::Choi => {
                let n = d_in * d_out;
                Ok(MapData::Choi(self.matrix(field, value, n, n)?))
            }
            Representation::Kraus => {
                let list = value
                    .as_array()
                    .ok_or_else(|| self.field_error(field, "expected a list of Kraus operators"))?;
                if list.is_empty() {
                    return Err(self.field_error(field, "expected at least one Kraus operator"));
                }
                list.iter()
                    .enumerate()
                    .map(|(k, v)| self.matrix(&format!("{field}[{k}]"), v, d_out, d_in))
                    .collect::<Result<_, _>>()
                    .map(MapData::Kraus)
            }
        }
    }
}

/// A channel file checked for shape, before any physical invariant.
pub struct ParsedChannel {
    pub spec: ChannelSpecFile,
    pub data: MapData,
}

impl ParsedChannel {
    /// The Choi matrix, computed from Kraus operators when necessary.
    pub fn choi(&self) -> ComplexMatrix {
        match &self.data {
            MapData::Choi(c) => c.clone(),
            MapData::Kraus(ops) => evosym::operations::choi_of_kraus_ops(self.spec.d_in, self.spec.d_out, ops),
        }
    }
}

pub fn parse_channel(path: &str, text: &str) -> Result<ParsedChannel, ParseError> {
    let src = Source { path, text };
    let spec: ChannelSpecFile = src.parse()?;
    src.check_version(&spec.format_version)?;
    src.dims("d_in", spec.d_in)?;
    src.dims("d_out", spec.d_out)?;
    let data = src.map_data("data", spec.representation, &spec.data, spec.d_in, spec.d_out)?;
    Ok(ParsedChannel { spec, data })
}

pub fn parse_supermap(path: &str, text: &str) -> Result<(SuperMapSpecFile, ComplexMatrix), ParseError> {
    let src = Source { path, text };
    let spec: SuperMapSpecFile = src.parse()?;
    src.check_version(&spec.format_version)?;
    for (field, d) in [("in_dims", spec.in_dims), ("out_dims", spec.out_dims)] {
        if d.contains(&0) {
            return Err(src.field_error(field, "dimensions must be at least 1"));
        }
    }
    let n_in = spec.in_dims[0] * spec.in_dims[1];
    let n_out = spec.out_dims[0] * spec.out_dims[1];
    let m = src.matrix("data", &spec.data, n_out * n_out, n_in * n_in)?;
    Ok((spec, m))
}

pub fn parse_instrument(path: &str, text: &str) -> Result<(InstrumentSpecFile, Vec<ComplexMatrix>), ParseError> {
    let src = Source { path, text };
    let spec: InstrumentSpecFile = src.parse()?;
    src.check_version(&spec.format_version)?;
    src.dims("d_in", spec.d_in)?;
    src.dims("d_out", spec.d_out)?;
    if spec.branches.is_empty() {
        return Err(src.field_error("branches", "expected at least one branch"));
    }
    let chois = spec
        .branches
        .iter()
        .enumerate()
        .map(|(n, b)| {
            let field = format!("branches[{n}].data");
            Ok(match src.map_data(&field, b.representation, &b.data, spec.d_in, spec.d_out)? {
                MapData::Choi(c) => c,
                MapData::Kraus(ops) => evosym::operations::choi_of_kraus_ops(spec.d_in, spec.d_out, &ops),
            })
        })
        .collect::<Result<_, ParseError>>()?;
    Ok((spec, chois))
}

pub fn parse_state(path: &str, text: &str) -> Result<(StateSpecFile, ComplexMatrix), ParseError> {
    let src = Source { path, text };
    let spec: StateSpecFile = src.parse()?;
    src.check_version(&spec.format_version)?;
    src.dims("dim", spec.dim)?;
    let m = src.matrix("data", &spec.data, spec.dim, spec.dim)?;
    Ok((spec, m))
}

pub fn read_file(path: &str) -> Result<String, ParseError> {
    std::fs::read_to_string(path).map_err(|e| ParseError::Io {
        path: path.to_string(),
        message: e.to_string(),
    })
}

fn to_value<T: Serialize>(x: &T) -> serde_json::Value {
    serde_json::to_value(x).expect("plain data serializes")
}

pub fn channel_file(
    name: &str,
    d_in: usize,
    d_out: usize,
    data: &MapData,
    metadata: BTreeMap<String, serde_json::Value>,
) -> ChannelSpecFile {
    let (representation, data) = match data {
        MapData::Choi(c) => (Representation::Choi, to_value(&raw_matrix(c))),
        MapData::Kraus(ops) => (
            Representation::Kraus,
            to_value(&ops.iter().map(raw_matrix).collect::<Vec<_>>()),
        ),
    };
    ChannelSpecFile {
        format_version: FORMAT_VERSION.to_string(),
        name: name.to_string(),
        d_in,
        d_out,
        representation,
        data,
        metadata,
    }
}

pub fn supermap_file(name: &str, in_dims: (usize, usize), out_dims: (usize, usize), op: &ComplexMatrix) -> SuperMapSpecFile {
    SuperMapSpecFile {
        format_version: FORMAT_VERSION.to_string(),
        name: name.to_string(),
        in_dims: [in_dims.0, in_dims.1],
        out_dims: [out_dims.0, out_dims.1],
        data: to_value(&raw_matrix(op)),
    }
}

pub fn instrument_file(name: &str, d_in: usize, d_out: usize, branches: &[(String, ComplexMatrix)]) -> InstrumentSpecFile {
    InstrumentSpecFile {
        format_version: FORMAT_VERSION.to_string(),
        name: name.to_string(),
        d_in,
        d_out,
        branches: branches
            .iter()
            .map(|(n, c)| BranchSpec {
                name: n.clone(),
                representation: Representation::Choi,
                data: to_value(&raw_matrix(c)),
            })
            .collect(),
    }
}

pub fn state_file(name: &str, rho: &ComplexMatrix) -> StateSpecFile {
    StateSpecFile {
        format_version: FORMAT_VERSION.to_string(),
        name: name.to_string(),
        dim: rho.rows(),
        data: to_value(&raw_matrix(rho)),
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty<T: Serialize>(x: &T) -> String {
    let mut s = serde_json::to_string_pretty(x).expect("plain data serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHOI_2X2: &str = r#"{
  "format_version": "1",
  "name": "identity",
  "d_in": 1,
  "d_out": 2,
  "representation": "choi",
  "data": [[["1", "0"], [0, 0]], [[0, 0], [0.0, "0"]]]
}"#;

    #[test]
    fn parses_mixed_number_forms() {
        let p = parse_channel("x.json", CHOI_2X2).unwrap();
        let c = p.choi();
        assert_eq!(c[(0, 0)], C64::new(1.0, 0.0));
        assert_eq!(c.frobenius_norm(), 1.0);
    }

    #[test]
    fn shape_errors_name_field_and_line() {
        let bad = CHOI_2X2.replace("\"d_in\": 1", "\"d_in\": 2");
        match parse_channel("x.json", &bad) {
            Err(ParseError::Field { field, line, .. }) => {
                assert_eq!(field, "data");
                assert_eq!(line, Some(7));
            }
            other => panic!("unexpected {:?}", other.err()),
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        let bad = CHOI_2X2.replace("[\"1\", \"0\"]", "[\"one\", \"0\"]");
        match parse_channel("x.json", &bad) {
            Err(ParseError::Field { field, .. }) => assert_eq!(field, "data"),
            other => panic!("unexpected {:?}", other.err()),
        }
        let broken = CHOI_2X2.replace("\"d_out\": 2,", "\"d_out\": 2");
        assert!(matches!(
            parse_channel("x.json", &broken),
            Err(ParseError::Syntax { line: 6, .. })
        ));
    }

    #[test]
    fn entries_round_trip_bit_for_bit() {
        let x = C64::new(0.1 + 0.2, -1.0 / 3.0);
        let s = serde_json::to_string(&Entry(x)).unwrap();
        let back: Entry = serde_json::from_str(&s).unwrap();
        assert_eq!(back.0, x);
        assert_eq!(serde_json::to_string(&back).unwrap(), s);
    }
}
