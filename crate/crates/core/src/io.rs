//! Matrix file formats.
//!
//! JSON: `{"n": 3, "entries": [[re, im], ...]}` with entries row-major.
//! Text: first line `n`, then `n` lines of `n` whitespace-separated `re,im` pairs.
//!
//! Every float is written with 17 significant digits, which round-trips any
//! `f64` exactly.

use std::io;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::ser::{CompactFormatter, Formatter};

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;

#[derive(Serialize, Deserialize)]
struct MatrixDoc {
    n: usize,
    entries: Vec<[f64; 2]>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixDoc {
            n: self.n(),
            entries: self.entries().iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = MatrixDoc::deserialize(deserializer)?;
        let data = doc.entries.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        ComplexMatrix::from_entries(doc.n, data).map_err(serde::de::Error::custom)
    }
}

/// Compact JSON formatter that writes floats in `{:.16e}` form.
#[derive(Default)]
pub struct SigDigitsFormatter(CompactFormatter);

impl Formatter for SigDigitsFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// Serializes any payload with the crate's float convention.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigDigitsFormatter::default());
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn from_json<T: DeserializeOwned>(s: &str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))
}

pub fn matrix_to_text(m: &ComplexMatrix) -> String {
    let mut out = format!("{}\n", m.n());
    for i in 0..m.n() {
        let row: Vec<String> = m
            .row(i)
            .iter()
            .map(|z| format!("{:.16e},{:.16e}", z.re, z.im))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn matrix_from_text(s: &str) -> Result<ComplexMatrix> {
    let mut lines = s.lines().map(str::trim).filter(|l| !l.is_empty());
    let n: usize = lines
        .next()
        .ok_or_else(|| Error::Format("empty matrix text".into()))?
        .parse()
        .map_err(|e| Error::Format(format!("bad dimension line: {e}")))?;
    let mut data = Vec::with_capacity(n * n);
    for (i, line) in lines.enumerate() {
        for pair in line.split_whitespace() {
            let (re, im) = pair
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("row {i}: expected re,im but found {pair:?}")))?;
            let parse = |t: &str| {
                t.parse::<f64>()
                    .map_err(|e| Error::Format(format!("row {i}: {e}")))
            };
            data.push(Complex64::new(parse(re)?, parse(im)?));
        }
    }
    ComplexMatrix::from_entries(n, data)
}

/// Accepts either format; JSON is recognized by a leading `{`.
pub fn parse_matrix(s: &str) -> Result<ComplexMatrix> {
    if s.trim_start().starts_with('{') {
        from_json(s)
    } else {
        matrix_from_text(s)
    }
}
