//! Deterministic JSON and CSV emission.
//!
//! Every float is written as `{:.16e}`, i.e. 17 significant digits, which
//! round-trips any `f64`.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON whose floats carry 17 significant digits.
struct SigFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for SigFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, SigFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("report types serialize");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

/// Lowercase hex SHA-256.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Envelope shared by every subcommand.
#[derive(Debug, Serialize)]
pub struct Report<T> {
    pub subcommand: &'static str,
    pub version: &'static str,
    pub config_digest: String,
    pub seed: u64,
    pub warnings: Vec<String>,
    pub result: T,
}

/// CSV with a header row; numeric cells in [`fmt_f64`] form.
pub fn csv_table(header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row.iter().map(|x| fmt_f64(*x)))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv writes UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -1e-300] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        let json = to_json(&serde_json::json!({ "a": 0.75, "b": [1, 2] }));
        assert!(json.contains("\"a\": 7.5000000000000000e-1"));
        let back: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.75));
    }

    #[test]
    fn digest_is_sha256() {
        assert_eq!(
            digest(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn csv_has_header() {
        let t = csv_table(&["tau".into(), "x0".into()], [vec![0.0, 1.5]]);
        assert_eq!(t, "tau,x0\n0.0000000000000000e0,1.5000000000000000e0\n");
    }
}
