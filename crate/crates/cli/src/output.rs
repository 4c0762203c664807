//! Report serialization: JSON with 17 significant digits per float, and
//! RFC-4180 CSV with LF line endings.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

/// Compact JSON, except that every float is written in scientific notation
/// with 17 significant digits so reruns diff cleanly.
struct FixedDigits;

impl Formatter for FixedDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn float(value: f64) -> String {
    format!("{value:.16e}")
}

pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, FixedDigits);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(buf)
}

pub fn to_csv(header: &[&str], rows: &[Vec<String>]) -> csv::Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(float(0.1), "1.0000000000000001e-1");
        assert_eq!(float(-2.0), "-2.0000000000000000e0");
        let v: serde_json::Value = serde_json::from_slice(&to_json(&vec![0.1, 1e300]).unwrap()).unwrap();
        assert_eq!(v[0].as_f64(), Some(0.1));
        assert_eq!(v[1].as_f64(), Some(1e300));
    }

    #[test]
    fn non_finite_floats_become_null() {
        assert_eq!(to_json(&f64::INFINITY).unwrap(), b"null\n");
    }

    #[test]
    fn csv_uses_lf() {
        let out = to_csv(&["a", "b"], &[vec!["1".into(), "x,y".into()]]).unwrap();
        assert_eq!(out, b"a,b\n1,\"x,y\"\n");
    }
}
