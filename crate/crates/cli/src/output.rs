use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serializer;
use serde_json::value::RawValue;

pub const SCHEMA_VERSION: u32 = 1;

/// Scientific notation with 17 significant digits; `nan`/`inf` spelled out.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Serializes an `f64` as a JSON number in [`fmt_f64`] form, `null` when not
/// finite.
pub fn ser_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        let raw = RawValue::from_string(fmt_f64(*x)).map_err(serde::ser::Error::custom)?;
        s.serialize_some(&raw)
    } else {
        s.serialize_none()
    }
}

pub fn ser_f64_vec<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    struct F(f64);
    impl serde::Serialize for F {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            ser_f64(&self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for &x in xs {
        seq.serialize_element(&F(x))?;
    }
    seq.end()
}

pub fn ser_opt_f64<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => ser_f64(v, s),
        None => s.serialize_none(),
    }
}

/// CSV text with a versioned schema line and a config comment.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(command: &str, config: &str, columns: &[&str]) -> Self {
        let mut buf = String::new();
        let _ = writeln!(buf, "# manhattan-walk {command} v{SCHEMA_VERSION}");
        let _ = writeln!(buf, "# config: {config}");
        let _ = writeln!(buf, "{}", columns.join(","));
        Csv { buf }
    }

    pub fn comment(&mut self, text: &str) {
        let _ = writeln!(self.buf, "# {text}");
    }

    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut first = true;
        for c in cells {
            if !first {
                self.buf.push(',');
            }
            first = false;
            self.buf.push_str(c.as_ref());
        }
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report values serialize");
    s.push('\n');
    s
}

pub fn emit(text: &str, out: Option<&Path>) -> io::Result<()> {
    match out {
        Some(p) => fs::write(p, text),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())?;
            lock.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(199.0), "1.9900000000000000e2");
        assert_eq!(fmt_f64(8.0 / 3.0), "2.6666666666666665e0");
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(fmt_f64(0.0), "0.0000000000000000e0");
    }

    #[test]
    fn json_floats_use_fixed_form() {
        #[derive(serde::Serialize)]
        struct T {
            #[serde(serialize_with = "ser_f64")]
            x: f64,
            #[serde(serialize_with = "ser_f64")]
            y: f64,
        }
        let s = serde_json::to_string(&T { x: 0.5, y: f64::NAN }).unwrap();
        assert_eq!(s, r#"{"x":5.0000000000000000e-1,"y":null}"#);
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["x"].as_f64(), Some(0.5));
    }

    #[test]
    fn csv_layout() {
        let mut c = Csv::new("formula", "d=2", &["n", "msd"]);
        c.row(["0", "0"]);
        assert_eq!(c.finish(), "# manhattan-walk formula v1\n# config: d=2\nn,msd\n0,0\n");
    }
}
