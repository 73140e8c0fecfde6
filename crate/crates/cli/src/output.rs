//! Result rows and their CSV / JSON serialisation.
//!
//! Non-finite numbers are written as the sentinels `inf`, `-inf` and `nan`
//! (JSON strings in JSON mode). A missing confidence interval is an empty
//! CSV field or JSON `null`.

use std::io::Write;

use serde::ser::{Serialize, SerializeStruct, Serializer};

use crate::config::Format;
use crate::CliError;

pub const HEADER: [&str; 7] = [
    "experiment",
    "series",
    "x_name",
    "x_value",
    "value",
    "ci95",
    "seed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub experiment: String,
    pub series: String,
    pub x_name: String,
    pub x_value: f64,
    pub value: f64,
    pub ci95: Option<f64>,
    pub seed: u64,
}

/// Shortest round-trip decimal for finite values, sentinels otherwise.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:?}")
    }
}

struct Number(f64);

impl Serialize for Number {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&format_number(self.0))
        }
    }
}

impl Serialize for Row {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Row", 7)?;
        st.serialize_field("experiment", &self.experiment)?;
        st.serialize_field("series", &self.series)?;
        st.serialize_field("x_name", &self.x_name)?;
        st.serialize_field("x_value", &Number(self.x_value))?;
        st.serialize_field("value", &Number(self.value))?;
        st.serialize_field("ci95", &self.ci95.map(Number))?;
        st.serialize_field("seed", &self.seed)?;
        st.end()
    }
}

pub fn write_rows<W: Write>(rows: &[Row], format: Format, out: W) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(HEADER)?;
            for r in rows {
                w.write_record([
                    r.experiment.clone(),
                    r.series.clone(),
                    r.x_name.clone(),
                    format_number(r.x_value),
                    format_number(r.value),
                    r.ci95.map(format_number).unwrap_or_default(),
                    r.seed.to_string(),
                ])?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, rows)?;
            out.write_all(b"\n")?;
            out.flush()?;
        }
    }
    Ok(())
}
