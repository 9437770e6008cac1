use std::io::Write;

use remote_rdf::oracle::DiscrepancyRow;
use remote_rdf::prior_channel_discrepancy;
use serde::Serialize;

use crate::output::{num, write_json, Format};
use crate::{CliError, Status};

pub const HEADER: [&str; 7] = [
    "delta",
    "prior_noise_variance",
    "prior_z_variance",
    "wyner_gain",
    "wyner_noise_variance",
    "wyner_z_variance",
    "divergent",
];

#[derive(Debug, Serialize)]
struct Row {
    delta: f64,
    prior_noise_variance: Option<f64>,
    prior_z_variance: Option<f64>,
    wyner_gain: f64,
    wyner_noise_variance: f64,
    wyner_z_variance: f64,
    divergent: bool,
}

impl From<&DiscrepancyRow> for Row {
    fn from(r: &DiscrepancyRow) -> Self {
        let finite = |x: f64| x.is_finite().then_some(x);
        Row {
            delta: r.delta,
            prior_noise_variance: finite(r.prior_noise_variance),
            prior_z_variance: finite(r.prior_z_variance),
            wyner_gain: r.wyner_gain,
            wyner_noise_variance: r.wyner_noise_variance,
            wyner_z_variance: r.wyner_z_variance,
            divergent: r.divergent,
        }
    }
}

pub fn run(q: f64, grid: &[f64], format: Format, out: &mut dyn Write) -> Result<Status, CliError> {
    if !(q.is_finite() && q > 0.0) {
        return Err(CliError::new(format!("--q must be positive, got {q}")));
    }
    if grid.is_empty() {
        return Err(CliError::new("empty distortion grid"));
    }
    if let Some(d) = grid.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        return Err(CliError::new(format!(
            "distortions must be positive, got {d}"
        )));
    }
    let table = prior_channel_discrepancy(q, grid);
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(HEADER)?;
            for r in &table {
                w.write_record([
                    num(r.delta),
                    num(r.prior_noise_variance),
                    num(r.prior_z_variance),
                    num(r.wyner_gain),
                    num(r.wyner_noise_variance),
                    num(r.wyner_z_variance),
                    r.divergent.to_string(),
                ])?;
            }
            w.flush()?;
        }
        Format::Json => {
            let rows: Vec<Row> = table.iter().map(Row::from).collect();
            write_json(&rows, out)?;
        }
    }
    Ok(Status::Ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_near_and_at_q() {
        let mut buf = Vec::new();
        run(1.0, &[0.99, 1.0], Format::Csv, &mut buf).unwrap();
        let mut reader = csv::Reader::from_reader(buf.as_slice());
        let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
        let prior: f64 = rows[0][1].parse().unwrap();
        assert!((prior - 99.0).abs() < 1e-9);
        assert!(rows[0][5].parse::<f64>().unwrap() < 0.02);
        assert_eq!(rows[1][1].parse::<f64>().unwrap(), f64::INFINITY);
        assert_eq!(rows[1][5].parse::<f64>().unwrap(), 0.0);
        assert_eq!(&rows[1][6], "true");
    }

    #[test]
    fn json_uses_null_for_unbounded() {
        let mut buf = Vec::new();
        run(2.0, &[2.0], Format::Json, &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert!(v[0]["prior_noise_variance"].is_null());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(run(0.0, &[0.5], Format::Csv, &mut Vec::new()).is_err());
        assert!(run(1.0, &[0.0], Format::Csv, &mut Vec::new()).is_err());
        assert!(run(1.0, &[], Format::Csv, &mut Vec::new()).is_err());
    }
}
