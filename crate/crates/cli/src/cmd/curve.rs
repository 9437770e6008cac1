use std::io::Write;

use remote_rdf::waterfill::CurvePoint;
use remote_rdf::{nats_to_bits, rdf_curve, Error};
use serde::Serialize;

use crate::output::{num, write_json, Format};
use crate::spec_file::LoadedSpec;
use crate::{CliError, Status};

pub const HEADER: [&str; 7] = [
    "delta",
    "rate_nats",
    "rate_bits",
    "xi",
    "active_count",
    "feasible",
    "error",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRecord {
    pub delta: f64,
    pub rate_nats: f64,
    pub rate_bits: f64,
    pub xi: f64,
    pub active_count: usize,
    pub feasible: bool,
    pub error: String,
}

impl CurveRecord {
    fn failed(delta: f64, error: &Error) -> Self {
        // Below the range the rate is unbounded; other failures carry no value.
        let rate = match error {
            Error::BelowRange { .. } => f64::INFINITY,
            _ => f64::NAN,
        };
        CurveRecord {
            delta,
            rate_nats: rate,
            rate_bits: rate,
            xi: f64::NAN,
            active_count: 0,
            feasible: false,
            error: error.code().to_string(),
        }
    }

    fn from_point(point: &CurvePoint) -> Self {
        match &point.outcome {
            Ok(s) => CurveRecord {
                delta: point.delta,
                rate_nats: s.rate,
                rate_bits: nats_to_bits(s.rate),
                xi: s.xi,
                active_count: s.active_count,
                feasible: true,
                error: String::new(),
            },
            Err(e) => CurveRecord::failed(point.delta, e),
        }
    }

    fn csv_fields(&self) -> [String; 7] {
        [
            num(self.delta),
            num(self.rate_nats),
            num(self.rate_bits),
            num(self.xi),
            self.active_count.to_string(),
            self.feasible.to_string(),
            self.error.clone(),
        ]
    }
}

#[derive(Debug, Serialize)]
struct CurveDocument<'a> {
    label: Option<&'a str>,
    lower: f64,
    upper: f64,
    points: &'a [CurveRecord],
}

/// Solve every grid point, returning records in input order.
pub fn records(
    loaded: &LoadedSpec,
    grid: &[f64],
) -> Result<(Vec<CurveRecord>, f64, f64), CliError> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid.into());
    }
    let mut order: Vec<usize> = (0..grid.len()).filter(|&i| grid[i].is_finite()).collect();
    order.sort_by(|&a, &b| grid[a].total_cmp(&grid[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| grid[i]).collect();

    let mut out: Vec<Option<CurveRecord>> = grid
        .iter()
        .map(|&d| (!d.is_finite()).then(|| CurveRecord::failed(d, &Error::NonFinite)))
        .collect();
    let (lower, upper) = if sorted.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let curve = rdf_curve(&loaded.spec, &sorted)?;
        for (point, &i) in curve.points.iter().zip(&order) {
            out[i] = Some(CurveRecord::from_point(point));
        }
        (curve.lower, curve.upper)
    };
    let records = out
        .into_iter()
        .map(|r| r.expect("every point filled"))
        .collect();
    Ok((records, lower, upper))
}

pub fn run(
    loaded: &LoadedSpec,
    grid: &[f64],
    format: Format,
    out: &mut dyn Write,
) -> Result<Status, CliError> {
    let (records, lower, upper) = records(loaded, grid)?;
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut *out);
            w.write_record(HEADER)?;
            for r in &records {
                w.write_record(r.csv_fields())?;
            }
            w.flush()?;
        }
        Format::Json => write_json(
            &CurveDocument {
                label: loaded.label.as_deref(),
                lower,
                upper,
                points: &records,
            },
            out,
        )?,
    }
    Ok(if records.iter().all(|r| r.feasible) {
        Status::Ok
    } else {
        Status::Partial
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use remote_rdf::fixtures;

    fn scalar() -> LoadedSpec {
        LoadedSpec {
            spec: fixtures::scalar_example(),
            label: None,
        }
    }

    #[test]
    fn records_follow_input_order() {
        let (recs, lower, upper) = records(&scalar(), &[0.5, 0.2, f64::NAN, 0.375]).unwrap();
        assert_eq!((lower, upper), (0.25, 0.5));
        let deltas: Vec<f64> = recs.iter().map(|r| r.delta).collect();
        assert_eq!(deltas[0], 0.5);
        assert_eq!(deltas[1], 0.2);
        assert!(deltas[2].is_nan());
        assert_eq!(deltas[3], 0.375);
        assert_eq!(recs[0].rate_nats, 0.0);
        assert_eq!(recs[1].error, "below_range");
        assert_eq!(recs[1].rate_nats, f64::INFINITY);
        assert_eq!(recs[2].error, "non_finite");
        assert!((recs[3].rate_nats - 0.5 * 2f64.ln()).abs() < 1e-12);
        assert!((recs[3].rate_bits - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exit_status_reflects_failures() {
        let mut sink = Vec::new();
        assert_eq!(
            run(&scalar(), &[0.3, 0.4], Format::Csv, &mut sink).unwrap(),
            Status::Ok
        );
        let mut sink = Vec::new();
        assert_eq!(
            run(&scalar(), &[0.1, 0.4], Format::Csv, &mut sink).unwrap(),
            Status::Partial
        );
        assert!(records(&scalar(), &[]).is_err());
    }
}
