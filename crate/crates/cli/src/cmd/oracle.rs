use std::io::Write;

use remote_rdf::{
    brute_force_rdf, conditional_stats, solve_waterfill, spectral_setup, OracleResolution,
};
use serde::Serialize;

use crate::output::{rows, write_json, Format, LongCsv, Units};
use crate::spec_file::LoadedSpec;
use crate::{CliError, Status};

#[derive(Debug, Serialize)]
struct OracleReport<'a> {
    label: Option<&'a str>,
    delta: f64,
    unit: &'static str,
    waterfill_rate: f64,
    oracle_rate: f64,
    gap: f64,
    tolerance: f64,
    pass: bool,
    eigen_points: usize,
    angle_points: usize,
    refine_rounds: usize,
    feasible_points: usize,
    oracle_sigma_delta: Vec<Vec<f64>>,
}

pub fn run(
    loaded: &LoadedSpec,
    delta: f64,
    eigen_points: usize,
    units: Units,
    format: Format,
    out: &mut dyn Write,
) -> Result<Status, CliError> {
    let spec = &loaded.spec;
    let resolution = OracleResolution::with_eigen_points(eigen_points);
    let oracle = brute_force_rdf(spec, delta, resolution)?;
    let setup = spectral_setup(&conditional_stats(spec)?)?;
    let waterfill = solve_waterfill(&setup, delta)?;
    let gap = (oracle.rate - waterfill.rate).abs();
    let tolerance = resolution.tolerance();
    let pass = gap <= tolerance;

    let report = OracleReport {
        label: loaded.label.as_deref(),
        delta,
        unit: units.name(),
        waterfill_rate: units.rate(waterfill.rate),
        oracle_rate: units.rate(oracle.rate),
        gap: units.rate(gap),
        tolerance: units.rate(tolerance),
        pass,
        eigen_points: resolution.eigen_points,
        angle_points: resolution.angle_points,
        refine_rounds: resolution.refine_rounds,
        feasible_points: oracle.feasible_points,
        oracle_sigma_delta: rows(&oracle.sigma_delta),
    };
    match format {
        Format::Json => write_json(&report, out)?,
        Format::Csv => {
            let mut csv = LongCsv::new(out)?;
            csv.scalar("delta", delta)?;
            csv.text("unit", report.unit)?;
            csv.scalar("waterfill_rate", report.waterfill_rate)?;
            csv.scalar("oracle_rate", report.oracle_rate)?;
            csv.scalar("gap", report.gap)?;
            csv.scalar("tolerance", report.tolerance)?;
            csv.text("feasible_points", &report.feasible_points.to_string())?;
            csv.matrix("oracle_sigma_delta", &oracle.sigma_delta)?;
            csv.text("pass", &pass.to_string())?;
            csv.finish()?;
        }
    }
    Ok(if pass { Status::Ok } else { Status::Failed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use remote_rdf::fixtures;

    fn report(loaded: &LoadedSpec, delta: f64, points: usize) -> (Status, serde_json::Value) {
        let mut buf = Vec::new();
        let status = run(
            loaded,
            delta,
            points,
            Units::new(false),
            Format::Json,
            &mut buf,
        )
        .unwrap();
        (status, serde_json::from_slice(&buf).unwrap())
    }

    #[test]
    fn scalar_and_diagonal_match() {
        let scalar = LoadedSpec {
            spec: fixtures::scalar_example(),
            label: None,
        };
        let (status, v) = report(&scalar, 0.375, 400);
        assert_eq!(status, Status::Ok);
        assert!(v["gap"].as_f64().unwrap() < 2e-3);

        let (status, v) = report(&scalar, 0.5, 400);
        assert_eq!(status, Status::Ok);
        assert_eq!(v["oracle_rate"].as_f64().unwrap(), 0.0);

        let diagonal = LoadedSpec {
            spec: fixtures::diagonal_example(),
            label: None,
        };
        let (status, v) = report(&diagonal, 0.6, 100);
        assert_eq!(status, Status::Ok);
        assert!(v["gap"].as_f64().unwrap() <= v["tolerance"].as_f64().unwrap());
    }

    #[test]
    fn three_dimensional_is_unsupported() {
        let q = nalgebra::DMatrix::identity(7, 7);
        let loaded = LoadedSpec {
            spec: remote_rdf::validate_spec(q, remote_rdf::Dims::new(3, 3, 1)).unwrap(),
            label: None,
        };
        let err = run(
            &loaded,
            0.5,
            50,
            Units::new(false),
            Format::Json,
            &mut Vec::new(),
        );
        assert!(err
            .unwrap_err()
            .message
            .starts_with("dimension_unsupported"));
    }
}
