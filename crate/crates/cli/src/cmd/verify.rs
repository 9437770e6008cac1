use std::collections::BTreeMap;
use std::io::Write;

use remote_rdf::{simulate_channel, verify_structure};
use serde::Serialize;

use super::solve;
use crate::output::{write_json, Format, LongCsv, Units};
use crate::spec_file::LoadedSpec;
use crate::{CliError, Status};

/// Monte Carlo acceptance threshold in standard errors.
pub const Z_THRESHOLD: f64 = 4.0;

#[derive(Debug, Clone)]
pub struct Options {
    pub delta: f64,
    pub samples: usize,
    pub seed: u64,
    pub perturb_gain: Option<f64>,
}

#[derive(Debug, Serialize)]
struct VerifyReport<'a> {
    label: Option<&'a str>,
    delta: f64,
    samples: usize,
    seed: u64,
    unit: &'static str,
    rate: f64,
    expected_distortion: f64,
    empirical_distortion: f64,
    standard_error: f64,
    z_score: f64,
    z_threshold: f64,
    residuals: BTreeMap<&'static str, f64>,
    structural_tolerance: f64,
    structure_pass: bool,
    simulation_pass: bool,
    pass: bool,
}

pub fn run(
    loaded: &LoadedSpec,
    opts: &Options,
    units: Units,
    format: Format,
    out: &mut dyn Write,
) -> Result<Status, CliError> {
    let spec = &loaded.spec;
    let solved = solve(spec, opts.delta)?;
    let mut ch = solved.channel;
    if let Some(p) = opts.perturb_gain {
        ch.h[(0, 0)] += p;
    }
    let structure = verify_structure(spec, &ch);
    let sim = simulate_channel(spec, &ch, opts.samples, opts.seed)?;
    let expected = ch.sigma_delta.trace();
    let z = sim.z_score(expected);
    let structure_pass = structure.all_pass();
    let simulation_pass = z <= Z_THRESHOLD;
    let pass = structure_pass && simulation_pass;

    let report = VerifyReport {
        label: loaded.label.as_deref(),
        delta: opts.delta,
        samples: sim.n_samples,
        seed: opts.seed,
        unit: units.name(),
        rate: units.rate(solved.solution.rate),
        expected_distortion: expected,
        empirical_distortion: sim.empirical_distortion,
        standard_error: sim.standard_error,
        z_score: z,
        z_threshold: Z_THRESHOLD,
        residuals: structure.residuals.clone(),
        structural_tolerance: structure.tolerance,
        structure_pass,
        simulation_pass,
        pass,
    };
    match format {
        Format::Json => write_json(&report, out)?,
        Format::Csv => {
            let mut csv = LongCsv::new(out)?;
            csv.scalar("delta", report.delta)?;
            csv.text("samples", &report.samples.to_string())?;
            csv.text("seed", &report.seed.to_string())?;
            csv.text("unit", report.unit)?;
            csv.scalar("rate", report.rate)?;
            csv.scalar("expected_distortion", expected)?;
            csv.scalar("empirical_distortion", report.empirical_distortion)?;
            csv.scalar("standard_error", report.standard_error)?;
            csv.scalar("z_score", z)?;
            for (name, r) in &report.residuals {
                csv.scalar(&format!("residual.{name}"), *r)?;
            }
            csv.text("structure_pass", &structure_pass.to_string())?;
            csv.text("simulation_pass", &simulation_pass.to_string())?;
            csv.text("pass", &pass.to_string())?;
            csv.finish()?;
        }
    }
    Ok(if pass { Status::Ok } else { Status::Failed })
}
