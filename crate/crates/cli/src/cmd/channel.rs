use std::collections::BTreeMap;
use std::io::Write;

use remote_rdf::{decoder_only_form, rate_of_channel, verify_structure};
use serde::Serialize;

use super::solve;
use crate::output::{rows, write_json, Format, LongCsv, Units};
use crate::spec_file::LoadedSpec;
use crate::{CliError, Status};

#[derive(Debug, Serialize)]
struct DecoderSplit {
    /// Z = H·S + W
    h: Vec<Vec<f64>>,
    q_w: Vec<Vec<f64>>,
    /// X̂ = G·Y + Z
    g: Vec<Vec<f64>>,
    rate: f64,
}

#[derive(Debug, Serialize)]
struct ChannelReport<'a> {
    label: Option<&'a str>,
    delta: f64,
    lower: f64,
    upper: f64,
    unit: &'static str,
    rate: f64,
    rate_from_reproduction: f64,
    waterfill_rate: f64,
    xi: f64,
    active_count: usize,
    zero_rate: bool,
    h: Vec<Vec<f64>>,
    g: Vec<Vec<f64>>,
    q_w: Vec<Vec<f64>>,
    sigma_delta: Vec<Vec<f64>>,
    q_xhat_given_y: Vec<Vec<f64>>,
    decoder_only: DecoderSplit,
    residuals: BTreeMap<&'static str, f64>,
    structural_tolerance: f64,
    structure_pass: bool,
}

pub fn run(
    loaded: &LoadedSpec,
    delta: f64,
    units: Units,
    format: Format,
    out: &mut dyn Write,
) -> Result<Status, CliError> {
    let spec = &loaded.spec;
    let solved = solve(spec, delta)?;
    let ch = &solved.channel;
    let sol = &solved.solution;
    let rates = rate_of_channel(spec, ch)?;
    let split = decoder_only_form(ch);
    let split_rate = split.rate(spec)?;
    let report = verify_structure(spec, ch);

    match format {
        Format::Json => write_json(
            &ChannelReport {
                label: loaded.label.as_deref(),
                delta,
                lower: solved.lower,
                upper: solved.upper,
                unit: units.name(),
                rate: units.rate(rates.from_measurement),
                rate_from_reproduction: units.rate(rates.from_reproduction),
                waterfill_rate: units.rate(sol.rate),
                xi: sol.xi,
                active_count: sol.active_count,
                zero_rate: sol.zero_rate,
                h: rows(&ch.h),
                g: rows(&ch.g),
                q_w: rows(&ch.q_w),
                sigma_delta: rows(&ch.sigma_delta),
                q_xhat_given_y: rows(&ch.q_xhat_given_y),
                decoder_only: DecoderSplit {
                    h: rows(&split.h),
                    q_w: rows(&split.q_w),
                    g: rows(&split.g),
                    rate: units.rate(split_rate),
                },
                residuals: report.residuals.clone(),
                structural_tolerance: report.tolerance,
                structure_pass: report.all_pass(),
            },
            out,
        )?,
        Format::Csv => {
            let mut csv = LongCsv::new(out)?;
            csv.scalar("delta", delta)?;
            csv.scalar("lower", solved.lower)?;
            csv.scalar("upper", solved.upper)?;
            csv.text("unit", units.name())?;
            csv.scalar("rate", units.rate(rates.from_measurement))?;
            csv.scalar(
                "rate_from_reproduction",
                units.rate(rates.from_reproduction),
            )?;
            csv.scalar("waterfill_rate", units.rate(sol.rate))?;
            csv.scalar("xi", sol.xi)?;
            csv.scalar("active_count", sol.active_count as f64)?;
            csv.matrix("h", &ch.h)?;
            csv.matrix("g", &ch.g)?;
            csv.matrix("q_w", &ch.q_w)?;
            csv.matrix("sigma_delta", &ch.sigma_delta)?;
            csv.matrix("q_xhat_given_y", &ch.q_xhat_given_y)?;
            csv.matrix("decoder_only.h", &split.h)?;
            csv.matrix("decoder_only.q_w", &split.q_w)?;
            csv.matrix("decoder_only.g", &split.g)?;
            csv.scalar("decoder_only.rate", units.rate(split_rate))?;
            for (name, r) in &report.residuals {
                csv.scalar(&format!("residual.{name}"), *r)?;
            }
            csv.finish()?;
        }
    }
    Ok(Status::Ok)
}
