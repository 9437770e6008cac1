use std::io::Write;

use clap::ValueEnum;
use nalgebra::DMatrix;
use remote_rdf::nats_to_bits;
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Unit used for rates in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Units {
    bits: bool,
}

impl Units {
    pub fn new(bits: bool) -> Self {
        Units { bits }
    }

    pub fn name(self) -> &'static str {
        if self.bits {
            "bits"
        } else {
            "nats"
        }
    }

    pub fn rate(self, nats: f64) -> f64 {
        if self.bits {
            nats_to_bits(nats)
        } else {
            nats
        }
    }
}

/// 17 significant digits; parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn write_json<T: Serialize>(value: &T, out: &mut dyn Write) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Long-form CSV with header `quantity,row,col,value`.
pub struct LongCsv<'a> {
    writer: csv::Writer<&'a mut dyn Write>,
}

impl<'a> LongCsv<'a> {
    pub fn new(out: &'a mut dyn Write) -> Result<Self, CliError> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["quantity", "row", "col", "value"])?;
        Ok(LongCsv { writer })
    }

    pub fn scalar(&mut self, name: &str, value: f64) -> Result<(), CliError> {
        self.writer.write_record([name, "", "", &num(value)])?;
        Ok(())
    }

    pub fn text(&mut self, name: &str, value: &str) -> Result<(), CliError> {
        self.writer.write_record([name, "", "", value])?;
        Ok(())
    }

    pub fn matrix(&mut self, name: &str, m: &DMatrix<f64>) -> Result<(), CliError> {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                self.writer.write_record([
                    name,
                    &i.to_string(),
                    &j.to_string(),
                    &num(m[(i, j)]),
                ])?;
            }
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.writer.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [
            0.1,
            1.0 / 3.0,
            std::f64::consts::PI * 1e-300,
            -2.5e17,
            0.0,
            f64::MIN_POSITIVE,
            f64::MAX,
            f64::INFINITY,
        ] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x, "{}", num(x));
        }
        assert!(num(f64::NAN).parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn units() {
        assert_eq!(Units::new(false).rate(2.0), 2.0);
        assert!((Units::new(true).rate(std::f64::consts::LN_2) - 1.0).abs() < 1e-15);
        assert_eq!(Units::new(true).name(), "bits");
    }

    #[test]
    fn long_csv_layout() {
        let mut buf = Vec::new();
        let mut csv = LongCsv::new(&mut buf).unwrap();
        csv.scalar("delta", 0.375).unwrap();
        csv.matrix("h", &DMatrix::from_row_slice(1, 2, &[1.0, 2.0]))
            .unwrap();
        csv.finish().unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "quantity,row,col,value");
        assert_eq!(lines[1], "delta,,,3.7500000000000000e-1");
        assert_eq!(lines[3], "h,0,1,2.0000000000000000e0");
    }
}
