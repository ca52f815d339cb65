//! Line-delimited trace format: one iteration per line,
//! `step,data_index,loss,grad_norm,noise_norm,w_1,...,w_d`, floats printed
//! in shortest round-trip form. No header.

use std::io::{self, Write};

use anyhow::{bail, Context, Result};
use prgd_core::optimizer::RunTrace;

pub fn write_trace<W: Write>(mut w: W, trace: &RunTrace) -> io::Result<()> {
    for (i, r) in trace.records().iter().enumerate() {
        write!(
            w,
            "{},{},{},{},{}",
            r.step, r.data_index, r.loss, r.grad_norm, r.noise_norm
        )?;
        for x in trace.iterate(i) {
            write!(w, ",{x}")?;
        }
        writeln!(w)?;
    }
    w.flush()
}

/// One parsed trace line.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceLine {
    pub step: usize,
    pub data_index: usize,
    pub loss: f64,
    pub grad_norm: f64,
    pub noise_norm: f64,
    pub iterate: Vec<f64>,
}

pub fn parse_line(line: &str) -> Result<TraceLine> {
    let f: Vec<&str> = line.split(',').collect();
    if f.len() < 6 {
        bail!("trace line has {} fields, expected at least 6", f.len());
    }
    let float = |s: &str| s.parse::<f64>().with_context(|| format!("bad number {s:?}"));
    Ok(TraceLine {
        step: f[0].parse().context("bad step")?,
        data_index: f[1].parse().context("bad data index")?,
        loss: float(f[2])?,
        grad_norm: float(f[3])?,
        noise_norm: float(f[4])?,
        iterate: f[5..].iter().map(|s| float(s)).collect::<Result<_>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use prgd_core::optimizer::{prgd_run, synthetic_dataset, LossKind, RunConfig};

    #[test]
    fn lines_round_trip() {
        let data = synthetic_dataset(LossKind::LeastSquares, 8, 3, 0.2, 1).unwrap();
        let model = LossKind::LeastSquares.model(3).unwrap();
        let cfg = RunConfig { step_size: 0.05, steps: 20, noise_radius: 0.5, clip_norm: None, seed: 4 };
        let trace = prgd_run(&data, model.as_ref(), &cfg, &[0.1, 0.2, 0.3]).unwrap();
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 20);
        for (i, line) in text.lines().enumerate() {
            let parsed = parse_line(line).unwrap();
            let r = trace.records()[i];
            assert_eq!(parsed.step, r.step);
            assert_eq!(parsed.data_index, r.data_index);
            assert_eq!(parsed.loss, r.loss);
            assert_eq!(parsed.grad_norm, r.grad_norm);
            assert_eq!(parsed.noise_norm, r.noise_norm);
            assert_eq!(parsed.iterate, trace.iterate(i));
        }
        assert!(parse_line("1,2,3").is_err());
    }
}
