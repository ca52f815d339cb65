//! `key = value` report rendering. The output parses as TOML.

use std::fmt::Write;

use prgd_core::accountant::DeltaReport;

#[derive(Debug, Default, Clone)]
pub struct KeyValue {
    out: String,
}

impl KeyValue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        // Debug keeps a decimal point on integral floats, so TOML reads a float.
        writeln!(self.out, "{key} = {value:?}").unwrap();
        self
    }

    pub fn int(&mut self, key: &str, value: u64) -> &mut Self {
        writeln!(self.out, "{key} = {value}").unwrap();
        self
    }

    pub fn flag(&mut self, key: &str, value: bool) -> &mut Self {
        writeln!(self.out, "{key} = {value}").unwrap();
        self
    }

    pub fn text(&mut self, key: &str, value: &str) -> &mut Self {
        writeln!(self.out, "{key} = {value:?}").unwrap();
        self
    }

    pub fn delta_report(&mut self, r: &DeltaReport) -> &mut Self {
        self.num("per_step_delta", r.per_step_delta)
            .num("amplified_delta", r.amplified_delta)
            .num("overall_delta", r.overall_delta)
            .flag("saturated", r.saturated)
            .num("sensitivity", r.delta_x)
            .text("sensitivity_source", r.source.label())
    }

    pub fn finish(&self) -> &str {
        &self.out
    }
}
