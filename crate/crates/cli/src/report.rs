//! Report envelope and human-readable rendering.

use std::fmt::Write as _;

use genprob::battery::{BatteryReport, Replay};
use genprob::prelude::*;
use genprob::simulator::SimulationReport;
use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Report<T> {
    pub command: Vec<String>,
    pub input_digest: Option<String>,
    pub results: T,
    pub tolerances: Tolerances,
    pub version: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub label: String,
    pub value: f64,
}

pub fn rows(d: &LabeledDistribution) -> Vec<Row> {
    d.entries().iter().map(|(l, v)| Row { label: l.to_string(), value: *v }).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct PosteriorRow {
    pub label: String,
    pub prior: f64,
    pub posterior: f64,
    pub likelihood: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictResults {
    pub probabilities: Vec<Row>,
    pub denominator: f64,
    pub standard: bool,
    pub k: Option<f64>,
    /// Present when the file gives an ensemble of more than one preparation.
    pub posterior: Option<Vec<PosteriorRow>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RetrodictResults {
    pub observed: String,
    pub retrodict: Vec<Row>,
    pub via_duality: Vec<Row>,
    pub max_discrepancy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulationStatus {
    Consistent,
    Inconsistent,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateResults {
    pub status: SimulationStatus,
    pub sigmas: f64,
    pub seed: u64,
    /// Labels of the complete POVM actually sampled.
    pub full_povm: Vec<String>,
    pub recorded: Vec<String>,
    pub simulation: SimulationReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyResults {
    pub all_passed: bool,
    pub battery: BatteryReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplayResults {
    pub replay: Replay,
    pub violation: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// 12 significant digits; scientific notation outside 1e-5..1e12.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    // exponent after rounding, so 0.99999999999999 becomes 1.00000000000
    let exp: i32 = sci.rsplit_once('e').and_then(|(_, e)| e.parse().ok()).unwrap_or(0);
    if (-5..12).contains(&exp) {
        let prec = (11 - exp) as usize;
        format!("{x:.prec$}")
    } else {
        sci
    }
}

fn header<T>(out: &mut String, r: &Report<T>) {
    let _ = writeln!(out, "genprob {}: {}", r.version, r.command.join(" "));
    if let Some(d) = &r.input_digest {
        let _ = writeln!(out, "input {d}");
    }
}

fn footer<T>(out: &mut String, r: &Report<T>) {
    let t = r.tolerances;
    let _ = writeln!(
        out,
        "tolerances: herm={:e} psd={:e} trace={:e} den={:e}",
        t.hermitian, t.positive, t.trace, t.denominator
    );
}

fn table(out: &mut String, title: &str, rows: &[Row]) {
    let _ = writeln!(out, "{title}");
    let width = rows.iter().map(|r| r.label.chars().count()).max().unwrap_or(0).max(5);
    for r in rows {
        let _ = writeln!(out, "  {:<width$}  {}", r.label, sig12(r.value));
    }
}

pub trait Human {
    fn render(&self, out: &mut String);
}

impl<T: Human> Report<T> {
    pub fn human(&self) -> String {
        let mut out = String::new();
        header(&mut out, self);
        self.results.render(&mut out);
        footer(&mut out, self);
        out
    }
}

impl Human for PredictResults {
    fn render(&self, out: &mut String) {
        table(out, "p(m | x)", &self.probabilities);
        let _ = writeln!(out, "Tr(X rho) = {}", sig12(self.denominator));
        match self.k {
            Some(k) => {
                let _ = writeln!(out, "standard: yes, X = K I with K = {}", sig12(k));
            }
            None => {
                let _ = writeln!(out, "standard: no");
            }
        }
        if let Some(post) = &self.posterior {
            let _ = writeln!(out, "P(s | x)");
            let width = post.iter().map(|r| r.label.chars().count()).max().unwrap_or(0).max(5);
            let _ = writeln!(out, "  {:<width$}  {:<18}  {:<18}  likelihood", "label", "prior", "posterior");
            for r in post {
                let _ = writeln!(
                    out,
                    "  {:<width$}  {:<18}  {:<18}  {}",
                    r.label,
                    sig12(r.prior),
                    sig12(r.posterior),
                    sig12(r.likelihood)
                );
            }
        }
    }
}

impl Human for RetrodictResults {
    fn render(&self, out: &mut String) {
        table(out, &format!("P(s | {}) direct", self.observed), &self.retrodict);
        table(out, &format!("P(s | {}) via dual procedure", self.observed), &self.via_duality);
        let _ = writeln!(out, "max discrepancy {:e}", self.max_discrepancy);
    }
}

impl Human for SimulateResults {
    fn render(&self, out: &mut String) {
        let s = &self.simulation;
        let _ = writeln!(out, "samples {}  accepted {}  seed {}", s.samples, s.accepted_count, self.seed);
        let _ = writeln!(out, "full POVM: {}", self.full_povm.join(", "));
        let _ = writeln!(out, "recorded: {}", self.recorded.join(", "));
        if s.inconclusive {
            let _ = writeln!(out, "status: inconclusive (no trial was accepted)");
            return;
        }
        let width = s.analytic_comparison.iter().map(|c| c.quantity.chars().count()).max().unwrap_or(0).max(8);
        let _ = writeln!(
            out,
            "  {:<width$}  {:<16}  {:<16}  {:<12}  {:<12}  z",
            "quantity", "analytic", "empirical", "gap", "stderr"
        );
        for c in &s.analytic_comparison {
            let _ = writeln!(
                out,
                "  {:<width$}  {:<16}  {:<16}  {:<12.4e}  {:<12.4e}  {:.2}",
                c.quantity,
                sig12(c.analytic),
                sig12(c.empirical),
                c.gap,
                c.stderr,
                c.z
            );
        }
        let verdict = match self.status {
            SimulationStatus::Consistent => "consistent",
            SimulationStatus::Inconsistent => "INCONSISTENT",
            SimulationStatus::Inconclusive => "inconclusive",
        };
        let _ = writeln!(out, "status: {verdict} at {} sigma", self.sigmas);
    }
}

impl Human for VerifyResults {
    fn render(&self, out: &mut String) {
        let b = &self.battery;
        let dims: Vec<String> = b.dims.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "seed {}  dims {}", b.seed, dims.join(","));
        for c in &b.checks {
            let mark = if c.passed { "pass" } else { "FAIL" };
            let _ = writeln!(
                out,
                "  [{mark}] d={:<2} {:<20} max violation {:<10.3e} threshold {:.0e}",
                c.dim,
                c.property.name(),
                c.max_violation,
                c.threshold
            );
            if let Some(e) = &c.error {
                let _ = writeln!(out, "         error: {e}");
            }
            if let Some(r) = &c.replay {
                let _ = writeln!(out, "         replay: {}", serde_json::to_string(r).unwrap_or_default());
            }
        }
        let _ = writeln!(out, "{}", if self.all_passed { "all properties passed" } else { "property failures" });
    }
}

impl Human for ReplayResults {
    fn render(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "{} d={} trial {}: violation {:e}, threshold {:e}: {}",
            self.replay.property.name(),
            self.replay.dim,
            self.replay.trial,
            self.violation,
            self.threshold,
            if self.passed { "pass" } else { "FAIL" }
        );
    }
}

#[cfg(test)]
mod tests {
    use super::sig12;

    #[test]
    fn twelve_digits() {
        assert_eq!(sig12(2.0 / 3.0), "0.666666666667");
        assert_eq!(sig12(1.0), "1.00000000000");
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(1.0 / 3.0 * 1e-7), "3.33333333333e-8");
        assert_eq!(sig12(123.456), "123.456000000");
        assert_eq!(sig12(1.0 - 2e-16), "1.00000000000");
    }
}
