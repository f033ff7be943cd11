//! Correctness suites and complexity tables behind the `cgbench` binary.
//!
//! Every check produces [`ReportLine`]s; the tables are CSV strings. Slopes,
//! flop counts and byte counts are deterministic for a fixed seed, only the
//! millisecond columns depend on the machine.

mod scaling;
mod suites;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::attention::Block;
use crate::error::{Error, Result};
use crate::tensor_product::ChannelMode;

pub use scaling::{fit_loglog, run_memory, run_scaling_l, run_scaling_n, table_memory, ScalingTable};
pub use suites::{
    cg_structure_checks, cross_product_checks, equivariance_suite, fft_direct_checks, gradient_checks, oracle_suite,
    permutation_suite, sparse_dense_checks, sphere_product_checks,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    Equivariance,
    Oracle,
    ScalingN,
    ScalingL,
    Memory,
    Permutation,
    All,
}

impl Suite {
    pub const EACH: [Suite; 6] = [
        Suite::Equivariance,
        Suite::Oracle,
        Suite::Permutation,
        Suite::ScalingN,
        Suite::ScalingL,
        Suite::Memory,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Equivariance => "equivariance",
            Suite::Oracle => "oracle",
            Suite::ScalingN => "scaling-N",
            Suite::ScalingL => "scaling-L",
            Suite::Memory => "memory",
            Suite::Permutation => "permutation",
            Suite::All => "all",
        }
    }

    /// Whether the suite emits a CSV table.
    pub fn has_table(self) -> bool {
        matches!(self, Suite::ScalingN | Suite::ScalingL | Suite::Memory)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        [Suite::All]
            .into_iter()
            .chain(Suite::EACH)
            .find(|x| x.name().to_ascii_lowercase() == lower)
            .ok_or_else(|| Error::Parse(format!("unknown suite {s:?}")))
    }
}

/// Acceptance bound attached to a metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Threshold {
    /// Passes when `value < bound`.
    Below(f64),
    /// Passes when `value > min`.
    Above { min: f64 },
    /// Passes when `min ≤ value ≤ max`.
    Within { min: f64, max: f64 },
}

impl Threshold {
    pub fn check(self, value: f64) -> bool {
        match self {
            Threshold::Below(b) => value < b,
            Threshold::Above { min } => value > min,
            Threshold::Within { min, max } => (min..=max).contains(&value),
        }
    }
}

/// One line of the JSON-lines report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportLine {
    pub suite: String,
    pub case: String,
    pub metric: String,
    pub value: f64,
    pub threshold: Threshold,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ReportLine {
    pub fn new(suite: &str, case: impl Into<String>, metric: &str, value: f64, threshold: Threshold) -> Self {
        ReportLine {
            suite: suite.to_string(),
            case: case.into(),
            metric: metric.to_string(),
            value,
            threshold,
            pass: threshold.check(value),
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// One JSON object; non-finite values become `null`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report line serializes")
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub suite: Suite,
    pub n_list: Vec<usize>,
    pub l_list: Vec<u32>,
    pub mode: ChannelMode,
    pub heads: usize,
    pub seed: u64,
    /// Timed runs per cell; the median is reported after one discarded warmup.
    pub repetitions: usize,
    /// Run correctness cases concurrently.
    pub parallel: bool,
    /// Perturb the CG tables used by the suites (negative control).
    pub inject_fault: bool,
    /// Extra graph for the permutation suite, as `(n, row-major adjacency)`.
    pub graph: Option<(usize, Vec<f64>)>,
    /// Pre-built block added to the equivariance suite.
    pub block: Option<Block>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            suite: Suite::All,
            n_list: (8..=14).map(|e| 1usize << e).collect(),
            l_list: (2..=8).collect(),
            mode: ChannelMode::Full,
            heads: 1,
            seed: 7,
            repetitions: 5,
            parallel: false,
            inject_fault: false,
            graph: None,
            block: None,
        }
    }
}

/// Report lines plus any tables produced by one invocation.
#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub lines: Vec<ReportLine>,
    pub tables: Vec<(Suite, String)>,
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }
}

/// Runs the configured suite (or all of them).
pub fn run_suites(cfg: &BenchConfig) -> Result<RunOutput> {
    let selected: Vec<Suite> = match cfg.suite {
        Suite::All => Suite::EACH.to_vec(),
        s => vec![s],
    };
    let mut out = RunOutput::default();
    for suite in selected {
        match suite {
            Suite::Equivariance => out.lines.extend(equivariance_suite(cfg)?),
            Suite::Oracle => out.lines.extend(oracle_suite(cfg)?),
            Suite::Permutation => out.lines.extend(permutation_suite(cfg)?),
            Suite::ScalingN => {
                let t = run_scaling_n(cfg)?;
                out.lines.extend(t.lines);
                out.tables.push((suite, t.csv));
            }
            Suite::ScalingL => {
                let t = run_scaling_l(cfg)?;
                out.lines.extend(t.lines);
                out.tables.push((suite, t.csv));
            }
            Suite::Memory => {
                let t = run_memory(cfg)?;
                out.lines.extend(t.lines);
                out.tables.push((suite, t.csv));
            }
            Suite::All => unreachable!("expanded above"),
        }
    }
    Ok(out)
}

/// Parses `a,b,c` into numbers.
pub fn parse_list<T: FromStr>(text: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad list item {s:?}"))))
        .collect()
}

pub fn parse_mode(text: &str) -> Result<ChannelMode> {
    match text.to_ascii_lowercase().as_str() {
        "full" => Ok(ChannelMode::Full),
        "elementwise" | "element" => Ok(ChannelMode::Elementwise),
        _ => Err(Error::Parse(format!("unknown channel mode {text:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::EACH {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert_eq!("scaling-l".parse::<Suite>().unwrap(), Suite::ScalingL);
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn thresholds() {
        assert!(Threshold::Below(1.0).check(0.5));
        assert!(!Threshold::Below(1.0).check(1.0));
        assert!(Threshold::Above { min: 1.8 }.check(2.0));
        assert!(Threshold::Within { min: 5.5, max: 6.2 }.check(6.0));
        assert!(!Threshold::Within { min: 5.5, max: 6.2 }.check(6.3));
    }

    #[test]
    fn report_line_json() {
        let l = ReportLine::new("oracle", "x", "max_abs_err", 1e-15, Threshold::Below(1e-13));
        let v: serde_json::Value = serde_json::from_str(&l.to_json()).unwrap();
        assert_eq!(v["suite"], "oracle");
        assert_eq!(v["pass"], true);
        assert_eq!(v["threshold"], 1e-13);
        assert!(v.get("note").is_none());
        let r = ReportLine::new("s", "c", "m", 6.0, Threshold::Within { min: 5.5, max: 6.2 });
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["threshold"]["max"], 6.2);
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list::<usize>("256, 1024,4096").unwrap(), vec![256, 1024, 4096]);
        assert!(parse_list::<u32>("2,x").is_err());
        assert_eq!(parse_mode("Full").unwrap(), ChannelMode::Full);
    }
}
