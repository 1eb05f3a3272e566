use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{Map, Number, Value};

use crate::error::{CliError, CliResult};

/// Significant digits kept for every floating-point number in a report.
pub const SIGNIFICANT_DIGITS: usize = 9;

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub args: Vec<String>,
    pub config: Value,
    /// `None` for commands that draw no random numbers.
    pub seed: Option<u64>,
    pub metrics: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
    pub artifacts: BTreeMap<String, String>,
    /// Only meaningful for `verify`; other commands always pass.
    pub passed: bool,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report is plain data");
        let mut text = serde_json::to_string_pretty(&round_floats(value)).expect("report is plain data");
        text.push('\n');
        text
    }
}

pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 {
        // Drops the sign of -0.0, which empty float sums produce.
        return 0.0;
    }
    if !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Rounds every non-integer number in the tree to `SIGNIFICANT_DIGITS`.
pub fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| Number::from_f64(round_sig(x)))
            .map_or(Value::Null, Value::Number),
        Value::Array(a) => Value::Array(a.into_iter().map(round_floats).collect()),
        Value::Object(m) => Value::Object(
            m.into_iter()
                .map(|(k, v)| (k, round_floats(v)))
                .collect::<Map<_, _>>(),
        ),
        other => other,
    }
}

/// Collects phase timings and written files while a command runs.
pub struct Run {
    command: &'static str,
    args: Vec<String>,
    timed: bool,
    last: Instant,
    timings: BTreeMap<String, f64>,
    artifacts: BTreeMap<String, String>,
}

impl Run {
    pub fn new(command: &'static str, args: Vec<String>, timed: bool) -> Self {
        Run {
            command,
            args,
            timed,
            last: Instant::now(),
            timings: BTreeMap::new(),
            artifacts: BTreeMap::new(),
        }
    }

    /// Records the seconds since the previous lap under `phase`.
    pub fn lap(&mut self, phase: &str) {
        let now = Instant::now();
        if self.timed {
            *self.timings.entry(phase.to_string()).or_default() +=
                now.duration_since(self.last).as_secs_f64();
        }
        self.last = now;
    }

    pub fn artifact(&mut self, name: &str, path: &Path) {
        self.artifacts.insert(name.to_string(), path.display().to_string());
    }

    pub fn finish(self, config: &impl Serialize, seed: Option<u64>, metrics: Value, passed: bool) -> RunReport {
        RunReport {
            command: self.command.to_string(),
            args: self.args,
            config: serde_json::to_value(config).expect("options are plain data"),
            seed,
            metrics,
            timings: self.timed.then_some(self.timings),
            artifacts: self.artifacts,
            passed,
        }
    }
}

pub fn write_text(path: &PathBuf, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_keep_nine_significant_digits() {
        assert_eq!(round_sig(0.123456789123), 0.123456789);
        assert_eq!(round_sig(-98765.43210987), -98765.4321);
        assert_eq!(round_sig(0.25), 0.25);
        assert!(round_sig(-0.0).is_sign_positive());
        assert_eq!(round_sig(1e-20 / 3.0), 3.33333333e-21);
        let v = round_floats(json!({"a": [1.0 / 3.0, 7], "b": {"c": 2.0f64.sqrt()}, "n": 12}));
        assert_eq!(v.to_string(), r#"{"a":[0.333333333,7],"b":{"c":1.41421356},"n":12}"#);
    }

    #[test]
    fn timings_only_when_requested() {
        let mut run = Run::new("x", vec![], false);
        run.lap("fit");
        let r = run.finish(&json!({}), Some(1), json!({}), true);
        assert!(!r.to_json().contains("timings"));
        let mut run = Run::new("x", vec![], true);
        run.lap("fit");
        assert!(run.finish(&json!({}), Some(1), json!({}), true).to_json().contains("\"fit\""));
    }
}
