use serde::Serialize;
use serde_json::Value;

use osptba::suite::{Bound, Measure};

/// One compared number with the check that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub provenance: String,
    #[serde(flatten)]
    pub measure: Measure,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub total_seconds: f64,
}

/// Machine-readable outcome of one command. Everything except `timings` is
/// a function of the configuration and seed.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub config: Value,
    /// Seed of the RNG stream the command drew from, if any.
    pub seed: Option<u64>,
    pub pass: bool,
    pub checks: Vec<CheckRecord>,
    pub data: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl Report {
    pub fn new(command: &str, config: Value) -> Self {
        Report {
            command: command.to_string(),
            config,
            seed: None,
            pass: true,
            checks: Vec::new(),
            data: Value::Object(Default::default()),
            timings: None,
        }
    }

    pub fn check(&mut self, provenance: &str, name: impl Into<String>, value: f64, relation: Bound, bound: f64) {
        self.push(provenance, Measure::new(name, value, relation, bound));
    }

    pub fn push(&mut self, provenance: &str, measure: Measure) {
        self.pass &= measure.pass;
        self.checks.push(CheckRecord {
            provenance: provenance.to_string(),
            measure,
        });
    }

    /// Inserts a field into `data`.
    pub fn set(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        if let Value::Object(m) = &mut self.data {
            m.insert(key.to_string(), v);
        }
    }
}
