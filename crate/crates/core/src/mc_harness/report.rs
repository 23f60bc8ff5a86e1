use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

/// Where a reference value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RefSource {
    ClosedForm,
    Oracle,
    Bound,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportCell {
    pub name: String,
    pub params: Value,
    pub estimate: f64,
    pub stderr: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reference {
    pub name: String,
    pub params: Value,
    pub value: f64,
    pub source: RefSource,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Criterion {
    pub name: String,
    pub passed: bool,
    /// Informational rows never fail a run.
    pub gating: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    pub config: Value,
    pub cells: Vec<ReportCell>,
    pub references: Vec<Reference>,
    pub criteria: Vec<Criterion>,
    pub aborts: usize,
    pub notes: Vec<String>,
    /// Seconds; kept out of the JSONL so reruns are byte-identical.
    #[serde(skip)]
    pub wall_clock: f64,
    /// CSV body for `snapshots.csv`, when the experiment produces one.
    #[serde(skip)]
    pub snapshots: Option<String>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, seed: u64, config: Value) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            seed,
            config,
            cells: Vec::new(),
            references: Vec::new(),
            criteria: Vec::new(),
            aborts: 0,
            notes: Vec::new(),
            wall_clock: 0.0,
            snapshots: None,
        }
    }

    pub fn cell(&mut self, name: &str, params: Value, estimate: f64, stderr: f64, n: usize) {
        self.cells.push(ReportCell {
            name: name.to_string(),
            params,
            estimate,
            stderr,
            n,
        });
    }

    pub fn reference(&mut self, name: &str, params: Value, value: f64, source: RefSource) {
        self.references.push(Reference {
            name: name.to_string(),
            params,
            value,
            source,
        });
    }

    pub fn criterion(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.criteria.push(Criterion {
            name: name.to_string(),
            passed,
            gating: true,
            detail: detail.into(),
        });
    }

    pub fn info(&mut self, name: &str, detail: impl Into<String>) {
        self.criteria.push(Criterion {
            name: name.to_string(),
            passed: true,
            gating: false,
            detail: detail.into(),
        });
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed || !c.gating)
    }

    /// Looks up a cell estimate by name and exact params.
    pub fn find_cell(&self, name: &str, params: &Value) -> Option<&ReportCell> {
        self.cells.iter().find(|c| c.name == name && &c.params == params)
    }

    /// One JSON object per line: header, cells, references, criteria, footer.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut line = |v: Value| {
            out.push_str(&v.to_string());
            out.push('\n');
        };
        line(json!({
            "kind": "header",
            "experiment": self.experiment,
            "seed": self.seed,
            "config": self.config,
        }));
        for c in &self.cells {
            let mut v = serde_json::to_value(c).expect("serializable");
            v["kind"] = json!("cell");
            line(v);
        }
        for r in &self.references {
            let mut v = serde_json::to_value(r).expect("serializable");
            v["kind"] = json!("reference");
            line(v);
        }
        for c in &self.criteria {
            let mut v = serde_json::to_value(c).expect("serializable");
            v["kind"] = json!("criterion");
            line(v);
        }
        line(json!({
            "kind": "footer",
            "passed": self.passed(),
            "aborts": self.aborts,
            "notes": self.notes,
        }));
        out
    }

    /// Human-readable table.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment {}  seed {}", self.experiment, self.seed);
        let _ = writeln!(s, "config {}", self.config);
        let _ = writeln!(s, "{:<28} {:<36} {:>14} {:>12} {:>8}", "cell", "params", "estimate", "stderr", "n");
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{:<28} {:<36} {:>14} {:>12.3e} {:>8}",
                c.name,
                compact(&c.params),
                num(c.estimate, 6),
                c.stderr,
                c.n
            );
        }
        if !self.references.is_empty() {
            let _ = writeln!(s, "{:<28} {:<36} {:>14} source", "reference", "params", "value");
            for r in &self.references {
                let src = serde_json::to_value(r.source).expect("serializable");
                let _ = writeln!(
                    s,
                    "{:<28} {:<36} {:>14.8} {}",
                    r.name,
                    compact(&r.params),
                    r.value,
                    src.as_str().unwrap_or("")
                );
            }
        }
        for c in &self.criteria {
            let tag = match (c.gating, c.passed) {
                (false, _) => "INFO",
                (true, true) => "PASS",
                (true, false) => "FAIL",
            };
            let _ = writeln!(s, "{tag} {}: {}", c.name, c.detail);
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        let _ = writeln!(
            s,
            "aborted replicas {}  wall clock {:.2}s  overall {}",
            self.aborts,
            self.wall_clock,
            if self.passed() { "PASS" } else { "FAIL" }
        );
        s
    }
}

/// Fixed point, or scientific for values too small to show.
fn num(x: f64, digits: usize) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:.3e}")
    } else {
        format!("{x:.digits$}")
    }
}

fn compact(v: &Value) -> String {
    match v {
        Value::Object(m) if m.is_empty() => String::new(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_shape_and_pass_logic() {
        let mut r = ExperimentReport::new("demo", 3, json!({"N": 5}));
        r.cell("p", json!({"u": 0.0}), 0.5, 0.01, 100);
        r.reference("limit", json!({}), 0.5, RefSource::ClosedForm);
        r.info("contrast", "reported only");
        r.criterion("ok", true, "fine");
        assert!(r.passed());
        r.wall_clock = 12.0;
        let text = r.to_jsonl();
        assert_eq!(text.lines().count(), 6);
        assert!(!text.contains("wall"));
        for l in text.lines() {
            let v: Value = serde_json::from_str(l).unwrap();
            assert!(v["kind"].is_string());
        }
        r.criterion("bad", false, "broken");
        assert!(!r.passed());
        assert!(r.summary().contains("FAIL bad: broken"));
        assert!(r.find_cell("p", &json!({"u": 0.0})).is_some());
    }
}
