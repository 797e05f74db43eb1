//! Report structures shared by the text and JSON outputs.

use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Outcome of one executed task.
#[derive(Debug, Clone, Serialize)]
pub struct TaskReport {
    pub name: String,
    pub kind: String,
    pub status: Status,
    /// Canonical text of the quantity whose vanishing means success, `"0"`
    /// for checks that hold, `"n/a"` for tasks without a residual
    /// expression.
    pub residual: String,
    /// Sorted key/value details (computed expressions, counts, messages).
    pub details: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Status::Pass => write!(f, "PASS"),
            Status::Fail => write!(f, "FAIL"),
        }
    }
}

/// A full run: header metadata plus one report per executed task.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub problem: String,
    pub tasks: Vec<TaskReport>,
    pub passed: usize,
    pub failed: usize,
}

impl RunReport {
    pub fn new(command: &str, problem: &str, tasks: Vec<TaskReport>) -> RunReport {
        let passed = tasks.iter().filter(|t| t.status == Status::Pass).count();
        let failed = tasks.len() - passed;
        RunReport {
            command: command.to_owned(),
            problem: problem.to_owned(),
            tasks,
            passed,
            failed,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }

    /// Text rendering. The first line carries run metadata (tool version,
    /// command, problem path) and is the only line that may vary between
    /// environments; everything below it is deterministic.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "plurilag {} command={} problem={}",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.problem
        );
        for task in &self.tasks {
            let _ = writeln!(out, "task: {}", task.name);
            let _ = writeln!(out, "kind: {}", task.kind);
            let _ = writeln!(out, "status: {}", task.status);
            let _ = writeln!(out, "residual: {}", task.residual);
            for (key, value) in &task.details {
                let _ = writeln!(out, "{key}: {value}");
            }
            let _ = writeln!(out);
        }
        let _ = writeln!(
            out,
            "summary: tasks={} passed={} failed={}",
            self.tasks.len(),
            self.passed,
            self.failed
        );
        out
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }
}
