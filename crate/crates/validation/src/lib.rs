//! Reporting helpers for the acceptance suite.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

/// Result of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl Outcome {
    /// Single report line, `PASS` or `FAIL` first.
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {}: {} ({:.1} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

/// Collects named checks of one criterion into an outcome.
#[derive(Debug)]
pub struct Criterion {
    id: usize,
    name: &'static str,
    start: Instant,
    parts: Vec<(bool, String)>,
    budget: Option<Duration>,
}

impl Criterion {
    pub fn new(id: usize, name: &'static str) -> Self {
        Self {
            id,
            name,
            start: Instant::now(),
            parts: Vec::new(),
            budget: None,
        }
    }

    /// Fails the criterion when it runs longer than `budget`.
    pub fn with_budget(mut self, budget: Duration) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn check(&mut self, pass: bool, detail: impl Into<String>) -> &mut Self {
        self.parts.push((pass, detail.into()));
        self
    }

    pub fn finish(mut self) -> Outcome {
        let elapsed = self.start.elapsed();
        if let Some(budget) = self.budget {
            let ok = elapsed <= budget;
            self.parts
                .push((ok, format!("runtime {:.1} s of {:.0} s", elapsed.as_secs_f64(), budget.as_secs_f64())));
        }
        let pass = !self.parts.is_empty() && self.parts.iter().all(|(ok, _)| *ok);
        let mut detail = String::new();
        for (i, (ok, text)) in self.parts.iter().enumerate() {
            if i > 0 {
                detail.push_str("; ");
            }
            let _ = write!(detail, "{}{text}", if *ok { "" } else { "[x] " });
        }
        Outcome {
            id: self.id,
            name: self.name,
            pass,
            detail,
            elapsed,
        }
    }
}
