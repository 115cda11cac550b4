//! Pass/fail bookkeeping for the acceptance criteria.

use std::fmt;
use std::time::Duration;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        })
    }
}

/// One measured quantity compared against its bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub observed: String,
    pub bound: String,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, observed: impl Into<String>, bound: impl Into<String>, pass: bool) -> Self {
        Check {
            name: name.into(),
            observed: observed.into(),
            bound: bound.into(),
            pass,
        }
    }

    pub fn at_most(name: &str, value: f64, max: f64) -> Self {
        Check::new(name, format!("{value:.6}"), format!("<= {max}"), value <= max)
    }

    pub fn at_least(name: &str, value: f64, min: f64) -> Self {
        Check::new(name, format!("{value:.6}"), format!(">= {min}"), value >= min)
    }

    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Check::new(name, format!("{value:.6}"), format!("in [{lo}, {hi}]"), (lo..=hi).contains(&value))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub title: String,
    pub status: Status,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub elapsed: Duration,
}

impl CriterionResult {
    /// Status is `Pass` iff every check passes.
    pub fn from_checks(id: u8, title: &str, checks: Vec<Check>, notes: Vec<String>, elapsed: Duration) -> Self {
        let status = if checks.iter().all(|c| c.pass) && !checks.is_empty() {
            Status::Pass
        } else {
            Status::Fail
        };
        CriterionResult {
            id,
            title: title.to_string(),
            status,
            checks,
            notes,
            elapsed,
        }
    }

    pub fn failed(id: u8, title: &str, error: &crate::Error, elapsed: Duration) -> Self {
        CriterionResult {
            id,
            title: title.to_string(),
            status: Status::Fail,
            checks: Vec::new(),
            notes: vec![format!("error: {error}")],
            elapsed,
        }
    }

    pub fn skipped(id: u8, title: &str) -> Self {
        CriterionResult {
            id,
            title: title.to_string(),
            status: Status::Skipped,
            checks: Vec::new(),
            notes: Vec::new(),
            elapsed: Duration::ZERO,
        }
    }

    /// `PASS criterion 3 (title) 1.2s`.
    pub fn line(&self) -> String {
        format!(
            "{} criterion {} ({}) {:.1}s",
            self.status,
            self.id,
            self.title,
            self.elapsed.as_secs_f64()
        )
    }

    pub fn detail(&self) -> String {
        let mut s = self.line();
        s.push('\n');
        for c in &self.checks {
            let mark = if c.pass { "ok  " } else { "FAIL" };
            s.push_str(&format!("  {mark} {}: {} ({})\n", c.name, c.observed, c.bound));
        }
        for n in &self.notes {
            s.push_str(&format!("  note {n}\n"));
        }
        s
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub results: Vec<CriterionResult>,
}

impl Report {
    pub fn new(mut results: Vec<CriterionResult>) -> Self {
        results.sort_by_key(|r| r.id);
        Report { results }
    }

    pub fn passed(&self) -> usize {
        self.results.iter().filter(|r| r.status == Status::Pass).count()
    }

    pub fn failed(&self) -> usize {
        self.results.iter().filter(|r| r.status == Status::Fail).count()
    }

    /// 0 when every criterion passed; failures and skips give 1.
    pub fn exit_code(&self) -> i32 {
        i32::from(self.results.is_empty() || self.passed() < self.results.len())
    }

    pub fn text(&self) -> String {
        let mut s = String::new();
        for r in &self.results {
            s.push_str(&r.detail());
        }
        s.push_str(&format!(
            "summary passed={} failed={} skipped={}\n",
            self.passed(),
            self.failed(),
            self.results.len() - self.passed() - self.failed()
        ));
        s
    }

    /// `id,status,check,observed,bound,pass`, one row per check.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,status,check,observed,bound,pass\n");
        for r in &self.results {
            if r.checks.is_empty() {
                s.push_str(&format!("{},{},,,,\n", r.id, r.status));
            }
            for c in &r.checks {
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.id,
                    r.status,
                    c.name.replace(',', ";"),
                    c.observed.replace(',', ";"),
                    c.bound.replace(',', ";"),
                    c.pass
                ));
            }
        }
        s
    }
}
