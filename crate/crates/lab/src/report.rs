//! The versioned JSON report.

use serde::Serialize;

use crflow::audit::{AuditResult, AuditStatus};

use crate::config::{ScenarioConfig, Tolerances};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Reported without a verdict.
    Informational,
    /// The hypothesis of the check does not hold for this scenario.
    NotApplicable,
}

/// One enabled check. Non-finite numbers serialize as `null`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub pass: bool,
    pub residual: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    /// Passes iff `residual ≤ tolerance`.
    pub fn at_most(name: &str, residual: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self::verdict(name, residual <= tolerance, residual, tolerance, detail)
    }

    /// Passes iff `residual ≥ −tolerance`.
    pub fn at_least(name: &str, residual: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self::verdict(name, residual >= -tolerance, residual, tolerance, detail)
    }

    pub fn verdict(name: &str, pass: bool, residual: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
            pass,
            residual,
            tolerance,
            detail: detail.into(),
        }
    }

    pub fn informational(name: &str, residual: f64, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            status: CheckStatus::Informational,
            pass: true,
            residual,
            tolerance: f64::NAN,
            detail: detail.into(),
        }
    }

    pub fn not_applicable(name: &str, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            status: CheckStatus::NotApplicable,
            pass: true,
            residual: f64::NAN,
            tolerance: f64::NAN,
            detail: detail.into(),
        }
    }

    pub fn from_audit(prefix: &str, r: &AuditResult) -> Self {
        let name = format!("{prefix}{}", r.name);
        let slopes = if r.slopes.is_empty() {
            String::new()
        } else {
            format!("slopes {:?}", r.slopes)
        };
        match &r.status {
            AuditStatus::Enforced => Check {
                name,
                status: if r.pass { CheckStatus::Pass } else { CheckStatus::Fail },
                pass: r.pass,
                residual: r.residual,
                tolerance: r.tolerance,
                detail: slopes,
            },
            AuditStatus::Informational => Check {
                tolerance: r.tolerance,
                ..Check::informational(&name, r.residual, slopes)
            },
            AuditStatus::NotApplicable(why) => Check {
                residual: r.residual,
                ..Check::not_applicable(&name, why.clone())
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BuildStamp {
    pub package: &'static str,
    pub version: &'static str,
    pub revision: &'static str,
}

pub fn build_stamp() -> BuildStamp {
    BuildStamp {
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        revision: env!("CRFLOW_BUILD_REVISION"),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    pub scenario: String,
    pub pass: bool,
    /// Set when the run aborted; the checks then cover only what completed.
    pub error: Option<String>,
    pub summary: serde_json::Value,
    pub checks: Vec<Check>,
    pub tolerances: Tolerances,
    pub config: ScenarioConfig,
    pub build: BuildStamp,
}

impl Report {
    pub fn new(command: &str, cfg: &ScenarioConfig, checks: Vec<Check>, summary: serde_json::Value) -> Self {
        Report {
            schema: SCHEMA,
            command: command.to_string(),
            scenario: cfg.name.clone(),
            pass: checks.iter().all(|c| c.pass),
            error: None,
            summary,
            checks,
            tolerances: cfg.tolerances.clone(),
            config: cfg.clone(),
            build: build_stamp(),
        }
    }

    pub fn aborted(command: &str, cfg: &ScenarioConfig, error: String) -> Self {
        Report {
            pass: false,
            error: Some(error),
            ..Report::new(command, cfg, Vec::new(), serde_json::Value::Null)
        }
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
