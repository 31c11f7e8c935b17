//! Named numeric checks collected by the verification routines.

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    /// `|value - expected| <= tol`
    Close,
    /// `value <= expected + tol`
    AtMost,
    /// `value >= expected - tol`
    AtLeast,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub tol: f64,
    pub relation: Relation,
}

impl Check {
    pub fn close(name: impl Into<String>, value: f64, expected: f64, tol: f64) -> Self {
        Self { name: name.into(), value, expected, tol, relation: Relation::Close }
    }

    pub fn at_most(name: impl Into<String>, value: f64, bound: f64, tol: f64) -> Self {
        Self { name: name.into(), value, expected: bound, tol, relation: Relation::AtMost }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64, tol: f64) -> Self {
        Self { name: name.into(), value, expected: bound, tol, relation: Relation::AtLeast }
    }

    pub fn pass(&self) -> bool {
        // NaN never passes
        match self.relation {
            Relation::Close => (self.value - self.expected).abs() <= self.tol,
            Relation::AtMost => self.value <= self.expected + self.tol,
            Relation::AtLeast => self.value >= self.expected - self.tol,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.relation {
            Relation::Close => "~=",
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        };
        write!(
            f,
            "{} {}: {:.6e} {} {:.6e} (tol {:.1e})",
            if self.pass() { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            op,
            self.expected,
            self.tol
        )
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(Check::pass)
}
