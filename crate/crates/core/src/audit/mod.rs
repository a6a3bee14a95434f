//! Postulate checks, the supprob functional, proposition probes and the full audit.

mod fixture;
mod matrix;
mod minimize;
mod p6;
mod postulates;
mod propositions;
mod supprob;

use std::fmt;

use num_traits::Signed;
use serde_json::{Map, Value};

use crate::credal::CredalSet;
use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::rational::{fmt_rational, int, Rational};
use crate::rules::RuleId;

pub use fixture::{polytope_catalog, Fixture, Pool};
pub use matrix::{run_matrix, worker_pool, AuditReport, CensusEntry, P6Family, PropositionResult};
pub use minimize::minimize_witness;
pub use p6::{check_p6, p6_constant, P6Arg, P6Constant, P6Report};
pub use postulates::{check_core_postulate, check_fixture, Check, Probing};
pub use propositions::{check_on_table, check_proposition, Proposition};
pub use supprob::{supprob_eval, supprob_table, supprob_tables, SupProb, SupProbCell, SupProbTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PostulateId {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6Prime,
    P6DoublePrime,
    P6Star,
    P7,
}

impl PostulateId {
    pub const ALL: [PostulateId; 9] = [
        PostulateId::P1,
        PostulateId::P2,
        PostulateId::P3,
        PostulateId::P4,
        PostulateId::P5,
        PostulateId::P6Prime,
        PostulateId::P6DoublePrime,
        PostulateId::P6Star,
        PostulateId::P7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PostulateId::P1 => "P1",
            PostulateId::P2 => "P2",
            PostulateId::P3 => "P3",
            PostulateId::P4 => "P4",
            PostulateId::P5 => "P5",
            PostulateId::P6Prime => "P6'",
            PostulateId::P6DoublePrime => "P6''",
            PostulateId::P6Star => "P6*",
            PostulateId::P7 => "P7",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == text)
            .ok_or_else(|| Error::Parse(format!("unknown postulate `{text}`")))
    }
}

impl fmt::Display for PostulateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditConfig {
    pub rules: Vec<RuleId>,
    pub max_atoms: usize,
    pub grid_denominators: Vec<u32>,
    /// Largest `n` of the `M_n` family used by the divergence probe.
    pub family_depth: usize,
    pub divergence_threshold: Rational,
    pub rng_seed: u64,
    /// Extra seeded random finite fixtures appended to the exhaustive pool.
    pub random_fixtures: usize,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            rules: RuleId::ALL.to_vec(),
            max_atoms: 4,
            grid_denominators: vec![1, 2, 3, 4],
            family_depth: 8,
            divergence_threshold: int(100),
            rng_seed: 0,
            random_fixtures: 0,
        }
    }
}

impl AuditConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::PreconditionViolated(m.into()));
        if self.max_atoms == 0 || self.max_atoms > 5 {
            return bad("max_atoms must be between 1 and 5");
        }
        if self.grid_denominators.is_empty() || self.grid_denominators.contains(&0) {
            return bad("grid denominators must be positive");
        }
        if self.family_depth < 3 || self.family_depth > 12 {
            return bad("family_depth must be between 3 and 12");
        }
        if !self.divergence_threshold.is_positive() {
            return bad("divergence threshold must be positive");
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("rules".into(), Value::Array(self.rules.iter().map(|r| Value::String(r.name())).collect()));
        obj.insert("max_atoms".into(), self.max_atoms.into());
        obj.insert("grid_denominators".into(), Value::Array(self.grid_denominators.iter().map(|&d| d.into()).collect()));
        obj.insert("family_depth".into(), self.family_depth.into());
        obj.insert("divergence_threshold".into(), Value::String(fmt_rational(&self.divergence_threshold)));
        obj.insert("rng_seed".into(), self.rng_seed.into());
        obj.insert("random_fixtures".into(), self.random_fixtures.into());
        Value::Object(obj)
    }
}

/// A replayable counterexample, or supporting evidence for a pass.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub rule: RuleId,
    pub postulate: PostulateId,
    pub fixture: Fixture,
    /// The set the rule produced (or the left-hand side of a compared pair).
    pub observed: CredalSet,
    /// The set the postulate demands, when there is one.
    pub expected: Option<CredalSet>,
    pub distinguishing_measure: Option<Measure>,
    /// Whether `distinguishing_measure` belongs to `observed`.
    pub in_observed: Option<bool>,
    /// Output members exhibiting the violation (two distinct members for P6').
    pub members: Vec<Measure>,
    pub detail: String,
    /// Set when the witness refutes a proposition rather than a postulate.
    pub proposition: Option<Proposition>,
}

impl Witness {
    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("rule".into(), Value::String(self.rule.name()));
        match self.proposition {
            Some(p) => obj.insert("proposition".into(), Value::String(p.name().into())),
            None => obj.insert("postulate".into(), Value::String(self.postulate.name().into())),
        };
        obj.insert("fixture".into(), self.fixture.to_json());
        obj.insert("observed".into(), self.observed.to_json());
        if let Some(e) = &self.expected {
            obj.insert("expected".into(), e.to_json());
        }
        if let Some(m) = &self.distinguishing_measure {
            obj.insert("distinguishing_measure".into(), m.to_json());
        }
        if let Some(b) = self.in_observed {
            obj.insert("in_observed".into(), Value::Bool(b));
        }
        if !self.members.is_empty() {
            obj.insert("members".into(), Value::Array(self.members.iter().map(Measure::to_json).collect()));
        }
        obj.insert("detail".into(), Value::String(self.detail.clone()));
        Value::Object(obj)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass {
        fixtures_checked: usize,
        skipped: usize,
        evidence: Option<Box<Witness>>,
        note: Option<String>,
    },
    Fail {
        fixtures_checked: usize,
        witness: Box<Witness>,
        note: Option<String>,
    },
    Inconclusive {
        reason: String,
    },
}

impl Verdict {
    pub fn status(&self) -> &'static str {
        match self {
            Verdict::Pass { .. } => "pass",
            Verdict::Fail { .. } => "fail",
            Verdict::Inconclusive { .. } => "inconclusive",
        }
    }

    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass { .. })
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, Verdict::Fail { .. })
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::Fail { witness, .. } => Some(witness),
            _ => None,
        }
    }

    pub fn note(&self) -> Option<&str> {
        match self {
            Verdict::Pass { note, .. } | Verdict::Fail { note, .. } => note.as_deref(),
            Verdict::Inconclusive { reason } => Some(reason),
        }
    }

    /// Fields merged into a matrix entry.
    pub fn json_fields(&self, obj: &mut Map<String, Value>) {
        obj.insert("verdict".into(), Value::String(self.status().into()));
        match self {
            Verdict::Pass { fixtures_checked, skipped, evidence, note } => {
                obj.insert("fixtures_checked".into(), (*fixtures_checked).into());
                obj.insert("skipped".into(), (*skipped).into());
                if let Some(n) = note {
                    obj.insert("note".into(), Value::String(n.clone()));
                }
                if let Some(e) = evidence {
                    obj.insert("evidence".into(), e.to_json());
                }
            }
            Verdict::Fail { fixtures_checked, witness, note } => {
                obj.insert("fixtures_checked".into(), (*fixtures_checked).into());
                if let Some(n) = note {
                    obj.insert("note".into(), Value::String(n.clone()));
                }
                obj.insert("witness".into(), witness.to_json());
            }
            Verdict::Inconclusive { reason } => {
                obj.insert("reason".into(), Value::String(reason.clone()));
            }
        }
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        self.json_fields(&mut obj);
        Value::Object(obj)
    }
}
