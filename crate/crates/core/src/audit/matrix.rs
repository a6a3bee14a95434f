use num_traits::{One, Zero};
use rayon::prelude::*;
use serde_json::{Map, Value};

use super::p6::{check_p6, P6Constant};
use super::postulates::{check_core_postulate, Probing};
use super::propositions::{check_on_table, check_proposition, Proposition};
use super::supprob::{supprob_table, SupProbTable};
use super::{AuditConfig, Fixture, Pool, PostulateId, Verdict};
use crate::error::{Error, Result};
use crate::lp::LinearConstraint;
use crate::rational::Rational;
use crate::rules::{apply_rule, RuleId};

/// Environment variable capping the number of audit worker threads.
pub const JOBS_ENV: &str = "CREDAL_AUDIT_JOBS";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct P6Family {
    pub rule: RuleId,
    pub family: Vec<(usize, P6Constant)>,
    pub pool_constant: P6Constant,
    pub implication: Verdict,
}

impl P6Family {
    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("rule".into(), Value::String(self.rule.name()));
        let family = self
            .family
            .iter()
            .map(|(n, c)| {
                let mut entry = Map::new();
                entry.insert("n".into(), (*n).into());
                entry.insert("constant".into(), c.to_json());
                Value::Object(entry)
            })
            .collect();
        obj.insert("family".into(), Value::Array(family));
        obj.insert("pool_constant".into(), self.pool_constant.to_json());
        obj.insert("implication".into(), self.implication.to_json());
        Value::Object(obj)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropositionResult {
    pub proposition: Proposition,
    pub rule: RuleId,
    /// Hypothesis postulates the rule did not pass in this audit.
    pub unmet: Vec<PostulateId>,
    pub verdict: Verdict,
}

impl PropositionResult {
    pub fn hypotheses_met(&self) -> bool {
        self.unmet.is_empty()
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("proposition".into(), Value::String(self.proposition.name().into()));
        obj.insert("rule".into(), Value::String(self.rule.name()));
        obj.insert("hypotheses_met".into(), Value::Bool(self.hypotheses_met()));
        if !self.unmet.is_empty() {
            let unmet = self.unmet.iter().map(|p| Value::String(p.name().into())).collect();
            obj.insert("hypothesis_not_met".into(), Value::Array(unmet));
        }
        self.verdict.json_fields(&mut obj);
        Value::Object(obj)
    }
}

/// Where a rule's outputs are empty, over every `(X, B)` input fixture.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CensusEntry {
    pub rule: RuleId,
    pub fixtures: usize,
    pub skipped: usize,
    pub empty: usize,
    /// Empty although some member gives the evidence positive probability.
    pub empty_with_positive_evidence: usize,
    /// Empty although some member gives the evidence probability 1.
    pub empty_with_certain_member: usize,
}

impl CensusEntry {
    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("rule".into(), Value::String(self.rule.name()));
        obj.insert("fixtures".into(), self.fixtures.into());
        obj.insert("skipped".into(), self.skipped.into());
        obj.insert("empty".into(), self.empty.into());
        obj.insert("empty_with_positive_evidence".into(), self.empty_with_positive_evidence.into());
        obj.insert("empty_with_certain_member".into(), self.empty_with_certain_member.into());
        Value::Object(obj)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditReport {
    pub config: AuditConfig,
    /// Rule-major, postulates in canonical order.
    pub matrix: Vec<(RuleId, PostulateId, Verdict)>,
    pub p6_combined: Vec<(RuleId, Verdict)>,
    pub p6_family: Vec<P6Family>,
    pub supprob_tables: Vec<SupProbTable>,
    pub propositions: Vec<PropositionResult>,
    pub emptiness_census: Vec<CensusEntry>,
    pub open_flags: Vec<(String, String)>,
}

impl AuditReport {
    pub fn verdict(&self, rule: RuleId, pid: PostulateId) -> Option<&Verdict> {
        self.matrix.iter().find(|(r, p, _)| *r == rule && *p == pid).map(|(_, _, v)| v)
    }

    pub fn proposition(&self, which: Proposition, rule: RuleId) -> Option<&PropositionResult> {
        self.propositions.iter().find(|p| p.proposition == which && p.rule == rule)
    }

    pub fn supprob_table(&self, rule: RuleId) -> Option<&SupProbTable> {
        self.supprob_tables.iter().find(|t| t.rule == rule)
    }

    pub fn p6_family(&self, rule: RuleId) -> Option<&P6Family> {
        self.p6_family.iter().find(|f| f.rule == rule)
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("config".into(), self.config.to_json());
        let matrix = self
            .matrix
            .iter()
            .map(|(r, p, v)| {
                let mut entry = Map::new();
                entry.insert("rule".into(), Value::String(r.name()));
                entry.insert("postulate".into(), Value::String(p.name().into()));
                v.json_fields(&mut entry);
                Value::Object(entry)
            })
            .collect();
        obj.insert("matrix".into(), Value::Array(matrix));
        let combined = self
            .p6_combined
            .iter()
            .map(|(r, v)| {
                let mut entry = Map::new();
                entry.insert("rule".into(), Value::String(r.name()));
                v.json_fields(&mut entry);
                Value::Object(entry)
            })
            .collect();
        obj.insert("p6_combined".into(), Value::Array(combined));
        obj.insert("p6_family".into(), Value::Array(self.p6_family.iter().map(P6Family::to_json).collect()));
        obj.insert(
            "supprob_tables".into(),
            Value::Array(self.supprob_tables.iter().map(SupProbTable::to_json).collect()),
        );
        obj.insert(
            "propositions".into(),
            Value::Array(self.propositions.iter().map(PropositionResult::to_json).collect()),
        );
        obj.insert(
            "emptiness_census".into(),
            Value::Array(self.emptiness_census.iter().map(CensusEntry::to_json).collect()),
        );
        let flags = self
            .open_flags
            .iter()
            .map(|(k, v)| {
                let mut entry = Map::new();
                entry.insert("flag".into(), Value::String(k.clone()));
                entry.insert("status".into(), Value::String(v.clone()));
                Value::Object(entry)
            })
            .collect();
        obj.insert("open_flags".into(), Value::Array(flags));
        let mut provenance = Map::new();
        provenance.insert("crate".into(), Value::String(env!("CARGO_PKG_NAME").into()));
        provenance.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
        provenance.insert("config".into(), self.config.to_json());
        obj.insert("provenance".into(), Value::Object(provenance));
        Value::Object(obj)
    }
}

fn census(rule: RuleId, fixtures: &[Fixture]) -> Result<CensusEntry> {
    let rows: Vec<Option<(bool, bool, bool)>> = fixtures
        .par_iter()
        .map(|fx| {
            let out = match apply_rule(rule, &fx.x, &fx.b) {
                Ok(o) => o.result,
                Err(Error::UnsupportedRepresentation(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            let positive = fx.x.sup_prob(&fx.b)?.is_some_and(|s| !s.is_zero());
            let certain = !fx.x.restrict(&LinearConstraint::eq(fx.b.indicator(), Rational::one()))?.is_empty()?;
            Ok(Some((out.is_empty()?, positive, certain)))
        })
        .collect::<Result<_>>()?;
    let mut entry = CensusEntry {
        rule,
        fixtures: fixtures.len(),
        skipped: 0,
        empty: 0,
        empty_with_positive_evidence: 0,
        empty_with_certain_member: 0,
    };
    for row in rows {
        match row {
            None => entry.skipped += 1,
            Some((empty, positive, certain)) => {
                if empty {
                    entry.empty += 1;
                    entry.empty_with_positive_evidence += usize::from(positive);
                    entry.empty_with_certain_member += usize::from(certain);
                }
            }
        }
    }
    Ok(entry)
}

fn open_flags() -> Vec<(String, String)> {
    vec![
        (
            "p6_star_sufficiency".into(),
            "open: whether P1-P5 with P6* alone single out conditioning and constraining is conjectured, not proved; only the probes above were run".into(),
        ),
        (
            "p3_restricted_circumstances".into(),
            "not encoded: P3 is reported empirically per fixture; no characterisation of when it holds is checked".into(),
        ),
    ]
}

/// Builds a worker pool honouring `CREDAL_AUDIT_JOBS`.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(JOBS_ENV) {
        let jobs: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Parse(format!("{JOBS_ENV} must be a positive integer, got `{raw}`")))?;
        builder = builder.num_threads(jobs);
    }
    builder.build().map_err(|e| Error::PreconditionViolated(e.to_string()))
}

const CORE: [PostulateId; 6] =
    [PostulateId::P1, PostulateId::P2, PostulateId::P3, PostulateId::P4, PostulateId::P5, PostulateId::P7];

/// Runs every configured rule against every postulate, the propositions,
/// the supprob tables and the emptiness census.
pub fn run_matrix(cfg: &AuditConfig) -> Result<AuditReport> {
    cfg.validate()?;
    worker_pool()?.install(|| run_inner(cfg))
}

fn run_inner(cfg: &AuditConfig) -> Result<AuditReport> {
    let pool = Pool::new(cfg);
    let probing = Probing::new(cfg.grid_denominators.clone());
    let pools: Vec<(PostulateId, Vec<Fixture>)> = CORE.iter().map(|&p| (p, pool.fixtures(p))).collect();
    let singles = pool.singleton_fixtures();
    let inputs = pool.input_fixtures();

    let mut matrix = Vec::new();
    let mut p6_combined = Vec::new();
    let mut p6_family = Vec::new();
    for &rule in &cfg.rules {
        let mut row: Vec<(PostulateId, Verdict)> = pools
            .iter()
            .map(|(pid, fixtures)| (*pid, check_core_postulate(*pid, rule, fixtures, &probing)))
            .collect();
        let p6 = check_p6(rule, cfg, &pool, &probing)?;
        row.push((PostulateId::P6Prime, p6.prime));
        row.push((PostulateId::P6DoublePrime, p6.double_prime));
        row.push((PostulateId::P6Star, p6.star));
        row.sort_by_key(|(pid, _)| *pid);
        matrix.extend(row.into_iter().map(|(pid, v)| (rule, pid, v)));
        p6_combined.push((rule, p6.combined));
        p6_family.push(P6Family { rule, family: p6.family, pool_constant: p6.pool_constant, implication: p6.implication });
    }

    let supprob_tables: Vec<SupProbTable> =
        cfg.rules.iter().map(|&r| supprob_table(r, &singles)).collect::<Result<_>>()?;

    let mut propositions = Vec::new();
    for which in Proposition::ALL {
        for (rule, table) in cfg.rules.iter().zip(&supprob_tables) {
            let unmet = which
                .hypotheses()
                .iter()
                .copied()
                .filter(|&pid| !matrix.iter().any(|(r, p, v)| r == rule && *p == pid && v.is_pass()))
                .collect();
            let verdict = match which {
                Proposition::VWellDefined | Proposition::VMonotone => check_on_table(which, table),
                _ => check_proposition(which, *rule, &singles),
            };
            propositions.push(PropositionResult { proposition: which, rule: *rule, unmet, verdict });
        }
    }

    let emptiness_census = cfg.rules.iter().map(|&r| census(r, &inputs)).collect::<Result<_>>()?;

    Ok(AuditReport {
        config: cfg.clone(),
        matrix,
        p6_combined,
        p6_family,
        supprob_tables,
        propositions,
        emptiness_census,
        open_flags: open_flags(),
    })
}
