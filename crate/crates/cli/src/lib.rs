//! Command-line front end: single updates, supprob values, audits, report
//! rendering and belief-function queries.

pub mod golden;
pub mod input;
pub mod render;
pub mod replay;
pub mod update;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use credal_core::audit::{run_matrix, supprob_eval, AuditConfig};
use credal_core::belief::{
    dempster_conditional, dominated_set, fh_closed_form, gs_check, lower_envelope, ml_dempster_check, MlDempster,
};
use credal_core::credal::{constraint_to_json, CredalSet};
use credal_core::error::Error;
use credal_core::measure::{Event, Measure, MeasureSpace};
use credal_core::rational::fmt_rational;
use serde_json::Value;

use input::{InputError, Parsed};
use render::Format;
use update::{ShiftOrder, UpdateRequest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "credal-audit", version, about = "Update rules for sets of probability measures, audited against postulates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply one rule to one set.
    Update(UpdateArgs),
    /// Evaluate sup Pr'(A) / Pr(A|B) for one measure.
    Supprob(SupprobArgs),
    /// Run every rule against every postulate and write the report.
    Audit(AuditArgs),
    /// Render a stored report.
    Render(RenderArgs),
    /// Belief-function queries.
    #[command(subcommand)]
    Belief(BeliefCommand),
}

#[derive(Debug, Args)]
pub struct UpdateArgs {
    /// JSON array of atom labels, or an atom count.
    #[arg(long)]
    pub space: String,
    /// Credal set as JSON.
    #[arg(long, required_unless_present = "measure", conflicts_with = "measure")]
    pub x: Option<String>,
    /// A single measure: `uniform`, `(p1, ..., pn)` or a JSON object.
    #[arg(long)]
    pub measure: Option<String>,
    #[arg(long)]
    pub rule: String,
    /// Evidence event as a JSON array of labels; repeat to update in sequence.
    #[arg(long, required = true)]
    pub evidence: Vec<String>,
    /// Push the input through this shift before updating.
    #[arg(long, conflicts_with = "pushforward_last")]
    pub pushforward_first: Option<String>,
    /// Update by the evidence preimages, then push the result through this shift.
    #[arg(long)]
    pub pushforward_last: Option<String>,
    /// Update each member separately and take the union.
    #[arg(long)]
    pub pointwise: bool,
    /// Report whether this measure lies in the input and in the result.
    #[arg(long)]
    pub member: Vec<String>,
    /// Report the range of this event's probability over the input and the result.
    #[arg(long)]
    pub prob: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SupprobArgs {
    #[arg(long)]
    pub rule: String,
    /// Defaults to atoms `a, b, c, ...` (or `1, 2, ...` when the events use numbers).
    #[arg(long)]
    pub space: Option<String>,
    #[arg(long)]
    pub measure: String,
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub b: String,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// `all` or a comma-separated list.
    #[arg(long, default_value = "all")]
    pub rules: String,
    #[arg(long, default_value_t = 4)]
    pub max_atoms: usize,
    /// `N` for denominators 1..=N, or a comma-separated list.
    #[arg(long, default_value = "4")]
    pub grid: String,
    #[arg(long, default_value_t = 8)]
    pub family_depth: usize,
    /// Divergence threshold for the P6'' family probe, as `p/q`.
    #[arg(long, default_value = "100")]
    pub threshold: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Extra seeded random finite fixtures.
    #[arg(long, default_value_t = 0)]
    pub random_fixtures: usize,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Golden matrix to compare against; any mismatch exits with status 1.
    #[arg(long)]
    pub expect: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    pub report: PathBuf,
    #[arg(long, value_enum, default_value = "markdown")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum BeliefCommand {
    /// Lower envelope of the dominated set, optionally conditioned.
    Envelope {
        #[arg(long)]
        space: String,
        /// JSON array of `{event, mass}`.
        #[arg(long)]
        mass: String,
        #[arg(long)]
        a: String,
        #[arg(long)]
        given: Option<String>,
    },
    /// Dempster's rule of conditioning.
    Dempster {
        #[arg(long)]
        space: String,
        #[arg(long)]
        mass: String,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// The set of measures dominating Bel.
    Dominated {
        #[arg(long)]
        space: String,
        #[arg(long)]
        mass: String,
    },
    /// Gilboa–Schmeidler conditions, then maximum likelihood against Dempster.
    MlCheck {
        #[arg(long)]
        space: String,
        #[arg(long)]
        x: String,
        #[arg(long)]
        b: String,
    },
}

/// What a command produced: output lines and verdict mismatches.
#[derive(Debug, Default)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub mismatches: Vec<String>,
}

impl From<Vec<String>> for Outcome {
    fn from(lines: Vec<String>) -> Self {
        Self { lines, mismatches: Vec::new() }
    }
}

fn core(e: Error) -> InputError {
    InputError { message: e.to_string() }
}

fn update(args: &UpdateArgs) -> Parsed<Outcome> {
    let space = input::space(&args.space)?;
    let x = match (&args.x, &args.measure) {
        (Some(x), _) => input::credal_set(&space, x)?,
        (None, Some(m)) => CredalSet::singleton(&input::measure("measure", &space, m)?),
        (None, None) => return Err(InputError::flag("x", "one of --x or --measure is required")),
    };
    let shift = match (&args.pushforward_first, &args.pushforward_last) {
        (Some(f), _) => Some((ShiftOrder::First, input::shift("pushforward-first", &space, f)?)),
        (None, Some(f)) => Some((ShiftOrder::Last, input::shift("pushforward-last", &space, f)?)),
        (None, None) => None,
    };
    let out_space = shift.as_ref().map_or(&space, |(_, f)| f.target()).clone();
    let events = |name, raw: &[String]| raw.iter().map(|e| input::event(name, &out_space, e)).collect::<Parsed<Vec<_>>>();
    let req = UpdateRequest {
        x,
        rule: input::rule(&args.rule)?,
        evidence: events("evidence", &args.evidence)?,
        shift,
        pointwise: args.pointwise,
        members: args.member.iter().map(|m| input::measure("member", &out_space, m)).collect::<Parsed<_>>()?,
        probs: events("prob", &args.prob)?,
    };
    Ok(update::render_update(&req).map_err(core)?.into())
}

/// Labels mentioned by an event argument, if it parses as an array of strings.
fn labels(text: &str) -> Vec<String> {
    serde_json::from_str::<Vec<String>>(text).unwrap_or_default()
}

fn default_space(args: &SupprobArgs) -> Parsed<MeasureSpace> {
    let m = args.measure.trim();
    if let Ok(Value::Object(obj)) = serde_json::from_str::<Value>(m) {
        return MeasureSpace::new(obj.keys().cloned()).map_err(|e| InputError::flag("measure", e));
    }
    let n = m.strip_prefix('(').and_then(|t| t.strip_suffix(')')).map(|t| t.split(',').count());
    let Some(n) = n.filter(|&n| n > 0) else {
        return Err(InputError::flag("space", "--space is required unless --measure is a tuple or JSON object"));
    };
    let numeric = labels(&args.a).iter().chain(&labels(&args.b)).all(|l| l.parse::<usize>().is_ok());
    if numeric || n > 26 {
        return Ok(MeasureSpace::numbered(n));
    }
    MeasureSpace::new((0..n).map(|i| char::from(b'a' + i as u8).to_string())).map_err(|e| InputError::flag("space", e))
}

fn supprob(args: &SupprobArgs) -> Parsed<Outcome> {
    let space = match &args.space {
        Some(s) => input::space(s)?,
        None => default_space(args)?,
    };
    let pr = input::measure("measure", &space, &args.measure)?;
    let a = input::event("a", &space, &args.a)?;
    let b = input::event("b", &space, &args.b)?;
    let v = supprob_eval(input::rule(&args.rule)?, &pr, &a, &b).map_err(core)?;
    Ok(vec![v.to_string()].into())
}

fn audit(args: &AuditArgs) -> Parsed<Outcome> {
    let cfg = AuditConfig {
        rules: input::rules(&args.rules)?,
        max_atoms: args.max_atoms,
        grid_denominators: input::grid(&args.grid)?,
        family_depth: args.family_depth,
        divergence_threshold: input::rational("threshold", &args.threshold)?,
        rng_seed: args.seed,
        random_fixtures: args.random_fixtures,
    };
    cfg.validate().map_err(core)?;
    let golden = args.expect.as_deref().map(input::read_json).transpose()?;
    let report = run_matrix(&cfg).map_err(core)?.to_json();
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    let mut outcome = Outcome::default();
    match &args.out {
        Some(path) => {
            std::fs::write(path, &text).map_err(|e| InputError::at(&input::Origin::File(path.display().to_string()), 1, None, e))?;
            outcome.lines.push(format!("wrote {}", path.display()));
        }
        None => outcome.lines.push(text.trim_end().to_string()),
    }
    if let (Some(golden), Some(path)) = (golden, &args.expect) {
        outcome.mismatches = golden::mismatches(&report, &golden)
            .map_err(|e| InputError::at(&input::Origin::File(path.display().to_string()), 1, None, e))?;
        if outcome.mismatches.is_empty() && args.out.is_some() {
            outcome.lines.push(format!("matches {}", path.display()));
        }
    }
    Ok(outcome)
}

fn render_cmd(args: &RenderArgs) -> Parsed<Outcome> {
    let report = input::read_json(&args.report)?;
    if !report.get("matrix").is_some_and(Value::is_array) {
        let origin = input::Origin::File(args.report.display().to_string());
        return Err(InputError::at(&origin, 1, None, "a report needs a `matrix` array"));
    }
    Ok(vec![render::render(&report, args.format).trim_end().to_string()].into())
}

fn event_line(label: &str, e: &Event) -> String {
    format!("{label} {}", e.to_json())
}

fn belief(cmd: &BeliefCommand) -> Parsed<Outcome> {
    let lines = match cmd {
        BeliefCommand::Envelope { space, mass, a, given } => {
            let space = input::space(space)?;
            let m = input::mass(&space, mass)?;
            let a = input::event("a", &space, a)?;
            let x = dominated_set(&m.belief());
            let mut lines = vec![
                format!("{} = {}", event_line("bel", &a), fmt_rational(&m.bel(&a))),
                format!("{} = {}", event_line("lower", &a), fmt_rational(&lower_envelope(&x, &a, None).map_err(core)?)),
            ];
            if let Some(b) = given {
                let b = input::event("given", &space, b)?;
                let lower = lower_envelope(&x, &a, Some(&b)).map_err(core)?;
                lines.push(format!("lower-given {} = {}", b.to_json(), fmt_rational(&lower)));
                lines.push(format!("closed-form {} = {}", b.to_json(), fmt_rational(&fh_closed_form(&m, &a, &b).map_err(core)?)));
            }
            lines
        }
        BeliefCommand::Dempster { space, mass, a, b } => {
            let space = input::space(space)?;
            let m = input::mass(&space, mass)?;
            let (a, b) = (input::event("a", &space, a)?, input::event("b", &space, b)?);
            let (lo, hi) = dempster_conditional(&m.belief(), &a, &b).map_err(core)?;
            vec![format!("dempster {} given {} = {}..{}", a.to_json(), b.to_json(), fmt_rational(&lo), fmt_rational(&hi))]
        }
        BeliefCommand::Dominated { space, mass } => {
            let space = input::space(space)?;
            let m = input::mass(&space, mass)?;
            let x = dominated_set(&m.belief());
            let mut lines = Vec::new();
            if let CredalSet::Polytope(p) = &x {
                lines.push(format!("polytope {} constraints", p.constraints().len()));
                lines.extend(p.constraints().iter().map(|c| format!("constraint {}", constraint_to_json(c))));
                lines.extend(p.vertices().map_err(core)?.iter().map(|v: &Measure| format!("vertex {}", v.to_json())));
            }
            lines
        }
        BeliefCommand::MlCheck { space, x, b } => {
            let space = input::space(space)?;
            let x = input::credal_set(&space, x)?;
            let b = input::event("b", &space, b)?;
            let gs = gs_check(&x).map_err(core)?;
            let mut lines = vec![
                format!("convex: {}", gs.convex),
                format!("core: {}", gs.is_core),
                format!("two-monotone: {}", gs.two_monotone),
            ];
            lines.extend(gs.diagnostics.iter().map(|d| format!("diagnostic: {d}")));
            match ml_dempster_check(&x, &b) {
                Ok(MlDempster::Agree) => lines.push("ml-dempster: agree".into()),
                Ok(MlDempster::Differ(a, ml, d)) => lines.push(format!(
                    "ml-dempster: differ at {} ml={} dempster={}",
                    a.to_json(),
                    fmt_rational(&ml),
                    fmt_rational(&d)
                )),
                Err(Error::HypothesisNotMet(_)) => lines.push("ml-dempster: not applicable".into()),
                Err(e) => return Err(core(e)),
            }
            lines
        }
    };
    Ok(lines.into())
}

pub fn execute(cli: &Cli) -> Parsed<Outcome> {
    match &cli.command {
        Command::Update(a) => update(a),
        Command::Supprob(a) => supprob(a),
        Command::Audit(a) => audit(a),
        Command::Render(a) => render_cmd(a),
        Command::Belief(c) => belief(c),
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            for line in &outcome.lines {
                let _ = writeln!(out, "{line}");
            }
            for m in &outcome.mismatches {
                let _ = writeln!(err, "mismatch: {m}");
            }
            if outcome.mismatches.is_empty() {
                EXIT_OK
            } else {
                EXIT_MISMATCH
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let argv = std::iter::once("credal-audit").chain(args.iter().copied());
        let code = run_cli(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn supprob_infers_letter_atoms() {
        let (code, out, _) = run(&["supprob", "--rule", "cond", "--measure", "(1/4,1/4,1/2)", "--a", r#"["a"]"#, "--b", r#"["a","b"]"#]);
        assert_eq!(code, 0);
        assert_eq!(out, "1/1\n");
    }

    #[test]
    fn bad_json_is_an_input_error_with_position() {
        let (code, _, err) = run(&["update", "--space", "3", "--measure", "uniform", "--rule", "cond", "--evidence", "[\"1\""]);
        assert_eq!(code, EXIT_INPUT);
        assert!(err.starts_with("error: --evidence:1:"), "{err}");
    }

    #[test]
    fn unknown_rule_is_rejected() {
        let (code, _, err) = run(&["update", "--space", "2", "--measure", "uniform", "--rule", "bayes", "--evidence", r#"["1"]"#]);
        assert_eq!(code, EXIT_INPUT);
        assert!(err.contains("unknown rule"));
    }

    #[test]
    fn dempster_on_a_simple_mass() {
        let mass = r#"[{"event":["1"],"mass":"1/2"},{"event":["1","2","3"],"mass":"1/2"}]"#;
        let (code, out, _) = run(&["belief", "dempster", "--space", "3", "--mass", mass, "--a", r#"["1"]"#, "--b", r#"["1","2"]"#]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), r#"dempster ["1"] given ["1","2"] = 1/2..1/1"#);
    }
}
