//! Batch checking of signatures.

use std::fmt;

use cartprl_core::dynamics::{eval_traced, Trace};
use cartprl_core::refiner::{Concl, ProofState, Sequent};
use cartprl_core::semantics::{check_closed, ClosedJudgment, Verdict};
use cartprl_core::syntax::{GoalId, Term};
use cartprl_core::tactics::{run_tactic, Tactic};
use serde_json::{json, Value};

use crate::lexer::Pos;
use crate::parser::{DeclKind, Signature};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ok(Term),
    OpenGoals(Vec<(GoalId, Sequent)>),
    Error(String, Pos),
}

impl Outcome {
    pub fn is_ok(&self) -> bool {
        matches!(self, Outcome::Ok(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub name: String,
    /// `def`, `thm` or `tactic`.
    pub kind: &'static str,
    pub outcome: Outcome,
}

/// One entry per declaration, in declaration order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReport {
    pub entries: Vec<Entry>,
}

impl CheckReport {
    pub fn all_ok(&self) -> bool {
        self.entries.iter().all(|e| e.outcome.is_ok())
    }

    pub fn get(&self, name: &str) -> Option<&Outcome> {
        self.entries.iter().find(|e| e.name == name).map(|e| &e.outcome)
    }

    pub fn to_json(&self) -> Value {
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|e| {
                let mut v = json!({ "name": e.name, "kind": e.kind });
                match &e.outcome {
                    Outcome::Ok(m) => {
                        v["status"] = json!("ok");
                        v["extract"] = json!(m.to_string());
                    }
                    Outcome::OpenGoals(goals) => {
                        v["status"] = json!("open");
                        v["goals"] = goals_json(goals);
                    }
                    Outcome::Error(msg, pos) => {
                        v["status"] = json!("error");
                        v["message"] = json!(msg);
                        v["line"] = json!(pos.line);
                        v["col"] = json!(pos.col);
                    }
                }
                v
            })
            .collect();
        json!({ "ok": self.all_ok(), "declarations": entries })
    }
}

pub fn goals_json(goals: &[(GoalId, Sequent)]) -> Value {
    goals
        .iter()
        .map(|(id, s)| json!({ "id": id.to_string(), "form": s.concl.form(), "sequent": s.to_string() }))
        .collect()
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            match &e.outcome {
                Outcome::Ok(_) if e.kind == "tactic" => writeln!(f, "ok     tactic {}", e.name)?,
                Outcome::Ok(m) => {
                    writeln!(f, "ok     {} {}", e.kind, e.name)?;
                    writeln!(f, "       extract: {m}")?;
                }
                Outcome::OpenGoals(goals) => {
                    writeln!(f, "open   {} {}: {} unsolved goal(s)", e.kind, e.name, goals.len())?;
                    for (id, s) in goals {
                        writeln!(f, "       [{id}] {s}")?;
                    }
                }
                Outcome::Error(msg, pos) => writeln!(f, "error  {} {} at {pos}: {msg}", e.kind, e.name)?,
            }
        }
        let failed = self.entries.iter().filter(|e| !e.outcome.is_ok()).count();
        write!(f, "{} declaration(s), {} not ok", self.entries.len(), failed)
    }
}

/// Checks every declaration; failures are recorded and checking goes on.
pub fn check_signature(sig: &Signature, fuel: u64) -> CheckReport {
    let entries = sig
        .decls
        .iter()
        .map(|d| {
            let (kind, outcome) = match &d.kind {
                DeclKind::Thm { statement, script } => ("thm", check_theorem(statement, script, d.pos)),
                DeclKind::Def { ty, body } => ("def", check_def(ty, body, fuel, d.pos)),
                DeclKind::TacticDef(_) => ("tactic", Outcome::Ok(Term::Ax)),
            };
            Entry {
                name: d.name.clone(),
                kind,
                outcome,
            }
        })
        .collect();
    CheckReport { entries }
}

pub fn check_theorem(statement: &Term, script: &Tactic, pos: Pos) -> Outcome {
    let state = ProofState::for_statement(statement.clone());
    match run_tactic(&state, &GoalId::root(), script) {
        Err(e) => Outcome::Error(e.to_string(), pos),
        Ok(s) => match s.extract() {
            Ok(m) => Outcome::Ok(m),
            Err(_) => Outcome::OpenGoals(open_goals(&s)),
        },
    }
}

pub fn open_goals(s: &ProofState) -> Vec<(GoalId, Sequent)> {
    s.open_goals()
        .into_iter()
        .map(|g| {
            let seq = s.goal(&g).expect("open goal");
            (g, seq)
        })
        .collect()
}

/// A definition is accepted when the refiner proves `body in ty` by
/// evaluation and `auto`, or failing that when the oracle says it holds.
pub fn check_def(ty: &Term, body: &Term, fuel: u64, pos: Pos) -> Outcome {
    let state = ProofState::new(Sequent::new(Concl::Mem(ty.clone(), body.clone())));
    let pipeline = Tactic::seq(Tactic::or_else(Tactic::rule("eq/eval"), Tactic::Id), Tactic::auto());
    let s = run_tactic(&state, &GoalId::root(), &pipeline).expect("evaluation and auto never fail");
    if s.is_complete() {
        return Outcome::Ok(body.clone());
    }
    match check_closed(&ClosedJudgment::Mem(ty.clone(), body.clone()), fuel) {
        Verdict::Holds => Outcome::Ok(body.clone()),
        Verdict::Fails(why) => Outcome::Error(format!("`{body}` is not a member of `{ty}`: {why}"), pos),
        Verdict::Unknown(_) => Outcome::OpenGoals(open_goals(&s)),
    }
}

/// Evaluates a closed extract for `--trace` output.
pub fn trace_extract(m: &Term, fuel: u64) -> Option<(Result<Term, String>, Trace)> {
    if !m.free_vars().is_empty() || m.has_metas() {
        return None;
    }
    let (r, trace) = eval_traced(m, fuel);
    Some((r.map_err(|e| e.to_string()), trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_signature;

    #[test]
    fn theorem_outcomes() {
        let sig = parse_signature(
            "thm id : (x : bool) -> bool by { lam x => use x }\n\
             thm bad : bool by { use y }\n\
             thm half : bool -> bool by { pi/intro; [use x, id] }",
        )
        .unwrap();
        let r = check_signature(&sig, 10_000);
        assert_eq!(r.get("id"), Some(&Outcome::Ok(Term::lam("x", Term::var("x")))));
        assert!(matches!(r.get("bad"), Some(Outcome::Error(_, p)) if p.line == 2));
        match r.get("half") {
            Some(Outcome::OpenGoals(goals)) => {
                assert_eq!(goals.len(), 1);
                assert_eq!(goals[0].1.concl.form(), "type");
            }
            other => panic!("{other:?}"),
        }
        assert!(!r.all_ok());
    }

    #[test]
    fn definitions_are_checked_by_evaluation_or_the_oracle() {
        let sig = parse_signature(
            "def b : bool = if tt then ff else tt\n\
             def n : bool -> bool = \\x. if x then ff else tt\n\
             def wrong : bool = base",
        )
        .unwrap();
        let r = check_signature(&sig, 10_000);
        assert!(r.get("b").unwrap().is_ok());
        assert!(r.get("n").unwrap().is_ok());
        assert!(matches!(r.get("wrong"), Some(Outcome::Error(..))));
    }
}
