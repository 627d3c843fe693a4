//! Line-oriented interactive loop.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use cartprl_core::dynamics::{eval_traced, Trace, DEFAULT_FUEL};
use cartprl_core::refiner::ProofState;
use cartprl_core::syntax::GoalId;
use cartprl_core::tactics::{run_tactic, Tactic};

use crate::check::check_signature;
use crate::parser::{parse_signature, parse_tactic_in, parse_term_in, Signature};

const HELP: &str = "\
commands:
  load <file>            parse and check a signature file
  prove <thm>            start proving a theorem of the loaded file
  goal <term>            start proving an arbitrary statement
  show                   open goals and the partial extract
  rules [goal]           rules applicable to a goal
  apply [goal] <rule>    apply one rule, e.g. `apply 0 bool/elim(x)`
  tac [goal] <tactic>    run a tactic script
  undo                   revert the last change
  extract                the extract of a finished proof
  eval [--trace] [--fuel N] <term>
  help, quit";

pub struct Repl {
    sig: Signature,
    proof: Option<(String, ProofState)>,
}

impl Default for Repl {
    fn default() -> Self {
        Repl::new()
    }
}

impl Repl {
    pub fn new() -> Repl {
        Repl {
            sig: Signature::default(),
            proof: None,
        }
    }

    pub fn run(&mut self, input: impl BufRead, mut out: impl Write) -> std::io::Result<()> {
        write!(out, "> ")?;
        out.flush()?;
        for line in input.lines() {
            let line = line?;
            let line = line.trim();
            if line == "quit" || line == "exit" {
                break;
            }
            if !line.is_empty() {
                writeln!(out, "{}", self.command(line))?;
            }
            write!(out, "> ")?;
            out.flush()?;
        }
        writeln!(out)
    }

    /// Executes one command and returns what to print.
    pub fn command(&mut self, line: &str) -> String {
        let (cmd, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match cmd {
            "help" => HELP.into(),
            "load" => self.load(rest),
            "prove" => match self.sig.theorem(rest) {
                Some((statement, _)) => {
                    self.proof = Some((rest.to_string(), ProofState::for_statement(statement.clone())));
                    self.show()
                }
                None => format!("no theorem named `{rest}`"),
            },
            "goal" => match parse_term_in(&self.sig, rest) {
                Ok(t) => {
                    self.proof = Some(("goal".into(), ProofState::for_statement(t)));
                    self.show()
                }
                Err(e) => format!("parse error at {e}"),
            },
            "show" => self.show(),
            "rules" => self.with_goal(rest, |_, state, g, _| {
                let rules: Vec<String> = state.applicable_rules(g).iter().map(ToString::to_string).collect();
                Err(if rules.is_empty() { "no rule applies".into() } else { rules.join("\n") })
            }),
            "apply" | "tac" => self.with_goal(rest, |sig, state, g, text| {
                let t = parse_tactic_in(sig, text).map_err(|e| format!("parse error at {e}"))?;
                if cmd == "apply" {
                    let Tactic::Rule(r) = t else {
                        return Err("`apply` takes a single rule; use `tac` for scripts".into());
                    };
                    state.apply_rule(g, &r).map_err(|e| e.to_string())
                } else {
                    run_tactic(state, g, &t).map_err(|e| e.to_string())
                }
            }),
            "undo" => match &mut self.proof {
                Some((_, state)) => match state.undo() {
                    Some(prev) => {
                        *state = prev;
                        self.show()
                    }
                    None => "nothing to undo".into(),
                },
                None => "no proof in progress".into(),
            },
            "extract" => match &self.proof {
                Some((_, state)) => match state.extract() {
                    Ok(m) => m.to_string(),
                    Err(e) => format!("{e}; so far: {}", state.partial_extract()),
                },
                None => "no proof in progress".into(),
            },
            "eval" => self.eval(rest),
            _ => format!("unknown command `{cmd}`; try `help`"),
        }
    }

    fn load(&mut self, path: &str) -> String {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return format!("cannot read {path}: {e}"),
        };
        match parse_signature(&text) {
            Ok(sig) => {
                let report = check_signature(&sig, DEFAULT_FUEL);
                self.sig = sig;
                self.proof = None;
                report.to_string()
            }
            Err(e) => format!("{path}:{e}"),
        }
    }

    fn show(&self) -> String {
        let Some((name, state)) = &self.proof else {
            return "no proof in progress".into();
        };
        let mut out = String::new();
        let goals = state.open_goals();
        if goals.is_empty() {
            let _ = writeln!(out, "{name}: no goals left");
        } else {
            let _ = writeln!(out, "{name}: {} goal(s)", goals.len());
        }
        for g in goals {
            let _ = writeln!(out, "[{g}] {}", state.goal(&g).expect("open goal"));
        }
        let _ = write!(out, "extract: {}", state.partial_extract());
        out
    }

    /// Splits an optional leading goal id off `args`, defaulting to the first
    /// open goal, and replaces the proof state with the result of `f`.
    /// `Err` text is printed without touching the state.
    fn with_goal(
        &mut self,
        args: &str,
        f: impl FnOnce(&Signature, &ProofState, &GoalId, &str) -> Result<ProofState, String>,
    ) -> String {
        let Some((_, state)) = &self.proof else {
            return "no proof in progress".into();
        };
        let (first, tail) = args.split_once(char::is_whitespace).unwrap_or((args, ""));
        let (goal, text) = match GoalId::parse(first) {
            Some(g) => (g, tail.trim()),
            None => match state.open_goals().into_iter().next() {
                Some(g) => (g, args),
                None => return "no open goals".into(),
            },
        };
        if !state.is_open(&goal) {
            return format!("goal {goal} is not open");
        }
        match f(&self.sig, state, &goal, text) {
            Ok(next) => {
                self.proof.as_mut().expect("proof in progress").1 = next;
                self.show()
            }
            Err(msg) => msg,
        }
    }

    fn eval(&self, args: &str) -> String {
        let mut words = args;
        let mut trace = false;
        let mut fuel = DEFAULT_FUEL;
        loop {
            let (w, tail) = words.split_once(char::is_whitespace).unwrap_or((words, ""));
            match w {
                "--trace" => trace = true,
                "--fuel" => {
                    let (n, tail2) = tail.trim_start().split_once(char::is_whitespace).unwrap_or((tail.trim_start(), ""));
                    match n.parse() {
                        Ok(n) => fuel = n,
                        Err(_) => return format!("bad fuel `{n}`"),
                    }
                    words = tail2.trim_start();
                    continue;
                }
                _ => break,
            }
            words = tail.trim_start();
        }
        let m = match parse_term_in(&self.sig, words) {
            Ok(m) => m,
            Err(e) => return format!("parse error at {e}"),
        };
        let (result, t) = eval_traced(&m, fuel);
        let mut out = if trace { show_trace(&t) } else { String::new() };
        match result {
            Ok(v) => {
                let _ = write!(out, "{v}  ({} steps)", t.entries.len() - 1);
            }
            Err(e) => {
                let _ = write!(out, "evaluation failed: {e}");
            }
        }
        out
    }
}

/// One line per step, marking stable and unstable steps.
pub fn show_trace(t: &Trace) -> String {
    let mut out = String::new();
    for (k, e) in t.entries.iter().enumerate() {
        let mark = match e.stable {
            None => "       ",
            Some(true) => "stable ",
            Some(false) => "UNSTABLE",
        };
        let _ = writeln!(out, "  {k:>3} {mark} {}", e.term);
    }
    out
}
