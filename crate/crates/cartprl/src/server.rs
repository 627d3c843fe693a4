//! Session server: interactive refinement over a local TCP socket.
//!
//! Messages are JSON documents framed by a `Content-Length: N` header and a
//! blank line, in both directions. See `docs/protocol.md`.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use cartprl_core::dynamics::{eval_traced, DEFAULT_FUEL};
use cartprl_core::refiner::{ProofState, Role};
use cartprl_core::syntax::GoalId;
use cartprl_core::tactics::run_tactic;
use serde_json::{json, Value};

use crate::check::{check_signature, goals_json, open_goals};
use crate::parser::{parse_signature, parse_tactic_in, parse_term_in, ParseError, Signature};

/// Interactive state for one loaded signature file.
pub struct Session {
    sig: Signature,
    /// One proof per theorem, each carrying its own undo journal.
    proofs: BTreeMap<String, ProofState>,
    focus: Option<String>,
    version: u64,
}

struct Failure {
    code: &'static str,
    message: String,
    data: Value,
}

type Reply = Result<Value, Failure>;

fn bad_request(message: impl Into<String>) -> Failure {
    Failure {
        code: "BadRequest",
        message: message.into(),
        data: Value::Null,
    }
}

fn parse_failed(e: &ParseError) -> Failure {
    Failure {
        code: "ParseFailed",
        message: e.to_string(),
        data: json!({ "line": e.line, "col": e.col, "expected": e.expected }),
    }
}

fn str_param<'a>(params: &'a Value, key: &str) -> Result<&'a str, Failure> {
    params
        .get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| bad_request(format!("missing string parameter `{key}`")))
}

fn goal_param(params: &Value) -> Result<GoalId, Failure> {
    let g = str_param(params, "goal")?;
    GoalId::parse(g).ok_or_else(|| bad_request(format!("`{g}` is not a goal id")))
}

/// All sessions; requests on one session are serialized by its lock.
#[derive(Default)]
pub struct Server {
    sessions: Mutex<BTreeMap<String, Arc<Mutex<Session>>>>,
    next: AtomicU64,
}

impl Server {
    pub fn new() -> Server {
        Server::default()
    }

    /// Handles one request document and returns the response document.
    pub fn handle(&self, req: &Value) -> Value {
        let id = req.get("id").cloned().unwrap_or(Value::Null);
        let reply = match req.get("method").and_then(Value::as_str) {
            None => Err(bad_request("missing `method`")),
            Some(method) => {
                let params = req.get("params").cloned().unwrap_or_else(|| json!({}));
                self.dispatch(method, &params)
            }
        };
        match reply {
            Ok(result) => json!({ "id": id, "result": result }),
            Err(f) => {
                let mut error = json!({ "code": f.code, "message": f.message });
                if !f.data.is_null() {
                    error["data"] = f.data;
                }
                json!({ "id": id, "error": error })
            }
        }
    }

    /// Text in, text out; malformed JSON gets a `BadRequest` response.
    pub fn handle_text(&self, body: &str) -> String {
        let response = match serde_json::from_str::<Value>(body) {
            Ok(req) => self.handle(&req),
            Err(e) => json!({ "id": null, "error": { "code": "BadRequest", "message": format!("invalid JSON: {e}") } }),
        };
        response.to_string()
    }

    fn dispatch(&self, method: &str, params: &Value) -> Reply {
        match method {
            "session/new" => self.new_session(params),
            "eval" => {
                let session = match params.get("session") {
                    Some(_) => Some(self.session(params)?),
                    None => None,
                };
                let sig = session.map(|s| s.lock().expect("session lock").sig.clone()).unwrap_or_default();
                eval(&sig, params)
            }
            "goal/list" | "goal/show" | "tactic/apply" | "undo" | "extract" => {
                let session = self.session(params)?;
                let mut s = session.lock().expect("session lock");
                match method {
                    "goal/list" => s.goal_list(params),
                    "goal/show" => s.goal_show(params),
                    "tactic/apply" => s.tactic_apply(params),
                    "undo" => s.undo(params),
                    _ => s.extract(params),
                }
            }
            other => Err(bad_request(format!("unknown method `{other}`"))),
        }
    }

    fn session(&self, params: &Value) -> Result<Arc<Mutex<Session>>, Failure> {
        let token = str_param(params, "session")?;
        self.sessions
            .lock()
            .expect("session table lock")
            .get(token)
            .cloned()
            .ok_or_else(|| bad_request(format!("unknown session `{token}`")))
    }

    fn new_session(&self, params: &Value) -> Reply {
        let text = str_param(params, "text")?;
        let sig = parse_signature(text).map_err(|e| parse_failed(&e))?;
        let report = check_signature(&sig, DEFAULT_FUEL);
        let proofs: BTreeMap<String, ProofState> = sig
            .decls
            .iter()
            .filter_map(|d| {
                let (statement, _) = sig.theorem(&d.name)?;
                Some((d.name.clone(), ProofState::for_statement(statement.clone())))
            })
            .collect();
        let theorems: Vec<&str> = sig.theorem_names();
        let focus = theorems.first().map(|s| s.to_string());
        let token = format!("s{}", self.next.fetch_add(1, Ordering::SeqCst) + 1);
        let result = json!({
            "session": token,
            "version": 0,
            "theorems": theorems,
            "focus": focus,
            "report": report.to_json(),
        });
        let session = Session {
            sig,
            proofs,
            focus,
            version: 0,
        };
        self.sessions
            .lock()
            .expect("session table lock")
            .insert(token, Arc::new(Mutex::new(session)));
        Ok(result)
    }
}

impl Session {
    /// The theorem named by `params.theorem`, which becomes the focus, or
    /// the current focus.
    fn theorem(&mut self, params: &Value) -> Result<String, Failure> {
        if let Some(name) = params.get("theorem") {
            let name = name.as_str().ok_or_else(|| bad_request("`theorem` must be a string"))?;
            if !self.proofs.contains_key(name) {
                return Err(bad_request(format!("no theorem named `{name}`")));
            }
            self.focus = Some(name.to_string());
        }
        self.focus.clone().ok_or_else(|| bad_request("the file declares no theorems"))
    }

    fn check_version(&self, params: &Value) -> Result<(), Failure> {
        let v = params
            .get("version")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad_request("missing integer parameter `version`"))?;
        if v != self.version {
            return Err(Failure {
                code: "StaleVersion",
                message: format!("request is for version {v}, the session is at version {}", self.version),
                data: json!({ "current": self.version }),
            });
        }
        Ok(())
    }

    fn listing(&self, name: &str) -> Value {
        let state = &self.proofs[name];
        let tree: Vec<Value> = state
            .nodes()
            .map(|(id, node)| {
                let seq = state.goal(id).expect("node exists");
                json!({
                    "id": id.to_string(),
                    "role": role_name(node.role),
                    "sequent": seq.to_string(),
                    "rule": node.solution.as_ref().map(|s| s.rule.to_string()),
                    "children": node.solution.as_ref().map(|s| s.children.iter().map(ToString::to_string).collect::<Vec<_>>()).unwrap_or_default(),
                })
            })
            .collect();
        json!({
            "version": self.version,
            "theorem": name,
            "goals": goals_json(&open_goals(state)),
            "tree": tree,
            "extract": state.partial_extract().to_string(),
            "complete": state.is_complete(),
        })
    }

    fn goal_list(&mut self, params: &Value) -> Reply {
        let name = self.theorem(params)?;
        Ok(self.listing(&name))
    }

    fn goal_show(&mut self, params: &Value) -> Reply {
        let name = self.theorem(params)?;
        let g = goal_param(params)?;
        let state = &self.proofs[&name];
        let (Some(seq), Some(node)) = (state.goal(&g), state.node(&g)) else {
            return Err(bad_request(format!("no goal {g} in `{name}`")));
        };
        let hyps: Vec<Value> = seq
            .hyps
            .iter()
            .map(|h| json!({ "name": h.name.to_string(), "type": h.ty.to_string(), "kind": h.kind.name() }))
            .collect();
        let rules: Vec<String> = if state.is_open(&g) {
            state.applicable_rules(&g).iter().map(ToString::to_string).collect()
        } else {
            Vec::new()
        };
        Ok(json!({
            "version": self.version,
            "theorem": name,
            "goal": g.to_string(),
            "open": state.is_open(&g),
            "role": role_name(node.role),
            "sequent": seq.to_string(),
            "dims": seq.dims.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "hyps": hyps,
            "concl": seq.concl.to_string(),
            "form": seq.concl.form(),
            "rules": rules,
        }))
    }

    fn tactic_apply(&mut self, params: &Value) -> Reply {
        let name = self.theorem(params)?;
        self.check_version(params)?;
        let g = goal_param(params)?;
        let script = str_param(params, "script")?;
        let t = parse_tactic_in(&self.sig, script).map_err(|e| parse_failed(&e))?;
        let state = &self.proofs[&name];
        if !state.is_open(&g) {
            return Err(bad_request(format!("goal {g} is not open")));
        }
        let next = run_tactic(state, &g, &t).map_err(|e| Failure {
            code: "TacticFailed",
            message: e.to_string(),
            data: json!({ "path": e.path() }),
        })?;
        self.proofs.insert(name.clone(), next);
        self.version += 1;
        Ok(self.listing(&name))
    }

    fn undo(&mut self, params: &Value) -> Reply {
        let name = self.theorem(params)?;
        self.check_version(params)?;
        let prev = self.proofs[&name]
            .undo()
            .ok_or_else(|| bad_request(format!("nothing to undo in `{name}`")))?;
        self.proofs.insert(name.clone(), prev);
        self.version += 1;
        Ok(self.listing(&name))
    }

    fn extract(&mut self, params: &Value) -> Reply {
        let name = self.theorem(params)?;
        let state = &self.proofs[&name];
        let open: Vec<String> = state.open_goals().iter().map(ToString::to_string).collect();
        Ok(json!({
            "theorem": name,
            "complete": open.is_empty(),
            "extract": state.partial_extract().to_string(),
            "open": open,
        }))
    }
}

fn role_name(r: Role) -> &'static str {
    match r {
        Role::Main => "main",
        Role::Aux => "aux",
    }
}

fn eval(sig: &Signature, params: &Value) -> Reply {
    let text = str_param(params, "term")?;
    let fuel = match params.get("fuel") {
        None => DEFAULT_FUEL,
        Some(v) => v.as_u64().ok_or_else(|| bad_request("`fuel` must be a non-negative integer"))?,
    };
    let m = parse_term_in(sig, text).map_err(|e| parse_failed(&e))?;
    let (result, t) = eval_traced(&m, fuel);
    let trace: Vec<Value> = t
        .entries
        .iter()
        .map(|e| json!({ "term": e.term.to_string(), "stable": e.stable }))
        .collect();
    match result {
        Ok(v) => Ok(json!({ "value": v.to_string(), "steps": trace.len() - 1, "trace": trace })),
        Err(e) => Err(Failure {
            code: "EvalFailed",
            message: e.to_string(),
            data: json!({ "trace": trace }),
        }),
    }
}

/// Reads one framed message; `None` at a clean end of stream.
pub fn read_message(r: &mut impl BufRead) -> std::io::Result<Option<String>> {
    let mut length = None;
    let mut line = String::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return if length.is_none() {
                Ok(None)
            } else {
                Err(std::io::Error::new(std::io::ErrorKind::UnexpectedEof, "stream ended inside a header"))
            };
        }
        let l = line.trim_end_matches(['\r', '\n']);
        if l.is_empty() {
            if length.is_some() {
                break;
            }
            continue;
        }
        if let Some((key, value)) = l.split_once(':') {
            if key.trim().eq_ignore_ascii_case("content-length") {
                let n = value
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidData, "bad Content-Length"))?;
                length = Some(n);
            }
        }
    }
    let mut body = vec![0; length.expect("header seen")];
    r.read_exact(&mut body)?;
    String::from_utf8(body)
        .map(Some)
        .map_err(|_| std::io::Error::new(std::io::ErrorKind::InvalidData, "body is not UTF-8"))
}

pub fn write_message(w: &mut impl Write, body: &str) -> std::io::Result<()> {
    write!(w, "Content-Length: {}\r\n\r\n{body}", body.len())?;
    w.flush()
}

fn connection(server: &Server, stream: TcpStream) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = stream;
    while let Some(body) = read_message(&mut reader)? {
        write_message(&mut writer, &server.handle_text(&body))?;
    }
    Ok(())
}

/// Accepts connections forever, one thread per connection. Sessions are
/// shared between connections.
pub fn serve_on(listener: TcpListener, server: Arc<Server>) -> std::io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let server = Arc::clone(&server);
        std::thread::spawn(move || {
            let _ = connection(&server, stream);
        });
    }
    Ok(())
}

pub fn serve(port: u16) -> std::io::Result<()> {
    let listener = TcpListener::bind(("127.0.0.1", port))?;
    eprintln!("cartprl: serving on {}", listener.local_addr()?);
    serve_on(listener, Arc::new(Server::new()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn framing_round_trip() {
        let mut buf = Vec::new();
        write_message(&mut buf, "{\"a\":1}").unwrap();
        write_message(&mut buf, "[]").unwrap();
        let mut r = std::io::Cursor::new(buf);
        assert_eq!(read_message(&mut r).unwrap().as_deref(), Some("{\"a\":1}"));
        assert_eq!(read_message(&mut r).unwrap().as_deref(), Some("[]"));
        assert_eq!(read_message(&mut r).unwrap(), None);
    }

    #[test]
    fn malformed_requests_get_structured_errors() {
        let s = Server::new();
        let r: Value = serde_json::from_str(&s.handle_text("{nope")).unwrap();
        assert_eq!(r["error"]["code"], "BadRequest");
        let r = s.handle(&json!({ "id": 3, "method": "goal/list", "params": { "session": "s9" } }));
        assert_eq!(r["id"], 3);
        assert_eq!(r["error"]["code"], "BadRequest");
    }
}
