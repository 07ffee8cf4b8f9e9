//! Interactive sessions over newline-delimited JSON.
//!
//! Each connection owns one simulation. Every request gets exactly one reply,
//! either a `state` or an `error` message. `init`, `reset` and `snapshot`
//! replies carry the whole edge list (`"full": true`); `step` and
//! `set_params` replies carry only the edges added and removed since the
//! previous reply.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::thread;

use echo_core::graph::triad_census;
use echo_core::metrics::{
    count_opinion_peaks, neighbor_opinion_diversity, opinion_histogram, opinion_partition, screen_entropy,
    segregation_index, state_is_echo_chamber, DEFAULT_PEAK_BINS, DEFAULT_PEAK_MIN_HEIGHT,
};
use echo_core::{Params, ParamsOverrides, SimState};
use serde_json::{json, Map, Value};

use crate::args::ServeArgs;
use crate::error::{CliError, Result};

/// Largest `n` accepted by one `step` request.
pub const MAX_STEPS_PER_REQUEST: u64 = 10_000_000;
/// Largest follower graph a session may create.
pub const MAX_SESSION_EDGES: usize = 2_000_000;

type Edge = (usize, usize);

pub struct Session {
    base: Params,
    state: Option<SimState>,
    /// Edge set as of the last reply.
    mirror: BTreeSet<Edge>,
}

fn error(msg: impl std::fmt::Display) -> Value {
    json!({ "type": "error", "msg": msg.to_string() })
}

fn overrides(v: Value) -> std::result::Result<ParamsOverrides, String> {
    serde_json::from_value(v).map_err(|e| format!("bad params: {e}"))
}

impl Session {
    /// `base` supplies every parameter an `init` leaves out.
    pub fn new(base: Params) -> Self {
        Session {
            base,
            state: None,
            mirror: BTreeSet::new(),
        }
    }

    pub fn state(&self) -> Option<&SimState> {
        self.state.as_ref()
    }

    /// Processes one request line and returns the reply.
    pub fn handle(&mut self, line: &str) -> Value {
        let msg: Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(e) => return error(format!("malformed JSON: {e}")),
        };
        let Value::Object(mut obj) = msg else {
            return error("request must be a JSON object");
        };
        let kind = match obj.remove("type") {
            Some(Value::String(s)) => s,
            _ => return error("missing string field `type`"),
        };
        let res = match kind.as_str() {
            "init" => self.init(obj),
            "step" => self.step(&obj),
            "set_params" => self.set_params(obj),
            "reset" => self.reset(&obj),
            "snapshot" => self.snapshot(),
            other => Err(format!("unknown message type `{other}`")),
        };
        res.unwrap_or_else(error)
    }

    fn require(&self) -> std::result::Result<&SimState, String> {
        self.state.as_ref().ok_or_else(|| "session not initialized; send init first".to_string())
    }

    fn install(&mut self, params: Params) -> std::result::Result<Value, String> {
        if params.e > MAX_SESSION_EDGES {
            return Err(format!("sessions are limited to {MAX_SESSION_EDGES} edges"));
        }
        let state = SimState::new(
            Params {
                t_max: u64::MAX,
                ..params
            },
            None,
        )
        .map_err(|e| e.to_string())?
        .with_event_log(false);
        self.state = Some(state);
        Ok(self.reply(true))
    }

    fn init(&mut self, mut obj: Map<String, Value>) -> std::result::Result<Value, String> {
        let o = match obj.remove("params") {
            None | Some(Value::Null) => ParamsOverrides::default(),
            Some(v) => overrides(v)?,
        };
        if let Some(k) = obj.keys().next() {
            return Err(format!("unexpected field `{k}` in init"));
        }
        let mut p = self.base.clone();
        p.apply(&o);
        self.install(p)
    }

    fn step(&mut self, obj: &Map<String, Value>) -> std::result::Result<Value, String> {
        let n = obj
            .get("n")
            .and_then(Value::as_u64)
            .ok_or("step needs a non-negative integer `n`")?;
        if n > MAX_STEPS_PER_REQUEST {
            return Err(format!("n must be <= {MAX_STEPS_PER_REQUEST}"));
        }
        self.require()?;
        self.state.as_mut().expect("checked").advance(n);
        Ok(self.reply(false))
    }

    fn set_params(&mut self, mut obj: Map<String, Value>) -> std::result::Result<Value, String> {
        let o = match obj.remove("params") {
            Some(v) if obj.is_empty() => overrides(v)?,
            Some(_) => return Err("give parameters either flat or under `params`, not both".into()),
            None => overrides(Value::Object(obj))?,
        };
        let fixed = [
            ("n", o.n.is_some()),
            ("e", o.e.is_some()),
            ("density", o.density.is_some()),
            ("l", o.l.is_some()),
            ("seed", o.seed.is_some()),
            ("t_max", o.t_max.is_some()),
            ("recent_window", o.recent_window.is_some()),
        ];
        if let Some((name, _)) = fixed.iter().find(|f| f.1) {
            return Err(format!("`{name}` cannot change mid-session; use init or reset"));
        }
        let cur = self.require()?.params().clone();
        self.state
            .as_mut()
            .expect("checked")
            .set_dynamics(
                o.epsilon.unwrap_or(cur.epsilon),
                o.mu.unwrap_or(cur.mu),
                o.p.unwrap_or(cur.p),
                o.q.unwrap_or(cur.q),
                o.strategy.unwrap_or(cur.strategy),
            )
            .map_err(|e| e.to_string())?;
        Ok(self.reply(false))
    }

    fn snapshot(&mut self) -> std::result::Result<Value, String> {
        self.require()?;
        Ok(self.reply(true))
    }

    fn reset(&mut self, obj: &Map<String, Value>) -> std::result::Result<Value, String> {
        let mut p = self.require()?.params().clone();
        match obj.get("seed") {
            None | Some(Value::Null) => {}
            Some(v) => p.seed = v.as_u64().ok_or("`seed` must be a non-negative integer")?,
        }
        self.install(p)
    }

    /// State message; updates the mirror to the current edge set.
    fn reply(&mut self, full: bool) -> Value {
        let s = self.state.as_ref().expect("reply needs a state");
        let now: BTreeSet<Edge> = s.graph().edges().collect();
        let (added, removed): (Vec<Edge>, Vec<Edge>) = if full {
            (now.iter().copied().collect(), Vec::new())
        } else {
            (
                now.difference(&self.mirror).copied().collect(),
                self.mirror.difference(&now).copied().collect(),
            )
        };
        let reply = json!({
            "type": "state",
            "t": s.t(),
            "full": full,
            "opinions": s.opinions(),
            "edges_added": added,
            "edges_removed": removed,
            "metrics": metrics(s),
        });
        self.mirror = now;
        reply
    }
}

fn metrics(s: &SimState) -> Value {
    let (g, ops) = (s.graph(), s.opinions());
    json!({
        "segregation": segregation_index(g, &opinion_partition(ops)).ok(),
        "triad_fraction": triad_census(g).closed_fraction(),
        "entropy": screen_entropy(s),
        "diversity": neighbor_opinion_diversity(g, ops).ok(),
        "histogram": opinion_histogram(ops),
        "peaks": count_opinion_peaks(ops, DEFAULT_PEAK_BINS, DEFAULT_PEAK_MIN_HEIGHT).ok(),
        "echo_chamber": state_is_echo_chamber(s),
    })
}

fn session_loop(stream: TcpStream, base: Params) -> std::io::Result<()> {
    let mut writer = stream.try_clone()?;
    let mut session = Session::new(base);
    for line in BufReader::new(stream).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut text = serde_json::to_string(&session.handle(&line)).expect("reply serializes");
        text.push('\n');
        writer.write_all(text.as_bytes())?;
        writer.flush()?;
    }
    Ok(())
}

/// Accepts connections forever, one thread and one session per connection.
pub fn serve_on(listener: TcpListener, base: Params) -> Result<()> {
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                eprintln!("accept failed: {e}");
                continue;
            }
        };
        let base = base.clone();
        thread::spawn(move || {
            let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
            if let Err(e) = session_loop(stream, base) {
                eprintln!("session {peer} ended: {e}");
            }
        });
    }
    Ok(())
}

pub fn serve(a: &ServeArgs) -> Result<()> {
    let base = a.params.resolve("fig3")?;
    let listener = TcpListener::bind((a.host.as_str(), a.port)).map_err(CliError::Server)?;
    let addr = listener.local_addr().map_err(CliError::Server)?;
    println!("listening on {addr}");
    std::io::stdout().flush().map_err(CliError::Server)?;
    serve_on(listener, base)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session() -> Session {
        Session::new(echo_core::presets::preset("fig3").unwrap())
    }

    fn edges(v: &Value, key: &str) -> Vec<Edge> {
        serde_json::from_value(v[key].clone()).unwrap()
    }

    #[test]
    fn requires_init() {
        let mut s = session();
        for req in [r#"{"type":"step","n":1}"#, r#"{"type":"snapshot"}"#, r#"{"type":"reset"}"#] {
            assert_eq!(s.handle(req)["type"], "error");
        }
    }

    #[test]
    fn init_sends_full_state() {
        let mut s = session();
        let r = s.handle(r#"{"type":"init","params":{"n":30,"e":60,"seed":3}}"#);
        assert_eq!(r["type"], "state");
        assert_eq!(r["t"], 0);
        assert_eq!(r["full"], true);
        assert_eq!(r["opinions"].as_array().unwrap().len(), 30);
        assert_eq!(edges(&r, "edges_added").len(), 60);
        assert!(edges(&r, "edges_removed").is_empty());
        assert_eq!(r["metrics"]["histogram"].as_array().unwrap().len(), 10);
    }

    #[test]
    fn bad_requests_leave_session_intact() {
        let mut s = session();
        s.handle(r#"{"type":"init","params":{"n":20,"e":40}}"#);
        for req in [
            "{not json",
            "[1]",
            r#"{"n":3}"#,
            r#"{"type":"warp"}"#,
            r#"{"type":"step","n":-1}"#,
            r#"{"type":"set_params","n":50}"#,
            r#"{"type":"set_params","mu":2.0}"#,
            r#"{"type":"set_params","colour":1}"#,
            r#"{"type":"init","params":{"e":100000}}"#,
        ] {
            assert_eq!(s.handle(req)["type"], "error", "{req}");
        }
        let st = s.state().unwrap();
        assert_eq!((st.node_count(), st.graph().edge_count(), st.t()), (20, 40, 0));
        assert_eq!(st.params().mu, 0.5);
    }

    #[test]
    fn deltas_reconstruct_the_graph() {
        let mut s = session();
        let init = s.handle(r#"{"type":"init","params":{"n":40,"e":160,"seed":9}}"#);
        let mut mirror: BTreeSet<Edge> = edges(&init, "edges_added").into_iter().collect();
        let mut changed = false;
        for _ in 0..20 {
            let r = s.handle(r#"{"type":"step","n":50}"#);
            assert_eq!(r["full"], false);
            for e in edges(&r, "edges_removed") {
                assert!(mirror.remove(&e));
                changed = true;
            }
            for e in edges(&r, "edges_added") {
                assert!(mirror.insert(e));
            }
        }
        assert!(changed);
        let snap = s.handle(r#"{"type":"snapshot"}"#);
        let full: BTreeSet<Edge> = edges(&snap, "edges_added").into_iter().collect();
        assert_eq!(mirror, full);
        assert_eq!(snap["t"], 1000);
    }

    #[test]
    fn set_params_flat_or_nested() {
        let mut s = session();
        s.handle(r#"{"type":"init"}"#);
        let r = s.handle(r#"{"type":"set_params","epsilon":1.2,"strategy":"repost"}"#);
        assert_eq!(r["type"], "state");
        s.handle(r#"{"type":"set_params","params":{"q":0.0}}"#);
        let p = s.state().unwrap().params();
        assert_eq!((p.epsilon, p.q, p.strategy.as_str()), (1.2, 0.0, "repost"));
        let before: Vec<Edge> = s.state().unwrap().graph().sorted_edges();
        let r = s.handle(r#"{"type":"step","n":2000}"#);
        assert!(edges(&r, "edges_added").is_empty() && edges(&r, "edges_removed").is_empty());
        assert_eq!(s.state().unwrap().graph().sorted_edges(), before);
    }

    #[test]
    fn reset_restarts_from_seed() {
        let mut s = session();
        let a = s.handle(r#"{"type":"init","params":{"seed":4}}"#);
        s.handle(r#"{"type":"step","n":500}"#);
        let b = s.handle(r#"{"type":"reset"}"#);
        assert_eq!(a, b);
        let c = s.handle(r#"{"type":"reset","seed":5}"#);
        assert_ne!(a["opinions"], c["opinions"]);
        assert_eq!(c["t"], 0);
    }
}
