//! Drives `serve` over TCP the way the browser demo does.

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};

use serde_json::{json, Value};

struct Server(Child, String);

impl Server {
    fn start() -> Self {
        let mut child = Command::new(env!("CARGO_BIN_EXE_echochamber"))
            .args(["serve", "--port", "0"])
            .stdout(Stdio::piped())
            .spawn()
            .unwrap();
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
        let addr = line.trim().strip_prefix("listening on ").expect("address banner").to_string();
        Server(child, addr)
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

struct Client {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
    edges: BTreeSet<(u64, u64)>,
    opinions: Vec<f64>,
}

impl Client {
    fn connect(addr: &str) -> Self {
        let s = TcpStream::connect(addr).unwrap();
        Client {
            writer: s.try_clone().unwrap(),
            reader: BufReader::new(s),
            edges: BTreeSet::new(),
            opinions: Vec::new(),
        }
    }

    fn raw(&mut self, line: &str) -> Value {
        self.writer.write_all(line.as_bytes()).unwrap();
        self.writer.write_all(b"\n").unwrap();
        let mut reply = String::new();
        self.reader.read_line(&mut reply).unwrap();
        serde_json::from_str(&reply).unwrap()
    }

    /// Sends a request and applies a state reply to the local mirror.
    fn send(&mut self, msg: Value) -> Value {
        let r = self.raw(&msg.to_string());
        if r["type"] == "state" {
            let pairs = |k: &str| -> Vec<(u64, u64)> { serde_json::from_value(r[k].clone()).unwrap() };
            if r["full"] == true {
                self.edges.clear();
            }
            for e in pairs("edges_removed") {
                assert!(self.edges.remove(&e), "removed edge {e:?} was not in the mirror");
            }
            for e in pairs("edges_added") {
                assert!(self.edges.insert(e), "added edge {e:?} already in the mirror");
            }
            self.opinions = serde_json::from_value(r["opinions"].clone()).unwrap();
        }
        r
    }
}

#[test]
fn mirror_matches_snapshot_and_q_zero_freezes_edges() {
    let server = Server::start();
    let mut c = Client::connect(&server.1);
    let init = c.send(json!({"type": "init", "params": {"seed": 1}}));
    assert_eq!(init["type"], "state");
    assert_eq!(init["opinions"].as_array().unwrap().len(), 100);
    assert_eq!(c.edges.len(), 400);

    let r = c.send(json!({"type": "step", "n": 1000}));
    assert_eq!(r["t"], 1000);
    let r = c.send(json!({"type": "set_params", "q": 0.0}));
    assert_eq!(r["type"], "state", "{r}");
    let r = c.send(json!({"type": "step", "n": 1000}));
    assert_eq!(r["t"], 2000);
    assert!(r["edges_added"].as_array().unwrap().is_empty());
    assert!(r["edges_removed"].as_array().unwrap().is_empty());

    let mirror = (c.edges.clone(), c.opinions.clone());
    let snap = c.send(json!({"type": "snapshot"}));
    assert_eq!(snap["t"], 2000);
    assert_eq!(mirror, (c.edges.clone(), c.opinions.clone()));
    for key in ["segregation", "triad_fraction", "entropy", "diversity", "histogram", "peaks", "echo_chamber"] {
        assert!(snap["metrics"].get(key).is_some(), "metric {key} missing");
    }
}

#[test]
fn sessions_are_isolated_and_survive_errors() {
    let server = Server::start();
    let mut a = Client::connect(&server.1);
    let mut b = Client::connect(&server.1);
    assert_eq!(a.raw("{\"type\":\"step\",\"n\":5}")["type"], "error");
    a.send(json!({"type": "init", "params": {"n": 50, "e": 150, "seed": 2}}));
    b.send(json!({"type": "init", "params": {"n": 50, "e": 150, "seed": 2}}));
    let err = a.raw("this is not json");
    assert_eq!(err["type"], "error");
    assert!(err["msg"].is_string());
    a.send(json!({"type": "step", "n": 300}));

    // Dropping `a` must not disturb `b`.
    drop(a);
    let rb = b.send(json!({"type": "step", "n": 300}));
    assert_eq!(rb["t"], 300);

    let mut c = Client::connect(&server.1);
    c.send(json!({"type": "init", "params": {"n": 50, "e": 150, "seed": 2}}));
    let rc = c.send(json!({"type": "step", "n": 300}));
    assert_eq!(rc["opinions"], rb["opinions"], "same seed, same trajectory");
    assert_eq!(c.edges, b.edges);
}

#[test]
fn steering_epsilon_collapses_to_one_peak() {
    let server = Server::start();
    let mut c = Client::connect(&server.1);
    c.send(json!({"type": "init", "params": {"seed": 3}}));
    let early = c.send(json!({"type": "step", "n": 500}));
    assert!(early["metrics"]["peaks"].as_u64().unwrap() > 1, "{}", early["metrics"]);
    c.send(json!({"type": "set_params", "params": {"epsilon": 1.2}}));
    let r = c.send(json!({"type": "step", "n": 100000}));
    assert_eq!(r["metrics"]["peaks"], 1, "{}", r["metrics"]);
}
