//! The information-sharing model.
//!
//! Each step picks one user uniformly at random. That user:
//!
//! 1. moves its opinion toward the mean of the concordant messages on its
//!    screen (bounded-confidence influence),
//! 2. reposts a concordant screen message with probability `p`, otherwise
//!    posts a new message carrying its own opinion,
//! 3. with probability `q` unfollows the deliverer of a random discordant
//!    screen message and follows someone else, chosen by the rewiring
//!    [`Strategy`].
//!
//! Concordance is `|o - m| < epsilon` (strict). Steps 2 and 3 use the
//! opinion produced by step 1.

use std::collections::{HashMap, VecDeque};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::graph::{random_directed_graph, DirectedGraph, NodeId};
use crate::params::{Params, Strategy};

pub type MessageId = u64;
pub type SimRng = ChaCha8Rng;

#[inline]
pub fn concordant(o: f64, m: f64, epsilon: f64) -> bool {
    (o - m).abs() < epsilon
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Message {
    pub id: MessageId,
    pub originator: NodeId,
    /// Originator's opinion when the message was created; never changes.
    pub opinion: f64,
    /// Users that reposted this message, in order.
    pub repost_chain: Vec<NodeId>,
    pub created_at: u64,
}

/// One slot of a user's feed.
///
/// `opinion` and `originator` are copies of the message's immutable fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenEntry {
    pub message: MessageId,
    pub opinion: f64,
    pub originator: NodeId,
    /// The friend whose post or repost put this entry here.
    pub deliverer: NodeId,
    pub is_repost: bool,
}

/// Most recent `capacity` entries, newest first.
#[derive(Debug, Clone)]
pub struct Screen {
    entries: VecDeque<ScreenEntry>,
    capacity: usize,
}

impl Screen {
    pub fn new(capacity: usize) -> Self {
        Screen {
            entries: VecDeque::with_capacity(capacity + 1),
            capacity,
        }
    }

    /// Pushes a new entry and returns the evicted oldest one, if any.
    pub fn push(&mut self, entry: ScreenEntry) -> Option<ScreenEntry> {
        self.entries.push_front(entry);
        if self.entries.len() > self.capacity {
            self.entries.pop_back()
        } else {
            None
        }
    }

    pub fn entries(&self) -> impl ExactSizeIterator<Item = &ScreenEntry> + Clone {
        self.entries.iter()
    }

    pub fn get(&self, idx: usize) -> Option<&ScreenEntry> {
        self.entries.get(idx)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn clear(&mut self) -> Vec<ScreenEntry> {
        self.entries.drain(..).collect()
    }
}

/// Bounded-confidence update of `o` against the messages on `screen`.
///
/// `o + mu * (mean(concordant m) - o)`; unchanged when nothing is concordant.
pub fn opinion_update<'a>(o: f64, screen: impl IntoIterator<Item = &'a f64>, epsilon: f64, mu: f64) -> f64 {
    let (mut sum, mut count) = (0.0, 0u32);
    for &m in screen {
        if concordant(o, m, epsilon) {
            sum += m;
            count += 1;
        }
    }
    if count == 0 {
        o
    } else {
        o + mu * (sum / count as f64 - o)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Event {
    Post {
        step: u64,
        actor: NodeId,
        message: MessageId,
    },
    Repost {
        step: u64,
        actor: NodeId,
        message: MessageId,
        originator: NodeId,
    },
    Rewire {
        step: u64,
        actor: NodeId,
        unfollowed: NodeId,
        new_friend: NodeId,
    },
}

impl Event {
    pub fn step(&self) -> u64 {
        match *self {
            Event::Post { step, .. } | Event::Repost { step, .. } | Event::Rewire { step, .. } => step,
        }
    }

    pub fn actor(&self) -> NodeId {
        match *self {
            Event::Post { actor, .. } | Event::Repost { actor, .. } | Event::Rewire { actor, .. } => actor,
        }
    }
}

pub const EVENT_CSV_HEADER: &str = "step,kind,actor,message_id,originator,unfollowed,new_friend";

/// Writes the event log as CSV, leaving inapplicable fields empty.
pub fn write_events_csv<W: Write>(out: &mut W, events: &[Event]) -> std::io::Result<()> {
    writeln!(out, "{EVENT_CSV_HEADER}")?;
    for ev in events {
        match *ev {
            Event::Post { step, actor, message } => writeln!(out, "{step},post,{actor},{message},{actor},,")?,
            Event::Repost {
                step,
                actor,
                message,
                originator,
            } => writeln!(out, "{step},repost,{actor},{message},{originator},,")?,
            Event::Rewire {
                step,
                actor,
                unfollowed,
                new_friend,
            } => writeln!(out, "{step},rewire,{actor},,,{unfollowed},{new_friend}")?,
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecentPost {
    pub author: NodeId,
    pub opinion: f64,
    pub message: MessageId,
}

/// Messages still referenced by some screen, with their reference counts.
#[derive(Debug, Clone, Default)]
pub struct MessageStore {
    live: HashMap<MessageId, (Message, u32)>,
}

impl MessageStore {
    pub fn get(&self, id: MessageId) -> Option<&Message> {
        self.live.get(&id).map(|(m, _)| m)
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    fn insert(&mut self, msg: Message) {
        self.live.insert(msg.id, (msg, 0));
    }

    fn retain(&mut self, id: MessageId) {
        if let Some((_, refs)) = self.live.get_mut(&id) {
            *refs += 1;
        }
    }

    fn release(&mut self, id: MessageId) {
        if let Some((_, refs)) = self.live.get_mut(&id) {
            *refs -= 1;
            if *refs == 0 {
                self.live.remove(&id);
            }
        }
    }

    fn prune_unreferenced(&mut self, id: MessageId) {
        if matches!(self.live.get(&id), Some((_, 0))) {
            self.live.remove(&id);
        }
    }

    fn append_reposter(&mut self, id: MessageId, who: NodeId) {
        if let Some((m, _)) = self.live.get_mut(&id) {
            m.repost_chain.push(who);
        }
    }
}

/// The entire mutable world of one run.
#[derive(Debug, Clone)]
pub struct SimState {
    params: Params,
    graph: DirectedGraph,
    opinions: Vec<f64>,
    screens: Vec<Screen>,
    messages: MessageStore,
    recent_posts: VecDeque<RecentPost>,
    events: Vec<Event>,
    record_events: bool,
    step_events: Vec<Event>,
    next_message: MessageId,
    t: u64,
    rng: SimRng,
}

/// Result of [`SimState::run_until`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "t", rename_all = "lowercase")]
pub enum RunOutcome {
    Converged(u64),
    Censored(u64),
}

impl RunOutcome {
    pub fn t(self) -> u64 {
        match self {
            RunOutcome::Converged(t) | RunOutcome::Censored(t) => t,
        }
    }

    pub fn converged(self) -> bool {
        matches!(self, RunOutcome::Converged(_))
    }
}

impl SimState {
    /// Fresh state: opinions i.i.d. uniform on [-1, 1], empty screens, t = 0.
    ///
    /// When `initial_graph` is given its node count overrides `params.n` and
    /// its edge count overrides `params.e`.
    pub fn new(mut params: Params, initial_graph: Option<DirectedGraph>) -> Result<Self> {
        if let Some(g) = &initial_graph {
            params.n = g.node_count();
            params.e = g.edge_count();
        }
        params.validate()?;
        let mut rng = SimRng::seed_from_u64(params.seed);
        let graph = match initial_graph {
            Some(g) => g,
            None => random_directed_graph(params.n, params.e, &mut rng)?,
        };
        let opinions = (0..params.n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let screens = vec![Screen::new(params.l); params.n];
        Ok(SimState {
            recent_posts: VecDeque::with_capacity(params.recent_window + 1),
            params,
            graph,
            opinions,
            screens,
            messages: MessageStore::default(),
            events: Vec::new(),
            record_events: true,
            step_events: Vec::with_capacity(2),
            next_message: 0,
            t: 0,
            rng,
        })
    }

    /// Builder toggle for the persistent event log (on by default).
    pub fn with_event_log(mut self, on: bool) -> Self {
        self.record_events = on;
        self
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    /// Changes dynamic parameters; `n`, `e`, `seed` are ignored and `l`
    /// changes only affect screens created after a reset.
    pub fn set_dynamics(&mut self, epsilon: f64, mu: f64, p: f64, q: f64, strategy: Strategy) -> Result<()> {
        let next = Params {
            epsilon,
            mu,
            p,
            q,
            strategy,
            ..self.params.clone()
        };
        next.validate()?;
        self.params = next;
        Ok(())
    }

    pub fn graph(&self) -> &DirectedGraph {
        &self.graph
    }

    pub fn opinions(&self) -> &[f64] {
        &self.opinions
    }

    pub fn screen(&self, i: NodeId) -> &Screen {
        &self.screens[i]
    }

    pub fn screens(&self) -> &[Screen] {
        &self.screens
    }

    pub fn messages(&self) -> &MessageStore {
        &self.messages
    }

    pub fn recent_posts(&self) -> impl ExactSizeIterator<Item = &RecentPost> {
        self.recent_posts.iter()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Takes the accumulated event log, leaving it empty.
    pub fn drain_events(&mut self) -> Vec<Event> {
        std::mem::take(&mut self.events)
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Places an entry on `i`'s screen. Used by tests and replay tools; the
    /// model itself only delivers through [`act`](Self::act).
    pub fn deliver(&mut self, i: NodeId, msg: Message, deliverer: NodeId, is_repost: bool) {
        let entry = ScreenEntry {
            message: msg.id,
            opinion: msg.opinion,
            originator: msg.originator,
            deliverer,
            is_repost,
        };
        self.next_message = self.next_message.max(msg.id + 1);
        if self.messages.get(msg.id).is_none() {
            self.messages.insert(msg);
        }
        self.push_entry(i, entry);
    }

    pub fn next_message_id(&self) -> MessageId {
        self.next_message
    }

    pub fn set_opinion(&mut self, i: NodeId, o: f64) {
        assert!((-1.0..=1.0).contains(&o), "opinion {o} outside [-1,1]");
        self.opinions[i] = o;
    }

    fn push_entry(&mut self, i: NodeId, entry: ScreenEntry) {
        self.messages.retain(entry.message);
        if let Some(old) = self.screens[i].push(entry) {
            self.messages.release(old.message);
        }
    }

    fn broadcast(&mut self, from: NodeId, entry: ScreenEntry) {
        for k in 0..self.graph.in_degree(from) {
            let f = self.graph.followers(from)[k];
            self.push_entry(f, entry);
        }
    }

    fn remember(&mut self, post: RecentPost) {
        self.recent_posts.push_front(post);
        if self.recent_posts.len() > self.params.recent_window {
            self.recent_posts.pop_back();
        }
    }

    /// Applies the influence update to user `i` and returns the new opinion.
    pub fn influence(&mut self, i: NodeId) -> f64 {
        let o = self.opinions[i];
        let next = opinion_update(
            o,
            self.screens[i].entries().map(|e| &e.opinion),
            self.params.epsilon,
            self.params.mu,
        );
        debug_assert!((-1.0..=1.0).contains(&next), "opinion left [-1,1]: {next}");
        self.opinions[i] = next;
        next
    }

    /// Post-or-repost action of user `i`.
    pub fn act(&mut self, i: NodeId) -> Event {
        let o = self.opinions[i];
        let eps = self.params.epsilon;
        let draw: f64 = self.rng.gen();
        if draw < self.params.p {
            let pool = self.screens[i].entries().filter(|e| concordant(o, e.opinion, eps)).count();
            if pool > 0 {
                let pick = self.rng.gen_range(0..pool);
                let chosen = *self.screens[i]
                    .entries()
                    .filter(|e| concordant(o, e.opinion, eps))
                    .nth(pick)
                    .expect("pick within pool");
                self.messages.append_reposter(chosen.message, i);
                self.broadcast(
                    i,
                    ScreenEntry {
                        deliverer: i,
                        is_repost: true,
                        ..chosen
                    },
                );
                self.remember(RecentPost {
                    author: i,
                    opinion: chosen.opinion,
                    message: chosen.message,
                });
                return Event::Repost {
                    step: self.t,
                    actor: i,
                    message: chosen.message,
                    originator: chosen.originator,
                };
            }
        }

        let id = self.next_message;
        self.next_message += 1;
        self.messages.insert(Message {
            id,
            originator: i,
            opinion: o,
            repost_chain: Vec::new(),
            created_at: self.t,
        });
        self.broadcast(
            i,
            ScreenEntry {
                message: id,
                opinion: o,
                originator: i,
                deliverer: i,
                is_repost: false,
            },
        );
        self.messages.prune_unreferenced(id);
        self.remember(RecentPost {
            author: i,
            opinion: o,
            message: id,
        });
        Event::Post {
            step: self.t,
            actor: i,
            message: id,
        }
    }

    /// With probability `q`, unfollows the deliverer of a random discordant
    /// screen entry (still a friend) and follows a strategy-chosen target.
    pub fn maybe_unfollow(&mut self, i: NodeId) -> Option<Event> {
        let draw: f64 = self.rng.gen();
        if draw >= self.params.q {
            return None;
        }
        let o = self.opinions[i];
        let eps = self.params.epsilon;
        let graph = &self.graph;
        let eligible = |e: &&ScreenEntry| !concordant(o, e.opinion, eps) && graph.has_edge(i, e.deliverer);
        let pool = self.screens[i].entries().filter(eligible).count();
        if pool == 0 {
            return None;
        }
        let pick = self.rng.gen_range(0..pool);
        let unfollowed = self.screens[i]
            .entries()
            .filter(eligible)
            .nth(pick)
            .expect("pick within pool")
            .deliverer;
        let new_friend = self.select_rewire_target(i, self.params.strategy)?;
        self.graph
            .rewire_edge(i, unfollowed, new_friend)
            .expect("rewire target satisfies preconditions");
        Some(Event::Rewire {
            step: self.t,
            actor: i,
            unfollowed,
            new_friend,
        })
    }

    /// Picks a node for `i` to follow. Never returns `i` or a current friend;
    /// `None` only when `i` already follows everyone.
    pub fn select_rewire_target(&mut self, i: NodeId, strategy: Strategy) -> Option<NodeId> {
        let graph = &self.graph;
        let valid = |z: NodeId| z != i && !graph.has_edge(i, z);
        let mut pool: Vec<NodeId> = Vec::new();
        match strategy {
            Strategy::Random => {}
            Strategy::Repost => {
                for e in self.screens[i].entries().filter(|e| e.is_repost) {
                    if valid(e.originator) && !pool.contains(&e.originator) {
                        pool.push(e.originator);
                    }
                }
            }
            Strategy::Recommendation => {
                let o = self.opinions[i];
                let eps = self.params.epsilon;
                for r in &self.recent_posts {
                    if concordant(o, r.opinion, eps) && valid(r.author) && !pool.contains(&r.author) {
                        pool.push(r.author);
                    }
                }
            }
        }
        if !pool.is_empty() {
            return Some(pool[self.rng.gen_range(0..pool.len())]);
        }
        self.random_non_friend(i)
    }

    fn random_non_friend(&mut self, i: NodeId) -> Option<NodeId> {
        let n = self.graph.node_count();
        let available = n.saturating_sub(1 + self.graph.out_degree(i));
        if available == 0 {
            return None;
        }
        if available * 4 >= n {
            loop {
                let z = self.rng.gen_range(0..n);
                if z != i && !self.graph.has_edge(i, z) {
                    return Some(z);
                }
            }
        }
        let k = self.rng.gen_range(0..available);
        (0..n).filter(|&z| z != i && !self.graph.has_edge(i, z)).nth(k)
    }

    /// One model step; returns the events it produced.
    pub fn step(&mut self) -> &[Event] {
        self.step_events.clear();
        let i = self.rng.gen_range(0..self.graph.node_count());
        self.influence(i);
        let ev = self.act(i);
        self.step_events.push(ev);
        if let Some(ev) = self.maybe_unfollow(i) {
            self.step_events.push(ev);
        }
        if self.record_events {
            self.events.extend_from_slice(&self.step_events);
        }
        self.t += 1;
        &self.step_events
    }

    /// Runs `k` steps (stopping early at `t_max`); returns steps taken.
    pub fn advance(&mut self, k: u64) -> u64 {
        let end = self.t.saturating_add(k).min(self.params.t_max.max(self.t));
        let start = self.t;
        while self.t < end {
            self.step();
        }
        self.t - start
    }

    /// Steps until `stop` holds (checked at t = 0 and every `check_every`
    /// steps) or `t_max` is reached.
    pub fn run_until<F>(&mut self, mut stop: F, check_every: u64) -> RunOutcome
    where
        F: FnMut(&SimState) -> bool,
    {
        assert!(check_every >= 1, "check_every must be >= 1");
        loop {
            if stop(self) {
                return RunOutcome::Converged(self.t);
            }
            if self.t >= self.params.t_max {
                return RunOutcome::Censored(self.t);
            }
            self.advance(check_every);
        }
    }
}
