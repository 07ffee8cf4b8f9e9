//! Model parameters and their flat `key = value` config representation.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a user picks a new friend after unfollowing someone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Any non-friend, uniformly.
    Random,
    /// An originator of a repost currently on the user's screen.
    Repost,
    /// A non-friend who recently posted a concordant message.
    Recommendation,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Random, Strategy::Repost, Strategy::Recommendation];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Repost => "repost",
            Strategy::Recommendation => "recommendation",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Strategy::Random),
            "repost" => Ok(Strategy::Repost),
            "recommendation" => Ok(Strategy::Recommendation),
            other => Err(Error::param(format!("unknown strategy `{other}`"))),
        }
    }
}

pub const DEFAULT_RECENT_WINDOW: usize = 100;
pub const DEFAULT_T_MAX: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: usize,
    pub e: usize,
    /// Confidence bound.
    pub epsilon: f64,
    /// Influence strength.
    pub mu: f64,
    /// Repost probability.
    pub p: f64,
    /// Unfollow (rewire) probability.
    pub q: f64,
    /// Screen length.
    pub l: usize,
    pub strategy: Strategy,
    pub t_max: u64,
    pub seed: u64,
    /// Size of the global recent-post log used by the recommendation strategy.
    pub recent_window: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            n: 100,
            e: 400,
            epsilon: 0.4,
            mu: 0.5,
            p: 0.5,
            q: 0.5,
            l: 10,
            strategy: Strategy::Random,
            t_max: DEFAULT_T_MAX,
            seed: 0,
            recent_window: DEFAULT_RECENT_WINDOW,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu", self.mu), ("p", self.p), ("q", self.q)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(format!("{name}={v} outside [0,1]")));
            }
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::param(format!("epsilon={} must be >= 0", self.epsilon)));
        }
        if self.l == 0 {
            return Err(Error::param("screen length l must be >= 1"));
        }
        if self.recent_window == 0 {
            return Err(Error::param("recent_window must be >= 1"));
        }
        let pairs = self.n.saturating_mul(self.n.saturating_sub(1));
        if self.e > pairs {
            return Err(Error::param(format!("e={} exceeds n(n-1)={pairs}", self.e)));
        }
        Ok(())
    }

    pub fn density(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.e as f64 / (self.n as f64 * (self.n as f64 - 1.0))
        }
    }

    /// Same density at a different size: `e = round(d * n (n - 1))`.
    pub fn with_n_at_density(&self, n: usize, density: f64) -> Params {
        Params {
            n,
            e: edges_for_density(n, density),
            ..self.clone()
        }
    }

    pub fn apply(&mut self, o: &ParamsOverrides) {
        if let Some(v) = o.n {
            self.n = v;
        }
        if let Some(v) = o.e {
            self.e = v;
        }
        if let Some(v) = o.epsilon {
            self.epsilon = v;
        }
        if let Some(v) = o.mu {
            self.mu = v;
        }
        if let Some(v) = o.p {
            self.p = v;
        }
        if let Some(v) = o.q {
            self.q = v;
        }
        if let Some(v) = o.l {
            self.l = v;
        }
        if let Some(v) = o.strategy {
            self.strategy = v;
        }
        if let Some(v) = o.t_max {
            self.t_max = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.recent_window {
            self.recent_window = v;
        }
        // Applied last so it sees the final n.
        if let Some(d) = o.density {
            self.e = edges_for_density(self.n, d);
        }
    }
}

pub fn edges_for_density(n: usize, density: f64) -> usize {
    (density * n as f64 * (n as f64 - 1.0)).round() as usize
}

/// Partial parameter set, as read from a config file or CLI flags.
///
/// `density`, when present, overrides `e` with `round(density * n (n - 1))`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsOverrides {
    pub n: Option<usize>,
    pub e: Option<usize>,
    pub density: Option<f64>,
    pub epsilon: Option<f64>,
    pub mu: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub l: Option<usize>,
    pub strategy: Option<Strategy>,
    pub t_max: Option<u64>,
    pub seed: Option<u64>,
    pub recent_window: Option<usize>,
}

impl ParamsOverrides {
    /// Parses a flat table as JSON (if it starts with `{`) or TOML.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&crate::io::read_to_string(path)?)
    }

    /// Fields set in `later` win.
    pub fn merged(&self, later: &ParamsOverrides) -> ParamsOverrides {
        ParamsOverrides {
            n: later.n.or(self.n),
            e: later.e.or(self.e),
            density: later.density.or(self.density),
            epsilon: later.epsilon.or(self.epsilon),
            mu: later.mu.or(self.mu),
            p: later.p.or(self.p),
            q: later.q.or(self.q),
            l: later.l.or(self.l),
            strategy: later.strategy.or(self.strategy),
            t_max: later.t_max.or(self.t_max),
            seed: later.seed.or(self.seed),
            recent_window: later.recent_window.or(self.recent_window),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_and_json_agree() {
        let a = ParamsOverrides::parse("n = 50\nepsilon = 0.3\nstrategy = \"repost\"\n").unwrap();
        let b = ParamsOverrides::parse(r#"{"n": 50, "epsilon": 0.3, "strategy": "repost"}"#).unwrap();
        assert_eq!(a, b);
        let mut p = Params::default();
        p.apply(&a);
        assert_eq!((p.n, p.epsilon, p.strategy), (50, 0.3, Strategy::Repost));
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(ParamsOverrides::parse("bogus = 1").is_err());
    }

    #[test]
    fn density_applies_after_n() {
        let mut p = Params::default();
        p.apply(&ParamsOverrides {
            n: Some(50),
            density: Some(400.0 / 9900.0),
            ..Default::default()
        });
        assert_eq!(p.e, 99);
    }

    #[test]
    fn validation() {
        assert!(Params::default().validate().is_ok());
        assert!(Params { q: 1.5, ..Params::default() }.validate().is_err());
        assert!(Params { l: 0, ..Params::default() }.validate().is_err());
        assert!(Params { epsilon: -0.1, ..Params::default() }.validate().is_err());
        assert!(Params { n: 3, e: 7, ..Params::default() }.validate().is_err());
    }
}
