use std::path::PathBuf;

use clap::Args;
use echo_core::presets::preset;
use echo_core::{Params, ParamsOverrides, Strategy};

use crate::error::Result;

/// Model parameters: a preset, then a config file, then individual flags.
#[derive(Args, Debug, Clone, Default)]
pub struct ParamArgs {
    /// Named parameter block to start from.
    #[arg(long)]
    pub preset: Option<String>,
    /// TOML or JSON table of parameter overrides.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub e: Option<usize>,
    /// Sets `e` from a follower-graph density (applied after `n`).
    #[arg(long)]
    pub density: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long)]
    pub strategy: Option<Strategy>,
    #[arg(long = "t-max", alias = "t_max")]
    pub t_max: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "recent-window", alias = "recent_window")]
    pub recent_window: Option<usize>,
}

impl ParamArgs {
    fn flags(&self) -> ParamsOverrides {
        ParamsOverrides {
            n: self.n,
            e: self.e,
            density: self.density,
            epsilon: self.epsilon,
            mu: self.mu,
            p: self.p,
            q: self.q,
            l: self.l,
            strategy: self.strategy,
            t_max: self.t_max,
            seed: self.seed,
            recent_window: self.recent_window,
        }
    }

    pub fn overrides(&self) -> Result<ParamsOverrides> {
        let file = match &self.config {
            Some(path) => ParamsOverrides::load(path)?,
            None => ParamsOverrides::default(),
        };
        Ok(file.merged(&self.flags()))
    }

    pub fn preset_name<'a>(&'a self, default: &'a str) -> &'a str {
        self.preset.as_deref().unwrap_or(default)
    }

    pub fn resolve(&self, default_preset: &str) -> Result<Params> {
        let mut p = preset(self.preset_name(default_preset))?;
        p.apply(&self.overrides()?);
        p.validate()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_config_beat_preset() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        std::fs::write(&cfg, "mu = 0.2\nq = 0.3\n").unwrap();
        let args = ParamArgs {
            config: Some(cfg),
            q: Some(0.9),
            ..Default::default()
        };
        let p = args.resolve("fig3").unwrap();
        assert_eq!((p.mu, p.q, p.epsilon), (0.2, 0.9, 0.4));
    }

    #[test]
    fn unknown_preset_and_bad_values_fail() {
        let bad = ParamArgs {
            preset: Some("nope".into()),
            ..Default::default()
        };
        assert_eq!(bad.resolve("fig3").unwrap_err().exit_code(), 2);
        let bad = ParamArgs {
            mu: Some(1.5),
            ..Default::default()
        };
        assert_eq!(bad.resolve("fig3").unwrap_err().exit_code(), 2);
    }
}
