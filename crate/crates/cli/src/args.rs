use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::params::ParamArgs;

#[derive(Parser, Debug)]
#[command(name = "echochamber", version, about = "Echo-chamber opinion dynamics simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate one run and write its metric series, final state and event log.
    Run(RunArgs),
    /// Time to echo chamber over a (mu, q) grid.
    Sweep(SweepArgs),
    /// Opinion peaks and spread at steady state for several confidence bounds.
    Epsilon(EpsilonArgs),
    /// Time to echo chamber as the network grows at fixed density.
    Scaling(ScalingArgs),
    /// Compare rewiring strategies on matched seeds.
    Strategies(StrategiesArgs),
    /// Run the model until it matches an empirical network's segregation.
    Validate(ValidateArgs),
    /// Structural metrics of an edge list.
    Metrics(MetricsArgs),
    /// Serve interactive sessions over newline-delimited JSON on TCP.
    Serve(ServeArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct Experiment {
    /// Output directory (created if missing).
    #[arg(long, short)]
    pub out: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Start from this follower graph instead of a random one.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Steps between metric snapshots; defaults to N.
    #[arg(long)]
    pub every: Option<u64>,
    /// Keep going after an echo chamber forms, up to t_max.
    #[arg(long)]
    pub full: bool,
    /// Skip writing the event log.
    #[arg(long)]
    pub no_events: bool,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub exp: Experiment,
    /// Comma-separated mu values.
    #[arg(long, value_delimiter = ',')]
    pub mu_values: Vec<f64>,
    /// Comma-separated q values.
    #[arg(long, value_delimiter = ',')]
    pub q_values: Vec<f64>,
    /// Use a log grid over [0.001, 1] with this many points per decade for
    /// both axes, instead of the default grid.
    #[arg(long, conflicts_with_all = ["mu_values", "q_values"])]
    pub per_decade: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EpsilonArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub exp: Experiment,
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<f64>,
    #[arg(long)]
    pub runs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ScalingArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub exp: Experiment,
    #[arg(long, value_delimiter = ',')]
    pub n_values: Vec<usize>,
    /// Density held fixed across N; defaults to that of N = 100, E = 400.
    #[arg(long = "at-density")]
    pub at_density: Option<f64>,
    #[arg(long)]
    pub runs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct StrategiesArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub exp: Experiment,
    #[arg(long)]
    pub runs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Retweet edge list.
    #[arg(long)]
    pub edges: PathBuf,
    /// `node_id label` lines.
    #[arg(long)]
    pub labels: PathBuf,
    /// `user hashtag` adoption lines.
    #[arg(long)]
    pub hashtags: Option<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub epoch_budget: Option<u64>,
    #[arg(long)]
    pub snapshot_every: Option<u64>,
    #[arg(long)]
    pub hashtag_dim: Option<usize>,
}

#[derive(Args, Debug)]
pub struct MetricsArgs {
    /// Follower or retweet edge list.
    #[arg(long)]
    pub edges: PathBuf,
    /// `node_id opinion` lines; enables opinion-based metrics.
    #[arg(long)]
    pub opinions: Option<PathBuf>,
    /// `node_id label` lines; scores the largest SCC against these labels.
    #[arg(long, conflicts_with = "opinions")]
    pub labels: Option<PathBuf>,
    /// Confidence bound for the echo-chamber test.
    #[arg(long, default_value_t = 0.4)]
    pub epsilon: f64,
    /// Write the JSON here instead of stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    /// Defaults for every session's `init`.
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// 0 picks a free port; the bound address is printed on stdout.
    #[arg(long, default_value_t = 8765)]
    pub port: u16,
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn t_max_has_both_spellings() {
        for flag in ["--t-max", "--t_max"] {
            let cli = Cli::try_parse_from(["echochamber", "run", "-o", "x", flag, "5"]).unwrap();
            let Command::Run(r) = cli.command else { panic!() };
            assert_eq!(r.params.t_max, Some(5));
        }
    }

    #[test]
    fn one_subcommand_required() {
        assert!(Cli::try_parse_from(["echochamber"]).is_err());
        assert!(Cli::try_parse_from(["echochamber", "run", "-o", "x", "--strategy", "teleport"]).is_err());
    }
}
