use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ipersea::analytic::{
    analytic_fp_random, analytic_fp_trusted, analytic_path_length, AnalyticInputs,
};
use ipersea::defense::FriendMode;
use ipersea::experiment::{load_dataset, sweep, sweep_csv, SystemMode, CSV_HEADER};
use ipersea::idspace::{build_network, IdSpace};
use ipersea::rng::{phase, stream};
use ipersea::{run_experiment, ExperimentConfig};

#[derive(Parser, Debug)]
#[command(
    name = "ipersea",
    version,
    about = "Simulate Sybil detection in a hierarchical Kademlia DHT"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one seeded experiment and print a CSV row.
    Run {
        #[command(flatten)]
        config: ConfigFlags,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Run every combination of the listed values, `seeds` times each.
    Sweep {
        #[command(flatten)]
        config: ConfigFlags,
        /// Comma-separated g/n ratios; defaults to the configured one.
        #[arg(long, value_delimiter = ',', value_name = "LIST")]
        gn_ratios: Vec<f64>,
        /// Comma-separated system modes.
        #[arg(long, value_delimiter = ',', value_name = "LIST")]
        modes: Vec<SystemMode>,
        /// Comma-separated friend modes (trusted, random).
        #[arg(long, value_delimiter = ',', value_name = "LIST", value_parser = parse_friend_mode)]
        friend_modes: Vec<FriendMode>,
        /// Seed from which every run's seed is derived.
        #[arg(long, default_value_t = 1)]
        master_seed: u64,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Print closed-form path length and FP estimates.
    Analyze {
        /// Edges per node; computed from the dataset when omitted.
        #[arg(long)]
        ep: Option<f64>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        directed: bool,
        #[arg(
            long,
            value_delimiter = ',',
            value_name = "LIST",
            default_value = "0.1,0.5,0.8,1.0,1.25,1.5"
        )]
        gn_ratios: Vec<f64>,
        #[arg(long, default_value_t = 5)]
        alpha: usize,
        #[arg(long, default_value_t = 7)]
        beta: usize,
        /// Failure-probability threshold for the path length.
        #[arg(long, default_value_t = 0.001)]
        l_c: f64,
    },
    /// Print dataset statistics and bootstrap coverage.
    Stats {
        #[command(flatten)]
        config: ConfigFlags,
    },
    /// Print the effective configuration as `key = value` lines.
    Config {
        #[command(flatten)]
        config: ConfigFlags,
    },
}

fn parse_friend_mode(s: &str) -> Result<FriendMode, String> {
    match s {
        "trusted" => Ok(FriendMode::Trusted),
        "random" => Ok(FriendMode::Random),
        _ => Err(format!("unknown friend mode {s:?}")),
    }
}

macro_rules! config_flags {
    ($($field:ident => $key:literal, $help:literal;)*) => {
        /// Configuration: an optional file of `key = value` lines, then flags.
        #[derive(Args, Debug, Clone, Default)]
        struct ConfigFlags {
            /// File of `key = value` lines applied before any flag.
            #[arg(long, value_name = "FILE")]
            config: Option<PathBuf>,
            /// Treat the edge list as directed.
            #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
            directed: Option<String>,
            /// Attackers return one shared forged value.
            #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
            colluding: Option<String>,
            /// Friend mode: trusted or random.
            #[arg(long, alias = "friends", value_name = "MODE")]
            friend_mode: Option<String>,
            $(
                #[arg(long, value_name = "VALUE", help = $help)]
                $field: Option<String>,
            )*
        }

        impl ConfigFlags {
            fn pairs(&self) -> Vec<(&'static str, &str)> {
                let mut v = vec![
                    ("directed", self.directed.as_deref()),
                    ("colluding", self.colluding.as_deref()),
                    ("friend_mode", self.friend_mode.as_deref()),
                ];
                $(v.push(($key, self.$field.as_deref()));)*
                v.into_iter().filter_map(|(k, x)| x.map(|x| (k, x))).collect()
            }
        }
    };
}

config_flags! {
    dataset => "dataset", "Edge-list file";
    bits => "bits", "Identifier bits";
    n_boot => "n_boot", "Bootstrap nodes";
    chunk_factor => "chunk_factor", "Sub-chunk exponent in (0, 1)";
    replication => "replication", "Replicas per key";
    alpha => "alpha", "Parallel queries per round";
    beta => "beta", "Peers returned per query";
    k => "k", "Bucket size";
    gn_ratio => "gn_ratio", "Attack edges per honest node";
    sybils_per_edge => "sybils_per_edge", "Sybils admitted per attack edge";
    per_level => "per_level", "Friends suggested per ancestor";
    mode => "mode", "System mode: ipersea or persea_majority";
    lookups => "lookups", "Measurement lookups per run";
    seed => "seed", "Run seed";
    seeds => "seeds", "Runs per sweep point";
    roles => "roles", "Inspection roles: uniform, target or intermediate";
    fill_attempts => "fill_attempts", "Random samples per bucket when filling tables";
    fill => "fill", "Fill strategy: uniform or closest_point";
    ep_definition => "ep_definition", "Edges-per-node definition: mean_degree or tree_degree";
    max_rounds => "max_rounds", "Lookup round cap";
}

impl ConfigFlags {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            c.apply_text(&text)
                .with_context(|| format!("in {}", path.display()))?;
        }
        for (k, v) in self.pairs() {
            c.set(k, v)
                .with_context(|| format!("--{}", k.replace('_', "-")))?;
        }
        c.validate()?;
        Ok(c)
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(Into::into),
    }
}

fn sweep_configs(
    base: &ExperimentConfig,
    ratios: &[f64],
    modes: &[SystemMode],
    friends: &[FriendMode],
) -> Vec<ExperimentConfig> {
    let ratios = if ratios.is_empty() {
        vec![base.gn_ratio]
    } else {
        ratios.to_vec()
    };
    let modes = if modes.is_empty() {
        vec![base.mode]
    } else {
        modes.to_vec()
    };
    let friends = if friends.is_empty() {
        vec![base.friend_mode]
    } else {
        friends.to_vec()
    };
    let mut out = Vec::new();
    for &mode in &modes {
        // Friend mode only matters when there is a campaign.
        let fm: &[FriendMode] = if mode == SystemMode::Ipersea {
            &friends
        } else {
            &friends[..1]
        };
        for &friend_mode in fm {
            for &gn_ratio in &ratios {
                for _ in 0..base.seeds {
                    out.push(ExperimentConfig {
                        mode,
                        friend_mode,
                        gn_ratio,
                        ..base.clone()
                    });
                }
            }
        }
    }
    out
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, out } => {
            let c = config.resolve()?;
            let report = run_experiment(&c)?;
            emit(
                out.as_ref(),
                &format!("{CSV_HEADER}\n{}\n", report.csv_row()),
            )
        }
        Command::Sweep {
            config,
            gn_ratios,
            modes,
            friend_modes,
            master_seed,
            out,
        } => {
            let base = config.resolve()?;
            if base.dataset.is_none() {
                bail!("sweep needs --dataset");
            }
            let configs = sweep_configs(&base, &gn_ratios, &modes, &friend_modes);
            let rows = sweep(&configs, master_seed);
            for row in &rows {
                if let Err(e) = &row.result {
                    eprintln!(
                        "run {} (g/n {}) failed: {e}",
                        row.config.seed, row.config.gn_ratio
                    );
                }
            }
            emit(out.as_ref(), &sweep_csv(&rows))
        }
        Command::Analyze {
            ep,
            dataset,
            directed,
            gn_ratios,
            alpha,
            beta,
            l_c,
        } => {
            let e_p = match (ep, dataset) {
                (Some(e), _) => e,
                (None, Some(path)) => {
                    let c = ExperimentConfig {
                        dataset: Some(path),
                        directed,
                        ..ExperimentConfig::default()
                    };
                    load_dataset(&c)?.stats().mean_degree
                }
                (None, None) => bail!("analyze needs --ep or --dataset"),
            };
            let mut text = String::from("gn_ratio,e_p,path_len,capped,fp_trusted,fp_random\n");
            for a_h in gn_ratios {
                let inputs = AnalyticInputs {
                    alpha,
                    beta,
                    l_c,
                    ..AnalyticInputs::new(e_p, a_h)
                };
                let path = analytic_path_length(&inputs).ok();
                let fmt = |x: Option<f64>| x.map(|v| format!("{v:.4}")).unwrap_or_default();
                text.push_str(&format!(
                    "{a_h:.2},{e_p:.4},{},{},{},{}\n",
                    path.map(|p| p.hops.to_string()).unwrap_or_default(),
                    path.map(|p| p.capped.to_string()).unwrap_or_default(),
                    fmt(analytic_fp_trusted(&inputs).ok()),
                    fmt(analytic_fp_random(&inputs).ok()),
                ));
            }
            emit(None, &text)
        }
        Command::Stats { config } => {
            let c = config.resolve()?;
            let graph = load_dataset(&c)?;
            let s = graph.stats();
            let space = IdSpace::new(c.bits)?;
            let mut rng = stream(c.seed, phase::BUILD);
            let (_, build) = build_network(&graph, c.n_boot, space, c.chunk_factor, &mut rng)?;
            let text = format!(
                "nodes {}\nedges {}\nmean_degree {:.4}\nclustering {:.4}\nadmitted {}\ndropped {}\nmax_depth {}\n",
                s.node_count,
                s.edge_count,
                s.mean_degree,
                s.clustering,
                build.admitted,
                build.dropped,
                build.depth_histogram.len().saturating_sub(1),
            );
            emit(None, &text)
        }
        Command::Config { config } => emit(None, &config.resolve()?.to_text()),
    }
}
