use std::collections::HashMap;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::adversary::{spawn_sybils, AdversaryPolicy, ForgeMode, SybilReport};
use crate::analytic::{
    analytic_fp_random, analytic_fp_trusted, analytic_path_length, edges_per_node, AnalyticInputs,
};
use crate::defense::{
    resolve_all, run_inspection_campaign, CampaignParams, CampaignReport, FriendMode, FriendPool,
};
use crate::dht::{
    majority_vote, replicated_get, replicated_put, LookupParams, Overlay, OverlayParams, Storage,
    Value,
};
use crate::error::{Error, Result};
use crate::experiment::config::{ExperimentConfig, SystemMode};
use crate::experiment::report::MetricsReport;
use crate::graph::{parse_edge_list, SocialGraph};
use crate::idspace::{build_network, BootstrapTree, BuildReport, IdSpace, NodeId, NodeIdx};
use crate::rng::{derive_seed, phase, stream};

/// A fully built network for one seed: tree, Sybils, routing tables and,
/// in iPersea mode, the campaign outcome.
#[derive(Debug, Clone)]
pub struct World {
    pub config: ExperimentConfig,
    pub tree: BootstrapTree,
    pub build: BuildReport,
    pub sybils: SybilReport,
    pub overlay: Overlay,
    pub pool: FriendPool,
    pub campaign: Option<CampaignReport>,
    /// Resolved verdict per node, `true` = honest. All `true` without a
    /// campaign.
    pub verdicts: Vec<bool>,
}

/// Outcome of the measurement workload.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub success_rate: f64,
    pub hops_regular: f64,
}

impl World {
    pub fn build(config: &ExperimentConfig, graph: &SocialGraph) -> Result<Self> {
        config.validate()?;
        let seed = config.seed;
        let space = IdSpace::new(config.bits)?;
        let (mut tree, build) = build_network(
            graph,
            config.n_boot,
            space,
            config.chunk_factor,
            &mut stream(seed, phase::BUILD),
        )?;
        let honest = tree.honest_count();
        if honest == 0 && config.gn_ratio > 0.0 {
            return Err(Error::Config(
                "attack edges requested without honest nodes".into(),
            ));
        }
        let forge = if config.colluding {
            ForgeMode::Colluding
        } else {
            ForgeMode::Independent
        };
        let policy = AdversaryPolicy {
            sybils_per_edge: config.sybils_per_edge,
            forge,
            ..AdversaryPolicy::from_ratio(config.gn_ratio, honest)?
        };
        let sybils = spawn_sybils(&mut tree, &policy, &mut stream(seed, phase::SYBILS))?;
        let overlay = Overlay::build(
            &tree,
            OverlayParams {
                k: config.k,
                fill_attempts: config.fill_attempts,
                replication: config.replication,
                fill: config.fill,
            },
            forge,
            derive_seed(seed, phase::TABLES),
        )?;
        let pool = FriendPool::new(&tree, Some(graph));
        let mut world = Self {
            config: config.clone(),
            verdicts: vec![true; tree.len()],
            tree,
            build,
            sybils,
            overlay,
            pool,
            campaign: None,
        };
        if config.mode == SystemMode::Ipersea {
            world.run_campaign()?;
        }
        Ok(world)
    }

    pub fn lookup_params(&self) -> LookupParams {
        LookupParams {
            alpha: self.config.alpha,
            beta: self.config.beta,
            max_rounds: self.config.max_rounds,
        }
    }

    /// Runs (or reruns) the inspection campaign and refreshes the verdicts.
    pub fn run_campaign(&mut self) -> Result<&CampaignReport> {
        let params = CampaignParams {
            mode: self.config.friend_mode,
            per_level: self.config.per_level,
            roles: self.config.roles,
            lookup: self.lookup_params(),
        };
        let report = run_inspection_campaign(
            &self.tree,
            &self.overlay,
            &self.pool,
            params,
            &mut stream(self.config.seed, phase::CAMPAIGN),
        )?;
        self.verdicts = resolve_all(&self.tree, &report.ledger);
        Ok(self.campaign.insert(report))
    }

    pub fn honest_nodes(&self) -> Vec<NodeIdx> {
        self.tree
            .nodes()
            .filter(|(_, n)| n.honest)
            .map(|(i, _)| i)
            .collect()
    }

    /// Stores `lookups` random pairs from random honest initiators, then
    /// reads each back from another random honest initiator.
    pub fn measure(&self) -> Result<Measurement> {
        let n = self.config.lookups;
        if n == 0 {
            return Ok(Measurement {
                success_rate: 0.0,
                hops_regular: 0.0,
            });
        }
        let honest = self.honest_nodes();
        let space = self.overlay.space();
        let mut rng = stream(self.config.seed, phase::WORKLOAD);
        let work: Vec<(NodeId, Value, NodeIdx, NodeIdx)> = (0..n)
            .map(|_| {
                let key = NodeId(rng.gen_range(0..space.size()));
                let value = Value::genuine(rng.gen());
                let put_from = *honest.choose(&mut rng).expect("honest nodes exist");
                let get_from = *honest.choose(&mut rng).expect("honest nodes exist");
                (key, value, put_from, get_from)
            })
            .collect();

        let params = self.lookup_params();
        let filtered = self.config.mode == SystemMode::Ipersea;
        let verdicts = &self.verdicts;
        let keep = move |i: NodeIdx| !filtered || verdicts[i.index()];

        let mut storage = Storage::new();
        for &(key, value, from, _) in &work {
            replicated_put(&self.overlay, &mut storage, from, key, value, params, &keep)?;
        }

        let vote_seed = derive_seed(self.config.seed, phase::VOTE);
        let outcomes: Vec<Result<(bool, usize, usize)>> = work
            .par_iter()
            .enumerate()
            .map(|(i, &(key, value, _, from))| {
                let replies = replicated_get(&self.overlay, &storage, from, key, params, &keep)?;
                let hops: usize = replies.iter().map(|r| r.trace.hops).sum();
                let values: Vec<Value> = replies.iter().filter_map(|r| r.value).collect();
                let ok = if filtered {
                    values.contains(&value)
                } else {
                    majority_vote(&values, &mut stream(vote_seed, i as u64))
                        .is_ok_and(|v| v == value)
                };
                Ok((ok, hops, replies.len()))
            })
            .collect();
        let (mut ok, mut hops, mut count) = (0usize, 0usize, 0usize);
        for o in outcomes {
            let (s, h, c) = o?;
            ok += usize::from(s);
            hops += h;
            count += c;
        }
        Ok(Measurement {
            success_rate: ok as f64 / n as f64,
            hops_regular: if count == 0 {
                0.0
            } else {
                hops as f64 / count as f64
            },
        })
    }

    /// Full report for this world, running the measurement workload.
    pub fn report(&self, graph: &SocialGraph) -> Result<MetricsReport> {
        let m = self.measure()?;
        let c = &self.config;
        let e_p = edges_per_node(
            c.ep_definition,
            graph,
            &self.tree,
            self.sybils.attack_edges.len(),
        );
        let inputs = AnalyticInputs {
            alpha: c.alpha,
            beta: c.beta,
            ..AnalyticInputs::new(e_p, c.gn_ratio)
        };
        let analytic_fp = match c.friend_mode {
            FriendMode::Trusted => analytic_fp_trusted(&inputs),
            FriendMode::Random => analytic_fp_random(&inputs),
        };
        let (fp, fneg, hops_inspection, ledger_counts) = match &self.campaign {
            Some(r) => {
                let (fp, fneg) = r.error_rates(&self.overlay);
                (
                    Some(fp),
                    Some(fneg),
                    r.mean_inspection_hops(),
                    r.ledger.counts(),
                )
            }
            None => (None, None, None, (0, 0, 0)),
        };
        Ok(MetricsReport {
            dataset: c.dataset_name(),
            mode: c.mode,
            friend_mode: c.friend_mode,
            gn_ratio: c.gn_ratio,
            seed: c.seed,
            success_rate: m.success_rate,
            fp_rate: fp,
            fn_rate: fneg,
            hops_regular: m.hops_regular,
            hops_inspection,
            analytic_path_len: analytic_path_length(&inputs).ok().map(|p| p.hops),
            analytic_fp: analytic_fp.ok(),
            nodes: graph.node_count(),
            edges: graph.edge_count(),
            sybils: self.sybils.attackers.len(),
            dropped_nodes: self.build.dropped,
            admitted: self.build.admitted,
            attack_edges: self.sybils.attack_edges.len(),
            skipped_attack_edges: self.sybils.skipped_edges,
            depth_histogram: self.build.depth_histogram.clone(),
            ledger_counts,
            e_p,
        })
    }
}

/// Reads the configured dataset.
pub fn load_dataset(config: &ExperimentConfig) -> Result<SocialGraph> {
    let path = config
        .dataset
        .as_ref()
        .ok_or_else(|| Error::Config("no dataset given".into()))?;
    parse_edge_list(BufReader::new(File::open(path)?), config.directed)
}

/// Runs one experiment on an already loaded graph.
pub fn run_on_graph(config: &ExperimentConfig, graph: &SocialGraph) -> Result<MetricsReport> {
    World::build(config, graph)?.report(graph)
}

/// Loads the dataset and runs one experiment with `config.seed`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<MetricsReport> {
    config.validate()?;
    run_on_graph(config, &load_dataset(config)?)
}

/// One sweep entry: the config as run (with its derived seed) and the result.
#[derive(Debug)]
pub struct SweepRow {
    pub config: ExperimentConfig,
    pub result: Result<MetricsReport>,
}

/// Seed of sweep entry `index`.
pub fn sweep_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, index as u64)
}

/// Runs every config with the seed derived from `master` and its index.
/// Failed runs are kept as error rows.
pub fn sweep(configs: &[ExperimentConfig], master: u64) -> Vec<SweepRow> {
    let mut graphs: HashMap<(Option<PathBuf>, bool), std::result::Result<SocialGraph, String>> =
        HashMap::new();
    for c in configs {
        graphs
            .entry((c.dataset.clone(), c.directed))
            .or_insert_with(|| load_dataset(c).map_err(|e| e.to_string()));
    }
    configs
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let mut config = c.clone();
            config.seed = sweep_seed(master, i);
            let result = match &graphs[&(c.dataset.clone(), c.directed)] {
                Ok(g) => run_on_graph(&config, g),
                Err(e) => Err(Error::Config(format!("dataset unavailable: {e}"))),
            };
            SweepRow { config, result }
        })
        .collect()
}

/// [`sweep`] over an in-memory graph; every config's dataset is ignored.
pub fn sweep_on_graph(
    graph: &SocialGraph,
    configs: &[ExperimentConfig],
    master: u64,
) -> Vec<SweepRow> {
    configs
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let mut config = c.clone();
            config.seed = sweep_seed(master, i);
            let result = run_on_graph(&config, graph);
            SweepRow { config, result }
        })
        .collect()
}

/// CSV for sweep rows, header first.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::new();
    out.push_str(crate::experiment::report::CSV_HEADER);
    out.push('\n');
    for row in rows {
        match &row.result {
            Ok(r) => out.push_str(&r.csv_row()),
            Err(_) => out.push_str(&crate::experiment::report::error_row(
                &row.config,
                row.config.seed,
            )),
        }
        out.push('\n');
    }
    out
}
