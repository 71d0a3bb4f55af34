use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::analytic::EdgesPerNode;
use crate::defense::{FriendMode, RoleMix};
use crate::dht::FillStrategy;
use crate::error::{Error, Result};

/// Which system is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum SystemMode {
    /// Inspection campaign plus ancestor-status filtering.
    #[default]
    Ipersea,
    /// No detection; the initiator majority-votes over replica answers.
    PerseaMajority,
}

impl SystemMode {
    pub fn name(self) -> &'static str {
        match self {
            SystemMode::Ipersea => "ipersea",
            SystemMode::PerseaMajority => "persea_majority",
        }
    }
}

impl FromStr for SystemMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ipersea" => Ok(Self::Ipersea),
            "persea_majority" | "persea" => Ok(Self::PerseaMajority),
            _ => Err(Error::Config(format!("unknown mode {s:?}"))),
        }
    }
}

impl fmt::Display for SystemMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn friend_mode_name(m: FriendMode) -> &'static str {
    match m {
        FriendMode::Trusted => "trusted",
        FriendMode::Random => "random",
    }
}

fn parse_friend_mode(s: &str) -> Result<FriendMode> {
    match s {
        "trusted" => Ok(FriendMode::Trusted),
        "random" => Ok(FriendMode::Random),
        _ => Err(Error::Config(format!("unknown friend mode {s:?}"))),
    }
}

fn parse_roles(s: &str) -> Result<RoleMix> {
    match s {
        "uniform" => Ok(RoleMix::Uniform),
        "target" => Ok(RoleMix::TargetOnly),
        "intermediate" => Ok(RoleMix::IntermediateOnly),
        _ => Err(Error::Config(format!("unknown role mix {s:?}"))),
    }
}

fn parse_fill(s: &str) -> Result<FillStrategy> {
    match s {
        "uniform" => Ok(FillStrategy::Uniform),
        "closest_point" => Ok(FillStrategy::ClosestToPoint),
        _ => Err(Error::Config(format!("unknown fill strategy {s:?}"))),
    }
}

fn fill_name(f: FillStrategy) -> &'static str {
    match f {
        FillStrategy::Uniform => "uniform",
        FillStrategy::ClosestToPoint => "closest_point",
    }
}

fn roles_name(r: RoleMix) -> &'static str {
    match r {
        RoleMix::Uniform => "uniform",
        RoleMix::TargetOnly => "target",
        RoleMix::IntermediateOnly => "intermediate",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: Option<PathBuf>,
    pub directed: bool,
    pub bits: u32,
    pub n_boot: usize,
    pub chunk_factor: f64,
    pub replication: usize,
    pub alpha: usize,
    pub beta: usize,
    pub k: usize,
    pub gn_ratio: f64,
    pub sybils_per_edge: usize,
    pub friend_mode: FriendMode,
    pub per_level: usize,
    pub mode: SystemMode,
    /// Stored pairs, each read back by one measurement lookup.
    pub lookups: usize,
    pub colluding: bool,
    pub seed: u64,
    /// Runs per sweep point.
    pub seeds: usize,
    pub roles: RoleMix,
    /// Random samples per bucket when filling routing tables.
    pub fill_attempts: usize,
    pub fill: FillStrategy,
    pub ep_definition: EdgesPerNode,
    pub max_rounds: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            directed: false,
            bits: 31,
            n_boot: 7,
            chunk_factor: 0.65,
            replication: 7,
            alpha: 5,
            beta: 7,
            k: 7,
            gn_ratio: 1.0,
            sybils_per_edge: 10,
            friend_mode: FriendMode::Trusted,
            per_level: 1,
            mode: SystemMode::Ipersea,
            lookups: 1000,
            colluding: true,
            seed: 1,
            seeds: 5,
            roles: RoleMix::Uniform,
            fill_attempts: 14,
            fill: FillStrategy::Uniform,
            ep_definition: EdgesPerNode::MeanDegree,
            max_rounds: 64,
        }
    }
}

impl ExperimentConfig {
    pub const KEYS: &'static [&'static str] = &[
        "dataset",
        "directed",
        "bits",
        "n_boot",
        "chunk_factor",
        "replication",
        "alpha",
        "beta",
        "k",
        "gn_ratio",
        "sybils_per_edge",
        "friend_mode",
        "per_level",
        "mode",
        "lookups",
        "colluding",
        "seed",
        "seeds",
        "roles",
        "fill_attempts",
        "fill",
        "ep_definition",
        "max_rounds",
    ];

    /// Sets one field from its textual form. Keys may use `-` for `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Config(format!("bad value {v:?} for {key}")))
        }
        fn flag(key: &str, v: &str) -> Result<bool> {
            match v {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err(Error::Config(format!("bad boolean {v:?} for {key}"))),
            }
        }
        match key.as_str() {
            "dataset" => self.dataset = Some(PathBuf::from(value)),
            "directed" => self.directed = flag(&key, value)?,
            "bits" => self.bits = num(&key, value)?,
            "n_boot" => self.n_boot = num(&key, value)?,
            "chunk_factor" => self.chunk_factor = num(&key, value)?,
            "replication" => self.replication = num(&key, value)?,
            "alpha" => self.alpha = num(&key, value)?,
            "beta" => self.beta = num(&key, value)?,
            "k" => self.k = num(&key, value)?,
            "gn_ratio" => self.gn_ratio = num(&key, value)?,
            "sybils_per_edge" => self.sybils_per_edge = num(&key, value)?,
            "friend_mode" | "friends" => self.friend_mode = parse_friend_mode(value)?,
            "per_level" => self.per_level = num(&key, value)?,
            "mode" => self.mode = value.parse()?,
            "lookups" => self.lookups = num(&key, value)?,
            "colluding" => self.colluding = flag(&key, value)?,
            "seed" => self.seed = num(&key, value)?,
            "seeds" => self.seeds = num(&key, value)?,
            "roles" => self.roles = parse_roles(value)?,
            "fill_attempts" => self.fill_attempts = num(&key, value)?,
            "fill" => self.fill = parse_fill(value)?,
            "ep_definition" => self.ep_definition = value.parse()?,
            "max_rounds" => self.max_rounds = num(&key, value)?,
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    /// Serializes every field as `key = value` lines that
    /// [`ExperimentConfig::from_text`] reads back.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        if let Some(d) = &self.dataset {
            put("dataset", d.display().to_string());
        }
        put("directed", self.directed.to_string());
        put("bits", self.bits.to_string());
        put("n_boot", self.n_boot.to_string());
        put("chunk_factor", self.chunk_factor.to_string());
        put("replication", self.replication.to_string());
        put("alpha", self.alpha.to_string());
        put("beta", self.beta.to_string());
        put("k", self.k.to_string());
        put("gn_ratio", self.gn_ratio.to_string());
        put("sybils_per_edge", self.sybils_per_edge.to_string());
        put("friend_mode", friend_mode_name(self.friend_mode).into());
        put("per_level", self.per_level.to_string());
        put("mode", self.mode.name().into());
        put("lookups", self.lookups.to_string());
        put("colluding", self.colluding.to_string());
        put("seed", self.seed.to_string());
        put("seeds", self.seeds.to_string());
        put("roles", roles_name(self.roles).into());
        put("fill_attempts", self.fill_attempts.to_string());
        put("fill", fill_name(self.fill).into());
        put("ep_definition", self.ep_definition.name().into());
        put("max_rounds", self.max_rounds.to_string());
        s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(1..=63).contains(&self.bits) {
            return bad("bits must be in 1..=63");
        }
        if self.n_boot == 0 {
            return bad("n_boot must be positive");
        }
        if !(self.chunk_factor > 0.0 && self.chunk_factor < 1.0) {
            return bad("chunk_factor must be in (0, 1)");
        }
        if self.replication == 0 || self.alpha == 0 || self.beta == 0 || self.k == 0 {
            return bad("replication, alpha, beta and k must be positive");
        }
        if !(self.gn_ratio >= 0.0 && self.gn_ratio.is_finite()) {
            return bad("gn_ratio must be a non-negative number");
        }
        if self.sybils_per_edge == 0 || self.per_level == 0 {
            return bad("sybils_per_edge and per_level must be positive");
        }
        if self.max_rounds == 0 {
            return bad("max_rounds must be positive");
        }
        Ok(())
    }

    /// Dataset label used in reports: the file stem, or `-`.
    pub fn dataset_name(&self) -> String {
        self.dataset
            .as_ref()
            .and_then(|p| p.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "-".into())
    }
}
