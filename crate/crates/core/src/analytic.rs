//! Closed-form estimates of lookup path length and false-positive rates.
//!
//! With `r = a_h / e_p` the expected number of malicious peers learned in
//! the first round is
//! `m_1 = α·r·β + (1 − α·r)·β·r`, and each later round adds
//! `(α − m_i/β)·β·r`. Round `i` goes wrong with probability
//! `q_i = m_i / (α·β)` clamped to `[0, 1]`; `P_j` is the product of
//! `q_1..q_j`.

use crate::error::{Error, Result};
use crate::graph::SocialGraph;
use crate::idspace::BootstrapTree;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticInputs {
    /// Mean edges per node.
    pub e_p: f64,
    /// Attack edges per honest node, `g / n`.
    pub a_h: f64,
    pub alpha: usize,
    pub beta: usize,
    /// Failure-probability threshold for the path length.
    pub l_c: f64,
    /// Depth of the inspected node minus one.
    pub l_h: u32,
    /// Friends per upper level.
    pub c_nl: usize,
    pub max_iter: usize,
}

impl AnalyticInputs {
    pub fn new(e_p: f64, a_h: f64) -> Self {
        Self {
            e_p,
            a_h,
            alpha: 5,
            beta: 7,
            l_c: 0.001,
            l_h: 1,
            c_nl: 1,
            max_iter: 64,
        }
    }

    fn validate(&self) -> Result<f64> {
        if !(self.e_p > 0.0 && self.e_p.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "e_p must be positive, got {}",
                self.e_p
            )));
        }
        if !(self.a_h >= 0.0 && self.a_h.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "a_h must be non-negative, got {}",
                self.a_h
            )));
        }
        if !(self.l_c > 0.0 && self.l_c < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "l_c must be in (0, 1), got {}",
                self.l_c
            )));
        }
        if self.alpha == 0 || self.beta == 0 || self.max_iter == 0 {
            return Err(Error::InvalidArgument(
                "alpha, beta and max_iter must be positive".into(),
            ));
        }
        let r = self.a_h / self.e_p;
        if r > 1.0 {
            return Err(Error::Degenerate(format!(
                "a_h / e_p = {r} exceeds 1: more attack edges than edges per node"
            )));
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaliceStep {
    pub m: f64,
    pub q: f64,
    /// Cumulative product `q_1 … q_i`.
    pub p: f64,
}

pub fn malice_sequence(inputs: &AnalyticInputs, max_iter: usize) -> Result<Vec<MaliceStep>> {
    let r = inputs.validate()?;
    let (alpha, beta) = (inputs.alpha as f64, inputs.beta as f64);
    let mut m = alpha * r * beta + (1.0 - alpha * r) * beta * r;
    let mut p = 1.0;
    let mut out = Vec::with_capacity(max_iter);
    for _ in 0..max_iter {
        let q = (m / (alpha * beta)).clamp(0.0, 1.0);
        p *= q;
        out.push(MaliceStep { m, q, p });
        m += (alpha - m / beta) * beta * r;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathLength {
    pub hops: usize,
    /// `P_j` never dropped to `l_c` within `max_iter` steps.
    pub capped: bool,
}

/// Smallest `j` with `P_j ≤ l_c`.
pub fn analytic_path_length(inputs: &AnalyticInputs) -> Result<PathLength> {
    let seq = malice_sequence(inputs, inputs.max_iter)?;
    Ok(match seq.iter().position(|s| s.p <= inputs.l_c) {
        Some(i) => PathLength {
            hops: i + 1,
            capped: false,
        },
        None => PathLength {
            hops: inputs.max_iter,
            capped: true,
        },
    })
}

/// `q_1`.
pub fn analytic_fp_trusted(inputs: &AnalyticInputs) -> Result<f64> {
    Ok(malice_sequence(inputs, 1)?[0].q)
}

/// `u + q_1 − u·q_1` with `u = (a_h/e_p)·((e_p − a_h)/e_p)`, the chance of a
/// malicious friend inspecting an honest node.
pub fn analytic_fp_random(inputs: &AnalyticInputs) -> Result<f64> {
    let q1 = analytic_fp_trusted(inputs)?;
    if inputs.a_h > inputs.e_p {
        return Err(Error::Degenerate("a_h exceeds e_p".into()));
    }
    let u = (inputs.a_h / inputs.e_p) * ((inputs.e_p - inputs.a_h) / inputs.e_p);
    Ok(u + q1 - u * q1)
}

/// Candidate definitions of `e_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgesPerNode {
    /// `2|E| / |V|` of the social graph.
    #[default]
    MeanDegree,
    /// `(2·(honest tree edges) + g) / n`: degree inside the bootstrap tree
    /// plus attack edges.
    TreeDegreePlusAttack,
}

impl EdgesPerNode {
    pub fn name(self) -> &'static str {
        match self {
            EdgesPerNode::MeanDegree => "mean_degree",
            EdgesPerNode::TreeDegreePlusAttack => "tree_degree",
        }
    }
}

impl std::str::FromStr for EdgesPerNode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean_degree" => Ok(Self::MeanDegree),
            "tree_degree" => Ok(Self::TreeDegreePlusAttack),
            _ => Err(Error::Config(format!("unknown e_p definition {s:?}"))),
        }
    }
}

/// `e_p` under `def`. `attack_edges` is only used by the tree definition.
pub fn edges_per_node(
    def: EdgesPerNode,
    graph: &SocialGraph,
    tree: &BootstrapTree,
    attack_edges: usize,
) -> f64 {
    match def {
        EdgesPerNode::MeanDegree => crate::graph::mean_degree(graph),
        EdgesPerNode::TreeDegreePlusAttack => {
            let honest = tree.honest_count();
            if honest == 0 {
                return 0.0;
            }
            let tree_edges = tree
                .nodes()
                .filter(|(_, n)| n.honest && n.parent.is_some())
                .count();
            (2 * tree_edges + attack_edges) as f64 / honest as f64
        }
    }
}
