use crate::defense::FriendMode;
use crate::experiment::config::{friend_mode_name, ExperimentConfig, SystemMode};

/// Metrics of one seeded run. Optional fields are absent when the run mode
/// does not produce them (no campaign in baseline mode, degenerate analytic
/// inputs).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub dataset: String,
    pub mode: SystemMode,
    pub friend_mode: FriendMode,
    pub gn_ratio: f64,
    pub seed: u64,
    pub success_rate: f64,
    pub fp_rate: Option<f64>,
    pub fn_rate: Option<f64>,
    pub hops_regular: f64,
    pub hops_inspection: Option<f64>,
    pub analytic_path_len: Option<usize>,
    pub analytic_fp: Option<f64>,
    /// Vertices of the social graph.
    pub nodes: usize,
    pub edges: usize,
    pub sybils: usize,
    /// Graph vertices the bootstrap BFS never admitted.
    pub dropped_nodes: usize,
    pub admitted: usize,
    pub attack_edges: usize,
    pub skipped_attack_edges: usize,
    pub depth_histogram: Vec<usize>,
    pub ledger_counts: (usize, usize, usize),
    pub e_p: f64,
}

pub const CSV_HEADER: &str = "dataset,mode,friend_mode,gn_ratio,seed,success_rate,fp_rate,fn_rate,\
hops_regular,hops_inspection,analytic_path_len,analytic_fp,nodes,edges,sybils,dropped_nodes";

fn rate(x: f64) -> String {
    format!("{x:.4}")
}

fn opt<T>(x: Option<T>, f: impl Fn(T) -> String) -> String {
    x.map(f).unwrap_or_default()
}

fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl MetricsReport {
    pub fn csv_row(&self) -> String {
        [
            field(&self.dataset),
            self.mode.name().into(),
            friend_mode_name(self.friend_mode).into(),
            format!("{:.2}", self.gn_ratio),
            self.seed.to_string(),
            rate(self.success_rate),
            opt(self.fp_rate, rate),
            opt(self.fn_rate, rate),
            rate(self.hops_regular),
            opt(self.hops_inspection, rate),
            opt(self.analytic_path_len, |h| h.to_string()),
            opt(self.analytic_fp, rate),
            self.nodes.to_string(),
            self.edges.to_string(),
            self.sybils.to_string(),
            self.dropped_nodes.to_string(),
        ]
        .join(",")
    }
}

/// Row for a run that failed: identifying columns filled, metrics empty.
pub fn error_row(config: &ExperimentConfig, seed: u64) -> String {
    let mut row = [
        field(&config.dataset_name()),
        config.mode.name().into(),
        friend_mode_name(config.friend_mode).into(),
        format!("{:.2}", config.gn_ratio),
        seed.to_string(),
    ]
    .join(",");
    row.push_str(&",".repeat(11));
    row
}

/// Per-column means of several seeds' reports. Optional columns average
/// over the reports that have them.
pub fn mean_report(reports: &[MetricsReport]) -> Option<MetricsReport> {
    let first = reports.first()?.clone();
    let n = reports.len() as f64;
    let mean = |f: &dyn Fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    let mean_opt = |f: &dyn Fn(&MetricsReport) -> Option<f64>| {
        let v: Vec<f64> = reports.iter().filter_map(f).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    Some(MetricsReport {
        success_rate: mean(&|r| r.success_rate),
        fp_rate: mean_opt(&|r| r.fp_rate),
        fn_rate: mean_opt(&|r| r.fn_rate),
        hops_regular: mean(&|r| r.hops_regular),
        hops_inspection: mean_opt(&|r| r.hops_inspection),
        sybils: (mean(&|r| r.sybils as f64)).round() as usize,
        dropped_nodes: (mean(&|r| r.dropped_nodes as f64)).round() as usize,
        ..first
    })
}
