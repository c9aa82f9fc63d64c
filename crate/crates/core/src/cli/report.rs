//! Per-layer cost reports: a fixed-width table for people and CSV/JSON for tools.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hwmodel::{HwConfig, NetworkCost};
use crate::netgraph::NetworkGraph;
use crate::policy::QuantPolicy;
use crate::replicate::Objective;

pub const TOTAL_LABEL: &str = "TOTAL";

/// One layer of a report, or the totals row (`layer == "TOTAL"`, bitwidths
/// and replication empty). Times are seconds; `_pre` is one copy, `_post`
/// divides by the replication factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub layer: String,
    pub w_bits: Option<u32>,
    pub a_bits: Option<u32>,
    /// Tiles of one copy.
    pub tiles: u64,
    pub r: Option<u64>,
    pub tiles_used: u64,
    pub t_tile_in_s: f64,
    pub t_tile_out_s: f64,
    pub t_vmm_s: f64,
    pub t_digital_s: f64,
    pub t_total_pre_s: f64,
    pub t_total_post_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub network: String,
    pub latency_s: f64,
    pub throughput_per_s: f64,
    pub bottleneck_layer: String,
    pub bottleneck_s: f64,
    pub tiles_used: u64,
    pub energy_j: f64,
    /// Set when the report compares a replicated design against one copy per layer.
    pub comparison: Option<Comparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub objective: Objective,
    pub tile_budget: u64,
    pub baseline_metric_s: f64,
    pub achieved_metric_s: f64,
    pub improvement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub total: ReportRow,
    pub summary: Summary,
}

/// Metric of the objective as read back from report rows: the summed or the
/// largest layer time, before or after replication.
pub fn metric_from_rows(rows: &[ReportRow], objective: Objective, post: bool) -> f64 {
    let t = |r: &ReportRow| if post { r.t_total_post_s } else { r.t_total_pre_s };
    match objective {
        Objective::Latency => rows.iter().map(t).sum(),
        Objective::Throughput => rows.iter().map(t).fold(0.0, f64::max),
    }
}

fn sum_row(rows: &[ReportRow]) -> ReportRow {
    let sum = |f: fn(&ReportRow) -> f64| rows.iter().map(f).sum::<f64>();
    ReportRow {
        layer: TOTAL_LABEL.into(),
        w_bits: None,
        a_bits: None,
        tiles: rows.iter().map(|r| r.tiles).sum(),
        r: None,
        tiles_used: rows.iter().map(|r| r.tiles_used).sum(),
        t_tile_in_s: sum(|r| r.t_tile_in_s),
        t_tile_out_s: sum(|r| r.t_tile_out_s),
        t_vmm_s: sum(|r| r.t_vmm_s),
        t_digital_s: sum(|r| r.t_digital_s),
        t_total_pre_s: sum(|r| r.t_total_pre_s),
        t_total_post_s: sum(|r| r.t_total_post_s),
    }
}

impl Report {
    pub fn new(net: &NetworkGraph, policy: &QuantPolicy, cost: &NetworkCost, cfg: &HwConfig) -> Self {
        let rows: Vec<ReportRow> = net
            .layers
            .iter()
            .enumerate()
            .map(|(l, layer)| {
                let c = &cost.per_layer[l];
                let r = cost.replication[l];
                let [t_in, t_out, t_vmm, t_dig, t_total] = c.seconds(cfg);
                ReportRow {
                    layer: layer.name.clone(),
                    w_bits: Some(policy.bits[l].w_bits),
                    a_bits: Some(policy.bits[l].a_bits),
                    tiles: c.tiles,
                    r: Some(r),
                    tiles_used: c.tiles * r,
                    t_tile_in_s: t_in,
                    t_tile_out_s: t_out,
                    t_vmm_s: t_vmm,
                    t_digital_s: t_dig,
                    t_total_pre_s: t_total,
                    t_total_post_s: c.total_cycles() as f64 / (r as f64 * cfg.clock_hz),
                }
            })
            .collect();
        let total = sum_row(&rows);
        let summary = Summary {
            network: net.name.clone(),
            latency_s: cost.latency_s(),
            throughput_per_s: cost.throughput_per_s(),
            bottleneck_layer: net.layers[cost.bottleneck_layer].name.clone(),
            bottleneck_s: cost.bottleneck_s(),
            tiles_used: cost.tiles_used,
            energy_j: cost.energy_j(),
            comparison: None,
        };
        Self { rows, total, summary }
    }

    /// Adds the replicated-vs-unreplicated comparison, computed from this
    /// report's own rows.
    pub fn with_comparison(mut self, objective: Objective, tile_budget: u64) -> Self {
        let baseline = metric_from_rows(&self.rows, objective, false);
        let achieved = metric_from_rows(&self.rows, objective, true);
        self.summary.comparison = Some(Comparison {
            objective,
            tile_budget,
            baseline_metric_s: baseline,
            achieved_metric_s: achieved,
            improvement: baseline / achieved,
        });
        self
    }

    /// Layer rows followed by the totals row.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in self.rows.iter().chain(std::iter::once(&self.total)) {
            w.serialize(row).map_err(|e| Error::Config(format!("csv: {e}")))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Config(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Parses [`Report::to_csv`] output into layer rows and the totals row.
    pub fn rows_from_csv(text: &str) -> Result<(Vec<ReportRow>, ReportRow)> {
        let mut rows: Vec<ReportRow> = Vec::new();
        for rec in csv::Reader::from_reader(text.as_bytes()).deserialize() {
            rows.push(rec.map_err(|e| Error::Config(format!("report csv: {e}")))?);
        }
        match rows.pop() {
            Some(total) if total.layer == TOTAL_LABEL => Ok((rows, total)),
            _ => Err(Error::Config("report csv has no TOTAL row".into())),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<24} {:>3} {:>3} {:>6} {:>4} {:>8} {:>11} {:>11} {:>11} {:>11} {:>11} {:>11}",
            "layer", "w", "a", "tiles", "r", "used", "in_us", "out_us", "vmm_us", "dig_us", "pre_us", "post_us"
        );
        let us = |t: f64| format!("{:.3}", t * 1e6);
        let opt = |v: Option<u64>| v.map_or(String::new(), |v| v.to_string());
        for row in self.rows.iter().chain(std::iter::once(&self.total)) {
            let _ = writeln!(
                s,
                "{:<24} {:>3} {:>3} {:>6} {:>4} {:>8} {:>11} {:>11} {:>11} {:>11} {:>11} {:>11}",
                row.layer,
                opt(row.w_bits.map(u64::from)),
                opt(row.a_bits.map(u64::from)),
                row.tiles,
                opt(row.r),
                row.tiles_used,
                us(row.t_tile_in_s),
                us(row.t_tile_out_s),
                us(row.t_vmm_s),
                us(row.t_digital_s),
                us(row.t_total_pre_s),
                us(row.t_total_post_s),
            );
        }
        let m = &self.summary;
        let _ = writeln!(s);
        let _ = writeln!(s, "network        {}", m.network);
        let _ = writeln!(s, "latency        {:.6} ms", m.latency_s * 1e3);
        let _ = writeln!(s, "throughput     {:.3} inf/s", m.throughput_per_s);
        let _ = writeln!(s, "bottleneck     {} ({:.6} ms)", m.bottleneck_layer, m.bottleneck_s * 1e3);
        let _ = writeln!(s, "tiles          {}", m.tiles_used);
        let _ = writeln!(s, "energy         {:.6} mJ", m.energy_j * 1e3);
        if let Some(c) = &m.comparison {
            let _ = writeln!(s, "objective      {}", c.objective);
            let _ = writeln!(s, "tile budget    {}", c.tile_budget);
            let _ = writeln!(s, "baseline       {:.6} ms", c.baseline_metric_s * 1e3);
            let _ = writeln!(s, "achieved       {:.6} ms", c.achieved_metric_s * 1e3);
            let _ = writeln!(s, "improvement    {:.4}x", c.improvement);
        }
        s
    }
}
