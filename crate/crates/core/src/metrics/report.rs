use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::diversity::Diversity;

/// Metrics of one predicted sample. MPVPE in mm, PD in cm, PV in cm³.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMetrics {
    pub id: String,
    pub mpvpe: f64,
    pub pd: f64,
    pub pv: f64,
    pub p_iou: f64,
    pub p_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub count: usize,
    pub mpvpe: f64,
    pub pd: f64,
    pub pv: f64,
    pub p_iou: f64,
    pub p_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PFidSummary {
    pub value: f64,
    pub extractor: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub samples: Vec<SampleMetrics>,
    pub aggregate: Option<Aggregate>,
    pub diversity: Option<Diversity>,
    pub p_fid: Option<PFidSummary>,
}

impl MetricReport {
    /// Builds the report; the aggregate is the arithmetic mean of the rows.
    pub fn new(samples: Vec<SampleMetrics>, diversity: Option<Diversity>, p_fid: Option<PFidSummary>) -> Self {
        let aggregate = (!samples.is_empty()).then(|| {
            let n = samples.len() as f64;
            let mean = |f: fn(&SampleMetrics) -> f64| samples.iter().map(f).sum::<f64>() / n;
            Aggregate {
                count: samples.len(),
                mpvpe: mean(|s| s.mpvpe),
                pd: mean(|s| s.pd),
                pv: mean(|s| s.pv),
                p_iou: mean(|s| s.p_iou),
                p_f1: mean(|s| s.p_f1),
            }
        });
        Self { samples, aggregate, diversity, p_fid }
    }

    /// Plain-text table, one row per sample plus a mean row.
    pub fn table(&self) -> String {
        const COLS: [&str; 8] = ["P-IoU", "P-F1", "MPVPE", "PD", "PV", "Ent.", "CS", "P-FID"];
        let id_width = self.samples.iter().map(|s| s.id.len()).chain([4]).max().unwrap_or(4);
        let mut out = String::new();
        let _ = write!(out, "{:<id_width$}", "id");
        for c in COLS {
            let _ = write!(out, " {c:>10}");
        }
        out.push('\n');
        let num = |v: f64| format!("{v:>10.4}");
        let blank = format!("{:>10}", "-");
        for s in &self.samples {
            let _ = write!(out, "{:<id_width$}", s.id);
            for v in [s.p_iou, s.p_f1, s.mpvpe, s.pd, s.pv] {
                out.push(' ');
                out.push_str(&num(v));
            }
            for _ in 0..3 {
                out.push(' ');
                out.push_str(&blank);
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<id_width$}", "mean");
        match &self.aggregate {
            Some(a) => {
                for v in [a.p_iou, a.p_f1, a.mpvpe, a.pd, a.pv] {
                    out.push(' ');
                    out.push_str(&num(v));
                }
            }
            None => {
                for _ in 0..5 {
                    out.push(' ');
                    out.push_str(&blank);
                }
            }
        }
        let div = self.diversity.as_ref();
        for v in [div.map(|d| d.entropy), div.map(|d| d.cluster_size), self.p_fid.as_ref().map(|p| p.value)] {
            out.push(' ');
            out.push_str(&v.map(num).unwrap_or_else(|| blank.clone()));
        }
        out.push('\n');
        out
    }
}
