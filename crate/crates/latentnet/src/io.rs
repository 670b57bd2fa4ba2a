//! Edge-list ingestion, fit artifacts, and CSV emitters.

use crate::error::{Error, Result};
use crate::family::EdgeFamily;
use crate::inference::{ComparisonResult, InferenceReport, Target};
use crate::network::Network;
use crate::pgd::{FitResult, IterTrace, PgdConfig};
use crate::rasvt::RasvtConfig;
use crate::simulation::{ConvergenceRow, NormalityStudy};
use crate::state::LatentState;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

/// Current fit artifact schema version.
pub const ARTIFACT_VERSION: u32 = 1;

/// Loads a CSV edge list `(source_label, target_label, weight)` into a dense
/// symmetric network. Lines starting with `#` are comments; a header row is
/// detected by a non-numeric weight field in the first record. Unlisted pairs
/// get weight zero.
pub fn load_network(path: &Path, family: EdgeFamily) -> Result<Network<f64>> {
    let text = std::fs::read_to_string(path)?;
    let path_str = path.display().to_string();
    let mut edges: Vec<(String, String, f64, usize)> = Vec::new();
    let mut first_record = true;
    for (lineno, raw) in text.lines().enumerate() {
        let line_num = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(|f| f.trim()).collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                path: path_str,
                line: line_num,
                msg: format!("expected 3 comma-separated fields, got {}", fields.len()),
            });
        }
        match fields[2].parse::<f64>() {
            Ok(w) => {
                edges.push((fields[0].to_string(), fields[1].to_string(), w, line_num));
            }
            Err(_) if first_record => {
                // header row
            }
            Err(_) => {
                return Err(Error::Parse {
                    path: path_str,
                    line: line_num,
                    msg: format!("cannot parse weight '{}'", fields[2]),
                });
            }
        }
        first_record = false;
    }

    let mut label_set: BTreeMap<String, usize> = BTreeMap::new();
    for (s, t, _, _) in &edges {
        label_set.entry(s.clone()).or_insert(0);
        label_set.entry(t.clone()).or_insert(0);
    }
    // internal indices by sorted label order
    let labels: Vec<String> = label_set.keys().cloned().collect();
    for (idx, l) in labels.iter().enumerate() {
        *label_set.get_mut(l).unwrap() = idx;
    }
    let n = labels.len();
    let mut w = DMatrix::zeros(n, n);
    let mut seen = std::collections::HashSet::new();
    for (s, t, weight, line) in &edges {
        if s == t {
            return Err(Error::Parse {
                path: path_str.clone(),
                line: *line,
                msg: format!("self loop on node '{s}'"),
            });
        }
        let i = label_set[s];
        let j = label_set[t];
        let key = (i.min(j), i.max(j));
        if !seen.insert(key) {
            return Err(Error::Parse {
                path: path_str.clone(),
                line: *line,
                msg: format!("duplicate pair ('{s}', '{t}')"),
            });
        }
        family
            .check_support(*weight, "weight field")
            .map_err(|e| Error::Parse {
                path: path_str.clone(),
                line: *line,
                msg: e.to_string(),
            })?;
        w[(i, j)] = *weight;
        w[(j, i)] = *weight;
    }
    Network::new(w, labels)
}

/// Writes the nonzero upper-triangular entries of a network as an edge list.
pub fn save_edge_list(net: &Network<f64>, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "source,target,weight")?;
    let n = net.n();
    for i in 0..n {
        for j in (i + 1)..n {
            let w = net.weight(i, j);
            if w != 0.0 {
                writeln!(f, "{},{},{}", net.labels()[i], net.labels()[j], w)?;
            }
        }
    }
    Ok(())
}

/// Serialized model fit: everything needed to resume inference.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitArtifact {
    pub version: u32,
    pub family: EdgeFamily,
    pub n: usize,
    pub k: usize,
    pub labels: Vec<String>,
    /// Z row-major, one inner vector per node.
    pub z: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub pgd_config: PgdConfig<f64>,
    pub rasvt_config: Option<RasvtConfig<f64>>,
    pub converged: bool,
    pub iterations: usize,
    pub budget_exhausted_count: usize,
    pub trace_path: Option<String>,
    /// Path of the edge list the fit was computed from; inference reloads it.
    pub network_path: Option<String>,
}

impl FitArtifact {
    pub fn from_fit(
        net: &Network<f64>,
        family: EdgeFamily,
        res: &FitResult<f64>,
        pgd_config: &PgdConfig<f64>,
        rasvt_config: Option<RasvtConfig<f64>>,
        trace_path: Option<String>,
        network_path: Option<String>,
    ) -> Self {
        let state = &res.state;
        FitArtifact {
            version: ARTIFACT_VERSION,
            family,
            n: state.n(),
            k: state.k(),
            labels: net.labels().to_vec(),
            z: (0..state.n())
                .map(|i| (0..state.k()).map(|c| state.z[(i, c)]).collect())
                .collect(),
            alpha: state.alpha.iter().copied().collect(),
            pgd_config: *pgd_config,
            rasvt_config,
            converged: res.converged,
            iterations: res.trace.len(),
            budget_exhausted_count: res.budget_exhausted_count,
            trace_path,
            network_path,
        }
    }

    pub fn state(&self) -> LatentState<f64> {
        let z = DMatrix::from_fn(self.n, self.k, |i, c| self.z[i][c]);
        let alpha = DVector::from_vec(self.alpha.clone());
        LatentState::new(z, alpha)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(f, self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(f)?)
    }

    pub fn node_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Config(format!("unknown node label '{label}'")))
    }
}

/// Optimizer trace as CSV.
pub fn save_trace_csv(trace: &[IterTrace<f64>], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iter", "loss", "max_abs_score", "eta", "backtracks"])?;
    for t in trace {
        w.write_record([
            t.iter.to_string(),
            t.loss.to_string(),
            t.max_abs_score.to_string(),
            t.eta.to_string(),
            t.backtracks.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn target_str(t: &Target) -> String {
    match t {
        Target::Entry { node, coord } => format!("entry:{node}:{coord}"),
        Target::EdgeMean { i, j } => format!("edge_mean:{i}:{j}"),
        Target::InnerProduct { i, j } => format!("inner_product:{i}:{j}"),
        Target::Custom(s) => format!("custom:{s}"),
    }
}

/// Inference reports as CSV.
pub fn write_reports_csv<W: Write>(reports: &[InferenceReport<f64>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["target", "estimate", "se", "z", "p", "ci_low", "ci_high"])?;
    for r in reports {
        w.write_record([
            target_str(&r.target),
            r.estimate.to_string(),
            r.se.to_string(),
            r.z.to_string(),
            r.p_value.to_string(),
            r.ci_low.to_string(),
            r.ci_high.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Pairwise comparison CSV plus per-node rejection rates.
pub fn write_comparison_csv(
    cmp: &ComparisonResult<f64>,
    labels: &[String],
    pairs_path: &Path,
    rates_path: &Path,
) -> Result<()> {
    let mut w = csv::Writer::from_path(pairs_path)?;
    w.write_record(["node_i", "node_j", "diff", "se", "z", "p", "rejected"])?;
    for t in &cmp.tests {
        w.write_record([
            labels[t.i].clone(),
            labels[t.j].clone(),
            t.diff.to_string(),
            t.se.to_string(),
            t.z.to_string(),
            t.p_value.to_string(),
            t.rejected.to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(rates_path)?;
    w.write_record(["label", "rejection_rate"])?;
    for (label, rate) in &cmp.node_rejection_rates {
        w.write_record([label.clone(), rate.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Convergence table CSV mirroring the adaptive/fixed step-size layout.
pub fn write_convergence_csv(rows: &[ConvergenceRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "eta_scale",
        "adaptive",
        "reps",
        "converged",
        "proportion",
        "mean_conv_iter",
    ])?;
    for r in rows {
        w.write_record([
            r.eta_scale.to_string(),
            r.adaptive.to_string(),
            r.reps.to_string(),
            r.converged.to_string(),
            r.proportion.to_string(),
            r.mean_conv_iter.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-replication standardized statistics CSV.
pub fn write_normality_csv(study: &NormalityStudy, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["rep", "t_z11", "t_mu12", "converged"])?;
    for r in &study.reps {
        w.write_record([
            r.rep.to_string(),
            r.t_z11.to_string(),
            r.t_mu12.to_string(),
            r.converged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
