//! SNAP-count sweep over Fock levels for both schemes.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::sublinear::min_sublinear_cutoff;
use super::{compile_fock_sublinear, compile_state_prep, PrepPlan, Scheme, TargetState};
use crate::error::{Error, Partial, Result};
use crate::fock::CutoffDim;
use crate::optimizer::OptimizerConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutoffRule {
    /// `max(2(n+1), n+15)` for the linear scheme and `n + 2⌈3√n⌉ + 15` for
    /// the folding scheme.
    PerScheme,
    Fixed(CutoffDim),
}

impl CutoffRule {
    pub fn cutoff(self, scheme: Scheme, n: usize) -> CutoffDim {
        match (self, scheme) {
            (CutoffRule::Fixed(c), _) => c,
            (CutoffRule::PerScheme, Scheme::Linear) => CutoffDim::for_target_dim(n + 1),
            (CutoffRule::PerScheme, Scheme::Sublinear) => {
                CutoffDim::new(min_sublinear_cutoff(n) + (3.0 * (n as f64).sqrt()).ceil() as usize)
                    .expect("at least 16")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub scheme: Scheme,
    pub target_fidelity: f64,
    pub snap_count: usize,
    pub displacement_count: usize,
    pub achieved_fidelity: f64,
    pub cutoff: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// One line per cell that could not be compiled to its target.
    pub missing: Vec<String>,
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.rows.is_empty() {
            w.write_record([
                "n",
                "scheme",
                "target_fidelity",
                "snap_count",
                "displacement_count",
                "achieved_fidelity",
                "cutoff",
            ])
            .map_err(csv_error)?;
        }
        for row in &self.rows {
            w.serialize(row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn row(&self, n: usize, scheme: Scheme, target_fidelity: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.n == n && r.scheme == scheme && r.target_fidelity == target_fidelity)
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

fn row_from(plan: &PrepPlan, n: usize, target_fidelity: f64) -> SweepRow {
    SweepRow {
        n,
        scheme: plan.scheme,
        target_fidelity,
        snap_count: plan.snap_count,
        displacement_count: plan.displacement_count,
        achieved_fidelity: plan.fidelity,
        cutoff: plan.sequence.cutoff().get(),
    }
}

/// Compiles `|n⟩` with both schemes for every `(n, F)` pair. Rows come out
/// ordered by `n`, then `F`, then scheme. Cells that miss their target are
/// listed in `missing` instead of failing the sweep.
pub fn gate_count_sweep(
    n_values: &[usize],
    fidelities: &[f64],
    rule: CutoffRule,
    config: &OptimizerConfig,
) -> Result<SweepTable> {
    if n_values.is_empty() || fidelities.is_empty() {
        return Err(Error::invalid("sweep needs at least one level and one fidelity"));
    }
    let mut table = SweepTable::default();
    // The linear plan does not depend on the target fidelity.
    let mut linear: BTreeMap<usize, std::result::Result<PrepPlan, String>> = BTreeMap::new();
    for &n in n_values {
        for &f in fidelities {
            let plan = linear.entry(n).or_insert_with(|| {
                compile_state_prep(&TargetState::fock(n), rule.cutoff(Scheme::Linear, n), config)
                    .map_err(|e| e.to_string())
            });
            match plan {
                Ok(p) if p.fidelity >= f => table.rows.push(row_from(p, n, f)),
                Ok(p) => table.missing.push(format!(
                    "n={n} linear F={f}: reached {:.6}",
                    p.fidelity
                )),
                Err(e) => table.missing.push(format!("n={n} linear F={f}: {e}")),
            }

            if n == 0 {
                table.missing.push(format!("n=0 sublinear F={f}: folding needs n ≥ 1"));
                continue;
            }
            match compile_fock_sublinear(n, f, rule.cutoff(Scheme::Sublinear, n), config) {
                Ok(p) => table.rows.push(row_from(&p, n, f)),
                Err(Error::BelowTarget { best, detail, .. }) => {
                    let reached = match *best {
                        Partial::Plan(p) => p.fidelity,
                        _ => f64::NAN,
                    };
                    log::info!("sublinear cell missed its target: {detail}");
                    table.missing.push(format!("n={n} sublinear F={f}: reached {reached:.6}"));
                }
                Err(e) => table.missing.push(format!("n={n} sublinear F={f}: {e}")),
            }
        }
    }
    Ok(table)
}

/// Least-squares slope of `log(count)` against `log(n)`.
pub fn power_law_exponent(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|(n, c)| (n.ln(), c.ln())).collect();
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}
