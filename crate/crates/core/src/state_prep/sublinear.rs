//! Sublinear Fock-state scheme: displace the vacuum to `|√n⟩`, then fold the
//! Poisson spread back onto `|n⟩` with `K` blocks `S(φₖ)` then `D(βₖ)`.
//! Phases are free on the band `[n − Δn, n + Δn]`, `Δn = ⌈3√n⌉`. `K` starts
//! at `⌈√n⌉` and grows until the target fidelity is met.

use std::f64::consts::PI;

use rand::Rng;

use super::ladder::refine_config;
use super::{FoldBlock, PrepPlan, Scheme, Stage, TargetState};
use crate::error::{Error, Partial, Result};
use crate::fock::{CutoffDim, DisplacementBasis, Gate, GateSequence, C64};
use crate::optimizer::{minimize_refine_until, OptimizerConfig};

/// Random restarts per block count.
const RESTARTS: usize = 4;

/// `(n − Δn, n + Δn)` clipped at 0, with `Δn = ⌈3√n⌉`.
pub fn fold_band(n: usize) -> (usize, usize) {
    let dn = band_halfwidth(n);
    (n.saturating_sub(dn), n + dn)
}

fn band_halfwidth(n: usize) -> usize {
    (3.0 * (n as f64).sqrt()).ceil() as usize
}

/// Smallest cutoff accepted for level `n`: `n + ⌈3√n⌉ + 15`.
pub fn min_sublinear_cutoff(n: usize) -> usize {
    n + band_halfwidth(n) + 15
}

struct Folding {
    basis: std::sync::Arc<DisplacementBasis>,
    n: usize,
    lo: usize,
    width: usize,
    blocks: usize,
    seed_state: Vec<C64>,
}

impl Folding {
    /// Parameters: `K` betas, then `K` phase vectors of the band width.
    fn overlap(&self, x: &[f64]) -> f64 {
        let (betas, phases) = x.split_at(self.blocks);
        let mut psi = self.seed_state.clone();
        for (k, &beta) in betas.iter().enumerate() {
            let band = &phases[k * self.width..(k + 1) * self.width];
            for (z, &p) in psi[self.lo..self.lo + self.width].iter_mut().zip(band) {
                *z *= C64::from_polar(1.0, p);
            }
            self.basis.apply(C64::new(beta, 0.0), &mut psi);
        }
        psi[self.n].norm()
    }

    fn sequence(&self, x: &[f64], cutoff: CutoffDim) -> Result<(GateSequence, Vec<Stage>)> {
        let (betas, phases) = x.split_at(self.blocks);
        let mut seq = GateSequence::empty(cutoff);
        seq.push(Gate::real_displacement((self.n as f64).sqrt()))?;
        let mut stages = Vec::with_capacity(self.blocks);
        for (k, &beta) in betas.iter().enumerate() {
            let band = &phases[k * self.width..(k + 1) * self.width];
            let mut full = vec![0.0; self.lo];
            full.extend_from_slice(band);
            seq.push(Gate::snap(full))?;
            seq.push(Gate::real_displacement(beta))?;
            stages.push(Stage::Fold(FoldBlock {
                beta,
                band_start: self.lo,
                phases: band.to_vec(),
            }));
        }
        Ok((seq, stages))
    }
}

/// Compiles `|n⟩` with the folding scheme. Fails with the best plan attached
/// if no block count up to `4⌈√n⌉` reaches `target_fidelity`.
pub fn compile_fock_sublinear(
    n: usize,
    target_fidelity: f64,
    cutoff: CutoffDim,
    config: &OptimizerConfig,
) -> Result<PrepPlan> {
    config.validate()?;
    if n == 0 {
        return Err(Error::invalid("the folding scheme needs n ≥ 1"));
    }
    if !(target_fidelity > 0.9 && target_fidelity < 1.0) {
        return Err(Error::invalid(format!(
            "target fidelity {target_fidelity} outside (0.9, 1)"
        )));
    }
    if cutoff.get() < min_sublinear_cutoff(n) {
        return Err(Error::invalid(format!(
            "cutoff {cutoff} below {} for level {n}",
            min_sublinear_cutoff(n)
        )));
    }
    let nc = cutoff.get();
    let (lo, hi) = fold_band(n);
    let hi = hi.min(nc - 1);
    let basis = DisplacementBasis::get(nc);
    let mut seed_state = vec![C64::new(0.0, 0.0); nc];
    seed_state[0] = C64::new(1.0, 0.0);
    basis.apply(C64::new((n as f64).sqrt(), 0.0), &mut seed_state);

    let target = TargetState::fock(n);
    let k_min = (n as f64).sqrt().ceil() as usize;
    let mut rng = config.rng();
    let mut best: Option<(f64, Folding, Vec<f64>)> = None;
    for blocks in k_min..=4 * k_min {
        let folding = Folding {
            basis: basis.clone(),
            n,
            lo,
            width: hi - lo + 1,
            blocks,
            seed_state: seed_state.clone(),
        };
        let objective = |x: &[f64]| 1.0 - folding.overlap(x);
        let nparams = blocks * (1 + folding.width);
        let budget = refine_config(config, nparams);
        let mut round_best: Option<(f64, Vec<f64>)> = None;
        for _ in 0..RESTARTS {
            let mut x0: Vec<f64> = (0..blocks)
                .map(|k| {
                    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                    sign * 0.5 / 2f64.powi(k as i32)
                })
                .collect();
            x0.extend((0..blocks * folding.width).map(|_| rng.random_range(-PI..PI)));
            let r = minimize_refine_until(&objective, &x0, &budget, 1.0 - target_fidelity)?;
            log::debug!("n={n} K={blocks}: 1-F={:.3e} after {} evals", r.fval, r.evals);
            let done = r.fval <= 1.0 - target_fidelity;
            if round_best.as_ref().is_none_or(|(f, _)| r.fval < *f) {
                round_best = Some((r.fval, r.x));
            }
            if done {
                break;
            }
        }
        let (fval, x) = round_best.expect("at least one restart");
        let met = fval <= 1.0 - target_fidelity;
        if best.as_ref().is_none_or(|(f, _, _)| fval < *f) {
            best = Some((fval, folding, x));
        }
        if met {
            break;
        }
    }

    let (_, folding, x) = best.expect("at least one block count");
    let (sequence, stages) = folding.sequence(&x, cutoff)?;
    let plan = PrepPlan::finish(Scheme::Sublinear, sequence, &target, stages, None, config.seed)?;
    if plan.fidelity < target_fidelity {
        return Err(Error::BelowTarget {
            stage: "folding",
            detail: format!(
                "level {n}: best fidelity {:.6} with {} blocks",
                plan.fidelity, plan.snap_count
            ),
            best: Box::new(Partial::Plan(plan)),
        });
    }
    Ok(plan)
}
