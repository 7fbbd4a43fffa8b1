//! Linear scheme: one `D R_n(π) D R_n(π) D` rotation per level.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;

use super::{
    check_prep_cutoff, ladder_amplitudes, phase_unroll, LadderStep, PrepPlan, Scheme, Stage,
    TargetState,
};
use crate::error::{Error, Partial, Result};
use crate::fock::{CutoffDim, DisplacementBasis, Gate, GateSequence, C64};
use crate::optimizer::{minimize_refine, multi_start, OptimizerConfig};

/// Minimum accepted fidelity of a single rotation.
pub const SO2_FLOOR: f64 = 0.999;
const RANDOM_SEEDS: usize = 3;

fn flip_upto(n: usize, psi: &mut [C64]) {
    psi[..=n].iter_mut().for_each(|z| *z = -*z);
}

fn displace(basis: &DisplacementBasis, r: f64, psi: &mut [C64]) {
    basis.apply(C64::new(r, 0.0), psi);
}

/// `|⟨cos θ n + sin θ n+1| D(α₃) R_n(π) D(α₂) R_n(π) D(α₁) |n⟩|`.
pub fn so2_fidelity(n: usize, theta: f64, alphas: [f64; 3], cutoff: CutoffDim) -> Result<f64> {
    check_step_level(n, cutoff)?;
    let basis = DisplacementBasis::get(cutoff.get());
    Ok(so2_overlap(&basis, n, theta, &alphas))
}

fn so2_overlap(basis: &DisplacementBasis, n: usize, theta: f64, a: &[f64]) -> f64 {
    let mut psi = vec![C64::new(0.0, 0.0); basis.dim()];
    psi[n] = C64::new(1.0, 0.0);
    displace(basis, a[0], &mut psi);
    flip_upto(n, &mut psi);
    displace(basis, a[1], &mut psi);
    flip_upto(n, &mut psi);
    displace(basis, a[2], &mut psi);
    (psi[n] * theta.cos() + psi[n + 1] * theta.sin()).norm()
}

fn check_step_level(n: usize, cutoff: CutoffDim) -> Result<()> {
    if n + 1 >= cutoff.get() {
        return Err(Error::invalid(format!(
            "rotation on levels {n}, {} needs a larger cutoff than {cutoff}",
            n + 1
        )));
    }
    Ok(())
}

/// Optimizes `(α₁, α₂, α₃)` for one rotation by `θ ∈ [0, π/2]` on
/// `{|n⟩, |n+1⟩}`. Fails if the best fidelity stays below 0.999.
pub fn optimize_so2_step(
    n: usize,
    theta: f64,
    cutoff: CutoffDim,
    config: &OptimizerConfig,
) -> Result<LadderStep> {
    let step = search_so2(n, theta, cutoff, config)?;
    if step.fidelity < SO2_FLOOR {
        return Err(Error::BelowTarget {
            stage: "rotation step",
            detail: format!("level {n}, fidelity {:.6}", step.fidelity),
            best: Box::new(Partial::So2Step(step)),
        });
    }
    Ok(step)
}

/// Multi-start search without the fidelity floor. Seeds: the symmetric
/// first-order guess `±(a, −2a, a)` with `a = θ/(4√(n+1))`, plus random
/// points in `[−1, 1]³`.
fn search_so2(
    n: usize,
    theta: f64,
    cutoff: CutoffDim,
    config: &OptimizerConfig,
) -> Result<LadderStep> {
    check_step_level(n, cutoff)?;
    if !(-1e-12..=FRAC_PI_2 + 1e-12).contains(&theta) {
        return Err(Error::invalid(format!("rotation angle {theta} outside [0, π/2]")));
    }
    if theta == 0.0 {
        return Ok(LadderStep {
            n,
            theta,
            alphas: [0.0; 3],
            fidelity: 1.0,
        });
    }
    let basis = DisplacementBasis::get(cutoff.get());
    let a = theta / (4.0 * ((n + 1) as f64).sqrt());
    let mut seeds = vec![vec![a, -2.0 * a, a], vec![-a, 2.0 * a, -a]];
    let mut rng = config.rng();
    rng.set_stream(n as u64 + 1);
    for _ in 0..RANDOM_SEEDS {
        seeds.push((0..3).map(|_| rng.random_range(-1.0..1.0)).collect());
    }
    let objective = |x: &[f64]| 1.0 - so2_overlap(&basis, n, theta, x);
    let best = multi_start(&objective, &seeds, config)?;
    Ok(LadderStep {
        n,
        theta,
        alphas: [best.x[0], best.x[1], best.x[2]],
        fidelity: 1.0 - best.fval,
    })
}

/// Evaluation budget for a joint refinement over `k` parameters.
pub(crate) fn refine_config(config: &OptimizerConfig, k: usize) -> OptimizerConfig {
    OptimizerConfig {
        max_evals: config.max_evals.saturating_mul(k.max(1)),
        ..config.clone()
    }
}

/// Displacements `p` interleaved with `R_{nᵢ}(π)` pairs:
/// `D(p₀)`, then per level `R, D(p₂ᵢ₊₁), R, D(p₂ᵢ₊₂)`.
fn chain_overlap(basis: &DisplacementBasis, levels: &[usize], p: &[f64], target: &[f64]) -> f64 {
    let mut psi = vec![C64::new(0.0, 0.0); basis.dim()];
    psi[0] = C64::new(1.0, 0.0);
    displace(basis, p[0], &mut psi);
    for (i, &n) in levels.iter().enumerate() {
        flip_upto(n, &mut psi);
        displace(basis, p[2 * i + 1], &mut psi);
        flip_upto(n, &mut psi);
        displace(basis, p[2 * i + 2], &mut psi);
    }
    target.iter().zip(&psi).map(|(c, z)| z * *c).sum::<C64>().norm()
}

/// Compiles `target` with the linear scheme: per-level rotations, merged
/// into `2N+1` displacements around `2N` π-SNAPs, jointly refined, then the
/// phase SNAP `S(arg cₙ)` (omitted when all phases vanish).
pub fn compile_state_prep(
    target: &TargetState,
    cutoff: CutoffDim,
    config: &OptimizerConfig,
) -> Result<PrepPlan> {
    config.validate()?;
    let levels = target.support().max(1);
    check_prep_cutoff(levels, cutoff)?;
    let trimmed = TargetState {
        coeffs: target.coeffs()[..levels].to_vec(),
    };
    let (phase_gate, magnitudes) = phase_unroll(&trimmed);
    let ladder = ladder_amplitudes(&magnitudes)?;

    let mut steps = Vec::new();
    for (n, &theta) in ladder.thetas.iter().enumerate() {
        if theta > 0.0 {
            steps.push(search_so2(n, theta, cutoff, config)?);
        }
    }

    let mut sequence = GateSequence::empty(cutoff);
    let mut chained = None;
    if !steps.is_empty() {
        let step_levels: Vec<usize> = steps.iter().map(|s| s.n).collect();
        let mut p = vec![steps[0].alphas[0]];
        for (i, s) in steps.iter().enumerate() {
            let next = steps.get(i + 1).map_or(0.0, |t| t.alphas[0]);
            p.push(s.alphas[1]);
            p.push(s.alphas[2] + next);
        }
        let amps: Vec<f64> = magnitudes.coeffs().iter().map(|c| c.re).collect();
        let basis = DisplacementBasis::get(cutoff.get());
        let objective = |x: &[f64]| 1.0 - chain_overlap(&basis, &step_levels, x, &amps);
        let f1 = objective(&p);
        chained = Some(1.0 - f1);
        let refined = minimize_refine(&objective, &p, &refine_config(config, p.len()))?;
        if refined.fval < f1 {
            p = refined.x;
        }

        sequence.push(Gate::real_displacement(p[0]))?;
        for (i, &n) in step_levels.iter().enumerate() {
            sequence.push(Gate::pi_snap(n))?;
            sequence.push(Gate::real_displacement(p[2 * i + 1]))?;
            sequence.push(Gate::pi_snap(n))?;
            sequence.push(Gate::real_displacement(p[2 * i + 2]))?;
        }
    }
    if !phase_gate.is_trivial() {
        sequence.push(phase_gate)?;
    }
    PrepPlan::finish(
        Scheme::Linear,
        sequence,
        &trimmed,
        steps.into_iter().map(Stage::So2).collect(),
        chained,
        config.seed,
    )
}
