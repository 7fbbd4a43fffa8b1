//! State preparation from the vacuum.
//!
//! The linear scheme unrolls the target amplitudes one level at a time with
//! `D R_n(π) D R_n(π) D` rotations on `{|n⟩, |n+1⟩}`; the sublinear scheme
//! folds a coherent state onto a single number state.

mod ladder;
mod sublinear;
mod sweep;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{CutoffDim, Gate, GateSequence, C64};

pub use ladder::{compile_state_prep, optimize_so2_step, so2_fidelity};
pub use sublinear::{compile_fock_sublinear, fold_band};
pub use sublinear::min_sublinear_cutoff;
pub use sweep::{gate_count_sweep, power_law_exponent, CutoffRule, SweepRow, SweepTable};

/// Levels kept free above the highest target level.
pub const PREP_BUFFER: usize = 5;

/// Target `|ψ⟩ = Σ cₙ|n⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetState {
    coeffs: Vec<C64>,
}

impl TargetState {
    /// Requires unit norm within 1e-12.
    pub fn new(coeffs: Vec<C64>) -> Result<Self> {
        check_finite(&coeffs)?;
        let norm = norm(&coeffs);
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("target norm {norm} is not 1")));
        }
        Ok(TargetState { coeffs })
    }

    /// Rescales to unit norm.
    pub fn normalized(coeffs: Vec<C64>) -> Result<Self> {
        check_finite(&coeffs)?;
        let norm = norm(&coeffs);
        if norm == 0.0 {
            return Err(Error::invalid("target has zero norm"));
        }
        Ok(TargetState {
            coeffs: coeffs.into_iter().map(|c| c / norm).collect(),
        })
    }

    pub fn fock(n: usize) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); n + 1];
        coeffs[n] = C64::new(1.0, 0.0);
        TargetState { coeffs }
    }

    /// `(|0⟩ + … + |N⟩)/√(N+1)`.
    pub fn uniform(n_max: usize) -> Self {
        let c = C64::new(1.0 / ((n_max + 1) as f64).sqrt(), 0.0);
        TargetState {
            coeffs: vec![c; n_max + 1],
        }
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Number of levels up to the last nonzero coefficient.
    pub fn support(&self) -> usize {
        self.coeffs.iter().rposition(|c| c.norm() > 0.0).map_or(0, |i| i + 1)
    }
}

fn norm(c: &[C64]) -> f64 {
    c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn check_finite(c: &[C64]) -> Result<()> {
    if c.is_empty() {
        return Err(Error::invalid("target has no coefficients"));
    }
    if c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::invalid("target coefficients must be finite"));
    }
    Ok(())
}

/// Splits `|ψ⟩ = S̃|ψ̃⟩` with `S̃ = S(arg cₙ)` and `c̃ₙ = |cₙ|`.
pub fn phase_unroll(target: &TargetState) -> (Gate, TargetState) {
    let phases = target
        .coeffs
        .iter()
        .map(|c| if c.norm() == 0.0 { 0.0 } else { c.arg() });
    let magnitudes = target.coeffs.iter().map(|c| C64::new(c.norm(), 0.0)).collect();
    (Gate::snap(phases), TargetState { coeffs: magnitudes })
}

/// Residual amplitudes `d̃ₙ = (Σ_{n' ≥ n} c̃²_{n'})^{1/2}` and rotation angles
/// `θₙ = arcsin(d̃ₙ₊₁/d̃ₙ)` of a nonnegative target, trailing zeros trimmed.
#[derive(Clone, Debug, PartialEq)]
pub struct Ladder {
    pub residuals: Vec<f64>,
    pub thetas: Vec<f64>,
}

pub fn ladder_amplitudes(target: &TargetState) -> Result<Ladder> {
    if let Some(c) = target.coeffs.iter().find(|c| c.im != 0.0 || c.re < 0.0) {
        return Err(Error::invalid(format!(
            "ladder needs nonnegative real coefficients, found {c}"
        )));
    }
    let len = target.support().max(1);
    let sq: Vec<f64> = target.coeffs[..len].iter().map(|c| c.re * c.re).collect();
    let mut residuals = vec![0.0; len];
    let mut acc = 0.0;
    for n in (0..len).rev() {
        acc += sq[n];
        residuals[n] = acc.sqrt();
    }
    let top = residuals[0];
    residuals.iter_mut().for_each(|d| *d /= top);
    residuals[0] = 1.0;
    let thetas = residuals
        .windows(2)
        .map(|w| {
            if w[0] == 0.0 {
                0.0
            } else {
                (w[1] / w[0]).clamp(0.0, 1.0).asin()
            }
        })
        .collect();
    Ok(Ladder { residuals, thetas })
}

/// One SO(2) step `|n⟩ → cos θ|n⟩ + sin θ|n+1⟩`. `alphas[0]` acts first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderStep {
    pub n: usize,
    pub theta: f64,
    pub alphas: [f64; 3],
    pub fidelity: f64,
}

/// One folding block of the sublinear scheme: `S(phases)` then `D(beta)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldBlock {
    pub beta: f64,
    /// First level carrying a free phase.
    pub band_start: usize,
    pub phases: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Stage {
    So2(LadderStep),
    Fold(FoldBlock),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Linear,
    Sublinear,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Linear => "linear",
            Scheme::Sublinear => "sublinear",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrepPlan {
    pub scheme: Scheme,
    pub sequence: GateSequence,
    /// Re-simulated `|⟨ψ|sequence|0⟩|`.
    pub fidelity: f64,
    pub snap_count: usize,
    pub displacement_count: usize,
    pub stages: Vec<Stage>,
    /// Fidelity of the chained stage-1 rotations before joint refinement.
    pub chained_fidelity: Option<f64>,
    /// `|F(nc + PREP_BUFFER) − F(nc)|`: sensitivity to the truncation.
    pub cutoff_drift: f64,
    pub seed: u64,
}

impl PrepPlan {
    pub(crate) fn finish(
        scheme: Scheme,
        sequence: GateSequence,
        target: &TargetState,
        stages: Vec<Stage>,
        chained_fidelity: Option<f64>,
        seed: u64,
    ) -> Result<PrepPlan> {
        let fidelity = prep_fidelity(&sequence, target)?;
        let wide = sequence.with_cutoff(sequence.cutoff().extended(PREP_BUFFER))?;
        let cutoff_drift = (prep_fidelity(&wide, target)? - fidelity).abs();
        if cutoff_drift > 1e-6 {
            log::warn!("fidelity moves by {cutoff_drift:.2e} when the cutoff grows by {PREP_BUFFER}");
        }
        Ok(PrepPlan {
            scheme,
            snap_count: sequence.snap_count(),
            displacement_count: sequence.displacement_count(),
            sequence,
            fidelity,
            stages,
            chained_fidelity,
            cutoff_drift,
            seed,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        crate::json::to_canonical_string(self)
    }
}

/// `|⟨ψ|sequence|0⟩|` simulated from scratch.
pub fn prep_fidelity(sequence: &GateSequence, target: &TargetState) -> Result<f64> {
    let c = sequence.cutoff();
    let ideal = crate::fock::TruncatedState::from_amplitudes(target.coeffs(), c)?;
    let out = crate::fock::apply_sequence(sequence, &crate::fock::TruncatedState::vacuum(c))?;
    crate::fock::state_fidelity(&ideal, &out.state)
}

pub(crate) fn check_prep_cutoff(levels: usize, cutoff: CutoffDim) -> Result<()> {
    if levels + PREP_BUFFER > cutoff.get() {
        return Err(Error::invalid(format!(
            "cutoff {cutoff} too small for a target on {levels} levels (needs {})",
            levels + PREP_BUFFER
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn real(v: &[f64]) -> Vec<C64> {
        v.iter().map(|&x| C64::new(x, 0.0)).collect()
    }

    #[test]
    fn target_validation() {
        assert!(TargetState::new(real(&[0.6, 0.8])).is_ok());
        assert!(TargetState::new(real(&[0.6, 0.7])).is_err());
        assert!(TargetState::new(vec![]).is_err());
        assert!(TargetState::normalized(real(&[0.0, 0.0])).is_err());
        let t = TargetState::normalized(real(&[3.0, 4.0])).unwrap();
        assert!((t.coeffs()[1].re - 0.8).abs() < 1e-15);
    }

    #[test]
    fn unroll_of_nonnegative_target_has_zero_phases() {
        let (s, t) = phase_unroll(&TargetState::uniform(3));
        assert!(s.is_trivial());
        assert_eq!(t, TargetState::uniform(3));
    }

    #[test]
    fn unroll_of_sign_flip() {
        let h = 1.0 / 2f64.sqrt();
        let (s, t) = phase_unroll(&TargetState::new(real(&[h, -h])).unwrap());
        let Gate::Snap { phases } = s else { panic!() };
        assert_eq!(phases, vec![0.0, PI]);
        assert_eq!(t.coeffs(), real(&[h, h]).as_slice());
    }

    #[test]
    fn ladder_of_vacuum_is_empty() {
        let l = ladder_amplitudes(&TargetState::fock(0)).unwrap();
        assert_eq!(l.residuals, vec![1.0]);
        assert!(l.thetas.is_empty());
    }

    #[test]
    fn ladder_of_two_level_superposition() {
        let l = ladder_amplitudes(&TargetState::uniform(1)).unwrap();
        assert!((l.residuals[1] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((l.thetas[0] - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn ladder_of_uniform_three() {
        let l = ladder_amplitudes(&TargetState::uniform(3)).unwrap();
        for n in 0..4 {
            let d = ((4 - n) as f64 / 4.0).sqrt();
            assert!((l.residuals[n] - d).abs() < 1e-15, "n={n}");
        }
        for n in 0..3 {
            let th = (((3 - n) as f64) / ((4 - n) as f64)).sqrt().asin();
            assert!((l.thetas[n] - th).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn ladder_trims_and_rejects() {
        let l = ladder_amplitudes(&TargetState::new(real(&[0.6, 0.8, 0.0, 0.0])).unwrap()).unwrap();
        assert_eq!(l.residuals.len(), 2);
        assert!(ladder_amplitudes(&TargetState::new(real(&[0.6, -0.8])).unwrap()).is_err());
    }
}
