use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;

use super::{CutoffDim, DisplacementBasis, GateSequence, Operator, C64};
use crate::error::{Error, Result};

/// One of the two primitive oscillator gates.
#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    /// `D(α) = exp(α a† − α* a)`.
    Displacement { alpha: C64 },
    /// `S(θ) = Σₙ e^{iθₙ}|n⟩⟨n|`; levels past the end of `phases` get phase 0.
    Snap { phases: Vec<f64> },
}

/// Reduces an angle to `(−π, π]`. Angles already in range are returned
/// bit-for-bit, so reduction is idempotent.
pub fn reduce_phase(theta: f64) -> f64 {
    if theta > -PI && theta <= PI {
        return theta;
    }
    let mut r = theta.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    if r <= -PI {
        r += TAU;
    }
    r
}

impl Gate {
    pub fn displacement(alpha: C64) -> Gate {
        Gate::Displacement { alpha }
    }

    pub fn real_displacement(r: f64) -> Gate {
        Gate::Displacement {
            alpha: C64::new(r, 0.0),
        }
    }

    pub fn snap(phases: impl IntoIterator<Item = f64>) -> Gate {
        Gate::Snap {
            phases: phases.into_iter().map(reduce_phase).collect(),
        }
    }

    /// `R_n(π)`: a π phase on every level `≤ n`.
    pub fn pi_snap(n: usize) -> Gate {
        Gate::snap(vec![PI; n + 1])
    }

    pub fn is_snap(&self) -> bool {
        matches!(self, Gate::Snap { .. })
    }

    pub fn is_displacement(&self) -> bool {
        matches!(self, Gate::Displacement { .. })
    }

    /// True for a zero displacement or a SNAP whose phases are all below 1e-12.
    pub fn is_trivial(&self) -> bool {
        match self {
            Gate::Displacement { alpha } => alpha.norm() == 0.0,
            Gate::Snap { phases } => phases.iter().all(|p| p.abs() < 1e-12),
        }
    }

    pub fn validate(&self, cutoff: CutoffDim) -> Result<()> {
        match self {
            Gate::Displacement { alpha } => {
                if !alpha.re.is_finite() || !alpha.im.is_finite() {
                    return Err(Error::invalid(format!("non-finite displacement {alpha}")));
                }
            }
            Gate::Snap { phases } => {
                if phases.len() > cutoff.get() {
                    return Err(Error::invalid(format!(
                        "{} SNAP phases exceed cutoff {cutoff}",
                        phases.len()
                    )));
                }
                if phases.iter().any(|p| !p.is_finite()) {
                    return Err(Error::invalid("non-finite SNAP phase"));
                }
            }
        }
        Ok(())
    }

    pub fn operator(&self, cutoff: CutoffDim) -> Result<Operator> {
        match self {
            Gate::Displacement { alpha } => displacement_operator(*alpha, cutoff),
            Gate::Snap { phases } => snap_operator(phases, cutoff),
        }
    }

    /// In-place application to an amplitude vector of length `nc`. The gate
    /// must already have been validated against that cutoff.
    pub(crate) fn apply_in_place(&self, psi: &mut [C64]) {
        match self {
            Gate::Displacement { alpha } => super::apply_displacement(*alpha, psi),
            Gate::Snap { phases } => {
                for (z, &p) in psi.iter_mut().zip(phases) {
                    *z *= C64::from_polar(1.0, p);
                }
            }
        }
    }
}

pub fn displacement_operator(alpha: C64, cutoff: CutoffDim) -> Result<Operator> {
    Gate::displacement(alpha).validate(cutoff)?;
    Operator::from_matrix(DisplacementBasis::get(cutoff.get()).matrix(alpha))
}

pub fn snap_operator(phases: &[f64], cutoff: CutoffDim) -> Result<Operator> {
    let gate = Gate::snap(phases.iter().copied());
    gate.validate(cutoff)?;
    let nc = cutoff.get();
    let mut m = DMatrix::identity(nc, nc);
    for (n, &p) in phases.iter().enumerate() {
        m[(n, n)] = C64::from_polar(1.0, p);
    }
    Operator::from_matrix(m)
}

/// `R_n(ε) = exp(i ε Q_n)`: phase ε on levels `0..=n`.
pub fn r_gate(n: usize, eps: f64, cutoff: CutoffDim) -> Result<Operator> {
    if n >= cutoff.get() {
        return Err(Error::invalid(format!("level {n} outside cutoff {cutoff}")));
    }
    snap_operator(&vec![eps; n + 1], cutoff)
}

/// Splits `D(r e^{iφ})` into `S(−θ)`, `D(r)`, `S(θ)` (application order)
/// with `θₙ = nφ mod 2π`, so that `D(α) = S(θ) D(r) S(−θ)`.
pub fn decompose_complex_displacement(alpha: C64, cutoff: CutoffDim) -> GateSequence {
    let r = alpha.norm();
    let phi = if r == 0.0 { 0.0 } else { alpha.arg() };
    let theta: Vec<f64> = (0..cutoff.get()).map(|n| n as f64 * phi).collect();
    GateSequence::new(
        cutoff,
        vec![
            Gate::snap(theta.iter().map(|t| -t)),
            Gate::real_displacement(r),
            Gate::snap(theta),
        ],
    )
    .expect("phase vectors have exactly nc entries")
}
