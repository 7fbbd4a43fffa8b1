//! Truncated Fock-space primitives.
//!
//! Everything here lives in the span of the number states `|0⟩ … |nc-1⟩`.
//! States are complex amplitude vectors, operators are dense `nc × nc`
//! complex matrices. The two primitive gates are the displacement
//! `D(α) = exp(α a† − α* a)` and the SNAP gate `S(θ) = Σ e^{iθₙ}|n⟩⟨n|`.

mod algebra;
mod displacement;
mod gates;
mod sequence;

use std::fmt;
use std::ops::Mul;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use algebra::{coupling_j, group_commutator, momentum_generator, projector_q};
pub use gates::{
    decompose_complex_displacement, displacement_operator, r_gate, reduce_phase, snap_operator,
    Gate,
};
pub use sequence::{apply_sequence, apply_sequence_with_tolerance, sequence_unitary, Evolved, GateSequence};

pub(crate) use displacement::{apply_displacement, DisplacementBasis};

pub type C64 = Complex64;

/// Default tolerance on norm loss through a gate sequence.
pub const LEAK_TOLERANCE: f64 = 1e-6;

/// Dimension of the truncated number basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct CutoffDim(usize);

impl CutoffDim {
    pub fn new(nc: usize) -> Result<Self> {
        if nc < 2 {
            return Err(Error::invalid(format!("cutoff must be at least 2, got {nc}")));
        }
        Ok(CutoffDim(nc))
    }

    /// Default cutoff for a compilation whose target lives on `dim` levels:
    /// `max(2·dim, dim + 14)`, i.e. `max(2(N+1), N+15)` for a highest level N.
    pub fn for_target_dim(dim: usize) -> Self {
        let dim = dim.max(1);
        CutoffDim((2 * dim).max(dim + 14))
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn extended(self, extra: usize) -> Self {
        CutoffDim(self.0 + extra)
    }
}

impl TryFrom<usize> for CutoffDim {
    type Error = Error;

    fn try_from(nc: usize) -> Result<Self> {
        CutoffDim::new(nc)
    }
}

impl From<CutoffDim> for usize {
    fn from(c: CutoffDim) -> usize {
        c.0
    }
}

impl fmt::Display for CutoffDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub(crate) fn check_same(expected: CutoffDim, actual: CutoffDim) -> Result<()> {
    if expected != actual {
        return Err(Error::CutoffMismatch {
            expected: expected.get(),
            actual: actual.get(),
        });
    }
    Ok(())
}

/// Pure state of the truncated oscillator.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedState {
    amps: DVector<C64>,
    cutoff: CutoffDim,
}

impl TruncatedState {
    /// Number state `|n⟩`.
    pub fn fock(n: usize, cutoff: CutoffDim) -> Result<Self> {
        if n >= cutoff.get() {
            return Err(Error::invalid(format!(
                "level {n} outside cutoff {cutoff}"
            )));
        }
        let mut amps = DVector::zeros(cutoff.get());
        amps[n] = C64::new(1.0, 0.0);
        Ok(TruncatedState { amps, cutoff })
    }

    pub fn vacuum(cutoff: CutoffDim) -> Self {
        Self::fock(0, cutoff).expect("cutoff is at least 2")
    }

    /// Builds a state from amplitudes; shorter vectors are zero-padded up to
    /// the cutoff.
    pub fn from_amplitudes(amps: &[C64], cutoff: CutoffDim) -> Result<Self> {
        Self::from_amplitudes_with_tolerance(amps, cutoff, LEAK_TOLERANCE)
    }

    pub fn from_amplitudes_with_tolerance(
        amps: &[C64],
        cutoff: CutoffDim,
        leak_tolerance: f64,
    ) -> Result<Self> {
        if amps.len() > cutoff.get() {
            return Err(Error::invalid(format!(
                "{} amplitudes exceed cutoff {cutoff}",
                amps.len()
            )));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::invalid("state amplitudes must be finite"));
        }
        let mut v = DVector::zeros(cutoff.get());
        for (dst, src) in v.iter_mut().zip(amps) {
            *dst = *src;
        }
        let norm = v.norm();
        if norm < 1.0 - leak_tolerance || norm > 1.0 + 1e-9 {
            return Err(Error::invalid(format!("state norm {norm} is not 1")));
        }
        Ok(TruncatedState { amps: v, cutoff })
    }

    pub(crate) fn from_raw(amps: DVector<C64>, cutoff: CutoffDim) -> Self {
        debug_assert_eq!(amps.len(), cutoff.get());
        TruncatedState { amps, cutoff }
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn cutoff(&self) -> CutoffDim {
        self.cutoff
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn population(&self, n: usize) -> f64 {
        self.amps.get(n).map_or(0.0, |a| a.norm_sqr())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &TruncatedState) -> Result<C64> {
        check_same(self.cutoff, other.cutoff)?;
        Ok(self.amps.dotc(&other.amps))
    }
}

/// Dense `nc × nc` complex operator.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: DMatrix<C64>,
}

impl Operator {
    pub fn identity(cutoff: CutoffDim) -> Self {
        Operator {
            mat: DMatrix::identity(cutoff.get(), cutoff.get()),
        }
    }

    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        if !mat.is_square() || mat.nrows() < 2 {
            return Err(Error::invalid(format!(
                "operator must be square with dimension >= 2, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("operator entries must be finite"));
        }
        Ok(Operator { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn cutoff(&self) -> CutoffDim {
        CutoffDim(self.dim())
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn adjoint(&self) -> Operator {
        Operator {
            mat: self.mat.adjoint(),
        }
    }

    pub fn apply(&self, state: &TruncatedState) -> Result<TruncatedState> {
        check_same(self.cutoff(), state.cutoff)?;
        Ok(TruncatedState::from_raw(&self.mat * &state.amps, state.cutoff))
    }

    /// `max |(U†U − I)ᵢⱼ|` over the leading `levels × levels` block.
    pub fn unitarity_defect(&self, levels: usize) -> f64 {
        let levels = levels.min(self.dim());
        let g = self.mat.adjoint() * &self.mat;
        let mut worst = 0.0f64;
        for i in 0..levels {
            for j in 0..levels {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// Largest entrywise deviation over the leading `levels × levels` block.
    pub fn max_abs_diff(&self, other: &Operator, levels: usize) -> f64 {
        let levels = levels.min(self.dim()).min(other.dim());
        let mut worst = 0.0f64;
        for i in 0..levels {
            for j in 0..levels {
                worst = worst.max((self.mat[(i, j)] - other.mat[(i, j)]).norm());
            }
        }
        worst
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat * &rhs.mat,
        }
    }
}

/// `|⟨a|b⟩|`, insensitive to global phase.
pub fn state_fidelity(a: &TruncatedState, b: &TruncatedState) -> Result<f64> {
    Ok(a.inner(b)?.norm().min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FidelityMode {
    /// `|Tr(U† V)| / nc` over the whole truncated space.
    Full,
    /// `|Tr(U† V)| / d` restricted to the leading `d × d` block.
    Block(usize),
}

/// Normalized trace overlap between a realized and an ideal operator.
pub fn unitary_fidelity(u: &Operator, u_ideal: &Operator, mode: FidelityMode) -> Result<f64> {
    if u.dim() != u_ideal.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            u.dim(),
            u_ideal.dim()
        )));
    }
    let d = match mode {
        FidelityMode::Full => u.dim(),
        FidelityMode::Block(d) => {
            if d == 0 || d > u.dim() {
                return Err(Error::invalid(format!(
                    "block dimension {d} outside 1..={}",
                    u.dim()
                )));
            }
            d
        }
    };
    Ok(trace_overlap(u.matrix(), u_ideal.matrix(), d) / d as f64)
}

/// `|Σᵢⱼ conj(U[i,j]) V[i,j]|` over the leading `d × d` block, i.e. `|Tr(U†V)|`.
pub(crate) fn trace_overlap(u: &DMatrix<C64>, v: &DMatrix<C64>, d: usize) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..d {
        for i in 0..d {
            acc += u[(i, j)].conj() * v[(i, j)];
        }
    }
    acc.norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nc(n: usize) -> CutoffDim {
        CutoffDim::new(n).unwrap()
    }

    #[test]
    fn cutoff_rejects_tiny_dimensions() {
        assert!(CutoffDim::new(1).is_err());
        assert!(CutoffDim::new(0).is_err());
        assert_eq!(CutoffDim::for_target_dim(2).get(), 16);
        assert_eq!(CutoffDim::for_target_dim(20).get(), 40);
    }

    #[test]
    fn states_validate_norm_and_finiteness() {
        let c = nc(4);
        let half = C64::new(0.5f64.sqrt(), 0.0);
        assert!(TruncatedState::from_amplitudes(&[half, half], c).is_ok());
        assert!(TruncatedState::from_amplitudes(&[half], c).is_err());
        assert!(TruncatedState::from_amplitudes(&[C64::new(f64::NAN, 0.0)], c).is_err());
        assert!(TruncatedState::from_amplitudes(&[C64::new(1.0, 0.0); 5], c).is_err());
        assert!(TruncatedState::fock(4, c).is_err());
    }

    #[test]
    fn state_fidelity_basics() {
        let c = nc(6);
        let a = TruncatedState::fock(2, c).unwrap();
        let b = TruncatedState::fock(3, c).unwrap();
        assert_eq!(state_fidelity(&a, &a).unwrap(), 1.0);
        assert_eq!(state_fidelity(&a, &b).unwrap(), 0.0);
        let other = TruncatedState::fock(2, nc(7)).unwrap();
        assert!(matches!(
            state_fidelity(&a, &other),
            Err(Error::CutoffMismatch { .. })
        ));
    }

    #[test]
    fn unitary_fidelity_trace_arithmetic() {
        let c = nc(10);
        let ideal = Operator::identity(c);
        let mut m = DMatrix::identity(10, 10);
        m[(0, 0)] = C64::new(-1.0, 0.0);
        let u = Operator::from_matrix(m).unwrap();
        let f = unitary_fidelity(&u, &ideal, FidelityMode::Full).unwrap();
        assert!((f - 0.8).abs() < 1e-15);
        let fb = unitary_fidelity(&u, &ideal, FidelityMode::Block(2)).unwrap();
        assert!(fb.abs() < 1e-15);
        assert!(unitary_fidelity(&u, &ideal, FidelityMode::Block(11)).is_err());
        assert!(unitary_fidelity(&u, &Operator::identity(nc(9)), FidelityMode::Full).is_err());
    }

    #[test]
    fn unitary_fidelity_ignores_global_phase() {
        let c = nc(5);
        let u = displacement_operator(C64::new(0.3, -0.2), c).unwrap();
        let phase = C64::from_polar(1.0, 0.77);
        let shifted = Operator::from_matrix(u.matrix().map(|z| z * phase)).unwrap();
        let f = unitary_fidelity(&shifted, &u, FidelityMode::Full).unwrap();
        assert!((f - 1.0).abs() < 1e-13);
    }
}
