//! Generators used in the universality argument.

use nalgebra::DMatrix;

use super::{displacement_operator, r_gate, CutoffDim, Operator, C64};
use crate::error::{Error, Result};

/// `p = −i(a† − a)`, the generator of real displacements.
pub fn momentum_generator(cutoff: CutoffDim) -> Operator {
    let nc = cutoff.get();
    let m = DMatrix::from_fn(nc, nc, |i, j| {
        if i == j + 1 {
            C64::new(0.0, -(i as f64).sqrt())
        } else if j == i + 1 {
            C64::new(0.0, (j as f64).sqrt())
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Operator::from_matrix(m).expect("finite square matrix")
}

/// `Q_n = Σ_{n' ≤ n} |n'⟩⟨n'|`.
pub fn projector_q(n: usize, cutoff: CutoffDim) -> Result<Operator> {
    let nc = cutoff.get();
    if n >= nc {
        return Err(Error::invalid(format!("level {n} outside cutoff {cutoff}")));
    }
    let m = DMatrix::from_fn(nc, nc, |i, j| {
        if i == j && i <= n {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Operator::from_matrix(m)
}

/// `J_n = √(n+1) (|n⟩⟨n+1| + |n+1⟩⟨n|)`, from the closed form.
pub fn coupling_j(n: usize, cutoff: CutoffDim) -> Result<Operator> {
    let nc = cutoff.get();
    if n + 1 >= nc {
        return Err(Error::invalid(format!(
            "coupling J_{n} needs level {} below cutoff {cutoff}",
            n + 1
        )));
    }
    let mut m = DMatrix::zeros(nc, nc);
    let s = C64::new(((n + 1) as f64).sqrt(), 0.0);
    m[(n, n + 1)] = s;
    m[(n + 1, n)] = s;
    Operator::from_matrix(m)
}

/// `D(ε) R_n(ε) D(−ε) R_n(−ε)`, which approximates `exp(i J_n ε²)`.
pub fn group_commutator(n: usize, eps: f64, cutoff: CutoffDim) -> Result<Operator> {
    if n + 1 >= cutoff.get() {
        return Err(Error::invalid(format!(
            "group commutator at level {n} needs cutoff above {}",
            n + 1
        )));
    }
    let d_plus = displacement_operator(C64::new(eps, 0.0), cutoff)?;
    let d_minus = displacement_operator(C64::new(-eps, 0.0), cutoff)?;
    let r_plus = r_gate(n, eps, cutoff)?;
    let r_minus = r_gate(n, -eps, cutoff)?;
    Ok(&(&(&d_plus * &r_plus) * &d_minus) * &r_minus)
}
