//! Displacement operators through a cached eigenbasis.
//!
//! The truncated generator `α a† − α* a` with `α = r e^{iφ}` is similar to
//! `−i r x` where `x = a + a†` is the real symmetric tridiagonal position
//! matrix: conjugating `x` by `P = diag(e^{in(φ+π/2)})` gives `i(α a† − α* a)/r`.
//! Diagonalizing `x = W Λ Wᵀ` once per cutoff therefore yields
//!
//! ```text
//! D(α) = P W exp(−i r Λ) Wᵀ P†
//! ```
//!
//! which is unitary to rounding at every cutoff and costs `O(nc²)` to apply.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use super::C64;

pub(crate) struct DisplacementBasis {
    eigvals: Vec<f64>,
    /// Eigenvectors as columns, column-major.
    vecs: DMatrix<f64>,
}

fn registry() -> &'static Mutex<HashMap<usize, Arc<DisplacementBasis>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<DisplacementBasis>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl DisplacementBasis {
    pub(crate) fn get(nc: usize) -> Arc<DisplacementBasis> {
        let mut cache = registry().lock().unwrap_or_else(|e| e.into_inner());
        cache
            .entry(nc)
            .or_insert_with(|| Arc::new(DisplacementBasis::build(nc)))
            .clone()
    }

    fn build(nc: usize) -> DisplacementBasis {
        let x = DMatrix::from_fn(nc, nc, |i, j| {
            if i + 1 == j {
                (j as f64).sqrt()
            } else if j + 1 == i {
                (i as f64).sqrt()
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(x);
        DisplacementBasis {
            eigvals: eig.eigenvalues.iter().copied().collect(),
            vecs: eig.eigenvectors,
        }
    }

    pub(crate) fn dim(&self) -> usize {
        self.eigvals.len()
    }

    /// Dense matrix of `D(α)`.
    pub(crate) fn matrix(&self, alpha: C64) -> DMatrix<C64> {
        let nc = self.dim();
        if alpha == C64::new(0.0, 0.0) {
            return DMatrix::identity(nc, nc);
        }
        let (r, phases) = polar_frame(alpha, nc);
        let prop: Vec<C64> = self.eigvals.iter().map(|&l| C64::from_polar(1.0, -r * l)).collect();
        let w = &self.vecs;
        DMatrix::from_fn(nc, nc, |n, m| {
            let mut acc = C64::new(0.0, 0.0);
            for (j, p) in prop.iter().enumerate() {
                acc += p * (w[(n, j)] * w[(m, j)]);
            }
            phases[n] * acc * phases[m].conj()
        })
    }

    /// In-place `ψ ← D(α) ψ`.
    pub(crate) fn apply(&self, alpha: C64, psi: &mut [C64]) {
        let nc = self.dim();
        debug_assert_eq!(psi.len(), nc);
        if alpha == C64::new(0.0, 0.0) {
            return;
        }
        let (r, phases) = polar_frame(alpha, nc);
        for (z, p) in psi.iter_mut().zip(&phases) {
            *z *= p.conj();
        }
        let w = self.vecs.as_slice();
        // u = exp(−i r Λ) Wᵀ ψ
        let mut u = vec![C64::new(0.0, 0.0); nc];
        for (j, uj) in u.iter_mut().enumerate() {
            let col = &w[j * nc..(j + 1) * nc];
            let mut acc = C64::new(0.0, 0.0);
            for (wn, z) in col.iter().zip(psi.iter()) {
                acc += z * *wn;
            }
            *uj = acc * C64::from_polar(1.0, -r * self.eigvals[j]);
        }
        // ψ = W u
        psi.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for (j, uj) in u.iter().enumerate() {
            let col = &w[j * nc..(j + 1) * nc];
            for (z, wn) in psi.iter_mut().zip(col) {
                *z += uj * *wn;
            }
        }
        for (z, p) in psi.iter_mut().zip(&phases) {
            *z *= p;
        }
    }
}

/// Signed radius and the diagonal frame `P` for `α`. Real `α` keeps its sign
/// and uses the exact powers of `i`.
fn polar_frame(alpha: C64, nc: usize) -> (f64, Vec<C64>) {
    if alpha.im == 0.0 {
        const POWERS: [C64; 4] = [
            C64::new(1.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(-1.0, 0.0),
            C64::new(0.0, -1.0),
        ];
        (alpha.re, (0..nc).map(|n| POWERS[n % 4]).collect())
    } else {
        let step = alpha.arg() + FRAC_PI_2;
        (
            alpha.norm(),
            (0..nc).map(|n| C64::from_polar(1.0, n as f64 * step)).collect(),
        )
    }
}

pub(crate) fn apply_displacement(alpha: C64, psi: &mut [C64]) {
    DisplacementBasis::get(psi.len()).apply(alpha, psi);
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Scaling-and-squaring Taylor exponential, independent of the eigenbasis route.
    fn expm_taylor(a: &DMatrix<C64>) -> DMatrix<C64> {
        let norm: f64 = a.iter().map(|z| z.norm()).sum::<f64>();
        let squarings = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
        let scaled = a.map(|z| z / 2f64.powi(squarings));
        let n = a.nrows();
        let mut result = DMatrix::<C64>::identity(n, n);
        let mut term = DMatrix::<C64>::identity(n, n);
        for k in 1..40 {
            term = &term * &scaled / C64::new(k as f64, 0.0);
            result += &term;
        }
        for _ in 0..squarings {
            result = &result * &result;
        }
        result
    }

    fn generator(alpha: C64, nc: usize) -> DMatrix<C64> {
        DMatrix::from_fn(nc, nc, |i, j| {
            if i == j + 1 {
                alpha * (i as f64).sqrt()
            } else if j == i + 1 {
                -alpha.conj() * (j as f64).sqrt()
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn eigenbasis_matches_taylor_exponential() {
        for &(re, im) in &[(0.7, 0.0), (-1.3, 0.0), (0.4, -0.9), (0.0, 1.1)] {
            let alpha = C64::new(re, im);
            let nc = 25;
            let reference = expm_taylor(&generator(alpha, nc));
            let ours = DisplacementBasis::get(nc).matrix(alpha);
            let diff = (&reference - &ours).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(diff < 1e-11, "alpha={alpha} diff={diff}");
        }
    }

    #[test]
    fn apply_agrees_with_matrix() {
        let nc = 17;
        let basis = DisplacementBasis::get(nc);
        let alpha = C64::new(-0.35, 0.62);
        let m = basis.matrix(alpha);
        let mut psi: Vec<C64> = (0..nc)
            .map(|n| C64::new((n as f64 * 0.3).sin(), (n as f64 * 0.7).cos()))
            .collect();
        let expected = &m * nalgebra::DVector::from_vec(psi.clone());
        basis.apply(alpha, &mut psi);
        for (a, b) in psi.iter().zip(expected.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
