//! Realizing adjacent-level rotations with `V_k(α) = D(α) R_k(π) D(−2α) R_k(π) D(α)`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::{CutoffDim, DisplacementBasis, Gate, C64};
use crate::optimizer::{minimize_local, OptimizerConfig};

/// Points in the `α ↦ θ` table, evenly spaced over `[−1, 1]`.
const TABLE_POINTS: usize = 41;

/// The five gates of `V_k(α)` in application order.
pub fn rotation_gates(k: usize, alpha: f64) -> [Gate; 5] {
    [
        Gate::real_displacement(alpha),
        Gate::pi_snap(k),
        Gate::real_displacement(-2.0 * alpha),
        Gate::pi_snap(k),
        Gate::real_displacement(alpha),
    ]
}

/// Dense `V_k(α)`.
pub fn rotation_matrix(k: usize, alpha: f64, cutoff: CutoffDim) -> DMatrix<C64> {
    let basis = DisplacementBasis::get(cutoff.get());
    let d1 = basis.matrix(C64::new(alpha, 0.0));
    let mut m = d1.clone();
    flip_rows(&mut m, k);
    m = basis.matrix(C64::new(-2.0 * alpha, 0.0)) * m;
    flip_rows(&mut m, k);
    &d1 * &m
}

fn flip_rows(m: &mut DMatrix<C64>, k: usize) {
    for i in 0..=k {
        m.row_mut(i).neg_mut();
    }
}

/// Ideal rotation on `{|k⟩, |k+1⟩}`: `|k⟩ → cos θ|k⟩ + sin θ|k+1⟩`.
pub fn givens(k: usize, theta: f64, nc: usize) -> DMatrix<C64> {
    let mut g = DMatrix::identity(nc, nc);
    let (s, c) = theta.sin_cos();
    g[(k, k)] = C64::new(c, 0.0);
    g[(k + 1, k + 1)] = C64::new(c, 0.0);
    g[(k + 1, k)] = C64::new(s, 0.0);
    g[(k, k + 1)] = C64::new(-s, 0.0);
    g
}

/// Angle of the rotation closest to the `{k, k+1}` block of `m`.
pub fn block_angle(m: &DMatrix<C64>, k: usize) -> f64 {
    (m[(k + 1, k)].re - m[(k, k + 1)].re).atan2(m[(k, k)].re + m[(k + 1, k + 1)].re)
}

/// `θ(α)` for `V_k(α)`, from the two columns it needs.
pub(crate) fn realized_angle(k: usize, alpha: f64, basis: &DisplacementBasis) -> f64 {
    let nc = basis.dim();
    let col = |j: usize| {
        let mut psi = vec![C64::new(0.0, 0.0); nc];
        psi[j] = C64::new(1.0, 0.0);
        for g in rotation_gates(k, alpha) {
            match g {
                Gate::Displacement { alpha } => basis.apply(alpha, &mut psi),
                Gate::Snap { .. } => psi[..=k].iter_mut().for_each(|z| *z = -*z),
            }
        }
        (psi[k].re, psi[k + 1].re)
    };
    let (a, b) = col(k);
    let (c, d) = col(k + 1);
    (b - c).atan2(a + d)
}

/// `|Tr(G(θ)† V_k(α))| / nc`.
pub fn rotation_fidelity(k: usize, theta: f64, alpha: f64, cutoff: CutoffDim) -> f64 {
    let v = rotation_matrix(k, alpha, cutoff);
    crate::fock::trace_overlap(&givens(k, theta, cutoff.get()), &v, cutoff.get()) / cutoff.get() as f64
}

/// Finds `α` realizing a rotation by `θ ∈ [−π/2, π/2]` on `{|k⟩, |k+1⟩}`.
///
/// `θ(α)` is odd and increasing on `[0, 1]`, so the root is bracketed from a
/// 41-point table and refined by regula falsi; `α` is then polished by a
/// 1-d search maximizing the full-space trace fidelity to `G(θ)`.
pub fn calibrate_rotation(
    k: usize,
    theta: f64,
    cutoff: CutoffDim,
    config: &OptimizerConfig,
) -> Result<f64> {
    let fail = |detail: String| Error::Calibration {
        level: k,
        theta,
        detail,
    };
    if k + 1 >= cutoff.get() {
        return Err(fail(format!("needs a cutoff above {}", k + 1)));
    }
    if !theta.is_finite() || theta.abs() > FRAC_PI_2 + 1e-12 {
        return Err(fail("angle outside [−π/2, π/2]".into()));
    }
    if theta == 0.0 {
        return Ok(0.0);
    }
    let target = theta.abs();
    let basis = DisplacementBasis::get(cutoff.get());
    let half = TABLE_POINTS / 2;
    let table: Vec<(f64, f64)> = (half..TABLE_POINTS)
        .map(|i| {
            let a = -1.0 + 2.0 * i as f64 / (TABLE_POINTS - 1) as f64;
            (a, realized_angle(k, a, &basis))
        })
        .collect();
    let Some(w) = table.windows(2).find(|w| w[0].1 <= target && target <= w[1].1) else {
        let top = table.iter().map(|p| p.1).fold(f64::MIN, f64::max);
        return Err(fail(format!("no bracket on α ∈ [0, 1]; largest angle {top:.6}")));
    };
    let f = |a: f64| realized_angle(k, a, &basis) - target;
    let root = regula_falsi(&f, w[0].0, w[1].0, w[0].1 - target, w[1].1 - target)
        .ok_or_else(|| fail(format!("no convergence in [{}, {}]", w[0].0, w[1].0)))?;

    let objective = |x: &[f64]| 1.0 - rotation_fidelity(k, target, x[0], cutoff);
    let polished = minimize_local(&objective, &[root], config)?;
    let alpha = if polished.fval < objective(&[root]) {
        polished.x[0]
    } else {
        root
    };
    Ok(alpha.copysign(theta))
}

/// Illinois-modified regula falsi on a sign-changing bracket.
fn regula_falsi<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> Option<f64> {
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    let mut side = 0;
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c);
        if fc == 0.0 || (b - a).abs() < 1e-15 {
            return Some(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa /= 2.0;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb /= 2.0;
            }
            side = 1;
        }
        if fc.abs() < 1e-14 {
            return Some(c);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn nc(n: usize) -> CutoffDim {
        CutoffDim::new(n).unwrap()
    }

    #[test]
    fn zero_angle_is_identity() {
        let cfg = OptimizerConfig::default();
        assert_eq!(calibrate_rotation(2, 0.0, nc(20), &cfg).unwrap(), 0.0);
        let v = rotation_matrix(2, 0.0, nc(20));
        assert_eq!(v, DMatrix::identity(20, 20).map(|x: C64| x));
    }

    #[test]
    fn angle_is_odd_and_increasing_up_to_a_quarter_turn() {
        let basis = DisplacementBasis::get(20);
        for k in [0, 3, 6] {
            let mut last = 0.0;
            let mut passed_quarter = false;
            for i in 1..=20 {
                let a = i as f64 / 20.0;
                let t = realized_angle(k, a, &basis);
                assert!((t + realized_angle(k, -a, &basis)).abs() < 1e-12);
                if !passed_quarter {
                    assert!(t > last, "k={k} a={a}");
                    passed_quarter = t > FRAC_PI_2;
                    last = t;
                }
            }
            assert!(passed_quarter, "k={k}");
        }
    }

    #[test]
    fn block_angle_matches_vector_route() {
        let basis = DisplacementBasis::get(18);
        let m = rotation_matrix(1, 0.23, nc(18));
        assert!((block_angle(&m, 1) - realized_angle(1, 0.23, &basis)).abs() < 1e-12);
    }

    #[test]
    fn quarter_turn_transfers_vacuum_near_family_optimum() {
        let c = nc(16);
        let a = calibrate_rotation(0, PI / 2.0, c, &OptimizerConfig::default()).unwrap();
        let transfer = |x: f64| 1.0 - rotation_matrix(0, x, c)[(1, 0)].norm();
        // Best transfer any symmetric V_0 can reach, by grid scan.
        let floor = (0..=2000)
            .map(|i| transfer(0.3 + i as f64 * 1e-4))
            .fold(f64::MAX, f64::min);
        assert!(floor > 9e-3 && floor < 1e-2, "floor={floor}");
        assert!(transfer(a) <= 1.1 * floor, "1-|V10|={}", transfer(a));
        assert!(rotation_fidelity(0, PI / 2.0, a, c) > 0.99);
    }

    #[test]
    fn calibration_is_odd_in_theta() {
        let cfg = OptimizerConfig::default();
        for (k, t) in [(0, 0.3), (2, 1.1), (4, -0.7)] {
            let a = calibrate_rotation(k, t, nc(20), &cfg).unwrap();
            let b = calibrate_rotation(k, -t, nc(20), &cfg).unwrap();
            assert!((a + b).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn small_angles_follow_first_order_law() {
        // θ ≈ 4α√(k+1) for small α.
        let basis = DisplacementBasis::get(20);
        for k in 0..4 {
            let a = 1e-3;
            let t = realized_angle(k, a, &basis);
            assert!((t / (4.0 * a * ((k + 1) as f64).sqrt()) - 1.0).abs() < 1e-2, "k={k}");
        }
    }

    #[test]
    fn rejects_out_of_range() {
        let cfg = OptimizerConfig::default();
        assert!(matches!(
            calibrate_rotation(0, 2.0, nc(16), &cfg),
            Err(Error::Calibration { .. })
        ));
        assert!(calibrate_rotation(15, 0.2, nc(16), &cfg).is_err());
    }
}
