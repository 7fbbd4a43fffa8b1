//! Real-parameter minimization: Nelder–Mead for small local problems,
//! BFGS on central finite differences for joint refinement, and a
//! multi-start driver over Nelder–Mead.
//!
//! Objectives are plain `Fn(&[f64]) -> f64`. A non-finite value anywhere but
//! the starting point is treated as `+∞`, which keeps the search away from it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_evals: usize,
    pub xtol: f64,
    pub ftol: f64,
    pub fd_step: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_evals: 4000,
            xtol: 1e-8,
            ftol: 1e-12,
            fd_step: 1e-6,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_evals == 0 {
            return Err(Error::invalid("max_evals must be at least 1"));
        }
        for (name, v) in [("xtol", self.xtol), ("ftol", self.ftol), ("fd_step", self.fd_step)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// The generator every randomized caller draws from.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub fval: f64,
    pub evals: usize,
    pub converged: bool,
    /// Best objective value after each iteration.
    pub trace: Vec<f64>,
}

struct Counted<'a, F> {
    f: &'a F,
    evals: usize,
}

impl<F: Fn(&[f64]) -> f64> Counted<'_, F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    }
}

fn check_start<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], config: &OptimizerConfig) -> Result<f64> {
    config.validate()?;
    if x0.is_empty() {
        return Err(Error::invalid("empty parameter vector"));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite starting point"));
    }
    let f0 = f(x0);
    if !f0.is_finite() {
        return Err(Error::invalid(format!("objective is {f0} at the starting point")));
    }
    Ok(f0)
}

/// Nelder–Mead with the standard coefficients (1, 2, ½, ½). The initial
/// simplex perturbs each coordinate by 5%, or by 2.5e-4 when it is zero.
/// Stops when both the simplex diameter (max-norm from the best vertex) is at
/// most `xtol` and the spread of objective values is at most `ftol`.
pub fn minimize_local<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    config: &OptimizerConfig,
) -> Result<OptimResult> {
    let f0 = check_start(f, x0, config)?;
    let k = x0.len();
    let mut obj = Counted { f, evals: 1 };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(k + 1);
    simplex.push((x0.to_vec(), f0));
    for i in 0..k {
        let mut v = x0.to_vec();
        v[i] = if v[i] != 0.0 { 1.05 * v[i] } else { 2.5e-4 };
        let fv = obj.eval(&v);
        simplex.push((v, fv));
    }

    let mut trace = Vec::new();
    let mut converged = false;
    while obj.evals < config.max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        trace.push(simplex[0].1);
        let best = &simplex[0];
        let xspread = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&best.0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let fspread = simplex[1..].iter().map(|(_, fv)| (fv - best.1).abs()).fold(0.0, f64::max);
        if xspread <= config.xtol && fspread <= config.ftol {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..k)
            .map(|j| simplex[..k].iter().map(|(v, _)| v[j]).sum::<f64>() / k as f64)
            .collect();
        let worst = simplex[k].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect()
        };

        let xr = along(1.0);
        let fr = obj.eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = obj.eval(&xe);
            simplex[k] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[k - 1].1 {
            simplex[k] = (xr, fr);
            continue;
        }
        let shrink = if fr < worst.1 {
            let xc = along(0.5);
            let fc = obj.eval(&xc);
            if fc <= fr {
                simplex[k] = (xc, fc);
                false
            } else {
                true
            }
        } else {
            let xcc = along(-0.5);
            let fcc = obj.eval(&xcc);
            if fcc < worst.1 {
                simplex[k] = (xcc, fcc);
                false
            } else {
                true
            }
        };
        if shrink {
            let x_best = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let v: Vec<f64> = x_best.iter().zip(&vertex.0).map(|(b, x)| b + 0.5 * (x - b)).collect();
                let fv = obj.eval(&v);
                *vertex = (v, fv);
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fval) = simplex.swap_remove(0);
    if trace.last() != Some(&fval) {
        trace.push(fval);
    }
    Ok(OptimResult {
        x,
        fval,
        evals: obj.evals,
        converged,
        trace,
    })
}

/// Central-difference gradient with step `h`.
pub fn central_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// BFGS on central finite differences with Armijo backtracking. Accepted
/// iterates strictly decrease the objective. Stops when the gradient
/// max-norm is at most 1e-10, the decrease per step falls below `ftol`, the
/// step falls below `xtol`, or no descent step can be found.
pub fn minimize_refine<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    config: &OptimizerConfig,
) -> Result<OptimResult> {
    minimize_refine_until(f, x0, config, f64::NEG_INFINITY)
}

/// [`minimize_refine`] that also stops as soon as the objective is at most `stop_at`.
pub fn minimize_refine_until<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    config: &OptimizerConfig,
    stop_at: f64,
) -> Result<OptimResult> {
    let f0 = check_start(f, x0, config)?;
    let k = x0.len();
    let mut obj = Counted { f, evals: 1 };
    let mut x = x0.to_vec();
    let mut fx = f0;
    let mut trace = vec![fx];

    let grad = |obj: &mut Counted<F>, x: &[f64]| {
        obj.evals += 2 * k;
        central_gradient(obj.f, x, config.fd_step)
    };
    let mut g = grad(&mut obj, &x);
    let mut h_inv = identity(k);
    let mut first_step = true;
    let mut converged = false;

    while obj.evals + 2 * k < config.max_evals {
        if g.iter().any(|v| !v.is_finite()) {
            break;
        }
        if max_norm(&g) <= 1e-10 || fx <= stop_at {
            converged = true;
            break;
        }
        let mut dir: Vec<f64> = mat_vec(&h_inv, &g).iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            h_inv = identity(k);
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }

        let mut t = 1.0;
        let mut accepted = None;
        while obj.evals < config.max_evals {
            let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            let ft = obj.eval(&trial);
            if ft < fx && ft <= fx + 1e-4 * t * slope {
                accepted = Some((trial, ft));
                break;
            }
            t *= 0.5;
            if t * max_norm(&dir) < 1e-3 * config.xtol {
                break;
            }
        }
        let Some((x_new, f_new)) = accepted else {
            // No descent along a quasi-Newton or steepest direction at the
            // resolution of the finite differences.
            converged = obj.evals < config.max_evals;
            break;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let decrease = fx - f_new;
        x = x_new;
        fx = f_new;
        trace.push(fx);
        if decrease <= config.ftol * (fx.abs() + config.ftol) || max_norm(&s) <= config.xtol {
            converged = true;
            break;
        }
        if obj.evals + 2 * k >= config.max_evals {
            break;
        }
        let g_new = grad(&mut obj, &x);
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if first_step {
                let scale = sy / dot(&y, &y);
                h_inv.iter_mut().flatten().for_each(|v| *v *= scale);
                first_step = false;
            }
            bfgs_update(&mut h_inv, &s, &y, sy);
        }
        g = g_new;
    }
    Ok(OptimResult {
        x,
        fval: fx,
        evals: obj.evals,
        converged,
        trace,
    })
}

/// Runs [`minimize_local`] from every seed and keeps the lowest objective
/// (earliest seed on ties). Seeds that cannot start are skipped; if none
/// can, the error lists each failure.
pub fn multi_start<F: Fn(&[f64]) -> f64>(
    f: &F,
    seeds: &[Vec<f64>],
    config: &OptimizerConfig,
) -> Result<OptimResult> {
    if seeds.is_empty() {
        return Err(Error::invalid("multi_start needs at least one seed"));
    }
    let mut best: Option<OptimResult> = None;
    let mut failures = Vec::new();
    for (i, seed) in seeds.iter().enumerate() {
        match minimize_local(f, seed, config) {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.fval < b.fval) {
                    best = Some(r);
                }
            }
            Err(e) => failures.push(format!("seed {i}: {e}")),
        }
    }
    best.ok_or_else(|| Error::Optimizer(format!("every start failed ({})", failures.join("; "))))
}

fn identity(k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

/// `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ` with `ρ = 1/(yᵀs)`.
fn bfgs_update(h: &mut [Vec<f64>], s: &[f64], y: &[f64], sy: f64) {
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y);
    let yhy = dot(y, &hy);
    let k = s.len();
    for i in 0..k {
        for j in 0..k {
            h[i][j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn quadratic_bowl() {
        let cfg = OptimizerConfig::default();
        let r = minimize_local(&|x: &[f64]| (x[0] - 1.0).powi(2), &[0.0], &cfg).unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() <= cfg.xtol * 10.0);
        assert_eq!(r.fval, (r.x[0] - 1.0).powi(2));
    }

    #[test]
    fn rosenbrock_within_budget() {
        let cfg = OptimizerConfig {
            max_evals: 2000,
            ..Default::default()
        };
        let r = minimize_local(&rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
        assert!(r.fval < 1e-6, "fval={}", r.fval);
        assert!(r.evals <= 2000);
    }

    #[test]
    fn budget_exhaustion_is_not_an_error() {
        let cfg = OptimizerConfig {
            max_evals: 10,
            ..Default::default()
        };
        let r = minimize_local(&rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
        assert!(!r.converged);
        assert!(r.fval <= rosenbrock(&[-1.2, 1.0]));
    }

    #[test]
    fn non_finite_start_is_rejected() {
        let cfg = OptimizerConfig::default();
        let f = |x: &[f64]| x[0].ln();
        assert!(minimize_local(&f, &[-1.0], &cfg).is_err());
        assert!(minimize_refine(&f, &[-1.0], &cfg).is_err());
        assert!(minimize_local(&f, &[], &cfg).is_err());
        let bad = OptimizerConfig {
            xtol: 0.0,
            ..Default::default()
        };
        assert!(minimize_local(&|x: &[f64]| x[0] * x[0], &[1.0], &bad).is_err());
    }

    #[test]
    fn refine_leaves_an_optimum_in_place() {
        let cfg = OptimizerConfig::default();
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + 2.0 * (x[1] + 0.1).powi(2);
        let r = minimize_refine(&f, &[0.3, -0.1], &cfg).unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 0.3).abs() <= cfg.xtol && (r.x[1] + 0.1).abs() <= cfg.xtol);
    }

    #[test]
    fn refine_solves_rosenbrock() {
        let cfg = OptimizerConfig::default();
        let r = minimize_refine(&rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
        assert!(r.fval < 1e-10, "fval={}", r.fval);
    }

    #[test]
    fn gradient_vanishes_at_quadratic_minimizer() {
        // Exact for quadratics up to rounding; bound is the truncation scale.
        let h = 1e-4;
        let f = |x: &[f64]| 3.0 * (x[0] - 2.0).powi(2) + (x[0] - 2.0) * (x[1] + 1.0) + (x[1] + 1.0).powi(2);
        let g = central_gradient(&f, &[2.0, -1.0], h);
        assert!(max_norm(&g) <= 10.0 * h * h);
        let g = central_gradient(&f, &[0.0, 0.0], h);
        assert!((g[0] - -11.0).abs() < 1e-8 && (g[1] - 0.0).abs() < 1e-8);
    }

    #[test]
    fn multi_start_finds_global_basin() {
        let f = |x: &[f64]| (3.0 * x[0]).cos() + x[0] * x[0] / 10.0;
        let grid_best = (-4000..=4000)
            .map(|i| i as f64 * 1e-3)
            .min_by(|a, b| f(&[*a]).total_cmp(&f(&[*b])))
            .unwrap();
        let cfg = OptimizerConfig::default();
        let r = multi_start(&f, &[vec![-2.0], vec![0.0], vec![2.0]], &cfg).unwrap();
        assert!((r.fval - f(&[grid_best])).abs() < 1e-6);
        assert!((r.x[0].abs() - grid_best.abs()).abs() < 2e-3);
    }

    #[test]
    fn multi_start_single_seed_matches_local() {
        let cfg = OptimizerConfig::default();
        let a = multi_start(&rosenbrock, &[vec![0.5, 0.5]], &cfg).unwrap();
        let b = minimize_local(&rosenbrock, &[0.5, 0.5], &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn multi_start_reports_all_failures() {
        let f = |_: &[f64]| f64::NAN;
        let err = multi_start(&f, &[vec![0.0], vec![1.0]], &OptimizerConfig::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("seed 0") && msg.contains("seed 1"), "{msg}");
        assert!(multi_start(&f, &[], &OptimizerConfig::default()).is_err());
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = OptimizerConfig::default();
        let a = minimize_refine(&rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
        let b = minimize_refine(&rosenbrock, &[-1.2, 1.0], &cfg).unwrap();
        assert_eq!(a.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn convex_quadratic_reaches_minimum(
            center in prop::collection::vec(-2.0f64..2.0, 1..=5),
            weights in prop::collection::vec(0.5f64..4.0, 5),
            start in prop::collection::vec(-2.0f64..2.0, 5),
        ) {
            let k = center.len();
            let f = |x: &[f64]| (0..k).map(|i| weights[i] * (x[i] - center[i]).powi(2)).sum::<f64>();
            let cfg = OptimizerConfig { max_evals: 20_000, ftol: 1e-20, ..Default::default() };
            let r = minimize_local(&f, &start[..k], &cfg).unwrap();
            prop_assert!(r.converged);
            for (x, c) in r.x.iter().zip(&center) {
                prop_assert!((x - c).abs() <= 10.0 * cfg.xtol);
            }
            prop_assert!((f(&r.x) - r.fval).abs() <= 1e-12);
        }

        #[test]
        fn best_so_far_is_monotone(start in prop::collection::vec(-2.0f64..2.0, 2)) {
            let cfg = OptimizerConfig { max_evals: 500, ..Default::default() };
            for r in [minimize_local(&rosenbrock, &start, &cfg).unwrap(), minimize_refine(&rosenbrock, &start, &cfg).unwrap()] {
                prop_assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
                prop_assert!(r.fval <= rosenbrock(&start));
            }
        }
    }
}
