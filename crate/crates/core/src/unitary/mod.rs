//! Synthesis of a unitary acting on the lowest `d` levels.
//!
//! The inverse target is reduced column by column, last column first. Each
//! column gets a SNAP making it real and nonnegative, then rotations on
//! adjacent levels `{k, k+1}` (`k = 0 … c−1`) walk its mass down to the
//! diagonal. The gates applied along the way form the synthesized sequence.

mod calibrate;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{sequence_unitary, unitary_fidelity, CutoffDim, FidelityMode, Gate, GateSequence, Operator, C64};
use crate::optimizer::{minimize_local, minimize_refine, OptimizerConfig};

pub use calibrate::{
    block_angle, calibrate_rotation, givens, rotation_fidelity, rotation_gates,
    rotation_matrix,
};

/// Levels at the top of the truncation excluded from costs and targets.
pub const SYNTH_BUFFER: usize = 5;
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct TargetUnitary {
    block: DMatrix<C64>,
    cutoff: CutoffDim,
}

impl TargetUnitary {
    /// `cutoff` defaults to `max(2d, d+14)`.
    pub fn new(block: DMatrix<C64>, cutoff: Option<CutoffDim>) -> Result<Self> {
        Self::with_tolerance(block, cutoff, UNITARITY_TOLERANCE)
    }

    pub fn with_tolerance(block: DMatrix<C64>, cutoff: Option<CutoffDim>, tolerance: f64) -> Result<Self> {
        let d = block.nrows();
        if d == 0 || block.ncols() != d {
            return Err(Error::invalid(format!(
                "target must be square and non-empty, got {}×{}",
                block.nrows(),
                block.ncols()
            )));
        }
        if block.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("target entries must be finite"));
        }
        let defect = (block.adjoint() * &block - DMatrix::<C64>::identity(d, d))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if defect > tolerance {
            return Err(Error::invalid(format!(
                "target is not unitary: max |U†U − I| = {defect:.3e}"
            )));
        }
        let cutoff = cutoff.unwrap_or_else(|| CutoffDim::for_target_dim(d));
        if d + SYNTH_BUFFER > cutoff.get() {
            return Err(Error::invalid(format!(
                "cutoff {cutoff} too small for a {d}-level target (needs {})",
                d + SYNTH_BUFFER
            )));
        }
        Ok(TargetUnitary { block, cutoff })
    }

    pub fn dim(&self) -> usize {
        self.block.nrows()
    }

    pub fn block(&self) -> &DMatrix<C64> {
        &self.block
    }

    pub fn cutoff(&self) -> CutoffDim {
        self.cutoff
    }

    /// The block embedded in the identity on the full truncated space.
    pub fn embedded(&self) -> Operator {
        let nc = self.cutoff.get();
        let d = self.dim();
        let mut m = DMatrix::identity(nc, nc);
        m.view_mut((0, 0), (d, d)).copy_from(&self.block);
        Operator::from_matrix(m).expect("finite square matrix")
    }

    pub fn from_json(text: &str, cutoff: Option<CutoffDim>, tolerance: f64) -> Result<Self> {
        let wire: MatrixWire = serde_json::from_str(text)?;
        if wire.matrix.len() != wire.dim || wire.matrix.iter().any(|r| r.len() != wire.dim) {
            return Err(Error::Format(format!("matrix is not {0}×{0}", wire.dim)));
        }
        let block = DMatrix::from_fn(wire.dim, wire.dim, |i, j| {
            let [re, im] = wire.matrix[i][j];
            C64::new(re, im)
        });
        Self::with_tolerance(block, cutoff, tolerance)
    }

    pub fn to_json(&self) -> Result<String> {
        crate::json::to_canonical_string(&matrix_wire(&self.block))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixWire {
    dim: usize,
    /// Row-major `[re, im]` pairs.
    matrix: Vec<Vec<[f64; 2]>>,
}

fn matrix_wire(m: &DMatrix<C64>) -> MatrixWire {
    MatrixWire {
        dim: m.nrows(),
        matrix: (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect(),
    }
}

/// `F_{ij} = ω^{ij}/√d`, `ω = e^{2πi/d}`.
pub fn fourier_matrix(d: usize) -> DMatrix<C64> {
    let w = std::f64::consts::TAU / d as f64;
    DMatrix::from_fn(d, d, |i, j| C64::from_polar(1.0 / (d as f64).sqrt(), w * ((i * j) % d) as f64))
}

/// Cyclic shift `|j⟩ → |j+1 mod d⟩`.
pub fn cyclic_permutation(d: usize) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |i, j| {
        if i == (j + 1) % d {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Haar-distributed unitary from the QR decomposition of a complex Gaussian
/// matrix, with the phases of `R`'s diagonal folded back into `Q`.
pub fn random_unitary<R: Rng>(d: usize, rng: &mut R) -> DMatrix<C64> {
    let z = DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let p = r[(j, j)];
        let phase = if p.norm() == 0.0 { C64::new(1.0, 0.0) } else { p / p.norm() };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// `Σ |m[i,j]|` over `i ≠ j`, `i, j < limit`, excluding pairs with both
/// indices inside the leading `d′ × d′` block.
pub fn off_diagonal_cost(m: &DMatrix<C64>, active_block_dim: usize, limit: usize) -> f64 {
    let limit = limit.min(m.nrows()).min(m.ncols());
    let mut cost = 0.0;
    for j in 0..limit {
        for i in 0..limit {
            if i != j && !(i < active_block_dim && j < active_block_dim) {
                cost += m[(i, j)].norm();
            }
        }
    }
    cost
}

/// SNAP making rows `0..=col` of column `col` real and nonnegative.
pub fn column_phase_snap(w: &DMatrix<C64>, col: usize) -> Gate {
    Gate::snap((0..=col).map(|r| {
        let z = w[(r, col)];
        if z.norm() == 0.0 {
            0.0
        } else {
            -z.arg()
        }
    }))
}

fn apply_snap_rows(gate: &Gate, m: &mut DMatrix<C64>) {
    if let Gate::Snap { phases } = gate {
        for (r, &p) in phases.iter().enumerate() {
            let f = C64::from_polar(1.0, p);
            for z in m.row_mut(r).iter_mut() {
                *z *= f;
            }
        }
    }
}

/// Rotation angle zeroing entry `k` of column `col` by rotating it into
/// `k+1`. Intermediate angles wrap into `[−π/2, π/2]` (flipping the sign of
/// the carried mass, which the next rotation absorbs); the last one clamps so
/// that the diagonal entry ends up positive.
fn elimination_angle(m: &DMatrix<C64>, k: usize, col: usize) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    let theta = m[(k, col)].re.atan2(m[(k + 1, col)].re);
    if theta.abs() <= FRAC_PI_2 {
        theta
    } else if k + 1 == col {
        theta.signum() * FRAC_PI_2
    } else if theta > 0.0 {
        theta - PI
    } else {
        theta + PI
    }
}

/// Outcome of [`eliminate_column`].
#[derive(Clone, Debug)]
pub struct ColumnElimination {
    /// One `α` per rotation, `k = 0 … col−1`.
    pub alphas: Vec<f64>,
    /// `V_{col−1} ⋯ V_0 w`.
    pub matrix: DMatrix<C64>,
    pub cost_before_refine: f64,
    pub cost: f64,
}

impl ColumnElimination {
    /// Gates in application order.
    pub fn gates(&self) -> Vec<Gate> {
        self.alphas
            .iter()
            .enumerate()
            .flat_map(|(k, &a)| rotation_gates(k, a))
            .collect()
    }
}

/// Reduces column `col` of `w` (already real and nonnegative) to `e_col`:
/// rotations realized by calibrated `V_k`, then a joint Nelder–Mead pass
/// over the `col` displacement amplitudes minimizing [`off_diagonal_cost`]
/// outside the leading `col × col` block.
pub fn eliminate_column(
    w: &DMatrix<C64>,
    col: usize,
    cutoff: CutoffDim,
    config: &OptimizerConfig,
) -> Result<ColumnElimination> {
    let limit = cutoff.get() - SYNTH_BUFFER;
    let (alphas, m) = eliminate_with(w, col, |k, theta| {
        let a = calibrate_rotation(k, theta, cutoff, config)?;
        Ok((a, rotation_matrix(k, a, cutoff)))
    })?;
    let cost_before_refine = off_diagonal_cost(&m, col, limit);
    if col == 0 {
        return Ok(ColumnElimination {
            alphas,
            matrix: m,
            cost_before_refine,
            cost: cost_before_refine,
        });
    }
    let apply_all = |x: &[f64]| {
        let mut out = w.clone();
        for (k, &a) in x.iter().enumerate() {
            out = rotation_matrix(k, a, cutoff) * out;
        }
        out
    };
    let objective = |x: &[f64]| off_diagonal_cost(&apply_all(x), col, limit);
    let all_zero = alphas.iter().all(|&a| a == 0.0);
    let refined = if all_zero {
        None
    } else {
        Some(minimize_local(&objective, &alphas, config)?)
    };
    match refined {
        Some(r) if r.fval < cost_before_refine => Ok(ColumnElimination {
            matrix: apply_all(&r.x),
            alphas: r.x,
            cost_before_refine,
            cost: r.fval,
        }),
        _ => Ok(ColumnElimination {
            alphas,
            matrix: m,
            cost_before_refine,
            cost: cost_before_refine,
        }),
    }
}

/// Walks the rotations `k = 0 … col−1` with a caller-supplied realization
/// returning `(α, realized matrix)` for each requested angle.
fn eliminate_with<F>(w: &DMatrix<C64>, col: usize, mut realize: F) -> Result<(Vec<f64>, DMatrix<C64>)>
where
    F: FnMut(usize, f64) -> Result<(f64, DMatrix<C64>)>,
{
    let mut m = w.clone();
    let mut alphas = Vec::with_capacity(col);
    for k in 0..col {
        let theta = elimination_angle(&m, k, col);
        let (a, v) = realize(k, theta)?;
        alphas.push(a);
        m = v * m;
    }
    Ok((alphas, m))
}

/// Per-column plan: phase SNAP, then rotation amplitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnPlan {
    pub col: usize,
    pub phases: Vec<f64>,
    pub alphas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundFidelity {
    pub round: String,
    pub f_unitary_full: f64,
    pub f_unitary_block: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthReport {
    pub dim: usize,
    pub sequence: GateSequence,
    pub f_unitary_full: f64,
    pub f_unitary_block: f64,
    pub rounds: Vec<RoundFidelity>,
    pub rotation_count: usize,
    pub snap_count: usize,
    /// Column phase SNAPs left after zero-phase elision.
    pub column_snap_count: usize,
    pub displacement_count: usize,
    pub columns: Vec<ColumnPlan>,
    /// Off-diagonal mass left in each column's row and column after its
    /// elimination, in processing order.
    pub column_residuals: Vec<f64>,
    pub seed: u64,
}

impl SynthReport {
    pub fn to_json(&self) -> Result<String> {
        crate::json::to_canonical_string(self)
    }
}

fn plan_gates(columns: &[ColumnPlan]) -> Vec<Gate> {
    let mut gates = Vec::new();
    for c in columns {
        gates.push(Gate::snap(c.phases.iter().copied()));
        for (k, &a) in c.alphas.iter().enumerate() {
            gates.extend(rotation_gates(k, a));
        }
    }
    gates
}

fn with_alphas(columns: &[ColumnPlan], flat: &[f64]) -> Vec<ColumnPlan> {
    let mut it = flat.iter().copied();
    columns
        .iter()
        .map(|c| ColumnPlan {
            col: c.col,
            phases: c.phases.clone(),
            alphas: c.alphas.iter().map(|_| it.next().expect("one value per rotation")).collect(),
        })
        .collect()
}

fn fidelities(seq: &GateSequence, ideal: &Operator, d: usize) -> Result<(f64, f64)> {
    let u = sequence_unitary(seq);
    Ok((
        unitary_fidelity(&u, ideal, FidelityMode::Full)?,
        unitary_fidelity(&u, ideal, FidelityMode::Block(d))?,
    ))
}

/// Max of `|m[r, c]|` and `|m[c, r]|` over `r ≠ c` inside the working range,
/// plus `|m[c, c] − 1|`.
fn column_residual(m: &DMatrix<C64>, c: usize, limit: usize) -> f64 {
    let mut r = (m[(c, c)] - C64::new(1.0, 0.0)).norm();
    for i in (0..limit).filter(|&i| i != c) {
        r = r.max(m[(i, c)].norm()).max(m[(c, i)].norm());
    }
    r
}

/// Synthesizes `target`. Rounds: per-rotation calibration, per-column
/// refinement, then (if `global_round`) joint refinement of all `d(d−1)/2`
/// amplitudes against `1 − F_full`. Emitted sequences are simplified: zero
/// phase SNAPs are dropped and adjacent displacements merged.
pub fn compile_unitary(target: &TargetUnitary, config: &OptimizerConfig, global_round: bool) -> Result<SynthReport> {
    config.validate()?;
    let cutoff = target.cutoff();
    let nc = cutoff.get();
    let d = target.dim();
    let limit = nc - SYNTH_BUFFER;
    let ideal = target.embedded();

    let mut m = ideal.adjoint().into_matrix();
    let mut columns = Vec::with_capacity(d);
    let mut column_residuals = Vec::with_capacity(d);
    for c in (0..d).rev() {
        let snap = column_phase_snap(&m, c);
        apply_snap_rows(&snap, &mut m);
        let Gate::Snap { phases } = snap else { unreachable!() };
        let elim = eliminate_column(&m, c, cutoff, config)?;
        m = elim.matrix;
        column_residuals.push(column_residual(&m, c, limit));
        log::debug!("column {c}: cost {:.3e} -> {:.3e}", elim.cost_before_refine, elim.cost);
        columns.push(ColumnPlan {
            col: c,
            phases,
            alphas: elim.alphas,
        });
    }

    let seq_of = |cols: &[ColumnPlan]| {
        GateSequence::new(cutoff, plan_gates(cols)).map(|s| s.simplified())
    };
    let seq = seq_of(&columns)?;
    let (f_full, f_block) = fidelities(&seq, &ideal, d)?;
    let mut rounds = vec![RoundFidelity {
        round: "columns".into(),
        f_unitary_full: f_full,
        f_unitary_block: f_block,
    }];

    let flat: Vec<f64> = columns.iter().flat_map(|c| c.alphas.iter().copied()).collect();
    if global_round && !flat.is_empty() {
        let objective = |x: &[f64]| {
            let gates = plan_gates(&with_alphas(&columns, x));
            let seq = GateSequence::new(cutoff, gates).expect("validated shapes");
            let u = sequence_unitary(&seq);
            1.0 - unitary_fidelity(&u, &ideal, FidelityMode::Full).expect("same dimension")
        };
        let budget = OptimizerConfig {
            max_evals: config.max_evals.saturating_mul(flat.len()),
            ..config.clone()
        };
        let r = minimize_refine(&objective, &flat, &budget)?;
        if r.fval < objective(&flat) {
            columns = with_alphas(&columns, &r.x);
        }
        let seq = seq_of(&columns)?;
        let (f_full, f_block) = fidelities(&seq, &ideal, d)?;
        rounds.push(RoundFidelity {
            round: "global".into(),
            f_unitary_full: f_full,
            f_unitary_block: f_block,
        });
    }

    let sequence = seq_of(&columns)?;
    let last = rounds.last().expect("at least one round");
    Ok(SynthReport {
        dim: d,
        f_unitary_full: last.f_unitary_full,
        f_unitary_block: last.f_unitary_block,
        rotation_count: d * (d - 1) / 2,
        snap_count: sequence.snap_count(),
        column_snap_count: columns
            .iter()
            .filter(|c| !Gate::snap(c.phases.iter().copied()).is_trivial())
            .count(),
        displacement_count: sequence.displacement_count(),
        sequence,
        rounds,
        columns,
        column_residuals,
        seed: config.seed,
    })
}

/// `U_construct` with every `V_k` replaced by the ideal rotation: isolates
/// the decomposition from gate realization.
pub fn exact_construct(target: &TargetUnitary) -> Result<DMatrix<C64>> {
    let nc = target.cutoff().get();
    let ideal = target.embedded();
    let mut m = ideal.adjoint().into_matrix();
    let mut u = DMatrix::<C64>::identity(nc, nc);
    for c in (0..target.dim()).rev() {
        let snap = column_phase_snap(&m, c);
        apply_snap_rows(&snap, &mut m);
        apply_snap_rows(&snap, &mut u);
        let mut rotations = Vec::new();
        let (_, reduced) = eliminate_with(&m, c, |k, theta| {
            let g = givens(k, theta, nc);
            rotations.push(g.clone());
            Ok((theta, g))
        })?;
        m = reduced;
        for g in rotations {
            u = g * u;
        }
    }
    Ok(u)
}
