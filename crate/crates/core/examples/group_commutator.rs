//! The group commutator D(ε) R_n(ε) D(−ε) R_n(−ε) approaches exp(i J_n ε²)
//! with an error that shrinks like ε³.

use snapsynth::fock::{coupling_j, group_commutator, CutoffDim, Operator, C64};

fn main() -> snapsynth::Result<()> {
    let cutoff = CutoffDim::new(40)?;
    println!("{:>3} {:>6} {:>12} {:>8}", "n", "ε", "max error", "ratio");
    for n in [0, 1, 3] {
        let j = coupling_j(n, cutoff)?.into_matrix();
        let mut previous: Option<f64> = None;
        for eps in [0.4, 0.2, 0.1, 0.05] {
            let ideal = Operator::from_matrix((&j * C64::new(0.0, eps * eps)).exp())?;
            let err = group_commutator(n, eps, cutoff)?.max_abs_diff(&ideal, cutoff.get());
            let ratio = previous.map_or(String::new(), |p| format!("{:.3}", p / err));
            println!("{n:>3} {eps:>6} {err:>12.4e} {ratio:>8}");
            previous = Some(err);
        }
    }
    Ok(())
}
