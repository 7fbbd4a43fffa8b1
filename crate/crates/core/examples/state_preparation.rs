//! Compile uniform superpositions (|0⟩ + … + |N⟩)/√(N+1) and an arbitrary
//! complex target with the linear scheme.

use snapsynth::fock::{CutoffDim, C64};
use snapsynth::optimizer::OptimizerConfig;
use snapsynth::state_prep::{compile_state_prep, TargetState};

fn main() -> snapsynth::Result<()> {
    let config = OptimizerConfig::default();
    println!("{:>3} {:>12} {:>12} {:>6} {:>6}", "N", "chained 1−F", "final 1−F", "SNAPs", "D");
    for n in 1..=6 {
        let cutoff = CutoffDim::for_target_dim(n + 1);
        let plan = compile_state_prep(&TargetState::uniform(n), cutoff, &config)?;
        println!(
            "{n:>3} {:>12.3e} {:>12.3e} {:>6} {:>6}",
            1.0 - plan.chained_fidelity.unwrap_or(1.0),
            1.0 - plan.fidelity,
            plan.snap_count,
            plan.displacement_count
        );
    }

    let target = TargetState::normalized(vec![
        C64::new(0.5, 0.0),
        C64::new(0.0, -0.4),
        C64::new(-0.3, 0.3),
        C64::new(0.6, 0.2),
    ])?;
    let plan = compile_state_prep(&target, CutoffDim::for_target_dim(4), &config)?;
    println!(
        "complex target on 4 levels: 1−F = {:.3e} with {} gates",
        1.0 - plan.fidelity,
        plan.sequence.len()
    );
    Ok(())
}
