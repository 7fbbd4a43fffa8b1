//! Optimize the three displacements of D R_n(π) D R_n(π) D for a full
//! transfer |n⟩ → |n+1⟩ and report the infidelity per level.
//!
//! Usage: cargo run --example ladder_rotation [max_level]

use std::f64::consts::FRAC_PI_2;

use snapsynth::fock::CutoffDim;
use snapsynth::optimizer::OptimizerConfig;
use snapsynth::state_prep::optimize_so2_step;

fn main() -> snapsynth::Result<()> {
    let max_level: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let config = OptimizerConfig::default();
    println!("{:>3} {:>10} {:>10} {:>10} {:>10}", "n", "α1", "α2", "α3", "1 − F");
    for n in 0..=max_level {
        let cutoff = CutoffDim::new(2 * (n + 2) + 15)?;
        let step = optimize_so2_step(n, FRAC_PI_2, cutoff, &config)?;
        let [a1, a2, a3] = step.alphas;
        println!("{n:>3} {a1:>10.4} {a2:>10.4} {a3:>10.4} {:>10.3e}", 1.0 - step.fidelity);
    }
    Ok(())
}
