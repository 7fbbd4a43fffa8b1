//! Prepare |n⟩ with the linear ladder and with coherent-state folding, and
//! compare SNAP counts.
//!
//! Usage: cargo run --release --example fock_schemes [n] [fidelity]

use snapsynth::optimizer::OptimizerConfig;
use snapsynth::state_prep::{compile_fock_sublinear, compile_state_prep, CutoffRule, Scheme, TargetState};

fn main() -> snapsynth::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(12);
    let fidelity: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.999);
    let config = OptimizerConfig::default();

    let linear = compile_state_prep(
        &TargetState::fock(n),
        CutoffRule::PerScheme.cutoff(Scheme::Linear, n),
        &config,
    )?;
    println!("linear:    {:>3} SNAPs, F = {:.6}", linear.snap_count, linear.fidelity);

    let folded = compile_fock_sublinear(n, fidelity, CutoffRule::PerScheme.cutoff(Scheme::Sublinear, n), &config)?;
    println!("sublinear: {:>3} SNAPs, F = {:.6}", folded.snap_count, folded.fidelity);
    Ok(())
}
