//! Synthesize Fourier, cyclic-permutation and random unitaries on the lowest
//! d levels and report the fidelity after each round.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use snapsynth::optimizer::OptimizerConfig;
use snapsynth::unitary::{compile_unitary, cyclic_permutation, fourier_matrix, random_unitary, TargetUnitary};

fn main() -> snapsynth::Result<()> {
    let config = OptimizerConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    println!(
        "{:<8} {:>2} {:>3} {:>12} {:>12} {:>12} {:>6}",
        "target", "d", "nc", "F columns", "F global", "F block", "SNAPs"
    );
    for d in 2..=4 {
        for (name, block) in [
            ("fourier", fourier_matrix(d)),
            ("shift", cyclic_permutation(d)),
            ("random", random_unitary(d, &mut rng)),
        ] {
            let target = TargetUnitary::new(block, None)?;
            let report = compile_unitary(&target, &config, true)?;
            println!(
                "{name:<8} {d:>2} {:>3} {:>12.6} {:>12.6} {:>12.6} {:>6}",
                target.cutoff().get(),
                report.rounds[0].f_unitary_full,
                report.f_unitary_full,
                report.f_unitary_block,
                report.snap_count
            );
        }
    }
    Ok(())
}
