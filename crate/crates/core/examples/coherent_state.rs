//! Displace the vacuum, check the Poisson statistics, and rebuild a complex
//! displacement from a real one conjugated by SNAP gates.

use snapsynth::fock::{
    apply_sequence, decompose_complex_displacement, displacement_operator, sequence_unitary,
    unitary_fidelity, CutoffDim, FidelityMode, TruncatedState, C64,
};

fn main() -> snapsynth::Result<()> {
    let cutoff = CutoffDim::new(40)?;
    let alpha = C64::from_polar(1.5, 0.6);

    let d = displacement_operator(alpha, cutoff)?;
    let psi = d.apply(&TruncatedState::vacuum(cutoff))?;
    let mean = alpha.norm_sqr();
    println!("|α|² = {mean:.4}");
    println!("{:>3} {:>12} {:>12}", "n", "population", "Poisson");
    let mut poisson = (-mean).exp();
    for n in 0..8 {
        println!("{n:>3} {:>12.8} {:>12.8}", psi.population(n), poisson);
        poisson *= mean / (n + 1) as f64;
    }

    let seq = decompose_complex_displacement(alpha, cutoff);
    let via_snaps = sequence_unitary(&seq);
    let out = apply_sequence(&seq, &TruncatedState::vacuum(cutoff))?;
    println!(
        "S(θ) D(|α|) S(−θ) vs D(α): full-space fidelity {:.12}, state overlap {:.12}",
        unitary_fidelity(&via_snaps, &d, FidelityMode::Full)?,
        psi.inner(&out.state)?.norm()
    );
    println!("sequence JSON: {}", seq.to_json()?.chars().take(160).collect::<String>() + "…");
    Ok(())
}
