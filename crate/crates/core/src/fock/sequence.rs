//! Ordered gate lists and their JSON wire format.
//!
//! Gates are stored in *application order*: `gates[0]` acts first, so the
//! realized operator is `G_{k-1} ⋯ G_1 G_0`. Operator products written
//! right-to-left must be reversed when building a sequence.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{check_same, CutoffDim, Gate, Operator, TruncatedState, C64, LEAK_TOLERANCE};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SequenceWire", into = "SequenceWire")]
pub struct GateSequence {
    cutoff: CutoffDim,
    gates: Vec<Gate>,
}

impl GateSequence {
    pub fn empty(cutoff: CutoffDim) -> Self {
        GateSequence {
            cutoff,
            gates: Vec::new(),
        }
    }

    pub fn new(cutoff: CutoffDim, gates: Vec<Gate>) -> Result<Self> {
        for g in &gates {
            g.validate(cutoff)?;
        }
        Ok(GateSequence { cutoff, gates })
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.cutoff)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<()> {
        for g in gates {
            self.push(g)?;
        }
        Ok(())
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn cutoff(&self) -> CutoffDim {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn snap_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_snap()).count()
    }

    pub fn displacement_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_displacement()).count()
    }

    /// Same gates re-targeted to another cutoff (used for cutoff convergence checks).
    pub fn with_cutoff(&self, cutoff: CutoffDim) -> Result<Self> {
        GateSequence::new(cutoff, self.gates.clone())
    }

    /// Merges adjacent collinear displacements and adjacent SNAPs and drops
    /// trivial gates, including ones that cancel after a merge. The realized
    /// operator is unchanged up to rounding: collinear displacements share a
    /// generator, and SNAPs are diagonal.
    pub fn simplified(&self) -> Self {
        let mut gates: Vec<Gate> = Vec::with_capacity(self.gates.len());
        for g in self.gates.iter().filter(|g| !g.is_trivial()) {
            let merged = match (gates.last_mut(), g) {
                (Some(Gate::Displacement { alpha: a }), Gate::Displacement { alpha: b })
                    if (*a * b.conj()).im == 0.0 =>
                {
                    *a += b;
                    true
                }
                (Some(Gate::Snap { phases: p }), Gate::Snap { phases: q }) => {
                    if q.len() > p.len() {
                        p.resize(q.len(), 0.0);
                    }
                    for (x, y) in p.iter_mut().zip(q) {
                        *x = super::reduce_phase(*x + y);
                    }
                    true
                }
                _ => false,
            };
            if merged {
                if gates.last().is_some_and(Gate::is_trivial) {
                    gates.pop();
                }
            } else {
                gates.push(g.clone());
            }
        }
        GateSequence {
            cutoff: self.cutoff,
            gates,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        crate::json::to_canonical_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Output of [`apply_sequence`].
#[derive(Clone, Debug)]
pub struct Evolved {
    pub state: TruncatedState,
    /// `1 − ‖ψ_out‖`.
    pub norm_leak: f64,
    /// Set when `norm_leak` exceeds the tolerance.
    pub leak_warning: bool,
}

pub fn apply_sequence(seq: &GateSequence, state: &TruncatedState) -> Result<Evolved> {
    apply_sequence_with_tolerance(seq, state, LEAK_TOLERANCE)
}

pub fn apply_sequence_with_tolerance(
    seq: &GateSequence,
    state: &TruncatedState,
    leak_tolerance: f64,
) -> Result<Evolved> {
    check_same(seq.cutoff, state.cutoff())?;
    let mut psi: Vec<C64> = state.amplitudes().iter().copied().collect();
    for g in &seq.gates {
        g.apply_in_place(&mut psi);
    }
    let out = TruncatedState::from_raw(DVector::from_vec(psi), seq.cutoff);
    let norm_leak = state.norm() - out.norm();
    Ok(Evolved {
        state: out,
        norm_leak,
        leak_warning: norm_leak > leak_tolerance,
    })
}

/// `G_{k-1} ⋯ G_0` as a dense matrix.
pub fn sequence_unitary(seq: &GateSequence) -> Operator {
    let mut u = Operator::identity(seq.cutoff);
    for g in &seq.gates {
        let op = g
            .operator(seq.cutoff)
            .expect("gates are validated on insertion");
        u = &op * &u;
    }
    u
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum GateWire {
    Displacement { alpha: [f64; 2] },
    Snap { phases: Vec<f64> },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceWire {
    cutoff: usize,
    gates: Vec<GateWire>,
}

impl From<GateSequence> for SequenceWire {
    fn from(seq: GateSequence) -> Self {
        SequenceWire {
            cutoff: seq.cutoff.get(),
            gates: seq
                .gates
                .into_iter()
                .map(|g| match g {
                    Gate::Displacement { alpha } => GateWire::Displacement {
                        alpha: [alpha.re, alpha.im],
                    },
                    Gate::Snap { phases } => GateWire::Snap { phases },
                })
                .collect(),
        }
    }
}

impl TryFrom<SequenceWire> for GateSequence {
    type Error = Error;

    fn try_from(wire: SequenceWire) -> Result<Self> {
        let cutoff = CutoffDim::new(wire.cutoff)?;
        let gates = wire
            .gates
            .into_iter()
            .map(|g| match g {
                GateWire::Displacement { alpha } => Gate::displacement(C64::new(alpha[0], alpha[1])),
                GateWire::Snap { phases } => Gate::snap(phases),
            })
            .collect();
        GateSequence::new(cutoff, gates)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{displacement_operator, state_fidelity};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn nc(n: usize) -> CutoffDim {
        CutoffDim::new(n).unwrap()
    }

    #[test]
    fn empty_sequence_is_identity() {
        let c = nc(6);
        let seq = GateSequence::empty(c);
        assert_eq!(sequence_unitary(&seq), Operator::identity(c));
        let psi = TruncatedState::fock(3, c).unwrap();
        let out = apply_sequence(&seq, &psi).unwrap();
        assert_eq!(out.state, psi);
        assert!(!out.leak_warning);
    }

    #[test]
    fn single_snap_unitary_is_diagonal() {
        let c = nc(4);
        let seq = GateSequence::new(c, vec![Gate::snap([0.1, -0.4, 2.0])]).unwrap();
        let u = sequence_unitary(&seq);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(u.matrix()[(i, j)], C64::new(0.0, 0.0));
                }
            }
        }
        assert!((u.matrix()[(1, 1)] - C64::from_polar(1.0, -0.4)).norm() < 1e-15);
    }

    #[test]
    fn displacement_round_trip_returns_to_vacuum() {
        let alpha = C64::new(1.1, -0.4);
        let c = nc((8.0 * alpha.norm_sqr()).ceil() as usize + 20);
        let seq = GateSequence::new(c, vec![Gate::displacement(alpha), Gate::displacement(-alpha)])
            .unwrap();
        let vac = TruncatedState::vacuum(c);
        let out = apply_sequence(&seq, &vac).unwrap();
        for (a, b) in out.state.amplitudes().iter().zip(vac.amplitudes().iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn application_order_is_index_zero_first() {
        let c = nc(20);
        // D(0.5) then R_0(π): not commuting, so order is observable.
        let seq = GateSequence::new(c, vec![Gate::real_displacement(0.5), Gate::pi_snap(0)]).unwrap();
        let expected = &crate::fock::r_gate(0, PI, c).unwrap()
            * &displacement_operator(C64::new(0.5, 0.0), c).unwrap();
        assert!(sequence_unitary(&seq).max_abs_diff(&expected, 20) < 1e-14);
    }

    #[test]
    fn drdrd_unitary_matches_stepwise_application() {
        let c = nc(24);
        let seq = GateSequence::new(
            c,
            vec![
                Gate::real_displacement(-0.575),
                Gate::pi_snap(0),
                Gate::real_displacement(0.682),
                Gate::pi_snap(0),
                Gate::real_displacement(-0.371),
            ],
        )
        .unwrap();
        let u = sequence_unitary(&seq);
        for n in 0..24 {
            let basis = TruncatedState::fock(n, c).unwrap();
            let stepwise = apply_sequence(&seq, &basis).unwrap().state;
            for m in 0..24 {
                assert!((u.matrix()[(m, n)] - stepwise.amplitudes()[m]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn apply_rejects_cutoff_mismatch() {
        let seq = GateSequence::empty(nc(5));
        assert!(apply_sequence(&seq, &TruncatedState::vacuum(nc(6))).is_err());
    }

    #[test]
    fn snap_conjugated_real_displacement_is_coherent_state() {
        let c = nc(40);
        let (r, phi) = (1.3, -2.2);
        let theta: Vec<f64> = (0..40).map(|n| n as f64 * phi).collect();
        let neg: Vec<f64> = theta.iter().map(|t| -t).collect();
        let alpha = C64::from_polar(r, phi);
        let vac = TruncatedState::vacuum(c);

        // S(θ) D(r) S(−θ) as an operator product: S(−θ) acts first.
        let seq = GateSequence::new(
            c,
            vec![Gate::snap(neg.clone()), Gate::real_displacement(r), Gate::snap(theta.clone())],
        )
        .unwrap();
        let out = apply_sequence(&seq, &vac).unwrap().state;
        let mut expected = C64::new((-r * r / 2.0).exp(), 0.0);
        for n in 0..30 {
            assert!((out.amplitudes()[n] - expected).norm() < 1e-8, "n={n}");
            expected *= alpha / ((n + 1) as f64).sqrt();
        }

        // Listing the same gates in product order mirrors the phase: |α*⟩.
        let mirrored = GateSequence::new(
            c,
            vec![Gate::snap(theta), Gate::real_displacement(r), Gate::snap(neg)],
        )
        .unwrap();
        let out = apply_sequence(&mirrored, &vac).unwrap().state;
        let conj = displacement_operator(alpha.conj(), c).unwrap().apply(&vac).unwrap();
        assert!((state_fidelity(&out, &conj).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn simplify_merges_and_drops() {
        let c = nc(6);
        let seq = GateSequence::new(
            c,
            vec![
                Gate::real_displacement(0.2),
                Gate::real_displacement(0.3),
                Gate::pi_snap(1),
                Gate::pi_snap(1),
                Gate::real_displacement(0.0),
                Gate::real_displacement(-0.1),
            ],
        )
        .unwrap();
        let s = seq.simplified();
        assert_eq!(s.len(), 1);
        assert!((sequence_unitary(&s).max_abs_diff(&sequence_unitary(&seq), 6)) < 1e-13);
    }

    #[test]
    fn json_wire_format_shape() {
        let c = nc(3);
        let seq = GateSequence::new(
            c,
            vec![Gate::displacement(C64::new(0.5, -0.25)), Gate::snap([0.0, 1.0])],
        )
        .unwrap();
        let text = seq.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["cutoff"], 3);
        assert_eq!(v["gates"][0]["type"], "displacement");
        assert_eq!(v["gates"][0]["alpha"][1].as_f64(), Some(-0.25));
        assert_eq!(v["gates"][1]["type"], "snap");
        assert!(text.contains("5.0000000000000000e-1"));
        assert!(GateSequence::from_json(r#"{"cutoff":3,"gates":[{"type":"squeeze"}]}"#).is_err());
        assert!(GateSequence::from_json(r#"{"cutoff":1,"gates":[]}"#).is_err());
        assert!(
            GateSequence::from_json(r#"{"cutoff":2,"gates":[{"type":"snap","phases":[0,0,0]}]}"#)
                .is_err()
        );
    }

    fn arb_gate(nc: usize) -> impl Strategy<Value = Gate> {
        prop_oneof![
            (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(re, im)| Gate::displacement(C64::new(re, im))),
            prop::collection::vec(-20.0f64..20.0, 0..=nc).prop_map(Gate::snap),
        ]
    }

    proptest! {
        #[test]
        fn json_round_trip_is_lossless(gates in prop::collection::vec(arb_gate(7), 0..12)) {
            let seq = GateSequence::new(nc(7), gates).unwrap();
            let text = seq.to_json().unwrap();
            let back = GateSequence::from_json(&text).unwrap();
            prop_assert_eq!(&back, &seq);
            prop_assert_eq!(back.to_json().unwrap(), text);
        }

        #[test]
        fn snap_preserves_level_populations(
            phases in prop::collection::vec(-10.0f64..10.0, 1..=9),
            amps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 9),
        ) {
            let c = nc(9);
            let raw: Vec<C64> = amps.iter().map(|&(a, b)| C64::new(a, b)).collect();
            let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            prop_assume!(norm > 1e-3);
            let raw: Vec<C64> = raw.iter().map(|z| z / norm).collect();
            let psi = TruncatedState::from_amplitudes(&raw, c).unwrap();
            let seq = GateSequence::new(c, vec![Gate::snap(phases)]).unwrap();
            let out = apply_sequence(&seq, &psi).unwrap().state;
            for n in 0..9 {
                prop_assert!((out.amplitudes()[n].norm() - psi.amplitudes()[n].norm()).abs() < 1e-14);
            }
        }
    }
}
