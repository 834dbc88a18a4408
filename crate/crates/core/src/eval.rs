//! Bit-parallel evaluation over the full random space.
//!
//! A circuit with `|r|` random inputs has `2^|r|` random assignments.
//! [`LaneEvaluator`] evaluates all of them at once, one assignment per
//! bit lane, packed 64 to a word. Everything downstream (distribution
//! counting, IO-equivalence, the synthesis backends) runs on these
//! lanes.

use thiserror::Error;

use crate::circuit::{Circuit, Def, Op, WireId};

const LOW_PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Values of every wire across all random assignments of one circuit,
/// under fixed public and secret inputs.
pub struct WireLanes {
    words: usize,
    lane_count: u64,
    tail_mask: u64,
    data: Vec<u64>,
}

impl WireLanes {
    pub fn wire(&self, w: WireId) -> &[u64] {
        &self.data[w.index() * self.words..(w.index() + 1) * self.words]
    }

    pub fn lane_count(&self) -> u64 {
        self.lane_count
    }

    /// Count, for each value vector of the selected wires, how many
    /// random assignments produce it. Index `v` has bit `i` set when
    /// `sel[i]` is 1.
    pub fn count_patterns(&self, sel: &[WireId]) -> Vec<u64> {
        let mut counts = vec![0u64; 1 << sel.len()];
        if sel.is_empty() {
            counts[0] = self.lane_count;
            return counts;
        }
        let cols: Vec<&[u64]> = sel.iter().map(|w| self.wire(*w)).collect();
        for v in 0..counts.len() {
            let mut total = 0u64;
            for word in 0..self.words {
                let mut m = if word + 1 == self.words { self.tail_mask } else { !0u64 };
                for (i, col) in cols.iter().enumerate() {
                    let bits = col[word];
                    m &= if v >> i & 1 == 1 { bits } else { !bits };
                }
                total += m.count_ones() as u64;
            }
            counts[v] = total;
        }
        counts
    }

    /// True when the wire has the same value on every lane; returns it.
    pub fn constant_value(&self, w: WireId) -> Option<bool> {
        let col = self.wire(w);
        let all_one = col
            .iter()
            .enumerate()
            .all(|(i, &x)| x | !self.mask(i) == !0u64);
        if all_one {
            return Some(true);
        }
        let all_zero = col.iter().enumerate().all(|(i, &x)| x & self.mask(i) == 0);
        if all_zero {
            return Some(false);
        }
        None
    }

    /// First lane where the wire differs from `expect`, as random bits.
    pub fn first_mismatch(&self, w: WireId, expect: bool, random_count: usize) -> Option<Vec<bool>> {
        let col = self.wire(w);
        for (i, &x) in col.iter().enumerate() {
            let bad = (if expect { !x } else { x }) & self.mask(i);
            if bad != 0 {
                let lane = (i as u64) * 64 + bad.trailing_zeros() as u64;
                return Some((0..random_count).map(|j| lane >> j & 1 == 1).collect());
            }
        }
        None
    }

    fn mask(&self, word: usize) -> u64 {
        if word + 1 == self.words {
            self.tail_mask
        } else {
            !0u64
        }
    }
}

/// Evaluates a circuit across its whole random space.
pub struct LaneEvaluator<'c> {
    circuit: &'c Circuit,
    words: usize,
    lane_count: u64,
    tail_mask: u64,
}

impl<'c> LaneEvaluator<'c> {
    /// Random spaces larger than this many assignments are refused.
    pub const MAX_RANDOM_BITS: usize = 28;

    pub fn new(circuit: &'c Circuit) -> Result<Self, EvalSpaceError> {
        let r = circuit.randoms().len();
        if r > Self::MAX_RANDOM_BITS {
            return Err(EvalSpaceError { random_count: r });
        }
        let lane_count = 1u64 << r;
        let words = lane_count.div_ceil(64).max(1) as usize;
        let tail_mask = if r >= 6 { !0u64 } else { (1u64 << lane_count) - 1 };
        Ok(LaneEvaluator {
            circuit,
            words,
            lane_count,
            tail_mask,
        })
    }

    pub fn lane_count(&self) -> u64 {
        self.lane_count
    }

    /// Lane index built from random bits: random `j` contributes bit
    /// `j` of the lane index.
    fn random_word(&self, j: usize, word: usize) -> u64 {
        if j < 6 {
            LOW_PATTERNS[j]
        } else if (word >> (j - 6)) & 1 == 1 {
            !0u64
        } else {
            0u64
        }
    }

    /// Evaluate all wires under the given public/secret bits, in
    /// declaration order.
    pub fn eval(&self, public_bits: &[bool], secret_bits: &[bool]) -> WireLanes {
        let c = self.circuit;
        assert_eq!(public_bits.len(), c.publics().len());
        assert_eq!(secret_bits.len(), c.secrets().len());
        let words = self.words;
        let mut data = vec![0u64; c.wire_count() * words];
        let broadcast = |bit: bool| if bit { !0u64 } else { 0u64 };

        for (i, p) in c.publics().iter().enumerate() {
            data[p.index() * words..(p.index() + 1) * words].fill(broadcast(public_bits[i]));
        }
        for (i, k) in c.secrets().iter().enumerate() {
            data[k.index() * words..(k.index() + 1) * words].fill(broadcast(secret_bits[i]));
        }
        for (j, r) in c.randoms().iter().enumerate() {
            for w in 0..words {
                data[r.index() * words + w] = self.random_word(j, w);
            }
        }

        for i in 0..c.wire_count() {
            match c.def(WireId(i as u32)) {
                Def::Input => {}
                Def::Share { encoder, index } => {
                    let e = &c.encoders()[encoder];
                    if index < e.randoms.len() {
                        let src = e.randoms[index].index();
                        for w in 0..words {
                            data[i * words + w] = data[src * words + w];
                        }
                    } else {
                        let k = e.secret.index();
                        for w in 0..words {
                            let mut v = data[k * words + w];
                            for r in &e.randoms {
                                v ^= data[r.index() * words + w];
                            }
                            data[i * words + w] = v;
                        }
                    }
                }
                Def::Gate { gate } => {
                    let g = &c.gates()[gate];
                    let a = g.inputs.first().map(|x| x.index());
                    let b = g.inputs.get(1).map(|x| x.index());
                    for w in 0..words {
                        let av = a.map(|x| data[x * words + w]).unwrap_or(0);
                        let bv = b.map(|x| data[x * words + w]).unwrap_or(0);
                        data[i * words + w] = match g.op {
                            Op::Xor => av ^ bv,
                            Op::And => av & bv,
                            Op::Or => av | bv,
                            Op::Not => !av,
                            Op::Pass => av,
                            Op::Const0 => 0,
                            Op::Const1 => !0u64,
                        };
                    }
                }
                Def::Decoded { decoder } => {
                    let d = &c.decoders()[decoder];
                    for w in 0..words {
                        let mut v = 0u64;
                        for input in &d.inputs {
                            v ^= data[input.index() * words + w];
                        }
                        data[i * words + w] = v;
                    }
                }
            }
        }
        WireLanes {
            words,
            lane_count: self.lane_count,
            tail_mask: self.tail_mask,
            data,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("random space 2^{random_count} exceeds the evaluator limit")]
pub struct EvalSpaceError {
    pub random_count: usize,
}

/// Enumerate bit vectors of the given length in lexicographic order
/// (first position most significant).
pub(crate) fn bit_vectors(len: usize) -> impl Iterator<Item = Vec<bool>> {
    (0..1u64 << len).map(move |v| (0..len).map(|i| v >> (len - 1 - i) & 1 == 1).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IoVerdict {
    Equivalent,
    NotEquivalent(IoCounterexample),
}

impl IoVerdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, IoVerdict::Equivalent)
    }
}

/// Witness that two circuits disagree: the full input valuation and
/// the first output where they differ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IoCounterexample {
    pub public_bits: Vec<bool>,
    pub secret_bits: Vec<bool>,
    pub random_bits: Vec<bool>,
    pub output_index: usize,
    pub expected: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IoError {
    #[error("reference circuit must be random-free")]
    ReferenceNotRandomFree,
    #[error("input signatures differ: reference {reference}, candidate {candidate}")]
    SignatureMismatch {
        reference: String,
        candidate: String,
    },
    #[error("output counts differ: reference {0}, candidate {1}")]
    OutputMismatch(usize, usize),
    #[error("IO check needs {cost} evaluations, over the cap {cap}")]
    Infeasible { cost: u128, cap: u128 },
    #[error(transparent)]
    Space(#[from] EvalSpaceError),
}

pub const DEFAULT_COST_CAP: u64 = 1 << 24;

/// Exhaustively compare a random-free reference against a candidate:
/// for every public, secret, and random valuation the candidate's
/// decoded outputs must equal the reference outputs. Inputs are
/// matched positionally in declaration order.
pub fn io_equivalent(reference: &Circuit, candidate: &Circuit, cap: u64) -> Result<IoVerdict, IoError> {
    if !reference.is_random_free() {
        return Err(IoError::ReferenceNotRandomFree);
    }
    if reference.publics().len() != candidate.publics().len()
        || reference.secrets().len() != candidate.secrets().len()
    {
        return Err(IoError::SignatureMismatch {
            reference: format!(
                "{} publics / {} secrets",
                reference.publics().len(),
                reference.secrets().len()
            ),
            candidate: format!(
                "{} publics / {} secrets",
                candidate.publics().len(),
                candidate.secrets().len()
            ),
        });
    }
    if reference.outputs().len() != candidate.outputs().len() {
        return Err(IoError::OutputMismatch(
            reference.outputs().len(),
            candidate.outputs().len(),
        ));
    }
    let p = reference.publics().len();
    let k = reference.secrets().len();
    let r = candidate.randoms().len();
    let cost = (1u128 << (p + k)) << r;
    if cost > cap as u128 {
        return Err(IoError::Infeasible {
            cost,
            cap: cap as u128,
        });
    }
    let lanes = LaneEvaluator::new(candidate)?;
    for public_bits in bit_vectors(p) {
        for secret_bits in bit_vectors(k) {
            let mut nu = crate::circuit::Assignment::new();
            for (w, b) in reference.publics().iter().zip(&public_bits) {
                nu.set(*w, *b);
            }
            for (w, b) in reference.secrets().iter().zip(&secret_bits) {
                nu.set(*w, *b);
            }
            let expected = reference
                .evaluate_outputs(&nu)
                .expect("total assignment for random-free reference");
            let got = lanes.eval(&public_bits, &secret_bits);
            for (oi, out) in candidate.outputs().iter().enumerate() {
                if let Some(random_bits) = got.first_mismatch(*out, expected[oi], r) {
                    return Ok(IoVerdict::NotEquivalent(IoCounterexample {
                        public_bits,
                        secret_bits,
                        random_bits,
                        output_index: oi,
                        expected: expected[oi],
                    }));
                }
            }
        }
    }
    Ok(IoVerdict::Equivalent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitBuilder;
    use crate::fixtures;

    #[test]
    fn lanes_match_scalar_evaluation() {
        let c = fixtures::masked_example();
        let ev = LaneEvaluator::new(&c).unwrap();
        let lanes = ev.eval(&[true, false], &[true, true]);
        for lane in 0..16u64 {
            let mut nu = crate::circuit::Assignment::new();
            nu.set(c.wire("p1").unwrap(), true);
            nu.set(c.wire("p2").unwrap(), false);
            nu.set(c.wire("k1").unwrap(), true);
            nu.set(c.wire("k2").unwrap(), true);
            for (j, r) in c.randoms().iter().enumerate() {
                nu.set(*r, lane >> j & 1 == 1);
            }
            let scalar = c.evaluate_all(&nu).unwrap();
            for w in 0..c.wire_count() {
                let word = lanes.wire(WireId(w as u32))[(lane / 64) as usize];
                assert_eq!(word >> (lane % 64) & 1 == 1, scalar[w], "wire {w} lane {lane}");
            }
        }
    }

    #[test]
    fn masked_and_reference_examples_are_io_equivalent() {
        let reference = fixtures::reference_example();
        let masked = fixtures::masked_example();
        assert!(io_equivalent(&reference, &masked, DEFAULT_COST_CAP)
            .unwrap()
            .is_equivalent());
    }

    #[test]
    fn io_equivalence_is_reflexive_on_random_free_circuits() {
        let c = fixtures::reference_example();
        assert!(io_equivalent(&c, &c, DEFAULT_COST_CAP).unwrap().is_equivalent());
    }

    #[test]
    fn dropping_a_decoder_input_breaks_equivalence() {
        let reference = fixtures::reference_example();
        let text = crate::netlist::serialize(&fixtures::masked_example())
            .replace("decode o1 = a9 a10 a12", "decode o1 = a9 a10");
        let broken = crate::netlist::parse(&text).unwrap();
        match io_equivalent(&reference, &broken, DEFAULT_COST_CAP).unwrap() {
            IoVerdict::NotEquivalent(cex) => {
                assert_eq!(cex.output_index, 0);
                // Witness replays to an actual mismatch.
                let mut nu = crate::circuit::Assignment::new();
                for (w, b) in broken.publics().iter().zip(&cex.public_bits) {
                    nu.set(*w, *b);
                }
                for (w, b) in broken.secrets().iter().zip(&cex.secret_bits) {
                    nu.set(*w, *b);
                }
                for (w, b) in broken.randoms().iter().zip(&cex.random_bits) {
                    nu.set(*w, *b);
                }
                let out = broken.evaluate_outputs(&nu).unwrap();
                assert_ne!(out[0], cex.expected);
            }
            v => panic!("expected a counterexample, got {v:?}"),
        }
    }

    #[test]
    fn signature_mismatch_is_an_error() {
        let reference = fixtures::reference_example();
        let mut b = CircuitBuilder::new("tiny");
        b.public("p").unwrap();
        b.gate("t", crate::circuit::Op::Pass, &["p"]).unwrap();
        b.output("t").unwrap();
        let tiny = b.finish().unwrap();
        assert!(matches!(
            io_equivalent(&reference, &tiny, DEFAULT_COST_CAP),
            Err(IoError::SignatureMismatch { .. })
        ));
    }

    #[test]
    fn bit_vectors_are_lexicographic() {
        let all: Vec<Vec<bool>> = bit_vectors(2).collect();
        assert_eq!(
            all,
            vec![
                vec![false, false],
                vec![false, true],
                vec![true, false],
                vec![true, true]
            ]
        );
    }
}
