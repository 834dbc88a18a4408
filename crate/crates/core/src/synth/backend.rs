//! Candidate-finding backends.
//!
//! A backend answers one question: does any control assignment satisfy
//! the constraints restricted to the current test set, with adversary
//! selections drawn from the root-most `gamma` nodes? The built-in
//! exhaustive backend enumerates the control space directly and is
//! authoritative at desk scale; the external solver backend lives in
//! the sibling module. Which backend runs is configuration, never
//! semantics.

use std::time::Instant;

use crate::synth::{
    ControlAssignment, LeafChoice, SearchProblem, Skeleton, SlotKind, SynthError, INTERNAL_OPS,
};

#[derive(Debug)]
pub enum FindOutcome {
    Solution(ControlAssignment),
    NoSolution,
}

pub trait CandidateBackend {
    fn find(&mut self, problem: &SearchProblem<'_>) -> Result<FindOutcome, SynthError>;
    fn name(&self) -> &'static str;
}

/// Lane-level evaluator for the restricted constraints; shared by the
/// exhaustive backend and the CEGAR progress check.
pub struct RestrictedChecker {
    slots: Vec<SlotInfo>,
    trees: usize,
    words: usize,
    tail_mask: u64,
    lane_count: u64,
    /// Per point, per leaf-menu entry, the value lanes.
    menu_lanes: Vec<Vec<Vec<u64>>>,
    /// Per point, per share (rank order), the value lanes.
    share_lanes: Vec<Vec<Vec<u64>>>,
    /// (point, expected output bit) rows of the IO constraint.
    io_points: Vec<(usize, bool)>,
    /// (point, point_alt) pairs of the security constraint.
    lr_pairs: Vec<(usize, usize)>,
    /// Selections over root-most ranks, grouped with matching node
    /// valuations from the test set.
    lr_selections: Vec<(Vec<usize>, Vec<u64>)>,
    point_count: usize,
}

#[derive(Clone, Copy)]
enum SlotInfo {
    Internal(usize, usize),
    Leaf,
}

impl RestrictedChecker {
    pub fn new(problem: &SearchProblem<'_>) -> RestrictedChecker {
        let sk = problem.skeleton;
        let r = sk.random_bits();
        assert!(r <= 24, "restricted constraint space too large");
        let lane_count = 1u64 << r;
        let words = lane_count.div_ceil(64).max(1) as usize;
        let tail_mask = if r >= 6 { !0u64 } else { (1u64 << lane_count) - 1 };

        let slots: Vec<SlotInfo> = sk
            .slots()
            .iter()
            .map(|s| match s.kind {
                SlotKind::Internal => {
                    let (l, r) = s.children.unwrap();
                    SlotInfo::Internal(l, r)
                }
                SlotKind::Leaf => SlotInfo::Leaf,
            })
            .collect();

        // Points: all (public, secret) rows used by either constraint.
        let publics: Vec<Vec<bool>> = problem.tset.publics.iter().cloned().collect();
        let secrets: Vec<Vec<bool>> = problem.tset.secrets.iter().cloned().collect();
        let point_of = |pi: usize, ki: usize| pi * secrets.len() + ki;
        let point_count = publics.len() * secrets.len();

        let random_word = |j: usize, word: usize| -> u64 {
            const LOW: [u64; 6] = [
                0xAAAA_AAAA_AAAA_AAAA,
                0xCCCC_CCCC_CCCC_CCCC,
                0xF0F0_F0F0_F0F0_F0F0,
                0xFF00_FF00_FF00_FF00,
                0xFFFF_0000_FFFF_0000,
                0xFFFF_FFFF_0000_0000,
            ];
            if j < 6 {
                LOW[j]
            } else if (word >> (j - 6)) & 1 == 1 {
                !0u64
            } else {
                0
            }
        };
        let broadcast = |b: bool| if b { !0u64 } else { 0u64 };
        let menu = sk.leaf_menu();
        let width = sk.share_width();
        let order = sk.order();

        let mut menu_lanes = Vec::with_capacity(point_count);
        let mut share_lanes = Vec::with_capacity(point_count);
        for pb in &publics {
            for kb in &secrets {
                // Shares, secret-major: lane bits 0.. are the encoder
                // randoms, then the extra randoms.
                let mut shares: Vec<Vec<u64>> = Vec::with_capacity(sk.secrets().len() * width);
                for (si, _) in sk.secrets().iter().enumerate() {
                    for idx in 0..width {
                        let mut lanes = vec![0u64; words];
                        for (w, lane) in lanes.iter_mut().enumerate() {
                            *lane = if idx < order {
                                random_word(si * order + idx, w)
                            } else {
                                let mut v = broadcast(kb[si]);
                                for j in 0..order {
                                    v ^= random_word(si * order + j, w);
                                }
                                v
                            };
                        }
                        shares.push(lanes);
                    }
                }
                let mut entries: Vec<Vec<u64>> = Vec::with_capacity(menu.len());
                for m in &menu {
                    let lanes: Vec<u64> = match m {
                        LeafChoice::Const0 => vec![0u64; words],
                        LeafChoice::Const1 => vec![!0u64; words],
                        LeafChoice::Public(p) => vec![broadcast(pb[*p]); words],
                        LeafChoice::ExtraRandom(x) => (0..words)
                            .map(|w| random_word(sk.secrets().len() * order + x, w))
                            .collect(),
                        LeafChoice::Share { secret, index } => {
                            shares[secret * width + index].clone()
                        }
                    };
                    entries.push(lanes);
                }
                menu_lanes.push(entries);
                share_lanes.push(shares);
            }
        }

        // IO rows: expected reference output per point.
        let mut io_points = Vec::new();
        for (pi, pb) in publics.iter().enumerate() {
            for (ki, kb) in secrets.iter().enumerate() {
                let mut nu = crate::circuit::Assignment::new();
                for (w, b) in problem.reference.publics().iter().zip(pb) {
                    nu.set(*w, *b);
                }
                for (w, b) in problem.reference.secrets().iter().zip(kb) {
                    nu.set(*w, *b);
                }
                let out = problem
                    .reference
                    .evaluate_outputs(&nu)
                    .expect("reference assignment is total")[0];
                io_points.push((point_of(pi, ki), out));
            }
        }

        // Security rows: secret pairs under each public row.
        let mut lr_pairs = Vec::new();
        for pi in 0..publics.len() {
            for ki in 0..secrets.len() {
                for kj in ki + 1..secrets.len() {
                    lr_pairs.push((point_of(pi, ki), point_of(pi, kj)));
                }
            }
        }

        // Selections from the root-most gamma ranks, one entry per
        // matching node valuation.
        let gamma = problem.tset.gamma.min(sk.node_count());
        let mut lr_selections = Vec::new();
        if !lr_pairs.is_empty() {
            for size in 1..=order.min(gamma) {
                let mut values: Vec<u64> = Vec::new();
                for v in &problem.tset.node_values {
                    if v.len() == size {
                        values.push(
                            v.iter()
                                .enumerate()
                                .fold(0u64, |acc, (i, b)| acc | (u64::from(*b) << i)),
                        );
                    }
                }
                if values.is_empty() {
                    continue;
                }
                for combo in combinations(gamma, size) {
                    lr_selections.push((combo, values.clone()));
                }
            }
        }

        RestrictedChecker {
            slots,
            trees: width,
            words,
            tail_mask,
            lane_count,
            menu_lanes,
            share_lanes,
            io_points,
            lr_pairs,
            lr_selections,
            point_count,
        }
    }

    pub fn lane_count(&self) -> u64 {
        self.lane_count
    }

    fn mask(&self, word: usize) -> u64 {
        if word + 1 == self.words {
            self.tail_mask
        } else {
            !0u64
        }
    }

    fn eval_slots(&self, point: usize, ctrl: &ControlAssignment, out: &mut [u64]) {
        let words = self.words;
        for i in (0..self.slots.len()).rev() {
            match self.slots[i] {
                SlotInfo::Leaf => {
                    let lanes = &self.menu_lanes[point][ctrl.0[i] as usize];
                    out[i * words..(i + 1) * words].copy_from_slice(lanes);
                }
                SlotInfo::Internal(l, r) => {
                    let op = INTERNAL_OPS[ctrl.0[i] as usize];
                    for w in 0..words {
                        let a = out[l * words + w];
                        let b = out[r * words + w];
                        out[i * words + w] = match op {
                            crate::circuit::Op::Xor => a ^ b,
                            crate::circuit::Op::And => a & b,
                            _ => a | b,
                        };
                    }
                }
            }
        }
    }

    /// Does the candidate satisfy the restricted constraints?
    pub fn accepts(&self, ctrl: &ControlAssignment) -> bool {
        let words = self.words;
        let mut scratch = vec![0u64; self.slots.len() * words];
        let mut cache: Vec<Option<Vec<u64>>> = vec![None; self.point_count];

        // IO first: it kills most candidates on the first row.
        for (point, expected) in &self.io_points {
            self.eval_slots(*point, ctrl, &mut scratch);
            for w in 0..words {
                let mut decode = 0u64;
                for t in 0..self.trees {
                    decode ^= scratch[t * words + w];
                }
                let want = if *expected { self.mask(w) } else { 0 };
                if decode & self.mask(w) != want {
                    return false;
                }
            }
            if cache[*point].is_none() {
                cache[*point] = Some(scratch.clone());
            }
        }

        if self.lr_selections.is_empty() {
            return true;
        }
        for (pa, pb) in &self.lr_pairs {
            for p in [*pa, *pb] {
                if cache[p].is_none() {
                    self.eval_slots(p, ctrl, &mut scratch);
                    cache[p] = Some(scratch.clone());
                }
            }
            let la = cache[*pa].as_ref().unwrap();
            let lb = cache[*pb].as_ref().unwrap();
            for (sel, values) in &self.lr_selections {
                for v in values {
                    if self.count_matches(la, *pa, sel, *v)
                        != self.count_matches(lb, *pb, sel, *v)
                    {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn count_matches(&self, slot_lanes: &[u64], point: usize, sel: &[usize], v: u64) -> u64 {
        let words = self.words;
        let mut total = 0u64;
        for w in 0..words {
            let mut m = self.mask(w);
            for (i, rank) in sel.iter().enumerate() {
                let bits = if *rank < self.slots.len() {
                    slot_lanes[*rank * words + w]
                } else {
                    self.share_lanes[point][*rank - self.slots.len()][w]
                };
                m &= if v >> i & 1 == 1 { bits } else { !bits };
            }
            total += m.count_ones() as u64;
        }
        total
    }
}

pub(crate) fn combinations(m: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if size > m {
        return out;
    }
    let mut current: Vec<usize> = (0..size).collect();
    loop {
        out.push(current.clone());
        let mut i = size;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if current[i] + (size - i) < m {
                current[i] += 1;
                for j in i + 1..size {
                    current[j] = current[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Enumerates control assignments in lexicographic order: control
/// variables root-first, XOR before AND before OR, constants before
/// inputs before shares. Authoritative: a no-solution answer is a
/// proof of exhaustion.
#[derive(Default)]
pub struct ExhaustiveBackend {
    _private: (),
}

impl ExhaustiveBackend {
    pub fn new() -> Self {
        ExhaustiveBackend::default()
    }
}

const DEADLINE_STRIDE: usize = 4096;

impl CandidateBackend for ExhaustiveBackend {
    fn find(&mut self, problem: &SearchProblem<'_>) -> Result<FindOutcome, SynthError> {
        let sk: &Skeleton = problem.skeleton;
        let checker = RestrictedChecker::new(problem);
        let radices: Vec<usize> = (0..sk.slots().len()).map(|i| sk.menu_size(i)).collect();
        let mut ctrl = ControlAssignment::first(sk);
        let mut since_check = 0usize;
        loop {
            since_check += 1;
            if since_check >= DEADLINE_STRIDE {
                since_check = 0;
                if let Some(d) = problem.deadline {
                    if Instant::now() >= d {
                        return Err(SynthError::Timeout {
                            max_height: sk.height(),
                        });
                    }
                }
            }
            if checker.accepts(&ctrl) {
                return Ok(FindOutcome::Solution(ctrl));
            }
            // Advance the odometer, last slot fastest.
            let mut i = ctrl.0.len();
            loop {
                if i == 0 {
                    return Ok(FindOutcome::NoSolution);
                }
                i -= 1;
                if (ctrl.0[i] as usize) + 1 < radices[i] {
                    ctrl.0[i] += 1;
                    break;
                }
                ctrl.0[i] = 0;
            }
        }
    }

    fn name(&self) -> &'static str {
        "exhaustive"
    }
}
