//! Constraint-based synthesis of masked circuit trees.
//!
//! Given a random-free single-output circuit, the synthesizer searches
//! skeletons of increasing height for a control assignment whose
//! instance is IO-equivalent to the input and withstands `n` probes.
//! A skeleton has one undetermined binary tree per split output;
//! internal slots pick a gate (XOR, AND, OR), leaf slots pick a source
//! (constant, public, extra random, or one share of one secret), and
//! the encoders and the decoding XOR fold are fixed.
//!
//! Solving works candidate-by-candidate: a backend finds control
//! assignments satisfying the constraints restricted to a growing test
//! set (with adversary selections limited to the root-most `gamma`
//! nodes), and the checker validates candidates against the real
//! conditions, feeding failures back into the test set. Everything the
//! loop returns has passed the full equivalence and security checks.

mod backend;
mod smtlib;

pub use backend::{CandidateBackend, ExhaustiveBackend, FindOutcome, RestrictedChecker};
pub use smtlib::SmtLibBackend;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::circuit::{Circuit, CircuitBuilder, Op, WireId};
use crate::eval::{io_equivalent, IoError, IoVerdict};
use crate::verify::{verify, Verdict, VerifyError, VerifyOptions};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("synthesis input must be random-free")]
    NotRandomFree,
    #[error("synthesis input must have exactly one output, found {0}")]
    MultiOutput(usize),
    #[error("timed out; largest skeleton height attempted: {max_height}")]
    Timeout { max_height: usize },
    #[error("no instance up to skeleton height {max_height} satisfies the spec")]
    HeightExceeded { max_height: usize },
    #[error("candidate loop exceeded {0} iterations")]
    IterationLimit(usize),
    #[error("solver backend failed: {0}")]
    Backend(String),
    #[error("candidate verification infeasible: {0}")]
    Verify(#[from] VerifyError),
    #[error("candidate equivalence check failed: {0}")]
    Io(#[from] IoError),
}

/// What a leaf slot may select.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafChoice {
    Const0,
    Const1,
    Public(usize),
    ExtraRandom(usize),
    Share { secret: usize, index: usize },
}

pub const INTERNAL_OPS: [Op; 3] = [Op::Xor, Op::And, Op::Or];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    Internal,
    Leaf,
}

#[derive(Debug, Clone, Copy)]
pub struct Slot {
    pub kind: SlotKind,
    pub tree: usize,
    pub depth: usize,
    /// Children slot indices for internal slots.
    pub children: Option<(usize, usize)>,
}

/// Tree-shaped search space for one synthesis problem. Slots are
/// stored root-most first: all depth-0 slots (the tree roots), then
/// depth 1, and so on; encoder shares rank after every slot.
#[derive(Debug, Clone)]
pub struct Skeleton {
    order: usize,
    height: usize,
    public_names: Vec<String>,
    secret_names: Vec<String>,
    extra_randoms: usize,
    slots: Vec<Slot>,
}

impl Skeleton {
    /// `height` counts node levels per split-output tree: height 1 is
    /// a single leaf slot, height 2 a gate over two leaves.
    pub fn build(reference: &Circuit, order: usize, height: usize, extra_randoms: usize) -> Skeleton {
        assert!(height >= 1);
        let trees = order + 1;
        let mut slots = Vec::new();
        for depth in 0..height {
            let row = 1usize << depth;
            for tree in 0..trees {
                for pos in 0..row {
                    let kind = if depth + 1 == height {
                        SlotKind::Leaf
                    } else {
                        SlotKind::Internal
                    };
                    let children = (kind == SlotKind::Internal).then(|| {
                        let base = Self::offset(trees, depth + 1) + tree * (row << 1);
                        (base + 2 * pos, base + 2 * pos + 1)
                    });
                    slots.push(Slot {
                        kind,
                        tree,
                        depth,
                        children,
                    });
                }
            }
        }
        Skeleton {
            order,
            height,
            public_names: reference
                .publics()
                .iter()
                .map(|w| reference.wire_name(*w).to_string())
                .collect(),
            secret_names: reference
                .secrets()
                .iter()
                .map(|w| reference.wire_name(*w).to_string())
                .collect(),
            extra_randoms,
            slots,
        }
    }

    fn offset(trees: usize, depth: usize) -> usize {
        trees * ((1 << depth) - 1)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn share_width(&self) -> usize {
        self.order + 1
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn publics(&self) -> &[String] {
        &self.public_names
    }

    pub fn secrets(&self) -> &[String] {
        &self.secret_names
    }

    pub fn extra_randoms(&self) -> usize {
        self.extra_randoms
    }

    /// Leaf menu, in backend preference order.
    pub fn leaf_menu(&self) -> Vec<LeafChoice> {
        let mut menu = vec![LeafChoice::Const0, LeafChoice::Const1];
        for i in 0..self.public_names.len() {
            menu.push(LeafChoice::Public(i));
        }
        for i in 0..self.extra_randoms {
            menu.push(LeafChoice::ExtraRandom(i));
        }
        for secret in 0..self.secret_names.len() {
            for index in 0..self.share_width() {
                menu.push(LeafChoice::Share { secret, index });
            }
        }
        menu
    }

    pub fn menu_size(&self, slot: usize) -> usize {
        match self.slots[slot].kind {
            SlotKind::Internal => INTERNAL_OPS.len(),
            SlotKind::Leaf => self.leaf_menu().len(),
        }
    }

    /// Number of control assignments.
    pub fn control_space(&self) -> u128 {
        let leaf = self.leaf_menu().len() as u128;
        self.slots.iter().fold(1u128, |acc, s| {
            acc.saturating_mul(match s.kind {
                SlotKind::Internal => INTERNAL_OPS.len() as u128,
                SlotKind::Leaf => leaf,
            })
        })
    }

    /// Total rankable nodes: slots then shares.
    pub fn node_count(&self) -> usize {
        self.slots.len() + self.secret_names.len() * self.share_width()
    }

    /// Randoms enumerated by the constraint semantics: the encoder
    /// randoms (secret-major) then the extra randoms.
    pub fn random_bits(&self) -> usize {
        self.secret_names.len() * self.order + self.extra_randoms
    }
}

/// Total choice of gate/source per slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlAssignment(pub Vec<u8>);

impl ControlAssignment {
    pub fn first(sk: &Skeleton) -> ControlAssignment {
        ControlAssignment(vec![0; sk.slots().len()])
    }
}

/// Instantiated candidate plus the root-most rank of each observable
/// node (slot gates first, then shares).
pub struct Instance {
    pub circuit: Circuit,
    pub ranks: Vec<(WireId, usize)>,
}

/// Build the concrete circuit selected by a control assignment.
/// Unused extra randoms are dropped, so a purely public instance has
/// no randoms at all.
pub fn instantiate(sk: &Skeleton, ctrl: &ControlAssignment) -> Instance {
    assert_eq!(ctrl.0.len(), sk.slots().len());
    let menu = sk.leaf_menu();
    let mut b = CircuitBuilder::new("synth");
    for p in &sk.public_names {
        b.public(p).unwrap();
    }
    let used_extras: BTreeSet<usize> = sk
        .slots()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.kind == SlotKind::Leaf)
        .filter_map(|(i, _)| match menu[ctrl.0[i] as usize] {
            LeafChoice::ExtraRandom(x) => Some(x),
            _ => None,
        })
        .collect();
    let mut share_wires: Vec<Vec<WireId>> = Vec::new();
    let mut extra_wires: Vec<Option<WireId>> = vec![None; sk.extra_randoms];
    for x in &used_extras {
        extra_wires[*x] = Some(b.random(&format!("x{}", x + 1)).unwrap());
    }
    for k in &sk.secret_names {
        b.secret(k).unwrap();
        let rnames: Vec<String> = (1..=sk.order).map(|i| format!("{k}_m{i}")).collect();
        for r in &rnames {
            b.random(r).unwrap();
        }
        let snames: Vec<String> = (1..=sk.share_width()).map(|i| format!("{k}_s{i}")).collect();
        let sraw: Vec<&str> = snames.iter().map(|s| s.as_str()).collect();
        let rraw: Vec<&str> = rnames.iter().map(|s| s.as_str()).collect();
        share_wires.push(b.encoder(k, &sraw, &rraw).unwrap());
    }

    // Slots evaluate children-first; higher indices are deeper.
    let mut slot_wires: Vec<Option<WireId>> = vec![None; sk.slots().len()];
    for i in (0..sk.slots().len()).rev() {
        let slot = sk.slots()[i];
        let name = format!("g{}", i + 1);
        let id = match slot.kind {
            SlotKind::Leaf => match menu[ctrl.0[i] as usize] {
                LeafChoice::Const0 => b.gate(&name, Op::Const0, &[]).unwrap(),
                LeafChoice::Const1 => b.gate(&name, Op::Const1, &[]).unwrap(),
                LeafChoice::Public(p) => {
                    let w = sk.public_names[p].clone();
                    b.gate(&name, Op::Pass, &[&w]).unwrap()
                }
                LeafChoice::ExtraRandom(x) => {
                    let w = extra_wires[x].expect("used extra random was declared");
                    b.gate_ids(&name, Op::Pass, &[w]).unwrap()
                }
                LeafChoice::Share { secret, index } => {
                    let w = share_wires[secret][index];
                    b.gate_ids(&name, Op::Pass, &[w]).unwrap()
                }
            },
            SlotKind::Internal => {
                let (l, r) = slot.children.unwrap();
                let op = INTERNAL_OPS[ctrl.0[i] as usize];
                let lw = slot_wires[l].unwrap();
                let rw = slot_wires[r].unwrap();
                b.gate_ids(&name, op, &[lw, rw]).unwrap()
            }
        };
        slot_wires[i] = Some(id);
    }

    let roots: Vec<WireId> = (0..sk.share_width())
        .map(|tree| slot_wires[tree].unwrap())
        .collect();
    b.decoder_ids("o", &roots).unwrap();
    b.output("o").unwrap();
    let circuit = b.finish().unwrap();

    let mut ranks: Vec<(WireId, usize)> = slot_wires
        .iter()
        .enumerate()
        .map(|(i, w)| (w.unwrap(), i))
        .collect();
    let mut rank = sk.slots().len();
    for shares in &share_wires {
        for s in shares {
            ranks.push((*s, rank));
            rank += 1;
        }
    }
    Instance { circuit, ranks }
}

/// Growing CEGAR state: input valuations, node valuations, and the
/// root-most selection budget. Only ever grows.
#[derive(Debug, Clone, Default)]
pub struct TestSet {
    pub publics: BTreeSet<Vec<bool>>,
    pub secrets: BTreeSet<Vec<bool>>,
    pub node_values: BTreeSet<Vec<bool>>,
    pub gamma: usize,
}

impl TestSet {
    pub fn initial(order: usize) -> TestSet {
        TestSet {
            gamma: order,
            ..TestSet::default()
        }
    }

    pub fn merge(&mut self, other: &TestSet) {
        self.publics.extend(other.publics.iter().cloned());
        self.secrets.extend(other.secrets.iter().cloned());
        self.node_values.extend(other.node_values.iter().cloned());
        self.gamma = self.gamma.max(other.gamma);
    }

    pub fn len(&self) -> usize {
        self.publics.len() + self.secrets.len() + self.node_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Full (unrestricted) constraint semantics over control assignments.
pub struct ConstraintSystem<'a> {
    pub skeleton: &'a Skeleton,
    pub kind: ConstraintKind<'a>,
    pub cost_cap: u64,
}

pub enum ConstraintKind<'a> {
    /// The instance computes the reference function for every input.
    IoEquivalent { reference: &'a Circuit },
    /// The instance withstands `order` probes.
    LeakFree { order: usize },
}

/// IO-equivalence constraint over the skeleton's control variables.
pub fn encode_phi_io<'a>(reference: &'a Circuit, skeleton: &'a Skeleton) -> ConstraintSystem<'a> {
    ConstraintSystem {
        skeleton,
        kind: ConstraintKind::IoEquivalent { reference },
        cost_cap: crate::eval::DEFAULT_COST_CAP,
    }
}

/// Probing-security constraint over the skeleton's control variables.
pub fn encode_phi_lr(skeleton: &Skeleton, order: usize) -> ConstraintSystem<'_> {
    ConstraintSystem {
        skeleton,
        kind: ConstraintKind::LeakFree { order },
        cost_cap: crate::eval::DEFAULT_COST_CAP,
    }
}

impl ConstraintSystem<'_> {
    pub fn satisfied_by(&self, ctrl: &ControlAssignment) -> Result<bool, SynthError> {
        let instance = instantiate(self.skeleton, ctrl);
        match &self.kind {
            ConstraintKind::IoEquivalent { reference } => {
                Ok(io_equivalent(reference, &instance.circuit, self.cost_cap)?.is_equivalent())
            }
            ConstraintKind::LeakFree { order } => {
                let opts = VerifyOptions::new(*order)
                    .no_prune()
                    .cost_cap(self.cost_cap);
                Ok(verify(&instance.circuit, &opts)?.verdict.is_secure())
            }
        }
    }
}

/// One synthesis query for a backend: find any control assignment
/// satisfying the test-set-restricted constraints.
pub struct SearchProblem<'a> {
    pub skeleton: &'a Skeleton,
    pub reference: &'a Circuit,
    pub tset: &'a TestSet,
    pub deadline: Option<Instant>,
}

pub enum CheckOutcome {
    /// Candidate passed both full checks; the instance is the result.
    Success(Instance),
    /// Candidate failed; new test-set entries and the raised budget.
    Counterexample(TestSet),
}

/// Validate a candidate against the unrestricted conditions and mine
/// failures for new test vectors. On a security failure the selection
/// budget is raised to cover the deepest witness node.
pub fn check_candidate(
    reference: &Circuit,
    skeleton: &Skeleton,
    ctrl: &ControlAssignment,
    order: usize,
    cost_cap: u64,
) -> Result<CheckOutcome, SynthError> {
    let instance = instantiate(skeleton, ctrl);
    match io_equivalent(reference, &instance.circuit, cost_cap)? {
        IoVerdict::Equivalent => {}
        IoVerdict::NotEquivalent(cex) => {
            let mut delta = TestSet::default();
            delta.publics.insert(cex.public_bits);
            delta.secrets.insert(cex.secret_bits);
            return Ok(CheckOutcome::Counterexample(delta));
        }
    }
    let opts = VerifyOptions::new(order).cost_cap(cost_cap);
    match verify(&instance.circuit, &opts)?.verdict {
        Verdict::Secure => Ok(CheckOutcome::Success(instance)),
        Verdict::Leak(w) => {
            let mut delta = TestSet::default();
            delta.publics.insert(w.public_bits.clone());
            delta.secrets.insert(w.secret_bits.clone());
            delta.secrets.insert(w.secret_bits_alt.clone());
            let v = w
                .dist
                .counts
                .iter()
                .zip(&w.dist_alt.counts)
                .position(|(a, b)| a != b)
                .expect("distinguishing tables differ somewhere");
            delta
                .node_values
                .insert((0..w.selection.len()).map(|i| v >> i & 1 == 1).collect());
            let deepest = w
                .selection
                .iter()
                .map(|sel| {
                    instance
                        .ranks
                        .iter()
                        .find(|(w2, _)| w2 == sel)
                        .map(|(_, r)| *r)
                        .unwrap_or(0)
                })
                .max()
                .unwrap_or(0);
            delta.gamma = deepest + 1;
            Ok(CheckOutcome::Counterexample(delta))
        }
    }
}

#[derive(Debug, Clone)]
pub struct MonoConfig {
    pub order: usize,
    pub init_height: usize,
    pub max_height: usize,
    /// Extra-random budget per skeleton; defaults to the order and is
    /// doubled once when a height is exhausted.
    pub extra_randoms: Option<usize>,
    pub timeout: Option<Duration>,
    pub cost_cap: u64,
}

impl MonoConfig {
    pub fn new(order: usize) -> MonoConfig {
        MonoConfig {
            order,
            init_height: 1,
            max_height: 4,
            extra_randoms: None,
            timeout: None,
            cost_cap: crate::eval::DEFAULT_COST_CAP,
        }
    }
}

#[derive(Debug)]
pub struct MonoOutcome {
    pub circuit: Circuit,
    pub height: usize,
    pub candidates_checked: usize,
}

const ITERATION_LIMIT: usize = 100_000;

/// Search skeletons of increasing height for a verified instance.
/// Every returned circuit has passed the full IO-equivalence and
/// probing-security checks; nothing is returned on trust.
pub fn mono_synth(
    reference: &Circuit,
    cfg: &MonoConfig,
    backend: &mut dyn CandidateBackend,
) -> Result<MonoOutcome, SynthError> {
    if !reference.is_random_free() {
        return Err(SynthError::NotRandomFree);
    }
    if reference.outputs().len() != 1 {
        return Err(SynthError::MultiOutput(reference.outputs().len()));
    }
    let deadline = cfg.timeout.map(|t| Instant::now() + t);
    let base_extras = cfg.extra_randoms.unwrap_or(cfg.order);
    let mut max_height_tried = cfg.init_height;

    for height in cfg.init_height..=cfg.max_height {
        max_height_tried = height;
        let mut budgets = vec![base_extras];
        if base_extras > 0 {
            budgets.push(base_extras * 2);
        }
        for extras in budgets {
            let skeleton = Skeleton::build(reference, cfg.order, height, extras);
            let mut tset = TestSet::initial(cfg.order);
            let mut checked = 0usize;
            loop {
                if let Some(d) = deadline {
                    if Instant::now() >= d {
                        return Err(SynthError::Timeout {
                            max_height: max_height_tried,
                        });
                    }
                }
                if checked > ITERATION_LIMIT {
                    return Err(SynthError::IterationLimit(ITERATION_LIMIT));
                }
                let problem = SearchProblem {
                    skeleton: &skeleton,
                    reference,
                    tset: &tset,
                    deadline,
                };
                match backend.find(&problem)? {
                    FindOutcome::NoSolution => break,
                    FindOutcome::Solution(ctrl) => {
                        checked += 1;
                        match check_candidate(reference, &skeleton, &ctrl, cfg.order, cfg.cost_cap)?
                        {
                            CheckOutcome::Success(instance) => {
                                return Ok(MonoOutcome {
                                    circuit: instance.circuit,
                                    height,
                                    candidates_checked: checked,
                                });
                            }
                            CheckOutcome::Counterexample(delta) => {
                                debug_assert!(
                                    {
                                        let mut probe = tset.clone();
                                        probe.merge(&delta);
                                        let p = SearchProblem {
                                            skeleton: &skeleton,
                                            reference,
                                            tset: &probe,
                                            deadline,
                                        };
                                        !RestrictedChecker::new(&p).accepts(&ctrl)
                                    },
                                    "counterexample must eliminate the candidate"
                                );
                                tset.merge(&delta);
                            }
                        }
                    }
                }
            }
        }
    }
    Err(SynthError::HeightExceeded {
        max_height: max_height_tried,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn reference_k_and_p() -> Circuit {
        fixtures::single_gate(Op::And, 1)
    }

    #[test]
    fn skeleton_slot_counts() {
        let reference = reference_k_and_p();
        for (height, order) in [(1, 1), (2, 1), (2, 2), (3, 1)] {
            let sk = Skeleton::build(&reference, order, height, 0);
            let per_tree_leaves = 1usize << (height - 1);
            let per_tree_internal = per_tree_leaves - 1;
            let trees = order + 1;
            assert_eq!(
                sk.slots().len(),
                trees * (per_tree_leaves + per_tree_internal)
            );
            let leaves = sk
                .slots()
                .iter()
                .filter(|s| s.kind == SlotKind::Leaf)
                .count();
            assert_eq!(leaves, trees * per_tree_leaves);
        }
    }

    #[test]
    fn height_one_has_single_slot_per_output() {
        let sk = Skeleton::build(&reference_k_and_p(), 2, 1, 0);
        assert_eq!(sk.slots().len(), 3);
        assert!(sk.slots().iter().all(|s| s.kind == SlotKind::Leaf));
    }

    #[test]
    fn example_skeleton_shape_and_menu() {
        // Height 2, one secret, one public, no extra randoms: two
        // trees of three slots, roots first, and the five-entry menu.
        let sk = Skeleton::build(&reference_k_and_p(), 1, 2, 0);
        assert_eq!(sk.slots().len(), 6);
        assert_eq!(sk.slots()[0].kind, SlotKind::Internal);
        assert_eq!(sk.slots()[1].kind, SlotKind::Internal);
        assert_eq!(sk.slots()[0].children, Some((2, 3)));
        assert_eq!(sk.slots()[1].children, Some((4, 5)));
        let menu = sk.leaf_menu();
        assert_eq!(
            menu,
            vec![
                LeafChoice::Const0,
                LeafChoice::Const1,
                LeafChoice::Public(0),
                LeafChoice::Share {
                    secret: 0,
                    index: 0
                },
                LeafChoice::Share {
                    secret: 0,
                    index: 1
                },
            ]
        );
    }

    #[test]
    fn instance_semantics_follow_the_controls() {
        // (s1 ^ p) xor-decoded with (s2 ^ F) computes k ^ p.
        let mut b = CircuitBuilder::new("kxp");
        b.public("p").unwrap();
        b.secret("k").unwrap();
        b.gate("g", Op::Xor, &["p", "k"]).unwrap();
        b.output("g").unwrap();
        let reference = b.finish().unwrap();
        let sk = Skeleton::build(&reference, 1, 2, 0);
        // Slots: [root0, root1, leaf00, leaf01, leaf10, leaf11].
        let ctrl = ControlAssignment(vec![0, 0, 3, 2, 4, 0]);
        let inst = instantiate(&sk, &ctrl);
        assert!(
            io_equivalent(&reference, &inst.circuit, crate::eval::DEFAULT_COST_CAP)
                .unwrap()
                .is_equivalent()
        );
    }

    #[test]
    fn instances_drop_unused_extra_randoms() {
        let reference = fixtures::single_gate(Op::Pass, 0);
        let sk = Skeleton::build(&reference, 1, 1, 2);
        // Both leaves pick the public input; no randoms needed.
        let ctrl = ControlAssignment(vec![2, 0]);
        let inst = instantiate(&sk, &ctrl);
        assert!(inst.circuit.randoms().is_empty());
    }

    #[test]
    fn phi_io_constant_case() {
        // Reference output is constant 1.
        let mut b = CircuitBuilder::new("one");
        b.public("p").unwrap();
        b.gate("g", Op::Const1, &[]).unwrap();
        b.output("g").unwrap();
        let reference = b.finish().unwrap();
        let sk = Skeleton::build(&reference, 1, 1, 0);
        let phi = encode_phi_io(&reference, &sk);
        // T xor F decodes to 1.
        assert!(phi
            .satisfied_by(&ControlAssignment(vec![1, 0]))
            .unwrap());
        // F xor F decodes to 0.
        assert!(!phi
            .satisfied_by(&ControlAssignment(vec![0, 0]))
            .unwrap());
    }

    #[test]
    fn phi_io_negated_candidate_fails() {
        let reference = fixtures::single_gate(Op::Pass, 0);
        let sk = Skeleton::build(&reference, 1, 1, 0);
        let phi = encode_phi_io(&reference, &sk);
        // PASS p on one tree, F on the other: computes p.
        assert!(phi.satisfied_by(&ControlAssignment(vec![2, 0])).unwrap());
        // T on the second tree flips it to !p.
        assert!(!phi.satisfied_by(&ControlAssignment(vec![2, 1])).unwrap());
    }

    #[test]
    fn phi_lr_unmasked_share_fails() {
        // Output tree exposing the decoded secret directly.
        let reference = fixtures::single_gate(Op::Pass, 1);
        let sk = Skeleton::build(&reference, 1, 2, 0);
        let phi = encode_phi_lr(&sk, 1);
        // Tree 0 = s1 ^ s2 (= k), tree 1 = F ^ F: node g1 carries k.
        let leak = ControlAssignment(vec![0, 0, 3, 4, 0, 0]);
        assert!(!phi.satisfied_by(&leak).unwrap());
        // Share-wise passthrough is fine.
        let ok = ControlAssignment(vec![0, 0, 3, 0, 4, 0]);
        assert!(phi.satisfied_by(&ok).unwrap());
    }

    #[test]
    fn masked_and_tree_satisfies_phi_lr_at_order_two() {
        // The share-wise AND-with-public pattern at n = 2.
        let reference = reference_k_and_p();
        let sk = Skeleton::build(&reference, 2, 2, 0);
        // Trees: (s_i AND p) for i = 1..3.
        let menu = sk.leaf_menu();
        let share_base = menu
            .iter()
            .position(|m| matches!(m, LeafChoice::Share { .. }))
            .unwrap() as u8;
        let public = menu
            .iter()
            .position(|m| matches!(m, LeafChoice::Public(0)))
            .unwrap() as u8;
        let ctrl = ControlAssignment(vec![
            1, 1, 1, // AND roots
            share_base, public,
            share_base + 1, public,
            share_base + 2, public,
        ]);
        let phi = encode_phi_lr(&sk, 2);
        assert!(phi.satisfied_by(&ctrl).unwrap());
        let io = encode_phi_io(&reference, &sk);
        assert!(io.satisfied_by(&ctrl).unwrap());
    }
}
