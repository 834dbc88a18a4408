//! Exact verification of masking security.
//!
//! A split circuit withstands `n` probes when, for every public input
//! and every pair of secret valuations, the joint distribution of any
//! selection of at most `n` observable nodes over the uniform randoms
//! is identical. The verifier enumerates those distributions exactly
//! as integer counts; nothing is sampled or approximated.
//!
//! Selection enumeration is deliberately deterministic: by increasing
//! size, then lexicographic on node indices. The reported witness is
//! the first one in (selection, public input, secret pair) order, so
//! runs are reproducible and independent of any parallel scheduling.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, SplitError, WireId};
use crate::eval::{bit_vectors, EvalSpaceError, LaneEvaluator, WireLanes};

/// Unnormalized joint distribution of a node selection: for each value
/// vector (bit `i` of the index is node `i`'s value), the number of
/// random assignments producing it. Counts sum to `2^random_count`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DistTable {
    pub width: usize,
    pub random_count: usize,
    pub counts: Vec<u64>,
}

impl DistTable {
    fn from_counts(width: usize, random_count: usize, counts: Vec<u64>) -> Self {
        debug_assert_eq!(counts.len(), 1 << width);
        debug_assert_eq!(counts.iter().sum::<u64>(), 1u64 << random_count);
        DistTable {
            width,
            random_count,
            counts,
        }
    }
}

impl fmt::Display for DistTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        write!(f, "{{")?;
        for (v, count) in self.counts.iter().enumerate() {
            if *count == 0 {
                continue;
            }
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            for i in 0..self.width {
                write!(f, "{}", (v >> i) & 1)?;
            }
            if self.width == 0 {
                write!(f, "()")?;
            }
            write!(f, ":{count}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("circuit is not fully split: {0}")]
    NotSplit(#[from] SplitError),
    #[error("selection contains a non-observable node `{0}`")]
    BadSelection(String),
    #[error("input bits do not match the circuit signature")]
    BadInputBits,
    #[error("verification cost {cost} exceeds the cap {cap} (2^|r| x selections)")]
    Infeasible { cost: u128, cap: u128 },
    #[error(transparent)]
    Space(#[from] EvalSpaceError),
    #[error("budget spec does not cover node `{0}`")]
    UncoveredNode(String),
}

/// Exact observation distribution of `selection` under the given
/// public and secret bits, counted over every random assignment.
pub fn dist(
    c: &Circuit,
    public_bits: &[bool],
    secret_bits: &[bool],
    selection: &[WireId],
) -> Result<DistTable, VerifyError> {
    if public_bits.len() != c.publics().len() || secret_bits.len() != c.secrets().len() {
        return Err(VerifyError::BadInputBits);
    }
    for s in selection {
        if !c.is_observable(*s) {
            return Err(VerifyError::BadSelection(c.wire_name(*s).to_string()));
        }
    }
    let ev = LaneEvaluator::new(c)?;
    let lanes = ev.eval(public_bits, secret_bits);
    Ok(DistTable::from_counts(
        selection.len(),
        c.randoms().len(),
        lanes.count_patterns(selection),
    ))
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Probe budget n.
    pub order: usize,
    /// Skip selections whose dependencies cannot cover all shares of
    /// any one encoder. Sound: such selections are secret-independent.
    pub prune: bool,
    /// Cap on `2^|r| x checked selections`.
    pub cost_cap: u64,
}

impl VerifyOptions {
    pub fn new(order: usize) -> Self {
        VerifyOptions {
            order,
            prune: true,
            cost_cap: crate::eval::DEFAULT_COST_CAP,
        }
    }

    pub fn no_prune(mut self) -> Self {
        self.prune = false;
        self
    }

    pub fn cost_cap(mut self, cap: u64) -> Self {
        self.cost_cap = cap;
        self
    }
}

/// Distinguishing observation: under `public_bits`, the secret pair
/// gives different distributions on `selection`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeakWitness {
    pub public_bits: Vec<bool>,
    pub secret_bits: Vec<bool>,
    pub secret_bits_alt: Vec<bool>,
    pub selection: Vec<WireId>,
    pub dist: DistTable,
    pub dist_alt: DistTable,
}

impl LeakWitness {
    pub fn describe(&self, c: &Circuit) -> String {
        let names: Vec<&str> = self.selection.iter().map(|w| c.wire_name(*w)).collect();
        let bits = |b: &[bool]| b.iter().map(|x| if *x { '1' } else { '0' }).collect::<String>();
        format!(
            "selection ({}) distinguishes secrets {} and {} under publics {}: {} vs {}",
            names.join(", "),
            bits(&self.secret_bits),
            bits(&self.secret_bits_alt),
            bits(&self.public_bits),
            self.dist,
            self.dist_alt,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Secure,
    Leak(LeakWitness),
}

impl Verdict {
    pub fn is_secure(&self) -> bool {
        matches!(self, Verdict::Secure)
    }

    pub fn witness(&self) -> Option<&LeakWitness> {
        match self {
            Verdict::Secure => None,
            Verdict::Leak(w) => Some(w),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub verdict: Verdict,
    pub order: usize,
    pub random_count: usize,
    pub checked_selections: u64,
    pub pruned_selections: u64,
}

/// Iterator over index combinations of `m` items, sizes 1..=n, each
/// size in lexicographic order.
struct Combinations {
    m: usize,
    max_size: usize,
    current: Vec<usize>,
    done: bool,
}

impl Combinations {
    fn new(m: usize, max_size: usize) -> Self {
        let max_size = max_size.min(m);
        Combinations {
            m,
            max_size,
            current: Vec::new(),
            done: max_size == 0 || m == 0,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if self.current.is_empty() {
            self.current = vec![0];
            return Some(self.current.clone());
        }
        let size = self.current.len();
        // Advance the last position that can still move right.
        let mut i = size;
        loop {
            if i == 0 {
                // Exhausted this size; grow.
                if size + 1 > self.max_size {
                    self.done = true;
                    return None;
                }
                self.current = (0..size + 1).collect();
                return Some(self.current.clone());
            }
            i -= 1;
            if self.current[i] + (size - i) < self.m {
                self.current[i] += 1;
                for j in i + 1..size {
                    self.current[j] = self.current[j - 1] + 1;
                }
                return Some(self.current.clone());
            }
        }
    }
}

fn binomial_sum(m: usize, n: usize) -> u64 {
    let mut total = 0u64;
    for size in 1..=n.min(m) {
        let mut c = 1u128;
        for i in 0..size {
            c = c * (m - i) as u128 / (i + 1) as u128;
        }
        total = total.saturating_add(c.min(u64::MAX as u128) as u64);
    }
    total
}

/// Share coverage of each observable node: per encoder, a bitmask of
/// reachable share indices.
struct ShareCoverage {
    deps: Vec<Vec<u64>>,
    full: Vec<u64>,
}

impl ShareCoverage {
    fn new(c: &Circuit) -> Self {
        let deps = c.share_dependencies();
        let full = c
            .encoders()
            .iter()
            .map(|e| (1u64 << e.shares.len()) - 1)
            .collect();
        ShareCoverage { deps, full }
    }

    fn relevant(&self, nodes: &[WireId]) -> bool {
        let n_enc = self.full.len();
        let mut acc = vec![0u64; n_enc];
        for w in nodes {
            for (a, d) in acc.iter_mut().zip(&self.deps[w.index()]) {
                *a |= *d;
            }
        }
        acc.iter().zip(&self.full).any(|(a, f)| a == f)
    }
}

/// Structural requirements for verification. Circuits without secrets
/// are accepted as-is; once a circuit has secrets (or encoders), every
/// secret must be encoded, widths must agree, and outputs must be
/// decoded.
fn validate_split(c: &Circuit) -> Result<(), SplitError> {
    if c.secrets().is_empty() && c.encoders().is_empty() {
        return Ok(());
    }
    if c.encoders().is_empty() {
        return Err(SplitError::NoEncoders);
    }
    c.split_width()?;
    Ok(())
}

/// Selections worth checking: those whose combined share dependencies
/// cover all shares of at least one encoder. Every omitted selection
/// provably has a secret-independent distribution, because any proper
/// subset of an encoder's shares is uniform regardless of the secret.
pub fn relevant_selections(
    c: &Circuit,
    order: usize,
) -> Result<impl Iterator<Item = Vec<WireId>> + '_, VerifyError> {
    validate_split(c)?;
    let coverage = ShareCoverage::new(c);
    let observable = c.observable().to_vec();
    Ok(Combinations::new(observable.len(), order).filter_map(move |combo| {
        let nodes: Vec<WireId> = combo.iter().map(|i| observable[*i]).collect();
        coverage.relevant(&nodes).then_some(nodes)
    }))
}

/// Check the circuit against an adversary observing up to
/// `options.order` nodes.
pub fn verify(c: &Circuit, options: &VerifyOptions) -> Result<VerifyReport, VerifyError> {
    validate_split(c)?;
    verify_selections(c, options, None)
}

/// Per-component budget specification for composed circuits. A node
/// may belong to several parts (boundary wires of a sequential
/// composition belong to both sides); a selection is admissible when
/// its nodes can be charged to parts without exceeding any budget.
#[derive(Debug, Clone)]
pub struct BudgetSpec {
    pub parts: Vec<Vec<WireId>>,
    pub budgets: Vec<usize>,
}

impl BudgetSpec {
    pub fn total(&self) -> usize {
        self.budgets.iter().sum()
    }
}

/// Check the circuit against an adversary with per-component probe
/// budgets instead of one global budget.
pub fn verify_budgeted(
    c: &Circuit,
    spec: &BudgetSpec,
    options: &VerifyOptions,
) -> Result<VerifyReport, VerifyError> {
    validate_split(c)?;
    assert_eq!(spec.parts.len(), spec.budgets.len());
    let mut membership = vec![0u32; c.wire_count()];
    for (pi, part) in spec.parts.iter().enumerate() {
        for w in part {
            membership[w.index()] |= 1 << pi;
        }
    }
    for w in c.observable() {
        if membership[w.index()] == 0 {
            return Err(VerifyError::UncoveredNode(c.wire_name(*w).to_string()));
        }
    }
    let mut opts = options.clone();
    opts.order = spec.total();
    verify_selections(c, &opts, Some((membership, spec.budgets.clone())))
}

fn charge_fits(masks: &[u32], budgets: &[usize]) -> bool {
    fn rec(masks: &[u32], remaining: &mut [usize]) -> bool {
        let Some((&mask, rest)) = masks.split_first() else {
            return true;
        };
        for pi in 0..remaining.len() {
            if mask >> pi & 1 == 1 && remaining[pi] > 0 {
                remaining[pi] -= 1;
                if rec(rest, remaining) {
                    remaining[pi] += 1;
                    return true;
                }
                remaining[pi] += 1;
            }
        }
        false
    }
    let mut order: Vec<u32> = masks.to_vec();
    order.sort_by_key(|m| m.count_ones());
    let mut remaining = budgets.to_vec();
    rec(&order, &mut remaining)
}

fn verify_selections(
    c: &Circuit,
    options: &VerifyOptions,
    budget: Option<(Vec<u32>, Vec<usize>)>,
) -> Result<VerifyReport, VerifyError> {
    let observable = c.observable();
    let m = observable.len();
    let n = options.order;
    let coverage = options.prune.then(|| ShareCoverage::new(c));

    let mut selections: Vec<Vec<WireId>> = Vec::new();
    for combo in Combinations::new(m, n) {
        let nodes: Vec<WireId> = combo.iter().map(|i| observable[*i]).collect();
        if let Some(cov) = &coverage {
            if !cov.relevant(&nodes) {
                continue;
            }
        }
        if let Some((membership, budgets)) = &budget {
            let masks: Vec<u32> = nodes.iter().map(|w| membership[w.index()]).collect();
            if !charge_fits(&masks, budgets) {
                continue;
            }
        }
        selections.push(nodes);
    }
    let enumerated = binomial_sum(m, n);
    let checked = selections.len() as u64;
    let pruned = enumerated.saturating_sub(checked);

    let r = c.randoms().len();
    let report = |verdict| VerifyReport {
        verdict,
        order: n,
        random_count: r,
        checked_selections: checked,
        pruned_selections: pruned,
    };

    let k = c.secrets().len();
    if k == 0 || selections.is_empty() {
        return Ok(report(Verdict::Secure));
    }

    let cost = (checked as u128) << r;
    if cost > options.cost_cap as u128 {
        return Err(VerifyError::Infeasible {
            cost,
            cap: options.cost_cap as u128,
        });
    }

    let ev = LaneEvaluator::new(c)?;
    let secret_values: Vec<Vec<bool>> = bit_vectors(k).collect();

    // Best witness so far as (selection, public, pair) indices; only
    // selections strictly before the current best still matter.
    let mut best: Option<(usize, LeakWitness)> = None;
    let mut bound = selections.len();

    for public_bits in bit_vectors(c.publics().len()) {
        let mut lanes: Vec<Option<WireLanes>> = (0..secret_values.len()).map(|_| None).collect();
        let mut dists: Vec<Vec<Option<Vec<u64>>>> =
            vec![vec![None; bound]; secret_values.len()];
        for i in 0..secret_values.len() {
            for j in i + 1..secret_values.len() {
                for (si, sel) in selections.iter().enumerate().take(bound) {
                    for idx in [i, j] {
                        if dists[idx][si].is_none() {
                            if lanes[idx].is_none() {
                                lanes[idx] = Some(ev.eval(&public_bits, &secret_values[idx]));
                            }
                            dists[idx][si] =
                                Some(lanes[idx].as_ref().unwrap().count_patterns(sel));
                        }
                    }
                    let di = dists[i][si].as_ref().unwrap();
                    let dj = dists[j][si].as_ref().unwrap();
                    if di != dj {
                        let witness = LeakWitness {
                            public_bits: public_bits.clone(),
                            secret_bits: secret_values[i].clone(),
                            secret_bits_alt: secret_values[j].clone(),
                            selection: sel.clone(),
                            dist: DistTable::from_counts(sel.len(), r, di.clone()),
                            dist_alt: DistTable::from_counts(sel.len(), r, dj.clone()),
                        };
                        best = Some((si, witness));
                        bound = si;
                        break;
                    }
                }
            }
        }
    }

    Ok(report(match best {
        None => Verdict::Secure,
        Some((_, w)) => Verdict::Leak(w),
    }))
}
