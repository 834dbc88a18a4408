//! Security-preserving circuit composition.
//!
//! Composing split circuits preserves probing security as long as the
//! randoms of the composed components are disjoint; no fresh randoms
//! are injected at the composition site. Three operators are provided:
//!
//! - [`par_compose`]: run two circuits side by side, duplicating the
//!   encoders of any shared secret.
//! - [`seq_compose`]: feed the split outputs of single-output circuits
//!   into the split inputs of a downstream circuit, stripping the
//!   upstream decoders and the downstream encoders.
//! - [`share_compose`]: fan one split output tuple out to several
//!   consumers.
//!
//! [`isw_transform`] is the uniform gate-by-gate masking construction,
//! used as a pre-made fallback when constraint-based synthesis runs
//! out of budget.
//!
//! All operations return a [`Composed`] carrying per-operand node
//! groups, so the budgeted verifier can charge probes to components.
//! Boundary wires of sequential compositions belong to both sides.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::circuit::{BuildError, Circuit, CircuitBuilder, Op, Role, SplitError, WireId};
use crate::verify::BudgetSpec;

#[derive(Debug, Error)]
pub enum ComposeError {
    #[error("randoms overlap across operands (`{0}`); freshen them first")]
    RandomsOverlap(String),
    #[error("operands disagree on share width: {0} vs {1}")]
    WidthMismatch(usize, usize),
    #[error("operand `{0}` must have exactly one decoded output, found {1}")]
    SingleOutputRequired(String, usize),
    #[error("downstream circuit has {expected} encoders but {got} upstream circuits were given")]
    EncoderCount { expected: usize, got: usize },
    #[error("`{name}` is declared as {a:?} in one operand and {b:?} in another")]
    RoleClash { name: String, a: Role, b: Role },
    #[error("consumer `{circuit}` has no single encoder for secret `{secret}`")]
    NoSingleEncoder { circuit: String, secret: String },
    #[error("invalid share permutation")]
    BadPermutation,
    #[error("operand is not fully split: {0}")]
    NotSplit(#[from] SplitError),
    #[error("transform input must be random-free")]
    NotRandomFree,
    #[error(transparent)]
    Build(#[from] BuildError),
}

/// A composed circuit plus the observable nodes contributed by each
/// operand, for per-component budget checks.
#[derive(Debug, Clone)]
pub struct Composed {
    pub circuit: Circuit,
    pub parts: Vec<Vec<WireId>>,
}

impl Composed {
    pub fn budget_spec(&self, budgets: Vec<usize>) -> BudgetSpec {
        assert_eq!(budgets.len(), self.parts.len());
        BudgetSpec {
            parts: self.parts.clone(),
            budgets,
        }
    }
}

/// Consistent share width of a circuit's encoders and decoders, if it
/// has any.
fn op_width(c: &Circuit) -> Result<Option<usize>, ComposeError> {
    let mut width = None;
    for w in c
        .encoders()
        .iter()
        .map(|e| e.shares.len())
        .chain(c.decoders().iter().map(|d| d.inputs.len()))
    {
        match width {
            None => width = Some(w),
            Some(prev) if prev != w => return Err(ComposeError::WidthMismatch(prev, w)),
            _ => {}
        }
    }
    Ok(width)
}

fn check_width(a: Option<usize>, b: Option<usize>) -> Result<(), ComposeError> {
    match (a, b) {
        (Some(x), Some(y)) if x != y => Err(ComposeError::WidthMismatch(x, y)),
        _ => Ok(()),
    }
}

/// Rename circuits so that no random wire name repeats across them.
/// Each circuit is unchanged up to the renaming; the first occurrence
/// of a name keeps it.
pub fn freshen_randoms(circuits: &[&Circuit]) -> Vec<Circuit> {
    let mut taken: HashSet<String> = HashSet::new();
    for c in circuits {
        for w in 0..c.wire_count() {
            let id = WireId(w as u32);
            if c.role(id) != Role::Random {
                taken.insert(c.wire_name(id).to_string());
            }
        }
    }
    let mut used_randoms: HashSet<String> = HashSet::new();
    circuits
        .iter()
        .map(|c| {
            let mut renames: HashMap<WireId, String> = HashMap::new();
            for r in c.randoms() {
                let base = c.wire_name(*r);
                let mut name = base.to_string();
                let mut i = 2;
                while used_randoms.contains(&name) || (name != base && taken.contains(&name)) {
                    name = format!("{base}_{i}");
                    i += 1;
                }
                used_randoms.insert(name.clone());
                if name != base {
                    renames.insert(*r, name);
                }
            }
            c.renamed(&renames)
        })
        .collect()
}

impl Circuit {
    /// Copy of the circuit with some wires renamed. Structure and wire
    /// numbering are untouched.
    pub(crate) fn renamed(&self, renames: &HashMap<WireId, String>) -> Circuit {
        let mut c = self.clone();
        for (id, name) in renames {
            let old = c.wires[id.index()].name.clone();
            c.by_name.remove(&old);
            c.wires[id.index()].name = name.clone();
            c.by_name.insert(name.clone(), *id);
        }
        c
    }
}

/// Incrementally merges operand circuits into one builder, unifying
/// public/secret inputs by name and renaming clashing internals.
struct Merger {
    b: CircuitBuilder,
}

#[derive(Default)]
struct ImportSpec {
    /// Encoder indices to drop; their shares map through `subst`.
    drop_encoders: HashSet<usize>,
    /// Substitution for dropped encoder shares (old id -> new id).
    subst: HashMap<WireId, WireId>,
    /// Drop all decoders and do not register outputs.
    drop_decoders: bool,
}

struct Imported {
    /// Old wire id -> new wire id (None for dropped wires).
    map: Vec<Option<WireId>>,
    /// Observable nodes contributed, including substitution targets.
    part: Vec<WireId>,
}

impl Merger {
    fn new(name: &str) -> Self {
        Merger {
            b: CircuitBuilder::new(name),
        }
    }

    fn fresh(&self, base: &str) -> String {
        let mut name = base.to_string();
        let mut i = 2;
        while self.b.peek(&name).is_some() {
            name = format!("{base}_{i}");
            i += 1;
        }
        name
    }

    fn import(&mut self, c: &Circuit, spec: &ImportSpec) -> Result<Imported, ComposeError> {
        let mut map: Vec<Option<WireId>> = vec![None; c.wire_count()];
        let mut part: Vec<WireId> = Vec::new();

        // Publics and secrets unify by name; randoms must be fresh.
        for p in c.publics() {
            let name = c.wire_name(*p);
            map[p.index()] = Some(match self.b.peek(name) {
                Some((id, Role::Public)) => id,
                Some((_, role)) => {
                    return Err(ComposeError::RoleClash {
                        name: name.to_string(),
                        a: Role::Public,
                        b: role,
                    })
                }
                None => self.b.public(name)?,
            });
        }
        let secret_dropped = |k: &WireId| {
            let encs: Vec<usize> = c
                .encoders()
                .iter()
                .enumerate()
                .filter(|(_, e)| e.secret == *k)
                .map(|(i, _)| i)
                .collect();
            !encs.is_empty() && encs.iter().all(|i| spec.drop_encoders.contains(i))
        };
        for k in c.secrets() {
            if secret_dropped(k) {
                continue;
            }
            let name = c.wire_name(*k);
            map[k.index()] = Some(match self.b.peek(name) {
                Some((id, Role::Secret)) => id,
                Some((_, role)) => {
                    return Err(ComposeError::RoleClash {
                        name: name.to_string(),
                        a: Role::Secret,
                        b: role,
                    })
                }
                None => self.b.secret(name)?,
            });
        }
        let import_random = |b: &mut CircuitBuilder, r: WireId| -> Result<WireId, ComposeError> {
            let name = c.wire_name(r);
            if b.peek(name).is_some() {
                return Err(ComposeError::RandomsOverlap(name.to_string()));
            }
            Ok(b.random(name)?)
        };
        for (ei, e) in c.encoders().iter().enumerate() {
            if spec.drop_encoders.contains(&ei) {
                continue;
            }
            for r in &e.randoms {
                map[r.index()] = Some(import_random(&mut self.b, *r)?);
            }
        }
        for r in c.extra_randoms() {
            map[r.index()] = Some(import_random(&mut self.b, r)?);
        }

        // Encoders, with dropped ones replaced by the substitution.
        for (ei, e) in c.encoders().iter().enumerate() {
            if spec.drop_encoders.contains(&ei) {
                for s in &e.shares {
                    let target = *spec.subst.get(s).expect("dropped share has a target");
                    map[s.index()] = Some(target);
                    part.push(target);
                }
                continue;
            }
            let secret_name = self.b.wire_name_of(map[e.secret.index()].unwrap());
            let share_names: Vec<String> = e
                .shares
                .iter()
                .map(|s| self.fresh(c.wire_name(*s)))
                .collect();
            let random_names: Vec<String> = e
                .randoms
                .iter()
                .map(|r| self.b.wire_name_of(map[r.index()].unwrap()))
                .collect();
            let share_refs: Vec<&str> = share_names.iter().map(|s| s.as_str()).collect();
            let random_refs: Vec<&str> = random_names.iter().map(|s| s.as_str()).collect();
            let ids = self.b.encoder(&secret_name, &share_refs, &random_refs)?;
            for (s, id) in e.shares.iter().zip(&ids) {
                map[s.index()] = Some(*id);
                part.push(*id);
            }
        }

        for g in c.gates() {
            let inputs: Vec<WireId> = g
                .inputs
                .iter()
                .map(|w| map[w.index()].expect("gate input imported"))
                .collect();
            let name = self.fresh(c.wire_name(g.out));
            let id = self.b.gate_ids(&name, g.op, &inputs)?;
            map[g.out.index()] = Some(id);
            part.push(id);
        }

        if !spec.drop_decoders {
            for d in c.decoders() {
                let inputs: Vec<WireId> = d
                    .inputs
                    .iter()
                    .map(|w| map[w.index()].expect("decoder input imported"))
                    .collect();
                let name = self.fresh(c.wire_name(d.out));
                let id = self.b.decoder_ids(&name, &inputs)?;
                map[d.out.index()] = Some(id);
            }
        }

        Ok(Imported { map, part })
    }
}

/// Run two split circuits side by side. Shared publics and secrets
/// unify by name; a shared secret keeps one encoder per side. Outputs
/// concatenate.
pub fn par_compose(p1: &Circuit, p2: &Circuit) -> Result<Composed, ComposeError> {
    check_width(op_width(p1)?, op_width(p2)?)?;
    let mut m = Merger::new(&format!("par_{}_{}", p1.name(), p2.name()));
    let i1 = m.import(p1, &ImportSpec::default())?;
    let i2 = m.import(p2, &ImportSpec::default())?;
    for (c, im) in [(p1, &i1), (p2, &i2)] {
        for out in c.outputs() {
            let id = im.map[out.index()].expect("output imported");
            m.b.output_id(id)?;
        }
    }
    Ok(Composed {
        circuit: m.b.finish()?,
        parts: vec![i1.part, i2.part],
    })
}

/// Parallel composition of any number of circuits. A single operand
/// composes to itself.
pub fn par_compose_many(circuits: &[&Circuit]) -> Result<Composed, ComposeError> {
    assert!(!circuits.is_empty());
    if circuits.len() == 1 {
        let c = circuits[0].clone();
        let part = c.observable().to_vec();
        return Ok(Composed {
            circuit: c,
            parts: vec![part],
        });
    }
    let mut width = None;
    for c in circuits {
        let w = op_width(c)?;
        check_width(width, w)?;
        width = width.or(w);
    }
    let mut m = Merger::new(&format!("par{}_{}", circuits.len(), circuits[0].name()));
    let mut parts = Vec::new();
    let mut imported = Vec::new();
    for c in circuits {
        let im = m.import(c, &ImportSpec::default())?;
        parts.push(im.part.clone());
        imported.push(im);
    }
    for (c, im) in circuits.iter().zip(&imported) {
        for out in c.outputs() {
            m.b.output_id(im.map[out.index()].expect("output imported"))?;
        }
    }
    Ok(Composed {
        circuit: m.b.finish()?,
        parts,
    })
}

/// Feed the split outputs of `firsts` into the split inputs of
/// `second`: the decoders of `firsts` and the encoders of `second`
/// disappear, and `second`'s encoder shares are rewired to the
/// corresponding decoder inputs, positionally unless `perms` supplies
/// a share permutation per boundary.
pub fn seq_compose(firsts: &[&Circuit], second: &Circuit) -> Result<Composed, ComposeError> {
    seq_compose_permuted(firsts, second, None)
}

pub fn seq_compose_permuted(
    firsts: &[&Circuit],
    second: &Circuit,
    perms: Option<&[Vec<usize>]>,
) -> Result<Composed, ComposeError> {
    if second.encoders().len() != firsts.len() {
        return Err(ComposeError::EncoderCount {
            expected: second.encoders().len(),
            got: firsts.len(),
        });
    }
    let mut width = op_width(second)?;
    for f in firsts {
        f.split_width()?;
        if f.decoders().len() != 1 || f.outputs().len() != 1 {
            return Err(ComposeError::SingleOutputRequired(
                f.name().to_string(),
                f.outputs().len(),
            ));
        }
        let w = op_width(f)?;
        check_width(width, w)?;
        width = width.or(w);
    }
    second.split_width()?;
    if let Some(perms) = perms {
        if perms.len() != firsts.len() {
            return Err(ComposeError::BadPermutation);
        }
        let w = width.unwrap_or(0);
        for p in perms {
            let mut seen = vec![false; w];
            if p.len() != w {
                return Err(ComposeError::BadPermutation);
            }
            for i in p {
                if *i >= w || seen[*i] {
                    return Err(ComposeError::BadPermutation);
                }
                seen[*i] = true;
            }
        }
    }

    let mut m = Merger::new(&format!("seq_{}", second.name()));
    let mut parts = Vec::new();
    let mut boundaries: Vec<Vec<WireId>> = Vec::new();
    for (fi, f) in firsts.iter().enumerate() {
        let im = m.import(
            f,
            &ImportSpec {
                drop_decoders: true,
                ..ImportSpec::default()
            },
        )?;
        let decoder = &f.decoders()[0];
        let mapped: Vec<WireId> = decoder
            .inputs
            .iter()
            .map(|w| im.map[w.index()].expect("decoder input imported"))
            .collect();
        let permuted = match perms {
            Some(perms) => perms[fi].iter().map(|i| mapped[*i]).collect(),
            None => mapped,
        };
        boundaries.push(permuted);
        parts.push(im.part);
    }

    let mut spec = ImportSpec::default();
    for (ei, e) in second.encoders().iter().enumerate() {
        spec.drop_encoders.insert(ei);
        for (si, s) in e.shares.iter().enumerate() {
            spec.subst.insert(*s, boundaries[ei][si]);
        }
    }
    let im = m.import(second, &spec)?;
    for out in second.outputs() {
        m.b.output_id(im.map[out.index()].expect("output imported"))?;
    }
    parts.push(im.part);
    Ok(Composed {
        circuit: m.b.finish()?,
        parts,
    })
}

/// Fan the split output of `producer` out to several consumers; each
/// consumer receives it at the encoder of its named placeholder
/// secret. One share tuple serves every consumer.
pub fn share_compose(
    producer: &Circuit,
    consumers: &[(&Circuit, &str)],
) -> Result<Composed, ComposeError> {
    producer.split_width()?;
    if producer.decoders().len() != 1 || producer.outputs().len() != 1 {
        return Err(ComposeError::SingleOutputRequired(
            producer.name().to_string(),
            producer.outputs().len(),
        ));
    }
    let mut width = op_width(producer)?;
    for (c, _) in consumers {
        c.split_width()?;
        let w = op_width(c)?;
        check_width(width, w)?;
        width = width.or(w);
    }

    let mut m = Merger::new(&format!("fan_{}", producer.name()));
    let pim = m.import(
        producer,
        &ImportSpec {
            drop_decoders: true,
            ..ImportSpec::default()
        },
    )?;
    let boundary: Vec<WireId> = producer.decoders()[0]
        .inputs
        .iter()
        .map(|w| pim.map[w.index()].expect("decoder input imported"))
        .collect();
    let mut producer_part = pim.part;
    producer_part.extend(boundary.iter().copied());
    producer_part.sort();
    producer_part.dedup();
    let mut parts = vec![producer_part];

    for (c, placeholder) in consumers {
        let matching: Vec<usize> = c
            .encoders()
            .iter()
            .enumerate()
            .filter(|(_, e)| c.wire_name(e.secret) == *placeholder)
            .map(|(i, _)| i)
            .collect();
        let [ei] = matching[..] else {
            return Err(ComposeError::NoSingleEncoder {
                circuit: c.name().to_string(),
                secret: placeholder.to_string(),
            });
        };
        let mut spec = ImportSpec::default();
        spec.drop_encoders.insert(ei);
        for (si, s) in c.encoders()[ei].shares.iter().enumerate() {
            spec.subst.insert(*s, boundary[si]);
        }
        let im = m.import(c, &spec)?;
        for out in c.outputs() {
            m.b.output_id(im.map[out.index()].expect("output imported"))?;
        }
        parts.push(im.part);
    }
    Ok(Composed {
        circuit: m.b.finish()?,
        parts,
    })
}

/// Builder-side state for the masking transform.
struct MaskBuilder {
    b: CircuitBuilder,
    /// Random support of every produced wire: which random inputs its
    /// sharing draws on. Overlapping supports mean dependent sharings.
    support: Vec<HashSet<WireId>>,
    width: usize,
    zero: Option<WireId>,
    and_counter: usize,
}

impl MaskBuilder {
    fn fresh(&self, base: &str) -> String {
        let mut name = base.to_string();
        let mut i = 2;
        while self.b.peek(&name).is_some() {
            name = format!("{base}_{i}");
            i += 1;
        }
        name
    }

    fn put_support(&mut self, id: WireId, s: HashSet<WireId>) {
        if id.index() >= self.support.len() {
            self.support.resize(id.index() + 1, HashSet::new());
        }
        self.support[id.index()] = s;
    }

    fn union_support(&self, a: WireId, b: WireId) -> HashSet<WireId> {
        self.support[a.index()]
            .union(&self.support[b.index()])
            .copied()
            .collect()
    }

    fn gate(&mut self, base: &str, op: Op, inputs: &[WireId]) -> Result<WireId, ComposeError> {
        let name = self.fresh(base);
        let id = self.b.gate_ids(&name, op, inputs)?;
        let sup = match inputs {
            [] => HashSet::new(),
            [a] => self.support[a.index()].clone(),
            [a, b] => self.union_support(*a, *b),
            _ => unreachable!("gates have at most two inputs"),
        };
        self.put_support(id, sup);
        Ok(id)
    }

    fn zero(&mut self) -> Result<WireId, ComposeError> {
        if let Some(z) = self.zero {
            return Ok(z);
        }
        let z = self.gate("zero", Op::Const0, &[])?;
        self.zero = Some(z);
        Ok(z)
    }

    /// Constant-backed share vector: (wire, 0, ..., 0).
    fn const_vector(&mut self, first: WireId) -> Result<Vec<WireId>, ComposeError> {
        let mut v = vec![first];
        if self.width > 1 {
            let z = self.zero()?;
            v.extend(std::iter::repeat(z).take(self.width - 1));
        }
        Ok(v)
    }

    fn sharewise_not(&mut self, base: &str, v: &[WireId]) -> Result<Vec<WireId>, ComposeError> {
        let mut out = v.to_vec();
        out[0] = self.gate(&format!("{base}_n"), Op::Not, &[v[0]])?;
        Ok(out)
    }

    fn sharewise_xor(
        &mut self,
        base: &str,
        va: &[WireId],
        vb: &[WireId],
    ) -> Result<Vec<WireId>, ComposeError> {
        (0..self.width)
            .map(|i| self.gate(&format!("{base}_s{}", i + 1), Op::Xor, &[va[i], vb[i]]))
            .collect()
    }

    /// Multiplication gadget: output share `i` is
    /// `a_i b_i ^ XOR_{j!=i} z_ij` with fresh `z_ij` for `i < j` and
    /// `z_ji = (z_ij ^ a_i b_j) ^ a_j b_i`. Operand sharings with
    /// overlapping random support are made independent first by
    /// multiplying one side with the constant-one sharing.
    fn gadget_and(
        &mut self,
        base: &str,
        va: &[WireId],
        vb: &[WireId],
    ) -> Result<Vec<WireId>, ComposeError> {
        let overlapping = va.iter().any(|a| {
            !self.support[a.index()].is_empty()
                && vb
                    .iter()
                    .any(|x| !self.support[a.index()].is_disjoint(&self.support[x.index()]))
        });
        let vb_refreshed;
        let vb = if overlapping {
            let one_head = self.gate(&format!("{base}_one"), Op::Const1, &[])?;
            let one = self.const_vector(one_head)?;
            vb_refreshed = self.gadget_and(&format!("{base}_rf"), vb, &one)?;
            &vb_refreshed
        } else {
            vb
        };

        self.and_counter += 1;
        let tag = self.and_counter;
        let width = self.width;
        let mut prod = vec![vec![WireId(0); width]; width];
        for i in 0..width {
            for j in 0..width {
                prod[i][j] =
                    self.gate(&format!("{base}_p{}_{}", i + 1, j + 1), Op::And, &[va[i], vb[j]])?;
            }
        }
        let mut term = vec![vec![WireId(0); width]; width];
        for i in 0..width {
            for j in i + 1..width {
                let rname = self.fresh(&format!("z{}_{}_{}", tag, i + 1, j + 1));
                let z = self.b.random(&rname)?;
                self.put_support(z, [z].into_iter().collect());
                term[i][j] = z;
                let t1 = self.gate(
                    &format!("{base}_t{}_{}", i + 1, j + 1),
                    Op::Xor,
                    &[z, prod[i][j]],
                )?;
                term[j][i] = self.gate(
                    &format!("{base}_u{}_{}", i + 1, j + 1),
                    Op::Xor,
                    &[t1, prod[j][i]],
                )?;
            }
        }
        let mut out = Vec::with_capacity(width);
        for i in 0..width {
            let mut acc = prod[i][i];
            for j in 0..width {
                if j != i {
                    acc = self.gate(
                        &format!("{base}_a{}_{}", i + 1, j + 1),
                        Op::Xor,
                        &[acc, term[i][j]],
                    )?;
                }
            }
            out.push(acc);
        }
        Ok(out)
    }
}

/// Uniform gate-by-gate masking at share width `order + 1`: XOR and
/// NOT act share-wise, AND uses the multiplication gadget with
/// `order*(order+1)/2` fresh randoms, OR desugars through AND and NOT.
/// Every secret gets its own encoder; outputs get decoders. The result
/// is IO-equivalent to the input by construction and is meant to be
/// verified downstream like any other synthesis product.
pub fn isw_transform(p: &Circuit, order: usize) -> Result<Circuit, ComposeError> {
    if !p.is_random_free() {
        return Err(ComposeError::NotRandomFree);
    }
    let width = order + 1;
    let mut mb = MaskBuilder {
        b: CircuitBuilder::new(&format!("{}_masked", p.name())),
        support: Vec::new(),
        width,
        zero: None,
        and_counter: 0,
    };

    let mut vectors: HashMap<WireId, Vec<WireId>> = HashMap::new();

    for pw in p.publics() {
        let id = mb.b.public(p.wire_name(*pw))?;
        mb.put_support(id, HashSet::new());
    }
    for kw in p.secrets() {
        let kname = p.wire_name(*kw).to_string();
        mb.b.secret(&kname)?;
        let rnames: Vec<String> = (1..=order)
            .map(|i| mb.fresh(&format!("{kname}_m{i}")))
            .collect();
        let mut randoms = Vec::new();
        for r in &rnames {
            randoms.push(mb.b.random(r)?);
        }
        let snames: Vec<String> = (1..=width)
            .map(|i| mb.fresh(&format!("{kname}_s{i}")))
            .collect();
        let sraw: Vec<&str> = snames.iter().map(|s| s.as_str()).collect();
        let rraw: Vec<&str> = rnames.iter().map(|s| s.as_str()).collect();
        let shares = mb.b.encoder(&kname, &sraw, &rraw)?;
        for (i, s) in shares.iter().enumerate() {
            let sup: HashSet<WireId> = if i < order {
                [randoms[i]].into_iter().collect()
            } else {
                randoms.iter().copied().collect()
            };
            mb.put_support(*s, sup);
        }
        vectors.insert(*kw, shares);
    }
    for pw in p.publics() {
        let id = mb.b.peek(p.wire_name(*pw)).expect("public added").0;
        let v = mb.const_vector(id)?;
        vectors.insert(*pw, v);
    }

    for g in p.gates() {
        let gname = p.wire_name(g.out).to_string();
        let out_vec = match g.op {
            Op::Const0 | Op::Const1 => {
                let head = mb.gate(&format!("{gname}_c"), g.op, &[])?;
                mb.const_vector(head)?
            }
            Op::Pass => vectors[&g.inputs[0]].clone(),
            Op::Not => {
                let v = vectors[&g.inputs[0]].clone();
                mb.sharewise_not(&gname, &v)?
            }
            Op::Xor => {
                let va = vectors[&g.inputs[0]].clone();
                let vb = vectors[&g.inputs[1]].clone();
                mb.sharewise_xor(&gname, &va, &vb)?
            }
            Op::And => {
                let va = vectors[&g.inputs[0]].clone();
                let vb = vectors[&g.inputs[1]].clone();
                mb.gadget_and(&gname, &va, &vb)?
            }
            Op::Or => {
                let va = vectors[&g.inputs[0]].clone();
                let vb = vectors[&g.inputs[1]].clone();
                let na = mb.sharewise_not(&format!("{gname}_a"), &va)?;
                let nb = mb.sharewise_not(&format!("{gname}_b"), &vb)?;
                let conj = mb.gadget_and(&format!("{gname}_c"), &na, &nb)?;
                mb.sharewise_not(&gname, &conj)?
            }
        };
        vectors.insert(g.out, out_vec);
    }

    for out in p.outputs() {
        let v = vectors[out].clone();
        let name = mb.fresh(p.wire_name(*out));
        mb.b.decoder_ids(&name, &v)?;
        mb.b.output(&name)?;
    }
    Ok(mb.b.finish()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{io_equivalent, DEFAULT_COST_CAP};
    use crate::fixtures;
    use crate::verify::{verify, verify_budgeted, VerifyOptions};

    #[test]
    fn freshen_renames_second_copy_only() {
        let a = fixtures::identity_gadget(2);
        let b = fixtures::identity_gadget(2);
        let fresh = freshen_randoms(&[&a, &b]);
        assert!(crate::netlist::same_netlist(&fresh[0], &a));
        let rb: Vec<&str> = fresh[1]
            .randoms()
            .iter()
            .map(|r| fresh[1].wire_name(*r))
            .collect();
        assert_eq!(rb, vec!["r1_2", "r2_2"]);
    }

    #[test]
    fn freshen_keeps_disjoint_randoms_untouched() {
        let a = fixtures::identity_gadget(1);
        let b = fixtures::masked_example();
        let fresh = freshen_randoms(&[&b, &a]);
        assert!(crate::netlist::same_netlist(&fresh[0], &b));
        // identity_gadget's r1 clashes with masked_example's r1.
        let rb: Vec<&str> = fresh[1]
            .randoms()
            .iter()
            .map(|r| fresh[1].wire_name(*r))
            .collect();
        assert_eq!(rb, vec!["r1_2"]);
    }

    #[test]
    fn parallel_composition_of_the_worked_halves() {
        // Rebuilding the two-output masked example from its halves.
        let left = crate::netlist::parse(
            "circuit left\n  public p1\n  secret k1 k2\n  random r1 r2 r3 r4\n\
             \x20 encode k2 -> a1 a2 a3 using r3 r4\n  encode k1 -> a4 a5 a6 using r1 r2\n\
             \x20 node a7 = PASS p1\n  node a9 = XOR a4 a1\n  node a10 = XOR a5 a2\n\
             \x20 node a11 = XOR a6 a3\n  node a12 = XOR a11 a7\n\
             \x20 decode o1 = a9 a10 a12\n  output o1\nend\n",
        )
        .unwrap();
        let right = crate::netlist::parse(
            "circuit right\n  public p2\n  secret k2\n  random q1 q2\n\
             \x20 encode k2 -> b1 b2 b3 using q1 q2\n  node b4 = PASS p2\n\
             \x20 node b5 = AND b1 b4\n  node b6 = AND b2 b4\n  node b7 = AND b3 b4\n\
             \x20 decode o2 = b5 b6 b7\n  output o2\nend\n",
        )
        .unwrap();
        let composed = par_compose(&left, &right).unwrap();
        let reference = fixtures::reference_example();
        assert!(io_equivalent(&reference, &composed.circuit, DEFAULT_COST_CAP)
            .unwrap()
            .is_equivalent());
        assert!(verify(&composed.circuit, &VerifyOptions::new(2))
            .unwrap()
            .verdict
            .is_secure());
        // The shared secret k2 keeps one encoder per side.
        assert_eq!(composed.circuit.encoders().len(), 3);
    }

    #[test]
    fn parallel_composition_of_one_is_itself() {
        let c = fixtures::identity_gadget(1);
        let composed = par_compose_many(&[&c]).unwrap();
        assert!(crate::netlist::same_netlist(&composed.circuit, &c));
    }

    #[test]
    fn random_overlap_is_rejected() {
        let a = fixtures::identity_gadget(1);
        let b = fixtures::identity_gadget(1);
        match par_compose(&a, &b) {
            Err(ComposeError::RandomsOverlap(_)) => {}
            other => panic!("expected overlap error, got {other:?}"),
        }
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let a = fixtures::identity_gadget(1);
        let b = fixtures::identity_gadget(2);
        let fresh = freshen_randoms(&[&a, &b]);
        match par_compose(&fresh[0], &fresh[1]) {
            Err(ComposeError::WidthMismatch(2, 3)) => {}
            other => panic!("expected width mismatch, got {other:?}"),
        }
    }

    #[test]
    fn sequential_composition_of_identity_gadgets() {
        for n in 1..=2 {
            let g = fixtures::identity_gadget(n);
            let gadgets = freshen_randoms(&[&g, &g]);
            let composed = seq_compose(&[&gadgets[0]], &gadgets[1]).unwrap();
            // Still computes the identity.
            let mut rb = CircuitBuilder::new("id");
            rb.secret("k").unwrap();
            rb.gate("t", Op::Pass, &["k"]).unwrap();
            rb.output("t").unwrap();
            let reference = rb.finish().unwrap();
            assert!(io_equivalent(&reference, &composed.circuit, DEFAULT_COST_CAP)
                .unwrap()
                .is_equivalent());
            // And stays secure at the component order.
            assert!(verify(&composed.circuit, &VerifyOptions::new(n))
                .unwrap()
                .verdict
                .is_secure());
            // The boundary wires belong to both parts.
            assert_eq!(composed.parts.len(), 2);
            let mut p0 = composed.parts[0].clone();
            let mut p1 = composed.parts[1].clone();
            p0.sort();
            p1.sort();
            assert_eq!(p0, p1);
        }
    }

    #[test]
    fn composed_identities_break_with_one_extra_probe() {
        // The (m, n+1-m) budget split finds the full-share observation.
        for n in 1..=2usize {
            let g = fixtures::identity_gadget(n);
            let gadgets = freshen_randoms(&[&g, &g]);
            let composed = seq_compose(&[&gadgets[0]], &gadgets[1]).unwrap();
            for m in 1..=n {
                let spec = composed.budget_spec(vec![m, n + 1 - m]);
                let report =
                    verify_budgeted(&composed.circuit, &spec, &VerifyOptions::new(0)).unwrap();
                let witness = report.verdict.witness().unwrap_or_else(|| {
                    panic!("budgets ({m},{}) must expose the secret", n + 1 - m)
                });
                assert_eq!(witness.selection.len(), n + 1);
            }
        }
    }

    #[test]
    fn masked_single_and_gate() {
        for n in 1..=2 {
            let p = fixtures::single_gate(Op::And, 2);
            let masked = isw_transform(&p, n).unwrap();
            assert_eq!(masked.randoms().len(), 2 * n + n * (n + 1) / 2);
            assert!(io_equivalent(&p, &masked, DEFAULT_COST_CAP)
                .unwrap()
                .is_equivalent());
            assert!(verify(&masked, &VerifyOptions::new(n))
                .unwrap()
                .verdict
                .is_secure());
        }
    }

    #[test]
    fn masked_single_xor_gate_needs_no_extra_randoms() {
        let p = fixtures::single_gate(Op::Xor, 2);
        let masked = isw_transform(&p, 2).unwrap();
        // Only the encoder randoms.
        assert_eq!(masked.randoms().len(), 4);
        assert!(io_equivalent(&p, &masked, DEFAULT_COST_CAP)
            .unwrap()
            .is_equivalent());
        assert!(verify(&masked, &VerifyOptions::new(2))
            .unwrap()
            .verdict
            .is_secure());
    }

    #[test]
    fn masked_or_gate() {
        let p = fixtures::single_gate(Op::Or, 2);
        for n in 1..=2 {
            let masked = isw_transform(&p, n).unwrap();
            assert!(io_equivalent(&p, &masked, DEFAULT_COST_CAP)
                .unwrap()
                .is_equivalent());
            assert!(verify(&masked, &VerifyOptions::new(n))
                .unwrap()
                .verdict
                .is_secure());
        }
    }

    #[test]
    fn masking_the_two_output_reference() {
        let p = fixtures::reference_example();
        let masked = isw_transform(&p, 1).unwrap();
        assert!(io_equivalent(&p, &masked, DEFAULT_COST_CAP)
            .unwrap()
            .is_equivalent());
        assert!(verify(&masked, &VerifyOptions::new(1))
            .unwrap()
            .verdict
            .is_secure());
    }

    #[test]
    fn squaring_forces_a_refresh_and_stays_secure() {
        // k & k reuses one sharing on both gadget inputs.
        let mut b = CircuitBuilder::new("square");
        b.secret("k").unwrap();
        b.gate("g", Op::And, &["k", "k"]).unwrap();
        b.output("g").unwrap();
        let p = b.finish().unwrap();
        for n in 1..=2 {
            let masked = isw_transform(&p, n).unwrap();
            assert!(io_equivalent(&p, &masked, DEFAULT_COST_CAP)
                .unwrap()
                .is_equivalent());
            assert!(verify(&masked, &VerifyOptions::new(n))
                .unwrap()
                .verdict
                .is_secure());
        }
    }

    #[test]
    fn fanout_composition_to_two_consumers() {
        let producer = fixtures::identity_gadget(1);
        let consumer = fixtures::identity_gadget(1);
        let all = freshen_randoms(&[&producer, &consumer, &consumer]);
        let composed = share_compose(&all[0], &[(&all[1], "k"), (&all[2], "k")]).unwrap();
        assert_eq!(composed.circuit.outputs().len(), 2);
        assert!(verify(&composed.circuit, &VerifyOptions::new(1))
            .unwrap()
            .verdict
            .is_secure());
        // Single consumer fan-out is just sequential composition.
        let two = freshen_randoms(&[&producer, &consumer]);
        let fan = share_compose(&two[0], &[(&two[1], "k")]).unwrap();
        let seq = seq_compose(&[&two[0]], &two[1]).unwrap();
        assert_eq!(
            crate::netlist::serialize(&fan.circuit).replace("fan_", ""),
            crate::netlist::serialize(&seq.circuit).replace("seq_", "")
        );
    }
}
