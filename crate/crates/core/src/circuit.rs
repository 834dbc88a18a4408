//! Circuit intermediate representation.
//!
//! A [`Circuit`] is an acyclic gate network with three kinds of inputs
//! (public, secret, random), optional input encoders that split each
//! secret into masked shares, and optional output decoders that fold
//! share tuples back into single bits. Gates internal to encoders and
//! decoders are not materialized; their semantics are part of the
//! [`Encoder`] / [`Decoder`] records, which keeps the observable node
//! set exactly equal to the share wires plus the explicit gates.
//!
//! Circuits are immutable once built. All operations on them are pure,
//! so a circuit can be shared freely across threads.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Dense index of a wire within one circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WireId(pub u32);

impl WireId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// What a wire is, fixed at creation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Public,
    Secret,
    Random,
    /// Encoder share or gate output.
    Internal,
    /// Decoded circuit output.
    Output,
}

/// Gate operators. Binary ops take two inputs, `Not`/`Pass` one,
/// constants none. Wider gates are desugared before construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Xor,
    And,
    Or,
    Not,
    Pass,
    Const0,
    Const1,
}

impl Op {
    pub fn arity(self) -> usize {
        match self {
            Op::Xor | Op::And | Op::Or => 2,
            Op::Not | Op::Pass => 1,
            Op::Const0 | Op::Const1 => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Op::Xor => "XOR",
            Op::And => "AND",
            Op::Or => "OR",
            Op::Not => "NOT",
            Op::Pass => "PASS",
            Op::Const0 => "CONST0",
            Op::Const1 => "CONST1",
        }
    }

    pub fn from_name(s: &str) -> Option<Op> {
        Some(match s {
            "XOR" => Op::Xor,
            "AND" => Op::And,
            "OR" => Op::Or,
            "NOT" => Op::Not,
            "PASS" => Op::Pass,
            "CONST0" => Op::Const0,
            "CONST1" => Op::Const1,
            _ => return None,
        })
    }

    pub(crate) fn apply(self, a: bool, b: bool) -> bool {
        match self {
            Op::Xor => a ^ b,
            Op::And => a & b,
            Op::Or => a | b,
            Op::Not => !a,
            Op::Pass => a,
            Op::Const0 => false,
            Op::Const1 => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub out: WireId,
    pub op: Op,
    pub inputs: Vec<WireId>,
}

/// One (n+1)-way split of a secret: shares are `r_1, ..., r_n,
/// k ^ r_1 ^ ... ^ r_n`. The XOR gates computing the last share are
/// internal and unobservable; the share wires themselves are nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoder {
    pub secret: WireId,
    pub randoms: Vec<WireId>,
    pub shares: Vec<WireId>,
}

/// XOR fold of a share tuple into one output wire. Fold gates are
/// internal and unobservable; the inputs are ordinary nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoder {
    pub inputs: Vec<WireId>,
    pub out: WireId,
}

/// How a wire's value is produced during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Def {
    Input,
    Share { encoder: usize, index: usize },
    Gate { gate: usize },
    Decoded { decoder: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct WireInfo {
    pub name: String,
    pub role: Role,
    pub def: Def,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    pub(crate) name: String,
    pub(crate) wires: Vec<WireInfo>,
    pub(crate) by_name: HashMap<String, WireId>,
    pub(crate) publics: Vec<WireId>,
    pub(crate) secrets: Vec<WireId>,
    pub(crate) randoms: Vec<WireId>,
    pub(crate) gates: Vec<Gate>,
    pub(crate) encoders: Vec<Encoder>,
    pub(crate) decoders: Vec<Decoder>,
    pub(crate) outputs: Vec<WireId>,
    /// Share wires and gate outputs, in definition order.
    pub(crate) observable: Vec<WireId>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("duplicate wire name `{0}`")]
    DuplicateName(String),
    #[error("`{0}` is not a valid identifier")]
    BadIdentifier(String),
    #[error("unknown wire `{0}`")]
    UnknownWire(String),
    #[error("gate `{name}`: op {op} expects {expected} inputs, got {got}")]
    Arity {
        name: String,
        op: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("random `{0}` is already used by another encoder")]
    RandomReuse(String),
    #[error("encoder for `{secret}`: {shares} shares require {} randoms, got {randoms}", shares - 1)]
    EncoderShape {
        secret: String,
        shares: usize,
        randoms: usize,
    },
    #[error("`{wire}` cannot be used as {context}: role {role:?}")]
    BadRole {
        wire: String,
        context: &'static str,
        role: Role,
    },
    #[error("secret `{0}` is encoded and may not feed a gate directly")]
    EncodedSecretRead(String),
    #[error("random `{0}` is owned by an encoder and may not feed a gate")]
    EncoderRandomRead(String),
    #[error("decoder needs at least one input")]
    EmptyDecoder,
    #[error("output `{0}` must be a gate or decoder result")]
    BadOutput(String),
    #[error("circuit has no outputs")]
    NoOutputs,
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Incremental circuit constructor. Wires must be defined before use,
/// which makes the gate list topological by construction.
#[derive(Debug, Clone)]
pub struct CircuitBuilder {
    name: String,
    wires: Vec<WireInfo>,
    by_name: HashMap<String, WireId>,
    publics: Vec<WireId>,
    secrets: Vec<WireId>,
    randoms: Vec<WireId>,
    gates: Vec<Gate>,
    encoders: Vec<Encoder>,
    decoders: Vec<Decoder>,
    outputs: Vec<WireId>,
    encoder_randoms: Vec<bool>,
    encoded_secrets: Vec<bool>,
}

impl CircuitBuilder {
    pub fn new(name: &str) -> Self {
        CircuitBuilder {
            name: name.to_string(),
            wires: Vec::new(),
            by_name: HashMap::new(),
            publics: Vec::new(),
            secrets: Vec::new(),
            randoms: Vec::new(),
            gates: Vec::new(),
            encoders: Vec::new(),
            decoders: Vec::new(),
            outputs: Vec::new(),
            encoder_randoms: Vec::new(),
            encoded_secrets: Vec::new(),
        }
    }

    fn add_wire(&mut self, name: &str, role: Role, def: Def) -> Result<WireId, BuildError> {
        if !is_identifier(name) {
            return Err(BuildError::BadIdentifier(name.to_string()));
        }
        if self.by_name.contains_key(name) {
            return Err(BuildError::DuplicateName(name.to_string()));
        }
        let id = WireId(self.wires.len() as u32);
        self.wires.push(WireInfo {
            name: name.to_string(),
            role,
            def,
        });
        self.by_name.insert(name.to_string(), id);
        self.encoder_randoms.push(false);
        self.encoded_secrets.push(false);
        Ok(id)
    }

    pub fn public(&mut self, name: &str) -> Result<WireId, BuildError> {
        let id = self.add_wire(name, Role::Public, Def::Input)?;
        self.publics.push(id);
        Ok(id)
    }

    pub fn secret(&mut self, name: &str) -> Result<WireId, BuildError> {
        let id = self.add_wire(name, Role::Secret, Def::Input)?;
        self.secrets.push(id);
        Ok(id)
    }

    pub fn random(&mut self, name: &str) -> Result<WireId, BuildError> {
        let id = self.add_wire(name, Role::Random, Def::Input)?;
        self.randoms.push(id);
        Ok(id)
    }

    fn lookup(&self, name: &str) -> Result<WireId, BuildError> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| BuildError::UnknownWire(name.to_string()))
    }

    /// Split `secret` into `|randoms| + 1` shares named `share_names`.
    /// Shares carry `r_1, ..., r_n, k ^ r_1 ^ ... ^ r_n` in order.
    pub fn encoder(
        &mut self,
        secret: &str,
        share_names: &[&str],
        randoms: &[&str],
    ) -> Result<Vec<WireId>, BuildError> {
        let secret_id = self.lookup(secret)?;
        if self.wires[secret_id.index()].role != Role::Secret {
            return Err(BuildError::BadRole {
                wire: secret.to_string(),
                context: "an encoder input",
                role: self.wires[secret_id.index()].role,
            });
        }
        if share_names.len() != randoms.len() + 1 || share_names.is_empty() {
            return Err(BuildError::EncoderShape {
                secret: secret.to_string(),
                shares: share_names.len(),
                randoms: randoms.len(),
            });
        }
        let mut random_ids = Vec::with_capacity(randoms.len());
        for r in randoms {
            let id = self.lookup(r)?;
            if self.wires[id.index()].role != Role::Random {
                return Err(BuildError::BadRole {
                    wire: r.to_string(),
                    context: "an encoder random",
                    role: self.wires[id.index()].role,
                });
            }
            if self.encoder_randoms[id.index()] {
                return Err(BuildError::RandomReuse(r.to_string()));
            }
            random_ids.push(id);
        }
        let encoder_index = self.encoders.len();
        let mut share_ids = Vec::with_capacity(share_names.len());
        for (i, s) in share_names.iter().enumerate() {
            let id = self.add_wire(
                s,
                Role::Internal,
                Def::Share {
                    encoder: encoder_index,
                    index: i,
                },
            )?;
            share_ids.push(id);
        }
        for id in &random_ids {
            self.encoder_randoms[id.index()] = true;
        }
        self.encoded_secrets[secret_id.index()] = true;
        self.encoders.push(Encoder {
            secret: secret_id,
            randoms: random_ids,
            shares: share_ids.clone(),
        });
        Ok(share_ids)
    }

    pub fn gate(&mut self, name: &str, op: Op, inputs: &[&str]) -> Result<WireId, BuildError> {
        let ids = inputs
            .iter()
            .map(|w| self.lookup(w))
            .collect::<Result<Vec<_>, _>>()?;
        self.gate_ids(name, op, &ids)
    }

    pub fn gate_ids(&mut self, name: &str, op: Op, inputs: &[WireId]) -> Result<WireId, BuildError> {
        if inputs.len() != op.arity() {
            return Err(BuildError::Arity {
                name: name.to_string(),
                op: op.name(),
                expected: op.arity(),
                got: inputs.len(),
            });
        }
        for id in inputs {
            let info = &self.wires[id.index()];
            match info.role {
                Role::Secret if self.encoded_secrets[id.index()] => {
                    return Err(BuildError::EncodedSecretRead(info.name.clone()));
                }
                Role::Random if self.encoder_randoms[id.index()] => {
                    return Err(BuildError::EncoderRandomRead(info.name.clone()));
                }
                Role::Output => {
                    return Err(BuildError::BadRole {
                        wire: info.name.clone(),
                        context: "a gate input",
                        role: Role::Output,
                    });
                }
                _ => {}
            }
        }
        let gate_index = self.gates.len();
        let out = self.add_wire(name, Role::Internal, Def::Gate { gate: gate_index })?;
        self.gates.push(Gate {
            out,
            op,
            inputs: inputs.to_vec(),
        });
        Ok(out)
    }

    /// XOR-fold the given observable wires into a fresh output wire.
    pub fn decoder(&mut self, name: &str, inputs: &[&str]) -> Result<WireId, BuildError> {
        let ids = inputs
            .iter()
            .map(|w| self.lookup(w))
            .collect::<Result<Vec<_>, _>>()?;
        self.decoder_ids(name, &ids)
    }

    pub fn decoder_ids(&mut self, name: &str, inputs: &[WireId]) -> Result<WireId, BuildError> {
        if inputs.is_empty() {
            return Err(BuildError::EmptyDecoder);
        }
        for id in inputs {
            let info = &self.wires[id.index()];
            if !matches!(info.def, Def::Share { .. } | Def::Gate { .. }) {
                return Err(BuildError::BadRole {
                    wire: info.name.clone(),
                    context: "a decoder input",
                    role: info.role,
                });
            }
        }
        let decoder_index = self.decoders.len();
        let out = self.add_wire(
            name,
            Role::Output,
            Def::Decoded {
                decoder: decoder_index,
            },
        )?;
        self.decoders.push(Decoder {
            inputs: inputs.to_vec(),
            out,
        });
        Ok(out)
    }

    /// Mark a gate output or decoded wire as a circuit output.
    pub fn output(&mut self, name: &str) -> Result<(), BuildError> {
        let id = self.lookup(name)?;
        match self.wires[id.index()].def {
            Def::Gate { .. } | Def::Decoded { .. } => {
                self.outputs.push(id);
                Ok(())
            }
            _ => Err(BuildError::BadOutput(name.to_string())),
        }
    }

    /// Look up an already-added wire.
    pub fn peek(&self, name: &str) -> Option<(WireId, Role)> {
        self.by_name
            .get(name)
            .map(|id| (*id, self.wires[id.index()].role))
    }

    pub fn wire_name_of(&self, id: WireId) -> String {
        self.wires[id.index()].name.clone()
    }

    /// Mark an output by wire id.
    pub fn output_id(&mut self, id: WireId) -> Result<(), BuildError> {
        match self.wires[id.index()].def {
            Def::Gate { .. } | Def::Decoded { .. } => {
                self.outputs.push(id);
                Ok(())
            }
            _ => Err(BuildError::BadOutput(self.wires[id.index()].name.clone())),
        }
    }

    pub fn finish(self) -> Result<Circuit, BuildError> {
        if self.outputs.is_empty() {
            return Err(BuildError::NoOutputs);
        }
        let mut observable = Vec::new();
        for (i, info) in self.wires.iter().enumerate() {
            if matches!(info.def, Def::Share { .. } | Def::Gate { .. }) {
                observable.push(WireId(i as u32));
            }
        }
        Ok(Circuit {
            name: self.name,
            wires: self.wires,
            by_name: self.by_name,
            publics: self.publics,
            secrets: self.secrets,
            randoms: self.randoms,
            gates: self.gates,
            encoders: self.encoders,
            decoders: self.decoders,
            outputs: self.outputs,
            observable,
        })
    }
}

impl Circuit {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn wire(&self, name: &str) -> Option<WireId> {
        self.by_name.get(name).copied()
    }

    pub fn wire_name(&self, id: WireId) -> &str {
        &self.wires[id.index()].name
    }

    pub fn role(&self, id: WireId) -> Role {
        self.wires[id.index()].role
    }

    pub fn def(&self, id: WireId) -> Def {
        self.wires[id.index()].def
    }

    pub fn wire_count(&self) -> usize {
        self.wires.len()
    }

    pub fn publics(&self) -> &[WireId] {
        &self.publics
    }

    pub fn secrets(&self) -> &[WireId] {
        &self.secrets
    }

    pub fn randoms(&self) -> &[WireId] {
        &self.randoms
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn encoders(&self) -> &[Encoder] {
        &self.encoders
    }

    pub fn decoders(&self) -> &[Decoder] {
        &self.decoders
    }

    pub fn outputs(&self) -> &[WireId] {
        &self.outputs
    }

    /// Nodes the adversary may probe: encoder shares and gate outputs.
    pub fn observable(&self) -> &[WireId] {
        &self.observable
    }

    pub fn is_observable(&self, id: WireId) -> bool {
        matches!(self.def(id), Def::Share { .. } | Def::Gate { .. })
    }

    pub fn is_random_free(&self) -> bool {
        self.randoms.is_empty() && self.encoders.is_empty() && self.decoders.is_empty()
    }

    /// Resolve a list of node labels, for building selections in tests
    /// and CLI code.
    pub fn nodes(&self, names: &[&str]) -> Vec<WireId> {
        names
            .iter()
            .map(|n| self.wire(n).unwrap_or_else(|| panic!("no wire named `{n}`")))
            .collect()
    }

    /// Extra randoms: random inputs not owned by any encoder.
    pub fn extra_randoms(&self) -> Vec<WireId> {
        let owned: Vec<WireId> = self
            .encoders
            .iter()
            .flat_map(|e| e.randoms.iter().copied())
            .collect();
        self.randoms
            .iter()
            .copied()
            .filter(|r| !owned.contains(r))
            .collect()
    }

    /// Total number of 2-input-equivalent gates, counting the XORs
    /// inside encoders and decoders. This is the `size` reported by
    /// the bench harness.
    pub fn gate_count(&self) -> usize {
        let enc: usize = self.encoders.iter().map(|e| e.randoms.len()).sum();
        let dec: usize = self.decoders.iter().map(|d| d.inputs.len() - 1).sum();
        self.gates.len() + enc + dec
    }

    /// Share width (n+1) if the circuit is fully split: every secret
    /// encoded, secrets and encoder randoms read only by their
    /// encoders, every output decoded, and all encoders/decoders of
    /// one consistent width.
    pub fn split_width(&self) -> Result<usize, SplitError> {
        if self.encoders.is_empty() {
            return Err(SplitError::NoEncoders);
        }
        let width = self.encoders[0].shares.len();
        for e in &self.encoders {
            if e.shares.len() != width {
                return Err(SplitError::MixedWidth);
            }
        }
        for d in &self.decoders {
            if d.inputs.len() != width {
                return Err(SplitError::MixedWidth);
            }
        }
        for k in &self.secrets {
            if !self.encoders.iter().any(|e| e.secret == *k) {
                return Err(SplitError::UnencodedSecret(self.wire_name(*k).to_string()));
            }
        }
        for out in &self.outputs {
            if !matches!(self.def(*out), Def::Decoded { .. }) {
                return Err(SplitError::UndecodedOutput(
                    self.wire_name(*out).to_string(),
                ));
            }
        }
        Ok(width)
    }

    /// Raw input wires (publics, secrets, randoms) a node may depend
    /// on, by graph reachability. Over-approximates the semantic
    /// dependency set; encoder shares expand to the encoder's secret
    /// and randoms.
    pub fn dependent_inputs(&self, node: WireId) -> Result<Vec<WireId>, EvalError> {
        if !self.is_observable(node) {
            return Err(EvalError::NotObservable(self.wire_name(node).to_string()));
        }
        let mut seen = vec![false; self.wires.len()];
        let mut stack = vec![node];
        let mut result = Vec::new();
        while let Some(w) = stack.pop() {
            if seen[w.index()] {
                continue;
            }
            seen[w.index()] = true;
            match self.def(w) {
                Def::Input => result.push(w),
                Def::Share { encoder, index } => {
                    let e = &self.encoders[encoder];
                    if index < e.randoms.len() {
                        stack.push(e.randoms[index]);
                    } else {
                        stack.push(e.secret);
                        stack.extend(e.randoms.iter().copied());
                    }
                }
                Def::Gate { gate } => stack.extend(self.gates[gate].inputs.iter().copied()),
                Def::Decoded { decoder } => {
                    stack.extend(self.decoders[decoder].inputs.iter().copied())
                }
            }
        }
        result.sort();
        Ok(result)
    }

    /// For every observable node, the set of encoder shares it can
    /// reach, as (encoder, share index) pairs packed into a bitmask
    /// per encoder. Used by selection pruning.
    pub(crate) fn share_dependencies(&self) -> Vec<Vec<u64>> {
        let n_enc = self.encoders.len();
        let mut deps: Vec<Vec<u64>> = vec![vec![0; n_enc]; self.wires.len()];
        for (ei, e) in self.encoders.iter().enumerate() {
            for (si, s) in e.shares.iter().enumerate() {
                deps[s.index()][ei] |= 1 << si;
            }
        }
        for g in &self.gates {
            let mut acc = vec![0u64; n_enc];
            for input in &g.inputs {
                for (a, b) in acc.iter_mut().zip(&deps[input.index()]) {
                    *a |= *b;
                }
            }
            deps[g.out.index()] = acc;
        }
        deps
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SplitError {
    #[error("circuit has no input encoders")]
    NoEncoders,
    #[error("encoders and decoders disagree on share width")]
    MixedWidth,
    #[error("secret `{0}` is not encoded")]
    UnencodedSecret(String),
    #[error("output `{0}` is not decoded")]
    UndecodedOutput(String),
}

/// Total map from the circuit inputs to bits.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    values: HashMap<WireId, bool>,
}

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    /// Build from `(input name, bit)` pairs.
    pub fn from_pairs(c: &Circuit, pairs: &[(&str, bool)]) -> Result<Self, EvalError> {
        let mut a = Assignment::new();
        for (name, bit) in pairs {
            let id = c
                .wire(name)
                .ok_or_else(|| EvalError::UnknownWire(name.to_string()))?;
            a.set(id, *bit);
        }
        Ok(a)
    }

    pub fn set(&mut self, wire: WireId, bit: bool) {
        self.values.insert(wire, bit);
    }

    pub fn get(&self, wire: WireId) -> Option<bool> {
        self.values.get(&wire).copied()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("unknown wire `{0}`")]
    UnknownWire(String),
    #[error("node `{0}` is not observable")]
    NotObservable(String),
    #[error("assignment does not cover input `{0}`")]
    PartialAssignment(String),
}

impl Circuit {
    /// Evaluate every wire under a total input assignment and return
    /// the values of the selected observable nodes, in selection
    /// order. Deterministic: one topological pass.
    pub fn evaluate(&self, nu: &Assignment, selection: &[WireId]) -> Result<Vec<bool>, EvalError> {
        for sel in selection {
            if sel.index() >= self.wires.len() || !self.is_observable(*sel) {
                let name = if sel.index() < self.wires.len() {
                    self.wire_name(*sel).to_string()
                } else {
                    format!("#{}", sel.0)
                };
                return Err(EvalError::NotObservable(name));
            }
        }
        let values = self.evaluate_all(nu)?;
        Ok(selection.iter().map(|s| values[s.index()]).collect())
    }

    /// Evaluate every wire, including decoded outputs.
    pub fn evaluate_all(&self, nu: &Assignment) -> Result<Vec<bool>, EvalError> {
        let mut values = vec![false; self.wires.len()];
        for input in self
            .publics
            .iter()
            .chain(&self.secrets)
            .chain(&self.randoms)
        {
            values[input.index()] = nu
                .get(*input)
                .ok_or_else(|| EvalError::PartialAssignment(self.wire_name(*input).to_string()))?;
        }
        for (i, info) in self.wires.iter().enumerate() {
            match info.def {
                Def::Input => {}
                Def::Share { encoder, index } => {
                    let e = &self.encoders[encoder];
                    values[i] = if index < e.randoms.len() {
                        values[e.randoms[index].index()]
                    } else {
                        let mut v = values[e.secret.index()];
                        for r in &e.randoms {
                            v ^= values[r.index()];
                        }
                        v
                    };
                }
                Def::Gate { gate } => {
                    let g = &self.gates[gate];
                    let a = g.inputs.first().map(|w| values[w.index()]).unwrap_or(false);
                    let b = g.inputs.get(1).map(|w| values[w.index()]).unwrap_or(false);
                    values[i] = g.op.apply(a, b);
                }
                Def::Decoded { decoder } => {
                    values[i] = self.decoders[decoder]
                        .inputs
                        .iter()
                        .fold(false, |acc, w| acc ^ values[w.index()]);
                }
            }
        }
        Ok(values)
    }

    /// Evaluate the circuit outputs under a total assignment.
    pub fn evaluate_outputs(&self, nu: &Assignment) -> Result<Vec<bool>, EvalError> {
        let values = self.evaluate_all(nu)?;
        Ok(self.outputs.iter().map(|o| values[o.index()]).collect())
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::netlist::serialize(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn const_gate_ignores_assignment() {
        let mut b = CircuitBuilder::new("c");
        b.public("p").unwrap();
        b.gate("t", Op::Const1, &[]).unwrap();
        b.output("t").unwrap();
        let c = b.finish().unwrap();
        for bit in [false, true] {
            let nu = Assignment::from_pairs(&c, &[("p", bit)]).unwrap();
            assert_eq!(c.evaluate(&nu, &c.nodes(&["t"])).unwrap(), vec![true]);
        }
    }

    #[test]
    fn masked_example_evaluation() {
        // p1 = r1 = k2 = 0, everything else 1; probing (a11, a1) reads (0, 1).
        let c = fixtures::masked_example();
        let nu = Assignment::from_pairs(
            &c,
            &[
                ("p1", false),
                ("r1", false),
                ("k2", false),
                ("p2", true),
                ("k1", true),
                ("r2", true),
                ("r3", true),
                ("r4", true),
            ],
        )
        .unwrap();
        let got = c.evaluate(&nu, &c.nodes(&["a11", "a1"])).unwrap();
        assert_eq!(got, vec![false, true]);
    }

    #[test]
    fn reference_example_evaluation() {
        // (p1 ^ k1 ^ k2, k2 & p2) at (p1=1, k1=0, k2=1, p2=1) is (0, 1).
        let c = fixtures::reference_example();
        let nu = Assignment::from_pairs(&c, &[("p1", true), ("k1", false), ("k2", true), ("p2", true)])
            .unwrap();
        let got = c.evaluate(&nu, &c.nodes(&["t2", "t3"])).unwrap();
        assert_eq!(got, vec![false, true]);
    }

    #[test]
    fn evaluation_is_deterministic() {
        let c = fixtures::masked_example();
        let nu = Assignment::from_pairs(
            &c,
            &[
                ("p1", true),
                ("p2", false),
                ("k1", true),
                ("k2", true),
                ("r1", false),
                ("r2", true),
                ("r3", true),
                ("r4", false),
            ],
        )
        .unwrap();
        let first = c.evaluate_all(&nu).unwrap();
        for _ in 0..3 {
            assert_eq!(c.evaluate_all(&nu).unwrap(), first);
        }
    }

    #[test]
    fn partial_assignment_is_rejected() {
        let c = fixtures::reference_example();
        let nu = Assignment::from_pairs(&c, &[("p1", true)]).unwrap();
        match c.evaluate(&nu, &[]) {
            Err(EvalError::PartialAssignment(_)) => {}
            other => panic!("expected partial-assignment error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_selection_is_rejected() {
        let c = fixtures::reference_example();
        let nu = Assignment::from_pairs(&c, &[("p1", true), ("p2", true), ("k1", true), ("k2", true)])
            .unwrap();
        // Raw inputs are not observable nodes.
        let sel = vec![c.wire("p1").unwrap()];
        match c.evaluate(&nu, &sel) {
            Err(EvalError::NotObservable(w)) => assert_eq!(w, "p1"),
            other => panic!("expected not-observable error, got {other:?}"),
        }
    }

    #[test]
    fn encoder_share_semantics() {
        // n = 1, k = 1, r1 = 0 gives shares (0, 1).
        let mut b = CircuitBuilder::new("enc");
        b.secret("k").unwrap();
        b.random("r1").unwrap();
        b.encoder("k", &["s1", "s2"], &["r1"]).unwrap();
        b.decoder("o", &["s1", "s2"]).unwrap();
        b.output("o").unwrap();
        let c = b.finish().unwrap();
        let nu = Assignment::from_pairs(&c, &[("k", true), ("r1", false)]).unwrap();
        let got = c.evaluate(&nu, &c.nodes(&["s1", "s2"])).unwrap();
        assert_eq!(got, vec![false, true]);
    }

    #[test]
    fn degenerate_single_share_encoder() {
        // n = 0: the single share is the secret itself.
        let mut b = CircuitBuilder::new("enc0");
        b.secret("k").unwrap();
        b.encoder("k", &["s1"], &[]).unwrap();
        b.decoder("o", &["s1"]).unwrap();
        b.output("o").unwrap();
        let c = b.finish().unwrap();
        for k in [false, true] {
            let nu = Assignment::from_pairs(&c, &[("k", k)]).unwrap();
            assert_eq!(c.evaluate_outputs(&nu).unwrap(), vec![k]);
        }
    }

    #[test]
    fn encoder_random_reuse_is_rejected() {
        let mut b = CircuitBuilder::new("bad");
        b.secret("k1").unwrap();
        b.secret("k2").unwrap();
        b.random("r1").unwrap();
        b.encoder("k1", &["s1", "s2"], &["r1"]).unwrap();
        assert_eq!(
            b.encoder("k2", &["t1", "t2"], &["r1"]).unwrap_err(),
            BuildError::RandomReuse("r1".to_string())
        );
    }

    #[test]
    fn decoder_arity_matters() {
        let mut b = CircuitBuilder::new("bad");
        b.secret("k").unwrap();
        b.random("r1").unwrap();
        b.encoder("k", &["s1", "s2"], &["r1"]).unwrap();
        assert_eq!(b.decoder("o", &[]).unwrap_err(), BuildError::EmptyDecoder);
    }

    #[test]
    fn decode_of_encode_is_identity() {
        // For every random valuation the decoder returns the secret.
        let mut b = CircuitBuilder::new("roundtrip");
        b.secret("k").unwrap();
        b.random("r1").unwrap();
        b.random("r2").unwrap();
        b.encoder("k", &["s1", "s2", "s3"], &["r1", "r2"]).unwrap();
        b.decoder("o", &["s1", "s2", "s3"]).unwrap();
        b.output("o").unwrap();
        let c = b.finish().unwrap();
        for k in [false, true] {
            for r in 0..4u32 {
                let nu = Assignment::from_pairs(
                    &c,
                    &[("k", k), ("r1", r & 1 != 0), ("r2", r & 2 != 0)],
                )
                .unwrap();
                assert_eq!(c.evaluate_outputs(&nu).unwrap(), vec![k]);
            }
        }
    }

    #[test]
    fn decoder_folds_by_xor() {
        // Share values (1, 0, 1) decode to 0.
        let mut b = CircuitBuilder::new("fold");
        b.public("x").unwrap();
        b.gate("g1", Op::Const1, &[]).unwrap();
        b.gate("g2", Op::Const0, &[]).unwrap();
        b.gate("g3", Op::Const1, &[]).unwrap();
        b.decoder("o", &["g1", "g2", "g3"]).unwrap();
        b.output("o").unwrap();
        let c = b.finish().unwrap();
        let nu = Assignment::from_pairs(&c, &[("x", false)]).unwrap();
        assert_eq!(c.evaluate_outputs(&nu).unwrap(), vec![false]);
    }

    #[test]
    fn masked_example_left_decoder_reproduces_reference() {
        // The left output triple decodes to p1 ^ k1 ^ k2 for all 16
        // random valuations.
        let c = fixtures::masked_example();
        for bits in 0..256u32 {
            let nu = Assignment::from_pairs(
                &c,
                &[
                    ("p1", bits & 1 != 0),
                    ("p2", bits & 2 != 0),
                    ("k1", bits & 4 != 0),
                    ("k2", bits & 8 != 0),
                    ("r1", bits & 16 != 0),
                    ("r2", bits & 32 != 0),
                    ("r3", bits & 64 != 0),
                    ("r4", bits & 128 != 0),
                ],
            )
            .unwrap();
            let out = c.evaluate_outputs(&nu).unwrap();
            let expect = (bits & 1 != 0) ^ (bits & 4 != 0) ^ (bits & 8 != 0);
            assert_eq!(out[0], expect);
        }
    }

    #[test]
    fn dependent_inputs_of_const_is_empty() {
        let mut b = CircuitBuilder::new("c");
        b.public("p").unwrap();
        b.gate("t", Op::Const0, &[]).unwrap();
        b.output("t").unwrap();
        let c = b.finish().unwrap();
        assert!(c.dependent_inputs(c.wire("t").unwrap()).unwrap().is_empty());
    }

    #[test]
    fn dependent_inputs_direct_leaves() {
        let c = fixtures::reference_example();
        let deps = c.dependent_inputs(c.wire("t3").unwrap()).unwrap();
        let mut names: Vec<&str> = deps.iter().map(|w| c.wire_name(*w)).collect();
        names.sort();
        assert_eq!(names, vec!["k2", "p2"]);
    }

    #[test]
    fn dependent_inputs_through_shares() {
        // a11 reaches both encoders, so it depends on all of k1's
        // encoder sources.
        let c = fixtures::masked_example();
        let deps = c.dependent_inputs(c.wire("a11").unwrap()).unwrap();
        for name in ["k1", "r1", "r2", "k2", "r3", "r4"] {
            assert!(deps.contains(&c.wire(name).unwrap()), "missing {name}");
        }
    }

    #[test]
    fn split_width_detects_unencoded_secret() {
        let mut b = CircuitBuilder::new("bad");
        b.secret("k1").unwrap();
        b.secret("k2").unwrap();
        b.random("r1").unwrap();
        b.encoder("k1", &["s1", "s2"], &["r1"]).unwrap();
        b.decoder("o", &["s1", "s2"]).unwrap();
        b.output("o").unwrap();
        let c = b.finish().unwrap();
        assert_eq!(
            c.split_width().unwrap_err(),
            SplitError::UnencodedSecret("k2".to_string())
        );
    }

    #[test]
    fn circuits_evaluate_from_many_threads() {
        let c = std::sync::Arc::new(fixtures::masked_example());
        let handles: Vec<_> = (0..4)
            .map(|t| {
                let c = c.clone();
                std::thread::spawn(move || {
                    let nu = Assignment::from_pairs(
                        &c,
                        &[
                            ("p1", t & 1 != 0),
                            ("p2", t & 2 != 0),
                            ("k1", false),
                            ("k2", true),
                            ("r1", false),
                            ("r2", false),
                            ("r3", true),
                            ("r4", false),
                        ],
                    )
                    .unwrap();
                    c.evaluate_outputs(&nu).unwrap()
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
    }
}
