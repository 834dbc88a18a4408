//! Reference circuits used across the test suites, the bench corpus,
//! and the documentation examples.

use crate::circuit::{Circuit, CircuitBuilder, Op};
use crate::netlist;

/// Random-free two-output circuit computing `(p1^k1^k2, k2&p2)`.
pub fn reference_example() -> Circuit {
    netlist::parse(
        "circuit reference_example\n\
         \x20 public p1 p2\n\
         \x20 secret k1 k2\n\
         \x20 node t1 = XOR p1 k1\n\
         \x20 node t2 = XOR t1 k2\n\
         \x20 node t3 = AND k2 p2\n\
         \x20 output t2 t3\n\
         end\n",
    )
    .expect("reference_example is well-formed")
}

/// Hand-masked 3-share version of [`reference_example`]: two encoders
/// (randoms r1..r4), a share-wise XOR tree for the left output and a
/// share-wise AND-with-public tree for the right output. 15 observable
/// nodes a1..a15. Withstands any two probes.
pub fn masked_example() -> Circuit {
    netlist::parse(
        "circuit masked_example\n\
         \x20 public p1 p2\n\
         \x20 secret k1 k2\n\
         \x20 random r1 r2 r3 r4\n\
         \x20 encode k2 -> a1 a2 a3 using r3 r4\n\
         \x20 encode k1 -> a4 a5 a6 using r1 r2\n\
         \x20 node a7 = PASS p1\n\
         \x20 node a8 = PASS p2\n\
         \x20 node a9 = XOR a4 a1\n\
         \x20 node a10 = XOR a5 a2\n\
         \x20 node a11 = XOR a6 a3\n\
         \x20 node a12 = XOR a11 a7\n\
         \x20 node a13 = AND a1 a8\n\
         \x20 node a14 = AND a2 a8\n\
         \x20 node a15 = AND a3 a8\n\
         \x20 decode o1 = a9 a10 a12\n\
         \x20 decode o2 = a13 a14 a15\n\
         \x20 output o1 o2\n\
         end\n",
    )
    .expect("masked_example is well-formed")
}

/// 2-share negation gadget with one extra random: shares (s1, s2),
/// nodes `a3 = x`, `a4 = !s1`, outputs `(a4^a3, s2^a3)`. Its 8-row
/// truth table is the standard worked example for the table oracle.
pub fn negation_gadget() -> Circuit {
    netlist::parse(
        "circuit negation_gadget\n\
         \x20 secret k\n\
         \x20 random r1 x\n\
         \x20 encode k -> s1 s2 using r1\n\
         \x20 node a3 = PASS x\n\
         \x20 node a4 = NOT s1\n\
         \x20 node a5 = XOR a4 a3\n\
         \x20 node a6 = XOR s2 a3\n\
         \x20 decode o = a5 a6\n\
         \x20 output o\n\
         end\n",
    )
    .expect("negation_gadget is well-formed")
}

/// The (n+1)-share identity gadget: encode `k`, feed the shares
/// straight into the decoder. Its only observable nodes are the share
/// wires, and it withstands any `order` probes.
pub fn identity_gadget(order: usize) -> Circuit {
    let mut b = CircuitBuilder::new("identity_gadget");
    b.secret("k").unwrap();
    let randoms: Vec<String> = (1..=order).map(|i| format!("r{i}")).collect();
    for r in &randoms {
        b.random(r).unwrap();
    }
    let shares: Vec<String> = (1..=order + 1).map(|i| format!("s{i}")).collect();
    let share_refs: Vec<&str> = shares.iter().map(|s| s.as_str()).collect();
    let random_refs: Vec<&str> = randoms.iter().map(|s| s.as_str()).collect();
    b.encoder("k", &share_refs, &random_refs).unwrap();
    b.decoder("o", &share_refs).unwrap();
    b.output("o").unwrap();
    b.finish().unwrap()
}

/// Random-free single-gate circuits, handy as synthesis inputs.
pub fn single_gate(op: Op, secret_inputs: usize) -> Circuit {
    let mut b = CircuitBuilder::new("single_gate");
    let mut names = Vec::new();
    for i in 0..op.arity() {
        let name = if i < secret_inputs {
            format!("k{}", i + 1)
        } else {
            format!("p{}", i + 1)
        };
        if i < secret_inputs {
            b.secret(&name).unwrap();
        } else {
            b.public(&name).unwrap();
        }
        names.push(name);
    }
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    b.gate("g", op, &refs).unwrap();
    b.output("g").unwrap();
    b.finish().unwrap()
}
