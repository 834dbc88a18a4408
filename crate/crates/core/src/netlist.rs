//! Line-oriented textual netlist format.
//!
//! ```text
//! circuit adder
//!   public p1 p2
//!   secret k1
//!   random r1 r2
//!   encode k1 -> s1 s2 s3 using r1 r2
//!   node t1 = XOR s1 p1
//!   decode o = t1 s2 s3
//!   output o
//! end
//! ```
//!
//! `#` starts a comment. Random-free circuits omit the `random`,
//! `encode` and `decode` lines and name gate outputs directly in
//! `output`. [`serialize`] emits the canonical form; parsing it back
//! reproduces the same text bit for bit.

use std::fmt::Write as _;

use thiserror::Error;

use crate::circuit::{BuildError, Circuit, CircuitBuilder, Def, Op};

#[derive(Debug, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error)]
pub enum ParseErrorKind {
    #[error("expected `circuit <name>`")]
    ExpectedHeader,
    #[error("missing `end`")]
    MissingEnd,
    #[error("unexpected text after `end`")]
    TrailingText,
    #[error("unknown directive `{0}`")]
    UnknownDirective(String),
    #[error("malformed `{0}` line")]
    Malformed(&'static str),
    #[error("unknown gate op `{0}`")]
    UnknownOp(String),
    #[error("{0}")]
    Build(#[from] BuildError),
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

/// Parse one circuit from netlist text.
pub fn parse(text: &str) -> Result<Circuit, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, raw)| {
            let no_comment = raw.split('#').next().unwrap_or("");
            (i + 1, no_comment.trim())
        })
        .filter(|(_, l)| !l.is_empty());

    let (header_no, header) = lines.next().ok_or_else(|| err(0, ParseErrorKind::ExpectedHeader))?;
    let mut head = header.split_whitespace();
    if head.next() != Some("circuit") {
        return Err(err(header_no, ParseErrorKind::ExpectedHeader));
    }
    let name = head
        .next()
        .ok_or_else(|| err(header_no, ParseErrorKind::ExpectedHeader))?;
    if head.next().is_some() {
        return Err(err(header_no, ParseErrorKind::ExpectedHeader));
    }

    let mut b = CircuitBuilder::new(name);
    let mut ended = false;
    for (no, line) in lines {
        if ended {
            return Err(err(no, ParseErrorKind::TrailingText));
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens[0] {
            "end" => {
                if tokens.len() != 1 {
                    return Err(err(no, ParseErrorKind::Malformed("end")));
                }
                ended = true;
            }
            "public" => {
                for w in &tokens[1..] {
                    b.public(w).map_err(|e| err(no, e.into()))?;
                }
            }
            "secret" => {
                for w in &tokens[1..] {
                    b.secret(w).map_err(|e| err(no, e.into()))?;
                }
            }
            "random" => {
                for w in &tokens[1..] {
                    b.random(w).map_err(|e| err(no, e.into()))?;
                }
            }
            "encode" => {
                // encode <secret> -> <shares...> [using <randoms...>]
                let rest = &tokens[1..];
                let arrow = rest.iter().position(|t| *t == "->");
                let (secret, after) = match (arrow, rest.first()) {
                    (Some(1), Some(secret)) => (*secret, &rest[2..]),
                    _ => return Err(err(no, ParseErrorKind::Malformed("encode"))),
                };
                let using = after.iter().position(|t| *t == "using");
                let (shares, randoms) = match using {
                    Some(i) => (&after[..i], &after[i + 1..]),
                    None => (after, &[][..]),
                };
                if shares.is_empty() {
                    return Err(err(no, ParseErrorKind::Malformed("encode")));
                }
                b.encoder(secret, shares, randoms)
                    .map_err(|e| err(no, e.into()))?;
            }
            "node" => {
                // node <name> = <OP> [inputs...]
                if tokens.len() < 4 || tokens[2] != "=" {
                    return Err(err(no, ParseErrorKind::Malformed("node")));
                }
                let op = Op::from_name(tokens[3])
                    .ok_or_else(|| err(no, ParseErrorKind::UnknownOp(tokens[3].to_string())))?;
                b.gate(tokens[1], op, &tokens[4..])
                    .map_err(|e| err(no, e.into()))?;
            }
            "decode" => {
                // decode <name> = <inputs...>
                if tokens.len() < 4 || tokens[2] != "=" {
                    return Err(err(no, ParseErrorKind::Malformed("decode")));
                }
                b.decoder(tokens[1], &tokens[3..])
                    .map_err(|e| err(no, e.into()))?;
            }
            "output" => {
                if tokens.len() < 2 {
                    return Err(err(no, ParseErrorKind::Malformed("output")));
                }
                for w in &tokens[1..] {
                    b.output(w).map_err(|e| err(no, e.into()))?;
                }
            }
            other => return Err(err(no, ParseErrorKind::UnknownDirective(other.to_string()))),
        }
    }
    if !ended {
        return Err(err(text.lines().count(), ParseErrorKind::MissingEnd));
    }
    b.finish().map_err(|e| err(0, e.into()))
}

/// Emit the canonical netlist text for a circuit.
pub fn serialize(c: &Circuit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "circuit {}", c.name());
    let list = |ids: &[crate::circuit::WireId]| {
        ids.iter()
            .map(|w| c.wire_name(*w))
            .collect::<Vec<_>>()
            .join(" ")
    };
    if !c.publics().is_empty() {
        let _ = writeln!(out, "  public {}", list(c.publics()));
    }
    if !c.secrets().is_empty() {
        let _ = writeln!(out, "  secret {}", list(c.secrets()));
    }
    if !c.randoms().is_empty() {
        let _ = writeln!(out, "  random {}", list(c.randoms()));
    }
    for e in c.encoders() {
        let _ = write!(
            out,
            "  encode {} -> {}",
            c.wire_name(e.secret),
            list(&e.shares)
        );
        if !e.randoms.is_empty() {
            let _ = write!(out, " using {}", list(&e.randoms));
        }
        out.push('\n');
    }
    for g in c.gates() {
        let _ = write!(out, "  node {} = {}", c.wire_name(g.out), g.op.name());
        for i in &g.inputs {
            let _ = write!(out, " {}", c.wire_name(*i));
        }
        out.push('\n');
    }
    for d in c.decoders() {
        let _ = writeln!(out, "  decode {} = {}", c.wire_name(d.out), list(&d.inputs));
    }
    if !c.outputs().is_empty() {
        let _ = writeln!(out, "  output {}", list(c.outputs()));
    }
    out.push_str("end\n");
    out
}

/// Structural equality up to wire numbering: compares canonical text.
pub fn same_netlist(a: &Circuit, b: &Circuit) -> bool {
    serialize(a) == serialize(b)
}

#[allow(dead_code)]
fn _def_is_used(_: Def) {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn canonical_text_is_a_fixpoint() {
        for c in [
            fixtures::masked_example(),
            fixtures::reference_example(),
            fixtures::negation_gadget(),
            fixtures::identity_gadget(2),
        ] {
            let text = serialize(&c);
            let reparsed = parse(&text).unwrap();
            assert_eq!(serialize(&reparsed), text);
            assert_eq!(reparsed, c, "round-trip changed the circuit");
        }
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "\n# header\ncircuit c # name\n  public p  # two\n\n  node t = NOT p\n  output t\nend\n";
        let c = parse(text).unwrap();
        assert_eq!(c.name(), "c");
        assert_eq!(c.gates().len(), 1);
    }

    #[test]
    fn encode_without_using_is_width_one() {
        let text = "circuit c\n  secret k\n  encode k -> s\n  decode o = s\n  output o\nend\n";
        let c = parse(text).unwrap();
        assert_eq!(c.encoders()[0].shares.len(), 1);
        assert!(c.encoders()[0].randoms.is_empty());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "circuit c\n  public p\n  node t = FROB p\n  output t\nend\n";
        let e = parse(text).unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.to_string().contains("FROB"));
    }

    #[test]
    fn trailing_text_is_rejected() {
        let text = "circuit c\n  public p\n  node t = NOT p\n  output t\nend\nnode x = NOT p\n";
        let e = parse(text).unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::TrailingText));
    }

    #[test]
    fn forward_references_are_rejected() {
        let text = "circuit c\n  public p\n  node t = XOR u p\n  node u = NOT p\n  output t\nend\n";
        assert!(parse(text).is_err());
    }
}
