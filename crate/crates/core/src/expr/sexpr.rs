//! Prefix s-expression syntax for [`Expr`], e.g. `(/ (+ (^ x1 2) (^ x2 2)) 2)`.
//!
//! Operators: `+` (n-ary), `*` (n-ary), `-` (unary negation, or binary and
//! longer subtraction which parses to a sum of negations), `/`, `^` with an
//! integer exponent, and `ln`. Atoms are coordinate names or decimal numbers.
//! Parsing does no folding, so `parse(print(e)) == e` for every tree.

use thiserror::Error;

use super::{Expr, Node};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected token `{0}`")]
    UnexpectedToken(String),
    #[error("unknown coordinate or malformed number `{0}`")]
    UnknownAtom(String),
    #[error("operator `{op}` expects {expected}, got {got} operands")]
    Arity { op: String, expected: &'static str, got: usize },
    #[error("exponent `{0}` is not an integer")]
    BadExponent(String),
    #[error("trailing input after expression: `{0}`")]
    Trailing(String),
}

fn tokenize(src: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for ch in src.chars() {
        match ch {
            '(' | ')' => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
                tokens.push(ch.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    tokens.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}

struct Parser<'a> {
    tokens: Vec<String>,
    pos: usize,
    names: &'a [String],
}

impl Parser<'_> {
    fn next(&mut self) -> Result<String, ParseError> {
        let t = self.tokens.get(self.pos).cloned().ok_or(ParseError::UnexpectedEnd)?;
        self.pos += 1;
        Ok(t)
    }

    fn atom(&self, tok: &str) -> Result<Expr, ParseError> {
        if let Some(i) = self.names.iter().position(|n| n == tok) {
            return Ok(Expr::var(i));
        }
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Expr::constant(v)),
            _ => Err(ParseError::UnknownAtom(tok.to_string())),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let tok = self.next()?;
        match tok.as_str() {
            "(" => self.list(),
            ")" => Err(ParseError::UnexpectedToken(tok)),
            _ => self.atom(&tok),
        }
    }

    fn list(&mut self) -> Result<Expr, ParseError> {
        let op = self.next()?;
        if op == "(" || op == ")" {
            return Err(ParseError::UnexpectedToken(op));
        }
        if op == "^" {
            let base = self.expr()?;
            let k = self.next()?;
            let k: i32 = k.parse().map_err(|_| ParseError::BadExponent(k.clone()))?;
            self.close("^", "2")?;
            return Ok(Expr::from_node(Node::Pow(base, k)));
        }
        let mut args = Vec::new();
        loop {
            match self.tokens.get(self.pos).map(String::as_str) {
                None => return Err(ParseError::UnexpectedEnd),
                Some(")") => {
                    self.pos += 1;
                    break;
                }
                _ => args.push(self.expr()?),
            }
        }
        let arity = |expected: &'static str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(ParseError::Arity { op: op.clone(), expected, got: args.len() })
            }
        };
        match op.as_str() {
            "+" => Ok(Expr::from_node(Node::Add(args))),
            "*" => Ok(Expr::from_node(Node::Mul(args))),
            "-" => {
                arity("at least 1", !args.is_empty())?;
                if args.len() == 1 {
                    return Ok(Expr::from_node(Node::Neg(args.pop().unwrap())));
                }
                let mut it = args.into_iter();
                let mut terms = vec![it.next().unwrap()];
                terms.extend(it.map(|a| Expr::from_node(Node::Neg(a))));
                Ok(Expr::from_node(Node::Add(terms)))
            }
            "/" => {
                arity("2", args.len() == 2)?;
                let b = args.pop().unwrap();
                let a = args.pop().unwrap();
                Ok(Expr::from_node(Node::Div(a, b)))
            }
            "ln" => {
                arity("1", args.len() == 1)?;
                Ok(Expr::from_node(Node::Ln(args.pop().unwrap())))
            }
            _ => Err(ParseError::UnexpectedToken(op)),
        }
    }

    fn close(&mut self, op: &str, expected: &'static str) -> Result<(), ParseError> {
        match self.next()?.as_str() {
            ")" => Ok(()),
            _ => Err(ParseError::Arity { op: op.to_string(), expected, got: 3 }),
        }
    }
}

/// Parses `src` with `names[i]` bound to coordinate `i`.
pub fn parse(src: &str, names: &[String]) -> Result<Expr, ParseError> {
    let mut p = Parser { tokens: tokenize(src), pos: 0, names };
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(ParseError::Trailing(p.tokens[p.pos..].join(" ")));
    }
    Ok(e)
}

/// Prints `e`; coordinates without a name in `names` print as `x<i+1>`.
pub fn to_sexpr(e: &Expr, names: &[String]) -> String {
    let mut out = String::new();
    write_sexpr(e, names, &mut out);
    out
}

fn write_list(op: &str, args: &[Expr], names: &[String], out: &mut String) {
    out.push('(');
    out.push_str(op);
    for a in args {
        out.push(' ');
        write_sexpr(a, names, out);
    }
    out.push(')');
}

fn write_sexpr(e: &Expr, names: &[String], out: &mut String) {
    match e.node() {
        Node::Const(c) => out.push_str(&format!("{c}")),
        Node::Var(i) => match names.get(*i) {
            Some(n) => out.push_str(n),
            None => out.push_str(&format!("x{}", i + 1)),
        },
        Node::Add(ts) => write_list("+", ts, names, out),
        Node::Mul(fs) => write_list("*", fs, names, out),
        Node::Neg(a) => write_list("-", std::slice::from_ref(a), names, out),
        Node::Div(a, b) => write_list("/", &[a.clone(), b.clone()], names, out),
        Node::Pow(a, k) => {
            out.push_str("(^ ");
            write_sexpr(a, names, out);
            out.push_str(&format!(" {k})"));
        }
        Node::Ln(a) => write_list("ln", std::slice::from_ref(a), names, out),
    }
}

/// Coordinate names `prefix1 .. prefixN`.
pub fn indexed_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names() -> Vec<String> {
        indexed_names("x", 3)
    }

    #[test]
    fn parses_the_half_squared_radius() {
        let e = parse("(/ (+ (^ x1 2) (^ x2 2)) 2)", &names()).unwrap();
        assert_eq!(e.eval(&[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(to_sexpr(&e, &names()), "(/ (+ (^ x1 2) (^ x2 2)) 2)");
    }

    #[test]
    fn subtraction_desugars() {
        let e = parse("(- x1 x2 3)", &names()).unwrap();
        assert_eq!(e.eval(&[10.0, 4.0]).unwrap(), 3.0);
        assert_eq!(parse(&to_sexpr(&e, &names()), &names()).unwrap(), e);
    }

    #[test]
    fn rejects_garbage() {
        let n = names();
        assert!(matches!(parse("(+ x1", &n), Err(ParseError::UnexpectedEnd)));
        assert!(matches!(parse("y7", &n), Err(ParseError::UnknownAtom(_))));
        assert!(matches!(parse("(/ x1)", &n), Err(ParseError::Arity { .. })));
        assert!(matches!(parse("(^ x1 1.5)", &n), Err(ParseError::BadExponent(_))));
        assert!(matches!(parse("x1 x2", &n), Err(ParseError::Trailing(_))));
        assert!(matches!(parse("(sin x1)", &n), Err(ParseError::UnexpectedToken(_))));
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-1.0e3..1.0e3f64).prop_map(Expr::constant),
            (0usize..3).prop_map(Expr::var),
        ];
        leaf.prop_recursive(4, 32, 4, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 0..4)
                    .prop_map(|v| Expr::from_node(Node::Add(v))),
                prop::collection::vec(inner.clone(), 0..4)
                    .prop_map(|v| Expr::from_node(Node::Mul(v))),
                inner.clone().prop_map(|a| Expr::from_node(Node::Neg(a))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::from_node(Node::Div(a, b))),
                (inner.clone(), -3i32..4).prop_map(|(a, k)| Expr::from_node(Node::Pow(a, k))),
                inner.prop_map(|a| Expr::from_node(Node::Ln(a))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let n = names();
            let printed = to_sexpr(&e, &n);
            prop_assert_eq!(parse(&printed, &n).unwrap(), e);
        }
    }
}
