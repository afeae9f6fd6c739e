//! Pretty-printing of types and terms, inverse to the parser up to
//! alpha-equivalence: `parse(pretty(X))` is alpha-equivalent to `X`.
//!
//! Boxed circuits have no source syntax; they render in a non-parseable
//! emitter notation.

use std::fmt;

use crate::syntax::{Term, Type};

// Precedence levels, weakest first. A construct prints parenthesized when
// its own level is below the level its position requires.
const LVL_TOP: u8 = 0; // let / fun / case
const LVL_SEQ: u8 = 1;
const LVL_APP: u8 = 2;
const LVL_PREFIX: u8 = 3;
const LVL_ATOM: u8 = 4;

fn type_level(ty: &Type) -> u8 {
    match ty {
        Type::Lolli(_, _) => 0,
        Type::Sum(_, _) => 1,
        Type::Tensor(_, _) => 2,
        Type::Bang(_) | Type::List(_) => 3,
        _ => 4,
    }
}

fn fmt_type(ty: &Type, min: u8, out: &mut String) {
    let level = type_level(ty);
    let parens = level < min;
    if parens {
        out.push('(');
    }
    match ty {
        Type::Wire(name) => out.push_str(name),
        Type::Zero => out.push('0'),
        Type::Unit => out.push('I'),
        Type::Nat => out.push_str("Nat"),
        Type::Sum(a, b) => {
            fmt_type(a, 1, out);
            out.push_str(" + ");
            fmt_type(b, 2, out);
        }
        Type::Tensor(a, b) => {
            fmt_type(a, 2, out);
            out.push_str(" * ");
            fmt_type(b, 3, out);
        }
        Type::Lolli(a, b) => {
            fmt_type(a, 1, out);
            out.push_str(" -o ");
            fmt_type(b, 0, out);
        }
        Type::Bang(a) => {
            out.push('!');
            fmt_type(a, 3, out);
        }
        Type::List(a) => {
            out.push_str("List ");
            fmt_type(a, 3, out);
        }
        Type::Circ(t, u) => {
            out.push_str("Circ(");
            fmt_type(t, 0, out);
            out.push_str(", ");
            fmt_type(u, 0, out);
            out.push(')');
        }
    }
    if parens {
        out.push(')');
    }
}

pub fn type_to_string(ty: &Type) -> String {
    let mut out = String::new();
    fmt_type(ty, 0, &mut out);
    out
}

fn term_level(term: &Term) -> u8 {
    match term {
        Term::Let(_, _, _) | Term::LetPair(_, _, _, _) | Term::Lam(_, _, _) | Term::Case(..) => {
            LVL_TOP
        }
        Term::Seq(_, _) => LVL_SEQ,
        Term::App(_, _) | Term::ConstApp(_, _) => LVL_APP,
        Term::Lift(_)
        | Term::Force(_)
        | Term::Succ(_)
        | Term::Box(_, _)
        | Term::Abort(_, _)
        | Term::InL(_, _, _)
        | Term::InR(_, _, _) => LVL_PREFIX,
        _ => LVL_ATOM,
    }
}

fn fmt_term(term: &Term, min: u8, out: &mut String) {
    let level = term_level(term);
    let parens = level < min;
    if parens {
        out.push('(');
    }
    match term {
        Term::Var(x) | Term::Const(x) => out.push_str(x),
        Term::Lab(l) => out.push_str(&l.to_string()),
        Term::NatLit(n) => out.push_str(&n.to_string()),
        Term::Unit => out.push_str("()"),
        Term::Nil(ty) => {
            out.push_str("nil[");
            fmt_type(ty, 0, out);
            out.push(']');
        }
        Term::Let(x, bound, body) => {
            out.push_str("let ");
            out.push_str(x);
            out.push_str(" = ");
            fmt_term(bound, LVL_TOP, out);
            out.push_str(" in ");
            fmt_term(body, LVL_TOP, out);
        }
        Term::LetPair(x, y, bound, body) => {
            out.push_str("let (");
            out.push_str(x);
            out.push_str(", ");
            out.push_str(y);
            out.push_str(") = ");
            fmt_term(bound, LVL_TOP, out);
            out.push_str(" in ");
            fmt_term(body, LVL_TOP, out);
        }
        Term::Lam(x, ty, body) => {
            out.push_str("fun ");
            out.push_str(x);
            out.push_str(" : ");
            fmt_type(ty, 0, out);
            out.push_str(" . ");
            fmt_term(body, LVL_TOP, out);
        }
        Term::Case(scrut, x, l, y, r) => {
            out.push_str("case ");
            fmt_term(scrut, LVL_SEQ, out);
            out.push_str(" of left ");
            out.push_str(x);
            out.push_str(" -> ");
            // The left branch prints at application level so that nothing in
            // it can swallow the `|` separator when re-parsed.
            fmt_term(l, LVL_APP, out);
            out.push_str(" | right ");
            out.push_str(y);
            out.push_str(" -> ");
            fmt_term(r, LVL_TOP, out);
        }
        Term::Seq(a, b) => {
            fmt_term(a, LVL_APP, out);
            out.push_str(" ; ");
            fmt_term(b, LVL_TOP, out);
        }
        Term::Pair(a, b) => {
            out.push('(');
            fmt_term(a, LVL_TOP, out);
            out.push_str(", ");
            fmt_term(b, LVL_TOP, out);
            out.push(')');
        }
        Term::App(f, a) => {
            fmt_term(f, LVL_APP, out);
            out.push(' ');
            fmt_term(a, LVL_PREFIX, out);
        }
        Term::ConstApp(c, args) => {
            out.push_str(c);
            for a in args {
                out.push(' ');
                fmt_term(a, LVL_PREFIX, out);
            }
        }
        Term::Lift(m) => {
            out.push_str("lift ");
            fmt_term(m, LVL_PREFIX, out);
        }
        Term::Force(m) => {
            out.push_str("force ");
            fmt_term(m, LVL_PREFIX, out);
        }
        Term::Succ(m) => {
            out.push_str("succ ");
            fmt_term(m, LVL_PREFIX, out);
        }
        Term::Box(ty, m) => {
            out.push_str("box[");
            fmt_type(ty, 0, out);
            out.push_str("] ");
            fmt_term(m, LVL_PREFIX, out);
        }
        Term::Abort(ty, m) => {
            out.push_str("abort[");
            fmt_type(ty, 0, out);
            out.push_str("] ");
            fmt_term(m, LVL_PREFIX, out);
        }
        Term::InL(a, b, m) => {
            out.push_str("left[");
            fmt_type(a, 0, out);
            out.push_str(", ");
            fmt_type(b, 0, out);
            out.push_str("] ");
            fmt_term(m, LVL_PREFIX, out);
        }
        Term::InR(a, b, m) => {
            out.push_str("right[");
            fmt_type(a, 0, out);
            out.push_str(", ");
            fmt_type(b, 0, out);
            out.push_str("] ");
            fmt_term(m, LVL_PREFIX, out);
        }
        Term::Apply(m, n) => {
            out.push_str("apply(");
            fmt_term(m, LVL_TOP, out);
            out.push_str(", ");
            fmt_term(n, LVL_TOP, out);
            out.push(')');
        }
        Term::Cons(m, n) => {
            out.push_str("cons(");
            fmt_term(m, LVL_TOP, out);
            out.push_str(", ");
            fmt_term(n, LVL_TOP, out);
            out.push(')');
        }
        Term::Boxed(b) => {
            out.push_str(&format!(
                "<circ {} -> {} | {} gates>",
                b.in_tuple(),
                b.out_tuple(),
                b.size()
            ));
        }
    }
    if parens {
        out.push(')');
    }
}

pub fn term_to_string(term: &Term) -> String {
    let mut out = String::new();
    fmt_term(term, 0, &mut out);
    out
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", type_to_string(self))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", term_to_string(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_term_str, parse_type_str};
    use crate::syntax::{alpha_eq, Label};

    #[test]
    fn golden_renderings() {
        assert_eq!(
            term_to_string(&Term::lam("x", Type::wire("Qubit"), Term::var("x"))),
            "fun x : Qubit . x"
        );
        assert_eq!(term_to_string(&Term::Unit), "()");
        assert_eq!(type_to_string(&Type::bang(Type::Unit)), "!I");
        assert_eq!(
            type_to_string(&Type::bang(Type::lolli(
                Type::wire("Qubit"),
                Type::wire("Qubit")
            ))),
            "!(Qubit -o Qubit)"
        );
        assert_eq!(term_to_string(&Term::Lab(Label(3))), "L3");
    }

    #[test]
    fn round_trip_examples() {
        let cases = [
            "fun x : Qubit . x",
            "()",
            "!I",
        ];
        let _ = cases;
        for src in [
            "fun x : Qubit . H x",
            "let (a, b) = p in (b, a)",
            "case s of left a -> (a ; b) | right c -> c",
            "lift (fun q : Qubit . force f q)",
            "apply(c, (L0, L1))",
            "box[Qubit * I] (lift f)",
            "succ (succ 0)",
            "cons(H q, nil[Qubit])",
            "abort[Qubit] z",
            "a ; let x = b in x",
        ] {
            let t = parse_term_str(src).unwrap();
            let printed = term_to_string(&t);
            let back = parse_term_str(&printed).unwrap();
            assert!(alpha_eq(&t, &back), "{src} -> {printed}");
        }

        for src in [
            "Qubit -o Bit -o I",
            "!Qubit * List (I + Nat)",
            "Circ(Qubit * Qubit, I)",
            "0 + I",
        ] {
            let t = parse_type_str(src).unwrap();
            let printed = type_to_string(&t);
            assert_eq!(parse_type_str(&printed).unwrap(), t, "{src} -> {printed}");
        }
    }

    #[test]
    fn nested_case_reparses() {
        // A case in the left branch must be parenthesized when printed.
        let inner = Term::case(Term::var("s"), "a", Term::var("a"), "b", Term::var("b"));
        let outer = Term::case(
            Term::var("t"),
            "x",
            inner,
            "y",
            Term::var("y"),
        );
        let printed = term_to_string(&outer);
        let back = parse_term_str(&printed).unwrap();
        assert!(alpha_eq(&outer, &back), "{printed}");
    }
}
