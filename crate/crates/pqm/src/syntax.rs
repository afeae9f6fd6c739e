//! Abstract syntax: types, terms, label tuples and contexts, together with
//! the structural operations the rest of the crate is built on (type
//! classification, capture-avoiding substitution, free identifiers,
//! alpha-equivalence).
//!
//! Variables, labels and constants live in pairwise-disjoint name spaces:
//! variables and constants are identifiers, labels are `L0, L1, L2, ...`
//! ordered by index.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::circuit::BoxedCircuit;

/// A circuit wire endpoint. Labels are totally ordered by index and render
/// as `L<n>`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Label(pub u64);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.0)
    }
}

impl Label {
    /// Parses the `L<n>` spelling.
    pub fn parse(s: &str) -> Option<Label> {
        let digits = s.strip_prefix('L')?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        digits.parse().ok().map(Label)
    }
}

/// A variable context: finite map from variables to types.
pub type VarContext = BTreeMap<String, Type>;

/// A label context: finite map from labels to wire-type names.
pub type LabelContext = BTreeMap<Label, String>;

/// Types. `Wire` carries the name of a wire type declared by the active
/// signature; `Circ(T, U)` is only well formed when `T` and `U` are simple
/// M-types.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Type {
    Wire(String),
    Zero,
    Sum(Box<Type>, Box<Type>),
    Unit,
    Tensor(Box<Type>, Box<Type>),
    Lolli(Box<Type>, Box<Type>),
    Bang(Box<Type>),
    Nat,
    List(Box<Type>),
    Circ(Box<Type>, Box<Type>),
}

impl Type {
    pub fn wire(name: &str) -> Type {
        Type::Wire(name.to_string())
    }

    pub fn sum(a: Type, b: Type) -> Type {
        Type::Sum(Box::new(a), Box::new(b))
    }

    pub fn tensor(a: Type, b: Type) -> Type {
        Type::Tensor(Box::new(a), Box::new(b))
    }

    pub fn lolli(a: Type, b: Type) -> Type {
        Type::Lolli(Box::new(a), Box::new(b))
    }

    pub fn bang(a: Type) -> Type {
        Type::Bang(Box::new(a))
    }

    pub fn list(a: Type) -> Type {
        Type::List(Box::new(a))
    }

    pub fn circ(t: Type, u: Type) -> Type {
        Type::Circ(Box::new(t), Box::new(u))
    }

    /// True iff the type matches the parameter-type grammar
    /// (`0 | P+R | I | P*R | !A | Nat | List P | Circ(T,U)`). Values of a
    /// parameter type are known at circuit generation time and are exempt
    /// from linearity.
    pub fn is_parameter(&self) -> bool {
        match self {
            Type::Wire(_) | Type::Lolli(_, _) => false,
            Type::Zero | Type::Unit | Type::Nat | Type::Bang(_) | Type::Circ(_, _) => true,
            Type::Sum(a, b) | Type::Tensor(a, b) => a.is_parameter() && b.is_parameter(),
            Type::List(a) => a.is_parameter(),
        }
    }

    /// True iff the type matches the simple M-type grammar (`α | I | T*U`):
    /// the types that denote a single circuit interface.
    pub fn is_simple_m(&self) -> bool {
        match self {
            Type::Wire(_) | Type::Unit => true,
            Type::Tensor(a, b) => a.is_simple_m() && b.is_simple_m(),
            _ => false,
        }
    }

    /// Wire-type names of a simple M-type, left to right.
    pub fn wire_leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        fn walk<'a>(t: &'a Type, out: &mut Vec<&'a str>) {
            match t {
                Type::Wire(name) => out.push(name.as_str()),
                Type::Unit => {}
                Type::Tensor(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                _ => {}
            }
        }
        walk(self, &mut out);
        out
    }
}

/// Terms. One constructor per grammar production, plus literal and
/// constructor forms for the inductive types (`NatLit`, `Succ`, `Nil`,
/// `Cons`) and a value form `ConstApp` for partially applied multi-argument
/// constants, which only evaluation introduces.
#[derive(Clone, PartialEq, Debug)]
pub enum Term {
    Var(String),
    Lab(Label),
    Const(String),
    Let(String, Box<Term>, Box<Term>),
    /// `abort[A] M`: the unique map out of the empty type.
    Abort(Type, Box<Term>),
    InL(Type, Type, Box<Term>),
    InR(Type, Type, Box<Term>),
    Case(Box<Term>, String, Box<Term>, String, Box<Term>),
    Unit,
    Seq(Box<Term>, Box<Term>),
    Pair(Box<Term>, Box<Term>),
    LetPair(String, String, Box<Term>, Box<Term>),
    Lam(String, Type, Box<Term>),
    App(Box<Term>, Box<Term>),
    Lift(Box<Term>),
    Force(Box<Term>),
    /// `box[T] M`: turns a duplicable circuit-building function into a
    /// boxed circuit.
    Box(Type, Box<Term>),
    Apply(Box<Term>, Box<Term>),
    /// A boxed circuit `(l⃗, C, l⃗')`: computed by evaluation, not written
    /// in source programs.
    Boxed(BoxedCircuit),
    NatLit(u64),
    Succ(Box<Term>),
    Nil(Type),
    Cons(Box<Term>, Box<Term>),
    /// Partial application of a multi-argument constant; a value while
    /// under-applied. Introduced by the evaluator only.
    ConstApp(String, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn constant(name: &str) -> Term {
        Term::Const(name.to_string())
    }

    pub fn let_(x: &str, bound: Term, body: Term) -> Term {
        Term::Let(x.to_string(), Box::new(bound), Box::new(body))
    }

    pub fn lam(x: &str, ty: Type, body: Term) -> Term {
        Term::Lam(x.to_string(), ty, Box::new(body))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn apply(m: Term, n: Term) -> Term {
        Term::Apply(Box::new(m), Box::new(n))
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::Pair(Box::new(a), Box::new(b))
    }

    pub fn let_pair(x: &str, y: &str, bound: Term, body: Term) -> Term {
        Term::LetPair(x.to_string(), y.to_string(), Box::new(bound), Box::new(body))
    }

    pub fn case(
        scrut: Term,
        x: &str,
        left: Term,
        y: &str,
        right: Term,
    ) -> Term {
        Term::Case(
            Box::new(scrut),
            x.to_string(),
            Box::new(left),
            y.to_string(),
            Box::new(right),
        )
    }

    pub fn lift(m: Term) -> Term {
        Term::Lift(Box::new(m))
    }

    pub fn force(m: Term) -> Term {
        Term::Force(Box::new(m))
    }

    pub fn box_(t: Type, m: Term) -> Term {
        Term::Box(t, Box::new(m))
    }

    pub fn seq(m: Term, n: Term) -> Term {
        Term::Seq(Box::new(m), Box::new(n))
    }

    pub fn succ(m: Term) -> Term {
        Term::Succ(Box::new(m))
    }

    pub fn cons(head: Term, tail: Term) -> Term {
        Term::Cons(Box::new(head), Box::new(tail))
    }

    pub fn inl(a: Type, b: Type, m: Term) -> Term {
        Term::InL(a, b, Box::new(m))
    }

    pub fn inr(a: Type, b: Type, m: Term) -> Term {
        Term::InR(a, b, Box::new(m))
    }

    /// True iff the term matches the value grammar: variables, labels,
    /// constants, injections/pairs/lists of values, abstractions, `lift M`
    /// for any `M`, boxed circuits, numerals, and partially applied
    /// constants over values.
    pub fn is_value(&self) -> bool {
        match self {
            Term::Var(_)
            | Term::Lab(_)
            | Term::Const(_)
            | Term::Unit
            | Term::Lam(_, _, _)
            | Term::Lift(_)
            | Term::Boxed(_)
            | Term::NatLit(_)
            | Term::Nil(_) => true,
            Term::InL(_, _, m) | Term::InR(_, _, m) => m.is_value(),
            Term::Pair(a, b) | Term::Cons(a, b) => a.is_value() && b.is_value(),
            Term::ConstApp(_, args) => args.iter().all(Term::is_value),
            _ => false,
        }
    }

    /// Number of AST nodes; used by trace records and shrinking.
    pub fn size(&self) -> usize {
        match self {
            Term::Var(_)
            | Term::Lab(_)
            | Term::Const(_)
            | Term::Unit
            | Term::Boxed(_)
            | Term::NatLit(_)
            | Term::Nil(_) => 1,
            Term::Abort(_, m)
            | Term::InL(_, _, m)
            | Term::InR(_, _, m)
            | Term::Lam(_, _, m)
            | Term::Lift(m)
            | Term::Force(m)
            | Term::Box(_, m)
            | Term::Succ(m) => 1 + m.size(),
            Term::Let(_, a, b)
            | Term::Seq(a, b)
            | Term::Pair(a, b)
            | Term::LetPair(_, _, a, b)
            | Term::App(a, b)
            | Term::Apply(a, b)
            | Term::Cons(a, b) => 1 + a.size() + b.size(),
            Term::Case(s, _, l, _, r) => 1 + s.size() + l.size() + r.size(),
            Term::ConstApp(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }
}

/// Free variables and free labels of a term. Labels inside boxed circuits
/// are internal wiring, not free occurrences.
pub fn free_identifiers(term: &Term) -> (BTreeSet<String>, BTreeSet<Label>) {
    let mut vars = BTreeSet::new();
    let mut labels = BTreeSet::new();
    let mut bound: Vec<String> = Vec::new();
    walk_free(term, &mut bound, &mut vars, &mut labels);
    (vars, labels)
}

fn walk_free(
    term: &Term,
    bound: &mut Vec<String>,
    vars: &mut BTreeSet<String>,
    labels: &mut BTreeSet<Label>,
) {
    match term {
        Term::Var(x) => {
            if !bound.iter().any(|b| b == x) {
                vars.insert(x.clone());
            }
        }
        Term::Lab(l) => {
            labels.insert(*l);
        }
        Term::Const(_) | Term::Unit | Term::Boxed(_) | Term::NatLit(_) | Term::Nil(_) => {}
        Term::Abort(_, m)
        | Term::InL(_, _, m)
        | Term::InR(_, _, m)
        | Term::Lift(m)
        | Term::Force(m)
        | Term::Box(_, m)
        | Term::Succ(m) => walk_free(m, bound, vars, labels),
        Term::Let(x, a, b) => {
            walk_free(a, bound, vars, labels);
            bound.push(x.clone());
            walk_free(b, bound, vars, labels);
            bound.pop();
        }
        Term::Lam(x, _, body) => {
            bound.push(x.clone());
            walk_free(body, bound, vars, labels);
            bound.pop();
        }
        Term::LetPair(x, y, a, b) => {
            walk_free(a, bound, vars, labels);
            bound.push(x.clone());
            bound.push(y.clone());
            walk_free(b, bound, vars, labels);
            bound.pop();
            bound.pop();
        }
        Term::Case(s, x, l, y, r) => {
            walk_free(s, bound, vars, labels);
            bound.push(x.clone());
            walk_free(l, bound, vars, labels);
            bound.pop();
            bound.push(y.clone());
            walk_free(r, bound, vars, labels);
            bound.pop();
        }
        Term::Seq(a, b) | Term::Pair(a, b) | Term::App(a, b) | Term::Apply(a, b)
        | Term::Cons(a, b) => {
            walk_free(a, bound, vars, labels);
            walk_free(b, bound, vars, labels);
        }
        Term::ConstApp(_, args) => {
            for a in args {
                walk_free(a, bound, vars, labels);
            }
        }
    }
}

/// Picks a variable name based on `base` that is not in `avoid`.
fn fresh_variant(base: &str, avoid: &BTreeSet<String>) -> String {
    if !avoid.contains(base) {
        return base.to_string();
    }
    let stem = base.trim_end_matches('\'');
    let stem = if stem.is_empty() { "x" } else { stem };
    let mut candidate = format!("{stem}'");
    while avoid.contains(&candidate) {
        candidate.push('\'');
    }
    candidate
}

/// Capture-avoiding substitution `M[V/x]`: bound variables are renamed when
/// they would capture a free variable of `V`.
pub fn substitute(term: &Term, x: &str, value: &Term) -> Term {
    let (value_fv, _) = free_identifiers(value);
    subst(term, x, value, &value_fv)
}

fn subst(term: &Term, x: &str, value: &Term, value_fv: &BTreeSet<String>) -> Term {
    // Renames binder `y` away from the free variables of `value`, of the
    // body, and from `x` itself.
    let freshen = |y: &str, body: &Term| -> (String, Term) {
        if y == x || !value_fv.contains(y) {
            return (y.to_string(), body.clone());
        }
        let mut avoid = value_fv.clone();
        avoid.extend(free_identifiers(body).0);
        avoid.insert(x.to_string());
        let y2 = fresh_variant(y, &avoid);
        let renamed = substitute(body, y, &Term::Var(y2.clone()));
        (y2, renamed)
    };

    match term {
        Term::Var(y) => {
            if y == x {
                value.clone()
            } else {
                term.clone()
            }
        }
        Term::Lab(_) | Term::Const(_) | Term::Unit | Term::Boxed(_) | Term::NatLit(_)
        | Term::Nil(_) => term.clone(),
        Term::Abort(t, m) => Term::Abort(t.clone(), Box::new(subst(m, x, value, value_fv))),
        Term::InL(a, b, m) => {
            Term::InL(a.clone(), b.clone(), Box::new(subst(m, x, value, value_fv)))
        }
        Term::InR(a, b, m) => {
            Term::InR(a.clone(), b.clone(), Box::new(subst(m, x, value, value_fv)))
        }
        Term::Lift(m) => Term::Lift(Box::new(subst(m, x, value, value_fv))),
        Term::Force(m) => Term::Force(Box::new(subst(m, x, value, value_fv))),
        Term::Box(t, m) => Term::Box(t.clone(), Box::new(subst(m, x, value, value_fv))),
        Term::Succ(m) => Term::Succ(Box::new(subst(m, x, value, value_fv))),
        Term::Seq(a, b) => Term::seq(subst(a, x, value, value_fv), subst(b, x, value, value_fv)),
        Term::Pair(a, b) => Term::pair(subst(a, x, value, value_fv), subst(b, x, value, value_fv)),
        Term::App(a, b) => Term::app(subst(a, x, value, value_fv), subst(b, x, value, value_fv)),
        Term::Apply(a, b) => {
            Term::apply(subst(a, x, value, value_fv), subst(b, x, value, value_fv))
        }
        Term::Cons(a, b) => Term::cons(subst(a, x, value, value_fv), subst(b, x, value, value_fv)),
        Term::Lam(y, ty, body) => {
            if y == x {
                term.clone()
            } else {
                let (y2, body) = freshen(y, body);
                Term::Lam(y2, ty.clone(), Box::new(subst(&body, x, value, value_fv)))
            }
        }
        Term::Let(y, a, b) => {
            let a2 = subst(a, x, value, value_fv);
            if y == x {
                Term::Let(y.clone(), Box::new(a2), b.clone())
            } else {
                let (y2, b) = freshen(y, b);
                Term::Let(y2, Box::new(a2), Box::new(subst(&b, x, value, value_fv)))
            }
        }
        Term::LetPair(y, z, a, b) => {
            let a2 = subst(a, x, value, value_fv);
            if y == x || z == x {
                Term::LetPair(y.clone(), z.clone(), Box::new(a2), b.clone())
            } else {
                let (y2, b) = freshen(y, b);
                let (z2, b) = freshen(z, &b);
                Term::LetPair(y2, z2, Box::new(a2), Box::new(subst(&b, x, value, value_fv)))
            }
        }
        Term::Case(s, y, l, z, r) => {
            let s2 = subst(s, x, value, value_fv);
            let (y2, l2) = if y == x {
                (y.clone(), *l.clone())
            } else {
                let (y2, l) = freshen(y, l);
                (y2, subst(&l, x, value, value_fv))
            };
            let (z2, r2) = if z == x {
                (z.clone(), *r.clone())
            } else {
                let (z2, r) = freshen(z, r);
                (z2, subst(&r, x, value, value_fv))
            };
            Term::Case(Box::new(s2), y2, Box::new(l2), z2, Box::new(r2))
        }
        Term::ConstApp(c, args) => Term::ConstApp(
            c.clone(),
            args.iter().map(|a| subst(a, x, value, value_fv)).collect(),
        ),
    }
}

/// Alpha-equivalence: terms compare up to renaming of bound variables, and
/// boxed circuits compare up to renaming of labels.
pub fn alpha_eq(a: &Term, b: &Term) -> bool {
    fn var_eq(x: &str, y: &str, env: &[(String, String)]) -> bool {
        for (l, r) in env.iter().rev() {
            match (l == x, r == y) {
                (true, true) => return true,
                (true, false) | (false, true) => return false,
                _ => {}
            }
        }
        x == y
    }

    fn go(a: &Term, b: &Term, env: &mut Vec<(String, String)>) -> bool {
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => var_eq(x, y, env),
            (Term::Lab(l), Term::Lab(k)) => l == k,
            (Term::Const(c), Term::Const(d)) => c == d,
            (Term::Unit, Term::Unit) => true,
            (Term::NatLit(n), Term::NatLit(m)) => n == m,
            (Term::Nil(t), Term::Nil(u)) => t == u,
            (Term::Boxed(c), Term::Boxed(d)) => c.equiv(d),
            (Term::Abort(t, m), Term::Abort(u, n)) => t == u && go(m, n, env),
            (Term::InL(a1, b1, m), Term::InL(a2, b2, n))
            | (Term::InR(a1, b1, m), Term::InR(a2, b2, n)) => {
                a1 == a2 && b1 == b2 && go(m, n, env)
            }
            (Term::Lift(m), Term::Lift(n))
            | (Term::Force(m), Term::Force(n))
            | (Term::Succ(m), Term::Succ(n)) => go(m, n, env),
            (Term::Box(t, m), Term::Box(u, n)) => t == u && go(m, n, env),
            (Term::Seq(m1, n1), Term::Seq(m2, n2))
            | (Term::Pair(m1, n1), Term::Pair(m2, n2))
            | (Term::App(m1, n1), Term::App(m2, n2))
            | (Term::Apply(m1, n1), Term::Apply(m2, n2))
            | (Term::Cons(m1, n1), Term::Cons(m2, n2)) => {
                go(m1, m2, env) && go(n1, n2, env)
            }
            (Term::Lam(x, t, m), Term::Lam(y, u, n)) => {
                if t != u {
                    return false;
                }
                env.push((x.clone(), y.clone()));
                let r = go(m, n, env);
                env.pop();
                r
            }
            (Term::Let(x, a1, b1), Term::Let(y, a2, b2)) => {
                if !go(a1, a2, env) {
                    return false;
                }
                env.push((x.clone(), y.clone()));
                let r = go(b1, b2, env);
                env.pop();
                r
            }
            (Term::LetPair(x1, y1, a1, b1), Term::LetPair(x2, y2, a2, b2)) => {
                if !go(a1, a2, env) {
                    return false;
                }
                env.push((x1.clone(), x2.clone()));
                env.push((y1.clone(), y2.clone()));
                let r = go(b1, b2, env);
                env.pop();
                env.pop();
                r
            }
            (Term::Case(s1, x1, l1, y1, r1), Term::Case(s2, x2, l2, y2, r2)) => {
                if !go(s1, s2, env) {
                    return false;
                }
                env.push((x1.clone(), x2.clone()));
                let left = go(l1, l2, env);
                env.pop();
                if !left {
                    return false;
                }
                env.push((y1.clone(), y2.clone()));
                let right = go(r1, r2, env);
                env.pop();
                right
            }
            (Term::ConstApp(c, xs), Term::ConstApp(d, ys)) => {
                c == d && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| go(x, y, env))
            }
            _ => false,
        }
    }

    go(a, b, &mut Vec::new())
}

/// A tuple of labels mirroring the tensor structure of a simple M-type.
/// Labels in a tuple are pairwise distinct; build with [`LabelTuple::pair`]
/// to keep the invariant.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum LabelTuple {
    Label(Label),
    Unit,
    Pair(Box<LabelTuple>, Box<LabelTuple>),
}

/// Why a term could not be read as a label tuple.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TupleError {
    /// The term contains a non-label, non-unit, non-pair component.
    NotATuple(String),
    /// The same label occurs twice.
    Duplicate(Label),
}

impl LabelTuple {
    /// Joins two tuples, rejecting duplicate labels.
    pub fn pair(a: LabelTuple, b: LabelTuple) -> Result<LabelTuple, TupleError> {
        let left = a.labels();
        for l in b.labels() {
            if left.contains(&l) {
                return Err(TupleError::Duplicate(l));
            }
        }
        Ok(LabelTuple::Pair(Box::new(a), Box::new(b)))
    }

    /// Labels in left-to-right leaf order.
    pub fn labels(&self) -> Vec<Label> {
        let mut out = Vec::new();
        self.collect_labels(&mut out);
        out
    }

    fn collect_labels(&self, out: &mut Vec<Label>) {
        match self {
            LabelTuple::Label(l) => out.push(*l),
            LabelTuple::Unit => {}
            LabelTuple::Pair(a, b) => {
                a.collect_labels(out);
                b.collect_labels(out);
            }
        }
    }

    pub fn distinct(&self) -> bool {
        let ls = self.labels();
        let set: BTreeSet<_> = ls.iter().collect();
        set.len() == ls.len()
    }

    /// Renders the tuple as a term value.
    pub fn to_term(&self) -> Term {
        match self {
            LabelTuple::Label(l) => Term::Lab(*l),
            LabelTuple::Unit => Term::Unit,
            LabelTuple::Pair(a, b) => Term::pair(a.to_term(), b.to_term()),
        }
    }

    /// Reads a value back as a label tuple.
    pub fn from_term(term: &Term) -> Result<LabelTuple, TupleError> {
        fn go(term: &Term, seen: &mut BTreeSet<Label>) -> Result<LabelTuple, TupleError> {
            match term {
                Term::Lab(l) => {
                    if !seen.insert(*l) {
                        return Err(TupleError::Duplicate(*l));
                    }
                    Ok(LabelTuple::Label(*l))
                }
                Term::Unit => Ok(LabelTuple::Unit),
                Term::Pair(a, b) => {
                    let a = go(a, seen)?;
                    let b = go(b, seen)?;
                    Ok(LabelTuple::Pair(Box::new(a), Box::new(b)))
                }
                other => Err(TupleError::NotATuple(format!("{other:?}"))),
            }
        }
        go(term, &mut BTreeSet::new())
    }

    /// Applies a label renaming leaf-wise. The map must be injective on the
    /// tuple's labels for the distinctness invariant to carry over.
    pub fn rename(&self, map: &BTreeMap<Label, Label>) -> LabelTuple {
        match self {
            LabelTuple::Label(l) => LabelTuple::Label(*map.get(l).unwrap_or(l)),
            LabelTuple::Unit => LabelTuple::Unit,
            LabelTuple::Pair(a, b) => {
                LabelTuple::Pair(Box::new(a.rename(map)), Box::new(b.rename(map)))
            }
        }
    }
}

impl fmt::Display for LabelTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelTuple::Label(l) => write!(f, "{l}"),
            LabelTuple::Unit => write!(f, "()"),
            LabelTuple::Pair(a, b) => write!(f, "({a}, {b})"),
        }
    }
}
