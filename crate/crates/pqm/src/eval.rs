//! Big-step evaluation of configurations `(C, M) ⇓ (C', V)` or `⇓ Error`.
//!
//! Evaluation is substitution-based and call-by-value, with left-to-right
//! premise order in every binary form. The circuit-building rules are
//! `box`, which runs a lifted function on fresh labels in an identity
//! circuit and packages the result, and `apply`, which grafts a boxed
//! circuit onto the live circuit. Any premise whose value has the wrong
//! head constructor is a run-time type error; evaluation of a bare
//! variable is an error outright.

use std::fmt;

use serde::Serialize;

use crate::builtins::{BuiltinEnv, ConstantDecl, ConstantKind};
use crate::circuit::{
    append, freshlabels, identity, single_gate_boxed, BoxedCircuit, Circuit, CircuitError,
    LabelAllocator, Signature,
};
use crate::syntax::{substitute, LabelTuple, Term, TupleError};

/// A pair of the circuit under construction and the term being evaluated.
#[derive(Clone, PartialEq, Debug)]
pub struct Configuration {
    pub circuit: Circuit,
    pub term: Term,
}

impl Configuration {
    pub fn new(circuit: Circuit, term: Term) -> Configuration {
        Configuration { circuit, term }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub enum EvalErrorKind {
    RuntimeTypeError,
    UnboundVariable,
    UnboundLabel,
    CloningError,
    NotInvertible,
    /// Artifact-level: the step budget ran out. The language is
    /// terminating, so hitting this on a well-typed term is a bug signal.
    FuelExhausted,
}

impl fmt::Display for EvalErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            EvalErrorKind::RuntimeTypeError => "RuntimeTypeError",
            EvalErrorKind::UnboundVariable => "UnboundVariable",
            EvalErrorKind::UnboundLabel => "UnboundLabel",
            EvalErrorKind::CloningError => "CloningError",
            EvalErrorKind::NotInvertible => "NotInvertible",
            EvalErrorKind::FuelExhausted => "FuelExhausted",
        };
        write!(f, "{name}")
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub detail: String,
    /// Rule names active when the error was raised, outermost first.
    pub trace: Vec<&'static str>,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.detail)
    }
}

impl std::error::Error for EvalError {}

/// The result of evaluating a configuration.
#[derive(Clone, PartialEq, Debug)]
pub enum EvalOutcome {
    Value(Configuration),
    Error(EvalError),
}

/// One structured trace record per rule application.
#[derive(Clone, Debug, Serialize)]
pub struct TraceEvent {
    pub rule: &'static str,
    pub gates: usize,
    pub term_size: usize,
}

fn rule_name(term: &Term) -> &'static str {
    match term {
        Term::Var(_) => "var",
        Term::Lab(_) => "label",
        Term::Const(_) => "const",
        Term::Unit => "unit",
        Term::Lam(_, _, _) => "lam",
        Term::Lift(_) => "lift",
        Term::Boxed(_) => "circ",
        Term::NatLit(_) => "nat",
        Term::Nil(_) => "nil",
        Term::Let(_, _, _) => "let",
        Term::LetPair(_, _, _, _) => "let-pair",
        Term::Seq(_, _) => "seq",
        Term::Pair(_, _) => "pair",
        Term::App(_, _) => "app",
        Term::Force(_) => "force",
        Term::Box(_, _) => "box",
        Term::Apply(_, _) => "apply",
        Term::Case(..) => "case",
        Term::Abort(_, _) => "abort",
        Term::InL(_, _, _) => "left",
        Term::InR(_, _, _) => "right",
        Term::Succ(_) => "succ",
        Term::Cons(_, _) => "cons",
        Term::ConstApp(_, _) => "const-app",
    }
}

pub const DEFAULT_FUEL: u64 = 1_000_000;

/// The evaluator: owns the fuel budget and optional tracing; the label
/// allocator is threaded through each call.
pub struct Evaluator<'a> {
    sig: &'a Signature,
    env: &'a BuiltinEnv,
    fuel: u64,
    stack: Vec<&'static str>,
    trace: Option<Vec<TraceEvent>>,
}

type EResult<T> = Result<T, EvalError>;

impl<'a> Evaluator<'a> {
    pub fn new(sig: &'a Signature, env: &'a BuiltinEnv) -> Evaluator<'a> {
        Evaluator {
            sig,
            env,
            fuel: DEFAULT_FUEL,
            stack: Vec::new(),
            trace: None,
        }
    }

    pub fn with_fuel(mut self, fuel: u64) -> Self {
        self.fuel = fuel;
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn take_trace(&mut self) -> Vec<TraceEvent> {
        self.trace.take().unwrap_or_default()
    }

    fn err<T>(&self, kind: EvalErrorKind, detail: impl Into<String>) -> EResult<T> {
        Err(EvalError {
            kind,
            detail: detail.into(),
            trace: self.stack.clone(),
        })
    }

    fn circuit_err<T>(&self, e: CircuitError) -> EResult<T> {
        let kind = match &e {
            CircuitError::UnboundLabel(_) => EvalErrorKind::UnboundLabel,
            CircuitError::Cloning(_) => EvalErrorKind::CloningError,
            CircuitError::NotInvertible(_) => EvalErrorKind::NotInvertible,
            _ => EvalErrorKind::RuntimeTypeError,
        };
        self.err(kind, e.to_string())
    }

    fn tuple_err<T>(&self, e: TupleError) -> EResult<T> {
        match e {
            TupleError::Duplicate(l) => self.err(
                EvalErrorKind::CloningError,
                format!("label {l} occurs twice in a tuple"),
            ),
            TupleError::NotATuple(what) => self.err(
                EvalErrorKind::RuntimeTypeError,
                format!("expected a label tuple, found {what}"),
            ),
        }
    }

    /// Evaluates a configuration to a value configuration or an error.
    pub fn eval(
        &mut self,
        cfg: Configuration,
        alloc: &mut LabelAllocator,
    ) -> EvalOutcome {
        debug_assert!(
            cfg.circuit
                .all_labels()
                .iter()
                .chain(crate::syntax::free_identifiers(&cfg.term).1.iter())
                .all(|l| l.0 < alloc.watermark()),
            "allocator must be fresh for the configuration"
        );
        match self.go(cfg.circuit, &cfg.term, alloc) {
            Ok((circuit, value)) => {
                debug_assert!(value.is_value());
                EvalOutcome::Value(Configuration::new(circuit, value))
            }
            Err(e) => EvalOutcome::Error(e),
        }
    }

    fn go(&mut self, c: Circuit, term: &Term, alloc: &mut LabelAllocator) -> EResult<(Circuit, Term)> {
        if self.fuel == 0 {
            return self.err(EvalErrorKind::FuelExhausted, "step budget exhausted");
        }
        self.fuel -= 1;
        let rule = rule_name(term);
        if let Some(events) = self.trace.as_mut() {
            events.push(TraceEvent {
                rule,
                gates: c.size(),
                term_size: term.size(),
            });
        }
        self.stack.push(rule);
        let result = self.step(c, term, alloc);
        self.stack.pop();
        result
    }

    fn step(&mut self, c: Circuit, term: &Term, alloc: &mut LabelAllocator) -> EResult<(Circuit, Term)> {
        match term {
            // A bare variable is an unbound-variable error.
            Term::Var(x) => self.err(
                EvalErrorKind::UnboundVariable,
                format!("variable `{x}` is not bound"),
            ),
            // Values evaluate to themselves without touching the circuit.
            Term::Lab(_)
            | Term::Const(_)
            | Term::Unit
            | Term::Lam(_, _, _)
            | Term::Lift(_)
            | Term::Boxed(_)
            | Term::NatLit(_)
            | Term::Nil(_) => Ok((c, term.clone())),
            Term::InL(a, b, m) => {
                let (c, v) = self.go(c, m, alloc)?;
                Ok((c, Term::inl(a.clone(), b.clone(), v)))
            }
            Term::InR(a, b, m) => {
                let (c, v) = self.go(c, m, alloc)?;
                Ok((c, Term::inr(a.clone(), b.clone(), v)))
            }
            Term::Pair(m, n) => {
                let (c, v) = self.go(c, m, alloc)?;
                let (c, w) = self.go(c, n, alloc)?;
                Ok((c, Term::pair(v, w)))
            }
            Term::Cons(m, n) => {
                let (c, v) = self.go(c, m, alloc)?;
                let (c, w) = self.go(c, n, alloc)?;
                Ok((c, Term::cons(v, w)))
            }
            Term::Succ(m) => {
                let (c, v) = self.go(c, m, alloc)?;
                match v {
                    Term::NatLit(n) => Ok((c, Term::NatLit(n + 1))),
                    other => self.err(
                        EvalErrorKind::RuntimeTypeError,
                        format!("succ of a non-numeral: {other}"),
                    ),
                }
            }
            Term::Let(x, bound, body) => {
                let (c, v) = self.go(c, bound, alloc)?;
                let body = substitute(body, x, &v);
                self.go(c, &body, alloc)
            }
            Term::LetPair(x, y, bound, body) => {
                let (c, v) = self.go(c, bound, alloc)?;
                match v {
                    Term::Pair(v1, v2) => {
                        let body = substitute(&substitute(body, x, &v1), y, &v2);
                        self.go(c, &body, alloc)
                    }
                    other => self.err(
                        EvalErrorKind::RuntimeTypeError,
                        format!("let-pair of a non-pair: {other}"),
                    ),
                }
            }
            Term::Seq(m, n) => {
                let (c, v) = self.go(c, m, alloc)?;
                match v {
                    Term::Unit => self.go(c, n, alloc),
                    other => self.err(
                        EvalErrorKind::RuntimeTypeError,
                        format!("sequencing a non-unit value: {other}"),
                    ),
                }
            }
            Term::Case(scrut, x, l, y, r) => {
                let (c, v) = self.go(c, scrut, alloc)?;
                match v {
                    Term::InL(_, _, v) => {
                        let body = substitute(l, x, &v);
                        self.go(c, &body, alloc)
                    }
                    Term::InR(_, _, v) => {
                        let body = substitute(r, y, &v);
                        self.go(c, &body, alloc)
                    }
                    other => self.err(
                        EvalErrorKind::RuntimeTypeError,
                        format!("case of a non-injection: {other}"),
                    ),
                }
            }
            Term::Abort(_, m) => {
                let (_, v) = self.go(c, m, alloc)?;
                self.err(
                    EvalErrorKind::RuntimeTypeError,
                    format!("abort applied to a value: {v}"),
                )
            }
            Term::Force(m) => {
                let (c, v) = self.go(c, m, alloc)?;
                match v {
                    Term::Lift(inner) => self.go(c, &inner, alloc),
                    other => self.err(
                        EvalErrorKind::RuntimeTypeError,
                        format!("forcing a non-lift value: {other}"),
                    ),
                }
            }
            Term::App(f, arg) => {
                let (c, fv) = self.go(c, f, alloc)?;
                match fv {
                    Term::Lam(x, _, body) => {
                        let (c, av) = self.go(c, arg, alloc)?;
                        let body = substitute(&body, &x, &av);
                        self.go(c, &body, alloc)
                    }
                    Term::Const(name) => {
                        let (c, av) = self.go(c, arg, alloc)?;
                        self.apply_spine(c, &name, vec![av], alloc)
                    }
                    Term::ConstApp(name, mut args) => {
                        let (c, av) = self.go(c, arg, alloc)?;
                        args.push(av);
                        self.apply_spine(c, &name, args, alloc)
                    }
                    other => self.err(
                        EvalErrorKind::RuntimeTypeError,
                        format!("applying a non-function value: {other}"),
                    ),
                }
            }
            Term::ConstApp(name, args) => {
                let mut c = c;
                let mut values = Vec::with_capacity(args.len());
                for arg in args {
                    let (c2, v) = self.go(c, arg, alloc)?;
                    c = c2;
                    values.push(v);
                }
                self.apply_spine(c, name, values, alloc)
            }
            Term::Box(ty, m) => {
                let (c, v) = self.go(c, m, alloc)?;
                let inner = match v {
                    Term::Lift(inner) => inner,
                    other => {
                        return self.err(
                            EvalErrorKind::RuntimeTypeError,
                            format!("box of a non-lift value: {other}"),
                        )
                    }
                };
                let (q, in_tuple) = match freshlabels(ty, alloc) {
                    Ok(pair) => pair,
                    Err(e) => return self.circuit_err(e),
                };
                // The sub-evaluation builds against a fresh identity circuit
                // but shares the allocator, so its labels never collide with
                // the outer circuit.
                let inner_app = Term::app((*inner).clone(), in_tuple.to_term());
                let (d, result) = self.go(identity(&q), &inner_app, alloc)?;
                let out_tuple = match LabelTuple::from_term(&result) {
                    Ok(t) => t,
                    Err(e) => return self.tuple_err(e),
                };
                match BoxedCircuit::new(in_tuple, d, out_tuple) {
                    Ok(boxed) => Ok((c, Term::Boxed(boxed))),
                    Err(e) => self.circuit_err(e),
                }
            }
            Term::Apply(m, n) => {
                let (c, mv) = self.go(c, m, alloc)?;
                let boxed = match mv {
                    Term::Boxed(b) => b,
                    other => {
                        return self.err(
                            EvalErrorKind::RuntimeTypeError,
                            format!("apply of a non-circuit value: {other}"),
                        )
                    }
                };
                let (c, nv) = self.go(c, n, alloc)?;
                let k = match LabelTuple::from_term(&nv) {
                    Ok(t) => t,
                    Err(e) => return self.tuple_err(e),
                };
                match append(&c, &k, &boxed, alloc) {
                    Ok((c, out)) => Ok((c, out.to_term())),
                    Err(e) => self.circuit_err(e),
                }
            }
        }
    }

    /// A constant applied to `args` values: an under-applied spine is a
    /// value, a saturated one fires the delta rule.
    fn apply_spine(
        &mut self,
        c: Circuit,
        name: &str,
        args: Vec<Term>,
        alloc: &mut LabelAllocator,
    ) -> EResult<(Circuit, Term)> {
        let decl = match self.env.get(name) {
            Some(d) => d.clone(),
            None => {
                return self.err(
                    EvalErrorKind::UnboundVariable,
                    format!("unknown constant `{name}`"),
                )
            }
        };
        if args.len() < decl.arity {
            return Ok((c, Term::ConstApp(name.to_string(), args)));
        }
        debug_assert_eq!(args.len(), decl.arity);
        self.apply_constant(c, &decl, args, alloc)
    }

    fn apply_constant(
        &mut self,
        c: Circuit,
        decl: &ConstantDecl,
        mut args: Vec<Term>,
        alloc: &mut LabelAllocator,
    ) -> EResult<(Circuit, Term)> {
        match &decl.kind {
            ConstantKind::Gate { .. } => {
                let arg = args.pop().expect("gate constants take one argument");
                let k = match LabelTuple::from_term(&arg) {
                    Ok(t) => t,
                    Err(e) => return self.tuple_err(e),
                };
                // Build the single-gate boxed circuit on local labels; the
                // append renames them anyway.
                let mut local = LabelAllocator::new();
                let boxed = match single_gate_boxed(self.sig, &decl.name, &mut local) {
                    Ok(b) => b,
                    Err(e) => return self.circuit_err(e),
                };
                match append(&c, &k, &boxed, alloc) {
                    Ok((c, out)) => Ok((c, out.to_term())),
                    Err(e) => self.circuit_err(e),
                }
            }
            ConstantKind::Size => {
                let arg = args.pop().expect("size takes one argument");
                match arg {
                    Term::Boxed(b) => Ok((c, Term::NatLit(b.size() as u64))),
                    other => self.err(
                        EvalErrorKind::RuntimeTypeError,
                        format!("size of a non-circuit value: {other}"),
                    ),
                }
            }
            ConstantKind::Invert => {
                let arg = args.pop().expect("invert takes one argument");
                match arg {
                    Term::Boxed(b) => match b.invert(self.sig) {
                        Ok(inv) => Ok((c, Term::Boxed(inv))),
                        Err(e) => self.circuit_err(e),
                    },
                    other => self.err(
                        EvalErrorKind::RuntimeTypeError,
                        format!("invert of a non-circuit value: {other}"),
                    ),
                }
            }
            ConstantKind::FoldNat => {
                let n = args.pop().expect("arity 3");
                let base = args.pop().expect("arity 3");
                let step = args.pop().expect("arity 3");
                let count = match n {
                    Term::NatLit(k) => k,
                    other => {
                        return self.err(
                            EvalErrorKind::RuntimeTypeError,
                            format!("foldNat of a non-numeral: {other}"),
                        )
                    }
                };
                let mut c = c;
                let mut acc = base;
                for _ in 0..count {
                    let iter = Term::app(Term::force(step.clone()), acc);
                    let (c2, v) = self.go(c, &iter, alloc)?;
                    c = c2;
                    acc = v;
                }
                Ok((c, acc))
            }
            ConstantKind::FoldList => {
                let list = args.pop().expect("arity 3");
                let base = args.pop().expect("arity 3");
                let step = args.pop().expect("arity 3");
                let mut elems = Vec::new();
                let mut cursor = list;
                loop {
                    match cursor {
                        Term::Nil(_) => break,
                        Term::Cons(head, tail) => {
                            elems.push(*head);
                            cursor = *tail;
                        }
                        other => {
                            return self.err(
                                EvalErrorKind::RuntimeTypeError,
                                format!("foldList of a non-list: {other}"),
                            )
                        }
                    }
                }
                // Left fold, head first: the step takes (accumulator, element).
                let mut c = c;
                let mut acc = base;
                for elem in elems {
                    let iter = Term::app(Term::force(step.clone()), Term::pair(acc, elem));
                    let (c2, v) = self.go(c, &iter, alloc)?;
                    c = c2;
                    acc = v;
                }
                Ok((c, acc))
            }
        }
    }
}

/// Convenience wrapper: evaluates with a one-shot evaluator.
pub fn eval(
    sig: &Signature,
    env: &BuiltinEnv,
    cfg: Configuration,
    alloc: &mut LabelAllocator,
    fuel: u64,
) -> EvalOutcome {
    Evaluator::new(sig, env).with_fuel(fuel).eval(cfg, alloc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::{builtin_environment, default_signature, resolve_constants};
    use crate::parse::parse_term_str;
    use crate::syntax::{alpha_eq, Label, LabelContext};

    fn setup() -> (Signature, BuiltinEnv) {
        let sig = default_signature();
        let env = builtin_environment(&sig).unwrap();
        (sig, env)
    }

    fn parse(env: &BuiltinEnv, src: &str) -> Term {
        resolve_constants(&parse_term_str(src).unwrap(), env).unwrap()
    }

    fn run(sig: &Signature, env: &BuiltinEnv, c: Circuit, term: Term) -> EvalOutcome {
        let mut alloc = LabelAllocator::above(
            c.all_labels()
                .into_iter()
                .chain(crate::syntax::free_identifiers(&term).1),
        );
        eval(sig, env, Configuration::new(c, term), &mut alloc, DEFAULT_FUEL)
    }

    fn expect_value(outcome: EvalOutcome) -> Configuration {
        match outcome {
            EvalOutcome::Value(cfg) => cfg,
            EvalOutcome::Error(e) => panic!("unexpected error: {e}"),
        }
    }

    fn expect_error(outcome: EvalOutcome) -> EvalError {
        match outcome {
            EvalOutcome::Error(e) => e,
            EvalOutcome::Value(cfg) => panic!("unexpected value: {}", cfg.term),
        }
    }

    fn qctx(labels: &[(u64, &str)]) -> LabelContext {
        labels
            .iter()
            .map(|(i, w)| (Label(*i), w.to_string()))
            .collect()
    }

    #[test]
    fn labels_self_evaluate() {
        let (sig, env) = setup();
        let c = identity(&qctx(&[(0, "Qubit")]));
        let cfg = expect_value(run(&sig, &env, c.clone(), Term::Lab(Label(0))));
        assert_eq!(cfg.circuit, c);
        assert_eq!(cfg.term, Term::Lab(Label(0)));
    }

    #[test]
    fn variables_error() {
        let (sig, env) = setup();
        let err = expect_error(run(
            &sig,
            &env,
            identity(&LabelContext::new()),
            Term::var("x"),
        ));
        assert_eq!(err.kind, EvalErrorKind::UnboundVariable);
    }

    #[test]
    fn box_builds_a_circuit() {
        let (sig, env) = setup();
        let term = parse(&env, "box[Qubit] (lift (fun x : Qubit . H x))");
        let cfg = expect_value(run(&sig, &env, identity(&LabelContext::new()), term));
        assert_eq!(cfg.circuit.size(), 0, "outer circuit untouched");
        let Term::Boxed(got) = cfg.term else {
            panic!("expected a boxed circuit")
        };
        let mut local = LabelAllocator::new();
        let want = single_gate_boxed(&sig, "H", &mut local).unwrap();
        assert!(got.equiv(&want));
    }

    #[test]
    fn apply_grafts_the_boxed_circuit() {
        let (sig, env) = setup();
        let c = identity(&qctx(&[(0, "Qubit")]));
        let term = parse(&env, "apply(box[Qubit] (lift (fun x : Qubit . H x)), L0)");
        let cfg = expect_value(run(&sig, &env, c, term));
        assert_eq!(cfg.circuit.size(), 1);
        assert_eq!(cfg.circuit.gates[0].gate, "H");
        assert_eq!(cfg.circuit.gates[0].ins, vec![Label(0)]);
        assert!(matches!(cfg.term, Term::Lab(_)));
    }

    #[test]
    fn cloning_error_on_duplicate_tuple() {
        let (sig, env) = setup();
        let term = parse(
            &env,
            "box[Qubit] (lift (fun q : Qubit . CNOT (q, q)))",
        );
        let err = expect_error(run(&sig, &env, identity(&LabelContext::new()), term));
        assert_eq!(err.kind, EvalErrorKind::CloningError);
    }

    #[test]
    fn unbound_label_on_dead_wire() {
        let (sig, env) = setup();
        // The second H consumes a label the first already used up.
        let term = parse(
            &env,
            "box[Qubit] (lift (fun q : Qubit . let a = H q in let b = H q in b))",
        );
        let err = expect_error(run(&sig, &env, identity(&LabelContext::new()), term));
        assert_eq!(err.kind, EvalErrorKind::UnboundLabel);
    }

    #[test]
    fn force_of_lift_behaves_as_the_body() {
        let (sig, env) = setup();
        for src in ["()", "(fun x : I . x) ()", "succ 2", "(1, nil[Qubit])"] {
            let direct = parse(&env, src);
            let forced = Term::force(Term::lift(direct.clone()));
            let v1 = expect_value(run(
                &sig,
                &env,
                identity(&LabelContext::new()),
                direct,
            ));
            let v2 = expect_value(run(
                &sig,
                &env,
                identity(&LabelContext::new()),
                forced,
            ));
            assert!(alpha_eq(&v1.term, &v2.term), "{src}");
            assert_eq!(v1.circuit, v2.circuit);
        }
    }

    #[test]
    fn runtime_type_errors() {
        let (sig, env) = setup();
        for src in [
            "() ()",
            "force ()",
            "let (a, b) = () in a",
            "succ ()",
            "() ; ()",
        ] {
            let term = parse(&env, src);
            let outcome = run(&sig, &env, identity(&LabelContext::new()), term);
            if src == "() ; ()" {
                // A well-typed control: the first () is unit, so this one
                // actually succeeds.
                expect_value(outcome);
            } else {
                let err = expect_error(outcome);
                assert_eq!(err.kind, EvalErrorKind::RuntimeTypeError, "{src}");
                assert!(!err.trace.is_empty());
            }
        }
    }

    #[test]
    fn size_and_invert_deltas() {
        let (sig, env) = setup();
        let term = parse(&env, "size (box[Qubit] (lift (fun q : Qubit . H (X q))))");
        let cfg = expect_value(run(&sig, &env, identity(&LabelContext::new()), term));
        assert_eq!(cfg.term, Term::NatLit(2));

        let term = parse(&env, "size (box[Qubit] (lift (fun q : Qubit . q)))");
        let cfg = expect_value(run(&sig, &env, identity(&LabelContext::new()), term));
        assert_eq!(cfg.term, Term::NatLit(0));

        let term = parse(
            &env,
            "size (invert (box[Qubit] (lift (fun q : Qubit . H (X q)))))",
        );
        let cfg = expect_value(run(&sig, &env, identity(&LabelContext::new()), term));
        assert_eq!(cfg.term, Term::NatLit(2));

        let term = parse(&env, "invert (box[Qubit] (lift (fun q : Qubit . meas q)))");
        let err = expect_error(run(&sig, &env, identity(&LabelContext::new()), term));
        assert_eq!(err.kind, EvalErrorKind::NotInvertible);
    }

    #[test]
    fn fold_nat_threads_the_accumulator() {
        let (sig, env) = setup();
        let term = parse(&env, "foldNat (lift (fun n : Nat . succ n)) 3 4");
        let cfg = expect_value(run(&sig, &env, identity(&LabelContext::new()), term));
        assert_eq!(cfg.term, Term::NatLit(7));

        // Zero iterations return the base with the circuit unchanged.
        let term = parse(&env, "foldNat (lift (fun n : Nat . succ n)) 3 0");
        let cfg = expect_value(run(&sig, &env, identity(&LabelContext::new()), term));
        assert_eq!(cfg.term, Term::NatLit(3));
        assert_eq!(cfg.circuit.size(), 0);
    }

    #[test]
    fn fold_nat_forces_step_exactly_n_times() {
        let (sig, env) = setup();
        for k in [0u64, 1, 5] {
            let term = parse(&env, &format!("foldNat (lift (fun n : Nat . succ n)) 0 {k}"));
            let mut alloc = LabelAllocator::new();
            let mut evaluator = Evaluator::new(&sig, &env).with_trace();
            let outcome = evaluator.eval(
                Configuration::new(identity(&LabelContext::new()), term),
                &mut alloc,
            );
            assert!(matches!(outcome, EvalOutcome::Value(_)));
            let forces = evaluator
                .take_trace()
                .iter()
                .filter(|e| e.rule == "force")
                .count();
            assert_eq!(forces as u64, k);
        }
    }

    #[test]
    fn fold_list_is_a_left_fold() {
        let (sig, env) = setup();
        // Sum a list of naturals via foldNat-free arithmetic: step adds the
        // element by iterating succ.
        let term = parse(
            &env,
            "foldList (lift (fun p : Nat * Nat . let (acc, x) = p in foldNat (lift (fun n : Nat . succ n)) acc x)) \
             0 cons(1, cons(2, cons(3, nil[Nat])))",
        );
        let cfg = expect_value(run(&sig, &env, identity(&LabelContext::new()), term));
        assert_eq!(cfg.term, Term::NatLit(6));
    }

    #[test]
    fn under_applied_constants_are_values() {
        let (sig, env) = setup();
        let term = parse(&env, "foldNat (lift (fun n : Nat . succ n))");
        let cfg = expect_value(run(&sig, &env, identity(&LabelContext::new()), term));
        match &cfg.term {
            Term::ConstApp(name, args) => {
                assert_eq!(name, "foldNat");
                assert_eq!(args.len(), 1);
                assert!(cfg.term.is_value());
            }
            other => panic!("expected a constant spine, got {other}"),
        }
    }

    #[test]
    fn fuel_exhaustion_is_reported() {
        let (sig, env) = setup();
        let term = parse(&env, "foldNat (lift (fun n : Nat . succ n)) 0 50");
        let mut alloc = LabelAllocator::new();
        let outcome = eval(
            &sig,
            &env,
            Configuration::new(identity(&LabelContext::new()), term),
            &mut alloc,
            10,
        );
        let err = expect_error(outcome);
        assert_eq!(err.kind, EvalErrorKind::FuelExhausted);
    }

    #[test]
    fn evaluation_only_appends_gates() {
        let (sig, env) = setup();
        let c = identity(&qctx(&[(0, "Qubit"), (1, "Qubit")]));
        let term = parse(&env, "let a = H L0 in (a, X L1)");
        let cfg = expect_value(run(&sig, &env, c.clone(), term));
        assert_eq!(cfg.circuit.inputs, c.inputs);
        assert!(cfg.circuit.gates.len() >= c.gates.len());
        assert_eq!(&cfg.circuit.gates[..c.gates.len()], &c.gates[..]);
    }
}
