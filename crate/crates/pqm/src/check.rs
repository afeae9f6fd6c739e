//! The type checker: decides `Γ;Q ⊢ M : A`, enforcing that labels and
//! linear variables are used exactly once while parameters are unrestricted.
//!
//! Linearity is checked input-style: the whole context is passed down and
//! every rule reports the set of linear resources its term consumed. Binary
//! rules require the two reports to be disjoint (this implements the
//! declarative context splitting `Φ,Γ1,Γ2; Q1,Q2` with the parameter part
//! implicitly shared), and at the root and under every binder the report
//! must equal the bound linear resources exactly. Whether a variable is
//! shareable is decided by its type alone, never by its position in the
//! context.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::builtins::BuiltinEnv;
use crate::circuit::{Circuit, CircuitError, Signature};
use crate::parse::{Diagnostic, Severity, Span};
use crate::syntax::{Label, LabelContext, LabelTuple, Term, Type, VarContext};

/// The linear resources a term consumed.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Usage {
    pub vars: BTreeSet<String>,
    pub labels: BTreeSet<Label>,
}

impl Usage {
    fn empty() -> Usage {
        Usage::default()
    }

    fn is_empty(&self) -> bool {
        self.vars.is_empty() && self.labels.is_empty()
    }

    /// Some consumed resource, for error reporting.
    fn witness(&self) -> Option<String> {
        self.vars
            .iter()
            .next()
            .cloned()
            .or_else(|| self.labels.iter().next().map(Label::to_string))
    }
}

#[derive(Clone, PartialEq, Debug, Error)]
pub enum TypeError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("unbound label {0}")]
    UnboundLabel(Label),
    #[error("`{name}` is linear but is used {uses} times")]
    LinearityViolation { name: String, uses: usize },
    #[error("case branches consume different linear resources ({detail})")]
    BranchUsageMismatch { detail: String },
    #[error("type mismatch: expected {expected}, found {found}")]
    TypeMismatch { expected: Type, found: Type },
    #[error("expected a function, found {0}")]
    ExpectedFunction(Type),
    #[error("expected a tensor, found {0}")]
    ExpectedTensor(Type),
    #[error("expected a sum, found {0}")]
    ExpectedSum(Type),
    #[error("expected a !-type, found {0}")]
    ExpectedBang(Type),
    #[error("expected a Circ type, found {0}")]
    ExpectedCirc(Type),
    #[error("`{name}` is a non-parameter resource consumed under lift")]
    NonParameterUnderLift { name: String },
    #[error("{0} is not a simple M-type")]
    NotSimpleMType(Type),
    #[error("duplicate label {0} in tuple")]
    DuplicateLabelInTuple(Label),
    #[error("label {0} is never used")]
    UnusedLabel(Label),
    #[error("configuration interface mismatch: {0}")]
    InterfaceMismatch(String),
    #[error("cannot determine the type of schematic constant `{0}` here")]
    AmbiguousConstant(String),
    #[error("constant `{constant}` cannot take an argument of type {found}")]
    SchemaMismatch { constant: String, found: Type },
    #[error("undeclared wire type `{0}`")]
    UndeclaredWireType(String),
    #[error("invalid boxed circuit: {0}")]
    CircuitInvalid(String),
}

impl TypeError {
    /// Stable machine-readable code, one per error class.
    pub fn code(&self) -> &'static str {
        match self {
            TypeError::UnboundVariable(_) => "UnboundVariable",
            TypeError::UnboundLabel(_) => "UnboundLabel",
            TypeError::LinearityViolation { .. } => "LinearityViolation",
            TypeError::BranchUsageMismatch { .. } => "BranchUsageMismatch",
            TypeError::TypeMismatch { .. } => "TypeMismatch",
            TypeError::ExpectedFunction(_) => "ExpectedFunction",
            TypeError::ExpectedTensor(_) => "ExpectedTensor",
            TypeError::ExpectedSum(_) => "ExpectedSum",
            TypeError::ExpectedBang(_) => "ExpectedBang",
            TypeError::ExpectedCirc(_) => "ExpectedCirc",
            TypeError::NonParameterUnderLift { .. } => "NonParameterUnderLift",
            TypeError::NotSimpleMType(_) => "NotSimpleMType",
            TypeError::DuplicateLabelInTuple(_) => "DuplicateLabelInTuple",
            TypeError::UnusedLabel(_) => "UnusedLabel",
            TypeError::InterfaceMismatch(_) => "InterfaceMismatch",
            TypeError::AmbiguousConstant(_) => "AmbiguousConstant",
            TypeError::SchemaMismatch { .. } => "SchemaMismatch",
            TypeError::UndeclaredWireType(_) => "UndeclaredWireType",
            TypeError::CircuitInvalid(_) => "CircuitInvalid",
        }
    }

    pub fn to_diagnostic(&self, span: Span) -> Diagnostic {
        Diagnostic {
            severity: Severity::Error,
            code: self.code().to_string(),
            message: self.to_string(),
            span,
        }
    }
}

struct Scope<'a> {
    outer: &'a VarContext,
    binds: Vec<(String, Type)>,
}

impl<'a> Scope<'a> {
    fn lookup(&self, name: &str) -> Option<&Type> {
        self.binds
            .iter()
            .rev()
            .find(|(x, _)| x == name)
            .map(|(_, t)| t)
            .or_else(|| self.outer.get(name))
    }
}

struct Checker<'a> {
    sig: &'a Signature,
    env: &'a BuiltinEnv,
    labels: &'a LabelContext,
}

type CResult<T> = Result<T, TypeError>;

fn join(mut a: Usage, b: Usage) -> CResult<Usage> {
    if let Some(x) = a.vars.intersection(&b.vars).next() {
        return Err(TypeError::LinearityViolation {
            name: x.clone(),
            uses: 2,
        });
    }
    if let Some(l) = a.labels.intersection(&b.labels).next() {
        return Err(TypeError::LinearityViolation {
            name: l.to_string(),
            uses: 2,
        });
    }
    a.vars.extend(b.vars);
    a.labels.extend(b.labels);
    Ok(a)
}

impl<'a> Checker<'a> {
    /// Well-formedness of written types: wire types declared, Circ
    /// arguments simple.
    fn wf(&self, ty: &Type) -> CResult<()> {
        match ty {
            Type::Wire(name) => {
                if self.sig.has_wire_type(name) {
                    Ok(())
                } else {
                    Err(TypeError::UndeclaredWireType(name.clone()))
                }
            }
            Type::Zero | Type::Unit | Type::Nat => Ok(()),
            Type::Sum(a, b) | Type::Tensor(a, b) | Type::Lolli(a, b) => {
                self.wf(a)?;
                self.wf(b)
            }
            Type::Bang(a) | Type::List(a) => self.wf(a),
            Type::Circ(t, u) => {
                for side in [t, u] {
                    if !side.is_simple_m() {
                        return Err(TypeError::NotSimpleMType((**side).clone()));
                    }
                    self.wf(side)?;
                }
                Ok(())
            }
        }
    }

    /// Closes a binder: a linear binding must appear in the body's usage
    /// exactly once; its consumption is then discharged.
    fn close_binder(&self, name: &str, ty: &Type, usage: &mut Usage) -> CResult<()> {
        if !ty.is_parameter() && !usage.vars.remove(name) {
            return Err(TypeError::LinearityViolation {
                name: name.to_string(),
                uses: 0,
            });
        }
        Ok(())
    }

    fn infer(&self, scope: &mut Scope, term: &Term) -> CResult<(Type, Usage)> {
        match term {
            Term::Var(x) => {
                let ty = scope
                    .lookup(x)
                    .cloned()
                    .ok_or_else(|| TypeError::UnboundVariable(x.clone()))?;
                let mut usage = Usage::empty();
                if !ty.is_parameter() {
                    usage.vars.insert(x.clone());
                }
                Ok((ty, usage))
            }
            Term::Lab(l) => {
                let wire = self
                    .labels
                    .get(l)
                    .cloned()
                    .ok_or(TypeError::UnboundLabel(*l))?;
                let mut usage = Usage::empty();
                usage.labels.insert(*l);
                Ok((Type::Wire(wire), usage))
            }
            Term::Const(c) => {
                let decl = self
                    .env
                    .get(c)
                    .ok_or_else(|| TypeError::UnboundVariable(c.clone()))?;
                match decl.mono_type() {
                    Some(ty) => Ok((ty, Usage::empty())),
                    None => Err(TypeError::AmbiguousConstant(c.clone())),
                }
            }
            Term::Unit => Ok((Type::Unit, Usage::empty())),
            Term::NatLit(_) => Ok((Type::Nat, Usage::empty())),
            Term::Succ(m) => {
                let usage = self.check_at(scope, m, &Type::Nat)?;
                Ok((Type::Nat, usage))
            }
            Term::Nil(a) => {
                self.wf(a)?;
                Ok((Type::list(a.clone()), Usage::empty()))
            }
            Term::Cons(head, tail) => {
                let (a, u1) = self.infer(scope, head)?;
                let u2 = self.check_at(scope, tail, &Type::list(a.clone()))?;
                Ok((Type::list(a), join(u1, u2)?))
            }
            Term::Lam(x, a, body) => {
                self.wf(a)?;
                scope.binds.push((x.clone(), a.clone()));
                let result = self.infer(scope, body);
                scope.binds.pop();
                let (b, mut usage) = result?;
                self.close_binder(x, a, &mut usage)?;
                Ok((Type::lolli(a.clone(), b), usage))
            }
            Term::App(f, arg) => match self.infer(scope, f) {
                Ok((Type::Lolli(dom, cod), u1)) => {
                    let u2 = self.check_at(scope, arg, &dom)?;
                    Ok(((*cod).clone(), join(u1, u2)?))
                }
                Ok((other, _)) => Err(TypeError::ExpectedFunction(other)),
                // Schematic constants are instantiated from the argument.
                Err(TypeError::AmbiguousConstant(c)) if matches!(**f, Term::Const(_)) => {
                    let decl = self.env.get(&c).expect("constant was just looked up");
                    let (arg_ty, u2) = self.infer(scope, arg)?;
                    let full = decl.instantiate_from_arg(&arg_ty).ok_or_else(|| {
                        TypeError::SchemaMismatch {
                            constant: c.clone(),
                            found: arg_ty.clone(),
                        }
                    })?;
                    match full {
                        Type::Lolli(_, cod) => Ok(((*cod).clone(), u2)),
                        _ => unreachable!("schemas instantiate to function types"),
                    }
                }
                Err(e) => Err(e),
            },
            Term::ConstApp(c, args) => {
                let decl = self
                    .env
                    .get(c)
                    .ok_or_else(|| TypeError::UnboundVariable(c.clone()))?;
                let first = args.first().ok_or_else(|| {
                    TypeError::AmbiguousConstant(c.clone())
                })?;
                let (arg_ty, mut usage) = self.infer(scope, first)?;
                let full = decl.instantiate_from_arg(&arg_ty).ok_or_else(|| {
                    TypeError::SchemaMismatch {
                        constant: c.clone(),
                        found: arg_ty.clone(),
                    }
                })?;
                let mut ty = full;
                for (i, arg) in args.iter().enumerate() {
                    let Type::Lolli(dom, cod) = ty else {
                        return Err(TypeError::ExpectedFunction(ty));
                    };
                    if i > 0 {
                        let u = self.check_at(scope, arg, &dom)?;
                        usage = join(usage, u)?;
                    }
                    ty = *cod;
                }
                Ok((ty, usage))
            }
            Term::Lift(m) => {
                let (a, usage) = self.infer(scope, m)?;
                if let Some(name) = usage.witness() {
                    return Err(TypeError::NonParameterUnderLift { name });
                }
                Ok((Type::bang(a), Usage::empty()))
            }
            Term::Force(m) => {
                let (ty, usage) = self.infer(scope, m)?;
                match ty {
                    Type::Bang(inner) => Ok(((*inner).clone(), usage)),
                    other => Err(TypeError::ExpectedBang(other)),
                }
            }
            Term::Box(t, m) => {
                self.wf(t)?;
                if !t.is_simple_m() {
                    return Err(TypeError::NotSimpleMType(t.clone()));
                }
                let (ty, usage) = self.infer(scope, m)?;
                let Type::Bang(inner) = ty else {
                    return Err(TypeError::ExpectedBang(ty));
                };
                let Type::Lolli(dom, cod) = *inner else {
                    return Err(TypeError::ExpectedFunction(*inner));
                };
                if *dom != *t {
                    return Err(TypeError::TypeMismatch {
                        expected: t.clone(),
                        found: *dom,
                    });
                }
                if !cod.is_simple_m() {
                    return Err(TypeError::NotSimpleMType(*cod));
                }
                Ok((Type::circ(t.clone(), *cod), usage))
            }
            Term::Apply(f, arg) => {
                let (ty, u1) = self.infer(scope, f)?;
                let Type::Circ(t, u) = ty else {
                    return Err(TypeError::ExpectedCirc(ty));
                };
                let u2 = self.check_at(scope, arg, &t)?;
                Ok(((*u).clone(), join(u1, u2)?))
            }
            Term::Boxed(boxed) => {
                boxed
                    .validate(self.sig)
                    .map_err(|e| TypeError::CircuitInvalid(e.to_string()))?;
                let t = crate::circuit::BoxedCircuit::interface_type(
                    boxed.in_tuple(),
                    &boxed.circuit().inputs,
                )
                .ok_or_else(|| {
                    TypeError::CircuitInvalid("input tuple does not match circuit".into())
                })?;
                let u = crate::circuit::BoxedCircuit::interface_type(
                    boxed.out_tuple(),
                    &boxed.circuit().outputs,
                )
                .ok_or_else(|| {
                    TypeError::CircuitInvalid("output tuple does not match circuit".into())
                })?;
                check_label_tuple(&boxed.circuit().inputs, boxed.in_tuple(), &t)?;
                check_label_tuple(&boxed.circuit().outputs, boxed.out_tuple(), &u)?;
                Ok((Type::circ(t, u), Usage::empty()))
            }
            Term::Let(x, bound, body) => {
                let (a, u1) = self.infer(scope, bound)?;
                scope.binds.push((x.clone(), a.clone()));
                let result = self.infer(scope, body);
                scope.binds.pop();
                let (b, mut u2) = result?;
                self.close_binder(x, &a, &mut u2)?;
                Ok((b, join(u1, u2)?))
            }
            Term::LetPair(x, y, bound, body) => {
                let (ty, u1) = self.infer(scope, bound)?;
                let Type::Tensor(a, b) = ty else {
                    return Err(TypeError::ExpectedTensor(ty));
                };
                scope.binds.push((x.clone(), (*a).clone()));
                scope.binds.push((y.clone(), (*b).clone()));
                let result = self.infer(scope, body);
                scope.binds.pop();
                scope.binds.pop();
                let (c, mut u2) = result?;
                self.close_binder(y, &b, &mut u2)?;
                self.close_binder(x, &a, &mut u2)?;
                Ok((c, join(u1, u2)?))
            }
            Term::Seq(m, n) => {
                let u1 = self.check_at(scope, m, &Type::Unit)?;
                let (b, u2) = self.infer(scope, n)?;
                Ok((b, join(u1, u2)?))
            }
            Term::Pair(m, n) => {
                let (a, u1) = self.infer(scope, m)?;
                let (b, u2) = self.infer(scope, n)?;
                Ok((Type::tensor(a, b), join(u1, u2)?))
            }
            Term::InL(a, b, m) => {
                self.wf(a)?;
                self.wf(b)?;
                let usage = self.check_at(scope, m, a)?;
                Ok((Type::sum(a.clone(), b.clone()), usage))
            }
            Term::InR(a, b, m) => {
                self.wf(a)?;
                self.wf(b)?;
                let usage = self.check_at(scope, m, b)?;
                Ok((Type::sum(a.clone(), b.clone()), usage))
            }
            Term::Case(scrut, x, l, y, r) => {
                let (ty, us) = self.infer(scope, scrut)?;
                let Type::Sum(a, b) = ty else {
                    return Err(TypeError::ExpectedSum(ty));
                };
                scope.binds.push((x.clone(), (*a).clone()));
                let left = self.infer(scope, l);
                scope.binds.pop();
                let (lt, mut ul) = left?;
                self.close_binder(x, &a, &mut ul)?;

                scope.binds.push((y.clone(), (*b).clone()));
                let right = self.check_at(scope, r, &lt);
                scope.binds.pop();
                let mut ur = right?;
                self.close_binder(y, &b, &mut ur)?;

                // The strictest reading: both branches must consume exactly
                // the same outer resources.
                if ul != ur {
                    return Err(TypeError::BranchUsageMismatch {
                        detail: format!(
                            "left uses {:?}/{:?}, right uses {:?}/{:?}",
                            ul.vars, ul.labels, ur.vars, ur.labels
                        ),
                    });
                }
                Ok((lt, join(us, ul)?))
            }
            Term::Abort(a, m) => {
                self.wf(a)?;
                let usage = self.check_at(scope, m, &Type::Zero)?;
                Ok((a.clone(), usage))
            }
        }
    }

    fn check_at(&self, scope: &mut Scope, term: &Term, expected: &Type) -> CResult<Usage> {
        // Bare schematic constants are the one non-inferable form: match
        // their schema against the expected type.
        if let Term::Const(c) = term {
            if let Some(decl) = self.env.get(c) {
                if decl.mono_type().is_none() {
                    return if decl.match_expected(expected) {
                        Ok(Usage::empty())
                    } else {
                        Err(TypeError::AmbiguousConstant(c.clone()))
                    };
                }
            }
        }
        let (found, usage) = self.infer(scope, term)?;
        if &found != expected {
            return Err(TypeError::TypeMismatch {
                expected: expected.clone(),
                found,
            });
        }
        Ok(usage)
    }
}

/// Root exactness: every linear variable of `gamma` and every label of `q`
/// must be consumed.
fn require_exact(gamma: &VarContext, q: &LabelContext, usage: &Usage) -> CResult<()> {
    for (x, ty) in gamma {
        if !ty.is_parameter() && !usage.vars.contains(x) {
            return Err(TypeError::LinearityViolation {
                name: x.clone(),
                uses: 0,
            });
        }
    }
    for l in q.keys() {
        if !usage.labels.contains(l) {
            return Err(TypeError::UnusedLabel(*l));
        }
    }
    Ok(())
}

/// Decides `Γ;Q ⊢ M : A`, returning the linear resources consumed (which,
/// on success, are exactly the linear part of `Γ` plus all of `Q`).
pub fn check(
    sig: &Signature,
    env: &BuiltinEnv,
    gamma: &VarContext,
    q: &LabelContext,
    term: &Term,
    expected: &Type,
) -> CResult<Usage> {
    let checker = Checker {
        sig,
        env,
        labels: q,
    };
    checker.wf(expected)?;
    for ty in gamma.values() {
        checker.wf(ty)?;
    }
    let mut scope = Scope {
        outer: gamma,
        binds: Vec::new(),
    };
    let usage = checker.check_at(&mut scope, term, expected)?;
    require_exact(gamma, q, &usage)?;
    Ok(usage)
}

/// Infers the type of `M` under `Γ;Q`, with the same exactness requirement.
pub fn infer(
    sig: &Signature,
    env: &BuiltinEnv,
    gamma: &VarContext,
    q: &LabelContext,
    term: &Term,
) -> CResult<(Type, Usage)> {
    let checker = Checker {
        sig,
        env,
        labels: q,
    };
    let mut scope = Scope {
        outer: gamma,
        binds: Vec::new(),
    };
    let (ty, usage) = checker.infer(&mut scope, term)?;
    require_exact(gamma, q, &usage)?;
    Ok((ty, usage))
}

/// Checks `∅;Q ⊢ l⃗ : T`: the tuple's shape mirrors `T`, each label's wire
/// type matches, labels are pairwise distinct, and the tuple covers `Q`
/// exactly.
pub fn check_label_tuple(q: &LabelContext, tuple: &LabelTuple, ty: &Type) -> CResult<()> {
    if !ty.is_simple_m() {
        return Err(TypeError::NotSimpleMType(ty.clone()));
    }
    let mut seen = BTreeSet::new();
    fn go(
        q: &LabelContext,
        tuple: &LabelTuple,
        ty: &Type,
        seen: &mut BTreeSet<Label>,
    ) -> CResult<()> {
        match (tuple, ty) {
            (LabelTuple::Unit, Type::Unit) => Ok(()),
            (LabelTuple::Label(l), Type::Wire(wire)) => {
                if !seen.insert(*l) {
                    return Err(TypeError::DuplicateLabelInTuple(*l));
                }
                match q.get(l) {
                    None => Err(TypeError::UnboundLabel(*l)),
                    Some(found) if found != wire => Err(TypeError::TypeMismatch {
                        expected: ty.clone(),
                        found: Type::Wire(found.clone()),
                    }),
                    Some(_) => Ok(()),
                }
            }
            (LabelTuple::Pair(a, b), Type::Tensor(s, t)) => {
                go(q, a, s, seen)?;
                go(q, b, t, seen)
            }
            (other, ty) => Err(TypeError::TypeMismatch {
                expected: ty.clone(),
                found: tuple_shape_type(other, q),
            }),
        }
    }
    go(q, tuple, ty, &mut seen)?;
    for l in q.keys() {
        if !seen.contains(l) {
            return Err(TypeError::UnusedLabel(*l));
        }
    }
    Ok(())
}

fn tuple_shape_type(tuple: &LabelTuple, q: &LabelContext) -> Type {
    match tuple {
        LabelTuple::Unit => Type::Unit,
        LabelTuple::Label(l) => q
            .get(l)
            .map(|w| Type::Wire(w.clone()))
            .unwrap_or(Type::Zero),
        LabelTuple::Pair(a, b) => Type::tensor(tuple_shape_type(a, q), tuple_shape_type(b, q)),
    }
}

/// Configuration typing `Q ⊢ (C, M) : A; Q'`: there must be a `Q''`
/// disjoint from `Q'` with `C : Q -> Q'' ∪ Q'` and `∅;Q'' ⊢ M : A`.
/// `Q''` is computed as the outputs of `C` minus `Q'`, then checked.
pub fn check_configuration(
    sig: &Signature,
    env: &BuiltinEnv,
    q: &LabelContext,
    circuit: &Circuit,
    term: &Term,
    expected: &Type,
    q_prime: &LabelContext,
) -> CResult<Usage> {
    if &circuit.inputs != q {
        return Err(TypeError::InterfaceMismatch(format!(
            "circuit inputs {:?} differ from declared input labels {:?}",
            circuit.inputs, q
        )));
    }
    circuit
        .validate(sig)
        .map_err(|e: CircuitError| TypeError::CircuitInvalid(e.to_string()))?;
    let mut q2 = circuit.outputs.clone();
    for (l, wire) in q_prime {
        match q2.remove(l) {
            Some(w) if &w == wire => {}
            Some(w) => {
                return Err(TypeError::InterfaceMismatch(format!(
                    "reserved label {l} has wire type {w}, expected {wire}"
                )))
            }
            None => {
                return Err(TypeError::InterfaceMismatch(format!(
                    "reserved label {l} is not an output of the circuit"
                )))
            }
        }
    }
    check(sig, env, &VarContext::new(), &q2, term, expected)
}

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "vars {:?}, labels {:?}",
            self.vars,
            self.labels.iter().map(Label::to_string).collect::<Vec<_>>()
        )
    }
}
