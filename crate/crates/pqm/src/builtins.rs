//! The standard constant environment: one gate constant per signature gate,
//! the meta-operations `size` and `invert` on boxed circuits, and the
//! terminating eliminators `foldNat` and `foldList`.
//!
//! Gate constants are functions `inT(g) -o outT(g)`, not boxed-circuit
//! values; the boxed view of a gate is recovered by `box[T] (lift g)`.
//! The meta-operation and fold constants are type-schematic and are
//! instantiated at each use site from the type of their first argument.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::circuit::{CircuitError, GateDecl, Signature};
use crate::syntax::{Label, Term, Type};

/// What a constant does when fully applied.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ConstantKind {
    /// Appends the named gate; argument and result are label tuples.
    Gate { input: Type, output: Type },
    /// `size : Circ(T,U) -o Nat`
    Size,
    /// `invert : Circ(T,U) -o Circ(U,T)`
    Invert,
    /// `foldNat : !(A -o A) -o A -o Nat -o A`
    FoldNat,
    /// `foldList : !((B * A) -o B) -o B -o List A -o B`
    FoldList,
}

/// A constant declaration: its delta behaviour, its arity, and its type
/// schema.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ConstantDecl {
    pub name: String,
    pub kind: ConstantKind,
    pub arity: usize,
}

impl ConstantDecl {
    /// The closed type of a non-schematic constant.
    pub fn mono_type(&self) -> Option<Type> {
        match &self.kind {
            ConstantKind::Gate { input, output } => {
                Some(Type::lolli(input.clone(), output.clone()))
            }
            _ => None,
        }
    }

    /// Instantiates the constant's type from the type of its first
    /// argument, returning the full (curried) constant type.
    pub fn instantiate_from_arg(&self, arg: &Type) -> Option<Type> {
        match &self.kind {
            ConstantKind::Gate { .. } => self.mono_type(),
            ConstantKind::Size => match arg {
                Type::Circ(_, _) => Some(Type::lolli(arg.clone(), Type::Nat)),
                _ => None,
            },
            ConstantKind::Invert => match arg {
                Type::Circ(t, u) => Some(Type::lolli(
                    arg.clone(),
                    Type::circ((**u).clone(), (**t).clone()),
                )),
                _ => None,
            },
            ConstantKind::FoldNat => match arg {
                Type::Bang(inner) => match &**inner {
                    Type::Lolli(a1, a2) if a1 == a2 => {
                        let a = (**a1).clone();
                        Some(Type::lolli(
                            arg.clone(),
                            Type::lolli(a.clone(), Type::lolli(Type::Nat, a)),
                        ))
                    }
                    _ => None,
                },
                _ => None,
            },
            ConstantKind::FoldList => match arg {
                Type::Bang(inner) => match &**inner {
                    Type::Lolli(pair, b2) => match &**pair {
                        Type::Tensor(b1, a) if b1 == b2 => {
                            let a = (**a).clone();
                            let b = (**b1).clone();
                            Some(Type::lolli(
                                arg.clone(),
                                Type::lolli(
                                    b.clone(),
                                    Type::lolli(Type::list(a), b),
                                ),
                            ))
                        }
                        _ => None,
                    },
                    _ => None,
                },
                _ => None,
            },
        }
    }

    /// Matches the schema against a full expected type, for bare constants
    /// in checked positions.
    pub fn match_expected(&self, expected: &Type) -> bool {
        match &self.kind {
            ConstantKind::Gate { .. } => self.mono_type().as_ref() == Some(expected),
            _ => match expected {
                Type::Lolli(first, _) => {
                    self.instantiate_from_arg(first).as_ref() == Some(expected)
                }
                _ => false,
            },
        }
    }
}

/// The constant environment, immutable after construction.
#[derive(Clone, Debug, Default)]
pub struct BuiltinEnv {
    consts: BTreeMap<String, ConstantDecl>,
}

impl BuiltinEnv {
    pub fn get(&self, name: &str) -> Option<&ConstantDecl> {
        self.consts.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.consts.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.consts.keys().map(String::as_str)
    }
}

const META_NAMES: [&str; 4] = ["size", "invert", "foldNat", "foldList"];

fn valid_constant_name(name: &str) -> bool {
    let mut chars = name.chars();
    let head_ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_');
    head_ok
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
        && Label::parse(name).is_none()
        && crate::parse::parse_term_str(name).is_ok_and(|t| matches!(t, Term::Var(_)))
}

/// Builds the constant environment for a signature: one constant per gate,
/// plus `size`, `invert`, `foldNat` and `foldList`.
pub fn builtin_environment(sig: &Signature) -> Result<BuiltinEnv, CircuitError> {
    let mut consts = BTreeMap::new();
    for gate in sig.gates() {
        if META_NAMES.contains(&gate.name.as_str()) {
            return Err(CircuitError::Signature(format!(
                "gate `{}` collides with a built-in constant",
                gate.name
            )));
        }
        if !valid_constant_name(&gate.name) {
            return Err(CircuitError::Signature(format!(
                "gate `{}` is not a usable constant name",
                gate.name
            )));
        }
        consts.insert(
            gate.name.clone(),
            ConstantDecl {
                name: gate.name.clone(),
                kind: ConstantKind::Gate {
                    input: gate.input.clone(),
                    output: gate.output.clone(),
                },
                arity: 1,
            },
        );
    }
    for (name, kind, arity) in [
        ("size", ConstantKind::Size, 1),
        ("invert", ConstantKind::Invert, 1),
        ("foldNat", ConstantKind::FoldNat, 3),
        ("foldList", ConstantKind::FoldList, 3),
    ] {
        consts.insert(
            name.to_string(),
            ConstantDecl {
                name: name.to_string(),
                kind,
                arity,
            },
        );
    }
    Ok(BuiltinEnv { consts })
}

/// The default signature: `Bit` and `Qubit` wires; `H`, `X` and `CNOT`
/// self-inverse; `init0`/`init1`, `meas` and `discard` non-invertible.
pub fn default_signature() -> Signature {
    let qubit = Type::wire("Qubit");
    let bit = Type::wire("Bit");
    let self_inverse = |name: &str, input: Type, output: Type| GateDecl {
        name: name.to_string(),
        input,
        output,
        invertible: true,
        inverse: Some(name.to_string()),
    };
    let one_way = |name: &str, input: Type, output: Type| GateDecl {
        name: name.to_string(),
        input,
        output,
        invertible: false,
        inverse: None,
    };
    Signature::new(
        vec!["Bit".to_string(), "Qubit".to_string()],
        vec![
            self_inverse("H", qubit.clone(), qubit.clone()),
            self_inverse("X", qubit.clone(), qubit.clone()),
            self_inverse(
                "CNOT",
                Type::tensor(qubit.clone(), qubit.clone()),
                Type::tensor(qubit.clone(), qubit.clone()),
            ),
            one_way("init0", Type::Unit, qubit.clone()),
            one_way("init1", Type::Unit, qubit.clone()),
            one_way("meas", qubit, bit.clone()),
            one_way("discard", bit, Type::Unit),
        ],
    )
    .expect("default signature is well formed")
}

/// An identifier that names a constant was used as a binder; the variable
/// and constant name spaces are disjoint.
#[derive(Clone, PartialEq, Eq, Debug, Error)]
#[error("`{0}` names a constant and cannot be bound as a variable")]
pub struct ReservedName(pub String);

/// Rewrites free variables that name constants into constant references.
/// Binders may not shadow constant names.
pub fn resolve_constants(term: &Term, env: &BuiltinEnv) -> Result<Term, ReservedName> {
    let check_binder = |name: &str| -> Result<(), ReservedName> {
        if env.contains(name) {
            Err(ReservedName(name.to_string()))
        } else {
            Ok(())
        }
    };
    Ok(match term {
        Term::Var(x) => {
            if env.contains(x) {
                Term::Const(x.clone())
            } else {
                term.clone()
            }
        }
        Term::Lab(_) | Term::Const(_) | Term::Unit | Term::Boxed(_) | Term::NatLit(_)
        | Term::Nil(_) => term.clone(),
        Term::Abort(t, m) => Term::Abort(t.clone(), Box::new(resolve_constants(m, env)?)),
        Term::InL(a, b, m) => {
            Term::InL(a.clone(), b.clone(), Box::new(resolve_constants(m, env)?))
        }
        Term::InR(a, b, m) => {
            Term::InR(a.clone(), b.clone(), Box::new(resolve_constants(m, env)?))
        }
        Term::Lift(m) => Term::Lift(Box::new(resolve_constants(m, env)?)),
        Term::Force(m) => Term::Force(Box::new(resolve_constants(m, env)?)),
        Term::Box(t, m) => Term::Box(t.clone(), Box::new(resolve_constants(m, env)?)),
        Term::Succ(m) => Term::Succ(Box::new(resolve_constants(m, env)?)),
        Term::Seq(a, b) => Term::seq(resolve_constants(a, env)?, resolve_constants(b, env)?),
        Term::Pair(a, b) => Term::pair(resolve_constants(a, env)?, resolve_constants(b, env)?),
        Term::App(a, b) => Term::app(resolve_constants(a, env)?, resolve_constants(b, env)?),
        Term::Apply(a, b) => Term::apply(resolve_constants(a, env)?, resolve_constants(b, env)?),
        Term::Cons(a, b) => Term::cons(resolve_constants(a, env)?, resolve_constants(b, env)?),
        Term::Lam(x, t, m) => {
            check_binder(x)?;
            Term::Lam(x.clone(), t.clone(), Box::new(resolve_constants(m, env)?))
        }
        Term::Let(x, a, b) => {
            check_binder(x)?;
            Term::Let(
                x.clone(),
                Box::new(resolve_constants(a, env)?),
                Box::new(resolve_constants(b, env)?),
            )
        }
        Term::LetPair(x, y, a, b) => {
            check_binder(x)?;
            check_binder(y)?;
            Term::LetPair(
                x.clone(),
                y.clone(),
                Box::new(resolve_constants(a, env)?),
                Box::new(resolve_constants(b, env)?),
            )
        }
        Term::Case(s, x, l, y, r) => {
            check_binder(x)?;
            check_binder(y)?;
            Term::Case(
                Box::new(resolve_constants(s, env)?),
                x.clone(),
                Box::new(resolve_constants(l, env)?),
                y.clone(),
                Box::new(resolve_constants(r, env)?),
            )
        }
        Term::ConstApp(c, args) => Term::ConstApp(
            c.clone(),
            args.iter()
                .map(|a| resolve_constants(a, env))
                .collect::<Result<_, _>>()?,
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_environment_contents() {
        let env = builtin_environment(&default_signature()).unwrap();
        let h = env.get("H").unwrap();
        assert_eq!(
            h.mono_type(),
            Some(Type::lolli(Type::wire("Qubit"), Type::wire("Qubit")))
        );
        assert_eq!(h.arity, 1);
        for name in ["X", "CNOT", "init0", "init1", "meas", "discard"] {
            assert!(env.contains(name), "{name}");
        }
        assert!(env.contains("size") && env.contains("invert"));
        assert!(env.contains("foldNat") && env.contains("foldList"));
    }

    #[test]
    fn gateless_signature_keeps_meta_constants() {
        let sig = Signature::new(vec!["Qubit".to_string()], vec![]).unwrap();
        let env = builtin_environment(&sig).unwrap();
        assert_eq!(env.names().count(), 4);
    }

    #[test]
    fn invert_schema_instantiation() {
        let env = builtin_environment(&default_signature()).unwrap();
        let invert = env.get("invert").unwrap();
        let arg = Type::circ(Type::wire("Qubit"), Type::wire("Bit"));
        assert_eq!(
            invert.instantiate_from_arg(&arg),
            Some(Type::lolli(
                arg.clone(),
                Type::circ(Type::wire("Bit"), Type::wire("Qubit"))
            ))
        );
        assert_eq!(invert.instantiate_from_arg(&Type::Nat), None);

        let fold = env.get("foldNat").unwrap();
        let step = Type::bang(Type::lolli(Type::Nat, Type::Nat));
        assert_eq!(
            fold.instantiate_from_arg(&step),
            Some(Type::lolli(
                step.clone(),
                Type::lolli(Type::Nat, Type::lolli(Type::Nat, Type::Nat))
            ))
        );
        // The two sides of the step function must agree.
        let bad = Type::bang(Type::lolli(Type::Nat, Type::Unit));
        assert_eq!(fold.instantiate_from_arg(&bad), None);
    }

    #[test]
    fn reserved_gate_names_rejected() {
        let sig = Signature::new(
            vec!["Qubit".to_string()],
            vec![GateDecl {
                name: "size".to_string(),
                input: Type::wire("Qubit"),
                output: Type::wire("Qubit"),
                invertible: false,
                inverse: None,
            }],
        )
        .unwrap();
        assert!(builtin_environment(&sig).is_err());

        let sig = Signature::new(
            vec!["Qubit".to_string()],
            vec![GateDecl {
                name: "L0".to_string(),
                input: Type::wire("Qubit"),
                output: Type::wire("Qubit"),
                invertible: false,
                inverse: None,
            }],
        )
        .unwrap();
        assert!(builtin_environment(&sig).is_err());
    }

    #[test]
    fn resolution_rewrites_free_constants() {
        let env = builtin_environment(&default_signature()).unwrap();
        let term = crate::parse::parse_term_str("fun q : Qubit . H q").unwrap();
        let resolved = resolve_constants(&term, &env).unwrap();
        assert_eq!(
            resolved,
            Term::lam(
                "q",
                Type::wire("Qubit"),
                Term::app(Term::constant("H"), Term::var("q"))
            )
        );

        let shadow = crate::parse::parse_term_str("fun H : Qubit . H").unwrap();
        assert_eq!(
            resolve_constants(&shadow, &env),
            Err(ReservedName("H".to_string()))
        );
    }
}
