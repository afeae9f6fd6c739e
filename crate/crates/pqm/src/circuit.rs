//! Labelled circuits over a pluggable gate signature.
//!
//! A circuit is an ordered gate list with consume/produce label semantics:
//! the free symmetric monoidal category over the signature. Objects are
//! label contexts, morphisms are circuits, and grafting one circuit onto
//! the live outputs of another is [`append`]. Circuits are immutable
//! values; every operation returns a new circuit.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{Label, LabelContext, LabelTuple, Type};

/// Errors raised by circuit construction and the meta-operations.
#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum CircuitError {
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("label {0} is not a live output wire")]
    UnboundLabel(Label),
    #[error("cloning: label {0} used more than once")]
    Cloning(Label),
    #[error("wire type mismatch on {label}: expected {expected}, found {found}")]
    WireTypeMismatch {
        label: Label,
        expected: String,
        found: String,
    },
    #[error("gate `{0}` is not invertible")]
    NotInvertible(String),
    #[error("interface mismatch: {0}")]
    InterfaceMismatch(String),
    #[error("not a simple M-type: {0}")]
    NotSimpleM(String),
    #[error("label {0} reused; gate outputs must be fresh")]
    FreshnessViolation(Label),
    #[error("malformed signature: {0}")]
    Signature(String),
    #[error("bad circuit serialization: {0}")]
    Serialization(String),
}

/// A gate declaration: name, typed interface, and inverse information.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GateDecl {
    pub name: String,
    pub input: Type,
    pub output: Type,
    pub invertible: bool,
    pub inverse: Option<String>,
}

impl GateDecl {
    pub fn input_wires(&self) -> Vec<&str> {
        self.input.wire_leaves()
    }

    pub fn output_wires(&self) -> Vec<&str> {
        self.output.wire_leaves()
    }
}

/// The external description of the generalized-circuit category: wire types
/// plus gates with typed interfaces.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Signature {
    wire_types: BTreeSet<String>,
    gates: Vec<GateDecl>,
}

impl Signature {
    pub fn new(wire_types: Vec<String>, gates: Vec<GateDecl>) -> Result<Signature, CircuitError> {
        let wire_types: BTreeSet<String> = wire_types.into_iter().collect();
        let mut seen = BTreeSet::new();
        for gate in &gates {
            if !seen.insert(gate.name.clone()) {
                return Err(CircuitError::Signature(format!(
                    "duplicate gate name `{}`",
                    gate.name
                )));
            }
            for ty in [&gate.input, &gate.output] {
                if !ty.is_simple_m() {
                    return Err(CircuitError::Signature(format!(
                        "gate `{}` interface is not a simple M-type",
                        gate.name
                    )));
                }
                for wire in ty.wire_leaves() {
                    if !wire_types.contains(wire) {
                        return Err(CircuitError::Signature(format!(
                            "gate `{}` uses undeclared wire type `{wire}`",
                            gate.name
                        )));
                    }
                }
            }
            if gate.invertible != gate.inverse.is_some() {
                return Err(CircuitError::Signature(format!(
                    "gate `{}`: invertible flag and inverse name disagree",
                    gate.name
                )));
            }
        }
        // Inverse gates must exist with swapped interfaces.
        for gate in &gates {
            if let Some(inv) = &gate.inverse {
                let target = gates.iter().find(|g| &g.name == inv).ok_or_else(|| {
                    CircuitError::Signature(format!(
                        "gate `{}` names missing inverse `{inv}`",
                        gate.name
                    ))
                })?;
                if target.input != gate.output || target.output != gate.input {
                    return Err(CircuitError::Signature(format!(
                        "inverse of `{}` must have swapped input/output types",
                        gate.name
                    )));
                }
            }
        }
        Ok(Signature { wire_types, gates })
    }

    pub fn gate(&self, name: &str) -> Option<&GateDecl> {
        self.gates.iter().find(|g| g.name == name)
    }

    pub fn gates(&self) -> &[GateDecl] {
        &self.gates
    }

    pub fn has_wire_type(&self, name: &str) -> bool {
        self.wire_types.contains(name)
    }

    pub fn wire_types(&self) -> impl Iterator<Item = &str> {
        self.wire_types.iter().map(String::as_str)
    }

    /// Checks every wire type mentioned in a type is declared.
    pub fn check_type_wires(&self, ty: &Type) -> Result<(), CircuitError> {
        match ty {
            Type::Wire(name) => {
                if self.has_wire_type(name) {
                    Ok(())
                } else {
                    Err(CircuitError::Signature(format!(
                        "undeclared wire type `{name}`"
                    )))
                }
            }
            Type::Zero | Type::Unit | Type::Nat => Ok(()),
            Type::Sum(a, b) | Type::Tensor(a, b) | Type::Lolli(a, b) | Type::Circ(a, b) => {
                self.check_type_wires(a)?;
                self.check_type_wires(b)
            }
            Type::Bang(a) | Type::List(a) => self.check_type_wires(a),
        }
    }
}

/// Monotone counter handing out fresh labels. Freshness is counter-based:
/// one allocator is threaded through an entire evaluation.
#[derive(Clone, Debug, Default)]
pub struct LabelAllocator {
    next: u64,
}

impl LabelAllocator {
    pub fn new() -> LabelAllocator {
        LabelAllocator { next: 0 }
    }

    /// An allocator whose labels are fresh for everything in `labels`.
    pub fn above(labels: impl IntoIterator<Item = Label>) -> LabelAllocator {
        let next = labels.into_iter().map(|l| l.0 + 1).max().unwrap_or(0);
        LabelAllocator { next }
    }

    pub fn fresh(&mut self) -> Label {
        let l = Label(self.next);
        self.next += 1;
        l
    }

    pub fn watermark(&self) -> u64 {
        self.next
    }
}

/// One gate application: the gate consumes `ins` and produces `outs`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GateApp {
    pub gate: String,
    pub ins: Vec<Label>,
    pub outs: Vec<Label>,
}

/// A labelled circuit: a morphism from `inputs` to `outputs`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Circuit {
    pub inputs: LabelContext,
    pub gates: Vec<GateApp>,
    pub outputs: LabelContext,
}

/// The identity circuit on a label context.
pub fn identity(q: &LabelContext) -> Circuit {
    Circuit {
        inputs: q.clone(),
        gates: Vec::new(),
        outputs: q.clone(),
    }
}

impl Circuit {
    /// Number of gate applications.
    pub fn size(&self) -> usize {
        self.gates.len()
    }

    /// All labels mentioned anywhere in the circuit.
    pub fn all_labels(&self) -> BTreeSet<Label> {
        let mut set: BTreeSet<Label> = self.inputs.keys().copied().collect();
        for app in &self.gates {
            set.extend(app.ins.iter().copied());
            set.extend(app.outs.iter().copied());
        }
        set.extend(self.outputs.keys().copied());
        set
    }

    /// Appends one gate, consuming `ins` from the live outputs and producing
    /// freshly allocated output labels typed by the gate's interface.
    pub fn append_gate(
        &self,
        sig: &Signature,
        gate: &str,
        ins: &[Label],
        alloc: &mut LabelAllocator,
    ) -> Result<(Circuit, Vec<Label>), CircuitError> {
        let decl = sig
            .gate(gate)
            .ok_or_else(|| CircuitError::UnknownGate(gate.to_string()))?;
        let in_wires = decl.input_wires();
        if ins.len() != in_wires.len() {
            return Err(CircuitError::InterfaceMismatch(format!(
                "gate `{gate}` takes {} wires, got {}",
                in_wires.len(),
                ins.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for l in ins {
            if !seen.insert(*l) {
                return Err(CircuitError::Cloning(*l));
            }
        }
        for (l, expected) in ins.iter().zip(&in_wires) {
            match self.outputs.get(l) {
                None => return Err(CircuitError::UnboundLabel(*l)),
                Some(found) if found != expected => {
                    return Err(CircuitError::WireTypeMismatch {
                        label: *l,
                        expected: (*expected).to_string(),
                        found: found.clone(),
                    })
                }
                Some(_) => {}
            }
        }
        let mut next = self.clone();
        let mut outs = Vec::new();
        for wire in decl.output_wires() {
            let l = alloc.fresh();
            outs.push(l);
            next.outputs.insert(l, wire.to_string());
        }
        for l in ins {
            next.outputs.remove(l);
        }
        next.gates.push(GateApp {
            gate: gate.to_string(),
            ins: ins.to_vec(),
            outs: outs.clone(),
        });
        Ok((next, outs))
    }

    /// Renames labels; the map need not be total (unmapped labels are kept).
    pub fn relabel(&self, map: &BTreeMap<Label, Label>) -> Circuit {
        let rl = |l: &Label| *map.get(l).unwrap_or(l);
        Circuit {
            inputs: self.inputs.iter().map(|(l, w)| (rl(l), w.clone())).collect(),
            gates: self
                .gates
                .iter()
                .map(|g| GateApp {
                    gate: g.gate.clone(),
                    ins: g.ins.iter().map(&rl).collect(),
                    outs: g.outs.iter().map(&rl).collect(),
                })
                .collect(),
            outputs: self.outputs.iter().map(|(l, w)| (rl(l), w.clone())).collect(),
        }
    }

    /// Canonical representative of the renaming-equivalence class for a bare
    /// circuit: inputs relabelled first in sorted label order, then gate
    /// outputs in gate-list order.
    pub fn canonicalize(&self) -> Circuit {
        let order: Vec<Label> = self.inputs.keys().copied().collect();
        self.canonicalize_with(order)
    }

    fn canonicalize_with(&self, first: Vec<Label>) -> Circuit {
        let mut map = BTreeMap::new();
        let mut next = 0u64;
        for l in first {
            map.entry(l).or_insert_with(|| {
                let fresh = Label(next);
                next += 1;
                fresh
            });
        }
        for app in &self.gates {
            for l in &app.outs {
                map.entry(*l).or_insert_with(|| {
                    let fresh = Label(next);
                    next += 1;
                    fresh
                });
            }
        }
        self.relabel(&map)
    }

    /// Checks all structural invariants against the signature: declared
    /// gates and wire types, liveness and distinctness of gate inputs,
    /// global freshness of gate outputs, and interface soundness.
    pub fn validate(&self, sig: &Signature) -> Result<(), CircuitError> {
        for wire in self.inputs.values() {
            if !sig.has_wire_type(wire) {
                return Err(CircuitError::Signature(format!(
                    "undeclared wire type `{wire}`"
                )));
            }
        }
        let mut live = self.inputs.clone();
        let mut seen: BTreeSet<Label> = self.inputs.keys().copied().collect();
        for app in &self.gates {
            let decl = sig
                .gate(&app.gate)
                .ok_or_else(|| CircuitError::UnknownGate(app.gate.clone()))?;
            let in_wires = decl.input_wires();
            let out_wires = decl.output_wires();
            if app.ins.len() != in_wires.len() || app.outs.len() != out_wires.len() {
                return Err(CircuitError::InterfaceMismatch(format!(
                    "gate `{}` applied with wrong arity",
                    app.gate
                )));
            }
            let mut in_seen = BTreeSet::new();
            for (l, expected) in app.ins.iter().zip(&in_wires) {
                if !in_seen.insert(*l) {
                    return Err(CircuitError::Cloning(*l));
                }
                match live.get(l) {
                    None => return Err(CircuitError::UnboundLabel(*l)),
                    Some(found) if found != expected => {
                        return Err(CircuitError::WireTypeMismatch {
                            label: *l,
                            expected: (*expected).to_string(),
                            found: found.clone(),
                        })
                    }
                    Some(_) => {}
                }
            }
            for l in &app.ins {
                live.remove(l);
            }
            for (l, wire) in app.outs.iter().zip(&out_wires) {
                if !seen.insert(*l) {
                    return Err(CircuitError::FreshnessViolation(*l));
                }
                live.insert(*l, (*wire).to_string());
            }
        }
        if live != self.outputs {
            return Err(CircuitError::InterfaceMismatch(format!(
                "declared outputs {:?} differ from live wires {:?}",
                self.outputs, live
            )));
        }
        Ok(())
    }

    /// One line per gate, bracketed by interface lines.
    pub fn render_text(&self) -> String {
        fn interface(name: &str, ctx: &LabelContext) -> String {
            let body = ctx
                .iter()
                .map(|(l, w)| format!("{l}:{w}"))
                .collect::<Vec<_>>()
                .join(", ");
            format!("{name}: {body}")
        }
        let mut lines = vec![interface("inputs", &self.inputs)];
        for app in &self.gates {
            let ins = app.ins.iter().map(Label::to_string).collect::<Vec<_>>().join(" ");
            let outs = app.outs.iter().map(Label::to_string).collect::<Vec<_>>().join(" ");
            lines.push(format!("{}  {} -> {}", app.gate, ins, outs));
        }
        lines.push(interface("outputs", &self.outputs));
        lines.join("\n")
    }
}

/// A first-class circuit value `(l⃗, C, l⃗')`: the circuit plus input and
/// output label tuples. The tuples cover the circuit interface exactly.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BoxedCircuit {
    in_tuple: LabelTuple,
    circuit: Circuit,
    out_tuple: LabelTuple,
}

impl BoxedCircuit {
    pub fn new(
        in_tuple: LabelTuple,
        circuit: Circuit,
        out_tuple: LabelTuple,
    ) -> Result<BoxedCircuit, CircuitError> {
        for (tuple, ctx, side) in [
            (&in_tuple, &circuit.inputs, "input"),
            (&out_tuple, &circuit.outputs, "output"),
        ] {
            let labels = tuple.labels();
            let mut set = BTreeSet::new();
            for l in &labels {
                if !set.insert(*l) {
                    return Err(CircuitError::Cloning(*l));
                }
            }
            let dom: BTreeSet<Label> = ctx.keys().copied().collect();
            if set != dom {
                return Err(CircuitError::InterfaceMismatch(format!(
                    "{side} tuple labels {labels:?} do not cover the circuit {side}s {dom:?}"
                )));
            }
        }
        Ok(BoxedCircuit {
            in_tuple,
            circuit,
            out_tuple,
        })
    }

    pub fn in_tuple(&self) -> &LabelTuple {
        &self.in_tuple
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn out_tuple(&self) -> &LabelTuple {
        &self.out_tuple
    }

    pub fn size(&self) -> usize {
        self.circuit.size()
    }

    /// The simple M-type of one side of the interface, reconstructed from
    /// the tuple shape and the wire types in the context.
    pub fn interface_type(tuple: &LabelTuple, ctx: &LabelContext) -> Option<Type> {
        match tuple {
            LabelTuple::Unit => Some(Type::Unit),
            LabelTuple::Label(l) => ctx.get(l).map(|w| Type::Wire(w.clone())),
            LabelTuple::Pair(a, b) => Some(Type::tensor(
                Self::interface_type(a, ctx)?,
                Self::interface_type(b, ctx)?,
            )),
        }
    }

    pub fn input_type(&self) -> Option<Type> {
        Self::interface_type(&self.in_tuple, &self.circuit.inputs)
    }

    pub fn output_type(&self) -> Option<Type> {
        Self::interface_type(&self.out_tuple, &self.circuit.outputs)
    }

    /// Canonical representative: input-tuple leaves first in tuple order,
    /// then gate outputs in gate-list order.
    pub fn canonicalize(&self) -> BoxedCircuit {
        let mut map = BTreeMap::new();
        let mut next = 0u64;
        for l in self.in_tuple.labels() {
            map.entry(l).or_insert_with(|| {
                let fresh = Label(next);
                next += 1;
                fresh
            });
        }
        for app in &self.circuit.gates {
            for l in &app.outs {
                map.entry(*l).or_insert_with(|| {
                    let fresh = Label(next);
                    next += 1;
                    fresh
                });
            }
        }
        BoxedCircuit {
            in_tuple: self.in_tuple.rename(&map),
            circuit: self.circuit.relabel(&map),
            out_tuple: self.out_tuple.rename(&map),
        }
    }

    /// Equivalence up to a renaming of labels.
    pub fn equiv(&self, other: &BoxedCircuit) -> bool {
        self.canonicalize() == other.canonicalize()
    }

    /// Reverses the gate list, replacing every gate by its declared inverse
    /// and swapping the interface tuples.
    pub fn invert(&self, sig: &Signature) -> Result<BoxedCircuit, CircuitError> {
        let mut gates = Vec::with_capacity(self.circuit.gates.len());
        for app in self.circuit.gates.iter().rev() {
            let decl = sig
                .gate(&app.gate)
                .ok_or_else(|| CircuitError::UnknownGate(app.gate.clone()))?;
            let inverse = match (&decl.inverse, decl.invertible) {
                (Some(name), true) => name.clone(),
                _ => return Err(CircuitError::NotInvertible(app.gate.clone())),
            };
            gates.push(GateApp {
                gate: inverse,
                ins: app.outs.clone(),
                outs: app.ins.clone(),
            });
        }
        let circuit = Circuit {
            inputs: self.circuit.outputs.clone(),
            gates,
            outputs: self.circuit.inputs.clone(),
        };
        BoxedCircuit::new(self.out_tuple.clone(), circuit, self.in_tuple.clone())
    }

    pub fn validate(&self, sig: &Signature) -> Result<(), CircuitError> {
        self.circuit.validate(sig)
    }
}

/// Returns a label context and label tuple with `Q ⊢ l⃗ : T`, using fresh
/// labels: one per wire-type leaf of `T`, left to right, with the tuple
/// shape mirroring `T`.
pub fn freshlabels(
    ty: &Type,
    alloc: &mut LabelAllocator,
) -> Result<(LabelContext, LabelTuple), CircuitError> {
    if !ty.is_simple_m() {
        return Err(CircuitError::NotSimpleM(format!("{ty:?}")));
    }
    let mut ctx = LabelContext::new();
    let tuple = fresh_tuple(ty, alloc, &mut ctx);
    Ok((ctx, tuple))
}

fn fresh_tuple(ty: &Type, alloc: &mut LabelAllocator, ctx: &mut LabelContext) -> LabelTuple {
    match ty {
        Type::Wire(wire) => {
            let l = alloc.fresh();
            ctx.insert(l, wire.clone());
            LabelTuple::Label(l)
        }
        Type::Unit => LabelTuple::Unit,
        Type::Tensor(a, b) => {
            let left = fresh_tuple(a, alloc, ctx);
            let right = fresh_tuple(b, alloc, ctx);
            LabelTuple::Pair(Box::new(left), Box::new(right))
        }
        _ => unreachable!("freshlabels checks simplicity first"),
    }
}

fn zip_leaves(
    k: &LabelTuple,
    l: &LabelTuple,
    out: &mut Vec<(Label, Label)>,
) -> Result<(), CircuitError> {
    match (k, l) {
        (LabelTuple::Unit, LabelTuple::Unit) => Ok(()),
        (LabelTuple::Label(a), LabelTuple::Label(b)) => {
            out.push((*a, *b));
            Ok(())
        }
        (LabelTuple::Pair(a1, b1), LabelTuple::Pair(a2, b2)) => {
            zip_leaves(a1, a2, out)?;
            zip_leaves(b1, b2, out)
        }
        _ => Err(CircuitError::InterfaceMismatch(
            "label tuple shapes differ".to_string(),
        )),
    }
}

/// Grafts a boxed circuit onto `c` at the live labels `k⃗`: renames the
/// boxed circuit's inputs to `k⃗` pointwise and every other label to a fresh
/// one, then appends its gate list. Returns the extended circuit and the
/// renamed output tuple.
pub fn append(
    c: &Circuit,
    k: &LabelTuple,
    boxed: &BoxedCircuit,
    alloc: &mut LabelAllocator,
) -> Result<(Circuit, LabelTuple), CircuitError> {
    let mut pairs = Vec::new();
    zip_leaves(k, &boxed.in_tuple, &mut pairs)?;

    let mut map: BTreeMap<Label, Label> = BTreeMap::new();
    let mut used = BTreeSet::new();
    for (k_leaf, l_leaf) in &pairs {
        if !used.insert(*k_leaf) {
            return Err(CircuitError::Cloning(*k_leaf));
        }
        let expected = boxed
            .circuit
            .inputs
            .get(l_leaf)
            .expect("boxed circuit invariant: tuple covers inputs");
        match c.outputs.get(k_leaf) {
            None => return Err(CircuitError::UnboundLabel(*k_leaf)),
            Some(found) if found != expected => {
                return Err(CircuitError::WireTypeMismatch {
                    label: *k_leaf,
                    expected: expected.clone(),
                    found: found.clone(),
                })
            }
            Some(_) => {}
        }
        map.insert(*l_leaf, *k_leaf);
    }
    // Every label produced inside the boxed circuit gets a fresh name.
    for app in &boxed.circuit.gates {
        for l in &app.outs {
            map.entry(*l).or_insert_with(|| alloc.fresh());
        }
    }

    let grafted = boxed.circuit.relabel(&map);
    let mut result = c.clone();
    for (k_leaf, _) in &pairs {
        result.outputs.remove(k_leaf);
    }
    result.gates.extend(grafted.gates);
    for (l, w) in grafted.outputs {
        result.outputs.insert(l, w);
    }
    Ok((result, boxed.out_tuple.rename(&map)))
}

/// The boxed circuit consisting of a single gate application.
pub fn single_gate_boxed(
    sig: &Signature,
    gate: &str,
    alloc: &mut LabelAllocator,
) -> Result<BoxedCircuit, CircuitError> {
    let decl = sig
        .gate(gate)
        .ok_or_else(|| CircuitError::UnknownGate(gate.to_string()))?;
    let (inputs, in_tuple) = freshlabels(&decl.input, alloc)?;
    let circuit = identity(&inputs);
    let ins: Vec<Label> = in_tuple.labels();
    let (circuit, _) = circuit.append_gate(sig, gate, &ins, alloc)?;
    let (out_ctx, out_tuple) = {
        // The gate's outputs already exist; rebuild the tuple over them in
        // interface order.
        let app = circuit.gates.last().expect("gate was just appended");
        let mut outs = app.outs.iter().copied();
        fn shape(ty: &Type, outs: &mut impl Iterator<Item = Label>) -> LabelTuple {
            match ty {
                Type::Wire(_) => LabelTuple::Label(outs.next().expect("arity checked")),
                Type::Unit => LabelTuple::Unit,
                Type::Tensor(a, b) => {
                    let left = shape(a, outs);
                    let right = shape(b, outs);
                    LabelTuple::Pair(Box::new(left), Box::new(right))
                }
                _ => unreachable!(),
            }
        }
        (circuit.outputs.clone(), shape(&decl.output, &mut outs))
    };
    debug_assert_eq!(
        out_ctx.keys().copied().collect::<BTreeSet<_>>(),
        out_tuple.labels().into_iter().collect::<BTreeSet<_>>()
    );
    BoxedCircuit::new(in_tuple, circuit, out_tuple)
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct GateAppJson {
    g: String,
    #[serde(rename = "in")]
    ins: Vec<String>,
    #[serde(rename = "out")]
    outs: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct CircuitJson {
    inputs: BTreeMap<String, String>,
    gates: Vec<GateAppJson>,
    outputs: BTreeMap<String, String>,
}

fn label_from_str(s: &str) -> Result<Label, CircuitError> {
    Label::parse(s).ok_or_else(|| CircuitError::Serialization(format!("bad label `{s}`")))
}

impl Circuit {
    pub fn to_json(&self) -> String {
        let json = CircuitJson {
            inputs: self
                .inputs
                .iter()
                .map(|(l, w)| (l.to_string(), w.clone()))
                .collect(),
            gates: self
                .gates
                .iter()
                .map(|g| GateAppJson {
                    g: g.gate.clone(),
                    ins: g.ins.iter().map(Label::to_string).collect(),
                    outs: g.outs.iter().map(Label::to_string).collect(),
                })
                .collect(),
            outputs: self
                .outputs
                .iter()
                .map(|(l, w)| (l.to_string(), w.clone()))
                .collect(),
        };
        serde_json::to_string(&json).expect("circuit serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Circuit, CircuitError> {
        let json: CircuitJson = serde_json::from_str(text)
            .map_err(|e| CircuitError::Serialization(e.to_string()))?;
        let parse_ctx = |m: BTreeMap<String, String>| -> Result<LabelContext, CircuitError> {
            m.into_iter()
                .map(|(l, w)| Ok((label_from_str(&l)?, w)))
                .collect()
        };
        let parse_labels = |v: Vec<String>| -> Result<Vec<Label>, CircuitError> {
            v.iter().map(|s| label_from_str(s)).collect()
        };
        Ok(Circuit {
            inputs: parse_ctx(json.inputs)?,
            gates: json
                .gates
                .into_iter()
                .map(|g| {
                    Ok(GateApp {
                        gate: g.g,
                        ins: parse_labels(g.ins)?,
                        outs: parse_labels(g.outs)?,
                    })
                })
                .collect::<Result<_, CircuitError>>()?,
            outputs: parse_ctx(json.outputs)?,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct GateDeclJson {
    name: String,
    #[serde(rename = "in")]
    input: String,
    #[serde(rename = "out")]
    output: String,
    invertible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    inverse: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct SignatureJson {
    wire_types: Vec<String>,
    gates: Vec<GateDeclJson>,
}

impl Signature {
    /// Reads a signature file: wire types plus gates whose interfaces are
    /// written in the surface type grammar restricted to simple M-types.
    pub fn from_json(text: &str) -> Result<Signature, CircuitError> {
        let json: SignatureJson = serde_json::from_str(text)
            .map_err(|e| CircuitError::Signature(e.to_string()))?;
        let gates = json
            .gates
            .into_iter()
            .map(|g| {
                let input = crate::parse::parse_type_str(&g.input)
                    .map_err(|e| CircuitError::Signature(format!("gate `{}`: {e}", g.name)))?;
                let output = crate::parse::parse_type_str(&g.output)
                    .map_err(|e| CircuitError::Signature(format!("gate `{}`: {e}", g.name)))?;
                Ok(GateDecl {
                    name: g.name,
                    input,
                    output,
                    invertible: g.invertible,
                    inverse: g.inverse,
                })
            })
            .collect::<Result<Vec<_>, CircuitError>>()?;
        Signature::new(json.wire_types, gates)
    }

    pub fn to_json(&self) -> String {
        let json = SignatureJson {
            wire_types: self.wire_types.iter().cloned().collect(),
            gates: self
                .gates
                .iter()
                .map(|g| GateDeclJson {
                    name: g.name.clone(),
                    input: crate::pretty::type_to_string(&g.input),
                    output: crate::pretty::type_to_string(&g.output),
                    invertible: g.invertible,
                    inverse: g.inverse.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&json).expect("signature serialization cannot fail")
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::default_signature;

    fn qctx(labels: &[(u64, &str)]) -> LabelContext {
        labels
            .iter()
            .map(|(i, w)| (Label(*i), w.to_string()))
            .collect()
    }

    #[test]
    fn identity_circuits() {
        let empty = identity(&LabelContext::new());
        assert_eq!(empty.size(), 0);
        assert!(empty.inputs.is_empty() && empty.outputs.is_empty());

        let one = identity(&qctx(&[(0, "Qubit")]));
        assert_eq!(one.inputs, one.outputs);
        assert_eq!(one.size(), 0);

        let two = identity(&qctx(&[(0, "Qubit"), (1, "Bit")]));
        assert_eq!(two.size(), 0);
        assert_eq!(two.outputs.len(), 2);
    }

    #[test]
    fn append_gate_traces() {
        let sig = default_signature();
        let mut alloc = LabelAllocator::above([Label(0)]);
        let c = identity(&qctx(&[(0, "Qubit")]));

        let (c2, outs) = c.append_gate(&sig, "H", &[Label(0)], &mut alloc).unwrap();
        assert_eq!(c2.size(), 1);
        assert_eq!(outs, vec![Label(1)]);
        assert_eq!(c2.outputs, qctx(&[(1, "Qubit")]));
        c2.validate(&sig).unwrap();

        // Cloning a wire into a two-input gate.
        let err = c.append_gate(&sig, "CNOT", &[Label(0), Label(0)], &mut alloc);
        assert_eq!(err, Err(CircuitError::Cloning(Label(0))));

        // Appending to a wire that does not exist.
        let err = identity(&LabelContext::new()).append_gate(&sig, "H", &[Label(7)], &mut alloc);
        assert_eq!(err, Err(CircuitError::UnboundLabel(Label(7))));

        // Wire type mismatch.
        let bit = identity(&qctx(&[(0, "Bit")]));
        let err = bit.append_gate(&sig, "H", &[Label(0)], &mut alloc);
        assert!(matches!(err, Err(CircuitError::WireTypeMismatch { .. })));
    }

    #[test]
    fn freshlabels_shapes() {
        let mut alloc = LabelAllocator::new();
        let (q, t) = freshlabels(&Type::Unit, &mut alloc).unwrap();
        assert!(q.is_empty());
        assert_eq!(t, LabelTuple::Unit);

        let (q, t) = freshlabels(&Type::wire("Qubit"), &mut alloc).unwrap();
        assert_eq!(q, qctx(&[(0, "Qubit")]));
        assert_eq!(t, LabelTuple::Label(Label(0)));

        let mut alloc = LabelAllocator::new();
        let ty = Type::tensor(
            Type::wire("Qubit"),
            Type::tensor(Type::wire("Bit"), Type::Unit),
        );
        let (q, t) = freshlabels(&ty, &mut alloc).unwrap();
        assert_eq!(q, qctx(&[(0, "Qubit"), (1, "Bit")]));
        assert_eq!(
            t,
            LabelTuple::Pair(
                Box::new(LabelTuple::Label(Label(0))),
                Box::new(LabelTuple::Pair(
                    Box::new(LabelTuple::Label(Label(1))),
                    Box::new(LabelTuple::Unit),
                )),
            )
        );

        assert!(freshlabels(&Type::Nat, &mut alloc).is_err());
    }

    #[test]
    fn append_grafts_and_renames() {
        let sig = default_signature();

        // Build the H boxed circuit on local labels, then graft onto L0.
        let mut local = LabelAllocator::new();
        let h = single_gate_boxed(&sig, "H", &mut local).unwrap();

        let mut alloc = LabelAllocator::above([Label(0)]);
        let c = identity(&qctx(&[(0, "Qubit")]));
        let (c2, out) = append(&c, &LabelTuple::Label(Label(0)), &h, &mut alloc).unwrap();
        assert_eq!(c2.size(), 1);
        assert_eq!(c2.gates[0].ins, vec![Label(0)]);
        assert_eq!(out.labels().len(), 1);
        assert_eq!(c2.outputs, qctx(&[(out.labels()[0].0, "Qubit")]));
        c2.validate(&sig).unwrap();

        // Appending an identity boxed circuit adds nothing and keeps the
        // interface.
        let mut local = LabelAllocator::new();
        let (q, t) = freshlabels(&Type::wire("Qubit"), &mut local).unwrap();
        let id_boxed = BoxedCircuit::new(t.clone(), identity(&q), t).unwrap();
        let (c3, out) = append(&c, &LabelTuple::Label(Label(0)), &id_boxed, &mut alloc).unwrap();
        assert_eq!(c3.size(), 0);
        assert_eq!(c3.outputs, c.outputs);
        assert_eq!(out.labels(), vec![Label(0)]);

        // Wire type mismatch between graft point and boxed input.
        let bits = identity(&qctx(&[(0, "Bit")]));
        let err = append(&bits, &LabelTuple::Label(Label(0)), &h, &mut alloc);
        assert!(matches!(err, Err(CircuitError::WireTypeMismatch { .. })));

        // Dead graft point.
        let err = append(&c, &LabelTuple::Label(Label(9)), &h, &mut alloc);
        assert_eq!(err, Err(CircuitError::UnboundLabel(Label(9))));
    }

    #[test]
    fn append_freshness() {
        let sig = default_signature();
        let mut local = LabelAllocator::new();
        let h = single_gate_boxed(&sig, "H", &mut local).unwrap();

        let mut alloc = LabelAllocator::above([Label(0), Label(1)]);
        let c = identity(&qctx(&[(0, "Qubit"), (1, "Qubit")]));
        let before = c.all_labels();
        let (c2, _) = append(&c, &LabelTuple::Label(Label(0)), &h, &mut alloc).unwrap();
        let new_labels: BTreeSet<Label> =
            c2.all_labels().difference(&before).copied().collect();
        // Everything new came from the allocator, above the watermark.
        assert!(new_labels.iter().all(|l| l.0 >= 2));
        assert_eq!(c2.size(), 1);
    }

    #[test]
    fn canonical_forms() {
        let sig = default_signature();

        // Identity circuits canonicalize to L0..L(n-1).
        let c = identity(&qctx(&[(7, "Bit"), (12, "Qubit")]));
        let canon = c.canonicalize();
        assert_eq!(canon.inputs, qctx(&[(0, "Bit"), (1, "Qubit")]));

        // Two H circuits built with different allocators agree canonically.
        let mut a1 = LabelAllocator::new();
        let h1 = single_gate_boxed(&sig, "H", &mut a1).unwrap();
        let mut a2 = LabelAllocator::above([Label(40)]);
        let h2 = single_gate_boxed(&sig, "H", &mut a2).unwrap();
        assert_ne!(h1, h2);
        assert_eq!(h1.canonicalize(), h2.canonicalize());
        assert!(h1.equiv(&h2));

        // Gate lists still matter.
        let mut local = LabelAllocator::new();
        let (q, t) = freshlabels(&Type::wire("Qubit"), &mut local).unwrap();
        let id_boxed = BoxedCircuit::new(t.clone(), identity(&q), t).unwrap();
        assert!(!h1.equiv(&id_boxed));
    }

    #[test]
    fn invert_reverses_gates() {
        let sig = default_signature();
        let mut alloc = LabelAllocator::new();

        // H then X on one wire.
        let (q, t) = freshlabels(&Type::wire("Qubit"), &mut alloc).unwrap();
        let c = identity(&q);
        let l0 = t.labels()[0];
        let (c, outs) = c.append_gate(&sig, "H", &[l0], &mut alloc).unwrap();
        let (c, outs) = c.append_gate(&sig, "X", &[outs[0]], &mut alloc).unwrap();
        let boxed = BoxedCircuit::new(t, c, LabelTuple::Label(outs[0])).unwrap();

        let inv = boxed.invert(&sig).unwrap();
        inv.validate(&sig).unwrap();
        assert_eq!(
            inv.circuit().gates.iter().map(|g| g.gate.as_str()).collect::<Vec<_>>(),
            vec!["X", "H"]
        );
        assert!(inv.invert(&sig).unwrap().equiv(&boxed));

        // meas has no inverse.
        let mut alloc = LabelAllocator::new();
        let meas = single_gate_boxed(&sig, "meas", &mut alloc).unwrap();
        assert_eq!(
            meas.invert(&sig),
            Err(CircuitError::NotInvertible("meas".to_string()))
        );

        // Inverting the identity is the identity.
        let mut alloc = LabelAllocator::new();
        let (q, t) = freshlabels(&Type::wire("Qubit"), &mut alloc).unwrap();
        let id_boxed = BoxedCircuit::new(t.clone(), identity(&q), t).unwrap();
        assert!(id_boxed.invert(&sig).unwrap().equiv(&id_boxed));
    }

    #[test]
    fn size_counts_gates() {
        let sig = default_signature();
        let mut alloc = LabelAllocator::new();
        let (q, t) = freshlabels(&Type::tensor(Type::wire("Qubit"), Type::wire("Qubit")), &mut alloc)
            .unwrap();
        let ls = t.labels();
        let c = identity(&q);
        assert_eq!(c.size(), 0);
        let (c, outs) = c.append_gate(&sig, "H", &[ls[0]], &mut alloc).unwrap();
        let (c, _) = c
            .append_gate(&sig, "CNOT", &[outs[0], ls[1]], &mut alloc)
            .unwrap();
        assert_eq!(c.size(), 2);
    }

    #[test]
    fn json_round_trip_is_byte_exact() {
        let sig = default_signature();
        let mut alloc = LabelAllocator::new();
        let (q, t) = freshlabels(&Type::tensor(Type::wire("Qubit"), Type::wire("Qubit")), &mut alloc)
            .unwrap();
        let ls = t.labels();
        let c = identity(&q);
        let (c, outs) = c.append_gate(&sig, "H", &[ls[0]], &mut alloc).unwrap();
        let (c, _) = c
            .append_gate(&sig, "CNOT", &[outs[0], ls[1]], &mut alloc)
            .unwrap();
        let canon = c.canonicalize();
        let json = canon.to_json();
        let back = Circuit::from_json(&json).unwrap();
        assert_eq!(back, canon);
        assert_eq!(back.to_json(), json);
    }

    #[test]
    fn signature_json_and_validation() {
        let sig = default_signature();
        let round = Signature::from_json(&sig.to_json()).unwrap();
        assert_eq!(round, sig);

        // Inverse must swap types.
        let bad = Signature::new(
            vec!["Qubit".to_string(), "Bit".to_string()],
            vec![
                GateDecl {
                    name: "m".to_string(),
                    input: Type::wire("Qubit"),
                    output: Type::wire("Bit"),
                    invertible: true,
                    inverse: Some("m".to_string()),
                },
            ],
        );
        assert!(matches!(bad, Err(CircuitError::Signature(_))));

        let dup = Signature::new(
            vec!["Qubit".to_string()],
            vec![
                GateDecl {
                    name: "g".to_string(),
                    input: Type::wire("Qubit"),
                    output: Type::wire("Qubit"),
                    invertible: false,
                    inverse: None,
                },
                GateDecl {
                    name: "g".to_string(),
                    input: Type::wire("Qubit"),
                    output: Type::wire("Qubit"),
                    invertible: false,
                    inverse: None,
                },
            ],
        );
        assert!(matches!(dup, Err(CircuitError::Signature(_))));
    }

    #[test]
    fn text_rendering() {
        let sig = default_signature();
        let mut alloc = LabelAllocator::above([Label(0)]);
        let c = identity(&qctx(&[(0, "Qubit")]));
        let (c, _) = c.append_gate(&sig, "H", &[Label(0)], &mut alloc).unwrap();
        assert_eq!(
            c.render_text(),
            "inputs: L0:Qubit\nH  L0 -> L1\noutputs: L1:Qubit"
        );
    }
}
