//! Core symbolic types: predicates, atoms, states, action schemas, domains,
//! and problems. Everything is immutable after construction and cheap to
//! share between worker threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::PddlError;

/// The implicit root of every type hierarchy.
pub const OBJECT_TYPE: &str = "object";

/// A predicate fully instantiated with object names.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new(predicate: impl Into<String>, args: Vec<String>) -> Self {
        GroundAtom { predicate: predicate.into(), args }
    }

    /// Convenience constructor from string slices.
    pub fn from_parts(predicate: &str, args: &[&str]) -> Self {
        GroundAtom {
            predicate: predicate.to_string(),
            args: args.iter().map(|a| a.to_string()).collect(),
        }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {}", a)?;
        }
        write!(f, ")")
    }
}

/// A set of true ground atoms. Equality is set equality; insertion order is
/// irrelevant because the backing store is ordered.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct State {
    atoms: BTreeSet<GroundAtom>,
}

impl State {
    pub fn new() -> Self {
        State { atoms: BTreeSet::new() }
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = GroundAtom>) -> Self {
        State { atoms: atoms.into_iter().collect() }
    }

    pub fn atoms(&self) -> &BTreeSet<GroundAtom> {
        &self.atoms
    }

    pub fn contains(&self, atom: &GroundAtom) -> bool {
        self.atoms.contains(atom)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn insert(&mut self, atom: GroundAtom) {
        self.atoms.insert(atom);
    }

    pub fn remove(&mut self, atom: &GroundAtom) {
        self.atoms.remove(atom);
    }

    pub fn is_subset_of(&self, other: &State) -> bool {
        self.atoms.is_subset(&other.atoms)
    }

    pub fn iter(&self) -> impl Iterator<Item = &GroundAtom> {
        self.atoms.iter()
    }

    /// Atoms present in `self` but not in `other`.
    pub fn difference<'a>(&'a self, other: &State) -> Vec<&'a GroundAtom> {
        self.atoms.iter().filter(|a| !other.contains(a)).collect()
    }

    /// Renders atoms sorted, space separated: `(a) (b c)`.
    pub fn render_inline(&self) -> String {
        let mut out = String::new();
        for (i, atom) in self.atoms.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&atom.to_string());
        }
        out
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render_inline())
    }
}

/// A typed formal parameter of a predicate or action schema.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub ty: String,
}

impl Param {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        Param { name: name.into(), ty: ty.into() }
    }
}

/// Declares a named Boolean relation over typed parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateSchema {
    pub name: String,
    pub params: Vec<Param>,
}

impl PredicateSchema {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

/// One argument slot in an atom template: either a schema variable (`?x`)
/// or a constant object name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TemplateArg {
    Var(String),
    Const(String),
}

impl fmt::Display for TemplateArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemplateArg::Var(v) => write!(f, "?{}", v),
            TemplateArg::Const(c) => write!(f, "{}", c),
        }
    }
}

/// An atom whose arguments may still reference schema parameters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AtomTemplate {
    pub predicate: String,
    pub args: Vec<TemplateArg>,
}

impl AtomTemplate {
    /// Substitutes parameter bindings, producing a ground atom.
    pub fn instantiate(&self, binding: &BTreeMap<&str, &str>) -> GroundAtom {
        let args = self
            .args
            .iter()
            .map(|a| match a {
                TemplateArg::Var(v) => binding
                    .get(v.as_str())
                    .map(|o| o.to_string())
                    .unwrap_or_else(|| v.clone()),
                TemplateArg::Const(c) => c.clone(),
            })
            .collect();
        GroundAtom::new(self.predicate.clone(), args)
    }
}

impl fmt::Display for AtomTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {}", a)?;
        }
        write!(f, ")")
    }
}

/// An action schema with conjunctive positive preconditions and add/delete
/// effect lists. Add and delete sets never overlap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<Param>,
    pub pre: BTreeSet<AtomTemplate>,
    pub add: BTreeSet<AtomTemplate>,
    pub del: BTreeSet<AtomTemplate>,
}

impl ActionSchema {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

/// Type hierarchy: every declared type maps to its parent, with `object`
/// as the implicit root.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TypeTree {
    parents: BTreeMap<String, String>,
}

impl TypeTree {
    pub fn new() -> Self {
        TypeTree::default()
    }

    pub fn declare(&mut self, ty: impl Into<String>, parent: impl Into<String>) {
        let ty = ty.into();
        if ty != OBJECT_TYPE {
            self.parents.insert(ty, parent.into());
        }
    }

    pub fn is_declared(&self, ty: &str) -> bool {
        ty == OBJECT_TYPE || self.parents.contains_key(ty)
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    /// True when `ty` equals `ancestor` or derives from it transitively.
    /// Every type is a subtype of `object`.
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        if ty == ancestor || ancestor == OBJECT_TYPE {
            return true;
        }
        let mut cur = ty;
        let mut hops = 0;
        while let Some(parent) = self.parents.get(cur) {
            if parent == ancestor {
                return true;
            }
            cur = parent;
            hops += 1;
            if hops > self.parents.len() {
                break; // cycle guard
            }
        }
        false
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &String)> {
        self.parents.iter()
    }
}

/// A planning domain: predicate schemas plus action schemas, with an
/// optional type hierarchy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub name: String,
    pub types: TypeTree,
    pub predicates: BTreeMap<String, PredicateSchema>,
    pub actions: BTreeMap<String, ActionSchema>,
}

impl Domain {
    pub fn predicate(&self, name: &str) -> Option<&PredicateSchema> {
        self.predicates.get(name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.get(name)
    }

    /// Semantic validation: every template references a declared predicate
    /// with matching arity, every variable is bound by the schema's
    /// parameters, parameter types are declared, and add/delete effects
    /// never overlap.
    pub fn check(&self) -> Result<(), PddlError> {
        for pred in self.predicates.values() {
            for p in &pred.params {
                if !self.types.is_declared(&p.ty) {
                    return Err(PddlError::UnknownType(p.ty.clone()));
                }
            }
        }
        for action in self.actions.values() {
            let param_names: BTreeSet<&str> =
                action.params.iter().map(|p| p.name.as_str()).collect();
            for p in &action.params {
                if !self.types.is_declared(&p.ty) {
                    return Err(PddlError::UnknownType(p.ty.clone()));
                }
            }
            let all = action.pre.iter().chain(&action.add).chain(&action.del);
            for tmpl in all {
                let schema = self
                    .predicates
                    .get(&tmpl.predicate)
                    .ok_or_else(|| PddlError::UnknownPredicate(tmpl.predicate.clone()))?;
                if schema.arity() != tmpl.args.len() {
                    return Err(PddlError::ArityMismatch {
                        predicate: tmpl.predicate.clone(),
                        expected: schema.arity(),
                        got: tmpl.args.len(),
                    });
                }
                for arg in &tmpl.args {
                    if let TemplateArg::Var(v) = arg {
                        if !param_names.contains(v.as_str()) {
                            return Err(PddlError::UnboundVariable(v.clone()));
                        }
                    }
                }
            }
            if let Some(overlap) = action.add.intersection(&action.del).next() {
                return Err(PddlError::EffectOverlap {
                    action: action.name.clone(),
                    atom: overlap.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// A planning problem: typed objects, a domain reference, and initial and
/// goal states (the goal is a conjunction of positive atoms).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub name: String,
    pub domain: Arc<Domain>,
    /// Object name to type name.
    pub objects: BTreeMap<String, String>,
    pub init: State,
    pub goal: State,
}

impl Problem {
    /// Object names compatible with the given type, in sorted order.
    pub fn objects_of_type(&self, ty: &str) -> Vec<&str> {
        self.objects
            .iter()
            .filter(|(_, obj_ty)| self.domain.types.is_subtype(obj_ty, ty))
            .map(|(name, _)| name.as_str())
            .collect()
    }

    /// Checks that an atom references a declared predicate with matching
    /// arity and known objects.
    pub fn check_atom(&self, atom: &GroundAtom) -> Result<(), PddlError> {
        let schema = self
            .domain
            .predicate(&atom.predicate)
            .ok_or_else(|| PddlError::UnknownPredicate(atom.predicate.clone()))?;
        if schema.arity() != atom.args.len() {
            return Err(PddlError::ArityMismatch {
                predicate: atom.predicate.clone(),
                expected: schema.arity(),
                got: atom.args.len(),
            });
        }
        for (arg, param) in atom.args.iter().zip(&schema.params) {
            let obj_ty = self
                .objects
                .get(arg)
                .ok_or_else(|| PddlError::UnknownObject(arg.clone()))?;
            if !self.domain.types.is_subtype(obj_ty, &param.ty) {
                return Err(PddlError::TypeMismatch {
                    object: arg.clone(),
                    expected: param.ty.clone(),
                    actual: obj_ty.clone(),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_equality_ignores_insertion_order() {
        let a = GroundAtom::from_parts("on", &["a", "b"]);
        let b = GroundAtom::from_parts("clear", &["c"]);
        let s1 = State::from_atoms([a.clone(), b.clone()]);
        let s2 = State::from_atoms([b, a]);
        assert_eq!(s1, s2);
    }

    #[test]
    fn subtype_chain_reaches_object() {
        let mut tree = TypeTree::new();
        tree.declare("block", OBJECT_TYPE);
        tree.declare("heavy-block", "block");
        assert!(tree.is_subtype("heavy-block", "block"));
        assert!(tree.is_subtype("heavy-block", OBJECT_TYPE));
        assert!(tree.is_subtype("block", OBJECT_TYPE));
        assert!(!tree.is_subtype("block", "heavy-block"));
    }

    #[test]
    fn atom_display_round() {
        let a = GroundAtom::from_parts("on", &["a", "b"]);
        assert_eq!(a.to_string(), "(on a b)");
        let h = GroundAtom::from_parts("handempty", &[]);
        assert_eq!(h.to_string(), "(handempty)");
    }
}
