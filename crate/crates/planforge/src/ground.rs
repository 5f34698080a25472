//! Grounding: instantiate predicate and action schemas over a problem's
//! objects, producing the full ground-atom universe and ground-action set.
//!
//! Atoms are enumerated in lexicographic `(predicate, args)` order and
//! actions in lexicographic `(schema, binding)` order; the resulting dense
//! indices are part of the contract, so independent consumers agree on
//! encodings.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::pddl::{ActionSchema, Domain, GroundAtom, Problem, State};

/// Default ceiling for both ground atoms and ground actions.
pub const DEFAULT_UNIVERSE_CAP: usize = 5_000_000;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GroundError {
    #[error("ground universe exceeds the configured cap of {limit}")]
    UniverseTooLarge { limit: usize },
}

/// Why `apply` refused to run an action.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("preconditions of {action} not satisfied; missing: {}", missing.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" "))]
pub struct PreconditionViolated {
    pub action: String,
    pub missing: Vec<GroundAtom>,
}

/// A fully instantiated action: schema name, object binding, and resolved
/// precondition/add/delete atom sets. Add and delete never overlap
/// (bindings that would make them overlap are excluded while grounding).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundAction {
    pub schema: String,
    pub binding: Vec<String>,
    pub pre: State,
    pub add: State,
    pub del: State,
}

impl GroundAction {
    /// Renders as `(name arg1 arg2)`.
    pub fn display_name(&self) -> String {
        if self.binding.is_empty() {
            format!("({})", self.schema)
        } else {
            format!("({} {})", self.schema, self.binding.join(" "))
        }
    }
}

/// Dense integer handle into [`GroundUniverse::atoms`].
pub type AtomId = u32;
/// Dense integer handle into [`GroundUniverse::actions`].
pub type ActionId = u32;

/// Id-compiled view of one ground action, used by the search code.
#[derive(Debug, Clone)]
pub(crate) struct CompiledAction {
    pub pre: Vec<AtomId>,
    pub add: Vec<AtomId>,
    pub del: Vec<AtomId>,
}

/// Fixed-width bitset over the atom universe.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateBits {
    words: Vec<u64>,
}

impl StateBits {
    pub(crate) fn zeroed(num_atoms: usize) -> Self {
        StateBits { words: vec![0; num_atoms.div_ceil(64)] }
    }

    #[inline]
    pub(crate) fn set(&mut self, id: AtomId) {
        self.words[(id / 64) as usize] |= 1 << (id % 64);
    }

    #[inline]
    pub(crate) fn clear(&mut self, id: AtomId) {
        self.words[(id / 64) as usize] &= !(1 << (id % 64));
    }

    #[inline]
    pub(crate) fn get(&self, id: AtomId) -> bool {
        self.words[(id / 64) as usize] & (1 << (id % 64)) != 0
    }

    pub(crate) fn contains_all(&self, ids: &[AtomId]) -> bool {
        ids.iter().all(|&id| self.get(id))
    }

    pub(crate) fn ones(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &bits)| {
            let mut bits = bits;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let tz = bits.trailing_zeros();
                    bits &= bits - 1;
                    Some(w as AtomId * 64 + tz)
                }
            })
        })
    }
}

/// The complete enumeration of ground atoms and ground actions for one
/// problem. Immutable after construction.
#[derive(Debug)]
pub struct GroundUniverse {
    atoms: Vec<GroundAtom>,
    actions: Vec<GroundAction>,
    compiled: Vec<CompiledAction>,
    init_bits: StateBits,
    goal_bits: StateBits,
}

fn typed_object_lists<'a>(
    problem: &'a Problem,
    params: &[crate::pddl::Param],
) -> Vec<Vec<&'a str>> {
    params.iter().map(|p| problem.objects_of_type(&p.ty)).collect()
}

/// Iterates the cartesian product of the per-parameter object pools in
/// lexicographic order, calling `f` with each binding.
fn for_each_binding(pools: &[Vec<&str>], mut f: impl FnMut(&[&str]) -> Result<(), GroundError>) -> Result<(), GroundError> {
    if pools.iter().any(|p| p.is_empty()) && !pools.is_empty() {
        return Ok(());
    }
    let mut idx = vec![0usize; pools.len()];
    loop {
        let binding: Vec<&str> = idx.iter().zip(pools).map(|(&i, pool)| pool[i]).collect();
        f(&binding)?;
        let mut k = pools.len();
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < pools[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

fn instantiate_action(
    schema: &ActionSchema,
    binding: &[&str],
) -> Option<GroundAction> {
    let map: BTreeMap<&str, &str> = schema
        .params
        .iter()
        .map(|p| p.name.as_str())
        .zip(binding.iter().copied())
        .collect();
    let pre = State::from_atoms(schema.pre.iter().map(|t| t.instantiate(&map)));
    let add = State::from_atoms(schema.add.iter().map(|t| t.instantiate(&map)));
    let del = State::from_atoms(schema.del.iter().map(|t| t.instantiate(&map)));
    // A binding can collapse distinct templates onto the same atom; such
    // ground actions are contradictory and are not part of the universe.
    if add.iter().any(|a| del.contains(a)) {
        return None;
    }
    Some(GroundAction {
        schema: schema.name.clone(),
        binding: binding.iter().map(|s| s.to_string()).collect(),
        pre,
        add,
        del,
    })
}

/// Grounds a problem with the default universe cap.
pub fn ground(problem: &Problem) -> Result<GroundUniverse, GroundError> {
    ground_with_cap(problem, DEFAULT_UNIVERSE_CAP)
}

/// Grounds a problem, failing fast when the atom or action count would
/// exceed `cap`.
pub fn ground_with_cap(problem: &Problem, cap: usize) -> Result<GroundUniverse, GroundError> {
    let domain: &Domain = &problem.domain;

    let mut atoms: Vec<GroundAtom> = Vec::new();
    for pred in domain.predicates.values() {
        let pools = typed_object_lists(problem, &pred.params);
        for_each_binding(&pools, |binding| {
            atoms.push(GroundAtom::new(
                pred.name.clone(),
                binding.iter().map(|s| s.to_string()).collect(),
            ));
            if atoms.len() > cap {
                return Err(GroundError::UniverseTooLarge { limit: cap });
            }
            Ok(())
        })?;
    }
    atoms.sort();
    atoms.dedup();

    let atom_id = |atom: &GroundAtom| -> Option<AtomId> {
        atoms.binary_search(atom).ok().map(|i| i as AtomId)
    };

    let mut actions: Vec<GroundAction> = Vec::new();
    for schema in domain.actions.values() {
        let pools = typed_object_lists(problem, &schema.params);
        for_each_binding(&pools, |binding| {
            if let Some(ga) = instantiate_action(schema, binding) {
                actions.push(ga);
                if actions.len() > cap {
                    return Err(GroundError::UniverseTooLarge { limit: cap });
                }
            }
            Ok(())
        })?;
    }
    actions.sort_by(|a, b| (&a.schema, &a.binding).cmp(&(&b.schema, &b.binding)));

    let compiled = actions
        .iter()
        .map(|a| CompiledAction {
            pre: a.pre.iter().map(|at| atom_id(at).expect("pre atom in universe")).collect(),
            add: a.add.iter().map(|at| atom_id(at).expect("add atom in universe")).collect(),
            del: a.del.iter().map(|at| atom_id(at).expect("del atom in universe")).collect(),
        })
        .collect();

    let mut init_bits = StateBits::zeroed(atoms.len());
    for atom in problem.init.iter() {
        if let Some(id) = atom_id(atom) {
            init_bits.set(id);
        }
    }
    let mut goal_bits = StateBits::zeroed(atoms.len());
    for atom in problem.goal.iter() {
        if let Some(id) = atom_id(atom) {
            goal_bits.set(id);
        }
    }

    Ok(GroundUniverse { atoms, actions, compiled, init_bits, goal_bits })
}

impl GroundUniverse {
    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn atoms(&self) -> &[GroundAtom] {
        &self.atoms
    }

    pub fn actions(&self) -> &[GroundAction] {
        &self.actions
    }

    pub fn atom(&self, id: AtomId) -> &GroundAtom {
        &self.atoms[id as usize]
    }

    pub fn action(&self, id: ActionId) -> &GroundAction {
        &self.actions[id as usize]
    }

    /// Dense id of a ground atom, if it belongs to the universe.
    pub fn atom_id(&self, atom: &GroundAtom) -> Option<AtomId> {
        self.atoms.binary_search(atom).ok().map(|i| i as AtomId)
    }

    /// Resolves an action by schema name and binding.
    pub fn action_id(&self, name: &str, args: &[String]) -> Option<ActionId> {
        self.actions
            .binary_search_by(|a| (a.schema.as_str(), a.binding.as_slice()).cmp(&(name, args)))
            .ok()
            .map(|i| i as ActionId)
    }

    pub(crate) fn compiled(&self, id: ActionId) -> &CompiledAction {
        &self.compiled[id as usize]
    }

    pub(crate) fn init_bits(&self) -> StateBits {
        self.init_bits.clone()
    }

    pub(crate) fn goal_bits(&self) -> &StateBits {
        &self.goal_bits
    }

    pub(crate) fn to_bits(&self, state: &State) -> StateBits {
        let mut bits = StateBits::zeroed(self.atoms.len());
        for atom in state.iter() {
            if let Some(id) = self.atom_id(atom) {
                bits.set(id);
            }
        }
        bits
    }

    pub(crate) fn from_bits(&self, bits: &StateBits) -> State {
        State::from_atoms(bits.ones().map(|id| self.atoms[id as usize].clone()))
    }

    pub(crate) fn goal_satisfied_bits(&self, bits: &StateBits) -> bool {
        self.goal_bits
            .ones()
            .all(|id| bits.get(id))
    }

    /// Ids of all actions applicable in `bits`, ascending.
    pub(crate) fn applicable_ids(&self, bits: &StateBits) -> Vec<ActionId> {
        self.compiled
            .iter()
            .enumerate()
            .filter(|(_, c)| bits.contains_all(&c.pre))
            .map(|(i, _)| i as ActionId)
            .collect()
    }

    pub(crate) fn apply_bits(&self, bits: &StateBits, id: ActionId) -> StateBits {
        let c = &self.compiled[id as usize];
        let mut next = bits.clone();
        for &d in &c.del {
            next.clear(d);
        }
        for &a in &c.add {
            next.set(a);
        }
        next
    }
}

/// All ground actions whose preconditions hold in `state`, in index order.
pub fn applicable<'u>(state: &State, universe: &'u GroundUniverse) -> Vec<&'u GroundAction> {
    let bits = universe.to_bits(state);
    universe
        .applicable_ids(&bits)
        .into_iter()
        .map(|id| universe.action(id))
        .collect()
}

/// STRIPS transition: `(state \ del) ∪ add`, with deletes applied first.
/// Fails when any precondition atom is absent.
pub fn apply(state: &State, action: &GroundAction) -> Result<State, PreconditionViolated> {
    let missing: Vec<GroundAtom> =
        action.pre.iter().filter(|a| !state.contains(a)).cloned().collect();
    if !missing.is_empty() {
        return Err(PreconditionViolated { action: action.display_name(), missing });
    }
    let mut next = state.clone();
    for atom in action.del.iter() {
        next.remove(atom);
    }
    for atom in action.add.iter() {
        next.insert(atom.clone());
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_problem};
    use std::sync::Arc;

    const BW: &str = r#"
(define (domain blocks)
  (:predicates (on ?x ?y) (ontable ?x) (clear ?x) (handempty) (holding ?x))
  (:action pick-up
    :parameters (?x)
    :precondition (and (clear ?x) (ontable ?x) (handempty))
    :effect (and (not (ontable ?x)) (not (clear ?x)) (not (handempty)) (holding ?x)))
  (:action put-down
    :parameters (?x)
    :precondition (holding ?x)
    :effect (and (not (holding ?x)) (clear ?x) (handempty) (ontable ?x)))
  (:action stack
    :parameters (?x ?y)
    :precondition (and (holding ?x) (clear ?y))
    :effect (and (not (holding ?x)) (not (clear ?y)) (clear ?x) (handempty) (on ?x ?y)))
  (:action unstack
    :parameters (?x ?y)
    :precondition (and (on ?x ?y) (clear ?x) (handempty))
    :effect (and (holding ?x) (clear ?y) (not (clear ?x)) (not (handempty)) (not (on ?x ?y)))))
"#;

    fn three_blocks() -> Problem {
        let domain = Arc::new(parse_domain(BW).unwrap());
        parse_problem(
            r#"
(define (problem three)
  (:domain blocks)
  (:objects a b c)
  (:init (ontable a) (ontable b) (ontable c) (clear a) (clear b) (clear c) (handempty))
  (:goal (and (on a b) (on b c))))
"#,
            &domain,
        )
        .unwrap()
    }

    #[test]
    fn universe_size_three_untyped_blocks() {
        // on/2 -> 9, ontable/1 -> 3, clear/1 -> 3, handempty/0 -> 1, holding/1 -> 3
        let u = ground(&three_blocks()).unwrap();
        assert_eq!(u.num_atoms(), 19);
    }

    #[test]
    fn zero_objects_only_nullary_predicates_survive() {
        let domain = Arc::new(
            parse_domain("(define (domain d) (:predicates (p) (q) (r ?x)))").unwrap(),
        );
        let problem = parse_problem(
            "(define (problem e) (:domain d) (:init) (:goal (and)))",
            &domain,
        )
        .unwrap();
        let u = ground(&problem).unwrap();
        assert_eq!(u.num_atoms(), 2);
    }

    #[test]
    fn predicate_over_empty_type_contributes_nothing() {
        let domain = Arc::new(
            parse_domain(
                r#"(define (domain d)
  (:requirements :typing)
  (:types widget gadget)
  (:predicates (w ?x - widget) (g ?x - gadget)))"#,
            )
            .unwrap(),
        );
        let problem = parse_problem(
            "(define (problem e) (:domain d) (:objects w1 w2 - widget) (:init) (:goal (and)))",
            &domain,
        )
        .unwrap();
        let u = ground(&problem).unwrap();
        assert_eq!(u.num_atoms(), 2); // only (w w1) and (w w2)
    }

    #[test]
    fn typed_grounding_matches_brute_force() {
        let domain = Arc::new(
            parse_domain(
                r#"(define (domain d)
  (:requirements :typing)
  (:types block - object heavy - block)
  (:predicates (supports ?x - block ?y - heavy) (light ?x - block)))"#,
            )
            .unwrap(),
        );
        let problem = parse_problem(
            "(define (problem e) (:domain d) (:objects b1 b2 - block h1 - heavy) (:init) (:goal (and)))",
            &domain,
        )
        .unwrap();
        let u = ground(&problem).unwrap();
        // Brute-force enumeration over typed objects: supports ranges over
        // {b1,b2,h1} x {h1}; light over {b1,b2,h1}.
        let mut expected = Vec::new();
        for x in ["b1", "b2", "h1"] {
            expected.push(GroundAtom::from_parts("supports", &[x, "h1"]));
            expected.push(GroundAtom::from_parts("light", &[x]));
        }
        expected.sort();
        assert_eq!(u.atoms(), expected.as_slice());
    }

    #[test]
    fn universe_cap_enforced() {
        let err = ground_with_cap(&three_blocks(), 10).unwrap_err();
        assert_eq!(err, GroundError::UniverseTooLarge { limit: 10 });
    }

    #[test]
    fn self_binding_with_overlapping_effects_excluded() {
        let u = ground(&three_blocks()).unwrap();
        // stack a a would both add and delete (clear a)
        assert!(u.action_id("stack", &["a".into(), "a".into()]).is_none());
        assert!(u.action_id("stack", &["a".into(), "b".into()]).is_some());
        // 3 pick-up + 3 put-down + 6 stack + 6 unstack
        assert_eq!(u.num_actions(), 18);
    }

    #[test]
    fn applicable_matches_brute_force_on_init() {
        let problem = three_blocks();
        let u = ground(&problem).unwrap();
        let apps = applicable(&problem.init, &u);
        // Brute force: check pre ⊆ init over every ground action.
        let brute: Vec<&GroundAction> = u
            .actions()
            .iter()
            .filter(|a| a.pre.is_subset_of(&problem.init))
            .collect();
        assert_eq!(apps, brute);
        let names: Vec<String> = apps.iter().map(|a| a.display_name()).collect();
        assert_eq!(names, vec!["(pick-up a)", "(pick-up b)", "(pick-up c)"]);
    }

    #[test]
    fn empty_state_only_empty_precondition_actions() {
        let problem = three_blocks();
        let u = ground(&problem).unwrap();
        let apps = applicable(&State::new(), &u);
        assert!(apps.is_empty()); // every blocks action has preconditions
    }

    #[test]
    fn full_state_everything_applicable() {
        let problem = three_blocks();
        let u = ground(&problem).unwrap();
        let full = State::from_atoms(u.atoms().iter().cloned());
        let apps = applicable(&full, &u);
        assert_eq!(apps.len(), u.num_actions());
    }

    #[test]
    fn apply_pick_up_from_singleton_table() {
        let domain = Arc::new(parse_domain(BW).unwrap());
        let problem = parse_problem(
            "(define (problem one) (:domain blocks) (:objects a)
             (:init (ontable a) (clear a) (handempty)) (:goal (and)))",
            &domain,
        )
        .unwrap();
        let u = ground(&problem).unwrap();
        let id = u.action_id("pick-up", &["a".into()]).unwrap();
        let next = apply(&problem.init, u.action(id)).unwrap();
        assert_eq!(next, State::from_atoms([GroundAtom::from_parts("holding", &["a"])]));
    }

    #[test]
    fn apply_rejects_missing_preconditions() {
        let problem = three_blocks();
        let u = ground(&problem).unwrap();
        let id = u.action_id("stack", &["a".into(), "b".into()]).unwrap();
        let err = apply(&problem.init, u.action(id)).unwrap_err();
        assert_eq!(err.missing, vec![GroundAtom::from_parts("holding", &["a"])]);
    }

    #[test]
    fn apply_identity_when_effects_empty() {
        let domain = Arc::new(
            parse_domain(
                r#"(define (domain d)
  (:predicates (p ?x))
  (:action noop :parameters (?x) :precondition (p ?x) :effect (and)))"#,
            )
            .unwrap(),
        );
        let problem = parse_problem(
            "(define (problem e) (:domain d) (:objects o) (:init (p o)) (:goal (p o)))",
            &domain,
        )
        .unwrap();
        let u = ground(&problem).unwrap();
        let id = u.action_id("noop", &["o".into()]).unwrap();
        let next = apply(&problem.init, u.action(id)).unwrap();
        assert_eq!(next, problem.init);
    }

    #[test]
    fn frame_property_untouched_atoms_survive() {
        let problem = three_blocks();
        let u = ground(&problem).unwrap();
        let id = u.action_id("pick-up", &["a".into()]).unwrap();
        let action = u.action(id);
        let next = apply(&problem.init, action).unwrap();
        for atom in problem.init.iter() {
            if !action.del.contains(atom) {
                assert!(next.contains(atom), "frame violated for {}", atom);
            }
        }
    }

    #[test]
    fn applicable_apply_consistency() {
        let problem = three_blocks();
        let u = ground(&problem).unwrap();
        let apps = applicable(&problem.init, &u);
        for action in u.actions() {
            let ok = apply(&problem.init, action).is_ok();
            assert_eq!(ok, apps.contains(&action));
        }
    }

    #[test]
    fn bits_round_trip() {
        let problem = three_blocks();
        let u = ground(&problem).unwrap();
        let bits = u.to_bits(&problem.init);
        assert_eq!(u.from_bits(&bits), problem.init);
    }
}
