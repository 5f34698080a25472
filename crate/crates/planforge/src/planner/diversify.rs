//! Plan diversification: splices detour segments into a valid base plan.
//! Before each base action (and once at the end), with probability
//! `detour_rate`, a random applicable action is inserted followed by a
//! shortest corrective segment that restores the exact pre-detour state,
//! so the remainder of the base plan stays applicable. Detours that cannot
//! be corrected within four steps are skipped.

use std::collections::{HashMap, VecDeque};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::{DetourSpan, Plan, PlanStep, Provenance, SearchConfig, SolveError};
use crate::ground::{ground, ActionId, GroundUniverse, StateBits};
use crate::pddl::Problem;

const MAX_CORRECTIVE_STEPS: usize = 4;
const CANDIDATE_TRIES: usize = 8;

/// Diversifies `base`, which must be a valid plan for `problem`. With a
/// zero detour rate the base plan is returned unchanged (apart from
/// provenance).
pub fn diversify(
    problem: &Problem,
    base: &Plan,
    config: &SearchConfig,
) -> Result<Plan, SolveError> {
    let universe = ground(problem)?;
    Ok(diversify_grounded(&universe, base, config))
}

pub(crate) fn diversify_grounded(
    universe: &GroundUniverse,
    base: &Plan,
    config: &SearchConfig,
) -> Plan {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut steps: Vec<PlanStep> = Vec::new();
    let mut detours: Vec<DetourSpan> = Vec::new();
    let mut state = universe.init_bits();

    let base_ids: Vec<Option<ActionId>> =
        base.steps.iter().map(|s| universe.action_id(&s.name, &s.args)).collect();

    // Insertion points: before every base action, plus one trailing point
    // so empty and fully-walked plans still receive detours.
    for i in 0..=base.steps.len() {
        if config.detour_rate > 0.0 && rng.gen_bool(config.detour_rate.clamp(0.0, 1.0)) {
            if let Some((detour, corrective)) = find_detour(universe, &state, &mut rng) {
                let span = DetourSpan {
                    start: steps.len(),
                    detour_len: 1,
                    corrective_len: corrective.len(),
                };
                steps.push(step_of(universe, detour));
                for id in corrective {
                    steps.push(step_of(universe, id));
                }
                detours.push(span);
                // state is unchanged: the corrective segment restored it
            }
        }
        if i < base.steps.len() {
            if let Some(id) = base_ids[i] {
                state = universe.apply_bits(&state, id);
            }
            steps.push(base.steps[i].clone());
        }
    }

    Plan { steps, provenance: Provenance::Diversified, detours }
}

fn step_of(universe: &GroundUniverse, id: ActionId) -> PlanStep {
    let a = universe.action(id);
    PlanStep::new(a.schema.clone(), a.binding.clone())
}

/// Picks a random applicable, state-changing action and a shortest path
/// back to `state`. Tries a few candidates before giving up.
fn find_detour(
    universe: &GroundUniverse,
    state: &StateBits,
    rng: &mut ChaCha8Rng,
) -> Option<(ActionId, Vec<ActionId>)> {
    let candidates: Vec<ActionId> = universe
        .applicable_ids(state)
        .into_iter()
        .filter(|&id| universe.apply_bits(state, id) != *state)
        .collect();
    if candidates.is_empty() {
        return None;
    }
    for _ in 0..CANDIDATE_TRIES {
        let pick = candidates[rng.gen_range(0..candidates.len())];
        let detoured = universe.apply_bits(state, pick);
        if let Some(path) = restore_path(universe, &detoured, state) {
            return Some((pick, path));
        }
    }
    None
}

/// Bounded breadth-first search for an action sequence from `from` back to
/// exactly `target`. Expansion follows ascending action ids, so the result
/// is unique for given endpoints.
fn restore_path(
    universe: &GroundUniverse,
    from: &StateBits,
    target: &StateBits,
) -> Option<Vec<ActionId>> {
    let mut states = vec![from.clone()];
    let mut parent: Vec<(usize, ActionId)> = vec![(usize::MAX, 0)];
    let mut depth = vec![0usize];
    let mut seen: HashMap<StateBits, usize> = HashMap::new();
    seen.insert(from.clone(), 0);
    let mut queue = VecDeque::new();
    queue.push_back(0usize);

    while let Some(idx) = queue.pop_front() {
        if depth[idx] >= MAX_CORRECTIVE_STEPS {
            continue;
        }
        let bits = states[idx].clone();
        for action in universe.applicable_ids(&bits) {
            let next = universe.apply_bits(&bits, action);
            if seen.contains_key(&next) {
                continue;
            }
            let next_idx = states.len();
            seen.insert(next.clone(), next_idx);
            parent.push((idx, action));
            depth.push(depth[idx] + 1);
            if next == *target {
                let mut path = Vec::new();
                let mut at = next_idx;
                states.push(next);
                while at != 0 {
                    let (prev, act) = parent[at];
                    path.push(act);
                    at = prev;
                }
                path.reverse();
                return Some(path);
            }
            states.push(next);
            queue.push_back(next_idx);
        }
    }
    None
}
