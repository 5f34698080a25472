//! Breadth-first search over the ground state graph. Complete and optimal:
//! either returns a minimum-length action sequence, proves the goal
//! unreachable by exhausting the reachable space, or gives up when the
//! expansion budget runs out.

use std::collections::{HashMap, VecDeque};

use super::SolveError;
use crate::ground::{ActionId, GroundUniverse, StateBits};

pub(crate) fn search(
    universe: &GroundUniverse,
    max_expansions: usize,
) -> Result<Vec<ActionId>, SolveError> {
    let init = universe.init_bits();
    if universe.goal_satisfied_bits(&init) {
        return Ok(Vec::new());
    }

    // Arena of discovered states; parents index into it.
    let mut states: Vec<StateBits> = vec![init.clone()];
    let mut parent: Vec<(usize, ActionId)> = vec![(usize::MAX, 0)];
    let mut seen: HashMap<StateBits, usize> = HashMap::new();
    seen.insert(init, 0);

    let mut queue: VecDeque<usize> = VecDeque::new();
    queue.push_back(0);
    let mut expansions = 0usize;

    while let Some(cur) = queue.pop_front() {
        expansions += 1;
        if expansions > max_expansions {
            return Err(SolveError::Exhausted);
        }
        let bits = states[cur].clone();
        for action in universe.applicable_ids(&bits) {
            let next = universe.apply_bits(&bits, action);
            if seen.contains_key(&next) {
                continue;
            }
            let idx = states.len();
            seen.insert(next.clone(), idx);
            parent.push((cur, action));
            if universe.goal_satisfied_bits(&next) {
                let mut plan = Vec::new();
                let mut at = idx;
                states.push(next);
                while at != 0 {
                    let (prev, act) = parent[at];
                    plan.push(act);
                    at = prev;
                }
                plan.reverse();
                return Ok(plan);
            }
            states.push(next);
            queue.push_back(idx);
        }
    }

    Err(SolveError::Unsolvable)
}
