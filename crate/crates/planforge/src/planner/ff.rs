//! Relaxed-planning-graph heuristic and the forward search built on it:
//! enforced hill-climbing over helpful actions with a greedy best-first
//! fallback. Ties break on the lowest ground-action index so searches are
//! deterministic.

use std::collections::{BinaryHeap, HashMap, VecDeque};

use super::SolveError;
use crate::ground::{ActionId, GroundUniverse, StateBits};
use crate::pddl::State;

/// Outcome of relaxed-plan extraction from one state.
#[derive(Debug, Clone)]
pub struct RelaxedPlan {
    /// Length of the extracted delete-free plan; `None` when the goal is
    /// unreachable even ignoring deletes.
    pub length: Option<u32>,
    /// Applicable actions that add a first-layer subgoal of the relaxed
    /// plan. Empty when the goal is already satisfied or unreachable.
    pub helpful: Vec<ActionId>,
    /// Actions selected by the extraction, ascending.
    pub actions: Vec<ActionId>,
}

const NOT_REACHED: u16 = u16::MAX;

/// Builds the relaxed planning graph from `bits` and extracts a plan.
pub(crate) fn relaxed_plan_bits(universe: &GroundUniverse, bits: &StateBits) -> RelaxedPlan {
    let num_atoms = universe.num_atoms();
    let num_actions = universe.num_actions();

    let mut fact_level = vec![NOT_REACHED; num_atoms];
    for id in bits.ones() {
        fact_level[id as usize] = 0;
    }
    let mut action_level = vec![NOT_REACHED; num_actions];

    let goal_ids: Vec<u32> = universe.goal_bits().ones().collect();
    let goal_reached = |levels: &[u16]| goal_ids.iter().all(|&g| levels[g as usize] != NOT_REACHED);

    let mut layer: u16 = 0;
    while !goal_reached(&fact_level) {
        let mut grew = false;
        for action in 0..num_actions {
            if action_level[action] != NOT_REACHED {
                continue;
            }
            let c = universe.compiled(action as ActionId);
            if c.pre.iter().all(|&p| fact_level[p as usize] <= layer) {
                action_level[action] = layer;
                for &a in &c.add {
                    if fact_level[a as usize] == NOT_REACHED {
                        fact_level[a as usize] = layer + 1;
                        grew = true;
                    }
                }
            }
        }
        if !grew {
            if goal_reached(&fact_level) {
                break;
            }
            return RelaxedPlan { length: None, helpful: Vec::new(), actions: Vec::new() };
        }
        layer += 1;
    }

    let goal_layer = goal_ids.iter().map(|&g| fact_level[g as usize]).max().unwrap_or(0);
    if goal_layer == 0 {
        return RelaxedPlan { length: Some(0), helpful: Vec::new(), actions: Vec::new() };
    }

    // Backward extraction: per-layer subgoal queues, earliest achiever
    // first, lowest action id on ties.
    let mut subgoals: Vec<Vec<u32>> = vec![Vec::new(); goal_layer as usize + 1];
    for &g in &goal_ids {
        let level = fact_level[g as usize];
        if level > 0 {
            subgoals[level as usize].push(g);
        }
    }

    let mut achieved = vec![false; num_atoms];
    let mut selected: Vec<ActionId> = Vec::new();
    let mut count: u32 = 0;
    let mut first_layer_goals: Vec<u32> = Vec::new();

    for t in (1..=goal_layer as usize).rev() {
        let mut goals_here = std::mem::take(&mut subgoals[t]);
        goals_here.sort_unstable();
        if t == 1 {
            first_layer_goals = goals_here.clone();
        }
        for g in goals_here {
            if achieved[g as usize] {
                continue;
            }
            // Earliest achiever of g, by (action level, action id).
            let mut best: Option<(u16, ActionId)> = None;
            for action in 0..num_actions {
                let level = action_level[action];
                if level == NOT_REACHED || level as usize >= t {
                    continue;
                }
                let c = universe.compiled(action as ActionId);
                if c.add.contains(&g) {
                    let key = (level, action as ActionId);
                    if best.map_or(true, |b| key < b) {
                        best = Some(key);
                    }
                }
            }
            let (_, chosen) = best.expect("leveled goal atom must have an achiever");
            count += 1;
            selected.push(chosen);
            let c = universe.compiled(chosen);
            for &a in &c.add {
                achieved[a as usize] = true;
            }
            for &p in &c.pre {
                let level = fact_level[p as usize] as usize;
                if level > 0 && level < t && !achieved[p as usize] {
                    subgoals[level].push(p);
                }
            }
        }
    }

    // First-layer subgoals drive helpful-action pruning: any applicable
    // action adding one of them is helpful.
    let mut helpful: Vec<ActionId> = Vec::new();
    for action in 0..num_actions {
        if action_level[action] != 0 {
            continue;
        }
        let c = universe.compiled(action as ActionId);
        if c.pre.iter().all(|&p| fact_level[p as usize] == 0)
            && c.add.iter().any(|a| first_layer_goals.contains(a))
        {
            helpful.push(action as ActionId);
        }
    }

    selected.sort_unstable();
    selected.dedup();
    RelaxedPlan { length: Some(count), helpful, actions: selected }
}

/// Length of a relaxed (delete-free) plan from `state` to the problem
/// goal, or `None` when the goal is unreachable under the relaxation.
/// Zero exactly when the goal already holds.
pub fn relaxed_plan_heuristic(state: &State, universe: &GroundUniverse) -> Option<u32> {
    let bits = universe.to_bits(state);
    relaxed_plan_bits(universe, &bits).length
}

struct Budget {
    used: usize,
    cap: usize,
}

impl Budget {
    fn spend(&mut self) -> Result<(), SolveError> {
        self.used += 1;
        if self.used > self.cap {
            Err(SolveError::Exhausted)
        } else {
            Ok(())
        }
    }
}

/// Forward search: enforced hill-climbing on the relaxed-plan heuristic
/// restricted to helpful actions, falling back to greedy best-first over
/// all actions when hill-climbing stalls.
pub(crate) fn search(
    universe: &GroundUniverse,
    max_expansions: usize,
) -> Result<Vec<ActionId>, SolveError> {
    let mut budget = Budget { used: 0, cap: max_expansions };
    let init = universe.init_bits();
    let rp = relaxed_plan_bits(universe, &init);
    let mut h = match rp.length {
        // Relaxed unreachability at the root would prove unsolvability,
        // but this mode never claims a proof; callers wanting one run the
        // breadth-first mode.
        None => return Err(SolveError::Exhausted),
        Some(0) => return Ok(Vec::new()),
        Some(h) => h,
    };

    let mut plan: Vec<ActionId> = Vec::new();
    let mut current = init.clone();
    let mut helpful = rp.helpful;

    'ehc: loop {
        // Breadth-first probe from `current` for any state with a strictly
        // better heuristic, expanding helpful actions only.
        let mut states: Vec<StateBits> = vec![current.clone()];
        let mut parent: Vec<(usize, ActionId)> = vec![(usize::MAX, 0)];
        let mut seen: HashMap<StateBits, usize> = HashMap::new();
        seen.insert(current.clone(), 0);
        let mut queue: VecDeque<(usize, Vec<ActionId>)> = VecDeque::new();
        queue.push_back((0, helpful.clone()));

        while let Some((idx, actions)) = queue.pop_front() {
            budget.spend()?;
            let bits = states[idx].clone();
            for action in actions {
                let next = universe.apply_bits(&bits, action);
                if seen.contains_key(&next) {
                    continue;
                }
                let next_idx = states.len();
                seen.insert(next.clone(), next_idx);
                states.push(next.clone());
                parent.push((idx, action));

                let rp = relaxed_plan_bits(universe, &next);
                match rp.length {
                    None => continue, // relaxed dead end, do not requeue
                    Some(next_h) if next_h < h => {
                        let mut segment = Vec::new();
                        let mut at = next_idx;
                        while at != 0 {
                            let (prev, act) = parent[at];
                            segment.push(act);
                            at = prev;
                        }
                        segment.reverse();
                        plan.extend(segment);
                        if next_h == 0 {
                            return Ok(plan);
                        }
                        current = next;
                        h = next_h;
                        helpful = rp.helpful;
                        continue 'ehc;
                    }
                    Some(_) => {
                        queue.push_back((next_idx, rp.helpful));
                    }
                }
            }
        }
        break; // probe space exhausted without improvement
    }

    // Greedy best-first from the initial state over all applicable
    // actions; the partial hill-climbing plan is discarded.
    #[derive(PartialEq, Eq)]
    struct Entry {
        h: u32,
        order: u64,
        idx: usize,
    }
    impl Ord for Entry {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            // BinaryHeap is a max-heap; invert for lowest-h-first.
            other.h.cmp(&self.h).then(other.order.cmp(&self.order))
        }
    }
    impl PartialOrd for Entry {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }

    let mut states: Vec<StateBits> = vec![init.clone()];
    let mut parent: Vec<(usize, ActionId)> = vec![(usize::MAX, 0)];
    let mut seen: HashMap<StateBits, usize> = HashMap::new();
    seen.insert(init.clone(), 0);
    let mut open = BinaryHeap::new();
    let root_h = relaxed_plan_bits(universe, &init).length.unwrap();
    let mut order = 0u64;
    open.push(Entry { h: root_h, order, idx: 0 });

    while let Some(Entry { idx, .. }) = open.pop() {
        budget.spend()?;
        let bits = states[idx].clone();
        for action in universe.applicable_ids(&bits) {
            let next = universe.apply_bits(&bits, action);
            if seen.contains_key(&next) {
                continue;
            }
            let next_idx = states.len();
            seen.insert(next.clone(), next_idx);
            states.push(next.clone());
            parent.push((idx, action));

            match relaxed_plan_bits(universe, &next).length {
                None => continue,
                Some(0) => {
                    let mut out = Vec::new();
                    let mut at = next_idx;
                    while at != 0 {
                        let (prev, act) = parent[at];
                        out.push(act);
                        at = prev;
                    }
                    out.reverse();
                    return Ok(out);
                }
                Some(next_h) => {
                    order += 1;
                    open.push(Entry { h: next_h, order, idx: next_idx });
                }
            }
        }
    }

    // Open list drained: the reachable space offered no goal state, but
    // this mode reports budget exhaustion rather than a proof.
    Err(SolveError::Exhausted)
}
