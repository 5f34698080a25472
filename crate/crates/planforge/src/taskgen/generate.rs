//! Instance generation: goals come from executing a random valid action
//! walk from the initial state and describing the full resulting state, so
//! every emitted problem carries its own witness plan. The true difficulty
//! is then recomputed with the planner and the instance is filed into the
//! matching length bucket, or rejected when that bucket's quota is full.

use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::families::{Bucket, FamilyName, Subfamily, TaskFamily};
use crate::ground::{ground, ActionId, GroundError, GroundUniverse, StateBits};
use crate::pddl::Problem;
use crate::planner::{self, Plan, PlanStep, Provenance, SearchConfig, SearchMode, SolveError};
use crate::util::derive_seed;

/// Request for a batch of instances.
#[derive(Debug, Clone)]
pub struct GenSpec {
    pub family: FamilyName,
    pub count: u32,
    pub seed: u64,
    pub min_objects: u32,
    pub max_objects: u32,
    /// Fixed subfamily for the Blocks World families; `None` cycles
    /// stack/unstack/reorder.
    pub subfamily: Option<Subfamily>,
    /// Bucket override; `None` uses the family defaults.
    pub buckets: Option<Vec<Bucket>>,
}

impl GenSpec {
    pub fn new(family: FamilyName, count: u32, seed: u64) -> Self {
        let defaults = TaskFamily::standard(family);
        GenSpec {
            family,
            count,
            seed,
            min_objects: defaults.default_min_objects,
            max_objects: defaults.default_max_objects,
            subfamily: None,
            buckets: None,
        }
    }
}

/// How the recorded plan length was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LenSource {
    /// Exhaustive search: the length is the true optimum.
    Bfs,
    /// Relaxed-plan heuristic search: an upper bound on the optimum.
    Ff,
    /// The generation walk itself was the shortest plan found.
    Witness,
}

/// One generated problem with its constructive witness and the best plan
/// the solver found.
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub id: String,
    pub family: FamilyName,
    pub subfamily: Option<Subfamily>,
    pub problem: Problem,
    /// The generation walk; always valid and reaches the goal state
    /// exactly.
    pub witness: Plan,
    /// Best plan recomputed by the solver (falls back to the witness).
    pub base_plan: Plan,
    pub plan_len: u32,
    pub len_source: LenSource,
    pub bucket_index: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Error)]
pub enum GenError {
    #[error("generation for {family} exhausted its budget with bucket {bucket} unfilled")]
    Exhausted { family: FamilyName, bucket: usize },
    #[error(transparent)]
    Ground(#[from] GroundError),
}

/// Distributes `count` over the buckets by largest remainder, so realized
/// proportions match the weights as closely as integer counts allow.
pub fn bucket_quotas(count: u32, buckets: &[Bucket]) -> Vec<u32> {
    let total: u64 = buckets.iter().map(|b| b.weight as u64).sum();
    assert!(total > 0, "bucket weights must not all be zero");
    let mut quotas: Vec<u32> = Vec::with_capacity(buckets.len());
    let mut remainders: Vec<(u64, usize)> = Vec::with_capacity(buckets.len());
    let mut assigned: u32 = 0;
    for (i, b) in buckets.iter().enumerate() {
        let numer = count as u64 * b.weight as u64;
        quotas.push((numer / total) as u32);
        assigned += (numer / total) as u32;
        remainders.push((numer % total, i));
    }
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut leftover = count - assigned;
    for (_, i) in remainders {
        if leftover == 0 {
            break;
        }
        quotas[i] += 1;
        leftover -= 1;
    }
    quotas
}

/// Runs a seeded walk of up to `k` state-changing actions, never taking a
/// step that lands back on the immediately previous state.
fn random_walk(
    universe: &GroundUniverse,
    start: &StateBits,
    k: u32,
    rng: &mut ChaCha8Rng,
) -> (Vec<ActionId>, StateBits) {
    let mut state = start.clone();
    let mut previous: Option<StateBits> = None;
    let mut walk = Vec::new();
    for _ in 0..k {
        let mut candidates: Vec<(ActionId, StateBits)> = Vec::new();
        let mut fallback: Vec<(ActionId, StateBits)> = Vec::new();
        for id in universe.applicable_ids(&state) {
            let next = universe.apply_bits(&state, id);
            if next == state {
                continue;
            }
            if previous.as_ref() == Some(&next) {
                fallback.push((id, next));
            } else {
                candidates.push((id, next));
            }
        }
        if candidates.is_empty() {
            candidates = fallback;
        }
        if candidates.is_empty() {
            break;
        }
        let (id, next) = candidates.swap_remove(rng.gen_range(0..candidates.len()));
        walk.push(id);
        previous = Some(std::mem::replace(&mut state, next));
    }
    (walk, state)
}

fn ids_to_plan(universe: &GroundUniverse, ids: &[ActionId], provenance: Provenance) -> Plan {
    let steps: Vec<PlanStep> = ids
        .iter()
        .map(|&id| {
            let a = universe.action(id);
            PlanStep::new(a.schema.clone(), a.binding.clone())
        })
        .collect();
    Plan::new(steps, provenance)
}

/// Recomputes the best known plan for a generated problem: exhaustive
/// search when feasible, heuristic search otherwise, never worse than the
/// witness walk.
fn recompute_plan(
    family: &TaskFamily,
    universe: &GroundUniverse,
    n_objects: u32,
    witness: &Plan,
) -> (Plan, LenSource) {
    let budget = SearchConfig { max_expansions: 200_000, ..SearchConfig::bfs() };
    if family.bfs_feasible(n_objects) {
        match planner::solve_grounded(universe, &budget) {
            Ok(plan) => return (plan, LenSource::Bfs),
            Err(SolveError::Exhausted) => {}
            Err(SolveError::Unsolvable) => {
                unreachable!("walk-generated goals are reachable by construction")
            }
            Err(SolveError::Ground(_)) => unreachable!("universe already built"),
        }
    }
    let ff = SearchConfig { max_expansions: 200_000, mode: SearchMode::HeuristicFf, ..budget };
    match planner::solve_grounded(universe, &ff) {
        Ok(plan) if plan.len() <= witness.len() => (plan, LenSource::Ff),
        _ => (witness.clone(), LenSource::Witness),
    }
}

/// Generates `spec.count` solvable instances with bucketed difficulty.
/// Deterministic for a given spec, including the seed.
pub fn generate(spec: &GenSpec) -> Result<Vec<GeneratedInstance>, GenError> {
    let family = TaskFamily::standard(spec.family);
    generate_with_family(spec, &family)
}

/// [`generate`] against a caller-supplied family definition (for repaired
/// or pruned domains).
pub fn generate_with_family(
    spec: &GenSpec,
    family: &TaskFamily,
) -> Result<Vec<GeneratedInstance>, GenError> {
    let buckets: &[Bucket] = spec.buckets.as_deref().unwrap_or(&family.buckets);
    let quotas = bucket_quotas(spec.count, buckets);
    let mut filled = vec![0u32; buckets.len()];
    let mut out: Vec<GeneratedInstance> = Vec::with_capacity(spec.count as usize);

    let max_attempts = spec.count as u64 * 100 + 200;
    let mut attempt: u64 = 0;
    while (out.len() as u32) < spec.count && attempt < max_attempts {
        let instance_seed = derive_seed(spec.seed, "taskgen", attempt);
        attempt += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(instance_seed);

        // Aim at the most underfilled bucket.
        let target = filled
            .iter()
            .zip(&quotas)
            .enumerate()
            .filter(|(_, (f, q))| *f < *q)
            .max_by_key(|(i, (f, q))| (*q - *f, usize::MAX - i))
            .map(|(i, _)| i)
            .expect("at least one bucket unfilled");
        let bucket = &buckets[target];

        let n_objects = rng.gen_range(spec.min_objects..=spec.max_objects.max(spec.min_objects));
        let subfamily = if family.name.is_blocks() {
            Some(
                spec.subfamily
                    .unwrap_or(Subfamily::CYCLE[out.len() % Subfamily::CYCLE.len()]),
            )
        } else {
            None
        };
        let (objects, init) = family.build_init(&mut rng, n_objects, subfamily);

        let shell = Problem {
            name: String::new(),
            domain: Arc::clone(&family.domain),
            objects,
            init,
            goal: crate::pddl::State::new(),
        };
        let universe = ground(&shell)?;

        // Walk roughly as far as the target difficulty, plus slack for
        // wandering.
        let target_len = if bucket.max_steps <= bucket.min_steps + 1 {
            bucket.min_steps
        } else {
            rng.gen_range(bucket.min_steps..bucket.max_steps)
        };
        let slack = if target_len == 0 { 0 } else { rng.gen_range(0..=target_len / 3 + 1) };
        let (walk, end) = random_walk(&universe, &universe.init_bits(), target_len + slack, &mut rng);

        let mut problem = shell;
        problem.goal = universe.from_bits(&end);
        // Rebuild the universe so goal bits are populated.
        let universe = ground(&problem)?;
        let witness = ids_to_plan(&universe, &walk, Provenance::Witness);

        let (base_plan, len_source) = recompute_plan(family, &universe, n_objects, &witness);
        let plan_len = base_plan.len() as u32;

        let Some(bucket_index) = buckets.iter().position(|b| b.contains(plan_len)) else {
            continue; // length fell outside every bucket
        };
        if filled[bucket_index] >= quotas[bucket_index] {
            continue; // that difficulty is already satisfied
        }

        let index = out.len();
        problem.name = format!("{}-{:05}", family.name, index);
        filled[bucket_index] += 1;
        out.push(GeneratedInstance {
            id: problem.name.clone(),
            family: family.name,
            subfamily,
            problem,
            witness,
            base_plan,
            plan_len,
            len_source,
            bucket_index,
            seed: instance_seed,
        });
    }

    if (out.len() as u32) < spec.count {
        let bucket = filled
            .iter()
            .zip(&quotas)
            .position(|(f, q)| f < q)
            .unwrap_or(0);
        return Err(GenError::Exhausted { family: family.name, bucket });
    }
    Ok(out)
}
