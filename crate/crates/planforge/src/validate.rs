//! Plan validation and the two evaluation metrics: binary success and the
//! progress score (Jaccard similarity between the goal atom set and the
//! atom set after the longest valid prefix). Progress is kept as an exact
//! rational so aggregate tables are byte-reproducible.
//!
//! Invalid actions are data, not errors: execution stops at the first
//! unresolvable or inapplicable action and the metrics work from what was
//! reached.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::ground::{ground, GroundUniverse};
use crate::pddl::{GroundAtom, Problem, State};
use crate::planner::PlanStep;

/// What counts as goal attainment for the success indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalSemantics {
    /// Goal atoms are a subset of the reached state (standard solver
    /// behavior).
    #[default]
    Containment,
    /// Reached state equals the goal exactly; meaningful when goals are
    /// complete state descriptions.
    Equality,
}

/// Metric configuration. The default computes the progress score against
/// the last valid state; the strict flag instead collapses any plan with
/// an invalid action to the empty absorber.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricOptions {
    pub goal_semantics: GoalSemantics,
    pub strict_empty_absorption: bool,
}

/// Why execution stopped before the end of the plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    /// The step did not resolve to any ground action.
    UnknownAction,
    /// The ground action's preconditions were not satisfied.
    PreconditionViolated,
}

/// First failing step of a plan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub step: usize,
    pub action: String,
    pub reason: FailureReason,
    pub missing: Vec<GroundAtom>,
}

/// Result of running a plan prefix from the initial state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixExecution {
    /// Length of the longest executable prefix.
    pub valid_len: usize,
    /// State after that prefix (the initial state when `valid_len` is 0).
    pub state: State,
    pub first_failure: Option<Failure>,
}

/// Executes the longest valid prefix of `steps` from the problem's initial
/// state.
pub fn execute_prefix(problem: &Problem, steps: &[PlanStep]) -> PrefixExecution {
    let universe = ground(problem).expect("problem must be groundable");
    execute_prefix_grounded(problem, &universe, steps)
}

/// [`execute_prefix`] with a pre-built universe.
pub fn execute_prefix_grounded(
    problem: &Problem,
    universe: &GroundUniverse,
    steps: &[PlanStep],
) -> PrefixExecution {
    let mut state = problem.init.clone();
    for (i, step) in steps.iter().enumerate() {
        let Some(id) = universe.action_id(&step.name, &step.args) else {
            return PrefixExecution {
                valid_len: i,
                state,
                first_failure: Some(Failure {
                    step: i,
                    action: step.to_string(),
                    reason: FailureReason::UnknownAction,
                    missing: Vec::new(),
                }),
            };
        };
        match crate::ground::apply(&state, universe.action(id)) {
            Ok(next) => state = next,
            Err(violation) => {
                return PrefixExecution {
                    valid_len: i,
                    state,
                    first_failure: Some(Failure {
                        step: i,
                        action: step.to_string(),
                        reason: FailureReason::PreconditionViolated,
                        missing: violation.missing,
                    }),
                }
            }
        }
    }
    PrefixExecution { valid_len: steps.len(), state, first_failure: None }
}

/// Exact Jaccard similarity of two atom sets. Both empty compares as 1.
pub fn jaccard(a: &State, b: &State) -> Ratio<u64> {
    let inter = a.iter().filter(|atom| b.contains(atom)).count() as u64;
    let union = (a.len() + b.len()) as u64 - inter;
    if union == 0 {
        Ratio::new(1, 1)
    } else {
        Ratio::new(inter, union)
    }
}

/// Full per-plan scoring record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub problem_id: String,
    /// Valid prefix length.
    pub m: usize,
    pub plan_len: usize,
    pub success: bool,
    pub progress_num: u64,
    pub progress_den: u64,
    pub first_failure: Option<Failure>,
    pub goal_semantics: GoalSemantics,
    pub strict_empty_absorption: bool,
    /// True when the metric state collapsed to the empty absorber.
    pub absorbed: bool,
}

impl ValidationReport {
    pub fn progress(&self) -> Ratio<u64> {
        Ratio::new(self.progress_num, self.progress_den)
    }
}

/// Scores one plan against one problem.
pub fn validate_plan(
    problem: &Problem,
    steps: &[PlanStep],
    options: MetricOptions,
) -> ValidationReport {
    let universe = ground(problem).expect("problem must be groundable");
    validate_plan_grounded(problem, &universe, steps, options)
}

/// [`validate_plan`] with a pre-built universe.
pub fn validate_plan_grounded(
    problem: &Problem,
    universe: &GroundUniverse,
    steps: &[PlanStep],
    options: MetricOptions,
) -> ValidationReport {
    let exec = execute_prefix_grounded(problem, universe, steps);
    let whole_plan_valid = exec.valid_len == steps.len();

    let success = whole_plan_valid
        && match options.goal_semantics {
            GoalSemantics::Containment => problem.goal.is_subset_of(&exec.state),
            GoalSemantics::Equality => problem.goal == exec.state,
        };

    // The empty absorber swallows the metric state when the very first
    // action is invalid, or on any invalid action in strict mode.
    let absorbed = !whole_plan_valid && (exec.valid_len == 0 || options.strict_empty_absorption);
    let progress = if absorbed {
        if problem.goal.is_empty() {
            Ratio::new(1, 1)
        } else {
            Ratio::new(0, 1)
        }
    } else {
        jaccard(&problem.goal, &exec.state)
    };

    ValidationReport {
        problem_id: problem.name.clone(),
        m: exec.valid_len,
        plan_len: steps.len(),
        success,
        progress_num: *progress.numer(),
        progress_den: *progress.denom(),
        first_failure: exec.first_failure,
        goal_semantics: options.goal_semantics,
        strict_empty_absorption: options.strict_empty_absorption,
        absorbed,
    }
}

/// Binary success under the given goal semantics.
pub fn success_rate(problem: &Problem, steps: &[PlanStep], options: MetricOptions) -> u8 {
    validate_plan(problem, steps, options).success as u8
}

/// Progress score under the given metric options.
pub fn progress_score(problem: &Problem, steps: &[PlanStep], options: MetricOptions) -> Ratio<u64> {
    validate_plan(problem, steps, options).progress()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_problem};
    use crate::planner::{solve, Plan, SearchConfig};
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
            r#"(define (problem three) (:domain blocks) (:objects a b c)
               (:init (ontable a) (ontable b) (ontable c) (clear a) (clear b) (clear c) (handempty))
               (:goal (and (on a b) (on b c))))"#,
            &domain,
        )
        .unwrap()
    }

    fn steps(text: &str) -> Vec<PlanStep> {
        Plan::parse_steps(text)
    }

    #[test]
    fn ground_truth_plan_executes_fully() {
        let p = three_blocks();
        let plan = solve(&p, &SearchConfig::bfs()).unwrap();
        let exec = execute_prefix(&p, &plan.steps);
        assert_eq!(exec.valid_len, plan.len());
        assert!(p.goal.is_subset_of(&exec.state));
        assert!(exec.first_failure.is_none());
    }

    #[test]
    fn invalid_first_action_gives_m_zero() {
        let p = three_blocks();
        let exec = execute_prefix(&p, &steps("(stack a b)"));
        assert_eq!(exec.valid_len, 0);
        assert_eq!(exec.state, p.init);
        let failure = exec.first_failure.unwrap();
        assert_eq!(failure.step, 0);
        assert_eq!(failure.reason, FailureReason::PreconditionViolated);
        // Zero-prefix plans absorb to the empty marker for metrics.
        let report = validate_plan(&p, &steps("(stack a b)"), MetricOptions::default());
        assert!(report.absorbed);
        assert_eq!(report.progress(), Ratio::new(0, 1));
    }

    #[test]
    fn corrupted_third_step_gives_m_two() {
        let p = three_blocks();
        // Valid: pick-up b; stack b c; then corrupt step 3 of 4.
        let plan = steps("(pick-up b)\n(stack b c)\n(stack a b)\n(stack a b)");
        let exec = execute_prefix(&p, &plan);
        assert_eq!(exec.valid_len, 2);
        assert_eq!(exec.first_failure.as_ref().unwrap().step, 2);
        // Hand-stepped state after two actions.
        let mut expected = State::new();
        for atom in [
            ("on", vec!["b", "c"]),
            ("ontable", vec!["a"]),
            ("ontable", vec!["c"]),
            ("clear", vec!["a"]),
            ("clear", vec!["b"]),
            ("handempty", vec![]),
        ] {
            expected.insert(GroundAtom::new(atom.0, atom.1.iter().map(|s| s.to_string()).collect()));
        }
        assert_eq!(exec.state, expected);
    }

    #[test]
    fn unresolvable_action_counts_as_invalid() {
        let p = three_blocks();
        let exec = execute_prefix(&p, &steps("(pick-up b)\n(teleport b)"));
        assert_eq!(exec.valid_len, 1);
        assert_eq!(exec.first_failure.unwrap().reason, FailureReason::UnknownAction);
    }

    #[test]
    fn success_on_valid_optimal_plan() {
        let p = three_blocks();
        let plan = solve(&p, &SearchConfig::bfs()).unwrap();
        assert_eq!(success_rate(&p, &plan.steps, MetricOptions::default()), 1);
    }

    #[test]
    fn empty_plan_succeeds_when_goal_in_init() {
        let domain = Arc::new(parse_domain(BW).unwrap());
        let p = parse_problem(
            "(define (problem t) (:domain blocks) (:objects a)
             (:init (ontable a) (clear a) (handempty)) (:goal (ontable a)))",
            &domain,
        )
        .unwrap();
        assert_eq!(success_rate(&p, &[], MetricOptions::default()), 1);
    }

    #[test]
    fn valid_plan_to_wrong_state_fails() {
        let p = three_blocks();
        let mut plan = solve(&p, &SearchConfig::bfs()).unwrap().steps;
        plan.pop(); // truncate the last action
        let report = validate_plan(&p, &plan, MetricOptions::default());
        assert_eq!(report.m, plan.len());
        assert!(!report.success);
        let progress = report.progress();
        assert!(progress > Ratio::new(0, 1) && progress < Ratio::new(1, 1));
    }

    #[test]
    fn progress_identity_and_disjoint() {
        let a = State::from_atoms([
            GroundAtom::from_parts("on", &["a", "b"]),
            GroundAtom::from_parts("clear", &["a"]),
        ]);
        assert_eq!(jaccard(&a, &a), Ratio::new(1, 1));
        let b = State::from_atoms([GroundAtom::from_parts("ontable", &["c"])]);
        assert_eq!(jaccard(&a, &b), Ratio::new(0, 1));
        assert_eq!(jaccard(&State::new(), &State::new()), Ratio::new(1, 1));
    }

    #[test]
    fn progress_counts_full_positive_atom_sets() {
        let p = three_blocks();
        // pick-up b; stack b c; pick-up a -> a is held, (on b c) reached.
        let plan = steps("(pick-up b)\n(stack b c)\n(pick-up a)");
        let report = validate_plan(&p, &plan, MetricOptions::default());
        assert_eq!(report.m, 3);
        // State: {on b c, ontable c, clear b, holding a} -> intersection
        // with goal {on a b, on b c} is {on b c}; union has 5 atoms.
        assert_eq!(report.progress(), Ratio::new(1, 5));
    }

    #[test]
    fn strict_absorption_zeroes_any_invalid_plan() {
        let p = three_blocks();
        let plan = steps("(pick-up b)\n(stack b c)\n(stack a b)\n(stack a b)");
        let default = validate_plan(&p, &plan, MetricOptions::default());
        assert!(default.progress() > Ratio::new(0, 1));
        let strict = validate_plan(
            &p,
            &plan,
            MetricOptions { strict_empty_absorption: true, ..Default::default() },
        );
        assert!(strict.absorbed);
        assert_eq!(strict.progress(), Ratio::new(0, 1));
    }

    #[test]
    fn equality_semantics_distinguishes_supersets() {
        let domain = Arc::new(parse_domain(BW).unwrap());
        let p = parse_problem(
            "(define (problem t) (:domain blocks) (:objects a b)
             (:init (ontable a) (ontable b) (clear a) (clear b) (handempty))
             (:goal (ontable a)))",
            &domain,
        )
        .unwrap();
        // Goal is contained in init but init has more atoms.
        assert_eq!(success_rate(&p, &[], MetricOptions::default()), 1);
        let equality = MetricOptions { goal_semantics: GoalSemantics::Equality, ..Default::default() };
        assert_eq!(success_rate(&p, &[], equality), 0);
    }

    #[test]
    fn success_implies_progress_one_under_equality() {
        // With complete-state goals both semantics coincide and progress
        // hits exactly one.
        let domain = Arc::new(parse_domain(BW).unwrap());
        let p = parse_problem(
            "(define (problem t) (:domain blocks) (:objects a b)
             (:init (ontable a) (ontable b) (clear a) (clear b) (handempty))
             (:goal (and (ontable b) (clear b) (holding a))))",
            &domain,
        )
        .unwrap();
        let plan = steps("(pick-up a)");
        let opts = MetricOptions { goal_semantics: GoalSemantics::Equality, ..Default::default() };
        let report = validate_plan(&p, &plan, opts);
        assert!(report.success);
        assert_eq!(report.progress(), Ratio::new(1, 1));
    }

    #[test]
    fn monotone_prefix_extension() {
        let p = three_blocks();
        let full = solve(&p, &SearchConfig::bfs()).unwrap().steps;
        let mut previous_m = 0;
        for k in 0..=full.len() {
            let m = execute_prefix(&p, &full[..k]).valid_len;
            assert!(m >= previous_m);
            previous_m = m;
        }
    }
}
