use planforge::ground::{apply, ground};
use planforge::pddl::{parse_domain, parse_problem, render_problem};
use planforge::planner::{solve, SearchConfig};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

const BW: &str = r#"
(define (domain blocks)
  (:predicates (on ?x ?y) (ontable ?x) (clear ?x) (handempty) (holding ?x))
  (:action pick-up :parameters (?x)
    :precondition (and (clear ?x) (ontable ?x) (handempty))
    :effect (and (not (ontable ?x)) (not (clear ?x)) (not (handempty)) (holding ?x)))
  (:action put-down :parameters (?x)
    :precondition (holding ?x)
    :effect (and (not (holding ?x)) (clear ?x) (handempty) (ontable ?x)))
  (:action stack :parameters (?x ?y)
    :precondition (and (holding ?x) (clear ?y))
    :effect (and (not (holding ?x)) (not (clear ?y)) (clear ?x) (handempty) (on ?x ?y)))
  (:action unstack :parameters (?x ?y)
    :precondition (and (on ?x ?y) (clear ?x) (handempty))
    :effect (and (holding ?x) (clear ?y) (not (clear ?x)) (not (handempty)) (not (on ?x ?y)))))
"#;

fn main() {
    let domain = Arc::new(parse_domain(BW).unwrap());
    let mut equal = 0;
    let mut total = 0;
    let mut worst = 0i64;
    let t0 = std::time::Instant::now();
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(3..=6);
        let names: Vec<String> = (0..n).map(|i| format!("b{}", i)).collect();
        // random towers init
        let mut order = names.clone();
        order.shuffle(&mut rng);
        let mut init_atoms = vec!["(handempty)".to_string()];
        let mut i = 0;
        while i < order.len() {
            let tower_len = rng.gen_range(1..=order.len() - i);
            init_atoms.push(format!("(ontable {})", order[i]));
            for k in 1..tower_len {
                init_atoms.push(format!("(on {} {})", order[i + k], order[i + k - 1]));
            }
            init_atoms.push(format!("(clear {})", order[i + tower_len - 1]));
            i += tower_len;
        }
        let src = format!(
            "(define (problem p) (:domain blocks) (:objects {}) (:init {}) (:goal (and)))",
            names.join(" "), init_atoms.join(" ")
        );
        let base = parse_problem(&src, &domain).unwrap();
        // random non-noop walk for goal
        let u = ground(&base).unwrap();
        let mut state = base.init.clone();
        let k = rng.gen_range(0..=14);
        for _ in 0..k {
            let apps: Vec<_> = planforge::ground::applicable(&state, &u)
                .into_iter().filter(|a| apply(&state, a).unwrap() != state).collect();
            if apps.is_empty() { break; }
            let a = apps[rng.gen_range(0..apps.len())];
            state = apply(&state, a).unwrap();
        }
        let goal_atoms: Vec<String> = state.iter().map(|a| a.to_string()).collect();
        let src = format!(
            "(define (problem p) (:domain blocks) (:objects {}) (:init {}) (:goal (and {})))",
            names.join(" "), init_atoms.join(" "), goal_atoms.join(" ")
        );
        let p = parse_problem(&src, &domain).unwrap();
        let opt = solve(&p, &SearchConfig::bfs()).unwrap();
        let ff = solve(&p, &SearchConfig::ff()).unwrap();
        assert!(ff.len() >= opt.len(), "{}", render_problem(&p));
        total += 1;
        if ff.len() == opt.len() { equal += 1; }
        worst = worst.max(ff.len() as i64 - opt.len() as i64);
    }
    println!("equal {}/{} ({:.1}%), worst gap {}, elapsed {:?}", equal, total,
             100.0 * equal as f64 / total as f64, worst, t0.elapsed());
}
