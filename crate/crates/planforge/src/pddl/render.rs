//! Canonical PDDL rendering. Output is deterministic: identifiers lower
//! case, sections and atoms in lexicographic order, fixed indentation.
//! `parse(render(x))` reproduces `x` exactly.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::types::{ActionSchema, AtomTemplate, Domain, Problem, State};

fn render_params(params: &[super::types::Param]) -> String {
    let mut out = String::new();
    for (i, p) in params.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "?{} - {}", p.name, p.ty).unwrap();
    }
    out
}

fn render_template_set(set: &std::collections::BTreeSet<AtomTemplate>) -> String {
    if set.is_empty() {
        return "(and)".to_string();
    }
    if set.len() == 1 {
        return set.iter().next().unwrap().to_string();
    }
    let mut out = String::from("(and");
    for tmpl in set {
        write!(out, " {}", tmpl).unwrap();
    }
    out.push(')');
    out
}

fn render_effect(action: &ActionSchema) -> String {
    let mut parts: Vec<String> = action.add.iter().map(|t| t.to_string()).collect();
    parts.extend(action.del.iter().map(|t| format!("(not {})", t)));
    if parts.is_empty() {
        return "(and)".to_string();
    }
    if parts.len() == 1 {
        return parts.pop().unwrap();
    }
    format!("(and {})", parts.join(" "))
}

/// Renders a domain in canonical form.
pub fn render_domain(domain: &Domain) -> String {
    let mut out = String::new();
    writeln!(out, "(define (domain {})", domain.name).unwrap();
    writeln!(out, "  (:requirements :strips :typing)").unwrap();

    if !domain.types.is_empty() {
        // Group declared types under their parents for compact output.
        let mut by_parent: BTreeMap<&String, Vec<&String>> = BTreeMap::new();
        for (ty, parent) in domain.types.entries() {
            by_parent.entry(parent).or_default().push(ty);
        }
        let mut line = String::from("  (:types");
        for (parent, tys) in by_parent {
            for ty in tys {
                write!(line, " {}", ty).unwrap();
            }
            write!(line, " - {}", parent).unwrap();
        }
        line.push(')');
        writeln!(out, "{}", line).unwrap();
    }

    writeln!(out, "  (:predicates").unwrap();
    for pred in domain.predicates.values() {
        if pred.params.is_empty() {
            writeln!(out, "    ({})", pred.name).unwrap();
        } else {
            writeln!(out, "    ({} {})", pred.name, render_params(&pred.params)).unwrap();
        }
    }
    writeln!(out, "  )").unwrap();

    for action in domain.actions.values() {
        writeln!(out, "  (:action {}", action.name).unwrap();
        writeln!(out, "    :parameters ({})", render_params(&action.params)).unwrap();
        writeln!(out, "    :precondition {}", render_template_set(&action.pre)).unwrap();
        writeln!(out, "    :effect {}", render_effect(action)).unwrap();
        writeln!(out, "  )").unwrap();
    }
    out.push(')');
    out.push('\n');
    out
}

fn render_state_block(out: &mut String, state: &State) {
    for atom in state.iter() {
        writeln!(out, "    {}", atom).unwrap();
    }
}

/// Renders a problem in canonical form.
pub fn render_problem(problem: &Problem) -> String {
    let mut out = String::new();
    writeln!(out, "(define (problem {})", problem.name).unwrap();
    writeln!(out, "  (:domain {})", problem.domain.name).unwrap();

    if !problem.objects.is_empty() {
        // Group objects by type, types in sorted order.
        let mut by_type: BTreeMap<&String, Vec<&String>> = BTreeMap::new();
        for (obj, ty) in &problem.objects {
            by_type.entry(ty).or_default().push(obj);
        }
        let mut line = String::from("  (:objects");
        for (ty, objs) in by_type {
            for obj in objs {
                write!(line, " {}", obj).unwrap();
            }
            write!(line, " - {}", ty).unwrap();
        }
        line.push(')');
        writeln!(out, "{}", line).unwrap();
    }

    writeln!(out, "  (:init").unwrap();
    render_state_block(&mut out, &problem.init);
    writeln!(out, "  )").unwrap();

    if problem.goal.is_empty() {
        writeln!(out, "  (:goal (and))").unwrap();
    } else if problem.goal.len() == 1 {
        writeln!(out, "  (:goal {})", problem.goal.iter().next().unwrap()).unwrap();
    } else {
        writeln!(out, "  (:goal (and").unwrap();
        render_state_block(&mut out, &problem.goal);
        writeln!(out, "  ))").unwrap();
    }
    out.push(')');
    out.push('\n');
    out
}
