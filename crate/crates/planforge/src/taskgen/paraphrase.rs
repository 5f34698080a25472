//! Problem statement paraphrasing. The template path rewords the framing
//! while keeping every init and goal atom verbatim in `(pred args)`
//! notation; the optional model-backed path is accepted only when a
//! round-trip extraction recovers every atom literally, and falls back to
//! the templates otherwise.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use std::collections::BTreeSet;
use std::sync::OnceLock;

use super::families::FamilyName;
use crate::llm::ChatClient;
use crate::pddl::Problem;

/// Surface scaffolds. `{flavor}`, `{objects}`, `{init}`, `{goal}` are
/// substituted; atoms only ever appear through `{init}` and `{goal}`.
const TEMPLATES: [&str; 10] = [
    "{flavor} The objects involved are: {objects}. The current situation is described by the \
     following facts: {init}. Your task is to reach a situation where the following facts all \
     hold: {goal}.",
    "{flavor} You are working with: {objects}. Right now, these facts are true: {init}. Find a \
     sequence of actions after which these facts are true: {goal}.",
    "{flavor} Available objects: {objects}. Initially: {init}. The goal configuration is: \
     {goal}.",
    "{flavor} The scene contains {objects}. The world starts out satisfying {init}. Plan until \
     the world satisfies {goal}.",
    "{flavor} Objects at your disposal: {objects}. The starting facts are {init}. You must \
     bring about the facts {goal}.",
    "{flavor} In this task the objects are {objects}. At the beginning the true facts are: \
     {init}. After your plan, the true facts must include: {goal}.",
    "{flavor} Consider the objects {objects}. The initial state is given by {init}. Produce a \
     plan whose final state satisfies {goal}.",
    "{flavor} Present objects: {objects}. State before acting: {init}. Desired state: {goal}.",
    "{flavor} You may manipulate: {objects}. Everything that currently holds: {init}. \
     Everything that must hold at the end: {goal}.",
    "{flavor} Working set: {objects}. The facts describing the start are {init}, and the facts \
     describing the target are {goal}.",
];

fn flavor(family: FamilyName) -> &'static [&'static str] {
    match family {
        FamilyName::BwClassic | FamilyName::BwHard => &[
            "You control a robot arm rearranging blocks on a table.",
            "A single gripper must restack a set of blocks.",
            "Blocks sit on a table and can be stacked one on another.",
        ],
        FamilyName::BwAlign => &[
            "You control a robot arm stacking blocks; some targets accept a block only after it \
             has been rotated into the right orientation.",
            "A gripper rearranges blocks, rotating them when a target socket demands a keyed \
             orientation.",
        ],
        FamilyName::PrepareExperiment => &[
            "A laboratory robot gathers equipment and sets up an experimental platform.",
            "You direct a lab assistant robot preparing benches for an experiment.",
        ],
        FamilyName::ReorganizeRoom => &[
            "A household robot tidies a room, redistributing items to their designated places.",
            "You direct a home robot collecting and packing household items.",
        ],
        FamilyName::MachinePartsAssembly => &[
            "A factory robot collects machining parts and assembles them in the required order.",
            "You direct a shop-floor robot gathering parts for an ordered assembly.",
        ],
    }
}

/// Seeded template paraphrase: the atoms stay verbatim, only the framing
/// changes.
pub fn template_statement(problem: &Problem, family: FamilyName, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let template = TEMPLATES[rng.gen_range(0..TEMPLATES.len())];
    let flavors = flavor(family);
    let flavor = flavors[rng.gen_range(0..flavors.len())];
    let objects: Vec<&str> = problem.objects.keys().map(|s| s.as_str()).collect();
    template
        .replace("{flavor}", flavor)
        .replace("{objects}", &objects.join(", "))
        .replace("{init}", &problem.init.render_inline())
        .replace("{goal}", &problem.goal.render_inline())
}

fn atom_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\([a-z0-9_-]+(?: [a-z0-9_-]+)*\)").unwrap())
}

/// All `(pred args)` spans appearing literally in a text.
pub fn extract_atom_spans(text: &str) -> BTreeSet<String> {
    atom_regex().find_iter(text).map(|m| m.as_str().to_string()).collect()
}

/// True when every init and goal atom of the problem appears literally.
pub fn statement_preserves_atoms(problem: &Problem, text: &str) -> bool {
    let spans = extract_atom_spans(text);
    problem
        .init
        .iter()
        .chain(problem.goal.iter())
        .all(|atom| spans.contains(&atom.to_string()))
}

const PARAPHRASE_SYSTEM: &str = "You rephrase robot planning problem statements. Keep every \
fact exactly as written, in its (predicate arguments) notation, and change only the \
surrounding wording.";

/// Paraphrases a problem statement. With a client, asks for a reworded
/// statement and verifies by round-trip extraction that every init and
/// goal atom is still literally present; any failure falls back to the
/// seeded template bank, so the operation is total.
pub fn paraphrase_problem(
    problem: &Problem,
    family: FamilyName,
    client: Option<&dyn ChatClient>,
    seed: u64,
) -> String {
    let fallback = template_statement(problem, family, seed);
    let Some(client) = client else {
        return fallback;
    };
    let user = format!(
        "Reword the following planning problem statement. Every fact in parentheses must \
         appear unchanged in your version.\n\n{}",
        fallback
    );
    match client.complete(PARAPHRASE_SYSTEM, &user) {
        Ok(text) if statement_preserves_atoms(problem, &text) => text,
        _ => fallback,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ScriptedClient;
    use crate::taskgen::{generate, GenSpec};

    fn sample_problem() -> Problem {
        let spec = GenSpec { count: 1, ..GenSpec::new(FamilyName::BwClassic, 1, 77) };
        generate(&spec).unwrap().remove(0).problem
    }

    #[test]
    fn template_statement_is_deterministic() {
        let p = sample_problem();
        let a = template_statement(&p, FamilyName::BwClassic, 5);
        let b = template_statement(&p, FamilyName::BwClassic, 5);
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_vary_surface_not_atoms() {
        let p = sample_problem();
        let a = template_statement(&p, FamilyName::BwClassic, 0);
        let b = template_statement(&p, FamilyName::BwClassic, 1);
        assert_ne!(a, b);
        assert!(statement_preserves_atoms(&p, &a));
        assert!(statement_preserves_atoms(&p, &b));
    }

    #[test]
    fn llm_paraphrase_dropping_an_atom_falls_back() {
        let p = sample_problem();
        let client = ScriptedClient::new(["I moved some blocks around.".to_string()]);
        let text = paraphrase_problem(&p, FamilyName::BwClassic, Some(&client), 9);
        assert_eq!(text, template_statement(&p, FamilyName::BwClassic, 9));
    }

    #[test]
    fn llm_paraphrase_preserving_atoms_is_accepted() {
        let p = sample_problem();
        let mut good = String::from("A creative rewording! Facts now: ");
        for atom in p.init.iter().chain(p.goal.iter()) {
            good.push_str(&atom.to_string());
            good.push(' ');
        }
        let client = ScriptedClient::new([good.clone()]);
        let text = paraphrase_problem(&p, FamilyName::BwClassic, Some(&client), 9);
        assert_eq!(text, good);
    }
}
