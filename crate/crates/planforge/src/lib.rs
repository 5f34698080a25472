pub mod ground;
pub mod llm;
pub mod pddl;
pub mod planner;
pub mod taskgen;
pub mod util;
pub mod validate;
