//! The six task families: three Blocks World variants plus three
//! pick/place/move household, laboratory, and factory settings. Each
//! family bundles its domain, object vocabulary, difficulty buckets, and
//! an initial-state builder.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::pddl::{parse_domain, Domain, GroundAtom, State};

const BLOCKSWORLD: &str = include_str!("../../assets/domains/blocksworld.pddl");
const BLOCKSWORLD_ALIGN: &str = include_str!("../../assets/domains/blocksworld_align.pddl");
const REORGANIZE_ROOM: &str = include_str!("../../assets/domains/reorganize_room.pddl");
const PREPARE_EXPERIMENT: &str = include_str!("../../assets/domains/prepare_experiment.pddl");
const MACHINE_PARTS: &str = include_str!("../../assets/domains/machine_parts_assembly.pddl");

const HOUSEKEEPING_OBJECTS: &str = include_str!("../../assets/vocab/housekeeping_objects.txt");
const FACTORY_OBJECTS: &str = include_str!("../../assets/vocab/factory_objects.txt");
const LAB_OBJECTS: &str = include_str!("../../assets/vocab/lab_objects.txt");
const HOUSEKEEPING_FURNITURE: &str = include_str!("../../assets/vocab/housekeeping_furniture.txt");
const FACTORY_FURNITURE: &str = include_str!("../../assets/vocab/factory_furniture.txt");
const LAB_FURNITURE: &str = include_str!("../../assets/vocab/lab_furniture.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    BwClassic,
    BwHard,
    BwAlign,
    PrepareExperiment,
    ReorganizeRoom,
    MachinePartsAssembly,
}

impl FamilyName {
    pub const ALL: [FamilyName; 6] = [
        FamilyName::BwClassic,
        FamilyName::BwHard,
        FamilyName::BwAlign,
        FamilyName::PrepareExperiment,
        FamilyName::ReorganizeRoom,
        FamilyName::MachinePartsAssembly,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyName::BwClassic => "bw_classic",
            FamilyName::BwHard => "bw_hard",
            FamilyName::BwAlign => "bw_align",
            FamilyName::PrepareExperiment => "prepare_experiment",
            FamilyName::ReorganizeRoom => "reorganize_room",
            FamilyName::MachinePartsAssembly => "machine_parts_assembly",
        }
    }

    pub fn is_blocks(&self) -> bool {
        matches!(self, FamilyName::BwClassic | FamilyName::BwHard | FamilyName::BwAlign)
    }
}

impl fmt::Display for FamilyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FamilyName::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown family `{}`", s))
    }
}

/// Goal-shape variant within the Blocks World families: `Stack` starts
/// all blocks on the table, `Unstack` starts from one tower, `Reorder`
/// starts from arbitrary towers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subfamily {
    Stack,
    Unstack,
    Reorder,
}

impl Subfamily {
    pub const CYCLE: [Subfamily; 3] = [Subfamily::Stack, Subfamily::Unstack, Subfamily::Reorder];

    pub fn as_str(&self) -> &'static str {
        match self {
            Subfamily::Stack => "stack",
            Subfamily::Unstack => "unstack",
            Subfamily::Reorder => "reorder",
        }
    }
}

impl FromStr for Subfamily {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Subfamily::CYCLE
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown subfamily `{}`", s))
    }
}

/// Difficulty bucket over recomputed plan lengths: the half-open interval
/// `[min_steps, max_steps)` with an integer weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bucket {
    pub min_steps: u32,
    pub max_steps: u32,
    pub weight: u32,
}

impl Bucket {
    pub const fn new(min_steps: u32, max_steps: u32, weight: u32) -> Self {
        Bucket { min_steps, max_steps, weight }
    }

    pub fn contains(&self, len: u32) -> bool {
        len >= self.min_steps && len < self.max_steps
    }
}

/// A task family: domain, vocabulary pools, and difficulty shaping.
#[derive(Debug, Clone)]
pub struct TaskFamily {
    pub name: FamilyName,
    pub domain: Arc<Domain>,
    pub buckets: Vec<Bucket>,
    pub default_min_objects: u32,
    pub default_max_objects: u32,
}

fn vocab(list: &str) -> Vec<&str> {
    let mut seen = std::collections::BTreeSet::new();
    list.lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty())
        .filter(|l| seen.insert(*l))
        .collect()
}

fn cached_domain(cell: &'static OnceLock<Arc<Domain>>, src: &str) -> Arc<Domain> {
    cell.get_or_init(|| Arc::new(parse_domain(src).expect("builtin domain parses")))
        .clone()
}

static BW_DOMAIN: OnceLock<Arc<Domain>> = OnceLock::new();
static BW_ALIGN_DOMAIN: OnceLock<Arc<Domain>> = OnceLock::new();
static ROOM_DOMAIN: OnceLock<Arc<Domain>> = OnceLock::new();
static LAB_DOMAIN: OnceLock<Arc<Domain>> = OnceLock::new();
static FACTORY_DOMAIN: OnceLock<Arc<Domain>> = OnceLock::new();

impl TaskFamily {
    /// The built-in definition of a family.
    pub fn standard(name: FamilyName) -> TaskFamily {
        match name {
            FamilyName::BwClassic => TaskFamily {
                name,
                domain: cached_domain(&BW_DOMAIN, BLOCKSWORLD),
                // Discretized bell over 0..20: optimal lengths cluster in
                // the middle of the range.
                buckets: vec![
                    Bucket::new(0, 5, 1),
                    Bucket::new(5, 10, 3),
                    Bucket::new(10, 15, 3),
                    Bucket::new(15, 21, 1),
                ],
                default_min_objects: 4,
                default_max_objects: 7,
            },
            FamilyName::BwHard => TaskFamily {
                name,
                domain: cached_domain(&BW_DOMAIN, BLOCKSWORLD),
                buckets: vec![
                    Bucket::new(0, 10, 6),
                    Bucket::new(10, 20, 2),
                    Bucket::new(20, 30, 1),
                    Bucket::new(30, 61, 1),
                ],
                default_min_objects: 9,
                default_max_objects: 16,
            },
            FamilyName::BwAlign => TaskFamily {
                name,
                domain: cached_domain(&BW_ALIGN_DOMAIN, BLOCKSWORLD_ALIGN),
                buckets: uniform_buckets(),
                default_min_objects: 8,
                default_max_objects: 14,
            },
            FamilyName::PrepareExperiment => TaskFamily {
                name,
                domain: cached_domain(&LAB_DOMAIN, PREPARE_EXPERIMENT),
                buckets: uniform_buckets(),
                default_min_objects: 8,
                default_max_objects: 13,
            },
            FamilyName::ReorganizeRoom => TaskFamily {
                name,
                domain: cached_domain(&ROOM_DOMAIN, REORGANIZE_ROOM),
                buckets: uniform_buckets(),
                default_min_objects: 8,
                default_max_objects: 13,
            },
            FamilyName::MachinePartsAssembly => TaskFamily {
                name,
                domain: cached_domain(&FACTORY_DOMAIN, MACHINE_PARTS),
                buckets: uniform_buckets(),
                default_min_objects: 8,
                default_max_objects: 13,
            },
        }
    }

    /// Same family shape but a custom (repaired or pruned) domain. The
    /// domain must declare the predicates the init builder emits.
    pub fn with_domain(name: FamilyName, domain: Arc<Domain>) -> Result<TaskFamily, String> {
        let mut family = TaskFamily::standard(name);
        let required: &[&str] = if name.is_blocks() {
            &["on", "ontable", "clear", "handempty", "holding"]
        } else {
            &["at-robot", "on-furniture", "holding", "handempty"]
        };
        for pred in required {
            if domain.predicate(pred).is_none() {
                return Err(format!("domain is missing required predicate `{}`", pred));
            }
        }
        family.domain = domain;
        Ok(family)
    }

    /// Item vocabulary for the non-blocks families.
    pub fn object_vocab(&self) -> Vec<&'static str> {
        match self.name {
            FamilyName::ReorganizeRoom => vocab(HOUSEKEEPING_OBJECTS),
            FamilyName::PrepareExperiment => vocab(LAB_OBJECTS),
            FamilyName::MachinePartsAssembly => vocab(FACTORY_OBJECTS),
            _ => Vec::new(),
        }
    }

    /// Furniture vocabulary for the non-blocks families.
    pub fn furniture_vocab(&self) -> Vec<&'static str> {
        match self.name {
            FamilyName::ReorganizeRoom => vocab(HOUSEKEEPING_FURNITURE),
            FamilyName::PrepareExperiment => vocab(LAB_FURNITURE),
            FamilyName::MachinePartsAssembly => vocab(FACTORY_FURNITURE),
            _ => Vec::new(),
        }
    }

    /// Whether the exhaustive breadth-first recomputation is worth trying
    /// at this object count.
    pub fn bfs_feasible(&self, n_objects: u32) -> bool {
        if self.name.is_blocks() {
            n_objects <= 7
        } else {
            n_objects <= 4
        }
    }

    /// Builds a random initial state. Returns the typed object map and
    /// the init atom set.
    pub(crate) fn build_init(
        &self,
        rng: &mut ChaCha8Rng,
        n_objects: u32,
        subfamily: Option<Subfamily>,
    ) -> (BTreeMap<String, String>, State) {
        if self.name.is_blocks() {
            self.build_blocks_init(rng, n_objects, subfamily.unwrap_or(Subfamily::Reorder))
        } else {
            self.build_rooms_init(rng, n_objects)
        }
    }

    fn build_blocks_init(
        &self,
        rng: &mut ChaCha8Rng,
        n: u32,
        subfamily: Subfamily,
    ) -> (BTreeMap<String, String>, State) {
        let names: Vec<String> = (1..=n).map(|i| format!("b{}", i)).collect();
        let mut order = names.clone();
        order.shuffle(rng);

        let mut init = State::new();
        init.insert(GroundAtom::from_parts("handempty", &[]));

        // Partition the shuffled blocks into towers.
        let mut towers: Vec<Vec<&String>> = Vec::new();
        match subfamily {
            Subfamily::Stack => {
                for b in &order {
                    towers.push(vec![b]);
                }
            }
            Subfamily::Unstack => towers.push(order.iter().collect()),
            Subfamily::Reorder => {
                let mut current = Vec::new();
                for b in &order {
                    current.push(b);
                    if rng.gen_bool(0.45) {
                        towers.push(std::mem::take(&mut current));
                    }
                }
                if !current.is_empty() {
                    towers.push(current);
                }
            }
        }
        for tower in &towers {
            init.insert(GroundAtom::from_parts("ontable", &[tower[0]]));
            for pair in tower.windows(2) {
                init.insert(GroundAtom::new(
                    "on",
                    vec![pair[1].to_string(), pair[0].to_string()],
                ));
            }
            init.insert(GroundAtom::from_parts("clear", &[tower[tower.len() - 1]]));
        }

        if self.name == FamilyName::BwAlign {
            // Static orientation requirements; nothing starts oriented.
            for b in &names {
                let pred = if rng.gen_bool(0.5) { "keyed" } else { "plain" };
                init.insert(GroundAtom::from_parts(pred, &[b]));
            }
        }

        let objects = names.into_iter().map(|n| (n, "object".to_string())).collect();
        (objects, init)
    }

    fn build_rooms_init(
        &self,
        rng: &mut ChaCha8Rng,
        n_items: u32,
    ) -> (BTreeMap<String, String>, State) {
        let mut item_pool = self.object_vocab();
        let mut furniture_pool = self.furniture_vocab();
        item_pool.shuffle(rng);
        furniture_pool.shuffle(rng);

        let n_furniture = rng.gen_range(4..=7).min(furniture_pool.len() as u32) as usize;
        let items: Vec<&str> = item_pool.into_iter().take(n_items as usize).collect();
        let furniture: Vec<&str> = furniture_pool.into_iter().take(n_furniture).collect();

        let mut init = State::new();
        init.insert(GroundAtom::from_parts("handempty", &[]));
        let robot_at = furniture[rng.gen_range(0..furniture.len())];
        init.insert(GroundAtom::from_parts("at-robot", &[robot_at]));
        for item in &items {
            let f = furniture[rng.gen_range(0..furniture.len())];
            init.insert(GroundAtom::from_parts("on-furniture", &[item, f]));
        }

        if self.name == FamilyName::MachinePartsAssembly {
            // A random required assembly order over the sampled parts.
            let mut chain = items.clone();
            chain.shuffle(rng);
            init.insert(GroundAtom::from_parts("first-part", &[chain[0]]));
            for pair in chain.windows(2) {
                init.insert(GroundAtom::from_parts("next-part", &[pair[0], pair[1]]));
            }
        }

        let mut objects: BTreeMap<String, String> = BTreeMap::new();
        for item in items {
            objects.insert(item.to_string(), "item".to_string());
        }
        for f in furniture {
            objects.insert(f.to_string(), "furniture".to_string());
        }
        (objects, init)
    }
}

fn uniform_buckets() -> Vec<Bucket> {
    vec![
        Bucket::new(0, 15, 1),
        Bucket::new(15, 30, 1),
        Bucket::new(30, 45, 1),
        Bucket::new(45, 61, 1),
    ]
}
