//! On-disk layout for generated instance sets: per-instance problem,
//! witness plan, and metadata files under a family directory, plus a
//! manifest listing every instance with content digests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::generate::{GeneratedInstance, LenSource};
use crate::pddl::render_problem;
use crate::util::sha256_hex;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub id: String,
    pub family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subfamily: Option<String>,
    pub seed: u64,
    pub bucket_index: usize,
    pub plan_len: u32,
    pub len_source: LenSource,
    pub witness_len: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub family: String,
    pub bucket_index: usize,
    pub plan_len: u32,
    pub problem_path: String,
    pub witness_path: String,
    pub problem_digest: String,
    pub witness_digest: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub instances: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> std::io::Result<DatasetManifest> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }
}

/// Writes `<family>/domain.pddl`, per-instance `<id>.problem.pddl`,
/// `<id>.witness.plan`, `<id>.meta` files, and a `manifest.json` at the
/// root. Returns the manifest.
pub fn write_dataset(
    dir: &Path,
    instances: &[GeneratedInstance],
) -> std::io::Result<DatasetManifest> {
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(instances.len());
    let mut domains_written: std::collections::BTreeSet<String> = Default::default();

    for inst in instances {
        let family_dir: PathBuf = dir.join(inst.family.as_str());
        fs::create_dir_all(&family_dir)?;

        if domains_written.insert(inst.family.as_str().to_string()) {
            let domain_text = crate::pddl::render_domain(&inst.problem.domain);
            fs::write(family_dir.join("domain.pddl"), domain_text)?;
        }

        let problem_text = render_problem(&inst.problem);
        let witness_text = inst.witness.render();
        let problem_path = family_dir.join(format!("{}.problem.pddl", inst.id));
        let witness_path = family_dir.join(format!("{}.witness.plan", inst.id));
        fs::write(&problem_path, &problem_text)?;
        fs::write(&witness_path, &witness_text)?;

        let meta = InstanceMeta {
            id: inst.id.clone(),
            family: inst.family.as_str().to_string(),
            subfamily: inst.subfamily.map(|s| s.as_str().to_string()),
            seed: inst.seed,
            bucket_index: inst.bucket_index,
            plan_len: inst.plan_len,
            len_source: inst.len_source,
            witness_len: inst.witness.len() as u32,
        };
        fs::write(
            family_dir.join(format!("{}.meta", inst.id)),
            serde_json::to_string_pretty(&meta).expect("meta serializes"),
        )?;

        entries.push(ManifestEntry {
            id: inst.id.clone(),
            family: inst.family.as_str().to_string(),
            bucket_index: inst.bucket_index,
            plan_len: inst.plan_len,
            problem_path: format!("{}/{}.problem.pddl", inst.family, inst.id),
            witness_path: format!("{}/{}.witness.plan", inst.family, inst.id),
            problem_digest: sha256_hex(problem_text.as_bytes()),
            witness_digest: sha256_hex(witness_text.as_bytes()),
        });
    }

    let manifest = DatasetManifest { schema_version: 1, instances: entries };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    Ok(manifest)
}
