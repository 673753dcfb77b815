use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::{validate_net, Skill, SkillLibrary};
use crate::petri::tree_to_petri;

use super::{io_err, IngestError};

pub const FORMAT_VERSION: &str = "v1";
const INDEX: &str = "index.json";
const SKILLS: &str = "skills";
const LOCK: &str = ".lock";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub skill_id: String,
    pub file: String,
    pub num_cases: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibraryIndex {
    pub version: String,
    pub skills: Vec<IndexEntry>,
}

/// Exclusive writer lock on a library directory, released on drop.
#[derive(Debug)]
pub struct LibraryLock {
    path: PathBuf,
}

impl LibraryLock {
    pub fn acquire(dir: &Path) -> Result<Self, IngestError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let path = dir.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(IngestError::Locked(dir.display().to_string()))
            }
            Err(e) => Err(io_err(&path, e)),
        }
    }
}

impl Drop for LibraryLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// File name under `skills/` for a skill id. Ids that are not plain file
/// names are sanitised and suffixed with a hash of the original id.
pub fn skill_file_name(skill_id: &str) -> String {
    let clean: String = skill_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') {
                c
            } else {
                '_'
            }
        })
        .collect();
    if clean == skill_id && !clean.starts_with('.') {
        format!("{clean}.json")
    } else {
        let h = hex::encode(Sha256::digest(skill_id.as_bytes()));
        format!("{}-{}.json", clean.trim_start_matches('.'), &h[..8])
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IngestError> {
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(path, e)
    })
}

fn write_skill(dir: &Path, skill: &Skill) -> Result<IndexEntry, IngestError> {
    let file = skill_file_name(&skill.skill_id);
    let bytes = serde_json::to_vec_pretty(skill).expect("skill serialises");
    write_atomic(&dir.join(SKILLS).join(&file), &bytes)?;
    Ok(IndexEntry {
        skill_id: skill.skill_id.clone(),
        file: format!("{SKILLS}/{file}"),
        num_cases: skill.provenance.num_cases,
    })
}

fn write_index(dir: &Path, index: &LibraryIndex) -> Result<(), IngestError> {
    write_atomic(
        &dir.join(INDEX),
        &serde_json::to_vec_pretty(index).expect("index serialises"),
    )
}

fn read_index(dir: &Path) -> Result<LibraryIndex, IngestError> {
    let path = dir.join(INDEX);
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let raw: serde_json::Value = serde_json::from_str(&text).map_err(|e| IngestError::Json {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let version = raw.get("version").and_then(|v| v.as_str()).unwrap_or("");
    if version != FORMAT_VERSION {
        return Err(IngestError::Version {
            found: version.to_owned(),
            expected: FORMAT_VERSION.into(),
        });
    }
    serde_json::from_value(raw).map_err(|e| IngestError::Json {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Writes `index.json` and one `skills/<file>.json` per skill. Every file is
/// written to a temporary name and renamed into place, the index last.
pub fn save_library(library: &SkillLibrary, dir: impl AsRef<Path>) -> Result<(), IngestError> {
    let dir = dir.as_ref();
    let _lock = LibraryLock::acquire(dir)?;
    fs::create_dir_all(dir.join(SKILLS)).map_err(|e| io_err(dir, e))?;

    let mut skills = Vec::new();
    for s in library.iter() {
        let entry = write_skill(dir, s)?;

        skills.push(entry);
    }
    write_index(
        dir,
        &LibraryIndex {
            version: FORMAT_VERSION.into(),
            skills,
        },
    )
}

/// Adds one skill to the library at `dir`, creating it if needed.
pub fn append_skill(dir: impl AsRef<Path>, skill: &Skill) -> Result<(), IngestError> {
    let dir = dir.as_ref();
    let _lock = LibraryLock::acquire(dir)?;
    let mut index = if dir.join(INDEX).exists() {
        read_index(dir)?
    } else {
        LibraryIndex {
            version: FORMAT_VERSION.into(),
            skills: Vec::new(),
        }
    };
    if index.skills.iter().any(|e| e.skill_id == skill.skill_id) {
        return Err(IngestError::Conflict(skill.skill_id.clone()));
    }
    fs::create_dir_all(dir.join(SKILLS)).map_err(|e| io_err(dir, e))?;
    index.skills.push(write_skill(dir, skill)?);
    write_index(dir, &index)
}

fn load_skill(dir: &Path, entry: &IndexEntry) -> Result<Skill, IngestError> {
    let path = dir.join(&entry.file);
    if !path.is_file() {
        return Err(IngestError::MissingSkillFile {
            skill_id: entry.skill_id.clone(),
            file: entry.file.clone(),
        });
    }
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let skill: Skill = serde_json::from_str(&text).map_err(|e| IngestError::Json {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    if skill.skill_id != entry.skill_id {
        return Err(IngestError::SkillIdMismatch {
            skill_id: entry.skill_id.clone(),
            file: entry.file.clone(),
            found: skill.skill_id,
        });
    }
    let report = validate_net(&skill.net);
    if !report.is_valid() {
        return Err(IngestError::InvalidNet {
            skill_id: skill.skill_id,
            detail: serde_json::to_string(&report.violations).expect("violations serialise"),
        });
    }
    if tree_to_petri(&skill.tree)? != skill.net {
        return Err(IngestError::Inconsistent(skill.skill_id));
    }
    Ok(skill)
}

pub fn load_library(dir: impl AsRef<Path>) -> Result<SkillLibrary, IngestError> {
    let dir = dir.as_ref();
    let index = read_index(dir)?;
    let mut library = SkillLibrary::new();
    for entry in &index.skills {
        library.insert(load_skill(dir, entry)?)?;
    }
    Ok(library)
}
