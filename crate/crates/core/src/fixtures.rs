//! The example corpus: one directory per case holding a source chart, a rule
//! list and the frozen expected output.

use std::fs;
use std::path::{Path, PathBuf};

use crate::diff::{diff, DiffReport};
use crate::rules::{parse_cicero_spec, CiceroSpec};
use crate::transform::compile;
use crate::vis::{canonical_serialize, parse_vis_spec, VisSpec};

pub const SOURCE: &str = "source.vis.json";
pub const RULES: &str = "rules.cicero.json";
pub const GOLDEN: &str = "golden.vis.json";
pub const README: &str = "README";

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureCase {
    pub name: String,
    pub dir: PathBuf,
    /// Behaviour tags from the README `exercises:` line.
    pub exercises: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

fn read(path: &Path) -> Result<String, FixtureError> {
    fs::read_to_string(path).map_err(|source| FixtureError::Io { path: path.to_path_buf(), source })
}

impl FixtureCase {
    pub fn load(dir: &Path) -> Result<Self, FixtureError> {
        let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let readme = read(&dir.join(README))?;
        let exercises = readme
            .lines()
            .find_map(|l| l.strip_prefix("exercises:"))
            .map(|rest| rest.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect())
            .unwrap_or_default();
        Ok(FixtureCase { name, dir: dir.to_path_buf(), exercises })
    }

    pub fn source(&self) -> Result<VisSpec, FixtureError> {
        let path = self.dir.join(SOURCE);
        parse_vis_spec(&read(&path)?).map_err(|e| FixtureError::Parse { path, message: e.to_string() })
    }

    pub fn rules(&self) -> Result<CiceroSpec, FixtureError> {
        let path = self.dir.join(RULES);
        parse_cicero_spec(&read(&path)?).map_err(|e| FixtureError::Parse { path, message: e.to_string() })
    }

    pub fn golden_text(&self) -> Result<String, FixtureError> {
        read(&self.dir.join(GOLDEN))
    }

    /// Compiles the case and serializes the result.
    pub fn compiled_text(&self) -> Result<String, FixtureError> {
        let out = compile(&self.source()?, &self.rules()?)
            .map_err(|e| FixtureError::Parse { path: self.dir.join(RULES), message: e.to_string() })?;
        Ok(canonical_serialize(&out))
    }
}

/// Every case under `root`, sorted by name.
pub fn load_corpus(root: &Path) -> Result<Vec<FixtureCase>, FixtureError> {
    let entries = fs::read_dir(root).map_err(|source| FixtureError::Io { path: root.to_path_buf(), source })?;
    let mut dirs: Vec<PathBuf> = entries.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.join(SOURCE).is_file()).collect();
    dirs.sort();
    dirs.iter().map(|d| FixtureCase::load(d)).collect()
}

#[derive(Debug)]
pub struct FixtureReport {
    pub name: String,
    pub pass: bool,
    /// Golden vs actual, when both parse and they differ.
    pub diff: Option<DiffReport>,
    pub error: Option<String>,
}

/// Compiles a case and compares the bytes with its golden file.
pub fn run_fixture(case: &FixtureCase) -> FixtureReport {
    let fail = |error: String| FixtureReport { name: case.name.clone(), pass: false, diff: None, error: Some(error) };
    let actual = match case.compiled_text() {
        Ok(t) => t,
        Err(e) => return fail(e.to_string()),
    };
    let golden = match case.golden_text() {
        Ok(t) => t,
        Err(e) => return fail(e.to_string()),
    };
    if actual == golden {
        return FixtureReport { name: case.name.clone(), pass: true, diff: None, error: None };
    }
    let d = match (parse_vis_spec(&golden), parse_vis_spec(&actual)) {
        (Ok(g), Ok(a)) => Some(diff(&g, &a)),
        _ => None,
    };
    FixtureReport { name: case.name.clone(), pass: false, diff: d, error: Some("output differs from the golden file".into()) }
}

/// Overwrites the golden file with the current output.
pub fn bless(case: &FixtureCase) -> Result<(), FixtureError> {
    let text = case.compiled_text()?;
    let path = case.dir.join(GOLDEN);
    fs::write(&path, text).map_err(|source| FixtureError::Io { path, source })
}
