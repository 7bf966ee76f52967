//! Corpus scanning, feature database construction and persistence.
//!
//! A corpus is a directory tree whose image files are grouped into category
//! directories: `<root>/<category>/<name>.ppm`. The persisted index is a JSON
//! document:
//!
//! ```json
//! {
//!   "version": 1,
//!   "phong": null,
//!   "extraction_opts": { "levels": 8, "offset": [1, 0], "edge_threshold": 255.0 },
//!   "normalizer": { "mins": [..15], "maxs": [..15] },
//!   "entries": [ { "path": "buses/00.ppm", "category": "buses", "features": [..15] } ]
//! }
//! ```

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::features::{extract_features, ExtractionOpts, FeatureVector, FEATURE_DIM};
use crate::image_io::read_ppm;
use crate::phong::PhongParams;
use crate::search::{fit_normalizer, Normalizer};

pub const INDEX_VERSION: u64 = 1;

/// File extensions recognized as images (compared case-insensitively).
pub const IMAGE_EXTENSIONS: &[&str] = &["ppm"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    /// Corpus-relative, `/`-separated.
    pub path: String,
    pub category: String,
    pub features: FeatureVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Index {
    pub version: u64,
    pub phong: Option<PhongParams>,
    pub extraction_opts: ExtractionOpts,
    pub normalizer: Normalizer,
    pub entries: Vec<IndexEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusFile {
    pub path: String,
    pub category: String,
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.iter().any(|x| x.eq_ignore_ascii_case(e)))
}

/// Lists every image under `root`, sorted by corpus-relative path. The category
/// is the name of the file's immediate parent directory.
pub fn scan_corpus(root: impl AsRef<Path>) -> Result<Vec<CorpusFile>> {
    let root = root.as_ref();
    std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let root_name = root
        .canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_default();

    let mut files = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into())
        })?;
        if !entry.file_type().is_file() || !is_image(entry.path()) {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(root)
            .expect("walkdir yields paths under root");
        let parts: Vec<String> = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect();
        let category = if parts.len() >= 2 {
            parts[parts.len() - 2].clone()
        } else {
            root_name.clone()
        };
        files.push(CorpusFile {
            path: parts.join("/"),
            category,
        });
    }
    if files.is_empty() {
        return Err(Error::EmptyCorpus(format!(
            "no images found under {}",
            root.display()
        )));
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(files)
}

/// Extracts features for every image under `root` and fits the normalizer.
pub fn build_index(
    root: impl AsRef<Path>,
    phong: Option<&PhongParams>,
    opts: &ExtractionOpts,
) -> Result<Index> {
    let root = root.as_ref();
    opts.validate()?;
    if let Some(p) = phong {
        p.validate()?;
    }
    let files = scan_corpus(root)?;
    // par_iter preserves input order, so entries stay sorted by path.
    let entries = files
        .into_par_iter()
        .map(|f| {
            let full: PathBuf = root.join(&f.path);
            let img = read_ppm(&full)?;
            let features = extract_features(&img, phong, opts).map_err(|e| Error::ImageFile {
                path: full,
                source: Box::new(e),
            })?;
            Ok(IndexEntry {
                path: f.path,
                category: f.category,
                features,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Index::new(phong.copied(), *opts, entries)
}

impl Index {
    pub fn new(
        phong: Option<PhongParams>,
        extraction_opts: ExtractionOpts,
        mut entries: Vec<IndexEntry>,
    ) -> Result<Self> {
        entries.sort_by(|a, b| a.path.cmp(&b.path));
        let raw: Vec<_> = entries.iter().map(|e| e.features).collect();
        let normalizer = fit_normalizer(&raw)?;
        let ix = Self {
            version: INDEX_VERSION,
            phong,
            extraction_opts,
            normalizer,
            entries,
        };
        ix.validate()?;
        Ok(ix)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, path: &str) -> Option<&IndexEntry> {
        self.entries
            .binary_search_by(|e| e.path.as_str().cmp(path))
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Distinct category names, sorted.
    pub fn categories(&self) -> Vec<String> {
        let mut c: Vec<String> = self.entries.iter().map(|e| e.category.clone()).collect();
        c.sort();
        c.dedup();
        c
    }

    fn validate(&self) -> Result<()> {
        if self.version != INDEX_VERSION {
            return Err(Error::IndexVersion {
                found: self.version,
                expected: INDEX_VERSION,
            });
        }
        if self.entries.is_empty() {
            return Err(Error::IndexSchema("index has no entries".into()));
        }
        if let Some(p) = &self.phong {
            p.validate()
                .map_err(|e| Error::IndexSchema(format!("phong: {e}")))?;
        }
        self.extraction_opts
            .validate()
            .map_err(|e| Error::IndexSchema(format!("extraction_opts: {e}")))?;
        for w in self.entries.windows(2) {
            if w[0].path >= w[1].path {
                return Err(Error::IndexSchema(format!(
                    "entries must be sorted with unique paths ({:?} before {:?})",
                    w[0].path, w[1].path
                )));
            }
        }
        for e in &self.entries {
            e.features
                .validate()
                .map_err(|err| Error::IndexSchema(format!("entry {}: {err}", e.path)))?;
        }
        let raw: Vec<_> = self.entries.iter().map(|e| e.features).collect();
        let refit = fit_normalizer(&raw)?;
        for d in 0..FEATURE_DIM {
            if refit.mins[d].to_bits() != self.normalizer.mins[d].to_bits()
                || refit.maxs[d].to_bits() != self.normalizer.maxs[d].to_bits()
            {
                return Err(Error::IndexSchema(format!(
                    "normalizer does not match entry extrema in dimension {d}"
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("index serializes");
        s.push('\n');
        s
    }

    /// Parses and validates a persisted index.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::IndexSchema(e.to_string()))?;
        let version = value
            .get("version")
            .ok_or_else(|| Error::IndexSchema("missing field `version`".into()))?;
        let version = version.as_u64().ok_or_else(|| {
            Error::IndexSchema(format!("version must be an integer, got {version}"))
        })?;
        if version != INDEX_VERSION {
            return Err(Error::IndexVersion {
                found: version,
                expected: INDEX_VERSION,
            });
        }
        let ix: Index =
            serde_json::from_value(value).map_err(|e| Error::IndexSchema(e.to_string()))?;
        ix.validate()?;
        Ok(ix)
    }
}

pub fn save_index(ix: &Index, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, ix.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_index(path: impl AsRef<Path>) -> Result<Index> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Index::from_json(&text)
}
