//! On-disk cache of best-known bounds on `R(s, q)`.
//!
//! The store is one JSON file replaced atomically on every save. Lower
//! bounds always carry their witness family, which is re-verified whenever
//! the file is loaded; entries that fail are set aside in a quarantine list
//! together with the reason instead of being dropped.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::{bound_report, Bound, CertificateTable, Provenance};
use crate::constructions::{binary_family, cyclic_family, paper_z15_matrix, ternary_family, Constructed};
use crate::error::{Error, Result};
use crate::search::{Claim, SearchCertificate, SearchStatus};
use crate::zmod::{family_is_covering, CoverTarget, Family};

/// Overrides the store location.
pub const CACHE_ENV: &str = "COVERFAM_CACHE";
pub const DEFAULT_FILE: &str = "coverfam-cache.json";
const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LowerEntry {
    pub value: u64,
    pub witness: Family,
    pub provenance: Provenance,
    /// Free-form description of how the witness was obtained.
    #[serde(default)]
    pub source: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpperEntry {
    pub value: u64,
    pub provenance: Provenance,
    #[serde(default)]
    pub source: String,
    pub timestamp: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreEntry {
    pub s: u32,
    pub q: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<LowerEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<UpperEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quarantined {
    pub entry: StoreEntry,
    pub reason: String,
}

#[derive(Serialize, Deserialize)]
struct StoreFile {
    version: u32,
    entries: Vec<StoreEntry>,
    #[serde(default)]
    quarantine: Vec<Quarantined>,
}

/// What an import changed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MergeOutcome {
    pub lower_improved: bool,
    pub upper_improved: bool,
}

impl MergeOutcome {
    pub fn changed(&self) -> bool {
        self.lower_improved || self.upper_improved
    }
}

fn check_witness(s: u32, q: usize, lower: &LowerEntry) -> std::result::Result<(), String> {
    let w = &lower.witness;
    if w.modulus() != Some(s) || w.q() != q {
        return Err(format!("witness shape does not match cell ({s}, {q})"));
    }
    if w.len() as u64 != lower.value {
        return Err(format!("witness has {} rows but claims {}", w.len(), lower.value));
    }
    let target = CoverTarget::full(s).map_err(|e| e.to_string())?;
    match family_is_covering(w, &target) {
        Ok(r) if r.passed => Ok(()),
        Ok(r) => Err(format!("witness is not covering: {:?}", r.failure)),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Clone, Debug)]
pub struct CertificateStore {
    path: PathBuf,
    entries: BTreeMap<(u32, usize), StoreEntry>,
    quarantine: Vec<Quarantined>,
    warnings: Vec<String>,
}

impl CertificateStore {
    pub fn empty(path: impl Into<PathBuf>) -> Self {
        CertificateStore {
            path: path.into(),
            entries: BTreeMap::new(),
            quarantine: Vec::new(),
            warnings: Vec::new(),
        }
    }

    /// `$COVERFAM_CACHE`, or `coverfam-cache.json` in the working directory.
    pub fn default_path() -> PathBuf {
        std::env::var_os(CACHE_ENV)
            .filter(|v| !v.is_empty())
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_FILE))
    }

    /// Loads the store at `path`; a missing file yields the seed entries.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        match std::fs::read_to_string(&path) {
            Ok(text) => Self::from_json(path, &text),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Self::seeded(path),
            Err(e) => Err(e.into()),
        }
    }

    pub fn open_default() -> Result<Self> {
        Self::open(Self::default_path())
    }

    /// Parses a store, re-verifying every witness.
    pub fn from_json(path: impl Into<PathBuf>, text: &str) -> Result<Self> {
        let file: StoreFile = serde_json::from_str(text)?;
        if file.version != FORMAT_VERSION {
            return Err(Error::input(format!("unsupported store version {}", file.version)));
        }
        let mut store = Self::empty(path);
        store.quarantine = file.quarantine;
        for entry in file.entries {
            let key = (entry.s, entry.q);
            let problem = entry
                .lower
                .as_ref()
                .and_then(|l| check_witness(entry.s, entry.q, l).err())
                .or_else(|| match (&entry.lower, &entry.upper) {
                    (Some(l), Some(u)) if l.value > u.value => {
                        Some(format!("lower {} exceeds upper {}", l.value, u.value))
                    }
                    _ if store.entries.contains_key(&key) => Some("duplicate cell".to_string()),
                    _ => None,
                });
            match problem {
                Some(reason) => {
                    store
                        .warnings
                        .push(format!("quarantined ({}, {}): {reason}", entry.s, entry.q));
                    store.quarantine.push(Quarantined { entry, reason });
                }
                None => {
                    store.entries.insert(key, entry);
                }
            }
        }
        Ok(store)
    }

    pub fn to_json(&self) -> String {
        let file = StoreFile {
            version: FORMAT_VERSION,
            entries: self.entries.values().cloned().collect(),
            quarantine: self.quarantine.clone(),
        };
        serde_json::to_string_pretty(&file).expect("store serialization is infallible")
    }

    /// Writes to a temporary file beside the target, then renames it over.
    pub fn save(&self) -> Result<()> {
        let dir = match self.path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
        tmp.write_all(self.to_json().as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(&self.path).map_err(|e| Error::Io(e.error))?;
        Ok(())
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn quarantine(&self) -> &[Quarantined] {
        &self.quarantine
    }

    pub fn get(&self, s: u32, q: usize) -> Option<&StoreEntry> {
        self.entries.get(&(s, q))
    }

    pub fn entries(&self) -> impl Iterator<Item = &StoreEntry> {
        self.entries.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Lower bounds as a table for the bound calculus.
    pub fn table(&self) -> CertificateTable {
        let mut t = CertificateTable::new();
        for e in self.entries.values() {
            if let Some(l) = &e.lower {
                t.insert_trusted(e.s, e.q, Bound { value: l.value, provenance: l.provenance });
            }
        }
        t
    }

    /// Records a covering family as a lower bound if it beats the stored
    /// one. Rejected families leave the store untouched.
    pub fn merge_lower(
        &mut self,
        witness: Family,
        provenance: Provenance,
        source: &str,
        timestamp: u64,
    ) -> Result<bool> {
        let s = witness
            .modulus()
            .ok_or_else(|| Error::input("store witnesses must be over Z_s"))?;
        let q = witness.q();
        let lower = LowerEntry {
            value: witness.len() as u64,
            witness,
            provenance,
            source: source.to_string(),
            timestamp,
        };
        check_witness(s, q, &lower).map_err(Error::Verification)?;
        if let Some(u) = self.get(s, q).and_then(|e| e.upper.as_ref()) {
            if lower.value > u.value {
                return Err(Error::Verification(format!(
                    "witness of size {} contradicts stored upper bound {} ({})",
                    lower.value, u.value, u.provenance
                )));
            }
        }
        let entry = self.entries.entry((s, q)).or_insert(StoreEntry {
            s,
            q,
            lower: None,
            upper: None,
        });
        if entry.lower.as_ref().is_some_and(|old| old.value >= lower.value) {
            return Ok(false);
        }
        entry.lower = Some(lower);
        Ok(true)
    }

    /// Records an upper bound if it is strictly smaller than the stored one.
    pub fn merge_upper(
        &mut self,
        s: u32,
        q: usize,
        value: u64,
        provenance: Provenance,
        source: &str,
        timestamp: u64,
    ) -> Result<bool> {
        if let Some(l) = self.get(s, q).and_then(|e| e.lower.as_ref()) {
            if value < l.value {
                return Err(Error::Verification(format!(
                    "upper bound {value} is below the stored witness of size {}",
                    l.value
                )));
            }
        }
        let entry = self.entries.entry((s, q)).or_insert(StoreEntry {
            s,
            q,
            lower: None,
            upper: None,
        });
        if entry.upper.as_ref().is_some_and(|old| old.value <= value) {
            return Ok(false);
        }
        entry.upper = Some(UpperEntry {
            value,
            provenance,
            source: source.to_string(),
            timestamp,
        });
        Ok(true)
    }

    /// Imports a search certificate for the full `Z_s` target. A completed
    /// maximum also settles the upper side.
    pub fn import_certificate(&mut self, cert: &SearchCertificate, timestamp: u64) -> Result<MergeOutcome> {
        let s = cert.provenance.s;
        if cert.provenance.target != CoverTarget::full(s)? {
            return Err(Error::input("only full-Z_s certificates bound R(s, q)"));
        }
        if !cert.verify()? {
            return Err(Error::Verification("certificate witness does not re-verify".into()));
        }
        let source = format!("search, {} nodes", cert.nodes_explored);
        let mut out = MergeOutcome {
            lower_improved: self.merge_lower(cert.family.clone(), Provenance::Search, &source, timestamp)?,
            upper_improved: false,
        };
        if let (Claim::Maximum(r), SearchStatus::Complete) = (cert.claim, cert.status) {
            out.upper_improved = self.merge_upper(s, cert.provenance.q, r, Provenance::Search, &source, timestamp)?;
        }
        Ok(out)
    }

    /// Drops quarantined entries and cells that add nothing over the
    /// explicit constructions. Returns how many records were removed.
    pub fn gc(&mut self) -> Result<usize> {
        let mut removed = self.quarantine.len();
        self.quarantine.clear();
        let empty = CertificateTable::new();
        let mut drop = Vec::new();
        for (&(s, q), e) in &self.entries {
            let report = bound_report(s, q, &empty)?;
            let lower_useful = e.lower.as_ref().is_some_and(|l| l.value > report.lower.value);
            let upper_useful = e.upper.as_ref().is_some_and(|u| u.value < report.upper.value);
            if !lower_useful && !upper_useful {
                drop.push((s, q));
            }
        }
        removed += drop.len();
        for k in drop {
            self.entries.remove(&k);
        }
        Ok(removed)
    }

    /// Store at `path` holding the shipped seed entries.
    pub fn seeded(path: impl Into<PathBuf>) -> Result<Self> {
        let mut store = Self::empty(path);
        for c in seed_families()? {
            let provenance = match c.recipe.name {
                crate::constructions::RecipeName::Binary => Provenance::Binary,
                crate::constructions::RecipeName::Cyclic => Provenance::Cyclic,
                crate::constructions::RecipeName::Ternary => Provenance::Ternary,
                _ => Provenance::PaperZ15,
            };
            let source = format!("{:?} {:?}", c.recipe.name, c.recipe.params);
            store.merge_lower(c.family, provenance, &source, 0)?;
        }
        Ok(store)
    }
}

/// Binary and ternary families for `q <= 10`, cyclic families for
/// `2 <= s <= 15`, and the published `Z_15` matrix.
pub fn seed_families() -> Result<Vec<Constructed>> {
    let mut out = Vec::new();
    for q in 1..=10 {
        out.push(binary_family(q)?);
    }
    for q in 2..=10 {
        out.push(ternary_family(q)?);
    }
    for s in 2..=15 {
        out.push(cyclic_family(s)?);
    }
    out.push(paper_z15_matrix());
    Ok(out)
}
