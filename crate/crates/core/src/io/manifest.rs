//! Corpus manifest: subjects, clips, labels and split assignment.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::containers::{read_waveform, FrameContainer};
use crate::error::{Error, Result};
use crate::rng;

pub const MANIFEST_VERSION: u32 = 1;
const SPLIT_STREAM: u64 = 0x7370_6c74;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowLabel {
    pub window: usize,
    pub hr_bpm: f64,
    pub spo2_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipEntry {
    pub clip_id: String,
    /// Relative to the manifest directory.
    pub frames_path: String,
    pub ppg_path: String,
    pub labels: Vec<WindowLabel>,
    pub split: Split,
    /// Whether the reference PPG survived cleaning.
    pub retained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectEntry {
    pub subject_id: String,
    pub clips: Vec<ClipEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub subjects: Vec<SubjectEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.70,
            val: 0.15,
            test: 0.15,
        }
    }
}

/// Assigns whole subjects to splits. Subjects are shuffled by `seed`, then
/// cut by cumulative fraction with largest-remainder rounding.
pub fn assign_splits(subject_ids: &[String], fractions: &SplitFractions, seed: u64) -> Result<BTreeMap<String, Split>> {
    let f = [fractions.train, fractions.val, fractions.test];
    let total: f64 = f.iter().sum();
    if f.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split fractions {f:?} must be non-negative and sum to 1")));
    }
    let n = subject_ids.len();
    let exact: Vec<f64> = f.iter().map(|v| v * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|v| v.floor() as usize).collect();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    for &i in order.iter().cycle().take(n - counts.iter().sum::<usize>()) {
        counts[i] += 1;
    }
    let mut ids: Vec<&String> = subject_ids.iter().collect();
    ids.sort();
    ids.shuffle(&mut rng::stream(seed, &[SPLIT_STREAM]));
    let splits = [Split::Train, Split::Val, Split::Test];
    let mut out = BTreeMap::new();
    let mut it = ids.into_iter();
    for (split, count) in splits.iter().zip(counts) {
        for id in it.by_ref().take(count) {
            out.insert(id.clone(), *split);
        }
    }
    Ok(out)
}

fn violation(rule: &'static str, detail: impl Into<String>) -> Error {
    Error::Manifest {
        rule,
        detail: detail.into(),
    }
}

impl Manifest {
    /// Checks the structural invariants. Rules: `version`,
    /// `duplicate-subject`, `duplicate-clip-id`, `split-leakage`,
    /// `empty-labels`, `duplicate-window`.
    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(violation("version", format!("unsupported manifest version {}", self.version)));
        }
        let mut subjects = HashSet::new();
        let mut clips = HashSet::new();
        for s in &self.subjects {
            if !subjects.insert(&s.subject_id) {
                return Err(violation("duplicate-subject", &s.subject_id));
            }
            let splits: HashSet<Split> = s.clips.iter().map(|c| c.split).collect();
            if splits.len() > 1 {
                return Err(violation(
                    "split-leakage",
                    format!("subject {} appears in {:?}", s.subject_id, sorted(splits)),
                ));
            }
            for c in &s.clips {
                if !clips.insert(&c.clip_id) {
                    return Err(violation("duplicate-clip-id", &c.clip_id));
                }
                if c.retained && c.labels.is_empty() {
                    return Err(violation("empty-labels", format!("retained clip {} has no labels", c.clip_id)));
                }
                let mut windows = HashSet::new();
                if let Some(l) = c.labels.iter().find(|l| !windows.insert(l.window)) {
                    return Err(violation("duplicate-window", format!("clip {} window {}", c.clip_id, l.window)));
                }
            }
        }
        Ok(())
    }

    /// [`Manifest::validate`] plus referential integrity against the files
    /// under `root`. Rules: `missing-file`, `unreadable-container`, and
    /// `ppg-clean-integrity` (a retained clip must have usable reference
    /// samples and its frame container must cover every labelled window).
    pub fn validate_files(&self, root: &Path) -> Result<()> {
        self.validate()?;
        for c in self.clips() {
            let frames = root.join(&c.frames_path);
            let ppg = root.join(&c.ppg_path);
            for p in [&frames, &ppg] {
                if !p.is_file() {
                    return Err(violation("missing-file", format!("{} (clip {})", p.display(), c.clip_id)));
                }
            }
            let fc = FrameContainer::read(&frames)
                .map_err(|e| violation("unreadable-container", format!("{}: {e}", frames.display())))?;
            let w = read_waveform(&ppg)
                .map_err(|e| violation("unreadable-container", format!("{}: {e}", ppg.display())))?;
            if c.retained {
                if w.usable_fraction() == 0.0 {
                    return Err(violation(
                        "ppg-clean-integrity",
                        format!("retained clip {} has no usable reference samples", c.clip_id),
                    ));
                }
                let windows = (fc.t as f64 / fc.fps as f64 / 2.0).floor() as usize;
                if let Some(l) = c.labels.iter().find(|l| l.window >= windows) {
                    return Err(violation(
                        "ppg-clean-integrity",
                        format!("clip {} labels window {} beyond its {windows} windows", c.clip_id, l.window),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn clips(&self) -> impl Iterator<Item = &ClipEntry> {
        self.subjects.iter().flat_map(|s| s.clips.iter())
    }

    /// Retained clips of one split, with their subject ids.
    pub fn split_clips(&self, split: Split) -> Vec<(&str, &ClipEntry)> {
        self.subjects
            .iter()
            .flat_map(|s| s.clips.iter().map(move |c| (s.subject_id.as_str(), c)))
            .filter(|(_, c)| c.split == split && c.retained)
            .collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        std::fs::write(path, s)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let m: Manifest = serde_json::from_slice(&std::fs::read(path)?)?;
        Ok(m)
    }
}

fn sorted(s: HashSet<Split>) -> Vec<Split> {
    let mut v: Vec<Split> = s.into_iter().collect();
    v.sort();
    v
}
