//! Dataset manifest: one record per generated scene.
//!
//! Paths inside records are relative to the directory holding the manifest,
//! with `/` separators, so datasets can be moved as a whole.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use synthlidar_core::eval::{GridCell, RecordRef};
use synthlidar_core::geom::{Pose, Vec3};

use crate::config::RunConfig;

pub const MANIFEST_FORMAT: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Files {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cloud: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ply: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semantic: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub palette: Option<String>,
}

impl Files {
    pub fn all(&self) -> impl Iterator<Item = &String> {
        [
            &self.cloud,
            &self.labels,
            &self.ply,
            &self.csv,
            &self.image,
            &self.semantic,
            &self.instance,
            &self.palette,
        ]
        .into_iter()
        .flatten()
    }

    pub fn map(&self, f: impl Fn(&str) -> String) -> Files {
        let g = |o: &Option<String>| o.as_deref().map(&f);
        Files {
            cloud: g(&self.cloud),
            labels: g(&self.labels),
            ply: g(&self.ply),
            csv: g(&self.csv),
            image: g(&self.image),
            semantic: g(&self.semantic),
            instance: g(&self.instance),
            palette: g(&self.palette),
        }
    }
}

/// Sensor pose as stored on disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseRecord {
    pub origin: [f64; 3],
    pub forward: [f64; 3],
    pub right: [f64; 3],
    pub up: [f64; 3],
}

impl From<Pose> for PoseRecord {
    fn from(p: Pose) -> Self {
        Self {
            origin: p.origin.to_array(),
            forward: p.forward.to_array(),
            right: p.right.to_array(),
            up: p.up.to_array(),
        }
    }
}

impl From<PoseRecord> for Pose {
    fn from(p: PoseRecord) -> Self {
        Pose {
            origin: Vec3::from(p.origin),
            forward: Vec3::from(p.forward),
            right: Vec3::from(p.right),
            up: Vec3::from(p.up),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub scene_id: String,
    /// Position in the generating sweep (0 for single scans).
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<[u32; 2]>,
    /// Sensor-relative `(x, y)` offset of the swept car.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background_id: Option<u32>,
    /// What was generated: the sweep point or the scene file contents.
    pub scene: serde_json::Value,
    pub seed: u64,
    pub config_hash: String,
    pub points: usize,
    pub sensor: PoseRecord,
    pub files: Files,
}

impl Record {
    pub fn grid_cell(&self) -> Option<GridCell> {
        self.cell.map(|[ix, iy]| GridCell::new(ix, iy))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: u32,
    pub config: RunConfig,
    pub records: Vec<Record>,
}

impl Manifest {
    /// Stores the generation settings only; worker count and output path
    /// never reach the file so they cannot change its bytes.
    pub fn new(config: &RunConfig, records: Vec<Record>) -> Self {
        let mut config = config.clone();
        config.workers = 0;
        config.out = None;
        Self {
            format: MANIFEST_FORMAT,
            config,
            records,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable manifest");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        let m: Manifest = serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))?;
        anyhow::ensure!(m.format == MANIFEST_FORMAT, "{}: unsupported manifest format {}", path.display(), m.format);
        Ok(m)
    }

    /// Sweep records as references for retraining-set selection.
    pub fn record_refs(&self) -> Vec<RecordRef> {
        self.records
            .iter()
            .enumerate()
            .filter_map(|(index, r)| {
                Some(RecordRef {
                    index,
                    cell: r.grid_cell()?,
                    background_id: r.background_id?,
                })
            })
            .collect()
    }

    /// Distinct background ids, ascending.
    pub fn background_ids(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.records.iter().filter_map(|r| r.background_id).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Offset values along each grid axis, indexed by cell coordinate.
    pub fn axis_values(&self) -> (Vec<Option<f64>>, Vec<Option<f64>>) {
        let nx = self.records.iter().filter_map(|r| r.cell).map(|c| c[0] + 1).max().unwrap_or(0);
        let ny = self.records.iter().filter_map(|r| r.cell).map(|c| c[1] + 1).max().unwrap_or(0);
        let mut xs = vec![None; nx as usize];
        let mut ys = vec![None; ny as usize];
        for r in &self.records {
            if let (Some([ix, iy]), Some([x, y])) = (r.cell, r.offset) {
                xs[ix as usize] = Some(x);
                ys[iy as usize] = Some(y);
            }
        }
        (xs, ys)
    }
}

/// Joins a manifest-relative path onto `root`.
pub fn resolve(root: &Path, rel: &str) -> PathBuf {
    rel.split('/').fold(root.to_path_buf(), |p, part| p.join(part))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(cell: Option<[u32; 2]>, bg: Option<u32>) -> Record {
        Record {
            scene_id: "s".into(),
            index: 0,
            cell,
            offset: cell.map(|c| [f64::from(c[0]) - 5.0, f64::from(c[1]) + 5.0]),
            background_id: bg,
            scene: serde_json::json!({}),
            seed: 0,
            config_hash: "h".into(),
            points: 0,
            sensor: Pose::identity().into(),
            files: Files::default(),
        }
    }

    #[test]
    fn manifest_drops_run_only_settings() {
        let mut cfg = RunConfig::default();
        cfg.workers = 6;
        cfg.out = Some("/tmp/x".into());
        let m = Manifest::new(&cfg, vec![]);
        let mut other = cfg.clone();
        other.workers = 1;
        assert_eq!(m.to_json(), Manifest::new(&other, vec![]).to_json());
        assert!(!m.to_json().contains("/tmp/x"));
    }

    #[test]
    fn refs_axes_and_backgrounds() {
        let m = Manifest::new(
            &RunConfig::default(),
            vec![record(Some([1, 0]), Some(4)), record(None, None), record(Some([0, 2]), Some(2))],
        );
        assert_eq!(m.record_refs().len(), 2);
        assert_eq!(m.record_refs()[1].index, 2);
        assert_eq!(m.background_ids(), [2, 4]);
        let (xs, ys) = m.axis_values();
        assert_eq!(xs, [Some(-5.0), Some(-4.0)]);
        assert_eq!(ys, [Some(5.0), None, Some(7.0)]);
    }

    #[test]
    fn json_round_trip() {
        let m = Manifest::new(&RunConfig::default(), vec![record(Some([1, 1]), Some(0))]);
        let back: Manifest = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }
}
