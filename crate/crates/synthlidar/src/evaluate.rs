//! Evaluation over generated datasets: per-cloud metrics, mIoU maps,
//! blind-spot selection, retraining-set export, improvement reports and the
//! baseline parameter search.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use synthlidar_core::eval::{
    baseline_segment, build_retrain_set, class_metrics, cloud_scores, improvement_report, mean_scores, miou_map, pick_best,
    select_blind_spots, spearman, BaselineParams, ClassMetrics, GridCell, IoUSample, ImprovementReport, MIoUMap, ParamGrid,
    Prediction, RetrainSet, SizeWindow, Split,
};
use synthlidar_core::lidar::PointCloud;
use synthlidar_core::scene::ClassId;

use crate::generate::write_atomic;
use crate::io::export::{cloud_from_exports, read_labels};
use crate::io::manifest::{resolve, Manifest, Record, MANIFEST_FILE};

/// Number of leading backgrounds used for validation by default.
pub const DEFAULT_VALIDATION_BACKGROUNDS: usize = 7;
pub const DEFAULT_TAU: f64 = 0.65;
pub const PREDICTION_EXT: &str = "pred";

pub struct Dataset {
    pub root: PathBuf,
    pub manifest: Manifest,
}

impl Dataset {
    /// `path` is a manifest file or a directory holding `manifest.json`.
    pub fn open(path: &Path) -> anyhow::Result<Self> {
        let file = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
        let manifest = Manifest::load(&file)?;
        let root = file.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { root, manifest })
    }

    fn file(&self, r: &Record, rel: Option<&String>, what: &str) -> anyhow::Result<Vec<u8>> {
        let rel = rel.with_context(|| format!("{}: dataset was generated without {what} files", r.scene_id))?;
        let path = resolve(&self.root, rel);
        std::fs::read(&path).with_context(|| format!("{}: reading {}", r.scene_id, path.display()))
    }

    pub fn truth(&self, r: &Record) -> anyhow::Result<Vec<ClassId>> {
        let labels = read_labels(&self.file(r, r.files.labels.as_ref(), "label")?)?;
        ensure!(
            labels.len() == r.points,
            "{}: label file has {} entries, manifest says {}",
            r.scene_id,
            labels.len(),
            r.points
        );
        Ok(labels.into_iter().map(|(c, _)| c).collect())
    }

    pub fn cloud(&self, r: &Record) -> anyhow::Result<PointCloud> {
        let kitti = self.file(r, r.files.cloud.as_ref(), "cloud")?;
        let labels = self.file(r, r.files.labels.as_ref(), "label")?;
        let config = self.manifest.config.lidar.to_config(r.seed)?;
        let mut cloud = cloud_from_exports(&kitti, &labels, config, r.sensor.into(), &r.scene_id)?;
        cloud.provenance.cell = r.grid_cell();
        cloud.provenance.background_id = r.background_id;
        Ok(cloud)
    }

    /// Records of sweep scenes whose background is in `backgrounds`.
    pub fn records_in(&self, backgrounds: &[u32]) -> Vec<&Record> {
        self.manifest
            .records
            .iter()
            .filter(|r| r.cell.is_some() && r.background_id.is_some_and(|b| backgrounds.contains(&b)))
            .collect()
    }

    pub fn split(&self, n_validation: usize) -> anyhow::Result<Split> {
        let ids = self.manifest.background_ids();
        ensure!(!ids.is_empty(), "manifest has no sweep records with backgrounds");
        Ok(Split::leading(&ids, n_validation)?)
    }
}

/// Where segmentation results come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Predictor {
    /// `<dir>/<scene_id>.pred`, one class id byte per point.
    Files(PathBuf),
    Baseline(BaselineParams),
}

impl Predictor {
    /// `baseline`, `params:<file.json>` or a predictions directory.
    pub fn parse(s: &str) -> anyhow::Result<Self> {
        if s == "baseline" {
            Ok(Predictor::Baseline(BaselineParams::default()))
        } else if let Some(p) = s.strip_prefix("params:") {
            Ok(Predictor::Baseline(ParamsFile::load(Path::new(p))?.to_params()))
        } else {
            Ok(Predictor::Files(PathBuf::from(s)))
        }
    }

    pub fn predict(&self, ds: &Dataset, r: &Record) -> anyhow::Result<Prediction> {
        match self {
            Predictor::Files(dir) => read_prediction(dir, r),
            Predictor::Baseline(params) => Ok(baseline_segment(&ds.cloud(r)?, params)),
        }
    }
}

pub fn prediction_path(dir: &Path, scene_id: &str) -> PathBuf {
    dir.join(format!("{scene_id}.{PREDICTION_EXT}"))
}

pub fn read_prediction(dir: &Path, r: &Record) -> anyhow::Result<Prediction> {
    let path = prediction_path(dir, &r.scene_id);
    let bytes = std::fs::read(&path).with_context(|| format!("{}: reading {}", r.scene_id, path.display()))?;
    Ok(Prediction::from_bytes(&bytes, r.points, &r.scene_id)?)
}

/// One prediction per manifest record, in manifest order.
pub fn read_predictions(dir: &Path, manifest: &Manifest) -> anyhow::Result<Vec<Prediction>> {
    manifest.records.iter().map(|r| read_prediction(dir, r)).collect()
}

pub fn write_prediction(dir: &Path, scene_id: &str, p: &Prediction) -> anyhow::Result<()> {
    write_atomic(&prediction_path(dir, scene_id), &p.to_bytes())
}

/// Car IoU of each record, in the order given.
pub fn car_ious(ds: &Dataset, pred: &Predictor, records: &[&Record]) -> anyhow::Result<Vec<f64>> {
    records
        .par_iter()
        .map(|r| {
            let truth = ds.truth(r)?;
            let p = pred.predict(ds, r)?;
            Ok(class_metrics(&p, &truth, ClassId::CAR)?.iou)
        })
        .collect()
}

/// mIoU map of car IoU over the sweep records of `backgrounds`.
pub fn miou_for(ds: &Dataset, pred: &Predictor, backgrounds: &[u32]) -> anyhow::Result<MIoUMap> {
    let records = ds.records_in(backgrounds);
    ensure!(!records.is_empty(), "no sweep records for backgrounds {backgrounds:?}");
    let ious = car_ious(ds, pred, &records)?;
    let samples: Vec<IoUSample> = records
        .iter()
        .zip(ious)
        .map(|(r, iou)| IoUSample {
            cell: r.grid_cell().expect("filtered"),
            background_id: r.background_id.expect("filtered"),
            iou,
        })
        .collect();
    Ok(miou_map(&samples)?)
}

#[derive(Debug, Clone)]
pub struct CloudReport {
    pub scene_id: String,
    pub cell: Option<[u32; 2]>,
    pub background_id: Option<u32>,
    pub metrics: Vec<ClassMetrics>,
}

pub fn eval_all(ds: &Dataset, pred: &Predictor) -> anyhow::Result<Vec<CloudReport>> {
    ds.manifest
        .records
        .par_iter()
        .map(|r| {
            let truth = ds.truth(r)?;
            let p = pred.predict(ds, r)?;
            let metrics = ClassId::KNOWN
                .iter()
                .map(|&c| class_metrics(&p, &truth, c))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(CloudReport {
                scene_id: r.scene_id.clone(),
                cell: r.cell,
                background_id: r.background_id,
                metrics,
            })
        })
        .collect()
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn metrics_csv(reports: &[CloudReport]) -> String {
    let mut s = String::from("scene_id,i,j,background,class,iou,precision,recall,tp,fp,fn\n");
    for r in reports {
        for m in &r.metrics {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.scene_id,
                opt(r.cell.map(|c| c[0])),
                opt(r.cell.map(|c| c[1])),
                opt(r.background_id),
                m.class_id.name(),
                m.iou,
                m.precision,
                m.recall,
                m.true_pos,
                m.false_pos,
                m.false_neg
            );
        }
    }
    s
}

/// Mean IoU per class over all clouds.
pub fn eval_summary(reports: &[CloudReport]) -> serde_json::Value {
    let mut classes = serde_json::Map::new();
    for (k, c) in ClassId::KNOWN.iter().enumerate() {
        let n = reports.len().max(1) as f64;
        let mean = |f: fn(&ClassMetrics) -> f64| reports.iter().map(|r| f(&r.metrics[k])).sum::<f64>() / n;
        classes.insert(
            c.name().into(),
            serde_json::json!({
                "mean_iou": mean(|m| m.iou),
                "mean_precision": mean(|m| m.precision),
                "mean_recall": mean(|m| m.recall),
            }),
        );
    }
    serde_json::json!({ "clouds": reports.len(), "classes": classes })
}

/// Heat-map CSV: header row of `x` offsets, then one row per `y` offset.
pub fn miou_csv(map: &MIoUMap, manifest: &Manifest) -> String {
    let (xs, ys) = manifest.axis_values();
    let label = |v: &[Option<f64>], k: u32| v.get(k as usize).copied().flatten().map(|x| x.to_string()).unwrap_or_else(|| k.to_string());
    let mut s = String::from("y\\x");
    for ix in 0..map.nx {
        s.push(',');
        s.push_str(&label(&xs, ix));
    }
    s.push('\n');
    for iy in 0..map.ny {
        s.push_str(&label(&ys, iy));
        for ix in 0..map.nx {
            let _ = write!(s, ",{}", map.get(GridCell::new(ix, iy)));
        }
        s.push('\n');
    }
    s
}

/// Spearman correlation between the forward offset of each row and its mean.
pub fn distance_correlation(map: &MIoUMap, manifest: &Manifest) -> Option<f64> {
    let (_, ys) = manifest.axis_values();
    let y: Vec<f64> = (0..map.ny).map(|iy| ys.get(iy as usize).copied().flatten().unwrap_or(f64::from(iy))).collect();
    spearman(&y, &map.row_means())
}

pub fn miou_json(map: &MIoUMap, manifest: &Manifest) -> serde_json::Value {
    let rows: Vec<Vec<f64>> = (0..map.ny)
        .map(|iy| (0..map.nx).map(|ix| map.get(GridCell::new(ix, iy))).collect())
        .collect();
    serde_json::json!({
        "nx": map.nx,
        "ny": map.ny,
        "backgrounds": map.background_ids,
        "mean": map.mean(),
        "row_means": map.row_means(),
        "distance_spearman": distance_correlation(map, manifest),
        "values": rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellEntry {
    pub i: u32,
    pub j: u32,
    pub miou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Selection {
    pub tau: f64,
    pub validation: Vec<u32>,
    pub cells: Vec<CellEntry>,
}

impl Selection {
    pub fn new(map: &MIoUMap, tau: f64) -> anyhow::Result<Self> {
        let cells = select_blind_spots(map, tau)?
            .into_iter()
            .map(|c| CellEntry {
                i: c.ix,
                j: c.iy,
                miou: map.get(c),
            })
            .collect();
        Ok(Self {
            tau,
            validation: map.background_ids.clone(),
            cells,
        })
    }

    pub fn grid_cells(&self) -> Vec<GridCell> {
        self.cells.iter().map(|c| GridCell::new(c.i, c.j)).collect()
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading selection {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing selection {}", path.display()))
    }
}

/// Copies the retraining scans into `dest` and writes their manifest.
pub fn export_retrain(ds: &Dataset, cells: &[GridCell], split: &Split, dest: &Path) -> anyhow::Result<(RetrainSet, Manifest)> {
    let set = build_retrain_set(cells, &ds.manifest.record_refs(), split)?;
    let mut records = Vec::with_capacity(set.len());
    for rr in &set.records {
        let r = &ds.manifest.records[rr.index];
        // Same relative layout as the source dataset.
        let files = r.files.clone();
        for (src, dst) in r.files.all().zip(files.all()) {
            let from = resolve(&ds.root, src);
            let to = resolve(dest, dst);
            if let Some(dir) = to.parent() {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::copy(&from, &to).with_context(|| format!("{}: copying {}", r.scene_id, from.display()))?;
        }
        records.push(Record { files, ..r.clone() });
    }
    let manifest = Manifest {
        records,
        ..ds.manifest.clone()
    };
    write_atomic(&dest.join(MANIFEST_FILE), manifest.to_json().as_bytes())?;
    Ok((set, manifest))
}

pub fn improvement_csv(report: &ImprovementReport) -> String {
    let mut s = String::from("i,j,before,after,delta\n");
    for d in &report.deltas {
        let _ = writeln!(s, "{},{},{},{},{}", d.cell.ix, d.cell.iy, d.before, d.after, d.delta);
    }
    s
}

pub fn improvement(
    ds: &Dataset,
    before: &Predictor,
    after: &Predictor,
    validation: &[u32],
) -> anyhow::Result<(MIoUMap, MIoUMap, ImprovementReport)> {
    let b = miou_for(ds, before, validation)?;
    let a = miou_for(ds, after, validation)?;
    let report = improvement_report(&b, &a)?;
    Ok((b, a, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowFile {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl From<SizeWindow> for WindowFile {
    fn from(w: SizeWindow) -> Self {
        Self { min: w.min, max: w.max }
    }
}

impl From<WindowFile> for SizeWindow {
    fn from(w: WindowFile) -> Self {
        SizeWindow { min: w.min, max: w.max }
    }
}

/// Baseline parameters on disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub ground: f64,
    pub radius: f64,
    pub window: WindowFile,
}

impl ParamsFile {
    pub fn to_params(self) -> BaselineParams {
        BaselineParams {
            ground: self.ground,
            radius: self.radius,
            window: self.window.into(),
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading params {}", path.display()))?;
        let p: ParamsFile = serde_json::from_str(&text).with_context(|| format!("parsing params {}", path.display()))?;
        ensure!(p.radius.is_finite() && p.ground.is_finite(), "{}: parameters must be finite", path.display());
        Ok(p)
    }
}

impl From<BaselineParams> for ParamsFile {
    fn from(p: BaselineParams) -> Self {
        Self {
            ground: p.ground,
            radius: p.radius,
            window: p.window.into(),
        }
    }
}

/// Search space on disk; omitted lists take the default grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridFile {
    pub ground: Vec<f64>,
    pub radius: Vec<f64>,
    pub windows: Vec<WindowFile>,
}

impl Default for GridFile {
    fn default() -> Self {
        Self {
            ground: vec![-1.6, -1.5, -1.4],
            radius: vec![0.1, 0.12, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5],
            windows: vec![BaselineParams::default().window.into()],
        }
    }
}

impl GridFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading grid {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing grid {}", path.display()))
    }

    pub fn to_grid(&self) -> anyhow::Result<ParamGrid> {
        let grid = ParamGrid {
            ground: self.ground.clone(),
            radius: self.radius.clone(),
            windows: self.windows.iter().map(|&w| w.into()).collect(),
        };
        if grid.is_empty() {
            bail!("parameter grid is empty");
        }
        Ok(grid)
    }
}

/// Exhaustive search streaming one cloud at a time; returns every candidate's
/// score and the winner.
pub fn fit_streaming(
    ds: &Dataset,
    records: &[&Record],
    grid: &ParamGrid,
) -> anyhow::Result<(Vec<(BaselineParams, f64)>, BaselineParams, f64)> {
    ensure!(!records.is_empty(), "retraining set is empty");
    ensure!(!grid.is_empty(), "parameter grid is empty");
    let per_cloud: Vec<Vec<f64>> = records
        .par_iter()
        .map(|r| Ok(cloud_scores(grid, &ds.cloud(r)?)))
        .collect::<anyhow::Result<_>>()?;
    let scores = mean_scores(grid, &per_cloud);
    let (best, score) = pick_best(&scores).expect("non-empty grid");
    Ok((scores, best, score))
}

pub fn scores_csv(scores: &[(BaselineParams, f64)]) -> String {
    let mut s = String::from("ground,radius,min_l,min_w,min_h,max_l,max_w,max_h,mean_car_iou\n");
    for (p, v) in scores {
        let k = p.key();
        let _ = writeln!(s, "{},{},{},{},{},{},{},{},{v}", k[0], k[1], k[2], k[3], k[4], k[5], k[6], k[7]);
    }
    s
}

pub fn write_json(path: &Path, v: &impl Serialize) -> anyhow::Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predictor_syntax() {
        assert_eq!(Predictor::parse("baseline").unwrap(), Predictor::Baseline(BaselineParams::default()));
        assert_eq!(Predictor::parse("preds").unwrap(), Predictor::Files("preds".into()));
        assert!(Predictor::parse("params:/nonexistent.json").is_err());
    }

    #[test]
    fn params_file_round_trip() {
        let p = ParamsFile::from(BaselineParams::default());
        let back: ParamsFile = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back.to_params(), BaselineParams::default());
    }

    #[test]
    fn default_grid_contains_default_params() {
        let g = GridFile::default().to_grid().unwrap();
        assert!(g.candidates().contains(&BaselineParams::default()));
        let empty = GridFile {
            radius: vec![],
            ..GridFile::default()
        };
        assert!(empty.to_grid().is_err());
    }

    #[test]
    fn heat_map_csv_layout() {
        let map = MIoUMap::from_rows(&[vec![0.5, 1.0], vec![0.25, 0.75]]);
        let m = Manifest::new(&crate::config::RunConfig::default(), vec![]);
        let csv = miou_csv(&map, &m);
        assert_eq!(csv, "y\\x,0,1\n0,0.5,1\n1,0.25,0.75\n");
    }
}
