//! Command-line front end.
//!
//! Settings resolve in three layers: built-in defaults, then the `--config`
//! file, then individual flags. The output root falls back to
//! `$SYNTHLIDAR_OUT` and then `./synthlidar-out`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use synthlidar_core::eval::GridCell;

use crate::calib::calib_check;
use crate::config::{Formats, RunConfig, OUT_ENV};
use crate::error::{Classify, CmdResult, Failure};
use crate::evaluate::{
    eval_all, eval_summary, export_retrain, fit_streaming, improvement, improvement_csv, metrics_csv, miou_csv, miou_for, miou_json,
    scores_csv, write_json, Dataset, GridFile, ParamsFile, Predictor, Selection, DEFAULT_TAU, DEFAULT_VALIDATION_BACKGROUNDS,
};
use crate::generate::{build_pool, run_jobs, sweep_jobs, write_atomic, Job};
use crate::io::scene_file::SceneFile;
use crate::io::sweep_file::SweepFile;

#[derive(Debug, Parser)]
#[command(name = "synthlidar", version, about = "Synthetic LiDAR scans, camera images and blind-spot evaluation")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration (lidar, camera, seed, workers, out, formats).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output root directory.
    #[arg(long, global = true, env = OUT_ENV)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Comma-separated subset of kitti,labels,ply,csv,images.
    #[arg(long, global = true)]
    pub formats: Option<String>,
    /// LiDAR rows; the vertical resolution becomes fov / (rows − 1).
    #[arg(long, global = true)]
    pub rows: Option<u32>,
    /// LiDAR columns; the horizontal resolution becomes fov / (cols − 1).
    #[arg(long, global = true)]
    pub cols: Option<u32>,
    /// Vertical field of view, degrees.
    #[arg(long, global = true)]
    pub vfov: Option<f64>,
    /// Horizontal field of view, degrees.
    #[arg(long, global = true)]
    pub hfov: Option<f64>,
    /// Downward tilt of the scan pattern, degrees.
    #[arg(long, global = true)]
    pub pitch: Option<f64>,
    #[arg(long, global = true)]
    pub max_range: Option<f64>,
    /// Standard deviation of Gaussian range noise, meters.
    #[arg(long, global = true)]
    pub range_noise: Option<f64>,
    #[arg(long, global = true)]
    pub image_width: Option<u32>,
    #[arg(long, global = true)]
    pub image_height: Option<u32>,
    /// Camera half vertical field of view, degrees.
    #[arg(long, global = true)]
    pub camera_fov: Option<f64>,
    /// Camera near-plane distance, meters.
    #[arg(long, global = true)]
    pub near: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PredictorArgs {
    /// Directory of `<scene_id>.pred` files (one class byte per point).
    #[arg(long, conflicts_with_all = ["baseline", "params"])]
    pub predictions: Option<PathBuf>,
    /// Use the built-in heuristic segmenter with default parameters.
    #[arg(long)]
    pub baseline: bool,
    /// Use the built-in segmenter with parameters from this JSON file.
    #[arg(long, conflicts_with = "baseline")]
    pub params: Option<PathBuf>,
}

impl PredictorArgs {
    fn predictor(&self) -> CmdResult<Predictor> {
        match (&self.predictions, &self.params, self.baseline) {
            (Some(dir), _, _) => Ok(Predictor::Files(dir.clone())),
            (None, Some(p), _) => Predictor::parse(&format!("params:{}", p.display())).usage_err(),
            (None, None, true) => Ok(Predictor::Baseline(Default::default())),
            (None, None, false) => Err(Failure::usage(anyhow::anyhow!("give --predictions DIR, --baseline or --params FILE"))),
        }
    }
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Number of leading background ids used for validation; the rest
    /// form the retraining split.
    #[arg(long, default_value_t = DEFAULT_VALIDATION_BACKGROUNDS)]
    pub validation: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scan and render one scene file.
    Scan {
        scene: PathBuf,
        /// Regenerate even if matching outputs exist.
        #[arg(long)]
        force: bool,
    },
    /// Generate a dataset over a sweep file (default: the 10 × 15 × 15 grid).
    Sweep {
        sweep: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Check the LiDAR-to-pixel calibration; exits 3 on tolerance failure.
    CalibCheck {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Per-cloud IoU, precision and recall for every class.
    Eval {
        manifest: PathBuf,
        #[command(flatten)]
        predictor: PredictorArgs,
    },
    /// Car mIoU map over the validation backgrounds.
    Miou {
        manifest: PathBuf,
        #[command(flatten)]
        predictor: PredictorArgs,
        #[command(flatten)]
        split: SplitArgs,
    },
    /// Cells whose validation mIoU falls below a threshold.
    Select {
        manifest: PathBuf,
        #[command(flatten)]
        predictor: PredictorArgs,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
    },
    /// Copy retraining-split scans at selected cells into a new dataset.
    RetrainExport {
        manifest: PathBuf,
        /// Output of `select`.
        #[arg(long)]
        selection: PathBuf,
        #[command(flatten)]
        split: SplitArgs,
    },
    /// Per-cell mIoU change between two prediction sources on validation.
    Improvement {
        manifest: PathBuf,
        /// `baseline`, `params:<file>` or a predictions directory.
        #[arg(long)]
        before: String,
        #[arg(long)]
        after: String,
        #[command(flatten)]
        split: SplitArgs,
    },
    /// Grid-search baseline parameters on a dataset (usually a retraining export).
    FitBaseline {
        manifest: PathBuf,
        /// JSON search grid `{"ground": [...], "radius": [...], "windows": [{"min", "max"}]}`.
        #[arg(long)]
        grid: Option<PathBuf>,
    },
}

/// Defaults, then the config file, then flags.
pub fn resolve_config(g: &GlobalArgs) -> CmdResult<RunConfig> {
    let mut run = match &g.config {
        Some(p) => RunConfig::load(p).usage_err()?,
        None => RunConfig::default(),
    };
    let l = &mut run.lidar;
    if let Some(v) = g.vfov {
        l.vertical_fov_deg = v;
    }
    if let Some(v) = g.hfov {
        l.horizontal_fov_deg = v;
    }
    if g.rows.is_some() || g.cols.is_some() {
        let rows = g.rows.unwrap_or_else(|| (l.vertical_fov_deg / l.vertical_res_deg).round() as u32 + 1);
        let cols = g.cols.unwrap_or_else(|| (l.horizontal_fov_deg / l.horizontal_res_deg).round() as u32 + 1);
        if rows < 2 || cols < 2 {
            return Err(Failure::usage(anyhow::anyhow!("--rows and --cols must be at least 2")));
        }
        *l = l.clone().with_grid(rows, cols);
    }
    if let Some(v) = g.pitch {
        l.pitch_deg = v;
    }
    if let Some(v) = g.max_range {
        l.max_range = v;
    }
    if let Some(v) = g.range_noise {
        l.range_noise = v;
    }
    let c = &mut run.camera;
    if let Some(v) = g.image_width {
        c.width = v;
    }
    if let Some(v) = g.image_height {
        c.height = v;
    }
    if let Some(v) = g.camera_fov {
        c.half_vfov_deg = v;
    }
    if let Some(v) = g.near {
        c.near = v;
    }
    if let Some(v) = g.seed {
        run.seed = v;
    }
    if let Some(v) = g.workers {
        run.workers = v;
    }
    if let Some(f) = &g.formats {
        run.formats = Formats::parse_list(f).usage_err()?;
    }
    if let Some(o) = &g.out {
        run.out = Some(o.clone());
    }
    run.lidar.to_config(0).usage_err()?;
    run.camera.at_sensor(synthlidar_core::scene::default_sensor_pose()).usage_err()?;
    Ok(run)
}

fn report_dir(run: &RunConfig, name: &str) -> PathBuf {
    run.out_dir().join(name)
}

fn open(manifest: &Path) -> CmdResult<Dataset> {
    Dataset::open(manifest).usage_err()
}

pub fn execute(cli: Cli) -> CmdResult<()> {
    let run = resolve_config(&cli.global)?;
    let pool = build_pool(run.workers).usage_err()?;
    pool.install(|| dispatch(&run, cli.command))
}

fn dispatch(run: &RunConfig, command: Command) -> CmdResult<()> {
    match command {
        Command::Scan { scene, force } => {
            let file = SceneFile::load(&scene).usage_err()?;
            let stem = scene.file_stem().and_then(|s| s.to_str()).unwrap_or("scene");
            let built = file.build(stem).map_err(|e| Failure::usage(e.context(format!("building scene from {}", scene.display()))))?;
            let description = serde_json::to_value(&file).expect("serializable scene");
            let out = run.out_dir();
            let summary = run_jobs(run, &[Job::single(built, description)], &out, !force).data_err()?;
            let r = &summary.manifest.records[0];
            eprintln!(
                "{}: {} points{} -> {}",
                r.scene_id,
                r.points,
                if summary.skipped > 0 { " (up to date)" } else { "" },
                out.display()
            );
            Ok(())
        }
        Command::Sweep { sweep, force } => {
            let file = match &sweep {
                Some(p) => SweepFile::load(p).usage_err()?,
                None => SweepFile::default(),
            };
            let spec = file.to_spec().usage_err()?;
            let jobs = sweep_jobs(&spec).usage_err()?;
            let out = run.out_dir();
            eprintln!("sweep: {} scenes -> {}", jobs.len(), out.display());
            let summary = run_jobs(run, &jobs, &out, !force).data_err()?;
            eprintln!("sweep: {} generated, {} up to date", summary.generated, summary.skipped);
            Ok(())
        }
        Command::CalibCheck { samples } => {
            let report = calib_check(run, samples).usage_err()?;
            write_json(&report_dir(run, "calib").join("report.json"), &report).data_err()?;
            println!("{}", serde_json::to_string_pretty(&report).expect("serializable report"));
            let v = report.violations();
            if v.is_empty() {
                Ok(())
            } else {
                Err(Failure::tolerance(v.join("; ")))
            }
        }
        Command::Eval { manifest, predictor } => {
            let ds = open(&manifest)?;
            let reports = eval_all(&ds, &predictor.predictor()?).data_err()?;
            let dir = report_dir(run, "eval");
            write_atomic(&dir.join("metrics.csv"), metrics_csv(&reports).as_bytes()).data_err()?;
            let summary = eval_summary(&reports);
            write_json(&dir.join("summary.json"), &summary).data_err()?;
            println!("{}", serde_json::to_string_pretty(&summary).expect("serializable"));
            Ok(())
        }
        Command::Miou { manifest, predictor, split } => {
            let ds = open(&manifest)?;
            let s = ds.split(split.validation).usage_err()?;
            let map = miou_for(&ds, &predictor.predictor()?, &s.validation).data_err()?;
            let dir = report_dir(run, "miou");
            write_atomic(&dir.join("miou.csv"), miou_csv(&map, &ds.manifest).as_bytes()).data_err()?;
            let json = miou_json(&map, &ds.manifest);
            write_json(&dir.join("miou.json"), &json).data_err()?;
            println!("mean mIoU {:.4} over {} cells, distance spearman {}", map.mean(), map.values.len(), json["distance_spearman"]);
            Ok(())
        }
        Command::Select {
            manifest,
            predictor,
            split,
            tau,
        } => {
            let ds = open(&manifest)?;
            let s = ds.split(split.validation).usage_err()?;
            let map = miou_for(&ds, &predictor.predictor()?, &s.validation).data_err()?;
            let sel = Selection::new(&map, tau).usage_err()?;
            write_json(&report_dir(run, "select").join("selected.json"), &sel).data_err()?;
            println!("selected {} of {} cells below tau {tau}", sel.cells.len(), map.values.len());
            Ok(())
        }
        Command::RetrainExport { manifest, selection, split } => {
            let ds = open(&manifest)?;
            let sel = Selection::load(&selection).usage_err()?;
            let s = ds.split(split.validation).usage_err()?;
            let cells: Vec<GridCell> = sel.grid_cells();
            let dest = report_dir(run, "retrain");
            let (set, _) = export_retrain(&ds, &cells, &s, &dest).data_err()?;
            println!(
                "retraining set: {} scans ({} cells x {} backgrounds) -> {}",
                set.len(),
                cells.len(),
                s.retrain.len(),
                dest.display()
            );
            Ok(())
        }
        Command::Improvement {
            manifest,
            before,
            after,
            split,
        } => {
            let ds = open(&manifest)?;
            let s = ds.split(split.validation).usage_err()?;
            let before = Predictor::parse(&before).usage_err()?;
            let after = Predictor::parse(&after).usage_err()?;
            let (b, a, report) = improvement(&ds, &before, &after, &s.validation).data_err()?;
            let dir = report_dir(run, "improvement");
            write_atomic(&dir.join("improvement.csv"), improvement_csv(&report).as_bytes()).data_err()?;
            let summary = serde_json::json!({
                "cells": report.deltas.len(),
                "improved": report.improved,
                "degraded": report.degraded,
                "unchanged": report.unchanged,
                "mean_before": b.mean(),
                "mean_after": a.mean(),
            });
            write_json(&dir.join("summary.json"), &summary).data_err()?;
            println!("{}", serde_json::to_string_pretty(&summary).expect("serializable"));
            Ok(())
        }
        Command::FitBaseline { manifest, grid } => {
            let ds = open(&manifest)?;
            let grid = match &grid {
                Some(p) => GridFile::load(p).usage_err()?,
                None => GridFile::default(),
            }
            .to_grid()
            .usage_err()?;
            let records: Vec<_> = ds.manifest.records.iter().collect();
            let (scores, best, score) = fit_streaming(&ds, &records, &grid).data_err()?;
            let dir = report_dir(run, "fit");
            write_atomic(&dir.join("scores.csv"), scores_csv(&scores).as_bytes()).data_err()?;
            write_json(&dir.join("params.json"), &ParamsFile::from(best)).data_err()?;
            println!(
                "best ground {} radius {} mean car IoU {score:.4} over {} clouds -> {}",
                best.ground,
                best.radius,
                records.len(),
                dir.join("params.json").display()
            );
            Ok(())
        }
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.kind.code()
        }
    }
}
