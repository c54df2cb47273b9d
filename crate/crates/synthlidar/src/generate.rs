//! Scene generation: row-parallel scanning and rendering, per-scene export
//! and resumable sweeps.
//!
//! Work is split over a bounded rayon pool, but every result is collected
//! back in index order, so files and manifests never depend on the number of
//! workers.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use anyhow::Context;
use rayon::prelude::*;
use synthlidar_core::camera::{assemble_image, render_row, CameraConfig, RenderedImage};
use synthlidar_core::geom::Pose;
use synthlidar_core::lidar::{generate_ray_grid, LidarConfig, PointCloud, Scanner};
use synthlidar_core::scene::{sweep_points, GridCell, Scene, SweepPoint, SweepSpec};

use crate::config::{config_hash, RunConfig};
use crate::io::export::{csv_text, kitti_bytes, label_bytes, ply_text};
use crate::io::image::{palette_text, pgm16_bytes, ppm_bytes};
use crate::io::manifest::{resolve, Files, Manifest, Record, MANIFEST_FILE};

pub const SCENES_DIR: &str = "scenes";
pub const PALETTE_FILE: &str = "palette.txt";

pub fn build_pool(workers: usize) -> anyhow::Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("starting worker pool")
}

/// Scans row by row in parallel; the result equals a sequential scan.
pub fn parallel_scan(scene: &Scene, config: &LidarConfig, pose: Pose) -> anyhow::Result<PointCloud> {
    let scanner = Scanner::new(scene, config, pose)?;
    let rays = generate_ray_grid(config);
    let rows: Vec<_> = rays
        .par_chunks(config.cols() as usize)
        .map(|row| scanner.cast_all(row))
        .collect();
    Ok(scanner.into_cloud(rows.concat()))
}

pub fn parallel_render(scene: &Scene, cam: &CameraConfig) -> anyhow::Result<RenderedImage> {
    cam.validate()?;
    let rows: Vec<_> = (0..cam.height).into_par_iter().map(|py| render_row(scene, cam, py)).collect();
    Ok(assemble_image(scene, cam, rows))
}

/// How a job obtains its scene.
#[derive(Debug, Clone)]
pub enum JobScene {
    Ready(Scene),
    Sweep(SweepPoint),
}

#[derive(Debug, Clone)]
pub struct Job {
    pub scene_id: String,
    pub index: usize,
    pub cell: Option<GridCell>,
    pub offset: Option<[f64; 2]>,
    pub background_id: Option<u32>,
    /// Generation-relevant description, hashed into the record.
    pub description: serde_json::Value,
    pub source: JobScene,
}

impl Job {
    pub fn single(scene: Scene, description: serde_json::Value) -> Self {
        Self {
            scene_id: scene.name.clone(),
            index: 0,
            cell: None,
            offset: None,
            background_id: None,
            description,
            source: JobScene::Ready(scene),
        }
    }

    pub fn sweep(index: usize, point: SweepPoint) -> Self {
        Self {
            scene_id: sweep_scene_id(index),
            index,
            cell: Some(point.cell),
            offset: Some([point.x, point.y]),
            background_id: Some(point.background_id),
            description: describe_point(&point),
            source: JobScene::Sweep(point),
        }
    }

    fn scene(&self) -> anyhow::Result<Scene> {
        match &self.source {
            JobScene::Ready(s) => Ok(s.clone()),
            JobScene::Sweep(p) => Ok(p.materialize(&Scene::empty(), self.index)?),
        }
    }
}

pub fn sweep_scene_id(index: usize) -> String {
    format!("sweep-{index:05}")
}

pub fn describe_point(p: &SweepPoint) -> serde_json::Value {
    serde_json::json!({
        "model": p.model,
        "x": p.x,
        "y": p.y,
        "yaw": p.yaw,
        "count": p.count,
        "background": p.background_id,
        "color": [p.color.r, p.color.g, p.color.b],
        "weather": p.weather.name(),
        "time": p.time,
    })
}

/// Per-scene noise seed.
pub fn scene_seed(run_seed: u64, index: usize) -> u64 {
    run_seed.wrapping_add(index as u64)
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub record: Record,
    pub skipped: bool,
}

/// Writes through a temporary file so a killed run never leaves a
/// truncated artifact under the final name.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    // Unique per call: workers may race to create the same shared file.
    static NEXT: AtomicU64 = AtomicU64::new(0);
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".{}.part", NEXT.fetch_add(1, Ordering::Relaxed)));
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

fn meta_path(out: &Path, scene_id: &str) -> PathBuf {
    out.join(SCENES_DIR).join(format!("{scene_id}.meta.json"))
}

/// A finished scene: its sidecar matches `hash` and every listed file exists.
fn completed(out: &Path, scene_id: &str, hash: &str) -> Option<Record> {
    let text = std::fs::read_to_string(meta_path(out, scene_id)).ok()?;
    let r: Record = serde_json::from_str(&text).ok()?;
    (r.config_hash == hash && r.files.all().all(|f| resolve(out, f).is_file())).then_some(r)
}

/// Scans (and renders) one scene and writes its files under `out`.
pub fn run_job(run: &RunConfig, job: &Job, out: &Path, resume: bool) -> anyhow::Result<Outcome> {
    let hash = config_hash(run, &serde_json::json!({ "id": job.scene_id, "scene": job.description }));
    if resume {
        if let Some(record) = completed(out, &job.scene_id, &hash) {
            return Ok(Outcome { record, skipped: true });
        }
    }
    let scene = job.scene().with_context(|| format!("building scene {}", job.scene_id))?;
    let seed = scene_seed(run.seed, job.index);
    let lidar = run.lidar.to_config(seed)?;
    let pose = scene.sensor_pose();
    let mut cloud = parallel_scan(&scene, &lidar, pose).with_context(|| format!("scanning {}", job.scene_id))?;
    cloud.provenance.scene_id = job.scene_id.clone();
    cloud.provenance.cell = job.cell;
    cloud.provenance.background_id = job.background_id;

    let id = &job.scene_id;
    let mut files = Files::default();
    let put = |name: String, bytes: &[u8]| -> anyhow::Result<Option<String>> {
        let rel = format!("{SCENES_DIR}/{name}");
        write_atomic(&resolve(out, &rel), bytes)?;
        Ok(Some(rel))
    };
    let f = &run.formats;
    if f.kitti {
        files.cloud = put(format!("{id}.bin"), &kitti_bytes(&cloud))?;
    }
    if f.labels {
        files.labels = put(format!("{id}.label"), &label_bytes(&cloud))?;
    }
    if f.ply {
        files.ply = put(format!("{id}.ply"), ply_text(&cloud).as_bytes())?;
    }
    if f.csv {
        files.csv = put(format!("{id}.csv"), csv_text(&cloud).as_bytes())?;
    }
    if f.images {
        let cam = run.camera.at_sensor(pose)?;
        let img = parallel_render(&scene, &cam).with_context(|| format!("rendering {id}"))?;
        files.image = put(format!("{id}.ppm"), &ppm_bytes(img.width, img.height, &img.color))?;
        files.semantic = put(
            format!("{id}.sem.pgm"),
            &pgm16_bytes(img.width, img.height, img.semantic.iter().map(|c| u16::from(c.0))),
        )?;
        files.instance = put(
            format!("{id}.inst.pgm"),
            &pgm16_bytes(img.width, img.height, img.instance.iter().copied()),
        )?;
        let palette = PALETTE_FILE.to_string();
        if !resolve(out, &palette).is_file() {
            write_atomic(&resolve(out, &palette), palette_text().as_bytes())?;
        }
        files.palette = Some(palette);
    }

    let record = Record {
        scene_id: id.clone(),
        index: job.index,
        cell: job.cell.map(|c| [c.ix, c.iy]),
        offset: job.offset,
        background_id: job.background_id,
        scene: job.description.clone(),
        seed,
        config_hash: hash,
        points: cloud.len(),
        sensor: pose.into(),
        files,
    };
    // The sidecar goes last: its presence marks the scene as complete.
    let meta = serde_json::to_string_pretty(&record)? + "\n";
    write_atomic(&meta_path(out, id), meta.as_bytes())?;
    Ok(Outcome { record, skipped: false })
}

#[derive(Debug)]
pub struct RunSummary {
    pub manifest: Manifest,
    pub generated: usize,
    pub skipped: usize,
}

/// Runs jobs on the current pool and writes `manifest.json` in job order.
pub fn run_jobs(run: &RunConfig, jobs: &[Job], out: &Path, resume: bool) -> anyhow::Result<RunSummary> {
    let outcomes: Vec<Outcome> = jobs
        .par_iter()
        .map(|j| run_job(run, j, out, resume))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let skipped = outcomes.iter().filter(|o| o.skipped).count();
    let manifest = Manifest::new(run, outcomes.into_iter().map(|o| o.record).collect());
    write_atomic(&out.join(MANIFEST_FILE), manifest.to_json().as_bytes())?;
    Ok(RunSummary {
        generated: jobs.len() - skipped,
        skipped,
        manifest,
    })
}

pub fn sweep_jobs(spec: &SweepSpec) -> anyhow::Result<Vec<Job>> {
    Ok(sweep_points(spec)?
        .into_iter()
        .enumerate()
        .map(|(k, p)| Job::sweep(k, p))
        .collect())
}
