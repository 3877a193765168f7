//! On-disk formats: scene bundles and the JSONL record types.
//!
//! A scene bundle is a directory with four fixed entries:
//!
//! - `rgb.png`: 8-bit RGB panorama
//! - `depth.f32`: raw little-endian 32-bit floats, row-major, length W*H
//! - `seg.png`: 16-bit single-channel instance ids (0 = unlabeled)
//! - `meta.json`: scene id, dimensions, environment taxonomy, and the
//!   id -> class-label map
//!
//! Everything else in the pipeline is JSON-lines, one object per line.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use panoqa_core::geom::ErpDims;
use panoqa_core::qa::QaRecord;
use panoqa_core::raster::{Plane, RgbRaster};
use panoqa_core::reward::RewardBreakdown;
use panoqa_core::scene::{EnvMetadata, SceneAttribute, SceneBundle};

use crate::error::{CliError, CliResult};

pub const RGB_FILE: &str = "rgb.png";
pub const DEPTH_FILE: &str = "depth.f32";
pub const SEG_FILE: &str = "seg.png";
pub const META_FILE: &str = "meta.json";

/// `meta.json` schema.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SceneMeta {
    pub scene_id: String,
    pub width: u32,
    pub height: u32,
    pub environment_name: String,
    pub scene_attribute: SceneAttribute,
    pub scene_category: String,
    pub class_map: BTreeMap<u16, String>,
}

/// Loads a scene bundle from its directory.
pub fn load_scene(dir: &Path) -> CliResult<SceneBundle> {
    let meta_path = dir.join(META_FILE);
    let meta_text =
        std::fs::read_to_string(&meta_path).map_err(|e| CliError::read_at(&meta_path, e))?;
    let meta: SceneMeta =
        serde_json::from_str(&meta_text).map_err(|e| CliError::format_at(&meta_path, e))?;
    let dims =
        ErpDims::new(meta.width, meta.height).map_err(|e| CliError::format_at(&meta_path, e))?;

    let rgb_path = dir.join(RGB_FILE);
    let rgb_image = image::open(&rgb_path)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => CliError::read_at(&rgb_path, io),
            other => CliError::format_at(&rgb_path, other),
        })?
        .to_rgb8();
    let rgb = RgbRaster::from_vec(rgb_image.width(), rgb_image.height(), rgb_image.into_raw())
        .map_err(|e| CliError::format_at(&rgb_path, e))?;

    let depth_path = dir.join(DEPTH_FILE);
    let depth_bytes = std::fs::read(&depth_path).map_err(|e| CliError::read_at(&depth_path, e))?;
    let expected = (meta.width as usize) * (meta.height as usize) * 4;
    if depth_bytes.len() != expected {
        return Err(CliError::format_at(
            &depth_path,
            format!(
                "expected {expected} bytes ({}x{} f32), got {}",
                meta.width,
                meta.height,
                depth_bytes.len()
            ),
        ));
    }
    let depth_values: Vec<f32> = depth_bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let depth = Plane::from_vec(meta.width, meta.height, depth_values)
        .map_err(|e| CliError::format_at(&depth_path, e))?;

    let seg_path = dir.join(SEG_FILE);
    let seg_image = image::open(&seg_path).map_err(|e| match e {
        image::ImageError::IoError(io) => CliError::read_at(&seg_path, io),
        other => CliError::format_at(&seg_path, other),
    })?;
    let seg_image = match seg_image {
        image::DynamicImage::ImageLuma16(img) => img,
        other => {
            return Err(CliError::format_at(
                &seg_path,
                format!(
                    "segmentation must be 16-bit single-channel, got {:?}",
                    other.color()
                ),
            ))
        }
    };
    let seg = Plane::from_vec(seg_image.width(), seg_image.height(), seg_image.into_raw())
        .map_err(|e| CliError::format_at(&seg_path, e))?;

    let metadata = EnvMetadata {
        environment_name: meta.environment_name,
        scene_attribute: meta.scene_attribute,
        scene_category: meta.scene_category,
        class_map: meta.class_map,
    };
    SceneBundle::new(meta.scene_id, dims, rgb, depth, seg, metadata)
        .map_err(|e| CliError::format_at(dir, e))
}

/// Writes a scene bundle into a directory (created if needed).
pub fn write_scene(dir: &Path, bundle: &SceneBundle) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::format_at(dir, e))?;
    let dims = bundle.dims();

    let rgb_path = dir.join(RGB_FILE);
    let rgb = image::RgbImage::from_raw(dims.width(), dims.height(), bundle.rgb().data().to_vec())
        .expect("raster length matches dims");
    rgb.save(&rgb_path)
        .map_err(|e| CliError::format_at(&rgb_path, e))?;

    let depth_path = dir.join(DEPTH_FILE);
    let mut bytes = Vec::with_capacity(bundle.depth().data().len() * 4);
    for value in bundle.depth().data() {
        bytes.extend_from_slice(&value.to_le_bytes());
    }
    std::fs::write(&depth_path, bytes).map_err(|e| CliError::format_at(&depth_path, e))?;

    let seg_path = dir.join(SEG_FILE);
    let seg = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_raw(
        dims.width(),
        dims.height(),
        bundle.segmentation().data().to_vec(),
    )
    .expect("raster length matches dims");
    seg.save(&seg_path)
        .map_err(|e| CliError::format_at(&seg_path, e))?;

    let meta = SceneMeta {
        scene_id: bundle.scene_id().to_string(),
        width: dims.width(),
        height: dims.height(),
        environment_name: bundle.metadata().environment_name.clone(),
        scene_attribute: bundle.metadata().scene_attribute,
        scene_category: bundle.metadata().scene_category.clone(),
        class_map: bundle.metadata().class_map.clone(),
    };
    let meta_path = dir.join(META_FILE);
    let meta_json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    std::fs::write(&meta_path, meta_json).map_err(|e| CliError::format_at(&meta_path, e))?;
    Ok(())
}

/// Finds scene bundle directories under a root: the root itself when it
/// holds a `meta.json`, else every immediate subdirectory that does.
/// Sorted by path for deterministic processing order.
pub fn discover_bundles(root: &Path) -> CliResult<Vec<PathBuf>> {
    if !root.exists() {
        return Err(CliError::MissingInput(root.display().to_string()));
    }
    if root.join(META_FILE).exists() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut bundles = Vec::new();
    let entries = std::fs::read_dir(root).map_err(|e| CliError::format_at(root, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| CliError::format_at(root, e))?;
        let path = entry.path();
        if path.is_dir() && path.join(META_FILE).exists() {
            bundles.push(path);
        }
    }
    bundles.sort();
    Ok(bundles)
}

/// Reads a JSONL file into typed records; parse failures name the line.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::read_at(path, e))?;
    let mut out = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let item: T = serde_json::from_str(line)
            .map_err(|e| CliError::Format(format!("{}:{}: {e}", path.display(), index + 1)))?;
        out.push(item);
    }
    Ok(out)
}

/// Writes records as JSONL through one writer, preserving order.
pub fn write_jsonl<T: serde::Serialize>(path: &Path, items: &[T]) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::format_at(parent, e))?;
        }
    }
    let file = std::fs::File::create(path).map_err(|e| CliError::format_at(path, e))?;
    let mut writer = std::io::BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| CliError::format_at(path, e))?;
        writer
            .write_all(line.as_bytes())
            .and_then(|_| writer.write_all(b"\n"))
            .map_err(|e| CliError::format_at(path, e))?;
    }
    writer.flush().map_err(|e| CliError::format_at(path, e))?;
    Ok(())
}

/// Sidecar `<output>.meta.json` recording the command, seed, and config.
pub fn write_meta(
    out_path: &Path,
    command: &str,
    seed: u64,
    config: serde_json::Value,
) -> CliResult<()> {
    let meta_path = meta_sidecar_path(out_path);
    let body = serde_json::json!({
        "command": command,
        "seed": seed,
        "config": config,
    });
    std::fs::write(
        &meta_path,
        serde_json::to_string_pretty(&body).expect("meta serializes"),
    )
    .map_err(|e| CliError::format_at(&meta_path, e))
}

pub fn meta_sidecar_path(out_path: &Path) -> PathBuf {
    let mut name = out_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push_str(".meta.json");
    out_path.with_file_name(name)
}

/// One model response to grade: `{record_id, response_text}`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ResponseLine {
    pub record_id: String,
    pub response_text: String,
}

/// One grading result joined to its record.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BreakdownLine {
    pub record_id: String,
    #[serde(flatten)]
    pub breakdown: RewardBreakdown,
}

/// One judge transcript: `{record_id, system, user}`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TranscriptLine {
    pub record_id: String,
    pub system: String,
    pub user: String,
}

/// One external judge reply: `{record_id, reply}`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReplyLine {
    pub record_id: String,
    pub reply: String,
}

/// One judge score joined to its record.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScoreLine {
    pub record_id: String,
    pub value: u8,
    pub rationale: String,
}

/// One rejected judge reply.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RejectLine {
    pub record_id: String,
    pub error: String,
}

/// One advantage/objective report row.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdvantageLine {
    pub prompt_id: String,
    pub advantages: Vec<f64>,
    pub surrogate: f64,
    pub kl: f64,
    pub objective: f64,
}

/// Index records by id, rejecting duplicates.
pub fn index_records(records: &[QaRecord]) -> CliResult<BTreeMap<&str, &QaRecord>> {
    let mut map = BTreeMap::new();
    for record in records {
        if map.insert(record.id.as_str(), record).is_some() {
            return Err(CliError::Invariant(format!(
                "duplicate record id {}",
                record.id
            )));
        }
    }
    Ok(map)
}
