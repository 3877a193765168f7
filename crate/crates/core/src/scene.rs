//! Scene bundles and 3D object analytics.
//!
//! A [`SceneBundle`] carries pixel-aligned RGB, metric depth, and instance
//! segmentation for one panorama. From it we extract per-object masks and
//! derive the physical quantities the QA generator grounds its answers in:
//! robust depth profiles, visible cube faces, 3D point clouds, axis-aligned
//! bounding boxes, volumes, and flatness scores.
//!
//! Depth values that are non-positive or non-finite are invalid-depth
//! sentinels and are excluded from every statistic.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;

use crate::geom::{
    direction_to_face, pixel_center, pixel_depth_to_point, pixel_to_spherical,
    spherical_to_cartesian, ErpDims, FaceSet, GeomError, Vec3,
};
use crate::raster::{Plane, RgbRaster};
use crate::sampling::{self, id_label};

/// Segmentation id reserved for unlabeled pixels.
pub const UNLABELED_ID: u16 = 0;

/// Number of mask points sampled when classifying visible faces.
pub const FACE_SAMPLE_COUNT: usize = 100;

/// An object is "thick" along the view ray when its inter-quartile depth
/// range exceeds `max(IQR_FLOOR, IQR_FRACTION * p50)`.
pub const THICKNESS_IQR_FLOOR: f64 = 0.6;
pub const THICKNESS_IQR_FRACTION: f64 = 0.15;

/// Two depth profiles are "similar" when their inter-quartile intervals have
/// Jaccard overlap above this threshold...
pub const SIMILARITY_JACCARD: f64 = 0.30;
/// ...or their medians differ by less than `max(floor, fraction * min(p50))`.
pub const SIMILARITY_MEDIAN_FLOOR: f64 = 0.5;
pub const SIMILARITY_MEDIAN_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SceneError {
    #[error("{raster} raster is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    DimensionMismatch {
        raster: &'static str,
        want_w: u32,
        want_h: u32,
        got_w: u32,
        got_h: u32,
    },
    #[error("segmentation id {0} has no class label in the metadata class map")]
    MissingClassLabel(u16),
    #[error("environment_name must be nonempty")]
    EmptyEnvironmentName,
    #[error("depth map has no valid (finite, positive) pixels")]
    NoValidDepth,
    #[error("instance {0} has no valid-depth pixels inside its mask")]
    NoDepthPixels(u16),
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

/// Indoor/outdoor scene attribute, the first level of the environment
/// taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneAttribute {
    Indoor,
    Outdoor,
}

impl SceneAttribute {
    pub fn name(&self) -> &'static str {
        match self {
            SceneAttribute::Indoor => "indoor",
            SceneAttribute::Outdoor => "outdoor",
        }
    }
}

/// Environment metadata for one panorama.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnvMetadata {
    pub environment_name: String,
    pub scene_attribute: SceneAttribute,
    pub scene_category: String,
    /// Instance id -> class label for every labeled id in the segmentation.
    pub class_map: BTreeMap<u16, String>,
}

/// Pixel-aligned RGB / depth / segmentation for one panorama.
#[derive(Debug, Clone)]
pub struct SceneBundle {
    scene_id: String,
    dims: ErpDims,
    rgb: RgbRaster,
    depth: Plane<f32>,
    seg: Plane<u16>,
    metadata: EnvMetadata,
}

impl SceneBundle {
    /// Validates raster alignment, depth coverage, and class-map coverage.
    pub fn new(
        scene_id: String,
        dims: ErpDims,
        rgb: RgbRaster,
        depth: Plane<f32>,
        seg: Plane<u16>,
        metadata: EnvMetadata,
    ) -> Result<Self, SceneError> {
        let (w, h) = (dims.width(), dims.height());
        if rgb.width() != w || rgb.height() != h {
            return Err(SceneError::DimensionMismatch {
                raster: "rgb",
                want_w: w,
                want_h: h,
                got_w: rgb.width(),
                got_h: rgb.height(),
            });
        }
        if depth.width() != w || depth.height() != h {
            return Err(SceneError::DimensionMismatch {
                raster: "depth",
                want_w: w,
                want_h: h,
                got_w: depth.width(),
                got_h: depth.height(),
            });
        }
        if seg.width() != w || seg.height() != h {
            return Err(SceneError::DimensionMismatch {
                raster: "segmentation",
                want_w: w,
                want_h: h,
                got_w: seg.width(),
                got_h: seg.height(),
            });
        }
        if metadata.environment_name.is_empty() {
            return Err(SceneError::EmptyEnvironmentName);
        }
        if !depth.data().iter().any(|d| is_valid_depth(*d)) {
            return Err(SceneError::NoValidDepth);
        }
        let mut seen = BTreeSet::new();
        for id in seg.data() {
            if *id != UNLABELED_ID && seen.insert(*id) && !metadata.class_map.contains_key(id) {
                return Err(SceneError::MissingClassLabel(*id));
            }
        }
        Ok(Self {
            scene_id,
            dims,
            rgb,
            depth,
            seg,
            metadata,
        })
    }

    pub fn scene_id(&self) -> &str {
        &self.scene_id
    }

    pub fn dims(&self) -> ErpDims {
        self.dims
    }

    pub fn rgb(&self) -> &RgbRaster {
        &self.rgb
    }

    pub fn depth(&self) -> &Plane<f32> {
        &self.depth
    }

    pub fn segmentation(&self) -> &Plane<u16> {
        &self.seg
    }

    pub fn metadata(&self) -> &EnvMetadata {
        &self.metadata
    }
}

pub fn is_valid_depth(d: f32) -> bool {
    d.is_finite() && d > 0.0
}

/// Inclusive 2D pixel bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BBox2D {
    pub x_min: u32,
    pub y_min: u32,
    pub x_max: u32,
    pub y_max: u32,
}

impl BBox2D {
    pub fn width(&self) -> u32 {
        self.x_max - self.x_min + 1
    }

    pub fn height(&self) -> u32 {
        self.y_max - self.y_min + 1
    }

    pub fn area(&self) -> u64 {
        self.width() as u64 * self.height() as u64
    }

    pub fn aspect(&self) -> f64 {
        let (w, h) = (self.width() as f64, self.height() as f64);
        if w >= h {
            w / h
        } else {
            h / w
        }
    }

    /// Continuous coordinate of the box center.
    pub fn center(&self) -> (f64, f64) {
        (
            (self.x_min as f64 + self.x_max as f64 + 1.0) / 2.0,
            (self.y_min as f64 + self.y_max as f64 + 1.0) / 2.0,
        )
    }

    pub fn intersection_area(&self, other: &BBox2D) -> u64 {
        let x0 = self.x_min.max(other.x_min);
        let x1 = self.x_max.min(other.x_max);
        let y0 = self.y_min.max(other.y_min);
        let y1 = self.y_max.min(other.y_max);
        if x1 < x0 || y1 < y0 {
            0
        } else {
            (x1 - x0 + 1) as u64 * (y1 - y0 + 1) as u64
        }
    }
}

/// One segmented object: its mask pixels (row-major scan order) and 2D box.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInstance {
    pub instance_id: u16,
    pub class_label: String,
    pub mask: Vec<(u32, u32)>,
    pub bbox2d: BBox2D,
}

impl ObjectInstance {
    pub fn pixel_count(&self) -> usize {
        self.mask.len()
    }
}

/// Object filtering thresholds.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Minimum 2D bounding-box area in square pixels.
    pub min_area: u64,
    pub min_width: u32,
    pub min_height: u32,
    /// Objects with `max(w,h)/min(w,h) >= max_aspect` are dropped.
    pub max_aspect: f64,
    /// Class labels excluded from QA (matched case-insensitively).
    pub excluded_classes: BTreeSet<String>,
    /// Pairs whose box overlap ratio exceeds this are unsuitable for
    /// comparative questions.
    pub containment_threshold: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            min_area: 900,
            min_width: 25,
            min_height: 25,
            max_aspect: 5.0,
            excluded_classes: ["sky", "ground", "wall", "wire", "rubble"]
                .into_iter()
                .map(String::from)
                .collect(),
            containment_threshold: 0.90,
        }
    }
}

/// Extracts one [`ObjectInstance`] per distinct nonzero segmentation id.
/// Masks partition the labeled pixels; boxes are tight. Output is ordered by
/// ascending instance id.
pub fn extract_instances(bundle: &SceneBundle) -> Vec<ObjectInstance> {
    let seg = bundle.segmentation();
    let mut by_id: BTreeMap<u16, (Vec<(u32, u32)>, BBox2D)> = BTreeMap::new();
    for y in 0..seg.height() {
        for x in 0..seg.width() {
            let id = seg.get(x, y);
            if id == UNLABELED_ID {
                continue;
            }
            let entry = by_id.entry(id).or_insert_with(|| {
                (
                    Vec::new(),
                    BBox2D {
                        x_min: x,
                        y_min: y,
                        x_max: x,
                        y_max: y,
                    },
                )
            });
            entry.0.push((x, y));
            entry.1.x_min = entry.1.x_min.min(x);
            entry.1.x_max = entry.1.x_max.max(x);
            entry.1.y_min = entry.1.y_min.min(y);
            entry.1.y_max = entry.1.y_max.max(y);
        }
    }
    by_id
        .into_iter()
        .map(|(id, (mask, bbox2d))| ObjectInstance {
            instance_id: id,
            class_label: bundle
                .metadata()
                .class_map
                .get(&id)
                .cloned()
                .unwrap_or_default(),
            mask,
            bbox2d,
        })
        .collect()
}

/// Keeps instances meeting the area, side, aspect, and class constraints.
/// Order-preserving and idempotent.
pub fn filter_objects(instances: Vec<ObjectInstance>, cfg: &FilterConfig) -> Vec<ObjectInstance> {
    instances
        .into_iter()
        .filter(|inst| {
            let b = &inst.bbox2d;
            b.area() >= cfg.min_area
                && b.width() >= cfg.min_width
                && b.height() >= cfg.min_height
                && b.aspect() < cfg.max_aspect
                && !cfg
                    .excluded_classes
                    .iter()
                    .any(|c| c.eq_ignore_ascii_case(&inst.class_label))
        })
        .collect()
}

/// True when the pair's 2D boxes overlap too much for a fair comparison:
/// `area(a ∩ b) / min(area(a), area(b))` above the configured threshold.
pub fn containment_excluded(a: &ObjectInstance, b: &ObjectInstance, cfg: &FilterConfig) -> bool {
    containment_ratio(&a.bbox2d, &b.bbox2d) > cfg.containment_threshold
}

pub fn containment_ratio(a: &BBox2D, b: &BBox2D) -> f64 {
    let inter = a.intersection_area(b) as f64;
    let min_area = a.area().min(b.area()) as f64;
    inter / min_area
}

/// Percentile summary of the valid depths inside an object mask.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DepthProfile {
    pub p20: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub iqr: f64,
    pub valid_count: usize,
    pub is_thick: bool,
    /// `p20` for thick objects, else the median.
    pub effective_depth: f64,
}

impl DepthProfile {
    pub fn quartiles(&self) -> [f64; 3] {
        [self.p25, self.p50, self.p75]
    }
}

/// Linear-interpolation percentile over a sorted sample:
/// value at fractional rank `q * (n - 1)`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(rank) as usize;
    let frac = rank - lo as f64;
    if frac == 0.0 || lo + 1 >= sorted.len() {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Computes the robust depth profile of an instance.
pub fn depth_profile(
    inst: &ObjectInstance,
    bundle: &SceneBundle,
) -> Result<DepthProfile, SceneError> {
    let depths: Vec<f64> = inst
        .mask
        .iter()
        .map(|(x, y)| bundle.depth().get(*x, *y))
        .filter(|d| is_valid_depth(*d))
        .map(|d| d as f64)
        .collect();
    profile_from_depths(depths).ok_or(SceneError::NoDepthPixels(inst.instance_id))
}

/// Profile from raw depth samples; `None` when no valid sample remains.
pub fn profile_from_depths(mut depths: Vec<f64>) -> Option<DepthProfile> {
    depths.retain(|d| d.is_finite() && *d > 0.0);
    if depths.is_empty() {
        return None;
    }
    depths.sort_unstable_by(|a, b| a.partial_cmp(b).expect("depths are finite"));
    let p20 = percentile(&depths, 0.20);
    let p25 = percentile(&depths, 0.25);
    let p50 = percentile(&depths, 0.50);
    let p75 = percentile(&depths, 0.75);
    let iqr = p75 - p25;
    let is_thick = iqr > THICKNESS_IQR_FLOOR.max(THICKNESS_IQR_FRACTION * p50);
    Some(DepthProfile {
        p20,
        p25,
        p50,
        p75,
        iqr,
        valid_count: depths.len(),
        is_thick,
        effective_depth: if is_thick { p20 } else { p50 },
    })
}

/// Whether two depth profiles describe a similar distance from the camera.
pub fn similar_distance(a: &DepthProfile, b: &DepthProfile) -> bool {
    similar_distance_quartiles(a.quartiles(), b.quartiles())
}

/// Quartile form of [`similar_distance`]: `[p25, p50, p75]` per object.
pub fn similar_distance_quartiles(a: [f64; 3], b: [f64; 3]) -> bool {
    let inter = (a[2].min(b[2]) - a[0].max(b[0])).max(0.0);
    let union = a[2].max(b[2]) - a[0].min(b[0]);
    let jaccard = if union > 0.0 { inter / union } else { 0.0 };
    let median_gap = libm::fabs(a[1] - b[1]);
    jaccard > SIMILARITY_JACCARD
        || median_gap < SIMILARITY_MEDIAN_FLOOR.max(SIMILARITY_MEDIAN_FRACTION * a[1].min(b[1]))
}

/// Per-face counts over `min(n_samples, |mask|)` distinct mask pixels,
/// sampled with the seeded deterministic sampler and classified through the
/// pixel-center direction. Indexed by [`crate::geom::CubeFace::index`].
pub fn face_sample_histogram(
    inst: &ObjectInstance,
    dims: ErpDims,
    n_samples: usize,
    seed: u64,
) -> Result<[u32; 6], SceneError> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let picks = sampling::sample_indices(inst.mask.len(), n_samples.min(inst.mask.len()), &mut rng);
    let mut counts = [0u32; 6];
    for i in picks {
        let (x, y) = inst.mask[i];
        let (px, py) = pixel_center(x, y);
        let s = pixel_to_spherical(px, py, dims)?;
        let dir = spherical_to_cartesian(s, 1.0)?;
        counts[direction_to_face(dir)?.index()] += 1;
    }
    Ok(counts)
}

/// Set of cube faces the object is visible from, and whether it spans
/// several of them (a "seam" object).
pub fn visible_faces(
    inst: &ObjectInstance,
    dims: ErpDims,
    n_samples: usize,
    seed: u64,
) -> Result<(FaceSet, bool), SceneError> {
    let counts = face_sample_histogram(inst, dims, n_samples, seed)?;
    let faces: FaceSet = crate::geom::CubeFace::ALL
        .into_iter()
        .filter(|f| counts[f.index()] > 0)
        .collect();
    Ok((faces, faces.len() >= 2))
}

/// 3D characterization of one object.
#[derive(Debug, Clone, PartialEq)]
pub struct Object3D {
    /// Back-projection of the 2D box center at the median depth.
    pub centroid: Vec3,
    /// One point per valid-depth mask pixel, in mask order.
    pub points: Vec<Vec3>,
    /// Axis-aligned extents (max - min) per world axis.
    pub aabb_dims: [f64; 3],
    pub volume: f64,
    /// `min(dims) / max(dims)`; 0 for a degenerate (single-point) box.
    pub flatness: f64,
    pub visible_faces: FaceSet,
    pub is_seam: bool,
}

/// AABB extents, volume, and flatness of a point set.
pub fn aabb_metrics(points: &[Vec3]) -> ([f64; 3], f64, f64) {
    if points.is_empty() {
        return ([0.0; 3], 0.0, 0.0);
    }
    let mut min = [f64::INFINITY; 3];
    let mut max = [f64::NEG_INFINITY; 3];
    for p in points {
        let c = [p.x, p.y, p.z];
        for axis in 0..3 {
            min[axis] = min[axis].min(c[axis]);
            max[axis] = max[axis].max(c[axis]);
        }
    }
    let dims = [max[0] - min[0], max[1] - min[1], max[2] - min[2]];
    let volume = dims[0] * dims[1] * dims[2];
    let largest = dims[0].max(dims[1]).max(dims[2]);
    let smallest = dims[0].min(dims[1]).min(dims[2]);
    let flatness = if largest > 0.0 {
        smallest / largest
    } else {
        0.0
    };
    (dims, volume, flatness)
}

/// Builds the [`Object3D`] for an instance: back-projects every valid-depth
/// mask pixel, measures the AABB, and samples visible faces with the given
/// seed.
pub fn object_3d(
    inst: &ObjectInstance,
    bundle: &SceneBundle,
    seed: u64,
) -> Result<Object3D, SceneError> {
    let profile = depth_profile(inst, bundle)?;
    let dims = bundle.dims();
    let mut points = Vec::with_capacity(inst.mask.len());
    for (x, y) in &inst.mask {
        let d = bundle.depth().get(*x, *y);
        if !is_valid_depth(d) {
            continue;
        }
        let (px, py) = pixel_center(*x, *y);
        points.push(pixel_depth_to_point(px, py, dims, d as f64)?);
    }
    let (aabb_dims, volume, flatness) = aabb_metrics(&points);
    let (cx, cy) = inst.bbox2d.center();
    let centroid = pixel_depth_to_point(cx, cy, dims, profile.p50)?;
    let (faces, is_seam) = visible_faces(inst, dims, FACE_SAMPLE_COUNT, seed)?;
    Ok(Object3D {
        centroid,
        points,
        aabb_dims,
        volume,
        flatness,
        visible_faces: faces,
        is_seam,
    })
}

/// One fully characterized object of an analyzed scene.
#[derive(Debug, Clone)]
pub struct SceneObject {
    pub instance: ObjectInstance,
    pub profile: DepthProfile,
    pub object3d: Object3D,
    /// Face sample counts backing `object3d.visible_faces`.
    pub face_counts: [u32; 6],
}

/// Analytics for one scene: the filtered objects with their 3D properties.
#[derive(Debug, Clone)]
pub struct SceneAnalysis {
    pub scene_id: String,
    pub dims: ErpDims,
    pub metadata: EnvMetadata,
    pub objects: Vec<SceneObject>,
    /// The filter the objects passed; pair eligibility reuses its
    /// containment threshold.
    pub filter: FilterConfig,
    /// Instances dropped because their mask had no valid depth.
    pub skipped_no_depth: usize,
}

/// Runs extraction, filtering, and per-object analytics. Face sampling seeds
/// derive from `(root_seed, scene_id, instance_id)` so results reproduce
/// regardless of scene processing order.
pub fn analyze_scene(
    bundle: &SceneBundle,
    filter: &FilterConfig,
    root_seed: u64,
) -> Result<SceneAnalysis, SceneError> {
    let instances = filter_objects(extract_instances(bundle), filter);
    let mut objects = Vec::with_capacity(instances.len());
    let mut skipped = 0;
    for inst in instances {
        let seed = sampling::derive_seed(
            root_seed,
            &["faces", bundle.scene_id(), &id_label(inst.instance_id)],
        );
        let profile = match depth_profile(&inst, bundle) {
            Ok(p) => p,
            Err(SceneError::NoDepthPixels(_)) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let face_counts = face_sample_histogram(&inst, bundle.dims(), FACE_SAMPLE_COUNT, seed)?;
        let object3d = object_3d(&inst, bundle, seed)?;
        objects.push(SceneObject {
            instance: inst,
            profile,
            object3d,
            face_counts,
        });
    }
    Ok(SceneAnalysis {
        scene_id: String::from(bundle.scene_id()),
        dims: bundle.dims(),
        metadata: bundle.metadata().clone(),
        objects,
        filter: filter.clone(),
        skipped_no_depth: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn meta(classes: &[(u16, &str)]) -> EnvMetadata {
        EnvMetadata {
            environment_name: "TestYard".to_string(),
            scene_attribute: SceneAttribute::Outdoor,
            scene_category: "Urban".to_string(),
            class_map: classes
                .iter()
                .map(|(id, name)| (*id, name.to_string()))
                .collect(),
        }
    }

    /// Bundle where segmentation and depth come from closures over (x, y).
    fn bundle_from(
        w: u32,
        h: u32,
        seg_fn: impl Fn(u32, u32) -> u16,
        depth_fn: impl Fn(u32, u32) -> f32,
        classes: &[(u16, &str)],
    ) -> SceneBundle {
        let dims = ErpDims::new(w, h).unwrap();
        let mut seg = Plane::filled(w, h, 0u16);
        let mut depth = Plane::filled(w, h, 0f32);
        for y in 0..h {
            for x in 0..w {
                seg.set(x, y, seg_fn(x, y));
                depth.set(x, y, depth_fn(x, y));
            }
        }
        SceneBundle::new(
            "test-scene".to_string(),
            dims,
            RgbRaster::filled(w, h, [0; 3]),
            depth,
            seg,
            meta(classes),
        )
        .unwrap()
    }

    fn instance(id: u16, class: &str, bbox: (u32, u32, u32, u32)) -> ObjectInstance {
        let (x0, y0, x1, y1) = bbox;
        let mut mask = Vec::new();
        for y in y0..=y1 {
            for x in x0..=x1 {
                mask.push((x, y));
            }
        }
        ObjectInstance {
            instance_id: id,
            class_label: class.to_string(),
            mask,
            bbox2d: BBox2D {
                x_min: x0,
                y_min: y0,
                x_max: x1,
                y_max: y1,
            },
        }
    }

    #[test]
    fn bundle_rejects_dimension_mismatch() {
        let dims = ErpDims::new(8, 4).unwrap();
        let err = SceneBundle::new(
            "s".to_string(),
            dims,
            RgbRaster::filled(8, 5, [0; 3]),
            Plane::filled(8, 4, 1f32),
            Plane::filled(8, 4, 0u16),
            meta(&[]),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            SceneError::DimensionMismatch { raster: "rgb", .. }
        ));
    }

    #[test]
    fn bundle_rejects_missing_class() {
        let dims = ErpDims::new(8, 4).unwrap();
        let mut seg = Plane::filled(8, 4, 0u16);
        seg.set(3, 1, 7);
        let err = SceneBundle::new(
            "s".to_string(),
            dims,
            RgbRaster::filled(8, 4, [0; 3]),
            Plane::filled(8, 4, 1f32),
            seg,
            meta(&[(1, "crate")]),
        )
        .unwrap_err();
        assert_eq!(err, SceneError::MissingClassLabel(7));
    }

    #[test]
    fn bundle_rejects_all_invalid_depth() {
        let dims = ErpDims::new(8, 4).unwrap();
        let err = SceneBundle::new(
            "s".to_string(),
            dims,
            RgbRaster::filled(8, 4, [0; 3]),
            Plane::filled(8, 4, 0f32),
            Plane::filled(8, 4, 0u16),
            meta(&[]),
        )
        .unwrap_err();
        assert_eq!(err, SceneError::NoValidDepth);
    }

    #[test]
    fn well_formed_toy_bundle_loads() {
        let b = bundle_from(8, 4, |_, _| 0, |_, _| 2.0, &[]);
        assert_eq!(b.dims().width(), 8);
        assert_eq!(b.dims().height(), 4);
    }

    #[test]
    fn extract_empty_segmentation() {
        let b = bundle_from(8, 4, |_, _| 0, |_, _| 2.0, &[]);
        assert!(extract_instances(&b).is_empty());
    }

    #[test]
    fn extract_two_blocks() {
        let seg_fn = |x: u32, y: u32| -> u16 {
            if x < 3 && y < 3 {
                1
            } else if (4..7).contains(&x) && y < 3 {
                2
            } else {
                0
            }
        };
        let b = bundle_from(8, 4, seg_fn, |_, _| 2.0, &[(1, "crate"), (2, "barrel")]);
        let instances = extract_instances(&b);
        assert_eq!(instances.len(), 2);
        for inst in &instances {
            assert_eq!(inst.pixel_count(), 9);
            assert_eq!(inst.bbox2d.width(), 3);
            assert_eq!(inst.bbox2d.height(), 3);
        }
        assert_eq!(instances[0].class_label, "crate");
        assert_eq!(instances[1].class_label, "barrel");
    }

    #[test]
    fn extract_single_pixel() {
        let b = bundle_from(
            8,
            4,
            |x, y| u16::from(x == 2 && y == 3) * 5,
            |_, _| 2.0,
            &[(5, "dot")],
        );
        let instances = extract_instances(&b);
        assert_eq!(instances.len(), 1);
        assert_eq!(instances[0].pixel_count(), 1);
        assert_eq!(
            instances[0].bbox2d,
            BBox2D {
                x_min: 2,
                y_min: 3,
                x_max: 2,
                y_max: 3
            }
        );
    }

    #[test]
    fn filter_threshold_cases() {
        let cfg = FilterConfig::default();
        let kept = filter_objects(vec![instance(1, "chair", (0, 0, 29, 29))], &cfg);
        assert_eq!(kept.len(), 1, "30x30 has area 900 and aspect 1");

        let narrow = filter_objects(vec![instance(1, "pole", (0, 0, 23, 99))], &cfg);
        assert!(narrow.is_empty(), "24 wide fails min_width");

        let wide = filter_objects(vec![instance(1, "car", (0, 0, 199, 29))], &cfg);
        assert!(wide.is_empty(), "aspect 200/30 = 6.67 fails aspect < 5");
    }

    #[test]
    fn filter_excluded_class_case_insensitive() {
        let cfg = FilterConfig::default();
        let out = filter_objects(
            vec![
                instance(1, "Sky", (0, 0, 29, 29)),
                instance(2, "chair", (0, 0, 29, 29)),
            ],
            &cfg,
        );
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].class_label, "chair");
    }

    #[test]
    fn containment_cases() {
        let cfg = FilterConfig::default();
        let outer = instance(1, "car", (0, 0, 99, 99));
        let inner = instance(2, "tire", (10, 10, 30, 30));
        assert!(containment_excluded(&outer, &inner, &cfg));
        assert!(containment_excluded(&inner, &outer, &cfg));

        let far = instance(3, "tree", (200, 0, 240, 40));
        assert!(!containment_excluded(&outer, &far, &cfg));

        let a = instance(4, "a", (0, 0, 9, 9));
        let b = instance(5, "b", (5, 0, 14, 9));
        assert_eq!(containment_ratio(&a.bbox2d, &b.bbox2d), 0.5);
        assert!(!containment_excluded(&a, &b, &cfg));
    }

    #[test]
    fn depth_profile_one_to_five() {
        // A 5-pixel strip with depths 1..5.
        let b = bundle_from(
            8,
            4,
            |x, y| u16::from(y == 1 && x < 5),
            |x, _| (x + 1) as f32,
            &[(1, "strip")],
        );
        let inst = &extract_instances(&b)[0];
        let p = depth_profile(inst, &b).unwrap();
        assert!((p.p20 - 1.8).abs() < 1e-12);
        assert_eq!(p.p25, 2.0);
        assert_eq!(p.p50, 3.0);
        assert_eq!(p.p75, 4.0);
        assert_eq!(p.iqr, 2.0);
        assert!(p.is_thick, "iqr 2 > max(0.6, 0.45)");
        assert!((p.effective_depth - 1.8).abs() < 1e-12);
        assert_eq!(p.valid_count, 5);
    }

    #[test]
    fn depth_profile_constant() {
        let p = profile_from_depths(vec![7.0; 9]).unwrap();
        assert_eq!(p.p50, 7.0);
        assert_eq!(p.iqr, 0.0);
        assert!(!p.is_thick);
        assert_eq!(p.effective_depth, 7.0);
    }

    #[test]
    fn depth_profile_narrow_spread_uses_median() {
        let p = profile_from_depths(vec![10.0, 10.1, 10.2]).unwrap();
        assert!((p.iqr - 0.1).abs() < 1e-9);
        assert!(!p.is_thick, "0.1 <= max(0.6, 1.5)");
        assert!((p.effective_depth - 10.1).abs() < 1e-12);
    }

    #[test]
    fn depth_profile_ignores_sentinels() {
        let p = profile_from_depths(vec![f64::NAN, -1.0, 0.0, 3.0, f64::INFINITY]).unwrap();
        assert_eq!(p.valid_count, 1);
        assert_eq!(p.p50, 3.0);
        assert!(profile_from_depths(vec![0.0, -2.0]).is_none());
    }

    #[test]
    fn no_depth_error_names_instance() {
        let b = bundle_from(
            8,
            4,
            |x, y| u16::from(y == 0 && x == 0) * 9,
            |x, y| if y == 0 && x == 0 { 0.0 } else { 1.0 },
            &[(9, "ghost")],
        );
        let inst = &extract_instances(&b)[0];
        assert_eq!(
            depth_profile(inst, &b).unwrap_err(),
            SceneError::NoDepthPixels(9)
        );
    }

    #[test]
    fn similar_distance_cases() {
        // Jaccard of [2,4] and [3,5] is 1/3 > 0.30.
        assert!(similar_distance_quartiles([2.0, 3.0, 4.0], [3.0, 4.0, 5.0]));
        // Disjoint intervals but close medians: 0.4 < max(0.5, 1.0).
        assert!(similar_distance_quartiles(
            [9.0, 10.0, 10.1],
            [10.2, 10.4, 11.0]
        ));
        // Far apart on both rules.
        assert!(!similar_distance_quartiles(
            [1.5, 2.0, 2.5],
            [18.0, 20.0, 22.0]
        ));
    }

    #[test]
    fn similar_distance_symmetric() {
        let a = [2.0, 3.0, 4.0];
        let b = [3.0, 4.0, 5.0];
        assert_eq!(
            similar_distance_quartiles(a, b),
            similar_distance_quartiles(b, a)
        );
    }

    #[test]
    fn visible_faces_front_band() {
        // 256x128: the Front azimuth band is px in (96, 160) at the equator.
        let b = bundle_from(
            256,
            128,
            |x, y| u16::from((120..136).contains(&x) && (60..68).contains(&y)),
            |_, _| 4.0,
            &[(1, "crate")],
        );
        let inst = &extract_instances(&b)[0];
        let (faces, seam) = visible_faces(inst, b.dims(), 100, 7).unwrap();
        assert_eq!(faces.len(), 1);
        assert!(faces.contains(crate::geom::CubeFace::Front));
        assert!(!seam);
    }

    #[test]
    fn visible_faces_straddles_boundary() {
        // The Front/Right boundary sits at px = 96 (azimuth -pi/4).
        let b = bundle_from(
            256,
            128,
            |x, y| u16::from((88..104).contains(&x) && (60..68).contains(&y)),
            |_, _| 4.0,
            &[(1, "crate")],
        );
        let inst = &extract_instances(&b)[0];
        let (faces, seam) = visible_faces(inst, b.dims(), 100, 7).unwrap();
        assert!(faces.contains(crate::geom::CubeFace::Front));
        assert!(faces.contains(crate::geom::CubeFace::Right));
        assert!(seam);
    }

    #[test]
    fn visible_faces_single_pixel() {
        let b = bundle_from(
            256,
            128,
            |x, y| u16::from(x == 128 && y == 64),
            |_, _| 4.0,
            &[(1, "dot")],
        );
        let inst = &extract_instances(&b)[0];
        let (faces, seam) = visible_faces(inst, b.dims(), 100, 7).unwrap();
        assert_eq!(faces.len(), 1);
        assert!(!seam);
    }

    #[test]
    fn visible_faces_deterministic() {
        let b = bundle_from(
            256,
            128,
            |x, y| u16::from((88..150).contains(&x) && (30..90).contains(&y)),
            |_, _| 4.0,
            &[(1, "blob")],
        );
        let inst = &extract_instances(&b)[0];
        let a = face_sample_histogram(inst, b.dims(), 100, 42).unwrap();
        let c = face_sample_histogram(inst, b.dims(), 100, 42).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn object_3d_single_pixel_at_center() {
        // Odd dims put a pixel center exactly at the image center.
        let b = bundle_from(
            9,
            5,
            |x, y| u16::from(x == 4 && y == 2),
            |_, _| 5.0,
            &[(1, "dot")],
        );
        let inst = &extract_instances(&b)[0];
        let obj = object_3d(inst, &b, 1).unwrap();
        assert_eq!(obj.centroid.x, 0.0);
        assert_eq!(obj.centroid.y, 0.0);
        assert_eq!(obj.centroid.z, -5.0);
        assert_eq!(obj.aabb_dims, [0.0; 3]);
        assert_eq!(obj.volume, 0.0);
        assert_eq!(obj.flatness, 0.0);
        assert!(!obj.is_seam);
    }

    #[test]
    fn aabb_two_points_on_axis() {
        let (dims, volume, flatness) =
            aabb_metrics(&[Vec3::new(0.0, 0.0, -1.0), Vec3::new(0.0, 0.0, -3.0)]);
        assert_eq!(dims, [0.0, 0.0, 2.0]);
        assert_eq!(volume, 0.0);
        assert_eq!(flatness, 0.0);
    }

    #[test]
    fn aabb_synthetic_slab() {
        // Slab spanning x in [-1,1], y in [-0.05,0.05], z in [-3,-1].
        let mut points = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                let fx = -1.0 + 2.0 * i as f64 / 9.0;
                let fz = -3.0 + 2.0 * j as f64 / 9.0;
                points.push(Vec3::new(fx, -0.05, fz));
                points.push(Vec3::new(fx, 0.05, fz));
            }
        }
        let (dims, volume, flatness) = aabb_metrics(&points);
        assert!((dims[0] - 2.0).abs() < 1e-12);
        assert!((dims[1] - 0.1).abs() < 1e-12);
        assert!((dims[2] - 2.0).abs() < 1e-12);
        assert!((volume - 0.4).abs() < 1e-12);
        assert!((flatness - 0.05).abs() < 1e-12);
    }

    #[test]
    fn object_points_preserve_depth() {
        let b = bundle_from(
            64,
            32,
            |x, y| u16::from((20..30).contains(&x) && (12..20).contains(&y)),
            |x, y| 2.0 + 0.01 * (x + y) as f32,
            &[(1, "crate")],
        );
        let inst = &extract_instances(&b)[0];
        let obj = object_3d(inst, &b, 3).unwrap();
        assert_eq!(obj.points.len(), inst.pixel_count());
        for (point, (x, y)) in obj.points.iter().zip(&inst.mask) {
            let d = b.depth().get(*x, *y) as f64;
            assert!((point.norm() - d).abs() < 1e-9 * d.max(1.0));
        }
    }

    #[test]
    fn volume_and_flatness_invariants() {
        let b = bundle_from(
            128,
            64,
            |x, y| u16::from((40..70).contains(&x) && (25..40).contains(&y)),
            |x, _| 3.0 + 0.05 * x as f32,
            &[(1, "crate")],
        );
        let inst = &extract_instances(&b)[0];
        let obj = object_3d(inst, &b, 5).unwrap();
        let [lx, ly, lz] = obj.aabb_dims;
        assert!((obj.volume - lx * ly * lz).abs() < 1e-12);
        let largest = lx.max(ly).max(lz);
        let smallest = lx.min(ly).min(lz);
        assert!((obj.flatness * largest - smallest).abs() < 1e-12);
    }

    #[test]
    fn analyze_scene_is_deterministic() {
        let b = bundle_from(
            256,
            128,
            |x, y| {
                if (30..70).contains(&x) && (40..80).contains(&y) {
                    1
                } else if (150..200).contains(&x) && (50..90).contains(&y) {
                    2
                } else {
                    0
                }
            },
            |x, _| 2.0 + x as f32 * 0.01,
            &[(1, "crate"), (2, "barrel")],
        );
        let cfg = FilterConfig {
            min_area: 100,
            min_width: 10,
            min_height: 10,
            ..FilterConfig::default()
        };
        let a = analyze_scene(&b, &cfg, 11).unwrap();
        let c = analyze_scene(&b, &cfg, 11).unwrap();
        assert_eq!(a.objects.len(), 2);
        for (oa, oc) in a.objects.iter().zip(&c.objects) {
            assert_eq!(oa.face_counts, oc.face_counts);
            assert_eq!(oa.object3d.centroid, oc.object3d.centroid);
        }
    }

    proptest! {
        #[test]
        fn prop_filter_idempotent_and_subset(
            boxes in proptest::collection::vec((0u32..60, 0u32..60, 1u32..80, 1u32..80), 0..12)
        ) {
            let cfg = FilterConfig::default();
            let instances: Vec<ObjectInstance> = boxes
                .iter()
                .enumerate()
                .map(|(i, (x, y, w, h))| {
                    instance(i as u16 + 1, "thing", (*x, *y, x + w - 1, y + h - 1))
                })
                .collect();
            let once = filter_objects(instances.clone(), &cfg);
            let twice = filter_objects(once.clone(), &cfg);
            prop_assert_eq!(&once, &twice);
            for kept in &once {
                prop_assert!(instances.iter().any(|i| i == kept));
            }
        }

        #[test]
        fn prop_profile_ordering(depths in proptest::collection::vec(0.01f64..100.0, 1..64)) {
            let p = profile_from_depths(depths).unwrap();
            prop_assert!(p.p20 <= p.p25 + 1e-12);
            prop_assert!(p.p25 <= p.p50 + 1e-12);
            prop_assert!(p.p50 <= p.p75 + 1e-12);
            prop_assert!(p.iqr >= 0.0);
            let expected_thick = p.iqr > THICKNESS_IQR_FLOOR.max(THICKNESS_IQR_FRACTION * p.p50);
            prop_assert_eq!(p.is_thick, expected_thick);
            let expected = if expected_thick { p.p20 } else { p.p50 };
            prop_assert_eq!(p.effective_depth, expected);
        }

        #[test]
        fn prop_containment_symmetric(
            ax in 0u32..50, ay in 0u32..50, aw in 1u32..50, ah in 1u32..50,
            bx in 0u32..50, by in 0u32..50, bw in 1u32..50, bh in 1u32..50,
        ) {
            let cfg = FilterConfig::default();
            let a = instance(1, "a", (ax, ay, ax + aw - 1, ay + ah - 1));
            let b = instance(2, "b", (bx, by, bx + bw - 1, by + bh - 1));
            prop_assert_eq!(
                containment_excluded(&a, &b, &cfg),
                containment_excluded(&b, &a, &cfg)
            );
        }
    }
}
