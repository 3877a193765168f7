//! ERP pixel <-> spherical <-> Cartesian transforms and cubemap stitching.
//!
//! Conventions, fixed once for the whole pipeline:
//!
//! - The world frame is right-handed with +Y up and the forward direction
//!   (image center, azimuth 0) along -Z.
//! - An ERP pixel column maps linearly to azimuth `lambda` in `[-pi, pi)`
//!   and a row maps linearly to elevation `phi` in `[-pi/2, pi/2]`, with
//!   row 0 at the north pole.
//! - Discrete pixel indices refer to pixel centers: index `(ix, iy)` is the
//!   continuous coordinate `(ix + 0.5, iy + 0.5)`. The transforms below take
//!   continuous coordinates; use [`pixel_center`] for indices.

use alloc::vec::Vec;

use crate::raster::{CubemapSet, RgbRaster};

use core::f64::consts::PI;

/// Errors from coordinate transforms and face classification.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeomError {
    #[error("invalid ERP dimensions {width}x{height}: both sides must be >= 2")]
    BadDims { width: u32, height: u32 },
    #[error("pixel coordinate {axis}={value} outside [0, {limit})")]
    PixelOutOfRange {
        axis: &'static str,
        value: f64,
        limit: u32,
    },
    #[error("{what} must be finite")]
    NonFinite { what: &'static str },
    #[error("elevation {0} outside [-pi/2, pi/2]")]
    ElevationOutOfRange(f64),
    #[error("distance must be finite and non-negative, got {0}")]
    BadDistance(f64),
    #[error("depth must be finite and positive, got {0}")]
    BadDepth(f64),
    #[error("cannot classify the zero vector onto a cube face")]
    ZeroVector,
}

/// Dimensions of an ERP image in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ErpDims {
    width: u32,
    height: u32,
}

impl ErpDims {
    /// The reference resolution used in the generation prompt template.
    pub const REFERENCE: ErpDims = ErpDims {
        width: 2560,
        height: 1280,
    };

    pub fn new(width: u32, height: u32) -> Result<Self, GeomError> {
        if width < 2 || height < 2 {
            return Err(GeomError::BadDims { width, height });
        }
        Ok(Self { width, height })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Whether the image covers the full sphere at the canonical 2:1 ratio.
    pub fn is_full_sphere(&self) -> bool {
        self.width == 2 * self.height
    }
}

/// A direction on the sphere: azimuth `lambda` in `[-pi, pi)` and elevation
/// `phi` in `[-pi/2, pi/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalCoord {
    lambda: f64,
    phi: f64,
}

impl SphericalCoord {
    /// Builds a coordinate, wrapping `lambda` into `[-pi, pi)`.
    pub fn new(lambda: f64, phi: f64) -> Result<Self, GeomError> {
        if !lambda.is_finite() {
            return Err(GeomError::NonFinite { what: "azimuth" });
        }
        if !phi.is_finite() {
            return Err(GeomError::NonFinite { what: "elevation" });
        }
        if !(-PI / 2.0..=PI / 2.0).contains(&phi) {
            return Err(GeomError::ElevationOutOfRange(phi));
        }
        Ok(Self {
            lambda: wrap_azimuth(lambda),
            phi,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

/// Wraps an azimuth into `[-pi, pi)` by adding multiples of `2*pi`.
pub fn wrap_azimuth(lambda: f64) -> f64 {
    let wrapped = lambda - 2.0 * PI * libm::floor((lambda + PI) / (2.0 * PI));
    // floor() can land exactly on +pi when lambda is a hair below a period
    // boundary; fold it back.
    if wrapped >= PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// A 3D point or direction in the right-handed +Y-up, -Z-forward frame.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn sub(&self, other: &Vec3) -> Vec3 {
        Vec3::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }

    pub fn neg(&self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// The six cubemap faces. `Front` is the -Z axis (forward at azimuth 0),
/// `Top` is +Y.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize,
)]
pub enum CubeFace {
    Front,
    Back,
    Left,
    Right,
    Top,
    Bottom,
}

impl CubeFace {
    pub const ALL: [CubeFace; 6] = [
        CubeFace::Front,
        CubeFace::Back,
        CubeFace::Left,
        CubeFace::Right,
        CubeFace::Top,
        CubeFace::Bottom,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CubeFace::Front => "Front",
            CubeFace::Back => "Back",
            CubeFace::Left => "Left",
            CubeFace::Right => "Right",
            CubeFace::Top => "Top",
            CubeFace::Bottom => "Bottom",
        }
    }

    pub fn from_name(name: &str) -> Option<CubeFace> {
        CubeFace::ALL
            .iter()
            .copied()
            .find(|f| f.name().eq_ignore_ascii_case(name))
    }

    pub fn opposite(&self) -> CubeFace {
        match self {
            CubeFace::Front => CubeFace::Back,
            CubeFace::Back => CubeFace::Front,
            CubeFace::Left => CubeFace::Right,
            CubeFace::Right => CubeFace::Left,
            CubeFace::Top => CubeFace::Bottom,
            CubeFace::Bottom => CubeFace::Top,
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }
}

impl core::fmt::Display for CubeFace {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// A small set of cube faces, iterated in the fixed [`CubeFace::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FaceSet(u8);

impl FaceSet {
    pub const EMPTY: FaceSet = FaceSet(0);

    pub fn insert(&mut self, face: CubeFace) {
        self.0 |= 1 << face.index();
    }

    pub fn contains(&self, face: CubeFace) -> bool {
        self.0 & (1 << face.index()) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = CubeFace> + '_ {
        CubeFace::ALL.into_iter().filter(|f| self.contains(*f))
    }
}

impl FromIterator<CubeFace> for FaceSet {
    fn from_iter<I: IntoIterator<Item = CubeFace>>(iter: I) -> Self {
        let mut set = FaceSet::EMPTY;
        for face in iter {
            set.insert(face);
        }
        set
    }
}

/// Sign applied to the azimuth when projecting to Cartesian x.
///
/// The default `Plus` keeps the transform exactly as
/// `x = -d * cos(phi) * sin(lambda)`; `Minus` flips the x component for
/// pipelines that want right-of-center pixels on +X instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum AzimuthSign {
    #[default]
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
}

impl AzimuthSign {
    fn factor(&self) -> f64 {
        match self {
            AzimuthSign::Plus => 1.0,
            AzimuthSign::Minus => -1.0,
        }
    }
}

/// Continuous coordinate of the center of the pixel at index `(ix, iy)`.
pub fn pixel_center(ix: u32, iy: u32) -> (f64, f64) {
    (ix as f64 + 0.5, iy as f64 + 0.5)
}

/// Maps a continuous ERP pixel coordinate to spherical coordinates:
/// `lambda = (px/W - 0.5) * 2*pi`, `phi = -(py/H - 0.5) * pi`.
pub fn pixel_to_spherical(px: f64, py: f64, dims: ErpDims) -> Result<SphericalCoord, GeomError> {
    let w = dims.width() as f64;
    let h = dims.height() as f64;
    if !px.is_finite() || !(0.0..w).contains(&px) {
        return Err(GeomError::PixelOutOfRange {
            axis: "px",
            value: px,
            limit: dims.width(),
        });
    }
    if !py.is_finite() || !(0.0..h).contains(&py) {
        return Err(GeomError::PixelOutOfRange {
            axis: "py",
            value: py,
            limit: dims.height(),
        });
    }
    Ok(SphericalCoord {
        lambda: (px / w - 0.5) * (2.0 * PI),
        phi: -(py / h - 0.5) * PI,
    })
}

/// Exact algebraic inverse of [`pixel_to_spherical`]. The result is a
/// fractional pixel coordinate; `phi = -pi/2` lands on `py = H`.
pub fn spherical_to_pixel(s: SphericalCoord, dims: ErpDims) -> (f64, f64) {
    let w = dims.width() as f64;
    let h = dims.height() as f64;
    let px = (s.lambda / (2.0 * PI) + 0.5) * w;
    let py = (0.5 - s.phi / PI) * h;
    (px, py)
}

/// Converts a spherical direction and distance to Cartesian coordinates:
/// `x = -d*cos(phi)*sin(lambda)`, `y = d*sin(phi)`, `z = -d*cos(phi)*cos(lambda)`.
pub fn spherical_to_cartesian(s: SphericalCoord, dist: f64) -> Result<Vec3, GeomError> {
    spherical_to_cartesian_signed(s, dist, AzimuthSign::Plus)
}

/// [`spherical_to_cartesian`] with a configurable sign on the x component.
pub fn spherical_to_cartesian_signed(
    s: SphericalCoord,
    dist: f64,
    sign: AzimuthSign,
) -> Result<Vec3, GeomError> {
    if !dist.is_finite() || dist < 0.0 {
        return Err(GeomError::BadDistance(dist));
    }
    let cos_phi = libm::cos(s.phi);
    let sin_phi = libm::sin(s.phi);
    let cos_lambda = libm::cos(s.lambda);
    let sin_lambda = libm::sin(s.lambda);
    Ok(Vec3 {
        x: sign.factor() * (-dist * cos_phi * sin_lambda),
        y: dist * sin_phi,
        z: -dist * cos_phi * cos_lambda,
    })
}

/// Back-projects an ERP pixel with a metric depth into 3D.
pub fn pixel_depth_to_point(
    px: f64,
    py: f64,
    dims: ErpDims,
    depth: f64,
) -> Result<Vec3, GeomError> {
    if !depth.is_finite() || depth <= 0.0 {
        return Err(GeomError::BadDepth(depth));
    }
    let s = pixel_to_spherical(px, py, dims)?;
    spherical_to_cartesian(s, depth)
}

/// Classifies a direction onto the cube face of its dominant axis.
///
/// Sign resolution: -Z is Front, +Z Back, +Y Top, -Y Bottom, +X Right,
/// -X Left. Exact ties between absolute components resolve with the fixed
/// priority Z > X > Y.
pub fn direction_to_face(v: Vec3) -> Result<CubeFace, GeomError> {
    if !v.is_finite() {
        return Err(GeomError::NonFinite { what: "direction" });
    }
    if v.x == 0.0 && v.y == 0.0 && v.z == 0.0 {
        return Err(GeomError::ZeroVector);
    }
    let (ax, ay, az) = (fabs(v.x), fabs(v.y), fabs(v.z));
    if az >= ax && az >= ay {
        Ok(if v.z < 0.0 {
            CubeFace::Front
        } else {
            CubeFace::Back
        })
    } else if ax >= ay {
        Ok(if v.x > 0.0 {
            CubeFace::Right
        } else {
            CubeFace::Left
        })
    } else {
        Ok(if v.y > 0.0 {
            CubeFace::Top
        } else {
            CubeFace::Bottom
        })
    }
}

fn fabs(x: f64) -> f64 {
    libm::fabs(x)
}

/// Per-face view frame as seen from the cube center looking through the face:
/// returns (forward, image-up). Image-right is `forward x up`, +V is down.
fn face_frame(face: CubeFace) -> (Vec3, Vec3) {
    match face {
        CubeFace::Front => (Vec3::new(0.0, 0.0, -1.0), Vec3::new(0.0, 1.0, 0.0)),
        CubeFace::Back => (Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 1.0, 0.0)),
        CubeFace::Left => (Vec3::new(-1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)),
        CubeFace::Right => (Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)),
        CubeFace::Top => (Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0)),
        CubeFace::Bottom => (Vec3::new(0.0, -1.0, 0.0), Vec3::new(0.0, 0.0, -1.0)),
    }
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    Vec3::new(
        a.y * b.z - a.z * b.y,
        a.z * b.x - a.x * b.z,
        a.x * b.y - a.y * b.x,
    )
}

/// Maps a direction to its face and face-local UV in `[0, 1]^2`
/// (+U rightward, +V downward in the face image).
pub fn direction_to_face_uv(v: Vec3) -> Result<(CubeFace, f64, f64), GeomError> {
    let face = direction_to_face(v)?;
    let (forward, up) = face_frame(face);
    let right = cross(forward, up);
    let along = v.dot(&forward);
    // The dominant-axis face always has a strictly positive forward component.
    let u = 0.5 * (v.dot(&right) / along + 1.0);
    let vv = 0.5 * (-v.dot(&up) / along + 1.0);
    Ok((face, u, vv))
}

/// Pixel sampling mode for stitching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    Nearest,
    #[default]
    Bilinear,
}

/// Renders an ERP image by classifying every output pixel direction onto a
/// cube face and sampling that face at the projected UV.
pub fn stitch_cubemap_to_erp(cube: &CubemapSet, dims: ErpDims, sampling: Sampling) -> RgbRaster {
    let mut out = RgbRaster::filled(dims.width(), dims.height(), [0, 0, 0]);
    // Trig is separable over rows (phi) and columns (lambda).
    let cols: Vec<(f64, f64)> = (0..dims.width())
        .map(|ix| {
            let lambda = ((ix as f64 + 0.5) / dims.width() as f64 - 0.5) * (2.0 * PI);
            (libm::sin(lambda), libm::cos(lambda))
        })
        .collect();
    for iy in 0..dims.height() {
        let phi = -((iy as f64 + 0.5) / dims.height() as f64 - 0.5) * PI;
        let (sin_phi, cos_phi) = (libm::sin(phi), libm::cos(phi));
        for ix in 0..dims.width() {
            let (sin_l, cos_l) = cols[ix as usize];
            let dir = Vec3::new(-cos_phi * sin_l, sin_phi, -cos_phi * cos_l);
            // Unit direction from pixel centers is never the zero vector.
            let (face, u, v) = direction_to_face_uv(dir).expect("pixel direction is nonzero");
            let rgb = sample_face(cube.face(face), u, v, sampling);
            out.set_pixel(ix, iy, rgb);
        }
    }
    out
}

/// Solid-angle-weighted share of ERP pixels classified to each face,
/// indexed by [`CubeFace::index`]. Each pixel is weighted by `cos(phi)`
/// so the shares estimate the faces' true solid-angle fractions (1/6 each).
pub fn face_share_histogram(dims: ErpDims) -> [f64; 6] {
    let mut weights = [0.0f64; 6];
    let cols: Vec<(f64, f64)> = (0..dims.width())
        .map(|ix| {
            let lambda = ((ix as f64 + 0.5) / dims.width() as f64 - 0.5) * (2.0 * PI);
            (libm::sin(lambda), libm::cos(lambda))
        })
        .collect();
    for iy in 0..dims.height() {
        let phi = -((iy as f64 + 0.5) / dims.height() as f64 - 0.5) * PI;
        let (sin_phi, cos_phi) = (libm::sin(phi), libm::cos(phi));
        for ix in 0..dims.width() {
            let (sin_l, cos_l) = cols[ix as usize];
            let dir = Vec3::new(-cos_phi * sin_l, sin_phi, -cos_phi * cos_l);
            let face = direction_to_face(dir).expect("pixel direction is nonzero");
            weights[face.index()] += cos_phi;
        }
    }
    let total: f64 = weights.iter().sum();
    weights.map(|w| w / total)
}

fn sample_face(face: &RgbRaster, u: f64, v: f64, sampling: Sampling) -> [u8; 3] {
    let edge = face.width();
    debug_assert_eq!(face.width(), face.height());
    match sampling {
        Sampling::Nearest => {
            let x = clamp_index(libm::floor(u * edge as f64), edge);
            let y = clamp_index(libm::floor(v * edge as f64), edge);
            face.pixel(x, y)
        }
        Sampling::Bilinear => {
            // Face pixel centers sit at integer + 0.5 coordinates;
            // clamp-to-edge outside the center lattice.
            let sx = u * edge as f64 - 0.5;
            let sy = v * edge as f64 - 0.5;
            let x0f = libm::floor(sx);
            let y0f = libm::floor(sy);
            let fx = sx - x0f;
            let fy = sy - y0f;
            let x0 = clamp_index(x0f, edge);
            let x1 = clamp_index(x0f + 1.0, edge);
            let y0 = clamp_index(y0f, edge);
            let y1 = clamp_index(y0f + 1.0, edge);
            let p00 = face.pixel(x0, y0);
            let p10 = face.pixel(x1, y0);
            let p01 = face.pixel(x0, y1);
            let p11 = face.pixel(x1, y1);
            let mut out = [0u8; 3];
            for c in 0..3 {
                let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
                let bottom = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
                let val = top * (1.0 - fy) + bottom * fy;
                out[c] = libm::round(val).clamp(0.0, 255.0) as u8;
            }
            out
        }
    }
}

fn clamp_index(value: f64, limit: u32) -> u32 {
    if value <= 0.0 {
        0
    } else if value >= (limit - 1) as f64 {
        limit - 1
    } else {
        value as u32
    }
}

/// Iterator-friendly helper: unit direction of an ERP pixel center.
pub fn pixel_index_direction(ix: u32, iy: u32, dims: ErpDims) -> Result<Vec3, GeomError> {
    let (px, py) = pixel_center(ix, iy);
    let s = pixel_to_spherical(px, py, dims)?;
    spherical_to_cartesian(s, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn constant_cubemap(edge: u32, rgb: [u8; 3]) -> CubemapSet {
        CubemapSet::new(core::array::from_fn(|_| RgbRaster::filled(edge, edge, rgb)))
            .expect("faces share one edge")
    }

    const TAU_RT: f64 = 1e-9;

    fn dims(w: u32, h: u32) -> ErpDims {
        ErpDims::new(w, h).unwrap()
    }

    #[test]
    fn erp_dims_validation() {
        assert!(ErpDims::new(1, 4).is_err());
        assert!(ErpDims::new(4, 1).is_err());
        let d = dims(2560, 1280);
        assert!(d.is_full_sphere());
        assert!(!dims(2560, 1281).is_full_sphere());
    }

    #[test]
    fn center_pixel_is_forward() {
        let d = dims(2560, 1280);
        let s = pixel_to_spherical(1280.0, 640.0, d).unwrap();
        assert_eq!(s.lambda(), 0.0);
        assert_eq!(s.phi(), 0.0);
    }

    #[test]
    fn top_row_center_is_north_pole() {
        let d = dims(2560, 1280);
        let s = pixel_to_spherical(1280.0, 0.0, d).unwrap();
        assert_eq!(s.lambda(), 0.0);
        assert!((s.phi() - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn left_edge_is_minus_pi() {
        let d = dims(2560, 1280);
        let s = pixel_to_spherical(0.0, 640.0, d).unwrap();
        assert!((s.lambda() + PI).abs() < 1e-15);
        assert_eq!(s.phi(), 0.0);
    }

    #[test]
    fn pixel_out_of_range_names_coordinate() {
        let d = dims(8, 4);
        let err = pixel_to_spherical(8.0, 1.0, d).unwrap_err();
        assert!(matches!(err, GeomError::PixelOutOfRange { axis: "px", .. }));
        let err = pixel_to_spherical(1.0, -0.25, d).unwrap_err();
        assert!(matches!(err, GeomError::PixelOutOfRange { axis: "py", .. }));
    }

    #[test]
    fn spherical_to_pixel_inverts_examples() {
        let d = dims(2560, 1280);
        let (px, py) = spherical_to_pixel(SphericalCoord::new(0.0, 0.0).unwrap(), d);
        assert_eq!((px, py), (1280.0, 640.0));
        let (px, py) = spherical_to_pixel(SphericalCoord::new(-PI, 0.0).unwrap(), d);
        assert_eq!((px, py), (0.0, 640.0));
    }

    #[test]
    fn round_trip_on_grid() {
        let d = dims(2560, 1280);
        for ix in 0..64 {
            for iy in 0..64 {
                let px = (ix as f64 + 0.37) * 40.0;
                let py = (iy as f64 + 0.59) * 20.0;
                let s = pixel_to_spherical(px, py, d).unwrap();
                let (qx, qy) = spherical_to_pixel(s, d);
                assert!((qx - px).abs() < TAU_RT, "px {px} -> {qx}");
                assert!((qy - py).abs() < TAU_RT, "py {py} -> {qy}");
            }
        }
    }

    #[test]
    fn cartesian_examples() {
        let fwd = spherical_to_cartesian(SphericalCoord::new(0.0, 0.0).unwrap(), 1.0).unwrap();
        assert_eq!((fwd.x, fwd.y, fwd.z), (0.0, 0.0, -1.0));

        let up = spherical_to_cartesian(SphericalCoord::new(0.0, PI / 2.0).unwrap(), 3.0).unwrap();
        assert!(up.x.abs() < 1e-9);
        assert!((up.y - 3.0).abs() < 1e-9);
        assert!(up.z.abs() < 1e-9);

        // Verbatim transform: azimuth +pi/2 lands on -X.
        let side =
            spherical_to_cartesian(SphericalCoord::new(PI / 2.0, 0.0).unwrap(), 2.0).unwrap();
        assert!((side.x + 2.0).abs() < 1e-9);
        assert!(side.y.abs() < 1e-9);
        assert!(side.z.abs() < 1e-9);
    }

    #[test]
    fn azimuth_sign_flips_x_only() {
        let s = SphericalCoord::new(0.7, 0.2).unwrap();
        let a = spherical_to_cartesian_signed(s, 2.0, AzimuthSign::Plus).unwrap();
        let b = spherical_to_cartesian_signed(s, 2.0, AzimuthSign::Minus).unwrap();
        assert_eq!(a.x, -b.x);
        assert_eq!(a.y, b.y);
        assert_eq!(a.z, b.z);
    }

    #[test]
    fn bad_distance_rejected() {
        let s = SphericalCoord::new(0.0, 0.0).unwrap();
        assert!(spherical_to_cartesian(s, -1.0).is_err());
        assert!(spherical_to_cartesian(s, f64::NAN).is_err());
    }

    #[test]
    fn pixel_depth_composition() {
        let d = dims(2560, 1280);
        let p = pixel_depth_to_point(1280.0, 640.0, d, 5.0).unwrap();
        assert_eq!((p.x, p.y, p.z), (0.0, 0.0, -5.0));

        let p = pixel_depth_to_point(1280.0, 0.0, d, 1.0).unwrap();
        assert!(p.x.abs() < 1e-9 && (p.y - 1.0).abs() < 1e-9 && p.z.abs() < 1e-9);

        assert!(pixel_depth_to_point(10.0, 10.0, d, 0.0).is_err());
        assert!(pixel_depth_to_point(10.0, 10.0, d, -2.0).is_err());
    }

    #[test]
    fn face_classification_examples() {
        assert_eq!(
            direction_to_face(Vec3::new(0.0, 0.0, -1.0)).unwrap(),
            CubeFace::Front
        );
        assert_eq!(
            direction_to_face(Vec3::new(0.1, 0.9, 0.2)).unwrap(),
            CubeFace::Top
        );
        // Exact three-way tie resolves Z-first.
        assert_eq!(
            direction_to_face(Vec3::new(1.0, 1.0, 1.0)).unwrap(),
            CubeFace::Back
        );
        assert!(matches!(
            direction_to_face(Vec3::ZERO),
            Err(GeomError::ZeroVector)
        ));
    }

    #[test]
    fn face_x_y_tie_prefers_x() {
        assert_eq!(
            direction_to_face(Vec3::new(1.0, 1.0, 0.5)).unwrap(),
            CubeFace::Right
        );
    }

    #[test]
    fn face_set_roundtrip() {
        let set: FaceSet = [CubeFace::Front, CubeFace::Top].into_iter().collect();
        assert_eq!(set.len(), 2);
        assert!(set.contains(CubeFace::Front));
        assert!(!set.contains(CubeFace::Back));
        let names: Vec<&str> = set.iter().map(|f| f.name()).collect();
        assert_eq!(names, vec!["Front", "Top"]);
    }

    #[test]
    fn face_shares_match_solid_angle() {
        let shares = face_share_histogram(dims(512, 256));
        for (i, share) in shares.iter().enumerate() {
            assert!(
                (share - 1.0 / 6.0).abs() < 0.03,
                "face {i} share {share} off 1/6"
            );
        }
    }

    #[test]
    fn stitch_constant_cubemap_is_constant() {
        let cube = constant_cubemap(16, [7, 99, 201]);
        let d = dims(64, 32);
        for sampling in [Sampling::Nearest, Sampling::Bilinear] {
            let erp = stitch_cubemap_to_erp(&cube, d, sampling);
            for iy in 0..32 {
                for ix in 0..64 {
                    assert_eq!(erp.pixel(ix, iy), [7, 99, 201]);
                }
            }
        }
    }

    #[test]
    fn stitch_regions_match_classification() {
        let colors: [[u8; 3]; 6] = [
            [255, 0, 0],
            [0, 255, 0],
            [0, 0, 255],
            [255, 255, 0],
            [0, 255, 255],
            [255, 0, 255],
        ];
        let faces = core::array::from_fn(|i| RgbRaster::filled(8, 8, colors[i]));
        let cube = CubemapSet::new(faces).unwrap();
        let d = dims(128, 64);
        let erp = stitch_cubemap_to_erp(&cube, d, Sampling::Nearest);
        for iy in 0..64 {
            for ix in 0..128 {
                let face = pixel_index_direction(ix, iy, d)
                    .and_then(direction_to_face)
                    .unwrap();
                assert_eq!(erp.pixel(ix, iy), colors[face.index()]);
            }
        }
    }

    proptest! {
        #[test]
        fn prop_round_trip(px in 0.0f64..2560.0, py in 0.0f64..1280.0) {
            let d = dims(2560, 1280);
            let s = pixel_to_spherical(px, py, d).unwrap();
            let (qx, qy) = spherical_to_pixel(s, d);
            prop_assert!((qx - px).abs() < TAU_RT);
            prop_assert!((qy - py).abs() < TAU_RT);
        }

        #[test]
        fn prop_radius_preserved(
            lambda in -PI..PI,
            phi in -PI/2.0..PI/2.0,
            dist in 0.0f64..1e4,
        ) {
            let s = SphericalCoord::new(lambda, phi).unwrap();
            let v = spherical_to_cartesian(s, dist).unwrap();
            prop_assert!((v.norm() - dist).abs() < 1e-9 * dist.max(1.0));
        }

        #[test]
        fn prop_antipodal_faces_opposite(
            x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0,
        ) {
            let v = Vec3::new(x, y, z);
            // Skip ties and the zero vector; ties are measure zero but
            // proptest shrinks toward them.
            let (ax, ay, az) = (x.abs(), y.abs(), z.abs());
            prop_assume!(ax != ay && ay != az && ax != az);
            prop_assume!(ax + ay + az > 1e-12);
            let f = direction_to_face(v).unwrap();
            let g = direction_to_face(v.neg()).unwrap();
            prop_assert_eq!(f.opposite(), g);
        }

        #[test]
        fn prop_unit_direction_norm(ix in 0u32..256, iy in 0u32..128) {
            let d = dims(256, 128);
            let v = pixel_index_direction(ix, iy, d).unwrap();
            prop_assert!((v.norm() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn prop_wrap_azimuth(lambda in -100.0f64..100.0) {
            let w = wrap_azimuth(lambda);
            prop_assert!((-PI..PI).contains(&w));
            // Same angle modulo 2*pi.
            let diff = (w - lambda) / (2.0 * PI);
            prop_assert!((diff - libm::round(diff)).abs() < 1e-9);
        }
    }
}
