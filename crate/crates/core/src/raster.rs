//! Minimal in-memory rasters shared by the geometry and scene layers.
//!
//! These are deliberately plain row-major buffers; encoding and decoding of
//! on-disk formats lives in the companion CLI crate.

use alloc::vec;
use alloc::vec::Vec;

use crate::geom::CubeFace;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RasterError {
    #[error("raster dimensions {width}x{height} require {expected} elements, got {got}")]
    LengthMismatch {
        width: u32,
        height: u32,
        expected: usize,
        got: usize,
    },
    #[error("raster dimensions must be positive, got {width}x{height}")]
    EmptyRaster { width: u32, height: u32 },
    #[error("cube faces must be square with one shared edge length, got {0:?}")]
    MismatchedFaces([(u32, u32); 6]),
}

/// A single-channel row-major plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane<T> {
    width: u32,
    height: u32,
    data: Vec<T>,
}

impl<T: Copy> Plane<T> {
    pub fn filled(width: u32, height: u32, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; (width as usize) * (height as usize)],
        }
    }

    pub fn from_vec(width: u32, height: u32, data: Vec<T>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyRaster { width, height });
        }
        let expected = (width as usize) * (height as usize);
        if data.len() != expected {
            return Err(RasterError::LengthMismatch {
                width,
                height,
                expected,
                got: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> T {
        debug_assert!(x < self.width && y < self.height);
        self.data[(y as usize) * (self.width as usize) + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: T) {
        debug_assert!(x < self.width && y < self.height);
        self.data[(y as usize) * (self.width as usize) + x as usize] = value;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }
}

/// An 8-bit three-channel row-major image (RGB interleaved).
#[derive(Debug, Clone, PartialEq)]
pub struct RgbRaster {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl RgbRaster {
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let n = (width as usize) * (height as usize);
        let mut data = Vec::with_capacity(n * 3);
        for _ in 0..n {
            data.extend_from_slice(&rgb);
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_vec(width: u32, height: u32, data: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyRaster { width, height });
        }
        let expected = (width as usize) * (height as usize) * 3;
        if data.len() != expected {
            return Err(RasterError::LengthMismatch {
                width,
                height,
                expected,
                got: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        debug_assert!(x < self.width && y < self.height);
        let i = ((y as usize) * (self.width as usize) + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        debug_assert!(x < self.width && y < self.height);
        let i = ((y as usize) * (self.width as usize) + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }
}

/// Six square face images of equal edge length, indexed by [`CubeFace`].
#[derive(Debug, Clone, PartialEq)]
pub struct CubemapSet {
    edge: u32,
    faces: [RgbRaster; 6],
}

impl CubemapSet {
    /// Validates that all six faces are square with one common edge length.
    /// Face order follows [`CubeFace::ALL`].
    pub fn new(faces: [RgbRaster; 6]) -> Result<Self, RasterError> {
        let edge = faces[0].width();
        let ok = edge > 0
            && faces
                .iter()
                .all(|f| f.width() == edge && f.height() == edge);
        if !ok {
            let sizes = core::array::from_fn(|i| (faces[i].width(), faces[i].height()));
            return Err(RasterError::MismatchedFaces(sizes));
        }
        Ok(Self { edge, faces })
    }

    pub fn edge(&self) -> u32 {
        self.edge
    }

    pub fn face(&self, face: CubeFace) -> &RgbRaster {
        &self.faces[face.index()]
    }
}
