//! Binary containers for spectra (`OCTS`) and complex images (`OCTI`), plus
//! 8-bit log-magnitude rasters.
//!
//! Both containers share one little-endian header:
//!
//! | bytes | field                                   |
//! |-------|-----------------------------------------|
//! | 4     | magic                                   |
//! | 2     | version (1)                             |
//! | 4     | rows (`n_axial` for spectra, depth rows for images) |
//! | 4     | `n_lateral`                             |
//! | 4     | `n_bscans`                              |
//! | 2     | sample type (1 = f32, 2 = interleaved complex f32) |
//! | 4     | metadata length                         |
//!
//! followed by UTF-8 JSON metadata and the payload, each A-scan contiguous
//! (B-scan, then lateral position, then row).

use std::fs;
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::grid::AcquisitionGrid;
use crate::image::{ComplexImage, Mask, Spectrogram};
use crate::model::ModelConfig;
use crate::scalar::Real;

pub const SPECTRA_MAGIC: [u8; 4] = *b"OCTS";
pub const IMAGE_MAGIC: [u8; 4] = *b"OCTI";
pub const FORMAT_VERSION: u16 = 1;
pub const SAMPLE_F32: u16 = 1;
pub const SAMPLE_COMPLEX_F32: u16 = 2;
const HEADER_LEN: usize = 24;

/// Metadata keys every container must carry.
pub const REQUIRED_KEYS: [&str; 6] = [
    "k_min",
    "k_max",
    "k0",
    "lateral_pitch",
    "dispersion_a",
    "dispersion_b",
];

/// Acquisition and processing metadata stored as JSON in every container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeMetadata {
    pub k_min: f64,
    pub k_max: f64,
    pub k0: f64,
    pub lateral_pitch: f64,
    pub dispersion_a: f64,
    pub dispersion_b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focal_depth: Option<f64>,
    /// Sampling mask as 0/1 entries; absent means fully sampled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_scheme: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_seed: Option<u64>,
    /// Any further keys, preserved verbatim.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl VolumeMetadata {
    pub fn from_config<T: Real>(config: &ModelConfig<T>) -> Self {
        let g = &config.grid;
        Self {
            k_min: g.k_min().to_f64_lossy(),
            k_max: g.k_max().to_f64_lossy(),
            k0: g.k0().to_f64_lossy(),
            lateral_pitch: g.lateral_pitch().to_f64_lossy(),
            dispersion_a: config.dispersion_a.to_f64_lossy(),
            dispersion_b: config.dispersion_b.to_f64_lossy(),
            focal_depth: Some(config.focal_depth.to_f64_lossy()),
            mask: None,
            mask_scheme: None,
            mask_seed: None,
            extra: Map::new(),
        }
    }

    pub fn grid<T: Real>(&self, n_axial: usize, n_lateral: usize) -> Result<AcquisitionGrid<T>> {
        AcquisitionGrid::new(
            n_axial,
            n_lateral,
            T::lit(self.k_min),
            T::lit(self.k_max),
            T::lit(self.k0),
            T::lit(self.lateral_pitch),
        )
    }

    /// Model configuration implied by the metadata (focus defaults to the middle row).
    pub fn model_config<T: Real>(&self, grid: AcquisitionGrid<T>) -> ModelConfig<T> {
        let mut cfg = ModelConfig::new(grid)
            .with_dispersion(T::lit(self.dispersion_a), T::lit(self.dispersion_b));
        if let Some(f) = self.focal_depth {
            cfg = cfg.with_focal_depth(T::lit(f));
        }
        cfg
    }

    pub fn sampling_mask(&self, n_axial: usize) -> Result<Mask> {
        match &self.mask {
            None => Ok(Mask::full(n_axial)),
            Some(bits) if bits.len() == n_axial => Mask::from_bits(bits),
            Some(bits) => Err(Error::LengthMismatch {
                context: "metadata mask",
                expected: n_axial,
                found: bits.len(),
            }),
        }
    }

    fn parse(bytes: &[u8]) -> Result<Self> {
        let value: Value = serde_json::from_slice(bytes)?;
        let obj = value.as_object().ok_or_else(|| {
            Error::InvalidParameter("metadata must be a JSON object".into())
        })?;
        for key in REQUIRED_KEYS {
            if !obj.contains_key(key) {
                return Err(Error::MissingMetadata(key));
            }
        }
        Ok(serde_json::from_value(value)?)
    }
}

/// Raw spectra of one or more B-scans sharing a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVolume<T> {
    pub metadata: VolumeMetadata,
    pub grid: AcquisitionGrid<T>,
    /// One `n_axial x n_lateral` array per B-scan.
    pub bscans: Vec<Array2<T>>,
}

impl<T: Real> SpectralVolume<T> {
    pub fn from_spectrogram(s: &Spectrogram<T>, mut metadata: VolumeMetadata) -> Self {
        if !s.mask.is_full() {
            metadata.mask = Some(s.mask.to_bits());
        }
        Self {
            metadata,
            grid: s.grid.clone(),
            bscans: vec![s.data.clone()],
        }
    }

    /// B-scan `index` with the stored sampling mask applied.
    pub fn spectrogram(&self, index: usize) -> Result<Spectrogram<T>> {
        let data = self.bscans.get(index).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "B-scan {index} out of range ({} stored)",
                self.bscans.len()
            ))
        })?;
        let mask = self.metadata.sampling_mask(self.grid.n_axial())?;
        Spectrogram::new(data.clone(), mask, self.grid.clone())
    }
}

struct Header {
    rows: usize,
    n_lateral: usize,
    n_bscans: usize,
    sample_type: u16,
    metadata_len: usize,
}

fn encode(magic: [u8; 4], header: &Header, metadata: &VolumeMetadata, payload: &[f32]) -> Result<Vec<u8>> {
    let meta = serde_json::to_vec(metadata)?;
    let as_u32 = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| Error::InvalidParameter(format!("{what} {v} exceeds u32")))
    };
    let mut out = Vec::with_capacity(HEADER_LEN + meta.len() + 4 * payload.len());
    out.extend_from_slice(&magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&as_u32(header.rows, "row count")?.to_le_bytes());
    out.extend_from_slice(&as_u32(header.n_lateral, "lateral count")?.to_le_bytes());
    out.extend_from_slice(&as_u32(header.n_bscans, "B-scan count")?.to_le_bytes());
    out.extend_from_slice(&header.sample_type.to_le_bytes());
    out.extend_from_slice(&as_u32(meta.len(), "metadata length")?.to_le_bytes());
    out.extend_from_slice(&meta);
    for v in payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

fn decode(magic: [u8; 4], sample_type: u16, bytes: &[u8]) -> Result<(Header, VolumeMetadata, Vec<f32>)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let found: [u8; 4] = bytes[0..4].try_into().expect("4 bytes");
    if found != magic {
        return Err(Error::BadMagic {
            expected: magic,
            found,
        });
    }
    let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
    let u32_at = |o: usize| {
        u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize
    };
    let version = u16_at(4);
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let header = Header {
        rows: u32_at(6),
        n_lateral: u32_at(10),
        n_bscans: u32_at(14),
        sample_type: u16_at(18),
        metadata_len: u32_at(20),
    };
    if header.sample_type != sample_type {
        return Err(Error::UnsupportedSampleType(header.sample_type));
    }
    let meta_end = HEADER_LEN + header.metadata_len;
    if bytes.len() < meta_end {
        return Err(Error::Truncated {
            expected: meta_end,
            found: bytes.len(),
        });
    }
    let metadata = VolumeMetadata::parse(&bytes[HEADER_LEN..meta_end])?;
    let per_sample = if sample_type == SAMPLE_COMPLEX_F32 { 8 } else { 4 };
    let expected = header
        .rows
        .checked_mul(header.n_lateral)
        .and_then(|v| v.checked_mul(header.n_bscans))
        .and_then(|v| v.checked_mul(per_sample))
        .and_then(|v| v.checked_add(meta_end))
        .ok_or_else(|| Error::InvalidParameter("declared dimensions overflow".into()))?;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            found: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::TrailingData {
            expected,
            found: bytes.len(),
        });
    }
    let payload = bytes[meta_end..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok((header, metadata, payload))
}

fn to_f32<T: Real>(v: T) -> f32 {
    v.to_f32().unwrap_or(f32::NAN)
}

fn from_f32<T: Real>(v: f32) -> T {
    T::from_f32(v).unwrap_or_else(T::nan)
}

pub fn encode_volume<T: Real>(volume: &SpectralVolume<T>) -> Result<Vec<u8>> {
    let (rows, n_lateral) = volume.grid.spectrum_shape();
    let mut payload = Vec::with_capacity(rows * n_lateral * volume.bscans.len());
    for b in &volume.bscans {
        crate::image::check_shape("B-scan", (rows, n_lateral), b.dim())?;
        for col in b.columns() {
            payload.extend(col.iter().map(|&v| to_f32(v)));
        }
    }
    let header = Header {
        rows,
        n_lateral,
        n_bscans: volume.bscans.len(),
        sample_type: SAMPLE_F32,
        metadata_len: 0,
    };
    encode(SPECTRA_MAGIC, &header, &volume.metadata, &payload)
}

pub fn decode_volume<T: Real>(bytes: &[u8]) -> Result<SpectralVolume<T>> {
    let (h, metadata, payload) = decode(SPECTRA_MAGIC, SAMPLE_F32, bytes)?;
    let grid = metadata.grid(h.rows, h.n_lateral)?;
    let per_scan = h.rows * h.n_lateral;
    let bscans = (0..h.n_bscans)
        .map(|b| {
            let chunk = &payload[b * per_scan..(b + 1) * per_scan];
            // payload is A-scan contiguous, i.e. column-major per B-scan
            Array2::from_shape_fn((h.rows, h.n_lateral), |(i, l)| from_f32(chunk[l * h.rows + i]))
        })
        .collect();
    Ok(SpectralVolume {
        metadata,
        grid,
        bscans,
    })
}

pub fn save_spectrogram<T: Real>(path: impl AsRef<Path>, volume: &SpectralVolume<T>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_volume(volume)?).map_err(|e| Error::io(path, e))
}

pub fn load_spectrogram<T: Real>(path: impl AsRef<Path>) -> Result<SpectralVolume<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_volume(&bytes).map_err(|e| Error::in_file(path, e))
}

pub fn encode_image<T: Real>(image: &ComplexImage<T>, metadata: &VolumeMetadata) -> Result<Vec<u8>> {
    let (rows, n_lateral) = image.data.dim();
    if !image.data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite("image"));
    }
    let mut payload = Vec::with_capacity(2 * rows * n_lateral);
    for col in image.data.columns() {
        for z in col {
            payload.push(to_f32(z.re));
            payload.push(to_f32(z.im));
        }
    }
    let header = Header {
        rows,
        n_lateral,
        n_bscans: 1,
        sample_type: SAMPLE_COMPLEX_F32,
        metadata_len: 0,
    };
    encode(IMAGE_MAGIC, &header, metadata, &payload)
}

pub fn decode_image<T: Real>(bytes: &[u8]) -> Result<(ComplexImage<T>, VolumeMetadata)> {
    let (h, metadata, payload) = decode(IMAGE_MAGIC, SAMPLE_COMPLEX_F32, bytes)?;
    if h.n_bscans != 1 {
        return Err(Error::InvalidParameter(format!(
            "image containers hold one frame, found {}",
            h.n_bscans
        )));
    }
    let grid = metadata.grid(2 * h.rows, h.n_lateral)?;
    let data = Array2::from_shape_fn((h.rows, h.n_lateral), |(i, l)| {
        let o = 2 * (l * h.rows + i);
        Complex::new(from_f32(payload[o]), from_f32(payload[o + 1]))
    });
    Ok((ComplexImage::new(data, grid)?, metadata))
}

pub fn save_image<T: Real>(
    path: impl AsRef<Path>,
    image: &ComplexImage<T>,
    metadata: &VolumeMetadata,
) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_image(image, metadata)?).map_err(|e| Error::io(path, e))
}

pub fn load_image<T: Real>(path: impl AsRef<Path>) -> Result<(ComplexImage<T>, VolumeMetadata)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes).map_err(|e| Error::in_file(path, e))
}

/// Default display window of the log-magnitude raster.
pub const DEFAULT_DYNAMIC_RANGE_DB: f64 = 60.0;

/// Maps `20 log10 |x|` linearly onto `0..=255`, with the image maximum at 255 and
/// everything `dynamic_range_db` or more below it at 0. An all-zero image maps to 0.
pub fn log_raster<T: Real>(image: &Array2<Complex<T>>, dynamic_range_db: f64) -> Result<Array2<u8>> {
    if !(dynamic_range_db > 0.0) || !dynamic_range_db.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "dynamic range must be positive, got {dynamic_range_db} dB"
        )));
    }
    let mag = image.mapv(|z| z.norm().to_f64_lossy());
    let peak = mag.iter().fold(0.0f64, |m, &v| m.max(v));
    if !peak.is_finite() {
        return Err(Error::NonFinite("raster input"));
    }
    if peak == 0.0 {
        return Ok(Array2::zeros(mag.dim()));
    }
    let eps = peak * 1e-12;
    let top = 20.0 * (peak + eps).log10();
    Ok(mag.mapv(|m| {
        let db = 20.0 * (m + eps).log10();
        let level = 255.0 * (1.0 - (top - db) / dynamic_range_db);
        level.round().clamp(0.0, 255.0) as u8
    }))
}

/// Binary portable graymap (P5) encoding of an 8-bit raster.
pub fn encode_pgm(raster: &Array2<u8>) -> Vec<u8> {
    let (rows, cols) = raster.dim();
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.extend(raster.iter());
    out
}

pub fn write_raster<T: Real>(
    path: impl AsRef<Path>,
    image: &Array2<Complex<T>>,
    dynamic_range_db: f64,
) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pgm(&log_raster(image, dynamic_range_db)?);
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads back a P5 raster written by [`write_raster`].
pub fn read_pgm(path: impl AsRef<Path>) -> Result<Array2<u8>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = || Error::InvalidParameter(format!("{} is not a P5 graymap", path.display()));
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad());
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad())?.to_owned());
    }
    pos += 1;
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(bad());
    }
    let cols: usize = fields[1].parse().map_err(|_| bad())?;
    let rows: usize = fields[2].parse().map_err(|_| bad())?;
    let pixels = bytes.get(pos..).ok_or_else(bad)?;
    if pixels.len() != rows * cols {
        return Err(Error::Truncated {
            expected: rows * cols,
            found: pixels.len(),
        });
    }
    Array2::from_shape_vec((rows, cols), pixels.to_vec()).map_err(|_| bad())
}
