//! Binary map checkpoints.
//!
//! Single self-contained container, little-endian throughout:
//!
//! ```text
//! offset  size  field
//! 0       8     magic "WEFTMAP0"
//! 8       4     format version (u32) = 1
//! 12      48    scene bounds: min.xyz then max.xyz as f64
//! 60      4     field count (u32) = 4, order: geometry coarse, geometry
//!               fine, appearance coarse, appearance fine
//! per field:
//!         1     variant tag (u8): 0 = tri-plane, 1 = cp, 2 = six-axis
//!         4     rank (u32)
//!         4     channels (u32)
//!         12    knot counts along x, y, z (3 x u32)
//!         4     factor count (u32)
//!         per factor, in the variant's declared order (tri-plane: xy, yz,
//!         zx; cp: x, y, z; six-axis: x_y, y_x, y_z, z_y, z_x, x_z):
//!         8     value count (u64)
//!         4n    values as f32
//! per decoder (geometry head then appearance head):
//!         4+4+4 input, hidden, output widths (u32)
//!         1     output activation (u8): 0 = tanh, 1 = logistic
//!         4x    w1, b1, w2, b2 blocks, each: u64 count then f32 values
//! 4             log of the density sharpness (f32)
//! ```
//!
//! Values are stored as f32; loading widens to the engine's f64. A
//! save -> load -> save cycle is bit-exact.

use std::io::Read;
use std::path::Path;

use nalgebra::Vector3;
use thiserror::Error;

use crate::decoder::{BetaParam, MlpParams, OutputActivation};
use crate::field::{
    Axis, AxisFactor, FactorizedField, FeaturePlane, FieldError, PlaneId, SceneBounds,
    ScenePyramid, VariantKind,
};
use crate::map::SceneMap;

const MAGIC: &[u8; 8] = b"WEFTMAP0";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a map checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("truncated or corrupt checkpoint")]
    Truncated,
    #[error("invalid field data: {0}")]
    Field(#[from] FieldError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn f32_slice(&mut self, values: &[f64]) {
        self.u64(values.len() as u64);
        for v in values {
            self.buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.pos + n > self.buf.len() {
            return Err(CheckpointError::Truncated);
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f32_vec(&mut self) -> Result<Vec<f64>, CheckpointError> {
        let n = self.u64()? as usize;
        let bytes = self.take(n * 4)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect())
    }
}

fn variant_tag(kind: VariantKind) -> u8 {
    match kind {
        VariantKind::TriPlane => 0,
        VariantKind::Cp => 1,
        VariantKind::SixAxis => 2,
    }
}

fn write_field(w: &mut Writer, field: &FactorizedField) {
    w.u8(variant_tag(field.kind()));
    w.u32(field.rank() as u32);
    w.u32(field.channels() as u32);
    let res = field.resolutions();
    for r in res {
        w.u32(r as u32);
    }
    w.u32(field.factor_lens().len() as u32);
    field.for_each_factor(|values| w.f32_slice(values));
}

fn read_field(r: &mut Reader) -> Result<FactorizedField, CheckpointError> {
    let tag = r.u8()?;
    let rank = r.u32()? as usize;
    let channels = r.u32()? as usize;
    let res = [r.u32()? as usize, r.u32()? as usize, r.u32()? as usize];
    let factor_count = r.u32()? as usize;
    let mut factors = Vec::with_capacity(factor_count);
    for _ in 0..factor_count {
        factors.push(r.f32_vec()?);
    }
    let [lx, ly, lz] = res;
    let field = match tag {
        0 => {
            if factors.len() != 3 {
                return Err(CheckpointError::Truncated);
            }
            let mut it = factors.into_iter();
            FactorizedField::triplane(
                [
                    FeaturePlane::from_values(PlaneId::Xy, lx, ly, channels, it.next().unwrap())?,
                    FeaturePlane::from_values(PlaneId::Yz, ly, lz, channels, it.next().unwrap())?,
                    FeaturePlane::from_values(PlaneId::Zx, lz, lx, channels, it.next().unwrap())?,
                ],
                channels,
            )?
        }
        1 => {
            if factors.len() != 3 {
                return Err(CheckpointError::Truncated);
            }
            let mut it = factors.into_iter();
            FactorizedField::cp(
                [
                    AxisFactor::from_values(Axis::X, lx, rank, channels, it.next().unwrap())?,
                    AxisFactor::from_values(Axis::Y, ly, rank, channels, it.next().unwrap())?,
                    AxisFactor::from_values(Axis::Z, lz, rank, channels, it.next().unwrap())?,
                ],
                rank,
                channels,
            )?
        }
        2 => {
            if factors.len() != 6 {
                return Err(CheckpointError::Truncated);
            }
            let mut it = factors.into_iter();
            let lens = [lx, ly, ly, lz, lz, lx];
            let axes = [Axis::X, Axis::Y, Axis::Y, Axis::Z, Axis::Z, Axis::X];
            let mut fs = Vec::with_capacity(6);
            for k in 0..6 {
                fs.push(AxisFactor::from_values(
                    axes[k],
                    lens[k],
                    rank,
                    channels,
                    it.next().unwrap(),
                )?);
            }
            let fs: [AxisFactor; 6] = fs.try_into().unwrap();
            FactorizedField::sixaxis(fs, rank, channels)?
        }
        _ => return Err(CheckpointError::Truncated),
    };
    Ok(field)
}

fn write_decoder(w: &mut Writer, p: &MlpParams) {
    w.u32(p.input_width as u32);
    w.u32(p.hidden_width as u32);
    w.u32(p.output_width as u32);
    w.u8(match p.activation {
        OutputActivation::Tanh => 0,
        OutputActivation::Logistic => 1,
    });
    w.f32_slice(&p.w1);
    w.f32_slice(&p.b1);
    w.f32_slice(&p.w2);
    w.f32_slice(&p.b2);
}

fn read_decoder(r: &mut Reader) -> Result<MlpParams, CheckpointError> {
    let input = r.u32()? as usize;
    let hidden = r.u32()? as usize;
    let output = r.u32()? as usize;
    let activation = match r.u8()? {
        0 => OutputActivation::Tanh,
        1 => OutputActivation::Logistic,
        _ => return Err(CheckpointError::Truncated),
    };
    let mut p = MlpParams::zeros(input, hidden, output, activation);
    p.w1 = r.f32_vec()?;
    p.b1 = r.f32_vec()?;
    p.w2 = r.f32_vec()?;
    p.b2 = r.f32_vec()?;
    if p.w1.len() != hidden * input || p.w2.len() != output * hidden {
        return Err(CheckpointError::Truncated);
    }
    Ok(p)
}

pub fn to_bytes(map: &SceneMap) -> Vec<u8> {
    let mut w = Writer { buf: Vec::new() };
    w.buf.extend_from_slice(MAGIC);
    w.u32(VERSION);
    let b = map.bounds();
    for v in [b.min.x, b.min.y, b.min.z, b.max.x, b.max.y, b.max.z] {
        w.f64(v);
    }
    w.u32(4);
    write_field(&mut w, &map.pyramid.geom_coarse);
    write_field(&mut w, &map.pyramid.geom_fine);
    write_field(&mut w, &map.pyramid.app_coarse);
    write_field(&mut w, &map.pyramid.app_fine);
    write_decoder(&mut w, &map.geo_decoder);
    write_decoder(&mut w, &map.app_decoder);
    w.buf
        .extend_from_slice(&(map.beta.log_beta as f32).to_le_bytes());
    w.buf
}

pub fn from_bytes(bytes: &[u8]) -> Result<SceneMap, CheckpointError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    let min = Vector3::new(r.f64()?, r.f64()?, r.f64()?);
    let max = Vector3::new(r.f64()?, r.f64()?, r.f64()?);
    let bounds = SceneBounds::new(min, max)?;
    let field_count = r.u32()?;
    if field_count != 4 {
        return Err(CheckpointError::Truncated);
    }
    let geom_coarse = read_field(&mut r)?;
    let geom_fine = read_field(&mut r)?;
    let app_coarse = read_field(&mut r)?;
    let app_fine = read_field(&mut r)?;
    let geo_decoder = read_decoder(&mut r)?;
    let app_decoder = read_decoder(&mut r)?;
    let log_beta = f32::from_le_bytes(r.take(4)?.try_into().unwrap()) as f64;
    Ok(SceneMap {
        pyramid: ScenePyramid {
            geom_coarse,
            geom_fine,
            app_coarse,
            app_fine,
            bounds,
        },
        geo_decoder,
        app_decoder,
        beta: BetaParam { log_beta },
    })
}

pub fn save(map: &SceneMap, path: &Path) -> Result<(), CheckpointError> {
    std::fs::write(path, to_bytes(map))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<SceneMap, CheckpointError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    from_bytes(&bytes)
}
