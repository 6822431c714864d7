//! Little-endian binary formats for volumes (`SDFV`) and shape spaces (`SSPC`).
//!
//! ```text
//! SDFV: "SDFV" | u16 version = 1 | u32 R | f32 values[R³] (x fastest)
//! SSPC: "SSPC" | u16 version = 1 | u32 R | u32 N | f32 mean[R³] | f32 scales[N] | f32 basis[N][R³]
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::sdf::SdfVolume;
use crate::shape_space::ShapeSpace;

const VERSION: u16 = 1;

fn read_f32s<R: Read>(r: &mut R, n: usize, kind: &'static str) -> Result<Vec<f64>> {
    let mut buf = vec![0f32; n];
    r.read_f32_into::<LittleEndian>(&mut buf)
        .map_err(|e| Error::format(kind, format!("truncated payload: {e}")))?;
    Ok(buf.into_iter().map(f64::from).collect())
}

fn write_f32s<W: Write>(w: &mut W, values: &[f64]) -> std::io::Result<()> {
    for v in values {
        w.write_f32::<LittleEndian>(*v as f32)?;
    }
    Ok(())
}

fn read_header<R: Read>(r: &mut R, magic: &[u8; 4], kind: &'static str) -> Result<()> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m).map_err(|_| Error::format(kind, "missing magic"))?;
    if &m != magic {
        return Err(Error::format(kind, format!("bad magic {m:?}")));
    }
    let version = r
        .read_u16::<LittleEndian>()
        .map_err(|_| Error::format(kind, "missing version"))?;
    if version != VERSION {
        return Err(Error::format(kind, format!("unsupported version {version}")));
    }
    Ok(())
}

fn read_dim<R: Read>(r: &mut R, kind: &'static str, what: &str) -> Result<usize> {
    r.read_u32::<LittleEndian>()
        .map(|v| v as usize)
        .map_err(|_| Error::format(kind, format!("missing {what}")))
}

pub fn write_volume<W: Write>(w: &mut W, vol: &SdfVolume) -> std::io::Result<()> {
    w.write_all(b"SDFV")?;
    w.write_u16::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(vol.resolution() as u32)?;
    write_f32s(w, vol.values())
}

pub fn read_volume<R: Read>(r: &mut R) -> Result<SdfVolume> {
    const KIND: &str = "SDFV";
    read_header(r, b"SDFV", KIND)?;
    let res = read_dim(r, KIND, "resolution")?;
    if !(2..=1024).contains(&res) {
        return Err(Error::format(KIND, format!("resolution {res} out of range")));
    }
    let values = read_f32s(r, res * res * res, KIND)?;
    SdfVolume::new(res, values)
}

pub fn write_shape_space<W: Write>(w: &mut W, space: &ShapeSpace) -> std::io::Result<()> {
    w.write_all(b"SSPC")?;
    w.write_u16::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(space.resolution() as u32)?;
    w.write_u32::<LittleEndian>(space.latent_dim() as u32)?;
    write_f32s(w, space.mean())?;
    write_f32s(w, space.scales())?;
    for b in space.basis() {
        write_f32s(w, b)?;
    }
    Ok(())
}

pub fn read_shape_space<R: Read>(r: &mut R) -> Result<ShapeSpace> {
    const KIND: &str = "SSPC";
    read_header(r, b"SSPC", KIND)?;
    let res = read_dim(r, KIND, "resolution")?;
    let n = read_dim(r, KIND, "latent dimension")?;
    if !(2..=1024).contains(&res) || n > 4096 {
        return Err(Error::format(KIND, format!("dimensions R={res} N={n} out of range")));
    }
    let voxels = res * res * res;
    let mean = read_f32s(r, voxels, KIND)?;
    let scales = read_f32s(r, n, KIND)?;
    let basis = (0..n).map(|_| read_f32s(r, voxels, KIND)).collect::<Result<Vec<_>>>()?;
    ShapeSpace::from_parts(res, mean, basis, scales)
}

pub fn save_volume(path: impl AsRef<Path>, vol: &SdfVolume) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_volume(&mut w, vol)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_volume(path: impl AsRef<Path>) -> Result<SdfVolume> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_volume(&mut BufReader::new(f))
}

pub fn save_shape_space(path: impl AsRef<Path>, space: &ShapeSpace) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_shape_space(&mut w, space)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_shape_space(path: impl AsRef<Path>) -> Result<ShapeSpace> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_shape_space(&mut BufReader::new(f))
}
