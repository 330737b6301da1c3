//! File formats: Wavefront OBJ (triangles), XYZ point text, binary PGM (P5).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::cloud::PointCloud;
use super::mask::BinaryMask;
use super::mesh::TriMesh;
use super::Vec3;
use crate::error::{Error, Result};

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn parse_obj(text: &str, path: &Path) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let xyz: Vec<f64> = it
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::parse(path, format!("line {}: {e}", ln + 1)))?;
                if xyz.len() != 3 {
                    return Err(Error::parse(path, format!("line {}: vertex needs 3 coordinates", ln + 1)));
                }
                vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        let raw: i64 = head
                            .parse()
                            .map_err(|e| Error::parse(path, format!("line {}: {e}", ln + 1)))?;
                        let resolved = if raw < 0 { vertices.len() as i64 + raw } else { raw - 1 };
                        usize::try_from(resolved)
                            .map_err(|_| Error::parse(path, format!("line {}: bad index {raw}", ln + 1)))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(Error::parse(path, format!("line {}: only triangle faces are supported", ln + 1)));
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, faces).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn read_obj(path: &Path) -> Result<TriMesh> {
    parse_obj(&read_text(path)?, path)
}

pub fn obj_string(mesh: &TriMesh) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

pub fn write_obj(path: &Path, mesh: &TriMesh) -> Result<()> {
    write_bytes(path, obj_string(mesh).as_bytes())
}

pub fn parse_xyz(text: &str, path: &Path) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let xyz: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(path, format!("line {}: {e}", ln + 1)))?;
        if xyz.len() != 3 {
            return Err(Error::parse(path, format!("line {}: expected 3 values", ln + 1)));
        }
        points.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
    }
    PointCloud::new(points).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn read_xyz(path: &Path) -> Result<PointCloud> {
    parse_xyz(&read_text(path)?, path)
}

pub fn write_xyz(path: &Path, cloud: &PointCloud) -> Result<()> {
    let mut out = String::new();
    for p in cloud.points() {
        let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
    }
    write_bytes(path, out.as_bytes())
}

/// Decodes a binary PGM; any nonzero sample is a set pixel.
pub fn parse_pgm(bytes: &[u8], path: &Path) -> Result<BinaryMask> {
    let mut pos = 0;
    let mut header = Vec::with_capacity(4);
    while header.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::parse(path, "truncated PGM header"));
        }
        header.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    if header[0] != "P5" {
        return Err(Error::parse(path, format!("expected P5 magic, found {}", header[0])));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|e| Error::parse(path, format!("bad header field {s}: {e}")));
    let (w, h, maxval) = (num(&header[1])?, num(&header[2])?, num(&header[3])?);
    let sample = if maxval < 256 { 1 } else { 2 };
    let data = bytes.get(pos..pos + w * h * sample).ok_or_else(|| Error::parse(path, "truncated PGM raster"))?;
    let bits = data.chunks(sample).map(|c| c.iter().any(|&b| b != 0)).collect();
    BinaryMask::new(w, h, bits)
}

pub fn read_pgm(path: &Path) -> Result<BinaryMask> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes, path)
}

/// Encodes set pixels as 255, others as 0.
pub fn pgm_bytes(mask: &BinaryMask) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    out.extend(mask.bits().iter().map(|&b| if b { 255u8 } else { 0 }));
    out
}

pub fn write_pgm(path: &Path, mask: &BinaryMask) -> Result<()> {
    write_bytes(path, &pgm_bytes(mask))
}
