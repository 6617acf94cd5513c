//! PLY reader (ASCII, binary little- and big-endian) and a binary
//! little-endian writer.
//!
//! Only the `vertex` (`x`, `y`, `z`, optional integer `label`) and `face`
//! (`vertex_indices` / `vertex_index` list) elements are interpreted; other
//! elements and properties are skipped. Polygons are fan-triangulated.

use std::fmt::Write as _;

use crate::geom::{PointCloud, TriMesh, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Encoding {
    Ascii,
    BinaryLe,
    BinaryBe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Scalar> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar(n, _) | Property::List(n, _, _) => n,
        }
    }
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

/// Raw content of a PLY file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlyData {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub labels: Option<Vec<bool>>,
}

fn header_err(line: usize, msg: impl Into<String>) -> Error {
    Error::parse(format!("header line {line}"), msg)
}

fn parse_header(bytes: &[u8]) -> Result<(Encoding, Vec<Element>, usize)> {
    const END: &[u8] = b"end_header";
    let mut pos = 0;
    let mut line_no = 0;
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let rest = &bytes[pos..];
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::parse(format!("byte {}", bytes.len()), "truncated header"))?;
        let line = std::str::from_utf8(&rest[..nl])
            .map_err(|_| header_err(line_no + 1, "header is not valid UTF-8"))?
            .trim_end_matches('\r');
        pos += nl + 1;
        line_no += 1;
        if line_no == 1 {
            if line != "ply" {
                return Err(header_err(1, "missing `ply` magic"));
            }
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            [] => {}
            ["comment", ..] | ["obj_info", ..] => {}
            ["format", fmt, version] => {
                if *version != "1.0" {
                    return Err(Error::UnsupportedFeature(format!("PLY version {version}")));
                }
                encoding = Some(match *fmt {
                    "ascii" => Encoding::Ascii,
                    "binary_little_endian" => Encoding::BinaryLe,
                    "binary_big_endian" => Encoding::BinaryBe,
                    other => return Err(header_err(line_no, format!("unknown format `{other}`"))),
                });
            }
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| header_err(line_no, format!("invalid element count `{count}`")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", ct, it, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| header_err(line_no, "property before any element"))?;
                let ct = Scalar::parse(ct).ok_or_else(|| header_err(line_no, format!("unknown type `{ct}`")))?;
                let it = Scalar::parse(it).ok_or_else(|| header_err(line_no, format!("unknown type `{it}`")))?;
                el.properties.push(Property::List(name.to_string(), ct, it));
            }
            ["property", ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| header_err(line_no, "property before any element"))?;
                let ty = Scalar::parse(ty).ok_or_else(|| header_err(line_no, format!("unknown type `{ty}`")))?;
                el.properties.push(Property::Scalar(name.to_string(), ty));
            }
            [kw, ..] if kw.as_bytes() == END => break,
            _ => return Err(header_err(line_no, format!("unrecognized header line `{line}`"))),
        }
    }
    let encoding = encoding.ok_or_else(|| header_err(line_no, "missing format line"))?;
    Ok((encoding, elements, pos))
}

/// Sequential value source over the body.
trait Body {
    fn read(&mut self, ty: Scalar) -> Result<f64>;
    /// Called after each element record (ASCII records are one per line).
    fn end_record(&mut self) -> Result<()> {
        Ok(())
    }
}

struct BinaryBody<'a> {
    bytes: &'a [u8],
    pos: usize,
    little: bool,
}

impl Body for BinaryBody<'_> {
    fn read(&mut self, ty: Scalar) -> Result<f64> {
        let n = ty.size();
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::parse(format!("byte {}", self.pos), "unexpected end of data"));
        }
        let mut buf = [0u8; 8];
        buf[..n].copy_from_slice(&self.bytes[self.pos..end]);
        if !self.little {
            buf[..n].reverse();
        }
        self.pos = end;
        Ok(match ty {
            Scalar::I8 => buf[0] as i8 as f64,
            Scalar::U8 => buf[0] as f64,
            Scalar::I16 => i16::from_le_bytes([buf[0], buf[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([buf[0], buf[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(buf[..4].try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(buf),
        })
    }
}

struct AsciiBody<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    first_line: usize,
    current: Option<(usize, std::str::SplitWhitespace<'a>)>,
}

impl AsciiBody<'_> {
    fn location(&self) -> String {
        match &self.current {
            Some((l, _)) => format!("line {}", self.first_line + l),
            None => "end of file".to_string(),
        }
    }
}

impl Body for AsciiBody<'_> {
    fn read(&mut self, ty: Scalar) -> Result<f64> {
        loop {
            if self.current.is_none() {
                match self.lines.next() {
                    Some((l, text)) if text.trim().is_empty() => {
                        let _ = l;
                        continue;
                    }
                    Some((l, text)) => self.current = Some((l, text.split_whitespace())),
                    None => return Err(Error::parse("end of file", "unexpected end of data")),
                }
            }
            let tok = self.current.as_mut().unwrap().1.next();
            let Some(tok) = tok else {
                return Err(Error::parse(self.location(), "record has too few values"));
            };
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(self.location(), format!("invalid number `{tok}`")))?;
            let integral = !matches!(ty, Scalar::F32 | Scalar::F64);
            if !v.is_finite() || (integral && v.fract() != 0.0) {
                return Err(Error::parse(self.location(), format!("invalid value `{tok}`")));
            }
            return Ok(v);
        }
    }

    fn end_record(&mut self) -> Result<()> {
        if let Some((_, rest)) = self.current.as_mut() {
            if rest.next().is_some() {
                return Err(Error::parse(self.location(), "record has too many values"));
            }
        }
        self.current = None;
        Ok(())
    }
}

fn read_elements(elements: &[Element], body: &mut dyn Body) -> Result<PlyData> {
    let mut data = PlyData::default();
    for el in elements {
        let is_vertex = el.name == "vertex";
        let is_face = el.name == "face";
        let pos = |n: &str| el.properties.iter().position(|p| p.name() == n);
        let (xi, yi, zi) = (pos("x"), pos("y"), pos("z"));
        let li = pos("label");
        let fi = pos("vertex_indices").or_else(|| pos("vertex_index"));
        if is_vertex {
            if xi.is_none() || yi.is_none() || zi.is_none() {
                return Err(Error::parse("header", "vertex element lacks x/y/z"));
            }
            data.vertices.reserve(el.count);
            if li.is_some() {
                data.labels = Some(Vec::with_capacity(el.count));
            }
        }
        for _ in 0..el.count {
            let mut xyz = [0.0; 3];
            for (k, prop) in el.properties.iter().enumerate() {
                match prop {
                    Property::Scalar(_, ty) => {
                        let v = body.read(*ty)?;
                        if is_vertex {
                            if Some(k) == xi {
                                xyz[0] = v;
                            } else if Some(k) == yi {
                                xyz[1] = v;
                            } else if Some(k) == zi {
                                xyz[2] = v;
                            } else if Some(k) == li {
                                data.labels.as_mut().unwrap().push(v != 0.0);
                            }
                        }
                    }
                    Property::List(_, ct, it) => {
                        let n = body.read(*ct)?;
                        if n < 0.0 {
                            return Err(Error::parse("body", "negative list length"));
                        }
                        let n = n as usize;
                        let mut items = Vec::with_capacity(n.min(64));
                        for _ in 0..n {
                            items.push(body.read(*it)?);
                        }
                        if is_face && Some(k) == fi {
                            if n < 3 {
                                return Err(Error::parse("body", format!("face with {n} vertices")));
                            }
                            if items.iter().any(|&v| v < 0.0) {
                                return Err(Error::parse("body", "negative vertex index"));
                            }
                            for j in 1..n - 1 {
                                data.faces
                                    .push([items[0] as usize, items[j] as usize, items[j + 1] as usize]);
                            }
                        }
                    }
                }
            }
            body.end_record()?;
            if is_vertex {
                data.vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
            }
        }
    }
    Ok(data)
}

pub fn parse_ply(bytes: &[u8]) -> Result<PlyData> {
    let (encoding, elements, start) = parse_header(bytes)?;
    let mut data = match encoding {
        Encoding::Ascii => {
            let text = std::str::from_utf8(&bytes[start..])
                .map_err(|e| Error::parse(format!("byte {}", start + e.valid_up_to()), "invalid UTF-8"))?;
            let header_lines = bytes[..start].iter().filter(|&&b| b == b'\n').count();
            let mut body = AsciiBody {
                lines: text.lines().enumerate().peekable(),
                first_line: header_lines + 1,
                current: None,
            };
            let data = read_elements(&elements, &mut body)?;
            if body.lines.any(|(_, l)| !l.trim().is_empty()) {
                return Err(Error::parse("body", "trailing data after last element"));
            }
            data
        }
        Encoding::BinaryLe | Encoding::BinaryBe => {
            let mut body = BinaryBody {
                bytes,
                pos: start,
                little: encoding == Encoding::BinaryLe,
            };
            let data = read_elements(&elements, &mut body)?;
            if body.pos != bytes.len() {
                return Err(Error::parse(
                    format!("byte {}", body.pos),
                    "trailing data after last element",
                ));
            }
            data
        }
    };
    if data.vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
        return Err(Error::parse("body", "non-finite vertex coordinate"));
    }
    if data.labels.as_ref().is_some_and(|l| l.len() != data.vertices.len()) {
        data.labels = None;
    }
    Ok(data)
}

pub fn parse_ply_mesh(bytes: &[u8]) -> Result<TriMesh> {
    let data = parse_ply(bytes)?;
    if data.faces.is_empty() {
        return Err(Error::parse("body", "PLY has no faces"));
    }
    TriMesh::new(data.vertices, data.faces)?.validated()
}

pub fn parse_ply_cloud(bytes: &[u8]) -> Result<PointCloud> {
    let data = parse_ply(bytes)?;
    match data.labels {
        Some(l) => PointCloud::with_labels(data.vertices, l),
        None => PointCloud::new(data.vertices),
    }
}

fn header(vertex_count: usize, labels: bool, face_count: Option<usize>) -> String {
    let mut h = String::from("ply\nformat binary_little_endian 1.0\n");
    writeln!(h, "element vertex {vertex_count}").unwrap();
    h.push_str("property double x\nproperty double y\nproperty double z\n");
    if labels {
        h.push_str("property uchar label\n");
    }
    if let Some(n) = face_count {
        writeln!(h, "element face {n}").unwrap();
        h.push_str("property list uchar uint vertex_indices\n");
    }
    h.push_str("end_header\n");
    h
}

/// Binary little-endian PLY with double coordinates and, when present, a
/// `label` byte per point (1 = foreground).
pub fn write_ply_cloud(cloud: &PointCloud) -> Vec<u8> {
    let labels = cloud.labels();
    let mut out = header(cloud.len(), labels.is_some(), None).into_bytes();
    out.reserve(cloud.len() * 25);
    for (i, p) in cloud.points().iter().enumerate() {
        for c in [p.x, p.y, p.z] {
            out.extend_from_slice(&c.to_le_bytes());
        }
        if let Some(l) = labels {
            out.push(l[i] as u8);
        }
    }
    out
}

pub fn write_ply_mesh(mesh: &TriMesh) -> Result<Vec<u8>> {
    let mut out = header(mesh.vertices().len(), false, Some(mesh.faces().len())).into_bytes();
    for p in mesh.vertices() {
        for c in [p.x, p.y, p.z] {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    for f in mesh.faces() {
        out.push(3);
        for &i in f {
            let i = u32::try_from(i).map_err(|_| Error::Format("vertex index exceeds u32".into()))?;
            out.extend_from_slice(&i.to_le_bytes());
        }
    }
    Ok(out)
}
