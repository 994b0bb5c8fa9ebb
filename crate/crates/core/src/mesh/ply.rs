//! PLY reading and writing (ascii and binary little-endian).
//!
//! Any element/property layout is accepted while reading; only `vertex`
//! (x, y, z, optional red/green/blue and nx/ny/nz) and `face`
//! (`vertex_indices` or `vertex_index` list) are interpreted. Polygons with
//! more than three corners are fan-triangulated.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use log::warn;

use super::{Mesh, MeshError, MeshResult, UpAxis};
use crate::geom::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
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
    fn parse(name: &str) -> Option<Self> {
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

    fn is_float(self) -> bool {
        matches!(self, Scalar::F32 | Scalar::F64)
    }
}

#[derive(Debug, Clone)]
enum PropKind {
    Scalar(Scalar),
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Property {
    name: String,
    kind: PropKind,
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

#[derive(Debug)]
struct Header {
    encoding: PlyEncoding,
    elements: Vec<Element>,
    body_offset: usize,
    body_line: usize,
}

fn parse_err(location: String, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        location,
        message: message.into(),
    }
}

fn line_err(line: usize, message: impl Into<String>) -> MeshError {
    parse_err(format!("line {line}"), message)
}

fn parse_header(bytes: &[u8]) -> MeshResult<Header> {
    let mut offset = 0usize;
    let mut line_no = 0usize;
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let rest = &bytes[offset..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| parse_err(format!("byte {offset}"), "header ended without end_header"))?;
        line_no += 1;
        let line = std::str::from_utf8(&rest[..end])
            .map_err(|_| line_err(line_no, "header is not valid ASCII"))?
            .trim_end_matches('\r');
        offset += end + 1;
        let mut tok = line.split_whitespace();
        let Some(keyword) = tok.next() else { continue };
        if line_no == 1 {
            if keyword != "ply" {
                return Err(line_err(1, "missing `ply` magic"));
            }
            continue;
        }
        match keyword {
            "format" => {
                encoding = Some(match tok.next() {
                    Some("ascii") => PlyEncoding::Ascii,
                    Some("binary_little_endian") => PlyEncoding::BinaryLittleEndian,
                    Some(other) => {
                        return Err(line_err(line_no, format!("unsupported format `{other}`")))
                    }
                    None => return Err(line_err(line_no, "format line without encoding")),
                });
            }
            "comment" | "obj_info" => {}
            "element" => {
                let name = tok
                    .next()
                    .ok_or_else(|| line_err(line_no, "element without name"))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| line_err(line_no, "element without a valid count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            "property" => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| line_err(line_no, "property before any element"))?;
                let ty = tok
                    .next()
                    .ok_or_else(|| line_err(line_no, "property without type"))?;
                let scalar = |name: Option<&str>| -> MeshResult<Scalar> {
                    let name = name.ok_or_else(|| line_err(line_no, "truncated property line"))?;
                    Scalar::parse(name)
                        .ok_or_else(|| line_err(line_no, format!("unsupported property type `{name}`")))
                };
                let kind = if ty == "list" {
                    let count = scalar(tok.next())?;
                    let item = scalar(tok.next())?;
                    if count.is_float() {
                        return Err(line_err(line_no, "list count type must be an integer"));
                    }
                    PropKind::List { count, item }
                } else {
                    PropKind::Scalar(scalar(Some(ty))?)
                };
                let name = tok
                    .next()
                    .ok_or_else(|| line_err(line_no, "property without name"))?;
                element.props.push(Property {
                    name: name.to_string(),
                    kind,
                });
            }
            "end_header" => break,
            other => return Err(line_err(line_no, format!("unknown header keyword `{other}`"))),
        }
    }
    let encoding = encoding.ok_or_else(|| line_err(line_no, "missing format line"))?;
    Ok(Header {
        encoding,
        elements,
        body_offset: offset,
        body_line: line_no + 1,
    })
}

/// Pulls typed values from the body, reporting positions in errors.
trait ValueSource {
    fn next(&mut self, ty: Scalar) -> MeshResult<f64>;
    fn location(&self) -> String;
    /// Called after every element instance.
    fn end_record(&mut self) -> MeshResult<()>;
}

struct AsciiSource<'a> {
    lines: std::iter::Peekable<std::str::Lines<'a>>,
    line_no: usize,
    tokens: Vec<&'a str>,
    pos: usize,
}

impl<'a> AsciiSource<'a> {
    fn new(body: &'a str, first_line: usize) -> Self {
        Self {
            lines: body.lines().peekable(),
            line_no: first_line - 1,
            tokens: Vec::new(),
            pos: 0,
        }
    }
}

impl ValueSource for AsciiSource<'_> {
    fn next(&mut self, ty: Scalar) -> MeshResult<f64> {
        while self.pos >= self.tokens.len() {
            let line = self
                .lines
                .next()
                .ok_or_else(|| parse_err(self.location(), "unexpected end of data"))?;
            self.line_no += 1;
            self.tokens = line.split_whitespace().collect();
            self.pos = 0;
        }
        let tok = self.tokens[self.pos];
        self.pos += 1;
        let bad = || parse_err(format!("line {}", self.line_no), format!("invalid {ty:?} value `{tok}`"));
        Ok(match ty {
            Scalar::F32 => tok.parse::<f32>().map_err(|_| bad())? as f64,
            Scalar::F64 => tok.parse::<f64>().map_err(|_| bad())?,
            _ => {
                let v = tok.parse::<i64>().map_err(|_| bad())?;
                let (lo, hi) = match ty {
                    Scalar::I8 => (i8::MIN as i64, i8::MAX as i64),
                    Scalar::U8 => (0, u8::MAX as i64),
                    Scalar::I16 => (i16::MIN as i64, i16::MAX as i64),
                    Scalar::U16 => (0, u16::MAX as i64),
                    Scalar::I32 => (i32::MIN as i64, i32::MAX as i64),
                    _ => (0, u32::MAX as i64),
                };
                if !(lo..=hi).contains(&v) {
                    return Err(bad());
                }
                v as f64
            }
        })
    }

    fn location(&self) -> String {
        format!("line {}", self.line_no.max(1))
    }

    fn end_record(&mut self) -> MeshResult<()> {
        if self.pos < self.tokens.len() {
            return Err(parse_err(self.location(), "trailing values on element line"));
        }
        self.tokens.clear();
        self.pos = 0;
        Ok(())
    }
}

struct BinarySource<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl ValueSource for BinarySource<'_> {
    fn next(&mut self, ty: Scalar) -> MeshResult<f64> {
        let n = ty.size();
        let Some(b) = self.bytes.get(self.offset..self.offset + n) else {
            return Err(parse_err(self.location(), "unexpected end of data"));
        };
        self.offset += n;
        Ok(match ty {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(b.try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(b.try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(b.try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(b.try_into().unwrap()),
        })
    }

    fn location(&self) -> String {
        format!("byte {}", self.offset)
    }

    fn end_record(&mut self) -> MeshResult<()> {
        Ok(())
    }
}

struct VertexLayout {
    xyz: [usize; 3],
    rgb: Option<([usize; 3], Scalar)>,
    normal: Option<[usize; 3]>,
}

fn vertex_layout(el: &Element, line: usize) -> MeshResult<VertexLayout> {
    let find = |name: &str| el.props.iter().position(|p| p.name == name);
    let scalar_at = |i: usize| match el.props[i].kind {
        PropKind::Scalar(s) => Some(s),
        PropKind::List { .. } => None,
    };
    let triple = |names: [&str; 3]| -> Option<[usize; 3]> {
        Some([find(names[0])?, find(names[1])?, find(names[2])?])
    };
    let xyz = triple(["x", "y", "z"])
        .ok_or_else(|| line_err(line, "vertex element lacks x/y/z properties"))?;
    for &i in &xyz {
        match scalar_at(i) {
            Some(s) if s.is_float() => {}
            _ => {
                return Err(line_err(
                    line,
                    format!("vertex property `{}` must be a float scalar", el.props[i].name),
                ))
            }
        }
    }
    let rgb = triple(["red", "green", "blue"]).and_then(|idx| {
        let ty = scalar_at(idx[0])?;
        idx.iter().all(|&i| scalar_at(i) == Some(ty)).then_some((idx, ty))
    });
    let normal = triple(["nx", "ny", "nz"])
        .filter(|idx| idx.iter().all(|&i| scalar_at(i).is_some_and(Scalar::is_float)));
    Ok(VertexLayout { xyz, rgb, normal })
}

/// Parses PLY bytes. `up_axis` labels the result; no rotation is applied.
pub fn parse_ply(bytes: &[u8], up_axis: UpAxis) -> MeshResult<Mesh> {
    let header = parse_header(bytes)?;
    let body = &bytes[header.body_offset..];
    let mut ascii;
    let mut binary;
    let src: &mut dyn ValueSource = match header.encoding {
        PlyEncoding::Ascii => {
            let text = std::str::from_utf8(body)
                .map_err(|e| parse_err(format!("byte {}", header.body_offset + e.valid_up_to()), "ascii body is not UTF-8"))?;
            ascii = AsciiSource::new(text, header.body_line);
            &mut ascii
        }
        PlyEncoding::BinaryLittleEndian => {
            binary = BinarySource { bytes, offset: header.body_offset };
            &mut binary
        }
    };

    let mut vertices = Vec::new();
    let mut colors: Option<Vec<[u8; 3]>> = None;
    let mut normals: Option<Vec<Vec3>> = None;
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    let mut saw_vertex = false;
    let mut face_index = 0usize;
    let mut deferred_faces: Vec<(usize, Vec<f64>)> = Vec::new();

    for el in &header.elements {
        let layout = if el.name == "vertex" {
            saw_vertex = true;
            let l = vertex_layout(el, header.body_line - 1)?;
            vertices.reserve(el.count);
            if l.rgb.is_some() {
                colors = Some(Vec::with_capacity(el.count));
            }
            if l.normal.is_some() {
                normals = Some(Vec::with_capacity(el.count));
            }
            Some(l)
        } else {
            None
        };
        let face_list = (el.name == "face")
            .then(|| {
                el.props.iter().position(|p| {
                    matches!(p.kind, PropKind::List { .. })
                        && (p.name == "vertex_indices" || p.name == "vertex_index")
                })
            })
            .flatten();
        if el.name == "face" && face_list.is_none() {
            return Err(line_err(header.body_line - 1, "face element lacks a vertex_indices list"));
        }
        if el.name != "vertex" && el.name != "face" {
            warn!("ignoring PLY element `{}` ({} records)", el.name, el.count);
        }

        let mut scalars = vec![0.0f64; el.props.len()];
        for _ in 0..el.count {
            let mut indices: Vec<f64> = Vec::new();
            let location = src.location();
            for (pi, prop) in el.props.iter().enumerate() {
                match prop.kind {
                    PropKind::Scalar(ty) => scalars[pi] = src.next(ty)?,
                    PropKind::List { count, item } => {
                        let n = src.next(count)?;
                        if n < 0.0 {
                            return Err(parse_err(src.location(), "negative list length"));
                        }
                        for _ in 0..n as usize {
                            let v = src.next(item)?;
                            if Some(pi) == face_list {
                                indices.push(v);
                            }
                        }
                    }
                }
            }
            src.end_record()?;
            if let Some(l) = &layout {
                vertices.push(Vec3::new(scalars[l.xyz[0]], scalars[l.xyz[1]], scalars[l.xyz[2]]));
                if let (Some((idx, ty)), Some(c)) = (l.rgb, colors.as_mut()) {
                    let conv = |v: f64| -> u8 {
                        if ty.is_float() {
                            (v.clamp(0.0, 1.0) * 255.0).round() as u8
                        } else {
                            v.clamp(0.0, 255.0) as u8
                        }
                    };
                    c.push(idx.map(|i| conv(scalars[i])));
                }
                if let (Some(idx), Some(ns)) = (l.normal, normals.as_mut()) {
                    ns.push(Vec3::new(scalars[idx[0]], scalars[idx[1]], scalars[idx[2]]));
                }
            }
            if face_list.is_some() {
                if indices.len() < 3 {
                    return Err(parse_err(location, format!("face {face_index} has fewer than 3 vertices")));
                }
                deferred_faces.push((face_index, indices));
                face_index += 1;
            }
        }
    }
    if !saw_vertex {
        return Err(line_err(header.body_line - 1, "no vertex element"));
    }

    let n = vertices.len();
    for (face, idx) in deferred_faces {
        let mut checked = Vec::with_capacity(idx.len());
        for v in idx {
            if v < 0.0 || v as usize >= n {
                return Err(MeshError::IndexOutOfRange {
                    face,
                    index: v as i64,
                    vertex_count: n,
                });
            }
            checked.push(v as u32);
        }
        for k in 1..checked.len() - 1 {
            triangles.push([checked[0], checked[k], checked[k + 1]]);
        }
    }

    if let Some(ns) = normals.as_mut() {
        let tolerant = ns
            .iter()
            .all(|v| (v.norm() - 1.0).abs() <= super::NORMAL_TOLERANCE);
        if !tolerant {
            if ns.iter().any(|v| !v.norm().is_finite() || v.norm() <= 0.0) {
                warn!("PLY normals contain zero-length vectors; dropping normals");
                normals = None;
            } else {
                for v in ns.iter_mut() {
                    *v /= v.norm();
                }
            }
        }
    }

    Mesh::new(vertices, colors, normals, triangles, up_axis)
}

/// Reads a PLY file. See [`parse_ply`].
pub fn load_ply(path: impl AsRef<Path>, up_axis: UpAxis) -> MeshResult<Mesh> {
    let bytes = std::fs::read(path)?;
    parse_ply(&bytes, up_axis)
}

/// Serializes a mesh. Positions and normals are stored as float32.
pub fn write_ply<W: Write>(mesh: &Mesh, mut w: W, encoding: PlyEncoding) -> MeshResult<()> {
    let fmt = match encoding {
        PlyEncoding::Ascii => "ascii",
        PlyEncoding::BinaryLittleEndian => "binary_little_endian",
    };
    writeln!(w, "ply")?;
    writeln!(w, "format {fmt} 1.0")?;
    writeln!(w, "element vertex {}", mesh.vertex_count())?;
    for c in ["x", "y", "z"] {
        writeln!(w, "property float {c}")?;
    }
    if mesh.colors().is_some() {
        for c in ["red", "green", "blue"] {
            writeln!(w, "property uchar {c}")?;
        }
    }
    if mesh.normals().is_some() {
        for c in ["nx", "ny", "nz"] {
            writeln!(w, "property float {c}")?;
        }
    }
    writeln!(w, "element face {}", mesh.triangle_count())?;
    writeln!(w, "property list uchar int vertex_indices")?;
    writeln!(w, "end_header")?;

    for i in 0..mesh.vertex_count() {
        let p = mesh.vertices()[i].map(|c| c as f32);
        let rgb = mesh.colors().map(|c| c[i]);
        let nrm = mesh.normals().map(|n| n[i].map(|c| c as f32));
        match encoding {
            PlyEncoding::Ascii => {
                write!(w, "{} {} {}", p.x, p.y, p.z)?;
                if let Some(c) = rgb {
                    write!(w, " {} {} {}", c[0], c[1], c[2])?;
                }
                if let Some(n) = nrm {
                    write!(w, " {} {} {}", n.x, n.y, n.z)?;
                }
                writeln!(w)?;
            }
            PlyEncoding::BinaryLittleEndian => {
                for c in p.iter() {
                    w.write_all(&c.to_le_bytes())?;
                }
                if let Some(c) = rgb {
                    w.write_all(&c)?;
                }
                if let Some(n) = nrm {
                    for c in n.iter() {
                        w.write_all(&c.to_le_bytes())?;
                    }
                }
            }
        }
    }
    for t in mesh.triangles() {
        match encoding {
            PlyEncoding::Ascii => writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?,
            PlyEncoding::BinaryLittleEndian => {
                w.write_all(&[3u8])?;
                for &i in t {
                    w.write_all(&(i as i32).to_le_bytes())?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_ply_file(mesh: &Mesh, path: impl AsRef<Path>, encoding: PlyEncoding) -> MeshResult<()> {
    let f = BufWriter::new(File::create(path)?);
    write_ply(mesh, f, encoding)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE_ASCII: &str = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";

    #[test]
    fn minimal_ascii() {
        let m = parse_ply(TRIANGLE_ASCII.as_bytes(), UpAxis::ZUp).unwrap();
        assert_eq!(m.vertex_count(), 3);
        assert_eq!(m.triangles(), &[[0, 1, 2]]);
        assert_eq!(m.up_axis(), UpAxis::ZUp);
        assert!(m.colors().is_none());
    }

    #[test]
    fn out_of_range_index() {
        let bad = TRIANGLE_ASCII.replace("3 0 1 2", "3 0 1 7");
        let err = parse_ply(bad.as_bytes(), UpAxis::ZUp).unwrap_err();
        assert!(err.to_string().contains("index 7 out of range"), "{err}");
    }

    #[test]
    fn errors_name_their_position() {
        let bad = TRIANGLE_ASCII.replace("1 0 0", "1 zero 0");
        let err = parse_ply(bad.as_bytes(), UpAxis::ZUp).unwrap_err().to_string();
        assert!(err.contains("line 11"), "{err}");

        let bad = TRIANGLE_ASCII.replace("property float y", "property float128 y");
        let err = parse_ply(bad.as_bytes(), UpAxis::ZUp).unwrap_err().to_string();
        assert!(err.contains("line 5") && err.contains("float128"), "{err}");

        let mut bin = Vec::new();
        let m = parse_ply(TRIANGLE_ASCII.as_bytes(), UpAxis::ZUp).unwrap();
        write_ply(&m, &mut bin, PlyEncoding::BinaryLittleEndian).unwrap();
        bin.truncate(bin.len() - 3);
        let err = parse_ply(&bin, UpAxis::ZUp).unwrap_err().to_string();
        assert!(err.contains("byte"), "{err}");
    }

    #[test]
    fn quads_are_fan_triangulated_and_extra_elements_skipped() {
        let text = "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\nelement face 1\nproperty list uchar int vertex_index\nelement edge 1\nproperty int vertex1\nproperty int vertex2\nend_header\n0 0 0 255 0 0\n1 0 0 0 255 0\n1 1 0 0 0 255\n0 1 0 9 9 9\n4 0 1 2 3\n0 1\n";
        let m = parse_ply(text.as_bytes(), UpAxis::YUp).unwrap();
        assert_eq!(m.triangles(), &[[0, 1, 2], [0, 2, 3]]);
        assert_eq!(m.color(3), [9, 9, 9]);
    }

    #[test]
    fn binary_round_trip_is_bit_exact() {
        let m = crate::fixtures::room_box(10.0, 6.0, 2.5);
        let mut buf = Vec::new();
        write_ply(&m, &mut buf, PlyEncoding::BinaryLittleEndian).unwrap();
        let back = parse_ply(&buf, m.up_axis()).unwrap();
        assert_eq!(back, m);
    }

    proptest::proptest! {
        #[test]
        fn ascii_and_binary_agree(coords in proptest::collection::vec(-1.0e4f32..1.0e4, 9), rgb in proptest::collection::vec(0u8..=255, 9)) {
            let vertices = coords.chunks(3).map(|c| Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64)).collect();
            let colors = rgb.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
            let m = Mesh::new(vertices, Some(colors), None, vec![[0, 1, 2]], UpAxis::ZUp).unwrap();
            let mut a = Vec::new();
            let mut b = Vec::new();
            write_ply(&m, &mut a, PlyEncoding::Ascii).unwrap();
            write_ply(&m, &mut b, PlyEncoding::BinaryLittleEndian).unwrap();
            let ma = parse_ply(&a, UpAxis::ZUp).unwrap();
            let mb = parse_ply(&b, UpAxis::ZUp).unwrap();
            proptest::prop_assert_eq!(&ma, &mb);
            proptest::prop_assert_eq!(&ma, &m);
        }
    }
}
