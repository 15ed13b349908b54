use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::mesh::{BoundaryFace, Element, Mesh2D, Shape};
use crate::vring::RingTopology;
use crate::{Error, Result};

/// Writes `mesh` and, for ring meshes, its topology in the sectioned text format.
///
/// ```text
/// $Nodes       count, then `id x y`
/// $Elements    count, then `id shape n0 n1 ... block_id layer_flag`
/// $Faces       count, then `element edge marker`
/// $Ring        1, then `n_blocks block_length dir_x dir_y delta x_in structured`
/// $Layers      2 per layer, then `m|s layer n0 n1 ...`
/// $UpdateMap   count, then `node replacement`
/// ```
pub fn write_mesh(mesh: &Mesh2D, ring: Option<&RingTopology>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_mesh(mesh, ring)).map_err(|e| Error::io(path, e))
}

pub fn format_mesh(mesh: &Mesh2D, ring: Option<&RingTopology>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# ringshear mesh");
    let _ = writeln!(s, "$Nodes\n{}", mesh.node_count());
    for (i, p) in mesh.node_coords.iter().enumerate() {
        let _ = writeln!(s, "{i} {:?} {:?}", p[0], p[1]);
    }
    let _ = writeln!(s, "$Elements\n{}", mesh.element_count());
    for (i, e) in mesh.elements.iter().enumerate() {
        let nodes: Vec<String> = e.nodes.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(s, "{i} {} {} {} {}", e.shape.name(), nodes.join(" "), e.block_id, e.is_update_layer as u8);
    }
    let _ = writeln!(s, "$Faces\n{}", mesh.boundary_faces.len());
    for f in &mesh.boundary_faces {
        let _ = writeln!(s, "{} {} {}", f.element, f.edge, f.marker);
    }
    if let Some(r) = ring {
        let _ = writeln!(s, "$Ring\n1");
        let _ = writeln!(
            s,
            "{} {:?} {:?} {:?} {:?} {:?} {}",
            r.n_blocks, r.block_length, r.direction[0], r.direction[1], r.delta, r.x_in, r.structured as u8
        );
        let _ = writeln!(s, "$Layers\n{}", 2 * r.gamma_m_nodes.len());
        for (side, lists) in [("m", &r.gamma_m_nodes), ("s", &r.gamma_s_nodes)] {
            for (k, nodes) in lists.iter().enumerate() {
                let ids: Vec<String> = nodes.iter().map(|n| n.to_string()).collect();
                let _ = writeln!(s, "{side} {k} {}", ids.join(" "));
            }
        }
        let _ = writeln!(s, "$UpdateMap\n{}", r.update_map.len());
        for (a, b) in &r.update_map {
            let _ = writeln!(s, "{a} {b}");
        }
    }
    s
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<(Mesh2D, Option<RingTopology>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text, path)
}

struct Lines<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
    path: PathBuf,
}

impl<'a> Lines<'a> {
    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse { path: self.path.clone(), line, message: message.into() }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let l = self.lines.get(self.pos).copied();
        self.pos += 1;
        l
    }

    fn last_line(&self) -> usize {
        self.lines.last().map_or(0, |l| l.0)
    }

    fn count(&mut self, section: &str) -> Result<usize> {
        let (ln, l) = self.next().ok_or_else(|| self.err(self.last_line(), format!("{section}: missing count")))?;
        l.parse().map_err(|_| self.err(ln, format!("{section}: expected a count, found '{l}'")))
    }

    fn records(&mut self, section: &str) -> Result<Vec<(usize, Vec<&'a str>)>> {
        let n = self.count(section)?;
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            match self.next() {
                Some((ln, l)) if !l.starts_with('$') => out.push((ln, l.split_whitespace().collect())),
                other => {
                    let ln = other.map_or(self.last_line(), |o| o.0);
                    return Err(self.err(ln, format!("{section}: count says {n} records, found {k}")));
                }
            }
        }
        Ok(out)
    }
}

fn field<T: std::str::FromStr>(lines: &Lines, ln: usize, rec: &[&str], k: usize, what: &str) -> Result<T> {
    let raw = rec.get(k).ok_or_else(|| lines.err(ln, format!("missing {what}")))?;
    raw.parse().map_err(|_| lines.err(ln, format!("invalid {what} '{raw}'")))
}

pub fn parse_mesh(text: &str, path: &Path) -> Result<(Mesh2D, Option<RingTopology>)> {
    let mut lines = Lines {
        lines: text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect(),
        pos: 0,
        path: path.to_path_buf(),
    };
    let mut mesh = Mesh2D::default();
    let mut ring_line: Option<(usize, Vec<&str>)> = None;
    let mut layers: Vec<(usize, Vec<&str>)> = Vec::new();
    let mut update_map = BTreeMap::new();
    let mut seen_nodes = false;
    while let Some((ln, header)) = lines.next() {
        match header {
            "$Nodes" => {
                for (k, (ln, r)) in lines.records("$Nodes")?.into_iter().enumerate() {
                    let id: usize = field(&lines, ln, &r, 0, "node id")?;
                    if id != k {
                        return Err(lines.err(ln, format!("node ids must be consecutive, expected {k}, found {id}")));
                    }
                    mesh.node_coords.push([field(&lines, ln, &r, 1, "x")?, field(&lines, ln, &r, 2, "y")?]);
                }
                seen_nodes = true;
            }
            "$Elements" => {
                if !seen_nodes {
                    return Err(lines.err(ln, "$Elements before $Nodes"));
                }
                let n_nodes = mesh.node_count();
                for (k, (ln, r)) in lines.records("$Elements")?.into_iter().enumerate() {
                    let id: usize = field(&lines, ln, &r, 0, "element id")?;
                    if id != k {
                        return Err(lines.err(ln, format!("element ids must be consecutive, expected {k}, found {id}")));
                    }
                    let name = r.get(1).copied().unwrap_or("");
                    let shape = Shape::from_name(name).ok_or_else(|| lines.err(ln, format!("unknown shape '{name}'")))?;
                    let nn = shape.node_count();
                    if r.len() != nn + 4 {
                        return Err(lines.err(ln, format!("{name} element needs {} fields, found {}", nn + 4, r.len())));
                    }
                    let mut nodes = Vec::with_capacity(nn);
                    for j in 0..nn {
                        let n: usize = field(&lines, ln, &r, 2 + j, "node index")?;
                        if n >= n_nodes {
                            return Err(lines.err(ln, format!("element {id} references missing node {n}")));
                        }
                        nodes.push(n);
                    }
                    let mut el = Element::new(shape, nodes, field(&lines, ln, &r, 2 + nn, "block id")?);
                    el.is_update_layer = field::<u8>(&lines, ln, &r, 3 + nn, "layer flag")? != 0;
                    mesh.elements.push(el);
                }
            }
            "$Faces" => {
                for (ln, r) in lines.records("$Faces")? {
                    let e: usize = field(&lines, ln, &r, 0, "element index")?;
                    let edge: usize = field(&lines, ln, &r, 1, "edge index")?;
                    let marker = r.get(2).ok_or_else(|| lines.err(ln, "missing marker"))?;
                    let Some(el) = mesh.elements.get(e) else {
                        return Err(lines.err(ln, format!("face references missing element {e}")));
                    };
                    if edge >= el.edge_count() {
                        return Err(lines.err(ln, format!("edge {edge} out of range for element {e}")));
                    }
                    mesh.boundary_faces.push(BoundaryFace::new(e, edge, *marker));
                }
            }
            "$Ring" => {
                let mut recs = lines.records("$Ring")?;
                if recs.len() != 1 {
                    return Err(lines.err(ln, "$Ring holds exactly one record"));
                }
                ring_line = recs.pop();
            }
            "$Layers" => layers = lines.records("$Layers")?,
            "$UpdateMap" => {
                let n = mesh.node_count();
                for (ln, r) in lines.records("$UpdateMap")? {
                    let a: usize = field(&lines, ln, &r, 0, "node")?;
                    let b: usize = field(&lines, ln, &r, 1, "replacement")?;
                    if a >= n || b >= n {
                        return Err(lines.err(ln, format!("update map entry {a} -> {b} references a missing node")));
                    }
                    update_map.insert(a, b);
                }
            }
            other => return Err(lines.err(ln, format!("unknown section '{other}'"))),
        }
    }
    mesh.validate_topology()?;
    let Some((ln, r)) = ring_line else {
        return Ok((mesh, None));
    };
    let n_blocks: usize = field(&lines, ln, &r, 0, "n_blocks")?;
    let block_length: f64 = field(&lines, ln, &r, 1, "block_length")?;
    let direction = [field(&lines, ln, &r, 2, "dir_x")?, field(&lines, ln, &r, 3, "dir_y")?];
    let delta: f64 = field(&lines, ln, &r, 4, "delta")?;
    let x_in: f64 = field(&lines, ln, &r, 5, "x_in")?;
    let structured = field::<u8>(&lines, ln, &r, 6, "structured flag")? != 0;
    if n_blocks == 0 || !(block_length > 0.0) {
        return Err(lines.err(ln, "n_blocks and block_length must be positive"));
    }
    let mut gamma_m = Vec::new();
    let mut gamma_s = Vec::new();
    for (ln, rec) in &layers {
        let side = rec.first().copied().unwrap_or("");
        let k: usize = field(&lines, *ln, rec, 1, "layer index")?;
        let mut nodes = Vec::with_capacity(rec.len().saturating_sub(2));
        for j in 2..rec.len() {
            let n: usize = field(&lines, *ln, rec, j, "node index")?;
            if n >= mesh.node_count() {
                return Err(lines.err(*ln, format!("layer references missing node {n}")));
            }
            nodes.push(n);
        }
        let list = match side {
            "m" => &mut gamma_m,
            "s" => &mut gamma_s,
            _ => return Err(lines.err(*ln, format!("layer side must be m or s, found '{side}'"))),
        };
        if k != list.len() {
            return Err(lines.err(*ln, format!("layer {k} out of order")));
        }
        list.push(nodes);
    }
    let moving = mesh.moving_node_flags();
    let x_out = x_in + n_blocks as f64 * block_length;
    let mut ring = RingTopology {
        n_blocks,
        nodes_per_block: moving.iter().filter(|&&m| m).count() / (n_blocks + 1),
        block_length,
        ring_length: (n_blocks + 1) as f64 * block_length,
        direction,
        x_in,
        x_out,
        delta,
        x_crit: x_out + delta,
        update_map,
        gamma_m_nodes: gamma_m,
        gamma_s_nodes: gamma_s,
        structured,
        moving,
    };
    let min_extent = ring.min_moving_extent(&mesh)?;
    ring.set_delta(delta, min_extent)?;
    ring.validate_mesh(&mesh)?;
    Ok((mesh, Some(ring)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = "\
# two triangles
$Nodes
4
0 0 0
1 1 0
2 1 1
3 0 1
$Elements
2
0 tri3 0 1 2 0 0
1 tri3 0 2 3 0 0   # upper half
$Faces
1
0 0 bottom
";

    #[test]
    fn parses_comments_and_sections() {
        let (m, ring) = parse_mesh(SQUARE, Path::new("sq.msh")).unwrap();
        assert!(ring.is_none());
        assert_eq!(m.element_count(), 2);
        assert_eq!(m.boundary_faces[0].marker, "bottom");
        let (m2, _) = parse_mesh(&format_mesh(&m, None), Path::new("x")).unwrap();
        assert_eq!(m, m2);
    }

    #[test]
    fn missing_node_names_the_line() {
        let bad = SQUARE.replace("1 tri3 0 2 3 0 0", "1 tri3 0 2 7 0 0");
        match parse_mesh(&bad, Path::new("bad.msh")) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 11);
                assert!(message.contains("missing node 7"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn count_mismatch_and_unknown_section() {
        let short = SQUARE.replace("$Nodes\n4", "$Nodes\n5");
        assert!(matches!(parse_mesh(&short, Path::new("a")), Err(Error::Parse { line: 8, .. })));
        let unknown = format!("{SQUARE}$Bogus\n0\n");
        assert!(matches!(parse_mesh(&unknown, Path::new("a")), Err(Error::Parse { line: 15, .. })));
    }
}
