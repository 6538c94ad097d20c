//! Plain-text network files.
//!
//! ```text
//! netschwarz-network 1
//! dimension 2
//! domain 1 1
//! dirichlet x0- x0+ x1- x1+
//! nodes 3
//! 0 0
//! 0.5 0
//! 1 0
//! edges 2 fiber weight
//! 0 1 0 1
//! 1 2 0 -
//! ```
//!
//! Sections appear in this order. `dirichlet` lists zero or more faces. The
//! `edges` header names the optional per-edge columns (`fiber`, `weight`);
//! a `-` marks a missing value. Coordinates are written with Rust's shortest
//! round-trip decimal formatting, so write-then-read reproduces every `f64`
//! bit for bit. Blank lines and lines starting with `#` are ignored.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::{EdgeSpec, Face, SpatialNetwork};

const MAGIC: &str = "netschwarz-network";
const VERSION: u32 = 1;

pub fn write_network<W: Write>(net: &SpatialNetwork, w: W) -> Result<()> {
    let mut w = std::io::BufWriter::new(w);
    writeln!(w, "{MAGIC} {VERSION}")?;
    writeln!(w, "dimension {}", net.dim())?;
    let dom: Vec<String> = net.domain().iter().map(|l| l.to_string()).collect();
    writeln!(w, "domain {}", dom.join(" "))?;
    let faces: Vec<String> = net.dirichlet_faces().iter().map(Face::to_string).collect();
    if faces.is_empty() {
        writeln!(w, "dirichlet")?;
    } else {
        writeln!(w, "dirichlet {}", faces.join(" "))?;
    }
    writeln!(w, "nodes {}", net.node_count())?;
    let mut line = String::new();
    for p in net.positions() {
        line.clear();
        for (a, x) in p.iter().take(net.dim()).enumerate() {
            if a > 0 {
                line.push(' ');
            }
            line.push_str(&x.to_string());
        }
        writeln!(w, "{line}")?;
    }
    let has_fiber = net.edges().iter().any(|e| e.fiber.is_some());
    let has_weight = net.edges().iter().any(|e| e.weight.is_some());
    let mut header = format!("edges {}", net.edge_count());
    if has_fiber {
        header.push_str(" fiber");
    }
    if has_weight {
        header.push_str(" weight");
    }
    writeln!(w, "{header}")?;
    for e in net.edges() {
        line.clear();
        line.push_str(&format!("{} {}", e.a, e.b));
        if has_fiber {
            line.push(' ');
            line.push_str(&e.fiber.map_or("-".to_string(), |f| f.to_string()));
        }
        if has_weight {
            line.push(' ');
            line.push_str(&e.weight.map_or("-".to_string(), |f| f.to_string()));
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_network(net: &SpatialNetwork, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_network(net, f)
}

struct Lines<R> {
    inner: std::io::Lines<BufReader<R>>,
    number: usize,
}

impl<R: Read> Lines<R> {
    fn next_line(&mut self) -> Result<Option<(usize, String)>> {
        for line in self.inner.by_ref() {
            self.number += 1;
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Ok(Some((self.number, t.to_string())));
        }
        Ok(None)
    }

    fn expect(&mut self, what: &str) -> Result<(usize, String)> {
        self.next_line()?.ok_or_else(|| Error::Parse {
            line: self.number,
            message: format!("unexpected end of file, expected {what}"),
        })
    }

    fn section(&mut self, key: &str) -> Result<(usize, Vec<String>)> {
        let (n, line) = self.expect(key)?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(Error::Parse { line: n, message: format!("expected section '{key}', found '{line}'") });
        }
        Ok((n, parts.map(str::to_string).collect()))
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse { line, message: format!("cannot parse '{s}'") })
}

pub fn read_network<R: Read>(r: R) -> Result<SpatialNetwork> {
    let mut lines = Lines { inner: BufReader::new(r).lines(), number: 0 };
    let (n, magic) = lines.expect("header")?;
    let mut parts = magic.split_whitespace();
    if parts.next() != Some(MAGIC) {
        return Err(Error::Parse { line: n, message: "not a netschwarz network file".into() });
    }
    let version: u32 = parse_num(parts.next().unwrap_or(""), n)?;
    if version != VERSION {
        return Err(Error::Parse { line: n, message: format!("unsupported version {version}") });
    }
    let (n, dim) = lines.section("dimension")?;
    let dim: usize = parse_num(dim.first().map_or("", String::as_str), n)?;
    let (n, dom) = lines.section("domain")?;
    let domain: Vec<f64> = dom.iter().map(|s| parse_num(s, n)).collect::<Result<_>>()?;
    let (n, faces) = lines.section("dirichlet")?;
    let faces: Vec<Face> = faces
        .iter()
        .map(|s| s.parse::<Face>().map_err(|e| Error::Parse { line: n, message: e.to_string() }))
        .collect::<Result<_>>()?;
    let (n, count) = lines.section("nodes")?;
    let node_count: usize = parse_num(count.first().map_or("", String::as_str), n)?;
    let mut positions = Vec::with_capacity(node_count);
    for _ in 0..node_count {
        let (n, line) = lines.expect("node coordinates")?;
        let coords: Vec<f64> = line.split_whitespace().map(|s| parse_num(s, n)).collect::<Result<_>>()?;
        if coords.len() != dim {
            return Err(Error::Parse { line: n, message: format!("expected {dim} coordinates") });
        }
        let mut p = [0.0; 3];
        p[..dim].copy_from_slice(&coords);
        positions.push(p);
    }
    let (n, header) = lines.section("edges")?;
    let edge_count: usize = parse_num(header.first().map_or("", String::as_str), n)?;
    let columns: Vec<&str> = header.iter().skip(1).map(String::as_str).collect();
    for c in &columns {
        if *c != "fiber" && *c != "weight" {
            return Err(Error::Parse { line: n, message: format!("unknown edge column '{c}'") });
        }
    }
    let mut edges = Vec::with_capacity(edge_count);
    for _ in 0..edge_count {
        let (n, line) = lines.expect("edge")?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 + columns.len() {
            return Err(Error::Parse { line: n, message: format!("expected {} fields", 2 + columns.len()) });
        }
        let mut e = EdgeSpec::new(parse_num(fields[0], n)?, parse_num(fields[1], n)?);
        for (c, v) in columns.iter().zip(&fields[2..]) {
            if *v == "-" {
                continue;
            }
            match *c {
                "fiber" => e.fiber = Some(parse_num(v, n)?),
                _ => e.weight = Some(parse_num(v, n)?),
            }
        }
        edges.push(e);
    }
    if let Some((n, line)) = lines.next_line()? {
        return Err(Error::Parse { line: n, message: format!("trailing content '{line}'") });
    }
    SpatialNetwork::new(dim, &domain, positions, edges, faces)
}

pub fn load_network(path: impl AsRef<Path>) -> Result<SpatialNetwork> {
    let f = std::fs::File::open(path)?;
    read_network(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SpatialNetwork {
        SpatialNetwork::new(
            2,
            &[1.0, 1.0],
            vec![[0.0, 0.1, 0.0], [1.0 / 3.0, 0.7, 0.0], [1.0, 0.123456789012345, 0.0]],
            vec![EdgeSpec::new(0, 1).with_fiber(4), EdgeSpec::new(1, 2).with_weight(0.25)],
            vec![Face::lower(0), Face::upper(0)],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let net = sample();
        let mut buf = Vec::new();
        write_network(&net, &mut buf).unwrap();
        let back = read_network(buf.as_slice()).unwrap();
        assert_eq!(back.positions(), net.positions());
        assert_eq!(back.edges(), net.edges());
        assert_eq!(back.dirichlet_faces(), net.dirichlet_faces());
        let mut again = Vec::new();
        write_network(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn reports_line_numbers() {
        let text = "netschwarz-network 1\ndimension 2\ndomain 1 1\ndirichlet\nnodes 1\n0 zero\nedges 0\n";
        match read_network(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
    }
}
