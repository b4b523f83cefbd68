//! Text interchange formats: facet lists, cellulation posets, assembled
//! sphere cellulations with their octahedron registry, curve systems, and
//! the rendered verification report. Every format round-trips through its
//! parser to an equal in-memory value.

use crate::assembly::{Octahedron, SphereCellulation};
use crate::cellulation::{Cell, Cellulation};
use crate::error::ComplexError;
use crate::simplicial::SimplicialComplex;
use crate::surface::{Curve, CurveSystem};
use crate::verify::{BistellarOutcome, ScalingRow, VerificationReport};
use std::collections::BTreeMap;
use std::fmt::Write as _;

fn bad(msg: impl Into<String>) -> ComplexError {
    ComplexError::Parse(msg.into())
}

// --- facet lists -----------------------------------------------------------

/// Header line `dim n_vertices n_facets`, then one facet per line as
/// space-separated vertex tokens.
pub fn write_facets(c: &SimplicialComplex) -> String {
    let used = c.used_vertices();
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", c.dim(), used.len(), c.facets().len());
    for f in c.facets() {
        let toks: Vec<&str> = f.iter().map(|&v| c.label(v)).collect();
        let _ = writeln!(out, "{}", toks.join(" "));
    }
    out
}

pub fn parse_facets(text: &str) -> Result<SimplicialComplex, ComplexError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("empty facet file"))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(bad("facet header must be `dim n_vertices n_facets`"));
    }
    let dim: usize = parts[0].parse().map_err(|_| bad("bad dim"))?;
    let n_vertices: usize = parts[1].parse().map_err(|_| bad("bad vertex count"))?;
    let n_facets: usize = parts[2].parse().map_err(|_| bad("bad facet count"))?;
    let mut facets: Vec<Vec<String>> = Vec::with_capacity(n_facets);
    for line in lines {
        facets.push(line.split_whitespace().map(|s| s.to_string()).collect());
    }
    if facets.len() != n_facets {
        return Err(bad(format!(
            "facet count mismatch: header says {n_facets}, found {}",
            facets.len()
        )));
    }
    let c = SimplicialComplex::from_labeled_facets(&facets);
    if c.used_vertices().len() != n_vertices {
        return Err(bad(format!(
            "vertex count mismatch: header says {n_vertices}, found {}",
            c.used_vertices().len()
        )));
    }
    if c.dim() != dim {
        return Err(bad(format!("dim mismatch: header says {dim}")));
    }
    Ok(c)
}

// --- cellulation interchange -------------------------------------------------

/// One block per dimension: `id: [signed sub-cell ids]`, with the induced
/// vertex cycle and an optional tag on 2-cells.
pub fn write_cellulation(c: &Cellulation) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "cellulation dim={}", c.dim());
    let _ = writeln!(out, "vertices {}", c.n_vertices());
    let _ = writeln!(out, "{}", c.labels().join(" "));
    for d in 1..=c.dim() {
        let cells = c.cells(d);
        let _ = writeln!(out, "cells dim={d} count={}", cells.len());
        for (id, cell) in cells.iter().enumerate() {
            let bnd: Vec<String> = cell
                .boundary
                .iter()
                .map(|&(s, sign)| format!("{}{}", if sign > 0 { "+" } else { "-" }, s))
                .collect();
            let _ = write!(out, "{id}: [{}]", bnd.join(" "));
            if let Some(cycle) = &cell.cycle {
                let toks: Vec<&str> = cycle.iter().map(|&v| &c.labels()[v][..]).collect();
                let _ = write!(out, " cycle: [{}]", toks.join(" "));
            }
            if let Some(tag) = &cell.tag {
                let _ = write!(out, " tag: {tag}");
            }
            let _ = writeln!(out);
        }
    }
    out
}

pub fn parse_cellulation(text: &str) -> Result<Cellulation, ComplexError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("empty cellulation file"))?;
    let dim: usize = header
        .strip_prefix("cellulation dim=")
        .ok_or_else(|| bad("missing cellulation header"))?
        .trim()
        .parse()
        .map_err(|_| bad("bad dim"))?;
    let vheader = lines.next().ok_or_else(|| bad("missing vertex count"))?;
    let n_vertices: usize = vheader
        .strip_prefix("vertices ")
        .ok_or_else(|| bad("missing vertices line"))?
        .trim()
        .parse()
        .map_err(|_| bad("bad vertex count"))?;
    let labels: Vec<String> = lines
        .next()
        .ok_or_else(|| bad("missing label line"))?
        .split_whitespace()
        .map(|s| s.to_string())
        .collect();
    if labels.len() != n_vertices {
        return Err(bad("label count disagrees with vertex count"));
    }
    let index: BTreeMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let mut c = Cellulation::new(dim, labels.clone());
    for d in 1..=dim {
        let ch = lines.next().ok_or_else(|| bad("missing cells header"))?;
        let rest = ch
            .strip_prefix(&format!("cells dim={d} count="))
            .ok_or_else(|| bad(format!("bad cells header for dim {d}")))?;
        let count: usize = rest.trim().parse().map_err(|_| bad("bad cell count"))?;
        for want_id in 0..count {
            let line = lines.next().ok_or_else(|| bad("truncated cell block"))?;
            let (idpart, rest) = line
                .split_once(':')
                .ok_or_else(|| bad("cell line missing id"))?;
            let id: usize = idpart.trim().parse().map_err(|_| bad("bad cell id"))?;
            if id != want_id {
                return Err(bad(format!("cell ids out of order: {id}")));
            }
            let rest = rest.trim();
            let close = rest.find(']').ok_or_else(|| bad("missing boundary list"))?;
            let bnd_str = &rest[1..close];
            let mut boundary = Vec::new();
            for tok in bnd_str.split_whitespace() {
                let (sign, num) = match tok.as_bytes()[0] {
                    b'+' => (1i8, &tok[1..]),
                    b'-' => (-1i8, &tok[1..]),
                    _ => (1i8, tok),
                };
                boundary.push((
                    num.parse::<usize>().map_err(|_| bad("bad boundary id"))?,
                    sign,
                ));
            }
            let mut tail = rest[close + 1..].trim();
            let mut cycle = None;
            if let Some(rest2) = tail.strip_prefix("cycle: [") {
                let close2 = rest2.find(']').ok_or_else(|| bad("missing cycle close"))?;
                let cyc: Result<Vec<usize>, _> = rest2[..close2]
                    .split_whitespace()
                    .map(|t| index.get(t).copied().ok_or_else(|| bad("unknown token")))
                    .collect();
                cycle = Some(cyc?);
                tail = rest2[close2 + 1..].trim();
            }
            let tag = tail.strip_prefix("tag: ").map(|t| t.trim().to_string());
            c.push_cell_raw(
                d,
                Cell {
                    boundary,
                    cycle,
                    tag,
                },
            );
        }
    }
    c.validate()?;
    Ok(c)
}

// --- sphere cellulation -------------------------------------------------------

/// Tetrahedra with provenance tags plus the octahedron registry, vertex
/// tokens throughout, antipodal pairs separated by `|`.
pub fn write_sphere(s: &SphereCellulation) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "sphere vertices={} tetrahedra={} octahedra={}",
        s.labels.len(),
        s.tetra.len(),
        s.octahedra.len()
    );
    let _ = writeln!(out, "{}", s.labels.join(" "));
    for (t, tag) in s.tetra.iter().zip(&s.tetra_tag) {
        let toks: Vec<&str> = t.iter().map(|&v| &s.labels[v][..]).collect();
        let _ = writeln!(out, "{tag} {}", toks.join(" "));
    }
    for (i, o) in s.octahedra.iter().enumerate() {
        let part = |p: [usize; 2]| format!("{} {}", s.labels[p[0]], s.labels[p[1]]);
        let _ = writeln!(
            out,
            "oct{i}: {} | {} | {}",
            part(o.pairs[0]),
            part(o.pairs[1]),
            part(o.pairs[2])
        );
    }
    out
}

pub fn parse_sphere(text: &str) -> Result<SphereCellulation, ComplexError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("empty sphere file"))?;
    let rest = header
        .strip_prefix("sphere vertices=")
        .ok_or_else(|| bad("missing sphere header"))?;
    let parts: Vec<&str> = rest.split_whitespace().collect();
    let n_vertices: usize = parts[0].parse().map_err(|_| bad("bad vertex count"))?;
    let n_tetra: usize = parts
        .get(1)
        .and_then(|p| p.strip_prefix("tetrahedra="))
        .ok_or_else(|| bad("missing tetrahedra count"))?
        .parse()
        .map_err(|_| bad("bad tetra count"))?;
    let n_oct: usize = parts
        .get(2)
        .and_then(|p| p.strip_prefix("octahedra="))
        .ok_or_else(|| bad("missing octahedra count"))?
        .parse()
        .map_err(|_| bad("bad octa count"))?;
    let labels: Vec<String> = lines
        .next()
        .ok_or_else(|| bad("missing labels"))?
        .split_whitespace()
        .map(|s| s.to_string())
        .collect();
    if labels.len() != n_vertices {
        return Err(bad("label count disagrees with header"));
    }
    let index: BTreeMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let look = |t: &str| -> Result<usize, ComplexError> {
        index.get(t).copied().ok_or_else(|| bad("unknown token"))
    };
    let mut tetra = Vec::with_capacity(n_tetra);
    let mut tetra_tag = Vec::with_capacity(n_tetra);
    for _ in 0..n_tetra {
        let line = lines.next().ok_or_else(|| bad("truncated tetra block"))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(bad("tetra line needs tag + 4 tokens"));
        }
        tetra_tag.push(toks[0].to_string());
        let mut f = [0usize; 4];
        for (i, t) in toks[1..].iter().enumerate() {
            f[i] = look(t)?;
        }
        tetra.push(f);
    }
    let mut octahedra = Vec::with_capacity(n_oct);
    for want in 0..n_oct {
        let line = lines.next().ok_or_else(|| bad("truncated registry"))?;
        let (idpart, rest) = line
            .split_once(':')
            .ok_or_else(|| bad("registry line missing id"))?;
        if idpart.trim() != format!("oct{want}") {
            return Err(bad("registry ids out of order"));
        }
        let groups: Vec<&str> = rest.split('|').collect();
        if groups.len() != 3 {
            return Err(bad("octahedron needs three antipodal pairs"));
        }
        let mut pairs = [[0usize; 2]; 3];
        for (i, g) in groups.iter().enumerate() {
            let toks: Vec<&str> = g.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(bad("antipodal pair needs two tokens"));
            }
            pairs[i] = [look(toks[0])?, look(toks[1])?];
        }
        octahedra.push(Octahedron { pairs });
    }
    Ok(SphereCellulation {
        labels,
        tetra,
        tetra_tag,
        octahedra,
    })
}

// --- curve systems ------------------------------------------------------------

/// Labeled vertex-token walks plus the basepoint token.
pub fn write_curves(cs: &CurveSystem) -> String {
    let mut out = String::new();
    let bp = cs
        .basepoint
        .map(|v| cs.surface.label(v).to_string())
        .unwrap_or_else(|| "-".into());
    let _ = writeln!(out, "curves basepoint={bp}");
    for c in &cs.curves {
        let toks: Vec<&str> = c.walk.iter().map(|&v| cs.surface.label(v)).collect();
        let _ = writeln!(out, "{}: {}", c.label, toks.join(" "));
    }
    out
}

/// Parses walks against a known surface (tokens must resolve there).
pub fn parse_curves(
    text: &str,
    surface: &SimplicialComplex,
) -> Result<(Option<String>, Vec<Curve>), ComplexError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("empty curve file"))?;
    let bp = header
        .strip_prefix("curves basepoint=")
        .ok_or_else(|| bad("missing curves header"))?
        .trim();
    let basepoint = if bp == "-" { None } else { Some(bp.to_string()) };
    let mut curves = Vec::new();
    for line in lines {
        let (label, rest) = line
            .split_once(':')
            .ok_or_else(|| bad("curve line missing label"))?;
        let walk: Result<Vec<usize>, ComplexError> = rest
            .split_whitespace()
            .map(|t| {
                surface
                    .vertex_by_label(t)
                    .ok_or_else(|| bad(format!("unknown vertex token {t}")))
            })
            .collect();
        curves.push(Curve {
            label: label.trim().to_string(),
            walk: walk?,
        });
    }
    Ok((basepoint, curves))
}

// --- reports -------------------------------------------------------------------

/// Structured text: one `key: value` line per field.
pub fn render_report(r: &VerificationReport) -> String {
    let mut out = String::new();
    let f: Vec<String> = r.f_vector.0.iter().map(|v| v.to_string()).collect();
    let _ = writeln!(out, "f_vector: {}", f.join(" "));
    let _ = writeln!(out, "closed_pseudomanifold: {}", r.closed_pseudomanifold);
    let _ = writeln!(out, "manifold: {}", r.manifold);
    let betti: Vec<String> = r.homology.betti().iter().map(|b| b.to_string()).collect();
    let _ = writeln!(out, "betti: {}", betti.join(" "));
    let torsion: Vec<String> = r
        .homology
        .groups
        .iter()
        .flat_map(|g| g.torsion.iter().map(|t| t.to_string()))
        .collect();
    let _ = writeln!(
        out,
        "torsion: {}",
        if torsion.is_empty() {
            "none".to_string()
        } else {
            torsion.join(" ")
        }
    );
    match &r.bistellar {
        Some(b) => {
            let verdict = match b.outcome {
                BistellarOutcome::ReducedToBoundaryOfSimplex => "ReducedToBoundaryOfSimplex",
                BistellarOutcome::Inconclusive => "Inconclusive",
            };
            let _ = writeln!(out, "bistellar: {verdict} moves={}", b.moves_used);
        }
        None => {
            let _ = writeln!(out, "bistellar: skipped");
        }
    }
    let _ = writeln!(out, "elapsed_ms: {}", r.elapsed_ms);
    let _ = writeln!(out, "verdict: {}", if r.passes() { "PASS" } else { "FAIL" });
    out
}

/// Plain-text scaling table.
pub fn render_scaling(rows: &[ScalingRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>5} {:>10} {:>12} {:>14} {:>12} {:>16}",
        "q", "m", "n", "octahedra", "N/n^(5/4)", "log2_bound"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:>5} {:>10} {:>12} {:>14} {:>12.6} {:>16.1}",
            r.q, r.m, r.n, r.octahedra, r.ratio, r.log2_lower_bound
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble_sphere;
    use crate::field::make_field;
    use crate::heffter::{heffter_cellulation, HeffterSpec};
    use crate::simplicial::{boundary_of_simplex, csaszar_torus};
    use crate::surface::{homology_basis, reroute_disjoint, symplectic_basis};

    #[test]
    fn facet_round_trip() {
        for c in [boundary_of_simplex(4), csaszar_torus()] {
            let text = write_facets(&c);
            let back = parse_facets(&text).unwrap();
            assert_eq!(back.facets(), c.facets());
            let tokens: Vec<&str> = back.used_vertices().iter().map(|&v| back.label(v)).collect();
            let orig: Vec<&str> = c.used_vertices().iter().map(|&v| c.label(v)).collect();
            assert_eq!(tokens, orig);
        }
    }

    #[test]
    fn cellulation_round_trip() {
        let f = make_field(5, 1, None).unwrap();
        let spec = HeffterSpec::new(f.clone(), f.element(&[2])).unwrap();
        let c = heffter_cellulation(&spec);
        let text = write_cellulation(&c);
        let back = parse_cellulation(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn sphere_round_trip() {
        let f = make_field(5, 1, None).unwrap();
        let spec = HeffterSpec::new(f.clone(), f.element(&[2])).unwrap();
        let s = assemble_sphere(&spec, 1).unwrap();
        let text = write_sphere(&s);
        let back = parse_sphere(&text).unwrap();
        assert_eq!(back.labels, s.labels);
        assert_eq!(back.tetra, s.tetra);
        assert_eq!(back.octahedra, s.octahedra);
        assert_eq!(back.tetra_tag, s.tetra_tag);
    }

    #[test]
    fn curves_round_trip() {
        let t = csaszar_torus();
        let sys = reroute_disjoint(&symplectic_basis(&homology_basis(&t).unwrap()).unwrap())
            .unwrap()
            .1;
        let text = write_curves(&sys);
        let (bp, curves) = parse_curves(&text, &t).unwrap();
        assert_eq!(bp, Some(t.label(sys.basepoint.unwrap()).to_string()));
        assert_eq!(curves.len(), 2);
        assert_eq!(curves[0].walk, sys.curves[0].walk);
        assert_eq!(curves[1].label, "b1");
    }

    #[test]
    fn report_renders_pass_line() {
        let r = crate::verify::verify_sphere(&boundary_of_simplex(4), 10, 1);
        let text = render_report(&r);
        assert!(text.contains("verdict: PASS"));
        assert!(text.contains("bistellar: ReducedToBoundaryOfSimplex"));
    }
}
