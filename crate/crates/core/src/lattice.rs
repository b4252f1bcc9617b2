//! Mirror-symmetric oriented graphs on closed surfaces.
//!
//! A graph is stored combinatorially. Each vertex has an anti-clockwise list of
//! incident legs, and `rotation[v][0]` is κ_v(1). Each plaquette is a clockwise
//! boundary walk, given as a list of edge traversals. Crossing edges are stored
//! once and are fixed by the mirror.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn opposite(self) -> Self {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeSide {
    Plus,
    Minus,
    Crossing,
}

/// Which end of an edge a leg is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum End {
    Source,
    Target,
}

impl End {
    pub fn flip(self) -> Self {
        match self {
            End::Source => End::Target,
            End::Target => End::Source,
        }
    }
}

/// Half-edge: one end of an edge as seen from the vertex it sits at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Leg {
    pub edge: usize,
    pub end: End,
}

/// One traversal of an edge by a boundary walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pass {
    pub edge: usize,
    pub forward: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vertex {
    pub name: String,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub name: String,
    pub source: usize,
    pub target: usize,
    pub side: EdgeSide,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MirrorGraph {
    pub name: String,
    pub genus: usize,
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub vertex_mirror: Vec<usize>,
    pub edge_mirror: Vec<usize>,
    /// Anti-clockwise legs around each vertex; index 0 is κ_v(1).
    pub rotation: Vec<Vec<Leg>>,
    /// Clockwise boundary walks.
    pub plaquettes: Vec<Vec<Pass>>,
}

/// A failed invariant. `rule` is a stable identifier.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub rule: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.rule, self.detail)
    }
}

/// Split of a crossing plaquette's boundary at the mirror.
///
/// The minus half is `e₀, v₁, …, vₘ, eₘ` in clockwise order. `minus_passes`
/// holds the traversals of `e₀ … eₘ` in that order. The plus half is its
/// mirror image: `wₖ = θ(vₖ)` and `fₖ = θ(eₖ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossingSplit {
    pub plaquette: usize,
    pub minus_passes: Vec<Pass>,
    pub minus_vertices: Vec<usize>,
    pub plus_vertices: Vec<usize>,
    pub plus_edges: Vec<usize>,
}

impl MirrorGraph {
    /// Builds a graph and runs the validation gate.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        genus: usize,
        vertices: Vec<Vertex>,
        edges: Vec<Edge>,
        vertex_mirror: Vec<usize>,
        edge_mirror: Vec<usize>,
        rotation: Vec<Vec<Leg>>,
        plaquettes: Vec<Vec<Pass>>,
    ) -> Result<Self> {
        let g = Self { name: name.into(), genus, vertices, edges, vertex_mirror, edge_mirror, rotation, plaquettes };
        g.checked()
    }

    /// Returns `self` if it has no violations, otherwise a graph error
    /// listing them.
    pub fn checked(self) -> Result<Self> {
        let v = self.validate();
        if v.is_empty() {
            Ok(self)
        } else {
            let msgs: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            Err(Error::Graph(msgs.join("; ")))
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_plaquettes(&self) -> usize {
        self.plaquettes.len()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.plaquettes.len() as i64
    }

    pub fn degree(&self, v: usize) -> usize {
        self.rotation[v].len()
    }

    pub fn leg_vertex(&self, leg: Leg) -> usize {
        let e = &self.edges[leg.edge];
        match leg.end {
            End::Source => e.source,
            End::Target => e.target,
        }
    }

    /// ε_v(e) for the vertex carrying `leg`: `true` is `+` (the source end).
    pub fn epsilon(leg: Leg) -> bool {
        leg.end == End::Source
    }

    /// 0-based position of `leg` in the rotation at `v`.
    pub fn position(&self, v: usize, leg: Leg) -> Option<usize> {
        self.rotation[v].iter().position(|&l| l == leg)
    }

    pub fn leaving_leg(p: Pass) -> Leg {
        Leg { edge: p.edge, end: if p.forward { End::Source } else { End::Target } }
    }

    pub fn arriving_leg(p: Pass) -> Leg {
        Leg { edge: p.edge, end: if p.forward { End::Target } else { End::Source } }
    }

    pub fn pass_start(&self, p: Pass) -> usize {
        self.leg_vertex(Self::leaving_leg(p))
    }

    pub fn pass_end(&self, p: Pass) -> usize {
        self.leg_vertex(Self::arriving_leg(p))
    }

    /// θ_P on legs. The mirror reverses orientation, so the end flips.
    pub fn mirror_leg(&self, leg: Leg) -> Leg {
        Leg { edge: self.edge_mirror[leg.edge], end: leg.end.flip() }
    }

    /// Mirror image of a clockwise walk, again clockwise.
    pub fn mirror_walk(&self, walk: &[Pass]) -> Vec<Pass> {
        walk.iter().rev().map(|p| Pass { edge: self.edge_mirror[p.edge], forward: p.forward }).collect()
    }

    pub fn crossing_edges(&self) -> Vec<usize> {
        (0..self.edges.len()).filter(|&e| self.edges[e].side == EdgeSide::Crossing).collect()
    }

    pub fn vertices_on(&self, side: Side) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&v| self.vertices[v].side == side).collect()
    }

    /// Edges of `H_±`: the bulk edges of that side plus the crossing edges.
    pub fn edges_on(&self, side: Side) -> Vec<usize> {
        let want = match side {
            Side::Plus => EdgeSide::Plus,
            Side::Minus => EdgeSide::Minus,
        };
        (0..self.edges.len())
            .filter(|&e| self.edges[e].side == want || self.edges[e].side == EdgeSide::Crossing)
            .collect()
    }

    /// Legs incident to `v` as determined by the edge list.
    fn incident_legs(&self, v: usize) -> Vec<Leg> {
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if e.source == v {
                out.push(Leg { edge: i, end: End::Source });
            }
            if e.target == v {
                out.push(Leg { edge: i, end: End::Target });
            }
        }
        out
    }

    /// Every violated invariant. An empty list means the graph is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut bad = |rule: &'static str, detail: String| out.push(Violation { rule, detail });
        let nv = self.vertices.len();
        let ne = self.edges.len();
        if nv == 0 {
            bad("nonempty", "graph has no vertices".into());
            return out;
        }
        if self.vertex_mirror.len() != nv || self.edge_mirror.len() != ne || self.rotation.len() != nv {
            bad("shape", "mirror or rotation tables do not match vertex/edge counts".into());
            return out;
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.source >= nv || e.target >= nv {
                bad("shape", format!("edge {} has an endpoint out of range", e.name));
                return out;
            }
            if self.edge_mirror[i] >= ne {
                bad("shape", format!("mirror of edge {} out of range", e.name));
                return out;
            }
        }
        if self.vertex_mirror.iter().any(|&w| w >= nv) {
            bad("shape", "vertex mirror out of range".into());
            return out;
        }

        // θ_P on vertices.
        for v in 0..nv {
            let w = self.vertex_mirror[v];
            let name = &self.vertices[v].name;
            if self.vertex_mirror[w] != v {
                bad("mirror_involution", format!("θ_P(θ_P({name})) ≠ {name}"));
            }
            if w == v {
                bad("vertex_on_mirror", format!("vertex {name} is fixed by θ_P, i.e. lies on the mirror"));
            } else if self.vertices[w].side == self.vertices[v].side {
                bad("mirror_sides", format!("θ_P maps {name} to {} on the same side", self.vertices[w].name));
            }
        }
        // θ_P on edges.
        for e in 0..ne {
            let f = self.edge_mirror[e];
            let ed = &self.edges[e];
            if self.edge_mirror[f] != e {
                bad("mirror_involution", format!("θ_P(θ_P({})) ≠ {}", ed.name, ed.name));
            }
            let fd = &self.edges[f];
            if fd.source != self.vertex_mirror[ed.target] || fd.target != self.vertex_mirror[ed.source] {
                bad(
                    "orientation_reversal",
                    format!("s∘θ_P = θ_P∘t fails for edge {} (mirror {} is not reversed)", ed.name, fd.name),
                );
            }
            let (ss, ts) = (self.vertices[ed.source].side, self.vertices[ed.target].side);
            let expected = match (ss, ts) {
                (Side::Plus, Side::Plus) => EdgeSide::Plus,
                (Side::Minus, Side::Minus) => EdgeSide::Minus,
                _ => EdgeSide::Crossing,
            };
            if ed.side != expected {
                bad("edge_side", format!("edge {} is tagged {:?} but its endpoints give {:?}", ed.name, ed.side, expected));
            }
            if ed.side == EdgeSide::Crossing && f != e {
                bad("crossing_fixed", format!("crossing edge {} is not fixed by θ_P", ed.name));
            }
            if ed.side != EdgeSide::Crossing && f == e {
                bad("crossing_fixed", format!("bulk edge {} is fixed by θ_P", ed.name));
            }
        }

        // Rotation systems.
        let mut rotation_ok = true;
        for v in 0..nv {
            let mut have = self.rotation[v].clone();
            let mut want = self.incident_legs(v);
            have.sort();
            want.sort();
            if have != want {
                rotation_ok = false;
                bad("rotation", format!("cyclic order at {} is not a bijection onto its incident legs", self.vertices[v].name));
            }
        }
        if rotation_ok {
            for v in 0..nv {
                let w = self.vertex_mirror[v];
                let n = self.rotation[v].len();
                if n == 0 || self.rotation[w].len() != n {
                    continue;
                }
                let image: Vec<Leg> = self.rotation[v].iter().rev().map(|&l| self.mirror_leg(l)).collect();
                if !is_cyclic_rotation(&image, &self.rotation[w]) {
                    bad(
                        "mirror_rotation",
                        format!("θ_P does not reverse the cyclic order at {}", self.vertices[v].name),
                    );
                }
            }
        }

        // Plaquettes.
        let mut used: HashMap<(usize, bool), usize> = HashMap::new();
        for (pi, walk) in self.plaquettes.iter().enumerate() {
            if walk.is_empty() {
                bad("plaquette_walk", format!("plaquette {pi} is empty"));
                continue;
            }
            if walk.iter().any(|p| p.edge >= ne) {
                bad("plaquette_walk", format!("plaquette {pi} references an unknown edge"));
                continue;
            }
            let m = walk.len();
            for k in 0..m {
                let (a, b) = (walk[k], walk[(k + 1) % m]);
                let v = self.pass_end(a);
                if self.pass_start(b) != v {
                    bad("plaquette_walk", format!("plaquette {pi} is not a closed walk at step {k}"));
                    continue;
                }
                if !rotation_ok {
                    continue;
                }
                let n = self.degree(v);
                let (pa, pb) = (self.position(v, Self::arriving_leg(a)), self.position(v, Self::leaving_leg(b)));
                if let (Some(pa), Some(pb)) = (pa, pb) {
                    if pb != (pa + 1) % n {
                        bad(
                            "face_tracing",
                            format!("plaquette {pi} does not turn to the next leg anti-clockwise at {}", self.vertices[v].name),
                        );
                    }
                }
            }
            for p in walk {
                *used.entry((p.edge, p.forward)).or_insert(0) += 1;
            }
        }
        for e in 0..ne {
            for fwd in [true, false] {
                let c = used.get(&(e, fwd)).copied().unwrap_or(0);
                if c != 1 {
                    bad(
                        "edge_in_two_faces",
                        format!(
                            "edge {} is traversed {} {c} times (expected once per direction)",
                            self.edges[e].name,
                            if fwd { "forward" } else { "backward" }
                        ),
                    );
                }
            }
        }
        for (pi, walk) in self.plaquettes.iter().enumerate() {
            if walk.iter().any(|p| p.edge >= ne) {
                continue;
            }
            let image = self.mirror_walk(walk);
            if !self.plaquettes.iter().any(|q| is_cyclic_rotation(&image, q)) {
                bad("mirror_plaquettes", format!("mirror image of plaquette {pi} is not a plaquette"));
            }
        }

        let chi = self.euler_characteristic();
        let want = 2 - 2 * self.genus as i64;
        if chi != want {
            bad("euler", format!("|V| − |E| + |P| = {chi}, but genus {} needs {want}", self.genus));
        }
        out
    }

    /// Crossing plaquettes with their canonical split at the mirror.
    pub fn crossing_plaquettes(&self) -> Result<Vec<CrossingSplit>> {
        let mut out = Vec::new();
        for (pi, walk) in self.plaquettes.iter().enumerate() {
            if !walk.iter().any(|p| self.edges[p.edge].side == EdgeSide::Crossing) {
                continue;
            }
            out.push(self.split_plaquette(pi)?);
        }
        Ok(out)
    }

    fn split_plaquette(&self, pi: usize) -> Result<CrossingSplit> {
        let walk = &self.plaquettes[pi];
        let m = walk.len();
        let err = |msg: &str| Err(Error::Structural(format!("plaquette {pi}: {msg}")));
        // Start right after the pass that enters the minus side.
        let enters = |p: Pass| {
            self.edges[p.edge].side == EdgeSide::Crossing && self.vertices[self.pass_end(p)].side == Side::Minus
        };
        let entries: Vec<usize> = (0..m).filter(|&k| enters(walk[k])).collect();
        if entries.len() != 1 {
            return err("crossing plaquettes must enter the minus side exactly once");
        }
        let start = entries[0];
        let mut minus_passes = vec![walk[start]];
        let mut minus_vertices = Vec::new();
        let mut k = (start + 1) % m;
        loop {
            let p = walk[k];
            minus_vertices.push(self.pass_start(p));
            minus_passes.push(p);
            if self.edges[p.edge].side == EdgeSide::Crossing {
                break;
            }
            k = (k + 1) % m;
        }
        let plus_len = m - minus_passes.len();
        if plus_len + 2 != minus_passes.len() {
            return err("boundary halves differ in length");
        }
        let plus_vertices: Vec<usize> = minus_vertices.iter().map(|&v| self.vertex_mirror[v]).collect();
        let plus_edges: Vec<usize> = minus_passes.iter().map(|p| self.edge_mirror[p.edge]).collect();
        // The plus half, walked clockwise from the exit, is the mirror image
        // of the minus half read backwards.
        let exit = k;
        let mut mk = minus_passes.len() - 2;
        let mut q = (exit + 1) % m;
        let mut walked = Vec::new();
        while q != start {
            walked.push(walk[q]);
            q = (q + 1) % m;
        }
        for p in &walked {
            let v = self.pass_start(*p);
            if mk == usize::MAX || v != plus_vertices[mk] || p.edge != plus_edges[mk] {
                return err("boundary halves are not exchanged by θ_P");
            }
            mk = mk.wrapping_sub(1);
        }
        if walked.is_empty() && plus_vertices.len() != 1 {
            return err("boundary halves are not exchanged by θ_P");
        }
        if let Some(last) = walked.last() {
            if self.pass_end(*last) != plus_vertices[0] {
                return err("boundary halves are not exchanged by θ_P");
            }
        } else if self.pass_end(walk[exit]) != plus_vertices[0] {
            return err("boundary halves are not exchanged by θ_P");
        }
        Ok(CrossingSplit { plaquette: pi, minus_passes, minus_vertices, plus_vertices, plus_edges })
    }

    // ---------------------------------------------------------------------
    // Re-presentations of the same surface graph
    // ---------------------------------------------------------------------

    /// Moves κ_v(1) forward by `r` positions.
    pub fn reroot_vertex(&self, v: usize, r: usize) -> Self {
        let mut g = self.clone();
        let n = g.rotation[v].len();
        g.rotation[v].rotate_left(r % n.max(1));
        g
    }

    /// Starts the boundary walk of plaquette `p` `r` steps later.
    pub fn reroot_walk(&self, p: usize, r: usize) -> Self {
        let mut g = self.clone();
        let m = g.plaquettes[p].len();
        g.plaquettes[p].rotate_left(r % m);
        g
    }

    /// Reverses the orientation of `e` together with its mirror image.
    pub fn flip_edge(&self, e: usize) -> Self {
        let mut g = self.clone();
        let mut set = vec![e, self.edge_mirror[e]];
        set.dedup();
        for &f in &set {
            let ed = &mut g.edges[f];
            std::mem::swap(&mut ed.source, &mut ed.target);
            for rot in g.rotation.iter_mut() {
                for l in rot.iter_mut() {
                    if l.edge == f {
                        l.end = l.end.flip();
                    }
                }
            }
            for walk in g.plaquettes.iter_mut() {
                for p in walk.iter_mut() {
                    if p.edge == f {
                        p.forward = !p.forward;
                    }
                }
            }
        }
        g
    }
}

fn is_cyclic_rotation<T: PartialEq>(a: &[T], b: &[T]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    if a.is_empty() {
        return true;
    }
    (0..a.len()).any(|r| (0..a.len()).all(|i| a[(i + r) % a.len()] == b[i]))
}

// ---------------------------------------------------------------------------
// Built-ins
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinGraph {
    ThetaSphere,
    TorusLadder(usize),
}

impl std::str::FromStr for BuiltinGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t == "theta_sphere" {
            return Ok(BuiltinGraph::ThetaSphere);
        }
        if let Some(rest) = t.strip_prefix("torus_ladder(").and_then(|r| r.strip_suffix(')')) {
            let w: usize = rest
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad torus_ladder width in {s:?}")))?;
            return Ok(BuiltinGraph::TorusLadder(w));
        }
        Err(Error::InvalidArgument(format!("unknown builtin graph {s:?}")))
    }
}

pub fn builtin_graph(which: BuiltinGraph) -> Result<MirrorGraph> {
    match which {
        BuiltinGraph::ThetaSphere => theta_sphere(),
        BuiltinGraph::TorusLadder(w) => torus_ladder(w),
    }
}

fn src(edge: usize) -> Leg {
    Leg { edge, end: End::Source }
}

fn tgt(edge: usize) -> Leg {
    Leg { edge, end: End::Target }
}

fn fwd(edge: usize) -> Pass {
    Pass { edge, forward: true }
}

fn bwd(edge: usize) -> Pass {
    Pass { edge, forward: false }
}

/// Two vertices `u ∈ V₋`, `w ∈ V₊` joined by three crossing edges `a, b, c`
/// (all `u → w`): the theta graph on the sphere, cut by the mirror.
pub fn theta_sphere() -> Result<MirrorGraph> {
    let vertices = vec![
        Vertex { name: "u".into(), side: Side::Minus },
        Vertex { name: "w".into(), side: Side::Plus },
    ];
    let edges = ["a", "b", "c"]
        .iter()
        .map(|n| Edge { name: (*n).into(), source: 0, target: 1, side: EdgeSide::Crossing })
        .collect();
    let (a, b, c) = (0, 1, 2);
    MirrorGraph::new(
        "theta_sphere",
        0,
        vertices,
        edges,
        vec![1, 0],
        vec![0, 1, 2],
        vec![vec![src(a), src(c), src(b)], vec![tgt(a), tgt(b), tgt(c)]],
        vec![vec![fwd(a), bwd(b)], vec![fwd(b), bwd(c)], vec![fwd(c), bwd(a)]],
    )
}

/// A ring of `2w` columns on a torus one plaquette high. Column `x` has
/// vertex `x`, horizontal edge `h_x: x → x+1` and a vertical self-loop `v_x`.
/// The mirror is `x ↦ 2w−1−x`; columns `x ≥ w` are on the plus side. The
/// crossing edges are `h_{w−1}` and `h_{2w−1}`. Vertical loops point north on
/// the minus side and south on the plus side.
pub fn torus_ladder(w: usize) -> Result<MirrorGraph> {
    if w == 0 {
        return Err(Error::InvalidArgument("torus_ladder needs w ≥ 1".into()));
    }
    let n = 2 * w;
    let h = |x: usize| x % n;
    let vl = |x: usize| n + (x % n);
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    for x in 0..n {
        let side = if x >= w { Side::Plus } else { Side::Minus };
        vertices.push(Vertex { name: format!("x{x}"), side });
    }
    for x in 0..n {
        let t = (x + 1) % n;
        let side = if x == w - 1 || x == n - 1 {
            EdgeSide::Crossing
        } else if x >= w {
            EdgeSide::Plus
        } else {
            EdgeSide::Minus
        };
        edges.push(Edge { name: format!("h{x}"), source: x, target: t, side });
    }
    for x in 0..n {
        let side = if x >= w { EdgeSide::Plus } else { EdgeSide::Minus };
        edges.push(Edge { name: format!("v{x}"), source: x, target: x, side });
    }
    let vertex_mirror = (0..n).map(|x| n - 1 - x).collect();
    let mut edge_mirror = vec![0; 2 * n];
    for x in 0..n {
        edge_mirror[h(x)] = h(2 * n - 2 - x);
        edge_mirror[vl(x)] = vl(n - 1 - x);
    }
    // East, north, west, south.
    let rotation = (0..n)
        .map(|x| {
            let prev = (x + n - 1) % n;
            if x < w {
                vec![src(h(x)), src(vl(x)), tgt(h(prev)), tgt(vl(x))]
            } else {
                vec![src(h(x)), tgt(vl(x)), tgt(h(prev)), src(vl(x))]
            }
        })
        .collect();
    // Face between columns x and x+1, clockwise from its top-left corner:
    // east along h_x, south along v_{x+1}, west along h_x, north along v_x.
    let south = |x: usize| Pass { edge: vl(x), forward: x % n >= w };
    let north = |x: usize| Pass { edge: vl(x), forward: x % n < w };
    let plaquettes = (0..n).map(|x| vec![fwd(h(x)), south(x + 1), bwd(h(x)), north(x)]).collect();
    MirrorGraph::new(format!("torus_ladder({w})"), 1, vertices, edges, vertex_mirror, edge_mirror, rotation, plaquettes)
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

/// Parses the sectioned graph format:
///
/// ```text
/// name theta_sphere
/// genus 0
/// [vertices]
/// u minus
/// w plus
/// [edges]
/// a u w crossing
/// [mirror]
/// u w
/// a a
/// [rotation]
/// u: *a+ c+ b+
/// w: *a- b- c-
/// [plaquettes]
/// a> b<
/// ```
///
/// In `[rotation]`, `e+` is the source end of `e` and `e-` its target end.
/// Legs are listed anti-clockwise and `*` marks κ_v(1). In `[plaquettes]`,
/// `e>` traverses `e` forward and `e<` backward, and each walk is clockwise.
/// `#` starts a comment.
pub fn parse_graph(text: &str) -> Result<MirrorGraph> {
    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        Header,
        Vertices,
        Edges,
        Mirror,
        Rotation,
        Plaquettes,
    }
    let perr = |line: usize, msg: String| Error::Parse { line, msg };
    let mut section = Section::Header;
    let mut name = String::from("graph");
    let mut genus: Option<usize> = None;
    let mut vertices: Vec<Vertex> = Vec::new();
    let mut vidx: HashMap<String, usize> = HashMap::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut eidx: HashMap<String, usize> = HashMap::new();
    let mut vmirror: BTreeMap<usize, usize> = BTreeMap::new();
    let mut emirror: BTreeMap<usize, usize> = BTreeMap::new();
    let mut rotation: BTreeMap<usize, Vec<Leg>> = BTreeMap::new();
    let mut plaquettes = Vec::new();
    let mut seen_sections = HashSet::new();

    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            section = match line {
                "[vertices]" => Section::Vertices,
                "[edges]" => Section::Edges,
                "[mirror]" => Section::Mirror,
                "[rotation]" => Section::Rotation,
                "[plaquettes]" => Section::Plaquettes,
                _ => return Err(perr(ln, format!("unknown section {line}"))),
            };
            if !seen_sections.insert(line.to_string()) {
                return Err(perr(ln, format!("duplicate section {line}")));
            }
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match section {
            Section::Header => match toks.as_slice() {
                ["name", n] => name = (*n).to_string(),
                ["genus", g] => genus = Some(g.parse().map_err(|_| perr(ln, format!("bad genus {g:?}")))?),
                _ => return Err(perr(ln, format!("expected `name <s>` or `genus <n>`, got {line:?}"))),
            },
            Section::Vertices => {
                let [id, side] = toks.as_slice() else {
                    return Err(perr(ln, "vertex lines are `<id> <plus|minus>`".into()));
                };
                let side = match *side {
                    "plus" => Side::Plus,
                    "minus" => Side::Minus,
                    s => return Err(perr(ln, format!("vertex side must be plus or minus, got {s:?}"))),
                };
                if vidx.insert((*id).to_string(), vertices.len()).is_some() {
                    return Err(perr(ln, format!("duplicate vertex {id}")));
                }
                vertices.push(Vertex { name: (*id).to_string(), side });
            }
            Section::Edges => {
                let [id, s, t, side] = toks.as_slice() else {
                    return Err(perr(ln, "edge lines are `<id> <source> <target> <plus|minus|crossing>`".into()));
                };
                let look = |v: &str| vidx.get(v).copied().ok_or_else(|| perr(ln, format!("unknown vertex {v}")));
                let side = match *side {
                    "plus" => EdgeSide::Plus,
                    "minus" => EdgeSide::Minus,
                    "crossing" => EdgeSide::Crossing,
                    s => return Err(perr(ln, format!("edge side must be plus, minus or crossing, got {s:?}"))),
                };
                let e = Edge { name: (*id).to_string(), source: look(s)?, target: look(t)?, side };
                if eidx.insert((*id).to_string(), edges.len()).is_some() {
                    return Err(perr(ln, format!("duplicate edge {id}")));
                }
                edges.push(e);
            }
            Section::Mirror => {
                let [x, y] = toks.as_slice() else {
                    return Err(perr(ln, "mirror lines are `<id> <id>`".into()));
                };
                if let (Some(&a), Some(&b)) = (vidx.get(*x), vidx.get(*y)) {
                    for (p, q) in [(a, b), (b, a)] {
                        if vmirror.insert(p, q).is_some_and(|old| old != q) {
                            return Err(perr(ln, format!("conflicting mirror for {x}/{y}")));
                        }
                    }
                } else if let (Some(&a), Some(&b)) = (eidx.get(*x), eidx.get(*y)) {
                    for (p, q) in [(a, b), (b, a)] {
                        if emirror.insert(p, q).is_some_and(|old| old != q) {
                            return Err(perr(ln, format!("conflicting mirror for {x}/{y}")));
                        }
                    }
                } else {
                    return Err(perr(ln, format!("{x} and {y} are not both vertices or both edges")));
                }
            }
            Section::Rotation => {
                let (head, rest) = line.split_once(':').ok_or_else(|| perr(ln, "rotation lines are `<vertex>: <legs>`".into()))?;
                let v = *vidx.get(head.trim()).ok_or_else(|| perr(ln, format!("unknown vertex {}", head.trim())))?;
                let mut legs = Vec::new();
                let mut marked = None;
                for tok in rest.split_whitespace() {
                    let (star, body) = match tok.strip_prefix('*') {
                        Some(b) => (true, b),
                        None => (false, tok),
                    };
                    let (ename, end) = if let Some(e) = body.strip_suffix('+') {
                        (e, End::Source)
                    } else if let Some(e) = body.strip_suffix('-') {
                        (e, End::Target)
                    } else {
                        return Err(perr(ln, format!("leg {tok:?} must end in + (source) or - (target)")));
                    };
                    let edge = *eidx.get(ename).ok_or_else(|| perr(ln, format!("unknown edge {ename}")))?;
                    if star {
                        if marked.is_some() {
                            return Err(perr(ln, "more than one leg marked as κ_v(1)".into()));
                        }
                        marked = Some(legs.len());
                    }
                    legs.push(Leg { edge, end });
                }
                legs.rotate_left(marked.unwrap_or(0));
                if rotation.insert(v, legs).is_some() {
                    return Err(perr(ln, format!("duplicate rotation for {}", head.trim())));
                }
            }
            Section::Plaquettes => {
                let mut walk = Vec::new();
                for tok in &toks {
                    let (ename, forward) = if let Some(e) = tok.strip_suffix('>') {
                        (e, true)
                    } else if let Some(e) = tok.strip_suffix('<') {
                        (e, false)
                    } else {
                        return Err(perr(ln, format!("pass {tok:?} must end in > or <")));
                    };
                    let edge = *eidx.get(ename).ok_or_else(|| perr(ln, format!("unknown edge {ename}")))?;
                    walk.push(Pass { edge, forward });
                }
                plaquettes.push(walk);
            }
        }
    }
    let genus = genus.ok_or_else(|| perr(0, "missing `genus` header".into()))?;
    let nv = vertices.len();
    let vertex_mirror = (0..nv)
        .map(|v| vmirror.get(&v).copied().ok_or_else(|| perr(0, format!("vertex {} has no mirror", vertices[v].name))))
        .collect::<Result<Vec<_>>>()?;
    let edge_mirror = (0..edges.len())
        .map(|e| emirror.get(&e).copied().ok_or_else(|| perr(0, format!("edge {} has no mirror", edges[e].name))))
        .collect::<Result<Vec<_>>>()?;
    let rotation = (0..nv)
        .map(|v| rotation.remove(&v).ok_or_else(|| perr(0, format!("vertex {} has no rotation", vertices[v].name))))
        .collect::<Result<Vec<_>>>()?;
    MirrorGraph::new(name, genus, vertices, edges, vertex_mirror, edge_mirror, rotation, plaquettes)
}

/// Inverse of [`parse_graph`].
pub fn write_graph(g: &MirrorGraph) -> String {
    let mut s = format!("name {}\ngenus {}\n[vertices]\n", g.name, g.genus);
    for v in &g.vertices {
        let side = if v.side == Side::Plus { "plus" } else { "minus" };
        s += &format!("{} {side}\n", v.name);
    }
    s += "[edges]\n";
    for e in &g.edges {
        let side = match e.side {
            EdgeSide::Plus => "plus",
            EdgeSide::Minus => "minus",
            EdgeSide::Crossing => "crossing",
        };
        s += &format!("{} {} {} {side}\n", e.name, g.vertices[e.source].name, g.vertices[e.target].name);
    }
    s += "[mirror]\n";
    for (v, &w) in g.vertex_mirror.iter().enumerate() {
        if v <= w {
            s += &format!("{} {}\n", g.vertices[v].name, g.vertices[w].name);
        }
    }
    for (e, &f) in g.edge_mirror.iter().enumerate() {
        if e <= f {
            s += &format!("{} {}\n", g.edges[e].name, g.edges[f].name);
        }
    }
    s += "[rotation]\n";
    for (v, rot) in g.rotation.iter().enumerate() {
        let legs: Vec<String> = rot
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let mark = if i == 0 { "*" } else { "" };
                let end = if l.end == End::Source { "+" } else { "-" };
                format!("{mark}{}{end}", g.edges[l.edge].name)
            })
            .collect();
        s += &format!("{}: {}\n", g.vertices[v].name, legs.join(" "));
    }
    s += "[plaquettes]\n";
    for walk in &g.plaquettes {
        let ps: Vec<String> =
            walk.iter().map(|p| format!("{}{}", g.edges[p.edge].name, if p.forward { ">" } else { "<" })).collect();
        s += &ps.join(" ");
        s += "\n";
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_counts() {
        let t = theta_sphere().unwrap();
        assert_eq!((t.num_vertices(), t.num_edges(), t.num_plaquettes(), t.euler_characteristic()), (2, 3, 3, 2));
        let r = torus_ladder(1).unwrap();
        assert_eq!((r.num_vertices(), r.num_edges(), r.num_plaquettes(), r.euler_characteristic()), (2, 4, 2, 0));
        for w in 2..=3 {
            let g = torus_ladder(w).unwrap();
            assert!(g.rotation.iter().all(|r| r.len() == 4));
            assert_eq!(g.euler_characteristic(), 0);
        }
    }

    #[test]
    fn torus_one_splits() {
        let g = torus_ladder(1).unwrap();
        let s = g.crossing_plaquettes().unwrap();
        assert_eq!(s.len(), 2);
        for sp in &s {
            assert_eq!(sp.minus_vertices, vec![0, 0]);
            assert_eq!(sp.plus_vertices, vec![1, 1]);
        }
    }

    #[test]
    fn builtin_name_parsing() {
        assert_eq!("torus_ladder(3)".parse::<BuiltinGraph>().unwrap(), BuiltinGraph::TorusLadder(3));
        assert!("torus_ladder(x)".parse::<BuiltinGraph>().is_err());
        assert!("klein".parse::<BuiltinGraph>().is_err());
    }
}
