//! Levin-Wen Hilbert spaces, operators and their mirror decomposition.
//!
//! Factor order is frozen: all vertices in id order, then all edges in id
//! order. A vertex factor is the full `hom(1, A^{|v|})`, with legs ordered by
//! κ_v. The leg for edge `e` carries the label `j(e)^{ε_v(e)}`.
//!
//! Operators on `H₋ ⊗ H₊` are kept in *matched* coordinates. There the basis
//! of `H₋` is `{θ(b_q)}`, for the fusion-tree/label basis `{b_q}` of `H₊`, so
//! θ acts as plain complex conjugation and the `sft`/`rp` modules apply
//! unchanged.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fusion::{contract_c, rho, sector_onb, theta_cat, theta_vertex_matrix, FusionCategory, HomSpace, Label, Morphism};
use crate::lattice::{EdgeSide, MirrorGraph, Pass, Side};
use crate::linalg::{
    certify_psd, default_psd_tolerance, ComplexMatrix, HermitianEigen, HilbertFactorization, PsdCertificate, C64,
    DEFAULT_DIM_CAP, ONE, ZERO,
};
use crate::rp::{certify_thm2, rp_oracle_with, MirrorDecomposition, RpReport, StructuralResiduals};
use crate::sft::{sft, BipartiteOperator, RieszMap};

/// Eigenvalues below this count as zero when computing kernel dimensions.
pub const KERNEL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    Vertex(usize),
    Edge(usize),
}

#[derive(Debug, Clone)]
pub struct LWSpaces {
    pub full: HilbertFactorization,
    pub minus: HilbertFactorization,
    pub plus: HilbertFactorization,
    pub full_factors: Vec<Factor>,
    pub minus_factors: Vec<Factor>,
    pub plus_factors: Vec<Factor>,
    /// Fusion-tree basis of each vertex factor.
    pub vertex_spaces: Vec<HomSpace>,
    pub rank: usize,
}

impl LWSpaces {
    pub fn dim_full(&self) -> usize {
        self.full.total_dim()
    }

    pub fn dim_minus(&self) -> usize {
        self.minus.total_dim()
    }

    pub fn dim_plus(&self) -> usize {
        self.plus.total_dim()
    }

    fn factor_dim(&self, f: Factor) -> usize {
        match f {
            Factor::Vertex(v) => self.vertex_spaces[v].dim(),
            Factor::Edge(_) => self.rank,
        }
    }

    pub fn full_position(&self, f: Factor) -> usize {
        match f {
            Factor::Vertex(v) => v,
            Factor::Edge(e) => self.vertex_spaces.len() + e,
        }
    }
}

fn side_factors(g: &MirrorGraph, side: Side) -> Vec<Factor> {
    let mut out: Vec<Factor> = g.vertices_on(side).into_iter().map(Factor::Vertex).collect();
    out.extend(g.edges_on(side).into_iter().map(Factor::Edge));
    out
}

/// The spaces `H`, `H₋`, `H₊`. `dim_cap` bounds `dim H`; the mirror space
/// is only materialised by [`LWModel`], which checks it separately.
pub fn build_spaces(cat: &FusionCategory, g: &MirrorGraph, dim_cap: usize) -> Result<LWSpaces> {
    let vertex_spaces: Vec<HomSpace> = (0..g.num_vertices())
        .map(|v| {
            if g.degree(v) < 2 {
                return Err(Error::Graph(format!("vertex {} has degree < 2", g.vertices[v].name)));
            }
            Ok(HomSpace::new(cat, g.degree(v)))
        })
        .collect::<Result<_>>()?;
    let full_factors: Vec<Factor> =
        (0..g.num_vertices()).map(Factor::Vertex).chain((0..g.num_edges()).map(Factor::Edge)).collect();
    let minus_factors = side_factors(g, Side::Minus);
    let plus_factors = side_factors(g, Side::Plus);
    let mut spaces = LWSpaces {
        full: HilbertFactorization::new(vec![])?,
        minus: HilbertFactorization::new(vec![])?,
        plus: HilbertFactorization::new(vec![])?,
        full_factors,
        minus_factors,
        plus_factors,
        vertex_spaces,
        rank: cat.rank(),
    };
    let dims = |fs: &[Factor], s: &LWSpaces| fs.iter().map(|&f| s.factor_dim(f)).collect::<Vec<_>>();
    spaces.full = HilbertFactorization::with_cap(dims(&spaces.full_factors, &spaces), dim_cap)?;
    spaces.minus = HilbertFactorization::new(dims(&spaces.minus_factors, &spaces))?;
    spaces.plus = HilbertFactorization::new(dims(&spaces.plus_factors, &spaces))?;
    Ok(spaces)
}

// ---------------------------------------------------------------------------
// Sparse isometries
// ---------------------------------------------------------------------------

/// A linear map stored by columns, each a short list of `(row, value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMap {
    pub rows: usize,
    pub cols: Vec<Vec<(usize, C64)>>,
}

impl SparseMap {
    pub fn to_dense(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.rows, self.cols.len());
        for (c, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                m[(r, c)] += v;
            }
        }
        m
    }

    /// `V X V†`.
    pub fn sandwich(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.rows, self.rows);
        let n = self.cols.len();
        for b in 0..n {
            for bp in 0..n {
                let v = x[(b, bp)];
                if v == ZERO {
                    continue;
                }
                for &(r, a) in &self.cols[b] {
                    for &(rp, ap) in &self.cols[bp] {
                        out[(r, rp)] += a * v * ap.conj();
                    }
                }
            }
        }
        out
    }

    /// `V† Y V`.
    pub fn pullback(&self, y: &ComplexMatrix) -> ComplexMatrix {
        let n = self.cols.len();
        ComplexMatrix::from_fn(n, n, |b, bp| {
            let mut s = ZERO;
            for &(r, a) in &self.cols[b] {
                for &(rp, ap) in &self.cols[bp] {
                    s += a.conj() * y[(r, rp)] * ap;
                }
            }
            s
        })
    }

    pub fn apply(&self, v: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.rows, 1);
        for (b, col) in self.cols.iter().enumerate() {
            let x = v[(b, 0)];
            for &(r, a) in col {
                out[(r, 0)] += a * x;
            }
        }
        out
    }

    pub fn apply_adjoint(&self, w: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols.len(), 1, |b, _| self.cols[b].iter().map(|&(r, a)| a.conj() * w[(r, 0)]).sum())
    }

    /// `V V†` as a dense projector.
    pub fn range_projector(&self) -> ComplexMatrix {
        self.sandwich(&ComplexMatrix::identity(self.cols.len()))
    }
}

/// `ι: H → H₋ ⊗ H₊`, duplicating crossing-edge labels.
#[derive(Debug, Clone, PartialEq)]
pub struct IotaEmbedding {
    pub dim_minus: usize,
    pub dim_plus: usize,
    /// `image[b]` is the `H₋₊` index of `ι(b)` for each basis vector `b`.
    pub image: Vec<usize>,
}

impl IotaEmbedding {
    pub fn matrix(&self) -> ComplexMatrix {
        self.natural().to_dense()
    }

    pub fn natural(&self) -> SparseMap {
        SparseMap { rows: self.dim_minus * self.dim_plus, cols: self.image.iter().map(|&i| vec![(i, ONE)]).collect() }
    }

    /// `(U† ⊗ I) ι`: ι followed by the change to matched coordinates.
    pub fn matched(&self, theta: &ThetaMap) -> SparseMap {
        let dp = self.dim_plus;
        let udag_cols: Vec<Vec<(usize, C64)>> = (0..self.dim_minus)
            .map(|m| (0..dp).filter_map(|a| {
                let u = theta.u[(m, a)];
                (u != ZERO).then(|| (a, u.conj()))
            }).collect())
            .collect();
        let cols = self
            .image
            .iter()
            .map(|&i| {
                let (m, p) = (i / dp, i % dp);
                udag_cols[m].iter().map(|&(a, v)| (a * dp + p, v)).collect()
            })
            .collect();
        SparseMap { rows: self.dim_minus * dp, cols }
    }
}

pub fn build_iota(spaces: &LWSpaces) -> IotaEmbedding {
    let full = &spaces.full;
    let pos = |f: Factor| spaces.full_position(f);
    let image = (0..full.total_dim())
        .map(|b| {
            let d = full.digits(b);
            let md: Vec<usize> = spaces.minus_factors.iter().map(|&f| d[pos(f)]).collect();
            let pd: Vec<usize> = spaces.plus_factors.iter().map(|&f| d[pos(f)]).collect();
            spaces.minus.index(&md) * spaces.plus.total_dim() + spaces.plus.index(&pd)
        })
        .collect();
    IotaEmbedding { dim_minus: spaces.dim_minus(), dim_plus: spaces.dim_plus(), image }
}

// ---------------------------------------------------------------------------
// θ
// ---------------------------------------------------------------------------

/// Anti-unitary `θ: H_from → H_to`, `θ(x) = U·conj(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaMap {
    pub u: ComplexMatrix,
}

impl ThetaMap {
    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.u.mul(&x.conj())
    }
}

/// `U_w` with `θ_𝒞(β_v) = U_w conj(β_v)` for `w = θ_P(v)`, including the
/// rotation that re-aligns the mirrored legs with κ_w.
fn vertex_theta(cat: &FusionCategory, g: &MirrorGraph, v: usize) -> Result<ComplexMatrix> {
    let w = g.vertex_mirror[v];
    let n = g.degree(v);
    // θ_𝒞 reverses the legs: its position 0 is the mirror of κ_v(n).
    let first = g.mirror_leg(g.rotation[v][n - 1]);
    let r = g.position(w, first).ok_or_else(|| Error::Structural("mirror leg missing at θ(v)".into()))?;
    let shift = (n - r) % n;
    Ok(rho_power(cat, n, shift).mul(&theta_vertex_matrix(cat, n)))
}

fn rho_power(cat: &FusionCategory, n: usize, k: usize) -> ComplexMatrix {
    let r = rho(cat, n);
    let mut out = ComplexMatrix::identity(r.rows());
    for _ in 0..(k % n) {
        out = r.mul(&out);
    }
    out
}

/// θ from the `from` side to the other side.
pub fn build_theta_from(cat: &FusionCategory, g: &MirrorGraph, spaces: &LWSpaces, from: Side) -> Result<ThetaMap> {
    let (src_f, src_h, dst_f, dst_h) = match from {
        Side::Plus => (&spaces.plus_factors, &spaces.plus, &spaces.minus_factors, &spaces.minus),
        Side::Minus => (&spaces.minus_factors, &spaces.minus, &spaces.plus_factors, &spaces.plus),
    };
    let src_pos: HashMap<Factor, usize> = src_f.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    // For each destination factor: its source factor and a local matrix.
    let mut local: Vec<(usize, ComplexMatrix)> = Vec::new();
    for &f in dst_f {
        match f {
            Factor::Vertex(w) => {
                let v = g.vertex_mirror[w];
                local.push((src_pos[&Factor::Vertex(v)], vertex_theta(cat, g, v)?));
            }
            Factor::Edge(e) => {
                local.push((src_pos[&Factor::Edge(g.edge_mirror[e])], ComplexMatrix::identity(spaces.rank)));
            }
        }
    }
    let mut u = ComplexMatrix::zeros(dst_h.total_dim(), src_h.total_dim());
    for q in 0..src_h.total_dim() {
        let sd = src_h.digits(q);
        let mut partial: Vec<(Vec<usize>, C64)> = vec![(Vec::new(), ONE)];
        for (sp, m) in &local {
            let mut next = Vec::new();
            for (digits, w) in &partial {
                for row in 0..m.rows() {
                    let x = m[(row, sd[*sp])];
                    if x != ZERO {
                        let mut d = digits.clone();
                        d.push(row);
                        next.push((d, w * x));
                    }
                }
            }
            partial = next;
        }
        for (d, w) in partial {
            u[(dst_h.index(&d), q)] += w;
        }
    }
    Ok(ThetaMap { u })
}

/// θ: `H₊ → H₋`.
pub fn build_theta(cat: &FusionCategory, g: &MirrorGraph, spaces: &LWSpaces) -> Result<ThetaMap> {
    build_theta_from(cat, g, spaces, Side::Plus)
}

// ---------------------------------------------------------------------------
// Vertex operators
// ---------------------------------------------------------------------------

/// Is vertex `v` compatible with the edge labels in `digits`, reading each
/// factor `f` at `pos(f)`?
fn vertex_compatible(
    cat: &FusionCategory,
    g: &MirrorGraph,
    spaces: &LWSpaces,
    v: usize,
    digits: &[usize],
    pos: impl Fn(Factor) -> usize,
) -> bool {
    let legs = spaces.vertex_spaces[v].legs(digits[pos(Factor::Vertex(v))]);
    g.rotation[v].iter().enumerate().all(|(k, &leg)| {
        let j = digits[pos(Factor::Edge(leg.edge))];
        legs[k] == cat.signed(j, MirrorGraph::epsilon(leg))
    })
}

/// `H_v = Σ_{j⃗} P_{v,j⃗} Π_k P_{κ_v(k), j_k^ε}`: diagonal projector.
pub fn build_vertex_op(cat: &FusionCategory, g: &MirrorGraph, spaces: &LWSpaces, v: usize) -> ComplexMatrix {
    let n = spaces.dim_full();
    let diag: Vec<f64> = (0..n)
        .map(|b| {
            let d = spaces.full.digits(b);
            if vertex_compatible(cat, g, spaces, v, &d, |f| spaces.full_position(f)) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    ComplexMatrix::real_diag(&diag)
}

/// `H_v` for `v` on `side`, as an operator on `H_±`.
pub fn build_side_vertex_op(cat: &FusionCategory, g: &MirrorGraph, spaces: &LWSpaces, v: usize, side: Side) -> ComplexMatrix {
    let (fs, h) = match side {
        Side::Plus => (&spaces.plus_factors, &spaces.plus),
        Side::Minus => (&spaces.minus_factors, &spaces.minus),
    };
    let pos: HashMap<Factor, usize> = fs.iter().enumerate().map(|(i, &f)| (f, i)).collect();
    let diag: Vec<f64> = (0..h.total_dim())
        .map(|b| {
            let d = h.digits(b);
            if vertex_compatible(cat, g, spaces, v, &d, |f| pos[&f]) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    ComplexMatrix::real_diag(&diag)
}

// ---------------------------------------------------------------------------
// Plaquette operators
// ---------------------------------------------------------------------------

/// Rotates a boundary walk so that its last edge occurs only once.
///
/// Corners are applied in walk order starting with the wrap-around corner
/// at `v₁`. Every leg must meet its passes in fusion order, and that only
/// holds if the edge closing the walk is not traversed twice.
pub fn canonical_walk(walk: &[Pass]) -> Result<Vec<Pass>> {
    let m = walk.len();
    let count = |e: usize| walk.iter().filter(|p| p.edge == e).count();
    for r in 0..m {
        let mut w = walk.to_vec();
        w.rotate_left(r);
        if count(w[m - 1].edge) == 1 {
            return Ok(w);
        }
    }
    Err(Error::Structural("every edge of the boundary walk is traversed twice".into()))
}

/// One fully-specified term of the `H_{p,j}` sum.
#[derive(Debug, Clone)]
struct WalkTerm {
    /// Edge labels before the loop is fused in.
    initial: BTreeMap<usize, Label>,
    /// Edge labels afterwards.
    fin: BTreeMap<usize, Label>,
    /// `y_k` for each enumerated pass, `None` for skipped passes.
    ys: Vec<Option<Morphism>>,
    /// Label of the edge after pass `k`, for enumerated passes.
    after: Vec<Option<Label>>,
    before: Vec<Option<Label>>,
    weight: f64,
}

/// Enumerates the sum over boundary labels, sectors `j'_k` and ONB
/// elements `y_k` along `walk`. Only passes with `active[k]` are summed, and
/// `weight(k, j, j')` supplies the factor of pass `k` relabelling its edge
/// from `j` to `j'`.
/// Labels of `spectators` (edges off the walk) are enumerated as well and
/// left unchanged.
fn enumerate_walk(
    cat: &FusionCategory,
    walk: &[Pass],
    j: Label,
    active: &[bool],
    spectators: &[usize],
    weight: &dyn Fn(usize, Label, Label) -> f64,
) -> Vec<WalkTerm> {
    let mut edges: BTreeSet<usize> = walk.iter().zip(active).filter(|(_, a)| **a).map(|(p, _)| p.edge).collect();
    edges.extend(spectators.iter().copied());
    let edges: Vec<usize> = edges.into_iter().collect();
    let m = walk.len();
    let mut out = Vec::new();
    let total = cat.rank().pow(edges.len() as u32);
    for code in 0..total {
        let mut initial = BTreeMap::new();
        let mut c = code;
        for &e in &edges {
            initial.insert(e, c % cat.rank());
            c /= cat.rank();
        }
        let seed = WalkTerm {
            initial: initial.clone(),
            fin: initial,
            ys: vec![None; m],
            after: vec![None; m],
            before: vec![None; m],
            weight: 1.0,
        };
        let mut stack = vec![(0usize, seed)];
        while let Some((k, t)) = stack.pop() {
            if k == m {
                out.push(t);
                continue;
            }
            if !active[k] {
                stack.push((k + 1, t));
                continue;
            }
            let p = walk[k];
            let eps = MirrorGraph::epsilon(MirrorGraph::leaving_leg(p));
            let cur = t.fin[&p.edge];
            let l = cat.signed(cur, eps);
            for &lp in cat.fuse(j, l) {
                let new = cat.signed(lp, eps);
                for y in sector_onb(cat, j, l, lp) {
                    let mut t2 = t.clone();
                    t2.fin.insert(p.edge, new);
                    t2.ys[k] = Some(y);
                    t2.before[k] = Some(cur);
                    t2.after[k] = Some(new);
                    t2.weight *= weight(k, cur, new);
                    stack.push((k + 1, t2));
                }
            }
        }
    }
    out
}

/// Caches `ρ^{−pos} C_{y,z} ρ^{pos}` matrices.
#[derive(Default)]
struct CornerCache {
    map: HashMap<(usize, usize, Vec<(Label, Label, Label)>, Vec<(Label, Label, Label)>), ComplexMatrix>,
}

impl CornerCache {
    fn corner(&mut self, cat: &FusionCategory, n: usize, pos: usize, y: &Morphism, z: &Morphism) -> Result<ComplexMatrix> {
        let key = (n, pos, y.coefs.keys().copied().collect(), z.coefs.keys().copied().collect::<Vec<_>>());
        // The key ignores coefficients; sector ONB elements are single
        // vertices with unit coefficient, so only the support matters.
        let unit = y.coefs.values().chain(z.coefs.values()).all(|v| (*v - ONE).norm() < 1e-15);
        if unit {
            if let Some(m) = self.map.get(&key) {
                return Ok(m.clone());
            }
        }
        let r = rho_power(cat, n, pos);
        let c = contract_c(cat, y, z, n)?;
        let m = r.dagger().mul(&c).mul(&r);
        if unit {
            self.map.insert(key, m.clone());
        }
        Ok(m)
    }
}

/// Adds `w · (f₀ ⊗ f₁ ⊗ …)` into `target`, visiting only nonzero entries.
fn accumulate_kron(target: &mut ComplexMatrix, factors: &[ComplexMatrix], w: C64) {
    let mut entries: Vec<(usize, usize, C64)> = vec![(0, 0, w)];
    for f in factors {
        let nz: Vec<(usize, usize, C64)> = (0..f.rows())
            .flat_map(|r| (0..f.cols()).map(move |c| (r, c)))
            .filter_map(|(r, c)| {
                let v = f[(r, c)];
                (v != ZERO).then_some((r, c, v))
            })
            .collect();
        let mut next = Vec::with_capacity(entries.len() * nz.len());
        for &(r0, c0, v0) in &entries {
            for &(r1, c1, v1) in &nz {
                next.push((r0 * f.rows() + r1, c0 * f.cols() + c1, v0 * v1));
            }
        }
        entries = next;
    }
    for (r, c, v) in entries {
        target[(r, c)] += v;
    }
}

fn label_transition(rank: usize, from: Label, to: Label) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(rank, rank);
    m[(to, from)] = ONE;
    m
}

/// Local operator of a walk sum on the given vertex and edge factors.
/// Corners are applied only at `vertices` and labels tracked only on `edges`.
#[allow(clippy::too_many_arguments)]
fn walk_operator(
    cat: &FusionCategory,
    g: &MirrorGraph,
    spaces: &LWSpaces,
    walk: &[Pass],
    terms: &[WalkTerm],
    vertices: &[usize],
    edges: &[usize],
    cache: &mut CornerCache,
) -> Result<ComplexMatrix> {
    let m = walk.len();
    let local_dim: usize =
        vertices.iter().map(|&v| spaces.vertex_spaces[v].dim()).product::<usize>() * spaces.rank.pow(edges.len() as u32);
    let mut out = ComplexMatrix::zeros(local_dim, local_dim);
    let vset: BTreeSet<usize> = vertices.iter().copied().collect();
    for t in terms {
        let mut vmats: BTreeMap<usize, ComplexMatrix> =
            vertices.iter().map(|&v| (v, ComplexMatrix::identity(spaces.vertex_spaces[v].dim()))).collect();
        for k in 0..m {
            let prev = (k + m - 1) % m;
            let p = walk[k];
            let v = g.pass_start(p);
            if !vset.contains(&v) {
                continue;
            }
            let (Some(y), Some(yp)) = (&t.ys[k], &t.ys[prev]) else {
                return Err(Error::Structural("corner at an active vertex touches an inactive pass".into()));
            };
            let n = g.degree(v);
            let pos = g.position(v, MirrorGraph::leaving_leg(p)).expect("validated rotation");
            let arr = g.position(v, MirrorGraph::arriving_leg(walk[prev])).expect("validated rotation");
            if arr != (pos + n - 1) % n {
                return Err(Error::Structural("boundary walk does not follow the rotation system".into()));
            }
            let c = cache.corner(cat, n, pos, y, &theta_cat(cat, yp))?;
            let cur = vmats.remove(&v).unwrap();
            vmats.insert(v, c.mul(&cur));
        }
        let mut factors: Vec<ComplexMatrix> = vertices.iter().map(|v| vmats.remove(v).unwrap()).collect();
        for e in edges {
            factors.push(label_transition(spaces.rank, t.initial[e], t.fin[e]));
        }
        accumulate_kron(&mut out, &factors, C64::new(t.weight, 0.0));
    }
    Ok(out)
}

fn walk_support(g: &MirrorGraph, walk: &[Pass]) -> (Vec<usize>, Vec<usize>) {
    let vs: BTreeSet<usize> = walk.iter().map(|&p| g.pass_start(p)).collect();
    let es: BTreeSet<usize> = walk.iter().map(|p| p.edge).collect();
    (vs.into_iter().collect(), es.into_iter().collect())
}

/// `H_{p,j}` on `H`.
pub fn build_plaquette_op(
    cat: &FusionCategory,
    g: &MirrorGraph,
    spaces: &LWSpaces,
    p: usize,
    j: Label,
) -> Result<ComplexMatrix> {
    let walk = canonical_walk(&g.plaquettes[p])?;
    let terms = enumerate_walk(cat, &walk, j, &vec![true; walk.len()], &[], &|_, a, b| {
        (cat.qdim(a) * cat.qdim(b)).sqrt()
    });
    let (vs, es) = walk_support(g, &walk);
    let local = walk_operator(cat, g, spaces, &walk, &terms, &vs, &es, &mut CornerCache::default())?;
    let positions: Vec<usize> = vs
        .iter()
        .map(|&v| spaces.full_position(Factor::Vertex(v)))
        .chain(es.iter().map(|&e| spaces.full_position(Factor::Edge(e))))
        .collect();
    spaces.full.embed_local(&local.scale_real(1.0 / cat.qdim(j)), &positions)
}

/// Weight of `H_{p,j}` in `H_p`.
pub fn plaquette_weight(cat: &FusionCategory, j: Label) -> f64 {
    cat.qdim(j).powi(2) / cat.global_dimension()
}

// ---------------------------------------------------------------------------
// Operators and Hamiltonian
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct LWOperators {
    pub vertex_ops: Vec<ComplexMatrix>,
    pub plaquette_ops_j: BTreeMap<(usize, Label), ComplexMatrix>,
    pub plaquette_ops: Vec<ComplexMatrix>,
    pub hamiltonian: ComplexMatrix,
    pub lambda_p: f64,
    pub lambda_v: f64,
}

fn check_couplings(lambda_p: f64, lambda_v: f64) -> Result<()> {
    for (name, x) in [("lambda_p", lambda_p), ("lambda_v", lambda_v)] {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::InvalidArgument(format!("{name} must be finite and ≥ 0, got {x}")));
        }
    }
    Ok(())
}

/// `H = λ_𝔓 Σ_p (1 − H_p) + λ_V Σ_v (1 − H_v)`.
pub fn build_hamiltonian(
    vertex_ops: &[ComplexMatrix],
    plaquette_ops: &[ComplexMatrix],
    dim: usize,
    lambda_p: f64,
    lambda_v: f64,
) -> Result<ComplexMatrix> {
    check_couplings(lambda_p, lambda_v)?;
    let mut h = ComplexMatrix::zeros(dim, dim);
    for (ops, lam) in [(plaquette_ops, lambda_p), (vertex_ops, lambda_v)] {
        for op in ops {
            h.add_identity(lam);
            h.add_assign_scaled(op, C64::new(-lam, 0.0));
        }
    }
    Ok(h)
}

pub fn build_operators(
    cat: &FusionCategory,
    g: &MirrorGraph,
    spaces: &LWSpaces,
    lambda_p: f64,
    lambda_v: f64,
) -> Result<LWOperators> {
    check_couplings(lambda_p, lambda_v)?;
    let vertex_ops: Vec<ComplexMatrix> = (0..g.num_vertices()).map(|v| build_vertex_op(cat, g, spaces, v)).collect();
    let n = spaces.dim_full();
    let mut plaquette_ops_j = BTreeMap::new();
    let mut plaquette_ops = Vec::new();
    for p in 0..g.num_plaquettes() {
        let mut hp = ComplexMatrix::zeros(n, n);
        for j in cat.labels() {
            let hpj = build_plaquette_op(cat, g, spaces, p, j)?;
            hp.add_assign_scaled(&hpj, C64::new(plaquette_weight(cat, j), 0.0));
            plaquette_ops_j.insert((p, j), hpj);
        }
        plaquette_ops.push(hp);
    }
    let hamiltonian = build_hamiltonian(&vertex_ops, &plaquette_ops, n, lambda_p, lambda_v)?;
    Ok(LWOperators { vertex_ops, plaquette_ops_j, plaquette_ops, hamiltonian, lambda_p, lambda_v })
}

/// Projection and commutation residuals of the commuting-projector algebra.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlgebraResiduals {
    /// `max ‖X² − X‖_max` over every `H_v`, `H_p`.
    pub projection: f64,
    /// `max ‖X − X†‖_max`.
    pub hermiticity: f64,
    /// `max ‖[X, Y]‖_max` over all pairs.
    pub commutator: f64,
}

impl AlgebraResiduals {
    pub fn passes(&self, proj_tol: f64, herm_tol: f64, comm_tol: f64) -> bool {
        self.projection < proj_tol && self.hermiticity < herm_tol && self.commutator < comm_tol
    }
}

pub fn algebra_residuals(ops: &LWOperators) -> AlgebraResiduals {
    let all: Vec<&ComplexMatrix> = ops.vertex_ops.iter().chain(&ops.plaquette_ops).collect();
    let mut r = AlgebraResiduals { projection: 0.0, hermiticity: 0.0, commutator: 0.0 };
    for x in &all {
        r.projection = r.projection.max(x.mul(x).max_abs_diff(x));
        r.hermiticity = r.hermiticity.max(x.hermiticity_defect());
    }
    for (i, x) in all.iter().enumerate() {
        for y in &all[i + 1..] {
            r.commutator = r.commutator.max(x.mul(y).max_abs_diff(&y.mul(x)));
        }
    }
    r
}

/// Kernel dimension and lowest eigenvalues of a Hermitian matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSummary {
    pub lowest: Vec<f64>,
    pub kernel_dimension: usize,
}

pub fn spectrum_summary(h: &ComplexMatrix, count: usize) -> SpectrumSummary {
    let ev = HermitianEigen::new(h).eigenvalues();
    SpectrumSummary {
        lowest: ev.iter().take(count).copied().collect(),
        kernel_dimension: ev.iter().filter(|l| l.abs() < KERNEL_TOL).count(),
    }
}

// ---------------------------------------------------------------------------
// Mirror decomposition
// ---------------------------------------------------------------------------

/// The LW model together with ι, θ and the matched-coordinate embedding.
#[derive(Debug, Clone)]
pub struct LWModel {
    pub cat: FusionCategory,
    pub graph: MirrorGraph,
    pub spaces: LWSpaces,
    pub ops: LWOperators,
    pub iota: IotaEmbedding,
    pub theta: ThetaMap,
    /// `(U† ⊗ I) ι`.
    pub iota_matched: SparseMap,
}

impl LWModel {
    pub fn build(cat: FusionCategory, graph: MirrorGraph, lambda_p: f64, lambda_v: f64, dim_cap: usize) -> Result<Self> {
        let spaces = build_spaces(&cat, &graph, dim_cap)?;
        let mirror_dim = spaces.dim_minus().saturating_mul(spaces.dim_plus());
        if mirror_dim > dim_cap {
            return Err(Error::DimensionCap { dim: mirror_dim, cap: dim_cap });
        }
        let ops = build_operators(&cat, &graph, &spaces, lambda_p, lambda_v)?;
        let iota = build_iota(&spaces);
        let theta = build_theta(&cat, &graph, &spaces)?;
        let iota_matched = iota.matched(&theta);
        Ok(Self { cat, graph, spaces, ops, iota, theta, iota_matched })
    }

    pub fn build_default(cat: FusionCategory, graph: MirrorGraph) -> Result<Self> {
        Self::build(cat, graph, 1.0, 1.0, DEFAULT_DIM_CAP)
    }

    pub fn riesz(&self) -> RieszMap {
        RieszMap { dim: self.spaces.dim_plus() }
    }

    /// `ι X ι†` in matched coordinates.
    pub fn lift(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.iota_matched.sandwich(x)
    }

    fn side_bulk_op(&self, side: Side) -> ComplexMatrix {
        let (g, cat, spaces) = (&self.graph, &self.cat, &self.spaces);
        let dim = match side {
            Side::Plus => spaces.dim_plus(),
            Side::Minus => spaces.dim_minus(),
        };
        let mut h = ComplexMatrix::zeros(dim, dim);
        for v in g.vertices_on(side) {
            h.add_identity(self.ops.lambda_v);
            h.add_assign_scaled(&build_side_vertex_op(cat, g, spaces, v, side), C64::new(-self.ops.lambda_v, 0.0));
        }
        // Bulk plaquettes would contribute here. The supported graphs have
        // none (every face touches the mirror); `bulk_plaquettes` rejects the rest.
        h
    }

    /// Plaquettes that do not cross the mirror.
    pub fn bulk_plaquettes(&self) -> Vec<usize> {
        let g = &self.graph;
        (0..g.num_plaquettes())
            .filter(|&p| g.plaquettes[p].iter().all(|q| g.edges[q.edge].side != EdgeSide::Crossing))
            .collect()
    }

    /// `ιHι† = H₋ + H₀ + H₊ + λ` on the range of ι, extended to all of
    /// `H₋₊` by `K = H₋ + H₀ + H₊ + λI`.
    pub fn mirror_decompose(&self) -> Result<LWDecomposition> {
        if !self.bulk_plaquettes().is_empty() {
            return Err(Error::Structural(
                "bulk plaquettes away from the mirror are not supported by the decomposition".into(),
            ));
        }
        let splits = self.graph.crossing_plaquettes()?;
        let dp = self.spaces.dim_plus();
        let lp = self.ops.lambda_p;
        let u = &self.theta.u;
        let hp_local = self.side_bulk_op(Side::Plus);
        let hm_natural = self.side_bulk_op(Side::Minus);
        let hm_local = u.dagger().mul(&hm_natural).mul(u);
        let id = ComplexMatrix::identity(dp);
        let h_plus = BipartiteOperator::minus_plus(crate::linalg::kron(&id, &hp_local), dp)?;
        let h_minus = BipartiteOperator::minus_plus(crate::linalg::kron(&hm_local, &id), dp)?;
        let mut h0 = ComplexMatrix::zeros(dp * dp, dp * dp);
        for s in &splits {
            h0.add_assign_scaled(&self.lift(&self.ops.plaquette_ops[s.plaquette]), C64::new(-lp, 0.0));
        }
        let d = MirrorDecomposition {
            h_minus,
            h_zero: BipartiteOperator::minus_plus(h0, dp)?,
            h_plus,
            lambda: lp * splits.len() as f64,
        };
        let k = d.reconstruct();
        let pulled = self.iota_matched.pullback(&k);
        let proj = self.iota_matched.range_projector();
        let commutator = k.mul(&proj).max_abs_diff(&proj.mul(&k));
        let reconstruction = pulled.max_abs_diff(&self.ops.hamiltonian).max(commutator);
        let structure = d.residuals(&self.riesz())?;
        Ok(LWDecomposition { decomposition: d, crossing: splits.iter().map(|s| s.plaquette).collect(), reconstruction, structure })
    }

    /// The RP oracle on the physical model, sampling
    /// `⟨θ(x')⊗x', ι e^{−βH} ι† θ(x)⊗x⟩` in matched coordinates.
    pub fn rp_oracle(&self, betas: &[f64], trials: usize, seed: u64) -> Result<RpReport> {
        let eig = HermitianEigen::new(&self.ops.hamiltonian);
        let v = &self.iota_matched;
        rp_oracle_with(&self.riesz(), betas, trials, seed, |beta, x| {
            let y = eig.apply_fn_to_vec(|l| C64::new((-beta * l).exp(), 0.0), &v.apply_adjoint(x));
            Ok(v.apply(&y))
        })
    }

    /// Theorem RP2 on the mirror decomposition; the oracle samples `K`.
    pub fn certify_thm2(&self, d: &LWDecomposition, trials: usize, seed: u64) -> Result<(RpReport, StructuralResiduals)> {
        certify_thm2(&d.decomposition, &self.riesz(), trials, seed)
    }

    /// Loop-term positivity for crossing plaquette `p` and loop label `j`.
    pub fn lemma_check(&self, p: usize, j: Label) -> Result<LemmaCheck> {
        let r = self.riesz();
        let x = self.lift(&self.ops.plaquette_ops_j[&(p, j)]);
        let xop = BipartiteOperator::minus_plus(x, r.dim)?;
        let f = sft(&xop, &r)?;
        let certificate = certify_psd(f.matrix(), default_psd_tolerance(f.matrix()))?;
        let neg = f.matrix().scale_real(-1.0);
        let literal_sign = certify_psd(&neg, default_psd_tolerance(&neg))?;
        let recon = self.lemma_reconstruction(p, j)?;
        let reconstruction_residual = recon.max_abs_diff(xop.matrix());
        Ok(LemmaCheck { plaquette: p, label: j, certificate, literal_sign, reconstruction_residual })
    }

    /// `Σ_c T_c ⊠ θ(T_c)` in matched coordinates, where `T_c` is the minus
    /// half of the walk with the crossing-pass labels `c` held fixed.
    pub fn lemma_reconstruction(&self, p: usize, j: Label) -> Result<ComplexMatrix> {
        let (g, cat, spaces) = (&self.graph, &self.cat, &self.spaces);
        let walk = canonical_walk(&g.plaquettes[p])?;
        let crossing: Vec<bool> = walk.iter().map(|q| g.edges[q.edge].side == EdgeSide::Crossing).collect();
        let minus_edge = |e: usize| g.edges[e].side != EdgeSide::Plus;
        let active: Vec<bool> = walk.iter().map(|q| minus_edge(q.edge)).collect();
        // Crossing passes split their weight evenly between T and θ(T).
        let weight = |k: usize, a: Label, b: Label| {
            let w = (cat.qdim(a) * cat.qdim(b)).sqrt();
            if crossing[k] {
                w.sqrt()
            } else {
                w
            }
        };
        // Crossing edges off the walk are duplicated by ι too, so T carries
        // a projector onto each of their labels.
        let (vs, walk_edges) = walk_support(g, &walk);
        let spectators: Vec<usize> =
            g.crossing_edges().into_iter().filter(|e| !walk_edges.contains(e)).collect();
        let terms = enumerate_walk(cat, &walk, j, &active, &spectators, &weight);
        let mut groups: BTreeMap<(Vec<(Label, Label)>, Vec<Label>), Vec<WalkTerm>> = BTreeMap::new();
        for t in terms {
            let passes = (0..walk.len()).filter(|&k| crossing[k]).map(|k| (t.before[k].unwrap(), t.after[k].unwrap())).collect();
            let idle = spectators.iter().map(|e| t.initial[e]).collect();
            groups.entry((passes, idle)).or_default().push(t);
        }
        let vs: Vec<usize> = vs.into_iter().filter(|&v| g.vertices[v].side == Side::Minus).collect();
        let mut es: Vec<usize> = walk_edges.into_iter().filter(|&e| minus_edge(e)).collect();
        es.extend(spectators.iter().copied());
        es.sort_unstable();
        let mpos: HashMap<Factor, usize> = spaces.minus_factors.iter().enumerate().map(|(i, &f)| (f, i)).collect();
        let positions: Vec<usize> = vs
            .iter()
            .map(|&v| mpos[&Factor::Vertex(v)])
            .chain(es.iter().map(|&e| mpos[&Factor::Edge(e)]))
            .collect();
        let u = &self.theta.u;
        let dp = spaces.dim_plus();
        let mut out = ComplexMatrix::zeros(dp * dp, dp * dp);
        let mut cache = CornerCache::default();
        for terms in groups.values() {
            let local = walk_operator(cat, g, spaces, &walk, terms, &vs, &es, &mut cache)?;
            let t_nat = spaces.minus.embed_local(&local.scale_real(1.0 / cat.qdim(j).sqrt()), &positions)?;
            let t = u.dagger().mul(&t_nat).mul(u);
            let tc = t.conj();
            accumulate_kron(&mut out, &[t, tc], ONE);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct LWDecomposition {
    pub decomposition: MirrorDecomposition,
    pub crossing: Vec<usize>,
    /// `max(‖ι†Kι − H‖, ‖[K, ιι†]‖)`.
    pub reconstruction: f64,
    pub structure: StructuralResiduals,
}

/// Per-plaquette loop-term positivity certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub plaquette: usize,
    pub label: Label,
    /// `𝔉ₛ(ιH_{p,j}ι†) ⪰ 0`, the sign that yields `𝔉ₛ(−H₀) ⪰ 0`.
    pub certificate: PsdCertificate,
    /// `𝔉ₛ(−ιH_{p,j}ι†)` as literally stated.
    pub literal_sign: PsdCertificate,
    /// `‖ιH_{p,j}ι† − Σ_c T_c ⊠ θ(T_c)‖_max`.
    pub reconstruction_residual: f64,
}

// ---------------------------------------------------------------------------
// Independent oracles
// ---------------------------------------------------------------------------

/// The toric-code plaquette `(Q_p + X_p Q_p)/2` for `vec_z2`. `Q_p` checks the
/// legs used by the walk against their edges. `X_p` flips every such leg and
/// every walk edge, once per traversal. Only meaningful for Z₂.
pub fn toric_code_plaquette(g: &MirrorGraph, spaces: &LWSpaces, p: usize) -> Result<ComplexMatrix> {
    if spaces.rank != 2 {
        return Err(Error::InvalidArgument("toric-code oracle needs a rank-2 category".into()));
    }
    let walk = &g.plaquettes[p];
    let mut leg_flips: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edge_flips: HashMap<usize, usize> = HashMap::new();
    for &q in walk {
        for leg in [MirrorGraph::leaving_leg(q), MirrorGraph::arriving_leg(q)] {
            let v = g.leg_vertex(leg);
            *leg_flips.entry((v, g.position(v, leg).unwrap())).or_insert(0) += 1;
        }
        *edge_flips.entry(q.edge).or_insert(0) += 1;
    }
    let n = spaces.dim_full();
    let mut out = ComplexMatrix::zeros(n, n);
    for b in 0..n {
        let d = spaces.full.digits(b);
        let ok = leg_flips.keys().all(|&(v, k)| {
            let leg = g.rotation[v][k];
            // Z₂ labels are self-dual, so no sign bookkeeping is needed.
            spaces.vertex_spaces[v].legs(d[v])[k] == d[spaces.full_position(Factor::Edge(leg.edge))]
        });
        if !ok {
            continue;
        }
        let mut d2 = d.clone();
        for (&e, &c) in &edge_flips {
            let i = spaces.full_position(Factor::Edge(e));
            d2[i] ^= c & 1;
        }
        let mut new_legs: HashMap<usize, Vec<usize>> = HashMap::new();
        for (&(v, k), &c) in &leg_flips {
            let legs = new_legs.entry(v).or_insert_with(|| spaces.vertex_spaces[v].legs(d[v]).to_vec());
            legs[k] ^= c & 1;
        }
        for (v, legs) in new_legs {
            // The Z₂ fusion tree is fixed by its legs: prefix parities.
            let inter: Vec<usize> = legs.iter().scan(0, |s, &l| {
                *s ^= l;
                Some(*s)
            }).collect();
            let comb = crate::fusion::Comb { legs, inter };
            d2[v] = spaces.vertex_spaces[v]
                .index_of(&comb)
                .ok_or_else(|| Error::Structural("flipped vertex state left hom(1, Aⁿ)".into()))?;
        }
        out[(b, b)] += C64::new(0.5, 0.0);
        out[(spaces.full.index(&d2), b)] += C64::new(0.5, 0.0);
    }
    Ok(out)
}

/// Unitary that moves κ_v(1) forward by `r`: `ρ^r` on factor `v`.
pub fn reroot_unitary(cat: &FusionCategory, g: &MirrorGraph, spaces: &LWSpaces, v: usize, r: usize) -> Result<ComplexMatrix> {
    let m = rho_power(cat, g.degree(v), r);
    spaces.full.embed_local(&m, &[spaces.full_position(Factor::Vertex(v))])
}

/// Unitary relabelling `δ_j ↦ δ_j̄` on the factors of `e` and `θ_P(e)`.
pub fn flip_unitary(cat: &FusionCategory, g: &MirrorGraph, spaces: &LWSpaces, e: usize) -> Result<ComplexMatrix> {
    let mut set = vec![e, g.edge_mirror[e]];
    set.dedup();
    let d = ComplexMatrix::from_fn(spaces.rank, spaces.rank, |a, b| if a == cat.dual(b) { ONE } else { ZERO });
    let mut out = ComplexMatrix::identity(spaces.dim_full());
    for f in set {
        out = spaces.full.embed_local(&d, &[spaces.full_position(Factor::Edge(f))])?.mul(&out);
    }
    Ok(out)
}
