//! Multiplicity-free unitary fusion categories and the graphical calculus on
//! `hom(1, Aⁿ)`.
//!
//! Conventions:
//! * Splitting vertices `ψ^{ab}_c : c → a⊗b` are unitarily normalized,
//!   `ψ†ψ = 1_c`, so left-comb fusion trees form an orthonormal basis.
//! * F-move: `(ψ^{ab}_e ⊗ 1)ψ^{ec}_d = Σ_f F^{abc}_d[e,f] (1 ⊗ ψ^{bc}_f)ψ^{af}_d`.
//! * Caps are balanced: `∩_a = √d_a ψ^{aā}_1`, `∪_a = ∩_a†`. Both the loop
//!   value `d_a` and the zig-zag identity then need the gauge
//!   `d_a F^{aāa}_a[1,1] = 1`, which construction checks.
//! * Morphisms in `hom(A², A)` are expanded in the trace-orthonormal vertices
//!   `e_{abc} = ψ^{ab†}_c / √d_c`.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64, ONE, ZERO};

pub type Label = usize;

/// The unit object is always label 0.
pub const UNIT: Label = 0;

pub const PENTAGON_TOL: f64 = 1e-10;

#[derive(Debug)]
pub struct FusionCategory {
    name: String,
    names: Vec<String>,
    dual: Vec<Label>,
    /// `fusion[a][b]` lists every `c` with `N_{ab}^c = 1`.
    fusion: Vec<Vec<Vec<Label>>>,
    f: BTreeMap<[Label; 6], C64>,
    qdim: Vec<f64>,
    rho_cache: Mutex<HashMap<usize, ComplexMatrix>>,
}

impl Clone for FusionCategory {
    fn clone(&self) -> Self {
        Self {
            name: self.name.clone(),
            names: self.names.clone(),
            dual: self.dual.clone(),
            fusion: self.fusion.clone(),
            f: self.f.clone(),
            qdim: self.qdim.clone(),
            rho_cache: Mutex::new(HashMap::new()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    VecZn(usize),
    Fibonacci,
    Ising,
}

impl std::str::FromStr for Builtin {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "fibonacci" | "fib" => Ok(Builtin::Fibonacci),
            "ising" => Ok(Builtin::Ising),
            _ => {
                let n = s
                    .strip_prefix("vec_z")
                    .map(|r| r.strip_prefix("n(").and_then(|r| r.strip_suffix(')')).unwrap_or(r))
                    .and_then(|r| r.parse::<usize>().ok())
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown category `{s}`")))?;
                Ok(Builtin::VecZn(n))
            }
        }
    }
}

/// Residuals of every consistency condition checked at construction.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CategoryValidation {
    pub pentagon: f64,
    pub unitarity: f64,
    pub gauge: f64,
    pub mirror: f64,
    pub zigzag: f64,
    pub loop_value: f64,
    pub qdim_dual: f64,
}

impl CategoryValidation {
    pub fn passes(&self, tol: f64) -> bool {
        [self.pentagon, self.unitarity, self.gauge, self.mirror, self.zigzag, self.loop_value, self.qdim_dual]
            .iter()
            .all(|r| *r < tol)
    }
}

impl FusionCategory {
    /// Assembles category data, filling every admissible F-symbol not listed
    /// in `f_entries` with 1, and runs the validation gate.
    pub fn from_data(
        name: &str,
        names: Vec<String>,
        dual: Vec<Label>,
        fusion_triples: &[(Label, Label, Label)],
        f_entries: &[([Label; 6], C64)],
    ) -> Result<Self> {
        let cat = Self::assemble(name, names, dual, fusion_triples, f_entries)?;
        let v = cat.validate();
        if !v.passes(PENTAGON_TOL) {
            return Err(Error::Category(format!("{name}: consistency gate failed: {v:?}")));
        }
        Ok(cat)
    }

    /// Like [`from_data`](Self::from_data) but without the validation gate.
    /// Only structural (label-level) errors are reported.
    pub fn assemble(
        name: &str,
        names: Vec<String>,
        dual: Vec<Label>,
        fusion_triples: &[(Label, Label, Label)],
        f_entries: &[([Label; 6], C64)],
    ) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::Category("no simple objects".into()));
        }
        if dual.len() != n || dual.iter().any(|&d| d >= n) {
            return Err(Error::Category("dual table has wrong length or labels".into()));
        }
        for a in 0..n {
            if dual[dual[a]] != a {
                return Err(Error::Category(format!("dual is not an involution at `{}`", names[a])));
            }
        }
        if dual[UNIT] != UNIT {
            return Err(Error::Category("the unit must be self-dual".into()));
        }
        let mut fusion = vec![vec![Vec::new(); n]; n];
        for &(a, b, c) in fusion_triples {
            if a >= n || b >= n || c >= n {
                return Err(Error::Category(format!("fusion triple ({a},{b},{c}) out of range")));
            }
            if fusion[a][b].contains(&c) {
                return Err(Error::Category(format!("repeated fusion triple ({a},{b},{c})")));
            }
            fusion[a][b].push(c);
        }
        for row in &mut fusion {
            for cs in row.iter_mut() {
                cs.sort_unstable();
            }
        }
        for a in 0..n {
            if fusion[UNIT][a] != vec![a] || fusion[a][UNIT] != vec![a] {
                return Err(Error::Category(format!("unit fusion rule fails for `{}`", names[a])));
            }
            for b in 0..n {
                let has_unit = fusion[a][b].contains(&UNIT);
                if has_unit != (b == dual[a]) {
                    return Err(Error::Category(format!(
                        "`{}` ⊗ `{}` contains the unit iff they are dual",
                        names[a], names[b]
                    )));
                }
            }
        }
        let mut cat = Self {
            name: name.to_string(),
            names,
            dual,
            fusion,
            f: BTreeMap::new(),
            qdim: vec![],
            rho_cache: Mutex::new(HashMap::new()),
        };
        for t in cat.admissible_f_tuples() {
            cat.f.insert(t, ONE);
        }
        for (t, v) in f_entries {
            match cat.f.get_mut(t) {
                Some(slot) => *slot = *v,
                None => return Err(Error::Category(format!("F-symbol entry {t:?} is not admissible"))),
            }
        }
        cat.qdim = cat.perron_frobenius()?;
        Ok(cat)
    }

    pub fn builtin(which: Builtin) -> Result<Self> {
        match which {
            Builtin::VecZn(n) => Self::vec_zn(n),
            Builtin::Fibonacci => Self::fibonacci(),
            Builtin::Ising => Self::ising(),
        }
    }

    pub fn vec_zn(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("vec_zn needs n ≥ 1".into()));
        }
        let names = (0..n).map(|a| a.to_string()).collect();
        let dual = (0..n).map(|a| (n - a) % n).collect();
        let triples: Vec<_> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b, (a + b) % n))).collect();
        Self::from_data(&format!("vec_z{n}"), names, dual, &triples, &[])
    }

    pub fn fibonacci() -> Result<Self> {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let t = 1;
        let triples = [(0, 0, 0), (0, t, t), (t, 0, t), (t, t, 0), (t, t, t)];
        let a = 1.0 / phi;
        let b = phi.powf(-0.5);
        let entries = [
            ([t, t, t, t, 0, 0], C64::new(a, 0.0)),
            ([t, t, t, t, 0, t], C64::new(b, 0.0)),
            ([t, t, t, t, t, 0], C64::new(b, 0.0)),
            ([t, t, t, t, t, t], C64::new(-a, 0.0)),
        ];
        Self::from_data("fibonacci", vec!["1".into(), "tau".into()], vec![0, 1], &triples, &entries)
    }

    pub fn ising() -> Result<Self> {
        let (s, p) = (1, 2);
        let triples = [
            (0, 0, 0),
            (0, s, s),
            (0, p, p),
            (s, 0, s),
            (p, 0, p),
            (s, s, 0),
            (s, s, p),
            (s, p, s),
            (p, s, s),
            (p, p, 0),
        ];
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let entries = [
            ([s, s, s, s, 0, 0], C64::new(h, 0.0)),
            ([s, s, s, s, 0, p], C64::new(h, 0.0)),
            ([s, s, s, s, p, 0], C64::new(h, 0.0)),
            ([s, s, s, s, p, p], C64::new(-h, 0.0)),
            ([s, p, s, p, s, s], C64::new(-1.0, 0.0)),
            ([p, s, p, s, s, s], C64::new(-1.0, 0.0)),
        ];
        Self::from_data(
            "ising",
            vec!["1".into(), "sigma".into(), "psi".into()],
            vec![0, 1, 2],
            &triples,
            &entries,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rank(&self) -> usize {
        self.names.len()
    }

    pub fn labels(&self) -> std::ops::Range<Label> {
        0..self.rank()
    }

    pub fn label_name(&self, a: Label) -> &str {
        &self.names[a]
    }

    pub fn label_by_name(&self, s: &str) -> Option<Label> {
        self.names.iter().position(|n| n == s)
    }

    pub fn dual(&self, a: Label) -> Label {
        self.dual[a]
    }

    /// `a^ε`: `a` for `ε = +`, `ā` for `ε = −`.
    pub fn signed(&self, a: Label, plus: bool) -> Label {
        if plus {
            a
        } else {
            self.dual[a]
        }
    }

    pub fn n(&self, a: Label, b: Label, c: Label) -> u32 {
        u32::from(self.fusion[a][b].contains(&c))
    }

    pub fn fuse(&self, a: Label, b: Label) -> &[Label] {
        &self.fusion[a][b]
    }

    pub fn qdim(&self, a: Label) -> f64 {
        self.qdim[a]
    }

    pub fn qdims(&self) -> &[f64] {
        &self.qdim
    }

    /// `d(A) = Σ_j d(j)`.
    pub fn total_qdim(&self) -> f64 {
        self.qdim.iter().sum()
    }

    /// Global dimension `μ = Σ_j d(j)²`.
    pub fn global_dimension(&self) -> f64 {
        self.qdim.iter().map(|d| d * d).sum()
    }

    pub fn f_entries(&self) -> impl Iterator<Item = (&[Label; 6], &C64)> {
        self.f.iter()
    }

    /// `F^{abc}_d[e,f]`; zero when the tuple is inadmissible.
    pub fn fsym(&self, a: Label, b: Label, c: Label, d: Label, e: Label, f: Label) -> C64 {
        self.f.get(&[a, b, c, d, e, f]).copied().unwrap_or(ZERO)
    }

    /// Overwrites one admissible F-symbol without re-validating; meant for
    /// sensitivity checks.
    pub fn set_fsym_unchecked(&mut self, t: [Label; 6], v: C64) -> Result<()> {
        match self.f.get_mut(&t) {
            Some(slot) => {
                *slot = v;
                self.rho_cache.lock().unwrap().clear();
                Ok(())
            }
            None => Err(Error::Category(format!("F-symbol entry {t:?} is not admissible"))),
        }
    }

    fn admissible_f_tuples(&self) -> Vec<[Label; 6]> {
        let mut out = Vec::new();
        for a in self.labels() {
            for b in self.labels() {
                for c in self.labels() {
                    for &e in self.fuse(a, b) {
                        for &d in self.fuse(e, c) {
                            for &f in self.fuse(b, c) {
                                if self.n(a, f, d) == 1 {
                                    out.push([a, b, c, d, e, f]);
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Row labels `e` and column labels `f` of the block `F^{abc}_d`.
    pub fn f_block_labels(&self, a: Label, b: Label, c: Label, d: Label) -> (Vec<Label>, Vec<Label>) {
        let es = self.fuse(a, b).iter().copied().filter(|&e| self.n(e, c, d) == 1).collect();
        let fs = self.fuse(b, c).iter().copied().filter(|&f| self.n(a, f, d) == 1).collect();
        (es, fs)
    }

    fn perron_frobenius(&self) -> Result<Vec<f64>> {
        let n = self.rank();
        let mut m = vec![vec![0.0; n]; n];
        for a in self.labels() {
            for b in self.labels() {
                for &c in self.fuse(a, b) {
                    m[b][c] += 1.0;
                }
            }
        }
        let mut v = vec![1.0f64; n];
        for _ in 0..10_000 {
            let mut w = vec![0.0f64; n];
            for b in 0..n {
                for c in 0..n {
                    w[c] += m[b][c] * v[b];
                }
            }
            let norm = w[UNIT];
            if !(norm > 0.0) {
                return Err(Error::Category("fusion matrix has no Perron-Frobenius vector".into()));
            }
            for x in &mut w {
                *x /= norm;
            }
            let delta = w.iter().zip(&v).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            v = w;
            if delta < 1e-15 {
                break;
            }
        }
        Ok(v)
    }

    /// Maximum pentagon residual
    /// `|F^{fcd}_e[g,l] F^{abl}_e[f,k] − Σ_h F^{abc}_g[f,h] F^{ahd}_e[g,k] F^{bcd}_k[h,l]|`.
    pub fn pentagon_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in self.labels() {
            for b in self.labels() {
                for c in self.labels() {
                    for d in self.labels() {
                        for &f in self.fuse(a, b) {
                            for &g in self.fuse(f, c) {
                                for &e in self.fuse(g, d) {
                                    for &l in self.fuse(c, d) {
                                        if self.n(f, l, e) == 0 {
                                            continue;
                                        }
                                        for &k in self.fuse(b, l) {
                                            if self.n(a, k, e) == 0 {
                                                continue;
                                            }
                                            let lhs = self.fsym(f, c, d, e, g, l) * self.fsym(a, b, l, e, f, k);
                                            let mut rhs = ZERO;
                                            for &h in self.fuse(b, c) {
                                                rhs += self.fsym(a, b, c, g, f, h)
                                                    * self.fsym(a, h, d, e, g, k)
                                                    * self.fsym(b, c, d, k, h, l);
                                            }
                                            worst = worst.max((lhs - rhs).norm());
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        worst
    }

    /// Maximum `‖F F† − I‖_max` over all blocks.
    pub fn unitarity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in self.labels() {
            for b in self.labels() {
                for c in self.labels() {
                    for d in self.labels() {
                        let (es, fs) = self.f_block_labels(a, b, c, d);
                        if es.is_empty() && fs.is_empty() {
                            continue;
                        }
                        if es.len() != fs.len() {
                            return f64::INFINITY;
                        }
                        for &e1 in &es {
                            for &e2 in &es {
                                let s: C64 = fs
                                    .iter()
                                    .map(|&f| self.fsym(a, b, c, d, e1, f) * self.fsym(a, b, c, d, e2, f).conj())
                                    .sum();
                                let want = if e1 == e2 { ONE } else { ZERO };
                                worst = worst.max((s - want).norm());
                            }
                        }
                    }
                }
            }
        }
        worst
    }

    /// `max_a |d_a F^{aāa}_a[1,1] − 1|`.
    pub fn gauge_residual(&self) -> f64 {
        self.labels()
            .map(|a| {
                let ad = self.dual(a);
                (self.fsym(a, ad, a, a, UNIT, UNIT) * self.qdim(a) - ONE).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `max |F^{abc}_d[e,f] − conj F^{c̄b̄ā}_{d̄}[f̄,ē]|`, the reflection symmetry
    /// that makes θ_𝒞 compatible with F-moves.
    pub fn mirror_residual(&self) -> f64 {
        let du = |x: Label| self.dual(x);
        self.f
            .iter()
            .map(|(&[a, b, c, d, e, f], v)| {
                (v - self.fsym(du(c), du(b), du(a), du(d), du(f), du(e)).conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> CategoryValidation {
        let qdim_dual = self
            .labels()
            .map(|a| (self.qdim(a) - self.qdim(self.dual(a))).abs())
            .fold(0.0, f64::max);
        let (zz1, zz2) = zigzag_residuals(self);
        CategoryValidation {
            pentagon: self.pentagon_residual(),
            unitarity: self.unitarity_residual(),
            gauge: self.gauge_residual(),
            mirror: self.mirror_residual(),
            zigzag: zz1.max(zz2),
            loop_value: (cup_cap_loop(self) - self.total_qdim()).abs(),
            qdim_dual,
        }
    }
}

// ---------------------------------------------------------------------------
// Fusion trees
// ---------------------------------------------------------------------------

/// A left comb `(((l₀ l₁)a₁ l₂)a₂ …)` representing the splitting morphism
/// `root → l₀ ⊗ … ⊗ l_{n−1}`. `inter[k]` is the charge after fusing legs
/// `0..=k`, so `inter[0] = legs[0]` and the root is `inter[n−1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Comb {
    pub legs: Vec<Label>,
    pub inter: Vec<Label>,
}

/// A linear combination of combs.
pub type TreeState = BTreeMap<Comb, C64>;

impl Comb {
    pub fn leaf(a: Label) -> Self {
        Self { legs: vec![a], inter: vec![a] }
    }

    pub fn root(&self) -> Label {
        *self.inter.last().expect("empty comb")
    }

    pub fn len(&self) -> usize {
        self.legs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.legs.is_empty()
    }

    pub fn is_admissible(&self, cat: &FusionCategory) -> bool {
        !self.legs.is_empty()
            && self.legs.len() == self.inter.len()
            && self.inter[0] == self.legs[0]
            && (1..self.legs.len()).all(|k| cat.n(self.inter[k - 1], self.legs[k], self.inter[k]) == 1)
    }

    fn append(&self, leg: Label, root: Label) -> Self {
        let mut c = self.clone();
        c.legs.push(leg);
        c.inter.push(root);
        c
    }
}

fn add_to(state: &mut TreeState, comb: Comb, v: C64) {
    if v == ZERO {
        return;
    }
    *state.entry(comb).or_insert(ZERO) += v;
}

fn prune(state: TreeState) -> TreeState {
    state.into_iter().filter(|(_, v)| v.norm() > 1e-300).collect()
}

/// Applies `ψ^{l_k l_{k+1} †}_c` to legs `k, k+1`.
pub fn fuse_adjacent(cat: &FusionCategory, comb: &Comb, k: usize, c: Label) -> Option<(Comb, C64)> {
    let n = comb.len();
    assert!(k + 1 < n, "fuse_adjacent out of range");
    let (lk, lk1) = (comb.legs[k], comb.legs[k + 1]);
    if cat.n(lk, lk1, c) == 0 {
        return None;
    }
    let mut legs = comb.legs[..k].to_vec();
    legs.push(c);
    legs.extend_from_slice(&comb.legs[k + 2..]);
    if k == 0 {
        if comb.inter[1] != c {
            return None;
        }
        let mut inter = vec![c];
        inter.extend_from_slice(&comb.inter[2..]);
        return Some((Comb { legs, inter }, ONE));
    }
    let coef = cat.fsym(comb.inter[k - 1], lk, lk1, comb.inter[k + 1], comb.inter[k], c);
    if coef == ZERO {
        return None;
    }
    let mut inter = comb.inter[..k].to_vec();
    inter.extend_from_slice(&comb.inter[k + 1..]);
    Some((Comb { legs, inter }, coef))
}

/// Applies `ψ^{pq}_{l_k}` to leg `k`, producing legs `p, q` in its place.
pub fn split_leg(cat: &FusionCategory, comb: &Comb, k: usize, p: Label, q: Label) -> Vec<(Comb, C64)> {
    let lk = comb.legs[k];
    if cat.n(p, q, lk) == 0 {
        return vec![];
    }
    let mut legs = comb.legs[..k].to_vec();
    legs.push(p);
    legs.push(q);
    legs.extend_from_slice(&comb.legs[k + 1..]);
    if k == 0 {
        let mut inter = vec![p, lk];
        inter.extend_from_slice(&comb.inter[1..]);
        return vec![(Comb { legs, inter }, ONE)];
    }
    let (a, d) = (comb.inter[k - 1], comb.inter[k]);
    cat.fuse(a, p)
        .iter()
        .filter_map(|&e| {
            let coef = cat.fsym(a, p, q, d, e, lk).conj();
            (coef != ZERO).then(|| {
                let mut inter = comb.inter[..k].to_vec();
                inter.push(e);
                inter.extend_from_slice(&comb.inter[k..]);
                (Comb { legs: legs.clone(), inter }, coef)
            })
        })
        .collect()
}

/// Inserts a unit-labelled leg before position `k` (`k = len` appends).
pub fn insert_unit_leg(comb: &Comb, k: usize) -> Comb {
    let mut c = comb.clone();
    c.legs.insert(k, UNIT);
    if k == 0 {
        c.inter.insert(0, UNIT);
    } else {
        let prev = c.inter[k - 1];
        c.inter.insert(k, prev);
    }
    c
}

/// Removes a unit-labelled leg at position `k`.
pub fn remove_unit_leg(comb: &Comb, k: usize) -> Comb {
    assert_eq!(comb.legs[k], UNIT, "only unit legs can be removed");
    assert!(comb.len() > 1, "cannot remove the only leg");
    let mut c = comb.clone();
    c.legs.remove(k);
    c.inter.remove(k);
    if k == 0 {
        c.inter[0] = c.legs[0];
    }
    c
}

/// `(L ⊗ R)` fused into total charge `c`, re-expressed as a single left comb.
pub fn join_combs(cat: &FusionCategory, l: &Comb, r: &Comb, c: Label) -> Vec<(Comb, C64)> {
    let (r1, r2) = (l.root(), r.root());
    if cat.n(r1, r2, c) == 0 {
        return vec![];
    }
    if r.len() == 1 {
        return vec![(l.append(r.legs[0], c), ONE)];
    }
    let m = r.len();
    let rq = r.legs[m - 1];
    let rc = r.inter[m - 2];
    let rprime = Comb { legs: r.legs[..m - 1].to_vec(), inter: r.inter[..m - 1].to_vec() };
    let mut out = Vec::new();
    for &e in cat.fuse(r1, rc) {
        let coef = cat.fsym(r1, rc, rq, c, e, r2).conj();
        if coef == ZERO {
            continue;
        }
        for (comb, w) in join_combs(cat, l, &rprime, e) {
            out.push((comb.append(rq, c), coef * w));
        }
    }
    out
}

fn map_state(state: &TreeState, mut f: impl FnMut(&Comb) -> Vec<(Comb, C64)>) -> TreeState {
    let mut out = TreeState::new();
    for (comb, v) in state {
        for (c2, w) in f(comb) {
            add_to(&mut out, c2, v * w);
        }
    }
    prune(out)
}

/// `(1_c ⊗ x ⊗ 1_c̄) ∩_c` summed over `c` with the cap weights of `∩_A`,
/// restricted to caps whose left end is `c ∈ left`.
fn wrap_in_cap(cat: &FusionCategory, x: &Comb, left: impl Iterator<Item = Label>) -> TreeState {
    let mut out = TreeState::new();
    for c in left {
        let w = C64::new(cat.qdim(c).sqrt(), 0.0);
        for (comb, v) in join_combs(cat, &Comb::leaf(c), x, c) {
            add_to(&mut out, comb.append(cat.dual(c), UNIT), v * w);
        }
    }
    out
}

/// Evaluation `∪` on legs `k, k+1`, which must be mutually dual.
fn cup_at(cat: &FusionCategory, comb: &Comb, k: usize) -> Option<(Comb, C64)> {
    let a = comb.legs[k];
    if comb.legs[k + 1] != cat.dual(a) {
        return None;
    }
    let (fused, coef) = fuse_adjacent(cat, comb, k, UNIT)?;
    Some((remove_unit_leg(&fused, k), coef * cat.qdim(a).sqrt()))
}

/// Enumerates the fusion-tree basis of `hom(1, Aⁿ)` in a fixed order.
pub fn hom_space_basis(cat: &FusionCategory, n: usize) -> Vec<Comb> {
    assert!(n >= 1);
    let mut partial: Vec<Comb> = cat.labels().map(Comb::leaf).collect();
    for _ in 1..n {
        let mut next = Vec::new();
        for c in &partial {
            for l in cat.labels() {
                for &a in cat.fuse(c.root(), l) {
                    next.push(c.append(l, a));
                }
            }
        }
        partial = next;
    }
    let mut out: Vec<Comb> = partial.into_iter().filter(|c| c.root() == UNIT).collect();
    out.sort();
    out
}

/// Orthonormal fusion-tree basis of `hom(1, Aⁿ)` together with a lookup.
#[derive(Debug, Clone)]
pub struct HomSpace {
    pub n: usize,
    pub basis: Vec<Comb>,
    index: HashMap<Comb, usize>,
}

impl HomSpace {
    pub fn new(cat: &FusionCategory, n: usize) -> Self {
        let basis = hom_space_basis(cat, n);
        let index = basis.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        Self { n, basis, index }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index_of(&self, c: &Comb) -> Option<usize> {
        self.index.get(c).copied()
    }

    /// Leg labels of basis vector `i`.
    pub fn legs(&self, i: usize) -> &[Label] {
        &self.basis[i].legs
    }

    pub fn state_to_vector(&self, state: &TreeState) -> Result<ComplexMatrix> {
        let mut v = ComplexMatrix::zeros(self.dim(), 1);
        for (c, z) in state {
            let i = self.index_of(c).ok_or_else(|| {
                Error::Structural(format!("tree {c:?} is not a basis vector of hom(1, A^{})", self.n))
            })?;
            v[(i, 0)] += *z;
        }
        Ok(v)
    }

    /// Matrix of a linear map given by its action on basis trees.
    pub fn matrix_of(&self, mut f: impl FnMut(&Comb) -> TreeState) -> Result<ComplexMatrix> {
        let d = self.dim();
        let mut m = ComplexMatrix::zeros(d, d);
        for (col, c) in self.basis.iter().enumerate() {
            for (c2, z) in f(c) {
                let row = self.index_of(&c2).ok_or_else(|| {
                    Error::Structural(format!("tree {c2:?} is not a basis vector of hom(1, A^{})", self.n))
                })?;
                m[(row, col)] += z;
            }
        }
        Ok(m)
    }
}

pub fn hom_space(cat: &FusionCategory, n: usize) -> HomSpace {
    HomSpace::new(cat, n)
}

/// Independent count of `dim hom(1, Aⁿ)` via the fusion-matrix recursion.
pub fn hom_space_dim_by_recursion(cat: &FusionCategory, n: usize) -> usize {
    let mut counts = vec![0usize; cat.rank()];
    counts[UNIT] = 1;
    for _ in 0..n {
        let mut next = vec![0usize; cat.rank()];
        for a in cat.labels() {
            for l in cat.labels() {
                for &b in cat.fuse(a, l) {
                    next[b] += counts[a];
                }
            }
        }
        counts = next;
    }
    counts[UNIT]
}

/// `ρ(x) = (∪_A ⊗ 1)(1_A ⊗ x ⊗ 1_A)∩_A` on one basis tree: the first leg
/// moves to the end.
pub fn rho_tree(cat: &FusionCategory, x: &Comb) -> TreeState {
    if x.len() == 1 {
        return [(x.clone(), ONE)].into_iter().collect();
    }
    let wrapped = wrap_in_cap(cat, x, std::iter::once(cat.dual(x.legs[0])));
    map_state(&wrapped, |c| cup_at(cat, c, 0).into_iter().collect())
}

/// Matrix of ρ on `hom(1, Aⁿ)`.
pub fn rho(cat: &FusionCategory, n: usize) -> ComplexMatrix {
    if let Some(m) = cat.rho_cache.lock().unwrap().get(&n) {
        return m.clone();
    }
    let hs = HomSpace::new(cat, n);
    let m = hs.matrix_of(|c| rho_tree(cat, c)).expect("ρ preserves hom(1, Aⁿ)");
    cat.rho_cache.lock().unwrap().insert(n, m.clone());
    m
}

/// Coevaluation `∩_A ∈ hom(1, A²)` and evaluation `∪_A = ∩_A†` as
/// coordinate vectors in the basis of `hom_space(cat, 2)`.
pub fn cup_cap(cat: &FusionCategory) -> (ComplexMatrix, ComplexMatrix) {
    let hs = HomSpace::new(cat, 2);
    let mut cap = ComplexMatrix::zeros(hs.dim(), 1);
    for (i, c) in hs.basis.iter().enumerate() {
        cap[(i, 0)] = C64::new(cat.qdim(c.legs[0]).sqrt(), 0.0);
    }
    let cup = cap.dagger();
    (cap, cup)
}

fn cup_cap_loop(cat: &FusionCategory) -> f64 {
    let (cap, cup) = cup_cap(cat);
    cup.mul(&cap)[(0, 0)].re
}

/// Residuals of `(1_A ⊗ ∪_A)(∩_A ⊗ 1_A) = 1_A` and its mirror image,
/// evaluated on each simple summand of `A`.
pub fn zigzag_residuals(cat: &FusionCategory) -> (f64, f64) {
    let mut r1: f64 = 0.0;
    let mut r2: f64 = 0.0;
    for a in cat.labels() {
        let ad = cat.dual(a);
        // (∩ ⊗ 1_a): legs (a, ā, a), then cup on the last two.
        let cap = Comb { legs: vec![a, ad], inter: vec![a, UNIT] };
        let mut s = TreeState::new();
        for (c, v) in join_combs(cat, &cap, &Comb::leaf(a), a) {
            if let Some((c2, w)) = cup_at(cat, &c, 1) {
                add_to(&mut s, c2, v * w * cat.qdim(a).sqrt());
            }
        }
        r1 = r1.max(identity_residual(&s, a));
        // (1_a ⊗ ∩): legs (a, ā, a) with the cap on the right, cup on the first two.
        let cap2 = Comb { legs: vec![ad, a], inter: vec![ad, UNIT] };
        let mut s = TreeState::new();
        for (c, v) in join_combs(cat, &Comb::leaf(a), &cap2, a) {
            if let Some((c2, w)) = cup_at(cat, &c, 0) {
                add_to(&mut s, c2, v * w * cat.qdim(ad).sqrt());
            }
        }
        r2 = r2.max(identity_residual(&s, a));
    }
    (r1, r2)
}

fn identity_residual(s: &TreeState, a: Label) -> f64 {
    let leaf = Comb::leaf(a);
    let mut r = (s.get(&leaf).copied().unwrap_or(ZERO) - ONE).norm();
    for (c, v) in s {
        if *c != leaf {
            r = r.max(v.norm());
        }
    }
    r
}

// ---------------------------------------------------------------------------
// Morphisms in hom(A², A)
// ---------------------------------------------------------------------------

/// A morphism in `hom(A², A)`, expanded in the vertices `e_{abc}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Morphism {
    pub coefs: BTreeMap<(Label, Label, Label), C64>,
}

impl Morphism {
    pub fn vertex(a: Label, b: Label, c: Label) -> Self {
        Self { coefs: [((a, b, c), ONE)].into_iter().collect() }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { coefs: self.coefs.iter().map(|(k, v)| (*k, v * s)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.coefs {
            *out.coefs.entry(*k).or_insert(ZERO) += v;
        }
        out
    }

    /// Norm from the trace inner product `⟨y, y'⟩ = tr(y y'†)`; the `e_{abc}`
    /// are orthonormal for it.
    pub fn norm(&self) -> f64 {
        self.coefs.values().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let keys: std::collections::BTreeSet<_> = self.coefs.keys().chain(other.coefs.keys()).collect();
        keys.into_iter()
            .map(|k| {
                let a = self.coefs.get(k).copied().unwrap_or(ZERO);
                let b = other.coefs.get(k).copied().unwrap_or(ZERO);
                (a - b).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// Orthonormal basis of `hom(j ⊗ a, b)` (empty when `N_{ja}^b = 0`).
pub fn sector_onb(cat: &FusionCategory, j: Label, a: Label, b: Label) -> Vec<Morphism> {
    if cat.n(j, a, b) == 1 {
        vec![Morphism::vertex(j, a, b)]
    } else {
        vec![]
    }
}

/// Residual of `1_j ⊗ 1_a = Σ_b d(b) Σ_{y ∈ ONB hom(j⊗a, b)} y* y`, written in
/// the orthonormal splitting basis `{ψ^{ja}_b}` of `j ⊗ a`.
pub fn resolution_residual(cat: &FusionCategory, j: Label, a: Label) -> f64 {
    let mut worst: f64 = 0.0;
    for &b in cat.fuse(j, a) {
        // y = c ψ†/√d_b, so y* y = |c|² ψψ† / d_b.
        let weight: f64 = sector_onb(cat, j, a, b)
            .iter()
            .map(|y| y.coefs.get(&(j, a, b)).copied().unwrap_or(ZERO).norm_sqr() / cat.qdim(b))
            .sum();
        worst = worst.max((cat.qdim(b) * weight - 1.0).abs());
    }
    worst
}

/// The modular conjugation `θ_𝒞(y) = (y*)^∨ : hom(a⊗b, c) → hom(b̄⊗ā, c̄)`,
/// anti-linear. In the shipped gauges it sends `e_{abc}` to `e_{b̄āc̄}`.
pub fn theta_cat(cat: &FusionCategory, m: &Morphism) -> Morphism {
    let d = |x| cat.dual(x);
    Morphism { coefs: m.coefs.iter().map(|(&(a, b, c), v)| ((d(b), d(a), d(c)), v.conj())).collect() }
}

/// Applies `e_{abc}` weights of `y` to legs `k, k+1` of every tree in `state`.
fn apply_morphism_at(cat: &FusionCategory, state: &TreeState, y: &Morphism, k: usize) -> TreeState {
    map_state(state, |comb| {
        let mut out = Vec::new();
        for (&(a, b, c), &w) in &y.coefs {
            if comb.legs[k] != a || comb.legs[k + 1] != b {
                continue;
            }
            if let Some((c2, v)) = fuse_adjacent(cat, comb, k, c) {
                out.push((c2, v * w / cat.qdim(c).sqrt()));
            }
        }
        out
    })
}

/// `C_{y,z}(x) = (y ⊗ 1_{A^{n−2}} ⊗ z)(1_A ⊗ x ⊗ 1_A)∩_A` on one basis tree.
pub fn contract_c_tree(cat: &FusionCategory, y: &Morphism, z: &Morphism, x: &Comb) -> TreeState {
    let n = x.len();
    assert!(n >= 2, "C_{{y,z}} needs at least two legs");
    let lefts: std::collections::BTreeSet<Label> = y.coefs.keys().map(|k| k.0).collect();
    let wrapped = wrap_in_cap(cat, x, lefts.into_iter());
    let after_y = apply_morphism_at(cat, &wrapped, y, 0);
    apply_morphism_at(cat, &after_y, z, n - 1)
}

/// Matrix of `C_{y,z}` on `hom(1, Aⁿ)`.
pub fn contract_c(cat: &FusionCategory, y: &Morphism, z: &Morphism, n: usize) -> Result<ComplexMatrix> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("C_{{y,z}} needs n ≥ 2, got {n}")));
    }
    HomSpace::new(cat, n).matrix_of(|c| contract_c_tree(cat, y, z, c))
}

/// θ_𝒞 on a vertex state: the mirror tree (legs reversed and dualized,
/// coefficients conjugated), re-expressed as a left comb.
pub fn theta_tree(cat: &FusionCategory, x: &Comb) -> TreeState {
    let n = x.len();
    let d = |a| cat.dual(a);
    let mut acc: Vec<(Comb, C64)> = vec![(Comb::leaf(d(x.legs[0])), ONE)];
    for k in 1..n {
        let mut next = Vec::new();
        for (r, w) in &acc {
            for (c, v) in join_combs(cat, &Comb::leaf(d(x.legs[k])), r, d(x.inter[k])) {
                next.push((c, v * w));
            }
        }
        acc = next;
    }
    let mut out = TreeState::new();
    for (c, v) in acc {
        add_to(&mut out, c, v);
    }
    prune(out)
}

/// Anti-unitary θ_𝒞 on `hom(1, Aⁿ)` as `x ↦ U·conj(x)`; returns `U`.
pub fn theta_vertex_matrix(cat: &FusionCategory, n: usize) -> ComplexMatrix {
    HomSpace::new(cat, n).matrix_of(|c| theta_tree(cat, c)).expect("θ preserves hom(1, Aⁿ)")
}

// ---------------------------------------------------------------------------
// Import
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CategoryFile {
    name: String,
    labels: Vec<String>,
    duals: Vec<String>,
    fusion: Vec<[String; 3]>,
    #[serde(default)]
    f: Vec<FEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FEntry {
    idx: [String; 6],
    re: f64,
    #[serde(default)]
    im: f64,
}

/// Parses a category from TOML text. Admissible F-symbols not listed default
/// to 1; the full validation gate runs before the category is returned.
pub fn parse_category(text: &str) -> Result<FusionCategory> {
    let file: CategoryFile = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start].lines().count().max(1)).unwrap_or(0);
        Error::Parse { line, msg: e.message().to_string() }
    })?;
    if file.labels.first().map(String::as_str) != Some("1") {
        return Err(Error::Category("the first label must be the unit `1`".into()));
    }
    let lookup = |s: &str| {
        file.labels
            .iter()
            .position(|l| l == s)
            .ok_or_else(|| Error::Category(format!("unknown label `{s}`")))
    };
    let dual = file.duals.iter().map(|s| lookup(s)).collect::<Result<Vec<_>>>()?;
    let triples = file
        .fusion
        .iter()
        .map(|[a, b, c]| Ok((lookup(a)?, lookup(b)?, lookup(c)?)))
        .collect::<Result<Vec<_>>>()?;
    let entries = file
        .f
        .iter()
        .map(|e| {
            let mut t = [0; 6];
            for (slot, s) in t.iter_mut().zip(&e.idx) {
                *slot = lookup(s)?;
            }
            Ok((t, C64::new(e.re, e.im)))
        })
        .collect::<Result<Vec<_>>>()?;
    FusionCategory::from_data(&file.name, file.labels.clone(), dual, &triples, &entries)
}
