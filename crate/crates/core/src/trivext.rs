//! Finite-dimensional graded quiver algebras, trivial extensions, and their
//! Hochschild cohomology.
//!
//! Products follow path order: `a·b ≠ 0` needs `t(a) = s(b)`, and each basis
//! element satisfies `x = e_{s(x)} x e_{t(x)}`.

use std::collections::{BTreeMap, HashMap};

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{integer_row, rank, RatMatrix, SparseEchelon, SparseVec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TrivextError {
    #[error("cochains of length {needed} exceed the bound {bound}")]
    TruncationExceeded { needed: usize, bound: usize },
    #[error("invalid algebra: {0}")]
    Invalid(String),
}

pub type Sparse = Vec<(u32, BigRational)>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BasisElement {
    pub label: String,
    pub source: usize,
    pub target: usize,
    pub degree: i64,
}

#[derive(Clone, Debug)]
pub struct QuiverAlgebra {
    vertices: usize,
    basis: Vec<BasisElement>,
    idempotents: Vec<u32>,
    products: HashMap<(u32, u32), Sparse>,
}

fn add_into(acc: &mut BTreeMap<u32, BigRational>, i: u32, c: BigRational) {
    let e = acc.entry(i).or_insert_with(BigRational::zero);
    *e += c;
    if e.is_zero() {
        acc.remove(&i);
    }
}

impl QuiverAlgebra {
    /// Checks idempotents, path compatibility, grading, and (for small algebras) associativity.
    pub fn new(
        vertices: usize,
        basis: Vec<BasisElement>,
        idempotents: Vec<u32>,
        products: HashMap<(u32, u32), Sparse>,
    ) -> Result<Self, TrivextError> {
        let a = QuiverAlgebra { vertices, basis, idempotents, products };
        a.validate()?;
        Ok(a)
    }

    fn validate(&self) -> Result<(), TrivextError> {
        if self.idempotents.len() != self.vertices {
            return Err(TrivextError::Invalid("one idempotent per vertex required".into()));
        }
        for (v, &e) in self.idempotents.iter().enumerate() {
            let b = &self.basis[e as usize];
            if b.source != v || b.target != v || b.degree != 0 {
                return Err(TrivextError::Invalid(format!("idempotent {} misplaced", b.label)));
            }
        }
        for x in 0..self.dim() as u32 {
            let bx = &self.basis[x as usize];
            let one = [(x, BigRational::one())];
            if self.mul(self.idempotents[bx.source], x) != one || self.mul(x, self.idempotents[bx.target]) != one {
                return Err(TrivextError::Invalid(format!("{} is not e_s x e_t", bx.label)));
            }
        }
        for (&(a, b), out) in &self.products {
            let (ba, bb) = (&self.basis[a as usize], &self.basis[b as usize]);
            if ba.target != bb.source {
                return Err(TrivextError::Invalid(format!("{}·{} is not composable", ba.label, bb.label)));
            }
            for (z, _) in out {
                let bz = &self.basis[*z as usize];
                if bz.source != ba.source || bz.target != bb.target || bz.degree != ba.degree + bb.degree {
                    return Err(TrivextError::Invalid(format!("{}·{} has a bad term {}", ba.label, bb.label, bz.label)));
                }
            }
        }
        if self.dim() <= 128 {
            self.check_associative()?;
        }
        Ok(())
    }

    fn check_associative(&self) -> Result<(), TrivextError> {
        let n = self.dim() as u32;
        for a in 0..n {
            for b in 0..n {
                let ab = self.mul(a, b);
                if ab.is_empty() {
                    continue;
                }
                for c in 0..n {
                    let left = self.mul_vec(ab, &[(c, BigRational::one())]);
                    let bc = self.mul(b, c).to_vec();
                    let right = self.mul_vec(&[(a, BigRational::one())], &bc);
                    if left != right {
                        return Err(TrivextError::Invalid(format!(
                            "not associative on ({}, {}, {})",
                            self.basis[a as usize].label, self.basis[b as usize].label, self.basis[c as usize].label
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn basis(&self) -> &[BasisElement] {
        &self.basis
    }

    pub fn idempotents(&self) -> &[u32] {
        &self.idempotents
    }

    pub fn is_idempotent(&self, i: u32) -> bool {
        self.idempotents.contains(&i)
    }

    pub fn mul(&self, a: u32, b: u32) -> &[(u32, BigRational)] {
        self.products.get(&(a, b)).map_or(&[], |v| v.as_slice())
    }

    pub fn mul_vec(&self, x: &[(u32, BigRational)], y: &[(u32, BigRational)]) -> Sparse {
        let mut acc = BTreeMap::new();
        for (a, ca) in x {
            for (b, cb) in y {
                for (z, cz) in self.mul(*a, *b) {
                    add_into(&mut acc, *z, ca * cb * cz);
                }
            }
        }
        acc.into_iter().collect()
    }

    pub fn index_of(&self, label: &str) -> Option<u32> {
        self.basis.iter().position(|b| b.label == label).map(|i| i as u32)
    }

    /// Non-idempotent basis elements.
    pub fn radical(&self) -> Vec<u32> {
        (0..self.dim() as u32).filter(|i| !self.is_idempotent(*i)).collect()
    }

    /// `ε(f) = Σ_v f(e_v)` on the dual part, zero on the algebra part.
    fn trace_of(&self, dual_of: &HashMap<u32, u32>, x: &[(u32, BigRational)]) -> BigRational {
        let mut s = BigRational::zero();
        for (i, c) in x {
            if let Some(&orig) = dual_of.get(i) {
                if self.is_idempotent(orig) {
                    s += c;
                }
            }
        }
        s
    }
}

/// `A_{m_1} ⊗ ⋯ ⊗ A_{m_k}` with linearly oriented chains; basis pairs `v ≤ w`.
pub fn tensor_a_quiver_algebra(lengths: &[usize]) -> Result<QuiverAlgebra, TrivextError> {
    if lengths.is_empty() || lengths.contains(&0) {
        return Err(TrivextError::Invalid("chain lengths must be positive".into()));
    }
    let mut verts: Vec<Vec<usize>> = vec![vec![]];
    for &m in lengths {
        verts = verts.into_iter().flat_map(|v| (0..m).map(move |i| [v.clone(), vec![i]].concat())).collect();
    }
    let fmt_v = |v: &[usize]| v.iter().map(|x| (x + 1).to_string()).collect::<Vec<_>>().join("");
    let mut basis = Vec::new();
    let mut idempotents = vec![0u32; verts.len()];
    let mut pair_index: HashMap<(usize, usize), u32> = HashMap::new();
    for (i, v) in verts.iter().enumerate() {
        for (j, w) in verts.iter().enumerate() {
            if v.iter().zip(w).all(|(a, b)| a <= b) {
                let idx = basis.len() as u32;
                if i == j {
                    idempotents[i] = idx;
                }
                let label = if i == j { format!("e{}", fmt_v(v)) } else { format!("p{}_{}", fmt_v(v), fmt_v(w)) };
                basis.push(BasisElement { label, source: i, target: j, degree: 0 });
                pair_index.insert((i, j), idx);
            }
        }
    }
    let mut products = HashMap::new();
    for (&(i, j), &a) in &pair_index {
        for (&(j2, k), &b) in &pair_index {
            if j == j2 {
                products.insert((a, b), vec![(pair_index[&(i, k)], BigRational::one())]);
            }
        }
    }
    QuiverAlgebra::new(verts.len(), basis, idempotents, products)
}

/// `A⁰ ⊕ (A⁰)^∨[−d]` with `(a,f)(b,g) = (ab, ag + fb)`.
pub fn trivial_extension(a0: &QuiverAlgebra, d: i64) -> Result<QuiverAlgebra, TrivextError> {
    if d <= 0 {
        return Err(TrivextError::Invalid("degree must be positive".into()));
    }
    if a0.basis.iter().any(|b| b.degree != 0) {
        return Err(TrivextError::Invalid("A⁰ must sit in degree 0".into()));
    }
    let n = a0.dim() as u32;
    let mut basis = a0.basis.clone();
    for b in &a0.basis {
        basis.push(BasisElement { label: format!("{}*", b.label), source: b.target, target: b.source, degree: d });
    }
    let mut products: HashMap<(u32, u32), Sparse> = a0.products.clone();
    // x·y* = Σ_z [y in z·x] z*,  y*·x = Σ_z [y in x·z] z*
    for x in 0..n {
        for z in 0..n {
            for (y, c) in a0.mul(z, x) {
                let e = products.entry((x, n + y)).or_default();
                e.push((n + z, c.clone()));
            }
            for (y, c) in a0.mul(x, z) {
                let e = products.entry((n + y, x)).or_default();
                e.push((n + z, c.clone()));
            }
        }
    }
    for v in products.values_mut() {
        let mut acc = BTreeMap::new();
        for (z, c) in v.drain(..) {
            add_into(&mut acc, z, c);
        }
        *v = acc.into_iter().collect();
    }
    products.retain(|_, v| !v.is_empty());
    QuiverAlgebra::new(a0.vertices, basis, a0.idempotents.clone(), products)
}

/// Rank of `(x, y) ↦ ε(x·y)` on a trivial extension of `a0`.
pub fn frobenius_pairing_rank(a0: &QuiverAlgebra, a: &QuiverAlgebra) -> usize {
    let n = a0.dim() as u32;
    let dual_of: HashMap<u32, u32> = (0..n).map(|i| (n + i, i)).collect();
    let dim = a.dim();
    let mut rows = Vec::with_capacity(dim);
    for x in 0..dim as u32 {
        let row: Vec<BigRational> =
            (0..dim as u32).map(|y| a0.trace_of(&dual_of, a.mul(x, y))).collect();
        rows.push(row);
    }
    rank(&RatMatrix::from_rational_rows(dim, rows))
}

/// Trivial extension of a tensor product of `A_{e_i − 1}`, the mirror algebra of a diagonal polynomial.
pub fn diagonal_mirror_algebra(exponents: &[u32], d: i64) -> Result<QuiverAlgebra, TrivextError> {
    let lengths: Vec<usize> = exponents.iter().map(|&e| e as usize - 1).collect();
    trivial_extension(&tensor_a_quiver_algebra(&lengths)?, d)
}

/// The two-vertex algebra `u: 1 → 2` in degree 0, `v: 2 → 1` in degree 1, `uvu = vuv = 0`.
pub fn cusp_algebra() -> QuiverAlgebra {
    trivial_extension(&tensor_a_quiver_algebra(&[2]).unwrap(), 1).unwrap()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrowJson {
    pub name: String,
    pub source: usize,
    pub target: usize,
    #[serde(default)]
    pub degree: i64,
}

/// A relation is a list of `[coefficient, "a b c"]` with arrows in path order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresentationJson {
    pub vertices: usize,
    pub arrows: Vec<ArrowJson>,
    #[serde(default)]
    pub relations: Vec<Vec<(String, String)>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlgebraJson {
    Chains { chains: Vec<usize>, #[serde(default)] trivial_extension: Option<i64> },
    Quiver(PresentationJson),
}

pub fn algebra_from_json(j: &AlgebraJson) -> Result<QuiverAlgebra, TrivextError> {
    match j {
        AlgebraJson::Chains { chains, trivial_extension: d } => {
            let a0 = tensor_a_quiver_algebra(chains)?;
            match d {
                Some(d) => trivial_extension(&a0, *d),
                None => Ok(a0),
            }
        }
        AlgebraJson::Quiver(p) => from_presentation(p),
    }
}

/// Path algebra modulo length-homogeneous relations; must be finite-dimensional.
pub fn from_presentation(p: &PresentationJson) -> Result<QuiverAlgebra, TrivextError> {
    let names: HashMap<&str, usize> = p.arrows.iter().enumerate().map(|(i, a)| (a.name.as_str(), i)).collect();
    for a in &p.arrows {
        if a.source >= p.vertices || a.target >= p.vertices {
            return Err(TrivextError::Invalid(format!("arrow {} has a bad endpoint", a.name)));
        }
    }
    let mut relations: Vec<Vec<(BigRational, Vec<usize>)>> = Vec::new();
    for r in &p.relations {
        let mut rel = Vec::new();
        for (c, path) in r {
            let coeff: BigRational = c.parse().map_err(|_| TrivextError::Invalid(format!("bad coefficient {c:?}")))?;
            let arrows = path
                .split_whitespace()
                .map(|s| names.get(s).copied().ok_or_else(|| TrivextError::Invalid(format!("unknown arrow {s}"))))
                .collect::<Result<Vec<_>, _>>()?;
            if arrows.is_empty() || arrows.windows(2).any(|w| p.arrows[w[0]].target != p.arrows[w[1]].source) {
                return Err(TrivextError::Invalid(format!("path {path:?} is not composable")));
            }
            rel.push((coeff, arrows));
        }
        let first = &rel.first().ok_or_else(|| TrivextError::Invalid("empty relation".into()))?.1;
        let ends = |q: &Vec<usize>| (p.arrows[q[0]].source, p.arrows[*q.last().unwrap()].target, q.len());
        if rel.iter().any(|(_, q)| ends(q) != ends(first)) {
            return Err(TrivextError::Invalid("relation mixes endpoints or lengths".into()));
        }
        relations.push(rel);
    }

    let path_ends = |q: &[usize], v: usize| -> (usize, usize) {
        if q.is_empty() {
            (v, v)
        } else {
            (p.arrows[q[0]].source, p.arrows[*q.last().unwrap()].target)
        }
    };
    // paths[len] : list of (arrow sequence, start vertex)
    let mut paths: Vec<Vec<(Vec<usize>, usize)>> = vec![(0..p.vertices).map(|v| (vec![], v)).collect()];
    let mut layers: Vec<Layer> = Vec::new();
    const MAX_LEN: usize = 40;
    loop {
        let len = paths.len() - 1;
        let layer = Layer::build(&paths[len], len, &relations, &paths, &path_ends, p.vertices);
        let empty = layer.basis.is_empty();
        layers.push(layer);
        if empty {
            break;
        }
        if len == MAX_LEN {
            return Err(TrivextError::Invalid("the algebra does not look finite-dimensional".into()));
        }
        let next: Vec<(Vec<usize>, usize)> = paths[len]
            .iter()
            .flat_map(|(q, v)| {
                let end = path_ends(q, *v).1;
                p.arrows
                    .iter()
                    .enumerate()
                    .filter(move |(_, a)| a.source == end)
                    .map(move |(i, a)| ([q.clone(), vec![i]].concat(), if q.is_empty() { a.source } else { *v }))
            })
            .collect();
        paths.push(next);
    }

    let mut basis = Vec::new();
    let mut where_: HashMap<(usize, usize), u32> = HashMap::new();
    for (len, layer) in layers.iter().enumerate() {
        for (k, &pi) in layer.basis.iter().enumerate() {
            let (q, v) = &paths[len][pi];
            let (s, t) = path_ends(q, *v);
            let label = if q.is_empty() {
                format!("e{}", v + 1)
            } else {
                q.iter().map(|&i| p.arrows[i].name.as_str()).collect::<Vec<_>>().join("")
            };
            let degree = q.iter().map(|&i| p.arrows[i].degree).sum();
            where_.insert((len, k), basis.len() as u32);
            basis.push(BasisElement { label, source: s, target: t, degree });
        }
    }
    let idempotents: Vec<u32> = (0..p.vertices).map(|v| where_[&(0, v)]).collect();
    let path_index: Vec<HashMap<(Vec<usize>, usize), usize>> =
        paths.iter().map(|l| l.iter().cloned().enumerate().map(|(i, x)| (x, i)).collect()).collect();
    let mut products = HashMap::new();
    let located: Vec<(usize, usize)> =
        layers.iter().enumerate().flat_map(|(len, l)| (0..l.basis.len()).map(move |k| (len, k))).collect();
    for &(la, ka) in &located {
        for &(lb, kb) in &located {
            let (qa, va) = &paths[la][layers[la].basis[ka]];
            let (qb, vb) = &paths[lb][layers[lb].basis[kb]];
            if path_ends(qa, *va).1 != path_ends(qb, *vb).0 {
                continue;
            }
            let len = la + lb;
            if len >= layers.len() || layers[len].basis.is_empty() {
                continue;
            }
            let q = [qa.clone(), qb.clone()].concat();
            let start = path_ends(qa, *va).0;
            let pi = path_index[len][&(q, start)];
            let coords = layers[len].reduce(pi);
            let out: Sparse = coords.into_iter().map(|(k, c)| (where_[&(len, k)], c)).collect();
            if !out.is_empty() {
                products.insert((where_[&(la, ka)], where_[&(lb, kb)]), out);
            }
        }
    }
    QuiverAlgebra::new(p.vertices, basis, idempotents, products)
}

/// One path length: the ideal's reduced row echelon form and the surviving paths.
struct Layer {
    rref: RatMatrix,
    pivots: Vec<usize>,
    basis: Vec<usize>,
}

impl Layer {
    fn build(
        level: &[(Vec<usize>, usize)],
        len: usize,
        relations: &[Vec<(BigRational, Vec<usize>)>],
        paths: &[Vec<(Vec<usize>, usize)>],
        path_ends: &dyn Fn(&[usize], usize) -> (usize, usize),
        vertices: usize,
    ) -> Layer {
        let index: HashMap<&(Vec<usize>, usize), usize> = level.iter().enumerate().map(|(i, x)| (x, i)).collect();
        let mut rows: Vec<Vec<BigRational>> = Vec::new();
        for rel in relations {
            let rl = rel[0].1.len();
            if rl > len {
                continue;
            }
            let (rs, rt) = path_ends(&rel[0].1, 0);
            for pl in 0..=len - rl {
                let ql = len - rl - pl;
                let prefixes: Vec<&(Vec<usize>, usize)> = if pl == 0 {
                    vec![]
                } else {
                    paths[pl].iter().filter(|(q, v)| path_ends(q, *v).1 == rs).collect()
                };
                let suffixes: Vec<&(Vec<usize>, usize)> = if ql == 0 {
                    vec![]
                } else {
                    paths[ql].iter().filter(|(q, v)| path_ends(q, *v).0 == rt).collect()
                };
                let pre: Vec<Option<&Vec<usize>>> =
                    if pl == 0 { vec![None] } else { prefixes.iter().map(|x| Some(&x.0)).collect() };
                let suf: Vec<Option<&Vec<usize>>> =
                    if ql == 0 { vec![None] } else { suffixes.iter().map(|x| Some(&x.0)).collect() };
                for a in &pre {
                    for b in &suf {
                        let mut row = vec![BigRational::zero(); level.len()];
                        for (c, q) in rel {
                            let mut full = a.cloned().unwrap_or_default();
                            full.extend(q);
                            full.extend(b.cloned().unwrap_or_default());
                            let start = path_ends(&full, 0).0;
                            row[index[&(full, start)]] += c;
                        }
                        rows.push(row);
                    }
                }
            }
        }
        let _ = vertices;
        let m = RatMatrix::from_rational_rows(level.len(), rows);
        let (rref, pivots) = m.rref();
        let basis = (0..level.len()).filter(|i| !pivots.contains(i)).collect();
        Layer { rref, pivots, basis }
    }

    /// Coordinates of path `i` in the surviving basis (indices into `self.basis`).
    fn reduce(&self, i: usize) -> Vec<(usize, BigRational)> {
        let mut v = vec![BigRational::zero(); self.rref.cols];
        v[i] = BigRational::one();
        for (r, &pc) in self.pivots.iter().enumerate() {
            if !v[pc].is_zero() {
                let f = v[pc].clone();
                for j in 0..self.rref.cols {
                    let x = self.rref.get(r, j);
                    if !x.is_zero() {
                        v[j] -= &f * x;
                    }
                }
            }
        }
        self.basis.iter().enumerate().filter(|(_, &b)| !v[b].is_zero()).map(|(k, &b)| (k, v[b].clone())).collect()
    }
}

/// Cochain bases and Hochschild differentials of one internal degree `s`.
struct CochainComplex<'a> {
    a: &'a QuiverAlgebra,
    s: i64,
    relative: bool,
    inputs: Vec<u32>,
    /// `y ↦ [(x, x', coeff of y in x·x')]` over inputs.
    factor: HashMap<u32, Vec<(u32, u32, BigRational)>>,
}

/// A chain of inputs with its start and end vertex (`usize::MAX` when unconstrained).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Chain {
    start: usize,
    end: usize,
    items: Vec<u32>,
}

struct Space {
    basis: Vec<(Chain, u32)>,
    index: HashMap<(Chain, u32), u32>,
}

impl<'a> CochainComplex<'a> {
    fn new(a: &'a QuiverAlgebra, s: i64, relative: bool) -> Self {
        let inputs: Vec<u32> = if relative { a.radical() } else { (0..a.dim() as u32).collect() };
        let mut factor: HashMap<u32, Vec<(u32, u32, BigRational)>> = HashMap::new();
        for &x in &inputs {
            for &y in &inputs {
                for (z, c) in a.mul(x, y) {
                    if relative && a.is_idempotent(*z) {
                        continue;
                    }
                    factor.entry(*z).or_default().push((x, y, c.clone()));
                }
            }
        }
        CochainComplex { a, s, relative, inputs, factor }
    }

    fn degree(&self, i: u32) -> i64 {
        self.a.basis[i as usize].degree
    }

    fn chains(&self, r: usize) -> Vec<Chain> {
        if !self.relative {
            let mut out = vec![Chain { start: usize::MAX, end: usize::MAX, items: vec![] }];
            for _ in 0..r {
                out = out
                    .into_iter()
                    .flat_map(|c| self.inputs.iter().map(move |&x| {
                        let mut items = c.items.clone();
                        items.push(x);
                        Chain { items, ..c.clone() }
                    }))
                    .collect();
            }
            return out;
        }
        let mut out: Vec<Chain> = (0..self.a.vertices).map(|v| Chain { start: v, end: v, items: vec![] }).collect();
        for _ in 0..r {
            let mut next = Vec::new();
            for c in &out {
                for &x in &self.inputs {
                    let b = &self.a.basis[x as usize];
                    if (c.items.is_empty() && b.source == c.start) || (!c.items.is_empty() && b.source == c.end) {
                        let mut items = c.items.clone();
                        items.push(x);
                        next.push(Chain { start: c.start, end: b.target, items });
                    }
                }
            }
            out = next;
        }
        out
    }

    fn space(&self, r: usize) -> Space {
        let mut basis = Vec::new();
        for c in self.chains(r) {
            let deg: i64 = c.items.iter().map(|&x| self.degree(x)).sum::<i64>() + self.s;
            for b in 0..self.a.dim() as u32 {
                let bb = &self.a.basis[b as usize];
                if bb.degree != deg {
                    continue;
                }
                if self.relative && (bb.source != c.start || bb.target != c.end) {
                    continue;
                }
                basis.push((c.clone(), b));
            }
        }
        let index = basis.iter().enumerate().map(|(i, x)| (x.clone(), i as u32)).collect();
        Space { basis, index }
    }

    fn extend_chain(&self, c: &Chain, front: Option<u32>, back: Option<u32>) -> Option<Chain> {
        let mut items = c.items.clone();
        let (mut start, mut end) = (c.start, c.end);
        if let Some(x) = front {
            let b = &self.a.basis[x as usize];
            if self.relative && b.target != c.start {
                return None;
            }
            items.insert(0, x);
            if self.relative {
                start = b.source;
            }
        }
        if let Some(x) = back {
            let b = &self.a.basis[x as usize];
            if self.relative && b.source != c.end {
                return None;
            }
            items.push(x);
            if self.relative {
                end = b.target;
            }
        }
        Some(Chain { start, end, items })
    }

    /// Rows of `δ: C^r → C^{r+1}` over the basis of `target`.
    fn differential(&self, src: &Space, target: &Space, r: usize) -> Vec<Sparse> {
        let s_odd = self.s.rem_euclid(2) == 1;
        src.basis
            .iter()
            .map(|(c, b)| {
                let mut acc: BTreeMap<u32, BigRational> = BTreeMap::new();
                let mut push = |chain: Chain, out: &[(u32, BigRational)], coeff: &BigRational| {
                    for (z, cz) in out {
                        let col = target.index[&(chain.clone(), *z)];
                        add_into(&mut acc, col, coeff * cz);
                    }
                };
                let one = [(*b, BigRational::one())];
                for &x in &self.inputs {
                    if let Some(chain) = self.extend_chain(c, Some(x), None) {
                        let sign = if s_odd && self.degree(x).rem_euclid(2) == 1 { -1 } else { 1 };
                        push(chain, self.a.mul(x, *b), &BigRational::from_integer(sign.into()));
                    }
                    if let Some(chain) = self.extend_chain(c, None, Some(x)) {
                        let sign = if (r + 1) % 2 == 1 { -1 } else { 1 };
                        push(chain, self.a.mul(*b, x), &BigRational::from_integer(sign.into()));
                    }
                }
                for i in 0..c.items.len() {
                    let sign = if (i + 1) % 2 == 1 { -1 } else { 1 };
                    for (x, y, coeff) in self.factor.get(&c.items[i]).map_or(&[][..], |v| v.as_slice()) {
                        let mut items = c.items.clone();
                        items.splice(i..=i, [*x, *y]);
                        let chain = Chain { items, ..c.clone() };
                        push(chain, &one, &(coeff * BigRational::from_integer(sign.into())));
                    }
                }
                acc.into_iter().collect()
            })
            .collect()
    }
}

fn sparse_rank_rational(rows: &[Sparse]) -> usize {
    let int_rows: Vec<SparseVec> = rows.iter().filter(|r| !r.is_empty()).map(|r| integer_row(r.iter().cloned())).collect();
    SparseEchelon::new(int_rows).rank()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HHCell {
    pub p: usize,
    pub s: i64,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AlgebraHHTable {
    pub p_max: usize,
    pub s_min: i64,
    pub cells: Vec<HHCell>,
}

impl AlgebraHHTable {
    pub fn get(&self, p: usize, s: i64) -> usize {
        self.cells.iter().find(|c| c.p == p && c.s == s).map_or(0, |c| c.dim)
    }

    /// `Σ_{s<0} dim HH^p(A)_s`.
    pub fn negative_total(&self, p: usize) -> usize {
        self.cells.iter().filter(|c| c.p == p && c.s < 0).map(|c| c.dim).sum()
    }

    pub fn render(&self) -> String {
        let mut out = String::from("p\\s");
        for s in (self.s_min..=0).rev() {
            out.push_str(&format!("\t{s}"));
        }
        out.push('\n');
        for p in 0..=self.p_max {
            out.push_str(&p.to_string());
            for s in (self.s_min..=0).rev() {
                out.push_str(&format!("\t{}", self.get(p, s)));
            }
            out.push('\n');
        }
        out
    }
}

pub const DEFAULT_R_BOUND: usize = 14;

/// `dim HH^p(A)_s` for `0 ≤ p ≤ p_max`, `s_min ≤ s ≤ 0`, using `r = p − s`.
pub fn hochschild_algebra(a: &QuiverAlgebra, p_max: usize, s_min: i64) -> Result<AlgebraHHTable, TrivextError> {
    hochschild_algebra_bounded(a, p_max, s_min, DEFAULT_R_BOUND, true)
}

/// As [`hochschild_algebra`]; `relative = false` uses the full unnormalized bar complex.
pub fn hochschild_algebra_bounded(
    a: &QuiverAlgebra,
    p_max: usize,
    s_min: i64,
    r_bound: usize,
    relative: bool,
) -> Result<AlgebraHHTable, TrivextError> {
    let needed = (p_max as i64 - s_min) as usize;
    if needed > r_bound {
        return Err(TrivextError::TruncationExceeded { needed, bound: r_bound });
    }
    let per_s: Vec<Vec<HHCell>> = (s_min..=0)
        .into_par_iter()
        .map(|s| {
            let cx = CochainComplex::new(a, s, relative);
            let r_lo = (-s) as usize;
            let r_hi = r_lo + p_max;
            let spaces: Vec<Space> = (0..=r_hi + 1).map(|r| if r + 1 < r_lo { empty_space() } else { cx.space(r) }).collect();
            let mut ranks = vec![0usize; r_hi + 1];
            for r in r_lo.saturating_sub(1)..=r_hi {
                let rows = cx.differential(&spaces[r], &spaces[r + 1], r);
                ranks[r] = sparse_rank_rational(&rows);
            }
            (0..=p_max)
                .map(|p| {
                    let r = p + r_lo;
                    let incoming = if r == 0 { 0 } else { ranks[r - 1] };
                    HHCell { p, s, dim: spaces[r].basis.len() - ranks[r] - incoming }
                })
                .collect()
        })
        .collect();
    let mut cells: Vec<HHCell> = per_s.into_iter().flatten().collect();
    cells.sort_by_key(|c| (c.p, -c.s));
    Ok(AlgebraHHTable { p_max, s_min, cells })
}

fn empty_space() -> Space {
    Space { basis: vec![], index: HashMap::new() }
}

/// Checks `δ∘δ = 0` on the relative complex for `r ≤ r_max` in degree `s`.
pub fn check_d_squared(a: &QuiverAlgebra, s: i64, r_max: usize) -> bool {
    let cx = CochainComplex::new(a, s, true);
    let spaces: Vec<Space> = (0..=r_max + 2).map(|r| cx.space(r)).collect();
    for r in 0..=r_max {
        let d1 = cx.differential(&spaces[r], &spaces[r + 1], r);
        let d2 = cx.differential(&spaces[r + 1], &spaces[r + 2], r + 1);
        for row in &d1 {
            let mut acc: BTreeMap<u32, BigRational> = BTreeMap::new();
            for (mid, c) in row {
                for (col, d) in &d2[*mid as usize] {
                    add_into(&mut acc, *col, c * d);
                }
            }
            if !acc.is_empty() {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EulerReport {
    pub is_zero: bool,
    pub leibniz: bool,
    pub cocycle: bool,
    pub nontrivial: bool,
}

/// `eu(x) = |x|·x`: Leibniz on basis pairs, cocycle, and class nonzero in `HH¹(A)₀`.
pub fn euler_derivation(a: &QuiverAlgebra) -> EulerReport {
    let n = a.dim() as u32;
    let eu = |x: u32| -> Sparse {
        let d = a.basis[x as usize].degree;
        if d == 0 {
            vec![]
        } else {
            vec![(x, BigRational::from_integer(d.into()))]
        }
    };
    let mut leibniz = true;
    for x in 0..n {
        for y in 0..n {
            let xy = a.mul(x, y);
            let mut lhs: BTreeMap<u32, BigRational> = BTreeMap::new();
            for (z, c) in xy {
                for (w, cw) in eu(*z) {
                    add_into(&mut lhs, w, c * cw);
                }
            }
            let mut rhs: BTreeMap<u32, BigRational> = BTreeMap::new();
            for (z, c) in a.mul_vec(&eu(x), &[(y, BigRational::one())]).into_iter().chain(a.mul_vec(&[(x, BigRational::one())], &eu(y))) {
                add_into(&mut rhs, z, c);
            }
            leibniz &= lhs == rhs;
        }
    }
    let cx = CochainComplex::new(a, 0, true);
    let c0 = cx.space(0);
    let c1 = cx.space(1);
    let c2 = cx.space(2);
    let mut vec: BTreeMap<u32, BigRational> = BTreeMap::new();
    for (i, (c, b)) in c1.basis.iter().enumerate() {
        let x = c.items[0];
        if *b == x && a.basis[x as usize].degree != 0 {
            vec.insert(i as u32, BigRational::from_integer(a.basis[x as usize].degree.into()));
        }
    }
    let is_zero = vec.is_empty();
    let d1 = cx.differential(&c1, &c2, 1);
    let mut image: BTreeMap<u32, BigRational> = BTreeMap::new();
    for (i, c) in &vec {
        for (col, d) in &d1[*i as usize] {
            add_into(&mut image, *col, c * d);
        }
    }
    let cocycle = image.is_empty();
    let d0 = cx.differential(&c0, &c1, 0);
    let base = sparse_rank_rational(&d0);
    let mut with_eu = d0.clone();
    with_eu.push(vec.into_iter().collect());
    let nontrivial = sparse_rank_rational(&with_eu) > base;
    EulerReport { is_zero, leibniz, cocycle, nontrivial }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(v: &[(&str, &str)]) -> Vec<(String, String)> {
        v.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    fn fig1() -> PresentationJson {
        PresentationJson {
            vertices: 2,
            arrows: vec![
                ArrowJson { name: "u".into(), source: 0, target: 1, degree: 0 },
                ArrowJson { name: "v".into(), source: 1, target: 0, degree: 1 },
            ],
            relations: vec![rel(&[("1", "u v u")]), rel(&[("1", "v u v")])],
        }
    }

    #[test]
    fn dimensions() {
        assert_eq!(tensor_a_quiver_algebra(&[2]).unwrap().dim(), 3);
        assert_eq!(tensor_a_quiver_algebra(&[1]).unwrap().dim(), 1);
        assert_eq!(tensor_a_quiver_algebra(&[3, 3, 3]).unwrap().dim(), 216);
        assert_eq!(tensor_a_quiver_algebra(&[2, 2]).unwrap().dim(), 9);
        let a0 = tensor_a_quiver_algebra(&[3, 2]).unwrap();
        let a = trivial_extension(&a0, 2).unwrap();
        assert_eq!(a.dim(), 2 * a0.dim());
        assert_eq!(frobenius_pairing_rank(&a0, &a), a.dim());
    }

    #[test]
    fn commuting_square() {
        // in A₂ ⊗ A₂ the two paths around the square agree
        let a = tensor_a_quiver_algebra(&[2, 2]).unwrap();
        let p = |l: &str| a.index_of(l).unwrap();
        let top = a.mul(p("p11_12"), p("p12_22"));
        let side = a.mul(p("p11_21"), p("p21_22"));
        assert_eq!(top, side);
        assert_eq!(top, &[(p("p11_22"), BigRational::one())]);
    }

    #[test]
    fn cusp_algebra_shape() {
        let a = cusp_algebra();
        assert_eq!(a.dim(), 6);
        let degrees: Vec<i64> = a.basis().iter().map(|b| b.degree).collect();
        assert_eq!(degrees.iter().filter(|&&d| d == 0).count(), 3);
        let u = a.index_of("p1_2").unwrap();
        let v = a.index_of("p1_2*").unwrap();
        assert_eq!(a.basis()[v as usize].degree, 1);
        let uv = a.mul(u, v).to_vec();
        let vu = a.mul(v, u).to_vec();
        assert_eq!(uv.len(), 1);
        assert_eq!(vu.len(), 1);
        assert!(a.mul_vec(&uv, &[(u, BigRational::one())]).is_empty());
        assert!(a.mul_vec(&vu, &[(v, BigRational::one())]).is_empty());
    }

    #[test]
    fn presentation_matches_trivial_extension() {
        let q = from_presentation(&fig1()).unwrap();
        assert_eq!(q.dim(), 6);
        let labels: Vec<&str> = q.basis().iter().map(|b| b.label.as_str()).collect();
        assert_eq!(labels, vec!["e1", "e2", "u", "v", "uv", "vu"]);
        let t1 = hochschild_algebra(&q, 3, -8).unwrap();
        let t2 = hochschild_algebra(&cusp_algebra(), 3, -8).unwrap();
        assert_eq!(t1, t2);
        let bad = PresentationJson { relations: vec![], ..fig1() };
        assert!(from_presentation(&bad).is_err());
    }

    #[test]
    fn d_squared_vanishes() {
        for a in [cusp_algebra(), diagonal_mirror_algebra(&[3, 3], 1).unwrap(), trivial_extension(&tensor_a_quiver_algebra(&[3]).unwrap(), 2).unwrap()] {
            for s in -3..=0 {
                assert!(check_d_squared(&a, s, 4));
            }
        }
    }

    #[test]
    fn relative_matches_full_bar() {
        let small = vec![
            tensor_a_quiver_algebra(&[2]).unwrap(),
            trivial_extension(&tensor_a_quiver_algebra(&[1]).unwrap(), 1).unwrap(),
            trivial_extension(&tensor_a_quiver_algebra(&[1]).unwrap(), 2).unwrap(),
            tensor_a_quiver_algebra(&[1]).unwrap(),
        ];
        for a in &small {
            assert!(a.dim() <= 4);
            let rel = hochschild_algebra_bounded(a, 2, -2, 8, true).unwrap();
            let full = hochschild_algebra_bounded(a, 2, -2, 8, false).unwrap();
            assert_eq!(rel, full);
        }
    }

    #[test]
    fn cusp_hochschild() {
        let a = cusp_algebra();
        let t = hochschild_algebra(&a, 2, -10).unwrap();
        assert_eq!(t.negative_total(1), 0);
        assert_eq!(t.negative_total(2), 2);
        assert!(t.get(0, 0) >= 1);
        let eu = euler_derivation(&a);
        assert!(eu.leibniz && eu.cocycle && eu.nontrivial && !eu.is_zero);
        assert!(t.get(1, 0) >= 1);
    }

    #[test]
    fn degree_zero_euler_is_zero() {
        let eu = euler_derivation(&tensor_a_quiver_algebra(&[3]).unwrap());
        assert!(eu.is_zero && eu.cocycle && !eu.nontrivial);
    }

    #[test]
    fn truncation_error() {
        assert_eq!(
            hochschild_algebra_bounded(&cusp_algebra(), 2, -20, 10, true).unwrap_err(),
            TrivextError::TruncationExceeded { needed: 22, bound: 10 }
        );
    }

    #[test]
    fn json_forms() {
        let j: AlgebraJson = serde_json::from_str(r#"{"chains":[2],"trivial_extension":1}"#).unwrap();
        assert_eq!(algebra_from_json(&j).unwrap().dim(), 6);
        let j: AlgebraJson = serde_json::from_value(serde_json::to_value(fig1()).unwrap()).unwrap();
        assert_eq!(algebra_from_json(&j).unwrap().dim(), 6);
    }
}
