//! Character lattices of diagonal symmetry groups and the sectors of `ker χ`.
//!
//! A class in `Γ̂` is stored as its integer weight (the free coordinate,
//! normalized so that `χ_i ↦ d_i`) together with residues modulo the torsion
//! invariant factors.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{integer_kernel, snf, to_i64, IntMatrix};
use crate::wpoly::{WeightSystem, WeightedPolynomial, WpolyError};

pub type Phase = Ratio<i64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymmetryError {
    #[error(transparent)]
    Wpoly(#[from] WpolyError),
    #[error("character group has free rank {0}, expected 1")]
    RankNotOne(usize),
    #[error("the subgroup does not contain the grading element")]
    GradingElementMissing,
    #[error("generator {0:?} does not preserve the polynomial")]
    NotInKernel(Vec<String>),
    #[error("ker χ is infinite")]
    InfiniteKernel,
    #[error("invalid group specification: {0}")]
    Invalid(String),
}

/// Reduces a rational into `[0, 1)`.
pub fn frac(x: Phase) -> Phase {
    x - Phase::from_integer(x.floor().to_integer())
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CharClass {
    pub weight: i64,
    pub torsion: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SubgroupSpec {
    /// The maximal group `Γ_w`.
    Full,
    /// The image of `φ: 𝔾ₘ → Γ_w`.
    PhiGm,
    /// Generated by `φ(𝔾ₘ)` and the given phase vectors in `ker χ_w`.
    Explicit(Vec<Vec<Phase>>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupJson {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub generators: Vec<Vec<String>>,
}

impl SubgroupSpec {
    pub fn from_json(g: &GroupJson) -> Result<Self, SymmetryError> {
        match g.kind.as_str() {
            "full" => Ok(SubgroupSpec::Full),
            "phi_gm" => Ok(SubgroupSpec::PhiGm),
            "explicit" => {
                let gens = g
                    .generators
                    .iter()
                    .map(|v| {
                        v.iter()
                            .map(|s| {
                                Phase::from_str(s.trim())
                                    .map(frac)
                                    .map_err(|_| SymmetryError::Invalid(format!("bad phase {s:?}")))
                            })
                            .collect()
                    })
                    .collect::<Result<Vec<Vec<Phase>>, _>>()?;
                Ok(SubgroupSpec::Explicit(gens))
            }
            k => Err(SymmetryError::Invalid(format!("unknown group kind {k:?}"))),
        }
    }

    pub fn to_json(&self) -> GroupJson {
        match self {
            SubgroupSpec::Full => GroupJson { kind: "full".into(), generators: vec![] },
            SubgroupSpec::PhiGm => GroupJson { kind: "phi_gm".into(), generators: vec![] },
            SubgroupSpec::Explicit(g) => GroupJson {
                kind: "explicit".into(),
                generators: g.iter().map(|v| v.iter().map(|p| p.to_string()).collect()).collect(),
            },
        }
    }
}

/// `Γ̂ ≅ ℤ ⊕ ⊕_k ℤ/m_k` with the classes of `χ_0, χ_1, …, χ_n` and `χ`.
#[derive(Clone, Debug)]
pub struct CharacterLattice {
    ws: WeightSystem,
    moduli: Vec<i64>,
    var_classes: Vec<CharClass>,
    chi: CharClass,
    include_x0: bool,
}

impl CharacterLattice {
    pub fn n(&self) -> usize {
        self.ws.weights.len()
    }

    pub fn weight_system(&self) -> &WeightSystem {
        &self.ws
    }

    pub fn h(&self) -> i64 {
        self.ws.degree
    }

    pub fn d0(&self) -> i64 {
        self.ws.d0()
    }

    pub fn moduli(&self) -> &[i64] {
        &self.moduli
    }

    pub fn torsion_order(&self) -> i64 {
        self.moduli.iter().product()
    }

    pub fn include_x0(&self) -> bool {
        self.include_x0
    }

    /// Variable indices in play: `0` is `x₀`, `1..=n` the original variables.
    pub fn active_vars(&self) -> Vec<usize> {
        let start = if self.include_x0 { 0 } else { 1 };
        (start..=self.n()).collect()
    }

    /// Class of variable `i` (`0` is `x₀`, carrying `χ₀`).
    pub fn var_class(&self, i: usize) -> &CharClass {
        &self.var_classes[i]
    }

    pub fn var_weight(&self, i: usize) -> i64 {
        self.var_classes[i].weight
    }

    pub fn chi(&self) -> &CharClass {
        &self.chi
    }

    pub fn chi0(&self) -> &CharClass {
        &self.var_classes[0]
    }

    pub fn zero(&self) -> CharClass {
        CharClass { weight: 0, torsion: vec![0; self.moduli.len()] }
    }

    fn reduce(&self, mut c: CharClass) -> CharClass {
        for (t, m) in c.torsion.iter_mut().zip(&self.moduli) {
            *t = t.rem_euclid(*m);
        }
        c
    }

    pub fn add(&self, a: &CharClass, b: &CharClass) -> CharClass {
        self.reduce(CharClass {
            weight: a.weight + b.weight,
            torsion: a.torsion.iter().zip(&b.torsion).map(|(x, y)| x + y).collect(),
        })
    }

    pub fn scale(&self, a: &CharClass, k: i64) -> CharClass {
        self.reduce(CharClass { weight: a.weight * k, torsion: a.torsion.iter().map(|x| x * k).collect() })
    }

    pub fn sub(&self, a: &CharClass, b: &CharClass) -> CharClass {
        self.add(a, &self.scale(b, -1))
    }

    /// Degree of a monomial over variables `0..=n`.
    pub fn class_of(&self, exps: &[u32]) -> CharClass {
        let mut c = self.zero();
        for (i, &e) in exps.iter().enumerate() {
            if e > 0 {
                c = self.add(&c, &self.scale(&self.var_classes[i], e as i64));
            }
        }
        c
    }

    /// Same as [`class_of`](Self::class_of) for a monomial in `x_1..x_n` only.
    pub fn class_of_x(&self, exps: &[u32]) -> CharClass {
        let mut c = self.zero();
        for (i, &e) in exps.iter().enumerate() {
            if e > 0 {
                c = self.add(&c, &self.scale(&self.var_classes[i + 1], e as i64));
            }
        }
        c
    }

    /// e.g. `Z x Z/4 x Z/4`.
    pub fn describe(&self) -> String {
        let mut s = String::from("Z");
        for m in &self.moduli {
            s.push_str(&format!(" x Z/{m}"));
        }
        s
    }

    fn eval(&self, hom: &Hom, c: &CharClass) -> Phase {
        let mut x = hom.a * c.weight;
        for ((t, b), m) in c.torsion.iter().zip(&hom.b).zip(&self.moduli) {
            x += Phase::new(t * b, *m);
        }
        frac(x)
    }
}

impl fmt::Display for CharClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.torsion.is_empty() {
            write!(f, "{}", self.weight)
        } else {
            let t: Vec<String> = self.torsion.iter().map(|x| x.to_string()).collect();
            write!(f, "({}; {})", self.weight, t.join(","))
        }
    }
}

/// A homomorphism `Γ̂ → ℚ/ℤ`: `a` on the free generator, `b_k / m_k` on torsion generators.
struct Hom {
    a: Phase,
    b: Vec<i64>,
}

fn phase_group_closure(gens: &[Vec<Phase>], limit: usize) -> Option<HashSet<Vec<Phase>>> {
    let n = gens.first().map_or(0, |g| g.len());
    let zero = vec![Phase::zero(); n];
    let mut seen: HashSet<Vec<Phase>> = HashSet::from([zero.clone()]);
    let mut frontier = vec![zero];
    while let Some(x) = frontier.pop() {
        for g in gens {
            let y: Vec<Phase> = x.iter().zip(g).map(|(a, b)| frac(a + b)).collect();
            if seen.insert(y.clone()) {
                if seen.len() > limit {
                    return None;
                }
                frontier.push(y);
            }
        }
    }
    Some(seen)
}

fn lcm_denominators(gens: &[Vec<Phase>]) -> i64 {
    gens.iter().flatten().fold(1i64, |l, p| l.lcm(p.denom()))
}

pub fn build_lattice(
    w: &WeightedPolynomial,
    sub: &SubgroupSpec,
    include_x0: bool,
) -> Result<CharacterLattice, SymmetryError> {
    let ws = w.require_weights()?.clone();
    let n = ws.weights.len();
    let h = ws.degree;
    let weight_row: Vec<i64> = ws.weights.iter().copied().chain([h]).collect();

    let relations: Vec<Vec<i64>> = match sub {
        SubgroupSpec::Full => w
            .terms()
            .iter()
            .map(|t| t.exp.0.iter().map(|&e| e as i64).chain([-1]).collect())
            .collect(),
        SubgroupSpec::PhiGm => integer_kernel(&IntMatrix::from_rows(&[weight_row.clone()]))
            .iter()
            .map(|v| v.iter().map(to_i64).collect())
            .collect(),
        SubgroupSpec::Explicit(gens) => explicit_relations(w, &ws, gens)?,
    };
    if relations.is_empty() {
        return Err(SymmetryError::RankNotOne(n + 1));
    }

    let s = snf(&IntMatrix::from_rows(&relations));
    let diag = s.diagonal();
    let rank = s.rank();
    if rank != n {
        return Err(SymmetryError::RankNotOne(n + 1 - rank));
    }
    let torsion_cols: Vec<(usize, i64)> =
        diag.iter().enumerate().map(|(k, d)| (k, to_i64(d))).filter(|(_, d)| *d > 1).collect();
    let moduli: Vec<i64> = torsion_cols.iter().map(|(_, d)| *d).collect();
    let free = rank;
    let coord = |j: usize, k: usize| -> i64 { to_i64(&s.v[(j, k)]) };

    let fchi = coord(n, free);
    if fchi.abs() != h {
        return Err(SymmetryError::Invalid(format!("free coordinate of χ is {fchi}, expected ±{h}")));
    }
    let sign = fchi.signum();
    let gen_class = |j: usize| CharClass {
        weight: sign * coord(j, free),
        torsion: torsion_cols.iter().map(|&(k, m)| coord(j, k).rem_euclid(m)).collect(),
    };
    let gens: Vec<CharClass> = (0..=n).map(gen_class).collect();
    for (j, g) in gens.iter().enumerate() {
        assert_eq!(g.weight, weight_row[j], "weight functional disagrees with the free coordinate");
    }

    let mut lat = CharacterLattice {
        ws,
        moduli,
        var_classes: Vec::new(),
        chi: gens[n].clone(),
        include_x0,
    };
    let mut chi0 = lat.chi.clone();
    for g in &gens[..n] {
        chi0 = lat.sub(&chi0, g);
    }
    lat.var_classes = std::iter::once(chi0).chain(gens[..n].iter().cloned()).collect();
    Ok(lat)
}

/// Characters of `Γ_w` trivial on the subgroup generated by `φ(𝔾ₘ)` and `gens`.
fn explicit_relations(
    w: &WeightedPolynomial,
    ws: &WeightSystem,
    gens: &[Vec<Phase>],
) -> Result<Vec<Vec<i64>>, SymmetryError> {
    let n = ws.weights.len();
    for g in gens {
        if g.len() != n {
            return Err(SymmetryError::Invalid(format!("generator has {} phases, expected {n}", g.len())));
        }
        for t in w.terms() {
            let s: Phase = t.exp.0.iter().zip(g).map(|(&e, p)| p * e as i64).sum();
            if !s.is_integer() {
                return Err(SymmetryError::NotInKernel(g.iter().map(|p| p.to_string()).collect()));
            }
        }
    }
    // ker χ_w is finite of order at most h^n, which bounds the closure
    let limit = (ws.degree as usize).saturating_pow(n as u32).max(1);
    let group = phase_group_closure(gens, limit).ok_or(SymmetryError::InfiniteKernel)?;
    let jw: Vec<Phase> = ws.weights.iter().map(|&d| frac(Phase::new(d, ws.degree))).collect();
    if !group.contains(&jw) {
        return Err(SymmetryError::GradingElementMissing);
    }

    // unknowns (v_1..v_n, v_χ, b_1..b_k): deg v = 0 and N·(v·g_j) = N·b_j
    let big_n = lcm_denominators(gens);
    let k = gens.len();
    let mut rows: Vec<Vec<i64>> = Vec::new();
    rows.push(ws.weights.iter().copied().chain([ws.degree]).chain(std::iter::repeat(0).take(k)).collect());
    for (j, g) in gens.iter().enumerate() {
        let mut r: Vec<i64> = g.iter().map(|p| (p * big_n).to_integer()).collect();
        r.push(0);
        r.extend((0..k).map(|i| if i == j { -big_n } else { 0 }));
        rows.push(r);
    }
    let ker = integer_kernel(&IntMatrix::from_rows(&rows));
    Ok(ker
        .iter()
        .map(|v| v[..=n].iter().map(|x| x.to_i64().expect("relation overflow")).collect())
        .filter(|v: &Vec<i64>| v.iter().any(|x| *x != 0))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SectorData {
    /// Phase on each variable, index 0 being `x₀`.
    #[serde(serialize_with = "ser_phases")]
    pub gamma: Vec<Phase>,
    pub fixed: Vec<usize>,
    pub moved: Vec<usize>,
    pub det_n_dual: CharClass,
}

impl SectorData {
    pub fn is_identity(&self) -> bool {
        self.moved.is_empty()
    }

    pub fn phases_string(&self) -> String {
        let p: Vec<String> = self.gamma.iter().map(|x| x.to_string()).collect();
        format!("({})", p.join(","))
    }
}

pub(crate) fn ser_phases<S: serde::Serializer>(v: &[Phase], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for p in v {
        seq.serialize_element(&p.to_string())?;
    }
    seq.end()
}

pub fn enumerate_ker_chi(lat: &CharacterLattice) -> Result<Vec<SectorData>, SymmetryError> {
    let h = lat.h();
    if h <= 0 {
        return Err(SymmetryError::InfiniteKernel);
    }
    let active = lat.active_vars();
    let mut out = Vec::new();
    let total: i64 = lat.torsion_order();
    for idx in 0..total {
        let mut b = Vec::with_capacity(lat.moduli.len());
        let mut r = idx;
        for m in &lat.moduli {
            b.push(r % m);
            r /= m;
        }
        let tors: Phase = lat.chi.torsion.iter().zip(&b).zip(&lat.moduli).map(|((t, b), m)| Phase::new(t * b, *m)).sum();
        for j in 0..h {
            let a = (Phase::from_integer(j) - tors) / h;
            let hom = Hom { a, b: b.clone() };
            debug_assert!(lat.eval(&hom, &lat.chi).is_zero());
            let gamma: Vec<Phase> = (0..=lat.n()).map(|i| lat.eval(&hom, &lat.var_classes[i])).collect();
            let (fixed, moved): (Vec<usize>, Vec<usize>) = active.iter().partition(|&&i| gamma[i].is_zero());
            let mut det = lat.zero();
            for &i in &moved {
                det = lat.sub(&det, &lat.var_classes[i]);
            }
            out.push(SectorData { gamma, fixed, moved, det_n_dual: det });
        }
    }
    out.sort_by(|x, y| x.gamma.cmp(&y.gamma));
    Ok(out)
}

/// `|Γ̂ / ⟨χ⟩|` from the Smith form of the relations with `χ` adjoined.
pub fn ker_chi_order_via_snf(w: &WeightedPolynomial, sub: &SubgroupSpec) -> Result<BigInt, SymmetryError> {
    let ws = w.require_weights()?;
    let n = ws.weights.len();
    let lat = build_lattice(w, sub, false)?;
    // rebuild the quotient directly in normal-form coordinates: ℤ ⊕ ⊕ℤ/m_k modulo χ
    let cols = 1 + lat.moduli.len();
    let mut rows: Vec<Vec<i64>> = Vec::new();
    for (k, m) in lat.moduli.iter().enumerate() {
        let mut r = vec![0; cols];
        r[1 + k] = *m;
        rows.push(r);
    }
    let mut r = vec![lat.chi.weight];
    r.extend(lat.chi.torsion.iter());
    rows.push(r);
    let s = snf(&IntMatrix::from_rows(&rows));
    if s.rank() < cols {
        return Err(SymmetryError::InfiniteKernel);
    }
    let _ = n;
    Ok(s.diagonal().iter().filter(|d| !d.is_zero()).product())
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Census {
    /// `V_γ = 0`
    pub empty: usize,
    /// `V_γ = span{x₀}`
    pub x0_only: usize,
    /// `V_γ` is everything (the identity)
    pub all: usize,
    pub other: usize,
}

pub fn sector_census(lat: &CharacterLattice, sectors: &[SectorData]) -> Census {
    let mut c = Census::default();
    for s in sectors {
        if s.fixed.is_empty() {
            c.empty += 1;
        } else if s.moved.is_empty() {
            c.all += 1;
        } else if lat.include_x0() && s.fixed == [0] {
            c.x0_only += 1;
        } else {
            c.other += 1;
        }
    }
    c
}

/// The cyclic group generated by `j_w` as phase vectors on `x_1..x_n`.
pub fn grading_element(ws: &WeightSystem) -> Vec<Phase> {
    ws.weights.iter().map(|&d| frac(Phase::new(d, ws.degree))).collect()
}

/// Fixed indices as a set, for tests and reports.
pub fn fixed_set(s: &SectorData) -> BTreeSet<usize> {
    s.fixed.iter().copied().collect()
}
