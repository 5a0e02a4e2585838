//! Hochschild cohomology of `(A^{n+1}, W, Γ)` assembled from sector Koszul slices.
//!
//! For `t − |N_γ| = 2u` the sector contributes `H^{−2l}(dW_γ)` in degree
//! `(u+l)χ + Σ_{N_γ} χ_i`; for `t − |N_γ| = 2u+1` it contributes `H^{−2l−1}`
//! in degree `(u+l+1)χ + Σ_{N_γ} χ_i`. A class is displayed as `k(w)` with
//! `w` its `x₀`-exponent, where `x₀^∨` counts `−1`.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::koszul::{self, DegreeTarget, KoszulError, SectorComplex};
use crate::presets::Problem;
use crate::symmetry::{enumerate_ker_chi, CharClass, CharacterLattice, SectorData, SymmetryError};
use crate::wpoly::{jacobi_basis_graded, Monomial, Term, WpolyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HHError {
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error(transparent)]
    Wpoly(#[from] WpolyError),
    #[error(transparent)]
    Koszul(KoszulError),
    #[error("strict mode: run the degree convention self-test first")]
    CalibrationRequired,
    #[error("degree slices are unbounded: {0}")]
    NonFiniteRow(String),
    #[error("the fast path needs W = w (no x₀ terms)")]
    NotCone,
}

impl From<KoszulError> for HHError {
    fn from(e: KoszulError) -> Self {
        match e {
            KoszulError::DegreeConventionUnvalidated => HHError::CalibrationRequired,
            KoszulError::NonFiniteRow(s) => HHError::NonFiniteRow(s),
            e => HHError::Koszul(e),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Contribution {
    pub sector: usize,
    pub gamma: String,
    pub parity: Parity,
    pub l: usize,
    pub u: i64,
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<i64>,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WeightClass {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<i64>,
    pub mult: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HHRow {
    pub t: usize,
    pub classes: Vec<WeightClass>,
    pub provenance: Vec<Contribution>,
}

impl HHRow {
    pub fn total(&self) -> usize {
        self.classes.iter().map(|c| c.mult).sum()
    }

    pub fn mult(&self, weight: i64) -> usize {
        self.classes.iter().filter(|c| c.weight == Some(weight)).map(|c| c.mult).sum()
    }

    /// `k(w)^⊕m` notation.
    pub fn render(&self) -> String {
        render_classes(&self.classes)
    }
}

pub fn render_classes(classes: &[WeightClass]) -> String {
    if classes.iter().all(|c| c.mult == 0) {
        return "0".into();
    }
    classes
        .iter()
        .filter(|c| c.mult > 0)
        .map(|c| {
            let base = match c.weight {
                None | Some(0) => "k".to_string(),
                Some(w) => format!("k({w})"),
            };
            if c.mult == 1 {
                base
            } else {
                format!("{base}^⊕{}", c.mult)
            }
        })
        .collect::<Vec<_>>()
        .join(" ⊕ ")
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HHTable {
    pub name: String,
    pub weights_tracked: bool,
    pub rows: Vec<HHRow>,
}

impl HHTable {
    pub fn row(&self, t: usize) -> &HHRow {
        &self.rows[t]
    }

    /// Same classes in every row, ignoring provenance.
    pub fn same_classes(&self, other: &HHTable) -> bool {
        self.rows.len() == other.rows.len() && self.rows.iter().zip(&other.rows).all(|(a, b)| a.classes == b.classes)
    }
}

impl fmt::Display for HHTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            writeln!(f, "HH^{} = {}", r.t, r.render())?;
        }
        Ok(())
    }
}

fn prepare(p: &Problem) -> Result<(CharacterLattice, Vec<SectorData>), HHError> {
    if koszul::is_strict() {
        if !koszul::is_calibrated() {
            return Err(HHError::CalibrationRequired);
        }
    } else {
        koszul::calibrate()?;
    }
    let lat = p.lattice()?;
    if lat.d0() <= 0 {
        return Err(HHError::NonFiniteRow(format!("x0 has weight {}", lat.d0())));
    }
    let sectors = enumerate_ker_chi(&lat)?;
    Ok((lat, sectors))
}

fn target_class(lat: &CharacterLattice, s: &SectorData, a: i64) -> CharClass {
    // Σ_{N} χ_i = −det N^∨
    lat.sub(&lat.scale(lat.chi(), a), &s.det_n_dual)
}

/// `(parity, u)` for `t − |N|`.
fn split(t: usize, nn: usize) -> (Parity, i64) {
    let r = t as i64 - nn as i64;
    if r.rem_euclid(2) == 0 {
        (Parity::Even, r.div_euclid(2))
    } else {
        (Parity::Odd, r.div_euclid(2))
    }
}

fn assemble(name: &str, tracked: bool, t_max: usize, contribs: Vec<(usize, Contribution)>) -> HHTable {
    let mut rows: Vec<HHRow> = (0..=t_max).map(|t| HHRow { t, classes: vec![], provenance: vec![] }).collect();
    for (t, c) in contribs {
        rows[t].provenance.push(c);
    }
    for r in &mut rows {
        r.provenance.sort_by(|a, b| (a.sector, a.k, a.weight).cmp(&(b.sector, b.k, b.weight)));
        let mut acc: BTreeMap<Option<i64>, usize> = BTreeMap::new();
        for c in &r.provenance {
            *acc.entry(c.weight).or_default() += c.dim;
        }
        r.classes = acc.into_iter().map(|(weight, mult)| WeightClass { weight, mult }).collect();
    }
    HHTable { name: name.to_string(), weights_tracked: tracked, rows }
}

/// General path: every Koszul slice computed by linear algebra.
pub fn hh_mf(p: &Problem, t_max: usize, track_weights: bool) -> Result<HHTable, HHError> {
    let (lat, sectors) = prepare(p)?;
    let big_w = p.big_w();
    let tracked = track_weights && p.is_cone();
    let per_sector: Vec<Vec<(usize, Contribution)>> = sectors
        .par_iter()
        .enumerate()
        .map(|(idx, s)| sector_mf(&lat, &big_w, idx, s, t_max, tracked))
        .collect::<Result<_, HHError>>()?;
    Ok(assemble(&p.name, tracked, t_max, per_sector.into_iter().flatten().collect()))
}

fn sector_mf(
    lat: &CharacterLattice,
    big_w: &[Term],
    idx: usize,
    s: &SectorData,
    t_max: usize,
    tracked: bool,
) -> Result<Vec<(usize, Contribution)>, HHError> {
    let complex = SectorComplex::new(lat, &s.fixed, big_w)?;
    let len = s.fixed.len();
    let nn = s.moved.len();
    let x0_moved = s.moved.contains(&0) as i64;
    let mut out = Vec::new();
    for t in 0..=t_max {
        let (parity, u) = split(t, nn);
        for l in 0.. {
            let (k, a) = match parity {
                Parity::Even => (2 * l, u + l as i64),
                Parity::Odd => (2 * l + 1, u + l as i64 + 1),
            };
            if k > len {
                break;
            }
            let target = target_class(lat, s, a);
            if target.weight < 0 {
                continue;
            }
            let h = complex.cohomology(k, &DegreeTarget::new(target))?;
            if h.dim == 0 {
                continue;
            }
            let base = Contribution { sector: idx, gamma: s.phases_string(), parity, l, u, k, weight: None, dim: h.dim };
            match (tracked, h.by_key) {
                (true, Some(by_key)) => {
                    for (key, m) in by_key {
                        out.push((t, Contribution { weight: Some(key - x0_moved), dim: m, ..base.clone() }));
                    }
                }
                _ => out.push((t, base)),
            }
        }
    }
    Ok(out)
}

/// Fast path for `W = w`: only `Jac_{w_γ} ⊗ k[x₀]` and `x₀^∨ ⊗ Jac_{w_γ} ⊗ k[x₀]` survive.
pub fn hh_cone(p: &Problem, t_max: usize) -> Result<HHTable, HHError> {
    if !p.is_cone() {
        return Err(HHError::NotCone);
    }
    let (lat, sectors) = prepare(p)?;
    let per_sector: Vec<Vec<(usize, Contribution)>> = sectors
        .par_iter()
        .enumerate()
        .map(|(idx, s)| sector_cone(p, &lat, idx, s, t_max))
        .collect::<Result<_, HHError>>()?;
    Ok(assemble(&p.name, true, t_max, per_sector.into_iter().flatten().collect()))
}

/// Jacobi basis of `w` restricted to the fixed `x`-variables, as classes.
fn restricted_jacobi(p: &Problem, lat: &CharacterLattice, fixed_x: &[usize]) -> Result<Vec<CharClass>, HHError> {
    if fixed_x.is_empty() {
        return Ok(vec![lat.zero()]);
    }
    let cols: Vec<usize> = fixed_x.iter().map(|i| i - 1).collect();
    let terms: Vec<Term> = p
        .w
        .restrict(&cols)
        .into_iter()
        .map(|t| Term { coeff: t.coeff, exp: Monomial(cols.iter().map(|&c| t.exp.0[c]).collect()) })
        .collect();
    let weights: Vec<i64> = fixed_x.iter().map(|&i| lat.var_weight(i)).collect();
    let basis = jacobi_basis_graded(&weights, lat.h(), &terms)?;
    Ok(basis
        .iter()
        .map(|b| {
            let mut full = vec![0u32; lat.n() + 1];
            for (&v, &e) in fixed_x.iter().zip(&b.0) {
                full[v] = e;
            }
            lat.class_of(&full)
        })
        .collect())
}

/// `e ≥ 0` with `e·χ₀ = rest`, if any.
fn x0_power_for(lat: &CharacterLattice, rest: &CharClass) -> Option<i64> {
    let d0 = lat.d0();
    if rest.weight < 0 || rest.weight % d0 != 0 {
        return None;
    }
    let e = rest.weight / d0;
    (lat.scale(lat.chi0(), e) == *rest).then_some(e)
}

fn sector_cone(
    p: &Problem,
    lat: &CharacterLattice,
    idx: usize,
    s: &SectorData,
    t_max: usize,
) -> Result<Vec<(usize, Contribution)>, HHError> {
    let fixed_x: Vec<usize> = s.fixed.iter().copied().filter(|&i| i != 0).collect();
    let has_x0 = s.fixed.contains(&0);
    let jac = restricted_jacobi(p, lat, &fixed_x)?;
    let nn = s.moved.len();
    let mut out = Vec::new();
    for t in 0..=t_max {
        let (parity, u) = split(t, nn);
        let (k, target, shift, offset) = match parity {
            Parity::Even => (0, target_class(lat, s, u), lat.zero(), -(!has_x0 as i64)),
            Parity::Odd if has_x0 => (1, target_class(lat, s, u + 1), lat.sub(lat.chi(), lat.chi0()), -1),
            Parity::Odd => continue,
        };
        let mut by_weight: BTreeMap<i64, usize> = BTreeMap::new();
        for b in &jac {
            let rest = lat.sub(&lat.sub(&target, b), &shift);
            let e = if has_x0 {
                x0_power_for(lat, &rest)
            } else {
                (rest == lat.zero()).then_some(0)
            };
            if let Some(e) = e {
                *by_weight.entry(e + offset).or_default() += 1;
            }
        }
        for (w, m) in by_weight {
            out.push((
                t,
                Contribution {
                    sector: idx,
                    gamma: s.phases_string(),
                    parity,
                    l: 0,
                    u,
                    k,
                    weight: Some(w),
                    dim: m,
                },
            ));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CrReport {
    pub passed: bool,
    pub violations: Vec<String>,
}

/// `HH⁰ = k`, `HH¹` has a weight-0 class, and no `HH¹` class of positive weight.
pub fn check_cr_hh0(table: &HHTable) -> CrReport {
    let mut v = Vec::new();
    if !table.weights_tracked {
        v.push("weights are not tracked".to_string());
    }
    match table.rows.first() {
        Some(r) if r.classes == [WeightClass { weight: Some(0), mult: 1 }] => {}
        Some(r) => v.push(format!("HH^0 = {}, expected k", r.render())),
        None => v.push("HH^0 missing".into()),
    }
    match table.rows.get(1) {
        Some(r) => {
            if r.mult(0) == 0 {
                v.push("HH^1 has no weight-0 class".into());
            }
            let pos: usize = r.classes.iter().filter(|c| c.weight.is_some_and(|w| w > 0)).map(|c| c.mult).sum();
            if pos > 0 {
                v.push(format!("HH^1 has {pos} classes of positive weight"));
            }
        }
        None => v.push("HH^1 missing".into()),
    }
    CrReport { passed: v.is_empty(), violations: v }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TwistedReport {
    pub twisted: bool,
    pub offending: Vec<Contribution>,
}

/// Positive-weight `HH²` classes not coming from `γ = id`, `u = 1`, `H⁰`.
pub fn twisted_deformation_detector(table: &HHTable) -> TwistedReport {
    let offending: Vec<Contribution> = table
        .rows
        .get(2)
        .map(|r| {
            r.provenance
                .iter()
                .filter(|c| c.weight.is_some_and(|w| w > 0))
                .filter(|c| !(c.gamma_is_identity() && c.u == 1 && c.k == 0))
                .cloned()
                .collect()
        })
        .unwrap_or_default();
    TwistedReport { twisted: !offending.is_empty(), offending }
}

impl Contribution {
    fn gamma_is_identity(&self) -> bool {
        self.gamma.trim_matches(|c| c == '(' || c == ')').split(',').all(|x| x == "0")
    }
}

/// Positive-weight classes in `HH²`.
pub fn deformation_dimension(table: &HHTable) -> usize {
    table
        .rows
        .get(2)
        .map(|r| r.classes.iter().filter(|c| c.weight.is_some_and(|w| w > 0)).map(|c| c.mult).sum())
        .unwrap_or(0)
}

/// Positive-weight `HH²` classes from `γ = id`, `u = 1`, `H⁰` only.
pub fn untwisted_deformation_dimension(table: &HHTable) -> usize {
    table
        .rows
        .get(2)
        .map(|r| {
            r.provenance
                .iter()
                .filter(|c| c.weight.is_some_and(|w| w > 0) && c.gamma_is_identity() && c.u == 1 && c.k == 0)
                .map(|c| c.dim)
                .sum()
        })
        .unwrap_or(0)
}

/// `t_max` used when none is given.
pub fn default_t_max(n: usize) -> usize {
    2 * n + 3
}
