//! The `E₁` page of the divisor-complement spectral sequence for symplectic
//! cohomology, positional bounds on its abutment, and the formality test.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trivext::AlgebraHHTable;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecSeqError {
    #[error("no Betti data for stratum {0:?}")]
    MissingStratum(String),
    #[error("columns down to p = {p_min} do not determine degrees up to {needed}")]
    InsufficientColumns { p_min: i64, needed: i64 },
    #[error("invalid strata: {0}")]
    Invalid(String),
}

/// Normal-crossing strata. Betti lists are keyed by comma-joined stratum names
/// in index order; the empty key is the complement itself.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrataData {
    #[serde(rename = "I")]
    pub names: Vec<String>,
    pub kappa: Vec<i64>,
    pub c: Vec<i64>,
    pub betti: BTreeMap<String, Vec<u64>>,
}

impl StrataData {
    pub fn validate(&self) -> Result<(), SpecSeqError> {
        if self.kappa.len() != self.names.len() || self.c.len() != self.names.len() {
            return Err(SpecSeqError::Invalid("kappa and c must match the index set".into()));
        }
        if self.kappa.iter().any(|&k| k <= 0) {
            return Err(SpecSeqError::Invalid("kappa must be positive".into()));
        }
        if !self.betti.contains_key("") {
            return Err(SpecSeqError::MissingStratum(String::new()));
        }
        Ok(())
    }

    fn key(&self, k: &[i64]) -> String {
        self.names.iter().zip(k).filter(|(_, &x)| x != 0).map(|(n, _)| n.as_str()).collect::<Vec<_>>().join(",")
    }
}

fn smooth_divisor(v_betti: Vec<u64>, nd_betti: Vec<u64>) -> StrataData {
    StrataData {
        names: vec!["D1".into()],
        kappa: vec![1],
        c: vec![0],
        betti: BTreeMap::from([(String::new(), v_betti), ("D1".into(), nd_betti)]),
    }
}

/// `b₀ = 1`, `b_{n−2} = b_{n−1} = m`, `b_{2n−3} = 1`, summed where degrees coincide.
fn circle_bundle_betti(n: usize, m: u64) -> Vec<u64> {
    let mut b = vec![0u64; 2 * n - 2];
    b[0] += 1;
    b[n - 2] += m;
    b[n - 1] += m;
    b[2 * n - 3] += 1;
    b
}

fn wedge_of_spheres(n: usize, mu: u64) -> Vec<u64> {
    let mut b = vec![0u64; n];
    b[0] = 1;
    b[n - 1] += mu;
    b
}

fn even_correction(n: usize) -> u64 {
    if n % 2 == 0 {
        1
    } else {
        0
    }
}

/// Milnor fibre of `x_1^{n+1} + ⋯ + x_n^{n+1}` with its smooth divisor at infinity.
pub fn fermat_strata(n: usize) -> StrataData {
    assert!(n >= 2);
    let mu = (n as u64).pow(n as u32);
    let m = mu / (n as u64 + 1) + even_correction(n);
    smooth_divisor(wedge_of_spheres(n, mu), circle_bundle_betti(n, m))
}

/// Milnor fibre of `x_1² + x_2^{2n} + ⋯ + x_n^{2n}`.
pub fn doublecover_strata(n: usize) -> StrataData {
    assert!(n >= 2);
    let mu = (2 * n as u64 - 1).pow(n as u32 - 1);
    let m = mu / (2 * n as u64) + even_correction(n);
    smooth_divisor(wedge_of_spheres(n, mu), circle_bundle_betti(n, m))
}

/// `χ(Ď)` from the Chern class formula, times the denominator `den`.
pub fn divisor_euler_char_scaled(n: usize, doublecover: bool) -> (i64, i64) {
    let n = n as i64;
    let sign = if n % 2 == 0 { 1 } else { -1 };
    if doublecover {
        (sign * (2 * n - 1).pow(n as u32 - 1) + 2 * n * (n - 1) + 1, 2 * n)
    } else {
        (sign * n.pow(n as u32) + n * (n + 1) - 1, n + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct E1Page {
    pub p_min: i64,
    #[serde(serialize_with = "ser_grid")]
    pub grid: BTreeMap<(i64, i64), u64>,
    pub degree_totals: BTreeMap<i64, u64>,
    /// Lower bound on the total degree of anything in columns `p < p_min`, if any.
    pub uncomputed_floor: Option<i64>,
}

fn ser_grid<S: serde::Serializer>(g: &BTreeMap<(i64, i64), u64>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(g.len()))?;
    for ((p, q), d) in g {
        seq.serialize_element(&serde_json::json!({"p": p, "q": q, "dim": d}))?;
    }
    seq.end()
}

impl E1Page {
    pub fn get(&self, p: i64, q: i64) -> u64 {
        self.grid.get(&(p, q)).copied().unwrap_or(0)
    }

    pub fn total(&self, n: i64) -> u64 {
        self.degree_totals.get(&n).copied().unwrap_or(0)
    }

    /// Columns `p_min..=0` (left to right), rows `q` from the top down.
    pub fn render(&self) -> String {
        let q_max = self.grid.keys().map(|k| k.1).max().unwrap_or(0);
        let mut out = String::new();
        for q in (0..=q_max).rev() {
            out.push_str(&format!("{q:>3} |"));
            for p in self.p_min..=0 {
                let d = self.get(p, q);
                let cell = match d {
                    0 => "0".to_string(),
                    1 => "C".to_string(),
                    _ => format!("C^{d}"),
                };
                out.push_str(&format!(" {cell:>6}"));
            }
            out.push('\n');
        }
        out.push_str("    +");
        for _ in self.p_min..=0 {
            out.push_str("-------");
        }
        out.push_str("\n     ");
        for p in self.p_min..=0 {
            out.push_str(&format!(" {p:>6}"));
        }
        out.push('\n');
        out
    }
}

fn tuples(kappa: &[i64], total: i64) -> Vec<Vec<i64>> {
    if kappa.is_empty() {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for k in 0..=total / kappa[0] {
        for mut rest in tuples(&kappa[1..], total - k * kappa[0]) {
            rest.insert(0, k);
            out.push(rest);
        }
    }
    out
}

pub fn e1_page(strata: &StrataData, p_min: i64) -> Result<E1Page, SpecSeqError> {
    strata.validate()?;
    if p_min > 0 {
        return Err(SpecSeqError::Invalid("p_min must be ≤ 0".into()));
    }
    let mut grid = BTreeMap::new();
    for p in p_min..=0 {
        for k in tuples(&strata.kappa, -p) {
            let key = strata.key(&k);
            let betti = strata.betti.get(&key).ok_or_else(|| SpecSeqError::MissingStratum(key.clone()))?;
            let shift: i64 = k.iter().zip(&strata.c).map(|(k, c)| 2 * k * (c + 1)).sum();
            for (deg, &b) in betti.iter().enumerate() {
                if b == 0 {
                    continue;
                }
                let q = deg as i64 + shift - p;
                *grid.entry((p, q)).or_insert(0) += b;
            }
        }
    }
    let mut degree_totals = BTreeMap::new();
    for (&(p, q), &d) in &grid {
        *degree_totals.entry(p + q).or_insert(0) += d;
    }
    let uncomputed_floor = if strata.names.is_empty() {
        None
    } else {
        // a column p uses Σk ≥ ⌈−p/κ_max⌉ and each k contributes at least 2(c_min+1)
        let kmax = *strata.kappa.iter().max().unwrap();
        let cmin = *strata.c.iter().min().unwrap();
        let next = -(p_min - 1);
        Some(if cmin + 1 > 0 { 2 * ((next + kmax - 1) / kmax) * (cmin + 1) } else { i64::MIN })
    };
    Ok(E1Page { p_min, grid, degree_totals, uncomputed_floor })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DegreeBound {
    pub degree: i64,
    pub lower: u64,
    pub upper: u64,
    pub exact: bool,
}

/// Conservative bounds on `SH^n` for `0 ≤ n ≤ n_max` from positional differentials.
pub fn degree_bounds(page: &E1Page, n_max: i64) -> Result<Vec<DegreeBound>, SpecSeqError> {
    if let Some(floor) = page.uncomputed_floor {
        if floor <= n_max + 1 {
            return Err(SpecSeqError::InsufficientColumns { p_min: page.p_min, needed: n_max + 1 });
        }
    }
    let nonzero: Vec<((i64, i64), u64)> = page.grid.iter().filter(|(_, &d)| d > 0).map(|(&k, &d)| (k, d)).collect();
    // d_r: (p,q) → (p+r, q−r+1), r ≥ 1; all pages, each bounded by min(source, target)
    let arrows = |deg: i64| -> Vec<u64> {
        let mut out = Vec::new();
        for &((p, q), src) in nonzero.iter().filter(|((p, q), _)| p + q == deg) {
            for r in 1..=-p {
                let tgt = page.get(p + r, q - r + 1);
                if tgt > 0 {
                    out.push(src.min(tgt));
                }
            }
        }
        out
    };
    let mut bounds = Vec::new();
    for n in 0..=n_max {
        let upper = page.total(n);
        let mut touching = arrows(n);
        touching.extend(arrows(n - 1));
        let loss: u64 = touching.iter().sum();
        bounds.push(DegreeBound { degree: n, lower: upper.saturating_sub(loss), upper, exact: touching.is_empty() });
    }
    Ok(bounds)
}

/// Whether each `dims[t]` lies in the bound for degree `t`.
pub fn consistent_with_bounds(bounds: &[DegreeBound], dims: &[usize]) -> bool {
    bounds.iter().zip(dims).all(|(b, &d)| b.lower <= d as u64 && d as u64 <= b.upper)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FormalityVerdict {
    NonFormal,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FormalityCertificate {
    pub verdict: FormalityVerdict,
    pub sh1: (u64, u64),
    pub hh1_weight0: usize,
}

/// `SH¹ = 0` while `HH¹(A)₀ ≠ 0` rules out formality of `A`.
pub fn formality_obstruction_report(bounds: &[DegreeBound], algebra_hh: &AlgebraHHTable) -> FormalityCertificate {
    let sh1 = bounds.iter().find(|b| b.degree == 1).map_or((0, u64::MAX), |b| (b.lower, b.upper));
    let hh1_weight0 = algebra_hh.get(1, 0);
    let verdict = if sh1 == (0, 0) && hh1_weight0 > 0 { FormalityVerdict::NonFormal } else { FormalityVerdict::Inconclusive };
    FormalityCertificate { verdict, sh1, hh1_weight0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quartic_strata() {
        let s = fermat_strata(3);
        assert_eq!(s.betti["D1"], vec![1, 6, 6, 1]);
        assert_eq!(s.betti[""], vec![1, 0, 27]);
        assert_eq!(fermat_strata(4).betti["D1"], vec![1, 0, 52, 52, 0, 1]);
        // b_{n−2}(Ď) from χ(Ď): 2 + 2g for a curve, here g = 3
        let (num, den) = divisor_euler_char_scaled(3, false);
        assert_eq!(num % den, 0);
        assert_eq!(num / den, 2 - 2 * 3);
        let (num, den) = divisor_euler_char_scaled(4, false);
        assert_eq!(num / den, 55);
        assert_eq!(num / den - 2, 53);
    }

    #[test]
    fn sextic_strata() {
        let s = doublecover_strata(3);
        assert_eq!(s.betti["D1"], vec![1, 4, 4, 1]);
        assert_eq!(s.betti[""], vec![1, 0, 25]);
        let (num, den) = divisor_euler_char_scaled(3, true);
        assert_eq!(num / den, 2 - 2 * 2);
    }

    #[test]
    fn n2_punctured_neighbourhood_is_circles() {
        // x³+y³ meets the line at infinity in 3 points
        assert_eq!(fermat_strata(2).betti["D1"], vec![3, 3]);
        assert_eq!(doublecover_strata(2).betti["D1"], vec![2, 2]);
    }

    #[test]
    fn quartic_page_and_bounds() {
        let page = e1_page(&fermat_strata(3), -4).unwrap();
        for (q, d) in [(3, 1), (4, 6), (5, 6), (6, 1)] {
            assert_eq!(page.get(-1, q), d);
        }
        for (q, d) in [(6, 1), (7, 6), (8, 6), (9, 1)] {
            assert_eq!(page.get(-2, q), d);
        }
        assert_eq!(page.get(-3, 9), 1);
        assert_eq!(page.get(-3, 10), 6);
        assert_eq!(page.get(0, 2), 27);
        let b = degree_bounds(&page, 6).unwrap();
        let got: Vec<(u64, u64, bool)> = b.iter().map(|b| (b.lower, b.upper, b.exact)).collect();
        assert_eq!(&got[..4], &[(1, 1, true), (0, 0, true), (28, 28, true), (6, 6, true)]);
        for x in &got[4..] {
            assert_eq!((x.0, x.1), (6, 7));
        }
    }

    #[test]
    fn insufficient_columns() {
        let page = e1_page(&fermat_strata(3), -2).unwrap();
        assert!(matches!(degree_bounds(&page, 6), Err(SpecSeqError::InsufficientColumns { .. })));
        assert!(degree_bounds(&page, 3).is_ok());
    }

    #[test]
    fn empty_divisor() {
        let s = StrataData { names: vec![], kappa: vec![], c: vec![], betti: BTreeMap::from([(String::new(), vec![1, 0, 5])]) };
        let page = e1_page(&s, -3).unwrap();
        assert_eq!(page.grid.len(), 2);
        assert!(page.grid.keys().all(|k| k.0 == 0));
        let b = degree_bounds(&page, 4).unwrap();
        assert!(b.iter().all(|b| b.exact && b.lower == b.upper));
    }

    #[test]
    fn missing_stratum() {
        let mut s = fermat_strata(3);
        s.betti.remove("D1");
        assert_eq!(e1_page(&s, -1).unwrap_err(), SpecSeqError::MissingStratum("D1".into()));
    }

    #[test]
    fn json_roundtrip() {
        let s: StrataData =
            serde_json::from_str(r#"{"I":["D1"],"kappa":[1],"c":[0],"betti":{"":[1,0,27],"D1":[1,6,6,1]}}"#).unwrap();
        assert_eq!(s, fermat_strata(3));
    }

    #[test]
    fn synthetic_inconclusive() {
        let s = StrataData {
            names: vec!["D1".into()],
            kappa: vec![1],
            c: vec![-1],
            betti: BTreeMap::from([(String::new(), vec![1, 0]), ("D1".into(), vec![3, 3])]),
        };
        // c = −1 puts the divisor columns in degree 1 and beyond
        let page = e1_page(&s, -2).unwrap();
        let bounds: Vec<DegreeBound> = (0..=2)
            .map(|n| DegreeBound { degree: n, lower: 0, upper: page.total(n), exact: false })
            .collect();
        let hh = crate::trivext::hochschild_algebra(&crate::trivext::cusp_algebra(), 1, 0).unwrap();
        let cert = formality_obstruction_report(&bounds, &hh);
        assert_eq!(cert.verdict, FormalityVerdict::Inconclusive);
        assert_ne!(cert.sh1, (0, 0));
    }

    proptest! {
        #[test]
        fn bounds_are_ordered_and_low_degrees_vanish(
            kappa in proptest::collection::vec(1i64..3, 1..3),
            c in proptest::collection::vec(0i64..2, 3),
            b in proptest::collection::vec(proptest::collection::vec(0u64..4, 1..4), 4),
            mu in 0u64..5,
        ) {
            let names: Vec<String> = (0..kappa.len()).map(|i| format!("D{}", i + 1)).collect();
            let mut betti = BTreeMap::from([(String::new(), vec![1, 0, mu])]);
            for mask in 1usize..(1 << names.len()) {
                let key: Vec<&str> = names.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, n)| n.as_str()).collect();
                betti.insert(key.join(","), b[mask % b.len()].clone());
            }
            let s = StrataData { names, kappa: kappa.clone(), c: c[..kappa.len()].to_vec(), betti };
            let page = e1_page(&s, -8).unwrap();
            prop_assert_eq!(page.total(0), 1);
            prop_assert_eq!(page.total(1), 0);
            for bd in degree_bounds(&page, 3).unwrap() {
                prop_assert!(bd.lower <= bd.upper);
                prop_assert!(!bd.exact || bd.lower == bd.upper);
            }
            // undoing the shift recovers each stratum's Betti list
            for (&(p, q), &d) in &page.grid {
                if p == -1 && s.kappa.iter().filter(|&&k| k == 1).count() == 1 {
                    let i = s.kappa.iter().position(|&k| k == 1).unwrap();
                    let raw = &s.betti[&s.names[i]];
                    let deg = (q + p - 2 * (s.c[i] + 1)) as usize;
                    prop_assert_eq!(raw.get(deg).copied().unwrap_or(0), d);
                }
            }
        }
    }
}
