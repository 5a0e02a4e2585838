//! Weighted homogeneous polynomials, weight systems and Jacobi algebras.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{self, integer_row, IntMatrix, RatMatrix, SparseEchelon};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WpolyError {
    #[error("no weight system makes the polynomial weighted homogeneous")]
    NoWeightSystem,
    #[error("the weight system is not determined uniquely (solution space of dimension {0})")]
    AmbiguousWeightSystem(usize),
    #[error("exponent matrix is {terms}x{vars}, not square")]
    ShapeMismatch { terms: usize, vars: usize },
    #[error("polynomial is not invertible")]
    NotInvertible,
    #[error("Hilbert series is not a polynomial")]
    NonPolynomialSeries,
    #[error("critical point is not isolated: {0}")]
    NotIsolated(String),
    #[error("monomial {0:?} is not of weighted degree {1}")]
    NotHomogeneous(Vec<u32>, i64),
    #[error("invalid polynomial: {0}")]
    Invalid(String),
}

/// Exponent vector, ordered graded-lexicographically.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn weight(&self, weights: &[i64]) -> i64 {
        self.0.iter().zip(weights).map(|(&e, &d)| e as i64 * d).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn render(&self, names: &[String]) -> String {
        let parts: Vec<String> = self
            .0
            .iter()
            .zip(names)
            .filter(|(e, _)| **e > 0)
            .map(|(&e, v)| if e == 1 { v.clone() } else { format!("{v}^{e}") })
            .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree().cmp(&other.total_degree()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `(d_1, ..., d_n; h)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeightSystem {
    pub weights: Vec<i64>,
    pub degree: i64,
}

impl WeightSystem {
    pub fn new(weights: Vec<i64>, degree: i64) -> Self {
        WeightSystem { weights, degree }
    }

    /// Weight of the cone variable, `h - Σ d_i`.
    pub fn d0(&self) -> i64 {
        self.degree - self.weights.iter().sum::<i64>()
    }
}

impl fmt::Display for WeightSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ws: Vec<String> = self.weights.iter().map(|d| d.to_string()).collect();
        write!(f, "({};{})", ws.join(","), self.degree)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub coeff: BigRational,
    pub exp: Monomial,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedPolynomial {
    variables: Vec<String>,
    terms: Vec<Term>,
    weight_system: Option<WeightSystem>,
}

impl WeightedPolynomial {
    /// Validates shape, nonzero coefficients and distinct monomials.
    pub fn new(variables: Vec<String>, terms: Vec<Term>) -> Result<Self, WpolyError> {
        let n = variables.len();
        let mut seen = BTreeSet::new();
        for t in &terms {
            if t.exp.0.len() != n {
                return Err(WpolyError::Invalid(format!(
                    "exponent vector {:?} has length {}, expected {n}",
                    t.exp.0,
                    t.exp.0.len()
                )));
            }
            if t.coeff.is_zero() {
                return Err(WpolyError::Invalid("zero coefficient".into()));
            }
            if !seen.insert(t.exp.clone()) {
                return Err(WpolyError::Invalid(format!("duplicate monomial {:?}", t.exp.0)));
            }
        }
        let names: BTreeSet<&String> = variables.iter().collect();
        if names.len() != n {
            return Err(WpolyError::Invalid("duplicate variable names".into()));
        }
        Ok(WeightedPolynomial { variables, terms, weight_system: None })
    }

    /// Sum of monomials with unit coefficients.
    pub fn from_exponents(variables: &[&str], exps: &[Vec<u32>]) -> Result<Self, WpolyError> {
        let terms = exps
            .iter()
            .map(|e| Term { coeff: BigRational::one(), exp: Monomial(e.clone()) })
            .collect();
        WeightedPolynomial::new(variables.iter().map(|s| s.to_string()).collect(), terms)?
            .with_inferred_weights()
    }

    /// Attaches a weight system after checking homogeneity and normalization.
    pub fn with_weights(mut self, ws: WeightSystem) -> Result<Self, WpolyError> {
        if ws.weights.len() != self.variables.len() {
            return Err(WpolyError::Invalid("weight vector length mismatch".into()));
        }
        if ws.weights.iter().any(|&d| d < 1) || ws.weights.iter().any(|&d| d >= ws.degree) {
            return Err(WpolyError::Invalid(format!("weights {ws} must satisfy 1 <= d_i < h")));
        }
        let g = ws.weights.iter().fold(ws.degree, |g, &d| g.gcd(&d));
        if g != 1 {
            return Err(WpolyError::Invalid(format!("weight system {ws} is not reduced")));
        }
        for t in &self.terms {
            if t.exp.weight(&ws.weights) != ws.degree {
                return Err(WpolyError::NotHomogeneous(t.exp.0.clone(), ws.degree));
            }
        }
        self.weight_system = Some(ws);
        Ok(self)
    }

    pub fn with_inferred_weights(self) -> Result<Self, WpolyError> {
        let ws = infer_weight_system(&self)?;
        self.with_weights(ws)
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn nvars(&self) -> usize {
        self.variables.len()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn weight_system(&self) -> Option<&WeightSystem> {
        self.weight_system.as_ref()
    }

    pub fn require_weights(&self) -> Result<&WeightSystem, WpolyError> {
        self.weight_system.as_ref().ok_or(WpolyError::NoWeightSystem)
    }

    /// `∂w/∂x_i` as a list of terms.
    pub fn partial(&self, i: usize) -> Vec<Term> {
        partial(&self.terms, i)
    }

    /// Keeps only the terms supported on `vars`.
    pub fn restrict(&self, vars: &[usize]) -> Vec<Term> {
        self.terms
            .iter()
            .filter(|t| t.exp.0.iter().enumerate().all(|(i, &e)| e == 0 || vars.contains(&i)))
            .cloned()
            .collect()
    }

    pub fn to_json(&self) -> PolyJson {
        PolyJson {
            variables: self.variables.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| TermJson { coeff: t.coeff.to_string(), exp: t.exp.0.clone() })
                .collect(),
        }
    }

    pub fn from_json(p: &PolyJson) -> Result<Self, WpolyError> {
        let terms = p
            .terms
            .iter()
            .map(|t| {
                let coeff = BigRational::from_str(t.coeff.trim())
                    .map_err(|_| WpolyError::Invalid(format!("bad rational {:?}", t.coeff)))?;
                Ok(Term { coeff, exp: Monomial(t.exp.clone()) })
            })
            .collect::<Result<Vec<_>, WpolyError>>()?;
        WeightedPolynomial::new(p.variables.clone(), terms)
    }
}

impl fmt::Display for WeightedPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let m = t.exp.render(&self.variables);
            let c = &t.coeff;
            let neg = c.is_negative();
            let a = c.abs();
            if i == 0 {
                write!(f, "{}", if neg { "-" } else { "" })?;
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            match (a.is_one(), m.as_str()) {
                (true, _) => write!(f, "{m}")?,
                (false, "1") => write!(f, "{a}")?,
                (false, _) => write!(f, "{a}*{m}")?,
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub coeff: String,
    pub exp: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyJson {
    pub variables: Vec<String>,
    pub terms: Vec<TermJson>,
}

pub(crate) fn partial(terms: &[Term], i: usize) -> Vec<Term> {
    terms
        .iter()
        .filter(|t| t.exp.0[i] > 0)
        .map(|t| {
            let mut e = t.exp.clone();
            let k = e.0[i];
            e.0[i] -= 1;
            Term { coeff: &t.coeff * BigRational::from_integer(k.into()), exp: e }
        })
        .collect()
}

pub fn infer_weight_system(w: &WeightedPolynomial) -> Result<WeightSystem, WpolyError> {
    let n = w.nvars();
    let rows: Vec<Vec<i64>> = w
        .terms
        .iter()
        .map(|t| t.exp.0.iter().map(|&e| e as i64).chain([-1]).collect())
        .collect();
    let m = if rows.is_empty() { RatMatrix::zeros(0, n + 1) } else { RatMatrix::from_i64(&rows) };
    let ker = exact::kernel_basis(&m);
    match ker.len() {
        0 => return Err(WpolyError::NoWeightSystem),
        1 => {}
        k => return Err(WpolyError::AmbiguousWeightSystem(k)),
    }
    let v = &ker[0];
    let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let mut ints: Vec<BigInt> = v.iter().map(|x| (x * &l).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if ints[n].is_negative() {
        for x in ints.iter_mut() {
            *x = -x.clone();
        }
    }
    let ints: Vec<i64> = ints.iter().map(|x| (x / &g).to_i64().expect("weight overflow")).collect();
    let (weights, h) = (ints[..n].to_vec(), ints[n]);
    if h <= 0 || weights.iter().any(|&d| d < 1 || d >= h) {
        return Err(WpolyError::NoWeightSystem);
    }
    Ok(WeightSystem::new(weights, h))
}

pub fn exponent_matrix(w: &WeightedPolynomial) -> IntMatrix {
    let rows: Vec<Vec<i64>> = w.terms.iter().map(|t| t.exp.0.iter().map(|&e| e as i64).collect()).collect();
    if rows.is_empty() {
        return IntMatrix::zeros(0, w.nvars());
    }
    IntMatrix::from_rows(&rows)
}

pub fn is_invertible(w: &WeightedPolynomial) -> Result<bool, WpolyError> {
    if w.terms.len() != w.nvars() {
        return Err(WpolyError::ShapeMismatch { terms: w.terms.len(), vars: w.nvars() });
    }
    Ok(!exact::det(&exponent_matrix(w)).is_zero())
}

/// Berglund–Hübsch transpose: monomials from the columns of the exponent matrix.
pub fn transpose(w: &WeightedPolynomial) -> Result<WeightedPolynomial, WpolyError> {
    if !is_invertible(w)? {
        return Err(WpolyError::NotInvertible);
    }
    let a = exponent_matrix(w).transpose();
    let exps: Vec<Vec<u32>> =
        (0..a.rows()).map(|i| a.row(i).iter().map(|x| x.to_u32().expect("exponent")).collect()).collect();
    let names: Vec<&str> = w.variables.iter().map(String::as_str).collect();
    WeightedPolynomial::from_exponents(&names, &exps)
}

/// Integer polynomial in one variable, lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HilbertPoly(pub Vec<i64>);

impl HilbertPoly {
    pub fn value_at_one(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn coeff(&self, k: i64) -> i64 {
        if k < 0 {
            return 0;
        }
        self.0.get(k as usize).copied().unwrap_or(0)
    }
}

fn poly_mul(a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut out = vec![0i64; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == 0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn one_minus_t_pow(k: usize) -> Vec<i64> {
    let mut p = vec![0; k + 1];
    p[0] = 1;
    p[k] -= 1;
    p
}

/// Π (1 − T^{h−d_i}) / Π (1 − T^{d_i}) as an exact polynomial.
pub fn hilbert_for(weights: &[i64], h: i64) -> Result<HilbertPoly, WpolyError> {
    if weights.iter().any(|&d| d < 1 || h - d < 1) {
        return Err(WpolyError::NonPolynomialSeries);
    }
    let num = weights.iter().fold(vec![1i64], |acc, &d| poly_mul(&acc, &one_minus_t_pow((h - d) as usize)));
    let den = weights.iter().fold(vec![1i64], |acc, &d| poly_mul(&acc, &one_minus_t_pow(d as usize)));
    if num.len() < den.len() {
        return Err(WpolyError::NonPolynomialSeries);
    }
    let qlen = num.len() - den.len() + 1;
    let mut q = vec![0i64; qlen];
    for k in 0..qlen {
        let mut c = num[k];
        for j in 1..den.len().min(k + 1) {
            c -= den[j] * q[k - j];
        }
        q[k] = c;
    }
    if poly_mul(&q, &den) != num {
        return Err(WpolyError::NonPolynomialSeries);
    }
    while q.len() > 1 && q.last() == Some(&0) {
        q.pop();
    }
    Ok(HilbertPoly(q))
}

pub fn jacobi_hilbert(ws: &WeightSystem) -> Result<HilbertPoly, WpolyError> {
    hilbert_for(&ws.weights, ws.degree)
}

pub fn milnor_number(ws: &WeightSystem) -> Result<i64, WpolyError> {
    Ok(jacobi_hilbert(ws)?.value_at_one())
}

/// The sequence `w̃` with `Σ T^{h − w_i}` equal to the Jacobi Hilbert polynomial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WVector {
    pub full: Vec<i64>,
}

impl WVector {
    pub fn w0(&self) -> i64 {
        self.full[0]
    }

    /// `𝐰 = (w_i)_{i ≥ 1}`.
    pub fn tail(&self) -> &[i64] {
        &self.full[1..]
    }
}

/// Note: `w_0 = (3 − n)h − 2 d_0`, which is `−2` exactly for three variables with `d_0 = 1`.
pub fn exponents_w_vector(ws: &WeightSystem) -> Result<WVector, WpolyError> {
    let hp = jacobi_hilbert(ws)?;
    let mut full = Vec::new();
    for (k, &c) in hp.0.iter().enumerate() {
        for _ in 0..c {
            full.push(ws.degree - k as i64);
        }
    }
    full.sort();
    Ok(WVector { full })
}

/// All exponent vectors with `Σ e_i w_i = target` (weights positive).
pub fn monomials_of_weight(weights: &[i64], target: i64) -> Vec<Vec<u32>> {
    fn rec(weights: &[i64], i: usize, left: i64, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i + 1 == weights.len() {
            if left % weights[i] == 0 {
                cur.push((left / weights[i]) as u32);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        for e in 0..=left / weights[i] {
            cur.push(e as u32);
            rec(weights, i + 1, left - e as i64 * weights[i], cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if target < 0 {
        return out;
    }
    if weights.is_empty() {
        if target == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    assert!(weights.iter().all(|&w| w > 0), "non-positive weight");
    rec(weights, 0, target, &mut Vec::new(), &mut out);
    out
}

/// Standard monomials of the weight-`k` slice of `k[x] / (∂_i f)`.
fn jacobi_slice(weights: &[i64], h: i64, partials: &[Vec<Term>], k: i64) -> Vec<Monomial> {
    let mut mons: Vec<Monomial> = monomials_of_weight(weights, k).into_iter().map(Monomial).collect();
    // descending order: pivots land on the largest monomials, the complement is smallest
    mons.sort_by(|a, b| b.cmp(a));
    let index: HashMap<&Monomial, u32> = mons.iter().enumerate().map(|(i, m)| (m, i as u32)).collect();
    let mut rows = Vec::new();
    for (i, p) in partials.iter().enumerate() {
        if p.is_empty() {
            continue;
        }
        for m in monomials_of_weight(weights, k - (h - weights[i])) {
            let m = Monomial(m);
            let entries = p.iter().map(|t| (index[&t.exp.mul(&m)], t.coeff.clone()));
            rows.push(integer_row(entries));
        }
    }
    let pivots: BTreeSet<u32> = SparseEchelon::new(rows).pivot_columns().into_iter().collect();
    let mut basis: Vec<Monomial> =
        mons.into_iter().enumerate().filter(|(i, _)| !pivots.contains(&(*i as u32))).map(|(_, m)| m).collect();
    basis.sort();
    basis
}

/// Jacobi monomial basis for `terms` homogeneous of degree `h` under `weights`.
///
/// Slices are checked against the Hilbert polynomial, and the quotient must
/// vanish on a window of `max d_i` degrees past the top.
pub fn jacobi_basis_graded(weights: &[i64], h: i64, terms: &[Term]) -> Result<Vec<Monomial>, WpolyError> {
    let n = weights.len();
    if n == 0 {
        return Ok(vec![Monomial(Vec::new())]);
    }
    let hp = hilbert_for(weights, h).map_err(|_| WpolyError::NotIsolated("Hilbert series is not a polynomial".into()))?;
    let partials: Vec<Vec<Term>> = (0..n).map(|i| partial(terms, i)).collect();
    let top = hp.degree() as i64;
    let window = weights.iter().copied().max().unwrap_or(1);
    let mut basis = Vec::new();
    for k in 0..=top + window {
        let slice = jacobi_slice(weights, h, &partials, k);
        if slice.len() as i64 != hp.coeff(k) {
            return Err(WpolyError::NotIsolated(format!(
                "degree {k}: quotient has dimension {}, Hilbert polynomial predicts {}",
                slice.len(),
                hp.coeff(k)
            )));
        }
        basis.extend(slice);
    }
    Ok(basis)
}

pub fn jacobi_monomial_basis(w: &WeightedPolynomial) -> Result<Vec<Monomial>, WpolyError> {
    let ws = w.require_weights()?;
    jacobi_basis_graded(&ws.weights, ws.degree, &w.terms)
}

pub fn default_variable_names(n: usize) -> Vec<String> {
    if n <= 3 {
        ["x", "y", "z"][..n].iter().map(|s| s.to_string()).collect()
    } else {
        (1..=n).map(|i| format!("x{i}")).collect()
    }
}

/// `x_1^{s_1} + … + x_n^{s_n}` for Sylvester's sequence `2, 3, 7, 43, …`.
pub fn sylvester_polynomial(n: usize) -> WeightedPolynomial {
    assert!(n >= 1);
    let mut s: Vec<i64> = Vec::new();
    let mut prod = 1i64;
    for _ in 0..n {
        let next = prod + 1;
        s.push(next);
        prod *= next;
    }
    let h = prod;
    let exps: Vec<Vec<u32>> = (0..n)
        .map(|i| {
            let mut e = vec![0u32; n];
            e[i] = s[i] as u32;
            e
        })
        .collect();
    let names = default_variable_names(n);
    let terms = exps.into_iter().map(|e| Term { coeff: BigRational::one(), exp: Monomial(e) }).collect();
    let ws = WeightSystem::new(s.iter().map(|si| h / si).collect(), h);
    WeightedPolynomial::new(names, terms)
        .and_then(|p| p.with_weights(ws))
        .expect("Sylvester polynomial is weighted homogeneous")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn poly(names: &[&str], exps: &[Vec<u32>]) -> WeightedPolynomial {
        WeightedPolynomial::from_exponents(names, exps).unwrap()
    }

    fn ws(w: &WeightedPolynomial) -> WeightSystem {
        w.weight_system().unwrap().clone()
    }

    #[test]
    fn infers_weights() {
        let e12 = poly(&["x", "y", "z"], &[vec![2, 0, 0], vec![0, 3, 0], vec![0, 0, 7]]);
        assert_eq!(ws(&e12), WeightSystem::new(vec![21, 14, 6], 42));
        let cusp = poly(&["x", "y"], &[vec![3, 0], vec![0, 2]]);
        assert_eq!(ws(&cusp), WeightSystem::new(vec![2, 3], 6));
        let tac = poly(&["x", "y"], &[vec![2, 0], vec![0, 4]]);
        assert_eq!(ws(&tac), WeightSystem::new(vec![2, 1], 4));
    }

    #[test]
    fn weight_inference_failures() {
        let w = WeightedPolynomial::from_exponents(&["x", "y"], &[vec![2, 1]]);
        assert_eq!(w.unwrap_err(), WpolyError::AmbiguousWeightSystem(2));
        let w = WeightedPolynomial::from_exponents(&["x", "y"], &[vec![2, 0], vec![3, 0], vec![0, 2]]);
        assert_eq!(w.unwrap_err(), WpolyError::NoWeightSystem);
    }

    #[test]
    fn exponent_matrices() {
        let f = poly(&["x", "y", "z"], &[vec![4, 0, 0], vec![0, 4, 0], vec![0, 0, 4]]);
        assert!(is_invertible(&f).unwrap());
        assert_eq!(transpose(&f).unwrap(), f);
        let c = poly(&["x", "y"], &[vec![2, 1], vec![0, 3]]);
        assert_eq!(exact::det(&exponent_matrix(&c)), BigInt::from(6));
        let t = transpose(&c).unwrap();
        assert_eq!(exponent_matrix(&t), IntMatrix::from_rows(&[vec![2i64, 0], vec![1, 3]]));
        let q = WeightedPolynomial::new(
            vec!["x".into(), "y".into()],
            [vec![2, 0], vec![0, 2], vec![1, 1]]
                .into_iter()
                .map(|e| Term { coeff: BigRational::one(), exp: Monomial(e) })
                .collect(),
        )
        .unwrap();
        assert_eq!(is_invertible(&q), Err(WpolyError::ShapeMismatch { terms: 3, vars: 2 }));
    }

    #[test]
    fn chain_transpose_is_matrix_transpose() {
        let c = poly(&["x", "y", "z"], &[vec![2, 1, 0], vec![0, 2, 1], vec![0, 0, 2]]);
        let t = transpose(&c).unwrap();
        assert_eq!(exponent_matrix(&t), exponent_matrix(&c).transpose());
        assert_eq!(transpose(&t).unwrap(), c);
    }

    #[test]
    fn hilbert_examples() {
        let hp = hilbert_for(&[3, 2], 6).unwrap();
        assert_eq!(hp, HilbertPoly(vec![1, 0, 1]));
        assert_eq!(hp.value_at_one(), 2);
        assert_eq!(milnor_number(&WeightSystem::new(vec![1, 1, 1], 4)).unwrap(), 27);
        assert_eq!(hilbert_for(&[2, 2], 5), Err(WpolyError::NonPolynomialSeries));
    }

    #[test]
    fn jacobi_bases() {
        let e12 = poly(&["x", "y", "z"], &[vec![2, 0, 0], vec![0, 3, 0], vec![0, 0, 7]]);
        let b: BTreeSet<Vec<u32>> = jacobi_monomial_basis(&e12).unwrap().into_iter().map(|m| m.0).collect();
        let expect: BTreeSet<Vec<u32>> = (0..=1).flat_map(|j| (0..=5).map(move |k| vec![0, j, k])).collect();
        assert_eq!(b, expect);

        let cusp = poly(&["x", "y"], &[vec![2, 0], vec![0, 3]]);
        let b: Vec<Vec<u32>> = jacobi_monomial_basis(&cusp).unwrap().into_iter().map(|m| m.0).collect();
        assert_eq!(b, vec![vec![0, 0], vec![0, 1]]);

        let d4 = poly(&["x", "y"], &[vec![3, 0], vec![0, 3]]);
        let b: BTreeSet<Vec<u32>> = jacobi_monomial_basis(&d4).unwrap().into_iter().map(|m| m.0).collect();
        assert_eq!(b, [vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]].into_iter().collect());
    }

    #[test]
    fn graded_lex_choice_with_mixed_terms() {
        // x^2 + y^2 with the relation x = 0, y = 0: only 1; x^3 + y^3 + xy*? not homogeneous.
        // D4-type x^2 y + y^3: Jacobian (2xy, x^2 + 3y^2); μ = 4
        let d4 = poly(&["x", "y"], &[vec![2, 1], vec![0, 3]]);
        let b = jacobi_monomial_basis(&d4).unwrap();
        assert_eq!(b.len(), 4);
        // degree-2 (in total degree) slice: x^2 ~ -3y^2 and xy = 0, so the smaller one, y^2, is kept
        assert!(b.contains(&Monomial(vec![0, 2])));
        assert!(!b.contains(&Monomial(vec![2, 0])));
    }

    #[test]
    fn non_isolated_is_detected() {
        // x^2 y: weights are ambiguous, so force a system
        let w = WeightedPolynomial::new(
            vec!["x".into(), "y".into()],
            vec![Term { coeff: BigRational::one(), exp: Monomial(vec![2, 2]) }],
        )
        .unwrap()
        .with_weights(WeightSystem::new(vec![1, 1], 4))
        .unwrap();
        assert!(matches!(jacobi_monomial_basis(&w), Err(WpolyError::NotIsolated(_))));
    }

    #[test]
    fn sylvester() {
        let s2 = sylvester_polynomial(2);
        assert_eq!(s2.to_string(), "x^2 + y^3");
        let s3 = sylvester_polynomial(3);
        assert_eq!(ws(&s3), WeightSystem::new(vec![21, 14, 6], 42));
        for n in 1..=4 {
            assert_eq!(ws(&sylvester_polynomial(n)).d0(), 1);
        }
    }

    #[test]
    fn milnor_closed_forms() {
        for n in 2..=4usize {
            let fermat = WeightSystem::new(vec![1; n], n as i64 + 1);
            assert_eq!(milnor_number(&fermat).unwrap(), (n as i64).pow(n as u32));
            let mut d = vec![n as i64];
            d.extend(std::iter::repeat(1).take(n - 1));
            let dc = WeightSystem::new(d, 2 * n as i64);
            assert_eq!(milnor_number(&dc).unwrap(), (2 * n as i64 - 1).pow(n as u32 - 1));
        }
    }

    #[test]
    fn json_round_trip() {
        let p = poly(&["x", "y"], &[vec![3, 0], vec![0, 2]]);
        let j = serde_json::to_string(&p.to_json()).unwrap();
        let back: PolyJson = serde_json::from_str(&j).unwrap();
        let q = WeightedPolynomial::from_json(&back).unwrap().with_inferred_weights().unwrap();
        assert_eq!(p, q);
    }

    /// Sebastiani–Thom sums of Fermat, chain and loop atoms.
    fn invertible_poly() -> impl Strategy<Value = Vec<Vec<u32>>> {
        let atom = prop_oneof![
            (2u32..=6).prop_map(|a| vec![vec![a]]),
            (2u32..=4, 2u32..=4).prop_map(|(a, b)| vec![vec![a, 1], vec![0, b]]),
            (2u32..=4, 2u32..=4).prop_map(|(a, b)| vec![vec![a, 1], vec![1, b]]),
        ];
        proptest::collection::vec(atom, 1..=3).prop_map(|atoms| {
            let n: usize = atoms.iter().map(|a| a[0].len()).sum();
            let mut rows = Vec::new();
            let mut off = 0;
            for a in atoms {
                let k = a[0].len();
                for r in a {
                    let mut e = vec![0u32; n];
                    e[off..off + k].copy_from_slice(&r);
                    rows.push(e);
                }
                off += k;
            }
            rows
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn milnor_equals_basis_size(exps in invertible_poly()) {
            let n = exps[0].len();
            let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let w = WeightedPolynomial::from_exponents(&refs, &exps).unwrap();
            let s = ws(&w);
            prop_assume!(s.degree <= 12);
            let mu = milnor_number(&s).unwrap();
            prop_assert_eq!(mu, jacobi_hilbert(&s).unwrap().value_at_one());
            prop_assert_eq!(jacobi_monomial_basis(&w).unwrap().len() as i64, mu);
            let num: i64 = s.weights.iter().map(|d| s.degree - d).product();
            let den: i64 = s.weights.iter().product();
            if num % den == 0 {
                prop_assert_eq!(mu, num / den);
            }
            prop_assert_eq!(transpose(&transpose(&w).unwrap()).unwrap(), w);
        }
    }
}
