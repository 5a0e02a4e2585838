//! Equivariant semiuniversal unfoldings.

use std::collections::{BTreeMap, HashMap};

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::presets::Problem;
use crate::symmetry::{CharacterLattice, SymmetryError};
use crate::wpoly::{jacobi_monomial_basis, Monomial, Term, WeightSystem, WeightedPolynomial, WpolyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UnfoldingError {
    #[error(transparent)]
    Wpoly(#[from] WpolyError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error("unknown parameter {0}")]
    UnknownParameter(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnfoldingDatum {
    pub j: Vec<u32>,
    /// `x₀`-exponent making `x₀^{w_j} x^j` semi-invariant of weight `χ`.
    pub w_j: Option<i64>,
    pub name: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnfoldingBasis {
    pub j_w: Vec<Vec<u32>>,
    pub data: Vec<UnfoldingDatum>,
}

impl UnfoldingBasis {
    /// The members of `J`, i.e. data with a positive `w_j`.
    pub fn positive(&self) -> impl Iterator<Item = &UnfoldingDatum> {
        self.data.iter().filter(|d| d.w_j.is_some())
    }

    pub fn weights(&self) -> Vec<i64> {
        let mut w: Vec<i64> = self.positive().filter_map(|d| d.w_j).collect();
        w.sort_unstable();
        w
    }
}

/// `c > 0` with `c·χ₀ = χ − Σ j_i χ_i`, if any.
fn solve_w_j(lat: &CharacterLattice, j: &[u32]) -> Option<i64> {
    let rest = lat.sub(lat.chi(), &lat.class_of_x(j));
    let d0 = lat.d0();
    if rest.weight <= 0 || rest.weight % d0 != 0 {
        return None;
    }
    let c = rest.weight / d0;
    (lat.scale(lat.chi0(), c) == rest).then_some(c)
}

pub fn unfolding_basis(p: &Problem) -> Result<UnfoldingBasis, UnfoldingError> {
    let lat = crate::symmetry::build_lattice(&p.w, &p.group, true)?;
    let j_w: Vec<Vec<u32>> = jacobi_monomial_basis(&p.w)?.into_iter().map(|m| m.0).collect();
    let solved: Vec<Option<i64>> = j_w.iter().map(|j| solve_w_j(&lat, j)).collect();
    let mut count: HashMap<i64, usize> = HashMap::new();
    for c in solved.iter().flatten() {
        *count.entry(*c).or_default() += 1;
    }
    let data = j_w
        .iter()
        .zip(&solved)
        .map(|(j, &w_j)| UnfoldingDatum {
            j: j.clone(),
            w_j,
            name: w_j.map(|c| {
                if count[&c] == 1 {
                    format!("u_{c}")
                } else {
                    let parts: Vec<String> = j.iter().map(|e| e.to_string()).collect();
                    format!("u_{c}_{}", parts.join("_"))
                }
            }),
        })
        .collect();
    Ok(UnfoldingBasis { j_w, data })
}

pub fn dim_u(p: &Problem) -> Result<usize, UnfoldingError> {
    Ok(unfolding_basis(p)?.positive().count())
}

/// `w + Σ u_j x₀^{w_j} x^j` as a problem whose `x₀` terms are the nonzero parameters.
pub fn unfolded_problem(p: &Problem, assignment: &BTreeMap<String, BigRational>) -> Result<Problem, UnfoldingError> {
    let basis = unfolding_basis(p)?;
    let by_name: HashMap<&str, &UnfoldingDatum> =
        basis.positive().map(|d| (d.name.as_deref().expect("named"), d)).collect();
    let mut x0_terms = Vec::new();
    for (name, value) in assignment {
        let d = by_name.get(name.as_str()).ok_or_else(|| UnfoldingError::UnknownParameter(name.clone()))?;
        if value.is_zero() {
            continue;
        }
        let mut e = vec![d.w_j.expect("positive") as u32];
        e.extend(&d.j);
        x0_terms.push(Term { coeff: value.clone(), exp: Monomial(e) });
    }
    x0_terms.sort_by(|a, b| a.exp.cmp(&b.exp));
    let mut q = p.clone();
    q.x0_terms = x0_terms;
    q.lattice()?;
    Ok(q)
}

/// The unfolded polynomial on `(x₀, x_1, …, x_n)` with weights `(d₀, d_1, …, d_n; h)`.
pub fn build_unfolded_polynomial(
    p: &Problem,
    assignment: &BTreeMap<String, BigRational>,
) -> Result<WeightedPolynomial, UnfoldingError> {
    let q = unfolded_problem(p, assignment)?;
    let ws = p.w.require_weights()?;
    let mut weights = vec![ws.d0()];
    weights.extend(&ws.weights);
    let poly = WeightedPolynomial::new(q.variable_names(), q.big_w())?;
    let poly = poly.with_weights(WeightSystem::new(weights, ws.degree))?;
    let lat = q.lattice()?;
    for t in poly.terms() {
        assert_eq!(&lat.class_of(&t.exp.0), lat.chi(), "unfolded term is not of degree χ");
    }
    Ok(poly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{cusp, fermat, odp, tacnode, unimodal};
    use crate::symmetry::SubgroupSpec;

    fn assign(v: &[(&str, i64)]) -> BTreeMap<String, BigRational> {
        v.iter().map(|(k, x)| (k.to_string(), BigRational::from_integer((*x).into()))).collect()
    }

    #[test]
    fn tacnode_pair() {
        let full = unfolding_basis(&tacnode(SubgroupSpec::Full)).unwrap();
        assert_eq!(full.weights(), vec![2, 4]);
        let js: Vec<&Vec<u32>> = full.positive().map(|d| &d.j).collect();
        assert_eq!(js, vec![&vec![0, 0], &vec![0, 2]]);
        let small = unfolding_basis(&tacnode(SubgroupSpec::PhiGm)).unwrap();
        assert_eq!(small.weights(), vec![2, 3, 4]);
        assert!(full.positive().count() <= small.positive().count());
        let names: Vec<&str> = small.positive().map(|d| d.name.as_deref().unwrap()).collect();
        assert_eq!(names, vec!["u_4", "u_3", "u_2"]);
    }

    #[test]
    fn e12() {
        let b = unfolding_basis(&unimodal("E12").unwrap()).unwrap();
        assert_eq!(b.j_w.len(), 12);
        assert_eq!(b.positive().count(), 11);
        for d in &b.data {
            let (j, k) = (d.j[1] as i64, d.j[2] as i64);
            assert_eq!(d.j[0], 0);
            let w = 42 - 14 * j - 6 * k;
            assert_eq!(d.w_j, (w > 0).then_some(w));
        }
        let missing: Vec<&Vec<u32>> = b.data.iter().filter(|d| d.w_j.is_none()).map(|d| &d.j).collect();
        assert_eq!(missing, vec![&vec![0, 1, 5]]);
    }

    #[test]
    fn ambiguous_names_use_exponents() {
        let b = unfolding_basis(&unimodal("Q12").unwrap()).unwrap();
        let names: Vec<&str> = b.positive().map(|d| d.name.as_deref().unwrap()).collect();
        assert!(names.iter().any(|n| n.matches('_').count() > 1));
        let uniq: std::collections::HashSet<&&str> = names.iter().collect();
        assert_eq!(uniq.len(), names.len());
    }

    #[test]
    fn fermat_and_cusp_dims() {
        assert_eq!(dim_u(&fermat(3)).unwrap(), 2);
        assert_eq!(unfolding_basis(&fermat(3)).unwrap().weights(), vec![1, 4]);
        let a2 = crate::presets::Problem::new(
            "a2",
            WeightedPolynomial::from_exponents(&["x", "y"], &[vec![2, 0], vec![0, 3]]).unwrap(),
            SubgroupSpec::Full,
        );
        let b = unfolding_basis(&a2).unwrap();
        assert_eq!(b.weights(), vec![4, 6]);
        let poly = build_unfolded_polynomial(&a2, &assign(&[("u_4", 1), ("u_6", 1)])).unwrap();
        assert_eq!(poly.to_string(), "x^2 + y^3 + x0^4*y + x0^6");
        assert_eq!(poly.weight_system().unwrap(), &WeightSystem::new(vec![1, 3, 2], 6));
    }

    #[test]
    fn families() {
        let q = unfolded_problem(&fermat(3), &assign(&[("u_1", 1), ("u_4", 0)])).unwrap();
        assert_eq!(q.big_w(), cusp(3).big_w());
        let q = unfolded_problem(&fermat(3), &assign(&[("u_1", -4), ("u_4", 1)])).unwrap();
        let mut a = q.big_w();
        let mut b = odp(3).big_w();
        a.sort_by(|x, y| x.exp.cmp(&y.exp));
        b.sort_by(|x, y| x.exp.cmp(&y.exp));
        assert_eq!(a, b);
        let zero = build_unfolded_polynomial(&fermat(3), &assign(&[("u_1", 0)])).unwrap();
        assert_eq!(zero.terms().len(), 3);
        assert_eq!(
            unfolded_problem(&fermat(3), &assign(&[("u_9", 1)])).unwrap_err(),
            UnfoldingError::UnknownParameter("u_9".into())
        );
    }
}
