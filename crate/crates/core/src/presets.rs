//! Named polynomials and the problems built from them.

use num_rational::BigRational;

use crate::symmetry::{build_lattice, CharacterLattice, SubgroupSpec, SymmetryError};
use crate::wpoly::{default_variable_names, sylvester_polynomial, Monomial, Term, WeightedPolynomial};

/// A polynomial `w`, a choice of `Γ`, and the terms of `W` that involve `x₀`.
#[derive(Clone, Debug)]
pub struct Problem {
    pub name: String,
    pub w: WeightedPolynomial,
    pub group: SubgroupSpec,
    /// Over `(x₀, x_1, …, x_n)`; empty for the cone `W = w`.
    pub x0_terms: Vec<Term>,
}

impl Problem {
    pub fn new(name: impl Into<String>, w: WeightedPolynomial, group: SubgroupSpec) -> Self {
        Problem { name: name.into(), w, group, x0_terms: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.w.nvars()
    }

    pub fn is_cone(&self) -> bool {
        self.x0_terms.is_empty()
    }

    /// All terms of `W` over `(x₀, x_1, …, x_n)`.
    pub fn big_w(&self) -> Vec<Term> {
        let mut out: Vec<Term> = self
            .w
            .terms()
            .iter()
            .map(|t| {
                let mut e = vec![0];
                e.extend(&t.exp.0);
                Term { coeff: t.coeff.clone(), exp: Monomial(e) }
            })
            .collect();
        out.extend(self.x0_terms.iter().cloned());
        out
    }

    /// The lattice with `x₀` adjoined; every term of `W` must have class `χ`.
    pub fn lattice(&self) -> Result<CharacterLattice, SymmetryError> {
        let lat = build_lattice(&self.w, &self.group, true)?;
        for t in &self.x0_terms {
            if t.exp.0.len() != self.n() + 1 {
                return Err(SymmetryError::Invalid("x₀ term has the wrong number of exponents".into()));
            }
            if &lat.class_of(&t.exp.0) != lat.chi() {
                return Err(SymmetryError::Invalid(format!("term {:?} is not semi-invariant of weight χ", t.exp.0)));
            }
        }
        Ok(lat)
    }

    pub fn variable_names(&self) -> Vec<String> {
        std::iter::once("x0".to_string()).chain(self.w.variables().iter().cloned()).collect()
    }
}

fn diagonal(exps: &[u32]) -> WeightedPolynomial {
    let n = exps.len();
    let rows: Vec<Vec<u32>> = (0..n)
        .map(|i| {
            let mut e = vec![0; n];
            e[i] = exps[i];
            e
        })
        .collect();
    let names = default_variable_names(n);
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    WeightedPolynomial::from_exponents(&refs, &rows).expect("diagonal polynomial")
}

pub fn fermat_poly(n: usize) -> WeightedPolynomial {
    diagonal(&vec![n as u32 + 1; n])
}

pub fn double_cover_poly(n: usize) -> WeightedPolynomial {
    let mut e = vec![2 * n as u32; n];
    e[0] = 2;
    diagonal(&e)
}

fn x0_term(n: usize, coeff: i64, exp: Vec<u32>) -> Term {
    assert_eq!(exp.len(), n + 1);
    Term { coeff: BigRational::from_integer(coeff.into()), exp: Monomial(exp) }
}

fn product_term(n: usize, coeff: i64) -> Term {
    x0_term(n, coeff, vec![1; n + 1])
}

fn x0_power(n: usize, p: u32) -> Term {
    let mut e = vec![0; n + 1];
    e[0] = p;
    x0_term(n, 1, e)
}

pub fn fermat(n: usize) -> Problem {
    Problem::new(format!("fermat-{n}"), fermat_poly(n), SubgroupSpec::Full)
}

pub fn double_cover(n: usize) -> Problem {
    Problem::new(format!("doublecover-{n}"), double_cover_poly(n), SubgroupSpec::Full)
}

pub fn sylvester(n: usize) -> Problem {
    Problem::new(format!("sylvester-{n}"), sylvester_polynomial(n), SubgroupSpec::Full)
}

/// `x_1^{n+1} + ⋯ + x_n^{n+1} + x₀⋯x_n`.
pub fn cusp(n: usize) -> Problem {
    let mut p = fermat(n);
    p.name = format!("cusp-{n}");
    p.x0_terms = vec![product_term(n, 1)];
    p
}

/// `x_1² + x_2^{2n} + ⋯ + x_n^{2n} + x₀⋯x_n`.
pub fn cusp_double(n: usize) -> Problem {
    let mut p = double_cover(n);
    p.name = format!("cusp-double-{n}");
    p.x0_terms = vec![product_term(n, 1)];
    p
}

/// `x₀^{n+1} + ⋯ + x_n^{n+1} − (n+1) x₀⋯x_n`.
pub fn odp(n: usize) -> Problem {
    let mut p = fermat(n);
    p.name = format!("odp-{n}");
    p.x0_terms = vec![x0_power(n, n as u32 + 1), product_term(n, -(n as i64 + 1))];
    p
}

/// `x_1² + x_2^{2n} + ⋯ + x_n^{2n} + nⁿ x₀^{2n} + 2n x₀⋯x_n`.
///
/// With unit coefficients on both `x₀` terms the hypersurface is smooth; a node
/// needs `c^{2n} = β(4n)ⁿ` for `β x₀^{2n} + c x₀⋯x_n`, and `c = 2n` keeps it rational.
pub fn odp_double(n: usize) -> Problem {
    let mut p = double_cover(n);
    p.name = format!("odp-double-{n}");
    let mut top = x0_power(n, 2 * n as u32);
    top.coeff = BigRational::from_integer((n as i64).pow(n as u32).into());
    p.x0_terms = vec![top, product_term(n, 2 * n as i64)];
    p
}

pub fn tacnode(group: SubgroupSpec) -> Problem {
    Problem::new("tacnode", diagonal(&[2, 4]), group)
}

pub const UNIMODAL_NAMES: [&str; 14] =
    ["Q10", "Q11", "Q12", "Z11", "Z12", "Z13", "S11", "S12", "W12", "W13", "E12", "E13", "E14", "U12"];

/// Exponent vectors of the normal forms, variables `(x, y, z)`.
fn unimodal_exponents(name: &str) -> Option<Vec<Vec<u32>>> {
    let e = |v: &[[u32; 3]]| Some(v.iter().map(|x| x.to_vec()).collect());
    match name {
        "Q10" => e(&[[2, 0, 1], [0, 3, 0], [0, 0, 4]]),
        "Q11" => e(&[[2, 0, 1], [0, 3, 0], [0, 1, 3]]),
        "Q12" => e(&[[2, 0, 1], [0, 3, 0], [0, 0, 5]]),
        "Z11" => e(&[[2, 0, 0], [0, 3, 1], [0, 0, 5]]),
        "Z12" => e(&[[2, 0, 0], [0, 3, 1], [0, 1, 4]]),
        "Z13" => e(&[[2, 0, 0], [0, 3, 1], [0, 0, 6]]),
        "S11" => e(&[[2, 0, 1], [1, 2, 0], [0, 0, 4]]),
        "S12" => e(&[[2, 0, 1], [1, 2, 0], [0, 1, 3]]),
        "W12" => e(&[[2, 0, 0], [0, 4, 0], [0, 0, 5]]),
        "W13" => e(&[[2, 0, 0], [0, 4, 0], [0, 1, 4]]),
        "E12" => e(&[[2, 0, 0], [0, 3, 0], [0, 0, 7]]),
        "E13" => e(&[[2, 0, 0], [0, 3, 0], [0, 1, 5]]),
        "E14" => e(&[[2, 0, 0], [0, 3, 0], [0, 0, 8]]),
        "U12" => e(&[[3, 0, 0], [0, 3, 0], [0, 0, 4]]),
        _ => None,
    }
}

pub fn unimodal_poly(name: &str) -> Option<WeightedPolynomial> {
    let exps = unimodal_exponents(name)?;
    Some(WeightedPolynomial::from_exponents(&["x", "y", "z"], &exps).expect("unimodal normal form"))
}

/// The exceptional unimodal singularity with `Γ = φ(𝔾ₘ)`.
pub fn unimodal(name: &str) -> Option<Problem> {
    Some(Problem::new(name, unimodal_poly(name)?, SubgroupSpec::PhiGm))
}

/// Family name (case-insensitive) plus optional `n`, with an optional group override.
pub fn by_name(name: &str, n: Option<usize>, group: Option<SubgroupSpec>) -> Result<Problem, String> {
    let lower = name.to_ascii_lowercase();
    let need_n = |lo: usize| -> Result<usize, String> {
        let n = n.ok_or_else(|| format!("family {name} needs n"))?;
        if n < lo {
            return Err(format!("family {name} needs n >= {lo}"));
        }
        Ok(n)
    };
    let mut p = match lower.as_str() {
        "fermat" => fermat(need_n(2)?),
        "doublecover" | "double-cover" => double_cover(need_n(2)?),
        "sylvester" => {
            let n = need_n(1)?;
            if n > 4 {
                return Err("sylvester is supported for n <= 4".into());
            }
            sylvester(n)
        }
        "cusp" => cusp(need_n(2)?),
        "cusp-double" => cusp_double(need_n(2)?),
        "odp" => odp(need_n(2)?),
        "odp-double" => odp_double(need_n(2)?),
        "tacnode" => tacnode(SubgroupSpec::Full),
        _ => UNIMODAL_NAMES
            .iter()
            .find(|u| u.eq_ignore_ascii_case(name))
            .and_then(|u| unimodal(u))
            .ok_or_else(|| format!("unknown family {name:?}"))?,
    };
    if let Some(g) = group {
        p.group = g;
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wpoly::WeightSystem;

    #[test]
    fn unimodal_weights_match_table() {
        let table: [(&str, [i64; 3], i64); 14] = [
            ("Q10", [9, 8, 6], 24),
            ("Q11", [7, 6, 4], 18),
            ("Q12", [6, 5, 3], 15),
            ("Z11", [15, 8, 6], 30),
            ("Z12", [11, 6, 4], 22),
            ("Z13", [9, 5, 3], 18),
            ("S11", [6, 5, 4], 16),
            ("S12", [5, 4, 3], 13),
            ("W12", [10, 5, 4], 20),
            ("W13", [8, 4, 3], 16),
            ("E12", [21, 14, 6], 42),
            ("E13", [15, 10, 4], 30),
            ("E14", [12, 8, 3], 24),
            ("U12", [4, 4, 3], 12),
        ];
        for (name, d, h) in table {
            let p = unimodal(name).unwrap();
            assert_eq!(p.w.weight_system().unwrap(), &WeightSystem::new(d.to_vec(), h), "{name}");
        }
    }

    #[test]
    fn x0_terms_are_semi_invariant() {
        for n in 2..=4 {
            for p in [cusp(n), odp(n), cusp_double(n), odp_double(n)] {
                p.lattice().unwrap();
                assert!(!p.is_cone());
                assert_eq!(p.big_w().len(), p.w.terms().len() + p.x0_terms.len());
            }
        }
    }

    #[test]
    fn bad_x0_term_rejected() {
        let mut p = fermat(3);
        p.x0_terms = vec![x0_power(3, 3)];
        assert!(p.lattice().is_err());
    }

    #[test]
    fn lookup() {
        assert_eq!(by_name("Fermat", Some(3), None).unwrap().name, "fermat-3");
        assert!(by_name("fermat", None, None).is_err());
        assert_eq!(by_name("e12", None, None).unwrap().group, SubgroupSpec::PhiGm);
        assert!(by_name("nope", Some(2), None).is_err());
        assert_eq!(by_name("tacnode", None, Some(SubgroupSpec::PhiGm)).unwrap().group, SubgroupSpec::PhiGm);
    }
}
