//! Degree slices of the Koszul complex of `dW_γ`.
//!
//! `x_I^∨ ⊗ m` sits in degree `deg m + Σ_{i∈I} (χ − χ_i)`, which makes
//! contraction with `dW_γ` a map of degree zero. When `W_γ` does not involve
//! `x₀`, each slice splits further by the key `e₀(m) − [x₀ ∈ I]`.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exact::{SparseEchelon, SparseVec};
use crate::symmetry::{CharClass, CharacterLattice, SymmetryError};
use crate::wpoly::{monomials_of_weight, Monomial, Term};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KoszulError {
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
    #[error("degree slices are unbounded: {0}")]
    NonFiniteRow(String),
    #[error("strict mode: the degree convention self-test has not passed")]
    DegreeConventionUnvalidated,
    #[error("degree convention self-test failed: {0}")]
    CalibrationFailed(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DegreeTarget {
    pub class: CharClass,
    pub x0_weight: Option<i64>,
}

impl DegreeTarget {
    pub fn new(class: CharClass) -> Self {
        DegreeTarget { class, x0_weight: None }
    }
}

static STRICT: AtomicBool = AtomicBool::new(false);
static CALIBRATION: OnceLock<Result<(), String>> = OnceLock::new();

pub fn set_strict(on: bool) {
    STRICT.store(on, Ordering::SeqCst);
}

pub fn is_strict() -> bool {
    STRICT.load(Ordering::SeqCst)
}

pub fn is_calibrated() -> bool {
    matches!(CALIBRATION.get(), Some(Ok(())))
}

/// Runs the convention self-test once per process.
pub fn calibrate() -> Result<(), KoszulError> {
    CALIBRATION.get_or_init(run_calibration).clone().map_err(KoszulError::CalibrationFailed)
}

fn gate() -> Result<(), KoszulError> {
    if is_strict() && !is_calibrated() {
        Err(KoszulError::DegreeConventionUnvalidated)
    } else {
        Ok(())
    }
}

/// Fermat `n = 3`, full group, identity sector, `k = 0`, degree `χ`:
/// the invariants `x₀⁴` and `x₀x₁x₂x₃` survive with `x₀`-weights 4 and 1.
fn run_calibration() -> Result<(), String> {
    let p = crate::presets::fermat(3);
    let lat = p.lattice().map_err(|e| e.to_string())?;
    let c = SectorComplex::new(&lat, &lat.active_vars(), &p.big_w()).map_err(|e| e.to_string())?;
    let h = c.compute(0, lat.chi());
    let want = BTreeMap::from([(1, 1), (4, 1)]);
    if h.dim == 2 && h.by_key.as_ref() == Some(&want) {
        Ok(())
    } else {
        Err(format!("expected dim 2 with x0-weights {{1, 4}}, got {h:?}"))
    }
}

/// Monomials over `(x₀, …, x_n)` supported on `vars` with class `rho`, graded-lex.
pub fn enumerate_monomials(lat: &CharacterLattice, vars: &[usize], rho: &CharClass) -> Vec<Monomial> {
    let weights: Vec<i64> = vars.iter().map(|&i| lat.var_weight(i)).collect();
    if weights.iter().any(|&w| w <= 0) {
        return Vec::new();
    }
    let mut out: Vec<Monomial> = monomials_of_weight(&weights, rho.weight)
        .into_iter()
        .map(|e| {
            let mut full = vec![0u32; lat.n() + 1];
            for (&v, x) in vars.iter().zip(e) {
                full[v] = x;
            }
            Monomial(full)
        })
        .filter(|m| &lat.class_of(&m.0) == rho)
        .collect();
    out.sort();
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SliceCohomology {
    pub dim: usize,
    /// Multiplicity per `x₀`-key, when the differential preserves it.
    pub by_key: Option<BTreeMap<i64, usize>>,
}

impl SliceCohomology {
    fn zero(tracked: bool) -> Self {
        SliceCohomology { dim: 0, by_key: tracked.then(BTreeMap::new) }
    }
}

/// Basis of `C^{−k}` in one degree: exterior mask over positions in `vars`, and a monomial.
struct Chain {
    basis: Vec<(u32, Monomial)>,
    index: HashMap<(u32, Monomial), u32>,
    keys: Vec<i64>,
}

struct Differential {
    rows: Vec<SparseVec>,
    rank_by_key: BTreeMap<i64, usize>,
}

type Key = (usize, CharClass);

/// The Koszul complex of `W_γ` on the fixed variables of one sector.
pub struct SectorComplex<'a> {
    lat: &'a CharacterLattice,
    vars: Vec<usize>,
    shifts: Vec<CharClass>,
    partials: Vec<Vec<(BigInt, Monomial)>>,
    x0_free: bool,
    chains: Mutex<HashMap<Key, Arc<Chain>>>,
    diffs: Mutex<HashMap<Key, Arc<Differential>>>,
}

impl<'a> SectorComplex<'a> {
    /// `big_w` is `W` over `(x₀, …, x_n)`; it is restricted to `vars`.
    pub fn new(lat: &'a CharacterLattice, vars: &[usize], big_w: &[Term]) -> Result<Self, KoszulError> {
        let mut vars = vars.to_vec();
        vars.sort_unstable();
        vars.dedup();
        for &v in &vars {
            if lat.var_weight(v) <= 0 {
                return Err(KoszulError::NonFiniteRow(format!("variable {v} has weight {}", lat.var_weight(v))));
            }
        }
        let w_gamma: Vec<&Term> =
            big_w.iter().filter(|t| t.exp.0.iter().enumerate().all(|(i, &e)| e == 0 || vars.contains(&i))).collect();
        let denom = w_gamma.iter().fold(BigInt::one(), |l, t| l.lcm(t.coeff.denom()));
        let partials = vars
            .iter()
            .map(|&v| {
                w_gamma
                    .iter()
                    .filter(|t| t.exp.0[v] > 0)
                    .map(|t| {
                        let c = (&t.coeff * BigInt::from(t.exp.0[v]) * &denom).to_integer();
                        let mut e = t.exp.0.clone();
                        e[v] -= 1;
                        (c, Monomial(e))
                    })
                    .collect()
            })
            .collect();
        let shifts = vars.iter().map(|&v| lat.sub(lat.chi(), lat.var_class(v))).collect();
        let x0_free = w_gamma.iter().all(|t| t.exp.0[0] == 0);
        Ok(SectorComplex {
            lat,
            vars,
            shifts,
            partials,
            x0_free,
            chains: Mutex::new(HashMap::new()),
            diffs: Mutex::new(HashMap::new()),
        })
    }

    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    /// Whether cohomology is refined by `x₀`-key.
    pub fn tracks_x0(&self) -> bool {
        self.x0_free
    }

    fn key_of(&self, mask: u32, m: &Monomial) -> i64 {
        if !self.x0_free {
            return 0;
        }
        let in_i = self.vars.first() == Some(&0) && mask & 1 == 1;
        m.0[0] as i64 - in_i as i64
    }

    fn chain(&self, k: usize, target: &CharClass) -> Arc<Chain> {
        let key = (k, target.clone());
        if let Some(c) = self.chains.lock().unwrap().get(&key) {
            return c.clone();
        }
        let mut basis = Vec::new();
        for subset in (0..self.vars.len()).combinations(k) {
            let mut rho = target.clone();
            let mut mask = 0u32;
            for &p in &subset {
                rho = self.lat.sub(&rho, &self.shifts[p]);
                mask |= 1 << p;
            }
            for m in enumerate_monomials(self.lat, &self.vars, &rho) {
                basis.push((mask, m));
            }
        }
        let index = basis.iter().enumerate().map(|(i, b)| (b.clone(), i as u32)).collect();
        let keys = basis.iter().map(|(mask, m)| self.key_of(*mask, m)).collect();
        let c = Arc::new(Chain { basis, index, keys });
        self.chains.lock().unwrap().insert(key, c.clone());
        c
    }

    /// `d_k: C^{−k} → C^{−k+1}` as rows over the basis of `C^{−k+1}`.
    fn differential(&self, k: usize, target: &CharClass) -> Arc<Differential> {
        let key = (k, target.clone());
        if let Some(d) = self.diffs.lock().unwrap().get(&key) {
            return d.clone();
        }
        let src = self.chain(k, target);
        let dst = self.chain(k - 1, target);
        let mut rows = Vec::with_capacity(src.basis.len());
        for (mask, m) in &src.basis {
            let mut row: SparseVec = Vec::new();
            let positions = (0..self.vars.len()).filter(|p| mask & (1 << p) != 0);
            for (j, p) in positions.enumerate() {
                let smaller = mask & !(1 << p);
                for (c, e) in &self.partials[p] {
                    let col = dst.index[&(smaller, m.mul(e))];
                    let v = if j % 2 == 0 { c.clone() } else { -c };
                    row.push((col, v));
                }
            }
            row.sort_by_key(|x| x.0);
            rows.push(row);
        }
        let mut groups: BTreeMap<i64, Vec<SparseVec>> = BTreeMap::new();
        for (row, key) in rows.iter().zip(&src.keys) {
            groups.entry(*key).or_default().push(row.clone());
        }
        let rank_by_key = groups.into_iter().map(|(key, g)| (key, SparseEchelon::new(g).rank())).collect();
        let d = Arc::new(Differential { rows, rank_by_key });
        self.diffs.lock().unwrap().insert(key, d.clone());
        d
    }

    fn compute(&self, k: usize, target: &CharClass) -> SliceCohomology {
        let len = self.vars.len();
        if k > len {
            return SliceCohomology::zero(self.x0_free);
        }
        let chain = self.chain(k, target);
        let mut dims: BTreeMap<i64, i64> = BTreeMap::new();
        for key in &chain.keys {
            *dims.entry(*key).or_default() += 1;
        }
        let out_d = (k >= 1).then(|| self.differential(k, target));
        let in_d = (k < len).then(|| self.differential(k + 1, target));
        if let (Some(a), Some(b)) = (&out_d, &in_d) {
            assert_composite_zero(&b.rows, &a.rows);
        }
        for d in [&out_d, &in_d].into_iter().flatten() {
            for (key, r) in &d.rank_by_key {
                *dims.entry(*key).or_default() -= *r as i64;
            }
        }
        assert!(dims.values().all(|&x| x >= 0), "negative cohomology dimension");
        let total = dims.values().sum::<i64>() as usize;
        let by_key = self
            .x0_free
            .then(|| dims.into_iter().filter(|(_, v)| *v > 0).map(|(k, v)| (k, v as usize)).collect());
        SliceCohomology { dim: total, by_key }
    }

    /// `dim H^{−k}(dW_γ)` in one degree.
    pub fn cohomology(&self, k: usize, rho: &DegreeTarget) -> Result<SliceCohomology, KoszulError> {
        gate()?;
        let mut h = self.compute(k, &rho.class);
        if let Some(w) = rho.x0_weight {
            let m = h.by_key.as_ref().and_then(|b| b.get(&w).copied()).unwrap_or(0);
            h = SliceCohomology { dim: m, by_key: Some(BTreeMap::from([(w, m)]).into_iter().filter(|x| x.1 > 0).collect()) };
        }
        Ok(h)
    }

    /// `dim C^{−k}` in one degree.
    pub fn chain_dim(&self, k: usize, target: &CharClass) -> usize {
        if k > self.vars.len() {
            0
        } else {
            self.chain(k, target).basis.len()
        }
    }
}

fn assert_composite_zero(outer: &[SparseVec], inner: &[SparseVec]) {
    for row in outer {
        let mut acc: HashMap<u32, BigInt> = HashMap::new();
        for (mid, c) in row {
            for (col, d) in &inner[*mid as usize] {
                *acc.entry(*col).or_insert_with(BigInt::zero) += c * d;
            }
        }
        assert!(acc.values().all(|v| v.is_zero()), "d∘d ≠ 0 on a Koszul slice");
    }
}

/// Free-function form of [`SectorComplex::cohomology`].
pub fn koszul_cohomology_dim(
    complex: &SectorComplex<'_>,
    k: usize,
    rho: &DegreeTarget,
) -> Result<SliceCohomology, KoszulError> {
    complex.cohomology(k, rho)
}

/// `Σ_k (−1)^k dim C^{−k}` in degree `rho`, from the product series
/// `Π_{i∈V} (1 − [χ − χ_i]) / (1 − [χ_i])` over the group ring.
pub fn koszul_euler_char(lat: &CharacterLattice, vars: &[usize], rho: &CharClass) -> i64 {
    let top = rho.weight;
    let moduli = lat.moduli();
    let tsize = lat.torsion_order() as usize;
    if vars.iter().any(|&v| lat.var_weight(v) <= 0) {
        return 0;
    }
    let radix = |t: &[i64]| -> usize {
        let mut idx = 0i64;
        for (x, m) in t.iter().zip(moduli).rev() {
            idx = idx * m + x.rem_euclid(*m);
        }
        idx as usize
    };
    let unradix = |mut idx: usize| -> Vec<i64> {
        moduli
            .iter()
            .map(|m| {
                let r = (idx % *m as usize) as i64;
                idx /= *m as usize;
                r
            })
            .collect()
    };
    if top < 0 {
        return 0;
    }
    let width = top as usize + 1;
    let mut series = vec![0i64; width * tsize];
    series[0] = 1;
    for &v in vars {
        let c = lat.var_class(v);
        let dw = c.weight as usize;
        for w in dw..width {
            for t in 0..tsize {
                let src: Vec<i64> = unradix(t).iter().zip(&c.torsion).map(|(a, b)| a - b).collect();
                let s = radix(&src);
                series[w * tsize + t] += series[(w - dw) * tsize + s];
            }
        }
    }
    let mut total = 0i64;
    for mask in 0u32..(1 << vars.len()) {
        let mut r = rho.clone();
        for (p, &v) in vars.iter().enumerate() {
            if mask & (1 << p) != 0 {
                r = lat.sub(&r, &lat.sub(lat.chi(), lat.var_class(v)));
            }
        }
        if r.weight < 0 {
            continue;
        }
        let coeff = series[r.weight as usize * tsize + radix(&r.torsion)];
        total += if mask.count_ones() % 2 == 0 { coeff } else { -coeff };
    }
    total
}

/// Alternating sum of cohomology dimensions, for cross-checks against [`koszul_euler_char`].
pub fn euler_from_cohomology(complex: &SectorComplex<'_>, rho: &CharClass) -> Result<i64, KoszulError> {
    let mut e = 0i64;
    for k in 0..=complex.vars().len() {
        let d = complex.cohomology(k, &DegreeTarget::new(rho.clone()))?.dim as i64;
        e += if k % 2 == 0 { d } else { -d };
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rank, RatMatrix};
    use crate::presets::{cusp, double_cover, fermat, odp, Problem};
    use proptest::prelude::*;

    fn identity_complex(p: &Problem) -> (CharacterLattice, Vec<Term>) {
        (p.lattice().unwrap(), p.big_w())
    }

    #[test]
    fn enumeration_examples() {
        let p = fermat(3);
        let lat = p.lattice().unwrap();
        let all = lat.active_vars();
        let ms = enumerate_monomials(&lat, &all, lat.chi());
        let mut want: Vec<Monomial> =
            [[4, 0, 0, 0], [0, 4, 0, 0], [0, 0, 4, 0], [0, 0, 0, 4], [1, 1, 1, 1]].iter().map(|e| Monomial(e.to_vec())).collect();
        want.sort();
        assert_eq!(ms, want);
        assert_eq!(enumerate_monomials(&lat, &all, &lat.zero()), vec![Monomial(vec![0; 4])]);
        let neg = lat.scale(lat.chi(), -1);
        assert!(enumerate_monomials(&lat, &all, &neg).is_empty());
    }

    #[test]
    fn calibration_passes() {
        calibrate().unwrap();
        assert!(is_calibrated());
    }

    #[test]
    fn beyond_length_is_zero() {
        let (lat, w) = identity_complex(&fermat(2));
        let c = SectorComplex::new(&lat, &lat.active_vars(), &w).unwrap();
        assert_eq!(c.cohomology(4, &DegreeTarget::new(lat.chi().clone())).unwrap().dim, 0);
    }

    /// `H^{−1}` of the cone is `x₀^∨ ⊗ Jac_w ⊗ k[x₀]`.
    #[test]
    fn cone_h1_closed_form() {
        for p in [fermat(3), double_cover(3)] {
            let (lat, w) = identity_complex(&p);
            let c = SectorComplex::new(&lat, &lat.active_vars(), &w).unwrap();
            let jac = crate::wpoly::jacobi_monomial_basis(&p.w).unwrap();
            let shift = lat.sub(lat.chi(), lat.chi0());
            for a in 0..4 {
                for extra in [lat.zero(), lat.var_class(1).clone(), lat.var_class(2).clone()] {
                    let target = lat.add(&lat.scale(lat.chi(), a), &extra);
                    let mut want = 0;
                    for b in &jac {
                        let base = lat.add(&lat.class_of_x(&b.0), &shift);
                        let rest = lat.sub(&target, &base);
                        if rest.weight >= 0
                            && rest.weight % lat.d0() == 0
                            && lat.scale(lat.chi0(), rest.weight / lat.d0()) == rest
                        {
                            want += 1;
                        }
                    }
                    let got = c.cohomology(1, &DegreeTarget::new(target)).unwrap();
                    assert_eq!(got.dim, want, "{} a={a}", p.name);
                    assert!(got.by_key.unwrap().keys().all(|k| *k >= -1));
                }
            }
        }
    }

    #[test]
    fn fermat_identity_weights() {
        let (lat, w) = identity_complex(&fermat(3));
        let c = SectorComplex::new(&lat, &lat.active_vars(), &w).unwrap();
        let h = c.cohomology(0, &DegreeTarget::new(lat.chi().clone())).unwrap();
        assert_eq!(h.dim, 2);
        assert_eq!(h.by_key.unwrap(), BTreeMap::from([(1, 1), (4, 1)]));
        let only4 = DegreeTarget { class: lat.chi().clone(), x0_weight: Some(4) };
        assert_eq!(c.cohomology(0, &only4).unwrap().dim, 1);
    }

    #[test]
    fn cusp_euler_series() {
        for n in 2..=3usize {
            let (lat, w) = identity_complex(&cusp(n));
            let all = lat.active_vars();
            let c = SectorComplex::new(&lat, &all, &w).unwrap();
            assert!(!c.tracks_x0());
            for a in 0..=(n as i64 + 2) {
                let rho = lat.scale(lat.chi(), a);
                let e = koszul_euler_char(&lat, &all, &rho);
                assert_eq!(e, if a < n as i64 { 1 } else { 0 }, "n={n} a={a}");
                assert_eq!(euler_from_cohomology(&c, &rho).unwrap(), e);
                for k in 2..=all.len() {
                    assert_eq!(c.cohomology(k, &DegreeTarget::new(rho.clone())).unwrap().dim, 0);
                }
            }
        }
    }

    #[test]
    fn odp_identity_h0_is_one_per_power() {
        let (lat, w) = identity_complex(&odp(3));
        let c = SectorComplex::new(&lat, &lat.active_vars(), &w).unwrap();
        for a in 0..5 {
            let h = c.cohomology(0, &DegreeTarget::new(lat.scale(lat.chi(), a))).unwrap();
            assert_eq!(h.dim, 1, "a={a}");
        }
    }

    /// `H⁰` against a dense rank of the Jacobi ideal slice.
    #[test]
    fn h0_matches_dense_jacobi_slice() {
        for p in [fermat(2), cusp(2), odp(2), double_cover(3)] {
            let (lat, w) = identity_complex(&p);
            let vars = lat.active_vars();
            let c = SectorComplex::new(&lat, &vars, &w).unwrap();
            for a in 0..3 {
                for v in 0..=lat.n() {
                    let rho = lat.add(&lat.scale(lat.chi(), a), lat.var_class(v));
                    let mons = enumerate_monomials(&lat, &vars, &rho);
                    let mut rows = Vec::new();
                    for &i in &vars {
                        let di = crate::wpoly::partial(&w, i);
                        let r = lat.sub(&rho, &lat.sub(lat.chi(), lat.var_class(i)));
                        for m in enumerate_monomials(&lat, &vars, &r) {
                            let mut row = vec![num_rational::BigRational::zero(); mons.len()];
                            for t in &di {
                                let pos = mons.iter().position(|x| *x == t.exp.mul(&m)).unwrap();
                                row[pos] += &t.coeff;
                            }
                            rows.push(row);
                        }
                    }
                    let dense = RatMatrix::from_rational_rows(mons.len(), rows);
                    let want = mons.len() - rank(&dense);
                    assert_eq!(c.cohomology(0, &DegreeTarget::new(rho)).unwrap().dim, want, "{}", p.name);
                }
            }
        }
    }

    #[test]
    fn isolated_sectors_vanish_above_one() {
        let p = fermat(3);
        let lat = p.lattice().unwrap();
        let w = p.big_w();
        let sectors = crate::symmetry::enumerate_ker_chi(&lat).unwrap();
        for s in sectors.iter().take(20) {
            let c = SectorComplex::new(&lat, &s.fixed, &w).unwrap();
            for a in 0..3 {
                let rho = lat.add(&lat.scale(lat.chi(), a), &s.det_n_dual);
                for k in 2..=s.fixed.len() {
                    assert_eq!(c.cohomology(k, &DegreeTarget::new(rho.clone())).unwrap().dim, 0);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn euler_identity(a in 0i64..3, v in 0usize..4, which in 0usize..3) {
            let p = [fermat(3), cusp(3), double_cover(3)][which].clone();
            let lat = p.lattice().unwrap();
            let w = p.big_w();
            let vars = lat.active_vars();
            let c = SectorComplex::new(&lat, &vars, &w).unwrap();
            let rho = lat.add(&lat.scale(lat.chi(), a), lat.var_class(v));
            let direct: i64 = (0..=vars.len()).map(|k| {
                let d = c.chain_dim(k, &rho) as i64;
                if k % 2 == 0 { d } else { -d }
            }).sum();
            prop_assert_eq!(koszul_euler_char(&lat, &vars, &rho), direct);
            prop_assert_eq!(euler_from_cohomology(&c, &rho).unwrap(), direct);
        }
    }
}
