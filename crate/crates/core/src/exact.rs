//! Exact integer and rational linear algebra.
//!
//! Dense routines (Smith normal form, determinants, rational kernels) work on
//! small matrices. Large sparse ranks go through [`SparseEchelon`], a
//! fraction-free incremental row echelon with content removal.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    /// Panics if the rows are ragged.
    pub fn from_rows<T: Into<BigInt> + Clone>(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged rows");
            for (j, x) in r.iter().enumerate() {
                m[(i, j)] = x.clone().into();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[dst] += q * row[src]
    fn add_row(&mut self, dst: usize, src: usize, q: &BigInt) {
        for j in 0..self.cols {
            let v = &self.data[src * self.cols + j] * q;
            self.data[dst * self.cols + j] += v;
        }
    }

    fn add_col(&mut self, dst: usize, src: usize, q: &BigInt) {
        for i in 0..self.rows {
            let v = &self.data[i * self.cols + src] * q;
            self.data[i * self.cols + dst] += v;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -std::mem::take(&mut self.data[i * self.cols + j]);
            self.data[i * self.cols + j] = v;
        }
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.to_string()).collect())
            .collect();
        write!(f, "{rows:?}")
    }
}

/// `u * m * v == d` with `d` diagonal and `d[i] | d[i+1]`.
#[derive(Clone, Debug)]
pub struct SnfResult {
    pub d: IntMatrix,
    pub u: IntMatrix,
    pub v: IntMatrix,
}

impl SnfResult {
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.d.rows().min(self.d.cols())).map(|i| self.d[(i, i)].clone()).collect()
    }

    pub fn rank(&self) -> usize {
        self.diagonal().iter().filter(|x| !x.is_zero()).count()
    }
}

pub fn snf(m: &IntMatrix) -> SnfResult {
    let (r, c) = (m.rows(), m.cols());
    let mut d = m.clone();
    let mut u = IntMatrix::identity(r);
    let mut v = IntMatrix::identity(c);

    for t in 0..r.min(c) {
        loop {
            // smallest nonzero entry of the trailing block becomes the pivot
            let mut best: Option<(usize, usize)> = None;
            for i in t..r {
                for j in t..c {
                    let x = &d[(i, j)];
                    if x.is_zero() {
                        continue;
                    }
                    if best.map_or(true, |(bi, bj)| x.abs() < d[(bi, bj)].abs()) {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                return SnfResult { d, u, v };
            };
            d.swap_rows(t, pi);
            u.swap_rows(t, pi);
            d.swap_cols(t, pj);
            v.swap_cols(t, pj);

            let mut clean = true;
            for i in t + 1..r {
                if d[(i, t)].is_zero() {
                    continue;
                }
                let q = -d[(i, t)].div_floor(&d[(t, t)]);
                d.add_row(i, t, &q);
                u.add_row(i, t, &q);
                clean &= d[(i, t)].is_zero();
            }
            for j in t + 1..c {
                if d[(t, j)].is_zero() {
                    continue;
                }
                let q = -d[(t, j)].div_floor(&d[(t, t)]);
                d.add_col(j, t, &q);
                v.add_col(j, t, &q);
                clean &= d[(t, j)].is_zero();
            }
            if !clean {
                continue;
            }
            // divisibility: fold an offending row into the pivot row and retry
            let p = d[(t, t)].clone();
            let bad = (t + 1..r).find(|&i| (t + 1..c).any(|j| !d[(i, j)].is_multiple_of(&p)));
            match bad {
                Some(i) => {
                    let one = BigInt::one();
                    d.add_row(t, i, &one);
                    u.add_row(t, i, &one);
                }
                None => break,
            }
        }
        if d[(t, t)].is_negative() {
            d.negate_row(t);
            u.negate_row(t);
        }
    }
    SnfResult { d, u, v }
}

/// Basis of the integer right kernel `{x ∈ ℤ^cols : m x = 0}`.
pub fn integer_kernel(m: &IntMatrix) -> Vec<Vec<BigInt>> {
    let s = snf(m);
    let rank = s.rank();
    (rank..m.cols())
        .map(|j| (0..m.cols()).map(|i| s.v[(i, j)].clone()).collect())
        .collect()
}

/// Determinant by Bareiss elimination.
pub fn det(m: &IntMatrix) -> BigInt {
    assert_eq!(m.rows(), m.cols(), "det of non-square matrix");
    let n = m.rows();
    if n == 0 {
        return BigInt::one();
    }
    let mut a = m.clone();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n {
        if a[(k, k)].is_zero() {
            match (k + 1..n).find(|&i| !a[(i, k)].is_zero()) {
                Some(i) => {
                    a.swap_rows(k, i);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let x = &a[(i, j)] * &a[(k, k)] - &a[(i, k)] * &a[(k, j)];
                a[(i, j)] = x / &prev;
            }
        }
        prev = a[(k, k)].clone();
    }
    sign * &a[(n - 1, n - 1)]
}

/// Dense rational matrix stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<BigRational>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix { rows, cols, data: vec![BigRational::zero(); rows * cols] }
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            for (j, &x) in r.iter().enumerate() {
                m.data[i * cols + j] = BigRational::from_integer(x.into());
            }
        }
        m
    }

    pub fn from_rational_rows(cols: usize, rows: Vec<Vec<BigRational>>) -> Self {
        let n = rows.len();
        let data: Vec<BigRational> = rows.into_iter().flatten().collect();
        assert_eq!(data.len(), n * cols, "ragged rows");
        RatMatrix { rows: n, cols, data }
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.cols + j]
    }

    /// Reduced row echelon form and its pivot columns.
    pub fn rref(&self) -> (RatMatrix, Vec<usize>) {
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..a.cols {
            if row == a.rows {
                break;
            }
            let Some(p) = (row..a.rows).find(|&i| !a.get(i, col).is_zero()) else {
                continue;
            };
            for j in 0..a.cols {
                a.data.swap(row * a.cols + j, p * a.cols + j);
            }
            let inv = a.get(row, col).recip();
            for j in 0..a.cols {
                let x = &a.data[row * a.cols + j] * &inv;
                a.data[row * a.cols + j] = x;
            }
            for i in 0..a.rows {
                if i == row || a.get(i, col).is_zero() {
                    continue;
                }
                let f = a.get(i, col).clone();
                for j in 0..a.cols {
                    let x = &a.data[row * a.cols + j] * &f;
                    a.data[i * a.cols + j] -= x;
                }
            }
            pivots.push(col);
            row += 1;
        }
        (a, pivots)
    }
}

/// Rank over ℚ. Rows are scaled to integers and fed to the sparse echelon.
pub fn rank(m: &RatMatrix) -> usize {
    let rows: Vec<SparseVec> = (0..m.rows)
        .map(|i| integer_row((0..m.cols).map(|j| (j as u32, m.get(i, j).clone()))))
        .collect();
    sparse_rank(rows)
}

pub fn kernel_basis(m: &RatMatrix) -> Vec<Vec<BigRational>> {
    let (r, pivots) = m.rref();
    let free: Vec<usize> = (0..m.cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); m.cols];
            v[f] = BigRational::one();
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = -r.get(row, f).clone();
            }
            v
        })
        .collect()
}

/// Sparse integer vector: strictly increasing column indices, nonzero values.
pub type SparseVec = Vec<(u32, BigInt)>;

/// Clears denominators of a sparse rational row (zero entries dropped).
pub fn integer_row(entries: impl IntoIterator<Item = (u32, BigRational)>) -> SparseVec {
    let mut v: Vec<(u32, BigRational)> = entries.into_iter().filter(|(_, x)| !x.is_zero()).collect();
    v.sort_by_key(|(c, _)| *c);
    let l = v.iter().fold(BigInt::one(), |acc, (_, x)| acc.lcm(x.denom()));
    v.into_iter().map(|(c, x)| (c, (x * &l).to_integer())).collect()
}

mod fraction_free {
    use std::collections::HashMap;
    use std::fmt;

    use num_bigint::BigInt;
    use num_traits::ToPrimitive;

    use super::SparseVec;

    trait Ring: Clone + fmt::Debug + Sized {
        fn is_zero(&self) -> bool;
        /// a*b - c*d, or None on overflow.
        fn cross(a: &Self, b: &Self, c: &Self, d: &Self) -> Option<Self>;
        fn mul(a: &Self, b: &Self) -> Option<Self>;
        fn gcd(&self, other: &Self) -> Self;
        fn div_exact(&self, g: &Self) -> Self;
        fn is_one(&self) -> bool;
        fn is_negative(&self) -> bool;
        fn neg(&self) -> Self;
    }

    impl Ring for i128 {
        fn is_zero(&self) -> bool {
            *self == 0
        }
        fn cross(a: &Self, b: &Self, c: &Self, d: &Self) -> Option<Self> {
            a.checked_mul(*b)?.checked_sub(c.checked_mul(*d)?)
        }
        fn mul(a: &Self, b: &Self) -> Option<Self> {
            a.checked_mul(*b)
        }
        fn gcd(&self, other: &Self) -> Self {
            num_integer::Integer::gcd(self, other)
        }
        fn div_exact(&self, g: &Self) -> Self {
            self / g
        }
        fn is_one(&self) -> bool {
            *self == 1
        }
        fn is_negative(&self) -> bool {
            *self < 0
        }
        fn neg(&self) -> Self {
            -self
        }
    }

    impl Ring for BigInt {
        fn is_zero(&self) -> bool {
            num_traits::Zero::is_zero(self)
        }
        fn cross(a: &Self, b: &Self, c: &Self, d: &Self) -> Option<Self> {
            Some(a * b - c * d)
        }
        fn mul(a: &Self, b: &Self) -> Option<Self> {
            Some(a * b)
        }
        fn gcd(&self, other: &Self) -> Self {
            num_integer::Integer::gcd(self, other)
        }
        fn div_exact(&self, g: &Self) -> Self {
            self / g
        }
        fn is_one(&self) -> bool {
            num_traits::One::is_one(self)
        }
        fn is_negative(&self) -> bool {
            num_traits::Signed::is_negative(self)
        }
        fn neg(&self) -> Self {
            -self
        }
    }

    struct Overflow;

    #[derive(Debug)]
    struct Echelon<T> {
        pivots: HashMap<u32, Vec<(u32, T)>>,
    }

    impl<T: Ring> Echelon<T> {
        fn new() -> Self {
            Echelon { pivots: HashMap::new() }
        }

        /// Reduces `row` against the stored pivots; stores it if it survives.
        /// Returns the new pivot column, if any.
        fn insert(&mut self, mut row: Vec<(u32, T)>) -> Result<Option<u32>, Overflow> {
            loop {
                let Some(&(lead, _)) = row.first() else {
                    return Ok(None);
                };
                let Some(p) = self.pivots.get(&lead) else {
                    normalize(&mut row);
                    self.pivots.insert(lead, row);
                    return Ok(Some(lead));
                };
                row = eliminate(&row, p)?;
            }
        }
    }

    /// p_lead * row - row_lead * p, leading column cancelled.
    fn eliminate<T: Ring>(row: &[(u32, T)], p: &[(u32, T)]) -> Result<Vec<(u32, T)>, Overflow> {
        let g = p[0].1.gcd(&row[0].1);
        let a = p[0].1.div_exact(&g);
        let b = row[0].1.div_exact(&g);
        let mut out = Vec::with_capacity(row.len() + p.len());
        let (mut i, mut j) = (1, 1);
        while i < row.len() || j < p.len() {
            let ci = row.get(i).map(|e| e.0).unwrap_or(u32::MAX);
            let cj = p.get(j).map(|e| e.0).unwrap_or(u32::MAX);
            let (col, val) = if ci == cj {
                let v = T::cross(&a, &row[i].1, &b, &p[j].1).ok_or(Overflow)?;
                i += 1;
                j += 1;
                (ci, v)
            } else if ci < cj {
                let v = T::mul(&a, &row[i].1).ok_or(Overflow)?;
                i += 1;
                (ci, v)
            } else {
                let v = T::mul(&b, &p[j].1).ok_or(Overflow)?.neg();
                j += 1;
                (cj, v)
            };
            if !val.is_zero() {
                out.push((col, val));
            }
        }
        normalize(&mut out);
        Ok(out)
    }

    fn normalize<T: Ring>(row: &mut [(u32, T)]) {
        if row.is_empty() {
            return;
        }
        let mut g = row[0].1.clone();
        for (_, x) in row.iter().skip(1) {
            if g.is_one() {
                break;
            }
            g = g.gcd(x);
        }
        if row[0].1.is_negative() {
            g = g.neg();
        }
        if !g.is_one() {
            for (_, x) in row.iter_mut() {
                *x = x.div_exact(&g);
            }
        }
    }

    /// Fraction-free sparse row echelon over ℤ (rank over ℚ).
    ///
    /// Runs in `i128` and restarts in `BigInt` if any intermediate overflows.
    pub struct SparseEchelon {
        rows: Vec<SparseVec>,
    }

    impl SparseEchelon {
        pub fn new(rows: Vec<SparseVec>) -> Self {
            SparseEchelon { rows }
        }

        /// Pivot columns in insertion order of the rows that produced them.
        pub fn pivot_columns(&self) -> Vec<u32> {
            let small: Option<Vec<Vec<(u32, i128)>>> = self
                .rows
                .iter()
                .map(|r| r.iter().map(|(c, x)| x.to_i128().map(|v| (*c, v))).collect())
                .collect();
            if let Some(rows) = small {
                if let Ok(p) = run_echelon(rows) {
                    return p;
                }
            }
            run_echelon(self.rows.clone()).unwrap_or_else(|_| unreachable!("BigInt never overflows"))
        }

        pub fn rank(&self) -> usize {
            self.pivot_columns().len()
        }
    }

    fn run_echelon<T: Ring>(mut rows: Vec<Vec<(u32, T)>>) -> Result<Vec<u32>, Overflow> {
        let mut e = Echelon::new();
        let mut out = Vec::new();
        // sparse rows first keeps fill-in down
        let mut order: Vec<usize> = (0..rows.len()).collect();
        order.sort_by_key(|&i| rows[i].len());
        for i in order {
            let r = std::mem::take(&mut rows[i]);
            if let Some(c) = e.insert(r)? {
                out.push(c);
            }
        }
        Ok(out)
    }

}

pub use fraction_free::SparseEchelon;

pub fn sparse_rank(rows: Vec<SparseVec>) -> usize {
    SparseEchelon::new(rows).rank()
}

pub fn to_i64(x: &BigInt) -> i64 {
    x.to_i64().expect("integer does not fit in i64")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn im(rows: &[Vec<i64>]) -> IntMatrix {
        IntMatrix::from_rows(rows)
    }

    fn check_snf(m: &IntMatrix) -> SnfResult {
        let s = snf(m);
        assert_eq!(s.u.mul(m).mul(&s.v), s.d);
        assert!(det(&s.u).abs().is_one());
        assert!(det(&s.v).abs().is_one());
        let diag = s.diagonal();
        for i in 0..s.d.rows() {
            for j in 0..s.d.cols() {
                if i != j {
                    assert!(s.d[(i, j)].is_zero());
                }
            }
        }
        for w in diag.windows(2) {
            if w[1].is_zero() {
                continue;
            }
            assert!(!w[0].is_zero() && w[1].is_multiple_of(&w[0]), "{diag:?}");
        }
        s
    }

    #[test]
    fn snf_examples() {
        let s = check_snf(&IntMatrix::identity(2));
        assert_eq!(s.d, IntMatrix::identity(2));
        let s = check_snf(&im(&[vec![2, 0], vec![0, 3]]));
        assert_eq!(s.d, im(&[vec![1, 0], vec![0, 6]]));
        let s = check_snf(&IntMatrix::zeros(2, 3));
        assert!(s.d.is_zero());
    }

    #[test]
    fn snf_relation_lattice_of_fermat_quartic() {
        // rows (4e_i, -1): torsion (Z/4)^2 plus a free summand
        let m = im(&[vec![4, 0, 0, -1], vec![0, 4, 0, -1], vec![0, 0, 4, -1]]);
        let s = check_snf(&m);
        let d: Vec<i64> = s.diagonal().iter().map(to_i64).collect();
        assert_eq!(d, vec![1, 4, 4]);
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&RatMatrix::zeros(3, 2)), 0);
        assert_eq!(rank(&RatMatrix::from_i64(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]])), 3);
        assert_eq!(rank(&RatMatrix::from_i64(&[vec![1, 2], vec![2, 4]])), 1);
    }

    #[test]
    fn kernel_examples() {
        assert!(kernel_basis(&RatMatrix::from_i64(&[vec![1, 0], vec![0, 1]])).is_empty());
        let k = kernel_basis(&RatMatrix::from_i64(&[vec![1, 1]]));
        assert_eq!(k.len(), 1);
        assert_eq!(k[0][0], -k[0][1].clone());
        assert_eq!(kernel_basis(&RatMatrix::zeros(1, 2)).len(), 2);
    }

    #[test]
    fn integer_kernel_of_weight_row() {
        let m = im(&[vec![2, 1, 4]]);
        let k = integer_kernel(&m);
        assert_eq!(k.len(), 2);
        for v in &k {
            let s: BigInt = v.iter().zip([2, 1, 4]).map(|(x, w)| x * w).sum();
            assert!(s.is_zero());
        }
        // the kernel is saturated: its SNF has unit invariant factors
        let s = snf(&IntMatrix::from_rows(&k));
        assert!(s.diagonal().iter().all(|x| x.is_one()));
    }

    #[test]
    fn echelon_falls_back_to_bigint() {
        let big = BigInt::from(1u64 << 62);
        let rows = vec![
            vec![(0, big.clone()), (1, BigInt::from(3))],
            vec![(0, BigInt::from(3)), (1, big.clone() * &big)],
            vec![(0, BigInt::from(6)), (1, big.clone() * &big * 2)],
        ];
        assert_eq!(sparse_rank(rows), 2);
    }

    /// Rank as the largest size of a nonvanishing minor.
    fn rank_by_minors(rows: &[Vec<i64>]) -> usize {
        use itertools::Itertools;
        let (r, c) = (rows.len(), rows.first().map_or(0, |x| x.len()));
        for k in (1..=r.min(c)).rev() {
            for rs in (0..r).combinations(k) {
                for cs in (0..c).combinations(k) {
                    let sub: Vec<Vec<i64>> =
                        rs.iter().map(|&i| cs.iter().map(|&j| rows[i][j]).collect()).collect();
                    if !det(&im(&sub)).is_zero() {
                        return k;
                    }
                }
            }
        }
        0
    }

    fn small_matrix() -> impl Strategy<Value = Vec<Vec<i64>>> {
        (1usize..=4, 1usize..=4).prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::collection::vec(-4i64..=4, c), r)
        })
    }

    proptest! {
        #[test]
        fn snf_round_trip(m in small_matrix()) {
            check_snf(&im(&m));
        }

        #[test]
        fn rank_nullity(m in small_matrix()) {
            let q = RatMatrix::from_i64(&m);
            prop_assert_eq!(rank(&q) + kernel_basis(&q).len(), q.cols);
        }

        #[test]
        fn rank_matches_minors(m in small_matrix()) {
            prop_assert_eq!(rank(&RatMatrix::from_i64(&m)), rank_by_minors(&m));
        }

        #[test]
        fn kernel_vectors_are_annihilated(m in small_matrix()) {
            let q = RatMatrix::from_i64(&m);
            for v in kernel_basis(&q) {
                for i in 0..q.rows {
                    let s: BigRational = (0..q.cols).map(|j| q.get(i, j) * &v[j]).sum();
                    prop_assert!(s.is_zero());
                }
            }
        }
    }
}
