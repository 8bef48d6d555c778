//! Exact integer and rational linear algebra.
//!
//! Integer matrices carry the lattice data (edge labels, unimodular
//! matrices, sublattice maps). Rational matrices carry the affine maps on
//! parameter space and the fixed-locus systems, where exactness makes
//! subspace containment decidable.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn rat(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Exact rational value of a finite float.
pub fn rat_from_f64(v: f64) -> Rational {
    Rational::from_float(v).expect("finite float")
}

pub fn rat_to_f64(v: &Rational) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Renders as `p/q`, or `p` for integers.
pub fn rat_to_string(v: &Rational) -> String {
    if v.is_integer() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

pub fn rat_from_str(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(Rational::new(p, q))
        }
        None => s.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

/// Dense row-major integer matrix.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    /// Builds a matrix from rows. Returns `None` for ragged input.
    pub fn from_rows(rows: &[Vec<i64>]) -> Option<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        Some(Self { rows: rows.len(), cols, data: rows.iter().flatten().copied().collect() })
    }

    /// Builds a `rows × columns.len()` matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[Vec<i64>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (c, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows);
            for (r, v) in col.iter().enumerate() {
                m.set(r, c, *v);
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

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: i64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows).map(|r| self.data[r * self.cols..(r + 1) * self.cols].to_vec()).collect()
    }

    pub fn column(&self, c: usize) -> Vec<i64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|r| (0..self.cols).all(|c| self.get(r, c) == i64::from(r == c)))
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == 0 {
                    continue;
                }
                for c in 0..other.cols {
                    out.data[r * other.cols + c] += a * other.get(k, c);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[i64]) -> Vec<i64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|r| (0..self.cols).map(|c| self.get(r, c) * v[c]).sum()).collect()
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> i64 {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return 1;
        }
        let mut a: Vec<i128> = self.data.iter().map(|&v| v as i128).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n - 1 {
            if a[k * n + k] == 0 {
                let Some(p) = (k + 1..n).find(|&r| a[r * n + k] != 0) else {
                    return 0;
                };
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    a[i * n + j] = (a[i * n + j] * a[k * n + k] - a[i * n + k] * a[k * n + j]) / prev;
                }
            }
            prev = a[k * n + k];
        }
        (sign * a[n * n - 1]) as i64
    }

    pub fn to_rational(&self) -> RatMatrix {
        RatMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| rat(v)).collect(),
        }
    }

    /// Inverse over the rationals, `None` when singular.
    pub fn inverse_rational(&self) -> Option<RatMatrix> {
        self.to_rational().inverse()
    }

    /// Integer inverse of a unimodular matrix.
    pub fn inverse_unimodular(&self) -> Option<IntMatrix> {
        if self.rows != self.cols || self.det().abs() != 1 {
            return None;
        }
        self.inverse_rational()?.to_integer()
    }

    /// Nonzero invariant factors of the Smith normal form, in divisibility order.
    pub fn smith_invariants(&self) -> Vec<i64> {
        let mut a: Vec<Vec<i128>> =
            self.to_rows().into_iter().map(|r| r.into_iter().map(i128::from).collect()).collect();
        let (rows, cols) = (self.rows, self.cols);
        let mut diag = Vec::new();
        let mut t = 0;
        while t < rows.min(cols) {
            // smallest nonzero entry in the remaining block
            let mut best: Option<(usize, usize)> = None;
            for r in t..rows {
                for c in t..cols {
                    if a[r][c] != 0 && best.is_none_or(|(br, bc)| a[r][c].abs() < a[br][bc].abs()) {
                        best = Some((r, c));
                    }
                }
            }
            let Some((pr, pc)) = best else { break };
            a.swap(t, pr);
            for row in a.iter_mut() {
                row.swap(t, pc);
            }
            loop {
                let mut done = true;
                for r in t + 1..rows {
                    let q = Integer::div_floor(&a[r][t], &a[t][t]);
                    if q != 0 {
                        for c in t..cols {
                            a[r][c] -= q * a[t][c];
                        }
                    }
                    if a[r][t] != 0 {
                        done = false;
                    }
                }
                for c in t + 1..cols {
                    let q = Integer::div_floor(&a[t][c], &a[t][t]);
                    if q != 0 {
                        for row in a.iter_mut().skip(t) {
                            row[c] -= q * row[t];
                        }
                    }
                    if a[t][c] != 0 {
                        done = false;
                    }
                }
                if done {
                    // divisibility: fold any offending entry into the pivot row
                    let bad = (t + 1..rows)
                        .flat_map(|r| (t + 1..cols).map(move |c| (r, c)))
                        .find(|&(r, c)| a[r][c] % a[t][t] != 0);
                    match bad {
                        Some((r, _)) => {
                            for c in t..cols {
                                let v = a[r][c];
                                a[t][c] += v;
                            }
                        }
                        None => break,
                    }
                }
                // move the smallest remaining entry of row/column t to the pivot
                let mut best = (t, t);
                for r in t..rows {
                    if a[r][t] != 0 && a[r][t].abs() < a[best.0][best.1].abs() {
                        best = (r, t);
                    }
                }
                for c in t..cols {
                    if a[t][c] != 0 && a[t][c].abs() < a[best.0][best.1].abs() {
                        best = (t, c);
                    }
                }
                a.swap(t, best.0);
                for row in a.iter_mut() {
                    row.swap(t, best.1);
                }
            }
            diag.push(a[t][t].abs() as i64);
            t += 1;
        }
        diag
    }

    /// Column-style Hermite normal form of a nonsingular square matrix:
    /// `H = M U` with `U` unimodular, `H` upper triangular with positive
    /// diagonal and `0 <= H[i][j] < H[i][i]` for `j > i`.
    pub fn column_hnf(&self) -> Option<IntMatrix> {
        if self.rows != self.cols || self.det() == 0 {
            return None;
        }
        let n = self.rows;
        let mut h = self.clone();
        let col_axpy = |h: &mut IntMatrix, dst: usize, src: usize, q: i64| {
            for r in 0..n {
                let v = h.get(r, dst) - q * h.get(r, src);
                h.set(r, dst, v);
            }
        };
        let col_swap = |h: &mut IntMatrix, a: usize, b: usize| {
            for r in 0..n {
                let (x, y) = (h.get(r, a), h.get(r, b));
                h.set(r, a, y);
                h.set(r, b, x);
            }
        };
        for i in (0..n).rev() {
            // gcd of row i over columns 0..=i collected into column i
            loop {
                let nz: Vec<usize> = (0..=i).filter(|&c| h.get(i, c) != 0).collect();
                if nz.len() <= 1 {
                    if let Some(&c) = nz.first() {
                        if c != i {
                            col_swap(&mut h, c, i);
                        }
                    }
                    break;
                }
                let &p = nz.iter().min_by_key(|&&c| h.get(i, c).abs()).unwrap();
                for &c in &nz {
                    if c != p {
                        let q = Integer::div_floor(&h.get(i, c), &h.get(i, p));
                        col_axpy(&mut h, c, p, q);
                    }
                }
            }
            if h.get(i, i) < 0 {
                for r in 0..n {
                    let v = -h.get(r, i);
                    h.set(r, i, v);
                }
            }
            let piv = h.get(i, i);
            for j in i + 1..n {
                let q = Integer::div_floor(&h.get(i, j), &piv);
                if q != 0 {
                    col_axpy(&mut h, j, i, q);
                }
            }
        }
        Some(h)
    }
}

/// Dense row-major rational matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = (0..self.rows)
            .map(|r| (0..self.cols).map(|c| rat_to_string(self.get(r, c))).collect())
            .collect();
        f.debug_list().entries(rows).finish()
    }
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Rational::one();
        }
        m
    }

    pub fn from_columns(rows: usize, columns: &[Vec<Rational>]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (c, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows);
            for (r, v) in col.iter().enumerate() {
                m.set(r, c, v.clone());
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

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> &Rational {
        &self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Rational) {
        self.data[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<Rational> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<Rational>> {
        (0..self.cols).map(|c| self.column(c)).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|r| {
                (0..self.cols).all(|c| {
                    let v = self.get(r, c);
                    if r == c { v.is_one() } else { v.is_zero() }
                })
            })
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let b = other.get(k, c);
                    if !b.is_zero() {
                        out.data[r * other.cols + c] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vec<Rational> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| {
                let mut acc = Rational::zero();
                for (c, x) in v.iter().enumerate() {
                    let a = self.get(r, c);
                    if !a.is_zero() && !x.is_zero() {
                        acc += a * x;
                    }
                }
                acc
            })
            .collect()
    }

    /// Integer matrix when every entry is integral.
    pub fn to_integer(&self) -> Option<IntMatrix> {
        let mut out = IntMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let v = self.get(r, c);
                if !v.is_integer() {
                    return None;
                }
                out.set(r, c, v.numer().to_i64()?);
            }
        }
        Some(out)
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |r, c| rat_to_f64(self.get(r, c)))
    }

    /// Reduced row echelon form in place; returns pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(p) = (row..self.rows).find(|&r| !self.get(r, col).is_zero()) else {
                continue;
            };
            if p != row {
                for c in 0..self.cols {
                    self.data.swap(p * self.cols + c, row * self.cols + c);
                }
            }
            let inv = self.get(row, col).recip();
            for c in col..self.cols {
                let v = self.get(row, c) * &inv;
                self.set(row, c, v);
            }
            for r in 0..self.rows {
                if r == row {
                    continue;
                }
                let factor = self.get(r, col).clone();
                if factor.is_zero() {
                    continue;
                }
                for c in col..self.cols {
                    let sub = self.get(row, c) * &factor;
                    if !sub.is_zero() {
                        self.data[r * self.cols + c] -= sub;
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Basis of the right null space, one column per free variable.
    pub fn nullspace(&self) -> RatMatrix {
        let mut m = self.clone();
        let pivots = m.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let columns: Vec<Vec<Rational>> = free
            .iter()
            .map(|&f| {
                let mut v = vec![Rational::zero(); self.cols];
                v[f] = Rational::one();
                for (prow, &pc) in pivots.iter().enumerate() {
                    v[pc] = -m.get(prow, f).clone();
                }
                v
            })
            .collect();
        RatMatrix::from_columns(self.cols, &columns)
    }

    /// Solves `self * x = rhs`. Returns a particular solution (free variables
    /// set to zero) or `None` when inconsistent.
    pub fn solve(&self, rhs: &[Rational]) -> Option<Vec<Rational>> {
        assert_eq!(rhs.len(), self.rows);
        let mut aug = Self::zeros(self.rows, self.cols + 1);
        for r in 0..self.rows {
            for c in 0..self.cols {
                aug.set(r, c, self.get(r, c).clone());
            }
            aug.set(r, self.cols, rhs[r].clone());
        }
        let pivots = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![Rational::zero(); self.cols];
        for (prow, &pc) in pivots.iter().enumerate() {
            x[pc] = aug.get(prow, self.cols).clone();
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<RatMatrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug.set(r, c, self.get(r, c).clone());
            }
            aug.set(r, n + r, Rational::one());
        }
        let pivots = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        let mut inv = Self::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                inv.set(r, c, aug.get(r, n + c).clone());
            }
        }
        Some(inv)
    }

    /// Whether `v` lies in the column span.
    pub fn spans(&self, v: &[Rational]) -> bool {
        if self.cols == 0 {
            return v.iter().all(Zero::is_zero);
        }
        self.solve(v).is_some()
    }
}

/// Rational vector with all entries integral, as `i64`.
pub fn rat_vec_to_int(v: &[Rational]) -> Option<Vec<i64>> {
    v.iter().map(|x| if x.is_integer() { x.numer().to_i64() } else { None }).collect()
}

pub fn is_zero_vec(v: &[Rational]) -> bool {
    v.iter().all(Zero::is_zero)
}

pub fn rat_abs_max(v: &[Rational]) -> Rational {
    v.iter().map(Signed::abs).max().unwrap_or_else(Rational::zero)
}
