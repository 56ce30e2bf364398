//! Band-diagonal linear algebra in row-compressed storage: construction,
//! matrix-vector products, LU factorization with partial pivoting and
//! repeated solves.
//!
//! Row i stores the band window columns i-m1 ..= i+m2 contiguously, so a
//! matrix costs n*(m1+m2+1) doubles and factorization O(n*(m1+m2)^2) flops.
//! The implicit stepper factors its system matrix once and then back-solves
//! every time step against a fresh right-hand side.

use crate::error::{KerrError, Result};

/// Threshold below which a pivot is declared numerically singular.
const PIVOT_FLOOR: f64 = 1e-300;

/// Band matrix A with m1 sub- and m2 super-diagonals, row-compressed.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedBandMatrix {
    pub n: usize,
    pub m1: usize,
    pub m2: usize,
    /// n rows of width m1+m2+1; entry (i, j) lives at row i, slot j-i+m1
    rows: Vec<f64>,
}

impl CompressedBandMatrix {
    pub fn zeros(n: usize, m1: usize, m2: usize) -> Self {
        CompressedBandMatrix { n, m1, m2, rows: vec![0.0; n * (m1 + m2 + 1)] }
    }

    pub fn width(&self) -> usize {
        self.m1 + self.m2 + 1
    }

    fn slot(&self, row: usize, col: usize) -> Option<usize> {
        if row >= self.n || col >= self.n {
            return None;
        }
        let lo = row.saturating_sub(self.m1);
        let hi = (row + self.m2).min(self.n - 1);
        if col < lo || col > hi {
            return None;
        }
        Some(row * self.width() + (col + self.m1 - row))
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.slot(row, col).map_or(0.0, |s| self.rows[s])
    }

    /// Accumulate into (row, col); duplicate coordinates add up.
    pub fn add_entry(&mut self, row: usize, col: usize, value: f64) -> Result<()> {
        match self.slot(row, col) {
            Some(s) => {
                self.rows[s] += value;
                Ok(())
            }
            None => Err(KerrError::BandwidthViolation { row, col, m1: self.m1, m2: self.m2 }),
        }
    }

    /// Overwrite an entire compressed row with zeros (used for constraint rows).
    pub fn clear_row(&mut self, row: usize) {
        let w = self.width();
        self.rows[row * w..(row + 1) * w].fill(0.0);
    }
}

/// Build a band matrix from coordinate triplets.
pub fn band_from_entries(
    n: usize,
    m1: usize,
    m2: usize,
    entries: &[(usize, usize, f64)],
) -> Result<CompressedBandMatrix> {
    let mut m = CompressedBandMatrix::zeros(n, m1, m2);
    for &(row, col, value) in entries {
        m.add_entry(row, col, value)?;
    }
    Ok(m)
}

/// y = A x, touching only the stored band.
pub fn band_matvec(matrix: &CompressedBandMatrix, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != matrix.n {
        return Err(KerrError::DimensionMismatch { expected: matrix.n, got: x.len() });
    }
    let w = matrix.width();
    let mut y = vec![0.0; matrix.n];
    for i in 0..matrix.n {
        let lo = i.saturating_sub(matrix.m1);
        let hi = (i + matrix.m2).min(matrix.n - 1);
        let row = &matrix.rows[i * w..(i + 1) * w];
        let mut acc = 0.0;
        for j in lo..=hi {
            acc += row[j + matrix.m1 - i] * x[j];
        }
        y[i] = acc;
    }
    Ok(y)
}

/// LU factors of a band matrix: U in shifted row-compressed form, the
/// elimination multipliers, and the partial-pivoting row choices.
#[derive(Debug, Clone)]
pub struct FactorizedBandMatrix {
    pub n: usize,
    pub m1: usize,
    pub m2: usize,
    /// upper factor, n rows of width m1+m2+1, row k left-aligned at the pivot
    upper: Vec<f64>,
    /// multipliers: row k holds the m1 values that eliminated rows k+1..
    lower: Vec<f64>,
    /// pivot[k] = row swapped into position k at step k
    pivot: Vec<usize>,
}

/// Crout-style banded LU with partial pivoting. Consumes the matrix; the
/// original is recoverable only through residual checks with `band_matvec`.
pub fn band_lu_decompose(matrix: CompressedBandMatrix) -> Result<FactorizedBandMatrix> {
    let (n, m1, m2) = (matrix.n, matrix.m1, matrix.m2);
    let w = m1 + m2 + 1;
    let mut a = matrix.rows;
    let mut al = vec![0.0; n * m1];
    let mut pivot = vec![0usize; n];

    // left-align the first m1 rows so every row starts at its first stored column
    let mut l = m1;
    for i in 0..m1.min(n) {
        for j in (m1 - i)..w {
            a[i * w + j - l] = a[i * w + j];
        }
        l -= 1;
        for j in (w - l - 1)..w {
            a[i * w + j] = 0.0;
        }
    }

    let mut l = m1;
    for k in 0..n {
        if l < n {
            l += 1;
        }
        // pick the largest leading entry among the rows this step can touch
        let mut ip = k;
        let mut pmag = a[k * w].abs();
        for i in (k + 1)..l.min(k + m1 + 1).min(n) {
            if a[i * w].abs() > pmag {
                pmag = a[i * w].abs();
                ip = i;
            }
        }
        pivot[k] = ip;
        if pmag < PIVOT_FLOOR {
            return Err(KerrError::SingularMatrix { step: k, pivot: a[k * w] });
        }
        if ip != k {
            for j in 0..w {
                a.swap(k * w + j, ip * w + j);
            }
        }
        for i in (k + 1)..l.min(k + m1 + 1).min(n) {
            let mult = a[i * w] / a[k * w];
            al[k * m1 + (i - k - 1)] = mult;
            for j in 1..w {
                a[i * w + j - 1] = a[i * w + j] - mult * a[k * w + j];
            }
            a[i * w + w - 1] = 0.0;
        }
    }

    Ok(FactorizedBandMatrix { n, m1, m2, upper: a, lower: al, pivot })
}

/// Solve A x = rhs from the factors: forward substitution through the
/// multipliers, then banded back substitution through U.
pub fn band_solve(factors: &FactorizedBandMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let mut x = rhs.to_vec();
    band_solve_in_place(factors, &mut x)?;
    Ok(x)
}

pub fn band_solve_in_place(factors: &FactorizedBandMatrix, b: &mut [f64]) -> Result<()> {
    let (n, m1, m2) = (factors.n, factors.m1, factors.m2);
    if b.len() != n {
        return Err(KerrError::DimensionMismatch { expected: n, got: b.len() });
    }
    let w = m1 + m2 + 1;

    let mut l = m1;
    for k in 0..n {
        let ip = factors.pivot[k];
        if ip != k {
            b.swap(k, ip);
        }
        if l < n {
            l += 1;
        }
        for i in (k + 1)..l.min(k + m1 + 1).min(n) {
            b[i] -= factors.lower[k * m1 + (i - k - 1)] * b[k];
        }
    }

    let mut l = 1;
    for i in (0..n).rev() {
        let mut acc = b[i];
        for k in 1..l {
            acc -= factors.upper[i * w + k] * b[i + k];
        }
        b[i] = acc / factors.upper[i * w];
        if l < w {
            l += 1;
        }
    }
    Ok(())
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)] // index loops mirror the dense-matrix math
mod tests {
    use super::*;

    fn to_dense(m: &CompressedBandMatrix) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; m.n]; m.n];
        for i in 0..m.n {
            for j in 0..m.n {
                d[i][j] = m.get(i, j);
            }
        }
        d
    }

    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, piv);
            b.swap(k, piv);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                b[i] -= a[i][j] * b[j];
            }
            b[i] /= a[i][i];
        }
        b
    }

    #[test]
    fn identity_construction_and_solve() {
        let entries: Vec<_> = (0..3).map(|i| (i, i, 1.0)).collect();
        let m = band_from_entries(3, 0, 0, &entries).unwrap();
        assert_eq!(to_dense(&m), vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let f = band_lu_decompose(m).unwrap();
        let b = vec![3.0, -1.0, 2.5];
        assert_eq!(band_solve(&f, &b).unwrap(), b);
    }

    #[test]
    fn bandwidth_violation_names_the_entry() {
        let err = band_from_entries(3, 0, 1, &[(0, 2, 1.0)]).unwrap_err();
        match err {
            KerrError::BandwidthViolation { row: 0, col: 2, m1: 0, m2: 1 } => {}
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicate_entries_accumulate() {
        let m = band_from_entries(2, 0, 0, &[(0, 0, 1.5), (0, 0, 2.0), (1, 1, 1.0)]).unwrap();
        assert_eq!(m.get(0, 0), 3.5);
    }

    #[test]
    fn second_difference_stencil_is_tridiagonal() {
        let mut entries = Vec::new();
        for i in 0..5usize {
            entries.push((i, i, -2.0));
            if i > 0 {
                entries.push((i, i - 1, 1.0));
            }
            if i + 1 < 5 {
                entries.push((i, i + 1, 1.0));
            }
        }
        let m = band_from_entries(5, 1, 1, &entries).unwrap();
        let d = to_dense(&m);
        for i in 0..5usize {
            for j in 0..5usize {
                let want = if i == j {
                    -2.0
                } else if i.abs_diff(j) == 1 {
                    1.0
                } else {
                    0.0
                };
                assert_eq!(d[i][j], want);
            }
        }
    }

    #[test]
    fn matvec_matches_dense() {
        let entries = pseudo_random_band(100, 3, 2, 1);
        let m = band_from_entries(100, 3, 2, &entries).unwrap();
        let x: Vec<f64> = (0..100).map(|i| ((i * 37 + 11) % 17) as f64 / 3.0 - 2.0).collect();
        let y = band_matvec(&m, &x).unwrap();
        let d = to_dense(&m);
        for i in 0..100 {
            let want: f64 = (0..100).map(|j| d[i][j] * x[j]).sum();
            assert!((y[i] - want).abs() <= 1e-13 * want.abs().max(1.0));
        }
    }

    #[test]
    fn zero_matrix_matvec_is_zero() {
        let m = CompressedBandMatrix::zeros(8, 2, 2);
        let y = band_matvec(&m, &[1.0; 8]).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn factors_recompose_the_matrix() {
        // L*U (with the permutation) must reproduce A; checked through solves
        // on the full basis, which exercises every column of the factors.
        let entries = pseudo_random_band(50, 3, 3, 7);
        let m = band_from_entries(50, 3, 3, &entries).unwrap();
        let d = to_dense(&m);
        let f = band_lu_decompose(m).unwrap();
        for col in 0..50 {
            let mut e = vec![0.0; 50];
            e[col] = 1.0;
            let x = band_solve(&f, &e).unwrap();
            // A * x should give back the basis vector
            let mut r = vec![0.0; 50];
            for i in 0..50 {
                r[i] = (0..50).map(|j| d[i][j] * x[j]).sum();
            }
            for i in 0..50 {
                let want = if i == col { 1.0 } else { 0.0 };
                assert!((r[i] - want).abs() < 1e-12, "col {col} row {i}: {}", r[i]);
            }
        }
    }

    #[test]
    fn zero_row_is_reported_singular() {
        let mut entries = pseudo_random_band(10, 2, 2, 3);
        entries.retain(|&(r, _, _)| r != 4);
        let m = band_from_entries(10, 2, 2, &entries).unwrap();
        match band_lu_decompose(m) {
            Err(KerrError::SingularMatrix { .. }) => {}
            other => panic!("expected singular-matrix error, got {other:?}"),
        }
    }

    #[test]
    fn manufactured_solution_recovered() {
        let entries = pseudo_random_band(50, 3, 3, 21);
        let m = band_from_entries(50, 3, 3, &entries).unwrap();
        let x_star: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin() + 2.0).collect();
        let rhs = band_matvec(&m, &x_star).unwrap();
        let f = band_lu_decompose(m).unwrap();
        let x = band_solve(&f, &rhs).unwrap();
        for i in 0..50 {
            assert!((x[i] - x_star[i]).abs() < 1e-10 * x_star[i].abs());
        }
    }

    #[test]
    fn tridiagonal_matches_dense_oracle() {
        let n = 10;
        let mut entries = Vec::new();
        for i in 0..n {
            entries.push((i, i, 2.0));
            if i > 0 {
                entries.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                entries.push((i, i + 1, -1.0));
            }
        }
        let m = band_from_entries(n, 1, 1, &entries).unwrap();
        let d = to_dense(&m);
        let f = band_lu_decompose(m).unwrap();
        let x = band_solve(&f, &vec![1.0; n]).unwrap();
        let y = dense_solve(d, vec![1.0; n]);
        for i in 0..n {
            assert!((x[i] - y[i]).abs() < 1e-12 * y[i].abs().max(1.0));
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = CompressedBandMatrix::zeros(5, 1, 1);
        assert!(matches!(
            band_matvec(&m, &[1.0; 4]),
            Err(KerrError::DimensionMismatch { expected: 5, got: 4 })
        ));
    }

    /// Deterministic well-conditioned band test matrices: off-diagonal noise
    /// plus strong diagonal.
    pub(super) fn pseudo_random_band(n: usize, m1: usize, m2: usize, seed: u64) -> Vec<(usize, usize, f64)> {
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).max(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let mut entries = Vec::new();
        for i in 0..n {
            let lo = i.saturating_sub(m1);
            let hi = (i + m2).min(n - 1);
            let mut row_sum = 0.0;
            for j in lo..=hi {
                if j != i {
                    let v = next();
                    row_sum += v.abs();
                    entries.push((i, j, v));
                }
            }
            entries.push((i, i, row_sum + 1.0 + next().abs()));
        }
        entries
    }
}
