//! Randomized equivalence of the band LU kernel against dense Gaussian
//! elimination, plus a smoke-level check that factorization cost stays
//! linear in n at fixed bandwidth.

use kerr_wigner::band::{
    band_from_entries, band_lu_decompose, band_matvec, band_solve, CompressedBandMatrix,
};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct SystemSpec {
    n: usize,
    m1: usize,
    m2: usize,
    entries: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
}

/// Random band system with |diag| = sum of |off-diagonals| + margin, so it is
/// strictly diagonally dominant and the dense oracle cannot blow up either.
fn diagonally_dominant_system() -> impl Strategy<Value = SystemSpec> {
    (4usize..=200, 0usize..=8, 0usize..=8)
        .prop_flat_map(|(n, m1, m2)| {
            let width = m1 + m2 + 1;
            (
                Just((n, m1, m2)),
                proptest::collection::vec(-1.0f64..1.0, n * width),
                proptest::collection::vec(0.1f64..2.0, n),
                proptest::collection::vec(-10.0f64..10.0, n),
            )
        })
        .prop_map(|((n, m1, m2), raw, margin, rhs)| {
            let width = m1 + m2 + 1;
            let mut entries = Vec::new();
            for i in 0..n {
                let mut off_sum = 0.0;
                for (w, &v) in raw[i * width..(i + 1) * width].iter().enumerate() {
                    let j = i as i64 + w as i64 - m1 as i64;
                    if j < 0 || j >= n as i64 || j == i as i64 {
                        continue;
                    }
                    entries.push((i, j as usize, v));
                    off_sum += v.abs();
                }
                entries.push((i, i, off_sum + margin[i]));
            }
            SystemSpec { n, m1, m2, entries, rhs }
        })
}

fn to_dense(m: &CompressedBandMatrix) -> Vec<Vec<f64>> {
    (0..m.n).map(|i| (0..m.n).map(|j| m.get(i, j)).collect()).collect()
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

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |s, &x| s.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn band_solve_matches_dense_elimination(sys in diagonally_dominant_system()) {
        let m = band_from_entries(sys.n, sys.m1, sys.m2, &sys.entries).unwrap();
        let dense = to_dense(&m);
        let factors = band_lu_decompose(m).unwrap();
        let x_band = band_solve(&factors, &sys.rhs).unwrap();
        let x_dense = dense_solve(dense, sys.rhs.clone());
        let tol = 1e-10 * sup(&x_dense);
        for (xb, xd) in x_band.iter().zip(&x_dense) {
            prop_assert!((xb - xd).abs() <= tol, "{xb} vs {xd}, tol {tol:e}");
        }
    }

    #[test]
    fn matvec_recovers_the_right_hand_side(sys in diagonally_dominant_system()) {
        let m = band_from_entries(sys.n, sys.m1, sys.m2, &sys.entries).unwrap();
        let a = m.clone();
        let factors = band_lu_decompose(m).unwrap();
        let x = band_solve(&factors, &sys.rhs).unwrap();
        let back = band_matvec(&a, &x).unwrap();
        let tol = 1e-9 * sup(&sys.rhs);
        for (got, want) in back.iter().zip(&sys.rhs) {
            prop_assert!((got - want).abs() <= tol, "{got} vs {want}, tol {tol:e}");
        }
    }
}

/// Deterministic band matrix big enough to time: fixed bandwidth 40/40,
/// smooth off-diagonal decay, dominant diagonal.
fn timing_matrix(n: usize) -> CompressedBandMatrix {
    let mut entries = Vec::with_capacity(n * 81);
    for i in 0..n {
        for d in -40i64..=40 {
            let j = i as i64 + d;
            if j < 0 || j >= n as i64 {
                continue;
            }
            let v = if d == 0 { 100.0 } else { 1.0 / (1.0 + d.abs() as f64) };
            entries.push((i, j as usize, v));
        }
    }
    band_from_entries(n, 40, 40, &entries).unwrap()
}

fn median_factor_seconds(proto: &CompressedBandMatrix, reps: usize) -> f64 {
    let mut times: Vec<f64> = (0..reps)
        .map(|_| {
            let m = proto.clone();
            let t = std::time::Instant::now();
            let f = band_lu_decompose(m).unwrap();
            let dt = t.elapsed().as_secs_f64();
            std::hint::black_box(&f);
            dt
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times[reps / 2]
}

#[test]
fn factorization_cost_is_linear_in_n_at_fixed_bandwidth() {
    let small = timing_matrix(4000);
    let large = timing_matrix(8000);
    // one throwaway round to warm caches and the allocator
    median_factor_seconds(&small, 1);
    median_factor_seconds(&large, 1);
    let t_small = median_factor_seconds(&small, 5);
    let t_large = median_factor_seconds(&large, 5);
    let ratio = t_large / t_small;
    assert!(ratio <= 2.5, "doubling n scaled time by {ratio:.2} ({t_small:.4}s -> {t_large:.4}s)");
}
