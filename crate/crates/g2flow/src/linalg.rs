//! Small dense kernels over [`Scalar`]: 7×7 inversion, compound matrices,
//! symmetric solves. Pivoting decisions use primal values only, so dual
//! numbers follow the same elimination path as their values.

use crate::exterior::basis::{dim, Tables, N};
use crate::scalar::Scalar;
use std::sync::OnceLock;

pub type Mat7<T> = [[T; N]; N];

pub fn identity7<T: Scalar>() -> Mat7<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { T::one() } else { T::zero() }))
}

pub fn matmul7<T: Scalar>(a: &Mat7<T>, b: &Mat7<T>) -> Mat7<T> {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut s = T::zero();
            for k in 0..N {
                s += a[i][k] * b[k][j];
            }
            s
        })
    })
}

pub fn transpose7<T: Scalar>(a: &Mat7<T>) -> Mat7<T> {
    std::array::from_fn(|i| std::array::from_fn(|j| a[j][i]))
}

pub fn trace7<T: Scalar>(a: &Mat7<T>) -> T {
    (0..N).map(|i| a[i][i]).sum()
}

/// Determinant and inverse by Gauss–Jordan with partial pivoting.
/// Returns `None` for a numerically singular matrix.
pub fn det_inv7<T: Scalar>(m: &Mat7<T>) -> Option<(T, Mat7<T>)> {
    let mut a = *m;
    let mut inv = identity7::<T>();
    let mut det = T::one();
    for col in 0..N {
        let piv = (col..N)
            .max_by(|&i, &j| a[i][col].value().abs().total_cmp(&a[j][col].value().abs()))?;
        if a[piv][col].value().abs() < 1e-300 {
            return None;
        }
        if piv != col {
            a.swap(piv, col);
            inv.swap(piv, col);
            det = -det;
        }
        let p = a[col][col];
        det *= p;
        let pinv = T::one() / p;
        for j in 0..N {
            a[col][j] *= pinv;
            inv[col][j] *= pinv;
        }
        for i in 0..N {
            if i != col {
                let f = a[i][col];
                for j in 0..N {
                    let (ac, ic) = (a[col][j], inv[col][j]);
                    a[i][j] -= f * ac;
                    inv[i][j] -= f * ic;
                }
            }
        }
    }
    Some((det, inv))
}

/// Sorted index tuples of the lexicographic basis in degrees 1..=3.
fn index_tuples() -> &'static [Vec<[usize; 3]>; 4] {
    static IDX: OnceLock<[Vec<[usize; 3]>; 4]> = OnceLock::new();
    IDX.get_or_init(|| {
        let t = Tables::get();
        std::array::from_fn(|p| {
            t.masks(p)
                .iter()
                .map(|&mk| {
                    let mut out = [0; 3];
                    for (slot, i) in (0..N).filter(|i| mk & (1 << i) != 0).enumerate() {
                        out[slot] = i;
                    }
                    out
                })
                .collect()
        })
    })
}

/// p-th compound (matrix of p×p minors in the lexicographic basis), p ≤ 3.
pub fn compound_low<T: Scalar>(m: &Mat7<T>, p: usize) -> Vec<T> {
    assert!(p <= 3);
    let idx = index_tuples();
    match p {
        0 => vec![T::one()],
        1 => (0..N).flat_map(|i| (0..N).map(move |j| m[i][j])).collect(),
        2 => {
            let id = &idx[2];
            let mut out = Vec::with_capacity(441);
            for r in id {
                for c in id {
                    out.push(m[r[0]][c[0]] * m[r[1]][c[1]] - m[r[0]][c[1]] * m[r[1]][c[0]]);
                }
            }
            out
        }
        _ => {
            // expand along the first row using the cached 2×2 minors
            let c2 = compound_low(m, 2);
            let t = Tables::get();
            let rank2 = |a: usize, b: usize| t.rank((1u8 << a) | (1u8 << b));
            let id = &idx[3];
            let mut out = Vec::with_capacity(1225);
            for r in id {
                let rr = rank2(r[1], r[2]) * 21;
                for c in id {
                    let (c12, c02, c01) = (rank2(c[1], c[2]), rank2(c[0], c[2]), rank2(c[0], c[1]));
                    out.push(m[r[0]][c[0]] * c2[rr + c12] - m[r[0]][c[1]] * c2[rr + c02] + m[r[0]][c[2]] * c2[rr + c01]);
                }
            }
            out
        }
    }
}

/// C_{7−p}(m) = det(m) · S C_p(m⁻¹)ᵀ Sᵀ, with S the signed complement
/// permutation, from the low compound of m⁻¹.
fn complementary<T: Scalar>(lowinv: &[T], p: usize, det_m: T) -> Vec<T> {
    let comp = Tables::get().complement(p);
    let n = dim(p);
    let mut hi = vec![T::zero(); n * n];
    for r in 0..n {
        for c in 0..n {
            let (er, ec) = (comp[r], comp[c]);
            hi[er.dst as usize * n + ec.dst as usize] = lowinv[c * n + r].scale(er.sign * ec.sign) * det_m;
        }
    }
    hi
}

/// Compounds of `m` in every degree 0..=7.
pub fn all_compounds<T: Scalar>(m: &Mat7<T>, minv: &Mat7<T>, det_m: T) -> [Vec<T>; 8] {
    compound_pair(m, minv, det_m).0
}

/// Compounds of m and of m⁻¹ in every degree, sharing the low-degree
/// minors between the two families.
pub fn compound_pair<T: Scalar>(m: &Mat7<T>, minv: &Mat7<T>, det_m: T) -> ([Vec<T>; 8], [Vec<T>; 8]) {
    let mut fwd: [Vec<T>; 8] = Default::default();
    let mut inv: [Vec<T>; 8] = Default::default();
    let det_inv = T::one() / det_m;
    for p in 0..=3 {
        let low = compound_low(m, p);
        let lowinv = compound_low(minv, p);
        fwd[7 - p] = complementary(&lowinv, p, det_m);
        inv[7 - p] = complementary(&low, p, det_inv);
        fwd[p] = low;
        inv[p] = lowinv;
    }
    (fwd, inv)
}

/// aᵀ G b for a packed row-major Gram matrix.
pub fn inner_raw_gram(a: &[f64], b: &[f64], gram: &[f64]) -> f64 {
    let n = a.len();
    (0..n).map(|i| a[i] * (0..n).map(|j| gram[i * n + j] * b[j]).sum::<f64>()).sum()
}

/// y = A x for a row-major square matrix.
#[inline]
pub fn matvec<T: Scalar>(a: &[T], x: &[T], y: &mut [T]) {
    let n = x.len();
    for (i, yi) in y.iter_mut().enumerate() {
        let row = &a[i * n..(i + 1) * n];
        let mut s = T::zero();
        for (aij, xj) in row.iter().zip(x) {
            s += *aij * *xj;
        }
        *yi = s;
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut s = T::zero();
    for (x, y) in a.iter().zip(b) {
        s += *x * *y;
    }
    s
}

/// Solves a symmetric positive definite system (n ≤ a few dozen) by
/// Cholesky. `a` is row-major n×n; overwritten.
pub fn cholesky_solve<T: Scalar>(a: &mut [T], n: usize, rhs: &mut [T]) -> Option<()> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if d.value() <= 0.0 {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = rhs[i];
        for k in 0..i {
            s -= a[i * n + k] * rhs[k];
        }
        rhs[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for k in (i + 1)..n {
            s -= a[k * n + i] * rhs[k];
        }
        rhs[i] = s / a[i * n + i];
    }
    Some(())
}

/// True iff the primal part of symmetric `m` minus `shift`·I is positive
/// definite, i.e. λ_min(m) > shift.
pub fn exceeds_shift7<T: Scalar>(m: &Mat7<T>, shift: f64) -> bool {
    let a = nalgebra::SMatrix::<f64, N, N>::from_fn(|i, j| 0.5 * (m[i][j].value() + m[j][i].value()) - if i == j { shift } else { 0.0 });
    a.cholesky().is_some()
}

/// Eigenvalues of the primal part of a symmetric 7×7 matrix, ascending.
pub fn sym_eigenvalues7<T: Scalar>(m: &Mat7<T>) -> [f64; N] {
    let a = nalgebra::SMatrix::<f64, N, N>::from_fn(|i, j| 0.5 * (m[i][j].value() + m[j][i].value()));
    let mut e: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    std::array::from_fn(|i| e[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Mat7<f64> {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let base = ((i * 7 + j) as f64 * 0.37).sin() * 0.3;
                if i == j {
                    2.0 + base
                } else {
                    base
                }
            })
        })
    }

    #[test]
    fn inverse_round_trip() {
        let m = sample();
        let (_, inv) = det_inv7(&m).unwrap();
        let p = matmul7(&m, &inv);
        for i in 0..N {
            for j in 0..N {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p[i][j] - e).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn high_compounds_match_direct_minors() {
        // direct 4×4 minors against the complementary identity
        let m = sample();
        let (det, inv) = det_inv7(&m).unwrap();
        let c = all_compounds(&m, &inv, det);
        let t = Tables::get();
        let idx: Vec<Vec<usize>> = t
            .masks(4)
            .iter()
            .map(|&mk| (0..N).filter(|i| mk & (1 << i) != 0).collect())
            .collect();
        for (r, ri) in idx.iter().enumerate().step_by(5) {
            for (col, ci) in idx.iter().enumerate().step_by(3) {
                let sub = nalgebra::Matrix4::from_fn(|i, j| m[ri[i]][ci[j]]);
                assert!((sub.determinant() - c[4][r * 35 + col]).abs() < 1e-12);
            }
        }
        assert!((c[7][0] - det).abs() < 1e-12);
    }
}
