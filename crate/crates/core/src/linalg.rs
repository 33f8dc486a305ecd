//! Dense linear algebra on small matrices over any [`Real`].
//!
//! Matrices are row-major `Vec<Vec<T>>`. Sizes here never exceed a few dozen,
//! so partial-pivot LU and Householder QR are sufficient.

use crate::error::{Error, Result};
use crate::real::Real;

pub type Mat<T> = Vec<Vec<T>>;

pub fn zeros<T: Real>(r: usize, c: usize) -> Mat<T> {
    vec![vec![T::zero(); c]; r]
}

pub fn identity<T: Real>(n: usize) -> Mat<T> {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

pub fn matmul<T: Real>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    let (n, k, m) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    let mut out = zeros(n, m);
    for i in 0..n {
        for l in 0..k {
            let ail = a[i][l];
            for j in 0..m {
                out[i][j] += ail * b[l][j];
            }
        }
    }
    out
}

pub fn matvec<T: Real>(a: &Mat<T>, v: &[T]) -> Vec<T> {
    a.iter().map(|row| row.iter().zip(v).map(|(&x, &y)| x * y).sum()).collect()
}

pub fn transpose<T: Real>(a: &Mat<T>) -> Mat<T> {
    let m = a.first().map_or(0, Vec::len);
    (0..m).map(|j| a.iter().map(|row| row[j]).collect()).collect()
}

pub fn sub<T: Real>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(&p, &q)| p - q).collect()).collect()
}

pub fn add<T: Real>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(&p, &q)| p + q).collect()).collect()
}

pub fn scale<T: Real>(a: &Mat<T>, s: T) -> Mat<T> {
    a.iter().map(|row| row.iter().map(|&x| x * s).collect()).collect()
}

/// Max-abs entry norm.
pub fn max_abs<T: Real>(a: &Mat<T>) -> f64 {
    a.iter().flatten().fold(0.0, |m, x| m.max(x.to_f64().abs()))
}

pub fn to_f64<T: Real>(a: &Mat<T>) -> Mat<f64> {
    a.iter().map(|row| row.iter().map(|x| x.to_f64()).collect()).collect()
}

pub fn from_f64<T: Real>(a: &Mat<f64>) -> Mat<T> {
    a.iter().map(|row| row.iter().map(|&x| T::from_f64(x)).collect()).collect()
}

/// Partial-pivot LU factorization `P A = L U`, packed in place.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    lu: Mat<T>,
    perm: Vec<usize>,
    sign: i32,
}

impl<T: Real> Lu<T> {
    /// Fails when a pivot is below `tol` times the largest entry of `a`.
    pub fn new(a: &Mat<T>, tol: f64) -> Result<Self> {
        let n = a.len();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1;
        let scale = max_abs(a).max(f64::MIN_POSITIVE);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| lu[i][k].abs().partial_cmp(&lu[j][k].abs()).unwrap())
                .unwrap();
            if !(lu[p][k].abs().to_f64() > tol * scale) {
                return Err(Error::DegenerateSystem);
            }
            if p != k {
                lu.swap(p, k);
                perm.swap(p, k);
                sign = -sign;
            }
            let piv = lu[k][k];
            for i in k + 1..n {
                let f = lu[i][k] / piv;
                lu[i][k] = f;
                for j in k + 1..n {
                    let t = lu[k][j];
                    lu[i][j] -= f * t;
                }
            }
        }
        Ok(Lu { lu, perm, sign })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.len();
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let t = self.lu[i][j] * x[j];
                x[i] -= t;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let t = self.lu[i][j] * x[j];
                x[i] -= t;
            }
            x[i] /= self.lu[i][i];
        }
        x
    }

    pub fn det(&self) -> T {
        let mut d = if self.sign > 0 { T::one() } else { -T::one() };
        for (i, row) in self.lu.iter().enumerate() {
            d *= row[i];
        }
        d
    }
}

pub fn solve<T: Real>(a: &Mat<T>, b: &[T]) -> Result<Vec<T>> {
    Ok(Lu::new(a, 1e-300)?.solve(b))
}

pub fn inverse<T: Real>(a: &Mat<T>) -> Result<Mat<T>> {
    let lu = Lu::new(a, 1e-300)?;
    let n = a.len();
    let cols: Vec<Vec<T>> = (0..n)
        .map(|j| {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            lu.solve(&e)
        })
        .collect();
    Ok(transpose(&cols))
}

pub fn det<T: Real>(a: &Mat<T>) -> T {
    match Lu::new(a, 0.0) {
        Ok(lu) => lu.det(),
        Err(_) => T::zero(),
    }
}

/// Least-squares solution of the overdetermined system `a x ≈ b` by
/// Householder QR. Returns the solution and the residual 2-norm.
pub fn lstsq<T: Real>(a: &Mat<T>, b: &[T]) -> Result<(Vec<T>, T)> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    if m < n {
        return Err(Error::FitFailure(format!("{m} equations for {n} unknowns")));
    }
    let mut r = a.clone();
    let mut y = b.to_vec();
    for k in 0..n {
        let norm = (k..m).map(|i| r[i][k] * r[i][k]).sum::<T>().sqrt();
        if norm == T::zero() {
            return Err(Error::FitFailure("rank-deficient design matrix".into()));
        }
        let alpha = if r[k][k] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (k..m).map(|i| r[i][k]).collect();
        v[0] -= alpha;
        let vnorm2: T = v.iter().map(|&x| x * x).sum();
        if vnorm2 == T::zero() {
            continue;
        }
        for j in k..n {
            let dot: T = (k..m).map(|i| v[i - k] * r[i][j]).sum();
            let f = c2::<T>() * dot / vnorm2;
            for i in k..m {
                let t = f * v[i - k];
                r[i][j] -= t;
            }
        }
        let dot: T = (k..m).map(|i| v[i - k] * y[i]).sum();
        let f = c2::<T>() * dot / vnorm2;
        for i in k..m {
            let t = f * v[i - k];
            y[i] -= t;
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in i + 1..n {
            s -= r[i][j] * x[j];
        }
        if r[i][i] == T::zero() {
            return Err(Error::FitFailure("rank-deficient design matrix".into()));
        }
        x[i] = s / r[i][i];
    }
    let res = (n..m).map(|i| y[i] * y[i]).sum::<T>().sqrt();
    Ok((x, res))
}

fn c2<T: Real>() -> T {
    T::from_f64(2.0)
}

/// Vector spanning the null space of a `d x (d+1)` matrix of full rank,
/// via signed maximal minors (generalized cross product).
pub fn cross_null<T: Real>(rows: &Mat<T>) -> Vec<T> {
    let n = rows.len() + 1;
    (0..n)
        .map(|j| {
            let minor: Mat<T> = rows
                .iter()
                .map(|r| r.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, &v)| v).collect())
                .collect();
            let d = if minor.is_empty() { T::one() } else { det(&minor) };
            if j % 2 == 0 {
                d
            } else {
                -d
            }
        })
        .collect()
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Orthonormal basis of the orthogonal complement of span(`vs`) in ℝⁿ.
pub fn orth_complement<T: Real>(vs: &[Vec<T>], n: usize) -> Vec<Vec<T>> {
    let mut basis: Vec<Vec<T>> = Vec::new();
    let push = |basis: &mut Vec<Vec<T>>, mut v: Vec<T>| -> bool {
        for _ in 0..2 {
            for b in basis.iter() {
                let p = dot(&v, b);
                for (x, &y) in v.iter_mut().zip(b) {
                    *x -= p * y;
                }
            }
        }
        let nv = norm(&v);
        if nv.to_f64() < 1e-10 {
            return false;
        }
        basis.push(v.into_iter().map(|x| x / nv).collect());
        true
    };
    for v in vs {
        push(&mut basis, v.clone());
    }
    let k = basis.len();
    for j in 0..n {
        if basis.len() == n {
            break;
        }
        let mut e = vec![T::zero(); n];
        e[j] = T::one();
        push(&mut basis, e);
    }
    basis.split_off(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::Dd;

    #[test]
    fn lu_solves_and_inverts() {
        let a: Mat<f64> = vec![vec![2.0, 1.0, 0.5], vec![1.0, 3.0, -1.0], vec![0.0, 1.0, 4.0]];
        let inv = inverse(&a).unwrap();
        let p = matmul(&a, &inv);
        assert!(max_abs(&sub(&p, &identity(3))) < 1e-14);
        let x = solve(&a, &[1.0, 2.0, 3.0]).unwrap();
        let r = matvec(&a, &x);
        assert!((r[2] - 3.0).abs() < 1e-14);
        // cofactor expansion along the first row: 2·13 − 1·4 + 0.5·1
        assert!((det(&a) - 22.5).abs() < 1e-12);
    }

    #[test]
    fn lstsq_recovers_polynomial_in_dd() {
        let xs: Vec<Dd> = (0..10).map(|k| Dd::from_f64(0.1 * k as f64)).collect();
        let coeffs = [1.0, -2.0, 0.5, 3.0];
        let a: Mat<Dd> = xs.iter().map(|&x| (0..4).map(|k| x.powi(k)).collect()).collect();
        let b: Vec<Dd> =
            xs.iter().map(|&x| coeffs.iter().enumerate().map(|(k, &c)| Dd::from_f64(c) * x.powi(k as i32)).sum()).collect();
        let (sol, res) = lstsq(&a, &b).unwrap();
        for (s, c) in sol.iter().zip(coeffs) {
            assert!((s.to_f64() - c).abs() < 1e-25);
        }
        assert!(res.to_f64() < 1e-25);
    }

    #[test]
    fn cross_null_is_orthogonal_to_rows() {
        let rows: Mat<f64> = vec![vec![1.0, 2.0, 3.0], vec![-1.0, 0.5, 2.0]];
        let v = cross_null(&rows);
        for r in &rows {
            assert!(dot(r, &v).abs() < 1e-14);
        }
        let w = orth_complement(&[vec![1.0, 1.0, 0.0]], 3);
        assert_eq!(w.len(), 2);
        assert!(dot(&w[0], &[1.0, 1.0, 0.0]).abs() < 1e-15);
    }
}
