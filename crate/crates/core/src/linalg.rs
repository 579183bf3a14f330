//! Dense complex linear algebra helpers on top of nalgebra.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn r(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn adjoint(a: &CMat) -> CMat {
    a.adjoint()
}

pub fn fro(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

pub fn spectral_norm(a: &CMat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Spectral condition number; infinite for numerically singular input.
pub fn cond2(a: &CMat) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

pub fn det(a: &CMat) -> C64 {
    a.clone().lu().determinant()
}

pub fn inverse(a: &CMat) -> Option<CMat> {
    a.clone().try_inverse()
}

/// Eigenvalues from the complex Schur form.
pub fn eigenvalues(a: &CMat) -> Result<Vec<C64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![a[(0, 0)]]);
    }
    let budget = 100 * n.max(10);
    let scale = fro(a).max(f64::MIN_POSITIVE);
    let shift = c(0.173, 0.291) * scale;
    let attempts = [(r(0.0), f64::EPSILON, budget), (r(0.0), 4.0 * f64::EPSILON, 20 * budget), (shift, f64::EPSILON, 20 * budget)];
    let (schur, s) = attempts
        .iter()
        .find_map(|&(s, eps, iters)| {
            let shifted = a - CMat::identity(n, n) * s;
            shifted.try_schur(eps, iters).map(|x| (x, s))
        })
        .ok_or_else(|| Error::NotConverged("Schur iteration".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)] + s).collect())
}

/// Orthonormal basis of the numerical kernel, threshold relative to the
/// largest singular value. Columns of the result span the kernel.
pub fn null_space(a: &CMat, rel_tol: f64) -> CMat {
    let (m, n) = a.shape();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let mut sq = CMat::zeros(m.max(n), n);
    sq.view_mut((0, 0), (m, n)).copy_from(a);
    let svd = sq.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cut = rel_tol * smax;
    let cols: Vec<CVec> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= cut || smax == 0.0)
        .map(|(k, _)| v_t.row(k).adjoint())
        .collect();
    if cols.is_empty() {
        CMat::zeros(n, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Numerical rank with singular values at or below `rel_tol * sigma_max` counted as zero.
pub fn rank(a: &CMat, rel_tol: f64) -> usize {
    let s = singular_values(a);
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rel_tol * smax).count()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn herm_eig(a: &CMat) -> (Vec<f64>, CMat) {
    let h = (a + a.adjoint()) * r(0.5);
    let n = h.nrows();
    let eig = SymmetricEigen::new(h);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let vals = idx.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = CMat::from_columns(&idx.iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect::<Vec<_>>());
    (vals, vecs)
}

pub fn herm_eigenvalues(a: &CMat) -> Vec<f64> {
    herm_eig(a).0
}

/// Applies a real function to a Hermitian matrix through its eigen-decomposition.
pub fn herm_fn(a: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, u) = herm_eig(a);
    let d = CVec::from_iterator(vals.len(), vals.iter().map(|&x| r(f(x))));
    &u * CMat::from_diagonal(&d) * u.adjoint()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

/// Exchange (flip) matrix with ones on the antidiagonal.
pub fn exchange(n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| if i + j + 1 == n { r(1.0) } else { r(0.0) })
}

pub fn diag(v: &[C64]) -> CMat {
    CMat::from_diagonal(&CVec::from_column_slice(v))
}

/// Relative intertwining residual ||eta H - H^dagger eta|| / (||eta|| ||H||), Frobenius norms.
pub fn intertwining_residual(eta: &CMat, h: &CMat) -> f64 {
    let den = fro(eta) * fro(h);
    if den == 0.0 {
        return 0.0;
    }
    fro(&(eta * h - h.adjoint() * eta)) / den
}

pub fn hermiticity_residual(a: &CMat) -> f64 {
    let n = fro(a);
    if n == 0.0 {
        return 0.0;
    }
    fro(&(a - a.adjoint())) / n
}

/// Distance between two multisets of complex numbers: pairs are matched
/// globally shortest-first and the largest matched distance is returned.
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(a.len() * b.len());
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            pairs.push(((x - y).norm(), i, j));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut ua = vec![false; a.len()];
    let mut ub = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for (d, i, j) in pairs {
        if !ua[i] && !ub[j] {
            ua[i] = true;
            ub[j] = true;
            worst = worst.max(d);
        }
    }
    worst
}

/// Single-linkage clusters of points closer than `radius`, as index lists
/// in order of first appearance.
pub fn clusters(values: &[C64], radius: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() <= radius {
                let (a, b) = (root(&mut label, i), root(&mut label, j));
                if a != b {
                    label[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let g = root(&mut label, i);
        if slot[g] == usize::MAX {
            slot[g] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[g]].push(i);
    }
    groups
}

/// Replaces every cluster by copies of its mean. The mean of a cluster
/// split off a defective eigenvalue is far better conditioned than its
/// members.
pub fn merge_clusters(values: &[C64], radius: f64) -> Vec<C64> {
    let mut out = Vec::with_capacity(values.len());
    for g in clusters(values, radius) {
        let mean = g.iter().map(|&i| values[i]).sum::<C64>() / g.len() as f64;
        out.extend(std::iter::repeat_n(mean, g.len()));
    }
    out
}
