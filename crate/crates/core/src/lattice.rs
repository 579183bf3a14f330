//! The tridiagonal matrix family with perturbed corners: construction,
//! continuants, characteristic polynomials, eigenvectors from minors,
//! inverses, similarity transforms, the chiral lift and closed-form spectra.

use crate::error::{Error, Result};
use crate::linalg::{self, c, r, CMat, CVec, C64};
use crate::poly::{cheb_as_poly, cheb_u_half, ChebKind, ComplexPoly};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Relative tolerance of the structural predicates that select closed forms.
pub const STRUCT_TOL: f64 = 1e-12;

/// Relative threshold on |theta_n| for accepting an eigenvalue.
pub const EIGEN_TOL: f64 = 1e-8;

fn near(a: C64, b: C64, scale: f64) -> bool {
    (a - b).norm() <= STRUCT_TOL * scale.max(f64::MIN_POSITIVE)
}

/// H_n(alpha, beta, z). Indices are zero-based: `alpha[j]` sits at
/// (j + 1, j), `beta[j]` at (j, j + 1); `alpha[n-1]` is the (0, n-1)
/// corner and `beta[n-1]` the (n-1, 0) corner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecFields", into = "SpecFields")]
pub struct LatticeSpec {
    alpha: Vec<C64>,
    beta: Vec<C64>,
    z: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFields {
    n: usize,
    alpha: Vec<C64>,
    beta: Vec<C64>,
    z: Vec<C64>,
}

impl TryFrom<SpecFields> for LatticeSpec {
    type Error = Error;
    fn try_from(f: SpecFields) -> Result<Self> {
        LatticeSpec::new(f.n, f.alpha, f.beta, f.z)
    }
}

impl From<LatticeSpec> for SpecFields {
    fn from(s: LatticeSpec) -> Self {
        SpecFields { n: s.n(), alpha: s.alpha, beta: s.beta, z: s.z }
    }
}

impl LatticeSpec {
    pub fn new(n: usize, alpha: Vec<C64>, beta: Vec<C64>, z: Vec<C64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionMismatch(format!("n = {n}, need n >= 2")));
        }
        for (name, v) in [("alpha", &alpha), ("beta", &beta), ("z", &z)] {
            if v.len() != n {
                return Err(Error::DimensionMismatch(format!("{name} has length {}, expected {n}", v.len())));
            }
        }
        Ok(LatticeSpec { alpha, beta, z })
    }

    /// Open chain from the n - 1 interior hoppings.
    pub fn open(alpha: &[C64], beta: &[C64], z: &[C64]) -> Result<Self> {
        let n = z.len();
        if alpha.len() + 1 != n || beta.len() + 1 != n {
            return Err(Error::DimensionMismatch(format!(
                "open chain of {n} sites needs {} hoppings, got {} and {}",
                n.saturating_sub(1),
                alpha.len(),
                beta.len()
            )));
        }
        let mut a = alpha.to_vec();
        let mut b = beta.to_vec();
        a.push(r(0.0));
        b.push(r(0.0));
        Self::new(n, a, b, z.to_vec())
    }

    /// Open chain with every hopping equal to t and zero diagonal.
    pub fn uniform(n: usize, t: C64) -> Result<Self> {
        let h = vec![t; n.saturating_sub(1)];
        Self::open(&h, &h, &vec![r(0.0); n])
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn alpha(&self) -> &[C64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[C64] {
        &self.beta
    }

    pub fn z(&self) -> &[C64] {
        &self.z
    }

    pub fn is_open(&self) -> bool {
        let n = self.n();
        self.alpha[n - 1] == r(0.0) && self.beta[n - 1] == r(0.0)
    }

    /// First zero-based bond index with a vanishing interior hopping.
    pub fn reducible_at(&self) -> Option<usize> {
        (0..self.n() - 1).find(|&j| self.alpha[j] == r(0.0) || self.beta[j] == r(0.0))
    }

    pub fn is_irreducible(&self) -> bool {
        self.reducible_at().is_none()
    }

    fn require_open(&self) -> Result<()> {
        if self.is_open() {
            Ok(())
        } else {
            Err(Error::BoundaryViolation)
        }
    }

    fn require_irreducible(&self) -> Result<()> {
        match self.reducible_at() {
            Some(j) => Err(Error::NotIrreducible(j + 1)),
            None => Ok(()),
        }
    }

    /// Largest entry magnitude.
    pub fn scale(&self) -> f64 {
        self.alpha.iter().chain(&self.beta).chain(&self.z).map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn matrix(&self) -> CMat {
        let n = self.n();
        let mut h = CMat::zeros(n, n);
        for i in 0..n {
            h[(i, i)] = self.z[i];
        }
        for j in 0..n - 1 {
            h[(j + 1, j)] += self.alpha[j];
            h[(j, j + 1)] += self.beta[j];
        }
        h[(0, n - 1)] += self.alpha[n - 1];
        h[(n - 1, 0)] += self.beta[n - 1];
        h
    }

    pub fn conj(&self) -> Self {
        let cj = |v: &[C64]| v.iter().map(|x| x.conj()).collect();
        LatticeSpec { alpha: cj(&self.alpha), beta: cj(&self.beta), z: cj(&self.z) }
    }
}

pub fn build_matrix(spec: &LatticeSpec) -> CMat {
    spec.matrix()
}

fn default_outer() -> Vec<f64> {
    Vec::new()
}

/// Named models of the family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelPreset {
    /// Uniform hopping t, defects z_m at site m and z_mbar at n - m + 1.
    UniformChain { n: usize, m: usize, t: f64, z_m: C64, z_mbar: C64 },
    /// n = 2m; alpha_j = t_j, beta_j = conj(t_{n-j}); z_m = delta + i gamma,
    /// z_{m+1} its conjugate; `outer` gives the real z_1..z_{m-1}, mirrored.
    NearestNeighbourDefect {
        n: usize,
        t: Vec<C64>,
        delta: f64,
        gamma: f64,
        #[serde(default = "default_outer")]
        outer: Vec<f64>,
    },
    /// Alternating hoppings t1, t2 with defects on the end sites and corners
    /// (alpha_n, beta_n) = (t_l, t_r).
    SshEdgeDefect { n: usize, t1: C64, t2: C64, t_l: C64, t_r: C64, z1: C64, zn: C64 },
    /// [[i omega, t], [t, -i omega]].
    Qubit { omega: f64, t: f64 },
    /// Unit hopping ring with corners (alpha_n, beta_n) and zero diagonal.
    Ring { n: usize, alpha_n: C64, beta_n: C64 },
}

impl ModelPreset {
    pub fn expand(&self) -> Result<LatticeSpec> {
        match self {
            ModelPreset::UniformChain { n, m, t, z_m, z_mbar } => {
                let (n, m) = (*n, *m);
                if n < 2 || m < 1 || m > n / 2 {
                    return Err(Error::ParamViolation(format!("uniform chain needs 1 <= m <= n/2, got n={n}, m={m}")));
                }
                if *t == 0.0 || !t.is_finite() {
                    return Err(Error::ParamViolation("uniform chain needs t != 0".into()));
                }
                let mut z = vec![r(0.0); n];
                z[m - 1] = *z_m;
                z[n - m] = *z_mbar;
                let h = vec![r(*t); n - 1];
                LatticeSpec::open(&h, &h, &z)
            }
            ModelPreset::NearestNeighbourDefect { n, t, delta, gamma, outer } => {
                let n = *n;
                if n < 2 || n % 2 != 0 {
                    return Err(Error::ParamViolation(format!("nearest-neighbour model needs even n >= 2, got {n}")));
                }
                let m = n / 2;
                if t.len() != n - 1 {
                    return Err(Error::ParamViolation(format!("need {} hoppings, got {}", n - 1, t.len())));
                }
                if !outer.is_empty() && outer.len() != m - 1 {
                    return Err(Error::ParamViolation(format!("need {} outer potentials, got {}", m - 1, outer.len())));
                }
                for j in 0..n - 1 {
                    let p = t[j] * t[n - 2 - j].conj();
                    if !(p.re > 0.0) || p.im.abs() > STRUCT_TOL * p.norm() {
                        return Err(Error::ParamViolation(format!("t_{} conj(t_{}) must be positive", j + 1, n - 1 - j)));
                    }
                }
                let mut z = vec![r(0.0); n];
                for (j, &v) in outer.iter().enumerate() {
                    z[j] = r(v);
                    z[n - 1 - j] = r(v);
                }
                z[m - 1] = c(*delta, *gamma);
                z[m] = c(*delta, -*gamma);
                let beta: Vec<C64> = (0..n - 1).map(|j| t[n - 2 - j].conj()).collect();
                LatticeSpec::open(t, &beta, &z)
            }
            ModelPreset::SshEdgeDefect { n, t1, t2, t_l, t_r, z1, zn } => {
                let n = *n;
                if n < 3 {
                    return Err(Error::ParamViolation(format!("SSH chain needs n >= 3, got {n}")));
                }
                let h: Vec<C64> = (0..n - 1).map(|j| if j % 2 == 0 { *t1 } else { *t2 }).collect();
                let mut z = vec![r(0.0); n];
                z[0] = *z1;
                z[n - 1] = *zn;
                let mut alpha = h.clone();
                let mut beta = h;
                alpha.push(*t_l);
                beta.push(*t_r);
                LatticeSpec::new(n, alpha, beta, z)
            }
            ModelPreset::Qubit { omega, t } => {
                LatticeSpec::open(&[r(*t)], &[r(*t)], &[c(0.0, *omega), c(0.0, -*omega)])
            }
            ModelPreset::Ring { n, alpha_n, beta_n } => {
                let n = *n;
                if n < 3 {
                    return Err(Error::ParamViolation(format!("ring needs n >= 3, got {n}")));
                }
                let mut alpha = vec![r(1.0); n - 1];
                let mut beta = alpha.clone();
                alpha.push(*alpha_n);
                beta.push(*beta_n);
                LatticeSpec::new(n, alpha, beta, vec![r(0.0); n])
            }
        }
    }
}

/// Leading and trailing principal-minor continuants at one point.
/// `theta[k]` holds theta_{k-1} for k in 0..=n+1 (theta_{-1} = 0,
/// theta_0 = 1); `phi[k]` holds phi_{k+1} for k in 0..=n+1
/// (phi_{n+1} = 1, phi_{n+2} = 0).
#[derive(Debug, Clone, PartialEq)]
pub struct Continuants {
    pub theta: Vec<C64>,
    pub phi: Vec<C64>,
}

impl Continuants {
    /// theta_i for i in -1..=n.
    pub fn theta(&self, i: isize) -> C64 {
        self.theta[(i + 1) as usize]
    }

    /// phi_i for i in 1..=n+2.
    pub fn phi(&self, i: usize) -> C64 {
        self.phi[i - 1]
    }

    /// det(lambda I - H).
    pub fn det(&self) -> C64 {
        self.theta[self.theta.len() - 1]
    }
}

pub fn continuants(spec: &LatticeSpec, lambda: C64) -> Result<Continuants> {
    spec.require_open()?;
    let n = spec.n();
    let (a, b, z) = (spec.alpha(), spec.beta(), spec.z());
    let mut theta = vec![r(0.0); n + 2];
    theta[1] = r(1.0);
    for i in 1..=n {
        let hop = if i >= 2 { a[i - 2] * b[i - 2] * theta[i - 1] } else { r(0.0) };
        theta[i + 1] = (lambda - z[i - 1]) * theta[i] - hop;
    }
    let mut phi = vec![r(0.0); n + 2];
    phi[n] = r(1.0);
    for i in (1..=n).rev() {
        let hop = if i < n { a[i - 1] * b[i - 1] * phi[i + 1] } else { r(0.0) };
        phi[i - 1] = (lambda - z[i - 1]) * phi[i] - hop;
    }
    Ok(Continuants { theta, phi })
}

/// det(lambda I - H) of an open chain as a polynomial, from the diagonal
/// and the bond products alpha_j beta_j.
fn open_det_poly(z: &[C64], bonds: &[C64]) -> ComplexPoly {
    let mut p0 = ComplexPoly::constant(r(1.0));
    if z.is_empty() {
        return p0;
    }
    let x = ComplexPoly::x();
    let mut p1 = &x - &ComplexPoly::constant(z[0]);
    for i in 1..z.len() {
        let p2 = &(&(&x - &ComplexPoly::constant(z[i])) * &p1) - &p0.scale(bonds[i - 1]);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// det(lambda I - H) by the continuant recurrence plus corner terms.
pub fn char_poly_general(spec: &LatticeSpec) -> ComplexPoly {
    let n = spec.n();
    let (a, b, z) = (spec.alpha(), spec.beta(), spec.z());
    let bonds: Vec<C64> = (0..n - 1).map(|j| a[j] * b[j]).collect();
    if n == 2 {
        let x = ComplexPoly::x();
        let d = &(&x - &ComplexPoly::constant(z[0])) * &(&x - &ComplexPoly::constant(z[1]));
        return &d - &ComplexPoly::constant((b[0] + a[1]) * (a[0] + b[1]));
    }
    let full = open_det_poly(z, &bonds);
    let mid = open_det_poly(&z[1..n - 1], &bonds[1..n - 2]);
    let prod_a: C64 = a.iter().product();
    let prod_b: C64 = b.iter().product();
    &(&full - &mid.scale(a[n - 1] * b[n - 1])) - &ComplexPoly::constant(prod_a + prod_b)
}

/// det(lambda I - H) of a dense matrix by interpolation at n + 1 points
/// of a circle enclosing the spectrum.
pub fn char_poly_interpolated(h: &CMat) -> ComplexPoly {
    let n = h.nrows();
    let radius = (0..n)
        .map(|i| h.row(i).iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1.0);
    let npts = n + 1;
    let nodes: Vec<C64> = (0..npts).map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / npts as f64)).collect();
    let values: Vec<C64> = nodes
        .iter()
        .map(|&w| {
            let mut m = -h.clone();
            for i in 0..n {
                m[(i, i)] += w * radius;
            }
            linalg::det(&m)
        })
        .collect();
    let mut coeffs = Vec::with_capacity(npts);
    for j in 0..npts {
        let s: C64 = values.iter().zip(&nodes).map(|(&v, &w)| v * w.powu(j as u32).conj()).sum();
        coeffs.push(s / (npts as f64 * radius.powi(j as i32)));
    }
    coeffs[n] = r(1.0);
    ComplexPoly::new(coeffs)
}

/// Position of the defect pair when z vanishes away from sites m and
/// n - m + 1 (one-based, m <= n/2). `Some(None)` means z is identically zero.
fn defect_site(z: &[C64], scale: f64) -> Option<Option<usize>> {
    let n = z.len();
    let nonzero: Vec<usize> = (0..n).filter(|&i| !near(z[i], r(0.0), scale)).collect();
    let m = match nonzero.first() {
        None => return Some(None),
        Some(&i) => (i + 1).min(n - i),
    };
    if 2 * m > n {
        return None;
    }
    nonzero.iter().all(|&i| i + 1 == m || i == n - m).then_some(Some(m))
}

/// U_k(x / 2) evaluated at lambda / t: t^k times the result is returned.
fn scaled_u(k: i64, t: C64) -> ComplexPoly {
    if k < -1 {
        return ComplexPoly::constant(-t.powi(k as i32));
    }
    cheb_u_half(k).rescale(t.inv()).scale(t.powi(k as i32))
}

/// Closed-form det(lambda I - H) for the uniform chain with one defect
/// pair, the uniform ring and the SSH chain with positive hoppings.
fn char_poly_closed(spec: &LatticeSpec) -> Option<ComplexPoly> {
    let n = spec.n();
    let (a, b, z) = (spec.alpha(), spec.beta(), spec.z());
    let scale = spec.scale();
    let bond = a[0] * b[0];
    let uniform_bonds = (0..n - 1).all(|j| near(a[j] * b[j], bond, scale * scale));
    if spec.is_open() && uniform_bonds && bond != r(0.0) {
        if let Some(site) = defect_site(z, scale) {
            let t = bond.sqrt();
            let ni = n as i64;
            let full = scaled_u(ni, t);
            let Some(m) = site else { return Some(full) };
            let (zm, zb) = (z[m - 1], z[n - m]);
            let mi = m as i64;
            let u_m1 = scaled_u(mi - 1, t);
            let single = &scaled_u(ni - mi, t) * &u_m1;
            let double = &(&scaled_u(ni - 2 * mi, t) * &u_m1) * &u_m1;
            return Some(&(&full - &single.scale(zm + zb)) + &double.scale(zm * zb));
        }
    }
    if !spec.is_open() && n >= 3 {
        let t = a[0];
        let ring = (0..n - 1).all(|j| near(a[j], t, scale) && near(b[j], t, scale))
            && z.iter().all(|&v| near(v, r(0.0), scale))
            && t != r(0.0);
        if ring {
            let ni = n as i64;
            let (an, bn) = (a[n - 1], b[n - 1]);
            let p = &scaled_u(ni, t) - &scaled_u(ni - 2, t).scale(an * bn);
            return Some(&p - &ComplexPoly::constant(t.powi(ni as i32 - 1) * (an + bn)));
        }
    }
    ssh_char_poly(spec)
}

/// SSH table form, valid for real positive t1, t2.
fn ssh_char_poly(spec: &LatticeSpec) -> Option<ComplexPoly> {
    let n = spec.n();
    if n < 3 {
        return None;
    }
    let (a, b, z) = (spec.alpha(), spec.beta(), spec.z());
    let scale = spec.scale();
    let (t1, t2) = (a[0], a[1]);
    let real_pos = |t: C64| t.im == 0.0 && t.re > 0.0;
    if !real_pos(t1) || !real_pos(t2) {
        return None;
    }
    let pattern = (0..n - 1).all(|j| {
        let t = if j % 2 == 0 { t1 } else { t2 };
        a[j] == t && b[j] == t
    });
    let interior_zero = z[1..n - 1].iter().all(|&v| near(v, r(0.0), scale));
    if !pattern || !interior_zero || (n % 2 == 0 && n < 4) {
        return None;
    }
    let (z1, zn, tl, tr) = (z[0], z[n - 1], a[n - 1], b[n - 1]);
    let x = ComplexPoly::x();
    let q = (&(&x * &x) - &ComplexPoly::constant(t1 * t1 + t2 * t2)).scale((t1 * t2 * 2.0).inv());
    let u = |k: i64| -> ComplexPoly {
        match k {
            -1 => ComplexPoly::zero(),
            k if k < -1 => ComplexPoly::constant(r(-1.0)),
            k => cheb_as_poly(ChebKind::Second, k as usize).compose(&q),
        }
    };
    let k = (n / 2) as i64;
    let zz = z1 * zn - tl * tr;
    let body = if n % 2 == 0 {
        let lin = &ComplexPoly::constant(t2 * t2 + zz) - &x.scale(z1 + zn);
        let s = &(&u(k) + &u(k - 2).scale(zz / (t2 * t2))) + &(&lin * &u(k - 1)).scale((t1 * t2).inv());
        &s - &ComplexPoly::constant((tl + tr) / t2)
    } else {
        let lead = &(&x - &ComplexPoly::constant(z1 + zn)) * &u(k);
        let lin = &x.scale(zz) - &ComplexPoly::constant(z1 * t1 * t1 + zn * t2 * t2);
        let s = &lead + &(&lin * &u(k - 1)).scale((t1 * t2).inv());
        &s - &ComplexPoly::constant(tl + tr)
    };
    Some(body.scale((t1 * t2).powi(k as i32)))
}

/// Monic det(lambda I - H), closed form where one applies.
pub fn char_poly(spec: &LatticeSpec) -> ComplexPoly {
    char_poly_closed(spec).unwrap_or_else(|| char_poly_general(spec)).monic()
}

/// Eigenvector psi_i = theta_{i-1}(lambda) / prod_{j<i} beta_j, psi_1 = 1.
pub fn eigvec_from_minors(spec: &LatticeSpec, lambda: C64) -> Result<CVec> {
    spec.require_open()?;
    spec.require_irreducible()?;
    let cont = continuants(spec, lambda)?;
    let n = spec.n();
    let biggest = cont.theta.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let rel = cont.det().norm() / biggest;
    if rel > EIGEN_TOL {
        return Err(Error::NotEigenvalue(rel));
    }
    let mut psi = CVec::zeros(n);
    let mut prod = r(1.0);
    for i in 0..n {
        if i > 0 {
            prod *= spec.beta()[i - 1];
        }
        psi[i] = cont.theta[i + 1] / prod;
    }
    Ok(psi)
}

/// H^{-1} from continuants at zero.
pub fn tridiag_inverse(spec: &LatticeSpec) -> Result<CMat> {
    spec.require_open()?;
    let n = spec.n();
    let cont = continuants(spec, r(0.0))?;
    let hadamard: f64 = (0..n)
        .map(|i| {
            let left = if i > 0 { spec.alpha()[i - 1].norm() } else { 0.0 };
            let right = if i + 1 < n { spec.beta()[i].norm() } else { 0.0 };
            spec.z()[i].norm() + left + right
        })
        .product();
    let det = cont.det();
    if det.norm() <= 1e-14 * hadamard {
        return Err(Error::Singular);
    }
    let scale = -det.inv();
    let (a, b) = (spec.alpha(), spec.beta());
    let mut inv = CMat::zeros(n, n);
    for i in 1..=n {
        for j in 1..=n {
            let v = if i < j {
                let hop: C64 = b[i - 1..j - 1].iter().product();
                cont.theta(i as isize - 1) * cont.phi(j + 1) * hop
            } else if i == j {
                cont.theta(i as isize - 1) * cont.phi(i + 1)
            } else {
                let hop: C64 = a[j - 1..i - 1].iter().product();
                cont.theta(j as isize - 1) * cont.phi(i + 1) * hop
            };
            inv[(i - 1, j - 1)] = scale * v;
        }
    }
    Ok(inv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimilarityKind {
    StaggerSign,
    Parity,
    Shift,
    DiagonalSymmetrize,
}

/// Returns (S, spec') with S H(spec) S^{-1} = H(spec').
pub fn similarity(spec: &LatticeSpec, kind: SimilarityKind) -> Result<(CMat, LatticeSpec)> {
    let n = spec.n();
    let (a, b, z) = (spec.alpha(), spec.beta(), spec.z());
    match kind {
        SimilarityKind::StaggerSign => {
            let s = linalg::diag(&(0..n).map(|i| r(if i % 2 == 0 { -1.0 } else { 1.0 })).collect::<Vec<_>>());
            let corner = if n % 2 == 0 { -1.0 } else { 1.0 };
            let flip = |v: &[C64]| -> Vec<C64> {
                (0..n).map(|j| if j + 1 < n { -v[j] } else { v[j] * corner }).collect()
            };
            Ok((s, LatticeSpec::new(n, flip(a), flip(b), z.to_vec())?))
        }
        SimilarityKind::Parity => {
            let mut alpha: Vec<C64> = (0..n - 1).map(|j| b[n - 2 - j]).collect();
            let mut beta: Vec<C64> = (0..n - 1).map(|j| a[n - 2 - j]).collect();
            alpha.push(b[n - 1]);
            beta.push(a[n - 1]);
            let zr: Vec<C64> = z.iter().rev().copied().collect();
            Ok((linalg::exchange(n), LatticeSpec::new(n, alpha, beta, zr)?))
        }
        SimilarityKind::Shift => {
            let mut s = CMat::zeros(n, n);
            for i in 0..n {
                s[(i, (i + 1) % n)] = r(1.0);
            }
            let rot = |v: &[C64]| -> Vec<C64> { (0..n).map(|j| v[(j + 1) % n]).collect() };
            Ok((s, LatticeSpec::new(n, rot(a), rot(b), rot(z))?))
        }
        SimilarityKind::DiagonalSymmetrize => {
            spec.require_irreducible()?;
            let mut d = vec![r(1.0); n];
            for i in 1..n {
                d[i] = d[i - 1] * (a[i - 1] / b[i - 1]).sqrt();
            }
            let mut alpha: Vec<C64> = (0..n - 1).map(|j| a[j] * d[j] / d[j + 1]).collect();
            let mut beta: Vec<C64> = (0..n - 1).map(|j| b[j] * d[j + 1] / d[j]).collect();
            alpha.push(a[n - 1] * d[n - 1] / d[0]);
            beta.push(b[n - 1] * d[0] / d[n - 1]);
            let s = linalg::diag(&d.iter().map(|x| x.inv()).collect::<Vec<_>>());
            Ok((s, LatticeSpec::new(n, alpha, beta, z.to_vec())?))
        }
    }
}

/// Spectrum of H(alpha, beta, z) with 2-periodic z in terms of the
/// spectrum of the zero-diagonal matrix H0 = H(alpha, beta, 0).
#[derive(Debug, Clone)]
pub struct ChiralLift {
    /// (z_1 + z_2) / 2
    pub center: C64,
    /// (z_2 - z_1) / 2
    pub delta: C64,
    /// Eigenvalues of H0.
    pub base: Vec<C64>,
    base_matrix: CMat,
}

pub fn chiral_lift(spec: &LatticeSpec) -> Result<ChiralLift> {
    let n = spec.n();
    let z = spec.z();
    let periodic = (2..n).all(|i| near(z[i], z[i - 2], spec.scale()));
    if !periodic || (!spec.is_open() && n % 2 != 0) {
        return Err(Error::PeriodicityViolation);
    }
    let zero = LatticeSpec::new(n, spec.alpha().to_vec(), spec.beta().to_vec(), vec![r(0.0); n])?;
    let base_matrix = zero.matrix();
    let base = linalg::eigenvalues(&base_matrix)?;
    Ok(ChiralLift { center: (z[0] + z[1]) / 2.0, delta: (z[1] - z[0]) / 2.0, base, base_matrix })
}

impl ChiralLift {
    /// sqrt(lambda^2 + delta^2), principal branch.
    fn root(&self, lambda: C64) -> C64 {
        (lambda * lambda + self.delta * self.delta).sqrt()
    }

    /// The two eigenvalues center +- sqrt(lambda^2 + delta^2).
    pub fn pair(&self, lambda: C64) -> (C64, C64) {
        let s = self.root(lambda);
        (self.center + s, self.center - s)
    }

    /// Lifted spectrum: each +-lambda pair of H0 yields one pair; zero modes
    /// split by sublattice into z_1 (odd sites) and z_2 (even sites).
    pub fn spectrum(&self) -> Vec<C64> {
        let n = self.base.len();
        let scale = linalg::max_abs(&self.base_matrix).max(f64::MIN_POSITIVE);
        let tol = 1e-7 * scale;
        let mut out = Vec::with_capacity(n);
        let mut zero_modes = 0;
        for &l in &self.base {
            if l.norm() <= tol {
                zero_modes += 1;
                continue;
            }
            let upper = if l.re.abs() > tol { l.re > 0.0 } else { l.im > 0.0 };
            let s = self.root(l);
            out.push(if upper { self.center + s } else { self.center - s });
        }
        if zero_modes > 0 {
            let kernel = linalg::null_space(&self.base_matrix, 1e-7);
            let e = stagger(n);
            let k = kernel.ncols();
            let (odd, even) = if k == zero_modes {
                let proj = kernel.adjoint() * &e * &kernel;
                let ev = linalg::herm_eigenvalues(&proj);
                let odd = ev.iter().filter(|&&x| x < 0.0).count();
                (odd, zero_modes - odd)
            } else {
                (zero_modes - zero_modes / 2, zero_modes / 2)
            };
            out.extend(std::iter::repeat_n(self.center - self.delta, odd));
            out.extend(std::iter::repeat_n(self.center + self.delta, even));
        }
        out
    }

    /// Lifts an eigenvector u of H0 with eigenvalue lambda to an eigenvector
    /// of H with eigenvalue center + sign * sqrt(lambda^2 + delta^2). For a
    /// zero mode on one sublattice only one sign gives a nonzero vector.
    pub fn lift_vector(&self, u: &CVec, lambda: C64, plus: bool) -> CVec {
        let s = if plus { self.root(lambda) } else { -self.root(lambda) };
        let eu = stagger(u.len()) * u;
        let v1 = u * (lambda + s) + &eu * self.delta;
        let v2 = u * self.delta + &eu * (s - lambda);
        if v1.norm() >= v2.norm() {
            v1
        } else {
            v2
        }
    }
}

/// diag((-1)^i), one-based, so the first entry is -1.
pub fn stagger(n: usize) -> CMat {
    linalg::diag(&(0..n).map(|i| r(if i % 2 == 0 { -1.0 } else { 1.0 })).collect::<Vec<_>>())
}

/// Eigenvalues of the unit-hopping chain with defects at (m, n - m + 1)
/// that do not depend on the defect strengths.
pub fn constant_eigenvalues(n: usize, m: usize) -> Result<Vec<f64>> {
    if m < 1 || 2 * m > n {
        return Err(Error::IndexOutOfRange(format!("need 1 <= m <= n/2, got n={n}, m={m}")));
    }
    let g = num_integer::gcd(n + 1, m);
    Ok((1..g).map(|k| 2.0 * (PI * k as f64 / g as f64).cos()).collect())
}

/// Result of the closed-form lookup.
#[derive(Debug, Clone, PartialEq)]
pub enum ClosedForm {
    Spectrum(Vec<C64>),
    NotClosedForm,
}

fn cos_set(count: usize, f: impl Fn(usize) -> f64, scale: f64) -> Vec<C64> {
    (1..=count).map(|j| r(scale * f(j).cos())).collect()
}

fn doubled(v: Vec<C64>) -> Vec<C64> {
    v.iter().chain(&v).copied().collect()
}

pub fn closed_form_spectrum(preset: &ModelPreset) -> ClosedForm {
    match preset {
        ModelPreset::UniformChain { n, m, t, z_m, z_mbar } => uniform_closed_form(*n, *m, *t, *z_m, *z_mbar),
        ModelPreset::SshEdgeDefect { n, t1, t2, t_l, t_r, z1, zn } => ssh_closed_form(*n, *t1, *t2, *t_l, *t_r, *z1, *zn),
        ModelPreset::Qubit { omega, t } => {
            let e = r(t * t - omega * omega).sqrt();
            ClosedForm::Spectrum(vec![e, -e])
        }
        _ => ClosedForm::NotClosedForm,
    }
}

fn uniform_closed_form(n: usize, m: usize, t: f64, z_m: C64, z_mbar: C64) -> ClosedForm {
    if n < 2 || m < 1 || 2 * m > n || t == 0.0 {
        return ClosedForm::NotClosedForm;
    }
    let s = (z_m + z_mbar) / t;
    let p = z_m * z_mbar / (t * t);
    let is = |sv: f64, pv: f64| near(s, r(sv), 1.0) && near(p, r(pv), 1.0);
    let nf = n as f64;
    let two_t = 2.0 * t;
    if is(0.0, 0.0) {
        return ClosedForm::Spectrum(cos_set(n, |j| j as f64 * PI / (nf + 1.0), two_t));
    }
    if m == 1 {
        if near(p, r(1.0), 1.0) {
            let mut v = cos_set(n - 1, |j| j as f64 * PI / nf, two_t);
            v.push(z_m + z_mbar);
            return ClosedForm::Spectrum(v);
        }
        let odd = |j: usize| 2.0 * j as f64 * PI / (2.0 * nf + 1.0);
        if is(1.0, 0.0) {
            return ClosedForm::Spectrum(cos_set(n, odd, -two_t));
        }
        if is(-1.0, 0.0) {
            return ClosedForm::Spectrum(cos_set(n, odd, two_t));
        }
        if is(0.0, -1.0) {
            return ClosedForm::Spectrum(cos_set(n, |j| (2 * j - 1) as f64 * PI / (2.0 * nf), two_t));
        }
    }
    if 2 * m == n {
        let mf = m as f64;
        let u = cos_set(m, |j| j as f64 * PI / (mf + 1.0), two_t);
        let v = cos_set(m, |j| (2 * j - 1) as f64 * PI / (2.0 * mf + 1.0), two_t);
        let w = cos_set(m, |j| 2.0 * j as f64 * PI / (2.0 * mf + 1.0), two_t);
        let join = |x: Vec<C64>, y: Vec<C64>| -> Vec<C64> { x.into_iter().chain(y).collect() };
        if is(0.0, 1.0) {
            return ClosedForm::Spectrum(doubled(u));
        }
        if is(1.0, 1.0) {
            return ClosedForm::Spectrum(join(u, v));
        }
        if is(-1.0, 1.0) {
            return ClosedForm::Spectrum(join(u, w));
        }
        if is(-2.0, 2.0) {
            return ClosedForm::Spectrum(doubled(w));
        }
        if is(2.0, 2.0) {
            return ClosedForm::Spectrum(doubled(v));
        }
    }
    ClosedForm::NotClosedForm
}

fn ssh_closed_form(n: usize, t1: C64, t2: C64, tl: C64, tr: C64, z1: C64, zn: C64) -> ClosedForm {
    let scale = [t1, t2, tl, tr, z1, zn].iter().map(|x| x.norm()).fold(0.0, f64::max);
    let cond = near(tl, -tr, scale) && near(t2 * t2, z1 * zn - tl * tr, scale * scale);
    if n < 4 || n % 2 != 0 || !cond {
        return ClosedForm::NotClosedForm;
    }
    let k = n / 2;
    let mut out = Vec::with_capacity(n);
    for j in 1..k {
        let e = (t1 + t2 * C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64)).norm();
        out.push(r(e));
        out.push(r(-e));
    }
    let cc = (z1 + zn) / 2.0;
    let s = (t1 * t1 - t2 * t2 + cc * cc).sqrt();
    out.push(cc + s);
    out.push(cc - s);
    ClosedForm::Spectrum(out)
}
