//! Univariate complex polynomials, Chebyshev polynomials of the four kinds,
//! Sylvester resultants, discriminants and companion-matrix root finding.

use crate::error::{Error, Result};
use crate::linalg::{self, r, CMat, C64};
use std::ops::{Add, Mul, Neg, Sub};

/// Relative threshold below which trailing coefficients are dropped.
pub const DROP_TOL: f64 = 1e-13;

/// Above this total degree the Sylvester determinant is replaced by a
/// product over roots.
const SYLVESTER_MAX_DEGREE: usize = 25;

const NEWTON_STEPS: usize = 5;

/// Dense polynomial, coefficients stored lowest degree first.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPoly {
    coeffs: Vec<C64>,
}

impl ComplexPoly {
    pub fn new(coeffs: Vec<C64>) -> Self {
        let mut p = ComplexPoly { coeffs };
        p.trim();
        p
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&x| r(x)).collect())
    }

    pub fn zero() -> Self {
        ComplexPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: C64) -> Self {
        Self::new(vec![c])
    }

    /// The monomial x.
    pub fn x() -> Self {
        Self::from_real(&[0.0, 1.0])
    }

    /// Monic polynomial with the given roots.
    pub fn from_roots(roots: &[C64]) -> Self {
        let mut coeffs = vec![r(1.0)];
        for &root in roots {
            let mut next = vec![r(0.0); coeffs.len() + 1];
            for (k, &a) in coeffs.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * root;
            }
            coeffs = next;
        }
        ComplexPoly { coeffs }
    }

    fn trim(&mut self) {
        let scale = self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            self.coeffs.clear();
            return;
        }
        while let Some(last) = self.coeffs.last() {
            if last.norm() <= DROP_TOL * scale {
                self.coeffs.pop();
            } else {
                break;
            }
        }
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> C64 {
        self.coeffs.last().copied().unwrap_or(r(0.0))
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or(r(0.0))
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, x: C64) -> C64 {
        self.coeffs.iter().rev().fold(r(0.0), |acc, &a| acc * x + a)
    }

    /// Sum of |c_k| |x|^k, the natural scale for residuals at x.
    pub fn eval_scale(&self, x: C64) -> f64 {
        let ax = x.norm();
        self.coeffs.iter().rev().fold(0.0, |acc, a| acc * ax + a.norm())
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &a)| a * k as f64)
                .collect(),
        )
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.coeffs.iter().map(|&a| a * s).collect())
    }

    /// p(a x)
    pub fn rescale(&self, a: C64) -> Self {
        let mut pow = r(1.0);
        let mut out = Vec::with_capacity(self.coeffs.len());
        for &c in &self.coeffs {
            out.push(c * pow);
            pow *= a;
        }
        Self::new(out)
    }

    pub fn monic(&self) -> Self {
        let lc = self.leading();
        if lc == r(0.0) {
            return self.clone();
        }
        let mut p = ComplexPoly {
            coeffs: self.coeffs.iter().map(|&a| a / lc).collect(),
        };
        if let Some(last) = p.coeffs.last_mut() {
            *last = r(1.0);
        }
        p
    }

    /// p(q(x))
    pub fn compose(&self, q: &ComplexPoly) -> Self {
        self.coeffs
            .iter()
            .rev()
            .fold(Self::zero(), |acc, &a| &(&acc * q) + &Self::constant(a))
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::constant(r(1.0)), |acc, _| &acc * self)
    }
}

impl Add for &ComplexPoly {
    type Output = ComplexPoly;
    fn add(self, rhs: &ComplexPoly) -> ComplexPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        ComplexPoly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &ComplexPoly {
    type Output = ComplexPoly;
    fn sub(self, rhs: &ComplexPoly) -> ComplexPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        ComplexPoly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Neg for &ComplexPoly {
    type Output = ComplexPoly;
    fn neg(self) -> ComplexPoly {
        self.scale(r(-1.0))
    }
}

impl Mul for &ComplexPoly {
    type Output = ComplexPoly;
    fn mul(self, rhs: &ComplexPoly) -> ComplexPoly {
        if self.is_zero() || rhs.is_zero() {
            return ComplexPoly::zero();
        }
        let mut out = vec![r(0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        ComplexPoly::new(out)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for ComplexPoly {
            type Output = ComplexPoly;
            fn $m(self, rhs: ComplexPoly) -> ComplexPoly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Selects T, U, V or W.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ChebKind {
    First,
    Second,
    Third,
    Fourth,
}

impl ChebKind {
    pub const ALL: [ChebKind; 4] = [ChebKind::First, ChebKind::Second, ChebKind::Third, ChebKind::Fourth];

    fn min_index(self) -> i64 {
        match self {
            ChebKind::Second => -1,
            _ => 0,
        }
    }

    /// (P_{start}, P_{start+1}) as affine functions a + b x.
    fn seeds(self) -> (i64, [f64; 2], [f64; 2]) {
        match self {
            ChebKind::First => (0, [1.0, 0.0], [0.0, 1.0]),
            ChebKind::Second => (-1, [0.0, 0.0], [1.0, 0.0]),
            ChebKind::Third => (0, [1.0, 0.0], [-1.0, 2.0]),
            ChebKind::Fourth => (0, [1.0, 0.0], [1.0, 2.0]),
        }
    }
}

/// Chebyshev polynomial value by forward three-term recurrence.
pub fn cheb_eval(kind: ChebKind, n: i64, x: C64) -> Result<C64> {
    if n < kind.min_index() {
        return Err(Error::UnsupportedIndex(n));
    }
    let (start, s0, s1) = kind.seeds();
    let mut p0 = r(s0[0]) + x * s0[1];
    if n == start {
        return Ok(p0);
    }
    let mut p1 = r(s1[0]) + x * s1[1];
    let two_x = x * 2.0;
    for _ in (start + 1)..n {
        let p2 = two_x * p1 - p0;
        p0 = p1;
        p1 = p2;
    }
    Ok(p1)
}

/// Chebyshev polynomial in the monomial basis.
pub fn cheb_as_poly(kind: ChebKind, n: usize) -> ComplexPoly {
    let (start, s0, s1) = kind.seeds();
    let mut p0 = ComplexPoly::from_real(&s0);
    let mut p1 = ComplexPoly::from_real(&s1);
    let target = n as i64;
    if target == start {
        return p0;
    }
    let two_x = ComplexPoly::from_real(&[0.0, 2.0]);
    for _ in (start + 1)..target {
        let p2 = &(&two_x * &p1) - &p0;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// U_n(x / 2) as a polynomial in x, with U_{-1} = 0 and U_{-2} = -1.
pub fn cheb_u_half(n: i64) -> ComplexPoly {
    match n {
        i64::MIN..=-3 => panic!("cheb_u_half index {n} below -2"),
        -2 => ComplexPoly::constant(r(-1.0)),
        -1 => ComplexPoly::zero(),
        _ => {
            let mut p0 = ComplexPoly::zero();
            let mut p1 = ComplexPoly::constant(r(1.0));
            let x = ComplexPoly::x();
            for _ in 0..n {
                let p2 = &(&x * &p1) - &p0;
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// Sylvester matrix, the rows of f first, coefficients highest degree first.
pub fn sylvester_matrix(f: &ComplexPoly, g: &ComplexPoly) -> CMat {
    let m = f.degree();
    let n = g.degree();
    let size = m + n;
    let mut s = CMat::zeros(size, size);
    for row in 0..n {
        for k in 0..=m {
            s[(row, row + k)] = f.coeff(m - k);
        }
    }
    for row in 0..m {
        for k in 0..=n {
            s[(n + row, row + k)] = g.coeff(n - k);
        }
    }
    s
}

/// Resultant, equal to lc(f)^deg g lc(g)^deg f prod (a_i - b_j).
pub fn resultant(f: &ComplexPoly, g: &ComplexPoly) -> Result<C64> {
    if f.is_zero() || g.is_zero() || f.degree() < 1 || g.degree() < 1 {
        return Err(Error::DegenerateInput("resultant needs two nonconstant polynomials".into()));
    }
    if f.degree().max(g.degree()) > SYLVESTER_MAX_DEGREE {
        let roots_f = roots(f, 1e-8)?;
        let lc = f.leading().powu(g.degree() as u32);
        return Ok(roots_f.iter().fold(lc, |acc, &a| acc * g.eval(a)));
    }
    Ok(linalg::det(&sylvester_matrix(f, g)))
}

/// Discriminant (-1)^{d(d-1)/2} Res(f, f') / lc(f).
pub fn discriminant(f: &ComplexPoly) -> Result<C64> {
    let d = f.degree();
    if f.is_zero() || d < 2 {
        return Err(Error::DegenerateInput("discriminant needs degree >= 2".into()));
    }
    let res = resultant(f, &f.derivative())?;
    let sign = if (d * (d - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(res * sign / f.leading())
}

/// Discriminant of a polynomial given by its roots and leading coefficient,
/// lc^{2d-2} prod_{i<j} (r_i - r_j)^2.
pub fn discriminant_from_roots(roots: &[C64], leading: C64) -> C64 {
    let d = roots.len();
    let mut acc = leading.powu((2 * d).saturating_sub(2) as u32);
    for i in 0..d {
        for j in (i + 1)..d {
            let diff = roots[i] - roots[j];
            acc *= diff * diff;
        }
    }
    acc
}

/// Power-of-two diagonal balancing (Parlett and Reinsch).
fn balance(a: &mut CMat) {
    let n = a.nrows();
    let radix = 2.0_f64;
    loop {
        let mut converged = true;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += a[(j, i)].norm();
                    row += a[(i, j)].norm();
                }
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let total = col + row;
            let mut f = 1.0;
            let mut cc = col;
            while cc < row / radix {
                cc *= radix;
                f *= radix;
            }
            while cc > row * radix {
                cc /= radix;
                f /= radix;
            }
            let scaled = cc + row / f;
            if scaled < 0.95 * total {
                converged = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                    a[(j, i)] *= f;
                }
            }
        }
        if converged {
            break;
        }
    }
}

/// All roots with multiplicity, via balanced companion matrix eigenvalues
/// followed by Newton polishing. Each root satisfies
/// |f(r)| <= tol * sum |c_k| |r|^k.
pub fn roots(f: &ComplexPoly, tol: f64) -> Result<Vec<C64>> {
    let d = f.degree();
    if f.is_zero() || d < 1 {
        return Err(Error::DegenerateInput("roots needs degree >= 1".into()));
    }
    let zeros = f.coeffs().iter().take_while(|c| **c == r(0.0)).count();
    let reduced = ComplexPoly::new(f.coeffs()[zeros..].to_vec());
    let mut out = vec![r(0.0); zeros];
    let dr = reduced.degree();
    if dr == 1 {
        out.push(-reduced.coeff(0) / reduced.coeff(1));
    } else if dr > 1 {
        let monic = reduced.monic();
        let mut comp = CMat::zeros(dr, dr);
        for i in 1..dr {
            comp[(i, i - 1)] = r(1.0);
        }
        for i in 0..dr {
            comp[(i, dr - 1)] = -monic.coeff(i);
        }
        balance(&mut comp);
        out.extend(linalg::eigenvalues(&comp)?);
    }
    let df = f.derivative();
    for root in out.iter_mut().skip(zeros) {
        let mut best = *root;
        let mut best_res = f.eval(best).norm();
        let mut z = best;
        for _ in 0..NEWTON_STEPS {
            let dz = df.eval(z);
            if dz == r(0.0) {
                break;
            }
            z -= f.eval(z) / dz;
            let res = f.eval(z).norm();
            if res < best_res {
                best = z;
                best_res = res;
            } else {
                break;
            }
        }
        *root = best;
    }
    for &root in &out {
        let res = f.eval(root).norm();
        if res > tol * f.eval_scale(root) {
            return Err(Error::NotConverged(format!("root {root} has residual {res:e}")));
        }
    }
    Ok(out)
}
