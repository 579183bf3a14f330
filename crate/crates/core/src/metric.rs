//! Intertwining operators and metrics: the eigendecomposition family, the
//! qubit family, the nearest-neighbour and far-defect chain metrics,
//! anticommuting pencils and representation-generated pairs.

use crate::error::{Error, Result};
use crate::lattice::{self, LatticeSpec, SimilarityKind};
use crate::linalg::{self, c, r, CMat, C64, I};
use crate::spectra::{self, InclusionRegion};
use serde::{Deserialize, Serialize};

/// Eigenvalues of eta below this fraction of the largest one count as zero.
pub const POSITIVITY_TOL: f64 = 1e-10;

/// Clipping level for square roots of positive matrices, relative to the largest eigenvalue.
pub const SQRT_CLIP: f64 = 1e-14;

/// Relative tolerance for structural checks on inputs.
pub const INPUT_TOL: f64 = 1e-10;

/// Tolerance used when classifying the spectrum of H as real and nondefective.
pub const SPECTRUM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Positivity {
    PositiveDefinite,
    PositiveSemidefinite { kernel_dim: usize },
    Indefinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntertwinerReport {
    pub eta: CMat,
    /// ||eta - eta^dagger|| / ||eta||
    pub hermiticity_residual: f64,
    /// ||eta H - H^dagger eta|| / (||eta|| ||H||)
    pub intertwining_residual: f64,
    pub min_eigenvalue: f64,
    pub positivity: Positivity,
}

impl IntertwinerReport {
    pub fn new(eta: CMat, h: &CMat) -> Self {
        let (min_eigenvalue, positivity) = positivity(&eta);
        IntertwinerReport {
            hermiticity_residual: linalg::hermiticity_residual(&eta),
            intertwining_residual: linalg::intertwining_residual(&eta, h),
            min_eigenvalue,
            positivity,
            eta,
        }
    }

    pub fn is_positive_definite(&self) -> bool {
        self.positivity == Positivity::PositiveDefinite
    }
}

/// Smallest eigenvalue of the Hermitian part of eta and the positivity verdict.
pub fn positivity(eta: &CMat) -> (f64, Positivity) {
    let ev = linalg::herm_eigenvalues(eta);
    let scale = ev.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let min = ev.first().copied().unwrap_or(0.0);
    let thr = POSITIVITY_TOL * scale;
    let verdict = if scale == 0.0 {
        Positivity::PositiveSemidefinite { kernel_dim: ev.len() }
    } else if min > thr {
        Positivity::PositiveDefinite
    } else if min >= -thr {
        Positivity::PositiveSemidefinite { kernel_dim: ev.iter().filter(|x| x.abs() <= thr).count() }
    } else {
        Positivity::Indefinite
    };
    (min, verdict)
}

/// Positive square root of a Hermitian positive semidefinite matrix and,
/// when it exists, its inverse.
pub fn positive_sqrt(m: &CMat) -> (CMat, Option<CMat>) {
    let ev = linalg::herm_eigenvalues(m);
    let top = ev.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let clip = SQRT_CLIP * top;
    let root = linalg::herm_fn(m, |x| x.max(clip).sqrt());
    let inv = (ev.first().is_some_and(|&x| x > clip)).then(|| linalg::herm_fn(m, |x| 1.0 / x.sqrt()));
    (root, inv)
}

fn require_square(a: &CMat, what: &str) -> Result<usize> {
    if a.nrows() == 0 || a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!("{what} must be a nonempty square matrix, got {}x{}", a.nrows(), a.ncols())));
    }
    Ok(a.nrows())
}

/// eta = (U d U^dagger)^{-1}, U the eigenvector matrix of H with unit
/// columns, d positive weights (one per eigenvector, constant within
/// degenerate eigenspaces).
pub fn general_metric_family(h: &CMat, d: &[f64]) -> Result<IntertwinerReport> {
    let n = require_square(h, "H")?;
    if d.len() != n {
        return Err(Error::DimensionMismatch(format!("need {n} weights, got {}", d.len())));
    }
    if d.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
        return Err(Error::ParamViolation("weights must be strictly positive".into()));
    }
    let rep = spectra::eig(h, SPECTRUM_TOL)?;
    let norm = linalg::spectral_norm(h).max(f64::MIN_POSITIVE);
    let mut cols = Vec::with_capacity(n);
    for e in &rep.eigenvalues {
        if e.value.im.abs() > SPECTRUM_TOL * norm {
            return Err(Error::NotQuasiHermitian(format!("complex eigenvalue {}", e.value)));
        }
        if e.geometric_mult != e.algebraic_mult {
            return Err(Error::NotQuasiHermitian(format!("eigenvalue {} is defective", e.value)));
        }
        let shifted = h - CMat::identity(n, n) * e.value;
        let basis = linalg::null_space(&shifted, spectra::RANK_TOL);
        if basis.ncols() != e.algebraic_mult {
            return Err(Error::NotQuasiHermitian(format!("eigenvalue {} is defective", e.value)));
        }
        let w = d[cols.len()];
        for k in 0..basis.ncols() {
            if (d[cols.len()] - w).abs() > INPUT_TOL * w {
                return Err(Error::ParamViolation("weights must be constant within degenerate eigenspaces".into()));
            }
            cols.push(basis.column(k).into_owned());
        }
    }
    let u = CMat::from_columns(&cols);
    let dm = linalg::diag(&d.iter().map(|&w| r(w)).collect::<Vec<_>>());
    let inv = &u * dm * u.adjoint();
    let eta = linalg::inverse(&inv).ok_or_else(|| Error::NotQuasiHermitian("eigenvectors are linearly dependent".into()))?;
    let eta = (&eta + eta.adjoint()) * r(0.5);
    Ok(IntertwinerReport::new(eta, h))
}

/// eta_k = eta0 H^k.
pub fn intertwiner_family(eta0: &CMat, h: &CMat, k: u32) -> Result<IntertwinerReport> {
    let n = require_square(h, "H")?;
    if eta0.shape() != (n, n) {
        return Err(Error::DimensionMismatch("eta0 and H differ in size".into()));
    }
    let mut eta = eta0.clone();
    for _ in 0..k {
        eta = &eta * h;
    }
    Ok(IntertwinerReport::new(eta, h))
}

fn pauli() -> [CMat; 3] {
    let o = r(0.0);
    let one = r(1.0);
    [
        CMat::from_row_slice(2, 2, &[o, one, one, o]),
        CMat::from_row_slice(2, 2, &[o, -I, I, o]),
        CMat::from_row_slice(2, 2, &[one, o, o, -one]),
    ]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// sum_k v_k sigma_k
pub fn pauli_vector(v: [C64; 3]) -> CMat {
    let s = pauli();
    &s[0] * v[0] + &s[1] * v[1] + &s[2] * v[2]
}

/// (trace/2) I + (alpha + i beta) . sigma
pub fn qubit_hamiltonian(alpha: [f64; 3], beta: [f64; 3], trace: f64) -> CMat {
    let v = [0, 1, 2].map(|k| c(alpha[k], beta[k]));
    CMat::identity(2, 2) * r(trace / 2.0) + pauli_vector(v)
}

/// Closed-form positivity of the qubit intertwiner: the eigenvalues of eta
/// are xi |alpha|^2 +- |alpha| sqrt(zeta^2 + xi^2 |beta|^2).
pub fn qubit_positive(alpha: [f64; 3], beta: [f64; 3], zeta: f64, xi: f64) -> bool {
    let (aa, bb) = (dot3(alpha, alpha), dot3(beta, beta));
    aa > 0.0 && xi > 0.0 && (aa - bb) * xi * xi > zeta * zeta
}

/// eta = zeta (alpha . sigma) + xi (alpha . alpha) I + xi ((beta x alpha) . sigma),
/// reported against (alpha + i beta) . sigma.
pub fn qubit_intertwiner(alpha: [f64; 3], beta: [f64; 3], zeta: f64, xi: f64) -> Result<IntertwinerReport> {
    let (na, nb) = (dot3(alpha, alpha).sqrt(), dot3(beta, beta).sqrt());
    if na == 0.0 && nb == 0.0 {
        return Err(Error::ParamViolation("alpha and beta are both zero".into()));
    }
    if dot3(alpha, beta).abs() > 1e-12 * na * nb {
        return Err(Error::OrthogonalityViolation);
    }
    let bxa = cross3(beta, alpha);
    let v = [0, 1, 2].map(|k| r(zeta * alpha[k] + xi * bxa[k]));
    let eta = CMat::identity(2, 2) * r(xi * dot3(alpha, alpha)) + pauli_vector(v);
    Ok(IntertwinerReport::new(eta, &qubit_hamiltonian(alpha, beta, 0.0)))
}

/// A validated nearest-neighbour defect chain together with its symmetrizer.
#[derive(Debug, Clone)]
pub struct NnDefect {
    pub spec: LatticeSpec,
    /// Half the chain length; the defects sit on sites m and m + 1.
    pub m: usize,
    pub delta: f64,
    pub gamma: f64,
    /// Diagonal S with S H S^{-1} complex symmetric.
    pub symmetrizer: CMat,
    /// Central hopping of S H S^{-1}; real with modulus |t_m|.
    pub central: f64,
}

impl NnDefect {
    pub fn new(spec: &LatticeSpec) -> Result<Self> {
        let n = spec.n();
        if !spec.is_open() || n < 2 || n % 2 != 0 {
            return Err(Error::ParamViolation("nearest-neighbour model needs an open chain of even length".into()));
        }
        let m = n / 2;
        let (a, b, z) = (spec.alpha(), spec.beta(), spec.z());
        let tol = 1e-12 * spec.scale().max(1.0);
        for j in 0..n - 1 {
            if (b[j] - a[n - 2 - j].conj()).norm() > tol {
                return Err(Error::ParamViolation(format!("beta_{} must equal conj(alpha_{})", j + 1, n - 1 - j)));
            }
            let p = a[j] * a[n - 2 - j].conj();
            if !(p.re > 0.0) || p.im.abs() > tol * p.norm().max(1.0) {
                return Err(Error::ParamViolation(format!("t_{} conj(t_{}) must be positive", j + 1, n - 1 - j)));
            }
        }
        for j in 0..m - 1 {
            if z[j].im.abs() > tol || (z[j] - z[n - 1 - j]).norm() > tol {
                return Err(Error::ParamViolation("outer potentials must be real and mirror symmetric".into()));
            }
        }
        if (z[m - 1] - z[m].conj()).norm() > tol {
            return Err(Error::ParamViolation("defect potentials must be complex conjugates".into()));
        }
        let (symmetrizer, sym) = lattice::similarity(spec, SimilarityKind::DiagonalSymmetrize)?;
        let central = sym.alpha()[m - 1].re;
        Ok(NnDefect { spec: spec.clone(), m, delta: z[m - 1].re, gamma: z[m - 1].im, symmetrizer, central })
    }

    pub fn t_m(&self) -> f64 {
        self.central.abs()
    }

    /// Metric of the symmetrized chain: [[I, (Z^*/t') P], [(Z/t') P, I]].
    pub fn symmetric_metric(&self, z: C64) -> CMat {
        let n = 2 * self.m;
        let mut out = CMat::identity(n, n);
        for i in 0..self.m {
            let j = self.m + (self.m - 1 - i);
            out[(i, j)] = z.conj() / self.central;
            out[(j, i)] = z / self.central;
        }
        out
    }

    /// M(Z) = S^dagger M'(Z) S.
    pub fn metric(&self, z: C64) -> CMat {
        let s = &self.symmetrizer;
        s.adjoint() * self.symmetric_metric(z) * s
    }

    /// S^dagger P_n S, the intertwiner spanning the Re Z direction of M(Z).
    pub fn exchange_metric(&self) -> CMat {
        let s = &self.symmetrizer;
        s.adjoint() * linalg::exchange(2 * self.m) * s
    }

    /// C = S^{-1} P_n S^{-dagger} M(i gamma) / sqrt(1 - gamma^2 / t_m^2).
    pub fn c_symmetry(&self) -> Result<CMat> {
        let ratio = self.gamma / self.t_m();
        if ratio.abs() >= 1.0 {
            return Err(Error::ParamViolation("C-symmetry needs |gamma| < |t_m|".into()));
        }
        let sinv = linalg::inverse(&self.symmetrizer).ok_or(Error::Singular)?;
        let p = linalg::exchange(2 * self.m);
        let cm = &sinv * p * sinv.adjoint() * self.metric(c(0.0, self.gamma));
        Ok(cm * r(1.0 / (1.0 - ratio * ratio).sqrt()))
    }

    fn check_z(&self, z: C64) -> Result<()> {
        if (z.im - self.gamma).abs() > 1e-12 * self.gamma.abs().max(1.0) {
            return Err(Error::ParamViolation(format!("Im Z = {} differs from gamma = {}", z.im, self.gamma)));
        }
        Ok(())
    }
}

pub fn nn_defect_metric(spec: &LatticeSpec, z: C64) -> Result<IntertwinerReport> {
    let nn = NnDefect::new(spec)?;
    nn.check_z(z)?;
    Ok(IntertwinerReport::new(nn.metric(z), &spec.matrix()))
}

/// (h, Omega) with Omega = M(Z)^{1/2} and h = Omega H Omega^{-1}.
pub fn equiv_hermitian(spec: &LatticeSpec, z: C64) -> Result<(CMat, CMat)> {
    let report = nn_defect_metric(spec, z)?;
    if !report.is_positive_definite() {
        return Err(Error::NotPositive);
    }
    let (omega, inv) = positive_sqrt(&report.eta);
    let inv = inv.ok_or(Error::NotPositive)?;
    let h = &omega * spec.matrix() * inv;
    Ok((h, omega))
}

/// Closed-form intertwiner of the uniform chain with z_1 = Delta + i gamma,
/// z_n = Delta - i gamma and hopping t.
pub fn far_defect_matrix(n: usize, delta: f64, gamma: f64, t: f64) -> Result<CMat> {
    if n < 2 {
        return Err(Error::ParamViolation(format!("far-defect chain needs n >= 2, got {n}")));
    }
    if t == 0.0 || !t.is_finite() {
        return Err(Error::ParamViolation("far-defect metric needs t != 0".into()));
    }
    let g = r(gamma / t);
    let up = c(delta, -gamma) / t;
    let down = c(delta, gamma) / t;
    Ok(CMat::from_fn(n, n, |i, j| {
        if i == j {
            r(1.0)
        } else if i < j {
            -I * g * up.powu((j - i - 1) as u32)
        } else {
            I * g * down.powu((i - j - 1) as u32)
        }
    }))
}

pub fn far_defect_hamiltonian(n: usize, delta: f64, gamma: f64, t: f64) -> Result<CMat> {
    let spec = lattice::ModelPreset::UniformChain { n, m: 1, t, z_m: c(delta, gamma), z_mbar: c(delta, -gamma) }.expand()?;
    Ok(spec.matrix())
}

pub fn far_defect_metric(n: usize, delta: f64, gamma: f64, t: f64) -> Result<IntertwinerReport> {
    let eta = far_defect_matrix(n, delta, gamma, t)?;
    Ok(IntertwinerReport::new(eta, &far_defect_hamiltonian(n, delta, gamma, t)?))
}

/// Metric for H = J + i gamma E with both positivity bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct PencilMetric {
    pub h: CMat,
    pub report: IntertwinerReport,
    /// ||J^{-1}||_{eta0}, the nominal pencil bound.
    pub nominal_bound: Option<f64>,
    /// 1 / ||J^{-1} E||_{eta0}, the Neumann-series radius.
    pub neumann_bound: Option<f64>,
}

impl PencilMetric {
    pub fn within_nominal_bound(&self, gamma: f64) -> Option<bool> {
        self.nominal_bound.map(|b| gamma.abs() < b)
    }

    pub fn within_neumann_bound(&self, gamma: f64) -> Option<bool> {
        self.neumann_bound.map(|b| gamma.abs() < b)
    }
}

fn check_anticommute(j: &CMat, e: &CMat) -> Result<()> {
    let res = linalg::fro(&linalg::anticommutator(j, e));
    let scale = linalg::fro(j) * linalg::fro(e);
    if res > INPUT_TOL * scale {
        return Err(Error::AnticommutationViolation(res / scale.max(f64::MIN_POSITIVE)));
    }
    Ok(())
}

fn checked_inverse(j: &CMat) -> Result<CMat> {
    if linalg::cond2(j) > 1e13 {
        return Err(Error::SingularJ);
    }
    linalg::inverse(j).ok_or(Error::SingularJ)
}

/// eta = eta0 + i gamma eta0 J^{-1} E.
pub fn pencil_metric(j: &CMat, e: &CMat, gamma: f64, eta0: &CMat) -> Result<PencilMetric> {
    let n = require_square(j, "J")?;
    if e.shape() != (n, n) || eta0.shape() != (n, n) {
        return Err(Error::DimensionMismatch("J, E and eta0 differ in size".into()));
    }
    check_anticommute(j, e)?;
    for (name, a) in [("J", j), ("E", e)] {
        if linalg::intertwining_residual(eta0, a) > INPUT_TOL {
            return Err(Error::ParamViolation(format!("eta0 does not intertwine {name}")));
        }
    }
    let jinv = checked_inverse(j)?;
    let eta = eta0 + eta0 * &jinv * e * c(0.0, gamma);
    let h = j + e * c(0.0, gamma);
    let (nominal_bound, neumann_bound) = match positive_sqrt(eta0) {
        (root, Some(rinv)) if positivity(eta0).1 == Positivity::PositiveDefinite => {
            let weighted = |a: &CMat| linalg::spectral_norm(&(&root * a * &rinv));
            (Some(weighted(&jinv)), Some(1.0 / weighted(&(&jinv * e))))
        }
        _ => (None, None),
    };
    let report = IntertwinerReport::new(eta, &h);
    Ok(PencilMetric { h, report, nominal_bound, neumann_bound })
}

/// Uniform Toeplitz tridiagonal matrix with unit hoppings.
pub fn toeplitz(size: usize) -> CMat {
    hatano_nelson(size, r(1.0), r(1.0))
}

/// J_{i+1,i} = alpha, J_{i,i+1} = beta.
pub fn hatano_nelson(size: usize, alpha: C64, beta: C64) -> CMat {
    CMat::from_fn(size, size, |i, k| {
        if i == k + 1 {
            alpha
        } else if k == i + 1 {
            beta
        } else {
            r(0.0)
        }
    })
}

/// Closed-form entry (j, k), one-based, of the pencil metric for the unit
/// Toeplitz J of even size 2n with staggered E and eta0 = I.
pub fn toeplitz_pencil_entry(size: usize, gamma: f64, j: usize, k: usize) -> C64 {
    let n = size / 2;
    let (lo, hi) = (j.min(k) as f64, j.max(k) as f64);
    let half = std::f64::consts::FRAC_PI_2;
    let sign = if (n + j) % 2 == 0 { 1.0 } else { -1.0 };
    let delta = if j == k { 1.0 } else { 0.0 };
    c(delta, sign * gamma * (lo * half).sin() * ((2.0 * n as f64 - hi + 1.0) * half).sin())
}

/// Closed-form pencil metric for the Hatano-Nelson J (alpha beta > 0) with
/// eta0 = diag(|beta/alpha|^{j-1}); gamma enters rescaled by sqrt(alpha beta).
pub fn hatano_nelson_pencil_metric(size: usize, alpha: C64, beta: C64, gamma: f64) -> Result<CMat> {
    let p = alpha * beta;
    if !(p.re > 0.0) || p.im.abs() > INPUT_TOL * p.norm() {
        return Err(Error::ParamViolation("Hatano-Nelson pencil needs alpha beta > 0".into()));
    }
    let g = gamma / p.re.sqrt();
    let left = beta.conj() / alpha.conj();
    let right = beta / alpha;
    Ok(CMat::from_fn(size, size, |j, k| {
        toeplitz_pencil_entry(size, g, j + 1, k + 1) * left.powf(j as f64 / 2.0) * right.powf(k as f64 / 2.0)
    }))
}

/// Spectrum of J + i gamma E with lifted eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PencilSpectrum {
    pub values: Vec<C64>,
    /// Column k is an eigenvector for values[k].
    pub vectors: CMat,
    pub max_residual: f64,
}

/// Eigenpairs of J on a basis of each eigenspace.
fn eigenbasis(j: &CMat) -> Result<Vec<(C64, CMat)>> {
    let n = j.nrows();
    let rep = spectra::eig(j, SPECTRUM_TOL)?;
    let mut out = Vec::with_capacity(rep.eigenvalues.len());
    let mut total = 0;
    for e in &rep.eigenvalues {
        let basis = linalg::null_space(&(j - CMat::identity(n, n) * e.value), spectra::RANK_TOL);
        if basis.ncols() != e.algebraic_mult {
            return Err(Error::DegenerateInput(format!("J is not diagonalizable at {}", e.value)));
        }
        total += basis.ncols();
        out.push((e.value, basis));
    }
    debug_assert_eq!(total, n);
    Ok(out)
}

pub fn pencil_spectrum(j: &CMat, e: &CMat, gamma: f64) -> Result<PencilSpectrum> {
    let n = require_square(j, "J")?;
    if e.shape() != (n, n) {
        return Err(Error::DimensionMismatch("J and E differ in size".into()));
    }
    let inv_res = linalg::fro(&(e * e - CMat::identity(n, n))) / (n as f64).sqrt();
    if inv_res > INPUT_TOL {
        return Err(Error::NotInvolution(inv_res));
    }
    check_anticommute(j, e)?;
    let ig = c(0.0, gamma);
    let h = j + e * ig;
    let tol = SPECTRUM_TOL * linalg::spectral_norm(j).max(f64::MIN_POSITIVE);
    let mut values = Vec::with_capacity(n);
    let mut cols = Vec::with_capacity(n);
    for (lambda, basis) in eigenbasis(j)? {
        if lambda.norm() <= tol {
            // Zero modes: E preserves ker J and H acts there as i gamma E.
            let ek = basis.adjoint() * e * &basis;
            let (eps, w) = linalg::herm_eig(&ek);
            for (k, &s) in eps.iter().enumerate() {
                values.push(ig * s.signum());
                cols.push(&basis * w.column(k));
            }
            continue;
        }
        let mut s = (lambda * lambda - r(gamma * gamma)).sqrt();
        if (s - lambda).norm() > (s + lambda).norm() {
            s = -s;
        }
        for k in 0..basis.ncols() {
            let u = basis.column(k).into_owned();
            let eu = e * &u;
            let v1 = &u * (lambda + s) + &eu * ig;
            let v2 = &eu * (s - lambda) + &u * ig;
            let v = if v1.norm() >= v2.norm() { v1 } else { v2 };
            values.push(s);
            cols.push(v.normalize());
        }
    }
    let vectors = CMat::from_columns(&cols);
    let max_residual = (0..n)
        .map(|k| (&h * vectors.column(k) - vectors.column(k) * values[k]).norm())
        .fold(0.0, f64::max);
    Ok(PencilSpectrum { values, vectors, max_residual })
}

/// phi_U((a b; c d)) = (aI bU; cU^dagger dI).
pub fn phi(u: &CMat, x: &CMat) -> CMat {
    let n = u.nrows();
    let mut out = CMat::zeros(2 * n, 2 * n);
    let id = CMat::identity(n, n);
    out.view_mut((0, 0), (n, n)).copy_from(&(&id * x[(0, 0)]));
    out.view_mut((0, n), (n, n)).copy_from(&(u * x[(0, 1)]));
    out.view_mut((n, 0), (n, n)).copy_from(&(u.adjoint() * x[(1, 0)]));
    out.view_mut((n, n), (n, n)).copy_from(&(&id * x[(1, 1)]));
    out
}

/// Isometry onto the k-th invariant block span{(e_k, 0), (0, U^dagger e_k)}.
pub fn block_isometry(u: &CMat, k: usize) -> CMat {
    let n = u.nrows();
    let mut v = CMat::zeros(2 * n, 2);
    v[(k, 0)] = r(1.0);
    for i in 0..n {
        v[(n + i, 1)] = u[(k, i)].conj();
    }
    v
}

/// phi_k(h) = phi_U(h) restricted to the k-th block.
pub fn phi_block(u: &CMat, k: usize, h: &CMat) -> CMat {
    let v = block_isometry(u, k);
    &v * h * v.adjoint()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepPair {
    pub h: CMat,
    pub eta: CMat,
    pub report: IntertwinerReport,
}

/// H = A + sum_k phi_k(h_k) with eta = phi_U(m).
pub fn rep_generate(u: &CMat, h_list: &[CMat], m: &CMat, a: &CMat) -> Result<RepPair> {
    let n = require_square(u, "U")?;
    if h_list.len() != n {
        return Err(Error::DimensionMismatch(format!("need {n} blocks, got {}", h_list.len())));
    }
    if m.shape() != (2, 2) || h_list.iter().any(|h| h.shape() != (2, 2)) {
        return Err(Error::DimensionMismatch("m and every h_k must be 2x2".into()));
    }
    if a.shape() != (2 * n, 2 * n) {
        return Err(Error::DimensionMismatch(format!("A must be {0}x{0}", 2 * n)));
    }
    let unit = linalg::fro(&(u.adjoint() * u - CMat::identity(n, n))) / (n as f64).sqrt();
    if unit > INPUT_TOL {
        return Err(Error::NotUnitary(unit));
    }
    if linalg::hermiticity_residual(m) > INPUT_TOL || linalg::det(m).norm() <= INPUT_TOL * linalg::fro(m).powi(2) {
        return Err(Error::ParamViolation("m must be Hermitian and invertible".into()));
    }
    if linalg::hermiticity_residual(a) > INPUT_TOL {
        return Err(Error::ParamViolation("A must be Hermitian".into()));
    }
    let scale = linalg::fro(a).max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for (p, q) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let mut unit = CMat::zeros(2, 2);
        unit[(p, q)] = r(1.0);
        let g = phi(u, &unit);
        worst = worst.max(linalg::fro(&linalg::commutator(a, &g)) / (scale * linalg::fro(&g)));
    }
    if worst > 1e-9 {
        return Err(Error::CommutantViolation(worst));
    }
    for (k, hk) in h_list.iter().enumerate() {
        if linalg::intertwining_residual(m, hk) > 1e-9 {
            return Err(Error::NotIntertwiner(k));
        }
    }
    let mut h = a.clone();
    for (k, hk) in h_list.iter().enumerate() {
        h += phi_block(u, k, hk);
    }
    let eta = phi(u, m);
    let report = IntertwinerReport::new(eta.clone(), &h);
    Ok(RepPair { h, eta, report })
}

/// Disks |w - lambda_A - L_j| <= |L_j| and their trace on the real axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutingInclusion {
    pub disks: Vec<InclusionRegion>,
    /// Real intervals [lo, hi] met by the union (points have lo = hi).
    pub real_intersection: Vec<[f64; 2]>,
    /// True when the union meets the real axis only at points of sigma(A).
    pub real_points_in_spectrum: bool,
}

impl CommutingInclusion {
    pub fn contains(&self, w: C64, slack: f64) -> bool {
        spectra::union_contains(&self.disks, w, slack)
    }

    /// Whether a real eigenvalue x is admissible, within tol.
    pub fn admits_real(&self, x: f64, tol: f64) -> bool {
        self.real_intersection.iter().any(|&[lo, hi]| x >= lo - tol && x <= hi + tol)
    }
}

pub fn commuting_inclusion(a_spectrum: &[f64], lambda_tilde: &[C64]) -> CommutingInclusion {
    let mut disks = Vec::with_capacity(a_spectrum.len() * lambda_tilde.len());
    let mut real_intersection = Vec::new();
    let mut only_spectrum = true;
    let scale = a_spectrum.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let tol = 1e-12 * scale;
    for &l in lambda_tilde {
        for &x in a_spectrum {
            let center = r(x) + l;
            let radius = l.norm();
            disks.push(InclusionRegion::Disk { center, radius });
            let reach2 = radius * radius - center.im * center.im;
            if reach2 < -tol * radius.max(tol) {
                continue;
            }
            let half = reach2.max(0.0).sqrt();
            let iv = [center.re - half, center.re + half];
            if iv[1] - iv[0] > tol || !a_spectrum.iter().any(|&y| (y - center.re).abs() <= tol) {
                only_spectrum = false;
            }
            real_intersection.push(iv);
        }
    }
    real_intersection.sort_by(|p, q| p[0].total_cmp(&q[0]).then(p[1].total_cmp(&q[1])));
    real_intersection.dedup_by(|p, q| (p[0] - q[0]).abs() <= tol && (p[1] - q[1]).abs() <= tol);
    CommutingInclusion { disks, real_intersection, real_points_in_spectrum: only_spectrum }
}

/// L_j = the entry of largest modulus among Lambda(k)_jj over k. Each row
/// must be imaginary with a fixed sign of the imaginary part.
pub fn lambda_tilde(diagonals: &[Vec<C64>]) -> Result<Vec<C64>> {
    let Some(first) = diagonals.first() else {
        return Ok(Vec::new());
    };
    let n = first.len();
    if diagonals.iter().any(|d| d.len() != n) {
        return Err(Error::DimensionMismatch("all Lambda(k) must have the same size".into()));
    }
    let scale = diagonals.iter().flatten().fold(0.0f64, |m, x| m.max(x.norm()));
    let tol = INPUT_TOL * scale.max(f64::MIN_POSITIVE);
    (0..n)
        .map(|j| {
            let col: Vec<C64> = diagonals.iter().map(|d| d[j]).collect();
            if col.iter().any(|x| x.re.abs() > tol) {
                return Err(Error::ParamViolation("Lambda(k) must be imaginary".into()));
            }
            let pos = col.iter().any(|x| x.im > tol);
            let neg = col.iter().any(|x| x.im < -tol);
            if pos && neg {
                return Err(Error::ParamViolation(format!("entry {} changes sign across k", j + 1)));
            }
            Ok(col.into_iter().fold(r(0.0), |best, x| if x.norm() > best.norm() { x } else { best }))
        })
        .collect()
}
