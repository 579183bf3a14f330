//! Dense eigendecomposition with multiplicities, PT classification,
//! eigenvalue inclusion regions and the Bloch sphere map.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64};
use serde::{Deserialize, Serialize};

/// Default single-linkage clustering radius, relative to the spectral norm.
pub const CLUSTER_TOL: f64 = 1e-7;

/// Singular values below this fraction of the spectral norm count as zero.
pub const RANK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub value: C64,
    pub algebraic_mult: usize,
    pub geometric_mult: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", content = "pairs", rename_all = "snake_case")]
pub enum PtClass {
    Unbroken,
    Broken(Vec<(C64, C64)>),
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    /// Distinct eigenvalues sorted by (Re, Im).
    pub eigenvalues: Vec<Eigenvalue>,
    /// Column k is a unit eigenvector for `eigenvalues[k]`.
    pub eigenvectors: CMat,
    pub max_residual: f64,
    pub pt_class: PtClass,
}

impl SpectralReport {
    /// Eigenvalues repeated by algebraic multiplicity.
    pub fn multiset(&self) -> Vec<C64> {
        self.eigenvalues
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.value, e.algebraic_mult))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigOptions {
    /// Clustering radius relative to the spectral norm.
    pub cluster_tol: f64,
    /// Rank threshold relative to the spectral norm.
    pub rank_tol: f64,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions { cluster_tol: CLUSTER_TOL, rank_tol: RANK_TOL }
    }
}

fn cmp_complex(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Eigenvalues with multiplicities. Clusters are taken at radius
/// `tol * ||H||`; each is reported at its mean.
pub fn eig(h: &CMat, tol: f64) -> Result<SpectralReport> {
    eig_with(h, EigOptions { cluster_tol: tol, ..EigOptions::default() })
}

pub fn eig_with(h: &CMat, opts: EigOptions) -> Result<SpectralReport> {
    let n = h.nrows();
    if n == 0 || h.ncols() != n {
        return Err(Error::DimensionMismatch(format!("eig needs a nonempty square matrix, got {}x{}", n, h.ncols())));
    }
    let norm = linalg::spectral_norm(h);
    let raw = linalg::eigenvalues(h)?;
    let mut groups: Vec<(C64, usize)> = linalg::clusters(&raw, opts.cluster_tol * norm)
        .into_iter()
        .map(|g| (g.iter().map(|&i| raw[i]).sum::<C64>() / g.len() as f64, g.len()))
        .collect();
    groups.sort_by(|a, b| cmp_complex(&a.0, &b.0));
    let mut entries = Vec::with_capacity(groups.len());
    let mut vectors = Vec::with_capacity(groups.len());
    let mut max_residual: f64 = 0.0;
    for (value, mult) in groups {
        let shifted = h - CMat::identity(n, n) * value;
        let svd = shifted.clone().svd(false, true);
        let v_t = svd.v_t.expect("v_t requested");
        let (k_min, s_min) = svd
            .singular_values
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        let cut = opts.rank_tol * norm;
        let nullity = svd.singular_values.iter().filter(|&&s| s <= cut).count().max(1);
        let v: CVec = v_t.row(k_min).adjoint();
        max_residual = max_residual.max(s_min);
        vectors.push(v);
        entries.push(Eigenvalue { value, algebraic_mult: mult, geometric_mult: nullity.min(mult) });
    }
    let mut report = SpectralReport {
        eigenvalues: entries,
        eigenvectors: CMat::from_columns(&vectors),
        max_residual,
        pt_class: PtClass::NotApplicable,
    };
    report.pt_class = classify_report(h, &report, opts.cluster_tol);
    Ok(report)
}

/// max |H_ij - conj(H_{n-1-i, n-1-j})| relative to the largest entry.
pub fn centrohermitian_residual(h: &CMat) -> f64 {
    let n = h.nrows();
    let scale = linalg::max_abs(h).max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((h[(i, j)] - h[(n - 1 - i, n - 1 - j)].conj()).norm());
        }
    }
    worst / scale
}

fn classify_report(h: &CMat, report: &SpectralReport, tol: f64) -> PtClass {
    if centrohermitian_residual(h) > tol {
        return PtClass::NotApplicable;
    }
    let thr = tol * linalg::spectral_norm(h);
    let values = report.multiset();
    let upper: Vec<C64> = values.iter().copied().filter(|v| v.im > thr).collect();
    if upper.is_empty() && values.iter().all(|v| v.im.abs() <= thr) {
        return PtClass::Unbroken;
    }
    let mut lower: Vec<Option<C64>> = values.iter().copied().filter(|v| v.im < -thr).map(Some).collect();
    let mut pairs = Vec::with_capacity(upper.len());
    for u in upper {
        let best = lower
            .iter()
            .enumerate()
            .filter_map(|(k, l)| l.map(|l| (k, (l - u.conj()).norm())))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let partner = match best {
            Some((k, _)) => lower[k].take().expect("present"),
            None => u.conj(),
        };
        pairs.push((u, partner));
    }
    PtClass::Broken(pairs)
}

/// PT class under the exchange-matrix parity.
pub fn pt_classify(h: &CMat, tol: f64) -> PtClass {
    match eig(h, CLUSTER_TOL) {
        Ok(report) => {
            if centrohermitian_residual(h) > tol {
                return PtClass::NotApplicable;
            }
            classify_report(h, &report, tol)
        }
        Err(_) => PtClass::NotApplicable,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InclusionRegion {
    Disk { center: C64, radius: f64 },
    CassiniOval { focus1: C64, focus2: C64, b: f64 },
}

impl InclusionRegion {
    /// Membership with an absolute slack on the defining inequality.
    pub fn contains(&self, w: C64, slack: f64) -> bool {
        match *self {
            InclusionRegion::Disk { center, radius } => (w - center).norm() <= radius + slack,
            InclusionRegion::CassiniOval { focus1, focus2, b } => (w - focus1).norm() * (w - focus2).norm() <= b + slack,
        }
    }

    /// Axis-aligned box (re_min, re_max, im_min, im_max) containing the region.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        match *self {
            InclusionRegion::Disk { center, radius } => {
                (center.re - radius, center.re + radius, center.im - radius, center.im + radius)
            }
            InclusionRegion::CassiniOval { focus1, focus2, b } => {
                let half = (focus1 - focus2).norm() / 2.0;
                let mid = (focus1 + focus2) / 2.0;
                let reach = (half * half + b).sqrt();
                (mid.re - reach, mid.re + reach, mid.im - reach, mid.im + reach)
            }
        }
    }
}

fn off_diagonal_row_sums(h: &CMat) -> Vec<f64> {
    let n = h.nrows();
    (0..n).map(|i| (0..n).filter(|&j| j != i).map(|j| h[(i, j)].norm()).sum()).collect()
}

pub fn gershgorin(h: &CMat) -> Vec<InclusionRegion> {
    let radii = off_diagonal_row_sums(h);
    (0..h.nrows()).map(|i| InclusionRegion::Disk { center: h[(i, i)], radius: radii[i] }).collect()
}

pub fn brauer_cassini(h: &CMat) -> Result<Vec<InclusionRegion>> {
    let n = h.nrows();
    if n < 2 {
        return Err(Error::DimensionMismatch("Brauer-Cassini ovals need n >= 2".into()));
    }
    let radii = off_diagonal_row_sums(h);
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(InclusionRegion::CassiniOval { focus1: h[(i, i)], focus2: h[(j, j)], b: radii[i] * radii[j] });
        }
    }
    Ok(out)
}

pub fn union_contains(regions: &[InclusionRegion], w: C64, slack: f64) -> bool {
    regions.iter().any(|g| g.contains(w, slack))
}

/// A connected component of a rasterized union of regions.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub cells: Vec<(usize, usize)>,
    pub touches_real_axis: bool,
    grid: Grid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Grid {
    re0: f64,
    im0: f64,
    step: f64,
}

impl Component {
    /// True when the cell containing w belongs to this component.
    pub fn contains(&self, w: C64) -> bool {
        let i = ((w.re - self.grid.re0) / self.grid.step).round();
        let j = ((w.im - self.grid.im0) / self.grid.step).round();
        i >= 0.0 && j >= 0.0 && self.cells.binary_search(&(i as usize, j as usize)).is_ok()
    }
}

/// Connected components of the union on a square grid with `resolution`
/// cells along the longer side; the grid always has a row on the real axis.
pub fn union_components(regions: &[InclusionRegion], resolution: usize) -> Vec<Component> {
    if regions.is_empty() {
        return Vec::new();
    }
    let (mut x0, mut x1, mut y0, mut y1) = regions[0].bounding_box();
    for g in &regions[1..] {
        let b = g.bounding_box();
        x0 = x0.min(b.0);
        x1 = x1.max(b.1);
        y0 = y0.min(b.2);
        y1 = y1.max(b.3);
    }
    let span = (x1 - x0).max(y1 - y0).max(1e-12);
    let step = span / resolution.max(2) as f64;
    let y0 = (y0 / step).floor() * step - step;
    let x0 = x0 - step;
    let nx = ((x1 - x0) / step).ceil() as usize + 2;
    let ny = ((y1 - y0) / step).ceil() as usize + 2;
    let grid = Grid { re0: x0, im0: y0, step };
    let point = |i: usize, j: usize| C64::new(x0 + i as f64 * step, y0 + j as f64 * step);
    let slack = 1e-12 * (1.0 + span * span);
    let inside: Vec<bool> = (0..nx * ny).map(|k| union_contains(regions, point(k / ny, k % ny), slack)).collect();
    let mut seen = vec![false; nx * ny];
    let mut comps = Vec::new();
    for start in 0..nx * ny {
        if !inside[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut cells = Vec::new();
        let mut touches = false;
        while let Some(k) = stack.pop() {
            let (i, j) = (k / ny, k % ny);
            cells.push((i, j));
            touches |= (y0 + j as f64 * step).abs() <= 0.5 * step;
            let mut push = |ii: usize, jj: usize| {
                let kk = ii * ny + jj;
                if inside[kk] && !seen[kk] {
                    seen[kk] = true;
                    stack.push(kk);
                }
            };
            if i > 0 {
                push(i - 1, j);
            }
            if i + 1 < nx {
                push(i + 1, j);
            }
            if j > 0 {
                push(i, j - 1);
            }
            if j + 1 < ny {
                push(i, j + 1);
            }
        }
        cells.sort_unstable();
        comps.push(Component { cells, touches_real_axis: touches, grid });
    }
    comps
}

#[derive(Debug, Clone, PartialEq)]
pub struct BauerFike {
    pub radius: f64,
    pub disks: Vec<InclusionRegion>,
    pub real_spectrum_certificate: bool,
}

/// Disks of radius cond2(S) ||H1||_2 about the eigenvalues of H0 = S D S^{-1}.
/// The certificate also needs the caller's assertion that H0 and H1 share
/// an intertwiner.
pub fn bauer_fike(h0: &CMat, h1: &CMat, s: &CMat, shared_intertwiner: bool) -> Result<BauerFike> {
    let n = h0.nrows();
    let kappa = linalg::cond2(s);
    let s_inv = linalg::inverse(s).filter(|_| kappa.is_finite() && kappa < 1e14).ok_or(Error::SingularS)?;
    let d = &s_inv * h0 * s;
    let off = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| d[(i, j)].norm())
        .fold(0.0, f64::max);
    if off > 1e-8 * linalg::spectral_norm(h0).max(1.0) * kappa {
        return Err(Error::DegenerateInput("S does not diagonalize H0".into()));
    }
    let centers: Vec<C64> = (0..n).map(|i| d[(i, i)]).collect();
    let radius = kappa * linalg::spectral_norm(h1);
    let mut gap = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            gap = gap.min((centers[i] - centers[j]).norm());
        }
    }
    let norm_h1 = linalg::spectral_norm(h1);
    let certificate = shared_intertwiner && norm_h1 < gap / (2.0 * kappa);
    Ok(BauerFike {
        radius,
        disks: centers.into_iter().map(|c| InclusionRegion::Disk { center: c, radius }).collect(),
        real_spectrum_certificate: certificate,
    })
}

/// Point on the unit sphere for a nonzero vector in C^2.
pub fn bloch(v: &[C64; 2]) -> Result<[f64; 3]> {
    let norm2 = v[0].norm_sqr() + v[1].norm_sqr();
    if norm2 == 0.0 || !norm2.is_finite() {
        return Err(Error::ZeroVector);
    }
    let cross = v[0].conj() * v[1];
    Ok([2.0 * cross.re / norm2, 2.0 * cross.im / norm2, (v[0].norm_sqr() - v[1].norm_sqr()) / norm2])
}

/// Smallest |lambda_i - lambda_j| over a multiset.
pub fn min_gap(values: &[C64]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            gap = gap.min((values[i] - values[j]).norm());
        }
    }
    gap
}

/// Largest |Im lambda| over the spectrum.
pub fn max_imag(values: &[C64]) -> f64 {
    values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{LatticeSpec, ModelPreset};
    use crate::linalg::{c, multiset_distance, r};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn qubit(omega: f64, t: f64) -> CMat {
        ModelPreset::Qubit { omega, t }.expand().unwrap().matrix()
    }

    fn rand_mat(rng: &mut ChaCha8Rng, n: usize) -> CMat {
        CMat::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn nn_spec(rng: &mut ChaCha8Rng, n: usize, gamma_ratio: f64) -> LatticeSpec {
        let m = n / 2;
        let half: Vec<C64> = (0..m).map(|_| C64::from_polar(rng.random_range(0.3..1.5), rng.random_range(-1.0..1.0))).collect();
        let t: Vec<C64> = (0..n - 1).map(|j| if j < m { half[j] } else { half[n - 2 - j] }).collect();
        let tm = t[m - 1].norm();
        let outer = (0..m - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
        ModelPreset::NearestNeighbourDefect { n, t, delta: rng.random_range(-1.0..1.0), gamma: gamma_ratio * tm, outer }
            .expand()
            .unwrap()
    }

    #[test]
    fn qubit_spectrum() {
        let rep = eig(&qubit(0.5, 1.0), 1e-7).unwrap();
        let e = 0.75f64.sqrt();
        assert!(multiset_distance(&rep.multiset(), &[r(e), r(-e)]) < 1e-12);
        assert_eq!(rep.pt_class, PtClass::Unbroken);
        let rep = eig(&qubit(2.0, 1.0), 1e-7).unwrap();
        let e = 3f64.sqrt();
        assert!(multiset_distance(&rep.multiset(), &[c(0.0, e), c(0.0, -e)]) < 1e-12);
        let PtClass::Broken(pairs) = rep.pt_class else { panic!("expected broken") };
        assert_eq!(pairs.len(), 1);
        assert!((pairs[0].0 - c(0.0, e)).norm() < 1e-12 && (pairs[0].1 - c(0.0, -e)).norm() < 1e-12);
    }

    #[test]
    fn identity_multiplicities() {
        let rep = eig(&CMat::identity(3, 3), 1e-7).unwrap();
        assert_eq!(rep.eigenvalues, vec![Eigenvalue { value: r(1.0), algebraic_mult: 3, geometric_mult: 3 }]);
        let rep = eig(&CMat::zeros(2, 2), 1e-7).unwrap();
        assert_eq!(rep.eigenvalues, vec![Eigenvalue { value: r(0.0), algebraic_mult: 2, geometric_mult: 2 }]);
    }

    #[test]
    fn jordan_block_is_defective() {
        let mut j = CMat::identity(2, 2);
        j[(0, 1)] = r(1.0);
        let rep = eig(&j, 1e-7).unwrap();
        assert_eq!(rep.eigenvalues[0].algebraic_mult, 2);
        assert_eq!(rep.eigenvalues[0].geometric_mult, 1);
    }

    #[test]
    fn nn_defect_at_threshold_is_all_ep2() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for n in [4, 6, 8] {
            let h = nn_spec(&mut rng, n, 1.0).matrix();
            let rep = eig(&h, CLUSTER_TOL).unwrap();
            assert_eq!(rep.eigenvalues.len(), n / 2, "n={n}");
            assert!(rep.eigenvalues.iter().all(|e| e.algebraic_mult == 2 && e.geometric_mult == 1));
        }
    }

    #[test]
    fn residuals_are_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in 1..10 {
            let h = rand_mat(&mut rng, n);
            let rep = eig(&h, CLUSTER_TOL).unwrap();
            let norm = linalg::spectral_norm(&h);
            for (k, e) in rep.eigenvalues.iter().enumerate() {
                let v = rep.eigenvectors.column(k);
                assert!((&h * v - v * e.value).norm() <= 1e-8 * norm);
            }
            assert!(rep.max_residual <= 1e-8 * norm);
            assert_eq!(rep.eigenvalues.iter().map(|e| e.algebraic_mult).sum::<usize>(), n);
        }
    }

    #[test]
    fn eig_matches_char_poly_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for n in 2..13 {
            let spec = LatticeSpec::new(
                n,
                (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect(),
                (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect(),
                (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect(),
            )
            .unwrap();
            let rts = crate::poly::roots(&crate::lattice::char_poly(&spec), 1e-9).unwrap();
            let rep = eig(&spec.matrix(), 1e-9).unwrap();
            assert!(multiset_distance(&rep.multiset(), &rts) < 1e-8);
        }
    }

    #[test]
    fn pt_examples() {
        assert_eq!(pt_classify(&qubit(0.5, 1.0), 1e-9), PtClass::Unbroken);
        assert!(matches!(pt_classify(&qubit(2.0, 1.0), 1e-9), PtClass::Broken(_)));
        let herm = LatticeSpec::open(&[r(1.0), r(2.0), r(1.0)], &[r(1.0), r(2.0), r(1.0)], &[r(0.5), r(-1.0), r(-1.0), r(0.5)]).unwrap();
        assert_eq!(pt_classify(&herm.matrix(), 1e-9), PtClass::Unbroken);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        assert_eq!(pt_classify(&rand_mat(&mut rng, 4), 1e-9), PtClass::NotApplicable);
    }

    #[test]
    fn maximal_breaking_dichotomy() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..50 {
            let n = 2 * rng.random_range(2..7);
            let below = rng.random_range(0.0..0.999);
            let h = nn_spec(&mut rng, n, below).matrix();
            let norm = linalg::spectral_norm(&h);
            let vals = linalg::eigenvalues(&h).unwrap();
            assert!(max_imag(&vals) <= 1e-8 * norm);
            let above = 1.001 + rng.random_range(0.0..2.0);
            let h = nn_spec(&mut rng, n, above).matrix();
            let vals = linalg::eigenvalues(&h).unwrap();
            assert!(vals.iter().all(|v| v.im.abs() > 0.0));
        }
    }

    #[test]
    fn inclusion_examples() {
        let d = linalg::diag(&[r(1.0), c(0.0, 2.0), r(-3.0)]);
        for g in gershgorin(&d) {
            let InclusionRegion::Disk { radius, .. } = g else { unreachable!() };
            assert_eq!(radius, 0.0);
        }
        assert!(matches!(brauer_cassini(&CMat::identity(1, 1)), Err(Error::DimensionMismatch(_))));
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for _ in 0..100 {
            let h = rand_mat(&mut rng, 6);
            let g = gershgorin(&h);
            let b = brauer_cassini(&h).unwrap();
            for v in linalg::eigenvalues(&h).unwrap() {
                assert!(union_contains(&g, v, 1e-9) && union_contains(&b, v, 1e-9));
            }
        }
    }

    #[test]
    fn cassini_inside_gershgorin_on_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..20 {
            let h = rand_mat(&mut rng, 5);
            let g = gershgorin(&h);
            let b = brauer_cassini(&h).unwrap();
            let (x0, x1, y0, y1) = g.iter().map(|d| d.bounding_box()).fold(
                (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
                |a, q| (a.0.min(q.0), a.1.max(q.1), a.2.min(q.2), a.3.max(q.3)),
            );
            for i in 0..200 {
                for j in 0..200 {
                    let w = c(x0 + (x1 - x0) * i as f64 / 199.0, y0 + (y1 - y0) * j as f64 / 199.0);
                    if union_contains(&b, w, 0.0) {
                        assert!(union_contains(&g, w, 1e-9));
                    }
                }
            }
        }
    }

    #[test]
    fn ssh_broken_domain_has_off_axis_components() {
        let ssh = ModelPreset::SshEdgeDefect { n: 8, t1: r(0.2), t2: r(0.3), t_l: r(0.0), t_r: r(0.0), z1: c(0.1, 2.0), zn: c(0.1, -2.0) };
        let h = ssh.expand().unwrap().matrix();
        let ovals = brauer_cassini(&h).unwrap();
        let comps = union_components(&ovals, 300);
        assert!(comps.iter().filter(|k| !k.touches_real_axis).count() >= 2);
        let vals = linalg::eigenvalues(&h).unwrap();
        assert!(vals.iter().filter(|v| v.im.abs() > 1e-6).count() >= 2);
    }

    #[test]
    fn homotopy_keeps_component_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let mut h = rand_mat(&mut rng, 5) * r(0.15);
        for i in 0..5 {
            h[(i, i)] = c(3.0 * i as f64, 0.0);
        }
        let d = linalg::diag(&(0..5).map(|i| h[(i, i)]).collect::<Vec<_>>());
        for step in 0..=100 {
            let s = step as f64 / 100.0;
            let hs = &d + (&h - &d) * r(s);
            let disks = gershgorin(&hs);
            let comps = union_components(&disks, 400);
            let vals = linalg::eigenvalues(&hs).unwrap();
            for comp in &comps {
                let centers = (0..5).filter(|&i| comp.contains(hs[(i, i)])).count();
                let inside = vals.iter().filter(|&&v| comp.contains(v)).count();
                assert_eq!(centers, inside, "s={s}");
            }
        }
    }

    #[test]
    fn bauer_fike_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let s = rand_mat(&mut rng, 4) + CMat::identity(4, 4) * r(2.0);
        let d = linalg::diag(&[r(1.0), r(2.0), r(4.0), r(7.0)]);
        let h0 = &s * &d * linalg::inverse(&s).unwrap();
        let zero = CMat::zeros(4, 4);
        let bf = bauer_fike(&h0, &zero, &s, true).unwrap();
        assert_eq!(bf.radius, 0.0);
        assert!(bf.real_spectrum_certificate);
        let (_, u) = linalg::herm_eig(&(&h0 + h0.adjoint()));
        assert!((linalg::cond2(&u) - 1.0).abs() < 1e-10);
        assert_eq!(bauer_fike(&h0, &zero, &CMat::zeros(4, 4), true).unwrap_err(), Error::SingularS);
        for _ in 0..100 {
            let s = rand_mat(&mut rng, 5) + CMat::identity(5, 5) * r(1.5);
            let d = linalg::diag(&(0..5).map(|_| c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0))).collect::<Vec<_>>());
            let h0 = &s * &d * linalg::inverse(&s).unwrap();
            let h1 = rand_mat(&mut rng, 5) * r(0.01);
            let bf = bauer_fike(&h0, &h1, &s, false).unwrap();
            assert!(!bf.real_spectrum_certificate);
            for v in linalg::eigenvalues(&(&h0 + &h1)).unwrap() {
                assert!(union_contains(&bf.disks, v, 1e-9));
            }
        }
    }

    #[test]
    fn qubit_derivative_bounded_by_condition_number() {
        let t = 1.0;
        for k in 1..40 {
            let omega = 0.95 * k as f64 / 40.0;
            let h = 1e-6;
            let e = |w: f64| (t * t - w * w).sqrt();
            let deriv = ((e(omega + h) - e(omega - h)) / (2.0 * h)).abs();
            let rep = eig(&qubit(omega, t), CLUSTER_TOL).unwrap();
            let kappa = linalg::cond2(&rep.eigenvectors);
            assert!(deriv <= kappa * 1.0 * (1.0 + 1e-6), "omega={omega}");
        }
    }

    #[test]
    fn bloch_examples() {
        assert_eq!(bloch(&[r(1.0), r(0.0)]).unwrap(), [0.0, 0.0, 1.0]);
        assert_eq!(bloch(&[r(0.0), r(0.0)]), Err(Error::ZeroVector));
        let (omega, t): (f64, f64) = (0.6, 1.0);
        let e = (t * t - omega * omega).sqrt();
        for (sign, eps) in [(1.0, e), (-1.0, -e)] {
            let v = [r(1.0), (r(eps) - c(0.0, omega)) / t];
            let p = bloch(&v).unwrap();
            assert!((p[0] - sign * e / t).abs() < 1e-12 && (p[1] + omega / t).abs() < 1e-12 && p[2].abs() < 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..20 {
            let a = [c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)), c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))];
            let b = [-a[1].conj(), a[0].conj()];
            let (p, q) = (bloch(&a).unwrap(), bloch(&b).unwrap());
            assert!((0..3).all(|k| (p[k] + q[k]).abs() < 1e-12));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn prop_bloch_on_sphere_and_scale_invariant(
            re0 in -1.0f64..1.0, im0 in -1.0f64..1.0, re1 in -1.0f64..1.0, im1 in -1.0f64..1.0,
            s_re in 0.1f64..3.0, s_im in -3.0f64..3.0,
        ) {
            let v = [c(re0, im0), c(re1, im1)];
            prop_assume!(v[0].norm() + v[1].norm() > 1e-3);
            let p = bloch(&v).unwrap();
            prop_assert!((p.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
            let s = c(s_re, s_im);
            let q = bloch(&[v[0] * s, v[1] * s]).unwrap();
            prop_assert!((0..3).all(|k| (p[k] - q[k]).abs() < 1e-12));
        }

        #[test]
        fn prop_multiplicities_sum_to_n(seed in 0u64..10_000, n in 1usize..9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = rand_mat(&mut rng, n);
            let rep = eig(&h, CLUSTER_TOL).unwrap();
            prop_assert_eq!(rep.eigenvalues.iter().map(|e| e.algebraic_mult).sum::<usize>(), n);
            prop_assert!(rep.eigenvalues.iter().all(|e| 1 <= e.geometric_mult && e.geometric_mult <= e.algebraic_mult));
        }
    }
}
