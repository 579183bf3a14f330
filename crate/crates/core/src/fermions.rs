//! Second quantization on the 2^n occupation basis: Jordan-Wigner ladder
//! operators, dGamma, the minors metric, and locality of quasi-Hermitian
//! observables through kernels of off-diagonal metric blocks.
//!
//! Basis states are n-bit occupation words ordered by integer value; bit
//! q holds the occupation of qubit q (site q + 1 in the standard ordering).

use crate::error::{Error, Result};
use crate::linalg::{self, r, CMat, C64};
use crate::metric;
use serde::{Deserialize, Serialize};

/// Largest n for ladder operators and dGamma.
pub const MAX_MODES: usize = 12;

/// Largest n for the minors metric.
pub const MAX_METRIC_MODES: usize = 10;

/// Largest subsystem or chain handled by subset enumeration.
pub const MAX_ENUMERATION: usize = 14;

/// Singular values below this fraction of the largest one count as zero.
pub const KERNEL_TOL: f64 = 1e-10;

fn guard(n: usize, max: usize) -> Result<()> {
    if n == 0 || n > max {
        return Err(Error::SizeLimit(format!("n = {n} outside 1..={max}")));
    }
    Ok(())
}

/// A Jordan-Wigner ladder operator acting on qubit `qubit`: the string of
/// Z factors on lower qubits times sigma or sigma^dagger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ladder {
    pub n: usize,
    pub qubit: usize,
    pub dagger: bool,
}

impl Ladder {
    /// Image of basis word w: Some((w', sign)) or None when the result is zero.
    pub fn apply(&self, w: usize) -> Option<(usize, f64)> {
        let bit = 1usize << self.qubit;
        if (w & bit != 0) == self.dagger {
            return None;
        }
        let below = (w & (bit - 1)).count_ones();
        let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
        Some((w ^ bit, sign))
    }

    pub fn adjoint(&self) -> Ladder {
        Ladder { dagger: !self.dagger, ..*self }
    }

    pub fn to_dense(&self) -> CMat {
        let dim = 1usize << self.n;
        let mut out = CMat::zeros(dim, dim);
        for w in 0..dim {
            if let Some((v, s)) = self.apply(w) {
                out[(v, w)] = r(s);
            }
        }
        out
    }
}

/// Ladder operators (a, a^dagger) for modes 1..=n in the standard ordering.
pub fn jordan_wigner(n: usize) -> Result<(Vec<Ladder>, Vec<Ladder>)> {
    let order: Vec<usize> = (1..=n).collect();
    jordan_wigner_ordered(&order)
}

/// Ladder operators for the ordering that places mode order[q] on qubit q.
/// Entry j - 1 of each returned list belongs to mode j.
pub fn jordan_wigner_ordered(order: &[usize]) -> Result<(Vec<Ladder>, Vec<Ladder>)> {
    let n = order.len();
    guard(n, MAX_MODES)?;
    let mut qubit = vec![usize::MAX; n];
    for (q, &mode) in order.iter().enumerate() {
        if mode == 0 || mode > n || qubit[mode - 1] != usize::MAX {
            return Err(Error::ParamViolation("order must be a permutation of 1..=n".into()));
        }
        qubit[mode - 1] = q;
    }
    let a: Vec<Ladder> = qubit.iter().map(|&q| Ladder { n, qubit: q, dagger: false }).collect();
    let adag = a.iter().map(Ladder::adjoint).collect();
    Ok((a, adag))
}

/// Largest CAR violation: max over i, j of ||{a_i, a_j}|| and ||{a_i^dagger, a_j} - delta_ij I||.
pub fn car_residual(a: &[Ladder]) -> f64 {
    let dense: Vec<CMat> = a.iter().map(Ladder::to_dense).collect();
    let dim = dense.first().map_or(1, |m| m.nrows());
    let mut worst = 0.0f64;
    for (i, ai) in dense.iter().enumerate() {
        for (j, aj) in dense.iter().enumerate() {
            worst = worst.max(linalg::max_abs(&linalg::anticommutator(ai, aj)));
            let mut mixed = linalg::anticommutator(&ai.adjoint(), aj);
            if i == j {
                mixed -= CMat::identity(dim, dim);
            }
            worst = worst.max(linalg::max_abs(&mixed));
        }
    }
    worst
}

/// dGamma(h) = sum_ij h_ij a_i^dagger a_j.
pub fn d_gamma(h: &CMat) -> Result<CMat> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(Error::DimensionMismatch("h must be square".into()));
    }
    guard(n, MAX_MODES)?;
    let (a, adag) = jordan_wigner(n)?;
    let dim = 1usize << n;
    let mut out = CMat::zeros(dim, dim);
    for w in 0..dim {
        for j in 0..n {
            let Some((v, s1)) = a[j].apply(w) else { continue };
            for i in 0..n {
                if h[(i, j)] == r(0.0) {
                    continue;
                }
                if let Some((u, s2)) = adag[i].apply(v) {
                    out[(u, w)] += h[(i, j)] * (s1 * s2);
                }
            }
        }
    }
    Ok(out)
}

/// Number operator dGamma(I).
pub fn number_operator(n: usize) -> Result<CMat> {
    d_gamma(&CMat::identity(n, n))
}

fn bits(w: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|&q| w & (1 << q) != 0).collect()
}

/// <S|eta|S'> = det M_{SS'} for |S| = |S'|, zero otherwise.
pub fn second_quantized_metric(m: &CMat) -> Result<CMat> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch("M must be square".into()));
    }
    guard(n, MAX_METRIC_MODES)?;
    if linalg::hermiticity_residual(m) > metric::INPUT_TOL || !metric::positivity(m).1.eq(&metric::Positivity::PositiveDefinite) {
        return Err(Error::NotPositive);
    }
    let dim = 1usize << n;
    let mut sectors: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for w in 0..dim {
        sectors[w.count_ones() as usize].push(w);
    }
    let mut out = CMat::zeros(dim, dim);
    for sector in &sectors {
        for &w in sector {
            let rows = bits(w, n);
            for &v in sector {
                let cols = bits(v, n);
                let sub = CMat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])]);
                out[(w, v)] = if rows.is_empty() { r(1.0) } else { linalg::det(&sub) };
            }
        }
    }
    Ok(out)
}

/// Gamma(log M) = exp(dGamma(log M)), through the eigendecomposition of M.
pub fn exponential_metric(m: &CMat) -> Result<CMat> {
    let n = m.nrows();
    if metric::positivity(m).1 != metric::Positivity::PositiveDefinite {
        return Err(Error::NotPositive);
    }
    guard(n, MAX_MODES)?;
    let log_m = linalg::herm_fn(m, f64::ln);
    let dg = d_gamma(&log_m)?;
    Ok(linalg::herm_fn(&dg, f64::exp))
}

/// Relative intertwining residuals of the minors metric for dGamma(h) and
/// for the number operator.
pub fn intertwines_second_quantized(h: &CMat, m: &CMat) -> Result<(f64, f64)> {
    let n = h.nrows();
    if m.shape() != (n, n) {
        return Err(Error::DimensionMismatch("h and M differ in size".into()));
    }
    if linalg::intertwining_residual(m, h) > 1e-9 {
        return Err(Error::NotIntertwiner(0));
    }
    let eta = second_quantized_metric(m)?;
    let dg = d_gamma(h)?;
    let num = number_operator(n)?;
    Ok((linalg::intertwining_residual(&eta, &dg), linalg::intertwining_residual(&eta, &num)))
}

/// One-based sorted site list to a bit mask.
pub fn mask_of(sites: &[usize], n: usize) -> Result<u64> {
    let mut mask = 0u64;
    for &s in sites {
        if s == 0 || s > n {
            return Err(Error::IndexOutOfRange(format!("site {s} outside 1..={n}")));
        }
        mask |= 1 << (s - 1);
    }
    Ok(mask)
}

pub fn sites_of(mask: u64) -> Vec<usize> {
    (0..64).filter(|&q| mask & (1 << q) != 0).map(|q| q + 1).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityReport {
    /// One-based sites.
    pub subsystem: Vec<usize>,
    /// dim ker M^{A^c A}
    pub k: usize,
    /// Kernel vectors in span{e_i : i in A} coordinates.
    pub kernel_basis: Vec<Vec<C64>>,
    pub extensively_local: bool,
    pub rule_class: Option<String>,
}

fn kernel_of(m: &CMat, mask: u64) -> (usize, CMat) {
    let n = m.nrows();
    let inside: Vec<usize> = (0..n).filter(|&q| mask & (1 << q) != 0).collect();
    let outside: Vec<usize> = (0..n).filter(|&q| mask & (1 << q) == 0).collect();
    if outside.is_empty() {
        return (n, CMat::identity(n, n));
    }
    let block = CMat::from_fn(outside.len(), inside.len(), |i, j| m[(outside[i], inside[j])]);
    if linalg::max_abs(&block) == 0.0 {
        let k = inside.len();
        return (k, CMat::identity(k, k));
    }
    let basis = linalg::null_space(&block, KERNEL_TOL);
    (basis.ncols(), basis)
}

fn k_of(m: &CMat, mask: u64) -> usize {
    kernel_of(m, mask).0
}

/// K(A) and a kernel basis; K of the full set is n.
pub fn local_kernel(m: &CMat, subsystem: &[usize]) -> Result<LocalityReport> {
    let n = m.nrows();
    let mask = mask_of(subsystem, n)?;
    if mask == 0 {
        return Err(Error::ParamViolation("subsystem must be nonempty".into()));
    }
    let (k, basis) = kernel_of(m, mask);
    let kernel_basis = (0..basis.ncols()).map(|c| basis.column(c).iter().copied().collect()).collect();
    Ok(LocalityReport { subsystem: sites_of(mask), k, kernel_basis, extensively_local: false, rule_class: None })
}

/// The involution f with M_ij != 0 iff i = j or i = f(j), if M has that shape.
pub fn associated_involution(m: &CMat) -> Option<Vec<usize>> {
    let n = m.nrows();
    let tol = 1e-12 * linalg::max_abs(m);
    let mut f: Vec<usize> = (0..n).collect();
    for i in 0..n {
        let partners: Vec<usize> = (0..n).filter(|&j| j != i && (m[(i, j)].norm() > tol || m[(j, i)].norm() > tol)).collect();
        match partners.as_slice() {
            [] => {}
            [j] => f[i] = *j,
            _ => return None,
        }
    }
    (0..n).all(|i| f[f[i]] == i).then_some(f)
}

/// K(A) > K(S) for every proper subset S. K is monotone under inclusion
/// (kernels of nested blocks embed), so the maximal proper subsets suffice.
pub fn extensively_local(m: &CMat, subsystem: &[usize]) -> Result<bool> {
    let n = m.nrows();
    let mask = mask_of(subsystem, n)?;
    if mask == 0 {
        return Err(Error::ParamViolation("subsystem must be nonempty".into()));
    }
    if let Some(f) = associated_involution(m) {
        return Ok(sites_of(mask).iter().all(|&s| mask & (1 << f[s - 1]) != 0));
    }
    if subsystem.len() > MAX_ENUMERATION {
        return Err(Error::SizeLimit(format!("|A| = {} exceeds {MAX_ENUMERATION}", subsystem.len())));
    }
    Ok(extensive_mask(m, mask))
}

fn extensive_mask(m: &CMat, mask: u64) -> bool {
    let k = k_of(m, mask);
    sites_of(mask).iter().all(|&s| k > k_of(m, mask & !(1 << (s - 1))))
}

/// Uniform chain with impurities Delta + i gamma and Delta - i gamma on the end sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FarImpurity {
    pub n: usize,
    pub delta: f64,
    pub gamma: f64,
    #[serde(default = "unit_hopping")]
    pub t: f64,
    /// Treat |z| = |Delta + i gamma| / |t| as exactly 1.
    #[serde(default)]
    pub unit_circle: bool,
}

fn unit_hopping() -> f64 {
    1.0
}

impl FarImpurity {
    pub fn z(&self) -> C64 {
        C64::new(self.delta, self.gamma) / self.t
    }

    /// The reduced metric; on the unit-circle flag z is rescaled to modulus one.
    pub fn metric(&self) -> Result<CMat> {
        let s = if self.unit_circle { 1.0 / self.z().norm().max(f64::MIN_POSITIVE) } else { 1.0 };
        metric::far_defect_matrix(self.n, s * self.delta, s * self.gamma, self.t)
    }

    pub fn hamiltonian(&self) -> Result<CMat> {
        metric::far_defect_hamiltonian(self.n, self.delta, self.gamma, self.t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifyMode {
    RuleBased,
    BruteForce,
}

/// Connected components of A as (first, last) one-based site pairs.
fn components(mask: u64, n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut s = 1;
    while s <= n {
        if mask & (1 << (s - 1)) != 0 {
            let start = s;
            while s < n && mask & (1 << s) != 0 {
                s += 1;
            }
            out.push((start, s));
        }
        s += 1;
    }
    out
}

/// Rule verdict with the label of the deciding rule.
pub fn rule_verdict(model: &FarImpurity, subsystem: &[usize]) -> Result<(bool, &'static str)> {
    let n = model.n;
    let mask = mask_of(subsystem, n)?;
    if mask == 0 {
        return Err(Error::ParamViolation("subsystem must be nonempty".into()));
    }
    if model.gamma == 0.0 {
        return Ok((true, "diagonal_metric"));
    }
    let full = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
    if mask == full {
        return Ok((true, "full_lattice"));
    }
    let comps = components(mask, n);
    let single = |c: &(usize, usize)| c.0 == c.1;
    let unit = model.unit_circle || (model.z().norm() - 1.0).abs() <= 1e-12;
    if unit {
        if !comps.iter().any(single) {
            return Ok((true, "unit_disk_no_single_site"));
        }
        let ends = 1u64 | (1 << (n - 1));
        if n > 1 && mask & ends == ends {
            let lone: u64 = comps.iter().filter(|c| single(c)).map(|c| 1u64 << (c.0 - 1)).sum();
            let rest = mask & !(lone & ends);
            if rest == 0 || !components(rest, n).iter().any(single) {
                return Ok((true, "unit_disk_end_pair"));
            }
        }
        return Ok((false, "unit_disk_single_site"));
    }
    let is_end_pair = |c: &(usize, usize)| (c.0 == 1 && c.1 == 2) || (c.0 == n - 1 && c.1 == n);
    let has = |s: isize| s >= 1 && s as usize <= n && mask & (1 << (s - 1)) != 0;
    let in_range = |s: isize| s >= 1 && s as usize <= n;
    if comps.len() == 1 {
        let c = comps[0];
        let len = c.1 - c.0 + 1;
        return Ok(if len >= 3 || is_end_pair(&c) { (true, "connected") } else { (false, "connected_small") });
    }
    let (left, right) = (comps[0], comps[comps.len() - 1]);
    if (single(&left) && left.0 != 1) || (single(&right) && right.0 != n) {
        return Ok((false, "edge_single_site"));
    }
    for (idx, c) in comps.iter().enumerate() {
        let len = c.1 - c.0 + 1;
        if len == 1 {
            let i = c.0 as isize;
            for s in [i - 2, i + 2] {
                if in_range(s) && !has(s) {
                    return Ok((false, "isolated_site_gap"));
                }
            }
        } else if len == 2 && !is_end_pair(c) {
            let near_left = idx > 0 && c.0 - comps[idx - 1].1 <= 2;
            let near_right = idx + 1 < comps.len() && comps[idx + 1].0 - c.1 <= 2;
            if !near_left && !near_right {
                return Ok((false, "isolated_pair_gap"));
            }
        }
    }
    Ok((true, "component_rules"))
}

/// Subsystems carrying extensively local observables, ordered by
/// cardinality and then by bit value.
pub fn classify_subsystems(model: &FarImpurity, mode: ClassifyMode) -> Result<Vec<Vec<usize>>> {
    let n = model.n;
    if n < 2 || n > MAX_ENUMERATION {
        return Err(Error::SizeLimit(format!("n = {n} outside 2..={MAX_ENUMERATION}")));
    }
    let mut masks: Vec<u64> = (1..(1u64 << n)).collect();
    masks.sort_by_key(|&m| (m.count_ones(), m));
    let keep: Vec<bool> = match mode {
        ClassifyMode::RuleBased => masks
            .iter()
            .map(|&m| rule_verdict(model, &sites_of(m)).map(|v| v.0))
            .collect::<Result<_>>()?,
        ClassifyMode::BruteForce => {
            let mm = model.metric()?;
            let mut k = vec![0usize; 1 << n];
            for m in 1..(1u64 << n) {
                k[m as usize] = k_of(&mm, m);
            }
            masks
                .iter()
                .map(|&m| sites_of(m).iter().all(|&s| k[m as usize] > k[(m & !(1 << (s - 1))) as usize]))
                .collect()
        }
    };
    Ok(masks.iter().zip(keep).filter(|(_, k)| *k).map(|(&m, _)| sites_of(m)).collect())
}

/// Kernel, verdict and rule label of one subsystem of the far-impurity chain.
pub fn locality_report(model: &FarImpurity, subsystem: &[usize], mode: ClassifyMode) -> Result<LocalityReport> {
    let m = model.metric()?;
    let mut rep = local_kernel(&m, subsystem)?;
    let (rule, label) = rule_verdict(model, subsystem)?;
    rep.extensively_local = match mode {
        ClassifyMode::RuleBased => rule,
        ClassifyMode::BruteForce => extensively_local(&m, subsystem)?,
    };
    rep.rule_class = Some(label.to_string());
    Ok(rep)
}

/// The n = 13 example subsystems: three with extensively local observables
/// (the first two only when |z| != 1) and three without.
pub fn example_regions_13() -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let positive = vec![vec![4, 5, 6, 8, 10, 11, 12], vec![1, 3, 4, 5], vec![6, 7, 8]];
    let negative = vec![vec![2, 3, 4, 8], vec![7], vec![5, 6]];
    (positive, negative)
}
