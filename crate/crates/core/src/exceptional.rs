//! Exceptional-point loci of two-parameter matrix families: discriminant
//! surfaces, contour tracing, singular points of the locus, Puiseux
//! exponents and the large-detuning asymptote.

use crate::error::{Error, Result};
use crate::lattice::{self, LatticeSpec, ModelPreset};
use crate::linalg::{self, c, CMat, C64};
use crate::poly::{self, ComplexPoly};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Contour points satisfy |D| <= CONTOUR_TOL * scale, see [`relative_discriminant`].
pub const CONTOUR_TOL: f64 = 1e-9;

/// A contour point must host an eigenvalue pair closer than PAIR_TOL * ||H||_F.
pub const PAIR_TOL: f64 = 1e-4;

pub const DEFAULT_RESOLUTION: usize = 256;

/// Samples on the circle used to count local branches.
pub const BRANCH_SAMPLES: usize = 2048;

/// Circle radius for branch counting, relative to the half extent of the box.
pub const BRANCH_RADIUS: f64 = 1e-3;

/// Admissible distance of a fitted log-log slope from 1/k.
pub const SLOPE_TOL: f64 = 0.05;

const PUISEUX_STEPS: usize = 8;
const PUISEUX_MIN: f64 = 1e-6;
const PUISEUX_MAX: f64 = 1e-3;
const RAY_MERGE: f64 = 0.35;
const CANDIDATE_GAP: f64 = 0.3;

/// The matrix at one parameter point, structured when possible.
#[derive(Debug, Clone)]
pub enum Realization {
    Spec(LatticeSpec),
    Dense(CMat),
}

impl Realization {
    pub fn matrix(&self) -> CMat {
        match self {
            Realization::Spec(s) => s.matrix(),
            Realization::Dense(h) => h.clone(),
        }
    }

    /// Monic characteristic polynomial; exact recurrence for specs,
    /// interpolation for dense matrices.
    pub fn char_poly(&self) -> ComplexPoly {
        match self {
            Realization::Spec(s) => lattice::char_poly(s),
            Realization::Dense(h) => lattice::char_poly_interpolated(h).monic(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Realization::Spec(s) => s.n(),
            Realization::Dense(h) => h.nrows(),
        }
    }
}

/// Axis-aligned parameter box [x0, x1] x [y0, y1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl ParamBox {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x0.is_finite() && x1.is_finite() && y0.is_finite() && y1.is_finite()) || x0 >= x1 || y0 >= y1 {
            return Err(Error::ParamViolation(format!("empty parameter box [{x0}, {x1}] x [{y0}, {y1}]")));
        }
        Ok(Self { x: [x0, x1], y: [y0, y1] })
    }

    pub fn square(half: f64) -> Self {
        Self { x: [-half, half], y: [-half, half] }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let sx = 1e-12 * (self.x[1] - self.x[0]);
        let sy = 1e-12 * (self.y[1] - self.y[0]);
        p[0] >= self.x[0] - sx && p[0] <= self.x[1] + sx && p[1] >= self.y[0] - sy && p[1] <= self.y[1] + sy
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.x[0] + self.x[1]), 0.5 * (self.y[0] + self.y[1])]
    }

    /// Half of the longer side.
    pub fn half_extent(&self) -> f64 {
        0.5 * (self.x[1] - self.x[0]).max(self.y[1] - self.y[0])
    }
}

type EvalFn = dyn Fn(f64, f64) -> Result<Realization> + Send + Sync;

/// A two-parameter matrix family. Parameters are labelled (x, y); the
/// defect families use (x, y) = (Delta, gamma) with z = Delta + i gamma.
#[derive(Clone)]
pub struct ParamFamily {
    label: String,
    bbox: ParamBox,
    size: usize,
    eval: Arc<EvalFn>,
}

impl fmt::Debug for ParamFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParamFamily")
            .field("label", &self.label)
            .field("bbox", &self.bbox)
            .field("size", &self.size)
            .finish()
    }
}

impl ParamFamily {
    /// The evaluation must be deterministic and reentrant. The matrix size
    /// is read off at the centre of the box.
    pub fn new<F>(label: impl Into<String>, bbox: ParamBox, eval: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Result<Realization> + Send + Sync + 'static,
    {
        let [x, y] = bbox.center();
        let size = eval(x, y)?.size();
        if size < 2 {
            return Err(Error::DimensionMismatch(format!("family matrices must be at least 2x2, got {size}")));
        }
        Ok(Self { label: label.into(), bbox, size, eval: Arc::new(eval) })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn bbox(&self) -> ParamBox {
        self.bbox
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn with_box(&self, bbox: ParamBox) -> Self {
        Self { bbox, ..self.clone() }
    }

    pub fn realize(&self, p: [f64; 2]) -> Result<Realization> {
        let out = (self.eval)(p[0], p[1])?;
        if out.size() != self.size {
            return Err(Error::DimensionMismatch(format!(
                "family size changed from {} to {} at ({}, {})",
                self.size,
                out.size(),
                p[0],
                p[1]
            )));
        }
        Ok(out)
    }

    pub fn matrix(&self, p: [f64; 2]) -> Result<CMat> {
        Ok(self.realize(p)?.matrix())
    }

    pub fn char_poly(&self, p: [f64; 2]) -> Result<ComplexPoly> {
        Ok(self.realize(p)?.char_poly())
    }

    /// [[i omega, t], [t, -i omega]] over (omega, t).
    pub fn qubit(bbox: ParamBox) -> Result<Self> {
        Self::new("qubit", bbox, |omega, t| {
            ModelPreset::Qubit { omega, t }.expand().map(Realization::Spec)
        })
    }

    /// Uniform open chain with z_m = Delta + i gamma and
    /// z_{n-m+1} = Delta - i gamma over (Delta, gamma).
    pub fn uniform_chain(n: usize, m: usize, t: f64, bbox: ParamBox) -> Result<Self> {
        ModelPreset::UniformChain { n, m, t, z_m: c(0.0, 0.0), z_mbar: c(0.0, 0.0) }.expand()?;
        Self::new(format!("uniform_chain(n={n}, m={m}, t={t})"), bbox, move |d, g| {
            ModelPreset::UniformChain { n, m, t, z_m: c(d, g), z_mbar: c(d, -g) }
                .expand()
                .map(Realization::Spec)
        })
    }

    /// Nearest-neighbour defect chain over (Delta, gamma).
    pub fn nearest_neighbour(t: Vec<C64>, outer: Vec<f64>, bbox: ParamBox) -> Result<Self> {
        let n = t.len() + 1;
        Self::new(format!("nearest_neighbour(n={n})"), bbox, move |delta, gamma| {
            ModelPreset::NearestNeighbourDefect { n, t: t.clone(), delta, gamma, outer: outer.clone() }
                .expand()
                .map(Realization::Spec)
        })
    }

    /// SSH chain with z_1 = Delta + i gamma and z_n = Delta - i gamma.
    pub fn ssh_edge(n: usize, t1: C64, t2: C64, t_l: C64, t_r: C64, bbox: ParamBox) -> Result<Self> {
        Self::new(format!("ssh_edge(n={n})"), bbox, move |d, g| {
            ModelPreset::SshEdgeDefect { n, t1, t2, t_l, t_r, z1: c(d, g), zn: c(d, -g) }
                .expand()
                .map(Realization::Spec)
        })
    }
}

/// (Re D, Im D) for D the discriminant of det(lambda I - H(p)).
pub fn discriminant_surface(family: &ParamFamily, p: [f64; 2]) -> Result<(f64, f64)> {
    if !family.bbox.contains(p) {
        return Err(Error::ParamViolation(format!("({}, {}) lies outside the family box", p[0], p[1])));
    }
    let d = disc_at(family, p)?;
    Ok((d.re, d.im))
}

fn disc_at(family: &ParamFamily, p: [f64; 2]) -> Result<C64> {
    poly::discriminant(&family.char_poly(p)?)
}

/// |D| divided by prod_{i<j} max(|l_i| + |l_j|, ||H||_F / n)^2, the size
/// D would have without cancellation.
pub fn relative_discriminant(family: &ParamFamily, p: [f64; 2]) -> Result<f64> {
    let s = Sample::at(family, p)?;
    Ok((s.d.norm().ln() - s.log_scale).exp())
}

/// Finite-difference gradient of Re D.
pub fn discriminant_gradient(family: &ParamFamily, p: [f64; 2]) -> Result<[f64; 2]> {
    let h = 1e-6 * family.bbox.half_extent().max(1e-3);
    let fx = disc_at(family, [p[0] + h, p[1]])?.re - disc_at(family, [p[0] - h, p[1]])?.re;
    let fy = disc_at(family, [p[0], p[1] + h])?.re - disc_at(family, [p[0], p[1] - h])?.re;
    Ok([fx / (2.0 * h), fy / (2.0 * h)])
}

#[derive(Debug, Clone)]
struct Sample {
    d: C64,
    eig: Vec<C64>,
    norm: f64,
    log_scale: f64,
}

impl Sample {
    fn at(family: &ParamFamily, p: [f64; 2]) -> Result<Self> {
        let real = family.realize(p)?;
        let h = real.matrix();
        let d = poly::discriminant(&real.char_poly())?;
        let eig = linalg::eigenvalues(&h)?;
        let norm = linalg::fro(&h);
        let log_scale = log_disc_scale(&eig, norm);
        Ok(Self { d, eig, norm, log_scale })
    }

    fn log_rho(&self) -> f64 {
        self.d.norm().ln() - self.log_scale
    }

    fn hosts_pair(&self) -> bool {
        crate::spectra::min_gap(&self.eig) <= PAIR_TOL * self.norm.max(f64::MIN_POSITIVE)
    }
}

fn log_disc_scale(eig: &[C64], norm: f64) -> f64 {
    let floor = (norm / eig.len().max(1) as f64).max(f64::MIN_POSITIVE);
    let mut acc = 0.0;
    for i in 0..eig.len() {
        for j in (i + 1)..eig.len() {
            acc += 2.0 * (eig[i].norm() + eig[j].norm()).max(floor).ln();
        }
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingularClass {
    Cusp,
    Acnode,
    Crunode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularPoint {
    pub point: [f64; 2],
    pub class: SingularClass,
    /// Puiseux exponent k along a generic direction.
    pub ep_order: u32,
    /// Size of the largest coalescing eigenvalue cluster (the mu_a jump).
    pub cluster_order: usize,
    pub eigenvalues: Vec<C64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Coalescence {
    Triple(C64),
    Pairs(C64, C64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    point: [f64; 2],
    guess: Coalescence,
    reach: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EPContour {
    /// Polylines of refined sign-change crossings of Re D.
    pub segments: Vec<Vec<[f64; 2]>>,
    /// Zeros where Re D touches zero without changing sign.
    pub touch_points: Vec<[f64; 2]>,
    pub singular_points: Vec<SingularPoint>,
    pub grid_resolution: usize,
    /// Crossings whose refinement failed.
    pub dropped: usize,
    #[serde(skip)]
    candidates: Vec<Candidate>,
}

impl EPContour {
    /// Every locus point: polyline vertices followed by touch points.
    pub fn points(&self) -> Vec<[f64; 2]> {
        self.segments.iter().flatten().chain(self.touch_points.iter()).copied().collect()
    }
}

struct Grid {
    res: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
    samples: Vec<Sample>,
}

impl Grid {
    fn build(family: &ParamFamily, res: usize) -> Result<Self> {
        let b = family.bbox;
        let xs: Vec<f64> = (0..=res).map(|i| b.x[0] + (b.x[1] - b.x[0]) * i as f64 / res as f64).collect();
        let ys: Vec<f64> = (0..=res).map(|j| b.y[0] + (b.y[1] - b.y[0]) * j as f64 / res as f64).collect();
        let samples = (0..(res + 1) * (res + 1))
            .into_par_iter()
            .map(|k| Sample::at(family, [xs[k % (res + 1)], ys[k / (res + 1)]]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { res, xs, ys, samples })
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.res + 1) + i
    }

    fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.xs[i], self.ys[j]]
    }

    fn positive(&self, i: usize, j: usize) -> bool {
        self.samples[self.idx(i, j)].d.re >= 0.0
    }
}

/// Edge keys: (0, i, j) joins (i, j)-(i+1, j); (1, i, j) joins (i, j)-(i, j+1).
type EdgeKey = (u8, usize, usize);

fn edge_ends(key: EdgeKey) -> ((usize, usize), (usize, usize)) {
    let (dir, i, j) = key;
    if dir == 0 {
        ((i, j), (i + 1, j))
    } else {
        ((i, j), (i, j + 1))
    }
}

fn lerp(a: [f64; 2], b: [f64; 2], s: f64) -> [f64; 2] {
    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Bisection on the sign of Re D between a and b.
fn refine_crossing(family: &ParamFamily, a: [f64; 2], b: [f64; 2], a_positive: bool) -> Result<[f64; 2]> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        if hi - lo <= 1e-16 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if (disc_at(family, lerp(a, b, mid))?.re >= 0.0) == a_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = lerp(a, b, 0.5 * (lo + hi));
    accept_point(family, p)
}

fn accept_point(family: &ParamFamily, p: [f64; 2]) -> Result<[f64; 2]> {
    let s = Sample::at(family, p)?;
    if s.log_rho() > CONTOUR_TOL.ln() {
        return Err(Error::NotConverged(format!("|D| not small at ({}, {})", p[0], p[1])));
    }
    if !s.hosts_pair() {
        return Err(Error::NotConverged(format!("no coalescing pair at ({}, {})", p[0], p[1])));
    }
    Ok(p)
}

/// Golden-section minimum of the relative discriminant on [a, b].
fn refine_touch(family: &ParamFamily, a: [f64; 2], b: [f64; 2]) -> Option<[f64; 2]> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let f = |s: f64| Sample::at(family, lerp(a, b, s)).map(|x| x.log_rho()).unwrap_or(f64::INFINITY);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if hi - lo <= 1e-15 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    accept_point(family, lerp(a, b, 0.5 * (lo + hi))).ok()
}

/// Marching squares on sign(Re D), crossings refined by bisection, plus
/// a line search for zeros of even order. Singular points are filled in
/// by [`singular_points`].
pub fn ep_locus(family: &ParamFamily, resolution: usize) -> Result<EPContour> {
    if resolution < 16 {
        return Err(Error::ParamViolation(format!("resolution must be at least 16, got {resolution}")));
    }
    let grid = Grid::build(family, resolution)?;
    let res = resolution;

    let mut keys: Vec<EdgeKey> = Vec::new();
    for j in 0..=res {
        for i in 0..=res {
            if i < res && grid.positive(i, j) != grid.positive(i + 1, j) {
                keys.push((0, i, j));
            }
            if j < res && grid.positive(i, j) != grid.positive(i, j + 1) {
                keys.push((1, i, j));
            }
        }
    }
    let refined: Vec<Option<[f64; 2]>> = keys
        .par_iter()
        .map(|&key| {
            let ((ia, ja), (ib, jb)) = edge_ends(key);
            refine_crossing(family, grid.point(ia, ja), grid.point(ib, jb), grid.positive(ia, ja)).ok()
        })
        .collect();
    let dropped = refined.iter().filter(|p| p.is_none()).count();
    let mut node_of: HashMap<EdgeKey, usize> = HashMap::new();
    let mut nodes: Vec<[f64; 2]> = Vec::new();
    for (key, p) in keys.iter().zip(&refined) {
        if let Some(p) = p {
            node_of.insert(*key, nodes.len());
            nodes.push(*p);
        }
    }

    let mut links: Vec<(usize, usize)> = Vec::new();
    for j in 0..res {
        for i in 0..res {
            let s = [grid.positive(i, j), grid.positive(i + 1, j), grid.positive(i + 1, j + 1), grid.positive(i, j + 1)];
            let edges = [(0u8, i, j), (1u8, i + 1, j), (0u8, i, j + 1), (1u8, i, j)];
            let crossing: Vec<usize> = (0..4).filter(|&e| s[e] != s[(e + 1) % 4]).collect();
            let pairs: Vec<(usize, usize)> = match crossing.len() {
                2 => vec![(crossing[0], crossing[1])],
                4 => {
                    let center = lerp(grid.point(i, j), grid.point(i + 1, j + 1), 0.5);
                    let center_positive = disc_at(family, center)?.re >= 0.0;
                    if center_positive == s[0] {
                        vec![(0, 1), (2, 3)]
                    } else {
                        vec![(3, 0), (1, 2)]
                    }
                }
                _ => vec![],
            };
            for (ea, eb) in pairs {
                if let (Some(&na), Some(&nb)) = (node_of.get(&edges[ea]), node_of.get(&edges[eb])) {
                    links.push((na, nb));
                }
            }
        }
    }
    let segments = chain(&nodes, &links);

    let mut triples: Vec<([f64; 2], [f64; 2])> = Vec::new();
    for j in 0..=res {
        for i in 0..=res {
            let here = grid.samples[grid.idx(i, j)].log_rho();
            let sign = grid.positive(i, j);
            if i > 0 && i < res {
                let (l, r) = (grid.idx(i - 1, j), grid.idx(i + 1, j));
                if grid.positive(i - 1, j) == sign
                    && grid.positive(i + 1, j) == sign
                    && here < grid.samples[l].log_rho()
                    && here < grid.samples[r].log_rho()
                {
                    triples.push((grid.point(i - 1, j), grid.point(i + 1, j)));
                }
            }
            if j > 0 && j < res {
                let (l, r) = (grid.idx(i, j - 1), grid.idx(i, j + 1));
                if grid.positive(i, j - 1) == sign
                    && grid.positive(i, j + 1) == sign
                    && here < grid.samples[l].log_rho()
                    && here < grid.samples[r].log_rho()
                {
                    triples.push((grid.point(i, j - 1), grid.point(i, j + 1)));
                }
            }
        }
    }
    let found: Vec<Option<[f64; 2]>> = triples.par_iter().map(|&(a, b)| refine_touch(family, a, b)).collect();
    let spacing = family.bbox.half_extent() / res as f64;
    let mut touch_points: Vec<[f64; 2]> = Vec::new();
    for p in found.into_iter().flatten() {
        if touch_points.iter().all(|q| dist(*q, p) > 1e-9 * spacing) {
            touch_points.push(p);
        }
    }

    let candidates = singular_candidates(&grid, spacing);
    let mut contour = EPContour {
        segments,
        touch_points,
        singular_points: Vec::new(),
        grid_resolution: resolution,
        dropped,
        candidates,
    };
    contour.singular_points = singular_points(family, &contour);
    Ok(contour)
}

fn chain(nodes: &[[f64; 2]], links: &[(usize, usize)]) -> Vec<Vec<[f64; 2]>> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes.len()];
    for (k, &(a, b)) in links.iter().enumerate() {
        adj[a].push((b, k));
        adj[b].push((a, k));
    }
    let mut used = vec![false; links.len()];
    let mut out = Vec::new();
    let starts: Vec<usize> = (0..nodes.len())
        .filter(|&v| adj[v].len() % 2 == 1)
        .chain(0..nodes.len())
        .collect();
    for s in starts {
        while adj[s].iter().any(|&(_, k)| !used[k]) {
            let mut line = vec![nodes[s]];
            let mut v = s;
            while let Some(&(w, k)) = adj[v].iter().find(|&&(_, k)| !used[k]) {
                used[k] = true;
                line.push(nodes[w]);
                v = w;
            }
            out.push(line);
        }
    }
    out
}

/// Second-smallest pairwise eigenvalue distance and the coalescence it
/// suggests: a triple when the two closest pairs share an eigenvalue,
/// two separate pairs otherwise.
fn coalescence_guess(eig: &[C64]) -> Option<(f64, Coalescence)> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..eig.len() {
        for j in (i + 1)..eig.len() {
            pairs.push(((eig[i] - eig[j]).norm(), i, j));
        }
    }
    if pairs.len() < 2 {
        return None;
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (_, a, b) = pairs[0];
    let (d2, c2, d) = pairs[1];
    if c2 == a || c2 == b || d == a || d == b {
        let third = if c2 == a || c2 == b { d } else { c2 };
        Some((d2, Coalescence::Triple((eig[a] + eig[b] + eig[third]) / 3.0)))
    } else {
        Some((d2, Coalescence::Pairs((eig[a] + eig[b]) * 0.5, (eig[c2] + eig[d]) * 0.5)))
    }
}

fn singular_candidates(grid: &Grid, spacing: f64) -> Vec<Candidate> {
    let res = grid.res;
    let guesses: Vec<Option<(f64, Coalescence)>> = grid
        .samples
        .iter()
        .map(|s| coalescence_guess(&s.eig).map(|(d, g)| (d / s.norm.max(f64::MIN_POSITIVE), g)))
        .collect();
    let mut out = Vec::new();
    for j in 1..res {
        for i in 1..res {
            let Some((v, guess)) = guesses[grid.idx(i, j)] else { continue };
            if v > CANDIDATE_GAP {
                continue;
            }
            let mut is_min = true;
            for dj in [-1isize, 0, 1] {
                for di in [-1isize, 0, 1] {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let k = grid.idx((i as isize + di) as usize, (j as isize + dj) as usize);
                    if let Some((w, _)) = guesses[k] {
                        if w < v {
                            is_min = false;
                        }
                    }
                }
            }
            if is_min {
                out.push(Candidate { point: grid.point(i, j), guess, reach: 4.0 * spacing });
            }
        }
    }
    out
}

/// Classified singular points of the locus: candidates from the grid are
/// refined by Gauss-Newton on the root-multiplicity equations (a triple
/// root, or two double roots), then classified by counting sign changes
/// of Re D on a small circle. Cusps are kept only with Puiseux order >= 3.
pub fn singular_points(family: &ParamFamily, contour: &EPContour) -> Vec<SingularPoint> {
    let found: Vec<Option<SingularPoint>> = contour
        .candidates
        .par_iter()
        .map(|cand| classify_candidate(family, cand))
        .collect();
    let tol = 1e-7 * family.bbox.half_extent();
    let mut out: Vec<SingularPoint> = Vec::new();
    for sp in found.into_iter().flatten() {
        if out.iter().all(|q| dist(q.point, sp.point) > tol) {
            out.push(sp);
        }
    }
    out.sort_by(|a, b| a.point[0].total_cmp(&b.point[0]).then(a.point[1].total_cmp(&b.point[1])));
    out
}

fn classify_candidate(family: &ParamFamily, cand: &Candidate) -> Option<SingularPoint> {
    let (p, coal) = refine_coalescence(family, cand.point, cand.guess, cand.reach)?;
    if !family.bbox.contains(p) {
        return None;
    }
    let sample = Sample::at(family, p).ok()?;
    if sample.log_rho() > CONTOUR_TOL.ln() {
        return None;
    }
    let h = 1e-6 * family.bbox.half_extent();
    let grad = discriminant_gradient(family, p).ok()?;
    let scale = sample.log_scale.exp();
    if grad[0].abs() * h > CONTOUR_TOL * scale || grad[1].abs() * h > CONTOUR_TOL * scale {
        return None;
    }
    let radius = BRANCH_RADIUS * family.bbox.half_extent();
    let class = branch_class(family, p, radius)?;
    let (cluster_order, eigenvalues) = match (class, coal) {
        (SingularClass::Cusp, Coalescence::Triple(l)) => (3, vec![l]),
        (SingularClass::Acnode | SingularClass::Crunode, Coalescence::Pairs(a, b)) => (2, vec![a, b]),
        _ => return None,
    };
    let ep_order = [0.61f64, 2.17, 4.03]
        .iter()
        .find_map(|&a| puiseux_fit(family, p, [a.cos(), a.sin()]).ok())
        .map(|f| f.exponent)?;
    if class == SingularClass::Cusp && ep_order < 3 {
        return None;
    }
    Some(SingularPoint { point: p, class, ep_order, cluster_order, eigenvalues })
}

/// Crossing directions of Re D = 0 on a circle around p, merged into rays.
fn branch_class(family: &ParamFamily, p: [f64; 2], radius: f64) -> Option<SingularClass> {
    let n = BRANCH_SAMPLES;
    let mut vals = Vec::with_capacity(n);
    for k in 0..n {
        let a = 2.0 * PI * k as f64 / n as f64;
        vals.push(disc_at(family, [p[0] + radius * a.cos(), p[1] + radius * a.sin()]).ok()?.re);
    }
    let crossings: Vec<f64> = (0..n)
        .filter(|&k| (vals[k] >= 0.0) != (vals[(k + 1) % n] >= 0.0))
        .map(|k| 2.0 * PI * (k as f64 + 0.5) / n as f64)
        .collect();
    if crossings.is_empty() {
        let lo = vals.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        let hi = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
        return (hi > 0.0 && lo > 1e-6 * hi).then_some(SingularClass::Acnode);
    }
    let mut rays = 0;
    for (k, &a) in crossings.iter().enumerate() {
        let prev = if k == 0 { crossings[crossings.len() - 1] - 2.0 * PI } else { crossings[k - 1] };
        if crossings.len() == 1 || a - prev > RAY_MERGE {
            rays += 1;
        }
    }
    let rays = rays.max(1);
    match (crossings.len(), rays) {
        (_, 1) => Some(SingularClass::Cusp),
        (4, 4) => Some(SingularClass::Crunode),
        _ => None,
    }
}

/// Gauss-Newton on p(l) = p'(l) = p''(l) = 0 (triple) or
/// p(l1) = p'(l1) = p(l2) = p'(l2) = 0 (two pairs) in the parameters and
/// the coalescing eigenvalues. The parameter Jacobian is by central
/// differences; the fixed point is exact regardless.
fn refine_coalescence(family: &ParamFamily, p0: [f64; 2], guess: Coalescence, reach: f64) -> Option<([f64; 2], Coalescence)> {
    let mut x: Vec<f64> = match guess {
        Coalescence::Triple(l) => vec![p0[0], p0[1], l.re, l.im],
        Coalescence::Pairs(a, b) => vec![p0[0], p0[1], a.re, a.im, b.re, b.im],
    };
    let triple = matches!(guess, Coalescence::Triple(_));
    let fd = 1e-7 * family.bbox.half_extent().max(1e-3);

    let derivs = |p: &ComplexPoly| {
        let d1 = p.derivative();
        let d2 = d1.derivative();
        let d3 = d2.derivative();
        [p.clone(), d1, d2, d3]
    };
    let rows = |x: &[f64]| -> Option<Vec<(usize, C64)>> {
        if triple {
            Some(vec![(0, c(x[2], x[3])), (1, c(x[2], x[3])), (2, c(x[2], x[3]))])
        } else {
            let (a, b) = (c(x[2], x[3]), c(x[4], x[5]));
            Some(vec![(0, a), (1, a), (0, b), (1, b)])
        }
    };
    let residual = |x: &[f64], scales: &[f64]| -> Option<Vec<C64>> {
        let ps = derivs(&family.char_poly([x[0], x[1]]).ok()?);
        Some(rows(x)?.iter().zip(scales).map(|(&(k, l), &s)| ps[k].eval(l) / s).collect())
    };
    let norm2 = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    let radius = linalg::fro(&family.matrix(p0).ok()?).max(f64::MIN_POSITIVE);
    let scales: Vec<f64> = {
        let ps = derivs(&family.char_poly(p0).ok()?);
        rows(&x)?.iter().map(|&(k, _)| ps[k].eval_scale(c(radius, 0.0)).max(f64::MIN_POSITIVE)).collect()
    };
    let mut last = f64::INFINITY;
    for _ in 0..100 {
        let ps = derivs(&family.char_poly([x[0], x[1]]).ok()?);
        let rs = rows(&x)?;

        let r0: Vec<C64> = rs.iter().zip(&scales).map(|(&(k, l), &s)| ps[k].eval(l) / s).collect();
        last = norm2(&r0);
        if last <= 1e-15 {
            break;
        }
        let m = r0.len();
        let nv = x.len();
        let mut jac = DMatrix::<f64>::zeros(2 * m, nv);
        for q in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[q] += fd;
            xm[q] -= fd;
            let (rp, rm) = (residual(&xp, &scales)?, residual(&xm, &scales)?);
            for i in 0..m {
                let d = (rp[i] - rm[i]) / (2.0 * fd);
                jac[(2 * i, q)] = d.re;
                jac[(2 * i + 1, q)] = d.im;
            }
        }
        for (i, &(k, l)) in rs.iter().enumerate() {
            let col = if triple || i < 2 { 2 } else { 4 };
            let dv = ps[k + 1].eval(l) / scales[i];
            let di = dv * c(0.0, 1.0);
            jac[(2 * i, col)] = dv.re;
            jac[(2 * i + 1, col)] = dv.im;
            jac[(2 * i, col + 1)] = di.re;
            jac[(2 * i + 1, col + 1)] = di.im;
        }
        let b = DVector::from_iterator(2 * m, r0.iter().flat_map(|z| [-z.re, -z.im]));
        let step = jac.svd(true, true).solve(&b, 1e-14).ok()?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + t * s).collect();
            if let Some(rt) = residual(&trial, &scales) {
                if norm2(&rt) < last || t < 1e-6 {
                    x = trial;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        let size = x.iter().map(|v| v.abs()).fold(1.0, f64::max);
        if step.norm() * t <= 1e-15 * size {
            break;
        }
    }
    let p = [x[0], x[1]];
    if last > 1e-9 || dist(p, p0) > reach {
        return None;
    }
    let coal = if triple {
        Coalescence::Triple(c(x[2], x[3]))
    } else {
        let (a, b) = (c(x[2], x[3]), c(x[4], x[5]));
        if (a - b).norm() <= 1e-6 * (1.0 + a.norm()) {
            return None;
        }
        Coalescence::Pairs(a, b)
    };
    Some((p, coal))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PuiseuxFit {
    pub exponent: u32,
    pub leading_coeff: f64,
    pub slope: f64,
    /// (theta, splitting radius) samples.
    pub samples: Vec<(f64, f64)>,
}

/// Fits |delta lambda| ~ c theta^{1/k} along p + theta * direction for
/// theta geometric in [1e-6, 1e-3]. At an EP the splitting is measured
/// from the cluster mean; elsewhere the closest eigenvalue is followed.
pub fn puiseux_fit(family: &ParamFamily, p: [f64; 2], direction: [f64; 2]) -> Result<PuiseuxFit> {
    let len = direction[0].hypot(direction[1]);
    if !(len > 0.0) || !len.is_finite() {
        return Err(Error::DegenerateInput("direction must be nonzero".into()));
    }
    let dir = [direction[0] / len, direction[1] / len];
    let h0 = family.matrix(p)?;
    let vals = linalg::eigenvalues(&h0)?;
    let norm = linalg::fro(&h0);
    let mut best = (f64::INFINITY, 0, 0);
    for i in 0..vals.len() {
        for j in (i + 1)..vals.len() {
            let d = (vals[i] - vals[j]).norm();
            if d < best.0 {
                best = (d, i, j);
            }
        }
    }
    let (_, a, b) = best;
    let group = linalg::clusters(&vals, PAIR_TOL * norm)
        .into_iter()
        .find(|g| g.contains(&a))
        .expect("every index has a cluster");
    let clustered = group.contains(&b);
    let center = if clustered { group.iter().map(|&i| vals[i]).sum::<C64>() / group.len() as f64 } else { vals[a] };
    let k_in = if clustered { group.len() } else { 1 };

    let mut samples = Vec::with_capacity(PUISEUX_STEPS);
    for s in 0..PUISEUX_STEPS {
        let theta = PUISEUX_MIN * (PUISEUX_MAX / PUISEUX_MIN).powf(s as f64 / (PUISEUX_STEPS - 1) as f64);
        let moved = linalg::eigenvalues(&family.matrix([p[0] + theta * dir[0], p[1] + theta * dir[1]])?)?;
        let mut dists: Vec<f64> = moved.iter().map(|l| (l - center).norm()).collect();
        dists.sort_by(f64::total_cmp);
        let split = dists[k_in - 1];
        if !(split > 0.0) {
            return Err(Error::FitRejected(format!("no splitting at theta = {theta:e}")));
        }
        samples.push((theta, split));
    }
    let n = samples.len() as f64;
    let (mx, my) = samples.iter().fold((0.0, 0.0), |(sx, sy), &(t, d)| (sx + t.ln() / n, sy + d.ln() / n));
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, d) in &samples {
        sxy += (t.ln() - mx) * (d.ln() - my);
        sxx += (t.ln() - mx).powi(2);
    }
    let slope = sxy / sxx;
    let k = (1.0 / slope).round();
    if !(1.0..=6.0).contains(&k) || (slope - 1.0 / k).abs() > SLOPE_TOL {
        return Err(Error::FitRejected(format!("log-log slope {slope:.4} matches no 1/k, k in 1..=6")));
    }
    let leading = (samples.iter().map(|&(t, d)| d.ln() - t.ln() / k).sum::<f64>() / n).exp();
    Ok(PuiseuxFit { exponent: k as u32, leading_coeff: leading, slope, samples })
}

/// Large-detuning EP of the m = 1 uniform chain, t^{n-1} / Delta^{n-2};
/// n = 2 returns |t| for every Delta.
pub fn ep_asymptote(n: usize, delta: f64, t: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::ParamViolation(format!("asymptote needs n >= 2, got {n}")));
    }
    if t == 0.0 || !t.is_finite() || !delta.is_finite() {
        return Err(Error::ParamViolation("asymptote needs finite Delta and t != 0".into()));
    }
    if n == 2 {
        return Ok(t.abs());
    }
    if delta.abs() / t.abs() < 5.0 {
        return Err(Error::OutOfRegime(format!("Delta/t = {} < 5", delta.abs() / t.abs())));
    }
    Ok(t.abs().powi(n as i32 - 1) / delta.abs().powi(n as i32 - 2))
}

/// Sign indicator Re((l_a - l_b)^2) of the closest eigenvalue pair:
/// positive while the pair is real-split, negative once it is complex.
fn pair_indicator(family: &ParamFamily, p: [f64; 2]) -> Result<f64> {
    let vals = linalg::eigenvalues(&family.matrix(p)?)?;
    let mut best = (f64::INFINITY, c(0.0, 0.0));
    for i in 0..vals.len() {
        for j in (i + 1)..vals.len() {
            let d = vals[i] - vals[j];
            if d.norm() < best.0 {
                best = (d.norm(), d * d);
            }
        }
    }
    Ok(best.1.re)
}

/// The y at which the closest eigenvalue pair turns from real-split to
/// complex along the vertical line x, by bisection on [y_lo, y_hi].
/// Works directly on eigenvalues, so it stays reliable where the
/// discriminant is swamped by cancellation (large detuning).
pub fn pair_breaking_threshold(family: &ParamFamily, x: f64, y_lo: f64, y_hi: f64) -> Result<f64> {
    let f_lo = pair_indicator(family, [x, y_lo])?;
    let f_hi = pair_indicator(family, [x, y_hi])?;
    if (f_lo >= 0.0) == (f_hi >= 0.0) {
        return Err(Error::DegenerateInput(format!("no pair breaking between y = {y_lo} and y = {y_hi}")));
    }
    let lo_positive = f_lo >= 0.0;
    let (mut lo, mut hi) = (y_lo, y_hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= 1e-15 * mid.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        if (pair_indicator(family, [x, mid])? >= 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
