//! Acceptance criteria 1-17. Each criterion prints one PASS/FAIL line;
//! criterion 17 is reported but never fails the run.

use nhspec::exceptional::{self, ParamBox, ParamFamily, Realization, SingularClass};
use nhspec::fermions::{self, ClassifyMode, FarImpurity};
use nhspec::lattice::{self, ClosedForm, LatticeSpec, ModelPreset};
use nhspec::linalg::{self, c, r, CMat, C64};
use nhspec::metric::{self, NnDefect, Positivity};
use nhspec::poly::{self, ChebKind, ComplexPoly};
use nhspec::spectra::{self, PtClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rand_c(rng: &mut ChaCha8Rng, s: f64) -> C64 {
    c(rng.random_range(-s..s), rng.random_range(-s..s))
}

fn rand_mat(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    CMat::from_fn(n, n, |_, _| rand_c(rng, 1.0))
}

/// Admissible nearest-neighbour spec: t_j conj(t_{n-1-j}) > 0, random
/// central hopping phase, gamma = ratio * |t_m|.
fn nn_spec(rng: &mut ChaCha8Rng, n: usize, ratio: f64) -> LatticeSpec {
    let m = n / 2;
    let mut t = vec![r(0.0); n - 1];
    for j in 0..m - 1 {
        let phase = rng.random_range(-PI..PI);
        t[j] = C64::from_polar(rng.random_range(0.4..1.6), phase);
        t[n - 2 - j] = C64::from_polar(rng.random_range(0.4..1.6), phase);
    }
    t[m - 1] = C64::from_polar(rng.random_range(0.4..1.6), rng.random_range(-PI..PI));
    let outer = (0..m - 1).map(|_| rng.random_range(-1.0..1.0)).collect();
    let delta = rng.random_range(-1.0..1.0);
    let gamma = ratio * t[m - 1].norm();
    ModelPreset::NearestNeighbourDefect { n, t, delta, gamma, outer }.expand().unwrap()
}

fn dense_det(h: &CMat, l: C64) -> C64 {
    let n = h.nrows();
    linalg::det(&(CMat::identity(n, n) * l - h))
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

fn c1_qubit_spectrum() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..10 {
        for j in 0..10 {
            let (omega, t) = (2.0 * i as f64 / 9.0, 2.0 * j as f64 / 9.0);
            let h = ModelPreset::Qubit { omega, t }.expand().unwrap().matrix();
            let got = spectra::eig(&h, spectra::CLUSTER_TOL).map_err(|e| e.to_string())?.multiset();
            let e = r(t * t - omega * omega).sqrt();
            worst = worst.max(linalg::multiset_distance(&got, &[e, -e]));
        }
    }
    ensure!(worst <= 1e-10, "max deviation {worst:e}");
    Ok(format!("100 grid points, max deviation {worst:.1e}"))
}

fn c2_maximal_breaking() -> Outcome {
    let mut g = rng(2);
    let sizes = [4, 6, 8, 10, 12];
    for k in 0..50 {
        let n = sizes[k % 5];
        let ratio = g.random_range(0.0..0.999);
        let below = nn_spec(&mut g, n, ratio).matrix();
        let norm = linalg::spectral_norm(&below);
        let im = spectra::max_imag(&linalg::eigenvalues(&below).map_err(|e| e.to_string())?);
        ensure!(im <= 1e-8 * norm, "draw {k} n={n}: unbroken side has |Im| = {im:e}");
        let ratio = g.random_range(1.001..3.0);
        let above = nn_spec(&mut g, n, ratio).matrix();
        let norm = linalg::spectral_norm(&above);
        let vals = linalg::eigenvalues(&above).map_err(|e| e.to_string())?;
        let least = vals.iter().map(|v| v.im.abs()).fold(f64::INFINITY, f64::min);
        ensure!(least > 1e-6 * norm, "draw {k} n={n}: broken side has |Im| = {least:e}");
    }
    Ok("50 admissible specs on each side of |gamma| = |t_m|".into())
}

fn c3_ep2_structure() -> Outcome {
    let mut g = rng(3);
    for n in [4, 6, 8] {
        for _ in 0..5 {
            let h = nn_spec(&mut g, n, 1.0).matrix();
            let rep = spectra::eig(&h, spectra::CLUSTER_TOL).map_err(|e| e.to_string())?;
            ensure!(
                rep.eigenvalues.iter().all(|e| (e.algebraic_mult, e.geometric_mult) == (2, 1)),
                "n={n}: {:?}",
                rep.eigenvalues.iter().map(|e| (e.algebraic_mult, e.geometric_mult)).collect::<Vec<_>>()
            );
        }
    }
    Ok("every eigenvalue (2,1) for n in {4,6,8}".into())
}

fn check_closed(preset: &ModelPreset) -> Result<f64, String> {
    let ClosedForm::Spectrum(v) = lattice::closed_form_spectrum(preset) else {
        return Err(format!("no closed form for {preset:?}"));
    };
    let raw = linalg::eigenvalues(&preset.expand().unwrap().matrix()).map_err(|e| e.to_string())?;
    let dense = linalg::merge_clusters(&raw, 1e-6);
    let d = linalg::multiset_distance(&v, &dense);
    if d > 1e-8 {
        return Err(format!("{preset:?}: distance {d:e}"));
    }
    Ok(d)
}

fn c4_closed_forms() -> Outcome {
    let t = 1.3;
    let mut worst = 0.0f64;
    let mut count = 0;
    for n in [6usize, 8, 10] {
        let m = n / 2;
        let rows = [
            (1, c(0.4, 0.9), c(0.4, 0.9).inv() * t * t),
            (1, r(t), r(0.0)),
            (1, r(0.0), r(-t)),
            (1, r(t), r(-t)),
            (m, c(0.0, t), c(0.0, -t)),
            (m, C64::from_polar(t, PI / 3.0), C64::from_polar(t, -PI / 3.0)),
            (m, C64::from_polar(t, 2.0 * PI / 3.0), C64::from_polar(t, -2.0 * PI / 3.0)),
            (m, c(-t, t), c(-t, -t)),
            (m, c(t, t), c(t, -t)),
        ];
        for (m, z_m, z_mbar) in rows {
            worst = worst.max(check_closed(&ModelPreset::UniformChain { n, m, t, z_m, z_mbar })?);
            count += 1;
        }
        let (t1, t2, t_l, t_r, z1) = (r(1.0), r(0.6), r(0.3), r(-0.3), c(0.2, 0.5));
        let zn = (t2 * t2 + t_l * t_r) / z1;
        worst = worst.max(check_closed(&ModelPreset::SshEdgeDefect { n, t1, t2, t_l, t_r, z1, zn })?);
        count += 1;
    }
    Ok(format!("{count} closed-form spectra, max distance {worst:.1e}"))
}

fn c5_char_poly_forms() -> Outcome {
    let mut g = rng(5);
    let mut failures = Vec::new();
    for draw in 0..20 {
        let n = 4 + draw % 8;
        let preset = ModelPreset::SshEdgeDefect {
            n,
            t1: r(g.random_range(0.2..2.0)),
            t2: r(g.random_range(0.2..2.0)),
            t_l: rand_c(&mut g, 1.0),
            t_r: rand_c(&mut g, 1.0),
            z1: rand_c(&mut g, 1.0),
            zn: rand_c(&mut g, 1.0),
        };
        let spec = preset.expand().unwrap();
        let p = lattice::char_poly(&spec);
        let h = spec.matrix();
        for _ in 0..10 {
            let l = rand_c(&mut g, 2.0);
            let e = rel(p.eval(l), dense_det(&h, l));
            if e > 1e-9 {
                failures.push(format!("ssh n={n} rel {e:.1e}"));
            }
        }
    }
    let mut ring_worst = 0.0f64;
    for draw in 0..20 {
        let n = 3 + draw % 8;
        let (an, bn) = (rand_c(&mut g, 1.0), rand_c(&mut g, 1.0));
        let h = ModelPreset::Ring { n, alpha_n: an, beta_n: bn }.expand().unwrap().matrix();
        let ni = n as i64;
        for _ in 0..10 {
            let l = rand_c(&mut g, 2.0);
            let u = |k: i64| poly::cheb_eval(ChebKind::Second, k, l / 2.0).unwrap();
            let closed = u(ni) + an * bn * u(ni - 2) + an + bn;
            ring_worst = ring_worst.max(rel(closed, dense_det(&h, l)));
        }
    }
    if ring_worst > 1e-9 {
        failures.push(format!("closed-form ring determinant off by rel {ring_worst:.1e}"));
    }
    ensure!(failures.is_empty(), "{}", failures.join("; "));
    Ok("SSH table and ring determinant match dense determinants".into())
}

fn zero_detuning_crossings(n: usize) -> Result<Vec<f64>, String> {
    let fam = ParamFamily::uniform_chain(n, 1, 1.0, ParamBox::new(-0.5, 0.5, 0.05, 1.95).unwrap()).map_err(|e| e.to_string())?;
    let contour = exceptional::ep_locus(&fam, 32).map_err(|e| e.to_string())?;
    Ok(contour.points().into_iter().filter(|p| p[0].abs() < 1e-14).map(|p| p[1]).collect())
}

fn c6_uniform_ep_contour() -> Outcome {
    let mut failures = Vec::new();
    for n in [3usize, 4, 5, 6, 7, 8, 9, 10, 11] {
        let target = if n % 2 == 1 { (1.0 + 1.0 / n as f64).sqrt() } else { 1.0 };
        let ys = zero_detuning_crossings(n)?;
        let nearest = ys.iter().copied().min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()));
        match nearest {
            Some(y) if (y - target).abs() <= 1e-6 => {}
            Some(y) => failures.push(format!("n={n}: traced {y:.9} vs {target:.9}")),
            None => failures.push(format!("n={n}: no crossing")),
        }
    }
    ensure!(failures.is_empty(), "{}", failures.join("; "));
    Ok("gamma_EP/t matches at all n".into())
}

fn three_site(bbox: ParamBox) -> ParamFamily {
    ParamFamily::uniform_chain(3, 1, 1.0, bbox).unwrap()
}

fn c7_cusp_correspondence() -> Outcome {
    let fam = three_site(ParamBox::square(3.0));
    let contour = exceptional::ep_locus(&fam, 64).map_err(|e| e.to_string())?;
    let mut sp = exceptional::singular_points(&fam, &contour);
    sp.sort_by(|a, b| a.point[1].total_cmp(&b.point[1]));
    ensure!(sp.len() == 2, "{} singular points", sp.len());
    let s2 = 2f64.sqrt();
    for (s, y) in sp.iter().zip([-s2, s2]) {
        ensure!(s.point[0].abs() < 1e-9 && (s.point[1] - y).abs() < 1e-9, "singular point at {:?}", s.point);
        ensure!(s.class == SingularClass::Cusp, "{:?} classified {:?}", s.point, s.class);
        let fit = exceptional::puiseux_fit(&fam, s.point, [0.6f64.cos(), 0.6f64.sin()]).map_err(|e| e.to_string())?;
        ensure!(fit.exponent == 3, "k = {} at {:?}", fit.exponent, s.point);
    }
    let mut checked = 0;
    for p in contour.points() {
        if sp.iter().any(|s| (s.point[0] - p[0]).hypot(s.point[1] - p[1]) < 0.1) {
            continue;
        }
        let grad = exceptional::discriminant_gradient(&fam, p).map_err(|e| e.to_string())?;
        let fit = exceptional::puiseux_fit(&fam, p, grad).map_err(|e| format!("{p:?}: {e}"))?;
        ensure!(fit.exponent == 2 && (fit.slope - 0.5).abs() <= 0.05, "{p:?}: k={} slope {}", fit.exponent, fit.slope);
        checked += 1;
    }
    Ok(format!("cusps at (0, +-sqrt2) with k=3; {checked} locus samples k=2"))
}

fn c8_acnode_crunode() -> Outcome {
    let fam = ParamFamily::uniform_chain(5, 2, 1.0, ParamBox::new(-1.5, 1.5, 0.1, 3.0).unwrap()).map_err(|e| e.to_string())?;
    let contour = exceptional::ep_locus(&fam, 48).map_err(|e| e.to_string())?;
    let s3 = 3f64.sqrt();
    for (y, class) in [(s3 - 1.0, SingularClass::Crunode), (s3 + 1.0, SingularClass::Acnode)] {
        let hit = contour.singular_points.iter().find(|s| s.point[0].abs() < 1e-8 && (s.point[1] - y).abs() < 1e-8);
        ensure!(hit.map(|s| s.class) == Some(class), "expected {class:?} at (0, {y}); found {:?}", contour.singular_points);
        let vals = linalg::eigenvalues(&fam.matrix([0.0, y]).unwrap()).map_err(|e| e.to_string())?;
        let least = vals.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        ensure!(least <= 1e-8, "0 not in spectrum at (0, {y}): min |l| = {least:e}");
    }
    Ok("crunode at (sqrt3-1)i, acnode at (sqrt3+1)i, 0 in spectrum at both".into())
}

fn c9_large_detuning_slope() -> Outcome {
    let mut report = Vec::new();
    for n in [3usize, 4, 5] {
        let fam = ParamFamily::uniform_chain(n, 1, 1.0, ParamBox::new(5.0, 200.0, 0.0, 1.0).unwrap()).map_err(|e| e.to_string())?;
        let mut pts = Vec::new();
        for k in 0..9 {
            let d = 10f64 * 10f64.powf(k as f64 / 8.0);
            let guess = exceptional::ep_asymptote(n, d, 1.0).map_err(|e| e.to_string())?;
            let y = exceptional::pair_breaking_threshold(&fam, d, 0.3 * guess, 3.0 * guess).map_err(|e| e.to_string())?;
            pts.push((d.ln(), y.ln()));
        }
        let k = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / k, pts.iter().map(|p| p.1).sum::<f64>() / k);
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        let want = -(n as f64 - 2.0);
        ensure!((slope - want).abs() <= 0.05, "n={n}: slope {slope:.4} vs {want}");
        report.push(format!("n={n}: {slope:.3}"));
    }
    Ok(format!("log-log slopes {}", report.join(", ")))
}

fn c10_positivity_boundaries() -> Outcome {
    let mut g = rng(10);
    for n in [4, 6, 8, 10] {
        for _ in 0..3 {
            let ratio = g.random_range(0.1..0.9);
            let spec = nn_spec(&mut g, n, ratio);
            let nn = NnDefect::new(&spec).map_err(|e| e.to_string())?;
            let (tm, gamma) = (nn.t_m(), nn.gamma);
            let re = |modulus: f64| (modulus * modulus - gamma * gamma).sqrt();
            let verdict = |x: f64| metric::nn_defect_metric(&spec, c(x, gamma)).map(|rep| rep.positivity);
            let below = verdict(re(tm * (1.0 - 1e-6))).map_err(|e| e.to_string())?;
            let at = verdict(re(tm)).map_err(|e| e.to_string())?;
            let above = verdict(re(tm * (1.0 + 1e-6))).map_err(|e| e.to_string())?;
            ensure!(below == Positivity::PositiveDefinite, "n={n}: below boundary {below:?}");
            ensure!(at == Positivity::PositiveSemidefinite { kernel_dim: n / 2 }, "n={n}: at boundary {at:?}");
            ensure!(above == Positivity::Indefinite, "n={n}: above boundary {above:?}");
        }
    }
    for n in (4..=12).step_by(2) {
        for gamma in [-0.99, -0.5, 0.0, 0.3, 0.7, 0.99] {
            let rep = metric::far_defect_metric(n, 0.0, gamma, 1.0).map_err(|e| e.to_string())?;
            ensure!(rep.positivity == Positivity::PositiveDefinite, "far defect n={n} gamma={gamma}: {:?}", rep.positivity);
        }
        let rep = metric::far_defect_metric(n, 0.0, 1.0, 1.0).map_err(|e| e.to_string())?;
        let ev = linalg::herm_eigenvalues(&rep.eta);
        ensure!(ev[..n - 1].iter().all(|x| x.abs() <= 1e-8) && (ev[n - 1] - n as f64).abs() <= 1e-8, "far defect n={n}: {ev:?}");
    }
    Ok("nn verdict flips at |Z| = |t_m|; far-defect boundary spectrum {0^(n-1), n}".into())
}

fn four_by_four(t: f64, g: f64) -> Result<metric::RepPair, String> {
    let h1 = CMat::from_row_slice(2, 2, &[c(0.0, g), r(1.0), r(1.0), c(0.0, -g)]);
    let h2 = CMat::from_row_slice(2, 2, &[r(g), c(0.0, -1.0), c(0.0, 1.0), r(g)]);
    let m = CMat::from_row_slice(2, 2, &[r(1.0), c(0.0, -g), c(0.0, g), r(1.0)]);
    let mut a = CMat::zeros(4, 4);
    for (i, j) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
        a[(i, j)] = r(t);
    }
    metric::rep_generate(&linalg::exchange(2), &[h1, h2], &m, &a).map_err(|e| e.to_string())
}

fn c11_intertwining_residuals() -> Outcome {
    let mut g = rng(11);
    let mut residuals: Vec<(String, f64)> = Vec::new();
    let mut push = |label: &str, res: f64| residuals.push((label.to_string(), res));
    for k in 0..100 {
        let n = 2 * (2 + k % 5);
        let ratio = g.random_range(-0.95..0.95);
        let spec = nn_spec(&mut g, n, ratio);
        let nn = NnDefect::new(&spec).map_err(|e| e.to_string())?;
        let x = g.random_range(-0.9..0.9) * (nn.t_m().powi(2) - nn.gamma.powi(2)).sqrt();
        push("nn_defect_metric", metric::nn_defect_metric(&spec, c(x, nn.gamma)).map_err(|e| e.to_string())?.intertwining_residual);
    }
    for k in 0..50 {
        let n = 3 + k % 6;
        let s = rand_mat(&mut g, n) + CMat::identity(n, n) * r(2.0);
        let d = linalg::diag(&(0..n).map(|_| r(g.random_range(-3.0..3.0))).collect::<Vec<_>>());
        let h = &s * d * linalg::inverse(&s).unwrap();
        let w: Vec<f64> = (0..n).map(|_| g.random_range(0.1..3.0)).collect();
        push("general_metric_family", metric::general_metric_family(&h, &w).map_err(|e| e.to_string())?.intertwining_residual);
    }
    for k in 0..50 {
        let n = 2 + k % 11;
        let rep = metric::far_defect_metric(n, g.random_range(-2.0..2.0), g.random_range(-2.0..2.0), g.random_range(0.5..1.5))
            .map_err(|e| e.to_string())?;
        push("far_defect_metric", rep.intertwining_residual);
    }
    for _ in 0..40 {
        let alpha = [g.random_range(-1.0..1.0), g.random_range(-1.0..1.0), g.random_range(-1.0..1.0)];
        let mut beta = [g.random_range(-1.0..1.0), g.random_range(-1.0..1.0), g.random_range(-1.0..1.0)];
        let aa: f64 = alpha.iter().map(|x| x * x).sum();
        let ab: f64 = alpha.iter().zip(&beta).map(|(x, y)| x * y).sum();
        for (b, a) in beta.iter_mut().zip(&alpha) {
            *b -= ab / aa * a;
        }
        let rep = metric::qubit_intertwiner(alpha, beta, g.random_range(-1.0..1.0), g.random_range(0.1..2.0)).map_err(|e| e.to_string())?;
        push("qubit_intertwiner", rep.intertwining_residual);
    }
    for k in 0..30 {
        let size = [4, 6, 8][k % 3];
        let p = metric::pencil_metric(&metric::toeplitz(size), &lattice::stagger(size), g.random_range(-0.3..0.3), &CMat::identity(size, size))
            .map_err(|e| e.to_string())?;
        push("pencil_metric", p.report.intertwining_residual);
    }
    for _ in 0..30 {
        let pair = four_by_four(g.random_range(0.2..3.0), g.random_range(-0.95..0.95))?;
        push("rep_generate", pair.report.intertwining_residual);
    }
    for k in 0..20 {
        let n = 3 + k % 4;
        let a = rand_mat(&mut g, n);
        let gh = (&a + a.adjoint()) * r(0.5);
        let b = rand_mat(&mut g, n);
        let eta = &b * b.adjoint() + CMat::identity(n, n);
        let h = &gh * &eta;
        let rep = metric::intertwiner_family(&eta, &h, (k % 3) as u32).map_err(|e| e.to_string())?;
        push("intertwiner_family", rep.intertwining_residual);
    }
    let (label, worst) = residuals.iter().cloned().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    ensure!(residuals.len() >= 300, "only {} pairs", residuals.len());
    ensure!(worst <= 1e-8, "{label}: residual {worst:e}");
    Ok(format!("{} pairs, max residual {worst:.1e}", residuals.len()))
}

fn c12_equivalent_hamiltonian() -> Outcome {
    let mut g = rng(12);
    for k in 0..20 {
        let n = 2 * (2 + k % 5);
        let ratio = g.random_range(-0.9..0.9);
        let spec = nn_spec(&mut g, n, ratio);
        let nn = NnDefect::new(&spec).map_err(|e| e.to_string())?;
        let x = g.random_range(-0.8..0.8) * (nn.t_m().powi(2) - nn.gamma.powi(2)).sqrt();
        let (h, _) = metric::equiv_hermitian(&spec, c(x, nn.gamma)).map_err(|e| e.to_string())?;
        let herm = linalg::fro(&(&h - h.adjoint())) / linalg::fro(&h);
        ensure!(herm <= 1e-9, "draw {k}: hermiticity {herm:e}");
        let d = linalg::multiset_distance(&linalg::eigenvalues(&h).unwrap(), &linalg::eigenvalues(&spec.matrix()).unwrap());
        ensure!(d <= 1e-8, "draw {k}: spectra differ by {d:e}");
        for i in 0..n {
            for j in 0..n {
                ensure!(i.abs_diff(j) <= 1 || h[(i, j)].norm() <= 1e-12, "draw {k}: h[{i},{j}] = {}", h[(i, j)]);
            }
        }
    }
    Ok("20 specs: Hermitian, isospectral, tridiagonal".into())
}

fn c13_second_quantization() -> Outcome {
    let mut g = rng(13);
    for k in 0..25 {
        let n = 1 + k % 4;
        let a = rand_mat(&mut g, n);
        let m = &a * a.adjoint() + CMat::identity(n, n) * r(0.2);
        let minors = fermions::second_quantized_metric(&m).map_err(|e| e.to_string())?;
        let expo = fermions::exponential_metric(&m).map_err(|e| e.to_string())?;
        let d = linalg::max_abs(&(&minors - &expo));
        ensure!(d <= 1e-8, "n={n}: minors vs exponential {d:e}");
    }
    let a = rand_mat(&mut g, 3);
    let h = (&a + a.adjoint()) * r(0.5);
    let ev = linalg::herm_eigenvalues(&h);
    let mut sums: Vec<f64> = (0..8usize).map(|s| (0..3).filter(|&q| s & (1 << q) != 0).map(|q| ev[q]).sum()).collect();
    sums.sort_by(f64::total_cmp);
    let got = linalg::herm_eigenvalues(&fermions::d_gamma(&h).map_err(|e| e.to_string())?);
    let d = got.iter().zip(&sums).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    ensure!(d <= 1e-10, "dGamma subset sums off by {d:e}");
    for n in 1..=8 {
        let (a, _) = fermions::jordan_wigner(n).map_err(|e| e.to_string())?;
        let res = fermions::car_residual(&a);
        ensure!(res <= 1e-12, "CAR n={n}: {res:e}");
    }
    Ok("minors = exp(dGamma(log M)), subset sums, CAR n <= 8".into())
}

fn c14_locality_classification() -> Outcome {
    let mut g = rng(14);
    for n in [6usize, 8, 10] {
        let mut models = Vec::new();
        while models.len() < 5 {
            let (delta, gamma): (f64, f64) = (g.random_range(-1.5..1.5), g.random_range(0.2..1.5));
            if (delta.hypot(gamma) - 1.0).abs() > 0.05 {
                models.push(FarImpurity { n, delta, gamma, t: 1.0, unit_circle: false });
            }
        }
        models.push(FarImpurity { n, delta: 0.6, gamma: 0.8, t: 1.0, unit_circle: true });
        for model in models {
            let rules = fermions::classify_subsystems(&model, ClassifyMode::RuleBased).map_err(|e| e.to_string())?;
            let brute = fermions::classify_subsystems(&model, ClassifyMode::BruteForce).map_err(|e| e.to_string())?;
            ensure!(rules == brute, "n={n} {model:?}: rule-based and brute-force classifications differ");
        }
    }
    let (pos, neg) = fermions::example_regions_13();
    let model = FarImpurity { n: 13, delta: 0.4, gamma: 0.6, t: 1.0, unit_circle: false };
    let m = model.metric().map_err(|e| e.to_string())?;
    for a in &pos {
        ensure!(fermions::extensively_local(&m, a).map_err(|e| e.to_string())?, "{a:?} should carry observables");
    }
    for a in &neg {
        ensure!(!fermions::extensively_local(&m, a).map_err(|e| e.to_string())?, "{a:?} should carry none");
    }
    Ok("rules = brute force for n in {6,8,10}; n=13 example regions classified".into())
}

/// The 4x4 example as a two-parameter family over (t, gamma).
fn four_by_four_family() -> ParamFamily {
    ParamFamily::new("four_by_four", ParamBox::new(0.0, 4.0, 0.0, 4.0).unwrap(), |t, g| {
        four_by_four(t, g).map(|p| Realization::Dense(p.h)).map_err(nhspec::error::Error::ParamViolation)
    })
    .unwrap()
}

/// Positive roots T = t^2 of the EP curve at fixed gamma.
fn ep_curve_t(g: f64) -> Vec<f64> {
    let g2 = g * g;
    let coeffs = [
        -4.0 * g2 * g2 * (g2 - 1.0).powi(3),
        -4.0 * g2 * (g2 - 4.0) * (g2 - 1.0).powi(2),
        16.0 - 40.0 * g2 + 45.0 * g2 * g2 - 22.0 * g2.powi(3) + g2.powi(4),
        4.0 * g2 * (6.0 - 5.0 * g2),
        4.0 * (g2 - 2.0).powi(2),
    ];
    let p = ComplexPoly::from_real(&coeffs);
    poly::roots(&p, 1e-12)
        .unwrap_or_default()
        .into_iter()
        .filter(|x| x.im.abs() <= 1e-9 * x.norm().max(1.0) && x.re > 1e-9)
        .map(|x| x.re.sqrt())
        .collect()
}

fn c15_four_by_four() -> Outcome {
    let mut g = rng(15);
    for _ in 0..50 {
        let (t, gamma) = (g.random_range(0.1..3.0), g.random_range(-0.999..0.999));
        let pair = four_by_four(t, gamma)?;
        let rep = spectra::eig(&pair.h, spectra::CLUSTER_TOL).map_err(|e| e.to_string())?;
        let im = spectra::max_imag(&rep.multiset());
        ensure!(im <= 1e-8 * linalg::spectral_norm(&pair.h), "t={t} gamma={gamma}: |Im| = {im:e}");
    }
    let fam = four_by_four_family();
    let mut points = Vec::new();
    let mut k = 0;
    while points.len() < 10 && k < 400 {
        let gamma = 1.0 + 2.0 * (k as f64 + 0.5) / 40.0;
        k += 1;
        if let Some(&t) = ep_curve_t(gamma).first() {
            points.push([t, gamma]);
        }
    }
    ensure!(points.len() == 10, "only {} curve points found", points.len());
    for p in &points {
        let d = exceptional::relative_discriminant(&fam, *p).map_err(|e| e.to_string())?;
        ensure!(d <= 1e-6, "curve point {p:?}: relative discriminant {d:e}");
    }
    Ok("50 real spectra; discriminant vanishes at 10 EP-curve points".into())
}

fn c16_inclusion_theorems() -> Outcome {
    let mut g = rng(16);
    for k in 0..100 {
        let h = rand_mat(&mut g, 6) * r(2.0);
        let gers = spectra::gershgorin(&h);
        let cass = spectra::brauer_cassini(&h).map_err(|e| e.to_string())?;
        for v in linalg::eigenvalues(&h).map_err(|e| e.to_string())? {
            ensure!(spectra::union_contains(&gers, v, 1e-9), "matrix {k}: {v} outside Gershgorin union");
            ensure!(spectra::union_contains(&cass, v, 1e-9), "matrix {k}: {v} outside Brauer-Cassini union");
        }
    }
    for k in 0..100 {
        let s = rand_mat(&mut g, 5) + CMat::identity(5, 5) * r(1.5);
        let d = linalg::diag(&(0..5).map(|_| rand_c(&mut g, 3.0)).collect::<Vec<_>>());
        let h0 = &s * d * linalg::inverse(&s).unwrap();
        let h1 = rand_mat(&mut g, 5) * r(0.01);
        let bf = spectra::bauer_fike(&h0, &h1, &s, false).map_err(|e| e.to_string())?;
        for v in linalg::eigenvalues(&(&h0 + &h1)).map_err(|e| e.to_string())? {
            ensure!(spectra::union_contains(&bf.disks, v, 1e-9), "perturbation {k}: {v} outside Bauer-Fike disks");
        }
    }
    Ok("Gershgorin, Brauer-Cassini and Bauer-Fike containment on 100 + 100 draws".into())
}

fn c17_cusp_count() -> Outcome {
    let mut counts = Vec::new();
    let mut ok = true;
    for n in [3usize, 4, 5, 6] {
        let fam = ParamFamily::uniform_chain(n, 1, 1.0, ParamBox::new(-3.0, 3.0, 0.02, 3.0).unwrap()).map_err(|e| e.to_string())?;
        let contour = exceptional::ep_locus(&fam, 64).map_err(|e| e.to_string())?;
        let cusps = contour.singular_points.iter().filter(|s| s.class == SingularClass::Cusp && s.point[1] > 0.0).count();
        ok &= cusps == n - 2;
        counts.push(format!("n={n}: {cusps}"));
    }
    ensure!(ok, "cusp counts {}", counts.join(", "));
    Ok(format!("cusp counts {}", counts.join(", ")))
}

#[test]
fn acceptance() {
    let criteria: [(u32, &str, fn() -> Outcome, bool); 17] = [
        (1, "qubit spectrum", c1_qubit_spectrum, true),
        (2, "maximal breaking", c2_maximal_breaking, true),
        (3, "EP2 structure at threshold", c3_ep2_structure, true),
        (4, "closed-form spectra", c4_closed_forms, true),
        (5, "characteristic-polynomial closed forms", c5_char_poly_forms, true),
        (6, "uniform-chain EP contour", c6_uniform_ep_contour, true),
        (7, "cusp correspondence", c7_cusp_correspondence, true),
        (8, "acnode and crunode", c8_acnode_crunode, true),
        (9, "large-detuning asymptote", c9_large_detuning_slope, true),
        (10, "metric positivity boundaries", c10_positivity_boundaries, true),
        (11, "intertwining residuals", c11_intertwining_residuals, true),
        (12, "equivalent Hermitian Hamiltonian", c12_equivalent_hamiltonian, true),
        (13, "second quantization", c13_second_quantization, true),
        (14, "locality classification", c14_locality_classification, true),
        (15, "representation-generated 4x4 example", c15_four_by_four, true),
        (16, "inclusion theorems", c16_inclusion_theorems, true),
        (17, "cusp count conjecture (non-fatal)", c17_cusp_count, false),
    ];
    let mut fatal = Vec::new();
    for (id, name, run, required) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match &outcome {
            Ok(msg) => println!("criterion {id:2} PASS [{secs:6.1}s] {name}: {msg}"),
            Err(msg) => println!("criterion {id:2} FAIL [{secs:6.1}s] {name}: {msg}"),
        }
        if outcome.is_err() && required {
            fatal.push(id);
        }
    }
    assert!(fatal.is_empty(), "failed criteria: {fatal:?}");
}

#[test]
fn pt_class_of_threshold_spec_is_not_unbroken() {
    let mut g = rng(99);
    let h = nn_spec(&mut g, 6, 1.5).matrix();
    assert!(matches!(spectra::pt_classify(&h, 1e-9), PtClass::Broken(_)));
}
