#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4};
use rand::Rng;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix (ascending eigenvalues).
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[(i, j)].powi(2)).sum();
        if off < 1e-30 * m.norm_squared().max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[(x, x)].total_cmp(&m[(y, y)]));
    let vals = order.iter().map(|&k| m[(k, k)]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (c, &k) in order.iter().enumerate() {
        vecs.set_column(c, &v.column(k));
    }
    (vals, vecs)
}

/// 2×2 symplectic block acting on one mode `(q, p)`.
pub fn local_symplectic<R: Rng>(rng: &mut R) -> Matrix2<f64> {
    let rot = |t: f64| Matrix2::new(t.cos(), -t.sin(), t.sin(), t.cos());
    let r = rng.random_range(-1.0..1.0);
    let sq = Matrix2::new((-r as f64).exp(), 0.0, 0.0, (r as f64).exp());
    rot(rng.random_range(0.0..6.3)) * sq * rot(rng.random_range(0.0..6.3))
}

/// Random physical two-mode covariance ordered `(q_a, p_a, q_b, p_b)`:
/// thermal diagonal dressed by local symplectics, a beam splitter and a
/// two-mode squeezer.
pub fn random_two_mode_cov<R: Rng>(rng: &mut R) -> Matrix4<f64> {
    let na: f64 = 0.5 + rng.random_range(0.0..2.0);
    let nb: f64 = 0.5 + rng.random_range(0.0..2.0);
    let d = Matrix4::from_diagonal(&nalgebra::Vector4::new(na, na, nb, nb));
    let local = |rng: &mut R| {
        let (a, b) = (local_symplectic(rng), local_symplectic(rng));
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&a);
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(&b);
        m
    };
    let t: f64 = rng.random_range(0.0..1.5);
    let (c, s) = (t.cos(), t.sin());
    let bs = Matrix4::new(c, 0.0, s, 0.0, 0.0, c, 0.0, s, -s, 0.0, c, 0.0, 0.0, -s, 0.0, c);
    let r: f64 = rng.random_range(0.0..1.2);
    let (ch, sh) = (r.cosh(), r.sinh());
    let tms = Matrix4::new(ch, 0.0, sh, 0.0, 0.0, ch, 0.0, -sh, sh, 0.0, ch, 0.0, 0.0, -sh, 0.0, ch);
    let s = local(rng) * tms * bs * local(rng);
    s * d * s.transpose()
}

pub fn tmsv(r: f64) -> Matrix4<f64> {
    let (c, s) = ((2.0 * r).cosh() / 2.0, (2.0 * r).sinh() / 2.0);
    Matrix4::new(c, 0.0, s, 0.0, 0.0, c, 0.0, -s, s, 0.0, c, 0.0, 0.0, -s, 0.0, c)
}

pub fn entropy_of(nu: f64) -> f64 {
    if nu <= 0.5 {
        return 0.0;
    }
    (nu + 0.5) * (nu + 0.5).ln() - (nu - 0.5) * (nu - 0.5).ln()
}

/// Dense RK4 integration of the node-basis moment equations
/// `dm/dt = A m`, `dσ/dt = Aσ + σAᵀ + 2D` with drift and diffusion given as
/// full 2N×2N matrices. `substeps[k]` steps are taken to reach `grid[k]`.
pub fn dense_rk4(
    drift: &DMatrix<f64>,
    diffusion: &DMatrix<f64>,
    mean0: &DVector<f64>,
    cov0: &DMatrix<f64>,
    grid: &[f64],
    max_step: f64,
) -> Vec<(DVector<f64>, DMatrix<f64>)> {
    let rate = |c: &DMatrix<f64>| drift * c + c * drift.transpose() + diffusion * 2.0;
    let mut mean = mean0.clone();
    let mut cov = cov0.clone();
    let mut now = 0.0;
    let mut out = Vec::new();
    for &t in grid {
        let interval = t - now;
        if interval > 0.0 {
            let steps = ((interval / max_step).ceil() as usize).max(1);
            let h = interval / steps as f64;
            for _ in 0..steps {
                let k1 = drift * &mean;
                let k2 = drift * (&mean + &k1 * (h / 2.0));
                let k3 = drift * (&mean + &k2 * (h / 2.0));
                let k4 = drift * (&mean + &k3 * h);
                mean += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
                let c1 = rate(&cov);
                let c2 = rate(&(&cov + &c1 * (h / 2.0)));
                let c3 = rate(&(&cov + &c2 * (h / 2.0)));
                let c4 = rate(&(&cov + &c3 * h));
                cov += (c1 + c2 * 2.0 + c3 * 2.0 + c4) * (h / 6.0);
            }
        }
        now = t;
        out.push((mean.clone(), cov.clone()));
    }
    out
}

/// Node-basis drift and diffusion built from mode data via congruence with `F ⊕ F`.
pub fn node_basis_generator(
    f: &DMatrix<f64>,
    omega: &[f64],
    gamma: &[f64],
    diff: &[f64],
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = omega.len();
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    let mut d = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        a[(k, k)] = -gamma[k] / 2.0;
        a[(k, n + k)] = 1.0;
        a[(n + k, k)] = -omega[k] * omega[k];
        a[(n + k, n + k)] = -gamma[k] / 2.0;
        d[(k, k)] = diff[k] / (4.0 * omega[k] * omega[k]);
        d[(n + k, n + k)] = diff[k] / 4.0;
    }
    let mut t = DMatrix::zeros(2 * n, 2 * n);
    t.view_mut((0, 0), (n, n)).copy_from(f);
    t.view_mut((n, n), (n, n)).copy_from(f);
    (&t * a * t.transpose(), &t * d * t.transpose())
}

/// Minimal conditional determinant by exhaustive grid search over the
/// measurement angle and squeezing, plus the homodyne limit.
pub fn grid_min_conditional_det(cov: &Matrix4<f64>, step: f64, s_max: f64) -> f64 {
    let a = cov.fixed_view::<2, 2>(0, 0).into_owned();
    let b = cov.fixed_view::<2, 2>(2, 2).into_owned();
    let c = cov.fixed_view::<2, 2>(0, 2).into_owned();
    let n_theta = (std::f64::consts::PI / step).ceil() as usize;
    let n_s = (s_max / step).ceil() as usize;
    let mut best = f64::INFINITY;
    for it in 0..n_theta {
        let th = it as f64 * step;
        let (sn, cs) = th.sin_cos();
        for is in 0..=n_s {
            let s = is as f64 * step;
            let (e1, e2) = ((-2.0 * s).exp() / 2.0, (2.0 * s).exp() / 2.0);
            let m = Matrix2::new(e1 * cs * cs + e2 * sn * sn, (e1 - e2) * cs * sn, (e1 - e2) * cs * sn, e1 * sn * sn + e2 * cs * cs);
            let cond = a - c * (b + m).try_inverse().unwrap() * c.transpose();
            best = best.min(cond.determinant());
        }
        let u = nalgebra::Vector2::new(cs, sn);
        let cu = c * u;
        let cond = a - cu * cu.transpose() / u.dot(&(b * u));
        best = best.min(cond.determinant());
    }
    best
}

/// Gaussian discord (measurement on B) from the grid oracle, using an
/// independent eigen route for the symplectic eigenvalues.
pub fn grid_discord(cov: &Matrix4<f64>, step: f64) -> f64 {
    let a = cov.fixed_view::<2, 2>(0, 0).determinant();
    let b = cov.fixed_view::<2, 2>(2, 2).determinant();
    let c = cov.fixed_view::<2, 2>(0, 2).determinant();
    let det = cov.determinant();
    let delta = a + b + 2.0 * c;
    let disc = (delta * delta - 4.0 * det).max(0.0).sqrt();
    let nm = ((delta - disc) / 2.0).max(0.25).sqrt();
    let np = ((delta + disc) / 2.0).sqrt();
    let e = grid_min_conditional_det(cov, step, 8.0);
    let _ = a;
    entropy_of(b.sqrt()) - entropy_of(nm) - entropy_of(np) + entropy_of(e.max(0.25).sqrt())
}
