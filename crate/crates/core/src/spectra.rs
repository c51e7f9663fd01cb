//! Spectral checks relating the Jacobian `J` of a network to the Jacobian
//! `Ĵ_k` after one fix step whose added reaction has rate `k`.

use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::kinetics::{lift_point, rates_through, KineticsError, MassActionSystem};
use crate::matrix::Matrix;
use crate::model::Network;
use crate::random::log_uniform;
use crate::scalar::Real;
use crate::signfix::FixReport;
use crate::{Rational, RationalMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectraError {
    #[error("QR iteration did not converge")]
    NoConvergence,
    #[error("matrix must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("fix report has no step {step}")]
    NoSuchStep { step: usize },
    #[error("bad k grid: {0}")]
    BadGrid(String),
    #[error("exact check needs at most 4 species, got {0}")]
    TooLarge(usize),
    #[error("exact check needs integer stoichiometry in reactant columns")]
    NonIntegerExponent,
    #[error(transparent)]
    Kinetics(#[from] KineticsError),
}

fn sign_of<F: Real>(a: F, b: F) -> F {
    if b >= F::zero() {
        a.abs()
    } else {
        -a.abs()
    }
}

/// All eigenvalues of a real square matrix: balancing, reduction to upper
/// Hessenberg form by stabilized elimination, then Francis double-shift QR.
/// Sorted by real part, then imaginary part.
pub fn eigenvalues<F: Real>(m: &Matrix<F>) -> Result<Vec<Complex<F>>, SpectraError> {
    let (r, c) = m.shape();
    if r != c {
        return Err(SpectraError::NotSquare(r, c));
    }
    let n = r;
    // 1-based working copy
    let mut a = vec![vec![F::zero(); n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            a[i + 1][j + 1] = m[(i, j)];
        }
    }
    balance(&mut a, n);
    hessenberg(&mut a, n);
    let mut out = hqr(&mut a, n)?;
    out.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    Ok(out)
}

fn balance<F: Real>(a: &mut [Vec<F>], n: usize) {
    let radix = F::lit(2.0);
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let mut r = F::zero();
            let mut c = F::zero();
            for j in 1..=n {
                if j != i {
                    c = c + a[j][i].abs();
                    r = r + a[i][j].abs();
                }
            }
            if c != F::zero() && r != F::zero() {
                let mut g = r / radix;
                let mut f = F::one();
                let s = c + r;
                while c < g {
                    f = f * radix;
                    c = c * sqrdx;
                }
                g = r * radix;
                while c > g {
                    f = f / radix;
                    c = c / sqrdx;
                }
                if (c + r) / f < F::lit(0.95) * s {
                    done = false;
                    let g = F::one() / f;
                    for j in 1..=n {
                        a[i][j] = a[i][j] * g;
                    }
                    for row in a.iter_mut().skip(1) {
                        row[i] = row[i] * f;
                    }
                }
            }
        }
    }
}

fn hessenberg<F: Real>(a: &mut [Vec<F>], n: usize) {
    for m in 2..n {
        let mut x = F::zero();
        let mut i = m;
        for j in m..=n {
            if a[j][m - 1].abs() > x.abs() {
                x = a[j][m - 1];
                i = j;
            }
        }
        if i != m {
            for j in m - 1..=n {
                let t = a[i][j];
                a[i][j] = a[m][j];
                a[m][j] = t;
            }
            for row in a.iter_mut().skip(1) {
                row.swap(i, m);
            }
        }
        if x != F::zero() {
            for i in m + 1..=n {
                let mut y = a[i][m - 1];
                if y != F::zero() {
                    y = y / x;
                    a[i][m - 1] = y;
                    for j in m..=n {
                        a[i][j] = a[i][j] - y * a[m][j];
                    }
                    for row in a.iter_mut().skip(1) {
                        row[m] = row[m] + y * row[i];
                    }
                }
            }
        }
    }
    for i in 1..=n {
        for j in 1..i.saturating_sub(1) {
            a[i][j] = F::zero();
        }
    }
}

fn hqr<F: Real>(a: &mut [Vec<F>], n: usize) -> Result<Vec<Complex<F>>, SpectraError> {
    let mut wr = vec![F::zero(); n + 1];
    let mut wi = vec![F::zero(); n + 1];
    let mut anorm = F::zero();
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm = anorm + a[i][j].abs();
        }
    }
    let mut nn = n;
    let mut t = F::zero();
    let (mut p, mut q, mut r);
    let (mut x, mut y, mut z, mut w);
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == F::zero() {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = F::zero();
                    break;
                }
                l -= 1;
            }
            x = a[nn][nn];
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = F::zero();
                nn -= 1;
            } else {
                y = a[nn - 1][nn - 1];
                w = a[nn][nn - 1] * a[nn - 1][nn];
                if l == nn - 1 {
                    p = F::lit(0.5) * (y - x);
                    q = p * p + w;
                    z = q.abs().sqrt();
                    x = x + t;
                    if q >= F::zero() {
                        z = p + sign_of(z, p);
                        wr[nn - 1] = x + z;
                        wr[nn] = x + z;
                        if z != F::zero() {
                            wr[nn] = x - w / z;
                        }
                        wi[nn - 1] = F::zero();
                        wi[nn] = F::zero();
                    } else {
                        wr[nn - 1] = x + p;
                        wr[nn] = x + p;
                        wi[nn - 1] = -z;
                        wi[nn] = z;
                    }
                    nn = nn.saturating_sub(2);
                } else {
                    if its == 60 {
                        return Err(SpectraError::NoConvergence);
                    }
                    if its == 10 || its == 20 || its == 40 {
                        t = t + x;
                        for i in 1..=nn {
                            a[i][i] = a[i][i] - x;
                        }
                        let s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                        x = F::lit(0.75) * s;
                        y = x;
                        w = F::lit(-0.4375) * s * s;
                    }
                    its += 1;
                    let mut m = nn - 2;
                    loop {
                        z = a[m][m];
                        r = x - z;
                        let s = y - z;
                        p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
                        q = a[m + 1][m + 1] - z - r - s;
                        r = a[m + 2][m + 1];
                        let s = p.abs() + q.abs() + r.abs();
                        p = p / s;
                        q = q / s;
                        r = r / s;
                        if m == l {
                            break;
                        }
                        let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m + 2..=nn {
                        a[i][i - 2] = F::zero();
                        if i != m + 2 {
                            a[i][i - 3] = F::zero();
                        }
                    }
                    let mut k = m;
                    while k + 1 <= nn {
                        if k != m {
                            p = a[k][k - 1];
                            q = a[k + 1][k - 1];
                            r = F::zero();
                            if k != nn - 1 {
                                r = a[k + 2][k - 1];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != F::zero() {
                                p = p / x;
                                q = q / x;
                                r = r / x;
                            }
                        }
                        let s = sign_of((p * p + q * q + r * r).sqrt(), p);
                        if s != F::zero() {
                            if k == m {
                                if l != m {
                                    a[k][k - 1] = -a[k][k - 1];
                                }
                            } else {
                                a[k][k - 1] = -s * x;
                            }
                            p = p + s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q = q / p;
                            r = r / p;
                            for j in k..=nn {
                                p = a[k][j] + q * a[k + 1][j];
                                if k != nn - 1 {
                                    p = p + r * a[k + 2][j];
                                    a[k + 2][j] = a[k + 2][j] - p * z;
                                }
                                a[k + 1][j] = a[k + 1][j] - p * y;
                                a[k][j] = a[k][j] - p * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                p = x * a[i][k] + y * a[i][k + 1];
                                if k != nn - 1 {
                                    p = p + z * a[i][k + 2];
                                    a[i][k + 2] = a[i][k + 2] - p * r;
                                }
                                a[i][k + 1] = a[i][k + 1] - p * q;
                                a[i][k] = a[i][k] - p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if nn == 0 || l + 1 >= nn {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| Complex::new(wr[i], wi[i])).collect())
}

/// `J` of stage `step` and `Ĵ_k` of stage `step + 1` with the added rate replaced by `k`.
fn jacobian_pair<F: Real>(
    report: &FixReport,
    step: usize,
    rates: &[F],
    x_hat: &[F],
    k: F,
) -> Result<(Matrix<F>, Matrix<F>), SpectraError> {
    if step >= report.steps.len() {
        return Err(SpectraError::NoSuchStep { step });
    }
    let before = &report.stages[step];
    let after = &report.stages[step + 1];
    let d = before.species_count();
    let j = MassActionSystem::with_rates(before, rates)?.jacobian(&x_hat[..d.min(x_hat.len())])?;
    let mut hat_rates = rates.to_vec();
    hat_rates.push(k);
    let jh = MassActionSystem::with_rates(after, &hat_rates)?.jacobian(x_hat)?;
    Ok((j, jh))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetRelation<F> {
    pub k: F,
    pub det_j: F,
    pub det_j_hat: F,
    /// `|det Ĵ_k + k det J| / (1 + k |det J|)`
    pub relative_error: F,
    pub passed: bool,
}

fn exact<F: Real>(v: F) -> Option<Rational> {
    v.to_f64().and_then(Rational::from_float)
}

fn exact_vec<F: Real>(v: &[F]) -> Option<Vec<Rational>> {
    v.iter().map(|&x| exact(x)).collect()
}

fn exact_matrix<F: Real>(m: &Matrix<F>) -> Option<RationalMatrix> {
    let rows: Option<Vec<Vec<Rational>>> = m.to_rows().iter().map(|r| exact_vec(r)).collect();
    rows.map(RationalMatrix::from_rows)
}

fn relation_of<F: Real>(det_j: &Rational, det_j_hat: &Rational, k: &Rational) -> DetRelation<F> {
    let scale = Rational::one() + k * det_j.abs();
    let err = (det_j_hat + k * det_j).abs() / scale;
    let relative_error = err.to_f64().unwrap_or(f64::INFINITY);
    DetRelation {
        k: F::from_rational(k),
        det_j: F::from_rational(det_j),
        det_j_hat: F::from_rational(det_j_hat),
        relative_error: F::lit(relative_error),
        passed: relative_error <= 1e-9,
    }
}

/// `det Ĵ_k = -k det J` up to `1e-9 (1 + k |det J|)`. The floating-point
/// entries are converted exactly and the determinants taken in rationals.
pub fn det_relation_from_matrices<F: Real>(j: &Matrix<F>, j_hat: &Matrix<F>, k: F) -> DetRelation<F> {
    match (exact_matrix(j), exact_matrix(j_hat), exact(k)) {
        (Some(a), Some(b), Some(kq)) => relation_of(&a.determinant(), &b.determinant(), &kq),
        _ => DetRelation {
            k,
            det_j: F::nan(),
            det_j_hat: F::nan(),
            relative_error: F::nan(),
            passed: false,
        },
    }
}

/// Determinant relation for fix step `step`; `rates` are the rates of the
/// network before that step and `x_hat` a positive point of the network after
/// it. With integer stoichiometry both Jacobians are formed exactly at the
/// given (binary) inputs.
pub fn det_relation_check<F: Real>(
    report: &FixReport,
    step: usize,
    rates: &[F],
    x_hat: &[F],
    k: F,
) -> Result<DetRelation<F>, SpectraError> {
    let (j, jh) = jacobian_pair(report, step, rates, x_hat, k)?;
    let (Some(rq), Some(xq), Some(kq)) = (exact_vec(rates), exact_vec(x_hat), exact(k)) else {
        return Ok(det_relation_from_matrices(&j, &jh, k));
    };
    let before = &report.stages[step];
    let after = &report.stages[step + 1];
    let d = before.species_count();
    let mut hat_rates = rq.clone();
    hat_rates.push(kq.clone());
    match (
        exact_jacobian(before, &rq, &xq[..d]),
        exact_jacobian(after, &hat_rates, &xq),
    ) {
        (Ok(a), Ok(b)) => Ok(relation_of(&a.determinant(), &b.determinant(), &kq)),
        (Err(SpectraError::NonIntegerExponent), _) | (_, Err(SpectraError::NonIntegerExponent)) => {
            Ok(det_relation_from_matrices(&j, &jh, k))
        }
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Marginal,
    Unstable,
}

fn verdict<F: Real>(eigs: &[Complex<F>], tol: F) -> Verdict {
    let top = eigs.iter().fold(F::neg_infinity(), |m, e| m.max(e.re));
    if top < -tol {
        Verdict::Stable
    } else if top > tol {
        Verdict::Unstable
    } else {
        Verdict::Marginal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport<F> {
    pub k_grid: Vec<F>,
    pub eigenvalues_j: Vec<Complex<F>>,
    /// Eigenvalues of `Ĵ_k` per grid point.
    pub eigenvalues_hat: Vec<Vec<Complex<F>>>,
    /// Per k: largest distance between an eigenvalue of `J` and its match in `Ĵ_k`.
    pub matched_errors: Vec<F>,
    /// Per k: the eigenvalue of `Ĵ_k` matched to `-k`.
    pub escaping: Vec<Complex<F>>,
    /// Log-log slope of the matched errors over the asymptotic part of the grid.
    pub slope: Option<F>,
    /// Eigenvalues of `J` closer together than the matching can resolve.
    pub clustered: bool,
    pub verdict_j: Verdict,
    /// Verdict from the matched eigenvalues at the largest k.
    pub verdict_hat: Verdict,
    /// Per k: verdict from the matched eigenvalues.
    pub verdicts_hat: Vec<Verdict>,
    /// Largest grid k whose matched verdict equals that of `J` with a real,
    /// negative escaper.
    pub k_star: Option<F>,
    pub error_ok: bool,
    pub escaper_ok: bool,
    pub slope_ok: bool,
}

impl<F: Real> ConvergenceReport<F> {
    pub fn passed(&self) -> bool {
        self.error_ok && self.escaper_ok && self.slope_ok && self.verdict_j == self.verdict_hat
    }
}

/// Greedy nearest pairs; returns `assign[t] = index into found`.
fn greedy_match<F: Real>(targets: &[Complex<F>], found: &[Complex<F>]) -> Vec<usize> {
    let mut pairs = Vec::with_capacity(targets.len() * found.len());
    for (t, a) in targets.iter().enumerate() {
        for (f, b) in found.iter().enumerate() {
            pairs.push(((a - b).norm(), t, f));
        }
    }
    pairs.sort_by(|x, y| {
        x.0.partial_cmp(&y.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.1.cmp(&y.1))
            .then(x.2.cmp(&y.2))
    });
    let mut assign = vec![usize::MAX; targets.len()];
    let mut used = vec![false; found.len()];
    for (_, t, f) in pairs {
        if assign[t] == usize::MAX && !used[f] {
            assign[t] = f;
            used[f] = true;
        }
    }
    assign
}

/// Track the eigenvalues of `Ĵ_k` along `k_grid` (increasing, at least 5
/// points over at least 4 decades) against those of `J` and the escaper `-k`.
pub fn eigen_convergence<F: Real>(
    report: &FixReport,
    step: usize,
    rates: &[F],
    x_hat: &[F],
    k_grid: &[F],
) -> Result<ConvergenceReport<F>, SpectraError> {
    if step >= report.steps.len() {
        return Err(SpectraError::NoSuchStep { step });
    }
    if k_grid.len() < 5 {
        return Err(SpectraError::BadGrid("need at least 5 points".into()));
    }
    if k_grid.windows(2).any(|w| !(w[1] > w[0])) || !(k_grid[0] > F::zero()) {
        return Err(SpectraError::BadGrid("grid must be positive and increasing".into()));
    }
    let lo = k_grid[0];
    let hi = k_grid[k_grid.len() - 1];
    if (hi / lo).log10() < F::lit(4.0) - F::lit(1e-9) {
        return Err(SpectraError::BadGrid("grid must span at least 4 decades".into()));
    }

    let (j, _) = jacobian_pair(report, step, rates, x_hat, lo)?;
    let mu = eigenvalues(&j)?;
    let rho = mu.iter().fold(F::zero(), |m, e| m.max(e.norm()));
    let mut clustered = false;
    for a in 0..mu.len() {
        for b in a + 1..mu.len() {
            if (mu[a] - mu[b]).norm() < F::lit(1e-6) * (F::one() + rho) {
                clustered = true;
            }
        }
    }

    let mut eigenvalues_hat = Vec::new();
    let mut matched_errors = Vec::new();
    let mut escaping = Vec::new();
    let mut matched_last = Vec::new();
    let mut matched_per_k = Vec::new();
    for &k in k_grid {
        let (_, jh) = jacobian_pair(report, step, rates, x_hat, k)?;
        let lam = eigenvalues(&jh)?;
        let mut targets = mu.clone();
        targets.push(Complex::new(-k, F::zero()));
        let assign = greedy_match(&targets, &lam);
        let err = (0..mu.len()).fold(F::zero(), |m, t| m.max((mu[t] - lam[assign[t]]).norm()));
        matched_errors.push(err);
        escaping.push(lam[assign[mu.len()]]);
        matched_last = (0..mu.len()).map(|t| lam[assign[t]]).collect();
        matched_per_k.push(matched_last.clone());
        eigenvalues_hat.push(lam);
    }

    let norm_j = (0..j.rows()).fold(F::zero(), |m, r| {
        m.max(j.row(r).iter().fold(F::zero(), |a, v| a + v.abs()))
    });
    let knee = F::lit(10.0) * (F::one() + norm_j);
    let floor = F::lit(1e-13) * (F::one() + rho);
    let pts: Vec<(F, F)> = k_grid
        .iter()
        .zip(&matched_errors)
        .filter(|(k, e)| **k >= knee && **e > floor)
        .map(|(k, e)| (k.ln(), e.ln()))
        .collect();
    let slope = if pts.len() >= 2 {
        let n = F::lit(pts.len() as f64);
        let mx = pts.iter().fold(F::zero(), |a, p| a + p.0) / n;
        let my = pts.iter().fold(F::zero(), |a, p| a + p.1) / n;
        let sxy = pts.iter().fold(F::zero(), |a, p| a + (p.0 - mx) * (p.1 - my));
        let sxx = pts.iter().fold(F::zero(), |a, p| a + (p.0 - mx) * (p.0 - mx));
        Some(sxy / sxx)
    } else {
        None
    };

    let last_err = matched_errors[matched_errors.len() - 1];
    let esc = escaping[escaping.len() - 1];
    let error_ok = last_err <= F::lit(1e-3) * (F::one() + rho);
    // below the knee the escaper is not yet separated from the spectrum of J
    let escaper_ok = k_grid
        .iter()
        .zip(&escaping)
        .filter(|(k, _)| **k >= knee)
        .all(|(_, e)| e.im.abs() <= F::lit(1e-9) * (F::one() + e.re.abs()) && e.re < F::zero())
        && esc.re < F::zero()
        && (esc.re + hi).abs() <= F::lit(0.2) * hi;
    // errors already at roundoff level everywhere count as converged
    let slope_ok = match slope {
        Some(s) => s <= F::lit(-0.8),
        None => matched_errors.iter().all(|e| *e <= floor),
    };
    let tol = F::lit(1e-9) * (F::one() + rho);
    let verdict_j = verdict(&mu, tol);
    let verdicts_hat: Vec<Verdict> = matched_per_k
        .iter()
        .zip(&matched_errors)
        .map(|(m, &e)| verdict(m, tol + e))
        .collect();
    let k_star = k_grid
        .iter()
        .zip(&verdicts_hat)
        .zip(&escaping)
        .filter(|((_, v), e)| {
            **v == verdict_j && e.re < F::zero() && e.im.abs() <= F::lit(1e-9) * (F::one() + e.re.abs())
        })
        .map(|((k, _), _)| *k)
        .last();
    Ok(ConvergenceReport {
        k_grid: k_grid.to_vec(),
        verdict_j,
        verdict_hat: verdict(&matched_last, tol + last_err),
        verdicts_hat,
        k_star,
        eigenvalues_j: mu,
        eigenvalues_hat,
        matched_errors,
        escaping,
        slope,
        clustered,
        error_ok,
        escaper_ok,
        slope_ok,
    })
}

/// `n` log-spaced points from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DetSignSampling {
    pub samples: usize,
    /// Per sample: sign of `det J` and of `det Ĵ` (-1, 0, 1).
    pub signs_j: Vec<i8>,
    pub signs_hat: Vec<i8>,
    /// `∏(-k_i)` over the fix steps.
    pub factor: f64,
    pub relation_holds: bool,
}

impl DetSignSampling {
    fn constant(v: &[i8]) -> Option<i8> {
        let first = *v.first()?;
        v.iter().all(|&s| s == first).then_some(first)
    }

    pub fn constant_j(&self) -> Option<i8> {
        Self::constant(&self.signs_j)
    }

    pub fn constant_hat(&self) -> Option<i8> {
        Self::constant(&self.signs_hat)
    }

    /// One determinant has a fixed sign iff the other does, related by the sign of `factor`.
    pub fn consistent(&self) -> bool {
        let f = if self.factor < 0.0 { -1 } else { 1 };
        match (self.constant_j(), self.constant_hat()) {
            (Some(a), Some(b)) => b == a * f,
            (None, None) => true,
            _ => false,
        }
    }
}

fn det_sign(m: &Matrix<f64>, det: f64) -> i8 {
    let bound: f64 = (0..m.rows())
        .map(|r| m.row(r).iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0))
        .product();
    if det.abs() <= 1e-10 * bound {
        0
    } else if det > 0.0 {
        1
    } else {
        -1
    }
}

fn exact_sign(v: &Rational) -> i8 {
    if v.is_positive() {
        1
    } else if v.is_negative() {
        -1
    } else {
        0
    }
}

/// Signs of `det J` and `det Ĵ` (full fix) at random positive points on a
/// grid of spacing 1/1024. Integer stoichiometry is evaluated exactly; other
/// networks fall back to floating point with a Hadamard-scaled zero threshold.
pub fn det_sign_sampling(
    report: &FixReport,
    rates: &[f64],
    samples: usize,
    seed: u64,
) -> Result<DetSignSampling, SpectraError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let full_rates = rates_through(report, rates, report.steps.len());
    let orig = MassActionSystem::with_rates(report.original(), rates)?;
    let fixed = MassActionSystem::with_rates(report.result(), &full_rates)?;
    let factor: f64 = report.steps.iter().map(|s| -s.added_rate).product();
    let exact_parts = match (
        integer_exponents(&report.original().stoichiometric_matrix()),
        exact_vec(&full_rates),
    ) {
        (Ok(_), Some(rq)) => {
            let fq = report
                .steps
                .iter()
                .map(|s| -exact(s.added_rate).expect("finite rate"))
                .fold(Rational::one(), |a, b| a * b);
            Some((rq, fq))
        }
        _ => None,
    };
    let mut signs_j = Vec::with_capacity(samples);
    let mut signs_hat = Vec::with_capacity(samples);
    let mut relation_holds = true;
    for _ in 0..samples {
        let x: Vec<f64> = log_uniform(&mut rng, orig.species_count(), 0.1, 10.0)
            .into_iter()
            .map(|v| (v * 1024.0).round().max(1.0) / 1024.0)
            .collect();
        if let Some((rq, fq)) = &exact_parts {
            let mut cur: Vec<Rational> = exact_vec(&x).expect("finite point");
            for (i, st) in report.steps.iter().enumerate() {
                let stage = &report.stages[i];
                let expo = integer_exponents(&stage.stoichiometric_matrix())?;
                let v = exact_flux(&expo, &rq[..stage.reaction_count()], &cur);
                cur.push(v[st.modified_column].clone() / rq[stage.reaction_count()].clone());
            }
            if cur.iter().any(|v| !v.is_positive()) {
                continue;
            }
            let d = report.original().species_count();
            let dp = report.original().reaction_count();
            let dj = exact_jacobian(report.original(), &rq[..dp], &cur[..d])?.determinant();
            let dh = exact_jacobian(report.result(), rq, &cur)?.determinant();
            if dh != fq.clone() * dj.clone() {
                relation_holds = false;
            }
            signs_j.push(exact_sign(&dj));
            signs_hat.push(exact_sign(&dh));
        } else {
            let x_hat = lift_point(report, rates, &x)?;
            if x_hat.iter().any(|&v| v <= 0.0) {
                continue;
            }
            let j = orig.jacobian(&x)?;
            let jh = fixed.jacobian(&x_hat)?;
            let (dj, dh) = (j.determinant(), jh.determinant());
            let hadamard: f64 = (0..jh.rows())
                .map(|r| jh.row(r).iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0))
                .product();
            if (dh - factor * dj).abs() > 1e-9 * (1.0 + (factor * dj).abs()) + 1e-12 * hadamard {
                relation_holds = false;
            }
            signs_j.push(det_sign(&j, dj));
            signs_hat.push(det_sign(&jh, dh));
        }
    }
    Ok(DetSignSampling {
        samples: signs_j.len(),
        signs_j,
        signs_hat,
        factor,
        relation_holds,
    })
}

/// Polynomial with rational coefficients, lowest degree first.
pub type Poly = Vec<Rational>;

fn trim(mut p: Poly) -> Poly {
    while p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

fn poly_degree(p: &Poly) -> Option<usize> {
    let t = trim(p.clone());
    if t.is_empty() {
        None
    } else {
        Some(t.len() - 1)
    }
}

/// `det(M - λI)` by exact interpolation at `λ = 0..=n`.
pub fn characteristic_polynomial(m: &RationalMatrix) -> Poly {
    let n = m.rows();
    let pts: Vec<Rational> = (0..=n).map(|i| Rational::from_integer(BigInt::from(i))).collect();
    let vals: Vec<Rational> = pts
        .iter()
        .map(|l| {
            let shifted = RationalMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    m[(i, j)].clone() - l.clone()
                } else {
                    m[(i, j)].clone()
                }
            });
            shifted.determinant()
        })
        .collect();
    let vander = RationalMatrix::from_fn(n + 1, n + 1, |i, j| num_traits::pow(pts[i].clone(), j));
    trim(vander.solve(&vals).expect("distinct nodes"))
}

/// Reactant exponents as integers, or an error for fractional stoichiometry.
fn integer_exponents(s: &RationalMatrix) -> Result<Vec<Vec<usize>>, SpectraError> {
    let (d, dp) = s.shape();
    let mut expo = vec![vec![0usize; dp]; d];
    for i in 0..d {
        for k in 0..dp {
            if s[(i, k)].is_negative() {
                let e = -s[(i, k)].clone();
                if !e.is_integer() {
                    return Err(SpectraError::NonIntegerExponent);
                }
                expo[i][k] = e.to_integer().to_usize().ok_or(SpectraError::NonIntegerExponent)?;
            }
        }
    }
    Ok(expo)
}

fn exact_flux(expo: &[Vec<usize>], rates: &[Rational], x: &[Rational]) -> Vec<Rational> {
    (0..rates.len())
        .map(|k| {
            (0..x.len()).fold(rates[k].clone(), |acc, j| acc * num_traits::pow(x[j].clone(), expo[j][k]))
        })
        .collect()
}

/// Mass-action Jacobian in exact arithmetic at a positive rational point.
fn exact_jacobian(net: &Network, rates: &[Rational], x: &[Rational]) -> Result<RationalMatrix, SpectraError> {
    let s = net.stoichiometric_matrix();
    let (d, dp) = s.shape();
    let expo = integer_exponents(&s)?;
    let v = exact_flux(&expo, rates, x);
    let dv = RationalMatrix::from_fn(dp, d, |k, j| {
        if expo[j][k] == 0 {
            Rational::zero()
        } else {
            Rational::from_integer(BigInt::from(expo[j][k])) * v[k].clone() / x[j].clone()
        }
    });
    Ok(s.matmul(&dv))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharPolyRelation {
    pub c: Poly,
    /// `h` from `c_k = (-k-λ) c + s λ h` with `s = p₂`, computed at k = 1 and k = 2.
    pub h: [Poly; 2],
    pub degree_h: Option<usize>,
    pub passed: bool,
}

/// Exact check, for at most 4 species, that `h` is divisible out, does not
/// depend on k, and has degree at most `d - 2`.
pub fn char_poly_relation(
    report: &FixReport,
    step: usize,
    rates: &[Rational],
    x: &[Rational],
) -> Result<CharPolyRelation, SpectraError> {
    if step >= report.steps.len() {
        return Err(SpectraError::NoSuchStep { step });
    }
    let before = &report.stages[step];
    let after = &report.stages[step + 1];
    let d = before.species_count();
    if d > 4 {
        return Err(SpectraError::TooLarge(d));
    }
    let s = report.steps[step].zeroed_value.clone();
    let c = characteristic_polynomial(&exact_jacobian(before, rates, x)?);
    let mut x_hat = x.to_vec();
    x_hat.push(Rational::one());
    let mut hs: Vec<Poly> = Vec::new();
    let mut ok = true;
    for k in [1i64, 2] {
        let kq = Rational::from_integer(BigInt::from(k));
        let mut r = rates.to_vec();
        r.push(kq.clone());
        let ck = characteristic_polynomial(&exact_jacobian(after, &r, &x_hat)?);
        // ck - (-k - λ) c
        let mut diff = vec![Rational::zero(); d + 2];
        for (i, a) in ck.iter().enumerate() {
            diff[i] += a.clone();
        }
        for (i, a) in c.iter().enumerate() {
            diff[i] += kq.clone() * a.clone();
            diff[i + 1] += a.clone();
        }
        if !diff[0].is_zero() {
            ok = false;
        }
        let h: Poly = trim(diff[1..].iter().map(|a| a.clone() / s.clone()).collect());
        hs.push(h);
    }
    let degree_h = poly_degree(&hs[0]);
    let passed = ok && hs[0] == hs[1] && degree_h.is_none_or(|g| g + 2 <= d);
    let [h1, h2]: [Poly; 2] = hs.try_into().expect("two values");
    Ok(CharPolyRelation {
        c,
        h: [h1, h2],
        degree_h,
        passed,
    })
}
