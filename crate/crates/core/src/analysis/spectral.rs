//! Block splitting of the linear part into a stable block and a center block.

use nalgebra::{Complex, DMatrix};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{condition_number, expm_t, spectral_norm};

/// Largest accepted condition number of the change of basis.
pub const MAX_CONDITION: f64 = 1e8;
const K_INFLATION: f64 = 1.1;
const GRID_POINTS: usize = 400;

/// Stable/center decomposition `T A T⁻¹ = diag(B₊, B₋)` with growth constants.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSplit {
    /// Stable dimension.
    pub k: usize,
    /// `T`: maps original coordinates to block coordinates.
    pub transform: DMatrix<f64>,
    /// `T⁻¹`, columns spanning the stable then the center subspace.
    pub inverse: DMatrix<f64>,
    pub b_plus: DMatrix<f64>,
    pub b_minus: DMatrix<f64>,
    /// Largest real part in the stable block; `None` when `k = 0`.
    pub mu: Option<f64>,
    pub sigma: f64,
    pub k_const: f64,
    pub m_pow: usize,
    /// Horizon of the grid on which `k_const` was fitted.
    pub t_check: f64,
}

/// Serializable view of a split.
#[derive(Debug, Clone, Serialize)]
pub struct SplitSummary {
    pub k: usize,
    pub n: usize,
    pub mu: Option<f64>,
    pub sigma: f64,
    pub k_const: f64,
    pub m_pow: usize,
    pub condition: f64,
    pub b_plus: Vec<Vec<f64>>,
    pub b_minus: Vec<Vec<f64>>,
    pub transform: Vec<Vec<f64>>,
}

pub(crate) fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl SpectralSplit {
    pub fn dim(&self) -> usize {
        self.transform.nrows()
    }

    pub fn center_dim(&self) -> usize {
        self.dim() - self.k
    }

    pub fn condition(&self) -> f64 {
        condition_number(&self.inverse)
    }

    /// `diag(B₊, B₋)`.
    pub fn block_matrix(&self) -> DMatrix<f64> {
        crate::linalg::block_diag(&self.b_plus, &self.b_minus)
    }

    /// Sampled check of `‖e^{B₊t}‖ ≤ K e^{−σt}` and `‖e^{−B₋t}‖ ≤ K(1+t^m)`.
    pub fn bounds_hold(&self) -> bool {
        let (stable, center) = growth_ratios(&self.b_plus, &self.b_minus, self.sigma, self.m_pow, self.t_check);
        stable <= self.k_const && center <= self.k_const
    }

    pub fn summary(&self) -> SplitSummary {
        SplitSummary {
            k: self.k,
            n: self.dim(),
            mu: self.mu,
            sigma: self.sigma,
            k_const: self.k_const,
            m_pow: self.m_pow,
            condition: self.condition(),
            b_plus: rows(&self.b_plus),
            b_minus: rows(&self.b_minus),
            transform: rows(&self.transform),
        }
    }
}

/// Options for [`spectral_split_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitOptions {
    /// Real parts within `±tol_eig` count as center eigenvalues.
    pub tol_eig: f64,
    /// Decay exponent; defaults to `|μ|/2`. Must lie in `(0, |μ|)`.
    pub sigma: Option<f64>,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self { tol_eig: 1e-9, sigma: None }
    }
}

/// [`spectral_split_with`] using default `σ = |μ|/2`.
pub fn spectral_split(a: &DMatrix<f64>, tol_eig: f64) -> Result<SpectralSplit> {
    spectral_split_with(a, &SplitOptions { tol_eig, sigma: None })
}

/// Splits `A` into a stable block (`Re λ < −tol_eig`) and a center block
/// (`|Re λ| ≤ tol_eig`), stable coordinates first.
///
/// The invariant subspaces come from the matrix sign function of `A + sI`
/// with `s` halfway between the center strip and the stable spectrum; each
/// basis is the orthonormal range of the corresponding spectral projector.
pub fn spectral_split_with(a: &DMatrix<f64>, opts: &SplitOptions) -> Result<SpectralSplit> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n || a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidSystem("linear part must be a finite non-empty square matrix".into()));
    }
    if !(opts.tol_eig >= 0.0) {
        return Err(Error::InvalidParameter { name: "tol_eig", reason: "must be non-negative".into() });
    }
    let eig = a.clone().complex_eigenvalues();
    let tol = opts.tol_eig;
    if let Some(bad) = eig.iter().map(|z| z.re).filter(|&re| re > tol).reduce(f64::max) {
        return Err(Error::PositiveSpectrum { re: bad, tol });
    }
    let stable: Vec<f64> = eig.iter().map(|z| z.re).filter(|&re| re < -tol).collect();
    let k = stable.len();
    let mu = stable.iter().copied().reduce(f64::max);

    let sigma = match (opts.sigma, mu) {
        (Some(s), Some(mu)) if s > 0.0 && s < -mu => s,
        (Some(s), None) if s > 0.0 => s,
        (Some(s), _) => {
            return Err(Error::InvalidParameter {
                name: "sigma",
                reason: format!("{s} must lie in (0, {})", mu.map_or(f64::INFINITY, |m| -m)),
            })
        }
        (None, Some(mu)) => -mu / 2.0,
        // no stable block: the decay exponent is unused, keep a neutral value
        (None, None) => 1.0,
    };

    let (transform, inverse) = if k == 0 || k == n {
        (DMatrix::identity(n, n), DMatrix::identity(n, n))
    } else {
        let shift = (-mu.unwrap() + tol) / 2.0;
        let sign = matrix_sign(&(a + DMatrix::identity(n, n) * shift))?;
        let id = DMatrix::<f64>::identity(n, n);
        let p_stable = (&id - &sign) * 0.5;
        let p_center = (&id + &sign) * 0.5;
        let mut basis = DMatrix::zeros(n, n);
        basis.columns_mut(0, k).copy_from(&range_basis(&p_stable, k));
        basis.columns_mut(k, n - k).copy_from(&range_basis(&p_center, n - k));
        let cond = condition_number(&basis);
        if !(cond <= MAX_CONDITION) {
            return Err(Error::IllConditioned { cond });
        }
        let t = basis.clone().try_inverse().ok_or(Error::IllConditioned { cond: f64::INFINITY })?;
        (t, basis)
    };

    let blocks = &transform * a * &inverse;
    let b_plus = blocks.view((0, 0), (k, k)).into_owned();
    let b_minus = blocks.view((k, k), (n - k, n - k)).into_owned();
    let m_pow = largest_jordan_block(&b_minus).saturating_sub(1);

    let t_check = match mu {
        Some(mu) => (40.0 / -mu).clamp(10.0, 400.0),
        None => 10.0,
    };
    let (r_stable, r_center) = growth_ratios(&b_plus, &b_minus, sigma, m_pow, t_check);
    let k_const = (K_INFLATION * r_stable.max(r_center)).max(1.0);

    Ok(SpectralSplit { k, transform, inverse, b_plus, b_minus, mu, sigma, k_const, m_pow, t_check })
}

/// Sign function by scaled Newton iteration `X ← (cX + (cX)⁻¹)/2`.
fn matrix_sign(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut x = m.clone();
    for it in 0..100 {
        let inv = x.clone().try_inverse().ok_or(Error::IllConditioned { cond: f64::INFINITY })?;
        let c = if it < 10 { (inv.norm() / x.norm()).sqrt() } else { 1.0 };
        let next = (&x * c + inv / c) * 0.5;
        let change = (&next - &x).norm();
        x = next;
        if change <= 1e-14 * x.norm() {
            return Ok(x);
        }
    }
    Err(Error::IllConditioned { cond: condition_number(m) })
}

/// Orthonormal basis of the range of a rank-`r` projector, signs fixed so the
/// largest-magnitude entry of each column is positive.
fn range_basis(p: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    let svd = p.clone().svd(true, false);
    let u = svd.u.unwrap();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut out = DMatrix::zeros(p.nrows(), r);
    for (c, &j) in order.iter().take(r).enumerate() {
        let mut col = u.column(j).into_owned();
        let big = col.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(1.0);
        if big < 0.0 {
            col.neg_mut();
        }
        out.set_column(c, &col);
    }
    out
}

/// Size of the largest Jordan block, from rank deficiencies of `(B − λI)^j`
/// over clusters of numerically coincident eigenvalues.
fn largest_jordan_block(b: &DMatrix<f64>) -> usize {
    let n = b.nrows();
    if n == 0 {
        return 0;
    }
    let scale = 1.0 + spectral_norm(b);
    let eig = b.clone().complex_eigenvalues();
    let mut clusters: Vec<(Complex<f64>, usize)> = Vec::new();
    for &z in eig.iter() {
        match clusters.iter_mut().find(|(sum, count)| (*sum / *count as f64 - z).norm() < 1e-4 * scale) {
            Some(entry) => {
                entry.0 += z;
                entry.1 += 1;
            }
            None => clusters.push((z, 1)),
        }
    }
    let cb = b.map(|x| Complex::new(x, 0.0));
    let mut largest = 1;
    for (sum, count) in clusters {
        let lambda = sum / count as f64;
        let shifted = &cb - DMatrix::<Complex<f64>>::identity(n, n) * lambda;
        let mut power = DMatrix::<Complex<f64>>::identity(n, n);
        let mut prev = n;
        for j in 1..=count {
            power = &power * &shifted;
            let r = complex_rank(&power, 1e-6 * scale.powi(j as i32));
            if r == prev {
                break;
            }
            prev = r;
            largest = largest.max(j);
        }
    }
    largest
}

fn complex_rank(m: &DMatrix<Complex<f64>>, tol: f64) -> usize {
    m.clone().svd(false, false).singular_values.iter().filter(|&&s| s > tol).count()
}

/// Largest sampled `‖e^{B₊t}‖e^{σt}` and `‖e^{−B₋t}‖/(1+t^m)` on `[0, t_max]`.
fn growth_ratios(b_plus: &DMatrix<f64>, b_minus: &DMatrix<f64>, sigma: f64, m_pow: usize, t_max: f64) -> (f64, f64) {
    let mut stable: f64 = if b_plus.nrows() > 0 { 1.0 } else { 0.0 };
    let mut center: f64 = if b_minus.nrows() > 0 { 1.0 } else { 0.0 };
    for j in 1..=GRID_POINTS {
        let t = t_max * j as f64 / GRID_POINTS as f64;
        if b_plus.nrows() > 0 {
            stable = stable.max(spectral_norm(&expm_t(b_plus, t)) * (sigma * t).exp());
        }
        if b_minus.nrows() > 0 {
            center = center.max(spectral_norm(&expm_t(b_minus, -t)) / (1.0 + t.powi(m_pow as i32)));
        }
    }
    (stable, center)
}

/// Growth constant `K̄` with `‖e^{Pt}‖ ≤ K̄e^{−rt}` and `‖e^{−Ct}‖ ≤ K̄e^{−rt}`
/// for `t ≥ 0`, sampled on `[0, t_max]` and inflated like `K`.
pub(crate) fn shifted_growth_constant(p: &DMatrix<f64>, c: &DMatrix<f64>, rate: f64, t_max: f64) -> f64 {
    let mut worst: f64 = 1.0;
    for j in 1..=GRID_POINTS {
        let t = t_max * j as f64 / GRID_POINTS as f64;
        let w = (rate * t).exp();
        if p.nrows() > 0 {
            worst = worst.max(spectral_norm(&expm_t(p, t)) * w);
        }
        if c.nrows() > 0 {
            worst = worst.max(spectral_norm(&expm_t(c, -t)) * w);
        }
    }
    (K_INFLATION * worst).max(1.0)
}
