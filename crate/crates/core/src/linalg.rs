//! Small dense and tridiagonal helpers shared by the solvers.

use crate::error::{Error, Result};
use crate::C64;
use nalgebra::DMatrix;

/// Complex tridiagonal matrix stored by diagonals.
///
/// `sub[i]` is A[i+1][i], `sup[i]` is A[i][i+1].
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    pub sub: Vec<C64>,
    pub diag: Vec<C64>,
    pub sup: Vec<C64>,
}

impl Tridiag {
    pub fn zeros(n: usize) -> Self {
        Tridiag {
            sub: vec![C64::new(0.0, 0.0); n.saturating_sub(1)],
            diag: vec![C64::new(0.0, 0.0); n],
            sup: vec![C64::new(0.0, 0.0); n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let n = self.len();
        let mut y = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.sub[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.sup[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }

    /// Adds `y += A x`.
    pub fn matvec_add(&self, x: &[C64], y: &mut [C64]) {
        let n = self.len();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.sub[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.sup[i] * x[i + 1];
            }
            y[i] += s;
        }
    }

    pub fn scaled(&self, c: C64) -> Tridiag {
        Tridiag {
            sub: self.sub.iter().map(|v| v * c).collect(),
            diag: self.diag.iter().map(|v| v * c).collect(),
            sup: self.sup.iter().map(|v| v * c).collect(),
        }
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].norm();
                if i > 0 {
                    s += self.sub[i - 1].norm();
                }
                if i + 1 < n {
                    s += self.sup[i].norm();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.len();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = self.diag[i];
            if i + 1 < n {
                a[(i, i + 1)] = self.sup[i];
                a[(i + 1, i)] = self.sub[i];
            }
        }
        a
    }

    /// Thomas elimination without pivoting.
    pub fn solve(&self, rhs: &[C64]) -> Result<Vec<C64>> {
        self.factor()?.solve(rhs)
    }

    pub fn factor(&self) -> Result<ThomasFactor> {
        let n = self.len();
        if n == 0 {
            return Err(Error::InvalidInput("empty tridiagonal system".into()));
        }
        let mut c_star = vec![C64::new(0.0, 0.0); n];
        let mut piv = vec![C64::new(0.0, 0.0); n];
        let mut p = self.diag[0];
        check_pivot(p, 0)?;
        piv[0] = p;
        for i in 1..n {
            c_star[i - 1] = self.sup[i - 1] / p;
            p = self.diag[i] - self.sub[i - 1] * c_star[i - 1];
            check_pivot(p, i)?;
            piv[i] = p;
        }
        Ok(ThomasFactor {
            sub: self.sub.clone(),
            c_star,
            piv,
        })
    }
}

fn check_pivot(p: C64, row: usize) -> Result<()> {
    if !(p.norm() >= 1e-300) || !p.re.is_finite() || !p.im.is_finite() {
        return Err(Error::Singular { row, pivot: p.norm() });
    }
    Ok(())
}

/// Reusable Thomas factorization.
#[derive(Debug, Clone)]
pub struct ThomasFactor {
    sub: Vec<C64>,
    c_star: Vec<C64>,
    piv: Vec<C64>,
}

impl ThomasFactor {
    pub fn solve(&self, rhs: &[C64]) -> Result<Vec<C64>> {
        let n = self.piv.len();
        if rhs.len() != n {
            return Err(Error::InvalidInput(format!(
                "rhs length {} does not match system size {}",
                rhs.len(),
                n
            )));
        }
        let mut x = vec![C64::new(0.0, 0.0); n];
        x[0] = rhs[0] / self.piv[0];
        for i in 1..n {
            x[i] = (rhs[i] - self.sub[i - 1] * x[i - 1]) / self.piv[i];
        }
        for i in (0..n - 1).rev() {
            let next = x[i + 1];
            x[i] -= self.c_star[i] * next;
        }
        Ok(x)
    }
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Singular values in descending order.
pub fn singular_values(a: &DMatrix<C64>) -> Vec<f64> {
    let sv = a.clone().svd(false, false).singular_values;
    let mut v: Vec<f64> = sv.iter().copied().collect();
    v.sort_by(|x, y| y.total_cmp(x));
    v
}

pub fn sigma_max(a: &DMatrix<C64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    singular_values(a)[0]
}

pub fn sigma_min(a: &DMatrix<C64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    *singular_values(a).last().unwrap()
}

/// Least-squares slope of log(y) against log(x).
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in lx.iter().zip(&ly) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

/// Real symmetric tridiagonal Cholesky factor: upper bidiagonal R with A = RᵀR.
///
/// Returns (diag, super) of R.
pub fn cholesky_tridiag(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = diag.len();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n.saturating_sub(1)];
    let mut prev = 0.0;
    for i in 0..n {
        let v = diag[i] - if i > 0 { prev * prev } else { 0.0 };
        if !(v > 0.0) {
            return Err(Error::Numeric(format!("Gram matrix not positive at row {i}")));
        }
        d[i] = v.sqrt();
        if i + 1 < n {
            e[i] = off[i] / d[i];
            prev = e[i];
        }
    }
    Ok((d, e))
}
