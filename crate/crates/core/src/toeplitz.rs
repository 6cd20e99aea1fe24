//! Spanwise mode coupling in the scalar channel reduction
//! −∇·(μ*∇u) + iωρu = f on (0, H) × (z-torus), Dirichlet at both walls.
//!
//! A Fourier expansion in z turns multiplication by a z-periodic μ* into a
//! fixed mode-index shift, so the system is block Toeplitz over the modes
//! m = −M..M. Each block is a tridiagonal flux-form operator on the interior
//! nodes of a shared grid.
//!
//! Certificates use the κ-energy norm ‖v‖²_κ = ‖v′‖² + κ²‖v‖² on each mode
//! and its dual for forcings. In that pairing every coupling block is
//! bounded by |w_n|·max|μ0*| independently of the grid.

use crate::error::{invalid, Error, Result};
use crate::linalg::{cholesky_tridiag, sigma_max, sigma_min, ThomasFactor, Tridiag};
use crate::oned_solvers::Grid1D;
use crate::viscosity::{bessel_tail, spanwise_passivity_check, SpanwiseFamily, SpanwiseTexture};
use crate::{C64, I};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeForcing {
    pub m: i64,
    /// Node samples i = 0..N; the wall entries are ignored.
    pub values: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSystemSpec {
    pub m_max: usize,
    pub grid: Grid1D,
    pub texture: SpanwiseTexture,
    pub rho: f64,
    pub omega: f64,
    /// Empty means f̂₀ ≡ 1 and all other modes zero.
    #[serde(default)]
    pub forcing: Vec<ModeForcing>,
}

impl BlockSystemSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m_max < 1 {
            return invalid("truncation level M must be at least 1");
        }
        self.texture.validate()?;
        if self.texture.baseline.len() != self.grid.n + 1 {
            return invalid(format!(
                "baseline has {} samples, grid has {} nodes",
                self.texture.baseline.len(),
                self.grid.n + 1
            ));
        }
        if !(self.rho > 0.0) || !(self.omega >= 0.0) {
            return invalid("rho must be positive and omega nonnegative");
        }
        let pass = spanwise_passivity_check(&self.texture);
        if !pass.pass {
            return invalid(format!("texture fails the passivity check, margin {:e}", pass.margin));
        }
        for f in &self.forcing {
            if f.m.unsigned_abs() as usize > self.m_max {
                return invalid(format!("forcing mode {} outside -M..M", f.m));
            }
            if f.values.len() != self.grid.n + 1 {
                return invalid("forcing samples must match the grid nodes");
            }
        }
        Ok(())
    }

    /// Interior forcing per mode, index m + M.
    pub fn forcing_blocks(&self) -> Vec<Vec<C64>> {
        let p = 2 * self.m_max + 1;
        let ni = self.grid.n - 1;
        let mut out = vec![vec![ZERO; ni]; p];
        if self.forcing.is_empty() {
            out[self.m_max] = vec![C64::new(1.0, 0.0); ni];
        } else {
            for f in &self.forcing {
                let j = (f.m + self.m_max as i64) as usize;
                for i in 0..ni {
                    out[j][i] += f.values[i + 1];
                }
            }
        }
        out
    }

    pub fn with_family(&self, family: SpanwiseFamily) -> BlockSystemSpec {
        let mut s = self.clone();
        s.texture.family = family;
        s
    }

    pub fn with_eps(&self, eps: f64) -> BlockSystemSpec {
        let f = self.texture.family.with_eps(eps);
        self.with_family(f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    /// Mode offset n: target m receives from source m − n.
    pub offset: i64,
    pub weight: C64,
    /// Per target mode (index m + M); None when the source lies outside −M..M.
    pub blocks: Vec<Option<Tridiag>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockToeplitzMatrix {
    pub m_max: usize,
    pub grid: Grid1D,
    pub rho: f64,
    pub omega: f64,
    pub family: SpanwiseFamily,
    pub lz: f64,
    pub kappas: Vec<f64>,
    pub mu_mid: Vec<C64>,
    /// Average of the adjacent midpoint values, interior nodes only.
    pub mu_node: Vec<C64>,
    pub diag: Vec<Tridiag>,
    pub couplings: Vec<Coupling>,
}

fn flux_block(mu_mid: &[C64], mu_node: &[C64], h: f64, weight: C64, mass: f64, shift: C64) -> Tridiag {
    let ni = mu_node.len();
    let h2 = h * h;
    let mut t = Tridiag::zeros(ni);
    for r in 0..ni {
        let ml = mu_mid[r] * weight;
        let mr = mu_mid[r + 1] * weight;
        t.diag[r] = (ml + mr) / h2 + mu_node[r] * weight * mass + shift;
        if r + 1 < ni {
            t.sup[r] = -mr / h2;
            t.sub[r] = -mr / h2;
        }
    }
    t
}

pub fn assemble_blocks(spec: &BlockSystemSpec) -> Result<BlockToeplitzMatrix> {
    spec.validate()?;
    let g = spec.grid;
    let h = g.h();
    let mm = spec.m_max as i64;
    let b = &spec.texture.baseline;
    let mu_mid: Vec<C64> = (0..g.n).map(|i| 0.5 * (b[i] + b[i + 1])).collect();
    let mu_node: Vec<C64> = (1..g.n).map(|i| 0.5 * (mu_mid[i - 1] + mu_mid[i])).collect();
    let kappas: Vec<f64> = (-mm..=mm).map(|m| spec.texture.kappa(m)).collect();
    let diag = kappas
        .iter()
        .map(|&k| flux_block(&mu_mid, &mu_node, h, C64::new(1.0, 0.0), k * k, I * spec.omega * spec.rho))
        .collect();
    let couplings = spec
        .texture
        .family
        .coupling_weights()
        .into_iter()
        .map(|(n, w)| {
            let blocks = (-mm..=mm)
                .map(|m| {
                    let src = m - n;
                    if src.abs() > mm {
                        None
                    } else {
                        let c = spec.texture.kappa(m) * spec.texture.kappa(src);
                        Some(flux_block(&mu_mid, &mu_node, h, w, c, ZERO))
                    }
                })
                .collect();
            Coupling {
                offset: n,
                weight: w,
                blocks,
            }
        })
        .collect();
    Ok(BlockToeplitzMatrix {
        m_max: spec.m_max,
        grid: g,
        rho: spec.rho,
        omega: spec.omega,
        family: spec.texture.family,
        lz: spec.texture.lz,
        kappas,
        mu_mid,
        mu_node,
        diag,
        couplings,
    })
}

pub type ModeVec = Vec<Vec<C64>>;

impl BlockToeplitzMatrix {
    pub fn n_modes(&self) -> usize {
        2 * self.m_max + 1
    }

    pub fn n_interior(&self) -> usize {
        self.grid.n - 1
    }

    pub fn index(&self, m: i64) -> Option<usize> {
        let j = m + self.m_max as i64;
        if j < 0 || j as usize >= self.n_modes() {
            None
        } else {
            Some(j as usize)
        }
    }

    pub fn zeros(&self) -> ModeVec {
        vec![vec![ZERO; self.n_interior()]; self.n_modes()]
    }

    /// C v.
    pub fn apply_coupling(&self, v: &ModeVec) -> ModeVec {
        let mut y = self.zeros();
        let mm = self.m_max as i64;
        for c in &self.couplings {
            for (jt, blk) in c.blocks.iter().enumerate() {
                if let Some(b) = blk {
                    let src = (jt as i64 - mm - c.offset + mm) as usize;
                    b.matvec_add(&v[src], &mut y[jt]);
                }
            }
        }
        y
    }

    /// (D + C) v.
    pub fn apply(&self, v: &ModeVec) -> ModeVec {
        let mut y = self.apply_coupling(v);
        for (j, d) in self.diag.iter().enumerate() {
            d.matvec_add(&v[j], &mut y[j]);
        }
        y
    }

    pub fn diag_factors(&self) -> Result<Vec<ThomasFactor>> {
        self.diag
            .iter()
            .enumerate()
            .map(|(j, d)| {
                d.factor().map_err(|_| Error::SingularMode {
                    mode: j as i64 - self.m_max as i64,
                })
            })
            .collect()
    }

    /// Dense node-major blocks (A_i, B_i, C_i) of the block-tridiagonal form.
    fn node_blocks(&self) -> (Vec<DMatrix<C64>>, Vec<DMatrix<C64>>, Vec<DMatrix<C64>>) {
        let p = self.n_modes();
        let ni = self.n_interior();
        let mm = self.m_max as i64;
        let mut a = vec![DMatrix::zeros(p, p); ni];
        let mut b = vec![DMatrix::zeros(p, p); ni];
        let mut c = vec![DMatrix::zeros(p, p); ni];
        let mut put = |t: &Tridiag, row: usize, col: usize| {
            for i in 0..ni {
                b[i][(row, col)] += t.diag[i];
                if i > 0 {
                    a[i][(row, col)] += t.sub[i - 1];
                }
                if i + 1 < ni {
                    c[i][(row, col)] += t.sup[i];
                }
            }
        };
        for (j, d) in self.diag.iter().enumerate() {
            put(d, j, j);
        }
        for cp in &self.couplings {
            for (jt, blk) in cp.blocks.iter().enumerate() {
                if let Some(t) = blk {
                    let src = (jt as i64 - cp.offset) as usize;
                    put(t, jt, src);
                }
            }
        }
        let _ = mm;
        (a, b, c)
    }

    /// Block-energy norm of a mode vector.
    pub fn energy_norm(&self, v: &ModeVec) -> f64 {
        let h = self.grid.h();
        v.iter()
            .zip(&self.kappas)
            .map(|(x, &k)| energy_sq(x, k, h))
            .sum::<f64>()
            .sqrt()
    }

    /// h-weighted L² norm of a mode vector.
    pub fn l2_norm(&self, v: &ModeVec) -> f64 {
        let h = self.grid.h();
        v.iter().map(|x| l2_sq(x, h)).sum::<f64>().sqrt()
    }

    /// Dual norm of the functional v ↦ h Σ v̄·f.
    pub fn dual_norm(&self, f: &ModeVec) -> f64 {
        let h = self.grid.h();
        f.iter()
            .zip(&self.kappas)
            .map(|(x, &k)| {
                let g: Vec<C64> = x.iter().map(|z| z * h).collect();
                dual_sq(&g, k, h)
            })
            .sum::<f64>()
            .sqrt()
    }
}

pub(crate) fn l2_sq(x: &[C64], h: f64) -> f64 {
    h * x.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

pub(crate) fn energy_sq(x: &[C64], kappa: f64, h: f64) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for i in 0..=n {
        let a = if i == 0 { ZERO } else { x[i - 1] };
        let b = if i == n { ZERO } else { x[i] };
        s += (b - a).norm_sqr() / h;
    }
    s + kappa * kappa * l2_sq(x, h)
}

/// ‖R^{-T} g‖² with S = RᵀR the energy Gram matrix.
fn dual_sq(g: &[C64], kappa: f64, h: f64) -> f64 {
    let n = g.len();
    let (d, e) = gram_cholesky(n, kappa, h);
    let mut y = vec![ZERO; n];
    for i in 0..n {
        let mut v = g[i];
        if i > 0 {
            v -= e[i - 1] * y[i - 1];
        }
        y[i] = v / d[i];
    }
    y.iter().map(|z| z.norm_sqr()).sum()
}

fn gram_cholesky(n: usize, kappa: f64, h: f64) -> (Vec<f64>, Vec<f64>) {
    let diag = vec![2.0 / h + kappa * kappa * h; n];
    let off = vec![-1.0 / h; n.saturating_sub(1)];
    cholesky_tridiag(&diag, &off).expect("energy Gram matrix is positive definite")
}

/// Dense R⁻¹ for the energy Gram factor.
fn gram_rinv(n: usize, kappa: f64, h: f64) -> DMatrix<C64> {
    let (d, e) = gram_cholesky(n, kappa, h);
    let mut r = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        r[(i, i)] = C64::new(d[i], 0.0);
        if i + 1 < n {
            r[(i, i + 1)] = C64::new(e[i], 0.0);
        }
    }
    r.solve_upper_triangular(&DMatrix::identity(n, n))
        .expect("bidiagonal factor is nonsingular")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolveMethod {
    Direct,
    Neumann { order: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSolution {
    pub m_max: usize,
    pub grid: Grid1D,
    pub kappas: Vec<f64>,
    /// Interior samples per mode, index m + M.
    pub modes: ModeVec,
    pub method: SolveMethod,
    /// ‖(D + C)V − F‖₂ / ‖F‖₂.
    pub residual: f64,
    pub certificate: Option<SmallnessCertificate>,
    /// Energy-norm remainder bound of the truncated series.
    pub remainder_bound: Option<f64>,
    /// Terms (−1)^j T^j W of a Neumann solve.
    #[serde(skip)]
    pub terms: Vec<ModeVec>,
}

impl ModeSolution {
    pub fn mode(&self, m: i64) -> &[C64] {
        &self.modes[(m + self.m_max as i64) as usize]
    }

    /// Node values 0..N including the zero wall values.
    pub fn profile(&self, m: i64) -> Vec<C64> {
        let mut v = vec![ZERO];
        v.extend_from_slice(self.mode(m));
        v.push(ZERO);
        v
    }

    pub fn l2_mode_norm(&self, m: i64) -> f64 {
        l2_sq(self.mode(m), self.grid.h()).sqrt()
    }

    pub fn energy_mode_norm(&self, m: i64) -> f64 {
        let k = self.kappas[(m + self.m_max as i64) as usize];
        energy_sq(self.mode(m), k, self.grid.h()).sqrt()
    }
}

fn residual_rel(sys: &BlockToeplitzMatrix, v: &ModeVec, f: &ModeVec) -> f64 {
    let r = sys.apply(v);
    let mut num = 0.0;
    let mut den = 0.0;
    for (ri, fi) in r.iter().zip(f) {
        for (a, b) in ri.iter().zip(fi) {
            num += (a - b).norm_sqr();
            den += b.norm_sqr();
        }
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

fn lu_checked(m: DMatrix<C64>, m_max: usize) -> Result<nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>> {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lu = m.lu();
    let u = lu.u();
    for j in 0..u.nrows() {
        let p = u[(j, j)].norm();
        if !(p > 1e-14 * scale) || !p.is_finite() {
            return Err(Error::SingularMode {
                mode: j as i64 - m_max as i64,
            });
        }
    }
    Ok(lu)
}

/// Block-tridiagonal elimination over the nodes with dense mode blocks.
pub fn solve_direct(sys: &BlockToeplitzMatrix, forcing: &ModeVec) -> Result<ModeSolution> {
    let p = sys.n_modes();
    let ni = sys.n_interior();
    if forcing.len() != p || forcing.iter().any(|f| f.len() != ni) {
        return invalid("forcing shape does not match the block system");
    }
    let (a, b, c) = sys.node_blocks();
    let rhs = |i: usize| nalgebra::DVector::from_fn(p, |j, _| forcing[j][i]);
    let mut gs: Vec<DMatrix<C64>> = Vec::with_capacity(ni);
    let mut ys: Vec<nalgebra::DVector<C64>> = Vec::with_capacity(ni);
    for i in 0..ni {
        let (piv, fi) = if i == 0 {
            (b[0].clone(), rhs(0))
        } else {
            (&b[i] - &a[i] * &gs[i - 1], rhs(i) - &a[i] * &ys[i - 1])
        };
        let lu = lu_checked(piv, sys.m_max)?;
        let g = if i + 1 < ni {
            lu.solve(&c[i]).ok_or(Error::Numeric("block solve failed".into()))?
        } else {
            DMatrix::zeros(p, p)
        };
        let y = lu.solve(&fi).ok_or(Error::Numeric("block solve failed".into()))?;
        gs.push(g);
        ys.push(y);
    }
    let mut x = vec![nalgebra::DVector::<C64>::zeros(p); ni];
    x[ni - 1] = ys[ni - 1].clone();
    for i in (0..ni - 1).rev() {
        x[i] = &ys[i] - &gs[i] * &x[i + 1];
    }
    let mut modes = sys.zeros();
    for i in 0..ni {
        for j in 0..p {
            modes[j][i] = x[i][j];
        }
    }
    let residual = residual_rel(sys, &modes, forcing);
    Ok(ModeSolution {
        m_max: sys.m_max,
        grid: sys.grid,
        kappas: sys.kappas.clone(),
        modes,
        method: SolveMethod::Direct,
        residual,
        certificate: None,
        remainder_bound: None,
        terms: Vec::new(),
    })
}

/// D⁻¹ F, one tridiagonal solve per mode.
pub fn decoupled_solve(factors: &[ThomasFactor], f: &ModeVec) -> Result<ModeVec> {
    f.iter().zip(factors).map(|(x, fac)| fac.solve(x)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallnessCertificate {
    /// max_m ‖L(κ_m)⁻¹‖ from the dual energy norm to the energy norm.
    pub g_max: f64,
    /// Schur-test bound on ‖C‖ in the same pairing.
    pub k_max: f64,
    /// G_max · K_max ≥ ‖T‖.
    pub eps_t_bound: f64,
    pub converges: bool,
    /// Largest single coupling block norm.
    pub k_block_max: f64,
    /// Two-direction summed form Σ_n max_m ‖K_n^{(m)}‖.
    pub k_sum: f64,
    /// Plain h-weighted L² counterparts, reported only.
    pub g_max_l2: f64,
    pub k_max_l2: f64,
}

impl SmallnessCertificate {
    /// q^{N+1}/(1 − q)·‖W‖ with q = eps_t_bound.
    pub fn remainder_bound(&self, order: usize, w_norm: f64) -> f64 {
        if !self.converges {
            return f64::INFINITY;
        }
        let q = self.eps_t_bound;
        q.powi(order as i32 + 1) / (1.0 - q) * w_norm
    }
}

fn tridiag_dense_scaled(t: &Tridiag, s: f64) -> DMatrix<C64> {
    t.to_dense() * C64::new(s, 0.0)
}

/// Schur test for a block operator given its block norms.
fn schur_bound(entries: &[(usize, usize, f64)], p: usize) -> f64 {
    let mut row = vec![0.0; p];
    let mut col = vec![0.0; p];
    for &(i, j, v) in entries {
        row[i] += v;
        col[j] += v;
    }
    let r = row.iter().cloned().fold(0.0, f64::max);
    let c = col.iter().cloned().fold(0.0, f64::max);
    (r * c).sqrt()
}

pub fn smallness_certificate(sys: &BlockToeplitzMatrix) -> SmallnessCertificate {
    let h = sys.grid.h();
    let ni = sys.n_interior();
    let mm = sys.m_max as i64;
    let p = sys.n_modes();
    let mut rinv: HashMap<i64, DMatrix<C64>> = HashMap::new();
    let mut get_rinv = |m: i64| -> DMatrix<C64> {
        rinv.entry(m.abs())
            .or_insert_with(|| gram_rinv(ni, sys.kappas[(m + mm) as usize], h))
            .clone()
    };
    let mut g_max = 0.0f64;
    let mut g_l2 = 0.0f64;
    let mut g_cache: HashMap<i64, (f64, f64)> = HashMap::new();
    for m in -mm..=mm {
        let j = (m + mm) as usize;
        let (ge, gl) = *g_cache.entry(m.abs()).or_insert_with(|| {
            let ri = get_rinv(m);
            let l = tridiag_dense_scaled(&sys.diag[j], h);
            let x = ri.adjoint() * l * &ri;
            let smin_e = sigma_min(&x);
            let smin_l = sigma_min(&sys.diag[j].to_dense());
            (1.0 / smin_e, 1.0 / smin_l)
        });
        g_max = g_max.max(ge);
        g_l2 = g_l2.max(gl);
    }
    let mut ent_e = Vec::new();
    let mut ent_l = Vec::new();
    let mut k_block_max = 0.0f64;
    let mut k_sum = 0.0;
    let mut k_cache: HashMap<(i64, i64, i64), (f64, f64)> = HashMap::new();
    for c in &sys.couplings {
        let mut per_offset = 0.0f64;
        for (jt, blk) in c.blocks.iter().enumerate() {
            if let Some(t) = blk {
                let m = jt as i64 - mm;
                let src = m - c.offset;
                let key = if m < 0 || (m == 0 && src < 0) {
                    (-m, -src, -c.offset)
                } else {
                    (m, src, c.offset)
                };
                let (ke, kl) = *k_cache.entry(key).or_insert_with(|| {
                    let kd = tridiag_dense_scaled(t, h);
                    let x = get_rinv(m).adjoint() * kd * get_rinv(src);
                    (sigma_max(&x), sigma_max(&t.to_dense()))
                });
                let js = (src + mm) as usize;
                ent_e.push((jt, js, ke));
                ent_l.push((jt, js, kl));
                per_offset = per_offset.max(ke);
                k_block_max = k_block_max.max(ke);
            }
        }
        k_sum += per_offset;
    }
    let k_max = schur_bound(&ent_e, p);
    let k_l2 = schur_bound(&ent_l, p);
    let eps_t = g_max * k_max;
    SmallnessCertificate {
        g_max,
        k_max,
        eps_t_bound: eps_t,
        converges: eps_t < 1.0,
        k_block_max,
        k_sum,
        g_max_l2: g_l2,
        k_max_l2: k_l2,
    }
}

/// Truncated Neumann series V_N = Σ_{j≤N} (−T)^j W with T = D⁻¹C.
pub fn solve_neumann(sys: &BlockToeplitzMatrix, forcing: &ModeVec, order: usize) -> Result<ModeSolution> {
    let cert = smallness_certificate(sys);
    if !cert.converges {
        return Err(Error::CertificateFailed {
            eps_t: cert.eps_t_bound,
        });
    }
    neumann_terms(sys, forcing, order, Some(cert))
}

/// Series terms without the certificate; callers handle convergence.
pub fn neumann_terms(
    sys: &BlockToeplitzMatrix,
    forcing: &ModeVec,
    order: usize,
    cert: Option<SmallnessCertificate>,
) -> Result<ModeSolution> {
    let factors = sys.diag_factors()?;
    let w = decoupled_solve(&factors, forcing)?;
    let mut terms = vec![w.clone()];
    let mut v = w.clone();
    for _ in 0..order {
        let last = terms.last().unwrap();
        let cx = sys.apply_coupling(last);
        let mut t = decoupled_solve(&factors, &cx)?;
        for x in t.iter_mut().flatten() {
            *x = -*x;
        }
        for (a, b) in v.iter_mut().zip(&t) {
            for (p, q) in a.iter_mut().zip(b) {
                *p += q;
            }
        }
        terms.push(t);
    }
    let residual = residual_rel(sys, &v, forcing);
    let w_norm = sys.energy_norm(&w);
    let remainder_bound = cert.as_ref().map(|c| c.remainder_bound(order, w_norm));
    Ok(ModeSolution {
        m_max: sys.m_max,
        grid: sys.grid,
        kappas: sys.kappas.clone(),
        modes: v,
        method: SolveMethod::Neumann { order },
        residual,
        certificate: cert,
        remainder_bound,
        terms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityConstants {
    pub mu_min: f64,
    pub mu_max: f64,
    /// Scalar energy coercivity μ_min (the tensor form carries a factor 2).
    pub alpha0: f64,
    pub c0: f64,
    /// Analytic Dirichlet Poincaré constant H/π.
    pub c_p: f64,
    pub tau: f64,
    pub alpha_l: f64,
}

fn baseline_bounds(sys: &BlockToeplitzMatrix) -> (f64, f64) {
    let all = sys.mu_mid.iter().chain(&sys.mu_node);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for m in all {
        lo = lo.min(m.re);
        hi = hi.max(m.norm());
    }
    (lo, hi)
}

pub fn stability_constants(sys: &BlockToeplitzMatrix) -> StabilityConstants {
    let cert = smallness_certificate(sys);
    stability_with(sys, &cert)
}

pub fn stability_with(sys: &BlockToeplitzMatrix, cert: &SmallnessCertificate) -> StabilityConstants {
    let (mu_min, mu_max) = baseline_bounds(sys);
    let c_p = sys.grid.height / std::f64::consts::PI;
    let tau = if sys.couplings.is_empty() { 0.0 } else { cert.k_max };
    StabilityConstants {
        mu_min,
        mu_max,
        alpha0: mu_min,
        c0: mu_max + sys.omega * sys.rho * c_p * c_p,
        c_p,
        tau,
        alpha_l: mu_min - tau,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub n_band: usize,
    pub m_modes: usize,
    pub delta_n: f64,
    pub alpha_l: f64,
    pub alpha_l_n: f64,
    pub texture_term: f64,
    pub response_term: f64,
}

/// Σ_{|q|>N} |w_{q m0}|, the weight of the harmonics a band-N texture drops.
pub fn omitted_weight(family: &SpanwiseFamily, n_band: usize) -> f64 {
    match *family {
        SpanwiseFamily::PhaseOnly { eps, .. } => bessel_tail(eps, n_band),
        SpanwiseFamily::OneSided { eps, .. } => {
            if n_band >= 1 {
                0.0
            } else {
                eps.abs()
            }
        }
        SpanwiseFamily::Cosine { eps, .. } => {
            if n_band >= 1 {
                0.0
            } else {
                eps.abs()
            }
        }
    }
}

fn band_limited(family: &SpanwiseFamily, n_band: usize) -> SpanwiseFamily {
    match *family {
        SpanwiseFamily::PhaseOnly { eps, m0, .. } => SpanwiseFamily::PhaseOnly { eps, m0, band: n_band },
        f => {
            if n_band == 0 {
                f.with_eps(0.0)
            } else {
                f
            }
        }
    }
}

/// Texture-band and response-truncation error terms.
///
/// The band-N system is re-solved at the spec's truncation level; modes with
/// |m| > m_modes form the a-posteriori response tail.
pub fn truncation_error_report(spec: &BlockSystemSpec, n_band: usize, m_modes: usize) -> Result<TruncationReport> {
    if m_modes >= spec.m_max {
        return invalid("response cutoff must be below the truncation level M");
    }
    let trunc = spec.with_family(band_limited(&spec.texture.family, n_band));
    let sys = assemble_blocks(&trunc)?;
    let cert = smallness_certificate(&sys);
    let st = stability_with(&sys, &cert);
    let delta_n = omitted_weight(&spec.texture.family, n_band) * st.mu_max;
    let alpha_l_n = st.alpha_l;
    let alpha_l = alpha_l_n - delta_n;
    if !(alpha_l > 0.0) {
        return Err(Error::BoundUnavailable(format!(
            "alpha_L = {alpha_l:e} is not positive"
        )));
    }
    let f = trunc.forcing_blocks();
    let f_star = sys.dual_norm(&f);
    let sol = solve_direct(&sys, &f)?;
    let h = sys.grid.h();
    let mm = sys.m_max as i64;
    let tail: f64 = (-mm..=mm)
        .filter(|m| m.unsigned_abs() as usize > m_modes)
        .map(|m| energy_sq(sol.mode(m), sys.kappas[(m + mm) as usize], h))
        .sum::<f64>()
        .sqrt();
    let c_l_n = st.c0 + st.tau;
    Ok(TruncationReport {
        n_band,
        m_modes,
        delta_n,
        alpha_l,
        alpha_l_n,
        texture_term: delta_n / (alpha_l * alpha_l_n) * f_star,
        response_term: c_l_n / alpha_l_n * tail,
    })
}

/// S_j = {s·m0 : |s| ≤ j, s ≡ j (mod 2), |s·m0| ≤ M}.
pub fn support_sets(m0: i64, m_max: usize, j: usize) -> BTreeSet<i64> {
    let j = j as i64;
    (-j..=j)
        .filter(|s| (s - j).rem_euclid(2) == 0)
        .map(|s| s * m0)
        .filter(|m| m.unsigned_abs() as usize <= m_max)
        .collect()
}

/// Modes reachable from 0 in exactly j shifts by the given offsets, never
/// leaving −M..M.
pub fn reachable_sets(offsets: &[i64], m_max: usize, j: usize) -> BTreeSet<i64> {
    let mut cur: BTreeSet<i64> = [0].into_iter().collect();
    for _ in 0..j {
        let mut next = BTreeSet::new();
        for &m in &cur {
            for &n in offsets {
                let t = m + n;
                if t.unsigned_abs() as usize <= m_max {
                    next.insert(t);
                }
            }
        }
        cur = next;
    }
    cur
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    pub pass: bool,
    /// Largest ‖outside S_j‖/‖T^jW‖ over the checked orders.
    pub max_ratio: f64,
    /// (j, mode) pairs exceeding the tolerance.
    pub violations: Vec<(usize, i64)>,
}

pub const SUPPORT_TOL: f64 = 1e-13;

/// Checks supp(T^jW) against the reachable sets of the coupling offsets,
/// assuming forcing only in mode 0.
pub fn verify_support(sol: &ModeSolution, offsets: &[i64]) -> Result<SupportReport> {
    if sol.terms.is_empty() {
        return invalid("solution carries no Neumann terms");
    }
    let mm = sol.m_max as i64;
    let h = sol.grid.h();
    let mut max_ratio = 0.0f64;
    let mut violations = vec![];
    for (j, t) in sol.terms.iter().enumerate() {
        let s = reachable_sets(offsets, sol.m_max, j);
        let total: f64 = t.iter().map(|x| l2_sq(x, h)).sum::<f64>().sqrt();
        if total == 0.0 {
            continue;
        }
        for m in -mm..=mm {
            if s.contains(&m) {
                continue;
            }
            let r = l2_sq(&t[(m + mm) as usize], h).sqrt() / total;
            max_ratio = max_ratio.max(r);
            if r > SUPPORT_TOL {
                violations.push((j, m));
            }
        }
    }
    Ok(SupportReport {
        pass: violations.is_empty(),
        max_ratio,
        violations,
    })
}

/// û₀ through second order for a symmetric nearest-neighbour texture:
/// W₀ − L₀⁻¹[K₊ u₋ + K₋ u₊] with u_± = −L_±⁻¹ K_± W₀.
pub fn second_order_mean_mode(sys: &BlockToeplitzMatrix, forcing: &ModeVec) -> Result<Vec<C64>> {
    let m0 = match sys.family {
        SpanwiseFamily::Cosine { m0, .. } => m0,
        _ => {
            return Err(Error::UnsupportedTexture(
                "second-order mean-mode formula needs the cosine family".into(),
            ))
        }
    };
    let cert = smallness_certificate(sys);
    if !cert.converges {
        return Err(Error::CertificateFailed {
            eps_t: cert.eps_t_bound,
        });
    }
    let factors = sys.diag_factors()?;
    let j0 = sys.index(0).unwrap();
    let w0 = factors[j0].solve(&forcing[j0])?;
    if sys.couplings.is_empty() {
        return Ok(w0);
    }
    let block = |offset: i64, target: i64| -> Option<&Tridiag> {
        let c = sys.couplings.iter().find(|c| c.offset == offset)?;
        c.blocks[sys.index(target)?].as_ref()
    };
    let mut acc = vec![ZERO; sys.n_interior()];
    for s in [m0, -m0] {
        let Some(js) = sys.index(s) else { continue };
        let (Some(out), Some(back)) = (block(s, s), block(-s, 0)) else {
            continue;
        };
        let ks = out.matvec(&w0);
        let us: Vec<C64> = factors[js].solve(&ks)?.into_iter().map(|z| -z).collect();
        back.matvec_add(&us, &mut acc);
    }
    let corr = factors[j0].solve(&acc)?;
    Ok(w0.iter().zip(&corr).map(|(a, b)| a - b).collect())
}
