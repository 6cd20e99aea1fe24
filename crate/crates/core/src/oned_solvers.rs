//! Flux-form finite differences for −(μ u′)′ + iωρ u = f on a uniform grid.
//!
//! Nodes y_i = i·h, i = 0..N, with μ sampled at cell midpoints. The boundary
//! flux uses the half-cell balance so that the discrete power identity is
//! exact and the wall traction is second order.

use crate::error::{invalid, Result};
use crate::linalg::{max_abs, norm2, Tridiag};
use crate::{C64, I};
use serde::{Deserialize, Serialize};

pub const MIN_CELLS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub height: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(height: f64, n: usize) -> Result<Self> {
        if !(height > 0.0 && height.is_finite()) {
            return invalid(format!("grid height must be positive, got {height}"));
        }
        if n < MIN_CELLS {
            return invalid(format!("grid needs at least {MIN_CELLS} cells, got {n}"));
        }
        Ok(Grid1D { height, n })
    }

    pub fn h(&self) -> f64 {
        self.height / self.n as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n {
            self.height
        } else {
            i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.node(i)).collect()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        let h = self.h();
        (0..self.n).map(|i| (i as f64 + 0.5) * h).collect()
    }

    /// Trapezoid weights: h inside, h/2 at the two ends.
    pub fn node_weights(&self) -> Vec<f64> {
        let h = self.h();
        let mut w = vec![h; self.n + 1];
        w[0] = 0.5 * h;
        w[self.n] = 0.5 * h;
        w
    }

    /// Index of the node nearest to y, and the snap distance.
    pub fn snap(&self, y: f64) -> (usize, f64) {
        let i = (y / self.h()).round().clamp(0.0, self.n as f64) as usize;
        (i, (self.node(i) - y).abs())
    }
}

/// Root of k² = iωρ/μ with Re k > 0.
pub fn k_branch(omega: f64, rho: f64, mu: C64) -> C64 {
    let k = (I * omega * rho / mu).sqrt();
    if k.re < 0.0 {
        -k
    } else {
        k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundaryCondition {
    Dirichlet { bottom: C64, top: C64 },
    /// u(0) given; u′(H) + k_∞ u(H) = 0 with μ_∞ the last midpoint value.
    RobinTop { bottom: C64, k_inf: C64 },
}

impl BoundaryCondition {
    pub fn bottom(&self) -> C64 {
        match *self {
            BoundaryCondition::Dirichlet { bottom, .. } | BoundaryCondition::RobinTop { bottom, .. } => {
                bottom
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxFormProblem {
    pub grid: Grid1D,
    pub mu_mid: Vec<C64>,
    pub rho: f64,
    pub omega: f64,
    pub bc: BoundaryCondition,
    /// Node values f_i, i = 0..N. Entries on Dirichlet nodes are ignored.
    pub forcing: Vec<C64>,
}

impl FluxFormProblem {
    pub fn new(
        grid: Grid1D,
        mu_mid: Vec<C64>,
        rho: f64,
        omega: f64,
        bc: BoundaryCondition,
        forcing: Option<Vec<C64>>,
    ) -> Result<Self> {
        let p = FluxFormProblem {
            grid,
            forcing: forcing.unwrap_or_else(|| vec![C64::new(0.0, 0.0); grid.n + 1]),
            mu_mid,
            rho,
            omega,
            bc,
        };
        p.validate()?;
        Ok(p)
    }

    /// μ evaluated at the cell midpoints of `grid`.
    pub fn from_profile(
        grid: Grid1D,
        mu: impl Fn(f64) -> C64,
        rho: f64,
        omega: f64,
        bc: BoundaryCondition,
        forcing: Option<Vec<C64>>,
    ) -> Result<Self> {
        let mu_mid = grid.midpoints().into_iter().map(mu).collect();
        FluxFormProblem::new(grid, mu_mid, rho, omega, bc, forcing)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu_mid.len() != self.grid.n {
            return invalid(format!(
                "expected {} midpoint viscosities, got {}",
                self.grid.n,
                self.mu_mid.len()
            ));
        }
        if self.forcing.len() != self.grid.n + 1 {
            return invalid(format!(
                "expected {} forcing samples, got {}",
                self.grid.n + 1,
                self.forcing.len()
            ));
        }
        if !(self.rho > 0.0) || !(self.omega > 0.0) {
            return invalid("rho and omega must be positive");
        }
        if let Some((j, m)) = self.mu_mid.iter().enumerate().find(|(_, m)| !(m.re > 0.0)) {
            return invalid(format!("passivity violated at midpoint {j}: Re mu = {}", m.re));
        }
        if let BoundaryCondition::RobinTop { k_inf, .. } = self.bc {
            if !(k_inf.re > 0.0) {
                return invalid(format!("Robin closure needs Re k_inf > 0, got {}", k_inf.re));
            }
        }
        Ok(())
    }

    fn mu_inf(&self) -> C64 {
        self.mu_mid[self.grid.n - 1]
    }
}

/// Assembled system over all N+1 nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledSystem {
    pub matrix: Tridiag,
    pub rhs: Vec<C64>,
}

/// Interior rows −[μ₊(u_{i+1}−u_i) − μ₋(u_i−u_{i−1})]/h² + iωρu_i = f_i.
///
/// Dirichlet rows are identity rows. The Robin row is the half-cell balance
/// (2/h)[μ_{N−½}(u_N − u_{N−1})/h + μ_∞ k_∞ u_N] + iωρ u_N = f_N.
pub fn assemble(p: &FluxFormProblem) -> AssembledSystem {
    let n = p.grid.n;
    let h = p.grid.h();
    let h2 = h * h;
    let iwr = I * p.omega * p.rho;
    let mut a = Tridiag::zeros(n + 1);
    let mut rhs = p.forcing.clone();
    for i in 1..n {
        let ml = p.mu_mid[i - 1];
        let mr = p.mu_mid[i];
        a.sub[i - 1] = -ml / h2;
        a.diag[i] = (ml + mr) / h2 + iwr;
        a.sup[i] = -mr / h2;
    }
    a.diag[0] = C64::new(1.0, 0.0);
    rhs[0] = p.bc.bottom();
    match p.bc {
        BoundaryCondition::Dirichlet { top, .. } => {
            a.diag[n] = C64::new(1.0, 0.0);
            rhs[n] = top;
        }
        BoundaryCondition::RobinTop { k_inf, .. } => {
            let ml = p.mu_mid[n - 1];
            a.sub[n - 1] = -2.0 * ml / h2;
            a.diag[n] = 2.0 * ml / h2 + 2.0 * p.mu_inf() * k_inf / h + iwr;
        }
    }
    AssembledSystem { matrix: a, rhs }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution1D {
    pub u: Vec<C64>,
    /// Face fluxes μ_{i+½}(u_{i+1} − u_i)/h, i = 0..N−1.
    pub tau: Vec<C64>,
    /// ‖Au − b‖ / (‖A‖_∞‖u‖ + ‖b‖).
    pub residual: f64,
    pub problem: FluxFormProblem,
}

pub fn solve_bvp(p: &FluxFormProblem) -> Result<Solution1D> {
    p.validate()?;
    let sys = assemble(p);
    let u = sys.matrix.solve(&sys.rhs)?;
    let au = sys.matrix.matvec(&u);
    let r: Vec<C64> = au.iter().zip(&sys.rhs).map(|(a, b)| a - b).collect();
    let residual = norm2(&r) / (sys.matrix.norm_inf() * norm2(&u) + norm2(&sys.rhs)).max(1e-300);
    let tau = face_fluxes(p, &u);
    Ok(Solution1D {
        u,
        tau,
        residual,
        problem: p.clone(),
    })
}

fn face_fluxes(p: &FluxFormProblem, u: &[C64]) -> Vec<C64> {
    let h = p.grid.h();
    (0..p.grid.n)
        .map(|j| p.mu_mid[j] * (u[j + 1] - u[j]) / h)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Wall {
    Bottom,
    Top,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum FluxRule {
    /// Face value at the first/last cell, first order at the wall.
    Face,
    /// Face value corrected by the half-cell balance, second order.
    #[default]
    HalfCell,
}

/// Flux τ = μ u′ at a wall. The traction on a bottom wall is −τ(0).
pub fn wall_flux(sol: &Solution1D, wall: Wall) -> C64 {
    wall_flux_with(sol, wall, FluxRule::HalfCell)
}

pub fn wall_flux_with(sol: &Solution1D, wall: Wall, rule: FluxRule) -> C64 {
    wall_flux_of(&sol.problem, &sol.u, wall, rule)
}

fn wall_flux_of(p: &FluxFormProblem, u: &[C64], wall: Wall, rule: FluxRule) -> C64 {
    let n = p.grid.n;
    let h = p.grid.h();
    let iwr = I * p.omega * p.rho;
    match (wall, rule) {
        (Wall::Bottom, FluxRule::Face) => p.mu_mid[0] * (u[1] - u[0]) / h,
        (Wall::Top, FluxRule::Face) => p.mu_mid[n - 1] * (u[n] - u[n - 1]) / h,
        (Wall::Bottom, FluxRule::HalfCell) => {
            p.mu_mid[0] * (u[1] - u[0]) / h - 0.5 * h * (iwr * u[0] - p.forcing[0])
        }
        (Wall::Top, FluxRule::HalfCell) => {
            p.mu_mid[n - 1] * (u[n] - u[n - 1]) / h + 0.5 * h * (iwr * u[n] - p.forcing[n])
        }
    }
}

impl Solution1D {
    /// Flux at nodes: wall values from the half-cell rule, face averages inside.
    pub fn node_flux(&self) -> Vec<C64> {
        let n = self.problem.grid.n;
        let mut t = vec![C64::new(0.0, 0.0); n + 1];
        t[0] = wall_flux(self, Wall::Bottom);
        t[n] = wall_flux(self, Wall::Top);
        for i in 1..n {
            t[i] = 0.5 * (self.tau[i - 1] + self.tau[i]);
        }
        t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBalance {
    /// τ(H) conj(u_N) − τ(0) conj(u_0).
    pub boundary_work: C64,
    /// Σ_faces μ |Δu|²/h.
    pub dissipation: C64,
    /// iωρ Σ w_i |u_i|².
    pub inertia: C64,
    /// Σ w_i conj(u_i) f_i.
    pub forcing_work: C64,
    pub re_residual: f64,
    pub im_residual: f64,
}

/// Discrete power identity B = D + I − F, exact by summation by parts.
pub fn power_residual(sol: &Solution1D) -> PowerBalance {
    power_balance(&sol.problem, &sol.u)
}

pub fn power_balance(p: &FluxFormProblem, u: &[C64]) -> PowerBalance {
    let n = p.grid.n;
    let h = p.grid.h();
    let w = p.grid.node_weights();
    let t0 = wall_flux_of(p, u, Wall::Bottom, FluxRule::HalfCell);
    let tn = wall_flux_of(p, u, Wall::Top, FluxRule::HalfCell);
    let boundary_work = tn * u[n].conj() - t0 * u[0].conj();
    let mut dissipation = C64::new(0.0, 0.0);
    let mut dis_abs = 0.0;
    for j in 0..n {
        let d = (u[j + 1] - u[j]).norm_sqr() / h;
        dissipation += p.mu_mid[j] * d;
        dis_abs += p.mu_mid[j].norm() * d;
    }
    let mass: f64 = (0..=n).map(|i| w[i] * u[i].norm_sqr()).sum();
    let inertia = I * p.omega * p.rho * mass;
    let forcing_work: C64 = (0..=n).map(|i| w[i] * u[i].conj() * p.forcing[i]).sum();
    let r = boundary_work - dissipation - inertia + forcing_work;
    let scale = (boundary_work.norm() + dis_abs + inertia.norm() + forcing_work.norm()).max(1e-300);
    PowerBalance {
        boundary_work,
        dissipation,
        inertia,
        forcing_work,
        re_residual: r.re.abs() / scale,
        im_residual: r.im.abs() / scale,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCompensation {
    pub w: Vec<C64>,
    pub identity_residual: f64,
}

/// w = e^{iφ} u and the centred-difference check of u′ = e^{−iφ}(w′ − iφ′w).
pub fn phase_compensate(u: &[C64], phi: &[f64], h: f64) -> Result<PhaseCompensation> {
    if u.len() != phi.len() {
        return invalid("u and phi must have equal length");
    }
    let w: Vec<C64> = u
        .iter()
        .zip(phi)
        .map(|(a, p)| C64::from_polar(1.0, *p) * a)
        .collect();
    let mut res: f64 = 0.0;
    for i in 1..u.len().saturating_sub(1) {
        let du = (u[i + 1] - u[i - 1]) / (2.0 * h);
        let dw = (w[i + 1] - w[i - 1]) / (2.0 * h);
        let dphi = (phi[i + 1] - phi[i - 1]) / (2.0 * h);
        let rhs = C64::from_polar(1.0, -phi[i]) * (dw - I * dphi * w[i]);
        res = res.max((du - rhs).norm());
    }
    Ok(PhaseCompensation {
        w,
        identity_residual: res,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    Interval { height: f64 },
    HalfSpace,
}

/// Dirichlet Green's function of −μ∂²+μk² for constant μ.
pub fn greens_function_constant(mu: C64, k: C64, geometry: Geometry, y: f64, s: f64) -> C64 {
    match geometry {
        Geometry::Interval { height } => {
            let (lo, hi) = if y <= s { (y, s) } else { (s, y) };
            // sinh(kH) ≠ 0 whenever Re k > 0.
            (k * lo).sinh() * (k * (height - hi)).sinh() / (mu * k * (k * height).sinh())
        }
        Geometry::HalfSpace => {
            ((-k * (y - s).abs()).exp() - (-k * (y + s)).exp()) / (2.0 * mu * k)
        }
    }
}

/// Max node error used by refinement studies.
pub fn max_node_error(sol: &Solution1D, exact: impl Fn(f64) -> C64) -> f64 {
    let g = sol.problem.grid;
    let diff: Vec<C64> = (0..=g.n).map(|i| sol.u[i] - exact(g.node(i))).collect();
    max_abs(&diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::loglog_slope;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn couette(n: usize, mu: C64) -> FluxFormProblem {
        let g = Grid1D::new(1.0, n).unwrap();
        FluxFormProblem::new(
            g,
            vec![mu; n],
            1.0,
            3.0,
            BoundaryCondition::Dirichlet {
                bottom: c(0.0, 0.0),
                top: c(1.0, 0.0),
            },
            None,
        )
        .unwrap()
    }

    #[test]
    fn grid_rejects_coarse() {
        assert!(Grid1D::new(1.0, 7).is_err());
        assert!(Grid1D::new(0.0, 16).is_err());
    }

    #[test]
    fn constant_coefficient_rows() {
        let p = couette(16, c(2.0, 0.0));
        let s = assemble(&p);
        let h2 = (1.0f64 / 16.0).powi(2);
        for i in 1..16 {
            assert!((s.matrix.sub[i - 1] - c(-2.0 / h2, 0.0)).norm() < 1e-9);
            assert!((s.matrix.diag[i] - c(4.0 / h2, 3.0)).norm() < 1e-9);
            assert!((s.matrix.sup[i] - c(-2.0 / h2, 0.0)).norm() < 1e-9);
        }
        assert_eq!(s.matrix.diag[0], c(1.0, 0.0));
        assert_eq!(s.rhs[16], c(1.0, 0.0));
    }

    #[test]
    fn alternating_coefficients_match_hand_assembly() {
        let g = Grid1D::new(0.8, 8).unwrap();
        let mu: Vec<C64> = (0..8).map(|j| if j % 2 == 0 { c(1.0, 0.0) } else { c(3.0, 1.0) }).collect();
        let p = FluxFormProblem::new(
            g,
            mu,
            2.0,
            0.5,
            BoundaryCondition::Dirichlet {
                bottom: c(0.0, 0.0),
                top: c(0.0, 0.0),
            },
            None,
        )
        .unwrap();
        let s = assemble(&p);
        // h = 0.1, 1/h² = 100; node 3 sits between cells 2 (μ=1) and 3 (μ=3+i).
        assert!((s.matrix.sub[2] - c(-100.0, 0.0)).norm() < 1e-12);
        assert!((s.matrix.diag[3] - c(400.0, 101.0)).norm() < 1e-12);
        assert!((s.matrix.sup[3] - c(-300.0, -100.0)).norm() < 1e-12);
        // node 4: cells 3 (3+i) and 4 (1)
        assert!((s.matrix.diag[4] - c(400.0, 101.0)).norm() < 1e-12);
    }

    #[test]
    fn robin_row_stencil() {
        let g = Grid1D::new(1.0, 10).unwrap();
        let k = c(1.0, 1.0);
        let p = FluxFormProblem::new(
            g,
            vec![c(1.0, 0.0); 10],
            1.0,
            2.0,
            BoundaryCondition::RobinTop {
                bottom: c(1.0, 0.0),
                k_inf: k,
            },
            None,
        )
        .unwrap();
        let s = assemble(&p);
        assert!((s.matrix.sub[9] - c(-200.0, 0.0)).norm() < 1e-12);
        assert!((s.matrix.diag[10] - (c(200.0, 0.0) + 20.0 * k + c(0.0, 2.0))).norm() < 1e-12);
    }

    #[test]
    fn couette_profile_second_order() {
        let mu = c(1.0, 0.0);
        let k = k_branch(3.0, 1.0, mu);
        let exact = |y: f64| (k * y).sinh() / k.sinh();
        let ns = [64usize, 128, 256, 512];
        let errs: Vec<f64> = ns
            .iter()
            .map(|&n| max_node_error(&solve_bvp(&couette(n, mu)).unwrap(), exact))
            .collect();
        let hs: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
        let order = loglog_slope(&hs, &errs);
        assert!((order - 2.0).abs() < 0.1, "order {order}");
    }

    #[test]
    fn homogeneous_problem_has_zero_solution() {
        let g = Grid1D::new(1.0, 20).unwrap();
        let p = FluxFormProblem::new(
            g,
            vec![c(1.0, 0.3); 20],
            1.0,
            1.0,
            BoundaryCondition::Dirichlet {
                bottom: c(0.0, 0.0),
                top: c(0.0, 0.0),
            },
            None,
        )
        .unwrap();
        let s = solve_bvp(&p).unwrap();
        assert!(s.u.iter().all(|z| *z == c(0.0, 0.0)));
        assert_eq!(wall_flux(&s, Wall::Bottom), c(0.0, 0.0));
    }

    #[test]
    fn bottom_flux_matches_constant_traction() {
        let mu = c(1.0, 0.0);
        let k = k_branch(3.0, 1.0, mu);
        let exact = mu * k / k.sinh();
        let s = solve_bvp(&couette(512, mu)).unwrap();
        let t = wall_flux(&s, Wall::Bottom);
        assert!((t - exact).norm() < 1e-4, "{t} vs {exact}");
        // Moving bottom wall: the face rule is only first order there.
        let g = Grid1D::new(1.0, 256).unwrap();
        let p = FluxFormProblem::new(
            g,
            vec![mu; 256],
            1.0,
            3.0,
            BoundaryCondition::Dirichlet {
                bottom: c(1.0, 0.0),
                top: c(0.0, 0.0),
            },
            None,
        )
        .unwrap();
        let s = solve_bvp(&p).unwrap();
        let exact = -mu * k / k.tanh();
        let half = wall_flux(&s, Wall::Bottom);
        let face = wall_flux_with(&s, Wall::Bottom, FluxRule::Face);
        assert!((half - exact).norm() < 1e-4);
        assert!((face - exact).norm() > 10.0 * (half - exact).norm());
    }

    #[test]
    fn power_identity_exact_and_detects_perturbation() {
        let g = Grid1D::new(1.0, 50).unwrap();
        let p = FluxFormProblem::from_profile(
            g,
            |y| C64::from_polar(1.0 + y, 0.3 * (5.0 * y).sin()),
            1.3,
            2.0,
            BoundaryCondition::Dirichlet {
                bottom: c(0.5, 0.1),
                top: c(1.0, -0.2),
            },
            Some((0..=50).map(|i| c(1.0, i as f64 * 0.01)).collect()),
        )
        .unwrap();
        let s = solve_bvp(&p).unwrap();
        let b = power_residual(&s);
        assert!(b.re_residual <= 1e-12 && b.im_residual <= 1e-12, "{b:?}");
        let mut u = s.u.clone();
        u[3] += c(1e-3, 0.0);
        let bp = power_balance(&p, &u);
        assert!(bp.re_residual > 1e-6);
    }

    #[test]
    fn compensation_identity() {
        let n = 101;
        let h = 0.01;
        let u: Vec<C64> = (0..n).map(|i| (-c(1.0, 1.0) * (i as f64 * h)).exp()).collect();
        let r = phase_compensate(&u, &vec![0.4; n], h).unwrap();
        assert!(r.identity_residual <= 1e-12);
        assert!((r.w[5] - C64::from_polar(1.0, 0.4) * u[5]).norm() < 1e-15);
        let z = phase_compensate(&vec![c(0.0, 0.0); n], &vec![0.1; n], h).unwrap();
        assert_eq!(z.identity_residual, 0.0);
    }

    #[test]
    fn compensation_refinement_second_order() {
        let k = c(1.0, 1.0);
        let mut hs = vec![];
        let mut rs = vec![];
        for n in [50usize, 100, 200, 400] {
            let h = 1.0 / n as f64;
            let y: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
            let u: Vec<C64> = y.iter().map(|&t| (-k * t).exp()).collect();
            let phi: Vec<f64> = y.iter().map(|&t| 0.7 * t).collect();
            hs.push(h);
            rs.push(phase_compensate(&u, &phi, h).unwrap().identity_residual);
        }
        let s = loglog_slope(&hs, &rs);
        assert!((s - 2.0).abs() < 0.1, "slope {s}");
    }

    #[test]
    fn green_interval_boundary_and_symmetry() {
        let mu = c(1.2, 0.4);
        let k = k_branch(2.0, 1.0, mu);
        let g = Geometry::Interval { height: 1.5 };
        assert_eq!(greens_function_constant(mu, k, g, 0.0, 0.7), c(0.0, 0.0));
        let mut rng = 12345u64;
        let mut next = move || {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let (y, s) = (1.5 * next(), 1.5 * next());
            let a = greens_function_constant(mu, k, g, y, s);
            let b = greens_function_constant(mu, k, g, s, y);
            assert!((a - b).norm() <= 1e-14 * a.norm().max(1e-300));
        }
    }

    #[test]
    fn green_half_space_jump() {
        let mu = c(1.0, 0.0);
        let k = k_branch(2.0, 1.0, mu);
        let s = 0.8;
        let mut errs = vec![];
        let hs = [1e-3, 5e-4];
        for &h in &hs {
            let g = |y: f64| greens_function_constant(mu, k, Geometry::HalfSpace, y, s);
            let right = (g(s + h) - g(s)) / h;
            let left = (g(s) - g(s - h)) / h;
            errs.push(((right - left) + 1.0 / mu).norm());
        }
        assert!(errs[0] < 5e-3 && errs[1] < errs[0]);
    }

    #[test]
    fn discrete_delta_reproduces_green_function() {
        let mu = c(1.0, 0.2);
        let (omega, rho) = (2.0, 1.0);
        let k = k_branch(omega, rho, mu);
        let n = 400;
        let g = Grid1D::new(1.0, n).unwrap();
        let j = 120;
        let mut f = vec![c(0.0, 0.0); n + 1];
        f[j] = c(1.0 / g.h(), 0.0);
        let p = FluxFormProblem::new(
            g,
            vec![mu; n],
            rho,
            omega,
            BoundaryCondition::Dirichlet {
                bottom: c(0.0, 0.0),
                top: c(0.0, 0.0),
            },
            Some(f),
        )
        .unwrap();
        let s = solve_bvp(&p).unwrap();
        let geo = Geometry::Interval { height: 1.0 };
        let err = (0..=n)
            .map(|i| (s.u[i] - greens_function_constant(mu, k, geo, g.node(i), g.node(j))).norm())
            .fold(0.0, f64::max);
        assert!(err < 5.0 * g.h(), "err {err}");
    }

    #[test]
    fn solves_are_bitwise_deterministic() {
        let p = couette(100, c(1.0, 0.5));
        let a = solve_bvp(&p).unwrap();
        let b = solve_bvp(&p).unwrap();
        assert!(a.u.iter().zip(&b.u).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
    }

    proptest! {
        #[test]
        fn power_identity_random(
            n in 8usize..80,
            phases in prop::collection::vec(-1.2f64..1.2, 8..80),
            omega in 0.1f64..20.0,
            robin in any::<bool>(),
        ) {
            let g = Grid1D::new(1.0, n).unwrap();
            let mu: Vec<C64> = (0..n).map(|j| C64::from_polar(1.0, phases[j % phases.len()])).collect();
            let k = k_branch(omega, 1.0, mu[n - 1]);
            let bc = if robin {
                BoundaryCondition::RobinTop { bottom: c(1.0, 0.0), k_inf: k }
            } else {
                BoundaryCondition::Dirichlet { bottom: c(0.0, 0.0), top: c(0.3, 0.7) }
            };
            let p = FluxFormProblem::new(g, mu, 1.0, omega, bc, None).unwrap();
            let s = solve_bvp(&p).unwrap();
            prop_assert!(s.residual < 1e-12);
            let b = power_residual(&s);
            prop_assert!(b.re_residual <= 1e-12 && b.im_residual <= 1e-12);
            prop_assert!(b.dissipation.re >= 0.0);
        }
    }
}
