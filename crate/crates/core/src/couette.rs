//! Oscillatory Couette flow between a fixed bottom wall and a top wall
//! moving with amplitude U_w, for layered and smoothly textured μ*(y).
//!
//! The state X = (û, τ̂) with τ̂ = μ*û′ obeys X′ = B X inside a layer, so a
//! layer of thickness Δ propagates it by T = cosh(kΔ) I + sinh(kΔ)/k · B.

use crate::error::{invalid, Error, Result};
use crate::oned_solvers::{
    k_branch, solve_bvp, wall_flux, BoundaryCondition, FluxFormProblem, Grid1D, Wall,
};
use crate::viscosity::PhaseTexture1D;
use crate::{C64, I};
use nalgebra::{DMatrix, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

pub type Mat2 = Matrix2<C64>;

/// sinh(z)/z, finite at z = 0.
fn sinhc(z: C64) -> C64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        C64::new(1.0, 0.0) + z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sinh() / z
    }
}

pub fn transfer_matrix(mu: C64, rho: f64, omega: f64, delta: f64) -> Result<Mat2> {
    if !(mu.re > 0.0) {
        return invalid(format!("layer viscosity must satisfy Re mu > 0, got {mu}"));
    }
    if !(delta >= 0.0) {
        return invalid(format!("layer thickness must be nonnegative, got {delta}"));
    }
    let k = k_branch(omega, rho, mu);
    let ch = (k * delta).cosh();
    let sk = sinhc(k * delta) * delta;
    let one_over_mu = C64::new(1.0, 0.0) / mu;
    Ok(Mat2::new(
        ch,
        sk * one_over_mu,
        sk * I * omega * rho,
        ch,
    ))
}

/// Scaling-and-squaring Taylor evaluation of exp(ΔB); test oracle only.
pub fn transfer_matrix_series(mu: C64, rho: f64, omega: f64, delta: f64) -> Mat2 {
    let b = Mat2::new(
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0) / mu,
        I * omega * rho,
        C64::new(0.0, 0.0),
    ) * C64::new(delta, 0.0);
    let norm = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let s = (norm.max(1e-300).log2().ceil() + 1.0).max(0.0) as i32;
    let a = b * C64::new(0.5f64.powi(s), 0.0);
    let mut term = Mat2::identity();
    let mut sum = Mat2::identity();
    for j in 1..30 {
        term = term * a * C64::new(1.0 / j as f64, 0.0);
        sum += term;
    }
    for _ in 0..s {
        sum = sum * sum;
    }
    sum
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub thickness: f64,
    pub mu: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStack {
    pub layers: Vec<Layer>,
    pub rho: f64,
    pub omega: f64,
    pub u_w: C64,
}

impl LayerStack {
    pub fn new(layers: Vec<Layer>, rho: f64, omega: f64, u_w: C64) -> Result<Self> {
        let s = LayerStack {
            layers,
            rho,
            omega,
            u_w,
        };
        s.validate()?;
        Ok(s)
    }

    /// Layers μ0 e^{iφ_j} from (Δ_j, φ_j) pairs.
    pub fn from_phases(mu0: f64, layers: &[(f64, f64)], rho: f64, omega: f64, u_w: C64) -> Result<Self> {
        LayerStack::new(
            layers
                .iter()
                .map(|&(thickness, phi)| Layer {
                    thickness,
                    mu: C64::from_polar(mu0, phi),
                })
                .collect(),
            rho,
            omega,
            u_w,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return invalid("layer stack is empty");
        }
        if !(self.rho > 0.0) || !(self.omega > 0.0) {
            return invalid("rho and omega must be positive");
        }
        for (j, l) in self.layers.iter().enumerate() {
            if !(l.thickness > 0.0 && l.thickness.is_finite()) {
                return invalid(format!("layer {j} thickness must be positive"));
            }
            if !(l.mu.re > 0.0) {
                return invalid(format!("layer {j} is not passive: Re mu = {}", l.mu.re));
            }
        }
        Ok(())
    }

    pub fn height(&self) -> f64 {
        self.layers.iter().map(|l| l.thickness).sum()
    }

    /// Interface heights including 0 and H.
    pub fn interfaces(&self) -> Vec<f64> {
        let mut y = vec![0.0];
        let mut acc = 0.0;
        for l in &self.layers {
            acc += l.thickness;
            y.push(acc);
        }
        y
    }

    pub fn mu_at(&self, y: f64) -> C64 {
        let mut acc = 0.0;
        for l in &self.layers {
            acc += l.thickness;
            if y < acc {
                return l.mu;
            }
        }
        self.layers.last().unwrap().mu
    }

    pub fn total_transfer(&self) -> Result<Mat2> {
        let mut t = Mat2::identity();
        for l in &self.layers {
            t = transfer_matrix(l.mu, self.rho, self.omega, l.thickness)? * t;
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferState {
    pub y: f64,
    pub u: C64,
    pub tau: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackSolution {
    pub tau_bottom: C64,
    pub tau_top: C64,
    /// States at 0, every interface, and H.
    pub interfaces: Vec<TransferState>,
}

/// τ(0) = U_w / T₁₂ and the interface states obtained by propagating (0, τ(0)).
pub fn stack_solve(stack: &LayerStack) -> Result<StackSolution> {
    stack.validate()?;
    let t = stack.total_transfer()?;
    let norm = t.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if t[(0, 1)].norm() < 1e-14 * norm {
        return Err(Error::ExceptionalCompatibility {
            t12: t[(0, 1)].norm(),
            norm,
        });
    }
    let tau0 = stack.u_w / t[(0, 1)];
    let mut x = Vector2::new(C64::new(0.0, 0.0), tau0);
    let mut y = 0.0;
    let mut states = vec![TransferState { y, u: x[0], tau: x[1] }];
    for l in &stack.layers {
        x = transfer_matrix(l.mu, stack.rho, stack.omega, l.thickness)? * x;
        y += l.thickness;
        states.push(TransferState { y, u: x[0], tau: x[1] });
    }
    // The top state is recomputed from the product to pin û(H) = U_w exactly.
    let top = states.last_mut().unwrap();
    top.u = stack.u_w;
    Ok(StackSolution {
        tau_bottom: tau0,
        tau_top: top.tau,
        interfaces: states,
    })
}

impl StackSolution {
    /// States at the requested heights, propagated from the nearest interface below.
    pub fn profile(&self, stack: &LayerStack, ys: &[f64]) -> Result<Vec<TransferState>> {
        ys.iter()
            .map(|&y| {
                if !(0.0..=stack.height() * (1.0 + 1e-14)).contains(&y) {
                    return invalid(format!("y = {y} outside the stack"));
                }
                let mut j = 0;
                while j + 1 < stack.layers.len() && self.interfaces[j + 1].y <= y {
                    j += 1;
                }
                let s = self.interfaces[j];
                let t = transfer_matrix(stack.layers[j].mu, stack.rho, stack.omega, (y - s.y).max(0.0))?;
                let x = t * Vector2::new(s.u, s.tau);
                Ok(TransferState { y, u: x[0], tau: x[1] })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdTraction {
    pub tau_bottom: C64,
    /// Largest distance between a layer interface and the node it was snapped to.
    pub snap_distance: f64,
}

/// Flux-form FD cross-check; each cell takes the layer at its midpoint.
pub fn fd_stack_problem(stack: &LayerStack, n: usize) -> Result<(FluxFormProblem, f64)> {
    let g = Grid1D::new(stack.height(), n)?;
    let snap = stack
        .interfaces()
        .iter()
        .map(|&y| g.snap(y).1)
        .fold(0.0, f64::max);
    let p = FluxFormProblem::from_profile(
        g,
        |y| stack.mu_at(y),
        stack.rho,
        stack.omega,
        BoundaryCondition::Dirichlet {
            bottom: C64::new(0.0, 0.0),
            top: stack.u_w,
        },
        None,
    )?;
    Ok((p, snap))
}

pub fn fd_traction(stack: &LayerStack, n: usize) -> Result<FdTraction> {
    let (p, snap_distance) = fd_stack_problem(stack, n)?;
    let sol = solve_bvp(&p)?;
    Ok(FdTraction {
        tau_bottom: wall_flux(&sol, Wall::Bottom),
        snap_distance,
    })
}

/// First-order bottom-traction change for μ = μ̄ e^{iεχ}:
/// τ₁ = μ̄ (ik/sinh kH) ∫ cosh(k(H−s)) χ(s) û₀′(s) ds by the trapezoid rule.
///
/// `chi` holds samples at the N+1 uniform nodes of [0, H].
pub fn tau_correction_first_order(mu_bar: C64, rho: f64, omega: f64, height: f64, u_w: C64, chi: &[f64]) -> Result<C64> {
    if !(mu_bar.re > 0.0) {
        return invalid(format!("Re mu_bar must be positive, got {}", mu_bar.re));
    }
    if chi.len() < 2 || !(height > 0.0) {
        return invalid("need at least two chi samples and H > 0");
    }
    let k = k_branch(omega, rho, mu_bar);
    let n = chi.len() - 1;
    let h = height / n as f64;
    let shk = (k * height).sinh();
    let mut acc = C64::new(0.0, 0.0);
    for (i, x) in chi.iter().enumerate() {
        let s = i as f64 * h;
        let du0 = u_w * k * (k * s).cosh() / shk;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        acc += w * (k * (height - s)).cosh() * *x * du0;
    }
    Ok(mu_bar * I * k / shk * acc * h)
}

/// Flux-form operator A_φ u = −(μ*u′)′ on interior nodes, and L = A_φ + iωρ I.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrices {
    pub a_phi: DMatrix<C64>,
    pub l: DMatrix<C64>,
    /// Node weight h of the discrete L² inner product.
    pub h: f64,
    pub grid: Grid1D,
}

pub fn operator_from_midpoints(mu_mid: &[C64], grid: Grid1D, rho: f64, omega: f64) -> OperatorMatrices {
    let n = grid.n;
    let m = n - 1;
    let h = grid.h();
    let h2 = h * h;
    let mut a = DMatrix::zeros(m, m);
    for r in 0..m {
        let i = r + 1;
        let ml = mu_mid[i - 1];
        let mr = mu_mid[i];
        a[(r, r)] = (ml + mr) / h2;
        if r > 0 {
            a[(r, r - 1)] = -ml / h2;
        }
        if r + 1 < m {
            a[(r, r + 1)] = -mr / h2;
        }
    }
    let mut l = a.clone();
    for r in 0..m {
        l[(r, r)] += I * omega * rho;
    }
    OperatorMatrices {
        a_phi: a,
        l,
        h,
        grid,
    }
}

/// Homogeneous-Dirichlet interior block of the flux-form assembly.
pub fn operator_matrix(texture: &PhaseTexture1D, grid: Grid1D, rho: f64, omega: f64) -> Result<OperatorMatrices> {
    texture.validate()?;
    if (grid.height - texture.height).abs() > 1e-12 * texture.height {
        return invalid("grid height must match the texture height");
    }
    let mu: Vec<C64> = grid.midpoints().into_iter().map(|y| texture.mu_at(y)).collect();
    Ok(operator_from_midpoints(&mu, grid, rho, omega))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{nonnormality_metric, OperatorHandle};
    use crate::linalg::{loglog_slope, norm2, sigma_max, sigma_min};
    use crate::viscosity::{Chi, PhaseProfile};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn det(t: &Mat2) -> C64 {
        t[(0, 0)] * t[(1, 1)] - t[(0, 1)] * t[(1, 0)]
    }

    #[test]
    fn zero_thickness_is_identity() {
        let t = transfer_matrix(c(1.0, 0.3), 1.0, 2.0, 0.0).unwrap();
        assert!((t - Mat2::identity()).iter().all(|z| z.norm() < 1e-16));
    }

    #[test]
    fn closed_form_matches_series_and_is_unimodular() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            // layers up to a few penetration depths, |k|Δ ≤ 4
            let mu = C64::from_polar(rng.gen_range(0.1..3.0), rng.gen_range(-1.4..1.4));
            let w = rng.gen_range(0.1..10.0);
            let d = rng.gen_range(0.0..4.0) / k_branch(w, 1.0, mu).norm();
            let t = transfer_matrix(mu, 1.0, w, d).unwrap();
            assert!((det(&t) - c(1.0, 0.0)).norm() < 1e-12);
            let s = transfer_matrix_series(mu, 1.0, w, d);
            let scale = t.iter().map(|z| z.norm()).fold(1.0, f64::max);
            assert!((t - s).iter().all(|z| z.norm() < 1e-12 * scale));
        }
    }

    #[test]
    fn split_layer_composes() {
        let mu = c(0.8, 0.4);
        let t = transfer_matrix(mu, 1.0, 3.0, 0.7).unwrap();
        let t12 = transfer_matrix(mu, 1.0, 3.0, 0.45).unwrap() * transfer_matrix(mu, 1.0, 3.0, 0.25).unwrap();
        assert!((t - t12).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn single_layer_traction() {
        let mu = C64::from_polar(1.0, 0.2);
        let s = LayerStack::new(vec![Layer { thickness: 1.3, mu }], 1.0, 2.0, c(1.0, 0.5)).unwrap();
        let r = stack_solve(&s).unwrap();
        let k = k_branch(2.0, 1.0, mu);
        let exact = mu * k * s.u_w / (k * 1.3).sinh();
        assert!((r.tau_bottom - exact).norm() < 1e-12 * exact.norm());
        let exact_top = mu * s.u_w * k / (k * 1.3).tanh();
        assert!((r.tau_top - exact_top).norm() < 1e-12 * exact_top.norm());
        let split = LayerStack::new(
            vec![Layer { thickness: 0.5, mu }, Layer { thickness: 0.8, mu }],
            1.0,
            2.0,
            s.u_w,
        )
        .unwrap();
        assert!((stack_solve(&split).unwrap().tau_bottom - exact).norm() < 1e-12 * exact.norm());
    }

    #[test]
    fn top_velocity_reached() {
        let s = LayerStack::from_phases(1.0, &[(0.4, 0.3), (0.6, -0.2)], 1.0, 5.0, c(1.0, 0.0)).unwrap();
        let r = stack_solve(&s).unwrap();
        let t = s.total_transfer().unwrap();
        let top = t * Vector2::new(c(0.0, 0.0), r.tau_bottom);
        assert!((top[0] - s.u_w).norm() < 1e-12);
    }

    #[test]
    fn two_layer_matches_fd() {
        let s = LayerStack::from_phases(1.0, &[(0.4, 0.3), (0.6, -0.2)], 1.0, 5.0, c(1.0, 0.0)).unwrap();
        let exact = stack_solve(&s).unwrap();
        let ns = [40usize, 80, 160, 320, 640];
        let mut errs = vec![];
        for &n in &ns {
            let fd = fd_traction(&s, n).unwrap();
            assert!(fd.snap_distance < 1e-12);
            errs.push((fd.tau_bottom - exact.tau_bottom).norm());
        }
        let hs: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
        let p = loglog_slope(&hs, &errs);
        assert!((p - 2.0).abs() < 0.15, "order {p}");
        // profile
        let (prob, _) = fd_stack_problem(&s, 320).unwrap();
        let sol = solve_bvp(&prob).unwrap();
        let ys = prob.grid.nodes();
        let prof = exact.profile(&s, &ys).unwrap();
        let err = prof.iter().zip(&sol.u).map(|(a, b)| (a.u - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-3, "profile err {err}");
    }

    #[test]
    fn exceptional_compatibility_detected() {
        // Real k with sinh(kH) = 0 cannot occur for passive layers, so build the
        // degenerate product directly through a stack whose T12 is tiny relative.
        let s = LayerStack::new(vec![Layer { thickness: 1e-20, mu: c(1.0, 0.0) }], 1.0, 1.0, c(1.0, 0.0)).unwrap();
        let r = stack_solve(&s);
        assert!(matches!(r, Err(Error::ExceptionalCompatibility { .. })), "{r:?}");
    }

    #[test]
    fn correction_closed_form_for_uniform_chi() {
        let mu = c(1.0, 0.0);
        let (rho, w, hgt, uw) = (1.0, 3.0, 1.0, c(1.0, 0.0));
        let n = 4000;
        let chi = vec![1.0; n + 1];
        let t1 = tau_correction_first_order(mu, rho, w, hgt, uw, &chi).unwrap();
        let k = k_branch(w, rho, mu);
        let sh = (k * hgt).sinh();
        let integral = (hgt * (k * hgt).cosh() + sh / k) * 0.5;
        let exact = mu * I * k / sh * uw * k / sh * integral;
        assert!((t1 - exact).norm() < 1e-6 * exact.norm(), "{t1} vs {exact}");
        assert_eq!(tau_correction_first_order(mu, rho, w, hgt, uw, &vec![0.0; 11]).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn correction_matches_finite_difference_in_eps() {
        let mu = c(1.0, 0.0);
        let (rho, w, hgt, uw) = (1.0, 4.0, 1.0, c(1.0, 0.0));
        let n = 800;
        let g = Grid1D::new(hgt, n).unwrap();
        let chi_f = |y: f64| (-((y - 0.3) / 0.1).powi(2)).exp();
        let chi: Vec<f64> = g.nodes().into_iter().map(chi_f).collect();
        let t1 = tau_correction_first_order(mu, rho, w, hgt, uw, &chi).unwrap();
        let tau = |eps: f64| {
            let p = FluxFormProblem::from_profile(
                g,
                |y| mu * C64::from_polar(1.0, eps * chi_f(y)),
                rho,
                w,
                BoundaryCondition::Dirichlet { bottom: c(0.0, 0.0), top: uw },
                None,
            )
            .unwrap();
            wall_flux(&solve_bvp(&p).unwrap(), Wall::Bottom)
        };
        let eps = 1e-3;
        let fd = (tau(eps) - tau(0.0)) / eps;
        assert!((fd - t1).norm() < 2e-3 * t1.norm(), "{fd} vs {t1}");
    }

    #[test]
    fn low_frequency_limit() {
        let s = LayerStack::from_phases(1.0, &[(0.5, 0.2), (0.5, 0.2)], 1.0, 1e-3, c(1.0, 0.0)).unwrap();
        let r = stack_solve(&s).unwrap();
        let kh = k_branch(1e-3, 1.0, C64::from_polar(1.0, 0.2)).norm() * 1.0;
        assert!(kh <= 0.05);
        let ys: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
        let prof = r.profile(&s, &ys).unwrap();
        let dev = prof.iter().map(|p| (p.u - c(p.y, 0.0)).norm()).fold(0.0, f64::max);
        assert!(dev <= 2.0 * kh * kh, "{dev}");
    }

    fn texture(profile: PhaseProfile) -> PhaseTexture1D {
        PhaseTexture1D::new(1.0, profile, 1.0).unwrap()
    }

    #[test]
    fn operator_structure() {
        let g = Grid1D::new(1.0, 16).unwrap();
        let op = operator_matrix(&texture(PhaseProfile::Constant { phi0: 0.0 }), g, 1.0, 1.0).unwrap();
        let h2 = g.h() * g.h();
        assert!((op.a_phi[(3, 3)] - c(2.0 / h2, 0.0)).norm() < 1e-9);
        assert!((op.a_phi[(3, 4)] - c(-1.0 / h2, 0.0)).norm() < 1e-9);
        assert!(((op.a_phi.adjoint() - &op.a_phi).norm()) < 1e-9);
        let rot = operator_matrix(&texture(PhaseProfile::Constant { phi0: 0.4 }), g, 1.0, 1.0).unwrap();
        let diff = &rot.a_phi - &op.a_phi * C64::from_polar(1.0, 0.4);
        assert!(diff.iter().all(|z| z.norm() < 1e-10));
        let two = texture(PhaseProfile::TwoLayer { phi1: 0.3, phi2: -0.2, y_c: 0.4 });
        let a = operator_matrix(&two, g, 1.0, 1.0).unwrap().a_phi;
        let mu_conj: Vec<C64> = g.midpoints().into_iter().map(|y| two.mu_at(y).conj()).collect();
        let b = operator_from_midpoints(&mu_conj, g, 1.0, 1.0).a_phi;
        let scale = a.norm();
        assert!((a.adjoint() - b).iter().all(|z| z.norm() <= 1e-14 * scale));
    }

    #[test]
    fn normality_dichotomy() {
        let g = Grid1D::new(1.0, 64).unwrap();
        let handle = |t: &PhaseTexture1D| {
            let op = operator_matrix(t, g, 1.0, 1.0).unwrap();
            OperatorHandle::uniform(op.a_phi, op.h, "A_phi")
        };
        let d0 = nonnormality_metric(&handle(&texture(PhaseProfile::Constant { phi0: 0.5 })));
        assert!(d0 <= 1e-12, "{d0}");
        let d1 = nonnormality_metric(&handle(&texture(PhaseProfile::TwoLayer { phi1: 0.3, phi2: -0.2, y_c: 0.4 })));
        assert!(d1 > 1e-6);
        let d2 = nonnormality_metric(&handle(&texture(PhaseProfile::SmoothDefect {
            eps: 0.1,
            chi: Chi::Ramp { ell: 0.5 },
        })));
        assert!(d2 > 0.0);
    }

    #[test]
    fn square_resolvent_sensitivity() {
        let g = Grid1D::new(1.0, 60).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let base: Vec<C64> = g.midpoints().iter().map(|&y| C64::from_polar(1.0, 0.3 * (3.0 * y).sin())).collect();
        let op = operator_from_midpoints(&base, g, 1.0, 5.0);
        let linv = op.l.clone().try_inverse().unwrap();
        let linv_norm = sigma_max(&linv);
        let h2 = g.h() * g.h();
        for _ in 0..20 {
            let dmu: Vec<C64> = (0..g.n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 1e-4).collect();
            let sup = dmu.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let pert: Vec<C64> = base.iter().zip(&dmu).map(|(a, b)| a + b).collect();
            let op2 = operator_from_midpoints(&pert, g, 1.0, 5.0);
            let f = nalgebra::DVector::from_fn(g.n - 1, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let u = op.l.clone().lu().solve(&f).unwrap();
            let u2 = op2.l.clone().lu().solve(&f).unwrap();
            let du: Vec<C64> = (u2 - &u).iter().copied().collect();
            // ‖δL‖ ≤ 4‖δμ‖∞/h²; ‖(L+δL)⁻¹‖ ≤ ‖L⁻¹‖/(1 − ‖L⁻¹‖‖δL‖).
            let dl = 4.0 * sup / h2;
            let q = linv_norm * dl;
            assert!(q < 1.0);
            let bound = linv_norm * linv_norm / (1.0 - q) * dl * f.norm();
            assert!(norm2(&du) <= bound);
            assert!(sigma_min(&op2.l) > 0.0);
        }
    }

    proptest! {
        #[test]
        fn unimodular_random(mag in 0.05f64..5.0, phase in -1.5f64..1.5, d in 0.0f64..3.0, w in 0.01f64..20.0) {
            // rounding in ad − bc grows like the squared entry size
            let t = transfer_matrix(C64::from_polar(mag, phase), 1.0, w, d).unwrap();
            let scale = t.iter().map(|z| z.norm_sqr()).fold(1.0, f64::max);
            prop_assert!((det(&t) - c(1.0, 0.0)).norm() < 1e-13 * scale);
        }
    }
}
