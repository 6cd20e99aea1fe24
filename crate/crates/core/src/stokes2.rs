//! Oscillating wall under a half-space with a phase defect near the wall.
//!
//! μ*(y) = μ_b e^{iεχ(y)} with μ_b = μ0 e^{iφ0}. The half-space is cut at
//! H ≳ y_∞ + 12/Re k0 and closed with the exact tail condition u′ + k0 u = 0.
//! The cut is stretched slightly so that ℓ falls on a node; a top-hat defect
//! is then represented exactly by the midpoint viscosities.

use crate::error::{invalid, Error, Result};
use crate::oned_solvers::{
    k_branch, solve_bvp, wall_flux, BoundaryCondition, FluxFormProblem, Grid1D, Solution1D, Wall,
};
use crate::viscosity::Chi;
use crate::{C64, I};
use serde::{Deserialize, Serialize};

/// Decay lengths 1/Re k0 kept below the defect.
pub const TAIL_DECAY_LENGTHS: f64 = 12.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpaceSetup {
    pub mu0: f64,
    /// Constant baseline phase φ0.
    #[serde(default)]
    pub phi0: f64,
    pub rho: f64,
    pub omega: f64,
    pub u_w: C64,
    pub eps: f64,
    pub chi: Chi,
    pub grid_n: usize,
}

impl HalfSpaceSetup {
    pub fn newtonian(mu0: f64, rho: f64, omega: f64, grid_n: usize) -> Self {
        HalfSpaceSetup {
            mu0,
            phi0: 0.0,
            rho,
            omega,
            u_w: C64::new(1.0, 0.0),
            eps: 0.0,
            chi: Chi::TopHat { ell: 0.0 },
            grid_n,
        }
    }

    pub fn with_defect(mut self, eps: f64, chi: Chi) -> Self {
        self.eps = eps;
        self.chi = chi;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu0 > 0.0) || !(self.rho > 0.0) || !(self.omega > 0.0) {
            return invalid("mu0, rho and omega must be positive");
        }
        if self.u_w == C64::new(0.0, 0.0) || !self.u_w.re.is_finite() || !self.u_w.im.is_finite() {
            return invalid("wall velocity amplitude must be nonzero and finite");
        }
        if self.eps != 0.0 {
            self.chi.validate()?;
        }
        // χ ∈ [0, 1], so the phase stays within φ0 + [min(0, ε), max(0, ε)].
        let worst = self.phi0.abs().max((self.phi0 + self.eps).abs());
        let margin = self.mu0 * worst.cos();
        if !(margin > 0.0) || worst >= std::f64::consts::FRAC_PI_2 {
            return invalid(format!("passivity violated: min Re mu = {margin}"));
        }
        Grid1D::new(1.0, self.grid_n)?;
        Ok(())
    }

    pub fn mu_base(&self) -> C64 {
        C64::from_polar(self.mu0, self.phi0)
    }

    pub fn k0(&self) -> C64 {
        k_branch(self.omega, self.rho, self.mu_base())
    }

    /// δ = √(2μ0/(ρω)).
    pub fn stokes_thickness(&self) -> f64 {
        (2.0 * self.mu0 / (self.rho * self.omega)).sqrt()
    }

    pub fn support_end(&self) -> f64 {
        match self.chi {
            Chi::TopHat { ell } | Chi::Ramp { ell } if ell <= 0.0 => 0.0,
            _ => self.chi.support_end(),
        }
    }

    /// Truncated grid; depends on χ and ℓ but not on ε.
    pub fn grid(&self) -> Result<Grid1D> {
        let n = self.grid_n;
        let h_min = self.support_end() + TAIL_DECAY_LENGTHS / self.k0().re;
        let ell = self.chi.ell();
        if ell > 0.0 {
            let cells = (ell * n as f64 / h_min).floor();
            if cells >= 1.0 {
                let h = ell / cells;
                return Grid1D::new(h * n as f64, n);
            }
        }
        Grid1D::new(h_min, n)
    }

    /// χ at cell midpoints of the solver grid.
    pub fn chi_mid(&self) -> Result<Vec<f64>> {
        Ok(self
            .grid()?
            .midpoints()
            .into_iter()
            .map(|y| if self.eps == 0.0 && self.chi.ell() <= 0.0 { 0.0 } else { self.chi.eval(y) })
            .collect())
    }

    pub fn problem(&self) -> Result<FluxFormProblem> {
        self.validate()?;
        let g = self.grid()?;
        let mb = self.mu_base();
        let mu_mid = self
            .chi_mid()?
            .into_iter()
            .map(|x| mb * C64::from_polar(1.0, self.eps * x))
            .collect();
        FluxFormProblem::new(
            g,
            mu_mid,
            self.rho,
            self.omega,
            BoundaryCondition::RobinTop {
                bottom: self.u_w,
                k_inf: self.k0(),
            },
            None,
        )
    }
}

/// U_w e^{−k0 y}.
pub fn baseline_profile(setup: &HalfSpaceSetup, y: f64) -> Result<C64> {
    if !(y >= 0.0) {
        return invalid(format!("y must be nonnegative, got {y}"));
    }
    Ok(setup.u_w * (-setup.k0() * y).exp())
}

/// Z_{w,0} = μ_b k0.
pub fn baseline_impedance(setup: &HalfSpaceSetup) -> C64 {
    setup.mu_base() * setup.k0()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpaceSolution {
    pub solution: Solution1D,
    pub traction: C64,
    pub impedance: C64,
}

pub fn solve(setup: &HalfSpaceSetup) -> Result<HalfSpaceSolution> {
    let p = setup.problem()?;
    let solution = solve_bvp(&p)?;
    let traction = -wall_flux(&solution, Wall::Bottom);
    Ok(HalfSpaceSolution {
        impedance: traction / setup.u_w,
        traction,
        solution,
    })
}

/// Z_w = −μ*(0)û′(0)/U_w from the half-cell wall flux.
pub fn wall_impedance_numeric(setup: &HalfSpaceSetup) -> Result<C64> {
    Ok(solve(setup)?.impedance)
}

/// Z_{w,1} = iμ_b k0² ∫ χ e^{−2k0 s} ds over the solver's cell-wise χ.
///
/// Each cell carries its midpoint χ value and is integrated exactly.
pub fn zw1_perturbative(setup: &HalfSpaceSetup) -> Result<C64> {
    let g = setup.grid()?;
    let k = setup.k0();
    let pre = I * setup.mu_base() * k * 0.5;
    let chi = setup.chi_mid()?;
    let mut acc = C64::new(0.0, 0.0);
    let mut e_lo = C64::new(1.0, 0.0);
    for (j, x) in chi.iter().enumerate() {
        let e_hi = (-2.0 * k * g.node(j + 1)).exp();
        if *x != 0.0 {
            acc += *x * (e_lo - e_hi);
        }
        e_lo = e_hi;
    }
    Ok(pre * acc)
}

/// Integration-by-parts form (iμ_b k0/2)[χ(0) + ∫ χ′ e^{−2k0 s} ds]; for
/// cell-wise χ the derivative is a sum of node jumps.
pub fn zw1_chiprime_form(setup: &HalfSpaceSetup) -> Result<C64> {
    let g = setup.grid()?;
    let k = setup.k0();
    let pre = I * setup.mu_base() * k * 0.5;
    let chi = setup.chi_mid()?;
    let n = chi.len();
    let mut acc = C64::new(chi[0], 0.0);
    for j in 1..n {
        let jump = chi[j] - chi[j - 1];
        if jump != 0.0 {
            acc += jump * (-2.0 * k * g.node(j)).exp();
        }
    }
    acc -= chi[n - 1] * (-2.0 * k * g.height).exp();
    Ok(pre * acc)
}

/// Cycle-averaged dissipation Σ Re μ |Δu|²/h plus the tail beyond the cut,
/// Re(μ_∞ k_∞)|u_N|², which is the exact dissipation of the decaying tail.
pub fn dissipation_integral(sol: &Solution1D) -> f64 {
    let p = &sol.problem;
    let n = p.grid.n;
    let h = p.grid.h();
    let bulk: f64 = (0..n)
        .map(|j| p.mu_mid[j].re * (sol.u[j + 1] - sol.u[j]).norm_sqr() / h)
        .sum();
    let tail = match p.bc {
        BoundaryCondition::RobinTop { k_inf, .. } => (p.mu_mid[n - 1] * k_inf).re * sol.u[n].norm_sqr(),
        BoundaryCondition::Dirichlet { .. } => 0.0,
    };
    bulk + tail
}

/// |Z_{w,1}| / (μ0|k0|² min(ℓ, 1/Re k0)); an order-of-magnitude indicator
/// only, since no constant is attached to the scaling.
pub fn zw1_scaling_ratio(setup: &HalfSpaceSetup) -> Result<f64> {
    let z1 = zw1_perturbative(setup)?;
    let k = setup.k0();
    let len = setup.chi.ell().min(1.0 / k.re);
    Ok(z1.norm() / (setup.mu0 * k.norm_sqr() * len))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityEntry {
    pub omega: f64,
    pub impedance: C64,
    /// Re Z / |Z|.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub entries: Vec<PositivityEntry>,
    pub min_margin: f64,
    pub pass: bool,
    pub offending: Vec<f64>,
}

/// Tolerance on Re Z relative to |Z|.
pub const POSITIVITY_TOL: f64 = 1e-10;

pub fn positivity_from_values(values: &[(f64, C64)]) -> PositivityReport {
    let entries: Vec<PositivityEntry> = values
        .iter()
        .map(|&(omega, z)| PositivityEntry {
            omega,
            impedance: z,
            margin: z.re / z.norm().max(1e-300),
        })
        .collect();
    let offending: Vec<f64> = entries
        .iter()
        .filter(|e| e.impedance.re < -POSITIVITY_TOL * e.impedance.norm())
        .map(|e| e.omega)
        .collect();
    PositivityReport {
        min_margin: entries.iter().map(|e| e.margin).fold(f64::INFINITY, f64::min),
        pass: offending.is_empty(),
        offending,
        entries,
    }
}

/// Re Z_w ≥ −1e−10|Z_w| at every setup of a sweep.
pub fn impedance_positivity(setups: &[HalfSpaceSetup]) -> Result<PositivityReport> {
    let values = setups
        .iter()
        .map(|s| Ok((s.omega, wall_impedance_numeric(s)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(positivity_from_values(&values))
}

/// Geometric frequency list from `lo` to `hi` inclusive.
pub fn geometric_sweep(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) || n == 0 {
        return Err(Error::InvalidInput(format!(
            "geometric sweep needs 0 < lo <= hi and n >= 1, got ({lo}, {hi}, {n})"
        )));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let r = (hi / lo).ln() / (n - 1) as f64;
    Ok((0..n).map(|i| lo * (r * i as f64).exp()).collect())
}
