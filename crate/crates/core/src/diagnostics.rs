//! Operator and response diagnostics: resolvent gains, departure from
//! normality, numerical range, pseudospectra, spanwise signatures and
//! corner-local functionals on supplied 2D fields.
//!
//! Weighted norms are handled by conjugating with W^{1/2} before any SVD.

use crate::error::{invalid, Error, Result};
use crate::linalg::{sigma_max, sigma_min};
use crate::toeplitz::{solve_direct, BlockToeplitzMatrix, ModeSolution, ModeVec};
use crate::viscosity::SpanwiseTexture;
use crate::C64;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorHandle {
    pub matrix: DMatrix<C64>,
    pub norm_weight: Vec<f64>,
    pub label: String,
}

impl OperatorHandle {
    pub fn new(matrix: DMatrix<C64>, norm_weight: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if !matrix.is_square() {
            return invalid("operator must be square");
        }
        if norm_weight.len() != matrix.nrows() || norm_weight.iter().any(|w| !(*w > 0.0)) {
            return invalid("weights must be positive, one per row");
        }
        Ok(OperatorHandle {
            matrix,
            norm_weight,
            label: label.into(),
        })
    }

    /// Equal weights h.
    pub fn uniform(matrix: DMatrix<C64>, h: f64, label: impl Into<String>) -> Self {
        let n = matrix.nrows();
        OperatorHandle {
            matrix,
            norm_weight: vec![h; n],
            label: label.into(),
        }
    }

    /// W^{1/2} A W^{−1/2}, unitarily equivalent to A in the weighted norm.
    pub fn weighted(&self) -> DMatrix<C64> {
        let n = self.matrix.nrows();
        DMatrix::from_fn(n, n, |i, j| {
            self.matrix[(i, j)] * (self.norm_weight[i] / self.norm_weight[j]).sqrt()
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gain {
    pub value: f64,
    /// Set when the operator is numerically singular; value is then +∞.
    pub singular: bool,
}

fn gain_from_smin(s: f64, scale: f64) -> Gain {
    if !(s > 1e-15 * scale.max(f64::MIN_POSITIVE)) {
        Gain {
            value: f64::INFINITY,
            singular: true,
        }
    } else {
        Gain {
            value: 1.0 / s,
            singular: false,
        }
    }
}

pub fn resolvent_gain(op: &OperatorHandle) -> Gain {
    let b = op.weighted();
    gain_from_smin(sigma_min(&b), sigma_max(&b))
}

/// ‖D A⁻¹‖ with `out_weight` defining the norm on the range of D.
pub fn dissipation_weighted_gain(op: &OperatorHandle, d_op: &DMatrix<C64>, out_weight: &[f64]) -> Result<Gain> {
    if d_op.ncols() != op.dim() || out_weight.len() != d_op.nrows() {
        return invalid("derivative map shape does not match the operator");
    }
    let b = op.weighted();
    let scale = sigma_max(&b);
    let Some(inv) = b.clone().try_inverse() else {
        return Ok(Gain {
            value: f64::INFINITY,
            singular: true,
        });
    };
    if gain_from_smin(sigma_min(&b), scale).singular {
        return Ok(Gain {
            value: f64::INFINITY,
            singular: true,
        });
    }
    let n = op.dim();
    let dw = DMatrix::from_fn(d_op.nrows(), n, |i, j| {
        d_op[(i, j)] * (out_weight[i] / op.norm_weight[j]).sqrt()
    });
    Ok(Gain {
        value: sigma_max(&(dw * inv)),
        singular: false,
    })
}

/// ‖A†A − AA†‖₂ / ‖A‖₂² with the weighted adjoint.
pub fn nonnormality_metric(op: &OperatorHandle) -> f64 {
    let b = op.weighted();
    let nb = sigma_max(&b);
    if nb == 0.0 {
        return 0.0;
    }
    let bh = b.adjoint();
    let c = &bh * &b - &b * &bh;
    sigma_max(&c) / (nb * nb)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportPoint {
    pub theta: f64,
    /// λ_max of the Hermitian part of e^{iθ}A: W(A) ⊂ {Re(e^{iθ}z) ≤ h(θ)}.
    pub support: f64,
    /// Rayleigh quotient of the extreme eigenvector; lies on ∂W(A).
    pub point: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorReport {
    pub tan_bound: f64,
    pub tol: f64,
    /// max over hull points of |Im z| − tan_bound·Re z.
    pub max_excess: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeCheck {
    pub lambda: C64,
    pub resolvent_norm: f64,
    /// Lower bound on dist(λ, W(A)) from the supporting half-planes.
    pub dist_lower: f64,
    /// Distance to the sampled boundary points, for reference.
    pub dist_samples: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericalRange {
    pub points: Vec<SupportPoint>,
}

pub const DEFAULT_ANGLES: usize = 256;

pub fn numerical_range_sample(op: &OperatorHandle, n_angles: usize) -> Result<NumericalRange> {
    if n_angles < 8 {
        return invalid("numerical range needs at least 8 angles");
    }
    let b = op.weighted();
    let bh = b.adjoint();
    let mut points = Vec::with_capacity(n_angles);
    for k in 0..n_angles {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / n_angles as f64;
        let e = C64::from_polar(1.0, theta);
        let herm = (&b * e + &bh * e.conj()) * C64::new(0.5, 0.0);
        let eig = herm.symmetric_eigen();
        let (imax, &lmax) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .ok_or_else(|| Error::Numeric("empty operator".into()))?;
        if !lmax.is_finite() {
            return Err(Error::Numeric("hermitian eigensolve returned non-finite values".into()));
        }
        let x = eig.eigenvectors.column(imax);
        let z = (x.adjoint() * &b * x)[(0, 0)] / x.norm_squared();
        points.push(SupportPoint {
            theta,
            support: lmax,
            point: z,
        });
    }
    Ok(NumericalRange { points })
}

impl NumericalRange {
    /// max_θ (Re(e^{iθ}λ) − h(θ)); positive outside the outer polygon.
    pub fn dist_lower(&self, lambda: C64) -> f64 {
        self.points
            .iter()
            .map(|p| (C64::from_polar(1.0, p.theta) * lambda).re - p.support)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn dist_samples(&self, lambda: C64) -> f64 {
        self.points
            .iter()
            .map(|p| (p.point - lambda).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn sector_report(&self, tan_bound: f64, tol: f64) -> SectorReport {
        let max_excess = self
            .points
            .iter()
            .map(|p| p.point.im.abs() - tan_bound * p.point.re)
            .fold(f64::NEG_INFINITY, f64::max);
        SectorReport {
            tan_bound,
            tol,
            max_excess,
            pass: max_excess <= tol,
        }
    }

    /// Contains z up to `slack` in every supporting half-plane.
    pub fn contains(&self, z: C64, slack: f64) -> bool {
        self.dist_lower(z) <= slack
    }

    pub fn probe(&self, op: &OperatorHandle, lambda: C64) -> ProbeCheck {
        let b = op.weighted();
        let n = b.nrows();
        let shifted = b - DMatrix::identity(n, n) * lambda;
        let s = sigma_min(&shifted);
        let resolvent_norm = if s > 0.0 { 1.0 / s } else { f64::INFINITY };
        let d = self.dist_lower(lambda);
        ProbeCheck {
            lambda,
            resolvent_norm,
            dist_lower: d,
            dist_samples: self.dist_samples(lambda),
            pass: d > 0.0 && resolvent_norm <= 1.0 / d * (1.0 + 1e-12),
        }
    }

    /// `count` probes at distance `gap` beyond the outer polygon, spread in angle.
    pub fn exterior_probes(&self, count: usize, gap: f64) -> Vec<C64> {
        let step = (self.points.len() / count.max(1)).max(1);
        self.points
            .iter()
            .step_by(step)
            .take(count)
            .map(|p| {
                let dir = C64::from_polar(1.0, -p.theta);
                dir * (p.support + gap)
            })
            .collect()
    }
}

/// Eigenvalues from the complex Schur form.
pub fn eigenvalues(a: &DMatrix<C64>) -> Vec<C64> {
    let (_, t) = a.clone().schur().unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoPoint {
    pub re_lambda: f64,
    pub im_lambda: f64,
    pub sigma_min: f64,
}

/// σ_min(A − λI) over the tensor grid, imaginary part outer.
pub fn pseudospectrum_grid(op: &OperatorHandle, re: &[f64], im: &[f64]) -> Result<Vec<PseudoPoint>> {
    if re.iter().chain(im).any(|v| !v.is_finite()) {
        return invalid("pseudospectrum grid must be finite");
    }
    let b = op.weighted();
    let n = b.nrows();
    let mut out = Vec::with_capacity(re.len() * im.len());
    for &y in im {
        for &x in re {
            let l = C64::new(x, y);
            let s = sigma_min(&(&b - DMatrix::identity(n, n) * l));
            out.push(PseudoPoint {
                re_lambda: x,
                im_lambda: y,
                sigma_min: s,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioNorm {
    L2,
    Energy,
}

fn mode_norm(sol: &ModeSolution, m: i64, norm: RatioNorm) -> f64 {
    match norm {
        RatioNorm::L2 => sol.l2_mode_norm(m),
        RatioNorm::Energy => sol.energy_mode_norm(m),
    }
}

/// (R₊, R₋) = ‖û_{±m0}‖/‖û₀‖; modes beyond M count as zero.
pub fn sideband_ratios(sol: &ModeSolution, m0: i64, norm: RatioNorm) -> Result<(f64, f64)> {
    let u0 = mode_norm(sol, 0, norm);
    if u0 == 0.0 {
        return Err(Error::Undefined("mean mode vanishes".into()));
    }
    let get = |m: i64| {
        if m.unsigned_abs() as usize > sol.m_max {
            0.0
        } else {
            mode_norm(sol, m, norm) / u0
        }
    };
    Ok((get(m0), get(-m0)))
}

pub fn spanwise_energy_fraction(sol: &ModeSolution) -> Result<f64> {
    let mm = sol.m_max as i64;
    let mut side = 0.0;
    let mut total = 0.0;
    for m in -mm..=mm {
        let e = sol.l2_mode_norm(m).powi(2);
        total += e;
        if m != 0 {
            side += e;
        }
    }
    if total == 0.0 {
        return Err(Error::Undefined("all modes vanish".into()));
    }
    Ok((side / total).clamp(0.0, 1.0))
}

/// Dense (target, source) block of (D + C)⁻¹, one block solve per column.
pub fn inverse_block(sys: &BlockToeplitzMatrix, target: i64, source: i64) -> Result<DMatrix<C64>> {
    let (Some(jt), Some(js)) = (sys.index(target), sys.index(source)) else {
        return invalid("mode index outside the truncation");
    };
    let ni = sys.n_interior();
    let mut out = DMatrix::zeros(ni, ni);
    for col in 0..ni {
        let mut f: ModeVec = sys.zeros();
        f[js][col] = C64::new(1.0, 0.0);
        let sol = solve_direct(sys, &f)?;
        for r in 0..ni {
            out[(r, col)] = sol.modes[jt][r];
        }
    }
    Ok(out)
}

/// (T₊, T₋): L² norms of the (±m0, 0) blocks of the inverse.
pub fn transfer_norm(sys: &BlockToeplitzMatrix, m0: i64) -> Result<(f64, f64)> {
    if sys.couplings.is_empty() {
        return Ok((0.0, 0.0));
    }
    let get = |m: i64| -> Result<f64> {
        if m.unsigned_abs() as usize > sys.m_max {
            return Ok(0.0);
        }
        Ok(sigma_max(&inverse_block(sys, m, 0)?))
    };
    Ok((get(m0)?, get(-m0)?))
}

/// Leading-order (T₊, T₋) = ‖L(κ_{±m0})⁻¹ K_{±m0} L(κ₀)⁻¹‖.
pub fn transfer_norm_leading(sys: &BlockToeplitzMatrix, m0: i64) -> Result<(f64, f64)> {
    let j0 = sys.index(0).unwrap();
    let l0inv = sys.diag[j0]
        .to_dense()
        .try_inverse()
        .ok_or(Error::SingularMode { mode: 0 })?;
    let get = |m: i64| -> Result<f64> {
        let Some(jm) = sys.index(m) else { return Ok(0.0) };
        let Some(c) = sys.couplings.iter().find(|c| c.offset == m) else {
            return Ok(0.0);
        };
        let Some(k) = &c.blocks[jm] else { return Ok(0.0) };
        let lminv = sys.diag[jm]
            .to_dense()
            .try_inverse()
            .ok_or(Error::SingularMode { mode: m })?;
        Ok(sigma_max(&(lminv * k.to_dense() * &l0inv)))
    };
    Ok((get(m0)?, get(-m0)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WallSide {
    Bottom,
    Top,
}

/// One-sided second-order wall derivative of a Dirichlet-zero profile.
fn wall_derivative(interior: &[C64], h: f64, wall: WallSide) -> C64 {
    let n = interior.len();
    match wall {
        WallSide::Bottom => (4.0 * interior[0] - interior[1]) / (2.0 * h),
        WallSide::Top => (interior[n - 2] - 4.0 * interior[n - 1]) / (2.0 * h),
    }
}

/// τ̂_m = Σ_n μ̂_n(wall)·∂_y û_{m−n}(wall), index m + M.
pub fn wall_traction_modes(sol: &ModeSolution, texture: &SpanwiseTexture, wall: WallSide) -> Vec<C64> {
    let mm = sol.m_max as i64;
    let h = sol.grid.h();
    let mu_w = match wall {
        WallSide::Bottom => texture.baseline[0],
        WallSide::Top => *texture.baseline.last().unwrap(),
    };
    let du: Vec<C64> = sol.modes.iter().map(|v| wall_derivative(v, h, wall)).collect();
    (-mm..=mm)
        .map(|m| {
            let mut s = C64::new(0.0, 0.0);
            for src in -mm..=mm {
                let w = texture.family.coefficient(m - src);
                if w != C64::new(0.0, 0.0) {
                    s += mu_w * w * du[(src + mm) as usize];
                }
            }
            s
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TractionSignature {
    pub a_plus: f64,
    pub a_minus: f64,
    pub theta_plus: f64,
    pub theta_minus: f64,
    pub tau0: C64,
}

pub fn traction_signature(sol: &ModeSolution, texture: &SpanwiseTexture, wall: WallSide) -> Result<TractionSignature> {
    let tau = wall_traction_modes(sol, texture, wall);
    let mm = sol.m_max as i64;
    let t0 = tau[mm as usize];
    if t0 == C64::new(0.0, 0.0) {
        return Err(Error::Undefined("mean wall traction vanishes".into()));
    }
    let m0 = texture.family.m0();
    let get = |m: i64| {
        if m.abs() > mm {
            C64::new(0.0, 0.0)
        } else {
            tau[(m + mm) as usize] / t0
        }
    };
    let (p, q) = (get(m0), get(-m0));
    Ok(TractionSignature {
        a_plus: p.norm(),
        a_minus: q.norm(),
        theta_plus: p.arg(),
        theta_minus: q.arg(),
        tau0: t0,
    })
}

/// Nearest-branch continuation starting from the first entry.
pub fn unwrap_phases(phases: &mut [f64]) {
    let tau = 2.0 * std::f64::consts::PI;
    for i in 1..phases.len() {
        let d = phases[i] - phases[i - 1];
        phases[i] -= tau * (d / tau).round();
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignatureRecord {
    pub omega: f64,
    pub r_plus: f64,
    pub r_minus: f64,
    pub phi_m: f64,
    pub t_plus: f64,
    pub t_minus: f64,
    pub a_plus: f64,
    pub a_minus: f64,
    pub theta_plus: f64,
    pub theta_minus: f64,
    pub delta_nn: f64,
    pub re_z: f64,
    pub im_z: f64,
    pub power_re_res: f64,
    pub power_im_res: f64,
}

pub const SIGNATURE_COLUMNS: [&str; 15] = [
    "omega",
    "R_plus",
    "R_minus",
    "Phi_M",
    "T_plus",
    "T_minus",
    "A_plus",
    "A_minus",
    "Theta_plus",
    "Theta_minus",
    "Delta_nn",
    "ReZ",
    "ImZ",
    "power_re_res",
    "power_im_res",
];

impl SignatureRecord {
    pub fn values(&self) -> [f64; 15] {
        [
            self.omega,
            self.r_plus,
            self.r_minus,
            self.phi_m,
            self.t_plus,
            self.t_minus,
            self.a_plus,
            self.a_minus,
            self.theta_plus,
            self.theta_minus,
            self.delta_nn,
            self.re_z,
            self.im_z,
            self.power_re_res,
            self.power_im_res,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite()) && (0.0..=1.0).contains(&self.phi_m)
    }
}

/// Relative residual of the energy pairing ⟨(D+C)V, V⟩ = ⟨F, V⟩.
pub fn pairing_residual(sys: &BlockToeplitzMatrix, sol: &ModeSolution, forcing: &ModeVec) -> (f64, f64) {
    let av = sys.apply(&sol.modes);
    let mut lhs = C64::new(0.0, 0.0);
    let mut rhs = C64::new(0.0, 0.0);
    for ((a, f), v) in av.iter().zip(forcing).zip(&sol.modes) {
        for ((x, y), z) in a.iter().zip(f).zip(v) {
            lhs += z.conj() * x;
            rhs += z.conj() * y;
        }
    }
    let scale = rhs.norm().max(f64::MIN_POSITIVE);
    ((lhs.re - rhs.re).abs() / scale, (lhs.im - rhs.im).abs() / scale)
}

/// Signature at one frequency. Transfer norms are skipped (zero) when
/// `with_transfer` is false to keep sweeps cheap.
pub fn signature_record(
    spec: &crate::toeplitz::BlockSystemSpec,
    with_transfer: bool,
) -> Result<SignatureRecord> {
    let sys = crate::toeplitz::assemble_blocks(spec)?;
    let f = spec.forcing_blocks();
    let sol = solve_direct(&sys, &f)?;
    let m0 = spec.texture.family.m0();
    let (r_plus, r_minus) = sideband_ratios(&sol, m0, RatioNorm::L2)?;
    let phi_m = spanwise_energy_fraction(&sol)?;
    let (t_plus, t_minus) = if with_transfer {
        transfer_norm(&sys, m0)?
    } else {
        (0.0, 0.0)
    };
    let sig = traction_signature(&sol, &spec.texture, WallSide::Bottom)?;
    let j0 = sys.index(0).unwrap();
    let delta_nn = nonnormality_metric(&OperatorHandle::uniform(sys.diag[j0].to_dense(), sys.grid.h(), "L(k0)"));
    let (pr, pi) = pairing_residual(&sys, &sol, &f);
    Ok(SignatureRecord {
        omega: spec.omega,
        r_plus,
        r_minus,
        phi_m,
        t_plus,
        t_minus,
        a_plus: sig.a_plus,
        a_minus: sig.a_minus,
        theta_plus: sig.theta_plus,
        theta_minus: sig.theta_minus,
        delta_nn,
        re_z: sig.tau0.re,
        im_z: sig.tau0.im,
        power_re_res: pr,
        power_im_res: pi,
    })
}

/// Unwraps Θ± along the sweep order in place.
pub fn unwrap_signatures(records: &mut [SignatureRecord]) {
    let mut p: Vec<f64> = records.iter().map(|r| r.theta_plus).collect();
    let mut m: Vec<f64> = records.iter().map(|r| r.theta_minus).collect();
    unwrap_phases(&mut p);
    unwrap_phases(&mut m);
    for (r, (a, b)) in records.iter_mut().zip(p.into_iter().zip(m)) {
        r.theta_plus = a;
        r.theta_minus = b;
    }
}

/// A 2D complex vector field on a uniform node grid, row-major (y outer).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field2D {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    pub u: Vec<C64>,
    pub v: Vec<C64>,
    #[serde(default)]
    pub phi: Option<Vec<f64>>,
    /// Node mask; a cell counts only if its four corners are inside.
    #[serde(default)]
    pub mask: Option<Vec<bool>>,
}

impl Field2D {
    pub fn validate(&self) -> Result<()> {
        let n = self.nx * self.ny;
        if self.nx < 2 || self.ny < 2 {
            return invalid("field needs at least 2x2 nodes");
        }
        if !(self.dx > 0.0 && self.dy > 0.0) {
            return invalid("grid spacing must be positive");
        }
        if self.u.len() != n || self.v.len() != n {
            return invalid("velocity arrays must have nx*ny entries");
        }
        if self.phi.as_ref().is_some_and(|p| p.len() != n) || self.mask.as_ref().is_some_and(|m| m.len() != n) {
            return invalid("phase and mask arrays must have nx*ny entries");
        }
        Ok(())
    }

    /// Samples a field from a closure over node coordinates.
    pub fn from_fn(
        nx: usize,
        ny: usize,
        x0: f64,
        y0: f64,
        dx: f64,
        dy: f64,
        f: impl Fn(f64, f64) -> (C64, C64),
    ) -> Field2D {
        let mut u = Vec::with_capacity(nx * ny);
        let mut v = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b) = f(x0 + i as f64 * dx, y0 + j as f64 * dy);
                u.push(a);
                v.push(b);
            }
        }
        Field2D {
            nx,
            ny,
            x0,
            y0,
            dx,
            dy,
            u,
            v,
            phi: None,
            mask: None,
        }
    }

    fn at(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerFunctionals {
    pub radii: Vec<f64>,
    /// L² norm of the symmetric gradient over the disc.
    pub strain: Vec<f64>,
    /// ∫ |ω̂|² over the disc.
    pub enstrophy: Vec<f64>,
    /// ∫ |∇φ||D(v̂)| over the disc; zero without a phase field.
    pub overlap: Vec<f64>,
    /// Some disc leaves the grid and was clipped to it.
    pub clipped: bool,
}

pub fn corner_functionals(field: &Field2D, center: (f64, f64), radii: &[f64]) -> Result<CornerFunctionals> {
    field.validate()?;
    if radii.windows(2).any(|w| w[1] < w[0]) || radii.iter().any(|r| !(*r >= 0.0)) {
        return invalid("radii must be nonnegative and sorted ascending");
    }
    let (cx, cy) = center;
    let x1 = field.x0 + (field.nx - 1) as f64 * field.dx;
    let y1 = field.y0 + (field.ny - 1) as f64 * field.dy;
    let reach = (cx - field.x0).min(x1 - cx).min(cy - field.y0).min(y1 - cy);
    let clipped = radii.iter().any(|&r| r > reach);
    let area = field.dx * field.dy;
    // per-cell (distance, |D|², |ω|², |∇φ||D|)
    let mut cells = Vec::with_capacity((field.nx - 1) * (field.ny - 1));
    for j in 0..field.ny - 1 {
        for i in 0..field.nx - 1 {
            let idx = [field.at(i, j), field.at(i + 1, j), field.at(i, j + 1), field.at(i + 1, j + 1)];
            if let Some(mask) = &field.mask {
                if !idx.iter().all(|&k| mask[k]) {
                    continue;
                }
            }
            let x = field.x0 + (i as f64 + 0.5) * field.dx;
            let y = field.y0 + (j as f64 + 0.5) * field.dy;
            let ddx = |a: &[C64]| ((a[idx[1]] + a[idx[3]]) - (a[idx[0]] + a[idx[2]])) / (2.0 * field.dx);
            let ddy = |a: &[C64]| ((a[idx[2]] + a[idx[3]]) - (a[idx[0]] + a[idx[1]])) / (2.0 * field.dy);
            let (ux, uy, vx, vy) = (ddx(&field.u), ddy(&field.u), ddx(&field.v), ddy(&field.v));
            let off = 0.5 * (uy + vx);
            let d2 = ux.norm_sqr() + vy.norm_sqr() + 2.0 * off.norm_sqr();
            let w2 = (vx - uy).norm_sqr();
            let ov = field.phi.as_ref().map_or(0.0, |p| {
                let px = ((p[idx[1]] + p[idx[3]]) - (p[idx[0]] + p[idx[2]])) / (2.0 * field.dx);
                let py = ((p[idx[2]] + p[idx[3]]) - (p[idx[0]] + p[idx[1]])) / (2.0 * field.dy);
                px.hypot(py) * d2.sqrt()
            });
            cells.push(((x - cx).hypot(y - cy), d2, w2, ov));
        }
    }
    cells.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut strain = Vec::with_capacity(radii.len());
    let mut enstrophy = Vec::with_capacity(radii.len());
    let mut overlap = Vec::with_capacity(radii.len());
    let (mut s, mut e, mut o) = (0.0, 0.0, 0.0);
    let mut k = 0;
    for &r in radii {
        while k < cells.len() && cells[k].0 <= r {
            s += cells[k].1 * area;
            e += cells[k].2 * area;
            o += cells[k].3 * area;
            k += 1;
        }
        strain.push(s.sqrt());
        enstrophy.push(e);
        overlap.push(o);
    }
    Ok(CornerFunctionals {
        radii: radii.to_vec(),
        strain,
        enstrophy,
        overlap,
        clipped,
    })
}
