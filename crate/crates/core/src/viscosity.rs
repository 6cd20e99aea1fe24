//! Constitutive data: Prony relaxation spectra, phase-textured 1D profiles
//! and spanwise texture families with their Fourier coefficients.

use crate::error::{invalid, Error, Result};
use crate::{C64, I};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;
use std::sync::atomic::{AtomicBool, Ordering};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PronyTerm {
    pub weight: f64,
    pub rate: f64,
}

/// Discrete nonnegative relaxation spectrum, g(s) = Σ c_j exp(-r_j s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PronySpectrum {
    terms: Vec<PronyTerm>,
}

impl PronySpectrum {
    pub fn new(terms: Vec<(f64, f64)>) -> Result<Self> {
        if terms.is_empty() {
            return invalid("empty Prony spectrum");
        }
        for &(c, r) in &terms {
            if !(c >= 0.0 && c.is_finite()) || !(r >= 0.0 && r.is_finite()) {
                return invalid(format!("Prony term ({c}, {r}) must have c >= 0 and r >= 0"));
            }
        }
        if !terms.iter().any(|&(c, _)| c > 0.0) {
            return invalid("Prony spectrum has no positive weight");
        }
        Ok(PronySpectrum {
            terms: terms
                .into_iter()
                .map(|(weight, rate)| PronyTerm { weight, rate })
                .collect(),
        })
    }

    pub fn terms(&self) -> &[PronyTerm] {
        &self.terms
    }

    /// Re-validates after deserialization.
    pub fn validated(self) -> Result<Self> {
        PronySpectrum::new(self.terms.iter().map(|t| (t.weight, t.rate)).collect())
    }
}

/// μ*(ω) = Σ c_j / (r_j + iω).
pub fn complex_viscosity_of(spec: &PronySpectrum, omega: f64) -> Result<C64> {
    if !(omega > 0.0) {
        return invalid(format!("omega must be positive, got {omega}"));
    }
    Ok(spec
        .terms
        .iter()
        .map(|t| C64::new(t.weight, 0.0) / C64::new(t.rate, omega))
        .sum())
}

/// ω → 0⁺ limit Σ c_j / r_j; infinite when a pure-memory term (r = 0) carries weight.
pub fn zero_frequency_viscosity(spec: &PronySpectrum) -> f64 {
    spec.terms
        .iter()
        .filter(|t| t.weight > 0.0)
        .map(|t| t.weight / t.rate)
        .sum()
}

pub fn kernel_value(spec: &PronySpectrum, s: f64) -> Result<f64> {
    if !(s >= 0.0) {
        return invalid(format!("lag time must be nonnegative, got {s}"));
    }
    Ok(spec.terms.iter().map(|t| t.weight * (-t.rate * s).exp()).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub s_max: f64,
    pub n_points: usize,
}

impl Quadrature {
    /// Window long enough for 1e-14 kernel decay and a step resolving the
    /// fastest of ω and the largest rate.
    pub fn default_for(spec: &PronySpectrum, omega: f64) -> Quadrature {
        let r_min = spec
            .terms
            .iter()
            .filter(|t| t.weight > 0.0)
            .map(|t| t.rate)
            .fold(f64::INFINITY, f64::min);
        let r_max = spec.terms.iter().map(|t| t.rate).fold(0.0, f64::max);
        let s_max = if r_min > 0.0 { 36.0 / r_min } else { 1.0 };
        let step = 0.01 / r_max.max(omega.abs()).max(1e-300);
        let n = ((s_max / step).ceil() as usize).clamp(1000, 20_000_000);
        Quadrature {
            s_max,
            n_points: n + (n % 2),
        }
    }
}

/// Composite Simpson quadrature of ∫₀^{s_max} g(s) e^{-iωs} ds.
pub fn laplace_oracle(spec: &PronySpectrum, omega: f64, quad: Option<Quadrature>) -> Result<C64> {
    let q = quad.unwrap_or_else(|| Quadrature::default_for(spec, omega));
    if !(q.s_max > 0.0) || q.n_points < 2 {
        return invalid("quadrature needs s_max > 0 and at least 2 intervals");
    }
    let g0 = kernel_value(spec, 0.0)?;
    let tail = kernel_value(spec, q.s_max)?;
    if tail >= 1e-14 * g0 {
        return Err(Error::TailNotNegligible { ratio: tail / g0 });
    }
    let n = q.n_points + (q.n_points % 2);
    let h = q.s_max / n as f64;
    let f = |s: f64| -> C64 {
        let g: f64 = spec.terms.iter().map(|t| t.weight * (-t.rate * s).exp()).sum();
        g * C64::from_polar(1.0, -omega * s)
    };
    let mut acc = f(0.0) + f(q.s_max);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    Ok(acc * (h / 3.0))
}

/// Certified lower bound for Re μ*(ω) from the spectral mass at rates ≥ r0.
///
/// Each term contributes c_j·min(r0/(r0²+ω²), r_j/(r_j²+ω²)). When every
/// such r_j ≤ ω²/r0 this is (r0/(r0²+ω²))·Σ_{r_j ≥ r0} c_j; beyond that
/// rate r/(r²+ω²) drops below its value at r0 and the plain form would
/// overestimate the dissipation.
pub fn passivity_margin(spec: &PronySpectrum, omega: f64, r0: f64) -> Result<f64> {
    if !(r0 > 0.0) {
        return invalid(format!("r0 must be positive, got {r0}"));
    }
    let w2 = omega * omega;
    let at_r0 = r0 / (r0 * r0 + w2);
    let m: f64 = spec
        .terms
        .iter()
        .filter(|t| t.rate >= r0)
        .map(|t| t.weight * at_r0.min(t.rate / (t.rate * t.rate + w2)))
        .sum();
    // Clamp away the last-ulp disagreement with the complex evaluation of Re μ*.
    if omega > 0.0 {
        Ok(m.min(complex_viscosity_of(spec, omega)?.re))
    } else {
        Ok(m)
    }
}

/// Defect shape χ on [0, ∞) with values in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Chi {
    /// 1 on [0, ℓ], 0 beyond.
    TopHat { ell: f64 },
    /// 1 - y/ℓ on [0, ℓ], 0 beyond.
    Ramp { ell: f64 },
    /// exp(-y/ℓ); not compactly supported, `support_end` reports a 1e-16 cut.
    Exp { ell: f64 },
    /// Uniform samples on [0, height], piecewise linear, zero beyond.
    Sampled { height: f64, values: Vec<f64> },
}

impl Chi {
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            Chi::TopHat { ell } => {
                if y <= *ell {
                    1.0
                } else {
                    0.0
                }
            }
            Chi::Ramp { ell } => (1.0 - y / ell).max(0.0),
            Chi::Exp { ell } => (-y / ell).exp(),
            Chi::Sampled { height, values } => {
                if y > *height || values.is_empty() {
                    return 0.0;
                }
                let n = values.len() - 1;
                if n == 0 {
                    return values[0];
                }
                let t = (y / height * n as f64).clamp(0.0, n as f64);
                let i = (t.floor() as usize).min(n - 1);
                let a = t - i as f64;
                values[i] * (1.0 - a) + values[i + 1] * a
            }
        }
    }

    /// Length scale ℓ.
    pub fn ell(&self) -> f64 {
        match self {
            Chi::TopHat { ell } | Chi::Ramp { ell } | Chi::Exp { ell } => *ell,
            Chi::Sampled { height, values } => {
                let n = values.len().saturating_sub(1).max(1);
                let last = values.iter().rposition(|v| *v != 0.0).unwrap_or(0);
                height * (last as f64 / n as f64)
            }
        }
    }

    /// Point beyond which χ is zero (to 1e-16 for the exponential shape).
    pub fn support_end(&self) -> f64 {
        match self {
            Chi::Exp { ell } => 37.0 * ell,
            _ => self.ell(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Chi::TopHat { ell } | Chi::Ramp { ell } | Chi::Exp { ell } => {
                if !(*ell > 0.0 && ell.is_finite()) {
                    return invalid(format!("chi length scale must be positive, got {ell}"));
                }
            }
            Chi::Sampled { height, values } => {
                if !(*height > 0.0) || values.len() < 2 {
                    return invalid("sampled chi needs height > 0 and at least 2 samples");
                }
                if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return invalid("chi samples must lie in [0, 1]");
                }
            }
        }
        Ok(())
    }

    /// True when χ has a jump (top-hat).
    pub fn has_jump(&self) -> bool {
        matches!(self, Chi::TopHat { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhaseProfile {
    Constant { phi0: f64 },
    TwoLayer { phi1: f64, phi2: f64, y_c: f64 },
    SmoothDefect { eps: f64, chi: Chi },
}

/// μ*(y) = μ0 e^{iφ(y)} on [0, H].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTexture1D {
    pub mu0: f64,
    pub profile: PhaseProfile,
    pub height: f64,
}

impl PhaseTexture1D {
    pub fn new(mu0: f64, profile: PhaseProfile, height: f64) -> Result<Self> {
        let t = PhaseTexture1D {
            mu0,
            profile,
            height,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu0 > 0.0 && self.mu0.is_finite()) {
            return invalid(format!("mu0 must be positive, got {}", self.mu0));
        }
        if !(self.height > 0.0 && self.height.is_finite()) {
            return invalid(format!("domain height must be positive, got {}", self.height));
        }
        match &self.profile {
            PhaseProfile::Constant { .. } => {}
            PhaseProfile::TwoLayer { y_c, .. } => {
                if !(*y_c > 0.0 && *y_c < self.height) {
                    return invalid(format!("interface y_c = {y_c} must lie inside (0, H)"));
                }
            }
            PhaseProfile::SmoothDefect { chi, .. } => chi.validate()?,
        }
        let d = self.delta();
        if !(d > 0.0) {
            return invalid(format!("passivity violated: min cos(phi) = {d}"));
        }
        Ok(())
    }

    pub fn phi(&self, y: f64) -> f64 {
        match &self.profile {
            PhaseProfile::Constant { phi0 } => *phi0,
            PhaseProfile::TwoLayer { phi1, phi2, y_c } => {
                if y < *y_c {
                    *phi1
                } else {
                    *phi2
                }
            }
            PhaseProfile::SmoothDefect { eps, chi } => eps * chi.eval(y),
        }
    }

    pub fn mu_at(&self, y: f64) -> C64 {
        C64::from_polar(self.mu0, self.phi(y))
    }

    /// Uniform passivity constant δ = min_y cos φ(y).
    pub fn delta(&self) -> f64 {
        match &self.profile {
            PhaseProfile::Constant { phi0 } => phi0.cos(),
            PhaseProfile::TwoLayer { phi1, phi2, .. } => phi1.cos().min(phi2.cos()),
            PhaseProfile::SmoothDefect { eps, .. } => {
                // χ takes every value in [0, 1] or at least 0 and 1.
                if eps.abs() >= std::f64::consts::PI {
                    -1.0
                } else {
                    eps.cos().min(1.0)
                }
            }
        }
    }

    pub fn phi_sup(&self) -> f64 {
        match &self.profile {
            PhaseProfile::Constant { phi0 } => phi0.abs(),
            PhaseProfile::TwoLayer { phi1, phi2, .. } => phi1.abs().max(phi2.abs()),
            PhaseProfile::SmoothDefect { eps, .. } => eps.abs(),
        }
    }

    /// Magnitude of the phase jump for profiles with discontinuities.
    pub fn phase_jump(&self) -> f64 {
        match &self.profile {
            PhaseProfile::TwoLayer { phi1, phi2, .. } => (phi1 - phi2).abs(),
            PhaseProfile::SmoothDefect { eps, chi } if chi.has_jump() => eps.abs(),
            _ => 0.0,
        }
    }
}

pub fn mu_star_profile(texture: &PhaseTexture1D, y: f64) -> Result<C64> {
    if !(0.0..=texture.height).contains(&y) {
        return invalid(format!("y = {y} outside [0, {}]", texture.height));
    }
    Ok(texture.mu_at(y))
}

/// Samples used for the phase-gradient parameter.
pub const PI_PHI_SAMPLES: usize = 4096;

/// Π_φ = L·sup|φ'| from one-sided differences of the sampled profile.
///
/// Profiles with a jump return +∞; see [`PhaseTexture1D::phase_jump`].
pub fn pi_phi(texture: &PhaseTexture1D, length: f64) -> f64 {
    match &texture.profile {
        PhaseProfile::Constant { .. } => 0.0,
        PhaseProfile::TwoLayer { .. } => f64::INFINITY,
        PhaseProfile::SmoothDefect { eps, chi } => {
            if *eps == 0.0 {
                return 0.0;
            }
            if chi.has_jump() {
                return f64::INFINITY;
            }
            let (n, h) = match chi {
                Chi::Sampled { height, values } => {
                    let n = values.len() - 1;
                    (n, height / n as f64)
                }
                _ => (PI_PHI_SAMPLES, texture.height / PI_PHI_SAMPLES as f64),
            };
            let phi: Vec<f64> = match chi {
                Chi::Sampled { values, .. } => values.iter().map(|v| eps * v).collect(),
                _ => (0..=n).map(|i| texture.phi(i as f64 * h)).collect(),
            };
            let sup = phi
                .windows(2)
                .map(|w| ((w[1] - w[0]) / h).abs())
                .fold(0.0, f64::max);
            length * sup
        }
    }
}

static BESSEL_MUTATION: AtomicBool = AtomicBool::new(false);

/// Corrupts odd-order Bessel values by 0.1 %; used to check that the
/// verification suite detects a broken coefficient.
#[doc(hidden)]
pub fn set_bessel_mutation(on: bool) {
    BESSEL_MUTATION.store(on, Ordering::SeqCst);
}

/// J_n(x) from the ascending series, stopped at 1e-16 relative term size.
///
/// Accurate for |x| ≤ 1; usable with growing cancellation up to |x| ≈ 10.
pub fn bessel_j(n: i64, x: f64) -> f64 {
    let m = n.unsigned_abs();
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=m {
        term *= half / k as f64;
    }
    let mut sum = term;
    let q = half * half;
    let mut k = 0u64;
    while term != 0.0 {
        term *= -q / ((k + 1) as f64 * (k + 1 + m) as f64);
        sum += term;
        k += 1;
        if term.abs() <= 1e-16 * sum.abs() || k > 500 {
            break;
        }
    }
    let mut v = if n < 0 && m % 2 == 1 { -sum } else { sum };
    if m % 2 == 1 && BESSEL_MUTATION.load(Ordering::Relaxed) {
        v *= 1.001;
    }
    v
}

/// Σ_{|n|>N} |J_n(ε)| with a certified bound for the terms not summed.
pub fn bessel_tail(eps: f64, n_band: usize) -> f64 {
    let x = eps.abs();
    if x == 0.0 {
        return 0.0;
    }
    let extra = 60usize;
    let mut s = 0.0;
    for n in (n_band + 1)..=(n_band + extra) {
        s += bessel_j(n as i64, x).abs();
    }
    // |J_n(x)| ≤ (x/2)^n / n! · e^{x²/4}; geometric majorant beyond K.
    let k = n_band + extra + 1;
    let mut b = 1.0f64;
    for j in 1..=k {
        b *= 0.5 * x / j as f64;
    }
    let ratio = 0.5 * x / (k + 1) as f64;
    let rem = if ratio < 1.0 {
        b * (0.25 * x * x).exp() / (1.0 - ratio)
    } else {
        f64::INFINITY
    };
    2.0 * (s + rem)
}

/// Spanwise texture family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SpanwiseFamily {
    /// μ0*(1 + ε e^{i k0 z}).
    OneSided { eps: f64, m0: i64 },
    /// μ0*(1 + ε cos(k0 z)).
    Cosine { eps: f64, m0: i64 },
    /// μ0* e^{iε cos(k0 z)}, harmonics kept for |n| ≤ band.
    PhaseOnly { eps: f64, m0: i64, band: usize },
}

impl SpanwiseFamily {
    pub fn eps(&self) -> f64 {
        match *self {
            SpanwiseFamily::OneSided { eps, .. }
            | SpanwiseFamily::Cosine { eps, .. }
            | SpanwiseFamily::PhaseOnly { eps, .. } => eps,
        }
    }

    pub fn m0(&self) -> i64 {
        match *self {
            SpanwiseFamily::OneSided { m0, .. }
            | SpanwiseFamily::Cosine { m0, .. }
            | SpanwiseFamily::PhaseOnly { m0, .. } => m0,
        }
    }

    pub fn with_eps(&self, eps: f64) -> SpanwiseFamily {
        match *self {
            SpanwiseFamily::OneSided { m0, .. } => SpanwiseFamily::OneSided { eps, m0 },
            SpanwiseFamily::Cosine { m0, .. } => SpanwiseFamily::Cosine { eps, m0 },
            SpanwiseFamily::PhaseOnly { m0, band, .. } => {
                SpanwiseFamily::PhaseOnly { eps, m0, band }
            }
        }
    }

    /// Scalar multiplier w_n with μ̂_n = w_n μ0*, for the retained band.
    pub fn coefficient(&self, n: i64) -> C64 {
        let zero = C64::new(0.0, 0.0);
        match *self {
            SpanwiseFamily::OneSided { eps, m0 } => {
                if n == 0 {
                    C64::new(1.0, 0.0)
                } else if n == m0 {
                    C64::new(eps, 0.0)
                } else {
                    zero
                }
            }
            SpanwiseFamily::Cosine { eps, m0 } => {
                if n == 0 {
                    C64::new(1.0, 0.0)
                } else if n.abs() == m0 {
                    C64::new(0.5 * eps, 0.0)
                } else {
                    zero
                }
            }
            SpanwiseFamily::PhaseOnly { eps, m0, band } => {
                if n % m0 != 0 {
                    return zero;
                }
                let q = n / m0;
                if q.unsigned_abs() as usize > band {
                    return zero;
                }
                I.powi(q.rem_euclid(4) as i32) * bessel_j(q, eps)
            }
        }
    }

    /// Coupling offsets and weights relative to the baseline diagonal,
    /// including the J₀ − 1 renormalization for the phase-only family.
    pub fn coupling_weights(&self) -> Vec<(i64, C64)> {
        let mut out = Vec::new();
        match *self {
            SpanwiseFamily::OneSided { eps, m0 } => {
                if eps != 0.0 {
                    out.push((m0, C64::new(eps, 0.0)));
                }
            }
            SpanwiseFamily::Cosine { eps, m0 } => {
                if eps != 0.0 {
                    out.push((-m0, C64::new(0.5 * eps, 0.0)));
                    out.push((m0, C64::new(0.5 * eps, 0.0)));
                }
            }
            SpanwiseFamily::PhaseOnly { eps, m0, band } => {
                if eps != 0.0 {
                    for q in -(band as i64)..=(band as i64) {
                        let w = if q == 0 {
                            C64::new(bessel_j(0, eps) - 1.0, 0.0)
                        } else {
                            self.coefficient(q * m0)
                        };
                        if w != C64::new(0.0, 0.0) {
                            out.push((q * m0, w));
                        }
                    }
                }
            }
        }
        out
    }
}

/// Baseline profile μ0*(y) at grid nodes plus a z-periodic texture family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanwiseTexture {
    pub baseline: Vec<C64>,
    pub family: SpanwiseFamily,
    pub lz: f64,
}

impl SpanwiseTexture {
    pub fn new(baseline: Vec<C64>, family: SpanwiseFamily, lz: f64) -> Result<Self> {
        let t = SpanwiseTexture {
            baseline,
            family,
            lz,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.baseline.len() < 2 {
            return invalid("baseline needs at least two samples");
        }
        if !(self.lz > 0.0 && self.lz.is_finite()) {
            return invalid(format!("L_z must be positive, got {}", self.lz));
        }
        if self.family.m0() < 1 {
            return invalid(format!("m0 must be >= 1, got {}", self.family.m0()));
        }
        let eps = self.family.eps();
        match self.family {
            SpanwiseFamily::PhaseOnly { .. } => {
                if !(0.0..FRAC_PI_2).contains(&eps) {
                    return invalid(format!("phase-only eps must lie in [0, pi/2), got {eps}"));
                }
            }
            _ => {
                if !(0.0..=1.0).contains(&eps) {
                    return invalid(format!("amplitude eps must lie in [0, 1], got {eps}"));
                }
            }
        }
        Ok(())
    }

    pub fn k0(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.family.m0() as f64 / self.lz
    }

    pub fn kappa(&self, m: i64) -> f64 {
        2.0 * std::f64::consts::PI * m as f64 / self.lz
    }
}

/// μ̂_n(y) at the baseline nodes; exact zeros outside the family's band.
pub fn fourier_coefficients(texture: &SpanwiseTexture, n: i64) -> Vec<C64> {
    let w = texture.family.coefficient(n);
    texture.baseline.iter().map(|b| b * w).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassivityReport {
    pub margin: f64,
    pub pass: bool,
}

/// Family-specific sufficient pointwise passivity condition.
///
/// The phase-only family with a complex baseline uses the uniform phase
/// margin |arg μ0*| ≤ π/2 − δ0, giving |μ0*|·sin(δ0 − ε).
pub fn spanwise_passivity_check(texture: &SpanwiseTexture) -> PassivityReport {
    let eps = texture.family.eps();
    let b = &texture.baseline;
    let margin = match texture.family {
        SpanwiseFamily::OneSided { .. } => b
            .iter()
            .map(|m| m.re - eps * m.norm())
            .fold(f64::INFINITY, f64::min),
        SpanwiseFamily::Cosine { .. } => b
            .iter()
            .map(|m| (1.0 - eps) * m.re)
            .fold(f64::INFINITY, f64::min),
        SpanwiseFamily::PhaseOnly { .. } => {
            if b.iter().all(|m| m.im == 0.0) {
                b.iter().map(|m| m.re * eps.cos()).fold(f64::INFINITY, f64::min)
            } else {
                let max_arg = b.iter().map(|m| m.arg().abs()).fold(0.0, f64::max);
                let delta0 = FRAC_PI_2 - max_arg;
                let min_abs = b.iter().map(|m| m.norm()).fold(f64::INFINITY, f64::min);
                min_abs * (delta0 - eps).sin()
            }
        }
    };
    PassivityReport {
        margin,
        pass: margin > 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn closed_form_viscosity() {
        let s = PronySpectrum::new(vec![(1.0, 1.0)]).unwrap();
        let mu = complex_viscosity_of(&s, 1.0).unwrap();
        assert!((mu - c(0.5, -0.5)).norm() < 1e-15);
        let s2 = PronySpectrum::new(vec![(2.0, 4.0)]).unwrap();
        assert!((zero_frequency_viscosity(&s2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_term_value_confirmed_by_quadrature() {
        let s = PronySpectrum::new(vec![(1.0, 1.0), (0.5, 3.0)]).unwrap();
        let closed = complex_viscosity_of(&s, 2.0).unwrap();
        let quad = laplace_oracle(&s, 2.0, None).unwrap();
        assert!((closed - quad).norm() < 1e-8);
        // 1/(1+2i) + 0.5/(3+2i) by hand: (1-2i)/5 + 0.5(3-2i)/13
        let hand = c(0.2 + 1.5 / 13.0, -0.4 - 1.0 / 13.0);
        assert!((closed - hand).norm() < 1e-15);
        assert!((closed.re - 0.31538).abs() < 5e-6);
        assert!((closed.im + 0.47692).abs() < 5e-6);
    }

    #[test]
    fn laplace_oracle_closed_forms() {
        let s = PronySpectrum::new(vec![(1.0, 1.0)]).unwrap();
        let q = Quadrature {
            s_max: 40.0,
            n_points: 100_000,
        };
        assert!((laplace_oracle(&s, 1.0, Some(q)).unwrap() - c(0.5, -0.5)).norm() < 1e-8);
        let s2 = PronySpectrum::new(vec![(2.0, 4.0)]).unwrap();
        let v = laplace_oracle(&s2, 1.0, None).unwrap();
        assert!((v - c(2.0, 0.0) / c(4.0, 1.0)).norm() < 1e-8);
        assert!((v.re - 0.47059).abs() < 1e-5 && (v.im + 0.11765).abs() < 1e-5);
    }

    #[test]
    fn laplace_oracle_rejects_short_window() {
        let s = PronySpectrum::new(vec![(1.0, 1.0)]).unwrap();
        let q = Quadrature {
            s_max: 5.0,
            n_points: 1000,
        };
        assert!(matches!(
            laplace_oracle(&s, 1.0, Some(q)),
            Err(Error::TailNotNegligible { .. })
        ));
    }

    #[test]
    fn kernel_values() {
        let s = PronySpectrum::new(vec![(1.0, 1.0)]).unwrap();
        assert_eq!(kernel_value(&s, 0.0).unwrap(), 1.0);
        assert!((kernel_value(&s, 2f64.ln()).unwrap() - 0.5).abs() < 1e-15);
        assert!(kernel_value(&s, -1.0).is_err());
        let s2 = PronySpectrum::new(vec![(1.0, 1.0), (0.5, 3.0)]).unwrap();
        let direct = (-1f64).exp() + 0.5 * (-3f64).exp();
        assert!((kernel_value(&s2, 1.0).unwrap() - direct).abs() < 1e-15);
        assert!((direct - 0.39277).abs() < 5e-6);
    }

    #[test]
    fn invalid_spectra() {
        assert!(PronySpectrum::new(vec![]).is_err());
        assert!(PronySpectrum::new(vec![(-1.0, 1.0)]).is_err());
        assert!(PronySpectrum::new(vec![(0.0, 1.0)]).is_err());
        let s = PronySpectrum::new(vec![(1.0, 1.0)]).unwrap();
        assert!(complex_viscosity_of(&s, 0.0).is_err());
    }

    #[test]
    fn margins() {
        let s = PronySpectrum::new(vec![(1.0, 1.0)]).unwrap();
        assert!((passivity_margin(&s, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(passivity_margin(&s, 1.0, 2.0).unwrap(), 0.0);
        let s2 = PronySpectrum::new(vec![(1.0, 1.0), (0.5, 3.0)]).unwrap();
        let m = passivity_margin(&s2, 2.0, 1.0).unwrap();
        assert!((m - 0.3).abs() < 1e-15);
        // Mass far above ω²/r0 dissipates less than the r0 rate would suggest.
        let fast = PronySpectrum::new(vec![(1.0, 100.0)]).unwrap();
        let m = passivity_margin(&fast, 1.0, 1.0).unwrap();
        assert!(m <= complex_viscosity_of(&fast, 1.0).unwrap().re);
        assert!((m - 100.0 / 10001.0).abs() < 1e-15);
        assert!(m <= complex_viscosity_of(&s2, 2.0).unwrap().re);
    }

    #[test]
    fn profiles() {
        let t = PhaseTexture1D::new(2.0, PhaseProfile::Constant { phi0: 0.0 }, 1.0).unwrap();
        assert_eq!(mu_star_profile(&t, 0.3).unwrap(), c(2.0, 0.0));
        assert!(mu_star_profile(&t, 1.5).is_err());
        let t = PhaseTexture1D::new(
            1.0,
            PhaseProfile::TwoLayer {
                phi1: 0.3,
                phi2: -0.2,
                y_c: 0.5,
            },
            1.0,
        )
        .unwrap();
        assert!((mu_star_profile(&t, 0.25).unwrap() - C64::from_polar(1.0, 0.3)).norm() < 1e-15);
        assert_eq!(pi_phi(&t, 1.0), f64::INFINITY);
        assert!((t.phase_jump() - 0.5).abs() < 1e-15);
        let t = PhaseTexture1D::new(
            1.0,
            PhaseProfile::SmoothDefect {
                eps: 0.1,
                chi: Chi::TopHat { ell: 0.2 },
            },
            1.0,
        )
        .unwrap();
        assert!((mu_star_profile(&t, 0.1).unwrap() - C64::from_polar(1.0, 0.1)).norm() < 1e-15);
        assert!(PhaseTexture1D::new(1.0, PhaseProfile::Constant { phi0: 1.6 }, 1.0).is_err());
    }

    #[test]
    fn phase_gradient_parameter() {
        let t = PhaseTexture1D::new(1.0, PhaseProfile::Constant { phi0: 0.2 }, 1.0).unwrap();
        assert_eq!(pi_phi(&t, 1.0), 0.0);
        let t = PhaseTexture1D::new(
            1.0,
            PhaseProfile::SmoothDefect {
                eps: 0.1,
                chi: Chi::Ramp { ell: 0.05 },
            },
            1.0,
        )
        .unwrap();
        assert!((pi_phi(&t, 1.0) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn sampled_pi_phi_matches_dense_resampling() {
        // χ(y) = sin²(πy) sampled coarsely; the dense oracle differentiates the
        // piecewise-linear interpolant, whose steepest segment is a sample segment.
        let n = 32;
        let values: Vec<f64> = (0..=n)
            .map(|i| (std::f64::consts::PI * i as f64 / n as f64).sin().powi(2))
            .collect();
        let chi = Chi::Sampled {
            height: 1.0,
            values,
        };
        let t = PhaseTexture1D::new(
            1.0,
            PhaseProfile::SmoothDefect {
                eps: 0.2,
                chi: chi.clone(),
            },
            1.0,
        )
        .unwrap();
        let dense = 32 * 64;
        let hd = 1.0 / dense as f64;
        let oracle = (0..dense)
            .map(|i| (0.2 * (chi.eval((i + 1) as f64 * hd) - chi.eval(i as f64 * hd)) / hd).abs())
            .fold(0.0, f64::max);
        assert!((pi_phi(&t, 3.0) - 3.0 * oracle).abs() < 1e-9);
    }

    #[test]
    fn bessel_values() {
        // J_1(0.2) = 0.1 - 0.001/8·... from the series by hand: x/2 - (x/2)^3/2 + (x/2)^5/12
        let hand = 0.1 - 0.001 / 2.0 + 1e-5 / 12.0;
        assert!((bessel_j(1, 0.2) - hand).abs() < 1e-9);
        assert!((bessel_j(1, 0.2) - 0.09950).abs() < 5e-6);
        assert_eq!(bessel_j(0, 0.0), 1.0);
        assert_eq!(bessel_j(3, 0.0), 0.0);
        assert!((bessel_j(-1, 0.3) + bessel_j(1, 0.3)).abs() < 1e-17);
        // Tabulated J_0(1) = 0.7651976865579666, J_2(1) = 0.1149034849319005
        assert!((bessel_j(0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((bessel_j(2, 1.0) - 0.114_903_484_931_900_5).abs() < 1e-15);
    }

    #[test]
    fn bessel_tails() {
        assert_eq!(bessel_tail(0.0, 0), 0.0);
        assert!(bessel_tail(0.1, 2) < 1e-4);
        assert!(bessel_tail(0.5, 8) < 1e-10);
        for n in 0..10 {
            assert!(bessel_tail(0.5, n + 1) <= bessel_tail(0.5, n));
        }
    }

    #[test]
    fn fourier_coefficients_by_family() {
        let base = vec![c(1.0, 0.0), c(2.0, 0.5)];
        let t = SpanwiseTexture::new(
            base.clone(),
            SpanwiseFamily::Cosine { eps: 0.01, m0: 2 },
            1.0,
        )
        .unwrap();
        let f = fourier_coefficients(&t, 2);
        assert!((f[1] - 0.005 * base[1]).norm() < 1e-16);
        assert!(fourier_coefficients(&t, 1).iter().all(|z| *z == c(0.0, 0.0)));
        let t = SpanwiseTexture::new(
            base.clone(),
            SpanwiseFamily::PhaseOnly {
                eps: 0.2,
                m0: 1,
                band: 4,
            },
            1.0,
        )
        .unwrap();
        let f1 = fourier_coefficients(&t, 1);
        assert!((f1[0] - I * bessel_j(1, 0.2)).norm() < 1e-16);
        let f0 = fourier_coefficients(&t, 0);
        assert!((f0[0].re - bessel_j(0, 0.2)).abs() < 1e-16);
        assert!(fourier_coefficients(&t, 5).iter().all(|z| *z == c(0.0, 0.0)));
        let t = SpanwiseTexture::new(base, SpanwiseFamily::OneSided { eps: 0.3, m0: 1 }, 1.0).unwrap();
        assert!(fourier_coefficients(&t, -1).iter().all(|z| *z == c(0.0, 0.0)));
    }

    #[test]
    fn spanwise_margins() {
        let one = vec![c(1.0, 0.0); 5];
        let t = SpanwiseTexture::new(one.clone(), SpanwiseFamily::Cosine { eps: 0.1, m0: 1 }, 1.0).unwrap();
        let r = spanwise_passivity_check(&t);
        assert!((r.margin - 0.9).abs() < 1e-15 && r.pass);
        let t = SpanwiseTexture::new(one, SpanwiseFamily::OneSided { eps: 1.0, m0: 1 }, 1.0).unwrap();
        let r = spanwise_passivity_check(&t);
        assert_eq!(r.margin, 0.0);
        assert!(!r.pass);
        let rot = vec![C64::from_polar(1.0, std::f64::consts::FRAC_PI_4); 5];
        let t = SpanwiseTexture::new(rot, SpanwiseFamily::OneSided { eps: 0.5, m0: 1 }, 1.0).unwrap();
        let r = spanwise_passivity_check(&t);
        assert!((r.margin - (0.5f64.sqrt() - 0.5)).abs() < 1e-15);
        assert!((r.margin - 0.2071).abs() < 1e-4);
    }

    fn spectrum_strategy() -> impl Strategy<Value = PronySpectrum> {
        prop::collection::vec((0.0f64..10.0, 0.0f64..50.0), 1..6).prop_map(|mut v| {
            v[0].0 += 1e-3;
            PronySpectrum::new(v).unwrap()
        })
    }

    proptest! {
        #[test]
        fn real_part_nonnegative(s in spectrum_strategy(), w in 1e-3f64..100.0) {
            prop_assert!(complex_viscosity_of(&s, w).unwrap().re >= 0.0);
        }

        #[test]
        fn margin_below_real_part(s in spectrum_strategy(), w in 1e-3f64..100.0, r0 in 1e-3f64..60.0) {
            let m = passivity_margin(&s, w, r0).unwrap();
            prop_assert!(m <= complex_viscosity_of(&s, w).unwrap().re * (1.0 + 1e-15));
        }

        #[test]
        fn kernel_monotone(s in spectrum_strategy(), a in 0.0f64..5.0, d in 0.0f64..5.0) {
            prop_assert!(kernel_value(&s, a + d).unwrap() <= kernel_value(&s, a).unwrap());
        }

        #[test]
        fn unit_modulus_profile(eps in -1.2f64..1.2, ell in 0.01f64..0.9, y in 0.0f64..1.0) {
            let t = PhaseTexture1D::new(1.7, PhaseProfile::SmoothDefect { eps, chi: Chi::Ramp { ell } }, 1.0).unwrap();
            let m = mu_star_profile(&t, y).unwrap();
            prop_assert!((m.norm() - 1.7).abs() <= 4.0 * f64::EPSILON);
            prop_assert!(m.re >= 1.7 * t.delta() - 1e-15);
        }

        #[test]
        fn jacobi_anger_reconstruction(eps in 0.0f64..1.0, n in 1usize..9, z in 0.0f64..1.0) {
            let fam = SpanwiseFamily::PhaseOnly { eps, m0: 1, band: n };
            let theta = 2.0 * std::f64::consts::PI * z;
            let mut s = C64::new(0.0, 0.0);
            for q in -(n as i64)..=(n as i64) {
                s += fam.coefficient(q) * C64::from_polar(1.0, q as f64 * theta);
            }
            let exact = C64::from_polar(1.0, eps * theta.cos());
            prop_assert!((s - exact).norm() <= bessel_tail(eps, n) + 1e-15);
        }

        #[test]
        fn zeros_outside_band(eps in 0.0f64..0.9, m0 in 1i64..4, n in -20i64..20) {
            let fams = [
                SpanwiseFamily::OneSided { eps, m0 },
                SpanwiseFamily::Cosine { eps, m0 },
                SpanwiseFamily::PhaseOnly { eps, m0, band: 3 },
            ];
            for f in fams {
                let inside = match f {
                    SpanwiseFamily::OneSided { .. } => n == 0 || n == m0,
                    SpanwiseFamily::Cosine { .. } => n == 0 || n.abs() == m0,
                    SpanwiseFamily::PhaseOnly { .. } => n % m0 == 0 && (n / m0).abs() <= 3,
                };
                if !inside {
                    prop_assert_eq!(f.coefficient(n), C64::new(0.0, 0.0));
                }
            }
        }
    }
}
