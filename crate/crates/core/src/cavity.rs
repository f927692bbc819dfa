//! Reflection of a single-photon pulse off a single-sided atom-cavity node.
//!
//! All frequencies share one unit. Values quoted as `[g, κ, γ]/2π` in MHz
//! can be entered directly: every formula here is homogeneous of degree
//! zero in the rates, so the common factor cancels.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Physical parameters of one atom-cavity node.
///
/// `omega_c` and `omega_0` are the cavity and atomic transition frequencies,
/// both measured from the same reference as the probe frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub g: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub omega_c: f64,
    pub omega_0: f64,
}

impl CavityParams {
    /// Node with cavity and atom both on resonance with the reference.
    pub fn new(g: f64, kappa: f64, gamma: f64) -> Result<Self> {
        Self::with_detunings(g, kappa, gamma, 0.0, 0.0)
    }

    pub fn with_detunings(g: f64, kappa: f64, gamma: f64, omega_c: f64, omega_0: f64) -> Result<Self> {
        let params = CavityParams {
            g,
            kappa,
            gamma,
            omega_c,
            omega_0,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("g", self.g),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("omega_c", self.omega_c),
            ("omega_0", self.omega_0),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::Parameter(format!("{name} must be finite, got {value}")));
            }
        }
        if self.g < 0.0 {
            return Err(Error::Parameter(format!("g must be >= 0, got {}", self.g)));
        }
        if self.kappa <= 0.0 {
            return Err(Error::Parameter(format!("kappa must be > 0, got {}", self.kappa)));
        }
        if self.gamma <= 0.0 {
            return Err(Error::Parameter(format!("gamma must be > 0, got {}", self.gamma)));
        }
        Ok(())
    }

    /// `g / sqrt(kappa * gamma)`.
    pub fn coupling_ratio(&self) -> f64 {
        self.g / (self.kappa * self.gamma).sqrt()
    }

    /// Reflection amplitudes with and without the atom coupled, at `omega_p`.
    pub fn reflection_pair(&self, omega_p: f64) -> Result<ReflectionPair> {
        Ok(ReflectionPair {
            r_coupled: reflection_coefficient(self, omega_p)?,
            r_empty: empty_cavity_reflection(self, omega_p)?,
        })
    }
}

/// Conditional reflection amplitudes of one node: `r_coupled` acts on the
/// photon when the atom sits in the coupled ground state `|0>`, `r_empty`
/// when it sits in the uncoupled state `|1>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionPair {
    pub r_coupled: Complex64,
    pub r_empty: Complex64,
}

impl ReflectionPair {
    pub fn new(r_coupled: Complex64, r_empty: Complex64) -> Self {
        ReflectionPair { r_coupled, r_empty }
    }

    /// The phase-flip limit: `r = 1`, `r0 = -1`.
    pub fn ideal() -> Self {
        Self::resonant(1.0)
    }

    /// Real coupled amplitude `r` with the resonant empty-cavity value `-1`.
    pub fn resonant(r: f64) -> Self {
        ReflectionPair {
            r_coupled: Complex64::new(r, 0.0),
            r_empty: Complex64::new(-1.0, 0.0),
        }
    }
}

fn check_probe(omega_p: f64) -> Result<()> {
    if omega_p.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "probe frequency must be finite, got {omega_p}"
        )))
    }
}

/// Steady-state reflection amplitude with the atom coupled:
///
/// ```text
///        [i(wc - wp) - k/2][i(w0 - wp) + y/2] + g^2
/// r  =  -------------------------------------------
///        [i(wc - wp) + k/2][i(w0 - wp) + y/2] + g^2
/// ```
pub fn reflection_coefficient(params: &CavityParams, omega_p: f64) -> Result<Complex64> {
    params.validate()?;
    check_probe(omega_p)?;
    let cavity = Complex64::new(0.0, params.omega_c - omega_p);
    let atom = Complex64::new(params.gamma / 2.0, params.omega_0 - omega_p);
    let g2 = params.g * params.g;
    let half_kappa = params.kappa / 2.0;
    let num = (cavity - half_kappa) * atom + g2;
    let den = (cavity + half_kappa) * atom + g2;
    Ok(num / den)
}

/// Bare-cavity reflection amplitude, `[i(wc - wp) - k/2] / [i(wc - wp) + k/2]`.
/// Unit modulus for every real probe frequency.
pub fn empty_cavity_reflection(params: &CavityParams, omega_p: f64) -> Result<Complex64> {
    params.validate()?;
    check_probe(omega_p)?;
    let detuning = params.omega_c - omega_p;
    let half_kappa = params.kappa / 2.0;
    // Far off resonance the ratio tends to +1; keep that limit exact rather
    // than letting inf/inf produce NaN.
    if detuning.abs() > 1e150 * half_kappa {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let num = Complex64::new(-half_kappa, detuning);
    let den = Complex64::new(half_kappa, detuning);
    Ok(num / den)
}

/// Fully resonant coupled reflection, `(4x^2 - 1) / (4x^2 + 1)` with
/// `x = g / sqrt(kappa * gamma)`.
pub fn resonant_reflection(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Parameter(format!("coupling ratio must be >= 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let c = 4.0 * x * x;
    Ok((c - 1.0) / (c + 1.0))
}

/// Bad-cavity hierarchy diagnostic, `kappa >> g^2/kappa >> gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub kappa: f64,
    pub g2_over_kappa: f64,
    pub gamma: f64,
    pub coupling_ratio: f64,
    /// A `>>` holds when the left side exceeds `margin` times the right side.
    pub margin: f64,
    pub kappa_dominates: bool,
    pub coupling_dominates: bool,
}

impl RegimeReport {
    pub fn is_bad_cavity(&self) -> bool {
        self.kappa_dominates && self.coupling_dominates
    }
}

pub const DEFAULT_REGIME_MARGIN: f64 = 2.0;

pub fn regime_check(params: &CavityParams, margin: f64) -> RegimeReport {
    let g2_over_kappa = params.g * params.g / params.kappa;
    RegimeReport {
        kappa: params.kappa,
        g2_over_kappa,
        gamma: params.gamma,
        coupling_ratio: params.coupling_ratio(),
        margin,
        kappa_dominates: params.kappa > margin * g2_over_kappa,
        coupling_dominates: g2_over_kappa > margin * params.gamma,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub omega_p: f64,
    pub r: Complex64,
    pub r0: Complex64,
}

/// Tabulates both reflection amplitudes on `n` evenly spaced probe
/// frequencies from `start` to `end`, endpoints included.
pub fn reflection_spectrum(params: &CavityParams, start: f64, end: f64, n: usize) -> Result<Vec<SpectrumRow>> {
    params.validate()?;
    if !start.is_finite() || !end.is_finite() {
        return Err(Error::Parameter("spectrum range must be finite".into()));
    }
    if start >= end {
        return Err(Error::Parameter(format!("empty spectrum range [{start}, {end}]")));
    }
    if n < 2 {
        return Err(Error::Parameter(format!("spectrum needs at least 2 points, got {n}")));
    }
    let step = (end - start) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            let omega_p = if i == n - 1 { end } else { start + step * i as f64 };
            Ok(SpectrumRow {
                omega_p,
                r: reflection_coefficient(params, omega_p)?,
                r0: empty_cavity_reflection(params, omega_p)?,
            })
        })
        .collect()
}
