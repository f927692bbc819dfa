//! Fidelity and efficiency of the two gates.
//!
//! Every quantity is available two ways: from closed-form expressions in
//! the input angles and the coupled reflection amplitude `r`, and from the
//! circuit engine. The empty-cavity amplitude is fixed at `-1` (its exact
//! resonant value) in both.
//!
//! Inputs are parameterized by angles, `αp = cos φ, βp = sin φ` for the
//! photon, `α1 = cos θ, β1 = sin θ` for atom 0 and `α2 = cos η, β2 = sin η`
//! for atom 1 (Toffoli only). Averages are plain means over `[0, 2π)` per
//! angle.
//!
//! Fidelity is `|<ideal|out>|^2` divided by the norm that survived the
//! circuit. Efficiency is the norm that left through the out port. For the
//! Toffoli the surviving norm also counts the discard port (the `ξ6` term),
//! so its fidelity denominator is `ξ1 + ... + ξ6` while its efficiency is
//! `ξ1 + ... + ξ5`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{build_resonant, ideal_gate_matrix, BoundCircuit, GateKind};
use crate::quadrature::periodic_mean;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InputAngles {
    pub varphi: f64,
    pub theta: f64,
    /// Atom-1 angle; ignored by the CNOT.
    pub eta: f64,
}

impl InputAngles {
    pub fn cnot(varphi: f64, theta: f64) -> Self {
        InputAngles {
            varphi,
            theta,
            eta: 0.0,
        }
    }

    pub fn toffoli(varphi: f64, theta: f64, eta: f64) -> Self {
        InputAngles { varphi, theta, eta }
    }

    /// `(cos φ, sin φ)`
    pub fn photon(&self) -> (f64, f64) {
        (self.varphi.cos(), self.varphi.sin())
    }

    /// `(cos θ, sin θ)`
    pub fn atom1(&self) -> (f64, f64) {
        (self.theta.cos(), self.theta.sin())
    }

    /// `(cos η, sin η)`
    pub fn atom2(&self) -> (f64, f64) {
        (self.eta.cos(), self.eta.sin())
    }

    pub fn check(&self) -> Result<()> {
        if self.varphi.is_finite() && self.theta.is_finite() && self.eta.is_finite() {
            Ok(())
        } else {
            Err(Error::Parameter(format!("input angles must be finite, got {self:?}")))
        }
    }
}

/// The six norm contributions of the Toffoli output. `ξ1..ξ5` leave through
/// the out port, `ξ6` through the discard port.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToffoliXi {
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
    pub xi4: f64,
    pub xi5: f64,
    pub xi6: f64,
}

impl ToffoliXi {
    pub fn total(&self) -> f64 {
        self.out_port() + self.xi6
    }

    pub fn out_port(&self) -> f64 {
        self.xi1 + self.xi2 + self.xi3 + self.xi4 + self.xi5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateMetrics {
    pub fidelity: f64,
    pub efficiency: f64,
    pub averaged: bool,
    /// Per-dimension quadrature nodes, for averaged metrics.
    pub nodes: Option<usize>,
    pub fidelity_error: Option<f64>,
    pub efficiency_error: Option<f64>,
}

impl GateMetrics {
    pub fn point(fidelity: f64, efficiency: f64) -> Self {
        GateMetrics {
            fidelity,
            efficiency,
            averaged: false,
            nodes: None,
            fidelity_error: None,
            efficiency_error: None,
        }
    }
}

fn ratio(numerator: f64, denominator: f64, what: &str) -> Result<f64> {
    if denominator > 0.0 && denominator.is_finite() {
        Ok(numerator / denominator)
    } else {
        Err(Error::Degenerate(format!("{what}: surviving norm is {denominator}")))
    }
}

/// CNOT efficiency, also the CNOT fidelity denominator:
/// `|αp|² + ¼|αβp(r-1) + ββp(r+1)|² + ¼|αβp(r+1) + ββp(r-1)|²`.
pub fn cnot_efficiency_closed(r: Complex64, angles: &InputAngles) -> f64 {
    let (ap, bp) = angles.photon();
    let (a, b) = angles.atom1();
    let (rm, rp) = (r - 1.0, r + 1.0);
    ap * ap + 0.25 * (a * bp * rm + b * bp * rp).norm_sqr() + 0.25 * (a * bp * rp + b * bp * rm).norm_sqr()
}

/// CNOT fidelity,
/// `|αp² + ½βp²[2αβ(r-1) + r + 1]|²` over the CNOT efficiency.
pub fn cnot_fidelity_closed(r: Complex64, angles: &InputAngles) -> Result<f64> {
    angles.check()?;
    let (ap, bp) = angles.photon();
    let (a, b) = angles.atom1();
    let overlap = ap * ap + 0.5 * bp * bp * (2.0 * a * b * (r - 1.0) + r + 1.0);
    ratio(overlap.norm_sqr(), cnot_efficiency_closed(r, angles), "CNOT fidelity")
}

pub fn xi_terms(r: Complex64, angles: &InputAngles) -> ToffoliXi {
    let (ap, bp) = angles.photon();
    let (a1, b1) = angles.atom1();
    let (a2, b2) = angles.atom2();
    let (rm, rp) = (r - 1.0, r + 1.0);
    let rm3 = rm * rm * rm;
    let rm2rp = rm * rm * rp;
    let rp2 = rp * rp;
    let leak = rp2 * (1.0 - r);
    ToffoliXi {
        xi1: ap * ap,
        xi2: (bp * a1 * (a2 * rm3 + b2 * rm2rp + 2.0 * a2 * rp2)).norm_sqr() / 64.0,
        xi3: (bp * a1 * (b2 * rm3 + a2 * rm2rp + 2.0 * b2 * rp2)).norm_sqr() / 64.0,
        xi4: (bp * b1 * (a2 * rm + b2 * rp)).norm_sqr() / 4.0,
        xi5: (bp * b1 * (a2 * rp + b2 * rm)).norm_sqr() / 4.0,
        xi6: (bp * a1 * (a2 * leak + b2 * leak)).norm_sqr() / 32.0,
    }
}

/// Toffoli fidelity, overlap squared over `ξ1 + ... + ξ6`.
pub fn toffoli_fidelity_closed(r: Complex64, angles: &InputAngles) -> Result<f64> {
    angles.check()?;
    let (ap, bp) = angles.photon();
    let (a1, b1) = angles.atom1();
    let (a2, b2) = angles.atom2();
    let (rm, rp) = (r - 1.0, r + 1.0);
    let overlap = ap * ap
        + bp * bp * a1 * a1 / 8.0 * (rm * rm * rm + 2.0 * a2 * b2 * rm * rm * rp + 2.0 * rp * rp)
        + bp * bp * b1 * b1 / 2.0 * (2.0 * a2 * b2 * rm + rp);
    ratio(overlap.norm_sqr(), xi_terms(r, angles).total(), "Toffoli fidelity")
}

/// Toffoli efficiency, `ξ1 + ... + ξ5`.
pub fn toffoli_efficiency_closed(r: Complex64, angles: &InputAngles) -> f64 {
    xi_terms(r, angles).out_port()
}

/// Closed-form `(F, P)` for one input.
pub fn closed_form(kind: GateKind, r: Complex64, angles: &InputAngles) -> Result<GateMetrics> {
    Ok(match kind {
        GateKind::Cnot => GateMetrics::point(cnot_fidelity_closed(r, angles)?, cnot_efficiency_closed(r, angles)),
        GateKind::Toffoli => GateMetrics::point(
            toffoli_fidelity_closed(r, angles)?,
            toffoli_efficiency_closed(r, angles),
        ),
    })
}

/// Dense gate-basis input vector for `angles`.
pub fn input_vector(kind: GateKind, angles: &InputAngles) -> Vec<Complex64> {
    let (ap, bp) = angles.photon();
    let mut qubits = vec![(ap, bp), angles.atom1()];
    if kind == GateKind::Toffoli {
        qubits.push(angles.atom2());
    }
    let dim = 1 << qubits.len();
    (0..dim)
        .map(|index| {
            let amp: f64 = qubits
                .iter()
                .enumerate()
                .map(|(q, (zero, one))| {
                    let bit = (index >> (qubits.len() - 1 - q)) & 1;
                    if bit == 0 {
                        *zero
                    } else {
                        *one
                    }
                })
                .product();
            Complex64::new(amp, 0.0)
        })
        .collect()
}

/// Runs `circuit` on the input given by `angles` and scores the out port
/// against the ideal gate.
pub fn engine_metrics(circuit: &BoundCircuit, kind: GateKind, angles: &InputAngles) -> Result<GateMetrics> {
    angles.check()?;
    if circuit.spec.atom_count() != kind.atom_count() {
        return Err(Error::Parameter(format!(
            "{kind:?} needs {} atoms, circuit has {}",
            kind.atom_count(),
            circuit.spec.atom_count()
        )));
    }
    let input = input_vector(kind, angles);
    let ideal = ideal_gate_matrix(kind) * nalgebra::DVector::from_vec(input.clone());
    let output = circuit.run(&circuit.spec.vector_input(&input)?)?;
    let out = output.out_state.gate_vector(circuit.spec.output_port());
    let overlap: Complex64 = ideal.iter().zip(&out).map(|(i, o)| i.conj() * o).sum();
    let fidelity = ratio(overlap.norm_sqr(), output.surviving_norm(), "engine fidelity")?;
    Ok(GateMetrics::point(fidelity, output.out_state.total_norm()))
}

/// Engine metrics with every node at `(r, -1)`.
pub fn metrics_from_engine(kind: GateKind, r: Complex64, angles: &InputAngles) -> Result<GateMetrics> {
    engine_metrics(&build_resonant(kind, r), kind, angles)
}

/// Per-dimension node counts of the angle averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub cnot_nodes: usize,
    pub toffoli_nodes: usize,
}

pub const DEFAULT_CNOT_NODES: usize = 128;
pub const DEFAULT_TOFFOLI_NODES: usize = 64;

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            cnot_nodes: DEFAULT_CNOT_NODES,
            toffoli_nodes: DEFAULT_TOFFOLI_NODES,
        }
    }
}

impl QuadratureConfig {
    pub fn doubled(&self) -> Self {
        QuadratureConfig {
            cnot_nodes: self.cnot_nodes * 2,
            toffoli_nodes: self.toffoli_nodes * 2,
        }
    }
}

fn averaged(mean: crate::quadrature::PeriodicMean<2>) -> GateMetrics {
    GateMetrics {
        fidelity: mean.mean[0],
        efficiency: mean.mean[1],
        averaged: true,
        nodes: Some(mean.nodes),
        fidelity_error: Some(mean.error_estimate[0]),
        efficiency_error: Some(mean.error_estimate[1]),
    }
}

/// `(F̄_C, P̄_C)` over `(φ, θ) ∈ [0, 2π)²`.
pub fn average_cnot(r: Complex64, config: &QuadratureConfig) -> Result<GateMetrics> {
    let mean = periodic_mean(2, config.cnot_nodes, |a| {
        let angles = InputAngles::cnot(a[0], a[1]);
        Ok([cnot_fidelity_closed(r, &angles)?, cnot_efficiency_closed(r, &angles)])
    })?;
    Ok(averaged(mean))
}

/// `(F̄_T, P̄_T)` over `(φ, θ, η) ∈ [0, 2π)³`.
pub fn average_toffoli(r: Complex64, config: &QuadratureConfig) -> Result<GateMetrics> {
    let mean = periodic_mean(3, config.toffoli_nodes, |a| {
        let angles = InputAngles::toffoli(a[0], a[1], a[2]);
        Ok([
            toffoli_fidelity_closed(r, &angles)?,
            toffoli_efficiency_closed(r, &angles),
        ])
    })?;
    Ok(averaged(mean))
}

/// Both gates' averages at one reflection amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateAverages {
    pub cnot: GateMetrics,
    pub toffoli: GateMetrics,
}

pub fn average_both(r: Complex64, config: &QuadratureConfig) -> Result<GateAverages> {
    Ok(GateAverages {
        cnot: average_cnot(r, config)?,
        toffoli: average_toffoli(r, config)?,
    })
}

/// Angle averages of an arbitrary bound circuit, for node amplitudes the
/// closed forms do not cover (an empty-cavity amplitude other than `-1`,
/// or different amplitudes per node). The circuit's port maps are computed
/// once and applied to every quadrature node.
pub fn average_bound(circuit: &BoundCircuit, kind: GateKind, config: &QuadratureConfig) -> Result<GateMetrics> {
    if circuit.spec.atom_count() != kind.atom_count() {
        return Err(Error::Parameter(format!(
            "{kind:?} needs {} atoms, circuit has {}",
            kind.atom_count(),
            circuit.spec.atom_count()
        )));
    }
    let (out, discard) = circuit.port_matrices()?;
    let ideal = ideal_gate_matrix(kind);
    let (dims, nodes) = match kind {
        GateKind::Cnot => (2, config.cnot_nodes),
        GateKind::Toffoli => (3, config.toffoli_nodes),
    };
    let mean = periodic_mean(dims, nodes, |a| {
        let angles = InputAngles::toffoli(a[0], a[1], a.get(2).copied().unwrap_or(0.0));
        let input = nalgebra::DVector::from_vec(input_vector(kind, &angles));
        let got = &out * &input;
        let want = &ideal * &input;
        let surviving = got.norm_squared() + (&discard * &input).norm_squared();
        let fidelity = ratio(want.dotc(&got).norm_sqr(), surviving, "average fidelity")?;
        Ok([fidelity, got.norm_squared()])
    })?;
    Ok(averaged(mean))
}
