//! Sparse joint state of one flying photon and a register of atomic qubits.
//!
//! A basis label is (polarization, location, atom bits). The location is an
//! index into a [`Layout`] that names every path and port a circuit uses.
//! States are sub-normalized: a cavity with `|r| < 1` removes norm, and that
//! removed norm is what the circuit runner reports as absorbed.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cavity::ReflectionPair;
use crate::{Error, Result};

/// Amplitudes below this magnitude are treated as absent when checking that
/// only L-polarized light reaches a cavity.
pub const ROUTING_TOLERANCE: f64 = 1e-12;

/// Upper bound on atoms per register; atom bits are packed into a `u32`.
pub const MAX_ATOMS: usize = 16;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarization {
    /// Right-circular; transmitted by a CPBS.
    R,
    /// Left-circular; reflected by a CPBS and the only mode a cavity couples.
    L,
}

impl Polarization {
    pub fn flipped(self) -> Self {
        match self {
            Polarization::R => Polarization::L,
            Polarization::L => Polarization::R,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Polarization::R => 0,
            Polarization::L => 1,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarization::R => "R",
            Polarization::L => "L",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LocationId(pub usize);

/// Atom ground-state bits, bit `i` holding atom `i`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AtomBits(pub u32);

impl AtomBits {
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut word = 0;
        for (i, &b) in bits.iter().enumerate() {
            if b != 0 {
                word |= 1 << i;
            }
        }
        AtomBits(word)
    }

    pub fn bit(self, atom: usize) -> u8 {
        ((self.0 >> atom) & 1) as u8
    }

    pub fn with_bit(self, atom: usize, value: u8) -> Self {
        if value == 0 {
            AtomBits(self.0 & !(1 << atom))
        } else {
            AtomBits(self.0 | (1 << atom))
        }
    }

    /// Bits in register order, atom 0 first.
    pub fn to_string_with(self, atom_count: usize) -> String {
        (0..atom_count)
            .map(|i| if self.bit(i) == 1 { '1' } else { '0' })
            .collect()
    }
}

/// Names of every location a state may occupy, plus the register size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    locations: Vec<String>,
    atom_count: usize,
}

impl Layout {
    pub fn new<S: Into<String>>(locations: impl IntoIterator<Item = S>, atom_count: usize) -> Result<Self> {
        let locations: Vec<String> = locations.into_iter().map(Into::into).collect();
        if atom_count > MAX_ATOMS {
            return Err(Error::Parameter(format!(
                "at most {MAX_ATOMS} atoms are supported, got {atom_count}"
            )));
        }
        for (i, name) in locations.iter().enumerate() {
            if locations[..i].contains(name) {
                return Err(Error::Wiring(format!("location '{name}' registered twice")));
            }
        }
        Ok(Layout { locations, atom_count })
    }

    pub fn atom_count(&self) -> usize {
        self.atom_count
    }

    pub fn locations(&self) -> &[String] {
        &self.locations
    }

    pub fn location(&self, name: &str) -> Option<LocationId> {
        self.locations.iter().position(|n| n == name).map(LocationId)
    }

    pub fn name(&self, loc: LocationId) -> &str {
        self.locations
            .get(loc.0)
            .map(String::as_str)
            .unwrap_or("<unregistered>")
    }

    pub fn check_location(&self, loc: LocationId) -> Result<()> {
        if loc.0 < self.locations.len() {
            Ok(())
        } else {
            Err(Error::Wiring(format!("location #{} is not registered", loc.0)))
        }
    }

    pub fn check_atom(&self, atom: usize) -> Result<()> {
        if atom < self.atom_count {
            Ok(())
        } else {
            Err(Error::Wiring(format!(
                "atom index {atom} out of range for a register of {}",
                self.atom_count
            )))
        }
    }

    /// Dimension of the gate basis, `2 * 2^atom_count`.
    pub fn gate_dimension(&self) -> usize {
        2 << self.atom_count
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BasisLabel {
    pub loc: LocationId,
    pub pol: Polarization,
    pub atoms: AtomBits,
}

impl BasisLabel {
    pub fn new(pol: Polarization, loc: LocationId, atoms: AtomBits) -> Self {
        BasisLabel { loc, pol, atoms }
    }

    /// Index in the (photon, atom 0, atom 1, ...) gate basis, photon most
    /// significant, `R < L`, `0 < 1`.
    pub fn gate_index(&self, atom_count: usize) -> usize {
        let mut index = self.pol.index();
        for atom in 0..atom_count {
            index = (index << 1) | self.atoms.bit(atom) as usize;
        }
        index
    }
}

/// Inverse of [`BasisLabel::gate_index`].
pub fn gate_basis_label(index: usize, atom_count: usize) -> (Polarization, AtomBits) {
    let pol = if (index >> atom_count) & 1 == 0 {
        Polarization::R
    } else {
        Polarization::L
    };
    let mut atoms = AtomBits::default();
    for atom in 0..atom_count {
        let bit = (index >> (atom_count - 1 - atom)) & 1;
        atoms = atoms.with_bit(atom, bit as u8);
    }
    (pol, atoms)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    layout: Arc<Layout>,
    amplitudes: BTreeMap<BasisLabel, Complex64>,
}

impl HybridState {
    pub fn new(layout: Arc<Layout>) -> Self {
        HybridState {
            layout,
            amplitudes: BTreeMap::new(),
        }
    }

    /// Product state `photon ⊗ atom_0 ⊗ atom_1 ...` with the photon at `loc`.
    /// `photon` holds the (R, L) amplitudes and each atom its (0, 1) pair.
    pub fn product(
        layout: Arc<Layout>,
        loc: LocationId,
        photon: [Complex64; 2],
        atoms: &[[Complex64; 2]],
    ) -> Result<Self> {
        layout.check_location(loc)?;
        if atoms.len() != layout.atom_count() {
            return Err(Error::Parameter(format!(
                "expected {} atom states, got {}",
                layout.atom_count(),
                atoms.len()
            )));
        }
        let mut state = HybridState::new(layout);
        let dim = state.layout.gate_dimension();
        for index in 0..dim {
            let (pol, bits) = gate_basis_label(index, atoms.len());
            let mut amp = photon[pol.index()];
            for (atom, pair) in atoms.iter().enumerate() {
                amp *= pair[bits.bit(atom) as usize];
            }
            if amp != Complex64::new(0.0, 0.0) {
                state.amplitudes.insert(BasisLabel::new(pol, loc, bits), amp);
            }
        }
        Ok(state)
    }

    /// Places a dense gate-basis vector at `loc`.
    pub fn from_gate_vector(layout: Arc<Layout>, loc: LocationId, vector: &[Complex64]) -> Result<Self> {
        layout.check_location(loc)?;
        if vector.len() != layout.gate_dimension() {
            return Err(Error::Parameter(format!(
                "gate vector has length {}, expected {}",
                vector.len(),
                layout.gate_dimension()
            )));
        }
        let n = layout.atom_count();
        let mut state = HybridState::new(layout);
        for (index, &amp) in vector.iter().enumerate() {
            if amp != Complex64::new(0.0, 0.0) {
                let (pol, atoms) = gate_basis_label(index, n);
                state.amplitudes.insert(BasisLabel::new(pol, loc, atoms), amp);
            }
        }
        Ok(state)
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn atom_count(&self) -> usize {
        self.layout.atom_count()
    }

    pub fn amplitude(&self, label: &BasisLabel) -> Complex64 {
        self.amplitudes.get(label).copied().unwrap_or_default()
    }

    /// Adds `amp` to the amplitude of `label`.
    pub fn add(&mut self, label: BasisLabel, amp: Complex64) -> Result<()> {
        self.layout.check_location(label.loc)?;
        if label.atoms.0 >> self.layout.atom_count() != 0 {
            return Err(Error::Wiring(format!(
                "atom bits {:#b} exceed a register of {}",
                label.atoms.0,
                self.layout.atom_count()
            )));
        }
        *self.amplitudes.entry(label).or_default() += amp;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BasisLabel, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.values().all(|a| a.norm_sqr() == 0.0)
    }

    /// Sum of squared amplitude magnitudes.
    pub fn total_norm(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    /// Restriction to labels at `loc`, not renormalized.
    pub fn project_location(&self, loc: LocationId) -> HybridState {
        HybridState {
            layout: self.layout.clone(),
            amplitudes: self
                .amplitudes
                .iter()
                .filter(|(label, _)| label.loc == loc)
                .map(|(l, a)| (*l, *a))
                .collect(),
        }
    }

    /// Dense gate-basis vector of the amplitudes sitting at `loc`.
    pub fn gate_vector(&self, loc: LocationId) -> Vec<Complex64> {
        let n = self.layout.atom_count();
        let mut vector = vec![Complex64::default(); self.layout.gate_dimension()];
        for (label, amp) in self.amplitudes.iter().filter(|(l, _)| l.loc == loc) {
            vector[label.gate_index(n)] += amp;
        }
        vector
    }

    /// Largest amplitude-magnitude difference over the union of supports.
    pub fn max_abs_diff(&self, other: &HybridState) -> f64 {
        let mut worst: f64 = 0.0;
        for (label, amp) in &self.amplitudes {
            worst = worst.max((amp - other.amplitude(label)).norm());
        }
        for (label, amp) in &other.amplitudes {
            if !self.amplitudes.contains_key(label) {
                worst = worst.max(amp.norm());
            }
        }
        worst
    }

    /// Takes every entry at `loc` out of the map.
    fn drain_location(&mut self, loc: LocationId) -> Vec<(BasisLabel, Complex64)> {
        let taken: Vec<_> = self
            .amplitudes
            .iter()
            .filter(|(l, _)| l.loc == loc)
            .map(|(l, a)| (*l, *a))
            .collect();
        for (label, _) in &taken {
            self.amplitudes.remove(label);
        }
        taken
    }

    fn accumulate(&mut self, entries: impl IntoIterator<Item = (BasisLabel, Complex64)>) {
        for (label, amp) in entries {
            *self.amplitudes.entry(label).or_default() += amp;
        }
    }

    /// Circularly polarizing beam splitter. R keeps its line
    /// (`in_a -> out_a`, `in_b -> out_b`), L crosses
    /// (`in_a -> out_b`, `in_b -> out_a`). No phase on either route.
    pub fn apply_cpbs(
        &mut self,
        in_a: LocationId,
        in_b: LocationId,
        out_a: LocationId,
        out_b: LocationId,
    ) -> Result<()> {
        let ports = [in_a, in_b, out_a, out_b];
        for loc in ports {
            self.layout.check_location(loc)?;
        }
        for i in 0..4 {
            if ports[..i].contains(&ports[i]) {
                return Err(Error::Wiring(format!(
                    "cpbs ports must be distinct, '{}' repeats",
                    self.layout.name(ports[i])
                )));
            }
        }
        let mut moved = self.drain_location(in_a);
        moved.extend(self.drain_location(in_b));
        let routed = moved.into_iter().map(|(label, amp)| {
            let from_a = label.loc == in_a;
            let loc = match (label.pol, from_a) {
                (Polarization::R, true) | (Polarization::L, false) => out_a,
                (Polarization::R, false) | (Polarization::L, true) => out_b,
            };
            (BasisLabel { loc, ..label }, amp)
        });
        let routed: Vec<_> = routed.collect();
        self.accumulate(routed);
        Ok(())
    }

    /// Half-wave plate at 22.5°: `R -> (R + L)/√2`, `L -> (R - L)/√2`.
    pub fn apply_photon_hadamard(&mut self, loc: LocationId) -> Result<()> {
        self.layout.check_location(loc)?;
        let entries = self.drain_location(loc);
        let mut out = Vec::with_capacity(entries.len() * 2);
        for (label, amp) in entries {
            let scaled = amp * FRAC_1_SQRT_2;
            let sign = if label.pol == Polarization::L { -1.0 } else { 1.0 };
            out.push((
                BasisLabel {
                    pol: Polarization::R,
                    ..label
                },
                scaled,
            ));
            out.push((
                BasisLabel {
                    pol: Polarization::L,
                    ..label
                },
                scaled * sign,
            ));
        }
        self.accumulate(out);
        Ok(())
    }

    pub fn apply_photon_sigma_x(&mut self, loc: LocationId) -> Result<()> {
        self.layout.check_location(loc)?;
        let entries = self.drain_location(loc);
        let flipped: Vec<_> = entries
            .into_iter()
            .map(|(label, amp)| {
                (
                    BasisLabel {
                        pol: label.pol.flipped(),
                        ..label
                    },
                    amp,
                )
            })
            .collect();
        self.accumulate(flipped);
        Ok(())
    }

    /// `|0> -> (|0> + |1>)/√2`, `|1> -> (|0> - |1>)/√2` on one atom,
    /// whatever the photon is doing.
    pub fn apply_atom_hadamard(&mut self, atom: usize) -> Result<()> {
        self.layout.check_atom(atom)?;
        let entries = std::mem::take(&mut self.amplitudes);
        let mut out = Vec::with_capacity(entries.len() * 2);
        for (label, amp) in entries {
            let scaled = amp * FRAC_1_SQRT_2;
            let sign = if label.atoms.bit(atom) == 1 { -1.0 } else { 1.0 };
            out.push((
                BasisLabel {
                    atoms: label.atoms.with_bit(atom, 0),
                    ..label
                },
                scaled,
            ));
            out.push((
                BasisLabel {
                    atoms: label.atoms.with_bit(atom, 1),
                    ..label
                },
                scaled * sign,
            ));
        }
        self.accumulate(out);
        Ok(())
    }

    /// Reflection off the node holding `atom`: amplitudes at `loc` pick up
    /// `r_coupled` when the atom is in `|0>` and `r_empty` when in `|1>`.
    pub fn apply_cavity_scatter(&mut self, loc: LocationId, atom: usize, pair: ReflectionPair) -> Result<()> {
        self.layout.check_location(loc)?;
        self.layout.check_atom(atom)?;
        for (label, amp) in self.amplitudes.iter() {
            if label.loc == loc && label.pol == Polarization::R && amp.norm() > ROUTING_TOLERANCE {
                return Err(Error::Routing {
                    location: self.layout.name(loc).to_string(),
                    amplitude: amp.norm(),
                });
            }
        }
        for (label, amp) in self.amplitudes.iter_mut() {
            if label.loc == loc {
                *amp *= if label.atoms.bit(atom) == 0 {
                    pair.r_coupled
                } else {
                    pair.r_empty
                };
            }
        }
        Ok(())
    }

    /// Moves everything at `from` to `to` unchanged (mirror or delay line).
    pub fn relabel(&mut self, from: LocationId, to: LocationId) -> Result<()> {
        self.layout.check_location(from)?;
        self.layout.check_location(to)?;
        if from == to {
            return Ok(());
        }
        let moved: Vec<_> = self
            .drain_location(from)
            .into_iter()
            .map(|(label, amp)| (BasisLabel { loc: to, ..label }, amp))
            .collect();
        self.accumulate(moved);
        Ok(())
    }

    /// Human-readable ket listing, e.g. `(0.5+0i)|L,10>@out`.
    pub fn describe(&self) -> String {
        let n = self.atom_count();
        let terms: Vec<String> = self
            .amplitudes
            .iter()
            .filter(|(_, a)| a.norm_sqr() > 0.0)
            .map(|(l, a)| {
                format!(
                    "({a})|{},{}>@{}",
                    l.pol,
                    l.atoms.to_string_with(n),
                    self.layout.name(l.loc)
                )
            })
            .collect();
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join(" + ")
        }
    }
}

/// One primitive step of a circuit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Element {
    Cpbs {
        inputs: [LocationId; 2],
        outputs: [LocationId; 2],
    },
    PhotonHadamard {
        loc: LocationId,
    },
    PhotonSigmaX {
        loc: LocationId,
    },
    AtomHadamard {
        atom: usize,
    },
    /// Reflection off the node whose atom is `atom`; the amplitudes come
    /// from the node bindings supplied at run time.
    CavityScatter {
        loc: LocationId,
        atom: usize,
    },
    /// Mirror or delay line: moves amplitude between locations, no phase.
    Relabel {
        from: LocationId,
        to: LocationId,
    },
}

impl Element {
    /// Checks the wiring against `layout` without touching a state.
    pub fn validate(&self, layout: &Layout) -> Result<()> {
        match *self {
            Element::Cpbs { inputs, outputs } => {
                let ports = [inputs[0], inputs[1], outputs[0], outputs[1]];
                for loc in ports {
                    layout.check_location(loc)?;
                }
                for i in 0..4 {
                    if ports[..i].contains(&ports[i]) {
                        return Err(Error::Wiring(format!(
                            "cpbs ports must be distinct, '{}' repeats",
                            layout.name(ports[i])
                        )));
                    }
                }
                Ok(())
            }
            Element::PhotonHadamard { loc } | Element::PhotonSigmaX { loc } => layout.check_location(loc),
            Element::AtomHadamard { atom } => layout.check_atom(atom),
            Element::CavityScatter { loc, atom } => {
                layout.check_location(loc)?;
                layout.check_atom(atom)
            }
            Element::Relabel { from, to } => {
                layout.check_location(from)?;
                layout.check_location(to)
            }
        }
    }

    /// `nodes[i]` is the reflection pair of the cavity holding atom `i`.
    pub fn apply(&self, state: &mut HybridState, nodes: &[ReflectionPair]) -> Result<()> {
        match *self {
            Element::Cpbs { inputs, outputs } => state.apply_cpbs(inputs[0], inputs[1], outputs[0], outputs[1]),
            Element::PhotonHadamard { loc } => state.apply_photon_hadamard(loc),
            Element::PhotonSigmaX { loc } => state.apply_photon_sigma_x(loc),
            Element::AtomHadamard { atom } => state.apply_atom_hadamard(atom),
            Element::CavityScatter { loc, atom } => {
                let pair = nodes.get(atom).copied().ok_or_else(|| {
                    Error::Wiring(format!("no reflection amplitudes bound for the cavity of atom {atom}"))
                })?;
                state.apply_cavity_scatter(loc, atom, pair)
            }
            Element::Relabel { from, to } => state.relabel(from, to),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EPS: f64 = 1e-12;
    const ZERO: Complex64 = Complex64::new(0.0, 0.0);
    const ONE: Complex64 = Complex64::new(1.0, 0.0);

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn layout(atoms: usize) -> Arc<Layout> {
        Arc::new(Layout::new(["a", "b", "c", "d", "e"], atoms).unwrap())
    }

    fn loc(l: &Layout, name: &str) -> LocationId {
        l.location(name).unwrap()
    }

    fn ket(l: &Arc<Layout>, at: &str, pol: Polarization, bits: &[u8]) -> HybridState {
        let mut s = HybridState::new(l.clone());
        s.add(BasisLabel::new(pol, loc(l, at), AtomBits::from_bits(bits)), ONE)
            .unwrap();
        s
    }

    #[test]
    fn layout_rejects_duplicates_and_huge_registers() {
        assert!(Layout::new(["x", "x"], 1).is_err());
        assert!(Layout::new(["x"], MAX_ATOMS + 1).is_err());
    }

    #[test]
    fn gate_index_round_trips() {
        for n in 0..4 {
            for index in 0..(2usize << n) {
                let (pol, atoms) = gate_basis_label(index, n);
                let label = BasisLabel::new(pol, LocationId(0), atoms);
                assert_eq!(label.gate_index(n), index);
            }
        }
        // |L, atom0 = 1, atom1 = 0> sits at 0b110.
        let label = BasisLabel::new(Polarization::L, LocationId(0), AtomBits::from_bits(&[1, 0]));
        assert_eq!(label.gate_index(2), 6);
    }

    #[test]
    fn cpbs_routes_r_straight_and_l_across() {
        let l = layout(1);
        let (a, b, cc, d) = (loc(&l, "a"), loc(&l, "b"), loc(&l, "c"), loc(&l, "d"));
        let mut s = ket(&l, "a", Polarization::R, &[0]);
        s.apply_cpbs(a, b, cc, d).unwrap();
        assert_eq!(s.max_abs_diff(&ket(&l, "c", Polarization::R, &[0])), 0.0);

        let mut s = ket(&l, "a", Polarization::L, &[0]);
        s.apply_cpbs(a, b, cc, d).unwrap();
        assert_eq!(s.max_abs_diff(&ket(&l, "d", Polarization::L, &[0])), 0.0);

        let mut s = ket(&l, "b", Polarization::L, &[1]);
        s.apply_cpbs(a, b, cc, d).unwrap();
        assert_eq!(s.max_abs_diff(&ket(&l, "c", Polarization::L, &[1])), 0.0);
    }

    #[test]
    fn cpbs_splits_superposition() {
        // (αp R + βp L) at the input lands as αp R on one line, βp L on the other.
        let l = layout(1);
        let (ap, bp) = (c(0.6), c(0.8));
        let (alpha, beta) = (c(0.28), c(0.96));
        let mut s = HybridState::product(l.clone(), loc(&l, "a"), [ap, bp], &[[alpha, beta]]).unwrap();
        s.apply_cpbs(loc(&l, "a"), loc(&l, "e"), loc(&l, "b"), loc(&l, "c"))
            .unwrap();
        let mut expected = HybridState::new(l.clone());
        for (bit, amp) in [(0u8, alpha), (1, beta)] {
            expected
                .add(
                    BasisLabel::new(Polarization::R, loc(&l, "b"), AtomBits::from_bits(&[bit])),
                    ap * amp,
                )
                .unwrap();
            expected
                .add(
                    BasisLabel::new(Polarization::L, loc(&l, "c"), AtomBits::from_bits(&[bit])),
                    bp * amp,
                )
                .unwrap();
        }
        assert!(s.max_abs_diff(&expected) < EPS);
    }

    #[test]
    fn cpbs_wiring_errors() {
        let l = layout(1);
        let mut s = ket(&l, "a", Polarization::R, &[0]);
        let (a, b, cc) = (loc(&l, "a"), loc(&l, "b"), loc(&l, "c"));
        assert!(matches!(s.apply_cpbs(a, b, cc, LocationId(99)), Err(Error::Wiring(_))));
        assert!(matches!(s.apply_cpbs(a, b, cc, a), Err(Error::Wiring(_))));
    }

    #[test]
    fn photon_hadamard_values() {
        let l = layout(0);
        let a = loc(&l, "a");
        let mut s = ket(&l, "a", Polarization::R, &[]);
        s.apply_photon_hadamard(a).unwrap();
        let expected = HybridState::from_gate_vector(l.clone(), a, &[c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)]).unwrap();
        assert!(s.max_abs_diff(&expected) < EPS);

        // (R - L)/√2 -> L
        let mut s = HybridState::from_gate_vector(l.clone(), a, &[c(FRAC_1_SQRT_2), c(-FRAC_1_SQRT_2)]).unwrap();
        s.apply_photon_hadamard(a).unwrap();
        assert!(s.max_abs_diff(&ket(&l, "a", Polarization::L, &[])) < EPS);
    }

    #[test]
    fn photon_hadamard_only_touches_its_location() {
        let l = layout(0);
        let mut s = ket(&l, "b", Polarization::L, &[]);
        s.apply_photon_hadamard(loc(&l, "a")).unwrap();
        assert_eq!(s.max_abs_diff(&ket(&l, "b", Polarization::L, &[])), 0.0);
        assert!(s.apply_photon_hadamard(LocationId(7)).is_err());
    }

    #[test]
    fn sigma_x_swaps_polarization() {
        let l = layout(1);
        let a = loc(&l, "a");
        let mut s = ket(&l, "a", Polarization::R, &[1]);
        s.apply_photon_sigma_x(a).unwrap();
        assert_eq!(s.max_abs_diff(&ket(&l, "a", Polarization::L, &[1])), 0.0);
        s.apply_photon_sigma_x(a).unwrap();
        assert_eq!(s.max_abs_diff(&ket(&l, "a", Polarization::R, &[1])), 0.0);
        assert!(s.apply_photon_sigma_x(LocationId(5)).is_err());
    }

    #[test]
    fn sigma_x_on_block_a_output() {
        // βp[β1 |R>|1> + α1 |L>|0>] -> βp[β1 |L>|1> + α1 |R>|0>]
        let l = layout(1);
        let a = loc(&l, "a");
        let (bp, a1, b1) = (c(0.8), c(0.6), c(0.8));
        let mut s = HybridState::new(l.clone());
        s.add(BasisLabel::new(Polarization::R, a, AtomBits::from_bits(&[1])), bp * b1)
            .unwrap();
        s.add(BasisLabel::new(Polarization::L, a, AtomBits::from_bits(&[0])), bp * a1)
            .unwrap();
        s.apply_photon_sigma_x(a).unwrap();
        let mut expected = HybridState::new(l.clone());
        expected
            .add(BasisLabel::new(Polarization::L, a, AtomBits::from_bits(&[1])), bp * b1)
            .unwrap();
        expected
            .add(BasisLabel::new(Polarization::R, a, AtomBits::from_bits(&[0])), bp * a1)
            .unwrap();
        assert!(s.max_abs_diff(&expected) < EPS);
    }

    #[test]
    fn atom_hadamard_values() {
        let l = layout(2);
        let mut s = ket(&l, "a", Polarization::L, &[0, 1]);
        s.apply_atom_hadamard(0).unwrap();
        let mut expected = HybridState::new(l.clone());
        let h = c(FRAC_1_SQRT_2);
        expected
            .add(
                BasisLabel::new(Polarization::L, loc(&l, "a"), AtomBits::from_bits(&[0, 1])),
                h,
            )
            .unwrap();
        expected
            .add(
                BasisLabel::new(Polarization::L, loc(&l, "a"), AtomBits::from_bits(&[1, 1])),
                h,
            )
            .unwrap();
        assert!(s.max_abs_diff(&expected) < EPS);
        s.apply_atom_hadamard(0).unwrap();
        assert!(s.max_abs_diff(&ket(&l, "a", Polarization::L, &[0, 1])) < EPS);
        assert!(matches!(s.apply_atom_hadamard(2), Err(Error::Wiring(_))));
    }

    #[test]
    fn scatter_ideal_phases() {
        let l = layout(1);
        let a = loc(&l, "a");
        let mut s = ket(&l, "a", Polarization::L, &[0]);
        s.apply_cavity_scatter(a, 0, ReflectionPair::ideal()).unwrap();
        assert!(s.max_abs_diff(&ket(&l, "a", Polarization::L, &[0])) < EPS);

        let mut s = ket(&l, "a", Polarization::L, &[1]);
        s.apply_cavity_scatter(a, 0, ReflectionPair::ideal()).unwrap();
        assert!((s.amplitude(&BasisLabel::new(Polarization::L, a, AtomBits(1))) + ONE).norm() < EPS);
    }

    #[test]
    fn scatter_lossy_superposition() {
        let l = layout(1);
        let a = loc(&l, "a");
        let h = c(FRAC_1_SQRT_2);
        let mut s = HybridState::product(l.clone(), a, [ZERO, ONE], &[[h, h]]).unwrap();
        s.apply_cavity_scatter(a, 0, ReflectionPair::resonant(0.8)).unwrap();
        assert!((s.amplitude(&BasisLabel::new(Polarization::L, a, AtomBits(0))) - c(0.8 * FRAC_1_SQRT_2)).norm() < EPS);
        assert!((s.amplitude(&BasisLabel::new(Polarization::L, a, AtomBits(1))) - c(-FRAC_1_SQRT_2)).norm() < EPS);
        assert!((s.total_norm() - 0.82).abs() < EPS);
    }

    #[test]
    fn scatter_rejects_r_polarization() {
        let l = layout(1);
        let a = loc(&l, "a");
        let mut s = ket(&l, "a", Polarization::R, &[0]);
        let err = s.apply_cavity_scatter(a, 0, ReflectionPair::ideal()).unwrap_err();
        assert!(matches!(err, Error::Routing { ref location, .. } if location == "a"));

        // Sub-tolerance leakage is ignored.
        let mut s = HybridState::new(l.clone());
        s.add(BasisLabel::new(Polarization::R, a, AtomBits(0)), c(1e-14))
            .unwrap();
        s.add(BasisLabel::new(Polarization::L, a, AtomBits(0)), ONE).unwrap();
        assert!(s.apply_cavity_scatter(a, 0, ReflectionPair::ideal()).is_ok());
    }

    #[test]
    fn scatter_with_zero_reflection_absorbs() {
        let l = layout(1);
        let a = loc(&l, "a");
        let mut s = ket(&l, "a", Polarization::L, &[0]);
        assert!((s.total_norm() - 1.0).abs() < EPS);
        s.apply_cavity_scatter(a, 0, ReflectionPair::resonant(0.0)).unwrap();
        assert_eq!(s.total_norm(), 0.0);
        assert!(s.is_empty());
    }

    #[test]
    fn project_location_restricts() {
        let l = layout(1);
        let s = ket(&l, "b", Polarization::L, &[1]);
        assert_eq!(s.project_location(loc(&l, "b")), s);
        assert!(s.project_location(loc(&l, "a")).is_empty());
        assert_eq!(s.project_location(loc(&l, "a")).total_norm(), 0.0);
    }

    #[test]
    fn relabel_moves_without_phase() {
        let l = layout(1);
        let mut s = ket(&l, "a", Polarization::L, &[1]);
        s.relabel(loc(&l, "a"), loc(&l, "e")).unwrap();
        assert_eq!(s.max_abs_diff(&ket(&l, "e", Polarization::L, &[1])), 0.0);
    }

    #[test]
    fn element_validation() {
        let l = layout(1);
        let bad = Element::CavityScatter {
            loc: LocationId(0),
            atom: 3,
        };
        assert!(bad.validate(&l).is_err());
        let bad = Element::Cpbs {
            inputs: [LocationId(0), LocationId(1)],
            outputs: [LocationId(2), LocationId(1)],
        };
        assert!(bad.validate(&l).is_err());
        let ok = Element::Relabel {
            from: LocationId(0),
            to: LocationId(4),
        };
        assert!(ok.validate(&l).is_ok());
    }

    // Random states spread over every location of a 2-atom layout.
    fn random_state() -> impl Strategy<Value = HybridState> {
        proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 5 * 8).prop_map(|amps| {
            let l = layout(2);
            let mut s = HybridState::new(l.clone());
            for (i, (re, im)) in amps.into_iter().enumerate() {
                let (pol, atoms) = gate_basis_label(i % 8, 2);
                s.add(BasisLabel::new(pol, LocationId(i / 8), atoms), Complex64::new(re, im))
                    .unwrap();
            }
            s
        })
    }

    fn random_element() -> impl Strategy<Value = Element> {
        prop_oneof![
            Just(Element::Cpbs {
                inputs: [LocationId(0), LocationId(1)],
                outputs: [LocationId(2), LocationId(3)]
            }),
            Just(Element::Cpbs {
                inputs: [LocationId(2), LocationId(4)],
                outputs: [LocationId(0), LocationId(1)]
            }),
            (0..5usize).prop_map(|i| Element::PhotonHadamard { loc: LocationId(i) }),
            (0..5usize).prop_map(|i| Element::PhotonSigmaX { loc: LocationId(i) }),
            (0..2usize).prop_map(|atom| Element::AtomHadamard { atom }),
            (0..5usize, 0..5usize).prop_map(|(a, b)| Element::Relabel {
                from: LocationId(a),
                to: LocationId(b)
            }),
        ]
    }

    fn unitary_pair() -> impl Strategy<Value = ReflectionPair> {
        (0.0..std::f64::consts::TAU, 0.0..std::f64::consts::TAU)
            .prop_map(|(p, q)| ReflectionPair::new(Complex64::from_polar(1.0, p), Complex64::from_polar(1.0, q)))
    }

    fn l_only(mut s: HybridState, at: LocationId) -> HybridState {
        s.amplitudes.retain(|l, _| !(l.loc == at && l.pol == Polarization::R));
        s
    }

    proptest! {
        #[test]
        fn norm_preserving_elements(s in random_state(), e in random_element()) {
            // A CPBS is unitary on its inputs only when the outputs start empty.
            let mut s = s;
            if let Element::Cpbs { outputs, .. } = e {
                s.amplitudes.retain(|l, _| !outputs.contains(&l.loc));
            }
            let before = s.total_norm();
            let mut t = s.clone();
            e.apply(&mut t, &[]).unwrap();
            // Relabel onto an occupied location merges amplitudes; it is not
            // a unitary on its own, so only the other kinds are checked.
            if !matches!(e, Element::Relabel { .. }) {
                prop_assert!((t.total_norm() - before).abs() < 1e-12 * before.max(1.0));
            }
        }

        #[test]
        fn unit_modulus_scatter_preserves_norm(s in random_state(), at in 0..5usize, atom in 0..2usize, pair in unitary_pair()) {
            let s = l_only(s, LocationId(at));
            let before = s.total_norm();
            let mut t = s.clone();
            t.apply_cavity_scatter(LocationId(at), atom, pair).unwrap();
            prop_assert!((t.total_norm() - before).abs() < 1e-12 * before.max(1.0));
        }

        #[test]
        fn cpbs_is_reversed_by_swapped_wiring(s in random_state()) {
            let (a, b, c, d) = (LocationId(0), LocationId(1), LocationId(2), LocationId(3));
            // Outputs must start empty for the reverse map to be exact.
            let mut s = s;
            s.amplitudes.retain(|l, _| l.loc != c && l.loc != d);
            let mut t = s.clone();
            t.apply_cpbs(a, b, c, d).unwrap();
            t.apply_cpbs(c, d, a, b).unwrap();
            prop_assert!(t.max_abs_diff(&s) < 1e-15);
        }

        #[test]
        fn elements_are_linear(
            s1 in random_state(), s2 in random_state(), e in random_element(),
            w1 in -2.0..2.0f64, w2 in -2.0..2.0f64,
        ) {
            let (w1, w2) = (c(w1), c(w2));
            let mut combo = HybridState::new(s1.layout().clone());
            for (l, a) in s1.iter() { combo.add(*l, w1 * a).unwrap(); }
            for (l, a) in s2.iter() { combo.add(*l, w2 * a).unwrap(); }
            let (mut t1, mut t2) = (s1.clone(), s2.clone());
            e.apply(&mut t1, &[]).unwrap();
            e.apply(&mut t2, &[]).unwrap();
            e.apply(&mut combo, &[]).unwrap();
            let mut expected = HybridState::new(s1.layout().clone());
            for (l, a) in t1.iter() { expected.add(*l, w1 * a).unwrap(); }
            for (l, a) in t2.iter() { expected.add(*l, w2 * a).unwrap(); }
            prop_assert!(combo.max_abs_diff(&expected) < 1e-12);
        }

        #[test]
        fn single_qubit_rotations_are_involutions(s in random_state(), at in 0..5usize, atom in 0..2usize) {
            for e in [
                Element::PhotonHadamard { loc: LocationId(at) },
                Element::PhotonSigmaX { loc: LocationId(at) },
                Element::AtomHadamard { atom },
            ] {
                let mut t = s.clone();
                e.apply(&mut t, &[]).unwrap();
                e.apply(&mut t, &[]).unwrap();
                prop_assert!(t.max_abs_diff(&s) < 1e-12);
            }
        }

        #[test]
        fn disjoint_elements_commute(s in random_state(), i in 0..2usize) {
            // Photon ops at different locations, and a photon op with an atom op.
            let pairs = [
                (Element::PhotonHadamard { loc: LocationId(0) }, Element::PhotonSigmaX { loc: LocationId(3) }),
                (Element::PhotonHadamard { loc: LocationId(2) }, Element::AtomHadamard { atom: 1 }),
            ];
            let (e, f) = &pairs[i];
            let mut ab = s.clone();
            e.apply(&mut ab, &[]).unwrap();
            f.apply(&mut ab, &[]).unwrap();
            let mut ba = s.clone();
            f.apply(&mut ba, &[]).unwrap();
            e.apply(&mut ba, &[]).unwrap();
            prop_assert!(ab.max_abs_diff(&ba) < 1e-12);
        }
    }
}
