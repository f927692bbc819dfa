//! Gate circuits as ordered element lists over a registered set of paths
//! and ports.
//!
//! A [`CircuitSpec`] is pure topology. The reflection amplitudes of the
//! cavity nodes are bound separately (one [`ReflectionPair`] per atom, since
//! each atom sits in its own cavity), which keeps the text format free of
//! numbers and lets one spec be evaluated at many coupling strengths.

pub mod text;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cavity::ReflectionPair;
use crate::state::{gate_basis_label, Element, HybridState, Layout, LocationId};
use crate::{Error, Result};

/// Allowed deviation of the input norm from one.
pub const INPUT_NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LocationKind {
    Path,
    Input,
    Output,
    Discard,
}

impl LocationKind {
    pub fn keyword(self) -> &'static str {
        match self {
            LocationKind::Path => "path",
            LocationKind::Input => "in",
            LocationKind::Output => "out",
            LocationKind::Discard => "discard",
        }
    }
}

impl fmt::Display for LocationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    /// Number of elements applied before the snapshot is taken.
    pub position: usize,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    Cnot,
    Toffoli,
}

impl GateKind {
    pub fn atom_count(self) -> usize {
        match self {
            GateKind::Cnot => 1,
            GateKind::Toffoli => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSpec {
    layout: Arc<Layout>,
    kinds: Vec<LocationKind>,
    elements: Vec<Element>,
    checkpoints: Vec<Checkpoint>,
    input: LocationId,
    output: LocationId,
    discard: Option<LocationId>,
}

impl CircuitSpec {
    /// Validates and assembles a spec. `locations` is in declaration order.
    pub fn new(
        locations: Vec<(String, LocationKind)>,
        atom_count: usize,
        elements: Vec<Element>,
        checkpoints: Vec<Checkpoint>,
    ) -> Result<Self> {
        let layout = Layout::new(locations.iter().map(|(n, _)| n.clone()), atom_count)?;
        let kinds: Vec<LocationKind> = locations.iter().map(|(_, k)| *k).collect();
        let find = |kind: LocationKind| -> Vec<LocationId> {
            kinds
                .iter()
                .enumerate()
                .filter(|(_, k)| **k == kind)
                .map(|(i, _)| LocationId(i))
                .collect()
        };
        let single = |kind: LocationKind, required: bool| -> Result<Option<LocationId>> {
            let found = find(kind);
            match found.len() {
                0 if required => Err(Error::Wiring(format!("missing '{kind}' port"))),
                0 => Ok(None),
                1 => Ok(Some(found[0])),
                _ => Err(Error::Wiring(format!("more than one '{kind}' port"))),
            }
        };
        let input = single(LocationKind::Input, true)?.expect("required");
        let output = single(LocationKind::Output, true)?.expect("required");
        let discard = single(LocationKind::Discard, false)?;
        for element in &elements {
            element.validate(&layout)?;
        }
        for (i, cp) in checkpoints.iter().enumerate() {
            if cp.position > elements.len() {
                return Err(Error::Wiring(format!(
                    "checkpoint '{}' at position {} is past the last element",
                    cp.label, cp.position
                )));
            }
            if checkpoints[..i].iter().any(|c| c.label == cp.label) {
                return Err(Error::Wiring(format!("duplicate checkpoint '{}'", cp.label)));
            }
            if i > 0 && checkpoints[i - 1].position > cp.position {
                return Err(Error::Wiring("checkpoints must be in sequence order".into()));
            }
        }
        Ok(CircuitSpec {
            layout: Arc::new(layout),
            kinds,
            elements,
            checkpoints,
            input,
            output,
            discard,
        })
    }

    pub fn layout(&self) -> &Arc<Layout> {
        &self.layout
    }

    pub fn atom_count(&self) -> usize {
        self.layout.atom_count()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn checkpoints(&self) -> &[Checkpoint] {
        &self.checkpoints
    }

    pub fn location_kinds(&self) -> &[LocationKind] {
        &self.kinds
    }

    pub fn input_port(&self) -> LocationId {
        self.input
    }

    pub fn output_port(&self) -> LocationId {
        self.output
    }

    pub fn discard_port(&self) -> Option<LocationId> {
        self.discard
    }

    pub fn location(&self, name: &str) -> Option<LocationId> {
        self.layout.location(name)
    }

    /// Number of cavity nodes, i.e. atoms referenced by a scatter element.
    pub fn node_atoms(&self) -> Vec<usize> {
        let mut atoms: Vec<usize> = self
            .elements
            .iter()
            .filter_map(|e| match e {
                Element::CavityScatter { atom, .. } => Some(*atom),
                _ => None,
            })
            .collect();
        atoms.sort_unstable();
        atoms.dedup();
        atoms
    }

    /// Product input state at the input port.
    pub fn product_input(&self, photon: [Complex64; 2], atoms: &[[Complex64; 2]]) -> Result<HybridState> {
        HybridState::product(self.layout.clone(), self.input, photon, atoms)
    }

    /// Dense gate-basis vector placed at the input port.
    pub fn vector_input(&self, vector: &[Complex64]) -> Result<HybridState> {
        HybridState::from_gate_vector(self.layout.clone(), self.input, vector)
    }

    pub fn bind(self, nodes: Vec<ReflectionPair>) -> BoundCircuit {
        BoundCircuit { spec: self, nodes }
    }
}

/// Result of pushing one input through a circuit.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub out_state: HybridState,
    pub discard_state: HybridState,
    /// Amplitude left on internal paths. Empty for well-formed circuits.
    pub stray_state: HybridState,
    /// `1 - total surviving norm`.
    pub absorbed: f64,
    pub checkpoint_states: Vec<(String, HybridState)>,
}

impl RunOutput {
    pub fn checkpoint(&self, label: &str) -> Option<&HybridState> {
        self.checkpoint_states.iter().find(|(l, _)| l == label).map(|(_, s)| s)
    }

    /// Norm that left through either port.
    pub fn surviving_norm(&self) -> f64 {
        self.out_state.total_norm() + self.discard_state.total_norm() + self.stray_state.total_norm()
    }
}

/// Runs `spec` on `input`, binding `nodes[i]` to the cavity holding atom `i`.
pub fn run(spec: &CircuitSpec, nodes: &[ReflectionPair], input: &HybridState) -> Result<RunOutput> {
    if input.layout() != spec.layout() {
        return Err(Error::Parameter("input state was built for a different layout".into()));
    }
    if let Some((label, _)) = input.iter().find(|(l, a)| l.loc != spec.input && a.norm_sqr() > 0.0) {
        return Err(Error::Parameter(format!(
            "input amplitude at '{}' instead of the input port",
            spec.layout.name(label.loc)
        )));
    }
    let norm = input.total_norm();
    if (norm - 1.0).abs() > INPUT_NORM_TOLERANCE {
        return Err(Error::Parameter(format!("input state has norm {norm}, expected 1")));
    }

    let mut state = input.clone();
    let mut snapshots = Vec::with_capacity(spec.checkpoints.len());
    let mut pending = spec.checkpoints.iter().peekable();
    for (step, element) in spec.elements.iter().enumerate() {
        while let Some(cp) = pending.next_if(|cp| cp.position == step) {
            snapshots.push((cp.label.clone(), state.clone()));
        }
        element.apply(&mut state, nodes)?;
    }
    for cp in pending {
        snapshots.push((cp.label.clone(), state.clone()));
    }

    let out_state = state.project_location(spec.output);
    let discard_state = match spec.discard {
        Some(loc) => state.project_location(loc),
        None => HybridState::new(spec.layout.clone()),
    };
    let mut stray_state = HybridState::new(spec.layout.clone());
    for (label, amp) in state.iter() {
        if label.loc != spec.output && Some(label.loc) != spec.discard {
            stray_state.add(*label, *amp)?;
        }
    }
    Ok(RunOutput {
        absorbed: 1.0 - state.total_norm(),
        out_state,
        discard_state,
        stray_state,
        checkpoint_states: snapshots,
    })
}

/// A spec together with the reflection amplitudes of its nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCircuit {
    pub spec: CircuitSpec,
    pub nodes: Vec<ReflectionPair>,
}

impl BoundCircuit {
    pub fn run(&self, input: &HybridState) -> Result<RunOutput> {
        run(&self.spec, &self.nodes, input)
    }

    /// Linear map from the input port to the out port in the gate basis,
    /// built column by column from basis-state runs.
    pub fn induced_matrix(&self) -> Result<DMatrix<Complex64>> {
        Ok(self.port_matrices()?.0)
    }

    /// Linear maps from the input port to the out port and to the discard
    /// port, in the gate basis. The discard map is zero without a discard
    /// port.
    pub fn port_matrices(&self) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
        let dim = self.spec.layout.gate_dimension();
        let mut out = DMatrix::zeros(dim, dim);
        let mut discard = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let mut basis = vec![Complex64::default(); dim];
            basis[col] = Complex64::new(1.0, 0.0);
            let output = self.run(&self.spec.vector_input(&basis)?)?;
            if !output.stray_state.is_empty() {
                return Err(Error::Wiring("amplitude left on an internal path".into()));
            }
            for (row, amp) in output.out_state.gate_vector(self.spec.output).into_iter().enumerate() {
                out[(row, col)] = amp;
            }
            if let Some(loc) = self.spec.discard {
                for (row, amp) in output.discard_state.gate_vector(loc).into_iter().enumerate() {
                    discard[(row, col)] = amp;
                }
            }
        }
        Ok((out, discard))
    }
}

/// Collects locations and elements by name, resolving them on `build`.
#[derive(Debug, Default)]
struct Builder {
    locations: Vec<(String, LocationKind)>,
    steps: Vec<Step>,
    checkpoints: Vec<(usize, String)>,
}

#[derive(Debug)]
enum Step {
    Cpbs([&'static str; 4]),
    Hwp(&'static str),
    SigmaX(&'static str),
    AtomH(usize),
    Cavity(&'static str, usize),
    Mirror(&'static str, &'static str),
}

impl Builder {
    fn location(mut self, kind: LocationKind, name: &str) -> Self {
        self.locations.push((name.to_string(), kind));
        self
    }

    fn step(mut self, step: Step) -> Self {
        self.steps.push(step);
        self
    }

    fn checkpoint(mut self, label: &str) -> Self {
        self.checkpoints.push((self.steps.len(), label.to_string()));
        self
    }

    fn build(self, atom_count: usize) -> CircuitSpec {
        let names: Vec<String> = self.locations.iter().map(|(n, _)| n.clone()).collect();
        let id = |name: &str| LocationId(names.iter().position(|n| n == name).expect("builder location"));
        let elements = self
            .steps
            .iter()
            .map(|step| match *step {
                Step::Cpbs([a, b, c, d]) => Element::Cpbs {
                    inputs: [id(a), id(b)],
                    outputs: [id(c), id(d)],
                },
                Step::Hwp(p) => Element::PhotonHadamard { loc: id(p) },
                Step::SigmaX(p) => Element::PhotonSigmaX { loc: id(p) },
                Step::AtomH(atom) => Element::AtomHadamard { atom },
                Step::Cavity(p, atom) => Element::CavityScatter { loc: id(p), atom },
                Step::Mirror(from, to) => Element::Relabel {
                    from: id(from),
                    to: id(to),
                },
            })
            .collect();
        let checkpoints = self
            .checkpoints
            .into_iter()
            .map(|(position, label)| Checkpoint { position, label })
            .collect();
        CircuitSpec::new(self.locations, atom_count, elements, checkpoints).expect("builder circuit is valid")
    }
}

/// Checkpoint labels of the CNOT circuit, in order.
pub const CNOT_CHECKPOINTS: [&str; 4] = ["psi1", "psi2", "psi3", "psi4"];
/// Checkpoint labels of the Toffoli circuit, in order.
pub const TOFFOLI_CHECKPOINTS: [&str; 4] = ["phi1", "phi2", "phi3", "phi_f"];

/// Photon-atom CNOT topology. The photon polarization controls, the atom
/// in the cavity is the target.
///
/// CPBS1 sends R to `p1` and L to `p2`; the atom is rotated, the L arm
/// reflects off the cavity and is delayed onto `p3`; after a second atom
/// rotation CPBS2 merges `p1` (R) and `p3` (L) into the out port.
pub fn cnot_spec() -> CircuitSpec {
    use LocationKind::*;
    Builder::default()
        .location(Input, "in")
        .location(Output, "out")
        .location(Discard, "discard")
        .location(Path, "p1")
        .location(Path, "p2")
        .location(Path, "p3")
        .location(Path, "vac")
        .step(Step::Cpbs(["in", "vac", "p1", "p2"]))
        .checkpoint("psi1")
        .step(Step::AtomH(0))
        .checkpoint("psi2")
        .step(Step::Cavity("p2", 0))
        .step(Step::Mirror("p2", "p3"))
        .checkpoint("psi3")
        .step(Step::AtomH(0))
        .step(Step::Cpbs(["p1", "p3", "out", "discard"]))
        .checkpoint("psi4")
        .build(1)
}

/// Photon-atom-atom Toffoli topology. Controls are the photon polarization
/// and the atom of cavity 1 (atom 0); the target is the atom of cavity 2
/// (atom 1).
///
/// Each cavity visit is a CPBS pair around the node: the first CPBS sends R
/// to a mirror arm `m*` and L to a cavity arm `c*`, the second recombines
/// both arms onto the next numbered path. The last CPBS takes R from `p2`
/// and L from `p5` to the out port; R left on `p5` goes to the discard port.
pub fn toffoli_spec() -> CircuitSpec {
    use LocationKind::*;
    Builder::default()
        .location(Input, "in")
        .location(Output, "out")
        .location(Discard, "discard")
        .location(Path, "p1")
        .location(Path, "p2")
        .location(Path, "p3")
        .location(Path, "p4")
        .location(Path, "p5")
        .location(Path, "m1")
        .location(Path, "c1")
        .location(Path, "m2")
        .location(Path, "c2")
        .location(Path, "m3")
        .location(Path, "c3")
        .location(Path, "vac")
        .step(Step::Cpbs(["in", "vac", "p2", "p1"]))
        .checkpoint("phi1")
        // first pass through cavity 1
        .step(Step::Hwp("p1"))
        .step(Step::Cpbs(["p1", "vac", "m1", "c1"]))
        .step(Step::Cavity("c1", 0))
        .step(Step::Cpbs(["m1", "c1", "p3", "vac"]))
        .step(Step::Hwp("p3"))
        .step(Step::SigmaX("p3"))
        .checkpoint("phi2")
        // CNOT on the target through cavity 2
        .step(Step::AtomH(1))
        .step(Step::Cpbs(["p3", "vac", "m2", "c2"]))
        .step(Step::Cavity("c2", 1))
        .step(Step::Cpbs(["m2", "c2", "p4", "vac"]))
        .step(Step::AtomH(1))
        .checkpoint("phi3")
        // second pass through cavity 1 undoes the first
        .step(Step::SigmaX("p4"))
        .step(Step::Hwp("p4"))
        .step(Step::Cpbs(["p4", "vac", "m3", "c3"]))
        .step(Step::Cavity("c3", 0))
        .step(Step::Cpbs(["m3", "c3", "p5", "vac"]))
        .step(Step::Hwp("p5"))
        .step(Step::Cpbs(["p2", "p5", "out", "discard"]))
        .checkpoint("phi_f")
        .build(2)
}

pub fn build_cnot(r_coupled: Complex64, r_empty: Complex64) -> BoundCircuit {
    cnot_spec().bind(vec![ReflectionPair::new(r_coupled, r_empty)])
}

pub fn build_toffoli(
    r1_coupled: Complex64,
    r1_empty: Complex64,
    r2_coupled: Complex64,
    r2_empty: Complex64,
) -> BoundCircuit {
    toffoli_spec().bind(vec![
        ReflectionPair::new(r1_coupled, r1_empty),
        ReflectionPair::new(r2_coupled, r2_empty),
    ])
}

/// Gate circuit with every node at the resonant pair `(r, -1)`.
pub fn build_resonant(kind: GateKind, r: Complex64) -> BoundCircuit {
    let minus_one = Complex64::new(-1.0, 0.0);
    match kind {
        GateKind::Cnot => build_cnot(r, minus_one),
        GateKind::Toffoli => build_toffoli(r, minus_one, r, minus_one),
    }
}

/// Controlled-X (CNOT) or doubly controlled-X (Toffoli) in the gate basis.
/// The photon's L polarization and atom 0 in `|1>` are the controls; the
/// last atom is the target.
pub fn ideal_gate_matrix(kind: GateKind) -> DMatrix<Complex64> {
    let n = kind.atom_count();
    let dim = 2 << n;
    let mut matrix = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let (pol, atoms) = gate_basis_label(col, n);
        let controls_on = pol == crate::state::Polarization::L && (0..n - 1).all(|i| atoms.bit(i) == 1);
        let row = if controls_on { col ^ 1 } else { col };
        matrix[(row, col)] = Complex64::new(1.0, 0.0);
    }
    matrix
}
