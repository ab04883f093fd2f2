//! Parameterised gate circuits: construction, application, adjoints, dense
//! realization, JSON serialization, and a reverse-mode differentiation walk.
//!
//! Rotation gates use the half-angle convention `R_A(theta) = exp(-i theta A / 2)`
//! for `A` in {X, Y, Z}; controlled rotations act when the control qubit is |1>.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{DenseOperator, StateVector, DENSE_MAX_QUBITS};

/// Axis of a single-qubit Pauli operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

/// A single-qubit Pauli observable on one wire of a register.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauliObservable {
    pub axis: PauliAxis,
    pub qubit: usize,
}

impl PauliObservable {
    pub fn new(axis: PauliAxis, qubit: usize) -> Self {
        Self { axis, qubit }
    }

    /// Applies the observable to a state (not unitary-normalizing: P|psi>).
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if self.qubit >= state.num_qubits() {
            return Err(Error::QubitOutOfRange {
                qubit: self.qubit,
                num_qubits: state.num_qubits(),
            });
        }
        let mask = 1usize << self.qubit;
        let amps = state.amplitudes();
        let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
        match self.axis {
            PauliAxis::X => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = amps[i ^ mask];
                }
            }
            PauliAxis::Y => {
                for (i, o) in out.iter_mut().enumerate() {
                    let sign = if i & mask == 0 {
                        Complex64::new(0.0, -1.0)
                    } else {
                        Complex64::new(0.0, 1.0)
                    };
                    *o = sign * amps[i ^ mask];
                }
            }
            PauliAxis::Z => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = if i & mask == 0 { amps[i] } else { -amps[i] };
                }
            }
        }
        StateVector::from_amplitudes(state.num_qubits(), out)
    }
}

/// The gate vocabulary understood by the simulator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Crx,
    Cry,
    Crz,
    /// Multiplies the whole register by `exp(i * theta)`.
    GlobalPhase,
    Cx,
}

impl GateKind {
    /// Whether the gate carries a control wire.
    pub fn is_controlled(self) -> bool {
        matches!(self, GateKind::Crx | GateKind::Cry | GateKind::Crz | GateKind::Cx)
    }

    /// Whether the gate consumes a parameter slot.
    pub fn is_parameterised(self) -> bool {
        !matches!(self, GateKind::Cx)
    }

    fn rotation_axis(self) -> Option<PauliAxis> {
        match self {
            GateKind::Rx | GateKind::Crx => Some(PauliAxis::X),
            GateKind::Ry | GateKind::Cry => Some(PauliAxis::Y),
            GateKind::Rz | GateKind::Crz => Some(PauliAxis::Z),
            GateKind::GlobalPhase | GateKind::Cx => None,
        }
    }
}

/// One gate instance inside a circuit.
///
/// `param_slot` indexes into the parameter vector passed at application time;
/// several gates may share a slot. For [`GateKind::GlobalPhase`] the `target`
/// field is ignored semantically and conventionally set to 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub target: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param_slot: Option<usize>,
}

/// An ordered list of gates on a fixed-width register with a declared
/// parameter count. Gates earlier in the list are applied first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateCircuit {
    num_qubits: usize,
    gates: Vec<Gate>,
    num_params: usize,
}

impl GateCircuit {
    /// An empty circuit (the identity) on `num_qubits` wires.
    pub fn new(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::InvalidArgument(
                "circuit must have at least one qubit".into(),
            ));
        }
        Ok(Self {
            num_qubits,
            gates: Vec::new(),
            num_params: 0,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn num_gates(&self) -> usize {
        self.gates.len()
    }

    fn check_gate(&self, gate: &Gate) -> Result<()> {
        if gate.target >= self.num_qubits {
            return Err(Error::QubitOutOfRange {
                qubit: gate.target,
                num_qubits: self.num_qubits,
            });
        }
        match (gate.kind.is_controlled(), gate.control) {
            (true, Some(c)) => {
                if c >= self.num_qubits {
                    return Err(Error::QubitOutOfRange {
                        qubit: c,
                        num_qubits: self.num_qubits,
                    });
                }
                if c == gate.target {
                    return Err(Error::InvalidGate(format!(
                        "control and target coincide on qubit {c}"
                    )));
                }
            }
            (true, None) => {
                return Err(Error::InvalidGate(format!(
                    "{:?} gate requires a control qubit",
                    gate.kind
                )));
            }
            (false, Some(_)) => {
                return Err(Error::InvalidGate(format!(
                    "{:?} gate must not carry a control qubit",
                    gate.kind
                )));
            }
            (false, None) => {}
        }
        match (gate.kind.is_parameterised(), gate.param_slot) {
            (true, None) => {
                return Err(Error::InvalidGate(format!(
                    "{:?} gate requires a parameter slot",
                    gate.kind
                )));
            }
            (false, Some(_)) => {
                return Err(Error::InvalidGate(
                    "cx gate must not carry a parameter slot".into(),
                ));
            }
            _ => {}
        }
        Ok(())
    }

    /// Appends a gate with an explicit (possibly shared) parameter slot.
    /// The declared parameter count grows to cover the slot if needed.
    pub fn push_gate(&mut self, gate: Gate) -> Result<()> {
        self.check_gate(&gate)?;
        if let Some(slot) = gate.param_slot {
            self.num_params = self.num_params.max(slot + 1);
        }
        self.gates.push(gate);
        Ok(())
    }

    /// Appends an uncontrolled rotation on `target` with a fresh parameter
    /// slot; returns the slot index.
    pub fn push_rotation(&mut self, kind: GateKind, target: usize) -> Result<usize> {
        if !matches!(kind, GateKind::Rx | GateKind::Ry | GateKind::Rz) {
            return Err(Error::InvalidGate(format!(
                "{kind:?} is not an uncontrolled rotation"
            )));
        }
        let slot = self.num_params;
        self.push_gate(Gate {
            kind,
            target,
            control: None,
            param_slot: Some(slot),
        })?;
        Ok(slot)
    }

    /// Appends a controlled rotation with a fresh parameter slot; returns the slot.
    pub fn push_controlled_rotation(
        &mut self,
        kind: GateKind,
        control: usize,
        target: usize,
    ) -> Result<usize> {
        if !matches!(kind, GateKind::Crx | GateKind::Cry | GateKind::Crz) {
            return Err(Error::InvalidGate(format!(
                "{kind:?} is not a controlled rotation"
            )));
        }
        let slot = self.num_params;
        self.push_gate(Gate {
            kind,
            target,
            control: Some(control),
            param_slot: Some(slot),
        })?;
        Ok(slot)
    }

    /// Appends a global-phase gate with a fresh parameter slot; returns the slot.
    pub fn push_global_phase(&mut self) -> Result<usize> {
        let slot = self.num_params;
        self.push_gate(Gate {
            kind: GateKind::GlobalPhase,
            target: 0,
            control: None,
            param_slot: Some(slot),
        })?;
        Ok(slot)
    }

    /// Appends a CX gate (no parameter).
    pub fn push_cx(&mut self, control: usize, target: usize) -> Result<()> {
        self.push_gate(Gate {
            kind: GateKind::Cx,
            target,
            control: Some(control),
            param_slot: None,
        })
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.num_params {
            return Err(Error::ParamCountMismatch {
                got: params.len(),
                expected: self.num_params,
            });
        }
        Ok(())
    }

    fn check_state(&self, state: &StateVector) -> Result<()> {
        if state.num_qubits() != self.num_qubits {
            return Err(Error::DimensionMismatch {
                context: "circuit application",
                left: state.num_qubits(),
                right: self.num_qubits,
            });
        }
        Ok(())
    }

    fn gate_theta(gate: &Gate, params: &[f64]) -> f64 {
        match gate.param_slot {
            Some(slot) => params[slot],
            None => 0.0,
        }
    }

    /// Applies the circuit to a state, producing `U(params) |state>`.
    pub fn apply(&self, params: &[f64], state: &StateVector) -> Result<StateVector> {
        self.check_params(params)?;
        self.check_state(state)?;
        let mut out = state.clone();
        for gate in &self.gates {
            apply_gate_in_place(
                out.amplitudes_mut(),
                gate,
                Self::gate_theta(gate, params),
                false,
            );
        }
        Ok(out)
    }

    /// Applies the inverse circuit, `U(params)^dagger |state>`.
    pub fn apply_adjoint(&self, params: &[f64], state: &StateVector) -> Result<StateVector> {
        self.check_params(params)?;
        self.check_state(state)?;
        let mut out = state.clone();
        for gate in self.gates.iter().rev() {
            apply_gate_in_place(
                out.amplitudes_mut(),
                gate,
                Self::gate_theta(gate, params),
                true,
            );
        }
        Ok(out)
    }

    /// Dense unitary realization, assembled column by column.
    ///
    /// Limited to [`DENSE_MAX_QUBITS`] wires; cost is `O(gates * 4^q)`.
    pub fn dense_matrix(&self, params: &[f64]) -> Result<DenseOperator> {
        if self.num_qubits > DENSE_MAX_QUBITS {
            return Err(Error::DenseTooLarge {
                qubits: self.num_qubits,
                max_qubits: DENSE_MAX_QUBITS,
            });
        }
        self.check_params(params)?;
        let dim = 1usize << self.num_qubits;
        let mut out = DenseOperator::zeros(dim)?;
        for col in 0..dim {
            let basis = StateVector::basis_state(self.num_qubits, col)?;
            let image = self.apply(params, &basis)?;
            for (row, amp) in image.amplitudes().iter().enumerate() {
                out.set(row, col, *amp);
            }
        }
        Ok(out)
    }

    /// Reverse-mode differentiation walk.
    ///
    /// Input contract: `output_state` is `U(params) |input>`, and
    /// `output_adjoint` holds `dL/d(output)^*` in the convention
    /// `dL = 2 Re <adjoint, d(output)>`. The walk rewinds both vectors gate
    /// by gate, accumulating `dL/d(theta_slot)` into `param_grads` (`+=`, so
    /// shared slots sum), and returns the adjoint of the circuit input.
    pub fn backprop(
        &self,
        params: &[f64],
        output_state: &StateVector,
        output_adjoint: &StateVector,
        param_grads: &mut [f64],
    ) -> Result<StateVector> {
        self.check_params(params)?;
        self.check_state(output_state)?;
        self.check_state(output_adjoint)?;
        if param_grads.len() != self.num_params {
            return Err(Error::ParamCountMismatch {
                got: param_grads.len(),
                expected: self.num_params,
            });
        }
        let mut s = output_state.clone();
        let mut g = output_adjoint.clone();
        for gate in self.gates.iter().rev() {
            let theta = Self::gate_theta(gate, params);
            if let Some(slot) = gate.param_slot {
                param_grads[slot] += gate_parameter_derivative(&s, &g, gate);
            }
            // Rewind both the state and the adjoint through the inverse gate.
            apply_gate_in_place(s.amplitudes_mut(), gate, theta, true);
            apply_gate_in_place(g.amplitudes_mut(), gate, theta, true);
        }
        Ok(g)
    }

    /// Serializes the circuit to a JSON string.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Parses a circuit from JSON and re-validates every gate.
    pub fn from_json(text: &str) -> Result<Self> {
        let parsed: Self = serde_json::from_str(text)?;
        if parsed.num_qubits == 0 {
            return Err(Error::InvalidArgument(
                "circuit must have at least one qubit".into(),
            ));
        }
        for gate in &parsed.gates {
            parsed.check_gate(gate)?;
            if let Some(slot) = gate.param_slot {
                if slot >= parsed.num_params {
                    return Err(Error::InvalidGate(format!(
                        "parameter slot {slot} outside declared count {}",
                        parsed.num_params
                    )));
                }
            }
        }
        Ok(parsed)
    }
}

/// 2x2 rotation block for the given axis, half-angle convention.
fn rotation_block(axis: PauliAxis, theta: f64) -> [Complex64; 4] {
    let (s, c) = (0.5 * theta).sin_cos();
    match axis {
        PauliAxis::X => [
            Complex64::new(c, 0.0),
            Complex64::new(0.0, -s),
            Complex64::new(0.0, -s),
            Complex64::new(c, 0.0),
        ],
        PauliAxis::Y => [
            Complex64::new(c, 0.0),
            Complex64::new(-s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(c, 0.0),
        ],
        PauliAxis::Z => [
            Complex64::new(c, -s),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(c, s),
        ],
    }
}

/// Applies one gate in place; `adjoint` applies the inverse gate.
fn apply_gate_in_place(amps: &mut [Complex64], gate: &Gate, theta: f64, adjoint: bool) {
    let theta = if adjoint { -theta } else { theta };
    match gate.kind {
        GateKind::GlobalPhase => {
            let phase = Complex64::from_polar(1.0, theta);
            for a in amps.iter_mut() {
                *a *= phase;
            }
        }
        GateKind::Cx => {
            let cmask = 1usize << gate.control.expect("validated control");
            let tmask = 1usize << gate.target;
            for i in 0..amps.len() {
                if i & cmask != 0 && i & tmask == 0 {
                    amps.swap(i, i | tmask);
                }
            }
        }
        _ => {
            let axis = gate.kind.rotation_axis().expect("rotation kind");
            let m = rotation_block(axis, theta);
            let tmask = 1usize << gate.target;
            let cmask = gate.control.map(|c| 1usize << c).unwrap_or(0);
            for i0 in 0..amps.len() {
                if i0 & tmask != 0 || i0 & cmask != cmask {
                    continue;
                }
                let i1 = i0 | tmask;
                let a0 = amps[i0];
                let a1 = amps[i1];
                amps[i0] = m[0] * a0 + m[1] * a1;
                amps[i1] = m[2] * a0 + m[3] * a1;
            }
        }
    }
}

/// `dL/dtheta` of one parameterised gate, given the gate's output state `s`
/// and the output adjoint `g` (convention `dL = 2 Re <g, d out>`).
///
/// For `R_A(theta) = exp(-i theta A / 2)` the generator gives
/// `dL/dtheta = Im <g, Pi_c A_t s>`, where `Pi_c` projects onto the control-1
/// subspace (identity when uncontrolled). A global phase `exp(i theta)`
/// yields `dL/dtheta = -2 Im <g, s>`.
fn gate_parameter_derivative(s: &StateVector, g: &StateVector, gate: &Gate) -> f64 {
    let samps = s.amplitudes();
    let gamps = g.amplitudes();
    match gate.kind {
        GateKind::GlobalPhase => {
            let mut z = Complex64::new(0.0, 0.0);
            for (gi, si) in gamps.iter().zip(samps.iter()) {
                z += gi.conj() * si;
            }
            -2.0 * z.im
        }
        GateKind::Cx => 0.0,
        _ => {
            let axis = gate.kind.rotation_axis().expect("rotation kind");
            let tmask = 1usize << gate.target;
            let cmask = gate.control.map(|c| 1usize << c).unwrap_or(0);
            let mut z = Complex64::new(0.0, 0.0);
            for (i, gi) in gamps.iter().enumerate() {
                if i & cmask != cmask {
                    continue;
                }
                let paired = match axis {
                    PauliAxis::X => samps[i ^ tmask],
                    PauliAxis::Y => {
                        let sign = if i & tmask == 0 {
                            Complex64::new(0.0, -1.0)
                        } else {
                            Complex64::new(0.0, 1.0)
                        };
                        sign * samps[i ^ tmask]
                    }
                    PauliAxis::Z => {
                        if i & tmask == 0 {
                            samps[i]
                        } else {
                            -samps[i]
                        }
                    }
                };
                z += gi.conj() * paired;
            }
            z.im
        }
    }
}

/// Builds the hardware-efficient ring ansatz used for token and feed-forward
/// unitaries: per layer, a ring of RY rotations, a ring of CRX gates with
/// control `j` targeting `j-1` (cyclically), a second RY ring, and a ring of
/// CRX gates with control `j` targeting `j+1`.
///
/// Uses `4 * layers * num_qubits` parameters, one fresh slot per gate, in
/// application order.
pub fn circuit14(num_qubits: usize, layers: usize) -> Result<GateCircuit> {
    if num_qubits < 2 {
        return Err(Error::InvalidArgument(
            "ring ansatz requires at least two qubits".into(),
        ));
    }
    if layers == 0 {
        return Err(Error::InvalidArgument(
            "ring ansatz requires at least one layer".into(),
        ));
    }
    let q = num_qubits;
    let mut circuit = GateCircuit::new(q)?;
    for _ in 0..layers {
        for k in 0..q {
            circuit.push_rotation(GateKind::Ry, k)?;
        }
        for k in 0..q {
            circuit.push_controlled_rotation(GateKind::Crx, k, (k + q - 1) % q)?;
        }
        for k in 0..q {
            circuit.push_rotation(GateKind::Ry, k)?;
        }
        for k in 0..q {
            circuit.push_controlled_rotation(GateKind::Crx, k, (k + 1) % q)?;
        }
    }
    Ok(circuit)
}
