//! Dense statevector simulation over the gate set `{H, Ry, CRy}`, the
//! layered ansatz, amplitude encoding, overlap estimation and exact
//! circuit derivatives.
//!
//! All three gates are real orthogonal matrices, so a circuit applied to
//! a real starting vector with real parameters keeps every amplitude
//! real; this is the property that lets the evolved state encode a price
//! vector directly. Qubit `k` addresses bit `k` of the basis index
//! (qubit 0 is the least significant bit), so basis state `|i⟩` is grid
//! slot `i`.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Complex amplitude vector of a `q`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// Basis state `|0…0⟩`.
    pub fn zero(qubits: usize) -> Self {
        let mut amps = vec![Complex64::default(); 1 << qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { qubits, amps }
    }

    /// Wrap raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::DimensionMismatch(format!(
                "amplitude count {} is not a power of two",
                amps.len()
            )));
        }
        Ok(Self {
            qubits: amps.len().trailing_zeros() as usize,
            amps,
        })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    /// Real parts of the amplitudes.
    pub fn real_parts(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.re).collect()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest imaginary magnitude over the amplitudes.
    pub fn max_imag(&self) -> f64 {
        self.amps.iter().map(|a| a.im.abs()).fold(0.0, f64::max)
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        let amps = self.amps.iter().map(|a| a / n).collect();
        Ok(Self {
            qubits: self.qubits,
            amps,
        })
    }

    /// Inner product `⟨self|other⟩`.
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        if self.qubits != other.qubits {
            return Err(Error::DimensionMismatch(format!(
                "states on {} and {} qubits",
                self.qubits, other.qubits
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// Amplitude-encode a real vector: normalize and zero-pad to `2^qubits`.
pub fn encode_state(values: &[f64], qubits: usize) -> Result<Statevector> {
    let dim = 1usize << qubits;
    if values.len() > dim {
        return Err(Error::DimensionMismatch(format!(
            "{} values do not fit in {} qubits",
            values.len(),
            qubits
        )));
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut amps = vec![Complex64::default(); dim];
    for (a, v) in amps.iter_mut().zip(values) {
        *a = Complex64::new(v / norm, 0.0);
    }
    Ok(Statevector { qubits, amps })
}

/// Exact overlap probability `|⟨a|b⟩|²`.
pub fn overlap(a: &Statevector, b: &Statevector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// Shot-sampled overlap: the fraction of `shots` Bernoulli draws at the
/// exact probability, the estimate produced by repeatedly measuring the
/// all-zeros outcome.
pub fn overlap_sampled(
    a: &Statevector,
    b: &Statevector,
    shots: u64,
    rng: &mut impl Rng,
) -> Result<f64> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let p = overlap(a, b)?;
    let mut hits = 0u64;
    for _ in 0..shots {
        if rng.gen::<f64>() < p {
            hits += 1;
        }
    }
    Ok(hits as f64 / shots as f64)
}

/// Gate in the restricted set. `slot` indexes the parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    H { target: usize },
    Ry { target: usize, slot: usize },
    CRy { control: usize, target: usize, slot: usize },
}

/// Ordered gate list over a fixed register with `params` parameter slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    qubits: usize,
    gates: Vec<Gate>,
    params: usize,
}

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn ry_matrix(theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    [[c, -s], [s, c]]
}

/// d/dθ of [`ry_matrix`].
fn ry_matrix_deriv(theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    [[-0.5 * s, -0.5 * c], [0.5 * c, -0.5 * s]]
}

fn apply_single(amps: &mut [Complex64], target: usize, m: &[[f64; 2]; 2]) {
    let bit = 1usize << target;
    for i in 0..amps.len() {
        if i & bit == 0 {
            let j = i | bit;
            let a0 = amps[i];
            let a1 = amps[j];
            amps[i] = a0 * m[0][0] + a1 * m[0][1];
            amps[j] = a0 * m[1][0] + a1 * m[1][1];
        }
    }
}

fn apply_controlled(amps: &mut [Complex64], control: usize, target: usize, m: &[[f64; 2]; 2]) {
    let cbit = 1usize << control;
    let tbit = 1usize << target;
    for i in 0..amps.len() {
        if i & cbit != 0 && i & tbit == 0 {
            let j = i | tbit;
            let a0 = amps[i];
            let a1 = amps[j];
            amps[i] = a0 * m[0][0] + a1 * m[0][1];
            amps[j] = a0 * m[1][0] + a1 * m[1][1];
        }
    }
}

/// Zero the control-0 subspace and apply `m` on the control-1 subspace;
/// the action of differentiating a controlled rotation in place.
fn apply_controlled_deriv(amps: &mut [Complex64], control: usize, target: usize, m: &[[f64; 2]; 2]) {
    let cbit = 1usize << control;
    let tbit = 1usize << target;
    for i in 0..amps.len() {
        if i & cbit == 0 {
            amps[i] = Complex64::default();
        } else if i & tbit == 0 {
            let j = i | tbit;
            let a0 = amps[i];
            let a1 = amps[j];
            amps[i] = a0 * m[0][0] + a1 * m[0][1];
            amps[j] = a0 * m[1][0] + a1 * m[1][1];
        }
    }
}

impl Circuit {
    pub fn new(qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut params = 0usize;
        for g in &gates {
            match *g {
                Gate::H { target } => {
                    if target >= qubits {
                        return Err(Error::DimensionMismatch(format!(
                            "gate target {target} outside {qubits}-qubit register"
                        )));
                    }
                }
                Gate::Ry { target, slot } => {
                    if target >= qubits {
                        return Err(Error::DimensionMismatch(format!(
                            "gate target {target} outside {qubits}-qubit register"
                        )));
                    }
                    params = params.max(slot + 1);
                }
                Gate::CRy {
                    control,
                    target,
                    slot,
                } => {
                    if control >= qubits || target >= qubits || control == target {
                        return Err(Error::DimensionMismatch(format!(
                            "controlled gate ({control},{target}) invalid on {qubits} qubits"
                        )));
                    }
                    params = params.max(slot + 1);
                }
            }
        }
        Ok(Self {
            qubits,
            gates,
            params,
        })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Number of parameter slots `p`.
    pub fn params(&self) -> usize {
        self.params
    }

    fn check_params(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.params {
            return Err(Error::ParameterCount {
                got: theta.len(),
                expected: self.params,
            });
        }
        Ok(())
    }

    /// Apply the circuit to an input state.
    pub fn apply_to(&self, theta: &[f64], input: &Statevector) -> Result<Statevector> {
        self.check_params(theta)?;
        if input.qubits() != self.qubits {
            return Err(Error::DimensionMismatch(format!(
                "input on {} qubits, circuit on {}",
                input.qubits(),
                self.qubits
            )));
        }
        let mut out = input.clone();
        for g in &self.gates {
            self.apply_gate(g, theta, out.amplitudes_mut());
        }
        Ok(out)
    }

    /// Apply the circuit to `|0…0⟩`.
    pub fn apply(&self, theta: &[f64]) -> Result<Statevector> {
        self.apply_to(theta, &Statevector::zero(self.qubits))
    }

    fn apply_gate(&self, g: &Gate, theta: &[f64], amps: &mut [Complex64]) {
        match *g {
            Gate::H { target } => {
                let h = [
                    [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
                    [FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
                ];
                apply_single(amps, target, &h);
            }
            Gate::Ry { target, slot } => {
                apply_single(amps, target, &ry_matrix(theta[slot]));
            }
            Gate::CRy {
                control,
                target,
                slot,
            } => {
                apply_controlled(amps, control, target, &ry_matrix(theta[slot]));
            }
        }
    }

    /// Apply the transposed (= inverse, all gates are orthogonal) circuit.
    pub fn apply_transpose_to(&self, theta: &[f64], input: &Statevector) -> Result<Statevector> {
        self.check_params(theta)?;
        let mut out = input.clone();
        for g in self.gates.iter().rev() {
            match *g {
                Gate::H { target } => {
                    let h = [
                        [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
                        [FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
                    ];
                    apply_single(out.amplitudes_mut(), target, &h);
                }
                Gate::Ry { target, slot } => {
                    apply_single(out.amplitudes_mut(), target, &ry_matrix(-theta[slot]));
                }
                Gate::CRy {
                    control,
                    target,
                    slot,
                } => {
                    apply_controlled(
                        out.amplitudes_mut(),
                        control,
                        target,
                        &ry_matrix(-theta[slot]),
                    );
                }
            }
        }
        Ok(out)
    }

    /// Exact derivative state `∂|φ(θ)⟩/∂θ_slot`, computed by applying the
    /// differentiated gate in place of the gate that consumes `slot`.
    pub fn derivative_state(&self, theta: &[f64], slot: usize) -> Result<Statevector> {
        self.check_params(theta)?;
        if slot >= self.params {
            return Err(Error::SlotOutOfRange {
                slot,
                params: self.params,
            });
        }
        let mut out = Statevector::zero(self.qubits);
        for g in &self.gates {
            match *g {
                Gate::Ry { target, slot: s } if s == slot => {
                    apply_single(out.amplitudes_mut(), target, &ry_matrix_deriv(theta[s]));
                }
                Gate::CRy {
                    control,
                    target,
                    slot: s,
                } if s == slot => {
                    apply_controlled_deriv(
                        out.amplitudes_mut(),
                        control,
                        target,
                        &ry_matrix_deriv(theta[s]),
                    );
                }
                _ => self.apply_gate(g, theta, out.amplitudes_mut()),
            }
        }
        Ok(out)
    }

    /// Derivative state via the two-term shift rule
    /// `(√2/4) · (|φ(θ + π/2·e_slot)⟩ − |φ(θ − π/2·e_slot)⟩)`,
    /// valid for both `Ry` and `CRy`.
    pub fn derivative_state_shifted(&self, theta: &[f64], slot: usize) -> Result<Statevector> {
        self.check_params(theta)?;
        if slot >= self.params {
            return Err(Error::SlotOutOfRange {
                slot,
                params: self.params,
            });
        }
        let mut plus = theta.to_vec();
        let mut minus = theta.to_vec();
        plus[slot] += std::f64::consts::FRAC_PI_2;
        minus[slot] -= std::f64::consts::FRAC_PI_2;
        let sp = self.apply(&plus)?;
        let sm = self.apply(&minus)?;
        let scale = std::f64::consts::SQRT_2 / 4.0;
        let amps = sp
            .amplitudes()
            .iter()
            .zip(sm.amplitudes())
            .map(|(a, b)| (a - b) * scale)
            .collect();
        Statevector::from_amplitudes(amps)
    }

    /// All derivative states, one per parameter slot.
    pub fn derivative_states(&self, theta: &[f64]) -> Result<Vec<Statevector>> {
        (0..self.params)
            .map(|slot| self.derivative_state(theta, slot))
            .collect()
    }

    /// Overlap `o = Re⟨target|φ(θ)⟩` and its full gradient
    /// `∂o/∂θ_j = Re⟨target|∂_j φ⟩`, in one forward and one backward
    /// sweep over the gate list.
    pub fn overlap_gradient(&self, theta: &[f64], target: &Statevector) -> Result<(f64, Vec<f64>)> {
        self.check_params(theta)?;
        if target.qubits() != self.qubits {
            return Err(Error::DimensionMismatch(format!(
                "target on {} qubits, circuit on {}",
                target.qubits(),
                self.qubits
            )));
        }
        // Forward pass, recording the state entering each gate.
        let mut before: Vec<Vec<Complex64>> = Vec::with_capacity(self.gates.len());
        let mut state = Statevector::zero(self.qubits);
        for g in &self.gates {
            before.push(state.amplitudes().to_vec());
            self.apply_gate(g, theta, state.amplitudes_mut());
        }
        let overlap_value: f64 = target
            .amplitudes()
            .iter()
            .zip(state.amplitudes())
            .map(|(t, a)| (t.conj() * a).re)
            .sum();

        // Backward pass: carry ⟨target|G_p…G_{k+1} and contract it with
        // the differentiated gate applied to the recorded input state.
        let mut left = target.amplitudes().to_vec();
        let mut grad = vec![0.0; self.params];
        for (k, g) in self.gates.iter().enumerate().rev() {
            if let Gate::Ry { slot, target: t } | Gate::CRy { slot, target: t, .. } = *g {
                let mut din = before[k].clone();
                match *g {
                    Gate::Ry { .. } => apply_single(&mut din, t, &ry_matrix_deriv(theta[slot])),
                    Gate::CRy { control, .. } => {
                        apply_controlled_deriv(&mut din, control, t, &ry_matrix_deriv(theta[slot]))
                    }
                    Gate::H { .. } => unreachable!(),
                }
                grad[slot] += left
                    .iter()
                    .zip(&din)
                    .map(|(l, d)| (l.conj() * d).re)
                    .sum::<f64>();
            }
            // left ← Gᵀ·left
            match *g {
                Gate::H { target } => {
                    let h = [
                        [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
                        [FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
                    ];
                    apply_single(&mut left, target, &h);
                }
                Gate::Ry { target, slot } => {
                    apply_single(&mut left, target, &ry_matrix(-theta[slot]));
                }
                Gate::CRy {
                    control,
                    target,
                    slot,
                } => apply_controlled(&mut left, control, target, &ry_matrix(-theta[slot])),
            }
        }
        Ok((overlap_value, grad))
    }

    /// One gate per line: `H t`, `RY t slot`, `CRY c t slot`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for g in &self.gates {
            match *g {
                Gate::H { target } => s.push_str(&format!("H {target}\n")),
                Gate::Ry { target, slot } => s.push_str(&format!("RY {target} {slot}\n")),
                Gate::CRy {
                    control,
                    target,
                    slot,
                } => s.push_str(&format!("CRY {control} {target} {slot}\n")),
            }
        }
        s
    }
}

/// Layered ansatz: an unparameterized `H` layer, then a ring of `CRy`
/// gates (control `q_c`, target `(q_c+1) mod q`) consuming one parameter
/// each; whenever the target wraps to qubit 0, a full `Ry` layer consumes
/// up to `q` further parameters. Construction stops after exactly
/// `params` parameterized gates, truncating a trailing `Ry` layer if the
/// budget runs out mid-layer.
pub fn build_ansatz(qubits: usize, params: usize) -> Result<Circuit> {
    if qubits == 0 || (qubits < 2 && params > 0) {
        return Err(Error::AnsatzTooSmall(qubits));
    }
    let mut gates: Vec<Gate> = (0..qubits).map(|t| Gate::H { target: t }).collect();
    let mut k = 0usize;
    let mut control = 0usize;
    while k < params {
        let target = (control + 1) % qubits;
        gates.push(Gate::CRy {
            control,
            target,
            slot: k,
        });
        k += 1;
        control = target;
        if target == 0 {
            for qubit in 0..qubits {
                if k + qubit < params {
                    gates.push(Gate::Ry {
                        target: qubit,
                        slot: k + qubit,
                    });
                }
            }
            k += qubits;
        }
    }
    Circuit::new(qubits, gates)
}
