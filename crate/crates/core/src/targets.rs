//! Target states and the unitaries that prepare them from `|0…0⟩`.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuits::{BoundCircuit, Circuit};
use crate::error::{validation, Error, Result};
use crate::statevector::StateVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetName {
    Ghz,
    W,
    #[serde(rename = "ame", alias = "ame3")]
    Ame3,
    Custom,
}

impl fmt::Display for TargetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetName::Ghz => "ghz",
            TargetName::W => "w",
            TargetName::Ame3 => "ame",
            TargetName::Custom => "custom",
        })
    }
}

impl std::str::FromStr for TargetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ghz" => Ok(TargetName::Ghz),
            "w" => Ok(TargetName::W),
            "ame" | "ame3" => Ok(TargetName::Ame3),
            "custom" => Ok(TargetName::Custom),
            other => Err(validation(format!("unknown target `{other}` (expected ghz, w, ame or custom)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetState {
    pub name: TargetName,
    pub state: StateVector,
    /// Squared norm of the amplitudes as given, before renormalization.
    pub raw_norm_sqr: f64,
}

impl TargetState {
    pub fn n_qubits(&self) -> usize {
        self.state.n_qubits()
    }

    fn exact(name: TargetName, amplitudes: Vec<Complex64>) -> Result<Self> {
        let raw_norm_sqr = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        Ok(Self { name, state: StateVector::normalized(amplitudes)?, raw_norm_sqr })
    }
}

fn check_min_qubits(n: usize) -> Result<()> {
    if n < 2 {
        return Err(validation(format!("target states need at least 2 qubits, got {n}")));
    }
    Ok(())
}

/// `(|0…0⟩ + |1…1⟩)/√2`.
pub fn ghz_state(n_qubits: usize) -> Result<TargetState> {
    check_min_qubits(n_qubits)?;
    let dim = 1usize << n_qubits;
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    amps[0] = Complex64::new(1.0, 0.0);
    amps[dim - 1] = Complex64::new(1.0, 0.0);
    TargetState::exact(TargetName::Ghz, amps)
}

/// Equal superposition of the `N` weight-one basis states.
pub fn w_state(n_qubits: usize) -> Result<TargetState> {
    check_min_qubits(n_qubits)?;
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
    for q in 0..n_qubits {
        amps[1 << q] = Complex64::new(1.0, 0.0);
    }
    TargetState::exact(TargetName::W, amps)
}

/// Three-qubit absolutely maximally entangled state with its published
/// (rounded) coefficients, renormalized to unit norm.
pub fn ame3_state() -> TargetState {
    let mut amps = vec![Complex64::new(0.0, 0.0); 8];
    amps[0b000] = Complex64::new(0.27, 0.0);
    amps[0b100] = Complex64::new(0.377, 0.0);
    amps[0b010] = Complex64::new(0.326, 0.0);
    amps[0b001] = Complex64::new(0.363, 0.0);
    amps[0b111] = Complex64::from_polar(0.74, -0.79 * PI);
    TargetState::exact(TargetName::Ame3, amps).expect("fixed AME coefficients are valid")
}

/// Arbitrary amplitudes, accepted when their squared norm is within `1e-6` of
/// one and then renormalized.
pub fn custom_state(amplitudes: Vec<Complex64>) -> Result<TargetState> {
    let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(validation(format!("custom target has squared norm {norm}, expected 1 within 1e-6")));
    }
    TargetState::exact(TargetName::Custom, amplitudes)
}

/// Parses the `index real imag` custom target format. Blank lines and lines
/// starting with `#` are ignored; unlisted indices are zero. Without an explicit
/// register size the smallest one holding every listed index is used.
pub fn parse_custom_target(text: &str, n_qubits: Option<usize>) -> Result<TargetState> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let perr = |msg: String| Error::Parse { line: lineno + 1, msg };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(perr(format!("expected `index real imag`, got `{line}`")));
        }
        let index: usize = fields[0].parse().map_err(|e| perr(format!("bad index: {e}")))?;
        let re: f64 = fields[1].parse().map_err(|e| perr(format!("bad real part: {e}")))?;
        let im: f64 = fields[2].parse().map_err(|e| perr(format!("bad imaginary part: {e}")))?;
        if entries.iter().any(|&(i, _)| i == index) {
            return Err(perr(format!("index {index} listed twice")));
        }
        entries.push((index, Complex64::new(re, im)));
    }
    let max_index = entries.iter().map(|&(i, _)| i).max().unwrap_or(0);
    let n = match n_qubits {
        Some(n) => n,
        None => (usize::BITS - max_index.leading_zeros()).max(1) as usize,
    };
    if n >= usize::BITS as usize || max_index >= 1usize << n {
        return Err(validation(format!("index {max_index} does not fit in {n} qubits")));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    for (i, a) in entries {
        amps[i] = a;
    }
    custom_state(amps)
}

/// Looks up a named target; `ame` is only defined on three qubits.
pub fn named_target(name: &str, n_qubits: usize) -> Result<TargetState> {
    match name.parse::<TargetName>()? {
        TargetName::Ghz => ghz_state(n_qubits),
        TargetName::W => w_state(n_qubits),
        TargetName::Ame3 => {
            if n_qubits != 3 {
                return Err(validation(format!("the AME target is defined for 3 qubits, got {n_qubits}")));
            }
            Ok(ame3_state())
        }
        TargetName::Custom => Err(validation("custom targets are read from an amplitude file")),
    }
}

/// Preparation unitary for a named target: the explicit circuit when one
/// exists, otherwise a completed dense matrix.
pub fn target_unitary(name: TargetName, n_qubits: usize) -> Result<TargetUnitary> {
    match target_circuit(name, n_qubits) {
        Some(c) => TargetUnitary::from_circuit(c),
        None => completed_unitary(&named_target(&name.to_string(), n_qubits)?),
    }
}

fn fixed_angle_circuit(n_qubits: usize, build: impl FnOnce(&mut Circuit, &mut Vec<f64>) -> Result<()>) -> Result<BoundCircuit> {
    let mut c = Circuit::new(n_qubits)?;
    let mut theta = Vec::new();
    build(&mut c, &mut theta)?;
    c.bind(&theta)
}

fn push_cx(c: &mut Circuit, control: usize, target: usize) -> Result<()> {
    c.h(target)?;
    c.mcz(&[control, target])?;
    c.h(target)
}

/// `H` on qubit 0 then a CNOT fan-out from qubit 0, each CNOT written as
/// `H·CZ·H` on its target.
pub fn ghz_circuit(n_qubits: usize) -> Result<BoundCircuit> {
    check_min_qubits(n_qubits)?;
    fixed_angle_circuit(n_qubits, |c, _| {
        c.h(0)?;
        for t in 1..n_qubits {
            push_cx(c, 0, t)?;
        }
        Ok(())
    })
}

/// Cascade preparation of the W state: flip qubit 0, then for each neighbour
/// pair a controlled `RY` moves the remaining weight forward and a CNOT clears
/// the control. Controlled `RY` is realized as `RZ(π/2)·CRX·RZ(-π/2)`.
pub fn w_circuit(n_qubits: usize) -> Result<BoundCircuit> {
    check_min_qubits(n_qubits)?;
    fixed_angle_circuit(n_qubits, |c, theta| {
        c.ry(0)?;
        theta.push(PI);
        for k in 0..n_qubits - 1 {
            let remaining = (n_qubits - k) as f64;
            c.rz(k + 1)?;
            theta.push(-PI / 2.0);
            c.crx(k, k + 1)?;
            theta.push(2.0 * (1.0 / remaining.sqrt()).acos());
            c.rz(k + 1)?;
            theta.push(PI / 2.0);
            push_cx(c, k + 1, k)?;
        }
        Ok(())
    })
}

/// Explicit preparation circuit for a named target, where one is provided.
pub fn target_circuit(name: TargetName, n_qubits: usize) -> Option<BoundCircuit> {
    match name {
        TargetName::Ghz => ghz_circuit(n_qubits).ok(),
        TargetName::W => w_circuit(n_qubits).ok(),
        TargetName::Ame3 | TargetName::Custom => None,
    }
}

#[derive(Clone, Debug, PartialEq)]
enum UnitaryRepr {
    Circuit(BoundCircuit),
    Matrix(DMatrix<Complex64>),
}

/// A unitary `V` with `V|0…0⟩ = |ψ⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetUnitary {
    column0: StateVector,
    repr: UnitaryRepr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitaryMode {
    ExplicitCircuit,
    CompletedMatrix,
}

impl TargetUnitary {
    pub fn from_circuit(circuit: BoundCircuit) -> Result<Self> {
        let column0 = circuit.execute(&StateVector::zero(circuit.n_qubits())?)?;
        Ok(Self { column0, repr: UnitaryRepr::Circuit(circuit) })
    }

    pub fn mode(&self) -> UnitaryMode {
        match self.repr {
            UnitaryRepr::Circuit(_) => UnitaryMode::ExplicitCircuit,
            UnitaryRepr::Matrix(_) => UnitaryMode::CompletedMatrix,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.column0.n_qubits()
    }

    /// `V|0…0⟩`.
    pub fn target(&self) -> &StateVector {
        &self.column0
    }

    pub fn circuit(&self) -> Option<&BoundCircuit> {
        match &self.repr {
            UnitaryRepr::Circuit(c) => Some(c),
            UnitaryRepr::Matrix(_) => None,
        }
    }

    /// `V†|state⟩`.
    pub fn apply_adjoint(&self, state: &StateVector) -> Result<StateVector> {
        match &self.repr {
            UnitaryRepr::Circuit(c) => c.adjoint().execute(state),
            UnitaryRepr::Matrix(m) => {
                if state.n_qubits() != self.n_qubits() {
                    return Err(validation("state and target unitary differ in size"));
                }
                let v = DVector::from_column_slice(state.amplitudes());
                let out = m.adjoint() * v;
                StateVector::normalized(out.iter().copied().collect())
            }
        }
    }

    pub fn dense(&self) -> Result<DMatrix<Complex64>> {
        match &self.repr {
            UnitaryRepr::Circuit(c) => c.dense_unitary(),
            UnitaryRepr::Matrix(m) => Ok(m.clone()),
        }
    }
}

/// Dense unitary whose first column is the target, completed by Gram-Schmidt
/// over the standard basis in index order.
pub fn completed_unitary(target: &TargetState) -> Result<TargetUnitary> {
    let psi = &target.state;
    let dim = psi.dim();
    if psi.n_qubits() > crate::circuits::DENSE_UNITARY_MAX_QUBITS {
        return Err(Error::Capacity(format!("completed unitary limited to {} qubits", crate::circuits::DENSE_UNITARY_MAX_QUBITS)));
    }
    let mut columns: Vec<DVector<Complex64>> = vec![DVector::from_column_slice(psi.amplitudes())];
    for j in 0..dim {
        if columns.len() == dim {
            break;
        }
        let mut v = DVector::<Complex64>::zeros(dim);
        v[j] = Complex64::new(1.0, 0.0);
        // Two passes of classical Gram-Schmidt keep the result orthogonal to
        // machine precision.
        for _ in 0..2 {
            for c in &columns {
                let proj = c.dotc(&v);
                v -= c * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            columns.push(v / Complex64::new(norm, 0.0));
        }
    }
    if columns.len() != dim {
        return Err(Error::Numeric("basis completion failed".into()));
    }
    let m = DMatrix::from_columns(&columns);
    Ok(TargetUnitary { column0: psi.clone(), repr: UnitaryRepr::Matrix(m) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn nonzero(s: &StateVector) -> Vec<usize> {
        (0..s.dim()).filter(|&i| s.amplitude(i).norm() > 1e-12).collect()
    }

    #[test]
    fn ghz_examples() {
        let g = ghz_state(3).unwrap();
        assert_eq!(nonzero(&g.state), vec![0, 7]);
        assert!((g.state.amplitude(0).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(nonzero(&ghz_state(2).unwrap().state), vec![0, 3]);
        assert!((g.state.norm_sqr() - 1.0).abs() < 1e-15);
        assert!(ghz_state(1).is_err());
    }

    #[test]
    fn w_examples() {
        let w = w_state(3).unwrap();
        assert_eq!(nonzero(&w.state), vec![1, 2, 4]);
        for i in [1, 2, 4] {
            assert!((w.state.amplitude(i).re - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        }
        assert_eq!(nonzero(&w_state(2).unwrap().state), vec![1, 2]);
        for n in 2..=8 {
            let w = w_state(n).unwrap();
            assert_eq!(nonzero(&w.state).len(), n);
            assert_eq!(nonzero(&ghz_state(n).unwrap().state).len(), 2);
        }
        assert!(w_state(0).is_err());
    }

    #[test]
    fn ame_examples() {
        let a = ame3_state();
        // 0.27² + 0.377² + 0.326² + 0.363² + 0.74² = 1.000674
        assert!((a.raw_norm_sqr - 1.000674).abs() < 1e-9);
        assert!((a.raw_norm_sqr - 1.0007).abs() < 1e-3);
        let scale = a.raw_norm_sqr.sqrt();
        assert!((a.state.amplitude(7).norm() * scale - 0.74).abs() < 1e-12);
        let phase = a.state.amplitude(7).arg();
        assert!((phase + 0.79 * PI).abs() < 1e-12);
        for i in [0b011, 0b101, 0b110] {
            assert_eq!(a.state.amplitude(i).norm(), 0.0);
        }
        assert!((a.state.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ghz_circuit_prepares_ghz() {
        for n in 2..=6 {
            let out = ghz_circuit(n).unwrap().execute(&StateVector::zero(n).unwrap()).unwrap();
            let f = ghz_state(n).unwrap().state.fidelity(&out).unwrap();
            assert!((f - 1.0).abs() < 1e-8, "N={n}: {f}");
        }
        assert_eq!(ghz_circuit(2).unwrap().circuit().dag_depth(), 3);
        assert_eq!(ghz_circuit(3).unwrap().circuit().dag_depth(), 4);
        assert_eq!(ghz_circuit(4).unwrap().circuit().dag_depth(), 5);
        assert_eq!(ghz_circuit(5).unwrap().circuit().dag_depth(), 6);
    }

    #[test]
    fn w_circuit_prepares_w() {
        for n in 2..=6 {
            let out = w_circuit(n).unwrap().execute(&StateVector::zero(n).unwrap()).unwrap();
            let f = w_state(n).unwrap().state.fidelity(&out).unwrap();
            assert!((f - 1.0).abs() < 1e-8, "N={n}: {f}");
        }
    }

    #[test]
    fn completed_unitary_examples() {
        let zero = TargetState::exact(TargetName::Custom, StateVector::zero(3).unwrap().amplitudes().to_vec()).unwrap();
        let v = completed_unitary(&zero).unwrap();
        assert!((v.dense().unwrap() - DMatrix::identity(8, 8)).camax() < 1e-12);

        for target in [ame3_state(), ghz_state(4).unwrap(), w_state(3).unwrap()] {
            let v = completed_unitary(&target).unwrap();
            let m = v.dense().unwrap();
            let dim = m.nrows();
            assert!((m.adjoint() * &m - DMatrix::identity(dim, dim)).camax() < 1e-8);
            for (i, a) in target.state.amplitudes().iter().enumerate() {
                assert!((m[(i, 0)] - a).norm() < 1e-8);
            }
            let back = v.apply_adjoint(&target.state).unwrap();
            assert!((back.amplitude(0).re - 1.0).abs() < 1e-8);
            assert_eq!(v.mode(), UnitaryMode::CompletedMatrix);
        }
    }

    #[test]
    fn explicit_unitary_first_column() {
        let v = TargetUnitary::from_circuit(ghz_circuit(3).unwrap()).unwrap();
        let m = v.dense().unwrap();
        let ghz = ghz_state(3).unwrap();
        for (i, a) in ghz.state.amplitudes().iter().enumerate() {
            assert!((m[(i, 0)] - a).norm() < 1e-8);
        }
        assert_eq!(v.mode(), UnitaryMode::ExplicitCircuit);
    }

    #[test]
    fn custom_target_file() {
        let text = "# bell pair\n0 0.7071067811865476 0\n3 0 0.7071067811865476\n";
        let t = parse_custom_target(text, None).unwrap();
        assert_eq!(t.n_qubits(), 2);
        assert!((t.state.amplitude(3).im - FRAC_1_SQRT_2).abs() < 1e-15);
        let t = parse_custom_target(text, Some(3)).unwrap();
        assert_eq!(t.n_qubits(), 3);

        let loose = "0 0.7071 0\n1 0.7071 0\n";
        assert!(matches!(parse_custom_target(loose, None), Err(Error::Validation(_))));
        let nearly = "0 0.70710678 0\n1 0.70710678 0\n";
        let t = parse_custom_target(nearly, None).unwrap();
        assert!((t.state.norm_sqr() - 1.0).abs() < 1e-14);

        assert!(matches!(parse_custom_target("0 1\n", None), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_custom_target("0 1 0\n0 0 0\n", None), Err(Error::Parse { line: 2, .. })));
        assert!(parse_custom_target("4 1 0\n", Some(2)).is_err());
    }

    #[test]
    fn named_lookup() {
        assert_eq!(named_target("GHZ", 4).unwrap().name, TargetName::Ghz);
        assert_eq!(named_target("ame", 3).unwrap().name, TargetName::Ame3);
        assert!(named_target("ame", 4).is_err());
        assert!(named_target("dicke", 4).is_err());
    }
}
