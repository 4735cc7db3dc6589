//! Parameterized circuit representation shared by ansatzes and target
//! preparations.
//!
//! A [`Circuit`] is an ordered gate list whose rotation gates refer to slots of
//! an external parameter vector. Slots are single-use and cover `0..n_params`.
//! Binding a parameter vector yields a [`BoundCircuit`] that can be executed,
//! inverted or expanded into a dense unitary.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::statevector::{check_capacity, Axis, StateVector};

/// Largest register for which [`BoundCircuit::dense_unitary`] is allowed.
pub const DENSE_UNITARY_MAX_QUBITS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    H,
    Mcz,
    Crx,
    Crz,
}

impl GateKind {
    pub fn is_parameterized(self) -> bool {
        !matches!(self, GateKind::H | GateKind::Mcz)
    }

    pub fn is_controlled_rotation(self) -> bool {
        matches!(self, GateKind::Crx | GateKind::Crz)
    }

    pub fn axis(self) -> Option<Axis> {
        match self {
            GateKind::Rx | GateKind::Crx => Some(Axis::X),
            GateKind::Ry => Some(Axis::Y),
            GateKind::Rz | GateKind::Crz => Some(Axis::Z),
            GateKind::H | GateKind::Mcz => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rx => "RX",
            GateKind::Ry => "RY",
            GateKind::Rz => "RZ",
            GateKind::H => "H",
            GateKind::Mcz => "MCZ",
            GateKind::Crx => "CRX",
            GateKind::Crz => "CRZ",
        }
    }

    fn arity_ok(self, n: usize) -> bool {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::H => n == 1,
            GateKind::Mcz => n >= 2,
            GateKind::Crx | GateKind::Crz => n == 2,
        }
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "RX" => GateKind::Rx,
            "RY" => GateKind::Ry,
            "RZ" => GateKind::Rz,
            "H" => GateKind::H,
            "MCZ" | "CZ" => GateKind::Mcz,
            "CRX" => GateKind::Crx,
            "CRZ" => GateKind::Crz,
            other => return Err(validation(format!("unknown gate kind `{other}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateSpec {
    pub kind: GateKind,
    /// Qubits acted on. Controlled rotations list `[control, target]`.
    pub qubits: Vec<usize>,
    pub param_slot: Option<usize>,
}

impl GateSpec {
    pub fn new(kind: GateKind, qubits: Vec<usize>, param_slot: Option<usize>) -> Result<Self> {
        let gate = Self { kind, qubits, param_slot };
        gate.validate()?;
        Ok(gate)
    }

    fn validate(&self) -> Result<()> {
        if !self.kind.arity_ok(self.qubits.len()) {
            return Err(validation(format!(
                "{} cannot act on {} qubit(s)",
                self.kind.name(),
                self.qubits.len()
            )));
        }
        if self.kind.is_parameterized() != self.param_slot.is_some() {
            return Err(validation(format!(
                "{} {} a parameter slot",
                self.kind.name(),
                if self.kind.is_parameterized() { "requires" } else { "does not take" }
            )));
        }
        for (i, q) in self.qubits.iter().enumerate() {
            if self.qubits[..i].contains(q) {
                return Err(Error::Index(format!("duplicate qubit {q} in {}", self.kind.name())));
            }
        }
        Ok(())
    }

    fn apply(&self, theta: &[f64], state: &mut StateVector) -> Result<()> {
        let angle = || self.param_slot.map(|s| theta[s]).unwrap_or(0.0);
        match self.kind {
            GateKind::Rx | GateKind::Ry | GateKind::Rz => {
                state.apply_rotation(self.kind.axis().unwrap(), angle(), self.qubits[0])
            }
            GateKind::H => state.apply_hadamard(self.qubits[0]),
            GateKind::Mcz => state.apply_multi_controlled_z(&self.qubits),
            GateKind::Crx | GateKind::Crz => state.apply_controlled_rotation(
                self.qubits[0],
                self.qubits[1],
                self.kind.axis().unwrap(),
                angle(),
            ),
        }
    }
}

impl fmt::Display for GateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let qubits: Vec<String> = self.qubits.iter().map(|q| q.to_string()).collect();
        write!(f, "{} {}", self.kind.name(), qubits.join(","))?;
        if let Some(slot) = self.param_slot {
            write!(f, " slot={slot}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<GateSpec>,
    n_params: usize,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Self> {
        check_capacity(n_qubits)?;
        Ok(Self { n_qubits, gates: Vec::new(), n_params: 0 })
    }

    /// Builds a circuit from an explicit gate list. Parameter slots must be a
    /// permutation of `0..k` for some `k`.
    pub fn from_gates(n_qubits: usize, gates: Vec<GateSpec>) -> Result<Self> {
        check_capacity(n_qubits)?;
        let mut seen = Vec::new();
        for g in &gates {
            g.validate()?;
            if let Some(&q) = g.qubits.iter().find(|&&q| q >= n_qubits) {
                return Err(Error::Index(format!("qubit {q} out of range for {n_qubits} qubits")));
            }
            if let Some(slot) = g.param_slot {
                if seen.len() <= slot {
                    seen.resize(slot + 1, false);
                }
                if seen[slot] {
                    return Err(validation(format!("parameter slot {slot} used twice")));
                }
                seen[slot] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(validation(format!("parameter slot {missing} is unused")));
        }
        Ok(Self { n_qubits, gates, n_params: seen.len() })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn gates(&self) -> &[GateSpec] {
        &self.gates
    }

    /// Appends a gate. A parameterized gate must use the next free slot.
    pub fn push(&mut self, gate: GateSpec) -> Result<()> {
        gate.validate()?;
        if let Some(&q) = gate.qubits.iter().find(|&&q| q >= self.n_qubits) {
            return Err(Error::Index(format!("qubit {q} out of range for {} qubits", self.n_qubits)));
        }
        if let Some(slot) = gate.param_slot {
            if slot != self.n_params {
                return Err(validation(format!("expected parameter slot {}, got {slot}", self.n_params)));
            }
            self.n_params += 1;
        }
        self.gates.push(gate);
        Ok(())
    }

    fn push_rotation(&mut self, kind: GateKind, qubits: Vec<usize>) -> Result<usize> {
        let slot = self.n_params;
        self.push(GateSpec::new(kind, qubits, Some(slot))?)?;
        Ok(slot)
    }

    /// Appends `RX` on `qubit` with a fresh slot; returns the slot.
    pub fn rx(&mut self, qubit: usize) -> Result<usize> {
        self.push_rotation(GateKind::Rx, vec![qubit])
    }

    pub fn ry(&mut self, qubit: usize) -> Result<usize> {
        self.push_rotation(GateKind::Ry, vec![qubit])
    }

    pub fn rz(&mut self, qubit: usize) -> Result<usize> {
        self.push_rotation(GateKind::Rz, vec![qubit])
    }

    pub fn crx(&mut self, control: usize, target: usize) -> Result<usize> {
        self.push_rotation(GateKind::Crx, vec![control, target])
    }

    pub fn crz(&mut self, control: usize, target: usize) -> Result<usize> {
        self.push_rotation(GateKind::Crz, vec![control, target])
    }

    pub fn h(&mut self, qubit: usize) -> Result<()> {
        self.push(GateSpec::new(GateKind::H, vec![qubit], None)?)
    }

    pub fn mcz(&mut self, qubits: &[usize]) -> Result<()> {
        self.push(GateSpec::new(GateKind::Mcz, qubits.to_vec(), None)?)
    }

    /// Appends all gates of `other`, shifting its slots past the current ones.
    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return Err(validation(format!(
                "cannot append a {}-qubit circuit to a {}-qubit circuit",
                other.n_qubits, self.n_qubits
            )));
        }
        let offset = self.n_params;
        self.gates.extend(other.gates.iter().map(|g| GateSpec {
            param_slot: g.param_slot.map(|s| s + offset),
            ..g.clone()
        }));
        self.n_params += other.n_params;
        Ok(())
    }

    pub fn bind(&self, theta: &[f64]) -> Result<BoundCircuit> {
        self.check_theta(theta)?;
        Ok(BoundCircuit { circuit: self.clone(), theta: theta.to_vec() })
    }

    pub(crate) fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.n_params {
            return Err(validation(format!(
                "parameter vector has length {}, circuit expects {}",
                theta.len(),
                self.n_params
            )));
        }
        if let Some(t) = theta.iter().find(|t| !t.is_finite()) {
            return Err(validation(format!("parameter {t} is not finite")));
        }
        Ok(())
    }

    /// Applies the gates in order to `state` with parameters `theta`.
    /// `theta` must already have the right length.
    pub(crate) fn run(&self, theta: &[f64], state: &mut StateVector) -> Result<()> {
        if state.n_qubits() != self.n_qubits {
            return Err(validation(format!(
                "state has {} qubits, circuit has {}",
                state.n_qubits(),
                self.n_qubits
            )));
        }
        for gate in &self.gates {
            gate.apply(theta, state)?;
        }
        Ok(())
    }

    /// `U(theta)|0…0⟩`.
    pub fn prepare(&self, theta: &[f64]) -> Result<StateVector> {
        self.check_theta(theta)?;
        let mut state = StateVector::zero(self.n_qubits)?;
        self.run(theta, &mut state)?;
        Ok(state)
    }

    /// Number of layers under as-soon-as-possible scheduling, where every gate
    /// costs one layer and waits for all earlier gates sharing a qubit.
    pub fn dag_depth(&self) -> usize {
        let mut frontier = vec![0usize; self.n_qubits];
        let mut depth = 0;
        for gate in &self.gates {
            let layer = 1 + gate.qubits.iter().map(|&q| frontier[q]).max().unwrap_or(0);
            for &q in &gate.qubits {
                frontier[q] = layer;
            }
            depth = depth.max(layer);
        }
        depth
    }

    /// Line-oriented text form: `KIND q0[,q1,...] [slot=k]`, preceded by a
    /// `# qubits=N` header.
    pub fn to_text(&self) -> String {
        let mut out = format!("# qubits={}\n", self.n_qubits);
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses [`Circuit::to_text`] output. Without a header the register size
    /// is one more than the largest qubit index mentioned.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut n_qubits = None;
        let mut gates = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let perr = |msg: String| Error::Parse { line: lineno + 1, msg };
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("qubits=") {
                    n_qubits = Some(v.trim().parse::<usize>().map_err(|e| perr(e.to_string()))?);
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let kind: GateKind = parts.next().unwrap().parse().map_err(|e: Error| perr(e.to_string()))?;
            let qubits = parts
                .next()
                .ok_or_else(|| perr("missing qubit list".into()))?
                .split(',')
                .map(|q| q.parse::<usize>().map_err(|e| perr(format!("bad qubit `{q}`: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            let param_slot = match parts.next() {
                Some(tok) => Some(
                    tok.strip_prefix("slot=")
                        .ok_or_else(|| perr(format!("unexpected token `{tok}`")))?
                        .parse::<usize>()
                        .map_err(|e| perr(e.to_string()))?,
                ),
                None => None,
            };
            if let Some(extra) = parts.next() {
                return Err(perr(format!("unexpected token `{extra}`")));
            }
            gates.push(GateSpec::new(kind, qubits, param_slot).map_err(|e| perr(e.to_string()))?);
        }
        let n = match n_qubits {
            Some(n) => n,
            None => gates.iter().flat_map(|g| g.qubits.iter()).max().map_or(1, |m| m + 1),
        };
        Self::from_gates(n, gates)
    }
}

/// A circuit together with concrete parameter values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCircuit {
    circuit: Circuit,
    theta: Vec<f64>,
}

impl BoundCircuit {
    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn n_qubits(&self) -> usize {
        self.circuit.n_qubits
    }

    pub fn execute(&self, input: &StateVector) -> Result<StateVector> {
        let mut state = input.clone();
        self.execute_in_place(&mut state)?;
        Ok(state)
    }

    pub fn execute_in_place(&self, state: &mut StateVector) -> Result<()> {
        self.circuit.run(&self.theta, state)
    }

    /// Inverse circuit: gates reversed, every rotation angle negated.
    pub fn adjoint(&self) -> BoundCircuit {
        let mut gates = self.circuit.gates.clone();
        gates.reverse();
        BoundCircuit {
            circuit: Circuit { gates, ..self.circuit.clone() },
            theta: self.theta.iter().map(|t| -t).collect(),
        }
    }

    /// Dense `2^N × 2^N` matrix; column `b` is the image of basis state `b`.
    pub fn dense_unitary(&self) -> Result<DMatrix<Complex64>> {
        let n = self.n_qubits();
        if n > DENSE_UNITARY_MAX_QUBITS {
            return Err(Error::Capacity(format!(
                "dense unitary limited to {DENSE_UNITARY_MAX_QUBITS} qubits, circuit has {n}"
            )));
        }
        let dim = 1usize << n;
        let mut m = DMatrix::zeros(dim, dim);
        for b in 0..dim {
            let col = self.execute(&StateVector::basis(n, b)?)?;
            for (r, a) in col.amplitudes().iter().enumerate() {
                m[(r, b)] = *a;
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn random_circuit(n: usize, n_gates: usize, seed: u64) -> BoundCircuit {
        let mut rng = rng_from_seed(seed);
        let mut c = Circuit::new(n).unwrap();
        for _ in 0..n_gates {
            let q = rng.gen_range(0..n);
            let r = (q + rng.gen_range(1..n)) % n;
            match rng.gen_range(0..7) {
                0 => drop(c.rx(q).unwrap()),
                1 => drop(c.ry(q).unwrap()),
                2 => drop(c.rz(q).unwrap()),
                3 => c.h(q).unwrap(),
                4 => c.mcz(&[q, r]).unwrap(),
                5 => drop(c.crx(q, r).unwrap()),
                _ => drop(c.crz(q, r).unwrap()),
            }
        }
        let theta: Vec<f64> = (0..c.n_params()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        c.bind(&theta).unwrap()
    }

    fn random_state(n: usize, seed: u64) -> StateVector {
        let mut rng = rng_from_seed(seed);
        let amps = (0..1 << n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        StateVector::normalized(amps).unwrap()
    }

    fn assert_states_close(a: &StateVector, b: &StateVector, tol: f64) {
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < tol, "{x} vs {y}");
        }
    }

    #[test]
    fn gate_spec_arity() {
        assert!(GateSpec::new(GateKind::Ry, vec![0], Some(0)).is_ok());
        assert!(GateSpec::new(GateKind::Ry, vec![0], None).is_err());
        assert!(GateSpec::new(GateKind::H, vec![0], Some(0)).is_err());
        assert!(GateSpec::new(GateKind::Mcz, vec![0], None).is_err());
        assert!(GateSpec::new(GateKind::Crx, vec![0, 1, 2], Some(0)).is_err());
        assert!(GateSpec::new(GateKind::Mcz, vec![1, 1], None).is_err());
    }

    #[test]
    fn slots_must_be_contiguous() {
        let g = |slot| GateSpec::new(GateKind::Ry, vec![0], Some(slot)).unwrap();
        assert_eq!(Circuit::from_gates(1, vec![g(1), g(0)]).unwrap().n_params(), 2);
        assert!(Circuit::from_gates(1, vec![g(0), g(0)]).is_err());
        assert!(Circuit::from_gates(1, vec![g(1)]).is_err());
        assert!(matches!(Circuit::from_gates(1, vec![GateSpec::new(GateKind::H, vec![1], None).unwrap()]), Err(Error::Index(_))));
        let mut c = Circuit::new(2).unwrap();
        assert!(c.push(g(3)).is_err());
        assert!(matches!(c.h(2), Err(Error::Index(_))));
    }

    #[test]
    fn bind_examples() {
        let c = Circuit::new(2).unwrap();
        assert!(c.bind(&[]).is_ok());
        let mut c = Circuit::new(4).unwrap();
        for _ in 0..4 {
            for q in 0..4 {
                c.ry(q).unwrap();
            }
        }
        assert_eq!(c.n_params(), 16);
        assert!(c.bind(&[0.1; 16]).is_ok());
        assert!(matches!(c.bind(&[0.1; 15]), Err(Error::Validation(_))));
        assert!(c.bind(&[f64::NAN; 16]).is_err());
    }

    #[test]
    fn execute_examples() {
        let c = Circuit::new(3).unwrap().bind(&[]).unwrap();
        let s = random_state(3, 2);
        assert_eq!(c.execute(&s).unwrap(), s);

        let mut c = Circuit::new(1).unwrap();
        c.h(0).unwrap();
        let out = c.bind(&[]).unwrap().execute(&StateVector::zero(1).unwrap()).unwrap();
        assert!((out.amplitude(0).re - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((out.amplitude(1).re - FRAC_1_SQRT_2).abs() < 1e-12);

        assert!(matches!(
            c.bind(&[]).unwrap().execute(&StateVector::zero(2).unwrap()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn adjoint_examples() {
        let mut c = Circuit::new(1).unwrap();
        c.ry(0).unwrap();
        let adj = c.bind(&[0.3]).unwrap().adjoint();
        assert_eq!(adj.theta(), &[-0.3]);
        assert_eq!(adj.circuit().gates()[0].kind, GateKind::Ry);

        for seed in 0..20 {
            let c = random_circuit(3, 15, seed);
            let s = random_state(3, 100 + seed);
            let twice = c.adjoint().adjoint();
            assert_states_close(&twice.execute(&s).unwrap(), &c.execute(&s).unwrap(), 1e-10);
            let back = c.adjoint().execute(&c.execute(&s).unwrap()).unwrap();
            assert_states_close(&back, &s, 1e-10);
        }
    }

    #[test]
    fn depth_examples() {
        assert_eq!(Circuit::new(2).unwrap().dag_depth(), 0);
        let mut c = Circuit::new(2).unwrap();
        c.ry(0).unwrap();
        c.ry(1).unwrap();
        assert_eq!(c.dag_depth(), 1);
        c.mcz(&[0, 1]).unwrap();
        c.ry(0).unwrap();
        assert_eq!(c.dag_depth(), 3);
    }

    #[test]
    fn dense_unitary_examples() {
        let id = Circuit::new(2).unwrap().bind(&[]).unwrap().dense_unitary().unwrap();
        assert_eq!(id, DMatrix::identity(4, 4));

        let mut c = Circuit::new(2).unwrap();
        c.mcz(&[0, 1]).unwrap();
        let m = c.bind(&[]).unwrap().dense_unitary().unwrap();
        let mut expect = DMatrix::<Complex64>::identity(4, 4);
        expect[(3, 3)] = Complex64::new(-1.0, 0.0);
        assert_eq!(m, expect);

        for seed in 0..10 {
            let u = random_circuit(3, 20, seed).dense_unitary().unwrap();
            let err = (u.adjoint() * &u - DMatrix::identity(8, 8)).camax();
            assert!(err < 1e-8, "{err}");
        }

        assert!(matches!(
            Circuit::new(11).unwrap().bind(&[]).unwrap().dense_unitary(),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn dense_unitary_of_adjoint_is_inverse() {
        for n in 1..=4 {
            for seed in 0..5 {
                let c = random_circuit(n.max(2), 12, 50 + seed);
                let dim = 1 << c.n_qubits();
                let prod = c.dense_unitary().unwrap() * c.adjoint().dense_unitary().unwrap();
                assert!((prod - DMatrix::identity(dim, dim)).camax() < 1e-8);
            }
        }
    }

    #[test]
    fn appending_never_decreases_depth() {
        for seed in 0..20 {
            let c = random_circuit(4, 30, seed);
            let mut prefix = Circuit::new(4).unwrap();
            let mut last = 0;
            for g in c.circuit().gates() {
                let slot = g.param_slot.map(|_| prefix.n_params());
                prefix.push(GateSpec::new(g.kind, g.qubits.clone(), slot).unwrap()).unwrap();
                let d = prefix.dag_depth();
                assert!(d >= last);
                last = d;
            }
        }
    }

    #[test]
    fn text_format_round_trip() {
        let c = random_circuit(4, 25, 3);
        let text = c.circuit().to_text();
        assert_eq!(&Circuit::from_text(&text).unwrap(), c.circuit());
        let adj = c.adjoint();
        assert_eq!(&Circuit::from_text(&adj.circuit().to_text()).unwrap(), adj.circuit());

        let parsed = Circuit::from_text("RY 0 slot=0\nMCZ 0,1,2\nCRX 2,0 slot=1\n").unwrap();
        assert_eq!(parsed.n_qubits(), 3);
        assert_eq!(parsed.n_params(), 2);
        assert!(matches!(Circuit::from_text("RY 0 slot=x"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(Circuit::from_text("H 0\nFOO 1"), Err(Error::Parse { line: 2, .. })));
    }
}
