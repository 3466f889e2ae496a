//! Strategy classes: deterministic classical tables, entangled strategies
//! with POVMs, CQ strategies with per-input unitaries, and non-signaling
//! behaviors.

use serde::{Deserialize, Serialize};

use super::{coordinate_digits, Game};
use crate::error::{Error, Result};
use crate::qmat::{hermitian_eigenvalues, identity, kron, max_abs_diff, unitarity_defect, CMat, CVec, Layout, Radix, State};

/// Tolerance on POVM completeness and unitarity.
pub const OPERATOR_TOL: f64 = 1e-9;

/// One deterministic answer table per player: `tables[j][x_j] = a_j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassicalStrategy {
    pub tables: Vec<Vec<usize>>,
}

impl ClassicalStrategy {
    pub fn check_shape(&self, g: &Game) -> Result<()> {
        if self.tables.len() != g.k() {
            return Err(Error::DimensionMismatch(format!("{} tables for {} players", self.tables.len(), g.k())));
        }
        for (j, t) in self.tables.iter().enumerate() {
            if t.len() != g.inputs()[j] {
                return Err(Error::DimensionMismatch(format!("player {j} table has {} rows, game has {} inputs", t.len(), g.inputs()[j])));
            }
            if let Some(a) = t.iter().find(|&&a| a >= g.outputs()[j]) {
                return Err(Error::DimensionMismatch(format!("player {j} answers {a}, alphabet has {}", g.outputs()[j])));
            }
        }
        Ok(())
    }

    pub fn answers(&self, x: &[usize]) -> Vec<usize> {
        x.iter().zip(&self.tables).map(|(&xj, t)| t[xj]).collect()
    }

    /// The same table played independently in each of `n` repetitions of `g`.
    pub fn tensor_power(&self, g: &Game, n: usize) -> Result<ClassicalStrategy> {
        self.check_shape(g)?;
        if n == 0 {
            return Err(Error::Invalid("need at least one repetition".into()));
        }
        let tables = self
            .tables
            .iter()
            .enumerate()
            .map(|(j, t)| {
                let (dx, da) = (g.inputs()[j], g.outputs()[j]);
                let size = dx.checked_pow(n as u32).ok_or_else(|| Error::Invalid("repeated input alphabet overflows".into()))?;
                Ok((0..size)
                    .map(|v| {
                        let answers: Vec<usize> = coordinate_digits(v, dx, n).into_iter().map(|x| t[x]).collect();
                        super::from_coordinate_digits(&answers, da)
                    })
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ClassicalStrategy { tables })
    }
}

/// Shared pure state on `E_0 ... E_{k-1}` and POVMs `povms[j][x_j][a_j]` on `E_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumStrategy {
    pub dims: Vec<usize>,
    pub state: CVec,
    pub povms: Vec<Vec<Vec<CMat>>>,
}

impl QuantumStrategy {
    pub fn check(&self, g: &Game) -> Result<()> {
        let k = g.k();
        if self.dims.len() != k || self.povms.len() != k {
            return Err(Error::DimensionMismatch(format!("strategy for {} players, game has {k}", self.povms.len())));
        }
        if self.state.len() != self.dims.iter().product::<usize>() {
            return Err(Error::DimensionMismatch("state length differs from product of dims".into()));
        }
        if (self.state.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::Invalid(format!("shared state has norm {}", self.state.norm())));
        }
        for j in 0..k {
            if self.povms[j].len() != g.inputs()[j] {
                return Err(Error::DimensionMismatch(format!("player {j} has {} POVMs", self.povms[j].len())));
            }
            for (x, povm) in self.povms[j].iter().enumerate() {
                if povm.len() != g.outputs()[j] {
                    return Err(Error::DimensionMismatch(format!("player {j} input {x}: {} outcomes", povm.len())));
                }
                check_povm(povm, self.dims[j]).map_err(|e| Error::Invariant(format!("player {j} input {x}: {e}")))?;
            }
        }
        Ok(())
    }

    /// The deterministic strategy `s` on one-dimensional registers.
    pub fn from_classical(g: &Game, s: &ClassicalStrategy) -> Result<QuantumStrategy> {
        s.check_shape(g)?;
        let povms = (0..g.k())
            .map(|j| {
                (0..g.inputs()[j])
                    .map(|x| (0..g.outputs()[j]).map(|a| identity(1) * crate::qmat::cr(f64::from(u8::from(s.tables[j][x] == a)))).collect())
                    .collect()
            })
            .collect();
        Ok(QuantumStrategy { dims: vec![1; g.k()], state: CVec::from_element(1, crate::qmat::cr(1.0)), povms })
    }
}

impl QuantumStrategy {
    /// `n` independent copies of this strategy, one per repetition: player j
    /// holds `E_j^(0) ⊗ ... ⊗ E_j^(n-1)` and measures coordinate-wise.
    /// Inputs and answers use the repeated game's digit order (coordinate 0
    /// most significant).
    pub fn tensor_power(&self, n: usize) -> Result<QuantumStrategy> {
        if n == 0 {
            return Err(Error::Invalid("need at least one repetition".into()));
        }
        let k = self.dims.len();
        let mut regs = Vec::with_capacity(n * k);
        let mut state = CVec::from_element(1, crate::qmat::cr(1.0));
        for i in 0..n {
            for j in 0..k {
                regs.push((format!("E{j}.{i}"), self.dims[j]));
            }
            state = crate::qmat::kron_vec(&state, &self.state);
        }
        let player_major: Vec<String> = (0..k).flat_map(|j| (0..n).map(move |i| format!("E{j}.{i}"))).collect();
        let state = State::pure(Layout::new(regs)?, state)?.reorder(&player_major)?;
        let state = state.vector().expect("pure").clone();
        let povms = (0..k)
            .map(|j| {
                let (nx, na) = (self.povms[j].len(), self.povms[j].first().map_or(0, Vec::len));
                (0..nx.pow(n as u32))
                    .map(|x| {
                        let xs = coordinate_digits(x, nx, n);
                        (0..na.pow(n as u32))
                            .map(|a| {
                                coordinate_digits(a, na, n)
                                    .iter()
                                    .zip(&xs)
                                    .fold(identity(1), |acc, (&ai, &xi)| kron(&acc, &self.povms[j][xi][ai]))
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Ok(QuantumStrategy { dims: self.dims.iter().map(|d| d.pow(n as u32)).collect(), state, povms })
    }
}

/// Each element PSD and the elements summing to the identity.
pub fn check_povm(povm: &[CMat], d: usize) -> Result<()> {
    let mut sum = CMat::zeros(d, d);
    for m in povm {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::DimensionMismatch(format!("POVM element is {}x{}, register has dimension {d}", m.nrows(), m.ncols())));
        }
        let low = hermitian_eigenvalues(m)?.last().copied().unwrap_or(0.0);
        if low < -OPERATOR_TOL {
            return Err(Error::NotPsd(low));
        }
        sum += m;
    }
    let defect = max_abs_diff(&sum, &identity(d));
    if defect > OPERATOR_TOL {
        return Err(Error::Invariant(format!("POVM sums to identity only within {defect:.3e}")));
    }
    Ok(())
}

/// Shared pure state on `E_0 A_0 E_1 A_1 ...` and unitaries `unitaries[j][x_j]` on `E_j A_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CqStrategy {
    pub e_dims: Vec<usize>,
    pub a_dims: Vec<usize>,
    pub state: CVec,
    pub unitaries: Vec<Vec<CMat>>,
}

impl CqStrategy {
    pub fn check(&self, inputs: &[usize], answer_dims: &[usize]) -> Result<()> {
        let k = inputs.len();
        if self.e_dims.len() != k || self.a_dims.len() != k || self.unitaries.len() != k {
            return Err(Error::DimensionMismatch(format!("strategy for {} players, game has {k}", self.unitaries.len())));
        }
        if self.a_dims != answer_dims {
            return Err(Error::DimensionMismatch(format!("answer dims {:?} vs game {:?}", self.a_dims, answer_dims)));
        }
        let d: usize = self.e_dims.iter().zip(&self.a_dims).map(|(e, a)| e * a).product();
        if self.state.len() != d {
            return Err(Error::DimensionMismatch(format!("state of length {} for dimension {d}", self.state.len())));
        }
        if (self.state.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::Invalid(format!("shared state has norm {}", self.state.norm())));
        }
        for j in 0..k {
            if self.unitaries[j].len() != inputs[j] {
                return Err(Error::DimensionMismatch(format!("player {j} has {} unitaries", self.unitaries[j].len())));
            }
            let dj = self.e_dims[j] * self.a_dims[j];
            for (x, u) in self.unitaries[j].iter().enumerate() {
                if u.nrows() != dj || u.ncols() != dj {
                    return Err(Error::DimensionMismatch(format!("player {j} input {x}: unitary is {}x{}", u.nrows(), u.ncols())));
                }
                let defect = unitarity_defect(u);
                if defect > OPERATOR_TOL {
                    return Err(Error::Invariant(format!("player {j} input {x}: unitarity defect {defect:.3e}")));
                }
            }
        }
        Ok(())
    }

    /// Register labels `E{j}`, `A{j}` in state order.
    pub fn labels(&self) -> Vec<(String, usize)> {
        (0..self.e_dims.len()).flat_map(|j| [(format!("E{j}"), self.e_dims[j]), (format!("A{j}"), self.a_dims[j])]).collect()
    }
}

/// Conditional distribution `p(a|x)`, stored at `x_index * |A| + a_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsBehavior {
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    pub p: Vec<f64>,
}

impl NsBehavior {
    pub fn num_inputs(&self) -> usize {
        self.inputs.iter().product()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.iter().product()
    }

    pub fn prob(&self, x: usize, a: usize) -> f64 {
        self.p[x * self.num_outputs() + a]
    }

    /// Most negative entry (0 if none).
    pub fn negativity(&self) -> f64 {
        self.p.iter().fold(0.0f64, |m, &v| m.max(-v))
    }

    /// Largest `|sum_a p(a|x) - 1|`.
    pub fn normalization_defect(&self) -> f64 {
        let na = self.num_outputs();
        (0..self.num_inputs()).map(|x| (self.p[x * na..(x + 1) * na].iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Marginal over the players in `keep` (a bitmask), indexed by
    /// (full x index, kept-answer index).
    fn marginal(&self, keep: u64) -> (Vec<f64>, usize) {
        let k = self.inputs.len();
        let kept: Vec<usize> = (0..k).filter(|j| keep >> j & 1 == 1).collect();
        let kr = Radix::new(&kept.iter().map(|&j| self.outputs[j]).collect::<Vec<_>>());
        let ra = Radix::new(&self.outputs);
        let (nx, na, nk) = (self.num_inputs(), self.num_outputs(), kr.size());
        let mut m = vec![0.0; nx * nk];
        for a in 0..na {
            let digits = ra.decode(a);
            let ai = kr.encode(&kept.iter().map(|&j| digits[j]).collect::<Vec<_>>());
            for x in 0..nx {
                m[x * nk + ai] += self.p[x * na + a];
            }
        }
        (m, nk)
    }

    /// Largest change in the marginal of players `keep` when only inputs
    /// outside `keep` vary.
    fn signaling(&self, keep: u64) -> f64 {
        let (m, nk) = self.marginal(keep);
        let rx = Radix::new(&self.inputs);
        let mut worst = 0.0f64;
        for x in 0..self.num_inputs() {
            let digits = rx.decode(x);
            // Compare against the representative with all free inputs set to 0.
            let rep: Vec<usize> = digits.iter().enumerate().map(|(j, &v)| if keep >> j & 1 == 1 { v } else { 0 }).collect();
            let r = rx.encode(&rep);
            for a in 0..nk {
                worst = worst.max((m[x * nk + a] - m[r * nk + a]).abs());
            }
        }
        worst
    }

    /// Per-player constraints: the answer distribution of everyone but `j`
    /// does not depend on `x_j`.
    pub fn per_player_defect(&self) -> f64 {
        let k = self.inputs.len();
        let all = (1u64 << k) - 1;
        (0..k).map(|j| self.signaling(all & !(1 << j))).fold(0.0, f64::max)
    }

    /// Every subset form: the marginal of players `I` does not depend on `x_J`.
    pub fn subset_defect(&self) -> f64 {
        let k = self.inputs.len();
        (1..(1u64 << k) - 1).map(|keep| self.signaling(keep)).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::chsh;
    use rand::Rng;

    #[test]
    fn classical_tensor_power_wins_with_the_product_probability() {
        use std::sync::Arc;
        let g = Arc::new(chsh());
        let s = ClassicalStrategy { tables: vec![vec![0, 0], vec![0, 0]] };
        for n in 1..=3 {
            let rep = g.repeat(n).unwrap();
            let sn = s.tensor_power(&g, n).unwrap();
            let p = crate::values::evaluate_classical(&rep, &sn).unwrap();
            assert!((p - 0.75f64.powi(n as i32)).abs() < 1e-12, "n = {n}: {p}");
        }
    }

    fn pr_box() -> NsBehavior {
        // p(a,b|x,y) = 1/2 when a xor b = x and y.
        let mut p = vec![0.0; 16];
        for x in 0..4 {
            for a in 0..4 {
                if (a / 2 ^ a % 2) == (x / 2 & x % 2) {
                    p[x * 4 + a] = 0.5;
                }
            }
        }
        NsBehavior { inputs: vec![2, 2], outputs: vec![2, 2], p }
    }

    #[test]
    fn pr_box_is_non_signaling() {
        let b = pr_box();
        assert!(b.normalization_defect() < 1e-15);
        assert!(b.per_player_defect() < 1e-15);
        assert!(b.subset_defect() < 1e-15);
    }

    #[test]
    fn signaling_behavior_is_flagged() {
        // Bob outputs Alice's input.
        let mut p = vec![0.0; 16];
        for x in 0..4 {
            p[x * 4 + (x / 2)] = 1.0;
        }
        let b = NsBehavior { inputs: vec![2, 2], outputs: vec![2, 2], p };
        assert!(b.per_player_defect() > 0.5);
    }

    #[test]
    fn per_player_implies_subset_for_three_players() {
        // Mix random local deterministic behaviors with a 3-party PR-style
        // correlation; both are non-signaling.
        let mut rng = crate::qmat::random::rng_from_seed(3);
        for _ in 0..20 {
            let mut p = vec![0.0; 8 * 8];
            let w: f64 = rng.random();
            for x in 0..8usize {
                let (x0, x1, x2) = (x >> 2 & 1, x >> 1 & 1, x & 1);
                for a in 0..8usize {
                    let (a0, a1, a2) = (a >> 2 & 1, a >> 1 & 1, a & 1);
                    if a0 ^ a1 ^ a2 == (x0 & x1) ^ x2 {
                        p[x * 8 + a] += w * 0.25;
                    }
                    if a0 == x0 && a1 == 1 - x1 && a2 == 0 {
                        p[x * 8 + a] += 1.0 - w;
                    }
                }
            }
            let b = NsBehavior { inputs: vec![2; 3], outputs: vec![2; 3], p };
            assert!(b.per_player_defect() < 1e-12);
            assert!(b.subset_defect() < 1e-12);
        }
    }

    #[test]
    fn classical_embedding_is_a_valid_quantum_strategy() {
        let g = chsh();
        let s = ClassicalStrategy { tables: vec![vec![0, 1], vec![1, 1]] };
        let q = QuantumStrategy::from_classical(&g, &s).unwrap();
        q.check(&g).unwrap();
        assert!(ClassicalStrategy { tables: vec![vec![0, 2], vec![1, 1]] }.check_shape(&g).is_err());
    }

    #[test]
    fn povm_checks() {
        let p0 = crate::qmat::diag(&[1.0, 0.0]);
        let p1 = crate::qmat::diag(&[0.0, 1.0]);
        assert!(check_povm(&[p0.clone(), p1], 2).is_ok());
        assert!(check_povm(&[p0.clone(), p0.clone()], 2).is_err());
        assert!(check_povm(&[crate::qmat::diag(&[1.5, 1.0]), crate::qmat::diag(&[-0.5, 0.0])], 2).is_err());
    }
}
