//! JSON file formats for games and strategies.
//!
//! A game file looks like
//! `{"k": 2, "inputs": [2, 2], "outputs": [2, 2], "mu": {"product": [[.5, .5], [.5, .5]]},
//!   "predicate": {"accept": [[x0, x1, a0, a1], ...]}}`
//! or with `"predicate": {"dense": "<base64>"}`, a bitmap over predicate
//! indices (x digits then a digits, player 0 most significant), least
//! significant bit of each byte first. Complex numbers are `[re, im]` pairs
//! and matrices are lists of rows.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{ClassicalStrategy, CqGame, CqStrategy, Game, InputDist, NsBehavior, QuantumStrategy, DENSE_LIMIT};
use crate::error::{Error, Result};
use crate::qmat::{c, CMat, CVec, Radix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredicateFile {
    Accept(Vec<Vec<usize>>),
    Dense(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameFile {
    pub k: usize,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    pub mu: InputDist,
    pub predicate: PredicateFile,
}

impl GameFile {
    pub fn into_game(self) -> Result<Game> {
        if self.k != self.inputs.len() {
            return Err(Error::DimensionMismatch(format!("k = {} but {} input alphabets", self.k, self.inputs.len())));
        }
        match self.predicate {
            PredicateFile::Accept(t) => Game::from_accepted(self.inputs, self.outputs, self.mu, &t),
            PredicateFile::Dense(b) => {
                let bytes = STANDARD.decode(b.trim()).map_err(|e| Error::Invalid(format!("bad base64 bitmap: {e}")))?;
                Game::from_bitmap(self.inputs, self.outputs, self.mu, &bytes)
            }
        }
    }

    /// Dense bitmap for small tables, accept list otherwise.
    pub fn from_game(g: &Game) -> Result<GameFile> {
        let idx = g.accepted_indices()?;
        let total = g.num_inputs() * g.num_outputs();
        let predicate = if total < DENSE_LIMIT {
            let mut bytes = vec![0u8; (total as usize).div_ceil(8)];
            for t in idx {
                bytes[(t / 8) as usize] |= 1 << (t % 8);
            }
            PredicateFile::Dense(STANDARD.encode(bytes))
        } else {
            let mut dims = g.inputs().to_vec();
            dims.extend(g.outputs());
            let r = Radix::new(&dims);
            PredicateFile::Accept(idx.into_iter().map(|t| r.decode(t as usize)).collect())
        };
        Ok(GameFile { k: g.k(), inputs: g.inputs().to_vec(), outputs: g.outputs().to_vec(), mu: g.mu().clone(), predicate })
    }

    pub fn to_accept_list(g: &Game) -> Result<GameFile> {
        let mut dims = g.inputs().to_vec();
        dims.extend(g.outputs());
        let r = Radix::new(&dims);
        let accept = g.accepted_indices()?.into_iter().map(|t| r.decode(t as usize)).collect();
        Ok(GameFile {
            k: g.k(),
            inputs: g.inputs().to_vec(),
            outputs: g.outputs().to_vec(),
            mu: g.mu().clone(),
            predicate: PredicateFile::Accept(accept),
        })
    }
}

pub type ComplexPair = [f64; 2];
pub type MatrixFile = Vec<Vec<ComplexPair>>;

pub fn matrix_to_file(m: &CMat) -> MatrixFile {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|cc| [m[(r, cc)].re, m[(r, cc)].im]).collect()).collect()
}

pub fn matrix_from_file(m: &MatrixFile) -> Result<CMat> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if m.iter().any(|r| r.len() != cols) {
        return Err(Error::DimensionMismatch("ragged matrix".into()));
    }
    Ok(CMat::from_fn(rows, cols, |r, cc| c(m[r][cc][0], m[r][cc][1])))
}

pub fn vector_to_file(v: &CVec) -> Vec<ComplexPair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn vector_from_file(v: &[ComplexPair]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|p| c(p[0], p[1])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CqGameFile {
    pub k: usize,
    pub inputs: Vec<usize>,
    pub answer_dims: Vec<usize>,
    pub mu: InputDist,
    /// One operator per joint input, in joint-input order.
    pub verification: Vec<MatrixFile>,
}

impl CqGameFile {
    pub fn into_game(self) -> Result<CqGame> {
        if self.k != self.inputs.len() {
            return Err(Error::DimensionMismatch(format!("k = {} but {} input alphabets", self.k, self.inputs.len())));
        }
        let vs = self.verification.iter().map(matrix_from_file).collect::<Result<Vec<_>>>()?;
        CqGame::new(self.inputs, self.answer_dims, self.mu, vs)
    }

    pub fn from_game(g: &CqGame) -> CqGameFile {
        let r = Radix::new(g.inputs());
        CqGameFile {
            k: g.k(),
            inputs: g.inputs().to_vec(),
            answer_dims: g.answer_dims().to_vec(),
            mu: g.mu().clone(),
            verification: (0..g.num_inputs()).map(|x| matrix_to_file(&g.verification(&r.decode(x)))).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumStrategyFile {
    pub dims: Vec<usize>,
    pub state: Vec<ComplexPair>,
    /// `povms[j][x_j][a_j]`.
    pub povms: Vec<Vec<Vec<MatrixFile>>>,
}

impl From<&QuantumStrategy> for QuantumStrategyFile {
    fn from(s: &QuantumStrategy) -> Self {
        QuantumStrategyFile {
            dims: s.dims.clone(),
            state: vector_to_file(&s.state),
            povms: s.povms.iter().map(|p| p.iter().map(|q| q.iter().map(matrix_to_file).collect()).collect()).collect(),
        }
    }
}

impl QuantumStrategyFile {
    pub fn into_strategy(self) -> Result<QuantumStrategy> {
        let povms = self
            .povms
            .iter()
            .map(|p| p.iter().map(|q| q.iter().map(matrix_from_file).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(QuantumStrategy { dims: self.dims, state: vector_from_file(&self.state), povms })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CqStrategyFile {
    pub e_dims: Vec<usize>,
    pub a_dims: Vec<usize>,
    pub state: Vec<ComplexPair>,
    pub unitaries: Vec<Vec<MatrixFile>>,
}

impl From<&CqStrategy> for CqStrategyFile {
    fn from(s: &CqStrategy) -> Self {
        CqStrategyFile {
            e_dims: s.e_dims.clone(),
            a_dims: s.a_dims.clone(),
            state: vector_to_file(&s.state),
            unitaries: s.unitaries.iter().map(|u| u.iter().map(matrix_to_file).collect()).collect(),
        }
    }
}

impl CqStrategyFile {
    pub fn into_strategy(self) -> Result<CqStrategy> {
        let unitaries = self
            .unitaries
            .iter()
            .map(|u| u.iter().map(matrix_from_file).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(CqStrategy { e_dims: self.e_dims, a_dims: self.a_dims, state: vector_from_file(&self.state), unitaries })
    }
}

/// Any strategy, tagged by its class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "lowercase")]
pub enum StrategyFile {
    Classical(ClassicalStrategy),
    Quantum(QuantumStrategyFile),
    Cq(CqStrategyFile),
    Ns(NsBehavior),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{build_agreement_game, chsh};

    fn same_predicate(a: &Game, b: &Game) -> bool {
        a.accepted_indices().unwrap() == b.accepted_indices().unwrap()
    }

    #[test]
    fn dense_round_trip() {
        let g = build_agreement_game(3).unwrap();
        let f = GameFile::from_game(&g).unwrap();
        assert!(matches!(f.predicate, PredicateFile::Dense(_)));
        let text = serde_json::to_string(&f).unwrap();
        let back: GameFile = serde_json::from_str(&text).unwrap();
        let h = back.into_game().unwrap();
        assert!(same_predicate(&g, &h));
        assert_eq!(g.mu(), h.mu());
    }

    #[test]
    fn accept_list_round_trip() {
        let g = chsh();
        let f = GameFile::to_accept_list(&g).unwrap();
        let PredicateFile::Accept(ref list) = f.predicate else { panic!() };
        assert_eq!(list.len(), 8);
        assert!(list.contains(&vec![1, 1, 0, 1]));
        let h = f.into_game().unwrap();
        assert!(same_predicate(&g, &h));
    }

    #[test]
    fn bitmap_is_lsb_first() {
        // One player, one input, two answers: accept only a = 0 -> bit 0.
        let text = r#"{"k":1,"inputs":[1],"outputs":[2],"mu":{"product":[[1.0]]},"predicate":{"dense":"AQ=="}}"#;
        let g: GameFile = serde_json::from_str(text).unwrap();
        let g = g.into_game().unwrap();
        assert!(g.accepts(&[0], &[0]));
        assert!(!g.accepts(&[0], &[1]));
    }

    #[test]
    fn explicit_mu_parses() {
        let text = r#"{"k":1,"inputs":[2],"outputs":[1],"mu":{"explicit":[0.25,0.75]},"predicate":{"accept":[[1,0]]}}"#;
        let g: GameFile = serde_json::from_str(text).unwrap();
        let g = g.into_game().unwrap();
        assert!(!g.is_free());
        assert!(g.accepts(&[1], &[0]) && !g.accepts(&[0], &[0]));
    }

    #[test]
    fn cq_game_round_trip() {
        let g = CqGame::from_classical(&chsh()).unwrap();
        let f = CqGameFile::from_game(&g);
        let text = serde_json::to_string(&f).unwrap();
        let back: CqGameFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_game().unwrap(), g);
    }

    #[test]
    fn strategy_file_is_tagged() {
        let s = StrategyFile::Classical(ClassicalStrategy { tables: vec![vec![0, 1]] });
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"class\":\"classical\""));
        let back: StrategyFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }
}
