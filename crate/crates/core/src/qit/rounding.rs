//! Rounding a shared state with classical input registers into a strategy.
//!
//! Each player gets one unitary per value of its input register, built with
//! [`uhlmann_unitary`] from the state conditioned on that value. Applying the
//! players' unitaries for a joint input `x` should land close to the state
//! conditioned on `x`; the average squared Bures distance is the rounding
//! error, which is bounded by the players' mutual informations with the rest.

use serde::Serialize;

use super::{mutual_information, uhlmann_unitary};
use crate::error::{Error, Result};
use crate::qmat::{CMat, Radix, State};

#[derive(Debug, Clone, Serialize)]
pub struct RoundingOutcome {
    /// `E_x K(phi_x, U_x phi U_x^dag)` over the joint input distribution of `phi`.
    pub avg_bures: f64,
    /// Per player, `E_u K(phi_u, U_u phi U_u^dag)` over its own input.
    pub per_player_bures: Vec<f64>,
    /// Per player, `I(X_j : everything outside player j's registers)`.
    pub info: Vec<f64>,
    /// `4 k sum_j info[j]`.
    pub bound: f64,
    #[serde(skip)]
    pub unitaries: Vec<Vec<CMat>>,
}

fn conditioned(phi: &State, on: &[&str], values: &[usize]) -> Result<Option<(f64, State)>> {
    let p = phi.project(on, values)?;
    match p.post {
        None => Ok(None),
        Some(post) => Ok(Some((p.prob, post.normalized()?))),
    }
}

/// Round `phi` using per-player input registers `inputs[j]` and acted-on
/// register groups `locals[j]` (each must contain `inputs[j]`).
pub fn strategy_rounding<S: AsRef<str>>(phi: &State, inputs: &[S], locals: &[Vec<String>]) -> Result<RoundingOutcome> {
    if !phi.is_pure() {
        return Err(Error::Invalid("rounding needs a pure state".into()));
    }
    let phi = phi.normalized()?;
    let k = inputs.len();
    if locals.len() != k {
        return Err(Error::DimensionMismatch("one local register group per player".into()));
    }
    let inputs: Vec<&str> = inputs.iter().map(|s| s.as_ref()).collect();
    for (j, group) in locals.iter().enumerate() {
        if !group.iter().any(|l| l == inputs[j]) {
            return Err(Error::Invalid(format!("player {j}'s registers do not include its input `{}`", inputs[j])));
        }
        for other in &locals[j + 1..] {
            if let Some(l) = group.iter().find(|l| other.contains(l)) {
                return Err(Error::LabelCollision(l.clone()));
            }
        }
    }
    let dims: Vec<usize> = inputs.iter().map(|l| phi.layout().dim_of(l)).collect::<Result<_>>()?;

    let mut unitaries = Vec::with_capacity(k);
    let mut per_player_bures = Vec::with_capacity(k);
    let mut info = Vec::with_capacity(k);
    for j in 0..k {
        let local = &locals[j];
        let d_local: usize = local.iter().map(|l| phi.layout().dim_of(l)).collect::<Result<Vec<_>>>()?.iter().product();
        let mut us = Vec::with_capacity(dims[j]);
        let mut avg = 0.0;
        for u in 0..dims[j] {
            match conditioned(&phi, &[inputs[j]], &[u])? {
                None => us.push(CMat::identity(d_local, d_local)),
                Some((p, phi_u)) => {
                    let w = uhlmann_unitary(&phi_u, &phi, local)?;
                    let moved = phi.apply_local(&w, local)?;
                    avg += p * (1.0 - phi_u.inner(&moved)?.norm()).max(0.0);
                    us.push(w);
                }
            }
        }
        let rest = phi.layout().complement(local);
        info.push(mutual_information(&phi, &[inputs[j]], &rest)?);
        per_player_bures.push(avg);
        unitaries.push(us);
    }

    let radix = Radix::new(&dims);
    let joint = phi.distribution(&inputs)?;
    let mut avg_bures = 0.0;
    for (idx, &p) in joint.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        let x = radix.decode(idx);
        let (_, phi_x) = conditioned(&phi, &inputs, &x)?.expect("positive probability");
        let mut moved = phi.clone();
        for j in 0..k {
            moved = moved.apply_local(&unitaries[j][x[j]], &locals[j])?;
        }
        avg_bures += p * (1.0 - phi_x.inner(&moved)?.norm()).max(0.0);
    }
    let bound = 4.0 * k as f64 * info.iter().sum::<f64>();
    Ok(RoundingOutcome { avg_bures, per_player_bures, info, bound, unitaries })
}
