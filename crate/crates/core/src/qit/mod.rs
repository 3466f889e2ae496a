//! Information measures on states: fidelity, squared Bures distance,
//! entropies, relative entropies and mutual informations. Logs are base 2.

pub mod battery;
mod rounding;

pub use rounding::{strategy_rounding, RoundingOutcome};

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::qmat::{
    self, cr, hermitian_eig, hermitian_eigenvalues, CMat, State, StateBody, PSD_SLACK, ZERO_CUTOFF,
};

/// A real number or `+inf`, the value of a divergence under support violation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInfinity,
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// As an `f64`, with `+inf` mapped to `f64::INFINITY`.
    pub fn value(self) -> f64 {
        match self {
            ExtReal::Finite(v) => v,
            ExtReal::PosInfinity => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInfinity => None,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInfinity => write!(f, "+inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::PosInfinity => s.serialize_str("+inf"),
        }
    }
}

fn same_shape(a: &CMat, b: &CMat) -> Result<()> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "operators of shape {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// `F(rho, sigma) = || sqrt(rho) sqrt(sigma) ||_1`, clamped to at most 1.
pub fn fidelity(rho: &CMat, sigma: &CMat) -> Result<f64> {
    same_shape(rho, sigma)?;
    let a = qmat::sqrt_psd(rho)?;
    let b = qmat::sqrt_psd(sigma)?;
    Ok(qmat::trace_norm(&(a * b)).min(1.0))
}

/// `|<psi|phi>|` for pure states.
pub fn fidelity_pure(psi: &State, phi: &State) -> Result<f64> {
    Ok(psi.inner(phi)?.norm().min(1.0))
}

/// Fidelity between states, using the overlap shortcut when both are pure.
pub fn state_fidelity(a: &State, b: &State) -> Result<f64> {
    if a.layout() != b.layout() {
        return Err(Error::DimensionMismatch("fidelity needs identical layouts".into()));
    }
    match (a.body(), b.body()) {
        (StateBody::Pure(_), StateBody::Pure(_)) => fidelity_pure(a, b),
        _ => fidelity(&a.density(), &b.density()),
    }
}

/// Squared Bures distance `K = 1 - F`.
pub fn bures_sq(rho: &CMat, sigma: &CMat) -> Result<f64> {
    Ok((1.0 - fidelity(rho, sigma)?).max(0.0))
}

pub fn state_bures_sq(a: &State, b: &State) -> Result<f64> {
    Ok((1.0 - state_fidelity(a, b)?).max(0.0))
}

/// Von Neumann entropy in bits.
pub fn entropy(rho: &CMat) -> Result<f64> {
    let vals = hermitian_eigenvalues(rho)?;
    Ok(spectrum_entropy(&vals))
}

fn spectrum_entropy(vals: &[f64]) -> f64 {
    vals.iter().filter(|&&v| v > ZERO_CUTOFF).map(|&v| -v * v.log2()).sum::<f64>().max(0.0)
}

/// Entropy of the marginal on `labels` of the normalized state.
///
/// For pure states the smaller side of the cut is diagonalized.
pub fn entropy_of<S: AsRef<str>>(s: &State, labels: &[S]) -> Result<f64> {
    let s = s.normalized()?;
    let pos = s.layout().positions(labels)?;
    if pos.is_empty() {
        return Ok(0.0);
    }
    let keep_dim: usize = pos.iter().map(|&p| s.layout().registers()[p].1).product();
    if s.is_pure() {
        let rest = s.layout().complement(labels);
        if rest.is_empty() {
            return Ok(0.0);
        }
        let rest_dim = s.layout().dim() / keep_dim;
        if rest_dim < keep_dim {
            return entropy(&s.partial_trace(&rest)?.density());
        }
    }
    entropy(&s.partial_trace(labels)?.density())
}

/// Weight of `rho` outside the support of `sigma`.
fn off_support_weight(rho: &CMat, sigma_vals: &[f64], sigma_vecs: &CMat) -> f64 {
    let mut w = 0.0;
    for (j, &v) in sigma_vals.iter().enumerate() {
        if v.abs() < ZERO_CUTOFF {
            let col = sigma_vecs.column(j);
            w += (col.adjoint() * rho * col)[(0, 0)].re;
        }
    }
    w
}

/// `S(rho || sigma) = tr rho (log rho - log sigma)`, `+inf` off support.
pub fn relative_entropy(rho: &CMat, sigma: &CMat) -> Result<ExtReal> {
    same_shape(rho, sigma)?;
    let (sv, su) = hermitian_eig(sigma)?;
    if sv.last().copied().unwrap_or(0.0) < -PSD_SLACK {
        return Err(Error::NotPsd(*sv.last().unwrap()));
    }
    if off_support_weight(rho, &sv, &su) > PSD_SLACK {
        return Ok(ExtReal::PosInfinity);
    }
    let rv = hermitian_eigenvalues(rho)?;
    if rv.last().copied().unwrap_or(0.0) < -PSD_SLACK {
        return Err(Error::NotPsd(*rv.last().unwrap()));
    }
    let neg_h = -spectrum_entropy(&rv);
    Ok(ExtReal::Finite(neg_h - log_overlap(rho, &sv, &su)))
}

/// `tr(rho log sigma) = sum_j log(s_j) <v_j| rho |v_j>` over the support.
fn log_overlap(rho: &CMat, sigma_vals: &[f64], sigma_vecs: &CMat) -> f64 {
    let mut cross = 0.0;
    for (j, &v) in sigma_vals.iter().enumerate() {
        if v.abs() >= ZERO_CUTOFF {
            let col = sigma_vecs.column(j);
            cross += v.log2() * (col.adjoint() * rho * col)[(0, 0)].re;
        }
    }
    cross
}

/// `S(rho^{AB} || sigma_a ⊗ sigma_b)` for the marginal of `s` on `a ∪ b`,
/// using `log(sigma_a ⊗ sigma_b) = log sigma_a ⊗ id + id ⊗ log sigma_b`.
/// Never forms the product, so large `b` stays cheap when `s` is pure.
pub fn relative_entropy_to_product<S: AsRef<str>, T: AsRef<str>>(s: &State, a: &[S], b: &[T], sigma_a: &CMat, sigma_b: &CMat) -> Result<ExtReal> {
    let s = s.normalized()?;
    let rho_a = s.partial_trace(a)?.density();
    let rho_b = s.partial_trace(b)?.density();
    same_shape(&rho_a, sigma_a)?;
    same_shape(&rho_b, sigma_b)?;
    let mut cross = 0.0;
    for (rho, sigma) in [(&rho_a, sigma_a), (&rho_b, sigma_b)] {
        let (sv, su) = hermitian_eig(sigma)?;
        if off_support_weight(rho, &sv, &su) > PSD_SLACK {
            return Ok(ExtReal::PosInfinity);
        }
        cross += log_overlap(rho, &sv, &su);
    }
    let mut ab: Vec<&str> = a.iter().map(|x| x.as_ref()).collect();
    ab.extend(b.iter().map(|x| x.as_ref()));
    Ok(ExtReal::Finite(-entropy_of(&s, &ab)? - cross))
}

/// `S_inf(rho || sigma) = log2 lambda_max(sigma^{-1/2} rho sigma^{-1/2})`,
/// `+inf` off support.
pub fn relative_min_entropy(rho: &CMat, sigma: &CMat) -> Result<ExtReal> {
    same_shape(rho, sigma)?;
    let (sv, su) = hermitian_eig(sigma)?;
    if off_support_weight(rho, &sv, &su) > PSD_SLACK {
        return Ok(ExtReal::PosInfinity);
    }
    let inv: Vec<f64> = sv.iter().map(|&v| if v.abs() < ZERO_CUTOFF { 0.0 } else { 1.0 / v.sqrt() }).collect();
    let s = qmat::from_spectrum(&inv, &su);
    let sandwich = &s * rho * &s;
    let sandwich = (&sandwich + sandwich.adjoint()) * cr(0.5);
    let top = hermitian_eigenvalues(&sandwich)?.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Ok(ExtReal::Finite(f64::NEG_INFINITY));
    }
    Ok(ExtReal::Finite(top.log2()))
}

/// `I(A:B) = H(A) + H(B) - H(AB)` on the normalized state.
pub fn mutual_information<S: AsRef<str>, T: AsRef<str>>(s: &State, a: &[S], b: &[T]) -> Result<f64> {
    let a: Vec<&str> = a.iter().map(|x| x.as_ref()).collect();
    let b: Vec<&str> = b.iter().map(|x| x.as_ref()).collect();
    if let Some(l) = a.iter().find(|l| b.contains(l)) {
        return Err(Error::LabelCollision(l.to_string()));
    }
    let mut ab = a.clone();
    ab.extend(b.iter().copied());
    let i = entropy_of(s, &a)? + entropy_of(s, &b)? - entropy_of(s, &ab)?;
    Ok(i.max(0.0))
}

/// `sum_p H(part_p) - H(union)`.
pub fn multipartite_mutual_information<S: AsRef<str>>(s: &State, parts: &[Vec<S>]) -> Result<f64> {
    let mut all: Vec<&str> = Vec::new();
    let mut sum = 0.0;
    for p in parts {
        let labels: Vec<&str> = p.iter().map(|x| x.as_ref()).collect();
        for l in &labels {
            if all.contains(l) {
                return Err(Error::LabelCollision(l.to_string()));
            }
        }
        all.extend(labels.iter().copied());
        sum += entropy_of(s, &labels)?;
    }
    Ok((sum - entropy_of(s, &all)?).max(0.0))
}

/// The unitary on `local` that best rotates `phi` towards `phi_x`.
///
/// Writing both pure states as matrices across the cut `local | rest`,
/// `<phi_x| U (x) id |phi> = tr(U B A^dag)`, so the polar part of `B A^dag`
/// attains the fidelity of the two `rest` marginals.
pub fn uhlmann_unitary<S: AsRef<str>>(phi_x: &State, phi: &State, local: &[S]) -> Result<CMat> {
    if !phi_x.is_pure() || !phi.is_pure() {
        return Err(Error::Invalid("Uhlmann unitary needs pure states".into()));
    }
    if phi_x.layout() != phi.layout() {
        return Err(Error::DimensionMismatch("Uhlmann unitary needs identical layouts".into()));
    }
    let a = phi_x.cut_matrix(local)?;
    let b = phi.cut_matrix(local)?;
    qmat::polar_unitary(&(b * a.adjoint()))
}

/// Quantum Raz check: returns `(sum_i I(X_i : A)_phi, 2 S(phi || psi))` on
/// the registers `coords` and `a`.
///
/// `psi` must be a product of its `X_i` marginals and its `A` marginal.
pub fn raz_check<S: AsRef<str>, T: AsRef<str>>(phi: &State, psi: &State, coords: &[S], a: &[T]) -> Result<(f64, ExtReal)> {
    let mut all: Vec<&str> = coords.iter().map(|x| x.as_ref()).collect();
    all.extend(a.iter().map(|x| x.as_ref()));
    let psi_r = psi.normalized()?.partial_trace(&all)?;
    // Precondition: psi^{XA} = (x)_i psi^{X_i} (x) psi^A, in layout order.
    let order: Vec<String> = psi_r.layout().labels().iter().map(|s| s.to_string()).collect();
    let mut product: Option<CMat> = None;
    let mut group_a_done = false;
    let a_set: Vec<&str> = a.iter().map(|x| x.as_ref()).collect();
    let mut factors: Vec<Vec<String>> = Vec::new();
    for l in &order {
        if a_set.contains(&l.as_str()) {
            if !group_a_done {
                factors.push(a_set.iter().map(|s| s.to_string()).collect());
                group_a_done = true;
            }
        } else {
            factors.push(vec![l.clone()]);
        }
    }
    let reordered_labels: Vec<String> = factors.iter().flatten().cloned().collect();
    let psi_o = psi_r.reorder(&reordered_labels)?;
    for f in &factors {
        let m = psi_o.partial_trace(f)?.reorder(f)?.density();
        product = Some(match product {
            None => m,
            Some(p) => p.kronecker(&m),
        });
    }
    let product = product.unwrap_or_else(|| CMat::identity(1, 1));
    if qmat::max_abs_diff(&product, &psi_o.density()) > 1e-9 {
        return Err(Error::Invalid("reference state is not a product over the coordinates and A".into()));
    }
    let mut lhs = 0.0;
    for x in coords {
        lhs += mutual_information(phi, &[x.as_ref()], a)?;
    }
    let phi_o = phi.normalized()?.partial_trace(&all)?.reorder(&reordered_labels)?;
    let s = relative_entropy(&phi_o.density(), &psi_o.density())?;
    let rhs = match s {
        ExtReal::Finite(v) => ExtReal::Finite(2.0 * v),
        ExtReal::PosInfinity => ExtReal::PosInfinity,
    };
    Ok((lhs, rhs))
}

/// Classical distributions as diagonal matrices helpers.
pub mod classical {
    use super::ExtReal;

    pub fn entropy(p: &[f64]) -> f64 {
        p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
    }

    /// `S(p || q)` in bits.
    pub fn kl(p: &[f64], q: &[f64]) -> ExtReal {
        let mut s = 0.0;
        for (&a, &b) in p.iter().zip(q) {
            if a <= 0.0 {
                continue;
            }
            if b <= 0.0 {
                return ExtReal::PosInfinity;
            }
            s += a * (a / b).log2();
        }
        ExtReal::Finite(s.max(0.0))
    }

    pub fn fidelity(p: &[f64], q: &[f64]) -> f64 {
        p.iter().zip(q).map(|(&a, &b)| (a.max(0.0) * b.max(0.0)).sqrt()).sum::<f64>().min(1.0)
    }

    pub fn bures_sq(p: &[f64], q: &[f64]) -> f64 {
        (1.0 - fidelity(p, q)).max(0.0)
    }

    /// `S_inf(p || q) = log2 max p/q`.
    pub fn max_divergence(p: &[f64], q: &[f64]) -> ExtReal {
        let mut m = 0.0f64;
        for (&a, &b) in p.iter().zip(q) {
            if a <= 0.0 {
                continue;
            }
            if b <= 0.0 {
                return ExtReal::PosInfinity;
            }
            m = m.max(a / b);
        }
        ExtReal::Finite(m.log2())
    }

    /// Total variation distance, half the L1 norm.
    pub fn tv(p: &[f64], q: &[f64]) -> f64 {
        0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}
