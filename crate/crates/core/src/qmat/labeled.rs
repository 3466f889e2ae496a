use std::collections::HashSet;

use crate::error::{Error, Result};

use super::{cr, hermiticity_defect, hermitian_eigenvalues, CMat, CVec, PSD_SLACK};

/// Mixed-radix index arithmetic, first digit most significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Radix {
    dims: Vec<usize>,
    strides: Vec<usize>,
}

impl Radix {
    pub fn new(dims: &[usize]) -> Self {
        let mut strides = vec![1; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        Radix { dims: dims.to_vec(), strides }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn size(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn stride(&self, pos: usize) -> usize {
        self.strides[pos]
    }

    pub fn encode(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    pub fn decode(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (i, s) in self.strides.iter().enumerate() {
            out[i] = idx / s;
            idx %= s;
        }
        out
    }

    pub fn digit(&self, idx: usize, pos: usize) -> usize {
        (idx / self.strides[pos]) % self.dims[pos]
    }
}

/// Ordered named registers with their local dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    regs: Vec<(String, usize)>,
}

/// How a full index splits into a selected-register index and the rest.
pub(crate) struct Split {
    pub sel_of: Vec<usize>,
    pub rest_of: Vec<usize>,
    pub d_sel: usize,
    pub d_rest: usize,
}

impl Layout {
    pub fn new<S: Into<String>>(regs: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let regs: Vec<(String, usize)> = regs.into_iter().map(|(l, d)| (l.into(), d)).collect();
        let mut seen = HashSet::new();
        for (label, dim) in &regs {
            if *dim == 0 {
                return Err(Error::Invalid(format!("register `{label}` has dimension 0")));
            }
            if !seen.insert(label.clone()) {
                return Err(Error::LabelCollision(label.clone()));
            }
        }
        Ok(Layout { regs })
    }

    pub fn single(label: &str, dim: usize) -> Self {
        Layout { regs: vec![(label.to_string(), dim)] }
    }

    pub fn len(&self) -> usize {
        self.regs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.regs.iter().map(|(_, d)| d).product()
    }

    pub fn registers(&self) -> &[(String, usize)] {
        &self.regs
    }

    pub fn labels(&self) -> Vec<&str> {
        self.regs.iter().map(|(l, _)| l.as_str()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.regs.iter().map(|(_, d)| *d).collect()
    }

    pub fn radix(&self) -> Radix {
        Radix::new(&self.dims())
    }

    pub fn contains(&self, label: &str) -> bool {
        self.regs.iter().any(|(l, _)| l == label)
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.regs
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.regs[self.position(label)?].1)
    }

    /// Positions of `labels`, in the order given. Rejects unknown or repeated labels.
    pub fn positions<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(labels.len());
        for l in labels {
            let l = l.as_ref();
            if !seen.insert(l) {
                return Err(Error::LabelCollision(l.to_string()));
            }
            out.push(self.position(l)?);
        }
        Ok(out)
    }

    /// Concatenation; labels must be disjoint.
    pub fn concat(&self, other: &Layout) -> Result<Layout> {
        for (l, _) in &other.regs {
            if self.contains(l) {
                return Err(Error::LabelCollision(l.clone()));
            }
        }
        let mut regs = self.regs.clone();
        regs.extend(other.regs.iter().cloned());
        Ok(Layout { regs })
    }

    /// Layout made of the registers at `positions`, in that order.
    pub fn select(&self, positions: &[usize]) -> Layout {
        Layout { regs: positions.iter().map(|&p| self.regs[p].clone()).collect() }
    }

    /// Labels not in `labels`, in layout order.
    pub fn complement<S: AsRef<str>>(&self, labels: &[S]) -> Vec<String> {
        let set: HashSet<&str> = labels.iter().map(|s| s.as_ref()).collect();
        self.regs.iter().filter(|(l, _)| !set.contains(l.as_str())).map(|(l, _)| l.clone()).collect()
    }

    /// Positions sorted into layout order.
    pub fn positions_in_order<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        let mut p = self.positions(labels)?;
        p.sort_unstable();
        Ok(p)
    }

    pub(crate) fn split(&self, sel: &[usize]) -> Split {
        let radix = self.radix();
        let in_sel: HashSet<usize> = sel.iter().copied().collect();
        let rest: Vec<usize> = (0..self.regs.len()).filter(|p| !in_sel.contains(p)).collect();
        let sel_radix = Radix::new(&sel.iter().map(|&p| self.regs[p].1).collect::<Vec<_>>());
        let rest_radix = Radix::new(&rest.iter().map(|&p| self.regs[p].1).collect::<Vec<_>>());
        let n = radix.size();
        let mut sel_of = vec![0; n];
        let mut rest_of = vec![0; n];
        // Walk contributions per register instead of decoding every index.
        let mut sel_contrib = vec![0usize; self.regs.len()];
        let mut rest_contrib = vec![0usize; self.regs.len()];
        for (k, &p) in sel.iter().enumerate() {
            sel_contrib[p] = sel_radix.stride(k);
        }
        for (k, &p) in rest.iter().enumerate() {
            rest_contrib[p] = rest_radix.stride(k);
        }
        for idx in 0..n {
            let mut s = 0;
            let mut r = 0;
            let mut rem = idx;
            for p in 0..self.regs.len() {
                let st = radix.stride(p);
                let d = rem / st;
                rem %= st;
                s += d * sel_contrib[p];
                r += d * rest_contrib[p];
            }
            sel_of[idx] = s;
            rest_of[idx] = r;
        }
        Split { sel_of, rest_of, d_sel: sel_radix.size(), d_rest: rest_radix.size() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateBody {
    Pure(CVec),
    Mixed(CMat),
}

/// A pure or mixed state over a [`Layout`]. May be subnormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    layout: Layout,
    body: StateBody,
}

/// Result of projecting a state onto a computational-basis event.
#[derive(Debug, Clone)]
pub struct Projection {
    pub prob: f64,
    /// Unnormalized post-projection state; `None` when the event has
    /// probability zero and the conditioned state is undefined.
    pub post: Option<State>,
}

impl State {
    pub fn pure(layout: Layout, v: CVec) -> Result<Self> {
        if v.len() != layout.dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for layout of dimension {}",
                v.len(),
                layout.dim()
            )));
        }
        let n2 = v.norm_squared();
        if n2 > 1.0 + PSD_SLACK || n2 == 0.0 {
            return Err(Error::Invalid(format!("pure state has squared norm {n2}")));
        }
        Ok(State { layout, body: StateBody::Pure(v) })
    }

    pub fn mixed(layout: Layout, m: CMat) -> Result<Self> {
        if m.nrows() != layout.dim() || m.ncols() != layout.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for layout of dimension {}",
                m.nrows(),
                m.ncols(),
                layout.dim()
            )));
        }
        let defect = hermiticity_defect(&m);
        if defect > 1e-10 {
            return Err(Error::NotHermitian(defect));
        }
        let t = m.trace().re;
        if t > 1.0 + PSD_SLACK || t <= 0.0 {
            return Err(Error::Invalid(format!("density trace {t} outside (0, 1]")));
        }
        let min = hermitian_eigenvalues(&m)?.last().copied().unwrap_or(0.0);
        if min < -PSD_SLACK {
            return Err(Error::NotPsd(min));
        }
        Ok(State { layout, body: StateBody::Mixed(m) })
    }

    /// Computational basis state; `digits` follow the layout order.
    pub fn basis_state(layout: Layout, digits: &[usize]) -> Result<Self> {
        if digits.len() != layout.len() {
            return Err(Error::DimensionMismatch("one digit per register expected".into()));
        }
        for (d, (l, dim)) in digits.iter().zip(layout.registers()) {
            if d >= dim {
                return Err(Error::Invalid(format!("digit {d} out of range for `{l}` (dim {dim})")));
            }
        }
        let idx = layout.radix().encode(digits);
        let v = super::basis(layout.dim(), idx);
        Ok(State { layout, body: StateBody::Pure(v) })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn body(&self) -> &StateBody {
        &self.body
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.body, StateBody::Pure(_))
    }

    pub fn vector(&self) -> Option<&CVec> {
        match &self.body {
            StateBody::Pure(v) => Some(v),
            StateBody::Mixed(_) => None,
        }
    }

    pub fn density(&self) -> CMat {
        match &self.body {
            StateBody::Pure(v) => v * v.adjoint(),
            StateBody::Mixed(m) => m.clone(),
        }
    }

    pub fn into_density(self) -> State {
        let m = self.density();
        State { layout: self.layout, body: StateBody::Mixed(m) }
    }

    pub fn trace(&self) -> f64 {
        match &self.body {
            StateBody::Pure(v) => v.norm_squared(),
            StateBody::Mixed(m) => m.trace().re,
        }
    }

    /// Rescaled to unit trace.
    pub fn normalized(&self) -> Result<State> {
        let t = self.trace();
        if t <= 0.0 {
            return Err(Error::ZeroProbability);
        }
        let body = match &self.body {
            StateBody::Pure(v) => StateBody::Pure(v / cr(t.sqrt())),
            StateBody::Mixed(m) => StateBody::Mixed(m / cr(t)),
        };
        Ok(State { layout: self.layout.clone(), body })
    }

    pub fn tensor(&self, other: &State) -> Result<State> {
        let layout = self.layout.concat(&other.layout)?;
        let body = match (&self.body, &other.body) {
            (StateBody::Pure(a), StateBody::Pure(b)) => StateBody::Pure(a.kronecker(b)),
            _ => StateBody::Mixed(self.density().kronecker(&other.density())),
        };
        Ok(State { layout, body })
    }

    /// Reduced state on `keep`, registers in layout order.
    pub fn partial_trace<S: AsRef<str>>(&self, keep: &[S]) -> Result<State> {
        let sel = self.layout.positions_in_order(keep)?;
        let layout = self.layout.select(&sel);
        if sel.len() == self.layout.len() {
            return Ok(State { layout, body: StateBody::Mixed(self.density()) });
        }
        let split = self.layout.split(&sel);
        let m = match &self.body {
            StateBody::Pure(v) => {
                let mut a = CMat::zeros(split.d_sel, split.d_rest);
                for (idx, z) in v.iter().enumerate() {
                    a[(split.sel_of[idx], split.rest_of[idx])] = *z;
                }
                &a * a.adjoint()
            }
            StateBody::Mixed(rho) => {
                let mut out = CMat::zeros(split.d_sel, split.d_sel);
                // Index of (sel, rest) back to the full index.
                let mut full = vec![0usize; split.d_sel * split.d_rest];
                for idx in 0..rho.nrows() {
                    full[split.sel_of[idx] * split.d_rest + split.rest_of[idx]] = idx;
                }
                for a in 0..split.d_sel {
                    for b in 0..split.d_sel {
                        let mut acc = cr(0.0);
                        for r in 0..split.d_rest {
                            acc += rho[(full[a * split.d_rest + r], full[b * split.d_rest + r])];
                        }
                        out[(a, b)] = acc;
                    }
                }
                out
            }
        };
        Ok(State { layout, body: StateBody::Mixed(m) })
    }

    /// Pure state as a `d_sel x d_rest` matrix across the cut `sel | rest`,
    /// with `sel` in the order given and the rest in layout order.
    pub fn cut_matrix<S: AsRef<str>>(&self, sel: &[S]) -> Result<CMat> {
        let v = self
            .vector()
            .ok_or_else(|| Error::Invalid("cut matrix needs a pure state".into()))?;
        let pos = self.layout.positions(sel)?;
        let split = self.layout.split(&pos);
        let mut a = CMat::zeros(split.d_sel, split.d_rest);
        for (idx, z) in v.iter().enumerate() {
            a[(split.sel_of[idx], split.rest_of[idx])] = *z;
        }
        Ok(a)
    }

    /// Apply `u` to the registers `on` (in the order given).
    pub fn apply_local<S: AsRef<str>>(&self, u: &CMat, on: &[S]) -> Result<State> {
        let pos = self.layout.positions(on)?;
        let d_on: usize = pos.iter().map(|&p| self.layout.registers()[p].1).product();
        if u.nrows() != d_on || u.ncols() != d_on {
            return Err(Error::DimensionMismatch(format!(
                "operator is {}x{}, registers have dimension {d_on}",
                u.nrows(),
                u.ncols()
            )));
        }
        let split = self.layout.split(&pos);
        let apply_vec = |v: &CVec| -> CVec {
            let mut a = CMat::zeros(split.d_sel, split.d_rest);
            for (idx, z) in v.iter().enumerate() {
                a[(split.sel_of[idx], split.rest_of[idx])] = *z;
            }
            let b = u * a;
            CVec::from_iterator(v.len(), (0..v.len()).map(|idx| b[(split.sel_of[idx], split.rest_of[idx])]))
        };
        let body = match &self.body {
            StateBody::Pure(v) => StateBody::Pure(apply_vec(v)),
            StateBody::Mixed(rho) => {
                let n = rho.nrows();
                let mut left = CMat::zeros(n, n);
                for j in 0..n {
                    left.set_column(j, &apply_vec(&rho.column(j).into_owned()));
                }
                // (U rho) U^dag = (U (U rho)^dag)^dag
                let ld = left.adjoint();
                let mut both = CMat::zeros(n, n);
                for j in 0..n {
                    both.set_column(j, &apply_vec(&ld.column(j).into_owned()));
                }
                StateBody::Mixed(both.adjoint())
            }
        };
        Ok(State { layout: self.layout.clone(), body })
    }

    /// Keep only the basis components whose digits on `on` satisfy `pred`.
    pub fn project_where<S: AsRef<str>>(&self, on: &[S], pred: impl Fn(&[usize]) -> bool) -> Result<Projection> {
        let pos = self.layout.positions(on)?;
        let radix = self.layout.radix();
        let n = self.layout.dim();
        let mut digits = vec![0usize; pos.len()];
        let mask: Vec<bool> = (0..n)
            .map(|idx| {
                for (k, &p) in pos.iter().enumerate() {
                    digits[k] = radix.digit(idx, p);
                }
                pred(&digits)
            })
            .collect();
        let body = match &self.body {
            StateBody::Pure(v) => {
                StateBody::Pure(CVec::from_iterator(n, (0..n).map(|i| if mask[i] { v[i] } else { cr(0.0) })))
            }
            StateBody::Mixed(m) => StateBody::Mixed(CMat::from_fn(n, n, |i, j| {
                if mask[i] && mask[j] {
                    m[(i, j)]
                } else {
                    cr(0.0)
                }
            })),
        };
        let post = State { layout: self.layout.clone(), body };
        let prob = post.trace();
        if prob <= 0.0 {
            return Ok(Projection { prob: 0.0, post: None });
        }
        Ok(Projection { prob, post: Some(post) })
    }

    /// Project the registers `on` onto the basis string `values`.
    pub fn project<S: AsRef<str>>(&self, on: &[S], values: &[usize]) -> Result<Projection> {
        if on.len() != values.len() {
            return Err(Error::DimensionMismatch("one value per projected register expected".into()));
        }
        for (l, &v) in on.iter().zip(values) {
            let d = self.layout.dim_of(l.as_ref())?;
            if v >= d {
                return Err(Error::Invalid(format!("outcome {v} out of range for `{}`", l.as_ref())));
            }
        }
        self.project_where(on, |d| d == values)
    }

    /// Computational-basis outcome distribution of the registers `on`
    /// (mixed-radix over `on` in the order given). Sums to the trace.
    pub fn distribution<S: AsRef<str>>(&self, on: &[S]) -> Result<Vec<f64>> {
        let pos = self.layout.positions(on)?;
        let split = self.layout.split(&pos);
        let mut p = vec![0.0; split.d_sel];
        match &self.body {
            StateBody::Pure(v) => {
                for (idx, z) in v.iter().enumerate() {
                    p[split.sel_of[idx]] += z.norm_sqr();
                }
            }
            StateBody::Mixed(m) => {
                for idx in 0..m.nrows() {
                    p[split.sel_of[idx]] += m[(idx, idx)].re;
                }
            }
        }
        Ok(p)
    }

    /// Same state with registers permuted into the order `labels`.
    pub fn reorder<S: AsRef<str>>(&self, labels: &[S]) -> Result<State> {
        let pos = self.layout.positions(labels)?;
        if pos.len() != self.layout.len() {
            return Err(Error::Invalid("reorder needs every label exactly once".into()));
        }
        let layout = self.layout.select(&pos);
        let split = self.layout.split(&pos);
        let body = match &self.body {
            StateBody::Pure(v) => {
                let mut w = CVec::zeros(v.len());
                for (idx, z) in v.iter().enumerate() {
                    w[split.sel_of[idx]] = *z;
                }
                StateBody::Pure(w)
            }
            StateBody::Mixed(m) => {
                let n = m.nrows();
                let mut w = CMat::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        w[(split.sel_of[i], split.sel_of[j])] = m[(i, j)];
                    }
                }
                StateBody::Mixed(w)
            }
        };
        Ok(State { layout, body })
    }

    /// `<self|other>` for pure states on identical layouts.
    pub fn inner(&self, other: &State) -> Result<num_complex::Complex<f64>> {
        if self.layout != other.layout {
            return Err(Error::DimensionMismatch("inner product needs identical layouts".into()));
        }
        match (&self.body, &other.body) {
            (StateBody::Pure(a), StateBody::Pure(b)) => Ok(a.dotc(b)),
            _ => Err(Error::Invalid("inner product needs pure states".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{basis, diag, identity, max_abs_diff, random};

    fn bell() -> State {
        let mut v = CVec::zeros(4);
        v[0] = cr(std::f64::consts::FRAC_1_SQRT_2);
        v[3] = cr(std::f64::consts::FRAC_1_SQRT_2);
        State::pure(Layout::new([("A", 2), ("B", 2)]).unwrap(), v).unwrap()
    }

    #[test]
    fn radix_roundtrip() {
        let r = Radix::new(&[2, 3, 4]);
        for i in 0..24 {
            assert_eq!(r.encode(&r.decode(i)), i);
        }
        assert_eq!(r.decode(5), vec![0, 1, 1]);
    }

    #[test]
    fn layout_rejects_duplicates() {
        assert!(matches!(Layout::new([("X", 2), ("X", 3)]), Err(Error::LabelCollision(_))));
    }

    #[test]
    fn tensor_concatenates_layouts() {
        let a = State::basis_state(Layout::single("X", 2), &[0]).unwrap();
        let b = State::basis_state(Layout::single("A", 3), &[1]).unwrap();
        let t = a.tensor(&b).unwrap();
        assert_eq!(t.layout().labels(), vec!["X", "A"]);
        assert_eq!(t.vector().unwrap(), &basis(6, 1));
        assert!(matches!(a.tensor(&a), Err(Error::LabelCollision(_))));
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let r = bell().partial_trace(&["A"]).unwrap();
        assert!(max_abs_diff(&r.density(), &(identity(2) * cr(0.5))) < 1e-14);
    }

    #[test]
    fn keep_everything_is_identity() {
        let s = bell();
        let r = s.partial_trace(&["A", "B"]).unwrap();
        assert!(max_abs_diff(&r.density(), &s.density()) < 1e-15);
    }

    #[test]
    fn classical_quantum_trace_out() {
        let mut rng = random::rng_from_seed(9);
        let r0 = random::random_density(&mut rng, 3, 2);
        let r1 = random::random_density(&mut rng, 3, 3);
        let m = crate::qmat::kron(&diag(&[0.5, 0.0]), &r0) + crate::qmat::kron(&diag(&[0.0, 0.5]), &r1);
        let s = State::mixed(Layout::new([("X", 2), ("A", 3)]).unwrap(), m).unwrap();
        let r = s.partial_trace(&["X"]).unwrap();
        assert!(max_abs_diff(&r.density(), &diag(&[0.5, 0.5])) < 1e-12);
    }

    #[test]
    fn partial_trace_matches_between_pure_and_mixed() {
        let mut rng = random::rng_from_seed(10);
        let layout = Layout::new([("P", 2), ("Q", 3), ("R", 2)]).unwrap();
        let v = random::random_pure(&mut rng, 12);
        let p = State::pure(layout.clone(), v).unwrap();
        let m = p.clone().into_density();
        for keep in [vec!["Q"], vec!["P", "R"], vec!["R"], vec!["Q", "R"]] {
            let a = p.partial_trace(&keep).unwrap().density();
            let b = m.partial_trace(&keep).unwrap().density();
            assert!(max_abs_diff(&a, &b) < 1e-13);
        }
    }

    #[test]
    fn unknown_label_is_reported() {
        assert!(matches!(bell().partial_trace(&["Z"]), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn bit_flip_on_first_register() {
        let s = State::basis_state(Layout::new([("X", 2), ("A", 2)]).unwrap(), &[0, 0]).unwrap();
        let x = CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]);
        let t = s.apply_local(&x, &["X"]).unwrap();
        assert_eq!(t.vector().unwrap(), &basis(4, 2));
    }

    #[test]
    fn identity_leaves_state_alone() {
        let s = bell();
        let t = s.apply_local(&identity(2), &["B"]).unwrap();
        assert_eq!(s, t);
    }

    #[test]
    fn local_unitary_keeps_norm_and_other_marginals() {
        let mut rng = random::rng_from_seed(12);
        let layout = Layout::new([("P", 2), ("Q", 3), ("R", 2)]).unwrap();
        let s = State::pure(layout, random::random_pure(&mut rng, 12)).unwrap();
        let u = random::haar_unitary(&mut rng, 4);
        let t = s.apply_local(&u, &["R", "P"]).unwrap();
        assert!((t.trace() - 1.0).abs() < 1e-10);
        let before = s.partial_trace(&["Q"]).unwrap().density();
        let after = t.partial_trace(&["Q"]).unwrap().density();
        assert!(max_abs_diff(&before, &after) < 1e-12);
        let mixed = s.clone().into_density().apply_local(&u, &["R", "P"]).unwrap();
        assert!(max_abs_diff(&mixed.density(), &t.density()) < 1e-12);
    }

    #[test]
    fn local_unitary_dimension_checked() {
        assert!(matches!(bell().apply_local(&identity(3), &["A"]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn project_plus_onto_zero() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = State::pure(Layout::single("X", 2), CVec::from_vec(vec![cr(h), cr(h)])).unwrap();
        let p = s.project(&["X"], &[0]).unwrap();
        assert!((p.prob - 0.5).abs() < 1e-15);
    }

    #[test]
    fn project_full_string_of_basis_state() {
        let s = State::basis_state(Layout::new([("X", 2), ("A", 3)]).unwrap(), &[1, 2]).unwrap();
        let p = s.project(&["X", "A"], &[1, 2]).unwrap();
        assert_eq!(p.prob, 1.0);
        assert_eq!(p.post.unwrap(), s);
        let q = s.project(&["A"], &[0]).unwrap();
        assert_eq!(q.prob, 0.0);
        assert!(q.post.is_none());
    }

    #[test]
    fn outcome_probabilities_sum_to_trace() {
        let mut rng = random::rng_from_seed(13);
        let layout = Layout::new([("P", 2), ("Q", 3)]).unwrap();
        let s = State::mixed(layout, random::random_density(&mut rng, 6, 3) * cr(0.7)).unwrap();
        let mut total = 0.0;
        for q in 0..3 {
            total += s.project(&["Q"], &[q]).unwrap().prob;
        }
        assert!((total - s.trace()).abs() < 1e-12);
        let d = s.distribution(&["Q", "P"]).unwrap();
        assert!((d.iter().sum::<f64>() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn reorder_swaps_registers() {
        let s = State::basis_state(Layout::new([("X", 2), ("A", 3)]).unwrap(), &[1, 2]).unwrap();
        let t = s.reorder(&["A", "X"]).unwrap();
        assert_eq!(t.layout().labels(), vec!["A", "X"]);
        assert_eq!(t.vector().unwrap(), &basis(6, 2 * 2 + 1));
    }

    #[test]
    fn cut_matrix_gives_marginal() {
        let mut rng = random::rng_from_seed(14);
        let layout = Layout::new([("P", 2), ("Q", 3), ("R", 2)]).unwrap();
        let s = State::pure(layout, random::random_pure(&mut rng, 12)).unwrap();
        let a = s.cut_matrix(&["R", "P"]).unwrap();
        let rho = &a * a.adjoint();
        let direct = s.partial_trace(&["P", "R"]).unwrap().reorder(&["R", "P"]).unwrap().density();
        assert!(max_abs_diff(&rho, &direct) < 1e-13);
    }
}
