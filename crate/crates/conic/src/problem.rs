use crate::cone::Cone;
use crate::ConicError;
use nalgebra::{DMatrix, DVector};
use std::ops::Range;

/// Scalar affine expression `sum_j c_j x_j + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Affine {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    pub fn constant(c: f64) -> Self {
        Affine { terms: Vec::new(), constant: c }
    }

    pub fn var(j: usize) -> Self {
        Affine { terms: vec![(j, 1.0)], constant: 0.0 }
    }

    pub fn term(mut self, j: usize, c: f64) -> Self {
        self.terms.push((j, c));
        self
    }

    pub fn plus(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn scaled(mut self, k: f64) -> Self {
        self.terms.iter_mut().for_each(|t| t.1 *= k);
        self.constant *= k;
        self
    }

    /// `sum_j coeffs[j] x_{offset + j}` added to `self`.
    pub fn add_dense(mut self, offset: usize, coeffs: &[f64], k: f64) -> Self {
        for (j, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                self.terms.push((offset + j, k * c));
            }
        }
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(j, c)| c * x[j]).sum::<f64>()
    }
}

/// Named contiguous ranges of the solver variable vector.
#[derive(Debug, Clone, Default)]
pub struct VariableLayout {
    blocks: Vec<(String, Range<usize>)>,
    len: usize,
}

impl VariableLayout {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_block(&mut self, name: impl Into<String>, len: usize) -> Range<usize> {
        let r = self.len..self.len + len;
        self.blocks.push((name.into(), r.clone()));
        self.len += len;
        r
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn block(&self, name: &str) -> Option<Range<usize>> {
        self.blocks.iter().find(|(n, _)| n == name).map(|(_, r)| r.clone())
    }

    pub fn blocks(&self) -> impl Iterator<Item = (&str, Range<usize>)> {
        self.blocks.iter().map(|(n, r)| (n.as_str(), r.clone()))
    }
}

/// Compressed sparse row matrix. Only what the solver needs.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(col, value)` lists; duplicate columns are summed
    /// and explicit zeros dropped.
    pub fn from_rows(rows: &[Vec<(usize, f64)>], ncols: usize) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for row in rows {
            scratch.clear();
            scratch.extend_from_slice(row);
            scratch.sort_by_key(|t| t.0);
            let mut k = 0;
            while k < scratch.len() {
                let col = scratch[k].0;
                let mut v = 0.0;
                while k < scratch.len() && scratch[k].0 == col {
                    v += scratch[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    indices.push(col);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix { nrows: rows.len(), ncols, indptr, indices, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    /// `out = A x`
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *o = acc;
        }
    }

    /// `out = A^T y`
    pub fn tr_mul_vec(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, &yi) in y.iter().enumerate() {
            if yi == 0.0 {
                continue;
            }
            for k in self.indptr[i]..self.indptr[i + 1] {
                out[self.indices[k]] += self.values[k] * yi;
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }
}

/// `min 1/2 x'Px + q'x + constant  s.t.  Ax + s = b,  s in K`
/// where `K` is the product of `cones` in row order.
#[derive(Debug, Clone)]
pub struct ConicProblem {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub constant: f64,
    pub a: CsrMatrix,
    pub b: DVector<f64>,
    pub cones: Vec<Cone>,
}

impl ConicProblem {
    pub fn num_vars(&self) -> usize {
        self.q.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.p * x)) + self.q.dot(x) + self.constant
    }

    /// Row ranges of each cone block.
    pub fn cone_ranges(&self) -> Vec<Range<usize>> {
        let mut out = Vec::with_capacity(self.cones.len());
        let mut off = 0;
        for c in &self.cones {
            out.push(off..off + c.dim());
            off += c.dim();
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        let n = self.num_vars();
        if self.p.nrows() != n || self.p.ncols() != n {
            return Err(ConicError::Assembly(format!(
                "quadratic term is {}x{}, expected {n}x{n}",
                self.p.nrows(),
                self.p.ncols()
            )));
        }
        if (&self.p - self.p.transpose()).amax() > 1e-9 * (1.0 + self.p.amax()) {
            return Err(ConicError::Assembly("quadratic term is not symmetric".into()));
        }
        if self.a.ncols != n || self.a.nrows != self.b.len() {
            return Err(ConicError::Assembly("constraint matrix shape mismatch".into()));
        }
        let dims: usize = self.cones.iter().map(Cone::dim).sum();
        if dims != self.b.len() {
            return Err(ConicError::Assembly(format!(
                "cone dimensions sum to {dims} but there are {} constraint rows",
                self.b.len()
            )));
        }
        Ok(())
    }
}

/// Assembles a [`ConicProblem`] from affine expressions constrained to cones.
#[derive(Debug, Clone)]
pub struct ProblemBuilder {
    layout: VariableLayout,
    p: DMatrix<f64>,
    q: DVector<f64>,
    constant: f64,
    rows: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    cones: Vec<Cone>,
}

impl ProblemBuilder {
    pub fn new(layout: VariableLayout) -> Self {
        let n = layout.len();
        ProblemBuilder {
            layout,
            p: DMatrix::zeros(n, n),
            q: DVector::zeros(n),
            constant: 0.0,
            rows: Vec::new(),
            b: Vec::new(),
            cones: Vec::new(),
        }
    }

    pub fn layout(&self) -> &VariableLayout {
        &self.layout
    }

    pub fn num_vars(&self) -> usize {
        self.layout.len()
    }

    pub fn set_quadratic(&mut self, p: DMatrix<f64>) -> &mut Self {
        self.p = p;
        self
    }

    pub fn add_linear(&mut self, j: usize, c: f64) -> &mut Self {
        self.q[j] += c;
        self
    }

    pub fn set_linear(&mut self, q: DVector<f64>) -> &mut Self {
        self.q = q;
        self
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    /// Requires `(exprs[0](x), ..., exprs[d-1](x)) in cone`. Returns the
    /// constraint rows occupied.
    pub fn add_constraint(&mut self, cone: Cone, exprs: Vec<Affine>) -> Result<Range<usize>, ConicError> {
        if exprs.len() != cone.dim() {
            return Err(ConicError::Assembly(format!(
                "{cone:?} needs {} rows, got {}",
                cone.dim(),
                exprs.len()
            )));
        }
        let n = self.num_vars();
        let start = self.b.len();
        for e in exprs {
            if let Some(&(j, _)) = e.terms.iter().find(|t| t.0 >= n) {
                return Err(ConicError::Assembly(format!("variable index {j} out of range ({n} variables)")));
            }
            // s = e(x) = g'x + h  <=>  A = -g, b = h
            self.rows.push(e.terms.iter().map(|&(j, c)| (j, -c)).collect());
            self.b.push(e.constant);
        }
        self.cones.push(cone);
        Ok(start..self.b.len())
    }

    /// `x[range] in cone`, the common case for matrix blocks.
    pub fn constrain_block(&mut self, cone: Cone, range: Range<usize>) -> Result<Range<usize>, ConicError> {
        let exprs = range.map(Affine::var).collect();
        self.add_constraint(cone, exprs)
    }

    pub fn build(self) -> Result<ConicProblem, ConicError> {
        let n = self.num_vars();
        let problem = ConicProblem {
            p: self.p,
            q: self.q,
            constant: self.constant,
            a: CsrMatrix::from_rows(&self.rows, n),
            b: DVector::from_vec(self.b),
            cones: self.cones,
        };
        problem.validate()?;
        Ok(problem)
    }
}
