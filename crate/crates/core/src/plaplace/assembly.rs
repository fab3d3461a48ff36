use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};

use crate::error::{Error, Result};
use crate::geometry::{Mesh, Point};

pub(crate) fn check_nondegenerate(mesh: &Mesh) -> Result<()> {
    for t in 0..mesh.triangles.len() {
        if !(mesh.triangle_area(t) > 0.0) {
            return Err(Error::Mesh(format!("triangle {t} is degenerate")));
        }
    }
    Ok(())
}

pub(crate) struct Element {
    pub v: [usize; 3],
    pub grads: [Point; 3],
    pub area: f64,
}

/// Per-triangle geometry, computed once per mesh.
pub(crate) struct Elements {
    pub elems: Vec<Element>,
    pub n_vertices: usize,
}

impl Elements {
    pub fn new(mesh: &Mesh) -> Self {
        let elems = (0..mesh.triangles.len())
            .map(|t| Element {
                v: mesh.triangles[t],
                grads: mesh.hat_gradients(t),
                area: mesh.triangle_area(t),
            })
            .collect();
        Self { elems, n_vertices: mesh.n_vertices() }
    }

    #[inline]
    fn grad(e: &Element, u: &[f64]) -> Point {
        e.grads[0] * u[e.v[0]] + e.grads[1] * u[e.v[1]] + e.grads[2] * u[e.v[2]]
    }

    pub fn energy(&self, u: &[f64], p: f64, eps: f64) -> f64 {
        let half = 0.5 * p;
        self.elems
            .iter()
            .map(|e| e.area * (Self::grad(e, u).norm_sq() + eps).powf(half))
            .sum()
    }

    pub fn gradient(&self, u: &[f64], p: f64, eps: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.n_vertices];
        for e in &self.elems {
            let g = Self::grad(e, u);
            let s = g.norm_sq() + eps;
            if s == 0.0 {
                continue;
            }
            let coef = e.area * p * s.powf(0.5 * p - 1.0);
            for k in 0..3 {
                out[e.v[k]] += coef * g.dot(e.grads[k]);
            }
        }
        out
    }
}

/// Sparse lower-triangular pattern of the stiffness/Hessian restricted to
/// the free degrees of freedom, with a per-element scatter table.
pub(crate) struct FreeSystem {
    pub free: Vec<usize>,
    pub symbolic: SymbolicSparseColMat<usize>,
    /// For every element, slot of the (a, b) local pair in the value array.
    pub slots: Vec<[[usize; 3]; 3]>,
}

pub(crate) const NONE: usize = usize::MAX;

impl FreeSystem {
    pub fn new(elements: &Elements, constrained: &[bool]) -> Result<Self> {
        let mut dof = vec![NONE; elements.n_vertices];
        let mut free = Vec::new();
        for (v, &c) in constrained.iter().enumerate() {
            if !c {
                dof[v] = free.len();
                free.push(v);
            }
        }
        let n = free.len();
        if n == 0 {
            return Err(Error::MeshResolution("no free degrees of freedom".into()));
        }
        // (col, row) with row >= col
        let mut entries: Vec<(usize, usize)> = Vec::with_capacity(elements.elems.len() * 6 + n);
        for e in &elements.elems {
            for a in 0..3 {
                for b in 0..3 {
                    let (da, db) = (dof[e.v[a]], dof[e.v[b]]);
                    if da != NONE && db != NONE && da >= db {
                        entries.push((db, da));
                    }
                }
            }
        }
        for i in 0..n {
            entries.push((i, i));
        }
        entries.sort_unstable();
        entries.dedup();
        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(entries.len());
        for &(c, r) in &entries {
            col_ptr[c + 1] += 1;
            row_idx.push(r);
        }
        for c in 0..n {
            col_ptr[c + 1] += col_ptr[c];
        }
        let slot_of = |r: usize, c: usize| -> usize {
            let (lo, hi) = (col_ptr[c], col_ptr[c + 1]);
            lo + row_idx[lo..hi].binary_search(&r).expect("pattern contains every element pair")
        };
        let slots = elements
            .elems
            .iter()
            .map(|e| {
                let mut s = [[NONE; 3]; 3];
                for a in 0..3 {
                    for b in 0..3 {
                        let (da, db) = (dof[e.v[a]], dof[e.v[b]]);
                        if da != NONE && db != NONE && da >= db {
                            s[a][b] = slot_of(da, db);
                        }
                    }
                }
                s
            })
            .collect();
        let symbolic = SymbolicSparseColMat::new_checked(n, n, col_ptr, None, row_idx);
        Ok(Self { free, symbolic, slots })
    }

    pub fn nnz(&self) -> usize {
        self.symbolic.row_idx().len()
    }

    pub fn matrix<'a>(&'a self, values: &'a [f64]) -> SparseColMatRef<'a, usize, f64> {
        SparseColMatRef::new(self.symbolic.as_ref(), values)
    }

    /// Hessian of the regularized energy over the free dofs.
    pub fn hessian(&self, elements: &Elements, u: &[f64], p: f64, eps: f64, out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.nnz(), 0.0);
        for (e, slots) in elements.elems.iter().zip(&self.slots) {
            let g = Elements::grad(e, u);
            let s = g.norm_sq() + eps;
            let c1 = e.area * p * s.powf(0.5 * p - 1.0);
            let c2 = e.area * p * (p - 2.0) * s.powf(0.5 * p - 2.0);
            let gd = [g.dot(e.grads[0]), g.dot(e.grads[1]), g.dot(e.grads[2])];
            for a in 0..3 {
                for b in 0..3 {
                    let slot = slots[a][b];
                    if slot != NONE {
                        out[slot] += c1 * e.grads[a].dot(e.grads[b]) + c2 * gd[a] * gd[b];
                    }
                }
            }
        }
    }

    /// Linear (p = 2) stiffness over the free dofs.
    pub fn stiffness(&self, elements: &Elements, out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.nnz(), 0.0);
        for (e, slots) in elements.elems.iter().zip(&self.slots) {
            for a in 0..3 {
                for b in 0..3 {
                    let slot = slots[a][b];
                    if slot != NONE {
                        out[slot] += e.area * e.grads[a].dot(e.grads[b]);
                    }
                }
            }
        }
    }
}
