//! Per-node block vectors and the small amount of vector algebra the
//! solver needs.
//!
//! State in this crate is naturally partitioned by node: a primal point
//! stores one block per node (block `i` has the width of `x_i`), and dual
//! or constraint-space quantities store one block of the constraint width
//! per node. [`BlockVec`] is that partitioned vector; [`LiftedVec`] pairs a
//! primal block vector with a constraint-space one, which is the shape of
//! every iterate of the lifted problem.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// A vector split into one block per node.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockVec(pub Vec<DVector<f64>>);

impl BlockVec {
    /// Zero vector with block `i` of width `dims[i]`.
    #[must_use]
    pub fn zeros(dims: &[usize]) -> Self {
        BlockVec(dims.iter().map(|&d| DVector::zeros(d)).collect())
    }

    /// Zero vector with `n` blocks of equal `width`.
    #[must_use]
    pub fn zeros_uniform(n: usize, width: usize) -> Self {
        BlockVec(vec![DVector::zeros(width); n])
    }

    /// Number of blocks.
    #[must_use]
    pub fn num_blocks(&self) -> usize {
        self.0.len()
    }

    /// Block widths, in node order.
    #[must_use]
    pub fn widths(&self) -> Vec<usize> {
        self.0.iter().map(DVector::len).collect()
    }

    /// Total length across blocks.
    #[must_use]
    pub fn total_len(&self) -> usize {
        self.0.iter().map(DVector::len).sum()
    }

    /// Euclidean norm of the stacked vector.
    #[must_use]
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
    }

    /// Inner product with another block vector of identical layout.
    #[must_use]
    pub fn dot(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.dot(b))
            .sum::<f64>()
    }

    /// `self += a * other`, blockwise.
    pub fn axpy(&mut self, a: f64, other: &Self) {
        for (s, o) in self.0.iter_mut().zip(&other.0) {
            s.axpy(a, o, 1.0);
        }
    }

    /// `self *= a`, blockwise.
    pub fn scale_mut(&mut self, a: f64) {
        for s in &mut self.0 {
            *s *= a;
        }
    }

    /// `a * self + b * other` as a new vector.
    #[must_use]
    pub fn lincomb(&self, a: f64, other: &Self, b: f64) -> Self {
        let mut out = self.clone();
        out.scale_mut(a);
        out.axpy(b, other);
        out
    }

    /// `self - other` as a new vector.
    #[must_use]
    pub fn sub(&self, other: &Self) -> Self {
        self.lincomb(1.0, other, -1.0)
    }

    /// Sum of all blocks. Requires equal widths.
    pub fn block_sum(&self) -> Result<DVector<f64>> {
        let width = match self.0.first() {
            Some(b) => b.len(),
            None => return Ok(DVector::zeros(0)),
        };
        let mut sum = DVector::zeros(width);
        for b in &self.0 {
            if b.len() != width {
                return Err(Error::ShapeMismatch(format!(
                    "block_sum needs equal widths, found {} and {}",
                    width,
                    b.len()
                )));
            }
            sum += b;
        }
        Ok(sum)
    }

    /// True when every entry is finite.
    #[must_use]
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// Concatenate the blocks into one dense vector, node order.
    #[must_use]
    pub fn to_stacked(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.total_len());
        let mut at = 0;
        for b in &self.0 {
            out.rows_mut(at, b.len()).copy_from(b);
            at += b.len();
        }
        out
    }

    /// Split a dense vector back into blocks of the given widths.
    pub fn from_stacked(dims: &[usize], stacked: &DVector<f64>) -> Result<Self> {
        let total: usize = dims.iter().sum();
        if stacked.len() != total {
            return Err(Error::ShapeMismatch(format!(
                "stacked vector has length {}, blocks need {}",
                stacked.len(),
                total
            )));
        }
        let mut blocks = Vec::with_capacity(dims.len());
        let mut at = 0;
        for &d in dims {
            blocks.push(stacked.rows(at, d).into_owned());
            at += d;
        }
        Ok(BlockVec(blocks))
    }
}

/// An iterate of the lifted problem: a primal part `x` (one block per
/// node, node-local width) and a constraint-space part `y` (one block per
/// node, constraint width).
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedVec {
    pub x: BlockVec,
    pub y: BlockVec,
}

impl LiftedVec {
    /// Zero iterate for primal widths `dims` and `n` constraint blocks of
    /// width `m`.
    #[must_use]
    pub fn zeros(dims: &[usize], n: usize, m: usize) -> Self {
        LiftedVec {
            x: BlockVec::zeros(dims),
            y: BlockVec::zeros_uniform(n, m),
        }
    }

    /// Euclidean norm of the full iterate.
    #[must_use]
    pub fn norm(&self) -> f64 {
        self.x
            .norm()
            .hypot(self.y.norm())
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Self) {
        self.x.axpy(a, &other.x);
        self.y.axpy(a, &other.y);
    }

    /// `self *= a`.
    pub fn scale_mut(&mut self, a: f64) {
        self.x.scale_mut(a);
        self.y.scale_mut(a);
    }

    /// `a * self + b * other` as a new iterate.
    #[must_use]
    pub fn lincomb(&self, a: f64, other: &Self, b: f64) -> Self {
        let mut out = self.clone();
        out.scale_mut(a);
        out.axpy(b, other);
        out
    }

    /// `self - other` as a new iterate.
    #[must_use]
    pub fn sub(&self, other: &Self) -> Self {
        self.lincomb(1.0, other, -1.0)
    }

    /// True when every entry is finite.
    #[must_use]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Concatenate `x` then `y` into one dense vector.
    #[must_use]
    pub fn to_stacked(&self) -> DVector<f64> {
        let x = self.x.to_stacked();
        let y = self.y.to_stacked();
        let mut out = DVector::zeros(x.len() + y.len());
        out.rows_mut(0, x.len()).copy_from(&x);
        out.rows_mut(x.len(), y.len()).copy_from(&y);
        out
    }

    /// Split a dense vector into an iterate with the given layout.
    pub fn from_stacked(
        dims: &[usize],
        n: usize,
        m: usize,
        stacked: &DVector<f64>,
    ) -> Result<Self> {
        let d: usize = dims.iter().sum();
        if stacked.len() != d + n * m {
            return Err(Error::ShapeMismatch(format!(
                "stacked iterate has length {}, layout needs {}",
                stacked.len(),
                d + n * m
            )));
        }
        let x = BlockVec::from_stacked(dims, &stacked.rows(0, d).into_owned())?;
        let y_dims = vec![m; n];
        let y = BlockVec::from_stacked(&y_dims, &stacked.rows(d, n * m).into_owned())?;
        Ok(LiftedVec { x, y })
    }
}

/// The handful of vector operations the Chebyshev recurrence needs,
/// abstracted so the same recurrence drives gossip-space vectors, lifted
/// iterates, and dense test vectors.
pub(crate) trait VecOps: Clone {
    fn axpy_op(&mut self, a: f64, other: &Self);
    fn scale_op(&mut self, a: f64);
}

impl VecOps for BlockVec {
    fn axpy_op(&mut self, a: f64, other: &Self) {
        self.axpy(a, other);
    }
    fn scale_op(&mut self, a: f64) {
        self.scale_mut(a);
    }
}

impl VecOps for LiftedVec {
    fn axpy_op(&mut self, a: f64, other: &Self) {
        self.axpy(a, other);
    }
    fn scale_op(&mut self, a: f64) {
        self.scale_mut(a);
    }
}

impl VecOps for DVector<f64> {
    fn axpy_op(&mut self, a: f64, other: &Self) {
        self.axpy(a, other, 1.0);
    }
    fn scale_op(&mut self, a: f64) {
        *self *= a;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stack_round_trip_preserves_blocks() {
        let v = BlockVec(vec![
            DVector::from_vec(vec![1.0, 2.0]),
            DVector::from_vec(vec![3.0]),
            DVector::from_vec(vec![4.0, 5.0, 6.0]),
        ]);
        let stacked = v.to_stacked();
        assert_eq!(stacked.as_slice(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let back = BlockVec::from_stacked(&[2, 1, 3], &stacked).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn block_sum_requires_equal_widths() {
        let v = BlockVec(vec![
            DVector::from_vec(vec![1.0, 2.0]),
            DVector::from_vec(vec![3.0]),
        ]);
        assert!(v.block_sum().is_err());

        let u = BlockVec(vec![
            DVector::from_vec(vec![1.0, 2.0]),
            DVector::from_vec(vec![10.0, 20.0]),
        ]);
        assert_eq!(u.block_sum().unwrap().as_slice(), &[11.0, 22.0]);
    }

    #[test]
    fn lincomb_matches_direct_arithmetic() {
        let a = BlockVec(vec![DVector::from_vec(vec![1.0, -2.0])]);
        let b = BlockVec(vec![DVector::from_vec(vec![0.5, 4.0])]);
        let c = a.lincomb(2.0, &b, -1.0);
        assert_eq!(c.0[0].as_slice(), &[1.5, -8.0]);
    }

    #[test]
    fn lifted_norm_combines_both_parts() {
        let u = LiftedVec {
            x: BlockVec(vec![DVector::from_vec(vec![3.0])]),
            y: BlockVec(vec![DVector::from_vec(vec![4.0])]),
        };
        assert!((u.norm() - 5.0).abs() < 1e-15);
    }
}
