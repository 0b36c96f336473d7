//! The stage-blocked decision vector `z = [u¹; μ¹; ν¹; …; u^T; μ^T; ν^T]`.
//!
//! Grouping by stage (instead of grouping all inputs, then all multipliers)
//! keeps the residual Jacobian block-banded. Accessors use the 1-based stage
//! index `k ∈ {1, …, T}` so call sites read like the recursions they
//! implement.

use nalgebra::{DVector, DVectorView};

use crate::error::{Error, Result};

/// Per-stage block sizes and the horizon length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageDims {
    pub inputs: usize,
    pub ineq: usize,
    pub eq: usize,
    pub horizon: usize,
}

impl StageDims {
    pub fn stage_len(&self) -> usize {
        self.inputs + self.ineq + self.eq
    }

    pub fn total_len(&self) -> usize {
        self.horizon * self.stage_len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionVector {
    dims: StageDims,
    data: DVector<f64>,
}

impl DecisionVector {
    pub fn zeros(dims: StageDims) -> Self {
        DecisionVector {
            dims,
            data: DVector::zeros(dims.total_len()),
        }
    }

    pub fn from_vector(dims: StageDims, data: DVector<f64>) -> Result<Self> {
        if data.len() != dims.total_len() {
            return Err(Error::dimension(
                "decision vector length",
                dims.total_len(),
                data.len(),
            ));
        }
        Ok(DecisionVector { dims, data })
    }

    pub fn dims(&self) -> StageDims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.len() == 0
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.data
    }

    fn stage_offset(&self, k: usize) -> usize {
        assert!(
            k >= 1 && k <= self.dims.horizon,
            "stage index {k} outside 1..={}",
            self.dims.horizon
        );
        (k - 1) * self.dims.stage_len()
    }

    /// Input block `u^k`, `k ∈ {1, …, T}`.
    pub fn u(&self, k: usize) -> DVectorView<'_, f64> {
        self.data.rows(self.stage_offset(k), self.dims.inputs)
    }

    /// Inequality multiplier block `μ^k`.
    pub fn mu(&self, k: usize) -> DVectorView<'_, f64> {
        self.data
            .rows(self.stage_offset(k) + self.dims.inputs, self.dims.ineq)
    }

    /// Equality multiplier block `ν^k`.
    pub fn nu(&self, k: usize) -> DVectorView<'_, f64> {
        self.data.rows(
            self.stage_offset(k) + self.dims.inputs + self.dims.ineq,
            self.dims.eq,
        )
    }

    pub fn set_u(&mut self, k: usize, value: &DVector<f64>) {
        assert_eq!(value.len(), self.dims.inputs);
        let off = self.stage_offset(k);
        self.data.rows_mut(off, self.dims.inputs).copy_from(value);
    }

    pub fn set_mu(&mut self, k: usize, value: &DVector<f64>) {
        assert_eq!(value.len(), self.dims.ineq);
        let off = self.stage_offset(k) + self.dims.inputs;
        self.data.rows_mut(off, self.dims.ineq).copy_from(value);
    }

    pub fn set_nu(&mut self, k: usize, value: &DVector<f64>) {
        assert_eq!(value.len(), self.dims.eq);
        let off = self.stage_offset(k) + self.dims.inputs + self.dims.ineq;
        self.data.rows_mut(off, self.dims.eq).copy_from(value);
    }

    /// `z ← z + step`.
    pub fn add_assign(&mut self, step: &DVector<f64>) -> Result<()> {
        if step.len() != self.data.len() {
            return Err(Error::dimension("decision update", self.data.len(), step.len()));
        }
        self.data += step;
        Ok(())
    }
}
