use crate::lang::{VarDecls, VarId};
use crate::linalg::{Enumeration, ProbVector, DEFAULT_ENTRY_CAP};

use super::SemError;

/// The classical states of a program: all tuples of variable values,
/// enumerated with the first declared variable most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    decls: VarDecls,
    sizes: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl StateSpace {
    /// Builds the state space; at most [`DEFAULT_ENTRY_CAP`] states.
    pub fn new(decls: &VarDecls) -> Result<Self, SemError> {
        Self::with_cap(decls, DEFAULT_ENTRY_CAP)
    }

    pub fn with_cap(decls: &VarDecls, cap: usize) -> Result<Self, SemError> {
        let sizes: Vec<usize> = decls.iter().map(|(_, d)| d.size).collect();
        let mut len: usize = 1;
        for &s in &sizes {
            len = len
                .checked_mul(s)
                .filter(|&n| n <= cap)
                .ok_or(SemError::StateSpaceTooLarge { cap })?;
        }
        let mut strides = vec![1; sizes.len()];
        for i in (0..sizes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * sizes[i + 1];
        }
        Ok(StateSpace {
            decls: decls.clone(),
            sizes,
            strides,
            len,
        })
    }

    pub fn decls(&self) -> &VarDecls {
        &self.decls
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// `Σ x_i · Π_{j>i} |range_j|`. Panics on out-of-range values.
    pub fn index(&self, state: &[i64]) -> usize {
        assert_eq!(state.len(), self.sizes.len());
        state
            .iter()
            .zip(&self.sizes)
            .zip(&self.strides)
            .map(|((&v, &size), &stride)| {
                assert!(v >= 0 && (v as usize) < size, "value {v} out of range");
                v as usize * stride
            })
            .sum()
    }

    pub fn state(&self, index: usize) -> Vec<i64> {
        self.sizes
            .iter()
            .zip(&self.strides)
            .map(|(&size, &stride)| ((index / stride) % size) as i64)
            .collect()
    }

    pub fn value(&self, index: usize, var: VarId) -> i64 {
        ((index / self.strides[var.0]) % self.sizes[var.0]) as i64
    }

    /// Index of the state that differs from `index` only in `var`.
    pub fn with_value(&self, index: usize, var: VarId, value: i64) -> usize {
        let old = self.value(index, var);
        index - old as usize * self.strides[var.0] + value as usize * self.strides[var.0]
    }

    pub fn enumeration(&self) -> Enumeration<Vec<i64>> {
        Enumeration::new((0..self.len).map(|i| self.state(i)))
    }

    pub fn uniform(&self) -> ProbVector {
        ProbVector::uniform(self.len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xy() -> StateSpace {
        let mut d = VarDecls::new();
        d.declare("x", 4);
        d.declare("y", 4);
        StateSpace::new(&d).unwrap()
    }

    #[test]
    fn index_is_four_x_plus_y() {
        let ss = xy();
        assert_eq!(ss.len(), 16);
        for x in 0..4 {
            for y in 0..4 {
                assert_eq!(ss.index(&[x, y]), (4 * x + y) as usize);
                assert_eq!(ss.state((4 * x + y) as usize), vec![x, y]);
            }
        }
    }

    #[test]
    fn with_value_replaces_one_coordinate() {
        let ss = xy();
        let i = ss.index(&[3, 2]);
        assert_eq!(ss.state(ss.with_value(i, VarId(0), 1)), vec![1, 2]);
        assert_eq!(ss.value(i, VarId(1)), 2);
    }

    #[test]
    fn cap_enforced() {
        let mut d = VarDecls::new();
        d.declare("a", 1000);
        d.declare("b", 1000);
        assert!(matches!(
            StateSpace::with_cap(&d, 10_000),
            Err(SemError::StateSpaceTooLarge { .. })
        ));
    }

    #[test]
    fn empty_declarations_have_one_state() {
        let ss = StateSpace::new(&VarDecls::new()).unwrap();
        assert_eq!(ss.len(), 1);
        assert_eq!(ss.index(&[]), 0);
    }
}
