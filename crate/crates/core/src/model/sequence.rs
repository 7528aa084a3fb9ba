use crate::scalar::Real;

/// Proprioceptive and exteroceptive target streams, step-major, `dof` channels each.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence<T> {
    pub dof: usize,
    pub proprio: Vec<T>,
    pub extero: Vec<T>,
}

impl<T: Real> Sequence<T> {
    pub fn new(dof: usize) -> Self {
        Self {
            dof,
            proprio: Vec::new(),
            extero: Vec::new(),
        }
    }

    pub fn from_streams(dof: usize, proprio: Vec<T>, extero: Vec<T>) -> Self {
        assert_eq!(proprio.len(), extero.len());
        assert_eq!(proprio.len() % dof, 0);
        Self {
            dof,
            proprio,
            extero,
        }
    }

    pub fn len(&self) -> usize {
        self.proprio.len() / self.dof
    }

    pub fn is_empty(&self) -> bool {
        self.proprio.is_empty()
    }

    pub fn proprio_at(&self, t: usize) -> &[T] {
        &self.proprio[t * self.dof..(t + 1) * self.dof]
    }

    pub fn extero_at(&self, t: usize) -> &[T] {
        &self.extero[t * self.dof..(t + 1) * self.dof]
    }

    pub fn push(&mut self, proprio: &[T], extero: &[T]) {
        assert_eq!(proprio.len(), self.dof);
        assert_eq!(extero.len(), self.dof);
        self.proprio.extend_from_slice(proprio);
        self.extero.extend_from_slice(extero);
    }

    /// Steps `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        let d = self.dof;
        Self {
            dof: d,
            proprio: self.proprio[start * d..end * d].to_vec(),
            extero: self.extero[start * d..end * d].to_vec(),
        }
    }

    /// Drops the oldest step.
    pub fn pop_front(&mut self) {
        self.proprio.drain(..self.dof);
        self.extero.drain(..self.dof);
    }

    /// One channel of one stream as a time series.
    pub fn channel(&self, extero: bool, j: usize) -> Vec<T> {
        let src = if extero { &self.extero } else { &self.proprio };
        src.iter().skip(j).step_by(self.dof).copied().collect()
    }
}
