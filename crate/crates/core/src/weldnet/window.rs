use serde::{Deserialize, Serialize};

use crate::error::{Result, WeldError};

/// Partition of the time indices `0..=T-1` into `W` windows. Window `i`
/// covers the closed index range `[boundaries[i], boundaries[i + 1]]`, so
/// neighbouring windows share their boundary index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowLayout {
    pub boundaries: Vec<usize>,
}

/// Near-equal split of the `T - 1` steps; leftover steps go to the
/// earliest windows.
pub fn split_windows(n_steps: usize, n_windows: usize) -> Result<WindowLayout> {
    if n_windows == 0 {
        return Err(WeldError::invalid("need at least one window"));
    }
    if n_steps < 2 || n_windows > n_steps - 1 {
        return Err(WeldError::invalid(format!(
            "cannot split {} time steps into {n_windows} windows",
            n_steps.saturating_sub(1)
        )));
    }
    let steps = n_steps - 1;
    let (base, extra) = (steps / n_windows, steps % n_windows);
    let mut boundaries = vec![0];
    for i in 0..n_windows {
        let len = base + usize::from(i < extra);
        boundaries.push(boundaries[i] + len);
    }
    Ok(WindowLayout { boundaries })
}

impl WindowLayout {
    pub fn n_windows(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn start(&self, i: usize) -> usize {
        self.boundaries[i]
    }

    pub fn end(&self, i: usize) -> usize {
        self.boundaries[i + 1]
    }

    /// Propagator steps in window `i`.
    pub fn steps(&self, i: usize) -> usize {
        self.end(i) - self.start(i)
    }

    pub fn last_index(&self) -> usize {
        *self.boundaries.last().unwrap()
    }

    /// Window that owns time index `k`: a boundary index belongs to the
    /// earlier window and index 0 to the first.
    pub fn owner(&self, k: usize) -> Result<usize> {
        if k > self.last_index() {
            return Err(WeldError::invalid(format!(
                "time index {k} beyond last index {}",
                self.last_index()
            )));
        }
        Ok((0..self.n_windows()).find(|&i| k <= self.end(i)).unwrap())
    }

    pub fn validate(&self) -> Result<()> {
        if self.boundaries.len() < 2 || self.boundaries[0] != 0 || self.boundaries.windows(2).any(|w| w[1] <= w[0]) {
            return Err(WeldError::invalid(format!("malformed window boundaries {:?}", self.boundaries)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_splits() {
        assert_eq!(split_windows(301, 4).unwrap().boundaries, vec![0, 75, 150, 225, 300]);
        assert_eq!(split_windows(301, 1).unwrap().boundaries, vec![0, 300]);
        assert_eq!(split_windows(301, 2).unwrap().boundaries, vec![0, 150, 300]);
        assert_eq!(split_windows(12, 3).unwrap().boundaries, vec![0, 4, 8, 11]);
        assert_eq!(split_windows(11, 4).unwrap().boundaries, vec![0, 3, 6, 8, 10]);
    }

    #[test]
    fn too_many_windows() {
        assert!(split_windows(5, 5).is_err());
        assert!(split_windows(5, 4).is_ok());
        assert!(split_windows(5, 0).is_err());
    }

    #[test]
    fn ownership() {
        let l = split_windows(301, 4).unwrap();
        assert_eq!(l.owner(0).unwrap(), 0);
        assert_eq!(l.owner(75).unwrap(), 0);
        assert_eq!(l.owner(76).unwrap(), 1);
        assert_eq!(l.owner(300).unwrap(), 3);
        assert!(l.owner(301).is_err());
    }
}
