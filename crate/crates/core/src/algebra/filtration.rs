use alloc::format;
use alloc::vec::Vec;

use super::{MultiMatrixAlgebra, Subalgebra, SubalgebraReport};
use crate::error::{Error, Result};

/// Increasing family of subalgebras over a finite time grid `0 = t_0 < … < t_m`.
///
/// Construction only checks structure (grid, shapes); nesting and `A_0 = C·I` are
/// reported by [`Filtration::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    algebra: MultiMatrixAlgebra,
    times: Vec<f64>,
    levels: Vec<Subalgebra>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelReport {
    pub index: usize,
    pub time: f64,
    pub subalgebra: SubalgebraReport,
    /// Largest projection residual of this level's basis onto the next level.
    pub inclusion_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiltrationReport {
    pub level0_dim: usize,
    pub levels: Vec<LevelReport>,
    pub passed: bool,
}

impl FiltrationReport {
    /// First failing level and a description of the failure.
    pub fn first_failure(&self, tol: f64) -> Option<(usize, alloc::string::String)> {
        if self.level0_dim != 1 {
            return Some((0, format!("level 0 has dimension {}, expected 1", self.level0_dim)));
        }
        for l in &self.levels {
            if !l.subalgebra.passed {
                return Some((
                    l.index,
                    format!(
                        "level {} is not a unital *-subalgebra (residual {:.3e})",
                        l.index,
                        l.subalgebra.worst_residual()
                    ),
                ));
            }
            if let Some(r) = l.inclusion_residual {
                if r > tol {
                    return Some((
                        l.index,
                        format!(
                            "level {} is not contained in level {} (inclusion residual {:.3e})",
                            l.index,
                            l.index + 1,
                            r
                        ),
                    ));
                }
            }
        }
        None
    }
}

impl Filtration {
    pub fn new(
        algebra: MultiMatrixAlgebra,
        times: Vec<f64>,
        levels: Vec<Subalgebra>,
    ) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidFiltration("empty time grid".into()));
        }
        if times.len() != levels.len() {
            return Err(Error::InvalidFiltration(format!(
                "{} times but {} levels",
                times.len(),
                levels.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidFiltration(format!(
                "grid must start at 0, starts at {}",
                times[0]
            )));
        }
        if let Some(k) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidFiltration(format!(
                "times not strictly increasing at index {}",
                k + 1
            )));
        }
        for level in &levels {
            level.check_algebra(&algebra)?;
            for b in level.basis() {
                algebra.check(b)?;
            }
        }
        Ok(Self {
            algebra,
            times,
            levels,
        })
    }

    /// Integer grid `0, 1, …, m`.
    pub fn with_unit_steps(algebra: MultiMatrixAlgebra, levels: Vec<Subalgebra>) -> Result<Self> {
        let times = (0..levels.len()).map(|k| k as f64).collect();
        Self::new(algebra, times, levels)
    }

    pub fn algebra(&self) -> &MultiMatrixAlgebra {
        &self.algebra
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn levels(&self) -> &[Subalgebra] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> &Subalgebra {
        &self.levels[k]
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of trading intervals `[t_k, t_{k+1})`.
    pub fn num_steps(&self) -> usize {
        self.times.len() - 1
    }

    /// Index of grid time `t`.
    pub fn time_index(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * (1.0 + t.abs()))
            .ok_or(Error::OffGrid { time: t })
    }

    pub fn validate(&self, tol: f64) -> FiltrationReport {
        let mut levels = Vec::with_capacity(self.levels.len());
        for (k, level) in self.levels.iter().enumerate() {
            let inclusion_residual = self.levels.get(k + 1).map(|next| {
                level
                    .basis()
                    .iter()
                    .map(|b| next.residual(&self.algebra, b))
                    .fold(0.0, f64::max)
            });
            levels.push(LevelReport {
                index: k,
                time: self.times[k],
                subalgebra: level.validate(&self.algebra, tol),
                inclusion_residual,
            });
        }
        let level0_dim = self.levels[0].dim();
        let passed = level0_dim == 1
            && levels.iter().all(|l| {
                l.subalgebra.passed && l.inclusion_residual.is_none_or(|r| r <= tol)
            });
        FiltrationReport {
            level0_dim,
            levels,
            passed,
        }
    }
}
