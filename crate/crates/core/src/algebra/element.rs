use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use num_complex::Complex64;

/// A complex matrix block.
pub type Block = DMatrix<Complex64>;

/// An element of a direct sum of matrix algebras: one square block per summand.
///
/// Arithmetic between elements assumes matching block shapes and panics otherwise,
/// the same way matrix arithmetic does. Shape checks against an owning algebra are
/// done by [`MultiMatrixAlgebra::check`](super::MultiMatrixAlgebra::check).
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    blocks: Vec<Block>,
}

impl AlgebraElement {
    pub fn from_blocks(blocks: Vec<Block>) -> Self {
        Self { blocks }
    }

    pub fn zeros(block_dims: &[usize]) -> Self {
        Self {
            blocks: block_dims.iter().map(|&n| Block::zeros(n, n)).collect(),
        }
    }

    pub fn identity(block_dims: &[usize]) -> Self {
        Self {
            blocks: block_dims.iter().map(|&n| Block::identity(n, n)).collect(),
        }
    }

    /// Real diagonal element, one slice of diagonal entries per block.
    pub fn diagonal(diagonals: &[&[f64]]) -> Self {
        Self {
            blocks: diagonals
                .iter()
                .map(|d| {
                    let n = d.len();
                    Block::from_fn(n, n, |i, j| {
                        if i == j {
                            Complex64::new(d[i], 0.0)
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    })
                })
                .collect(),
        }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [Block] {
        &mut self.blocks
    }

    pub fn into_blocks(self) -> Vec<Block> {
        self.blocks
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            blocks: self.blocks.iter().map(|b| b.adjoint()).collect(),
        }
    }

    /// `(x + x*) / 2`
    pub fn hermitian_part(&self) -> Self {
        Self {
            blocks: self
                .blocks
                .iter()
                .map(|b| (b + b.adjoint()).scale(0.5))
                .collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            blocks: self.blocks.iter().map(|b| b * c).collect(),
        }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        Self {
            blocks: self.blocks.iter().map(|b| b.scale(c)).collect(),
        }
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: Complex64, other: &Self) {
        assert_eq!(self.blocks.len(), other.blocks.len(), "block count mismatch");
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a += b * c;
        }
    }

    /// `self += c * other` for a real coefficient.
    pub fn axpy_real(&mut self, c: f64, other: &Self) {
        assert_eq!(self.blocks.len(), other.blocks.len(), "block count mismatch");
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            a.zip_apply(b, |x, y| *x += y * c);
        }
    }

    /// `a * self * b`
    pub fn sandwich(&self, a: &Self, b: &Self) -> Self {
        Self {
            blocks: a
                .blocks
                .iter()
                .zip(&self.blocks)
                .zip(&b.blocks)
                .map(|((l, m), r)| l * m * r)
                .collect(),
        }
    }

    /// Largest entry modulus over all blocks.
    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Largest entry modulus of `x - x*`.
    pub fn self_adjoint_defect(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let n = b.nrows();
                let mut worst: f64 = 0.0;
                for i in 0..n {
                    for j in i..n {
                        worst = worst.max((b[(i, j)] - b[(j, i)].conj()).norm());
                    }
                }
                worst
            })
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(|b| b.iter().all(|z| z.re == 0.0 && z.im == 0.0))
    }
}

impl Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        assert_eq!(self.blocks.len(), rhs.blocks.len(), "block count mismatch");
        AlgebraElement {
            blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        assert_eq!(self.blocks.len(), rhs.blocks.len(), "block count mismatch");
        AlgebraElement {
            blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, rhs: &AlgebraElement) -> AlgebraElement {
        assert_eq!(self.blocks.len(), rhs.blocks.len(), "block count mismatch");
        AlgebraElement {
            blocks: self.blocks.iter().zip(&rhs.blocks).map(|(a, b)| a * b).collect(),
        }
    }
}

impl Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        AlgebraElement {
            blocks: self.blocks.iter().map(|b| -b).collect(),
        }
    }
}

impl AddAssign<&AlgebraElement> for AlgebraElement {
    fn add_assign(&mut self, rhs: &AlgebraElement) {
        assert_eq!(self.blocks.len(), rhs.blocks.len(), "block count mismatch");
        for (a, b) in self.blocks.iter_mut().zip(&rhs.blocks) {
            *a += b;
        }
    }
}

impl SubAssign<&AlgebraElement> for AlgebraElement {
    fn sub_assign(&mut self, rhs: &AlgebraElement) {
        assert_eq!(self.blocks.len(), rhs.blocks.len(), "block count mismatch");
        for (a, b) in self.blocks.iter_mut().zip(&rhs.blocks) {
            *a -= b;
        }
    }
}
