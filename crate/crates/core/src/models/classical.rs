use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use num_complex::Complex64;

use super::Market;
use crate::algebra::{AlgebraElement, Filtration, MultiMatrixAlgebra, Subalgebra};
use crate::error::{Error, Result};
use crate::integration::AdaptedProcess;

pub const MAX_PERIODS: usize = 4;
pub const MAX_BRANCHING: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    /// Undiscounted price at this node.
    pub price: f64,
    pub children: Vec<TreeNode>,
}

impl TreeNode {
    pub fn leaf(price: f64) -> Self {
        Self {
            price,
            children: Vec::new(),
        }
    }

    fn depth(&self) -> Option<usize> {
        let mut d = None;
        for c in &self.children {
            let cd = c.depth()? + 1;
            if d.is_some_and(|d| d != cd) {
                return None;
            }
            d = Some(cd);
        }
        Some(d.unwrap_or(0))
    }

    fn leaves(&self) -> usize {
        if self.children.is_empty() {
            1
        } else {
            self.children.iter().map(TreeNode::leaves).sum()
        }
    }
}

/// A one-asset market on a finite tree with a per-period riskless rate. All leaves
/// sit at the same depth; leaves are numbered depth-first.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalTree {
    root: TreeNode,
    rate: f64,
    periods: usize,
}

impl ClassicalTree {
    pub fn new(root: TreeNode, rate: f64) -> Result<Self> {
        if !(rate > -1.0) || !rate.is_finite() {
            return Err(Error::Domain(format!("rate {rate} must be finite and > -1")));
        }
        fn prices_ok(n: &TreeNode) -> bool {
            n.price.is_finite() && n.price > 0.0 && n.children.iter().all(prices_ok)
        }
        if !prices_ok(&root) {
            return Err(Error::Domain("tree prices must be finite and positive".into()));
        }
        let periods = root
            .depth()
            .ok_or_else(|| Error::Domain("tree leaves are not all at the same depth".into()))?;
        Ok(Self {
            root,
            rate,
            periods,
        })
    }

    /// Recombining-price binomial tree `S_0 u^i d^j`, up branch first.
    pub fn binomial(spot: f64, up: f64, down: f64, rate: f64, periods: usize) -> Result<Self> {
        fn grow(price: f64, up: f64, down: f64, left: usize) -> TreeNode {
            if left == 0 {
                return TreeNode::leaf(price);
            }
            TreeNode {
                price,
                children: vec![grow(price * up, up, down, left - 1), grow(price * down, up, down, left - 1)],
            }
        }
        if !(up > 0.0 && down > 0.0) {
            return Err(Error::Domain(format!("up {up} and down {down} must be positive")));
        }
        if periods > MAX_PERIODS {
            return Err(Error::Domain(format!(
                "{periods} periods exceeds the limit of {MAX_PERIODS}"
            )));
        }
        Self::new(grow(spot, up, down, periods), rate)
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn leaf_count(&self) -> usize {
        self.root.leaves()
    }

    /// Errors when the tree is beyond desk scale.
    pub fn check_size(&self) -> Result<()> {
        fn branching(n: &TreeNode) -> usize {
            n.children.iter().map(branching).fold(n.children.len(), usize::max)
        }
        if self.periods > MAX_PERIODS {
            return Err(Error::Domain(format!(
                "tree has {} periods, limit {MAX_PERIODS}",
                self.periods
            )));
        }
        let b = branching(&self.root);
        if b > MAX_BRANCHING {
            return Err(Error::Domain(format!(
                "tree has a node with {b} branches, limit {MAX_BRANCHING}"
            )));
        }
        Ok(())
    }

    /// Nodes at depth `k` with the range of leaves below each.
    pub fn nodes_at_depth(&self, k: usize) -> Vec<(&TreeNode, Range<usize>)> {
        fn walk<'a>(
            n: &'a TreeNode,
            depth: usize,
            k: usize,
            start: &mut usize,
            out: &mut Vec<(&'a TreeNode, Range<usize>)>,
        ) {
            if depth == k {
                let len = n.leaves();
                out.push((n, *start..*start + len));
                *start += len;
                return;
            }
            for c in &n.children {
                walk(c, depth + 1, k, start, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.root, 0, k, &mut 0, &mut out);
        out
    }
}

/// Diagonal embedding of a classical tree in `M_N`, `N` = number of leaves, with the
/// uniform trace. Level `k` holds the diagonal matrices constant on depth-`k` node
/// classes and `X_k` carries the discounted prices on the diagonal.
pub fn embed_classical(tree: &ClassicalTree) -> Result<Market> {
    tree.check_size()?;
    let n = tree.leaf_count();
    let alg = MultiMatrixAlgebra::matrix(n)?;
    let mut levels = Vec::with_capacity(tree.periods() + 1);
    let mut values = Vec::with_capacity(tree.periods() + 1);
    for k in 0..=tree.periods() {
        let nodes = tree.nodes_at_depth(k);
        let discount = libm::pow(1.0 + tree.rate(), k as f64);
        let mut diag = vec![0.0; n];
        let mut basis = Vec::with_capacity(nodes.len());
        for (node, range) in &nodes {
            let s = 1.0 / libm::sqrt(range.len() as f64 / n as f64);
            let mut p = AlgebraElement::zeros(&[n]);
            for i in range.clone() {
                p.blocks_mut()[0][(i, i)] = Complex64::new(s, 0.0);
                diag[i] = node.price / discount;
            }
            basis.push(p);
        }
        levels.push(Subalgebra::from_basis_unchecked(basis));
        values.push(AlgebraElement::diagonal(&[&diag]));
    }
    let f = Arc::new(Filtration::with_unit_steps(alg, levels)?);
    let x = AdaptedProcess::new(f.clone(), values)?;
    Ok((f, x))
}
