use alloc::vec;
use alloc::vec::Vec;

use super::verdict::Outcome;
use crate::error::Result;
use crate::models::{ClassicalTree, TreeNode};

/// Ground truth for a classical tree market.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalVerdict {
    /// [`Outcome::Ems`] or [`Outcome::Arbitrage`]; never undecided.
    pub outcome: Outcome,
    /// A strictly positive risk-neutral measure on the leaves (depth-first order)
    /// when one exists.
    pub measure: Option<Vec<f64>>,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Strictly positive one-step measure on `node`'s children with mean
/// `(1 + r) S`, or `None` when the forward price is not in the relative interior of
/// the children's prices. The average of the two-point measures over every
/// (below, above) pair plus point masses on exact hits is used.
fn local_measure(node: &TreeNode, rate: f64) -> Option<Vec<f64>> {
    let fwd = node.price * (1.0 + rate);
    let prices: Vec<f64> = node.children.iter().map(|c| c.price).collect();
    let hit: Vec<usize> = (0..prices.len()).filter(|&i| close(prices[i], fwd)).collect();
    let lo: Vec<usize> = (0..prices.len()).filter(|&i| !close(prices[i], fwd) && prices[i] < fwd).collect();
    let hi: Vec<usize> = (0..prices.len()).filter(|&i| !close(prices[i], fwd) && prices[i] > fwd).collect();
    if lo.is_empty() != hi.is_empty() {
        return None;
    }
    let count = (lo.len() * hi.len() + hit.len()) as f64;
    let mut q = vec![0.0; prices.len()];
    for &l in &lo {
        for &h in &hi {
            let qh = (fwd - prices[l]) / (prices[h] - prices[l]);
            q[h] += qh / count;
            q[l] += (1.0 - qh) / count;
        }
    }
    for &e in &hit {
        q[e] += 1.0 / count;
    }
    Some(q)
}

/// Decides whether `tree` admits a strictly positive martingale measure for the
/// discounted price, node by node.
pub fn classical_oracle(tree: &ClassicalTree) -> Result<ClassicalVerdict> {
    tree.check_size()?;
    fn walk(node: &TreeNode, rate: f64, mass: f64, out: &mut Vec<f64>) -> bool {
        if node.children.is_empty() {
            out.push(mass);
            return true;
        }
        let Some(q) = local_measure(node, rate) else {
            return false;
        };
        node.children
            .iter()
            .zip(q)
            .all(|(c, qc)| walk(c, rate, mass * qc, out))
    }
    let mut measure = Vec::with_capacity(tree.leaf_count());
    Ok(if walk(tree.root(), tree.rate(), 1.0, &mut measure) {
        ClassicalVerdict {
            outcome: Outcome::Ems,
            measure: Some(measure),
        }
    } else {
        ClassicalVerdict {
            outcome: Outcome::Arbitrage,
            measure: None,
        }
    })
}
