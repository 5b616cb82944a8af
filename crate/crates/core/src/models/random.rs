use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Market;
use crate::algebra::{make_subalgebra, AlgebraElement, Filtration, MultiMatrixAlgebra, RealGramSchmidt, Subalgebra};
use crate::error::{Error, Result};
use crate::integration::{AdaptedProcess, TradingStrategy};
use crate::martingale::State;

pub const MAX_TOTAL_DIM: usize = 64;

fn unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen_range(-1.0..1.0)
}

fn complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(unit(rng), unit(rng))
}

fn random_block<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |_, _| complex(rng))
}

/// `Σ_i c_i b_i` over the basis of `sub` with complex coefficients uniform in the unit
/// square.
pub fn random_element_in<R: Rng + ?Sized>(rng: &mut R, alg: &MultiMatrixAlgebra, sub: &Subalgebra) -> AlgebraElement {
    let mut x = alg.zero();
    for b in sub.basis() {
        x.axpy(complex(rng), b);
    }
    x
}

/// Self-adjoint part of [`random_element_in`]; stays in `sub` since it is *-closed.
pub fn random_hermitian_in<R: Rng + ?Sized>(rng: &mut R, alg: &MultiMatrixAlgebra, sub: &Subalgebra) -> AlgebraElement {
    random_element_in(rng, alg, sub).hermitian_part()
}

/// A strategy holding `terms` random positions from the current level on every
/// interval, with weights in `[-1, 1]`.
pub fn random_strategy<R: Rng + ?Sized>(rng: &mut R, filtration: &Arc<Filtration>, terms: usize) -> TradingStrategy {
    let alg = filtration.algebra();
    let steps = (0..filtration.num_steps())
        .map(|k| {
            (0..terms)
                .map(|_| (unit(rng), random_element_in(rng, alg, filtration.level(k))))
                .collect()
        })
        .collect();
    TradingStrategy::new(filtration.clone(), steps).expect("positions are drawn from the filtration")
}

/// A faithful state: `ρ ∝ G G* + I/10` blockwise.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, alg: &MultiMatrixAlgebra) -> State {
    let blocks = alg
        .block_dims()
        .iter()
        .map(|&n| {
            let g = random_block(rng, n);
            &g * g.adjoint() + DMatrix::identity(n, n).scale(0.1)
        })
        .collect();
    let rho = AlgebraElement::from_blocks(blocks);
    let t = alg.trace(&rho).expect("shapes match").re;
    State::new(alg, rho.scale_real(1.0 / t), 1e-8).expect("positive definite with unit trace")
}

fn random_generator<R: Rng + ?Sized>(rng: &mut R, alg: &MultiMatrixAlgebra) -> AlgebraElement {
    let dims = alg.block_dims();
    let b = rng.gen_range(0..dims.len());
    let n = dims[b];
    let mut g = alg.zero();
    match rng.gen_range(0..3) {
        // Orthogonal projection of random rank inside one block.
        0 => {
            let rank = rng.gen_range(1..=n);
            let v = random_block(rng, n).columns(0, rank).into_owned();
            let q = v.qr().q();
            g.blocks_mut()[b] = &q * q.adjoint();
        }
        // Self-adjoint element across all blocks.
        1 => {
            for (blk, &n) in g.blocks_mut().iter_mut().zip(dims) {
                let m = random_block(rng, n);
                *blk = (&m + m.adjoint()).scale(0.5);
            }
        }
        // Self-adjoint element supported in one block.
        _ => {
            let m = random_block(rng, n);
            g.blocks_mut()[b] = (&m + m.adjoint()).scale(0.5);
        }
    }
    g
}

fn random_filtration(rng: &mut ChaCha8Rng, alg: &MultiMatrixAlgebra, periods: usize) -> Result<Arc<Filtration>> {
    let mut levels = Vec::with_capacity(periods + 1);
    levels.push(Subalgebra::scalars(alg));
    for _ in 1..periods {
        let prev: &Subalgebra = levels.last().expect("level 0 exists");
        let mut gens: Vec<AlgebraElement> = prev.basis().to_vec();
        gens.push(random_generator(rng, alg));
        let next = make_subalgebra(alg, &gens)?;
        levels.push(next);
    }
    if periods > 0 {
        levels.push(Subalgebra::full(alg));
    }
    Ok(Arc::new(Filtration::with_unit_steps(alg.clone(), levels)?))
}

fn setup(block_dims: &[usize], periods: usize) -> Result<MultiMatrixAlgebra> {
    let total: usize = block_dims.iter().sum();
    if total > MAX_TOTAL_DIM {
        return Err(Error::Domain(format!(
            "total dimension {total} exceeds the limit of {MAX_TOTAL_DIM}"
        )));
    }
    if periods == 0 {
        return Err(Error::Domain("need at least one period".into()));
    }
    MultiMatrixAlgebra::with_default_weights(block_dims.to_vec())
}

/// Seeded random market: level 0 is `C·I`, each later level is generated by the
/// previous one plus a random projection or self-adjoint element, the last level is
/// the whole algebra. `X_0 = c I` and `ΔX_k` is a random self-adjoint element of
/// level `k + 1`.
pub fn random_market(seed: u64, block_dims: &[usize], periods: usize) -> Result<Market> {
    let alg = setup(block_dims, periods)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_filtration(&mut rng, &alg, periods)?;
    let mut values = Vec::with_capacity(periods + 1);
    let mut x = alg.identity().scale_real(rng.gen_range(0.5..2.0));
    values.push(x.clone());
    for k in 0..periods {
        x = &x + &random_hermitian_in(&mut rng, &alg, f.level(k + 1));
        values.push(x.clone());
    }
    let x = AdaptedProcess::new(f.clone(), values)?;
    Ok((f, x))
}

/// Like [`random_market`], but every increment is projected so that the returned
/// faithful state is a martingale state.
pub fn random_martingale_market(seed: u64, block_dims: &[usize], periods: usize) -> Result<(Arc<Filtration>, AdaptedProcess, State)> {
    let alg = setup(block_dims, periods)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_filtration(&mut rng, &alg, periods)?;
    let state = random_state(&mut rng, &alg);
    let rho = state.density();
    let mut values = Vec::with_capacity(periods + 1);
    let mut x = alg.identity().scale_real(rng.gen_range(0.5..2.0));
    values.push(x.clone());
    for k in 0..periods {
        let next = f.level(k + 1);
        // ΔX must satisfy τ(b_j* ρ b_i ΔX) = 0; only the part of b_j* ρ b_i inside
        // the next level matters.
        let mut span = RealGramSchmidt::new();
        let basis = f.level(k).basis();
        for bi in basis {
            let rb = rho * bi;
            for bj in basis {
                let y = &bj.adjoint() * &rb;
                let y = alg.conditional_expectation(&y, next)?;
                let re = y.hermitian_part();
                let im = (&y - &y.adjoint()).scale(Complex64::new(0.0, -0.5));
                span.push(&alg.hermitian_coords(&re), 1e-12);
                span.push(&alg.hermitian_coords(&im), 1e-12);
            }
        }
        let dx = random_hermitian_in(&mut rng, &alg, next);
        let v = alg.hermitian_coords(&dx);
        let p = span.project(&v);
        let v: Vec<f64> = v.iter().zip(&p).map(|(a, b)| a - b).collect();
        x = &x + &alg.from_hermitian_coords(&v);
        values.push(x.clone());
    }
    let x = AdaptedProcess::new(f.clone(), values)?;
    Ok((f, x, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::DEFAULT_TOL;
    use crate::martingale::is_martingale;

    #[test]
    fn deterministic_and_valid() {
        let (f1, x1) = random_market(7, &[2, 1], 3).unwrap();
        let (f2, x2) = random_market(7, &[2, 1], 3).unwrap();
        assert_eq!(*f1, *f2);
        assert_eq!(x1, x2);
        assert!(f1.validate(DEFAULT_TOL).passed);
        assert!(x1.validate(DEFAULT_TOL).passed);
        assert_eq!(f1.level(0).dim(), 1);
        assert_eq!(f1.level(3).dim(), 5);
    }

    #[test]
    fn martingale_market_is_a_martingale() {
        for seed in 0..5 {
            let (f, x, s) = random_martingale_market(seed, &[2, 2], 2).unwrap();
            assert!(f.validate(DEFAULT_TOL).passed);
            assert!(x.validate(DEFAULT_TOL).passed);
            assert!(is_martingale(&x, &s, DEFAULT_TOL).unwrap().holds, "seed {seed}");
        }
    }

    #[test]
    fn dimension_cap() {
        assert!(random_market(0, &[40, 30], 1).is_err());
    }
}
