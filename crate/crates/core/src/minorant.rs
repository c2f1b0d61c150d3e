//! Piecewise-affine minorants with limited memory.
//!
//! A [`CutPool`] represents `Σ_b w_b · max_j (a_bj·x + β_bj)` where each block
//! may additionally be clipped at zero. Memory bounds how many past
//! minorant generations each block retains.

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::dot;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MinorantError {
    #[error("non-finite value in cut data")]
    NonFinite,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("block {0} does not exist")]
    NoSuchBlock(usize),
    #[error("negative block weight {0}")]
    NegativeWeight(f64),
}

/// The affine function `x ↦ coeff·x + offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineCut {
    pub coeff: Vec<f64>,
    pub offset: f64,
    pub birth_iter: usize,
}

impl AffineCut {
    pub fn new(coeff: Vec<f64>, offset: f64) -> Result<Self, MinorantError> {
        if !offset.is_finite() || coeff.iter().any(|c| !c.is_finite()) {
            return Err(MinorantError::NonFinite);
        }
        Ok(Self {
            coeff,
            offset,
            birth_iter: 0,
        })
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        Self {
            coeff: vec![0.0; dim],
            offset: value,
            birth_iter: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.coeff.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.coeff, x) + self.offset
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            coeff: self.coeff.iter().map(|c| alpha * c).collect(),
            offset: alpha * self.offset,
            birth_iter: self.birth_iter,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.coeff.iter().all(|&c| c == 0.0)
    }

    fn same_function(&self, other: &Self) -> bool {
        self.offset == other.offset && self.coeff == other.coeff
    }
}

/// Affine minorant `f(z) + g·(x − z)` built from a subgradient `g ∈ ∂f(z)`.
pub fn cut_from_subgradient(z: &[f64], fz: f64, g: &[f64]) -> Result<AffineCut, MinorantError> {
    if z.len() != g.len() {
        return Err(MinorantError::Dimension {
            expected: z.len(),
            got: g.len(),
        });
    }
    if !fz.is_finite() || z.iter().chain(g).any(|v| !v.is_finite()) {
        return Err(MinorantError::NonFinite);
    }
    AffineCut::new(g.to_vec(), fz - dot(g, z))
}

/// `weight · max_j cut_j(x)`, optionally `max(·, 0)` before weighting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutBlock {
    pub weight: f64,
    pub cuts: Vec<AffineCut>,
    pub clip_at_zero: bool,
}

impl CutBlock {
    pub fn new(weight: f64, clip_at_zero: bool) -> Result<Self, MinorantError> {
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(MinorantError::NegativeWeight(weight));
        }
        Ok(Self {
            weight,
            cuts: Vec::new(),
            clip_at_zero,
        })
    }

    pub fn with_cuts(weight: f64, clip_at_zero: bool, cuts: Vec<AffineCut>) -> Result<Self, MinorantError> {
        let mut b = Self::new(weight, clip_at_zero)?;
        b.cuts = cuts;
        Ok(b)
    }

    /// Unweighted value; `None` for an empty block.
    pub fn inner_value(&self, x: &[f64]) -> Option<f64> {
        let best = self
            .cuts
            .iter()
            .map(|c| c.eval(x))
            .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
        best.map(|v| if self.clip_at_zero { v.max(0.0) } else { v })
    }

    /// Index of a cut attaining the block maximum at `x`, or `None` when the
    /// clip at zero is strictly active or the block is empty.
    pub fn active_cut(&self, x: &[f64]) -> Option<usize> {
        let (idx, val) = self
            .cuts
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.eval(x)))
            .fold(None, |m: Option<(usize, f64)>, (i, v)| match m {
                Some((_, mv)) if mv >= v => m,
                _ => Some((i, v)),
            })?;
        if self.clip_at_zero && val < 0.0 {
            None
        } else {
            Some(idx)
        }
    }

    fn shape_matches(&self, other: &Self) -> bool {
        self.weight == other.weight && self.clip_at_zero == other.clip_at_zero
    }
}

/// Limited-memory piecewise-affine minorant of one function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutPool {
    pub blocks: Vec<CutBlock>,
    /// Number of past minorant generations retained per block, in addition
    /// to the current one.
    pub memory: usize,
    /// Function value at the anchor of the most recent minorant.
    pub tight_value: f64,
    dim: usize,
}

impl CutPool {
    pub fn new(dim: usize, memory: usize) -> Self {
        Self {
            blocks: Vec::new(),
            memory,
            tight_value: f64::NAN,
            dim,
        }
    }

    /// A fresh minorant with the given blocks.
    pub fn from_blocks(dim: usize, blocks: Vec<CutBlock>, tight_value: f64) -> Result<Self, MinorantError> {
        for b in &blocks {
            for c in &b.cuts {
                if c.dim() != dim {
                    return Err(MinorantError::Dimension {
                        expected: dim,
                        got: c.dim(),
                    });
                }
            }
        }
        Ok(Self {
            blocks,
            memory: usize::MAX,
            tight_value,
            dim,
        })
    }

    /// Single-block pool holding one cut with weight 1.
    pub fn single_cut(cut: AffineCut, tight_value: f64) -> Self {
        let dim = cut.dim();
        Self {
            blocks: vec![CutBlock {
                weight: 1.0,
                cuts: vec![cut],
                clip_at_zero: false,
            }],
            memory: usize::MAX,
            tight_value,
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(|b| b.cuts.is_empty())
    }

    pub fn cut_count(&self) -> usize {
        self.blocks.iter().map(|b| b.cuts.len()).sum()
    }

    pub fn add_block(&mut self, block: CutBlock) -> usize {
        self.blocks.push(block);
        self.blocks.len() - 1
    }

    /// Appends `cut` to a block, then evicts the oldest generations beyond
    /// the memory bound. A cut identical to one already held refreshes that
    /// cut's birth iteration instead of duplicating it.
    pub fn insert(&mut self, block_id: usize, cut: AffineCut) -> Result<(), MinorantError> {
        if cut.dim() != self.dim {
            return Err(MinorantError::Dimension {
                expected: self.dim,
                got: cut.dim(),
            });
        }
        let memory = self.memory;
        let block = self
            .blocks
            .get_mut(block_id)
            .ok_or(MinorantError::NoSuchBlock(block_id))?;
        let newest = cut.birth_iter;
        if let Some(existing) = block.cuts.iter_mut().find(|c| c.same_function(&cut)) {
            existing.birth_iter = existing.birth_iter.max(newest);
        } else {
            block.cuts.push(cut);
        }
        evict(block, memory);
        Ok(())
    }

    /// Merges a fresh minorant computed at iteration `iter` into this pool.
    ///
    /// Blocks are matched by position. If the block layout differs from the
    /// retained one (different count, weights, or clipping), history is
    /// discarded and the fresh minorant replaces it.
    pub fn absorb(&mut self, fresh: &CutPool, iter: usize) -> Result<(), MinorantError> {
        if fresh.dim != self.dim {
            return Err(MinorantError::Dimension {
                expected: self.dim,
                got: fresh.dim,
            });
        }
        let compatible = self.blocks.len() == fresh.blocks.len()
            && self
                .blocks
                .iter()
                .zip(&fresh.blocks)
                .all(|(a, b)| a.shape_matches(b));
        if !compatible {
            self.blocks = fresh
                .blocks
                .iter()
                .map(|b| CutBlock {
                    weight: b.weight,
                    cuts: Vec::new(),
                    clip_at_zero: b.clip_at_zero,
                })
                .collect();
        }
        for (id, b) in fresh.blocks.iter().enumerate() {
            for c in &b.cuts {
                let mut c = c.clone();
                c.birth_iter = iter;
                self.insert(id, c)?;
            }
        }
        self.tight_value = fresh.tight_value;
        Ok(())
    }

    /// Evaluates the minorant. Empty blocks contribute zero.
    pub fn eval(&self, x: &[f64]) -> Result<f64, MinorantError> {
        if x.len() != self.dim {
            return Err(MinorantError::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut total = 0.0;
        for (i, b) in self.blocks.iter().enumerate() {
            match b.inner_value(x) {
                Some(v) => total += b.weight * v,
                None => warn!("cut pool block {i} is empty; treating it as zero"),
            }
        }
        Ok(total)
    }

    /// The affine function tight to this minorant at `x`: the weighted sum of
    /// each block's active cut.
    pub fn linearize(&self, x: &[f64]) -> AffineCut {
        let mut out = AffineCut::constant(self.dim, 0.0);
        for b in &self.blocks {
            if let Some(j) = b.active_cut(x) {
                let c = &b.cuts[j];
                for (o, a) in out.coeff.iter_mut().zip(&c.coeff) {
                    *o += b.weight * a;
                }
                out.offset += b.weight * c.offset;
            }
        }
        out
    }
}

fn evict(block: &mut CutBlock, memory: usize) {
    if memory == usize::MAX {
        return;
    }
    let mut generations: Vec<usize> = block.cuts.iter().map(|c| c.birth_iter).collect();
    generations.sort_unstable();
    generations.dedup();
    if generations.len() > memory + 1 {
        let cutoff = generations[generations.len() - memory - 1];
        block.cuts.retain(|c| c.birth_iter >= cutoff);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn cut_at(iter: usize, slope: f64) -> AffineCut {
        let mut c = AffineCut::new(vec![slope], -slope * slope).unwrap();
        c.birth_iter = iter;
        c
    }

    #[test]
    fn abs_cut_at_two() {
        let c = cut_from_subgradient(&[2.0], 2.0, &[1.0]).unwrap();
        assert_eq!(c.coeff, vec![1.0]);
        assert_eq!(c.offset, 0.0);
    }

    #[test]
    fn abs_cut_at_zero_is_zero() {
        let c = cut_from_subgradient(&[0.0], 0.0, &[0.0]).unwrap();
        assert!(c.is_constant());
        assert_eq!(c.offset, 0.0);
    }

    #[test]
    fn square_cut_is_a_tangent() {
        let c = cut_from_subgradient(&[1.0], 1.0, &[2.0]).unwrap();
        assert_eq!(c.eval(&[1.0]), 1.0);
        for i in 0..=2000 {
            let x = -10.0 + 0.01 * i as f64;
            assert!(c.eval(&[x]) <= x * x + 1e-12);
        }
    }

    #[test]
    fn subgradient_cut_rejects_bad_input() {
        assert_eq!(
            cut_from_subgradient(&[1.0], f64::NAN, &[1.0]),
            Err(MinorantError::NonFinite)
        );
        assert!(matches!(
            cut_from_subgradient(&[1.0, 2.0], 0.0, &[1.0]),
            Err(MinorantError::Dimension { .. })
        ));
    }

    #[test]
    fn zero_memory_keeps_newest_only() {
        let mut pool = CutPool::new(1, 0);
        pool.add_block(CutBlock::new(1.0, false).unwrap());
        for k in 1..=5 {
            pool.insert(0, cut_at(k, k as f64)).unwrap();
            assert_eq!(pool.blocks[0].cuts.len(), 1);
            assert_eq!(pool.blocks[0].cuts[0].birth_iter, k);
        }
    }

    #[test]
    fn fifo_eviction() {
        let mut pool = CutPool::new(1, 2);
        pool.add_block(CutBlock::new(1.0, false).unwrap());
        for k in 1..=4 {
            pool.insert(0, cut_at(k, k as f64)).unwrap();
        }
        let iters: Vec<usize> = pool.blocks[0].cuts.iter().map(|c| c.birth_iter).collect();
        assert_eq!(iters, vec![2, 3, 4]);
    }

    #[test]
    fn large_memory_retains_all() {
        let mut pool = CutPool::new(1, 100);
        pool.add_block(CutBlock::new(1.0, false).unwrap());
        for k in 1..=30 {
            pool.insert(0, cut_at(k, k as f64)).unwrap();
        }
        assert_eq!(pool.cut_count(), 30);
    }

    #[test]
    fn insert_into_missing_block() {
        let mut pool = CutPool::new(1, 3);
        assert_eq!(pool.insert(0, cut_at(1, 1.0)), Err(MinorantError::NoSuchBlock(0)));
    }

    #[test]
    fn eval_examples() {
        let pool = CutPool::single_cut(AffineCut::new(vec![1.0], 0.0).unwrap(), 3.0);
        assert_eq!(pool.eval(&[3.0]).unwrap(), 3.0);

        let block = CutBlock::with_cuts(
            1.0,
            false,
            vec![
                AffineCut::new(vec![1.0], 0.0).unwrap(),
                AffineCut::new(vec![-1.0], 0.0).unwrap(),
            ],
        )
        .unwrap();
        let pool = CutPool::from_blocks(1, vec![block], 2.0).unwrap();
        assert_eq!(pool.eval(&[-2.0]).unwrap(), 2.0);

        let blocks = vec![
            CutBlock::with_cuts(1.0, false, vec![AffineCut::constant(1, 1.0)]).unwrap(),
            CutBlock::with_cuts(2.0, false, vec![AffineCut::constant(1, 0.5)]).unwrap(),
        ];
        let pool = CutPool::from_blocks(1, blocks, 2.0).unwrap();
        assert_eq!(pool.eval(&[0.0]).unwrap(), 2.0);
    }

    #[test]
    fn empty_block_evaluates_to_zero() {
        let mut pool = CutPool::new(2, 1);
        pool.add_block(CutBlock::new(3.0, false).unwrap());
        assert_eq!(pool.eval(&[1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn eval_dimension_mismatch() {
        let pool = CutPool::new(2, 1);
        assert!(matches!(pool.eval(&[1.0]), Err(MinorantError::Dimension { .. })));
    }

    #[test]
    fn clipped_block() {
        let block = CutBlock::with_cuts(2.0, true, vec![AffineCut::new(vec![1.0], 0.0).unwrap()]).unwrap();
        let pool = CutPool::from_blocks(1, vec![block], 0.0).unwrap();
        assert_eq!(pool.eval(&[-3.0]).unwrap(), 0.0);
        assert_eq!(pool.eval(&[3.0]).unwrap(), 6.0);
        assert!(pool.linearize(&[-3.0]).is_constant());
    }

    #[test]
    fn negative_weight_rejected() {
        assert_eq!(CutBlock::new(-1.0, false), Err(MinorantError::NegativeWeight(-1.0)));
    }

    #[test]
    fn duplicate_cut_refreshes_birth() {
        let mut pool = CutPool::new(1, 1);
        pool.add_block(CutBlock::new(1.0, false).unwrap());
        pool.insert(0, cut_at(1, 1.0)).unwrap();
        pool.insert(0, cut_at(2, 2.0)).unwrap();
        pool.insert(0, cut_at(3, 1.0)).unwrap();
        let iters: Vec<usize> = pool.blocks[0].cuts.iter().map(|c| c.birth_iter).collect();
        assert_eq!(iters, vec![3, 2]);
    }

    /// Pools built from subgradients of a smooth convex function stay below it,
    /// stay tight at the latest anchor, and only grow as cuts are added.
    #[test]
    fn memory_pool_of_subgradient_cuts() {
        // f(x) = log(exp(x0) + exp(x1)) + 0.5 x0^2
        let f = |x: &[f64]| (x[0].exp() + x[1].exp()).ln() + 0.5 * x[0] * x[0];
        let grad = |x: &[f64]| {
            let s = x[0].exp() + x[1].exp();
            vec![x[0].exp() / s + x[0], x[1].exp() / s]
        };
        let mut rng = SeededRng::new(17);
        let samples: Vec<Vec<f64>> = (0..1000).map(|_| vec![3.0 * rng.normal(), 3.0 * rng.normal()]).collect();
        let mut pool = CutPool::new(2, 1000);
        let mut previous: Vec<f64> = vec![f64::NEG_INFINITY; samples.len()];
        for k in 1..=25 {
            let z = vec![2.0 * rng.normal(), 2.0 * rng.normal()];
            let fresh = CutPool::single_cut(cut_from_subgradient(&z, f(&z), &grad(&z)).unwrap(), f(&z));
            pool.absorb(&fresh, k).unwrap();
            let at_anchor = pool.eval(&z).unwrap();
            assert!((at_anchor - f(&z)).abs() <= 1e-9 * (1.0 + f(&z).abs()));
            for (x, prev) in samples.iter().zip(previous.iter_mut()) {
                let v = pool.eval(x).unwrap();
                assert!(v <= f(x) + 1e-9 * (1.0 + f(x).abs()));
                assert!(v >= *prev);
                *prev = v;
            }
        }
    }
}
