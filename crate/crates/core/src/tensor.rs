//! Tensor-level arithmetic on the truncated full Fock space.
//!
//! Level `n` of the full Fock space over `C^d` is `(C^d)^{⊗n}` with the
//! product basis indexed by tuples `(i₁,…,iₙ)`. Tuples are flattened
//! big-endian: the leftmost factor is the most significant digit, so
//! `x ⊗ X` has flat index `i·dⁿ + j` for `x = e_i`, `X = e_j`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, ONE};

/// Default cap on `dⁿ` for any single level.
pub const DEFAULT_LEVEL_CAP: usize = 200_000;

/// Environment variable overriding [`DEFAULT_LEVEL_CAP`].
pub const LEVEL_CAP_ENV: &str = "FOCKBENCH_LEVEL_CAP";

/// Level cap from the environment, falling back to the default.
pub fn level_cap() -> usize {
    std::env::var(LEVEL_CAP_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_LEVEL_CAP)
}

/// The full Fock space over `C^d` truncated at level `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncatedFockSpace {
    dim: usize,
    cutoff: usize,
}

impl TruncatedFockSpace {
    pub fn new(dim: usize, cutoff: usize) -> Result<Self> {
        Self::with_cap(dim, cutoff, level_cap())
    }

    pub fn with_cap(dim: usize, cutoff: usize, cap: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("one-particle dimension must be positive".into()));
        }
        let mut size: usize = 1;
        for level in 1..=cutoff {
            size = size
                .checked_mul(dim)
                .filter(|&s| s <= cap)
                .ok_or(Error::LevelCap { dim, level, cap })?;
        }
        Ok(TruncatedFockSpace { dim, cutoff })
    }

    /// One-particle dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Highest level `N`.
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// `dⁿ`.
    pub fn level_dim(&self, n: usize) -> usize {
        self.dim.pow(n as u32)
    }

    pub fn levels(&self) -> std::ops::RangeInclusive<usize> {
        0..=self.cutoff
    }
}

/// Big-endian flat index of a multi-index.
pub fn encode_index(multi: &[usize], dim: usize) -> Result<usize> {
    multi.iter().try_fold(0usize, |acc, &i| {
        if i >= dim {
            Err(Error::IndexOutOfRange { entry: i, dim })
        } else {
            Ok(acc * dim + i)
        }
    })
}

/// Inverse of [`encode_index`] for tuples of length `len`.
pub fn decode_index(mut flat: usize, len: usize, dim: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = flat % dim;
        flat /= dim;
    }
    out
}

/// An element of the truncated full Fock space, one dense vector per level.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedVector {
    levels: Vec<CVec>,
}

impl GradedVector {
    pub fn zeros(space: &TruncatedFockSpace) -> Self {
        GradedVector {
            levels: space.levels().map(|n| CVec::zeros(space.level_dim(n))).collect(),
        }
    }

    pub fn vacuum(space: &TruncatedFockSpace) -> Self {
        let mut v = Self::zeros(space);
        v.levels[0][0] = ONE;
        v
    }

    /// A vector concentrated on a single level.
    pub fn at_level(space: &TruncatedFockSpace, n: usize, x: CVec) -> Result<Self> {
        if n > space.cutoff() || x.len() != space.level_dim(n) {
            return Err(Error::Dimension(format!(
                "vector of length {} does not fit level {n}",
                x.len()
            )));
        }
        let mut v = Self::zeros(space);
        v.levels[n] = x;
        Ok(v)
    }

    pub fn level(&self, n: usize) -> &CVec {
        &self.levels[n]
    }

    pub fn levels(&self) -> &[CVec] {
        &self.levels
    }

    pub fn norm(&self) -> f64 {
        self.levels.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &GradedVector) -> num_complex::Complex64 {
        self.levels
            .iter()
            .zip(&other.levels)
            .map(|(a, b)| a.dotc(b))
            .sum()
    }
}

/// A homogeneous operator of fixed degree, stored as one block per source level.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedOperator {
    degree: i32,
    blocks: BTreeMap<usize, CMat>,
}

impl GradedOperator {
    pub fn new(degree: i32, blocks: BTreeMap<usize, CMat>) -> Self {
        GradedOperator { degree, blocks }
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    /// Block mapping level `n` to level `n + degree`.
    pub fn block(&self, n: usize) -> Option<&CMat> {
        self.blocks.get(&n)
    }

    pub fn blocks(&self) -> &BTreeMap<usize, CMat> {
        &self.blocks
    }

    pub fn apply(&self, x: &GradedVector) -> GradedVector {
        let mut out: Vec<CVec> = x.levels.iter().map(|v| CVec::zeros(v.len())).collect();
        for (&n, m) in &self.blocks {
            let target = n as i64 + self.degree as i64;
            if target < 0 || target as usize >= out.len() {
                continue;
            }
            out[target as usize] = m * &x.levels[n];
        }
        GradedVector { levels: out }
    }

    pub fn adjoint(&self) -> GradedOperator {
        let blocks = self
            .blocks
            .iter()
            .map(|(&n, m)| (((n as i64) + self.degree as i64) as usize, m.adjoint()))
            .collect();
        GradedOperator {
            degree: -self.degree,
            blocks,
        }
    }
}

/// Matrix of `X ↦ x ⊗ X` from level `n` to level `n+1`.
pub fn creator_block(x: &CVec, space: &TruncatedFockSpace, n: usize) -> CMat {
    let dn = space.level_dim(n);
    let col = CMat::from_column_slice(x.len(), 1, x.as_slice());
    col.kronecker(&CMat::identity(dn, dn))
}

/// Matrix of `X ↦ X ⊗ x` from level `n` to level `n+1`.
pub fn right_creator_block(x: &CVec, space: &TruncatedFockSpace, n: usize) -> CMat {
    let dn = space.level_dim(n);
    let col = CMat::from_column_slice(x.len(), 1, x.as_slice());
    CMat::identity(dn, dn).kronecker(&col)
}

/// The full-Fock creator `ℓ*(x)` on all levels below the cutoff.
pub fn left_creator(x: &CVec, space: &TruncatedFockSpace) -> Result<GradedOperator> {
    if x.len() != space.dim() {
        return Err(Error::Dimension(format!(
            "creator vector has length {}, expected {}",
            x.len(),
            space.dim()
        )));
    }
    let blocks = (0..space.cutoff())
        .map(|n| (n, creator_block(x, space, n)))
        .collect();
    Ok(GradedOperator::new(1, blocks))
}

/// The full-Fock annihilator `ℓ(x) = ℓ*(x)*`.
pub fn left_annihilator(x: &CVec, space: &TruncatedFockSpace) -> Result<GradedOperator> {
    Ok(left_creator(x, space)?.adjoint())
}

/// A permutation of `{0,…,n-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || seen[i] {
                return Err(Error::NotPermutation(images));
            }
            seen[i] = true;
        }
        Ok(Permutation(images))
    }

    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    /// `self ∘ other`, i.e. `k ↦ self(other(k))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation(other.0.iter().map(|&k| self.0[k]).collect())
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (k, &v) in self.0.iter().enumerate() {
            inv[v] = k;
        }
        Permutation(inv)
    }

    /// Number of pairs `a < b` with `σ(a) > σ(b)`.
    pub fn inversions(&self) -> usize {
        let p = &self.0;
        (0..p.len())
            .map(|a| (a + 1..p.len()).filter(|&b| p[a] > p[b]).count())
            .sum()
    }

    /// Adjacent swaps bubble sort needs to sort the image list.
    pub fn bubble_sort_swaps(&self) -> usize {
        let mut v = self.0.clone();
        let mut swaps = 0;
        for pass in 0..v.len() {
            for j in 0..v.len().saturating_sub(pass + 1) {
                if v[j] > v[j + 1] {
                    v.swap(j, j + 1);
                    swaps += 1;
                }
            }
        }
        swaps
    }

    /// Every permutation of `n` letters, in lexicographic order.
    pub fn all(n: usize) -> impl Iterator<Item = Permutation> {
        use itertools::Itertools;
        (0..n).permutations(n).map(Permutation)
    }

    /// Image tuple of the factor-permuting map.
    ///
    /// Tensor positions are counted from the right starting at 0 (so the
    /// rightmost factor sits at position 0); the factor at position `p` is
    /// moved to position `σ(p)`. This makes `σ ↦ P_σ` a homomorphism.
    pub fn permute_tuple(&self, tuple: &[usize]) -> Vec<usize> {
        let n = tuple.len();
        let mut out = vec![0; n];
        for (p, &target) in self.0.iter().enumerate() {
            out[n - 1 - target] = tuple[n - 1 - p];
        }
        out
    }
}

/// Matrix of the factor permutation `P_σ` on level `n = σ.len()`, with `inv(σ)`.
pub fn permutation_operator(sigma: &Permutation, space: &TruncatedFockSpace) -> Result<(CMat, usize)> {
    let n = sigma.len();
    if n > space.cutoff() {
        return Err(Error::Dimension(format!(
            "permutation of {n} letters above cutoff {}",
            space.cutoff()
        )));
    }
    let d = space.dim();
    let dn = space.level_dim(n);
    let mut m = CMat::zeros(dn, dn);
    for col in 0..dn {
        let t = decode_index(col, n, d);
        let row = encode_index(&sigma.permute_tuple(&t), d)?;
        m[(row, col)] = ONE;
    }
    Ok((m, sigma.inversions()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_vector, frobenius, gaussian_vector, max_abs_diff, C64};
    use rand::{seq::SliceRandom, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn space(d: usize, n: usize) -> TruncatedFockSpace {
        TruncatedFockSpace::new(d, n).unwrap()
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode_index(&[], 2).unwrap(), 0);
        assert_eq!(encode_index(&[1, 0], 2).unwrap(), 2);
        assert!(matches!(
            encode_index(&[0, 2], 2),
            Err(Error::IndexOutOfRange { entry: 2, dim: 2 })
        ));
    }

    #[test]
    fn encode_is_bijective_on_length_three_over_three_letters() {
        let mut hit = [false; 27];
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    let f = encode_index(&[a, b, c], 3).unwrap();
                    assert!(!hit[f]);
                    hit[f] = true;
                    assert_eq!(decode_index(f, 3, 3), vec![a, b, c]);
                }
            }
        }
        assert!(hit.iter().all(|&h| h));
    }

    #[test]
    fn level_cap_is_enforced() {
        assert!(matches!(
            TruncatedFockSpace::with_cap(10, 6, 200_000),
            Err(Error::LevelCap { level: 6, .. })
        ));
        assert!(TruncatedFockSpace::with_cap(10, 5, 200_000).is_ok());
    }

    #[test]
    fn creator_on_vacuum_and_on_level_one() {
        let s = space(2, 3);
        let a = left_creator(&basis_vector(2, 0), &s).unwrap();
        let out = a.apply(&GradedVector::vacuum(&s));
        assert_eq!(out.level(1), &basis_vector(2, 0));
        assert_eq!(out.level(0)[0], C64::new(0.0, 0.0));

        let b = left_creator(&basis_vector(2, 1), &s).unwrap();
        let y = GradedVector::at_level(&s, 1, basis_vector(2, 0)).unwrap();
        assert_eq!(b.apply(&y).level(2), &basis_vector(4, 2));
    }

    #[test]
    fn annihilator_examples() {
        let s = space(2, 3);
        let x = basis_vector(2, 0);
        let l = left_annihilator(&x, &s).unwrap();
        assert_eq!(l.apply(&GradedVector::vacuum(&s)).norm(), 0.0);
        // e0 ⊗ e1 has flat index 1
        let y = GradedVector::at_level(&s, 2, basis_vector(4, 1)).unwrap();
        assert_eq!(l.apply(&y).level(1), &basis_vector(2, 1));
    }

    #[test]
    fn free_relation_holds_levelwise() {
        let s = space(3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let x = gaussian_vector(&mut rng, 3);
            let y = gaussian_vector(&mut rng, 3);
            let ip = x.dotc(&y);
            for n in 0..3 {
                let prod = creator_block(&x, &s, n).adjoint() * creator_block(&y, &s, n);
                let target = CMat::identity(s.level_dim(n), s.level_dim(n)) * ip;
                assert!(max_abs_diff(&prod, &target) < 1e-12);
            }
        }
    }

    #[test]
    fn adjointness_on_random_graded_vectors() {
        let s = space(2, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = gaussian_vector(&mut rng, 2);
        let c = left_creator(&x, &s).unwrap();
        let a = left_annihilator(&x, &s).unwrap();
        let rand_graded = |rng: &mut ChaCha8Rng| {
            let mut v = GradedVector::zeros(&s);
            for n in 0..=4 {
                v.levels[n] = gaussian_vector(rng, s.level_dim(n));
            }
            v
        };
        let z = rand_graded(&mut rng);
        let y = rand_graded(&mut rng);
        let lhs = a.apply(&z).inner(&y);
        let rhs = z.inner(&c.apply(&y));
        assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn creator_is_linear() {
        let s = space(2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x = gaussian_vector(&mut rng, 2);
        let y = gaussian_vector(&mut rng, 2);
        let (al, be) = (C64::new(0.5, -1.25), C64::new(2.0, 0.75));
        let lhs = left_creator(&(&x * al + &y * be), &s).unwrap();
        let cx = left_creator(&x, &s).unwrap();
        let cy = left_creator(&y, &s).unwrap();
        for n in 0..3 {
            let rhs = cx.block(n).unwrap() * al + cy.block(n).unwrap() * be;
            assert!(max_abs_diff(lhs.block(n).unwrap(), &rhs) < 1e-15);
        }
    }

    #[test]
    fn permutation_examples() {
        let s = space(2, 4);
        let (m, inv) = permutation_operator(&Permutation::identity(3), &s).unwrap();
        assert_eq!(inv, 0);
        assert_eq!(m, CMat::identity(8, 8));

        let (flip, inv) = permutation_operator(&Permutation::new(vec![1, 0]).unwrap(), &s).unwrap();
        assert_eq!(inv, 1);
        let mut expected = CMat::zeros(4, 4);
        for (r, c) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            expected[(r, c)] = ONE;
        }
        assert_eq!(flip, expected);
        assert!(Permutation::new(vec![0, 0]).is_err());
    }

    #[test]
    fn permutation_action_is_a_homomorphism() {
        let s = space(2, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..20 {
            let mut a: Vec<usize> = (0..4).collect();
            let mut b: Vec<usize> = (0..4).collect();
            a.shuffle(&mut rng);
            b.shuffle(&mut rng);
            let sa = Permutation::new(a).unwrap();
            let sb = Permutation::new(b).unwrap();
            let (pa, _) = permutation_operator(&sa, &s).unwrap();
            let (pb, _) = permutation_operator(&sb, &s).unwrap();
            let (pab, _) = permutation_operator(&sa.compose(&sb), &s).unwrap();
            assert_eq!(pab, &pa * &pb);
            assert!(frobenius(&(&pa * pa.adjoint() - CMat::identity(16, 16))) == 0.0);
        }
    }

    #[test]
    fn inversions_match_bubble_sort() {
        for p in Permutation::all(5) {
            assert_eq!(p.inversions(), p.bubble_sort_swaps());
            assert_eq!(p.inversions(), p.inverse().inversions());
        }
    }

    #[test]
    fn graded_adjoint_swaps_degree() {
        let s = space(2, 2);
        let c = left_creator(&basis_vector(2, 1), &s).unwrap();
        let a = c.adjoint();
        assert_eq!(a.degree(), -1);
        assert_eq!(a.block(1).unwrap().shape(), (1, 2));
        assert_eq!(a.block(2).unwrap().shape(), (2, 4));
    }
}
