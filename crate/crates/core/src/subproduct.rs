//! Projection families, subproduct-system certification, product maps and
//! the two-sided factorization test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::deform::{q_fock_recursive, DeformationFamily};
use crate::error::{Error, Result};
use crate::interacting::{squeezing_of, InteractingSpace, Squeezing};
use crate::linalg::{
    frobenius, gaussian_matrix, id_kron, kron, kron_id, max_abs_diff, null_basis, op_norm,
    projector, range_basis, CMat, C64,
};
use crate::par::{map_indexed, Exec};
use crate::tensor::TruncatedFockSpace;
use crate::Tolerances;

/// Default tolerance for projection checks and order relations.
pub const PROJECTION_TOL: f64 = 1e-10;

/// `‖(id − Q)P‖₂`; zero exactly when `P ≤ Q` for projections.
pub fn order_violation(p: &CMat, q: &CMat) -> f64 {
    op_norm(&(p - q * p))
}

#[derive(Debug, Clone)]
pub struct ProjectionFamily {
    space: TruncatedFockSpace,
    levels: Vec<CMat>,
    ranks: Vec<usize>,
}

impl ProjectionFamily {
    /// Checks `πₙ* = πₙ = πₙ²` to `PROJECTION_TOL` and `π₀ = [1]`.
    pub fn new(space: TruncatedFockSpace, levels: Vec<CMat>) -> Result<Self> {
        if levels.len() != space.cutoff() + 1 {
            return Err(Error::Dimension(format!(
                "expected {} levels, got {}",
                space.cutoff() + 1,
                levels.len()
            )));
        }
        let mut ranks = Vec::with_capacity(levels.len());
        for (n, p) in levels.iter().enumerate() {
            let dn = space.level_dim(n);
            if p.shape() != (dn, dn) {
                return Err(Error::Dimension(format!(
                    "level {n} has shape {:?}, expected ({dn}, {dn})",
                    p.shape()
                )));
            }
            let defect = max_abs_diff(p, &p.adjoint()).max(max_abs_diff(&(p * p), p));
            if defect > PROJECTION_TOL {
                return Err(Error::NotProjection { level: n, defect });
            }
            ranks.push(p.trace().re.round().max(0.0) as usize);
        }
        if max_abs_diff(&levels[0], &CMat::identity(1, 1)) > PROJECTION_TOL {
            return Err(Error::Vacuum(format!("{}", levels[0][(0, 0)])));
        }
        Ok(ProjectionFamily { space, levels, ranks })
    }

    pub fn from_levels(levels: Vec<CMat>) -> Result<Self> {
        let cutoff = levels
            .len()
            .checked_sub(1)
            .ok_or_else(|| Error::Dimension("empty family".into()))?;
        let dim = if cutoff == 0 { 1 } else { levels[1].nrows() };
        Self::new(TruncatedFockSpace::new(dim, cutoff)?, levels)
    }

    pub fn space(&self) -> &TruncatedFockSpace {
        &self.space
    }

    pub fn level(&self, n: usize) -> &CMat {
        &self.levels[n]
    }

    pub fn levels(&self) -> &[CMat] {
        &self.levels
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// Whether `π₁ = id_H`.
    pub fn is_normalized(&self) -> bool {
        self.space.cutoff() == 0
            || max_abs_diff(&self.levels[1], &CMat::identity(self.space.dim(), self.space.dim()))
                <= PROJECTION_TOL
    }

    pub fn as_deformation(&self) -> DeformationFamily {
        DeformationFamily::new(self.space, self.levels.clone()).expect("shapes already checked")
    }
}

/// `πₙ = id` on every level.
pub fn full(space: TruncatedFockSpace) -> ProjectionFamily {
    let levels = space
        .levels()
        .map(|n| CMat::identity(space.level_dim(n), space.level_dim(n)))
        .collect();
    ProjectionFamily {
        ranks: space.levels().map(|n| space.level_dim(n)).collect(),
        space,
        levels,
    }
}

/// `πₙ = (1/n!) Σ_σ P_σ`.
pub fn symmetrizer(space: TruncatedFockSpace) -> Result<ProjectionFamily> {
    let bosonic = q_fock_recursive(space, 1.0)?;
    let mut factorial = 1.0f64;
    let levels = bosonic
        .into_levels()
        .into_iter()
        .enumerate()
        .map(|(n, l)| {
            if n > 0 {
                factorial *= n as f64;
            }
            l / C64::new(factorial, 0.0)
        })
        .collect();
    ProjectionFamily::new(space, levels)
}

/// `πₙ = pₙ ⊗ … ⊗ p₁` with `pₖ` the projection onto the `k`-th basis vector
/// (0-based index `k−1`); needs `d ≥ N`.
pub fn diagonal_chain(space: TruncatedFockSpace) -> Result<ProjectionFamily> {
    let d = space.dim();
    if d < space.cutoff() {
        return Err(Error::Invalid(format!(
            "the chain needs d ≥ N, got d = {d}, N = {}",
            space.cutoff()
        )));
    }
    let p = |k: usize| {
        let mut m = CMat::zeros(d, d);
        m[(k - 1, k - 1)] = C64::new(1.0, 0.0);
        m
    };
    let mut levels = vec![CMat::identity(1, 1)];
    for n in 1..=space.cutoff() {
        let next = kron(&p(n), &levels[n - 1]);
        levels.push(next);
    }
    ProjectionFamily::new(space, levels)
}

/// `πₙ₊₁` = projection onto a random subspace of
/// `range(id⊗πₙ) ∩ range(πₙ⊗id)`, with `π₁ = id`.
///
/// Without explicit ranks each `rₙ₊₁` is uniform in `1..=dim` of the
/// intersection (or 0 once the intersection is trivial).
pub fn random_adjacent_family(
    space: TruncatedFockSpace,
    ranks: Option<&[usize]>,
    seed: u64,
) -> Result<ProjectionFamily> {
    let d = space.dim();
    let cutoff = space.cutoff();
    if let Some(r) = ranks {
        if r.len() != cutoff + 1 {
            return Err(Error::RankProfile(format!(
                "{} ranks given for cutoff {cutoff}",
                r.len()
            )));
        }
        if r[0] != 1 || (cutoff >= 1 && r[1] != d) {
            return Err(Error::RankProfile("ranks must start with 1, d".into()));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut levels = vec![CMat::identity(1, 1)];
    if cutoff >= 1 {
        levels.push(CMat::identity(d, d));
    }
    for n in 1..cutoff {
        let dn1 = space.level_dim(n + 1);
        let left = id_kron(d, &levels[n]);
        let right = kron_id(&levels[n], d);
        let id = CMat::identity(dn1, dn1);
        let mut stacked = CMat::zeros(2 * dn1, dn1);
        stacked.view_mut((0, 0), (dn1, dn1)).copy_from(&(&id - left));
        stacked.view_mut((dn1, 0), (dn1, dn1)).copy_from(&(&id - right));
        let meet = null_basis(&stacked, 1e-10);
        let avail = meet.ncols();
        let want = match ranks {
            Some(r) => r[n + 1],
            None if avail == 0 => 0,
            None => rng.random_range(1..=avail),
        };
        if want > avail {
            return Err(Error::RankProfile(format!(
                "rank {want} requested at level {} but the intersection has dimension {avail}",
                n + 1
            )));
        }
        let p = if want == 0 {
            CMat::zeros(dn1, dn1)
        } else {
            let g = gaussian_matrix(&mut rng, avail, want);
            let basis = range_basis(&(&meet * g), 1e-10);
            crate::linalg::hermitian_part(&projector(&basis))
        };
        levels.push(p);
    }
    ProjectionFamily::new(space, levels)
}

#[derive(Debug, Clone, Serialize)]
pub struct PairVerdict {
    pub m: usize,
    pub n: usize,
    /// `‖(id − πₘ⊗πₙ)π_{m+n}‖`.
    pub violation: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubproductCertificate {
    pub ranks: Vec<usize>,
    pub normalized: bool,
    /// `‖(id − id⊗πₙ)πₙ₊₁‖`, indexed by `n`.
    pub pirec: Vec<f64>,
    /// `‖(id − πₙ⊗id)πₙ₊₁‖`, indexed by `n`.
    pub spsker: Vec<f64>,
    pub pirec_passed: bool,
    pub spsker_passed: bool,
    pub pairwise: Vec<PairVerdict>,
    pub pairwise_passed: bool,
    /// Adjacent chains pass but a pairwise inequality fails: cannot happen
    /// mathematically, so this flags a numerical or software fault.
    pub inconsistent: bool,
    pub coisometry_residual: Option<f64>,
    pub associativity_residual: Option<f64>,
    pub passed: bool,
}

pub fn certify(family: &ProjectionFamily, tol: f64, exec: Exec) -> SubproductCertificate {
    let d = family.space.dim();
    let cutoff = family.space.cutoff();
    let chains = map_indexed(exec, cutoff, |n| {
        let next = &family.levels[n + 1];
        (
            order_violation(next, &id_kron(d, &family.levels[n])),
            order_violation(next, &kron_id(&family.levels[n], d)),
        )
    });
    let pirec: Vec<f64> = chains.iter().map(|c| c.0).collect();
    let spsker: Vec<f64> = chains.iter().map(|c| c.1).collect();
    let pirec_passed = pirec.iter().all(|&v| v <= tol);
    let spsker_passed = spsker.iter().all(|&v| v <= tol);
    let pairs: Vec<(usize, usize)> = (1..=cutoff)
        .flat_map(|m| (1..=cutoff - m).map(move |n| (m, n)))
        .collect();
    let pairwise: Vec<PairVerdict> = map_indexed(exec, pairs.len(), |j| {
        let (m, n) = pairs[j];
        let violation = order_violation(
            &family.levels[m + n],
            &kron(&family.levels[m], &family.levels[n]),
        );
        PairVerdict {
            m,
            n,
            violation,
            passed: violation <= tol,
        }
    });
    let pairwise_passed = pairwise.iter().all(|p| p.passed);
    let (coisometry_residual, associativity_residual) = if pirec_passed && spsker_passed {
        let maps = ProductMaps::compute(family, exec);
        (Some(maps.coisometry_residual()), Some(maps.associativity_residual(exec)))
    } else {
        (None, None)
    };
    let algebraic_ok = coisometry_residual.is_none_or(|r| r <= tol)
        && associativity_residual.is_none_or(|r| r <= tol);
    SubproductCertificate {
        ranks: family.ranks.clone(),
        normalized: family.is_normalized(),
        inconsistent: pirec_passed && spsker_passed && !pairwise_passed,
        passed: pirec_passed && spsker_passed && pairwise_passed && algebraic_ok,
        pirec,
        spsker,
        pirec_passed,
        spsker_passed,
        pairwise,
        pairwise_passed,
        coisometry_residual,
        associativity_residual,
    }
}

/// `v_{m,n} = V_{m+n}*(V_m ⊗ V_n)` in orthonormal range coordinates `Vₙ` of `πₙ`.
#[derive(Debug, Clone)]
pub struct ProductMaps {
    bases: Vec<CMat>,
}

impl ProductMaps {
    pub fn compute(family: &ProjectionFamily, exec: Exec) -> Self {
        let bases = map_indexed(exec, family.levels.len(), |n| {
            range_basis(&family.levels[n], 1e-10)
        });
        ProductMaps { bases }
    }

    pub fn basis(&self, n: usize) -> &CMat {
        &self.bases[n]
    }

    pub fn cutoff(&self) -> usize {
        self.bases.len() - 1
    }

    pub fn product(&self, m: usize, n: usize) -> CMat {
        self.bases[m + n].adjoint() * kron(&self.bases[m], &self.bases[n])
    }

    /// Largest `‖v v* − id‖` over `m + n ≤ N`.
    pub fn coisometry_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for m in 0..=self.cutoff() {
            for n in 0..=self.cutoff() - m {
                let v = self.product(m, n);
                let r = v.nrows();
                worst = worst.max(op_norm(&(&v * v.adjoint() - CMat::identity(r, r))));
            }
        }
        worst
    }

    /// Largest `‖v_{m+n,k}(v_{m,n}⊗id) − v_{m,n+k}(id⊗v_{n,k})‖` over `m+n+k ≤ N`.
    pub fn associativity_residual(&self, exec: Exec) -> f64 {
        let cutoff = self.cutoff();
        let triples: Vec<(usize, usize, usize)> = (0..=cutoff)
            .flat_map(|m| (0..=cutoff - m).flat_map(move |n| (0..=cutoff - m - n).map(move |k| (m, n, k))))
            .collect();
        map_indexed(exec, triples.len(), |j| {
            let (m, n, k) = triples[j];
            let rm = self.bases[m].ncols();
            let rk = self.bases[k].ncols();
            let lhs = self.product(m + n, k) * kron(&self.product(m, n), &CMat::identity(rk, rk));
            let rhs = self.product(m, n + k) * kron(&CMat::identity(rm, rm), &self.product(n, k));
            if lhs.is_empty() {
                0.0
            } else {
                op_norm(&(lhs - rhs))
            }
        })
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PiIdentity {
    /// `max_n max(‖Lₙ−πₙ‖, ‖λₙ−πₙ‖, ‖κₙ−πₙ‖)` (entrywise).
    pub max_deviation: f64,
    pub per_level: Vec<f64>,
}

/// Builds the space with `L = π` and checks `π = L = λ = κ`.
pub fn pi_space(family: &ProjectionFamily, tol: &Tolerances) -> Result<(InteractingSpace, Squeezing, PiIdentity)> {
    let d = family.space.dim();
    for n in 0..family.space.cutoff() {
        let v = order_violation(&family.levels[n + 1], &id_kron(d, &family.levels[n]));
        if v > PROJECTION_TOL {
            return Err(Error::Certification {
                condition: "pirec",
                level: n + 1,
                violation: v,
            });
        }
    }
    let space = InteractingSpace::build(family.as_deformation(), tol)?;
    let kappa = squeezing_of(&space);
    let per_level: Vec<f64> = family
        .levels
        .iter()
        .enumerate()
        .map(|(n, p)| {
            let l = max_abs_diff(space.family().level(n), p);
            let lam = max_abs_diff(&space.lambda(n), p);
            let k = max_abs_diff(kappa.level(n), p);
            l.max(lam).max(k)
        })
        .collect();
    let max_deviation = per_level.iter().copied().fold(0.0, f64::max);
    Ok((space, kappa, PiIdentity { max_deviation, per_level }))
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoSidedReport {
    /// `‖λₙ₊₁(ker λₙ ⊗ H)‖ / ‖λₙ₊₁‖`, indexed by `n`.
    pub right_kernel_residual: Vec<f64>,
    pub exists: bool,
    /// `‖κ′ₙ‖` for `n ≥ 1` when the factorization exists.
    pub kappa_prime_norms: Option<Vec<f64>>,
    /// `‖κ′ₙ₊₁(λₙ⊗id) − λₙ₊₁‖` relative, when it exists.
    pub factorization_residual: Option<f64>,
    pub kappa_norms: Vec<f64>,
    pub contraction: bool,
}

/// Right-hand counterpart of the squeezing: whether `λ` factors through
/// `λ ⊗ id` and, if so, `κ′ₙ₊₁ = λₙ₊₁(λₙ⁺ ⊗ id)`.
pub fn two_sided_test(space: &InteractingSpace, tol: &Tolerances) -> TwoSidedReport {
    let d = space.dim();
    let cutoff = space.cutoff();
    let mut residuals = Vec::with_capacity(cutoff);
    for n in 0..cutoff {
        let lam1 = space.lambda(n + 1);
        let scale = op_norm(&lam1);
        let kernel = null_basis(space.family().level(n), tol.rank);
        let r = if kernel.ncols() == 0 || scale == 0.0 {
            0.0
        } else {
            op_norm(&(&lam1 * kron_id(&kernel, d))) / scale
        };
        residuals.push(r);
    }
    let exists = residuals.iter().all(|&r| r <= tol.residual);
    let kappa = squeezing_of(space);
    let kappa_norms: Vec<f64> = kappa.levels()[1..].iter().map(op_norm).collect();
    let (kappa_prime_norms, factorization_residual) = if exists {
        let mut norms = Vec::with_capacity(cutoff);
        let mut worst = 0.0f64;
        for n in 0..cutoff {
            let lam1 = space.lambda(n + 1);
            let kp = &lam1 * kron_id(&space.lambda_pinv(n), d);
            let back = &kp * kron_id(&space.lambda(n), d);
            worst = worst.max(frobenius(&(back - &lam1)) / frobenius(&lam1).max(1.0));
            norms.push(op_norm(&kp));
        }
        (Some(norms), Some(worst))
    } else {
        (None, None)
    };
    let contraction = kappa_norms.iter().all(|&k| k <= 1.0 + tol.residual)
        && kappa_prime_norms
            .as_ref()
            .is_none_or(|v| v.iter().all(|&k| k <= 1.0 + tol.residual));
    TwoSidedReport {
        right_kernel_residual: residuals,
        exists,
        kappa_prime_norms,
        factorization_residual,
        kappa_norms,
        contraction,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deform::one_mode;
    use crate::linalg::eigh;

    fn space(d: usize, n: usize) -> TruncatedFockSpace {
        TruncatedFockSpace::new(d, n).unwrap()
    }

    #[test]
    fn order_test_agrees_with_compression_test() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..40 {
            let big = range_basis(&gaussian_matrix(&mut rng, 6, 4), 1e-10);
            let q = projector(&big);
            let p = if trial % 2 == 0 {
                // a subspace of range Q
                projector(&range_basis(&(&big * gaussian_matrix(&mut rng, 4, 2)), 1e-10))
            } else {
                projector(&range_basis(&gaussian_matrix(&mut rng, 6, 2), 1e-10))
            };
            let by_norm = order_violation(&p, &q) <= 1e-10;
            let by_compression = max_abs_diff(&(&q * &p * &q), &p) <= 1e-10;
            assert_eq!(by_norm, by_compression);
            assert_eq!(by_norm, trial % 2 == 0);
        }
    }

    #[test]
    fn symmetrizer_is_a_subproduct_system() {
        let f = symmetrizer(space(2, 4)).unwrap();
        assert_eq!(f.ranks(), &[1, 2, 3, 4, 5]);
        let c = certify(&f, 1e-10, Exec::Sequential);
        assert!(c.passed, "{c:?}");
        assert!(c.coisometry_residual.unwrap() <= 1e-10);
        assert!(c.associativity_residual.unwrap() <= 1e-10);
    }

    #[test]
    fn full_family_passes_with_identity_products() {
        let f = full(space(2, 3));
        assert!(certify(&f, 1e-10, Exec::Parallel).passed);
        let maps = ProductMaps::compute(&f, Exec::Sequential);
        for n in 0..=3 {
            let v = maps.product(n, 0);
            assert!(max_abs_diff(&(v.adjoint() * &v), &CMat::identity(1 << n, 1 << n)) < 1e-12);
        }
    }

    #[test]
    fn marginal_products_are_identifications() {
        let f = symmetrizer(space(3, 3)).unwrap();
        let maps = ProductMaps::compute(&f, Exec::Sequential);
        for n in 0..=3 {
            let r = f.ranks()[n];
            for v in [maps.product(n, 0), maps.product(0, n)] {
                assert_eq!(v.shape(), (r, r));
                assert!(max_abs_diff(&(&v * v.adjoint()), &CMat::identity(r, r)) < 1e-10);
            }
        }
    }

    #[test]
    fn diagonal_chain_fails_the_second_condition() {
        let f = diagonal_chain(space(4, 4)).unwrap();
        assert!(!f.is_normalized());
        let c = certify(&f, 1e-10, Exec::Sequential);
        assert!(c.pirec_passed);
        assert!(!c.spsker_passed);
        assert!(c.spsker[1] >= 0.9);
        assert!(!c.passed);
        let (_, _, pi) = pi_space(&f, &Tolerances::default()).unwrap();
        assert!(pi.max_deviation <= 1e-10);
    }

    #[test]
    fn non_projections_are_rejected() {
        let s = space(2, 1);
        let mut p = CMat::identity(2, 2);
        p[(0, 0)] = C64::new(0.5, 0.0);
        assert!(matches!(
            ProjectionFamily::new(s, vec![CMat::identity(1, 1), p]),
            Err(Error::NotProjection { level: 1, .. })
        ));
    }

    #[test]
    fn random_adjacent_families_pass_pairwise() {
        for seed in 0..10 {
            let f = random_adjacent_family(space(2, 4), None, seed).unwrap();
            let c = certify(&f, 1e-10, Exec::Sequential);
            assert!(c.passed, "seed {seed}: {c:?}");
            assert!(!c.inconsistent);
        }
    }

    #[test]
    fn random_adjacent_rank_requests() {
        let f = random_adjacent_family(space(2, 4), Some(&[1, 2, 3, 0, 0]), 1).unwrap();
        assert_eq!(f.ranks(), &[1, 2, 3, 0, 0]);
        assert!(certify(&f, 1e-10, Exec::Sequential).passed);
        // after a rank-1 level the meet at the next level is one-dimensional
        let e = random_adjacent_family(space(2, 3), Some(&[1, 2, 1, 2]), 1);
        assert!(matches!(e, Err(Error::RankProfile(_))));
        let g = random_adjacent_family(space(2, 3), Some(&[1, 2, 3, 4]), 1).unwrap();
        assert_eq!(g.ranks()[3], 4);
        assert!(certify(&g, 1e-10, Exec::Sequential).passed);
    }

    #[test]
    fn pi_space_identity_for_symmetrizer() {
        let f = symmetrizer(space(2, 4)).unwrap();
        let (sp, _, pi) = pi_space(&f, &Tolerances::default()).unwrap();
        assert!(pi.max_deviation <= 1e-10);
        assert_eq!(sp.ranks(), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn pi_space_refuses_without_recursion() {
        // π₂ = projection onto e₀⊗e₁ but π₁ kills e₁, which violates π₂ ≤ id⊗π₁
        let s = space(2, 2);
        let mut p1 = CMat::zeros(2, 2);
        p1[(0, 0)] = C64::new(1.0, 0.0);
        let mut p2 = CMat::zeros(4, 4);
        p2[(1, 1)] = C64::new(1.0, 0.0);
        let f = ProjectionFamily::new(s, vec![CMat::identity(1, 1), p1, p2]).unwrap();
        assert!(matches!(
            pi_space(&f, &Tolerances::default()),
            Err(Error::Certification { condition: "pirec", .. })
        ));
    }

    #[test]
    fn two_sided_for_subproduct_and_one_mode() {
        let tol = Tolerances::default();
        let f = symmetrizer(space(2, 3)).unwrap();
        let (sp, _, _) = pi_space(&f, &tol).unwrap();
        let r = two_sided_test(&sp, &tol);
        assert!(r.exists);
        assert!(r.contraction);
        assert!(r.factorization_residual.unwrap() < 1e-9);
        let norms = r.kappa_prime_norms.unwrap();
        assert!(norms.iter().all(|&k| (k - 1.0).abs() < 1e-9));
        let one = InteractingSpace::build(one_mode(&[1.0, 2.0, 0.5, 0.0]).unwrap(), &tol).unwrap();
        assert!(two_sided_test(&one, &tol).exists);
    }

    #[test]
    fn symmetrizer_levels_are_symmetric_projections() {
        let f = symmetrizer(space(3, 3)).unwrap();
        assert_eq!(f.ranks(), &[1, 3, 6, 10]);
        let e = eigh(f.level(3));
        assert!(e.values.iter().all(|&v| v.abs() < 1e-10 || (v - 1.0).abs() < 1e-10));
    }
}
