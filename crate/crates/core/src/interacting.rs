//! Interacting Fock spaces built as quotients of the full Fock space, their
//! embeddings and squeezings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::deform::{DeformationFamily, HERMITIAN_REJECT};
use crate::error::{Error, Result};
use crate::linalg::{
    eigh, frobenius, gaussian_matrix, hermitian_defect, id_kron, max_abs_diff, op_norm,
    range_basis, CMat, CVec, C64, ONE, ZERO,
};
use crate::par::{map_indexed, Exec};
use crate::tensor::TruncatedFockSpace;
use crate::Tolerances;

/// Per-level quotient data.
#[derive(Debug, Clone)]
struct Level {
    /// Kept eigenvalues of `Lₙ`, descending.
    mu: Vec<f64>,
    /// `Λₙ`, `rₙ × dⁿ`.
    quotient: CMat,
    /// `Λₙ⁺`, `dⁿ × rₙ`.
    quotient_pinv: CMat,
    /// `ξₙ`, `dⁿ × rₙ` isometry.
    embedding: CMat,
}

impl Level {
    fn from_family_level(l: &CMat, n: usize, tol: &Tolerances) -> Result<Level> {
        let defect = hermitian_defect(l);
        if defect > HERMITIAN_REJECT {
            return Err(Error::NotHermitian { level: n, defect });
        }
        let eig = eigh(l);
        let top = eig.max().max(0.0);
        if eig.min() < -tol.psd * top {
            return Err(Error::NotPositive {
                level: n,
                min_eig: eig.min(),
            });
        }
        let r = eig.rank(tol.rank);
        let mu: Vec<f64> = eig.values[..r].to_vec();
        let u = eig.vectors.columns(0, r).into_owned();
        let sqrt = CMat::from_fn(r, r, |i, j| {
            if i == j {
                C64::new(mu[i].sqrt(), 0.0)
            } else {
                ZERO
            }
        });
        let inv_sqrt = CMat::from_fn(r, r, |i, j| {
            if i == j {
                C64::new(1.0 / mu[i].sqrt(), 0.0)
            } else {
                ZERO
            }
        });
        Ok(Level {
            quotient: &sqrt * u.adjoint(),
            quotient_pinv: &u * inv_sqrt,
            embedding: u,
            mu,
        })
    }
}

/// A truncated interacting Fock space in quotient coordinates.
#[derive(Debug, Clone)]
pub struct InteractingSpace {
    family: DeformationFamily,
    levels: Vec<Level>,
    /// `creators[n][i] = aₙ(i)`, shape `rₙ₊₁ × rₙ`.
    creators: Vec<Vec<CMat>>,
    well_defined: Vec<f64>,
}

impl InteractingSpace {
    pub fn build(family: DeformationFamily, tol: &Tolerances) -> Result<Self> {
        Self::build_with(family, tol, Exec::default())
    }

    pub fn build_with(family: DeformationFamily, tol: &Tolerances, exec: Exec) -> Result<Self> {
        let levels = map_indexed(exec, family.levels().len(), |n| {
            Level::from_family_level(family.level(n), n, tol)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Self::assemble(family, levels, tol, exec)
    }

    /// Uses `ξₙ = λₙΛₙ⁺` for a prescribed embedded surjection `λ` with `λ*λ = L`.
    fn build_with_lambda(
        family: DeformationFamily,
        lambda: &[CMat],
        tol: &Tolerances,
        exec: Exec,
    ) -> Result<Self> {
        let mut levels = map_indexed(exec, family.levels().len(), |n| {
            Level::from_family_level(family.level(n), n, tol)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        for (level, lam) in levels.iter_mut().zip(lambda) {
            level.embedding = lam * &level.quotient_pinv;
        }
        Self::assemble(family, levels, tol, exec)
    }

    fn assemble(
        family: DeformationFamily,
        levels: Vec<Level>,
        tol: &Tolerances,
        exec: Exec,
    ) -> Result<Self> {
        let space = *family.space();
        let d = space.dim();
        let cutoff = space.cutoff();
        let jobs: Vec<(usize, usize)> = (0..cutoff)
            .flat_map(|n| (0..d).map(move |i| (n, i)))
            .collect();
        let solved = map_indexed(exec, jobs.len(), |j| {
            let (n, i) = jobs[j];
            let dn = space.level_dim(n);
            let lifted = levels[n + 1].quotient.columns(i * dn, dn).into_owned();
            let a = &lifted * &levels[n].quotient_pinv;
            let scale = levels[n + 1].mu.first().map_or(0.0, |m| m.sqrt());
            let defect = frobenius(&(&a * &levels[n].quotient - &lifted));
            let residual = if scale > 0.0 { defect / scale } else { defect };
            (a, residual)
        });
        let mut creators = vec![Vec::with_capacity(d); cutoff];
        let mut well_defined = vec![0.0f64; cutoff];
        for ((n, _), (a, residual)) in jobs.iter().zip(solved) {
            creators[*n].push(a);
            well_defined[*n] = well_defined[*n].max(residual);
        }
        for (n, &residual) in well_defined.iter().enumerate() {
            if residual > tol.residual {
                return Err(Error::KernelCondition {
                    level: n + 1,
                    residual,
                });
            }
        }
        Ok(InteractingSpace {
            family,
            levels,
            creators,
            well_defined,
        })
    }

    pub fn family(&self) -> &DeformationFamily {
        &self.family
    }

    pub fn space(&self) -> &TruncatedFockSpace {
        self.family.space()
    }

    pub fn dim(&self) -> usize {
        self.space().dim()
    }

    pub fn cutoff(&self) -> usize {
        self.space().cutoff()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.mu.len()).collect()
    }

    pub fn rank(&self, n: usize) -> usize {
        self.levels[n].mu.len()
    }

    pub fn quotient(&self, n: usize) -> &CMat {
        &self.levels[n].quotient
    }

    pub fn quotient_pinv(&self, n: usize) -> &CMat {
        &self.levels[n].quotient_pinv
    }

    pub fn embedding(&self, n: usize) -> &CMat {
        &self.levels[n].embedding
    }

    /// Embedded surjection `λₙ = ξₙΛₙ`.
    pub fn lambda(&self, n: usize) -> CMat {
        &self.levels[n].embedding * &self.levels[n].quotient
    }

    /// `λₙ⁺ = Λₙ⁺ξₙ*`.
    pub fn lambda_pinv(&self, n: usize) -> CMat {
        &self.levels[n].quotient_pinv * self.levels[n].embedding.adjoint()
    }

    /// `aₙ(i)`: creator of `e_i` from level `n` to `n+1` in quotient coordinates.
    pub fn creator(&self, n: usize, i: usize) -> &CMat {
        &self.creators[n][i]
    }

    /// `Σ_i x_i aₙ(i)`.
    pub fn creator_of(&self, x: &CVec, n: usize) -> CMat {
        let mut out = CMat::zeros(self.rank(n + 1), self.rank(n));
        for (i, &xi) in x.iter().enumerate() {
            if xi != ZERO {
                out += &self.creators[n][i] * xi;
            }
        }
        out
    }

    /// Largest `‖aₙ(i)Λₙ − Λₙ₊₁(e_i⊗id)‖_F / ‖Λₙ₊₁‖`, indexed by `n`.
    pub fn well_definedness_residuals(&self) -> &[f64] {
        &self.well_defined
    }

    /// `(rank [aₙ(0)|…|aₙ(d−1)], rₙ₊₁)` for each `n < N`.
    pub fn spanning_ranks(&self, tol: &Tolerances) -> Vec<(usize, usize)> {
        (0..self.cutoff())
            .map(|n| {
                let r = self.rank(n);
                let r1 = self.rank(n + 1);
                let mut stacked = CMat::zeros(r1, r * self.dim());
                for i in 0..self.dim() {
                    stacked.view_mut((0, i * r), (r1, r)).copy_from(&self.creators[n][i]);
                }
                (crate::linalg::rank(&stacked, tol.rank), r1)
            })
            .collect()
    }

    /// Applies `a*(x_1)…a*(x_k)Ω` written left to right; the last entry acts first.
    pub fn creation_word_vector(&self, word: &[usize]) -> Result<CVec> {
        let k = word.len();
        if k > self.cutoff() {
            return Err(Error::WordTruncation {
                level: k,
                cutoff: self.cutoff(),
            });
        }
        let mut v = CVec::from_element(1, ONE);
        for (n, &i) in word.iter().rev().enumerate() {
            v = &self.creators[n][i] * v;
        }
        Ok(v)
    }

    /// Gram matrix of creation words applied to the vacuum.
    pub fn word_gram(&self, words: &[Vec<usize>]) -> Result<CMat> {
        let vecs = words
            .iter()
            .map(|w| self.creation_word_vector(w).map(|v| (w.len(), v)))
            .collect::<Result<Vec<_>>>()?;
        let k = vecs.len();
        Ok(CMat::from_fn(k, k, |a, b| {
            if vecs[a].0 == vecs[b].0 {
                vecs[a].1.dotc(&vecs[b].1)
            } else {
                ZERO
            }
        }))
    }

    /// Applies a word (last letter first) to a level-`n` quotient vector.
    /// Returns `None` once an annihilator hits the vacuum.
    pub fn apply_word(&self, word: &[Letter], level: usize, v: &CVec) -> Result<Option<(usize, CVec)>> {
        let mut n = level;
        let mut cur = v.clone();
        for letter in word.iter().rev() {
            match letter {
                Letter::Create(x) => {
                    if n >= self.cutoff() {
                        return Err(Error::WordTruncation {
                            level: n + 1,
                            cutoff: self.cutoff(),
                        });
                    }
                    cur = self.creator_of(x, n) * cur;
                    n += 1;
                }
                Letter::Annihilate(x) => {
                    if n == 0 {
                        return Ok(None);
                    }
                    cur = self.creator_of(x, n - 1).adjoint() * cur;
                    n -= 1;
                }
            }
        }
        Ok(Some((n, cur)))
    }

    /// `⟨Ω, w Ω⟩`.
    pub fn vacuum_expectation(&self, word: &[Letter]) -> Result<C64> {
        let omega = CVec::from_element(1, ONE);
        Ok(match self.apply_word(word, 0, &omega)? {
            Some((0, v)) => v[0],
            _ => ZERO,
        })
    }

    /// Frobenius norm of `a(x)a*(y) − q a*(y)a(x) − ⟨x,y⟩ id` at level `n < N`.
    pub fn q_commutation_residual(&self, q: f64, x: &CVec, y: &CVec, n: usize) -> f64 {
        let r = self.rank(n);
        let ax_up = self.creator_of(x, n).adjoint();
        let ay_up = self.creator_of(y, n);
        let mut m = &ax_up * &ay_up;
        if n > 0 {
            let ax_down = self.creator_of(x, n - 1).adjoint();
            let ay_down = self.creator_of(y, n - 1);
            m -= (&ay_down * &ax_down) * C64::new(q, 0.0);
        }
        m -= CMat::identity(r, r) * x.dotc(y);
        frobenius(&m)
    }

    /// Full numerical self-check.
    pub fn verify(&self, tol: &Tolerances) -> VerifyReport {
        let n_levels = self.levels.len();
        let mut levels = Vec::with_capacity(n_levels);
        let kappa = squeezing_of(self);
        let rebuilt = lambda_from_squeezing(&kappa);
        let spans = self.spanning_ranks(tol);
        for n in 0..n_levels {
            let l = self.family.level(n);
            let q = self.quotient(n);
            let xi = self.embedding(n);
            let scale = frobenius(l).max(f64::MIN_POSITIVE);
            let gram = frobenius(&(q.adjoint() * q - l)) / scale;
            let r = self.rank(n);
            let iso = max_abs_diff(&(xi.adjoint() * xi), &CMat::identity(r, r));
            let lam = self.lambda(n);
            let lam_scale = frobenius(&lam).max(1.0);
            let recursion = frobenius(&(&rebuilt[n] - &lam)) / lam_scale;
            let eq_star = if n + 1 < n_levels { eq_star_residual(self, &kappa, n) } else { 0.0 };
            let (span_rank, expected) = if n + 1 < n_levels { spans[n] } else { (0, 0) };
            levels.push(LevelReport {
                level: n,
                rank: r,
                gram_residual: gram,
                isometry_residual: iso,
                well_definedness: self.well_defined.get(n).copied().unwrap_or(0.0),
                eq_star_residual: eq_star,
                lambda_recursion_residual: recursion,
                spanning: n + 1 >= n_levels || span_rank == expected,
            });
        }
        let passed = self.rank(0) == 1
            && levels.iter().all(|l| {
                l.gram_residual <= tol.residual
                    && l.isometry_residual <= tol.residual
                    && l.well_definedness <= tol.residual
                    && l.eq_star_residual <= tol.residual
                    && l.lambda_recursion_residual <= 1e-8
                    && l.spanning
            });
        let sq = kappa.check(tol);
        VerifyReport {
            dim: self.dim(),
            cutoff: self.cutoff(),
            ranks: self.ranks(),
            levels,
            squeezing_range_violation: sq.range_violation,
            squeezing_vanishing_violation: sq.vanishing_violation,
            passed: passed && sq.passed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub level: usize,
    pub rank: usize,
    /// `‖Λ*Λ − L‖_F / ‖L‖_F`.
    pub gram_residual: f64,
    pub isometry_residual: f64,
    pub well_definedness: f64,
    /// `‖ξₙ₊₁aₙ(i)ξₙ* − κₙ₊₁(e_i⊗ξₙξₙ*)‖` relative, worst `i`.
    pub eq_star_residual: f64,
    pub lambda_recursion_residual: f64,
    pub spanning: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub dim: usize,
    pub cutoff: usize,
    pub ranks: Vec<usize>,
    pub levels: Vec<LevelReport>,
    pub squeezing_range_violation: f64,
    pub squeezing_vanishing_violation: f64,
    pub passed: bool,
}

/// A creator or annihilator of a one-particle vector.
#[derive(Debug, Clone, PartialEq)]
pub enum Letter {
    Create(CVec),
    Annihilate(CVec),
}

impl Letter {
    pub fn adjoint(&self) -> Letter {
        match self {
            Letter::Create(x) => Letter::Annihilate(x.clone()),
            Letter::Annihilate(x) => Letter::Create(x.clone()),
        }
    }
}

/// `w*` for a word `w` written as an operator product.
pub fn word_adjoint(word: &[Letter]) -> Vec<Letter> {
    word.iter().rev().map(Letter::adjoint).collect()
}

/// `κ = (κₙ)`, with `κₙ` acting on the full level-`n` space (`κ₀ = [1]`).
#[derive(Debug, Clone)]
pub struct Squeezing {
    dim: usize,
    levels: Vec<CMat>,
}

impl Squeezing {
    pub fn new(dim: usize, levels: Vec<CMat>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Dimension("a squeezing needs at least the vacuum level".into()));
        }
        let mut size = 1usize;
        for (n, k) in levels.iter().enumerate() {
            if k.shape() != (size, size) {
                return Err(Error::Dimension(format!(
                    "κ level {n} has shape {:?}, expected ({size}, {size})",
                    k.shape()
                )));
            }
            size *= dim;
        }
        Ok(Squeezing { dim, levels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> &CMat {
        &self.levels[n]
    }

    pub fn levels(&self) -> &[CMat] {
        &self.levels
    }

    /// Orthonormal bases of the flag `range₀ = CΩ`, `rangeₙ₊₁ = κₙ₊₁(H ⊗ rangeₙ)`.
    pub fn range_flag(&self, tol: &Tolerances) -> Vec<CMat> {
        let mut flag = vec![CMat::identity(1, 1)];
        for n in 0..self.cutoff() {
            let lifted = id_kron(self.dim, &flag[n]);
            flag.push(range_basis(&(&self.levels[n + 1] * lifted), tol.rank));
        }
        flag
    }

    /// Range and vanishing invariants against the induced range flag.
    pub fn check(&self, tol: &Tolerances) -> SqueezingCheck {
        let flag = self.range_flag(tol);
        let mut range_violation = 0.0f64;
        let mut vanishing_violation = 0.0f64;
        for n in 0..self.cutoff() {
            let k = &self.levels[n + 1];
            let scale = op_norm(k).max(f64::MIN_POSITIVE);
            let q = &flag[n + 1];
            let outside = k - q * (q.adjoint() * k);
            range_violation = range_violation.max(op_norm(&outside) / scale);
            let p = &flag[n];
            let dn = p.nrows();
            let comp = CMat::identity(dn, dn) - p * p.adjoint();
            vanishing_violation = vanishing_violation.max(op_norm(&(k * id_kron(self.dim, &comp))) / scale);
        }
        SqueezingCheck {
            range_violation,
            vanishing_violation,
            passed: range_violation <= tol.residual && vanishing_violation <= tol.residual,
        }
    }

    /// Invariants against a built space: `range κₙ = range λₙ` and
    /// `κₙ(e_i ⊗ w) = 0` for `w ⊥ range λₙ₋₁`.
    pub fn check_against(&self, space: &InteractingSpace, tol: &Tolerances) -> SqueezingCheck {
        let mut range_violation = 0.0f64;
        let mut vanishing_violation = 0.0f64;
        for n in 1..=self.cutoff() {
            let k = &self.levels[n];
            let scale = op_norm(k).max(f64::MIN_POSITIVE);
            let xi = space.embedding(n);
            let pk = {
                let b = range_basis(k, tol.rank);
                &b * b.adjoint()
            };
            let pl = xi * xi.adjoint();
            let mismatch = if range_basis(k, tol.rank).ncols() == xi.ncols() {
                op_norm(&(pk - pl))
            } else {
                1.0
            };
            range_violation = range_violation.max(mismatch);
            let prev = space.embedding(n - 1);
            let dn = prev.nrows();
            let comp = CMat::identity(dn, dn) - prev * prev.adjoint();
            vanishing_violation = vanishing_violation.max(op_norm(&(k * id_kron(self.dim, &comp))) / scale);
        }
        SqueezingCheck {
            range_violation,
            vanishing_violation,
            passed: range_violation <= tol.residual && vanishing_violation <= tol.residual,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SqueezingCheck {
    pub range_violation: f64,
    pub vanishing_violation: f64,
    pub passed: bool,
}

/// `κₙ₊₁ = λₙ₊₁(id_H ⊗ λₙ⁺)`.
pub fn squeezing_of(space: &InteractingSpace) -> Squeezing {
    let d = space.dim();
    let mut levels = vec![CMat::identity(1, 1)];
    for n in 0..space.cutoff() {
        levels.push(space.lambda(n + 1) * id_kron(d, &space.lambda_pinv(n)));
    }
    Squeezing { dim: d, levels }
}

/// `λ₀ = [1]`, `λₙ₊₁ = κₙ₊₁(id_H ⊗ λₙ)`.
pub fn lambda_from_squeezing(kappa: &Squeezing) -> Vec<CMat> {
    let mut out = vec![CMat::identity(1, 1)];
    for n in 0..kappa.cutoff() {
        let next = &kappa.levels[n + 1] * id_kron(kappa.dim, &out[n]);
        out.push(next);
    }
    out
}

/// The interacting Fock space generated by a squeezing: `L = λ*λ` with
/// embedding `ξₙ = λₙΛₙ⁺`, so that [`squeezing_of`] returns `κ` again.
pub fn space_from_squeezing(kappa: &Squeezing, tol: &Tolerances) -> Result<InteractingSpace> {
    let check = kappa.check(tol);
    if !check.passed {
        return Err(Error::NotSqueezing(format!(
            "range violation {:.3e}, vanishing violation {:.3e}",
            check.range_violation, check.vanishing_violation
        )));
    }
    let lambda = lambda_from_squeezing(kappa);
    let levels = lambda
        .iter()
        .map(|l| crate::linalg::hermitian_part(&(l.adjoint() * l)))
        .collect();
    let space = TruncatedFockSpace::new(kappa.dim, kappa.cutoff())?;
    let family = DeformationFamily::new(space, levels)?;
    InteractingSpace::build_with_lambda(family, &lambda, tol, Exec::default())
}

/// Worst relative `‖ξₙ₊₁aₙ(i)ξₙ* − κₙ₊₁(e_i⊗id)ξₙξₙ*‖_F` over `i`.
pub fn eq_star_residual(space: &InteractingSpace, kappa: &Squeezing, n: usize) -> f64 {
    let dn = space.space().level_dim(n);
    let xi = space.embedding(n);
    let xi1 = space.embedding(n + 1);
    let proj = xi * xi.adjoint();
    let scale = frobenius(kappa.level(n + 1)).max(1.0);
    (0..space.dim())
        .map(|i| {
            let lhs = xi1 * space.creator(n, i) * xi.adjoint();
            let rhs = kappa.level(n + 1).columns(i * dn, dn) * &proj;
            frobenius(&(lhs - rhs)) / scale
        })
        .fold(0.0, f64::max)
}

/// Random positive family with `Λₙ₊₁ = Mₙ(id_H ⊗ Λₙ)` for Gaussian `Mₙ` of
/// full row rank, so the kernel condition holds by construction.
///
/// Without `ranks`, each `rₙ` is drawn uniformly from `1..=min(d·rₙ₋₁, dⁿ)`.
pub fn random_poi_family(
    dim: usize,
    cutoff: usize,
    ranks: Option<&[usize]>,
    seed: u64,
) -> Result<DeformationFamily> {
    let space = TruncatedFockSpace::new(dim, cutoff)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ranks: Vec<usize> = match ranks {
        Some(r) => {
            check_rank_profile(r, dim, cutoff)?;
            r.to_vec()
        }
        None => {
            let mut r = vec![1usize];
            for n in 1..=cutoff {
                let cap = (dim * r[n - 1]).min(space.level_dim(n));
                r.push(rng.random_range(1..=cap));
            }
            r
        }
    };
    let mut quotient = CMat::identity(1, 1);
    let mut levels = vec![CMat::identity(1, 1)];
    for n in 0..cutoff {
        let cols = dim * ranks[n];
        let m = gaussian_matrix(&mut rng, ranks[n + 1], cols) * C64::new(1.0 / (cols.max(1) as f64).sqrt(), 0.0);
        quotient = m * id_kron(dim, &quotient);
        levels.push(crate::linalg::hermitian_part(&(quotient.adjoint() * &quotient)));
    }
    DeformationFamily::new(space, levels)
}

fn check_rank_profile(r: &[usize], dim: usize, cutoff: usize) -> Result<()> {
    if r.len() != cutoff + 1 {
        return Err(Error::RankProfile(format!(
            "{} ranks given for cutoff {cutoff}",
            r.len()
        )));
    }
    if r[0] != 1 {
        return Err(Error::RankProfile("r₀ must be 1".into()));
    }
    let mut level_dim = 1usize;
    for n in 1..r.len() {
        level_dim *= dim;
        if r[n - 1] == 0 && r[n] > 0 {
            return Err(Error::RankProfile(format!(
                "r{} = 0 but r{n} = {}",
                n - 1,
                r[n]
            )));
        }
        let cap = (dim * r[n - 1]).min(level_dim);
        if r[n] > cap {
            return Err(Error::RankProfile(format!("r{n} = {} exceeds {cap}", r[n])));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deform::{discrete_monotone, one_mode, q_fock_recursive};
    use crate::linalg::{basis_vector, gaussian_vector};
    use crate::tensor::{creator_block, TruncatedFockSpace};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn identity_family_is_the_full_fock_space() {
        let s = TruncatedFockSpace::new(2, 3).unwrap();
        let sp = InteractingSpace::build(DeformationFamily::identity(s), &tol()).unwrap();
        assert_eq!(sp.ranks(), vec![1, 2, 4, 8]);
        // with identity quotient maps in some ONB, ξ a ξ* is the free creator
        for n in 0..3 {
            for i in 0..2 {
                let lhs = sp.embedding(n + 1) * sp.creator(n, i) * sp.embedding(n).adjoint();
                let rhs = creator_block(&basis_vector(2, i), &s, n);
                assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
            }
        }
        let k = squeezing_of(&sp);
        for n in 0..=3 {
            assert!(max_abs_diff(k.level(n), &CMat::identity(1 << n, 1 << n)) < 1e-12);
        }
    }

    #[test]
    fn one_mode_creator_weights_are_square_roots() {
        let ks = [2.0f64, 0.5, 3.0];
        let ell = [1.0f64, 2.0, 1.0, 3.0];
        let sp = InteractingSpace::build(one_mode(&ell).unwrap(), &tol()).unwrap();
        let kappa = squeezing_of(&sp);
        let lam = lambda_from_squeezing(&kappa);
        for n in 0..3 {
            assert!((sp.creator(n, 0)[(0, 0)].norm() - ks[n].sqrt()).abs() < 1e-12);
            assert!((kappa.level(n + 1)[(0, 0)].re - ks[n].sqrt()).abs() < 1e-12);
        }
        for n in 0..=3 {
            assert!((lam[n][(0, 0)].re - ell[n].sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn fermionic_second_level_is_a_line() {
        let s = TruncatedFockSpace::new(2, 2).unwrap();
        let sp = InteractingSpace::build(q_fock_recursive(s, -1.0).unwrap(), &tol()).unwrap();
        assert_eq!(sp.ranks(), vec![1, 2, 1]);
    }

    #[test]
    fn free_relation_for_vacuum_expectation() {
        let s = TruncatedFockSpace::new(3, 2).unwrap();
        let sp = InteractingSpace::build(DeformationFamily::identity(s), &tol()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = gaussian_vector(&mut rng, 3);
        let y = gaussian_vector(&mut rng, 3);
        let w = [Letter::Annihilate(x.clone()), Letter::Create(y.clone())];
        let e = sp.vacuum_expectation(&w).unwrap();
        assert!((e - x.dotc(&y)).norm() < 1e-12);
        assert_eq!(sp.vacuum_expectation(&[]).unwrap(), ONE);
        let long = vec![Letter::Create(x.clone()); 3];
        assert!(matches!(
            sp.vacuum_expectation(&long),
            Err(Error::WordTruncation { .. })
        ));
    }

    #[test]
    fn q_commutation_holds_below_the_top_level() {
        let s = TruncatedFockSpace::new(2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for &q in &[-0.7, 0.0, 0.6] {
            let sp = InteractingSpace::build(q_fock_recursive(s, q).unwrap(), &tol()).unwrap();
            let x = gaussian_vector(&mut rng, 2);
            let y = gaussian_vector(&mut rng, 2);
            for n in 0..4 {
                assert!(sp.q_commutation_residual(q, &x, &y, n) < 1e-9, "q={q} n={n}");
            }
        }
    }

    #[test]
    fn random_family_respects_profile_and_kernel_condition() {
        let f = random_poi_family(2, 3, Some(&[1, 2, 3, 2]), 11).unwrap();
        assert!(f.validate(&tol()).unwrap().passed);
        let sp = InteractingSpace::build(f, &tol()).unwrap();
        assert_eq!(sp.ranks(), vec![1, 2, 3, 2]);
        assert!(sp.verify(&tol()).passed);
        assert!(matches!(
            random_poi_family(2, 3, Some(&[1, 0, 1, 1]), 0),
            Err(Error::RankProfile(_))
        ));
        assert!(random_poi_family(2, 2, Some(&[1, 3, 1]), 0).is_err());
    }

    #[test]
    fn random_family_is_deterministic() {
        let a = random_poi_family(2, 3, None, 99).unwrap();
        let b = random_poi_family(2, 3, None, 99).unwrap();
        for n in 0..=3 {
            assert_eq!(a.level(n), b.level(n));
        }
    }

    #[test]
    fn build_refuses_kernel_violations() {
        let s = TruncatedFockSpace::new(2, 2).unwrap();
        let f = DeformationFamily::new(
            s,
            vec![CMat::identity(1, 1), CMat::zeros(2, 2), CMat::identity(4, 4)],
        )
        .unwrap();
        assert!(matches!(
            InteractingSpace::build(f, &tol()),
            Err(Error::KernelCondition { level: 2, .. })
        ));
    }

    #[test]
    fn squeezing_round_trip_recovers_gram_data() {
        for seed in 0..5 {
            let f = random_poi_family(2, 3, None, seed).unwrap();
            let sp = InteractingSpace::build(f, &tol()).unwrap();
            let kappa = squeezing_of(&sp);
            assert!(kappa.check(&tol()).passed);
            assert!(kappa.check_against(&sp, &tol()).passed);
            let back = space_from_squeezing(&kappa, &tol()).unwrap();
            assert_eq!(back.ranks(), sp.ranks());
            let again = squeezing_of(&back);
            for n in 0..=3 {
                assert!(max_abs_diff(again.level(n), kappa.level(n)) < 1e-8);
            }
            let words: Vec<Vec<usize>> = vec![vec![], vec![0], vec![1], vec![0, 1], vec![1, 0], vec![1, 1, 0]];
            let g1 = sp.word_gram(&words).unwrap();
            let g2 = back.word_gram(&words).unwrap();
            assert!(max_abs_diff(&g1, &g2) < 1e-8);
        }
    }

    #[test]
    fn non_hermitian_lambda_squeezing_is_reproduced() {
        // κ₁ a unitary, κ₂ = id: the embedding is not the positive root
        let u = CMat::from_row_slice(2, 2, &[ZERO, ONE, C64::new(0.0, 1.0), ZERO]);
        let kappa = Squeezing::new(2, vec![CMat::identity(1, 1), u.clone(), CMat::identity(4, 4)]).unwrap();
        let sp = space_from_squeezing(&kappa, &tol()).unwrap();
        let again = squeezing_of(&sp);
        assert!(max_abs_diff(again.level(1), &u) < 1e-12);
        assert!(max_abs_diff(again.level(2), &CMat::identity(4, 4)) < 1e-12);
        assert!(sp.verify(&tol()).passed);
    }

    #[test]
    fn squeezing_check_catches_nonvanishing_maps() {
        // κ₁ kills e₁, but κ₂ does not kill H ⊗ e₁
        let mut k1 = CMat::zeros(2, 2);
        k1[(0, 0)] = ONE;
        let kappa = Squeezing::new(2, vec![CMat::identity(1, 1), k1, CMat::identity(4, 4)]).unwrap();
        let c = kappa.check(&tol());
        assert!(!c.passed);
        assert!(c.vanishing_violation > 0.5);
        assert!(space_from_squeezing(&kappa, &tol()).is_err());
    }

    #[test]
    fn monotone_space_verifies() {
        let s = TruncatedFockSpace::new(3, 3).unwrap();
        let sp = InteractingSpace::build(discrete_monotone(s), &tol()).unwrap();
        assert_eq!(sp.ranks(), vec![1, 3, 3, 1]);
        assert!(sp.verify(&tol()).passed);
    }

    #[test]
    fn quotient_pinv_matches_reference() {
        let f = random_poi_family(2, 3, None, 5).unwrap();
        let sp = InteractingSpace::build(f, &tol()).unwrap();
        for n in 0..=3 {
            let r = crate::linalg::pinv(sp.quotient(n), 1e-10);
            assert!(max_abs_diff(&r, sp.quotient_pinv(n)) < 1e-9);
        }
    }
}
