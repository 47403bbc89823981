//! Deformation families `L = (Lₙ)`: the Gram data of a positive-operator
//! induced semiinner product on the truncated full Fock space.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    eigh, frobenius, hermitian_defect, id_kron, pinv, CMat, C64, ONE,
};
use crate::par::{map_indexed, Exec};
use crate::tensor::{decode_index, encode_index, Permutation, TruncatedFockSpace};
use crate::Tolerances;

/// Largest level for which the `n!`-term permutation sum is attempted.
pub const NAIVE_LEVEL_CAP: usize = 8;

/// Asymmetry beyond this is rejected instead of symmetrized.
pub const HERMITIAN_REJECT: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct DeformationFamily {
    space: TruncatedFockSpace,
    levels: Vec<CMat>,
}

impl DeformationFamily {
    pub fn new(space: TruncatedFockSpace, levels: Vec<CMat>) -> Result<Self> {
        if levels.len() != space.cutoff() + 1 {
            return Err(Error::Dimension(format!(
                "expected {} levels, got {}",
                space.cutoff() + 1,
                levels.len()
            )));
        }
        for (n, m) in levels.iter().enumerate() {
            let dn = space.level_dim(n);
            if m.shape() != (dn, dn) {
                return Err(Error::Dimension(format!(
                    "level {n} has shape {:?}, expected ({dn}, {dn})",
                    m.shape()
                )));
            }
        }
        if (levels[0][(0, 0)] - ONE).norm() > 1e-12 {
            return Err(Error::Vacuum(format!("{}", levels[0][(0, 0)])));
        }
        Ok(DeformationFamily { space, levels })
    }

    /// Infers `d` and `N` from the level shapes.
    pub fn from_levels(levels: Vec<CMat>) -> Result<Self> {
        let cutoff = levels
            .len()
            .checked_sub(1)
            .ok_or_else(|| Error::Dimension("empty family".into()))?;
        let dim = if cutoff == 0 { 1 } else { levels[1].nrows() };
        Self::new(TruncatedFockSpace::new(dim, cutoff)?, levels)
    }

    pub fn identity(space: TruncatedFockSpace) -> Self {
        let levels = space
            .levels()
            .map(|n| CMat::identity(space.level_dim(n), space.level_dim(n)))
            .collect();
        DeformationFamily { space, levels }
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

    pub fn into_levels(self) -> Vec<CMat> {
        self.levels
    }

    /// Structural checks: spectrum, Hermitian defect and kernel condition.
    pub fn validate(&self, tol: &Tolerances) -> Result<ValidationReport> {
        let d = self.space.dim();
        let cutoff = self.space.cutoff();
        let mut rows = Vec::with_capacity(cutoff + 1);
        let mut norms = Vec::with_capacity(cutoff + 1);
        for (n, m) in self.levels.iter().enumerate() {
            let defect = hermitian_defect(m);
            if defect > HERMITIAN_REJECT {
                return Err(Error::NotHermitian { level: n, defect });
            }
            let eig = eigh(m);
            let (lo, hi) = (eig.min(), eig.max());
            let psd = lo >= -tol.psd * hi.max(0.0);
            norms.push(eig.spectral_radius());
            let kernel = eig.kernel(tol.rank);
            let kernel_violation = (n < cutoff).then(|| {
                if kernel.ncols() == 0 {
                    return 0.0;
                }
                let image = &self.levels[n + 1] * id_kron(d, &kernel);
                image
                    .column_iter()
                    .map(|c| c.norm())
                    .fold(0.0, f64::max)
            });
            rows.push(LevelValidation {
                level: n,
                min_eigenvalue: lo,
                max_eigenvalue: hi,
                hermitian_defect: defect,
                psd,
                kernel_dim: kernel.ncols(),
                kernel_violation,
                kernel_ok: true,
            });
        }
        for n in 0..cutoff {
            let scale = norms[n + 1].max(1.0);
            let v = rows[n].kernel_violation.unwrap_or(0.0);
            rows[n].kernel_ok = v <= tol.residual * scale;
        }
        let psd = rows.iter().all(|r| r.psd);
        let kernel_condition = rows.iter().all(|r| r.kernel_ok);
        Ok(ValidationReport {
            dim: d,
            cutoff,
            levels: rows,
            psd,
            kernel_condition,
            passed: psd && kernel_condition,
        })
    }

    /// Minimal-norm factors `Kₙ₊₁ = Lₙ₊₁ (id ⊗ Lₙ)⁺`.
    pub fn factor_k(&self, tol: &Tolerances) -> Result<KernelFactorization> {
        let d = self.space.dim();
        let mut factors = vec![CMat::identity(1, 1)];
        let mut residuals = Vec::new();
        for n in 0..self.space.cutoff() {
            let lifted = id_kron(d, &self.levels[n]);
            let k = &self.levels[n + 1] * pinv(&lifted, tol.rank);
            let target = &self.levels[n + 1];
            let scale = frobenius(target).max(f64::MIN_POSITIVE);
            let residual = frobenius(&(target - &k * &lifted)) / scale;
            let residual = if frobenius(target) == 0.0 { frobenius(&(&k * &lifted)) } else { residual };
            if residual > tol.residual {
                return Err(Error::KernelCondition {
                    level: n + 1,
                    residual,
                });
            }
            factors.push(k);
            residuals.push(residual);
        }
        Ok(KernelFactorization { factors, residuals })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelValidation {
    pub level: usize,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub hermitian_defect: f64,
    pub psd: bool,
    pub kernel_dim: usize,
    /// `max ‖Lₙ₊₁(e_i ⊗ v)‖` over unit kernel vectors `v` of this level.
    pub kernel_violation: Option<f64>,
    pub kernel_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub dim: usize,
    pub cutoff: usize,
    pub levels: Vec<LevelValidation>,
    pub psd: bool,
    pub kernel_condition: bool,
    pub passed: bool,
}

/// `Lₙ₊₁ = Kₙ₊₁ (id_H ⊗ Lₙ)`, with `K₀ = [1]`.
#[derive(Debug, Clone)]
pub struct KernelFactorization {
    factors: Vec<CMat>,
    residuals: Vec<f64>,
}

impl KernelFactorization {
    pub fn factor(&self, n: usize) -> &CMat {
        &self.factors[n]
    }

    pub fn factors(&self) -> &[CMat] {
        &self.factors
    }

    /// Relative reconstruction residual of level `n+1`, indexed by `n`.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// Rebuilds `Lₙ = Kₙ(id ⊗ Kₙ₋₁)…(id^{⊗(n-1)} ⊗ K₁)` from the factors alone.
    pub fn reconstruct(&self) -> Vec<CMat> {
        let d = self.factors.get(1).map_or(1, |k| k.nrows());
        let mut out = vec![CMat::identity(1, 1)];
        for n in 1..self.factors.len() {
            let next = &self.factors[n] * id_kron(d, &out[n - 1]);
            out.push(next);
        }
        out
    }
}

/// The q-deformed family `Lₙ = Σ_σ q^{inv σ} P_σ` by direct enumeration of `Sₙ`.
pub fn q_fock(space: TruncatedFockSpace, q: f64) -> Result<DeformationFamily> {
    q_fock_with(space, q, Exec::default())
}

pub fn q_fock_with(space: TruncatedFockSpace, q: f64, exec: Exec) -> Result<DeformationFamily> {
    check_q(q)?;
    if space.cutoff() > NAIVE_LEVEL_CAP {
        return Err(Error::PermutationCap {
            level: space.cutoff(),
            cap: NAIVE_LEVEL_CAP,
        });
    }
    let levels = map_indexed(exec, space.cutoff() + 1, |n| permutation_sum(&space, n, q));
    DeformationFamily::new(space, levels)
}

fn permutation_sum(space: &TruncatedFockSpace, n: usize, q: f64) -> CMat {
    let d = space.dim();
    let dn = space.level_dim(n);
    let tuples: Vec<Vec<usize>> = (0..dn).map(|j| decode_index(j, n, d)).collect();
    let mut m = CMat::zeros(dn, dn);
    for sigma in Permutation::all(n) {
        let w = q.powi(sigma.inversions() as i32);
        if w == 0.0 {
            continue;
        }
        for (col, t) in tuples.iter().enumerate() {
            let row = encode_index(&sigma.permute_tuple(t), d).expect("valid tuple");
            m[(row, col)] += C64::new(w, 0.0);
        }
    }
    m
}

/// Same family via `Lₙ₊₁ = (id_H ⊗ Lₙ)·Tₙ₊₁`, where `Tₙ₊₁ = Σ_k q^k C_k` and
/// `C_k` moves the tensor factor in slot `k` (counted from the left) to the front.
pub fn q_fock_recursive(space: TruncatedFockSpace, q: f64) -> Result<DeformationFamily> {
    check_q(q)?;
    let d = space.dim();
    let mut levels = vec![CMat::identity(1, 1)];
    for n in 0..space.cutoff() {
        let t = insertion_sum(&space, n + 1, q);
        let next = id_kron(d, &levels[n]) * t;
        levels.push(next);
    }
    DeformationFamily::new(space, levels)
}

fn insertion_sum(space: &TruncatedFockSpace, len: usize, q: f64) -> CMat {
    let d = space.dim();
    let dim = space.level_dim(len);
    let mut m = CMat::zeros(dim, dim);
    for col in 0..dim {
        let t = decode_index(col, len, d);
        for k in 0..len {
            let w = q.powi(k as i32);
            if w == 0.0 {
                continue;
            }
            let mut out = Vec::with_capacity(len);
            out.push(t[k]);
            out.extend(t.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &v)| v));
            let row = encode_index(&out, d).expect("valid tuple");
            m[(row, col)] += C64::new(w, 0.0);
        }
    }
    m
}

fn check_q(q: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&q) || q.is_nan() {
        return Err(Error::QOutOfRange(q));
    }
    Ok(())
}

/// Discrete monotone family: `Lₙ` is the diagonal indicator of strictly
/// decreasing tuples `i₁ > i₂ > … > iₙ` (leftmost largest).
pub fn discrete_monotone(space: TruncatedFockSpace) -> DeformationFamily {
    let d = space.dim();
    let levels = space
        .levels()
        .map(|n| {
            let dn = space.level_dim(n);
            let mut m = CMat::zeros(dn, dn);
            for j in 0..dn {
                let t = decode_index(j, n, d);
                if t.windows(2).all(|w| w[0] > w[1]) {
                    m[(j, j)] = ONE;
                }
            }
            m
        })
        .collect();
    DeformationFamily { space, levels }
}

/// One-mode family `Lₙ = [ℓₙ]` (`d = 1`).
pub fn one_mode(ell: &[f64]) -> Result<DeformationFamily> {
    let cutoff = ell
        .len()
        .checked_sub(1)
        .ok_or_else(|| Error::Dimension("empty ℓ sequence".into()))?;
    let space = TruncatedFockSpace::new(1, cutoff)?;
    let levels = ell
        .iter()
        .map(|&l| CMat::from_element(1, 1, C64::new(l, 0.0)))
        .collect();
    DeformationFamily::new(space, levels)
}
