//! One-mode interacting Fock spaces: symmetric moment sequences, Jacobi
//! parameters and monic orthogonal polynomials.

use serde::Serialize;

use crate::deform::one_mode;
use crate::error::{Error, Result};
use crate::interacting::InteractingSpace;
use crate::linalg::{CVec, ONE};
use crate::Tolerances;

/// Relative pivot threshold below which the Hankel form is treated as degenerate.
pub const DEGENERACY: f64 = 1e-12;

/// Relative tolerance for odd moments and negative pivots.
pub const MOMENT_TOL: f64 = 1e-9;

/// `k₁,…,k_N` together with `ℓ₀ = 1, ℓₙ = kₙ⋯k₁`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JacobiData {
    k: Vec<f64>,
    ell: Vec<f64>,
}

impl JacobiData {
    /// `k[0]` is `k₁`.
    pub fn from_k(k: &[f64]) -> Result<Self> {
        let mut ell = vec![1.0];
        for (n, &kn) in k.iter().enumerate() {
            if !(kn >= 0.0) || !kn.is_finite() {
                return Err(Error::Jacobi(format!("k{} = {kn} is not a nonnegative number", n + 1)));
            }
            if n > 0 && k[n - 1] == 0.0 && kn != 0.0 {
                return Err(Error::Jacobi(format!("k{} = 0 but k{} = {kn}", n, n + 1)));
            }
            ell.push(ell[n] * kn);
        }
        Ok(JacobiData { k: k.to_vec(), ell })
    }

    pub fn cutoff(&self) -> usize {
        self.k.len()
    }

    pub fn k(&self) -> &[f64] {
        &self.k
    }

    pub fn ell(&self) -> &[f64] {
        &self.ell
    }

    /// Ascending coefficients of the monic `P₀,…,P_N` from
    /// `P₀ = 1, P₁ = t, Pₙ₊₁ = tPₙ − kₙPₙ₋₁`.
    pub fn polynomials(&self) -> Vec<Vec<f64>> {
        let mut p: Vec<Vec<f64>> = vec![vec![1.0]];
        if self.k.is_empty() {
            return p;
        }
        p.push(vec![0.0, 1.0]);
        for n in 1..self.k.len() {
            let mut next = vec![0.0; n + 2];
            for (j, &c) in p[n].iter().enumerate() {
                next[j + 1] += c;
            }
            for (j, &c) in p[n - 1].iter().enumerate() {
                next[j] -= self.k[n - 1] * c;
            }
            p.push(next);
        }
        p
    }
}

/// Validates `m₀ = 1` and vanishing odd moments; returns `N` for `m₀,…,m_{2N}`.
fn check_moments(m: &[f64]) -> Result<usize> {
    if m.is_empty() || m.len() % 2 == 0 {
        return Err(Error::Moments(format!(
            "expected m₀,…,m_2N (odd count), got {} values",
            m.len()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Moments("non-finite moment".into()));
    }
    if (m[0] - 1.0).abs() > 1e-12 {
        return Err(Error::Moments(format!("m₀ = {} instead of 1", m[0])));
    }
    for j in (1..m.len()).step_by(2) {
        let scale = (m[j - 1].abs() * m.get(j + 1).copied().unwrap_or(m[j - 1]).abs())
            .sqrt()
            .max(1.0);
        if m[j].abs() > MOMENT_TOL * scale {
            return Err(Error::Moments(format!("odd moment m{j} = {} is not zero", m[j])));
        }
    }
    Ok((m.len() - 1) / 2)
}

/// `ℓₙ = Δₙ₊₁/Δₙ` as the pivots of an LDLᵀ factorization of the Hankel
/// matrix `(m_{i+j})_{i,j≤N}`, and `kₙ = ℓₙ/ℓₙ₋₁`. After the first
/// degenerate pivot every later `k` is exactly zero.
pub fn jacobi_from_moments(m: &[f64]) -> Result<JacobiData> {
    let n_max = check_moments(m)?;
    let size = n_max + 1;
    let h = |i: usize, j: usize| m[i + j];
    let mut low = vec![vec![0.0f64; size]; size];
    let mut piv = vec![0.0f64; size];
    let mut k = Vec::with_capacity(n_max);
    let mut degenerate = false;
    for j in 0..size {
        if degenerate {
            if j > 0 {
                k.push(0.0);
            }
            continue;
        }
        let dj = h(j, j) - (0..j).map(|s| low[j][s] * low[j][s] * piv[s]).sum::<f64>();
        let prev = if j == 0 { 1.0 } else { piv[j - 1] };
        if dj < -MOMENT_TOL * h(j, j).abs().max(1.0) {
            return Err(Error::Moments(format!(
                "Hankel matrix is not positive semidefinite (pivot {j} = {dj:.3e})"
            )));
        }
        if dj <= DEGENERACY * prev.max(1.0) {
            degenerate = true;
            if j > 0 {
                k.push(0.0);
            }
            continue;
        }
        piv[j] = dj;
        low[j][j] = 1.0;
        for i in j + 1..size {
            let s: f64 = (0..j).map(|t| low[i][t] * low[j][t] * piv[t]).sum();
            low[i][j] = (h(i, j) - s) / dj;
        }
        if j > 0 {
            k.push(dj / prev);
        }
    }
    JacobiData::from_k(&k)
}

/// The one-mode space with `Lₙ = [ℓₙ]` for `n ≤ cutoff`.
pub fn onemode_space(j: &JacobiData, cutoff: usize, tol: &Tolerances) -> Result<InteractingSpace> {
    if cutoff > j.cutoff() {
        return Err(Error::Jacobi(format!(
            "cutoff {cutoff} exceeds the {} available parameters",
            j.cutoff()
        )));
    }
    InteractingSpace::build(one_mode(&j.ell[..=cutoff])?, tol)
}

/// `⟨Ω, (a + a*)^m Ω⟩` for `m = 0..=max_order`, which must not exceed `N`.
pub fn vacuum_moments(space: &InteractingSpace, max_order: usize) -> Result<Vec<f64>> {
    if space.dim() != 1 {
        return Err(Error::Dimension(format!(
            "one-mode space expected, got d = {}",
            space.dim()
        )));
    }
    let cutoff = space.cutoff();
    if max_order > cutoff {
        return Err(Error::Invalid(format!(
            "moment order {max_order} exceeds the truncation N = {cutoff}"
        )));
    }
    let mut levels: Vec<CVec> = (0..=cutoff).map(|n| CVec::zeros(space.rank(n))).collect();
    levels[0] = CVec::from_element(1, ONE);
    let mut out = vec![1.0];
    for _ in 0..max_order {
        let mut next: Vec<CVec> = (0..=cutoff).map(|n| CVec::zeros(space.rank(n))).collect();
        for n in 0..cutoff {
            let a = space.creator(n, 0);
            next[n + 1] += a * &levels[n];
            next[n] += a.adjoint() * &levels[n + 1];
        }
        levels = next;
        out.push(levels[0].get(0).map_or(0.0, |z| z.re));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct OnemodeReport {
    pub k: Vec<f64>,
    pub ell: Vec<f64>,
    pub polynomials: Vec<Vec<f64>>,
    /// Largest `|⟨Ω,(a+a*)^m Ω⟩ − m_m| / max(1, |m_m|)` over `m ≤ N`.
    pub roundtrip_residual: f64,
}

/// Moments → Jacobi data → space → vacuum moments, truncated at `cutoff`.
pub fn onemode_report(m: &[f64], cutoff: Option<usize>, tol: &Tolerances) -> Result<OnemodeReport> {
    let j = jacobi_from_moments(m)?;
    let cutoff = cutoff.unwrap_or(j.cutoff());
    let space = onemode_space(&j, cutoff, tol)?;
    let back = vacuum_moments(&space, cutoff.min(m.len() - 1))?;
    let roundtrip_residual = back
        .iter()
        .zip(m)
        .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
        .fold(0.0, f64::max);
    Ok(OnemodeReport {
        k: j.k[..cutoff].to_vec(),
        ell: j.ell[..=cutoff].to_vec(),
        polynomials: j.polynomials().into_iter().take(cutoff + 1).collect(),
        roundtrip_residual,
    })
}
