//! Named example families.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bounds::unbounded_squeezing;
use crate::deform::DeformationFamily;
use crate::error::Result;
use crate::interacting::{space_from_squeezing, InteractingSpace, Squeezing};
use crate::linalg::{gaussian_vector, CMat, CVec, ONE};
use crate::tensor::TruncatedFockSpace;
use crate::Tolerances;

/// `v = Σ eᵢ⊗eᵢ` in `H⊗H`.
pub fn diagonal_pairing(d: usize) -> CVec {
    let mut v = CVec::zeros(d * d);
    for i in 0..d {
        v[i * d + i] = ONE;
    }
    v
}

/// `𝓘 = Ω ⊕ H ⊕ Ω₂` with `a*(x) = xΩ* + Ω₂x̄*`, as `L₁ = id`, `L₂ = vv*`,
/// `L₃ = 0` on `N = 3`.
pub fn cptex_family(d: usize) -> Result<DeformationFamily> {
    let space = TruncatedFockSpace::new(d, 3)?;
    let v = diagonal_pairing(d);
    let levels = vec![
        CMat::identity(1, 1),
        CMat::identity(d, d),
        &v * v.adjoint(),
        CMat::zeros(d * d * d, d * d * d),
    ];
    DeformationFamily::new(space, levels)
}

pub fn cptex_space(d: usize, tol: &Tolerances) -> Result<InteractingSpace> {
    InteractingSpace::build(cptex_family(d)?, tol)
}

/// The unbounded-squeezing example extended by `κ₃ = Ω₃(w⊗Ω₂)*`, with
/// seeded unit vectors `Ω₂, Ω₃, w`. Its `λ₃` does not vanish on
/// `ker λ₂ ⊗ H`, so no right factorization exists.
pub fn squeezing_extension(d: usize, seed: u64) -> Result<Squeezing> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = |n: usize| {
        let v = gaussian_vector(&mut rng, n);
        v.unscale(v.norm())
    };
    let omega2 = unit(d * d);
    let omega3 = unit(d * d * d);
    let w = unit(d);
    let base = unbounded_squeezing(d, &omega2)?;
    let mut levels = base.levels().to_vec();
    let tail = crate::linalg::kron(&CMat::from_column_slice(d, 1, w.as_slice()), &CMat::from_column_slice(d * d, 1, omega2.as_slice()));
    levels.push(CMat::from_column_slice(d * d * d, 1, omega3.as_slice()) * tail.adjoint());
    Squeezing::new(d, levels)
}

pub fn squeezing_extension_space(d: usize, seed: u64, tol: &Tolerances) -> Result<InteractingSpace> {
    space_from_squeezing(&squeezing_extension(d, seed)?, tol)
}
