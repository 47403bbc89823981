//! Dense complex linear algebra used throughout the crate.
//!
//! nalgebra's Hermitian eigensolver plus a one-sided Jacobi SVD (nalgebra's
//! complex SVD loses accuracy on sparse structured input), under the
//! crate-wide rank convention: a singular value (or eigenvalue) counts
//! as nonzero when it is strictly greater than `tol * max`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn basis_vector(n: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(n);
    v[i] = ONE;
    v
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖M − M*‖_F / ‖M‖_F` (zero for the zero matrix).
pub fn hermitian_defect(m: &CMat) -> f64 {
    let scale = frobenius(m);
    if scale == 0.0 {
        return 0.0;
    }
    frobenius(&(m - m.adjoint())) / scale
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl Eigen {
    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Number of eigenvalues strictly above `tol * max(λ_max, 0)`.
    pub fn rank(&self, tol: f64) -> usize {
        let top = self.max();
        if top <= 0.0 {
            return 0;
        }
        self.values.iter().take_while(|&&v| v > tol * top).count()
    }

    /// `max |λ|`, the operator norm of the decomposed matrix.
    pub fn spectral_radius(&self) -> f64 {
        self.max().abs().max(self.min().abs())
    }

    /// Eigenvectors with `|λ| ≤ tol · max |λ|`: the kernel at relative tolerance `tol`.
    pub fn kernel(&self, tol: f64) -> CMat {
        let cut = tol * self.spectral_radius();
        let cols: Vec<usize> = (0..self.values.len()).filter(|&j| self.values[j].abs() <= cut).collect();
        CMat::from_fn(self.vectors.nrows(), cols.len(), |i, k| self.vectors[(i, cols[k])])
    }
}

pub fn eigh(m: &CMat) -> Eigen {
    let n = m.nrows();
    if n == 0 {
        return Eigen {
            values: Vec::new(),
            vectors: CMat::zeros(0, 0),
        };
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let vectors = CMat::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
    Eigen { values, vectors }
}

/// Singular value decomposition with values sorted descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMat,
    pub values: Vec<f64>,
    /// Right singular vectors as columns (not `V*`).
    pub v: CMat,
}

impl Svd {
    pub fn rank(&self, tol: f64) -> usize {
        let top = self.values.first().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return 0;
        }
        self.values.iter().take_while(|&&s| s > tol * top).count()
    }
}

/// Full SVD: `u` is rows×k, `v` is cols×cols where missing right vectors are
/// completed through zero-padding, so null spaces are always available.
pub fn svd(m: &CMat) -> Svd {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Svd {
            u: CMat::zeros(r, 0),
            values: Vec::new(),
            v: identity(c),
        };
    }
    let padded;
    let work = if r < c {
        padded = {
            let mut p = CMat::zeros(c, c);
            p.view_mut((0, 0), (r, c)).copy_from(m);
            p
        };
        &padded
    } else {
        m
    };
    let (cols, values_raw, vt) = jacobi(work.clone());
    let k = values_raw.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| values_raw[b].total_cmp(&values_raw[a]));
    let values: Vec<f64> = order.iter().map(|&j| values_raw[j]).collect();
    let u = CMat::from_fn(r, k, |i, j| {
        let s = values_raw[order[j]];
        if s > 0.0 {
            cols[(i, order[j])].unscale(s)
        } else {
            ZERO
        }
    });
    let v = CMat::from_fn(c, k, |i, j| vt[(i, order[j])]);
    Svd { u, values, v }
}

/// One-sided Jacobi on a tall matrix: returns `AV` (orthogonal columns),
/// the column norms and the unitary `V`.
fn jacobi(mut a: CMat) -> (CMat, Vec<f64>, CMat) {
    let n = a.ncols();
    let mut v = identity(n);
    // columns below this are rounding noise; rotating them only breeds subnormals
    let floor = (f64::EPSILON * frobenius(&a)).powi(2);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if alpha <= floor || beta <= floor || g <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // rotate column q by the phase of γ, then a real rotation
                let phase = (gamma / g).conj();
                let phase = phase.unscale(phase.norm());
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for m in [&mut a, &mut v] {
                    for i in 0..m.nrows() {
                        let x = m[(i, p)];
                        let y = m[(i, q)] * phase;
                        m[(i, p)] = x * c - y * s;
                        m[(i, q)] = x * s + y * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let values = (0..n).map(|j| a.column(j).norm()).collect();
    (a, values, v)
}

/// Largest singular value, from the smaller Gram matrix.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let g = if m.nrows() <= m.ncols() { m * m.adjoint() } else { m.adjoint() * m };
    eigh(&g).max().max(0.0).sqrt()
}

pub fn rank(m: &CMat, tol: f64) -> usize {
    svd(m).rank(tol)
}

/// Orthonormal basis (as columns) of the range of `m`.
pub fn range_basis(m: &CMat, tol: f64) -> CMat {
    let s = svd(m);
    let k = s.rank(tol);
    s.u.columns(0, k).into_owned()
}

/// Orthonormal basis (as columns) of the kernel of `m`.
pub fn null_basis(m: &CMat, tol: f64) -> CMat {
    let s = svd(m);
    let k = s.rank(tol);
    let c = m.ncols();
    s.v.columns(k, c - k).into_owned()
}

/// Moore–Penrose pseudoinverse with relative singular value cutoff.
pub fn pinv(m: &CMat, tol: f64) -> CMat {
    let s = svd(m);
    let k = s.rank(tol);
    let mut out = CMat::zeros(m.ncols(), m.nrows());
    for j in 0..k {
        let inv = C64::new(1.0 / s.values[j], 0.0);
        out += s.v.column(j) * s.u.column(j).adjoint() * inv;
    }
    out
}

/// Orthogonal projection onto the span of orthonormal columns.
pub fn projector(basis: &CMat) -> CMat {
    basis * basis.adjoint()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// `id_d ⊗ m` in the big-endian convention (identity on the leftmost factor).
pub fn id_kron(d: usize, m: &CMat) -> CMat {
    kron(&identity(d), m)
}

/// `m ⊗ id_d` (identity on the rightmost factor).
pub fn kron_id(m: &CMat, d: usize) -> CMat {
    kron(m, &identity(d))
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in comparison");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    })
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    let m = gaussian_matrix(rng, n, 1);
    m.column(0).into_owned()
}

/// Incrementally grown orthonormal family in `C^dim` (modified Gram–Schmidt
/// with one reorthogonalization pass).
#[derive(Debug, Clone)]
pub struct OrthoBasis {
    dim: usize,
    vecs: Vec<CVec>,
}

impl OrthoBasis {
    pub fn new(dim: usize) -> Self {
        OrthoBasis {
            dim,
            vecs: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vecs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vecs.is_empty()
    }

    pub fn vectors(&self) -> &[CVec] {
        &self.vecs
    }

    pub fn is_full(&self) -> bool {
        self.vecs.len() == self.dim
    }

    fn reduce(&self, v: &CVec) -> CVec {
        let mut r = v.clone();
        for _ in 0..2 {
            for b in &self.vecs {
                let c = b.dotc(&r);
                r.axpy(-c, b, ONE);
            }
        }
        r
    }

    /// Distance from `v` to the span.
    pub fn distance(&self, v: &CVec) -> f64 {
        self.reduce(v).norm()
    }

    /// Adds the normalized residual of `v` when it exceeds `tol * ‖v‖`.
    pub fn try_add(&mut self, v: &CVec, tol: f64) -> bool {
        if self.is_full() {
            return false;
        }
        let scale = v.norm();
        if scale == 0.0 {
            return false;
        }
        let r = self.reduce(v);
        let n = r.norm();
        if n > tol * scale && n > 1e-14 {
            self.vecs.push(r.unscale(n));
            true
        } else {
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pinv_satisfies_penrose_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = gaussian_matrix(&mut rng, 5, 3) * gaussian_matrix(&mut rng, 3, 7);
        let p = pinv(&a, 1e-10);
        assert!(frobenius(&(&a * &p * &a - &a)) < 1e-10);
        assert!(frobenius(&(&p * &a * &p - &p)) < 1e-10);
        assert!(hermitian_defect(&(&a * &p)) < 1e-10);
    }

    #[test]
    fn null_and_range_bases_are_complementary() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = gaussian_matrix(&mut rng, 3, 2) * gaussian_matrix(&mut rng, 2, 6);
        let n = null_basis(&a, 1e-10);
        assert_eq!(n.ncols(), 4);
        assert!(frobenius(&(&a * &n)) < 1e-10);
        assert_eq!(range_basis(&a, 1e-10).ncols(), 2);
    }

    #[test]
    fn eigen_is_sorted_descending() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = gaussian_matrix(&mut rng, 6, 6);
        let h = &g * g.adjoint();
        let e = eigh(&h);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let back = &e.vectors
            * CMat::from_diagonal(&DVector::from_iterator(
                6,
                e.values.iter().map(|&v| C64::new(v, 0.0)),
            ))
            * e.vectors.adjoint();
        assert!(max_abs_diff(&back, &h) < 1e-10);
    }

    #[test]
    fn ortho_basis_rejects_dependent_vectors() {
        let mut b = OrthoBasis::new(3);
        assert!(b.try_add(&basis_vector(3, 0), 1e-10));
        let v = basis_vector(3, 0) * C64::new(2.0, 1.0);
        assert!(!b.try_add(&v, 1e-10));
        assert!(b.try_add(&(basis_vector(3, 0) + basis_vector(3, 1)), 1e-10));
        assert_eq!(b.len(), 2);
    }

    fn assert_svd(a: &CMat) {
        let s = svd(a);
        let k = s.values.len();
        let sig = CMat::from_diagonal(&CVec::from_iterator(k, s.values.iter().map(|&x| C64::new(x, 0.0))));
        let back = &s.u * sig * s.v.columns(0, k).adjoint();
        assert!(max_abs_diff(&back, a) < 1e-12 * (1.0 + frobenius(a)), "reconstruction");
        let vu = max_abs_diff(&(s.v.adjoint() * &s.v), &identity(a.ncols()));
        assert!(vu < 1e-12, "V unitary {vu:e} {:?}", a.shape());
        let r = s.rank(1e-10);
        let ur = s.u.columns(0, r);
        assert!(max_abs_diff(&(ur.adjoint() * ur), &identity(r)) < 1e-12, "U orthonormal");
        assert!((op_norm(a) - s.values.first().copied().unwrap_or(0.0)).abs() < 1e-12 * (1.0 + s.values[0]));
    }

    #[test]
    fn svd_on_dense_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for (r, c) in [(7, 4), (4, 7), (5, 5)] {
            assert_svd(&gaussian_matrix(&mut rng, r, c));
        }
    }

    #[test]
    fn svd_on_sparse_structured_input() {
        // exact zeros, repeated values and rank deficiency
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let entries = [ZERO, ZERO, ZERO, ONE, -ONE, C64::new(0.0, 1.0), C64::new(2.0, 0.0)];
        for (r, c) in [(25, 18), (18, 25), (60, 25), (25, 60), (30, 30)] {
            let base = CMat::from_fn(r, 6, |_, _| entries[rng.random_range(0..entries.len())]);
            let mix = CMat::from_fn(6, c, |_, _| entries[rng.random_range(0..entries.len())]);
            let a = base * mix;
            assert_svd(&a);
            assert!(rank(&a, 1e-10) <= 6);
        }
    }
}
