//! Creator norms, creator-map constants, growth diagnostics and the
//! counterexample sweeps for boundedness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interacting::{squeezing_of, InteractingSpace, Squeezing};
use crate::linalg::{
    eigh, gaussian_vector, kron, null_basis, op_norm, svd, CMat, CVec, C64, ONE, ZERO,
};
use crate::par::{map_indexed, Exec};
use crate::tensor::creator_block;
use crate::Tolerances;

/// Number of random starts for the creator-map maximization.
pub const CREATOR_MAP_STARTS: usize = 64;

/// Largest `d` for which the creator-map constant is reported as exact.
pub const EXACT_CREATOR_MAP_DIM: usize = 3;

#[derive(Debug, Clone, Serialize)]
pub struct LevelConstants {
    pub level: usize,
    /// `‖a*(x)‖` from level `n` to `n+1` in quotient coordinates.
    pub creator_norm: f64,
    /// `‖λₙ₊₁(x⊗id)λₙ⁺‖`.
    pub embedded_norm: f64,
    /// `‖κₙ₊₁(x⊗·)‖` on the embedded level-`n` space.
    pub kappa_form_norm: f64,
    /// Smallest `M` with `ℓ(x)Lₙ₊₁ℓ*(x) ≤ M²Lₙ`.
    pub m_x: f64,
    /// `‖B·ker Lₙ‖ / ‖B‖` for `B = (x⊗id)*Lₙ₊₁(x⊗id)`.
    pub kernel_leak: f64,
}

/// Per-level constants of `a*(x)`.
pub fn level_constants(space: &InteractingSpace, x: &CVec, tol: &Tolerances) -> Result<Vec<LevelConstants>> {
    let d = space.dim();
    if x.len() != d {
        return Err(Error::Dimension(format!("probe has length {}, expected {d}", x.len())));
    }
    let kappa = squeezing_of(space);
    let mut rows = Vec::with_capacity(space.cutoff());
    for n in 0..space.cutoff() {
        let lift = creator_block(x, space.space(), n);
        let l_next = space.family().level(n + 1);
        let b = lift.adjoint() * l_next * &lift;
        let b = crate::linalg::hermitian_part(&b);
        let kernel = null_basis(space.family().level(n), tol.rank);
        let b_norm = op_norm(&b);
        let kernel_leak = if kernel.ncols() == 0 || b_norm == 0.0 {
            0.0
        } else {
            op_norm(&(&b * &kernel)) / b_norm
        };
        if kernel_leak > tol.residual {
            return Err(Error::KernelCondition {
                level: n + 1,
                residual: kernel_leak,
            });
        }
        let lp = space.lambda_pinv(n);
        let pencil = lp.adjoint() * &b * &lp;
        let m_x = eigh(&pencil).max().max(0.0).sqrt();
        let creator_norm = op_norm(&space.creator_of(x, n));
        let embedded_norm = op_norm(&(space.lambda(n + 1) * &lift * &lp));
        let kappa_form_norm = op_norm(&(kappa.level(n + 1) * &lift * space.embedding(n)));
        rows.push(LevelConstants {
            level: n,
            creator_norm,
            embedded_norm,
            kappa_form_norm,
            m_x,
            kernel_leak,
        });
    }
    Ok(rows)
}

/// Largest Rayleigh quotient `⟨x⊗y, Lₙ₊₁ x⊗y⟩ / ⟨y, Lₙ y⟩` over random `y`
/// in the range of `Lₙ`, square-rooted. A lower estimate of `M_x(n)`.
pub fn rayleigh_search(space: &InteractingSpace, x: &CVec, n: usize, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xi = space.embedding(n);
    let l = space.family().level(n);
    let l1 = space.family().level(n + 1);
    let mut best = 0.0f64;
    for _ in 0..samples {
        let z = gaussian_vector(&mut rng, xi.ncols());
        let y = xi * z;
        let den = y.dotc(&(l * &y)).re;
        if den <= 0.0 {
            continue;
        }
        let xy = kron(&CMat::from_column_slice(x.len(), 1, x.as_slice()), &CMat::from_column_slice(y.len(), 1, y.as_slice()));
        let xy = xy.column(0).into_owned();
        let num = xy.dotc(&(l1 * &xy)).re;
        best = best.max((num / den).max(0.0).sqrt());
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct CreatorMapConstant {
    pub level: usize,
    /// Best `sup_{‖x‖=1} ‖a*(x)‖` found.
    pub value: f64,
    /// `‖[aₙ(0) | … | aₙ(d−1)]‖`, an upper bound.
    pub upper_bound: f64,
    /// True when `d` is small enough for the multistart search to be trusted
    /// as the maximum; otherwise `value` is a lower bound.
    pub exact: bool,
    pub maximizer: Vec<C64>,
}

/// `sup_{‖x‖=1} ‖a*(x)‖` at level `n` by alternating ascent: for fixed `x`
/// take the top singular pair `(u, v)` of `a*(x)`, then set `x` to the unit
/// vector maximizing `|Σ xᵢ ⟨u, aₙ(i) v⟩|`.
pub fn creator_map_constant(space: &InteractingSpace, n: usize, seed: u64, exec: Exec) -> CreatorMapConstant {
    let d = space.dim();
    let r = space.rank(n);
    let r1 = space.rank(n + 1);
    let mut stacked = CMat::zeros(r1, r * d);
    for i in 0..d {
        stacked.view_mut((0, i * r), (r1, r)).copy_from(space.creator(n, i));
    }
    let upper_bound = op_norm(&stacked);
    let exact = d <= EXACT_CREATOR_MAP_DIM;
    if r == 0 || r1 == 0 {
        return CreatorMapConstant {
            level: n,
            value: 0.0,
            upper_bound,
            exact,
            maximizer: vec![ZERO; d],
        };
    }
    let runs = map_indexed(exec, CREATOR_MAP_STARTS, |start| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(start as u64);
        let mut x = gaussian_vector(&mut rng, d);
        x.unscale_mut(x.norm());
        let mut value = 0.0f64;
        for _ in 0..200 {
            let a = space.creator_of(&x, n);
            let s = svd(&a);
            let sigma = s.values.first().copied().unwrap_or(0.0);
            let u = s.u.column(0).into_owned();
            let v = s.v.column(0).into_owned();
            let c = CVec::from_iterator(d, (0..d).map(|i| u.dotc(&(space.creator(n, i) * &v))));
            let cn = c.norm();
            let improved = sigma - value;
            value = value.max(sigma);
            if cn == 0.0 || improved.abs() <= 1e-15 * sigma.max(1.0) {
                break;
            }
            x = c.map(|z| z.conj()).unscale(cn);
        }
        (value, x)
    });
    let (value, x) = runs
        .into_iter()
        .fold((0.0, CVec::zeros(d)), |acc, run| if run.0 > acc.0 { run } else { acc });
    CreatorMapConstant {
        level: n,
        value,
        upper_bound,
        exact,
        maximizer: x.iter().copied().collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthVerdict {
    Bounded,
    Diverging,
}

#[derive(Debug, Clone, Serialize)]
pub struct Growth {
    pub verdict: GrowthVerdict,
    /// Fitted exponent `r` in `value ~ C·param^r` over the upper half of the sweep.
    pub rate: f64,
    /// `last / first` over the whole sweep.
    pub ratio: f64,
}

/// Least-squares slope of `log value` against `log param` over the upper
/// half of the sweep; diverging when the slope exceeds `0.05` and the
/// sequence grew by more than `5%` overall.
pub fn diagnose_growth(params: &[f64], values: &[f64]) -> Growth {
    let pts: Vec<(f64, f64)> = params
        .iter()
        .zip(values)
        .filter(|(p, v)| **p > 0.0 && **v > 0.0)
        .map(|(p, v)| (p.ln(), v.ln()))
        .collect();
    let ratio = match (values.first(), values.last()) {
        (Some(&a), Some(&b)) if a > 0.0 => b / a,
        _ => 1.0,
    };
    if pts.len() < 2 {
        return Growth {
            verdict: GrowthVerdict::Bounded,
            rate: 0.0,
            ratio,
        };
    }
    let tail = &pts[(pts.len() / 2).min(pts.len() - 2)..];
    let k = tail.len() as f64;
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / k;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let rate = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let verdict = if rate > 0.05 && ratio > 1.05 {
        GrowthVerdict::Diverging
    } else {
        GrowthVerdict::Bounded
    };
    Growth { verdict, rate, ratio }
}

#[derive(Debug, Clone, Serialize)]
pub struct KappaBound {
    pub kappa_norm: f64,
    /// `max_n ‖a*(x)‖ₙ / ‖x‖` over the probes.
    pub worst_creator_ratio: f64,
    pub holds: bool,
}

/// `‖a*(x)‖ ≤ ‖κ‖‖x‖` for each probe, with `‖κ‖ = max_n ‖κₙ‖`.
pub fn kappa_bound(space: &InteractingSpace, kappa: &Squeezing, probes: &[CVec]) -> KappaBound {
    let kappa_norm = kappa.levels().iter().map(op_norm).fold(0.0, f64::max);
    let mut worst = 0.0f64;
    let mut holds = true;
    for x in probes {
        let nx = x.norm();
        if nx == 0.0 {
            continue;
        }
        for n in 0..space.cutoff() {
            let a = op_norm(&space.creator_of(x, n));
            worst = worst.max(a / nx);
            if a > kappa_norm * nx + 1e-9 {
                holds = false;
            }
        }
    }
    KappaBound {
        kappa_norm,
        worst_creator_ratio: worst,
        holds,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub probe: Vec<C64>,
    pub levels: Vec<LevelConstants>,
    pub creator_map: Vec<CreatorMapConstant>,
    pub kappa: KappaBound,
    pub growth: Growth,
    /// Creator norm, embedded norm, `κ`-form norm and pencil constant agree.
    pub consistent: bool,
}

pub fn bounds_report(space: &InteractingSpace, x: &CVec, seed: u64, tol: &Tolerances, exec: Exec) -> Result<BoundsReport> {
    let levels = level_constants(space, x, tol)?;
    let creator_map = (0..space.cutoff())
        .map(|n| creator_map_constant(space, n, seed, exec))
        .collect();
    let kappa = kappa_bound(space, &squeezing_of(space), std::slice::from_ref(x));
    let params: Vec<f64> = (1..=levels.len()).map(|n| n as f64).collect();
    let values: Vec<f64> = levels.iter().map(|l| l.m_x).collect();
    let growth = diagnose_growth(&params, &values);
    let consistent = levels.iter().all(|l| {
        let s = l.m_x.max(1.0);
        (l.creator_norm - l.m_x).abs() <= tol.residual * s
            && (l.embedded_norm - l.m_x).abs() <= tol.residual * s
            && (l.kappa_form_norm - l.m_x).abs() <= tol.residual * s
    });
    Ok(BoundsReport {
        probe: x.iter().copied().collect(),
        levels,
        creator_map,
        kappa,
        growth,
        consistent,
    })
}

/// One row of a growth table.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthRow {
    pub param: usize,
    pub value: f64,
    /// Closed-form comparison value for the row.
    pub reference: f64,
}

/// Sweep `4, 10, 40, 100, 400, …` up to `max`, always ending at `max`.
pub fn default_sweep(min: usize, max: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    let mut base = 1usize;
    'outer: loop {
        for f in [4usize, 10] {
            let v = f * base;
            if v > max {
                break 'outer;
            }
            if v >= min {
                out.push(v);
            }
        }
        base *= 10;
    }
    if out.last() != Some(&max) && max >= min {
        out.push(max);
    }
    out
}

// Bounded deformation, unbounded creators ------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct BoundedLReport {
    /// `‖a*(x)y_m‖/‖y_m‖` against `√(2m)‖x‖`.
    pub rows: Vec<GrowthRow>,
    /// `max_n ‖Lₙ‖` on the finest grid.
    pub max_l_norm: f64,
    pub growth: Growth,
    /// `|M_x(1) − √(2m)|` from the dense pencil on small grids.
    pub dense_check: Vec<(usize, f64)>,
}

/// Ratio for the grid with `m` cells, `x` the normalized constant function
/// and `y` the indicator of the first cell.
pub fn bounded_l_ratio(m: usize, x: &[f64]) -> f64 {
    // orthonormal cell basis eⱼ = √m·1_{cell j}; y = e₀/√m
    let y0 = 1.0 / (m as f64).sqrt();
    let t0 = 0.5 / m as f64;
    let norm_y_sq = t0 * y0 * y0;
    let norm_x_sq: f64 = x.iter().map(|v| v * v).sum();
    let norm_xy_sq = norm_x_sq * y0 * y0;
    (norm_xy_sq / norm_y_sq).sqrt()
}

/// Family on the `m`-cell grid: `L₁ = diag(tⱼ)`, `L₂ = id`.
pub fn bounded_l_family(m: usize) -> Result<crate::deform::DeformationFamily> {
    let space = crate::tensor::TruncatedFockSpace::new(m, 2)?;
    let l1 = CMat::from_fn(m, m, |i, j| {
        if i == j {
            C64::new((i as f64 + 0.5) / m as f64, 0.0)
        } else {
            ZERO
        }
    });
    crate::deform::DeformationFamily::new(
        space,
        vec![CMat::identity(1, 1), l1, CMat::identity(m * m, m * m)],
    )
}

pub fn demo_bounded_l(grids: &[usize], tol: &Tolerances, exec: Exec) -> Result<BoundedLReport> {
    if grids.iter().any(|&m| m < 2) {
        return Err(Error::Invalid("grid size must be at least 2".into()));
    }
    let rows: Vec<GrowthRow> = map_slice_rows(exec, grids, |m| {
        let x = vec![1.0 / (m as f64).sqrt(); m];
        GrowthRow {
            param: m,
            value: bounded_l_ratio(m, &x),
            reference: (2.0 * m as f64).sqrt(),
        }
    });
    let finest = grids.iter().copied().max().unwrap_or(2) as f64;
    let max_l_norm = ((finest - 0.5) / finest).max(1.0);
    let mut dense_check = Vec::new();
    for &m in grids.iter().filter(|&&m| m <= 12) {
        let space = InteractingSpace::build(bounded_l_family(m)?, tol)?;
        let x = CVec::from_element(m, C64::new(1.0 / (m as f64).sqrt(), 0.0));
        let rows = level_constants(&space, &x, tol)?;
        dense_check.push((m, (rows[1].m_x - (2.0 * m as f64).sqrt()).abs()));
    }
    let params: Vec<f64> = rows.iter().map(|r| r.param as f64).collect();
    let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
    Ok(BoundedLReport {
        growth: diagnose_growth(&params, &values),
        rows,
        max_l_norm,
        dense_check,
    })
}

fn map_slice_rows<F>(exec: Exec, params: &[usize], f: F) -> Vec<GrowthRow>
where
    F: Fn(usize) -> GrowthRow + Sync + Send,
{
    crate::par::map_slice(exec, params, |&p| f(p))
}

// Bounded creator map, unbounded L₂ ------------------------------------------

/// One-particle space `⊕_{n≤K} Cⁿ`: block `n` starts at `n(n−1)/2`.
pub fn block_offset(n: usize) -> usize {
    n * (n - 1) / 2
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundedCreatorsRow {
    pub blocks: usize,
    pub l2_norm: f64,
    /// `max_x λ_max((x⊗id)*L₂(x⊗id)) / ‖x‖²` over the probe set.
    pub worst_constant: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundedCreatorsReport {
    pub rows: Vec<BoundedCreatorsRow>,
    pub l2_growth: Growth,
    pub constants_bounded: bool,
    /// Largest disagreement with the dense computation for `K ≤ 4`.
    pub dense_check: f64,
}

/// `λ_max((x⊗id)*L₂(x⊗id))` blockwise: on `Cⁿ` this is `n·c c*` with
/// `c = conj(xⁿ)/√n`, solved as an `n × n` eigenproblem.
pub fn bounded_creators_constant(blocks: usize, x: &CVec) -> f64 {
    let mut best = 0.0f64;
    for n in 1..=blocks {
        let off = block_offset(n);
        let xn = x.rows(off, n);
        let c = xn.map(|z| z.conj()) / C64::new((n as f64).sqrt(), 0.0);
        let b = (&c * c.adjoint()) * C64::new(n as f64, 0.0);
        best = best.max(eigh(&b).max());
    }
    best
}

/// `‖L₂‖ = maxₙ n‖eⁿ‖²` with `eⁿ = Σᵢ eᵢ⊗eᵢ/√n`.
pub fn bounded_creators_l2_norm(blocks: usize) -> f64 {
    (1..=blocks)
        .map(|n| {
            let unit_sq: f64 = (0..n).map(|_| 1.0 / n as f64).sum();
            n as f64 * unit_sq
        })
        .fold(0.0, f64::max)
}

/// Dense `L₂` on `H⊗H` for small `K`.
pub fn bounded_creators_dense_l2(blocks: usize) -> CMat {
    let d = block_offset(blocks + 1);
    let mut l2 = CMat::zeros(d * d, d * d);
    for n in 1..=blocks {
        let off = block_offset(n);
        let mut e = CVec::zeros(d * d);
        for i in 0..n {
            e[(off + i) * d + off + i] = C64::new(1.0 / (n as f64).sqrt(), 0.0);
        }
        l2 += (&e * e.adjoint()) * C64::new(n as f64, 0.0);
    }
    l2
}

pub fn bounded_creators_probes(blocks: usize, seed: u64) -> Vec<CVec> {
    let d = block_offset(blocks + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probes: Vec<CVec> = (0..8).map(|_| gaussian_vector(&mut rng, d)).collect();
    probes.push(CVec::from_element(d, ONE));
    for n in [1, blocks.div_ceil(2), blocks] {
        let mut x = CVec::zeros(d);
        for i in 0..n {
            x[block_offset(n) + i] = ONE;
        }
        probes.push(x);
    }
    probes.push(crate::linalg::basis_vector(d, d - 1));
    probes
}

pub fn demo_bounded_creators(sizes: &[usize], seed: u64, exec: Exec) -> Result<BoundedCreatorsReport> {
    if sizes.iter().any(|&k| k < 2) {
        return Err(Error::Invalid("block count must be at least 2".into()));
    }
    let rows: Vec<BoundedCreatorsRow> = crate::par::map_slice(exec, sizes, |&k| {
        let probes = bounded_creators_probes(k, seed);
        let worst = probes
            .iter()
            .map(|x| bounded_creators_constant(k, x) / x.norm_squared())
            .fold(0.0, f64::max);
        BoundedCreatorsRow {
            blocks: k,
            l2_norm: bounded_creators_l2_norm(k),
            worst_constant: worst,
        }
    });
    let mut dense_check = 0.0f64;
    for &k in sizes.iter().filter(|&&k| k <= 4) {
        let d = block_offset(k + 1);
        let l2 = bounded_creators_dense_l2(k);
        dense_check = dense_check.max((eigh(&l2).max() - bounded_creators_l2_norm(k)).abs());
        for x in bounded_creators_probes(k, seed) {
            let lift = kron(&CMat::from_column_slice(d, 1, x.as_slice()), &CMat::identity(d, d));
            let b = lift.adjoint() * &l2 * &lift;
            dense_check = dense_check.max((eigh(&b).max() - bounded_creators_constant(k, &x)).abs());
        }
    }
    let params: Vec<f64> = rows.iter().map(|r| r.blocks as f64).collect();
    let values: Vec<f64> = rows.iter().map(|r| r.l2_norm).collect();
    let constants_bounded = rows.iter().all(|r| r.worst_constant <= 1.0 + 1e-10);
    Ok(BoundedCreatorsReport {
        l2_growth: diagnose_growth(&params, &values),
        rows,
        constants_bounded,
        dense_check,
    })
}

// Isometric creator map, unbounded squeezing ---------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct UnboundedSqueezingReport {
    /// `‖κ₂ v_N‖/‖v_N‖` for `N = 1..=terms`.
    pub ratios: Vec<f64>,
    pub strictly_increasing: bool,
    pub growth: Growth,
    /// `max |‖a*(x)‖ₙ − ‖x‖|` over probes on a small dense instance.
    pub creator_isometry_defect: f64,
    /// `max |ratio − dense ratio|` for `N ≤ 12`.
    pub dense_check: f64,
}

/// `κ₂(x⊗y) = Ω₂ Σ xᵢyᵢ`: the Rayleigh quotient on `v_N = Σ eₙ⊗eₙ/n`.
pub fn unbounded_squeezing_ratio(terms: usize) -> f64 {
    let mut pairing = 0.0f64;
    let mut norm_sq = 0.0f64;
    for n in 1..=terms {
        let c = 1.0 / n as f64;
        // ⟨ēₙ, eₙ⟩ = 1 for the self-conjugate basis
        pairing += c;
        norm_sq += c * c;
    }
    if norm_sq == 0.0 {
        return 0.0;
    }
    pairing / norm_sq.sqrt()
}

/// `κ` on `Ω ⊕ Cᵈ ⊕ Ω₂C`: `κ₁ = id`, `κ₂ = Ω₂ vᵀ` with `v = Σ eᵢ⊗eᵢ`.
pub fn unbounded_squeezing(d: usize, omega2: &CVec) -> Result<Squeezing> {
    if omega2.len() != d * d {
        return Err(Error::Dimension("Ω₂ must live in H⊗H".into()));
    }
    let mut v = CVec::zeros(d * d);
    for i in 0..d {
        v[i * d + i] = ONE;
    }
    let k2 = omega2 * v.transpose();
    Squeezing::new(d, vec![CMat::identity(1, 1), CMat::identity(d, d), k2])
}

pub fn demo_unbounded_squeezing(terms: usize, seed: u64, tol: &Tolerances) -> Result<UnboundedSqueezingReport> {
    if terms == 0 {
        return Err(Error::Invalid("need at least one term".into()));
    }
    let ratios: Vec<f64> = (1..=terms).map(unbounded_squeezing_ratio).collect();
    let strictly_increasing = ratios.windows(2).all(|w| w[1] > w[0]);
    let params: Vec<f64> = (1..=terms).map(|n| n as f64).collect();
    let growth = diagnose_growth(&params, &ratios);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let small = terms.clamp(2, 12);
    let mut omega2 = gaussian_vector(&mut rng, small * small);
    omega2.unscale_mut(omega2.norm());
    let kappa = unbounded_squeezing(small, &omega2)?;
    let mut dense_check = 0.0f64;
    for n in 1..=small.min(terms) {
        let mut v = CVec::zeros(small * small);
        for j in 0..n {
            v[j * small + j] = C64::new(1.0 / (j + 1) as f64, 0.0);
        }
        let r = (kappa.level(2) * &v).norm() / v.norm();
        dense_check = dense_check.max((r - ratios[n - 1]).abs());
    }
    let space = crate::interacting::space_from_squeezing(&kappa, tol)?;
    let mut creator_isometry_defect = 0.0f64;
    for _ in 0..4 {
        let x = gaussian_vector(&mut rng, small);
        for n in 0..2 {
            let a = op_norm(&space.creator_of(&x, n));
            creator_isometry_defect = creator_isometry_defect.max((a - x.norm()).abs() / x.norm());
        }
    }
    Ok(UnboundedSqueezingReport {
        ratios,
        strictly_increasing,
        growth,
        creator_isometry_defect,
        dense_check,
    })
}

// Rescaling a functional on H⊗H ----------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct FunctionalRescaling {
    /// `f(n) = max{1, F(i,j) : i,j ≤ n}` for `n = 1..=B`.
    pub f: Vec<f64>,
    /// `cₙ = 2ⁿ f(n)`.
    pub c: Vec<f64>,
    /// `F(i,j) ≤ f(i)f(j)` for every pair.
    pub observation_holds: bool,
    /// `sup |Φ(v)|/‖v‖ = (Σ (F(i,j)/(cᵢcⱼ))²)^{1/2}` in the rescaled inner product.
    pub exact_norm: f64,
    /// `(Σ_{i,j≤B} 4^{−i−j})^{1/2} = (1 − 4^{−B})/3`.
    pub proof_bound: f64,
}

/// `F` is the `B × B` matrix of `|Φ(eᵢ⊗eⱼ)|` with 0-based storage of the
/// 1-based indices used in the rescaling.
pub fn rescale_functional(phi: &[Vec<f64>]) -> Result<FunctionalRescaling> {
    let b = phi.len();
    if phi.iter().any(|row| row.len() != b) {
        return Err(Error::Dimension("Φ must be square".into()));
    }
    let big_f: Vec<Vec<f64>> = phi.iter().map(|r| r.iter().map(|v| v.abs()).collect()).collect();
    let mut f = Vec::with_capacity(b);
    let mut running = 1.0f64;
    for n in 0..b {
        for k in 0..=n {
            running = running.max(big_f[n][k]).max(big_f[k][n]);
        }
        f.push(running);
    }
    let c: Vec<f64> = f
        .iter()
        .enumerate()
        .map(|(i, &fi)| 2f64.powi(i as i32 + 1) * fi)
        .collect();
    let mut observation_holds = true;
    let mut sum = 0.0f64;
    for i in 0..b {
        for j in 0..b {
            if big_f[i][j] > f[i] * f[j] {
                observation_holds = false;
            }
            let t = big_f[i][j] / c[i] / c[j];
            sum += t * t;
        }
    }
    let geometric: f64 = (1..=b).map(|i| 0.25f64.powi(i as i32)).sum();
    Ok(FunctionalRescaling {
        f,
        c,
        observation_holds,
        exact_norm: sum.sqrt(),
        proof_bound: geometric,
    })
}

/// Largest `|Φ(v)|/‖v‖` over random `v`, drawn as Gaussian coordinates in the
/// orthonormal basis `eᵢ⊗eⱼ/(cᵢcⱼ)` so that nothing overflows.
/// Sample `s` uses stream `s` of a ChaCha generator seeded with `seed`.
pub fn functional_monte_carlo(phi: &[Vec<f64>], rescaling: &FunctionalRescaling, samples: usize, seed: u64, exec: Exec) -> Vec<f64> {
    let b = phi.len();
    map_indexed(exec, samples, |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s as u64);
        let u = gaussian_vector(&mut rng, b * b);
        let mut value = ZERO;
        for i in 0..b {
            for j in 0..b {
                value += u[i * b + j] * (phi[i][j] / rescaling.c[i] / rescaling.c[j]);
            }
        }
        value.norm() / u.norm()
    })
}

/// Seeded `B × B` functional with entries uniform in `[0, max_entry]`.
pub fn random_functional(b: usize, max_entry: f64, seed: u64) -> Vec<Vec<f64>> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..b)
        .map(|_| (0..b).map(|_| rng.random_range(0.0..=max_entry)).collect())
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionalReport {
    pub basis: usize,
    pub samples: usize,
    pub rescaling: FunctionalRescaling,
    pub max_ratio: f64,
    /// `max_ratio ≤ exact_norm ≤ proof_bound ≤ 1/3`.
    pub certified: bool,
}

pub fn demo_functional(b: usize, max_entry: f64, samples: usize, seed: u64, exec: Exec) -> Result<FunctionalReport> {
    let phi = random_functional(b, max_entry, seed);
    let rescaling = rescale_functional(&phi)?;
    let ratios = functional_monte_carlo(&phi, &rescaling, samples, seed.wrapping_add(1), exec);
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let certified = rescaling.observation_holds
        && max_ratio <= rescaling.exact_norm * (1.0 + 1e-12)
        && rescaling.exact_norm <= rescaling.proof_bound * (1.0 + 1e-12)
        && rescaling.proof_bound <= 1.0 / 3.0;
    Ok(FunctionalReport {
        basis: b,
        samples,
        rescaling,
        max_ratio,
        certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deform::{q_fock_recursive, DeformationFamily};
    use crate::onemode::{onemode_space, JacobiData};
    use crate::tensor::TruncatedFockSpace;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn free_creators_have_norm_of_x() {
        let s = TruncatedFockSpace::new(2, 3).unwrap();
        let sp = InteractingSpace::build(DeformationFamily::identity(s), &tol()).unwrap();
        let x = CVec::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]) * C64::new(2.0, 0.0);
        for row in level_constants(&sp, &x, &tol()).unwrap() {
            assert!((row.m_x - 2.0).abs() < 1e-12);
            assert!((row.creator_norm - 2.0).abs() < 1e-12);
            assert!((row.kappa_form_norm - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn one_mode_constants_are_jacobi_roots() {
        let j = JacobiData::from_k(&[2.0, 0.5, 3.0]).unwrap();
        let sp = onemode_space(&j, 3, &tol()).unwrap();
        let rows = level_constants(&sp, &CVec::from_element(1, ONE), &tol()).unwrap();
        for (n, k) in [2.0f64, 0.5, 3.0].iter().enumerate() {
            assert!((rows[n].m_x - k.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn q_fock_constants_stay_below_the_ceiling() {
        let q = 0.5;
        let s = TruncatedFockSpace::new(2, 5).unwrap();
        let sp = InteractingSpace::build(q_fock_recursive(s, q).unwrap(), &tol()).unwrap();
        let x = CVec::from_vec(vec![ONE, ZERO]);
        let rows = level_constants(&sp, &x, &tol()).unwrap();
        let ceiling = 1.0 / (1.0f64 - q).sqrt();
        for w in rows.windows(2) {
            assert!(w[1].m_x >= w[0].m_x - 1e-12);
        }
        for (n, row) in rows.iter().enumerate() {
            assert!(row.m_x <= ceiling + 1e-12);
            let found = rayleigh_search(&sp, &x, n, 400, 3);
            assert!(found <= row.m_x + 1e-9);
            assert!(found >= 0.5 * row.m_x);
        }
    }

    #[test]
    fn creator_map_constant_of_free_space_is_one() {
        let s = TruncatedFockSpace::new(3, 2).unwrap();
        let sp = InteractingSpace::build(DeformationFamily::identity(s), &tol()).unwrap();
        for n in 0..2 {
            let c = creator_map_constant(&sp, n, 7, Exec::Sequential);
            assert!((c.value - 1.0).abs() < 1e-10);
            assert!(c.exact);
            assert!(c.value <= c.upper_bound + 1e-12);
        }
    }

    #[test]
    fn creator_map_search_is_strategy_independent() {
        let f = crate::interacting::random_poi_family(2, 3, None, 4).unwrap();
        let sp = InteractingSpace::build(f, &tol()).unwrap();
        let a = creator_map_constant(&sp, 2, 1, Exec::Parallel);
        let b = creator_map_constant(&sp, 2, 1, Exec::Sequential);
        assert_eq!(a.value, b.value);
        // a dense grid on the real projective line of C² gives a lower estimate
        let mut grid = 0.0f64;
        for k in 0..2000 {
            let t = std::f64::consts::PI * k as f64 / 2000.0;
            for p in 0..8 {
                let ph = C64::from_polar(1.0, std::f64::consts::PI * p as f64 / 4.0);
                let x = CVec::from_vec(vec![C64::new(t.cos(), 0.0), ph * t.sin()]);
                grid = grid.max(op_norm(&sp.creator_of(&x, 2)));
            }
        }
        assert!(a.value >= grid - 1e-6);
    }

    #[test]
    fn growth_diagnosis() {
        let p: Vec<f64> = (1..=10).map(|v| v as f64).collect();
        let sq: Vec<f64> = p.iter().map(|v| v.sqrt()).collect();
        let g = diagnose_growth(&p, &sq);
        assert_eq!(g.verdict, GrowthVerdict::Diverging);
        assert!((g.rate - 0.5).abs() < 1e-9);
        let flat = vec![1.0; 10];
        assert_eq!(diagnose_growth(&p, &flat).verdict, GrowthVerdict::Bounded);
    }

    #[test]
    fn bounded_l_ratio_matches_closed_form() {
        for m in [2usize, 4, 7, 400] {
            let x = vec![1.0 / (m as f64).sqrt(); m];
            assert!((bounded_l_ratio(m, &x) - (2.0 * m as f64).sqrt()).abs() < 1e-9);
        }
        assert_eq!(bounded_l_ratio(5, &[0.0; 5]), 0.0);
        let r = demo_bounded_l(&[4, 8], &tol(), Exec::Sequential).unwrap();
        assert!(r.dense_check.iter().all(|&(_, e)| e < 1e-9));
        assert!(r.max_l_norm <= 1.0);
    }

    #[test]
    fn bounded_creators_blockwise_matches_dense() {
        let r = demo_bounded_creators(&[2, 3, 4], 5, Exec::Sequential).unwrap();
        assert!(r.dense_check < 1e-10);
        assert!(r.constants_bounded);
        assert_eq!(r.rows[2].l2_norm, 4.0);
    }

    #[test]
    fn single_block_probe_is_rank_one_bound() {
        let k = 5;
        let d = block_offset(k + 1);
        let mut x = CVec::zeros(d);
        x[block_offset(3)] = C64::new(3.0, 0.0);
        x[block_offset(3) + 1] = C64::new(0.0, 4.0);
        assert!((bounded_creators_constant(k, &x) - 25.0).abs() < 1e-10);
    }

    #[test]
    fn bounded_creators_space_agrees_with_pencil() {
        let k = 3;
        let d = block_offset(k + 1);
        let space = TruncatedFockSpace::new(d, 2).unwrap();
        let fam = DeformationFamily::new(
            space,
            vec![CMat::identity(1, 1), CMat::identity(d, d), bounded_creators_dense_l2(k)],
        )
        .unwrap();
        let sp = InteractingSpace::build(fam, &tol()).unwrap();
        for x in bounded_creators_probes(k, 2) {
            let rows = level_constants(&sp, &x, &tol()).unwrap();
            assert!((rows[1].m_x.powi(2) - bounded_creators_constant(k, &x)).abs() < 1e-9);
        }
    }

    #[test]
    fn unbounded_squeezing_ratios() {
        assert!((unbounded_squeezing_ratio(1) - 1.0).abs() < 1e-15);
        let r = demo_unbounded_squeezing(30, 1, &tol()).unwrap();
        assert!(r.strictly_increasing);
        assert!(r.dense_check < 1e-12);
        assert!(r.creator_isometry_defect < 1e-9);
    }

    #[test]
    fn functional_rescaling_properties() {
        let zero = vec![vec![0.0; 4]; 4];
        let z = rescale_functional(&zero).unwrap();
        assert_eq!(z.exact_norm, 0.0);
        assert_eq!(z.f, vec![1.0; 4]);
        let phi = random_functional(6, 100.0, 9);
        let r = rescale_functional(&phi).unwrap();
        assert!(r.observation_holds);
        assert!(r.f.windows(2).all(|w| w[1] >= w[0]));
        assert!(r.exact_norm <= r.proof_bound);
        assert!((r.proof_bound - (1.0 - 0.25f64.powi(6)) / 3.0).abs() < 1e-15);
        let mc = functional_monte_carlo(&phi, &r, 200, 1, Exec::Sequential);
        let mc2 = functional_monte_carlo(&phi, &r, 200, 1, Exec::Parallel);
        assert_eq!(mc, mc2);
        assert!(mc.iter().all(|&v| v <= r.exact_norm * (1.0 + 1e-12)));
    }

    #[test]
    fn kappa_bounds_creators() {
        let f = crate::interacting::random_poi_family(2, 3, None, 8).unwrap();
        let sp = InteractingSpace::build(f, &tol()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let probes: Vec<CVec> = (0..10).map(|_| gaussian_vector(&mut rng, 2)).collect();
        assert!(kappa_bound(&sp, &squeezing_of(&sp), &probes).holds);
    }

    #[test]
    fn sweep_shape() {
        assert_eq!(default_sweep(4, 400), vec![4, 10, 40, 100, 400]);
        assert_eq!(default_sweep(2, 50), vec![4, 10, 40, 50]);
    }
}
