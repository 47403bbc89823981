//! Spans of creation/annihilation words on a truncated interacting Fock
//! space, as subspaces of the operators on `⊕ₙ Hₙ`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interacting::InteractingSpace;
use crate::linalg::{CMat, CVec, OrthoBasis};
use crate::par::{map_indexed, Exec};

/// Relative tolerance for span membership.
pub const SPAN_TOL: f64 = 1e-10;

/// Exponents `(εₙ, …, ε₁)` in written order; `ε₁` (rightmost) acts first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct WordSignature(Vec<i8>);

impl WordSignature {
    pub fn new(eps: Vec<i8>) -> Result<Self> {
        if eps.iter().any(|&e| e != 1 && e != -1) {
            return Err(Error::Invalid(format!("signature entries must be ±1: {eps:?}")));
        }
        Ok(WordSignature(eps))
    }

    pub fn exponents(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> i32 {
        self.0.iter().map(|&e| e as i32).sum()
    }

    /// `Σ_{i≤k} εᵢ` for `k = 1..=n`, reading from the right.
    pub fn prefix_sums(&self) -> Vec<i32> {
        let mut s = 0;
        self.0
            .iter()
            .rev()
            .map(|&e| {
                s += e as i32;
                s
            })
            .collect()
    }

    pub fn is_nc(&self) -> bool {
        self.prefix_sums().iter().all(|&s| s >= 0)
    }

    /// Signature of the adjoint word `a₁^{−ε₁} … aₙ^{−εₙ}`.
    pub fn adjoint(&self) -> WordSignature {
        WordSignature(self.0.iter().rev().map(|&e| -e).collect())
    }

    /// Whether the written word contains an adjacent annihilator–creator pair `a⁻a⁺`.
    pub fn has_annihilator_creator_factor(&self) -> bool {
        self.0.windows(2).any(|w| w[0] == -1 && w[1] == 1)
    }
}

impl fmt::Display for WordSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<&str> = self.0.iter().map(|&e| if e > 0 { "+" } else { "-" }).collect();
        write!(f, "({})", s.join(","))
    }
}

/// All signatures of length `n` with the given total, lexicographic in
/// written order (`−1 < +1`). Empty when the total is unreachable.
pub fn signatures(n: usize, total: i32, nc: bool) -> Vec<WordSignature> {
    let mut out = Vec::new();
    if total.unsigned_abs() as usize > n || (n as i32 - total) % 2 != 0 {
        return out;
    }
    for mask in 0..(1u64 << n) {
        // bit (n-1-j) set ⇒ position j is +1, so counting up is lexicographic
        let eps: Vec<i8> = (0..n)
            .map(|j| if mask >> (n - 1 - j) & 1 == 1 { 1 } else { -1 })
            .collect();
        let sig = WordSignature(eps);
        if sig.total() == total && (!nc || sig.is_nc()) {
            out.push(sig);
        }
    }
    out
}

/// The spans compared in the word-algebra analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum SpanKind {
    /// `A*((A*)*A*)ⁿ`, `n ≥ 0`.
    #[serde(rename = "E_A*")]
    EAStar,
    /// `((A*)*A*)ⁿ`, `n ≥ 1`.
    #[serde(rename = "B_A*")]
    BAStar,
    /// Words of total degree 1.
    #[serde(rename = "E_I")]
    EI,
    /// Words of total degree 0.
    #[serde(rename = "B_I")]
    BI,
    /// Degree-1 words with nonnegative partial degrees.
    #[serde(rename = "E_NC")]
    ENC,
    /// Degree-0 words with nonnegative partial degrees.
    #[serde(rename = "B_NC")]
    BNC,
    /// All degree-1 operators.
    E,
    /// All degree-0 operators.
    B,
}

impl SpanKind {
    pub const ALL: [SpanKind; 8] = [
        SpanKind::EAStar,
        SpanKind::EI,
        SpanKind::ENC,
        SpanKind::E,
        SpanKind::BAStar,
        SpanKind::BI,
        SpanKind::BNC,
        SpanKind::B,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SpanKind::EAStar => "E_A*",
            SpanKind::BAStar => "B_A*",
            SpanKind::EI => "E_I",
            SpanKind::BI => "B_I",
            SpanKind::ENC => "E_NC",
            SpanKind::BNC => "B_NC",
            SpanKind::E => "E",
            SpanKind::B => "B",
        }
    }

    pub fn degree(self) -> i32 {
        match self {
            SpanKind::EAStar | SpanKind::EI | SpanKind::ENC | SpanKind::E => 1,
            _ => 0,
        }
    }

    /// Whether letter `e` may sit at position `len` (from the right) of a
    /// generating word, given the partial degree after it.
    fn step_viable(self, len: usize, e: i8, partial: i32) -> bool {
        match self {
            // rightmost letter is a creator, then strictly alternating
            SpanKind::EAStar | SpanKind::BAStar => e == if len % 2 == 1 { 1 } else { -1 },
            SpanKind::ENC | SpanKind::BNC => partial >= 0,
            _ => true,
        }
    }

    fn admissible(self, len: usize, total: i32) -> bool {
        if len == 0 {
            return false;
        }
        match self {
            SpanKind::EAStar => len % 2 == 1,
            SpanKind::BAStar => len % 2 == 0,
            SpanKind::EI | SpanKind::ENC => total == 1,
            SpanKind::BI | SpanKind::BNC => total == 0,
            SpanKind::E | SpanKind::B => false,
        }
    }
}

impl fmt::Display for SpanKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpanKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().replace(['{', '}', ' '], "");
        Ok(match key.as_str() {
            "E_A*" | "E_A" | "EAstar" | "E_Astar" => SpanKind::EAStar,
            "B_A*" | "B_A" | "BAstar" | "B_Astar" => SpanKind::BAStar,
            "E_I" | "EI" => SpanKind::EI,
            "B_I" | "BI" => SpanKind::BI,
            "E_NC" | "E^NC" | "ENC" => SpanKind::ENC,
            "B_NC" | "B^NC" | "BNC" => SpanKind::BNC,
            "E" => SpanKind::E,
            "B" => SpanKind::B,
            _ => return Err(Error::Invalid(format!("unknown span kind {s:?}"))),
        })
    }
}

/// Orthonormal basis of a subspace of the `R × R` operators, `R = Σ rₙ`.
#[derive(Debug, Clone)]
pub struct OperatorSpan {
    label: String,
    size: usize,
    basis: OrthoBasis,
    horizon: usize,
    rank_history: Vec<usize>,
}

impl OperatorSpan {
    fn empty(label: impl Into<String>, size: usize, horizon: usize) -> Self {
        OperatorSpan {
            label: label.into(),
            size,
            basis: OrthoBasis::new(size * size),
            horizon,
            rank_history: Vec::new(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Rank after including all words of length `≤ w`, for `w = 1..=horizon`.
    pub fn rank_history(&self) -> &[usize] {
        &self.rank_history
    }

    /// Rank unchanged over the last two word lengths (words of one parity
    /// may contribute nothing at a given length).
    pub fn stabilized(&self) -> bool {
        let h = &self.rank_history;
        h.len() < 3 || h[h.len() - 1] == h[h.len() - 3]
    }

    pub fn matrices(&self) -> Vec<CMat> {
        self.basis.vectors().iter().map(|v| unvec(v, self.size)).collect()
    }

    pub fn distance(&self, m: &CMat) -> f64 {
        self.basis.distance(&vec_of(m))
    }

    fn add(&mut self, m: &CMat) -> bool {
        self.basis.try_add(&vec_of(m), SPAN_TOL)
    }
}

fn vec_of(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

fn unvec(v: &CVec, size: usize) -> CMat {
    CMat::from_column_slice(size, size, v.as_slice())
}

/// Creator letters `A(i)` on `⊕ₙ Hₙ` (zero out of the top level).
#[derive(Debug, Clone)]
pub struct WordAlgebra {
    offsets: Vec<usize>,
    ranks: Vec<usize>,
    creators: Vec<CMat>,
    annihilators: Vec<CMat>,
}

impl WordAlgebra {
    pub fn new(space: &InteractingSpace) -> Self {
        let ranks = space.ranks();
        let mut offsets = vec![0usize];
        for r in &ranks {
            offsets.push(offsets.last().unwrap() + r);
        }
        let size = *offsets.last().unwrap();
        let creators: Vec<CMat> = (0..space.dim())
            .map(|i| {
                let mut m = CMat::zeros(size, size);
                for n in 0..space.cutoff() {
                    m.view_mut((offsets[n + 1], offsets[n]), (ranks[n + 1], ranks[n]))
                        .copy_from(space.creator(n, i));
                }
                m
            })
            .collect();
        let annihilators = creators.iter().map(|m| m.adjoint()).collect();
        WordAlgebra {
            offsets,
            ranks,
            creators,
            annihilators,
        }
    }

    pub fn size(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn letters(&self) -> usize {
        self.creators.len()
    }

    pub fn letter(&self, eps: i8, i: usize) -> &CMat {
        if eps > 0 {
            &self.creators[i]
        } else {
            &self.annihilators[i]
        }
    }

    /// `a_{iₙ}^{εₙ} ⋯ a_{i₁}^{ε₁}` with letters in written order.
    pub fn word(&self, sig: &WordSignature, letters: &[usize]) -> CMat {
        let r = self.size();
        let mut m = CMat::identity(r, r);
        for (&e, &i) in sig.exponents().iter().zip(letters).rev() {
            m = self.letter(e, i) * m;
        }
        m
    }

    /// The identity, spanning the scalars.
    pub fn scalars(&self) -> OperatorSpan {
        let r = self.size();
        let mut s = OperatorSpan::empty("C", r, 0);
        s.add(&CMat::identity(r, r));
        s
    }

    /// All operators of the given degree (block `(n+g, n)` entries).
    pub fn degree_span(&self, degree: i32, label: &str) -> OperatorSpan {
        let r = self.size();
        let mut s = OperatorSpan::empty(label, r, 0);
        let levels = self.ranks.len() as i32;
        for n in 0..levels {
            let m = n + degree;
            if m < 0 || m >= levels {
                continue;
            }
            let (n, m) = (n as usize, m as usize);
            for col in 0..self.ranks[n] {
                for row in 0..self.ranks[m] {
                    let mut e = CMat::zeros(r, r);
                    e[(self.offsets[m] + row, self.offsets[n] + col)] = crate::linalg::ONE;
                    s.add(&e);
                }
            }
        }
        s
    }

    /// Span of the generating words of `kind` up to length `horizon`.
    ///
    /// Words are grown from the right. Whether a suffix `(ε_k, …, ε₁)` can
    /// still be completed to an admissible word depends only on its length
    /// and partial degree, so suffixes sharing a partial degree are merged
    /// into one node carrying an orthonormal basis of the span of their
    /// words. Extensions follow by linearity. Nodes with zero span or no
    /// admissible completion are dropped.
    pub fn span(&self, kind: SpanKind, horizon: usize, exec: Exec) -> OperatorSpan {
        match kind {
            SpanKind::E => return self.degree_span(1, kind.name()),
            SpanKind::B => return self.degree_span(0, kind.name()),
            _ => {}
        }
        let r = self.size();
        let mut out = OperatorSpan::empty(kind.name(), r, horizon);
        let mut root = OrthoBasis::new(r * r);
        root.try_add(&vec_of(&CMat::identity(r, r)), SPAN_TOL);
        let mut frontier = vec![Node { partial: 0, basis: root }];
        for len in 1..=horizon {
            let remaining = (horizon - len) as i32;
            let mut keys: Vec<i32> = frontier
                .iter()
                .flat_map(|n| [n.partial - 1, n.partial + 1])
                .filter(|&p| (p - kind.degree()).abs() <= remaining)
                .collect();
            keys.sort_unstable();
            keys.dedup();
            let children: Vec<Option<Node>> = map_indexed(exec, keys.len(), |k| {
                let partial = keys[k];
                let mut candidates: Vec<CVec> = Vec::new();
                for e in [-1i8, 1] {
                    if !kind.step_viable(len, e, partial) {
                        continue;
                    }
                    for parent in frontier.iter().filter(|n| n.partial == partial - e as i32) {
                        for v in parent.basis.vectors() {
                            let m = unvec(v, r);
                            for i in 0..self.letters() {
                                candidates.push(vec_of(&(self.letter(e, i) * &m)));
                            }
                        }
                    }
                }
                let basis = orthonormal_span(r * r, &candidates);
                (!basis.is_empty()).then_some(Node { partial, basis })
            });
            frontier = children.into_iter().flatten().collect();
            for node in &frontier {
                if kind.admissible(len, node.partial) {
                    for v in node.basis.vectors() {
                        out.basis.try_add(v, SPAN_TOL);
                    }
                }
            }
            out.rank_history.push(out.rank());
            if frontier.is_empty() {
                while out.rank_history.len() < horizon {
                    out.rank_history.push(out.rank());
                }
                break;
            }
        }
        out
    }
}

/// Orthonormal basis of the span of `vectors`.
fn orthonormal_span(dim: usize, vectors: &[CVec]) -> OrthoBasis {
    let mut basis = OrthoBasis::new(dim);
    for v in vectors {
        if basis.is_full() {
            break;
        }
        basis.try_add(v, SPAN_TOL);
    }
    basis
}

struct Node {
    partial: i32,
    basis: OrthoBasis,
}

/// `max ‖gz − P_F(gz)‖` over an orthonormal basis `g` of `span{xy* : x, y ∈ F}`
/// and basis vectors `z`; zero iff `F` is closed under `(x,y,z) ↦ xy*z`.
pub fn check_ternary(span: &OperatorSpan) -> f64 {
    let mats = span.matrices();
    let mut products = Vec::with_capacity(mats.len() * mats.len());
    for x in &mats {
        for y in &mats {
            products.push(vec_of(&(x * y.adjoint())));
        }
    }
    let g = orthonormal_span(span.size * span.size, &products);
    let mut worst = 0.0f64;
    for v in g.vectors() {
        let gm = unvec(v, span.size);
        for z in &mats {
            worst = worst.max(span.distance(&(&gm * z)));
        }
    }
    worst
}

#[derive(Debug, Clone, Serialize)]
pub struct LeftAction {
    /// `max ‖cf − P_F(cf)‖` over basis pairs.
    pub invariance_residual: f64,
    /// `dim span(C·F)`.
    pub action_rank: usize,
    pub span_rank: usize,
    pub nondegenerate: bool,
}

pub fn check_left_action(c: &OperatorSpan, f: &OperatorSpan) -> LeftAction {
    let cs = c.matrices();
    let fs = f.matrices();
    let mut residual = 0.0f64;
    let mut image = OrthoBasis::new(f.size * f.size);
    for a in &cs {
        for b in &fs {
            let p = a * b;
            residual = residual.max(f.distance(&p));
            image.try_add(&vec_of(&p), SPAN_TOL);
        }
    }
    LeftAction {
        invariance_residual: residual,
        action_rank: image.len(),
        span_rank: f.rank(),
        nondegenerate: image.len() == f.rank(),
    }
}

/// `max` distance of the basis of `inner` from `outer`: zero iff `inner ⊆ outer`.
pub fn containment(inner: &OperatorSpan, outer: &OperatorSpan) -> f64 {
    inner
        .matrices()
        .iter()
        .map(|m| outer.distance(m))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpanSummary {
    pub kind: SpanKind,
    pub rank: usize,
    pub horizon: usize,
    pub stabilized: bool,
    pub rank_history: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OpalgReport {
    pub size: usize,
    pub spans: Vec<SpanSummary>,
    /// `inclusion[i][j]`: distance of span `i` from span `j`.
    pub inclusion: Vec<Vec<f64>>,
    /// Left action of each degree-0 span on each degree-1 span.
    pub actions: Vec<ActionSummary>,
    /// Ternary residual of each degree-1 span.
    pub ternary: Vec<(SpanKind, f64)>,
    /// The expected inclusion chains hold among the requested spans.
    pub chains_hold: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ActionSummary {
    pub algebra: SpanKind,
    pub module: SpanKind,
    pub action: LeftAction,
}

/// The order in the chains `X_A* ⊆ X_NC ⊆ X_I ⊆ X`.
fn chain_position(kind: SpanKind) -> usize {
    match kind {
        SpanKind::EAStar | SpanKind::BAStar => 0,
        SpanKind::ENC | SpanKind::BNC => 1,
        SpanKind::EI | SpanKind::BI => 2,
        SpanKind::E | SpanKind::B => 3,
    }
}

pub fn opalg_report(space: &InteractingSpace, kinds: &[SpanKind], horizon: usize, exec: Exec) -> OpalgReport {
    let alg = WordAlgebra::new(space);
    let spans: Vec<(SpanKind, OperatorSpan)> = kinds.iter().map(|&k| (k, alg.span(k, horizon, exec))).collect();
    let inclusion: Vec<Vec<f64>> = spans
        .iter()
        .map(|(_, a)| spans.iter().map(|(_, b)| containment(a, b)).collect())
        .collect();
    let mut chains_hold = true;
    for (i, (ki, _)) in spans.iter().enumerate() {
        for (j, (kj, _)) in spans.iter().enumerate() {
            if ki.degree() == kj.degree() && chain_position(*ki) < chain_position(*kj) && inclusion[i][j] > SPAN_TOL {
                chains_hold = false;
            }
        }
    }
    let mut actions = Vec::new();
    let mut ternary = Vec::new();
    for (ka, a) in &spans {
        if ka.degree() == 1 {
            ternary.push((*ka, check_ternary(a)));
            continue;
        }
        for (kf, f) in &spans {
            if kf.degree() == 1 {
                actions.push(ActionSummary {
                    algebra: *ka,
                    module: *kf,
                    action: check_left_action(a, f),
                });
            }
        }
    }
    OpalgReport {
        size: alg.size(),
        spans: spans
            .iter()
            .map(|(k, s)| SpanSummary {
                kind: *k,
                rank: s.rank(),
                horizon: s.horizon(),
                stabilized: s.stabilized(),
                rank_history: s.rank_history().to_vec(),
            })
            .collect(),
        inclusion,
        actions,
        ternary,
        chains_hold,
    }
}
