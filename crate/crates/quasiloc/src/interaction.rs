//! Time-dependent interactions: finite lists of Hermitian terms with
//! piecewise-polynomial coefficient profiles on `[0, 1]`.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{pauli, AlgebraError, LocalOperator};
use crate::ffunc::FFunction;
use crate::lattice::{Cone, Region, Site};

#[derive(Debug, Error)]
pub enum InteractionError {
    #[error("term operator must be hermitian (defect {0:.3e})")]
    NotHermitian(f64),
    #[error("term support {0:?} does not match its declared region")]
    RegionMismatch(Vec<Site>),
    #[error("profile must be continuous on [0,1]: {0}")]
    BadProfile(String),
    #[error("term spec needs exactly one of `pauli` or `matrix`")]
    AmbiguousSpec,
    #[error("pauli string length {0} does not match {1} sites")]
    PauliLength(usize, usize),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Scalar coefficient profile, continuous on `[0, 1]`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeProfile {
    Constant { value: f64 },
    /// `sum_k coeffs[k] t^k`
    Polynomial { coeffs: Vec<f64> },
    /// linear interpolation through `(t, value)` knots covering `[0, 1]`
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

impl TimeProfile {
    pub fn constant(v: f64) -> Self {
        TimeProfile::Constant { value: v }
    }

    pub fn ramp() -> Self {
        TimeProfile::Polynomial {
            coeffs: vec![0.0, 1.0],
        }
    }

    pub fn validate(&self) -> Result<(), InteractionError> {
        if let TimeProfile::PiecewiseLinear { knots } = self {
            if knots.len() < 2 {
                return Err(InteractionError::BadProfile(
                    "need at least two knots".into(),
                ));
            }
            if knots[0].0 != 0.0 || knots[knots.len() - 1].0 != 1.0 {
                return Err(InteractionError::BadProfile(
                    "knots must span [0,1]".into(),
                ));
            }
            if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(InteractionError::BadProfile(
                    "knot times must increase".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant { value } => *value,
            TimeProfile::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
            }
            TimeProfile::PiecewiseLinear { knots } => {
                let t = t.clamp(0.0, 1.0);
                let k = knots
                    .windows(2)
                    .find(|w| t <= w[1].0)
                    .unwrap_or(&knots[knots.len() - 2..]);
                let (t0, v0) = k[0];
                let (t1, v1) = k[1];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Rigorous upper bound for `sup_{t in [0,1]} |profile(t)|`.
    pub fn sup_abs(&self) -> f64 {
        match self {
            TimeProfile::Constant { value } => value.abs(),
            TimeProfile::Polynomial { coeffs } => coeffs.iter().map(|c| c.abs()).sum(),
            TimeProfile::PiecewiseLinear { knots } => {
                knots.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            TimeProfile::Constant { .. } => true,
            TimeProfile::Polynomial { coeffs } => coeffs.iter().skip(1).all(|&c| c == 0.0),
            TimeProfile::PiecewiseLinear { knots } => {
                knots.iter().all(|(_, v)| *v == knots[0].1)
            }
        }
    }

    /// Interior break points where the integrand may lose smoothness.
    pub fn knots(&self) -> Vec<f64> {
        match self {
            TimeProfile::PiecewiseLinear { knots } => knots
                .iter()
                .map(|(t, _)| *t)
                .filter(|t| *t > 0.0 && *t < 1.0)
                .collect(),
            _ => Vec::new(),
        }
    }
}

/// One interaction term: a Hermitian operator on `region`, scaled by a
/// time profile.
#[derive(Debug, Clone)]
pub struct InteractionTerm {
    pub region: Region,
    pub op: LocalOperator,
    pub profile: TimeProfile,
    norm: f64,
}

impl InteractionTerm {
    pub fn new(
        region: Region,
        op: LocalOperator,
        profile: TimeProfile,
    ) -> Result<Self, InteractionError> {
        profile.validate()?;
        let defect = op.hermitian_defect();
        if defect > 1e-12 * (1.0 + op.op_norm()) {
            return Err(InteractionError::NotHermitian(defect));
        }
        if op.support() != &region {
            return Err(InteractionError::RegionMismatch(op.support().sites().to_vec()));
        }
        let norm = op.op_norm();
        Ok(InteractionTerm {
            region,
            op,
            profile,
            norm,
        })
    }

    pub fn op_norm(&self) -> f64 {
        self.norm
    }

    /// `sup_t ||Phi(X;t)||` (upper bound, exact for constant and pw-linear).
    pub fn sup_norm(&self) -> f64 {
        self.profile.sup_abs() * self.norm
    }

    pub fn eval(&self, t: f64) -> LocalOperator {
        self.op.scale(C64::new(self.profile.eval(t), 0.0))
    }
}

/// A finite list of terms, i.e. the interaction `X -> Phi(X; t)`.
#[derive(Debug, Clone, Default)]
pub struct Interaction {
    terms: Vec<InteractionTerm>,
}

impl Interaction {
    pub fn new(terms: Vec<InteractionTerm>) -> Self {
        Interaction { terms }
    }

    pub fn empty() -> Self {
        Interaction { terms: Vec::new() }
    }

    pub fn terms(&self) -> &[InteractionTerm] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, term: InteractionTerm) {
        self.terms.push(term);
    }

    /// Maximum term diameter `d_Phi`.
    pub fn range(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.region.diameter())
            .fold(0.0, f64::max)
    }

    /// Maximum term cardinality `C_#`.
    pub fn size_cap(&self) -> usize {
        self.terms.iter().map(|t| t.region.len()).max().unwrap_or(0)
    }

    /// Uniform bound `M = sup_X sup_t ||Phi(X;t)||`.
    pub fn uniform_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.sup_norm()).fold(0.0, f64::max)
    }

    /// Union of all term regions.
    pub fn footprint(&self) -> Region {
        self.terms
            .iter()
            .fold(Region::empty(), |acc, t| acc.union(&t.region))
    }

    pub fn is_time_independent(&self) -> bool {
        self.terms.iter().all(|t| t.profile.is_constant())
    }

    /// Interior time knots of all profiles (for quadrature splitting).
    pub fn time_knots(&self) -> Vec<f64> {
        let mut ks: Vec<f64> = self.terms.iter().flat_map(|t| t.profile.knots()).collect();
        ks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ks.dedup();
        ks
    }

    /// `H_{Lambda,Phi}(t) = sum_{Z inside Lambda} Phi(Z; t)`.
    pub fn local_hamiltonian(
        &self,
        lam: &Region,
        t: f64,
    ) -> Result<LocalOperator, InteractionError> {
        let mut h = LocalOperator::zero(lam.clone(), self.site_dim().unwrap_or(2));
        for term in &self.terms {
            if term.region.is_subset(lam) {
                h = h.add(&term.eval(t))?;
            }
        }
        let ambient = h.ambient().union(lam);
        Ok(h.with_ambient(ambient)?)
    }

    fn site_dim(&self) -> Option<usize> {
        self.terms.first().map(|t| t.op.site_dim())
    }

    /// `||Phi||(t) = sup_{x,y} F(d(x,y))^{-1} sum_{Z containing x,y} ||Phi(Z;t)||`.
    pub fn interaction_norm(&self, f: &FFunction, t: f64) -> f64 {
        let sites: Vec<Site> = self.footprint().sites().to_vec();
        let mut best = 0.0f64;
        for (i, x) in sites.iter().enumerate() {
            for y in &sites[i..] {
                let mut sum = 0.0;
                for term in &self.terms {
                    if term.region.contains(x) && term.region.contains(y) {
                        sum += term.profile.eval(t).abs() * term.norm;
                    }
                }
                if sum > 0.0 {
                    best = best.max(sum / f.eval(x.dist(y)));
                }
            }
        }
        best
    }

    /// `I(Phi) = C_F int_0^1 ||Phi||(t) dt` with adaptive Simpson quadrature
    /// (absolute error <= `quad_tol`), split at profile knots.
    pub fn i_phi(&self, f: &FFunction, cf_upper: f64, quad_tol: f64) -> f64 {
        if self.is_time_independent() {
            return cf_upper * self.interaction_norm(f, 0.0);
        }
        let mut cuts = vec![0.0];
        cuts.extend(self.time_knots());
        cuts.push(1.0);
        let g = |t: f64| self.interaction_norm(f, t);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            total += adaptive_simpson(&g, w[0], w[1], quad_tol / (cuts.len() - 1) as f64, 24);
        }
        cf_upper * total
    }

    /// `Phi_m(X;t) = |X|^m Phi(X;t)`.
    pub fn weight(&self, m: f64) -> Interaction {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let scale = (t.region.len() as f64).powf(m);
                InteractionTerm {
                    region: t.region.clone(),
                    op: t.op.scale(C64::new(scale, 0.0)),
                    profile: t.profile.clone(),
                    norm: t.norm * scale,
                }
            })
            .collect();
        Interaction { terms }
    }

    /// Splits into the zone-respecting part and the (negated) crossing part:
    /// `Phi0` keeps terms inside `G1`, `G2 \ G1`, or away from `G2`;
    /// `Phi1 = Phi0 - Phi` holds the crossing terms with flipped sign.
    pub fn decouple(&self, g1: &Region, g2: &Region) -> (Interaction, Interaction) {
        let mut kept = Vec::new();
        let mut crossing = Vec::new();
        for term in &self.terms {
            let in_g1 = term.region.is_subset(g1);
            let in_band = term.region.is_subset(g2) && !term.region.intersects(g1);
            let outside = !term.region.intersects(g2);
            if in_g1 || in_band || outside {
                kept.push(term.clone());
            } else {
                let mut neg = term.clone();
                neg.op = neg.op.scale(C64::new(-1.0, 0.0));
                crossing.push(neg);
            }
        }
        (Interaction { terms: kept }, Interaction { terms: crossing })
    }

    /// `f(m,x,y) = sum over terms containing x and y with
    /// d((G2p \ G1p)^c, X) <= m of |X| sup_t ||Phi(X;t)||`.
    pub fn f_mxy(&self, g1p: &Cone, g2p: &Cone, m: f64, x: &Site, y: &Site) -> f64 {
        let mut total = 0.0;
        for term in &self.terms {
            if !(term.region.contains(x) && term.region.contains(y)) {
                continue;
            }
            if sandwich_complement_distance(g1p, g2p, &term.region) <= m + 1e-12 {
                total += term.region.len() as f64 * term.sup_norm();
            }
        }
        total
    }
}

/// `d((G2p \ G1p)^c, X)`: distance from the region to the complement of the
/// cone sandwich band, via continuum point-to-cone formulas.
pub fn sandwich_complement_distance(g1p: &Cone, g2p: &Cone, x: &Region) -> f64 {
    x.sites()
        .iter()
        .map(|s| {
            let p = s.as_point();
            g2p.distance_to_complement(p).min(g1p.distance_to(p))
        })
        .fold(f64::INFINITY, f64::min)
}

fn simpson(g: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (g(a) + 4.0 * g(0.5 * (a + b)) + g(b))
}

fn adaptive_simpson(g: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let whole = simpson(g, a, b);
    let mid = 0.5 * (a + b);
    let left = simpson(g, a, mid);
    let right = simpson(g, mid, b);
    let err = (left + right - whole).abs();
    if err <= 15.0 * tol || depth == 0 {
        left + right + (left + right - whole) / 15.0
    } else {
        adaptive_simpson(g, a, mid, tol / 2.0, depth - 1)
            + adaptive_simpson(g, mid, b, tol / 2.0, depth - 1)
    }
}

/// Serializable term description: a Pauli string or a dense matrix on the
/// listed sites, with a coefficient profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub sites: Vec<[i64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pauli: Option<String>,
    /// row-major `[re, im]` pairs of the full `d^k x d^k` matrix
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<[f64; 2]>>,
    pub profile: TimeProfile,
}

impl TermSpec {
    pub fn to_term(&self) -> Result<InteractionTerm, InteractionError> {
        let region = Region::new(self.sites.iter().map(|&[x, y]| Site(x, y)).collect());
        let op = match (&self.pauli, &self.matrix) {
            (Some(p), None) => {
                if p.len() != region.len() {
                    return Err(InteractionError::PauliLength(p.len(), region.len()));
                }
                pauli::string_op(&region, p)
            }
            (None, Some(entries)) => {
                let dim = (entries.len() as f64).sqrt().round() as usize;
                if dim * dim != entries.len() {
                    return Err(InteractionError::BadProfile(format!(
                        "matrix length {} is not a perfect square",
                        entries.len()
                    )));
                }
                let data: Vec<C64> = entries.iter().map(|&[re, im]| C64::new(re, im)).collect();
                let m = Array2::from_shape_vec((dim, dim), data)
                    .map_err(|e| InteractionError::BadProfile(e.to_string()))?;
                LocalOperator::new(region.clone(), region.clone(), m, 2)?
            }
            _ => return Err(InteractionError::AmbiguousSpec),
        };
        InteractionTerm::new(region, op, self.profile.clone())
    }

    pub fn from_term(term: &InteractionTerm) -> TermSpec {
        TermSpec {
            sites: term.region.sites().iter().map(|s| [s.0, s.1]).collect(),
            pauli: None,
            matrix: Some(
                term.op
                    .matrix()
                    .iter()
                    .map(|c| [c.re, c.im])
                    .collect::<Vec<_>>(),
            ),
            profile: term.profile.clone(),
        }
    }
}

pub fn interaction_from_specs(specs: &[TermSpec]) -> Result<Interaction, InteractionError> {
    let terms = specs.iter().map(|s| s.to_term()).collect::<Result<_, _>>()?;
    Ok(Interaction::new(terms))
}

/// Named interaction generators shared by the CLI and the test suites.
pub mod generators {
    use super::*;
    use rand::{Rng, SeedableRng};


    /// Transverse-field Ising chain on sites `(0,0) .. (n-1,0)`:
    /// `-J Z_i Z_{i+1} - h X_i` up to the sign convention `J, h > 0` means
    /// couplings of that strength (signs do not affect any bound checked here).
    pub fn tfim_chain(j: f64, h: f64, n: usize) -> Interaction {
        let mut terms = Vec::new();
        for i in 0..n.saturating_sub(1) {
            let region = Region::new(vec![Site(i as i64, 0), Site(i as i64 + 1, 0)]);
            let op = pauli::string_op(&region, "ZZ").scale(C64::new(j, 0.0));
            terms.push(InteractionTerm::new(region, op, TimeProfile::constant(1.0)).unwrap());
        }
        for i in 0..n {
            let region = Region::single(Site(i as i64, 0));
            let op = pauli::string_op(&region, "X").scale(C64::new(h, 0.0));
            terms.push(InteractionTerm::new(region, op, TimeProfile::constant(1.0)).unwrap());
        }
        Interaction::new(terms)
    }

    /// Pure ZZ chain (all terms commute).
    pub fn zz_chain(j: f64, n: usize) -> Interaction {
        let mut terms = Vec::new();
        for i in 0..n.saturating_sub(1) {
            let region = Region::new(vec![Site(i as i64, 0), Site(i as i64 + 1, 0)]);
            let op = pauli::string_op(&region, "ZZ").scale(C64::new(j, 0.0));
            terms.push(InteractionTerm::new(region, op, TimeProfile::constant(1.0)).unwrap());
        }
        Interaction::new(terms)
    }

    /// Random 2-local interaction on an `n`-site chain: `n_terms` Hermitian
    /// terms on random site pairs within distance 2, optionally with linear
    /// ramps so the interaction is genuinely time dependent.
    pub fn random_two_local(n: usize, n_terms: usize, seed: u64, time_dependent: bool) -> Interaction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = Vec::new();
        for k in 0..n_terms {
            let i = rng.gen_range(0..n as i64 - 1);
            let span = rng.gen_range(1..=2i64.min(n as i64 - 1 - i));
            let region = Region::new(vec![Site(i, 0), Site(i + span, 0)]);
            let op = crate::algebra::random_hermitian(&region, &region, 2, &mut rng)
                .scale(C64::new(0.5, 0.0));
            let profile = if time_dependent && k % 2 == 0 {
                TimeProfile::PiecewiseLinear {
                    knots: vec![
                        (0.0, rng.gen_range(0.2..1.0)),
                        (rng.gen_range(0.3..0.7), rng.gen_range(0.2..1.0)),
                        (1.0, rng.gen_range(0.2..1.0)),
                    ],
                }
            } else {
                TimeProfile::constant(1.0)
            };
            terms.push(InteractionTerm::new(region, op, profile).unwrap());
        }
        Interaction::new(terms)
    }

    /// Nearest-neighbor grid couplings `J ZZ` plus transverse fields `h X` on
    /// an `nx x ny` patch with lower-left corner at `(x0, y0)`.
    pub fn nn_grid(j: f64, h: f64, nx: i64, ny: i64, x0: i64, y0: i64) -> Interaction {
        let mut terms = Vec::new();
        for x in x0..x0 + nx {
            for y in y0..y0 + ny {
                if x + 1 < x0 + nx {
                    let region = Region::new(vec![Site(x, y), Site(x + 1, y)]);
                    let op = pauli::string_op(&region, "ZZ").scale(C64::new(j, 0.0));
                    terms.push(
                        InteractionTerm::new(region, op, TimeProfile::constant(1.0)).unwrap(),
                    );
                }
                if y + 1 < y0 + ny {
                    let region = Region::new(vec![Site(x, y), Site(x, y + 1)]);
                    let op = pauli::string_op(&region, "ZZ").scale(C64::new(j, 0.0));
                    terms.push(
                        InteractionTerm::new(region, op, TimeProfile::constant(1.0)).unwrap(),
                    );
                }
                if h != 0.0 {
                    let region = Region::single(Site(x, y));
                    let op = pauli::string_op(&region, "X").scale(C64::new(h, 0.0));
                    terms.push(
                        InteractionTerm::new(region, op, TimeProfile::constant(1.0)).unwrap(),
                    );
                }
            }
        }
        Interaction::new(terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::pauli::kron;



    fn chain_region(n: i64) -> Region {
        Region::new((0..n).map(|x| Site(x, 0)).collect())
    }

    #[test]
    fn local_hamiltonian_empty_and_single() {
        let phi = Interaction::empty();
        let lam = chain_region(3);
        let h = phi.local_hamiltonian(&lam, 0.3).unwrap();
        assert_eq!(h.op_norm(), 0.0);

        let region = Region::new(vec![Site(0, 0), Site(1, 0)]);
        let op = pauli::string_op(&region, "ZZ");
        let phi = Interaction::new(vec![InteractionTerm::new(
            region.clone(),
            op.clone(),
            TimeProfile::constant(1.0),
        )
        .unwrap()]);
        let h = phi.local_hamiltonian(&lam, 0.0).unwrap();
        assert!(h.sub(&op).unwrap().op_norm() < 1e-14);
        // a volume that misses the term gives zero
        let far = Region::new(vec![Site(2, 0)]);
        assert_eq!(phi.local_hamiltonian(&far, 0.0).unwrap().op_norm(), 0.0);
    }

    #[test]
    fn tfim_matches_hand_assembled_matrix() {
        // 6-site chain, J = h = 1: H = sum ZZ + sum X assembled by Kronecker
        let n = 6usize;
        let phi = generators::tfim_chain(1.0, 1.0, n);
        let lam = chain_region(n as i64);
        let h = phi.local_hamiltonian(&lam, 0.7).unwrap().embed(&lam).unwrap();
        let dim = 1usize << n;
        let mut want = Array2::<C64>::zeros((dim, dim));
        let eye = pauli::matrix('I');
        for i in 0..n - 1 {
            let mut m = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
            for k in 0..n {
                let f = if k == i || k == i + 1 {
                    pauli::matrix('Z')
                } else {
                    eye.clone()
                };
                m = kron(&m, &f);
            }
            want = want + m;
        }
        for i in 0..n {
            let mut m = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
            for k in 0..n {
                let f = if k == i {
                    pauli::matrix('X')
                } else {
                    eye.clone()
                };
                m = kron(&m, &f);
            }
            want = want + m;
        }
        let diff = h.matrix() - &want;
        assert!(crate::algebra::frobenius(&diff) < 1e-12);
    }

    #[test]
    fn interaction_norm_single_pair() {
        let f = FFunction::new(3.0, true, 1).unwrap();
        let region = Region::new(vec![Site(0, 0), Site(1, 0)]);
        let h = 0.7;
        let op = pauli::string_op(&region, "ZZ").scale(C64::new(h, 0.0));
        let phi = Interaction::new(vec![
            InteractionTerm::new(region, op, TimeProfile::constant(1.0)).unwrap()
        ]);
        let want = h / f.eval(1.0);
        assert!((phi.interaction_norm(&f, 0.5) - want).abs() < 1e-12);
        assert_eq!(Interaction::empty().interaction_norm(&f, 0.0), 0.0);
    }

    #[test]
    fn interaction_norm_matches_pair_scan() {
        let f = FFunction::new(3.0, true, 1).unwrap();
        let phi = generators::random_two_local(8, 10, 42, false);
        let t = 0.3;
        // exhaustive scan over all site pairs in the footprint
        let sites = phi.footprint();
        let mut want = 0.0f64;
        for x in sites.sites() {
            for y in sites.sites() {
                let mut sum = 0.0;
                for term in phi.terms() {
                    if term.region.contains(x) && term.region.contains(y) {
                        sum += term.profile.eval(t).abs() * term.op_norm();
                    }
                }
                want = want.max(sum / f.eval(x.dist(y)));
            }
        }
        assert!((phi.interaction_norm(&f, t) - want).abs() < 1e-12);
    }

    #[test]
    fn i_phi_constant_and_ramp() {
        let f = FFunction::new(3.0, true, 1).unwrap();
        let region = Region::new(vec![Site(0, 0), Site(1, 0)]);
        let op = pauli::string_op(&region, "ZZ");
        let cf = 2.5;
        let phi_const = Interaction::new(vec![InteractionTerm::new(
            region.clone(),
            op.clone(),
            TimeProfile::constant(1.0),
        )
        .unwrap()]);
        let want = cf * phi_const.interaction_norm(&f, 0.0);
        assert!((phi_const.i_phi(&f, cf, 1e-8) - want).abs() < 1e-10);

        let phi_ramp = Interaction::new(vec![InteractionTerm::new(
            region,
            op,
            TimeProfile::ramp(),
        )
        .unwrap()]);
        let want = cf * phi_ramp.interaction_norm(&f, 1.0) * 0.5;
        assert!((phi_ramp.i_phi(&f, cf, 1e-8) - want).abs() < 1e-8);
    }

    #[test]
    fn i_phi_piecewise_matches_dense_trapezoid() {
        let f = FFunction::new(3.0, true, 1).unwrap();
        let region = Region::new(vec![Site(0, 0), Site(1, 0)]);
        let op = pauli::string_op(&region, "ZZ");
        let profile = TimeProfile::PiecewiseLinear {
            knots: vec![(0.0, 0.2), (0.25, 1.0), (0.8, 0.4), (1.0, 0.9)],
        };
        let phi = Interaction::new(vec![InteractionTerm::new(region, op, profile).unwrap()]);
        let cf = 1.0;
        let got = phi.i_phi(&f, cf, 1e-9);
        let n = 100_000;
        let mut acc = 0.0;
        for k in 0..n {
            let t0 = k as f64 / n as f64;
            let t1 = (k + 1) as f64 / n as f64;
            acc += 0.5 * (phi.interaction_norm(&f, t0) + phi.interaction_norm(&f, t1)) / n as f64;
        }
        assert!((got - acc).abs() < 1e-7, "{got} vs {acc}");
    }

    #[test]
    fn weight_scaling() {
        let f = FFunction::new(3.0, true, 1).unwrap();
        let phi = generators::random_two_local(8, 10, 7, false);
        let w0 = phi.weight(0.0);
        assert!(
            (w0.interaction_norm(&f, 0.2) - phi.interaction_norm(&f, 0.2)).abs() < 1e-12,
            "m = 0 is the identity"
        );
        let region = Region::new(vec![Site(0, 0), Site(1, 0)]);
        let op = pauli::string_op(&region, "ZZ");
        let single =
            Interaction::new(vec![
                InteractionTerm::new(region, op, TimeProfile::constant(1.0)).unwrap()
            ]);
        let w1 = single.weight(1.0);
        assert!((w1.terms()[0].op_norm() - 2.0).abs() < 1e-12, "|X| = 2 doubles");
        // ||Phi_1||(t) <= C_# ||Phi||(t)
        let c = phi.size_cap() as f64;
        let w = phi.weight(1.0);
        assert!(w.interaction_norm(&f, 0.4) <= c * phi.interaction_norm(&f, 0.4) + 1e-12);
    }

    #[test]
    fn decouple_zones_and_reconstruction() {
        let lam = chain_region(8);
        let g1 = chain_region(3); // sites 0..2
        let g2 = chain_region(6); // sites 0..5
        let phi = generators::tfim_chain(1.0, 0.5, 8);
        let (phi0, phi1) = phi.decouple(&g1, &g2);
        // every kept term respects one zone
        for term in phi0.terms() {
            let a = term.region.is_subset(&g1);
            let b = term.region.is_subset(&g2) && !term.region.intersects(&g1);
            let c = !term.region.intersects(&g2);
            assert!(a || b || c);
        }
        // every crossing term touches at least two zones
        let band = g2.difference(&g1);
        for term in phi1.terms() {
            let touches = [
                term.region.intersects(&g1),
                term.region.intersects(&band),
                !term.region.difference(&g2).is_empty(),
            ];
            assert!(
                touches.iter().filter(|t| **t).count() >= 2,
                "term {:?}",
                term.region
            );
        }
        // H_Phi = H_Phi0 - H_Phi1 as operators
        for t in [0.0, 0.37, 1.0] {
            let h = phi.local_hamiltonian(&lam, t).unwrap();
            let h0 = phi0.local_hamiltonian(&lam, t).unwrap();
            let h1 = phi1.local_hamiltonian(&lam, t).unwrap();
            let rhs = h0.sub(&h1).unwrap();
            assert!(h.sub(&rhs).unwrap().op_norm() < 1e-12);
        }
        // all terms inside G1 -> nothing crosses
        let inner = generators::tfim_chain(1.0, 1.0, 3);
        let (_, phi1) = inner.decouple(&g1, &g2);
        assert!(phi1.is_empty());
    }

    #[test]
    fn f_mxy_behaviour() {
        use std::f64::consts::PI;
        let phi = generators::nn_grid(1.0, 0.0, 6, 6, -3, -3);
        let g1p = Cone::new([2.0, 0.0], 0.0, PI / 12.0).unwrap();
        let g2p = Cone::new([-2.0, 0.0], 0.0, PI / 3.0).unwrap();
        // far pair: d(x,y) > range -> 0
        assert_eq!(
            phi.f_mxy(&g1p, &g2p, 10.0, &Site(-3, -3), &Site(2, 2)),
            0.0
        );
        // contributing pair grows with m and saturates below the coarse bound
        let x = Site(0, 1);
        let y = Site(0, 2);
        let mut prev = 0.0;
        for m in 0..8 {
            let v = phi.f_mxy(&g1p, &g2p, m as f64, &x, &y);
            assert!(v >= prev - 1e-12, "non-decreasing in m");
            prev = v;
        }
        let cap = phi.size_cap() as f64
            * phi.uniform_bound()
            * 2f64.powi(
                LatticeConfigForBound::ball_count(phi.range()) as i32,
            );
        assert!(prev <= cap);
    }

    struct LatticeConfigForBound;
    impl LatticeConfigForBound {
        fn ball_count(r: f64) -> usize {
            let reach = r.ceil() as i64;
            let mut c = 0;
            for x in -reach..=reach {
                for y in -reach..=reach {
                    if ((x * x + y * y) as f64) <= r * r + 1e-9 {
                        c += 1;
                    }
                }
            }
            c
        }
    }

    #[test]
    fn term_spec_roundtrip() {
        let phi = generators::tfim_chain(0.8, 0.3, 4);
        let specs: Vec<TermSpec> = phi.terms().iter().map(TermSpec::from_term).collect();
        let js = serde_json::to_string(&specs).unwrap();
        let back: Vec<TermSpec> = serde_json::from_str(&js).unwrap();
        let phi2 = interaction_from_specs(&back).unwrap();
        assert_eq!(phi.terms().len(), phi2.terms().len());
        for (a, b) in phi.terms().iter().zip(phi2.terms()) {
            assert_eq!(a.region, b.region);
            assert!(a.op.sub(&b.op).unwrap().op_norm() < 1e-14);
        }
    }
}
