//! Dense tensor-product operator algebra on finite regions.
//!
//! Operators carry their support explicitly and store the matrix on the
//! support only; the ambient region records where the operator conceptually
//! lives (acting as identity elsewhere). Tensor legs are ordered by the
//! global lexicographic site order, so embeddings built in different places
//! agree entry for entry.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{LatticeConfig, LatticeError, Region, Site};

/// Hard cap on any materialized matrix dimension.
pub const DIM_CAP: usize = 1 << 14;

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("support {0:?} is not contained in ambient/target {1:?}")]
    SupportNotContained(Vec<Site>, Vec<Site>),
    #[error("matrix dimension {got} does not match d^{sites} = {want}")]
    DimensionMismatch { got: usize, sites: usize, want: usize },
    #[error("region of {sites} sites at local dimension {d} exceeds the dense cap {cap}")]
    DimCap { sites: usize, d: usize, cap: usize },
    #[error("local dimensions differ: {0} vs {1}")]
    SiteDimMismatch(usize, usize),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Uniform local Hilbert space dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteSpace {
    pub dim: usize,
}

impl SiteSpace {
    pub fn new(dim: usize) -> Result<Self, AlgebraError> {
        if !(2..=4).contains(&dim) {
            return Err(AlgebraError::DimCap {
                sites: 1,
                d: dim,
                cap: 4,
            });
        }
        Ok(SiteSpace { dim })
    }

    pub fn qubit() -> Self {
        SiteSpace { dim: 2 }
    }

    pub fn region_dim(&self, r: &Region) -> Result<usize, AlgebraError> {
        let mut d = 1usize;
        for _ in 0..r.len() {
            d = d.saturating_mul(self.dim);
            if d > DIM_CAP {
                return Err(AlgebraError::DimCap {
                    sites: r.len(),
                    d: self.dim,
                    cap: DIM_CAP,
                });
            }
        }
        Ok(d)
    }
}

/// An operator on the tensor product space of a finite region.
#[derive(Debug, Clone)]
pub struct LocalOperator {
    support: Region,
    ambient: Region,
    matrix: Array2<C64>,
    site_dim: usize,
    hermitian: bool,
}

fn hermitian_defect(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

impl LocalOperator {
    pub fn new(
        support: Region,
        ambient: Region,
        matrix: Array2<C64>,
        site_dim: usize,
    ) -> Result<Self, AlgebraError> {
        if !support.is_subset(&ambient) {
            return Err(AlgebraError::SupportNotContained(
                support.sites().to_vec(),
                ambient.sites().to_vec(),
            ));
        }
        let want = SiteSpace { dim: site_dim }.region_dim(&support)?;
        if matrix.nrows() != want || matrix.ncols() != want {
            return Err(AlgebraError::DimensionMismatch {
                got: matrix.nrows(),
                sites: support.len(),
                want,
            });
        }
        let hermitian = hermitian_defect(&matrix) <= 1e-12 * (1.0 + frobenius(&matrix));
        Ok(LocalOperator {
            support,
            ambient,
            matrix,
            site_dim,
            hermitian,
        })
    }

    pub fn identity(ambient: Region, site_dim: usize) -> Self {
        LocalOperator {
            support: Region::empty(),
            ambient,
            matrix: Array2::from_elem((1, 1), C64::new(1.0, 0.0)),
            site_dim,
            hermitian: true,
        }
    }

    pub fn zero(ambient: Region, site_dim: usize) -> Self {
        LocalOperator {
            support: Region::empty(),
            ambient,
            matrix: Array2::zeros((1, 1)),
            site_dim,
            hermitian: true,
        }
    }

    pub fn support(&self) -> &Region {
        &self.support
    }

    pub fn ambient(&self) -> &Region {
        &self.ambient
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn is_hermitian_flagged(&self) -> bool {
        self.hermitian
    }

    pub fn hermitian_defect(&self) -> f64 {
        hermitian_defect(&self.matrix)
    }

    /// Widens the declared ambient without touching the matrix.
    pub fn with_ambient(mut self, ambient: Region) -> Result<Self, AlgebraError> {
        if !self.support.is_subset(&ambient) {
            return Err(AlgebraError::SupportNotContained(
                self.support.sites().to_vec(),
                ambient.sites().to_vec(),
            ));
        }
        self.ambient = ambient;
        Ok(self)
    }

    /// Tensor with identity so the stored matrix covers all of `into`.
    pub fn embed(&self, into: &Region) -> Result<Self, AlgebraError> {
        if !self.ambient.is_subset(into) {
            return Err(AlgebraError::SupportNotContained(
                self.ambient.sites().to_vec(),
                into.sites().to_vec(),
            ));
        }
        let mut out = self.materialize_on(into)?;
        out.ambient = into.clone();
        Ok(out)
    }

    /// Internal embed onto any region containing the support.
    pub(crate) fn materialize_on(&self, region: &Region) -> Result<Self, AlgebraError> {
        if !self.support.is_subset(region) {
            return Err(AlgebraError::SupportNotContained(
                self.support.sites().to_vec(),
                region.sites().to_vec(),
            ));
        }
        if self.support == *region {
            let mut out = self.clone();
            out.ambient = self.ambient.union(region);
            return Ok(out);
        }
        let d = self.site_dim;
        let space = SiteSpace { dim: d };
        let big = space.region_dim(region)?;
        let n = region.len();
        let stride = leg_strides(n, d);
        let sup_pos: Vec<usize> = self
            .support
            .sites()
            .iter()
            .map(|s| region.index_of(s).expect("support inside region"))
            .collect();
        let comp_pos: Vec<usize> = (0..n).filter(|p| !sup_pos.contains(p)).collect();
        let sup_offsets = digit_offsets(&sup_pos, &stride, d);
        let comp_offsets = digit_offsets(&comp_pos, &stride, d);
        let mut out = Array2::<C64>::zeros((big, big));
        for (a, &ra) in sup_offsets.iter().enumerate() {
            for (b, &rb) in sup_offsets.iter().enumerate() {
                let v = self.matrix[[a, b]];
                if v == C64::new(0.0, 0.0) {
                    continue;
                }
                for &rc in &comp_offsets {
                    out[[ra + rc, rb + rc]] = v;
                }
            }
        }
        Ok(LocalOperator {
            support: region.clone(),
            ambient: self.ambient.union(region),
            matrix: out,
            site_dim: d,
            hermitian: self.hermitian,
        })
    }

    /// Largest singular value (relative accuracy ~1e-10 via LAPACK).
    pub fn op_norm(&self) -> f64 {
        spectral_norm(&self.matrix)
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diag().sum()
    }

    pub fn dagger(&self) -> Self {
        let mut m = self.matrix.t().to_owned();
        m.mapv_inplace(|v| v.conj());
        LocalOperator {
            support: self.support.clone(),
            ambient: self.ambient.clone(),
            matrix: m,
            site_dim: self.site_dim,
            hermitian: self.hermitian,
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        LocalOperator {
            support: self.support.clone(),
            ambient: self.ambient.clone(),
            matrix: self.matrix.mapv(|v| v * c),
            site_dim: self.site_dim,
            hermitian: self.hermitian && c.im == 0.0,
        }
    }

    fn aligned(&self, other: &Self) -> Result<(Self, Self), AlgebraError> {
        if self.site_dim != other.site_dim {
            return Err(AlgebraError::SiteDimMismatch(self.site_dim, other.site_dim));
        }
        let region = self.support.union(&other.support);
        Ok((self.materialize_on(&region)?, other.materialize_on(&region)?))
    }

    pub fn add(&self, other: &Self) -> Result<Self, AlgebraError> {
        let (a, b) = self.aligned(other)?;
        Ok(LocalOperator {
            support: a.support.clone(),
            ambient: self.ambient.union(&other.ambient),
            matrix: &a.matrix + &b.matrix,
            site_dim: a.site_dim,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, AlgebraError> {
        let (a, b) = self.aligned(other)?;
        Ok(LocalOperator {
            support: a.support.clone(),
            ambient: self.ambient.union(&other.ambient),
            matrix: &a.matrix - &b.matrix,
            site_dim: a.site_dim,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, AlgebraError> {
        let (a, b) = self.aligned(other)?;
        Ok(LocalOperator {
            support: a.support.clone(),
            ambient: self.ambient.union(&other.ambient),
            matrix: a.matrix.dot(&b.matrix),
            site_dim: a.site_dim,
            hermitian: false,
        })
    }

    pub fn commutator(&self, other: &Self) -> Result<Self, AlgebraError> {
        let (a, b) = self.aligned(other)?;
        Ok(LocalOperator {
            support: a.support.clone(),
            ambient: self.ambient.union(&other.ambient),
            matrix: a.matrix.dot(&b.matrix) - b.matrix.dot(&a.matrix),
            site_dim: a.site_dim,
            hermitian: false,
        })
    }

    /// `Pi_X`: normalized partial trace over `ambient \ X`, re-tensored with
    /// identity. The result is supported in `X` intersected with the stored
    /// support; identity legs trace to themselves.
    pub fn cond_expect(&self, x: &Region) -> Result<Self, AlgebraError> {
        if !x.is_subset(&self.ambient) {
            return Err(AlgebraError::SupportNotContained(
                x.sites().to_vec(),
                self.ambient.sites().to_vec(),
            ));
        }
        let keep = x.intersection(&self.support);
        if keep == self.support {
            return Ok(self.clone());
        }
        let d = self.site_dim;
        let n = self.support.len();
        let stride = leg_strides(n, d);
        let keep_pos: Vec<usize> = self
            .support
            .sites()
            .iter()
            .enumerate()
            .filter(|(_, s)| keep.contains(s))
            .map(|(p, _)| p)
            .collect();
        let tr_pos: Vec<usize> = (0..n).filter(|p| !keep_pos.contains(p)).collect();
        let keep_offsets = digit_offsets(&keep_pos, &stride, d);
        let tr_offsets = digit_offsets(&tr_pos, &stride, d);
        let norm = 1.0 / tr_offsets.len() as f64;
        let small = keep_offsets.len();
        let mut out = Array2::<C64>::zeros((small, small));
        for (a, &ra) in keep_offsets.iter().enumerate() {
            for (b, &rb) in keep_offsets.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for &rc in &tr_offsets {
                    acc += self.matrix[[ra + rc, rb + rc]];
                }
                out[[a, b]] = acc * norm;
            }
        }
        Ok(LocalOperator {
            support: keep,
            ambient: self.ambient.clone(),
            matrix: out,
            site_dim: d,
            hermitian: self.hermitian,
        })
    }

    /// `Delta_{X(m)} = Pi_{X(m)} - Pi_{X(m-1)}` for `m >= 1`; `Pi_{X(0)}` for
    /// `m = 0` (the telescoping convention).
    pub fn delta_m(
        &self,
        x: &Region,
        m: u32,
        lattice: &LatticeConfig,
    ) -> Result<Self, AlgebraError> {
        let outer = lattice.fatten(x, m as f64)?;
        if !outer.is_subset(&self.ambient) {
            return Err(AlgebraError::SupportNotContained(
                outer.sites().to_vec(),
                self.ambient.sites().to_vec(),
            ));
        }
        if m == 0 {
            return self.cond_expect(x);
        }
        let inner = lattice.fatten(x, (m - 1) as f64)?;
        self.cond_expect(&outer)?.sub(&self.cond_expect(&inner)?)
    }

    /// Operator norm of the difference after aligning supports.
    pub fn distance(&self, other: &Self) -> Result<f64, AlgebraError> {
        Ok(self.sub(other)?.op_norm())
    }
}

/// Strides per tensor leg; the first (lexicographically smallest) site is the
/// most significant digit.
pub(crate) fn leg_strides(n: usize, d: usize) -> Vec<usize> {
    let mut stride = vec![1usize; n.max(1)];
    for k in (0..n.saturating_sub(1)).rev() {
        stride[k] = stride[k + 1] * d;
    }
    stride.truncate(n);
    stride
}

/// Offsets contributed by all digit assignments of the given legs.
pub(crate) fn digit_offsets(positions: &[usize], stride: &[usize], d: usize) -> Vec<usize> {
    let mut offsets = vec![0usize];
    for &p in positions {
        let mut next = Vec::with_capacity(offsets.len() * d);
        for &base in &offsets {
            for digit in 0..d {
                next.push(base + digit * stride[p]);
            }
        }
        offsets = next;
    }
    offsets
}

pub fn frobenius(m: &Array2<C64>) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Spectral norm of a dense matrix via LAPACK, hermitian-aware.
pub fn spectral_norm(m: &Array2<C64>) -> f64 {
    use ndarray_linalg::{EighInto, UPLO};
    if m.nrows() == 0 || frobenius(m) == 0.0 {
        return 0.0;
    }
    if m.nrows() == 1 {
        return m[[0, 0]].norm();
    }
    let defect = hermitian_defect(m);
    if defect <= 1e-13 * (1.0 + frobenius(m)) {
        let (w, _) = m
            .clone()
            .eigh_into(UPLO::Lower)
            .expect("hermitian eigendecomposition");
        w.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()))
    } else {
        let mut g = m.t().to_owned();
        g.mapv_inplace(|v| v.conj());
        let gram = g.dot(m);
        let (w, _) = gram
            .eigh_into(UPLO::Lower)
            .expect("gram eigendecomposition");
        w.iter().fold(0.0f64, |acc, &x| acc.max(x.max(0.0))).sqrt()
    }
}

/// Pauli matrices and small constructors used by generators and tests.
pub mod pauli {
    use super::*;

    pub fn matrix(label: char) -> Array2<C64> {
        let z = C64::new(0.0, 0.0);
        let o = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match label {
            'I' => Array2::from_shape_vec((2, 2), vec![o, z, z, o]).unwrap(),
            'X' => Array2::from_shape_vec((2, 2), vec![z, o, o, z]).unwrap(),
            'Y' => Array2::from_shape_vec((2, 2), vec![z, -i, i, z]).unwrap(),
            'Z' => Array2::from_shape_vec((2, 2), vec![o, z, z, -o]).unwrap(),
            _ => panic!("unknown Pauli label {label}"),
        }
    }

    /// Tensor product of single-site Paulis over the (sorted) region.
    pub fn string_op(region: &Region, labels: &str) -> LocalOperator {
        assert_eq!(region.len(), labels.len(), "one label per site");
        let mut m = Array2::from_elem((1, 1), C64::new(1.0, 0.0));
        for c in labels.chars() {
            m = kron(&m, &matrix(c));
        }
        LocalOperator::new(region.clone(), region.clone(), m, 2).unwrap()
    }

    pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
        let (ra, ca) = a.dim();
        let (rb, cb) = b.dim();
        let mut out = Array2::<C64>::zeros((ra * rb, ca * cb));
        for i in 0..ra {
            for j in 0..ca {
                let v = a[[i, j]];
                if v == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..rb {
                    for l in 0..cb {
                        out[[i * rb + k, j * cb + l]] = v * b[[k, l]];
                    }
                }
            }
        }
        out
    }
}

/// Deterministic random Hermitian operator on a region (probe helper).
pub fn random_hermitian<R: rand::Rng>(
    region: &Region,
    ambient: &Region,
    site_dim: usize,
    rng: &mut R,
) -> LocalOperator {
    let dim = SiteSpace { dim: site_dim }.region_dim(region).unwrap();
    let mut m = Array2::<C64>::zeros((dim, dim));
    for i in 0..dim {
        for j in i..dim {
            let re: f64 = rng.gen_range(-1.0..1.0);
            let im: f64 = if i == j { 0.0 } else { rng.gen_range(-1.0..1.0) };
            m[[i, j]] = C64::new(re, im);
            m[[j, i]] = C64::new(re, -im);
        }
    }
    LocalOperator::new(region.clone(), ambient.clone(), m, site_dim).unwrap()
}
