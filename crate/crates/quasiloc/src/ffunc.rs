//! Decay functions `F(r) = (1+r)^{-s}`, optionally weighted by `e^{-r}`, with
//! certified constants.
//!
//! Every infinite lattice sum is reported as a [`TailBound`]: an exactly
//! evaluated partial sum plus a rigorous upper bound on the neglected tail,
//! obtained from cell-by-cell integral comparison. Downstream certificates
//! consume the enclosure, never a point estimate.

use std::f64::consts::{E, PI, SQRT_2};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FFuncError {
    #[error("exponent s = {s} must exceed the regularity exponent nu = {nu}")]
    ExponentTooSmall { s: f64, nu: u8 },
    #[error("cut {cut} is smaller than required minimum {min}")]
    CutTooSmall { cut: i64, min: i64 },
    #[error("{0}")]
    Domain(String),
    #[error("sum diverges: {0}")]
    Divergence(String),
}

/// Decay profile `F(r) = (1+r)^{-s}`, weighted variant `e^{-r} (1+r)^{-s}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FFunction {
    pub s: f64,
    pub weighted: bool,
    pub nu: u8,
}

impl FFunction {
    pub fn new(s: f64, weighted: bool, nu: u8) -> Result<Self, FFuncError> {
        if s <= nu as f64 {
            return Err(FFuncError::ExponentTooSmall { s, nu });
        }
        Ok(FFunction { s, weighted, nu })
    }

    /// The unweighted companion with the same exponent.
    pub fn unweighted(&self) -> FFunction {
        FFunction {
            s: self.s,
            weighted: false,
            nu: self.nu,
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let base = (1.0 + r).powf(-self.s);
        if self.weighted {
            (-r).exp() * base
        } else {
            base
        }
    }

    pub fn ln_eval(&self, r: f64) -> f64 {
        let base = -self.s * (1.0 + r).ln();
        if self.weighted {
            base - r
        } else {
            base
        }
    }
}

/// Enclosure of an infinite sum: the certified value lies in
/// `[partial_sum, partial_sum + tail_upper]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TailBound {
    pub partial_sum: f64,
    pub tail_upper: f64,
    pub cut_radius: i64,
}

impl TailBound {
    pub fn lower(&self) -> f64 {
        self.partial_sum
    }

    pub fn upper(&self) -> f64 {
        self.partial_sum + self.tail_upper
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower() - 1e-12 && v <= self.upper() + 1e-12
    }

    /// True when `other` (a refinement at larger cut) nests inside `self`.
    pub fn encloses(&self, other: &TailBound) -> bool {
        other.lower() >= self.lower() - 1e-12 && other.upper() <= self.upper() + 1e-12
    }
}

/// Sum of `F(|y|)` over lattice sites with `lo < |y| <= hi` (exact, finite),
/// accumulated in a fixed scan order for reproducibility.
fn ring_sum(f: &FFunction, lo: f64, hi: f64) -> f64 {
    let reach = hi.floor() as i64;
    let lo2 = lo * lo;
    let hi2 = hi * hi;
    let mut total = 0.0f64;
    if f.nu == 1 {
        for x in -reach..=reach {
            let d2 = (x * x) as f64;
            if d2 > lo2 && d2 <= hi2 + 1e-9 {
                total += f.eval(d2.sqrt());
            }
        }
    } else {
        for x in -reach..=reach {
            for y in -reach..=reach {
                let d2 = (x * x + y * y) as f64;
                if d2 > lo2 && d2 <= hi2 + 1e-9 {
                    total += f.eval(d2.sqrt());
                }
            }
        }
    }
    total
}

/// Rigorous upper bound on `sum_{|y| > R} F(|y|)` from the cell comparison
/// `sum <= 2 pi int_R^inf (r + sqrt2) F(r - sqrt2) dr` (2D) and its 1D analogue.
fn lattice_tail_upper(f: &FFunction, cut: f64) -> f64 {
    if f.nu == 1 {
        if f.weighted {
            // 2 int_R^inf e^{-(r-1)} r^{-s} dr <= 2 e R^{-s} e^{-R}
            2.0 * E * cut.powf(-f.s) * (-cut).exp()
        } else {
            // 2 int_R^inf r^{-s} dr = 2 R^{1-s} / (s-1)
            2.0 * cut.powf(1.0 - f.s) / (f.s - 1.0)
        }
    } else {
        let r0 = cut.max(3.0);
        // exact top-up for the band cut < |y| <= r0 when cut < 3
        let band = if r0 > cut { ring_sum(f, cut, r0) } else { 0.0 };
        let tail = if f.weighted {
            // 2 pi e^{sqrt2} (1 + R - sqrt2)^{-s} e^{-R} (R + 1 + sqrt2)
            2.0 * PI
                * SQRT_2.exp()
                * (1.0 + r0 - SQRT_2).powf(-f.s)
                * (-r0).exp()
                * (r0 + 1.0 + SQRT_2)
        } else {
            // 2 pi [ v^{2-s}/(s-2) + (2 sqrt2 - 1) v^{1-s}/(s-1) ], v = 1 + R - sqrt2
            let v = 1.0 + r0 - SQRT_2;
            2.0 * PI
                * (v.powf(2.0 - f.s) / (f.s - 2.0)
                    + (2.0 * SQRT_2 - 1.0) * v.powf(1.0 - f.s) / (f.s - 1.0))
        };
        band + tail
    }
}

/// `||F|| = sup_x sum_y F(d(x, y))`; translation invariance puts `x` at the origin.
pub fn f_norm(f: &FFunction, cut: i64) -> Result<TailBound, FFuncError> {
    if cut < 1 {
        return Err(FFuncError::CutTooSmall { cut, min: 1 });
    }
    if !f.weighted && f.s <= f.nu as f64 {
        return Err(FFuncError::Divergence(format!(
            "unweighted F with s = {} on a nu = {} lattice",
            f.s, f.nu
        )));
    }
    let partial = f.eval(0.0) + ring_sum(f, 0.0, cut as f64);
    Ok(TailBound {
        partial_sum: partial,
        tail_upper: lattice_tail_upper(f, cut as f64),
        cut_radius: cut,
    })
}

/// `G_F(t) = sup_x sum_{d(x,y) >= t} F(d(x,y))` as an enclosure.
pub fn g_f(f: &FFunction, t: f64, cut: i64) -> Result<TailBound, FFuncError> {
    if t < 0.0 {
        return Err(FFuncError::Domain(format!("negative threshold t = {t}")));
    }
    if (cut as f64) < t {
        return Err(FFuncError::Domain(format!(
            "cut {cut} smaller than threshold t = {t}"
        )));
    }
    // sum over t <= |y| <= cut; the origin term belongs exactly when t = 0
    let mut partial = ring_sum(f, t - 1e-9, cut as f64);
    if t <= 0.0 {
        partial += f.eval(0.0);
    }
    Ok(TailBound {
        partial_sum: partial,
        tail_upper: lattice_tail_upper(f, cut as f64),
        cut_radius: cut,
    })
}

/// Log-space variant of [`g_f`] for thresholds deep in the exponential tail:
/// returns `(ln partial, ln tail_upper)`.
pub fn g_f_log(f: &FFunction, t: f64, cut: i64) -> Result<(f64, f64), FFuncError> {
    if (cut as f64) < t {
        return Err(FFuncError::Domain(format!(
            "cut {cut} smaller than threshold t = {t}"
        )));
    }
    let reach = cut;
    let t2 = ((t - 1e-9) * (t - 1e-9)).max(0.0);
    let mut lns = Vec::new();
    if f.nu == 1 {
        for x in -reach..=reach {
            let d2 = (x * x) as f64;
            if d2 >= t2 {
                lns.push(f.ln_eval(d2.sqrt()));
            }
        }
    } else {
        for x in -reach..=reach {
            for y in -reach..=reach {
                let d2 = (x * x + y * y) as f64;
                if d2 >= t2 && d2 <= (cut * cut) as f64 + 1e-9 {
                    lns.push(f.ln_eval(d2.sqrt()));
                }
            }
        }
    }
    let ln_partial = log_sum_exp(&lns);
    let r0 = cut as f64;
    let ln_tail = if f.nu == 1 {
        if f.weighted {
            (2.0 * E).ln() - f.s * r0.ln() - r0
        } else {
            (2.0 / (f.s - 1.0)).ln() + (1.0 - f.s) * r0.ln()
        }
    } else if f.weighted {
        (2.0 * PI).ln() + SQRT_2 - f.s * (1.0 + r0 - SQRT_2).ln() - r0 + (r0 + 1.0 + SQRT_2).ln()
    } else {
        lattice_tail_upper(f, r0).ln()
    };
    Ok((ln_partial, ln_tail))
}

pub fn log_sum_exp(lns: &[f64]) -> f64 {
    let m = lns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = lns.iter().map(|&l| (l - m).exp()).sum();
    m + s.ln()
}

/// `C_F = sup_{x,y} sum_z F(d(x,z)) F(d(z,y)) / F(d(x,y))` as an enclosure.
///
/// The displacement `w = y - x` is scanned over one octant of the ball of
/// radius `cut` (square-lattice symmetry); for unscanned displacements the
/// rigorous cap `2^{s+1} ||F_unweighted||` applies, from splitting the z-sum
/// at the midpoint and `F(d/2) <= 2^s F(d)`.
pub fn conv_constant(f: &FFunction, cut: i64) -> Result<TailBound, FFuncError> {
    if cut < 1 {
        return Err(FFuncError::CutTooSmall { cut, min: 1 });
    }
    if !f.weighted && f.s <= f.nu as f64 {
        return Err(FFuncError::Divergence(format!(
            "unweighted F with s = {} on a nu = {} lattice",
            f.s, f.nu
        )));
    }
    let plain = f.unweighted();
    let plain_norm = f_norm(&plain, cut.max(50))?;
    let cap_unscanned = 2.0f64.powf(f.s + 1.0) * plain_norm.upper();

    let reach = cut;
    let mut best_lower = 0.0f64;
    let mut best_upper = 0.0f64;
    let ws: Vec<(i64, i64)> = if f.nu == 1 {
        (0..=reach).map(|x| (x, 0)).collect()
    } else {
        let mut v = Vec::new();
        for x in 0..=reach {
            for y in 0..=x {
                if x * x + y * y <= reach * reach {
                    v.push((x, y));
                }
            }
        }
        v
    };
    for (wx, wy) in ws {
        let wr = ((wx * wx + wy * wy) as f64).sqrt();
        let denom = f.eval(wr);
        let cut_z = cut + wx.abs().max(wy.abs()) + 2;
        let mut partial = 0.0f64;
        if f.nu == 1 {
            for zx in -cut_z..=cut_z {
                let a = ((zx * zx) as f64).sqrt();
                let b = (((zx - wx) * (zx - wx)) as f64).sqrt();
                partial += f.eval(a) * f.eval(b);
            }
        } else {
            for zx in -cut_z..=cut_z {
                for zy in -cut_z..=cut_z {
                    let a = ((zx * zx + zy * zy) as f64).sqrt();
                    let db = ((zx - wx) * (zx - wx) + (zy - wy) * (zy - wy)) as f64;
                    partial += f.eval(a) * f.eval(db.sqrt());
                }
            }
        }
        // tail over |z| > cut_z: F(d(z,y)) <= F(cut_z - |w|), F summable
        let tail_z = f.eval((cut_z as f64 - wr).max(0.0)) * lattice_tail_upper(f, cut_z as f64);
        let ratio_lower = partial / denom;
        let ratio_upper = (partial + tail_z) / denom;
        best_lower = best_lower.max(ratio_lower);
        best_upper = best_upper.max(ratio_upper);
    }
    Ok(TailBound {
        partial_sum: best_lower,
        tail_upper: (best_upper.max(cap_unscanned) - best_lower).max(0.0),
        cut_radius: cut,
    })
}

/// Report row of [`gf_decay_check`]: both sides of the weighted-tail estimate
/// in log space, and the (nonnegative when satisfied) margin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GfDecayRow {
    pub m: i64,
    pub ln_lhs: f64,
    pub ln_rhs: f64,
    pub ln_margin: f64,
    pub satisfied: bool,
}

/// Checks `G_{F_r}(m) <= 4 pi e^{sqrt2} F(m - sqrt2) m e^{-m}` over a range of
/// integer `m`, comparing enclosure upper bounds against the closed form.
pub fn gf_decay_check(f: &FFunction, m_lo: i64, m_hi: i64) -> Result<Vec<GfDecayRow>, FFuncError> {
    if !f.weighted {
        return Err(FFuncError::Domain(
            "decay estimate applies to the weighted family only".into(),
        ));
    }
    if (m_lo as f64) <= SQRT_2 {
        return Err(FFuncError::Domain(format!(
            "m_lo = {m_lo} must exceed sqrt(2)"
        )));
    }
    let plain = f.unweighted();
    let mut rows = Vec::new();
    for m in m_lo..=m_hi {
        let cut = m + 50;
        let (ln_part, ln_tail) = g_f_log(f, m as f64, cut)?;
        let ln_lhs = log_sum_exp(&[ln_part, ln_tail]);
        let ln_rhs =
            (4.0 * PI).ln() + SQRT_2 + plain.ln_eval(m as f64 - SQRT_2) + (m as f64).ln()
                - m as f64;
        let ln_margin = ln_rhs - ln_lhs;
        rows.push(GfDecayRow {
            m,
            ln_lhs,
            ln_rhs,
            ln_margin,
            satisfied: ln_margin >= 0.0,
        });
    }
    Ok(rows)
}

/// Monotone table for
/// `F~(r) = max(F(r/3), sum_{n >= floor(r/3)} (1+n)^{2nu+1} G_F(n)^alpha)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FTildeTable {
    pub values: Vec<f64>,
    pub alpha: f64,
}

impl FTildeTable {
    pub fn eval(&self, r: usize) -> f64 {
        self.values[r.min(self.values.len() - 1)]
    }
}

/// Enclosure of the moment `sum_{n >= 0} (1+n)^{2nu+1} G_F(n)^alpha` together
/// with the tabulated dominating function `F~`.
pub fn moment_and_tilde(
    f: &FFunction,
    alpha: f64,
    cut: i64,
) -> Result<(TailBound, FTildeTable), FFuncError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(FFuncError::Domain(format!("alpha = {alpha} not in (0, 1]")));
    }
    let two_nu_one = (2 * f.nu + 1) as f64;
    if !f.weighted && alpha * (f.s - f.nu as f64) <= two_nu_one + 1.0 {
        return Err(FFuncError::Divergence(format!(
            "moment (1+n)^{two_nu_one} G^alpha with alpha = {alpha} diverges for unweighted s = {}",
            f.s
        )));
    }
    // upper bounds for G_F(n), n = 0..=cut
    let g_cut = cut + 50;
    let mut g_upper = vec![0.0f64; cut as usize + 1];
    let full_tail = lattice_tail_upper(f, g_cut as f64);
    for (n, slot) in g_upper.iter_mut().enumerate() {
        let mut v = ring_sum(f, n as f64 - 1e-9, g_cut as f64) + full_tail;
        if n == 0 {
            v += f.eval(0.0);
        }
        *slot = v;
    }
    let mut partial = 0.0;
    for (n, g) in g_upper.iter().enumerate() {
        partial += (1.0 + n as f64).powf(two_nu_one) * g.powf(alpha);
    }
    let tail_upper = if f.weighted {
        // geometric-ratio tail from the weighted decay estimate:
        // term(n) <= (1+n)^{2nu+1} [4 pi e^{sqrt2} F(n-sqrt2) n e^{-n}]^alpha
        let plain = f.unweighted();
        let ln_term = |n: f64| -> f64 {
            two_nu_one * (1.0 + n).ln()
                + alpha * ((4.0 * PI).ln() + SQRT_2 + plain.ln_eval(n - SQRT_2) + n.ln() - n)
        };
        let n0 = (cut + 1) as f64;
        let q = (ln_term(n0 + 1.0) - ln_term(n0))
            .exp()
            .max((ln_term(n0 + 2.0) - ln_term(n0 + 1.0)).exp());
        if q >= 1.0 {
            return Err(FFuncError::Domain(format!(
                "cut {cut} too small for a contracting tail ratio (q = {q})"
            )));
        }
        ln_term(n0).exp() / (1.0 - q)
    } else {
        // power-law tail: G_F(n) <= c2 (1 + n - sqrt2)^{2-s}, then integral
        // comparison of the decreasing summand (1+n)^p for p < -1
        let c2 = 2.0 * PI * (1.0 / (f.s - 2.0) + (2.0 * SQRT_2 - 1.0) / (f.s - 1.0));
        let p = two_nu_one + alpha * (2.0 - f.s);
        let n0 = cut as f64;
        let scale = c2.powf(alpha)
            * ((1.0 + n0 - SQRT_2).powf(-alpha * (f.s - 2.0))
                / (1.0 + n0).powf(-alpha * (f.s - 2.0)));
        scale * (1.0 + n0).powf(p + 1.0) / (-(p + 1.0))
    };
    let moment = TailBound {
        partial_sum: partial,
        tail_upper,
        cut_radius: cut,
    };
    // F~ table: suffix sums of the moment summand, with the tail folded in
    let r_max = 3 * cut as usize;
    let mut suffix = vec![0.0f64; cut as usize + 2];
    suffix[cut as usize + 1] = tail_upper;
    for n in (0..=cut as usize).rev() {
        suffix[n] = suffix[n + 1] + (1.0 + n as f64).powf(two_nu_one) * g_upper[n].powf(alpha);
    }
    let mut values = Vec::with_capacity(r_max + 1);
    for r in 0..=r_max {
        let third = r as f64 / 3.0;
        let idx = (r / 3).min(cut as usize + 1);
        values.push(f.eval(third).max(suffix[idx]));
    }
    Ok((moment, FTildeTable { values, alpha }))
}

/// Closed-form value of `sum_{m >= k} m e^{-m} = e^{-k+1}((e-1)k + 1)/(e-1)^2`.
pub fn me_tail(k: i64) -> f64 {
    let kf = k as f64;
    (-kf + 1.0).exp() * ((E - 1.0) * kf + 1.0) / ((E - 1.0) * (E - 1.0))
}
