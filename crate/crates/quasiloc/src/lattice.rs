//! Finite truncations of `Z^1` and `Z^2` with the Euclidean metric.
//!
//! Regions are canonical (sorted, deduplicated) site lists, cones are closed
//! wedges with real-valued apexes, and every ball/fattening that would poke
//! out of the active truncation box is a hard error rather than a silent clip.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("truncation radius {radius} cannot contain {what} (needs at least {needed})")]
    TruncationOverflow {
        what: String,
        radius: i64,
        needed: i64,
    },
    #[error("empty region passed to {0}")]
    EmptyRegion(&'static str),
    #[error("degenerate cone: half angle {0} must be positive")]
    DegenerateCone(f64),
    #[error("site {0:?} lies outside the truncation box of radius {1}")]
    SiteOutsideTruncation(Site, i64),
    #[error("invalid lattice config: {0}")]
    BadConfig(String),
}

/// A lattice site. One-dimensional lattices use `y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Site(pub i64, pub i64);

impl Site {
    pub fn dist(&self, other: &Site) -> f64 {
        let dx = (self.0 - other.0) as f64;
        let dy = (self.1 - other.1) as f64;
        dx.hypot(dy)
    }

    pub fn dist2(&self, other: &Site) -> i64 {
        let dx = self.0 - other.0;
        let dy = self.1 - other.1;
        dx * dx + dy * dy
    }

    pub fn as_point(&self) -> [f64; 2] {
        [self.0 as f64, self.1 as f64]
    }
}

/// A finite set of sites in canonical (lexicographic) order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Region {
    sites: Vec<Site>,
}

impl Region {
    pub fn new(mut sites: Vec<Site>) -> Self {
        sites.sort_unstable();
        sites.dedup();
        Region { sites }
    }

    pub fn empty() -> Self {
        Region { sites: Vec::new() }
    }

    pub fn single(s: Site) -> Self {
        Region { sites: vec![s] }
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, s: &Site) -> bool {
        self.sites.binary_search(s).is_ok()
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.sites.iter().all(|s| other.contains(s))
    }

    pub fn intersects(&self, other: &Region) -> bool {
        let (small, big) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.sites.iter().any(|s| big.contains(s))
    }

    pub fn union(&self, other: &Region) -> Region {
        let mut v = self.sites.clone();
        v.extend_from_slice(&other.sites);
        Region::new(v)
    }

    pub fn intersection(&self, other: &Region) -> Region {
        Region {
            sites: self
                .sites
                .iter()
                .filter(|s| other.contains(s))
                .copied()
                .collect(),
        }
    }

    pub fn difference(&self, other: &Region) -> Region {
        Region {
            sites: self
                .sites
                .iter()
                .filter(|s| !other.contains(s))
                .copied()
                .collect(),
        }
    }

    /// Position of `s` in the canonical ordering, if present.
    pub fn index_of(&self, s: &Site) -> Option<usize> {
        self.sites.binary_search(s).ok()
    }

    pub fn diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for (i, a) in self.sites.iter().enumerate() {
            for b in &self.sites[i + 1..] {
                d = d.max(a.dist(b));
            }
        }
        d
    }
}

impl FromIterator<Site> for Region {
    fn from_iter<T: IntoIterator<Item = Site>>(iter: T) -> Self {
        Region::new(iter.into_iter().collect())
    }
}

/// A closed infinite wedge: a site belongs iff the angle between
/// `site - apex` and the axis is at most `half_angle`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cone {
    pub apex: [f64; 2],
    pub axis_angle: f64,
    pub half_angle: f64,
}

impl Cone {
    pub fn new(apex: [f64; 2], axis_angle: f64, half_angle: f64) -> Result<Self, LatticeError> {
        if half_angle <= 0.0 {
            return Err(LatticeError::DegenerateCone(half_angle));
        }
        Ok(Cone {
            apex,
            axis_angle,
            half_angle,
        })
    }

    fn angle_from_axis(&self, p: [f64; 2]) -> f64 {
        let vx = p[0] - self.apex[0];
        let vy = p[1] - self.apex[1];
        if vx == 0.0 && vy == 0.0 {
            return 0.0;
        }
        let (ax, ay) = (self.axis_angle.cos(), self.axis_angle.sin());
        let dot = vx * ax + vy * ay;
        let cross = ax * vy - ay * vx;
        cross.abs().atan2(dot)
    }

    pub fn contains_point(&self, p: [f64; 2]) -> bool {
        self.angle_from_axis(p) <= self.half_angle
    }

    pub fn contains_site(&self, s: &Site) -> bool {
        self.contains_point(s.as_point())
    }

    /// Euclidean distance from `p` to the (closed) cone.
    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        let phi = self.angle_from_axis(p);
        if phi <= self.half_angle {
            return 0.0;
        }
        let r = (p[0] - self.apex[0]).hypot(p[1] - self.apex[1]);
        let excess = phi - self.half_angle;
        if excess >= std::f64::consts::FRAC_PI_2 {
            r
        } else {
            r * excess.sin()
        }
    }

    /// Euclidean distance from `p` to the complement of the cone
    /// (zero when `p` is outside; distance to the boundary when inside).
    pub fn distance_to_complement(&self, p: [f64; 2]) -> f64 {
        let phi = self.angle_from_axis(p);
        if phi > self.half_angle {
            return 0.0;
        }
        let r = (p[0] - self.apex[0]).hypot(p[1] - self.apex[1]);
        let margin = self.half_angle - phi;
        if margin >= std::f64::consts::FRAC_PI_2 {
            r
        } else {
            r * margin.sin()
        }
    }
}

/// A finite truncation box `[-R, R]^dim` of the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub dimension: u8,
    pub truncation_radius: i64,
}

impl LatticeConfig {
    pub fn new(dimension: u8, truncation_radius: i64) -> Result<Self, LatticeError> {
        if dimension != 1 && dimension != 2 {
            return Err(LatticeError::BadConfig(format!(
                "dimension must be 1 or 2, got {dimension}"
            )));
        }
        if truncation_radius < 1 {
            return Err(LatticeError::BadConfig(format!(
                "truncation_radius must be >= 1, got {truncation_radius}"
            )));
        }
        Ok(LatticeConfig {
            dimension,
            truncation_radius,
        })
    }

    pub fn chain(truncation_radius: i64) -> Self {
        LatticeConfig {
            dimension: 1,
            truncation_radius,
        }
    }

    pub fn plane(truncation_radius: i64) -> Self {
        LatticeConfig {
            dimension: 2,
            truncation_radius,
        }
    }

    pub fn contains(&self, s: &Site) -> bool {
        let r = self.truncation_radius;
        s.0.abs() <= r && (self.dimension == 1 && s.1 == 0 || self.dimension == 2 && s.1.abs() <= r)
    }

    fn check_inside(&self, s: &Site) -> Result<(), LatticeError> {
        if self.contains(s) {
            Ok(())
        } else {
            Err(LatticeError::SiteOutsideTruncation(
                *s,
                self.truncation_radius,
            ))
        }
    }

    /// `b_x(n)`: all sites within Euclidean distance `n` of `x`.
    ///
    /// Errors if the ideal ball is not fully contained in the truncation box;
    /// silent clipping would corrupt downstream tail certificates.
    pub fn ball(&self, x: Site, n: f64) -> Result<Region, LatticeError> {
        self.check_inside(&x)?;
        if n < 0.0 {
            return Err(LatticeError::BadConfig(format!("negative radius {n}")));
        }
        let reach = n.floor() as i64;
        let r = self.truncation_radius;
        let overflow = x.0 + reach > r
            || x.0 - reach < -r
            || (self.dimension == 2 && (x.1 + reach > r || x.1 - reach < -r));
        if overflow {
            return Err(LatticeError::TruncationOverflow {
                what: format!("ball around {x:?} of radius {n}"),
                radius: r,
                needed: x.0.abs().max(x.1.abs()) + reach,
            });
        }
        let n2 = n * n;
        let mut sites = Vec::new();
        if self.dimension == 1 {
            for dx in -reach..=reach {
                let s = Site(x.0 + dx, 0);
                if ((dx * dx) as f64) <= n2 + 1e-9 {
                    sites.push(s);
                }
            }
        } else {
            for dx in -reach..=reach {
                for dy in -reach..=reach {
                    if ((dx * dx + dy * dy) as f64) <= n2 + 1e-9 {
                        sites.push(Site(x.0 + dx, x.1 + dy));
                    }
                }
            }
        }
        Ok(Region::new(sites))
    }

    /// `X(m)`: all sites within distance `m` of the region `X`.
    pub fn fatten(&self, x: &Region, m: f64) -> Result<Region, LatticeError> {
        if x.is_empty() {
            return Err(LatticeError::EmptyRegion("fatten"));
        }
        if m == 0.0 {
            return Ok(x.clone());
        }
        let mut out = Region::empty();
        for s in x.sites() {
            out = out.union(&self.ball(*s, m)?);
        }
        Ok(out)
    }

    /// `X(m)` intersected with a window region, computed by scanning the
    /// window instead of fattening; never overflows the truncation.
    pub fn fatten_within(&self, x: &Region, m: f64, window: &Region) -> Region {
        window
            .sites()
            .iter()
            .filter(|w| x.sites().iter().any(|s| s.dist(w) <= m + 1e-9))
            .copied()
            .collect()
    }

    /// All truncation sites inside the closed cone within `radius` of the apex.
    pub fn cone_region(&self, c: &Cone, radius: f64) -> Result<Region, LatticeError> {
        if c.half_angle <= 0.0 {
            return Err(LatticeError::DegenerateCone(c.half_angle));
        }
        if radius > self.truncation_radius as f64 {
            return Err(LatticeError::BadConfig(format!(
                "cone radius {radius} exceeds truncation radius {}",
                self.truncation_radius
            )));
        }
        let r = self.truncation_radius;
        let r2 = radius * radius;
        let mut sites = Vec::new();
        let ys: Vec<i64> = if self.dimension == 1 {
            vec![0]
        } else {
            (-r..=r).collect()
        };
        for x in -r..=r {
            for &y in &ys {
                let s = Site(x, y);
                let dx = s.0 as f64 - c.apex[0];
                let dy = s.1 as f64 - c.apex[1];
                if dx * dx + dy * dy <= r2 + 1e-9 && c.contains_site(&s) {
                    sites.push(s);
                }
            }
        }
        Ok(Region::new(sites))
    }

    /// All truncation box sites.
    pub fn full_box(&self) -> Region {
        let r = self.truncation_radius;
        let mut sites = Vec::new();
        if self.dimension == 1 {
            for x in -r..=r {
                sites.push(Site(x, 0));
            }
        } else {
            for x in -r..=r {
                for y in -r..=r {
                    sites.push(Site(x, y));
                }
            }
        }
        Region::new(sites)
    }

    /// Smallest kappa with `|b_x(n)| <= kappa * n^dim` for `1 <= n <= n_max`.
    pub fn regularity_constant(&self, n_max: i64) -> Result<f64, LatticeError> {
        let mut kappa = 0.0f64;
        for n in 1..=n_max {
            let count = self.ball(Site(0, 0), n as f64)?.len() as f64;
            let denom = (n as f64).powi(self.dimension as i32);
            kappa = kappa.max(count / denom);
        }
        Ok(kappa)
    }
}

/// `d(X, Y)`: minimum Euclidean distance over site pairs.
pub fn set_distance(x: &Region, y: &Region) -> Result<f64, LatticeError> {
    if x.is_empty() || y.is_empty() {
        return Err(LatticeError::EmptyRegion("set_distance"));
    }
    let mut best = f64::INFINITY;
    for a in x.sites() {
        for b in y.sites() {
            best = best.min(a.dist(b));
        }
    }
    Ok(best)
}

/// Distance from a point to the nearest site of a region.
pub fn point_region_distance(p: [f64; 2], x: &Region) -> f64 {
    x.sites()
        .iter()
        .map(|s| (s.0 as f64 - p[0]).hypot(s.1 as f64 - p[1]))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_ball(x: Site, n: f64) -> Vec<Site> {
        let reach = n.ceil() as i64;
        let mut v = Vec::new();
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                let s = Site(x.0 + dx, x.1 + dy);
                if x.dist(&s) <= n + 1e-9 {
                    v.push(s);
                }
            }
        }
        v.sort_unstable();
        v
    }

    #[test]
    fn ball_radius_one() {
        let lat = LatticeConfig::plane(5);
        let b = lat.ball(Site(0, 0), 1.0).unwrap();
        assert_eq!(b.len(), 5);
        assert_eq!(
            b.sites(),
            &[Site(-1, 0), Site(0, -1), Site(0, 0), Site(0, 1), Site(1, 0)]
        );
    }

    #[test]
    fn ball_radius_zero() {
        let lat = LatticeConfig::plane(5);
        let b = lat.ball(Site(0, 0), 0.0).unwrap();
        assert_eq!(b.sites(), &[Site(0, 0)]);
    }

    #[test]
    fn ball_counts_match_enumeration() {
        let lat = LatticeConfig::plane(60);
        for n in 1..=50 {
            let got = lat.ball(Site(0, 0), n as f64).unwrap();
            let want = brute_ball(Site(0, 0), n as f64);
            assert_eq!(got.sites(), want.as_slice(), "n = {n}");
        }
    }

    #[test]
    fn ball_overflow_is_an_error() {
        let lat = LatticeConfig::plane(3);
        assert!(matches!(
            lat.ball(Site(2, 0), 2.0),
            Err(LatticeError::TruncationOverflow { .. })
        ));
        assert!(lat.ball(Site(2, 0), 1.0).is_ok());
    }

    #[test]
    fn fatten_zero_and_singleton() {
        let lat = LatticeConfig::plane(10);
        let x = Region::new(vec![Site(0, 0), Site(3, 0)]);
        assert_eq!(lat.fatten(&x, 0.0).unwrap(), x);
        let single = Region::single(Site(0, 0));
        assert_eq!(
            lat.fatten(&single, 4.0).unwrap(),
            lat.ball(Site(0, 0), 4.0).unwrap()
        );
    }

    #[test]
    fn fatten_union_of_balls() {
        let lat = LatticeConfig::plane(10);
        let x = Region::new(vec![Site(0, 0), Site(3, 0)]);
        let got = lat.fatten(&x, 1.0).unwrap();
        let want = lat
            .ball(Site(0, 0), 1.0)
            .unwrap()
            .union(&lat.ball(Site(3, 0), 1.0).unwrap());
        assert_eq!(got, want);
    }

    #[test]
    fn fatten_monotone_in_m() {
        let lat = LatticeConfig::plane(20);
        let x = Region::new(vec![Site(1, 2), Site(-1, 0)]);
        let mut prev = x.clone();
        for m in 0..6 {
            let cur = lat.fatten(&x, m as f64).unwrap();
            assert!(prev.is_subset(&cur), "m = {m}");
            prev = cur;
        }
    }

    #[test]
    fn set_distance_cases() {
        let x = Region::new(vec![Site(0, 0)]);
        let y = Region::new(vec![Site(3, 4)]);
        assert_eq!(set_distance(&x, &y).unwrap(), 5.0);
        assert_eq!(set_distance(&x, &x).unwrap(), 0.0);
        assert!(set_distance(&Region::empty(), &x).is_err());
    }

    #[test]
    fn set_distance_matches_pairwise_minimum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let xs: Vec<Site> = (0..20)
                .map(|_| Site(rng.gen_range(-15..15), rng.gen_range(-15..15)))
                .collect();
            let ys: Vec<Site> = (0..20)
                .map(|_| Site(rng.gen_range(-15..15), rng.gen_range(-15..15)))
                .collect();
            let rx = Region::new(xs.clone());
            let ry = Region::new(ys.clone());
            let mut want = f64::INFINITY;
            for a in &xs {
                for b in &ys {
                    want = want.min(a.dist(b));
                }
            }
            assert_eq!(set_distance(&rx, &ry).unwrap(), want);
        }
    }

    #[test]
    fn pointwise_triangle_inequality() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let p = Site(rng.gen_range(-20..20), rng.gen_range(-20..20));
            let q = Site(rng.gen_range(-20..20), rng.gen_range(-20..20));
            let r = Site(rng.gen_range(-20..20), rng.gen_range(-20..20));
            assert!(p.dist(&r) <= p.dist(&q) + q.dist(&r) + 1e-12);
        }
    }

    #[test]
    fn full_plane_cone_is_a_ball() {
        let lat = LatticeConfig::plane(8);
        let c = Cone::new([0.0, 0.0], 0.3, std::f64::consts::PI).unwrap();
        let got = lat.cone_region(&c, 5.0).unwrap();
        let want = lat.ball(Site(0, 0), 5.0).unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn half_plane_cone_matches_angle_test() {
        let lat = LatticeConfig::plane(8);
        let c = Cone::new([0.0, 0.0], 0.0, std::f64::consts::FRAC_PI_2).unwrap();
        let got = lat.cone_region(&c, 6.0).unwrap();
        for s in got.sites() {
            assert!(s.0 >= 0, "site {s:?} not in the right half plane");
        }
        for s in lat.ball(Site(0, 0), 6.0).unwrap().sites() {
            if s.0 >= 0 {
                assert!(got.contains(s));
            }
        }
    }

    #[test]
    fn nested_cones_by_angle() {
        let lat = LatticeConfig::plane(10);
        let narrow = Cone::new([0.2, 0.1], 0.4, 0.5).unwrap();
        let wide = Cone::new([0.2, 0.1], 0.4, 0.9).unwrap();
        let rn = lat.cone_region(&narrow, 9.0).unwrap();
        let rw = lat.cone_region(&wide, 9.0).unwrap();
        assert!(rn.is_subset(&rw));
        assert!(rn.len() < rw.len());
    }

    #[test]
    fn degenerate_cone_rejected() {
        assert!(Cone::new([0.0, 0.0], 0.0, 0.0).is_err());
        assert!(Cone::new([0.0, 0.0], 0.0, -0.1).is_err());
    }

    #[test]
    fn regularity_constants() {
        let plane = LatticeConfig::plane(55);
        let kappa2 = plane.regularity_constant(50).unwrap();
        // |b(1)| = 5 so kappa is at least 5; (2n+1)^2 <= 9 n^2 for n >= 1.
        assert_eq!(plane.regularity_constant(1).unwrap(), 5.0);
        assert!(kappa2 <= 9.0, "kappa2 = {kappa2}");
        assert!(kappa2 >= 5.0);

        let chain = LatticeConfig::chain(55);
        let kappa1 = chain.regularity_constant(50).unwrap();
        assert!(kappa1 <= 3.0, "kappa1 = {kappa1}");
        for n in 1..=50 {
            let b = chain.ball(Site(0, 0), n as f64).unwrap().len();
            assert_eq!(b, 2 * n as usize + 1);
        }
    }

    #[test]
    fn cone_point_distances_match_lattice() {
        // continuum point-to-cone distances agree with brute-force lattice
        // distances within one diagonal
        let lat = LatticeConfig::plane(30);
        let c = Cone::new([0.5, -0.25], 0.2, 0.6).unwrap();
        let inside = lat.cone_region(&c, 28.0).unwrap();
        let all = lat.full_box();
        let outside = all.difference(&inside);
        for p in [[12.0, 9.0], [-4.0, 3.0], [8.0, -20.0], [15.0, 2.0]] {
            let d_cont = c.distance_to(p);
            if d_cont > 0.0 && d_cont < 20.0 {
                let d_latt = point_region_distance(p, &inside);
                assert!(
                    (d_cont - d_latt).abs() <= std::f64::consts::SQRT_2 + 1e-9,
                    "p = {p:?}: cont {d_cont} vs latt {d_latt}"
                );
            }
            let dc_cont = c.distance_to_complement(p);
            if dc_cont > 0.0 && dc_cont < 20.0 && !outside.is_empty() {
                let dc_latt = point_region_distance(p, &outside);
                assert!(
                    (dc_cont - dc_latt).abs() <= std::f64::consts::SQRT_2 + 1e-9,
                    "p = {p:?}: cont {dc_cont} vs latt {dc_latt}"
                );
            }
        }
    }

    #[test]
    fn region_serialization_shape() {
        let r = Region::new(vec![Site(1, 2), Site(0, 0)]);
        let js = serde_json::to_string(&r).unwrap();
        assert_eq!(js, r#"{"sites":[[0,0],[1,2]]}"#);
        let c = Cone::new([0.5, 0.0], 0.0, 1.0).unwrap();
        let js = serde_json::to_value(&c).unwrap();
        assert_eq!(js["apex"][0], 0.5);
        assert_eq!(js["half_angle"], 1.0);
    }
}
