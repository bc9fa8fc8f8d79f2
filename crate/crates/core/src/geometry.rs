//! Open sets: finite unions of real intervals and the half-space.

use crate::error::{domain, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum DomainKind {
    /// Disjoint open intervals, sorted; ends may be infinite.
    Intervals(Vec<(f64, f64)>),
    /// `{x ∈ R^N : x_N > 0}`.
    HalfSpace { dim: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    kind: DomainKind,
    truncation_radius: f64,
}

/// `B(z,r) ∩ closure(Ω)`.
#[derive(Clone, Debug, PartialEq)]
pub enum BallPieces {
    /// Closed intervals in 1-D.
    Intervals(Vec<(f64, f64)>),
    /// Ball cap above the hyperplane; `height` is the centre's last coordinate.
    Cap { height: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedBall {
    pub center: Vec<f64>,
    pub radius: f64,
    pub pieces: BallPieces,
}

impl TruncatedBall {
    /// Lebesgue measure of the piece set.
    pub fn measure(&self) -> f64 {
        match &self.pieces {
            BallPieces::Intervals(v) => v.iter().map(|(a, b)| b - a).sum(),
            BallPieces::Cap { height } => {
                let n = self.center.len();
                cap_volume(n, self.radius, *height)
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        match &self.pieces {
            BallPieces::Intervals(v) => v.is_empty(),
            BallPieces::Cap { height } => *height <= -self.radius,
        }
    }
}

fn cap_volume(n: usize, r: f64, height: f64) -> f64 {
    // volume of {|y| < r, y_N > -height}, by slicing along the last axis
    use crate::special::gamma;
    let unit = |k: usize| std::f64::consts::PI.powf(k as f64 / 2.0) / gamma(k as f64 / 2.0 + 1.0);
    let lo = (-height).max(-r);
    if lo >= r {
        return 0.0;
    }
    if n == 1 {
        return r - lo;
    }
    let k = n - 1;
    let tol = crate::quad::Tolerance::new(1e-14, 1e-12);
    let f = |s: f64| (r * r - s * s).max(0.0).powf(k as f64 / 2.0);
    unit(k) * crate::quad::integrate(f, lo, r, tol).map(|e| e.value).unwrap_or(f64::NAN)
}

impl Domain {
    pub fn intervals(mut list: Vec<(f64, f64)>) -> Result<Self> {
        if list.is_empty() {
            return domain("empty interval list");
        }
        list.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        for &(a, b) in &list {
            if !(a < b) || a.is_nan() || b.is_nan() {
                return domain(format!("({a}, {b}) is not a nonempty open interval"));
            }
        }
        for w in list.windows(2) {
            if w[0].1 >= w[1].0 {
                return domain("intervals must be pairwise disjoint with separated closures");
            }
        }
        if list.len() == 1 && list[0].0 == f64::NEG_INFINITY && list[0].1 == f64::INFINITY {
            return domain("the whole line has empty boundary");
        }
        let reach = list
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .filter(|v| v.is_finite())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(Domain { kind: DomainKind::Intervals(list), truncation_radius: (2.0 * reach).max(10.0) })
    }

    pub fn unit_interval() -> Self {
        Domain::intervals(vec![(0.0, 1.0)]).expect("valid")
    }

    pub fn half_space(dim: usize) -> Result<Self> {
        if dim == 0 {
            return domain("half-space dimension must be positive");
        }
        Ok(Domain { kind: DomainKind::HalfSpace { dim }, truncation_radius: 10.0 })
    }

    pub fn with_truncation(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return domain("truncation radius must be positive");
        }
        self.truncation_radius = radius;
        Ok(self)
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn truncation_radius(&self) -> f64 {
        self.truncation_radius
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            DomainKind::Intervals(_) => 1,
            DomainKind::HalfSpace { dim } => dim,
        }
    }

    /// Component list for interval domains.
    pub fn components(&self) -> Result<&[(f64, f64)]> {
        match &self.kind {
            DomainKind::Intervals(v) => Ok(v),
            DomainKind::HalfSpace { .. } => Err(Error::Unsupported("interval view of a half-space".into())),
        }
    }

    pub fn is_bounded(&self) -> bool {
        match &self.kind {
            DomainKind::Intervals(v) => v.iter().all(|(a, b)| a.is_finite() && b.is_finite()),
            DomainKind::HalfSpace { .. } => false,
        }
    }

    /// Single bounded interval `(a, b)` if that is what this is.
    pub fn as_interval(&self) -> Option<(f64, f64)> {
        match &self.kind {
            DomainKind::Intervals(v) if v.len() == 1 && v[0].0.is_finite() && v[0].1.is_finite() => Some(v[0]),
            _ => None,
        }
    }

    pub fn diameter(&self) -> f64 {
        match &self.kind {
            DomainKind::Intervals(v) => v[v.len() - 1].1 - v[0].0,
            DomainKind::HalfSpace { .. } => f64::INFINITY,
        }
    }

    /// Finite boundary points (1-D).
    pub fn boundary_points(&self) -> Vec<f64> {
        match &self.kind {
            DomainKind::Intervals(v) => v.iter().flat_map(|&(a, b)| [a, b]).filter(|x| x.is_finite()).collect(),
            DomainKind::HalfSpace { .. } => Vec::new(),
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return domain(format!("point has {} coordinates, domain has dimension {}", x.len(), self.dim()));
        }
        Ok(())
    }

    pub fn in_closure(&self, x: &[f64]) -> bool {
        match &self.kind {
            DomainKind::Intervals(v) => v.iter().any(|&(a, b)| a <= x[0] && x[0] <= b),
            DomainKind::HalfSpace { dim } => x[dim - 1] >= 0.0,
        }
    }

    pub fn is_boundary(&self, x: &[f64]) -> bool {
        match &self.kind {
            DomainKind::Intervals(v) => v.iter().any(|&(a, b)| x[0] == a || x[0] == b),
            DomainKind::HalfSpace { dim } => x[dim - 1] == 0.0,
        }
    }

    /// `d(x) = dist(x, ∂Ω)` for `x ∈ closure(Ω)`.
    pub fn distance_to_boundary(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        match &self.kind {
            DomainKind::Intervals(v) => {
                let y = x[0];
                for &(a, b) in v {
                    if a <= y && y <= b {
                        return Ok((y - a).min(b - y));
                    }
                }
                domain(format!("point {y} lies outside the closure of the domain"))
            }
            DomainKind::HalfSpace { dim } => {
                let h = x[dim - 1];
                if h < 0.0 {
                    return domain(format!("point with last coordinate {h} lies outside the half-space"));
                }
                Ok(h)
            }
        }
    }

    /// 1-D distance with out-of-domain points mapped to 0.
    pub fn dist1(&self, y: f64) -> f64 {
        self.distance_to_boundary(&[y]).unwrap_or(0.0)
    }

    pub fn ball_intersect(&self, z: &[f64], r: f64) -> Result<TruncatedBall> {
        self.check_point(z)?;
        if !(r > 0.0) {
            return domain(format!("ball radius must be positive, got {r}"));
        }
        if !self.in_closure(z) {
            return domain("ball centre lies outside the closure of the domain");
        }
        let pieces = match &self.kind {
            DomainKind::Intervals(v) => {
                let (lo, hi) = (z[0] - r, z[0] + r);
                BallPieces::Intervals(
                    v.iter()
                        .filter_map(|&(a, b)| {
                            let (l, u) = (a.max(lo), b.min(hi));
                            (l < u).then_some((l, u))
                        })
                        .collect(),
                )
            }
            DomainKind::HalfSpace { dim } => BallPieces::Cap { height: z[dim - 1] },
        };
        Ok(TruncatedBall { center: z.to_vec(), radius: r, pieces })
    }

    fn nearest_boundary(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            DomainKind::Intervals(_) => {
                let b = self
                    .boundary_points()
                    .into_iter()
                    .min_by(|p, q| (p - x[0]).abs().partial_cmp(&(q - x[0]).abs()).unwrap())
                    .unwrap_or(x[0]);
                vec![b]
            }
            DomainKind::HalfSpace { dim } => {
                let mut y = x.to_vec();
                y[dim - 1] = 0.0;
                y
            }
        }
    }

    /// Centres `z̄_i` with `B_Ω(z,r) ⊆ ∪ B_Ω(z̄_i, δr)`, all in `B_Ω(z,2r)`.
    ///
    /// A `(δr/2)`-net of the ball is laid down, exterior net points are moved
    /// to their nearest boundary point, and redundant centres are pruned (1-D).
    pub fn cover_centers(&self, z: &[f64], r: f64, delta: f64) -> Result<Vec<Vec<f64>>> {
        if !(delta > 0.0 && delta < 1.0) {
            return domain(format!("delta must lie in (0,1), got {delta}"));
        }
        let ball = self.ball_intersect(z, r)?;
        if ball.is_empty() {
            return Ok(Vec::new());
        }
        let n = self.dim();
        let step = delta * r / (n as f64).sqrt();
        let per_axis = (2.0 * r / step).ceil() as usize;
        let mut centers: Vec<Vec<f64>> = Vec::new();
        let mut idx = vec![0usize; n];
        'outer: loop {
            let c: Vec<f64> = (0..n).map(|k| z[k] - r + step * (idx[k] as f64 + 0.5)).collect();
            let dz = c.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if dz <= r + 0.5 * delta * r {
                let c = if self.in_closure(&c) { c } else { self.nearest_boundary(&c) };
                let dist_b = c.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                if dist_b <= 2.0 * r && !centers.contains(&c) {
                    centers.push(c);
                }
            }
            for k in 0..n {
                idx[k] += 1;
                if idx[k] < per_axis {
                    continue 'outer;
                }
                idx[k] = 0;
            }
            break;
        }
        if let BallPieces::Intervals(pieces) = &ball.pieces {
            let rad = delta * r;
            let covers = |cs: &[Vec<f64>]| {
                let mut iv: Vec<(f64, f64)> = cs.iter().map(|c| (c[0] - rad, c[0] + rad)).collect();
                iv.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                pieces.iter().all(|&(l, u)| {
                    let mut reach = l;
                    for &(a, b) in &iv {
                        if a <= reach && b > reach {
                            reach = b;
                        }
                    }
                    reach >= u
                })
            };
            let mut i = 0;
            while i < centers.len() {
                let mut trial = centers.clone();
                trial.remove(i);
                if !trial.is_empty() && covers(&trial) {
                    centers = trial;
                } else {
                    i += 1;
                }
            }
        }
        Ok(centers)
    }

    /// Bounded pieces of the search region, clipped to the truncation radius.
    pub fn search_pieces(&self) -> Result<Vec<(f64, f64)>> {
        let r = self.truncation_radius;
        Ok(self
            .components()?
            .iter()
            .filter_map(|&(a, b)| {
                let (l, u) = (a.max(-r), b.min(r));
                (l < u).then_some((l, u))
            })
            .collect())
    }
}
