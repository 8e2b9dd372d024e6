//! Parametric planar domains inside the box `[0, 2]²`.
//!
//! Each domain provides a non-negative field `c(x, y)` that vanishes on and
//! outside the boundary and is positive inside, together with its analytic
//! first and second derivatives. Inside the domain `c` is a polynomial:
//!
//! * ellipse: `j(x, y) = 1 − (u/a)² − (v/b)²` in the rotated frame,
//! * rectangle: `(x − x_min)(x_max − x)(y − y_min)(y_max − y)`,
//! * triangle: the product of the three signed distances to the sides, each
//!   oriented to be positive on the interior side.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jet::ScalarJet;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("invalid domain parameters: {0}")]
    InvalidParameters(String),
    #[error("derivative order {0} is not supported")]
    UnsupportedOrder(usize),
    #[error("boundary discretization needs at least 3 points, got {0}")]
    TooFewPoints(usize),
}

/// Domain family, with the numeric type codes used in dataset manifests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Ellipse,
    Rectangle,
    Triangle,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Ellipse, Shape::Rectangle, Shape::Triangle];

    pub fn code(self) -> u8 {
        match self {
            Shape::Ellipse => 0,
            Shape::Rectangle => 1,
            Shape::Triangle => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.code() == code)
    }

    pub fn name(self) -> &'static str {
        match self {
            Shape::Ellipse => "ellipse",
            Shape::Rectangle => "rectangle",
            Shape::Triangle => "triangle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum DomainSpec {
    /// Semi-axes `semi_major` along the tilted x-axis and `semi_minor`
    /// across it; `tilt` in radians.
    Ellipse {
        center: [f64; 2],
        semi_major: f64,
        semi_minor: f64,
        tilt: f64,
    },
    Rectangle {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
    },
    /// Isosceles triangle with apex `apex`, horizontal base `height` below it
    /// and base length `base`, centered under the apex.
    IsoTriangle {
        apex: [f64; 2],
        height: f64,
        base: f64,
    },
}

fn affine(value: f64, gx: f64, gy: f64, order: usize) -> ScalarJet {
    ScalarJet {
        value,
        grad: vec![gx, gy],
        hess: if order >= 2 { vec![0.0; 4] } else { Vec::new() },
    }
}

/// Signed distances to the sides of a triangle, each positive on the side of
/// the opposite vertex. Returns `(distance, unit inward normal)` per side.
fn triangle_sides(v: &[[f64; 2]; 3], x: f64, y: f64) -> [(f64, [f64; 2]); 3] {
    let side = |a: [f64; 2], b: [f64; 2], opp: [f64; 2]| {
        let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
        let len = (ex * ex + ey * ey).sqrt();
        let mut n = [-ey / len, ex / len];
        if n[0] * (opp[0] - a[0]) + n[1] * (opp[1] - a[1]) < 0.0 {
            n = [-n[0], -n[1]];
        }
        (n[0] * (x - a[0]) + n[1] * (y - a[1]), n)
    };
    [
        side(v[0], v[1], v[2]),
        side(v[1], v[2], v[0]),
        side(v[2], v[0], v[1]),
    ]
}

/// `c` for an arbitrary (non-degenerate) triangle; independent of the vertex
/// order.
pub fn triangle_c_field(vertices: &[[f64; 2]; 3], x: f64, y: f64, order: usize) -> ScalarJet {
    let sides = triangle_sides(vertices, x, y);
    if sides.iter().any(|(d, _)| !(*d > 0.0)) {
        return ScalarJet::constant(0.0, 2).truncated(order);
    }
    let mut jet = affine(sides[0].0, sides[0].1[0], sides[0].1[1], order);
    for (d, n) in &sides[1..] {
        jet = jet.product(&affine(*d, n[0], n[1], order));
    }
    jet
}

impl DomainSpec {
    pub fn ellipse(
        center: [f64; 2],
        semi_major: f64,
        semi_minor: f64,
        tilt: f64,
    ) -> Result<Self, GeometryError> {
        if !(semi_major > 0.0 && semi_minor > 0.0) || !tilt.is_finite() {
            return Err(GeometryError::InvalidParameters(format!(
                "ellipse axes ({semi_major}, {semi_minor}) must be positive"
            )));
        }
        Ok(DomainSpec::Ellipse {
            center,
            semi_major,
            semi_minor,
            tilt,
        })
    }

    pub fn rectangle(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, GeometryError> {
        if !(x_min < x_max && y_min < y_max) {
            return Err(GeometryError::InvalidParameters(format!(
                "rectangle [{x_min}, {x_max}] x [{y_min}, {y_max}] is empty"
            )));
        }
        Ok(DomainSpec::Rectangle {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    /// Rectangle from four `U(0, 1)` draws: sorted ascending to
    /// `x₀ ≤ y₀ ≤ x₁ ≤ y₁`, then `[x₀, x₁ + 1] × [y₀, y₁ + 1]`.
    pub fn rectangle_from_draws(mut draws: [f64; 4]) -> Result<Self, GeometryError> {
        draws.sort_by(f64::total_cmp);
        let [x0, y0, x1, y1] = draws;
        Self::rectangle(x0, y0, x1 + 1.0, y1 + 1.0)
    }

    pub fn iso_triangle(apex: [f64; 2], height: f64, base: f64) -> Result<Self, GeometryError> {
        if !(height > 0.0 && base > 0.0) {
            return Err(GeometryError::InvalidParameters(format!(
                "triangle height {height} and base {base} must be positive"
            )));
        }
        Ok(DomainSpec::IsoTriangle { apex, height, base })
    }

    /// Random domain of the given family:
    ///
    /// * ellipse: center `U(0.8, 1.2)²`, semi-axes `U(0.3, 0.8)`, tilt `U(0, 2π)`;
    /// * rectangle: see [`DomainSpec::rectangle_from_draws`];
    /// * triangle: apex `(1, U(1.5, 2))`, height `U(0.9, 1.5)`, base `U(1.2, 2)`.
    pub fn sample<R: Rng + ?Sized>(shape: Shape, rng: &mut R) -> Self {
        match shape {
            Shape::Ellipse => {
                let xc = rng.random_range(0.8..1.2);
                let yc = rng.random_range(0.8..1.2);
                let a = rng.random_range(0.3..0.8);
                let b = rng.random_range(0.3..0.8);
                let t = rng.random_range(0.0..2.0 * PI);
                Self::ellipse([xc, yc], a, b, t).expect("positive axes")
            }
            Shape::Rectangle => {
                let d = [
                    rng.random::<f64>(),
                    rng.random::<f64>(),
                    rng.random::<f64>(),
                    rng.random::<f64>(),
                ];
                Self::rectangle_from_draws(d).expect("non-empty rectangle")
            }
            Shape::Triangle => {
                let yv = rng.random_range(1.5..2.0);
                let h = rng.random_range(0.9..1.5);
                let b = rng.random_range(1.2..2.0);
                Self::iso_triangle([1.0, yv], h, b).expect("positive triangle")
            }
        }
    }

    pub fn shape(&self) -> Shape {
        match self {
            DomainSpec::Ellipse { .. } => Shape::Ellipse,
            DomainSpec::Rectangle { .. } => Shape::Rectangle,
            DomainSpec::IsoTriangle { .. } => Shape::Triangle,
        }
    }

    /// Type code followed by the parametric description.
    pub fn to_params(&self) -> Vec<f64> {
        match *self {
            DomainSpec::Ellipse {
                center,
                semi_major,
                semi_minor,
                tilt,
            } => vec![0.0, center[0], center[1], semi_major, semi_minor, tilt],
            DomainSpec::Rectangle {
                x_min,
                y_min,
                x_max,
                y_max,
            } => vec![1.0, x_min, y_min, x_max, y_max],
            DomainSpec::IsoTriangle { apex, height, base } => {
                vec![2.0, apex[0], apex[1], height, base]
            }
        }
    }

    pub fn from_params(p: &[f64]) -> Result<Self, GeometryError> {
        let bad = || GeometryError::InvalidParameters(format!("cannot decode {p:?}"));
        match p.first().map(|c| *c as u8).and_then(Shape::from_code) {
            Some(Shape::Ellipse) if p.len() == 6 => Self::ellipse([p[1], p[2]], p[3], p[4], p[5]),
            Some(Shape::Rectangle) if p.len() == 5 => Self::rectangle(p[1], p[2], p[3], p[4]),
            Some(Shape::Triangle) if p.len() == 5 => Self::iso_triangle([p[1], p[2]], p[3], p[4]),
            _ => Err(bad()),
        }
    }

    /// Polygon vertices in counterclockwise order (empty for ellipses).
    pub fn vertices(&self) -> Vec<[f64; 2]> {
        match *self {
            DomainSpec::Ellipse { .. } => Vec::new(),
            DomainSpec::Rectangle {
                x_min,
                y_min,
                x_max,
                y_max,
            } => vec![[x_min, y_min], [x_max, y_min], [x_max, y_max], [x_min, y_max]],
            DomainSpec::IsoTriangle { apex, height, base } => {
                let yb = apex[1] - height;
                vec![
                    [apex[0] - 0.5 * base, yb],
                    [apex[0] + 0.5 * base, yb],
                    apex,
                ]
            }
        }
    }

    fn triangle_vertices(&self) -> Option<[[f64; 2]; 3]> {
        match self {
            DomainSpec::IsoTriangle { .. } => {
                let v = self.vertices();
                Some([v[0], v[1], v[2]])
            }
            _ => None,
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            DomainSpec::Ellipse {
                semi_major,
                semi_minor,
                ..
            } => PI * semi_major * semi_minor,
            DomainSpec::Rectangle {
                x_min,
                y_min,
                x_max,
                y_max,
            } => (x_max - x_min) * (y_max - y_min),
            DomainSpec::IsoTriangle { height, base, .. } => 0.5 * height * base,
        }
    }

    pub fn centroid(&self) -> [f64; 2] {
        match *self {
            DomainSpec::Ellipse { center, .. } => center,
            DomainSpec::Rectangle {
                x_min,
                y_min,
                x_max,
                y_max,
            } => [0.5 * (x_min + x_max), 0.5 * (y_min + y_max)],
            DomainSpec::IsoTriangle { .. } => {
                let v = self.vertices();
                [
                    (v[0][0] + v[1][0] + v[2][0]) / 3.0,
                    (v[0][1] + v[1][1] + v[2][1]) / 3.0,
                ]
            }
        }
    }

    fn ellipse_frame(&self, x: f64, y: f64) -> Option<(f64, f64, f64, f64, f64, f64)> {
        match *self {
            DomainSpec::Ellipse {
                center,
                semi_major,
                semi_minor,
                tilt,
            } => {
                let (s, c) = tilt.sin_cos();
                let (dx, dy) = (x - center[0], y - center[1]);
                Some((dx * c + dy * s, dy * c - dx * s, c, s, semi_major, semi_minor))
            }
            _ => None,
        }
    }

    /// A function positive exactly inside the domain: `j` for ellipses, the
    /// smallest interior-oriented side distance for polygons.
    pub fn level(&self, x: f64, y: f64) -> f64 {
        match *self {
            DomainSpec::Ellipse { .. } => {
                let (u, v, _, _, a, b) = self.ellipse_frame(x, y).expect("ellipse");
                1.0 - (u / a).powi(2) - (v / b).powi(2)
            }
            DomainSpec::Rectangle {
                x_min,
                y_min,
                x_max,
                y_max,
            } => (x - x_min).min(x_max - x).min(y - y_min).min(y_max - y),
            DomainSpec::IsoTriangle { .. } => {
                let v = self.triangle_vertices().expect("triangle");
                triangle_sides(&v, x, y)
                    .iter()
                    .map(|(d, _)| *d)
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// Strict interior test; boundary points are outside.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.level(x, y) > 0.0
    }

    /// `c` with derivatives up to `order` (0, 1 or 2) at `(x, y)`. Zero, with
    /// zero derivatives, outside the domain.
    pub fn c_field(&self, x: f64, y: f64, order: usize) -> Result<ScalarJet, GeometryError> {
        if order > 2 {
            return Err(GeometryError::UnsupportedOrder(order));
        }
        if !self.contains(x, y) {
            return Ok(ScalarJet::constant(0.0, 2).truncated(order));
        }
        let jet = match *self {
            DomainSpec::Ellipse { .. } => {
                let (u, v, c, s, a, b) = self.ellipse_frame(x, y).expect("ellipse");
                let (ia, ib) = (1.0 / (a * a), 1.0 / (b * b));
                let gu = [c, s];
                let gv = [-s, c];
                let value = 1.0 - u * u * ia - v * v * ib;
                let grad = vec![
                    -2.0 * (u * ia * gu[0] + v * ib * gv[0]),
                    -2.0 * (u * ia * gu[1] + v * ib * gv[1]),
                ];
                let hess = if order >= 2 {
                    let mut h = vec![0.0; 4];
                    for i in 0..2 {
                        for j in 0..2 {
                            h[i * 2 + j] = -2.0 * (ia * (gu[i] * gu[j]) + ib * (gv[i] * gv[j]));
                        }
                    }
                    h
                } else {
                    Vec::new()
                };
                ScalarJet { value, grad, hess }
            }
            DomainSpec::Rectangle {
                x_min,
                y_min,
                x_max,
                y_max,
            } => affine(x - x_min, 1.0, 0.0, order)
                .product(&affine(x_max - x, -1.0, 0.0, order))
                .product(&affine(y - y_min, 0.0, 1.0, order))
                .product(&affine(y_max - y, 0.0, -1.0, order)),
            DomainSpec::IsoTriangle { .. } => {
                triangle_c_field(&self.triangle_vertices().expect("triangle"), x, y, order)
            }
        };
        Ok(jet.truncated(order))
    }

    /// `count` boundary points in counterclockwise order. Ellipses are
    /// sampled uniformly in the angle parameter, starting where the ray from
    /// the center in the `+x` direction meets the boundary;
    /// polygons uniformly in arc length starting at the first vertex.
    pub fn boundary_points(&self, count: usize) -> Result<Vec<[f64; 2]>, GeometryError> {
        if count < 3 {
            return Err(GeometryError::TooFewPoints(count));
        }
        match *self {
            DomainSpec::Ellipse {
                center,
                semi_major,
                semi_minor,
                tilt,
            } => {
                let (s, c) = tilt.sin_cos();
                // a tilt of θ + π gives the same polyline as θ
                let t0 = (-semi_major * s).atan2(semi_minor * c);
                Ok((0..count)
                    .map(|k| {
                        let t = t0 + 2.0 * PI * k as f64 / count as f64;
                        let (u, v) = (semi_major * t.cos(), semi_minor * t.sin());
                        [center[0] + u * c - v * s, center[1] + u * s + v * c]
                    })
                    .collect())
            }
            _ => {
                let verts = self.vertices();
                let n = verts.len();
                let lens: Vec<f64> = (0..n)
                    .map(|i| {
                        let (a, b) = (verts[i], verts[(i + 1) % n]);
                        ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
                    })
                    .collect();
                let perimeter: f64 = lens.iter().sum();
                let mut out = Vec::with_capacity(count);
                let (mut edge, mut edge_start) = (0usize, 0.0f64);
                for k in 0..count {
                    let s = perimeter * k as f64 / count as f64;
                    while edge + 1 < n && s >= edge_start + lens[edge] {
                        edge_start += lens[edge];
                        edge += 1;
                    }
                    let t = ((s - edge_start) / lens[edge]).clamp(0.0, 1.0);
                    let (a, b) = (verts[edge], verts[(edge + 1) % n]);
                    out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                }
                Ok(out)
            }
        }
    }

    /// Distance `s ∈ (0, max_dist]` from an interior point along `dir` (a unit
    /// vector) to the boundary, or `None` if the segment stays inside.
    pub fn boundary_distance(&self, from: [f64; 2], dir: [f64; 2], max_dist: f64) -> Option<f64> {
        let at = |s: f64| self.contains(from[0] + s * dir[0], from[1] + s * dir[1]);
        if at(max_dist) {
            return None;
        }
        let (mut inside, mut outside) = (0.0, max_dist);
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if mid <= inside || mid >= outside {
                break;
            }
            if at(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Some(0.5 * (inside + outside))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_domains(seed: u64, per_shape: usize) -> Vec<DomainSpec> {
        let mut g = rng::rng_from_seed(seed);
        Shape::ALL
            .into_iter()
            .flat_map(|s| (0..per_shape).map(move |_| s))
            .map(|s| DomainSpec::sample(s, &mut g))
            .collect()
    }

    #[test]
    fn rectangle_rule_by_hand() {
        let r = DomainSpec::rectangle_from_draws([0.3, 0.1, 0.4, 0.2]).unwrap();
        assert_eq!(r, DomainSpec::rectangle(0.1, 0.2, 1.3, 1.4).unwrap());
        assert!((r.area() - 1.44).abs() < 1e-14);
    }

    #[test]
    fn triangle_vertices_by_hand() {
        let t = DomainSpec::iso_triangle([1.0, 1.8], 1.2, 1.6).unwrap();
        let v = t.vertices();
        assert!((v[0][0] - 0.2).abs() < 1e-15 && (v[0][1] - 0.6).abs() < 1e-15);
        assert!((v[1][0] - 1.8).abs() < 1e-15 && (v[1][1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn ellipse_centers_in_range() {
        let mut g = rng::rng_from_seed(3);
        for _ in 0..10_000 {
            match DomainSpec::sample(Shape::Ellipse, &mut g) {
                DomainSpec::Ellipse {
                    center,
                    semi_major,
                    semi_minor,
                    tilt,
                } => {
                    assert!((0.8..=1.2).contains(&center[0]) && (0.8..=1.2).contains(&center[1]));
                    assert!((0.3..0.8).contains(&semi_major) && (0.3..0.8).contains(&semi_minor));
                    assert!((0.0..2.0 * PI).contains(&tilt));
                }
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn sampled_domains_stay_in_box() {
        for d in random_domains(8, 200) {
            for p in d.boundary_points(100).unwrap() {
                assert!((-1e-12..=2.0 + 1e-12).contains(&p[0]), "{d:?}");
                assert!((-1e-12..=2.0 + 1e-12).contains(&p[1]), "{d:?}");
            }
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(DomainSpec::rectangle(1.0, 0.0, 1.0, 1.0).is_err());
        assert!(DomainSpec::ellipse([1.0, 1.0], 0.0, 0.5, 0.0).is_err());
        assert!(DomainSpec::iso_triangle([1.0, 1.8], -1.0, 1.0).is_err());
        let d = DomainSpec::rectangle(0.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(
            d.c_field(0.5, 0.5, 3).unwrap_err(),
            GeometryError::UnsupportedOrder(3)
        );
        assert!(d.boundary_points(2).is_err());
    }

    #[test]
    fn rectangle_spacing_is_uniform_in_arc_length() {
        let r = DomainSpec::rectangle(0.1, 0.2, 1.3, 1.9).unwrap();
        let pts = r.boundary_points(100).unwrap();
        let perimeter = 2.0 * (1.2 + 1.7);
        let arc = |p: [f64; 2]| -> f64 {
            // position along the CCW boundary from (x_min, y_min)
            if (p[1] - 0.2).abs() < 1e-12 {
                p[0] - 0.1
            } else if (p[0] - 1.3).abs() < 1e-12 {
                1.2 + p[1] - 0.2
            } else if (p[1] - 1.9).abs() < 1e-12 {
                1.2 + 1.7 + 1.3 - p[0]
            } else {
                2.0 * 1.2 + 1.7 + 1.9 - p[1]
            }
        };
        assert_eq!(pts[0], [0.1, 0.2]);
        for (k, p) in pts.iter().enumerate() {
            assert!((arc(*p) - perimeter * k as f64 / 100.0).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_points_at_radius() {
        let c = DomainSpec::ellipse([1.0, 1.0], 0.6, 0.6, 0.4).unwrap();
        for p in c.boundary_points(100).unwrap() {
            let r = ((p[0] - 1.0).powi(2) + (p[1] - 1.0).powi(2)).sqrt();
            assert!((r - 0.6).abs() <= 1e-14);
        }
    }

    #[test]
    fn tilted_ellipse_points_on_level_set() {
        let e = DomainSpec::ellipse([1.0, 1.0], 0.5, 0.3, PI / 6.0).unwrap();
        for p in e.boundary_points(100).unwrap() {
            assert!(e.level(p[0], p[1]).abs() <= 1e-12);
        }
    }

    #[test]
    fn boundary_points_have_zero_c() {
        for d in random_domains(17, 20) {
            for p in d.boundary_points(100).unwrap() {
                assert!(d.c_field(p[0], p[1], 0).unwrap().value.abs() <= 1e-12, "{d:?}");
            }
            let c = d.centroid();
            assert!(d.c_field(c[0], c[1], 0).unwrap().value > 0.0);
        }
    }

    #[test]
    fn ellipse_polyline_starts_right_of_center() {
        for tilt in [0.0, 0.7, 2.0, 4.1, 5.9] {
            let e = DomainSpec::ellipse([1.1, 0.9], 0.6, 0.35, tilt).unwrap();
            let pts = e.boundary_points(100).unwrap();
            assert!((pts[0][1] - 0.9).abs() < 1e-12 && pts[0][0] > 1.1);
            let flipped = DomainSpec::ellipse([1.1, 0.9], 0.6, 0.35, tilt + PI).unwrap();
            for (a, b) in pts.iter().zip(flipped.boundary_points(100).unwrap()) {
                assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn c_field_spot_values() {
        let e = DomainSpec::ellipse([0.9, 1.1], 0.5, 0.3, 1.0).unwrap();
        assert_eq!(e.c_field(0.9, 1.1, 0).unwrap().value, 1.0);
        let r = DomainSpec::rectangle(0.25, 0.5, 1.75, 1.5).unwrap();
        assert_eq!(r.c_field(0.25, 0.5, 0).unwrap().value, 0.0);
        let mid = r.c_field(1.0, 1.0, 0).unwrap().value;
        let expected = (0.75f64 * 0.75) * (0.5 * 0.5);
        assert!((mid - expected).abs() < 1e-15);
        assert!(!r.contains(-5.0, -5.0));
        assert!(r.contains(1.0, 1.0));
    }

    #[test]
    fn c_field_derivatives_match_finite_differences() {
        let mut g = rng::rng_from_seed(41);
        let h = 1e-5;
        for d in random_domains(5, 4) {
            let mut checked = 0;
            while checked < 100 / 4 {
                let (x, y) = (g.random_range(0.0..2.0), g.random_range(0.0..2.0));
                // keep the stencil inside the smooth branch
                if d.level(x, y) < 0.05 {
                    continue;
                }
                checked += 1;
                let jet = d.c_field(x, y, 2).unwrap();
                let f = |dx: f64, dy: f64| d.c_field(x + dx, y + dy, 0).unwrap().value;
                let gx = (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h);
                let gy = (f(0.0, h) - f(0.0, -h)) / (2.0 * h);
                let scale = jet.grad.iter().map(|v| v.abs()).fold(1e-3, f64::max);
                assert!((gx - jet.grad[0]).abs() <= 1e-6 * scale, "{d:?}");
                assert!((gy - jet.grad[1]).abs() <= 1e-6 * scale, "{d:?}");
                let hxx = (f(h, 0.0) - 2.0 * f(0.0, 0.0) + f(-h, 0.0)) / (h * h);
                let hyy = (f(0.0, h) - 2.0 * f(0.0, 0.0) + f(0.0, -h)) / (h * h);
                let hxy = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
                let hs = jet.hess.iter().map(|v| v.abs()).fold(1e-2, f64::max);
                for (fd, an) in [(hxx, jet.hess[0]), (hyy, jet.hess[3]), (hxy, jet.hess[1])] {
                    assert!((fd - an).abs() <= 1e-4 * hs, "{d:?}: {fd} vs {an}");
                }
                assert_eq!(jet.hess[1], jet.hess[2]);
            }
        }
    }

    /// Ray-casting point-in-polygon.
    fn winding_contains(verts: &[[f64; 2]], x: f64, y: f64) -> bool {
        let mut inside = false;
        let n = verts.len();
        for i in 0..n {
            let (a, b) = (verts[i], verts[(i + 1) % n]);
            if (a[1] > y) != (b[1] > y) {
                let xi = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if x < xi {
                    inside = !inside;
                }
            }
        }
        inside
    }

    #[test]
    fn contains_agrees_with_brute_force() {
        let mut g = rng::rng_from_seed(12);
        let domains = random_domains(77, 4);
        for d in domains.iter().take(10) {
            for _ in 0..100_000 {
                let (x, y) = (g.random_range(0.0..2.0), g.random_range(0.0..2.0));
                let expected = match *d {
                    DomainSpec::Ellipse {
                        center,
                        semi_major,
                        semi_minor,
                        tilt,
                    } => {
                        // rotate the point back by −tilt
                        let (dx, dy) = (x - center[0], y - center[1]);
                        let (u, v) = (
                            dx * (-tilt).cos() - dy * (-tilt).sin(),
                            dx * (-tilt).sin() + dy * (-tilt).cos(),
                        );
                        (u / semi_major).powi(2) + (v / semi_minor).powi(2) < 1.0
                    }
                    _ => winding_contains(&d.vertices(), x, y),
                };
                assert_eq!(d.contains(x, y), expected, "{d:?} at ({x}, {y})");
            }
        }
    }

    #[test]
    fn c_positive_iff_contains() {
        let mut g = rng::rng_from_seed(13);
        for d in random_domains(78, 2) {
            for _ in 0..100_000 {
                let (x, y) = (g.random_range(-0.2..2.2), g.random_range(-0.2..2.2));
                let c = d.c_field(x, y, 0).unwrap().value;
                assert!(c >= 0.0);
                assert_eq!(c > 0.0, d.contains(x, y));
            }
        }
    }

    #[test]
    fn boundary_distance_finds_edge() {
        let r = DomainSpec::rectangle(0.5, 0.5, 1.5, 1.5).unwrap();
        let s = r.boundary_distance([1.4, 1.0], [1.0, 0.0], 0.3).unwrap();
        assert!((s - 0.1).abs() < 1e-14);
        assert!(r.boundary_distance([1.0, 1.0], [1.0, 0.0], 0.3).is_none());
    }

    #[test]
    fn params_round_trip() {
        for d in random_domains(3, 3) {
            assert_eq!(DomainSpec::from_params(&d.to_params()).unwrap(), d);
        }
        assert!(DomainSpec::from_params(&[7.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn triangle_c_is_invariant_to_vertex_order(
            ax in 0.0f64..2.0, ay in 0.0f64..2.0, bx in 0.0f64..2.0, by in 0.0f64..2.0,
            cx in 0.0f64..2.0, cy in 0.0f64..2.0, px in 0.0f64..2.0, py in 0.0f64..2.0,
        ) {
            let v = [[ax, ay], [bx, by], [cx, cy]];
            let area2 = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
            prop_assume!(area2.abs() > 1e-3);
            let base = triangle_c_field(&v, px, py, 0).value;
            for perm in [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                let w = [v[perm[0]], v[perm[1]], v[perm[2]]];
                let c = triangle_c_field(&w, px, py, 0).value;
                prop_assert!((c - base).abs() <= 1e-14);
            }
        }
    }
}
