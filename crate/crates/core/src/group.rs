//! Algebra and metric primitives of the Heisenberg group `H^n`.
//!
//! Points are stored as `z = [x_1..x_n, y_1..y_n]` plus the vertical
//! coordinate `t`. The product is
//!
//! ```text
//! (z1, t1) * (z2, t2) = (z1 + z2, t1 + t2 + 1/2 Im <z1, conj z2>)
//! ```
//!
//! with `Im(z1 conj z2)` summed over the complex coordinates
//! `z_l = x_l + i y_l`. Everything else (left-invariant frame, horizontality,
//! twisted combinations) is derived from this product so the conventions stay
//! consistent with the geodesic formulas in [`crate::geodesic`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::dot;

/// An element `g = (z, t)` of `H^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PointDoc", into = "PointDoc")]
pub struct GroupPoint {
    z: Vec<f64>,
    t: f64,
}

/// Wire form: `{"n": n, "coords": [x_1..x_n, y_1..y_n, t]}`.
#[derive(Serialize, Deserialize)]
struct PointDoc {
    n: usize,
    coords: Vec<f64>,
}

impl TryFrom<PointDoc> for GroupPoint {
    type Error = Error;

    fn try_from(doc: PointDoc) -> Result<Self> {
        if doc.coords.len() != 2 * doc.n + 1 {
            return Err(Error::DimensionMismatch {
                expected: 2 * doc.n + 1,
                got: doc.coords.len(),
            });
        }
        GroupPoint::from_flat(&doc.coords)
    }
}

impl From<GroupPoint> for PointDoc {
    fn from(g: GroupPoint) -> Self {
        PointDoc {
            n: g.n(),
            coords: g.to_flat(),
        }
    }
}

impl GroupPoint {
    pub fn new(z: Vec<f64>, t: f64) -> Result<Self> {
        if z.is_empty() || z.len() % 2 != 0 {
            return Err(Error::DimensionMismatch {
                expected: 2 * (z.len() / 2).max(1),
                got: z.len(),
            });
        }
        if !t.is_finite() || z.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { z, t })
    }

    /// Point of `H^1`.
    pub fn h1(x: f64, y: f64, t: f64) -> Self {
        Self::new(vec![x, y], t).expect("finite H^1 coordinates")
    }

    pub fn identity(n: usize) -> Self {
        Self {
            z: vec![0.0; 2 * n],
            t: 0.0,
        }
    }

    /// Builds a point from `[x_1..x_n, y_1..y_n, t]`.
    pub fn from_flat(coords: &[f64]) -> Result<Self> {
        if coords.len() < 3 || coords.len() % 2 == 0 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                got: coords.len(),
            });
        }
        let (z, t) = coords.split_at(coords.len() - 1);
        Self::new(z.to_vec(), t[0])
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.z.clone();
        v.push(self.t);
        v
    }

    pub fn n(&self) -> usize {
        self.z.len() / 2
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn x(&self, l: usize) -> f64 {
        self.z[l]
    }

    pub fn y(&self, l: usize) -> f64 {
        self.z[self.n() + l]
    }

    pub fn z_norm(&self) -> f64 {
        dot(&self.z, &self.z).sqrt()
    }

    pub fn is_identity(&self) -> bool {
        self.t == 0.0 && self.z.iter().all(|&c| c == 0.0)
    }

    fn check_same_n(&self, other: &GroupPoint) -> Result<()> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: other.n(),
            });
        }
        Ok(())
    }
}

/// `Σ_l Im(z1_l conj z2_l) = Σ_l (y1_l x2_l - x1_l y2_l)`.
pub fn symplectic(z1: &[f64], z2: &[f64]) -> f64 {
    let n = z1.len() / 2;
    (0..n)
        .map(|l| z1[n + l] * z2[l] - z1[l] * z2[n + l])
        .sum()
}

pub fn multiply(g1: &GroupPoint, g2: &GroupPoint) -> GroupPoint {
    assert_eq!(g1.n(), g2.n(), "multiply: points of different H^n");
    let z = g1.z.iter().zip(&g2.z).map(|(a, b)| a + b).collect();
    let t = g1.t + g2.t + 0.5 * symplectic(&g1.z, &g2.z);
    GroupPoint { z, t }
}

pub fn inverse(g: &GroupPoint) -> GroupPoint {
    GroupPoint {
        z: g.z.iter().map(|c| -c).collect(),
        t: -g.t,
    }
}

pub fn dilate(lambda: f64, g: &GroupPoint) -> Result<GroupPoint> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::NonPositiveDilation(lambda));
    }
    Ok(dilate_unchecked(lambda, g))
}

/// `δ_λ` without the positivity check; `λ = 0` collapses to the identity.
pub(crate) fn dilate_unchecked(lambda: f64, g: &GroupPoint) -> GroupPoint {
    GroupPoint {
        z: g.z.iter().map(|c| lambda * c).collect(),
        t: lambda * lambda * g.t,
    }
}

/// Korányi gauge `((|z|^2)^2 + 16 t^2)^{1/4}`.
pub fn koranyi_gauge(g: &GroupPoint) -> f64 {
    let z2 = dot(&g.z, &g.z);
    (z2 * z2 + 16.0 * g.t * g.t).sqrt().sqrt()
}

/// `d(g, g̃) = ‖g̃^{-1} * g‖`.
pub fn koranyi_distance(g: &GroupPoint, g_tilde: &GroupPoint) -> f64 {
    koranyi_gauge(&multiply(&inverse(g_tilde), g))
}

/// Whether `g` lies in the horizontal plane through `g0`, i.e.
/// `g0^{-1} * g` has zero vertical part.
pub fn is_horizontal(g0: &GroupPoint, g: &GroupPoint, tol: f64) -> bool {
    horizontality_defect(g0, g).abs() <= tol
}

/// `t - t0 + 1/2 Σ (x0_l y_l - x_l y0_l)`, the vertical part of `g0^{-1} * g`.
pub fn horizontality_defect(g0: &GroupPoint, g: &GroupPoint) -> f64 {
    g.t - g0.t + 0.5 * symplectic(&g.z, &g0.z)
}

/// Twisted convex combination `g * δ_λ(g^{-1} * g')`.
pub fn twisted_combination(g: &GroupPoint, g_prime: &GroupPoint, lambda: f64) -> Result<GroupPoint> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::OutOfRange {
            name: "lambda",
            value: lambda,
        });
    }
    g.check_same_n(g_prime)?;
    let rel = multiply(&inverse(g), g_prime);
    Ok(multiply(g, &dilate_unchecked(lambda, &rel)))
}

/// Coefficients of the left-invariant frame at a point, each a
/// `(2n+1)`-vector in the coordinate basis `(∂x.., ∂y.., ∂t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAt {
    pub base: GroupPoint,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    pub t: Vec<f64>,
}

/// Left translates of the coordinate directions under the product above:
/// `X_l = ∂x_l + (y_l/2) ∂t`, `Y_l = ∂y_l - (x_l/2) ∂t`, `T = ∂t`.
pub fn frame_at(g: &GroupPoint) -> FrameAt {
    let n = g.n();
    let dim = 2 * n + 1;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for l in 0..n {
        let mut xl = vec![0.0; dim];
        xl[l] = 1.0;
        xl[2 * n] = 0.5 * g.y(l);
        let mut yl = vec![0.0; dim];
        yl[n + l] = 1.0;
        yl[2 * n] = -0.5 * g.x(l);
        xs.push(xl);
        ys.push(yl);
    }
    let mut t = vec![0.0; dim];
    t[2 * n] = 1.0;
    FrameAt {
        base: g.clone(),
        x: xs,
        y: ys,
        t,
    }
}

impl FrameAt {
    /// Horizontal frame vectors in `[X_1..X_n, Y_1..Y_n]` order.
    pub fn horizontal(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.x.iter().chain(self.y.iter())
    }

    /// Components `<w, X_l>, <w, Y_l>` of an ambient covector/vector `w`.
    pub fn project(&self, w: &[f64]) -> Vec<f64> {
        self.horizontal().map(|e| dot(e, w)).collect()
    }
}

/// `(ψ(h) - g) / h²` for the loop `exp(-hY) exp(-hX) exp(hY) exp(hX) g`,
/// with each flow integrated by RK4. Approximates the bracket `[X_l, Y_l]`.
pub fn flow_commutator(g: &GroupPoint, l: usize, h: f64) -> Vec<f64> {
    let n = g.n();
    let field_x = move |p: &[f64]| {
        let mut v = vec![0.0; 2 * n + 1];
        v[l] = 1.0;
        v[2 * n] = 0.5 * p[n + l];
        v
    };
    let field_y = move |p: &[f64]| {
        let mut v = vec![0.0; 2 * n + 1];
        v[n + l] = 1.0;
        v[2 * n] = -0.5 * p[l];
        v
    };
    let start = g.to_flat();
    let mut p = start.clone();
    p = rk4_flow(&field_x, &p, h);
    p = rk4_flow(&field_y, &p, h);
    p = rk4_flow(&field_x, &p, -h);
    p = rk4_flow(&field_y, &p, -h);
    p.iter().zip(&start).map(|(a, b)| (a - b) / (h * h)).collect()
}

fn rk4_flow<F: Fn(&[f64]) -> Vec<f64>>(field: &F, p: &[f64], time: f64) -> Vec<f64> {
    const STEPS: usize = 8;
    let dt = time / STEPS as f64;
    let mut y = p.to_vec();
    let axpy = |y: &[f64], k: &[f64], a: f64| -> Vec<f64> { y.iter().zip(k).map(|(u, v)| u + a * v).collect() };
    for _ in 0..STEPS {
        let k1 = field(&y);
        let k2 = field(&axpy(&y, &k1, 0.5 * dt));
        let k3 = field(&axpy(&y, &k2, 0.5 * dt));
        let k4 = field(&axpy(&y, &k3, dt));
        for i in 0..y.len() {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    y
}

/// A horizontal vector in the `{X_l, Y_l}` frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizontalVector {
    pub components: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<GroupPoint>,
}

impl HorizontalVector {
    pub fn new(components: Vec<f64>) -> Self {
        Self {
            components,
            base: None,
        }
    }

    pub fn at(components: Vec<f64>, base: GroupPoint) -> Self {
        Self {
            components,
            base: Some(base),
        }
    }

    pub fn norm(&self) -> f64 {
        dot(&self.components, &self.components).sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            components: self.components.iter().map(|c| s * c).collect(),
            base: self.base.clone(),
        }
    }
}

/// Sub-Riemannian inner product: the Euclidean product of the horizontal
/// components.
pub fn inner_h(v: &HorizontalVector, w: &HorizontalVector) -> Result<f64> {
    if v.base != w.base {
        return Err(Error::BaseMismatch);
    }
    if v.components.len() != w.components.len() {
        return Err(Error::DimensionMismatch {
            expected: v.components.len(),
            got: w.components.len(),
        });
    }
    Ok(dot(&v.components, &w.components))
}

/// `div_H φ = Σ_l (X_l φ_l + Y_l φ_{n+l})` by central differences along the
/// frame vectors at `g`.
pub fn horizontal_divergence<F>(phi: F, g: &GroupPoint, step: f64) -> Result<f64>
where
    F: Fn(&GroupPoint) -> Vec<f64>,
{
    if !(step > 0.0) {
        return Err(Error::NonPositiveStep(step));
    }
    let n = g.n();
    let frame = frame_at(g);
    let base = g.to_flat();
    let shifted = |dir: &[f64], s: f64| -> GroupPoint {
        let c: Vec<f64> = base.iter().zip(dir).map(|(a, d)| a + s * d).collect();
        GroupPoint::from_flat(&c).expect("finite shifted point")
    };
    let mut div = 0.0;
    for (k, e) in frame.horizontal().enumerate() {
        let fp = phi(&shifted(e, step));
        let fm = phi(&shifted(e, -step));
        if fp.len() != 2 * n || fm.len() != 2 * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                got: fp.len(),
            });
        }
        div += (fp[k] - fm[k]) / (2.0 * step);
    }
    Ok(div)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn point(n: usize) -> impl Strategy<Value = GroupPoint> {
        (prop::collection::vec(-5.0..5.0f64, 2 * n), -5.0..5.0f64)
            .prop_map(|(z, t)| GroupPoint::new(z, t).unwrap())
    }

    #[test]
    fn product_of_unit_directions_in_h1() {
        let g = multiply(&GroupPoint::h1(1.0, 0.0, 0.0), &GroupPoint::h1(0.0, 1.0, 0.0));
        assert_eq!(g, GroupPoint::h1(1.0, 1.0, -0.5));
    }

    #[test]
    fn inverse_negates_every_coordinate() {
        assert_eq!(inverse(&GroupPoint::h1(1.0, 2.0, 3.0)), GroupPoint::h1(-1.0, -2.0, -3.0));
        assert_eq!(inverse(&GroupPoint::identity(2)), GroupPoint::identity(2));
    }

    #[test]
    fn dilation_examples_and_rejection() {
        assert_eq!(dilate(2.0, &GroupPoint::h1(1.0, 1.0, 1.0)).unwrap(), GroupPoint::h1(2.0, 2.0, 4.0));
        assert!(matches!(dilate(0.0, &GroupPoint::h1(1.0, 1.0, 1.0)), Err(Error::NonPositiveDilation(_))));
        assert!(dilate(-1.0, &GroupPoint::h1(1.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn gauge_examples() {
        assert_eq!(koranyi_gauge(&GroupPoint::h1(1.0, 0.0, 0.0)), 1.0);
        assert!((koranyi_gauge(&GroupPoint::h1(0.0, 0.0, 1.0)) - 2.0).abs() < 1e-15);
        assert_eq!(koranyi_gauge(&GroupPoint::identity(3)), 0.0);
        let e = GroupPoint::identity(1);
        assert!((koranyi_distance(&e, &GroupPoint::h1(0.0, 0.0, 1.0)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn frame_coefficients_follow_the_group_law() {
        let f = frame_at(&GroupPoint::identity(1));
        assert_eq!(f.x[0], vec![1.0, 0.0, 0.0]);
        assert_eq!(f.y[0], vec![0.0, 1.0, 0.0]);
        assert_eq!(f.t, vec![0.0, 0.0, 1.0]);
        let f = frame_at(&GroupPoint::h1(0.0, 2.0, 0.0));
        assert_eq!(f.x[0], vec![1.0, 0.0, 1.0]);
        // X_l(g) is the derivative of s -> g * (s e_l, 0) at s = 0.
        let g = GroupPoint::new(vec![0.3, -1.2, 0.7, 2.0], 0.4).unwrap();
        let h = 1e-6;
        let fr = frame_at(&g);
        for l in 0..2 {
            let mut e = vec![0.0; 4];
            e[l] = h;
            let p = multiply(&g, &GroupPoint::new(e.clone(), 0.0).unwrap()).to_flat();
            let m = multiply(&g, &GroupPoint::new(e.iter().map(|c| -c).collect(), 0.0).unwrap()).to_flat();
            for k in 0..5 {
                assert!(((p[k] - m[k]) / (2.0 * h) - fr.x[l][k]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn flow_commutator_reproduces_minus_t() {
        for g in [GroupPoint::identity(1), GroupPoint::h1(0.7, -1.3, 2.0)] {
            let c = flow_commutator(&g, 0, 1e-3);
            assert!(c[0].abs() < 1e-6 && c[1].abs() < 1e-6);
            assert!((c[2] + 1.0).abs() < 1e-6, "{c:?}");
        }
    }

    #[test]
    fn horizontality_examples() {
        let e = GroupPoint::identity(1);
        assert!(is_horizontal(&e, &GroupPoint::h1(1.0, 0.0, 0.0), 1e-12));
        assert!(!is_horizontal(&e, &GroupPoint::h1(0.0, 0.0, 1.0), 1e-12));
        let g = GroupPoint::h1(0.3, 0.4, -2.0);
        assert!(is_horizontal(&g, &g, 1e-12));
        // g * (w, 0) is always horizontal from g.
        let w = GroupPoint::h1(1.5, -0.5, 0.0);
        assert!(is_horizontal(&g, &multiply(&g, &w), 1e-12));
    }

    #[test]
    fn twisted_combination_endpoints_and_midpoint() {
        let g = GroupPoint::h1(0.3, 0.4, -2.0);
        let gp = multiply(&g, &GroupPoint::h1(1.0, 2.0, 0.0));
        assert_eq!(twisted_combination(&g, &gp, 0.0).unwrap(), g);
        let one = twisted_combination(&g, &gp, 1.0).unwrap();
        assert!(koranyi_distance(&one, &gp) < 1e-12);
        let mid = twisted_combination(&g, &gp, 0.5).unwrap().to_flat();
        let (a, b) = (g.to_flat(), gp.to_flat());
        for k in 0..3 {
            assert!((mid[k] - 0.5 * (a[k] + b[k])).abs() < 1e-12);
        }
        assert!(twisted_combination(&g, &gp, 1.5).is_err());
    }

    #[test]
    fn inner_h_checks_bases() {
        let v = HorizontalVector::new(vec![1.0, 0.0]);
        let w = HorizontalVector::new(vec![0.0, 1.0]);
        assert_eq!(inner_h(&v, &v).unwrap(), 1.0);
        assert_eq!(inner_h(&v, &w).unwrap(), 0.0);
        let based = HorizontalVector::at(vec![0.0, 1.0], GroupPoint::h1(1.0, 0.0, 0.0));
        assert_eq!(inner_h(&v, &based), Err(Error::BaseMismatch));
    }

    #[test]
    fn horizontal_divergence_examples() {
        let g = GroupPoint::h1(0.4, -0.9, 1.3);
        let c = horizontal_divergence(|_| vec![2.0, -1.0], &g, 1e-4).unwrap();
        assert!(c.abs() < 1e-12);
        let lin = horizontal_divergence(|p| vec![p.x(0), p.y(0)], &g, 1e-4).unwrap();
        assert!((lin - 2.0).abs() < 1e-6);
        // A field depending on t: X(t) = y/2, Y(t) = -x/2.
        let tf = horizontal_divergence(|p| vec![p.t(), p.t()], &g, 1e-4).unwrap();
        assert!((tf - 0.5 * (g.y(0) - g.x(0))).abs() < 1e-6);
        assert!(horizontal_divergence(|p| vec![p.t(), 0.0], &g, 0.0).is_err());
    }

    #[test]
    fn point_json_wire_format() {
        let g = GroupPoint::h1(1.0, 2.0, 3.0);
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"n":1,"coords":[1.0,2.0,3.0]}"#);
        let back: GroupPoint = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<GroupPoint>(r#"{"n":2,"coords":[1.0,2.0,3.0]}"#).is_err());
    }

    proptest! {
        #[test]
        fn associativity(a in point(2), b in point(2), c in point(2)) {
            let l = multiply(&multiply(&a, &b), &c);
            let r = multiply(&a, &multiply(&b, &c));
            for (u, v) in l.to_flat().iter().zip(r.to_flat()) {
                prop_assert!((u - v).abs() <= 1e-12 * (1.0 + v.abs()));
            }
        }

        #[test]
        fn inverse_and_identity_laws(g in point(1)) {
            prop_assert_eq!(multiply(&g, &inverse(&g)), GroupPoint::identity(1));
            prop_assert_eq!(multiply(&GroupPoint::identity(1), &g), g.clone());
            prop_assert_eq!(inverse(&inverse(&g)), g);
        }

        #[test]
        fn gauge_is_dilation_homogeneous(g in point(2), s in 0.01..50.0f64) {
            let lhs = koranyi_gauge(&dilate(s, &g).unwrap());
            prop_assert!((lhs - s * koranyi_gauge(&g)).abs() <= 1e-12 * lhs.max(1e-300));
        }

        #[test]
        fn koranyi_distance_is_left_invariant_and_symmetric(p in point(1), g in point(1), h in point(1)) {
            let d = koranyi_distance(&g, &h);
            let dl = koranyi_distance(&multiply(&p, &g), &multiply(&p, &h));
            prop_assert!((d - dl).abs() <= 1e-10 * d.max(1.0));
            prop_assert!((d - koranyi_distance(&h, &g)).abs() <= 1e-12 * d.max(1.0));
        }

        #[test]
        fn horizontal_pairs_collapse_to_affine_combination(g in point(1), w in prop::collection::vec(-3.0..3.0f64, 2), lam in 0.0..1.0f64) {
            let gp = multiply(&g, &GroupPoint::new(w, 0.0).unwrap());
            prop_assert!(is_horizontal(&g, &gp, 1e-12));
            let tc = twisted_combination(&g, &gp, lam).unwrap().to_flat();
            let (a, b) = (g.to_flat(), gp.to_flat());
            for k in 0..3 {
                prop_assert!((tc[k] - ((1.0 - lam) * a[k] + lam * b[k])).abs() < 1e-10);
            }
        }

        #[test]
        fn divergence_is_linear(c1 in -3.0..3.0f64, c2 in -3.0..3.0f64) {
            let g = GroupPoint::h1(0.2, 0.5, -0.3);
            let f1 = |p: &GroupPoint| vec![p.x(0) * p.t(), p.y(0).sin()];
            let f2 = |p: &GroupPoint| vec![p.t().cos(), p.x(0) * p.y(0)];
            let comb = |p: &GroupPoint| {
                let (a, b) = (f1(p), f2(p));
                vec![c1 * a[0] + c2 * b[0], c1 * a[1] + c2 * b[1]]
            };
            let lhs = horizontal_divergence(comb, &g, 1e-4).unwrap();
            let rhs = c1 * horizontal_divergence(f1, &g, 1e-4).unwrap() + c2 * horizontal_divergence(f2, &g, 1e-4).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }
    }
}
