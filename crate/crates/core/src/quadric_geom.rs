//! Geometry of the Segre quadric `Q = {x₀x₃ − x₁x₂ = 0} ⊂ P³`.
//!
//! Points of `Q` are pairs of homogeneous coordinates on `P¹ × P¹`; planes
//! are points of the dual space `P³*`. The polar map of `Q` sends a point
//! `x` to the plane `(x₃, −x₂, −x₁, x₀)`.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact_linalg::{
    dot, format_rational, normalize_projective, parse_rational, proportional_vectors, rat, ratio,
    LinalgError, RatMatrix, Rational,
};

pub type Vec3 = [Rational; 3];
pub type Vec4 = [Rational; 4];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("homogeneous coordinates must not all vanish")]
    ZeroVector,
    #[error("point is not on the quadric x0*x3 - x1*x2 = 0")]
    NotOnQuadric,
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("projection center lies on the target plane")]
    CenterOnPlane,
    #[error("point coincides with the projection center")]
    PointIsCenter,
    #[error("invalid coordinate: {0}")]
    Parse(String),
}

impl From<LinalgError> for GeometryError {
    fn from(e: LinalgError) -> Self {
        GeometryError::Parse(e.to_string())
    }
}

fn to_vec4(v: Vec<Rational>) -> Vec4 {
    v.try_into().expect("length 4")
}

fn normalize_pair(p: [Rational; 2]) -> Result<[Rational; 2], GeometryError> {
    if !p[0].is_zero() {
        Ok([Rational::one(), &p[1] / &p[0]])
    } else if !p[1].is_zero() {
        Ok([Rational::zero(), Rational::one()])
    } else {
        Err(GeometryError::ZeroVector)
    }
}

/// A point of `Q ≅ P¹ × P¹`, stored with each factor normalized so that its
/// first nonzero coordinate is 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadricPoint {
    u: [Rational; 2],
    v: [Rational; 2],
}

impl QuadricPoint {
    pub fn new(u: [Rational; 2], v: [Rational; 2]) -> Result<Self, GeometryError> {
        Ok(Self {
            u: normalize_pair(u)?,
            v: normalize_pair(v)?,
        })
    }

    pub fn from_ints(u: [i64; 2], v: [i64; 2]) -> Result<Self, GeometryError> {
        Self::new([rat(u[0]), rat(u[1])], [rat(v[0]), rat(v[1])])
    }

    pub fn u(&self) -> &[Rational; 2] {
        &self.u
    }

    pub fn v(&self) -> &[Rational; 2] {
        &self.v
    }

    /// The Segre vector `(u₀v₀, u₀v₁, u₁v₀, u₁v₁)`.
    pub fn segre(&self) -> Vec4 {
        [
            &self.u[0] * &self.v[0],
            &self.u[0] * &self.v[1],
            &self.u[1] * &self.v[0],
            &self.u[1] * &self.v[1],
        ]
    }

    /// Inverse of the Segre map on points of `Q`.
    pub fn from_segre(x: &Vec4) -> Result<Self, GeometryError> {
        if x.iter().all(Zero::is_zero) {
            return Err(GeometryError::ZeroVector);
        }
        if &x[0] * &x[3] != &x[1] * &x[2] {
            return Err(GeometryError::NotOnQuadric);
        }
        // columns (x0,x2) and (x1,x3) are multiples of u; rows of v
        let u = if !(x[0].is_zero() && x[2].is_zero()) {
            [x[0].clone(), x[2].clone()]
        } else {
            [x[1].clone(), x[3].clone()]
        };
        let v = if !(x[0].is_zero() && x[1].is_zero()) {
            [x[0].clone(), x[1].clone()]
        } else {
            [x[2].clone(), x[3].clone()]
        };
        Self::new(u, v)
    }
}

impl fmt::Display for QuadricPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "([{}:{}],[{}:{}])",
            format_rational(&self.u[0]),
            format_rational(&self.u[1]),
            format_rational(&self.v[0]),
            format_rational(&self.v[1])
        )
    }
}

/// JSON form `{"u":["a","b"],"v":["c","d"]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadricPointJson {
    pub u: [String; 2],
    pub v: [String; 2],
}

impl From<&QuadricPoint> for QuadricPointJson {
    fn from(p: &QuadricPoint) -> Self {
        Self {
            u: [format_rational(&p.u[0]), format_rational(&p.u[1])],
            v: [format_rational(&p.v[0]), format_rational(&p.v[1])],
        }
    }
}

impl TryFrom<&QuadricPointJson> for QuadricPoint {
    type Error = GeometryError;

    fn try_from(j: &QuadricPointJson) -> Result<Self, GeometryError> {
        let p = |s: &str, field: &str| {
            parse_rational(s).map_err(|_| GeometryError::Parse(format!("{field}: {s:?}")))
        };
        Self::new(
            [p(&j.u[0], "u[0]")?, p(&j.u[1], "u[1]")?],
            [p(&j.v[0], "v[0]")?, p(&j.v[1], "v[1]")?],
        )
    }
}

/// A plane of `P³`, i.e. a point of `P³*`. Coordinates are kept in canonical
/// form (coprime integers, first nonzero positive), so `==` is projective
/// equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Plane {
    y: Vec4,
}

impl Plane {
    pub fn new(y: Vec4) -> Result<Self, GeometryError> {
        if y.iter().all(Zero::is_zero) {
            return Err(GeometryError::ZeroVector);
        }
        Ok(Self {
            y: to_vec4(normalize_projective(&y)),
        })
    }

    pub fn from_ints(y: [i64; 4]) -> Result<Self, GeometryError> {
        Self::new(y.map(rat))
    }

    /// Parses `"a,b,c,d"` with rational entries.
    pub fn parse(s: &str) -> Result<Self, GeometryError> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 4 {
            return Err(GeometryError::Parse(format!(
                "plane needs 4 comma-separated coordinates, got {}",
                parts.len()
            )));
        }
        let y = parts
            .iter()
            .map(|p| parse_rational(p).map_err(|e| GeometryError::Parse(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(to_vec4(y))
    }

    pub fn coords(&self) -> &Vec4 {
        &self.y
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.y.iter().map(format_rational).collect()
    }

    /// `⟨y, segre(p)⟩`; zero iff `p ∈ H`.
    pub fn eval(&self, p: &QuadricPoint) -> Rational {
        dot(&self.y, &p.segre())
    }
}

impl fmt::Display for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_strings().join(","))
    }
}

pub fn plane_eval(h: &Plane, p: &QuadricPoint) -> Rational {
    h.eval(p)
}

/// Gram matrix of `x₀x₃ − x₁x₂`.
pub fn quadric_gram() -> RatMatrix {
    let h = ratio(1, 2);
    let mut g = RatMatrix::zeros(4, 4);
    g[(0, 3)] = h.clone();
    g[(3, 0)] = h.clone();
    g[(1, 2)] = -h.clone();
    g[(2, 1)] = -h;
    g
}

/// Matrix of the polar map `x ↦ (x₃, −x₂, −x₁, x₀)`.
pub fn polar_matrix() -> RatMatrix {
    RatMatrix::from_i64(&[&[0, 0, 0, 1], &[0, 0, -1, 0], &[0, -1, 0, 0], &[1, 0, 0, 0]])
}

pub fn polar_map(x: &Vec4) -> Result<Vec4, GeometryError> {
    if x.iter().all(Zero::is_zero) {
        return Err(GeometryError::ZeroVector);
    }
    Ok([x[3].clone(), -x[2].clone(), -x[1].clone(), x[0].clone()])
}

/// Value of the dual quadric `y₀y₃ − y₁y₂` at `y`.
pub fn dual_quadric_value(y: &Vec4) -> Rational {
    &y[0] * &y[3] - &y[1] * &y[2]
}

/// Deterministic basis of the 3-dimensional subspace `H ⊂ ℚ⁴`
/// (reduced echelon kernel of the row `y`, free columns ascending).
pub fn echelon_basis(h: &Plane) -> [Vec4; 3] {
    let row = RatMatrix::from_rows(&[h.coords().to_vec()]).expect("single row");
    let ns = row.nullspace();
    debug_assert_eq!(ns.len(), 3);
    let mut it = ns.into_iter().map(to_vec4);
    [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()]
}

/// Gram matrix of `x₀x₃ − x₁x₂` restricted to the echelon basis of `H`.
pub fn restricted_gram(h: &Plane) -> RatMatrix {
    let basis = echelon_basis(h);
    let q = quadric_gram();
    let mut g = RatMatrix::zeros(3, 3);
    for a in 0..3 {
        for b in 0..3 {
            g[(a, b)] = q.bilinear(&basis[a], &basis[b]).expect("4-vectors");
        }
    }
    g
}

/// True iff `H` is tangent to `Q` (equivalently `H ∈ Q*`).
pub fn is_tangent_plane(h: &Plane) -> bool {
    dual_quadric_value(h.coords()).is_zero()
}

/// The plane section `C_H = Q ∩ H`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConicSection {
    Smooth,
    /// Two ruling lines meeting at `vertex`, the point of tangency.
    LinePair {
        vertex: Box<QuadricPoint>,
    },
}

pub fn conic_section(h: &Plane) -> ConicSection {
    if !is_tangent_plane(h) {
        return ConicSection::Smooth;
    }
    // the polar map is an involution taking a tangent plane to its point of contact
    let x = polar_map(h.coords()).expect("nonzero plane");
    let vertex = QuadricPoint::from_segre(&x).expect("point of contact lies on Q");
    ConicSection::LinePair {
        vertex: Box::new(vertex),
    }
}

/// The unique plane through three points of `Q` whose Segre vectors are
/// linearly independent.
pub fn plane_through(
    z1: &QuadricPoint,
    z2: &QuadricPoint,
    z3: &QuadricPoint,
) -> Result<Plane, GeometryError> {
    let m = RatMatrix::from_rows(&[z1.segre(), z2.segre(), z3.segre()]).expect("4 columns");
    let ns = m.nullspace();
    if ns.len() != 1 {
        return Err(GeometryError::Degenerate(format!(
            "points {z1}, {z2}, {z3} do not span a plane"
        )));
    }
    Plane::new(to_vec4(ns.into_iter().next().unwrap()))
}

/// True iff the two points lie on a common ruling line of `Q`.
pub fn same_ruling(a: &QuadricPoint, b: &QuadricPoint) -> bool {
    a.u == b.u || a.v == b.v
}

/// A plane inside `P³*`, given by three independent spanning vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmbeddedPlane {
    basis: [Vec4; 3],
}

impl EmbeddedPlane {
    pub fn new(basis: [Vec4; 3]) -> Result<Self, GeometryError> {
        let m = RatMatrix::from_rows(&basis).expect("4 columns");
        if m.rank() != 3 {
            return Err(GeometryError::Degenerate("frame basis has rank < 3".into()));
        }
        Ok(Self { basis })
    }

    /// The polar image `f_Q(H)` with basis `(J·h₁, J·h₂, J·h₃)` where
    /// `(h₁,h₂,h₃)` is the echelon basis of `H`. In this frame the dual conic
    /// of `Q ∩ H` has Gram matrix [`restricted_gram`].
    pub fn polar_image(h: &Plane) -> Self {
        let basis = echelon_basis(h).map(|b| polar_map(&b).expect("basis vectors are nonzero"));
        Self { basis }
    }

    pub fn basis(&self) -> &[Vec4; 3] {
        &self.basis
    }

    /// The point `Σ αₐ·uₐ` of `P³*`.
    pub fn point(&self, alpha: &Vec3) -> Vec4 {
        std::array::from_fn(|i| {
            (0..3).fold(Rational::zero(), |acc, a| {
                acc + &alpha[a] * &self.basis[a][i]
            })
        })
    }

    pub fn contains(&self, y: &Vec4) -> bool {
        let mut rows: Vec<Vec4> = self.basis.to_vec();
        rows.push(y.clone());
        RatMatrix::from_rows(&rows).expect("4 columns").rank() == 3
    }

    /// Stable textual identifier used in JSON output.
    pub fn label(&self) -> String {
        let parts: Vec<String> = self
            .basis
            .iter()
            .map(|b| {
                let cells: Vec<String> = b.iter().map(format_rational).collect();
                format!("[{}]", cells.join(","))
            })
            .collect();
        format!("[{}]", parts.join(","))
    }
}

/// Projects `y` from `center` onto the embedded plane `P`, returning the
/// coordinates of `span(y, center) ∩ P` in the basis of `P`.
pub fn project_to_plane(p: &EmbeddedPlane, center: &Vec4, y: &Vec4) -> Result<Vec3, GeometryError> {
    if center.iter().all(Zero::is_zero) || y.iter().all(Zero::is_zero) {
        return Err(GeometryError::ZeroVector);
    }
    if p.contains(center) {
        return Err(GeometryError::CenterOnPlane);
    }
    if proportional_vectors(center, y) {
        return Err(GeometryError::PointIsCenter);
    }
    // columns u₁ u₂ u₃ center; solve for (α, λ) with Σαu + λ·center = y
    let mut m = RatMatrix::zeros(4, 4);
    for i in 0..4 {
        for a in 0..3 {
            m[(i, a)] = p.basis[a][i].clone();
        }
        m[(i, 3)] = center[i].clone();
    }
    let sol = m.inverse()?.mul_vec(y)?;
    Ok([sol[0].clone(), sol[1].clone(), sol[2].clone()])
}
