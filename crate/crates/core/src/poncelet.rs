//! Plane conics attached to a k = 3 instance and Poncelet triangle
//! certificates.
//!
//! All conics of one instance live in the frame `P = f_Q(H)` spanned by
//! `(J·h₁, J·h₂, J·h₃)` (see [`EmbeddedPlane::polar_image`]). In that frame:
//!
//! * `C(E)` is the projection of the cone `S(E)` from its vertex,
//! * `C_H*` is the dual of the section `Q ∩ H`,
//! * each point `zᵢ ∈ Z` gives a line `Zᵢ`, tangent to `C_H*`.
//!
//! The triangle of lines `Zᵢ` is circumscribed about `C_H*` and inscribed in
//! `C(E)`. Closure is certified exactly by Cayley's coefficient condition and
//! cross-checked by a floating-point tangent-chord iteration.

use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::exact_linalg::{
    cross3, dot, format_rational, normalize_projective, proportional_vectors, rat, LinalgError,
    RatMatrix, Rational,
};
use crate::hulsbergen::{validate, HulsbergenData, ValidationFlag};
use crate::jump_surface::{cone_data, matrix_strings, ConeData, SurfaceError};
use crate::quadric_geom::{
    is_tangent_plane, plane_through, restricted_gram, EmbeddedPlane, Plane, QuadricPoint, Vec3,
};

/// Default relative tolerance of the numeric closure oracle.
pub const DEFAULT_CLOSURE_TOL: f64 = 1e-9;
/// Default number of sampled starting points.
pub const DEFAULT_CLOSURE_STARTS: usize = 32;

const ORACLE_SEED: u64 = 0x00c0_11c5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PonceletError {
    #[error("conics are expressed in different frames")]
    FrameMismatch,
    #[error("conic must be smooth (rank 3), found rank {0}")]
    NotSmooth(usize),
    #[error("gram matrix must be a symmetric 3x3 matrix")]
    BadGram,
    #[error("projection center {0} lies on the target plane")]
    VertexOnPlane(Box<Plane>),
    #[error("plane {0} is tangent to Q, its dual conic is degenerate")]
    TangentPlane(Box<Plane>),
    #[error(
        "base plane {plane} spanned by Z is tangent to Q (it lies on Q*), so the cone vertex lies on \
         f_Q(H_E) and projection onto a plane not containing the vertex is impossible; two points of Z \
         share a ruling line, so the sheaf is strictly semi-stable"
    )]
    TangentBasePlane {
        plane: Box<Plane>,
        flags: Vec<ValidationFlag>,
    },
    #[error("lines {0} and {1} are dependent")]
    DependentLines(usize, usize),
    #[error("point {0} is dual-incident to the whole frame")]
    DegenerateLine(Box<QuadricPoint>),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl PonceletError {
    pub fn flags(&self) -> &[ValidationFlag] {
        match self {
            Self::TangentBasePlane { flags, .. } => flags,
            Self::Surface(e) => e.flags(),
            _ => &[],
        }
    }
}

/// A conic `αᵀ·gram·α = 0` in the coordinates of `frame`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlaneConic {
    gram: RatMatrix,
    frame: EmbeddedPlane,
}

impl PlaneConic {
    pub fn new(gram: RatMatrix, frame: EmbeddedPlane) -> Result<Self, PonceletError> {
        if gram.rows() != 3 || !gram.is_symmetric() || gram.is_zero() {
            return Err(PonceletError::BadGram);
        }
        Ok(Self { gram, frame })
    }

    pub fn gram(&self) -> &RatMatrix {
        &self.gram
    }

    pub fn frame(&self) -> &EmbeddedPlane {
        &self.frame
    }

    pub fn rank(&self) -> usize {
        self.gram.rank()
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.gram.bilinear(p, p).expect("3-vector").is_zero()
    }

    /// Projective equality of the underlying quadratic forms in one frame.
    pub fn proportional(&self, other: &Self) -> bool {
        let flat = |m: &RatMatrix| m.to_rows().concat();
        self.frame == other.frame && proportional_vectors(&flat(&self.gram), &flat(&other.gram))
    }

    fn require_smooth(&self) -> Result<(), PonceletError> {
        match self.rank() {
            3 => Ok(()),
            r => Err(PonceletError::NotSmooth(r)),
        }
    }
}

/// JSON form `{"frame_id":…, "gram":[[..],[..],[..]]}`.
#[derive(Clone, Debug, Serialize)]
pub struct ConicJson {
    pub frame_id: String,
    pub gram: Vec<Vec<String>>,
}

impl From<&PlaneConic> for ConicJson {
    fn from(c: &PlaneConic) -> Self {
        Self {
            frame_id: c.frame.label(),
            gram: matrix_strings(&c.gram),
        }
    }
}

/// Restricts the cone's quadric to `P`. Because the vertex spans the
/// kernel, this equals the projection of the cone from its vertex.
pub fn project_cone(cone: &ConeData, p: &EmbeddedPlane) -> Result<PlaneConic, PonceletError> {
    if cone.rank != 3 {
        return Err(PonceletError::NotSmooth(cone.rank));
    }
    if p.contains(cone.vertex.coords()) {
        return Err(PonceletError::VertexOnPlane(Box::new(cone.vertex.clone())));
    }
    let b = p.basis();
    let mut g = RatMatrix::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            g[(i, j)] = cone.gram.bilinear(&b[i], &b[j])?;
        }
    }
    PlaneConic::new(g, p.clone())
}

/// The dual conic `C_H*` in the frame `f_Q(H)`.
pub fn dual_conic(h: &Plane) -> Result<PlaneConic, PonceletError> {
    if is_tangent_plane(h) {
        return Err(PonceletError::TangentPlane(Box::new(h.clone())));
    }
    PlaneConic::new(restricted_gram(h), EmbeddedPlane::polar_image(h))
}

/// Coordinates of the line `Zᵢ` (planes through `zᵢ`) in the frame `P`.
pub fn dual_line(z: &QuadricPoint, p: &EmbeddedPlane) -> Result<Vec3, PonceletError> {
    let s = z.segre();
    let line: Vec3 = std::array::from_fn(|a| dot(&p.basis()[a], &s));
    if line.iter().all(Zero::is_zero) {
        return Err(PonceletError::DegenerateLine(Box::new(z.clone())));
    }
    Ok(line)
}

/// The vertices `(p₁₂, p₁₃, p₂₃)` of the triangle cut out by three lines,
/// each in canonical projective form.
pub fn triangle_vertices(lines: &[Vec3; 3]) -> Result<[Vec3; 3], PonceletError> {
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let mut out: Vec<Vec3> = Vec::with_capacity(3);
    for (i, j) in pairs {
        let p = cross3(&lines[i], &lines[j]);
        if p.iter().all(Zero::is_zero) {
            return Err(PonceletError::DependentLines(i + 1, j + 1));
        }
        out.push(normalize_projective(&p).try_into().expect("3-vector"));
    }
    Ok(out.try_into().expect("three vertices"))
}

/// True iff `line` is tangent to the smooth conic `c`, i.e.
/// `ℓᵀ·adj(gram)·ℓ = 0`.
pub fn tangency_check(line: &Vec3, c: &PlaneConic) -> Result<bool, PonceletError> {
    c.require_smooth()?;
    let adj = c.gram.adjugate()?;
    Ok(adj.bilinear(line, line)?.is_zero())
}

/// Coefficients `[f₀, f₁, f₂, f₃]` of `det(t·outer + inner)`.
pub fn pencil_cubic(
    outer: &PlaneConic,
    inner: &PlaneConic,
) -> Result<[Rational; 4], PonceletError> {
    if outer.frame != inner.frame {
        return Err(PonceletError::FrameMismatch);
    }
    let at = |t: i64| {
        outer
            .gram
            .scale(&rat(t))
            .add(&inner.gram)
            .and_then(|m| m.det())
    };
    let f0 = inner.gram.det()?;
    let f3 = outer.gram.det()?;
    let (plus, minus) = (at(1)?, at(-1)?);
    let two = rat(2);
    let f2 = (&plus + &minus) / &two - &f0;
    let f1 = (&plus - &minus) / &two - &f3;
    Ok([f0, f1, f2, f3])
}

/// `f₁² − 4·f₀·f₂` for `det(t·outer + inner) = f₃t³ + f₂t² + f₁t + f₀`.
/// Zero iff a triangle inscribed in `outer` can be circumscribed about
/// `inner` (for smooth pairs meeting transversally).
pub fn cayley_triangle_invariant(
    outer: &PlaneConic,
    inner: &PlaneConic,
) -> Result<Rational, PonceletError> {
    inner.require_smooth()?;
    let [f0, f1, f2, _] = pencil_cubic(outer, inner)?;
    Ok(&f1 * &f1 - rat(4) * &f0 * &f2)
}

/// Elementary symmetric coefficients `(e₁, e₂, e₃)` of
/// `det(inner⁻¹·outer − tI) = −t³ + e₁t² − e₂t + e₃` and the value
/// `e₂² − e₁·e₃`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DarbouxInvariant {
    pub e: [Rational; 3],
    pub value: Rational,
}

pub fn darboux_charpoly_invariant(
    outer: &PlaneConic,
    inner: &PlaneConic,
) -> Result<DarbouxInvariant, PonceletError> {
    if outer.frame != inner.frame {
        return Err(PonceletError::FrameMismatch);
    }
    inner.require_smooth()?;
    let m = inner.gram.inverse()?.mul(&outer.gram)?;
    let cp = m.char_poly()?;
    let e = [cp[1].clone(), -cp[2].clone(), cp[3].clone()];
    let value = &e[1] * &e[1] - &e[0] * &e[2];
    Ok(DarbouxInvariant { e, value })
}

/// Rank of the Gram matrix; rank ≤ 2 means the conic lies on the secant
/// variety of the Veronese surface (a line pair or double line).
pub fn veronese_rank(c: &PlaneConic) -> usize {
    c.rank()
}

fn sym_product(a: &Vec3, b: &Vec3) -> RatMatrix {
    let mut m = RatMatrix::zeros(3, 3);
    let half = rat(1) / rat(2);
    for i in 0..3 {
        for j in 0..3 {
            m[(i, j)] = (&a[i] * &b[j] + &a[j] * &b[i]) * &half;
        }
    }
    m
}

/// The conic `c₁Z₂Z₃ + c₂Z₁Z₃ + c₃Z₁Z₂`, linear in the coefficients.
pub fn embed_extension(
    coeffs: &[Rational; 3],
    lines: &[Vec3; 3],
    frame: &EmbeddedPlane,
) -> Result<PlaneConic, PonceletError> {
    triangle_vertices(lines)?;
    let terms = [
        sym_product(&lines[1], &lines[2]).scale(&coeffs[0]),
        sym_product(&lines[0], &lines[2]).scale(&coeffs[1]),
        sym_product(&lines[0], &lines[1]).scale(&coeffs[2]),
    ];
    let gram = terms[0].add(&terms[1])?.add(&terms[2])?;
    PlaneConic::new(gram, frame.clone())
}

/// Outcome of the numeric closure oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosureStatus {
    /// Every conclusive orbit closed after three steps.
    Closed,
    /// Some orbit failed to close.
    Open,
    /// No real starting point produced a real orbit.
    Inconclusive,
}

impl ClosureStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Closed => "true",
            Self::Open => "false",
            Self::Inconclusive => "inconclusive",
        }
    }
}

type M3 = [[f64; 3]; 3];
type V3 = [f64; 3];

fn to_f64_matrix(m: &RatMatrix) -> M3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = m[(i, j)].to_f64().unwrap_or(f64::NAN);
        }
    }
    let scale = out.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
    out.map(|r| r.map(|x| x / scale))
}

fn fdot(a: &V3, b: &V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn fcross(a: &V3, b: &V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn unit(v: V3) -> V3 {
    let n = fdot(&v, &v).sqrt();
    v.map(|x| x / n)
}

fn form(m: &M3, a: &V3, b: &V3) -> f64 {
    (0..3)
        .map(|i| (0..3).map(|j| a[i] * m[i][j] * b[j]).sum::<f64>())
        .sum()
}

fn f64_adjugate(m: &M3) -> M3 {
    let c =
        |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    [
        [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
        [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
        [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
    ]
}

/// The two tangent lines from `p` to the line conic `dual`, or `None` when
/// they are not real.
fn tangents_from(p: &V3, dual: &M3) -> Option<[V3; 2]> {
    let axis = (0..3)
        .min_by(|&a, &b| p[a].abs().total_cmp(&p[b].abs()))
        .expect("three axes");
    let mut e = [0.0; 3];
    e[axis] = 1.0;
    let m1 = unit(fcross(p, &e));
    let m2 = unit(fcross(p, &m1));
    let a11 = form(dual, &m1, &m1);
    let a12 = form(dual, &m1, &m2);
    let a22 = form(dual, &m2, &m2);
    let disc = a12 * a12 - a11 * a22;
    if disc < -1e-12 * (a12 * a12 + (a11 * a22).abs()) {
        return None;
    }
    let root = disc.max(0.0).sqrt();
    let mk = |l: f64, m: f64| {
        unit([
            l * m1[0] + m * m2[0],
            l * m1[1] + m * m2[1],
            l * m1[2] + m * m2[2],
        ])
    };
    Some(if a11.abs() >= a22.abs() {
        [mk(-a12 + root, a11), mk(-a12 - root, a11)]
    } else {
        [mk(a22, -a12 + root), mk(a22, -a12 - root)]
    })
}

/// Second intersection of the line `l` through `p ∈ outer` with `outer`.
fn second_intersection(p: &V3, l: &V3, outer: &M3) -> Option<V3> {
    let d = unit(fcross(l, p));
    let pad = form(outer, p, &d);
    let qd = form(outer, &d, &d);
    let x = [
        -qd * p[0] + 2.0 * pad * d[0],
        -qd * p[1] + 2.0 * pad * d[1],
        -qd * p[2] + 2.0 * pad * d[2],
    ];
    let n = fdot(&x, &x).sqrt();
    (n > 1e-12).then(|| x.map(|c| c / n))
}

fn projective_distance(a: &V3, b: &V3) -> f64 {
    let plus = (0..3).map(|i| (a[i] + b[i]).powi(2)).sum::<f64>().sqrt();
    let minus = (0..3).map(|i| (a[i] - b[i]).powi(2)).sum::<f64>().sqrt();
    plus.min(minus)
}

/// Runs three tangent-chord steps from `start`; `None` if the orbit leaves
/// the reals.
fn orbit_gap(start: &V3, outer: &M3, dual_inner: &M3) -> Option<f64> {
    let mut p = *start;
    let mut prev: Option<V3> = None;
    for _ in 0..3 {
        let [t1, t2] = tangents_from(&p, dual_inner)?;
        let line = match prev {
            None => t1,
            Some(q) => {
                if fdot(&t1, &q).abs() <= fdot(&t2, &q).abs() {
                    t1
                } else {
                    t2
                }
            }
        };
        p = second_intersection(&p, &line, outer)?;
        prev = Some(line);
    }
    Some(projective_distance(&p, start))
}

fn sample_real_points(outer: &M3, count: usize, rng: &mut ChaCha8Rng) -> Vec<V3> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count * 64 {
        if out.len() == count {
            break;
        }
        let p0: V3 = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let d: V3 = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let a = form(outer, &d, &d);
        let b = 2.0 * form(outer, &p0, &d);
        let c = form(outer, &p0, &p0);
        let disc = b * b - 4.0 * a * c;
        if a.abs() < 1e-9 || disc < 0.0 {
            continue;
        }
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let s = (-b + sign * disc.sqrt()) / (2.0 * a);
        out.push(unit([p0[0] + s * d[0], p0[1] + s * d[1], p0[2] + s * d[2]]));
    }
    out
}

/// Floating-point Poncelet check: from sampled real points of `outer`,
/// follow tangents to `inner` for three steps and test whether the orbit
/// returns within `tol`. Starts whose orbit turns complex are skipped; if
/// none remain the result is [`ClosureStatus::Inconclusive`].
pub fn closure_oracle_numeric(
    outer: &PlaneConic,
    inner: &PlaneConic,
    starts: usize,
    tol: f64,
) -> Result<ClosureStatus, PonceletError> {
    if outer.frame != inner.frame {
        return Err(PonceletError::FrameMismatch);
    }
    outer.require_smooth()?;
    inner.require_smooth()?;
    let a = to_f64_matrix(&outer.gram);
    let dual_inner = f64_adjugate(&to_f64_matrix(&inner.gram));
    let mut rng = ChaCha8Rng::seed_from_u64(ORACLE_SEED);
    let mut any_closed = false;
    for start in sample_real_points(&a, starts, &mut rng) {
        match orbit_gap(&start, &a, &dual_inner) {
            Some(gap) if gap <= tol => any_closed = true,
            Some(_) => return Ok(ClosureStatus::Open),
            None => {}
        }
    }
    Ok(if any_closed {
        ClosureStatus::Closed
    } else {
        ClosureStatus::Inconclusive
    })
}

/// Everything the k = 3 Poncelet layer certifies for one instance.
#[derive(Clone, Debug)]
pub struct PonceletReport {
    pub cone: ConeData,
    pub frame: EmbeddedPlane,
    pub projected: PlaneConic,
    pub dual: PlaneConic,
    pub lines: [Vec3; 3],
    pub vertices: [Vec3; 3],
    pub tangency: [bool; 3],
    pub incidence: [bool; 3],
    pub cayley: Rational,
    pub darboux: DarbouxInvariant,
    pub closure: ClosureStatus,
    pub veronese_rank: usize,
    /// `embed_extension(c, lines)` is proportional to the projected cone.
    pub embedding_matches: bool,
}

/// Checks the base plane spanned by `Z` before anything is projected.
pub fn base_plane(d: &HulsbergenData) -> Result<Plane, PonceletError> {
    if d.k() != 3 {
        return Err(SurfaceError::WrongK {
            expected: "= 3",
            found: d.k(),
        }
        .into());
    }
    let p = d.points();
    let h = plane_through(&p[0], &p[1], &p[2]).map_err(SurfaceError::from)?;
    if is_tangent_plane(&h) {
        return Err(PonceletError::TangentBasePlane {
            plane: Box::new(h),
            flags: validate(d).flags,
        });
    }
    Ok(h)
}

pub fn poncelet_report(
    d: &HulsbergenData,
    starts: usize,
    tol: f64,
) -> Result<PonceletReport, PonceletError> {
    let h = base_plane(d)?;
    let cone = cone_data(d)?;
    let frame = EmbeddedPlane::polar_image(&h);
    let projected = project_cone(&cone, &frame)?;
    let dual = dual_conic(&h)?;
    let pts = d.points();
    let lines: [Vec3; 3] = [
        dual_line(&pts[0], &frame)?,
        dual_line(&pts[1], &frame)?,
        dual_line(&pts[2], &frame)?,
    ];
    let vertices = triangle_vertices(&lines)?;
    let tangency = [
        tangency_check(&lines[0], &dual)?,
        tangency_check(&lines[1], &dual)?,
        tangency_check(&lines[2], &dual)?,
    ];
    let incidence = vertices.clone().map(|p| projected.contains(&p));
    let cayley = cayley_triangle_invariant(&projected, &dual)?;
    let darboux = darboux_charpoly_invariant(&projected, &dual)?;
    let closure = closure_oracle_numeric(&projected, &dual, starts, tol)?;
    let coeffs: [Rational; 3] = d.coeffs().to_vec().try_into().expect("k = 3");
    let embedded = embed_extension(&coeffs, &lines, &frame)?;
    Ok(PonceletReport {
        veronese_rank: veronese_rank(&projected),
        embedding_matches: embedded.proportional(&projected),
        cone,
        frame,
        projected,
        dual,
        lines,
        vertices,
        tangency,
        incidence,
        cayley,
        darboux,
        closure,
    })
}

/// JSON `{"cayley":…, "darboux_literal":…, "closure":…, "tangency":[…], "incidence":[…], …}`.
#[derive(Clone, Debug, Serialize)]
pub struct PonceletJson {
    pub cayley: String,
    pub darboux_literal: String,
    pub darboux_e: [String; 3],
    pub closure: String,
    pub tangency: [bool; 3],
    pub incidence: [bool; 3],
    pub veronese_rank: usize,
    pub embedding_matches: bool,
    pub projected_conic: ConicJson,
    pub dual_conic: ConicJson,
    pub lines: Vec<Vec<String>>,
    pub triangle: Vec<Vec<String>>,
}

fn vec_strings(v: &[Rational]) -> Vec<String> {
    v.iter().map(format_rational).collect()
}

impl From<&PonceletReport> for PonceletJson {
    fn from(r: &PonceletReport) -> Self {
        Self {
            cayley: format_rational(&r.cayley),
            darboux_literal: format_rational(&r.darboux.value),
            darboux_e: r.darboux.e.clone().map(|x| format_rational(&x)),
            closure: r.closure.as_str().to_string(),
            tangency: r.tangency,
            incidence: r.incidence,
            veronese_rank: r.veronese_rank,
            embedding_matches: r.embedding_matches,
            projected_conic: ConicJson::from(&r.projected),
            dual_conic: ConicJson::from(&r.dual),
            lines: r.lines.iter().map(|l| vec_strings(l)).collect(),
            triangle: r.vertices.iter().map(|p| vec_strings(p)).collect(),
        }
    }
}
