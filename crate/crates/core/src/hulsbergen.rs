//! Rank-2 bundles on `Q` presented as extensions
//! `0 → O_Q → E(1,1) → I_Z(1,1) → 0`, encoded by the 0-cycle `Z` (k distinct
//! points) and the extension coefficients `c = (c₁,…,c_k)`.
//!
//! The δ matrix is realized as the bilinear form
//! `(a, b) ↦ Σᵢ cᵢ·wᵢ(y)·aᵢ·bᵢ` restricted to `ker(c) = {a : Σ cᵢaᵢ = 0}`,
//! where `wᵢ(y) = ⟨y, segre(zᵢ)⟩`. Its corank at a plane `H` is
//! `h⁰(E|_{C_H})`.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact_linalg::{format_rational, parse_rational, RatMatrix, Rational};
use crate::forms::{Form, FormError, LinearFormMatrix};
use crate::quadric_geom::{
    conic_section, same_ruling, ConicSection, GeometryError, Plane, QuadricPoint, QuadricPointJson,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HulsbergenError {
    #[error("an instance needs at least one point")]
    Empty,
    #[error("{points} points but {coeffs} coefficients")]
    LengthMismatch { points: usize, coeffs: usize },
    #[error("points {0} and {1} coincide")]
    DuplicatePoints(usize, usize),
    #[error("extension coefficients are all zero")]
    AllZeroCoefficients,
    #[error("splitting type is only defined on smooth conic sections; plane {0} is tangent to Q")]
    TangentSection(Box<Plane>),
    #[error("invalid kernel basis: {0}")]
    InvalidBasis(String),
    #[error("{field}: {message}")]
    Parse { field: String, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Form(#[from] FormError),
}

/// Bundle datum `(Z, c)`. Immutable once constructed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HulsbergenData {
    points: Vec<QuadricPoint>,
    coeffs: Vec<Rational>,
}

impl HulsbergenData {
    pub fn new(points: Vec<QuadricPoint>, coeffs: Vec<Rational>) -> Result<Self, HulsbergenError> {
        if points.is_empty() {
            return Err(HulsbergenError::Empty);
        }
        if points.len() != coeffs.len() {
            return Err(HulsbergenError::LengthMismatch {
                points: points.len(),
                coeffs: coeffs.len(),
            });
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if points[i] == points[j] {
                    return Err(HulsbergenError::DuplicatePoints(i + 1, j + 1));
                }
            }
        }
        if coeffs.iter().all(Zero::is_zero) {
            return Err(HulsbergenError::AllZeroCoefficients);
        }
        Ok(Self { points, coeffs })
    }

    /// Number of points, equal to `c₂(E)`.
    pub fn k(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[QuadricPoint] {
        &self.points
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_locally_free(&self) -> bool {
        self.coeffs.iter().all(|c| !c.is_zero())
    }

    /// Same points, new extension class.
    pub fn with_coeffs(&self, coeffs: Vec<Rational>) -> Result<Self, HulsbergenError> {
        Self::new(self.points.clone(), coeffs)
    }

    /// The linear forms `wᵢ(y) = ⟨y, segre(zᵢ)⟩` on `P³*`.
    pub fn weight_forms(&self) -> Vec<Form> {
        self.points
            .iter()
            .map(|p| Form::linear(&p.segre()))
            .collect()
    }

    pub fn to_json(&self) -> HulsbergenJson {
        HulsbergenJson {
            points: self.points.iter().map(QuadricPointJson::from).collect(),
            coeffs: self.coeffs.iter().map(format_rational).collect(),
        }
    }

    pub fn from_json(j: &HulsbergenJson) -> Result<Self, HulsbergenError> {
        let points = j
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                QuadricPoint::try_from(p).map_err(|e| HulsbergenError::Parse {
                    field: format!("points[{i}]"),
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let coeffs = j
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                parse_rational(c).map_err(|e| HulsbergenError::Parse {
                    field: format!("coeffs[{i}]"),
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(points, coeffs)
    }
}

/// JSON instance format `{"points":[{"u":[..],"v":[..]},…],"coeffs":[..]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HulsbergenJson {
    pub points: Vec<QuadricPointJson>,
    pub coeffs: Vec<String>,
}

/// Non-genericity found by [`validate`]. Indices are 1-based positions in
/// the instance.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValidationFlag {
    /// Two points on a common ruling line of `Q`.
    CollinearPair(usize, usize),
    /// Four points on one plane: the first three and `point`.
    TripleCoplanarWith { triple: [usize; 3], point: usize },
    /// `cᵢ = 0`, so `E` fails to be locally free at `zᵢ`.
    NotLocallyFree(usize),
    /// All k ≥ 4 points lie on a single plane.
    AllOnPlane,
}

impl fmt::Display for ValidationFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::CollinearPair(i, j) => write!(f, "collinear_pair({i},{j})"),
            Self::TripleCoplanarWith {
                triple: [a, b, c],
                point,
            } => {
                write!(f, "triple_coplanar_with({a},{b},{c};{point})")
            }
            Self::NotLocallyFree(i) => write!(f, "not_locally_free({i})"),
            Self::AllOnPlane => write!(f, "all_on_plane"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub flags: Vec<ValidationFlag>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn has_collinear_pair(&self) -> bool {
        self.flags
            .iter()
            .any(|f| matches!(f, ValidationFlag::CollinearPair(..)))
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.flags.iter().map(ToString::to_string).collect()
    }
}

/// Reports every departure from general position. Never rejects.
pub fn validate(d: &HulsbergenData) -> ValidationReport {
    let k = d.k();
    let pts = d.points();
    let segre: Vec<Vec<Rational>> = pts.iter().map(|p| p.segre().to_vec()).collect();
    let mut flags = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            if same_ruling(&pts[i], &pts[j]) {
                flags.push(ValidationFlag::CollinearPair(i + 1, j + 1));
            }
        }
    }
    for a in 0..k {
        for b in a + 1..k {
            for c in b + 1..k {
                for m in c + 1..k {
                    let rows = [&segre[a], &segre[b], &segre[c], &segre[m]];
                    if RatMatrix::from_rows(&rows).expect("4 columns").rank() <= 3 {
                        flags.push(ValidationFlag::TripleCoplanarWith {
                            triple: [a + 1, b + 1, c + 1],
                            point: m + 1,
                        });
                    }
                }
            }
        }
    }
    for (i, c) in d.coeffs().iter().enumerate() {
        if c.is_zero() {
            flags.push(ValidationFlag::NotLocallyFree(i + 1));
        }
    }
    if k >= 4 && RatMatrix::from_rows(&segre).expect("4 columns").rank() <= 3 {
        flags.push(ValidationFlag::AllOnPlane);
    }
    ValidationReport { flags }
}

/// Deterministic basis of `{a ∈ ℚᵏ : Σ cᵢaᵢ = 0}` with k−1 vectors, one per
/// free column `j` (every index except the first with `c_p ≠ 0`), ascending:
/// `e_j` when `c_j = 0`, otherwise `c_j·e_i − c_i·e_j` with `i < j` the
/// previous index carrying a nonzero coefficient. Each vector has at most
/// two nonzero entries and its last nonzero entry sits at `j`.
pub fn kernel_basis(c: &[Rational]) -> Result<Vec<Vec<Rational>>, HulsbergenError> {
    let Some(first) = c.iter().position(|x| !x.is_zero()) else {
        return Err(HulsbergenError::AllZeroCoefficients);
    };
    let k = c.len();
    let mut basis = Vec::with_capacity(k - 1);
    let mut prev = first;
    for j in (0..k).filter(|&j| j != first) {
        let mut v = vec![Rational::zero(); k];
        if c[j].is_zero() {
            v[j] = Rational::one();
        } else {
            v[prev] = c[j].clone();
            v[j] = -c[prev].clone();
            prev = j;
        }
        basis.push(v);
    }
    Ok(basis)
}

/// The δ matrix over an explicit basis of `ker(c)`.
pub fn delta_with_basis(
    d: &HulsbergenData,
    basis: &[Vec<Rational>],
) -> Result<LinearFormMatrix, HulsbergenError> {
    let k = d.k();
    if basis.len() != k - 1 || basis.iter().any(|v| v.len() != k) {
        return Err(HulsbergenError::InvalidBasis(format!(
            "expected {} vectors of length {k}",
            k - 1
        )));
    }
    for v in basis {
        let pairing = v
            .iter()
            .zip(d.coeffs())
            .fold(Rational::zero(), |acc, (a, c)| acc + a * c);
        if !pairing.is_zero() {
            return Err(HulsbergenError::InvalidBasis(
                "vector not orthogonal to c".into(),
            ));
        }
    }
    let weighted: Vec<Form> = d
        .weight_forms()
        .into_iter()
        .zip(d.coeffs())
        .map(|(w, c)| w.scale(c))
        .collect();
    let n = k - 1;
    let mut entries = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let mut acc = Form::zero(4);
            for (i, cw) in weighted.iter().enumerate() {
                let s = &basis[a][i] * &basis[b][i];
                if !s.is_zero() {
                    acc = acc.add(&cw.scale(&s))?;
                }
            }
            entries.push(acc);
        }
    }
    Ok(LinearFormMatrix::new(n, 4, entries)?)
}

/// The symmetric `(k−1)×(k−1)` matrix of linear forms whose determinant cuts
/// out the jumping conics.
pub fn delta_symbolic(d: &HulsbergenData) -> LinearFormMatrix {
    let basis = kernel_basis(d.coeffs()).expect("coefficients not all zero by construction");
    delta_with_basis(d, &basis).expect("kernel basis is valid")
}

/// δ evaluated at the plane `H`.
pub fn delta_at(d: &HulsbergenData, h: &Plane) -> RatMatrix {
    let basis = kernel_basis(d.coeffs()).expect("coefficients not all zero by construction");
    let weights: Vec<Rational> = d
        .points()
        .iter()
        .zip(d.coeffs())
        .map(|(p, c)| c * h.eval(p))
        .collect();
    let n = d.k() - 1;
    let mut m = RatMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let v = (0..d.k())
                .filter(|&i| {
                    !basis[a][i].is_zero() && !basis[b][i].is_zero() && !weights[i].is_zero()
                })
                .fold(Rational::zero(), |acc, i| {
                    acc + &weights[i] * &basis[a][i] * &basis[b][i]
                });
            m[(b, a)] = v.clone();
            m[(a, b)] = v;
        }
    }
    m
}

/// `h⁰(E|_{C_H})`, computed as the corank of δ at `H`.
pub fn corank_at(d: &HulsbergenData, h: &Plane) -> usize {
    (d.k() - 1) - delta_at(d, h).rank()
}

/// `H` is a jumping conic iff `h⁰(E|_{C_H}) ≠ 0`.
pub fn is_jumping(d: &HulsbergenData, h: &Plane) -> bool {
    corank_at(d, h) > 0
}

/// Splitting type `(a₁, a₂)`, `a₁ ≥ a₂`, of `E|_{C_H}` on a smooth section,
/// with degrees taken on `C_H ≅ P¹`. Always sums to −2.
pub fn splitting_type(d: &HulsbergenData, h: &Plane) -> Result<(i64, i64), HulsbergenError> {
    if let ConicSection::LinePair { .. } = conic_section(h) {
        return Err(HulsbergenError::TangentSection(Box::new(h.clone())));
    }
    let h0 = corank_at(d, h) as i64;
    Ok(if h0 == 0 { (-1, -1) } else { (h0 - 1, -h0 - 1) })
}
