//! The hypersurface of jumping conics `S(E) ⊂ P³*` and its structure for
//! small `k`.

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::exact_linalg::{format_rational, normalize_projective, rat, RatMatrix, Rational};
use crate::forms::{Form, FormError, FormTerm};
use crate::hulsbergen::{
    delta_symbolic, validate, HulsbergenData, HulsbergenError, ValidationFlag,
};
use crate::quadric_geom::{plane_through, GeometryError, Plane, Vec4};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SurfaceError {
    #[error("degenerate instance: {reason}")]
    Degenerate {
        reason: String,
        flags: Vec<ValidationFlag>,
    },
    #[error("plane {0} does not lie on the jumping surface")]
    NotOnSurface(Box<Plane>),
    #[error("requires k {expected}, instance has k = {found}")]
    WrongK {
        expected: &'static str,
        found: usize,
    },
    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Hulsbergen(#[from] HulsbergenError),
    #[error(transparent)]
    Form(#[from] FormError),
}

impl SurfaceError {
    pub fn flags(&self) -> &[ValidationFlag] {
        match self {
            Self::Degenerate { flags, .. } => flags,
            _ => &[],
        }
    }
}

/// `S(E)` with its primitive-normalized equation of degree `k − 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JumpingSurface {
    equation: Form,
    degree: usize,
    source: HulsbergenData,
}

impl JumpingSurface {
    pub fn equation(&self) -> &Form {
        &self.equation
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn source(&self) -> &HulsbergenData {
        &self.source
    }

    pub fn contains(&self, h: &Plane) -> bool {
        self.equation
            .eval(h.coords())
            .expect("4 variables")
            .is_zero()
    }
}

/// `det δ`, normalized. Fails when the determinant vanishes identically,
/// which happens exactly when some `cᵢ = 0`.
pub fn jumping_polynomial(d: &HulsbergenData) -> Result<JumpingSurface, SurfaceError> {
    let det = delta_symbolic(d).sym_det()?;
    if det.is_zero() {
        return Err(SurfaceError::Degenerate {
            reason: "det(delta) vanishes identically".into(),
            flags: validate(d).flags,
        });
    }
    Ok(JumpingSurface {
        equation: det.primitive_normalize()?,
        degree: d.k() - 1,
        source: d.clone(),
    })
}

/// `Σᵢ cᵢ·Π_{j≠i} wⱼ`, normalized; an independent route to the equation of
/// `S(E)` that never forms δ.
pub fn closed_form(d: &HulsbergenData) -> Result<Form, SurfaceError> {
    let w = d.weight_forms();
    let mut acc = Form::zero(4);
    for (i, c) in d.coeffs().iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let mut prod = Form::constant(4, c.clone());
        for (j, wj) in w.iter().enumerate() {
            if j != i {
                prod = prod.mul(wj)?;
            }
        }
        acc = acc.add(&prod)?;
    }
    if acc.is_zero() {
        return Err(SurfaceError::Degenerate {
            reason: "closed form vanishes identically".into(),
            flags: validate(d).flags,
        });
    }
    Ok(acc.primitive_normalize()?)
}

/// True iff every partial derivative of the equation vanishes at `H`.
/// `H` must lie on the surface.
pub fn is_singular_at(s: &JumpingSurface, h: &Plane) -> Result<bool, SurfaceError> {
    if !s.contains(h) {
        return Err(SurfaceError::NotOnSurface(Box::new(h.clone())));
    }
    Ok(s.equation
        .gradient()
        .iter()
        .all(|g| g.eval(h.coords()).expect("4 variables").is_zero()))
}

/// The plane through a triple of points of `Z` and whether it is a singular
/// point of `S(E)`. `triple` holds 1-based indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TripleSingularity {
    pub triple: [usize; 3],
    pub plane: Plane,
    pub singular: bool,
}

/// All `C(k,3)` planes spanned by triples of `Z`, ordered by index set.
pub fn triple_plane_singularities(
    d: &HulsbergenData,
) -> Result<Vec<TripleSingularity>, SurfaceError> {
    let k = d.k();
    if k < 3 {
        return Err(SurfaceError::WrongK {
            expected: "≥ 3",
            found: k,
        });
    }
    let surface = jumping_polynomial(d)?;
    let pts = d.points();
    let mut out = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            for c in b + 1..k {
                let plane = plane_through(&pts[a], &pts[b], &pts[c])?;
                let singular = is_singular_at(&surface, &plane)?;
                out.push(TripleSingularity {
                    triple: [a + 1, b + 1, c + 1],
                    plane,
                    singular,
                });
            }
        }
    }
    Ok(out)
}

/// For k = 2, `S(E)` is the plane of `P³*` dual to this point of `P³`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualPoint {
    pub point: Vec4,
    pub on_quadric: bool,
}

pub fn dual_point(d: &HulsbergenData) -> Result<DualPoint, SurfaceError> {
    if d.k() != 2 {
        return Err(SurfaceError::WrongK {
            expected: "= 2",
            found: d.k(),
        });
    }
    let c = d.coeffs();
    let s1 = d.points()[0].segre();
    let s2 = d.points()[1].segre();
    let point: Vec4 = std::array::from_fn(|i| &c[1] * &s1[i] + &c[0] * &s2[i]);
    let on_quadric = (&point[0] * &point[3] - &point[1] * &point[2]).is_zero();
    Ok(DualPoint { point, on_quadric })
}

/// The quadric cone `S(E)` for k = 3.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConeData {
    /// Symmetric with `yᵀ·gram·y` equal to the surface equation.
    pub gram: RatMatrix,
    pub rank: usize,
    pub vertex: Plane,
}

/// Symmetric Gram matrix of a quadratic form.
pub fn quadratic_gram(f: &Form) -> RatMatrix {
    let n = f.nvars();
    let mut g = RatMatrix::zeros(n, n);
    for (exp, c) in f.terms() {
        let idx: Vec<usize> = exp
            .iter()
            .enumerate()
            .flat_map(|(i, &e)| std::iter::repeat_n(i, e as usize))
            .collect();
        match idx.as_slice() {
            [i, j] if i == j => g[(*i, *i)] = c.clone(),
            [i, j] => {
                let half = c / rat(2);
                g[(*i, *j)] = half.clone();
                g[(*j, *i)] = half;
            }
            _ => unreachable!("quadratic form has degree 2 terms only"),
        }
    }
    g
}

/// Gram matrix, rank and vertex of the cone. Strictly semi-stable data
/// (two points on a ruling) and non-locally-free data are rejected with
/// their validation flags.
pub fn cone_data(d: &HulsbergenData) -> Result<ConeData, SurfaceError> {
    if d.k() != 3 {
        return Err(SurfaceError::WrongK {
            expected: "= 3",
            found: d.k(),
        });
    }
    let report = validate(d);
    if !report.is_clean() {
        let reason = if report.has_collinear_pair() {
            "two points of Z share a ruling line: the sheaf is strictly semi-stable"
        } else {
            "some extension coefficient vanishes: the sheaf is not locally free"
        };
        return Err(SurfaceError::Degenerate {
            reason: reason.into(),
            flags: report.flags,
        });
    }
    let surface = jumping_polynomial(d)?;
    let gram = quadratic_gram(surface.equation());
    let rank = gram.rank();
    if rank != 3 {
        return Err(SurfaceError::Degenerate {
            reason: format!("jumping quadric has rank {rank}, expected a cone of rank 3"),
            flags: report.flags,
        });
    }
    let kernel = gram.nullspace();
    let vertex = Plane::new(
        normalize_projective(&kernel[0])
            .try_into()
            .expect("4-vector"),
    )?;
    let pts = d.points();
    let span = plane_through(&pts[0], &pts[1], &pts[2])?;
    if span != vertex {
        return Err(SurfaceError::Inconsistent(format!(
            "cone vertex {vertex} differs from the plane {span} spanned by Z"
        )));
    }
    Ok(ConeData { gram, rank, vertex })
}

/// JSON block `{"degree":…, "equation":[…], "cone":{…}}`.
#[derive(Clone, Debug, Serialize)]
pub struct SurfaceJson {
    pub degree: usize,
    pub equation: Vec<FormTerm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cone: Option<ConeJson>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeJson {
    pub gram: Vec<Vec<String>>,
    pub rank: usize,
    pub vertex: Vec<String>,
}

pub fn matrix_strings(m: &RatMatrix) -> Vec<Vec<String>> {
    m.to_rows()
        .iter()
        .map(|r| r.iter().map(format_rational).collect())
        .collect()
}

impl From<&ConeData> for ConeJson {
    fn from(c: &ConeData) -> Self {
        Self {
            gram: matrix_strings(&c.gram),
            rank: c.rank,
            vertex: c.vertex.to_strings(),
        }
    }
}

impl SurfaceJson {
    pub fn new(s: &JumpingSurface, cone: Option<&ConeData>) -> Self {
        Self {
            degree: s.degree(),
            equation: s.equation().to_json_terms(),
            cone: cone.map(ConeJson::from),
        }
    }
}

/// Evaluates `vᵀ·G·v`.
pub fn quadric_value(gram: &RatMatrix, v: &[Rational]) -> Rational {
    gram.bilinear(v, v).expect("matching dimensions")
}
