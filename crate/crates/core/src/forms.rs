//! Sparse homogeneous polynomials over ℚ and symmetric matrices of linear
//! forms.
//!
//! Terms are keyed by exponent vectors in a `BTreeMap`. Because every stored
//! term of a [`Form`] has the same total degree, the map's lexicographic key
//! order coincides with degree-lexicographic order.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact_linalg::{format_rational, parse_rational, rat, RatMatrix, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormError {
    #[error("forms in {left} and {right} variables cannot be combined")]
    ArityMismatch { left: usize, right: usize },
    #[error("forms of degree {left} and {right} cannot be added")]
    DegreeMismatch { left: u32, right: u32 },
    #[error("point has {found} coordinates, form has {expected} variables")]
    PointLength { expected: usize, found: usize },
    #[error("zero form has no normalized representative")]
    ZeroForm,
    #[error("matrix entry ({row},{col}) differs from its transpose")]
    NotSymmetric { row: usize, col: usize },
    #[error("matrix entry ({row},{col}) is not a linear form")]
    NotLinear { row: usize, col: usize },
    #[error("invalid term: {0}")]
    InvalidTerm(String),
}

/// A homogeneous polynomial in `nvars` variables with rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Form {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Rational>,
}

/// One term of the JSON encoding: `{"exp": [..], "coeff": "p/q"}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormTerm {
    pub exp: Vec<u32>,
    pub coeff: String,
}

impl Form {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut f = Self::zero(nvars);
        if !c.is_zero() {
            f.terms.insert(vec![0; nvars], c);
        }
        f
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Rational::one())
    }

    /// The coordinate function `y_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut exp = vec![0; nvars];
        exp[i] = 1;
        let mut f = Self::zero(nvars);
        f.terms.insert(exp, Rational::one());
        f
    }

    /// The linear form `y ↦ Σ coeffs[i]·y_i`.
    pub fn linear(coeffs: &[Rational]) -> Self {
        let n = coeffs.len();
        let terms = coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| {
                let mut exp = vec![0; n];
                exp[i] = 1;
                (exp, c.clone())
            })
            .collect();
        Self { nvars: n, terms }
    }

    /// Builds a form from explicit terms; coefficients of repeated exponents
    /// are summed and zero coefficients dropped.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self, FormError>
    where
        I: IntoIterator<Item = (Vec<u32>, Rational)>,
    {
        let mut map: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
        for (exp, c) in terms {
            if exp.len() != nvars {
                return Err(FormError::InvalidTerm(format!(
                    "exponent {exp:?} has length {}, expected {nvars}",
                    exp.len()
                )));
            }
            *map.entry(exp).or_insert_with(Rational::zero) += c;
        }
        map.retain(|_, c| !c.is_zero());
        let mut degrees = map.keys().map(|e| e.iter().sum::<u32>());
        if let Some(d) = degrees.next() {
            if let Some(other) = degrees.find(|&e| e != d) {
                return Err(FormError::DegreeMismatch {
                    left: d,
                    right: other,
                });
            }
        }
        Ok(Self { nvars, terms: map })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree, or `None` for the zero form.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().next().map(|e| e.iter().sum())
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, exp: &[u32]) -> Rational {
        self.terms.get(exp).cloned().unwrap_or_else(Rational::zero)
    }

    /// Terms in descending degree-lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], &Rational)> {
        self.terms.iter().rev().map(|(e, c)| (e.as_slice(), c))
    }

    pub fn leading_coeff(&self) -> Option<&Rational> {
        self.terms.values().next_back()
    }

    fn check_arity(&self, other: &Self) -> Result<(), FormError> {
        if self.nvars != other.nvars {
            return Err(FormError::ArityMismatch {
                left: self.nvars,
                right: other.nvars,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, FormError> {
        self.check_arity(other)?;
        if let (Some(a), Some(b)) = (self.degree(), other.degree()) {
            if a != b {
                return Err(FormError::DegreeMismatch { left: a, right: b });
            }
        }
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            let entry = terms.entry(e.clone()).or_insert_with(Rational::zero);
            *entry += c;
            if entry.is_zero() {
                terms.remove(e);
            }
        }
        Ok(Self {
            nvars: self.nvars,
            terms,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FormError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Rational::one())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, FormError> {
        self.check_arity(other)?;
        let mut terms: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                *terms.entry(e).or_insert_with(Rational::zero) += ca * cb;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Ok(Self {
            nvars: self.nvars,
            terms,
        })
    }

    pub fn scale(&self, s: &Rational) -> Self {
        if s.is_zero() {
            return Self::zero(self.nvars);
        }
        Self {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        }
    }

    pub fn eval(&self, point: &[Rational]) -> Result<Rational, FormError> {
        if point.len() != self.nvars {
            return Err(FormError::PointLength {
                expected: self.nvars,
                found: point.len(),
            });
        }
        let integral = |x: &Rational| x.is_integer();
        if point.iter().all(integral) && self.terms.values().all(integral) {
            let ints: Vec<BigInt> = point.iter().map(|x| x.to_integer()).collect();
            return Ok(Rational::from_integer(self.eval_integral(&ints)));
        }
        let top = self.degree().unwrap_or(0) as usize;
        let powers: Vec<Vec<Rational>> = point
            .iter()
            .map(|x| {
                let mut row = vec![Rational::one()];
                for _ in 0..top {
                    let next = row.last().expect("nonempty") * x;
                    row.push(next);
                }
                row
            })
            .collect();
        Ok(self.terms.iter().fold(Rational::zero(), |acc, (e, c)| {
            let mono = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .fold(c.clone(), |m, (v, &k)| m * &powers[v][k as usize]);
            acc + mono
        }))
    }

    fn eval_integral(&self, point: &[BigInt]) -> BigInt {
        let top = self.degree().unwrap_or(0) as usize;
        let powers: Vec<Vec<BigInt>> = point
            .iter()
            .map(|x| {
                let mut row = vec![BigInt::one()];
                for _ in 0..top {
                    let next = row.last().expect("nonempty") * x;
                    row.push(next);
                }
                row
            })
            .collect();
        self.terms.iter().fold(BigInt::zero(), |acc, (e, c)| {
            let mono = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .fold(c.numer().clone(), |m, (v, &k)| m * &powers[v][k as usize]);
            acc + mono
        })
    }

    pub fn partial(&self, var: usize) -> Self {
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[var] -= 1;
            terms.insert(d, c * rat(e[var] as i64));
        }
        Self {
            nvars: self.nvars,
            terms,
        }
    }

    pub fn gradient(&self) -> Vec<Self> {
        (0..self.nvars).map(|i| self.partial(i)).collect()
    }

    /// True iff `self = λ·other` for a nonzero rational λ. Two zero forms are
    /// proportional; a zero and a nonzero form are not.
    pub fn proportional(&self, other: &Self) -> bool {
        if self.nvars != other.nvars || self.terms.len() != other.terms.len() {
            return false;
        }
        let Some((e0, a0)) = self.terms.iter().next() else {
            return true;
        };
        let Some(b0) = other.terms.get(e0) else {
            return false;
        };
        self.terms.iter().all(|(e, a)| match other.terms.get(e) {
            Some(b) => a * b0 == b * a0,
            None => false,
        })
    }

    /// Scales to integer coefficients with gcd 1 and a positive leading
    /// (deglex-largest) coefficient.
    pub fn primitive_normalize(&self) -> Result<Self, FormError> {
        let lead = self.leading_coeff().ok_or(FormError::ZeroForm)?;
        let lcm = self
            .terms
            .values()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let content = self.terms.values().fold(BigInt::zero(), |acc, c| {
            acc.gcd(&(c * Rational::from_integer(lcm.clone())).to_integer())
        });
        let mut factor = Rational::new(lcm, content);
        if lead.is_negative() {
            factor = -factor;
        }
        Ok(self.scale(&factor))
    }

    pub fn to_json_terms(&self) -> Vec<FormTerm> {
        self.terms()
            .map(|(e, c)| FormTerm {
                exp: e.to_vec(),
                coeff: format_rational(c),
            })
            .collect()
    }

    pub fn from_json_terms(nvars: usize, terms: &[FormTerm]) -> Result<Self, FormError> {
        let parsed = terms
            .iter()
            .map(|t| {
                parse_rational(&t.coeff)
                    .map(|c| (t.exp.clone(), c))
                    .map_err(|e| FormError::InvalidTerm(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_terms(nvars, parsed)
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (idx, (e, c)) in self.terms().enumerate() {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| {
                    if k == 1 {
                        format!("y{i}")
                    } else {
                        format!("y{i}^{k}")
                    }
                })
                .collect();
            let mag = c.abs();
            let sign = if c.is_negative() { "-" } else { "+" };
            if idx == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            match (mono.is_empty(), mag.is_one()) {
                (true, _) => write!(f, "{}", format_rational(&mag))?,
                (false, true) => write!(f, "{}", mono.join("*"))?,
                (false, false) => write!(f, "{}*{}", format_rational(&mag), mono.join("*"))?,
            }
        }
        Ok(())
    }
}

/// A square symmetric matrix whose entries are linear forms (or zero).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearFormMatrix {
    size: usize,
    nvars: usize,
    entries: Vec<Form>,
}

impl LinearFormMatrix {
    /// `entries` is row-major, `size × size`.
    pub fn new(size: usize, nvars: usize, entries: Vec<Form>) -> Result<Self, FormError> {
        if entries.len() != size * size {
            return Err(FormError::InvalidTerm(format!(
                "expected {} entries, found {}",
                size * size,
                entries.len()
            )));
        }
        for (idx, e) in entries.iter().enumerate() {
            let (row, col) = (idx / size.max(1), idx % size.max(1));
            if e.nvars() != nvars {
                return Err(FormError::ArityMismatch {
                    left: nvars,
                    right: e.nvars(),
                });
            }
            if !matches!(e.degree(), None | Some(1)) {
                return Err(FormError::NotLinear { row, col });
            }
            if col > row && entries[idx] != entries[col * size + row] {
                return Err(FormError::NotSymmetric { row, col });
            }
        }
        Ok(Self {
            size,
            nvars,
            entries,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn get(&self, i: usize, j: usize) -> &Form {
        &self.entries[i * self.size + j]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.size).all(|i| (i + 1..self.size).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn transpose(&self) -> Self {
        let n = self.size;
        let entries = (0..n * n)
            .map(|idx| self.get(idx % n, idx / n).clone())
            .collect();
        Self {
            size: n,
            nvars: self.nvars,
            entries,
        }
    }

    /// The rational matrix obtained by substituting `point` for the variables.
    pub fn eval(&self, point: &[Rational]) -> Result<RatMatrix, FormError> {
        let data = self
            .entries
            .iter()
            .map(|f| f.eval(point))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(
            RatMatrix::new(self.size, self.size, data)
                .expect("entry count checked at construction"),
        )
    }

    /// Symbolic determinant by Laplace expansion along successive rows,
    /// memoizing minors by their column set. The 0×0 determinant is 1.
    pub fn sym_det(&self) -> Result<Form, FormError> {
        if !self.is_symmetric() {
            let (row, col) = (0..self.size)
                .flat_map(|i| (i + 1..self.size).map(move |j| (i, j)))
                .find(|&(i, j)| self.get(i, j) != self.get(j, i))
                .expect("asymmetric matrix has an offending pair");
            return Err(FormError::NotSymmetric { row, col });
        }
        let n = self.size;
        let full = (1usize << n) - 1;
        // minors[mask]: determinant of the block on the last popcount(mask)
        // rows and the columns in `mask`
        let mut minors: Vec<Option<Form>> = vec![None; 1 << n];
        minors[0] = Some(Form::one(self.nvars));
        let mut masks: Vec<usize> = (1..=full).collect();
        masks.sort_by_key(|m| m.count_ones());
        for mask in masks {
            let row = n - mask.count_ones() as usize;
            let mut acc = Form::zero(self.nvars);
            for (pos, col) in (0..n).filter(|c| mask & (1 << c) != 0).enumerate() {
                let entry = self.get(row, col);
                if entry.is_zero() {
                    continue;
                }
                let sub = minors[mask & !(1 << col)]
                    .as_ref()
                    .expect("smaller minors first");
                if sub.is_zero() {
                    continue;
                }
                let term = entry.mul(sub)?;
                acc = if pos % 2 == 0 {
                    acc.add(&term)?
                } else {
                    acc.sub(&term)?
                };
            }
            minors[mask] = Some(acc);
        }
        Ok(minors[full].take().expect("full minor computed"))
    }
}
