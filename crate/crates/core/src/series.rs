//! Truncated Taylor series over complex coefficients, linear-fractional
//! self-maps of the disk, and the symbol descriptions used to build
//! operator matrices.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default truncation order for scenarios.
pub const DEFAULT_TRUNCATION: usize = 128;
/// Boundary samples used when enforcing `‖φ‖_∞ < 1`.
pub const SUP_NORM_GRID: usize = 4096;
/// Tolerance for exact-structure coefficient comparisons.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for comparisons affected by truncation tails.
pub const TRUNCATION_TOL: f64 = 1e-8;
/// Minimum `|ad - bc|` for a linear-fractional map to count as nonconstant.
pub const MIN_DETERMINANT: f64 = 1e-12;

const RATIONAL_GUARD: usize = 8;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// Coefficients `c_0..=c_N` of a power series truncated at degree `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<Complex64>,
}

impl TruncatedSeries {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidSeries("coefficient list is empty".into()));
        }
        if let Some(k) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidSeries(format!("coefficient {k} is not finite")));
        }
        Ok(Self { coeffs })
    }

    /// Builds a series of the given order, zero-padding or truncating `coeffs`.
    pub fn from_coeffs(coeffs: &[Complex64], order: usize) -> Result<Self> {
        let mut v = vec![zero(); order + 1];
        for (dst, src) in v.iter_mut().zip(coeffs) {
            *dst = *src;
        }
        Self::new(v)
    }

    pub fn zeros(order: usize) -> Self {
        Self { coeffs: vec![zero(); order + 1] }
    }

    pub fn constant(value: Complex64, order: usize) -> Self {
        Self::monomial(value, 0, order)
    }

    /// `value · z^degree`; zero when `degree > order`.
    pub fn monomial(value: Complex64, degree: usize, order: usize) -> Self {
        let mut s = Self::zeros(order);
        if degree <= order {
            s.coeffs[degree] = value;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of `z^k`, zero beyond the truncation order.
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_else(zero)
    }

    /// Re-truncates (or zero-pads) to a new order.
    pub fn with_order(&self, order: usize) -> Self {
        Self {
            coeffs: (0..=order).map(|k| self.coeff(k)).collect(),
        }
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|c| c.norm() <= tol)
    }

    /// Index of the first coefficient with modulus above `tol`.
    pub fn leading_index(&self, tol: f64) -> Option<usize> {
        self.coeffs.iter().position(|c| c.norm() > tol)
    }

    /// Highest index with a coefficient above `tol`.
    pub fn degree(&self, tol: f64) -> Option<usize> {
        self.coeffs.iter().rposition(|c| c.norm() > tol)
    }

    /// Hardy-space norm of the truncated coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c.conj()).collect(),
        }
    }

    /// Cauchy product truncated to the order of `self`. Coefficients of
    /// `other` beyond its own order are treated as zero.
    pub fn multiply(&self, other: &Self) -> Self {
        let order = self.order();
        let g = other.coeffs();
        let mut out = vec![zero(); order + 1];
        for (i, fi) in self.coeffs.iter().enumerate() {
            if *fi == zero() {
                continue;
            }
            for (j, gj) in g.iter().take(order + 1 - i).enumerate() {
                out[i + j] += fi * gj;
            }
        }
        Self { coeffs: out }
    }

    /// `n`-th derivative. The result has order `N - n`; when `n > N` it is
    /// the zero series of order 0.
    pub fn differentiate(&self, n: usize) -> Self {
        let order = self.order();
        if n > order {
            return Self::zeros(0);
        }
        let coeffs = (0..=order - n)
            .map(|k| self.coeffs[k + n] * falling_factorial(k + n, n))
            .collect();
        Self { coeffs }
    }

    /// Formal antiderivative with zero constant term, kept at the same order.
    pub fn antiderivative(&self) -> Self {
        let order = self.order();
        let mut out = vec![zero(); order + 1];
        for k in 1..=order {
            out[k] = self.coeffs[k - 1] / k as f64;
        }
        Self { coeffs: out }
    }

    /// Horner evaluation of the truncated polynomial.
    pub fn evaluate(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(zero(), |acc, c| acc * z + c)
    }

    /// `self^p` by repeated multiplication at the same order.
    pub fn power(&self, p: usize) -> Self {
        let mut out = Self::constant(one(), self.order());
        for _ in 0..p {
            out = out.multiply(self);
        }
        out
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn mul(self, rhs: Self) -> TruncatedSeries {
        self.multiply(rhs)
    }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn add(self, rhs: Self) -> TruncatedSeries {
        let order = self.order().max(rhs.order());
        TruncatedSeries {
            coeffs: (0..=order).map(|k| self.coeff(k) + rhs.coeff(k)).collect(),
        }
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn sub(self, rhs: Self) -> TruncatedSeries {
        self + &(-rhs)
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;

    fn neg(self) -> TruncatedSeries {
        self.scale(-one())
    }
}

/// `k! / (k - n)!` as a float; zero when `n > k`.
pub fn falling_factorial(k: usize, n: usize) -> f64 {
    if n > k {
        return 0.0;
    }
    ((k - n + 1)..=k).map(|j| j as f64).product()
}

pub fn factorial(n: usize) -> f64 {
    falling_factorial(n, n)
}

/// First `order + 1` Taylor coefficients of `numer / denom` by recursive
/// division.
///
/// The roots of `denom` must lie outside the closed unit disk. After the
/// division the product with `denom` is checked against `numer` on degrees
/// `≤ order - 8`.
pub fn expand_rational(
    numer: &TruncatedSeries,
    denom: &TruncatedSeries,
    order: usize,
) -> Result<TruncatedSeries> {
    let d0 = denom.coeff(0);
    if d0.norm() <= f64::MIN_POSITIVE {
        return Err(Error::SingularExpansion);
    }
    if let Some(root) = polynomial_roots(denom.coeffs(), 0.0)?
        .into_iter()
        .find(|r| r.norm() <= 1.0)
    {
        return Err(Error::PoleInsideDisk(format_complex(root)));
    }
    let dlen = denom.degree(0.0).unwrap_or(0);
    let mut out = vec![zero(); order + 1];
    for k in 0..=order {
        let mut acc = numer.coeff(k);
        for j in 1..=dlen.min(k) {
            acc -= denom.coeff(j) * out[k - j];
        }
        out[k] = acc / d0;
    }
    let result = TruncatedSeries::new(out)?;

    let check = result.multiply(&denom.with_order(order));
    let scale = numer.coeffs().iter().map(|c| c.norm()).fold(1.0, f64::max);
    let limit = order.saturating_sub(RATIONAL_GUARD);
    for k in 0..=limit {
        let err = (check.coeff(k) - numer.coeff(k)).norm();
        if err > EXACT_TOL * scale {
            return Err(Error::NumericalFailure(format!(
                "rational expansion residual {err:e} at degree {k}"
            )));
        }
    }
    Ok(result)
}

/// Roots of `Σ c_k z^k` from the eigenvalues of the companion matrix.
/// Coefficients with modulus `≤ tol` at the top are dropped first.
pub fn polynomial_roots(coeffs: &[Complex64], tol: f64) -> Result<Vec<Complex64>> {
    let Some(deg) = coeffs.iter().rposition(|c| c.norm() > tol) else {
        return Ok(Vec::new());
    };
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    if deg == 1 {
        return Ok(vec![-coeffs[0] / lead]);
    }
    let mut companion = DMatrix::<Complex64>::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = one();
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -coeffs[i] / lead;
    }
    let schur = companion
        .try_schur(f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NumericalFailure("companion eigenvalues did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..deg).map(|i| t[(i, i)]).collect())
}

pub(crate) fn format_complex(z: Complex64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

/// `φ(z) = (az + b) / (cz + d)` with parameters kept exactly as given.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLfm")]
pub struct LinearFractionalMap {
    a: Complex64,
    b: Complex64,
    c: Complex64,
    d: Complex64,
}

#[derive(Deserialize)]
struct RawLfm {
    a: Complex64,
    b: Complex64,
    c: Complex64,
    d: Complex64,
}

impl TryFrom<RawLfm> for LinearFractionalMap {
    type Error = Error;

    fn try_from(raw: RawLfm) -> Result<Self> {
        Self::new(raw.a, raw.b, raw.c, raw.d)
    }
}

impl LinearFractionalMap {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        if ![a, b, c, d].iter().all(|p| p.is_finite()) {
            return Err(Error::Validation("linear-fractional parameters must be finite".into()));
        }
        let det = (a * d - b * c).norm();
        if det <= MIN_DETERMINANT {
            return Err(Error::ConstantMap(det));
        }
        Ok(Self { a, b, c, d })
    }

    /// `φ(z) = az + b`.
    pub fn affine(a: Complex64, b: Complex64) -> Result<Self> {
        Self::new(a, b, zero(), one())
    }

    pub fn params(&self) -> (Complex64, Complex64, Complex64, Complex64) {
        (self.a, self.b, self.c, self.d)
    }

    pub fn determinant(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// The companion `σ(z) = (āz − c̄) / (−b̄z + d̄)`.
    pub fn sigma(&self) -> Self {
        Self {
            a: self.a.conj(),
            b: -self.c.conj(),
            c: -self.b.conj(),
            d: self.d.conj(),
        }
    }

    /// Zero of `φ` inside the open disk, if any.
    pub fn zero_in_disk(&self) -> Option<Complex64> {
        if self.b == zero() {
            return Some(zero());
        }
        if self.a == zero() {
            return None;
        }
        let beta = -self.b / self.a;
        (beta.norm() < 1.0).then_some(beta)
    }

    /// Pole `−d/c`, absent for affine maps.
    pub fn pole(&self) -> Option<Complex64> {
        (self.c != zero()).then(|| -self.d / self.c)
    }

    /// True when the parameters are proportional by a nonzero scalar.
    pub fn projectively_equal(&self, other: &Self, tol: f64) -> bool {
        let lhs = [self.a, self.b, self.c, self.d];
        let rhs = [other.a, other.b, other.c, other.d];
        let Some(pivot) = (0..4).max_by(|&i, &j| lhs[i].norm().total_cmp(&lhs[j].norm())) else {
            return false;
        };
        if rhs[pivot].norm() <= f64::MIN_POSITIVE {
            return false;
        }
        let ratio = rhs[pivot] / lhs[pivot];
        let scale = rhs.iter().map(|p| p.norm()).fold(0.0, f64::max);
        lhs.iter().zip(&rhs).all(|(l, r)| (l * ratio - r).norm() <= tol * scale)
    }

    /// Taylor coefficients of `φ` about the origin.
    pub fn series(&self, order: usize) -> Result<TruncatedSeries> {
        let numer = TruncatedSeries::from_coeffs(&[self.b, self.a], order)?;
        let denom = TruncatedSeries::from_coeffs(&[self.d, self.c], order.max(1))?;
        expand_rational(&numer, &denom, order)
    }

    /// Monomial form `coef · z`, when `b = c = 0`.
    fn as_monomial(&self) -> Option<(Complex64, usize)> {
        (self.b == zero() && self.c == zero()).then(|| (self.a / self.d, 1))
    }
}

impl fmt::Display for LinearFractionalMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}·z + {}) / ({}·z + {})",
            format_complex(self.a),
            format_complex(self.b),
            format_complex(self.c),
            format_complex(self.d)
        )
    }
}

/// Declarative description of a symbol `ψ` or `φ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymbolSpec {
    Polynomial {
        #[serde(deserialize_with = "nonempty_coeffs")]
        coeffs: Vec<Complex64>,
    },
    LinearFractional(LinearFractionalMap),
}

fn nonempty_coeffs<'de, D>(de: D) -> std::result::Result<Vec<Complex64>, D::Error>
where
    D: serde::Deserializer<'de>,
{
    let coeffs = Vec::<Complex64>::deserialize(de)?;
    if coeffs.is_empty() {
        return Err(serde::de::Error::custom("polynomial coeffs must be nonempty"));
    }
    Ok(coeffs)
}

impl SymbolSpec {
    pub fn polynomial(coeffs: Vec<Complex64>) -> Result<Self> {
        TruncatedSeries::new(coeffs.clone())?;
        Ok(Self::Polynomial { coeffs })
    }

    /// Polynomial from real coefficients.
    pub fn real_polynomial(coeffs: &[f64]) -> Self {
        Self::Polynomial {
            coeffs: coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect(),
        }
    }

    /// `value · z^degree`.
    pub fn monomial(value: Complex64, degree: usize) -> Self {
        let mut coeffs = vec![zero(); degree + 1];
        coeffs[degree] = value;
        Self::Polynomial { coeffs }
    }

    pub fn constant(value: Complex64) -> Self {
        Self::monomial(value, 0)
    }

    pub fn linear_fractional(map: LinearFractionalMap) -> Self {
        Self::LinearFractional(map)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Polynomial { coeffs } => TruncatedSeries::new(coeffs.clone()).map(|_| ()),
            Self::LinearFractional(m) => {
                let (a, b, c, d) = m.params();
                LinearFractionalMap::new(a, b, c, d).map(|_| ())
            }
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Self::Polynomial { coeffs } => coeffs.iter().rev().fold(zero(), |acc, c| acc * z + c),
            Self::LinearFractional(m) => m.eval(z),
        }
    }

    pub fn series(&self, order: usize) -> Result<TruncatedSeries> {
        match self {
            Self::Polynomial { coeffs } => TruncatedSeries::from_coeffs(coeffs, order),
            Self::LinearFractional(m) => m.series(order),
        }
    }

    pub fn is_identically_zero(&self) -> bool {
        match self {
            Self::Polynomial { coeffs } => coeffs.iter().all(|c| *c == zero()),
            Self::LinearFractional(_) => false,
        }
    }

    /// `(c, m)` when the symbol is exactly `c·z^m` with `c ≠ 0`.
    pub fn monomial_form(&self) -> Option<(Complex64, usize)> {
        match self {
            Self::Polynomial { coeffs } => {
                let mut nonzero = coeffs.iter().enumerate().filter(|(_, c)| **c != zero());
                let (m, c) = nonzero.next()?;
                nonzero.next().is_none().then_some((*c, m))
            }
            Self::LinearFractional(map) => map.as_monomial(),
        }
    }

    /// The symbol as a linear-fractional map, when it is one (degree-one
    /// polynomials included).
    pub fn as_linear_fractional(&self) -> Option<LinearFractionalMap> {
        match self {
            Self::LinearFractional(m) => Some(*m),
            Self::Polynomial { coeffs } => {
                let deg = coeffs.iter().rposition(|c| *c != zero())?;
                if deg != 1 {
                    return None;
                }
                LinearFractionalMap::affine(coeffs[1], coeffs[0]).ok()
            }
        }
    }

    /// Multiplicity of the zero at the origin (index of the first nonzero
    /// coefficient).
    pub fn zero_multiplicity_at_origin(&self) -> Option<usize> {
        match self {
            Self::Polynomial { coeffs } => coeffs.iter().position(|c| *c != zero()),
            Self::LinearFractional(m) => Some(usize::from(m.b == zero())),
        }
    }

    /// Bounds on `sup |f|`, `sup |f'|`, `sup |f''|` over the closed disk.
    fn derivative_bounds(&self) -> Result<[f64; 3]> {
        match self {
            Self::Polynomial { coeffs } => {
                let mut bounds = [0.0; 3];
                for (k, c) in coeffs.iter().enumerate() {
                    let m = c.norm();
                    let k = k as f64;
                    bounds[0] += m;
                    bounds[1] += k * m;
                    bounds[2] += k * (k - 1.0).max(0.0) * m;
                }
                Ok(bounds)
            }
            Self::LinearFractional(map) => {
                let (a, b, c, d) = map.params();
                let gap = d.norm() - c.norm();
                if gap <= 0.0 {
                    let pole = map.pole().map(format_complex).unwrap_or_default();
                    return Err(Error::UnboundedSymbol(format!(
                        "pole {pole} lies in the closed unit disk"
                    )));
                }
                let det = map.determinant().norm();
                Ok([
                    (a.norm() + b.norm()) / gap,
                    det / (gap * gap),
                    2.0 * c.norm() * det / gap.powi(3),
                ])
            }
        }
    }
}

impl fmt::Display for SymbolSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Polynomial { coeffs } => {
                let terms: Vec<String> = coeffs
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| **c != zero())
                    .map(|(k, c)| format!("({})z^{k}", format_complex(*c)))
                    .collect();
                if terms.is_empty() {
                    write!(f, "0")
                } else {
                    write!(f, "{}", terms.join(" + "))
                }
            }
            Self::LinearFractional(m) => write!(f, "{m}"),
        }
    }
}

/// Upper estimate of `‖f‖_∞` over the disk from `grid_points` equispaced
/// boundary samples.
///
/// The symbols handled here attain their supremum on the unit circle. With
/// `G(θ) = |f(e^{iθ})|²` and spacing `h = 2π/grid_points`, every point of the
/// circle lies within `h/2` of a sample, and `G' = 0` at the maximiser, so
/// `max G ≤ max_samples G + sup|G''| h²/8`. `sup|G''|` is bounded through
/// `2(M₀(M₁+M₂) + M₁²)` with `M_j` bounds on `|f^{(j)}|`.
pub fn sup_norm_estimate(spec: &SymbolSpec, grid_points: usize) -> Result<f64> {
    if grid_points < 256 {
        return Err(Error::Validation(format!(
            "sup-norm grid needs at least 256 points, got {grid_points}"
        )));
    }
    let [m0, m1, m2] = spec.derivative_bounds()?;
    let sampled = (0..grid_points)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / grid_points as f64;
            spec.eval(Complex64::from_polar(1.0, theta)).norm_sqr()
        })
        .fold(0.0, f64::max);
    let h = 2.0 * PI / grid_points as f64;
    let curvature = 2.0 * (m0 * (m1 + m2) + m1 * m1);
    Ok((sampled + curvature * h * h / 8.0).sqrt())
}

/// Splits `ψ = z^n ψ₁`, returning `ψ₁` at the same order.
pub fn factor_monomial(psi: &TruncatedSeries, n: usize, tol: f64) -> Result<TruncatedSeries> {
    if psi.is_zero(0.0) {
        return Err(Error::Degenerate("psi is identically zero".into()));
    }
    if let Some(index) = (0..n.min(psi.order() + 1)).find(|&m| psi.coeff(m).norm() > tol) {
        return Err(Error::NotDivisible {
            n,
            index,
            modulus: psi.coeff(index).norm(),
        });
    }
    let order = psi.order();
    Ok(TruncatedSeries {
        coeffs: (0..=order).map(|k| psi.coeff(k + n)).collect(),
    })
}
