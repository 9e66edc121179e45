//! Truncated matrices of Toeplitz and weighted composition-differentiation
//! operators on the monomial basis, reproducing kernels, and the adjoint
//! factorization for linear-fractional symbols.
//!
//! Entry `(j, k)` of an [`OperatorMatrix`] is the coefficient of `z^j` in the
//! image of `z^k`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector};
use crate::series::{
    expand_rational, factor_monomial, factorial, falling_factorial, format_complex, sup_norm_estimate,
    LinearFractionalMap, SymbolSpec, TruncatedSeries, EXACT_TOL, SUP_NORM_GRID,
};

/// Rows/columns discarded from the trailing edge when two finite sections
/// are compared: `2n + 8`.
pub fn comparison_margin(n: usize) -> usize {
    2 * n + 8
}

/// Where a matrix came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Toeplitz { symbol: String },
    CompositionDifferentiation { psi: SymbolSpec, phi: SymbolSpec, n: usize },
    /// Conjugate transpose of a finite section.
    AdjointOfTruncation { of: Box<Provenance> },
    CowenFactorization {
        phi: LinearFractionalMap,
        sigma: LinearFractionalMap,
        n: usize,
        factors: Vec<String>,
    },
    Product { factors: Vec<Provenance> },
    Other { label: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix {
    entries: CMatrix,
    provenance: Provenance,
}

impl OperatorMatrix {
    pub fn new(entries: CMatrix, provenance: Provenance) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        if entries.iter().any(|z| !z.is_finite()) {
            return Err(Error::NumericalFailure("operator matrix has non-finite entries".into()));
        }
        Ok(Self { entries, provenance })
    }

    pub fn identity(order: usize) -> Self {
        Self {
            entries: CMatrix::identity(order + 1, order + 1),
            provenance: Provenance::Other { label: "identity".into() },
        }
    }

    pub fn zeros(order: usize) -> Self {
        Self {
            entries: CMatrix::zeros(order + 1, order + 1),
            provenance: Provenance::Other { label: "zero".into() },
        }
    }

    /// Truncation order `N`; the matrix is `(N+1) × (N+1)`.
    pub fn order(&self) -> usize {
        self.entries.nrows() - 1
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn column(&self, k: usize) -> TruncatedSeries {
        TruncatedSeries::new(self.entries.column(k).iter().copied().collect())
            .expect("finite entries")
    }

    /// Finite-section adjoint: the conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let provenance = match &self.provenance {
            Provenance::AdjointOfTruncation { of } => (**of).clone(),
            other => Provenance::AdjointOfTruncation { of: Box::new(other.clone()) },
        };
        Self {
            entries: self.entries.adjoint(),
            provenance,
        }
    }

    pub fn apply(&self, f: &TruncatedSeries) -> Result<TruncatedSeries> {
        if f.order() != self.order() {
            return Err(Error::DimensionMismatch {
                expected: self.order(),
                found: f.order(),
            });
        }
        let v = CVector::from_column_slice(f.coeffs());
        TruncatedSeries::new((&self.entries * v).iter().copied().collect())
    }

    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        if rhs.order() != self.order() {
            return Err(Error::DimensionMismatch {
                expected: self.order(),
                found: rhs.order(),
            });
        }
        Ok(Self {
            entries: &self.entries * &rhs.entries,
            provenance: Provenance::Product {
                factors: vec![self.provenance.clone(), rhs.provenance.clone()],
            },
        })
    }

    /// `U T U*` for a diagonal unitary `U = diag(phases)`.
    pub fn conjugate_by_diagonal(&self, phases: &[Complex64]) -> Result<Self> {
        if phases.len() != self.entries.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.entries.nrows(),
                found: phases.len(),
            });
        }
        let entries =
            CMatrix::from_fn(self.entries.nrows(), self.entries.ncols(), |j, k| {
                phases[j] * self.entries[(j, k)] * phases[k].conj()
            });
        Ok(Self {
            entries,
            provenance: Provenance::Other { label: "diagonal unitary conjugate".into() },
        })
    }
}

/// Multiplication by `ψ`: entry `(j, k) = ψ_{j−k}` for `j ≥ k`.
pub fn toeplitz_matrix(psi: &TruncatedSeries, order: usize) -> OperatorMatrix {
    toeplitz_labelled(psi, order, "psi")
}

fn toeplitz_labelled(psi: &TruncatedSeries, order: usize, label: &str) -> OperatorMatrix {
    let entries = CMatrix::from_fn(order + 1, order + 1, |j, k| {
        if j >= k { psi.coeff(j - k) } else { Complex64::new(0.0, 0.0) }
    });
    OperatorMatrix {
        entries,
        provenance: Provenance::Toeplitz { symbol: label.into() },
    }
}

/// Rejects `φ` unless its sup-norm estimate is below one.
pub fn ensure_bounded(phi: &SymbolSpec) -> Result<f64> {
    let sup = sup_norm_estimate(phi, SUP_NORM_GRID)?;
    if sup >= 1.0 {
        return Err(Error::UnboundedOperator(sup));
    }
    Ok(sup)
}

/// Finite section of `f ↦ ψ·(f^{(n)} ∘ φ)`.
///
/// Column `k ≥ n` holds `ψ · k!/(k−n)! · φ^{k−n}`; columns `k < n` are zero.
pub fn comp_diff_matrix(
    psi: &SymbolSpec,
    phi: &SymbolSpec,
    n: usize,
    order: usize,
) -> Result<OperatorMatrix> {
    if n < 1 {
        return Err(Error::InvalidOrder(n));
    }
    ensure_bounded(phi)?;
    let entries = comp_diff_entries(&psi.series(order)?, &phi.series(order)?, n, order);
    OperatorMatrix::new(
        entries,
        Provenance::CompositionDifferentiation {
            psi: psi.clone(),
            phi: phi.clone(),
            n,
        },
    )
}

fn comp_diff_entries(psi: &TruncatedSeries, phi: &TruncatedSeries, n: usize, order: usize) -> CMatrix {
    let mut entries = CMatrix::zeros(order + 1, order + 1);
    let phi = phi.with_order(order);
    let mut column = psi.with_order(order); // ψ·φ^{k−n}
    for k in n..=order {
        let weight = Complex64::new(falling_factorial(k, n), 0.0);
        for j in 0..=order {
            entries[(j, k)] = column.coeff(j) * weight;
        }
        if k < order {
            column = column.multiply(&phi);
        }
    }
    entries
}

/// Coefficients of `K_w` (order 0) or `K_w^{[m]}` on the monomial basis.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelVector {
    pub point: Complex64,
    pub order: usize,
    pub coeffs: TruncatedSeries,
}

pub fn kernel_vector(w: Complex64, m: usize, truncation: usize) -> Result<KernelVector> {
    if !(w.norm() < 1.0) {
        return Err(Error::PointOutsideDisk(format_complex(w)));
    }
    let wbar = w.conj();
    let coeffs = if m == 0 {
        let mut v = Vec::with_capacity(truncation + 1);
        let mut p = Complex64::new(1.0, 0.0);
        for _ in 0..=truncation {
            v.push(p);
            p *= wbar;
        }
        TruncatedSeries::new(v)?
    } else {
        let numer = TruncatedSeries::monomial(Complex64::new(factorial(m), 0.0), m, truncation);
        let lin = TruncatedSeries::from_coeffs(&[Complex64::new(1.0, 0.0), -wbar], truncation)?;
        expand_rational(&numer, &lin.power(m + 1), truncation)?
    };
    Ok(KernelVector { point: w, order: m, coeffs })
}

/// Closed form `conj(ψ(w)) · K^{[n]}_{φ(w)}` of the adjoint applied to `K_w`.
pub fn adjoint_on_kernel(
    psi: &SymbolSpec,
    phi: &SymbolSpec,
    n: usize,
    w: Complex64,
    truncation: usize,
) -> Result<TruncatedSeries> {
    if !(w.norm() < 1.0) {
        return Err(Error::PointOutsideDisk(format_complex(w)));
    }
    let image = phi.eval(w);
    let kernel = kernel_vector(image, n, truncation)?;
    Ok(kernel.coeffs.scale(psi.eval(w).conj()))
}

/// The three factors `T_g`, `D_{σ,n}`, `T_h^*` of the adjoint of
/// `D_{ψ,φ,n}` for `ψ = z^n ψ₁` and linear-fractional `φ`, with
/// `g = z^n/(−b̄z + d̄)^{n+1}` and `h = ψ₁·(cz + d)^{n+1}`.
#[derive(Clone, Debug)]
pub struct CowenFactors {
    pub g: TruncatedSeries,
    pub h: TruncatedSeries,
    pub sigma: LinearFractionalMap,
    pub toeplitz_g: OperatorMatrix,
    pub comp_diff_sigma: OperatorMatrix,
    pub toeplitz_h_adjoint: OperatorMatrix,
}

pub fn cowen_factors(
    psi: &TruncatedSeries,
    phi: &LinearFractionalMap,
    n: usize,
    order: usize,
) -> Result<CowenFactors> {
    if n < 1 {
        return Err(Error::InvalidOrder(n));
    }
    let psi = psi.with_order(order);
    let psi1 = factor_monomial(&psi, n, EXACT_TOL)?;
    ensure_bounded(&SymbolSpec::LinearFractional(*phi))?;
    let (_, b, c, d) = phi.params();
    if d.norm() <= b.norm() {
        return Err(Error::PoleInsideDisk(format!(
            "g-symbol pole at d̄/b̄ = {}",
            format_complex(d.conj() / b.conj())
        )));
    }
    let one = Complex64::new(1.0, 0.0);
    let g_denom = TruncatedSeries::from_coeffs(&[d.conj(), -b.conj()], order)?.power(n + 1);
    let g = expand_rational(&TruncatedSeries::monomial(one, n, order), &g_denom, order)?;
    let h = psi1.multiply(&TruncatedSeries::from_coeffs(&[d, c], order)?.power(n + 1));

    let sigma = phi.sigma();
    let sigma_spec = SymbolSpec::LinearFractional(sigma);
    ensure_bounded(&sigma_spec)?;
    let comp_diff_sigma = OperatorMatrix::new(
        comp_diff_entries(&TruncatedSeries::constant(one, order), &sigma.series(order)?, n, order),
        Provenance::CompositionDifferentiation {
            psi: SymbolSpec::constant(one),
            phi: sigma_spec,
            n,
        },
    )?;
    Ok(CowenFactors {
        toeplitz_g: toeplitz_labelled(&g, order, "g"),
        toeplitz_h_adjoint: toeplitz_labelled(&h, order, "h").adjoint(),
        comp_diff_sigma,
        g,
        h,
        sigma,
    })
}

/// `T_g · D_{σ,n} · T_h^*`, the factorized adjoint of `D_{ψ,φ,n}`.
pub fn cowen_adjoint_factorization(
    psi: &TruncatedSeries,
    phi: &LinearFractionalMap,
    n: usize,
    order: usize,
) -> Result<OperatorMatrix> {
    let f = cowen_factors(psi, phi, n, order)?;
    let entries = f.toeplitz_g.entries() * f.comp_diff_sigma.entries() * f.toeplitz_h_adjoint.entries();
    OperatorMatrix::new(
        entries,
        Provenance::CowenFactorization {
            phi: *phi,
            sigma: f.sigma,
            n,
            factors: vec!["T_g".into(), "D_{sigma,n}".into(), "T_h^*".into()],
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff_leading;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn lfm(a: Complex64, b: Complex64, cc: Complex64, d: Complex64) -> LinearFractionalMap {
        LinearFractionalMap::new(a, b, cc, d).unwrap()
    }

    #[test]
    fn toeplitz_of_one_is_identity() {
        let t = toeplitz_matrix(&TruncatedSeries::constant(c(1.0, 0.0), 6), 6);
        assert_eq!(t.entries(), &CMatrix::identity(7, 7));
    }

    #[test]
    fn toeplitz_of_z_is_subdiagonal_shift() {
        let t = toeplitz_matrix(&TruncatedSeries::monomial(c(1.0, 0.0), 1, 6), 6);
        for j in 0..7 {
            for k in 0..7 {
                let expected = if j == k + 1 { 1.0 } else { 0.0 };
                assert_eq!(t.entries()[(j, k)], c(expected, 0.0));
            }
        }
    }

    #[test]
    fn toeplitz_matches_cauchy_product_on_basis() {
        let psi = TruncatedSeries::monomial(c(3.0, 0.0), 2, 9);
        let t = toeplitz_matrix(&psi, 9);
        for k in 0..=9 {
            let e = TruncatedSeries::monomial(c(1.0, 0.0), k, 9);
            assert_eq!(t.column(k), &psi * &e);
        }
    }

    #[test]
    fn example_weighted_shift_weights() {
        let a = 0.5;
        let t = comp_diff_matrix(
            &SymbolSpec::monomial(c(1.0, 0.0), 2),
            &SymbolSpec::monomial(c(a, 0.0), 1),
            1,
            40,
        )
        .unwrap();
        for k in 0..40 {
            let w = k as f64 * a.powi(k as i32 - 1);
            for j in 0..=40 {
                let expected = if j == k + 1 { w } else { 0.0 };
                assert!((t.entries()[(j, k)] - c(expected, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn non_injective_symbol_sends_columns_to_even_degrees() {
        let t = comp_diff_matrix(
            &SymbolSpec::monomial(c(1.0, 0.0), 2),
            &SymbolSpec::monomial(c(0.5, 0.0), 2),
            1,
            40,
        )
        .unwrap();
        for k in 1..=20 {
            let w = k as f64 / 2f64.powi(k as i32 - 1);
            assert!((t.entries()[(2 * k, k)] - c(w, 0.0)).norm() < 1e-15);
            assert!((t.column(k).norm() - w).abs() < 1e-15);
        }
    }

    #[test]
    fn unweighted_operator_sends_normalized_monomial_to_one() {
        let phi = SymbolSpec::LinearFractional(lfm(c(0.3, 0.1), c(0.2, 0.0), c(0.1, 0.0), c(1.0, 0.0)));
        for n in 1..4 {
            let t = comp_diff_matrix(&SymbolSpec::constant(c(1.0, 0.0)), &phi, n, 30).unwrap();
            let f = TruncatedSeries::monomial(c(1.0 / factorial(n), 0.0), n, 30);
            let image = t.apply(&f).unwrap();
            assert_eq!(image, TruncatedSeries::constant(c(1.0, 0.0), 30));
        }
    }

    #[test]
    fn comp_diff_errors() {
        let psi = SymbolSpec::constant(c(1.0, 0.0));
        assert!(matches!(
            comp_diff_matrix(&psi, &SymbolSpec::monomial(c(1.0, 0.0), 1), 1, 10),
            Err(Error::UnboundedOperator(_))
        ));
        assert!(matches!(
            comp_diff_matrix(&psi, &SymbolSpec::monomial(c(0.5, 0.0), 1), 0, 10),
            Err(Error::InvalidOrder(0))
        ));
    }

    #[test]
    fn weight_factors_through_toeplitz() {
        let psi = SymbolSpec::real_polynomial(&[0.2, -0.5, 0.3]);
        let phi = SymbolSpec::LinearFractional(lfm(c(0.4, 0.2), c(0.1, -0.1), c(0.2, 0.0), c(1.0, 0.0)));
        let order = 48;
        let full = comp_diff_matrix(&psi, &phi, 2, order).unwrap();
        let bare = comp_diff_matrix(&SymbolSpec::constant(c(1.0, 0.0)), &phi, 2, order).unwrap();
        let prod = toeplitz_matrix(&psi.series(order).unwrap(), order).compose(&bare).unwrap();
        assert!(max_abs_diff_leading(full.entries(), prod.entries(), order + 1) < 1e-12);
    }

    #[test]
    fn kernel_vector_examples() {
        let k = kernel_vector(c(0.0, 0.0), 0, 8).unwrap();
        assert_eq!(k.coeffs, TruncatedSeries::constant(c(1.0, 0.0), 8));
        for m in 1..4 {
            let k = kernel_vector(c(0.0, 0.0), m, 8).unwrap();
            assert_eq!(k.coeffs, TruncatedSeries::monomial(c(factorial(m), 0.0), m, 8));
        }
        let k = kernel_vector(c(0.4, 0.0), 0, 20).unwrap();
        for j in 0..=20 {
            assert!((k.coeffs.coeff(j) - c(0.4f64.powi(j as i32), 0.0)).norm() < 1e-16);
        }
        assert!(matches!(kernel_vector(c(1.0, 0.0), 0, 4), Err(Error::PointOutsideDisk(_))));
    }

    #[test]
    fn higher_kernel_matches_negative_binomial_formula() {
        let w = c(0.35, -0.25);
        let m = 2;
        let k = kernel_vector(w, m, 50).unwrap();
        for j in 0..=48 {
            let binom = ((j + 1) * (j + 2)) as f64 / 2.0;
            let expected = w.conj().powi(j as i32) * 2.0 * binom;
            assert!((k.coeffs.coeff(m + j) - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn adjoint_of_shift_is_conjugated_superdiagonal() {
        let weights = [c(0.0, 0.0), c(1.0, 1.0), c(0.5, -2.0), c(0.25, 0.0)];
        let mut m = CMatrix::zeros(5, 5);
        for (k, w) in weights.iter().enumerate() {
            m[(k + 1, k)] = *w;
        }
        let t = OperatorMatrix::new(m, Provenance::Other { label: "shift".into() }).unwrap();
        let adj = t.adjoint();
        for (k, w) in weights.iter().enumerate() {
            assert_eq!(adj.entries()[(k, k + 1)], w.conj());
        }
        assert_eq!(adj.adjoint().entries(), t.entries());
        assert_eq!(OperatorMatrix::identity(4).adjoint().entries(), &CMatrix::identity(5, 5));
    }

    #[test]
    fn adjoint_of_constant_weight_example() {
        let lambda = c(1.0, 0.5);
        let a = 0.5;
        let t = comp_diff_matrix(&SymbolSpec::constant(lambda), &SymbolSpec::monomial(c(a, 0.0), 1), 1, 30)
            .unwrap();
        let adj = t.adjoint();
        for k in 0..30 {
            let expected = (lambda * a.powi(k as i32)).conj() * (k + 1) as f64;
            assert!((adj.entries()[(k + 1, k)] - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn adjoint_on_kernel_examples() {
        let z2 = SymbolSpec::monomial(c(1.0, 0.0), 2);
        let half = SymbolSpec::monomial(c(0.5, 0.0), 1);
        assert!(adjoint_on_kernel(&z2, &half, 1, c(0.0, 0.0), 10).unwrap().is_zero(0.0));

        let lambda = c(2.0, -1.0);
        let v = adjoint_on_kernel(&SymbolSpec::constant(lambda), &half, 1, c(0.0, 0.0), 10).unwrap();
        assert_eq!(v, TruncatedSeries::monomial(lambda.conj(), 1, 10));

        let n = 2;
        let phi = lfm(c(1.0, 0.0), c(-0.3, 0.0), c(0.0, 0.0), c(2.0, 0.0));
        let beta = phi.zero_in_disk().unwrap();
        let psi = SymbolSpec::monomial(lambda, n);
        let v = adjoint_on_kernel(&psi, &SymbolSpec::LinearFractional(phi), n, beta, 10).unwrap();
        let mu = (lambda * beta.powi(n as i32)).conj() * factorial(n);
        assert!((v.coeff(n) - mu).norm() < 1e-15);
        assert!((0..=10).filter(|&j| j != n).all(|j| v.coeff(j).norm() < 1e-15));
    }

    #[test]
    fn factorization_for_monomial_symbols() {
        // ψ = z, φ = az: g = z, h = 1, σ = āz.
        let a = c(0.4, 0.3);
        let order = 30;
        let phi = LinearFractionalMap::affine(a, c(0.0, 0.0)).unwrap();
        let psi = TruncatedSeries::monomial(c(1.0, 0.0), 1, order);
        let f = cowen_factors(&psi, &phi, 1, order).unwrap();
        assert_eq!(f.g, TruncatedSeries::monomial(c(1.0, 0.0), 1, order));
        assert_eq!(f.h, TruncatedSeries::constant(c(1.0, 0.0), order));
        assert_eq!(f.sigma, LinearFractionalMap::affine(a.conj(), c(0.0, 0.0)).unwrap());

        let fac = cowen_adjoint_factorization(&psi, &phi, 1, order).unwrap();
        let adj = comp_diff_matrix(
            &SymbolSpec::monomial(c(1.0, 0.0), 1),
            &SymbolSpec::LinearFractional(phi),
            1,
            order,
        )
        .unwrap()
        .adjoint();
        assert!(max_abs_diff_leading(fac.entries(), adj.entries(), order + 1) < 1e-14);

        // Both sides send K_w to w̄ z / (1 − ā w̄ z)².
        let w = c(0.2, -0.5);
        let kw = kernel_vector(w, 0, order).unwrap().coeffs;
        let image = fac.apply(&kw).unwrap();
        let q = (a * w).conj();
        for j in 1..order - 10 {
            let expected = w.conj() * q.powi(j as i32 - 1) * j as f64;
            assert!((image.coeff(j) - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn factorization_rejects_degenerate_and_nondivisible_weights() {
        let phi = LinearFractionalMap::affine(c(0.5, 0.0), c(0.0, 0.0)).unwrap();
        assert!(matches!(
            cowen_adjoint_factorization(&TruncatedSeries::zeros(10), &phi, 1, 10),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            cowen_adjoint_factorization(&TruncatedSeries::constant(c(1.0, 0.0), 10), &phi, 1, 10),
            Err(Error::NotDivisible { .. })
        ));
    }

    #[test]
    fn factorization_of_remark_example_builds() {
        let phi = lfm(c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), c(5.0, 0.0));
        let psi = TruncatedSeries::monomial(c(2.0, 0.0), 1, 40);
        let fac = cowen_adjoint_factorization(&psi, &phi, 1, 40).unwrap();
        let adj = comp_diff_matrix(
            &SymbolSpec::monomial(c(2.0, 0.0), 1),
            &SymbolSpec::LinearFractional(phi),
            1,
            40,
        )
        .unwrap()
        .adjoint();
        assert!(max_abs_diff_leading(fac.entries(), adj.entries(), 30) < 1e-10);
    }

    #[test]
    fn apply_rejects_dimension_mismatch() {
        let t = OperatorMatrix::identity(4);
        assert!(t.apply(&TruncatedSeries::zeros(3)).is_err());
        let f = TruncatedSeries::from_coeffs(&[c(1.0, 2.0), c(3.0, 0.0)], 4).unwrap();
        assert_eq!(t.apply(&f).unwrap(), f);
    }
}
