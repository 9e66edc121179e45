//! Structural checks on operator matrices: weighted-shift detection, null
//! spaces, and direct verification of identities satisfied by the adjoint.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CVector};
use crate::operators::{adjoint_on_kernel, comp_diff_matrix, comparison_margin, kernel_vector, OperatorMatrix};
use crate::series::{factorial, LinearFractionalMap, SymbolSpec};

pub const SHIFT_TOL: f64 = 1e-12;
/// Largest `|w|` at which kernel identities are sampled.
pub const MAX_SAMPLE_RADIUS: f64 = 0.7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftProfile {
    /// Image degree minus source degree.
    pub offset: i64,
    /// `w_k = T[k + offset, k]`, zero where that row falls outside the section.
    pub weights: Vec<Complex64>,
    pub is_shift: bool,
    /// Largest column mass outside the shift pattern.
    pub max_off_pattern_mass: f64,
}

/// Looks for `T e_k = w_k e_{k+offset}` with one offset for all columns.
/// Columns without entries above `tol` are compatible with any offset.
pub fn detect_weighted_shift(t: &OperatorMatrix, tol: f64) -> ShiftProfile {
    let m = t.entries();
    let size = m.nrows() as i64;
    let mut offsets: Vec<i64> = Vec::new();
    let mut single_entry = true;
    for (k, col) in m.column_iter().enumerate() {
        let big: Vec<usize> = (0..col.len()).filter(|&i| col[i].norm() > tol).collect();
        match big.as_slice() {
            [] => {}
            [row] => offsets.push(*row as i64 - k as i64),
            _ => single_entry = false,
        }
    }
    let offset = most_common(&offsets).unwrap_or(0);
    let consistent = offsets.iter().all(|&o| o == offset);

    let mut weights = Vec::with_capacity(m.ncols());
    let mut off_mass: f64 = 0.0;
    for (k, col) in m.column_iter().enumerate() {
        let row = k as i64 + offset;
        let on = if (0..size).contains(&row) { col[row as usize] } else { Complex64::new(0.0, 0.0) };
        weights.push(on);
        let total: f64 = col.iter().map(|z| z.norm()).sum();
        off_mass = off_mass.max(total - on.norm());
    }
    ShiftProfile {
        offset,
        weights,
        is_shift: single_entry && consistent && !offsets.is_empty(),
        max_off_pattern_mass: off_mass,
    }
}

fn most_common(values: &[i64]) -> Option<i64> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let mut best: Option<(i64, usize)> = None;
    for chunk in sorted.chunk_by(|a, b| a == b) {
        if best.is_none_or(|(_, count)| chunk.len() > count) {
            best = Some((chunk[0], chunk.len()));
        }
    }
    best.map(|(v, _)| v)
}

/// Ratio bound `sup |w_{k−1}/w_k|` over consecutive nonzero weights, the
/// finite-section form of the boundedness criterion for posinormality of a
/// unilateral weighted shift. `None` if a zero weight follows a nonzero one
/// (the ratio is unbounded) or the profile is not a shift.
pub fn shift_ratio_bound(profile: &ShiftProfile, upto: usize) -> Option<f64> {
    if !profile.is_shift {
        return None;
    }
    let w = &profile.weights[..upto.min(profile.weights.len())];
    let mut bound: f64 = 0.0;
    for k in 1..w.len() {
        let (prev, cur) = (w[k - 1].norm(), w[k].norm());
        if cur == 0.0 {
            if prev != 0.0 {
                return None;
            }
            continue;
        }
        bound = bound.max(prev / cur);
    }
    Some(bound)
}

/// Orthonormal numerical null basis of `T` at relative threshold `rank_tol`.
pub fn null_space(t: &OperatorMatrix, rank_tol: f64) -> Result<Vec<CVector>> {
    linalg::null_space(t.entries(), rank_tol)
}

/// Null-space dimension of the leading `block` columns of `T`.
pub fn leading_null_dimension(t: &OperatorMatrix, block: usize, rank_tol: f64) -> Result<usize> {
    let cols = block.min(t.order() + 1);
    let sub = t.entries().columns(0, cols).into_owned();
    Ok(linalg::null_space(&sub, rank_tol)?.len())
}

/// Uniform samples from the disk `|w| ≤ radius`.
pub fn random_disk_points<R: Rng>(rng: &mut R, count: usize, radius: f64) -> Vec<Complex64> {
    (0..count)
        .map(|_| {
            let r = radius * rng.random::<f64>().sqrt();
            let theta = rng.random_range(0.0..std::f64::consts::TAU);
            Complex64::from_polar(r, theta)
        })
        .collect()
}

/// Max coefficient error between `T*·K_w` (finite section) and the closed
/// form `conj(ψ(w))·K^{[n]}_{φ(w)}`, over the leading `N + 1 − (2n + 8)`
/// coefficients and all samples.
pub fn verify_adjoint_kernel_identity(
    psi: &SymbolSpec,
    phi: &SymbolSpec,
    n: usize,
    order: usize,
    w_samples: &[Complex64],
) -> Result<f64> {
    if let Some(w) = w_samples.iter().find(|w| w.norm() > MAX_SAMPLE_RADIUS) {
        return Err(Error::PointOutsideDisk(format!(
            "sample {} exceeds radius {MAX_SAMPLE_RADIUS}",
            crate::series::format_complex(*w)
        )));
    }
    let adjoint = comp_diff_matrix(psi, phi, n, order)?.adjoint();
    let block = (order + 1).saturating_sub(comparison_margin(n));
    let errors: Result<Vec<f64>> = w_samples
        .par_iter()
        .map(|&w| {
            let kw = CVector::from_vec(kernel_vector(w, 0, order)?.coeffs.into_coeffs());
            let lhs = adjoint.entries() * kw;
            let rhs = adjoint_on_kernel(psi, phi, n, w, order)?;
            Ok((0..block).map(|j| (lhs[j] - rhs.coeffs()[j]).norm()).fold(0.0, f64::max))
        })
        .collect();
    Ok(errors?.into_iter().fold(0.0, f64::max))
}

/// Max over random unit `g` of `|(T* g)_m|`, `m < n`. Every element of the
/// adjoint's range vanishes to order `n` at the origin.
pub fn verify_range_vanishing<R: Rng>(t: &OperatorMatrix, n: usize, trials: usize, rng: &mut R) -> f64 {
    let size = t.order() + 1;
    let probes: Vec<CVector> = (0..trials)
        .map(|_| {
            let g = CVector::from_fn(size, |_, _| {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            });
            let norm = g.norm();
            g / Complex64::new(norm, 0.0)
        })
        .collect();
    let adjoint = t.entries().adjoint();
    probes
        .par_iter()
        .map(|g| {
            let f = &adjoint * g;
            (0..n.min(size)).map(|m| f[m].norm()).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuRecovery {
    pub beta: Complex64,
    /// Coefficient `n` of `T*·K_β`.
    pub mu_numeric: Complex64,
    /// `n!·conj(λ βⁿ)`.
    pub mu_formula: Complex64,
    /// Largest other coefficient of `T*·K_β` on the leading block.
    pub max_other_coefficient: f64,
}

impl MuRecovery {
    pub fn error(&self) -> f64 {
        (self.mu_numeric - self.mu_formula).norm()
    }
}

/// For `ψ = λzⁿ` and `φ(β) = 0`, the adjoint maps `K_β` to `μzⁿ`.
pub fn verify_mu_recovery(
    lambda: Complex64,
    phi: &LinearFractionalMap,
    n: usize,
    order: usize,
) -> Result<MuRecovery> {
    let beta = phi
        .zero_in_disk()
        .ok_or_else(|| Error::NotApplicable(format!("phi = {phi} has no zero in the open disk")))?;
    let psi = SymbolSpec::monomial(lambda, n);
    let adjoint = comp_diff_matrix(&psi, &SymbolSpec::LinearFractional(*phi), n, order)?.adjoint();
    let image = adjoint.entries() * CVector::from_vec(kernel_vector(beta, 0, order)?.coeffs.into_coeffs());
    let block = (order + 1).saturating_sub(comparison_margin(n));
    let max_other_coefficient = (0..block).filter(|&j| j != n).map(|j| image[j].norm()).fold(0.0, f64::max);
    Ok(MuRecovery {
        beta,
        mu_numeric: image[n],
        mu_formula: (lambda * beta.powu(n as u32)).conj() * factorial(n),
        max_other_coefficient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::toeplitz_matrix;
    use crate::series::TruncatedSeries;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn shift_weights_of_example_matrix() {
        let t = comp_diff_matrix(
            &SymbolSpec::monomial(c(1.0, 0.0), 2),
            &SymbolSpec::monomial(c(0.5, 0.0), 1),
            1,
            128,
        )
        .unwrap();
        let p = detect_weighted_shift(&t, SHIFT_TOL);
        assert!(p.is_shift);
        assert_eq!(p.offset, 1);
        for k in 0..100 {
            let oracle = k as f64 * 0.5f64.powi(k as i32 - 1);
            assert!((p.weights[k] - c(oracle, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn adjoint_shift_weights() {
        let lam = c(1.0, 0.5);
        let t = comp_diff_matrix(&SymbolSpec::constant(lam), &SymbolSpec::monomial(c(0.5, 0.0), 1), 1, 64)
            .unwrap()
            .adjoint();
        let p = detect_weighted_shift(&t, SHIFT_TOL);
        assert!(p.is_shift && p.offset == 1);
        for k in 0..60 {
            let oracle = (lam * 0.5f64.powi(k as i32)).conj() * (k + 1) as f64;
            assert!((p.weights[k] - oracle).norm() < 1e-12);
        }
    }

    #[test]
    fn doubling_map_is_not_a_shift() {
        let t = comp_diff_matrix(
            &SymbolSpec::monomial(c(1.0, 0.0), 2),
            &SymbolSpec::monomial(c(0.5, 0.0), 2),
            1,
            64,
        )
        .unwrap();
        assert!(!detect_weighted_shift(&t, SHIFT_TOL).is_shift);
    }

    #[test]
    fn toeplitz_shift_has_constant_weights() {
        let t = toeplitz_matrix(&TruncatedSeries::monomial(c(0.3, -0.2), 1, 32), 32);
        let p = detect_weighted_shift(&t, SHIFT_TOL);
        assert!(p.is_shift && p.offset == 1);
        assert!(p.weights[..32].iter().all(|w| *w == c(0.3, -0.2)));
        assert_eq!(shift_ratio_bound(&p, 32), Some(1.0));
    }

    #[test]
    fn ratio_bound_of_example_weights() {
        let t = comp_diff_matrix(
            &SymbolSpec::monomial(c(1.0, 0.0), 2),
            &SymbolSpec::monomial(c(0.5, 0.0), 1),
            1,
            128,
        )
        .unwrap();
        let p = detect_weighted_shift(&t, SHIFT_TOL);
        let bound = shift_ratio_bound(&p, 128).unwrap();
        let oracle = (1..128).map(|k| (k - 1) as f64 / (0.5 * k as f64)).fold(0.0, f64::max);
        assert!((bound - oracle).abs() < 1e-12);
    }

    #[test]
    fn adjoint_kernel_identity_small_cases() {
        let lam = c(1.0, 0.5);
        let e = verify_adjoint_kernel_identity(
            &SymbolSpec::constant(lam),
            &SymbolSpec::monomial(c(0.5, 0.0), 1),
            1,
            64,
            &[c(0.0, 0.0)],
        )
        .unwrap();
        assert!(e < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = random_disk_points(&mut rng, 20, 0.7);
        let e = verify_adjoint_kernel_identity(
            &SymbolSpec::real_polynomial(&[0.0, 0.0, 1.0, -0.5]),
            &SymbolSpec::real_polynomial(&[0.1, 0.4]),
            2,
            128,
            &w,
        )
        .unwrap();
        assert!(e < 1e-8, "{e}");
        assert!(verify_adjoint_kernel_identity(
            &SymbolSpec::constant(lam),
            &SymbolSpec::monomial(c(0.5, 0.0), 1),
            1,
            64,
            &[c(0.8, 0.0)]
        )
        .is_err());
    }

    #[test]
    fn range_vanishing_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=3 {
            let t = comp_diff_matrix(
                &SymbolSpec::real_polynomial(&[1.0, 0.5]),
                &SymbolSpec::real_polynomial(&[0.2, 0.5]),
                n,
                64,
            )
            .unwrap();
            assert!(verify_range_vanishing(&t, n, 100, &mut rng) < 1e-12);
        }
    }

    #[test]
    fn mu_recovery_cases() {
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        let r = verify_mu_recovery(one, &LinearFractionalMap::affine(c(0.5, 0.0), zero).unwrap(), 1, 128).unwrap();
        assert!(r.mu_numeric.norm() < 1e-15 && r.mu_formula.norm() < 1e-15);

        let phi = LinearFractionalMap::new(one, c(-0.3, 0.0), zero, c(2.0, 0.0)).unwrap();
        let r = verify_mu_recovery(one, &phi, 1, 128).unwrap();
        assert!((r.mu_formula - c(0.3, 0.0)).norm() < 1e-15);
        assert!(r.error() < 1e-8 && r.max_other_coefficient < 1e-8, "{r:?}");

        let remark = LinearFractionalMap::new(one, c(2.0, 0.0), zero, c(5.0, 0.0)).unwrap();
        assert!(matches!(verify_mu_recovery(one, &remark, 1, 128), Err(Error::NotApplicable(_))));
    }
}
