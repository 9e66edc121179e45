//! Finite-section tests of posinormality and coposinormality.
//!
//! Three numerical views of the same property are computed for a truncated
//! operator `T`: inclusion of `Range(T)` in `Range(T*)` (least squares), a
//! bound `TT* ≤ λ² T*T` (regularized pencil), and inclusion of `Kernel(T)` in
//! `Kernel(T*)`. The analytic necessary conditions are evaluated first; a
//! failed one settles the verdict without numerics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector};
use crate::operators::{comp_diff_matrix, OperatorMatrix};
use crate::series::{polynomial_roots, SymbolSpec, EXACT_TOL};

pub const DEFAULT_EPS_SWEEP: [f64; 3] = [1e-6, 1e-8, 1e-10];
/// Relative spread of the pencil maximum across the sweep above which no
/// finite λ is reported.
pub const LAMBDA_DIVERGENCE_SPREAD: f64 = 0.5;
/// Trailing basis vectors excluded from the λ pencil. The last column of a
/// finite section loses its whole image under degree-raising operators.
pub const LAMBDA_EDGE_MARGIN: usize = 1;
/// Residual band `[tol, 10·tol)` treated as marginal.
pub const MARGINAL_FACTOR: f64 = 10.0;
pub const DEFAULT_DISK_SAMPLES: usize = 64;

const PROBE_FLOOR: f64 = 1e-14;
const ROOT_EDGE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative least-squares residual below which a probe counts as in range.
    pub range_tol: f64,
    /// Relative singular-value cutoff for ranks and null spaces.
    pub rank_tol: f64,
    /// Coefficient comparison tolerance for identity checks.
    pub coeff_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            range_tol: 1e-6,
            rank_tol: 1e-10,
            coeff_tol: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("range_tol", self.range_tol),
            ("rank_tol", self.rank_tol),
            ("coeff_tol", self.coeff_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("tolerances.{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CertifiedNotPosinormal,
    NumericallyPosinormalConsistent,
    NumericallyNotPosinormal,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::CertifiedNotPosinormal => "certified_not_posinormal",
            Verdict::NumericallyPosinormalConsistent => "numerically_posinormal_consistent",
            Verdict::NumericallyNotPosinormal => "numerically_not_posinormal",
            Verdict::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateResult {
    pub name: String,
    pub applicable: bool,
    pub passed: bool,
    pub detail: String,
}

impl CertificateResult {
    fn new(name: &str, applicable: bool, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            applicable,
            passed,
            detail: detail.into(),
        }
    }

    pub fn fired(&self) -> bool {
        self.applicable && !self.passed
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub description: String,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeResidual {
    pub probe: usize,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct RangeInclusion {
    pub max_residual: f64,
    /// Worst probes first.
    pub witnesses: Vec<ProbeResidual>,
    /// Column `k` solves `T* x ≈ T e_k`; together they approximate the factor
    /// `A` in `T = T* A` on the probe subspace.
    pub douglas_factor: CMatrix,
    pub degenerate: bool,
}

/// Projects each probe `T e_k` (`k < probe_dim`) onto the numerical range of
/// `T*` and returns the relative residuals.
pub fn range_inclusion_test(t: &OperatorMatrix, probe_dim: usize, rank_tol: f64) -> Result<RangeInclusion> {
    let size = t.order() + 1;
    if probe_dim > size {
        return Err(Error::Validation(format!("probe_dim {probe_dim} exceeds matrix size {size}")));
    }
    let solver = LeastSquares::new(&t.entries().adjoint(), rank_tol)?;
    let mut residuals = Vec::new();
    let mut factor = CMatrix::zeros(size, probe_dim);
    for k in 0..probe_dim {
        let v: CVector = t.entries().column(k).into_owned();
        if v.norm() < PROBE_FLOOR {
            continue;
        }
        let (x, residual) = solver.solve(&v);
        factor.set_column(k, &x);
        residuals.push(ProbeResidual { probe: k, residual });
    }
    residuals.sort_by(|a, b| b.residual.total_cmp(&a.residual));
    let max_residual = residuals.first().map_or(0.0, |p| p.residual);
    residuals.truncate(3);
    Ok(RangeInclusion {
        max_residual,
        degenerate: t.entries().iter().all(|z| *z == Complex64::new(0.0, 0.0)),
        witnesses: residuals,
        douglas_factor: factor,
    })
}

/// Relative residual of the least-squares projection of `v` onto the range
/// of `T*`.
pub fn probe_residual(t: &OperatorMatrix, v: &CVector, rank_tol: f64) -> Result<f64> {
    if v.len() != t.order() + 1 {
        return Err(Error::DimensionMismatch {
            expected: t.order() + 1,
            found: v.len(),
        });
    }
    if v.norm() < PROBE_FLOOR {
        return Ok(0.0);
    }
    Ok(LeastSquares::new(&t.entries().adjoint(), rank_tol)?.solve(v).1)
}

/// Truncated-SVD least squares on the column-equilibrated matrix.
struct LeastSquares {
    scale: Vec<f64>,
    u: CMatrix,
    v: CMatrix,
    inv_sigma: Vec<f64>,
}

impl LeastSquares {
    fn new(a: &CMatrix, rank_tol: f64) -> Result<Self> {
        let scale = linalg::column_scaling(a);
        let dec = linalg::svd(&linalg::scale_columns(a, &scale), true, true)?;
        let u_full = dec.u.expect("requested U");
        let v_t = dec.v_t.expect("requested V");
        let smax = dec.singular_values.max();
        let keep: Vec<usize> = (0..dec.singular_values.len())
            .filter(|&i| smax > 0.0 && dec.singular_values[i] > rank_tol * smax)
            .collect();
        Ok(Self {
            u: CMatrix::from_fn(a.nrows(), keep.len(), |r, c| u_full[(r, keep[c])]),
            v: CMatrix::from_fn(a.ncols(), keep.len(), |r, c| v_t[(keep[c], r)].conj()),
            inv_sigma: keep.iter().map(|&i| 1.0 / dec.singular_values[i]).collect(),
            scale,
        })
    }

    fn solve(&self, b: &CVector) -> (CVector, f64) {
        let coeffs = self.u.adjoint() * b;
        let residual = (b - &self.u * &coeffs).norm() / b.norm();
        let weighted = CVector::from_fn(coeffs.len(), |i, _| coeffs[i] * self.inv_sigma[i]);
        let mut x = &self.v * weighted;
        for (xi, s) in x.iter_mut().zip(&self.scale) {
            *xi *= *s;
        }
        (x, residual)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    pub lambda: f64,
    /// `(max μ − min μ) / max μ` over the sweep.
    pub stability: f64,
    /// `(ε, μ(ε))` pairs in sweep order.
    pub sweep: Vec<(f64, f64)>,
}

impl LambdaEstimate {
    pub fn diverging(&self) -> bool {
        self.stability > LAMBDA_DIVERGENCE_SPREAD
    }
}

pub fn lambda_bound_estimate(t: &OperatorMatrix, eps_sweep: &[f64]) -> Result<LambdaEstimate> {
    lambda_bound_estimate_with_margin(t, eps_sweep, LAMBDA_EDGE_MARGIN)
}

/// Largest eigenvalue `μ(ε)` of `(T*T + εI)^{-1/2} TT* (T*T + εI)^{-1/2}` over
/// the leading `N + 1 − margin` basis vectors.
///
/// The pencil is formed in coordinates where every nonzero column of `T` has
/// unit norm. This is a congruence, so the generalized eigenvalues are
/// unchanged, but `ε` then regularizes relative to each column's own scale
/// rather than to the largest one. `λ = √μ` at the smallest `ε`.
pub fn lambda_bound_estimate_with_margin(
    t: &OperatorMatrix,
    eps_sweep: &[f64],
    margin: usize,
) -> Result<LambdaEstimate> {
    if eps_sweep.is_empty() || eps_sweep.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Validation("eps sweep must be nonempty and positive".into()));
    }
    let size = t.order() + 1;
    let dim = size.saturating_sub(margin).max(1);
    let entries = t.entries();

    let domain = entries.columns(0, dim).into_owned();
    let scale = linalg::column_scaling(&domain);
    let b = linalg::scale_columns(&domain, &scale);
    let c = linalg::scale_columns(&entries.rows(0, dim).adjoint(), &scale);

    let dec = linalg::svd(&b, false, true)?;
    let v_t = dec.v_t.expect("requested V");
    let cw = &c * v_t.adjoint();

    let mut sweep = Vec::with_capacity(eps_sweep.len());
    for &eps in eps_sweep {
        let mut k = cw.clone();
        for (i, mut col) in k.column_iter_mut().enumerate() {
            let s = dec.singular_values[i];
            col /= Complex64::new((s * s + eps).sqrt(), 0.0);
        }
        let top = linalg::largest_singular_value(&k)?;
        sweep.push((eps, top * top));
    }
    let mu_max = sweep.iter().map(|p| p.1).fold(0.0, f64::max);
    let mu_min = sweep.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let smallest_eps = sweep
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|p| p.1)
        .unwrap_or(0.0);
    Ok(LambdaEstimate {
        lambda: smallest_eps.sqrt(),
        stability: if mu_max > 0.0 { (mu_max - mu_min) / mu_max } else { 0.0 },
        sweep,
    })
}

#[derive(Clone, Debug)]
pub struct KernelWitness {
    pub vector: CVector,
    /// `‖T* u‖` for the unit vector `u`.
    pub violation: f64,
}

#[derive(Clone, Debug)]
pub struct KernelInclusion {
    pub passed: bool,
    pub null_dim: usize,
    /// Violating directions, strongest first.
    pub witnesses: Vec<KernelWitness>,
}

impl KernelInclusion {
    pub fn witness(&self) -> Option<&CVector> {
        self.witnesses.first().map(|w| &w.vector)
    }
}

/// Checks `Kernel(T) ⊆ Kernel(T*)` on the numerical null space of `T`.
///
/// Violating directions are the right singular vectors of `T*` restricted to
/// the null space whose singular values exceed `rank_tol · ‖T‖`.
pub fn kernel_inclusion_test(t: &OperatorMatrix, rank_tol: f64) -> Result<KernelInclusion> {
    let size = t.order() + 1;
    let null = linalg::null_space(t.entries(), rank_tol)?;
    if null.is_empty() {
        return Ok(KernelInclusion {
            passed: true,
            null_dim: 0,
            witnesses: Vec::new(),
        });
    }
    let basis = linalg::columns_to_matrix(size, &null);
    let norm = linalg::largest_singular_value(t.entries())?;
    let image = t.entries().adjoint() * &basis;
    let dec = linalg::svd(&image, false, true)?;
    let v_t = dec.v_t.expect("requested V");
    let mut witnesses: Vec<KernelWitness> = (0..dec.singular_values.len())
        .filter(|&i| dec.singular_values[i] > rank_tol * norm)
        .map(|i| {
            let coords = CVector::from_fn(null.len(), |r, _| v_t[(i, r)].conj());
            KernelWitness {
                vector: &basis * coords,
                violation: dec.singular_values[i],
            }
        })
        .collect();
    witnesses.sort_by(|a, b| b.violation.total_cmp(&a.violation));
    Ok(KernelInclusion {
        passed: witnesses.is_empty(),
        null_dim: null.len(),
        witnesses,
    })
}

fn coefficient_scale(coeffs: &[Complex64]) -> f64 {
    coeffs.iter().map(|c| c.norm()).fold(1.0, f64::max)
}

/// Necessary conditions for posinormality of `D_{ψ,φ,n}`.
///
/// * `psi_derivatives_vanish`: `ψ^{(m)}(0) = 0` for `m < n`.
/// * `unweighted_operator`: fires when `ψ` is a nonzero constant.
/// * `phi_zero_in_disk`: for `ψ = λzⁿ` and linear-fractional `φ`, `φ` must
///   vanish somewhere in the disk.
pub fn posinormal_certificates(psi: &SymbolSpec, phi: &SymbolSpec, n: usize) -> Result<Vec<CertificateResult>> {
    let series = psi.series(n.max(1))?;
    let scale = coefficient_scale(series.coeffs());
    let offending: Vec<usize> = (0..n).filter(|&m| series.coeff(m).norm() > EXACT_TOL * scale).collect();
    let c1 = if offending.is_empty() {
        CertificateResult::new("psi_derivatives_vanish", true, true, format!("psi^(m)(0) = 0 for m < {n}"))
    } else {
        CertificateResult::new(
            "psi_derivatives_vanish",
            true,
            false,
            format!("psi^(m)(0) != 0 for m in {offending:?}"),
        )
    };

    let constant = matches!(psi.monomial_form(), Some((_, 0)));
    let c2 = if constant {
        CertificateResult::new("unweighted_operator", true, false, "psi is a nonzero constant")
    } else {
        CertificateResult::new("unweighted_operator", false, true, "psi is not constant")
    };

    let c3 = match (psi.monomial_form(), phi.as_linear_fractional()) {
        (Some((_, m)), Some(map)) if m == n => match map.zero_in_disk() {
            Some(beta) => CertificateResult::new(
                "phi_zero_in_disk",
                true,
                true,
                format!("phi({}) = 0", crate::series::format_complex(beta)),
            ),
            None => CertificateResult::new("phi_zero_in_disk", true, false, "phi has no zero in the open disk"),
        },
        _ => CertificateResult::new(
            "phi_zero_in_disk",
            false,
            true,
            "requires psi = lambda z^n and linear-fractional phi",
        ),
    };
    Ok(vec![c1, c2, c3])
}

/// Necessary conditions for coposinormality of `D_{ψ,φ,n}`.
///
/// * `psi_no_zeros_in_punctured_disk`
/// * `zero_multiplicity_at_origin`: at most `n`.
/// * `phi_injective`: decided for linear-fractional and monomial `φ` only.
///
/// `disk_samples` sets the polar grid used to report the smallest sampled
/// `|ψ|` on `0.05 ≤ |z| ≤ 0.95` alongside the root test.
pub fn coposinormal_certificates(
    psi: &SymbolSpec,
    phi: &SymbolSpec,
    n: usize,
    disk_samples: usize,
) -> Result<Vec<CertificateResult>> {
    let multiplicity = psi
        .zero_multiplicity_at_origin()
        .ok_or_else(|| Error::Degenerate("psi is identically zero".into()))?;

    let roots = match psi {
        SymbolSpec::Polynomial { coeffs } => polynomial_roots(&coeffs[multiplicity..], 0.0)?,
        SymbolSpec::LinearFractional(map) => {
            let (a, b, _, _) = map.params();
            if a.norm() > 0.0 { vec![-b / a] } else { Vec::new() }
        }
    };
    let inside: Vec<Complex64> = roots
        .into_iter()
        .filter(|r| r.norm() > ROOT_EDGE && r.norm() < 1.0 - ROOT_EDGE)
        .collect();
    let sampled_min = sampled_min_modulus(psi, disk_samples.max(4));
    let k1 = if inside.is_empty() {
        CertificateResult::new(
            "psi_no_zeros_in_punctured_disk",
            true,
            true,
            format!("no zeros; min sampled |psi| = {sampled_min:.3e}"),
        )
    } else {
        let list: Vec<String> = inside.iter().map(|r| crate::series::format_complex(*r)).collect();
        CertificateResult::new(
            "psi_no_zeros_in_punctured_disk",
            true,
            false,
            format!("zeros at [{}]", list.join(", ")),
        )
    };

    let k2 = CertificateResult::new(
        "zero_multiplicity_at_origin",
        true,
        multiplicity <= n,
        format!("multiplicity {multiplicity}, order {n}"),
    );

    let k3 = if phi.as_linear_fractional().is_some() {
        CertificateResult::new("phi_injective", true, true, "linear-fractional maps are injective")
    } else if let Some((_, m)) = phi.monomial_form() {
        CertificateResult::new("phi_injective", true, m == 1, format!("phi = c z^{m}"))
    } else {
        CertificateResult::new(
            "phi_injective",
            false,
            true,
            "warning: injectivity is only decided for linear-fractional and monomial phi",
        )
    };
    Ok(vec![k1, k2, k3])
}

fn sampled_min_modulus(psi: &SymbolSpec, samples: usize) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..samples {
        let r = 0.05 + 0.9 * i as f64 / (samples - 1) as f64;
        for j in 0..samples {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / samples as f64;
            best = best.min(psi.eval(Complex64::from_polar(r, theta)).norm());
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub tolerances: Tolerances,
    /// Defaults to `N / 4`.
    pub probe_dim: Option<usize>,
    pub eps_sweep: Vec<f64>,
    pub disk_samples: usize,
    /// Re-run numerics at `2N` for verdicts that are not certified.
    pub doubling: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            probe_dim: None,
            eps_sweep: DEFAULT_EPS_SWEEP.to_vec(),
            disk_samples: DEFAULT_DISK_SAMPLES,
            doubling: true,
        }
    }
}

impl AnalysisOptions {
    pub fn probe_dim_for(&self, order: usize) -> usize {
        self.probe_dim.unwrap_or(order / 4).min(order + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoublingCheck {
    pub truncation_order: usize,
    pub verdict: Verdict,
    pub max_range_residual: f64,
    pub lambda_estimate: Option<f64>,
    /// Verdict changed, or the residual moved by more than `10 · range_tol`.
    pub drift: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosinormalityReport {
    pub verdict: Verdict,
    pub lambda_estimate: Option<f64>,
    pub lambda_stability: Option<f64>,
    pub max_range_residual: Option<f64>,
    pub kernel_inclusion_passed: Option<bool>,
    pub witnesses: Vec<Witness>,
    pub certificates: Vec<CertificateResult>,
    pub truncation_order: usize,
    pub probe_dim: usize,
    pub tolerances: Tolerances,
    pub doubling: Option<DoublingCheck>,
}

/// Verdict from the numerical evidence alone.
pub fn classify(kernel_passed: bool, max_residual: f64, lambda_diverging: bool, range_tol: f64) -> Verdict {
    if !kernel_passed || max_residual >= MARGINAL_FACTOR * range_tol {
        Verdict::NumericallyNotPosinormal
    } else if max_residual >= range_tol || lambda_diverging {
        Verdict::Inconclusive
    } else {
        Verdict::NumericallyPosinormalConsistent
    }
}

#[derive(Clone, Debug)]
struct Numerics {
    verdict: Verdict,
    range: RangeInclusion,
    lambda: LambdaEstimate,
    kernel: KernelInclusion,
}

fn numerics(t: &OperatorMatrix, opts: &AnalysisOptions) -> Result<Numerics> {
    let tol = opts.tolerances;
    let range = range_inclusion_test(t, opts.probe_dim_for(t.order()), tol.rank_tol)?;
    let lambda = lambda_bound_estimate(t, &opts.eps_sweep)?;
    let kernel = kernel_inclusion_test(t, tol.rank_tol)?;
    let verdict = classify(kernel.passed, range.max_residual, lambda.diverging(), tol.range_tol);
    Ok(Numerics {
        verdict,
        range,
        lambda,
        kernel,
    })
}

/// Describes a unit vector by its dominant monomial.
pub fn describe_vector(v: &CVector) -> String {
    let (k, c) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(k, c)| (k, c.norm()))
        .unwrap_or((0, 0.0));
    format!("dominant monomial z^{k} (weight {c:.6})")
}

/// Decides posinormality of `t` given precomputed certificates. When
/// `rebuild` is supplied and the verdict is not certified, the numerics are
/// repeated on the matrix it returns (the same operator at twice the order).
pub fn analyze_operator(
    t: &OperatorMatrix,
    certificates: Vec<CertificateResult>,
    opts: &AnalysisOptions,
    rebuild: Option<&dyn Fn(usize) -> Result<OperatorMatrix>>,
) -> Result<PosinormalityReport> {
    let tol = opts.tolerances;
    let order = t.order();
    let probe_dim = opts.probe_dim_for(order);
    let mut report = PosinormalityReport {
        verdict: Verdict::CertifiedNotPosinormal,
        lambda_estimate: None,
        lambda_stability: None,
        max_range_residual: None,
        kernel_inclusion_passed: None,
        witnesses: Vec::new(),
        certificates,
        truncation_order: order,
        probe_dim,
        tolerances: tol,
        doubling: None,
    };
    if report.certificates.iter().any(CertificateResult::fired) {
        return Ok(report);
    }

    let num = numerics(t, opts)?;
    report.verdict = num.verdict;
    report.max_range_residual = Some(num.range.max_residual);
    report.lambda_stability = Some(num.lambda.stability);
    report.lambda_estimate = (!num.lambda.diverging()).then_some(num.lambda.lambda);
    report.kernel_inclusion_passed = Some(num.kernel.passed);
    for p in &num.range.witnesses {
        report.witnesses.push(Witness {
            description: format!("range residual of probe T e_{}", p.probe),
            value: p.residual,
        });
    }
    for w in num.kernel.witnesses.iter().take(3) {
        report.witnesses.push(Witness {
            description: format!("kernel witness, {}", describe_vector(&w.vector)),
            value: w.violation,
        });
    }
    if num.verdict == Verdict::NumericallyPosinormalConsistent {
        let factor_norm = num
            .range
            .douglas_factor
            .column_iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        report.witnesses.push(Witness {
            description: "Douglas factor A (T = T* A) max column norm on probes".into(),
            value: factor_norm,
        });
    }

    if let (true, Some(build)) = (opts.doubling, rebuild) {
        let doubled = build(2 * order)?;
        let mut single = opts.clone();
        single.probe_dim = Some(probe_dim);
        let again = numerics(&doubled, &single)?;
        let drift = again.verdict != num.verdict
            || (again.range.max_residual - num.range.max_residual).abs() > MARGINAL_FACTOR * tol.range_tol;
        report.doubling = Some(DoublingCheck {
            truncation_order: doubled.order(),
            verdict: again.verdict,
            max_range_residual: again.range.max_residual,
            lambda_estimate: (!again.lambda.diverging()).then_some(again.lambda.lambda),
            drift,
        });
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub posinormality: PosinormalityReport,
    /// Posinormality of the adjoint.
    pub coposinormality: PosinormalityReport,
}

/// Posinormality of `D_{ψ,φ,n}` and of its adjoint at truncation `order`.
pub fn analyze(
    psi: &SymbolSpec,
    phi: &SymbolSpec,
    n: usize,
    order: usize,
    opts: &AnalysisOptions,
) -> Result<Analysis> {
    opts.tolerances.validate()?;
    if psi.is_identically_zero() {
        return Err(Error::Degenerate("psi is identically zero".into()));
    }
    let t = comp_diff_matrix(psi, phi, n, order)?;
    let build = |m: usize| comp_diff_matrix(psi, phi, n, m);
    let build_adjoint = |m: usize| comp_diff_matrix(psi, phi, n, m).map(|t| t.adjoint());
    let posinormality = analyze_operator(&t, posinormal_certificates(psi, phi, n)?, opts, Some(&build))?;
    let coposinormality = analyze_operator(
        &t.adjoint(),
        coposinormal_certificates(psi, phi, n, opts.disk_samples)?,
        opts,
        Some(&build_adjoint),
    )?;
    Ok(Analysis {
        posinormality,
        coposinormality,
    })
}
