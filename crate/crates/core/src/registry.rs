//! Built-in reproduction scenarios with expected outcomes.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posinormality::Verdict;
use crate::run::{run, RunReport};
use crate::scenario::{Approx, Expected, MuExpectation, Scenario};
use crate::series::{sup_norm_estimate, LinearFractionalMap, SymbolSpec, SUP_NORM_GRID};

pub const FACTORIZATION_SEED: u64 = 7;
pub const FACTORIZATION_COUNT: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub id: String,
    pub title: String,
    pub scenarios: Vec<Scenario>,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn lfm(a: Complex64, b: Complex64, cc: Complex64, d: Complex64) -> SymbolSpec {
    SymbolSpec::LinearFractional(LinearFractionalMap::new(a, b, cc, d).expect("registry map is nondegenerate"))
}

fn affine(a: f64, b: f64) -> SymbolSpec {
    lfm(c(a, 0.0), c(b, 0.0), c(0.0, 0.0), c(1.0, 0.0))
}

/// `max_{1 ≤ k < N} |w_{k−1}/w_k|` for `w_k = k a^{k−1}`.
pub fn shift_ratio_oracle(a: f64, order: usize) -> f64 {
    (1..order)
        .map(|k| (k - 1) as f64 / (k as f64 * a))
        .fold(0.0, f64::max)
}

fn entry(id: &str, title: &str, scenarios: Vec<Scenario>) -> RegistryEntry {
    RegistryEntry {
        id: id.into(),
        title: title.into(),
        scenarios,
    }
}

fn random_in_disk<R: Rng>(rng: &mut R, radius: f64) -> Complex64 {
    Complex64::from_polar(
        radius * rng.random::<f64>().sqrt(),
        rng.random_range(0.0..std::f64::consts::TAU),
    )
}

/// Seeded triples `(zⁿψ₁, φ, n)` with `deg ψ₁ ≤ 3`, linear-fractional `φ`
/// of sup-norm at most 0.8 and `|d| > |b|`, `n ∈ {1, 2, 3}`.
pub fn factorization_triples(seed: u64, count: usize) -> Vec<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let n = rng.random_range(1..=3usize);
        let degree = rng.random_range(0..=3usize);
        let mut coeffs = vec![c(0.0, 0.0); n];
        coeffs.extend((0..=degree).map(|_| random_in_disk(&mut rng, 1.0)));
        let (a, b, cc) = (
            random_in_disk(&mut rng, 0.6),
            random_in_disk(&mut rng, 0.4),
            random_in_disk(&mut rng, 0.4),
        );
        let Ok(map) = LinearFractionalMap::new(a, b, cc, c(1.0, 0.0)) else {
            continue;
        };
        let phi = SymbolSpec::LinearFractional(map);
        match sup_norm_estimate(&phi, SUP_NORM_GRID) {
            Ok(sup) if sup <= 0.8 => {}
            _ => continue,
        }
        let psi = SymbolSpec::polynomial(coeffs).expect("nonempty coefficients");
        let name = format!("R7.{}", out.len() + 1);
        out.push(Scenario::new(&name, psi, phi, n).with_expected(Expected {
            adjoint_factorization_max: Some(1e-8),
            ..Expected::default()
        }));
    }
    out
}

pub fn registry() -> Vec<RegistryEntry> {
    use Verdict::*;
    let one = c(1.0, 0.0);
    let zero = c(0.0, 0.0);
    let half_z = SymbolSpec::monomial(c(0.5, 0.0), 1);

    let r1 = Scenario::new("R1", SymbolSpec::monomial(one, 2), half_z.clone(), 1).with_expected(Expected {
        posinormality: Some(NumericallyPosinormalConsistent),
        coposinormality: Some(CertifiedNotPosinormal),
        shift_offset: Some(1),
        lambda_estimate: Some(Approx {
            value: shift_ratio_oracle(0.5, 128),
            tol: 1e-6,
        }),
        ..Expected::default()
    });

    let weighted = Scenario::new("R2.weighted", SymbolSpec::constant(c(1.0, 0.5)), half_z.clone(), 1).with_expected(
        Expected {
            posinormality: Some(CertifiedNotPosinormal),
            coposinormality: Some(NumericallyPosinormalConsistent),
            adjoint_shift_offset: Some(1),
            ..Expected::default()
        },
    );
    let unweighted = Scenario::new("R2.unweighted", SymbolSpec::constant(one), half_z.clone(), 1).with_expected(
        Expected {
            posinormality: Some(CertifiedNotPosinormal),
            coposinormality: Some(NumericallyPosinormalConsistent),
            ..Expected::default()
        },
    );

    let r3 = Scenario::new("R3", SymbolSpec::monomial(one, 2), SymbolSpec::monomial(c(0.5, 0.0), 2), 1)
        .with_expected(Expected {
            coposinormality: Some(CertifiedNotPosinormal),
            ..Expected::default()
        });

    let mut r4 = Vec::new();
    for n in [1, 2] {
        for order in [64, 128] {
            r4.push(
                Scenario::new(&format!("R4.n{n}.N{order}"), SymbolSpec::constant(one), half_z.clone(), n)
                    .with_truncation(order)
                    .with_expected(Expected {
                        posinormality: Some(CertifiedNotPosinormal),
                        ..Expected::default()
                    }),
            );
        }
    }

    let remark_phi = lfm(one, c(2.0, 0.0), zero, c(5.0, 0.0));
    let r5 = Scenario::new("R5", SymbolSpec::monomial(c(2.0, 0.0), 1), remark_phi.clone(), 1).with_expected(
        Expected {
            posinormality: Some(CertifiedNotPosinormal),
            adjoint_factorization_max: Some(1e-8),
            mu_recovery: Some(MuExpectation::NotApplicable),
            ..Expected::default()
        },
    );

    let r6 = Scenario::new("R6", SymbolSpec::monomial(c(2.0, 0.0), 1), SymbolSpec::monomial(c(0.4, 0.0), 1), 1)
        .with_expected(Expected {
            posinormality: Some(NumericallyPosinormalConsistent),
            coposinormality: Some(NumericallyPosinormalConsistent),
            shift_offset: Some(0),
            lambda_estimate: Some(Approx { value: 1.0, tol: 1e-9 }),
            ..Expected::default()
        });

    let within = Expected {
        mu_recovery: Some(MuExpectation::Within { tol: 1e-8 }),
        ..Expected::default()
    };
    let r8 = vec![
        Scenario::new("R8.affine", SymbolSpec::monomial(one, 1), affine(0.5, -0.15), 1).with_expected(within.clone()),
        Scenario::new(
            "R8.mobius",
            SymbolSpec::monomial(c(1.0, 0.5), 2),
            lfm(c(0.5, 0.0), c(-0.1, 0.1), c(0.2, 0.0), one),
            2,
        )
        .with_expected(within.clone()),
        Scenario::new(
            "R8.cubic",
            SymbolSpec::monomial(c(0.7, -0.2), 3),
            lfm(c(0.4, 0.0), c(0.0, 0.1), c(-0.2, 0.0), one),
            3,
        )
        .with_expected(within),
        Scenario::new("R8.no_zero", SymbolSpec::monomial(c(2.0, 0.0), 1), remark_phi, 1).with_expected(Expected {
            mu_recovery: Some(MuExpectation::NotApplicable),
            ..Expected::default()
        }),
    ];

    vec![
        entry("R1", "weighted shift: psi = z^2, phi = z/2, n = 1", vec![r1]),
        entry("R2", "constant weight: coposinormal but not posinormal", vec![weighted, unweighted]),
        entry("R3", "non-injective phi = z^2/2 with psi = z^2", vec![r3]),
        entry("R4", "unweighted operator, n in {1, 2}, N in {64, 128}", r4),
        entry("R5", "psi = 2z, phi = (z + 2)/5: psi(0) = 0 yet not posinormal", vec![r5]),
        entry("R6", "diagonal normal case psi = 2z, phi = 0.4z", vec![r6]),
        entry(
            "R7",
            "factorized adjoint on seeded linear-fractional triples",
            factorization_triples(FACTORIZATION_SEED, FACTORIZATION_COUNT),
        ),
        entry("R8", "adjoint image of the kernel at a zero of phi", r8),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowResult {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub scenarios_passed: usize,
    pub scenarios_total: usize,
    /// `scenario: field expected X, got Y` for each unmet expectation.
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reproduction {
    pub rows: Vec<RowResult>,
    pub reports: Vec<RunReport>,
}

impl Reproduction {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_passed() { 0 } else { 1 }
    }

    pub fn table(&self) -> String {
        let mut out = format!("{:<4} {:<6} {:>9}  {}\n", "id", "result", "scenarios", "description");
        for row in &self.rows {
            out.push_str(&format!(
                "{:<4} {:<6} {:>9}  {}\n",
                row.id,
                if row.passed { "pass" } else { "FAIL" },
                format!("{}/{}", row.scenarios_passed, row.scenarios_total),
                row.title
            ));
            for f in &row.failures {
                out.push_str(&format!("       {f}\n"));
            }
        }
        let passed = self.rows.iter().filter(|r| r.passed).count();
        out.push_str(&format!("{passed}/{} rows pass\n", self.rows.len()));
        out
    }
}

/// Runs the selected entries in parallel; results keep registry order.
pub fn reproduce(entries: &[RegistryEntry], only: Option<&str>) -> Result<Reproduction> {
    let selected: Vec<&RegistryEntry> = entries.iter().filter(|e| only.is_none_or(|id| e.id == id)).collect();
    if selected.is_empty() {
        let ids: Vec<&str> = entries.iter().map(|e| e.id.as_str()).collect();
        return Err(Error::Validation(format!(
            "unknown registry id {:?}; known ids: {}",
            only.unwrap_or(""),
            ids.join(", ")
        )));
    }
    let jobs: Vec<(usize, &Scenario)> = selected
        .iter()
        .enumerate()
        .flat_map(|(i, e)| e.scenarios.iter().map(move |s| (i, s)))
        .collect();
    let reports: Vec<RunReport> = jobs.par_iter().map(|(_, s)| run(s)).collect::<Result<_>>()?;

    let rows = selected
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let mine: Vec<&RunReport> = jobs
                .iter()
                .zip(&reports)
                .filter(|((row, _), _)| *row == i)
                .map(|(_, r)| r)
                .collect();
            let failures: Vec<String> = mine
                .iter()
                .flat_map(|r| {
                    r.expectations.iter().filter(|x| !x.passed).map(move |x| {
                        format!(
                            "{}: {} expected {}, got {}",
                            r.scenario.name, x.field, x.expected, x.actual
                        )
                    })
                })
                .collect();
            let ok = mine.iter().filter(|r| r.all_expectations_met()).count();
            RowResult {
                id: e.id.clone(),
                title: e.title.clone(),
                passed: ok == mine.len(),
                scenarios_passed: ok,
                scenarios_total: mine.len(),
                failures,
            }
        })
        .collect();
    Ok(Reproduction { rows, reports })
}
