//! The four analyses behind the subcommands.

use num_rational::BigRational;
use serde::Serialize;

use pimsner::cuntz_pimsner::{Expectation, SpanningElement, TruncatedModule};
use pimsner::fock::{beta_k, paths, paths_up_to, Path};
use pimsner::kms::{invariant_traces, max_kms_residual, phi_d};
use pimsner::spectral::{DecayFit, ResidueSolver};
use pimsner::{Error, FockVector, GraphBimodule, ResidueConfig, TraceState};

use crate::report::{num, Check, Table};

/// Path length used for the random KMS pairs.
pub const KMS_PATH_LENGTH: usize = 3;
/// `φ_D(S_μS_μ*)` is tabulated for `|μ| ≤` this.
pub const PHI_D_LENGTH: usize = 2;

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Results {
    Index(IndexResults),
    Residue(ResidueResults),
    Kasparov(KasparovResults),
    Kms(KmsResults),
}

pub struct Outcome {
    pub results: Results,
    pub checks: Vec<Check>,
    pub table: Table,
}

fn labels(module: &GraphBimodule, vs: &[usize]) -> Vec<String> {
    vs.iter().map(|&v| module.vertices().label(v).to_string()).collect()
}

// ---------------------------------------------------------------- index

#[derive(Debug, Clone, Serialize)]
pub struct IndexRow {
    pub k: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexResults {
    pub vertices: Vec<String>,
    pub beta: Vec<f64>,
    pub beta_is_central: bool,
    pub rows: Vec<IndexRow>,
}

pub fn index(module: &GraphBimodule, k_max: usize, tol: f64) -> Result<Outcome, Error> {
    let vertices = module.vertices().labels().to_vec();
    let beta = module.beta()?.re();
    let central = module.beta_is_central(tol)?;
    let rows: Vec<IndexRow> = (0..=k_max)
        .map(|k| IndexRow {
            k,
            values: beta_k(module, k).re(),
        })
        .collect();

    let non_positive = rows.iter().flat_map(|r| &r.values).filter(|&&x| !(x > 0.0)).count();
    let mut checks = vec![Check::new("index_positive", non_positive as f64, 0.0)];
    if central {
        // e^{β_n} against e^{nβ}, relative to the entry
        let e_beta = module.index().re();
        let collapse = rows
            .iter()
            .flat_map(|r| {
                r.values
                    .iter()
                    .zip(&e_beta)
                    .map(move |(&x, &b)| ((x - b.powi(r.k as i32)) / x).abs())
            })
            .fold(0.0, f64::max);
        checks.push(Check::new("central_collapse", collapse, tol));
    }

    let mut table = Table::new(std::iter::once("k".to_string()).chain(vertices.iter().cloned()));
    for r in &rows {
        table.push(std::iter::once(r.k.to_string()).chain(r.values.iter().map(|&x| num(x))).collect());
    }
    Ok(Outcome {
        results: Results::Index(IndexResults {
            vertices,
            beta,
            beta_is_central: central,
            rows,
        }),
        checks,
        table,
    })
}

// -------------------------------------------------------------- residue

#[derive(Debug, Clone, Serialize)]
pub struct Rate {
    pub c: f64,
    pub alpha: f64,
    pub l: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Perron {
    pub spectral_radius: f64,
    pub primitive: bool,
    pub left_vector: Vec<f64>,
    pub right_vector: Vec<f64>,
    pub rate: Option<Rate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualSummary {
    pub first: f64,
    pub last: f64,
    /// Largest residual over `k ≥ k_max / 2`.
    pub tail_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidueRow {
    pub path: String,
    pub range: String,
    pub source: String,
    pub eta_tilde: f64,
    pub method: &'static str,
    pub fit: &'static str,
    /// `null` for tolerance-level or geometric decay.
    pub delta: Option<f64>,
    pub r_squared: Option<f64>,
    pub alpha: Option<f64>,
    pub converged: bool,
    pub residual: ResidualSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidueResults {
    pub degree: Option<usize>,
    pub perron: Option<Perron>,
    pub rows: Vec<ResidueRow>,
}

/// Which paths a residue run covers.
pub enum Selection {
    Degree(usize),
    Paths(Vec<String>),
}

fn fit_name(fit: &DecayFit) -> &'static str {
    match fit {
        DecayFit::WithinTolerance => "within_tolerance",
        DecayFit::Geometric { .. } => "geometric",
        DecayFit::PowerLaw { .. } => "power_law",
        DecayFit::NotConverged { .. } => "not_converged",
    }
}

pub fn residue(module: &GraphBimodule, selection: &Selection, cfg: ResidueConfig) -> Result<Outcome, Error> {
    let (degree, lambdas) = match selection {
        Selection::Degree(n) => (Some(*n), paths(module, *n)),
        Selection::Paths(texts) => {
            let ps = texts.iter().map(|t| Path::parse(module, t)).collect::<Result<Vec<_>, _>>()?;
            (None, ps)
        }
    };
    let solver = ResidueSolver::new(module, cfg)?;
    let perron = solver.pf().map(|pf| Perron {
        spectral_radius: pf.spectral_radius,
        primitive: pf.primitive,
        left_vector: pf.eigenvector.to_vec(),
        right_vector: pf.right_eigenvector.to_vec(),
        rate: pf.rate.map(|r| Rate {
            c: r.c,
            alpha: r.alpha,
            l: r.l,
        }),
    });

    let mut rows = Vec::with_capacity(lambdas.len());
    let mut checks = Vec::new();
    for lam in &lambdas {
        let rep = solver.eta_tilde(&FockVector::basis(lam.clone()))?;
        let curve = &rep.residual_curve;
        let tail_max = curve
            .iter()
            .filter(|&&(k, _)| 2 * k >= cfg.k_max)
            .map(|&(_, r)| r)
            .fold(0.0, f64::max);
        let label = lam.label(module);
        checks.push(Check::flag(format!("converged:{label}"), rep.converged));
        rows.push(ResidueRow {
            path: label,
            range: module.vertices().label(lam.range()).to_string(),
            source: module.vertices().label(lam.source()).to_string(),
            eta_tilde: rep.eta_tilde.coefficient(lam).re,
            method: rep.method.as_str(),
            fit: fit_name(&rep.fit),
            delta: Some(rep.fit.delta()).filter(|d| d.is_finite()),
            r_squared: rep.fit.r_squared(),
            alpha: match rep.fit {
                DecayFit::Geometric { alpha } => Some(alpha),
                _ => None,
            },
            converged: rep.converged,
            residual: ResidualSummary {
                first: curve.first().map_or(0.0, |c| c.1),
                last: curve.last().map_or(0.0, |c| c.1),
                tail_max,
            },
            note: rep.note.clone(),
        });
    }

    let mut table = Table::new([
        "path", "range", "source", "eta_tilde", "method", "fit", "delta", "r_squared", "converged",
    ]);
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    for r in &rows {
        table.push(vec![
            r.path.clone(),
            r.range.clone(),
            r.source.clone(),
            num(r.eta_tilde),
            r.method.to_string(),
            r.fit.to_string(),
            opt(r.delta),
            opt(r.r_squared),
            r.converged.to_string(),
        ]);
    }
    Ok(Outcome {
        results: Results::Residue(ResidueResults { degree, perron, rows }),
        checks,
        table,
    })
}

// ------------------------------------------------------------- kasparov

#[derive(Debug, Clone, Serialize)]
pub struct VertexValue {
    pub vertex: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutatorRow {
    pub edge: String,
    pub discrepancy: f64,
    pub norm: f64,
    pub rank: usize,
    pub predicted_rank: usize,
    pub graded_classes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct KasparovResults {
    pub depth: usize,
    pub method: &'static str,
    pub basis_size: usize,
    pub quotient_rank: usize,
    pub gram_min_eigenvalues: Vec<VertexValue>,
    pub gram_hermitian_defect: f64,
    pub idempotent_defect: f64,
    pub adjoint_defect: f64,
    pub closed_form_defect: f64,
    pub orthogonality_defect: f64,
    pub isometry_defect: f64,
    pub fock_fixed_defect: f64,
    pub well_defined_defect: f64,
    pub commutators: Vec<CommutatorRow>,
}

pub fn kasparov(module: &GraphBimodule, depth: usize, cfg: ResidueConfig) -> Result<Outcome, Error> {
    let tol = cfg.tol;
    let expectation = Expectation::new(module, cfg, depth)?;
    let r = TruncatedModule::new(&expectation, depth)?.report()?;

    let gram_min_eigenvalues: Vec<VertexValue> = r
        .gram_min_eigenvalues
        .iter()
        .enumerate()
        .map(|(v, &value)| VertexValue {
            vertex: module.vertices().label(v).to_string(),
            value,
        })
        .collect();
    let mut checks: Vec<Check> = gram_min_eigenvalues
        .iter()
        .map(|g| Check::new(format!("gram_psd:{}", g.vertex), -g.value, tol))
        .collect();
    for (name, value) in [
        ("gram_hermitian", r.gram_hermitian_defect),
        ("idempotent", r.idempotent_defect),
        ("adjoint", r.adjoint_defect),
        ("closed_form", r.closed_form_defect),
        ("orthogonality", r.orthogonality_defect),
        ("isometry", r.isometry_defect),
        ("fock_fixed", r.fock_fixed_defect),
        ("well_defined", r.well_defined_defect),
    ] {
        checks.push(Check::new(name, value, tol));
    }
    let commutators: Vec<CommutatorRow> = r
        .commutators
        .iter()
        .map(|c| CommutatorRow {
            edge: c.edge.clone(),
            discrepancy: c.discrepancy,
            norm: c.norm,
            rank: c.rank,
            predicted_rank: c.predicted_rank,
            graded_classes: c.graded_classes,
        })
        .collect();
    let mut table = Table::new(["edge", "discrepancy", "norm", "rank", "predicted_rank", "graded_classes"]);
    for c in &commutators {
        checks.push(Check::new(format!("commutator:{}", c.edge), c.discrepancy, tol));
        checks.push(Check::new(
            format!("commutator_rank:{}", c.edge),
            c.rank.abs_diff(c.predicted_rank) as f64,
            0.0,
        ));
        table.push(vec![
            c.edge.clone(),
            num(c.discrepancy),
            num(c.norm),
            c.rank.to_string(),
            c.predicted_rank.to_string(),
            c.graded_classes.to_string(),
        ]);
    }
    Ok(Outcome {
        results: Results::Kasparov(KasparovResults {
            depth: r.depth,
            method: expectation.method().as_str(),
            basis_size: r.basis_size,
            quotient_rank: r.quotient_rank,
            gram_min_eigenvalues,
            gram_hermitian_defect: r.gram_hermitian_defect,
            idempotent_defect: r.idempotent_defect,
            adjoint_defect: r.adjoint_defect,
            closed_form_defect: r.closed_form_defect,
            orthogonality_defect: r.orthogonality_defect,
            isometry_defect: r.isometry_defect,
            fock_fixed_defect: r.fock_fixed_defect,
            well_defined_defect: r.well_defined_defect,
            commutators,
        }),
        checks,
        table,
    })
}

// ------------------------------------------------------------------ kms

#[derive(Debug, Clone, Serialize)]
pub struct PhiRow {
    pub path: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct State {
    pub weights: Vec<f64>,
    /// Exact rational weights, as `p/q`.
    pub exact: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KmsResults {
    pub vertices: Vec<String>,
    /// Dimension of the invariant-trace polytope; `null` when it is empty.
    pub dimension: Option<usize>,
    pub components: Vec<Vec<String>>,
    pub basis: Vec<State>,
    pub canonical: Option<State>,
    pub phi_d: Vec<PhiRow>,
    pub trials: usize,
    pub path_length: usize,
    pub max_kms_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn exact(v: &[BigRational]) -> Vec<String> {
    v.iter().map(ToString::to_string).collect()
}

fn invariance_residual(module: &GraphBimodule, phi: &TraceState) -> f64 {
    module
        .edges()
        .iter()
        .map(|e| (phi.weights[e.source] - e.weight * phi.weights[e.range]).abs())
        .fold(0.0, f64::max)
}

pub fn kms(module: &GraphBimodule, trials: usize, seed: u64, tol: f64) -> Result<Outcome, Error> {
    let vertices = module.vertices().labels().to_vec();
    let mut table = Table::new(["path", "phi_d"]);
    let traces = match invariant_traces(module) {
        Ok(t) => t,
        Err(Error::NoInvariantState(why)) => {
            return Ok(Outcome {
                results: Results::Kms(KmsResults {
                    vertices,
                    dimension: None,
                    components: Vec::new(),
                    basis: Vec::new(),
                    canonical: None,
                    phi_d: Vec::new(),
                    trials,
                    path_length: KMS_PATH_LENGTH,
                    max_kms_residual: None,
                    note: Some(why),
                }),
                checks: vec![Check::flag("invariant_state_exists", false)],
                table,
            })
        }
        Err(e) => return Err(e),
    };
    let phi = &traces.canonical;
    let phi_rows: Vec<PhiRow> = paths_up_to(module, PHI_D_LENGTH)
        .into_iter()
        .map(|mu| PhiRow {
            path: mu.label(module),
            value: phi_d(&SpanningElement::monomial(mu.clone(), mu), phi).re,
        })
        .collect();
    let residual = max_kms_residual(module, phi, trials, KMS_PATH_LENGTH, seed);
    for r in &phi_rows {
        table.push(vec![r.path.clone(), num(r.value)]);
    }
    let checks = vec![
        Check::flag("invariant_state_exists", true),
        Check::new("invariance", invariance_residual(module, phi), tol),
        Check::new("kms_residual", residual, tol),
    ];
    Ok(Outcome {
        results: Results::Kms(KmsResults {
            vertices,
            dimension: Some(traces.dimension),
            components: traces.components.iter().map(|c| labels(module, c)).collect(),
            basis: traces
                .basis
                .iter()
                .zip(&traces.exact_basis)
                .map(|(w, q)| State {
                    weights: w.clone(),
                    exact: exact(q),
                })
                .collect(),
            canonical: Some(State {
                weights: phi.weights.clone(),
                exact: exact(&traces.exact_canonical),
            }),
            phi_d: phi_rows,
            trials,
            path_length: KMS_PATH_LENGTH,
            max_kms_residual: Some(residual),
            note: None,
        }),
        checks,
        table,
    })
}
