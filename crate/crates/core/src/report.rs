//! Serializable reports. Rationals serialize as `"p/q"` strings and complex
//! numbers as `{"re": .., "im": ..}`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::gaussian::inner_product;
use crate::matrix::Matrix;
use crate::model::{
    normal_form_defect, normalize_model, rational_matrix_to_strings, solve_lyapunov, Backend, ChangeKind,
    OUModel,
};
use crate::operator::{
    apply_generator, check_normal, hermite_rotation_matrix, operator_matrix, rotation_split, BasisKind,
};
use crate::polynomial::{PolynomialJson, SparsePolynomial};
use crate::reference::{
    rotating_model, triangular_eigenfunctions, triangular_model, triangular_stationary_covariance,
    triangular_whitening, TriangularParams,
};
use crate::scalar::{format_rational, JsonNumber, Rational, Scalar, C64};
use crate::simulate::Ensemble;
use crate::spectral::{
    exact_generalized_eigenspaces, generalized_eigenspaces, orthogonality_report, spectrum, OrthogonalityReport,
    SpectralDecomposition, SpectralOptions, SpectrumSet, TOL_EIG, TOL_NILP, TOL_ORTH,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for ComplexJson {
    fn from(z: C64) -> Self {
        ComplexJson { re: z.re, im: z.im }
    }
}

/// An exact `"p/q"` value or a complex float.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarJson {
    Exact(String),
    Complex(ComplexJson),
}

impl ScalarJson {
    pub fn of<S: Scalar>(s: &S) -> Self {
        if S::EXACT {
            ScalarJson::Exact(s.to_text())
        } else {
            ScalarJson::Complex(s.to_c64().into())
        }
    }

    pub fn text(&self) -> String {
        match self {
            ScalarJson::Exact(s) => s.clone(),
            ScalarJson::Complex(z) if z.im == 0.0 => format!("{}", z.re),
            ScalarJson::Complex(z) => format!("{}{:+}i", z.re, z.im),
        }
    }
}

fn matrix_json<S: Scalar>(m: &Matrix<S>) -> Vec<Vec<ScalarJson>> {
    m.to_rows().iter().map(|r| r.iter().map(ScalarJson::of).collect()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tol_eig: f64,
    pub tol_orth: f64,
    pub tol_nilp: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_eig: TOL_EIG,
            tol_orth: TOL_ORTH,
            tol_nilp: TOL_NILP,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tol-eig", self.tol_eig), ("tol-orth", self.tol_orth), ("tol-nilp", self.tol_nilp)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    fn spectral_options(&self) -> SpectralOptions {
        SpectralOptions {
            tol_eig: self.tol_eig,
            tol_nilp: self.tol_nilp,
            ..SpectralOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendChoice {
    /// Exact when the model is rational with triangular drift, float otherwise.
    Auto,
    Exact,
    Float,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelJson {
    pub dim: usize,
    pub backend: Backend,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<JsonNumber>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<JsonNumber>>,
}

impl ModelJson {
    pub fn of(model: &OUModel) -> Self {
        let float = |m: &Matrix<f64>| -> Vec<Vec<JsonNumber>> {
            m.to_rows()
                .iter()
                .map(|r| r.iter().map(|&v| JsonNumber::Float(v)).collect())
                .collect()
        };
        let exact = |m: &Matrix<Rational>| -> Vec<Vec<JsonNumber>> {
            rational_matrix_to_strings(m)
                .into_iter()
                .map(|r| r.into_iter().map(JsonNumber::Exact).collect())
                .collect()
        };
        let (q, b) = match model.exact_matrices() {
            Ok((q, b)) => (exact(q), exact(b)),
            Err(_) => (float(model.q()), float(model.b())),
        };
        ModelJson {
            dim: model.dim(),
            backend: model.backend(),
            q,
            b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumElementJson {
    pub value: ComplexJson,
    pub multiplicity: usize,
    pub degree: u32,
    pub witnesses: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumJson {
    pub cap: u32,
    pub tol_eig: f64,
    pub drift_eigenvalues: Vec<ComplexJson>,
    pub elements: Vec<SpectrumElementJson>,
}

impl SpectrumJson {
    pub fn of(s: &SpectrumSet) -> Self {
        SpectrumJson {
            cap: s.cap,
            tol_eig: s.tol_eig,
            drift_eigenvalues: s.drift_eigenvalues.iter().map(|&z| z.into()).collect(),
            elements: s
                .elements
                .iter()
                .map(|e| SpectrumElementJson {
                    value: e.value.into(),
                    multiplicity: e.multiplicity(),
                    degree: e.degree,
                    witnesses: e.witnesses.iter().map(|w| w.exps().to_vec()).collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub model: ModelJson,
    pub spectrum: SpectrumJson,
}

pub fn spectrum_report(model: &OUModel, cap: u32, tol_eig: f64) -> Result<SpectrumReport> {
    Ok(SpectrumReport {
        model: ModelJson::of(model),
        spectrum: SpectrumJson::of(&spectrum(model, cap, tol_eig)?),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisVectorJson {
    pub text: String,
    pub polynomial: PolynomialJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupJson {
    pub eigenvalue: ScalarJson,
    pub multiplicity: usize,
    pub dimension: usize,
    pub nilpotency_index: usize,
    pub kernel_dims: Vec<usize>,
    pub witnesses: Vec<Vec<u32>>,
    pub degrees: Vec<u32>,
    pub residual: f64,
    pub basis: Vec<BasisVectorJson>,
}

fn groups_json<S: Scalar>(dec: &SpectralDecomposition<S>) -> Vec<GroupJson> {
    dec.groups
        .iter()
        .map(|g| GroupJson {
            eigenvalue: ScalarJson::of(&g.eigenvalue),
            multiplicity: g.multiplicity,
            dimension: g.dimension(),
            nilpotency_index: g.nilpotency_index,
            kernel_dims: g.kernel_dims.clone(),
            witnesses: g.witnesses.iter().map(|w| w.exps().to_vec()).collect(),
            degrees: g.degrees(),
            residual: g.residual,
            basis: g
                .basis
                .iter()
                .map(|u| BasisVectorJson {
                    text: u.to_string(),
                    polynomial: u.to_json(),
                })
                .collect(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairJson {
    pub first: usize,
    pub second: usize,
    pub eigenvalues: (ScalarJson, ScalarJson),
    pub gram: Vec<Vec<ScalarJson>>,
    pub max_normalized: f64,
    pub orthogonal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalityJson {
    pub verdict: String,
    pub orthogonal: bool,
    pub exact: bool,
    pub tol_orth: f64,
    pub max_normalized: f64,
    pub mean_defect: f64,
    pub mean_zero: bool,
    pub pairs: Vec<PairJson>,
}

fn verdict(orthogonal: bool) -> String {
    if orthogonal { "orthogonal" } else { "not-orthogonal" }.into()
}

impl OrthogonalityJson {
    pub fn of<S: Scalar>(r: &OrthogonalityReport<S>) -> Self {
        OrthogonalityJson {
            verdict: verdict(r.orthogonal),
            orthogonal: r.orthogonal,
            exact: r.exact,
            tol_orth: r.tol_orth,
            max_normalized: r.max_normalized(),
            mean_defect: r.mean_defect,
            mean_zero: r.mean_zero,
            pairs: r
                .pairs
                .iter()
                .map(|p| PairJson {
                    first: p.first,
                    second: p.second,
                    eigenvalues: (ScalarJson::of(&p.eigenvalues.0), ScalarJson::of(&p.eigenvalues.1)),
                    gram: matrix_json(&p.gram),
                    max_normalized: p.max_normalized,
                    orthogonal: p.orthogonal,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub model: ModelJson,
    pub cap: u32,
    pub backend: Backend,
    pub tolerances: Tolerances,
    pub q_inf: Vec<Vec<ScalarJson>>,
    pub spectrum: SpectrumJson,
    pub groups: Vec<GroupJson>,
    pub max_nilpotency_index: usize,
    pub orthogonality: OrthogonalityJson,
}

/// Resolves the backend for the eigenspace computation.
pub fn resolve_backend(model: &OUModel, choice: BackendChoice) -> Result<Backend> {
    let exact_ok = |m: &OUModel| -> Result<()> {
        let (_, b) = m.exact_matrices()?;
        if b.is_lower_triangular() || b.is_upper_triangular() {
            Ok(())
        } else {
            Err(Error::ExactUnavailable("exact eigenspaces need a triangular drift".into()))
        }
    };
    match choice {
        BackendChoice::Float => Ok(Backend::Float64),
        BackendChoice::Exact => exact_ok(model).map(|_| Backend::ExactRational),
        BackendChoice::Auto => Ok(if exact_ok(model).is_ok() {
            Backend::ExactRational
        } else {
            Backend::Float64
        }),
    }
}

struct Pipeline {
    backend: Backend,
    q_inf: Vec<Vec<ScalarJson>>,
    groups: Vec<GroupJson>,
    max_nilpotency_index: usize,
    orthogonality: OrthogonalityJson,
    gram: GramJson,
}

fn run_pipeline(model: &OUModel, cap: u32, tol: &Tolerances, choice: BackendChoice) -> Result<Pipeline> {
    tol.validate()?;
    let backend = resolve_backend(model, choice)?;
    let q_inf = solve_lyapunov(model)?;
    match backend {
        Backend::ExactRational => {
            let sigma = q_inf
                .exact
                .ok_or_else(|| Error::ExactUnavailable("stationary covariance is not rational".into()))?;
            let dec = exact_generalized_eigenspaces(model, cap)?;
            let rep = orthogonality_report(&dec, &sigma, tol.tol_orth)?;
            Ok(Pipeline {
                backend,
                q_inf: matrix_json(&sigma),
                groups: groups_json(&dec),
                max_nilpotency_index: dec.max_nilpotency_index(),
                orthogonality: OrthogonalityJson::of(&rep),
                gram: GramJson::of(&dec, &sigma)?,
            })
        }
        Backend::Float64 => {
            let float_model = model.without_exact();
            let dec = generalized_eigenspaces(&float_model, cap, &tol.spectral_options())?;
            let sigma: Matrix<C64> = q_inf.sigma.lift();
            let rep = orthogonality_report(&dec, &sigma, tol.tol_orth)?;
            Ok(Pipeline {
                backend,
                q_inf: matrix_json(&q_inf.sigma),
                groups: groups_json(&dec),
                max_nilpotency_index: dec.max_nilpotency_index(),
                orthogonality: OrthogonalityJson::of(&rep),
                gram: GramJson::of(&dec, &sigma)?,
            })
        }
    }
}

/// Validation, stationary covariance, generalized eigenspaces up to `cap` and
/// their orthogonality report.
pub fn analyze(model: &OUModel, cap: u32, tol: &Tolerances, choice: BackendChoice) -> Result<AnalyzeReport> {
    let p = run_pipeline(model, cap, tol, choice)?;
    Ok(AnalyzeReport {
        model: ModelJson::of(model),
        cap,
        backend: p.backend,
        tolerances: *tol,
        q_inf: p.q_inf,
        spectrum: SpectrumJson::of(&spectrum(model, cap, tol.tol_eig)?),
        groups: p.groups,
        max_nilpotency_index: p.max_nilpotency_index,
        orthogonality: p.orthogonality,
    })
}

/// Full Gram matrix of all generalized eigenvectors, labelled `g{group}.{k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramJson {
    pub labels: Vec<String>,
    pub eigenvalues: Vec<ScalarJson>,
    pub matrix: Vec<Vec<ScalarJson>>,
}

impl GramJson {
    fn of<S: Scalar>(dec: &SpectralDecomposition<S>, sigma: &Matrix<S>) -> Result<Self> {
        let mut labels = Vec::new();
        let mut eigenvalues = Vec::new();
        let mut basis: Vec<SparsePolynomial<S>> = Vec::new();
        for (i, g) in dec.groups.iter().enumerate() {
            for (k, u) in g.basis.iter().enumerate() {
                labels.push(format!("g{i}.{k}"));
                eigenvalues.push(ScalarJson::of(&g.eigenvalue));
                basis.push(u.clone());
            }
        }
        let gram = crate::gaussian::gram_matrix(&basis, sigma)?;
        Ok(GramJson {
            labels,
            eigenvalues,
            matrix: matrix_json(&gram),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("label,{}\n", self.labels.join(","));
        for (label, row) in self.labels.iter().zip(&self.matrix) {
            let cells: Vec<String> = row.iter().map(ScalarJson::text).collect();
            out.push_str(&format!("{label},{}\n", cells.join(",")));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub model: ModelJson,
    pub cap: u32,
    pub backend: Backend,
    pub tolerances: Tolerances,
    pub gram: GramJson,
    pub verdict: String,
}

pub fn gram_report(model: &OUModel, cap: u32, tol: &Tolerances, choice: BackendChoice) -> Result<GramReport> {
    let p = run_pipeline(model, cap, tol, choice)?;
    Ok(GramReport {
        model: ModelJson::of(model),
        cap,
        backend: p.backend,
        tolerances: *tol,
        gram: p.gram,
        verdict: p.orthogonality.verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizeReport {
    pub model: ModelJson,
    pub kind: ChangeKind,
    #[serde(rename = "H")]
    pub h: Vec<Vec<f64>>,
    #[serde(rename = "H_inv")]
    pub h_inv: Vec<Vec<f64>>,
    pub inverse_residual: f64,
    pub normalized: ModelJson,
    pub q_inf: Vec<Vec<f64>>,
    pub normal_form_defect: f64,
}

pub fn normalize_report(model: &OUModel) -> Result<NormalizeReport> {
    let (change, normalized) = normalize_model(model)?;
    Ok(NormalizeReport {
        model: ModelJson::of(model),
        kind: change.kind,
        h: change.h.to_rows(),
        h_inv: change.h_inv.to_rows(),
        inverse_residual: change.residual(),
        q_inf: solve_lyapunov(&normalized)?.sigma.to_rows(),
        normal_form_defect: normal_form_defect(&normalized)?,
        normalized: ModelJson::of(&normalized),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenfunctionJson {
    pub name: String,
    pub text: String,
    pub eigenvalue: String,
    pub residual_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingJson {
    pub first: String,
    pub second: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhiteningJson {
    #[serde(rename = "H")]
    pub h: Vec<Vec<f64>>,
    pub determinant: f64,
    pub transformed_covariance: Vec<Vec<f64>>,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangularExampleReport {
    pub example: String,
    pub a: String,
    pub d: String,
    pub c: String,
    pub model: ModelJson,
    pub drift_eigenvalues: Vec<String>,
    pub q_inf: Vec<Vec<String>>,
    pub q_inf_matches_closed_form: bool,
    pub eigenfunctions: Vec<EigenfunctionJson>,
    pub pairings: Vec<PairingJson>,
    pub means: Vec<PairingJson>,
    /// `⟨v₁, v₃⟩` and the closed form `1/(2a²)`.
    pub v1_v3: String,
    pub v1_v3_expected: String,
    pub v1_v3_matches: bool,
    /// Dimension of the `-2a` eigenspace at degree cap 4, when `d = a/2`.
    pub resonant_group_dimension: Option<usize>,
    pub whitening: WhiteningJson,
}

pub fn triangular_example_report(p: &TriangularParams) -> Result<TriangularExampleReport> {
    let model = triangular_model(p)?;
    let sigma = solve_lyapunov(&model)?
        .exact
        .ok_or_else(|| Error::ExactUnavailable("stationary covariance".into()))?;
    let closed = triangular_stationary_covariance(p);
    let vs = triangular_eigenfunctions(p);
    let mut eigenfunctions = Vec::new();
    for v in &vs {
        let lv = apply_generator(&model, &v.polynomial)?;
        eigenfunctions.push(EigenfunctionJson {
            name: v.name.into(),
            text: v.polynomial.to_string(),
            eigenvalue: format_rational(&v.eigenvalue),
            residual_zero: (lv - v.polynomial.scale(&v.eigenvalue)).is_zero(),
        });
    }
    let mut pairings = Vec::new();
    for i in 0..vs.len() {
        for j in i + 1..vs.len() {
            pairings.push(PairingJson {
                first: vs[i].name.into(),
                second: vs[j].name.into(),
                value: format_rational(&inner_product(&vs[i].polynomial, &vs[j].polynomial, &sigma)?),
            });
        }
    }
    let one = SparsePolynomial::one(2);
    let means = vs
        .iter()
        .map(|v| {
            Ok(PairingJson {
                first: "1".into(),
                second: v.name.into(),
                value: format_rational(&inner_product(&one, &v.polynomial, &sigma)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let v13 = inner_product(&vs[0].polynomial, &vs[2].polynomial, &sigma)?;
    let expected = Rational::from_i64(1) / (Rational::from_i64(2) * &p.a * &p.a);
    let resonant_group_dimension = if p.is_resonant() {
        let dec = exact_generalized_eigenspaces(&model, 4)?;
        dec.find(&(Rational::from_i64(-2) * &p.a), 0.0).map(|g| g.dimension())
    } else {
        None
    };
    let w = triangular_whitening(p)?;
    let transformed = w.transform_covariance(&sigma.to_f64());
    Ok(TriangularExampleReport {
        example: "triangular".into(),
        a: format_rational(&p.a),
        d: format_rational(&p.d),
        c: format_rational(&p.c),
        model: ModelJson::of(&model),
        drift_eigenvalues: model
            .exact_b()
            .map(|b| b.diagonal_entries().iter().map(format_rational).collect())
            .unwrap_or_default(),
        q_inf: rational_matrix_to_strings(&sigma),
        q_inf_matches_closed_form: sigma == closed,
        eigenfunctions,
        pairings,
        means,
        v1_v3: format_rational(&v13),
        v1_v3_expected: format_rational(&expected),
        v1_v3_matches: v13 == expected,
        resonant_group_dimension,
        whitening: WhiteningJson {
            h: w.h.to_rows(),
            determinant: w.determinant(),
            max_error: transformed.sub(&Matrix::diagonal(&[0.5, 0.5])).max_abs(),
            transformed_covariance: transformed.to_rows(),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationBlockJson {
    pub n: u32,
    /// `max |A_n − (−2n·I + L^(n))|` with `A = 2L` on `H_n`.
    pub max_error: f64,
    pub normality_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotatingExampleReport {
    pub example: String,
    pub model: ModelJson,
    pub drift_eigenvalues: Vec<ComplexJson>,
    pub q_inf: Vec<Vec<String>>,
    pub blocks: Vec<RotationBlockJson>,
    pub max_block_error: f64,
    pub cap: u32,
    pub verdict: String,
    pub nilpotency_indices: Vec<usize>,
}

/// Rotation-block checks for `n ≤ max_n` and the orthogonality report at `cap`.
pub fn rotating_example_report(max_n: u32, cap: u32) -> Result<RotatingExampleReport> {
    let model = rotating_model();
    let sigma = solve_lyapunov(&model)?
        .exact
        .ok_or_else(|| Error::ExactUnavailable("stationary covariance".into()))?;
    let split = rotation_split(&model)?;
    let a = operator_matrix(&model, max_n, BasisKind::HermiteNormalForm)?.doubled();
    let mut blocks = Vec::new();
    for n in 0..=max_n {
        let block = a.degree_block(n);
        let size = n as usize + 1;
        let expected = Matrix::<f64>::identity(size)
            .scale(&(-2.0 * n as f64))
            .add(&hermite_rotation_matrix(&split, n)?.entries);
        blocks.push(RotationBlockJson {
            n,
            max_error: block.sub(&expected).max_abs(),
            normality_defect: check_normal(&block, 1e-12).defect,
        });
    }
    let float_model = model.without_exact();
    let dec = generalized_eigenspaces(&float_model, cap, &SpectralOptions::default())?;
    let rep = orthogonality_report(&dec, &sigma.to_f64().lift::<C64>(), TOL_ORTH)?;
    Ok(RotatingExampleReport {
        example: "rotating".into(),
        model: ModelJson::of(&model),
        drift_eigenvalues: crate::model::drift_eigenvalues(model.b())?
            .into_iter()
            .map(Into::into)
            .collect(),
        q_inf: rational_matrix_to_strings(&sigma),
        max_block_error: blocks.iter().map(|b| b.max_error).fold(0.0, f64::max),
        blocks,
        cap,
        verdict: verdict(rep.orthogonal),
        nilpotency_indices: dec.groups.iter().map(|g| g.nilpotency_index).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub meta: crate::simulate::EnsembleMeta,
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub q_inf: Vec<Vec<f64>>,
    /// `max |Ĉ − Q∞| / max |Q∞|`.
    pub covariance_relative_error: f64,
    pub output: Option<String>,
}

pub fn simulate_report(model: &OUModel, ensemble: &Ensemble, output: Option<String>) -> Result<SimulateReport> {
    let q_inf = solve_lyapunov(model)?.sigma;
    let cov = ensemble.covariance();
    Ok(SimulateReport {
        meta: ensemble.meta.clone(),
        mean: ensemble.mean(),
        covariance_relative_error: cov.sub(&q_inf).max_abs() / q_inf.max_abs(),
        covariance: cov.to_rows(),
        q_inf: q_inf.to_rows(),
        output,
    })
}

/// Flattens a JSON value into `path: value` lines.
pub fn render_human(value: &Value) -> String {
    let mut out = String::new();
    walk(value, "", &mut out);
    out
}

fn scalar_text(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("null".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Object(m) if m.len() == 2 && m.contains_key("re") && m.contains_key("im") => {
            let (re, im) = (m["re"].as_f64()?, m["im"].as_f64()?);
            Some(if im == 0.0 {
                format!("{}", m["re"])
            } else {
                format!("{}{}{}i", m["re"], if im < 0.0 { "" } else { "+" }, m["im"])
            })
            .filter(|_| re.is_finite())
        }
        _ => None,
    }
}

fn walk(v: &Value, path: &str, out: &mut String) {
    if let Some(s) = scalar_text(v) {
        out.push_str(&format!("{path}: {s}\n"));
        return;
    }
    match v {
        Value::Array(items) => {
            if let Some(cells) = items.iter().map(scalar_text).collect::<Option<Vec<_>>>() {
                out.push_str(&format!("{path}: [{}]\n", cells.join(", ")));
                return;
            }
            for (i, item) in items.iter().enumerate() {
                walk(item, &format!("{path}[{i}]"), out);
            }
        }
        Value::Object(m) => {
            for (k, item) in m {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                walk(item, &p, out);
            }
        }
        _ => unreachable!("scalars handled above"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip<T: Serialize + serde::de::DeserializeOwned + PartialEq + std::fmt::Debug>(r: &T) {
        let text = serde_json::to_string(r).unwrap();
        let back: T = serde_json::from_str(&text).unwrap();
        assert_eq!(&back, r);
    }

    #[test]
    fn triangular_report_contains_headline() {
        let r = triangular_example_report(&TriangularParams::from_ints(2, 1, 1).unwrap()).unwrap();
        assert_eq!(r.v1_v3, "1/8");
        assert!(r.v1_v3_matches && r.q_inf_matches_closed_form);
        let eigs: Vec<&str> = r.eigenfunctions.iter().map(|e| e.eigenvalue.as_str()).collect();
        // d = a/2 here, so the quartic joins at -2a
        assert_eq!(eigs, ["-2", "-4", "-6", "-4"]);
        assert!(r.eigenfunctions.iter().all(|e| e.residual_zero));
        assert!(r.means.iter().all(|m| m.value == "0"));
        assert!(serde_json::to_string(&r).unwrap().contains("\"1/8\""));
        round_trip(&r);
    }

    #[test]
    fn resonant_group_has_two_dimensions() {
        let r = triangular_example_report(&TriangularParams::from_ints(2, 1, 1).unwrap()).unwrap();
        assert!(r.resonant_group_dimension.unwrap() >= 2);
    }

    #[test]
    fn rotating_report() {
        let r = rotating_example_report(8, 4).unwrap();
        assert!(r.max_block_error < 1e-12, "{}", r.max_block_error);
        assert!(r.blocks.iter().all(|b| b.normality_defect < 1e-12));
        assert_eq!(r.verdict, "orthogonal");
        assert!(r.nilpotency_indices.iter().all(|&k| k == 1));
        round_trip(&r);
    }

    #[test]
    fn analyze_backends() {
        let m = triangular_model(&TriangularParams::from_ints(2, 1, 1).unwrap()).unwrap();
        let tol = Tolerances::default();
        let exact = analyze(&m, 2, &tol, BackendChoice::Auto).unwrap();
        assert_eq!(exact.backend, Backend::ExactRational);
        assert_eq!(exact.orthogonality.verdict, "not-orthogonal");
        round_trip(&exact);
        let float = analyze(&m, 2, &tol, BackendChoice::Float).unwrap();
        assert_eq!(float.backend, Backend::Float64);
        assert_eq!(float.groups.len(), exact.groups.len());
        round_trip(&float);
        let rot = rotating_model();
        assert!(matches!(
            analyze(&rot, 2, &tol, BackendChoice::Exact),
            Err(Error::ExactUnavailable(_))
        ));
    }

    #[test]
    fn gram_csv_shape() {
        let m = triangular_model(&TriangularParams::from_ints(2, 1, 1).unwrap()).unwrap();
        let g = gram_report(&m, 1, &Tolerances::default(), BackendChoice::Auto).unwrap();
        let csv = g.gram.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("label,g0.0,"));
        round_trip(&g);
    }

    #[test]
    fn human_rendering_flattens() {
        let v = serde_json::json!({"a": {"b": [1, 2]}, "z": {"re": 1.5, "im": -2.0}, "s": "1/8"});
        let text = render_human(&v);
        assert!(text.contains("a.b: [1, 2]"));
        assert!(text.contains("z: 1.5-2.0i"));
        assert!(text.contains("s: 1/8"));
    }

    #[test]
    fn bad_tolerance_rejected() {
        let tol = Tolerances {
            tol_eig: 0.0,
            ..Tolerances::default()
        };
        let m = rotating_model();
        assert!(matches!(analyze(&m, 1, &tol, BackendChoice::Auto), Err(Error::InvalidParams(_))));
    }
}
