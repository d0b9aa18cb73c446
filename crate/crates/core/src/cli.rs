//! Run configuration, pipelines and result files for the command-line tool.
//!
//! Exit codes: 0 pass, 1 usage or configuration error, 2 validation failure
//! (a comparison exceeded its tolerance), 3 numerical failure, 4 I/O error.
//! Every error is reported as one line of JSON on stderr.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{bic_condition_check, classify_superradiance, label_chain, rule_name, SIGN_RULES};
use crate::chain1d::{chain_rates, RateLabel};
use crate::drop::{drop_spectrum, match_spectra, MatchReport, Method, Spectrum};
use crate::eom::{all_poles_cnm, all_poles_det_interp, all_poles_eigen, PoleSearchResult};
use crate::error::Error;
use crate::lattice::{sample_noise, NetworkSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Largest qubit count accepted by the dense equation-of-motion routes.
pub const MAX_EOM_QUBITS: usize = 1_000;
/// Largest qubit count accepted by the chain and DRoP routes.
pub const MAX_DROP_QUBITS: usize = 1_000_000;
pub const MAX_CHAIN_LENGTH: usize = 2_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMethod {
    Drop,
    EomCnm,
    EomDet,
    Chain,
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub epsilon_max: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative to `sum_n N_n gamma_n`.
    pub match_tol: f64,
    pub rank_tol: f64,
    pub solver_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { match_tol: 1e-8, rank_tol: 1e-8, solver_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub format: OutputFormat,
    /// Standard output when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svg_path: Option<PathBuf>,
}

fn default_reference() -> Method {
    Method::EomEigen
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dims: Vec<usize>,
    pub gammas: Vec<f64>,
    pub theta_over_pi: f64,
    pub method: RunMethod,
    /// Pole route compared against DRoP by `compare`.
    #[serde(default = "default_reference")]
    pub reference: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Config { line: usize, column: usize, message: String },
    Numerical(Error),
    Io { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    /// One line of JSON.
    pub fn to_line(&self) -> String {
        let v = match self {
            CliError::Usage(m) => json!({"error": "usage", "message": m}),
            CliError::Config { line, column, message } => {
                json!({"error": "config", "line": line, "column": column, "message": message})
            }
            CliError::Numerical(e) => json!({"error": "numerical", "message": e.to_string()}),
            CliError::Io { path, message } => json!({"error": "io", "path": path, "message": message}),
        };
        v.to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidSpec(_) | Error::NonFinite(_) | Error::ThetaOutOfRange { .. } => CliError::Usage(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let cfg: RunConfig = serde_json::from_str(text)
        .map_err(|e| CliError::Config { line: e.line(), column: e.column(), message: e.to_string() })?;
    cfg.validate()?;
    Ok(cfg)
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, String> {
    if text.trim().is_empty() {
        return Err(format!("empty {what} list"));
    }
    text.split(',')
        .enumerate()
        .map(|(i, item)| {
            let item = item.trim();
            item.parse::<T>().map_err(|_| format!("{what} item {} is not valid: {item:?}", i + 1))
        })
        .collect()
}

/// Comma-separated positive integers, e.g. `5,3,4`.
pub fn parse_usize_list(text: &str) -> Result<Vec<usize>, String> {
    parse_list(text, "integer")
}

/// Comma-separated finite reals, e.g. `1,0.4`.
pub fn parse_f64_list(text: &str) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = parse_list(text, "real")?;
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(format!("real item {} is not finite", i + 1)),
        None => Ok(v),
    }
}

fn positive(name: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{name} must be positive and finite, got {x}")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if !self.theta_over_pi.is_finite() {
            return Err(CliError::Usage("theta_over_pi must be finite".into()));
        }
        let spec = NetworkSpec::new(self.dims.clone(), self.gammas.clone(), self.theta())?;
        let n = spec.num_qubits();
        let (limit, what) = match self.method {
            RunMethod::Chain => (MAX_CHAIN_LENGTH, "chain"),
            RunMethod::Drop => (MAX_DROP_QUBITS, "drop"),
            _ => (MAX_EOM_QUBITS, "equation-of-motion"),
        };
        if n > limit || self.dims.iter().any(|&m| m > MAX_CHAIN_LENGTH) {
            return Err(CliError::Usage(format!("{n} qubits exceeds the {what} limit of {limit}")));
        }
        positive("match_tol", self.tolerances.match_tol)?;
        positive("rank_tol", self.tolerances.rank_tol)?;
        positive("solver_tol", self.tolerances.solver_tol)?;
        if let Some(n) = &self.noise {
            if !(n.epsilon_max.is_finite() && n.epsilon_max >= 0.0) {
                return Err(CliError::Usage(format!("epsilon_max must be >= 0, got {}", n.epsilon_max)));
            }
        }
        if self.method == RunMethod::Chain {
            if self.dims.len() != 1 {
                return Err(CliError::Usage("chain needs exactly one dimension".into()));
            }
            if self.noise.is_some() {
                return Err(CliError::Usage("chain does not take a noise field".into()));
            }
        }
        if !matches!(self.reference, Method::EomCnm | Method::EomDet | Method::EomEigen) {
            return Err(CliError::Usage(format!("reference must be an eom method, got {}", self.reference)));
        }
        Ok(())
    }

    pub fn theta(&self) -> f64 {
        self.theta_over_pi * std::f64::consts::PI
    }

    /// The network, with the configured noise field sampled in.
    pub fn network(&self) -> Result<NetworkSpec, CliError> {
        let spec = NetworkSpec::new(self.dims.clone(), self.gammas.clone(), self.theta())?;
        Ok(match &self.noise {
            Some(n) => {
                let field = sample_noise(&spec, n.epsilon_max, n.seed)?;
                spec.with_noise(field)?
            }
            None => spec,
        })
    }
}

/// Rounds to 12 significant digits; `-0` becomes `0`.
pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    if r == 0.0 { 0.0 } else { r }
}

/// A spectrum prepared for output: rounded, sorted by (Re, Im), with the
/// superradiance dimension of each rate where known.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSpectrum {
    pub method: Method,
    pub rates: Vec<Complex64>,
    pub tuples: Option<Vec<Vec<usize>>>,
    pub k: Option<Vec<usize>>,
}

impl LabeledSpectrum {
    pub fn new(s: &Spectrum, k: Option<Vec<usize>>) -> Self {
        let rounded: Vec<Complex64> = s.rates.iter().map(|g| Complex64::new(round12(g.re), round12(g.im))).collect();
        let mut order: Vec<usize> = (0..rounded.len()).collect();
        order.sort_by(|&a, &b| {
            let (x, y) = (rounded[a], rounded[b]);
            x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)).then_with(|| {
                let t = |i: usize| s.tuples.as_ref().map(|t| t[i].clone());
                t(a).cmp(&t(b))
            })
        });
        Self {
            method: s.method,
            rates: order.iter().map(|&i| rounded[i]).collect(),
            tuples: s.tuples.as_ref().map(|t| order.iter().map(|&i| t[i].clone()).collect()),
            k: k.map(|k| order.iter().map(|&i| k[i]).collect()),
        }
    }

    fn to_json(&self) -> Value {
        let rates: Vec<Value> = (0..self.rates.len())
            .map(|i| {
                json!({
                    "re": self.rates[i].re,
                    "im": self.rates[i].im,
                    "tuple": self.tuples.as_ref().map(|t| t[i].clone()),
                    "k": self.k.as_ref().map(|k| k[i]),
                })
            })
            .collect();
        json!({"method": self.method.to_string(), "rates": rates})
    }

    fn as_spectrum(&self) -> Spectrum {
        Spectrum { rates: self.rates.clone(), method: self.method, tuples: self.tuples.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub spectra: Vec<LabeledSpectrum>,
    pub report: Value,
    pub passed: bool,
}

impl Artifacts {
    pub fn to_json(&self, config: &RunConfig) -> String {
        let doc = json!({
            "config": config,
            "spectra": self.spectra.iter().map(LabeledSpectrum::to_json).collect::<Vec<_>>(),
            "report": self.report,
        });
        let mut s = serde_json::to_string_pretty(&doc).unwrap_or_default();
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| CliError::Io { path: "<csv>".into(), message: e.to_string() };
        w.write_record(["method", "re", "im", "tuple", "k"]).map_err(csv_err)?;
        for s in &self.spectra {
            for i in 0..s.rates.len() {
                let tuple = s
                    .tuples
                    .as_ref()
                    .map(|t| t[i].iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"))
                    .unwrap_or_default();
                let k = s.k.as_ref().map(|k| k[i].to_string()).unwrap_or_default();
                w.write_record([s.method.to_string(), Value::from(s.rates[i].re).to_string(), Value::from(s.rates[i].im).to_string(), tuple, k])
                    .map_err(csv_err)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io { path: "<csv>".into(), message: e.to_string() })?;
        Ok(String::from_utf8(bytes).unwrap_or_default())
    }

    pub fn to_svg(&self) -> String {
        let owned: Vec<Spectrum> = self.spectra.iter().map(LabeledSpectrum::as_spectrum).collect();
        let series: Vec<ScatterSeries<'_>> = owned
            .iter()
            .zip(&self.spectra)
            .map(|(s, l)| ScatterSeries { spectrum: s, k: l.k.as_deref() })
            .collect();
        render_scatter(&series)
    }
}

fn superradiance_k(spec: &NetworkSpec, drop: &Spectrum) -> Result<Option<Vec<usize>>, CliError> {
    match classify_superradiance(spec, drop) {
        Ok(r) => Ok(Some(r.k)),
        Err(Error::ThetaOutOfRange { .. }) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn complex_json(z: Complex64) -> Value {
    json!({"re": round12(z.re), "im": round12(z.im)})
}

fn eom_poles(spec: &NetworkSpec, method: Method, drop: &Spectrum, tol: &Tolerances) -> Result<PoleSearchResult, CliError> {
    Ok(match method {
        Method::EomCnm => all_poles_cnm(spec, &drop.rates, tol.solver_tol, tol.rank_tol)?,
        Method::EomDet => all_poles_det_interp(spec)?,
        _ => all_poles_eigen(spec)?,
    })
}

fn match_json(m: &MatchReport) -> Value {
    json!({
        "max_abs_error": round12(m.max_abs_error),
        "mean_abs_error": round12(m.mean_abs_error),
        "tol": round12(m.tol),
        "passed": m.passed,
    })
}

/// Runs the configured pipeline without writing anything.
pub fn execute(config: &RunConfig) -> Result<Artifacts, CliError> {
    config.validate()?;
    let spec = config.network()?;
    let tol = config.tolerances;
    let sum_json = |s: &Spectrum| complex_json(s.sum());

    match config.method {
        RunMethod::Chain => {
            let mut chain = chain_rates(config.dims[0], spec.theta)?;
            label_chain(&mut chain);
            let s = Spectrum {
                rates: chain.z.iter().map(|z| z * spec.gammas[0]).collect(),
                method: Method::Chain,
                tuples: Some((0..chain.n).map(|i| vec![i]).collect()),
            };
            let k = (!chain.labels.contains(&RateLabel::Unclassified))
                .then(|| chain.labels.iter().map(|&l| usize::from(l == RateLabel::Superradiant)).collect());
            let report = json!({"n": chain.n, "sum": sum_json(&s)});
            Ok(Artifacts { spectra: vec![LabeledSpectrum::new(&s, k)], report, passed: true })
        }
        RunMethod::Drop => {
            let s = drop_spectrum(&spec)?;
            let k = superradiance_k(&spec, &s)?;
            let counts = k.as_ref().map(|k| {
                let mut c = std::collections::BTreeMap::new();
                for &x in k {
                    *c.entry(x.to_string()).or_insert(0usize) += 1;
                }
                c
            });
            let report = json!({"num_rates": s.len(), "sum": sum_json(&s), "cluster_counts": counts});
            Ok(Artifacts { spectra: vec![LabeledSpectrum::new(&s, k)], report, passed: true })
        }
        RunMethod::EomCnm | RunMethod::EomDet => {
            let method = if config.method == RunMethod::EomCnm { Method::EomCnm } else { Method::EomDet };
            let drop = drop_spectrum(&spec)?;
            let r = eom_poles(&spec, method, &drop, &tol)?;
            let max_residual = r.residuals.iter().copied().fold(0.0, f64::max);
            let report = json!({
                "num_rates": r.poles.len(),
                "sum": sum_json(&r.poles),
                "max_residual": round12(max_residual),
                "seeds_used": r.seeds_used.len(),
            });
            Ok(Artifacts { spectra: vec![LabeledSpectrum::new(&r.poles, None)], report, passed: true })
        }
        RunMethod::Compare => {
            let drop = drop_spectrum(&spec)?;
            let k = superradiance_k(&spec, &drop)?;
            let r = eom_poles(&spec, config.reference, &drop, &tol)?;
            let abs_tol = tol.match_tol * spec.rate_scale();
            let m = match_spectra(&drop, &r.poles, abs_tol)?;
            // carry each DRoP label over to its partner pole
            let mut eom = r.poles.clone();
            let mut tuples = vec![Vec::new(); eom.len()];
            let mut eom_k = vec![0; eom.len()];
            for &(i, j) in &m.pairing {
                tuples[j] = drop.tuples.as_ref().map(|t| t[i].clone()).unwrap_or_default();
                if let Some(k) = &k {
                    eom_k[j] = k[i];
                }
            }
            eom.tuples = Some(tuples);
            let report = json!({
                "num_rates": drop.len(),
                "reference": config.reference.to_string(),
                "match": match_json(&m),
                "max_residual": round12(r.residuals.iter().copied().fold(0.0, f64::max)),
            });
            Ok(Artifacts {
                spectra: vec![LabeledSpectrum::new(&drop, k.clone()), LabeledSpectrum::new(&eom, k.map(|_| eom_k))],
                report,
                passed: m.passed,
            })
        }
    }
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io { path: path.display().to_string(), message: e.to_string() };
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    /// Result text destined for stdout when no output path is configured.
    pub stdout: Option<String>,
}

/// Executes `config` and writes its result files.
pub fn run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let artifacts = execute(config)?;
    let text = match config.output.format {
        OutputFormat::Json => artifacts.to_json(config),
        OutputFormat::Csv => artifacts.to_csv()?,
    };
    if let Some(svg) = &config.output.svg_path {
        write_atomic(svg, artifacts.to_svg().as_bytes())?;
    }
    let stdout = match &config.output.path {
        Some(p) => {
            write_atomic(p, text.as_bytes())?;
            None
        }
        None => Some(text),
    };
    let exit_code = if artifacts.passed { EXIT_OK } else { EXIT_VALIDATION };
    Ok(RunOutcome { exit_code, stdout })
}

/// Null space at `Delta = 0`, `theta = m pi` and its worst line sum per sign
/// rule.
/// Passes when the nullity equals `prod (N_n - 1)`.
pub fn bic_report(dims: &[usize], m: i64, rank_tol: f64) -> Result<(Value, bool), CliError> {
    positive("rank_tol", rank_tol)?;
    let spec = NetworkSpec::new(dims.to_vec(), vec![1.0; dims.len()], 0.0)?;
    let r = bic_condition_check(&spec, m, rank_tol)?;
    let violations: serde_json::Map<String, Value> = SIGN_RULES
        .iter()
        .map(|&rule| (rule_name(rule), json!(round12(r.max_violation(rule)))))
        .collect();
    let satisfied: Vec<String> =
        SIGN_RULES.iter().filter(|&&rule| r.max_violation(rule) <= 1e-8).map(|&rule| rule_name(rule)).collect();
    let passed = r.nullity == r.expected_nullity;
    let doc = json!({
        "dims": dims,
        "m": m,
        "rank_tol": rank_tol,
        "nullity": r.nullity,
        "expected_nullity": r.expected_nullity,
        "max_violation": violations,
        "rules_within_1e-8": satisfied,
        "passed": passed,
    });
    Ok((doc, passed))
}

/// DRoP against the eigenvalue route at each θ; passes when all match.
pub fn theta_sweep(dims: &[usize], gammas: &[f64], thetas_over_pi: &[f64], match_tol: f64) -> Result<(Value, bool), CliError> {
    positive("match_tol", match_tol)?;
    let mut rows = Vec::new();
    let mut all = true;
    for &t in thetas_over_pi {
        let spec = NetworkSpec::new(dims.to_vec(), gammas.to_vec(), t * std::f64::consts::PI)?;
        let drop = drop_spectrum(&spec)?;
        let eom = all_poles_eigen(&spec)?;
        let m = match_spectra(&drop, &eom.poles, match_tol * spec.rate_scale())?;
        all &= m.passed;
        rows.push(json!({"theta_over_pi": t, "match": match_json(&m)}));
    }
    Ok((json!({"dims": dims, "gammas": gammas, "sweep": rows, "passed": all}), all))
}

pub struct ScatterSeries<'a> {
    pub spectrum: &'a Spectrum,
    /// Superradiance dimension per rate; colours the glyphs when present.
    pub k: Option<&'a [usize]>,
}

const K_COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const SERIES_COLORS: [&str; 4] = ["#222222", "#e377c2", "#17becf", "#bcbd22"];

fn glyph(out: &mut String, method: Method, x: f64, y: f64, color: &str) {
    let _ = match method {
        Method::Drop => writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="none" stroke="{color}"/>"#),
        Method::Chain => writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="7" height="7" fill="none" stroke="{color}"/>"#,
            x - 3.5,
            y - 3.5
        ),
        _ => writeln!(
            out,
            r#"<path d="M{:.2} {:.2}L{:.2} {:.2}M{:.2} {:.2}L{:.2} {:.2}" stroke="{color}"/>"#,
            x - 4.0,
            y - 4.0,
            x + 4.0,
            y + 4.0,
            x - 4.0,
            y + 4.0,
            x + 4.0,
            y - 4.0
        ),
    };
}

/// Complex-plane scatter (Re Γ across, Im Γ up) as an SVG 1.1 document.
pub fn render_scatter(series: &[ScatterSeries<'_>]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const L: f64 = 70.0;
    const R: f64 = 150.0;
    const T: f64 = 30.0;
    const B: f64 = 60.0;

    let pts: Vec<Complex64> = series.iter().flat_map(|s| s.spectrum.rates.iter().copied()).collect();
    let span = |v: Vec<f64>| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            return (-1.0, 1.0);
        }
        let pad = if hi - lo > 1e-12 { 0.05 * (hi - lo) } else { 1.0 };
        (lo - pad, hi + pad)
    };
    let (x0, x1) = span(pts.iter().map(|z| z.re).collect());
    let (y0, y1) = span(pts.iter().map(|z| z.im).collect());
    let px = |x: f64| L + (x - x0) / (x1 - x0) * (W - L - R);
    let py = |y: f64| H - B - (y - y0) / (y1 - y0) * (H - T - B);

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<rect x="{L}" y="{T}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - L - R,
        H - T - B
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (x, y) = (px(xv), py(yv));
        let _ = writeln!(out, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, H - B, H - B + 5.0);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{xv:.3}</text>"#, H - B + 18.0);
        let _ = writeln!(out, r#"<line x1="{}" y1="{y:.2}" x2="{L}" y2="{y:.2}" stroke="black"/>"#, L - 5.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{yv:.3}</text>"#, L - 8.0, y + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">Re Γ</text>"#, (L + W - R) / 2.0, H - 15.0);
    let _ = writeln!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">Im Γ</text>"#,
        (T + H - B) / 2.0
    );

    let mut legend_y = T + 10.0;
    for (idx, s) in series.iter().enumerate() {
        if s.spectrum.is_empty() {
            continue;
        }
        let base = SERIES_COLORS[idx % SERIES_COLORS.len()];
        let _ = writeln!(out, r#"<g class="series" data-method="{}">"#, s.spectrum.method);
        for (i, z) in s.spectrum.rates.iter().enumerate() {
            let color = s.k.and_then(|k| k.get(i)).map_or(base, |&k| K_COLORS[k % K_COLORS.len()]);
            glyph(&mut out, s.spectrum.method, px(z.re), py(z.im), color);
        }
        out.push_str("</g>\n");
        glyph(&mut out, s.spectrum.method, W - R + 20.0, legend_y - 4.0, base);
        let _ = writeln!(out, r#"<text x="{}" y="{legend_y}">{}</text>"#, W - R + 32.0, s.spectrum.method);
        legend_y += 16.0;
    }
    let mut ks: Vec<usize> = series.iter().filter_map(|s| s.k).flatten().copied().collect();
    ks.sort_unstable();
    ks.dedup();
    for k in ks {
        let color = K_COLORS[k % K_COLORS.len()];
        let _ = writeln!(out, r#"<circle cx="{}" cy="{}" r="4" fill="{color}"/>"#, W - R + 20.0, legend_y - 4.0);
        let _ = writeln!(out, r#"<text x="{}" y="{legend_y}">k = {k}</text>"#, W - R + 32.0);
        legend_y += 16.0;
    }
    out.push_str("</svg>\n");
    out
}
