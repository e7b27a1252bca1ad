//! Instance and solution files.
//!
//! Complex matrices are arrays of rows, each row an array of `[re, im]`
//! pairs. A flat row-major list of pairs is accepted on input as well.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sharecap_core::{
    ActiveConstraints, CMatrix, CVector, DualVariables, HermitianMatrix, KktResiduals, ProblemError,
    ProblemInstance, RegimeReport, Solution, User, C64,
};

/// Largest accepted entrywise deviation of a Gram matrix from Hermitian,
/// relative to its largest entry when that exceeds one.
pub const HERMITIAN_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Field { path: String, message: String },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        let text = e.to_string();
        let message = match text.rsplit_once(" at line ") {
            Some((head, _)) => head.to_string(),
            None => text,
        };
        FormatError::Json {
            line: e.line(),
            column: e.column(),
            message,
        }
    }
}

fn field(path: impl Into<String>, message: impl Into<String>) -> FormatError {
    FormatError::Field {
        path: path.into(),
        message: message.into(),
    }
}

pub type Rows = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum MatrixRepr {
    Rows(Rows),
    Flat(Vec<[f64; 2]>),
}

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    m: usize,
    W1: Option<MatrixRepr>,
    H1: Option<MatrixRepr>,
    P_T: f64,
    #[serde(default)]
    users: Vec<RawUser>,
    total_ipc: Option<f64>,
    meta: Option<Value>,
}

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUser {
    W2: Option<MatrixRepr>,
    H2: Option<MatrixRepr>,
    P_I: Option<f64>,
}

/// A parsed instance file.
#[derive(Debug, Clone)]
pub struct InstanceFile {
    pub instance: ProblemInstance,
    /// Free-form metadata carried along unchanged (for example the seed of a
    /// generated instance).
    pub meta: Option<Value>,
}

pub fn read_instance(path: &Path) -> Result<InstanceFile, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_instance(&text)
}

pub fn parse_instance(text: &str) -> Result<InstanceFile, FormatError> {
    let raw: RawInstance = serde_json::from_str(text)?;
    let m = raw.m;
    if m == 0 {
        return Err(field("m", "must be at least 1"));
    }
    if raw.P_T <= 0.0 || !raw.P_T.is_finite() {
        return Err(field("P_T", "must be positive and finite"));
    }
    let w1 = gram("", "W1", "H1", raw.W1.as_ref(), raw.H1.as_ref(), m)?;
    let aggregate = raw.total_ipc.is_some();
    let mut users = Vec::with_capacity(raw.users.len());
    for (k, u) in raw.users.iter().enumerate() {
        let prefix = format!("users[{k}].");
        let gram = gram(&prefix, "W2", "H2", u.W2.as_ref(), u.H2.as_ref(), m)?;
        let cap = match (u.P_I, aggregate) {
            (Some(c), false) => c,
            (Some(_), true) => {
                log::warn!("users[{k}].P_I is ignored because total_ipc is given");
                0.0
            }
            (None, true) => 0.0,
            (None, false) => return Err(field(format!("{prefix}P_I"), "missing")),
        };
        if cap < 0.0 || !cap.is_finite() {
            return Err(field(format!("{prefix}P_I"), "must be non-negative and finite"));
        }
        users.push(User { gram, cap });
    }
    let mut instance = ProblemInstance::new(w1, users, raw.P_T)?;
    if let Some(total) = raw.total_ipc {
        if total < 0.0 || !total.is_finite() {
            return Err(field("total_ipc", "must be non-negative and finite"));
        }
        if instance.num_users() == 0 {
            return Err(field("total_ipc", "needs at least one user"));
        }
        instance = instance.aggregate_total_ipc(total)?;
    }
    Ok(InstanceFile {
        instance,
        meta: raw.meta,
    })
}

fn gram(
    prefix: &str,
    w_name: &str,
    h_name: &str,
    w: Option<&MatrixRepr>,
    h: Option<&MatrixRepr>,
    m: usize,
) -> Result<HermitianMatrix, FormatError> {
    match (w, h) {
        (Some(w), None) => {
            let path = format!("{prefix}{w_name}");
            let raw = to_matrix(w, m, &path)?;
            if raw.nrows() != m {
                return Err(field(path, format!("has {} rows, expected {m}", raw.nrows())));
            }
            let scale = raw.iter().fold(1.0_f64, |acc, z| acc.max(z.norm()));
            let dev = HermitianMatrix::hermitian_deviation(&raw);
            if dev > HERMITIAN_TOL * scale {
                return Err(field(path, format!("not Hermitian (deviation {dev:e})")));
            }
            HermitianMatrix::new(raw).map_err(|e| field(path, e.to_string()))
        }
        (None, Some(h)) => {
            let path = format!("{prefix}{h_name}");
            let raw = to_matrix(h, m, &path)?;
            sharecap_core::gram_from_channel(&raw).map_err(|e| field(path, e.to_string()))
        }
        _ => Err(field(
            if prefix.is_empty() { "<root>".to_string() } else { prefix.trim_end_matches('.').to_string() },
            format!("exactly one of \"{w_name}\" or \"{h_name}\" is required"),
        )),
    }
}

fn to_matrix(repr: &MatrixRepr, cols: usize, path: &str) -> Result<CMatrix, FormatError> {
    let flat: Vec<[f64; 2]> = match repr {
        MatrixRepr::Rows(rows) => {
            for (r, row) in rows.iter().enumerate() {
                if row.len() != cols {
                    return Err(field(format!("{path}[{r}]"), format!("has {} entries, expected {cols}", row.len())));
                }
            }
            rows.iter().flatten().copied().collect()
        }
        MatrixRepr::Flat(v) => {
            if v.len() % cols != 0 {
                return Err(field(path, format!("{} entries is not a multiple of {cols}", v.len())));
            }
            v.clone()
        }
    };
    if flat.is_empty() {
        return Err(field(path, "is empty"));
    }
    if flat.iter().flatten().any(|x| !x.is_finite()) {
        return Err(field(path, "has a non-finite entry"));
    }
    let rows = flat.len() / cols;
    Ok(CMatrix::from_fn(rows, cols, |i, j| {
        let [re, im] = flat[i * cols + j];
        C64::new(re, im)
    }))
}

pub fn matrix_rows(m: &CMatrix) -> Rows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

fn rows_to_hermitian(rows: &Rows, path: &str) -> Result<HermitianMatrix, FormatError> {
    let n = rows.len();
    let m = to_matrix(&MatrixRepr::Rows(rows.clone()), n.max(1), path)?;
    HermitianMatrix::new(m).map_err(|e| field(path, e.to_string()))
}

/// Instance as JSON in Gram form.
pub fn instance_to_json(instance: &ProblemInstance, meta: Option<&Value>) -> Value {
    let users: Vec<Value> = instance
        .users()
        .iter()
        .map(|u| serde_json::json!({ "W2": matrix_rows(u.gram.as_matrix()), "P_I": u.cap }))
        .collect();
    let mut out = serde_json::json!({
        "m": instance.dim(),
        "W1": matrix_rows(instance.signal_gram().as_matrix()),
        "P_T": instance.total_power(),
        "users": users,
    });
    if let Some(meta) = meta {
        out["meta"] = meta.clone();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualsJson {
    pub mu1: f64,
    /// Zero-forcing multipliers are written as the string `"inf"`.
    #[serde(with = "multipliers")]
    pub mu2: Vec<f64>,
}

mod multipliers {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::Value;

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let out: Vec<Value> = values
            .iter()
            .map(|&v| if v == f64::INFINITY { Value::from("inf") } else { Value::from(v) })
            .collect();
        out.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Value>::deserialize(d)?
            .into_iter()
            .map(|v| match v {
                Value::String(s) if s == "inf" => Ok(f64::INFINITY),
                Value::Number(n) => n.as_f64().ok_or_else(|| D::Error::custom("bad multiplier")),
                other => Err(D::Error::custom(format!("bad multiplier {other}"))),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveJson {
    pub tpc: bool,
    pub ipc: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktJson {
    pub stationarity: f64,
    pub comp_slack_power: f64,
    pub comp_slack_interference: Vec<f64>,
    pub dual_feas: f64,
    pub primal_feas: f64,
}

impl From<&KktResiduals> for KktJson {
    fn from(k: &KktResiduals) -> Self {
        Self {
            stationarity: k.stationarity,
            comp_slack_power: k.comp_slack_power,
            comp_slack_interference: k.comp_slack_interference.clone(),
            dual_feas: k.dual_feas,
            primal_feas: k.primal_feas,
        }
    }
}

impl From<&KktJson> for KktResiduals {
    fn from(k: &KktJson) -> Self {
        Self {
            stationarity: k.stationarity,
            comp_slack_power: k.comp_slack_power,
            comp_slack_interference: k.comp_slack_interference.clone(),
            dual_feas: k.dual_feas,
            primal_feas: k.primal_feas,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeJson {
    pub unbounded_growth: bool,
    pub zero_capacity: bool,
    pub tpc_redundancy_possible: bool,
    pub favorable_rank: bool,
    pub capacity_upper_bound_nats: Option<f64>,
    pub certifying_vector: Option<Vec<[f64; 2]>>,
    pub zero_cap_users: Vec<usize>,
}

impl From<&RegimeReport> for RegimeJson {
    fn from(r: &RegimeReport) -> Self {
        Self {
            unbounded_growth: r.unbounded_growth,
            zero_capacity: r.zero_capacity,
            tpc_redundancy_possible: r.tpc_redundancy_possible,
            favorable_rank: r.favorable_rank,
            capacity_upper_bound_nats: r.capacity_upper_bound_nats,
            certifying_vector: r
                .certifying_vector
                .as_ref()
                .map(|v| v.iter().map(|z| [z.re, z.im]).collect()),
            zero_cap_users: r.zero_cap_users.clone(),
        }
    }
}

impl RegimeJson {
    pub fn certifying_vector(&self) -> Option<CVector> {
        self.certifying_vector
            .as_ref()
            .map(|v| CVector::from_iterator(v.len(), v.iter().map(|&[re, im]| C64::new(re, im))))
    }
}

/// Contents of a solution file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub capacity_nats: f64,
    pub capacity_bits: f64,
    #[serde(rename = "R")]
    pub covariance: Rows,
    pub duals: DualsJson,
    pub active_constraints: ActiveJson,
    pub kkt_residuals: KktJson,
    pub method: String,
    pub regime: RegimeJson,
}

impl SolutionFile {
    pub fn new(solution: &Solution, regime: &RegimeReport) -> Self {
        Self {
            capacity_nats: solution.capacity_nats,
            capacity_bits: solution.capacity_bits(),
            covariance: matrix_rows(solution.covariance.as_matrix()),
            duals: DualsJson {
                mu1: solution.duals.power,
                mu2: solution.duals.interference.clone(),
            },
            active_constraints: ActiveJson {
                tpc: solution.active.power,
                ipc: solution.active.interference.clone(),
            },
            kkt_residuals: KktJson::from(&solution.kkt),
            method: solution.method.as_str().to_string(),
            regime: RegimeJson::from(regime),
        }
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        crate::json::to_string(self)
    }

    pub fn covariance(&self) -> Result<HermitianMatrix, FormatError> {
        rows_to_hermitian(&self.covariance, "R")
    }

    pub fn duals(&self) -> DualVariables {
        DualVariables {
            power: self.duals.mu1,
            interference: self.duals.mu2.clone(),
        }
    }

    pub fn active(&self) -> ActiveConstraints {
        ActiveConstraints {
            power: self.active_constraints.tpc,
            interference: self.active_constraints.ipc.clone(),
        }
    }

    pub fn kkt(&self) -> KktResiduals {
        KktResiduals::from(&self.kkt_residuals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WF: &str = r#"{"m": 2, "W1": [[[4, 0], [0, 0]], [[0, 0], [1, 0]]], "P_T": 1}"#;

    #[test]
    fn parses_gram_and_channel_forms() {
        let f = parse_instance(WF).unwrap();
        assert_eq!(f.instance.dim(), 2);
        assert_eq!(f.instance.num_users(), 0);
        let h = r#"{"m": 2, "H1": [[2, 0], [0, 0], [0, 0], [1, 0]], "P_T": 1,
                    "users": [{"H2": [[[1, 0], [0, 0]]], "P_I": 0.5}]}"#;
        let g = parse_instance(h).unwrap();
        assert_eq!(g.instance.signal_gram(), f.instance.signal_gram());
        assert_eq!(g.instance.users()[0].cap, 0.5);
    }

    #[test]
    fn rejects_bad_fields() {
        let both = r#"{"m": 1, "W1": [[[1, 0]]], "H1": [[[1, 0]]], "P_T": 1}"#;
        assert!(matches!(parse_instance(both), Err(FormatError::Field { .. })));
        let skew = r#"{"m": 2, "W1": [[[1, 0], [0.5, 0]], [[0, 0], [1, 0]]], "P_T": 1}"#;
        let err = parse_instance(skew).unwrap_err().to_string();
        assert!(err.starts_with("W1: not Hermitian"), "{err}");
        let short = r#"{"m": 2, "W1": [[[1, 0], [0, 0]], [[0, 0]]], "P_T": 1}"#;
        assert!(parse_instance(short).unwrap_err().to_string().starts_with("W1[1]"));
        let cap = r#"{"m": 1, "W1": [[[1, 0]]], "P_T": 1, "users": [{"W2": [[[1, 0]]]}]}"#;
        assert_eq!(parse_instance(cap).unwrap_err().to_string(), "users[0].P_I: missing");
        let unknown = r#"{"m": 1, "W1": [[[1, 0]]], "P_T": 1, "extra": 3}"#;
        assert!(matches!(parse_instance(unknown), Err(FormatError::Json { line: 1, .. })));
    }

    #[test]
    fn not_psd_is_a_problem_error() {
        let neg = r#"{"m": 1, "W1": [[[-1, 0]]], "P_T": 1}"#;
        assert!(matches!(parse_instance(neg), Err(FormatError::Problem(_))));
    }

    #[test]
    fn total_ipc_aggregates() {
        let text = r#"{"m": 2, "W1": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]], "P_T": 1, "total_ipc": 0.7,
                       "users": [{"W2": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]},
                                 {"W2": [[[0, 0], [0, 0]], [[0, 0], [2, 0]]]}]}"#;
        let f = parse_instance(text).unwrap();
        assert_eq!(f.instance.num_users(), 1);
        assert_eq!(f.instance.users()[0].cap, 0.7);
        assert_eq!(f.instance.users()[0].gram, HermitianMatrix::from_diagonal(&[1.0, 2.0]));
    }

    #[test]
    fn instance_round_trip() {
        let f = parse_instance(WF).unwrap();
        let meta = serde_json::json!({"seed": 3});
        let text = crate::json::to_string(&instance_to_json(&f.instance, Some(&meta)));
        let g = parse_instance(&text).unwrap();
        assert_eq!(g.instance, f.instance);
        assert_eq!(g.meta, Some(meta));
    }
}
