//! Regression specifications and estimation-sample preparation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Frame, StatsError};
use crate::panel::winsor::{winsorize, winsorize_by_group};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    Eq,
    Ne,
    Gt,
    Ge,
    Lt,
    Le,
}

impl Cmp {
    pub fn holds(self, a: f64, b: f64) -> bool {
        match self {
            Cmp::Eq => a == b,
            Cmp::Ne => a != b && !a.is_nan(),
            Cmp::Gt => a > b,
            Cmp::Ge => a >= b,
            Cmp::Lt => a < b,
            Cmp::Le => a <= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Eq => "==",
            Cmp::Ne => "!=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
            Cmp::Lt => "<",
            Cmp::Le => "<=",
        }
    }

    pub fn parse(s: &str) -> Option<Cmp> {
        Some(match s {
            "==" | "=" => Cmp::Eq,
            "!=" => Cmp::Ne,
            ">" => Cmp::Gt,
            ">=" => Cmp::Ge,
            "<" => Cmp::Lt,
            "<=" => Cmp::Le,
            _ => return None,
        })
    }
}

/// Row predicate `column cmp value`. Missing values never pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Filter {
    pub column: String,
    pub cmp: Cmp,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Winsorize {
    pub lower: f64,
    pub upper: f64,
    /// Label column to winsorize within, e.g. the quarter.
    pub by: Option<String>,
}

impl Default for Winsorize {
    fn default() -> Self {
        Winsorize {
            lower: 0.01,
            upper: 0.99,
            by: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FixedEffects {
    pub firm: bool,
    pub quarter: bool,
}

impl FixedEffects {
    pub const BOTH: FixedEffects = FixedEffects { firm: true, quarter: true };
    pub const NONE: FixedEffects = FixedEffects {
        firm: false,
        quarter: false,
    };

    pub fn any(self) -> bool {
        self.firm || self.quarter
    }
}

/// Standard-error flavour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SeKind {
    /// Cluster-robust with the G/(G-1)·(N-1)/(N-K) factor.
    #[default]
    Cr1,
    /// Cluster-robust with G/(G-1) only.
    Cr0,
    /// Heteroskedasticity-robust with N/(N-K).
    Hc1,
    Classical,
}

impl SeKind {
    pub fn clustered(self) -> bool {
        matches!(self, SeKind::Cr1 | SeKind::Cr0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSpec {
    pub name: String,
    pub dependent: String,
    pub regressors: Vec<String>,
    /// Products of two columns, named `a:b`.
    pub interactions: Vec<(String, String)>,
    pub fixed_effects: FixedEffects,
    pub firm_col: String,
    pub quarter_col: String,
    pub cluster: Option<String>,
    pub filter: Vec<Filter>,
    pub winsorize: Option<Winsorize>,
    pub se: SeKind,
}

impl RegressionSpec {
    /// Firm and quarter fixed effects, firm clusters, 1/99 winsorization.
    pub fn new(name: &str, dependent: &str, regressors: &[&str]) -> RegressionSpec {
        RegressionSpec {
            name: name.to_string(),
            dependent: dependent.to_string(),
            regressors: regressors.iter().map(|s| s.to_string()).collect(),
            interactions: Vec::new(),
            fixed_effects: FixedEffects::BOTH,
            firm_col: crate::panel::assemble::FIRM.to_string(),
            quarter_col: crate::panel::assemble::QUARTER.to_string(),
            cluster: Some(crate::panel::assemble::FIRM.to_string()),
            filter: Vec::new(),
            winsorize: Some(Winsorize::default()),
            se: SeKind::Cr1,
        }
    }

    pub fn with_interaction(mut self, a: &str, b: &str) -> Self {
        self.interactions.push((a.to_string(), b.to_string()));
        self
    }

    pub fn with_filter(mut self, column: &str, cmp: Cmp, value: f64) -> Self {
        self.filter.push(Filter {
            column: column.to_string(),
            cmp,
            value,
        });
        self
    }

    pub fn with_fixed_effects(mut self, fe: FixedEffects) -> Self {
        self.fixed_effects = fe;
        self
    }

    pub fn with_cluster(mut self, cluster: Option<&str>) -> Self {
        self.cluster = cluster.map(str::to_string);
        self
    }

    pub fn with_se(mut self, se: SeKind) -> Self {
        self.se = se;
        self
    }

    pub fn with_winsorize(mut self, w: Option<Winsorize>) -> Self {
        self.winsorize = w;
        self
    }

    /// Regressor names followed by interaction names.
    pub fn terms(&self) -> Vec<String> {
        let mut t = self.regressors.clone();
        t.extend(self.interactions.iter().map(|(a, b)| format!("{a}:{b}")));
        t
    }

    /// Every column read from the data, in first-use order.
    pub fn variables(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let all = core::iter::once(self.dependent.as_str())
            .chain(self.regressors.iter().map(String::as_str))
            .chain(self.interactions.iter().flat_map(|(a, b)| [a.as_str(), b.as_str()]));
        for v in all {
            if seen.insert(v) {
                out.push(v);
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        let mut seen = BTreeSet::new();
        for t in self.terms() {
            if t == self.dependent {
                return Err(StatsError::InvalidSpec(format!("`{t}` is both dependent and regressor")));
            }
            if !seen.insert(t.clone()) {
                return Err(StatsError::InvalidSpec(format!("duplicate term `{t}`")));
            }
        }
        if seen.is_empty() {
            return Err(StatsError::InvalidSpec("no regressors".into()));
        }
        if self.se.clustered() && self.cluster.is_none() {
            return Err(StatsError::InvalidSpec("clustered errors need a cluster column".into()));
        }
        if let Some(w) = &self.winsorize {
            if !(0.0..=w.upper).contains(&w.lower) || w.upper > 1.0 {
                return Err(StatsError::InvalidSpec("winsorization bounds must satisfy 0 <= lower <= upper <= 1".into()));
            }
        }
        Ok(())
    }
}

pub const QR_UEPS: &str = "Qr_UEPS";

/// Drift regression: `nor`, `Qr_UEPS` and controls, plus, when `full`,
/// the `nor × Qr_UEPS` and `control × Qr_UEPS` interactions.
pub fn pead_spec(name: &str, dependent: &str, nor: &str, controls: &[&str], full: bool) -> RegressionSpec {
    let mut regs = alloc::vec![QR_UEPS, nor];
    regs.extend_from_slice(controls);
    let mut s = RegressionSpec::new(name, dependent, &regs);
    if full {
        s = s.with_interaction(QR_UEPS, nor);
        for c in controls {
            s = s.with_interaction(QR_UEPS, c);
        }
    }
    s
}

/// Checks that a drift specification carries `Qr_UEPS`, the NOR column,
/// `Qr_UEPS × nor` and `Qr_UEPS × control` for every other regressor.
pub fn validate_pead(spec: &RegressionSpec, nor: &str) -> Result<(), StatsError> {
    spec.validate()?;
    let has_reg = |c: &str| spec.regressors.iter().any(|r| r == c);
    let has_int = |c: &str| {
        spec.interactions
            .iter()
            .any(|(a, b)| (a == QR_UEPS && b == c) || (b == QR_UEPS && a == c))
    };
    for needed in [QR_UEPS, nor] {
        if !has_reg(needed) {
            return Err(StatsError::InvalidSpec(format!("drift model needs regressor `{needed}`")));
        }
    }
    if !has_int(nor) {
        return Err(StatsError::InvalidSpec(format!("drift model needs `{QR_UEPS}:{nor}`")));
    }
    for c in spec.regressors.iter().filter(|r| *r != QR_UEPS && *r != nor) {
        if !has_int(c) {
            return Err(StatsError::InvalidSpec(format!("drift model needs `{QR_UEPS}:{c}`")));
        }
    }
    let allowed = spec
        .interactions
        .iter()
        .all(|(a, b)| (a == QR_UEPS && has_reg(b)) || (b == QR_UEPS && has_reg(a)));
    if !allowed {
        return Err(StatsError::InvalidSpec("drift interactions must pair a regressor with Qr_UEPS".into()));
    }
    Ok(())
}

/// Group levels of one identifier column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Levels {
    pub codes: Vec<u32>,
    pub names: Vec<String>,
}

impl Levels {
    fn from_keys(keys: Vec<String>) -> Levels {
        let mut index: BTreeMap<String, u32> = BTreeMap::new();
        for k in &keys {
            let next = index.len() as u32;
            index.entry(k.clone()).or_insert(next);
        }
        let mut names = alloc::vec![String::new(); index.len()];
        for (k, &i) in &index {
            names[i as usize] = k.clone();
        }
        let codes = keys.iter().map(|k| index[k]).collect();
        Levels { codes, names }
    }

    pub fn n_levels(&self) -> usize {
        self.names.len()
    }

    fn take(&self, rows: &[usize]) -> Levels {
        Levels::from_keys(rows.iter().map(|&i| self.names[self.codes[i] as usize].clone()).collect())
    }
}

fn keys_of(frame: &Frame, col: &str) -> Result<Vec<Option<String>>, StatsError> {
    if let Some(l) = frame.label(col) {
        return Ok(l.iter().map(|s| (!s.is_empty()).then(|| s.clone())).collect());
    }
    if let Some(v) = frame.numeric(col) {
        return Ok(v.iter().map(|x| x.is_finite().then(|| format!("{x}"))).collect());
    }
    Err(StatsError::MissingColumn(col.to_string()))
}

/// Estimation sample after filtering, listwise deletion, winsorization and
/// interaction construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub dependent: String,
    pub terms: Vec<String>,
    pub y: Vec<f64>,
    /// One vector per term.
    pub x: Vec<Vec<f64>>,
    pub firm: Option<Levels>,
    pub quarter: Option<Levels>,
    pub cluster: Option<Levels>,
    /// Frame row of each observation.
    pub rows: Vec<usize>,
    /// Extra columns requested by the caller, aligned with `rows`.
    pub extra: Vec<Vec<f64>>,
}

impl Prepared {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// The observations at positions `idx`, with levels re-coded.
    pub fn subset(&self, idx: &[usize]) -> Prepared {
        let pick = |v: &Vec<f64>| idx.iter().map(|&i| v[i]).collect::<Vec<f64>>();
        Prepared {
            dependent: self.dependent.clone(),
            terms: self.terms.clone(),
            y: pick(&self.y),
            x: self.x.iter().map(pick).collect(),
            firm: self.firm.as_ref().map(|l| l.take(idx)),
            quarter: self.quarter.as_ref().map(|l| l.take(idx)),
            cluster: self.cluster.as_ref().map(|l| l.take(idx)),
            rows: idx.iter().map(|&i| self.rows[i]).collect(),
            extra: self.extra.iter().map(pick).collect(),
        }
    }
}

fn is_binary(v: &[f64]) -> bool {
    v.iter().all(|&x| x == 0.0 || x == 1.0)
}

/// Builds the estimation sample for `spec`. `extra` names numeric columns
/// that must also be non-missing and are returned alongside.
pub fn prepare(spec: &RegressionSpec, frame: &Frame, extra: &[&str]) -> Result<Prepared, StatsError> {
    spec.validate()?;
    let n = frame.len();
    let vars = spec.variables();
    let mut cols: Vec<&[f64]> = Vec::new();
    for v in vars.iter().chain(extra) {
        cols.push(frame.numeric(v).ok_or_else(|| StatsError::MissingColumn(v.to_string()))?);
    }
    let mut filters = Vec::new();
    for f in &spec.filter {
        filters.push((frame.numeric(&f.column).ok_or_else(|| StatsError::MissingColumn(f.column.clone()))?, f));
    }
    let firm_keys = if spec.fixed_effects.firm { Some(keys_of(frame, &spec.firm_col)?) } else { None };
    let quarter_keys = if spec.fixed_effects.quarter { Some(keys_of(frame, &spec.quarter_col)?) } else { None };
    let cluster_keys = match &spec.cluster {
        Some(c) if spec.se.clustered() => Some(keys_of(frame, c)?),
        _ => None,
    };
    let group_keys = match spec.winsorize.as_ref().and_then(|w| w.by.as_ref()) {
        Some(g) => Some(keys_of(frame, g)?),
        None => None,
    };
    let present = |keys: &Option<Vec<Option<String>>>, i: usize| keys.as_ref().is_none_or(|k| k[i].is_some());
    let rows: Vec<usize> = (0..n)
        .filter(|&i| filters.iter().all(|(c, f)| f.cmp.holds(c[i], f.value)))
        .filter(|&i| cols.iter().all(|c| c[i].is_finite()))
        .filter(|&i| present(&firm_keys, i) && present(&quarter_keys, i) && present(&cluster_keys, i) && present(&group_keys, i))
        .collect();
    if rows.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let levels = |keys: Option<Vec<Option<String>>>| {
        keys.map(|k| Levels::from_keys(rows.iter().map(|&i| k[i].clone().unwrap_or_default()).collect()))
    };
    let groups: Option<Vec<String>> = group_keys.map(|k| rows.iter().map(|&i| k[i].clone().unwrap_or_default()).collect());

    let mut values: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (v, c) in vars.iter().zip(&cols) {
        let mut s: Vec<f64> = rows.iter().map(|&i| c[i]).collect();
        if let Some(w) = &spec.winsorize {
            if !is_binary(&s) {
                s = match &groups {
                    Some(g) => winsorize_by_group(&s, g, w.lower, w.upper),
                    None => winsorize(&s, w.lower, w.upper),
                };
            }
        }
        values.insert(v, s);
    }
    let mut x: Vec<Vec<f64>> = spec.regressors.iter().map(|r| values[r.as_str()].clone()).collect();
    for (a, b) in &spec.interactions {
        x.push(values[a.as_str()].iter().zip(&values[b.as_str()]).map(|(p, q)| p * q).collect());
    }
    let extra_vals = cols[vars.len()..]
        .iter()
        .map(|c| rows.iter().map(|&i| c[i]).collect())
        .collect();
    Ok(Prepared {
        dependent: spec.dependent.clone(),
        terms: spec.terms(),
        y: values[spec.dependent.as_str()].clone(),
        x,
        firm: levels(firm_keys),
        quarter: levels(quarter_keys),
        cluster: levels(cluster_keys),
        rows,
        extra: extra_vals,
    })
}
