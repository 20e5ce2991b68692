//! Machine-readable result documents. One schema for every subcommand,
//! serialized as JSON with exact rationals as strings and complex numbers as
//! `[re, im]` pairs, so reports are lossless and byte-stable across runs
//! with the same seed and inputs.

use crate::eddeg::{EDReport, EscapeCheck, Method};
use crate::polycore::{ComplexPoint, Rat};
use crate::stratcalc::SiersmaAudit;
use crate::tracker::LimitReport;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub inputs: InputEcho,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ed_degree: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<PointRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_infinity: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_morse: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub escape_check: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub methods_agree: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polar: Option<PolarSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stratcalc: Option<StratSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub siersma: Option<SiersmaSummary>,
    pub failed: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InputEcho {
    pub variables: Vec<String>,
    pub variety: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_point: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linear_form: Option<Vec<String>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PointRow {
    /// Coordinates as `[re, im]` pairs.
    pub location: Vec<[f64; 2]>,
    /// Exact coordinates when recognized, as rational strings.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<Vec<String>>,
    pub n_p: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mult_f: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mult_l: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PolarSummary {
    pub empty: bool,
    pub generators: Vec<String>,
    pub dimension: i64,
    pub linear_form: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StratSummary {
    pub n: std::collections::BTreeMap<String, i64>,
    pub identity_coefficients: std::collections::BTreeMap<String, i64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub negative_strata: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub morse_count: Option<i64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SiersmaSummary {
    pub phi_one: i64,
    pub alpha: i64,
    pub phi_alpha: i64,
    pub n_zero: i64,
}

pub fn complex_point_row(
    p: &ComplexPoint,
    rational: &Option<Vec<Rat>>,
) -> (Vec<[f64; 2]>, Option<Vec<String>>) {
    let loc = p.0.iter().map(|z| [z.re, z.im]).collect();
    let exact = rational
        .as_ref()
        .map(|r| r.iter().map(|c| c.to_string()).collect());
    (loc, exact)
}

impl Report {
    pub fn new(command: &str, inputs: InputEcho, seed: u64) -> Report {
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            inputs,
            seed,
            ed_degree: None,
            points: Vec::new(),
            m_infinity: None,
            total_morse: None,
            escape_check: None,
            methods_agree: None,
            polar: None,
            stratcalc: None,
            siersma: None,
            failed: false,
            warnings: Vec::new(),
        }
    }

    pub fn with_ed(mut self, ed: &EDReport) -> Report {
        self.ed_degree = ed.ed_degree;
        self.m_infinity = Some(ed.m_infinity);
        self.total_morse = ed.total_morse;
        self.methods_agree = ed.methods_agree;
        self.failed = ed.failed;
        self.warnings.extend(ed.warnings.iter().cloned());
        self.escape_check = Some(
            match ed.escape_check {
                EscapeCheck::VerifiedNone => "verified-none",
                EscapeCheck::Escapes(_) => "escapes",
                EscapeCheck::Asserted => "asserted",
            }
            .to_string(),
        );
        let with_mults = !matches!(ed.method, Method::Tracking);
        for p in &ed.per_point {
            let (location, exact) = complex_point_row(&p.location, &p.rational);
            self.points.push(PointRow {
                location,
                exact,
                n_p: p.n_p,
                mult_f: with_mults.then_some(p.mult_f),
                mult_l: with_mults.then_some(p.mult_l),
            });
        }
        self
    }

    pub fn with_limits(mut self, limits: &LimitReport) -> Report {
        self.m_infinity = Some(limits.m_infinity);
        self.total_morse = Some(limits.total_morse);
        for p in &limits.limit_points {
            let (location, exact) = complex_point_row(&p.location, &p.rational);
            self.points.push(PointRow {
                location,
                exact,
                n_p: p.multiplicity,
                mult_f: None,
                mult_l: None,
            });
        }
        self
    }

    pub fn with_siersma(mut self, audit: &SiersmaAudit) -> Report {
        self.siersma = Some(SiersmaSummary {
            phi_one: audit.phi_one,
            alpha: audit.alpha,
            phi_alpha: audit.phi_alpha,
            n_zero: audit.n_zero,
        });
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}
