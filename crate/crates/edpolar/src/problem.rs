//! Problem files: the TOML format the CLI consumes, with validation that
//! reports every issue instead of stopping at the first.
//!
//! A problem file declares variables, the variety's equations, either a
//! polynomial function or a rational data point, and optionally a linear
//! form, a seed, tolerance overrides, and a stratification block for the
//! coefficient calculus. Unknown keys are rejected.

use crate::eddeg::EDProblem;
use crate::geometry::VarietySpec;
use crate::ideals::{std_ideal, IdealError};
use crate::polycore::{parse_polynomial, LinearForm, Polynomial, Rat, Ring};
use crate::stratcalc::{Stratum, StratumData, StratumPoset};
use num::{BigInt, BigRational, Zero};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("problem file is not valid TOML: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("problem file invalid:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
    #[error(transparent)]
    Ideal(#[from] IdealError),
}

/// Raw problem file, mirroring the TOML schema.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    /// Ordered ambient variable names.
    pub variables: Vec<String>,
    /// Defining equations of the variety; empty means all of affine space.
    #[serde(default)]
    pub variety: Vec<String>,
    /// Polynomial to perturb and analyze. Exactly one of `function` and
    /// `data_point` must be present.
    #[serde(default)]
    pub function: Option<String>,
    /// Rational coordinates (as `p/q` strings) of the data point whose
    /// squared distance function is analyzed.
    #[serde(default)]
    pub data_point: Option<Vec<String>>,
    /// Optional exact coefficients of the linear perturbation form; drawn
    /// from the seed when absent.
    #[serde(default)]
    pub linear_form: Option<Vec<String>>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
    #[serde(default)]
    pub stratification: Option<StratificationBlock>,
    #[serde(default)]
    pub siersma: Option<SiersmaBlock>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Magnitude of the head of the perturbation schedule.
    pub t0: Option<f64>,
    /// Number of geometric steps in the schedule.
    pub schedule_steps: Option<usize>,
    /// Norm beyond which a trajectory counts as escaping.
    pub escape_radius: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StratificationBlock {
    pub ambient_dim: i64,
    pub strata: Vec<StratumEntry>,
    #[serde(default)]
    pub closure: Vec<[String; 2]>,
    #[serde(default)]
    pub mu: BTreeMap<String, i64>,
    #[serde(default)]
    pub clk: Vec<LinkEntry>,
    #[serde(default)]
    pub chi_minus_hyperplane: BTreeMap<String, i64>,
    #[serde(default)]
    pub eu: BTreeMap<String, i64>,
    #[serde(default)]
    pub nearby: Vec<NearbyEntry>,
    #[serde(default)]
    pub m_infinity: Option<i64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StratumEntry {
    pub id: String,
    pub dim: i64,
    #[serde(default)]
    pub singular: bool,
    #[serde(default)]
    pub critical_value: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkEntry {
    pub lower: String,
    pub upper: String,
    pub chi: i64,
}

/// Nearby-fiber and nearby-slice characteristics for one closure pair,
/// feeding the defect route to the invariants.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NearbyEntry {
    pub lower: String,
    pub upper: String,
    pub chi_fiber: i64,
    pub chi_slice: i64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiersmaBlock {
    pub ambient_dim: i64,
    pub clk_reduced_chi: i64,
    pub k: i64,
}

/// Everything a pipeline needs, parsed and validated.
#[derive(Clone, Debug)]
pub struct CompiledProblem {
    pub ring: Ring,
    pub variety: VarietySpec,
    pub function: Polynomial,
    pub data_point: Option<Vec<Rat>>,
    pub linear_form: Option<LinearForm>,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub stratification: Option<CompiledStratification>,
    pub siersma: Option<SiersmaBlock>,
}

/// Stratification inputs compiled to live objects.
#[derive(Clone, Debug)]
pub struct CompiledStratification {
    pub poset: StratumPoset,
    pub data: StratumData,
    pub nearby: crate::stratcalc::NearbyChis,
    pub m_infinity: Option<i64>,
}

pub fn parse_problem(text: &str) -> Result<ProblemFile, ProblemError> {
    Ok(toml::from_str(text)?)
}

fn parse_rat(text: &str) -> Option<Rat> {
    let t = text.trim();
    match t.split_once('/') {
        Some((a, b)) => {
            let num = BigInt::from_str(a.trim()).ok()?;
            let den = BigInt::from_str(b.trim()).ok()?;
            if den.is_zero() {
                None
            } else {
                Some(BigRational::new(num, den))
            }
        }
        None => BigInt::from_str(t).map(BigRational::from_integer).ok(),
    }
}

/// Full static validation: every problem with the file, with enough context
/// to fix it. An empty list means the file compiles.
pub fn validate(file: &ProblemFile) -> Vec<String> {
    let mut diags = Vec::new();
    if file.variables.is_empty() {
        diags.push("at least one variable is required".to_string());
        return diags;
    }
    let mut seen = std::collections::BTreeSet::new();
    for v in &file.variables {
        if !seen.insert(v.clone()) {
            diags.push(format!("variable `{v}` declared twice"));
        }
    }
    let ring = Ring::new(file.variables.clone());
    for (i, src) in file.variety.iter().enumerate() {
        if let Err(e) = parse_polynomial(src, &ring) {
            diags.push(format!("variety equation {}: {e}", i + 1));
        }
    }
    match (&file.function, &file.data_point) {
        (Some(_), Some(_)) => {
            diags.push("give either `function` or `data_point`, not both".to_string())
        }
        (None, None) => {
            if file.stratification.is_none() && file.siersma.is_none() {
                diags.push("one of `function` or `data_point` is required".to_string());
            }
        }
        (Some(f), None) => {
            if let Err(e) = parse_polynomial(f, &ring) {
                diags.push(format!("function: {e}"));
            }
        }
        (None, Some(u)) => {
            if u.len() != ring.num_vars() {
                diags.push(format!(
                    "data_point has {} coordinates, expected {}",
                    u.len(),
                    ring.num_vars()
                ));
            }
            for (i, c) in u.iter().enumerate() {
                if parse_rat(c).is_none() {
                    diags.push(format!(
                        "data_point coordinate {}: `{c}` is not a rational",
                        i + 1
                    ));
                }
            }
        }
    }
    if let Some(l) = &file.linear_form {
        if l.len() != ring.num_vars() {
            diags.push(format!(
                "linear_form has {} coefficients, expected {}",
                l.len(),
                ring.num_vars()
            ));
        }
        let parsed: Vec<Option<Rat>> = l.iter().map(|c| parse_rat(c)).collect();
        for (i, c) in parsed.iter().enumerate() {
            if c.is_none() {
                diags.push(format!(
                    "linear_form coefficient {}: `{}` is not a rational",
                    i + 1,
                    l[i]
                ));
            }
        }
        if parsed.iter().all(|c| matches!(c, Some(v) if v.is_zero())) {
            diags.push("linear_form must not be identically zero".to_string());
        }
    }
    if let Some(block) = &file.stratification {
        validate_stratification(block, &mut diags);
    }
    diags
}

fn validate_stratification(block: &StratificationBlock, diags: &mut Vec<String>) {
    for s in &block.strata {
        if let Some(cv) = &s.critical_value {
            if parse_rat(cv).is_none() {
                diags.push(format!(
                    "stratum `{}`: critical_value `{cv}` is not a rational",
                    s.id
                ));
            }
        }
    }
    match build_poset(block) {
        Ok(_) => {}
        Err(e) => diags.push(format!("stratification: {e}")),
    }
}

fn build_poset(block: &StratificationBlock) -> Result<StratumPoset, crate::stratcalc::StratError> {
    let strata: Vec<Stratum> = block
        .strata
        .iter()
        .map(|s| Stratum {
            id: s.id.clone(),
            dim: s.dim,
            is_singular: s.singular,
            critical_value: s.critical_value.as_deref().and_then(parse_rat),
        })
        .collect();
    let pairs: Vec<(String, String)> = block
        .closure
        .iter()
        .map(|p| (p[0].clone(), p[1].clone()))
        .collect();
    StratumPoset::new(strata, &pairs, block.ambient_dim)
}

/// Validate and compile into live objects. The returned problem owns the
/// Groebner-backed variety.
pub fn compile(file: &ProblemFile) -> Result<CompiledProblem, ProblemError> {
    let diags = validate(file);
    if !diags.is_empty() {
        return Err(ProblemError::Invalid(diags));
    }
    let ring = Ring::new(file.variables.clone());
    let gens: Vec<Polynomial> = file
        .variety
        .iter()
        .map(|src| parse_polynomial(src, &ring).expect("validated"))
        .collect();
    let ideal = if gens.is_empty() {
        crate::ideals::IdealBasis::zero_ideal(&ring)
    } else {
        std_ideal(&ring, gens)?
    };
    let variety =
        VarietySpec::new(ideal).map_err(|e| ProblemError::Invalid(vec![e.to_string()]))?;

    let seed = file.seed.unwrap_or(1);
    let data_point: Option<Vec<Rat>> = file
        .data_point
        .as_ref()
        .map(|u| u.iter().map(|c| parse_rat(c).expect("validated")).collect());
    let function = match (&file.function, &data_point) {
        (Some(f), _) => parse_polynomial(f, &ring).expect("validated"),
        (None, Some(u)) => EDProblem::new(variety.clone(), u.clone(), seed).distance_function,
        (None, None) => Polynomial::zero(&ring),
    };
    let linear_form = file
        .linear_form
        .as_ref()
        .map(|l| LinearForm::new(l.iter().map(|c| parse_rat(c).expect("validated")).collect()));
    let stratification = match &file.stratification {
        Some(block) => {
            let poset =
                build_poset(block).map_err(|e| ProblemError::Invalid(vec![e.to_string()]))?;
            let mut data = StratumData {
                mu: block.mu.clone(),
                chi_minus_hyperplane: block.chi_minus_hyperplane.clone(),
                eu: block.eu.clone(),
                ..Default::default()
            };
            for link in &block.clk {
                data.clk_chi
                    .insert((link.lower.clone(), link.upper.clone()), link.chi);
            }
            let mut nearby = crate::stratcalc::NearbyChis::default();
            for entry in &block.nearby {
                nearby.pairs.insert(
                    (entry.lower.clone(), entry.upper.clone()),
                    (entry.chi_fiber, entry.chi_slice),
                );
            }
            Some(CompiledStratification {
                poset,
                data,
                nearby,
                m_infinity: block.m_infinity,
            })
        }
        None => None,
    };
    Ok(CompiledProblem {
        ring,
        variety,
        function,
        data_point,
        linear_form,
        seed,
        tolerances: file.tolerances.clone().unwrap_or_default(),
        stratification,
        siersma: file.siersma.clone(),
    })
}
