//! Scenario classification of a reservoir by where its asymptotic set sits relative to the
//! separable set.
//!
//! | family | case | members                                           |
//! |--------|------|---------------------------------------------------|
//! | one    | i    | the single asymptote is interior to S             |
//! | one    | ii   | separable, on the boundary of S                   |
//! | one    | iii  | entangled                                         |
//! | multi  | i–iii| as above, for every sampled member                |
//! | multi  | iv   | both entangled and separable members              |

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channels::{self, AsymptoticSet, ChannelError, ChannelSpec};
use crate::entanglement::{self, Region};
use crate::state::{DensityMatrix, Tolerances};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("asymptotic set is empty")]
    EmptySet,
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("cannot read scenario label: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "one")]
    OneAsymptote,
    #[serde(rename = "multi")]
    MultiAsymptote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    I,
    Ii,
    Iii,
    Iv,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::OneAsymptote => "one",
            Family::MultiAsymptote => "multi",
        })
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Case::I => "i",
            Case::Ii => "ii",
            Case::Iii => "iii",
            Case::Iv => "iv",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    /// State literal (`x:` form when the member is an X state).
    pub state: String,
    pub label: Region,
    /// Smallest partial-transpose eigenvalue.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioLabel {
    pub family: Family,
    pub case: Case,
    pub evidence: Vec<Evidence>,
}

impl ScenarioLabel {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scenario label serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifyError> {
        serde_json::from_str(text).map_err(|e| ClassifyError::Json(e.to_string()))
    }
}

fn literal(rho: &DensityMatrix, tol: &Tolerances) -> String {
    match rho.project_x(tol) {
        Ok(x) => x.to_string(),
        Err(_) => rho.to_string(),
    }
}

fn evidence(members: &[DensityMatrix], tol: &Tolerances) -> Vec<Evidence> {
    members
        .par_iter()
        .map(|rho| {
            let label = entanglement::classify_position(rho, tol);
            Evidence {
                state: literal(rho, tol),
                label: label.region,
                margin: label.margin,
            }
        })
        .collect()
}

fn case_of(evidence: &[Evidence]) -> Case {
    let count = |r: Region| evidence.iter().filter(|e| e.label == r).count();
    let (interior, boundary, entangled) = (
        count(Region::SeparableInterior),
        count(Region::SeparableBoundary),
        count(Region::Entangled),
    );
    match (interior + boundary, entangled) {
        (0, _) => Case::Iii,
        (_, 0) if boundary == 0 => Case::I,
        (_, 0) => Case::Ii,
        _ => Case::Iv,
    }
}

/// Labels every sampled member of `set` and reads off the scenario. X families are sampled at
/// their extreme members plus `n_samples` seeded random members.
pub fn classify_set(
    set: &AsymptoticSet,
    tol: &Tolerances,
    n_samples: usize,
    seed: u64,
) -> Result<ScenarioLabel, ClassifyError> {
    let (family, members) = match set {
        AsymptoticSet::SinglePoint(p) => (Family::OneAsymptote, vec![p.clone()]),
        AsymptoticSet::ExplicitSamples(v) if v.is_empty() => return Err(ClassifyError::EmptySet),
        AsymptoticSet::ExplicitSamples(v) if v.len() == 1 => (Family::OneAsymptote, v.clone()),
        AsymptoticSet::ExplicitSamples(v) => (Family::MultiAsymptote, v.clone()),
        AsymptoticSet::XFamily(_) => (Family::MultiAsymptote, set.sample(n_samples, seed)),
    };
    let evidence = evidence(&members, tol);
    Ok(ScenarioLabel {
        family,
        case: case_of(&evidence),
        evidence,
    })
}

pub fn classify_channel(
    ch: &ChannelSpec,
    tol: &Tolerances,
    n_samples: usize,
    seed: u64,
) -> Result<ScenarioLabel, ClassifyError> {
    classify_set(&channels::asymptotic_set(ch)?, tol, n_samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{BellKind, XState};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn label(ch: &str) -> (Family, Case) {
        let l = classify_channel(&ChannelSpec::parse(ch).unwrap(), &tol(), 100, 7).unwrap();
        (l.family, l.case)
    }

    #[test]
    fn catalog_table() {
        assert_eq!(label("decay:1,1,0"), (Family::OneAsymptote, Case::Ii));
        assert_eq!(label("decay:1,1,0.5"), (Family::OneAsymptote, Case::I));
        assert_eq!(label("dephase:1,1"), (Family::MultiAsymptote, Case::Ii));
        assert_eq!(label("collective:1"), (Family::MultiAsymptote, Case::Iv));
    }

    #[test]
    fn synthetic_sets() {
        let phi = XState::bell(BellKind::PhiPlus).embed();
        let l = classify_set(&AsymptoticSet::SinglePoint(phi.clone()), &tol(), 0, 0).unwrap();
        assert_eq!((l.family, l.case), (Family::OneAsymptote, Case::Iii));
        let l = classify_set(
            &AsymptoticSet::ExplicitSamples(vec![phi.clone()]),
            &tol(),
            0,
            0,
        )
        .unwrap();
        assert_eq!(l.family, Family::OneAsymptote);
        let mixed = AsymptoticSet::ExplicitSamples(vec![phi, DensityMatrix::maximally_mixed()]);
        let l = classify_set(&mixed, &tol(), 0, 0).unwrap();
        assert_eq!((l.family, l.case), (Family::MultiAsymptote, Case::Iv));
        assert_eq!(
            classify_set(&AsymptoticSet::ExplicitSamples(vec![]), &tol(), 0, 0),
            Err(ClassifyError::EmptySet)
        );
    }

    #[test]
    fn custom_channel_is_unsupported() {
        let ch =
            ChannelSpec::custom(ChannelSpec::collective(1.0).unwrap().jump_operators()).unwrap();
        assert!(matches!(
            classify_channel(&ch, &tol(), 10, 0),
            Err(ClassifyError::Channel(ChannelError::UnsupportedChannel(_)))
        ));
    }

    #[test]
    fn json_round_trip() {
        let l = classify_channel(&ChannelSpec::collective(1.0).unwrap(), &tol(), 20, 1).unwrap();
        let text = l.to_json();
        assert!(text.starts_with(r#"{"family":"multi","case":"iv","evidence":[{"state":"x:"#));
        assert_eq!(ScenarioLabel::from_json(&text).unwrap(), l);
    }
}
