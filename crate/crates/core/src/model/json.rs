use serde::{Deserialize, Serialize};

use super::HawkesModel;
use crate::error::{Error, Result};
use crate::kernels::KernelKind;

/// JSON form of a [`HawkesModel`]:
///
/// ```json
/// {"kind": "power_law", "mu": [m1, m2],
///  "alpha": [[a11, a12], [a21, a22]], "beta": [[...]], "epsilon": [[...]]}
/// ```
///
/// `epsilon` is present for power-law models only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub kind: KernelKind,
    pub mu: [f64; 2],
    pub alpha: [[f64; 2]; 2],
    pub beta: [[f64; 2]; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<[[f64; 2]; 2]>,
}

impl From<&HawkesModel> for ModelDoc {
    fn from(m: &HawkesModel) -> Self {
        ModelDoc {
            kind: m.kind(),
            mu: m.mu(),
            alpha: m.alpha(),
            beta: m.beta(),
            epsilon: m.epsilon(),
        }
    }
}

impl TryFrom<ModelDoc> for HawkesModel {
    type Error = Error;

    fn try_from(doc: ModelDoc) -> Result<Self> {
        match (doc.kind, doc.epsilon) {
            (KernelKind::Exponential, None) => HawkesModel::exponential(doc.mu, doc.alpha, doc.beta),
            (KernelKind::PowerLaw, Some(eps)) => HawkesModel::power_law(doc.mu, doc.alpha, doc.beta, eps),
            (KernelKind::Exponential, Some(_)) => Err(Error::InvalidParameter(
                "`epsilon` is only valid for power_law models".into(),
            )),
            (KernelKind::PowerLaw, None) => Err(Error::InvalidParameter("power_law model requires `epsilon`".into())),
        }
    }
}

impl Serialize for HawkesModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModelDoc::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for HawkesModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = ModelDoc::deserialize(d)?;
        HawkesModel::try_from(doc).map_err(serde::de::Error::custom)
    }
}
