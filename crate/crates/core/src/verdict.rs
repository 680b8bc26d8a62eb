//! Falsification outcomes shared by the analysis modules.

use serde::Serialize;

use crate::cvec::C64;

/// Margins at or below this are treated as quadrature noise.
pub const CERT_TOL: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    CircleMean,
    Levi,
    DiskProbe,
    Segment,
    HyperplaneSweep,
}

#[derive(Clone, Debug, Serialize)]
pub struct ViolationCertificate {
    pub kind: CertificateKind,
    /// Function that failed its defining inequality.
    pub target: String,
    pub center: Vec<C64>,
    pub direction: Vec<C64>,
    pub radius: f64,
    pub margin: f64,
    pub samples: usize,
    pub recheck_samples: usize,
    pub recheck_margin: f64,
    /// Position of the witness in the enumeration order of the search.
    pub index: usize,
    /// Additional witness points (segment endpoints and midpoint).
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<Vec<C64>>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SearchBudget {
    pub candidates: usize,
    pub grid: usize,
    pub radii: (f64, f64),
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Falsified { certificate: Box<ViolationCertificate> },
    PassedAtResolution { budget: SearchBudget },
}

impl Verdict {
    pub fn is_falsified(&self) -> bool {
        matches!(self, Verdict::Falsified { .. })
    }

    pub fn certificate(&self) -> Option<&ViolationCertificate> {
        match self {
            Verdict::Falsified { certificate } => Some(certificate),
            Verdict::PassedAtResolution { .. } => None,
        }
    }
}
