use thiserror::Error;

use crate::valtree::Model;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("point `{0}` lies on three or more curves")]
    TripleIncidence(String),
    #[error("point `{0}` must lie on one or two distinct curves")]
    DegenerateIncidence(String),
    #[error("unknown curve `{0}`")]
    UnknownCurveRef(String),
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("illegal incidence: {0}")]
    IllegalIncidence(String),
    #[error("unknown branch `{0}`")]
    UnknownBranch(String),
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("divisor has support off D along `{0}`")]
    SupportOffD(String),
    #[error("not a b-divisor of (X,D): nonzero along `{0}`, which is not over D")]
    NotXDBDivisor(String),
    #[error("blow-up chain is not admissible at `{0}`")]
    NotAdmissible(String),
    #[error("pole along `{0}`, which is not a component of D")]
    PoleOffD(String),
    #[error("summand {0} has rank 0")]
    ZeroRank(usize),
    #[error("connection has no summands")]
    EmptyConnection,
    #[error("resolution over `{root}` exceeded the budget of {budget} blow-ups")]
    ResolutionBudgetExceeded {
        root: String,
        budget: usize,
        partial: Box<Model>,
    },
    #[error("point `{0}` is not on D")]
    PointOffD(String),
    #[error("point `{0}` is not a smooth point of D")]
    PointNotSmoothOnD(String),
    #[error("turning points {0:?} lie outside the zero locus of the test function")]
    TurningOutsideZeroLocus(Vec<String>),
    #[error("coefficient along `{0}` is not an integer")]
    NonIntegral(String),
    #[error("divisor is not effective along `{0}`")]
    NotEffective(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable identifier of the violated rule, used in reports and exit paths.
    pub fn rule(&self) -> &'static str {
        match self {
            Error::DuplicateId(_) => "DuplicateId",
            Error::TripleIncidence(_) => "TripleIncidence",
            Error::DegenerateIncidence(_) => "DegenerateIncidence",
            Error::UnknownCurveRef(_) => "UnknownCurveRef",
            Error::UnknownPoint(_) => "UnknownPoint",
            Error::IllegalIncidence(_) => "IllegalIncidence",
            Error::UnknownBranch(_) => "UnknownBranch",
            Error::ModelMismatch(_) => "ModelMismatch",
            Error::SupportOffD(_) => "SupportOffD",
            Error::NotXDBDivisor(_) => "NotXDBDivisor",
            Error::NotAdmissible(_) => "NotAdmissible",
            Error::PoleOffD(_) => "PoleOffD",
            Error::ZeroRank(_) => "ZeroRank",
            Error::EmptyConnection => "EmptyConnection",
            Error::ResolutionBudgetExceeded { .. } => "ResolutionBudgetExceeded",
            Error::PointOffD(_) => "PointOffD",
            Error::PointNotSmoothOnD(_) => "PointNotSmoothOnD",
            Error::TurningOutsideZeroLocus(_) => "TurningOutsideZeroLocus",
            Error::NonIntegral(_) => "NonIntegral",
            Error::NotEffective(_) => "NotEffective",
        }
    }
}
