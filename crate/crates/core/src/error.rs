use isac_sdp::SolveError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid contour: {0}")]
    InvalidContour(String),
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("no contour element is visible from the base station")]
    EmptyLos,
    #[error("covariance is not PSD (min eigenvalue {min_eigenvalue:.3e}, trace {trace:.3e})")]
    NotPsd { min_eigenvalue: f64, trace: f64 },
    #[error("subsection {subsection} receives no illumination (a^H R a = {value:.3e})")]
    ZeroIllumination { subsection: usize, value: f64 },
    #[error("Fisher information is degenerate: {0}")]
    DegenerateFim(String),
    #[error("effective FIM is singular (eigenvalue {eigenvalue:.3e})")]
    SingularEfim { eigenvalue: f64 },
    #[error("channel matrix is rank deficient (singular value ratio {ratio:.3e})")]
    RankDeficient { ratio: f64 },
    #[error("power control gave negative power {value:.3e} for user {user}")]
    NegativePower { user: usize, value: f64 },
    #[error("rank-one extraction failed after {attempts} attempts: {last}")]
    ExtractionFailed { attempts: usize, last: String },
    #[error("design problem is infeasible ({class})")]
    Infeasible { class: String },
    #[error("no zero-forcing direction set admits a feasible design ({tried} tried)")]
    AllInfeasible { tried: usize },
    #[error("too many direction sets to enumerate ({count})")]
    TooManyDirectionSets { count: u128 },
    #[error("unknown design method `{0}`")]
    UnknownMethod(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Solver(#[from] SolveError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
