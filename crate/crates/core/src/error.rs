use thiserror::Error;

/// Everything that can go wrong while building or solving a game.
///
/// The variants split into two families: [`SigError::is_config_error`] is true for
/// problems with the primitives themselves (the CLI maps these to exit code 2),
/// everything else is a numerical failure of the solver (exit code 3).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SigError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("density is not full-support: f({theta}) = {value} is not positive")]
    NotFullSupport { theta: f64, value: f64 },

    #[error("utility `{player}` is not weakly increasing near θ = {theta}")]
    NonMonotoneUtility { player: String, theta: f64 },

    #[error("decision-maker utility must vanish at θ = 0 (got u_dm(0) = {0})")]
    DmNormalization(f64),

    #[error("utility `{0}` has no interior threshold inside the state space")]
    NoThreshold(String),

    #[error("threshold ordering violated: need τ_1 < 0 < τ_2, got τ_1 = {tau_1}, τ_2 = {tau_2}")]
    ThresholdOrdering { tau_1: f64, tau_2: f64 },

    #[error(
        "state space too small: Θ = [{theta_min}, {theta_max}] must cover the conflict region \
         [r_2(0), r_1(0)] = [{lower}, {upper}]"
    )]
    StateSpaceTooSmall {
        theta_min: f64,
        theta_max: f64,
        lower: f64,
        upper: f64,
    },

    #[error("reach undefined at θ = {0}: the cost family never offsets the gain")]
    ReachUndefined(f64),

    #[error("report {0} is not in the image of the reach function")]
    NotInImage(f64),

    #[error("root bracket [{lo}, {hi}] has no sign change")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("swing equation at r = {r}: {count} sign changes in the bracket, expected one")]
    MultipleRoots { r: f64, count: usize },

    #[error("quadrature tolerance not met on [{lo}, {hi}] (error estimate {estimate:e})")]
    QuadratureTolerance { lo: f64, hi: f64, estimate: f64 },

    #[error("cutoff bracket failure for {0}")]
    CutoffBracket(&'static str),

    #[error("degenerate interval [{lo}, {hi}]")]
    DegenerateInterval { lo: f64, hi: f64 },

    #[error("report {0} lies outside the swing domain")]
    OutOfDomain(f64),

    #[error("swing function fails post-build check: {0}")]
    SwingCheck(String),

    #[error("swing solve failed at grid point r = {r}: {source}")]
    SwingNode { r: f64, source: Box<SigError> },

    #[error("assumption r_1(0) < τ_2 violated (r_1(0) = {reach}, τ_2 = {tau_2})")]
    FreAssumption { reach: f64, tau_2: f64 },
}

impl SigError {
    /// True when the error describes invalid primitives rather than a solver failure.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            SigError::InvalidParameter(_)
                | SigError::NotFullSupport { .. }
                | SigError::NonMonotoneUtility { .. }
                | SigError::DmNormalization(_)
                | SigError::NoThreshold(_)
                | SigError::ThresholdOrdering { .. }
                | SigError::StateSpaceTooSmall { .. }
                | SigError::FreAssumption { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, SigError>;
