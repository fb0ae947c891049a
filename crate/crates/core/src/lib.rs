//! Evaluation of full-reference image quality metrics against JND-scaled
//! subjective scores.

pub mod criteria;
pub mod dataset;
pub mod kernelreg;
pub mod stats;
pub mod stattests;
pub mod synth;
pub mod transform;

/// Any failure of the evaluation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Dataset(#[from] dataset::DatasetError),
    #[error(transparent)]
    Fit(#[from] transform::FitError),
    #[error(transparent)]
    Criteria(#[from] criteria::CriteriaError),
    #[error(transparent)]
    StatTest(#[from] stattests::StatTestError),
    #[error(transparent)]
    Kernel(#[from] kernelreg::KernelError),
    #[error(transparent)]
    Synth(#[from] synth::SynthError),
}

impl EvalError {
    /// True for failures caused by unreadable or malformed input files.
    pub fn is_input_error(&self) -> bool {
        use dataset::DatasetError as D;
        match self {
            EvalError::Dataset(e) | EvalError::Synth(synth::SynthError::Dataset(e)) => matches!(
                e,
                D::Io { .. }
                    | D::Csv(_)
                    | D::PolarityJson(_)
                    | D::MissingColumn(_)
                    | D::InvalidField { .. }
                    | D::DuplicateStimulus { .. }
                    | D::NonPositiveSigma { .. }
                    | D::InvalidMean { .. }
                    | D::DuplicateScore { .. }
                    | D::NonFiniteScore { .. }
                    | D::MissingPolarity(_)
                    | D::EmptyTable
            ),
            EvalError::Synth(synth::SynthError::InvalidConfig(_)) => true,
            _ => false,
        }
    }
}
