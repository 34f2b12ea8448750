use std::fmt;

/// Failure classes of a command, each with its own exit status.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        CliError::Data(msg.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<bci_predict::Error> for CliError {
    fn from(e: bci_predict::Error) -> Self {
        let msg = e.to_string().replace('\n', " ");
        if e.is_numerical() {
            CliError::Numerical(msg)
        } else {
            CliError::Data(msg)
        }
    }
}

macro_rules! via_library_error {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                bci_predict::Error::from(e).into()
            }
        })*
    };
}

via_library_error!(
    bci_predict::ingest::IngestError,
    bci_predict::preprocess::PreprocessError,
    bci_predict::features::FeatureError,
    bci_predict::classify::ClassifyError,
    bci_predict::stats::StatsError,
    bci_predict::synth::SynthError
);
