use heatchan::bounds::BoundsError;
use heatchan::channel::ChannelError;
use heatchan::codec::CodecError;
use heatchan::coeffs::CoeffError;
use heatchan::harness::HarnessError;
use heatchan::output::OutputError;

/// Exit status for bad input.
pub const EXIT_USAGE: u8 = 2;
/// Exit status for failures during computation or I/O.
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
    /// The reader of stdout went away; not worth reporting.
    Closed,
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
            CliError::Closed => 0,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
            CliError::Closed => "",
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl From<CoeffError> for CliError {
    fn from(e: CoeffError) -> Self {
        match e {
            CoeffError::Divergent => CliError::Runtime(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ChannelError> for CliError {
    fn from(e: ChannelError) -> Self {
        match e {
            ChannelError::Coefficients(c) => c.into(),
            ChannelError::NonFiniteInput { .. }
            | ChannelError::InvalidSigma2(_)
            | ChannelError::InvalidPower(_)
            | ChannelError::UnknownNoise(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<CodecError> for CliError {
    fn from(e: CodecError) -> Self {
        match e {
            CodecError::Channel(c) => c.into(),
            CodecError::InvalidScheme(_) | CodecError::InvalidVariance(_) | CodecError::NoTrials => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<BoundsError> for CliError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::Coefficients(c) => c.into(),
            BoundsError::NonNegativeChernoff(_) | BoundsError::InvalidArgument(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            HarnessError::Coefficients(c) => c.into(),
            HarnessError::Channel(c) => c.into(),
            HarnessError::Codec(c) => c.into(),
            HarnessError::Bounds(c) => c.into(),
        }
    }
}

impl From<OutputError> for CliError {
    fn from(e: OutputError) -> Self {
        match e {
            OutputError::UnknownFormat(_) => CliError::Usage(e.to_string()),
            OutputError::Io(io) => io.into(),
            OutputError::Csv(c) if c.is_io_error() => std::io::Error::from(c).into(),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            return CliError::Closed;
        }
        CliError::Runtime(e.to_string())
    }
}
