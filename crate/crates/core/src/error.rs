use thiserror::Error;

/// Wire decoding failure. Every variant names the byte offset where decoding stopped.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("truncated input at offset {offset}")]
    Truncated { offset: usize },
    #[error("unexpected tag {tag:#04x} at offset {offset}")]
    BadTag { offset: usize, tag: u8 },
    #[error("unsupported version {version} at offset {offset}")]
    UnsupportedVersion { offset: usize, version: u8 },
    #[error("{count} trailing bytes at offset {offset}")]
    TrailingBytes { offset: usize, count: usize },
    #[error("non-canonical scalar at offset {offset}")]
    NonCanonicalScalar { offset: usize },
    #[error("invalid point encoding at offset {offset}")]
    InvalidPoint { offset: usize },
    #[error("invalid {what} at offset {offset}")]
    InvalidValue { offset: usize, what: &'static str },
    #[error("checksum mismatch")]
    ChecksumMismatch,
}

impl DecodeError {
    /// Rebases a locally produced error onto an absolute offset.
    pub(crate) fn at(self, base: usize) -> Self {
        match self {
            DecodeError::Truncated { offset } => DecodeError::Truncated { offset: base + offset },
            DecodeError::BadTag { offset, tag } => DecodeError::BadTag { offset: base + offset, tag },
            DecodeError::UnsupportedVersion { offset, version } => {
                DecodeError::UnsupportedVersion { offset: base + offset, version }
            }
            DecodeError::TrailingBytes { offset, count } => DecodeError::TrailingBytes { offset: base + offset, count },
            DecodeError::NonCanonicalScalar { offset } => DecodeError::NonCanonicalScalar { offset: base + offset },
            DecodeError::InvalidPoint { offset } => DecodeError::InvalidPoint { offset: base + offset },
            DecodeError::InvalidValue { offset, what } => DecodeError::InvalidValue { offset: base + offset, what },
            DecodeError::ChecksumMismatch => DecodeError::ChecksumMismatch,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("no valid point found for NUMS label")]
    NumsExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CommitmentError {
    #[error("unsupported asset {0}")]
    UnsupportedAsset(String),
    #[error("asset {0} already registered")]
    AlreadyRegistered(String),
    #[error("asset identifier must be non-empty")]
    EmptyAssetId,
    #[error("invalid key: secret key must be non-zero")]
    InvalidKey,
    #[error("generator for asset {0} does not match its NUMS derivation")]
    GeneratorMismatch(String),
    #[error("invalid amounts {0:?}: expected ASSET=N[,ASSET=N...]")]
    InvalidAmounts(String),
    #[error("too many outputs: {0}")]
    TooManyOutputs(usize),
    #[error(transparent)]
    Group(#[from] GroupError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchnorrError {
    #[error("invalid key: secret key must be non-zero")]
    InvalidKey,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmtError {
    #[error("index collision at leaf {0:#x}")]
    IndexCollision(u32),
    #[error("commitment not found in tree")]
    NotFound,
    #[error("tree depth {0} outside 1..=32")]
    InvalidDepth(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelationError {
    #[error("relation unsatisfied: {0}")]
    Unsatisfied(&'static str),
    #[error("backend {0} does not support this relation")]
    Unsupported(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("unsupported asset {0}")]
    UnsupportedAsset(String),
    #[error(transparent)]
    Registry(#[from] CommitmentError),
    #[error("insufficient public balance for {account} in asset {asset}")]
    InsufficientBalance { account: String, asset: String },
    #[error("public balance overflow")]
    BalanceOverflow,
    #[error("index collision at leaf {0:#x}")]
    IndexCollision(u32),
    #[error("double spend")]
    DoubleSpend,
    #[error("invalid proof: {0}")]
    InvalidProof(&'static str),
    #[error("stale root")]
    StaleRoot,
    #[error("excluded commitment")]
    ExcludedCommitment,
    #[error("timelocked until {until}, clock is {now}")]
    Timelocked { until: u64, now: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("unauthorized: administrator signature required")]
    Unauthorized,
    #[error("malformed payload: {0}")]
    Malformed(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WalletError {
    #[error("insufficient funds in asset {0}")]
    InsufficientFunds(String),
    #[error("coin {0:#x} is already spent")]
    SpentCoin(u32),
    #[error("unknown coin {0:#x}")]
    UnknownCoin(u32),
    #[error("no coins selected")]
    NoCoins,
    #[error("protocol error: {0}")]
    Protocol(&'static str),
    #[error("challenge mismatch: recipient signed under a different nonce sum")]
    ChallengeMismatch,
    #[error("transfer session already finalized")]
    SessionConsumed,
    #[error(transparent)]
    Commitment(#[from] CommitmentError),
    #[error(transparent)]
    Schnorr(#[from] SchnorrError),
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error(transparent)]
    Smt(#[from] SmtError),
}
