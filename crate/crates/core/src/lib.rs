//! Anonymous multi-asset payments.
//!
//! Balances are multi-asset Pedersen commitments stored in a sparse Merkle
//! tree. Transfers spend commitments by publishing nullifiers and prove
//! conservation with a Schnorr signature aggregated across sender and
//! recipients, valid under the transaction excess only when amounts balance
//! per asset. [`ledger::Ledger`] is the validating state machine;
//! [`wallet::Wallet`] drives the client side of the protocol.

pub mod commitment;
pub mod error;
pub mod group;
pub mod ledger;
pub mod relations;
pub mod schnorr;
pub mod smt;
pub mod wallet;
pub mod wire;

pub use commitment::{commit, excess, AmountVector, AssetId, AssetRegistry, Commitment};
pub use error::{CommitmentError, DecodeError, LedgerError, RelationError, SchnorrError, SmtError, WalletError};
pub use group::{hash_to_scalar, nums_to_point, Point, Scalar};
pub use ledger::{AdminKey, DepositRequest, Ledger, LedgerConfig, PublicParams, TransferPayload, WithdrawPayload};
pub use relations::{Proof, ProofSuite};
pub use wallet::{CoinRecord, TransferInit, TransferResponse, TransferSession, Wallet};
