//! `atlantis`: drive a local ledger and wallets from the command line.
//!
//! Exit codes: 0 on success, 1 when the ledger or wallet rejects the
//! operation, 2 on usage errors.

mod store;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use atlantis::ledger::LedgerConfig;
use atlantis::schnorr::NonceCommitment;
use atlantis::wire::{self, Message};
use atlantis::{
    AdminKey, AmountVector, AssetId, Commitment, Ledger, ProofSuite, TransferInit, TransferPayload, TransferResponse,
    Wallet, WithdrawPayload,
};
use clap::{Parser, Subcommand, ValueEnum};
use rand_chacha::ChaCha20Rng;
use rand_core::{OsRng, RngCore, SeedableRng};
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "atlantis", version, about = "Anonymous multi-asset payments on a local ledger")]
struct Cli {
    /// Ledger state file.
    #[arg(long, env = "ATLANTIS_STATE", default_value = "atlantis.state", global = true)]
    state: PathBuf,
    /// Wallet file. Created on first use.
    #[arg(long, env = "ATLANTIS_WALLET", default_value = "wallet.atl", global = true)]
    wallet: PathBuf,
    /// Derive all randomness from SEED and the command line. Keys become guessable.
    #[arg(long, global = true, requires = "insecure")]
    seed: Option<String>,
    /// Acknowledge that --seed makes keys predictable.
    #[arg(long, global = true)]
    insecure: bool,
    /// Encoding for files this command writes.
    #[arg(long, value_enum, default_value_t = Format::Binary, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Binary,
    /// Hex-armored text.
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Create a new ledger state file and administrator key.
    Init {
        #[arg(long, default_value = "sigma-range")]
        suite: ProofSuite,
        #[arg(long, default_value_t = 128, value_parser = clap::value_parser!(u8).range(1..=128))]
        range_bits: u8,
        /// How many recent roots a spend may reference.
        #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u32).range(1..))]
        root_window: u32,
    },
    /// Manage the asset registry.
    Asset {
        #[command(subcommand)]
        command: AssetCommand,
    },
    /// Credit a public balance (test faucet).
    Fund { account: String, asset: AssetId, amount: u128 },
    /// Move public balance into fresh commitments owned by the wallet.
    Deposit {
        account: String,
        /// ASSET=N, repeatable or comma-separated.
        #[arg(long = "amount", required = true)]
        amounts: Vec<AmountVector>,
        /// Number of commitments to split the deposit across.
        #[arg(long, default_value_t = 1)]
        split: usize,
        /// Logical time before which the commitments cannot be spent.
        #[arg(long)]
        timelock: Option<u64>,
    },
    /// Three-message confidential transfer between wallets.
    Transfer {
        #[command(subcommand)]
        command: TransferCommand,
    },
    /// Apply a transfer or withdrawal payload to the ledger.
    Submit { payload: PathBuf },
    /// Withdraw a coin to a public account.
    Withdraw {
        /// Leaf index of the coin.
        coin: u32,
        #[arg(long)]
        to: String,
        /// Also write the payload to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bar a commitment from being spent. Signed with the administrator key.
    Exclude { commitment: String },
    /// Set the ledger's logical clock.
    Clock {
        #[command(subcommand)]
        command: ClockCommand,
    },
    /// Print ledger or wallet state.
    Show { what: Show },
}

#[derive(Subcommand)]
enum AssetCommand {
    /// Register an asset and derive its generator.
    Register { id: AssetId },
}

#[derive(Subcommand)]
enum ClockCommand {
    /// Advance the clock. It never moves backwards.
    Set { time: u64 },
}

#[derive(Subcommand)]
enum TransferCommand {
    /// Recipient: publish a nonce commitment for a multi-recipient transfer.
    Precommit {
        #[arg(long)]
        out: PathBuf,
    },
    /// Sender: open a session and write one init message per recipient.
    Init {
        /// Amounts for one recipient, e.g. A=3,B=1. Repeat per recipient.
        #[arg(long = "to", required = true)]
        to: Vec<AmountVector>,
        /// Each recipient's precommit file, in --to order. Required with several recipients.
        #[arg(long = "precommit")]
        precommits: Vec<PathBuf>,
        /// Output file per recipient, in --to order.
        #[arg(long = "out", required = true)]
        outs: Vec<PathBuf>,
        /// Coins to spend, by leaf index. Selected automatically when absent.
        #[arg(long = "coin")]
        coins: Vec<u32>,
    },
    /// Recipient: answer an init message.
    Respond {
        init: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// The precommit this wallet published for this transfer.
        #[arg(long)]
        precommit: Option<PathBuf>,
    },
    /// Sender: combine the responses into a payload for `submit`.
    Finalize {
        #[arg(long)]
        session: u32,
        #[arg(required = true)]
        responses: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sender: discard an open session.
    Abort {
        #[arg(long)]
        session: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Show {
    /// Root, leaf count and occupied leaves.
    Tree,
    /// Spent nullifiers.
    Nullifiers,
    /// Public balances.
    Balances,
    /// Coins held by the wallet.
    Coins,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Rejected(String),
}

impl Failure {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::Rejected(format!("{}: {e}", path.display()))
    }
}

macro_rules! rejected_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::Rejected(e.to_string())
            }
        }
    )*};
}

rejected_from!(
    atlantis::LedgerError,
    atlantis::WalletError,
    atlantis::DecodeError,
    atlantis::CommitmentError,
    atlantis::SchnorrError
);

fn rng_for(cli: &Cli) -> ChaCha20Rng {
    let mut seed = [0u8; 32];
    match &cli.seed {
        Some(s) => {
            let mut h = Sha256::new();
            h.update(b"atlantis/cli-seed");
            h.update(s.as_bytes());
            for arg in std::env::args_os().skip(1) {
                h.update([0]);
                h.update(arg.as_encoded_bytes());
            }
            seed.copy_from_slice(&h.finalize());
        }
        None => OsRng.fill_bytes(&mut seed),
    }
    ChaCha20Rng::from_seed(seed)
}

fn hex32(bytes: [u8; 32]) -> String {
    hex::encode(bytes)
}

fn total(amounts: &[AmountVector]) -> Result<AmountVector, Failure> {
    amounts
        .iter()
        .try_fold(AmountVector::new(), |acc, a| acc.checked_add(a))
        .ok_or_else(|| Failure::Usage("amounts overflow".into()))
}

/// Loads the ledger and the wallet synced against it.
fn open(cli: &Cli) -> Result<(Ledger, Wallet), Failure> {
    let ledger = store::load_ledger(&cli.state)?;
    let mut wallet = store::load_wallet(&cli.wallet)?;
    wallet.sync(&ledger);
    Ok((ledger, wallet))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let _lock = store::lock_state(&cli.state)?;
    let mut rng = rng_for(cli);
    match &cli.command {
        Command::Init { suite, range_bits, root_window } => {
            if cli.state.exists() {
                return Err(Failure::Rejected(format!("{} already exists", cli.state.display())));
            }
            let config = LedgerConfig { suite: *suite, range_bits: *range_bits, root_window: *root_window };
            let admin = AdminKey::generate(&mut rng);
            let ledger = Ledger::new(config, admin.public())?;
            store::save_admin_key(&cli.state, &admin)?;
            store::save_ledger(&cli.state, &ledger)?;
            println!("initialized {} ({}, {}-bit ranges)", cli.state.display(), suite.name(), range_bits);
            println!("administrator key in {}", store::admin_key_path(&cli.state).display());
        }
        Command::Asset { command: AssetCommand::Register { id } } => {
            let mut ledger = store::load_ledger(&cli.state)?;
            let h = ledger.register_asset(id.clone())?;
            store::save_ledger(&cli.state, &ledger)?;
            println!("registered {id} generator={}", hex32(h.to_bytes()));
        }
        Command::Fund { account, asset, amount } => {
            let mut ledger = store::load_ledger(&cli.state)?;
            ledger.fund(account, asset, *amount)?;
            store::save_ledger(&cli.state, &ledger)?;
            println!("{account} {asset} {}", ledger.balance(account, asset));
        }
        Command::Deposit { account, amounts, split, timelock } => {
            if *split == 0 {
                return Err(Failure::Usage("--split must be at least 1".into()));
            }
            let (mut ledger, mut wallet) = open(cli)?;
            let mut requests = Vec::with_capacity(*split);
            for part in total(amounts)?.split(*split) {
                requests.push(wallet.prepare_deposit(&ledger, &part, *timelock, &mut rng)?);
            }
            let leaves = ledger.deposit_many(account, &requests)?;
            wallet.sync(&ledger);
            store::save_ledger(&cli.state, &ledger)?;
            store::save_wallet(&cli.wallet, &wallet)?;
            for leaf in leaves {
                let coin = wallet.coin(leaf).expect("deposited coin");
                println!("coin {leaf} {} commitment={}", coin.amounts, hex32(coin.commitment.to_bytes()));
            }
        }
        Command::Transfer { command } => transfer(cli, command, &mut rng)?,
        Command::Submit { payload } => {
            let mut ledger = store::load_ledger(&cli.state)?;
            let bytes = store::read(payload)?;
            let kind = match wire::dearmor(&String::from_utf8_lossy(&bytes)) {
                Ok((name, _)) if name == TransferPayload::NAME => TransferPayload::TAG,
                Ok((name, _)) if name == WithdrawPayload::NAME => WithdrawPayload::TAG,
                Ok((name, _)) => return Err(Failure::Rejected(format!("cannot submit a {name} message"))),
                Err(_) => wire::peek_tag(&bytes).unwrap_or(0),
            };
            match kind {
                TransferPayload::TAG => {
                    let p: TransferPayload = wire::decode_any(&bytes)?;
                    let root = ledger.apply_transfer(&p)?;
                    println!("transfer accepted, root={}", hex32(root.to_be_bytes()));
                }
                WithdrawPayload::TAG => {
                    let p: WithdrawPayload = wire::decode_any(&bytes)?;
                    ledger.apply_withdraw(&p)?;
                    println!("withdrawal accepted to {}: {}", p.statement.destination, p.statement.amounts);
                }
                tag => return Err(Failure::Rejected(format!("not a payload (tag {tag:#04x})"))),
            }
            store::save_ledger(&cli.state, &ledger)?;
        }
        Command::Withdraw { coin, to, out } => {
            let (mut ledger, mut wallet) = open(cli)?;
            let payload = wallet.build_withdrawal(*coin, to, &ledger, &mut rng)?;
            if let Some(out) = out {
                store::write_message(out, &payload, cli.format)?;
            }
            ledger.apply_withdraw(&payload)?;
            wallet.sync(&ledger);
            store::save_ledger(&cli.state, &ledger)?;
            store::save_wallet(&cli.wallet, &wallet)?;
            println!("withdrew coin {coin} to {to}: {}", payload.statement.amounts);
        }
        Command::Exclude { commitment } => {
            let bytes = hex::decode(commitment.trim())
                .map_err(|_| Failure::Usage(format!("commitment must be 64 hex digits: {commitment}")))?;
            let c: Commitment = wire::from_bytes(&bytes)?;
            let mut ledger = store::load_ledger(&cli.state)?;
            let sig = store::load_admin_key(&cli.state)?.sign_exclusion(&c, &mut rng)?;
            ledger.exclude_commitment(&c, &sig)?;
            store::save_ledger(&cli.state, &ledger)?;
            println!("excluded {}", hex32(c.to_bytes()));
        }
        Command::Clock { command: ClockCommand::Set { time } } => {
            let mut ledger = store::load_ledger(&cli.state)?;
            ledger.advance_clock(*time)?;
            store::save_ledger(&cli.state, &ledger)?;
            println!("clock {time}");
        }
        Command::Show { what } => show(cli, *what)?,
    }
    Ok(())
}

fn transfer(cli: &Cli, command: &TransferCommand, rng: &mut ChaCha20Rng) -> Result<(), Failure> {
    match command {
        TransferCommand::Precommit { out } => {
            let mut wallet = store::load_wallet(&cli.wallet)?;
            let nc = wallet.precommit_nonce(rng);
            store::write_message(out, &nc, cli.format)?;
            store::save_wallet(&cli.wallet, &wallet)?;
            println!("precommit written to {}", out.display());
        }
        TransferCommand::Init { to, precommits, outs, coins } => {
            if outs.len() != to.len() {
                return Err(Failure::Usage("give one --out per --to".into()));
            }
            if to.len() > 1 && precommits.len() != to.len() {
                return Err(Failure::Usage("several recipients need one --precommit each".into()));
            }
            let (_, mut wallet) = open(cli)?;
            let coins = if coins.is_empty() { wallet.select_coins(&total(to)?)? } else { coins.clone() };
            let (session, inits) = if precommits.is_empty() {
                let (s, m1) = wallet.initiate_transfer(&coins, &to[0], rng)?;
                (s, vec![m1])
            } else {
                let mut recipients = Vec::with_capacity(to.len());
                for (amounts, path) in to.iter().zip(precommits) {
                    recipients.push((amounts.clone(), store::read_message::<NonceCommitment>(path)?));
                }
                wallet.initiate_multi_transfer(&coins, &recipients, rng)?
            };
            for (m1, out) in inits.iter().zip(outs) {
                store::write_message(out, m1, cli.format)?;
            }
            let change = session.change_amounts().clone();
            let id = wallet.store_session(session);
            store::save_wallet(&cli.wallet, &wallet)?;
            println!("session {id} spends coins {coins:?}, change {change}");
        }
        TransferCommand::Respond { init, out, precommit } => {
            let ledger = store::load_ledger(&cli.state)?;
            let mut wallet = store::load_wallet(&cli.wallet)?;
            let m1: TransferInit = store::read_message(init)?;
            let pc = precommit.as_deref().map(store::read_message::<NonceCommitment>).transpose()?;
            let m2 = wallet.respond_transfer(&ledger.params(), &m1, pc.as_ref(), rng)?;
            store::write_message(out, &m2, cli.format)?;
            store::save_wallet(&cli.wallet, &wallet)?;
            println!("response for {} written to {}", m1.transfer_amounts, out.display());
        }
        TransferCommand::Finalize { session, responses, out } => {
            let (ledger, mut wallet) = open(cli)?;
            let mut s =
                wallet.take_session(*session).ok_or_else(|| Failure::Rejected(format!("no open session {session}")))?;
            let m2s =
                responses.iter().map(|p| store::read_message::<TransferResponse>(p)).collect::<Result<Vec<_>, _>>()?;
            let result = wallet.finalize_transfer(&mut s, &m2s, &ledger, rng);
            wallet.restore_session(*session, s);
            let payload = match result {
                Ok(p) => p,
                Err(e) => {
                    store::save_wallet(&cli.wallet, &wallet)?;
                    return Err(e.into());
                }
            };
            store::write_message(out, &payload, cli.format)?;
            store::save_wallet(&cli.wallet, &wallet)?;
            println!("payload written to {}", out.display());
        }
        TransferCommand::Abort { session } => {
            let mut wallet = store::load_wallet(&cli.wallet)?;
            wallet
                .take_session(*session)
                .ok_or_else(|| Failure::Rejected(format!("no open session {session}")))?
                .abort();
            store::save_wallet(&cli.wallet, &wallet)?;
            println!("session {session} aborted");
        }
    }
    Ok(())
}

fn show(cli: &Cli, what: Show) -> Result<(), Failure> {
    let ledger = store::load_ledger(&cli.state)?;
    match what {
        Show::Tree => {
            println!("root {}", hex32(ledger.root().to_be_bytes()));
            println!("clock {}", ledger.clock());
            for (leaf, c) in ledger.tree().leaves() {
                println!("leaf {leaf} {}", hex32(c.to_bytes()));
            }
        }
        Show::Nullifiers => {
            for n in ledger.nullifiers() {
                println!("{}", hex32(n.to_be_bytes()));
            }
        }
        Show::Balances => {
            for (account, asset, amount) in ledger.balances() {
                println!("{account} {asset} {amount}");
            }
        }
        Show::Coins => {
            let mut wallet = store::load_wallet(&cli.wallet)?;
            wallet.sync(&ledger);
            for coin in wallet.coins() {
                let status = match (coin.confirmed, coin.spent) {
                    (_, true) => "spent",
                    (true, false) => "unspent",
                    (false, false) => "pending",
                };
                let lock = coin.timelock.map(|t| format!(" timelock={t}")).unwrap_or_default();
                println!(
                    "coin {} {} {status}{lock} commitment={}",
                    coin.leaf_index,
                    coin.amounts,
                    hex32(coin.commitment.to_bytes())
                );
            }
            for id in wallet.session_ids() {
                println!("session {id} open");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Rejected(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}
