//! Files: ledger state, wallet, admin key and protocol messages.

use std::ffi::OsString;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use atlantis::wire::{self, Message};
use atlantis::{AdminKey, Ledger, Wallet};

use crate::{Failure, Format};

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name: OsString = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

pub fn admin_key_path(state: &Path) -> PathBuf {
    sidecar(state, ".admin")
}

/// Exclusive lock on the ledger for the lifetime of the guard.
pub struct StateLock {
    _file: File,
}

pub fn lock_state(state: &Path) -> Result<StateLock, Failure> {
    let path = sidecar(state, ".lock");
    let file =
        OpenOptions::new().create(true).truncate(false).write(true).open(&path).map_err(|e| Failure::io(&path, e))?;
    file.lock().map_err(|e| Failure::io(&path, e))?;
    Ok(StateLock { _file: file })
}

/// Writes through a temporary file so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let tmp = sidecar(path, ".tmp");
    let mut f = File::create(&tmp).map_err(|e| Failure::io(&tmp, e))?;
    f.write_all(bytes).and_then(|_| f.sync_all()).map_err(|e| Failure::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Failure::io(path, e))
}

pub fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::io(path, e))
}

pub fn load_ledger(path: &Path) -> Result<Ledger, Failure> {
    if !path.exists() {
        return Err(Failure::Rejected(format!("no ledger state at {}; run `atlantis init` first", path.display())));
    }
    Ledger::from_state_bytes(&read(path)?).map_err(|e| Failure::Rejected(format!("{}: {e}", path.display())))
}

pub fn save_ledger(path: &Path, ledger: &Ledger) -> Result<(), Failure> {
    write_atomic(path, &ledger.to_state_bytes())
}

pub fn load_wallet(path: &Path) -> Result<Wallet, Failure> {
    if !path.exists() {
        return Ok(Wallet::new());
    }
    Wallet::from_file_bytes(&read(path)?).map_err(|e| Failure::Rejected(format!("{}: {e}", path.display())))
}

pub fn save_wallet(path: &Path, wallet: &Wallet) -> Result<(), Failure> {
    if !path.exists() {
        eprintln!("warning: {} stores secret keys unencrypted", path.display());
    }
    write_atomic(path, &wallet.to_file_bytes())
}

pub fn load_admin_key(state: &Path) -> Result<AdminKey, Failure> {
    let path = admin_key_path(state);
    let text = fs::read_to_string(&path).map_err(|e| Failure::io(&path, e))?;
    let bytes: [u8; 32] = hex::decode(text.trim())
        .ok()
        .and_then(|b| b.try_into().ok())
        .ok_or_else(|| Failure::Rejected(format!("{}: malformed administrator key", path.display())))?;
    AdminKey::from_bytes(&bytes).map_err(|e| Failure::Rejected(format!("{}: {e}", path.display())))
}

pub fn save_admin_key(state: &Path, key: &AdminKey) -> Result<(), Failure> {
    let path = admin_key_path(state);
    write_atomic(&path, format!("{}\n", hex::encode(key.to_bytes())).as_bytes())
}

pub fn write_message<T: Message>(path: &Path, value: &T, format: Format) -> Result<(), Failure> {
    let bytes = match format {
        Format::Binary => wire::encode_message(value),
        Format::Text => wire::to_text(value).into_bytes(),
    };
    write_atomic(path, &bytes)
}

pub fn read_message<T: Message>(path: &Path) -> Result<T, Failure> {
    wire::decode_any(&read(path)?).map_err(|e| Failure::Rejected(format!("{}: {e}", path.display())))
}
