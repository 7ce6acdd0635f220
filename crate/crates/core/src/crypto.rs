//! Hashing, coalescing, salting and per-token message envelopes.
//!
//! Row hashes are SHA-256 digests of a canonical JSON array, truncated to the
//! low `hash_bits` bits. Messages are compressed, then sealed with
//! ChaCha20-Poly1305 under a key derived from the token and the envelope nonce.

use std::io::{Read, Write};

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;
use flate2::Compression;
use hkdf::Hkdf;
use hmac::{Hmac, Mac};
use rand::{CryptoRng, RngCore};
use rusqlite::types::Value;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Width of the salt constants. Keeps tokens in the positive range of a
/// signed 64-bit engine integer.
pub const Y_BITS: u32 = 48;

const ENVELOPE_VERSION: u8 = 1;
const NONCE_LEN: usize = 12;
const CHECK_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HashAlgorithm {
    Sha256,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashConfig {
    pub algorithm: HashAlgorithm,
    pub hash_bits: u32,
    pub coalesce_constant: u64,
}

impl Default for HashConfig {
    fn default() -> Self {
        HashConfig {
            algorithm: HashAlgorithm::Sha256,
            hash_bits: 40,
            coalesce_constant: 42,
        }
    }
}

impl HashConfig {
    pub fn new(hash_bits: u32, coalesce_constant: u64) -> Result<Self> {
        let cfg = HashConfig {
            algorithm: HashAlgorithm::Sha256,
            hash_bits,
            coalesce_constant,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=63).contains(&self.hash_bits) {
            return Err(Error::Config(format!(
                "hash_bits must lie in 1..=63, got {}",
                self.hash_bits
            )));
        }
        if self.coalesce_constant > self.mask() {
            return Err(Error::Config(format!(
                "coalesce constant {} does not fit in {} bits",
                self.coalesce_constant, self.hash_bits
            )));
        }
        Ok(())
    }

    pub fn mask(&self) -> u64 {
        (1u64 << self.hash_bits) - 1
    }
}

pub fn string_hash(s: &str, cfg: &HashConfig) -> u64 {
    let digest = Sha256::digest(s.as_bytes());
    let mut low = [0u8; 8];
    low.copy_from_slice(&digest[24..32]);
    u64::from_be_bytes(low) & cfg.mask()
}

/// Canonical JSON for one scalar: `null`, bare integers, shortest round-trip
/// reals, escaped strings.
pub fn canonical_scalar(value: &Value) -> Result<String> {
    match value {
        Value::Null => Ok("null".to_owned()),
        Value::Integer(i) => Ok(i.to_string()),
        Value::Real(r) if r.is_finite() => Ok(format!("{r:?}")),
        Value::Real(r) => Err(Error::Serialization(format!("non-finite real {r}"))),
        Value::Text(s) => Ok(serde_json::to_string(s)?),
        Value::Blob(_) => Err(Error::Serialization("blob values are not hashable".into())),
    }
}

/// Serializes `[table_name, v1, ..., vn]` without insignificant whitespace.
pub fn canonical_row(table_name: &str, values: &[Value]) -> Result<String> {
    let mut out = String::with_capacity(16 + 12 * values.len());
    out.push('[');
    out.push_str(&serde_json::to_string(table_name)?);
    for v in values {
        out.push(',');
        out.push_str(&canonical_scalar(v)?);
    }
    out.push(']');
    Ok(out)
}

pub fn row_hash(table_name: &str, values: &[Value], cfg: &HashConfig) -> Result<u64> {
    row_hash_with(table_name, values, cfg, "")
}

/// Row hash with a build disambiguator appended to the serialization.
pub fn row_hash_with(
    table_name: &str,
    values: &[Value],
    cfg: &HashConfig,
    disambiguator: &str,
) -> Result<u64> {
    let mut text = canonical_row(table_name, values)?;
    text.push_str(disambiguator);
    Ok(string_hash(&text, cfg))
}

pub fn nn(x: Option<u64>, cfg: &HashConfig) -> u64 {
    x.unwrap_or(cfg.coalesce_constant)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaltSpec {
    pub task_number: u16,
    pub y_constant: u64,
}

impl SaltSpec {
    pub fn new(task_number: u16, y_constant: u64) -> Result<Self> {
        if task_number > 999 {
            return Err(Error::Config(format!(
                "task number {task_number} has more than three digits"
            )));
        }
        Ok(SaltSpec {
            task_number,
            y_constant,
        })
    }

    /// Deterministic salt for `task_number` under a build seed. `attempt`
    /// lets the caller step away from a clash with another task.
    pub fn derive(task_number: u16, seed: u64, attempt: u32) -> Result<Self> {
        let mut h = Sha256::new();
        h.update(b"sqlab-salt");
        h.update(seed.to_be_bytes());
        h.update(task_number.to_be_bytes());
        h.update(attempt.to_be_bytes());
        let digest = h.finalize();
        let mut low = [0u8; 8];
        low.copy_from_slice(&digest[24..32]);
        let mut y = u64::from_be_bytes(low) & ((1u64 << Y_BITS) - 1);
        if y == 0 {
            y = 1;
        }
        SaltSpec::new(task_number, y)
    }

    pub fn function_name(&self) -> String {
        format!("salt_{:03}", self.task_number)
    }
}

pub fn salt_apply(spec: &SaltSpec, x: Option<u64>, cfg: &HashConfig) -> u64 {
    nn(x, cfg) ^ spec.y_constant
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CipherEnvelope {
    pub token_check: [u8; CHECK_LEN],
    pub nonce: [u8; NONCE_LEN],
    pub ciphertext: Vec<u8>,
}

impl CipherEnvelope {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(1 + CHECK_LEN + NONCE_LEN + self.ciphertext.len());
        out.push(ENVELOPE_VERSION);
        out.extend_from_slice(&self.token_check);
        out.extend_from_slice(&self.nonce);
        out.extend_from_slice(&self.ciphertext);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        let header = 1 + CHECK_LEN + NONCE_LEN;
        if bytes.len() < header || bytes[0] != ENVELOPE_VERSION {
            return None;
        }
        let mut token_check = [0u8; CHECK_LEN];
        token_check.copy_from_slice(&bytes[1..1 + CHECK_LEN]);
        let mut nonce = [0u8; NONCE_LEN];
        nonce.copy_from_slice(&bytes[1 + CHECK_LEN..header]);
        Some(CipherEnvelope {
            token_check,
            nonce,
            ciphertext: bytes[header..].to_vec(),
        })
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn from_hex(text: &str) -> Option<Self> {
        hex::decode(text.trim())
            .ok()
            .and_then(|b| Self::from_bytes(&b))
    }
}

fn token_check(token: u64, nonce: &[u8; NONCE_LEN]) -> [u8; CHECK_LEN] {
    let mut mac =
        <Hmac<Sha256> as Mac>::new_from_slice(nonce).expect("hmac accepts any key length");
    mac.update(b"sqlab-check");
    mac.update(&token.to_be_bytes());
    let tag = mac.finalize().into_bytes();
    let mut out = [0u8; CHECK_LEN];
    out.copy_from_slice(&tag[..CHECK_LEN]);
    out
}

fn cipher_for(token: u64, nonce: &[u8; NONCE_LEN]) -> ChaCha20Poly1305 {
    let hk = Hkdf::<Sha256>::new(Some(nonce), &token.to_be_bytes());
    let mut key = [0u8; 32];
    hk.expand(b"sqlab-msg-key", &mut key)
        .expect("32 bytes is a valid hkdf output length");
    ChaCha20Poly1305::new(Key::from_slice(&key))
}

pub fn encrypt_message(token: u64, plaintext: &str) -> CipherEnvelope {
    encrypt_message_with(token, plaintext, &mut rand::thread_rng())
}

/// Same as [`encrypt_message`] with a caller-provided nonce source, so that
/// builds seeded from the manifest are reproducible.
pub fn encrypt_message_with<R: RngCore + CryptoRng>(
    token: u64,
    plaintext: &str,
    rng: &mut R,
) -> CipherEnvelope {
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    let check = token_check(token, &nonce);
    let mut enc = DeflateEncoder::new(Vec::new(), Compression::best());
    enc.write_all(plaintext.as_bytes())
        .expect("writing to a Vec cannot fail");
    let compressed = enc.finish().expect("writing to a Vec cannot fail");
    let ciphertext = cipher_for(token, &nonce)
        .encrypt(
            Nonce::from_slice(&nonce),
            Payload {
                msg: &compressed,
                aad: &check,
            },
        )
        .expect("chacha20poly1305 encryption is infallible for in-memory buffers");
    CipherEnvelope {
        token_check: check,
        nonce,
        ciphertext,
    }
}

pub fn decrypt_probe(token: u64, envelope: &CipherEnvelope) -> Option<String> {
    if token_check(token, &envelope.nonce) != envelope.token_check {
        return None;
    }
    let compressed = cipher_for(token, &envelope.nonce)
        .decrypt(
            Nonce::from_slice(&envelope.nonce),
            Payload {
                msg: &envelope.ciphertext,
                aad: &envelope.token_check,
            },
        )
        .ok()?;
    let mut text = String::new();
    DeflateDecoder::new(&compressed[..])
        .read_to_string(&mut text)
        .ok()?;
    Some(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nn_passes_values_through() {
        let cfg = HashConfig::default();
        assert_eq!(nn(None, &cfg), 42);
        assert_eq!(nn(Some(7), &cfg), 7);
        assert_eq!(nn(Some(0), &cfg), 0);
    }

    #[test]
    fn salt_examples() {
        let cfg = HashConfig::default();
        let id = SaltSpec::new(42, 0).unwrap();
        assert_eq!(salt_apply(&id, Some(123), &cfg), 123);
        let five = SaltSpec::new(42, 5).unwrap();
        assert_eq!(salt_apply(&five, None, &cfg), 47);
        assert_eq!(
            salt_apply(&five, Some(salt_apply(&five, Some(99), &cfg)), &cfg),
            99
        );
    }

    #[test]
    fn config_bounds() {
        assert!(HashConfig::new(0, 0).is_err());
        assert!(HashConfig::new(64, 0).is_err());
        assert!(HashConfig::new(5, 42).is_err());
        assert!(HashConfig::new(63, 42).is_ok());
    }

    #[test]
    fn canonical_row_has_no_whitespace() {
        let row = canonical_row(
            "department",
            &[
                Value::Text("Research".into()),
                Value::Integer(5),
                Value::Null,
                Value::Real(32.5),
            ],
        )
        .unwrap();
        assert_eq!(row, r#"["department","Research",5,null,32.5]"#);
        assert!(canonical_row("t", &[Value::Blob(vec![1])]).is_err());
        assert!(canonical_row("t", &[Value::Real(f64::NAN)]).is_err());
    }

    #[test]
    fn table_name_is_hashed() {
        let cfg = HashConfig::default();
        let t = row_hash("t", &[Value::Integer(1)], &cfg).unwrap();
        let u = row_hash("u", &[Value::Integer(1)], &cfg).unwrap();
        assert_ne!(t, u);
    }

    #[test]
    fn envelope_round_trip_and_mismatch() {
        let a = encrypt_message(77, "hello");
        let b = encrypt_message(77, "hello");
        assert_ne!(a.ciphertext, b.ciphertext);
        assert_eq!(decrypt_probe(77, &a).as_deref(), Some("hello"));
        assert_eq!(decrypt_probe(77, &b).as_deref(), Some("hello"));
        assert_eq!(decrypt_probe(78, &a), None);
        let parsed = CipherEnvelope::from_hex(&a.to_hex()).unwrap();
        assert_eq!(parsed, a);
    }

    #[test]
    fn salt_derivation_is_stable_and_bounded() {
        let a = SaltSpec::derive(292, 7, 0).unwrap();
        assert_eq!(a, SaltSpec::derive(292, 7, 0).unwrap());
        assert_ne!(a.y_constant, SaltSpec::derive(50, 7, 0).unwrap().y_constant);
        assert!(a.y_constant < 1 << Y_BITS);
        assert_eq!(a.function_name(), "salt_292");
    }
}
