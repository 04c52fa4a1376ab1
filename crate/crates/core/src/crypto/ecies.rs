use aes::cipher::{KeyIvInit, StreamCipher};
use hmac::{Hmac, Mac};
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};
use x25519_dalek::{PublicKey, StaticSecret};

use super::CryptoError;

type Aes128Ctr = ctr::Ctr128BE<aes::Aes128>;
type HmacSha256 = Hmac<Sha256>;

pub const POINT_LEN: usize = 32;
pub const TAG_LEN: usize = 32;
pub const AES_KEY_LEN: usize = 16;
pub const MAC_KEY_LEN: usize = 32;
pub const ENVELOPE_KEY_MATERIAL_LEN: usize = AES_KEY_LEN + MAC_KEY_LEN;
pub const MAX_PLAINTEXT_LEN: usize = 256;
pub const MAX_KDF_OUTPUT: usize = 1024;

/// An X25519 key pair.
#[derive(Clone)]
pub struct KeyPair {
    secret: [u8; POINT_LEN],
    public: [u8; POINT_LEN],
}

impl KeyPair {
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R) -> Self {
        let mut secret = [0u8; POINT_LEN];
        rng.fill_bytes(&mut secret);
        Self::from_secret(secret)
    }

    pub fn from_secret(secret: [u8; POINT_LEN]) -> Self {
        let public = PublicKey::from(&StaticSecret::from(secret));
        Self {
            secret,
            public: *public.as_bytes(),
        }
    }

    pub fn public(&self) -> &[u8; POINT_LEN] {
        &self.public
    }

    pub fn secret(&self) -> &[u8; POINT_LEN] {
        &self.secret
    }
}

impl std::fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KeyPair")
            .field("public", &hex::encode(self.public))
            .finish_non_exhaustive()
    }
}

/// Diffie-Hellman output `Z`.
#[derive(Clone, PartialEq, Eq)]
pub struct SharedSecret([u8; 32]);

impl SharedSecret {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl std::fmt::Debug for SharedSecret {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SharedSecret(..)")
    }
}

pub fn derive_shared_secret(
    my_secret: &[u8; POINT_LEN],
    their_public: &[u8; POINT_LEN],
) -> Result<SharedSecret, CryptoError> {
    let secret = StaticSecret::from(*my_secret);
    let shared = secret.diffie_hellman(&PublicKey::from(*their_public));
    if !shared.was_contributory() {
        return Err(CryptoError::DegenerateKey);
    }
    Ok(SharedSecret(*shared.as_bytes()))
}

/// ANSI X9.63 KDF with SHA-256: `Hash(Z || counter_be32 || shared_info)` for
/// counter = 1, 2, ... until `out_len` bytes are produced.
pub fn kdf_expand(z: &SharedSecret, shared_info: &[u8], out_len: usize) -> Result<Vec<u8>, CryptoError> {
    if out_len == 0 {
        return Err(CryptoError::Argument("kdf output length must be positive"));
    }
    if out_len > MAX_KDF_OUTPUT {
        return Err(CryptoError::Argument("kdf output length exceeds 1024 bytes"));
    }
    let mut out = Vec::with_capacity(out_len + 32);
    let mut counter: u32 = 1;
    while out.len() < out_len {
        let mut hasher = Sha256::new();
        hasher.update(z.as_bytes());
        hasher.update(counter.to_be_bytes());
        hasher.update(shared_info);
        out.extend_from_slice(&hasher.finalize());
        counter += 1;
    }
    out.truncate(out_len);
    Ok(out)
}

/// ECIES output: ephemeral public key, AES-CTR ciphertext, HMAC-SHA-256 tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EciesEnvelope {
    pub ephemeral_public: [u8; POINT_LEN],
    pub ciphertext: Vec<u8>,
    pub tag: [u8; TAG_LEN],
}

struct EnvelopeKeys {
    enc: [u8; AES_KEY_LEN],
    mac: [u8; MAC_KEY_LEN],
}

fn envelope_keys(z: &SharedSecret, ephemeral_public: &[u8; POINT_LEN]) -> EnvelopeKeys {
    let material =
        kdf_expand(z, ephemeral_public, ENVELOPE_KEY_MATERIAL_LEN).expect("fixed key material length is within bounds");
    let mut enc = [0u8; AES_KEY_LEN];
    let mut mac = [0u8; MAC_KEY_LEN];
    enc.copy_from_slice(&material[..AES_KEY_LEN]);
    mac.copy_from_slice(&material[AES_KEY_LEN..]);
    EnvelopeKeys { enc, mac }
}

fn apply_ctr(key: &[u8; AES_KEY_LEN], data: &mut [u8]) {
    // Every envelope uses a fresh key, so a zero IV is safe.
    let mut cipher = Aes128Ctr::new(key.into(), &[0u8; 16].into());
    cipher.apply_keystream(data);
}

fn mac_over(key: &[u8; MAC_KEY_LEN], ciphertext: &[u8]) -> HmacSha256 {
    let mut mac = HmacSha256::new_from_slice(key).expect("HMAC accepts any key length");
    mac.update(ciphertext);
    mac
}

/// Conceal `plaintext` for `recipient_public` under a fresh ephemeral key.
pub fn ecies_conceal<R: RngCore + CryptoRng>(
    rng: &mut R,
    plaintext: &[u8],
    recipient_public: &[u8; POINT_LEN],
) -> Result<EciesEnvelope, CryptoError> {
    ecies_conceal_with(&KeyPair::generate(rng), plaintext, recipient_public)
}

/// Conceal with a caller-supplied ephemeral key pair. Used for known-answer tests.
pub fn ecies_conceal_with(
    ephemeral: &KeyPair,
    plaintext: &[u8],
    recipient_public: &[u8; POINT_LEN],
) -> Result<EciesEnvelope, CryptoError> {
    if plaintext.len() > MAX_PLAINTEXT_LEN {
        return Err(CryptoError::Argument("plaintext exceeds 256 bytes"));
    }
    let z = derive_shared_secret(ephemeral.secret(), recipient_public)?;
    let keys = envelope_keys(&z, ephemeral.public());
    let mut ciphertext = plaintext.to_vec();
    apply_ctr(&keys.enc, &mut ciphertext);
    let tag: [u8; TAG_LEN] = mac_over(&keys.mac, &ciphertext).finalize().into_bytes().into();
    Ok(EciesEnvelope {
        ephemeral_public: *ephemeral.public(),
        ciphertext,
        tag,
    })
}

/// Verify the tag, then decrypt. No plaintext is produced on tag mismatch.
pub fn ecies_reveal(envelope: &EciesEnvelope, recipient_secret: &[u8; POINT_LEN]) -> Result<Vec<u8>, CryptoError> {
    let z = derive_shared_secret(recipient_secret, &envelope.ephemeral_public)?;
    let keys = envelope_keys(&z, &envelope.ephemeral_public);
    mac_over(&keys.mac, &envelope.ciphertext)
        .verify_slice(&envelope.tag)
        .map_err(|_| CryptoError::Integrity)?;
    let mut plaintext = envelope.ciphertext.clone();
    apply_ctr(&keys.enc, &mut plaintext);
    Ok(plaintext)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn h32(s: &str) -> [u8; 32] {
        hex::decode(s).unwrap().try_into().unwrap()
    }

    // RFC 7748 section 5.2, cross-checked with an independent Montgomery ladder.
    #[test]
    fn x25519_rfc7748_vectors() {
        let cases = [
            (
                "a546e36bf0527c9d3b16154b82465edd62144c0ac1fc5a18506a2244ba449ac4",
                "e6db6867583030db3594c1a424b15f7c726624ec26b3353b10a903a6d0ab1c4c",
                "c3da55379de9c6908e94ea4df28d084f32eccf03491c71f754b4075577a28552",
            ),
            (
                "4b66e9d4d1b4673c5ad22691957d6af5c11b6421e0ea01d42ca4169e7918ba0d",
                "e5210f12786811d3f4b7959d0538ae2c31dbe7106fc03c3efc4cd549c715a493",
                "95cbde9476e8907d7aade45cb4b873f88b595a68799fa152e6f8f7647aac7957",
            ),
        ];
        for (scalar, point, expected) in cases {
            let z = derive_shared_secret(&h32(scalar), &h32(point)).unwrap();
            assert_eq!(hex::encode(z.as_bytes()), expected);
        }
    }

    #[test]
    fn dh_is_symmetric() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let ue = KeyPair::generate(&mut rng);
        let hn = KeyPair::generate(&mut rng);
        let a = derive_shared_secret(ue.secret(), hn.public()).unwrap();
        let b = derive_shared_secret(hn.secret(), ue.public()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fresh_keypairs_give_distinct_secrets() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let hn = KeyPair::generate(&mut rng);
        let z1 = derive_shared_secret(KeyPair::generate(&mut rng).secret(), hn.public()).unwrap();
        let z2 = derive_shared_secret(KeyPair::generate(&mut rng).secret(), hn.public()).unwrap();
        assert_ne!(z1, z2);
    }

    #[test]
    fn low_order_point_is_degenerate() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let me = KeyPair::generate(&mut rng);
        assert_eq!(
            derive_shared_secret(me.secret(), &[0u8; 32]),
            Err(CryptoError::DegenerateKey)
        );
    }

    #[test]
    fn kdf_rejects_bad_lengths() {
        let z = SharedSecret([1u8; 32]);
        assert!(matches!(kdf_expand(&z, b"", 0), Err(CryptoError::Argument(_))));
        assert!(matches!(kdf_expand(&z, b"", 1025), Err(CryptoError::Argument(_))));
        assert_eq!(kdf_expand(&z, b"", 1024).unwrap().len(), 1024);
    }

    #[test]
    fn kdf_is_deterministic_and_domain_separated() {
        let z = SharedSecret([3u8; 32]);
        assert_eq!(kdf_expand(&z, b"a", 48).unwrap(), kdf_expand(&z, b"a", 48).unwrap());
        assert_ne!(kdf_expand(&z, b"a", 48).unwrap(), kdf_expand(&z, b"b", 48).unwrap());
    }

    // Oracle: the `cryptography` package's X963KDF and a hand-written
    // counter-mode loop agreed on these bytes.
    #[test]
    fn kdf_matches_x963_oracle() {
        let z = SharedSecret(std::array::from_fn(|i| i as u8));
        let out = kdf_expand(&z, b"aka-lab", 100).unwrap();
        assert_eq!(
            hex::encode(out),
            "18a5fc2e27a4498e4f657a7071712def97e9191dacae59486653ac60bc7ba38aac9189f75e84cdaf\
             ed17c30637dc6ec4b9b11abe849d3c2dbfa92894f2fd2128357cf40ab55e0c5f1c7d0c119f1cab8d\
             e0edc8aa80f78c12ce698ec33e485841f681552b"
        );
    }

    #[test]
    fn ecies_known_answer() {
        // RFC 7748 section 6.1 keys: Alice is the ephemeral, Bob the home network.
        let alice = KeyPair::from_secret(h32("77076d0a7318a57d3c16c17251b26645df4c2f87ebc0992ab177fba51db92c2a"));
        let bob = KeyPair::from_secret(h32("5dab087e624a8a4b79e17f8b83800ee66f3bb1292618b6fd1c2f8b27ff88e0eb"));
        assert_eq!(
            hex::encode(bob.public()),
            "de9edb7d7b7dc1b4d35b61c2ece435373f8343c85b78674dadfc7e146f882b4f"
        );
        let z = derive_shared_secret(alice.secret(), bob.public()).unwrap();
        let material = kdf_expand(&z, alice.public(), 48).unwrap();
        assert_eq!(
            hex::encode(&material),
            "cb92f019b7b32fbc718df1489204711e39b660cb5b88e99fd8aec6b0d57ea10a\
             075a80c333a38505a647a9550176f705"
        );
        let env = ecies_conceal_with(&alice, &hex::decode("0000000001").unwrap(), bob.public()).unwrap();
        assert_eq!(hex::encode(&env.ciphertext), "7a3723c150");
        assert_eq!(
            hex::encode(env.tag),
            "390c34595aeed66e38ea0cbddb493cb0030ee5723f02d548acc2b965b63a1d46"
        );
        assert_eq!(
            ecies_reveal(&env, bob.secret()).unwrap(),
            hex::decode("0000000001").unwrap()
        );
    }

    #[test]
    fn conceal_is_randomized_and_length_preserving() {
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        let hn = KeyPair::generate(&mut rng);
        let msin = [0x01, 0x23, 0x45, 0x67, 0x89];
        let a = ecies_conceal(&mut rng, &msin, hn.public()).unwrap();
        let b = ecies_conceal(&mut rng, &msin, hn.public()).unwrap();
        assert_ne!(a, b);
        assert_eq!(a.ciphertext.len(), 5);
        assert_eq!(ecies_reveal(&a, hn.secret()).unwrap(), msin);
    }

    #[test]
    fn tampering_is_detected() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let hn = KeyPair::generate(&mut rng);
        let env = ecies_conceal(&mut rng, b"subscriber", hn.public()).unwrap();

        let mut bad = env.clone();
        bad.ciphertext[3] ^= 0x10;
        assert_eq!(ecies_reveal(&bad, hn.secret()), Err(CryptoError::Integrity));

        let mut bad = env.clone();
        bad.ephemeral_public[0] ^= 0x01;
        assert!(ecies_reveal(&bad, hn.secret()).is_err());

        // The top bit is ignored by X25519 but still feeds the KDF.
        let mut bad = env.clone();
        bad.ephemeral_public[31] ^= 0x80;
        assert_eq!(ecies_reveal(&bad, hn.secret()), Err(CryptoError::Integrity));

        let mut bad = env;
        bad.tag[31] ^= 0x01;
        assert_eq!(ecies_reveal(&bad, hn.secret()), Err(CryptoError::Integrity));
    }

    #[test]
    fn oversized_plaintext_rejected() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let hn = KeyPair::generate(&mut rng);
        assert!(ecies_conceal(&mut rng, &[0u8; 257], hn.public()).is_err());
        assert!(ecies_conceal(&mut rng, &[0u8; 256], hn.public()).is_ok());
    }
}
