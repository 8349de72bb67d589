// Copyright 2026 The fairshare Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Content addressing, convergent encryption of chunks and the signed-call
// envelope accepted by the ledger.
//
// One hash function (SHA-256) is used for URIs, convergent keys and hash
// lists. Chunks are sealed with ChaCha20-Poly1305 under key = SHA-256 of the
// serialized plain chunk and an all-zero nonce: every key encrypts exactly
// one plaintext, so the fixed nonce is never reused under a different
// message, and the output is deterministic as convergence requires.

#include <fairshare/chunk_codec.hpp>
#include <fairshare/common.hpp>

#include <array>
#include <map>
#include <string>
#include <vector>

namespace fairshare::crypto {

struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  std::string hex() const { return to_hex(bytes); }
  static std::optional<Digest> from_hex(std::string_view text) {
    auto raw = fairshare::from_hex(text);
    if (!raw || raw->size() != 32) return std::nullopt;
    Digest d;
    std::copy(raw->begin(), raw->end(), d.bytes.begin());
    return d;
  }
  auto operator<=>(const Digest&) const = default;
};

inline Digest sha256(ByteView data) {
  ensure_sodium();
  Digest d;
  crypto_hash_sha256(d.bytes.data(), data.data(), data.size());
  return d;
}

inline Digest sha256(std::string_view text) { return sha256(as_bytes(text)); }

/// Content identifier: the hash of the file bytes.
struct Uri {
  Digest digest;

  std::string str() const { return digest.hex(); }
  static std::optional<Uri> parse(std::string_view text) {
    auto d = Digest::from_hex(text);
    if (!d) return std::nullopt;
    return Uri{*d};
  }
  auto operator<=>(const Uri&) const = default;
};

inline Result<Uri> generate_uri(ByteView file) {
  if (file.empty()) return Errc::empty_file;
  return Uri{sha256(file)};
}

/// Secret per-chunk key; equals the hash of the serialized plain chunk.
struct ConvergentKey {
  std::array<std::uint8_t, crypto_aead_chacha20poly1305_ietf_KEYBYTES> bytes{};

  std::string hex() const { return to_hex(bytes); }
  static std::optional<ConvergentKey> from_hex(std::string_view text) {
    auto raw = fairshare::from_hex(text);
    if (!raw || raw->size() != 32) return std::nullopt;
    ConvergentKey k;
    std::copy(raw->begin(), raw->end(), k.bytes.begin());
    return k;
  }
  auto operator<=>(const ConvergentKey&) const = default;
};

inline constexpr std::size_t kSealOverhead = crypto_aead_chacha20poly1305_ietf_ABYTES;
inline constexpr std::uint8_t kEncryptedChunkVersion = 0x01;
/// version + ciphertext hash + 8-byte big-endian ciphertext length.
inline constexpr std::size_t kEncryptedChunkHeaderSize = 1 + 32 + 8;

struct EncryptedChunk {
  Bytes ciphertext;

  Digest hash() const { return sha256(ciphertext); }
  std::size_t wire_size() const { return kEncryptedChunkHeaderSize + ciphertext.size(); }
  friend bool operator==(const EncryptedChunk&, const EncryptedChunk&) = default;
};

using KeyMap = std::map<PartyId, ConvergentKey>;
using HashList = std::vector<Digest>;

/// Authenticated deterministic encryption under an arbitrary key. Exposed so
/// tests and fault injection can build chunks whose key is not convergent.
inline EncryptedChunk seal(ByteView plaintext, const ConvergentKey& key) {
  ensure_sodium();
  static const std::array<std::uint8_t, crypto_aead_chacha20poly1305_ietf_NPUBBYTES> nonce{};
  EncryptedChunk out;
  out.ciphertext.resize(plaintext.size() + kSealOverhead);
  unsigned long long written = 0;
  crypto_aead_chacha20poly1305_ietf_encrypt(out.ciphertext.data(), &written, plaintext.data(),
                                            plaintext.size(), nullptr, 0, nullptr, nonce.data(),
                                            key.bytes.data());
  out.ciphertext.resize(written);
  return out;
}

inline Result<Bytes> open(const EncryptedChunk& enc, const ConvergentKey& key) {
  ensure_sodium();
  static const std::array<std::uint8_t, crypto_aead_chacha20poly1305_ietf_NPUBBYTES> nonce{};
  if (enc.ciphertext.size() < kSealOverhead) return Errc::decryption_failure;
  Bytes plain(enc.ciphertext.size() - kSealOverhead);
  unsigned long long written = 0;
  if (crypto_aead_chacha20poly1305_ietf_decrypt(plain.data(), &written, nullptr,
                                                enc.ciphertext.data(), enc.ciphertext.size(),
                                                nullptr, 0, nonce.data(), key.bytes.data()) != 0) {
    return Errc::decryption_failure;
  }
  plain.resize(written);
  return plain;
}

inline ConvergentKey convergent_key(ByteView serialized_chunk) {
  ConvergentKey key;
  key.bytes = sha256(serialized_chunk).bytes;
  return key;
}

struct SealedChunk {
  EncryptedChunk chunk;
  ConvergentKey key;
};

inline SealedChunk convergent_encrypt(const codec::PlainChunk& chunk) {
  const Bytes plain = codec::serialize(chunk);
  const ConvergentKey key = convergent_key(plain);
  return {seal(plain, key), key};
}

inline Result<codec::PlainChunk> convergent_decrypt(const EncryptedChunk& enc,
                                                    const ConvergentKey& key) {
  auto plain = open(enc, key);
  if (!plain) return plain.error();
  auto chunk = codec::deserialize(*plain);
  if (!chunk) return Errc::decryption_failure;
  return chunk;
}

/// The facilitator's upload check: the ciphertext hash is listed AND the
/// ciphertext decrypts under `key` to a plaintext whose hash is `key`.
inline bool verify_chunk_integrity(const EncryptedChunk& enc, const ConvergentKey& key,
                                   const HashList& hash_list) {
  const Digest h = enc.hash();
  if (std::find(hash_list.begin(), hash_list.end(), h) == hash_list.end()) return false;
  auto plain = open(enc, key);
  return plain && sha256(*plain).bytes == key.bytes;
}

inline Bytes serialize(const EncryptedChunk& enc) {
  Bytes out;
  out.reserve(enc.wire_size());
  out.push_back(kEncryptedChunkVersion);
  const Digest h = enc.hash();
  out.insert(out.end(), h.bytes.begin(), h.bytes.end());
  const std::uint64_t len = enc.ciphertext.size();
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(len >> shift));
  out.insert(out.end(), enc.ciphertext.begin(), enc.ciphertext.end());
  return out;
}

/// Rejects unknown versions, length mismatches and ciphertexts that do not
/// match the embedded hash.
inline Result<EncryptedChunk> parse_encrypted_chunk(ByteView bytes) {
  if (bytes.size() < kEncryptedChunkHeaderSize || bytes[0] != kEncryptedChunkVersion) {
    return Errc::malformed_chunk;
  }
  std::uint64_t len = 0;
  for (std::size_t i = 33; i < kEncryptedChunkHeaderSize; ++i) len = (len << 8) | bytes[i];
  if (len != bytes.size() - kEncryptedChunkHeaderSize) return Errc::malformed_chunk;
  EncryptedChunk enc;
  enc.ciphertext.assign(bytes.begin() + kEncryptedChunkHeaderSize, bytes.end());
  if (!std::equal(bytes.begin() + 1, bytes.begin() + 33, enc.hash().bytes.begin())) {
    return Errc::malformed_chunk;
  }
  return enc;
}

// ---------------------------------------------------------------------------
// Signatures (Ed25519).

struct PublicKey {
  std::array<std::uint8_t, crypto_sign_PUBLICKEYBYTES> bytes{};

  std::string hex() const { return to_hex(bytes); }
  static std::optional<PublicKey> from_hex(std::string_view text) {
    auto raw = fairshare::from_hex(text);
    if (!raw || raw->size() != crypto_sign_PUBLICKEYBYTES) return std::nullopt;
    PublicKey k;
    std::copy(raw->begin(), raw->end(), k.bytes.begin());
    return k;
  }
  auto operator<=>(const PublicKey&) const = default;
};

struct SecretKey {
  std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> bytes{};
};

struct KeyPair {
  PublicKey public_key;
  SecretKey secret_key;
};

/// Deterministic key pair: parties in simulations derive keys from the run
/// seed so whole runs are reproducible.
inline KeyPair keypair_from_seed(ByteView seed_material) {
  ensure_sodium();
  const Digest seed = sha256(seed_material);
  KeyPair kp;
  crypto_sign_seed_keypair(kp.public_key.bytes.data(), kp.secret_key.bytes.data(),
                           seed.bytes.data());
  return kp;
}

using Signature = std::array<std::uint8_t, crypto_sign_BYTES>;

struct SignedCall {
  PartyId caller;
  std::string operation;
  std::string payload;
  Signature signature{};

  friend bool operator==(const SignedCall&, const SignedCall&) = default;
};

/// caller, operation and payload, each prefixed with its 8-byte big-endian
/// length so no two distinct triples share a message.
inline Bytes signing_message(std::string_view caller, std::string_view operation,
                             std::string_view payload) {
  Bytes out;
  for (std::string_view part : {caller, operation, payload}) {
    const std::uint64_t len = part.size();
    for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(len >> shift));
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

inline SignedCall sign_call(PartyId caller, std::string operation, std::string payload,
                            const SecretKey& key) {
  ensure_sodium();
  SignedCall call{std::move(caller), std::move(operation), std::move(payload), {}};
  const Bytes msg = signing_message(call.caller, call.operation, call.payload);
  crypto_sign_detached(call.signature.data(), nullptr, msg.data(), msg.size(), key.bytes.data());
  return call;
}

inline bool signature_valid(const SignedCall& call, const PublicKey& key) {
  ensure_sodium();
  const Bytes msg = signing_message(call.caller, call.operation, call.payload);
  return crypto_sign_verify_detached(call.signature.data(), msg.data(), msg.size(),
                                     key.bytes.data()) == 0;
}

class KeyRegistry {
 public:
  /// Returns false if `id` was already registered.
  bool register_key(const PartyId& id, const PublicKey& key) {
    return keys_.emplace(id, key).second;
  }

  const PublicKey* find(const PartyId& id) const {
    auto it = keys_.find(id);
    return it == keys_.end() ? nullptr : &it->second;
  }

  /// Ok, UnknownCaller or InvalidSignature.
  Errc verify_call(const SignedCall& call) const {
    const PublicKey* key = find(call.caller);
    if (key == nullptr) return Errc::unknown_caller;
    return signature_valid(call, *key) ? Errc::ok : Errc::invalid_signature;
  }

 private:
  std::map<PartyId, PublicKey> keys_;
};

}  // namespace fairshare::crypto
