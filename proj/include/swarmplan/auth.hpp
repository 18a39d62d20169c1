// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace swarmplan::auth {

using Bytes = std::vector<std::uint8_t>;

struct KeyPair {
  Bytes public_key;
  Bytes secret_key;
};

class SignatureScheme {
 public:
  virtual ~SignatureScheme() = default;
  virtual KeyPair keygen(std::uint64_t seed) const = 0;
  virtual Bytes sign(const Bytes& secret, const Bytes& message) const = 0;
  virtual bool verify(const Bytes& pub, const Bytes& message,
                      const Bytes& signature) const = 0;
  virtual std::string name() const = 0;
};

// libsodium Ed25519; deterministic signatures.
class Ed25519Scheme : public SignatureScheme {
 public:
  Ed25519Scheme();
  KeyPair keygen(std::uint64_t seed) const override;
  Bytes sign(const Bytes& secret, const Bytes& message) const override;
  bool verify(const Bytes& pub, const Bytes& message,
              const Bytes& signature) const override;
  std::string name() const override { return "ed25519"; }
};

// Keyed-hash stand-in with no security value. The public key embeds the
// secret, so anyone can forge; tests use it to exercise protocol logic
// without the crypto cost.
class ToyScheme : public SignatureScheme {
 public:
  KeyPair keygen(std::uint64_t seed) const override;
  Bytes sign(const Bytes& secret, const Bytes& message) const override;
  bool verify(const Bytes& pub, const Bytes& message,
              const Bytes& signature) const override;
  std::string name() const override { return "toy"; }
};

struct AccessToken {
  std::string username;
  Bytes peer_public_key;
  std::int64_t expires_at = 0;  // unix seconds
  Bytes signature;              // by the authority
};

struct AccessPass {
  AccessToken token;
  std::string bootstrap_endpoint;
  Bytes authority_public_key;
};

constexpr std::size_t kMinNonceBytes = 16;

struct RequestEnvelope {
  AccessToken token;
  Bytes recipient_public_key;
  std::int64_t sent_at = 0;
  Bytes nonce;
  Bytes payload;
  Bytes signature;  // by the sender's peer key
};

struct ResponseEnvelope {
  AccessToken token;   // responder's token
  Bytes nonce;         // echoed from the request
  Bytes payload;
  Bytes signature;     // by the responder's peer key
};

// Length-prefixed field concatenation (4-byte big-endian lengths, integers as
// 8-byte big-endian). Both sides must produce identical bytes for signatures
// to verify, so this is the only serialization used for signing.
Bytes token_signing_bytes(const AccessToken& t);
Bytes request_signing_bytes(const RequestEnvelope& r);
Bytes response_signing_bytes(const ResponseEnvelope& r);

enum class VerifyResult {
  Accepted,
  MalformedEnvelope,  // structural problems, e.g. nonce shorter than 16 bytes
  TokenInvalid,       // bad authority signature
  TokenExpired,
  BadSignature,       // envelope signature does not verify
  ClockSkew,
  NonceReplayed,
  WrongRecipient,
  NonceMismatch,      // response does not echo the expected nonce
  WrongSender,        // response signed by an unexpected peer
};

std::string verify_result_name(VerifyResult r);

// Remembers nonces for twice the skew window. Thread safe; stale entries are
// pruned lazily using the caller-supplied clock.
class NonceStore {
 public:
  explicit NonceStore(std::int64_t skew_window_s)
      : window_(skew_window_s) {}

  bool seen(const Bytes& nonce, std::int64_t now);
  // Atomic insert-if-absent; false means another caller got there first.
  bool try_insert(const Bytes& nonce, std::int64_t now);
  std::size_t size() const;

 private:
  void prune_locked(std::int64_t now);
  std::int64_t window_;
  mutable std::mutex mu_;
  std::map<Bytes, std::int64_t> seen_at_;
};

class IdentityRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class NotAllowlisted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Issues access passes after confirming the username with an external
// identity check and the allowlist.
class Authority {
 public:
  Authority(const SignatureScheme& scheme, KeyPair keys,
            std::vector<std::string> allowlist,
            std::function<bool(const std::string&)> identity_check,
            std::string bootstrap_endpoint);

  AccessPass issue_pass(const std::string& username, const Bytes& peer_public,
                        std::int64_t now, std::int64_t ttl_s) const;
  const Bytes& public_key() const { return keys_.public_key; }

 private:
  const SignatureScheme& scheme_;
  KeyPair keys_;
  std::vector<std::string> allowlist_;
  std::function<bool(const std::string&)> identity_check_;
  std::string bootstrap_;
};

RequestEnvelope make_request(const SignatureScheme& scheme,
                             const AccessToken& token,
                             const Bytes& sender_secret,
                             const Bytes& recipient_public,
                             std::int64_t now, const Bytes& nonce,
                             Bytes payload);

ResponseEnvelope make_response(const SignatureScheme& scheme,
                               const AccessToken& responder_token,
                               const Bytes& responder_secret,
                               const Bytes& request_nonce, Bytes payload);

// Checks in documented order: structure, (1) token signature and expiry,
// (2) envelope signature, (3) clock skew beyond max_skew_s, (4) nonce seen
// within the replay window, (5) recipient mismatch. Only a fully accepted
// request commits its nonce to the store; a concurrent duplicate loses the
// final insert and reports NonceReplayed.
VerifyResult validate_request(const RequestEnvelope& req,
                              const Bytes& my_public,
                              const Bytes& authority_public,
                              NonceStore& nonces, std::int64_t now,
                              std::int64_t max_skew_s,
                              const SignatureScheme& scheme);

// Response checks need the expected nonce, the expected responder key and the
// local clock (token expiry) in addition to the envelope itself.
VerifyResult validate_response(const ResponseEnvelope& resp,
                               const Bytes& expected_nonce,
                               const Bytes& expected_sender_public,
                               const Bytes& authority_public,
                               std::int64_t now,
                               const SignatureScheme& scheme);

}  // namespace swarmplan::auth
