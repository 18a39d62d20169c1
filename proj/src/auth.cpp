// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0

#include "swarmplan/auth.hpp"

#include <algorithm>
#include <cstring>

#include <sodium.h>

namespace swarmplan::auth {

namespace {

void append_u32(Bytes& out, std::uint32_t v) {
  out.push_back(std::uint8_t(v >> 24));
  out.push_back(std::uint8_t(v >> 16));
  out.push_back(std::uint8_t(v >> 8));
  out.push_back(std::uint8_t(v));
}

void append_i64(Bytes& out, std::int64_t v) {
  auto u = static_cast<std::uint64_t>(v);
  for (int shift = 56; shift >= 0; shift -= 8)
    out.push_back(std::uint8_t(u >> shift));
}

void append_bytes(Bytes& out, const Bytes& b) {
  append_u32(out, static_cast<std::uint32_t>(b.size()));
  out.insert(out.end(), b.begin(), b.end());
}

void append_str(Bytes& out, const std::string& s) {
  append_u32(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Bytes stream_bytes(std::uint64_t seed, std::size_t count) {
  Bytes out;
  out.reserve(count);
  std::uint64_t state = seed;
  while (out.size() < count) {
    std::uint64_t w = splitmix64(state);
    for (int i = 0; i < 8 && out.size() < count; ++i)
      out.push_back(std::uint8_t(w >> (8 * i)));
  }
  return out;
}

}  // namespace

Bytes token_signing_bytes(const AccessToken& t) {
  Bytes out;
  append_str(out, "swarmplan.token.v1");
  append_str(out, t.username);
  append_bytes(out, t.peer_public_key);
  append_i64(out, t.expires_at);
  return out;
}

Bytes request_signing_bytes(const RequestEnvelope& r) {
  Bytes out;
  append_str(out, "swarmplan.request.v1");
  append_bytes(out, token_signing_bytes(r.token));
  append_bytes(out, r.token.signature);
  append_bytes(out, r.recipient_public_key);
  append_i64(out, r.sent_at);
  append_bytes(out, r.nonce);
  append_bytes(out, r.payload);
  return out;
}

Bytes response_signing_bytes(const ResponseEnvelope& r) {
  Bytes out;
  append_str(out, "swarmplan.response.v1");
  append_bytes(out, token_signing_bytes(r.token));
  append_bytes(out, r.token.signature);
  append_bytes(out, r.nonce);
  append_bytes(out, r.payload);
  return out;
}

std::string verify_result_name(VerifyResult r) {
  switch (r) {
    case VerifyResult::Accepted: return "accepted";
    case VerifyResult::MalformedEnvelope: return "malformed_envelope";
    case VerifyResult::TokenInvalid: return "token_invalid";
    case VerifyResult::TokenExpired: return "token_expired";
    case VerifyResult::BadSignature: return "bad_signature";
    case VerifyResult::ClockSkew: return "clock_skew";
    case VerifyResult::NonceReplayed: return "nonce_replayed";
    case VerifyResult::WrongRecipient: return "wrong_recipient";
    case VerifyResult::NonceMismatch: return "nonce_mismatch";
    case VerifyResult::WrongSender: return "wrong_sender";
  }
  return "unknown";
}

Ed25519Scheme::Ed25519Scheme() {
  if (sodium_init() < 0)
    throw std::runtime_error("libsodium failed to initialize");
}

KeyPair Ed25519Scheme::keygen(std::uint64_t seed) const {
  Bytes seed_bytes = stream_bytes(seed, crypto_sign_SEEDBYTES);
  KeyPair kp;
  kp.public_key.resize(crypto_sign_PUBLICKEYBYTES);
  kp.secret_key.resize(crypto_sign_SECRETKEYBYTES);
  crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(),
                           seed_bytes.data());
  return kp;
}

Bytes Ed25519Scheme::sign(const Bytes& secret, const Bytes& message) const {
  if (secret.size() != crypto_sign_SECRETKEYBYTES)
    throw std::invalid_argument("ed25519 secret key must be 64 bytes");
  Bytes sig(crypto_sign_BYTES);
  crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(),
                       secret.data());
  return sig;
}

bool Ed25519Scheme::verify(const Bytes& pub, const Bytes& message,
                           const Bytes& signature) const {
  if (pub.size() != crypto_sign_PUBLICKEYBYTES ||
      signature.size() != crypto_sign_BYTES)
    return false;
  return crypto_sign_verify_detached(signature.data(), message.data(),
                                     message.size(), pub.data()) == 0;
}

KeyPair ToyScheme::keygen(std::uint64_t seed) const {
  KeyPair kp;
  kp.secret_key = stream_bytes(seed, 32);
  kp.public_key = kp.secret_key;  // forgeable by design
  return kp;
}

namespace {

// Two lanes of FNV-1a over (key || message), decorrelated by lane constants.
Bytes toy_tag(const Bytes& key, const Bytes& message) {
  std::uint64_t h0 = 0xcbf29ce484222325ULL;
  std::uint64_t h1 = 0x84222325cbf29ce4ULL;
  auto mix = [&](std::uint8_t b) {
    h0 = (h0 ^ b) * 0x100000001b3ULL;
    h1 = (h1 ^ (b + 0x9e)) * 0x100000001b3ULL;
  };
  for (auto b : key) mix(b);
  mix(0xff);
  for (auto b : message) mix(b);
  Bytes tag(16);
  for (int i = 0; i < 8; ++i) {
    tag[i] = std::uint8_t(h0 >> (8 * i));
    tag[8 + i] = std::uint8_t(h1 >> (8 * i));
  }
  return tag;
}

}  // namespace

Bytes ToyScheme::sign(const Bytes& secret, const Bytes& message) const {
  return toy_tag(secret, message);
}

bool ToyScheme::verify(const Bytes& pub, const Bytes& message,
                       const Bytes& signature) const {
  return signature == toy_tag(pub, message);
}

bool NonceStore::seen(const Bytes& nonce, std::int64_t now) {
  std::lock_guard<std::mutex> lock(mu_);
  prune_locked(now);
  return seen_at_.count(nonce) > 0;
}

bool NonceStore::try_insert(const Bytes& nonce, std::int64_t now) {
  std::lock_guard<std::mutex> lock(mu_);
  prune_locked(now);
  return seen_at_.emplace(nonce, now).second;
}

std::size_t NonceStore::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return seen_at_.size();
}

void NonceStore::prune_locked(std::int64_t now) {
  for (auto it = seen_at_.begin(); it != seen_at_.end();) {
    if (now - it->second > 2 * window_)
      it = seen_at_.erase(it);
    else
      ++it;
  }
}

Authority::Authority(const SignatureScheme& scheme, KeyPair keys,
                     std::vector<std::string> allowlist,
                     std::function<bool(const std::string&)> identity_check,
                     std::string bootstrap_endpoint)
    : scheme_(scheme),
      keys_(std::move(keys)),
      allowlist_(std::move(allowlist)),
      identity_check_(std::move(identity_check)),
      bootstrap_(std::move(bootstrap_endpoint)) {}

AccessPass Authority::issue_pass(const std::string& username,
                                 const Bytes& peer_public, std::int64_t now,
                                 std::int64_t ttl_s) const {
  if (!identity_check_ || !identity_check_(username))
    throw IdentityRejected("identity provider rejected user: " + username);
  if (std::find(allowlist_.begin(), allowlist_.end(), username) ==
      allowlist_.end())
    throw NotAllowlisted("user is not on the collaboration allowlist: " +
                         username);
  AccessPass pass;
  pass.token.username = username;
  pass.token.peer_public_key = peer_public;
  pass.token.expires_at = now + ttl_s;
  pass.token.signature =
      scheme_.sign(keys_.secret_key, token_signing_bytes(pass.token));
  pass.bootstrap_endpoint = bootstrap_;
  pass.authority_public_key = keys_.public_key;
  return pass;
}

RequestEnvelope make_request(const SignatureScheme& scheme,
                             const AccessToken& token,
                             const Bytes& sender_secret,
                             const Bytes& recipient_public, std::int64_t now,
                             const Bytes& nonce, Bytes payload) {
  RequestEnvelope req;
  req.token = token;
  req.recipient_public_key = recipient_public;
  req.sent_at = now;
  req.nonce = nonce;
  req.payload = std::move(payload);
  req.signature = scheme.sign(sender_secret, request_signing_bytes(req));
  return req;
}

ResponseEnvelope make_response(const SignatureScheme& scheme,
                               const AccessToken& responder_token,
                               const Bytes& responder_secret,
                               const Bytes& request_nonce, Bytes payload) {
  ResponseEnvelope resp;
  resp.token = responder_token;
  resp.nonce = request_nonce;
  resp.payload = std::move(payload);
  resp.signature = scheme.sign(responder_secret, response_signing_bytes(resp));
  return resp;
}

VerifyResult validate_request(const RequestEnvelope& req,
                              const Bytes& my_public,
                              const Bytes& authority_public,
                              NonceStore& nonces, std::int64_t now,
                              std::int64_t max_skew_s,
                              const SignatureScheme& scheme) {
  if (req.nonce.size() < kMinNonceBytes)
    return VerifyResult::MalformedEnvelope;
  if (!scheme.verify(authority_public, token_signing_bytes(req.token),
                     req.token.signature))
    return VerifyResult::TokenInvalid;
  if (req.token.expires_at < now) return VerifyResult::TokenExpired;
  if (!scheme.verify(req.token.peer_public_key, request_signing_bytes(req),
                     req.signature))
    return VerifyResult::BadSignature;
  std::int64_t skew = req.sent_at > now ? req.sent_at - now : now - req.sent_at;
  if (skew > max_skew_s) return VerifyResult::ClockSkew;
  if (nonces.seen(req.nonce, now)) return VerifyResult::NonceReplayed;
  if (req.recipient_public_key != my_public)
    return VerifyResult::WrongRecipient;
  // Only a fully validated request may consume the nonce; the insert is the
  // atomic point that serializes concurrent duplicates.
  if (!nonces.try_insert(req.nonce, now)) return VerifyResult::NonceReplayed;
  return VerifyResult::Accepted;
}

VerifyResult validate_response(const ResponseEnvelope& resp,
                               const Bytes& expected_nonce,
                               const Bytes& expected_sender_public,
                               const Bytes& authority_public, std::int64_t now,
                               const SignatureScheme& scheme) {
  if (resp.nonce.size() < kMinNonceBytes) return VerifyResult::MalformedEnvelope;
  if (!scheme.verify(authority_public, token_signing_bytes(resp.token),
                     resp.token.signature))
    return VerifyResult::TokenInvalid;
  if (resp.token.expires_at < now) return VerifyResult::TokenExpired;
  if (!scheme.verify(resp.token.peer_public_key, response_signing_bytes(resp),
                     resp.signature))
    return VerifyResult::BadSignature;
  if (resp.nonce != expected_nonce) return VerifyResult::NonceMismatch;
  if (resp.token.peer_public_key != expected_sender_public)
    return VerifyResult::WrongSender;
  return VerifyResult::Accepted;
}

}  // namespace swarmplan::auth
