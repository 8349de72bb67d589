// Copyright 2026 The fairshare Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <sodium.h>

#include <array>
#include <charconv>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace fairshare {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;
using PartyId = std::string;

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline void ensure_sodium() {
  static const bool ready = [] {
    if (sodium_init() < 0) {
      throw std::runtime_error("libsodium initialisation failed");
    }
    return true;
  }();
  (void)ready;
}

inline std::string to_hex(ByteView bytes) {
  std::string out(bytes.size() * 2 + 1, '\0');
  sodium_bin2hex(out.data(), out.size(), bytes.data(), bytes.size());
  out.pop_back();
  return out;
}

/// Decodes lowercase or uppercase hex. Returns nullopt on odd length or
/// any non-hex character.
inline std::optional<Bytes> from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) {
    return std::nullopt;
  }
  Bytes out(hex.size() / 2);
  std::size_t written = 0;
  const char* end = nullptr;
  if (sodium_hex2bin(out.data(), out.size(), hex.data(), hex.size(), nullptr,
                     &written, &end) != 0 ||
      written != out.size() || end != hex.data() + hex.size()) {
    return std::nullopt;
  }
  return out;
}

/// Every failure the protocol can report. Names are stable: they appear in
/// audit trails and CLI output.
enum class Errc : std::uint8_t {
  ok = 0,
  invalid_params,
  empty_file,
  insufficient_chunks,
  inconsistent_chunks,
  decode_failure,
  malformed_chunk,
  decryption_failure,
  unknown_caller,
  bad_signature,
  invalid_signature,
  duplicate_uri,
  malformed_record,
  unknown_uri,
  not_a_facilitator,
  content_censored,
  content_unavailable,
  client_denied,
  insufficient_funds,
  duplicate_req_id,
  payment_not_found,
  not_payer,
  not_auditor,
  unknown_operation,
  broken_chain,
  state_mismatch,
  not_stored,
  payment_not_verified,
  delivery_failed,
  upload_incomplete,
  uri_mismatch,
  config_invalid,
};

inline constexpr std::array kErrcNames = {
    "Ok",
    "InvalidParams",
    "EmptyFile",
    "InsufficientChunks",
    "InconsistentChunks",
    "DecodeFailure",
    "MalformedChunk",
    "DecryptionFailure",
    "UnknownCaller",
    "BadSignature",
    "InvalidSignature",
    "DuplicateUri",
    "MalformedRecord",
    "UnknownUri",
    "NotAFacilitatorForContent",
    "ContentCensored",
    "ContentUnavailable",
    "ClientDenied",
    "InsufficientFunds",
    "DuplicateReqId",
    "PaymentNotFound",
    "NotPayer",
    "NotAuditor",
    "UnknownOperation",
    "BrokenChain",
    "StateMismatch",
    "NotStored",
    "PaymentNotVerified",
    "DeliveryFailed",
    "UploadIncomplete",
    "UriMismatch",
    "ConfigInvalid",
};
static_assert(kErrcNames.size() ==
              static_cast<std::size_t>(Errc::config_invalid) + 1);

inline std::string_view to_string(Errc e) {
  return kErrcNames.at(static_cast<std::size_t>(e));
}

inline std::optional<Errc> errc_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kErrcNames.size(); ++i) {
    if (name == kErrcNames[i]) {
      return static_cast<Errc>(i);
    }
  }
  return std::nullopt;
}

inline std::ostream& operator<<(std::ostream& os, Errc e) { return os << to_string(e); }

class Error : public std::runtime_error {
 public:
  explicit Error(Errc code, const std::string& detail = {})
      : std::runtime_error(detail.empty()
                               ? std::string(to_string(code))
                               : std::string(to_string(code)) + ": " + detail),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Value-or-error return used across the protocol surface. Accessing the
/// value of a failed result throws `Error`.
template <typename T, typename E = Errc>
class Result {
 public:
  Result(T value) : state_(std::in_place_index<0>, std::move(value)) {}
  Result(E error) : state_(std::in_place_index<1>, std::move(error)) {}

  bool ok() const noexcept { return state_.index() == 0; }
  explicit operator bool() const noexcept { return ok(); }

  const T& value() const& {
    check();
    return std::get<0>(state_);
  }
  T& value() & {
    check();
    return std::get<0>(state_);
  }
  T&& value() && {
    check();
    return std::get<0>(std::move(state_));
  }
  const T& operator*() const& { return value(); }
  T& operator*() & { return value(); }
  const T* operator->() const { return &value(); }
  T* operator->() { return &value(); }

  const E& error() const {
    if (ok()) {
      throw std::logic_error("Result holds a value, not an error");
    }
    return std::get<1>(state_);
  }

 private:
  void check() const {
    if (!ok()) {
      if constexpr (std::is_same_v<E, Errc>) {
        throw Error(std::get<1>(state_));
      } else {
        throw std::runtime_error("Result holds an error");
      }
    }
  }

  std::variant<T, E> state_;
};

/// Fixed-point currency with six fractional digits. Balances never touch
/// floating point so conservation checks are exact.
class Amount {
 public:
  static constexpr std::int64_t kScale = 1'000'000;

  constexpr Amount() = default;
  static constexpr Amount from_micros(std::int64_t micros) {
    Amount a;
    a.micros_ = micros;
    return a;
  }
  static constexpr Amount units(std::int64_t whole) {
    return from_micros(whole * kScale);
  }
  /// Rounds toward zero to whole micro-units.
  static Amount from_double(double value) {
    return from_micros(static_cast<std::int64_t>(value * kScale));
  }

  /// Parses "12", "0.5", "3.141592". Rejects signs, exponents and more than
  /// six fractional digits.
  static std::optional<Amount> parse(std::string_view text) {
    if (text.empty()) {
      return std::nullopt;
    }
    auto dot = text.find('.');
    std::string_view whole = text.substr(0, dot);
    std::string_view frac =
        dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
    if (whole.empty() || frac.size() > 6 ||
        (dot != std::string_view::npos && frac.empty())) {
      return std::nullopt;
    }
    auto digits = [](std::string_view s) {
      for (char c : s) {
        if (c < '0' || c > '9') return false;
      }
      return true;
    };
    if (!digits(whole) || !digits(frac) || whole.size() > 12) {
      return std::nullopt;
    }
    std::int64_t w = 0;
    std::from_chars(whole.data(), whole.data() + whole.size(), w);
    std::int64_t f = 0;
    if (!frac.empty()) {
      std::from_chars(frac.data(), frac.data() + frac.size(), f);
      for (std::size_t i = frac.size(); i < 6; ++i) f *= 10;
    }
    return from_micros(w * kScale + f);
  }

  constexpr std::int64_t micros() const { return micros_; }
  double to_double() const { return static_cast<double>(micros_) / kScale; }

  std::string str() const {
    std::int64_t v = micros_;
    std::string sign;
    if (v < 0) {
      sign = "-";
      v = -v;
    }
    std::string frac = std::to_string(v % kScale);
    frac.insert(0, 6 - frac.size(), '0');
    return sign + std::to_string(v / kScale) + "." + frac;
  }

  constexpr Amount operator+(Amount o) const { return from_micros(micros_ + o.micros_); }
  constexpr Amount operator-(Amount o) const { return from_micros(micros_ - o.micros_); }
  constexpr Amount operator*(std::int64_t n) const { return from_micros(micros_ * n); }
  constexpr Amount& operator+=(Amount o) {
    micros_ += o.micros_;
    return *this;
  }
  constexpr Amount& operator-=(Amount o) {
    micros_ -= o.micros_;
    return *this;
  }
  constexpr auto operator<=>(const Amount&) const = default;

 private:
  std::int64_t micros_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, Amount a) { return os << a.str(); }

}  // namespace fairshare
