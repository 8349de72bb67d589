// Copyright 2026 The fairshare Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// The marketplace contract as a deterministic single-writer state machine.
//
// Mutating operations arrive as SignedCall envelopes whose payload is a
// compact JSON object. Every submitted call, accepted or rejected, is
// appended to a hash-chained audit trail; replaying that trail from its
// genesis entry reproduces the ledger state byte for byte.

#include <fairshare/common.hpp>
#include <fairshare/content_crypto.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fairshare::ledger {

using crypto::ConvergentKey;
using crypto::Digest;
using crypto::HashList;
using crypto::KeyMap;
using crypto::SignedCall;
using crypto::Uri;
using json = nlohmann::json;

namespace op {
inline constexpr std::string_view kGenesis = "Genesis";
inline constexpr std::string_view kAddContent = "AddContentByPub";
inline constexpr std::string_view kComplaint = "Complaint";
inline constexpr std::string_view kPayForContent = "PayForContent";
inline constexpr std::string_view kGetKeys = "GetKeys";
inline constexpr std::string_view kCensor = "Censor";
inline constexpr std::string_view kUncensor = "Uncensor";
inline constexpr std::string_view kDenyClient = "DenyClient";
inline constexpr std::string_view kAllowClient = "AllowClient";
}  // namespace op

enum class Role { publisher, facilitator, client, auditor };

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::publisher: return "publisher";
    case Role::facilitator: return "facilitator";
    case Role::client: return "client";
    case Role::auditor: return "auditor";
  }
  return "client";
}

inline std::optional<Role> role_from_string(std::string_view s) {
  for (Role r : {Role::publisher, Role::facilitator, Role::client, Role::auditor}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

struct PartyInfo {
  PartyId id;
  Role role = Role::client;
  crypto::PublicKey public_key;
  Amount balance;
};

/// Registered parties and their opening balances.
struct Genesis {
  std::vector<PartyInfo> parties;

  json to_json() const {
    json arr = json::array();
    for (const PartyInfo& p : parties) {
      arr.push_back({{"id", p.id},
                     {"role", to_string(p.role)},
                     {"public_key", p.public_key.hex()},
                     {"balance", p.balance.str()}});
    }
    return json{{"parties", arr}};
  }

  static Result<Genesis> from_json(const json& j) {
    try {
      if (!j.is_object() || j.size() != 1 || !j.contains("parties")) return Errc::malformed_record;
      Genesis g;
      std::set<PartyId> seen;
      for (const json& p : j.at("parties")) {
        if (!p.is_object()) return Errc::malformed_record;
        for (const auto& [key, _] : p.items()) {
          if (key != "id" && key != "role" && key != "public_key" && key != "balance") {
            return Errc::malformed_record;
          }
        }
        PartyInfo info;
        info.id = p.at("id").get<std::string>();
        auto role = role_from_string(p.at("role").get<std::string>());
        auto key = crypto::PublicKey::from_hex(p.at("public_key").get<std::string>());
        auto balance = Amount::parse(p.value("balance", std::string("0")));
        if (info.id.empty() || !role || !key || !balance || !seen.insert(info.id).second) {
          return Errc::malformed_record;
        }
        info.role = *role;
        info.public_key = *key;
        info.balance = *balance;
        g.parties.push_back(std::move(info));
      }
      return g;
    } catch (const json::exception&) {
      return Errc::malformed_record;
    }
  }
};

/// What a publisher submits; the ledger adds status and complaints.
struct ContentListing {
  Uri uri;
  std::string name;
  Amount price;
  Amount payout_per_facilitator;
  std::uint32_t k = 0;
  PartyId publisher_id;
  std::vector<PartyId> facilitator_ids;
  KeyMap key_map;
  HashList hash_list;

  std::uint32_t n() const { return static_cast<std::uint32_t>(facilitator_ids.size()); }

  json to_json() const {
    json keys = json::object();
    for (const auto& [id, key] : key_map) keys[id] = key.hex();
    json hashes = json::array();
    for (const Digest& h : hash_list) hashes.push_back(h.hex());
    return json{{"uri", uri.str()},
                {"name", name},
                {"price", price.str()},
                {"payout", payout_per_facilitator.str()},
                {"k", k},
                {"publisher", publisher_id},
                {"facilitators", facilitator_ids},
                {"key_map", keys},
                {"hash_list", hashes}};
  }

  static Result<ContentListing> from_json(const json& j) {
    try {
      if (!j.is_object() || j.size() != 9) return Errc::malformed_record;
      ContentListing l;
      auto uri = Uri::parse(j.at("uri").get<std::string>());
      auto price = Amount::parse(j.at("price").get<std::string>());
      auto payout = Amount::parse(j.at("payout").get<std::string>());
      if (!uri || !price || !payout) return Errc::malformed_record;
      l.uri = *uri;
      l.price = *price;
      l.payout_per_facilitator = *payout;
      l.name = j.at("name").get<std::string>();
      l.k = j.at("k").get<std::uint32_t>();
      l.publisher_id = j.at("publisher").get<std::string>();
      l.facilitator_ids = j.at("facilitators").get<std::vector<std::string>>();
      for (const auto& [id, hex] : j.at("key_map").items()) {
        auto key = ConvergentKey::from_hex(hex.get<std::string>());
        if (!key) return Errc::malformed_record;
        l.key_map.emplace(id, *key);
      }
      for (const json& h : j.at("hash_list")) {
        auto d = Digest::from_hex(h.get<std::string>());
        if (!d) return Errc::malformed_record;
        l.hash_list.push_back(*d);
      }
      return l;
    } catch (const json::exception&) {
      return Errc::malformed_record;
    }
  }
};

enum class ContentStatus { available, unavailable, censored };

inline std::string_view to_string(ContentStatus s) {
  switch (s) {
    case ContentStatus::available: return "Available";
    case ContentStatus::unavailable: return "Unavailable";
    case ContentStatus::censored: return "Censored";
  }
  return "Available";
}

struct ContentRecord {
  ContentListing listing;
  std::set<PartyId> complaints;
  bool censored = false;
  std::set<PartyId> denied_clients;

  /// Censorship dominates; otherwise more than n - k complaints make the
  /// content unavailable.
  ContentStatus status() const {
    if (censored) return ContentStatus::censored;
    if (complaints.size() > listing.n() - listing.k) return ContentStatus::unavailable;
    return ContentStatus::available;
  }
};

struct PaymentRecord {
  std::string req_id;
  Uri uri;
  PartyId payer_id;
  Amount amount;
  Amount payout_per_facilitator;
  Amount publisher_payout;
  std::uint64_t height = 0;
  std::string link;
};

struct AuditEntry {
  std::uint64_t height = 0;
  SignedCall call;
  Errc result = Errc::ok;
  Digest prev_hash;
  Digest entry_hash;

  friend bool operator==(const AuditEntry&, const AuditEntry&) = default;
};

inline json call_to_json(const SignedCall& call) {
  return json{{"caller", call.caller},
              {"op", call.operation},
              {"payload", call.payload},
              {"sig", to_hex(call.signature)}};
}

inline Digest compute_entry_hash(const Digest& prev, const SignedCall& call, Errc result) {
  const std::string body = call_to_json(call).dump();
  const std::string_view res = to_string(result);
  Bytes buf(prev.bytes.begin(), prev.bytes.end());
  buf.insert(buf.end(), body.begin(), body.end());
  buf.insert(buf.end(), res.begin(), res.end());
  return crypto::sha256(buf);
}

inline json to_json(const AuditEntry& e) {
  return json{{"height", e.height},
              {"call", call_to_json(e.call)},
              {"result", to_string(e.result)},
              {"prev_hash", e.prev_hash.hex()},
              {"entry_hash", e.entry_hash.hex()}};
}

/// Strict parse: the entry must carry exactly the canonical fields.
inline std::optional<AuditEntry> audit_entry_from_json(const json& j) {
  try {
    if (!j.is_object() || j.size() != 5) return std::nullopt;
    const json& c = j.at("call");
    if (!c.is_object() || c.size() != 4) return std::nullopt;
    AuditEntry e;
    e.height = j.at("height").get<std::uint64_t>();
    e.call.caller = c.at("caller").get<std::string>();
    e.call.operation = c.at("op").get<std::string>();
    e.call.payload = c.at("payload").get<std::string>();
    auto sig = from_hex(c.at("sig").get<std::string>());
    auto result = errc_from_string(j.at("result").get<std::string>());
    auto prev = Digest::from_hex(j.at("prev_hash").get<std::string>());
    auto hash = Digest::from_hex(j.at("entry_hash").get<std::string>());
    if (!sig || sig->size() != e.call.signature.size() || !result || !prev || !hash) {
      return std::nullopt;
    }
    std::copy(sig->begin(), sig->end(), e.call.signature.begin());
    e.result = *result;
    e.prev_hash = *prev;
    e.entry_hash = *hash;
    return e;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

/// Payload builders shared by every caller of the contract.
namespace payload {
inline std::string add_content(const ContentListing& listing) { return listing.to_json().dump(); }
inline std::string uri_only(const Uri& uri) { return json{{"uri", uri.str()}}.dump(); }
inline std::string payment(const Uri& uri, const std::string& req_id, const std::string& link = {}) {
  return json{{"uri", uri.str()}, {"req_id", req_id}, {"link", link}}.dump();
}
inline std::string keys_request(const Uri& uri, const std::string& req_id) {
  return json{{"uri", uri.str()}, {"req_id", req_id}}.dump();
}
inline std::string client_rule(const Uri& uri, const PartyId& client) {
  return json{{"uri", uri.str()}, {"client", client}}.dump();
}
}  // namespace payload

struct SearchQuery {
  std::optional<std::string> name_contains;
  std::optional<Uri> uri;
};

struct ListingSummary {
  Uri uri;
  std::string name;
  Amount price;
  ContentStatus status = ContentStatus::available;
};

/// Key material released to a paying client.
struct KeyRelease {
  KeyMap key_map;
  HashList hash_list;
  std::vector<PartyId> facilitator_ids;
  std::uint32_t k = 0;
};

/// What a facilitator may read at upload time: only its own key.
struct UploadKeys {
  ConvergentKey key;
  HashList hash_list;
};

/// Answer to a facilitator's pre-serve check.
struct ServiceCheck {
  bool paid = false;
  bool censored = false;
  bool permits_service() const { return paid && !censored; }
};

struct ReplayFailure {
  Errc code = Errc::broken_chain;
  std::uint64_t height = 0;
  std::string detail;
};

class Ledger {
 public:
  /// Builds a ledger whose audit trail starts with a genesis entry that
  /// records `genesis`.
  static Result<Ledger> from_genesis(const Genesis& genesis) {
    Ledger l;
    for (const PartyInfo& p : genesis.parties) {
      if (p.id.empty() || p.balance < Amount{} || !l.registry_.register_key(p.id, p.public_key)) {
        return Errc::malformed_record;
      }
      l.parties_.emplace(p.id, p);
      l.balances_[p.id] = p.balance;
    }
    SignedCall call{"", std::string(op::kGenesis), genesis.to_json().dump(), {}};
    l.append(call, Errc::ok);
    return l;
  }

  // -- mutating calls ------------------------------------------------------
  // The named entry points are aliases of submit(): dispatch always follows
  // call.operation so a replayed trail takes the same path.

  /// Applies `call` and records it in the audit trail whatever the outcome.
  Errc submit(const SignedCall& call) {
    const Errc result = apply(call);
    append(call, result);
    return result;
  }

  Errc add_content_by_pub(const SignedCall& call) { return submit(call); }
  Errc complaint(const SignedCall& call) { return submit(call); }
  Errc pay_for_content(const SignedCall& call) { return submit(call); }
  Errc censor(const SignedCall& call) { return submit(call); }
  Errc uncensor(const SignedCall& call) { return submit(call); }
  Errc deny_client(const SignedCall& call) { return submit(call); }
  Errc allow_client(const SignedCall& call) { return submit(call); }

  // -- reads ---------------------------------------------------------------

  std::vector<ListingSummary> search_content(const SearchQuery& query = {}) const {
    std::vector<ListingSummary> out;
    for (const auto& [uri, rec] : contents_) {
      if (query.uri && *query.uri != uri) continue;
      if (query.name_contains && rec.listing.name.find(*query.name_contains) == std::string::npos) {
        continue;
      }
      out.push_back({uri, rec.listing.name, rec.listing.price, rec.status()});
    }
    return out;
  }

  Result<Amount> get_price(const Uri& uri) const {
    const ContentRecord* rec = record(uri);
    if (rec == nullptr) return Errc::unknown_uri;
    if (Errc e = purchasable(*rec); e != Errc::ok) return e;
    return rec->listing.price;
  }

  bool is_payment_done(const Uri& uri, const std::string& req_id) const {
    auto it = payments_.find(req_id);
    return it != payments_.end() && it->second.uri == uri;
  }

  ServiceCheck check_service(const Uri& uri, const std::string& req_id) const {
    const ContentRecord* rec = record(uri);
    return {is_payment_done(uri, req_id), rec != nullptr && rec->censored};
  }

  /// Key release, gated on the caller having paid under `req_id`. Reads do
  /// not enter the audit trail.
  Result<KeyRelease> get_keys(const SignedCall& call) const {
    if (call.operation != op::kGetKeys) return Errc::unknown_operation;
    if (Errc e = registry_.verify_call(call); e != Errc::ok) {
      return e == Errc::unknown_caller ? e : Errc::bad_signature;
    }
    std::string uri_text;
    std::string req_id;
    try {
      const json j = json::parse(call.payload);
      uri_text = j.at("uri").get<std::string>();
      req_id = j.at("req_id").get<std::string>();
    } catch (const json::exception&) {
      return Errc::malformed_record;
    }
    auto uri = Uri::parse(uri_text);
    if (!uri) return Errc::malformed_record;
    auto it = payments_.find(req_id);
    if (it == payments_.end() || it->second.uri != *uri) return Errc::payment_not_found;
    if (it->second.payer_id != call.caller) return Errc::not_payer;
    const ContentListing& l = contents_.at(*uri).listing;
    return KeyRelease{l.key_map, l.hash_list, l.facilitator_ids, l.k};
  }

  Result<UploadKeys> get_upload_keys(const Uri& uri, const PartyId& facilitator) const {
    const ContentRecord* rec = record(uri);
    if (rec == nullptr) return Errc::unknown_uri;
    auto it = rec->listing.key_map.find(facilitator);
    if (it == rec->listing.key_map.end()) return Errc::not_a_facilitator;
    return UploadKeys{it->second, rec->listing.hash_list};
  }

  const ContentRecord* record(const Uri& uri) const {
    auto it = contents_.find(uri);
    return it == contents_.end() ? nullptr : &it->second;
  }

  const PaymentRecord* payment(const std::string& req_id) const {
    auto it = payments_.find(req_id);
    return it == payments_.end() ? nullptr : &it->second;
  }

  const std::map<std::string, PaymentRecord>& payments() const { return payments_; }

  Amount balance(const PartyId& id) const {
    auto it = balances_.find(id);
    return it == balances_.end() ? Amount{} : it->second;
  }

  Amount total_balance() const {
    Amount sum;
    for (const auto& [_, b] : balances_) sum += b;
    return sum;
  }

  const std::map<PartyId, Amount>& balances() const { return balances_; }

  std::optional<Role> role_of(const PartyId& id) const {
    auto it = parties_.find(id);
    if (it == parties_.end()) return std::nullopt;
    return it->second.role;
  }

  const crypto::KeyRegistry& registry() const { return registry_; }

  const std::vector<AuditEntry>& audit_trail() const { return trail_; }

  /// Entries with height in [from, to).
  std::vector<AuditEntry> audit_range(std::uint64_t from, std::uint64_t to) const {
    to = std::min<std::uint64_t>(to, trail_.size());
    if (from >= to) return {};
    return {trail_.begin() + static_cast<std::ptrdiff_t>(from),
            trail_.begin() + static_cast<std::ptrdiff_t>(to)};
  }

  /// Height of the newest entry; 0 for a genesis-only ledger.
  std::uint64_t height() const { return trail_.size() - 1; }
  const Digest& head_hash() const { return trail_.back().entry_hash; }

  /// Canonical, byte-stable rendering of the full state (sorted keys).
  std::string snapshot() const {
    json parties = json::object();
    for (const auto& [id, p] : parties_) {
      parties[id] = {{"role", to_string(p.role)}, {"public_key", p.public_key.hex()}};
    }
    json accounts = json::object();
    for (const auto& [id, b] : balances_) accounts[id] = b.str();
    json contents = json::object();
    for (const auto& [uri, rec] : contents_) {
      json c = rec.listing.to_json();
      c["complaints"] = rec.complaints;
      c["censored"] = rec.censored;
      c["denied_clients"] = rec.denied_clients;
      c["status"] = to_string(rec.status());
      contents[uri.str()] = std::move(c);
    }
    json payments = json::object();
    for (const auto& [req_id, p] : payments_) {
      payments[req_id] = {{"uri", p.uri.str()},
                          {"payer", p.payer_id},
                          {"amount", p.amount.str()},
                          {"payout_per_facilitator", p.payout_per_facilitator.str()},
                          {"publisher_payout", p.publisher_payout.str()},
                          {"height", p.height},
                          {"link", p.link}};
    }
    return json{{"parties", parties},
                {"accounts", accounts},
                {"contents", contents},
                {"payments", payments},
                {"height", height()},
                {"head_hash", head_hash().hex()}}
        .dump();
  }

  Digest state_digest() const { return crypto::sha256(snapshot()); }

  /// Hash-chain check only: heights, links and entry hashes.
  static std::optional<ReplayFailure> verify_chain(std::span<const AuditEntry> entries) {
    Digest expected_prev{};
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const AuditEntry& e = entries[i];
      if (e.height != i) return ReplayFailure{Errc::broken_chain, i, "height out of sequence"};
      if (e.prev_hash != expected_prev) {
        return ReplayFailure{Errc::broken_chain, i, "prev_hash does not link"};
      }
      if (compute_entry_hash(e.prev_hash, e.call, e.result) != e.entry_hash) {
        return ReplayFailure{Errc::broken_chain, i, "entry_hash mismatch"};
      }
      expected_prev = e.entry_hash;
    }
    return std::nullopt;
  }

  /// Rebuilds a ledger from its trail, checking the chain, every signature
  /// behind an accepted call, and that each call re-executes to its recorded
  /// result.
  static Result<Ledger, ReplayFailure> replay(std::span<const AuditEntry> entries) {
    if (entries.empty()) return ReplayFailure{Errc::broken_chain, 0, "empty trail"};
    if (auto broken = verify_chain(entries)) return *broken;
    const AuditEntry& first = entries.front();
    if (first.call.operation != op::kGenesis || first.result != Errc::ok) {
      return ReplayFailure{Errc::broken_chain, 0, "trail does not start with genesis"};
    }
    Result<Genesis> genesis = Errc::malformed_record;
    try {
      genesis = Genesis::from_json(json::parse(first.call.payload));
    } catch (const json::exception&) {
    }
    if (!genesis) return ReplayFailure{Errc::state_mismatch, 0, "unreadable genesis"};
    auto rebuilt = from_genesis(*genesis);
    if (!rebuilt || rebuilt->trail_.front() != first) {
      return ReplayFailure{Errc::state_mismatch, 0, "genesis does not reproduce"};
    }
    Ledger ledger = std::move(rebuilt).value();
    for (std::size_t i = 1; i < entries.size(); ++i) {
      const AuditEntry& e = entries[i];
      const bool rejected_at_door =
          e.result == Errc::bad_signature || e.result == Errc::unknown_caller;
      if (!rejected_at_door && ledger.registry_.verify_call(e.call) != Errc::ok) {
        return ReplayFailure{Errc::invalid_signature, i, "signature does not verify"};
      }
      const Errc got = ledger.submit(e.call);
      if (got != e.result || ledger.trail_.back() != e) {
        return ReplayFailure{Errc::state_mismatch, i,
                             "recorded " + std::string(fairshare::to_string(e.result)) +
                                 ", replay gave " + std::string(fairshare::to_string(got))};
      }
    }
    return ledger;
  }

 private:
  Ledger() = default;


  void append(const SignedCall& call, Errc result) {
    AuditEntry e;
    e.height = trail_.size();
    e.call = call;
    e.result = result;
    e.prev_hash = trail_.empty() ? Digest{} : trail_.back().entry_hash;
    e.entry_hash = compute_entry_hash(e.prev_hash, e.call, e.result);
    trail_.push_back(std::move(e));
  }

  static Errc purchasable(const ContentRecord& rec) {
    switch (rec.status()) {
      case ContentStatus::censored: return Errc::content_censored;
      case ContentStatus::unavailable: return Errc::content_unavailable;
      case ContentStatus::available: return Errc::ok;
    }
    return Errc::ok;
  }

  Errc apply(const SignedCall& call) {
    if (call.operation == op::kGenesis) return Errc::unknown_operation;
    if (Errc e = registry_.verify_call(call); e != Errc::ok) {
      return e == Errc::unknown_caller ? e : Errc::bad_signature;
    }
    json args;
    try {
      args = json::parse(call.payload);
    } catch (const json::exception&) {
      return Errc::malformed_record;
    }
    try {
      if (call.operation == op::kAddContent) return apply_add_content(call.caller, args);
      if (call.operation == op::kPayForContent) return apply_payment(call.caller, args);
      if (call.operation == op::kComplaint || call.operation == op::kCensor ||
          call.operation == op::kUncensor) {
        auto uri = Uri::parse(args.at("uri").get<std::string>());
        if (!uri) return Errc::malformed_record;
        if (call.operation == op::kComplaint) return apply_complaint(call.caller, *uri);
        return apply_censorship(call.caller, *uri, call.operation == op::kCensor);
      }
      if (call.operation == op::kDenyClient || call.operation == op::kAllowClient) {
        auto uri = Uri::parse(args.at("uri").get<std::string>());
        if (!uri) return Errc::malformed_record;
        return apply_client_rule(call.caller, *uri, args.at("client").get<std::string>(),
                                 call.operation == op::kDenyClient);
      }
    } catch (const json::exception&) {
      return Errc::malformed_record;
    }
    return Errc::unknown_operation;
  }

  Errc apply_add_content(const PartyId& caller, const json& args) {
    auto parsed = ContentListing::from_json(args);
    if (!parsed) return parsed.error();
    ContentListing& l = *parsed;
    const std::size_t n = l.facilitator_ids.size();
    if (l.publisher_id != caller || n == 0 || n > codec::kMaxShards || l.k < 1 || l.k > n ||
        l.key_map.size() != n || l.hash_list.size() != n) {
      return Errc::malformed_record;
    }
    std::set<PartyId> distinct(l.facilitator_ids.begin(), l.facilitator_ids.end());
    if (distinct.size() != n) return Errc::malformed_record;
    for (const PartyId& id : l.facilitator_ids) {
      if (!parties_.contains(id) || !l.key_map.contains(id)) return Errc::malformed_record;
    }
    if (l.payout_per_facilitator * static_cast<std::int64_t>(n) > l.price) {
      return Errc::malformed_record;
    }
    if (contents_.contains(l.uri)) return Errc::duplicate_uri;
    ContentRecord rec;
    rec.listing = std::move(l);
    const Uri uri = rec.listing.uri;
    contents_.emplace(uri, std::move(rec));
    return Errc::ok;
  }

  Errc apply_complaint(const PartyId& caller, const Uri& uri) {
    auto it = contents_.find(uri);
    if (it == contents_.end()) return Errc::unknown_uri;
    const auto& ids = it->second.listing.facilitator_ids;
    if (std::find(ids.begin(), ids.end(), caller) == ids.end()) return Errc::not_a_facilitator;
    it->second.complaints.insert(caller);
    return Errc::ok;
  }

  Errc apply_censorship(const PartyId& caller, const Uri& uri, bool censor) {
    if (role_of(caller) != Role::auditor) return Errc::not_auditor;
    auto it = contents_.find(uri);
    if (it == contents_.end()) return Errc::unknown_uri;
    it->second.censored = censor;
    return Errc::ok;
  }

  Errc apply_client_rule(const PartyId& caller, const Uri& uri, const PartyId& client, bool deny) {
    if (role_of(caller) != Role::auditor) return Errc::not_auditor;
    auto it = contents_.find(uri);
    if (it == contents_.end()) return Errc::unknown_uri;
    if (deny) {
      it->second.denied_clients.insert(client);
    } else {
      it->second.denied_clients.erase(client);
    }
    return Errc::ok;
  }

  Errc apply_payment(const PartyId& payer, const json& args) {
    auto uri = Uri::parse(args.at("uri").get<std::string>());
    const std::string req_id = args.at("req_id").get<std::string>();
    const std::string link = args.value("link", std::string());
    if (!uri || req_id.empty() || req_id.size() > 128) return Errc::malformed_record;
    auto it = contents_.find(*uri);
    if (it == contents_.end()) return Errc::unknown_uri;
    const ContentRecord& rec = it->second;
    if (Errc e = purchasable(rec); e != Errc::ok) return e;
    if (rec.denied_clients.contains(payer)) return Errc::client_denied;
    if (payments_.contains(req_id)) return Errc::duplicate_req_id;
    const ContentListing& l = rec.listing;
    if (balance(payer) < l.price) return Errc::insufficient_funds;

    const Amount facilitators_share = l.payout_per_facilitator * l.n();
    const Amount publisher_share = l.price - facilitators_share;
    balances_[payer] -= l.price;
    for (const PartyId& f : l.facilitator_ids) balances_[f] += l.payout_per_facilitator;
    balances_[l.publisher_id] += publisher_share;
    payments_.emplace(req_id, PaymentRecord{req_id, *uri, payer, l.price, l.payout_per_facilitator,
                                            publisher_share, trail_.size(), link});
    return Errc::ok;
  }

  crypto::KeyRegistry registry_;
  std::map<PartyId, PartyInfo> parties_;
  std::map<PartyId, Amount> balances_;
  std::map<Uri, ContentRecord> contents_;
  std::map<std::string, PaymentRecord> payments_;
  std::vector<AuditEntry> trail_;
};

// ---------------------------------------------------------------------------
// Ledger log file: one audit entry per line in canonical JSON, then a footer
// line {"final_state_digest": ..., "height": ...}.

inline std::string write_log(const Ledger& ledger) {
  std::string out;
  for (const AuditEntry& e : ledger.audit_trail()) {
    out += to_json(e).dump();
    out += '\n';
  }
  out += json{{"final_state_digest", ledger.state_digest().hex()}, {"height", ledger.height()}}.dump();
  out += '\n';
  return out;
}

struct LogReport {
  Errc code = Errc::ok;
  std::uint64_t height = 0;
  std::string detail;
  bool ok() const { return code == Errc::ok; }
};

/// Verifies a ledger log: each line must parse and re-serialize to itself,
/// the chain must link, signatures must verify, replay must reproduce every
/// recorded result, and the final state must match the footer digest. A
/// missing or unreadable footer means the log was truncated.
inline LogReport verify_log(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(pos));
      break;
    }
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  const bool terminated = !text.empty() && text.back() == '\n';
  std::optional<Digest> footer_digest;
  std::optional<std::uint64_t> footer_height;
  if (terminated && !lines.empty()) {
    try {
      const json f = json::parse(lines.back());
      if (f.is_object() && f.size() == 2 && f.dump() == lines.back()) {
        footer_digest = Digest::from_hex(f.at("final_state_digest").get<std::string>());
        footer_height = f.at("height").get<std::uint64_t>();
      }
    } catch (const json::exception&) {
    }
  }
  if (!footer_digest || !footer_height) {
    return {Errc::state_mismatch, lines.empty() ? 0 : lines.size() - 1,
            "log truncated: footer missing or unreadable"};
  }
  lines.pop_back();

  std::vector<AuditEntry> entries;
  entries.reserve(lines.size());
  Digest expected_prev{};
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::optional<AuditEntry> e;
    try {
      e = audit_entry_from_json(json::parse(lines[i]));
    } catch (const json::exception&) {
    }
    if (!e || to_json(*e).dump() != lines[i]) {
      return {Errc::broken_chain, i, "entry is not canonical"};
    }
    entries.push_back(std::move(*e));
    const AuditEntry& cur = entries.back();
    if (cur.height != i || cur.prev_hash != expected_prev ||
        compute_entry_hash(cur.prev_hash, cur.call, cur.result) != cur.entry_hash) {
      return {Errc::broken_chain, i, "hash chain broken"};
    }
    expected_prev = cur.entry_hash;
  }
  auto replayed = Ledger::replay(entries);
  if (!replayed) {
    const ReplayFailure& f = replayed.error();
    return {f.code, f.height, f.detail};
  }
  if (replayed->height() != *footer_height || replayed->state_digest() != *footer_digest) {
    return {Errc::state_mismatch, replayed->height(), "final state digest does not match"};
  }
  return {Errc::ok, replayed->height(), {}};
}

inline Result<std::vector<AuditEntry>> read_log_entries(std::string_view text) {
  std::vector<AuditEntry> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    try {
      const json j = json::parse(line);
      if (j.contains("final_state_digest")) break;
      auto e = audit_entry_from_json(j);
      if (!e) return Errc::broken_chain;
      entries.push_back(std::move(*e));
    } catch (const json::exception&) {
      return Errc::broken_chain;
    }
  }
  return entries;
}

}  // namespace fairshare::ledger
