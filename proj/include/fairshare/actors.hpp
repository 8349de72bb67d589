// Copyright 2026 The fairshare Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Publisher, facilitator and client state machines. Actors never touch each
// other or the ledger directly: outgoing messages go through a Transport and
// ledger interaction is expressed as SignedCalls or reads that the embedding
// (LocalNetwork below, or the simulator) performs and feeds back.

#include <fairshare/chunk_codec.hpp>
#include <fairshare/common.hpp>
#include <fairshare/content_crypto.hpp>
#include <fairshare/ledger.hpp>

#include <algorithm>
#include <deque>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace fairshare::actors {

using crypto::EncryptedChunk;
using crypto::SecretKey;
using crypto::SignedCall;
using crypto::Uri;
using ChunkPtr = std::shared_ptr<const EncryptedChunk>;

enum class Behavior { honest, crash, refuse, garbage };

inline std::string_view to_string(Behavior b) {
  switch (b) {
    case Behavior::honest: return "Honest";
    case Behavior::crash: return "Crash";
    case Behavior::refuse: return "Refuse";
    case Behavior::garbage: return "Garbage";
  }
  return "Honest";
}

inline std::optional<Behavior> behavior_from_string(std::string_view s) {
  for (Behavior b : {Behavior::honest, Behavior::crash, Behavior::refuse, Behavior::garbage}) {
    if (to_string(b) == s) return b;
  }
  return std::nullopt;
}

enum class FetchStrategy { lazy, aggressive };

inline std::string_view to_string(FetchStrategy s) {
  return s == FetchStrategy::lazy ? "Lazy" : "Aggressive";
}

inline std::optional<FetchStrategy> strategy_from_string(std::string_view s) {
  if (s == "Lazy") return FetchStrategy::lazy;
  if (s == "Aggressive") return FetchStrategy::aggressive;
  return std::nullopt;
}

// -- messages ---------------------------------------------------------------

struct ChunkUpload {
  Uri uri;
  ChunkPtr chunk;
};

struct ChunkRequest {
  Uri uri;
  std::string req_id;
};

struct ChunkResponse {
  Uri uri;
  std::string req_id;
  ChunkPtr chunk;
};

struct Denial {
  Uri uri;
  std::string req_id;
  Errc reason = Errc::delivery_failed;
};

using Message = std::variant<ChunkUpload, ChunkRequest, ChunkResponse, Denial>;

/// Size charged for messages that carry no chunk.
inline constexpr std::uint64_t kControlMessageBytes = 256;

inline std::string_view message_name(const Message& m) {
  static constexpr std::string_view names[] = {"ChunkUpload", "ChunkRequest", "ChunkResponse",
                                               "Denial"};
  return names[m.index()];
}

inline const ChunkPtr* message_chunk(const Message& m) {
  if (auto* u = std::get_if<ChunkUpload>(&m)) return &u->chunk;
  if (auto* r = std::get_if<ChunkResponse>(&m)) return &r->chunk;
  return nullptr;
}

inline std::uint64_t wire_size(const Message& m) {
  const ChunkPtr* c = message_chunk(m);
  return c != nullptr && *c ? (*c)->wire_size() : kControlMessageBytes;
}

struct Envelope {
  PartyId from;
  PartyId to;
  Message message;
};

class Transport {
 public:
  virtual ~Transport() = default;
  /// Returns false when the destination cannot be reached right now.
  virtual bool send(Envelope envelope) = 0;
};

/// 16 random bytes rendered as hex.
inline std::string make_req_id(std::mt19937_64& rng) {
  Bytes raw(16);
  for (auto& b : raw) b = static_cast<std::uint8_t>(rng());
  return to_hex(raw);
}

/// Fisher-Yates with plain modulo draws so orders do not depend on the
/// standard library's distribution implementations.
template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

// -- publisher --------------------------------------------------------------

struct PublisherSession {
  std::string name;
  Bytes file;
  codec::CodingParams params;
  Amount price;
  Amount payout_per_facilitator;
  std::vector<PartyId> facilitator_ids;
};

/// Everything produced locally before any message leaves the publisher.
/// uploads[i] is destined for listing.facilitator_ids[i].
struct UploadPlan {
  ledger::ContentListing listing;
  std::vector<ChunkUpload> uploads;
};

inline constexpr int kUploadAttempts = 3;

class Publisher {
 public:
  Publisher(PartyId id, SecretKey key) : id_(std::move(id)), key_(key) {}

  const PartyId& id() const { return id_; }

  /// URI, erasure coding, convergent encryption and the hash list.
  Result<UploadPlan> prepare(const PublisherSession& s) const {
    const auto& ids = s.facilitator_ids;
    if (!s.params.valid() || ids.size() != s.params.n ||
        std::set<PartyId>(ids.begin(), ids.end()).size() != ids.size() ||
        s.payout_per_facilitator * static_cast<std::int64_t>(ids.size()) > s.price) {
      return Errc::invalid_params;
    }
    auto uri = crypto::generate_uri(s.file);
    if (!uri) return uri.error();
    auto chunks = codec::erasure_code(s.file, s.params);
    if (!chunks) return chunks.error();

    UploadPlan plan;
    ledger::ContentListing& l = plan.listing;
    l.uri = *uri;
    l.name = s.name;
    l.price = s.price;
    l.payout_per_facilitator = s.payout_per_facilitator;
    l.k = s.params.k;
    l.publisher_id = id_;
    l.facilitator_ids = ids;
    for (std::size_t i = 0; i < chunks->size(); ++i) {
      crypto::SealedChunk sealed = crypto::convergent_encrypt((*chunks)[i]);
      l.key_map.emplace(ids[i], sealed.key);
      l.hash_list.push_back(sealed.chunk.hash());
      plan.uploads.push_back(
          {*uri, std::make_shared<const EncryptedChunk>(std::move(sealed.chunk))});
    }
    return plan;
  }

  /// Sends every chunk to its facilitator, retrying unreachable ones.
  Errc deliver(const UploadPlan& plan, Transport& transport) const {
    for (std::size_t i = 0; i < plan.uploads.size(); ++i) {
      bool sent = false;
      for (int attempt = 0; attempt < kUploadAttempts && !sent; ++attempt) {
        sent = transport.send({id_, plan.listing.facilitator_ids[i], plan.uploads[i]});
      }
      if (!sent) return Errc::upload_incomplete;
    }
    return Errc::ok;
  }

  SignedCall listing_call(const UploadPlan& plan) const {
    return crypto::sign_call(id_, std::string(ledger::op::kAddContent),
                             ledger::payload::add_content(plan.listing), key_);
  }

 private:
  PartyId id_;
  SecretKey key_;
};

/// Ways a dishonest publisher can spoil the chunk sent to one facilitator.
enum class Corruption {
  /// Ciphertext altered after the hash list was built.
  flip_ciphertext,
  /// Chunk sealed under a random key; the listing carries that key and hash,
  /// so the chunk decrypts but the key is not the plaintext hash.
  foreign_key,
};

inline void corrupt_upload(UploadPlan& plan, std::size_t index, Corruption how,
                           std::mt19937_64& rng) {
  ChunkUpload& up = plan.uploads.at(index);
  ledger::ContentListing& l = plan.listing;
  if (how == Corruption::flip_ciphertext) {
    EncryptedChunk bad = *up.chunk;
    bad.ciphertext[rng() % bad.ciphertext.size()] ^= static_cast<std::uint8_t>(1 + rng() % 255);
    up.chunk = std::make_shared<const EncryptedChunk>(std::move(bad));
    return;
  }
  crypto::ConvergentKey random_key;
  for (auto& b : random_key.bytes) b = static_cast<std::uint8_t>(rng());
  const auto& right_key = l.key_map.at(l.facilitator_ids[index]);
  auto plain = crypto::open(*up.chunk, right_key).value();
  EncryptedChunk bad = crypto::seal(plain, random_key);
  l.hash_list[index] = bad.hash();
  l.key_map[l.facilitator_ids[index]] = random_key;
  up.chunk = std::make_shared<const EncryptedChunk>(std::move(bad));
}

// -- facilitator ------------------------------------------------------------

enum class UploadDecision { stored, complain, pending, dropped, ignored };

inline std::string_view to_string(UploadDecision d) {
  switch (d) {
    case UploadDecision::stored: return "stored";
    case UploadDecision::complain: return "complain";
    case UploadDecision::pending: return "pending";
    case UploadDecision::dropped: return "dropped";
    case UploadDecision::ignored: return "ignored";
  }
  return "ignored";
}

/// Attempts at verifying a queued chunk while its listing is absent.
inline constexpr int kVerifyAttempts = 3;

/// One chunk-bearing response leaving a facilitator. `genuine` is false for
/// garbage.
struct ServeRecord {
  Uri uri;
  std::string req_id;
  PartyId client;
  bool genuine = true;
};

class Facilitator {
 public:
  Facilitator(PartyId id, SecretKey key, Behavior behavior = Behavior::honest,
              std::uint64_t seed = 0, double failure_rate = 0.0)
      : id_(std::move(id)), key_(key), behavior_(behavior), failure_rate_(failure_rate),
        rng_(seed) {}

  const PartyId& id() const { return id_; }
  Behavior behavior() const { return behavior_; }
  void set_behavior(Behavior b) { behavior_ = b; }
  /// Baseline mode: serve without consulting the ledger.
  void set_payment_check(bool on) { payment_check_ = on; }

  void receive_upload(const ChunkUpload& up) {
    if (!up.chunk || stored_.contains(up.uri)) return;
    pending_[up.uri] = Pending{up.chunk, 0};
  }

  bool has_pending(const Uri& uri) const { return pending_.contains(uri); }
  bool stores(const Uri& uri) const { return stored_.contains(uri); }
  ChunkPtr stored_chunk(const Uri& uri) const {
    auto it = stored_.find(uri);
    return it == stored_.end() ? nullptr : it->second;
  }

  /// One verification attempt against what the ledger returned for this
  /// facilitator's entry. A missing listing keeps the chunk queued until the
  /// attempt budget runs out.
  UploadDecision verify_pending(const Uri& uri, const Result<ledger::UploadKeys>& keys) {
    auto it = pending_.find(uri);
    if (it == pending_.end()) return UploadDecision::ignored;
    if (!keys) {
      if (keys.error() == Errc::unknown_uri && ++it->second.attempts < kVerifyAttempts) {
        return UploadDecision::pending;
      }
      pending_.erase(it);
      return UploadDecision::dropped;
    }
    const ChunkPtr chunk = it->second.chunk;
    pending_.erase(it);
    if (!crypto::verify_chunk_integrity(*chunk, keys->key, keys->hash_list)) {
      return UploadDecision::complain;
    }
    stored_[uri] = chunk;
    return UploadDecision::stored;
  }

  /// Baseline mode: keep the chunk without any ledger check.
  UploadDecision accept_unverified(const Uri& uri) {
    auto it = pending_.find(uri);
    if (it == pending_.end()) return UploadDecision::ignored;
    stored_[uri] = it->second.chunk;
    pending_.erase(it);
    return UploadDecision::stored;
  }

  /// Gives up on a queued chunk whose listing never appeared.
  UploadDecision expire_pending(const Uri& uri) {
    return pending_.erase(uri) ? UploadDecision::dropped : UploadDecision::ignored;
  }

  SignedCall complaint_call(const Uri& uri) const {
    return crypto::sign_call(id_, std::string(ledger::op::kComplaint),
                             ledger::payload::uri_only(uri), key_);
  }

  /// Handles a chunk request. Returns true when the embedding must consult
  /// the ledger and report back through on_payment_checked.
  bool on_request(const PartyId& from, const ChunkRequest& req, Transport& transport) {
    switch (behavior_) {
      case Behavior::crash: return false;
      case Behavior::refuse:
        transport.send({id_, from, Denial{req.uri, req.req_id, Errc::delivery_failed}});
        return false;
      case Behavior::garbage: {
        const ChunkPtr real = stored_chunk(req.uri);
        EncryptedChunk junk;
        junk.ciphertext.resize(real ? real->ciphertext.size() : crypto::kSealOverhead);
        for (auto& b : junk.ciphertext) b = static_cast<std::uint8_t>(rng_());
        serves_.push_back({req.uri, req.req_id, from, false});
        transport.send({id_, from,
                        ChunkResponse{req.uri, req.req_id,
                                      std::make_shared<const EncryptedChunk>(std::move(junk))}});
        return false;
      }
      case Behavior::honest: break;
    }
    if (failure_rate_ > 0.0 && static_cast<double>(rng_() >> 11) * 0x1.0p-53 < failure_rate_) {
      return false;
    }
    if (!stores(req.uri)) {
      transport.send({id_, from, Denial{req.uri, req.req_id, Errc::not_stored}});
      return false;
    }
    if (!payment_check_) {
      serve(from, req, transport);
      return false;
    }
    return true;
  }

  void on_payment_checked(const PartyId& from, const ChunkRequest& req,
                          const ledger::ServiceCheck& check, Transport& transport) {
    if (check.permits_service()) {
      serve(from, req, transport);
      return;
    }
    const Errc reason = check.censored ? Errc::content_censored : Errc::payment_not_verified;
    transport.send({id_, from, Denial{req.uri, req.req_id, reason}});
  }

  const std::vector<ServeRecord>& serve_log() const { return serves_; }

 private:
  struct Pending {
    ChunkPtr chunk;
    int attempts = 0;
  };

  void serve(const PartyId& to, const ChunkRequest& req, Transport& transport) {
    serves_.push_back({req.uri, req.req_id, to, true});
    transport.send({id_, to, ChunkResponse{req.uri, req.req_id, stored_.at(req.uri)}});
  }

  PartyId id_;
  SecretKey key_;
  Behavior behavior_;
  double failure_rate_;
  bool payment_check_ = true;
  std::mt19937_64 rng_;
  std::map<Uri, Pending> pending_;
  std::map<Uri, ChunkPtr> stored_;
  std::vector<ServeRecord> serves_;
};

// -- client -----------------------------------------------------------------

class ClientSession {
 public:
  enum class Contact { untouched, outstanding, delivered, failed };

  ClientSession(PartyId id, SecretKey key, Uri uri, std::string req_id, FetchStrategy strategy,
                std::uint64_t seed)
      : id_(std::move(id)), key_(key), uri_(uri), req_id_(std::move(req_id)),
        strategy_(strategy), rng_(seed) {}

  const PartyId& id() const { return id_; }
  const Uri& uri() const { return uri_; }
  const std::string& req_id() const { return req_id_; }
  FetchStrategy strategy() const { return strategy_; }

  SignedCall payment_call(const std::string& link = {}) const {
    return crypto::sign_call(id_, std::string(ledger::op::kPayForContent),
                             ledger::payload::payment(uri_, req_id_, link), key_);
  }

  SignedCall keys_call() const {
    return crypto::sign_call(id_, std::string(ledger::op::kGetKeys),
                             ledger::payload::keys_request(uri_, req_id_), key_);
  }

  /// Installs the released key material and fixes the contact order.
  void on_keys(const ledger::KeyRelease& keys) {
    keys_ = keys;
    order_.clear();
    for (std::size_t i = 0; i < keys.facilitator_ids.size(); ++i) {
      contact_[keys.facilitator_ids[i]] = Contact::untouched;
      order_.push_back(keys.facilitator_ids[i]);
    }
    shuffle(order_, rng_);
    have_keys_ = true;
  }

  bool has_keys() const { return have_keys_; }

  /// Sends requests to as many new facilitators as the strategy calls for:
  /// all of them for Aggressive, enough to cover the shortfall for Lazy.
  std::vector<PartyId> request_more(Transport& transport) {
    std::vector<PartyId> sent;
    if (!have_keys_ || ready()) return sent;
    std::size_t want = order_.size();
    if (strategy_ == FetchStrategy::lazy) {
      const std::size_t covered = chunks_.size() + outstanding().size();
      want = keys_.k > covered ? keys_.k - covered : 0;
    }
    for (const PartyId& f : order_) {
      if (sent.size() == want) break;
      if (contact_[f] != Contact::untouched) continue;
      contact_[f] = Contact::outstanding;
      ++contacts_;
      sent.push_back(f);
      if (!transport.send({id_, f, ChunkRequest{uri_, req_id_}})) contact_[f] = Contact::failed;
    }
    return sent;
  }

  /// Accepts a chunk only if its hash is listed, it decrypts under the key
  /// of the listed position, and that key is the plaintext hash. Responses
  /// arriving after a timeout are still considered.
  void on_response(const PartyId& from, const ChunkResponse& resp) {
    auto it = contact_.find(from);
    if (it == contact_.end() || it->second == Contact::delivered || !resp.chunk) return;
    bytes_received_ += resp.chunk->wire_size();
    it->second = Contact::failed;
    const crypto::Digest h = resp.chunk->hash();
    const auto pos = std::find(keys_.hash_list.begin(), keys_.hash_list.end(), h);
    if (pos == keys_.hash_list.end()) return;
    const auto m = static_cast<std::size_t>(pos - keys_.hash_list.begin());
    const crypto::ConvergentKey& key = keys_.key_map.at(keys_.facilitator_ids[m]);
    auto plain = crypto::open(*resp.chunk, key);
    if (!plain || crypto::sha256(*plain).bytes != key.bytes) return;
    auto chunk = codec::deserialize(*plain);
    if (!chunk || chunk->index != m) return;
    it->second = Contact::delivered;
    chunks_.emplace(m, std::move(*chunk));
  }

  void on_denial(const PartyId& from, const Denial&) {
    auto it = contact_.find(from);
    if (it != contact_.end() && it->second == Contact::outstanding) it->second = Contact::failed;
  }

  void on_timeout(const PartyId& from) { on_denial(from, {}); }

  std::vector<PartyId> outstanding() const {
    std::vector<PartyId> out;
    for (const PartyId& f : order_) {
      if (contact_.at(f) == Contact::outstanding) out.push_back(f);
    }
    return out;
  }

  bool ready() const { return have_keys_ && chunks_.size() >= keys_.k; }

  /// Nobody left to ask and nothing in flight, yet fewer than k chunks.
  bool exhausted() const {
    if (!have_keys_ || ready()) return false;
    return std::none_of(order_.begin(), order_.end(), [&](const PartyId& f) {
      const Contact c = contact_.at(f);
      return c == Contact::untouched || c == Contact::outstanding;
    });
  }

  /// Decodes and checks that the file hashes to the purchased URI.
  Result<Bytes> finish() const {
    if (!ready()) return Errc::delivery_failed;
    std::vector<codec::PlainChunk> parts;
    for (const auto& [_, c] : chunks_) parts.push_back(c);
    const auto n = static_cast<std::uint32_t>(keys_.facilitator_ids.size());
    auto file = codec::recover(parts, {keys_.k, n});
    if (!file) return Errc::delivery_failed;
    auto got = crypto::generate_uri(*file);
    if (!got || *got != uri_) return Errc::uri_mismatch;
    return file;
  }

  std::uint32_t contacts() const { return contacts_; }
  std::uint64_t bytes_received() const { return bytes_received_; }
  std::size_t valid_chunks() const { return chunks_.size(); }
  Contact contact_state(const PartyId& f) const {
    auto it = contact_.find(f);
    return it == contact_.end() ? Contact::untouched : it->second;
  }

 private:
  PartyId id_;
  SecretKey key_;
  Uri uri_;
  std::string req_id_;
  FetchStrategy strategy_;
  std::mt19937_64 rng_;
  bool have_keys_ = false;
  ledger::KeyRelease keys_;
  std::vector<PartyId> order_;
  std::map<PartyId, Contact> contact_;
  std::map<std::size_t, codec::PlainChunk> chunks_;
  std::uint32_t contacts_ = 0;
  std::uint64_t bytes_received_ = 0;
};

// -- synchronous in-process network ------------------------------------------

struct UploadReport {
  Uri uri;
  std::map<PartyId, UploadDecision> decisions;
  std::map<PartyId, Errc> complaints;
};

/// Delivers messages in FIFO order with no notion of time. A facilitator
/// that stays silent is timed out once the queue drains.
class LocalNetwork : public Transport {
 public:
  explicit LocalNetwork(ledger::Ledger& ledger) : ledger_(ledger) {}

  Facilitator& add_facilitator(Facilitator f) {
    const PartyId id = f.id();
    return facilitators_.insert_or_assign(id, std::move(f)).first->second;
  }
  Facilitator& facilitator(const PartyId& id) { return facilitators_.at(id); }
  const std::map<PartyId, Facilitator>& facilitators() const { return facilitators_; }

  void set_unreachable(const PartyId& id, bool unreachable) {
    if (unreachable) {
      unreachable_.insert(id);
    } else {
      unreachable_.erase(id);
    }
  }

  bool send(Envelope e) override {
    if (unreachable_.contains(e.to)) return false;
    log_.push_back(e);
    queue_.push_back(std::move(e));
    return true;
  }

  /// Delivery, first verification (before the listing exists), listing,
  /// then re-verification and complaints.
  Result<UploadReport> upload(const Publisher& publisher, const UploadPlan& plan) {
    UploadReport report;
    report.uri = plan.listing.uri;
    if (Errc e = publisher.deliver(plan, *this); e != Errc::ok) return e;
    drain(nullptr);
    if (Errc e = ledger_.submit(publisher.listing_call(plan)); e != Errc::ok) return e;
    for (const PartyId& id : plan.listing.facilitator_ids) {
      Facilitator& f = facilitators_.at(id);
      const UploadDecision d = f.verify_pending(report.uri, ledger_.get_upload_keys(report.uri, id));
      report.decisions[id] = d;
      if (d == UploadDecision::complain) {
        report.complaints[id] = ledger_.submit(f.complaint_call(report.uri));
      }
    }
    return report;
  }

  /// Pay, fetch keys, collect chunks per the client's strategy, decode.
  Result<Bytes> purchase(ClientSession& client) {
    if (Errc e = ledger_.submit(client.payment_call()); e != Errc::ok) return e;
    auto keys = ledger_.get_keys(client.keys_call());
    if (!keys) return keys.error();
    client.on_keys(*keys);
    while (!client.ready() && !client.exhausted()) {
      client.request_more(*this);
      drain(&client);
      for (const PartyId& f : client.outstanding()) client.on_timeout(f);
    }
    return client.finish();
  }

  const std::vector<Envelope>& message_log() const { return log_; }

 private:
  void drain(ClientSession* client) {
    while (!queue_.empty()) {
      Envelope e = std::move(queue_.front());
      queue_.pop_front();
      if (auto it = facilitators_.find(e.to); it != facilitators_.end()) {
        Facilitator& f = it->second;
        if (auto* up = std::get_if<ChunkUpload>(&e.message)) {
          f.receive_upload(*up);
          f.verify_pending(up->uri, ledger_.get_upload_keys(up->uri, f.id()));
        } else if (auto* req = std::get_if<ChunkRequest>(&e.message)) {
          if (f.on_request(e.from, *req, *this)) {
            f.on_payment_checked(e.from, *req, ledger_.check_service(req->uri, req->req_id),
                                 *this);
          }
        }
      } else if (client != nullptr && e.to == client->id()) {
        if (auto* resp = std::get_if<ChunkResponse>(&e.message)) {
          client->on_response(e.from, *resp);
        } else if (auto* d = std::get_if<Denial>(&e.message)) {
          client->on_denial(e.from, *d);
        }
      }
    }
  }

  ledger::Ledger& ledger_;
  std::map<PartyId, Facilitator> facilitators_;
  std::set<PartyId> unreachable_;
  std::deque<Envelope> queue_;
  std::vector<Envelope> log_;
};

}  // namespace fairshare::actors
