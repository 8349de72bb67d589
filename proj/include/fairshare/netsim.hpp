// Copyright 2026 The fairshare Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Seeded discrete-event simulation of the marketplace.
//
// Time is kept in integer microseconds. Chunk-bearing messages occupy the
// sender's uplink and the receiver's downlink for size / bandwidth, then
// travel for the link latency; control messages only pay latency plus their
// own small transfer time. The ledger is a single node: reads are answered on
// arrival, writes commit after a fixed delay. A run has two phases: every
// publisher uploads at t = 0, and once the queue drains all clients start
// downloading together.

#include <fairshare/actors.hpp>
#include <fairshare/incentives.hpp>
#include <fairshare/ledger.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace fairshare::netsim {

using actors::Behavior;
using actors::FetchStrategy;
using crypto::Uri;
using json = nlohmann::json;
using Micros = std::int64_t;

inline constexpr std::string_view kLedgerNode = "ledger";

inline Micros to_micros(double ms) { return static_cast<Micros>(std::llround(ms * 1000.0)); }
inline double to_ms(Micros us) { return static_cast<double>(us) / 1000.0; }

/// Independent generator per purpose, so toggling one feature (faults, the
/// ledger) never shifts the draws seen by another.
inline std::mt19937_64 rng_stream(std::uint64_t seed, std::string_view tag, std::uint64_t index) {
  Bytes material;
  for (int s = 56; s >= 0; s -= 8) material.push_back(static_cast<std::uint8_t>(seed >> s));
  material.insert(material.end(), tag.begin(), tag.end());
  for (int s = 56; s >= 0; s -= 8) material.push_back(static_cast<std::uint8_t>(index >> s));
  const crypto::Digest d = crypto::sha256(material);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | d.bytes[i];
  return std::mt19937_64(v);
}

inline PartyId facilitator_name(std::uint32_t i) { return "f" + std::to_string(i); }
inline PartyId client_name(std::uint32_t i) { return "c" + std::to_string(i); }
inline PartyId publisher_name(std::uint32_t i) { return "p" + std::to_string(i); }

struct LatencyOverride {
  PartyId a;
  PartyId b;
  double latency_ms = 0.0;
};

struct SimConfig {
  std::uint64_t seed = 1;
  std::uint32_t n_facilitators = 6;
  codec::CodingParams coding{4, 6};
  std::uint64_t file_size_bytes = 10'000'000;
  double latency_ms = 20.0;
  std::vector<LatencyOverride> latency_overrides;
  double bandwidth_bytes_per_ms = 4000.0;
  std::uint32_t n_clients = 1;
  std::uint32_t requests_per_client = 1;
  std::map<PartyId, Behavior> faults;
  FetchStrategy strategy = FetchStrategy::lazy;
  bool ledger_check_enabled = true;
  double commit_delay_ms = 50.0;
  double client_chunk_ms = 1.0;
  double request_timeout_ms = 2000.0;
  double pending_timeout_ms = 60000.0;
  double failure_rate = 0.0;
  Amount price = Amount::units(1);
  bool keep_event_log = true;

  Errc validate() const {
    const auto finite_nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!coding.valid() || n_facilitators < coding.n || file_size_bytes == 0 || n_clients == 0 ||
        requests_per_client == 0 || !finite_nonneg(latency_ms) ||
        !(bandwidth_bytes_per_ms > 0.0) || !std::isfinite(bandwidth_bytes_per_ms) ||
        !finite_nonneg(commit_delay_ms) || !finite_nonneg(client_chunk_ms) ||
        !(request_timeout_ms > 0.0) || !(pending_timeout_ms > 0.0) || !(failure_rate >= 0.0) ||
        failure_rate > 1.0 || price < Amount{}) {
      return Errc::config_invalid;
    }
    const auto known = [&](const PartyId& id) {
      if (id == kLedgerNode) return true;
      for (std::uint32_t i = 0; i < n_facilitators; ++i) {
        if (id == facilitator_name(i)) return true;
      }
      for (std::uint32_t i = 0; i < n_clients; ++i) {
        if (id == client_name(i) || id == publisher_name(i)) return true;
      }
      return false;
    };
    for (const auto& [id, _] : faults) {
      if (!id.starts_with("f") || !known(id)) return Errc::config_invalid;
    }
    for (const LatencyOverride& o : latency_overrides) {
      if (!known(o.a) || !known(o.b) || !finite_nonneg(o.latency_ms)) return Errc::config_invalid;
    }
    return Errc::ok;
  }

  std::uint32_t fault_count() const {
    return static_cast<std::uint32_t>(std::count_if(faults.begin(), faults.end(), [](const auto& kv) {
      return kv.second != Behavior::honest;
    }));
  }
};

enum class EventKind { message_delivery, actor_step, ledger_commit };

inline std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::message_delivery: return "message-delivery";
    case EventKind::actor_step: return "actor-step";
    case EventKind::ledger_commit: return "ledger-commit";
  }
  return "actor-step";
}

struct RequestMetrics {
  PartyId client;
  std::string req_id;
  Errc result = Errc::ok;
  double start_ms = 0.0;
  double latency_ms = 0.0;
  std::uint64_t bytes = 0;
  std::uint32_t contacts = 0;
};

struct UploadMetrics {
  PartyId publisher;
  std::string uri;
  double latency_ms = 0.0;
  std::uint32_t stored = 0;
  std::uint32_t complaints = 0;
};

struct RunMetrics {
  std::vector<RequestMetrics> requests;
  std::vector<UploadMetrics> uploads;
  std::uint64_t chunk_bytes = 0;
  std::uint64_t control_bytes = 0;
  std::uint64_t events = 0;
  std::map<PartyId, Amount> balance_delta;
  std::map<PartyId, std::uint64_t> serves;
  Amount payout_per_facilitator;

  std::uint32_t successes() const {
    return static_cast<std::uint32_t>(std::count_if(
        requests.begin(), requests.end(), [](const RequestMetrics& r) { return r.result == Errc::ok; }));
  }
  std::uint32_t failures() const { return static_cast<std::uint32_t>(requests.size()) - successes(); }

  double mean_download_ms() const {
    double sum = 0.0;
    std::uint32_t n = 0;
    for (const RequestMetrics& r : requests) {
      if (r.result != Errc::ok) continue;
      sum += r.latency_ms;
      ++n;
    }
    return n == 0 ? 0.0 : sum / n;
  }

  double max_download_ms() const {
    double m = 0.0;
    for (const RequestMetrics& r : requests) m = std::max(m, r.latency_ms);
    return m;
  }

  double mean_upload_ms() const {
    double sum = 0.0;
    for (const UploadMetrics& u : uploads) sum += u.latency_ms;
    return uploads.empty() ? 0.0 : sum / static_cast<double>(uploads.size());
  }

  std::uint64_t download_bytes() const {
    std::uint64_t sum = 0;
    for (const RequestMetrics& r : requests) sum += r.bytes;
    return sum;
  }

  double mean_contacts() const {
    double sum = 0.0;
    for (const RequestMetrics& r : requests) sum += r.contacts;
    return requests.empty() ? 0.0 : sum / static_cast<double>(requests.size());
  }

  json to_json() const {
    json reqs = json::array();
    for (const RequestMetrics& r : requests) {
      reqs.push_back({{"client", r.client},
                      {"req_id", r.req_id},
                      {"result", fairshare::to_string(r.result)},
                      {"start_ms", r.start_ms},
                      {"download_latency_ms", r.latency_ms},
                      {"bytes", r.bytes},
                      {"contacts", r.contacts}});
    }
    json ups = json::array();
    for (const UploadMetrics& u : uploads) {
      ups.push_back({{"publisher", u.publisher},
                     {"uri", u.uri},
                     {"upload_latency_ms", u.latency_ms},
                     {"stored", u.stored},
                     {"complaints", u.complaints}});
    }
    json deltas = json::object();
    for (const auto& [id, a] : balance_delta) deltas[id] = a.str();
    return json{{"requests", reqs},
                {"uploads", ups},
                {"chunk_bytes", chunk_bytes},
                {"control_bytes", control_bytes},
                {"events", events},
                {"balance_delta", deltas},
                {"serves", serves},
                {"payout_per_facilitator", payout_per_facilitator.str()},
                {"successes", successes()},
                {"failures", failures()},
                {"mean_download_ms", mean_download_ms()},
                {"mean_upload_ms", mean_upload_ms()}};
  }
};

struct RunResult {
  RunMetrics metrics;
  std::vector<std::string> event_log;
  std::string ledger_snapshot;
  std::string ledger_log;
  std::map<PartyId, std::vector<actors::ServeRecord>> serve_logs;
  std::map<PartyId, Behavior> behaviors;

  std::string event_log_text() const {
    std::string out;
    for (const std::string& line : event_log) {
      out += line;
      out += '\n';
    }
    return out;
  }
};

class Simulation {
 public:
  explicit Simulation(SimConfig config) : cfg_(std::move(config)), transport_(*this) {}

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  Result<RunResult> run() {
    if (cfg_.validate() != Errc::ok) return Errc::config_invalid;
    setup();
    for (std::uint32_t j = 0; j < cfg_.n_clients; ++j) {
      schedule(0, EventKind::actor_step, publisher_name(j), "", "upload", "file " + std::to_string(j),
               [this, j] { start_upload(j); });
    }
    drain();
    const Micros phase2 = now_;
    for (std::uint32_t i = 0; i < cfg_.n_clients; ++i) {
      schedule(phase2, EventKind::actor_step, client_name(i), "", "start", "request 0",
               [this, i] { start_request(i); });
    }
    drain();
    return collect();
  }

 private:
  // -- plumbing ---------------------------------------------------------------

  struct Event {
    Micros time = 0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::actor_step;
    PartyId actor;
    PartyId from;
    std::string what;
    std::string payload;
    std::function<void()> fn;
  };

  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return std::tie(a.time, a.seq) > std::tie(b.time, b.seq);
    }
  };

  class SimTransport : public actors::Transport {
   public:
    explicit SimTransport(Simulation& sim) : sim_(sim) {}
    bool send(actors::Envelope e) override {
      sim_.send_actor(std::move(e));
      return true;
    }

   private:
    Simulation& sim_;
  };

  void schedule(Micros t, EventKind kind, PartyId actor, PartyId from, std::string what,
                std::string payload, std::function<void()> fn) {
    queue_.push_back({t, seq_++, kind, std::move(actor), std::move(from), std::move(what),
                      std::move(payload), std::move(fn)});
    std::push_heap(queue_.begin(), queue_.end(), Later{});
  }

  void drain() {
    while (!queue_.empty()) {
      std::pop_heap(queue_.begin(), queue_.end(), Later{});
      Event e = std::move(queue_.back());
      queue_.pop_back();
      now_ = e.time;
      ++metrics_.events;
      if (cfg_.keep_event_log) log_event(e);
      e.fn();
    }
  }

  void log_event(const Event& e) {
    const crypto::Digest d = crypto::sha256(e.payload);
    json line{{"t_us", e.time},
              {"kind", to_string(e.kind)},
              {"actor", e.actor},
              {"from", e.from},
              {"what", e.what},
              {"digest", to_hex(ByteView(d.bytes.data(), 8))}};
    log_.push_back(line.dump());
  }

  Micros latency(const PartyId& a, const PartyId& b) const {
    for (const LatencyOverride& o : cfg_.latency_overrides) {
      if ((o.a == a && o.b == b) || (o.a == b && o.b == a)) return to_micros(o.latency_ms);
    }
    return to_micros(cfg_.latency_ms);
  }

  Micros transfer_time(std::uint64_t bytes) const {
    return static_cast<Micros>(
        std::ceil(static_cast<double>(bytes) * 1000.0 / cfg_.bandwidth_bytes_per_ms));
  }

  /// Arrival time of a chunk transfer started now, reserving both ends FIFO.
  Micros chunk_arrival(const PartyId& from, const PartyId& to, std::uint64_t bytes) {
    const Micros start = std::max({now_, up_free_[from], down_free_[to]});
    const Micros end = start + transfer_time(bytes);
    up_free_[from] = end;
    down_free_[to] = end;
    metrics_.chunk_bytes += bytes;
    return end + latency(from, to);
  }

  Micros control_arrival(const PartyId& from, const PartyId& to) {
    metrics_.control_bytes += actors::kControlMessageBytes;
    return now_ + latency(from, to) + transfer_time(actors::kControlMessageBytes);
  }

  void send_control(const PartyId& from, const PartyId& to, std::string what, std::string payload,
                    std::function<void()> on_arrival) {
    schedule(control_arrival(from, to), EventKind::message_delivery, to, from, std::move(what),
             std::move(payload), std::move(on_arrival));
  }

  // -- ledger node ------------------------------------------------------------

  void ledger_write(const PartyId& from, crypto::SignedCall call, std::function<void(Errc)> done) {
    std::string desc = ledger::call_to_json(call).dump();
    send_control(from, std::string(kLedgerNode), "LedgerWrite", desc,
                 [this, from, call = std::move(call), desc, done = std::move(done)]() mutable {
                   schedule(now_ + to_micros(cfg_.commit_delay_ms), EventKind::ledger_commit,
                            std::string(kLedgerNode), from, call.operation, desc,
                            [this, from, call = std::move(call), done = std::move(done)] {
                              const Errc r = ledger_->submit(call);
                              after_commit(call, r);
                              send_control(std::string(kLedgerNode), from, "LedgerReply",
                                           std::string(fairshare::to_string(r)),
                                           [done, r] {
                                             if (done) done(r);
                                           });
                            });
                 });
  }

  template <typename T>
  void ledger_read(const PartyId& from, std::string what, std::string payload,
                   std::function<T()> query, std::function<void(T)> done) {
    send_control(from, std::string(kLedgerNode), "LedgerRead", what + " " + payload,
                 [this, from, what, query = std::move(query), done = std::move(done)] {
                   T answer = query();
                   send_control(std::string(kLedgerNode), from, "LedgerReply", what,
                                [done, answer = std::move(answer)] { done(answer); });
                 });
  }

  void after_commit(const crypto::SignedCall& call, Errc result) {
    if (result != Errc::ok || call.operation != ledger::op::kAddContent) return;
    const auto listing = ledger::ContentListing::from_json(json::parse(call.payload));
    for (const PartyId& fid : listing->facilitator_ids) {
      const Uri uri = listing->uri;
      auto keys = ledger_->get_upload_keys(uri, fid);
      send_control(std::string(kLedgerNode), fid, "ListingNotice", uri.str(),
                   [this, fid, uri, keys] {
                     actors::Facilitator& f = facilitators_.at(fid);
                     if (f.has_pending(uri)) upload_decision(fid, uri, f.verify_pending(uri, keys));
                   });
    }
  }

  // -- setup ------------------------------------------------------------------

  void setup() {
    ledger::Genesis g;
    auto add = [&](const PartyId& id, ledger::Role role, Amount balance) {
      const std::string material = "fairshare-party/" + std::to_string(cfg_.seed) + "/" + id;
      keys_.emplace(id, crypto::keypair_from_seed(as_bytes(material)));
      g.parties.push_back({id, role, keys_.at(id).public_key, balance});
    };
    for (std::uint32_t j = 0; j < cfg_.n_clients; ++j) {
      add(publisher_name(j), ledger::Role::publisher, Amount{});
    }
    for (std::uint32_t i = 0; i < cfg_.n_facilitators; ++i) {
      add(facilitator_name(i), ledger::Role::facilitator, Amount{});
    }
    const Amount funds = cfg_.price * static_cast<std::int64_t>(cfg_.requests_per_client + 1);
    for (std::uint32_t i = 0; i < cfg_.n_clients; ++i) add(client_name(i), ledger::Role::client, funds);
    add("aud", ledger::Role::auditor, Amount{});
    ledger_ = std::make_unique<ledger::Ledger>(std::move(ledger::Ledger::from_genesis(g)).value());
    initial_balances_ = ledger_->balances();

    for (std::uint32_t i = 0; i < cfg_.n_facilitators; ++i) {
      const PartyId id = facilitator_name(i);
      auto fault = cfg_.faults.find(id);
      const Behavior b = fault == cfg_.faults.end() ? Behavior::honest : fault->second;
      actors::Facilitator f(id, keys_.at(id).secret_key, b, rng_stream(cfg_.seed, "facilitator", i)(),
                            cfg_.failure_rate);
      f.set_payment_check(cfg_.ledger_check_enabled);
      facilitators_.emplace(id, std::move(f));
    }
    for (std::uint32_t i = 0; i < cfg_.n_clients; ++i) {
      ClientState c;
      c.id = client_name(i);
      c.file = i;
      c.rng = rng_stream(cfg_.seed, "client", i);
      clients_.push_back(std::move(c));
    }
    payout_ = incentives::payout_for_price(cfg_.price, cfg_.coding.n, cfg_.failure_rate);
  }

  // -- upload -----------------------------------------------------------------

  struct FileState {
    PartyId publisher;
    ledger::ContentListing listing;
    std::uint32_t decided = 0;
    std::uint32_t stored = 0;
    std::uint32_t complaints = 0;
    Micros start = 0;
    bool done = false;
  };

  std::vector<PartyId> placement(std::uint32_t j) {
    std::vector<PartyId> all;
    for (std::uint32_t i = 0; i < cfg_.n_facilitators; ++i) all.push_back(facilitator_name(i));
    if (all.size() == cfg_.coding.n) return all;
    auto rng = rng_stream(cfg_.seed, "placement", j);
    actors::shuffle(all, rng);
    all.resize(cfg_.coding.n);
    return all;
  }

  void start_upload(std::uint32_t j) {
    auto rng = rng_stream(cfg_.seed, "file", j);
    Bytes file(cfg_.file_size_bytes);
    for (auto& b : file) b = static_cast<std::uint8_t>(rng());
    const PartyId pub = publisher_name(j);
    actors::Publisher publisher(pub, keys_.at(pub).secret_key);
    actors::PublisherSession session{"file-" + std::to_string(j), std::move(file), cfg_.coding,
                                     cfg_.price, payout_, placement(j)};
    auto plan = publisher.prepare(session);
    if (!plan) throw Error(plan.error(), "simulated publisher could not prepare its file");
    FileState fs;
    fs.publisher = pub;
    fs.listing = plan->listing;
    fs.start = now_;
    file_of_[plan->listing.uri] = files_.size();
    files_.push_back(std::move(fs));
    publisher.deliver(*plan, transport_);
    if (cfg_.ledger_check_enabled) {
      // the listing goes out once the last chunk has left the uplink
      const Micros sent = std::max(now_, up_free_[pub]);
      schedule(sent, EventKind::actor_step, pub, "", "ledger:submit-listing", plan->listing.uri.str(),
               [this, pub, call = publisher.listing_call(*plan)] {
                 ledger_write(pub, call, nullptr);
               });
    }
  }

  void upload_decision(const PartyId& fid, const Uri& uri, actors::UploadDecision d) {
    using actors::UploadDecision;
    FileState& fs = files_.at(file_of_.at(uri));
    switch (d) {
      case UploadDecision::pending:
        schedule(now_ + to_micros(cfg_.pending_timeout_ms), EventKind::actor_step, fid, "",
                 "ledger:pending-expiry", uri.str(), [this, fid, uri] {
                   auto r = facilitators_.at(fid).expire_pending(uri);
                   if (r == actors::UploadDecision::dropped) upload_decision(fid, uri, r);
                 });
        return;
      case UploadDecision::ignored: return;
      case UploadDecision::stored: ++fs.stored; break;
      case UploadDecision::complain:
        ++fs.complaints;
        ledger_write(fid, facilitators_.at(fid).complaint_call(uri), nullptr);
        break;
      case UploadDecision::dropped: break;
    }
    if (++fs.decided == fs.listing.n() && !fs.done) {
      fs.done = true;
      metrics_.uploads.push_back(
          {fs.publisher, uri.str(), to_ms(now_ - fs.start), fs.stored, fs.complaints});
    }
  }

  // -- message dispatch -------------------------------------------------------

  using AnswerKey = std::tuple<PartyId, std::string, PartyId>;

  static std::string describe(const actors::Message& m) {
    std::ostringstream s;
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          s << v.uri.str();
          if constexpr (!std::is_same_v<T, actors::ChunkUpload>) s << " " << v.req_id;
          if constexpr (std::is_same_v<T, actors::Denial>) s << " " << fairshare::to_string(v.reason);
          if constexpr (std::is_same_v<T, actors::ChunkUpload> ||
                        std::is_same_v<T, actors::ChunkResponse>) {
            s << " " << (v.chunk ? v.chunk->hash().hex() : std::string("-"));
          }
        },
        m);
    return s.str();
  }

  void send_actor(actors::Envelope e) {
    const std::uint64_t bytes = actors::wire_size(e.message);
    if (std::holds_alternative<actors::ChunkResponse>(e.message) ||
        std::holds_alternative<actors::Denial>(e.message)) {
      const auto* resp = std::get_if<actors::ChunkResponse>(&e.message);
      const std::string& req =
          resp ? resp->req_id : std::get<actors::Denial>(e.message).req_id;
      answered_.insert({e.to, req, e.from});
    }
    if (const auto* req = std::get_if<actors::ChunkRequest>(&e.message)) {
      arm_timer(e.from, e.to, req->req_id);
    }
    const Micros arrive = actors::message_chunk(e.message) != nullptr
                              ? chunk_arrival(e.from, e.to, bytes)
                              : control_arrival(e.from, e.to);
    std::string what(actors::message_name(e.message));
    std::string payload = describe(e.message);
    const PartyId to = e.to;
    const PartyId from = e.from;
    schedule(arrive, EventKind::message_delivery, to, from, std::move(what), std::move(payload),
             [this, e = std::move(e), bytes] { dispatch(e, bytes); });
  }

  void dispatch(const actors::Envelope& e, std::uint64_t bytes) {
    if (auto it = facilitators_.find(e.to); it != facilitators_.end()) {
      facilitator_receive(it->second, e);
      return;
    }
    for (std::size_t ci = 0; ci < clients_.size(); ++ci) {
      if (clients_[ci].id == e.to) {
        client_receive(ci, e, bytes);
        return;
      }
    }
  }

  void facilitator_receive(actors::Facilitator& f, const actors::Envelope& e) {
    const PartyId fid = f.id();
    if (const auto* up = std::get_if<actors::ChunkUpload>(&e.message)) {
      f.receive_upload(*up);
      const Uri uri = up->uri;
      if (!cfg_.ledger_check_enabled) {
        upload_decision(fid, uri, f.accept_unverified(uri));
        return;
      }
      ledger_read<Result<ledger::UploadKeys>>(
          fid, "GetUploadKeys", uri.str(),
          [this, uri, fid] { return ledger_->get_upload_keys(uri, fid); },
          [this, uri, fid](Result<ledger::UploadKeys> keys) {
            upload_decision(fid, uri, facilitators_.at(fid).verify_pending(uri, keys));
          });
      return;
    }
    if (const auto* req = std::get_if<actors::ChunkRequest>(&e.message)) {
      if (!f.on_request(e.from, *req, transport_)) return;
      const actors::ChunkRequest r = *req;
      const PartyId client = e.from;
      ledger_read<ledger::ServiceCheck>(
          fid, "IsPaymentDone", r.uri.str() + " " + r.req_id,
          [this, r] { return ledger_->check_service(r.uri, r.req_id); },
          [this, fid, client, r](ledger::ServiceCheck check) {
            facilitators_.at(fid).on_payment_checked(client, r, check, transport_);
          });
    }
  }

  // -- clients ----------------------------------------------------------------

  struct ClientState {
    PartyId id;
    std::size_t file = 0;
    std::mt19937_64 rng;
    std::uint32_t next_request = 0;
    std::optional<actors::ClientSession> session;
    bool active = false;
    Micros started = 0;
    Micros cpu_free = 0;
    std::uint64_t bytes = 0;
  };

  void start_request(std::size_t ci) {
    ClientState& c = clients_[ci];
    const FileState& fs = files_.at(c.file);
    const std::string req_id = actors::make_req_id(c.rng);
    c.session.emplace(c.id, keys_.at(c.id).secret_key, fs.listing.uri, req_id, cfg_.strategy, c.rng());
    c.active = true;
    c.started = now_;
    c.bytes = 0;
    ++c.next_request;
    if (!cfg_.ledger_check_enabled) {
      // baseline: key material handed over by the publisher out of band
      c.session->on_keys(ledger::KeyRelease{fs.listing.key_map, fs.listing.hash_list,
                                            fs.listing.facilitator_ids, fs.listing.k});
      progress(ci);
      return;
    }
    ledger_write(c.id, c.session->payment_call(), [this, ci, req_id](Errc r) {
      ClientState& cs = clients_[ci];
      if (!cs.active || cs.session->req_id() != req_id) return;
      if (r != Errc::ok) {
        finish_request(ci, r);
        return;
      }
      const crypto::SignedCall call = cs.session->keys_call();
      ledger_read<Result<ledger::KeyRelease>>(
          cs.id, "GetKeys", req_id, [this, call] { return ledger_->get_keys(call); },
          [this, ci, req_id](Result<ledger::KeyRelease> keys) {
            ClientState& c2 = clients_[ci];
            if (!c2.active || c2.session->req_id() != req_id) return;
            if (!keys) {
              finish_request(ci, keys.error());
              return;
            }
            c2.session->on_keys(*keys);
            progress(ci);
          });
    });
  }

  void arm_timer(const PartyId& client, const PartyId& facilitator, const std::string& req_id) {
    schedule(now_ + to_micros(cfg_.request_timeout_ms), EventKind::actor_step, client, "", "timer",
             facilitator + " " + req_id, [this, client, facilitator, req_id] {
               if (answered_.contains({client, req_id, facilitator})) return;
               for (std::size_t ci = 0; ci < clients_.size(); ++ci) {
                 ClientState& c = clients_[ci];
                 if (c.id != client || !c.active || c.session->req_id() != req_id) continue;
                 c.session->on_timeout(facilitator);
                 progress(ci);
               }
             });
  }

  void client_receive(std::size_t ci, const actors::Envelope& e, std::uint64_t bytes) {
    ClientState& c = clients_[ci];
    if (!c.active) return;
    if (const auto* resp = std::get_if<actors::ChunkResponse>(&e.message)) {
      if (resp->req_id != c.session->req_id()) return;
      c.bytes += bytes;
      const Micros start = std::max(now_, c.cpu_free);
      c.cpu_free = start + to_micros(cfg_.client_chunk_ms);
      const std::string req_id = resp->req_id;
      schedule(c.cpu_free, EventKind::actor_step, c.id, e.from, "process-chunk", describe(e.message),
               [this, ci, e, req_id] {
                 ClientState& cs = clients_[ci];
                 if (!cs.active || cs.session->req_id() != req_id) return;
                 cs.session->on_response(e.from, std::get<actors::ChunkResponse>(e.message));
                 progress(ci);
               });
      return;
    }
    if (const auto* d = std::get_if<actors::Denial>(&e.message)) {
      if (d->req_id != c.session->req_id()) return;
      c.session->on_denial(e.from, *d);
      progress(ci);
    }
  }

  void progress(std::size_t ci) {
    ClientState& c = clients_[ci];
    if (!c.active) return;
    if (c.session->ready()) {
      auto file = c.session->finish();
      finish_request(ci, file ? Errc::ok : file.error());
      return;
    }
    if (!c.session->exhausted()) c.session->request_more(transport_);
    if (c.session->exhausted()) finish_request(ci, Errc::delivery_failed);
  }

  void finish_request(std::size_t ci, Errc result) {
    ClientState& c = clients_[ci];
    c.active = false;
    metrics_.requests.push_back({c.id, c.session->req_id(), result, to_ms(c.started),
                                 to_ms(now_ - c.started), c.bytes, c.session->contacts()});
    schedule(now_, EventKind::actor_step, c.id, "", "done",
             c.session->req_id() + " " + std::string(fairshare::to_string(result)), [this, ci] {
               if (clients_[ci].next_request < cfg_.requests_per_client) start_request(ci);
             });
  }

  // -- results ----------------------------------------------------------------

  RunResult collect() {
    RunResult r;
    for (const auto& [id, b] : ledger_->balances()) {
      metrics_.balance_delta[id] = b - initial_balances_[id];
    }
    for (const auto& [id, f] : facilitators_) {
      std::uint64_t genuine = 0;
      for (const actors::ServeRecord& s : f.serve_log()) genuine += s.genuine ? 1 : 0;
      metrics_.serves[id] = genuine;
      r.serve_logs[id] = f.serve_log();
      r.behaviors[id] = f.behavior();
    }
    metrics_.payout_per_facilitator = payout_;
    r.metrics = std::move(metrics_);
    r.event_log = std::move(log_);
    r.ledger_snapshot = ledger_->snapshot();
    r.ledger_log = ledger::write_log(*ledger_);
    return r;
  }

  SimConfig cfg_;
  SimTransport transport_;
  Micros now_ = 0;
  std::uint64_t seq_ = 0;
  std::vector<Event> queue_;
  std::vector<std::string> log_;
  RunMetrics metrics_;
  std::map<PartyId, Micros> up_free_;
  std::map<PartyId, Micros> down_free_;
  std::map<PartyId, crypto::KeyPair> keys_;
  std::unique_ptr<ledger::Ledger> ledger_;
  std::map<PartyId, Amount> initial_balances_;
  std::map<PartyId, actors::Facilitator> facilitators_;
  std::vector<ClientState> clients_;
  std::vector<FileState> files_;
  std::map<Uri, std::size_t> file_of_;
  std::set<AnswerKey> answered_;
  Amount payout_;
};

inline Result<RunResult> run(const SimConfig& config) {
  Simulation sim(config);
  return sim.run();
}

// -- sweeps -----------------------------------------------------------------

enum class SweepAxis { file_size, k, n, facilitators, n_clients, latency, faults };

inline std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::file_size: return "file_size";
    case SweepAxis::k: return "k";
    case SweepAxis::n: return "n";
    case SweepAxis::facilitators: return "facilitators";
    case SweepAxis::n_clients: return "n_clients";
    case SweepAxis::latency: return "latency";
    case SweepAxis::faults: return "faults";
  }
  return "k";
}

inline std::optional<SweepAxis> axis_from_string(std::string_view s) {
  for (SweepAxis a : {SweepAxis::file_size, SweepAxis::k, SweepAxis::n, SweepAxis::facilitators,
                      SweepAxis::n_clients, SweepAxis::latency, SweepAxis::faults}) {
    if (to_string(a) == s) return a;
  }
  return std::nullopt;
}

/// `base` with one axis set to `value`. Fault sweeps mark the first `value`
/// facilitators with `fault_profile`.
inline Result<SimConfig> apply_axis(SimConfig cfg, SweepAxis axis, double value,
                                    Behavior fault_profile = Behavior::crash) {
  if (!std::isfinite(value) || value < 0) return Errc::config_invalid;
  const auto whole = static_cast<std::uint64_t>(value);
  const bool integral = static_cast<double>(whole) == value;
  switch (axis) {
    case SweepAxis::file_size:
      if (!integral) return Errc::config_invalid;
      cfg.file_size_bytes = whole;
      break;
    case SweepAxis::k:
      if (!integral) return Errc::config_invalid;
      cfg.coding.k = static_cast<std::uint32_t>(whole);
      break;
    case SweepAxis::n:
      if (!integral) return Errc::config_invalid;
      cfg.coding.n = static_cast<std::uint32_t>(whole);
      cfg.n_facilitators = std::max(cfg.n_facilitators, cfg.coding.n);
      break;
    case SweepAxis::facilitators:
      if (!integral) return Errc::config_invalid;
      cfg.n_facilitators = static_cast<std::uint32_t>(whole);
      break;
    case SweepAxis::n_clients:
      if (!integral) return Errc::config_invalid;
      cfg.n_clients = static_cast<std::uint32_t>(whole);
      break;
    case SweepAxis::latency: cfg.latency_ms = value; break;
    case SweepAxis::faults:
      if (!integral || whole > cfg.n_facilitators) return Errc::config_invalid;
      cfg.faults.clear();
      for (std::uint32_t i = 0; i < whole; ++i) cfg.faults[facilitator_name(i)] = fault_profile;
      break;
  }
  if (cfg.validate() != Errc::ok) return Errc::config_invalid;
  return cfg;
}

struct SweepRow {
  double value = 0.0;
  std::uint32_t repeat = 0;
  std::uint64_t seed = 0;
  RunMetrics metrics;
};

/// One run per (value, repeat); repeat r uses seed base.seed + r, so rows
/// with equal r are paired across values.
inline Result<std::vector<SweepRow>> sweep(SweepAxis axis, const std::vector<double>& values,
                                           const SimConfig& base, std::uint32_t repeats,
                                           Behavior fault_profile = Behavior::crash) {
  if (values.empty() || repeats == 0) return Errc::config_invalid;
  std::vector<SweepRow> rows;
  for (double v : values) {
    auto cfg = apply_axis(base, axis, v, fault_profile);
    if (!cfg) return cfg.error();
    cfg->keep_event_log = false;
    for (std::uint32_t r = 0; r < repeats; ++r) {
      cfg->seed = base.seed + r;
      auto result = run(*cfg);
      if (!result) return result.error();
      rows.push_back({v, r, cfg->seed, std::move(result->metrics)});
    }
  }
  return rows;
}

inline std::string format_number(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

inline std::string sweep_csv(SweepAxis axis, const std::vector<SweepRow>& rows) {
  std::string out =
      "axis,value,repeat,seed,requests,successes,mean_download_ms,max_download_ms,mean_upload_ms,"
      "download_bytes,chunk_bytes,control_bytes,mean_contacts,events\n";
  for (const SweepRow& r : rows) {
    const RunMetrics& m = r.metrics;
    out += std::string(to_string(axis)) + "," + format_number(r.value) + "," +
           std::to_string(r.repeat) + "," + std::to_string(r.seed) + "," +
           std::to_string(m.requests.size()) + "," + std::to_string(m.successes()) + "," +
           format_number(m.mean_download_ms()) + "," + format_number(m.max_download_ms()) + "," +
           format_number(m.mean_upload_ms()) + "," + std::to_string(m.download_bytes()) + "," +
           std::to_string(m.chunk_bytes) + "," + std::to_string(m.control_bytes) + "," +
           format_number(m.mean_contacts()) + "," + std::to_string(m.events) + "\n";
  }
  return out;
}

/// Mean download latency per axis value, in value order of first appearance.
inline std::vector<std::pair<double, double>> mean_latency_by_value(const std::vector<SweepRow>& rows) {
  std::vector<std::pair<double, double>> out;
  std::map<double, std::pair<double, int>> acc;
  for (const SweepRow& r : rows) {
    if (!acc.contains(r.value)) out.push_back({r.value, 0.0});
    acc[r.value].first += r.metrics.mean_download_ms();
    acc[r.value].second += 1;
  }
  for (auto& [v, mean] : out) mean = acc[v].first / acc[v].second;
  return out;
}

}  // namespace fairshare::netsim
