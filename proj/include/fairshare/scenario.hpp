// Copyright 2026 The fairshare Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Scenario files: parties with genesis balances, an optional simulator
// section, and a script of protocol actions for the in-process demo.

#include <fairshare/actors.hpp>
#include <fairshare/incentives.hpp>
#include <fairshare/ledger.hpp>
#include <fairshare/netsim.hpp>

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fairshare::scenario {

using json = nlohmann::json;

/// Raised for any schema or reference error; always maps to ConfigInvalid.
class ScenarioError : public Error {
 public:
  explicit ScenarioError(const std::string& detail) : Error(Errc::config_invalid, detail) {}
};

struct PartySpec {
  PartyId id;
  ledger::Role role = ledger::Role::client;
  Amount balance;
  actors::Behavior behavior = actors::Behavior::honest;
};

enum class ActionKind { publish, buy, censor, uncensor, complaint, set_profile };

struct Action {
  ActionKind kind = ActionKind::publish;
  PartyId actor;
  std::string content;
  // publish
  std::optional<std::string> text;
  std::uint64_t size = 0;
  std::uint32_t k = 0;
  Amount price;
  double f_hat = 0.0;
  std::vector<PartyId> facilitators;
  // buy
  actors::FetchStrategy strategy = actors::FetchStrategy::lazy;
  // set_profile
  actors::Behavior behavior = actors::Behavior::honest;
  Errc expect = Errc::ok;
};

struct Scenario {
  std::uint64_t seed = 1;
  std::vector<PartySpec> parties;
  std::vector<Action> actions;
  std::optional<netsim::SimConfig> sim;
};

namespace detail {

inline void only_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw ScenarioError(std::string(where) + " must be an object");
  for (const auto& [k, _] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw ScenarioError("unknown field '" + k + "' in " + std::string(where));
    }
  }
}

template <typename T>
T get(const json& j, const char* key, std::string_view where) {
  if (!j.contains(key)) throw ScenarioError("missing field '" + std::string(key) + "' in " + std::string(where));
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ScenarioError("field '" + std::string(key) + "' in " + std::string(where) + " has the wrong type");
  }
}

template <typename T>
T get_or(const json& j, const char* key, std::string_view where, T fallback) {
  return j.contains(key) ? get<T>(j, key, where) : fallback;
}

inline Amount amount(const json& j, const char* key, std::string_view where, Amount fallback = {}) {
  if (!j.contains(key)) return fallback;
  auto a = Amount::parse(get<std::string>(j, key, where));
  if (!a) throw ScenarioError("bad amount in " + std::string(where));
  return *a;
}

inline actors::Behavior behavior(const std::string& s) {
  auto b = actors::behavior_from_string(s);
  if (!b) throw ScenarioError("unknown behavior '" + s + "'");
  return *b;
}

inline actors::FetchStrategy strategy(const std::string& s) {
  auto v = actors::strategy_from_string(s);
  if (!v) throw ScenarioError("unknown strategy '" + s + "'");
  return *v;
}

inline ledger::Role role(const std::string& s) {
  static const std::map<std::string, ledger::Role, std::less<>> roles{
      {"publisher", ledger::Role::publisher},
      {"facilitator", ledger::Role::facilitator},
      {"client", ledger::Role::client},
      {"auditor", ledger::Role::auditor}};
  auto it = roles.find(s);
  if (it == roles.end()) throw ScenarioError("unknown role '" + s + "'");
  return it->second;
}

inline netsim::SimConfig sim_config(const json& j) {
  constexpr std::string_view where = "sim";
  only_keys(j, where,
            {"n_facilitators", "k", "n", "file_size_bytes", "latency_ms", "latency_overrides",
             "bandwidth_bytes_per_ms", "n_clients", "requests_per_client", "faults", "strategy",
             "ledger_check", "commit_delay_ms", "client_chunk_ms", "request_timeout_ms",
             "pending_timeout_ms", "failure_rate", "price"});
  netsim::SimConfig c;
  c.n_facilitators = get_or(j, "n_facilitators", where, c.n_facilitators);
  c.coding.k = get_or(j, "k", where, c.coding.k);
  c.coding.n = get_or(j, "n", where, c.coding.n);
  c.file_size_bytes = get_or(j, "file_size_bytes", where, c.file_size_bytes);
  c.latency_ms = get_or(j, "latency_ms", where, c.latency_ms);
  c.bandwidth_bytes_per_ms = get_or(j, "bandwidth_bytes_per_ms", where, c.bandwidth_bytes_per_ms);
  c.n_clients = get_or(j, "n_clients", where, c.n_clients);
  c.requests_per_client = get_or(j, "requests_per_client", where, c.requests_per_client);
  c.ledger_check_enabled = get_or(j, "ledger_check", where, c.ledger_check_enabled);
  c.commit_delay_ms = get_or(j, "commit_delay_ms", where, c.commit_delay_ms);
  c.client_chunk_ms = get_or(j, "client_chunk_ms", where, c.client_chunk_ms);
  c.request_timeout_ms = get_or(j, "request_timeout_ms", where, c.request_timeout_ms);
  c.pending_timeout_ms = get_or(j, "pending_timeout_ms", where, c.pending_timeout_ms);
  c.failure_rate = get_or(j, "failure_rate", where, c.failure_rate);
  c.price = amount(j, "price", where, c.price);
  if (j.contains("strategy")) c.strategy = strategy(get<std::string>(j, "strategy", where));
  if (j.contains("faults")) {
    const json& f = j.at("faults");
    if (!f.is_object()) throw ScenarioError("sim.faults must map facilitator ids to behaviors");
    for (const auto& [id, b] : f.items()) {
      if (!b.is_string()) throw ScenarioError("sim.faults values must be behavior names");
      c.faults[id] = behavior(b.get<std::string>());
    }
  }
  if (j.contains("latency_overrides")) {
    const json& list = j.at("latency_overrides");
    if (!list.is_array()) throw ScenarioError("sim.latency_overrides must be an array");
    for (const json& o : list) {
      only_keys(o, "latency override", {"a", "b", "latency_ms"});
      c.latency_overrides.push_back({get<std::string>(o, "a", "latency override"),
                                     get<std::string>(o, "b", "latency override"),
                                     get<double>(o, "latency_ms", "latency override")});
    }
  }
  return c;
}

inline Action action(const json& j, std::size_t index) {
  const std::string where = "action " + std::to_string(index);
  const std::string kind = get<std::string>(j, "do", where);
  Action a;
  if (j.contains("expect")) {
    auto e = errc_from_string(get<std::string>(j, "expect", where));
    if (!e) throw ScenarioError("unknown error name in " + where);
    a.expect = *e;
  }
  if (kind == "publish") {
    only_keys(j, where, {"do", "publisher", "name", "text", "size", "k", "price", "f_hat", "facilitators", "expect"});
    a.kind = ActionKind::publish;
    a.actor = get<std::string>(j, "publisher", where);
    a.content = get<std::string>(j, "name", where);
    if (j.contains("text") == j.contains("size")) throw ScenarioError(where + " needs exactly one of text or size");
    if (j.contains("text")) a.text = get<std::string>(j, "text", where);
    a.size = get_or<std::uint64_t>(j, "size", where, 0);
    a.k = get<std::uint32_t>(j, "k", where);
    a.price = amount(j, "price", where, Amount::units(1));
    a.f_hat = get_or(j, "f_hat", where, 0.0);
    a.facilitators = get_or(j, "facilitators", where, std::vector<PartyId>{});
  } else if (kind == "buy") {
    only_keys(j, where, {"do", "client", "content", "strategy", "expect"});
    a.kind = ActionKind::buy;
    a.actor = get<std::string>(j, "client", where);
    a.content = get<std::string>(j, "content", where);
    if (j.contains("strategy")) a.strategy = strategy(get<std::string>(j, "strategy", where));
  } else if (kind == "censor" || kind == "uncensor") {
    only_keys(j, where, {"do", "auditor", "content", "expect"});
    a.kind = kind == "censor" ? ActionKind::censor : ActionKind::uncensor;
    a.actor = get<std::string>(j, "auditor", where);
    a.content = get<std::string>(j, "content", where);
  } else if (kind == "complaint") {
    only_keys(j, where, {"do", "facilitator", "content", "expect"});
    a.kind = ActionKind::complaint;
    a.actor = get<std::string>(j, "facilitator", where);
    a.content = get<std::string>(j, "content", where);
  } else if (kind == "set_profile") {
    only_keys(j, where, {"do", "facilitator", "behavior"});
    a.kind = ActionKind::set_profile;
    a.actor = get<std::string>(j, "facilitator", where);
    a.behavior = behavior(get<std::string>(j, "behavior", where));
  } else {
    throw ScenarioError("unknown action '" + kind + "' in " + where);
  }
  return a;
}

/// Cross-reference checks: actors exist with the right role, content is
/// published before it is used.
inline void check_references(const Scenario& s) {
  std::map<PartyId, ledger::Role> roles;
  for (const PartySpec& p : s.parties) {
    if (p.id.empty() || !roles.emplace(p.id, p.role).second) {
      throw ScenarioError("party ids must be unique and nonempty");
    }
  }
  auto need = [&](const PartyId& id, ledger::Role r, std::size_t i) {
    auto it = roles.find(id);
    if (it == roles.end() || it->second != r) {
      throw ScenarioError("action " + std::to_string(i) + " names '" + id + "' with the wrong role");
    }
  };
  std::set<std::string> published;
  for (std::size_t i = 0; i < s.actions.size(); ++i) {
    const Action& a = s.actions[i];
    switch (a.kind) {
      case ActionKind::publish:
        need(a.actor, ledger::Role::publisher, i);
        for (const PartyId& f : a.facilitators) need(f, ledger::Role::facilitator, i);
        if (a.text && a.text->empty()) throw ScenarioError("action " + std::to_string(i) + " publishes empty text");
        published.insert(a.content);
        continue;
      case ActionKind::buy: need(a.actor, ledger::Role::client, i); break;
      case ActionKind::censor:
      case ActionKind::uncensor: need(a.actor, ledger::Role::auditor, i); break;
      case ActionKind::complaint:
      case ActionKind::set_profile: need(a.actor, ledger::Role::facilitator, i); break;
    }
    if (a.kind != ActionKind::set_profile && !published.contains(a.content)) {
      throw ScenarioError("action " + std::to_string(i) + " uses unpublished content '" + a.content + "'");
    }
  }
}

}  // namespace detail

inline Scenario parse(const json& j) {
  detail::only_keys(j, "scenario", {"seed", "parties", "actions", "sim"});
  Scenario s;
  s.seed = detail::get_or<std::uint64_t>(j, "seed", "scenario", 1);
  if (j.contains("parties")) {
    const json& parties = j.at("parties");
    if (!parties.is_array()) throw ScenarioError("parties must be an array");
    for (const json& p : parties) {
      detail::only_keys(p, "party", {"id", "role", "balance", "behavior"});
      PartySpec spec;
      spec.id = detail::get<std::string>(p, "id", "party");
      spec.role = detail::role(detail::get<std::string>(p, "role", "party"));
      spec.balance = detail::amount(p, "balance", "party");
      if (p.contains("behavior")) {
        if (spec.role != ledger::Role::facilitator) throw ScenarioError("only facilitators have a behavior");
        spec.behavior = detail::behavior(detail::get<std::string>(p, "behavior", "party"));
      }
      s.parties.push_back(std::move(spec));
    }
  }
  if (j.contains("actions")) {
    const json& actions = j.at("actions");
    if (!actions.is_array()) throw ScenarioError("actions must be an array");
    for (std::size_t i = 0; i < actions.size(); ++i) s.actions.push_back(detail::action(actions[i], i));
  }
  if (j.contains("sim")) {
    s.sim = detail::sim_config(j.at("sim"));
    if (s.sim->validate() != Errc::ok) throw ScenarioError("sim section is not a valid configuration");
  }
  detail::check_references(s);
  return s;
}

inline Scenario parse_text(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("not valid JSON: ") + e.what());
  }
  return parse(j);
}

/// Simulator config of a scenario with the seed applied; defaults when the
/// scenario has no sim section.
inline netsim::SimConfig sim_config(const Scenario& s) {
  netsim::SimConfig c = s.sim.value_or(netsim::SimConfig{});
  c.seed = s.seed;
  return c;
}

struct DemoOutcome {
  Errc code = Errc::ok;
  /// Index of the action whose result differed from its expectation.
  std::optional<std::size_t> failed_action;
  bool unexpected_success = false;
  std::string transcript;
  std::string ledger_log;
  std::string ledger_snapshot;
};

inline crypto::KeyPair party_keys(const PartyId& id) {
  const std::string material = "fairshare-party/" + id;
  return crypto::keypair_from_seed(as_bytes(material));
}

/// Runs the action script against an in-process network.
inline DemoOutcome run_demo(const Scenario& s) {
  ledger::Genesis g;
  std::map<PartyId, crypto::KeyPair> keys;
  std::vector<PartyId> all_facilitators;
  for (const PartySpec& p : s.parties) {
    keys.emplace(p.id, party_keys(p.id));
    g.parties.push_back({p.id, p.role, keys.at(p.id).public_key, p.balance});
    if (p.role == ledger::Role::facilitator) all_facilitators.push_back(p.id);
  }
  auto built = ledger::Ledger::from_genesis(g);
  if (!built) throw ScenarioError("genesis rejected: " + std::string(to_string(built.error())));
  ledger::Ledger ledger = std::move(built).value();
  actors::LocalNetwork net(ledger);
  for (std::size_t i = 0; i < s.parties.size(); ++i) {
    const PartySpec& p = s.parties[i];
    if (p.role != ledger::Role::facilitator) continue;
    net.add_facilitator(actors::Facilitator(p.id, keys.at(p.id).secret_key, p.behavior, s.seed * 7919 + i));
  }

  std::mt19937_64 rng(s.seed);
  std::map<std::string, crypto::Uri> uris;
  std::map<std::string, crypto::Digest> file_hashes;
  std::ostringstream out;
  DemoOutcome outcome;

  auto short_hex = [](const crypto::Digest& d) { return d.hex().substr(0, 16); };

  for (std::size_t i = 0; i < s.actions.size(); ++i) {
    const Action& a = s.actions[i];
    Errc result = Errc::ok;
    out << "[" << i << "] ";
    switch (a.kind) {
      case ActionKind::publish: {
        Bytes file;
        if (a.text) {
          file.assign(a.text->begin(), a.text->end());
        } else {
          file.resize(a.size);
          for (auto& b : file) b = static_cast<std::uint8_t>(rng());
        }
        const std::vector<PartyId> fids = a.facilitators.empty() ? all_facilitators : a.facilitators;
        const auto n = static_cast<std::uint32_t>(fids.size());
        actors::Publisher publisher(a.actor, keys.at(a.actor).secret_key);
        const Amount payout = n == 0 ? Amount{} : incentives::payout_for_price(a.price, n, a.f_hat);
        const crypto::Digest file_hash = crypto::sha256(file);
        auto plan = publisher.prepare({a.content, std::move(file), {a.k, n}, a.price, payout, fids});
        out << "publish " << a.content << " by " << a.actor << ": ";
        if (!plan) {
          result = plan.error();
          out << "rejected " << result << "\n";
          break;
        }
        auto report = net.upload(publisher, *plan);
        if (!report) {
          result = report.error();
          out << "failed " << result << "\n";
          break;
        }
        uris[a.content] = plan->listing.uri;
        file_hashes[a.content] = file_hash;
        std::size_t stored = 0;
        for (const auto& [_, d] : report->decisions) stored += d == actors::UploadDecision::stored ? 1 : 0;
        out << "uri " << short_hex(plan->listing.uri.digest) << ", " << a.k << "-of-" << n << ", stored "
            << stored << "/" << n << ", complaints " << report->complaints.size() << ", payout "
            << payout << " each\n";
        break;
      }
      case ActionKind::buy: {
        auto uri = uris.find(a.content);
        out << "buy " << a.content << " by " << a.actor << " (" << actors::to_string(a.strategy) << "): ";
        if (uri == uris.end()) {
          result = Errc::unknown_uri;
          out << "denied " << result << "\n";
          break;
        }
        actors::ClientSession client(a.actor, keys.at(a.actor).secret_key, uri->second,
                                     actors::make_req_id(rng), a.strategy, rng());
        auto file = net.purchase(client);
        if (!file) {
          result = file.error();
          out << "denied " << result << "\n";
          break;
        }
        const bool match = crypto::sha256(*file) == file_hashes.at(a.content);
        out << (match ? "file hash verified" : "file hash MISMATCH") << " (" << file->size() << " bytes, "
            << client.contacts() << " contacts)\n";
        if (!match) result = Errc::uri_mismatch;
        break;
      }
      case ActionKind::censor:
      case ActionKind::uncensor: {
        const auto op = a.kind == ActionKind::censor ? ledger::op::kCensor : ledger::op::kUncensor;
        const auto uri = uris.find(a.content);
        result = uri == uris.end()
                     ? Errc::unknown_uri
                     : ledger.submit(crypto::sign_call(a.actor, std::string(op), ledger::payload::uri_only(uri->second),
                                                       keys.at(a.actor).secret_key));
        out << (a.kind == ActionKind::censor ? "censor " : "uncensor ") << a.content << " by " << a.actor << ": "
            << result << "\n";
        break;
      }
      case ActionKind::complaint: {
        const auto uri = uris.find(a.content);
        result = uri == uris.end()
                     ? Errc::unknown_uri
                     : ledger.submit(crypto::sign_call(a.actor, std::string(ledger::op::kComplaint),
                                                       ledger::payload::uri_only(uri->second),
                                                       keys.at(a.actor).secret_key));
        out << "complaint on " << a.content << " by " << a.actor << ": " << result << "\n";
        break;
      }
      case ActionKind::set_profile:
        net.facilitator(a.actor).set_behavior(a.behavior);
        out << "profile of " << a.actor << " set to " << actors::to_string(a.behavior) << "\n";
        break;
    }
    if (result != a.expect) {
      outcome.code = result;
      outcome.unexpected_success = result == Errc::ok;
      outcome.failed_action = i;
      out << "    expected " << a.expect << ", got " << result << "\n";
      break;
    }
    if (a.expect != Errc::ok) out << "    recorded as expected\n";
  }

  out << "balances:\n";
  for (const auto& [id, b] : ledger.balances()) out << "  " << id << " " << b << "\n";
  out << "audit height " << ledger.height() << ", state " << short_hex(ledger.state_digest()) << "\n";
  outcome.transcript = out.str();
  outcome.ledger_log = ledger::write_log(ledger);
  outcome.ledger_snapshot = ledger.snapshot();
  return outcome;
}

}  // namespace fairshare::scenario
