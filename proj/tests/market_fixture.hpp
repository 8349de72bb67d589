// Copyright 2026 The fairshare Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fairshare/actors.hpp>
#include <fairshare/incentives.hpp>
#include <fairshare/ledger.hpp>

#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace fairshare::testing {

/// A publisher, n facilitators, a few clients and an auditor wired to one
/// ledger through a LocalNetwork.
struct Market {
  std::map<PartyId, crypto::KeyPair> keys;
  std::unique_ptr<ledger::Ledger> ledger;
  std::unique_ptr<actors::LocalNetwork> net;
  std::vector<PartyId> facilitator_ids;
  std::uint64_t seed = 0;

  Market(std::uint32_t n, std::uint64_t seed_value, Amount client_funds = Amount::units(1000),
         std::uint32_t n_clients = 2)
      : seed(seed_value) {
    ledger::Genesis g;
    auto add = [&](const PartyId& id, ledger::Role role, Amount balance) {
      keys.emplace(id, crypto::keypair_from_seed(as_bytes(id)));
      g.parties.push_back({id, role, keys.at(id).public_key, balance});
    };
    add("pub", ledger::Role::publisher, Amount{});
    add("aud", ledger::Role::auditor, Amount{});
    for (std::uint32_t i = 0; i < n; ++i) {
      facilitator_ids.push_back("f" + std::to_string(i));
      add(facilitator_ids.back(), ledger::Role::facilitator, Amount{});
    }
    for (std::uint32_t i = 0; i < n_clients; ++i) {
      add("c" + std::to_string(i), ledger::Role::client, client_funds);
    }
    ledger = std::make_unique<ledger::Ledger>(std::move(ledger::Ledger::from_genesis(g)).value());
    net = std::make_unique<actors::LocalNetwork>(*ledger);
    for (std::uint32_t i = 0; i < n; ++i) {
      net->add_facilitator(actors::Facilitator(facilitator_ids[i], keys.at(facilitator_ids[i]).secret_key,
                                               actors::Behavior::honest, seed * 1000 + i));
    }
  }

  actors::Publisher publisher() const { return {"pub", keys.at("pub").secret_key}; }

  actors::PublisherSession session(Bytes file, std::uint32_t k, Amount price = Amount::units(1),
                                   double f_hat = 0.0) const {
    const auto n = static_cast<std::uint32_t>(facilitator_ids.size());
    return {"content", std::move(file), {k, n}, price,
            incentives::payout_for_price(price, n, f_hat), facilitator_ids};
  }

  actors::ClientSession client(const PartyId& id, const crypto::Uri& uri, std::string req_id,
                               actors::FetchStrategy s = actors::FetchStrategy::lazy) const {
    return {id, keys.at(id).secret_key, uri, std::move(req_id), s, seed ^ 0x5eed};
  }

  crypto::SignedCall auditor_call(std::string_view op, const crypto::Uri& uri) const {
    return crypto::sign_call("aud", std::string(op), ledger::payload::uri_only(uri),
                             keys.at("aud").secret_key);
  }
};

}  // namespace fairshare::testing
