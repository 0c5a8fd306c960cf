// Copyright (c) 2026 decentsim authors
// Use of this source code is governed by an Apache-2.0
// license that can be found in the LICENSE file or at
// https://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include "decent/component.hpp"

// Chord-style distributed hash table where every node is a component, node
// identifiers derive from the platform seal key (one identity per platform
// and authorization list), and stored records are sealed at rest.
//
// Lookups are iterative: the requester contacts each hop itself over
// short-lived, ticket-resumed channels. Each node runs two listener ports:
// "peer" answers hop queries and storage requests from other nodes without
// ever calling out (which keeps node-to-node request cycles deadlock-free),
// and "svc" serves clients, proxying lookups and data operations.
namespace decent::dht {

using ChordId = std::uint64_t;

inline constexpr int kFingerBits = 64;

// x in (a, b] on the 2^64 ring; a == b spans the whole ring.
bool in_half_open(ChordId x, ChordId a, ChordId b);
// x in (a, b), empty when a == b... wraps like the above otherwise.
bool in_open(ChordId x, ChordId a, ChordId b);

ChordId key_id(ByteView key);

// Identifier bound to (platform, measurement, authorization list) through
// the seal-key hierarchy: relaunching the same code with the same list on
// the same platform lands on the same ring position.
ChordId seal_derived_id(const component::ComponentContext& ctx);

struct NodeRef {
  ChordId id = 0;
  std::string node;  // fabric node name

  bool operator==(const NodeRef&) const = default;
};

class LookupFailed : public std::runtime_error {
 public:
  explicit LookupFailed(const std::string& what)
      : std::runtime_error("lookup: " + what) {}
};

struct DhtOptions {
  std::string node_service = "DecentHT";   // name nodes expect of each other
  std::string client_service;              // empty => open client port
  std::optional<ChordId> fixed_id;         // benchmark mode: explicit id
  int client_workers = 1;
  int peer_workers = 1;
  Micros rpc_timeout = 5 * kSecond;
};

// Result of one data operation, with routing cost attached.
struct OpStats {
  int hops = 0;  // peer RPCs issued for the lookup portion
};

class DhtNode {
 public:
  DhtNode(component::ComponentPtr ctx, DhtOptions options = {});

  ChordId id() const { return self_.id; }
  NodeRef self_ref() const { return self_; }

  void create();  // first node of a ring
  void join(const NodeRef& bootstrap);
  void stabilize();
  void fix_fingers();
  void start_service();

  // Iterative lookup starting from this node.
  NodeRef lookup(ChordId target, OpStats* stats = nullptr);
  void put(ByteView key, ByteView value, OpStats* stats = nullptr);
  // nullopt on unknown key; throws RecordTampered when the stored blob no
  // longer authenticates.
  std::optional<Bytes> get(ByteView key, OpStats* stats = nullptr);

  NodeRef successor() const;
  std::optional<NodeRef> predecessor() const;
  std::size_t store_size() const;
  // Host-visible at-rest bytes (sealed blobs), for taint inspection.
  std::vector<Bytes> storage_dump() const;
  // Host interference: flip one ciphertext byte of the stored record.
  bool corrupt_record(ByteView key);

  component::ComponentContext& context() { return *ctx_; }

  // Per-task ticket cache for transient peer channels. Every task serving
  // client requests owns one.
  class RequesterPool {
   public:
    RequesterPool() = default;

   private:
    friend class DhtNode;
    std::map<std::string, channel::ResumptionTicket> tickets_;
  };

  // Serves one client channel until it closes; usable from benchmark
  // transports that accept channels by other means.
  void serve_client(channel::SecureChannel& ch, RequesterPool& pool);

  // Pooled variants amortize peer-channel setup across calls; bulk loaders
  // and service loops use these.
  void put_pooled(RequesterPool& pool, ByteView key, ByteView value);
  std::optional<Bytes> get_pooled(RequesterPool& pool, ByteView key);

 private:
  friend class DhtClient;
  using Pool = RequesterPool;

  Bytes peer_rpc(Pool& pool, const NodeRef& target, std::uint8_t kind,
                 ByteView body);
  NodeRef lookup_from(Pool& pool, NodeRef start, ChordId target,
                      OpStats* stats);
  NodeRef closest_preceding(ChordId target) const;
  std::pair<NodeRef, bool> local_lookup_step(ChordId target) const;
  void serve_peer(channel::SecureChannel& ch);
  Bytes handle_peer_msg(std::uint8_t kind, ByteView body);

  void store_local(ByteView key, ByteView value);
  std::optional<Bytes> load_local(ByteView key, bool& tampered);

  component::ComponentPtr ctx_;
  DhtOptions options_;
  NodeRef self_;

  mutable std::mutex mu_;
  NodeRef successor_;
  std::optional<NodeRef> predecessor_;
  std::array<NodeRef, kFingerBits> fingers_;
  std::map<std::string, component::SealedBlob> store_;
};

class RecordTampered : public std::runtime_error {
 public:
  RecordTampered() : std::runtime_error("stored record failed authentication") {}
};

// Client-side handle used by benchmarks and the demo: talks to one access
// node per session over ticket-resumed channels.
class DhtClient {
 public:
  DhtClient(component::ComponentPtr ctx, std::string dht_service,
            Micros rpc_timeout = 5 * kSecond);

  // Ends the current session: the next request performs a full handshake.
  void end_session();
  void set_access_node(const std::string& node);

  void put(ByteView key, ByteView value);
  std::optional<Bytes> get(ByteView key);

  std::uint64_t full_handshakes() const { return full_handshakes_; }
  std::uint64_t resumptions() const { return resumptions_; }

 private:
  Bytes request(std::uint8_t kind, ByteView body);

  component::ComponentPtr ctx_;
  std::string dht_service_;
  Micros rpc_timeout_;
  std::string access_node_;
  std::optional<channel::ResumptionTicket> ticket_;
  std::uint64_t full_handshakes_ = 0;
  std::uint64_t resumptions_ = 0;
};

}  // namespace decent::dht
