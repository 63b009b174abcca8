#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "iaqm/link.hpp"

namespace iaqm::sim {

enum class NodeKind { kHost, kRouter };

/// Nodes joined by unidirectional links with static routes.
class Network {
 public:
  using Handler = std::function<void(Packet&&)>;
  /// Sees every packet arriving at a node; `from` is the upstream node.
  using Observer = std::function<void(const Packet&, NodeId from)>;

  explicit Network(Simulator& sim) : sim_(sim) {}
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  NodeId add_node(NodeKind kind, std::string name);
  Link& connect(NodeId from, NodeId to, LinkConfig config,
                std::unique_ptr<aqm::QueueDisc> disc);

  void add_route(NodeId at, NodeId dst, Link& via);
  void set_default_route(NodeId at, Link& via);

  void set_handler(NodeId host, Handler h);
  void add_observer(NodeId node, Observer o);

  /// Injects a packet at `node`, routed toward pkt.dst().
  void send_from(NodeId node, Packet pkt);

  Simulator& sim() { return sim_; }
  size_t node_count() const { return nodes_.size(); }
  NodeKind kind(NodeId n) const { return nodes_.at(n).kind; }
  const std::string& name(NodeId n) const { return nodes_.at(n).name; }
  Link* link_between(NodeId from, NodeId to) const;

 private:
  struct Node {
    NodeKind kind;
    std::string name;
    std::unordered_map<NodeId, Link*> routes;
    Link* default_route = nullptr;
    Handler handler;
    std::vector<Observer> observers;
  };

  void arrive(NodeId at, NodeId from, Packet&& pkt);

  Simulator& sim_;
  std::vector<Node> nodes_;
  std::vector<std::unique_ptr<Link>> links_;
  std::vector<std::pair<NodeId, NodeId>> link_ends_;
};

/// The dumbbell used throughout: hosts B and a monitor behind R1, hosts A and
/// the peer monitor behind R2, one R1<->R2 bottleneck.
struct DumbbellSpec {
  std::vector<LinkConfig> b_links;  // host B i <-> R1
  std::vector<LinkConfig> a_links;  // host A i <-> R2
  LinkConfig bottleneck;
  LinkConfig monitor_b_link;
  LinkConfig monitor_a_link;
  uint32_t router_hard_limit = 1000;
  uint32_t host_queue_limit = 10000;
};

struct Dumbbell {
  NodeId r1 = 0;
  NodeId r2 = 0;
  std::vector<NodeId> hosts_b;
  std::vector<NodeId> hosts_a;
  NodeId monitor_b = 0;
  NodeId monitor_a = 0;
  Link* bottleneck = nullptr;          // R1 -> R2, carries the AQM
  Link* bottleneck_reverse = nullptr;  // R2 -> R1
};

/// Builds the dumbbell. `r1_disc` becomes the R1->R2 egress discipline; all
/// other egresses are tail-drop.
Dumbbell build_dumbbell(Network& net, const DumbbellSpec& spec,
                        std::unique_ptr<aqm::QueueDisc> r1_disc);

}  // namespace iaqm::sim
