#include "iaqm/network.hpp"

#include <stdexcept>

#include "iaqm/codel.hpp"

namespace iaqm::sim {

NodeId Network::add_node(NodeKind kind, std::string name) {
  nodes_.push_back(Node{kind, std::move(name), {}, nullptr, {}, {}});
  return static_cast<NodeId>(nodes_.size() - 1);
}

Link& Network::connect(NodeId from, NodeId to, LinkConfig config,
                       std::unique_ptr<aqm::QueueDisc> disc) {
  if (from >= nodes_.size() || to >= nodes_.size()) {
    throw std::out_of_range("connect: unknown node");
  }
  links_.push_back(std::make_unique<Link>(sim_, config, std::move(disc)));
  link_ends_.emplace_back(from, to);
  Link& link = *links_.back();
  link.set_receiver([this, from, to](Packet&& p) { arrive(to, from, std::move(p)); });
  return link;
}

Link* Network::link_between(NodeId from, NodeId to) const {
  for (size_t i = 0; i < links_.size(); ++i) {
    if (link_ends_[i].first == from && link_ends_[i].second == to) return links_[i].get();
  }
  return nullptr;
}

void Network::add_route(NodeId at, NodeId dst, Link& via) { nodes_.at(at).routes[dst] = &via; }

void Network::set_default_route(NodeId at, Link& via) { nodes_.at(at).default_route = &via; }

void Network::set_handler(NodeId host, Handler h) { nodes_.at(host).handler = std::move(h); }

void Network::add_observer(NodeId node, Observer o) {
  nodes_.at(node).observers.push_back(std::move(o));
}

void Network::send_from(NodeId node, Packet pkt) {
  Node& n = nodes_.at(node);
  auto it = n.routes.find(pkt.dst());
  Link* via = it != n.routes.end() ? it->second : n.default_route;
  if (via == nullptr) {
    throw std::logic_error("no route from " + n.name + " to node " + std::to_string(pkt.dst()));
  }
  via->send(std::move(pkt));
}

void Network::arrive(NodeId at, NodeId from, Packet&& pkt) {
  Node& n = nodes_[at];
  for (auto& obs : n.observers) obs(pkt, from);
  if (pkt.dst() == at) {
    if (n.handler) n.handler(std::move(pkt));
    return;
  }
  send_from(at, std::move(pkt));
}

Dumbbell build_dumbbell(Network& net, const DumbbellSpec& spec,
                        std::unique_ptr<aqm::QueueDisc> r1_disc) {
  Dumbbell d;
  d.r1 = net.add_node(NodeKind::kRouter, "R1");
  d.r2 = net.add_node(NodeKind::kRouter, "R2");

  auto host_q = [&] { return std::make_unique<aqm::TailDrop>(spec.host_queue_limit); };
  auto router_q = [&] { return std::make_unique<aqm::TailDrop>(spec.router_hard_limit); };

  d.bottleneck = &net.connect(d.r1, d.r2, spec.bottleneck, std::move(r1_disc));
  d.bottleneck_reverse = &net.connect(d.r2, d.r1, spec.bottleneck, router_q());
  net.set_default_route(d.r1, *d.bottleneck);
  net.set_default_route(d.r2, *d.bottleneck_reverse);

  auto attach = [&](NodeId router, const LinkConfig& cfg, const std::string& name) {
    const NodeId h = net.add_node(NodeKind::kHost, name);
    Link& up = net.connect(h, router, cfg, host_q());
    Link& down = net.connect(router, h, cfg, router_q());
    net.set_default_route(h, up);
    net.add_route(router, h, down);
    return h;
  };

  for (size_t i = 0; i < spec.b_links.size(); ++i) {
    d.hosts_b.push_back(attach(d.r1, spec.b_links[i], "B" + std::to_string(i)));
  }
  for (size_t i = 0; i < spec.a_links.size(); ++i) {
    d.hosts_a.push_back(attach(d.r2, spec.a_links[i], "A" + std::to_string(i)));
  }
  d.monitor_b = attach(d.r1, spec.monitor_b_link, "MonB");
  d.monitor_a = attach(d.r2, spec.monitor_a_link, "MonA");
  return d;
}

}  // namespace iaqm::sim
