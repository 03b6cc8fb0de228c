#include "dstsa/data/graph.hpp"

#include <deque>

#include "dstsa/errors.hpp"

namespace dstsa::data {

std::vector<std::vector<std::size_t>> GraphSpec::neighbours() const {
  std::vector<std::vector<std::size_t>> out(joints);
  for (auto [child, par] : edges) {
    out[child].push_back(par);
    out[par].push_back(child);
  }
  return out;
}

GraphSpec make_graph(std::string name, std::size_t joints, std::size_t root,
                     std::vector<std::pair<std::size_t, std::size_t>> edges,
                     std::vector<std::vector<std::size_t>> chains) {
  if (joints == 0 || root >= joints) {
    throw ConfigError("graph " + name + ": root " + std::to_string(root) + " outside " +
                      std::to_string(joints) + " joints");
  }
  if (edges.size() != joints - 1) {
    throw ConfigError("graph " + name + ": a tree over " + std::to_string(joints) +
                      " joints needs " + std::to_string(joints - 1) + " edges, got " +
                      std::to_string(edges.size()));
  }
  GraphSpec g;
  g.name = std::move(name);
  g.joints = joints;
  g.root = root;
  g.edges = std::move(edges);
  g.chains = std::move(chains);
  g.parent.assign(joints, -1);
  for (auto [child, par] : g.edges) {
    if (child >= joints || par >= joints || child == par) {
      throw ConfigError("graph " + g.name + ": bad edge (" + std::to_string(child) + ", " +
                        std::to_string(par) + ")");
    }
    if (child == root || g.parent[child] != -1) {
      throw ConfigError("graph " + g.name + ": joint " + std::to_string(child) +
                        " has more than one parent or is the root");
    }
    g.parent[child] = static_cast<long>(par);
  }

  const auto adj = g.neighbours();
  g.hops.assign(joints, std::vector<int>(joints, -1));
  for (std::size_t s = 0; s < joints; ++s) {
    std::deque<std::size_t> queue{s};
    g.hops[s][s] = 0;
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      for (std::size_t w : adj[u]) {
        if (g.hops[s][w] < 0) {
          g.hops[s][w] = g.hops[s][u] + 1;
          queue.push_back(w);
        }
      }
    }
    for (std::size_t t = 0; t < joints; ++t) {
      if (g.hops[s][t] < 0) {
        throw ConfigError("graph " + g.name + ": joint " + std::to_string(t) +
                          " unreachable from " + std::to_string(s));
      }
    }
  }
  return g;
}

GraphSpec hand22() {
  std::vector<std::pair<std::size_t, std::size_t>> edges{{1, 0}, {2, 0}, {3, 2}, {4, 3}, {5, 4}};
  std::vector<std::vector<std::size_t>> chains{{2, 3, 4, 5}};
  for (std::size_t finger = 0; finger < 4; ++finger) {
    const std::size_t base = 6 + 4 * finger;
    edges.push_back({base, 1});
    for (std::size_t k = 1; k < 4; ++k) edges.push_back({base + k, base + k - 1});
    chains.push_back({base, base + 1, base + 2, base + 3});
  }
  return make_graph("hand22", 22, 0, std::move(edges), std::move(chains));
}

GraphSpec chain_graph(std::size_t joints) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<std::size_t> tail;
  for (std::size_t j = 1; j < joints; ++j) {
    edges.push_back({j, j - 1});
    tail.push_back(j);
  }
  std::vector<std::vector<std::size_t>> chains;
  if (!tail.empty()) chains.push_back(tail);
  return make_graph("chain" + std::to_string(joints), joints, 0, std::move(edges),
                    std::move(chains));
}

GraphSpec ntu25() {
  // 1-based NTU bone list, converted to (child, parent) around spine middle (joint 2).
  const std::vector<std::pair<std::size_t, std::size_t>> one_based{
      {1, 2},   {21, 2},  {3, 21},  {4, 3},   {5, 21},  {6, 5},   {7, 6},   {8, 7},
      {9, 21},  {10, 9},  {11, 10}, {12, 11}, {13, 1},  {14, 13}, {15, 14}, {16, 15},
      {17, 1},  {18, 17}, {19, 18}, {20, 19}, {22, 8},  {23, 8},  {24, 12}, {25, 12}};
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (auto [c, p] : one_based) edges.push_back({c - 1, p - 1});
  std::vector<std::vector<std::size_t>> chains{
      {4, 5, 6, 7}, {8, 9, 10, 11}, {12, 13, 14, 15}, {16, 17, 18, 19}, {2, 3}};
  return make_graph("ntu25", 25, 1, std::move(edges), std::move(chains));
}

GraphSpec graph_by_name(const std::string& name) {
  if (name == "hand22") return hand22();
  if (name == "ntu25") return ntu25();
  if (name.rfind("chain", 0) == 0 && name.size() > 5) {
    try {
      std::size_t used = 0;
      const long v = std::stol(name.substr(5), &used);
      if (used == name.size() - 5 && v >= 1) return chain_graph(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
    }
  }
  throw ConfigError("unknown graph '" + name + "' (expected hand22, ntu25 or chain<V>)");
}

}  // namespace dstsa::data
