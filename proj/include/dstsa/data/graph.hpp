#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace dstsa::data {

// Skeleton as a rooted tree over V joints.
struct GraphSpec {
  std::string name;
  std::size_t joints = 0;
  std::size_t root = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // (child, parent)
  std::vector<long> parent;                                 // -1 at the root
  std::vector<std::vector<int>> hops;                       // V x V BFS distances
  // Finger (or limb) chains used by the synthetic generator: each entry lists
  // joints from the base outward.
  std::vector<std::vector<std::size_t>> chains;

  // Neighbour lists (both directions) derived from `edges`.
  std::vector<std::vector<std::size_t>> neighbours() const;
};

// Builds parent/hop tables and checks the edge list forms a tree rooted at
// `root`; throws ConfigError otherwise.
GraphSpec make_graph(std::string name, std::size_t joints, std::size_t root,
                     std::vector<std::pair<std::size_t, std::size_t>> edges,
                     std::vector<std::vector<std::size_t>> chains = {});

// 22-joint hand: wrist 0, palm 1, thumb 2-5 hanging off the wrist, and the
// index, middle, ring and pinky chains (6-9, 10-13, 14-17, 18-21) off the palm.
GraphSpec hand22();

// Path 0 - 1 - ... - (V-1) rooted at 0.
GraphSpec chain_graph(std::size_t joints);

// 25-joint body rooted at the spine middle.
GraphSpec ntu25();

// Looks up "hand22", "ntu25" or "chain<V>".
GraphSpec graph_by_name(const std::string& name);

}  // namespace dstsa::data
