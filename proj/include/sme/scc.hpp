#pragma once

#include <cstdint>
#include <vector>

#include "sme/graph.hpp"

namespace sme {

// Strongly connected components plus a topological order of the
// condensation: for every edge (u, v) crossing components,
// topo_index_of[component_of[u]] < topo_index_of[component_of[v]].
struct SCCDecomposition {
  std::vector<std::uint32_t> component_of;            // per node
  std::vector<std::uint32_t> topo_order;              // component id at each topo position
  std::vector<std::uint32_t> topo_index_of;           // per component
  std::vector<std::vector<NodeId>> component_members; // per component, ascending node id

  std::uint32_t num_components() const {
    return static_cast<std::uint32_t>(topo_order.size());
  }
};

// Iterative Tarjan. Components are emitted in reverse topological order of
// the condensation, which yields the topological indices directly.
SCCDecomposition tarjan_scc(const DirectedGraph& g);

}  // namespace sme
