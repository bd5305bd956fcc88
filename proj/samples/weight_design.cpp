// Compares every weight method on the 5-agent star and a 3-cluster network.

#include <cstdio>

#include "cmab/cmab.hpp"

int main() {
  for (const char* name : {"star5", "cluster3"}) {
    const cmab::NamedGraph net = cmab::resolve_network(name);
    std::printf("%s (%d agents, %d edges)\n", net.name.c_str(), net.graph.size(), net.graph.edge_count());
    for (auto m : cmab::kAllMethods) {
      const cmab::BuiltWeights b = cmab::build_weights(net.graph, {m, cmab::kDefaultKappa});
      std::printf("  %-14s rho=%.6f tau=%s\n", std::string(cmab::to_string(m)).c_str(), b.weights.rho,
                  cmab::format_tau(b.weights.tau).c_str());
    }
  }
}
