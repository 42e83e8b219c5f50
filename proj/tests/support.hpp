#pragma once

#include "rdlab/network.hpp"

#include <random>
#include <vector>

namespace rdlab::test {

/// Random valid reaction: q in [2, max_q], coefficients in [0, max_coeff],
/// no catalyzer, sign change in beta - alpha.
inline ReactionNetwork random_network(std::mt19937_64& rng, int max_q = 5, int max_coeff = 3) {
  std::uniform_int_distribution<int> q_dist(2, max_q);
  std::uniform_int_distribution<int> c_dist(0, max_coeff);
  std::uniform_real_distribution<double> rate(0.2, 3.0);
  for (;;) {
    const int q = q_dist(rng);
    std::vector<int> a(q), b(q);
    bool ok = true, pos = false, neg = false;
    for (int i = 0; i < q; ++i) {
      a[i] = c_dist(rng);
      b[i] = c_dist(rng);
      ok = ok && a[i] != b[i];
      pos = pos || b[i] > a[i];
      neg = neg || b[i] < a[i];
    }
    if (ok && pos && neg) return ReactionNetwork(a, b, rate(rng), rate(rng));
  }
}

inline std::vector<double> random_means(std::mt19937_64& rng, std::size_t q, double lo = 0.1,
                                        double hi = 3.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> m(q);
  for (auto& x : m) x = d(rng);
  return m;
}

}  // namespace rdlab::test
