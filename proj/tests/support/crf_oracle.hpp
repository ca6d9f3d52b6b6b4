#pragma once

#include <cmath>
#include <vector>

#include "topicflow/tensor/tensor.hpp"

namespace topicflow::testing {

// Brute-force CRF oracles: enumerate all K^T tag sequences in lexicographic order.
struct BruteForce {
  std::vector<std::size_t> best_path;
  double best_score = -INFINITY;
  double sum_exp = 0.0;
};

inline BruteForce enumerate_paths(const tensor::Tensor& e, const tensor::Tensor& tr) {
  const std::size_t T = e.rows(), K = e.cols();
  BruteForce out;
  std::vector<std::size_t> path(T, 0);
  while (true) {
    double s = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      s += e.at(t, path[t]);
      if (t) s += tr.at(path[t - 1], path[t]);
    }
    out.sum_exp += std::exp(s);
    if (s > out.best_score) {
      out.best_score = s;
      out.best_path = path;
    }
    std::size_t t = T;
    while (t > 0) {
      --t;
      if (++path[t] < K) break;
      path[t] = 0;
      if (t == 0) return out;
    }
    if (T == 0) return out;
  }
}

}  // namespace topicflow::testing
