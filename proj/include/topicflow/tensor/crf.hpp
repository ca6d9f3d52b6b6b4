#pragma once

#include <vector>

#include "topicflow/tensor/tensor.hpp"

namespace topicflow::tensor {

// Linear-chain CRF over T x K emission scores and K x K transition scores,
// transitions[i][j] scoring tag i followed by tag j. There are no separate
// start/stop scores.

double crf_path_score(const Tensor& emissions, const Tensor& transitions,
                      const std::vector<std::size_t>& tags);

/// Forward algorithm in log space.
double crf_log_partition(const Tensor& emissions, const Tensor& transitions);

/// log p(tags | emissions) = score(tags) - log Z. Always <= 0.
double crf_log_likelihood(const Tensor& emissions, const Tensor& transitions,
                          const std::vector<std::size_t>& tags);

/// Gradients of the negative log-likelihood via forward-backward marginals.
/// Adds into `d_emissions` (T x K) and `d_transitions` (K x K); returns the NLL.
double crf_nll_backward(const Tensor& emissions, const Tensor& transitions,
                        const std::vector<std::size_t>& tags, Tensor& d_emissions,
                        Tensor& d_transitions);

/// Highest-scoring tag sequence. Among equal-scoring paths, the
/// lexicographically smallest one (lowest tag index first) is returned.
std::vector<std::size_t> crf_viterbi(const Tensor& emissions, const Tensor& transitions);

}  // namespace topicflow::tensor
