#include "topicflow/tensor/crf.hpp"

#include <cmath>
#include <limits>

#include "topicflow/error.hpp"
#include "topicflow/tensor/layers.hpp"

namespace topicflow::tensor {

namespace {

void check(const Tensor& e, const Tensor& tr) {
  if (e.rank() != 2 || tr.rank() != 2 || tr.rows() != tr.cols() || e.cols() != tr.rows()) {
    throw ValidationError("crf: emissions " + shape_string(e.shape()) +
                          " incompatible with transitions " + shape_string(tr.shape()));
  }
}

// alpha[t][k] = log-sum of scores of prefixes ending in k at t.
Tensor forward_scores(const Tensor& e, const Tensor& tr) {
  const std::size_t T = e.rows(), K = e.cols();
  Tensor alpha = Tensor::matrix(T, K);
  for (std::size_t k = 0; k < K; ++k) alpha.at(0, k) = e.at(0, k);
  Vec buf(K);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t j = 0; j < K; ++j) buf[j] = alpha.at(t - 1, j) + tr.at(j, k);
      alpha.at(t, k) = e.at(t, k) + logsumexp(buf);
    }
  }
  return alpha;
}

Tensor backward_scores(const Tensor& e, const Tensor& tr) {
  const std::size_t T = e.rows(), K = e.cols();
  Tensor beta = Tensor::matrix(T, K);
  Vec buf(K);
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t j = 0; j < K; ++j) {
      for (std::size_t k = 0; k < K; ++k) buf[k] = tr.at(j, k) + e.at(t + 1, k) + beta.at(t + 1, k);
      beta.at(t, j) = logsumexp(buf);
    }
  }
  return beta;
}

}  // namespace

double crf_path_score(const Tensor& e, const Tensor& tr, const std::vector<std::size_t>& tags) {
  check(e, tr);
  double s = 0.0;
  for (std::size_t t = 0; t < tags.size(); ++t) {
    s += e.at(t, tags[t]);
    if (t > 0) s += tr.at(tags[t - 1], tags[t]);
  }
  return s;
}

double crf_log_partition(const Tensor& e, const Tensor& tr) {
  check(e, tr);
  Tensor alpha = forward_scores(e, tr);
  return logsumexp(alpha.row(e.rows() - 1));
}

double crf_log_likelihood(const Tensor& e, const Tensor& tr, const std::vector<std::size_t>& tags) {
  return crf_path_score(e, tr, tags) - crf_log_partition(e, tr);
}

double crf_nll_backward(const Tensor& e, const Tensor& tr, const std::vector<std::size_t>& tags,
                        Tensor& d_e, Tensor& d_tr) {
  check(e, tr);
  const std::size_t T = e.rows(), K = e.cols();
  Tensor alpha = forward_scores(e, tr);
  Tensor beta = backward_scores(e, tr);
  const double log_z = logsumexp(alpha.row(T - 1));
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < K; ++k) {
      d_e.at(t, k) += std::exp(alpha.at(t, k) + beta.at(t, k) - log_z);
    }
    d_e.at(t, tags[t]) -= 1.0;
  }
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t j = 0; j < K; ++j) {
      for (std::size_t k = 0; k < K; ++k) {
        d_tr.at(j, k) += std::exp(alpha.at(t - 1, j) + tr.at(j, k) + e.at(t, k) + beta.at(t, k) - log_z);
      }
    }
    d_tr.at(tags[t - 1], tags[t]) -= 1.0;
  }
  return log_z - crf_path_score(e, tr, tags);
}

std::vector<std::size_t> crf_viterbi(const Tensor& e, const Tensor& tr) {
  check(e, tr);
  const std::size_t T = e.rows(), K = e.cols();
  // best[t][k]: best score of a suffix starting at t with tag k. Decoding forward
  // with first-maximum selection yields the lexicographically smallest optimum.
  Tensor best = Tensor::matrix(T, K);
  for (std::size_t k = 0; k < K; ++k) best.at(T - 1, k) = e.at(T - 1, k);
  for (std::size_t t = T - 1; t-- > 0;) {
    for (std::size_t k = 0; k < K; ++k) {
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < K; ++j) m = std::max(m, tr.at(k, j) + best.at(t + 1, j));
      best.at(t, k) = e.at(t, k) + m;
    }
  }
  std::vector<std::size_t> path(T);
  path[0] = argmax(best.row(0));
  for (std::size_t t = 1; t < T; ++t) {
    std::size_t arg = 0;
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
      const double v = tr.at(path[t - 1], k) + best.at(t, k);
      if (v > m) {
        m = v;
        arg = k;
      }
    }
    path[t] = arg;
  }
  return path;
}

}  // namespace topicflow::tensor
