#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "rnnkit/common.hpp"

namespace rnnkit {

// Each output model maps a hidden state h to a distribution over targets and
// provides the negative log-likelihood together with analytic gradients.
// They all follow the same shape so BPTT can be written once:
//
//   using Target = ...;
//   struct Grads {...};                    // parameter-shaped gradient container
//   Grads zero_grads() const;
//   double loss(h, y, grad_h, acc) const;  // returns nll; optionally writes
//                                          // d nll/d h and accumulates into acc
//
// plus flatten_params/unflatten_params/trainable_size describing the flat
// parameter layout used by the optimizer and the finite-difference oracle.

namespace detail {
inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}
}  // namespace detail

/// Per-call result bundle for a single (h, target) pair.
template <class Model>
struct LossResult {
  double nll = 0.0;
  Vec grad_h;
  typename Model::Grads grad_out;
};

template <class Model>
LossResult<Model> eval_loss(const Model& m, const Vec& h,
                            const typename Model::Target& y) {
  LossResult<Model> r;
  r.grad_out = m.zero_grads();
  r.nll = m.loss(h, y, &r.grad_h, &r.grad_out);
  return r;
}

// ---------------------------------------------------------------------------
// Independent Bernoulli units, one per label. nll is the summed binary
// cross-entropy, computed through softplus so saturated logits stay finite.
class BernoulliOutput {
 public:
  Mat w_out;  // d x n_h
  Vec b_out;  // d

  using Target = Vec;  // d entries in {0, 1}
  struct Grads {
    Mat w_out;
    Vec b_out;
    int size() const { return static_cast<int>(w_out.size() + b_out.size()); }
    void flatten(double* dst) const;
  };

  int d() const { return static_cast<int>(b_out.size()); }
  int n_h() const { return static_cast<int>(w_out.cols()); }

  Grads zero_grads() const;
  double loss(const Vec& h, const Target& target, Vec* grad_h, Grads* acc) const;

  Vec probabilities(const Vec& h) const;  // sigmoid(w_out h + b_out)
  Vec predict_bits(const Vec& h) const;   // marginals thresholded at 0.5

  int trainable_size() const { return static_cast<int>(w_out.size() + b_out.size()); }
  void flatten_params(double* dst) const;
  void unflatten_params(const double* src);
  std::vector<std::pair<std::string, int>> grad_blocks() const;
};

BernoulliOutput init_bernoulli_output(int d, int n_h, double weight_std,
                                      std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Full softmax over V symbols.
class SoftmaxOutput {
 public:
  Mat w_out;  // V x n_h
  Vec b_out;  // V

  using Target = int;
  struct Grads {
    Mat w_out;
    Vec b_out;
    int size() const { return static_cast<int>(w_out.size() + b_out.size()); }
    void flatten(double* dst) const;
  };

  int vocab() const { return static_cast<int>(b_out.size()); }
  int n_h() const { return static_cast<int>(w_out.cols()); }

  Grads zero_grads() const;
  double loss(const Vec& h, Target target, Vec* grad_h, Grads* acc) const;
  Vec log_probabilities(const Vec& h) const;

  int trainable_size() const { return static_cast<int>(w_out.size() + b_out.size()); }
  void flatten_params(double* dst) const;
  void unflatten_params(const double* src);
  std::vector<std::pair<std::string, int>> grad_blocks() const;
};

SoftmaxOutput init_softmax_output(int vocab, int n_h, double weight_std,
                                  std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Two-level factorization p(w|h) = p(class(w)|h) * p(w | class(w), h). Only
// the class layer and the rows of the target's class are touched per call,
// which is the point of the construction.
class ClassFactorizedOutput {
 public:
  Mat class_w;  // K x n_h
  Vec class_b;  // K
  Mat word_w;   // V x n_h
  Vec word_b;   // V
  std::vector<int> class_of;              // V -> class id
  std::vector<std::vector<int>> members;  // class id -> ascending word ids

  using Target = int;
  struct Grads {
    Mat class_w;
    Vec class_b;
    Mat word_w;
    Vec word_b;
    int size() const {
      return static_cast<int>(class_w.size() + class_b.size() + word_w.size() +
                              word_b.size());
    }
    void flatten(double* dst) const;
  };

  int vocab() const { return static_cast<int>(word_b.size()); }
  int num_classes() const { return static_cast<int>(class_b.size()); }
  int n_h() const { return static_cast<int>(class_w.cols()); }

  // Throws ConfigError unless class_of/members form a partition of [0, V).
  void validate_partition() const;

  Grads zero_grads() const;
  double loss(const Vec& h, Target target, Vec* grad_h, Grads* acc) const;

  int trainable_size() const {
    return static_cast<int>(class_w.size() + class_b.size() + word_w.size() +
                            word_b.size());
  }
  void flatten_params(double* dst) const;
  void unflatten_params(const double* src);
  std::vector<std::pair<std::string, int>> grad_blocks() const;
};

ClassFactorizedOutput init_class_factorized_output(
    const std::vector<int>& class_of, int num_classes, int n_h, double weight_std,
    std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Conditional NADE over d binary visibles: an autoregressive factorization
//   p(v|h) = prod_i p(v_i | v_{<i}, h)
// with a shared hidden recurrence
//   a_1 = c + cond_c h,      a_{i+1} = a_i + nade_w[:,i] v_i,
//   p_i = sigmoid(nade_v[i,:] sigmoid(a_i) + b_i),  b = base_b + cond_b h.
// The RNN state conditions both bias sets. The likelihood depends on the
// visible ordering (fixed here as pitch order).
class NadeOutput {
 public:
  Mat nade_w;         // n_nade x d, column i enters the recurrence after v_i
  Mat nade_v;         // d x n_nade, row i scores visible i
  Vec base_b_visible; // d
  Vec base_c_hidden;  // n_nade
  Mat cond_b;         // d x n_h
  Mat cond_c;         // n_nade x n_h

  using Target = Vec;  // d entries in {0, 1}
  struct Grads {
    Mat nade_w;
    Mat nade_v;
    Vec base_b_visible;
    Vec base_c_hidden;
    Mat cond_b;
    Mat cond_c;
    int size() const {
      return static_cast<int>(nade_w.size() + nade_v.size() + base_b_visible.size() +
                              base_c_hidden.size() + cond_b.size() + cond_c.size());
    }
    void flatten(double* dst) const;
  };

  int d() const { return static_cast<int>(base_b_visible.size()); }
  int n_nade() const { return static_cast<int>(base_c_hidden.size()); }
  int n_h() const { return static_cast<int>(cond_b.cols()); }

  Grads zero_grads() const;
  double loss(const Vec& h, const Target& target, Vec* grad_h, Grads* acc) const;

  /// Exact probability of every one of the 2^d configurations, bit i of the
  /// index holding v_i. Only for d <= 12; used as a normalization oracle.
  std::vector<double> enumerate(const Vec& h) const;

  /// Greedy decode: threshold each conditional at 0.5 given the already
  /// thresholded prefix.
  Vec predict_bits(const Vec& h) const;

  int trainable_size() const {
    return static_cast<int>(nade_w.size() + nade_v.size() + base_b_visible.size() +
                            base_c_hidden.size() + cond_b.size() + cond_c.size());
  }
  void flatten_params(double* dst) const;
  void unflatten_params(const double* src);
  std::vector<std::pair<std::string, int>> grad_blocks() const;
};

NadeOutput init_nade_output(int d, int n_nade, int n_h, double weight_std,
                            std::mt19937_64& rng);

// ---------------------------------------------------------------------------
/// Frame-level accuracy sum_t TP_t / sum_t (TP_t + FP_t + FN_t) for d x T
/// bit matrices. Frames with no active or predicted note contribute nothing.
/// Returns 1.0 when the denominator is empty (nothing to predict, nothing
/// predicted).
double frame_accuracy(const Mat& predictions, const Mat& targets);

}  // namespace rnnkit
