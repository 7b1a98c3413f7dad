#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "rnnkit/common.hpp"

namespace rnnkit {

enum class Activation { Tanh, Sigmoid, Rectifier };

Activation activation_from_string(std::string_view name);
std::string to_string(Activation kind);

/// Settings for init_params. Weights are i.i.d. Gaussian, biases zero.
struct InitConfig {
  int n_h = 0;
  int n_x = 0;
  Activation activation = Activation::Tanh;
  double weight_std = 0.1;
  // Fraction of units whose leak coefficient is sampled from leak_interval;
  // the rest get leak 0 (a standard unit).
  double leaky_fraction = 0.0;
  std::array<double, 2> leak_interval{0.02, 0.2};
  // If set, rescale w_rec so its spectral radius equals this value.
  std::optional<double> spectral_radius;
};

/// Trainable parameters of the recurrent cell plus the fixed per-unit leak
/// coefficients. The state update is
///   h_t = leak .* h_{t-1} + (1 - leak) .* act(w_rec h_{t-1} + w_in x_t + b_h)
/// Leak coefficients are sampled at init and not trained.
struct RNNParams {
  Mat w_rec;  // n_h x n_h
  Mat w_in;   // n_h x n_x
  Vec b_h;    // n_h
  Vec leak;   // n_h, each in [0, 0.999]
  Activation activation = Activation::Tanh;
  int n_h = 0;
  int n_x = 0;

  // Throws ConfigError if shapes disagree, leaks are out of range, or any
  // entry is non-finite.
  void validate() const;

  // Flat layout of the trainable parameters: w_rec, w_in, b_h (column-major).
  int trainable_size() const { return n_h * n_h + n_h * n_x + n_h; }
  void flatten_params(double* dst) const;
  void unflatten_params(const double* src);
};

RNNParams init_params(const InitConfig& config, std::uint64_t seed);

/// Elementwise nonlinearity. Rectifier is max(0, z).
Vec activate(Activation kind, const Vec& preact);
/// Derivative of the nonlinearity w.r.t. its argument. The rectifier
/// subgradient at exactly 0 is taken as 0.
Vec activate_grad(Activation kind, const Vec& preact);

struct StepResult {
  Vec h;       // new hidden state
  Vec preact;  // argument of the nonlinearity, recorded for BPTT
};

/// One application of the leaky state-to-state map. Throws NumericalError
/// (without a timestep) if the new state is non-finite.
StepResult step(const RNNParams& params, const Vec& h_prev, const Vec& x);

/// Everything a forward pass records so that BPTT can replay it.
/// states[t] is the hidden state after t inputs; states[0] is the initial
/// state, so |states| == |preacts| + 1 == |inputs| + 1.
struct StateTrajectory {
  std::vector<Vec> states;
  std::vector<Vec> preacts;
  std::vector<Vec> inputs;

  int length() const { return static_cast<int>(preacts.size()); }
};

/// Runs the cell over a sequence. Throws NumericalError carrying the
/// 1-based timestep of the first non-finite state.
StateTrajectory forward(const RNNParams& params, const std::vector<Vec>& inputs,
                        const Vec& h0);

/// Largest |eigenvalue| of a square matrix (exact, dense solver).
double spectral_radius_of(const Mat& m);

}  // namespace rnnkit
