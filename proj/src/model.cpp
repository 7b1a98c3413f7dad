#include "rnnkit/model.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

namespace rnnkit {

Activation activation_from_string(std::string_view name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "rectifier") return Activation::Rectifier;
  throw ConfigError("unknown activation '" + std::string(name) +
                    "' (expected tanh, sigmoid or rectifier)");
}

std::string to_string(Activation kind) {
  switch (kind) {
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Rectifier: return "rectifier";
  }
  return "?";
}

void RNNParams::validate() const {
  if (n_h < 1 || n_x < 1) throw ConfigError("RNNParams: dimensions must be >= 1");
  if (w_rec.rows() != n_h || w_rec.cols() != n_h || w_in.rows() != n_h ||
      w_in.cols() != n_x || b_h.size() != n_h || leak.size() != n_h) {
    throw ConfigError("RNNParams: inconsistent shapes");
  }
  if (!w_rec.allFinite() || !w_in.allFinite() || !b_h.allFinite() || !leak.allFinite()) {
    throw ConfigError("RNNParams: non-finite entry");
  }
  if ((leak.array() < 0.0).any() || (leak.array() > 0.999).any()) {
    throw ConfigError("RNNParams: leak coefficients must lie in [0, 0.999]");
  }
}

void RNNParams::flatten_params(double* dst) const {
  Eigen::Map<Mat>(dst, n_h, n_h) = w_rec;
  Eigen::Map<Mat>(dst + n_h * n_h, n_h, n_x) = w_in;
  Eigen::Map<Vec>(dst + n_h * n_h + n_h * n_x, n_h) = b_h;
}

void RNNParams::unflatten_params(const double* src) {
  w_rec = Eigen::Map<const Mat>(src, n_h, n_h);
  w_in = Eigen::Map<const Mat>(src + n_h * n_h, n_h, n_x);
  b_h = Eigen::Map<const Vec>(src + n_h * n_h + n_h * n_x, n_h);
}

double spectral_radius_of(const Mat& m) {
  Eigen::EigenSolver<Mat> solver(m, /*computeEigenvectors=*/false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

RNNParams init_params(const InitConfig& config, std::uint64_t seed) {
  if (config.n_h < 1 || config.n_x < 1) {
    throw ConfigError("init_params: n_h and n_x must be >= 1");
  }
  if (config.leaky_fraction < 0.0 || config.leaky_fraction > 1.0) {
    throw ConfigError("init_params: leaky_fraction must lie in [0, 1]");
  }
  const auto [lo, hi] = config.leak_interval;
  if (!(lo <= hi) || lo < 0.0 || hi > 0.999) {
    throw ConfigError("init_params: leak interval must be within [0, 0.999]");
  }
  if (config.weight_std < 0.0) throw ConfigError("init_params: weight_std must be >= 0");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(lo, hi);

  // Column-major fill so the draw order is pinned down.
  auto fill_gaussian = [&](Mat& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        m(r, c) = config.weight_std * gauss(rng);
  };

  RNNParams p;
  p.n_h = config.n_h;
  p.n_x = config.n_x;
  p.activation = config.activation;
  p.w_rec.resize(p.n_h, p.n_h);
  fill_gaussian(p.w_rec);
  p.w_in.resize(p.n_h, p.n_x);
  fill_gaussian(p.w_in);
  p.b_h = Vec::Zero(p.n_h);

  p.leak = Vec::Zero(p.n_h);
  const int n_leaky = static_cast<int>(std::lround(config.leaky_fraction * p.n_h));
  for (int i = 0; i < n_leaky; ++i) {
    p.leak[i] = std::clamp(unif(rng), 0.0, 0.999);
  }

  if (config.spectral_radius) {
    const double rho = spectral_radius_of(p.w_rec);
    if (rho > 0.0) p.w_rec *= *config.spectral_radius / rho;
  }
  p.validate();
  return p;
}

Vec activate(Activation kind, const Vec& preact) {
  switch (kind) {
    case Activation::Tanh:
      return preact.array().tanh();
    case Activation::Sigmoid:
      return (1.0 / (1.0 + (-preact.array()).exp())).matrix();
    case Activation::Rectifier:
      return preact.cwiseMax(0.0);
  }
  throw std::logic_error("unreachable");
}

Vec activate_grad(Activation kind, const Vec& preact) {
  switch (kind) {
    case Activation::Tanh: {
      Vec t = preact.array().tanh();
      return (1.0 - t.array().square()).matrix();
    }
    case Activation::Sigmoid: {
      Vec s = (1.0 / (1.0 + (-preact.array()).exp())).matrix();
      return (s.array() * (1.0 - s.array())).matrix();
    }
    case Activation::Rectifier:
      return (preact.array() > 0.0).cast<double>().matrix();
  }
  throw std::logic_error("unreachable");
}

StepResult step(const RNNParams& params, const Vec& h_prev, const Vec& x) {
  if (h_prev.size() != params.n_h || x.size() != params.n_x) {
    throw ConfigError("step: dimension mismatch");
  }
  StepResult r;
  r.preact = params.w_rec * h_prev + params.w_in * x + params.b_h;
  Vec f = activate(params.activation, r.preact);
  r.h = params.leak.cwiseProduct(h_prev) +
        (Vec::Ones(params.n_h) - params.leak).cwiseProduct(f);
  if (!r.h.allFinite()) {
    throw NumericalError("step produced a non-finite hidden state");
  }
  return r;
}

StateTrajectory forward(const RNNParams& params, const std::vector<Vec>& inputs,
                        const Vec& h0) {
  if (h0.size() != params.n_h) throw ConfigError("forward: h0 has wrong size");
  StateTrajectory traj;
  traj.states.reserve(inputs.size() + 1);
  traj.preacts.reserve(inputs.size());
  traj.inputs = inputs;
  traj.states.push_back(h0);
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    try {
      StepResult r = step(params, traj.states.back(), inputs[t]);
      traj.states.push_back(std::move(r.h));
      traj.preacts.push_back(std::move(r.preact));
    } catch (const NumericalError& e) {
      throw NumericalError(e.what(), static_cast<long>(t) + 1);
    }
  }
  return traj;
}

}  // namespace rnnkit
