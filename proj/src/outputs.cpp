#include "rnnkit/outputs.hpp"

#include <algorithm>
#include <cmath>

namespace rnnkit {

namespace {

void fill_gaussian(Mat& m, double std, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = std * gauss(rng);
}

void check_bits(const Vec& target, int d) {
  if (target.size() != d) throw DataError("bit target has wrong dimension");
  for (int i = 0; i < d; ++i) {
    if (target[i] != 0.0 && target[i] != 1.0) {
      throw DataError("bit target entries must be 0 or 1");
    }
  }
}

double copy_block(const Mat& m, double* dst) {
  Eigen::Map<Mat>(dst, m.rows(), m.cols()) = m;
  return 0;
}

}  // namespace

// --------------------------------------------------------------- Bernoulli

void BernoulliOutput::Grads::flatten(double* dst) const {
  copy_block(w_out, dst);
  Eigen::Map<Vec>(dst + w_out.size(), b_out.size()) = b_out;
}

BernoulliOutput::Grads BernoulliOutput::zero_grads() const {
  return Grads{Mat::Zero(w_out.rows(), w_out.cols()), Vec::Zero(b_out.size())};
}

double BernoulliOutput::loss(const Vec& h, const Target& target, Vec* grad_h,
                             Grads* acc) const {
  check_bits(target, d());
  const Vec z = w_out * h + b_out;
  double nll = 0.0;
  for (int i = 0; i < d(); ++i) {
    // -[y log p + (1-y) log(1-p)] with p = sigmoid(z), in softplus form.
    nll += target[i] * detail::softplus(-z[i]) +
           (1.0 - target[i]) * detail::softplus(z[i]);
  }
  if (grad_h != nullptr || acc != nullptr) {
    Vec delta(d());
    for (int i = 0; i < d(); ++i) delta[i] = detail::sigmoid(z[i]) - target[i];
    if (grad_h != nullptr) *grad_h = w_out.transpose() * delta;
    if (acc != nullptr) {
      acc->w_out.noalias() += delta * h.transpose();
      acc->b_out += delta;
    }
  }
  return nll;
}

Vec BernoulliOutput::probabilities(const Vec& h) const {
  Vec z = w_out * h + b_out;
  for (int i = 0; i < z.size(); ++i) z[i] = detail::sigmoid(z[i]);
  return z;
}

Vec BernoulliOutput::predict_bits(const Vec& h) const {
  Vec p = probabilities(h);
  return (p.array() > 0.5).cast<double>().matrix();
}

void BernoulliOutput::flatten_params(double* dst) const {
  copy_block(w_out, dst);
  Eigen::Map<Vec>(dst + w_out.size(), b_out.size()) = b_out;
}

void BernoulliOutput::unflatten_params(const double* src) {
  w_out = Eigen::Map<const Mat>(src, w_out.rows(), w_out.cols());
  b_out = Eigen::Map<const Vec>(src + w_out.size(), b_out.size());
}

std::vector<std::pair<std::string, int>> BernoulliOutput::grad_blocks() const {
  return {{"out.w_out", static_cast<int>(w_out.size())},
          {"out.b_out", static_cast<int>(b_out.size())}};
}

BernoulliOutput init_bernoulli_output(int d, int n_h, double weight_std,
                                      std::mt19937_64& rng) {
  if (d < 1 || n_h < 1) throw ConfigError("bernoulli output: bad dimensions");
  BernoulliOutput m;
  m.w_out.resize(d, n_h);
  fill_gaussian(m.w_out, weight_std, rng);
  m.b_out = Vec::Zero(d);
  return m;
}

// ----------------------------------------------------------------- Softmax

void SoftmaxOutput::Grads::flatten(double* dst) const {
  copy_block(w_out, dst);
  Eigen::Map<Vec>(dst + w_out.size(), b_out.size()) = b_out;
}

SoftmaxOutput::Grads SoftmaxOutput::zero_grads() const {
  return Grads{Mat::Zero(w_out.rows(), w_out.cols()), Vec::Zero(b_out.size())};
}

Vec SoftmaxOutput::log_probabilities(const Vec& h) const {
  Vec z = w_out * h + b_out;
  const double zmax = z.maxCoeff();
  const double lse = zmax + std::log((z.array() - zmax).exp().sum());
  return (z.array() - lse).matrix();
}

double SoftmaxOutput::loss(const Vec& h, Target target, Vec* grad_h,
                           Grads* acc) const {
  if (target < 0 || target >= vocab()) {
    throw DataError("softmax target out of range: " + std::to_string(target));
  }
  const Vec z = w_out * h + b_out;
  const double zmax = z.maxCoeff();
  const double lse = zmax + std::log((z.array() - zmax).exp().sum());
  const double nll = lse - z[target];
  if (grad_h != nullptr || acc != nullptr) {
    Vec delta = (z.array() - lse).exp().matrix();  // softmax probabilities
    delta[target] -= 1.0;
    if (grad_h != nullptr) *grad_h = w_out.transpose() * delta;
    if (acc != nullptr) {
      acc->w_out.noalias() += delta * h.transpose();
      acc->b_out += delta;
    }
  }
  return nll;
}

void SoftmaxOutput::flatten_params(double* dst) const {
  copy_block(w_out, dst);
  Eigen::Map<Vec>(dst + w_out.size(), b_out.size()) = b_out;
}

void SoftmaxOutput::unflatten_params(const double* src) {
  w_out = Eigen::Map<const Mat>(src, w_out.rows(), w_out.cols());
  b_out = Eigen::Map<const Vec>(src + w_out.size(), b_out.size());
}

std::vector<std::pair<std::string, int>> SoftmaxOutput::grad_blocks() const {
  return {{"out.w_out", static_cast<int>(w_out.size())},
          {"out.b_out", static_cast<int>(b_out.size())}};
}

SoftmaxOutput init_softmax_output(int vocab, int n_h, double weight_std,
                                  std::mt19937_64& rng) {
  if (vocab < 2 || n_h < 1) throw ConfigError("softmax output: bad dimensions");
  SoftmaxOutput m;
  m.w_out.resize(vocab, n_h);
  fill_gaussian(m.w_out, weight_std, rng);
  m.b_out = Vec::Zero(vocab);
  return m;
}

// -------------------------------------------------------- class-factorized

void ClassFactorizedOutput::Grads::flatten(double* dst) const {
  double* p = dst;
  copy_block(class_w, p);
  p += class_w.size();
  Eigen::Map<Vec>(p, class_b.size()) = class_b;
  p += class_b.size();
  copy_block(word_w, p);
  p += word_w.size();
  Eigen::Map<Vec>(p, word_b.size()) = word_b;
}

void ClassFactorizedOutput::validate_partition() const {
  const int V = vocab();
  const int K = num_classes();
  if (static_cast<int>(class_of.size()) != V ||
      static_cast<int>(members.size()) != K) {
    throw ConfigError("class partition: size mismatch");
  }
  std::vector<int> seen(V, 0);
  for (int k = 0; k < K; ++k) {
    for (int w : members[k]) {
      if (w < 0 || w >= V) throw ConfigError("class partition: word id out of range");
      if (class_of[w] != k) throw ConfigError("class partition: class_of disagrees with members");
      ++seen[w];
    }
  }
  for (int w = 0; w < V; ++w) {
    if (seen[w] != 1) {
      throw ConfigError("class partition: word " + std::to_string(w) +
                        " is not in exactly one class");
    }
  }
}

ClassFactorizedOutput::Grads ClassFactorizedOutput::zero_grads() const {
  return Grads{Mat::Zero(class_w.rows(), class_w.cols()), Vec::Zero(class_b.size()),
               Mat::Zero(word_w.rows(), word_w.cols()), Vec::Zero(word_b.size())};
}

double ClassFactorizedOutput::loss(const Vec& h, Target target, Vec* grad_h,
                                   Grads* acc) const {
  if (target < 0 || target >= vocab()) {
    throw DataError("class-softmax target out of range: " + std::to_string(target));
  }
  const int cls = class_of[target];
  if (cls < 0 || cls >= num_classes()) {
    throw ConfigError("word " + std::to_string(target) + " missing from class partition");
  }
  const std::vector<int>& mem = members[cls];
  const int m = static_cast<int>(mem.size());

  // Class level: full K-way softmax.
  const Vec zc = class_w * h + class_b;
  const double cmax = zc.maxCoeff();
  const double clse = cmax + std::log((zc.array() - cmax).exp().sum());

  // Word level: softmax restricted to the target's class. The member rows
  // are gathered into a dense block so the arithmetic matches a plain
  // softmax over the same rows.
  Mat sub_w(m, class_w.cols());
  Vec sub_b(m);
  int target_pos = -1;
  for (int j = 0; j < m; ++j) {
    sub_w.row(j) = word_w.row(mem[j]);
    sub_b[j] = word_b[mem[j]];
    if (mem[j] == target) target_pos = j;
  }
  if (target_pos < 0) throw ConfigError("class partition: target not in its own class");
  const Vec zw = sub_w * h + sub_b;
  const double wmax = zw.maxCoeff();
  const double wlse = wmax + std::log((zw.array() - wmax).exp().sum());

  const double nll = (clse - zc[cls]) + (wlse - zw[target_pos]);

  if (grad_h != nullptr || acc != nullptr) {
    Vec dc = (zc.array() - clse).exp().matrix();
    dc[cls] -= 1.0;
    Vec dw = (zw.array() - wlse).exp().matrix();
    dw[target_pos] -= 1.0;
    if (grad_h != nullptr) {
      *grad_h = class_w.transpose() * dc + sub_w.transpose() * dw;
    }
    if (acc != nullptr) {
      acc->class_w.noalias() += dc * h.transpose();
      acc->class_b += dc;
      for (int j = 0; j < m; ++j) {
        acc->word_w.row(mem[j]) += dw[j] * h.transpose();
        acc->word_b[mem[j]] += dw[j];
      }
    }
  }
  return nll;
}

void ClassFactorizedOutput::flatten_params(double* dst) const {
  double* p = dst;
  copy_block(class_w, p);
  p += class_w.size();
  Eigen::Map<Vec>(p, class_b.size()) = class_b;
  p += class_b.size();
  copy_block(word_w, p);
  p += word_w.size();
  Eigen::Map<Vec>(p, word_b.size()) = word_b;
}

void ClassFactorizedOutput::unflatten_params(const double* src) {
  const double* p = src;
  class_w = Eigen::Map<const Mat>(p, class_w.rows(), class_w.cols());
  p += class_w.size();
  class_b = Eigen::Map<const Vec>(p, class_b.size());
  p += class_b.size();
  word_w = Eigen::Map<const Mat>(p, word_w.rows(), word_w.cols());
  p += word_w.size();
  word_b = Eigen::Map<const Vec>(p, word_b.size());
}

std::vector<std::pair<std::string, int>> ClassFactorizedOutput::grad_blocks() const {
  return {{"out.class_w", static_cast<int>(class_w.size())},
          {"out.class_b", static_cast<int>(class_b.size())},
          {"out.word_w", static_cast<int>(word_w.size())},
          {"out.word_b", static_cast<int>(word_b.size())}};
}

ClassFactorizedOutput init_class_factorized_output(
    const std::vector<int>& class_of, int num_classes, int n_h, double weight_std,
    std::mt19937_64& rng) {
  const int V = static_cast<int>(class_of.size());
  if (V < 1 || num_classes < 1 || n_h < 1) {
    throw ConfigError("class-factorized output: bad dimensions");
  }
  ClassFactorizedOutput m;
  m.class_w.resize(num_classes, n_h);
  fill_gaussian(m.class_w, weight_std, rng);
  m.class_b = Vec::Zero(num_classes);
  m.word_w.resize(V, n_h);
  fill_gaussian(m.word_w, weight_std, rng);
  m.word_b = Vec::Zero(V);
  m.class_of = class_of;
  m.members.assign(num_classes, {});
  for (int w = 0; w < V; ++w) {
    if (class_of[w] < 0 || class_of[w] >= num_classes) {
      throw ConfigError("class-factorized output: class id out of range");
    }
    m.members[class_of[w]].push_back(w);  // ascending by construction
  }
  m.validate_partition();
  return m;
}

// -------------------------------------------------------------------- NADE

void NadeOutput::Grads::flatten(double* dst) const {
  double* p = dst;
  copy_block(nade_w, p);
  p += nade_w.size();
  copy_block(nade_v, p);
  p += nade_v.size();
  Eigen::Map<Vec>(p, base_b_visible.size()) = base_b_visible;
  p += base_b_visible.size();
  Eigen::Map<Vec>(p, base_c_hidden.size()) = base_c_hidden;
  p += base_c_hidden.size();
  copy_block(cond_b, p);
  p += cond_b.size();
  copy_block(cond_c, p);
}

NadeOutput::Grads NadeOutput::zero_grads() const {
  return Grads{Mat::Zero(nade_w.rows(), nade_w.cols()),
               Mat::Zero(nade_v.rows(), nade_v.cols()),
               Vec::Zero(base_b_visible.size()),
               Vec::Zero(base_c_hidden.size()),
               Mat::Zero(cond_b.rows(), cond_b.cols()),
               Mat::Zero(cond_c.rows(), cond_c.cols())};
}

double NadeOutput::loss(const Vec& h, const Target& target, Vec* grad_h,
                        Grads* acc) const {
  check_bits(target, d());
  const int dv = d();
  const int nn = n_nade();
  const Vec b = base_b_visible + cond_b * h;

  const bool want_grads = grad_h != nullptr || acc != nullptr;
  Mat hid;                        // sigmoid(a_i) per visible, kept for backprop
  if (want_grads) hid.resize(nn, dv);
  Vec delta = Vec::Zero(dv);      // p_i - y_i

  Vec a = base_c_hidden + cond_c * h;
  double nll = 0.0;
  for (int i = 0; i < dv; ++i) {
    Vec hi(nn);
    for (int k = 0; k < nn; ++k) hi[k] = detail::sigmoid(a[k]);
    const double s = nade_v.row(i).dot(hi) + b[i];
    nll += target[i] * detail::softplus(-s) +
           (1.0 - target[i]) * detail::softplus(s);
    if (want_grads) {
      hid.col(i) = hi;
      delta[i] = detail::sigmoid(s) - target[i];
    }
    if (i + 1 < dv) a += nade_w.col(i) * target[i];
  }

  if (want_grads) {
    // Backward over the visible chain. g accumulates d nll / d a_i.
    Vec g = Vec::Zero(nn);
    for (int i = dv - 1; i >= 0; --i) {
      if (acc != nullptr && i + 1 < dv) {
        // a_{i+1} = a_i + nade_w[:,i] v_i; g currently holds d nll / d a_{i+1}.
        acc->nade_w.col(i) += g * target[i];
      }
      const Vec hi = hid.col(i);
      g += delta[i] * (nade_v.row(i).transpose().array() * hi.array() *
                       (1.0 - hi.array()))
                          .matrix();
      if (acc != nullptr) {
        acc->nade_v.row(i) += delta[i] * hi.transpose();
      }
    }
    if (acc != nullptr) {
      acc->base_b_visible += delta;
      acc->cond_b.noalias() += delta * h.transpose();
      acc->base_c_hidden += g;
      acc->cond_c.noalias() += g * h.transpose();
    }
    if (grad_h != nullptr) {
      *grad_h = cond_b.transpose() * delta + cond_c.transpose() * g;
    }
  }
  return nll;
}

std::vector<double> NadeOutput::enumerate(const Vec& h) const {
  if (d() > 12) throw DataError("nade enumerate: d must be <= 12");
  const int dv = d();
  std::vector<double> table(static_cast<std::size_t>(1) << dv);
  Vec v(dv);
  for (std::size_t mask = 0; mask < table.size(); ++mask) {
    for (int i = 0; i < dv; ++i) v[i] = (mask >> i) & 1 ? 1.0 : 0.0;
    table[mask] = std::exp(-loss(h, v, nullptr, nullptr));
  }
  return table;
}

Vec NadeOutput::predict_bits(const Vec& h) const {
  const int dv = d();
  const int nn = n_nade();
  const Vec b = base_b_visible + cond_b * h;
  Vec a = base_c_hidden + cond_c * h;
  Vec out(dv);
  for (int i = 0; i < dv; ++i) {
    Vec hi(nn);
    for (int k = 0; k < nn; ++k) hi[k] = detail::sigmoid(a[k]);
    const double p = detail::sigmoid(nade_v.row(i).dot(hi) + b[i]);
    out[i] = p > 0.5 ? 1.0 : 0.0;
    if (i + 1 < dv) a += nade_w.col(i) * out[i];
  }
  return out;
}

void NadeOutput::flatten_params(double* dst) const {
  double* p = dst;
  copy_block(nade_w, p);
  p += nade_w.size();
  copy_block(nade_v, p);
  p += nade_v.size();
  Eigen::Map<Vec>(p, base_b_visible.size()) = base_b_visible;
  p += base_b_visible.size();
  Eigen::Map<Vec>(p, base_c_hidden.size()) = base_c_hidden;
  p += base_c_hidden.size();
  copy_block(cond_b, p);
  p += cond_b.size();
  copy_block(cond_c, p);
}

void NadeOutput::unflatten_params(const double* src) {
  const double* p = src;
  nade_w = Eigen::Map<const Mat>(p, nade_w.rows(), nade_w.cols());
  p += nade_w.size();
  nade_v = Eigen::Map<const Mat>(p, nade_v.rows(), nade_v.cols());
  p += nade_v.size();
  base_b_visible = Eigen::Map<const Vec>(p, base_b_visible.size());
  p += base_b_visible.size();
  base_c_hidden = Eigen::Map<const Vec>(p, base_c_hidden.size());
  p += base_c_hidden.size();
  cond_b = Eigen::Map<const Mat>(p, cond_b.rows(), cond_b.cols());
  p += cond_b.size();
  cond_c = Eigen::Map<const Mat>(p, cond_c.rows(), cond_c.cols());
}

std::vector<std::pair<std::string, int>> NadeOutput::grad_blocks() const {
  return {{"out.nade_w", static_cast<int>(nade_w.size())},
          {"out.nade_v", static_cast<int>(nade_v.size())},
          {"out.base_b_visible", static_cast<int>(base_b_visible.size())},
          {"out.base_c_hidden", static_cast<int>(base_c_hidden.size())},
          {"out.cond_b", static_cast<int>(cond_b.size())},
          {"out.cond_c", static_cast<int>(cond_c.size())}};
}

NadeOutput init_nade_output(int d, int n_nade, int n_h, double weight_std,
                            std::mt19937_64& rng) {
  if (d < 1 || n_nade < 1 || n_h < 1) throw ConfigError("nade output: bad dimensions");
  NadeOutput m;
  m.nade_w.resize(n_nade, d);
  fill_gaussian(m.nade_w, weight_std, rng);
  m.nade_v.resize(d, n_nade);
  fill_gaussian(m.nade_v, weight_std, rng);
  m.base_b_visible = Vec::Zero(d);
  m.base_c_hidden = Vec::Zero(n_nade);
  m.cond_b.resize(d, n_h);
  fill_gaussian(m.cond_b, weight_std, rng);
  m.cond_c.resize(n_nade, n_h);
  fill_gaussian(m.cond_c, weight_std, rng);
  return m;
}

// --------------------------------------------------------- frame accuracy

double frame_accuracy(const Mat& predictions, const Mat& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols()) {
    throw DataError("frame_accuracy: shape mismatch");
  }
  long tp = 0, fp = 0, fn = 0;
  for (Eigen::Index c = 0; c < predictions.cols(); ++c) {
    for (Eigen::Index r = 0; r < predictions.rows(); ++r) {
      const bool p = predictions(r, c) != 0.0;
      const bool t = targets(r, c) != 0.0;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
  }
  const long denom = tp + fp + fn;
  return denom == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace rnnkit
