#include "fba2d/soup.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "fba2d/triangle.hpp"

namespace fba2d {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double label_value(Label y) { return y == Label::Fake ? 1.0 : 0.0; }

// Feature vector (channel-major, mask scan order) of squared DCT coefficients.
std::vector<double> energy_features(const SurrogateModel &m, const Spectrum &s) {
  std::vector<double> f;
  f.reserve(m.weights.size());
  for (std::size_t c = 0; c < s.channels(); ++c) {
    auto plane = s.channel(c);
    for (std::size_t k : m.feature_mask.positions()) f.push_back(plane[k] * plane[k]);
  }
  return f;
}

double logit_from_spectrum(const SurrogateModel &m, const Spectrum &s) {
  double z = m.bias;
  std::size_t idx = 0;
  for (std::size_t c = 0; c < s.channels(); ++c) {
    auto plane = s.channel(c);
    for (std::size_t k : m.feature_mask.positions()) z += m.weights[idx++] * plane[k] * plane[k];
  }
  return z;
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

} // namespace

SurrogateModel SurrogateModel::zeros(Shape shape) {
  validate_shape(shape);
  return zeros(shape, FrequencyMask::full(shape.height, shape.width));
}

SurrogateModel SurrogateModel::zeros(Shape shape, FrequencyMask feature_mask) {
  validate_shape(shape);
  if (feature_mask.height() != shape.height || feature_mask.width() != shape.width)
    throw std::invalid_argument("surrogate feature mask does not match its shape");
  SurrogateModel m;
  m.shape = shape;
  m.feature_mask = std::move(feature_mask);
  m.weights.assign(m.feature_mask.count() * shape.channels, 0.0);
  return m;
}

void SurrogateModel::validate() const {
  validate_shape(shape);
  if (feature_mask.height() != shape.height || feature_mask.width() != shape.width)
    throw std::invalid_argument("surrogate feature mask does not match its shape");
  if (weights.size() != feature_mask.count() * shape.channels)
    throw std::invalid_argument("surrogate weight count does not match mask x channels");
}

double SurrogateModel::logit(const ImageTensor &img) const {
  if (img.shape() != shape) throw std::invalid_argument("image shape differs from surrogate");
  return logit_from_spectrum(*this, dct2(img));
}

Label SurrogateModel::predict(const ImageTensor &img) const {
  return logit(img) >= 0.0 ? Label::Fake : Label::Real;
}

LossGrad surrogate_loss_grad(const SurrogateModel &model, const ImageTensor &x, Label y) {
  if (x.shape() != model.shape) throw std::invalid_argument("image shape differs from surrogate");
  const Spectrum s = dct2(x);
  const double z = logit_from_spectrum(model, s);
  const double t = label_value(y);
  LossGrad out;
  out.loss = softplus(z) - t * z;
  const double residual = sigmoid(z) - t; // d loss / d z

  // d z / d X[c,k] = 2 w X[c,k]; the DCT is orthonormal so its adjoint is idct2.
  Spectrum g(s.shape());
  std::size_t idx = 0;
  for (std::size_t c = 0; c < s.channels(); ++c) {
    auto src = s.channel(c);
    auto dst = g.channel(c);
    for (std::size_t k : model.feature_mask.positions())
      dst[k] = residual * 2.0 * model.weights[idx++] * src[k];
  }
  out.grad = idct2(g);
  return out;
}

std::vector<double> SoupConfig::resolved_weights() const {
  if (!weights.empty()) return weights;
  return std::vector<double>(soup_iterations.size(), 1.0 / static_cast<double>(soup_iterations.size()));
}

void SoupConfig::validate() const {
  if (!(momentum_decay >= 0.0 && momentum_decay < 1.0))
    throw std::invalid_argument("momentum_decay must lie in [0,1)");
  if (!(step_size > 0.0)) throw std::invalid_argument("step_size must be > 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (total_iterations < 1) throw std::invalid_argument("total_iterations must be >= 1");
  if (soup_iterations.empty()) throw std::invalid_argument("soup_iterations must be non-empty");
  for (auto it : soup_iterations)
    if (it < 1 || it > total_iterations)
      throw std::invalid_argument("soup iteration " + std::to_string(it) + " outside [1, " +
                                  std::to_string(total_iterations) + "]");
  if (!weights.empty()) {
    if (weights.size() != soup_iterations.size())
      throw std::invalid_argument("need one soup weight per soup iteration");
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("soup weights must sum to 1");
  }
}

MomentumStep mig_step(const SurrogateModel &model, const ImageTensor &x_adv, const ImageTensor &x,
                      Label y, const ImageTensor &momentum, const SoupConfig &cfg) {
  if (x_adv.shape() != x.shape() || momentum.shape() != x.shape())
    throw std::invalid_argument("mig_step shape mismatch");
  const LossGrad lg = surrogate_loss_grad(model, x_adv, y);
  double l1 = 0.0;
  for (double v : lg.grad.values()) l1 += std::abs(v);

  MomentumStep out{ImageTensor(x.shape()), ImageTensor(x.shape())};
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double g = cfg.momentum_decay * momentum[k] + (l1 < 1e-12 ? 0.0 : lg.grad[k] / l1);
    out.momentum[k] = g;
    const double stepped = x_adv[k] + cfg.step_size * sign_of(g);
    const double lo = std::max(0.0, x[k] - cfg.epsilon);
    const double hi = std::min(1.0, x[k] + cfg.epsilon);
    out.x_next[k] = std::clamp(stepped, lo, hi);
  }
  return out;
}

ImageTensor make_soup(std::span<const ImageTensor> snapshots, std::span<const double> weights) {
  if (snapshots.empty()) throw std::invalid_argument("soup needs at least one snapshot");
  if (weights.size() != snapshots.size())
    throw std::invalid_argument("soup needs exactly one weight per snapshot");
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("soup weights must sum to 1");
  const Shape shape = snapshots.front().shape();
  for (const auto &s : snapshots)
    if (s.shape() != shape) throw std::invalid_argument("soup snapshots differ in shape");

  ImageTensor out(shape);
  for (std::size_t i = 0; i < snapshots.size(); ++i) axpy(out, weights[i], snapshots[i]);
  return clamp01(std::move(out));
}

SoupResult build_soup(const SurrogateModel &model, const ImageTensor &x, Label y,
                      const SoupConfig &cfg) {
  cfg.validate();
  validate_image(x);
  SoupResult out;
  ImageTensor x_adv = x;
  ImageTensor g(x.shape());
  for (std::uint32_t it = 1; it <= cfg.total_iterations; ++it) {
    auto step = mig_step(model, x_adv, x, y, g, cfg);
    x_adv = std::move(step.x_next);
    g = std::move(step.momentum);
    if (std::find(cfg.soup_iterations.begin(), cfg.soup_iterations.end(), it) !=
        cfg.soup_iterations.end())
      out.snapshots.push_back(x_adv);
  }
  // soup_iterations may be unsorted; snapshots follow iteration order, so reorder weights to match.
  std::vector<std::uint32_t> sorted = cfg.soup_iterations;
  std::sort(sorted.begin(), sorted.end());
  const auto w = cfg.resolved_weights();
  std::vector<double> ordered;
  for (auto it : sorted) {
    auto pos = std::find(cfg.soup_iterations.begin(), cfg.soup_iterations.end(), it);
    ordered.push_back(w[static_cast<std::size_t>(pos - cfg.soup_iterations.begin())]);
  }
  out.soup = make_soup(out.snapshots, ordered);
  return out;
}

const char *to_string(InitMode m) {
  switch (m) {
  case InitMode::Soup: return "soup";
  case InitMode::Targeted: return "targeted";
  case InitMode::Failed: return "failed";
  }
  return "unknown";
}

InitResult select_init(const ImageTensor &x, Label y, const std::optional<ImageTensor> &soup,
                       std::span<const ImageTensor> target_pool, Oracle &oracle, bool quantize) {
  InitResult r;
  auto probe = [&](const ImageTensor &img) -> std::optional<ImageTensor> {
    if (img.shape() != x.shape()) throw std::invalid_argument("initial candidate shape mismatch");
    ImageTensor q = prepare_query_image(img, quantize);
    ++r.queries;
    if (oracle.query(q) != y) return q;
    return std::nullopt;
  };
  if (soup) {
    if (auto ok = probe(*soup)) {
      r.init = std::move(ok);
      r.mode = InitMode::Soup;
      return r;
    }
  }
  for (const auto &candidate : target_pool) {
    if (auto ok = probe(candidate)) {
      r.init = std::move(ok);
      r.mode = InitMode::Targeted;
      return r;
    }
  }
  r.mode = InitMode::Failed;
  return r;
}

TrainingReport train_surrogate(std::span<const std::pair<ImageTensor, Label>> samples,
                               const TrainingOptions &opts) {
  if (samples.empty()) throw std::invalid_argument("training set is empty");
  const Shape shape = samples.front().first.shape();
  validate_shape(shape);
  if (!(opts.feature_high_fraction > 0.0 && opts.feature_high_fraction <= 1.0))
    throw std::invalid_argument("feature_high_fraction must be in (0, 1]");
  SurrogateModel model = SurrogateModel::zeros(
      shape, opts.feature_high_fraction >= 1.0
                 ? FrequencyMask::full(shape.height, shape.width)
                 : FrequencyMask::bands(shape.height, shape.width, 0.0, opts.feature_high_fraction));
  const std::size_t n = samples.size(), d = model.weights.size();

  std::vector<std::vector<double>> feats;
  std::vector<double> targets;
  feats.reserve(n);
  for (const auto &[img, label] : samples) {
    if (img.shape() != shape) throw std::invalid_argument("training images differ in shape");
    feats.push_back(energy_features(model, dct2(img)));
    targets.push_back(label_value(label));
  }

  std::vector<double> mean(d, 0.0), scale(d, 0.0);
  for (const auto &f : feats)
    for (std::size_t k = 0; k < d; ++k) mean[k] += f[k] / static_cast<double>(n);
  for (const auto &f : feats)
    for (std::size_t k = 0; k < d; ++k)
      scale[k] += (f[k] - mean[k]) * (f[k] - mean[k]) / static_cast<double>(n);
  for (double &s : scale) s = std::sqrt(s);
  for (auto &f : feats)
    for (std::size_t k = 0; k < d; ++k) f[k] = scale[k] > 0.0 ? (f[k] - mean[k]) / scale[k] : 0.0;

  // Zero initialisation is already deterministic; opts.seed is reserved for
  // stochastic variants and does not change this full-batch solver.
  std::vector<double> w(d, 0.0), grad(d);
  double b = 0.0, loss = 0.0;
  for (std::uint32_t epoch = 0; epoch < opts.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double gb = 0.0;
    loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = b;
      for (std::size_t k = 0; k < d; ++k) z += w[k] * feats[i][k];
      loss += softplus(z) - targets[i] * z;
      const double r = sigmoid(z) - targets[i];
      gb += r;
      for (std::size_t k = 0; k < d; ++k) grad[k] += r * feats[i][k];
    }
    const double inv = 1.0 / static_cast<double>(n);
    loss *= inv;
    b -= opts.learning_rate * gb * inv;
    for (std::size_t k = 0; k < d; ++k) w[k] -= opts.learning_rate * grad[k] * inv;
  }

  model.bias = b;
  for (std::size_t k = 0; k < d; ++k) {
    if (scale[k] > 0.0) {
      model.weights[k] = w[k] / scale[k];
      model.bias -= w[k] * mean[k] / scale[k];
    }
  }

  std::size_t correct = 0;
  for (const auto &[img, label] : samples) correct += model.predict(img) == label;
  return {std::move(model), static_cast<double>(correct) / static_cast<double>(n), loss};
}

namespace {

template <class T> void put_le(std::ostream &os, T v) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  const U bits = std::bit_cast<U>(v);
  std::array<char, sizeof(T)> buf{};
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  os.write(buf.data(), buf.size());
}

template <class T> T get_le(std::istream &is) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  std::array<unsigned char, sizeof(T)> buf{};
  if (!is.read(reinterpret_cast<char *>(buf.data()), buf.size()))
    throw std::runtime_error("truncated surrogate file");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

constexpr std::uint16_t kSurrogateVersion = 1;

} // namespace

void write_surrogate(std::ostream &os, const SurrogateModel &model) {
  model.validate();
  os.write("FBAS", 4);
  put_le<std::uint16_t>(os, kSurrogateVersion);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(model.shape.height));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(model.shape.width));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(model.shape.channels));
  put_le<double>(os, model.bias);
  const std::size_t plane = model.shape.plane();
  std::size_t idx = 0;
  for (std::size_t c = 0; c < model.shape.channels; ++c) {
    std::vector<double> dense(plane, 0.0);
    for (std::size_t k : model.feature_mask.positions()) dense[k] = model.weights[idx++];
    for (double v : dense) put_le<double>(os, v);
  }
  if (!os) throw std::runtime_error("failed writing surrogate");
}

SurrogateModel read_surrogate(std::istream &is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), 4) || std::string(magic.data(), 4) != "FBAS")
    throw std::runtime_error("not a surrogate file (bad magic)");
  const auto version = get_le<std::uint16_t>(is);
  if (version != kSurrogateVersion)
    throw std::runtime_error("unsupported surrogate version " + std::to_string(version));
  Shape shape;
  shape.height = get_le<std::uint32_t>(is);
  shape.width = get_le<std::uint32_t>(is);
  shape.channels = get_le<std::uint32_t>(is);
  SurrogateModel m = SurrogateModel::zeros(shape);
  m.bias = get_le<double>(is);
  for (double &w : m.weights) w = get_le<double>(is);
  return m;
}

void save_surrogate(const std::filesystem::path &path, const SurrogateModel &model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_surrogate(os, model);
}

SurrogateModel load_surrogate(const std::filesystem::path &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_surrogate(is);
}

} // namespace fba2d
