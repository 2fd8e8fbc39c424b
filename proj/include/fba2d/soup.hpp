#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fba2d/oracle.hpp"
#include "fba2d/spectral.hpp"
#include "fba2d/tensor.hpp"

namespace fba2d {

/// Differentiable stand-in detector: a logistic unit over squared DCT
/// coefficients (spectral energies) on a feature mask.
///
///   z = bias + sum_{c, k in mask} w[c, k] * X[c, k]^2,   P(fake) = sigmoid(z)
///
/// Weights are stored channel-major, positions in mask scan order.
struct SurrogateModel {
  Shape shape;
  FrequencyMask feature_mask;
  std::vector<double> weights;
  double bias = 0.0;

  /// Zero-weight model over the full spectrum.
  static SurrogateModel zeros(Shape shape);
  static SurrogateModel zeros(Shape shape, FrequencyMask feature_mask);

  double logit(const ImageTensor &img) const;
  Label predict(const ImageTensor &img) const;
  void validate() const;
};

struct LossGrad {
  double loss = 0.0;
  ImageTensor grad;
};

/// Binary cross-entropy of the surrogate against y, with the exact gradient
/// with respect to the pixels (chain rule through the orthonormal DCT).
LossGrad surrogate_loss_grad(const SurrogateModel &model, const ImageTensor &x, Label y);

struct SoupConfig {
  double momentum_decay = 0.95;
  double epsilon = 8.0 / 255.0; // L-inf radius around x
  double step_size = 0.8 / 255.0;
  std::uint32_t total_iterations = 10;
  std::vector<std::uint32_t> soup_iterations{6, 7, 8, 9, 10};
  /// Averaging weights, one per soup iteration. Empty means uniform 1/n.
  std::vector<double> weights;
  /// Accepted for config compatibility with integrated-gradient variants; unused.
  double scaling_factor = 20.0;

  std::vector<double> resolved_weights() const;
  void validate() const;
};

struct MomentumStep {
  ImageTensor x_next;
  ImageTensor momentum;
};

/// One momentum iteration: g' = mu g + grad / ||grad||_1 (the normalised term is
/// 0 when ||grad||_1 < 1e-12), x' = clip to the eps ball around x and [0,1] of
/// x_adv + eta * sign(g'), with sign(0) = 0.
MomentumStep mig_step(const SurrogateModel &model, const ImageTensor &x_adv, const ImageTensor &x,
                      Label y, const ImageTensor &momentum, const SoupConfig &cfg);

/// Weighted element-wise average clamped to [0,1]. Weights must sum to 1
/// within 1e-9 and shapes must agree.
ImageTensor make_soup(std::span<const ImageTensor> snapshots, std::span<const double> weights);

struct SoupResult {
  ImageTensor soup;
  std::vector<ImageTensor> snapshots; // iterates at cfg.soup_iterations, in order
};

/// Runs the momentum attack on the surrogate and averages the requested iterates.
SoupResult build_soup(const SurrogateModel &model, const ImageTensor &x, Label y,
                      const SoupConfig &cfg);

enum class InitMode { Soup, Targeted, Failed };

const char *to_string(InitMode m);

struct InitResult {
  std::optional<ImageTensor> init; // empty on failure
  InitMode mode = InitMode::Failed;
  std::uint64_t queries = 0;
};

/// Picks the attack starting point: the soup if the oracle already flips it,
/// otherwise the first pool image the oracle labels differently from y. Images
/// go through prepare_query_image before querying, and the returned init is
/// exactly the image that was confirmed. Pass no soup for targeted-only runs.
InitResult select_init(const ImageTensor &x, Label y, const std::optional<ImageTensor> &soup,
                       std::span<const ImageTensor> target_pool, Oracle &oracle,
                       bool quantize = true);

struct TrainingOptions {
  std::uint32_t epochs = 500;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;
  double feature_high_fraction = 0.5; // features: this top share of the spectrum (1 = all)
};

struct TrainingReport {
  SurrogateModel model;
  double train_accuracy = 0.0;
  double final_loss = 0.0;
};

/// Full-batch gradient descent on standardised energy features; the learned
/// standardisation is folded back into raw weights and bias.
TrainingReport train_surrogate(std::span<const std::pair<ImageTensor, Label>> samples,
                               const TrainingOptions &opts = {});

/// FBAS binary format, little-endian throughout:
/// "FBAS", u16 version (1), u32 H, u32 W, u32 C, f64 bias, then f64 weights for
/// every channel and every coefficient in row-major scan order (full mask;
/// unselected features are written as 0).
void write_surrogate(std::ostream &os, const SurrogateModel &model);
SurrogateModel read_surrogate(std::istream &is);
void save_surrogate(const std::filesystem::path &path, const SurrogateModel &model);
SurrogateModel load_surrogate(const std::filesystem::path &path);

} // namespace fba2d
