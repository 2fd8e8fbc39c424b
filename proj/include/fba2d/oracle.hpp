#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>

#include "fba2d/spectral.hpp"
#include "fba2d/tensor.hpp"

namespace fba2d {

/// Failure to obtain a verdict (network, HTTP status, malformed reply). Never a label.
class TransportError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Snapshot of query accounting.
struct QueryLedger {
  std::uint64_t total_queries = 0;
  std::uint64_t per_run_queries = 0;
};

/// Hard-label detector. Every delivered verdict bumps the ledger by one; a call
/// that throws leaves it unchanged. Safe to call from several threads as long
/// as classify() is.
class Oracle {
public:
  virtual ~Oracle() = default;
  Oracle() = default;
  Oracle(const Oracle &) = delete;
  Oracle &operator=(const Oracle &) = delete;

  Label query(const ImageTensor &img) {
    const Label l = classify(img);
    ledger_.fetch_add(1, std::memory_order_relaxed);
    return l;
  }

  std::uint64_t queries() const { return ledger_.load(std::memory_order_relaxed); }

protected:
  virtual Label classify(const ImageTensor &img) = 0;

private:
  std::atomic<std::uint64_t> ledger_{0};
};

/// Linear detector in the DCT domain: fake iff <w, dct2(x)> + b >= 0.
class HalfspaceOracle final : public Oracle {
public:
  HalfspaceOracle(Spectrum weight, double bias);

  /// <w, dct2(x)> + b.
  double score(const ImageTensor &img) const;
  /// Exact minimal L2 distance from img to the decision hyperplane.
  double distance_to_boundary(const ImageTensor &img) const;

  const Spectrum &weight() const { return weight_; }
  double bias() const { return bias_; }

protected:
  Label classify(const ImageTensor &img) override;

private:
  Spectrum weight_;
  double bias_;
  double weight_norm_;
};

/// Labels an image real when the share of its AC spectral energy (DC excluded,
/// all channels pooled) on the mask is at least the threshold, fake otherwise.
/// Images with no AC energy (up to rounding) are fake.
class FreqEnergyOracle final : public Oracle {
public:
  FreqEnergyOracle(FrequencyMask high_mask, double threshold);

  /// Mask energy over AC energy; 0 when the AC energy is zero up to rounding.
  double energy_fraction(const ImageTensor &img) const;

  const FrequencyMask &mask() const { return mask_; }
  double threshold() const { return threshold_; }

protected:
  Label classify(const ImageTensor &img) override;

private:
  FrequencyMask mask_;
  double threshold_;
};

/// Builtin energy detector used by the harness: top-half band, threshold 0.05.
struct FreqEnergyDefaults {
  static constexpr double high_fraction = 0.5;
  static constexpr double threshold = 0.05;
};

std::unique_ptr<FreqEnergyOracle> make_default_freq_energy_oracle(std::size_t height,
                                                                   std::size_t width);

/// Adapts any callable, e.g. a Python function or a test stub.
class FunctionOracle final : public Oracle {
public:
  explicit FunctionOracle(std::function<Label(const ImageTensor &)> fn) : fn_(std::move(fn)) {}

protected:
  Label classify(const ImageTensor &img) override { return fn_(img); }

private:
  std::function<Label(const ImageTensor &)> fn_;
};

} // namespace fba2d
