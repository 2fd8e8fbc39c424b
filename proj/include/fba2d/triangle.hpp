#pragma once

#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "fba2d/oracle.hpp"
#include "fba2d/spectral.hpp"
#include "fba2d/tensor.hpp"

namespace fba2d {

/// Raised when an attack cannot start (non-adversarial initialization, shape
/// mismatch, degenerate subspace).
class AttackError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct AttackConfig {
  std::uint64_t max_queries = 500;           // Q
  std::uint32_t iterations_per_subspace = 2; // N, binary-search steps per subspace
  double alpha_step = 0.01;                  // gamma
  double alpha_shrink = 0.05;                // lambda, failure steps are lambda * gamma
  double alpha_bound = 0.1;                  // tau, alpha stays in [pi/2 - tau, pi/2 + tau]
  double beta_floor = std::numbers::pi / 16; // lower bound on the search angle
  FrequencyMask mask;                        // subspace the random directions live in
  std::uint64_t seed = 0;
  /// Round every queried image to 8 bits, matching what the HTTP transport sends.
  bool quantize_queries = true;

  /// Throws std::invalid_argument on out-of-range hyperparameters or an empty mask.
  void validate() const;
};

/// Current point of the boundary walk, all in the DCT domain.
struct AttackState {
  Spectrum benign;      // X
  Spectrum adversarial; // X~_t, unclamped
  double alpha = std::numbers::pi / 2;
  std::uint64_t queries = 0;
  std::uint64_t step = 0;
  double delta = 0.0; // ||X~_t - X||_2
  /// Exactly the (clamped, possibly quantized) image the oracle confirmed for `adversarial`.
  ImageTensor confirmed;
};

/// Orthonormal pair spanning the 2-D search plane: u points from X to X~_t,
/// w is a masked random direction orthogonalised against u.
struct Subspace2D {
  Spectrum u;
  Spectrum w;
};

/// Law-of-sines side length: delta * sin(pi - (alpha + |beta|)) / sin(alpha).
/// Requires 0 < alpha < pi and alpha + |beta| <= pi; the flat triangle at
/// alpha + |beta| == pi yields 0.
double delta_next(double delta, double alpha, double beta);

/// Builds the search plane. Retries up to 16 samples when the masked draw is
/// (numerically) parallel to u; throws AttackError after that.
Subspace2D make_subspace(const Spectrum &benign, const Spectrum &adversarial,
                         const FrequencyMask &mask, std::mt19937_64 &rng);

/// Third triangle vertex X + delta_next * (cos(beta) u + sin(beta) w). The sign
/// of beta picks the side of the w axis.
Spectrum candidate(const Spectrum &benign, const Spectrum &adversarial, double alpha, double beta,
                   const Subspace2D &plane);

/// Angle adaptation: grow by gamma on success, shrink by lambda * gamma on
/// failure, clamped to [pi/2 - tau, pi/2 + tau].
double update_alpha(double alpha, bool success, const AttackConfig &cfg);

/// Applies the query-time image policy: clamp to [0,1], then 8-bit rounding if asked.
ImageTensor prepare_query_image(const ImageTensor &img, bool quantize);

/// Per-run view of an oracle: decodes spectra, applies the image policy, counts
/// queries against the budget and compares verdicts to the benign label.
class QuerySession {
public:
  QuerySession(Oracle &oracle, Label benign_label, bool quantize, std::uint64_t budget,
               std::uint64_t already_spent = 0);

  bool exhausted() const { return used_ >= budget_; }
  std::uint64_t used() const { return used_; }
  std::uint64_t budget() const { return budget_; }
  Label benign_label() const { return benign_label_; }

  ImageTensor decode(const Spectrum &spec) const;

  /// One oracle query on the decoded spectrum. The image actually sent is kept
  /// in last_image(). Does not check the budget; callers gate on exhausted().
  bool is_adversarial(const Spectrum &spec);
  bool is_adversarial_image(const ImageTensor &img);
  const ImageTensor &last_image() const { return last_image_; }

private:
  Oracle &oracle_;
  Label benign_label_;
  bool quantize_;
  std::uint64_t budget_;
  std::uint64_t used_;
  ImageTensor last_image_;
};

struct SearchResult {
  AttackState state;
  bool improved = false;
};

/// One subspace of the boundary search: probe +/- the initial angle, give up
/// after two failures, otherwise bisect the search angle for
/// iterations_per_subspace rounds. Keeps the smallest-delta adversarial
/// candidate; alpha is adapted after every query.
SearchResult search_subspace(AttackState state, const Subspace2D &plane, QuerySession &session,
                             const AttackConfig &cfg);

struct TraceRecord {
  std::uint64_t step = 0;
  std::uint64_t queries = 0;
  double delta_l2 = 0.0; // search distance, before clamping and quantization
  double rmse = 0.0;     // of the confirmed image
  double alpha = 0.0;
};

/// Accepted-step history. The first record is the verified starting point.
struct AttackTrace {
  std::vector<TraceRecord> records;

  /// One JSON object per line: {step, queries, delta_l2, rmse, alpha}.
  void write_jsonl(std::ostream &os) const;
  static AttackTrace read_jsonl(std::istream &is);
};

struct AttackResult {
  ImageTensor adversarial; // clamped (and quantized when configured); oracle-confirmed
  AttackTrace trace;
  std::uint64_t queries = 0; // oracle calls charged to this run, including prior spend
  double final_delta = 0.0;
};

struct RunOptions {
  /// Queries already charged to this sample (e.g. initialization probes).
  std::uint64_t queries_spent = 0;
  /// Skip the verification query when the caller has just confirmed `init`.
  bool init_verified = false;
};

/// Full boundary walk from an adversarial init towards x until the budget is spent.
AttackResult run_attack(const ImageTensor &x, Label y, const ImageTensor &init, Oracle &oracle,
                        const AttackConfig &cfg, RunOptions options = {});

} // namespace fba2d
