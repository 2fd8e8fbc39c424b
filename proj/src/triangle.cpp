#include "fba2d/triangle.hpp"
#include "fba2d/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

namespace fba2d {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr int kSubspaceAttempts = 16;
constexpr double kDegenerateResidual = 1e-8;
constexpr double kDegenerateStart = 1e-9;
} // namespace

void AttackConfig::validate() const {
  if (max_queries < 1) throw std::invalid_argument("max_queries must be >= 1");
  if (iterations_per_subspace < 1)
    throw std::invalid_argument("iterations_per_subspace must be >= 1");
  if (!(alpha_step > 0.0)) throw std::invalid_argument("alpha_step must be > 0");
  if (!(alpha_shrink > 0.0 && alpha_shrink < 1.0))
    throw std::invalid_argument("alpha_shrink must lie in (0,1)");
  if (!(alpha_bound > 0.0 && alpha_bound < kPi / 2))
    throw std::invalid_argument("alpha_bound must lie in (0, pi/2)");
  if (!(beta_floor > 0.0 && beta_floor < kPi / 2))
    throw std::invalid_argument("beta_floor must lie in (0, pi/2)");
  if (mask.empty()) throw std::invalid_argument("attack mask selects no coefficients");
}

double delta_next(double delta, double alpha, double beta) {
  const double b = std::abs(beta);
  if (!(alpha > 0.0 && alpha < kPi))
    throw std::invalid_argument("alpha must lie in (0, pi), got " + std::to_string(alpha));
  if (alpha + b > kPi)
    throw std::invalid_argument("alpha + |beta| exceeds pi: degenerate triangle");
  // Clamp guards the flat case against sin(-tiny).
  return delta * std::max(0.0, std::sin(kPi - (alpha + b))) / std::sin(alpha);
}

Subspace2D make_subspace(const Spectrum &benign, const Spectrum &adversarial,
                         const FrequencyMask &mask, std::mt19937_64 &rng) {
  Spectrum u = adversarial - benign;
  const double len = norm2(u);
  if (!(len > 0.0)) throw AttackError("search plane undefined: adversarial point equals benign");
  for (double &v : u.values()) v /= len;

  for (int attempt = 0; attempt < kSubspaceAttempts; ++attempt) {
    Spectrum w = sample_masked_direction(mask, benign.channels(), rng);
    axpy(w, -dot(w, u), u);
    const double r = norm2(w);
    if (r < kDegenerateResidual) continue;
    for (double &v : w.values()) v /= r;
    return {std::move(u), std::move(w)};
  }
  throw AttackError("could not sample a direction off the current perturbation axis");
}

Spectrum candidate(const Spectrum &benign, const Spectrum &adversarial, double alpha, double beta,
                   const Subspace2D &plane) {
  const double delta = norm2(adversarial - benign);
  const double side = delta_next(delta, alpha, beta);
  Spectrum out = benign;
  axpy(out, side * std::cos(beta), plane.u);
  axpy(out, side * std::sin(beta), plane.w);
  return out;
}

double update_alpha(double alpha, bool success, const AttackConfig &cfg) {
  if (success) return std::min(alpha + cfg.alpha_step, kPi / 2 + cfg.alpha_bound);
  return std::max(alpha - cfg.alpha_shrink * cfg.alpha_step, kPi / 2 - cfg.alpha_bound);
}

ImageTensor prepare_query_image(const ImageTensor &img, bool quantize) {
  return quantize ? quantize8(img) : clamp01(img);
}

QuerySession::QuerySession(Oracle &oracle, Label benign_label, bool quantize,
                           std::uint64_t budget, std::uint64_t already_spent)
    : oracle_(oracle), benign_label_(benign_label), quantize_(quantize), budget_(budget),
      used_(already_spent) {}

ImageTensor QuerySession::decode(const Spectrum &spec) const {
  return prepare_query_image(idct2(spec), quantize_);
}

bool QuerySession::is_adversarial(const Spectrum &spec) {
  return is_adversarial_image(idct2(spec));
}

bool QuerySession::is_adversarial_image(const ImageTensor &img) {
  last_image_ = prepare_query_image(img, quantize_);
  const Label l = oracle_.query(last_image_);
  ++used_;
  return l != benign_label_;
}

SearchResult search_subspace(AttackState state, const Subspace2D &plane, QuerySession &session,
                             const AttackConfig &cfg) {
  if (session.exhausted()) return {std::move(state), false};

  std::optional<Spectrum> best;
  ImageTensor best_image;
  double best_delta = state.delta;

  auto probe = [&](double beta) {
    Spectrum c = candidate(state.benign, state.adversarial, state.alpha, beta, plane);
    const bool adv = session.is_adversarial(c);
    state.alpha = update_alpha(state.alpha, adv, cfg);
    if (adv) {
      // Measured the same way as state.delta so accepted steps never grow.
      const double d = norm2(c - state.benign);
      if (d < best_delta) {
        best_delta = d;
        best = std::move(c);
        best_image = session.last_image();
      }
    }
    return adv;
  };

  double lo = std::max(kPi - 2.0 * state.alpha, cfg.beta_floor);
  bool found = probe(lo);
  if (!found && !session.exhausted()) found = probe(-lo);

  if (found) {
    double hi = std::min(kPi / 2, kPi - state.alpha);
    for (std::uint32_t i = 0; i < cfg.iterations_per_subspace && !session.exhausted(); ++i) {
      // alpha moves after every query; keep alpha + beta inside a valid triangle.
      hi = std::min(hi, kPi - state.alpha);
      if (!(hi > lo)) break;
      const double mid = 0.5 * (lo + hi);
      bool ok = probe(mid);
      if (!ok && !session.exhausted()) ok = probe(-mid);
      if (ok)
        lo = mid;
      else
        hi = mid;
    }
  }

  state.queries = session.used();
  const bool improved = best.has_value();
  if (improved) {
    state.adversarial = std::move(*best);
    state.delta = best_delta;
    state.confirmed = std::move(best_image);
    ++state.step;
  }
  return {std::move(state), improved};
}

void AttackTrace::write_jsonl(std::ostream &os) const {
  for (const auto &r : records) {
    nlohmann::ordered_json j;
    j["step"] = r.step;
    j["queries"] = r.queries;
    j["delta_l2"] = r.delta_l2;
    j["rmse"] = r.rmse;
    j["alpha"] = r.alpha;
    os << j.dump() << '\n';
  }
}

AttackTrace AttackTrace::read_jsonl(std::istream &is) {
  AttackTrace t;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    t.records.push_back({j.at("step").get<std::uint64_t>(), j.at("queries").get<std::uint64_t>(),
                         j.at("delta_l2").get<double>(), j.at("rmse").get<double>(),
                         j.at("alpha").get<double>()});
  }
  return t;
}

AttackResult run_attack(const ImageTensor &x, Label y, const ImageTensor &init, Oracle &oracle,
                        const AttackConfig &cfg, RunOptions options) {
  cfg.validate();
  validate_image(x);
  if (init.shape() != x.shape())
    throw AttackError("initialization shape " + to_string(init.shape()) +
                      " differs from input " + to_string(x.shape()));
  if (cfg.mask.height() != x.height() || cfg.mask.width() != x.width())
    throw AttackError("attack mask does not match image plane " + to_string(x.shape()));

  QuerySession session(oracle, y, cfg.quantize_queries, cfg.max_queries, options.queries_spent);
  AttackState state;
  state.benign = dct2(x);
  state.alpha = kPi / 2;

  if (options.init_verified) {
    state.confirmed = prepare_query_image(init, cfg.quantize_queries);
  } else {
    if (session.exhausted()) throw AttackError("no query budget left to verify the initialization");
    if (!session.is_adversarial_image(init))
      throw AttackError("initialization is not adversarial for the given label");
    state.confirmed = session.last_image();
  }
  state.adversarial = dct2(state.confirmed);
  state.delta = norm2(state.adversarial - state.benign);
  state.queries = session.used();

  AttackResult result;
  auto record = [&] {
    result.trace.records.push_back(
        {state.step, state.queries, state.delta, rmse(state.confirmed, x), state.alpha});
  };
  record();

  std::mt19937_64 rng(cfg.seed);
  if (state.delta >= kDegenerateStart) {
    while (!session.exhausted()) {
      const Subspace2D plane = make_subspace(state.benign, state.adversarial, cfg.mask, rng);
      auto [next, improved] = search_subspace(std::move(state), plane, session, cfg);
      state = std::move(next);
      if (improved) record();
    }
  }

  result.adversarial = state.confirmed;
  result.queries = session.used();
  result.final_delta = state.delta;
  return result;
}

} // namespace fba2d
