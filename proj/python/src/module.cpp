#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fba2d/harness.hpp"
#include "fba2d/http_oracle.hpp"

namespace py = pybind11;
using namespace fba2d;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Python side uses (H, W) or (H, W, C) arrays; the library stores planes.
template <class G> G from_numpy(const Array &a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw std::invalid_argument("expected an (H, W[, C]) array");
  const Shape s{static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                a.ndim() == 3 ? static_cast<std::size_t>(a.shape(2)) : 1};
  G g(s);
  const double *p = a.data();
  for (std::size_t i = 0; i < s.height; ++i)
    for (std::size_t j = 0; j < s.width; ++j)
      for (std::size_t c = 0; c < s.channels; ++c)
        g.at(c, i, j) = p[(i * s.width + j) * s.channels + c];
  return g;
}

template <class G> Array to_numpy(const G &g) {
  const Shape &s = g.shape();
  Array out({s.height, s.width, s.channels});
  double *p = out.mutable_data();
  for (std::size_t i = 0; i < s.height; ++i)
    for (std::size_t j = 0; j < s.width; ++j)
      for (std::size_t c = 0; c < s.channels; ++c)
        p[(i * s.width + j) * s.channels + c] = g.at(c, i, j);
  return out;
}

ImageTensor image(const Array &a) { return from_numpy<ImageTensor>(a); }

Label label_of(int y) {
  if (y != 0 && y != 1) throw std::invalid_argument("label must be 0 (real) or 1 (fake)");
  return static_cast<Label>(y);
}

Shape shape_of(py::tuple t) {
  if (t.size() != 2 && t.size() != 3) throw std::invalid_argument("shape must be (H, W[, C])");
  return Shape{t[0].cast<std::size_t>(), t[1].cast<std::size_t>(),
               t.size() == 3 ? t[2].cast<std::size_t>() : 1};
}

py::dict trace_to_py(const AttackTrace &t) {
  py::list steps, queries, delta, rmse_v, alpha;
  for (const auto &r : t.records) {
    steps.append(r.step);
    queries.append(r.queries);
    delta.append(r.delta_l2);
    rmse_v.append(r.rmse);
    alpha.append(r.alpha);
  }
  py::dict d;
  d["step"] = steps;
  d["queries"] = queries;
  d["delta_l2"] = delta;
  d["rmse"] = rmse_v;
  d["alpha"] = alpha;
  return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Frequency-domain hard-label attacks on real/fake image detectors.";

  py::register_exception<AttackError>(m, "AttackError", PyExc_RuntimeError);
  py::register_exception<TransportError>(m, "TransportError", PyExc_RuntimeError);

  m.def("dct2", [](const Array &a) { return to_numpy(dct2(image(a))); },
        "Orthonormal 2-D DCT-II of every channel.");
  m.def("idct2", [](const Array &a) { return to_numpy(idct2(from_numpy<Spectrum>(a))); });
  m.def(
      "frequency_mask",
      [](std::size_t h, std::size_t w, double low, double high) {
        const auto mask = FrequencyMask::bands(h, w, low, high);
        py::array_t<bool> out({h, w});
        auto o = out.mutable_unchecked<2>();
        for (std::size_t i = 0; i < h; ++i)
          for (std::size_t j = 0; j < w; ++j) o(i, j) = mask.selected(i, j);
        return out;
      },
      py::arg("height"), py::arg("width"), py::arg("low") = 0.0, py::arg("high") = 0.0,
      "Boolean (H, W) selection of the lowest and highest anti-diagonal bands.");

  m.def("delta_next", &delta_next, py::arg("delta"), py::arg("alpha"), py::arg("beta"));
  m.def(
      "update_alpha",
      [](double alpha, bool success, double gamma, double lam, double tau) {
        AttackConfig c;
        c.alpha_step = gamma;
        c.alpha_shrink = lam;
        c.alpha_bound = tau;
        return update_alpha(alpha, success, c);
      },
      py::arg("alpha"), py::arg("success"), py::arg("gamma") = 0.01, py::arg("lam") = 0.05,
      py::arg("tau") = 0.1);

  py::class_<Oracle>(m, "Oracle")
      .def("query", [](Oracle &o, const Array &a) { return static_cast<int>(o.query(image(a))); })
      .def_property_readonly("queries", &Oracle::queries);

  py::class_<HalfspaceOracle, Oracle>(m, "HalfspaceOracle")
      .def(py::init([](const Array &w, double b) {
             return std::make_unique<HalfspaceOracle>(from_numpy<Spectrum>(w), b);
           }),
           py::arg("weight"), py::arg("bias"))
      .def("score", [](const HalfspaceOracle &o, const Array &a) { return o.score(image(a)); })
      .def("distance_to_boundary",
           [](const HalfspaceOracle &o, const Array &a) { return o.distance_to_boundary(image(a)); });

  py::class_<FreqEnergyOracle, Oracle>(m, "FreqEnergyOracle")
      .def(py::init([](std::size_t h, std::size_t w, double threshold, double high) {
             return std::make_unique<FreqEnergyOracle>(FrequencyMask::bands(h, w, 0.0, high),
                                                       threshold);
           }),
           py::arg("height"), py::arg("width"),
           py::arg("threshold") = FreqEnergyDefaults::threshold,
           py::arg("high_fraction") = FreqEnergyDefaults::high_fraction)
      .def("energy_fraction",
           [](const FreqEnergyOracle &o, const Array &a) { return o.energy_fraction(image(a)); });

  py::class_<FunctionOracle, Oracle>(m, "CallableOracle")
      .def(py::init([](std::function<int(py::array_t<double>)> fn) {
             return std::make_unique<FunctionOracle>([fn](const ImageTensor &img) {
               py::gil_scoped_acquire gil;
               return label_of(fn(to_numpy(img)));
             });
           }),
           py::arg("fn"), "Wraps fn(image) -> 0 (real) or 1 (fake).");

  py::class_<HttpOracle, Oracle>(m, "HttpOracle")
      .def(py::init([](const std::string &endpoint, int timeout_ms,
                       std::optional<std::string> token) {
             HttpOracleOptions o;
             o.timeout = std::chrono::milliseconds(timeout_ms);
             o.bearer_token = std::move(token);
             return std::make_unique<HttpOracle>(endpoint, o);
           }),
           py::arg("endpoint"), py::arg("timeout_ms") = 5000, py::arg("bearer_token") = py::none());

  m.def(
      "run_attack",
      [](const Array &x, int y, const Array &init, Oracle &oracle, std::uint64_t max_queries,
         double low, double high, std::uint64_t seed, bool quantize) {
        const ImageTensor xi = image(x);
        AttackConfig cfg;
        cfg.max_queries = max_queries;
        cfg.mask = FrequencyMask::bands(xi.height(), xi.width(), low, high);
        cfg.seed = seed;
        cfg.quantize_queries = quantize;
        const auto r = run_attack(xi, label_of(y), image(init), oracle, cfg);
        py::dict d;
        d["adversarial"] = to_numpy(r.adversarial);
        d["queries"] = r.queries;
        d["delta"] = r.final_delta;
        d["trace"] = trace_to_py(r.trace);
        return d;
      },
      py::arg("x"), py::arg("label"), py::arg("init"), py::arg("oracle"),
      py::arg("max_queries") = 500, py::arg("low") = 0.2, py::arg("high") = 0.0,
      py::arg("seed") = 0, py::arg("quantize") = true,
      "Boundary walk from an adversarial init towards x; returns adversarial, queries, delta, trace.");

  py::class_<SurrogateModel>(m, "Surrogate")
      .def("logit", [](const SurrogateModel &s, const Array &a) { return s.logit(image(a)); })
      .def("save", [](const SurrogateModel &s, const std::string &p) { save_surrogate(p, s); })
      .def_static("load", [](const std::string &p) { return load_surrogate(p); });

  m.def(
      "train_surrogate",
      [](const std::vector<Array> &images, const std::vector<int> &labels, std::uint32_t epochs,
         std::uint64_t seed) {
        if (images.size() != labels.size())
          throw std::invalid_argument("images and labels differ in length");
        std::vector<std::pair<ImageTensor, Label>> data;
        for (std::size_t k = 0; k < images.size(); ++k)
          data.emplace_back(image(images[k]), label_of(labels[k]));
        TrainingOptions o;
        o.epochs = epochs;
        o.seed = seed;
        auto r = train_surrogate(data, o);
        return py::make_tuple(std::move(r.model), r.train_accuracy);
      },
      py::arg("images"), py::arg("labels"), py::arg("epochs") = 500, py::arg("seed") = 0,
      "Returns (surrogate, train_accuracy).");

  m.def(
      "build_soup",
      [](const SurrogateModel &s, const Array &x, int y) {
        return to_numpy(build_soup(s, image(x), label_of(y), SoupConfig{}).soup);
      },
      py::arg("surrogate"), py::arg("x"), py::arg("label"));
  m.def(
      "make_soup",
      [](const std::vector<Array> &snaps, std::vector<double> weights) {
        std::vector<ImageTensor> imgs;
        for (const auto &a : snaps) imgs.push_back(image(a));
        return to_numpy(make_soup(imgs, weights));
      },
      py::arg("snapshots"), py::arg("weights"));

  m.def("rmse", [](const Array &a, const Array &b) { return rmse(image(a), image(b)); });
  m.def("psnr", [](const Array &a, const Array &b) { return psnr(image(a), image(b)); });
  m.def("ssim", [](const Array &a, const Array &b) { return ssim(image(a), image(b)); });

  m.def(
      "make_fake_like",
      [](py::tuple shape, std::uint64_t seed) {
        auto rng = derived_rng(seed, 0, 0);
        return to_numpy(make_fake_like(shape_of(shape), rng));
      },
      py::arg("shape"), py::arg("seed") = 0);
  m.def(
      "make_real_like",
      [](py::tuple shape, std::uint64_t seed) {
        auto rng = derived_rng(seed, 0, 0);
        return to_numpy(make_real_like(shape_of(shape), rng));
      },
      py::arg("shape"), py::arg("seed") = 0);
}
