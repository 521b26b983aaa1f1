#pragma once

// Run configurations and the invariant pipelines behind the command-line tool.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "relspec/builders.hpp"
#include "relspec/errors.hpp"
#include "relspec/expression.hpp"
#include "relspec/heat.hpp"
#include "relspec/index.hpp"
#include "relspec/io.hpp"
#include "relspec/sobolev.hpp"
#include "relspec/spectrum.hpp"
#include "relspec/zeta.hpp"

namespace relspec {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kEnvelopeSchema = "relspec/1";

struct TGridSpec {
  double min = 1e-3;
  double max = 20.0;
  std::size_t points = 64;
};

struct RunConfig {
  std::string model;
  json grid;
  json side_a;
  json side_b;
  TGridSpec t_grid;
  std::vector<double> s_grid{-0.75, -0.5, -0.25, 0.0, 0.25, 0.75};
  TGridSpec lambda_grid{0.0, 0.0, 0};
  FitOptions fit;
  double regular_tolerance = 1e-6;
  double decay_tolerance = 1e-6;
  double plateau_tolerance = 1e-6;
  int form_degree = 1;
  int sobolev_p = 1;
  int sobolev_r = 0;
  std::size_t padding = 0;
  std::uint64_t seed = 0;
  json canonical;  ///< the parsed document, with keys sorted

  static constexpr const char* kModels[] = {"schrodinger", "susy", "derham-circle", "eta-circle", "explicit", "padded"};

  static RunConfig parse(const std::string& text) {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      int line = 1, col = 1;
      for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
          ++line;
          col = 1;
        } else {
          ++col;
        }
      }
      throw ConfigError(std::string("config is not valid JSON: ") + e.what(), line, col);
    }
    return from_json(doc);
  }

  static RunConfig from_json(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    RunConfig c;
    c.canonical = doc;
    c.model = get<std::string>(doc, "model");
    bool known = false;
    for (const char* m : kModels) known = known || c.model == m;
    if (!known) throw ConfigError("unknown model '" + c.model + "'");
    if (doc.contains("grid")) c.grid = doc["grid"];
    if (!doc.contains("pair") || !doc["pair"].is_object() || !doc["pair"].contains("a") || !doc["pair"].contains("b"))
      throw ConfigError("config needs a 'pair' object with sides 'a' and 'b'");
    c.side_a = doc["pair"]["a"];
    c.side_b = doc["pair"]["b"];
    if (doc.contains("t_grid")) c.t_grid = grid_spec(doc["t_grid"], c.t_grid);
    if (doc.contains("lambda_grid")) c.lambda_grid = grid_spec(doc["lambda_grid"], c.lambda_grid);
    if (doc.contains("s_grid")) c.s_grid = doc["s_grid"].get<std::vector<double>>();
    if (doc.contains("fit")) {
      const auto& f = doc["fit"];
      if (f.contains("t_lo")) c.fit.t_lo = f["t_lo"].get<double>();
      if (f.contains("t_hi")) c.fit.t_hi = f["t_hi"].get<double>();
      if (f.contains("exponents")) c.fit.exponents = f["exponents"].get<std::vector<double>>();
      if (f.contains("points")) c.fit.points = f["points"].get<std::size_t>();
      if (f.contains("lattice_terms")) c.fit.lattice_terms = f["lattice_terms"].get<bool>();
    }
    if (doc.contains("tolerances")) {
      const auto& t = doc["tolerances"];
      c.regular_tolerance = positive(t, "eta_regular", c.regular_tolerance);
      c.decay_tolerance = positive(t, "decay", c.decay_tolerance);
      c.plateau_tolerance = positive(t, "plateau", c.plateau_tolerance);
      c.fit.residual_tolerance = positive(t, "fit_residual", c.fit.residual_tolerance);
    }
    if (doc.contains("form_degree")) c.form_degree = doc["form_degree"].get<int>();
    if (c.form_degree != 0 && c.form_degree != 1) throw ConfigError("form_degree must be 0 or 1");
    if (doc.contains("sobolev")) {
      c.sobolev_p = doc["sobolev"].value("p", 1);
      c.sobolev_r = doc["sobolev"].value("r", 0);
    }
    if (doc.contains("padding")) c.padding = doc["padding"].get<std::size_t>();
    if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
    c.validate_expressions();
    return c;
  }

  std::vector<double> t_values() const { return log_grid(t_grid.min, t_grid.max, t_grid.points); }

 private:
  template <class T>
  static T get(const json& j, const std::string& key) {
    if (!j.contains(key)) throw ConfigError("missing field '" + key + "'");
    try {
      return j[key].get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("field '" + key + "': " + e.what());
    }
  }
  static double positive(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    const double v = j[key].get<double>();
    if (!(v > 0.0)) throw ConfigError("tolerance '" + key + "' must be positive");
    return v;
  }
  static TGridSpec grid_spec(const json& j, TGridSpec d) {
    d.min = j.value("min", d.min);
    d.max = j.value("max", d.max);
    d.points = j.value("points", d.points);
    return d;
  }
  void validate_expressions() const {
    for (const json* side : {&side_a, &side_b}) {
      if (!side->is_object()) throw ConfigError("pair sides must be objects");
      for (const char* key : {"potential", "superpotential", "density", "connection"})
        if (side->contains(key) && (*side)[key].is_string()) Expression::parse((*side)[key].get<std::string>());
    }
  }
};

/// Stable content hash of the parts of a config that determine the operators.
inline std::string cache_key(const RunConfig& c) {
  json key = {{"model", c.model}, {"grid", c.grid}, {"a", c.side_a}, {"b", c.side_b}, {"padding", c.padding},
              {"seed", c.seed}};
  return fnv1a_hex(key.dump());
}

inline std::string config_hash(const RunConfig& c) { return fnv1a_hex(c.canonical.dump()); }

struct RunContext {
  std::optional<std::filesystem::path> cache_dir;
};

struct RunResult {
  json envelope;
  std::map<std::string, std::string> tables;  ///< file name → CSV content
};

namespace pipeline {

inline Grid1D make_grid(const json& g) {
  if (!g.is_object()) throw ConfigError("model needs a 'grid' object");
  const std::string kind = g.value("kind", std::string());
  const std::size_t n = g.value("n", std::size_t(0));
  if (kind == "interval") return Grid1D::interval(g.value("a", 0.0), g.value("b", 1.0), n);
  if (kind == "line-truncated") return Grid1D::line_truncated(g.value("radius", 12.0), n);
  if (kind == "circle") return Grid1D::circle(g.value("length", 2.0 * std::numbers::pi), n);
  throw ConfigError("unknown grid kind '" + kind + "'");
}

inline Expression expression(const json& side, const std::string& key) {
  if (!side.contains(key)) throw ConfigError("pair side is missing '" + key + "'");
  const auto& v = side[key];
  if (v.is_number()) return Expression::parse(fmt17(v.get<double>()));
  if (v.is_string()) return Expression::parse(v.get<std::string>());
  throw ConfigError("field '" + key + "' must be a number or an expression");
}

inline ScalarField field(const json& side, const std::string& key, const Grid1D& grid) {
  if (!side.contains(key)) throw ConfigError("pair side is missing '" + key + "'");
  const auto& v = side[key];
  if (v.is_number()) return ScalarField::constant(grid, v.get<double>(), std::to_string(v.get<double>()));
  if (v.is_string()) return Expression::parse(v.get<std::string>()).sample(grid);
  throw ConfigError("field '" + key + "' must be a number or an expression");
}

inline ExplicitSpectrum explicit_side(const json& side, std::uint64_t seed, int which) {
  const std::string law = side.value("law", std::string());
  if (law == "dirichlet-interval") return ExplicitSpectrum::dirichlet_interval(side.at("L").get<double>());
  if (law == "circle-laplace") return ExplicitSpectrum::circle_laplace(side.at("L").get<double>());
  if (law == "shifted-integers") return ExplicitSpectrum::shifted_integers(side.at("alpha").get<double>());
  if (law == "custom-sequence") return ExplicitSpectrum::custom(side.at("values").get<std::vector<double>>());
  if (law == "random") {
    std::mt19937_64 rng(seed * 2 + std::uint64_t(which));
    std::uniform_real_distribution<double> dist(side.value("min", 0.0), side.value("max", 10.0));
    std::vector<double> v(side.value("size", std::size_t(50)));
    for (auto& x : v) x = dist(rng);
    return ExplicitSpectrum::custom(std::move(v));
  }
  throw ConfigError("unknown spectral law '" + law + "'");
}

inline Spectrum as_spectrum(const ExplicitSpectrum& e) {
  if (!e.finite()) throw ConfigError("this invariant needs finite spectra (custom-sequence or random)");
  return make_spectrum(e.enumerate(1u << 30));
}

inline Spectrum square_values(const Spectrum& s) {
  std::vector<double> v;
  for (double x : s.eigenvalues) v.push_back(x * x);
  return make_spectrum(std::move(v));
}

/// Everything a run may need, built lazily from the config.
class Models {
 public:
  Models(const RunConfig& c, const RunContext& ctx) : c_(c), ctx_(ctx) {}

  const RunConfig& config() const { return c_; }

  Grid1D grid() const { return make_grid(c_.grid); }

  bool has_matrix_spectra() const { return c_.model != "explicit" && c_.model != "padded"; }

  /// Spectra of the even operators (H, D², Δ_q) on both sides.
  std::pair<Spectrum, Spectrum> even_spectra() {
    if (c_.model == "schrodinger") {
      const auto g = grid();
      return {solve(build_schrodinger(g, field(c_.side_a, "potential", g), "A")),
              solve(build_schrodinger(g, field(c_.side_b, "potential", g), "B"))};
    }
    if (c_.model == "susy") {
      const auto& p = graded();
      return {solve(p.d.squared()), solve(p.d_prime.squared())};
    }
    if (c_.model == "derham-circle") {
      const auto [ma, mb] = metrics();
      auto [a0, a1] = build_derham_circle(ma);
      auto [b0, b1] = build_derham_circle(mb);
      return c_.form_degree == 0 ? std::make_pair(solve(a0), solve(b0)) : std::make_pair(solve(a1), solve(b1));
    }
    if (c_.model == "eta-circle") {
      const auto [a, b] = odd_spectra();
      return {square_values(a), square_values(b)};
    }
    if (c_.model == "explicit") return {as_spectrum(explicit_a()), as_spectrum(explicit_b())};
    throw ConfigError("model '" + c_.model + "' has no plain spectra for this invariant");
  }

  std::pair<Spectrum, Spectrum> odd_spectra() {
    if (c_.model != "eta-circle") throw ConfigError("odd spectra need the eta-circle model");
    const auto g = grid();
    return {solve(build_eta_model(g, field(c_.side_a, "connection", g), "A")),
            solve(build_eta_model(g, field(c_.side_b, "connection", g), "B"))};
  }

  const GradedPair& graded() {
    if (c_.model != "susy") throw ConfigError("model '" + c_.model + "' is not graded; index needs the susy model");
    if (!graded_) {
      const auto g = grid();
      SusyOptions opt;
      opt.decay_tolerance = c_.decay_tolerance;
      graded_.emplace(build_susy_pair(g, field(c_.side_a, "superpotential", g), field(c_.side_b, "superpotential", g), opt));
    }
    return *graded_;
  }

  std::pair<MetricData, MetricData> metrics() const {
    if (c_.model != "derham-circle") throw ConfigError("metrics need the derham-circle model");
    const auto g = grid();
    return {MetricData(g, field(c_.side_a, "density", g)), MetricData(g, field(c_.side_b, "density", g))};
  }

  ExplicitSpectrum explicit_a() const { return explicit_side(c_.side_a, c_.seed, 0); }
  ExplicitSpectrum explicit_b() const { return explicit_side(c_.side_b, c_.seed, 1); }

  PaddedPair padded() const {
    if (c_.model != "padded") throw ConfigError("model is not padded");
    auto side = [&](const json& s, const char* name) {
      const auto g = make_grid(s.contains("grid") ? s["grid"] : c_.grid);
      const auto core = s.at("core").get<std::vector<std::size_t>>();
      if (core.size() != 2) throw ConfigError("core must be [begin, end)");
      return std::make_pair(build_schrodinger(g, field(s, "potential", g), name), IndexRange{core[0], core[1]});
    };
    auto [a, ca] = side(c_.side_a, "A");
    auto [b, cb] = side(c_.side_b, "B");
    return build_padded_pair(a, b, ca, cb, c_.padding);
  }

  /// Relative heat trace with its large-t data.
  RelativeTrace relative_trace() {
    PlateauOptions po;
    po.tolerance = c_.plateau_tolerance;
    if (c_.model == "explicit") {
      const auto a = explicit_a(), b = explicit_b();
      return make_relative_trace(a, b, po);
    }
    if (c_.model == "padded") {
      auto pair = std::make_shared<PaddedPair>(padded());
      auto pt = std::make_shared<ProjectedTrace>(*pair);
      RelativeTrace rt;
      rt.value = [pt](double t) { return pt->trace(t); };
      const auto ka = eigensolve(restrict_to(pair->op_a, detail::support(pair->proj_p), "A"));
      const auto kb = eigensolve(restrict_to(pair->op_b, detail::support(pair->proj_p2), "B"));
      rt.h = double(ka.kernel_dim) - double(kb.kernel_dim);
      rt.gap = std::min(ka.gap_mu, kb.gap_mu);
      rt.lambda_max = std::max(ka.max_abs(), kb.max_abs());
      return rt;
    }
    const auto [a, b] = even_spectra();
    return make_relative_trace(a, b, po);
  }

  std::size_t cache_hits() const { return hits_; }

 private:
  Spectrum solve(const SelfAdjointOperator& op) {
    bool hit = false;
    auto s = eigensolve_cached(op, ctx_.cache_dir, &hit);
    hits_ += hit ? 1 : 0;
    return s;
  }

  const RunConfig& c_;
  RunContext ctx_;
  std::optional<GradedPair> graded_;
  std::size_t hits_ = 0;
};

inline json fit_json(const AsymptoticFit& f) {
  json coeffs = json::array();
  for (std::size_t i = 0; i < f.exponents.size(); ++i)
    coeffs.push_back({{"alpha", f.exponents[i]}, {"a", f.coefficients[i]}});
  return {{"h", f.h},
          {"coefficients", coeffs},
          {"fit_window", {f.t_lo, f.t_hi}},
          {"condition_number", f.condition},
          {"residual", f.residual}};
}

inline json zeta_json(const RelativeZeta& z) {
  json poles = json::array();
  for (const auto& p : z.poles) poles.push_back({{"s", p.position}, {"residue", p.residue}});
  return {{"zetaAtZero", z.value_at_zero},
          {"zetaPrimeAtZero", z.derivative_at_zero},
          {"poles", poles},
          {"components",
           {{"expansion", z.expansion_part},
            {"remainder", z.remainder_part},
            {"large_t", z.large_t_part},
            {"constant", z.constant_part}}},
          {"split", z.split}};
}

inline json index_json(const IndexReport& r) {
  json j = {{"relativeIndex", r.relative_index},
            {"tConstancyDrift", r.t_constancy_drift},
            {"ncScattering", r.nc_scattering},
            {"nearInteger", r.near_integer},
            {"gapCertified", r.gap_certified}};
  if (r.ind_a) j["indA"] = *r.ind_a;
  if (r.ind_b) j["indB"] = *r.ind_b;
  if (r.xi_plus_gap) j["xiPlusInGap"] = *r.xi_plus_gap;
  if (r.xi_minus_gap) j["xiMinusInGap"] = *r.xi_minus_gap;
  return j;
}

inline std::vector<double> lambda_values(const RunConfig& c, const Spectrum& a, const Spectrum& b) {
  TGridSpec g = c.lambda_grid;
  if (g.points == 0) {
    double lo = 0.0, hi = 1.0;
    if (a.size() + b.size() > 0) {
      lo = std::min(a.size() ? a.eigenvalues.front() : b.eigenvalues.front(),
                    b.size() ? b.eigenvalues.front() : a.eigenvalues.front());
      hi = std::max(a.size() ? a.eigenvalues.back() : b.eigenvalues.back(),
                    b.size() ? b.eigenvalues.back() : a.eigenvalues.back());
    }
    const double pad = 0.05 * std::max(1.0, hi - lo);
    g = {lo - pad, hi + pad, 513};
  }
  std::vector<double> v(g.points);
  for (std::size_t i = 0; i < g.points; ++i)
    v[i] = g.min + (g.max - g.min) * double(i) / double(std::max<std::size_t>(1, g.points - 1));
  return v;
}

}  // namespace pipeline

inline const std::vector<std::string>& invariant_names() {
  static const std::vector<std::string> names{"heat-trace", "fit", "zeta", "det", "index",
                                              "ssf", "eta", "torsion", "sobolev-dist", "certify"};
  return names;
}

namespace pipeline {

inline void run_one(const RunConfig& config, const std::string& invariant, Models& models, RunResult& out,
                    json& results, json& timings) {
  using clock = std::chrono::steady_clock;
  const auto& names = invariant_names();
  if (std::find(names.begin(), names.end(), invariant) == names.end())
    throw ConfigError("unknown invariant '" + invariant + "'");
  auto stage = [&](const std::string& name, auto&& fn) {
    const auto t0 = clock::now();
    fn();
    timings[name] = std::chrono::duration<double>(clock::now() - t0).count();
  };
  const std::string& m = config.model;
  json tol = {{"fit_residual", config.fit.residual_tolerance}, {"plateau", config.plateau_tolerance}};
  const auto before = results;

  if (invariant == "heat-trace") {
    stage("heat-trace", [&] {
      const auto ts = config.t_values();
      HeatTraceSamples s;
      if (m == "susy") {
        s = relative_supertrace(models.graded(), ts);
      } else if (m == "padded") {
        s = projected_relative_trace(models.padded(), ts);
      } else {
        const auto rt = models.relative_trace();
        s.t = ts;
        for (double t : ts) s.values.push_back(rt.value(t));
      }
      results["heatTrace"] = {{"t", s.t}, {"trace", s.values}};
      if (s.supertrace) results["heatTrace"]["supertrace"] = *s.supertrace;
      out.tables["heat_trace.csv"] = heat_trace_csv(s);
    });
  } else if (invariant == "fit" || invariant == "zeta" || invariant == "det") {
    if (m == "eta-circle") throw ConfigError("use the eta invariant for the eta-circle model");
    RelativeTrace rt;
    stage("spectra", [&] { rt = models.relative_trace(); });
    AsymptoticFit fit;
    stage("fit", [&] { fit = fit_expansion(rt, config.fit); });
    results["fit"] = pipeline::fit_json(fit);
    if (invariant != "fit") {
      stage("zeta", [&] {
        const auto z = relative_zeta_at_zero(rt, fit);
        results["zeta"] = pipeline::zeta_json(z);
        results["determinant"] = {{"value", relative_determinant(z)}};
        std::vector<std::pair<double, double>> rows;
        for (double s : config.s_grid) {
          try {
            rows.emplace_back(s, relative_zeta(rt, fit, s));
          } catch (const DomainError&) {
            // pole of the continuation: not sampled
          }
        }
        json samples = json::array();
        for (const auto& [s, v] : rows) samples.push_back({{"s", s}, {"zeta", v}});
        results["zetaSamples"] = samples;
        out.tables["zeta.csv"] = two_column_csv("s", "zeta", rows);
      });
    }
    results["pair"] = {{"a", config.side_a}, {"b", config.side_b}};
  } else if (invariant == "index") {
    stage("index", [&] {
      const auto& p = models.graded();
      const auto ts = config.t_values();
      const auto rep = scattering_index(p, ts);
      results["index"] = pipeline::index_json(rep);
      json w = json::object();
      for (const auto* d : {&p.d, &p.d_prime}) {
        try {
          const auto wi = witten_index(*d);
          w[d == &p.d ? "a" : "b"] = {{"index", wi.index}, {"kernelIndex", wi.kernel_index}, {"gapMu", wi.gap}};
        } catch (const HypothesisError& e) {
          w[d == &p.d ? "a" : "b"] = {{"error", e.what()}};
        }
      }
      results["wittenIndex"] = w;
    });
    tol["near_integer"] = 1e-6;
    tol["nc"] = 1e-8;
  } else if (invariant == "ssf") {
    stage("ssf", [&] {
      const auto [a, b] = models.even_spectra();
      const auto shift = spectral_shift(a, b, pipeline::lambda_values(config, a, b));
      results["spectralShift"] = {{"lambda", shift.lambda},
                                  {"xi", shift.xi},
                                  {"heatIdentityResidual", shift.heat_identity_residual},
                                  {"testFunctionResidual", shift.test_function_residual}};
      if (shift.gap_window) results["spectralShift"]["gapWindow"] = {shift.gap_window->first, shift.gap_window->second};
      out.tables["xi.csv"] = xi_csv(shift);
    });
    tol["krein"] = 1e-8;
  } else if (invariant == "eta") {
    EtaOptions eo;
    eo.fit = config.fit;
    eo.regular_tolerance = config.regular_tolerance;
    stage("eta", [&] {
      EtaResult r;
      if (m == "eta-circle") {
        const auto [a, b] = models.odd_spectra();
        r = relative_eta(a, b, config.s_grid, eo);
      } else if (m == "explicit") {
        r = relative_eta(models.explicit_a(), models.explicit_b(), config.s_grid, eo);
      } else {
        throw ConfigError("eta needs the eta-circle or explicit model");
      }
      results["eta"] = {{"aMinusHalf", r.a_minus_half}, {"regular", r.regular}, {"fit", pipeline::fit_json(r.fit)}};
      if (r.regular) {
        results["eta"]["etaAtZero"] = r.eta_at_zero;
        out.tables["eta.csv"] = two_column_csv("s", "eta", r.samples);
      }
    });
    tol["eta_regular"] = config.regular_tolerance;
  } else if (invariant == "torsion") {
    if (m != "derham-circle") throw ConfigError("torsion needs the derham-circle model");
    stage("torsion", [&] {
      const auto [a, b] = models.metrics();
      const auto r = relative_torsion(a, b, config.fit);
      results["torsion"] = {{"logTorsion", r.log_torsion}, {"zetaPrime0", r.zeta_prime_0}, {"zetaPrime1", r.zeta_prime_1}};
    });
  } else if (invariant == "sobolev-dist") {
    if (m != "derham-circle") throw ConfigError("sobolev-dist needs the derham-circle model (two circle metrics)");
    stage("sobolev", [&] {
      const auto [a, b] = models.metrics();
      const auto r = discrete_sobolev_distance(a, b, config.sobolev_p, config.sobolev_r);
      results["sobolev"] = {{"p", r.p}, {"r", r.r}, {"norm", r.norm}, {"c1", r.c1}, {"c2", r.c2},
                            {"inComponent", r.in_component}};
      if (r.norm > 0.0) results["sobolev"]["symmetryDefect"] = symmetry_defect(a, b, config.sobolev_p, config.sobolev_r);
    });
  } else if (invariant == "certify") {
    stage("certify", [&] {
      if (m == "susy") {
        const auto ts = log_grid(std::max(config.t_grid.min, 0.2), std::min(config.t_grid.max, 5.0), 6);
        const auto c = susy_scattering_certificate(models.graded(), ts);
        results["certificate"] = {{"t", c.t},           {"heatTraceNorm", c.heat_curve},
                                  {"chargeTraceNorm", c.charge_curve}, {"heatSup", c.heat_sup},
                                  {"chargeSup", c.charge_sup},         {"granted", c.granted}};
      } else if (m == "schrodinger") {
        const auto g = models.grid();
        if (g.kind() != GridKind::line_truncated) throw ConfigError("truncation certificate needs a line-truncated grid");
        const auto va = pipeline::expression(config.side_a, "potential");
        const auto vb = pipeline::expression(config.side_b, "potential");
        const auto r = certify_truncation(va, vb, g.upper(), g.size(), config.t_values(), 1e-8);
        results["truncation"] = {{"radius", r.radius}, {"spacing", r.spacing}, {"maxChange", r.max_change},
                                 {"certified", r.certified}};
      } else {
        throw ConfigError("certify needs the susy or schrodinger model");
      }
    });
  }

  for (auto& [key, value] : results.items())
    if (!before.contains(key) && value.is_object()) value["tolerance"] = tol;
}

}  // namespace pipeline

/// Builds the operators of `config`, computes the requested invariants and packs them into an
/// envelope. Operators and spectra are shared between invariants of one run.
inline RunResult run(const RunConfig& config, const std::vector<std::string>& invariants, const RunContext& ctx = {}) {
  if (invariants.empty()) throw ConfigError("no invariant requested");
  RunResult out;
  json results = json::object();
  json timings = json::object();
  pipeline::Models models(config, ctx);
  for (const auto& inv : invariants) pipeline::run_one(config, inv, models, out, results, timings);
  if (models.cache_hits() > 0) timings["cache_hits"] = models.cache_hits();
  out.envelope = {{"schema", kEnvelopeSchema},
                  {"tool_version", kToolVersion},
                  {"config_hash", config_hash(config)},
                  {"cache_key", cache_key(config)},
                  {"model", config.model},
                  {"invariants", invariants},
                  {"results", results},
                  {"timings", timings}};
  return out;
}

inline RunResult run(const RunConfig& config, const std::string& invariant, const RunContext& ctx = {}) {
  return run(config, std::vector<std::string>{invariant}, ctx);
}

}  // namespace relspec
