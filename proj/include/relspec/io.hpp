#pragma once

// Text formats: CSV tables, the versioned operator format, the spectrum cache, atomic writes.

#include <unistd.h>

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "relspec/errors.hpp"
#include "relspec/heat.hpp"
#include "relspec/index.hpp"
#include "relspec/operator.hpp"
#include "relspec/spectrum.hpp"

namespace relspec {

inline constexpr const char* kOperatorMagic = "RELSPEC-OP v1";
inline constexpr const char* kSpectrumMagic = "RELSPEC-SPECTRUM v1";

inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

/// 17 significant digits: round-trips every double.
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Writes through a temporary file in the same directory and renames it into place, so the
/// target is either absent, the old file, or the complete new file.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw Error("write to " + tmp.string() + " failed");
    }
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// CSV

inline std::string heat_trace_csv(const HeatTraceSamples& s) {
  std::string out = s.supertrace ? "t,trace,supertrace\n" : "t,trace\n";
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    out += fmt17(s.t[i]) + "," + fmt17(s.values[i]);
    if (s.supertrace) out += "," + fmt17((*s.supertrace)[i]);
    out += "\n";
  }
  return out;
}

inline HeatTraceSamples parse_heat_trace_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty heat trace table");
  const bool super = line == "t,trace,supertrace";
  if (!super && line != "t,trace") throw ConfigError("unexpected heat trace header '" + line + "'", 1, 1);
  HeatTraceSamples s;
  if (super) s.supertrace.emplace();
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        cells.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("malformed number '" + cell + "'", lineno, 1);
      }
    }
    if (cells.size() != (super ? 3u : 2u)) throw ConfigError("wrong column count", lineno, 1);
    s.t.push_back(cells[0]);
    s.values.push_back(cells[1]);
    if (super) s.supertrace->push_back(cells[2]);
  }
  s.graded = super;
  s.validate();
  return s;
}

inline std::string xi_csv(const SpectralShift& s) {
  std::string out = "lambda,xi\n";
  for (std::size_t i = 0; i < s.lambda.size(); ++i) out += fmt17(s.lambda[i]) + "," + fmt17(s.xi[i]) + "\n";
  return out;
}

inline std::string two_column_csv(const std::string& h1, const std::string& h2,
                                  const std::vector<std::pair<double, double>>& rows) {
  std::string out = h1 + "," + h2 + "\n";
  for (const auto& [a, b] : rows) out += fmt17(a) + "," + fmt17(b) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Operator text format

inline std::string serialize_operator(const SelfAdjointOperator& op) {
  std::ostringstream o;
  const auto& sp = op.space();
  const auto& g = sp.grid;
  o << kOperatorMagic << "\n";
  o << "grid " << to_string(g.kind()) << " " << to_string(g.boundary()) << " " << g.size() << " " << fmt17(g.lower())
    << " " << fmt17(g.upper()) << " " << (g.uniform() ? "uniform" : "nodes") << "\n";
  if (!g.uniform()) {
    o << "grid-nodes";
    for (double x : g.nodes()) o << " " << fmt17(x);
    o << "\n";
  }
  o << "label " << (op.label().empty() ? "-" : op.label()) << "\n";
  o << "space " << sp.dimension() << " " << sp.blocks << " " << op.multiplicity() << " " << (op.odd() ? 1 : 0) << " "
    << to_string(op.storage()) << "\n";
  o << "weights";
  for (double w : sp.weight) o << " " << fmt17(w);
  o << "\npositions";
  for (double x : sp.position) o << " " << fmt17(x);
  o << "\ngrading";
  if (op.graded())
    for (int t : *op.grading()) o << " " << t;
  else
    o << " none";
  const SparseMatrix s = op.sparse();
  o << "\nentries " << s.nonZeros() << "\n";
  for (Eigen::Index i = 0; i < s.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(s, i); it; ++it) o << it.row() << " " << it.col() << " " << fmt17(it.value()) << "\n";
  return o.str();
}

inline SelfAdjointOperator parse_operator(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto next = [&](const std::string& key) {
    if (!std::getline(in, line)) throw ConfigError("operator file truncated before '" + key + "'", lineno + 1, 1);
    ++lineno;
    std::istringstream ls(line);
    std::string k;
    ls >> k;
    if (k != key) throw ConfigError("expected '" + key + "' record", lineno, 1);
    std::string rest;
    std::getline(ls, rest);
    return std::istringstream(rest);
  };
  if (!std::getline(in, line) || line != kOperatorMagic) throw ConfigError("missing RELSPEC-OP v1 header", 1, 1);
  ++lineno;
  auto gl = next("grid");
  std::string kind, boundary, layout;
  std::size_t n = 0;
  double lo = 0, hi = 0;
  gl >> kind >> boundary >> n >> lo >> hi >> layout;
  if (!gl) throw ConfigError("malformed grid record", lineno, 1);
  std::optional<Grid1D> grid;
  if (layout == "nodes") {
    auto nl = next("grid-nodes");
    std::vector<double> nodes(n);
    for (auto& x : nodes) nl >> x;
    grid = Grid1D::from_nodes(nodes);
  } else if (kind == "circle") {
    grid = Grid1D::circle(hi - lo, n);
  } else if (kind == "line-truncated") {
    grid = Grid1D::line_truncated(hi, n);
  } else if (kind == "interval") {
    grid = Grid1D::interval(lo, hi, n);
  } else {
    throw ConfigError("unknown grid kind '" + kind + "'", lineno, 1);
  }
  auto ll = next("label");
  std::string label;
  ll >> label;
  if (label == "-") label.clear();
  auto sl = next("space");
  std::size_t dim = 0, blocks = 1;
  int mult = 1, odd = 0;
  std::string storage;
  sl >> dim >> blocks >> mult >> odd >> storage;
  if (!sl) throw ConfigError("malformed space record", lineno, 1);
  auto wl = next("weights");
  std::vector<double> w(dim), pos(dim);
  for (auto& x : w) wl >> x;
  auto pl = next("positions");
  for (auto& x : pos) pl >> x;
  auto tl = next("grading");
  std::optional<std::vector<int>> tau;
  std::string first;
  tl >> first;
  if (first != "none") {
    tau.emplace();
    tau->push_back(std::stoi(first));
    int v;
    while (tl >> v) tau->push_back(v);
  }
  auto el = next("entries");
  std::size_t nnz = 0;
  el >> nnz;
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t k = 0; k < nnz; ++k) {
    if (!std::getline(in, line)) throw ConfigError("operator entries truncated", lineno + 1, 1);
    ++lineno;
    std::istringstream es(line);
    long r, c;
    double v;
    es >> r >> c >> v;
    if (!es) throw ConfigError("malformed entry", lineno, 1);
    trip.emplace_back(int(r), int(c), v);
  }
  WeightedSpace space(*grid, std::move(w), std::move(pos), blocks);
  SparseMatrix m(static_cast<int>(dim), static_cast<int>(dim));
  m.setFromTriplets(trip.begin(), trip.end());
  if (storage == "dense")
    return SelfAdjointOperator(std::move(space), Eigen::MatrixXd(m), label, tau, odd != 0, mult);
  return SelfAdjointOperator(std::move(space), std::move(m), label, tau, odd != 0, mult);
}

/// Content hash of an operator (its serialized form).
inline std::string operator_hash(const SelfAdjointOperator& op) { return fnv1a_hex(serialize_operator(op)); }

// ---------------------------------------------------------------------------
// Spectrum cache

inline std::string serialize_spectrum(const Spectrum& s) {
  std::string out = std::string(kSpectrumMagic) + "\n";
  out += "threshold " + fmt17(s.kernel_threshold) + "\n";
  out += "kernel " + std::to_string(s.kernel_dim) + "\n";
  out += "count " + std::to_string(s.eigenvalues.size()) + "\n";
  for (double x : s.eigenvalues) out += fmt17(x) + "\n";
  return out;
}

inline Spectrum parse_spectrum(const std::string& text) {
  std::istringstream in(text);
  std::string magic, key;
  std::getline(in, magic);
  if (magic != kSpectrumMagic) throw ConfigError("missing spectrum cache header", 1, 1);
  double thr = 0.0;
  std::size_t kernel = 0, count = 0;
  in >> key >> thr >> key >> kernel >> key >> count;
  std::vector<double> v(count);
  for (auto& x : v) in >> x;
  if (!in) throw ConfigError("spectrum cache entry truncated");
  Spectrum s = make_spectrum(std::move(v), thr);
  if (s.kernel_dim != kernel) throw ConfigError("spectrum cache entry inconsistent");
  return s;
}

/// Eigenvalues only; looked up in (and stored to) `cache_dir` under the operator hash.
inline Spectrum eigensolve_cached(const SelfAdjointOperator& op, const std::optional<std::filesystem::path>& cache_dir,
                                  bool* hit = nullptr) {
  if (hit) *hit = false;
  if (!cache_dir) return eigensolve(op);
  const auto path = *cache_dir / (operator_hash(op) + ".spectrum");
  if (std::filesystem::exists(path)) {
    try {
      auto s = parse_spectrum(read_file(path));
      if (hit) *hit = true;
      return s;
    } catch (const ConfigError&) {
      // stale or damaged entry: recompute
    }
  }
  auto s = eigensolve(op);
  atomic_write(path, serialize_spectrum(s));
  return s;
}

}  // namespace relspec
