#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "zscatter/asymptotics.hpp"
#include "zscatter/diagnostics.hpp"
#include "zscatter/field.hpp"
#include "zscatter/wave_operator.hpp"

namespace zscatter {

// ---- field snapshots --------------------------------------------------------
//
// 64-byte text header "ZSC1 dim=<d> N=<N> L=<L> t=<t> kind=<c|r>", blank
// padded, byte 63 a newline; then N^dim (re, im) float64 pairs, little
// endian, x fastest (the in-memory order of Field).

inline constexpr std::size_t kSnapshotHeaderBytes = 64;

struct SnapshotHeader {
  int dim = 0;
  int n = 0;
  double box = 0.0;
  double time = 0.0;
  Kind kind = Kind::complex;
};

namespace detail {

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void put_le(std::ostream& os, double x) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline double get_le(const unsigned char* b) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | b[i];
  return std::bit_cast<double>(bits);
}

}  // namespace detail

inline std::string snapshot_header(const SnapshotHeader& h) {
  std::string s = "ZSC1 dim=" + std::to_string(h.dim) + " N=" + std::to_string(h.n) +
                  " L=" + detail::format_double(h.box) + " t=" + detail::format_double(h.time) +
                  " kind=" + (h.kind == Kind::real ? "r" : "c");
  if (s.size() > kSnapshotHeaderBytes - 1) throw std::length_error("snapshot header too long");
  s.resize(kSnapshotHeaderBytes - 1, ' ');
  s.push_back('\n');
  return s;
}

inline SnapshotHeader parse_snapshot_header(const std::string& text) {
  if (text.size() != kSnapshotHeaderBytes || text.compare(0, 5, "ZSC1 ") != 0) {
    throw std::runtime_error("snapshot: bad magic");
  }
  SnapshotHeader h;
  std::istringstream in(text.substr(5));
  std::string tok;
  int seen = 0;
  while (in >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw std::runtime_error("snapshot: bad header token " + tok);
    std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "dim") h.dim = std::stoi(val);
    else if (key == "N") h.n = std::stoi(val);
    else if (key == "L") h.box = std::stod(val);
    else if (key == "t") h.time = std::stod(val);
    else if (key == "kind") {
      if (val != "c" && val != "r") throw std::runtime_error("snapshot: bad kind " + val);
      h.kind = val == "r" ? Kind::real : Kind::complex;
    } else {
      throw std::runtime_error("snapshot: unknown header key " + key);
    }
    ++seen;
  }
  if (seen != 5) throw std::runtime_error("snapshot: incomplete header");
  return h;
}

inline void write_snapshot(const std::filesystem::path& path, const Field& f, double time) {
  Field x = f.space() == Space::physical ? f : from_frequency(f);
  const Grid& g = x.grid();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("snapshot: cannot write " + path.string());
  os << snapshot_header({g.dim(), g.points_per_axis(), g.box_half_width(), time, x.kind()});
  for (std::size_t i = 0; i < x.size(); ++i) {
    detail::put_le(os, x[i].real());
    detail::put_le(os, x.is_real() ? 0.0 : x[i].imag());
  }
  if (!os) throw std::runtime_error("snapshot: write failed for " + path.string());
}

struct Snapshot {
  SnapshotHeader header;
  Field field;
};

inline Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("snapshot: cannot open " + path.string());
  std::string head(kSnapshotHeaderBytes, '\0');
  is.read(head.data(), static_cast<std::streamsize>(head.size()));
  if (!is) throw std::runtime_error("snapshot: truncated header in " + path.string());
  Snapshot s;
  s.header = parse_snapshot_header(head);
  Grid g(s.header.dim, s.header.n, s.header.box);
  s.field = Field(g, s.header.kind);
  std::vector<unsigned char> buf(16 * g.size());
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!is) throw std::runtime_error("snapshot: truncated payload in " + path.string());
  for (std::size_t i = 0; i < g.size(); ++i) {
    s.field[i] = Complex(detail::get_le(&buf[16 * i]), detail::get_le(&buf[16 * i + 8]));
  }
  return s;
}

// ---- norm tables ------------------------------------------------------------

/// Column order: time, the standard names, then extra names in order of
/// first appearance.
inline std::vector<std::string> csv_columns(const std::vector<NormSnapshot>& rows) {
  std::vector<std::string> cols = norm_names();
  std::set<std::string> known(cols.begin(), cols.end());
  for (const auto& r : rows) {
    for (const auto& [name, value] : r.entries) {
      if (known.insert(name).second) cols.push_back(name);
    }
  }
  return cols;
}

inline void write_norms_csv(std::ostream& os, const std::vector<NormSnapshot>& rows) {
  auto cols = csv_columns(rows);
  os << "time";
  for (const auto& c : cols) os << ',' << c;
  os << '\n';
  for (const auto& r : rows) {
    os << detail::format_double(r.time);
    for (const auto& c : cols) {
      os << ',';
      if (r.has(c)) os << detail::format_double(r.get(c));
    }
    os << '\n';
  }
}

inline void write_norms_csv(const std::filesystem::path& path, const std::vector<NormSnapshot>& rows) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_norms_csv(os, rows);
}

inline std::vector<NormSnapshot> read_norms_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("norms csv: empty");
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(s);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  auto cols = split(line);
  if (cols.empty() || cols[0] != "time") throw std::runtime_error("norms csv: first column must be time");
  std::vector<NormSnapshot> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != cols.size()) throw std::runtime_error("norms csv: ragged row");
    NormSnapshot s;
    s.time = std::stod(cells[0]);
    for (std::size_t i = 1; i < cells.size(); ++i) {
      if (!cells[i].empty()) s.set(cols[i], std::stod(cells[i]));
    }
    rows.push_back(std::move(s));
  }
  return rows;
}

// ---- JSON views of reports --------------------------------------------------

// JSON has no infinity; non-finite values are written as null.
inline nlohmann::json finite_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json_value(const DecayFit& f) {
  return {{"name", f.name},           {"t_lo", f.t_lo},
          {"t_hi", f.t_hi},           {"exponent", finite_or_null(f.exponent)},
          {"intercept", finite_or_null(f.intercept)}, {"residual", finite_or_null(f.residual)},
          {"samples", f.samples}};
}

inline nlohmann::json to_json_value(const RegularityReport& r) {
  nlohmann::json norms = nlohmann::json::object();
  for (const auto& e : r.norms) norms[e.name] = finite_or_null(e.value);
  return {{"norms", norms}, {"warnings", r.warnings}};
}

inline nlohmann::json to_json_value(const LemmaReport& r) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& it : r.items) {
    items.push_back({{"name", it.name},
                     {"kind", it.kind},
                     {"value", finite_or_null(it.value)},
                     {"target", finite_or_null(it.target)},
                     {"tolerance", finite_or_null(it.tolerance)},
                     {"asserted", it.asserted},
                     {"pass", it.pass},
                     {"note", it.note}});
  }
  return {{"guard_time", finite_or_null(r.guard_time)},
          {"times", r.times},
          {"items", items},
          {"all_pass", r.all_pass()}};
}

inline nlohmann::json to_json_value(const IterationReport& r) {
  nlohmann::json recs = nlohmann::json::array();
  for (const auto& x : r.records) {
    nlohmann::json j{{"iteration", x.iteration},
                     {"x_norm", finite_or_null(x.x_norm)},
                     {"x_diff", finite_or_null(x.x_diff)},
                     {"relative_diff", finite_or_null(x.relative_diff)},
                     {"aborted", x.aborted}};
    j["contraction"] = x.contraction ? finite_or_null(*x.contraction) : nlohmann::json(nullptr);
    j["reference_relative_diff"] = x.reference_relative_diff
                                       ? finite_or_null(*x.reference_relative_diff)
                                       : nlohmann::json(nullptr);
    recs.push_back(std::move(j));
  }
  return {{"records", recs},
          {"converged", r.converged},
          {"diverged", r.diverged},
          {"aborted", r.aborted},
          {"message", r.message},
          {"best_iteration", r.best_iteration},
          {"x_norm", finite_or_null(r.x_norm)},
          {"n_seminorms", r.n_seminorms},
          {"max_contraction", finite_or_null(r.max_contraction())}};
}

inline nlohmann::json to_json_value(const CauchyReport& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : r.pairs) {
    nlohmann::json j{{"t0", p.t0},
                     {"t1", p.t1},
                     {"sup_v_l2", p.sup_v_l2},
                     {"sup_b_h1", p.sup_b_h1},
                     {"v_t1_at_t0", p.v_t1_at_t0},
                     {"ratio_v", p.ratio_v},
                     {"ratio_b", p.ratio_b}};
    j["exponent_v"] = p.exponent_v ? finite_or_null(*p.exponent_v) : nlohmann::json(nullptr);
    j["exponent_b"] = p.exponent_b ? finite_or_null(*p.exponent_b) : nlohmann::json(nullptr);
    pairs.push_back(std::move(j));
  }
  return {{"pairs", pairs},
          {"aborted", r.aborted},
          {"message", r.message},
          {"decreasing", r.decreasing()}};
}

inline nlohmann::json to_json_value(const ResidualReport& r) {
  nlohmann::json s = nlohmann::json::array();
  for (const auto& x : r.samples) {
    s.push_back({{"time", x.time},
                 {"residual_u", x.residual_u},
                 {"residual_a", x.residual_a},
                 {"estimate_u", x.estimate_u},
                 {"estimate_a", x.estimate_a},
                 {"pass", x.pass}});
  }
  return {{"samples", s}, {"factor", r.factor}, {"pass", r.pass()}};
}

inline nlohmann::json to_json_value(const XNorm& x) {
  return {{"value", finite_or_null(x.value)}, {"argmax_time", x.argmax_time}};
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return nlohmann::json::parse(is);
}

}  // namespace zscatter
