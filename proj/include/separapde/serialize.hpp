#pragma once

// Plain-text formats. Numbers are written with 17 significant digits so a
// write/read round trip reproduces every double exactly.
//
//   pgd-modes v1 dims=<d> Q=<q> n=<n1>,<n2>[,<n3>]
//   [nodes= x_0 ... x_n   one line per axis, only for grids other than uniform [0,1]]
//   <beta^(1)> / <gamma^(1)> [/ <theta^(1)>] / <beta^(2)> ...   one line per axis per mode
//
//   nodal-field v1 dims=<d> n=<n1>,<n2>[,<n3>]
//   [nodes= ... per axis, as above]
//   values, one line per index of the leading axes (last axis along the line)
//
//   mapped-domain v1 n=<n1>,<n2>
//   i j x y   (n1 * n2 lines, row-major)

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "separapde/mapping.hpp"
#include "separapde/separated.hpp"

namespace separapde {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string join(std::span<const double> v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += format_double(v[i]);
  }
  return s;
}

inline std::string join_sizes(const std::vector<std::size_t>& n) {
  std::string s;
  for (std::size_t i = 0; i < n.size(); ++i) s += (i ? "," : "") + std::to_string(n[i]);
  return s;
}

inline bool is_unit_uniform(const Grid1D& g) { return g == Grid1D::uniform(0.0, 1.0, g.size()); }

inline std::vector<double> parse_numbers(const std::string& line) {
  std::istringstream in(line);
  std::vector<double> v;
  std::string tok;
  while (in >> tok) {
    char* end = nullptr;
    const double x = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') fail(ErrorCode::parse_error, "bad number '" + tok + "'");
    v.push_back(x);
  }
  return v;
}

inline std::string next_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::parse_error, std::string("unexpected end of input reading ") + what);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

/// key=value fields of a header line after the magic words.
inline std::string header_field(const std::string& header, const std::string& key) {
  std::istringstream in(header);
  std::string tok;
  while (in >> tok)
    if (tok.rfind(key + "=", 0) == 0) return tok.substr(key.size() + 1);
  fail(ErrorCode::parse_error, "header lacks '" + key + "='");
}

inline std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::istringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      std::size_t pos = 0;
      const auto v = std::stoull(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      fail(ErrorCode::parse_error, "bad size '" + tok + "'");
    }
  }
  return out;
}

inline void write_grids(std::ostream& out, const std::vector<Grid1D>& grids) {
  bool uniform = true;
  for (const auto& g : grids) uniform = uniform && is_unit_uniform(g);
  if (uniform) return;
  for (const auto& g : grids) out << "nodes= " << join(g.nodes()) << '\n';
}

/// Reads optional nodes= lines; returns the first non-nodes line via `pending`.
inline std::vector<Grid1D> read_grids(std::istream& in, const std::vector<std::size_t>& n, std::string& pending,
                                      bool& has_pending) {
  std::vector<Grid1D> grids;
  has_pending = false;
  std::string line;
  if (!std::getline(in, line)) {
    for (auto k : n) grids.push_back(Grid1D::uniform(0.0, 1.0, k));
    return grids;
  }
  if (line.rfind("nodes=", 0) == 0) {
    for (std::size_t d = 0; d < n.size(); ++d) {
      if (d > 0) line = next_line(in, "nodes");
      if (line.rfind("nodes=", 0) != 0) fail(ErrorCode::parse_error, "expected a nodes= line per axis");
      auto x = parse_numbers(line.substr(6));
      if (x.size() != n[d]) fail(ErrorCode::parse_error, "nodes= line length does not match n");
      grids.emplace_back(std::move(x));
    }
    return grids;
  }
  for (auto k : n) grids.push_back(Grid1D::uniform(0.0, 1.0, k));
  pending = line;
  has_pending = true;
  return grids;
}

}  // namespace detail

inline void write_separated(std::ostream& out, const SeparatedSolution& s) {
  std::vector<std::size_t> n;
  for (const auto& g : s.grids) n.push_back(g.size());
  out << "pgd-modes v1 dims=" << s.dims() << " Q=" << s.num_modes() << " n=" << detail::join_sizes(n) << '\n';
  detail::write_grids(out, s.grids);
  for (const auto& m : s.modes)
    for (const auto& f : m.factors) out << detail::join(std::span<const double>(f.data(), static_cast<std::size_t>(f.size()))) << '\n';
}

inline SeparatedSolution read_separated(std::istream& in) {
  const std::string header = detail::next_line(in, "header");
  if (header.rfind("pgd-modes v1", 0) != 0) fail(ErrorCode::parse_error, "not a pgd-modes v1 file");
  const auto dims = detail::parse_sizes(detail::header_field(header, "dims"));
  const auto q = detail::parse_sizes(detail::header_field(header, "Q"));
  const auto n = detail::parse_sizes(detail::header_field(header, "n"));
  if (dims.size() != 1 || q.size() != 1 || n.size() != dims[0] || dims[0] < 2 || dims[0] > 3)
    fail(ErrorCode::parse_error, "inconsistent pgd-modes header");
  std::string pending;
  bool has_pending = false;
  SeparatedSolution s(detail::read_grids(in, n, pending, has_pending));
  for (std::size_t k = 0; k < q[0]; ++k) {
    Mode m;
    for (std::size_t d = 0; d < n.size(); ++d) {
      std::string line;
      if (has_pending) {
        line = pending;
        has_pending = false;
      } else {
        line = detail::next_line(in, "mode coefficients");
      }
      const auto v = detail::parse_numbers(line);
      if (v.size() != n[d]) fail(ErrorCode::parse_error, "coefficient line length does not match n");
      m.factors.push_back(Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    s.add(std::move(m));
  }
  return s;
}

inline void write_nodal(std::ostream& out, const NodalField& u) {
  const auto n = u.mesh.shape();
  out << "nodal-field v1 dims=" << u.dims() << " n=" << detail::join_sizes(n) << '\n';
  detail::write_grids(out, u.mesh.axes);
  const std::size_t last = n.back();
  for (std::size_t k = 0; k < u.mesh.num_nodes(); k += last)
    out << detail::join(std::span<const double>(u.values.data() + k, last)) << '\n';
}

inline NodalField read_nodal(std::istream& in) {
  const std::string header = detail::next_line(in, "header");
  if (header.rfind("nodal-field v1", 0) != 0) fail(ErrorCode::parse_error, "not a nodal-field v1 file");
  const auto n = detail::parse_sizes(detail::header_field(header, "n"));
  if (n.size() < 2 || n.size() > 3) fail(ErrorCode::parse_error, "nodal fields have 2 or 3 axes");
  std::string pending;
  bool has_pending = false;
  NodalField u{TensorMesh(detail::read_grids(in, n, pending, has_pending))};
  const std::size_t last = n.back();
  for (std::size_t k = 0; k < u.mesh.num_nodes(); k += last) {
    std::string line;
    if (has_pending) {
      line = pending;
      has_pending = false;
    } else {
      line = detail::next_line(in, "nodal values");
    }
    const auto v = detail::parse_numbers(line);
    if (v.size() != last) fail(ErrorCode::parse_error, "value line length does not match n");
    for (std::size_t i = 0; i < last; ++i) u.values[static_cast<Eigen::Index>(k + i)] = v[i];
  }
  return u;
}

inline void write_mapped_domain(std::ostream& out, const MappedDomain& dom) {
  out << "mapped-domain v1 n=" << dom.n1 << ',' << dom.n2 << '\n';
  for (std::size_t i = 0; i < dom.n1; ++i)
    for (std::size_t j = 0; j < dom.n2; ++j) {
      const auto& x = dom.node(i, j);
      out << i << ' ' << j << ' ' << format_double(x[0]) << ' ' << format_double(x[1]) << '\n';
    }
}

inline MappedDomain read_mapped_domain(std::istream& in) {
  const std::string header = detail::next_line(in, "header");
  if (header.rfind("mapped-domain v1", 0) != 0) fail(ErrorCode::parse_error, "not a mapped-domain v1 file");
  const auto n = detail::parse_sizes(detail::header_field(header, "n"));
  if (n.size() != 2) fail(ErrorCode::parse_error, "mapped domains are 2D");
  std::vector<std::array<double, 2>> x(n[0] * n[1]);
  std::vector<bool> seen(x.size(), false);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const auto v = detail::parse_numbers(detail::next_line(in, "domain nodes"));
    if (v.size() != 4) fail(ErrorCode::parse_error, "domain lines are 'i j x y'");
    if (v[0] < 0 || v[1] < 0 || v[0] >= static_cast<double>(n[0]) || v[1] >= static_cast<double>(n[1]) ||
        v[0] != std::floor(v[0]) || v[1] != std::floor(v[1]))
      fail(ErrorCode::parse_error, "node index out of range");
    const auto idx = static_cast<std::size_t>(v[0]) * n[1] + static_cast<std::size_t>(v[1]);
    if (seen[idx]) fail(ErrorCode::parse_error, "duplicate node index");
    seen[idx] = true;
    x[idx] = {v[2], v[3]};
  }
  return MappedDomain(n[0], n[1], std::move(x));
}

}  // namespace separapde
