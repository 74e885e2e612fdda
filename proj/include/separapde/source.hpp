#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "separapde/error.hpp"

namespace separapde {

/// One per-axis factor of a separated load: a smooth function (with optional
/// derivative, needed when nodes move) or a Dirac located at a point.
struct SourceFactor {
  enum class Kind { smooth, dirac };
  Kind kind = Kind::smooth;
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  double location = 0.0;

  static SourceFactor smooth(std::function<double(double)> f, std::function<double(double)> df = {}) {
    SourceFactor s;
    s.kind = Kind::smooth;
    s.value = std::move(f);
    s.derivative = std::move(df);
    return s;
  }
  static SourceFactor dirac(double at) {
    SourceFactor s;
    s.kind = Kind::dirac;
    s.location = at;
    return s;
  }
  static SourceFactor constant(double c) {
    return smooth([c](double) { return c; }, [](double) { return 0.0; });
  }
};

/// scale * prod_d factors[d](x_d)
struct SeparatedTerm {
  double scale = 1.0;
  std::vector<SourceFactor> factors;
};

/// Scalar load b(x): a sum of separated terms. A general (non-separated)
/// callable may be attached; the tensor-mesh solvers reject it.
struct SourceTerm {
  std::vector<SeparatedTerm> terms;
  std::function<double(std::span<const double>)> general;

  bool is_separated() const noexcept { return !general; }
  bool is_zero() const noexcept { return terms.empty() && !general; }

  static SourceTerm zero() { return {}; }

  static SourceTerm separated(double scale, std::vector<SourceFactor> factors) {
    SourceTerm s;
    s.terms.push_back({scale, std::move(factors)});
    return s;
  }

  /// Unit-free point load of a given magnitude at a point.
  static SourceTerm point_load(double magnitude, std::span<const double> at) {
    std::vector<SourceFactor> f;
    for (double x : at) f.push_back(SourceFactor::dirac(x));
    return separated(magnitude, std::move(f));
  }

  static SourceTerm from_callable(std::function<double(std::span<const double>)> b) {
    SourceTerm s;
    s.general = std::move(b);
    return s;
  }

  SourceTerm& operator+=(const SourceTerm& o) {
    if (o.general) fail(ErrorCode::unsupported_source, "cannot add a general callable to a separated source");
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    return *this;
  }

  /// Pointwise value (Dirac factors contribute zero away from their support).
  double operator()(std::span<const double> x) const {
    if (general) return general(x);
    double total = 0;
    for (const auto& t : terms) {
      double v = t.scale;
      for (std::size_t d = 0; d < t.factors.size(); ++d) {
        const auto& f = t.factors[d];
        v *= f.kind == SourceFactor::Kind::smooth ? f.value(x[d]) : 0.0;
      }
      total += v;
    }
    return total;
  }
};

}  // namespace separapde
