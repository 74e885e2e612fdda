#pragma once

// 1D grids, tensor-product meshes and linear hat shape functions.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "separapde/error.hpp"

namespace separapde {

/// Sorted 1D nodes with fixed endpoints. Interior nodes are movable.
class Grid1D {
 public:
  explicit Grid1D(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 2) fail(ErrorCode::invalid_range, "a grid needs at least 2 nodes");
    for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
      if (!(nodes_[i] < nodes_[i + 1]) || !std::isfinite(nodes_[i + 1]))
        fail(ErrorCode::invalid_range, "grid nodes must be strictly increasing");
    }
  }

  static Grid1D uniform(double a, double b, std::size_t n) {
    if (!(a < b) || n < 2) fail(ErrorCode::invalid_range, "uniform grid needs a < b and n >= 2");
    std::vector<double> x(n);
    const double h = (b - a) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) x[i] = a + h * static_cast<double>(i);
    x.front() = a;
    x.back() = b;
    return Grid1D(std::move(x));
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t num_elements() const noexcept { return nodes_.size() - 1; }
  std::size_t num_interior() const noexcept { return nodes_.size() - 2; }
  double operator[](std::size_t i) const { return nodes_[i]; }
  std::span<const double> nodes() const noexcept { return nodes_; }
  double front() const noexcept { return nodes_.front(); }
  double back() const noexcept { return nodes_.back(); }
  double length() const noexcept { return nodes_.back() - nodes_.front(); }
  double element_size(std::size_t e) const { return nodes_[e + 1] - nodes_[e]; }
  bool movable(std::size_t i) const noexcept { return i > 0 && i + 1 < nodes_.size(); }

  /// Smallest element size allowed once nodes start moving.
  double min_spacing() const noexcept { return 1e-6 * length(); }

  /// Element containing x: x in [x_e, x_{e+1}), the last element is closed.
  std::size_t locate(double x) const {
    if (x < nodes_.front() || x > nodes_.back())
      fail(ErrorCode::invalid_range, "point " + std::to_string(x) + " lies outside the grid");
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
    auto e = static_cast<std::size_t>(std::distance(nodes_.begin(), it));
    return e == 0 ? 0 : std::min(e - 1, num_elements() - 1);
  }

  /// Same endpoints, new interior positions (validated).
  Grid1D with_interior(std::span<const double> interior) const {
    if (interior.size() != num_interior())
      fail(ErrorCode::invalid_range, "interior position count mismatch");
    std::vector<double> x(nodes_.size());
    x.front() = nodes_.front();
    x.back() = nodes_.back();
    std::copy(interior.begin(), interior.end(), x.begin() + 1);
    return Grid1D(std::move(x));
  }

  bool operator==(const Grid1D&) const = default;

 private:
  std::vector<double> nodes_;
};

inline Grid1D build_uniform_grid(double a, double b, std::size_t n) { return Grid1D::uniform(a, b, n); }

/// Tensor product of 2 or 3 grids.
struct TensorMesh {
  std::vector<Grid1D> axes;

  TensorMesh() = default;
  explicit TensorMesh(std::vector<Grid1D> grids) : axes(std::move(grids)) {
    if (axes.size() < 2 || axes.size() > 3) fail(ErrorCode::invalid_range, "tensor meshes have 2 or 3 axes");
  }

  static TensorMesh unit_square(std::size_t n1, std::size_t n2) {
    return TensorMesh({Grid1D::uniform(0, 1, n1), Grid1D::uniform(0, 1, n2)});
  }
  static TensorMesh unit_cube(std::size_t n1, std::size_t n2, std::size_t n3) {
    return TensorMesh({Grid1D::uniform(0, 1, n1), Grid1D::uniform(0, 1, n2), Grid1D::uniform(0, 1, n3)});
  }

  std::size_t dims() const noexcept { return axes.size(); }
  const Grid1D& operator[](std::size_t d) const { return axes[d]; }

  std::vector<std::size_t> shape() const {
    std::vector<std::size_t> s;
    for (const auto& g : axes) s.push_back(g.size());
    return s;
  }
  std::size_t num_nodes() const {
    std::size_t n = 1;
    for (const auto& g : axes) n *= g.size();
    return n;
  }
  std::size_t num_interior() const {
    std::size_t n = 1;
    for (const auto& g : axes) n *= g.num_interior();
    return n;
  }
  std::string label() const {
    std::string s;
    for (std::size_t d = 0; d < axes.size(); ++d) {
      if (d) s += 'x';
      s += std::to_string(axes[d].size());
    }
    return s;
  }
  bool operator==(const TensorMesh&) const = default;
};

/// Neighbour coordinates of one hat function. Boundary hats lack a neighbour.
struct ShapeSupport {
  std::size_t index = 0;
  std::optional<double> left;
  double center = 0;
  std::optional<double> right;
  double domain_end = 0;  // last grid node, where derivatives take the left limit
};

inline ShapeSupport support(const Grid1D& grid, std::size_t i) {
  ShapeSupport s;
  s.index = i;
  s.center = grid[i];
  if (i > 0) s.left = grid[i - 1];
  if (i + 1 < grid.size()) s.right = grid[i + 1];
  s.domain_end = grid.back();
  return s;
}

inline ShapeSupport support(double left, double center, double right) {
  ShapeSupport s;
  s.left = left;
  s.center = center;
  s.right = right;
  s.domain_end = right;
  return s;
}

inline double hat_eval(const ShapeSupport& s, double x) {
  if (x == s.center) return 1.0;
  if (x < s.center) {
    if (!s.left || x <= *s.left) return 0.0;
    return (x - *s.left) / (s.center - *s.left);
  }
  if (!s.right || x >= *s.right) return 0.0;
  return (*s.right - x) / (*s.right - s.center);
}

inline double relu(double v) noexcept { return v > 0.0 ? v : 0.0; }

/// Hat function as a composition of ReLU layers whose weights and biases are
/// functions of the neighbour coordinates.
inline double hat_eval_relu(const ShapeSupport& s, double x) {
  // A missing neighbour degenerates its branch to a step at the centre node.
  const double left_branch =
      s.left ? relu(-1.0 / (s.center - *s.left) * relu(-x + s.center) + 1.0) : (x >= s.center ? 1.0 : 0.0);
  const double right_branch =
      s.right ? relu(-1.0 / (*s.right - s.center) * relu(x - s.center) + 1.0) : (x <= s.center ? 1.0 : 0.0);
  return left_branch + right_branch - 1.0;
}

/// dN/dx with the right-limit convention at breakpoints (left limit at the domain end).
inline double hat_deriv_x(const ShapeSupport& s, double x) {
  const bool at_end = x == s.domain_end;
  const bool in_left = s.left && (at_end ? (x > *s.left && x <= s.center) : (x >= *s.left && x < s.center));
  if (in_left) return 1.0 / (s.center - *s.left);
  const bool in_right = s.right && (at_end ? (x > s.center && x <= *s.right) : (x >= s.center && x < *s.right));
  if (in_right) return -1.0 / (*s.right - s.center);
  return 0.0;
}

/// dN/d(x_{I-1}, x_I, x_{I+1}) at fixed x, right-limit convention at breakpoints.
inline std::array<double, 3> hat_grad_nodes(const ShapeSupport& s, double x) {
  std::array<double, 3> g{0.0, 0.0, 0.0};
  if (s.right && x >= s.center && x < *s.right) {
    const double r = *s.right - s.center;
    g[1] = (*s.right - x) / (r * r);
    g[2] = (x - s.center) / (r * r);
  } else if (s.left && x >= *s.left && x < s.center) {
    const double l = s.center - *s.left;
    g[0] = -(s.center - x) / (l * l);
    g[1] = -(x - *s.left) / (l * l);
  } else if (s.left && !s.right && x == s.center) {
    const double l = s.center - *s.left;
    g[0] = 0.0;
    g[1] = -1.0 / l;
  }
  return g;
}

/// Values and x-derivatives of the two hats that are nonzero inside element e.
struct ElementBasis {
  std::array<double, 2> value;
  std::array<double, 2> deriv;
};

inline ElementBasis element_basis(const Grid1D& grid, std::size_t e, double x) {
  const double x0 = grid[e], x1 = grid[e + 1], h = x1 - x0;
  return {{(x1 - x) / h, (x - x0) / h}, {-1.0 / h, 1.0 / h}};
}

}  // namespace separapde
