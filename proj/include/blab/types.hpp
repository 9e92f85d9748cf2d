#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace blab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Coordinates of a point in the single chart of a problem instance.
using ChartPoint = Eigen::VectorXd;

struct TangentVector {
  ChartPoint base;
  Vec components;
};

enum class ErrorKind {
  configuration,
  degenerate_metric,
  evaluation_failure,
  integration_failure,
  cone_vertex,
  definiteness_violation,
  averaging_failed,
  degenerate_solution,
  not_flat,
  holonomy_obstruction,
  inconclusive,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Axis-aligned coordinate box used as the chart domain.
struct Box {
  Vec lower;
  Vec upper;

  int dim() const { return static_cast<int>(lower.size()); }
  Vec center() const { return 0.5 * (lower + upper); }
  Vec half_width() const { return 0.5 * (upper - lower); }
  bool contains(const ChartPoint& x) const;
  static Box cube(int n, double half_width);
};

/// Three-index array T(i, j, k), row-major. Connection coefficients are
/// stored as Gamma(i, j, k) = Γ^i_jk.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int n) : n_(n), data_(static_cast<std::size_t>(n * n * n), 0.0) {}

  int dim() const { return n_; }
  double& operator()(int i, int j, int k) { return data_[index(i, j, k)]; }
  double operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }

  double max_abs() const;
  Tensor3& operator+=(const Tensor3& other);
  Tensor3& operator-=(const Tensor3& other);
  Tensor3& operator*=(double s);

  // Γ(v, ·): the matrix M^i_k = Γ^i_jk v^j.
  Mat contract_first_lower(const Vec& v) const;

  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n_ + j) * n_ + k;
  }
  int n_ = 0;
  std::vector<double> data_;
};

Tensor3 operator-(Tensor3 a, const Tensor3& b);
Tensor3 operator+(Tensor3 a, const Tensor3& b);

/// Four-index array R(i, j, k, l); the curvature tensor stores R^i_jkl.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(int n)
      : n_(n), data_(static_cast<std::size_t>(n) * n * n * n, 0.0) {}

  int dim() const { return n_; }
  double& operator()(int i, int j, int k, int l) { return data_[index(i, j, k, l)]; }
  double operator()(int i, int j, int k, int l) const { return data_[index(i, j, k, l)]; }
  double max_abs() const;

 private:
  std::size_t index(int i, int j, int k, int l) const {
    return ((static_cast<std::size_t>(i) * n_ + j) * n_ + k) * n_ + l;
  }
  int n_ = 0;
  std::vector<double> data_;
};

}  // namespace blab
