#include "blab/types.hpp"

#include <algorithm>
#include <cmath>

namespace blab {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::configuration: return "configuration error";
    case ErrorKind::degenerate_metric: return "degenerate metric";
    case ErrorKind::evaluation_failure: return "evaluation failure";
    case ErrorKind::integration_failure: return "integration failure";
    case ErrorKind::cone_vertex: return "evaluation at the vertex of the cone";
    case ErrorKind::definiteness_violation: return "definiteness violation";
    case ErrorKind::averaging_failed: return "averaging failed";
    case ErrorKind::degenerate_solution: return "degenerate solution";
    case ErrorKind::not_flat: return "not flat";
    case ErrorKind::holonomy_obstruction: return "holonomy obstruction";
    case ErrorKind::inconclusive: return "inconclusive";
  }
  return "unknown error";
}

bool Box::contains(const ChartPoint& x) const {
  for (int i = 0; i < dim(); ++i) {
    if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
  }
  return true;
}

Box Box::cube(int n, double half_width) {
  return Box{Vec::Constant(n, -half_width), Vec::Constant(n, half_width)};
}

double Tensor3::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

Tensor3& Tensor3::operator+=(const Tensor3& other) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Tensor3& Tensor3::operator-=(const Tensor3& other) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Tensor3& Tensor3::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Mat Tensor3::contract_first_lower(const Vec& v) const {
  Mat m = Mat::Zero(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      if (v[j] == 0.0) continue;
      for (int k = 0; k < n_; ++k) m(i, k) += (*this)(i, j, k) * v[j];
    }
  return m;
}

Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }

double Tensor4::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace blab
