#include "exosim/spline.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <vector>

namespace exosim {

CubicSpline::CubicSpline(VecX knots, MatX values, bool periodic)
    : t_(std::move(knots)), y_(std::move(values)), periodic_(periodic) {
  const Eigen::Index n = t_.size();
  if (n < 2 || y_.rows() != n) throw DimensionError("spline needs at least two knots and one row per knot");
  for (Eigen::Index i = 1; i < n; ++i) {
    if (!(t_[i] > t_[i - 1])) throw ValidationError("spline knots must be strictly increasing");
  }
  const Eigen::Index d = y_.cols();
  m_ = MatX::Zero(n, d);
  if (n == 2) return;

  auto h = [&](Eigen::Index i) { return t_[i + 1] - t_[i]; };
  std::vector<Eigen::Triplet<double>> trip;

  if (periodic_) {
    // Unknowns M_0..M_{n-2}; M_{n-1} = M_0.
    const Eigen::Index m = n - 1;
    MatX rhs(m, d);
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index prev = (i == 0) ? m - 1 : i - 1;
      const Eigen::Index next = (i + 1) % m;
      const double hp = h(prev);
      const double hi = h(i);
      trip.emplace_back(i, prev, hp);
      trip.emplace_back(i, i, 2.0 * (hp + hi));
      trip.emplace_back(i, next, hi);
      const auto y_prev = y_.row(prev);
      const auto y_i = y_.row(i);
      const auto y_next = y_.row(i + 1);
      rhs.row(i) = 6.0 * ((y_next - y_i) / hi - (y_i - y_prev) / hp);
    }
    Eigen::SparseMatrix<double> A(m, m);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
    const MatX sol = lu.solve(rhs);
    m_.topRows(m) = sol;
    m_.row(n - 1) = sol.row(0);
  } else {
    const Eigen::Index m = n - 2;
    MatX rhs(m, d);
    for (Eigen::Index k = 0; k < m; ++k) {
      const Eigen::Index i = k + 1;
      if (k > 0) trip.emplace_back(k, k - 1, h(i - 1));
      trip.emplace_back(k, k, 2.0 * (h(i - 1) + h(i)));
      if (k + 1 < m) trip.emplace_back(k, k + 1, h(i));
      rhs.row(k) = 6.0 * ((y_.row(i + 1) - y_.row(i)) / h(i) - (y_.row(i) - y_.row(i - 1)) / h(i - 1));
    }
    Eigen::SparseMatrix<double> A(m, m);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
    m_.middleRows(1, m) = lu.solve(rhs);
  }
}

CubicSpline::Eval CubicSpline::evaluate(double t) const {
  const Eigen::Index n = t_.size();
  t = std::clamp(t, t_[0], t_[n - 1]);
  const double* begin = t_.data();
  Eigen::Index i = std::upper_bound(begin, begin + n, t) - begin - 1;
  i = std::clamp<Eigen::Index>(i, 0, n - 2);

  const double h = t_[i + 1] - t_[i];
  const double a = t_[i + 1] - t;
  const double b = t - t_[i];
  const auto Mi = m_.row(i);
  const auto Mj = m_.row(i + 1);
  const auto yi = y_.row(i);
  const auto yj = y_.row(i + 1);
  const Eigen::RowVectorXd ci = yi / h - Mi * (h / 6.0);
  const Eigen::RowVectorXd cj = yj / h - Mj * (h / 6.0);

  Eval e;
  e.value = (Mi * (a * a * a / (6.0 * h)) + Mj * (b * b * b / (6.0 * h)) + ci * a + cj * b).transpose();
  e.d1 = (-Mi * (a * a / (2.0 * h)) + Mj * (b * b / (2.0 * h)) - ci + cj).transpose();
  e.d2 = (Mi * (a / h) + Mj * (b / h)).transpose();
  return e;
}

}  // namespace exosim
