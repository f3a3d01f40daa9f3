#pragma once

#include <cmath>
#include <complex>

#include <Eigen/Core>

namespace kerker {

struct GmresResult {
  int iterations = 0;
  double residual = 0.0;  // ||b - A x|| / ||b||
  bool converged = false;
};

/// Restarted GMRES(m) for complex systems. `apply(v, out)` writes A v into
/// out. `x` holds the initial guess on entry and the solution on exit.
/// Convergence is judged on the true residual at each restart. `monitor`
/// receives (iteration, estimated relative residual) after every step.
struct NoMonitor {
  void operator()(int, double) const {}
};

template <typename Apply, typename Monitor = NoMonitor>
GmresResult gmres(Apply&& apply, const Eigen::VectorXcd& b, Eigen::VectorXcd& x, int restart,
                  int max_iterations, double tolerance, Monitor&& monitor = {}) {
  using C = std::complex<double>;
  const Eigen::Index n = b.size();
  GmresResult result;
  const double b_norm = b.norm();
  if (x.size() != n) x = Eigen::VectorXcd::Zero(n);
  if (b_norm == 0.0) {
    x.setZero();
    result.converged = true;
    return result;
  }
  const int m = std::max(1, restart);
  Eigen::MatrixXcd v(n, m + 1);
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(m + 1, m);
  Eigen::VectorXd cs(m);
  Eigen::VectorXcd sn(m), g(m + 1);
  Eigen::VectorXcd w(n), r(n);

  for (;;) {
    apply(x, r);
    r = b - r;
    double beta = r.norm();
    result.residual = beta / b_norm;
    if (result.residual <= tolerance) {
      result.converged = true;
      return result;
    }
    if (result.iterations >= max_iterations) return result;

    v.col(0) = r / beta;
    g.setZero();
    g[0] = beta;
    h.setZero();
    int j = 0;
    for (; j < m && result.iterations < max_iterations; ++j) {
      apply(v.col(j), w);
      for (int i = 0; i <= j; ++i) {  // modified Gram-Schmidt
        h(i, j) = v.col(i).dot(w);
        w -= h(i, j) * v.col(i);
      }
      const double w_norm = w.norm();
      h(j + 1, j) = w_norm;
      if (w_norm > 0.0) v.col(j + 1) = w / w_norm;

      for (int i = 0; i < j; ++i) {
        const C t = cs[i] * h(i, j) + sn[i] * h(i + 1, j);
        h(i + 1, j) = -std::conj(sn[i]) * h(i, j) + cs[i] * h(i + 1, j);
        h(i, j) = t;
      }
      const C a = h(j, j);
      const double rho = std::hypot(std::abs(a), w_norm);
      if (std::abs(a) == 0.0) {
        cs[j] = 0.0;
        sn[j] = 1.0;
      } else {
        cs[j] = std::abs(a) / rho;
        sn[j] = (a / std::abs(a)) * w_norm / rho;
      }
      h(j, j) = cs[j] * a + sn[j] * w_norm;
      h(j + 1, j) = 0.0;
      g[j + 1] = -std::conj(sn[j]) * g[j];
      g[j] = cs[j] * g[j];
      ++result.iterations;
      monitor(result.iterations, std::abs(g[j + 1]) / b_norm);
      if (std::abs(g[j + 1]) / b_norm <= 0.5 * tolerance || w_norm == 0.0) {
        ++j;
        break;
      }
    }
    const Eigen::VectorXcd y =
        h.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
    x += v.leftCols(j) * y;
  }
}

}  // namespace kerker
