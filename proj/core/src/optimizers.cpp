#include "nnrk/optimizers.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <optional>

#include "nnrk/errors.hpp"

namespace nnrk {

std::string to_string(OptimStatus s) {
  switch (s) {
    case OptimStatus::Converged: return "converged";
    case OptimStatus::MaxIterations: return "max_iterations";
    case OptimStatus::LineSearchFailed: return "line_search_failed";
  }
  return "unknown";
}

OptimResult adam(const Objective& fn, Eigen::VectorXd x0, const AdamOptions& opt) {
  OptimResult r;
  r.x = std::move(x0);
  const Eigen::Index n = r.x.size();
  r.g.setZero(n);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(n), v = Eigen::VectorXd::Zero(n);
  r.f = fn(r.x, r.g);
  ++r.evaluations;
  r.trace.push_back(r.f);
  double b1t = 1.0, b2t = 1.0;
  for (int t = 1; t <= opt.epochs; ++t) {
    if (!std::isfinite(r.f) || !r.g.allFinite())
      throw SolverError("adam: non-finite loss or gradient at epoch " + std::to_string(t - 1));
    if (n == 0 || r.g.lpNorm<Eigen::Infinity>() <= opt.grad_tol) {
      r.status = OptimStatus::Converged;
      return r;
    }
    b1t *= opt.beta1;
    b2t *= opt.beta2;
    m = opt.beta1 * m + (1.0 - opt.beta1) * r.g;
    v = opt.beta2 * v + (1.0 - opt.beta2) * r.g.cwiseAbs2();
    const double c1 = 1.0 / (1.0 - b1t), c2 = 1.0 / (1.0 - b2t);
    for (Eigen::Index i = 0; i < n; ++i) r.x(i) -= opt.lr * (m(i) * c1) / (std::sqrt(v(i) * c2) + opt.eps);
    if (!r.x.allFinite()) throw SolverError("adam: non-finite step at epoch " + std::to_string(t));
    r.f = fn(r.x, r.g);
    ++r.evaluations;
    ++r.iterations;
    r.trace.push_back(r.f);
  }
  if (!std::isfinite(r.f) || !r.g.allFinite()) throw SolverError("adam: non-finite loss or gradient");
  r.status = r.g.lpNorm<Eigen::Infinity>() <= opt.grad_tol ? OptimStatus::Converged : OptimStatus::MaxIterations;
  return r;
}

namespace {

struct LinePoint {
  double a = 0.0;
  double f = 0.0;
  double d = 0.0;  // directional derivative
  Eigen::VectorXd x, g;
};

class LineSearch {
 public:
  LineSearch(const Objective& fn, const LbfgsOptions& opt, const LinePoint& origin, const Eigen::VectorXd& dir,
             int& evals)
      : fn_(fn), opt_(opt), o_(origin), dir_(dir), evals_(evals) {}

  std::optional<LinePoint> run(double a) {
    LinePoint prev = o_;
    for (int i = 0; i < opt_.max_line_search; ++i) {
      LinePoint cur = eval(a);
      if (!std::isfinite(cur.f)) {
        a = 0.5 * (prev.a + a);
        continue;
      }
      if (!armijo(cur) || (i > 0 && cur.f >= prev.f)) return zoom(prev, cur);
      if (std::abs(cur.d) <= -opt_.c2 * o_.d) return cur;
      if (cur.d >= 0.0) return zoom(cur, prev);
      prev = cur;
      a *= 2.0;
    }
    return std::nullopt;
  }

 private:
  LinePoint eval(double a) {
    LinePoint p;
    p.a = a;
    p.x = o_.x + a * dir_;
    p.g.setZero(p.x.size());
    p.f = fn_(p.x, p.g);
    ++evals_;
    if (!p.g.allFinite()) p.f = std::numeric_limits<double>::infinity();
    p.d = std::isfinite(p.f) ? p.g.dot(dir_) : std::numeric_limits<double>::quiet_NaN();
    return p;
  }

  /// Sufficient decrease, or the approximate Wolfe test once the decrease is at
  /// the rounding level of f.
  bool armijo(const LinePoint& p) const {
    if (p.f <= o_.f + opt_.c1 * p.a * o_.d) return true;
    return p.f <= o_.f + 1e-12 * std::abs(o_.f) && std::isfinite(p.d) && p.d <= (2.0 * opt_.c1 - 1.0) * o_.d;
  }

  std::optional<LinePoint> zoom(LinePoint lo, LinePoint hi) {
    for (int j = 0; j < opt_.max_line_search; ++j) {
      const double lo_a = std::min(lo.a, hi.a), hi_a = std::max(lo.a, hi.a), w = hi_a - lo_a;
      if (w <= 1e-16 * std::max(1.0, hi_a)) break;
      double a = 0.5 * (lo.a + hi.a);
      if (std::isfinite(hi.f) && std::isfinite(hi.d)) {
        const double d1 = lo.d + hi.d - 3.0 * (lo.f - hi.f) / (lo.a - hi.a);
        const double disc = d1 * d1 - lo.d * hi.d;
        if (disc >= 0.0) {
          const double d2 = std::copysign(std::sqrt(disc), hi.a - lo.a);
          const double den = hi.d - lo.d + 2.0 * d2;
          if (den != 0.0) {
            const double c = hi.a - (hi.a - lo.a) * (hi.d + d2 - d1) / den;
            if (c > lo_a + 0.1 * w && c < hi_a - 0.1 * w) a = c;
          }
        }
      }
      LinePoint cur = eval(a);
      if (!std::isfinite(cur.f) || !armijo(cur) || cur.f >= lo.f) {
        hi = std::move(cur);
      } else {
        if (std::abs(cur.d) <= -opt_.c2 * o_.d) return cur;
        if (cur.d * (hi.a - lo.a) >= 0.0) hi = lo;
        lo = std::move(cur);
      }
    }
    if (lo.a > 0.0 && lo.f < o_.f) return lo;
    return std::nullopt;
  }

  const Objective& fn_;
  const LbfgsOptions& opt_;
  const LinePoint& o_;
  const Eigen::VectorXd& dir_;
  int& evals_;
};

}  // namespace

OptimResult lbfgs(const Objective& fn, Eigen::VectorXd x0, const LbfgsOptions& opt) {
  OptimResult r;
  LinePoint cur;
  cur.x = std::move(x0);
  cur.g.setZero(cur.x.size());
  cur.f = fn(cur.x, cur.g);
  ++r.evaluations;
  if (!std::isfinite(cur.f) || !cur.g.allFinite()) throw SolverError("lbfgs: non-finite loss at the start point");
  r.trace.push_back(cur.f);

  std::deque<Eigen::VectorXd> S, Y;
  std::deque<double> rho;
  auto finish = [&](OptimStatus st) {
    r.status = st;
    r.x = std::move(cur.x);
    r.f = cur.f;
    r.g = std::move(cur.g);
    return r;
  };
  if (cur.x.size() == 0 || cur.g.lpNorm<Eigen::Infinity>() < opt.grad_tol) return finish(OptimStatus::Converged);

  for (int k = 0; k < opt.max_iter; ++k) {
    Eigen::VectorXd q = -cur.g;
    std::vector<double> alpha(S.size());
    for (int i = static_cast<int>(S.size()) - 1; i >= 0; --i) {
      alpha[i] = rho[i] * S[i].dot(q);
      q -= alpha[i] * Y[i];
    }
    if (!S.empty()) q *= S.back().dot(Y.back()) / Y.back().squaredNorm();
    for (std::size_t i = 0; i < S.size(); ++i) q += S[i] * (alpha[i] - rho[i] * Y[i].dot(q));

    if (S.empty() || q.dot(cur.g) >= 0.0) {
      S.clear();
      Y.clear();
      rho.clear();
      q = -cur.g;
    }
    cur.a = 0.0;
    cur.d = q.dot(cur.g);
    double a0 = S.empty() ? std::min(1.0, 1.0 / cur.g.norm()) : 1.0;
    std::optional<LinePoint> next = LineSearch(fn, opt, cur, q, r.evaluations).run(a0);
    if (!next && !S.empty()) {
      S.clear();
      Y.clear();
      rho.clear();
      q = -cur.g;
      cur.d = q.dot(cur.g);
      next = LineSearch(fn, opt, cur, q, r.evaluations).run(std::min(1.0, 1.0 / cur.g.norm()));
    }
    if (!next) return finish(OptimStatus::LineSearchFailed);

    Eigen::VectorXd s = next->x - cur.x, y = next->g - cur.g;
    const double sy = s.dot(y);
    if (sy > std::numeric_limits<double>::epsilon() * y.squaredNorm()) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opt.memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    cur = std::move(*next);
    ++r.iterations;
    r.trace.push_back(cur.f);
    if (cur.g.lpNorm<Eigen::Infinity>() < opt.grad_tol) return finish(OptimStatus::Converged);
  }
  return finish(OptimStatus::MaxIterations);
}

}  // namespace nnrk
