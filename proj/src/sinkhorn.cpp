#include "lossval/sinkhorn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lossval/errors.hpp"

namespace lossval::ot {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Iterates of one Sinkhorn run; index k-1 holds iteration k.
struct Unrolled {
  std::vector<std::vector<double>> f, g, s, t;
};

class LogSinkhorn {
 public:
  LogSinkhorn(std::span<const double> log_a, std::span<const double> log_b, const Matrix& cost,
              const SinkhornOptions& opt)
      : log_a_(log_a), log_b_(log_b), cost_(cost), opt_(opt), n_(cost.rows()), m_(cost.cols()) {
    scaled_ = Matrix(n_, m_);
    const double inv = 1.0 / opt.epsilon;
    for (std::size_t k = 0; k < cost.size(); ++k) scaled_.data()[k] = -cost.data()[k] * inv;
  }

  TransportPlan run(Unrolled* keep) {
    const double eps = opt_.epsilon;
    const double inv = 1.0 / eps;
    std::vector<double> f(n_, 0.0), g(m_, 0.0), s(n_), t(m_);
    row_lse(g, s);

    TransportPlan plan;
    plan.epsilon = eps;
    const std::size_t max_iters = std::max<std::size_t>(opt_.max_iters, 1);
    for (std::size_t k = 1; k <= max_iters; ++k) {
      for (std::size_t i = 0; i < n_; ++i) f[i] = eps * (log_a_[i] - s[i]);
      col_lse(f, t);
      for (std::size_t j = 0; j < m_; ++j) g[j] = eps * (log_b_[j] - t[j]);
      if (keep) {
        keep->s.push_back(s);
        keep->f.push_back(f);
        keep->t.push_back(t);
        keep->g.push_back(g);
      }
      row_lse(g, s);

      double err = 0.0, l1 = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        const double d = std::abs(std::exp(f[i] * inv + s[i]) - std::exp(log_a_[i]));
        err = std::max(err, d);
        l1 += d;
      }
      for (std::size_t j = 0; j < m_; ++j) {
        const double d = std::abs(std::exp(g[j] * inv + t[j]) - std::exp(log_b_[j]));
        err = std::max(err, d);
        l1 += d;
      }
      bool finite = std::isfinite(err);
      for (std::size_t i = 0; i < n_ && finite; ++i) finite = std::isfinite(f[i]);
      for (std::size_t j = 0; j < m_ && finite; ++j) finite = std::isfinite(g[j]);
      if (!finite) {
        throw NumericError("sinkhorn: non-finite potentials with epsilon = " + std::to_string(eps));
      }
      plan.iterations = k;
      plan.marginal_err = err;
      if (opt_.record_history) {
        plan.err_history.push_back(err);
        plan.l1_history.push_back(l1);
      }
      if (opt_.tol > 0.0 && err <= opt_.tol) {
        plan.converged = true;
        break;
      }
    }
    if (opt_.tol <= 0.0) plan.converged = true;

    plan.coupling = Matrix(n_, m_);
    double total = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double fi = f[i] * inv;
      for (std::size_t j = 0; j < m_; ++j) {
        const double p = std::exp(fi + g[j] * inv + scaled_(i, j));
        plan.coupling(i, j) = p;
        total += p * cost_(i, j);
      }
    }
    plan.cost = total;
    plan.potential_src = std::move(f);
    plan.potential_dst = std::move(g);
    return plan;
  }

  // Adjoint of log(a) for d(cost)/d(...) = 1, given the stored iterates.
  std::vector<double> backward(const TransportPlan& plan, const Unrolled& it) const {
    const double eps = opt_.epsilon;
    const double inv = 1.0 / eps;
    std::vector<double> fbar(n_, 0.0), gbar(m_, 0.0), lbar(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < m_; ++j) {
        const double w = cost_(i, j) * plan.coupling(i, j) * inv;
        fbar[i] += w;
        gbar[j] += w;
      }
    }
    const std::size_t T = it.f.size();
    for (std::size_t k = T; k-- > 0;) {
      // g = eps (log b - t),  t_j = lse_i((f_i - C_ij) / eps)
      const auto& f = it.f[k];
      const auto& t = it.t[k];
      for (std::size_t i = 0; i < n_; ++i) {
        const double fi = f[i] * inv;
        const double* row = scaled_.row(i).data();
        double acc = 0.0;
        for (std::size_t j = 0; j < m_; ++j) acc += gbar[j] * std::exp(fi + row[j] - t[j]);
        fbar[i] -= acc;
      }
      // f = eps (log a - s),  s_i = lse_j((g_prev_j - C_ij) / eps)
      for (std::size_t i = 0; i < n_; ++i) lbar[i] += eps * fbar[i];
      if (k == 0) break;  // g^0 is the constant zero start
      const auto& gprev = it.g[k - 1];
      const auto& s = it.s[k];
      std::fill(gbar.begin(), gbar.end(), 0.0);
      for (std::size_t i = 0; i < n_; ++i) {
        const double* row = scaled_.row(i).data();
        const double c = fbar[i];
        const double si = s[i];
        for (std::size_t j = 0; j < m_; ++j) gbar[j] -= c * std::exp(gprev[j] * inv + row[j] - si);
      }
      std::fill(fbar.begin(), fbar.end(), 0.0);
    }
    return lbar;
  }

 private:
  // s_i = lse_j(g_j / eps - C_ij / eps)
  void row_lse(const std::vector<double>& g, std::vector<double>& s) const {
    const double inv = 1.0 / opt_.epsilon;
    for (std::size_t i = 0; i < n_; ++i) {
      const double* row = scaled_.row(i).data();
      double mx = kNegInf;
      for (std::size_t j = 0; j < m_; ++j) mx = std::max(mx, g[j] * inv + row[j]);
      double sum = 0.0;
      for (std::size_t j = 0; j < m_; ++j) sum += std::exp(g[j] * inv + row[j] - mx);
      s[i] = mx + std::log(sum);
    }
  }

  // t_j = lse_i(f_i / eps - C_ij / eps), two row-major passes.
  void col_lse(const std::vector<double>& f, std::vector<double>& t) const {
    const double inv = 1.0 / opt_.epsilon;
    std::vector<double>& mx = col_max_;
    mx.assign(m_, kNegInf);
    for (std::size_t i = 0; i < n_; ++i) {
      const double fi = f[i] * inv;
      const double* row = scaled_.row(i).data();
      for (std::size_t j = 0; j < m_; ++j) mx[j] = std::max(mx[j], fi + row[j]);
    }
    std::vector<double>& sum = col_sum_;
    sum.assign(m_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const double fi = f[i] * inv;
      const double* row = scaled_.row(i).data();
      for (std::size_t j = 0; j < m_; ++j) sum[j] += std::exp(fi + row[j] - mx[j]);
    }
    for (std::size_t j = 0; j < m_; ++j) t[j] = mx[j] + std::log(sum[j]);
  }

  std::span<const double> log_a_;
  std::span<const double> log_b_;
  const Matrix& cost_;
  SinkhornOptions opt_;
  std::size_t n_;
  std::size_t m_;
  Matrix scaled_;  // -C / eps
  mutable std::vector<double> col_max_;
  mutable std::vector<double> col_sum_;
};

void check_problem(std::size_t na, std::size_t nb, const Matrix& cost, const SinkhornOptions& opt) {
  if (cost.rows() != na || cost.cols() != nb) {
    throw ShapeError("sinkhorn: marginals " + std::to_string(na) + "/" + std::to_string(nb) +
                     " do not match cost " + std::to_string(cost.rows()) + "x" +
                     std::to_string(cost.cols()));
  }
  if (na == 0 || nb == 0) throw ShapeError("sinkhorn: empty marginal");
  if (!(opt.epsilon > 0.0) || !std::isfinite(opt.epsilon)) {
    throw NumericError("sinkhorn: epsilon must be positive and finite, got " +
                       std::to_string(opt.epsilon));
  }
  require_finite(cost, "sinkhorn cost");
}

std::vector<double> checked_log(std::span<const double> p, const char* what) {
  std::vector<double> out(p.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0) || !std::isfinite(p[i])) {
      throw NumericError(std::string(what) + ": entry " + std::to_string(i) +
                         " is not a positive finite probability");
    }
    total += p[i];
    out[i] = std::log(p[i]);
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw NumericError(std::string(what) + ": probabilities sum to " + std::to_string(total));
  }
  return out;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  require_finite(logits, "logits");
  double mx = kNegInf;
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

}  // namespace

Matrix cost_matrix(const Matrix& src, const Matrix& dst) {
  if (src.cols() != dst.cols()) {
    throw ShapeError("cost_matrix: feature dimensions " + std::to_string(src.cols()) + " vs " +
                     std::to_string(dst.cols()));
  }
  Matrix c(src.rows(), dst.rows());
  const std::size_t d = src.cols();
  for (std::size_t i = 0; i < src.rows(); ++i) {
    const double* x = src.row(i).data();
    for (std::size_t j = 0; j < dst.rows(); ++j) {
      const double* y = dst.row(j).data();
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = x[k] - y[k];
        s += diff * diff;
      }
      c(i, j) = s;
    }
  }
  return c;
}

double default_epsilon(const Matrix& cost, double scale) {
  if (cost.empty()) return scale;
  double total = 0.0;
  for (double v : cost.data()) total += v;
  const double mean = total / static_cast<double>(cost.size());
  return mean > 0.0 ? scale * mean : scale;
}

std::vector<double> softmax(std::span<const double> logits) {
  auto out = log_softmax(logits);
  for (double& v : out) v = std::exp(v);
  return out;
}

TransportPlan sinkhorn(std::span<const double> a, std::span<const double> b, const Matrix& cost,
                       const SinkhornOptions& options) {
  check_problem(a.size(), b.size(), cost, options);
  const auto log_a = checked_log(a, "source marginal");
  const auto log_b = checked_log(b, "target marginal");
  LogSinkhorn solver(log_a, log_b, cost, options);
  return solver.run(nullptr);
}

OtGradient ot_grad_weights(std::span<const double> logits, std::span<const double> b,
                           const Matrix& cost, const SinkhornOptions& options) {
  check_problem(logits.size(), b.size(), cost, options);
  const auto log_a = log_softmax(logits);
  const auto log_b = checked_log(b, "target marginal");
  LogSinkhorn solver(log_a, log_b, cost, options);
  Unrolled iterates;
  OtGradient out;
  out.plan = solver.run(&iterates);
  const auto lbar = solver.backward(out.plan, iterates);
  // log a = logits - lse(logits)
  double total = 0.0;
  for (double v : lbar) total += v;
  out.grad_logits.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.grad_logits[i] = lbar[i] - std::exp(log_a[i]) * total;
  }
  return out;
}

}  // namespace lossval::ot
