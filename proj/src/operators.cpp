#include "weightlab/operators.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "weightlab/util.hpp"

namespace weightlab {

Eigen::MatrixXd kernel_matrix(const KernelSpec& k, const AtomicMeasure& target, const AtomicMeasure& source,
                              int threads) {
  k.validate();
  if (target.dim() != k.dim || source.dim() != k.dim) throw ValidationError("kernel and measure dimensions differ");
  Eigen::Index rows = static_cast<Eigen::Index>(target.size()), cols = static_cast<Eigen::Index>(source.size());
  int m = k.components();
  Eigen::MatrixXd out(rows * m, cols);
  parallel_for(target.size(), threads, [&](std::size_t i) {
    double v[kMaxDim];
    for (Eigen::Index j = 0; j < cols; ++j) {
      k.eval_all(target.coord(i), source.coord(static_cast<std::size_t>(j)), v);
      for (int c = 0; c < m; ++c) out(c * rows + static_cast<Eigen::Index>(i), j) = v[c];
    }
  });
  return out;
}

Eigen::MatrixXd operator_matrix(const KernelSpec& k, const AtomicMeasure& sigma, const AtomicMeasure& omega,
                                int threads) {
  Eigen::MatrixXd a = kernel_matrix(k, omega, sigma, threads);
  Eigen::Index rows = static_cast<Eigen::Index>(omega.size());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    double w = std::sqrt(omega[static_cast<std::size_t>(r % rows)].mass);
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(r, j) *= w * std::sqrt(sigma[static_cast<std::size_t>(j)].mass);
  }
  return a;
}

namespace {

NormResult dense_norm(const Eigen::MatrixXd& a) {
  NormResult res;
  res.method = "dense";
  if (a.size() == 0) return res;
  Eigen::MatrixXd g = a.rows() >= a.cols() ? Eigen::MatrixXd(a.transpose() * a) : Eigen::MatrixXd(a * a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
  res.value = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
  res.lower = res.upper = res.value;
  return res;
}

NormResult power_norm(const Eigen::MatrixXd& a, const NormOptions& opt) {
  NormResult res;
  res.method = "power";
  if (a.size() == 0) return res;
  Rng rng(opt.seed);
  Eigen::VectorXd v(a.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = uniform01(rng) + 0.5;
  v.normalize();
  double prev = -1.0;
  res.converged = false;
  for (int it = 1; it <= opt.max_iter; ++it) {
    Eigen::VectorXd av = a * v;
    Eigen::VectorXd w = a.transpose() * av;
    double theta2 = av.squaredNorm();
    double resid = (w - theta2 * v).norm();
    res.iterations = it;
    res.value = std::sqrt(theta2);
    res.lower = res.value;
    res.upper = std::sqrt(theta2 + resid);
    double wn = w.norm();
    if (wn == 0.0) {
      res.converged = true;
      break;
    }
    v = w / wn;
    if (prev >= 0.0 && std::fabs(res.value - prev) <= opt.rel_tol * res.value) {
      res.converged = true;
      break;
    }
    prev = res.value;
  }
  return res;
}

}  // namespace

NormResult matrix_norm(const Eigen::MatrixXd& a, const NormOptions& opt) {
  if (opt.method == "dense") return dense_norm(a);
  if (opt.method == "power") return power_norm(a, opt);
  if (opt.method != "auto") throw ValidationError("unknown norm method '" + opt.method + "'");
  if (a.rows() <= opt.dense_limit && a.cols() <= opt.dense_limit) return dense_norm(a);
  return power_norm(a, opt);
}

NormResult operator_norm(const KernelSpec& k, const AtomicMeasure& sigma, const AtomicMeasure& omega,
                         const NormOptions& opt, int threads) {
  return matrix_norm(operator_matrix(k, sigma, omega, threads), opt);
}

std::vector<double> apply(const KernelSpec& k, const AtomicMeasure& sigma, const MuFunction& f,
                          const AtomicMeasure& omega) {
  if (f.size() != sigma.size()) throw ValidationError("function length does not match the measure");
  int m = k.components();
  std::vector<double> out(omega.size() * m, 0.0);
  double v[kMaxDim];
  for (std::size_t i = 0; i < omega.size(); ++i) {
    std::vector<Accumulator> acc(m);
    for (std::size_t j = 0; j < sigma.size(); ++j) {
      k.eval_all(omega.coord(i), sigma.coord(j), v);
      for (int c = 0; c < m; ++c) acc[c] += v[c] * sigma[j].mass * f[j];
    }
    for (int c = 0; c < m; ++c) out[c * omega.size() + i] = acc[c].value();
  }
  return out;
}

double bilinear(const KernelSpec& k, const AtomicMeasure& sigma, const AtomicMeasure& omega, const MuFunction& f,
                const MuFunction& g) {
  if (k.components() != 1) throw ValidationError("bilinear form needs a scalar kernel");
  if (g.size() != omega.size()) throw ValidationError("function length does not match the measure");
  std::vector<double> tf = apply(k, sigma, f, omega);
  Accumulator acc;
  for (std::size_t i = 0; i < omega.size(); ++i) acc += tf[i] * g[i] * omega[i].mass;
  return acc.value();
}

GoodSplit good_projection(const Cube& q, const HaarBasis& b, const MuFunction& f, const GoodnessParams& p) {
  const AtomicMeasure& mu = b.measure();
  if (f.size() != mu.size()) throw ValidationError("function length does not match the measure");
  GoodSplit out;
  out.good.assign(mu.size(), 0.0);
  out.grid_bad = !is_q_good_grid(q, b.grid(), p, &out.vacuous);
  if (!out.grid_bad) {
    for (std::size_t n = 0; n < b.nodes().size(); ++n) {
      if (!is_good_cube(b.nodes()[n].cube, b.grid(), p)) continue;
      MuFunction d = delta(b, f, static_cast<int>(n));
      for (std::size_t i = 0; i < d.size(); ++i) out.good[i] += d[i];
    }
  }
  out.bad.resize(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) out.bad[i] = f[i] - out.good[i];
  return out;
}

Forms forms_bcs(const KernelSpec& k, const HaarBasis& sigma_basis, const HaarBasis& omega_basis, const MuFunction& f,
                const MuFunction& g, const GoodnessParams& p) {
  if (k.components() != 1) throw ValidationError("forms need a scalar kernel");
  if (!(sigma_basis.grid() == omega_basis.grid())) throw ValidationError("bases must share one grid");
  const AtomicMeasure& sigma = sigma_basis.measure();
  const AtomicMeasure& omega = omega_basis.measure();
  Eigen::MatrixXd kmat = kernel_matrix(k, omega, sigma);

  const auto& sn = sigma_basis.nodes();
  const auto& wn = omega_basis.nodes();
  // T(Delta_I f) at omega atoms, one column per sigma node
  Eigen::MatrixXd tdf(static_cast<Eigen::Index>(omega.size()), static_cast<Eigen::Index>(sn.size()));
  Eigen::VectorXd pf = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sigma.size()));
  for (std::size_t a = 0; a < sn.size(); ++a) {
    MuFunction d = delta(sigma_basis, f, static_cast<int>(a));
    Eigen::VectorXd w(static_cast<Eigen::Index>(sigma.size()));
    for (std::size_t j = 0; j < sigma.size(); ++j) w(j) = d[j] * sigma[j].mass;
    tdf.col(static_cast<Eigen::Index>(a)) = kmat * w;
    for (std::size_t j = 0; j < sigma.size(); ++j) pf(j) += d[j];
  }
  std::vector<MuFunction> dg(wn.size());
  Eigen::VectorXd pg = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(omega.size()));
  for (std::size_t b = 0; b < wn.size(); ++b) {
    dg[b] = delta(omega_basis, g, static_cast<int>(b));
    for (std::size_t i = 0; i < omega.size(); ++i) pg(i) += dg[b][i];
  }
  Forms out;
  {
    Eigen::VectorXd w(static_cast<Eigen::Index>(sigma.size()));
    for (std::size_t j = 0; j < sigma.size(); ++j) w(j) = pf(j) * sigma[j].mass;
    Eigen::VectorXd tf = kmat * w;
    Accumulator acc;
    for (std::size_t i = 0; i < omega.size(); ++i) acc += tf(i) * pg(i) * omega[i].mass;
    out.B = acc.value();
  }
  Accumulator c, s;
  for (std::size_t a = 0; a < sn.size(); ++a) {
    for (std::size_t b = 0; b < wn.size(); ++b) {
      if (!eta_close(sn[a].cube, wn[b].cube, p.r, sigma_basis.grid())) continue;
      Accumulator term;
      for (std::size_t kk = 0; kk < wn[b].atoms.size(); ++kk) {
        for (int i : wn[b].atoms[kk]) term += tdf(i, static_cast<Eigen::Index>(a)) * dg[b][i] * omega[i].mass;
      }
      c += term.value();
      s += std::fabs(term.value());
      ++out.close_pairs;
    }
  }
  out.C = c.value();
  out.S = s.value();
  return out;
}

}  // namespace weightlab
