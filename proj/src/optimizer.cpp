#include "edrep/optimizer.hpp"

#include <cmath>
#include <random>
#include <string>

namespace edrep {

void OptimizerConfig::validate() const {
  if (dim < 1) throw ValidationError("embedding dimension must be positive");
  if (!(eta0 > 0.0 && eta0 <= 1.0)) throw ValidationError("eta0 must lie in (0, 1]");
  if (epochs < 1) throw ValidationError("epoch count must be positive");
  if (kappa < 1) throw ValidationError("kappa must be positive");
}

double learning_rate(const OptimizerConfig& cfg, int epoch) {
  return cfg.eta0 * (1.0 - static_cast<double>(epoch) / static_cast<double>(cfg.epochs));
}

DenseMatrix random_unit_rows(Index n, Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseMatrix x(n, d);
  for (Index i = 0; i < n; ++i) {
    double norm = 0.0;
    do {
      for (Index q = 0; q < d; ++q) x(i, q) = normal(rng);
      norm = x.row(i).norm();
    } while (norm == 0.0);
    x.row(i) /= norm;
  }
  return x;
}

GradientMatrix GradientMatrix::decompose(DenseMatrix g, const DenseMatrix& x) {
  if (g.rows() != x.rows() || g.cols() != x.cols()) throw DimensionError("gradient shape does not match embedding");
  GradientMatrix out;
  out.g = std::move(g);
  out.tangent.resize(x.rows(), x.cols());
  out.direction = DenseMatrix::Zero(x.rows(), x.cols());
  out.active.assign(static_cast<std::size_t>(x.rows()), 0);
  for (Index i = 0; i < x.rows(); ++i) {
    out.tangent.row(i) = out.g.row(i) - out.g.row(i).dot(x.row(i)) * x.row(i);
    const double tn = out.tangent.row(i).norm();
    // Below this the tangential part is rounding noise and has no direction.
    if (tn > 1e-12 * out.g.row(i).norm()) {
      out.direction.row(i) = out.tangent.row(i) / tn;
      out.active[i] = 1;
    }
  }
  return out;
}

DenseMatrix sphere_step(const DenseMatrix& x, const GradientMatrix& g, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ValidationError("step size must lie in [0, 1]");
  if (g.direction.rows() != x.rows() || g.direction.cols() != x.cols())
    throw DimensionError("gradient shape does not match embedding");
  const double keep = std::sqrt(1.0 - eta * eta);
  DenseMatrix out = x;
  for (Index i = 0; i < x.rows(); ++i) {
    if (!g.active[i]) continue;
    out.row(i) = keep * x.row(i) - eta * g.direction.row(i);
    out.row(i).normalize();
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

void check_operator(const ProductChain& p, const RegularizationWeights& p0, Index n, Index d_rows) {
  if (p.rows() != n || p.cols() != d_rows)
    throw DimensionError("operator is " + std::to_string(p.rows()) + " x " + std::to_string(p.cols()) +
                         ", expected " + std::to_string(n) + " x " + std::to_string(d_rows));
  if (p0.size() != d_rows) throw DimensionError("regularization weights have the wrong length");
}

double sum_log(const Vector& z) {
  CompensatedSum acc;
  for (Index i = 0; i < z.size(); ++i) acc.add(std::log(z[i]));
  return acc.value();
}

// -tr(X^T P Y) + (1^T X).(p0^T Y)
double bilinear_terms(const DenseMatrix& x, const DenseMatrix& y, const ProductChain& p,
                      const RegularizationWeights& p0) {
  const DenseMatrix py = p.apply(y);
  const double affinity = x.cwiseProduct(py).sum();
  const Eigen::RowVectorXd col_sum = x.colwise().sum();
  const Eigen::RowVectorXd weighted = p0.values().transpose() * y;
  return -affinity + col_sum.dot(weighted);
}

}  // namespace

double exact_loss(const DenseMatrix& x, const ProductChain& p, const RegularizationWeights& p0) {
  check_operator(p, p0, x.rows(), x.rows());
  return bilinear_terms(x, x, p, p0) + sum_log(exact_z(x).values);
}

double exact_loss_with_keys(const DenseMatrix& x, const DenseMatrix& keys, const ProductChain& p,
                            const RegularizationWeights& p0) {
  check_operator(p, p0, x.rows(), x.rows());
  return bilinear_terms(x, x, p, p0) + sum_log(exact_z(x, keys).values);
}

double approx_loss(const DenseMatrix& x, const ProductChain& p, const RegularizationWeights& p0,
                   const MixtureParams& params) {
  check_operator(p, p0, x.rows(), x.rows());
  return bilinear_terms(x, x, p, p0) + sum_log(approx_z(x, params).values);
}

DenseMatrix linear_gradient(const DenseMatrix& x, const ProductChain& p, const RegularizationWeights& p0) {
  check_operator(p, p0, x.rows(), x.rows());
  DenseMatrix g = -(p.apply(x) + p.apply_transpose(x));
  const Eigen::RowVectorXd weighted = p0.values().transpose() * x;  // p0^T X
  const Eigen::RowVectorXd total = x.colwise().sum();               // 1^T X
  g.rowwise() += weighted;
  g.noalias() += p0.values() * total;
  return g;
}

DenseMatrix mixture_log_z_gradient(const DenseMatrix& x, const MixtureParams& params) {
  const DenseMatrix zeta = mixture_terms(x, params);
  DenseMatrix term = zeta * params.means;
  for (int a = 0; a < params.kappa(); ++a) {
    const DenseMatrix xo = x * params.covariances[a];
    term.noalias() += zeta.col(a).asDiagonal() * xo;
  }
  const Vector total = zeta.rowwise().sum();
  return total.cwiseInverse().asDiagonal() * term;
}

GradientMatrix approx_gradient(const DenseMatrix& x, const ProductChain& p, const RegularizationWeights& p0,
                               const MixtureParams& params) {
  DenseMatrix g = linear_gradient(x, p, p0) + mixture_log_z_gradient(x, params);
  if (!g.allFinite()) throw NumericError("gradient is not finite");
  return GradientMatrix::decompose(std::move(g), x);
}

DenseMatrix exact_log_z_gradient(const DenseMatrix& x, ExactGradient mode) {
  constexpr Index block = 64;
  const Index n = x.rows();
  DenseMatrix forward(n, x.cols());
  DenseMatrix backward = DenseMatrix::Zero(n, x.cols());
  for (Index lo = 0; lo < n; lo += block) {
    const Index len = std::min(n, lo + block) - lo;
    DenseMatrix s = x.middleRows(lo, len) * x.transpose();
    if (!(s.cwiseAbs().maxCoeff() <= kMaxExponent))
      throw NumericError("scalar products exceed the representable range; rescale the embeddings");
    for (Index r = 0; r < len; ++r) {
      const double peak = s.row(r).maxCoeff();
      s.row(r) = (s.row(r).array() - peak).exp().matrix();
      s.row(r) /= s.row(r).sum();
    }
    forward.middleRows(lo, len).noalias() = s * x;
    if (mode == ExactGradient::full) backward.noalias() += s.transpose() * x.middleRows(lo, len);
  }
  return mode == ExactGradient::full ? DenseMatrix(forward + backward) : forward;
}

GradientMatrix exact_gradient(const DenseMatrix& x, const ProductChain& p, const RegularizationWeights& p0,
                              ExactGradient mode) {
  DenseMatrix g = linear_gradient(x, p, p0) + exact_log_z_gradient(x, mode);
  return GradientMatrix::decompose(std::move(g), x);
}

// ---------------------------------------------------------------------------

namespace {

LabelVector checked_labels(const LabelVector& labels, Index n) {
  if (labels.size() != n)
    throw DimensionError("label vector has " + std::to_string(labels.size()) + " entries, expected " +
                         std::to_string(n));
  labels.validate();
  return labels;
}

enum class GradientKind { mixture, exact };

DenseMatrix run_symmetric(const ProductChain& p, const RegularizationWeights& p0, const OptimizerConfig& cfg,
                          const LabelVector& labels, GradientKind kind,
                          const std::function<void(const EpochState&)>& on_epoch) {
  DenseMatrix x = random_unit_rows(p.rows(), cfg.dim, cfg.seed);
  const Vector weights = class_weights(labels);
  if (on_epoch) on_epoch(EpochState{0, 0.0, x, nullptr, labels, weights});
  for (int t = 0; t < cfg.epochs; ++t) {
    const double eta = learning_rate(cfg, t);
    GradientMatrix g;
    if (kind == GradientKind::mixture)
      g = approx_gradient(x, p, p0, estimate_mixture(x, labels, weights));
    else
      g = exact_gradient(x, p, p0, ExactGradient::frozen_keys);
    x = sphere_step(x, g, eta);
    if (on_epoch) on_epoch(EpochState{t + 1, eta, x, nullptr, labels, weights});
  }
  return x;
}

void check_symmetric_inputs(const ProductChain& p, const RegularizationWeights& p0, const OptimizerConfig& cfg) {
  cfg.validate();
  if (p.rows() != p.cols()) throw DimensionError("symmetric mode needs a square operator");
  check_operator(p, p0, p.rows(), p.rows());
  p.check_row_stochastic();
}

}  // namespace

DenseMatrix fit(const ProductChain& p, const RegularizationWeights& p0, const OptimizerConfig& cfg,
                const FitOptions& opts) {
  check_symmetric_inputs(p, p0, cfg);
  const Index n = p.rows();
  LabelVector labels;
  if (opts.labels) {
    labels = checked_labels(*opts.labels, n);
  } else if (cfg.kappa == 1) {
    labels = LabelVector::constant(n);
  } else {
    // Two passes: kappa = 1 embedding, cluster it, retrain with those classes.
    const DenseMatrix first = run_symmetric(p, p0, cfg, LabelVector::constant(n), GradientKind::mixture, {});
    labels = kmeans_label(first, cfg.kappa, cfg.seed);
  }
  return run_symmetric(p, p0, cfg, labels, GradientKind::mixture, opts.on_epoch);
}

DenseMatrix fit_exact(const ProductChain& p, const RegularizationWeights& p0, const OptimizerConfig& cfg,
                      const FitOptions& opts) {
  check_symmetric_inputs(p, p0, cfg);
  if (p.rows() > kExactFitLimit)
    throw ValidationError("exact fitting is limited to n <= " + std::to_string(kExactFitLimit) + " (got " +
                          std::to_string(p.rows()) + ")");
  return run_symmetric(p, p0, cfg, LabelVector::constant(p.rows()), GradientKind::exact, opts.on_epoch);
}

// ---------------------------------------------------------------------------

double exact_loss_asymmetric(const DenseMatrix& x, const DenseMatrix& y, const ProductChain& p,
                             const RegularizationWeights& p0) {
  check_operator(p, p0, x.rows(), y.rows());
  return bilinear_terms(x, y, p, p0) + sum_log(exact_z(x, y).values);
}

double approx_loss_asymmetric(const DenseMatrix& x, const DenseMatrix& y, const ProductChain& p,
                              const RegularizationWeights& p0, const LabelVector& labels, const Vector& weights) {
  check_operator(p, p0, x.rows(), y.rows());
  return bilinear_terms(x, y, p, p0) + sum_log(approx_z(x, estimate_mixture(y, labels, weights)).values);
}

AsymmetricGradient approx_gradient_asymmetric(const DenseMatrix& x, const DenseMatrix& y, const ProductChain& p,
                                              const RegularizationWeights& p0, const LabelVector& labels,
                                              const Vector& weights) {
  check_operator(p, p0, x.rows(), y.rows());
  const MixtureParams params = estimate_mixture(y, labels, weights);
  const DenseMatrix zeta = mixture_terms(x, params);
  const DenseMatrix resp = zeta.rowwise().sum().cwiseInverse().asDiagonal() * zeta;  // n x kappa

  const Eigen::RowVectorXd y_weighted = p0.values().transpose() * y;
  const Eigen::RowVectorXd x_total = x.colwise().sum();

  DenseMatrix gx = -p.apply(y);
  gx.rowwise() += y_weighted;
  gx += mixture_log_z_gradient(x, params);

  DenseMatrix gy = -p.apply_transpose(x);
  gy.noalias() += p0.values() * x_total;
  // d/dy_a of sum_i log sum_b zeta_ib through mu and Omega of a's class.
  const auto sizes = labels.class_sizes();
  const DenseMatrix mean_pull = resp.transpose() * x;  // kappa x d
  std::vector<Eigen::MatrixXd> spread(static_cast<std::size_t>(params.kappa()));
  for (int a = 0; a < params.kappa(); ++a) {
    if (sizes[a] < 2) continue;
    spread[a] = x.transpose() * resp.col(a).asDiagonal() * x / static_cast<double>(sizes[a] - 1);
  }
  for (Index j = 0; j < y.rows(); ++j) {
    const int a = labels.labels[j];
    gy.row(j) += mean_pull.row(a) / static_cast<double>(sizes[a]);
    if (sizes[a] >= 2) gy.row(j) += (spread[a] * (y.row(j) - params.means.row(a)).transpose()).transpose();
  }
  if (!gx.allFinite() || !gy.allFinite()) throw NumericError("gradient is not finite");
  return {GradientMatrix::decompose(std::move(gx), x), GradientMatrix::decompose(std::move(gy), y)};
}

namespace {

AsymmetricEmbedding run_asymmetric(const ProductChain& p, const RegularizationWeights& p0,
                                   const OptimizerConfig& cfg, const LabelVector& labels,
                                   const std::function<void(const EpochState&)>& on_epoch) {
  const Index n = p.rows();
  const Index m = p.cols();
  const DenseMatrix init = random_unit_rows(n + m, cfg.dim, cfg.seed);
  AsymmetricEmbedding e{init.topRows(n), init.bottomRows(m)};
  const Vector weights = class_weights(labels);
  if (on_epoch) on_epoch(EpochState{0, 0.0, e.x, &e.y, labels, weights});
  for (int t = 0; t < cfg.epochs; ++t) {
    const double eta = learning_rate(cfg, t);
    const auto g = approx_gradient_asymmetric(e.x, e.y, p, p0, labels, weights);
    e.x = sphere_step(e.x, g.x, eta);
    e.y = sphere_step(e.y, g.y, eta);
    if (on_epoch) on_epoch(EpochState{t + 1, eta, e.x, &e.y, labels, weights});
  }
  return e;
}

}  // namespace

AsymmetricEmbedding fit_asymmetric(const ProductChain& p, const RegularizationWeights& p0,
                                   const OptimizerConfig& cfg, const FitOptions& opts) {
  cfg.validate();
  check_operator(p, p0, p.rows(), p.cols());
  p.check_row_stochastic();
  const Index m = p.cols();
  LabelVector labels;
  if (opts.labels) {
    labels = checked_labels(*opts.labels, m);
  } else if (cfg.kappa == 1) {
    labels = LabelVector::constant(m);
  } else {
    const auto first = run_asymmetric(p, p0, cfg, LabelVector::constant(m), {});
    labels = kmeans_label(first.y, cfg.kappa, cfg.seed);
  }
  return run_asymmetric(p, p0, cfg, labels, opts.on_epoch);
}

}  // namespace edrep
