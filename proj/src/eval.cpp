#include "edrep/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>

namespace edrep {

double nmi(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size())
    throw DimensionError("partitions have different lengths: " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  if (a.empty()) throw ValidationError("partitions are empty");
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> pa, pb;
  for (std::size_t k = 0; k < a.size(); ++k) {
    joint[{a[k], b[k]}] += 1.0;
    pa[a[k]] += 1.0;
    pb[b[k]] += 1.0;
  }
  const double n = static_cast<double>(a.size());
  auto entropy = [n](const std::map<int, double>& counts) {
    double h = 0.0;
    for (const auto& [label, c] : counts) h -= (c / n) * std::log(c / n);
    return h;
  };
  const double ha = entropy(pa);
  const double hb = entropy(pb);
  if (ha == 0.0 && hb == 0.0) return 1.0;
  double mi = 0.0;
  for (const auto& [key, c] : joint) mi += (c / n) * std::log(c * n / (pa[key.first] * pb[key.second]));
  const double value = mi / (0.5 * (ha + hb));
  return std::clamp(value, 0.0, 1.0);
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> rank(v.size());
  for (std::size_t k = 0; k < order.size();) {
    std::size_t e = k;
    while (e + 1 < order.size() && v[order[e + 1]] == v[order[k]]) ++e;
    const double r = 0.5 * static_cast<double>(k + e) + 1.0;
    for (std::size_t t = k; t <= e; ++t) rank[order[t]] = r;
    k = e + 1;
  }
  return rank;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw DimensionError("spearman needs two equal series of length >= 2");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / ra.size();
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / rb.size();
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < ra.size(); ++k) {
    sab += (ra[k] - ma) * (rb[k] - mb);
    saa += (ra[k] - ma) * (ra[k] - ma);
    sbb += (rb[k] - mb) * (rb[k] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

namespace {

void check_pair(const DenseMatrix& x, const DenseMatrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw DimensionError("embedding shapes differ: " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                         " vs " + std::to_string(y.rows()) + "x" + std::to_string(y.cols()));
}

}  // namespace

double gram_deviation_direct(const DenseMatrix& x, const DenseMatrix& y) {
  check_pair(x, y);
  constexpr Index block = 256;
  const Index n = x.rows();
  double total = 0.0;
  for (Index lo = 0; lo < n; lo += block) {
    const Index len = std::min(n, lo + block) - lo;
    const DenseMatrix diff = x.middleRows(lo, len) * x.transpose() - y.middleRows(lo, len) * y.transpose();
    total += diff.squaredNorm();
  }
  return std::sqrt(total) / static_cast<double>(n);
}

double gram_deviation_trace(const DenseMatrix& x, const DenseMatrix& y) {
  check_pair(x, y);
  const Eigen::MatrixXd xx = x.transpose() * x;
  const Eigen::MatrixXd yy = y.transpose() * y;
  const Eigen::MatrixXd xy = x.transpose() * y;
  const double sq = xx.squaredNorm() + yy.squaredNorm() - 2.0 * xy.squaredNorm();
  return std::sqrt(std::max(sq, 0.0)) / static_cast<double>(x.rows());
}

double gram_deviation(const DenseMatrix& x, const DenseMatrix& y) {
  return x.rows() <= kDirectGramLimit ? gram_deviation_direct(x, y) : gram_deviation_trace(x, y);
}

std::vector<double> deviation_ct(const std::vector<DenseMatrix>& x_traj, const std::vector<DenseMatrix>& y_traj) {
  if (x_traj.size() != y_traj.size())
    throw DimensionError("trajectories have different lengths: " + std::to_string(x_traj.size()) + " vs " +
                         std::to_string(y_traj.size()));
  std::vector<double> ct(x_traj.size());
  for (std::size_t t = 0; t < x_traj.size(); ++t) ct[t] = gram_deviation(x_traj[t], y_traj[t]);
  return ct;
}

DeviationRun deviation_experiment(const ProductChain& p, const RegularizationWeights& p0, const OptimizerConfig& cfg) {
  std::vector<DenseMatrix> approx_traj, exact_traj;
  FitOptions approx_opts;
  approx_opts.on_epoch = [&](const EpochState& s) { approx_traj.push_back(s.x); };
  FitOptions exact_opts;
  exact_opts.on_epoch = [&](const EpochState& s) { exact_traj.push_back(s.x); };
  fit(p, p0, cfg, approx_opts);
  fit_exact(p, p0, cfg, exact_opts);
  return {deviation_ct(approx_traj, exact_traj)};
}

PipelineResult community_pipeline(const DcsbmInstance& instance, int w, const OptimizerConfig& cfg, int restarts) {
  const auto start = std::chrono::steady_clock::now();
  const Index n = instance.adjacency.rows();
  const ProductChain p = walk_operator(instance.adjacency, w);
  const DenseMatrix x = fit(p, RegularizationWeights::uniform(n), cfg);
  auto clusters = kmeans_best_of(x, instance.labels.kappa, cfg.seed, restarts);
  const auto stop = std::chrono::steady_clock::now();
  PipelineResult r;
  r.nmi = nmi(clusters.labels, instance.labels);
  r.seconds = std::chrono::duration<double>(stop - start).count();
  r.inferred = std::move(clusters.labels);
  return r;
}

std::vector<BenchRow> dcsbm_bench(const DcsbmParams& base, const std::vector<double>& alphas,
                                  const std::vector<std::uint64_t>& seeds, int w, const OptimizerConfig& cfg) {
  std::vector<BenchRow> rows;
  rows.reserve(alphas.size() * seeds.size());
  for (double alpha : alphas) {
    for (auto seed : seeds) {
      DcsbmParams params = base;
      params.alpha = alpha;
      params.seed = seed;
      const auto instance = dcsbm_sample(params);
      OptimizerConfig run_cfg = cfg;
      run_cfg.seed = seed;
      const auto res = community_pipeline(instance, w, run_cfg);
      rows.push_back({alpha, seed, res.nmi, res.seconds});
    }
  }
  return rows;
}

}  // namespace edrep
