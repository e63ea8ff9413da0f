#include "edrep/graphs.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "edrep/matrix_io.hpp"

namespace edrep {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream for row i of a generator seeded with `seed`.
std::mt19937_64 row_stream(std::uint64_t seed, Index i) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(i) + 1)));
}

using Triplet = Eigen::Triplet<double, Index>;

}  // namespace

BlockAffinities block_affinities(double c, double alpha, int q, double theta_second_moment) {
  if (q < 1) throw ValidationError("community count must be positive");
  if (!(c > 0.0)) throw ValidationError("average degree must be positive");
  if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
  if (!(theta_second_moment > 0.0)) throw ValidationError("E[theta^2] must be positive");
  BlockAffinities b;
  b.c_out = c - alpha * std::sqrt(c / theta_second_moment);
  b.c_in = q * c - (q - 1) * b.c_out;
  if (b.c_out < 0.0) {
    std::ostringstream os;
    os << "alpha = " << alpha << " needs c_out = " << b.c_out << " < 0; the largest alpha for c = " << c
       << " is " << std::sqrt(c * theta_second_moment);
    throw ValidationError(os.str());
  }
  return b;
}

double detectability(double c, double c_out, double theta_second_moment) {
  return (c - c_out) * std::sqrt(theta_second_moment / c);
}

std::vector<double> sample_theta(Index n, ThetaRecipe recipe, std::uint64_t seed) {
  std::vector<double> theta(static_cast<std::size_t>(n), 1.0);
  if (recipe == ThetaRecipe::unit) return theta;
  std::mt19937_64 rng(splitmix64(seed ^ 0x7468657461ULL));
  std::uniform_real_distribution<double> u(3.0, 12.0);
  double total = 0.0;
  for (auto& t : theta) {
    t = std::pow(u(rng), 6);
    total += t;
  }
  const double mean = total / static_cast<double>(n);
  for (auto& t : theta) t /= mean;
  return theta;
}

DcsbmInstance dcsbm_sample(const DcsbmParams& params) {
  const Index n = params.n;
  if (n < 2) throw ValidationError("DCSBM needs at least two nodes");
  DcsbmInstance inst;
  inst.theta = sample_theta(n, params.theta_recipe, params.seed);
  double theta2 = 0.0;
  for (double t : inst.theta) theta2 += t * t;
  theta2 /= static_cast<double>(n);
  inst.affinities = block_affinities(params.c, params.alpha, params.q, theta2);

  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<int> pick(0, params.q - 1);
  inst.labels.kappa = params.q;
  inst.labels.labels.resize(static_cast<std::size_t>(n));
  for (auto& l : inst.labels.labels) l = pick(rng);

  const auto& lab = inst.labels.labels;
  const auto& theta = inst.theta;
  const double c_in = inst.affinities.c_in / static_cast<double>(n);
  const double c_out = inst.affinities.c_out / static_cast<double>(n);
  std::vector<std::vector<Index>> upper(static_cast<std::size_t>(n));
  std::vector<Index> violation(static_cast<std::size_t>(n), -1);
#pragma omp parallel for schedule(dynamic, 64)
  for (Index i = 0; i < n; ++i) {
    auto rng_i = row_stream(params.seed, i);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Index j = i + 1; j < n; ++j) {
      const double prob = theta[i] * theta[j] * (lab[i] == lab[j] ? c_in : c_out);
      if (prob > 1.0 && violation[i] < 0) violation[i] = j;
      if (u(rng_i) < prob) upper[i].push_back(j);
    }
  }
  for (Index i = 0; i < n; ++i) {
    if (violation[i] >= 0) {
      const Index j = violation[i];
      std::ostringstream os;
      os << "edge probability exceeds 1 for nodes " << i << " and " << j << " (theta = " << theta[i] << ", "
         << theta[j] << ")";
      throw ValidationError(os.str(), {i, j});
    }
  }

  std::vector<Triplet> triplets;
  Index edges = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j : upper[i]) {
      triplets.emplace_back(i, j, 1.0);
      triplets.emplace_back(j, i, 1.0);
      ++edges;
    }
  }
  inst.adjacency = sparse_from_triplets(n, n, triplets);
  inst.average_degree = 2.0 * static_cast<double>(edges) / static_cast<double>(n);
  return inst;
}

void write_dcsbm_instance(const std::filesystem::path& dir, const DcsbmInstance& instance) {
  write_matrix_market(dir / "adjacency.mtx", instance.adjacency);
  write_labels(dir / "labels.txt", instance.labels.labels);
}

SparseMatrix negative_binomial_graph(Index n, double c, int successes, double p, std::uint64_t seed) {
  if (n < 2) throw ValidationError("graph needs at least two nodes");
  std::mt19937_64 rng(seed);
  std::negative_binomial_distribution<int> nb(successes, p);
  std::vector<double> theta(static_cast<std::size_t>(n));
  double mean = 0.0;
  for (auto& t : theta) {
    t = nb(rng);
    mean += t;
  }
  mean /= static_cast<double>(n);
  if (!(mean > 0.0)) throw ValidationError("all sampled weights are zero");
  const double scale = c / (static_cast<double>(n) * mean * mean);

  std::vector<std::vector<Index>> upper(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 64)
  for (Index i = 0; i < n; ++i) {
    auto rng_i = row_stream(seed, i);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Index j = i + 1; j < n; ++j)
      if (u(rng_i) < std::min(1.0, scale * theta[i] * theta[j])) upper[i].push_back(j);
  }
  std::vector<Triplet> triplets;
  for (Index i = 0; i < n; ++i)
    for (Index j : upper[i]) {
      triplets.emplace_back(i, j, 1.0);
      triplets.emplace_back(j, i, 1.0);
    }
  return sparse_from_triplets(n, n, triplets);
}

ProductChain walk_operator(const SparseMatrix& adjacency, int w) {
  if (w < 1) throw ValidationError("walk length must be positive");
  if (adjacency.rows() != adjacency.cols()) throw DimensionError("adjacency must be square");
  const SparseMatrix l = row_normalize(adjacency);
  return ProductChain(std::vector<SparseMatrix>(static_cast<std::size_t>(w), l),
                      std::vector<double>(static_cast<std::size_t>(w), 1.0 / w));
}

// ---------------------------------------------------------------------------

TemporalEdgeList read_temporal_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  TemporalEdgeList edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
    auto number = [&](const std::string& s, double& out) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      if (b == std::string::npos) return false;
      const auto [ptr, ec] = std::from_chars(s.data() + b, s.data() + e + 1, out);
      return ec == std::errc() && ptr == s.data() + e + 1;
    };
    double v[4];
    bool ok = cols.size() == 4;
    for (std::size_t k = 0; ok && k < 4; ++k) ok = number(cols[k], v[k]);
    if (!ok) {
      if (edges.empty() && lineno == 1) continue;  // header
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected i,j,t,w");
    }
    for (int k = 0; k < 3; ++k)
      if (v[k] != std::floor(v[k]))
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": node ids and times must be integers");
    edges.push_back({static_cast<Index>(v[0]), static_cast<Index>(v[1]), static_cast<Index>(v[2]), v[3]});
  }
  return edges;
}

Index SupraGraph::index_of(Index node, Index time) const {
  const TemporalNode key{node, time};
  const auto it = std::lower_bound(nodes.begin(), nodes.end(), key);
  if (it == nodes.end() || *it != key) return -1;
  return static_cast<Index>(it - nodes.begin());
}

SupraGraph supra_adjacency(const TemporalEdgeList& edges, Index horizon) {
  if (edges.empty()) throw ValidationError("temporal edge list is empty");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto& e = edges[k];
    std::string problem;
    if (e.i < 0 || e.j < 0) problem = "negative node id";
    else if (e.i == e.j) problem = "self edge";
    else if (e.t < 1) problem = "time before 1";
    else if (horizon > 0 && e.t > horizon) problem = "time after horizon " + std::to_string(horizon);
    else if (!(e.w > 0.0) || !std::isfinite(e.w)) problem = "weight must be positive";
    if (!problem.empty())
      throw ValidationError("temporal record " + std::to_string(k) + ": " + problem, {static_cast<Index>(k)});
  }

  SupraGraph g;
  g.nodes.reserve(2 * edges.size());
  for (const auto& e : edges) {
    g.nodes.push_back({e.i, e.t});
    g.nodes.push_back({e.j, e.t});
  }
  std::sort(g.nodes.begin(), g.nodes.end());
  g.nodes.erase(std::unique(g.nodes.begin(), g.nodes.end()), g.nodes.end());

  // Nodes are sorted by (node, time), so the next activation is the next slot.
  auto next_of = [&](Index idx) -> Index {
    const Index nxt = idx + 1;
    return nxt < g.size() && g.nodes[nxt].node == g.nodes[idx].node ? nxt : -1;
  };

  std::vector<Triplet> triplets;
  for (Index k = 0; k < g.size(); ++k) {
    const Index nxt = next_of(k);
    if (nxt >= 0) triplets.emplace_back(k, nxt, 1.0);
  }
  for (const auto& e : edges) {
    const Index src_i = g.index_of(e.i, e.t);
    const Index src_j = g.index_of(e.j, e.t);
    if (const Index nj = next_of(src_j); nj >= 0) triplets.emplace_back(src_i, nj, e.w);
    if (const Index ni = next_of(src_i); ni >= 0) triplets.emplace_back(src_j, ni, e.w);
  }
  g.adjacency = sparse_from_triplets(g.size(), g.size(), triplets);
  return g;
}

bool is_time_respecting(const SupraGraph& g) {
  for (Index u = 0; u < g.adjacency.outerSize(); ++u)
    for (SparseMatrix::InnerIterator it(g.adjacency, u); it; ++it)
      if (g.nodes[it.col()].time <= g.nodes[u].time) return false;
  return true;
}

bool is_acyclic(const SparseMatrix& adjacency) {
  const Index n = adjacency.rows();
  if (adjacency.cols() != n) throw DimensionError("adjacency must be square");
  std::vector<Index> indegree(static_cast<std::size_t>(n), 0);
  for (Index u = 0; u < n; ++u)
    for (SparseMatrix::InnerIterator it(adjacency, u); it; ++it) ++indegree[it.col()];
  std::vector<Index> ready;
  for (Index u = 0; u < n; ++u)
    if (indegree[u] == 0) ready.push_back(u);
  Index visited = 0;
  while (!ready.empty()) {
    const Index u = ready.back();
    ready.pop_back();
    ++visited;
    for (SparseMatrix::InnerIterator it(adjacency, u); it; ++it)
      if (--indegree[it.col()] == 0) ready.push_back(it.col());
  }
  return visited == n;
}

}  // namespace edrep
