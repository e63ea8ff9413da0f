#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "edrep/matstore.hpp"
#include "edrep/mixture.hpp"

namespace edrep {

// --- Degree-corrected stochastic block model ---------------------------------

enum class ThetaRecipe {
  unit,            // theta_i = 1
  powerlaw,  // u ~ U[3, 12], theta = u^6, rescaled to sample mean 1
};

struct DcsbmParams {
  Index n = 1000;
  int q = 2;
  double c = 10.0;      // expected average degree
  double alpha = 2.0;   // (c - c_out) sqrt(E[theta^2] / c)
  ThetaRecipe theta_recipe = ThetaRecipe::unit;
  std::uint64_t seed = 0;
};

struct BlockAffinities {
  double c_in = 0.0;
  double c_out = 0.0;
};

/// Inverts c = (c_in + (q - 1) c_out) / q and alpha = (c - c_out) sqrt(theta2 / c):
///   c_out = c - alpha sqrt(c / theta2),  c_in = q c - (q - 1) c_out.
/// Throws ValidationError when alpha is not positive or c_out would be negative.
BlockAffinities block_affinities(double c, double alpha, int q, double theta_second_moment);

/// alpha = (c - c_out) sqrt(theta2 / c).
double detectability(double c, double c_out, double theta_second_moment);

std::vector<double> sample_theta(Index n, ThetaRecipe recipe, std::uint64_t seed);

struct DcsbmInstance {
  SparseMatrix adjacency;  // symmetric 0/1, zero diagonal
  LabelVector labels;      // ground truth, q classes
  std::vector<double> theta;
  BlockAffinities affinities;
  double average_degree = 0.0;  // realized 2|E| / n
};

/// P(A_ij = 1) = theta_i theta_j / n * (c_in if same class else c_out),
/// sampled independently over the upper triangle and mirrored.
DcsbmInstance dcsbm_sample(const DcsbmParams& params);

/// Writes adjacency.mtx and labels.txt into `dir`.
void write_dcsbm_instance(const std::filesystem::path& dir, const DcsbmInstance& instance);

/// Undirected graph with P(A_ij = 1) = min(1, c theta_i theta_j / (n mean(theta)^2)),
/// theta_i ~ NegativeBinomial(failures before `successes` successes, success probability `p`).
SparseMatrix negative_binomial_graph(Index n, double c, int successes, double p, std::uint64_t seed);

/// (1/w) sum_{t=1..w} L^t with L the row-normalized adjacency, held as an averaged chain.
ProductChain walk_operator(const SparseMatrix& adjacency, int w);

// --- Temporal graphs ----------------------------------------------------------

struct TemporalEdge {
  Index i = 0;
  Index j = 0;
  Index t = 1;
  double w = 1.0;
};

using TemporalEdgeList = std::vector<TemporalEdge>;

/// Reads 4-column CSV rows i,j,t,w. A non-numeric first line is taken as a header.
TemporalEdgeList read_temporal_csv(const std::filesystem::path& path);

struct TemporalNode {
  Index node = 0;
  Index time = 0;
  auto operator<=>(const TemporalNode&) const = default;
};

struct SupraGraph {
  std::vector<TemporalNode> nodes;  // sorted by (node, time); position is the supra index
  SparseMatrix adjacency;           // directed, D x D

  Index size() const { return static_cast<Index>(nodes.size()); }
  /// Supra index of (node, time), or -1 if that node is not active then.
  Index index_of(Index node, Index time) const;
};

/// Supra-adjacency of a temporal edge list. Temporal nodes are the (i, t)
/// pairs where i has a contact at t. Edges, with t' the next activation:
///   (i, t) -> (i, t'_i)          weight 1
///   (i, t) -> (j, t'_j)          weight w_ijt, for each contact (i, j, t)
///   (j, t) -> (i, t'_i)          weight w_ijt, the mirror
/// Contacts at a final activation produce no outgoing cross edge.
/// Throws ValidationError naming the first malformed record.
SupraGraph supra_adjacency(const TemporalEdgeList& edges, Index horizon = 0);

/// True when every edge points to a strictly later time.
bool is_time_respecting(const SupraGraph& g);

/// Kahn's algorithm on a square sparse matrix read as a directed graph.
bool is_acyclic(const SparseMatrix& adjacency);

}  // namespace edrep
