#include "cli.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "edrep/eval.hpp"
#include "edrep/graphs.hpp"
#include "edrep/matrix_io.hpp"
#include "edrep/matstore.hpp"
#include "edrep/mixture.hpp"
#include "edrep/optimizer.hpp"
#include "edrep/znorm.hpp"

namespace edrep::cli {

namespace fs = std::filesystem;

namespace {

// Files written by the current run. Unless commit() is called they are
// removed again, together with any directories this run created.
class OutputDir {
 public:
  explicit OutputDir(fs::path root) : root_(std::move(root)) {}
  OutputDir(const OutputDir&) = delete;
  OutputDir& operator=(const OutputDir&) = delete;

  ~OutputDir() {
    if (committed_) return;
    std::error_code ec;
    for (auto it = files_.rbegin(); it != files_.rend(); ++it) fs::remove(*it, ec);
    for (auto it = dirs_.rbegin(); it != dirs_.rend(); ++it) fs::remove(*it, ec);  // only if empty
  }

  /// Path of `name` under the root, creating parent directories as needed.
  fs::path file(const fs::path& name) {
    const fs::path path = root_ / name;
    make_dirs(path.parent_path());
    files_.push_back(path);
    return path;
  }

  void commit() { committed_ = true; }
  const fs::path& root() const { return root_; }

 private:
  void make_dirs(const fs::path& dir) {
    if (dir.empty() || fs::exists(dir)) return;
    make_dirs(dir.parent_path());
    if (!fs::create_directory(dir)) throw IoError("cannot create directory " + dir.string());
    dirs_.push_back(dir);
  }

  fs::path root_;
  std::vector<fs::path> files_;
  std::vector<fs::path> dirs_;
  bool committed_ = false;
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void close_out(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw IoError("write failed for " + path.string());
}

// --- Options shared by every subcommand ---------------------------------------

struct Common {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int threads = 0;
};

void add_common(CLI::App* sub, Common& c) {
  // Read before parsing (see with_config_file); declared here so help lists it.
  sub->add_option("--config", c.config, "flat key = value file; command-line flags take precedence")->configurable(false);
  sub->add_option("--out", c.out, "output directory")->required();
  sub->add_option("--seed", c.seed, "random seed")->envname("EDREP_SEED")->capture_default_str();
  sub->add_option("--threads", c.threads, "worker cap (0 = runtime default)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
}

void apply_threads(const Common& c) {
  if (c.threads > 0) omp_set_num_threads(c.threads);
}

void write_manifest(OutputDir& out, const CLI::App* sub) {
  const fs::path path = out.file("config.ini");
  auto f = open_out(path);
  f << sub->config_to_str(true, false);
  close_out(f, path);
}

void add_optimizer_options(CLI::App* sub, OptimizerConfig& cfg) {
  sub->add_option("--dim", cfg.dim, "embedding dimension")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--eta0", cfg.eta0, "initial learning rate in (0, 1]")->capture_default_str();
  sub->add_option("--epochs", cfg.epochs, "training epochs")->check(CLI::NonNegativeNumber)->capture_default_str();
  sub->add_option("--kappa", cfg.kappa, "mixture classes")->check(CLI::PositiveNumber)->capture_default_str();
}

std::string row_csv(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k) line += ',';
    line += cells[k];
  }
  return line + '\n';
}

// --- estimate-z ---------------------------------------------------------------

struct EstimateArgs {
  Common common;
  std::string embedding;
  std::string keys;
  bool exact = false;
  std::vector<int> mixture;
  std::vector<Index> performer;
  std::vector<Index> rfa;
  Index samples = 1000;
  std::string rescale = "none";
};

std::vector<Index> sample_rows(Index n, Index count, std::uint64_t seed) {
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  if (count <= 0 || count >= n) return all;
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates, then sorted so the output lists rows in order.
  for (Index k = 0; k < count; ++k) {
    std::uniform_int_distribution<Index> pick(k, n - 1);
    std::swap(all[static_cast<std::size_t>(k)], all[static_cast<std::size_t>(pick(rng))]);
  }
  all.resize(static_cast<std::size_t>(count));
  std::sort(all.begin(), all.end());
  return all;
}

DenseMatrix gather_rows(const DenseMatrix& x, const std::vector<Index>& rows) {
  DenseMatrix out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = x.row(rows[k]);
  return out;
}

int cmd_estimate_z(const EstimateArgs& a, const CLI::App* sub) {
  apply_threads(a.common);
  if (!a.exact && a.mixture.empty() && a.performer.empty() && a.rfa.empty())
    throw CLI::ValidationError("estimate-z", "choose at least one of --exact, --mixture, --performer, --rfa");

  DenseMatrix x = read_dense(a.embedding);
  DenseMatrix y = a.keys.empty() ? x : read_dense(a.keys);
  if (x.cols() != y.cols())
    throw DimensionError("embedding has " + std::to_string(x.cols()) + " columns, keys have " +
                         std::to_string(y.cols()));
  if (a.rescale == "average") {
    x = rescale_embedding(x, RescaleMode::average_norm_one);
    y = rescale_embedding(y, RescaleMode::average_norm_one);
  } else if (a.rescale == "unit") {
    x = rescale_embedding(x, RescaleMode::unit_rows);
    y = rescale_embedding(y, RescaleMode::unit_rows);
  }

  const auto rows = sample_rows(x.rows(), a.samples, a.common.seed);
  const DenseMatrix xs = gather_rows(x, rows);

  std::vector<std::pair<std::string, ZEstimate>> columns;
  std::optional<ZEstimate> reference;
  if (a.exact) {
    reference = exact_z_rows(x, rows, y);
    columns.emplace_back("exact", *reference);
  }
  for (int kappa : a.mixture) {
    const LabelVector labels = kappa == 1 ? LabelVector::constant(y.rows()) : kmeans_label(y, kappa, a.common.seed);
    columns.emplace_back("mixture_k" + std::to_string(kappa), approx_z(xs, estimate_mixture(y, labels)));
  }
  for (Index d : a.performer) {
    const auto map = KernelFeatureMap::sample(d, y.cols(), a.common.seed);
    columns.emplace_back("performer_D" + std::to_string(d), kernel_z(xs, y, map, KernelVariant::performer));
  }
  for (Index d : a.rfa) {
    const auto map = KernelFeatureMap::sample(d, y.cols(), a.common.seed);
    auto est = kernel_z(xs, y, map, KernelVariant::rfa);
    if (!est.clamped.empty())
      std::cerr << "rfa D=" << d << ": " << est.clamped.size() << " nonpositive estimates floored\n";
    columns.emplace_back("rfa_D" + std::to_string(d), std::move(est));
  }

  OutputDir out(a.common.out);
  {
    const fs::path path = out.file("z.csv");
    auto f = open_out(path);
    std::vector<std::string> header{"row"};
    for (const auto& c : columns) header.push_back(c.first);
    f << row_csv(header);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      std::vector<std::string> cells{std::to_string(rows[k] + 1)};
      for (const auto& c : columns) cells.push_back(format_double(c.second.values[static_cast<Index>(k)]));
      f << row_csv(cells);
    }
    close_out(f, path);
  }
  if (reference) {
    for (const auto& [name, est] : columns) {
      if (name == "exact") continue;
      const fs::path path = out.file("cdf_" + name + ".csv");
      auto f = open_out(path);
      f << "error,fraction\n";
      for (const auto& pt : error_cdf(*reference, est))
        f << format_double(pt.error) << ',' << format_double(pt.fraction) << '\n';
      close_out(f, path);
      const Vector err = relative_errors(*reference, est);
      std::vector<double> sorted(err.data(), err.data() + err.size());
      std::sort(sorted.begin(), sorted.end());
      std::cerr << name << ": median relative error " << sorted[sorted.size() / 2] << '\n';
    }
  }
  write_manifest(out, sub);
  out.commit();
  return kSuccess;
}

// --- fit / fit-exact ------------------------------------------------------------

struct FitArgs {
  Common common;
  OptimizerConfig cfg;
  std::string operator_path;
  std::string chain;
  std::string walk;
  int window = 3;
  bool normalize = false;
  std::string p0_path;
  std::string labels_path;
  bool asymmetric = false;
  int checkpoint_every = 0;
  bool log_exact = false;
};

// Manifest lines: "factor <path>" in written order (leftmost first) and an
// optional "weights <w_1> ... <w_m>". Paths are relative to the manifest.
ProductChain read_chain_manifest(const fs::path& path, bool normalize) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open chain manifest " + path.string());
  std::vector<SparseMatrix> factors;
  std::vector<double> weights;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key) || key[0] == '#') continue;
    if (key == "factor") {
      std::string rel;
      if (!(ss >> rel)) throw IoError(path.string() + ":" + std::to_string(lineno) + ": factor needs a path");
      SparseMatrix f = read_matrix_market(path.parent_path() / rel);
      factors.push_back(normalize ? row_normalize(f) : std::move(f));
    } else if (key == "weights") {
      double w;
      while (ss >> w) weights.push_back(w);
    } else {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (factors.empty()) throw IoError("chain manifest " + path.string() + " lists no factors");
  return weights.empty() ? ProductChain(std::move(factors)) : ProductChain(std::move(factors), std::move(weights));
}

ProductChain load_operator(const FitArgs& a) {
  const int given = !a.operator_path.empty() + !a.chain.empty() + !a.walk.empty();
  if (given != 1) throw CLI::ValidationError("operator", "give exactly one of --operator, --chain, --walk");
  if (!a.walk.empty()) return walk_operator(read_matrix_market(a.walk), a.window);
  if (!a.chain.empty()) return read_chain_manifest(a.chain, a.normalize);
  SparseMatrix m = read_matrix_market(a.operator_path);
  return ProductChain({a.normalize ? row_normalize(m) : std::move(m)});
}

RegularizationWeights load_p0(const std::string& path, Index m) {
  if (path.empty()) return RegularizationWeights::uniform(m);
  const DenseMatrix v = read_dense_csv(path);
  if (v.cols() != 1 || v.rows() != m)
    throw DimensionError("p0 file must hold " + std::to_string(m) + " values, one per line");
  return RegularizationWeights(Vector(v.col(0)));
}

int cmd_fit(FitArgs a, bool exact, const CLI::App* sub) {
  apply_threads(a.common);
  a.cfg.seed = a.common.seed;
  a.cfg.sym = !a.asymmetric;
  a.cfg.validate();
  if (exact && a.asymmetric) throw CLI::ValidationError("fit-exact", "--asymmetric is only available for fit");

  const ProductChain p = load_operator(a);
  const RegularizationWeights p0 = load_p0(a.p0_path, p.cols());
  FitOptions opts;
  if (!a.labels_path.empty()) {
    LabelVector lv;
    lv.labels = read_labels(a.labels_path);
    lv.kappa = lv.labels.empty() ? 1 : *std::max_element(lv.labels.begin(), lv.labels.end()) + 1;
    opts.labels = std::move(lv);
  }
  p.check_row_stochastic();

  OutputDir out(a.common.out);
  std::ostringstream log;
  log << "epoch,eta,approx_loss,exact_loss\n";
  const bool want_exact = exact || a.log_exact;
  opts.on_epoch = [&](const EpochState& s) {
    double approx = 0.0, ex = 0.0;
    if (s.y) {
      approx = approx_loss_asymmetric(s.x, *s.y, p, p0, s.labels, s.weights);
      if (want_exact) ex = exact_loss_asymmetric(s.x, *s.y, p, p0);
    } else {
      approx = approx_loss(s.x, p, p0, estimate_mixture(s.x, s.labels, s.weights));
      if (want_exact) ex = exact_loss(s.x, p, p0);
    }
    log << s.epoch << ',' << format_double(s.eta) << ',' << format_double(approx) << ','
        << (want_exact ? format_double(ex) : std::string()) << '\n';
    if (a.checkpoint_every > 0 && s.epoch > 0 && s.epoch % a.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%04d", s.epoch);
      write_dense_binary(out.file(fs::path("checkpoints") / (std::string(name) + ".edr")), s.x);
      if (s.y) write_dense_binary(out.file(fs::path("checkpoints") / (std::string(name) + "_keys.edr")), *s.y);
    }
  };

  if (a.asymmetric) {
    const auto e = fit_asymmetric(p, p0, a.cfg, opts);
    write_dense_binary(out.file("embedding.edr"), e.x);
    write_dense_binary(out.file("keys.edr"), e.y);
  } else {
    const DenseMatrix x = exact ? fit_exact(p, p0, a.cfg, opts) : fit(p, p0, a.cfg, opts);
    write_dense_binary(out.file("embedding.edr"), x);
  }
  const fs::path log_path = out.file("train_log.csv");
  auto f = open_out(log_path);
  f << log.str();
  close_out(f, log_path);
  write_manifest(out, sub);
  out.commit();
  return kSuccess;
}

// --- dcsbm-bench ------------------------------------------------------------------

struct BenchArgs {
  Common common;
  OptimizerConfig cfg;
  DcsbmParams graph;
  std::vector<double> alphas;
  int repeats = 10;
  int window = 3;
  int restarts = 10;
  std::string theta = "unit";
  bool save_graphs = false;
};

ThetaRecipe parse_theta(const std::string& s) {
  if (s == "unit") return ThetaRecipe::unit;
  if (s == "powerlaw") return ThetaRecipe::powerlaw;
  throw CLI::ValidationError("--theta", "expected unit or powerlaw, got '" + s + "'");
}

int cmd_dcsbm_bench(BenchArgs a, const CLI::App* sub) {
  apply_threads(a.common);
  a.cfg.validate();
  a.graph.theta_recipe = parse_theta(a.theta);
  std::vector<std::uint64_t> seeds;
  for (int r = 0; r < a.repeats; ++r) seeds.push_back(a.common.seed + static_cast<std::uint64_t>(r));

  OutputDir out(a.common.out);
  std::ostringstream csv;
  csv << "alpha,seed,nmi,wall_time\n";
  for (double alpha : a.alphas) {
    for (auto seed : seeds) {
      DcsbmParams params = a.graph;
      params.alpha = alpha;
      params.seed = seed;
      const auto instance = dcsbm_sample(params);
      if (a.save_graphs) {
        std::ostringstream dir;
        dir << "graphs/alpha_" << format_double(alpha) << "_seed_" << seed;
        // Register the two files before writing them.
        out.file(fs::path(dir.str()) / "adjacency.mtx");
        out.file(fs::path(dir.str()) / "labels.txt");
        write_dcsbm_instance(out.root() / dir.str(), instance);
      }
      OptimizerConfig run_cfg = a.cfg;
      run_cfg.seed = seed;
      const auto res = community_pipeline(instance, a.window, run_cfg, a.restarts);
      csv << format_double(alpha) << ',' << seed << ',' << format_double(res.nmi) << ',' << res.seconds << '\n';
      std::cerr << "alpha " << alpha << " seed " << seed << " nmi " << res.nmi << '\n';
    }
  }
  const fs::path path = out.file("bench.csv");
  auto f = open_out(path);
  f << csv.str();
  close_out(f, path);
  write_manifest(out, sub);
  out.commit();
  return kSuccess;
}

// --- deviation --------------------------------------------------------------------

struct DeviationArgs {
  Common common;
  OptimizerConfig cfg;
  std::string operator_path;
  Index n = 500;
  double c = 10.0;
  int successes = 3;
  double p = 0.3;
  std::vector<int> kappas{1, 8};
};

int cmd_deviation(DeviationArgs a, const CLI::App* sub) {
  apply_threads(a.common);
  a.cfg.seed = a.common.seed;
  a.cfg.validate();
  const SparseMatrix adj = a.operator_path.empty()
                               ? negative_binomial_graph(a.n, a.c, a.successes, a.p, a.common.seed)
                               : read_matrix_market(a.operator_path);
  const ProductChain op({row_normalize(adj)});
  const auto p0 = RegularizationWeights::uniform(op.rows());

  std::vector<std::vector<double>> curves;
  for (int kappa : a.kappas) {
    OptimizerConfig cfg = a.cfg;
    cfg.kappa = kappa;
    curves.push_back(deviation_experiment(op, p0, cfg).ct);
    std::cerr << "kappa " << kappa << ": final C_t " << curves.back().back() << '\n';
  }

  OutputDir out(a.common.out);
  const fs::path path = out.file("deviation.csv");
  auto f = open_out(path);
  std::vector<std::string> header{"epoch"};
  for (int kappa : a.kappas) header.push_back("ct_k" + std::to_string(kappa));
  f << row_csv(header);
  for (std::size_t t = 0; t < curves.front().size(); ++t) {
    std::vector<std::string> cells{std::to_string(t)};
    for (const auto& c : curves) cells.push_back(format_double(c[t]));
    f << row_csv(cells);
  }
  close_out(f, path);
  write_manifest(out, sub);
  out.commit();
  return kSuccess;
}

// --- supra ------------------------------------------------------------------------

struct SupraArgs {
  Common common;
  std::string input;
  Index horizon = 0;
};

int cmd_supra(const SupraArgs& a, const CLI::App* sub) {
  apply_threads(a.common);
  const auto edges = read_temporal_csv(a.input);
  const SupraGraph g = supra_adjacency(edges, a.horizon);
  const bool acyclic = is_acyclic(g.adjacency);
  std::cout << "supra-adjacency: " << g.size() << " temporal nodes, " << g.adjacency.nonZeros()
            << " edges, acyclic: " << (acyclic ? "yes" : "no") << '\n';
  if (!acyclic) throw ValidationError("supra-adjacency contains a cycle");

  OutputDir out(a.common.out);
  write_matrix_market(out.file("supra.mtx"), g.adjacency);
  const fs::path path = out.file("temporal_nodes.csv");
  auto f = open_out(path);
  f << "index,node,time\n";
  for (Index k = 0; k < g.size(); ++k) {
    const auto& v = g.nodes[static_cast<std::size_t>(k)];
    f << k + 1 << ',' << v.node << ',' << v.time << '\n';
  }
  close_out(f, path);
  write_manifest(out, sub);
  out.commit();
  return kSuccess;
}

// --- concentration ------------------------------------------------------------------

struct ConcentrationArgs {
  Common common;
  Index dim = 20;
  std::vector<Index> m_grid{250, 1000, 4000};
  int repeats = 200;
};

Vector unit_normal(std::mt19937_64& rng, Index d) {
  std::normal_distribution<double> gauss;
  Vector v(d);
  for (Index k = 0; k < d; ++k) v[k] = gauss(rng);
  return v / v.norm();
}

int cmd_concentration(const ConcentrationArgs& a, const CLI::App* sub) {
  apply_threads(a.common);
  if (a.repeats < 2) throw ValidationError("--repeats must be at least 2");
  std::mt19937_64 qrng(a.common.seed ^ 0x9e3779b97f4a7c15ULL);
  const Vector query = unit_normal(qrng, a.dim);
  const Index d = a.dim;
  const auto rows = concentration_probe([d](std::mt19937_64& rng) { return unit_normal(rng, d); }, query,
                                        a.m_grid, a.repeats, a.common.seed);
  OutputDir out(a.common.out);
  const fs::path path = out.file("concentration.csv");
  auto f = open_out(path);
  f << "m,mean,std\n";
  for (const auto& r : rows) f << r.m << ',' << format_double(r.mean) << ',' << format_double(r.std) << '\n';
  close_out(f, path);
  write_manifest(out, sub);
  out.commit();
  return kSuccess;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_wrapping(std::string v, char open, char close) {
  if (v.size() >= 2 && v.front() == open && v.back() == close) v = v.substr(1, v.size() - 2);
  return v;
}

// Expands `--config FILE` after the subcommand into `--key=value` arguments
// for every key not already given on the command line, so flags win. The
// file holds `key = value` lines; `#` and `;` start comments, lists may be
// written as [a, b] or a,b. Resolved manifests written by a run read back.
std::vector<std::string> with_config_file(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::size_t sub = 1;
  while (sub < args.size() && args[sub].rfind('-', 0) == 0) ++sub;
  if (sub >= args.size()) return args;

  std::string config;
  std::vector<std::string> rest;
  for (std::size_t k = sub + 1; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) {
      config = args[++k];
    } else if (args[k].rfind("--config=", 0) == 0) {
      config = args[k].substr(9);
    } else {
      rest.push_back(args[k]);
    }
  }
  if (config.empty()) return args;

  auto given = [&](const std::string& key) {
    const std::string flag = "--" + key;
    return std::any_of(rest.begin(), rest.end(),
                       [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
  };
  std::ifstream in(config);
  if (!in) throw CLI::FileError::Missing(config);
  std::vector<std::string> injected;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';' || line[0] == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CLI::ConversionError("config line without '=': " + line);
    const std::string key = trim(line.substr(0, eq));
    std::string value = strip_wrapping(trim(line.substr(eq + 1)), '"', '"');
    value = strip_wrapping(value, '\'', '\'');
    value = strip_wrapping(value, '[', ']');
    value.erase(std::remove(value.begin(), value.end(), ' '), value.end());
    // Empty values are unset options in a written manifest.
    if (key.empty() || value.empty() || given(key)) continue;
    injected.push_back("--" + key + "=" + value);
  }
  std::vector<std::string> out(args.begin(), args.begin() + static_cast<std::ptrdiff_t>(sub) + 1);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

int run_parsed(CLI::App& app, int argc, const char* const* argv) {
  app.require_subcommand(1);

  EstimateArgs est;
  auto* s_est = app.add_subcommand("estimate-z", "softmax normalization constants by one or more methods");
  add_common(s_est, est.common);
  s_est->add_option("--embedding", est.embedding, "query embedding X (CSV or binary)")->required();
  s_est->add_option("--keys", est.keys, "key embedding Y; defaults to X");
  s_est->add_flag("--exact", est.exact, "exact constants, and error CDFs for the other methods");
  s_est->add_option("--mixture", est.mixture, "mixture estimate with this many classes (repeatable)")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  s_est->add_option("--performer", est.performer, "positive random features, D features (repeatable)")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  s_est->add_option("--rfa", est.rfa, "trigonometric random features, D features (repeatable)")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  s_est->add_option("--samples", est.samples, "rows sampled for evaluation (0 = all)")->capture_default_str();
  s_est->add_option("--rescale", est.rescale, "input rescaling")
      ->check(CLI::IsMember({"none", "average", "unit"}))
      ->capture_default_str();

  FitArgs fa;
  auto* s_fit = app.add_subcommand("fit", "train an embedding with the mixture estimate");
  auto* s_fx = app.add_subcommand("fit-exact", "train an embedding with exact constants (quadratic cost)");
  for (auto* s : {s_fit, s_fx}) {
    add_common(s, fa.common);
    add_optimizer_options(s, fa.cfg);
    s->add_option("--operator", fa.operator_path, "row-stochastic operator (MatrixMarket)");
    s->add_option("--chain", fa.chain, "chain manifest of MatrixMarket factors");
    s->add_option("--walk", fa.walk, "adjacency (MatrixMarket); uses the averaged random-walk operator");
    s->add_option("--window", fa.window, "walk length for --walk")->check(CLI::PositiveNumber)->capture_default_str();
    s->add_flag("--normalize", fa.normalize, "row-normalize operator factors before use");
    s->add_option("--p0", fa.p0_path, "regularization weights, one per line; default uniform");
    s->add_option("--labels", fa.labels_path, "fixed class labels, 1-based, one per line");
    s->add_option("--checkpoint-every", fa.checkpoint_every, "write the embedding every k epochs (0 = off)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    s->add_flag("--log-exact", fa.log_exact, "also log the exact loss each epoch (quadratic cost)");
  }
  s_fit->add_flag("--asymmetric", fa.asymmetric, "separate key embedding; the operator may be rectangular");

  BenchArgs ba;
  ba.cfg.dim = 32;
  ba.graph.n = 5000;
  ba.graph.q = 4;
  ba.graph.c = 10.0;
  auto* s_bench = app.add_subcommand("dcsbm-bench", "community detection on sampled DCSBM graphs");
  add_common(s_bench, ba.common);
  add_optimizer_options(s_bench, ba.cfg);
  s_bench->add_option("--n", ba.graph.n, "nodes")->check(CLI::PositiveNumber)->capture_default_str();
  s_bench->add_option("--q", ba.graph.q, "communities")->check(CLI::PositiveNumber)->capture_default_str();
  s_bench->add_option("--c", ba.graph.c, "expected average degree")->capture_default_str();
  s_bench->add_option("--alphas", ba.alphas, "alpha grid")->required()->delimiter(',');
  s_bench->add_option("--repeats", ba.repeats, "seeds per alpha, starting at --seed")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  s_bench->add_option("--theta", ba.theta, "degree recipe: unit or powerlaw")->capture_default_str();
  s_bench->add_option("--window", ba.window, "walk length")->check(CLI::PositiveNumber)->capture_default_str();
  s_bench->add_option("--restarts", ba.restarts, "k-means restarts")->check(CLI::PositiveNumber)->capture_default_str();
  s_bench->add_flag("--save-graphs", ba.save_graphs, "write each sampled graph under graphs/");

  DeviationArgs da;
  auto* s_dev = app.add_subcommand("deviation", "Gram deviation between mixture and exact training");
  add_common(s_dev, da.common);
  add_optimizer_options(s_dev, da.cfg);
  s_dev->add_option("--operator", da.operator_path, "adjacency (MatrixMarket); default samples a graph");
  s_dev->add_option("--n", da.n, "nodes of the sampled graph")->check(CLI::PositiveNumber)->capture_default_str();
  s_dev->add_option("--c", da.c, "degree scale of the sampled graph")->capture_default_str();
  s_dev->add_option("--nb-successes", da.successes, "negative binomial successes")->capture_default_str();
  s_dev->add_option("--nb-p", da.p, "negative binomial success probability")->capture_default_str();
  s_dev->add_option("--kappas", da.kappas, "mixture sizes to compare")->delimiter(',')->capture_default_str();

  SupraArgs sa;
  auto* s_supra = app.add_subcommand("supra", "supra-adjacency of a temporal edge list");
  add_common(s_supra, sa.common);
  s_supra->add_option("--input", sa.input, "CSV with columns i,j,t,w; node ids are kept as given")->required();
  s_supra->add_option("--horizon", sa.horizon, "last time step (0 = latest observed)")->capture_default_str();

  ConcentrationArgs ca;
  auto* s_conc = app.add_subcommand("concentration", "spread of Z/m against sample size");
  add_common(s_conc, ca.common);
  s_conc->add_option("--dim", ca.dim, "dimension")->check(CLI::PositiveNumber)->capture_default_str();
  s_conc->add_option("--m", ca.m_grid, "sample sizes")->delimiter(',')->capture_default_str();
  s_conc->add_option("--repeats", ca.repeats, "repeats per sample size")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (s_est->parsed()) return cmd_estimate_z(est, s_est);
  if (s_fit->parsed()) return cmd_fit(fa, false, s_fit);
  if (s_fx->parsed()) return cmd_fit(fa, true, s_fx);
  if (s_bench->parsed()) return cmd_dcsbm_bench(ba, s_bench);
  if (s_dev->parsed()) return cmd_deviation(da, s_dev);
  if (s_supra->parsed()) return cmd_supra(sa, s_supra);
  if (s_conc->parsed()) return cmd_concentration(ca, s_conc);
  return kUsage;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"EDRep embeddings and softmax normalization estimates", "edrep"};
  try {
    const auto args = with_config_file(argc, argv);
    std::vector<const char*> ptrs;
    for (const auto& s : args) ptrs.push_back(s.c_str());
    return run_parsed(app, static_cast<int>(ptrs.size()), ptrs.data());
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"edrep"};
  for (const auto& s : args) argv.push_back(s.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace edrep::cli
