#include "xbar/circuit_sim.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "xbar/errors.hpp"

namespace xbar {

void CrossbarConfig::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("CrossbarConfig: " + what); };
  if (rows == 0 || cols == 0) fail("rows and cols must be positive");
  if (!(g_min > 0.0) || !(g_max > g_min) || !std::isfinite(g_max))
    fail("require 0 < g_min < g_max");
  for (double r : {r_wire, r_in, r_out, r_transistor_on})
    if (!(r >= 0.0) || !std::isfinite(r)) fail("resistances must be finite and >= 0");
  if (!(v_sense_max > 0.0) || !std::isfinite(v_sense_max)) fail("v_sense_max must be > 0");
}

CrossbarConfig CrossbarConfig::defaults(std::size_t rows, std::size_t cols) {
  CrossbarConfig c;
  c.rows = rows;
  c.cols = cols;
  return c;
}

CrossbarConfig CrossbarConfig::ideal(std::size_t rows, std::size_t cols) {
  CrossbarConfig c = defaults(rows, cols);
  c.r_wire = c.r_in = c.r_out = c.r_transistor_on = 0.0;
  return c;
}

void ConductanceMatrix::check_against(const CrossbarConfig& config) const {
  require(rows() == config.rows && cols() == config.cols,
          "conductance matrix is " + std::to_string(rows()) + "x" + std::to_string(cols()) +
              ", crossbar is " + std::to_string(config.rows) + "x" +
              std::to_string(config.cols));
  for (double v : g.data()) {
    require(std::isfinite(v) && v >= config.g_min && v <= config.g_max,
            "conductance " + std::to_string(v) + " outside [g_min, g_max]");
  }
}

namespace {

constexpr int kFree = -1;
constexpr int kGround = -2;

struct Edge {
  std::size_t a;
  std::size_t b;
  double resistance;  // 0 means an ideal short
};

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  // Keeps the smaller id as root so numbering is order-independent.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

double norm2(const Eigen::VectorXd& v) { return v.norm(); }

}  // namespace

struct CrossbarSolver::Impl {
  using SparseMatrix = Eigen::SparseMatrix<double>;
  using Factor = Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

  CrossbarConfig config;
  SolverOptions options;
  Matrix cell_g;  // effective cell conductance including transistor

  std::size_t mn = 0;
  // Per network node (T then B): unknown index, or kFree when fixed.
  std::vector<int> unknown_of;
  // Per network node: source row index, kGround, or kFree when not fixed.
  std::vector<int> fixed_of;
  std::size_t n_unknowns = 0;

  // Conductive couplings from an unknown to a fixed source (rhs terms).
  struct SourceCoupling {
    int unknown;
    int source;
    double conductance;
    std::size_t cell;  // cell index for device couplings, or npos
  };
  std::vector<SourceCoupling> source_couplings;

  SparseMatrix system;
  Factor factor;
  bool analyzed = false;

  std::size_t top(std::size_t i, std::size_t j) const { return i * config.cols + j; }
  std::size_t bot(std::size_t i, std::size_t j) const { return mn + i * config.cols + j; }

  void build_topology() {
    const std::size_t m = config.rows;
    const std::size_t n = config.cols;
    mn = m * n;
    const std::size_t source0 = 2 * mn;
    const std::size_t ground = source0 + m;
    const std::size_t total = ground + 1;

    DisjointSet sets(total);
    if (config.r_wire == 0.0) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j + 1 < n; ++j) sets.unite(top(i, j), top(i, j + 1));
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i + 1 < m; ++i) sets.unite(bot(i, j), bot(i + 1, j));
    }
    if (config.input_resistance() == 0.0)
      for (std::size_t i = 0; i < m; ++i) sets.unite(source0 + i, top(i, 0));
    if (config.output_resistance() == 0.0)
      for (std::size_t j = 0; j < n; ++j) sets.unite(ground, bot(m - 1, j));

    // Which terminal (if any) each root is tied to.
    std::vector<int> root_fixed(total, kFree);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t r = sets.find(source0 + i);
      if (root_fixed[r] != kFree) throw SolverError("short circuit between terminals", 0.0);
      root_fixed[r] = static_cast<int>(i);
    }
    {
      const std::size_t r = sets.find(ground);
      if (root_fixed[r] != kFree) throw SolverError("short circuit between source and ground", 0.0);
      root_fixed[r] = kGround;
    }

    unknown_of.assign(2 * mn, kFree);
    fixed_of.assign(2 * mn, kFree);
    std::vector<int> root_unknown(total, kFree);
    n_unknowns = 0;
    for (std::size_t node = 0; node < 2 * mn; ++node) {
      const std::size_t r = sets.find(node);
      if (root_fixed[r] != kFree) {
        fixed_of[node] = root_fixed[r];
        continue;
      }
      if (root_unknown[r] == kFree) root_unknown[r] = static_cast<int>(n_unknowns++);
      unknown_of[node] = root_unknown[r];
    }
  }

  void assemble() {
    const std::size_t m = config.rows;
    const std::size_t n = config.cols;
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(4 * (3 * mn));
    source_couplings.clear();
    constexpr std::size_t npos = static_cast<std::size_t>(-1);

    auto stamp = [&](int ua, int fa, int ub, int fb, double c, std::size_t cell) {
      if (ua != kFree && ub != kFree) {
        if (ua == ub) return;
        triplets.emplace_back(ua, ua, c);
        triplets.emplace_back(ub, ub, c);
        triplets.emplace_back(ua, ub, -c);
        triplets.emplace_back(ub, ua, -c);
      } else if (ua != kFree) {
        triplets.emplace_back(ua, ua, c);
        if (fb >= 0) source_couplings.push_back({ua, fb, c, cell});
      } else if (ub != kFree) {
        triplets.emplace_back(ub, ub, c);
        if (fa >= 0) source_couplings.push_back({ub, fa, c, cell});
      }
    };
    auto stamp_nodes = [&](std::size_t a, std::size_t b, double c, std::size_t cell) {
      stamp(unknown_of[a], fixed_of[a], unknown_of[b], fixed_of[b], c, cell);
    };

    if (config.r_wire > 0.0) {
      const double gw = 1.0 / config.r_wire;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j + 1 < n; ++j) stamp_nodes(top(i, j), top(i, j + 1), gw, npos);
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i + 1 < m; ++i) stamp_nodes(bot(i, j), bot(i + 1, j), gw, npos);
    }
    if (config.input_resistance() > 0.0) {
      const double gin = 1.0 / config.input_resistance();
      for (std::size_t i = 0; i < m; ++i)
        stamp(unknown_of[top(i, 0)], fixed_of[top(i, 0)], kFree, static_cast<int>(i), gin, npos);
    }
    if (config.output_resistance() > 0.0) {
      const double gout = 1.0 / config.output_resistance();
      for (std::size_t j = 0; j < n; ++j)
        stamp(unknown_of[bot(m - 1, j)], fixed_of[bot(m - 1, j)], kFree, kGround, gout, npos);
    }
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        stamp_nodes(top(i, j), bot(i, j), cell_g(i, j), i * n + j);

    system.resize(static_cast<Eigen::Index>(n_unknowns), static_cast<Eigen::Index>(n_unknowns));
    system.setFromTriplets(triplets.begin(), triplets.end());
    system.makeCompressed();
  }

  void factorize() {
    if (n_unknowns == 0) return;
    if (!analyzed) {
      factor.analyzePattern(system);
      analyzed = true;
    }
    factor.factorize(system);
    if (factor.info() != Eigen::Success)
      throw SolverError("nodal system is singular or not positive definite", INFINITY);
  }

  void load_conductances(const ConductanceMatrix& g) {
    cell_g = Matrix(config.rows, config.cols);
    for (std::size_t i = 0; i < config.rows; ++i)
      for (std::size_t j = 0; j < config.cols; ++j) {
        const double gij = g(i, j);
        if (!(gij > 0.0) || !std::isfinite(gij))
          throw SolverError("cell conductance must be positive and finite", INFINITY);
        cell_g(i, j) = config.cell_conductance(gij);
      }
  }

  // rhs for one input vector
  void fill_rhs(std::span<const double> v_in, Eigen::Ref<Eigen::VectorXd> b) const {
    b.setZero();
    for (const auto& c : source_couplings) b[c.unknown] += c.conductance * v_in[c.source];
  }

  void solve_in_place(const Eigen::VectorXd& b, Eigen::VectorXd& x, double& residual) const {
    x = factor.solve(b);
    const double bnorm = norm2(b);
    Eigen::VectorXd r = b - system * x;
    residual = bnorm > 0.0 ? norm2(r) / bnorm : norm2(r);
    for (int step = 0; step < options.max_refinement_steps &&
                       residual > options.residual_tolerance;
         ++step) {
      x += factor.solve(r);
      r = b - system * x;
      residual = bnorm > 0.0 ? norm2(r) / bnorm : norm2(r);
    }
    if (!(residual <= options.residual_tolerance))
      throw SolverError("crossbar solve did not reach residual tolerance (achieved " +
                            std::to_string(residual) + ")",
                        residual);
  }

  double node_voltage(std::size_t node, const Eigen::VectorXd& x,
                      std::span<const double> v_in) const {
    const int u = unknown_of[node];
    if (u != kFree) return x[u];
    const int f = fixed_of[node];
    return f >= 0 ? v_in[static_cast<std::size_t>(f)] : 0.0;
  }

  double column_current(std::size_t j, const Eigen::VectorXd& x,
                        std::span<const double> v_in) const {
    const std::size_t m = config.rows;
    if (config.output_resistance() > 0.0)
      return node_voltage(bot(m - 1, j), x, v_in) / config.output_resistance();
    // Column tied to ground: sum the cell branch currents.
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      sum += cell_g(i, j) * (node_voltage(top(i, j), x, v_in) - node_voltage(bot(i, j), x, v_in));
    return sum;
  }

  void check_input(std::span<const double> v_in) const {
    require(v_in.size() == config.rows, "input vector length " + std::to_string(v_in.size()) +
                                            " does not match crossbar rows " +
                                            std::to_string(config.rows));
    for (double v : v_in) require(std::isfinite(v), "input voltage must be finite");
  }
};

CrossbarSolver::CrossbarSolver(const CrossbarConfig& config, const ConductanceMatrix& g,
                               SolverOptions options)
    : impl_(std::make_unique<Impl>()) {
  config.validate();
  require(g.rows() == config.rows && g.cols() == config.cols,
          "conductance matrix shape does not match crossbar config");
  impl_->config = config;
  impl_->options = options;
  impl_->build_topology();
  impl_->load_conductances(g);
  impl_->assemble();
  impl_->factorize();
}

CrossbarSolver::~CrossbarSolver() = default;
CrossbarSolver::CrossbarSolver(CrossbarSolver&&) noexcept = default;
CrossbarSolver& CrossbarSolver::operator=(CrossbarSolver&&) noexcept = default;

void CrossbarSolver::update(const ConductanceMatrix& g) {
  require(g.rows() == impl_->config.rows && g.cols() == impl_->config.cols,
          "conductance matrix shape does not match crossbar config");
  impl_->load_conductances(g);
  impl_->assemble();
  impl_->factorize();
}

const CrossbarConfig& CrossbarSolver::config() const noexcept { return impl_->config; }
std::size_t CrossbarSolver::unknowns() const noexcept { return impl_->n_unknowns; }

NodeSolution CrossbarSolver::solve(std::span<const double> v_in) const {
  const Impl& s = *impl_;
  s.check_input(v_in);
  const std::size_t m = s.config.rows;
  const std::size_t n = s.config.cols;

  Eigen::VectorXd x(static_cast<Eigen::Index>(s.n_unknowns));
  NodeSolution out;
  if (s.n_unknowns > 0) {
    Eigen::VectorXd b(static_cast<Eigen::Index>(s.n_unknowns));
    s.fill_rhs(v_in, b);
    s.solve_in_place(b, x, out.residual);
  }
  out.v_top = Matrix(m, n);
  out.v_bot = Matrix(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      out.v_top(i, j) = s.node_voltage(s.top(i, j), x, v_in);
      out.v_bot(i, j) = s.node_voltage(s.bot(i, j), x, v_in);
    }
  out.i_out.resize(n);
  for (std::size_t j = 0; j < n; ++j) out.i_out[j] = s.column_current(j, x, v_in);
  return out;
}

Vector CrossbarSolver::output_currents(std::span<const double> v_in) const {
  const Impl& s = *impl_;
  s.check_input(v_in);
  Eigen::VectorXd x(static_cast<Eigen::Index>(s.n_unknowns));
  if (s.n_unknowns > 0) {
    Eigen::VectorXd b(static_cast<Eigen::Index>(s.n_unknowns));
    s.fill_rhs(v_in, b);
    double residual = 0.0;
    s.solve_in_place(b, x, residual);
  }
  Vector out(s.config.cols);
  for (std::size_t j = 0; j < s.config.cols; ++j) out[j] = s.column_current(j, x, v_in);
  return out;
}

Matrix CrossbarSolver::output_currents(const Matrix& v_in) const {
  const Impl& s = *impl_;
  require(v_in.cols() == s.config.rows, "batch input width does not match crossbar rows");
  Matrix out(v_in.rows(), s.config.cols);
  for (std::size_t k = 0; k < v_in.rows(); ++k) {
    const Vector row = output_currents(v_in.row(k));
    std::copy(row.begin(), row.end(), out.row(k).begin());
  }
  return out;
}

NodeSolution simulate(const CrossbarConfig& config, const ConductanceMatrix& g,
                      std::span<const double> v_in, SolverOptions options) {
  config.validate();
  g.check_against(config);
  require(v_in.size() == config.rows, "input vector length does not match crossbar rows");
  for (double v : v_in)
    require(v >= 0.0 && v <= config.v_sense_max,
            "input voltage " + std::to_string(v) + " outside [0, v_sense_max]");
  return CrossbarSolver(config, g, options).solve(v_in);
}

Vector ideal_vmm(std::span<const double> v_in, const ConductanceMatrix& g) {
  require(v_in.size() == g.rows(), "ideal_vmm: input length does not match matrix rows");
  Vector out(g.cols(), 0.0);
  for (std::size_t i = 0; i < g.rows(); ++i) {
    const double v = v_in[i];
    const auto row = g.g.row(i);
    for (std::size_t j = 0; j < g.cols(); ++j) out[j] += v * row[j];
  }
  return out;
}

}  // namespace xbar
