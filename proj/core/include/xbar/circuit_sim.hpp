#pragma once

// Resistive-network model of a 1T1M crossbar.
//
// Topology: input voltage source i drives the west end of row wire i through
// r_in plus one wire segment; row i is a chain of nodes T(i,0..cols-1)
// joined by r_wire segments. Column j is a chain B(0..rows-1,j) joined by
// r_wire segments whose south end sinks to virtual ground through one more
// wire segment plus r_out. The cell at (i,j) joins T(i,j) to B(i,j) with
// conductance 1 / (1/g + r_transistor_on).

#include <cstddef>
#include <memory>
#include <span>

#include "xbar/matrix.hpp"

namespace xbar {

struct CrossbarConfig {
  std::size_t rows = 1;
  std::size_t cols = 1;
  double g_min = 1.0 / 300e3;  // R_off = 300 kOhm
  double g_max = 1.0 / 15e3;   // R_on = 15 kOhm
  double r_wire = 1.0;         // per segment
  double r_in = 1.0;
  double r_out = 1.0;
  double r_transistor_on = 0.0;
  double v_sense_max = 0.2;

  /// Throws ValidationError if a field is out of bounds.
  void validate() const;

  /// Default physical parameters with the given array size.
  static CrossbarConfig defaults(std::size_t rows, std::size_t cols);
  /// Zero wire, terminal and transistor resistance.
  static CrossbarConfig ideal(std::size_t rows, std::size_t cols);

  /// Series resistance between a source and T(i,0).
  double input_resistance() const { return r_in + r_wire; }
  /// Series resistance between B(rows-1,j) and ground.
  double output_resistance() const { return r_wire + r_out; }
  /// Effective cell conductance including the select transistor.
  double cell_conductance(double g) const { return 1.0 / (1.0 / g + r_transistor_on); }

  bool operator==(const CrossbarConfig&) const = default;
};

/// rows x cols device conductances in siemens.
struct ConductanceMatrix {
  Matrix g;

  ConductanceMatrix() = default;
  explicit ConductanceMatrix(Matrix values) : g(std::move(values)) {}
  ConductanceMatrix(std::size_t rows, std::size_t cols, double fill)
      : g(rows, cols, fill) {}

  std::size_t rows() const noexcept { return g.rows(); }
  std::size_t cols() const noexcept { return g.cols(); }
  double& operator()(std::size_t r, std::size_t c) { return g(r, c); }
  double operator()(std::size_t r, std::size_t c) const { return g(r, c); }

  /// Throws ContractViolation unless shape matches and all entries lie in
  /// [g_min, g_max].
  void check_against(const CrossbarConfig& config) const;

  bool operator==(const ConductanceMatrix&) const = default;
};

struct NodeSolution {
  Matrix v_top;        // rows x cols
  Matrix v_bot;        // rows x cols
  Vector i_out;        // per column, amperes
  double residual = 0; // relative residual of the solved system
};

struct SolverOptions {
  double residual_tolerance = 1e-10;
  int max_refinement_steps = 4;
};

/// Factorized nodal system for one conductance matrix.
///
/// Construction assembles and factorizes the network; each solve is then a
/// pair of triangular solves. Zero-ohm elements are handled by merging the
/// nodes they join. solve* members are const and safe to call concurrently.
class CrossbarSolver {
 public:
  CrossbarSolver(const CrossbarConfig& config, const ConductanceMatrix& g,
                 SolverOptions options = {});
  ~CrossbarSolver();
  CrossbarSolver(CrossbarSolver&&) noexcept;
  CrossbarSolver& operator=(CrossbarSolver&&) noexcept;

  /// Refactorizes for new conductances on the same topology.
  void update(const ConductanceMatrix& g);

  NodeSolution solve(std::span<const double> v_in) const;
  Vector output_currents(std::span<const double> v_in) const;
  /// One input vector per row of `v_in`; returns samples x cols currents.
  Matrix output_currents(const Matrix& v_in) const;

  const CrossbarConfig& config() const noexcept;
  std::size_t unknowns() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One-shot solve of the crossbar network.
NodeSolution simulate(const CrossbarConfig& config, const ConductanceMatrix& g,
                      std::span<const double> v_in, SolverOptions options = {});

/// I = V G with the row sum taken in ascending row order.
Vector ideal_vmm(std::span<const double> v_in, const ConductanceMatrix& g);

/// Dense modified-nodal-analysis reference solve (Gaussian elimination with
/// partial pivoting). Limited to rows*cols <= 64.
NodeSolution oracle_solve(const CrossbarConfig& config, const ConductanceMatrix& g,
                          std::span<const double> v_in);

namespace detail {
/// Solves a x = b in place by elimination with partial pivoting; `a` is
/// n x n. Throws SolverError on a (numerically) singular pivot.
Vector dense_solve(Matrix a, Vector b);
}  // namespace detail

}  // namespace xbar
