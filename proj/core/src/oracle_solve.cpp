// Dense modified nodal analysis of the crossbar. Kept deliberately separate
// from CrossbarSolver: zero-ohm elements become explicit branch-current
// unknowns instead of merged nodes, and the system is solved by textbook
// Gaussian elimination.

#include <cmath>
#include <string>

#include "xbar/circuit_sim.hpp"
#include "xbar/errors.hpp"

namespace xbar {

namespace detail {

Vector dense_solve(Matrix a, Vector b) {
  const std::size_t n = a.rows();
  require(a.cols() == n && b.size() == n, "dense_solve: shape mismatch");
  double scale = 0.0;
  for (double v : a.data()) scale = std::max(scale, std::abs(v));
  const double tiny = scale * 1e-300 + 1e-300;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t pivot = k;
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(a(r, k)) > std::abs(a(pivot, k))) pivot = r;
    if (!(std::abs(a(pivot, k)) > tiny)) throw SolverError("dense_solve: singular matrix", INFINITY);
    if (pivot != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(k, c), a(pivot, c));
      std::swap(b[k], b[pivot]);
    }
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = a(r, k) / a(k, k);
      if (f == 0.0) continue;
      for (std::size_t c = k; c < n; ++c) a(r, c) -= f * a(k, c);
      b[r] -= f * b[k];
    }
  }
  Vector x(n);
  for (std::size_t k = n; k-- > 0;) {
    double s = b[k];
    for (std::size_t c = k + 1; c < n; ++c) s -= a(k, c) * x[c];
    x[k] = s / a(k, k);
  }
  return x;
}

}  // namespace detail

NodeSolution oracle_solve(const CrossbarConfig& config, const ConductanceMatrix& g,
                          std::span<const double> v_in) {
  config.validate();
  require(config.rows * config.cols <= 64, "oracle_solve: rows*cols must be <= 64");
  g.check_against(config);
  require(v_in.size() == config.rows, "oracle_solve: input length mismatch");

  const std::size_t m = config.rows;
  const std::size_t n = config.cols;
  const std::size_t nodes = 2 * m * n;
  auto top = [&](std::size_t i, std::size_t j) { return i * n + j; };
  auto bot = [&](std::size_t i, std::size_t j) { return m * n + i * n + j; };

  // Count zero-ohm branches to size the MNA system.
  std::size_t branches = 0;
  if (config.r_wire == 0.0) branches += m * (n - 1) + n * (m - 1);
  if (config.input_resistance() == 0.0) branches += m;
  if (config.output_resistance() == 0.0) branches += n;
  const std::size_t size = nodes + branches;

  Matrix a(size, size);
  Vector rhs(size, 0.0);
  std::size_t next_branch = nodes;
  std::vector<std::size_t> output_branch(n, 0);

  auto conductance = [&](std::size_t p, std::size_t q, double c) {
    a(p, p) += c;
    a(q, q) += c;
    a(p, q) -= c;
    a(q, p) -= c;
  };
  // Ideal short p -> q; branch current leaves p.
  auto short_between = [&](std::size_t p, std::size_t q) {
    const std::size_t k = next_branch++;
    a(p, k) += 1.0;
    a(q, k) -= 1.0;
    a(k, p) += 1.0;
    a(k, q) -= 1.0;
  };
  // Ideal source of voltage v at node p; branch current leaves p.
  auto pin = [&](std::size_t p, double v) {
    const std::size_t k = next_branch++;
    a(p, k) += 1.0;
    a(k, p) += 1.0;
    rhs[k] = v;
    return k;
  };

  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j + 1 < n; ++j) {
      if (config.r_wire == 0.0)
        short_between(top(i, j), top(i, j + 1));
      else
        conductance(top(i, j), top(i, j + 1), 1.0 / config.r_wire);
    }
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i + 1 < m; ++i) {
      if (config.r_wire == 0.0)
        short_between(bot(i, j), bot(i + 1, j));
      else
        conductance(bot(i, j), bot(i + 1, j), 1.0 / config.r_wire);
    }
  for (std::size_t i = 0; i < m; ++i) {
    const double r = config.input_resistance();
    if (r == 0.0) {
      pin(top(i, 0), v_in[i]);
    } else {
      a(top(i, 0), top(i, 0)) += 1.0 / r;
      rhs[top(i, 0)] += v_in[i] / r;
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double r = config.output_resistance();
    if (r == 0.0)
      output_branch[j] = pin(bot(m - 1, j), 0.0);
    else
      a(bot(m - 1, j), bot(m - 1, j)) += 1.0 / r;
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      conductance(top(i, j), bot(i, j), 1.0 / (1.0 / g(i, j) + config.r_transistor_on));

  const Vector x = detail::dense_solve(a, rhs);

  NodeSolution out;
  out.v_top = Matrix(m, n);
  out.v_bot = Matrix(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      out.v_top(i, j) = x[top(i, j)];
      out.v_bot(i, j) = x[bot(i, j)];
    }
  out.i_out.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (config.output_resistance() == 0.0)
      out.i_out[j] = x[output_branch[j]];
    else
      out.i_out[j] = x[bot(m - 1, j)] / config.output_resistance();
  }

  double rnorm = 0.0;
  double bnorm = 0.0;
  for (std::size_t r = 0; r < size; ++r) {
    double s = rhs[r];
    for (std::size_t c = 0; c < size; ++c) s -= a(r, c) * x[c];
    rnorm += s * s;
    bnorm += rhs[r] * rhs[r];
  }
  out.residual = bnorm > 0.0 ? std::sqrt(rnorm / bnorm) : std::sqrt(rnorm);
  return out;
}

}  // namespace xbar
