#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "driftguard/errors.hpp"
#include "driftguard/types.hpp"

namespace driftguard {

enum class LinearMode { single, mixture };

struct LinearGenConfig {
  Eigen::Index n = 2000;
  LinearMode mode = LinearMode::single;
  std::uint64_t seed = 1;
  // Rows before this index come from the first line regardless of mode;
  // 0 means the mode applies to every row.
  Eigen::Index shift_at = 0;
  double noise_variance = 16.0;
};

// x ~ U[-sqrt 3, sqrt 3]; line 1: y = 16x + 5 + e, line 2: y = 12x + 3 + e,
// e ~ N(0, noise_variance). Mixture rows pick either line with probability 0.5.
Dataset gen_linear(const LinearGenConfig& cfg);

struct OscParams {
  double m1 = 1.0, m2 = 2.0;
  double k1 = 1.0, k2 = 2.0, k3 = 1.5;
  double c1 = 0.1, c2 = 0.2;

  // m1' = 1.1 m1, m2' = 1.2 m2, k1' = 1.3 k1.
  OscParams shifted() const;
  void validate() const;
};

struct OscState {
  double p1 = 0.0, v1 = 0.0, p2 = 0.0, v2 = 0.0;
  double t = 0.0;

  std::array<double, 4> features() const { return {p1, v1, p2, v2}; }
  bool finite() const;
};

// Finite-extensibility coupling (a - b) / (1 + |a - b|), bounded in (-1, 1).
double coupling(double a, double b);

// d/dt (p1, v1, p2, v2); t of the result is 1.
OscState osc_derivative(const OscParams& params, const OscState& state);

// Classical RK4, `steps` sample intervals of length dt, each split into
// enough substeps that the integrator step is <= max_substep. Returns
// steps + 1 states including state0.
std::vector<OscState> integrate(const OscParams& params, const OscState& state0, double dt, Eigen::Index steps,
                                double max_substep = 1e-3);

// Advances one sample interval.
OscState rk4_interval(const OscParams& params, const OscState& state, double dt, double max_substep = 1e-3);

// Kinetic + spring potential + k3 * coupling. This is the response variable;
// it is not an invariant of osc_derivative's dynamics.
double energy(const OscParams& params, const OscState& state);

// Hamiltonian of osc_derivative's dynamics: the coupling force k3 phi(d),
// d = p1 - p2, derives from the potential -k3 (|d| - log(1 + |d|)), so
// dH/dt = -c1 v1^2 - c2 v2^2.
double conserved_energy(const OscParams& params, const OscState& state);

struct OscillatorGenConfig {
  OscParams params;
  OscState state0{1.0, 0.0, 0.0, 0.0, 0.0};
  Eigen::Index n = 3000;
  double horizon = 30.0;  // sampling interval is horizon / (n_grid - 1)
  // Grid size that defines the sampling interval; 0 means n.
  Eigen::Index grid_n = 0;
  double sigma = 0.03;
  std::uint64_t seed = 1;
  // Sample intervals advanced under baseline params before the first row.
  Eigen::Index skip = 0;
  // Rows from this index on use params.shifted(); < 0 disables the shift.
  Eigen::Index shift_at = -1;
  // Sample each row at an independent time t ~ U[0, horizon] on the
  // trajectory from state0 (shifted rows: the trajectory under the shifted
  // parameters) instead of walking the regular grid. skip is ignored.
  bool random_times = false;

  double dt() const;
};

// X = (p1, v1, p2, v2), y = energy + N(0, sigma^2). On the grid, shifted
// rows continue the same trajectory under the shifted parameters.
Dataset gen_oscillator(const OscillatorGenConfig& cfg);

}  // namespace driftguard
