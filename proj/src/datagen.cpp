#include "driftguard/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "driftguard/errors.hpp"
#include "driftguard/rng.hpp"

namespace driftguard {

Dataset gen_linear(const LinearGenConfig& cfg) {
  if (cfg.n < 1) throw InputError("gen_linear: n must be >= 1");
  if (!(cfg.noise_variance >= 0.0)) throw InputError("gen_linear: noise variance must be >= 0");
  // Separate streams keep x identical across modes for equal seeds.
  Rng x_rng = substream(cfg.seed, "linear-x");
  Rng noise_rng = substream(cfg.seed, "linear-noise");
  Rng pick_rng = substream(cfg.seed, "linear-mixture");
  const double half_width = std::sqrt(3.0);
  std::uniform_real_distribution<double> ux(-half_width, half_width);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::bernoulli_distribution pick(0.5);
  const double sd = std::sqrt(cfg.noise_variance);

  Dataset d{Matrix<double>(cfg.n, 1), Vector<double>(cfg.n)};
  for (Eigen::Index i = 0; i < cfg.n; ++i) {
    const double x = ux(x_rng);
    const double e = sd * noise(noise_rng);
    const bool second_line = pick(pick_rng) && cfg.mode == LinearMode::mixture && i >= cfg.shift_at;
    d.X(i, 0) = x;
    d.y(i) = second_line ? 12.0 * x + 3.0 + e : 16.0 * x + 5.0 + e;
  }
  return d;
}

OscParams OscParams::shifted() const {
  OscParams s = *this;
  s.m1 *= 1.1;
  s.m2 *= 1.2;
  s.k1 *= 1.3;
  return s;
}

void OscParams::validate() const {
  if (!(m1 > 0 && m2 > 0 && k1 > 0 && k2 > 0 && k3 > 0))
    throw InputError("oscillator masses and spring constants must be positive");
  if (!(c1 >= 0 && c2 >= 0)) throw InputError("oscillator damping must be non-negative");
}

bool OscState::finite() const {
  return std::isfinite(p1) && std::isfinite(v1) && std::isfinite(p2) && std::isfinite(v2) && std::isfinite(t);
}

double coupling(double a, double b) {
  const double d = a - b;
  return d / (1.0 + std::abs(d));
}

OscState osc_derivative(const OscParams& p, const OscState& s) {
  const double phi = coupling(s.p1, s.p2);
  return {s.v1, (-p.k1 * s.p1 - p.c1 * s.v1 + p.k3 * phi) / p.m1, s.v2,
          (-p.k2 * s.p2 - p.c2 * s.v2 - p.k3 * phi) / p.m2, 1.0};
}

namespace {

OscState axpy(const OscState& s, double h, const OscState& k) {
  return {s.p1 + h * k.p1, s.v1 + h * k.v1, s.p2 + h * k.p2, s.v2 + h * k.v2, s.t + h * k.t};
}

OscState rk4_step(const OscParams& p, const OscState& s, double h) {
  const OscState k1 = osc_derivative(p, s);
  const OscState k2 = osc_derivative(p, axpy(s, 0.5 * h, k1));
  const OscState k3 = osc_derivative(p, axpy(s, 0.5 * h, k2));
  const OscState k4 = osc_derivative(p, axpy(s, h, k3));
  auto comb = [h](double x, double a, double b, double c, double d) { return x + h / 6.0 * (a + 2.0 * b + 2.0 * c + d); };
  return {comb(s.p1, k1.p1, k2.p1, k3.p1, k4.p1), comb(s.v1, k1.v1, k2.v1, k3.v1, k4.v1),
          comb(s.p2, k1.p2, k2.p2, k3.p2, k4.p2), comb(s.v2, k1.v2, k2.v2, k3.v2, k4.v2), s.t + h};
}

}  // namespace

OscState rk4_interval(const OscParams& params, const OscState& state, double dt, double max_substep) {
  if (!(dt > 0.0) || !(max_substep > 0.0)) throw InputError("integrate: dt and substep must be positive");
  const auto substeps = static_cast<long>(std::ceil(dt / max_substep - 1e-9));
  const double h = dt / static_cast<double>(std::max(1L, substeps));
  OscState s = state;
  const double t0 = state.t;
  for (long k = 0; k < std::max(1L, substeps); ++k) s = rk4_step(params, s, h);
  s.t = t0 + dt;
  if (!s.finite()) throw DivergenceError("oscillator integration diverged at t = " + std::to_string(t0));
  return s;
}

std::vector<OscState> integrate(const OscParams& params, const OscState& state0, double dt, Eigen::Index steps,
                                double max_substep) {
  if (steps < 0) throw InputError("integrate: steps must be >= 0");
  if (!state0.finite()) throw InputError("integrate: non-finite initial state");
  std::vector<OscState> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  out.push_back(state0);
  for (Eigen::Index k = 0; k < steps; ++k) out.push_back(rk4_interval(params, out.back(), dt, max_substep));
  return out;
}

double energy(const OscParams& p, const OscState& s) {
  return 0.5 * (p.m1 * s.v1 * s.v1 + p.m2 * s.v2 * s.v2) + 0.5 * (p.k1 * s.p1 * s.p1 + p.k2 * s.p2 * s.p2) +
         p.k3 * coupling(s.p1, s.p2);
}

double conserved_energy(const OscParams& p, const OscState& s) {
  const double d = std::abs(s.p1 - s.p2);
  return 0.5 * (p.m1 * s.v1 * s.v1 + p.m2 * s.v2 * s.v2) + 0.5 * (p.k1 * s.p1 * s.p1 + p.k2 * s.p2 * s.p2) -
         p.k3 * (d - std::log1p(d));
}

double OscillatorGenConfig::dt() const {
  const Eigen::Index grid = grid_n > 0 ? grid_n : n;
  return horizon / static_cast<double>(grid - 1);
}

Dataset gen_oscillator(const OscillatorGenConfig& cfg) {
  if (cfg.n < 2) throw InputError("gen_oscillator: n must be >= 2");
  if (!(cfg.sigma >= 0.0)) throw InputError("gen_oscillator: sigma must be >= 0");
  if (!(cfg.horizon > 0.0)) throw InputError("gen_oscillator: horizon must be positive");
  if (cfg.skip < 0) throw InputError("gen_oscillator: skip must be >= 0");
  cfg.params.validate();
  const OscParams shifted = cfg.params.shifted();
  const double dt = cfg.dt();

  Rng noise_rng = substream(cfg.seed, "oscillator-noise");
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset d{Matrix<double>(cfg.n, 4), Vector<double>(cfg.n)};
  auto emit = [&](Eigen::Index i, const OscParams& active, const OscState& s) {
    const auto f = s.features();
    for (int j = 0; j < 4; ++j) d.X(i, j) = f[static_cast<std::size_t>(j)];
    d.y(i) = energy(active, s) + cfg.sigma * noise(noise_rng);
  };

  if (cfg.random_times) {
    const auto steps = static_cast<Eigen::Index>(std::ceil(cfg.horizon / dt - 1e-9));
    const auto base_path = integrate(cfg.params, cfg.state0, dt, steps);
    const auto shifted_path = cfg.shift_at >= 0 && cfg.shift_at < cfg.n ? integrate(shifted, cfg.state0, dt, steps)
                                                                        : std::vector<OscState>{};
    Rng time_rng = substream(cfg.seed, "oscillator-times");
    std::uniform_real_distribution<double> when(0.0, cfg.horizon);
    for (Eigen::Index i = 0; i < cfg.n; ++i) {
      const bool is_shifted = cfg.shift_at >= 0 && i >= cfg.shift_at;
      const OscParams& active = is_shifted ? shifted : cfg.params;
      const auto& path = is_shifted ? shifted_path : base_path;
      const double t = when(time_rng);
      const auto k = std::min<std::size_t>(static_cast<std::size_t>(t / dt), path.size() - 1);
      const double rest = t - path[k].t;
      emit(i, active, rest > 0.0 ? rk4_interval(active, path[k], rest) : path[k]);
    }
    return d;
  }

  OscState s = cfg.state0;
  for (Eigen::Index k = 0; k < cfg.skip; ++k) s = rk4_interval(cfg.params, s, dt);
  for (Eigen::Index i = 0; i < cfg.n; ++i) {
    const bool is_shifted = cfg.shift_at >= 0 && i >= cfg.shift_at;
    const OscParams& active = is_shifted ? shifted : cfg.params;
    // Row i is the state after i intervals; the interval leading into a
    // shifted row already runs under the shifted dynamics.
    if (i > 0) s = rk4_interval(active, s, dt);
    emit(i, active, s);
  }
  return d;
}

}  // namespace driftguard
