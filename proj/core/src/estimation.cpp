#include "fluxmet/estimation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "fluxmet/errors.hpp"

namespace fluxmet::estimation {

namespace {

void require_time(double t) {
  if (!(t >= 0)) throw DomainError("evolution time must be >= 0");
}

MeasurementDistribution plus_minus(double minus) {
  minus = std::clamp(minus, 0.0, 1.0);
  return MeasurementDistribution({{"+", 1 - minus}, {"-", minus}});
}

// SU(2) element a·I - i(b·σ) with a² + |b|² = 1.
struct Spin {
  double a = 1;
  std::array<double, 3> b{0, 0, 0};
};

Spin rotation(const std::array<double, 3>& v) {
  const double n = std::hypot(v[0], v[1], v[2]);
  if (n == 0) return {};
  const double s = std::sin(n) / n;
  return {std::cos(n), {s * v[0], s * v[1], s * v[2]}};
}

// (a1 - i b1·σ)(a2 - i b2·σ)
Spin compose(const Spin& x, const Spin& y) {
  const auto& p = x.b;
  const auto& q = y.b;
  const double dot = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
  Spin out;
  out.a = x.a * y.a - dot;
  const std::array<double, 3> cross{p[1] * q[2] - p[2] * q[1], p[2] * q[0] - p[0] * q[2],
                                    p[0] * q[1] - p[1] * q[0]};
  for (int i = 0; i < 3; ++i) out.b[i] = x.a * q[i] + y.a * p[i] + cross[i];
  return out;
}

double log_likelihood_term(const RoundCounts& counts, double minus) {
  double value = 0;
  if (counts.plus > 0) value += counts.plus * std::log1p(-minus);
  if (counts.minus > 0) value += counts.minus * std::log(minus);
  return value;
}

double theta_minus(double theta, double theta_hat, double B, double gamma, double t) {
  return std::clamp(metrology::theta_coherence(B, gamma, t, theta - theta_hat).minus_probability(),
                    0.0, 1.0);
}

double omega_minus(double omega, double omega_hat, double B, double gamma, double t) {
  return std::clamp(metrology::omega_coherence(B, gamma, t, omega_hat - omega).minus_probability(),
                    0.0, 1.0);
}

double unitary_theta_minus(double theta, double theta_hat, double B, double t) {
  const double s = std::sin(B * t * 2 * std::abs(std::sin((theta - theta_hat) / 2)));
  return s * s;
}

struct PastRound {
  double x_hat;
  RoundCounts counts;
};

double log_likelihood(const OutcomeModel& model, const std::vector<PastRound>& rounds,
                      std::size_t first, double x) {
  double value = 0;
  for (std::size_t l = first; l < rounds.size(); ++l)
    value += log_likelihood_term(rounds[l].counts, model.minus_probability(x, rounds[l].x_hat));
  return value;
}

// Maximum of f on [lo, hi]; returns the better of the two final probes.
std::pair<double, double> golden_max(const auto& f, double lo, double hi) {
  const double r = (std::sqrt(5.0) - 1) / 2;
  double x1 = hi - r * (hi - lo);
  double x2 = lo + r * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int i = 0; i < 80 && hi - lo > 1e-13; ++i) {
    if (f1 >= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = f(x2);
    }
  }
  return f1 >= f2 ? std::pair{x1, f1} : std::pair{x2, f2};
}

EstimationRun run_with_model(const AdaptiveConfig& config, const OutcomeModel& model, Rng& rng) {
  const Grid& g = config.grid;
  const auto cells = static_cast<std::size_t>(std::ceil((g.hi - g.lo) / g.resolution - 1e-9));
  std::vector<double> xs(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i)
    xs[i] = std::min(g.lo + static_cast<double>(i) * g.resolution, g.hi);
  std::vector<double> table(xs.size(), 0.0);

  EstimationRun run;
  run.estimates.push_back(config.initial_guess);
  std::vector<PastRound> past;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  for (int l = 0; l < config.rounds; ++l) {
    const double x_hat = run.estimates.back();
    const double p_minus = model.minus_probability(config.true_value, x_hat);
    RoundCounts counts;
    for (int shot = 0; shot < config.m; ++shot) {
      if (uniform(rng) >= p_minus)
        ++counts.plus;
      else
        ++counts.minus;
    }
    run.outcome_history.push_back(counts);
    past.push_back({x_hat, counts});

    if (!config.accumulate) std::fill(table.begin(), table.end(), 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i)
      table[i] += log_likelihood_term(counts, model.minus_probability(xs[i], x_hat));

    std::size_t best = 0;
    for (std::size_t i = 1; i < xs.size(); ++i)
      if (table[i] > table[best]) best = i;

    const std::size_t first = config.accumulate ? 0 : past.size() - 1;
    const auto f = [&](double x) { return log_likelihood(model, past, first, x); };
    double estimate = xs[best];
    double value = table[best];
    if (std::isfinite(value)) {
      const double lo = xs[best == 0 ? 0 : best - 1];
      const double hi = xs[std::min(best + 1, xs.size() - 1)];
      const auto [x, fx] = golden_max(f, lo, hi);
      if (fx > value) {
        estimate = x;
        value = fx;
      }
    }
    run.estimates.push_back(estimate);
    run.log_likelihood_final = value;
  }
  return run;
}

}  // namespace

const char* to_string(Task task) { return task == Task::theta ? "theta" : "omega"; }

const char* to_string(Strategy strategy) {
  return strategy == Strategy::qec_corrected ? "qec" : "unitary";
}

Task parse_task(const std::string& name) {
  if (name == "theta") return Task::theta;
  if (name == "omega") return Task::omega;
  throw ConfigError("unknown task '" + name + "' (expected theta or omega)");
}

Strategy parse_strategy(const std::string& name) {
  if (name == "qec" || name == "qec_corrected") return Strategy::qec_corrected;
  if (name == "unitary" || name == "unitary_controlled") return Strategy::unitary_controlled;
  throw ConfigError("unknown strategy '" + name + "' (expected qec or unitary)");
}

MeasurementDistribution outcome_probability_theta(double theta, double theta_hat, double B,
                                                  double gamma, double t) {
  require_time(t);
  return plus_minus(theta_minus(theta, theta_hat, B, gamma, t));
}

MeasurementDistribution outcome_probability_omega(double omega, double omega_hat, double B,
                                                  double gamma, double t) {
  require_time(t);
  return plus_minus(omega_minus(omega, omega_hat, B, gamma, t));
}

MeasurementDistribution unitary_probability_theta(double theta, double theta_hat, double B,
                                                  double t) {
  require_time(t);
  return plus_minus(unitary_theta_minus(theta, theta_hat, B, t));
}

UnitaryOmegaTable::UnitaryOmegaTable(double B, double t, double max_detuning, double spacing)
    : max_detuning_(max_detuning), spacing_(spacing) {
  if (!(max_detuning > 0) || !(spacing > 0))
    throw DomainError("detuning range and spacing must be positive");
  require_time(t);
  const auto n = static_cast<std::size_t>(std::ceil(max_detuning / spacing)) + 1;
  plus_.resize(n);
  for (std::size_t i = 0; i < n; ++i) plus_[i] = evaluate(B, t, static_cast<double>(i) * spacing);
}

double UnitaryOmegaTable::plus_probability(double detuning) const {
  const double d = std::abs(detuning);
  if (d > max_detuning_ * (1 + 1e-12)) {
    std::ostringstream msg;
    msg << "detuning " << detuning << " outside the tabulated range " << max_detuning_;
    throw DomainError(msg.str());
  }
  const double pos = d / spacing_;
  const auto i = std::min(static_cast<std::size_t>(pos), plus_.size() - 2);
  const double w = pos - static_cast<double>(i);
  return (1 - w) * plus_[i] + w * plus_[i + 1];
}

double UnitaryOmegaTable::evaluate(double B, double t, double detuning) {
  require_time(t);
  if (t == 0 || detuning == 0) return 1;
  // Fourth-order Magnus steps of H(τ) = B h(τ)·σ,
  // h = (cos dτ - 1, sin dτ, 0).
  const auto steps = static_cast<int>(std::clamp(std::ceil(std::abs(detuning) * t * 40), 64.0, 4096.0));
  const double h = t / steps;
  const double c = std::sqrt(3.0) / 6;
  const auto field = [&](double tau) {
    return std::array<double, 3>{B * (std::cos(detuning * tau) - 1), B * std::sin(detuning * tau),
                                 0.0};
  };
  Spin u;
  for (int k = 0; k < steps; ++k) {
    const double t0 = k * h;
    const auto h1 = field(t0 + (0.5 - c) * h);
    const auto h2 = field(t0 + (0.5 + c) * h);
    // v = (h/2)(h1 + h2) + (√3/6)h²(h2 × h1)
    const std::array<double, 3> cross{h2[1] * h1[2] - h2[2] * h1[1],
                                      h2[2] * h1[0] - h2[0] * h1[2],
                                      h2[0] * h1[1] - h2[1] * h1[0]};
    std::array<double, 3> v{};
    for (int i = 0; i < 3; ++i) v[i] = h / 2 * (h1[i] + h2[i]) + c * h * h * cross[i];
    u = compose(rotation(v), u);
  }
  return u.a * u.a;
}

void AdaptiveConfig::validate() const {
  const auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError(field + ": " + why);
  };
  if (m < 1) fail("m", "must be >= 1");
  if (rounds < 1) fail("rounds", "must be >= 1");
  if (!(t > 0)) fail("t", "must be > 0");
  if (!std::isfinite(B)) fail("B", "must be finite");
  if (!(gamma >= 0)) fail("gamma", "must be >= 0");
  if (!(grid.lo < grid.hi)) fail("grid", "lo must be below hi");
  if (!(grid.resolution > 0)) fail("grid.resolution", "must be > 0");
  if (!(true_value >= grid.lo && true_value <= grid.hi)) fail("true_value", "outside the grid");
  if (!(initial_guess >= grid.lo && initial_guess <= grid.hi))
    fail("initial_guess", "outside the grid");
  if (std::abs(B) * t * (grid.hi - grid.lo) >= 2 * std::numbers::pi)
    fail("t", "B·t·(grid width) must stay below 2π to keep the likelihood unaliased");
}

Grid AdaptiveConfig::default_grid(Task task) {
  if (task == Task::theta) return {0, std::numbers::pi / 2, 1e-4};
  return {0, 1, 1e-4};
}

OutcomeModel::OutcomeModel(const AdaptiveConfig& config) : config_(config) {
  if (config.task == Task::omega && config.strategy == Strategy::unitary_controlled)
    table_ = std::make_shared<UnitaryOmegaTable>(config.B, config.t,
                                                 config.grid.hi - config.grid.lo);
}

double OutcomeModel::minus_probability(double x, double x_hat) const {
  const AdaptiveConfig& c = config_;
  if (c.task == Task::theta) {
    if (c.strategy == Strategy::qec_corrected) return theta_minus(x, x_hat, c.B, c.gamma, c.t);
    return unitary_theta_minus(x, x_hat, c.B, c.t);
  }
  if (c.strategy == Strategy::qec_corrected) return omega_minus(x, x_hat, c.B, c.gamma, c.t);
  return std::clamp(1 - table_->plus_probability(x_hat - x), 0.0, 1.0);
}

EstimationRun run_adaptive(const AdaptiveConfig& config, Rng& rng) {
  config.validate();
  const OutcomeModel model(config);
  EstimationRun run = run_with_model(config, model, rng);
  run.seed = config.seed;
  return run;
}

EstimationRun run_adaptive(const AdaptiveConfig& config) {
  Rng rng(config.seed);
  return run_adaptive(config, rng);
}

CampaignResult run_campaign(const AdaptiveConfig& config, int repetitions, unsigned threads) {
  if (repetitions < 1) throw ConfigError("repetitions: must be >= 1");
  config.validate();
  const OutcomeModel model(config);

  std::vector<std::vector<double>> estimates(static_cast<std::size_t>(repetitions));
  const auto work = [&](unsigned worker, unsigned stride) {
    for (auto r = static_cast<std::size_t>(worker); r < estimates.size(); r += stride) {
      Rng rng(config.seed + static_cast<std::uint64_t>(r));
      estimates[r] = run_with_model(config, model, rng).estimates;
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(repetitions));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w, threads);
  }

  const auto n_rounds = static_cast<std::size_t>(config.rounds) + 1;
  CampaignResult result;
  result.mse.assign(n_rounds, 0.0);
  result.estimate_mean.assign(n_rounds, 0.0);
  for (const auto& run : estimates) {
    for (std::size_t k = 0; k < n_rounds; ++k) {
      const double err = run[k] - config.true_value;
      result.mse[k] += err * err;
      result.estimate_mean[k] += run[k];
    }
    const double err = run.back() - config.true_value;
    result.final_sq_errors.push_back(err * err);
  }
  for (std::size_t k = 0; k < n_rounds; ++k) {
    result.mse[k] /= repetitions;
    result.estimate_mean[k] /= repetitions;
  }
  return result;
}

std::vector<double> mse_campaign(const AdaptiveConfig& config, int repetitions) {
  return run_campaign(config, repetitions).mse;
}

EstimationRun run_adaptive_omega(AdaptiveConfig config, Rng& rng) {
  config.task = Task::omega;
  return run_adaptive(config, rng);
}

std::vector<double> mse_campaign_omega(AdaptiveConfig config, int repetitions) {
  config.task = Task::omega;
  return mse_campaign(config, repetitions);
}

double max_qfi(const AdaptiveConfig& c) {
  const bool qec = c.strategy == Strategy::qec_corrected;
  if (c.task == Task::theta) {
    return qec ? metrology::qfi_theta_qec_closed(c.B, c.gamma, c.t, 0).value
               : metrology::qfi_theta_unitary_controlled(c.B, c.t, 0).value;
  }
  return qec ? metrology::qfi_omega_qec_closed(c.B, c.gamma, c.t, 0).value
             : metrology::qfi_omega_unitary_controlled(c.B, c.t, 0).value;
}

double crb_line(const AdaptiveConfig& config) {
  return 1 / (static_cast<double>(config.m) * config.rounds * max_qfi(config));
}

}  // namespace fluxmet::estimation
