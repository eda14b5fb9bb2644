#pragma once

// Adaptive maximum-likelihood estimation of θ and Ω: outcome models for the
// error-corrected and unitary-controlled strategies, the round-by-round
// estimator, and Monte-Carlo mean-squared-error campaigns.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fluxmet/dynamics.hpp"
#include "fluxmet/metrology.hpp"

namespace fluxmet::estimation {

using dynamics::Rng;
using metrology::MeasurementDistribution;

enum class Task { theta, omega };
enum class Strategy { qec_corrected, unitary_controlled };

const char* to_string(Task task);
const char* to_string(Strategy strategy);
// Throws ConfigError on an unknown name.
Task parse_task(const std::string& name);
Strategy parse_strategy(const std::string& name);

// p(+|θ,θ̂) = ½(1 + e^{-2γt sin²dθ} cos(2Bt sin dθ)), outcomes {+, -}.
MeasurementDistribution outcome_probability_theta(double theta, double theta_hat, double B,
                                                  double gamma, double t);

// p(+) = ½(1 + Re e^{-∫₀ᵗ g}) with the rotating-frame coherence.
MeasurementDistribution outcome_probability_omega(double omega, double omega_hat, double B,
                                                  double gamma, double t);

// Bell-basis outcome under the controlled unitary: cos²(Bt√(2 - 2cos dθ)).
MeasurementDistribution unitary_probability_theta(double theta, double theta_hat, double B,
                                                  double t);

// Bell-basis outcome |Tr U/2|² for the controlled rotating field. In the
// control frame the generator B(cos dτ σ1 + sin dτ σ2 - σ1) depends only on
// the detuning, so the probability is tabulated once over |dΩ|.
class UnitaryOmegaTable {
 public:
  // Throws DomainError unless max_detuning > 0 and spacing > 0.
  UnitaryOmegaTable(double B, double t, double max_detuning, double spacing = 1e-4);

  // Linear interpolation; throws DomainError beyond max_detuning.
  double plus_probability(double detuning) const;
  double max_detuning() const noexcept { return max_detuning_; }

  // Direct integration without the table.
  static double evaluate(double B, double t, double detuning);

 private:
  double max_detuning_;
  double spacing_;
  std::vector<double> plus_;
};

struct Grid {
  double lo = 0;
  double hi = 0;
  double resolution = 1e-4;
};

struct AdaptiveConfig {
  Task task = Task::theta;
  double true_value = 0;
  double initial_guess = 0;
  int m = 10;
  int rounds = 10;
  double t = 5;
  double B = 0.1;
  double gamma = 0.05;
  Grid grid;
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::qec_corrected;
  // Maximize the product over all rounds so far; false uses the latest
  // round only.
  bool accumulate = true;

  // Throws ConfigError naming the offending field. Also rejects
  // B·t·(hi - lo) >= 2π, where the likelihood aliases.
  void validate() const;

  // Prior [0, π/2] for θ and [0, 1] for Ω.
  static Grid default_grid(Task task);
};

struct RoundCounts {
  int plus = 0;
  int minus = 0;
};

struct EstimationRun {
  std::vector<double> estimates;  // x̂_0 … x̂_K
  std::vector<RoundCounts> outcome_history;
  double log_likelihood_final = 0;
  std::uint64_t seed = 0;
};

// p(- | x, x̂) for one configuration, built once per run or campaign.
class OutcomeModel {
 public:
  explicit OutcomeModel(const AdaptiveConfig& config);
  double minus_probability(double x, double x_hat) const;

 private:
  AdaptiveConfig config_;
  std::shared_ptr<const UnitaryOmegaTable> table_;
};

// Round l builds the code (or control) at x̂_l, draws m outcomes, and moves
// to the maximum of the cumulative likelihood found by a grid scan plus
// golden-section refinement inside the winning cell. Grid ties resolve to
// the lowest value.
EstimationRun run_adaptive(const AdaptiveConfig& config, Rng& rng);
// Seeds its generator with config.seed.
EstimationRun run_adaptive(const AdaptiveConfig& config);

struct CampaignResult {
  std::vector<double> mse;            // per round, length rounds + 1
  std::vector<double> estimate_mean;  // per round
  std::vector<double> final_sq_errors;  // per repetition
};

// Repetition r runs with seed config.seed + r (mod 2^64). Repetitions are spread
// over worker threads; the result does not depend on the thread count.
CampaignResult run_campaign(const AdaptiveConfig& config, int repetitions, unsigned threads = 0);
std::vector<double> mse_campaign(const AdaptiveConfig& config, int repetitions);

// Both tasks share the loop above; these fix config.task.
EstimationRun run_adaptive_omega(AdaptiveConfig config, Rng& rng);
std::vector<double> mse_campaign_omega(AdaptiveConfig config, int repetitions);

// J_Q at zero detuning for the configured strategy.
double max_qfi(const AdaptiveConfig& config);
// 1/(m·K·J_Q).
double crb_line(const AdaptiveConfig& config);

}  // namespace fluxmet::estimation
