#pragma once

// Command-line front end: curve tables and their CSV form, experiment
// configs, the general-engine model file, SVG line charts, and the
// subcommand dispatcher shared by the fluxmet binary and its tests.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fluxmet/dynamics.hpp"
#include "fluxmet/errors.hpp"
#include "fluxmet/estimation.hpp"
#include "fluxmet/qec.hpp"

namespace fluxmet::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_input = 2,       // bad flags, config, model file, CSV or I/O
  exit_condition = 3,   // error-correction conditions violated
  exit_cross_check = 4, // closed form and numeric route disagree
};

// Malformed CSV or unreadable / unwritable files.
class InputError : public Error {
 public:
  using Error::Error;
};

class CrossCheckError : public Error {
 public:
  using Error::Error;
};

struct CurveTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  // Written as "# key: value" lines, in order.
  std::vector<std::pair<std::string, std::string>> metadata;

  // Throws InputError unless every row has one entry per column.
  void check_rectangular() const;
};

// 17 significant digits so every double round-trips.
std::string format_csv(const CurveTable& table);
// Throws InputError naming the line on any malformed input.
CurveTable parse_csv(const std::string& text);

std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// 64-bit FNV-1a, printed as 16 hex digits.
std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t value);

// Single-panel chart: one polyline per numeric column against the first.
// Throws InputError when the table has fewer than two columns or no rows.
std::string render_svg(const CurveTable& table);

struct QfiSweep {
  double B = 0.1;
  double gamma = 0.05;
  double t_max = 10;
  int points = 101;
  std::vector<double> detunings{0, 0.05, 0.1};
  double omega_hat = 0.5;  // Ω sweeps only

  // Throws ConfigError naming the field.
  void validate() const;
};

// Columns t, qfi_unitary, qfi_qec_<d>..., qfi_free. Throws CrossCheckError
// when an SLD evaluation at one of five sample times differs from the
// closed form by more than 1e-3 relative.
CurveTable qfi_theta_table(const QfiSweep& sweep);
// Columns t, qfi_unitary, qfi_qec_<d>...
CurveTable qfi_omega_table(const QfiSweep& sweep);

struct AdaptJob {
  estimation::AdaptiveConfig config;
  int repetitions = 1000;
  std::vector<estimation::Strategy> strategies{estimation::Strategy::qec_corrected,
                                               estimation::Strategy::unitary_controlled};
};

// Parses a JSON config; unknown keys and bad values raise ConfigError
// naming the field. The seed falls back to `default_seed` when absent.
AdaptJob parse_adapt_config(estimation::Task task, const std::string& json_text,
                            std::uint64_t default_seed);

// Columns round, estimate_mean, mse, crb_line.
CurveTable adapt_table(const estimation::AdaptiveConfig& config, int repetitions);

struct ModelFile {
  dynamics::LindbladModel model;
  qec::QecCode code;
};

// JSON with dim, hamiltonian, lindblads, d_hamiltonian, d_lindblads,
// dd_hamiltonian, dd_lindblads, code_c0, code_c1 (and an optional
// description); matrices are row-major nested arrays of [re, im].
ModelFile parse_model_file(const std::string& json_text);

// Parses "plus", "minus", "c0" or "c1" into a code-space probe.
qmat::CVector parse_probe(const std::string& name, const qec::QecCode& code);

// JSON report of the expansion and asymptotic QFI.
std::string general_qec_report(const ModelFile& file, const qmat::CVector& probe,
                               const std::string& probe_name, double t);

// Entry point: parses argv, runs one subcommand, returns an ExitCode.
// `env_seed` is the value of FLUXMET_SEED if set.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
        std::optional<std::string> env_seed);

}  // namespace fluxmet::cli
