#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fluxmet/cli.hpp"
#include "fluxmet/metrology.hpp"

#ifndef FLUXMET_VERSION
#define FLUXMET_VERSION "0.0.0"
#endif

namespace fluxmet::cli {

using nlohmann::json;
using qmat::CMatrix;

namespace {

std::string short_number(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%g", v);
  return buf.data();
}

std::uint64_t parse_seed(const std::string& text, const std::string& field) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError(field + ": expected an unsigned 64-bit integer, got '" + text + "'");
  return v;
}

std::vector<double> parse_list(const std::string& text, const std::string& field) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
      throw ConfigError(field + ": '" + cell + "' is not a number");
    out.push_back(v);
  }
  return out;
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

double number_field(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field + ": expected a number");
  return j.get<double>();
}

long integer_field(const json& j, const std::string& field) {
  if (!j.is_number_integer()) throw ConfigError(field + ": expected an integer");
  return j.get<long>();
}

void reject_unknown(const json& doc, const std::set<std::string>& known,
                    const std::string& prefix) {
  if (!doc.is_object()) throw ConfigError((prefix.empty() ? "config" : prefix) + ": expected an object");
  for (const auto& item : doc.items())
    if (!known.contains(item.key())) throw ConfigError(prefix + item.key() + ": unknown key");
}

std::vector<double> t_grid(const QfiSweep& s) {
  std::vector<double> ts;
  for (int i = 0; i < s.points; ++i)
    ts.push_back(i + 1 == s.points ? s.t_max : s.t_max * i / (s.points - 1));
  return ts;
}

void cross_check(double closed, double numeric, const std::string& what, double t) {
  if (std::abs(closed - numeric) > 1e-3 * std::abs(closed) + 1e-9) {
    std::ostringstream msg;
    msg << std::setprecision(10) << what << " at t = " << t << ": closed form " << closed
        << ", SLD " << numeric;
    throw CrossCheckError(msg.str());
  }
}

std::vector<double> sample_times(const QfiSweep& s) {
  std::vector<double> out;
  for (int k = 1; k <= 5; ++k) out.push_back(s.t_max * k / 5);
  return out;
}

CMatrix bell_rho() { return CMatrix::projector(dynamics::bell_state()); }

json sweep_json(const QfiSweep& s, const char* list_name, bool omega) {
  json j;
  j["B"] = s.B;
  j["gamma"] = s.gamma;
  j["t_max"] = s.t_max;
  j["points"] = s.points;
  j[list_name] = s.detunings;
  if (omega) j["omega_hat"] = s.omega_hat;
  return j;
}

void apply_sweep_config(QfiSweep& s, const json& doc, const char* list_name, bool omega) {
  std::set<std::string> known{"B", "gamma", "t_max", "points", list_name};
  if (omega) known.insert("omega_hat");
  reject_unknown(doc, known, "");
  if (doc.contains("B")) s.B = number_field(doc["B"], "B");
  if (doc.contains("gamma")) s.gamma = number_field(doc["gamma"], "gamma");
  if (doc.contains("t_max")) s.t_max = number_field(doc["t_max"], "t_max");
  if (doc.contains("points")) s.points = static_cast<int>(integer_field(doc["points"], "points"));
  if (doc.contains("omega_hat")) s.omega_hat = number_field(doc["omega_hat"], "omega_hat");
  if (doc.contains(list_name)) {
    const json& list = doc[list_name];
    if (!list.is_array()) throw ConfigError(std::string(list_name) + ": expected a list");
    s.detunings.clear();
    for (std::size_t i = 0; i < list.size(); ++i)
      s.detunings.push_back(
          number_field(list[i], std::string(list_name) + "[" + std::to_string(i) + "]"));
  }
}

std::vector<estimation::Strategy> parse_strategies(const std::string& name) {
  if (name == "both")
    return {estimation::Strategy::qec_corrected, estimation::Strategy::unitary_controlled};
  return {estimation::parse_strategy(name)};
}

json adapt_json(const estimation::AdaptiveConfig& c, int repetitions) {
  json j;
  j["task"] = estimation::to_string(c.task);
  j["strategy"] = estimation::to_string(c.strategy);
  j["true_value"] = c.true_value;
  j["initial_guess"] = c.initial_guess;
  j["m"] = c.m;
  j["rounds"] = c.rounds;
  j["t"] = c.t;
  j["B"] = c.B;
  j["gamma"] = c.gamma;
  j["grid"] = {{"lo", c.grid.lo}, {"hi", c.grid.hi}, {"resolution", c.grid.resolution}};
  j["seed"] = c.seed;
  j["accumulate"] = c.accumulate;
  j["repetitions"] = repetitions;
  return j;
}

void emit(const std::string& content, const std::string& out_path, std::ostream& out) {
  if (out_path.empty() || out_path == "-")
    out << content;
  else
    write_file_atomic(out_path, content);
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  const std::string ext = p.extension().string();
  p.replace_extension();
  return p.string() + "." + suffix + (ext.empty() ? ".csv" : ext);
}

}  // namespace

void QfiSweep::validate() const {
  if (!std::isfinite(B)) throw ConfigError("B: must be finite");
  if (!(gamma >= 0) || !std::isfinite(gamma)) throw ConfigError("gamma: must be >= 0");
  if (!(t_max > 0) || !std::isfinite(t_max)) throw ConfigError("t_max: must be > 0");
  if (points < 2) throw ConfigError("points: must be >= 2");
  if (!std::isfinite(omega_hat)) throw ConfigError("omega_hat: must be finite");
  for (double d : detunings)
    if (!std::isfinite(d)) throw ConfigError("detuning list: entries must be finite");
}

CurveTable qfi_theta_table(const QfiSweep& s) {
  s.validate();
  const double theta_hat = std::numbers::pi / 4;
  for (double t : sample_times(s)) {
    const double uni_closed = metrology::qfi_theta_unitary_controlled(s.B, t, 0).value;
    const auto controlled = [&](double theta) {
      const CMatrix h = s.B * dynamics::on_probe(dynamics::sigma_theta(theta) -
                                                 dynamics::sigma_theta(theta_hat));
      const CMatrix u = qmat::expm(std::complex<double>(0, -t) * h);
      return CMatrix(u * bell_rho() * u.adjoint());
    };
    cross_check(uni_closed, metrology::qfi_sld_family(controlled, theta_hat).value,
                "qfi_unitary", t);
    for (double d : s.detunings) {
      const auto family = [&](double theta) {
        return qec::corrected_state_theta_closed(s.B, s.gamma, theta, theta_hat, t);
      };
      cross_check(metrology::qfi_theta_qec_closed(s.B, s.gamma, t, d).value,
                  metrology::qfi_sld_family(family, theta_hat + d).value,
                  "qfi_qec_" + short_number(d), t);
    }
    const auto free = [&](double theta) {
      return dynamics::apply_probe_channel(dynamics::dephasing_kraus(s.B, s.gamma, t, theta),
                                           bell_rho());
    };
    cross_check(metrology::qfi_theta_free_closed(s.B, s.gamma, t).value,
                metrology::qfi_sld_family(free, theta_hat).value, "qfi_free", t);
  }

  CurveTable table;
  table.columns = {"t", "qfi_unitary"};
  for (double d : s.detunings) table.columns.push_back("qfi_qec_" + short_number(d));
  table.columns.push_back("qfi_free");
  for (double t : t_grid(s)) {
    std::vector<double> row{t, metrology::qfi_theta_unitary_controlled(s.B, t, 0).value};
    for (double d : s.detunings)
      row.push_back(metrology::qfi_theta_qec_closed(s.B, s.gamma, t, d).value);
    row.push_back(metrology::qfi_theta_free_closed(s.B, s.gamma, t).value);
    table.rows.push_back(std::move(row));
  }
  return table;
}

CurveTable qfi_omega_table(const QfiSweep& s) {
  s.validate();
  const double omega_hat = s.omega_hat;
  const CMatrix k = *qec::omega_code(omega_hat).frame_generator;
  for (double t : sample_times(s)) {
    const auto controlled = [&](double omega) {
      dynamics::LindbladModel model;
      model.dim = 4;
      model.hamiltonian = [&, omega](double tau) {
        return s.B * dynamics::on_probe(dynamics::sigma_omega(omega, tau) -
                                        dynamics::sigma_omega(omega_hat, tau)) -
               k;
      };
      return dynamics::lindblad_evolve(model, bell_rho(), t, 1e-3);
    };
    cross_check(metrology::qfi_omega_unitary_controlled(s.B, t, 0).value,
                metrology::qfi_sld_family(controlled, omega_hat).value, "qfi_unitary", t);
    for (double d : s.detunings) {
      const auto family = [&](double omega) {
        return qec::corrected_state_omega_closed(s.B, s.gamma, omega, omega_hat, t);
      };
      cross_check(metrology::qfi_omega_qec_closed(s.B, s.gamma, t, d).value,
                  metrology::qfi_sld_family(family, omega_hat + d).value,
                  "qfi_qec_" + short_number(d), t);
    }
  }

  CurveTable table;
  table.columns = {"t", "qfi_unitary"};
  for (double d : s.detunings) table.columns.push_back("qfi_qec_" + short_number(d));
  for (double t : t_grid(s)) {
    std::vector<double> row{t, metrology::qfi_omega_unitary_controlled(s.B, t, 0).value};
    for (double d : s.detunings)
      row.push_back(metrology::qfi_omega_qec_closed(s.B, s.gamma, t, d).value);
    table.rows.push_back(std::move(row));
  }
  return table;
}

AdaptJob parse_adapt_config(estimation::Task task, const std::string& json_text,
                            std::uint64_t default_seed) {
  const json doc = parse_json(json_text, "config");
  reject_unknown(doc,
                 {"true_value", "initial_guess", "m", "rounds", "t", "B", "gamma", "grid", "seed",
                  "strategy", "repetitions", "accumulate"},
                 "");
  AdaptJob job;
  auto& c = job.config;
  c.task = task;
  c.grid = estimation::AdaptiveConfig::default_grid(task);
  c.seed = default_seed;

  if (!doc.contains("true_value")) throw ConfigError("true_value: missing");
  if (!doc.contains("initial_guess")) throw ConfigError("initial_guess: missing");
  c.true_value = number_field(doc["true_value"], "true_value");
  c.initial_guess = number_field(doc["initial_guess"], "initial_guess");
  if (doc.contains("m")) c.m = static_cast<int>(integer_field(doc["m"], "m"));
  if (doc.contains("rounds")) c.rounds = static_cast<int>(integer_field(doc["rounds"], "rounds"));
  if (doc.contains("t")) c.t = number_field(doc["t"], "t");
  if (doc.contains("B")) c.B = number_field(doc["B"], "B");
  if (doc.contains("gamma")) c.gamma = number_field(doc["gamma"], "gamma");
  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    reject_unknown(g, {"lo", "hi", "resolution"}, "grid.");
    if (g.contains("lo")) c.grid.lo = number_field(g["lo"], "grid.lo");
    if (g.contains("hi")) c.grid.hi = number_field(g["hi"], "grid.hi");
    if (g.contains("resolution"))
      c.grid.resolution = number_field(g["resolution"], "grid.resolution");
  }
  if (doc.contains("seed")) {
    const json& s = doc["seed"];
    if (!s.is_number_unsigned()) throw ConfigError("seed: expected an unsigned integer");
    c.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("strategy")) {
    if (!doc["strategy"].is_string()) throw ConfigError("strategy: expected a string");
    try {
      job.strategies = parse_strategies(doc["strategy"].get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("strategy: ") + e.what());
    }
  }
  if (doc.contains("repetitions"))
    job.repetitions = static_cast<int>(integer_field(doc["repetitions"], "repetitions"));
  if (doc.contains("accumulate")) {
    if (!doc["accumulate"].is_boolean()) throw ConfigError("accumulate: expected true or false");
    c.accumulate = doc["accumulate"].get<bool>();
  }
  if (job.repetitions < 1) throw ConfigError("repetitions: must be >= 1");
  c.validate();
  return job;
}

CurveTable adapt_table(const estimation::AdaptiveConfig& config, int repetitions) {
  const auto result = estimation::run_campaign(config, repetitions);
  const double crb = estimation::crb_line(config);
  CurveTable table;
  table.columns = {"round", "estimate_mean", "mse", "crb_line"};
  for (std::size_t k = 0; k < result.mse.size(); ++k)
    table.rows.push_back(
        {static_cast<double>(k), result.estimate_mean[k], result.mse[k], crb});
  return table;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
        std::optional<std::string> env_seed) {
  CLI::App app{"Fluctuation-enhanced metrology simulator", "fluxmet"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(FLUXMET_VERSION));

  QfiSweep theta_sweep;
  QfiSweep omega_sweep;
  std::string seed_flag;
  std::string out_path;
  std::string config_path;
  std::string dtheta;
  std::string domega;
  std::string task_name;
  std::string strategy_flag;
  int reps_flag = 0;
  std::string model_path;
  std::string probe = "plus";
  double probe_t = 5;
  std::string csv_path;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--seed", seed_flag, "base seed (default: config, then FLUXMET_SEED, then 0)");
    sub->add_option("--out", out_path, "output path ('-' or absent: stdout)");
  };
  const auto add_sweep = [&](CLI::App* sub, QfiSweep& s) {
    sub->add_option("--B", s.B, "field strength")->capture_default_str();
    sub->add_option("--gamma", s.gamma, "fluctuation rate")->capture_default_str();
    sub->add_option("--t-max", s.t_max, "largest evolution time")->capture_default_str();
    sub->add_option("--points", s.points, "number of time points")->capture_default_str();
  };

  CLI::App* qfi_theta = app.add_subcommand("qfi-theta", "QFI curves for the field direction");
  add_common(qfi_theta);
  add_sweep(qfi_theta, theta_sweep);
  qfi_theta->add_option("--dtheta", dtheta, "comma-separated detunings (empty: none)");

  CLI::App* qfi_omega = app.add_subcommand("qfi-omega", "QFI curves for the rotation frequency");
  add_common(qfi_omega);
  add_sweep(qfi_omega, omega_sweep);
  qfi_omega->add_option("--domega", domega, "comma-separated detunings (empty: none)");

  CLI::App* adapt = app.add_subcommand("adapt", "adaptive estimation MSE campaign");
  add_common(adapt);
  adapt->add_option("task", task_name, "theta or omega")->required();
  adapt->add_option("--reps", reps_flag, "repetitions (overrides config)");
  adapt->add_option("--strategy", strategy_flag, "qec, unitary or both (overrides config)");

  CLI::App* general = app.add_subcommand("general-qec", "second-order engine on a model file");
  add_common(general);
  general->add_option("model", model_path, "model JSON file")->required();
  general->add_option("--probe", probe, "plus, minus, c0 or c1")->capture_default_str();
  general->add_option("--t", probe_t, "evolution time")->capture_default_str();

  CLI::App* plot = app.add_subcommand("plot", "SVG line chart of a CSV table");
  plot->add_option("csv", csv_path, "input CSV")->required();
  plot->add_option("--out", out_path, "output SVG (absent: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_input;
  }

  const auto metadata = [&](CurveTable& table, const std::string& command, const json& config,
                            std::uint64_t seed) {
    table.metadata = {{"command", command},
                      {"config_hash", "fnv1a64:" + hex64(fnv1a(config.dump()))},
                      {"seed", std::to_string(seed)},
                      {"version", FLUXMET_VERSION}};
  };

  try {
    std::uint64_t default_seed = 0;
    if (env_seed) default_seed = parse_seed(*env_seed, "FLUXMET_SEED");
    std::optional<std::uint64_t> seed_override;
    if (!seed_flag.empty()) seed_override = parse_seed(seed_flag, "--seed");
    const std::uint64_t seed = seed_override.value_or(default_seed);

    if (qfi_theta->parsed() || qfi_omega->parsed()) {
      const bool omega = qfi_omega->parsed();
      CLI::App* sub = omega ? qfi_omega : qfi_theta;
      QfiSweep s = omega ? omega_sweep : theta_sweep;
      const char* list_name = omega ? "domega" : "dtheta";
      if (!config_path.empty()) {
        QfiSweep from_file;
        apply_sweep_config(from_file, parse_json(read_file(config_path), "config"), list_name,
                           omega);
        // Flags given on the command line win over the file.
        if (sub->count("--B") == 0) s.B = from_file.B;
        if (sub->count("--gamma") == 0) s.gamma = from_file.gamma;
        if (sub->count("--t-max") == 0) s.t_max = from_file.t_max;
        if (sub->count("--points") == 0) s.points = from_file.points;
        s.detunings = from_file.detunings;
        s.omega_hat = from_file.omega_hat;
      }
      const std::string& list = omega ? domega : dtheta;
      if (sub->count(omega ? "--domega" : "--dtheta") > 0) s.detunings = parse_list(list, list_name);
      CurveTable table = omega ? qfi_omega_table(s) : qfi_theta_table(s);
      metadata(table, omega ? "qfi-omega" : "qfi-theta", sweep_json(s, list_name, omega), seed);
      emit(format_csv(table), out_path, out);
      return exit_ok;
    }

    if (adapt->parsed()) {
      const auto task = estimation::parse_task(task_name);
      if (config_path.empty()) throw ConfigError("--config: required for adapt");
      AdaptJob job = parse_adapt_config(task, read_file(config_path), default_seed);
      if (seed_override) job.config.seed = *seed_override;
      if (adapt->count("--reps") > 0) {
        if (reps_flag < 1) throw ConfigError("--reps: must be >= 1");
        job.repetitions = reps_flag;
      }
      if (!strategy_flag.empty()) job.strategies = parse_strategies(strategy_flag);
      if (job.strategies.size() > 1 && (out_path.empty() || out_path == "-"))
        throw ConfigError("--out: required when writing more than one strategy");
      for (const auto strategy : job.strategies) {
        estimation::AdaptiveConfig c = job.config;
        c.strategy = strategy;
        CurveTable table = adapt_table(c, job.repetitions);
        metadata(table, "adapt", adapt_json(c, job.repetitions), c.seed);
        table.metadata.insert(table.metadata.begin() + 1,
                              {{"task", estimation::to_string(c.task)},
                               {"strategy", estimation::to_string(c.strategy)},
                               {"repetitions", std::to_string(job.repetitions)}});
        const std::string path =
            job.strategies.size() > 1 ? with_suffix(out_path, estimation::to_string(strategy))
                                      : out_path;
        emit(format_csv(table), path, out);
      }
      return exit_ok;
    }

    if (general->parsed()) {
      const ModelFile file = parse_model_file(read_file(model_path));
      if (!(probe_t >= 0)) throw ConfigError("--t: must be >= 0");
      const auto psi = parse_probe(probe, file.code);
      try {
        emit(general_qec_report(file, psi, probe, probe_t), out_path, out);
      } catch (const CodeConditionError& e) {
        const auto c = qec::evaluate_qec_conditions(file.model, file.code);
        err << "error: " << e.what() << "\n";
        err << "term            residual\n";
        for (std::size_t k = 0; k < c.alpha_residuals.size(); ++k) {
          std::ostringstream name;
          name << "alpha[" << k << "]";
          err << std::left << std::setw(16) << name.str() << std::scientific
              << std::setprecision(3) << c.alpha_residuals[k] << "\n";
        }
        for (std::size_t k = 0; k < c.beta_residuals.size(); ++k)
          for (std::size_t j = 0; j < c.beta_residuals[k].size(); ++j) {
            std::ostringstream name;
            name << "beta[" << k << "][" << j << "]";
            err << std::left << std::setw(16) << name.str() << std::scientific
                << std::setprecision(3) << c.beta_residuals[k][j] << "\n";
          }
        return exit_condition;
      }
      return exit_ok;
    }

    if (plot->parsed()) {
      emit(render_svg(parse_csv(read_file(csv_path))), out_path, out);
      return exit_ok;
    }
  } catch (const CodeConditionError& e) {
    err << "error: " << e.what() << "\n";
    return exit_condition;
  } catch (const CrossCheckError& e) {
    err << "error: cross-check failed: " << e.what() << "\n";
    return exit_cross_check;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return exit_input;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return exit_input;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return exit_input;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << "\n";
    return exit_input;
  } catch (const Error& e) {
    err << "error: numeric failure: " << e.what() << "\n";
    return exit_cross_check;
  }
  return exit_input;
}

}  // namespace fluxmet::cli
