#include <cmath>
#include <set>

#include <json.hpp>

#include "fluxmet/cli.hpp"

namespace fluxmet::cli {

using nlohmann::json;
using qmat::CMatrix;
using qmat::complex;
using qmat::CVector;

namespace {

complex parse_entry(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(where + ": expected [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

CMatrix parse_matrix(const json& j, std::size_t dim, const std::string& where) {
  if (!j.is_array() || j.size() != dim)
    throw ConfigError(where + ": expected " + std::to_string(dim) + " rows");
  CMatrix m(dim);
  for (std::size_t r = 0; r < dim; ++r) {
    const std::string row = where + "[" + std::to_string(r) + "]";
    if (!j[r].is_array() || j[r].size() != dim)
      throw ConfigError(row + ": expected " + std::to_string(dim) + " entries");
    for (std::size_t c = 0; c < dim; ++c)
      m(r, c) = parse_entry(j[r][c], row + "[" + std::to_string(c) + "]");
  }
  return m;
}

CVector parse_vector(const json& j, std::size_t dim, const std::string& where) {
  if (!j.is_array() || j.size() != dim)
    throw ConfigError(where + ": expected " + std::to_string(dim) + " amplitudes");
  CVector v(dim);
  for (std::size_t i = 0; i < dim; ++i)
    v[i] = parse_entry(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

std::vector<CMatrix> parse_matrix_list(const json& j, std::size_t dim, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected a list of matrices");
  std::vector<CMatrix> out;
  for (std::size_t k = 0; k < j.size(); ++k)
    out.push_back(parse_matrix(j[k], dim, where + "[" + std::to_string(k) + "]"));
  return out;
}

const json& require(const json& doc, const char* key) {
  if (!doc.contains(key)) throw ConfigError(std::string(key) + ": missing");
  return doc.at(key);
}

}  // namespace

ModelFile parse_model_file(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("model file: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("model file: expected an object");
  static const std::set<std::string> known{
      "description", "dim",         "hamiltonian",    "lindblads", "d_hamiltonian",
      "d_lindblads", "dd_hamiltonian", "dd_lindblads", "code_c0",   "code_c1"};
  for (const auto& item : doc.items())
    if (!known.contains(item.key())) throw ConfigError(item.key() + ": unknown key");
  if (doc.contains("description") && !doc["description"].is_string())
    throw ConfigError("description: expected a string");

  const json& dim_j = require(doc, "dim");
  if (!dim_j.is_number_integer() || dim_j.get<long>() < 2 ||
      dim_j.get<long>() > static_cast<long>(qmat::kMaxDim))
    throw ConfigError("dim: expected an integer in [2, " + std::to_string(qmat::kMaxDim) + "]");
  const auto dim = dim_j.get<std::size_t>();

  const CMatrix h = parse_matrix(require(doc, "hamiltonian"), dim, "hamiltonian");
  const auto e = parse_matrix_list(require(doc, "lindblads"), dim, "lindblads");
  dynamics::ParameterDerivatives deriv;
  deriv.d_hamiltonian = parse_matrix(require(doc, "d_hamiltonian"), dim, "d_hamiltonian");
  deriv.d_lindblads = parse_matrix_list(require(doc, "d_lindblads"), dim, "d_lindblads");
  deriv.dd_hamiltonian = parse_matrix(require(doc, "dd_hamiltonian"), dim, "dd_hamiltonian");
  deriv.dd_lindblads = parse_matrix_list(require(doc, "dd_lindblads"), dim, "dd_lindblads");
  if (deriv.d_lindblads.size() != e.size())
    throw ConfigError("d_lindblads: expected " + std::to_string(e.size()) + " matrices");
  if (deriv.dd_lindblads.size() != e.size())
    throw ConfigError("dd_lindblads: expected " + std::to_string(e.size()) + " matrices");

  using Named = std::pair<const CMatrix*, const char*>;
  for (const auto& [m, name] : {Named{&h, "hamiltonian"},
                                Named{&deriv.d_hamiltonian, "d_hamiltonian"},
                                Named{&deriv.dd_hamiltonian, "dd_hamiltonian"}})
    if (qmat::max_abs_diff(*m, m->adjoint()) > 1e-10)
      throw ConfigError(std::string(name) + ": not Hermitian");

  const CVector c0 = parse_vector(require(doc, "code_c0"), dim, "code_c0");
  const CVector c1 = parse_vector(require(doc, "code_c1"), dim, "code_c1");
  if (std::abs(c0.norm() - 1) > 1e-8) throw ConfigError("code_c0: not normalized");
  if (std::abs(c1.norm() - 1) > 1e-8) throw ConfigError("code_c1: not normalized");
  if (std::abs(qmat::inner(c0, c1)) > 1e-8) throw ConfigError("code_c1: not orthogonal to code_c0");

  return {dynamics::LindbladModel::constant(h, e, deriv), qec::QecCode::fixed(c0, c1)};
}

CVector parse_probe(const std::string& name, const qec::QecCode& code) {
  const double r = 1 / std::sqrt(2.0);
  if (name == "plus") return r * (code.c0(0) + code.c1(0));
  if (name == "minus") return r * (code.c0(0) - code.c1(0));
  if (name == "c0") return code.c0(0);
  if (name == "c1") return code.c1(0);
  throw ConfigError("probe: expected plus, minus, c0 or c1, got '" + name + "'");
}

std::string general_qec_report(const ModelFile& file, const CVector& probe,
                               const std::string& probe_name, double t) {
  const auto report = qec::expansion_superoperators(file.model, file.code);
  const auto terms = qec::asymptotic_qfi_terms(report, probe, t);

  const auto entry = [](complex z) { return json::array({z.real(), z.imag()}); };
  const auto matrix = [&](const CMatrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.dim(); ++r) {
      json row = json::array();
      for (std::size_t c = 0; c < m.dim(); ++c) row.push_back(entry(m(r, c)));
      rows.push_back(row);
    }
    return rows;
  };

  // H̃ restricted to the code basis.
  const CVector c0 = file.code.c0(0);
  const CVector c1 = file.code.c1(0);
  const CMatrix h_code{{qmat::expectation(c0, report.l1_generator),
                        qmat::inner(c0, report.l1_generator * c1)},
                       {qmat::inner(c1, report.l1_generator * c0),
                        qmat::expectation(c1, report.l1_generator)}};
  const auto spectrum = qmat::hermitian_eig(h_code.hermitian_part()).values;

  json out;
  out["t"] = t;
  out["probe"] = probe_name;
  json alpha = json::array();
  for (const auto& a : report.alpha) alpha.push_back(entry(a));
  out["alpha"] = alpha;
  out["beta"] = matrix(report.beta);
  out["d"] = report.d;
  out["orthogonalized"] = report.orthogonalized;
  out["mixing"] = matrix(report.mixing);
  std::vector<bool> dropped(report.dropped.begin(), report.dropped.end());
  out["dropped"] = dropped;
  out["l0_max_abs"] = report.l0_generator.max_abs();
  out["h_tilde_code"] = matrix(h_code);
  out["h_tilde_spectrum"] = std::vector<double>(spectrum.begin(), spectrum.end());
  out["variance"] = terms.variance;
  out["l1_expectation"] = terms.l1_expectation;
  out["l2_expectation"] = terms.l2_expectation;
  out["qfi"] = std::max(terms.value, 0.0);
  return out.dump(2) + "\n";
}

}  // namespace fluxmet::cli
