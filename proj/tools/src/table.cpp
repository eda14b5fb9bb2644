#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "fluxmet/cli.hpp"

namespace fluxmet::cli {

namespace {

std::string format_double(double v) {
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

std::string fixed(double v) {
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.2f", v);
  return buf.data();
}

std::string tick_label(double v) {
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.3g", v);
  return buf.data();
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void CurveTable::check_rectangular() const {
  if (columns.empty()) throw InputError("table has no columns");
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].size() != columns.size())
      throw InputError("row " + std::to_string(i) + " has " + std::to_string(rows[i].size()) +
                       " values for " + std::to_string(columns.size()) + " columns");
}

std::string format_csv(const CurveTable& table) {
  table.check_rectangular();
  std::string out;
  for (const auto& [key, value] : table.metadata) out += "# " + key + ": " + value + "\n";
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c > 0) out += ',';
    out += table.columns[c];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out += ',';
      out += format_double(row[c]);
    }
    out += '\n';
  }
  return out;
}

CurveTable parse_csv(const std::string& text) {
  CurveTable table;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string where = "line " + std::to_string(number);
    if (trim(line).empty()) continue;
    if (line.front() == '#') {
      if (have_header) throw InputError(where + ": comment after the header");
      const std::string body = trim(line.substr(1));
      const auto colon = body.find(": ");
      if (colon == std::string::npos)
        table.metadata.emplace_back(body, "");
      else
        table.metadata.emplace_back(body.substr(0, colon), body.substr(colon + 2));
      continue;
    }
    const auto cells = split(line);
    if (!have_header) {
      for (const auto& c : cells)
        if (c.empty()) throw InputError(where + ": empty column name");
      table.columns = cells;
      have_header = true;
      continue;
    }
    if (cells.size() != table.columns.size())
      throw InputError(where + ": expected " + std::to_string(table.columns.size()) +
                       " values, found " + std::to_string(cells.size()));
    std::vector<double> row;
    for (const auto& c : cells) {
      double v = 0;
      const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc() || ptr != c.data() + c.size() || c.empty())
        throw InputError(where + ": '" + c + "' is not a number");
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw InputError("CSV has no header line");
  return table;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out << content;
    out.flush();
    if (!out) throw InputError("write failed for " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw InputError("cannot replace " + path.string());
  }
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(value));
  return buf.data();
}

std::string render_svg(const CurveTable& table) {
  table.check_rectangular();
  if (table.columns.size() < 2) throw InputError("plot needs at least two columns");
  if (table.rows.empty()) throw InputError("plot needs at least one data row");

  constexpr double width = 720;
  constexpr double height = 440;
  constexpr double left = 70;
  constexpr double right = 180;
  constexpr double top = 20;
  constexpr double bottom = 50;
  constexpr std::array<const char*, 8> palette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                               "#9467bd", "#8c564b", "#e377c2", "#17becf"};

  double x_lo = INFINITY, x_hi = -INFINITY, y_lo = INFINITY, y_hi = -INFINITY;
  for (const auto& row : table.rows) {
    if (!std::isfinite(row[0])) continue;
    x_lo = std::min(x_lo, row[0]);
    x_hi = std::max(x_hi, row[0]);
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (!std::isfinite(row[c])) continue;
      y_lo = std::min(y_lo, row[c]);
      y_hi = std::max(y_hi, row[c]);
    }
  }
  if (!(x_lo <= x_hi) || !(y_lo <= y_hi)) throw InputError("plot has no finite data");
  if (x_hi == x_lo) {
    x_lo -= 0.5;
    x_hi += 0.5;
  }
  if (y_hi == y_lo) {
    y_lo -= 0.5;
    y_hi += 0.5;
  }
  const double pw = width - left - right;
  const double ph = height - top - bottom;
  const auto px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * pw; };
  const auto py = [&](double y) { return top + (y_hi - y) / (y_hi - y_lo) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" "
      << "font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x_lo + (x_hi - x_lo) * i / 5;
    const double yv = y_lo + (y_hi - y_lo) * i / 5;
    svg << "<line x1=\"" << fixed(px(xv)) << "\" y1=\"" << fixed(top + ph) << "\" x2=\""
        << fixed(px(xv)) << "\" y2=\"" << fixed(top + ph + 5) << "\" stroke=\"black\"/>"
        << "<text x=\"" << fixed(px(xv)) << "\" y=\"" << fixed(top + ph + 18)
        << "\" text-anchor=\"middle\">" << tick_label(xv) << "</text>\n";
    svg << "<line x1=\"" << fixed(left - 5) << "\" y1=\"" << fixed(py(yv)) << "\" x2=\""
        << fixed(left) << "\" y2=\"" << fixed(py(yv)) << "\" stroke=\"black\"/>"
        << "<text x=\"" << fixed(left - 8) << "\" y=\"" << fixed(py(yv) + 4)
        << "\" text-anchor=\"end\">" << tick_label(yv) << "</text>\n";
  }
  svg << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"" << fixed(height - 10)
      << "\" text-anchor=\"middle\">" << xml_escape(table.columns[0]) << "</text>\n";

  for (std::size_t c = 1; c < table.columns.size(); ++c) {
    const char* color = palette[(c - 1) % palette.size()];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (const auto& row : table.rows) {
      if (!std::isfinite(row[0]) || !std::isfinite(row[c])) continue;
      if (!first) svg << ' ';
      svg << fixed(px(row[0])) << ',' << fixed(py(row[c]));
      first = false;
    }
    svg << "\"/>\n";
    const double ly = top + 10 + 18 * static_cast<double>(c - 1);
    const double lx = left + pw + 12;
    svg << "<line x1=\"" << fixed(lx) << "\" y1=\"" << fixed(ly) << "\" x2=\"" << fixed(lx + 20)
        << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>"
        << "<text x=\"" << fixed(lx + 26) << "\" y=\"" << fixed(ly + 4) << "\">"
        << xml_escape(table.columns[c]) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace fluxmet::cli
