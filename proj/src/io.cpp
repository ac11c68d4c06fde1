#include "voe/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "voe/errors.hpp"

namespace voe {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::map<std::string, std::size_t> header_index(const std::string& line) {
  std::map<std::string, std::size_t> idx;
  const auto fields = split_csv(line);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    std::string name = fields[i];
    if (i == 0 && name.size() >= 3 && name.compare(0, 3, "\xEF\xBB\xBF") == 0) name.erase(0, 3);
    idx.emplace(name, i);
  }
  return idx;
}

std::size_t require_column(const std::map<std::string, std::size_t>& idx, const std::string& name) {
  const auto it = idx.find(name);
  if (it == idx.end()) throw DataError("missing required column '" + name + "'");
  return it->second;
}

}  // namespace

LoadedStudies parse_studies(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::string header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = line;
      break;
    }
  }
  if (header.empty()) throw DataError("studies file is empty");
  const auto idx = header_index(header);
  const std::size_t c_id = require_column(idx, "study_id");
  const std::size_t c_tau = require_column(idx, "tau_hat");
  const std::size_t c_se = require_column(idx, "se");
  const std::size_t needed = std::max({c_id, c_tau, c_se}) + 1;

  std::vector<Study> valid;
  std::vector<RejectedRow> rejected;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() < needed) {
      rejected.push_back({line_no, "too few fields"});
      continue;
    }
    Study s;
    s.id = f[c_id];
    if (!parse_number(f[c_tau], s.tau_hat) || !std::isfinite(s.tau_hat)) {
      rejected.push_back({line_no, "tau_hat is not a finite number"});
      continue;
    }
    if (!parse_number(f[c_se], s.se) || !std::isfinite(s.se)) {
      rejected.push_back({line_no, "se is not a finite number"});
      continue;
    }
    if (!(s.se > 0.0)) {
      rejected.push_back({line_no, "se must be > 0"});
      continue;
    }
    valid.push_back(std::move(s));
  }
  if (valid.size() < 2) {
    throw DataError("studies file has " + std::to_string(valid.size()) + " valid rows (" +
                    std::to_string(rejected.size()) + " rejected); need at least 2");
  }
  return {StudySet(std::move(valid)), std::move(rejected)};
}

LoadedStudies load_studies(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open studies file '" + path.string() + "'");
  return parse_studies(in);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string format4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  std::string s(buf);
  if (s == "-0.0000") s = "0.0000";
  return s;
}

void write_studies(std::ostream& out, const StudySet& studies) {
  out << "study_id,tau_hat,se\n";
  for (const Study& s : studies.studies()) {
    const bool quote = s.id.find_first_of(",\"") != std::string::npos;
    if (quote) {
      out << '"';
      for (char c : s.id) out << (c == '"' ? "\"\"" : std::string(1, c));
      out << '"';
    } else {
      out << s.id;
    }
    out << ',' << format_double(s.tau_hat) << ',' << format_double(s.se) << '\n';
  }
}

void write_studies(const std::filesystem::path& path, const StudySet& studies) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write studies file '" + path.string() + "'");
  write_studies(out, studies);
}

std::vector<CostModel::Knot> load_cost_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open cost table '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("cost table is empty");
  const auto idx = header_index(line);
  const auto find = [&](const char* name) {
    const auto it = idx.find(name);
    if (it == idx.end()) throw ValidationError(std::string("cost table lacks column '") + name + "'");
    return it->second;
  };
  const std::size_t c_s = find("sigma_sq");
  const std::size_t c_c = find("cost");
  std::vector<CostModel::Knot> knots;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    CostModel::Knot k{};
    if (f.size() <= std::max(c_s, c_c) || !parse_number(f[c_s], k.sigma_sq) ||
        !parse_number(f[c_c], k.cost))
      throw ValidationError("cost table line " + std::to_string(line_no) + " is malformed");
    knots.push_back(k);
  }
  return knots;
}

}  // namespace voe
