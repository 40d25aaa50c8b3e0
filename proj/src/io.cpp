#include "bw/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace bw {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

// Next line that is not blank.
bool next_content_line(std::istream& is, std::string& line) {
  while (std::getline(is, line)) {
    if (!trim(line).empty()) return true;
  }
  return false;
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_double(const std::string& text) {
  std::string t = trim(text);
  if (!t.empty() && t.front() == '+') t.erase(0, 1);
  double value = 0.0;
  const char* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, value);
  if (ec != std::errc() || ptr != end || t.empty()) throw ParseError("not a number: '" + text + "'");
  if (!std::isfinite(value)) throw ParseError("non-finite number: '" + text + "'");
  return value;
}

long long parse_int(const std::string& text) {
  const std::string t = trim(text);
  long long value = 0;
  const char* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, value);
  if (ec != std::errc() || ptr != end || t.empty()) throw ParseError("not an integer: '" + text + "'");
  return value;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::string t = text;
  for (char& c : t) {
    if (c == ',') c = ' ';
  }
  std::vector<double> out;
  for (const auto& tok : split_ws(t)) out.push_back(parse_double(tok));
  return out;
}

// ---------------------------------------------------------------------------

void write_bwmat(std::ostream& os, const Matrix& m) {
  if (m.rows() != m.cols()) throw InputError("bwmat: matrix must be square");
  os << "bwmat v1 " << m.rows() << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ' ';
      os << format_double(m(i, j));
    }
    os << '\n';
  }
}

Matrix read_bwmat(std::istream& is) {
  std::string line;
  if (!next_content_line(is, line)) throw ParseError("bwmat: missing header");
  const auto header = split_ws(line);
  if (header.size() != 3 || header[0] != "bwmat" || header[1] != "v1") {
    throw ParseError("bwmat: bad header '" + trim(line) + "'");
  }
  const long long d = parse_int(header[2]);
  if (d < 1) throw ParseError("bwmat: dimension must be positive");
  Matrix m(d, d);
  for (long long i = 0; i < d; ++i) {
    if (!next_content_line(is, line)) {
      throw ParseError("bwmat: expected " + std::to_string(d) + " rows, got " + std::to_string(i));
    }
    const auto toks = split_ws(line);
    if (static_cast<long long>(toks.size()) != d) {
      throw ParseError("bwmat: row " + std::to_string(i) + " has " + std::to_string(toks.size()) +
                       " entries, expected " + std::to_string(d));
    }
    for (long long j = 0; j < d; ++j) m(i, j) = parse_double(toks[static_cast<std::size_t>(j)]);
  }
  return m;
}

void save_bwmat(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream os(path);
  if (!os) throw InputError("cannot open '" + path.string() + "' for writing");
  write_bwmat(os, m);
  if (!os) throw InputError("failed writing '" + path.string() + "'");
}

Matrix load_bwmat(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open '" + path.string() + "'");
  try {
    return read_bwmat(is);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

PsdMatrix load_psd(const std::filesystem::path& path) {
  const Matrix m = load_bwmat(path);
  try {
    return PsdMatrix(m);
  } catch (const InputError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

KeyValues KeyValues::parse(std::istream& is) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("line " + std::to_string(lineno) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("line " + std::to_string(lineno) + ": empty key");
    if (kv.has(key)) throw ParseError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    kv.values_[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues KeyValues::parse_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open '" + path.string() + "'");
  try {
    return parse(is);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

const std::string& KeyValues::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw InputError("missing key '" + key + "'");
  return it->second;
}

std::string KeyValues::get_or(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValues::get_double(const std::string& key, double fallback) const {
  return has(key) ? parse_double(get(key)) : fallback;
}

long long KeyValues::get_int(const std::string& key, long long fallback) const {
  return has(key) ? parse_int(get(key)) : fallback;
}

std::vector<std::string> KeyValues::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

void KeyValues::write(std::ostream& os, const std::string& prefix) const {
  for (const auto& [k, v] : values_) os << prefix << k << '=' << v << '\n';
}

// ---------------------------------------------------------------------------

namespace {

// key=value lines up to (and consuming) the first payload marker.
KeyValues read_header(std::istream& is, std::string& payload_name) {
  std::string line;
  std::ostringstream header;
  payload_name.clear();
  while (std::getline(is, line)) {
    const std::string t = trim(line);
    if (t.rfind("payload=", 0) == 0) {
      payload_name = t.substr(8);
      break;
    }
    header << line << '\n';
  }
  std::istringstream hs(header.str());
  return KeyValues::parse(hs);
}

std::string expect_payload(std::istream& is) {
  std::string line;
  if (!next_content_line(is, line)) throw ParseError("expected payload marker, got end of input");
  const std::string t = trim(line);
  if (t.rfind("payload=", 0) != 0) throw ParseError("expected payload marker, got '" + t + "'");
  return t.substr(8);
}

}  // namespace

void write_deformation_spec(std::ostream& os, const DeformationSpec& spec) {
  os << "kind=deformation_spec\n";
  os << "dim=" << spec.dim() << '\n';
  os << "directions=" << spec.directions.size() << '\n';
  os << "amplitudes=";
  for (std::size_t k = 0; k < spec.amplitudes.size(); ++k) {
    os << (k ? "," : "") << format_double(spec.amplitudes[k]);
  }
  os << '\n';
  os << "payload=xi\n";
  write_bwmat(os, spec.xi.matrix());
  for (std::size_t k = 0; k < spec.directions.size(); ++k) {
    os << "payload=direction." << k << '\n';
    write_bwmat(os, spec.directions[k].matrix());
  }
}

DeformationSpec read_deformation_spec(std::istream& is) {
  std::string payload;
  const KeyValues kv = read_header(is, payload);
  if (kv.get_or("kind", "") != "deformation_spec") throw ParseError("not a deformation spec");
  const long long count = kv.get_int("directions", 0);
  DeformationSpec spec;
  spec.amplitudes = parse_double_list(kv.get_or("amplitudes", ""));
  if (payload != "xi") throw ParseError("deformation spec: expected payload=xi first");
  try {
    spec.xi = PsdMatrix(read_bwmat(is));
    for (long long k = 0; k < count; ++k) {
      const std::string name = expect_payload(is);
      if (name != "direction." + std::to_string(k)) {
        throw ParseError("deformation spec: unexpected payload '" + name + "'");
      }
      spec.directions.push_back(SymMatrix(read_bwmat(is)));
    }
  } catch (const ParseError&) {
    throw;
  } catch (const InputError& e) {
    throw ParseError(std::string("deformation spec: ") + e.what());
  }
  if (spec.dim() != kv.get_int("dim", spec.dim())) throw ParseError("deformation spec: dim disagrees with payload");
  spec.validate();
  return spec;
}

void write_barycenter_result(std::ostream& os, const BarycenterResult& result) {
  os << "converged=" << (result.converged ? 1 : 0) << '\n';
  os << "iterations=" << result.iterations << '\n';
  os << "residual=" << format_double(result.residual) << '\n';
  os << "functional_value=" << format_double(result.functional_value) << '\n';
  os << "uniqueness_warning=" << (result.uniqueness_warning ? 1 : 0) << '\n';
  os << "payload=barycenter\n";
  write_bwmat(os, result.barycenter.matrix());
}

BarycenterSummary read_barycenter_result(std::istream& is) {
  std::string payload;
  BarycenterSummary out;
  out.fields = read_header(is, payload);
  if (payload != "barycenter") throw ParseError("barycenter result: missing payload=barycenter");
  out.barycenter = read_bwmat(is);
  return out;
}

}  // namespace bw
