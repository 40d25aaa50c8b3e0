#pragma once

// Text formats:
//   bwmat v1     "bwmat v1 <d>" followed by d rows of d numbers (17 significant digits).
//   key=value    one pair per line, '#' starts a comment, dotted keys for nesting.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "bw/barycenter.hpp"
#include "bw/models.hpp"

namespace bw {

void write_bwmat(std::ostream& os, const Matrix& m);
/// Reads one bwmat block. Throws ParseError on malformed input.
Matrix read_bwmat(std::istream& is);

void save_bwmat(const std::filesystem::path& path, const Matrix& m);
Matrix load_bwmat(const std::filesystem::path& path);
/// load_bwmat wrapped as a PsdMatrix; non-symmetric or indefinite content
/// surfaces as ParseError naming the file.
PsdMatrix load_psd(const std::filesystem::path& path);

/// Formats with round-trip precision (%.17g).
std::string format_double(double x);

/// Ordered key=value store.
class KeyValues {
 public:
  static KeyValues parse(std::istream& is);
  static KeyValues parse_file(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::vector<std::string> keys() const;

  void write(std::ostream& os, const std::string& prefix = "") const;
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

double parse_double(const std::string& text);
long long parse_int(const std::string& text);
/// Comma- or whitespace-separated list of numbers.
std::vector<double> parse_double_list(const std::string& text);

/// key=value header, then one "payload=<name>" line before each bwmat block
/// (xi, direction.0, direction.1, ...).
void write_deformation_spec(std::ostream& os, const DeformationSpec& spec);
DeformationSpec read_deformation_spec(std::istream& is);

/// key=value summary followed by "payload=barycenter" and the bwmat block.
void write_barycenter_result(std::ostream& os, const BarycenterResult& result);
struct BarycenterSummary {
  KeyValues fields;
  Matrix barycenter;
};
BarycenterSummary read_barycenter_result(std::istream& is);

}  // namespace bw
