#pragma once

// Shared text-manifest and raw-blob helpers for the scan and image file pairs.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace bms::detail {

// Ordered key = value lines. Keys keep insertion order for writing.
class Manifest {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, std::size_t value);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;  // FormatError when absent
  double get_double(const std::string& key) const;
  std::size_t get_count(const std::string& key) const;
  std::vector<std::string> keys() const;

  static Manifest parse(const std::string& text, const std::string& origin);
  static Manifest read(const std::filesystem::path& path);
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t> index_;
  std::string origin_;
};

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);
bool parse_double(const std::string& text, double& out);
bool parse_count(const std::string& text, std::size_t& out);

std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);

// Little-endian float64 blob I/O.
void write_blob(const std::filesystem::path& path, std::span<const double> values);
std::vector<double> read_blob(const std::filesystem::path& path, std::size_t expected_values);

void ensure_parent_dir(const std::filesystem::path& path);

}  // namespace bms::detail
