#include "manifest.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include "bms/error.hpp"

namespace bms::detail {

namespace {

std::uint64_t byteswap64(std::uint64_t v) {
  v = ((v & 0x00000000FFFFFFFFull) << 32) | ((v & 0xFFFFFFFF00000000ull) >> 32);
  v = ((v & 0x0000FFFF0000FFFFull) << 16) | ((v & 0xFFFF0000FFFF0000ull) >> 16);
  v = ((v & 0x00FF00FF00FF00FFull) << 8) | ((v & 0xFF00FF00FF00FF00ull) >> 8);
  return v;
}

}  // namespace

void Manifest::set(const std::string& key, const std::string& value) {
  if (auto it = index_.find(key); it != index_.end()) {
    entries_[it->second].second = value;
    return;
  }
  index_[key] = entries_.size();
  entries_.emplace_back(key, value);
}

void Manifest::set(const std::string& key, double value) { set(key, format_double(value)); }

void Manifest::set(const std::string& key, std::size_t value) { set(key, std::to_string(value)); }

bool Manifest::has(const std::string& key) const { return index_.contains(key); }

const std::string& Manifest::get(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) {
    throw FormatError(origin_ + ": missing required key '" + key + "'");
  }
  return entries_[it->second].second;
}

double Manifest::get_double(const std::string& key) const {
  double v = 0.0;
  if (!parse_double(get(key), v)) {
    throw FormatError(origin_ + ": key '" + key + "' is not a number: '" + get(key) + "'");
  }
  return v;
}

std::size_t Manifest::get_count(const std::string& key) const {
  std::size_t v = 0;
  if (!parse_count(get(key), v)) {
    throw FormatError(origin_ + ": key '" + key + "' is not a non-negative integer: '" +
                      get(key) + "'");
  }
  return v;
}

std::vector<std::string> Manifest::keys() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

Manifest Manifest::parse(const std::string& text, const std::string& origin) {
  Manifest m;
  m.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw FormatError(origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key = trim(t.substr(0, eq));
    if (key.empty()) {
      throw FormatError(origin + ":" + std::to_string(line_no) + ": empty key");
    }
    if (m.has(key)) {
      throw FormatError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    m.set(key, trim(t.substr(eq + 1)));
  }
  return m;
}

Manifest Manifest::read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

std::string Manifest::str() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + " = " + v + "\n";
  return out;
}

void Manifest::write(const std::filesystem::path& path) const {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << str();
  if (!out) throw IoError("failed writing manifest " + path.string());
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw FormatError("cannot format number");
  return std::string(buf, ptr);
}

bool parse_double(const std::string& text, double& out) {
  const char* b = text.data();
  const char* e = b + text.size();
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc{} && ptr == e;
}

bool parse_count(const std::string& text, std::size_t& out) {
  const char* b = text.data();
  const char* e = b + text.size();
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc{} && ptr == e && !text.empty();
}

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

void write_blob(const std::filesystem::path& path, std::span<const double> values) {
  ensure_parent_dir(path);
  std::vector<std::uint64_t> words(values.size());
  std::memcpy(words.data(), values.data(), values.size_bytes());
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& w : words) w = byteswap64(w);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write blob " + path.string());
  out.write(reinterpret_cast<const char*>(words.data()),
            static_cast<std::streamsize>(words.size() * sizeof(std::uint64_t)));
  if (!out) throw IoError("failed writing blob " + path.string());
}

std::vector<double> read_blob(const std::filesystem::path& path, std::size_t expected_values) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) {
    throw FormatError("missing blob " + path.string() + ": expected " +
                      std::to_string(expected_values * 8) + " bytes");
  }
  const auto actual = std::filesystem::file_size(path, ec);
  if (ec) throw IoError("cannot stat blob " + path.string());
  const std::uintmax_t expected = static_cast<std::uintmax_t>(expected_values) * 8u;
  if (actual != expected) {
    throw FormatError("blob " + path.string() + " has wrong size: expected " +
                      std::to_string(expected) + " bytes, got " + std::to_string(actual));
  }
  std::vector<std::uint64_t> words(expected_values);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open blob " + path.string());
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(expected));
  if (!in) throw IoError("failed reading blob " + path.string());
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& w : words) w = byteswap64(w);
  }
  std::vector<double> values(expected_values);
  std::memcpy(values.data(), words.data(), expected);
  return values;
}

void ensure_parent_dir(const std::filesystem::path& path) {
  auto parent = path.parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(parent, ec);
  if (ec) throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
}

}  // namespace bms::detail
