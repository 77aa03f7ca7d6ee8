#ifndef GTD_CONFIG_HPP_
#define GTD_CONFIG_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace gtd {

/// Flat `key = value` configuration with dotted section keys.
///
///   # comment (also allowed after a value)
///   operator.kind = mask
///   data.shape    = 16 16 3
///
/// Keys are [A-Za-z0-9_.-]+, each may appear once. Values keep inner
/// whitespace; list values are whitespace separated. Malformed input throws
/// ConfigError naming the source and line.
class Config {
 public:
  static Config parse(std::istream& is, const std::string& source = "<config>");
  static Config parse_string(const std::string& text, const std::string& source = "<config>");
  static Config load(const std::string& path);

  bool has(const std::string& key) const;
  void set(const std::string& key, const std::string& value);

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::size_t> get_sizes(const std::string& key) const;
  std::vector<std::string> get_words(const std::string& key) const;

  const std::string& source() const noexcept { return source_; }
  std::vector<std::string> keys() const;
  /// Keys never read through a getter; useful for catching typos.
  std::vector<std::string> unused_keys() const;

 private:
  const std::string& raw(const std::string& key) const;

  std::string source_;
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace gtd

#endif  // GTD_CONFIG_HPP_
