#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace capl
{

/// `key = value` text with `#` comments. Later keys override earlier ones.
class KeyValues
{
public:
  static KeyValues parse(std::istream &in);
  static KeyValues load(std::string const &path);

  void set(std::string const &key, std::string const &value) { _values[key] = value; }
  bool has(std::string const &key) const { return _values.count(key) != 0; }

  std::string get_string(std::string const &key, std::string const &fallback) const;
  double get_double(std::string const &key, double fallback) const;
  int get_int(std::string const &key, int fallback) const;
  bool get_bool(std::string const &key, bool fallback) const;
  std::vector<double> get_doubles(std::string const &key) const;

  std::map<std::string, std::string> const &values() const { return _values; }

private:
  std::map<std::string, std::string> _values;
};

} // namespace capl
