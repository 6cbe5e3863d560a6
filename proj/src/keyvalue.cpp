#include <capl/errors.hpp>
#include <capl/keyvalue.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace capl
{

namespace
{

std::string trim(std::string const &s)
{
  auto const b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  auto const e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(std::string const &key, std::string const &text)
{
  std::size_t used = 0;
  double v = 0.0;
  try
  {
    v = std::stod(text, &used);
  }
  catch (std::exception const &)
  {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v))
    throw ParseError("key '" + key + "' expects a number, got '" + text + "'", 0);
  return v;
}

} // namespace

KeyValues KeyValues::parse(std::istream &in)
{
  KeyValues kv;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw))
  {
    ++line;
    std::string const text = trim(raw.substr(0, raw.find('#')));
    if (text.empty())
      continue;
    auto const eq = text.find('=');
    if (eq == std::string::npos)
      throw ParseError("expected 'key = value'", line);
    std::string const key = trim(text.substr(0, eq));
    if (key.empty())
      throw ParseError("empty key", line);
    kv._values[key] = trim(text.substr(eq + 1));
  }
  return kv;
}

KeyValues KeyValues::load(std::string const &path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open '" + path + "'");
  return parse(in);
}

std::string KeyValues::get_string(std::string const &key, std::string const &fallback) const
{
  auto const it = _values.find(key);
  return it == _values.end() ? fallback : it->second;
}

double KeyValues::get_double(std::string const &key, double fallback) const
{
  auto const it = _values.find(key);
  return it == _values.end() ? fallback : to_double(key, it->second);
}

int KeyValues::get_int(std::string const &key, int fallback) const
{
  auto const it = _values.find(key);
  if (it == _values.end())
    return fallback;
  double const v = to_double(key, it->second);
  if (v != std::floor(v))
    throw ParseError("key '" + key + "' expects an integer", 0);
  return static_cast<int>(v);
}

bool KeyValues::get_bool(std::string const &key, bool fallback) const
{
  auto const it = _values.find(key);
  if (it == _values.end())
    return fallback;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "1" || v == "true" || v == "yes" || v == "on")
    return true;
  if (v == "0" || v == "false" || v == "no" || v == "off")
    return false;
  throw ParseError("key '" + key + "' expects a boolean, got '" + it->second + "'", 0);
}

std::vector<double> KeyValues::get_doubles(std::string const &key) const
{
  std::vector<double> out;
  auto const it = _values.find(key);
  if (it == _values.end())
    return out;
  std::string text = it->second;
  std::replace(text.begin(), text.end(), ',', ' ');
  std::istringstream is(text);
  for (std::string tok; is >> tok;)
    out.push_back(to_double(key, tok));
  return out;
}

} // namespace capl
