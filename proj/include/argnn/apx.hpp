#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>

#include "argnn/af.hpp"

namespace argnn {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == '(' || c == ')') return false;
  return true;
}

// Matches `head(body).` with arbitrary whitespace around tokens.
inline bool match_fact(std::string_view line, std::string_view head, std::string_view& body) {
  if (!line.starts_with(head)) return false;
  std::string_view rest = trim(line.substr(head.size()));
  if (rest.empty() || rest.front() != '(') return false;
  rest.remove_prefix(1);
  rest = trim(rest);
  if (rest.empty() || rest.back() != '.') return false;
  rest.remove_suffix(1);
  rest = trim(rest);
  if (rest.empty() || rest.back() != ')') return false;
  rest.remove_suffix(1);
  body = trim(rest);
  return true;
}

}  // namespace detail

/// Parses the APX text format: `arg(NAME).` and `att(NAME,NAME).` facts,
/// one per line. Blank lines and `%` comments are ignored; arguments must be
/// declared before they are attacked.
inline AF parse_apx(std::istream& in) {
  std::vector<std::string> names;
  std::unordered_map<std::string, ArgIndex> index;
  std::vector<Attack> attacks;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = detail::trim(raw);
    if (auto pct = line.find('%'); pct != std::string_view::npos) line = detail::trim(line.substr(0, pct));
    if (line.empty()) continue;
    std::string_view body;
    if (detail::match_fact(line, "arg", body)) {
      if (!detail::valid_name(body)) throw ParseError("bad argument name", lineno);
      std::string name(body);
      if (index.contains(name)) continue;
      index.emplace(name, static_cast<ArgIndex>(names.size()));
      names.push_back(std::move(name));
    } else if (detail::match_fact(line, "att", body)) {
      const auto comma = body.find(',');
      if (comma == std::string_view::npos) throw ParseError("attack needs two arguments", lineno);
      const std::string src(detail::trim(body.substr(0, comma)));
      const std::string dst(detail::trim(body.substr(comma + 1)));
      auto si = index.find(src);
      auto di = index.find(dst);
      if (si == index.end() || di == index.end())
        throw ParseError("attack references undeclared argument", lineno);
      attacks.emplace_back(si->second, di->second);
    } else {
      throw ParseError("unrecognised line: " + std::string(line), lineno);
    }
  }
  const std::size_t n = names.size();
  return AF(n, std::move(attacks), std::move(names));
}

inline AF parse_apx(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_apx(in);
}

inline AF read_apx(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open " + path.string());
  return parse_apx(in);
}

inline std::string to_apx(const AF& af) {
  std::string out;
  for (const auto& n : af.names()) out += "arg(" + n + ").\n";
  for (const auto& [s, t] : af.attacks()) out += "att(" + af.names()[s] + "," + af.names()[t] + ").\n";
  return out;
}

inline void write_apx(const AF& af, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot write " + path.string());
  out << to_apx(af);
}

}  // namespace argnn
