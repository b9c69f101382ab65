#include "mfppo/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

#include "mfppo/error.hpp"

namespace mfppo {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_real(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  require(ec == std::errc() && ptr == t.data() + t.size() && !t.empty(),
          ErrorCode::kInvalidArgument, what + ": not a number: '" + text + "'");
  return v;
}

std::int64_t parse_int(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  require(ec == std::errc() && ptr == t.data() + t.size() && !t.empty(),
          ErrorCode::kInvalidArgument, what + ": not an integer: '" + text + "'");
  return v;
}

}  // namespace

ConfigSection::ConfigSection(std::string name, boost::property_tree::ptree tree)
    : name_(std::move(name)), tree_(std::move(tree)) {}

bool ConfigSection::has(const std::string& key) const {
  return tree_.find(key) != tree_.not_found();
}

std::string ConfigSection::str(const std::string& key) const {
  const auto it = tree_.find(key);
  require(it != tree_.not_found(), ErrorCode::kInvalidArgument,
          "[" + name_ + "] missing required key '" + key + "'");
  used_.insert(key);
  return trim(it->second.data());
}

std::string ConfigSection::str(const std::string& key, const std::string& fallback) const {
  return has(key) ? str(key) : fallback;
}

double ConfigSection::real(const std::string& key) const {
  return parse_real(str(key), "[" + name_ + "] " + key);
}

double ConfigSection::real(const std::string& key, double fallback) const {
  return has(key) ? real(key) : fallback;
}

std::int64_t ConfigSection::integer(const std::string& key) const {
  return parse_int(str(key), "[" + name_ + "] " + key);
}

std::int64_t ConfigSection::integer(const std::string& key, std::int64_t fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::vector<double> ConfigSection::reals(const std::string& key) const {
  std::istringstream in(str(key));
  std::vector<double> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_real(tok, "[" + name_ + "] " + key));
  return out;
}

void ConfigSection::finish() const {
  for (const auto& [key, value] : tree_)
    require(used_.count(key) > 0, ErrorCode::kInvalidArgument,
            "[" + name_ + "] unknown key '" + key + "'");
}

ConfigFile ConfigFile::parse(const std::string& text, const std::string& origin) {
  ConfigFile f;
  f.origin_ = origin;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, f.tree_);
  } catch (const boost::property_tree::ini_parser_error& e) {
    fail(ErrorCode::kInvalidArgument, origin + ": " + e.message() + " (line " +
                                          std::to_string(e.line()) + ")");
  }
  for (const auto& [name, sub] : f.tree_)
    require(!sub.empty() || sub.data().empty(), ErrorCode::kInvalidArgument,
            origin + ": key '" + name + "' outside of any section");
  // read_ini drops sections without keys; keep them so they can be rejected.
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    const std::string t = trim(line);
    if (t.size() > 2 && t.front() == '[' && t.back() == ']') {
      const std::string name = trim(t.substr(1, t.size() - 2));
      if (f.tree_.find(name) == f.tree_.not_found()) f.tree_.put_child(name, {});
    }
  }
  return f;
}

ConfigFile ConfigFile::load(const std::string& path) {
  return parse(read_text_file(path), path);
}

std::vector<std::string> ConfigFile::sections() const {
  std::vector<std::string> out;
  for (const auto& [name, sub] : tree_) out.push_back(name);
  return out;
}

bool ConfigFile::has_section(const std::string& name) const {
  return tree_.find(name) != tree_.not_found();
}

ConfigSection ConfigFile::section(const std::string& name) const {
  const auto it = tree_.find(name);
  require(it != tree_.not_found(), ErrorCode::kInvalidArgument,
          origin_ + ": missing section [" + name + "]");
  return ConfigSection(name, it->second);
}

std::vector<std::pair<std::string, std::string>> ConfigFile::items(const std::string& name) const {
  const auto it = tree_.find(name);
  require(it != tree_.not_found(), ErrorCode::kInvalidArgument,
          origin_ + ": missing section [" + name + "]");
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [key, value] : it->second) out.emplace_back(key, trim(value.data()));
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mfppo
