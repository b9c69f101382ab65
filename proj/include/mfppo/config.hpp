#ifndef MFPPO_CONFIG_HPP
#define MFPPO_CONFIG_HPP

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <boost/property_tree/ptree.hpp>

namespace mfppo {

// One [section] of a strict INI file. Every key must be read before finish()
// or it is reported as unknown.
class ConfigSection {
 public:
  ConfigSection(std::string name, boost::property_tree::ptree tree);

  const std::string& name() const { return name_; }
  bool has(const std::string& key) const;
  std::string str(const std::string& key) const;
  std::string str(const std::string& key, const std::string& fallback) const;
  double real(const std::string& key) const;
  double real(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  std::vector<double> reals(const std::string& key) const;

  // Throws on keys that were never read.
  void finish() const;

 private:
  std::string name_;
  boost::property_tree::ptree tree_;
  mutable std::set<std::string> used_;
};

class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text, const std::string& origin);
  static ConfigFile load(const std::string& path);

  std::vector<std::string> sections() const;
  bool has_section(const std::string& name) const;
  ConfigSection section(const std::string& name) const;
  // Raw key/value pairs of a section in file order.
  std::vector<std::pair<std::string, std::string>> items(const std::string& name) const;

 private:
  boost::property_tree::ptree tree_;
  std::string origin_;
};

std::string read_text_file(const std::string& path);

}  // namespace mfppo

#endif  // MFPPO_CONFIG_HPP
