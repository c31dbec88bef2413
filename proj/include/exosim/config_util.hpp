#pragma once

// Typed access to one section of a sectioned key-value file, tracking which
// keys were consumed so that typos surface as errors.

#include "exosim/common.hpp"

#include <boost/property_tree/ptree.hpp>

#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace exosim {

class KeyReader {
 public:
  KeyReader(std::string section, const boost::property_tree::ptree& body)
      : section_(std::move(section)), body_(body) {}

  std::string path(const std::string& key) const { return section_ + "." + key; }

  bool get(const std::string& key, double& out) const {
    const auto* raw = find(key);
    if (!raw) return false;
    std::istringstream in(*raw);
    double v = 0.0;
    std::string rest;
    if (!(in >> v) || (in >> rest)) throw ConfigError(path(key) + ": expected a number, got '" + *raw + "'");
    out = v;
    return true;
  }

  bool get(const std::string& key, int& out) const {
    double v = 0.0;
    if (!get(key, v)) return false;
    if (v != static_cast<double>(static_cast<long long>(v))) {
      throw ConfigError(path(key) + ": expected an integer");
    }
    out = static_cast<int>(v);
    return true;
  }

  bool get(const std::string& key, std::string& out) const {
    const auto* raw = find(key);
    if (!raw) return false;
    out = *raw;
    return true;
  }

  bool get(const std::string& key, bool& out) const {
    const auto* raw = find(key);
    if (!raw) return false;
    if (*raw == "1" || *raw == "true" || *raw == "yes") {
      out = true;
    } else if (*raw == "0" || *raw == "false" || *raw == "no") {
      out = false;
    } else {
      throw ConfigError(path(key) + ": expected a boolean, got '" + *raw + "'");
    }
    return true;
  }

  bool get(const std::string& key, Vec3& out) const {
    std::vector<double> v;
    if (!get_list(key, v)) return false;
    if (v.size() != 3) throw ConfigError(path(key) + ": expected 3 numbers");
    out = Vec3(v[0], v[1], v[2]);
    return true;
  }

  /// Whitespace- or comma-separated numbers.
  bool get_list(const std::string& key, std::vector<double>& out) const {
    const auto* raw = find(key);
    if (!raw) return false;
    std::string s = *raw;
    for (char& ch : s) {
      if (ch == ',') ch = ' ';
    }
    std::istringstream in(s);
    out.clear();
    std::string tok;
    while (in >> tok) {
      try {
        std::size_t used = 0;
        out.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ConfigError(path(key) + ": '" + tok + "' is not a number");
      }
    }
    return true;
  }

  void reject_unused() const {
    for (const auto& [key, value] : body_) {
      if (!used_.contains(key)) throw ConfigError("unknown key " + path(key));
    }
  }

 private:
  const std::string* find(const std::string& key) const {
    auto it = body_.find(key);
    if (it == body_.not_found()) return nullptr;
    used_.insert(key);
    return &it->second.data();
  }

  std::string section_;
  const boost::property_tree::ptree& body_;
  mutable std::set<std::string> used_;
};

}  // namespace exosim
