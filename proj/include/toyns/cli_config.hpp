#pragma once

// Strict JSON config sections, CSV writing and the run manifest.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "toyns/error.hpp"
#include "toyns/snapshot_io.hpp"

namespace toyns::cli {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int { kOk = 0, kFailed = 1, kConfigError = 2, kNumericalFailure = 3 };

/// A configuration problem tied to one key path such as "solver.dt".
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string key, const std::string& msg)
      : std::runtime_error("config error at '" + key + "': " + msg), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

/// Runs f, turning precondition failures into a ConfigError on `key`.
template <class F>
decltype(auto) with_key(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    throw ConfigError(key, e.what());
  }
}

/// One JSON object of the config. Every read records the resolved value
/// (defaults included) in `resolved`; finish() rejects keys never read.
class Section {
public:
  Section(const json& src, std::string path, json& resolved) : src_(&src), path_(std::move(path)), out_(&resolved) {
    if (!src_->is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    if (!out_->is_object()) *out_ = json::object();
  }

  const std::string& path() const { return path_; }
  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  bool has(const std::string& k) const { return src_->contains(k); }

  double number(const std::string& k) { return number_impl(k, std::nullopt); }
  double number(const std::string& k, double def) { return number_impl(k, def); }

  long integer(const std::string& k) { return integer_impl(k, std::nullopt); }
  long integer(const std::string& k, long def) { return integer_impl(k, def); }

  std::string string(const std::string& k) { return string_impl(k, std::nullopt); }
  std::string string(const std::string& k, const std::string& def) { return string_impl(k, def); }

  bool boolean(const std::string& k, bool def) {
    used_.insert(k);
    if (!has(k)) return record(k, def);
    const json& v = (*src_)[k];
    if (!v.is_boolean()) throw ConfigError(key(k), "expected true or false");
    return record(k, v.get<bool>());
  }

  std::vector<double> numbers(const std::string& k, std::optional<std::size_t> size = {}) {
    return numbers_impl(k, std::nullopt, size);
  }
  std::vector<double> numbers(const std::string& k, const std::vector<double>& def, std::optional<std::size_t> size = {}) {
    return numbers_impl(k, def, size);
  }

  /// A list of fixed-length number tuples, e.g. centers [[x, y, z, t], ...].
  std::vector<std::vector<double>> tuples(const std::string& k, std::size_t size) {
    used_.insert(k);
    if (!has(k)) throw ConfigError(key(k), "required key missing");
    const json& v = (*src_)[k];
    if (!v.is_array() || v.empty()) throw ConfigError(key(k), "expected a non-empty list");
    std::vector<std::vector<double>> out;
    for (const auto& row : v) {
      if (!row.is_array() || row.size() != size)
        throw ConfigError(key(k), "every entry must be a list of " + std::to_string(size) + " numbers");
      std::vector<double> t;
      for (const auto& x : row) {
        if (!x.is_number()) throw ConfigError(key(k), "entries must be numbers");
        t.push_back(x.get<double>());
      }
      out.push_back(std::move(t));
    }
    (*out_)[k] = out;
    return out;
  }

  Section sub(const std::string& k) {
    used_.insert(k);
    if (!has(k)) throw ConfigError(key(k), "required section missing");
    return Section((*src_)[k], key(k), (*out_)[k]);
  }
  std::optional<Section> optional_sub(const std::string& k) {
    if (!has(k)) {
      used_.insert(k);
      return std::nullopt;
    }
    return sub(k);
  }
  /// An absent section read as empty, so its defaults are still echoed.
  Section sub_or_empty(const std::string& k) {
    used_.insert(k);
    const json& v = has(k) ? (*src_)[k] : empty_object();
    return Section(v, key(k), (*out_)[k]);
  }

  void record_value(const std::string& k, const json& v) { (*out_)[k] = v; }

  /// Accepts a key without reading it (sections meant for other commands).
  void ignore(const std::string& k) { used_.insert(k); }

  /// Marks a key as consumed without reading it, or rejects its presence.
  void forbid(const std::string& k, const std::string& why) {
    if (has(k)) throw ConfigError(key(k), why);
  }

  void finish() const {
    for (auto it = src_->begin(); it != src_->end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(key(it.key()), "unknown key");
  }

private:
  static const json& empty_object() {
    static const json e = json::object();
    return e;
  }

  template <class T>
  T record(const std::string& k, T v) {
    (*out_)[k] = v;
    return v;
  }

  double number_impl(const std::string& k, std::optional<double> def) {
    used_.insert(k);
    if (!has(k)) {
      if (!def) throw ConfigError(key(k), "required key missing");
      return record(k, *def);
    }
    const json& v = (*src_)[k];
    if (!v.is_number()) throw ConfigError(key(k), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(key(k), "must be finite");
    return record(k, d);
  }

  long integer_impl(const std::string& k, std::optional<long> def) {
    used_.insert(k);
    if (!has(k)) {
      if (!def) throw ConfigError(key(k), "required key missing");
      return record(k, *def);
    }
    const json& v = (*src_)[k];
    if (!v.is_number_integer()) throw ConfigError(key(k), "expected an integer");
    return record(k, v.get<long>());
  }

  std::string string_impl(const std::string& k, std::optional<std::string> def) {
    used_.insert(k);
    if (!has(k)) {
      if (!def) throw ConfigError(key(k), "required key missing");
      return record(k, *def);
    }
    const json& v = (*src_)[k];
    if (!v.is_string()) throw ConfigError(key(k), "expected a string");
    return record(k, v.get<std::string>());
  }

  std::vector<double> numbers_impl(const std::string& k, std::optional<std::vector<double>> def,
                                   std::optional<std::size_t> size) {
    used_.insert(k);
    if (!has(k)) {
      if (!def) throw ConfigError(key(k), "required key missing");
      return record(k, *def);
    }
    const json& v = (*src_)[k];
    if (!v.is_array()) throw ConfigError(key(k), "expected a list of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError(key(k), "expected a list of numbers");
      out.push_back(x.get<double>());
    }
    if (size && out.size() != *size) throw ConfigError(key(k), "expected " + std::to_string(*size) + " numbers");
    if (out.empty()) throw ConfigError(key(k), "list must not be empty");
    return record(k, out);
  }

  const json* src_;
  std::string path_;
  json* out_;
  std::set<std::string> used_;
};

/// Comma-separated writer with the fixed 17-digit rendering.
class CsvWriter {
public:
  CsvWriter(const std::filesystem::path& path, const std::string& header) : os_(path) {
    if (!os_) throw std::runtime_error("cannot write " + path.string());
    os_ << header << '\n';
  }

  template <class... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(cells), first = false), ...);
    os_ << '\n';
  }

private:
  static std::string cell(double v) { return fmt17(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "true" : "false"; }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }

  std::ofstream os_;
};

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Output directory, resolved config and the list of files written.
struct RunContext {
  std::string command;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  int workers = 1;
  json resolved = json::object();
  std::vector<std::string> outputs;

  std::filesystem::path file(const std::string& rel) {
    outputs.push_back(rel);
    const auto p = out / rel;
    std::filesystem::create_directories(p.parent_path());
    return p;
  }

  void write_manifest(const std::string& status) const {
    json m;
    m["schema_version"] = kSchemaVersion;
    m["artifact_version"] = TOYNS_VERSION;
    m["command"] = command;
    m["status"] = status;
    m["created_utc"] = utc_timestamp();
    m["config"] = resolved;
    m["outputs"] = outputs;
    std::ofstream os(out / "manifest.json");
    os << m.dump(2) << '\n';
  }

  void write_failure(const std::string& message, double time, const std::array<double, 3>& loc, double max_value) {
    json f;
    f["message"] = message;
    f["time"] = time;
    f["location"] = loc;
    // JSON has no inf/nan
    if (std::isfinite(max_value)) f["max_value"] = max_value;
    else f["max_value"] = std::isnan(max_value) ? "nan" : (max_value > 0 ? "inf" : "-inf");
    std::ofstream os(file("failure.json"));
    os << f.dump(2) << '\n';
  }
};

}  // namespace toyns::cli
