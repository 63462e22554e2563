#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracsde::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// A configuration problem attributable to one key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error("config key '" + key + "': " + message), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Flat key=value settings. Blank lines and lines starting with '#' are
/// ignored; later assignments win.
using Settings = std::map<std::string, std::string>;

Settings parse_settings(const std::string& text, const std::string& origin);

/// Runs one subcommand. `args` excludes the program name, e.g.
/// {"train", "--config", "run.cfg", "dataset=data", "out=runs/a"}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fracsde::cli
