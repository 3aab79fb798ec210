#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Run configuration for the command-line tool: a flat `key = value` file with
// dotted keys, overridden by flags of the same names.
namespace spar::cli {

enum class KeyKind { value, input, output };

struct KeySpec {
    std::string key;
    std::string default_value;
    std::string help;
    KeyKind kind = KeyKind::value;
};

/// `key = value` lines; '#' starts a comment line; blank lines are skipped.
/// Throws ConfigError naming the line for anything else or a repeated key.
std::map<std::string, std::string> parse_config(std::istream& in);
std::map<std::string, std::string> load_config(const std::filesystem::path& path);

/// Resolved values of one subcommand: defaults, then the config file, then
/// flags. Typed getters throw ConfigError naming the key.
class Config {
  public:
    Config(std::span<const KeySpec> specs, const std::map<std::string, std::string>& file_values,
           const std::map<std::string, std::string>& flag_values);

    [[nodiscard]] const std::string& str(const std::string& key) const;
    [[nodiscard]] double real(const std::string& key) const;
    [[nodiscard]] std::size_t count(const std::string& key) const;
    [[nodiscard]] std::uint64_t seed(const std::string& key) const;
    [[nodiscard]] bool flag(const std::string& key) const;
    /// Comma-separated values, empty entries removed.
    [[nodiscard]] std::vector<std::string> list(const std::string& key) const;
    [[nodiscard]] bool set(const std::string& key) const { return !str(key).empty(); }

    /// The path under `key`, which must name an existing file.
    [[nodiscard]] std::filesystem::path input(const std::string& key) const;
    /// The path under `key`, with its parent directory created.
    [[nodiscard]] std::filesystem::path output(const std::string& key) const;

    [[nodiscard]] const std::map<std::string, std::string>& values() const { return values_; }
    [[nodiscard]] std::span<const KeySpec> specs() const { return specs_; }

  private:
    std::vector<KeySpec> specs_;
    std::map<std::string, std::string> values_;
};

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Writes `<artifact>.manifest`: tool version, command, every resolved key,
/// the SHA-256 of every input file that was set, and any values the command
/// resolved while running (such as a tuned weight).
void write_manifest(
    const std::filesystem::path& artifact, std::string_view command, const Config& config, std::string_view version,
    const std::map<std::string, std::string>& results = {});

}  // namespace spar::cli
