#include "config.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <memory>
#include <set>

#include "spar/types.hpp"

namespace spar::cli {

namespace {

std::string trim(std::string_view s)
{
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected)
{
    throw ConfigError("key '" + key + "' has value '" + value + "', expected " + expected);
}

}  // namespace

std::map<std::string, std::string> parse_config(std::istream& in)
{
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto t = trim(line);
        if (t.empty() || t[0] == '#') {
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        auto key = trim(std::string_view(t).substr(0, eq));
        auto value = trim(std::string_view(t).substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        }
        if (!out.emplace(key, value).second) {
            throw ConfigError("config line " + std::to_string(line_no) + ": key '" + key + "' repeated");
        }
    }
    return out;
}

std::map<std::string, std::string> load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    return parse_config(in);
}

Config::Config(std::span<const KeySpec> specs, const std::map<std::string, std::string>& file_values,
               const std::map<std::string, std::string>& flag_values)
    : specs_(specs.begin(), specs.end())
{
    std::set<std::string> known;
    for (const auto& s : specs_) {
        known.insert(s.key);
        values_[s.key] = s.default_value;
    }
    // A config file may carry keys for other subcommands; those are ignored.
    for (const auto& [k, v] : file_values) {
        if (known.count(k)) {
            values_[k] = v;
        }
    }
    for (const auto& [k, v] : flag_values) {
        if (!known.count(k)) {
            throw ConfigError("unknown option --" + k);
        }
        values_[k] = v;
    }
}

const std::string& Config::str(const std::string& key) const
{
    auto it = values_.find(key);
    if (it == values_.end()) {
        throw ConfigError("key '" + key + "' is not defined for this command");
    }
    return it->second;
}

double Config::real(const std::string& key) const
{
    const auto& v = str(key);
    try {
        std::size_t used = 0;
        double x = std::stod(v, &used);
        if (used != v.size()) {
            bad_value(key, v, "a number");
        }
        return x;
    } catch (const std::logic_error&) {
        bad_value(key, v, "a number");
    }
}

std::size_t Config::count(const std::string& key) const
{
    const auto& v = str(key);
    std::size_t x = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        bad_value(key, v, "a non-negative integer");
    }
    return x;
}

std::uint64_t Config::seed(const std::string& key) const
{
    const auto& v = str(key);
    std::uint64_t x = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        bad_value(key, v, "a non-negative integer");
    }
    return x;
}

bool Config::flag(const std::string& key) const
{
    const auto& v = str(key);
    if (v == "true" || v == "1" || v == "yes") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no") {
        return false;
    }
    bad_value(key, v, "true or false");
}

std::vector<std::string> Config::list(const std::string& key) const
{
    std::vector<std::string> out;
    const auto& v = str(key);
    std::size_t start = 0;
    while (start <= v.size()) {
        auto comma = v.find(',', start);
        auto item = trim(std::string_view(v).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (!item.empty()) {
            out.push_back(item);
        }
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

std::filesystem::path Config::input(const std::string& key) const
{
    const auto& v = str(key);
    if (v.empty()) {
        throw ConfigError("key '" + key + "' is required");
    }
    if (!std::filesystem::is_regular_file(v)) {
        throw ConfigError("key '" + key + "' names a missing file: " + v);
    }
    return v;
}

std::filesystem::path Config::output(const std::string& key) const
{
    const auto& v = str(key);
    if (v.empty()) {
        throw ConfigError("key '" + key + "' is required");
    }
    std::filesystem::path p(v);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec) {
            throw ConfigError("key '" + key + "': cannot create directory " + p.parent_path().string());
        }
    }
    return p;
}

std::string sha256_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read " + path.string());
    }
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) {
        char b[3];
        std::snprintf(b, sizeof b, "%02x", digest[i]);
        hex += b;
    }
    return hex;
}

void write_manifest(
    const std::filesystem::path& artifact, std::string_view command, const Config& config, std::string_view version,
    const std::map<std::string, std::string>& results)
{
    auto path = artifact;
    path += ".manifest";
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    out << "tool.version = " << version << "\n";
    out << "command = " << command << "\n";
    for (const auto& [k, v] : config.values()) {
        out << "config." << k << " = " << v << "\n";
    }
    for (const auto& s : config.specs()) {
        if (s.kind == KeyKind::input && config.set(s.key)) {
            out << "input." << s.key << ".sha256 = " << sha256_file(config.str(s.key)) << "\n";
        }
    }
    for (const auto& [k, v] : results) {
        out << "result." << k << " = " << v << "\n";
    }
}

}  // namespace spar::cli
