#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "degenlab/errors.hpp"

namespace degenlab::cli {

using json = nlohmann::json;

inline constexpr const char* kFormatVersion = "1";
inline constexpr const char* kEnvPrefix = "DEGENLAB_";

/// Config failure tied to one key; maps to exit status 2.
class ConfigError : public Error {
public:
    ConfigError(std::string key, const std::string& message)
        : Error(ErrorCode::ConfigError, key + ": " + message), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Every subcommand's parameter block with its defaults. The default also fixes the type.
inline const std::map<std::string, json>& subcommand_defaults() {
    static const std::map<std::string, json> table = {
        {"spectrum", {{"alpha", 0.5}, {"n", 2048}, {"k_max", 8}, {"grading", 0.0}}},
        {"simulate",
         {{"alpha", 0.5},
          {"n", 1024},
          {"n_max", 4},
          {"k_max", 4},
          {"T", 10.0},
          {"samples", 200},
          {"delta0", 0.01},
          {"datum", "mode"},
          {"mode_n", 1},
          {"mode_k", 1}}},
        {"hardy",
         {{"alpha", 0.5},
          {"critical", false},
          {"delta", 0.01},
          {"bc", "mixed"},
          {"method", "direct"},
          {"n", 4096},
          {"n_list", json::array({512, 2048, 8192})},
          {"deltas", json::array({0.1, 0.01, 0.001, 0.0001})}}},
        {"carleman-check",
         {{"alpha", 0.5},
          {"delta0", 0.03},
          {"beta", 0.0149},
          {"T", 25.5},
          {"lambda", 0.5},
          {"s", 2.0},
          {"theta_cells", 1280},
          {"r_cells", 8},
          {"time_cells", 128},
          {"r_floor", 0.25},
          {"levels", 3},
          {"modes", json::array({1.0, 1.0, 1.0, 0.0, 2.0, 2.0, 0.5, 0.3})},
          {"s_values", json::array({2.0, 4.0, 8.0, 16.0, 32.0, 64.0})}}},
        {"observability",
         {{"alpha", 0.5},
          {"delta0", 0.01},
          {"beta", 0.004},
          {"T", 0.0},
          {"members", 100},
          {"n_max", 16},
          {"k_max", 16},
          {"n_values", json::array({8, 16, 32, 64})}}},
        {"validate-params",
         {{"alpha", 0.5}, {"delta0", 0.01}, {"beta", 0.0049}, {"T", 50.0}, {"lambda", 1.0}, {"s", 2.0}}},
    };
    return table;
}

struct RunConfig {
    std::string subcommand;
    json params;
    std::string out = ".";
    std::uint64_t seed = 42;

    json echo() const { return {{"subcommand", subcommand}, {"params", params}, {"seed", seed}}; }
};

inline std::string flag_name(const std::string& key) {
    std::string f = key;
    std::replace(f.begin(), f.end(), '_', '-');
    return f;
}

inline std::string env_name(const std::string& key) {
    std::string e = kEnvPrefix;
    for (char c : key) e += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return e;
}

/// Checks `value` against the type of `like` and returns it normalized (ints stay ints).
inline json coerce(const std::string& key, const json& like, const json& value) {
    auto bad = [&](const char* what) { throw ConfigError(key, std::string("expected ") + what + ", got " + value.dump()); };
    if (like.is_boolean()) {
        if (!value.is_boolean()) bad("a boolean");
        return value;
    }
    if (like.is_number_integer()) {
        if (value.is_number_integer()) return value;
        if (value.is_number_float() && value.get<double>() == static_cast<double>(static_cast<long long>(value.get<double>())))
            return static_cast<long long>(value.get<double>());
        bad("an integer");
    }
    if (like.is_number()) {
        if (!value.is_number()) bad("a number");
        return value.get<double>();
    }
    if (like.is_string()) {
        if (!value.is_string()) bad("a string");
        return value;
    }
    if (like.is_array()) {
        if (!value.is_array() || value.empty()) bad("a nonempty array");
        json out = json::array();
        for (const auto& v : value) out.push_back(coerce(key, like.front(), v));
        return out;
    }
    bad("a known type");
    return {};
}

/// Text from a flag or environment variable: JSON literal when it parses, else a bare string.
inline json parse_text(const std::string& key, const json& like, const std::string& text) {
    if (like.is_string()) return text;
    if (like.is_boolean() && text.empty()) return true;
    json v = json::parse(text, nullptr, false);
    if (v.is_discarded()) {
        // comma lists for arrays
        if (like.is_array()) {
            json arr = json::array();
            std::size_t start = 0;
            while (start <= text.size()) {
                const auto end = text.find(',', start);
                const std::string item = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
                json x = json::parse(item, nullptr, false);
                if (x.is_discarded()) throw ConfigError(key, "cannot parse list item '" + item + "'");
                arr.push_back(x);
                if (end == std::string::npos) break;
                start = end + 1;
            }
            v = arr;
        } else {
            throw ConfigError(key, "cannot parse '" + text + "'");
        }
    }
    return coerce(key, like, v);
}

/// defaults <- config file <- DEGENLAB_* environment <- command-line overrides.
inline RunConfig resolve_config(const std::string& subcommand, const json& file_config,
                                const std::map<std::string, std::string>& overrides,
                                const std::map<std::string, std::string>& environment) {
    const auto& table = subcommand_defaults();
    const auto it = table.find(subcommand);
    if (it == table.end()) throw ConfigError("subcommand", "unknown subcommand '" + subcommand + "'");
    RunConfig rc;
    rc.subcommand = subcommand;
    rc.params = it->second;

    if (!file_config.is_null()) {
        if (!file_config.is_object()) throw ConfigError("config", "top level must be an object");
        for (const auto& [key, value] : file_config.items()) {
            if (key == "seed") {
                if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<long long>() >= 0))
                    throw ConfigError("seed", "expected a nonnegative integer");
                rc.seed = value.get<std::uint64_t>();
            } else if (key == "out") {
                if (!value.is_string()) throw ConfigError("out", "expected a string");
                rc.out = value.get<std::string>();
            } else if (key == "subcommand") {
                if (value != subcommand) throw ConfigError("subcommand", "config is for " + value.dump());
            } else if (rc.params.contains(key)) {
                rc.params[key] = coerce(key, rc.params[key], value);
            } else {
                throw ConfigError(key, "unknown key for " + subcommand);
            }
        }
    }
    auto apply_text = [&](const std::string& key, const std::string& text) {
        if (key == "seed") {
            char* end = nullptr;
            const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
            if (text.empty() || *end != '\0' || text.front() == '-') throw ConfigError("seed", "expected a nonnegative integer");
            rc.seed = v;
        } else if (key == "out") {
            rc.out = text;
        } else if (rc.params.contains(key)) {
            rc.params[key] = parse_text(key, rc.params[key], text);
        } else {
            throw ConfigError(key, "unknown key for " + subcommand);
        }
    };
    for (const auto& [key, text] : environment) apply_text(key, text);
    for (const auto& [key, text] : overrides) apply_text(key, text);
    return rc;
}

/// DEGENLAB_<KEY> variables that name a key of this subcommand (or SEED / OUT).
inline std::map<std::string, std::string> environment_overrides(const std::string& subcommand) {
    std::map<std::string, std::string> env;
    const auto it = subcommand_defaults().find(subcommand);
    if (it == subcommand_defaults().end()) return env;
    std::vector<std::string> keys{"seed", "out"};
    for (const auto& [key, value] : it->second.items()) keys.push_back(key);
    for (const auto& key : keys)
        if (const char* v = std::getenv(env_name(key).c_str())) env[key] = v;
    return env;
}

inline json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config", "malformed JSON in " + path);
    return j;
}

}  // namespace degenlab::cli
