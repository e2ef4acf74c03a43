#pragma once

// Flat-sectioned key/value config format:
//
//   # comment
//   [scene]
//   n_targets = 3
//   radar.fc_hz = 77e9        # dotted keys work with or without a section
//
// Keys are stored fully qualified ("scene.n_targets"). Values are scalars,
// booleans, or comma-separated lists.

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace wavesel {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error("config error: " + what) {}
};

class Config {
public:
    Config() = default;

    static Config parse(const std::string& text) {
        Config cfg;
        std::istringstream in(text);
        std::string line;
        std::string section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find_first_of("#;");
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ConfigError("malformed section header at line " + std::to_string(lineno));
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("expected key = value at line " + std::to_string(lineno));
            std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) throw ConfigError("empty key at line " + std::to_string(lineno));
            if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
            cfg.values_[key] = value;
        }
        return cfg;
    }

    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    std::string require_string(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError("missing required key '" + key + "'");
        return it->second;
    }

    double get_double(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : to_double(key, it->second);
    }

    long get_long(const std::string& key, long fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : to_long(key, it->second);
    }

    int get_int(const std::string& key, int fallback) const {
        return static_cast<int>(get_long(key, fallback));
    }

    bool get_bool(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        const std::string& v = it->second;
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        throw ConfigError("bad boolean for '" + key + "': '" + v + "'");
    }

    std::vector<double> get_double_list(const std::string& key, std::vector<double> fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<double> out;
        for (const auto& tok : split_list(it->second)) out.push_back(to_double(key, tok));
        return out;
    }

    std::vector<std::string> get_string_list(const std::string& key,
                                             std::vector<std::string> fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        auto toks = split_list(it->second);
        return toks;
    }

    const std::map<std::string, std::string>& items() const { return values_; }

    static std::vector<std::string> split_list(const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        std::istringstream in(s);
        while (std::getline(in, cur, ',')) {
            cur = trim(cur);
            if (!cur.empty()) out.push_back(cur);
        }
        return out;
    }

private:
    static std::string trim(const std::string& s) {
        size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }

    static double to_double(const std::string& key, const std::string& v) {
        try {
            size_t pos = 0;
            const double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            throw ConfigError("bad number for '" + key + "': '" + v + "'");
        }
    }

    static long to_long(const std::string& key, const std::string& v) {
        try {
            size_t pos = 0;
            const long l = std::stol(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return l;
        } catch (const std::exception&) {
            throw ConfigError("bad integer for '" + key + "': '" + v + "'");
        }
    }

    std::map<std::string, std::string> values_;
};

}  // namespace wavesel
