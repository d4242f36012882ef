#include "fracback/config.hpp"

#include "fracback/errors.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace fracback {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

Config Config::parse_string(const std::string& text) {
    Config config;
    std::istringstream is(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw io_error("config line " + std::to_string(line_no) +
                               ": unterminated section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            config.sections_[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw io_error("config line " + std::to_string(line_no) +
                           ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) {
            throw io_error("config line " + std::to_string(line_no) + ": empty key");
        }
        config.sections_[section][key] = trim(line.substr(eq + 1));
    }
    return config;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw io_error("cannot open config '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(is)),
                     std::istreambuf_iterator<char>());
    return parse_string(text);
}

bool Config::has(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

const std::string& Config::require(const std::string& section,
                                   const std::string& key) const {
    const auto s = sections_.find(section);
    if (s == sections_.end() || !s->second.count(key)) {
        throw io_error("config: missing [" + section + "] " + key);
    }
    return s->second.at(key);
}

std::string Config::get_string(const std::string& section,
                               const std::string& key) const {
    return require(section, key);
}
std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    return has(section, key) ? require(section, key) : fallback;
}
double Config::get_double(const std::string& section, const std::string& key) const {
    return std::stod(require(section, key));
}
double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
}
int Config::get_int(const std::string& section, const std::string& key) const {
    return std::stoi(require(section, key));
}
int Config::get_int(const std::string& section, const std::string& key,
                    int fallback) const {
    return has(section, key) ? get_int(section, key) : fallback;
}
bool Config::get_bool(const std::string& section, const std::string& key,
                      bool fallback) const {
    if (!has(section, key)) return fallback;
    std::string v = require(section, key);
    std::transform(v.begin(), v.end(), v.begin(), ::tolower);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw io_error("config: [" + section + "] " + key + " is not a boolean");
}
std::vector<double> Config::get_doubles(const std::string& section,
                                        const std::string& key) const {
    std::istringstream is(require(section, key));
    std::vector<double> out;
    double v;
    while (is >> v) out.push_back(v);
    return out;
}
std::vector<std::string> Config::get_strings(const std::string& section,
                                             const std::string& key) const {
    std::istringstream is(require(section, key));
    std::vector<std::string> out;
    std::string v;
    while (is >> v) out.push_back(v);
    return out;
}

} // namespace fracback
