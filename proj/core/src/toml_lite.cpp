#include "riskquant/toml_lite.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "riskquant/errors.hpp"

namespace riskquant::toml {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Strips a trailing comment that is not inside a string literal.
std::string strip_comment(const std::string& s) {
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c == '"' && (i == 0 || s[i - 1] != '\\')) in_string = !in_string;
        if (c == '#' && !in_string) return s.substr(0, i);
    }
    return s;
}

bool balanced(const std::string& s) {
    bool in_string = false;
    int depth = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c == '"' && (i == 0 || s[i - 1] != '\\')) in_string = !in_string;
        if (in_string) continue;
        if (c == '[') ++depth;
        if (c == ']') --depth;
    }
    return depth <= 0;
}

Value parse_scalar(const std::string& raw, const std::string& key) {
    std::string text = trim(raw);
    if (text.empty()) throw ConfigError("empty value", key);
    Value v;
    if (text.front() == '"') {
        if (text.size() < 2 || text.back() != '"') {
            throw ConfigError("unterminated string", key);
        }
        v.type = Value::Type::String;
        std::string out;
        for (std::size_t i = 1; i + 1 < text.size(); ++i) {
            if (text[i] == '\\' && i + 2 < text.size() &&
                (text[i + 1] == '"' || text[i + 1] == '\\')) {
                out.push_back(text[++i]);
            } else {
                out.push_back(text[i]);
            }
        }
        v.s = std::move(out);
        return v;
    }
    if (text == "true" || text == "false") {
        v.type = Value::Type::Bool;
        v.b = text == "true";
        return v;
    }
    bool looks_float = text.find_first_of(".eE") != std::string::npos &&
                       text.find_first_not_of("+-0123456789.eE_") == std::string::npos;
    std::string digits = text;
    digits.erase(std::remove(digits.begin(), digits.end(), '_'), digits.end());
    char* end = nullptr;
    if (!looks_float) {
        long long iv = std::strtoll(digits.c_str(), &end, 10);
        if (end != nullptr && *end == '\0') {
            v.type = Value::Type::Int;
            v.i = iv;
            v.f = static_cast<double>(iv);
            return v;
        }
    }
    double fv = std::strtod(digits.c_str(), &end);
    if (end == nullptr || *end != '\0') {
        throw ConfigError("cannot parse value '" + text + "'", key);
    }
    v.type = Value::Type::Float;
    v.f = fv;
    return v;
}

Value parse_value(const std::string& raw, const std::string& key) {
    std::string text = trim(raw);
    if (!text.empty() && text.front() == '[') {
        if (text.back() != ']') throw ConfigError("unterminated array", key);
        Value v;
        v.type = Value::Type::Array;
        std::string body = text.substr(1, text.size() - 2);
        std::string item;
        bool in_string = false;
        int depth = 0;
        for (std::size_t i = 0; i < body.size(); ++i) {
            char c = body[i];
            if (c == '"' && (i == 0 || body[i - 1] != '\\')) in_string = !in_string;
            if (!in_string) {
                if (c == '[') ++depth;
                if (c == ']') --depth;
                if (c == ',' && depth == 0) {
                    if (!trim(item).empty()) v.items.push_back(parse_scalar(item, key));
                    item.clear();
                    continue;
                }
            }
            item.push_back(c);
        }
        if (!trim(item).empty()) v.items.push_back(parse_scalar(item, key));
        return v;
    }
    return parse_scalar(text, key);
}

}  // namespace

double Value::as_number(const std::string& key) const {
    if (type == Type::Float || type == Type::Int) return type == Type::Int ? static_cast<double>(i) : f;
    throw ConfigError("expected a number", key);
}

long long Value::as_integer(const std::string& key) const {
    if (type == Type::Int) return i;
    throw ConfigError("expected an integer", key);
}

bool Value::as_bool(const std::string& key) const {
    if (type == Type::Bool) return b;
    throw ConfigError("expected a boolean", key);
}

const std::string& Value::as_string(const std::string& key) const {
    if (type == Type::String) return s;
    throw ConfigError("expected a string", key);
}

Table Table::parse(const std::string& text) {
    Table table;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string cur = trim(strip_comment(line));
        if (cur.empty()) continue;
        if (cur.front() == '[' && cur.back() == ']' && cur.find('=') == std::string::npos) {
            section = trim(cur.substr(1, cur.size() - 2));
            if (section.empty()) {
                throw ConfigError("empty section name at line " + std::to_string(line_no));
            }
            continue;
        }
        std::size_t eq = cur.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("expected key = value at line " + std::to_string(line_no));
        }
        std::string key = trim(cur.substr(0, eq));
        std::string value = trim(cur.substr(eq + 1));
        // Multi-line arrays: keep consuming until brackets balance.
        while (!value.empty() && value.front() == '[' && !balanced(value)) {
            std::string more;
            if (!std::getline(in, more)) {
                throw ConfigError("unterminated array", key);
            }
            ++line_no;
            value += " " + trim(strip_comment(more));
        }
        if (key.empty()) {
            throw ConfigError("empty key at line " + std::to_string(line_no));
        }
        std::string full = section.empty() ? key : section + "." + key;
        table.map_[full] = parse_value(value, full);
    }
    return table;
}

Table Table::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

const Value& Table::at(const std::string& key) const {
    auto it = map_.find(key);
    if (it == map_.end()) throw ConfigError("missing required field", key);
    return it->second;
}

double Table::number(const std::string& key) const { return at(key).as_number(key); }
double Table::number(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
}
long long Table::integer(const std::string& key) const { return at(key).as_integer(key); }
long long Table::integer(const std::string& key, long long fallback) const {
    return has(key) ? integer(key) : fallback;
}
bool Table::boolean(const std::string& key, bool fallback) const {
    return has(key) ? at(key).as_bool(key) : fallback;
}
std::string Table::str(const std::string& key) const { return at(key).as_string(key); }
std::string Table::str(const std::string& key, const std::string& fallback) const {
    return has(key) ? str(key) : fallback;
}

std::vector<double> Table::number_array(const std::string& key) const {
    const Value& v = at(key);
    if (v.type != Value::Type::Array) throw ConfigError("expected an array", key);
    std::vector<double> out;
    out.reserve(v.items.size());
    for (const Value& item : v.items) out.push_back(item.as_number(key));
    return out;
}

std::vector<std::string> Table::string_array(const std::string& key) const {
    const Value& v = at(key);
    if (v.type != Value::Type::Array) throw ConfigError("expected an array", key);
    std::vector<std::string> out;
    out.reserve(v.items.size());
    for (const Value& item : v.items) out.push_back(item.as_string(key));
    return out;
}

std::vector<std::string> Table::keys() const {
    std::vector<std::string> out;
    out.reserve(map_.size());
    for (const auto& [k, v] : map_) out.push_back(k);
    return out;
}

}  // namespace riskquant::toml
