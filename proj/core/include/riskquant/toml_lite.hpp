#pragma once

#include <map>
#include <string>
#include <vector>

namespace riskquant::toml {

/// Scalar or flat array value of the TOML subset used by experiment
/// configs: strings, integers, floats, booleans and arrays of those.
struct Value {
    enum class Type { Bool, Int, Float, String, Array };
    Type type = Type::String;
    bool b = false;
    long long i = 0;
    double f = 0.0;
    std::string s;
    std::vector<Value> items;

    double as_number(const std::string& key) const;
    long long as_integer(const std::string& key) const;
    bool as_bool(const std::string& key) const;
    const std::string& as_string(const std::string& key) const;
};

/// Flat view of a parsed document: keys inside [section] blocks appear as
/// "section.key". Lookups throw ConfigError carrying the field name.
class Table {
public:
    static Table parse(const std::string& text);
    static Table parse_file(const std::string& path);

    bool has(const std::string& key) const { return map_.count(key) != 0; }
    const Value& at(const std::string& key) const;

    double number(const std::string& key) const;
    double number(const std::string& key, double fallback) const;
    long long integer(const std::string& key) const;
    long long integer(const std::string& key, long long fallback) const;
    bool boolean(const std::string& key, bool fallback) const;
    std::string str(const std::string& key) const;
    std::string str(const std::string& key, const std::string& fallback) const;
    std::vector<double> number_array(const std::string& key) const;
    std::vector<std::string> string_array(const std::string& key) const;

    std::vector<std::string> keys() const;

private:
    std::map<std::string, Value> map_;
};

}  // namespace riskquant::toml
