// Small TOML-subset reader for scenario files: [section] headers (dotted
// nesting), key = value pairs with strings, integers, floats, booleans and
// flat arrays, # comments. Enough for declarative experiment descriptions.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace qfilter::minitoml {

struct Value;
using Table = std::map<std::string, Value>;

struct Value {
    std::variant<std::int64_t, double, bool, std::string, std::vector<Value>, Table> data;

    bool is_table() const { return std::holds_alternative<Table>(data); }
    bool is_array() const { return std::holds_alternative<std::vector<Value>>(data); }

    std::int64_t as_int() const;
    double as_double() const;  // accepts integers
    bool as_bool() const;
    const std::string& as_string() const;
    const std::vector<Value>& as_array() const;
    const Table& as_table() const;
};

Table parse(const std::string& text);
Table parse_file(const std::string& path);

// dotted-path lookup; throws ConfigError when missing and no default given
bool has(const Table& t, const std::string& path);
const Value& get(const Table& t, const std::string& path);
double get_double(const Table& t, const std::string& path);
double get_double(const Table& t, const std::string& path, double fallback);
std::int64_t get_int(const Table& t, const std::string& path);
std::int64_t get_int(const Table& t, const std::string& path, std::int64_t fallback);
std::string get_string(const Table& t, const std::string& path);
std::string get_string(const Table& t, const std::string& path, const std::string& fallback);
bool get_bool(const Table& t, const std::string& path, bool fallback);

}  // namespace qfilter::minitoml
