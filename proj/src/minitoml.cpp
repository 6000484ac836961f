#include "qfilter/minitoml.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "qfilter/linalg.hpp"

namespace qfilter::minitoml {

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
    throw ConfigError("toml parse error at line " + std::to_string(line) + ": " + what);
}

std::string strip(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// remove a trailing comment that is not inside a string
std::string strip_comment(const std::string& s) {
    bool in_string = false;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_string = !in_string;
        if (s[i] == '#' && !in_string) return s.substr(0, i);
    }
    return s;
}

std::vector<std::string> split_path(const std::string& path, int line) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : path) {
        if (c == '.') {
            if (cur.empty()) fail(line, "empty path segment");
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (cur.empty()) fail(line, "empty path segment");
    parts.push_back(cur);
    return parts;
}

Value parse_scalar(const std::string& raw, int line);

Value parse_value(const std::string& raw, int line) {
    std::string v = strip(raw);
    if (v.empty()) fail(line, "missing value");
    if (v.front() == '[') {
        if (v.back() != ']') fail(line, "unterminated array");
        std::vector<Value> items;
        std::string inner = v.substr(1, v.size() - 2);
        std::string cur;
        bool in_string = false;
        int depth = 0;
        for (char c : inner) {
            if (c == '"') in_string = !in_string;
            if (!in_string && c == '[') ++depth;
            if (!in_string && c == ']') --depth;
            if (c == ',' && !in_string && depth == 0) {
                if (!strip(cur).empty()) items.push_back(parse_value(cur, line));
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (!strip(cur).empty()) items.push_back(parse_value(cur, line));
        Value out;
        out.data = std::move(items);
        return out;
    }
    return parse_scalar(v, line);
}

Value parse_scalar(const std::string& v, int line) {
    Value out;
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"') fail(line, "unterminated string");
        std::string s;
        for (size_t i = 1; i + 1 < v.size(); ++i) {
            if (v[i] == '\\' && i + 2 < v.size()) {
                ++i;
                switch (v[i]) {
                    case 'n': s += '\n'; break;
                    case 't': s += '\t'; break;
                    case '"': s += '"'; break;
                    case '\\': s += '\\'; break;
                    default: fail(line, "unknown escape");
                }
            } else {
                s += v[i];
            }
        }
        out.data = s;
        return out;
    }
    if (v == "true") { out.data = true; return out; }
    if (v == "false") { out.data = false; return out; }
    // number: integer when it looks like one, float otherwise
    bool is_int = true;
    for (size_t i = 0; i < v.size(); ++i) {
        char c = v[i];
        if (i == 0 && (c == '+' || c == '-')) continue;
        if (!std::isdigit(static_cast<unsigned char>(c))) { is_int = false; break; }
    }
    try {
        if (is_int) {
            out.data = static_cast<std::int64_t>(std::stoll(v));
        } else {
            size_t used = 0;
            double d = std::stod(v, &used);
            if (used != v.size()) fail(line, "bad value '" + v + "'");
            out.data = d;
        }
    } catch (const std::exception&) {
        fail(line, "bad value '" + v + "'");
    }
    return out;
}

Table* descend(Table& root, const std::vector<std::string>& parts, int line) {
    Table* t = &root;
    for (const auto& part : parts) {
        auto it = t->find(part);
        if (it == t->end()) {
            Value v;
            v.data = Table{};
            it = t->emplace(part, std::move(v)).first;
        }
        if (!it->second.is_table()) fail(line, "'" + part + "' is not a table");
        t = &std::get<Table>(it->second.data);
    }
    return t;
}

}  // namespace

Table parse(const std::string& text) {
    Table root;
    Table* current = &root;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = strip(strip_comment(line));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail(lineno, "unterminated section header");
            std::string name = strip(s.substr(1, s.size() - 2));
            if (name.empty()) fail(lineno, "empty section name");
            current = descend(root, split_path(name, lineno), lineno);
            continue;
        }
        size_t eq = std::string::npos;
        bool in_string = false;
        for (size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '"') in_string = !in_string;
            if (s[i] == '=' && !in_string) { eq = i; break; }
        }
        if (eq == std::string::npos) fail(lineno, "expected key = value");
        std::string key = strip(s.substr(0, eq));
        if (key.empty()) fail(lineno, "empty key");
        auto parts = split_path(key, lineno);
        Table* t = current;
        if (parts.size() > 1)
            t = descend(*current, {parts.begin(), parts.end() - 1}, lineno);
        if (t->count(parts.back())) fail(lineno, "duplicate key '" + parts.back() + "'");
        (*t)[parts.back()] = parse_value(s.substr(eq + 1), lineno);
    }
    return root;
}

Table parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::int64_t Value::as_int() const {
    if (auto* p = std::get_if<std::int64_t>(&data)) return *p;
    throw ConfigError("toml: expected integer");
}
double Value::as_double() const {
    if (auto* p = std::get_if<double>(&data)) return *p;
    if (auto* p = std::get_if<std::int64_t>(&data)) return static_cast<double>(*p);
    throw ConfigError("toml: expected number");
}
bool Value::as_bool() const {
    if (auto* p = std::get_if<bool>(&data)) return *p;
    throw ConfigError("toml: expected boolean");
}
const std::string& Value::as_string() const {
    if (auto* p = std::get_if<std::string>(&data)) return *p;
    throw ConfigError("toml: expected string");
}
const std::vector<Value>& Value::as_array() const {
    if (auto* p = std::get_if<std::vector<Value>>(&data)) return *p;
    throw ConfigError("toml: expected array");
}
const Table& Value::as_table() const {
    if (auto* p = std::get_if<Table>(&data)) return *p;
    throw ConfigError("toml: expected table");
}

namespace {
const Value* find(const Table& t, const std::string& path) {
    const Table* cur = &t;
    std::string rest = path;
    while (true) {
        size_t dot = rest.find('.');
        std::string head = rest.substr(0, dot);
        auto it = cur->find(head);
        if (it == cur->end()) return nullptr;
        if (dot == std::string::npos) return &it->second;
        if (!it->second.is_table()) return nullptr;
        cur = &std::get<Table>(it->second.data);
        rest = rest.substr(dot + 1);
    }
}
}  // namespace

bool has(const Table& t, const std::string& path) { return find(t, path) != nullptr; }

const Value& get(const Table& t, const std::string& path) {
    const Value* v = find(t, path);
    if (!v) throw ConfigError("missing config key: " + path);
    return *v;
}

double get_double(const Table& t, const std::string& path) { return get(t, path).as_double(); }
double get_double(const Table& t, const std::string& path, double fallback) {
    const Value* v = find(t, path);
    return v ? v->as_double() : fallback;
}
std::int64_t get_int(const Table& t, const std::string& path) { return get(t, path).as_int(); }
std::int64_t get_int(const Table& t, const std::string& path, std::int64_t fallback) {
    const Value* v = find(t, path);
    return v ? v->as_int() : fallback;
}
std::string get_string(const Table& t, const std::string& path) { return get(t, path).as_string(); }
std::string get_string(const Table& t, const std::string& path, const std::string& fallback) {
    const Value* v = find(t, path);
    return v ? v->as_string() : fallback;
}
bool get_bool(const Table& t, const std::string& path, bool fallback) {
    const Value* v = find(t, path);
    return v ? v->as_bool() : fallback;
}

}  // namespace qfilter::minitoml
