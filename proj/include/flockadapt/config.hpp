#pragma once

// Reader for the small TOML subset used by scenario files: [section] and
// [[array]] headers, `key = value` pairs with numbers, strings, booleans and
// (possibly multi-line) arrays, and `#` comments.

#include <flockadapt/error.hpp>

#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace flockadapt::config {

struct Value;
using Array = std::vector<Value>;

struct Value
{
    std::variant<double, std::string, bool, Array> data;
    bool integer = false; ///< number written without fraction or exponent
    int line = 0;
    int column = 0;

    bool is_number() const { return std::holds_alternative<double>(data); }
    bool is_string() const { return std::holds_alternative<std::string>(data); }
    bool is_bool() const { return std::holds_alternative<bool>(data); }
    bool is_array() const { return std::holds_alternative<Array>(data); }
};

struct Table
{
    std::map<std::string, Value> entries;
    int line = 0;
};

struct Document
{
    std::map<std::string, Table> tables;
    std::map<std::string, std::vector<Table>> array_tables;
};

/// Throws ParseError with the 1-based line and column of the first problem.
Document parse(std::string_view text);

} // namespace flockadapt::config
