#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vtsim {

std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::vector<std::string> split_ws(std::string_view line);
std::string trim(std::string_view s);

// Parses a number with optional SPICE engineering suffix:
// f, p, n, u, m, k, meg (case-insensitive). Trailing unit letters are
// ignored ("25ns" == "25n"). Returns nullopt on malformed input.
std::optional<double> parse_eng(std::string_view text);

// Shortest representation that round-trips a double exactly.
std::string format_full(double v);
// Fixed 12-significant-digit form used in result tables.
std::string format_table(double v);

// One "key = value" per line, '#' and empty lines skipped.
struct KeyValueFile {
    std::vector<std::pair<std::string, std::string>> entries;

    // Throws CardError with <origin>:<line> on malformed lines.
    static KeyValueFile parse(std::string_view text, std::string_view origin);
    static KeyValueFile load(const std::string& path);

    const std::string* find(std::string_view key) const;
};

std::string read_text_file(const std::string& path);   // throws SimError
void write_text_file(const std::string& path, std::string_view content);

// Runs fn(0..count-1) on up to `jobs` threads. Exceptions are rethrown on
// the caller thread after all workers join. jobs == 0 picks a default.
void parallel_for_indexed(std::size_t count, unsigned jobs,
                          const std::function<void(std::size_t)>& fn);

}  // namespace vtsim
