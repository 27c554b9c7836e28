#include "vtsim/util.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "vtsim/errors.hpp"

namespace vtsim {

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    }
    return true;
}

std::vector<std::string> split_ws(std::string_view line) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > start) out.emplace_back(line.substr(start, i - start));
    }
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::optional<double> parse_eng(std::string_view text) {
    std::string s = trim(text);
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || errno == ERANGE) return std::nullopt;

    std::string suffix = to_lower(std::string_view(end));
    if (suffix.empty()) return v;
    // All remaining characters must be letters (a unit tail is tolerated).
    for (char c : suffix) {
        if (!std::isalpha(static_cast<unsigned char>(c))) return std::nullopt;
    }
    double scale = 1.0;
    if (suffix.rfind("meg", 0) == 0) {
        scale = 1e6;
    } else {
        switch (suffix[0]) {
            case 'f': scale = 1e-15; break;
            case 'p': scale = 1e-12; break;
            case 'n': scale = 1e-9; break;
            case 'u': scale = 1e-6; break;
            case 'm': scale = 1e-3; break;
            case 'k': scale = 1e3; break;
            default: return std::nullopt;  // unknown suffix letter
        }
    }
    return v * scale;
}

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_table(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

KeyValueFile KeyValueFile::parse(std::string_view text, std::string_view origin) {
    KeyValueFile kv;
    std::size_t pos = 0;
    int lineno = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        ++lineno;
        pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;

        std::string stripped = trim(line.substr(0, line.find('#')));
        if (stripped.empty()) continue;
        std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw CardError(std::string(origin) + ":" + std::to_string(lineno) +
                            ": expected 'key = value', got '" + stripped + "'");
        }
        std::string key = trim(std::string_view(stripped).substr(0, eq));
        std::string value = trim(std::string_view(stripped).substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw CardError(std::string(origin) + ":" + std::to_string(lineno) +
                            ": empty key or value");
        }
        kv.entries.emplace_back(to_lower(key), value);
    }
    return kv;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
    return parse(read_text_file(path), path);
}

const std::string* KeyValueFile::find(std::string_view key) const {
    for (const auto& [k, v] : entries) {
        if (k == key) return &v;
    }
    return nullptr;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SimError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw SimError("cannot write file: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw SimError("write failed: " + path);
}

void parallel_for_indexed(std::size_t count, unsigned jobs,
                          const std::function<void(std::size_t)>& fn) {
    if (jobs == 0) {
        unsigned hw = std::thread::hardware_concurrency();
        jobs = hw == 0 ? 1 : std::min(hw, 8u);
    }
    jobs = std::min<std::size_t>(jobs, count == 0 ? 1 : count);
    if (jobs <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(jobs);
    std::atomic<std::size_t> next{0};
    for (unsigned t = 0; t < jobs; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (;;) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= count) break;
                    fn(i);
                }
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace vtsim
