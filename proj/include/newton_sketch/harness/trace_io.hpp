#pragma once

#include "newton_sketch/core.hpp"
#include "newton_sketch/solver.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace nsketch::harness {

inline constexpr const char* kTraceHeader = "iter,f_value,opt_gap,decrement_sq,step_size,backtracks,wallclock_ns";

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// CSV body of a trace. opt_gap is f_value - f_star when a reference
/// optimum is known, "nan" otherwise.
inline std::string trace_csv(const SolveResult& result, std::optional<double> f_star) {
    std::ostringstream out;
    out << kTraceHeader << '\n';
    for (const auto& r : result.records) {
        out << r.t << ',' << format_double(r.f_value) << ','
            << (f_star ? format_double(r.f_value - *f_star) : std::string("nan")) << ','
            << format_double(r.decrement_sq) << ',' << format_double(r.step_size) << ',' << r.backtracks << ','
            << r.wallclock_ns << '\n';
    }
    return out.str();
}

inline std::int64_t total_wallclock_ns(const SolveResult& result) {
    std::int64_t total = 0;
    for (const auto& r : result.records) total += r.wallclock_ns;
    return total;
}

inline nlohmann::json trace_summary(const SolveResult& result, const nlohmann::json& config,
                                    std::optional<double> f_star) {
    nlohmann::json j;
    j["config"] = config;
    j["converged"] = result.converged;
    j["iters"] = result.records.size();
    j["total_wallclock_ns"] = total_wallclock_ns(result);
    if (f_star) {
        j["final_gap"] = result.f_final - *f_star;
        j["f_star"] = *f_star;
    } else {
        j["final_gap"] = nullptr;
        j["f_star"] = nullptr;
    }
    return j;
}

/// Writes `content` to `path` through a temporary file and a rename, so a
/// reader never observes a partially written file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
        out << content;
        if (!out) throw Error("write to '" + tmp.string() + "' failed");
    }
    std::filesystem::rename(tmp, path);
}

inline void write_trace(const std::filesystem::path& dir, const std::string& stem, const SolveResult& result,
                        const nlohmann::json& config, std::optional<double> f_star) {
    write_file_atomic(dir / (stem + ".csv"), trace_csv(result, f_star));
    write_file_atomic(dir / (stem + ".json"), trace_summary(result, config, f_star).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Dense matrix CSV: a "# rows,cols" comment line, then row-major values.

inline std::string matrix_to_csv(const Matrix& M) {
    std::ostringstream out;
    out << "# " << M.rows() << ',' << M.cols() << '\n';
    for (Index i = 0; i < M.rows(); ++i) {
        for (Index j = 0; j < M.cols(); ++j) {
            if (j) out << ',';
            out << format_double(M(i, j));
        }
        out << '\n';
    }
    return out.str();
}

inline Matrix matrix_from_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.empty() || line[0] != '#')
        throw InvalidParameter("matrix csv: missing '# rows,cols' header line");
    long long rows = 0, cols = 0;
    if (std::sscanf(line.c_str(), "# %lld , %lld", &rows, &cols) != 2 || rows < 0 || cols < 0)
        throw InvalidParameter("matrix csv: malformed header '" + line + "'");
    Matrix M(rows, cols);
    for (long long i = 0; i < rows; ++i) {
        if (!std::getline(in, line)) throw InvalidParameter("matrix csv: expected " + std::to_string(rows) + " rows");
        std::istringstream row(line);
        std::string cell;
        long long j = 0;
        while (std::getline(row, cell, ',')) {
            if (j >= cols) throw InvalidParameter("matrix csv: too many columns in row " + std::to_string(i));
            try {
                M(i, j++) = std::stod(cell);
            } catch (const std::exception&) {
                throw InvalidParameter("matrix csv: bad value '" + cell + "' in row " + std::to_string(i));
            }
        }
        if (j != cols) throw InvalidParameter("matrix csv: row " + std::to_string(i) + " has " + std::to_string(j) +
                                              " columns, expected " + std::to_string(cols));
    }
    return M;
}

inline Matrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParameter("cannot open matrix file '" + path.string() + "'");
    return matrix_from_csv(in);
}

// ---------------------------------------------------------------------------
// Flat key=value configuration; '#' starts a comment.

inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
    std::map<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto first = s.find_first_not_of(" \t\r");
        if (first == std::string::npos) return std::string();
        const auto last = s.find_last_not_of(" \t\r");
        return s.substr(first, last - first + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidParameter("config line " + std::to_string(lineno) + ": expected key=value");
        std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw InvalidParameter("config line " + std::to_string(lineno) + ": empty key");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

}  // namespace nsketch::harness
