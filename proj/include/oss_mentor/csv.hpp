#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include "oss_mentor/types.hpp"

namespace oss_mentor {

/// Minimal CSV writer. Doubles are written with 17 significant digits so a
/// reader recovers the exact value.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
        if (!out_) throw InputError("cannot write " + path.string());
        for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
        out_ << '\n';
    }

    template <typename... Cells>
    void row(const Cells&... cells) {
        std::size_t i = 0;
        ((out_ << (i++ ? "," : "") << format(cells)), ...);
        out_ << '\n';
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << quote(cells[i]);
        out_ << '\n';
    }

    template <typename T>
    static std::string format(const T& value) {
        if constexpr (std::is_floating_point_v<T>) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", static_cast<double>(value));
            return buf;
        } else if constexpr (std::is_same_v<T, bool>) {
            return value ? "1" : "0";
        } else if constexpr (std::is_arithmetic_v<T>) {
            return std::to_string(value);
        } else {
            return quote(std::string(value));
        }
    }

    /// RFC 4180 quoting for cells holding commas, quotes or newlines.
    static std::string quote(std::string cell) {
        if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
        std::string out = "\"";
        for (char c : cell) {
            if (c == '"') out += '"';
            out += c;
        }
        return out + '"';
    }

private:
    std::ofstream out_;
};

}  // namespace oss_mentor
