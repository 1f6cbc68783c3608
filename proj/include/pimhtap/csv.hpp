#pragma once

#include <initializer_list>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace pimhtap {

inline constexpr int kCsvVersion = 1;

// Writes "# pimhtap-<kind> v<version>" followed by the column header.
class CsvWriter {
public:
    CsvWriter(std::ostream& out, std::string_view kind, std::vector<std::string> columns);

    template <typename... Ts>
    void row(const Ts&... values) {
        std::vector<std::string> cells;
        cells.reserve(sizeof...(Ts));
        (cells.push_back(cell(values)), ...);
        write(cells);
    }

    void write(const std::vector<std::string>& cells);
    size_t columns() const { return columns_.size(); }

private:
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(std::string_view s) { return std::string(s); }
    static std::string cell(const char* s) { return s; }
    static std::string cell(double v);
    template <typename T>
    static std::string cell(const T& v) {
        std::ostringstream os;
        os << v;
        return os.str();
    }

    std::ostream& out_;
    std::vector<std::string> columns_;
};

// Parses text produced by CsvWriter: returns header and rows, skipping the
// version line. Cells are not quoted by the writer, so none are unquoted here.
struct CsvTable {
    std::string kind;
    int version = 0;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);

}  // namespace pimhtap
