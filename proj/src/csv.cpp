#include "pimhtap/csv.hpp"

#include <cstdio>

#include "pimhtap/error.hpp"

namespace pimhtap {

CsvWriter::CsvWriter(std::ostream& out, std::string_view kind, std::vector<std::string> columns)
    : out_(out), columns_(std::move(columns)) {
    out_ << "# pimhtap-" << kind << " v" << kCsvVersion << '\n';
    write(columns_);
}

std::string CsvWriter::cell(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void CsvWriter::write(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size()) throw ValidationError("CSV row width does not match header");
    for (size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].find_first_of(",\n") != std::string::npos)
            throw ValidationError("CSV cell contains a separator: '" + cells[i] + "'");
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

size_t CsvTable::column(std::string_view name) const {
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw LookupError("CSV has no column '" + std::string(name) + "'");
}

namespace {

std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        out.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

CsvTable parse_csv(std::string_view text) {
    CsvTable t;
    size_t pos = 0;
    bool have_header = false;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        if (line.empty()) continue;
        if (line.starts_with("# pimhtap-")) {
            auto sp = line.rfind(" v");
            if (sp == std::string_view::npos) throw ValidationError("bad CSV version line");
            t.kind = std::string(line.substr(10, sp - 10));
            t.version = std::stoi(std::string(line.substr(sp + 2)));
            continue;
        }
        if (!have_header) {
            t.header = split(line);
            have_header = true;
        } else {
            t.rows.push_back(split(line));
            if (t.rows.back().size() != t.header.size()) throw ValidationError("CSV row width does not match header");
        }
    }
    if (!have_header) throw ValidationError("CSV has no header");
    return t;
}

}  // namespace pimhtap
