#include "pimhtap/schema.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "pimhtap/error.hpp"

namespace pimhtap {

using nlohmann::json;

uint32_t TableSchema::row_bytes() const {
    uint32_t total = 0;
    for (const auto& c : columns) total += c.width;
    return total;
}

uint32_t TableSchema::column_offset(size_t index) const {
    if (index >= columns.size()) throw LookupError("column index out of range in table '" + name + "'");
    uint32_t off = 0;
    for (size_t i = 0; i < index; ++i) off += columns[i].width;
    return off;
}

std::optional<size_t> TableSchema::find(std::string_view column) const {
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == column) return i;
    return std::nullopt;
}

size_t TableSchema::index_of(std::string_view column) const {
    auto idx = find(column);
    if (!idx) throw LookupError("unknown column '" + std::string(column) + "' in table '" + name + "'");
    return *idx;
}

const ColumnSpec& TableSchema::column(std::string_view column_name) const {
    return columns[index_of(column_name)];
}

size_t TableSchema::key_count() const {
    size_t n = 0;
    for (const auto& c : columns) n += c.is_key ? 1 : 0;
    return n;
}

void TableSchema::validate() const {
    if (name.empty()) throw SchemaError("table with empty name");
    if (columns.empty()) throw SchemaError("table '" + name + "' has no columns");
    std::unordered_set<std::string> seen;
    for (const auto& c : columns) {
        if (c.name.empty()) throw SchemaError("table '" + name + "' has a column with empty name");
        if (!seen.insert(c.name).second)
            throw SchemaError("duplicate column '" + c.name + "' in table '" + name + "'");
        if (c.width == 0 || c.width > kMaxColumnWidth)
            throw SchemaError("column '" + name + "." + c.name + "' width " + std::to_string(c.width) +
                              " outside [1, " + std::to_string(kMaxColumnWidth) + "]");
    }
}

std::string_view to_string(OperatorKind kind) {
    switch (kind) {
        case OperatorKind::Filter: return "filter";
        case OperatorKind::Aggregation: return "aggregation";
        case OperatorKind::Join: return "join";
    }
    return "filter";
}

OperatorKind operator_kind_from_string(std::string_view s) {
    if (s == "filter") return OperatorKind::Filter;
    if (s == "aggregation") return OperatorKind::Aggregation;
    if (s == "join") return OperatorKind::Join;
    throw SchemaError("unknown operator kind '" + std::string(s) + "'");
}

std::optional<size_t> Catalog::find_table(std::string_view name) const {
    for (size_t i = 0; i < tables.size(); ++i)
        if (tables[i].name == name) return i;
    return std::nullopt;
}

const TableSchema& Catalog::table(std::string_view name) const {
    auto idx = find_table(name);
    if (!idx) throw LookupError("unknown table '" + std::string(name) + "'");
    return tables[*idx];
}

TableSchema& Catalog::table(std::string_view name) {
    auto idx = find_table(name);
    if (!idx) throw LookupError("unknown table '" + std::string(name) + "'");
    return tables[*idx];
}

void Catalog::validate() const {
    std::unordered_set<std::string> names;
    for (const auto& t : tables) {
        t.validate();
        if (!names.insert(t.name).second) throw SchemaError("duplicate table '" + t.name + "'");
    }
    for (const auto& q : workload.queries) {
        for (const auto& ref : q.columns) {
            auto t = find_table(ref.table);
            if (!t || !tables[*t].find(ref.column))
                throw ValidationError("query '" + q.id + "' references unknown column '" + ref.table + "." +
                                      ref.column + "'");
        }
    }
    for (const auto& m : workload.transaction_mix)
        if (m.weight < 0.0) throw ValidationError("negative transaction weight for '" + m.kind + "'");
}

TableSchema derive_key_columns(const TableSchema& schema, const WorkloadSpec& workload) {
    TableSchema out = schema;
    for (const auto& q : workload.queries) {
        for (const auto& ref : q.columns) {
            if (!ref.table.empty() && ref.table != schema.name) continue;
            auto idx = out.find(ref.column);
            if (!idx)
                throw ValidationError("query '" + q.id + "' references unknown column '" + schema.name + "." +
                                      ref.column + "'");
            out.columns[*idx].is_key = true;
        }
    }
    return out;
}

Catalog derive_key_columns(const Catalog& catalog) {
    catalog.validate();
    Catalog out = catalog;
    for (auto& t : out.tables) t = derive_key_columns(t, catalog.workload);
    return out;
}

namespace {

ColumnRef parse_ref(const std::string& s) {
    auto dot = s.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 == s.size())
        throw SchemaError("column reference '" + s + "' must look like table.column");
    return {s.substr(0, dot), s.substr(dot + 1)};
}

ColumnSpec parse_column(const json& j, const std::string& table) {
    ColumnSpec c;
    c.name = j.at("name").get<std::string>();
    if (j.value("nullable", false))
        throw SchemaError("column '" + table + "." + c.name + "' is nullable; only NOT NULL columns are supported");
    if (j.value("variable_width", false))
        throw SchemaError("column '" + table + "." + c.name + "' is variable-width; only fixed-width columns are supported");
    auto w = j.at("width").get<int64_t>();
    if (w <= 0 || w > static_cast<int64_t>(kMaxColumnWidth))
        throw SchemaError("column '" + table + "." + c.name + "' width " + std::to_string(w) + " outside [1, " +
                          std::to_string(kMaxColumnWidth) + "]");
    c.width = static_cast<uint32_t>(w);
    c.is_key = j.value("key", false);
    return c;
}

}  // namespace

Catalog parse_catalog(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("catalog is not valid JSON: ") + e.what());
    }
    Catalog cat;
    try {
        for (const auto& jt : root.at("tables")) {
            TableSchema t;
            t.name = jt.at("name").get<std::string>();
            t.row_count = jt.value("row_count", uint64_t{0});
            for (const auto& jc : jt.at("columns")) t.columns.push_back(parse_column(jc, t.name));
            cat.tables.push_back(std::move(t));
        }
        if (root.contains("queries")) {
            for (const auto& jq : root.at("queries")) {
                QuerySpec q;
                q.id = jq.at("id").get<std::string>();
                q.op = operator_kind_from_string(jq.at("op").get<std::string>());
                for (const auto& jr : jq.at("columns")) q.columns.push_back(parse_ref(jr.get<std::string>()));
                cat.workload.queries.push_back(std::move(q));
            }
        }
        if (root.contains("transactions")) {
            for (const auto& jm : root.at("transactions"))
                cat.workload.transaction_mix.push_back({jm.at("kind").get<std::string>(), jm.at("weight").get<double>()});
        }
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed catalog: ") + e.what());
    }
    cat.validate();
    return cat;
}

std::string dump_catalog(const Catalog& catalog) {
    json root;
    root["tables"] = json::array();
    for (const auto& t : catalog.tables) {
        json jt;
        jt["name"] = t.name;
        jt["row_count"] = t.row_count;
        jt["columns"] = json::array();
        for (const auto& c : t.columns) jt["columns"].push_back({{"name", c.name}, {"width", c.width}, {"key", c.is_key}});
        root["tables"].push_back(std::move(jt));
    }
    root["queries"] = json::array();
    for (const auto& q : catalog.workload.queries) {
        json jq{{"id", q.id}, {"op", std::string(to_string(q.op))}, {"columns", json::array()}};
        for (const auto& r : q.columns) jq["columns"].push_back(r.table + "." + r.column);
        root["queries"].push_back(std::move(jq));
    }
    root["transactions"] = json::array();
    for (const auto& m : catalog.workload.transaction_mix)
        root["transactions"].push_back({{"kind", m.kind}, {"weight", m.weight}});
    return root.dump(2);
}

Catalog load_catalog(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LookupError("cannot open catalog file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_catalog(ss.str());
}

void save_catalog(const Catalog& catalog, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw LookupError("cannot write catalog file '" + path + "'");
    out << dump_catalog(catalog) << '\n';
}

}  // namespace pimhtap
