#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pimhtap {

inline constexpr uint32_t kMaxColumnWidth = 255;

struct ColumnSpec {
    std::string name;
    uint32_t width = 1;  // bytes, fixed
    bool is_key = false;

    bool operator==(const ColumnSpec&) const = default;
};

struct TableSchema {
    std::string name;
    std::vector<ColumnSpec> columns;
    uint64_t row_count = 0;

    // Sum of column widths: the size of one logical row image.
    uint32_t row_bytes() const;
    // Offset of a column inside the logical row image (declaration order).
    uint32_t column_offset(size_t index) const;
    std::optional<size_t> find(std::string_view column) const;
    // Throws LookupError when the column does not exist.
    size_t index_of(std::string_view column) const;
    const ColumnSpec& column(std::string_view name) const;
    size_t key_count() const;

    // Throws SchemaError on empty / duplicate names or out-of-range widths.
    void validate() const;

    bool operator==(const TableSchema&) const = default;
};

enum class OperatorKind { Filter, Aggregation, Join };

std::string_view to_string(OperatorKind kind);
OperatorKind operator_kind_from_string(std::string_view s);

struct ColumnRef {
    std::string table;
    std::string column;

    bool operator==(const ColumnRef&) const = default;
};

struct QuerySpec {
    std::string id;
    OperatorKind op = OperatorKind::Filter;
    std::vector<ColumnRef> columns;

    bool operator==(const QuerySpec&) const = default;
};

struct TxnWeight {
    std::string kind;
    double weight = 0.0;

    bool operator==(const TxnWeight&) const = default;
};

struct WorkloadSpec {
    std::vector<QuerySpec> queries;
    std::vector<TxnWeight> transaction_mix;

    bool operator==(const WorkloadSpec&) const = default;
};

struct Catalog {
    std::vector<TableSchema> tables;
    WorkloadSpec workload;

    const TableSchema& table(std::string_view name) const;
    TableSchema& table(std::string_view name);
    std::optional<size_t> find_table(std::string_view name) const;

    // Schema checks on every table plus resolution of all query references.
    void validate() const;

    bool operator==(const Catalog&) const = default;
};

// Marks every column referenced by an analytical query on `schema` as a key
// column. References to other tables are ignored; an unresolved reference to
// this table raises ValidationError. Existing key flags are kept.
TableSchema derive_key_columns(const TableSchema& schema, const WorkloadSpec& workload);

// Applies derive_key_columns to every table; any unresolved reference raises.
Catalog derive_key_columns(const Catalog& catalog);

// JSON (de)serialisation. Round-trips losslessly, derived key flags included.
Catalog parse_catalog(std::string_view json_text);
std::string dump_catalog(const Catalog& catalog);
Catalog load_catalog(const std::string& path);
void save_catalog(const Catalog& catalog, const std::string& path);

}  // namespace pimhtap
