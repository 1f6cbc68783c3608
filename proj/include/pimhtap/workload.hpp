#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "pimhtap/geometry.hpp"
#include "pimhtap/layout.hpp"
#include "pimhtap/memory_model.hpp"
#include "pimhtap/mvcc_store.hpp"
#include "pimhtap/schema.hpp"

namespace pimhtap {

// CH-like catalog at desk scale: nine tables, 10^4-10^5 rows for the large
// ones, key columns derived from a Q1/Q6/Q9-like query set.
Catalog desk_catalog();

struct ExperimentConfig {
    Geometry geometry;
    Catalog catalog = desk_catalog();
    std::vector<double> th_list{0, 0.25, 0.5, 0.6, 0.75, 1};
    double th = 0.6;                        // layout threshold for the simulation experiments
    uint64_t defrag_interval = 10000;       // transactions between defragmentations
    std::vector<uint64_t> txn_counts{2500, 5000, 10000, 20000};
    uint64_t transactions = 10000;          // stream length for oltp_time / frontier
    double payment_ratio = 0.5;             // rest are NewOrder
    double txn_compute_s = 2e-6;            // CPU work per transaction outside memory stalls
    double scale = 1.0;                     // row-count multiplier
    uint64_t seed = 42;
    std::string out_dir = "results";

    void validate() const;
};

// JSON keys mirror the field names; "geometry" and "catalog" accept either an
// inline object or a path relative to the config file.
ExperimentConfig parse_config(std::string_view json_text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

// A populated store with its memory model.
struct Bench {
    Geometry geometry;
    Catalog catalog;
    double th = 0;
    std::unique_ptr<MemorySystem> memory;
    std::unique_ptr<MvccStore> store;
    std::map<std::string, uint32_t, std::less<>> ids;

    uint32_t id(std::string_view table) const;
    size_t column(std::string_view table, std::string_view column) const;
};

// Value a generated row holds in a column; also used to build inserts.
uint64_t column_value(const TableSchema& schema, size_t column, uint64_t row, const Catalog& catalog,
                      std::mt19937_64& rng);
std::vector<uint8_t> make_row(const TableSchema& schema, uint64_t row, const Catalog& catalog, std::mt19937_64& rng);

// Deterministic in (catalog, geometry, th, scale, seed).
Bench generate_tables(const ExperimentConfig& config, double th);

enum class TxnKind { Payment, NewOrder };
std::string_view to_string(TxnKind k);

// One logical row touch: which columns a statement needed.
struct AccessRecord {
    uint32_t table = 0;
    uint64_t row = 0;
    std::vector<uint32_t> columns;
    bool write = false;
};

struct TxnRecord {
    TxnKind kind = TxnKind::Payment;
    std::vector<AccessRecord> accesses;
    CommitResult commit;
    double start = 0;
    double end = 0;
};

// Payment / NewOrder stream over a Bench.
class TxnGenerator {
public:
    TxnGenerator(Bench& bench, uint64_t seed, double payment_ratio = 0.5, double compute_s = 2e-6);

    TxnRecord run_one();
    std::vector<TxnRecord> run(uint64_t count);
    uint64_t executed() const { return executed_; }

private:
    TxnRecord payment();
    TxnRecord new_order();
    uint64_t pick(uint64_t n) { return std::uniform_int_distribution<uint64_t>(0, n - 1)(rng_); }
    void finish(TxnRecord& rec, TxnId txn);

    Bench& bench_;
    std::mt19937_64 rng_;
    double payment_ratio_;
    double compute_s_;
    uint64_t executed_ = 0;
};

}  // namespace pimhtap
