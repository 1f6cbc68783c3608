#pragma once

#include <cstdint>
#include <string>

namespace pimhtap::verify {

struct SnapshotOracleReport {
    uint64_t transactions = 0;
    uint64_t committed = 0;
    uint64_t checks = 0;      // snapshots compared
    uint64_t rows_checked = 0;
    uint64_t mismatches = 0;
};

// Random interleaved history (updates, inserts, deletes, aborts, occasional
// collapses); at checkpoints every row's bitmap visibility is compared with a
// brute-force chain walk.
SnapshotOracleReport snapshot_history(uint64_t seed, uint64_t transactions, uint64_t rows, uint32_t checkpoints = 10);

struct QueryOracleReport {
    uint64_t queries = 0;
    uint64_t mismatches = 0;
    uint64_t cpu_fallbacks = 0;
    std::string first_failure;
};

// Random tables with deltas, filter / group-sum / sum / hash-join through
// the PIM runtime compared with the reference executor.
QueryOracleReport query_round(uint64_t seed, uint64_t rows);

}  // namespace pimhtap::verify
