#include <gtest/gtest.h>

#include "pimhtap/error.hpp"
#include "pimhtap/schema.hpp"
#include "pimhtap/workload.hpp"

using namespace pimhtap;

namespace {

TableSchema customer_like() {
    TableSchema t;
    t.name = "customer";
    t.row_count = 100;
    t.columns = {{"id", 2}, {"d_id", 2}, {"w_id", 4}, {"zip", 9}, {"state", 2}, {"credit", 2}};
    return t;
}

QuerySpec scan(std::string id, std::vector<std::string> cols) {
    QuerySpec q;
    q.id = std::move(id);
    for (auto& c : cols) q.columns.push_back({"customer", c});
    return q;
}

}  // namespace

TEST(Schema, KeyColumnsFollowQueries) {
    WorkloadSpec w;
    w.queries.push_back(scan("q", {"id", "d_id", "w_id"}));
    const auto t = derive_key_columns(customer_like(), w);
    for (const auto* k : {"id", "d_id", "w_id"}) EXPECT_TRUE(t.column(k).is_key) << k;
    for (const auto* n : {"zip", "state", "credit"}) EXPECT_FALSE(t.column(n).is_key) << n;
}

TEST(Schema, EmptyWorkloadLeavesEverythingNormal) {
    const auto t = derive_key_columns(customer_like(), WorkloadSpec{});
    EXPECT_EQ(t.key_count(), 0u);
}

TEST(Schema, FullScanMakesEverythingKey) {
    WorkloadSpec w;
    w.queries.push_back(scan("all", {"id", "d_id", "w_id", "zip", "state", "credit"}));
    EXPECT_EQ(derive_key_columns(customer_like(), w).key_count(), 6u);
}

TEST(Schema, UnresolvedReferenceRaises) {
    WorkloadSpec w;
    w.queries.push_back(scan("bad", {"nope"}));
    EXPECT_THROW(derive_key_columns(customer_like(), w), ValidationError);
}

TEST(Schema, ValidationRejectsBadColumns) {
    auto t = customer_like();
    t.columns.push_back({"id", 4});
    EXPECT_THROW(t.validate(), SchemaError);
    t = customer_like();
    t.columns[0].width = 0;
    EXPECT_THROW(t.validate(), SchemaError);
    t = customer_like();
    t.columns[0].width = kMaxColumnWidth + 1;
    EXPECT_THROW(t.validate(), SchemaError);
}

TEST(Schema, OffsetsAndLookup) {
    const auto t = customer_like();
    EXPECT_EQ(t.row_bytes(), 21u);
    EXPECT_EQ(t.column_offset(3), 8u);
    EXPECT_EQ(t.index_of("zip"), 3u);
    EXPECT_FALSE(t.find("missing"));
    EXPECT_THROW(t.index_of("missing"), LookupError);
}

TEST(Schema, CatalogJsonRoundTrip) {
    const Catalog c = desk_catalog();
    const Catalog back = parse_catalog(dump_catalog(c));
    EXPECT_EQ(back, c);
    EXPECT_NO_THROW(back.validate());
}

TEST(Schema, OperatorKindStrings) {
    for (auto k : {OperatorKind::Filter, OperatorKind::Aggregation, OperatorKind::Join})
        EXPECT_EQ(operator_kind_from_string(to_string(k)), k);
    EXPECT_THROW(operator_kind_from_string("scan"), Error);
}
