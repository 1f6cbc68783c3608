#include "pimhtap/workload.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "pimhtap/error.hpp"

namespace pimhtap {

namespace {

ColumnSpec col(std::string name, uint32_t width) { return {std::move(name), width, false}; }

TableSchema table(std::string name, uint64_t rows, std::vector<ColumnSpec> cols) {
    TableSchema t;
    t.name = std::move(name);
    t.row_count = rows;
    t.columns = std::move(cols);
    return t;
}

ColumnRef ref(std::string_view dotted) {
    const auto dot = dotted.find('.');
    return {std::string(dotted.substr(0, dot)), std::string(dotted.substr(dot + 1))};
}

QuerySpec query(std::string id, OperatorKind op, std::initializer_list<std::string_view> cols) {
    QuerySpec q;
    q.id = std::move(id);
    q.op = op;
    for (auto c : cols) q.columns.push_back(ref(c));
    return q;
}

uint64_t mask_for(uint32_t width) { return width >= 8 ? ~uint64_t{0} : (uint64_t{1} << (8 * width)) - 1; }

uint64_t rows_of(const Catalog& c, std::string_view t) {
    const auto i = c.find_table(t);
    return i ? c.tables[*i].row_count : 0;
}

}  // namespace

Catalog desk_catalog() {
    Catalog c;
    c.tables.push_back(table("warehouse", 4,
                             {col("w_id", 2), col("w_name", 10), col("w_street_1", 20), col("w_street_2", 20),
                              col("w_city", 20), col("w_state", 2), col("w_zip", 9), col("w_tax", 4), col("w_ytd", 8)}));
    c.tables.push_back(table("district", 40,
                             {col("d_id", 2), col("d_w_id", 2), col("d_name", 10), col("d_street_1", 20),
                              col("d_street_2", 20), col("d_city", 20), col("d_state", 2), col("d_zip", 9),
                              col("d_tax", 4), col("d_ytd", 8), col("d_next_o_id", 4)}));
    c.tables.push_back(table("customer", 12000,
                             {col("c_id", 2), col("c_d_id", 2), col("c_w_id", 4), col("c_zip", 9), col("c_state", 2),
                              col("c_credit", 2), col("c_first", 16), col("c_middle", 2), col("c_last", 16),
                              col("c_street_1", 20), col("c_street_2", 20), col("c_city", 20), col("c_phone", 16),
                              col("c_since", 8), col("c_credit_lim", 8), col("c_discount", 4), col("c_balance", 8),
                              col("c_ytd_payment", 8), col("c_payment_cnt", 2), col("c_delivery_cnt", 2),
                              col("c_data", 250)}));
    c.tables.push_back(table("history", 12000,
                             {col("h_c_id", 4), col("h_c_d_id", 2), col("h_c_w_id", 2), col("h_d_id", 2),
                              col("h_w_id", 2), col("h_date", 8), col("h_amount", 4), col("h_data", 24)}));
    c.tables.push_back(table("neworder", 36000, {col("no_o_id", 4), col("no_d_id", 2), col("no_w_id", 2)}));
    c.tables.push_back(table("orders", 12000,
                             {col("o_id", 8), col("o_d_id", 2), col("o_w_id", 2), col("o_c_id", 4), col("o_entry_d", 8),
                              col("o_carrier_id", 2), col("o_ol_cnt", 2), col("o_all_local", 2)}));
    c.tables.push_back(table("orderline", 120000,
                             {col("ol_o_id", 4), col("ol_d_id", 2), col("ol_w_id", 2), col("ol_number", 8),
                              col("ol_i_id", 8), col("ol_supply_w_id", 2), col("ol_delivery_d", 8),
                              col("ol_quantity", 8), col("ol_amount", 8), col("ol_dist_info", 24)}));
    c.tables.push_back(table("item", 40000,
                             {col("i_id", 4), col("i_im_id", 4), col("i_name", 24), col("i_price", 4), col("i_data", 50)}));
    std::vector<ColumnSpec> stock{col("s_i_id", 4), col("s_w_id", 2), col("s_quantity", 2)};
    for (int i = 1; i <= 10; ++i) stock.push_back(col("s_dist_" + std::string(i < 10 ? "0" : "") + std::to_string(i), 24));
    for (auto& x : {col("s_ytd", 4), col("s_order_cnt", 2), col("s_remote_cnt", 2), col("s_data", 50)}) stock.push_back(x);
    c.tables.push_back(table("stock", 40000, std::move(stock)));

    using K = OperatorKind;
    auto& q = c.workload.queries;
    q.push_back(query("q1_filter", K::Filter, {"orderline.ol_delivery_d"}));
    q.push_back(query("q1_agg", K::Aggregation, {"orderline.ol_number", "orderline.ol_quantity", "orderline.ol_amount"}));
    q.push_back(query("q6_filter", K::Filter, {"orderline.ol_delivery_d", "orderline.ol_quantity"}));
    q.push_back(query("q6_agg", K::Aggregation, {"orderline.ol_amount"}));
    q.push_back(query("q9_filter", K::Filter, {"item.i_id"}));
    q.push_back(query("q9_join", K::Join, {"orderline.ol_i_id", "item.i_id"}));
    q.push_back(query("q3_filter", K::Filter, {"orders.o_entry_d", "orders.o_id"}));
    q.push_back(query("c_agg", K::Aggregation, {"customer.c_w_id", "customer.c_d_id", "customer.c_id"}));
    q.push_back(query("s_filter", K::Filter, {"stock.s_w_id", "stock.s_i_id"}));
    c.workload.transaction_mix = {{"payment", 0.5}, {"new_order", 0.5}};
    return derive_key_columns(c);
}

void ExperimentConfig::validate() const {
    geometry.validate();
    catalog.validate();
    for (double t : th_list)
        if (!(t >= 0 && t <= 1)) throw ValidationError("th values must lie in [0, 1]");
    if (!(th >= 0 && th <= 1)) throw ValidationError("th must lie in [0, 1]");
    if (defrag_interval == 0) throw ValidationError("defrag_interval must be positive");
    if (!(payment_ratio >= 0 && payment_ratio <= 1)) throw ValidationError("payment_ratio must lie in [0, 1]");
    if (!(scale >= 0)) throw ValidationError("scale must be non-negative");
    if (!(txn_compute_s >= 0)) throw ValidationError("txn_compute_s must be non-negative");
}

ExperimentConfig parse_config(std::string_view json_text, const std::string& base_dir) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    ExperimentConfig c;
    auto read_text = [&](const std::string& p) {
        std::filesystem::path path(p);
        if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot open " + path.string());
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    try {
        if (j.contains("geometry"))
            c.geometry = parse_geometry(j["geometry"].is_string() ? read_text(j["geometry"].get<std::string>())
                                                                   : j["geometry"].dump());
        if (j.contains("catalog"))
            c.catalog = derive_key_columns(parse_catalog(j["catalog"].is_string()
                                                             ? read_text(j["catalog"].get<std::string>())
                                                             : j["catalog"].dump()));
        if (j.contains("th_list")) c.th_list = j["th_list"].get<std::vector<double>>();
        c.th = j.value("th", c.th);
        if (j.contains("block_size")) c.geometry.block_size = j["block_size"].get<uint32_t>();
        c.defrag_interval = j.value("defrag_interval", c.defrag_interval);
        if (j.contains("txn_counts")) c.txn_counts = j["txn_counts"].get<std::vector<uint64_t>>();
        c.transactions = j.value("transactions", c.transactions);
        c.payment_ratio = j.value("payment_ratio", c.payment_ratio);
        c.txn_compute_s = j.value("txn_compute_s", c.txn_compute_s);
        c.scale = j.value("scale", c.scale);
        c.seed = j.value("seed", c.seed);
        c.out_dir = j.value("out_dir", c.out_dir);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::filesystem::path(path).parent_path().string());
}

uint32_t Bench::id(std::string_view table) const {
    const auto it = ids.find(table);
    if (it == ids.end()) throw LookupError("no table '" + std::string(table) + "'");
    return it->second;
}

size_t Bench::column(std::string_view table, std::string_view column) const {
    return store->table(id(table)).layout().schema().index_of(column);
}

uint64_t column_value(const TableSchema& s, size_t column, uint64_t r, const Catalog& catalog, std::mt19937_64& rng) {
    const auto& c = s.columns.at(column);
    const std::string& n = c.name;
    auto uni = [&](uint64_t lo, uint64_t hi) { return std::uniform_int_distribution<uint64_t>(lo, hi)(rng); };
    const uint64_t items = std::max<uint64_t>(1, rows_of(catalog, "item"));
    uint64_t v;
    if (n == "w_id") v = r + 1;
    else if (n == "d_id") v = r % 10 + 1;
    else if (n == "d_w_id") v = r / 10 + 1;
    else if (n == "d_next_o_id") v = 3001;
    else if (n == "c_id") v = r % 300 + 1;
    else if (n == "c_d_id") v = r / 300 % 10 + 1;
    else if (n == "c_w_id") v = r / 3000 + 1;
    else if (n == "o_id") v = r + 1;
    else if (n == "o_entry_d" || n == "ol_delivery_d" || n == "h_date" || n == "c_since") v = uni(1, 1000000);
    else if (n == "ol_o_id") v = r / 10 + 1;
    else if (n == "ol_number") v = r % 10 + 1;
    else if (n == "ol_i_id") v = uni(1, items);
    else if (n == "ol_quantity") v = uni(1, 10);
    else if (n == "ol_amount" || n == "h_amount") v = uni(1, 999999);
    else if (n == "i_id") v = r + 1;
    else if (n == "i_price") v = uni(100, 10000);
    else if (n == "s_i_id") v = r % items + 1;
    else if (n == "s_w_id") v = r / items + 1;
    else if (n == "s_quantity") v = uni(10, 100);
    else v = rng();
    return v & mask_for(c.width);
}

std::vector<uint8_t> make_row(const TableSchema& s, uint64_t row, const Catalog& catalog, std::mt19937_64& rng) {
    std::vector<uint8_t> out(s.row_bytes(), 0);
    for (size_t c = 0; c < s.columns.size(); ++c) {
        const uint32_t w = s.columns[c].width;
        const uint32_t off = s.column_offset(c);
        if (w > 8) {
            for (uint32_t i = 0; i < w; ++i) out[off + i] = static_cast<uint8_t>('a' + rng() % 26);
            continue;
        }
        const uint64_t v = column_value(s, c, row, catalog, rng);
        for (uint32_t i = 0; i < w; ++i) out[off + i] = static_cast<uint8_t>(v >> (8 * i));
    }
    return out;
}

Bench generate_tables(const ExperimentConfig& config, double th) {
    Bench b;
    b.geometry = config.geometry;
    b.catalog = config.catalog;
    for (auto& t : b.catalog.tables)
        t.row_count = static_cast<uint64_t>(std::llround(static_cast<double>(t.row_count) * config.scale));
    b.th = th;
    b.memory = std::make_unique<MemorySystem>(b.geometry);
    b.memory->set_timeline_enabled(false);
    b.store = std::make_unique<MvccStore>(b.geometry, b.memory.get());
    std::mt19937_64 rng(config.seed);
    for (const auto& t : b.catalog.tables) {
        const uint32_t id = b.store->add_table(generate_compact_layout(t, b.geometry, th), t.row_count);
        b.ids.emplace(t.name, id);
        for (uint64_t r = 0; r < t.row_count; ++r) b.store->load_row(id, r, make_row(t, r, b.catalog, rng));
    }
    return b;
}

std::string_view to_string(TxnKind k) { return k == TxnKind::Payment ? "payment" : "new_order"; }

TxnGenerator::TxnGenerator(Bench& bench, uint64_t seed, double payment_ratio, double compute_s)
    : bench_(bench), rng_(seed), payment_ratio_(payment_ratio), compute_s_(compute_s) {}

TxnRecord TxnGenerator::run_one() {
    ++executed_;
    return std::bernoulli_distribution(payment_ratio_)(rng_) ? payment() : new_order();
}

std::vector<TxnRecord> TxnGenerator::run(uint64_t count) {
    std::vector<TxnRecord> out;
    out.reserve(count);
    for (uint64_t i = 0; i < count; ++i) out.push_back(run_one());
    return out;
}

void TxnGenerator::finish(TxnRecord& rec, TxnId txn) {
    auto& s = *bench_.store;
    s.set_cpu_time(s.cpu_time() + compute_s_);
    rec.commit = s.commit(txn);
    if (!rec.commit.committed) throw ContractViolation("serial transaction stream hit a write conflict");
    rec.end = s.cpu_time();
}

TxnRecord TxnGenerator::payment() {
    auto& s = *bench_.store;
    TxnRecord rec;
    rec.kind = TxnKind::Payment;
    rec.start = s.cpu_time();
    const uint32_t W = bench_.id("warehouse"), D = bench_.id("district"), C = bench_.id("customer"),
                   H = bench_.id("history");
    const auto& cat = bench_.catalog;
    const TxnId t = s.begin();
    const uint64_t amount = pick(5000) + 1;
    auto bump = [&](uint32_t table, uint64_t row, std::initializer_list<std::string_view> cols, uint64_t delta) {
        const auto& schema = s.table(table).layout().schema();
        AccessRecord a{table, row, {}, true};
        for (auto c : cols) {
            const size_t ci = schema.index_of(c);
            s.update_column(t, table, row, ci, s.read_column(t, table, row, ci) + delta);
            a.columns.push_back(static_cast<uint32_t>(ci));
        }
        rec.accesses.push_back(std::move(a));
    };
    const uint64_t nw = s.table(W).rows(), nd = s.table(D).rows(), nc = s.table(C).rows();
    if (nw) bump(W, pick(nw), {"w_ytd"}, amount);
    if (nd) bump(D, pick(nd), {"d_ytd"}, amount);
    if (nc) bump(C, pick(nc), {"c_balance", "c_ytd_payment", "c_payment_cnt"}, 1);
    const auto& hs = cat.table("history");
    const uint64_t row = s.insert(t, H, make_row(hs, s.table(H).rows(), cat, rng_));
    AccessRecord a{H, row, {}, true};
    for (uint32_t c = 0; c < hs.columns.size(); ++c) a.columns.push_back(c);
    rec.accesses.push_back(std::move(a));
    finish(rec, t);
    return rec;
}

TxnRecord TxnGenerator::new_order() {
    auto& s = *bench_.store;
    TxnRecord rec;
    rec.kind = TxnKind::NewOrder;
    rec.start = s.cpu_time();
    const auto& cat = bench_.catalog;
    const TxnId t = s.begin();
    auto read = [&](uint32_t table, uint64_t row, std::initializer_list<std::string_view> cols) {
        const auto& schema = s.table(table).layout().schema();
        AccessRecord a{table, row, {}, false};
        for (auto c : cols) {
            const size_t ci = schema.index_of(c);
            s.read_column(t, table, row, ci);
            a.columns.push_back(static_cast<uint32_t>(ci));
        }
        rec.accesses.push_back(std::move(a));
    };
    auto add = [&](std::string_view name) {
        const uint32_t id = bench_.id(name);
        const auto& schema = cat.table(name);
        const uint64_t row = s.insert(t, id, make_row(schema, s.table(id).rows(), cat, rng_));
        AccessRecord a{id, row, {}, true};
        for (uint32_t c = 0; c < schema.columns.size(); ++c) a.columns.push_back(c);
        rec.accesses.push_back(std::move(a));
    };
    const uint32_t W = bench_.id("warehouse"), D = bench_.id("district"), C = bench_.id("customer"),
                   I = bench_.id("item"), S = bench_.id("stock");
    if (const uint64_t n = s.table(W).rows()) read(W, pick(n), {"w_tax"});
    if (const uint64_t n = s.table(D).rows()) {
        const uint64_t d = pick(n);
        read(D, d, {"d_tax", "d_next_o_id"});
        const size_t ci = s.table(D).layout().schema().index_of("d_next_o_id");
        s.update_column(t, D, d, ci, s.read_column(t, D, d, ci) + 1);
        rec.accesses.push_back({D, d, {static_cast<uint32_t>(ci)}, true});
    }
    if (const uint64_t n = s.table(C).rows()) read(C, pick(n), {"c_discount", "c_last", "c_credit"});
    add("orders");
    add("neworder");
    const uint64_t lines = 5 + pick(11);
    const uint64_t ni = s.table(I).rows(), ns = s.table(S).rows();
    for (uint64_t l = 0; l < lines; ++l) {
        if (ni) read(I, pick(ni), {"i_price", "i_name", "i_data"});
        if (ns) {
            const uint64_t sr = pick(ns);
            read(S, sr, {"s_quantity", "s_dist_01", "s_data"});
            const size_t q = s.table(S).layout().schema().index_of("s_quantity");
            const uint64_t cur = s.read_column(t, S, sr, q);
            s.update_column(t, S, sr, q, cur > 20 ? cur - 5 : cur + 86);
            rec.accesses.push_back({S, sr, {static_cast<uint32_t>(q)}, true});
        }
        add("orderline");
    }
    finish(rec, t);
    return rec;
}

}  // namespace pimhtap
