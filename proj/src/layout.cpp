#include "pimhtap/layout.hpp"

#include <algorithm>
#include <sstream>

#include "pimhtap/error.hpp"

namespace pimhtap {

uint32_t DeviceSlot::used() const {
    uint32_t n = 0;
    for (const auto& e : entries) n += e.length;
    return n;
}

uint32_t PartLayout::data_bytes() const {
    uint32_t n = 0;
    for (const auto& d : devices) n += d.used();
    return n;
}

uint32_t PartLayout::padding_bytes() const {
    return static_cast<uint32_t>(devices.size()) * row_width - data_bytes();
}

TableLayout::TableLayout(TableSchema schema, std::vector<PartLayout> parts, const Geometry& geometry,
                         double threshold, LayoutKind kind)
    : schema_(std::move(schema)),
      parts_(std::move(parts)),
      devices_(geometry.devices_per_rank),
      block_size_(geometry.block_size),
      ranks_per_channel_(geometry.ranks_per_channel),
      banks_per_device_(geometry.banks_per_device),
      threshold_(threshold),
      kind_(kind) {
    fragments_.resize(schema_.columns.size());
    for (const auto& p : parts_) {
        if (p.devices.size() != devices_) throw LayoutError("part device count does not match geometry");
        for (uint32_t dev = 0; dev < devices_; ++dev) {
            uint32_t cursor = 0;
            for (const auto& e : p.devices[dev].entries) {
                if (e.column >= schema_.columns.size()) throw LayoutError("slot entry names an unknown column");
                if (e.device_offset < cursor || e.device_offset + e.length > p.row_width)
                    throw LayoutError("overlapping or oversized slot entry in part " + std::to_string(p.part_id));
                cursor = e.device_offset + e.length;
                fragments_[e.column].push_back({p.part_id, dev, e.device_offset, e.column_begin, e.length});
            }
        }
    }
    for (size_t c = 0; c < fragments_.size(); ++c) {
        auto& fr = fragments_[c];
        std::sort(fr.begin(), fr.end(), [](const Fragment& a, const Fragment& b) { return a.column_begin < b.column_begin; });
        uint32_t expect = 0;
        for (const auto& f : fr) {
            if (f.column_begin != expect) throw LayoutError("column '" + schema_.columns[c].name + "' is not fully covered");
            expect += f.length;
        }
        if (expect != schema_.columns[c].width)
            throw LayoutError("column '" + schema_.columns[c].name + "' is not fully covered");
        if (schema_.columns[c].is_key && fr.size() != 1)
            throw LayoutError("key column '" + schema_.columns[c].name + "' is split across devices");
    }
}

const std::vector<Fragment>& TableLayout::fragments(std::string_view column) const {
    return fragments_.at(schema_.index_of(column));
}

uint64_t TableLayout::footprint_per_row() const {
    uint64_t n = 0;
    for (const auto& p : parts_) n += uint64_t{devices_} * p.row_width;
    return n;
}

uint64_t TableLayout::padding_per_row() const {
    uint64_t n = 0;
    for (const auto& p : parts_) n += p.padding_bytes();
    return n;
}

double TableLayout::padding_fraction() const {
    auto total = footprint_per_row();
    return total == 0 ? 0.0 : static_cast<double>(padding_per_row()) / static_cast<double>(total);
}

uint32_t TableLayout::bank_slot(uint64_t block) const {
    return static_cast<uint32_t>((block / devices_) % bank_slots());
}

uint64_t TableLayout::local_block(uint64_t block) const {
    return block / (uint64_t{devices_} * bank_slots()) * devices_ + block % devices_;
}

RankId TableLayout::rank_of_block(uint32_t part, uint64_t block) const {
    return {parts_.at(part).channel, bank_slot(block) / banks_per_device_};
}

uint32_t TableLayout::bank_of_block(uint64_t block) const { return bank_slot(block) % banks_per_device_; }

std::string TableLayout::to_text() const {
    std::ostringstream os;
    os << "table " << schema_.name << " kind=" << (kind_ == LayoutKind::Naive ? "naive" : "compact")
       << " th=" << threshold_ << " devices=" << devices_ << " block_size=" << block_size_
       << " parts=" << parts_.size() << " padding_fraction=" << padding_fraction() << '\n';
    for (const auto& p : parts_) {
        os << "part " << p.part_id << " channel=" << p.channel << " row_width=" << p.row_width
           << " data=" << p.data_bytes() << " padding=" << p.padding_bytes() << '\n';
        for (uint32_t dev = 0; dev < devices_; ++dev) {
            os << "  device " << dev << ':';
            uint32_t cursor = 0;
            for (const auto& e : p.devices[dev].entries) {
                if (e.device_offset > cursor) os << " pad@" << cursor << '+' << (e.device_offset - cursor);
                const auto& col = schema_.columns[e.column];
                os << ' ' << col.name << (col.is_key ? "*" : "") << '[' << e.column_begin << ','
                   << (e.column_begin + e.length) << ")@" << e.device_offset;
                cursor = e.device_offset + e.length;
            }
            if (cursor < p.row_width) os << " pad@" << cursor << '+' << (p.row_width - cursor);
            os << '\n';
        }
    }
    return os.str();
}

TableLayout generate_naive_layout(const TableSchema& schema, const Geometry& geometry) {
    schema.validate();
    geometry.validate();
    const uint32_t d = geometry.devices_per_rank;
    std::vector<PartLayout> parts;
    for (size_t first = 0; first < schema.columns.size(); first += d) {
        PartLayout p;
        p.part_id = static_cast<uint32_t>(parts.size());
        p.channel = p.part_id % geometry.channels;
        p.devices.resize(d);
        size_t last = std::min(schema.columns.size(), first + d);
        for (size_t c = first; c < last; ++c) {
            const auto w = schema.columns[c].width;
            if (w > kMaxColumnWidth)
                throw LayoutError("column '" + schema.columns[c].name + "' exceeds the per-device stride limit");
            p.row_width = std::max(p.row_width, w);
            p.devices[c - first].entries.push_back({static_cast<uint32_t>(c), 0, w, 0});
        }
        parts.push_back(std::move(p));
    }
    return TableLayout(schema, std::move(parts), geometry, 0.0, LayoutKind::Naive);
}

TableLayout generate_compact_layout(const TableSchema& schema, const Geometry& geometry, double th) {
    schema.validate();
    geometry.validate();
    if (!(th >= 0.0 && th <= 1.0)) throw ValidationError("threshold must lie in [0, 1]");
    const uint32_t d = geometry.devices_per_rank;

    std::vector<uint32_t> keys;
    struct Normal {
        uint32_t column;
        uint32_t width;
        uint32_t remaining;
    };
    std::vector<Normal> normals;
    for (uint32_t c = 0; c < schema.columns.size(); ++c) {
        if (schema.columns[c].is_key)
            keys.push_back(c);
        else
            normals.push_back({c, schema.columns[c].width, schema.columns[c].width});
    }
    std::stable_sort(keys.begin(), keys.end(),
                     [&](uint32_t a, uint32_t b) { return schema.columns[a].width > schema.columns[b].width; });

    auto normals_left = [&] {
        return std::any_of(normals.begin(), normals.end(), [](const Normal& n) { return n.remaining > 0; });
    };

    std::vector<PartLayout> parts;
    while (!keys.empty() || normals_left()) {
        PartLayout p;
        p.part_id = static_cast<uint32_t>(parts.size());
        p.channel = p.part_id % geometry.channels;
        p.devices.resize(d);
        std::vector<uint32_t> fill(d, 0);

        if (!keys.empty()) {
            const uint32_t anchor = keys.front();
            p.row_width = schema.columns[anchor].width;
            std::vector<uint32_t> placed{anchor};
            std::vector<uint32_t> deferred;
            const double limit = th * p.row_width;
            for (size_t i = 1; i < keys.size(); ++i) {
                uint32_t c = keys[i];
                if (placed.size() < d && schema.columns[c].width + 1e-9 >= limit)
                    placed.push_back(c);
                else
                    deferred.push_back(c);
            }
            for (uint32_t dev = 0; dev < placed.size(); ++dev) {
                const auto w = schema.columns[placed[dev]].width;
                p.devices[dev].entries.push_back({placed[dev], 0, w, 0});
                fill[dev] = w;
            }
            keys = std::move(deferred);
        } else {
            uint64_t total = 0;
            uint32_t widest = 0;
            for (const auto& n : normals) {
                total += n.remaining;
                widest = std::max(widest, n.remaining);
            }
            p.row_width = std::min<uint32_t>(widest, static_cast<uint32_t>((total + d - 1) / d));
        }

        for (uint32_t dev = 0; dev < d; ++dev) {
            for (auto& n : normals) {
                if (fill[dev] == p.row_width) break;
                if (n.remaining == 0) continue;
                uint32_t take = std::min(p.row_width - fill[dev], n.remaining);
                p.devices[dev].entries.push_back({n.column, n.width - n.remaining, take, fill[dev]});
                n.remaining -= take;
                fill[dev] += take;
            }
        }
        parts.push_back(std::move(p));
    }
    return TableLayout(schema, std::move(parts), geometry, th, LayoutKind::Compact);
}

std::vector<BytePlacement> locate_unchecked(const TableLayout& layout, uint64_t row, size_t column) {
    const uint64_t block = row / layout.block_size();
    const uint64_t in_block = row % layout.block_size();
    const uint64_t local_block = layout.local_block(block);
    std::vector<BytePlacement> out;
    for (const auto& f : layout.fragments(column)) {
        const auto& p = layout.part(f.part);
        const RankId rank = layout.rank_of_block(f.part, block);
        const uint64_t base = (local_block * layout.block_size() + in_block) * p.row_width + f.device_offset;
        for (uint32_t i = 0; i < f.length; ++i)
            out.push_back({f.part, p.channel, rank.rank, layout.bank_of_block(block), layout.rotated_device(f.device, block),
                           base + i});
    }
    return out;
}

std::vector<BytePlacement> locate(const TableLayout& layout, uint64_t row, std::string_view column) {
    const size_t c = layout.schema().index_of(column);
    if (row >= layout.schema().row_count)
        throw LookupError("row " + std::to_string(row) + " out of range for table '" + layout.schema().name + "'");
    return locate_unchecked(layout, row, c);
}

EffectiveBandwidth effective_bandwidth(const TableLayout& layout, const Geometry& geometry) {
    EffectiveBandwidth eb;
    const uint64_t line = geometry.cache_line;
    const uint64_t g = geometry.interleave_granularity;
    for (const auto& p : layout.parts()) {
        PartEfficiency pe;
        pe.part = p.part_id;
        pe.row_width = p.row_width;
        pe.useful_bytes = p.data_bytes();
        pe.footprint_bytes = uint64_t{layout.devices()} * p.row_width;
        pe.fetched_bytes = (pe.footprint_bytes + line - 1) / line * line;
        eb.cpu_useful += pe.useful_bytes;
        eb.cpu_fetched += pe.fetched_bytes;
        eb.parts.push_back(pe);
    }
    const auto& cols = layout.schema().columns;
    for (size_t c = 0; c < cols.size(); ++c) {
        if (!cols[c].is_key) continue;
        const auto& f = layout.fragments(c).front();
        const uint64_t rw = layout.part(f.part).row_width;
        const uint64_t burst = (cols[c].width + g - 1) / g * g;
        eb.pim_useful += cols[c].width;
        eb.pim_fetched += std::min(rw, burst);
    }
    eb.cpu_eff = eb.cpu_fetched ? static_cast<double>(eb.cpu_useful) / static_cast<double>(eb.cpu_fetched) : 1.0;
    eb.pim_eff = eb.pim_fetched ? static_cast<double>(eb.pim_useful) / static_cast<double>(eb.pim_fetched) : 1.0;
    return eb;
}

namespace {

std::vector<uint64_t> part_bases(const TableLayout& layout) {
    std::vector<uint64_t> base;
    uint64_t off = 0;
    for (const auto& p : layout.parts()) {
        base.push_back(off);
        off += uint64_t{layout.devices()} * p.row_width;
    }
    base.push_back(off);
    return base;
}

}  // namespace

std::vector<uint8_t> scatter_row(const TableLayout& layout, uint64_t row, std::span<const uint8_t> row_bytes) {
    const auto& schema = layout.schema();
    if (row_bytes.size() != schema.row_bytes())
        throw ValidationError("row image has " + std::to_string(row_bytes.size()) + " bytes, expected " +
                              std::to_string(schema.row_bytes()));
    const auto base = part_bases(layout);
    std::vector<uint8_t> placed(base.back(), 0);
    const uint64_t block = row / layout.block_size();
    for (size_t c = 0; c < schema.columns.size(); ++c) {
        const uint32_t col_off = schema.column_offset(c);
        for (const auto& f : layout.fragments(c)) {
            const auto rw = layout.part(f.part).row_width;
            const uint64_t dst = base[f.part] + uint64_t{layout.rotated_device(f.device, block)} * rw + f.device_offset;
            std::copy_n(row_bytes.begin() + col_off + f.column_begin, f.length, placed.begin() + static_cast<std::ptrdiff_t>(dst));
        }
    }
    return placed;
}

std::vector<uint8_t> gather_row(const TableLayout& layout, uint64_t row, std::span<const uint8_t> placed) {
    const auto& schema = layout.schema();
    const auto base = part_bases(layout);
    if (placed.size() != base.back())
        throw ValidationError("placed image has " + std::to_string(placed.size()) + " bytes, expected " +
                              std::to_string(base.back()));
    std::vector<uint8_t> out(schema.row_bytes());
    const uint64_t block = row / layout.block_size();
    for (size_t c = 0; c < schema.columns.size(); ++c) {
        const uint32_t col_off = schema.column_offset(c);
        for (const auto& f : layout.fragments(c)) {
            const auto rw = layout.part(f.part).row_width;
            const uint64_t src = base[f.part] + uint64_t{layout.rotated_device(f.device, block)} * rw + f.device_offset;
            std::copy_n(placed.begin() + static_cast<std::ptrdiff_t>(src), f.length, out.begin() + col_off + f.column_begin);
        }
    }
    return out;
}

}  // namespace pimhtap
