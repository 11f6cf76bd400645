#include "cforge/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <string>

#include "cforge/error.hpp"

static_assert(std::endian::native == std::endian::little, "record format is little-endian");

namespace cforge {

namespace {

void append_u32(std::string& buf, std::uint32_t v) {
    char raw[4];
    std::memcpy(raw, &v, 4);
    buf.append(raw, 4);
}

void append_f64(std::string& buf, double v) {
    char raw[8];
    std::memcpy(raw, &v, 8);
    buf.append(raw, 8);
}

// Sequential reader over the raw record buffer; any overrun is corruption.
struct RecordReader {
    const char* data;
    std::size_t size;
    std::size_t pos = 0;

    std::uint32_t u32() {
        if (pos + 4 > size) throw DataError("corrupted instance records: truncated file");
        std::uint32_t v;
        std::memcpy(&v, data + pos, 4);
        pos += 4;
        return v;
    }
    double f64() {
        if (pos + 8 > size) throw DataError("corrupted instance records: truncated file");
        double v;
        std::memcpy(&v, data + pos, 8);
        pos += 8;
        return v;
    }
};

void check_instance(const Instance& inst, std::size_t index, std::size_t d_v, std::size_t d_o,
                    std::size_t n_verbs, std::size_t n_objects) {
    const std::string where = "instance " + std::to_string(index);
    if (inst.verb_labels.empty()) throw DataError(where + ": empty verb label set");
    for (std::size_t k = 0; k + 1 < inst.verb_labels.size(); ++k)
        if (inst.verb_labels[k] >= inst.verb_labels[k + 1])
            throw DataError(where + ": verb labels must be strictly increasing");
    if (inst.verb_labels.back() >= n_verbs) throw DataError(where + ": verb label out of range");
    if (inst.object_label >= n_objects) throw DataError(where + ": object label out of range");
    if (inst.verb_feature.size() != d_v || inst.object_feature.size() != d_o)
        throw DataError(where + ": feature length does not match dataset dimensions");
    for (double x : inst.verb_feature)
        if (!std::isfinite(x)) throw DataError(where + ": non-finite verb feature");
    for (double x : inst.object_feature)
        if (!std::isfinite(x)) throw DataError(where + ": non-finite object feature");
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

}  // namespace

void validate_training_legality(const Dataset& dataset) {
    if (dataset.split != Split::Train) return;
    for (std::size_t i = 0; i < dataset.instances.size(); ++i) {
        const Instance& inst = dataset.instances[i];
        for (std::uint32_t v : inst.verb_labels) {
            if (dataset.space.status(v, inst.object_label) != ConceptStatus::Known)
                throw DataError("instance " + std::to_string(i) + " labels cell (" + std::to_string(v) +
                                "," + std::to_string(inst.object_label) +
                                ") whose status is not known; illegal in a training split");
        }
    }
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    for (std::size_t i = 0; i < dataset.instances.size(); ++i)
        check_instance(dataset.instances[i], i, dataset.d_v, dataset.d_o, dataset.space.n_verbs(),
                       dataset.space.n_objects());

    {
        std::ofstream meta(dir / "meta.txt", std::ios::binary);
        if (!meta) throw DataError("cannot write " + (dir / "meta.txt").string());
        meta << "format_version=1\n";
        meta << "split=" << (dataset.split == Split::Train ? "train" : "eval") << "\n";
        meta << "n_verbs=" << dataset.space.n_verbs() << "\n";
        meta << "n_objects=" << dataset.space.n_objects() << "\n";
        meta << "d_v=" << dataset.d_v << "\n";
        meta << "d_o=" << dataset.d_o << "\n";
        meta << "n_instances=" << dataset.instances.size() << "\n";
        if (!meta) throw DataError("write failure on " + (dir / "meta.txt").string());
    }

    save_concepts(dataset.space, dir / "concepts.csv");

    std::string buf;
    for (const Instance& inst : dataset.instances) {
        append_u32(buf, static_cast<std::uint32_t>(inst.verb_labels.size()));
        for (std::uint32_t v : inst.verb_labels) append_u32(buf, v);
        append_u32(buf, inst.object_label);
        for (double x : inst.verb_feature) append_f64(buf, x);
        for (double x : inst.object_feature) append_f64(buf, x);
    }
    std::ofstream rec(dir / "instances.bin", std::ios::binary);
    if (!rec) throw DataError("cannot write " + (dir / "instances.bin").string());
    rec.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!rec) throw DataError("write failure on " + (dir / "instances.bin").string());
}

Dataset read_dataset(const std::filesystem::path& dir) {
    std::map<std::string, std::string> meta;
    {
        std::ifstream in(dir / "meta.txt");
        if (!in) throw DataError("cannot open " + (dir / "meta.txt").string());
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos) throw DataError("malformed meta line: " + line);
            meta[line.substr(0, eq)] = line.substr(eq + 1);
        }
    }
    const auto meta_num = [&](const char* key) -> std::size_t {
        auto it = meta.find(key);
        if (it == meta.end()) throw DataError(std::string("meta.txt missing key ") + key);
        return static_cast<std::size_t>(std::stoull(it->second));
    };
    if (meta_num("format_version") != 1) throw DataError("unsupported dataset format_version");
    const std::string split_str = meta.count("split") ? meta["split"] : "";
    if (split_str != "train" && split_str != "eval")
        throw DataError("meta.txt split must be 'train' or 'eval'");

    Dataset ds;
    ds.split = split_str == "train" ? Split::Train : Split::Eval;
    ds.d_v = meta_num("d_v");
    ds.d_o = meta_num("d_o");
    const std::size_t n_verbs = meta_num("n_verbs");
    const std::size_t n_objects = meta_num("n_objects");
    const std::size_t n_instances = meta_num("n_instances");
    ds.space = load_concepts(dir / "concepts.csv", n_verbs, n_objects);

    const std::string bytes = read_file(dir / "instances.bin");
    RecordReader reader{bytes.data(), bytes.size()};
    ds.instances.reserve(n_instances);
    for (std::size_t i = 0; i < n_instances; ++i) {
        Instance inst;
        const std::uint32_t k = reader.u32();
        inst.verb_labels.resize(k);
        for (std::uint32_t& v : inst.verb_labels) v = reader.u32();
        inst.object_label = reader.u32();
        inst.verb_feature.resize(ds.d_v);
        for (double& x : inst.verb_feature) x = reader.f64();
        inst.object_feature.resize(ds.d_o);
        for (double& x : inst.object_feature) x = reader.f64();
        check_instance(inst, i, ds.d_v, ds.d_o, n_verbs, n_objects);
        ds.instances.push_back(std::move(inst));
    }
    if (reader.pos != bytes.size())
        throw DataError("corrupted instance records: trailing bytes after last record");

    validate_training_legality(ds);
    return ds;
}

SynthWorld generate_synthetic(const SynthConfig& cfg) {
    if (cfg.n_verbs == 0 || cfg.n_objects == 0 || cfg.d_v == 0 || cfg.d_o == 0)
        throw DataError("synthetic config dimensions must be >= 1");
    if (cfg.n_groups == 0 || cfg.n_groups > cfg.n_objects)
        throw DataError("synthetic config requires 1 <= n_groups <= n_objects");
    if (!(cfg.known_fraction > 0.0 && cfg.known_fraction < 1.0))
        throw DataError("known_fraction must lie strictly between 0 and 1");
    if (cfg.noise_sigma < 0.0) throw DataError("noise_sigma must be non-negative");

    Rng rng(cfg.seed);

    // Shuffled round robin keeps every group non-empty and near-balanced.
    std::vector<std::size_t> object_order(cfg.n_objects);
    std::iota(object_order.begin(), object_order.end(), std::size_t{0});
    for (std::size_t i = cfg.n_objects; i > 1; --i)
        std::swap(object_order[i - 1], object_order[rng.below(i)]);
    std::vector<std::size_t> group_of(cfg.n_objects);
    for (std::size_t i = 0; i < cfg.n_objects; ++i) group_of[object_order[i]] = i % cfg.n_groups;

    // Non-empty compatible group set per verb, coin-flip membership.
    std::vector<std::vector<std::uint8_t>> compatible(cfg.n_verbs,
                                                      std::vector<std::uint8_t>(cfg.n_groups, 0));
    for (std::size_t v = 0; v < cfg.n_verbs; ++v) {
        bool any = false;
        for (int attempt = 0; attempt < 64 && !any; ++attempt) {
            for (std::size_t g = 0; g < cfg.n_groups; ++g) {
                compatible[v][g] = rng.below(2) ? 1 : 0;
                any = any || compatible[v][g];
            }
        }
        if (!any) throw DataError("verb " + std::to_string(v) + " drew no compatible group");
    }

    ConceptSpace space(cfg.n_verbs, cfg.n_objects);
    std::vector<std::pair<std::size_t, std::size_t>> concept_cells;
    for (std::size_t v = 0; v < cfg.n_verbs; ++v)
        for (std::size_t o = 0; o < cfg.n_objects; ++o)
            if (compatible[v][group_of[o]]) concept_cells.emplace_back(v, o);

    // Known/Unknown split: cover every verb and object first, then fill up to
    // the requested fraction of concept cells.
    const std::size_t target_known = static_cast<std::size_t>(
        std::ceil(cfg.known_fraction * static_cast<double>(concept_cells.size())));
    std::vector<std::uint8_t> is_known(concept_cells.size(), 0);
    std::size_t n_known = 0;

    std::vector<std::vector<std::size_t>> cells_of_verb(cfg.n_verbs);
    std::vector<std::vector<std::size_t>> cells_of_object(cfg.n_objects);
    for (std::size_t idx = 0; idx < concept_cells.size(); ++idx) {
        cells_of_verb[concept_cells[idx].first].push_back(idx);
        cells_of_object[concept_cells[idx].second].push_back(idx);
    }
    const auto cover = [&](const std::vector<std::size_t>& cells) {
        if (cells.empty()) return;
        for (std::size_t idx : cells)
            if (is_known[idx]) return;
        const std::size_t pick = cells[rng.below(cells.size())];
        is_known[pick] = 1;
        ++n_known;
    };
    for (std::size_t v = 0; v < cfg.n_verbs; ++v) cover(cells_of_verb[v]);
    for (std::size_t o = 0; o < cfg.n_objects; ++o) cover(cells_of_object[o]);

    std::vector<std::size_t> unmarked;
    for (std::size_t idx = 0; idx < concept_cells.size(); ++idx)
        if (!is_known[idx]) unmarked.push_back(idx);
    while (n_known < target_known && !unmarked.empty()) {
        const std::size_t at = rng.below(unmarked.size());
        is_known[unmarked[at]] = 1;
        ++n_known;
        unmarked[at] = unmarked.back();
        unmarked.pop_back();
    }

    for (std::size_t idx = 0; idx < concept_cells.size(); ++idx) {
        const auto [v, o] = concept_cells[idx];
        space.set_status(v, o, is_known[idx] ? ConceptStatus::Known : ConceptStatus::Unknown);
    }

    // Every Unknown cell should be reachable from the Known cells through a
    // shared verb or a same-group object, or discovery has no signal there.
    for (std::size_t idx = 0; idx < concept_cells.size(); ++idx) {
        if (is_known[idx]) continue;
        const auto [v, o] = concept_cells[idx];
        bool reachable = false;
        for (std::size_t o2 = 0; o2 < cfg.n_objects && !reachable; ++o2)
            reachable = group_of[o2] == group_of[o] && space.status(v, o2) == ConceptStatus::Known;
        for (std::size_t v2 = 0; v2 < cfg.n_verbs && !reachable; ++v2)
            reachable = space.status(v2, o) == ConceptStatus::Known;
        if (!reachable)
            std::cerr << "warning: unknown concept cell (" << v << "," << o
                      << ") is unreachable from the known cells\n";
    }

    // Prototypes: one per verb, one per group, plus a smaller per-object offset
    // so objects in a group stay similar but distinguishable.
    constexpr double kObjectOffsetScale = 0.5;
    std::vector<std::vector<double>> verb_proto(cfg.n_verbs, std::vector<double>(cfg.d_v));
    for (auto& p : verb_proto)
        for (double& x : p) x = rng.normal();
    std::vector<std::vector<double>> group_proto(cfg.n_groups, std::vector<double>(cfg.d_o));
    for (auto& p : group_proto)
        for (double& x : p) x = rng.normal();
    std::vector<std::vector<double>> object_offset(cfg.n_objects, std::vector<double>(cfg.d_o));
    for (auto& p : object_offset)
        for (double& x : p) x = kObjectOffsetScale * rng.normal();

    const auto make_verb_feature = [&](std::size_t v) {
        std::vector<double> x(cfg.d_v);
        for (std::size_t k = 0; k < cfg.d_v; ++k) x[k] = verb_proto[v][k] + cfg.noise_sigma * rng.normal();
        return x;
    };
    const auto make_object_feature = [&](std::size_t o) {
        std::vector<double> x(cfg.d_o);
        for (std::size_t k = 0; k < cfg.d_o; ++k)
            x[k] = group_proto[group_of[o]][k] + object_offset[o][k] + cfg.noise_sigma * rng.normal();
        return x;
    };

    SynthWorld world{.train = {}, .heldout = {}, .space = space};
    world.train.d_v = cfg.d_v;
    world.train.d_o = cfg.d_o;
    world.train.split = Split::Train;
    world.train.space = space;
    for (std::size_t idx = 0; idx < concept_cells.size(); ++idx) {
        if (!is_known[idx]) continue;
        const auto [v, o] = concept_cells[idx];
        for (std::size_t n = 0; n < cfg.instances_per_known_concept; ++n) {
            Instance inst;
            inst.verb_labels = {static_cast<std::uint32_t>(v)};
            inst.object_label = static_cast<std::uint32_t>(o);
            inst.verb_feature = make_verb_feature(v);
            inst.object_feature = make_object_feature(o);
            world.train.instances.push_back(std::move(inst));
        }
    }

    world.heldout.d_v = cfg.d_v;
    world.heldout.d_o = cfg.d_o;
    world.heldout.split = Split::Eval;
    world.heldout.space = space;
    for (std::size_t o = 0; o < cfg.n_objects; ++o) {
        if (cells_of_object[o].empty()) continue;  // no concepts, nothing to recognize
        std::vector<std::uint32_t> verbs_of_o;
        for (std::size_t idx : cells_of_object[o])
            verbs_of_o.push_back(static_cast<std::uint32_t>(concept_cells[idx].first));
        for (std::size_t n = 0; n < cfg.heldout_per_object; ++n) {
            Instance inst;
            const std::uint32_t v = verbs_of_o[rng.below(verbs_of_o.size())];
            inst.verb_labels = {v};
            inst.object_label = static_cast<std::uint32_t>(o);
            inst.verb_feature = make_verb_feature(v);
            inst.object_feature = make_object_feature(o);
            world.heldout.instances.push_back(std::move(inst));
        }
    }

    return world;
}

std::vector<Instance> sample_batch(const Dataset& dataset, std::size_t batch_size, Rng& rng) {
    const std::size_t n = dataset.instances.size();
    if (n == 0) throw DataError("cannot sample a batch from an empty dataset");
    if (batch_size < 2) throw DataError("batch_size must be >= 2, composition needs distinct sources");

    std::vector<Instance> batch;
    batch.reserve(batch_size);
    if (batch_size <= n) {
        // Partial Fisher-Yates: a uniform draw without replacement.
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t i = 0; i < batch_size; ++i) {
            std::swap(idx[i], idx[i + rng.below(n - i)]);
            batch.push_back(dataset.instances[idx[i]]);
        }
    } else {
        for (std::size_t i = 0; i < batch_size; ++i)
            batch.push_back(dataset.instances[rng.below(n)]);
    }
    return batch;
}

}  // namespace cforge
