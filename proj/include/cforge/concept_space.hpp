#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace cforge {

// Cell status of one verb-object combination. Cells absent from an
// annotation file are Invalid.
enum class ConceptStatus : std::uint8_t { Invalid = 0, Known = 1, Unknown = 2 };

// Which status counts as the positive class for ranking metrics.
enum class ConceptTarget { Known, Unknown };

const char* to_string(ConceptStatus s);

// The verb-object grid with its Known/Unknown/Invalid partition.
// Immutable after construction in normal use; safe for concurrent reads.
class ConceptSpace {
public:
    ConceptSpace(std::size_t n_verbs, std::size_t n_objects);

    std::size_t n_verbs() const { return n_verbs_; }
    std::size_t n_objects() const { return n_objects_; }
    std::size_t n_cells() const { return n_verbs_ * n_objects_; }

    ConceptStatus status(std::size_t verb, std::size_t object) const {
        return cells_[verb * n_objects_ + object];
    }
    void set_status(std::size_t verb, std::size_t object, ConceptStatus s) {
        cells_[verb * n_objects_ + object] = s;
    }

    std::size_t count(ConceptStatus s) const;

    friend bool operator==(const ConceptSpace&, const ConceptSpace&) = default;

private:
    std::size_t n_verbs_;
    std::size_t n_objects_;
    std::vector<ConceptStatus> cells_;
};

struct ConceptMask {
    std::size_t n_verbs = 0;
    std::size_t n_objects = 0;
    std::vector<std::uint8_t> cells;

    bool at(std::size_t verb, std::size_t object) const {
        return cells[verb * n_objects + object] != 0;
    }
    std::size_t popcount() const;
};

struct ConceptMasks {
    ConceptMask known;
    ConceptMask unknown;
    ConceptMask invalid;
};

// Reads a concepts.csv annotation table (header `verb_id,object_id,status`,
// one row per non-Invalid cell). An empty file yields an all-Invalid grid.
ConceptSpace load_concepts(const std::filesystem::path& path, std::size_t n_verbs,
                           std::size_t n_objects);

// Writes the same format, rows in (verb_id, object_id) ascending order.
void save_concepts(const ConceptSpace& space, const std::filesystem::path& path);

// Positive fraction of the masked evaluation pool:
//   Unknown -> |Unknown| / (|Unknown| + |Invalid|)
//   Known   -> |Known|   / (|Known|   + |Invalid|)
double prevalence(const ConceptSpace& space, ConceptTarget target);

// One boolean grid per status; pairwise disjoint, union total.
ConceptMasks masks(const ConceptSpace& space);

}  // namespace cforge
