#pragma once

#include <cstdint>
#include <vector>

#include "cforge/concept_space.hpp"
#include "cforge/dataset.hpp"
#include "cforge/matrix.hpp"

namespace cforge {

// The N x N recombination of a batch. Composite i pairs the verb half of
// source i / N with the object half of source i % N (row-major), so the
// diagonal reproduces the real instances.
struct CompositeBatch {
    std::size_t n_sources = 0;
    std::size_t d_v = 0;
    std::size_t d_o = 0;
    std::vector<Instance> sources;
    Matrix features;  // n_sources^2 x (d_v + d_o)

    std::size_t size() const { return n_sources * n_sources; }
    std::size_t verb_source(std::size_t i) const { return i / n_sources; }
    std::size_t object_source(std::size_t i) const { return i % n_sources; }
    bool is_diagonal(std::size_t i) const { return verb_source(i) == object_source(i); }
    const std::vector<std::uint32_t>& verb_labels(std::size_t i) const {
        return sources[verb_source(i)].verb_labels;
    }
    std::uint32_t object_label(std::size_t i) const {
        return sources[object_source(i)].object_label;
    }
};

CompositeBatch compose(const std::vector<Instance>& batch);

// Outer-product label view over a composite batch:
// label(i, v, o) = [v labeled on i's verb source] * [o == i's object label].
class OuterLabels {
public:
    explicit OuterLabels(const CompositeBatch& cb) : cb_(&cb) {}

    bool operator()(std::size_t i, std::uint32_t verb, std::uint32_t object) const {
        return object == cb_->object_label(i) && this->verb(i, verb);
    }
    // The verb factor alone.
    bool verb(std::size_t i, std::uint32_t verb) const;

    const CompositeBatch& batch() const { return *cb_; }

private:
    const CompositeBatch* cb_;
};

OuterLabels outer_labels(const CompositeBatch& cb);

// Verb-target mask for the compositional branch: keep (i, v) only when v is
// labeled on i's verb source and cell (v, object) is Known. Rows with no
// retained verb are droppable.
struct KnownFilter {
    std::size_t n_composites = 0;
    std::size_t n_verbs = 0;
    std::vector<std::uint8_t> mask;       // n_composites x n_verbs
    std::vector<std::uint8_t> droppable;  // n_composites

    bool at(std::size_t i, std::uint32_t verb) const { return mask[i * n_verbs + verb] != 0; }
};

KnownFilter known_filter(const CompositeBatch& cb, const ConceptSpace& space);

}  // namespace cforge
