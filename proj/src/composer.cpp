#include "cforge/composer.hpp"

#include <algorithm>

#include "cforge/error.hpp"

namespace cforge {

CompositeBatch compose(const std::vector<Instance>& batch) {
    if (batch.empty()) throw DataError("cannot compose an empty batch");
    const std::size_t n = batch.size();
    const std::size_t d_v = batch.front().verb_feature.size();
    const std::size_t d_o = batch.front().object_feature.size();
    for (const Instance& inst : batch)
        if (inst.verb_feature.size() != d_v || inst.object_feature.size() != d_o)
            throw DataError("batch instances have mismatched feature dimensions");

    CompositeBatch cb;
    cb.n_sources = n;
    cb.d_v = d_v;
    cb.d_o = d_o;
    cb.sources = batch;
    cb.features = Matrix(n * n, d_v + d_o);
    for (std::size_t vs = 0; vs < n; ++vs) {
        for (std::size_t os = 0; os < n; ++os) {
            double* row = &cb.features.data[(vs * n + os) * (d_v + d_o)];
            std::copy(batch[vs].verb_feature.begin(), batch[vs].verb_feature.end(), row);
            std::copy(batch[os].object_feature.begin(), batch[os].object_feature.end(), row + d_v);
        }
    }
    return cb;
}

bool OuterLabels::verb(std::size_t i, std::uint32_t verb) const {
    const auto& labels = cb_->verb_labels(i);
    return std::binary_search(labels.begin(), labels.end(), verb);
}

OuterLabels outer_labels(const CompositeBatch& cb) { return OuterLabels(cb); }

KnownFilter known_filter(const CompositeBatch& cb, const ConceptSpace& space) {
    KnownFilter f;
    f.n_composites = cb.size();
    f.n_verbs = space.n_verbs();
    f.mask.assign(f.n_composites * f.n_verbs, 0);
    f.droppable.assign(f.n_composites, 1);
    for (std::size_t i = 0; i < f.n_composites; ++i) {
        const std::uint32_t object = cb.object_label(i);
        for (std::uint32_t v : cb.verb_labels(i)) {
            if (space.status(v, object) == ConceptStatus::Known) {
                f.mask[i * f.n_verbs + v] = 1;
                f.droppable[i] = 0;
            }
        }
    }
    return f;
}

}  // namespace cforge
