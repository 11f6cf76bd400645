#pragma once

#include <filesystem>
#include <utility>

#include "cforge/composer.hpp"
#include "cforge/dataset.hpp"
#include "cforge/matrix.hpp"
#include "cforge/scorer.hpp"

namespace cforge {

// Online concept-confidence statistics. confidence() holds the running mean
// of verb probabilities per (verb, object) cell, counts() the number of
// contributions. Both start at zero; a cell no composite ever touched stays
// at exactly zero.
class ConfidenceTracker {
public:
    ConfidenceTracker(std::size_t n_verbs, std::size_t n_objects);

    std::size_t n_verbs() const { return confidence_.rows; }
    std::size_t n_objects() const { return confidence_.cols; }
    const Matrix& confidence() const { return confidence_; }
    const Matrix& counts() const { return counts_; }

    // Folds one composite batch into the running means: composite i
    // contributes probs(i, v) to cell (v, object_label(i)) for each of its
    // labeled verbs. Contributions are accumulated in a canonical order, so
    // permuting composites within a call cannot change the result.
    void update(const Matrix& probs, const CompositeBatch& cb, const OuterLabels& labels);

    std::pair<Matrix, Matrix> snapshot() const;

    // Validates shapes, integral non-negative counts, and the zero-count =>
    // zero-confidence rule. The [0,1] range of confidence is deliberately not
    // enforced here so raw matrices can be injected.
    static ConfidenceTracker load_snapshot(Matrix confidence, Matrix counts);

    // Text table of all cells with count > 0; round-trips f64 exactly.
    void save(const std::filesystem::path& path) const;
    static ConfidenceTracker load(const std::filesystem::path& path);

    friend bool operator==(const ConfidenceTracker&, const ConfidenceTracker&) = default;

private:
    friend ConfidenceTracker offline_affordance_matrix(const Dataset&, const ScorerParams&);
    void accumulate(std::vector<std::pair<std::size_t, double>>& contributions);

    Matrix confidence_;
    Matrix counts_;
};

// The offline baseline: scores every ordered pair of training instances
// (verb features of one, object features of the other) and averages the
// labeled-verb probabilities per cell. Equals a single streaming update over
// all pairs.
ConfidenceTracker offline_affordance_matrix(const Dataset& dataset, const ScorerParams& params);

}  // namespace cforge
