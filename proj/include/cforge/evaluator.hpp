#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "cforge/concept_space.hpp"
#include "cforge/dataset.hpp"
#include "cforge/matrix.hpp"
#include "cforge/scorer.hpp"

namespace cforge {

// Which cells count as a positive affordance for a held-out object.
enum class AffordanceTarget { All, Known, Unknown };

// Average precision of a scored list: items are ranked by score descending
// (ties broken by original index ascending) and precision is averaged at
// each positive. Throws when there is no positive.
double average_precision(const std::vector<double>& scores,
                         const std::vector<std::uint8_t>& positives);

// AP of a confidence matrix over the masked cell pool. For Unknown the pool
// is Unknown + Invalid cells (Known cells are excluded outright); for Known
// it is Known + Invalid. Cells enter in (verb, object) ascending order, which
// pins the tie order.
double concept_ap(const Matrix& confidence, const ConceptSpace& space, ConceptTarget target);

// Fraction of Unknown cells contained in the K highest-scored non-Known cells.
double recall_at_k(const Matrix& confidence, const ConceptSpace& space, std::size_t k);

struct AffordanceResult {
    double map = 0.0;
    std::vector<std::uint32_t> skipped_verbs;  // verbs with no training instances
};

// Object affordance recognition: per-verb prototypes are the mean training
// verb features; each held-out object instance is scored against every
// prototype and per-verb AP is averaged over verbs with at least one positive.
AffordanceResult affordance_map(const ScorerParams& params, const Dataset& train,
                                const Dataset& heldout, const ConceptSpace& space,
                                AffordanceTarget target);

// i.i.d. uniform [0,1) cell scores, deterministic per seed.
Matrix random_matrix(const ConceptSpace& space, std::uint64_t seed);

struct MetricReport {
    double unknown_ap = 0.0;
    double known_ap = 0.0;
    std::vector<std::pair<std::size_t, double>> recall_at_k;  // (K, recall)
    std::optional<double> affordance_map;
};

MetricReport evaluate_matrix(const Matrix& confidence, const ConceptSpace& space,
                             const std::vector<std::size_t>& recall_ks);

void write_report(const MetricReport& report, const std::filesystem::path& path);

}  // namespace cforge
