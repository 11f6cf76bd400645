#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "cforge/composer.hpp"
#include "cforge/confidence_tracker.hpp"
#include "cforge/dataset.hpp"
#include "cforge/scorer.hpp"

namespace cforge {

struct TrainConfig {
    double lambda1 = 2.0;  // real-instance loss weight
    double lambda2 = 0.5;  // compositional loss weight
    double lambda3 = 0.5;  // self-training loss weight
    double temperature = 1.0;
    std::size_t batch_size = 8;
    std::size_t iterations = 20000;
    std::uint64_t seed = 1;
    bool self_training = true;
    bool normalize_pseudo_labels = true;
    std::optional<std::filesystem::path> frozen_matrix;  // re-training mode
    std::size_t eval_every = 1000;
    std::size_t hidden = 64;
    double learning_rate = 0.01;
    double momentum = 0.9;
    double verb_aux_weight = 0.0;  // optional BCE on the verb-only pathway, off by default
};

// Soft verb targets for the self-training loss. targets(i, v) is nonzero only
// for labeled verbs; included(i, v) marks the entries that enter the loss
// (labeled verbs over never-updated cells are left out, unlabeled verbs stay
// in as negatives); active(i) is false for composites with no updated cell.
struct PseudoLabels {
    Matrix targets;  // n_composites x n_verbs
    std::vector<std::uint8_t> active;
    std::vector<std::uint8_t> included;  // n_composites x n_verbs

    bool entry(std::size_t i, std::size_t v) const { return included[i * targets.cols + v] != 0; }
};

struct LossValue {
    double loss = 0.0;
    Matrix grad;  // dloss/dlogits, shaped like the logits it came from
};

struct HistoryRow {
    std::size_t iteration = 0;
    double loss_total = 0.0;
    double loss_hoi = 0.0;
    double loss_compositional = 0.0;
    double loss_self_training = 0.0;
    double unknown_ap = 0.0;
    double known_ap = 0.0;
};

struct TrainResult {
    ScorerParams params;
    OptimState opt;
    ConfidenceTracker tracker{1, 1};
    std::vector<HistoryRow> history;
};

// Confidence normalized by the global max of the matrix: target = M(v,o)/max(M)
// on labeled verbs. With normalize = false the raw confidence is used.
PseudoLabels make_pseudo_labels(const ConfidenceTracker& tracker, const CompositeBatch& cb,
                                const OuterLabels& labels, bool normalize = true);

// Mean BCE of temperature-divided logits against the pseudo targets, over
// active composites and their included entries.
LossValue self_training_loss(const Matrix& logits, const PseudoLabels& pl, double temperature);

// Mean multi-hot BCE over the real instances (diagonal rows of a composite
// batch) and all verb entries.
LossValue hoi_loss(const Matrix& diagonal_logits, const std::vector<Instance>& batch,
                   std::size_t n_verbs);

// BCE over retained composites: retained labeled verbs are positives,
// unlabeled verbs negatives, masked-out labeled verbs leave the sum.
LossValue compositional_loss(const Matrix& logits, const KnownFilter& filter,
                             const CompositeBatch& cb);

// lambda-weighted total over one composite batch, with the gradient scattered
// back onto the full logit matrix. pl may be null when self-training is off.
struct CombinedLoss {
    double total = 0.0;
    double hoi = 0.0;
    double compositional = 0.0;
    double self_training = 0.0;
    Matrix dlogits;
};
CombinedLoss combined_loss(const Matrix& logits, const CompositeBatch& cb, const KnownFilter& filter,
                           const PseudoLabels* pl, const TrainConfig& config);

// The full loop: sample, compose, score, update the tracker, build pseudo
// labels (from the frozen matrix in re-training mode), step. Deterministic
// per seed.
TrainResult train(const Dataset& dataset, const ConceptSpace& space, const TrainConfig& config);

// Entangled-predictor label rule: clip(label + M(:, object), at 1).
std::vector<double> entangled_label_update(const std::vector<double>& verb_label,
                                           std::uint32_t object_label,
                                           const ConfidenceTracker& tracker);

}  // namespace cforge
