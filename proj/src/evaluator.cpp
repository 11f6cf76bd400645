#include "cforge/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>

#include "cforge/error.hpp"
#include "cforge/fmt.hpp"
#include "cforge/rng.hpp"

namespace cforge {

namespace {

// Indices ordered by score descending, original index ascending on ties.
std::vector<std::size_t> ranking(const std::vector<double>& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    return order;
}

}  // namespace

double average_precision(const std::vector<double>& scores,
                         const std::vector<std::uint8_t>& positives) {
    if (scores.size() != positives.size())
        throw DataError("scores and positives must have equal length");
    const std::size_t n_pos =
        static_cast<std::size_t>(std::count_if(positives.begin(), positives.end(),
                                               [](std::uint8_t p) { return p != 0; }));
    if (n_pos == 0) throw DataError("average precision undefined: no positives");
    for (double s : scores)
        if (!std::isfinite(s)) throw DataError("non-finite score");

    const std::vector<std::size_t> order = ranking(scores);
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (!positives[order[rank]]) continue;
        ++hits;
        sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
    return sum / static_cast<double>(n_pos);
}

double concept_ap(const Matrix& confidence, const ConceptSpace& space, ConceptTarget target) {
    if (confidence.rows != space.n_verbs() || confidence.cols != space.n_objects())
        throw DataError("confidence matrix does not match the concept space");
    const ConceptStatus excluded =
        target == ConceptTarget::Unknown ? ConceptStatus::Known : ConceptStatus::Unknown;
    const ConceptStatus positive =
        target == ConceptTarget::Unknown ? ConceptStatus::Unknown : ConceptStatus::Known;

    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    for (std::size_t v = 0; v < space.n_verbs(); ++v) {
        for (std::size_t o = 0; o < space.n_objects(); ++o) {
            const ConceptStatus s = space.status(v, o);
            if (s == excluded) continue;
            scores.push_back(confidence(v, o));
            labels.push_back(s == positive ? 1 : 0);
        }
    }
    return average_precision(scores, labels);
}

double recall_at_k(const Matrix& confidence, const ConceptSpace& space, std::size_t k) {
    if (confidence.rows != space.n_verbs() || confidence.cols != space.n_objects())
        throw DataError("confidence matrix does not match the concept space");

    std::vector<double> scores;
    std::vector<std::uint8_t> is_unknown;
    for (std::size_t v = 0; v < space.n_verbs(); ++v) {
        for (std::size_t o = 0; o < space.n_objects(); ++o) {
            const ConceptStatus s = space.status(v, o);
            if (s == ConceptStatus::Known) continue;
            scores.push_back(confidence(v, o));
            is_unknown.push_back(s == ConceptStatus::Unknown ? 1 : 0);
        }
    }
    const std::size_t n_unknown =
        static_cast<std::size_t>(std::count(is_unknown.begin(), is_unknown.end(), std::uint8_t{1}));
    if (n_unknown == 0) return 0.0;

    const std::vector<std::size_t> order = ranking(scores);
    const std::size_t take = std::min(k, order.size());
    std::size_t hits = 0;
    for (std::size_t rank = 0; rank < take; ++rank) hits += is_unknown[order[rank]];
    return static_cast<double>(hits) / static_cast<double>(n_unknown);
}

AffordanceResult affordance_map(const ScorerParams& params, const Dataset& train,
                                const Dataset& heldout, const ConceptSpace& space,
                                AffordanceTarget target) {
    if (train.d_v != params.d_v || heldout.d_o != params.d_o)
        throw DataError("dataset dimensions do not match the scorer");
    if (heldout.instances.empty()) throw DataError("held-out dataset is empty");

    const std::size_t n_verbs = space.n_verbs();

    // Per-verb prototype: mean of training verb features over instances
    // labeled with that verb.
    std::vector<std::vector<double>> prototype(n_verbs, std::vector<double>(train.d_v, 0.0));
    std::vector<std::size_t> support(n_verbs, 0);
    for (const Instance& inst : train.instances) {
        for (std::uint32_t v : inst.verb_labels) {
            ++support[v];
            for (std::size_t k = 0; k < train.d_v; ++k) prototype[v][k] += inst.verb_feature[k];
        }
    }
    AffordanceResult result;
    for (std::size_t v = 0; v < n_verbs; ++v) {
        if (support[v] == 0) {
            result.skipped_verbs.push_back(static_cast<std::uint32_t>(v));
            continue;
        }
        for (double& x : prototype[v]) x /= static_cast<double>(support[v]);
    }

    const auto is_positive = [&](std::size_t verb, std::uint32_t object) {
        const ConceptStatus s = space.status(verb, object);
        switch (target) {
            case AffordanceTarget::All:
                return s == ConceptStatus::Known || s == ConceptStatus::Unknown;
            case AffordanceTarget::Known: return s == ConceptStatus::Known;
            case AffordanceTarget::Unknown: return s == ConceptStatus::Unknown;
        }
        return false;
    };

    double ap_sum = 0.0;
    std::size_t n_scored = 0;
    Matrix block(heldout.instances.size(), params.input_dim());
    for (std::size_t v = 0; v < n_verbs; ++v) {
        if (support[v] == 0) continue;
        std::vector<std::uint8_t> positives(heldout.instances.size());
        for (std::size_t i = 0; i < heldout.instances.size(); ++i) {
            const Instance& inst = heldout.instances[i];
            double* row = &block.data[i * block.cols];
            std::copy(prototype[v].begin(), prototype[v].end(), row);
            std::copy(inst.object_feature.begin(), inst.object_feature.end(), row + params.d_v);
            positives[i] = is_positive(v, inst.object_label) ? 1 : 0;
        }
        if (std::count(positives.begin(), positives.end(), std::uint8_t{1}) == 0) continue;
        const Matrix logits = forward(params, block);
        std::vector<double> scores(heldout.instances.size());
        for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = sigmoid(logits(i, v));
        ap_sum += average_precision(scores, positives);
        ++n_scored;
    }
    if (n_scored == 0) throw DataError("no verb has positives in the held-out split");
    result.map = ap_sum / static_cast<double>(n_scored);
    return result;
}

Matrix random_matrix(const ConceptSpace& space, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(space.n_verbs(), space.n_objects());
    for (double& x : m.data) x = rng.uniform();
    return m;
}

MetricReport evaluate_matrix(const Matrix& confidence, const ConceptSpace& space,
                             const std::vector<std::size_t>& recall_ks) {
    MetricReport report;
    report.unknown_ap = concept_ap(confidence, space, ConceptTarget::Unknown);
    report.known_ap = concept_ap(confidence, space, ConceptTarget::Known);
    for (std::size_t k : recall_ks)
        report.recall_at_k.emplace_back(k, recall_at_k(confidence, space, k));
    return report;
}

void write_report(const MetricReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write report: " + path.string());
    out << "metric,target,k,value\n";
    out << "concept_ap,unknown,," << fmt_f64(report.unknown_ap) << "\n";
    out << "concept_ap,known,," << fmt_f64(report.known_ap) << "\n";
    for (const auto& [k, recall] : report.recall_at_k)
        out << "recall_at_k,unknown," << k << "," << fmt_f64(recall) << "\n";
    if (report.affordance_map)
        out << "affordance_map,,," << fmt_f64(*report.affordance_map) << "\n";
    if (!out) throw DataError("write failure on report: " + path.string());
}

}  // namespace cforge
