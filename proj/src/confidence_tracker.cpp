#include "cforge/confidence_tracker.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "cforge/error.hpp"
#include "cforge/fmt.hpp"

namespace cforge {

ConfidenceTracker::ConfidenceTracker(std::size_t n_verbs, std::size_t n_objects)
    : confidence_(n_verbs, n_objects), counts_(n_verbs, n_objects) {
    if (n_verbs == 0 || n_objects == 0) throw DataError("tracker dimensions must be >= 1");
}

void ConfidenceTracker::accumulate(std::vector<std::pair<std::size_t, double>>& contributions) {
    // Canonical (cell, value) order makes the per-cell sums independent of
    // the order contributions arrived in.
    std::sort(contributions.begin(), contributions.end());
    std::size_t at = 0;
    while (at < contributions.size()) {
        const std::size_t cell = contributions[at].first;
        double sum = 0.0;
        double count = 0.0;
        while (at < contributions.size() && contributions[at].first == cell) {
            sum += contributions[at].second;
            count += 1.0;
            ++at;
        }
        const double old_count = counts_.data[cell];
        confidence_.data[cell] = (confidence_.data[cell] * old_count + sum) / (old_count + count);
        counts_.data[cell] = old_count + count;
    }
}

void ConfidenceTracker::update(const Matrix& probs, const CompositeBatch& cb,
                               const OuterLabels& labels) {
    if (&labels.batch() != &cb) throw DataError("label view does not belong to this composite batch");
    if (probs.rows != cb.size() || probs.cols != n_verbs())
        throw DataError("probability matrix shape does not match the composite batch");
    for (double p : probs.data) {
        if (!std::isfinite(p)) throw NumericError("non-finite probability in tracker update");
        if (p < 0.0 || p > 1.0) throw NumericError("probability outside [0, 1] in tracker update");
    }

    std::vector<std::pair<std::size_t, double>> contributions;
    contributions.reserve(cb.size());
    for (std::size_t i = 0; i < cb.size(); ++i) {
        const std::size_t object = cb.object_label(i);
        for (std::uint32_t v : cb.verb_labels(i))
            contributions.emplace_back(v * n_objects() + object, probs(i, v));
    }
    accumulate(contributions);
}

std::pair<Matrix, Matrix> ConfidenceTracker::snapshot() const { return {confidence_, counts_}; }

ConfidenceTracker ConfidenceTracker::load_snapshot(Matrix confidence, Matrix counts) {
    if (!confidence.same_shape(counts) || confidence.rows == 0 || confidence.cols == 0)
        throw DataError("snapshot matrices must share a non-empty shape");
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double c = counts.data[i];
        if (!std::isfinite(c) || c < 0.0 || c != std::floor(c))
            throw DataError("counts must be non-negative integers");
        if (!std::isfinite(confidence.data[i])) throw DataError("non-finite confidence value");
        if (c == 0.0 && confidence.data[i] != 0.0)
            throw DataError("invariant violated: zero count with nonzero confidence");
    }
    ConfidenceTracker t(confidence.rows, confidence.cols);
    t.confidence_ = std::move(confidence);
    t.counts_ = std::move(counts);
    return t;
}

void ConfidenceTracker::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write matrix file: " + path.string());
    out << "# n_verbs=" << n_verbs() << " n_objects=" << n_objects() << "\n";
    out << "verb_id,object_id,confidence,count\n";
    for (std::size_t v = 0; v < n_verbs(); ++v) {
        for (std::size_t o = 0; o < n_objects(); ++o) {
            if (counts_(v, o) == 0.0) continue;
            out << v << "," << o << "," << fmt_f64(confidence_(v, o)) << "," << fmt_f64(counts_(v, o))
                << "\n";
        }
    }
    if (!out) throw DataError("write failure on matrix file: " + path.string());
}

ConfidenceTracker ConfidenceTracker::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open matrix file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError("matrix file is empty: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t nv = 0, no = 0;
    if (std::sscanf(line.c_str(), "# n_verbs=%zu n_objects=%zu", &nv, &no) != 2 || nv == 0 || no == 0)
        throw DataError("matrix file missing dimension header: " + path.string());
    if (!std::getline(in, line)) throw DataError("matrix file missing column header");

    Matrix m(nv, no);
    Matrix c(nv, no);
    std::size_t line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t v = 0, o = 0;
        double conf = 0.0, count = 0.0;
        if (std::sscanf(line.c_str(), "%zu,%zu,%lf,%lf", &v, &o, &conf, &count) != 4)
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed matrix row");
        if (v >= nv || o >= no)
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": cell out of range");
        if (c(v, o) != 0.0)
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": duplicate cell");
        m(v, o) = conf;
        c(v, o) = count;
    }
    return load_snapshot(std::move(m), std::move(c));
}

ConfidenceTracker offline_affordance_matrix(const Dataset& dataset, const ScorerParams& params) {
    if (dataset.instances.empty()) throw DataError("offline affordance baseline needs a non-empty dataset");
    const std::size_t n = dataset.instances.size();
    const std::size_t width = dataset.d_v + dataset.d_o;

    ConfidenceTracker tracker(dataset.space.n_verbs(), dataset.space.n_objects());
    std::vector<std::pair<std::size_t, double>> contributions;
    contributions.reserve(n * n);

    // One verb source at a time against every object source keeps the
    // working set linear while still visiting all n^2 ordered pairs.
    Matrix block(n, width);
    for (std::size_t i = 0; i < n; ++i) {
        const Instance& verb_src = dataset.instances[i];
        for (std::size_t j = 0; j < n; ++j) {
            double* row = &block.data[j * width];
            std::copy(verb_src.verb_feature.begin(), verb_src.verb_feature.end(), row);
            const Instance& object_src = dataset.instances[j];
            std::copy(object_src.object_feature.begin(), object_src.object_feature.end(),
                      row + dataset.d_v);
        }
        const Matrix logits = forward(params, block);
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t object = dataset.instances[j].object_label;
            for (std::uint32_t v : verb_src.verb_labels)
                contributions.emplace_back(v * tracker.n_objects() + object, sigmoid(logits(j, v)));
        }
    }
    tracker.accumulate(contributions);
    return tracker;
}

}  // namespace cforge
