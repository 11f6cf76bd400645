#include "cforge/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cforge/error.hpp"
#include "cforge/evaluator.hpp"

namespace cforge {

PseudoLabels make_pseudo_labels(const ConfidenceTracker& tracker, const CompositeBatch& cb,
                                const OuterLabels& labels, bool normalize) {
    if (&labels.batch() != &cb) throw DataError("label view does not belong to this composite batch");
    const std::size_t n = cb.size();
    const std::size_t n_verbs = tracker.n_verbs();
    const Matrix& conf = tracker.confidence();
    const Matrix& counts = tracker.counts();

    PseudoLabels pl;
    pl.targets = Matrix(n, n_verbs);
    pl.active.assign(n, 0);
    pl.included.assign(n * n_verbs, 0);

    const double peak = max_entry(conf);
    if (peak == 0.0) return pl;  // nothing observed yet: every composite is removed

    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t object = cb.object_label(i);
        bool any_updated = false;
        for (std::uint32_t v : cb.verb_labels(i))
            if (counts(v, object) > 0.0) any_updated = true;
        if (!any_updated) continue;

        pl.active[i] = 1;
        for (std::size_t v = 0; v < n_verbs; ++v) {
            if (!labels.verb(i, static_cast<std::uint32_t>(v))) {
                pl.included[i * n_verbs + v] = 1;  // unlabeled verbs are negatives
                continue;
            }
            if (counts(v, object) > 0.0) {
                pl.included[i * n_verbs + v] = 1;
                pl.targets(i, v) = normalize ? conf(v, object) / peak : conf(v, object);
            }
            // labeled verb over a never-updated cell: unknown, not negative
        }
    }
    return pl;
}

LossValue self_training_loss(const Matrix& logits, const PseudoLabels& pl, double temperature) {
    if (temperature <= 0.0) throw DataError("temperature must be positive");
    if (!logits.same_shape(pl.targets)) throw DataError("logits and pseudo labels disagree in shape");

    LossValue out;
    out.grad = Matrix(logits.rows, logits.cols);
    std::size_t n_active = 0;
    for (std::size_t i = 0; i < logits.rows; ++i) n_active += pl.active[i];
    if (n_active == 0) return out;

    for (std::size_t i = 0; i < logits.rows; ++i) {
        if (!pl.active[i]) continue;
        std::size_t n_included = 0;
        for (std::size_t v = 0; v < logits.cols; ++v) n_included += pl.entry(i, v);
        const double scale = 1.0 / (static_cast<double>(n_included) * static_cast<double>(n_active));
        for (std::size_t v = 0; v < logits.cols; ++v) {
            if (!pl.entry(i, v)) continue;
            const double z = logits(i, v) / temperature;
            const double y = pl.targets(i, v);
            out.loss += scale * bce_with_logits(z, y);
            out.grad(i, v) = scale * (sigmoid(z) - y) / temperature;
        }
    }
    return out;
}

LossValue hoi_loss(const Matrix& diagonal_logits, const std::vector<Instance>& batch,
                   std::size_t n_verbs) {
    if (diagonal_logits.rows != batch.size() || diagonal_logits.cols != n_verbs)
        throw DataError("diagonal logits do not match the batch");

    LossValue out;
    out.grad = Matrix(diagonal_logits.rows, n_verbs);
    if (batch.empty()) return out;

    const double scale = 1.0 / (static_cast<double>(batch.size()) * static_cast<double>(n_verbs));
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& labels = batch[i].verb_labels;
        for (std::size_t v = 0; v < n_verbs; ++v) {
            const double y =
                std::binary_search(labels.begin(), labels.end(), static_cast<std::uint32_t>(v)) ? 1.0
                                                                                                : 0.0;
            const double z = diagonal_logits(i, v);
            out.loss += scale * bce_with_logits(z, y);
            out.grad(i, v) = scale * (sigmoid(z) - y);
        }
    }
    return out;
}

LossValue compositional_loss(const Matrix& logits, const KnownFilter& filter,
                             const CompositeBatch& cb) {
    if (logits.rows != cb.size() || filter.n_composites != cb.size() ||
        logits.cols != filter.n_verbs)
        throw DataError("logits, filter and composite batch disagree in shape");

    LossValue out;
    out.grad = Matrix(logits.rows, logits.cols);
    std::size_t n_retained = 0;
    for (std::size_t i = 0; i < cb.size(); ++i) n_retained += filter.droppable[i] ? 0 : 1;
    if (n_retained == 0) return out;

    const OuterLabels labels(cb);
    for (std::size_t i = 0; i < cb.size(); ++i) {
        if (filter.droppable[i]) continue;
        // A labeled verb whose cell is not Known leaves the sum entirely.
        std::size_t n_included = 0;
        for (std::size_t v = 0; v < logits.cols; ++v) {
            const bool labeled = labels.verb(i, static_cast<std::uint32_t>(v));
            if (!labeled || filter.at(i, static_cast<std::uint32_t>(v))) ++n_included;
        }
        const double scale = 1.0 / (static_cast<double>(n_included) * static_cast<double>(n_retained));
        for (std::size_t v = 0; v < logits.cols; ++v) {
            const bool labeled = labels.verb(i, static_cast<std::uint32_t>(v));
            const bool retained = filter.at(i, static_cast<std::uint32_t>(v));
            if (labeled && !retained) continue;
            const double y = retained ? 1.0 : 0.0;
            const double z = logits(i, v);
            out.loss += scale * bce_with_logits(z, y);
            out.grad(i, v) = scale * (sigmoid(z) - y);
        }
    }
    return out;
}

CombinedLoss combined_loss(const Matrix& logits, const CompositeBatch& cb, const KnownFilter& filter,
                           const PseudoLabels* pl, const TrainConfig& config) {
    const std::size_t n = cb.n_sources;

    Matrix diag(n, logits.cols);
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t v = 0; v < logits.cols; ++v) diag(s, v) = logits(s * n + s, v);

    const LossValue h = hoi_loss(diag, cb.sources, logits.cols);
    const LossValue c = compositional_loss(logits, filter, cb);

    CombinedLoss out;
    out.hoi = h.loss;
    out.compositional = c.loss;
    out.dlogits = Matrix(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.size(); ++i)
        out.dlogits.data[i] = config.lambda2 * c.grad.data[i];
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t v = 0; v < logits.cols; ++v)
            out.dlogits(s * n + s, v) += config.lambda1 * h.grad(s, v);

    if (pl != nullptr) {
        const LossValue d = self_training_loss(logits, *pl, config.temperature);
        out.self_training = d.loss;
        for (std::size_t i = 0; i < logits.size(); ++i)
            out.dlogits.data[i] += config.lambda3 * d.grad.data[i];
    }

    out.total = config.lambda1 * out.hoi + config.lambda2 * out.compositional +
                config.lambda3 * out.self_training;
    return out;
}

TrainResult train(const Dataset& dataset, const ConceptSpace& space, const TrainConfig& config) {
    if (dataset.space != space)
        throw DataError("dataset was built against a different concept space");
    validate_training_legality(dataset);
    if (config.temperature <= 0.0) throw DataError("temperature must be positive");

    std::optional<ConfidenceTracker> frozen;
    if (config.frozen_matrix) {
        frozen = ConfidenceTracker::load(*config.frozen_matrix);
        if (frozen->n_verbs() != space.n_verbs() || frozen->n_objects() != space.n_objects())
            throw DataError("frozen matrix dimensions do not match the concept space");
    }

    TrainResult result;
    result.params = init_params(dataset.d_v, dataset.d_o, config.hidden, space.n_verbs(), config.seed);
    result.opt = init_optim(result.params, config.learning_rate, config.momentum);
    result.tracker = ConfidenceTracker(space.n_verbs(), space.n_objects());

    Rng rng(config.seed);
    const bool want_aux = config.verb_aux_weight > 0.0;

    for (std::size_t iter = 1; iter <= config.iterations; ++iter) {
        const std::vector<Instance> batch = sample_batch(dataset, config.batch_size, rng);
        const CompositeBatch cb = compose(batch);
        const OuterLabels labels = outer_labels(cb);
        const KnownFilter filter = known_filter(cb, space);

        ForwardTape tape;
        const Matrix logits = forward(result.params, cb.features, &tape);

        // Statistics first, so this iteration's pseudo labels already see them.
        Matrix probs(logits.rows, logits.cols);
        for (std::size_t i = 0; i < logits.size(); ++i) probs.data[i] = sigmoid(logits.data[i]);
        result.tracker.update(probs, cb, labels);

        std::optional<PseudoLabels> pl;
        if (config.self_training) {
            const ConfidenceTracker& source = frozen ? *frozen : result.tracker;
            pl = make_pseudo_labels(source, cb, labels, config.normalize_pseudo_labels);
        }

        const CombinedLoss losses =
            combined_loss(logits, cb, filter, pl ? &*pl : nullptr, config);
        double total = losses.total;

        ScorerParams grads = backward(result.params, tape, losses.dlogits);

        if (want_aux) {
            // Auxiliary multi-hot BCE on the verb half alone (object features
            // zeroed) to regularize verb representations.
            Matrix verb_only(batch.size(), dataset.d_v + dataset.d_o);
            for (std::size_t s = 0; s < batch.size(); ++s)
                std::copy(batch[s].verb_feature.begin(), batch[s].verb_feature.end(),
                          &verb_only.data[s * verb_only.cols]);
            ForwardTape aux_tape;
            const Matrix aux_logits = forward(result.params, verb_only, &aux_tape);
            const LossValue aux = hoi_loss(aux_logits, batch, space.n_verbs());
            total += config.verb_aux_weight * aux.loss;
            Matrix aux_up(aux.grad.rows, aux.grad.cols);
            for (std::size_t i = 0; i < aux_up.size(); ++i)
                aux_up.data[i] = config.verb_aux_weight * aux.grad.data[i];
            const ScorerParams aux_grads = backward(result.params, aux_tape, aux_up);
            for (std::size_t i = 0; i < grads.n_params(); ++i) grads.param(i) += aux_grads.param(i);
        }

        if (!std::isfinite(total))
            throw NumericError("non-finite loss at iteration " + std::to_string(iter) +
                               " (hoi=" + std::to_string(losses.hoi) +
                               " compositional=" + std::to_string(losses.compositional) +
                               " self_training=" + std::to_string(losses.self_training) + ")");

        sgd_step(result.params, grads, result.opt);

        if (config.eval_every > 0 && iter % config.eval_every == 0) {
            HistoryRow row;
            row.iteration = iter;
            row.loss_total = total;
            row.loss_hoi = losses.hoi;
            row.loss_compositional = losses.compositional;
            row.loss_self_training = losses.self_training;
            const Matrix& conf = result.tracker.confidence();
            row.unknown_ap = space.count(ConceptStatus::Unknown) > 0
                                 ? concept_ap(conf, space, ConceptTarget::Unknown)
                                 : std::numeric_limits<double>::quiet_NaN();
            row.known_ap = space.count(ConceptStatus::Known) > 0
                               ? concept_ap(conf, space, ConceptTarget::Known)
                               : std::numeric_limits<double>::quiet_NaN();
            result.history.push_back(row);
        }
    }
    return result;
}

std::vector<double> entangled_label_update(const std::vector<double>& verb_label,
                                           std::uint32_t object_label,
                                           const ConfidenceTracker& tracker) {
    if (verb_label.size() != tracker.n_verbs())
        throw DataError("verb label length does not match the tracker");
    if (object_label >= tracker.n_objects()) throw DataError("object label out of range");
    std::vector<double> out(verb_label.size());
    for (std::size_t v = 0; v < out.size(); ++v)
        out[v] = std::min(verb_label[v] + tracker.confidence()(v, object_label), 1.0);
    return out;
}

}  // namespace cforge
