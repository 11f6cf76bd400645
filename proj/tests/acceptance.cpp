// Acceptance suite: ten numbered criteria, one pass/fail line each.
// Exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cforge/cli.hpp"
#include "cforge/composer.hpp"
#include "cforge/confidence_tracker.hpp"
#include "cforge/dataset.hpp"
#include "cforge/error.hpp"
#include "cforge/evaluator.hpp"
#include "cforge/scorer.hpp"
#include "cforge/trainer.hpp"
#include "test_util.hpp"

using namespace cforge;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// shared helpers

Instance random_instance(std::size_t n_verbs, std::size_t n_objects, std::size_t d, Rng& rng) {
    Instance inst;
    std::set<std::uint32_t> verbs;
    const std::size_t k = 1 + rng.below(2);
    while (verbs.size() < k) verbs.insert(static_cast<std::uint32_t>(rng.below(n_verbs)));
    inst.verb_labels.assign(verbs.begin(), verbs.end());
    inst.object_label = static_cast<std::uint32_t>(rng.below(n_objects));
    for (std::size_t i = 0; i < d; ++i) inst.verb_feature.push_back(rng.normal());
    for (std::size_t i = 0; i < d; ++i) inst.object_feature.push_back(rng.normal());
    return inst;
}

ConceptSpace hico_shaped_space() {
    ConceptSpace space(117, 80);
    std::size_t placed = 0;
    for (std::size_t v = 0; v < 117 && placed < 1681; ++v)
        for (std::size_t o = 0; o < 80 && placed < 1681; ++o, ++placed)
            space.set_status(v, o, placed < 600 ? ConceptStatus::Known : ConceptStatus::Unknown);
    return space;
}

// The headline synthetic world and training configuration. Training runs at
// these exact values for criteria 6, 9 and 10.
SynthConfig headline_world(std::uint64_t seed) {
    SynthConfig cfg;
    cfg.n_verbs = 12;
    cfg.n_objects = 10;
    cfg.n_groups = 4;
    cfg.known_fraction = 0.5;
    cfg.instances_per_known_concept = 20;
    cfg.noise_sigma = 0.3;
    cfg.d_v = 16;
    cfg.d_o = 16;
    cfg.heldout_per_object = 8;
    cfg.seed = seed;
    return cfg;
}

TrainConfig headline_train(std::uint64_t seed) {
    TrainConfig cfg;  // lambda 2/0.5/0.5, T=1
    cfg.iterations = 20000;
    cfg.batch_size = 8;
    cfg.hidden = 64;
    cfg.learning_rate = 0.02;
    cfg.seed = seed;
    return cfg;
}

struct HeadlineRun {
    double scl_ap = 0.0;
    double sclm_ap = 0.0;
    double unknown_prevalence = 0.0;
    double trained_map = 0.0;
    double untrained_map = 0.0;
};

// ---------------------------------------------------------------------------
// criteria

// 1. Max relative error of analytic gradients of the combined loss against
//    central finite differences, over 20 seeds, must stay below 1e-6.
Outcome criterion_gradient_exactness() {
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        SynthConfig wcfg;
        wcfg.n_verbs = 6;
        wcfg.n_objects = 5;
        wcfg.n_groups = 2;
        wcfg.d_v = 8;
        wcfg.d_o = 8;
        wcfg.instances_per_known_concept = 2;
        wcfg.seed = seed;
        const SynthWorld world = generate_synthetic(wcfg);

        Rng rng(seed * 31 + 7);
        const std::vector<Instance> batch = sample_batch(world.train, 3, rng);
        const CompositeBatch cb = compose(batch);
        const OuterLabels labels = outer_labels(cb);
        const KnownFilter filter = known_filter(cb, world.space);

        ScorerParams params = init_params(wcfg.d_v, wcfg.d_o, 16, wcfg.n_verbs, seed);
        ConfidenceTracker tracker(wcfg.n_verbs, wcfg.n_objects);
        const Matrix logits = forward(params, cb.features);
        Matrix probs(logits.rows, logits.cols);
        for (std::size_t i = 0; i < logits.size(); ++i) probs.data[i] = sigmoid(logits.data[i]);
        tracker.update(probs, cb, labels);
        const PseudoLabels pl = make_pseudo_labels(tracker, cb, labels);

        const TrainConfig cfg;  // lambda1=2, lambda2=0.5, lambda3=0.5, T=1
        const LossFn loss_fn = [&](const Matrix& z) {
            const CombinedLoss out = combined_loss(z, cb, filter, &pl, cfg);
            return std::make_pair(out.total, out.dlogits);
        };
        nudge_from_relu_kink(params, cb.features);
        worst = std::max(worst, gradient_check(params, cb.features, loss_fn, 100));
    }
    return {worst < 1e-6, "max relative error " + fmt(worst) + " over 20 seeds, bound 1e-6"};
}

// 2. 1000 random update() calls: M matches the replay-log mean within 1e-12,
//    C matches counts exactly, and permuting composites inside each call
//    changes nothing.
Outcome criterion_running_mean_oracle() {
    const std::size_t n_verbs = 6, n_objects = 5;
    Rng rng(2024);
    ConfidenceTracker tracker(n_verbs, n_objects);
    ConfidenceTracker permuted(n_verbs, n_objects);
    std::map<std::size_t, std::vector<double>> log;

    for (int call = 0; call < 1000; ++call) {
        std::vector<Instance> batch;
        const std::size_t n = 2 + rng.below(5);
        for (std::size_t i = 0; i < n; ++i) batch.push_back(random_instance(n_verbs, n_objects, 2, rng));
        const CompositeBatch cb = compose(batch);
        Matrix probs(cb.size(), n_verbs);
        for (double& p : probs.data) p = rng.uniform();
        for (std::size_t i = 0; i < cb.size(); ++i)
            for (std::uint32_t v : cb.verb_labels(i))
                log[v * n_objects + cb.object_label(i)].push_back(probs(i, v));
        tracker.update(probs, cb, outer_labels(cb));

        std::vector<Instance> reversed(batch.rbegin(), batch.rend());
        const CompositeBatch rcb = compose(reversed);
        Matrix rprobs(rcb.size(), n_verbs);
        for (std::size_t vs = 0; vs < n; ++vs)
            for (std::size_t os = 0; os < n; ++os)
                for (std::size_t v = 0; v < n_verbs; ++v)
                    rprobs(vs * n + os, v) = probs((n - 1 - vs) * n + (n - 1 - os), v);
        permuted.update(rprobs, rcb, outer_labels(rcb));
    }

    if (!(tracker == permuted)) return {false, "permuting composites changed the tracker"};

    double worst = 0.0;
    for (std::size_t cell = 0; cell < n_verbs * n_objects; ++cell) {
        const auto it = log.find(cell);
        const double count = it == log.end() ? 0.0 : static_cast<double>(it->second.size());
        if (tracker.counts().data[cell] != count)
            return {false, "count mismatch at cell " + std::to_string(cell)};
        if (it == log.end()) continue;
        double sum = 0.0;
        for (double x : it->second) sum += x;
        worst = std::max(worst,
                         std::abs(tracker.confidence().data[cell] - sum / count));
    }
    return {worst < 1e-12,
            "1000 calls, max |M - replay mean| " + fmt(worst) + " (bound 1e-12), counts exact"};
}

// 3. offline_affordance_matrix equals a streaming update over all n^2 pairs
//    within 1e-12 for dataset sizes up to 50.
Outcome criterion_offline_online_equivalence() {
    double worst = 0.0;
    for (const std::size_t size : {std::size_t{1}, std::size_t{2}, std::size_t{10}, std::size_t{30},
                                   std::size_t{50}}) {
        SynthConfig wcfg;
        wcfg.n_verbs = 7;
        wcfg.n_objects = 6;
        wcfg.n_groups = 3;
        wcfg.d_v = 6;
        wcfg.d_o = 6;
        wcfg.instances_per_known_concept = 8;
        wcfg.seed = 90 + size;
        Dataset ds = generate_synthetic(wcfg).train;
        if (ds.instances.size() < size) return {false, "world too small for the test"};
        ds.instances.resize(size);

        const ScorerParams params = init_params(wcfg.d_v, wcfg.d_o, 12, wcfg.n_verbs, size);
        const ConfidenceTracker offline = offline_affordance_matrix(ds, params);

        ConfidenceTracker streaming(wcfg.n_verbs, wcfg.n_objects);
        const CompositeBatch cb = compose(ds.instances);
        const Matrix logits = forward(params, cb.features);
        Matrix probs(logits.rows, logits.cols);
        for (std::size_t i = 0; i < logits.size(); ++i) probs.data[i] = sigmoid(logits.data[i]);
        streaming.update(probs, cb, outer_labels(cb));

        for (std::size_t i = 0; i < offline.confidence().size(); ++i) {
            worst = std::max(worst, std::abs(offline.confidence().data[i] -
                                             streaming.confidence().data[i]));
            if (offline.counts().data[i] != streaming.counts().data[i])
                return {false, "count mismatch at size " + std::to_string(size)};
        }
    }
    return {worst < 1e-12, "sizes {1,2,10,30,50}, max |offline - streaming| " + fmt(worst) +
                               " (bound 1e-12)"};
}

// 4. average_precision equals the definition-based brute force exactly on
//    10000 random short inputs (length <= 20) and 1000 longer ones.
Outcome criterion_ap_oracle() {
    const auto brute_force = [](const std::vector<double>& scores,
                                const std::vector<std::uint8_t>& positives) {
        const std::size_t n = scores.size();
        const auto beats = [&](std::size_t a, std::size_t b) {
            return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
        };
        std::vector<std::pair<std::size_t, double>> by_rank;
        for (std::size_t i = 0; i < n; ++i) {
            if (!positives[i]) continue;
            std::size_t rank = 1, hits = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i && beats(j, i)) {
                    ++rank;
                    hits += positives[j];
                }
            }
            by_rank.emplace_back(rank, static_cast<double>(hits + 1) / static_cast<double>(rank));
        }
        std::sort(by_rank.begin(), by_rank.end());
        double sum = 0.0;
        for (const auto& [rank, prec] : by_rank) sum += prec;
        return sum / static_cast<double>(by_rank.size());
    };

    Rng rng(4040);
    const auto run_case = [&](std::size_t n) {
        std::vector<double> scores(n);
        std::vector<std::uint8_t> positives(n);
        const bool coarse = rng.below(2) == 0;  // coarse grids force ties
        bool any = false;
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = coarse ? static_cast<double>(rng.below(6)) / 5.0 : rng.uniform();
            positives[i] = rng.below(2) ? 1 : 0;
            any = any || positives[i];
        }
        if (!any) positives[rng.below(n)] = 1;
        return average_precision(scores, positives) == brute_force(scores, positives);
    };

    for (int trial = 0; trial < 10000; ++trial)
        if (!run_case(1 + rng.below(20))) return {false, "mismatch on a short input"};
    for (int trial = 0; trial < 1000; ++trial)
        if (!run_case(21 + rng.below(180))) return {false, "mismatch on a long input"};
    return {true, "10000 short + 1000 long inputs, all exactly equal to brute force"};
}

// 5. Mean unknown-AP of random matrices on a HICO-shaped space over 10 seeds
//    must land inside [0.1034, 0.1434] (prevalence 0.1234 +- 0.02).
Outcome criterion_random_baseline() {
    const ConceptSpace space = hico_shaped_space();
    double mean = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
        mean += concept_ap(random_matrix(space, seed), space, ConceptTarget::Unknown);
    mean /= 10.0;
    return {mean >= 0.1034 && mean <= 0.1434,
            "mean unknown-AP " + fmt(mean) + " over 10 seeds, window [0.1034, 0.1434]"};
}

std::vector<HeadlineRun> run_headline(std::vector<TrainResult>* scl_results) {
    std::vector<HeadlineRun> runs;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const SynthWorld world = generate_synthetic(headline_world(seed));
        const TrainConfig scl_cfg = headline_train(seed);
        TrainConfig sclm_cfg = scl_cfg;
        sclm_cfg.self_training = false;

        TrainResult scl = train(world.train, world.space, scl_cfg);
        const TrainResult sclm = train(world.train, world.space, sclm_cfg);

        HeadlineRun run;
        run.scl_ap = concept_ap(scl.tracker.confidence(), world.space, ConceptTarget::Unknown);
        run.sclm_ap = concept_ap(sclm.tracker.confidence(), world.space, ConceptTarget::Unknown);
        run.unknown_prevalence = prevalence(world.space, ConceptTarget::Unknown);
        run.trained_map =
            affordance_map(scl.params, world.train, world.heldout, world.space, AffordanceTarget::All)
                .map;
        const ScorerParams untrained = init_params(16, 16, scl_cfg.hidden, 12, seed);
        run.untrained_map =
            affordance_map(untrained, world.train, world.heldout, world.space, AffordanceTarget::All)
                .map;
        runs.push_back(run);
        if (scl_results) scl_results->push_back(std::move(scl));
    }
    return runs;
}

// 6. Scaled directional reproduction: over 5 seeds, mean unknown-AP of SCL
//    beats SCL- by >= 0.05 and both beat random prevalence by >= 0.10.
Outcome criterion_headline(const std::vector<HeadlineRun>& runs) {
    double scl = 0.0, sclm = 0.0, prev = 0.0;
    for (const HeadlineRun& run : runs) {
        scl += run.scl_ap;
        sclm += run.sclm_ap;
        prev += run.unknown_prevalence;
    }
    scl /= 5.0;
    sclm /= 5.0;
    prev /= 5.0;
    const bool pass = scl >= sclm + 0.05 && scl >= prev + 0.10 && sclm >= prev + 0.10;
    return {pass, "mean unknown-AP scl " + fmt(scl) + " vs scl- " + fmt(sclm) + " (delta " +
                      fmt(scl - sclm) + ", need >= 0.05), prevalence " + fmt(prev) +
                      " (need both >= prevalence + 0.10)"};
}

// 7. make_pseudo_labels is bit-identical for 100 random matrices under exact
//    scalings by 0.1, 3.7 and 100.
Outcome criterion_pseudo_label_scale_invariance() {
    Rng rng(777);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n_verbs = 3 + rng.below(5);
        const std::size_t n_objects = 3 + rng.below(4);
        std::vector<Instance> batch;
        const std::size_t n = 2 + rng.below(4);
        for (std::size_t i = 0; i < n; ++i)
            batch.push_back(random_instance(n_verbs, n_objects, 2, rng));
        const CompositeBatch cb = compose(batch);
        const OuterLabels labels = outer_labels(cb);

        // Entries are 10 * (40-bit dyadic), so multiplying by 0.1, 3.7 or 100
        // is exactly representable: the scaled matrices are true real-number
        // multiples of the base and feed through the snapshot bypass.
        Matrix counts(n_verbs, n_objects), dyadic(n_verbs, n_objects);
        for (std::size_t i = 0; i < counts.size(); ++i) {
            counts.data[i] = static_cast<double>(rng.below(3));
            if (counts.data[i] > 0.0)
                dyadic.data[i] = static_cast<double>(rng.below(std::uint64_t{1} << 40)) * 0x1.0p-43;
        }
        Matrix base(n_verbs, n_objects);
        for (std::size_t i = 0; i < base.size(); ++i) base.data[i] = 10.0 * dyadic.data[i];

        const PseudoLabels want =
            make_pseudo_labels(ConfidenceTracker::load_snapshot(base, counts), cb, labels);
        for (const double factor : {1.0, 37.0, 1000.0}) {  // 0.1x, 3.7x, 100x of base
            Matrix scaled(n_verbs, n_objects);
            for (std::size_t i = 0; i < scaled.size(); ++i)
                scaled.data[i] = factor * dyadic.data[i];
            const PseudoLabels got =
                make_pseudo_labels(ConfidenceTracker::load_snapshot(scaled, counts), cb, labels);
            if (!(got.targets == want.targets && got.active == want.active &&
                  got.included == want.included))
                return {false, "bit mismatch at trial " + std::to_string(trial)};
        }
    }
    return {true, "100 matrices x scales {0.1, 3.7, 100}, all outputs bit-identical"};
}

// 8. Temperature reaches only the self-training loss: trackers agree at
//    iteration 1 across T, and a frozen-scorer harness produces bit-identical
//    pseudo labels at every iteration.
Outcome criterion_temperature_locality() {
    SynthConfig wcfg;
    wcfg.n_verbs = 6;
    wcfg.n_objects = 5;
    wcfg.n_groups = 2;
    wcfg.d_v = 6;
    wcfg.d_o = 6;
    wcfg.instances_per_known_concept = 3;
    wcfg.seed = 5;
    const SynthWorld world = generate_synthetic(wcfg);

    TrainConfig one_iter;
    one_iter.iterations = 1;
    one_iter.eval_every = 1;
    one_iter.batch_size = 4;
    one_iter.hidden = 8;
    one_iter.seed = 3;
    TrainConfig hot = one_iter;
    hot.temperature = 2.0;
    const TrainResult cold_run = train(world.train, world.space, one_iter);
    const TrainResult hot_run = train(world.train, world.space, hot);
    if (!(cold_run.tracker == hot_run.tracker))
        return {false, "iteration-1 trackers differ across temperatures"};

    // Frozen scorer: the loss is computed (so T is exercised) but never
    // applied; pseudo labels must not feel the temperature.
    const ScorerParams params = init_params(wcfg.d_v, wcfg.d_o, 8, wcfg.n_verbs, 11);
    const auto harness = [&](double temperature) {
        Rng rng(17);
        ConfidenceTracker tracker(wcfg.n_verbs, wcfg.n_objects);
        std::vector<PseudoLabels> trace;
        for (int iter = 0; iter < 50; ++iter) {
            const std::vector<Instance> batch = sample_batch(world.train, 4, rng);
            const CompositeBatch cb = compose(batch);
            const OuterLabels labels = outer_labels(cb);
            const Matrix logits = forward(params, cb.features);
            Matrix probs(logits.rows, logits.cols);
            for (std::size_t i = 0; i < logits.size(); ++i) probs.data[i] = sigmoid(logits.data[i]);
            tracker.update(probs, cb, labels);
            PseudoLabels pl = make_pseudo_labels(tracker, cb, labels);
            (void)self_training_loss(logits, pl, temperature);
            trace.push_back(std::move(pl));
        }
        return trace;
    };
    const std::vector<PseudoLabels> cold = harness(1.0);
    const std::vector<PseudoLabels> warm = harness(2.0);
    for (std::size_t i = 0; i < cold.size(); ++i) {
        if (!(cold[i].targets == warm[i].targets && cold[i].active == warm[i].active &&
              cold[i].included == warm[i].included))
            return {false, "pseudo labels diverged at harness iteration " + std::to_string(i)};
    }
    return {true, "trackers equal at iteration 1; 50 harness iterations bit-identical across T"};
}

// 9. Two cmd_train runs with identical flags produce byte-identical
//    checkpoint, matrix and history files.
Outcome criterion_determinism() {
    const auto dir = testutil::make_temp_dir("acceptance");
    const auto cli = [&](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"concept_forge"};
        for (const std::string& a : args) argv.push_back(a.c_str());
        std::ostringstream sink;  // keep the config echo out of the criterion report
        std::streambuf* old = std::cout.rdbuf(sink.rdbuf());
        const int code = run_cli(static_cast<int>(argv.size()), argv.data());
        std::cout.rdbuf(old);
        return code;
    };
    if (cli({"synth", "--out", (dir / "data").string(), "--seed", "1"}) != 0)
        return {false, "synth failed"};
    const std::vector<std::string> base{"train",
                                        "--data",
                                        (dir / "data" / "train").string(),
                                        "--iterations",
                                        "20000",
                                        "--batch-size",
                                        "8",
                                        "--learning-rate",
                                        "0.02",
                                        "--seed",
                                        "1"};
    for (const char* out : {"r1", "r2"}) {
        std::vector<std::string> args = base;
        args.push_back("--out");
        args.push_back((dir / out).string());
        if (cli(args) != 0) return {false, "train failed"};
    }
    for (const char* name : {"checkpoint.bin", "matrix.csv", "history.csv"}) {
        if (testutil::read_bytes(dir / "r1" / name) != testutil::read_bytes(dir / "r2" / name))
            return {false, std::string(name) + " differs between identical runs"};
    }
    return {true, "checkpoint.bin, matrix.csv, history.csv byte-identical across two runs"};
}

// 10. Affordance recognition: the trained SCL scorer beats the untrained
//     initialization by >= 0.10 mAP, averaged over the headline seeds.
Outcome criterion_affordance_directional(const std::vector<HeadlineRun>& runs) {
    double trained = 0.0, untrained = 0.0;
    for (const HeadlineRun& run : runs) {
        trained += run.trained_map;
        untrained += run.untrained_map;
    }
    trained /= 5.0;
    untrained /= 5.0;
    return {trained >= untrained + 0.10, "mean affordance mAP trained " + fmt(trained) +
                                             " vs untrained " + fmt(untrained) + " (delta " +
                                             fmt(trained - untrained) + ", need >= 0.10)"};
}

}  // namespace

int main() {
    struct Entry {
        int id;
        const char* name;
        Outcome outcome;
        double seconds;
    };
    std::vector<Entry> entries;

    std::vector<HeadlineRun> headline_runs;
    const auto timed = [&](int id, const char* name, auto&& fn) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = fn();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        entries.push_back({id, name, outcome, seconds});
    };

    timed(1, "gradient exactness", criterion_gradient_exactness);
    timed(2, "running-mean oracle", criterion_running_mean_oracle);
    timed(3, "offline/online equivalence", criterion_offline_online_equivalence);
    timed(4, "average-precision oracle", criterion_ap_oracle);
    timed(5, "random-baseline sanity", criterion_random_baseline);
    timed(6, "headline directional reproduction", [&] {
        headline_runs = run_headline(nullptr);
        return criterion_headline(headline_runs);
    });
    timed(7, "pseudo-label scale invariance", criterion_pseudo_label_scale_invariance);
    timed(8, "temperature locality", criterion_temperature_locality);
    timed(9, "training determinism", criterion_determinism);
    timed(10, "affordance directional check", [&] {
        if (headline_runs.empty()) return Outcome{false, "headline runs unavailable"};
        return criterion_affordance_directional(headline_runs);
    });

    bool all_pass = true;
    for (const Entry& e : entries) {
        all_pass = all_pass && e.outcome.pass;
        std::printf("[%s] criterion %2d - %s: %s (%.1fs)\n", e.outcome.pass ? "PASS" : "FAIL", e.id,
                    e.name, e.outcome.detail.c_str(), e.seconds);
    }
    std::printf("acceptance: %zu/%zu criteria passed\n",
                static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(),
                                                       [](const Entry& e) { return e.outcome.pass; })),
                entries.size());
    return all_pass ? 0 : 1;
}
