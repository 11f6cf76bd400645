#include "cforge/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <type_traits>
#include <vector>

#include <CLI11.hpp>

#include "cforge/concept_space.hpp"
#include "cforge/confidence_tracker.hpp"
#include "cforge/dataset.hpp"
#include "cforge/error.hpp"
#include "cforge/evaluator.hpp"
#include "cforge/fmt.hpp"
#include "cforge/scorer.hpp"
#include "cforge/trainer.hpp"

namespace cforge {

namespace {

namespace fs = std::filesystem;

// Upper bound on internal worker threads, from CONCEPT_FORGE_THREADS.
// The current engine runs single-threaded, so the cap is only echoed.
std::size_t read_thread_cap() {
    const char* raw = std::getenv("CONCEPT_FORGE_THREADS");
    if (raw == nullptr || *raw == '\0') return 1;
    char* end = nullptr;
    const long v = std::strtol(raw, &end, 10);
    if (end == raw || *end != '\0' || v <= 0)
        throw CLI::ValidationError("CONCEPT_FORGE_THREADS", "must be a positive integer");
    return static_cast<std::size_t>(v);
}

struct TrainCli {
    std::string data_dir;
    std::string out_dir;
    std::string profile;
    TrainConfig cfg;
    std::string frozen;
    bool no_self_training = false;
    bool no_pseudo_normalization = false;
};

// Plain key=value config file; keys are the long flag names without dashes.
// Command-line flags always win over file values.
std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError(
                "--config", path + ":" + std::to_string(line_no) + ": expected key=value");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

void parse_config_value(const std::string& key, const std::string& value, double& target) {
    char* end = nullptr;
    target = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
        throw CLI::ValidationError("--config", key + ": not a number: " + value);
}

void parse_config_value(const std::string& key, const std::string& value, bool& target) {
    if (value == "true" || value == "1") target = true;
    else if (value == "false" || value == "0") target = false;
    else throw CLI::ValidationError("--config", key + ": not a boolean: " + value);
}

void parse_config_value(const std::string&, const std::string& value, std::string& target) {
    target = value;
}

template <typename T>
    requires std::is_unsigned_v<T>
void parse_config_value(const std::string& key, const std::string& value, T& target) {
    const char* first = value.data();
    const char* last = first + value.size();
    auto res = std::from_chars(first, last, target);
    if (res.ec != std::errc{} || res.ptr != last)
        throw CLI::ValidationError("--config", key + ": not a non-negative integer: " + value);
}

// Applies file values to every option the command line left untouched and
// rejects unknown keys.
class ConfigApplier {
public:
    ConfigApplier(std::map<std::string, std::string> kv, const CLI::App* cmd)
        : kv_(std::move(kv)), cmd_(cmd) {}

    template <typename T>
    void apply(const std::string& key, T& target) {
        const auto it = kv_.find(key);
        if (it == kv_.end()) return;
        consumed_.insert(key);
        if (cmd_->count("--" + key) > 0) return;  // flag wins
        parse_config_value(key, it->second, target);
        set_.insert(key);
    }

    bool was_set(const std::string& key) const { return set_.count(key) > 0; }

    void finish() const {
        for (const auto& [key, value] : kv_) {
            (void)value;
            if (!consumed_.count(key))
                throw CLI::ValidationError("--config", "unknown key: " + key);
        }
    }

private:
    std::map<std::string, std::string> kv_;
    const CLI::App* cmd_;
    std::set<std::string> consumed_;
    std::set<std::string> set_;
};

void echo_config(std::ostream& out, const TrainCli& t, std::size_t threads) {
    out << "data=" << t.data_dir << "\n";
    out << "out=" << t.out_dir << "\n";
    out << "profile=" << (t.profile.empty() ? "none" : t.profile) << "\n";
    out << "lambda1=" << fmt_f64(t.cfg.lambda1) << "\n";
    out << "lambda2=" << fmt_f64(t.cfg.lambda2) << "\n";
    out << "lambda3=" << fmt_f64(t.cfg.lambda3) << "\n";
    out << "temperature=" << fmt_f64(t.cfg.temperature) << "\n";
    out << "batch_size=" << t.cfg.batch_size << "\n";
    out << "iterations=" << t.cfg.iterations << "\n";
    out << "seed=" << t.cfg.seed << "\n";
    out << "self_training=" << (t.cfg.self_training ? "true" : "false") << "\n";
    out << "normalize_pseudo_labels=" << (t.cfg.normalize_pseudo_labels ? "true" : "false") << "\n";
    out << "frozen_matrix=" << (t.cfg.frozen_matrix ? t.cfg.frozen_matrix->string() : "none") << "\n";
    out << "eval_every=" << t.cfg.eval_every << "\n";
    out << "hidden=" << t.cfg.hidden << "\n";
    out << "learning_rate=" << fmt_f64(t.cfg.learning_rate) << "\n";
    out << "momentum=" << fmt_f64(t.cfg.momentum) << "\n";
    out << "verb_aux_weight=" << fmt_f64(t.cfg.verb_aux_weight) << "\n";
    out << "threads=" << threads << "\n";
}

void write_history(const std::vector<HistoryRow>& history, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write history: " + path.string());
    out << "iteration,loss_total,loss_hoi,loss_compositional,loss_self_training,unknown_ap,known_ap\n";
    for (const HistoryRow& row : history) {
        out << row.iteration << "," << fmt_f64(row.loss_total) << "," << fmt_f64(row.loss_hoi) << ","
            << fmt_f64(row.loss_compositional) << "," << fmt_f64(row.loss_self_training) << ","
            << fmt_f64(row.unknown_ap) << "," << fmt_f64(row.known_ap) << "\n";
    }
    if (!out) throw DataError("write failure on history: " + path.string());
}

void run_train(const TrainCli& t, std::size_t threads) {
    const Dataset dataset = read_dataset(t.data_dir);
    if (dataset.split != Split::Train) throw DataError("training requires a train split");

    echo_config(std::cout, t, threads);
    fs::create_directories(t.out_dir);
    {
        std::ofstream cfg_out(fs::path(t.out_dir) / "config.txt", std::ios::binary);
        if (!cfg_out) throw DataError("cannot write config echo");
        echo_config(cfg_out, t, threads);
    }

    const TrainResult result = train(dataset, dataset.space, t.cfg);

    save_checkpoint(result.params, result.opt, fs::path(t.out_dir) / "checkpoint.bin");
    result.tracker.save(fs::path(t.out_dir) / "matrix.csv");
    write_history(result.history, fs::path(t.out_dir) / "history.csv");

    if (!result.history.empty()) {
        const HistoryRow& last = result.history.back();
        std::cout << "final unknown_ap=" << fmt_f64(last.unknown_ap)
                  << " known_ap=" << fmt_f64(last.known_ap) << "\n";
    }
}

std::vector<std::size_t> default_recall_ks(const ConceptSpace& space) {
    const std::size_t pool = space.n_cells() - space.count(ConceptStatus::Known);
    return {pool * 25 / 100, pool * 50 / 100, pool * 75 / 100, pool};
}

void run_eval(const std::string& matrix_file, const std::string& concepts_file,
              const std::string& out_file) {
    const ConfidenceTracker tracker = ConfidenceTracker::load(matrix_file);
    const ConceptSpace space = load_concepts(concepts_file, tracker.n_verbs(), tracker.n_objects());
    const MetricReport report =
        evaluate_matrix(tracker.confidence(), space, default_recall_ks(space));
    write_report(report, out_file);
    std::cout << "unknown_ap=" << fmt_f64(report.unknown_ap) << "\n";
    std::cout << "known_ap=" << fmt_f64(report.known_ap) << "\n";
    for (const auto& [k, recall] : report.recall_at_k)
        std::cout << "recall@" << k << "=" << fmt_f64(recall) << "\n";
}

void run_discover(const std::string& matrix_file, const std::string& concepts_file, std::size_t k,
                  const std::string& out_file) {
    const ConfidenceTracker tracker = ConfidenceTracker::load(matrix_file);
    const ConceptSpace space = load_concepts(concepts_file, tracker.n_verbs(), tracker.n_objects());
    const Matrix& conf = tracker.confidence();

    struct Cell {
        double score;
        std::size_t verb;
        std::size_t object;
    };
    std::vector<Cell> pool;
    for (std::size_t v = 0; v < space.n_verbs(); ++v)
        for (std::size_t o = 0; o < space.n_objects(); ++o)
            if (space.status(v, o) != ConceptStatus::Known) pool.push_back({conf(v, o), v, o});
    std::sort(pool.begin(), pool.end(), [](const Cell& a, const Cell& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.verb != b.verb) return a.verb < b.verb;
        return a.object < b.object;
    });

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_file.empty()) {
        file.open(out_file, std::ios::binary);
        if (!file) throw DataError("cannot write " + out_file);
        out = &file;
    }

    *out << "rank,verb_id,object_id,score,status\n";
    const std::size_t take = std::min(k, pool.size());
    std::size_t hits = 0;
    for (std::size_t rank = 0; rank < take; ++rank) {
        const Cell& c = pool[rank];
        if (space.status(c.verb, c.object) == ConceptStatus::Unknown) ++hits;
        *out << rank + 1 << "," << c.verb << "," << c.object << "," << fmt_f64(c.score) << ","
             << to_string(space.status(c.verb, c.object)) << "\n";
    }
    const std::size_t n_unknown = space.count(ConceptStatus::Unknown);
    if (n_unknown > 0) {
        *out << "recall_at_k," << k << ","
             << fmt_f64(static_cast<double>(hits) / static_cast<double>(n_unknown)) << "\n";
    }
}

void run_affordance(const std::string& checkpoint_file, const std::string& train_dir,
                    const std::string& heldout_dir, const std::string& target_str,
                    const std::string& out_file) {
    const auto [params, opt] = load_checkpoint(checkpoint_file);
    (void)opt;
    const Dataset train_ds = read_dataset(train_dir);
    const Dataset heldout_ds = read_dataset(heldout_dir);
    AffordanceTarget target = AffordanceTarget::All;
    if (target_str == "known") target = AffordanceTarget::Known;
    else if (target_str == "unknown") target = AffordanceTarget::Unknown;

    const AffordanceResult result =
        affordance_map(params, train_ds, heldout_ds, train_ds.space, target);
    for (std::uint32_t v : result.skipped_verbs)
        std::cerr << "warning: verb " << v << " has no training instances, excluded from the mean\n";
    std::cout << "affordance_map," << target_str << "," << fmt_f64(result.map) << "\n";
    if (!out_file.empty()) {
        std::ofstream out(out_file, std::ios::binary);
        if (!out) throw DataError("cannot write " + out_file);
        out << "metric,target,k,value\n";
        out << "affordance_map," << target_str << ",," << fmt_f64(result.map) << "\n";
    }
}

void run_baseline(const std::string& kind, const std::string& data_dir,
                  const std::string& checkpoint_file, std::uint64_t seed,
                  const std::string& out_file) {
    const Dataset dataset = read_dataset(data_dir);
    if (kind == "random") {
        Matrix confidence = random_matrix(dataset.space, seed);
        // Count 1 everywhere: every cell carries a score, so the file keeps all of them.
        Matrix ones(confidence.rows, confidence.cols, 1.0);
        ConfidenceTracker::load_snapshot(std::move(confidence), std::move(ones)).save(out_file);
    } else {
        const auto [params, opt] = load_checkpoint(checkpoint_file);
        (void)opt;
        offline_affordance_matrix(dataset, params).save(out_file);
    }
    std::cout << "baseline " << kind << " matrix written to " << out_file << "\n";
}

void run_repro(const std::string& out_dir, SynthConfig synth_cfg, TrainCli train_cli,
               std::size_t threads) {
    const fs::path root(out_dir);
    fs::create_directories(root);

    const SynthWorld world = generate_synthetic(synth_cfg);
    write_dataset(world.train, root / "data" / "train");
    write_dataset(world.heldout, root / "data" / "heldout");
    save_concepts(world.space, root / "data" / "concepts.csv");

    train_cli.data_dir = (root / "data" / "train").string();

    TrainCli scl = train_cli;
    scl.out_dir = (root / "scl").string();
    scl.cfg.self_training = true;
    run_train(scl, threads);

    TrainCli scl_minus = train_cli;
    scl_minus.out_dir = (root / "scl_minus").string();
    scl_minus.cfg.self_training = false;
    run_train(scl_minus, threads);

    const ConceptSpace& space = world.space;
    const double unknown_prevalence = prevalence(space, ConceptTarget::Unknown);
    const auto score = [&](const fs::path& dir) {
        const ConfidenceTracker t = ConfidenceTracker::load(dir / "matrix.csv");
        return concept_ap(t.confidence(), space, ConceptTarget::Unknown);
    };
    const double ap_scl = score(root / "scl");
    const double ap_scl_minus = score(root / "scl_minus");

    run_eval((root / "scl" / "matrix.csv").string(), (root / "data" / "concepts.csv").string(),
             (root / "report_scl.txt").string());
    run_eval((root / "scl_minus" / "matrix.csv").string(),
             (root / "data" / "concepts.csv").string(), (root / "report_scl_minus.txt").string());

    std::cout << "repro summary (unknown concept AP)\n";
    std::cout << "  scl=" << fmt_f64(ap_scl) << "\n";
    std::cout << "  scl_minus=" << fmt_f64(ap_scl_minus) << "\n";
    std::cout << "  random_prevalence=" << fmt_f64(unknown_prevalence) << "\n";
    std::cout << "  delta=" << fmt_f64(ap_scl - ap_scl_minus) << "\n";
}

}  // namespace

int run_cli(int argc, const char* const argv[]) {
    CLI::App app{"concept discovery over verb-object interaction feature data"};
    app.require_subcommand(1);

    std::size_t threads = 1;

    // ---- synth ----------------------------------------------------------
    SynthConfig synth_cfg;
    std::string synth_out;
    std::string synth_config_file;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic world with ground truth");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--n-verbs", synth_cfg.n_verbs);
    synth->add_option("--n-objects", synth_cfg.n_objects);
    synth->add_option("--n-groups", synth_cfg.n_groups);
    synth->add_option("--d-v", synth_cfg.d_v);
    synth->add_option("--d-o", synth_cfg.d_o);
    synth->add_option("--instances-per-concept", synth_cfg.instances_per_known_concept);
    synth->add_option("--heldout-per-object", synth_cfg.heldout_per_object);
    synth->add_option("--noise-sigma", synth_cfg.noise_sigma);
    synth->add_option("--known-fraction", synth_cfg.known_fraction);
    synth->add_option("--seed", synth_cfg.seed);
    synth->add_option("--config", synth_config_file, "key=value config file");
    synth->callback([&] {
        if (!synth_config_file.empty()) {
            ConfigApplier file(read_config_file(synth_config_file), synth);
            file.apply("n-verbs", synth_cfg.n_verbs);
            file.apply("n-objects", synth_cfg.n_objects);
            file.apply("n-groups", synth_cfg.n_groups);
            file.apply("d-v", synth_cfg.d_v);
            file.apply("d-o", synth_cfg.d_o);
            file.apply("instances-per-concept", synth_cfg.instances_per_known_concept);
            file.apply("heldout-per-object", synth_cfg.heldout_per_object);
            file.apply("noise-sigma", synth_cfg.noise_sigma);
            file.apply("known-fraction", synth_cfg.known_fraction);
            file.apply("seed", synth_cfg.seed);
            file.finish();
        }
        const SynthWorld world = generate_synthetic(synth_cfg);
        const fs::path root(synth_out);
        write_dataset(world.train, root / "train");
        write_dataset(world.heldout, root / "heldout");
        save_concepts(world.space, root / "concepts.csv");
        std::cout << "synthetic world: " << world.space.n_verbs() << "x" << world.space.n_objects()
                  << " grid, known=" << world.space.count(ConceptStatus::Known)
                  << " unknown=" << world.space.count(ConceptStatus::Unknown)
                  << " invalid=" << world.space.count(ConceptStatus::Invalid)
                  << ", train instances=" << world.train.size()
                  << ", heldout instances=" << world.heldout.size() << "\n";
    });

    // ---- train ----------------------------------------------------------
    TrainCli t;
    CLI::App* train_cmd = app.add_subcommand("train", "train the scorer and discover concepts");
    train_cmd->add_option("--data", t.data_dir, "train split directory")->required();
    train_cmd->add_option("--out", t.out_dir, "output directory")->required();
    train_cmd->add_option("--profile", t.profile)->check(CLI::IsMember({"hico", "vcoco"}));
    CLI::Option* opt_l1 = train_cmd->add_option("--lambda1", t.cfg.lambda1);
    CLI::Option* opt_l2 = train_cmd->add_option("--lambda2", t.cfg.lambda2);
    CLI::Option* opt_l3 = train_cmd->add_option("--lambda3", t.cfg.lambda3);
    CLI::Option* opt_temp = train_cmd->add_option("--temperature", t.cfg.temperature);
    train_cmd->add_option("--batch-size", t.cfg.batch_size)->check(CLI::Range(std::size_t{2}, std::size_t{4096}));
    train_cmd->add_option("--iterations", t.cfg.iterations);
    train_cmd->add_option("--seed", t.cfg.seed);
    train_cmd->add_option("--eval-every", t.cfg.eval_every);
    train_cmd->add_option("--hidden", t.cfg.hidden);
    train_cmd->add_option("--learning-rate", t.cfg.learning_rate);
    train_cmd->add_option("--momentum", t.cfg.momentum);
    train_cmd->add_option("--verb-aux-weight", t.cfg.verb_aux_weight);
    train_cmd->add_option("--frozen-matrix", t.frozen, "pseudo-label matrix for re-training mode");
    train_cmd->add_flag("--no-self-training", t.no_self_training);
    train_cmd->add_flag("--no-pseudo-normalization", t.no_pseudo_normalization);
    std::string train_config_file;
    train_cmd->add_option("--config", train_config_file, "key=value config file");
    train_cmd->callback([&, opt_l1, opt_l2, opt_l3, opt_temp] {
        bool file_set_weights[4] = {false, false, false, false};
        if (!train_config_file.empty()) {
            ConfigApplier file(read_config_file(train_config_file), train_cmd);
            file.apply("profile", t.profile);
            file.apply("lambda1", t.cfg.lambda1);
            file.apply("lambda2", t.cfg.lambda2);
            file.apply("lambda3", t.cfg.lambda3);
            file.apply("temperature", t.cfg.temperature);
            file.apply("batch-size", t.cfg.batch_size);
            file.apply("iterations", t.cfg.iterations);
            file.apply("seed", t.cfg.seed);
            file.apply("eval-every", t.cfg.eval_every);
            file.apply("hidden", t.cfg.hidden);
            file.apply("learning-rate", t.cfg.learning_rate);
            file.apply("momentum", t.cfg.momentum);
            file.apply("verb-aux-weight", t.cfg.verb_aux_weight);
            file.apply("frozen-matrix", t.frozen);
            file.apply("no-self-training", t.no_self_training);
            file.apply("no-pseudo-normalization", t.no_pseudo_normalization);
            file.finish();
            file_set_weights[0] = file.was_set("lambda1");
            file_set_weights[1] = file.was_set("lambda2");
            file_set_weights[2] = file.was_set("lambda3");
            file_set_weights[3] = file.was_set("temperature");
            if (!(t.profile.empty() || t.profile == "hico" || t.profile == "vcoco"))
                throw CLI::ValidationError("--config", "profile must be hico or vcoco");
        }
        if (!t.profile.empty()) {
            // Profiles are named weight presets; flags and file values win.
            const double l1 = t.profile == "hico" ? 2.0 : 0.5;
            if (opt_l1->count() == 0 && !file_set_weights[0]) t.cfg.lambda1 = l1;
            if (opt_l2->count() == 0 && !file_set_weights[1]) t.cfg.lambda2 = 0.5;
            if (opt_l3->count() == 0 && !file_set_weights[2]) t.cfg.lambda3 = 0.5;
            if (opt_temp->count() == 0 && !file_set_weights[3]) t.cfg.temperature = 1.0;
        }
        t.cfg.self_training = !t.no_self_training;
        t.cfg.normalize_pseudo_labels = !t.no_pseudo_normalization;
        if (!t.frozen.empty()) t.cfg.frozen_matrix = t.frozen;
        run_train(t, threads);
    });

    // ---- discover -------------------------------------------------------
    std::string disc_matrix, disc_concepts, disc_out;
    std::size_t disc_k = 0;
    CLI::App* discover = app.add_subcommand("discover", "rank non-known cells by confidence");
    discover->add_option("--matrix", disc_matrix)->required();
    discover->add_option("--concepts", disc_concepts)->required();
    discover->add_option("--k", disc_k)->required();
    discover->add_option("--out", disc_out, "write the table here instead of stdout");
    discover->callback([&] { run_discover(disc_matrix, disc_concepts, disc_k, disc_out); });

    // ---- eval -----------------------------------------------------------
    std::string eval_matrix, eval_concepts, eval_out;
    CLI::App* eval_cmd = app.add_subcommand("eval", "concept discovery metrics for a matrix");
    eval_cmd->add_option("--matrix", eval_matrix)->required();
    eval_cmd->add_option("--concepts", eval_concepts)->required();
    eval_cmd->add_option("--out", eval_out, "metric report file")->required();
    eval_cmd->callback([&] { run_eval(eval_matrix, eval_concepts, eval_out); });

    // ---- affordance -----------------------------------------------------
    std::string aff_checkpoint, aff_train, aff_heldout, aff_out;
    std::string aff_target = "all";
    CLI::App* affordance = app.add_subcommand("affordance", "object affordance recognition mAP");
    affordance->add_option("--checkpoint", aff_checkpoint)->required();
    affordance->add_option("--train", aff_train)->required();
    affordance->add_option("--heldout", aff_heldout)->required();
    affordance->add_option("--target", aff_target)->check(CLI::IsMember({"all", "known", "unknown"}));
    affordance->add_option("--out", aff_out);
    affordance->callback(
        [&] { run_affordance(aff_checkpoint, aff_train, aff_heldout, aff_target, aff_out); });

    // ---- baseline -------------------------------------------------------
    std::string base_kind, base_data, base_checkpoint, base_out;
    std::uint64_t base_seed = 1;
    CLI::App* baseline = app.add_subcommand("baseline", "random or offline-affordance matrix");
    baseline->add_option("--kind", base_kind)->required()->check(CLI::IsMember({"random", "offline-affordance"}));
    baseline->add_option("--data", base_data)->required();
    baseline->add_option("--checkpoint", base_checkpoint);
    baseline->add_option("--seed", base_seed);
    baseline->add_option("--out", base_out)->required();
    baseline->callback([&] {
        if (base_kind == "offline-affordance" && base_checkpoint.empty())
            throw CLI::RequiredError("--checkpoint (required for offline-affordance)");
        run_baseline(base_kind, base_data, base_checkpoint, base_seed, base_out);
    });

    // ---- repro ----------------------------------------------------------
    SynthConfig repro_synth;
    TrainCli repro_train;
    std::string repro_out;
    CLI::App* repro = app.add_subcommand(
        "repro", "synth + train with and without self-training + eval, in one run");
    repro->add_option("--out", repro_out)->required();
    repro->add_option("--seed", repro_synth.seed);
    repro->add_option("--iterations", repro_train.cfg.iterations);
    repro->add_option("--batch-size", repro_train.cfg.batch_size);
    std::string repro_config_file;
    repro->add_option("--config", repro_config_file, "key=value config file");
    repro->callback([&] {
        if (!repro_config_file.empty()) {
            ConfigApplier file(read_config_file(repro_config_file), repro);
            file.apply("seed", repro_synth.seed);
            file.apply("iterations", repro_train.cfg.iterations);
            file.apply("batch-size", repro_train.cfg.batch_size);
            file.finish();
        }
        repro_train.cfg.seed = repro_synth.seed;
        run_repro(repro_out, repro_synth, repro_train, threads);
    });

    try {
        threads = read_thread_cap();
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

}  // namespace cforge
