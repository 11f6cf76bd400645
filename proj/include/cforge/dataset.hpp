#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "cforge/concept_space.hpp"
#include "cforge/rng.hpp"

namespace cforge {

// One labeled interaction sample: a non-empty multi-hot verb label set, a
// single object category, and the two feature vectors.
struct Instance {
    std::vector<std::uint32_t> verb_labels;  // sorted, strictly increasing
    std::uint32_t object_label = 0;
    std::vector<double> verb_feature;
    std::vector<double> object_feature;

    friend bool operator==(const Instance&, const Instance&) = default;
};

enum class Split { Train, Eval };

struct Dataset {
    std::vector<Instance> instances;
    std::size_t d_v = 0;
    std::size_t d_o = 0;
    Split split = Split::Train;
    ConceptSpace space{1, 1};

    std::size_t size() const { return instances.size(); }
    friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct SynthConfig {
    std::size_t n_verbs = 12;
    std::size_t n_objects = 10;
    std::size_t n_groups = 4;
    std::size_t d_v = 16;
    std::size_t d_o = 16;
    std::size_t instances_per_known_concept = 20;
    std::size_t heldout_per_object = 8;
    double noise_sigma = 0.3;
    double known_fraction = 0.5;  // strictly inside (0, 1)
    std::uint64_t seed = 1;
};

struct SynthWorld {
    Dataset train;
    Dataset heldout;  // eval split for affordance scoring
    ConceptSpace space{1, 1};
};

// Writes meta.txt, instances.bin and concepts.csv into dir; byte-deterministic.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

// Inverse of write_dataset. Training splits are checked against the embedded
// concept space: labels must sit on Known cells.
Dataset read_dataset(const std::filesystem::path& dir);

// Throws if a training instance labels a non-Known cell, naming its index.
void validate_training_legality(const Dataset& dataset);

// Group-structured world: objects fall into attribute groups, each verb
// applies to a non-empty subset of groups, and cell (v,o) is a concept iff
// v applies to o's group. A known_fraction share of concept cells becomes
// Known (covering every verb and object when possible); instances are drawn
// for Known cells only. Deterministic per seed.
SynthWorld generate_synthetic(const SynthConfig& config);

// Uniform sample of batch_size instances: without replacement when the
// dataset is large enough, with replacement otherwise.
std::vector<Instance> sample_batch(const Dataset& dataset, std::size_t batch_size, Rng& rng);

}  // namespace cforge
