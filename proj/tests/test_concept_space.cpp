#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "cforge/concept_space.hpp"
#include "cforge/error.hpp"
#include "cforge/rng.hpp"
#include "test_util.hpp"

using namespace cforge;

namespace {

// A 117x80 grid with the HICO-DET concept counts: 600 known + 1081 unknown
// rows, everything else invalid.
ConceptSpace hico_shaped_space() {
    ConceptSpace space(117, 80);
    std::size_t placed = 0;
    for (std::size_t v = 0; v < 117 && placed < 1681; ++v) {
        for (std::size_t o = 0; o < 80 && placed < 1681; ++o) {
            space.set_status(v, o, placed < 600 ? ConceptStatus::Known : ConceptStatus::Unknown);
            ++placed;
        }
    }
    return space;
}

ConceptSpace random_space(std::size_t n_verbs, std::size_t n_objects, Rng& rng) {
    ConceptSpace space(n_verbs, n_objects);
    for (std::size_t v = 0; v < n_verbs; ++v) {
        for (std::size_t o = 0; o < n_objects; ++o) {
            const auto roll = rng.below(3);
            space.set_status(v, o, roll == 0   ? ConceptStatus::Invalid
                                   : roll == 1 ? ConceptStatus::Known
                                               : ConceptStatus::Unknown);
        }
    }
    return space;
}

}  // namespace

TEST_CASE("load_concepts reads statuses back, unlisted cells default to invalid") {
    const auto dir = testutil::make_temp_dir("concepts");
    testutil::write_text(dir / "c.csv", "verb_id,object_id,status\n0,0,known\n1,1,unknown\n");
    const ConceptSpace space = load_concepts(dir / "c.csv", 2, 2);
    CHECK(space.status(0, 0) == ConceptStatus::Known);
    CHECK(space.status(1, 1) == ConceptStatus::Unknown);
    CHECK(space.status(0, 1) == ConceptStatus::Invalid);
    CHECK(space.status(1, 0) == ConceptStatus::Invalid);
}

TEST_CASE("load_concepts on an empty file yields an all-invalid grid") {
    const auto dir = testutil::make_temp_dir("concepts");
    testutil::write_text(dir / "empty.csv", "");
    const ConceptSpace space = load_concepts(dir / "empty.csv", 2, 2);
    CHECK(space.count(ConceptStatus::Invalid) == 4);
}

TEST_CASE("load_concepts reproduces the HICO-DET partition counts") {
    const auto dir = testutil::make_temp_dir("concepts");
    save_concepts(hico_shaped_space(), dir / "hico.csv");
    const ConceptSpace space = load_concepts(dir / "hico.csv", 117, 80);
    CHECK(space.count(ConceptStatus::Known) == 600);
    CHECK(space.count(ConceptStatus::Unknown) == 1081);
    CHECK(space.count(ConceptStatus::Invalid) == 7679);
}

TEST_CASE("load_concepts error paths") {
    const auto dir = testutil::make_temp_dir("concepts");

    testutil::write_text(dir / "bad_header.csv", "verb,object\n");
    CHECK_THROWS_AS(load_concepts(dir / "bad_header.csv", 2, 2), DataError);

    testutil::write_text(dir / "malformed.csv", "verb_id,object_id,status\n0,zero,known\n");
    CHECK_THROWS_WITH_AS(load_concepts(dir / "malformed.csv", 2, 2),
                         doctest::Contains(":2:"), DataError);

    testutil::write_text(dir / "badstatus.csv", "verb_id,object_id,status\n0,0,maybe\n");
    CHECK_THROWS_AS(load_concepts(dir / "badstatus.csv", 2, 2), DataError);

    testutil::write_text(dir / "dup.csv", "verb_id,object_id,status\n0,0,known\n0,0,unknown\n");
    CHECK_THROWS_WITH_AS(load_concepts(dir / "dup.csv", 2, 2), doctest::Contains("duplicate"),
                         DataError);

    testutil::write_text(dir / "range.csv", "verb_id,object_id,status\n5,0,known\n");
    CHECK_THROWS_WITH_AS(load_concepts(dir / "range.csv", 2, 2), doctest::Contains("out of range"),
                         DataError);
}

TEST_CASE("load/save round-trip is idempotent on random spaces") {
    const auto dir = testutil::make_temp_dir("concepts");
    Rng rng(42);
    for (int i = 0; i < 10; ++i) {
        const ConceptSpace space = random_space(1 + rng.below(20), 1 + rng.below(20), rng);
        save_concepts(space, dir / "s.csv");
        const ConceptSpace back = load_concepts(dir / "s.csv", space.n_verbs(), space.n_objects());
        CHECK(back == space);
        save_concepts(back, dir / "s2.csv");
        CHECK(testutil::read_bytes(dir / "s.csv") == testutil::read_bytes(dir / "s2.csv"));
    }
}

TEST_CASE("prevalence of the masked pools") {
    const ConceptSpace hico = hico_shaped_space();
    CHECK(prevalence(hico, ConceptTarget::Unknown) == 1081.0 / 8760.0);
    CHECK(prevalence(hico, ConceptTarget::Unknown) == doctest::Approx(0.1234).epsilon(1e-3));
    CHECK(prevalence(hico, ConceptTarget::Known) == 600.0 / 8279.0);

    ConceptSpace all_unknown(3, 3);
    for (std::size_t v = 0; v < 3; ++v)
        for (std::size_t o = 0; o < 3; ++o) all_unknown.set_status(v, o, ConceptStatus::Unknown);
    CHECK(prevalence(all_unknown, ConceptTarget::Unknown) == 1.0);

    // V-COCO geometry: 222 known / 179 unknown of 401 concepts on a 24x80 grid.
    ConceptSpace vcoco(24, 80);
    std::size_t placed = 0;
    for (std::size_t v = 0; v < 24 && placed < 401; ++v)
        for (std::size_t o = 0; o < 80 && placed < 401; ++o, ++placed)
            vcoco.set_status(v, o, placed < 222 ? ConceptStatus::Known : ConceptStatus::Unknown);
    CHECK(prevalence(vcoco, ConceptTarget::Unknown) == 179.0 / 1698.0);
    CHECK(prevalence(vcoco, ConceptTarget::Unknown) == doctest::Approx(0.1054).epsilon(1e-3));

    // Empty pool: every cell known.
    ConceptSpace all_known(2, 2);
    for (std::size_t v = 0; v < 2; ++v)
        for (std::size_t o = 0; o < 2; ++o) all_known.set_status(v, o, ConceptStatus::Known);
    CHECK_THROWS_AS(prevalence(all_known, ConceptTarget::Unknown), DataError);
}

TEST_CASE("prevalence times pool size recovers the unknown count exactly") {
    Rng rng(7);
    for (int i = 0; i < 20; ++i) {
        const ConceptSpace space = random_space(1 + rng.below(30), 1 + rng.below(30), rng);
        const std::size_t pool =
            space.count(ConceptStatus::Unknown) + space.count(ConceptStatus::Invalid);
        if (pool == 0) continue;
        const double p = prevalence(space, ConceptTarget::Unknown);
        CHECK(p * static_cast<double>(pool) == doctest::Approx(space.count(ConceptStatus::Unknown))
                                                   .epsilon(1e-12));
    }
}

TEST_CASE("masks project statuses and partition the grid") {
    ConceptSpace space(2, 2);
    space.set_status(0, 0, ConceptStatus::Known);
    const ConceptMasks m = masks(space);
    CHECK(m.known.popcount() == 1);
    CHECK(m.known.at(0, 0));
    CHECK(m.unknown.popcount() == 0);
    CHECK(m.invalid.popcount() == 3);

    Rng rng(11);
    for (int i = 0; i < 8; ++i) {
        const ConceptSpace s = random_space(1 + rng.below(200), 1 + rng.below(200), rng);
        const ConceptMasks mm = masks(s);
        CHECK(mm.known.popcount() + mm.unknown.popcount() + mm.invalid.popcount() == s.n_cells());
        for (std::size_t v = 0; v < s.n_verbs(); ++v) {
            for (std::size_t o = 0; o < s.n_objects(); ++o) {
                const int bits = int(mm.known.at(v, o)) + int(mm.unknown.at(v, o)) +
                                 int(mm.invalid.at(v, o));
                REQUIRE(bits == 1);
            }
        }
    }

    const ConceptMasks hico = masks(hico_shaped_space());
    CHECK(hico.unknown.popcount() == 1081);
}
