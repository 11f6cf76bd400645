#include "cforge/concept_space.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <string>

#include "cforge/error.hpp"

namespace cforge {

namespace {

constexpr const char* kHeader = "verb_id,object_id,status";

// Parses a non-negative decimal integer covering the whole field.
bool parse_id(const std::string& field, std::size_t& out) {
    if (field.empty()) return false;
    const char* first = field.data();
    const char* last = first + field.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc{} && res.ptr == last;
}

std::string row_error(const std::filesystem::path& path, std::size_t line_no, const std::string& why) {
    return path.string() + ":" + std::to_string(line_no) + ": " + why;
}

}  // namespace

const char* to_string(ConceptStatus s) {
    switch (s) {
        case ConceptStatus::Known: return "known";
        case ConceptStatus::Unknown: return "unknown";
        case ConceptStatus::Invalid: return "invalid";
    }
    return "invalid";
}

ConceptSpace::ConceptSpace(std::size_t n_verbs, std::size_t n_objects)
    : n_verbs_(n_verbs), n_objects_(n_objects), cells_(n_verbs * n_objects, ConceptStatus::Invalid) {
    if (n_verbs == 0 || n_objects == 0) throw DataError("concept space dimensions must be >= 1");
}

std::size_t ConceptSpace::count(ConceptStatus s) const {
    return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), s));
}

ConceptSpace load_concepts(const std::filesystem::path& path, std::size_t n_verbs,
                           std::size_t n_objects) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open concepts file: " + path.string());

    ConceptSpace space(n_verbs, n_objects);
    std::vector<std::uint8_t> seen(n_verbs * n_objects, 0);

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) {
            if (line != kHeader)
                throw DataError(row_error(path, line_no, "expected header '" + std::string(kHeader) + "'"));
            continue;
        }
        if (line.empty()) continue;

        std::size_t c1 = line.find(',');
        std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos)
            throw DataError(row_error(path, line_no, "malformed row, expected verb_id,object_id,status"));

        std::size_t verb = 0, object = 0;
        if (!parse_id(line.substr(0, c1), verb) || !parse_id(line.substr(c1 + 1, c2 - c1 - 1), object))
            throw DataError(row_error(path, line_no, "malformed row, ids must be non-negative integers"));

        const std::string status_str = line.substr(c2 + 1);
        ConceptStatus status;
        if (status_str == "known") {
            status = ConceptStatus::Known;
        } else if (status_str == "unknown") {
            status = ConceptStatus::Unknown;
        } else {
            throw DataError(row_error(path, line_no, "malformed row, status must be 'known' or 'unknown'"));
        }

        if (verb >= n_verbs || object >= n_objects)
            throw DataError(row_error(path, line_no,
                                      "id out of range for a " + std::to_string(n_verbs) + "x" +
                                          std::to_string(n_objects) + " grid"));
        if (seen[verb * n_objects + object])
            throw DataError(row_error(path, line_no, "duplicate annotation for cell (" +
                                                         std::to_string(verb) + "," + std::to_string(object) + ")"));
        seen[verb * n_objects + object] = 1;
        space.set_status(verb, object, status);
    }
    return space;
}

void save_concepts(const ConceptSpace& space, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write concepts file: " + path.string());
    out << kHeader << "\n";
    for (std::size_t v = 0; v < space.n_verbs(); ++v) {
        for (std::size_t o = 0; o < space.n_objects(); ++o) {
            const ConceptStatus s = space.status(v, o);
            if (s == ConceptStatus::Invalid) continue;
            out << v << "," << o << "," << to_string(s) << "\n";
        }
    }
    if (!out) throw DataError("write failure on concepts file: " + path.string());
}

double prevalence(const ConceptSpace& space, ConceptTarget target) {
    const std::size_t invalid = space.count(ConceptStatus::Invalid);
    const std::size_t positives =
        space.count(target == ConceptTarget::Unknown ? ConceptStatus::Unknown : ConceptStatus::Known);
    const std::size_t pool = positives + invalid;
    if (pool == 0) throw DataError("prevalence undefined: candidate pool is empty");
    return static_cast<double>(positives) / static_cast<double>(pool);
}

ConceptMasks masks(const ConceptSpace& space) {
    const std::size_t nv = space.n_verbs();
    const std::size_t no = space.n_objects();
    ConceptMasks out;
    for (ConceptMask* m : {&out.known, &out.unknown, &out.invalid}) {
        m->n_verbs = nv;
        m->n_objects = no;
        m->cells.assign(nv * no, 0);
    }
    for (std::size_t v = 0; v < nv; ++v) {
        for (std::size_t o = 0; o < no; ++o) {
            switch (space.status(v, o)) {
                case ConceptStatus::Known: out.known.cells[v * no + o] = 1; break;
                case ConceptStatus::Unknown: out.unknown.cells[v * no + o] = 1; break;
                case ConceptStatus::Invalid: out.invalid.cells[v * no + o] = 1; break;
            }
        }
    }
    return out;
}

std::size_t ConceptMask::popcount() const {
    return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

}  // namespace cforge
