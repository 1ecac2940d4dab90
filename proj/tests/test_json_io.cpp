#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "pframe/battery.hpp"
#include "pframe/json_io.hpp"
#include "pframe/perturb.hpp"
#include "pframe/rng.hpp"

using namespace pframe;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("pframe_io_" + name);
}

}  // namespace

TEST_CASE("measure JSON round trip is bit exact") {
    Rng rng(51);
    for (int t = 0; t < 20; ++t) {
        const DiscreteMeasure mu = test::random_measure(rng, rng.uniform_int(1, 5),
                                                        rng.uniform_int(1, 8));
        const DiscreteMeasure back = measure_from_json(parse_json_text(dump_json(measure_to_json(mu))));
        REQUIRE(back.dim == mu.dim);
        REQUIRE(back.size() == mu.size());
        for (std::size_t i = 0; i < mu.size(); ++i) {
            REQUIRE(back.masses[i] == mu.masses[i]);  // exact, not approximate
            for (std::size_t c = 0; c < mu.dim; ++c)
                REQUIRE(back.points[i][c] == mu.points[i][c]);
        }
    }
}

TEST_CASE("measure JSON accepts omitted masses as uniform") {
    const Json j = parse_json_text(R"({"dim": 2, "points": [[1.0, 0.0], [0.0, 1.0]]})");
    const DiscreteMeasure mu = measure_from_json(j);
    REQUIRE(mu.masses[0] == Catch::Approx(0.5));
    REQUIRE(mu.masses[1] == Catch::Approx(0.5));
}

TEST_CASE("measure JSON rejects malformed input") {
    REQUIRE_THROWS_AS(parse_json_text("{\"dim\": 2, \"points\": [[1.0,"), ParseError);
    REQUIRE_THROWS_AS(measure_from_json(parse_json_text(R"({"dim": 2})")), ParseError);
    REQUIRE_THROWS_AS(measure_from_json(parse_json_text(R"({"points": []})")), ParseError);
    REQUIRE_THROWS_AS(
        measure_from_json(parse_json_text(R"({"dim": 3, "points": [[1.0, 0.0]]})")), ParseError);
    REQUIRE_THROWS_AS(
        measure_from_json(parse_json_text(R"({"points": [[1, 0]], "masses": ["x"]})")),
        ParseError);
}

TEST_CASE("load_measure reports missing files and honors normalization flags") {
    REQUIRE_THROWS_AS(load_measure("/nonexistent/mu.json"), IoError);

    const auto path = temp_file("unnormalized.json");
    save_text(path.string(), R"({"points": [[1.0, 0.0]], "masses": [2.0]})");
    REQUIRE_THROWS_AS(load_measure(path.string()), NotNormalized);
    const DiscreteMeasure mu = load_measure(path.string(), Normalize::force);
    REQUIRE(mu.masses[0] == 1.0);
    std::filesystem::remove(path);
}

TEST_CASE("coupling JSON round trip") {
    Rng rng(52);
    const DiscreteMeasure mu = test::random_measure(rng, 2, 4);
    const DiscreteMeasure nu = test::random_measure(rng, 2, 3);
    const Coupling g = random_feasible_plan(rng, mu, nu);
    const Coupling back = coupling_from_json(parse_json_text(dump_json(coupling_to_json(g))));
    REQUIRE(back.entries.size() == g.entries.size());
    for (std::size_t i = 0; i < g.entries.size(); ++i) {
        REQUIRE(back.entries[i].i == g.entries[i].i);
        REQUIRE(back.entries[i].j == g.entries[i].j);
        REQUIRE(back.entries[i].mass == g.entries[i].mass);
    }
    REQUIRE_THROWS_AS(
        coupling_from_json(parse_json_text(R"({"mu": {"points": [[1.0]]}})")), ParseError);
    // wrong entry types surface as ParseError, not as library type errors
    REQUIRE_THROWS_AS(
        coupling_from_json(parse_json_text(
            R"({"mu": {"points": [[1.0]]}, "nu": {"points": [[2.0]]}, "entries": [["a", 0, 1.0]]})")),
        ParseError);
}

TEST_CASE("paired JSON round trip") {
    const DiscreteMeasure mb = test::mb();
    const PairedMeasure p = pair_diagonal(mb, pushforward(mb, scalar_map(2, 2.0)));
    const PairedMeasure back = paired_from_json(parse_json_text(dump_json(paired_to_json(p))));
    REQUIRE(back.size() == p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        REQUIRE(back.masses[i] == p.masses[i]);
        for (std::size_t c = 0; c < p.dim; ++c) {
            REQUIRE(back.x[i][c] == p.x[i][c]);
            REQUIRE(back.y[i][c] == p.y[i][c]);
        }
    }
}

TEST_CASE("frame certificate JSON carries the documented fields") {
    const Json j = frame_certificate_to_json(frame_bounds(test::mb()));
    REQUIRE(j.contains("S"));
    REQUIRE(j["A"].get<double>() == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(j["B"].get<double>() == Catch::Approx(0.5).margin(1e-12));
    REQUIRE(j["M2"].get<double>() == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(j["class"].get<std::string>() == "tight");
}

TEST_CASE("perturbation certificate JSON round trips unchanged") {
    const DiscreteMeasure mb = test::mb();
    std::vector<PerturbationCertificate> certs;
    certs.push_back(certify_w2(mb, mb));
    certs.push_back(certify_sweetie(mb, pushforward(mb, scalar_map(2, 3.0))));  // premise fails
    certs.push_back(certify_paley(pair_diagonal(mb, mb), 0.0, 0.0));
    certs.back().coupling_source = "diagonal";
    for (const PerturbationCertificate& c : certs) {
        const Json j = perturbation_certificate_to_json(c);
        const PerturbationCertificate parsed = perturbation_certificate_from_json(j);
        const Json j2 = perturbation_certificate_to_json(parsed);
        REQUIRE(dump_json(j) == dump_json(j2));  // byte-identical re-emission
        REQUIRE(parsed.premise_ok == c.premise_ok);
        REQUIRE(parsed.premise_value == c.premise_value);
        if (c.guaranteed_lower) REQUIRE(*parsed.guaranteed_lower == *c.guaranteed_lower);
    }
    SECTION("inconsistent bounds are rejected") {
        Json j = perturbation_certificate_to_json(certs[0]);
        j.erase("guaranteed_lower");
        REQUIRE_THROWS_AS(perturbation_certificate_from_json(j), ParseError);
    }
}

TEST_CASE("validation report JSON") {
    const DiscreteMeasure mb = test::mb();
    const ValidationReport r = validate(certify_w2(mb, mb), mb);
    const Json j = validation_report_to_json(r);
    REQUIRE(j["verdict"].get<bool>());
    REQUIRE(j["actual_lower"].get<double>() == r.actual_lower);
    REQUIRE(j["certificate"]["theorem"].get<std::string>() == "W2Openness");
}
