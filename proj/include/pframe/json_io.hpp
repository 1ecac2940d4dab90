#pragma once

// JSON schemas for measures, couplings, paired measures, frame certificates
// and perturbation certificates. Doubles are emitted with nlohmann's
// shortest round-trip form, so every file reloads to the exact same bits.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pframe/errors.hpp"
#include "pframe/frame.hpp"
#include "pframe/measure.hpp"
#include "pframe/perturb.hpp"
#include "pframe/transport.hpp"

namespace pframe {

using Json = nlohmann::ordered_json;

namespace detail {

inline const Json& field(const Json& j, const char* name) {
    const auto it = j.find(name);
    if (it == j.end()) throw ParseError(std::string("missing field '") + name + "'");
    return *it;
}

// translate nlohmann type errors into ParseError at the schema boundary
template <typename F>
auto parsing(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(e.what());
    }
}

inline std::vector<Vec> parse_points(const Json& j, const char* name) {
    const Json& pts = field(j, name);
    if (!pts.is_array() || pts.empty())
        throw ParseError(std::string("field '") + name + "' must be a non-empty array of vectors");
    std::vector<Vec> out;
    out.reserve(pts.size());
    for (const Json& p : pts) {
        if (!p.is_array()) throw ParseError(std::string("field '") + name + "' must hold vectors");
        Vec v;
        v.reserve(p.size());
        for (const Json& x : p) {
            if (!x.is_number()) throw ParseError("point coordinates must be numbers");
            v.push_back(x.get<double>());
        }
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace detail

// measure file: {"dim": n, "points": [[...],...], "masses": [...]}
// masses are optional and default to uniform.
inline Json measure_to_json(const DiscreteMeasure& mu) {
    Json j;
    j["dim"] = mu.dim;
    j["points"] = mu.points;
    j["masses"] = mu.masses;
    return j;
}

inline DiscreteMeasure measure_from_json(const Json& j, Normalize mode = Normalize::strict) {
    return detail::parsing([&] {
    if (!j.is_object()) throw ParseError("measure must be a JSON object");
    std::vector<Vec> points = detail::parse_points(j, "points");
    std::vector<double> masses;
    if (j.contains("masses")) {
        const Json& m = j["masses"];
        if (!m.is_array()) throw ParseError("field 'masses' must be an array");
        for (const Json& x : m) {
            if (!x.is_number()) throw ParseError("masses must be numbers");
            masses.push_back(x.get<double>());
        }
    } else {
        masses.assign(points.size(), 1.0 / static_cast<double>(points.size()));
    }
    DiscreteMeasure mu = make_measure(std::move(points), std::move(masses),
                                      j.contains("masses") ? mode : Normalize::force);
    if (j.contains("dim")) {
        const Json& d = detail::field(j, "dim");
        if (!d.is_number_unsigned() || d.get<std::size_t>() != mu.dim)
            throw ParseError("field 'dim' disagrees with the point length " +
                             std::to_string(mu.dim));
    }
    return mu;
    });
}

// coupling file: {"mu": <measure>, "nu": <measure>, "entries": [[i, j, mass],...]}
inline Json coupling_to_json(const Coupling& g) {
    Json j;
    j["mu"] = measure_to_json(g.mu);
    j["nu"] = measure_to_json(g.nu);
    Json entries = Json::array();
    for (const CouplingEntry& e : g.entries) entries.push_back(Json::array({e.i, e.j, e.mass}));
    j["entries"] = std::move(entries);
    return j;
}

inline Coupling coupling_from_json(const Json& j, Normalize mode = Normalize::strict) {
    return detail::parsing([&] {
        if (!j.is_object()) throw ParseError("coupling must be a JSON object");
        DiscreteMeasure mu = measure_from_json(detail::field(j, "mu"), mode);
        DiscreteMeasure nu = measure_from_json(detail::field(j, "nu"), mode);
        const Json& ents = detail::field(j, "entries");
        if (!ents.is_array()) throw ParseError("field 'entries' must be an array");
        std::vector<CouplingEntry> entries;
        entries.reserve(ents.size());
        for (const Json& e : ents) {
            if (!e.is_array() || e.size() != 3)
                throw ParseError("coupling entries must be [i, j, mass] triples");
            entries.push_back(
                {e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<double>()});
        }
        return make_coupling(std::move(mu), std::move(nu), std::move(entries));
    });
}

// paired measure file: {"dim": n, "x": [[...]], "y": [[...]], "masses": [...]}
inline Json paired_to_json(const PairedMeasure& p) {
    Json j;
    j["dim"] = p.dim;
    j["x"] = p.x;
    j["y"] = p.y;
    j["masses"] = p.masses;
    return j;
}

inline PairedMeasure paired_from_json(const Json& j, Normalize mode = Normalize::strict) {
    return detail::parsing([&] {
        if (!j.is_object()) throw ParseError("paired measure must be a JSON object");
        std::vector<Vec> xs = detail::parse_points(j, "x");
        std::vector<Vec> ys = detail::parse_points(j, "y");
        std::vector<double> masses;
        if (j.contains("masses")) {
            for (const Json& x : detail::field(j, "masses")) masses.push_back(x.get<double>());
        } else {
            masses.assign(xs.size(), 1.0 / static_cast<double>(xs.size()));
            mode = Normalize::force;
        }
        return make_paired(std::move(xs), std::move(ys), std::move(masses), mode);
    });
}

inline Json sym_to_json(const SymMatrix& s) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < s.dim(); ++i) {
        Json row = Json::array();
        for (std::size_t j = 0; j < s.dim(); ++j) row.push_back(s(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

// frame certificate: {"S": [[...]], "A":, "B":, "M2":, "class": "tight"|...}
inline Json frame_certificate_to_json(const FrameCertificate& c) {
    Json j;
    j["S"] = sym_to_json(c.frame_operator);
    j["A"] = c.lower;
    j["B"] = c.upper;
    j["M2"] = c.m2;
    j["class"] = frame_class_name(c.classification);
    return j;
}

inline Json perturbation_certificate_to_json(const PerturbationCertificate& c) {
    Json j;
    j["theorem"] = theorem_name(c.theorem);
    j["premise_value"] = c.premise_value;
    j["premise_threshold"] = c.premise_threshold;
    j["premise_ok"] = c.premise_ok;
    if (c.guaranteed_lower) j["guaranteed_lower"] = *c.guaranteed_lower;
    if (c.guaranteed_upper) j["guaranteed_upper"] = *c.guaranteed_upper;
    if (!c.aux.empty()) {
        Json aux;
        for (const auto& [k, v] : c.aux) aux[k] = v;
        j["aux"] = std::move(aux);
    }
    if (!c.hypothesis.empty()) j["hypothesis"] = c.hypothesis;
    if (!c.coupling_source.empty()) j["coupling_source"] = c.coupling_source;
    Json digests;
    for (const auto& [role, hash] : c.inputs_digest) digests[role] = hash;
    j["inputs_digest"] = std::move(digests);
    return j;
}

inline PerturbationCertificate perturbation_certificate_from_json(const Json& j) {
    return detail::parsing([&] {
    if (!j.is_object()) throw ParseError("certificate must be a JSON object");
    PerturbationCertificate c;
    c.theorem = theorem_from_name(detail::field(j, "theorem").get<std::string>());
    c.premise_value = detail::field(j, "premise_value").get<double>();
    c.premise_threshold = detail::field(j, "premise_threshold").get<double>();
    c.premise_ok = detail::field(j, "premise_ok").get<bool>();
    if (j.contains("guaranteed_lower")) c.guaranteed_lower = j["guaranteed_lower"].get<double>();
    if (j.contains("guaranteed_upper")) c.guaranteed_upper = j["guaranteed_upper"].get<double>();
    if (c.premise_ok != (c.guaranteed_lower.has_value() && c.guaranteed_upper.has_value()))
        throw ParseError("certificate bounds must be present exactly when the premise holds");
    if (j.contains("aux"))
        for (const auto& [k, v] : j["aux"].items()) c.aux.push_back({k, v.get<double>()});
    if (j.contains("hypothesis")) c.hypothesis = j["hypothesis"].get<std::string>();
    if (j.contains("coupling_source")) c.coupling_source = j["coupling_source"].get<std::string>();
    if (j.contains("inputs_digest"))
        for (const auto& [k, v] : j["inputs_digest"].items())
            c.inputs_digest.push_back({k, v.get<std::string>()});
    return c;
    });
}

inline Json validation_report_to_json(const ValidationReport& r) {
    Json j;
    j["certificate"] = perturbation_certificate_to_json(r.certificate);
    j["actual_lower"] = r.actual_lower;
    j["actual_upper"] = r.actual_upper;
    j["lower_slack"] = r.lower_slack;
    j["upper_slack"] = r.upper_slack;
    j["verdict"] = r.verdict;
    return j;
}

inline Json parse_json_text(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(e.what());
    }
}

inline Json load_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_json_text(buf.str());
}

inline void save_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw IoError("write to '" + path + "' failed");
}

inline std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

inline void save_json(const std::string& path, const Json& j) { save_text(path, dump_json(j)); }

inline DiscreteMeasure load_measure(const std::string& path, Normalize mode = Normalize::strict) {
    return measure_from_json(load_json(path), mode);
}

inline Coupling load_coupling(const std::string& path, Normalize mode = Normalize::strict) {
    return coupling_from_json(load_json(path), mode);
}

inline PairedMeasure load_paired(const std::string& path, Normalize mode = Normalize::strict) {
    return paired_from_json(load_json(path), mode);
}

}  // namespace pframe
