// Command-line front end: generate, analyze, transport, certify, and
// batch-validate probabilistic frames with JSON/CSV I/O.
//
// Exit codes: 0 success / premise holds, 2 parse or usage error, 3 not a
// frame, 4 premise or membership verdict failed, 5 validation battery
// detected a violation, 1 anything else.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pframe/battery.hpp"
#include "pframe/digest.hpp"
#include "pframe/errors.hpp"
#include "pframe/frame.hpp"
#include "pframe/json_io.hpp"
#include "pframe/measure.hpp"
#include "pframe/perturb.hpp"
#include "pframe/rng.hpp"
#include "pframe/transport.hpp"

namespace {

using namespace pframe;

enum ExitCode {
    exit_ok = 0,
    exit_error = 1,
    exit_parse = 2,
    exit_not_frame = 3,
    exit_premise = 4,
    exit_violation = 5,
};

struct Options {
    bool force_normalize = false;
    double tol = kSingularRelTol;

    Normalize mode() const { return force_normalize ? Normalize::force : Normalize::strict; }
};

void emit(const Json& j, const std::string& out_path) {
    if (out_path.empty())
        std::cout << dump_json(j);
    else
        save_json(out_path, j);
}

int cmd_gen(const Options& opt, std::size_t dim, std::size_t atoms, std::uint64_t seed,
            const std::string& out) {
    Rng rng(seed);
    const DiscreteMeasure mu = random_frame(rng, dim, atoms, atoms, 1e-8, 1000);
    const Json measure = measure_to_json(mu);
    const Json cert = frame_certificate_to_json(frame_bounds(mu, opt.tol));
    if (out.empty()) {
        std::cout << dump_json(measure);
        std::cerr << dump_json(cert);
    } else {
        save_json(out, measure);
        std::cout << dump_json(cert);
    }
    return exit_ok;
}

int cmd_analyze(const Options& opt, const std::string& path) {
    const DiscreteMeasure mu = load_measure(path, opt.mode());
    const FrameCertificate cert = frame_bounds(mu, opt.tol);
    std::cout << dump_json(frame_certificate_to_json(cert));
    return cert.is_frame() ? exit_ok : exit_not_frame;
}

int cmd_dual(const Options& opt, const std::string& path, const std::string& out,
             const std::string& coupling_out) {
    const DiscreteMeasure mu = load_measure(path, opt.mode());
    const CanonicalDual cd = canonical_dual(mu, opt.tol);
    emit(measure_to_json(cd.dual), out);
    if (!coupling_out.empty()) save_json(coupling_out, coupling_to_json(cd.coupling));
    return exit_ok;
}

int cmd_parseval(const Options& opt, const std::string& path, const std::string& out) {
    const DiscreteMeasure mu = load_measure(path, opt.mode());
    emit(measure_to_json(canonical_parseval(mu, opt.tol)), out);
    return exit_ok;
}

int cmd_w2(const Options& opt, const std::string& path_mu, const std::string& path_nu,
           const std::string& plan_out) {
    const DiscreteMeasure mu = load_measure(path_mu, opt.mode());
    const DiscreteMeasure nu = load_measure(path_nu, opt.mode());
    const W2Result result = w2(mu, nu);
    std::printf("%.12g\n", result.distance);
    if (!plan_out.empty()) save_json(plan_out, coupling_to_json(result.plan));
    return exit_ok;
}

int cmd_ismember_dual(const Options& opt, const std::string& path_mu, const std::string& path_nu,
                      const std::string& witness_out) {
    const DiscreteMeasure mu = load_measure(path_mu, opt.mode());
    const DiscreteMeasure nu = load_measure(path_nu, opt.mode());
    const DualMembership result = dual_membership(mu, nu);
    Json j;
    j["is_member"] = result.is_member;
    j["infeasibility"] = result.infeasibility;
    if (result.is_member) j["moment_residual"] = result.moment_residual;
    std::cout << dump_json(j);
    if (result.is_member && !witness_out.empty())
        save_json(witness_out, coupling_to_json(*result.witness));
    return result.is_member ? exit_ok : exit_premise;
}

// default coupling for theorems that accept one: diagonal when the atoms
// align, otherwise the product
std::pair<Coupling, std::string> default_coupling(const DiscreteMeasure& mu,
                                                  const DiscreteMeasure& eta) {
    if (mu.size() == eta.size()) {
        bool aligned = true;
        for (std::size_t i = 0; i < mu.size() && aligned; ++i)
            aligned = std::abs(mu.masses[i] - eta.masses[i]) <= kMarginalTol;
        if (aligned) return {diagonal_coupling(mu, eta), "diagonal"};
    }
    return {product_coupling(mu, eta), "product"};
}

struct CertifyArgs {
    std::string theorem;
    std::vector<std::string> inputs;
    std::string coupling_path;    // gamma, or gamma12 for dual-stability
    std::string coupling23_path;  // gamma23 for dual-stability
    std::string out;
    double lambda1 = 0.0, lambda2 = 0.0;
    std::optional<double> delta;
    bool auto_delta = false;
    std::optional<double> user_r;
};

void require_inputs(const CertifyArgs& args, std::size_t count, const char* what) {
    if (args.inputs.size() != count)
        throw UnknownTheorem("theorem '" + args.theorem + "' needs " + std::to_string(count) +
                             " input file(s): " + what);
}

int cmd_certify(const Options& opt, const CertifyArgs& args) {
    const Normalize mode = opt.mode();
    Json output;
    bool ok = false;

    auto finish_single = [&](PerturbationCertificate cert, const std::string& source) {
        cert.coupling_source = source;
        ok = cert.premise_ok;
        output = perturbation_certificate_to_json(cert);
    };

    if (args.theorem == "quadclose") {
        require_inputs(args, 2, "mu.json nu.json");
        const DiscreteMeasure mu = load_measure(args.inputs[0], mode);
        const DiscreteMeasure nu = load_measure(args.inputs[1], mode);
        Coupling gamma = args.coupling_path.empty() ? w2(mu, nu).plan
                                                    : load_coupling(args.coupling_path, mode);
        const std::string source =
            args.coupling_path.empty() ? "w2-optimal" : "file:" + args.coupling_path;
        finish_single(certify_quadclose(mu, nu, gamma, opt.tol), source);
    } else if (args.theorem == "w2") {
        require_inputs(args, 2, "mu.json nu.json");
        const DiscreteMeasure mu = load_measure(args.inputs[0], mode);
        const DiscreteMeasure nu = load_measure(args.inputs[1], mode);
        finish_single(certify_w2(mu, nu, opt.tol), "w2-optimal");
    } else if (args.theorem == "sweetie") {
        require_inputs(args, 2, "mu.json nu.json");
        const DiscreteMeasure mu = load_measure(args.inputs[0], mode);
        const DiscreteMeasure nu = load_measure(args.inputs[1], mode);
        finish_single(certify_sweetie(mu, nu, args.user_r, opt.tol), "");
    } else if (args.theorem == "sweetie-coupling") {
        require_inputs(args, 2, "mu.json nu.json");
        const DiscreteMeasure mu = load_measure(args.inputs[0], mode);
        const DiscreteMeasure nu = load_measure(args.inputs[1], mode);
        std::string source;
        Coupling gamma = [&] {
            if (!args.coupling_path.empty()) {
                source = "file:" + args.coupling_path;
                return load_coupling(args.coupling_path, mode);
            }
            auto [g, s] = default_coupling(mu, nu);
            source = s;
            return g;
        }();
        finish_single(certify_sweetie_coupling(mu, nu, gamma, opt.tol), source);
    } else if (args.theorem == "paley") {
        require_inputs(args, 1, "pair.json");
        const PairedMeasure p = load_paired(args.inputs[0], mode);
        std::optional<double> delta = args.delta;
        if (args.auto_delta) delta.reset();
        finish_single(certify_paley(p, args.lambda1, args.lambda2, delta, opt.tol), "");
    } else if (args.theorem == "dual-stability") {
        Coupling gamma12 = [&]() -> Coupling {
            if (args.inputs.size() == 2) {
                // canonical dual route: nu and gamma12 derived from mu
                const DiscreteMeasure mu = load_measure(args.inputs[0], mode);
                return canonical_dual(mu, opt.tol).coupling;
            }
            require_inputs(args, 3, "mu.json nu.json eta.json (with --coupling as the witness)");
            if (args.coupling_path.empty())
                throw UnknownTheorem("dual-stability with explicit nu needs --coupling (gamma12)");
            return load_coupling(args.coupling_path, mode);
        }();
        const DiscreteMeasure mu = load_measure(args.inputs[0], mode);
        const DiscreteMeasure eta = load_measure(args.inputs.back(), mode);
        const DiscreteMeasure nu =
            args.inputs.size() == 2 ? gamma12.nu : load_measure(args.inputs[1], mode);
        std::string source23;
        Coupling gamma23 = [&] {
            if (!args.coupling23_path.empty()) {
                source23 = "file:" + args.coupling23_path;
                return load_coupling(args.coupling23_path, mode);
            }
            auto [g, s] = default_coupling(nu, eta);
            source23 = s;
            return g;
        }();
        const std::string source12 =
            args.inputs.size() == 2 ? "canonical-map" : "file:" + args.coupling_path;
        finish_single(certify_dual_stability(mu, nu, gamma12, eta, gamma23, opt.tol),
                      "gamma12:" + source12 + ",gamma23:" + source23);
    } else if (args.theorem == "canonical-dual") {
        require_inputs(args, 2, "mu.json eta.json");
        const DiscreteMeasure mu = load_measure(args.inputs[0], mode);
        const DiscreteMeasure eta = load_measure(args.inputs[1], mode);
        const CanonicalDualCertificates certs = certify_canonical_dual(mu, eta, opt.tol);
        output["sigma"] = perturbation_certificate_to_json(certs.sigma);
        output["eps_hat"] = perturbation_certificate_to_json(certs.eps_hat);
        ok = certs.sigma.premise_ok;
    } else if (args.theorem == "coupling-dual") {
        require_inputs(args, 2, "mu.json eta.json");
        const DiscreteMeasure mu = load_measure(args.inputs[0], mode);
        const DiscreteMeasure eta = load_measure(args.inputs[1], mode);
        std::string source;
        Coupling gamma = [&] {
            if (!args.coupling_path.empty()) {
                source = "file:" + args.coupling_path;
                return load_coupling(args.coupling_path, mode);
            }
            auto [g, s] = default_coupling(mu, eta);
            source = s;
            return g;
        }();
        CouplingDualCertificates certs = certify_coupling_dual(mu, eta, gamma, opt.tol);
        certs.eps.coupling_source = source;
        certs.chi.coupling_source = source;
        output["eps"] = perturbation_certificate_to_json(certs.eps);
        output["chi"] = perturbation_certificate_to_json(certs.chi);
        if (const auto combined = certs.combined_lower()) output["combined_lower"] = *combined;
        ok = certs.eps.premise_ok || certs.chi.premise_ok;
    } else if (args.theorem == "parseval-tau") {
        require_inputs(args, 2, "mu.json eta.json");
        const DiscreteMeasure mu = load_measure(args.inputs[0], mode);
        const DiscreteMeasure eta = load_measure(args.inputs[1], mode);
        std::string source;
        Coupling gamma = [&] {
            if (!args.coupling_path.empty()) {
                source = "file:" + args.coupling_path;
                return load_coupling(args.coupling_path, mode);
            }
            auto [g, s] = default_coupling(mu, eta);
            source = s;
            return g;
        }();
        finish_single(certify_parseval_tau(mu, eta, gamma, opt.tol), source);
    } else {
        throw UnknownTheorem("unknown theorem '" + args.theorem +
                             "' (expected quadclose|w2|sweetie|sweetie-coupling|paley|"
                             "dual-stability|canonical-dual|coupling-dual|parseval-tau)");
    }

    emit(output, args.out);
    return ok ? exit_ok : exit_premise;
}

int cmd_validate(const BatteryConfig& cfg, const std::string& out) {
    if (cfg.dim_min < 1 || cfg.dim_max < cfg.dim_min)
        throw ParseError("validate: need 1 <= dim-min <= dim-max");
    if (cfg.atoms_min < 1 || cfg.atoms_max < cfg.atoms_min)
        throw ParseError("validate: need 1 <= atoms-min <= atoms-max");
    if (cfg.atoms_max < cfg.dim_max)
        throw ParseError("validate: atoms-max below dim-max cannot span the top dimensions");
    if (cfg.scales.empty()) throw ParseError("validate: need at least one scale");
    const BatteryResult result = run_battery(cfg);
    const std::string csv = battery_csv(result);
    if (out.empty())
        std::cout << csv;
    else
        save_text(out, csv);
    for (const TheoremSummary& s : result.summaries)
        std::fprintf(stderr, "%-20s trials %d  premise_ok %d  violations %d\n",
                     theorem_name(s.theorem), s.trials, s.premise_ok, s.violations);
    std::fprintf(stderr, "total violations: %d\n", result.total_violations);
    return result.all_sound() ? exit_ok : exit_violation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"probabilistic frame perturbation certificates"};
    app.require_subcommand(1);

    Options opt;
    opt.tol = singular_rel_tol_from_env();
    app.add_flag("--force-normalize", opt.force_normalize,
                 "rescale mass sums further than 1e-6 from 1 instead of rejecting them");

    // gen
    auto* gen = app.add_subcommand("gen", "generate a random frame");
    std::size_t gen_dim = 2, gen_atoms = 4;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    gen->add_option("--dim", gen_dim, "ambient dimension")->required();
    gen->add_option("--atoms", gen_atoms, "number of atoms")->required();
    gen->add_option("--seed", gen_seed, "random seed");
    gen->add_option("--out,-o", gen_out, "output measure file (default: stdout)");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "frame bounds and classification");
    std::string analyze_path;
    analyze->add_option("measure", analyze_path, "measure JSON file")->required();

    // dual
    auto* dual = app.add_subcommand("dual", "canonical dual measure");
    std::string dual_path, dual_out, dual_coupling_out;
    dual->add_option("measure", dual_path)->required();
    dual->add_option("--out,-o", dual_out, "output measure file (default: stdout)");
    dual->add_option("--coupling-out", dual_coupling_out, "also write the witness coupling");

    // parseval
    auto* parseval = app.add_subcommand("parseval", "canonical Parseval measure");
    std::string parseval_path, parseval_out;
    parseval->add_option("measure", parseval_path)->required();
    parseval->add_option("--out,-o", parseval_out, "output measure file (default: stdout)");

    // w2
    auto* w2cmd = app.add_subcommand("w2", "exact 2-Wasserstein distance");
    std::string w2_mu, w2_nu, w2_plan;
    w2cmd->add_option("mu", w2_mu)->required();
    w2cmd->add_option("nu", w2_nu)->required();
    w2cmd->add_option("--plan", w2_plan, "write the optimal plan to this file");

    // ismember-dual
    auto* member = app.add_subcommand("ismember-dual", "transport-dual membership");
    std::string member_mu, member_nu, member_witness;
    member->add_option("mu", member_mu)->required();
    member->add_option("nu", member_nu)->required();
    member->add_option("--witness", member_witness, "write a witness coupling when feasible");

    // certify
    auto* certify = app.add_subcommand("certify", "perturbation certificate for one theorem");
    CertifyArgs cert_args;
    double cert_r = 0.0;
    double cert_delta = 0.0;
    certify->add_option("--theorem", cert_args.theorem, "theorem name")->required();
    certify->add_option("inputs", cert_args.inputs, "input JSON files (per theorem)");
    certify->add_option("--coupling", cert_args.coupling_path,
                        "coupling file (gamma; gamma12 for dual-stability)");
    certify->add_option("--coupling23", cert_args.coupling23_path,
                        "gamma23 file for dual-stability");
    certify->add_option("--lambda1", cert_args.lambda1, "Paley-Wiener lambda1");
    certify->add_option("--lambda2", cert_args.lambda2, "Paley-Wiener lambda2");
    auto* delta_opt = certify->add_option("--delta", cert_delta, "Paley-Wiener delta (assumed)");
    certify->add_flag("--auto-delta", cert_args.auto_delta,
                      "certify delta exactly from the paired atoms (needs lambda1=lambda2=0)");
    auto* r_opt = certify->add_option("--R", cert_r, "spectral-distance override (sweetie)");
    certify->add_option("--out,-o", cert_args.out, "certificate file (default: stdout)");

    // validate
    auto* validate = app.add_subcommand("validate", "randomized soundness battery");
    BatteryConfig cfg;
    std::string validate_out;
    validate->add_option("--seed", cfg.seed, "battery seed");
    validate->add_option("--trials", cfg.trials, "trials per theorem")
        ->check(CLI::PositiveNumber);
    validate->add_option("--dim-min", cfg.dim_min);
    validate->add_option("--dim-max", cfg.dim_max);
    validate->add_option("--atoms-min", cfg.atoms_min);
    validate->add_option("--atoms-max", cfg.atoms_max);
    validate->add_option("--scales", cfg.scales, "perturbation scale sweep");
    validate->add_flag("--self-test-corrupt", cfg.corrupt,
                       "skew every bound by 10% and expect the harness to catch it");
    validate->add_option("--out,-o", validate_out, "CSV file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_parse;
    }

    try {
        if (*delta_opt) cert_args.delta = cert_delta;
        if (*r_opt) cert_args.user_r = cert_r;
        if (gen->parsed()) return cmd_gen(opt, gen_dim, gen_atoms, gen_seed, gen_out);
        if (analyze->parsed()) return cmd_analyze(opt, analyze_path);
        if (dual->parsed()) return cmd_dual(opt, dual_path, dual_out, dual_coupling_out);
        if (parseval->parsed()) return cmd_parseval(opt, parseval_path, parseval_out);
        if (w2cmd->parsed()) return cmd_w2(opt, w2_mu, w2_nu, w2_plan);
        if (member->parsed()) return cmd_ismember_dual(opt, member_mu, member_nu, member_witness);
        if (certify->parsed()) return cmd_certify(opt, cert_args);
        if (validate->parsed()) return cmd_validate(cfg, validate_out);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return exit_parse;
    } catch (const UnknownTheorem& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_parse;
    } catch (const NotAFrame& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_not_frame;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_error;
    }
    return exit_error;
}
