// Command-line surface: generate, transform, synthesize, estimate, verify.
//
// Exit codes: 0 success / all checks passed, 1 at least one check failed,
// 2 usage or input error, 3 no failures but at least one indeterminate check.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "deckit/checks.hpp"
#include "deckit/coupling.hpp"
#include "deckit/cube.hpp"
#include "deckit/decouple.hpp"
#include "deckit/montecarlo.hpp"
#include "deckit/multilinear.hpp"

namespace {

constexpr const char* kCsvVersionLine = "# decouple-kit v1";

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << text;
}

std::string csv_double(double v) {
    nlohmann::json j = v;  // shortest round-trip float form, same as the JSON output
    return j.dump();
}

struct EstimateArgs {
    std::string in_path;
    std::string dist = "gaussian";
    double lambda = 0.25;
    bool tail = false;
    bool moment = false;
    double t = 1.0;
    int p = 2;
    std::int64_t samples = 100000;
    std::optional<std::uint64_t> seed;
    int shards = 1;
    std::string format = "json";
    std::string out_path;
};

int run_estimate(const EstimateArgs& a) {
    const deckit::MultilinearPoly poly = deckit::poly_from_json(read_file(a.in_path));
    deckit::SampleSpec spec;
    spec.n = poly.var_count();
    spec.count = a.samples;
    if (a.dist == "gaussian") spec.distribution = deckit::Dist::gaussian;
    else if (a.dist == "rademacher") spec.distribution = deckit::Dist::rademacher;
    else if (a.dist == "biased") {
        spec.distribution = deckit::Dist::biased;
        spec.lambda = a.lambda;
    } else {
        throw CLI::ValidationError("--dist must be gaussian, rademacher or biased");
    }
    // Reproducibility: an explicit seed is echoed; otherwise one is drawn
    // from entropy and printed so the run can be replayed.
    std::uint64_t seed;
    if (a.seed) {
        seed = *a.seed;
    } else {
        std::random_device rd;
        seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    }
    spec.master_seed = seed;
    spec.stream_id = deckit::fnv1a64("cli.estimate");

    const deckit::CompiledPoly cp = deckit::compile(poly);
    auto eval = [&](const double* x) { return cp.eval(x); };

    nlohmann::ordered_json j;
    std::string experiment;
    double col_t = 0.0, p_hat = 0.0, ci_low = 0.0, ci_high = 0.0;
    if (a.tail) {
        const deckit::TailEstimate est = deckit::estimate_tail(eval, spec, a.t, a.shards);
        experiment = "tail";
        col_t = a.t;
        p_hat = est.p_hat;
        ci_low = est.ci_low;
        ci_high = est.ci_high;
        j = {{"experiment", experiment}, {"k", poly.degree()},      {"distribution", a.dist},
             {"t", a.t},                {"count", est.count},       {"hits", est.hits},
             {"p_hat", est.p_hat},      {"ci_low", est.ci_low},     {"ci_high", est.ci_high},
             {"ci_level", 0.99},        {"seed", seed}};
    } else {
        const deckit::MomentEstimate est = deckit::estimate_moment(eval, spec, a.p, a.shards);
        experiment = "moment:p=" + std::to_string(a.p);
        col_t = static_cast<double>(a.p);
        p_hat = est.mean;
        ci_low = est.mean - 2.576 * est.std_error;
        ci_high = est.mean + 2.576 * est.std_error;
        j = {{"experiment", experiment}, {"k", poly.degree()},  {"distribution", a.dist},
             {"p", a.p},                 {"count", est.count},  {"mean", est.mean},
             {"std_error", est.std_error}, {"seed", seed}};
    }
    if (a.format == "csv") {
        std::ostringstream ss;
        ss << kCsvVersionLine << "\n";
        ss << "experiment,k,hypothesis,t,count,p_hat,ci_low,ci_high,seed\n";
        ss << experiment << ',' << poly.degree() << ',' << a.dist << ',' << csv_double(col_t)
           << ',' << a.samples << ',' << csv_double(p_hat) << ',' << csv_double(ci_low) << ','
           << csv_double(ci_high) << ',' << seed << "\n";
        emit(ss.str(), a.out_path);
    } else {
        emit(j.dump() + "\n", a.out_path);
    }
    return 0;
}

struct VerifyArgs {
    bool suite = false;
    std::string check;
    std::optional<std::uint64_t> seed;
    int shards = 1;
    std::int64_t samples = 200000;
    int n = 8;
    int k = 3;
    double t = 1.0;
    double u_sigma = 1.0;
    std::optional<double> lambda;
    std::string hypothesis = "H1";
    std::string mode;
    int enum_cap = 22;
    double perturb_c = 0.0;
    std::string out_path;
};

deckit::CheckResult run_single_check(const VerifyArgs& a, std::uint64_t seed) {
    using namespace deckit;
    const Hypothesis hyp = hypothesis_from_string(a.hypothesis);
    const CubeEnumLimit limit{a.enum_cap};
    auto poly_seed = stream_state(seed, fnv1a64("cli.poly"));
    if (a.check == "identity") {
        const SchemeMode mode = a.mode.empty() ? (hyp == Hypothesis::H3 ? SchemeMode::homogeneous
                                                                        : SchemeMode::general)
                                               : mode_from_string(a.mode);
        const bool homogeneous = mode == SchemeMode::homogeneous;
        MultilinearPoly f = random_poly(a.n, a.k, homogeneous, poly_seed);
        CouplingScheme scheme = synth(a.k, hyp, mode);
        if (a.perturb_c != 0.0) scheme.entries.at(0).c += a.perturb_c;  // sensitivity control
        return check_identity(f, scheme, 1000, seed);
    }
    if (a.check == "tail-domination") {
        MultilinearPoly f = random_poly(a.n, a.k, hyp == Hypothesis::H3, poly_seed);
        return check_tail_domination(f, hyp, a.t, a.samples, seed, a.shards);
    }
    if (a.check == "hypercon") {
        MultilinearPoly f = random_poly(a.n, a.k, false, poly_seed);
        std::optional<BiasSpec> bias;
        if (a.lambda) bias = BiasSpec{*a.lambda, {}};
        return check_hypercon(f, limit, bias);
    }
    if (a.check == "one-liner") {
        MultilinearPoly f = random_poly(a.n, a.k, false, poly_seed);
        f = f.scaled(1.0 / sup_norm_cube(f, limit));
        const double c1 = synth(a.k, Hypothesis::H2, SchemeMode::general).c1_norm();
        return check_one_liner(block_from_base(one_block(f).base.scaled(1.0 / c1), a.n), limit);
    }
    if (a.check == "decoupled-tail") {
        BlockPoly b = one_block(random_poly(a.n, a.k, false, poly_seed));
        const double sigma = std::sqrt(b.base.variance());
        return check_decoupled_tail(b, a.u_sigma * sigma, a.samples, seed, a.shards);
    }
    if (a.check == "supnorms") {
        MultilinearPoly f = random_poly(a.n, a.k, false, poly_seed);
        return check_supnorms(f, a.k, limit);
    }
    if (a.check == "gaussian-dfko") {
        MultilinearPoly f = random_poly(a.n, a.k, false, poly_seed);
        f = f.scaled(1.0 / std::sqrt(f.variance()));
        return check_gaussian_dfko(f, a.t, a.samples, seed, a.shards);
    }
    throw CLI::ValidationError(
        "--check must be one of identity, tail-domination, hypercon, one-liner, "
        "decoupled-tail, supnorms, gaussian-dfko");
}

int run_verify(const VerifyArgs& a) {
    if (!a.seed)
        throw CLI::ValidationError("verify requires --seed (reports must be reproducible)");
    std::vector<deckit::CheckResult> results;
    if (a.suite) {
        results = deckit::verification_suite(*a.seed, a.shards, a.samples);
    } else {
        results.push_back(run_single_check(a, *a.seed));
    }
    std::string text;
    for (const auto& r : results) text += deckit::check_to_json_obj(r).dump() + "\n";
    emit(text, a.out_path);
    return deckit::suite_exit_code(results);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"decoupling toolkit for multilinear polynomials"};
    app.require_subcommand(1);

    // gen
    int gen_n = 0, gen_k = 0;
    bool gen_homogeneous = false;
    std::uint64_t gen_seed = 0;
    std::size_t gen_max_terms = 512;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen", "generate a random polynomial");
    gen->add_option("--n", gen_n, "variable count")->required();
    gen->add_option("--k", gen_k, "degree")->required();
    gen->add_flag("--homogeneous", gen_homogeneous, "restrict every monomial to degree k");
    gen->add_option("--seed", gen_seed, "random seed")->required();
    gen->add_option("--max-terms", gen_max_terms, "support size cap (default 512)");
    gen->add_option("--out", gen_out, "output path (default stdout)");

    // decouple
    bool dec_one_block = false, dec_full = false;
    int dec_k = -1;
    std::string dec_in, dec_out;
    auto* dec = app.add_subcommand("decouple", "one-block or full decoupling of a polynomial");
    dec->add_flag("--one-block", dec_one_block, "one-block decoupling");
    dec->add_flag("--full", dec_full, "full decoupling into k blocks");
    dec->add_option("--k", dec_k, "block count for --full (default: degree)");
    dec->add_option("--in", dec_in, "input polynomial file")->required();
    dec->add_option("--out", dec_out, "output path (default stdout)");

    // synth
    int synth_k = 0;
    std::string synth_h, synth_mode, synth_out;
    auto* syn = app.add_subcommand("synth", "synthesize a coupling scheme");
    syn->add_option("--k", synth_k, "degree")->required();
    syn->add_option("--hypothesis", synth_h, "H1, H2 or H3")->required();
    syn->add_option("--mode", synth_mode, "homogeneous or general")->required();
    syn->add_option("--out", synth_out, "output path (default stdout)");

    // coeff-table
    int ct_kmax = 0;
    std::string ct_h, ct_mode, ct_format = "csv", ct_out;
    auto* ct = app.add_subcommand("coeff-table", "coefficient norm growth table");
    ct->add_option("--kmax", ct_kmax, "largest degree")->required();
    ct->add_option("--hypothesis", ct_h, "H1, H2 or H3")->required();
    ct->add_option("--mode", ct_mode, "homogeneous or general")->required();
    ct->add_option("--format", ct_format, "csv (default) or json");
    ct->add_option("--out", ct_out, "output path (default stdout)");

    // estimate
    EstimateArgs ea;
    auto* est = app.add_subcommand("estimate", "Monte Carlo tail or moment estimation");
    est->add_option("--in", ea.in_path, "input polynomial file")->required();
    est->add_option("--dist", ea.dist, "gaussian, rademacher or biased");
    est->add_option("--lambda", ea.lambda, "bias parameter for --dist biased");
    est->add_flag("--tail", ea.tail, "estimate Pr[|f| > t]");
    est->add_flag("--moment", ea.moment, "estimate E|f|^p");
    est->add_option("--t", ea.t, "tail threshold");
    est->add_option("--p", ea.p, "moment power (2, 4, 6 or 8)");
    est->add_option("--samples", ea.samples, "sample count");
    est->add_option("--seed", ea.seed, "random seed (default: entropy, echoed in the report)");
    est->add_option("--shards", ea.shards, "worker threads");
    est->add_option("--format", ea.format, "json (default) or csv");
    est->add_option("--out", ea.out_path, "output path (default stdout)");

    // verify
    VerifyArgs va;
    auto* ver = app.add_subcommand("verify", "run verification checks");
    ver->add_flag("--suite", va.suite, "run the fixed verification battery");
    ver->add_option("--check", va.check, "run one named check");
    ver->add_option("--seed", va.seed, "random seed (required)");
    ver->add_option("--shards", va.shards, "worker threads");
    ver->add_option("--samples", va.samples, "Monte Carlo sample count per check");
    ver->add_option("--n", va.n, "variable count for generated inputs");
    ver->add_option("--k", va.k, "degree for generated inputs");
    ver->add_option("--t", va.t, "tail threshold");
    ver->add_option("--u-sigma", va.u_sigma, "decoupled-tail threshold, in units of sigma");
    ver->add_option("--lambda", va.lambda, "bias parameter (hypercon)");
    ver->add_option("--hypothesis", va.hypothesis, "H1, H2 or H3");
    ver->add_option("--mode", va.mode, "homogeneous or general");
    ver->add_option("--enum-cap", va.enum_cap, "exhaustive enumeration cap (default 22)");
    ver->add_option("--perturb-c", va.perturb_c,
                    "nudge one coupling coefficient (identity sensitivity control)");
    ver->add_option("--out", va.out_path, "output path (default stdout)");

    try {
        app.parse(argc, argv);

        if (gen->parsed()) {
            const auto poly = deckit::random_poly(gen_n, gen_k, gen_homogeneous, gen_seed,
                                                  gen_max_terms);
            emit(deckit::poly_to_json(poly) + "\n", gen_out);
            return 0;
        }
        if (dec->parsed()) {
            if (dec_one_block == dec_full)
                throw CLI::ValidationError("decouple needs exactly one of --one-block / --full");
            const auto poly = deckit::poly_from_json(read_file(dec_in));
            if (dec_one_block) {
                emit(deckit::block_to_json(deckit::one_block(poly)) + "\n", dec_out);
            } else {
                const int k = dec_k < 0 ? poly.degree() : dec_k;
                emit(deckit::full_to_json(deckit::full_decouple(poly, k)) + "\n", dec_out);
            }
            return 0;
        }
        if (syn->parsed()) {
            const auto scheme = deckit::synth(synth_k, deckit::hypothesis_from_string(synth_h),
                                              deckit::mode_from_string(synth_mode));
            emit(deckit::scheme_to_json(scheme) + "\n", synth_out);
            return 0;
        }
        if (ct->parsed()) {
            const auto rows = deckit::c1_growth_table(
                ct_kmax, deckit::hypothesis_from_string(ct_h), deckit::mode_from_string(ct_mode));
            if (ct_format == "json") {
                nlohmann::ordered_json j = nlohmann::ordered_json::array();
                for (const auto& r : rows)
                    j.push_back({{"k", r.k},
                                 {"c1_norm", r.c1_norm},
                                 {"lambda_min", r.lambda_min},
                                 {"m", r.m}});
                emit(j.dump() + "\n", ct_out);
            } else {
                std::ostringstream ss;
                ss << kCsvVersionLine << "\n" << "k,c1_norm,lambda_min,m\n";
                for (const auto& r : rows)
                    ss << r.k << ',' << csv_double(r.c1_norm) << ',' << csv_double(r.lambda_min)
                       << ',' << r.m << "\n";
                emit(ss.str(), ct_out);
            }
            return 0;
        }
        if (est->parsed()) {
            if (ea.tail == ea.moment)
                throw CLI::ValidationError("estimate needs exactly one of --tail / --moment");
            return run_estimate(ea);
        }
        if (ver->parsed()) {
            if (va.suite == !va.check.empty())
                throw CLI::ValidationError("verify needs exactly one of --suite / --check NAME");
            return run_verify(va);
        }
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
