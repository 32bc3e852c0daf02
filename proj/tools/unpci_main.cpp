// Command-line front end for the cluster-significance library.
//
// Subcommands:
//   test      run the significance test on a CSV matrix, emit a JSON report
//   simulate  run a named scenario end to end, emit per-rep CSV + summary JSON
//   critbw    critical bandwidth of one feature column
//   tci       theoretical cluster-index values for a spherical mixture
//
// Exit codes: 0 success, 1 statistical degeneracy, 2 usage, 3 I/O.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "unpci/all.hpp"

namespace {

using nlohmann::json;

constexpr const char* kVersion = "1.0.0";

// JSON numbers carry 12 significant digits; exact integers (p-values of 0 or
// 1, counts) stay integral so reports read cleanly.
json jnum(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    const double rounded = std::strtod(buf, nullptr);
    if (rounded == static_cast<std::int64_t>(rounded) &&
        std::abs(rounded) < 9.0e15) {
        return json(static_cast<std::int64_t>(rounded));
    }
    return json(rounded);
}

// FNV-1a over the raw bytes of the input; the manifest pins what was read.
std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw unpci::IoError("cannot open '" + path + "'");
    std::uint64_t h = 1469598103934665603ull;
    char chunk[1 << 15];
    while (in.read(chunk, sizeof chunk) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(chunk[i]);
            h *= 1099511628211ull;
        }
    }
    return h;
}

std::uint64_t fnv1a_string(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

unpci::ClusterMethod parse_method(const std::string& m) {
    if (m == "kmeans") return unpci::ClusterMethod::kKmeans;
    if (m == "single") return unpci::ClusterMethod::kSingle;
    if (m == "ward") return unpci::ClusterMethod::kWard;
    throw CLI::ValidationError("--method", "unknown clustering method '" + m + "'");
}

unpci::CovChoice parse_cov(const std::string& c) {
    if (c == "auto") return unpci::CovChoice::kAuto;
    if (c == "sample") return unpci::CovChoice::kSample;
    if (c == "glasso") return unpci::CovChoice::kGlasso;
    throw CLI::ValidationError("--cov", "unknown covariance choice '" + c + "'");
}

unpci::CiVariant parse_ci(const std::string& v) {
    if (v == "squared_l2") return unpci::CiVariant::kSquaredL2;
    if (v == "l2") return unpci::CiVariant::kL2;
    if (v == "l1") return unpci::CiVariant::kL1;
    throw CLI::ValidationError("--ci", "unknown cluster-index variant '" + v + "'");
}

const char* method_name(unpci::ClusterMethod m) {
    switch (m) {
        case unpci::ClusterMethod::kKmeans: return "kmeans";
        case unpci::ClusterMethod::kSingle: return "single";
        default: return "ward";
    }
}

const char* cov_choice_name(unpci::CovChoice c) {
    switch (c) {
        case unpci::CovChoice::kAuto: return "auto";
        case unpci::CovChoice::kSample: return "sample";
        default: return "glasso";
    }
}

const char* ci_name(unpci::CiVariant v) {
    switch (v) {
        case unpci::CiVariant::kSquaredL2: return "squared_l2";
        case unpci::CiVariant::kL2: return "l2";
        default: return "l1";
    }
}

json config_json(const unpci::UnpciConfig& cfg) {
    return json{{"b", cfg.b},
                {"alpha_screen", jnum(cfg.alpha_screen)},
                {"rho", jnum(cfg.rho)},
                {"method", method_name(cfg.cluster_method)},
                {"reduce", cfg.dimension_reduction},
                {"ci", ci_name(cfg.ci_variant)},
                {"cov", cov_choice_name(cfg.covariance)},
                {"add_one", cfg.add_one_pvalue},
                {"kmeans_restarts", cfg.kmeans_restarts},
                {"threads", cfg.threads}};
}

json manifest_json(const std::string& subcommand, const unpci::UnpciConfig& cfg,
                   std::uint64_t digest) {
    return json{{"subcommand", subcommand},
                {"version", kVersion},
                {"seed", cfg.seed},
                {"input_digest", hex64(digest)},
                {"config", config_json(cfg)}};
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw unpci::IoError("cannot write '" + path + "'");
    out << body;
    if (!out) throw unpci::IoError("write failed for '" + path + "'");
}

void emit(const json& doc, const std::string& out_path) {
    const std::string body = doc.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << body;
    } else {
        write_text(out_path, body);
    }
}

struct CommonOpts {
    unpci::UnpciConfig cfg;
    std::string method = "kmeans";
    std::string cov = "auto";
    std::string ci = "squared_l2";

    void add_flags(CLI::App& app, bool with_reduce = true) {
        app.add_option("--b", cfg.b, "null replicates")->capture_default_str();
        app.add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();
        app.add_option("--method", method, "clustering: kmeans|single|ward")
            ->capture_default_str();
        app.add_option("--rho", cfg.rho, "graphical-lasso penalty")->capture_default_str();
        app.add_option("--alpha-screen", cfg.alpha_screen, "screening t-test level")
            ->capture_default_str();
        app.add_option("--cov", cov, "covariance: auto|sample|glasso")
            ->capture_default_str();
        app.add_option("--ci", ci, "cluster-index variant: squared_l2|l2|l1")
            ->capture_default_str();
        app.add_option("--restarts", cfg.kmeans_restarts, "k-means restarts")
            ->capture_default_str();
        app.add_option("--threads", cfg.threads,
                       "worker threads (0: UNPCI_THREADS env or 1)")
            ->capture_default_str();
        if (with_reduce) {
            app.add_flag("--reduce", cfg.dimension_reduction,
                         "screen features by t-test before testing");
            app.add_flag("--add-one", cfg.add_one_pvalue,
                         "also report the add-one p-value estimate");
        }
    }

    void resolve() {
        cfg.cluster_method = parse_method(method);
        cfg.covariance = parse_cov(cov);
        cfg.ci_variant = parse_ci(ci);
        cfg.validate();
    }
};

int cmd_test(const std::string& data_path, const std::string& labels_path,
             const std::string& dump_null, const std::string& out_path,
             CommonOpts& opts) {
    opts.resolve();
    const unpci::DataMatrix x = unpci::read_data_csv_file(data_path);
    std::vector<int> labels;
    if (!labels_path.empty()) {
        labels = unpci::read_labels_csv_file(labels_path);
    }
    const unpci::UnpciResult res = unpci::run_unpci(x, labels, opts.cfg);

    json report;
    report["manifest"] = manifest_json("test", opts.cfg, fnv1a_file(data_path));
    if (!labels_path.empty()) {
        report["manifest"]["labels_digest"] = hex64(fnv1a_file(labels_path));
    }
    report["ci_data"] = jnum(res.ci_data);
    report["p_perm"] = jnum(res.p_perm);
    report["z"] = jnum(res.z);
    report["p_normal"] = jnum(res.p_normal);
    report["mu_ci"] = jnum(res.mu_ci);
    report["sigma_ci"] = jnum(res.sigma_ci);
    report["n_selected"] = res.selected_features.size();
    report["labels"] = res.labels;
    report["cov_method"] =
        res.cov_method == unpci::CovMethod::kSample ? "sample" : "glasso";
    report["singleton_clustering"] = res.singleton_clustering;
    report["screening_fallback"] = res.screening_fallback;
    if (opts.cfg.add_one_pvalue) report["p_add_one"] = jnum(res.p_add_one);

    if (!dump_null.empty()) {
        std::ostringstream csv;
        csv << "ci_b\n";
        char buf[40];
        for (double ci : res.null_cis) {
            std::snprintf(buf, sizeof buf, "%.12g\n", ci);
            csv << buf;
        }
        write_text(dump_null, csv.str());
    }
    emit(report, out_path);
    return 0;
}

int cmd_simulate(const std::string& scenario, std::size_t reps, std::size_t scale_n,
                 std::size_t scale_p, const std::string& out_csv,
                 const std::string& out_json, CommonOpts& opts) {
    opts.resolve();
    unpci::ScenarioSpec spec;
    spec.name = scenario;
    spec.n = scale_n;
    spec.p = scale_p;
    if (reps < 1) throw CLI::ValidationError("--reps", "must be at least 1");
    const unpci::TableRow row = unpci::run_table(spec, reps, opts.cfg);

    std::ostringstream csv;
    csv << "rep,p_perm,significant\n";
    char buf[64];
    for (std::size_t r = 0; r < row.p_values.size(); ++r) {
        std::snprintf(buf, sizeof buf, "%zu,%.12g,%d\n", r + 1, row.p_values[r],
                      row.p_values[r] < 0.05 ? 1 : 0);
        csv << buf;
    }
    if (out_csv.empty()) {
        std::cout << csv.str();
    } else {
        write_text(out_csv, csv.str());
    }

    std::string param_key = scenario + "|" + std::to_string(spec.n) + "|" +
                            std::to_string(spec.p) + "|" + std::to_string(reps);
    json summary;
    summary["manifest"] = manifest_json("simulate", opts.cfg, fnv1a_string(param_key));
    summary["scenario"] = row.scenario;
    summary["reps"] = row.reps;
    summary["significant"] = row.significant;
    summary["reruns"] = row.reruns;
    emit(summary, out_json);
    return 0;
}

int cmd_critbw(const std::string& data_path, const std::string& feature,
               const std::string& out_path, std::uint64_t seed) {
    const unpci::DataMatrix x = unpci::read_data_csv_file(data_path);
    std::size_t col = x.p();
    for (std::size_t j = 0; j < x.p(); ++j) {
        if (x.feature_ids[j] == feature) {
            col = j;
            break;
        }
    }
    if (col == x.p()) {
        throw CLI::ValidationError("--feature",
                                   "no feature named '" + feature + "' in header");
    }
    const auto cb = unpci::critical_bandwidth(x.values.column(col));

    unpci::UnpciConfig cfg;
    cfg.seed = seed;
    json report;
    report["manifest"] = manifest_json("critbw", cfg, fnv1a_file(data_path));
    report["feature"] = feature;
    report["h1"] = jnum(cb.h1);
    report["mode_location"] = jnum(cb.mode_location);
    report["search_tolerance"] = jnum(cb.search_tolerance);
    emit(report, out_path);
    return 0;
}

int cmd_tci(std::vector<double> lambdas, double a, double eta,
            const std::string& out_path) {
    unpci::MixtureSpec spec;
    spec.lambdas = std::move(lambdas);
    spec.a = a;
    spec.eta = eta;
    spec.validate();

    std::string key = "tci";
    for (double l : spec.lambdas) key += "," + std::to_string(l);
    key += "|" + std::to_string(a) + "|" + std::to_string(eta);

    unpci::UnpciConfig cfg;
    json report;
    report["manifest"] = manifest_json("tci", cfg, fnv1a_string(key));
    report["lambdas"] = spec.lambdas;
    report["a"] = jnum(a);
    report["eta"] = jnum(eta);
    report["tci_gauss"] = jnum(unpci::tci_gauss(spec.lambdas));
    report["tci_null_mixture"] = jnum(unpci::tci_null_mixture(spec));
    report["tci_mix"] = jnum(unpci::tci_mix(spec));
    emit(report, out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cluster significance against a smoothed unimodal null"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    // test
    auto* test = app.add_subcommand("test", "significance test on a CSV matrix");
    std::string data_path, labels_path, dump_null, out_path;
    CommonOpts test_opts;
    test->add_option("csv", data_path, "observations x features CSV with header")
        ->required();
    test->add_option("--labels", labels_path, "externally supplied 1/2 labels CSV");
    test->add_option("--dump-null", dump_null, "write the B null cluster indices as CSV");
    test->add_option("-o,--out", out_path, "write the JSON report here instead of stdout");
    test_opts.add_flags(*test);

    // simulate
    auto* sim = app.add_subcommand("simulate", "run a named scenario end to end");
    std::string scenario, sim_csv, sim_json;
    std::size_t reps = 1, scale_n = 0, scale_p = 0;
    CommonOpts sim_opts;
    sim->add_option("--scenario", scenario, "scenario name")->required();
    sim->add_option("--reps", reps, "independent repetitions")->capture_default_str();
    sim->add_option("--scale-n", scale_n, "override observation count");
    sim->add_option("--scale-p", scale_p, "override feature count");
    sim->add_option("--out-csv", sim_csv, "per-rep CSV path (default stdout)");
    sim->add_option("-o,--out", sim_json, "summary JSON path (default stdout)");
    sim_opts.add_flags(*sim);

    // critbw
    auto* critbw = app.add_subcommand("critbw", "critical bandwidth of one feature");
    std::string cb_path, cb_feature, cb_out;
    std::uint64_t cb_seed = 0;
    critbw->add_option("csv", cb_path, "observations x features CSV with header")
        ->required();
    critbw->add_option("--feature", cb_feature, "feature id from the header")->required();
    critbw->add_option("-o,--out", cb_out, "write the JSON report here instead of stdout");
    critbw->add_option("--seed", cb_seed, "recorded in the manifest only");

    // tci
    auto* tci = app.add_subcommand("tci", "theoretical cluster-index values");
    std::vector<double> lambdas;
    double tci_a = 0.0, tci_eta = 0.5;
    std::string tci_out;
    tci->add_option("--lambdas", lambdas, "covariance eigenvalues")
        ->required()
        ->delimiter(',');
    tci->add_option("--a", tci_a, "mixture separation")->capture_default_str();
    tci->add_option("--eta", tci_eta, "mixture weight")->capture_default_str();
    tci->add_option("-o,--out", tci_out, "write the JSON report here instead of stdout");

    try {
        app.parse(argc, argv);
        if (test->parsed()) {
            return cmd_test(data_path, labels_path, dump_null, out_path, test_opts);
        }
        if (sim->parsed()) {
            return cmd_simulate(scenario, reps, scale_n, scale_p, sim_csv, sim_json,
                                sim_opts);
        }
        if (critbw->parsed()) return cmd_critbw(cb_path, cb_feature, cb_out, cb_seed);
        return cmd_tci(lambdas, tci_a, tci_eta, tci_out);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // --help / --version exit cleanly
    } catch (const unpci::DegenerateError& e) {
        std::cerr << "degenerate: " << e.what() << "\n";
        return 1;
    } catch (const unpci::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const unpci::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected: " << e.what() << "\n";
        return 3;
    }
}
