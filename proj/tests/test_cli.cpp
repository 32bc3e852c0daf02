#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

std::string cli_path() {
    const char* p = std::getenv("UNPCI_CLI_PATH");
    if (p == nullptr || *p == '\0') {
        FAIL("UNPCI_CLI_PATH is not set; run through ctest or export it manually");
    }
    return p;
}

struct RunResult {
    int code = -1;
    std::string out;
};

RunResult run(const std::string& args, const std::string& env_prefix = "") {
    const std::string cmd =
        env_prefix + "'" + cli_path() + "' " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult res;
    char buf[4096];
    std::size_t got = 0;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) res.out.append(buf, got);
    const int status = pclose(pipe);
    res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

fs::path work_dir() {
    const fs::path dir = fs::temp_directory_path() / "unpci_cli_tests";
    fs::create_directories(dir);
    return dir;
}

std::string write_file(const std::string& name, const std::string& body) {
    const fs::path p = work_dir() / name;
    std::ofstream out(p);
    REQUIRE(out.good());
    out << body;
    out.close();
    return p.string();
}

std::string blob_csv() {
    std::mt19937_64 eng(1337);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::string body = "f1,f2,f3\n";
    char line[160];
    for (int i = 0; i < 60; ++i) {
        const double base = i < 30 ? 0.0 : 12.0;
        std::snprintf(line, sizeof line, "%.6f,%.6f,%.6f\n", base + gauss(eng),
                      base + gauss(eng), base + gauss(eng));
        body += line;
    }
    return write_file("blobs.csv", body);
}

std::string null_csv() {
    std::mt19937_64 eng(2024);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::string body = "f1,f2,f3\n";
    char line[160];
    for (int i = 0; i < 50; ++i) {
        std::snprintf(line, sizeof line, "%.6f,%.6f,%.6f\n", gauss(eng), gauss(eng),
                      gauss(eng));
        body += line;
    }
    return write_file("null.csv", body);
}

// Numeric value following "key": in a JSON dump; NaN when absent.
double jget(const std::string& text, const std::string& key) {
    const std::string needle = "\"" + key + "\":";
    const std::size_t pos = text.find(needle);
    if (pos == std::string::npos) return std::nan("");
    return std::strtod(text.c_str() + pos + needle.size(), nullptr);
}

std::size_t count_lines(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        if (!line.empty()) ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("version and help exit cleanly") {
    REQUIRE(run("--version").code == 0);
    REQUIRE(run("--version").out.find("1.0.0") != std::string::npos);
    const RunResult help = run("--help");
    REQUIRE(help.code == 0);
    REQUIRE(help.out.find("test") != std::string::npos);
    REQUIRE(help.out.find("simulate") != std::string::npos);
}

TEST_CASE("test subcommand reports defaults in the manifest") {
    const RunResult r = run("test '" + null_csv() + "' --b 40 --seed 5");
    REQUIRE(r.code == 0);
    REQUIRE(r.out.find("\"subcommand\": \"test\"") != std::string::npos);
    REQUIRE(r.out.find("\"version\": \"1.0.0\"") != std::string::npos);
    REQUIRE(r.out.find("\"input_digest\": \"") != std::string::npos);
    REQUIRE(r.out.find("\"b\": 40") != std::string::npos);
    REQUIRE(r.out.find("\"method\": \"kmeans\"") != std::string::npos);
    REQUIRE(jget(r.out, "seed") == 5.0);

    // with no --b the default of 1000 replicates lands in the manifest
    const RunResult defaults = run("test '" + null_csv() + "' --seed 5");
    REQUIRE(defaults.code == 0);
    REQUIRE(defaults.out.find("\"b\": 1000") != std::string::npos);
}

TEST_CASE("separated blobs yield an exactly integral zero p-value") {
    const RunResult r = run("test '" + blob_csv() + "' --b 50 --seed 7 --add-one");
    REQUIRE(r.code == 0);
    REQUIRE(r.out.find("\"p_perm\": 0,") != std::string::npos);
    REQUIRE(jget(r.out, "p_add_one") == Catch::Approx(1.0 / 51.0).epsilon(1e-9));
    REQUIRE(jget(r.out, "z") < -3.0);
    REQUIRE(jget(r.out, "n_selected") == 3.0);
    REQUIRE(r.out.find("\"cov_method\": \"sample\"") != std::string::npos);
}

TEST_CASE("identical invocations produce byte-identical reports") {
    const std::string args = "test '" + null_csv() + "' --b 60 --seed 11";
    const RunResult a = run(args);
    const RunResult b = run(args);
    REQUIRE(a.code == 0);
    REQUIRE(a.out == b.out);

    const RunResult t1 = run(args, "UNPCI_THREADS=1 ");
    const RunResult t3 = run(args, "UNPCI_THREADS=3 ");
    REQUIRE(t1.code == 0);
    REQUIRE(t1.out == t3.out);
}

TEST_CASE("the input digest pins the bytes that were read") {
    std::mt19937_64 eng(3);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::string body = "f1,f2\n";
    char line[80];
    for (int i = 0; i < 20; ++i) {
        std::snprintf(line, sizeof line, "%.6f,%.6f\n", gauss(eng), gauss(eng));
        body += line;
    }
    const std::string p1 = write_file("digest_a.csv", body);
    std::string tweaked = body;
    tweaked[tweaked.size() - 2] = tweaked[tweaked.size() - 2] == '5' ? '6' : '5';
    const std::string p2 = write_file("digest_b.csv", tweaked);

    const RunResult a = run("test '" + p1 + "' --b 20 --seed 1");
    const RunResult b = run("test '" + p2 + "' --b 20 --seed 1");
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    const auto digest = [](const std::string& out) {
        const std::size_t pos = out.find("\"input_digest\": \"");
        REQUIRE(pos != std::string::npos);
        return out.substr(pos + 17, 16);
    };
    REQUIRE(digest(a.out) != digest(b.out));
}

TEST_CASE("dump-null writes one row per replicate") {
    const fs::path dump = work_dir() / "null_cis.csv";
    const RunResult r = run("test '" + null_csv() + "' --b 7 --seed 2 --dump-null '" +
                            dump.string() + "'");
    REQUIRE(r.code == 0);
    REQUIRE(count_lines(dump.string()) == 8);  // header + 7 indices
    std::ifstream in(dump);
    std::string first;
    std::getline(in, first);
    REQUIRE(first == "ci_b");
}

TEST_CASE("external labels flow through and are pinned by a digest") {
    std::string labels = "label\n";
    for (int i = 0; i < 60; ++i) labels += (i < 30 ? "1\n" : "2\n");
    const std::string lp = write_file("labels.csv", labels);
    const RunResult r = run("test '" + blob_csv() + "' --labels '" + lp +
                            "' --method ward --b 30 --seed 4");
    REQUIRE(r.code == 0);
    REQUIRE(r.out.find("\"labels_digest\": \"") != std::string::npos);
    REQUIRE(r.out.find("\"method\": \"ward\"") != std::string::npos);
    REQUIRE(r.out.find("\"p_perm\": 0,") != std::string::npos);
    REQUIRE(r.out.find("\"singleton_clustering\": false") != std::string::npos);
}

TEST_CASE("exit codes separate usage, degeneracy, and io failures") {
    // usage errors
    REQUIRE(run("test '" + null_csv() + "' --b 0").code == 2);
    REQUIRE(run("test '" + null_csv() + "' --bogus-flag").code == 2);
    REQUIRE(run("test '" + null_csv() + "' --method fuzzy").code == 2);
    REQUIRE(run("test").code == 2);
    REQUIRE(run("simulate --scenario no_such_generator --b 10").code == 2);
    REQUIRE(run("").code == 2);  // a subcommand is required

    // statistical degeneracy
    std::string constant = "f1,f2\n";
    for (int i = 0; i < 10; ++i) constant += std::to_string(i) + ",4.25\n";
    const std::string cp = write_file("constant.csv", constant);
    REQUIRE(run("test '" + cp + "' --b 10").code == 1);

    // io failures
    REQUIRE(run("test /no/such/file.csv --b 10").code == 3);
    REQUIRE(run("test '" + null_csv() +
                "' --b 10 -o /no/such/dir/report.json").code == 3);
}

TEST_CASE("simulate emits a per-rep table and a summary") {
    const fs::path csv = work_dir() / "sim.csv";
    const fs::path js = work_dir() / "sim.json";
    const RunResult r = run(
        "simulate --scenario null_normal --scale-n 60 --scale-p 4 --reps 2 "
        "--b 50 --seed 3 --out-csv '" +
        csv.string() + "' -o '" + js.string() + "'");
    REQUIRE(r.code == 0);
    REQUIRE(count_lines(csv.string()) == 3);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    REQUIRE(header == "rep,p_perm,significant");

    std::ifstream jin(js);
    std::string summary((std::istreambuf_iterator<char>(jin)),
                        std::istreambuf_iterator<char>());
    REQUIRE(summary.find("\"scenario\": \"null_normal\"") != std::string::npos);
    REQUIRE(jget(summary, "reps") == 2.0);
    REQUIRE(summary.find("\"subcommand\": \"simulate\"") != std::string::npos);
}

TEST_CASE("tci reports the published closed-form values") {
    const RunResult r = run("tci --lambdas 1,1 --a 2 --eta 0.5");
    REQUIRE(r.code == 0);
    REQUIRE(r.out.find("0.681690113816") != std::string::npos);
    REQUIRE(r.out.find("0.340845056908") != std::string::npos);
    REQUIRE(jget(r.out, "tci_gauss") == Catch::Approx(1.0 - 1.0 / 3.14159265358979)
                                            .epsilon(1e-9));
    REQUIRE(run("tci --a 2").code == 2);  // lambdas are required
}

TEST_CASE("critbw recovers the two-point critical bandwidth") {
    const std::string p = write_file("twopoint.csv", "f1\n-1\n1\n");
    const RunResult r = run("critbw '" + p + "' --feature f1");
    REQUIRE(r.code == 0);
    REQUIRE(jget(r.out, "h1") == Catch::Approx(1.0).margin(2e-3));
    REQUIRE(std::abs(jget(r.out, "mode_location")) < 0.02);
    REQUIRE(jget(r.out, "search_tolerance") > 0.0);
    REQUIRE(run("critbw '" + p + "' --feature nope").code == 2);
}
