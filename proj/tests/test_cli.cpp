#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "facebo/directions.hpp"
#include "facebo/event_log.hpp"
#include "facebo/serialization.hpp"

using namespace facebo;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("facebo_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static inline int counter = 0;
};

struct Run {
    int code;
    std::string out;
};

Run cli(const fs::path& cwd, const std::string& args) {
    const fs::path log = cwd / "stdout.txt";
    const std::string cmd =
        "cd '" + cwd.string() + "' && '" FACEBO_CLI_PATH "' " + args + " > '" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

// column `name` of a CSV file, parsed as doubles
std::vector<double> column(const fs::path& csv, const std::string& name) {
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> header;
    std::stringstream hs(line);
    for (std::string h; std::getline(hs, h, ',');) header.push_back(h);
    const auto idx = static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
    REQUIRE(idx < header.size());
    std::vector<double> out;
    while (std::getline(in, line)) {
        std::stringstream ls(line);
        std::string cell;
        for (std::size_t i = 0; i <= idx; ++i) std::getline(ls, cell, ',');
        out.push_back(cell.empty() ? NAN : std::stod(cell));
    }
    return out;
}

double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
    TempDir d;
    CHECK(cli(d.path, "").code == 2);
    CHECK(cli(d.path, "frobnicate").code == 2);
    CHECK(cli(d.path, "simulate --bogus").code == 2);
    CHECK(cli(d.path, "simulate --mode annealing").code == 2);
    CHECK(cli(d.path, "simulate --peak 1,2,3").code == 2);
    CHECK(cli(d.path, "invert --steps 0").code == 2);
    CHECK(cli(d.path, "analyze").code == 2);
    CHECK(cli(d.path, "serve --port 99999").code == 2);
    CHECK(cli(d.path, "serve --default-kappa -1").code == 2);
    CHECK(cli(d.path, "--help").code == 0);
}

TEST_CASE("data errors exit with 3") {
    TempDir d;
    CHECK(cli(d.path, "simulate --peak 5,5").code == 3);
    CHECK(cli(d.path, "learn-directions --latents missing.json --labels missing.txt").code == 3);
    CHECK(cli(d.path, "analyze --in nowhere").code == 3);
}

TEST_CASE("simulate writes transcripts and a summary; bayesopt beats random search on the same seeds") {
    TempDir d;
    const auto bo = cli(d.path, "simulate --runs 10 --seed 3 --out bo");
    REQUIRE(bo.code == 0);
    REQUIRE(cli(d.path, "simulate --runs 10 --seed 3 --mode random_search --out rs").code == 0);
    CHECK(std::distance(fs::directory_iterator(d.path / "bo" / "sessions"), fs::directory_iterator{}) == 10);
    const auto seeds_bo = column(d.path / "bo" / "summary.csv", "seed");
    const auto seeds_rs = column(d.path / "rs" / "summary.csv", "seed");
    CHECK(seeds_bo == seeds_rs);
    CHECK(mean(column(d.path / "bo" / "summary.csv", "best_error")) <
          mean(column(d.path / "rs" / "summary.csv", "best_error")));
    CHECK(mean(column(d.path / "bo" / "summary.csv", "map_truth_r")) >
          mean(column(d.path / "rs" / "summary.csv", "map_truth_r")));

    // default peak is (-0.04, -0.06): transcripts replay and carry that responder's ratings
    for (const auto& e : fs::directory_iterator(d.path / "bo" / "sessions")) {
        const auto events = read_event_file(e.path());
        CHECK(events.size() == 52);
    }

    // deterministic under --seed
    REQUIRE(cli(d.path, "simulate --runs 10 --seed 3 --out bo2").code == 0);
    std::ifstream a(d.path / "bo" / "summary.csv"), b(d.path / "bo2" / "summary.csv");
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
}

TEST_CASE("noiseless continuous ratings land within one acquisition grid step") {
    TempDir d;
    {
        std::ofstream cfg(d.path / "cfg.json");
        cfg << R"({"rating_scale": {"integer": false}})";
    }
    REQUIRE(cli(d.path, "simulate --config cfg.json --noise 0 --peak 0,0 --width 1 --kappa 0.5 --runs 10 --out nz").code ==
            0);
    for (double e : column(d.path / "nz" / "summary.csv", "best_error")) CHECK(e <= 4.0 / 50.0);
}

TEST_CASE("analyze: cohort ordering, archetype clusters, single transcript") {
    TempDir d;
    const char* peaks[] = {"-1.2,-1.0", "1.1,1.2", "-1.0,1.3", "1.3,-1.1", "0,0", "0.2,-1.4"};
    for (int p = 0; p < 6; ++p) {
        REQUIRE(cli(d.path, std::string("simulate --runs 2 --peak ") + peaks[p] + " --seed " + std::to_string(100 + p) +
                                " --participant p" + std::to_string(p) + " --out cohort")
                    .code == 0);
    }
    REQUIRE(cli(d.path, "analyze --in cohort --out an").code == 0);
    CHECK(column(d.path / "an" / "summary.csv", "intra_mean")[0] >
          column(d.path / "an" / "summary.csv", "inter_mean")[0]);
    CHECK(fs::exists(d.path / "an" / "similarity.csv"));
    CHECK(read_json_file(d.path / "an" / "clusters.json")["assignments"].size() == 12);

    for (int i = 0; i < 3; ++i) {
        REQUIRE(cli(d.path, "simulate --runs 1 --peak -1.5,-1.5 --seed " + std::to_string(200 + i) + " --participant a" +
                                std::to_string(i) + " --out arch")
                    .code == 0);
        REQUIRE(cli(d.path, "simulate --runs 1 --peak 1.5,1.5 --seed " + std::to_string(300 + i) + " --participant b" +
                                std::to_string(i) + " --out arch")
                    .code == 0);
    }
    REQUIRE(cli(d.path, "analyze --in arch --k 2 --out an2").code == 0);
    CHECK(column(d.path / "an2" / "summary.csv", "silhouette")[0] > 0.3);

    fs::create_directories(d.path / "one");
    fs::copy(d.path / "cohort" / "sessions" / "p0-0000.jsonl", d.path / "one");
    CHECK(cli(d.path, "analyze --in one").code == 3);
}

TEST_CASE("analyze rejects mixed face spaces") {
    TempDir d;
    {
        std::ofstream cfg(d.path / "wide.json");
        cfg << R"({"space": {"dimensions": [{"name": "emotion", "lower": -3, "upper": 3},
                                            {"name": "age", "lower": -3, "upper": 3}]}})";
    }
    REQUIRE(cli(d.path, "simulate --runs 1 --out mixed").code == 0);
    REQUIRE(cli(d.path, "simulate --runs 1 --config wide.json --participant w --out mixed").code == 0);
    CHECK(cli(d.path, "analyze --in mixed").code == 3);
}

TEST_CASE("learn-directions recovers a planted direction") {
    TempDir d;
    const auto p = make_planted_dataset(500, 64, 21);
    write_latents(d.path / "z.bin", p.data.latents);
    write_labels(d.path / "y.txt", p.data.labels);
    write_latents(d.path / "ref.json", {LatentVector{p.planted}});
    const auto r = cli(d.path, "learn-directions --latents z.bin --labels y.txt --label smile --reference ref.json --out dir.json");
    REQUIRE(r.code == 0);
    std::smatch m;
    REQUIRE(std::regex_search(r.out, m, std::regex("cosine to reference: ([0-9.]+)")));
    CHECK(std::stod(m[1]) >= 0.95);
    const auto frag = read_json_file(d.path / "dir.json");
    CHECK(frag["name"] == "smile");
    CHECK(frag["direction"].size() == 64);
}

TEST_CASE("invert reports the reconstruction ratio with 500 steps by default") {
    TempDir d;
    const auto r = cli(d.path, "invert --gen-seed 4 --target-seed 9 --out inv.json");
    REQUIRE(r.code == 0);
    std::smatch m;
    REQUIRE(std::regex_search(r.out, m, std::regex("final/initial loss ratio: ([0-9.eE+-]+)")));
    CHECK(std::stod(m[1]) <= 1e-3);
    CHECK(r.out.find("steps 500") != std::string::npos);
    const auto j = read_json_file(d.path / "inv.json");
    CHECK(j["loss_trace"].size() == 500);
    CHECK(j["latent"].size() == 16);

    const auto g = ToyGenerator::random(4);
    write_json_file(d.path / "gen.json", to_json(g));
    write_latents(d.path / "target.json", {LatentVector{generate(g, g.sample_latent(9))}});
    const auto r2 = cli(d.path, "invert --generator gen.json --target target.json --steps 20");
    CHECK(r2.code == 0);
    CHECK(r2.out.find("steps 20") != std::string::npos);
}
