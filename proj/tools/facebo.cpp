// facebo command-line tool: serve, simulate, analyze, learn-directions, invert.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "facebo/analysis.hpp"
#include "facebo/directions.hpp"
#include "facebo/error.hpp"
#include "facebo/event_log.hpp"
#include "facebo/serialization.hpp"
#include "facebo/service.hpp"
#include "facebo/toy_generator.hpp"

#include <httplib.h>

namespace fs = std::filesystem;
using namespace facebo;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

httplib::Server* g_server = nullptr;

void handle_signal(int) {
    if (g_server) g_server->stop();
}

Point parse_point(const std::string& text, std::size_t dim) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("--peak: '" + text + "' is not a comma-separated list of numbers");
        }
    }
    if (v.size() != dim) throw UsageError("--peak needs " + std::to_string(dim) + " coordinates");
    return Point(Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory " + dir.string());
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << std::setprecision(17);
    return out;
}

// ---- serve ---------------------------------------------------------------

struct ServeArgs {
    std::string data_dir = "data";
    std::string host = "0.0.0.0";
    int port = 8080;
    double default_kappa = 2.5;
};

int run_serve(const ServeArgs& a) {
    Service service({a.data_dir, a.default_kappa});
    httplib::Server server;
    mount(server, service);
    g_server = &server;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    std::cout << "serving " << service.session_count() << " session(s) from " << a.data_dir << " on " << a.host << ":"
              << a.port << std::endl;
    if (!server.listen(a.host, a.port)) throw Error("cannot listen on " + a.host + ":" + std::to_string(a.port));
    return 0;
}

// ---- simulate ------------------------------------------------------------

struct SimulateArgs {
    std::string peak = "-0.04,-0.06";
    double width = 0.5;
    double noise = 0.5;
    double amplitude = 10.0;
    std::string mode = "bayesopt";
    double kappa = 2.5;
    Seed seed = 0;
    std::size_t runs = 1;
    std::size_t resolution = kDefaultMapResolution;
    std::string participant;
    std::string config;
    std::string out = "sim";
};

int run_simulate(const SimulateArgs& a) {
    SessionConfig base;
    if (!a.config.empty()) base = session_config_from_json(read_json_file(a.config));
    try {
        base.mode = parse_mode(a.mode);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    base.kappa = a.kappa;
    base.participant = a.participant;
    SimulatedResponder resp;
    resp.peak = parse_point(a.peak, base.space.dim());
    resp.width = a.width;
    resp.noise_sd = a.noise;
    resp.amplitude = a.amplitude;
    resp.validate(base.space);
    base.validate();
    if (a.runs == 0) throw UsageError("--runs must be positive");

    const fs::path out(a.out);
    ensure_dir(out / "sessions");
    EventLog log(out / "sessions");
    const ResponseMap truth = truth_map(resp, base.space, a.resolution);

    struct Row {
        std::string id;
        Seed seed;
        BestEstimate best;
        double error;
        double r;
    };
    std::vector<Row> rows(a.runs);
    std::vector<std::string> failures(a.runs);
    const std::string prefix = a.participant.empty() ? "run" : a.participant;
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < a.runs; ++i) {
        try {
            SessionConfig cfg = base;
            cfg.seed = derive_seed(a.seed, i);
            SimulatedResponder r = resp;
            r.seed = derive_seed(a.seed, 1'000'000 + i);
            std::ostringstream id;
            id << prefix << "-" << std::setw(4) << std::setfill('0') << i;
            const Session s = run_simulated(cfg, r, id.str());
            log.write_all(s.id(), transcript(s));
            const auto best = best_estimate(s);
            rows[i] = Row{s.id(), cfg.seed, best, distance(best.point, resp.peak),
                          pearson(response_map(s, a.resolution), truth)};
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    }
    for (const auto& f : failures)
        if (!f.empty()) throw Error(f);

    auto csv = open_out(out / "summary.csv");
    csv << "run,session_id,seed,mode";
    for (const auto& d : base.space.dimensions()) csv << ",best_" << d.name;
    csv << ",best_posterior_mean,best_iteration,best_error,map_truth_r\n";
    double err = 0.0, r = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        csv << i << ',' << row.id << ',' << row.seed << ',' << a.mode;
        for (Eigen::Index d = 0; d < row.best.point.coords.size(); ++d) csv << ',' << row.best.point.coords(d);
        csv << ',' << row.best.posterior_mean << ',' << row.best.iteration << ',' << row.error << ',' << row.r << '\n';
        err += row.error;
        r += row.r;
    }
    std::cout << a.runs << " run(s), mode " << a.mode << ": mean best_error " << err / static_cast<double>(a.runs)
              << ", mean map_truth_r " << r / static_cast<double>(a.runs) << "\n";
    return 0;
}

// ---- analyze -------------------------------------------------------------

struct AnalyzeArgs {
    std::string in;
    std::size_t resolution = kDefaultMapResolution;
    std::size_t k = 2;
    Seed seed = 0;
    std::size_t restarts = 32;
    std::string out = "analysis";
};

int run_analyze(const AnalyzeArgs& a) {
    fs::path dir(a.in);
    if (fs::is_directory(dir / "sessions")) dir /= "sessions";
    if (!fs::is_directory(dir)) throw Error("--in: " + a.in + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.size() < 2) throw Error("analyze needs at least two transcripts, found " + std::to_string(files.size()));

    std::vector<ResponseMap> maps;
    std::vector<std::string> groups;
    for (const auto& f : files) {
        const Session s = replay(read_event_file(f));
        if (!maps.empty() && !s.config().space.same_geometry(maps.front().space))
            throw Error("transcripts use different face spaces: " + f.filename().string());
        maps.push_back(response_map(s, a.resolution));
        groups.push_back(s.config().participant.empty() ? s.id() : s.config().participant);
    }
    if (a.k == 0 || a.k > maps.size()) throw UsageError("--k must be between 1 and the number of transcripts");

    const auto sim = similarity_matrix(maps, groups);
    const auto clusters = kmeans(maps, a.k, a.seed, a.restarts);

    const fs::path out(a.out);
    ensure_dir(out);
    {
        auto f = open_out(out / "similarity.csv");
        write_csv(f, sim);
    }
    write_json_file(out / "similarity.json", to_json(sim));
    Json cj = to_json(clusters);
    cj["labels"] = sim.labels;
    cj["groups"] = groups;
    write_json_file(out / "clusters.json", cj);

    auto csv = open_out(out / "summary.csv");
    auto num = [](double v) {
        if (!std::isfinite(v)) return std::string();
        std::ostringstream os;
        os << std::setprecision(17) << v;
        return os.str();
    };
    csv << "maps,resolution,intra_mean,intra_sd,intra_pairs,inter_mean,inter_sd,inter_pairs,k,inertia,silhouette\n";
    csv << maps.size() << ',' << a.resolution << ',' << num(sim.intra_mean) << ',' << num(sim.intra_sd) << ','
        << sim.intra_pairs << ',' << num(sim.inter_mean) << ',' << num(sim.inter_sd) << ',' << sim.inter_pairs << ','
        << a.k << ',' << clusters.inertia << ',' << (clusters.silhouette ? num(*clusters.silhouette) : "") << '\n';

    std::cout << maps.size() << " maps; intra mean " << num(sim.intra_mean) << ", inter mean " << num(sim.inter_mean)
              << "; k=" << a.k << " silhouette " << (clusters.silhouette ? num(*clusters.silhouette) : "n/a") << "\n";
    return 0;
}

// ---- learn-directions ----------------------------------------------------

struct LearnArgs {
    std::string latents;
    std::string labels;
    std::string label = "direction";
    double l2 = 1e-3;
    std::size_t max_iters = 2000;
    std::string reference;
    double lower = -2.0;
    double upper = 2.0;
    std::string out;
};

int run_learn(const LearnArgs& a) {
    LabeledLatents data{read_latents(a.latents), read_labels(a.labels)};
    LogisticFitConfig cfg;
    cfg.l2_penalty = a.l2;
    cfg.max_iters = a.max_iters;
    auto fit = fit_logistic(data, cfg);
    fit.direction.label = a.label;
    std::cout << "fitted '" << a.label << "' from " << data.latents.size() << " latents: " << fit.iterations
              << " iterations, final loss " << fit.loss_trace.back() << ", gradient norm " << fit.gradient_norm
              << (fit.converged ? "" : " (not converged)") << "\n";
    if (!a.reference.empty()) {
        const auto ref = read_latents(a.reference);
        if (ref.size() != 1) throw Error("--reference must hold exactly one vector");
        std::cout << "cosine to reference: " << std::setprecision(6) << cosine_similarity(fit.direction.values, ref[0].values)
                  << "\n";
    }
    if (!a.out.empty()) {
        Json j = dimension_fragment(fit.direction, a.lower, a.upper);
        j["bias"] = fit.bias;
        write_json_file(a.out, j);
    }
    return 0;
}

// ---- invert --------------------------------------------------------------

struct InvertArgs {
    std::string generator;
    Seed gen_seed = 0;
    std::string target;
    Seed target_seed = 1;
    Seed map_seed = 2;
    std::size_t steps = 500;
    double learning_rate = 0.5;
    std::string init = "zeros";
    Seed init_seed = 0;
    std::string out;
};

int run_invert(const InvertArgs& a) {
    const ToyGenerator gen =
        a.generator.empty() ? ToyGenerator::random(a.gen_seed) : toy_generator_from_json(read_json_file(a.generator));
    const PerceptualMap f = PerceptualMap::random(a.map_seed, gen.image_dim());
    ImageVector target;
    if (!a.target.empty()) {
        const auto t = read_latents(a.target);
        if (t.size() != 1) throw Error("--target must hold exactly one image vector");
        target = t[0].values;
    } else {
        target = generate(gen, gen.sample_latent(a.target_seed));
    }
    InversionConfig cfg;
    cfg.steps = a.steps;
    cfg.learning_rate = a.learning_rate;
    if (a.init == "zeros") {
        cfg.init = InversionInit::zeros;
    } else if (a.init == "random") {
        cfg.init = InversionInit::seeded_random;
    } else {
        throw UsageError("--init must be 'zeros' or 'random'");
    }
    cfg.init_seed = a.init_seed;
    const auto r = invert(gen, f, target, cfg);
    const double ratio = r.initial_loss > 0.0 ? r.loss_trace.back() / r.initial_loss : 0.0;
    std::cout << "steps " << cfg.steps << ", initial loss " << r.initial_loss << ", final loss " << r.loss_trace.back()
              << "\nfinal/initial loss ratio: " << std::scientific << std::setprecision(3) << ratio << "\n";
    if (!a.out.empty()) {
        write_json_file(a.out, Json{{"latent", to_json(r.latent.values)},
                                    {"initial_loss", r.initial_loss},
                                    {"loss_trace", r.loss_trace},
                                    {"ratio", ratio}});
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Human-in-the-loop Bayesian optimization of face spaces"};
    app.require_subcommand(1);

    ServeArgs serve;
    auto* s = app.add_subcommand("serve", "Run the HTTP service");
    s->add_option("--data-dir", serve.data_dir, "Event-log directory")->capture_default_str();
    s->add_option("--host", serve.host)->capture_default_str();
    s->add_option("--port", serve.port)->capture_default_str()->check(CLI::Range(0, 65535));
    s->add_option("--default-kappa", serve.default_kappa, "UCB kappa for sessions that do not set one")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);

    SimulateArgs sim;
    auto* m = app.add_subcommand("simulate", "Run seeded sessions against a simulated responder");
    m->add_option("--peak", sim.peak, "Responder peak, comma separated")->capture_default_str();
    m->add_option("--width", sim.width)->capture_default_str();
    m->add_option("--noise", sim.noise, "Rating noise sd")->capture_default_str();
    m->add_option("--amplitude", sim.amplitude)->capture_default_str();
    m->add_option("--mode", sim.mode, "bayesopt | random_search")->capture_default_str();
    m->add_option("--kappa", sim.kappa)->capture_default_str();
    m->add_option("--seed", sim.seed)->capture_default_str();
    m->add_option("--runs", sim.runs)->capture_default_str();
    m->add_option("--resolution", sim.resolution, "Map resolution for the truth correlation")->capture_default_str();
    m->add_option("--participant", sim.participant, "Participant label stored in each session");
    m->add_option("--config", sim.config, "SessionConfig JSON used as the base");
    m->add_option("--out", sim.out)->capture_default_str();

    AnalyzeArgs an;
    auto* z = app.add_subcommand("analyze", "Similarity matrix and clustering over transcripts");
    z->add_option("--in", an.in, "Directory of .jsonl transcripts")->required();
    z->add_option("--resolution", an.resolution)->capture_default_str();
    z->add_option("--k", an.k)->capture_default_str();
    z->add_option("--seed", an.seed)->capture_default_str();
    z->add_option("--restarts", an.restarts)->capture_default_str();
    z->add_option("--out", an.out)->capture_default_str();

    LearnArgs le;
    auto* l = app.add_subcommand("learn-directions", "Fit a semantic direction by logistic regression");
    l->add_option("--latents", le.latents, "Latents (.json array of arrays, or FBLT binary)")->required();
    l->add_option("--labels", le.labels, "0/1 labels, one per line")->required();
    l->add_option("--label", le.label, "Dimension name")->capture_default_str();
    l->add_option("--l2", le.l2)->capture_default_str();
    l->add_option("--max-iters", le.max_iters)->capture_default_str();
    l->add_option("--reference", le.reference, "Known direction to report the cosine against");
    l->add_option("--lower", le.lower)->capture_default_str();
    l->add_option("--upper", le.upper)->capture_default_str();
    l->add_option("--out", le.out, "Write a face-space dimension entry");

    InvertArgs iv;
    auto* v = app.add_subcommand("invert", "Recover a latent for a target image");
    v->add_option("--generator", iv.generator, "Generator JSON (default: random from --gen-seed)");
    v->add_option("--gen-seed", iv.gen_seed)->capture_default_str();
    v->add_option("--target", iv.target, "Target image file (default: generate from --target-seed)");
    v->add_option("--target-seed", iv.target_seed)->capture_default_str();
    v->add_option("--map-seed", iv.map_seed)->capture_default_str();
    v->add_option("--steps", iv.steps)->capture_default_str()->check(CLI::PositiveNumber);
    v->add_option("--lr", iv.learning_rate)->capture_default_str();
    v->add_option("--init", iv.init, "zeros | random")->capture_default_str();
    v->add_option("--init-seed", iv.init_seed)->capture_default_str();
    v->add_option("--out", iv.out, "Write the latent and loss trace as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*s) return run_serve(serve);
        if (*m) return run_simulate(sim);
        if (*z) return run_analyze(an);
        if (*l) return run_learn(le);
        if (*v) return run_invert(iv);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
