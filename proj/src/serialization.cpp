#include "facebo/serialization.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "facebo/error.hpp"

namespace facebo {

namespace fs = std::filesystem;

namespace {

template <typename T>
T get_field(const Json& j, const char* key, const T& fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(key, std::string("wrong type: ") + e.what());
    }
}

std::size_t get_count(const Json& j, const char* key, std::size_t fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
        throw ConfigError(key, "must be a non-negative integer");
    return v.get<std::size_t>();
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) throw InvalidArgument(field + ": expected a non-empty array of arrays");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& r = j[static_cast<std::size_t>(i)];
        if (!r.is_array() || static_cast<Eigen::Index>(r.size()) != cols)
            throw InvalidArgument(field + ": ragged rows");
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = r[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

std::string dims_header(const FaceSpace& space) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t i = 0; i < space.dim(); ++i) {
        if (i) os << ',';
        os << space[i].name << ':' << space[i].lower << ':' << space[i].upper;
    }
    return os.str();
}

}  // namespace

Json to_json(const Eigen::VectorXd& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd vector_from_json(const Json& j, const std::string& field) {
    if (!j.is_array()) throw InvalidArgument(field + ": expected an array of numbers");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw InvalidArgument(field + ": entry " + std::to_string(i) + " is not a number");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

Json to_json(const Point& p) { return to_json(p.coords); }

Point point_from_json(const Json& j, const std::string& field) { return Point(vector_from_json(j, field)); }

Json to_json(const FaceSpace& space) {
    Json dims = Json::array();
    for (const auto& d : space.dimensions()) {
        Json e{{"name", d.name}, {"lower", d.lower}, {"upper", d.upper}};
        if (d.direction) e["direction"] = to_json(d.direction->values);
        dims.push_back(std::move(e));
    }
    return Json{{"dimensions", std::move(dims)}};
}

FaceSpace face_space_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("dimensions") || !j.at("dimensions").is_array())
        throw ConfigError("space", "expected {\"dimensions\": [...]}");
    std::vector<Dimension> dims;
    for (const auto& e : j.at("dimensions")) {
        Dimension d;
        try {
            d.name = e.at("name").get<std::string>();
            d.lower = e.value("lower", -2.0);
            d.upper = e.value("upper", 2.0);
            if (e.contains("direction") && !e.at("direction").is_null()) {
                d.direction = DirectionCoefficients{vector_from_json(e.at("direction"), "direction"), d.name};
            }
        } catch (const Json::exception& ex) {
            throw ConfigError("space", std::string("bad dimension entry: ") + ex.what());
        }
        dims.push_back(std::move(d));
    }
    try {
        return FaceSpace(std::move(dims));
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& ex) {
        throw ConfigError("space", ex.what());
    }
}

Json dimension_fragment(const DirectionCoefficients& dir, double lower, double upper) {
    return Json{{"name", dir.label}, {"lower", lower}, {"upper", upper}, {"direction", to_json(dir.values)}};
}

Json to_json(const SessionConfig& cfg) {
    Json j{
        {"space", to_json(cfg.space)},
        {"burn_in", cfg.burn_in},
        {"total_iterations", cfg.total_iterations},
        {"mode", to_string(cfg.mode)},
        {"kappa", cfg.kappa},
        {"hyper",
         {{"lengthscale", cfg.hyper.lengthscale},
          {"signal_variance", cfg.hyper.signal_variance},
          {"noise_variance", cfg.hyper.noise_variance}}},
        {"refit_hyperparams", cfg.refit_hyperparams},
        {"seed", cfg.seed},
        {"rating_scale", {{"min", cfg.rating_scale.min}, {"max", cfg.rating_scale.max}, {"integer", cfg.rating_scale.integer}}},
        {"grid_resolution", cfg.grid_resolution},
        {"refine_steps", cfg.refine_steps},
        {"participant", cfg.participant},
        {"render_mode", to_string(cfg.render_mode)},
    };
    if (cfg.base_latent) j["base_latent"] = to_json(cfg.base_latent->values);
    return j;
}

SessionConfig session_config_from_json(const Json& j) {
    if (j.is_null()) return {};
    if (!j.is_object()) throw ConfigError("body", "session config must be a JSON object");
    SessionConfig c;
    if (j.contains("space") && !j.at("space").is_null()) c.space = face_space_from_json(j.at("space"));
    c.burn_in = get_count(j, "burn_in", c.burn_in);
    c.total_iterations = get_count(j, "total_iterations", c.total_iterations);
    if (j.contains("mode")) c.mode = parse_mode(get_field<std::string>(j, "mode", "bayesopt"));
    c.kappa = get_field<double>(j, "kappa", c.kappa);
    if (j.contains("hyper")) {
        const auto& h = j.at("hyper");
        if (!h.is_object()) throw ConfigError("hyper", "expected an object");
        c.hyper.lengthscale = get_field<double>(h, "lengthscale", c.hyper.lengthscale);
        c.hyper.signal_variance = get_field<double>(h, "signal_variance", c.hyper.signal_variance);
        c.hyper.noise_variance = get_field<double>(h, "noise_variance", c.hyper.noise_variance);
    }
    c.refit_hyperparams = get_field<bool>(j, "refit_hyperparams", c.refit_hyperparams);
    c.seed = get_field<Seed>(j, "seed", c.seed);
    if (j.contains("rating_scale")) {
        const auto& r = j.at("rating_scale");
        if (!r.is_object()) throw ConfigError("rating_scale", "expected an object");
        c.rating_scale.min = get_field<double>(r, "min", c.rating_scale.min);
        c.rating_scale.max = get_field<double>(r, "max", c.rating_scale.max);
        c.rating_scale.integer = get_field<bool>(r, "integer", c.rating_scale.integer);
    }
    c.grid_resolution = get_count(j, "grid_resolution", c.grid_resolution);
    c.refine_steps = get_count(j, "refine_steps", c.refine_steps);
    c.participant = get_field<std::string>(j, "participant", c.participant);
    if (j.contains("render_mode")) c.render_mode = parse_render_mode(get_field<std::string>(j, "render_mode", "parametric"));
    if (j.contains("base_latent") && !j.at("base_latent").is_null()) {
        try {
            c.base_latent = LatentVector{vector_from_json(j.at("base_latent"), "base_latent")};
        } catch (const InvalidArgument& e) {
            throw ConfigError("base_latent", e.what());
        }
    }
    c.validate();
    return c;
}

Json to_json(const Observation& o) {
    return Json{{"point", to_json(o.point)}, {"rating", o.rating}, {"iteration", o.iteration_index}, {"wall_time", o.wall_time}};
}

Observation observation_from_json(const Json& j) {
    return Observation{point_from_json(j.at("point")), j.at("rating").get<double>(), j.at("iteration").get<std::size_t>(),
                       j.at("wall_time").get<Timestamp>()};
}

Json to_json(const ResponseMap& map) {
    Json dims = Json::array();
    for (const auto& d : map.space.dimensions()) dims.push_back({{"name", d.name}, {"lower", d.lower}, {"upper", d.upper}});
    return Json{{"session_id", map.session_id},
                {"resolution", map.resolution},
                {"dimensions", std::move(dims)},
                {"units", "standardized"},
                {"values", map.values}};
}

Json to_json(const SimilarityMatrix& m) {
    auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
    return Json{{"labels", m.labels},
                {"values", matrix_to_json(m.values)},
                {"intra", {{"mean", num(m.intra_mean)}, {"sd", num(m.intra_sd)}, {"pairs", m.intra_pairs}}},
                {"inter", {{"mean", num(m.inter_mean)}, {"sd", num(m.inter_sd)}, {"pairs", m.inter_pairs}}}};
}

Json to_json(const ClusterResult& c) {
    Json j{{"assignments", c.assignments},
           {"centroids", c.centroids},
           {"inertia", c.inertia},
           {"seed", c.seed},
           {"silhouette", c.silhouette ? Json(*c.silhouette) : Json(nullptr)}};
    return j;
}

Json to_json(const ToyGenerator& g) {
    return Json{{"seed", g.seed},
                {"latent_dim", g.latent_dim()},
                {"hidden_dim", g.hidden_dim()},
                {"image_dim", g.image_dim()},
                {"weights_in", matrix_to_json(g.weights_in)},
                {"bias_in", to_json(g.bias_in)},
                {"weights_out", matrix_to_json(g.weights_out)},
                {"bias_out", to_json(g.bias_out)}};
}

ToyGenerator toy_generator_from_json(const Json& j) {
    ToyGenerator g;
    try {
        g.seed = j.value("seed", Seed{0});
        g.weights_in = matrix_from_json(j.at("weights_in"), "weights_in");
        g.bias_in = vector_from_json(j.at("bias_in"), "bias_in");
        g.weights_out = matrix_from_json(j.at("weights_out"), "weights_out");
        g.bias_out = vector_from_json(j.at("bias_out"), "bias_out");
    } catch (const Json::exception& e) {
        throw InvalidArgument(std::string("generator file: ") + e.what());
    }
    g.validate();
    return g;
}

void write_csv(std::ostream& os, const ResponseMap& map) {
    map.validate();
    os << "# dims=" << dims_header(map.space) << " resolution=" << map.resolution << " session=" << map.session_id
       << '\n';
    os << std::setprecision(17);
    const std::size_t r = map.resolution;
    for (std::size_t i = 0; i < map.values.size(); i += r) {
        for (std::size_t k = 0; k < r; ++k) {
            if (k) os << ',';
            os << map.values[i + k];
        }
        os << '\n';
    }
}

void write_csv(std::ostream& os, const SimilarityMatrix& m) {
    os << "label";
    for (const auto& l : m.labels) os << ',' << l;
    os << '\n' << std::setprecision(17);
    for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
        os << m.labels[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m.values.cols(); ++j) os << ',' << m.values(i, j);
        os << '\n';
    }
}

std::vector<LatentVector> read_latents(const fs::path& path) {
    std::vector<LatentVector> out;
    if (path.extension() == ".json") {
        const Json j = read_json_file(path);
        if (!j.is_array()) throw InvalidArgument(path.string() + ": expected an array of arrays");
        for (std::size_t i = 0; i < j.size(); ++i) {
            out.push_back(LatentVector{vector_from_json(j[i], path.string() + "[" + std::to_string(i) + "]")});
            if (out.back().size() != out.front().size())
                throw DimensionMismatch(path.string() + ": row " + std::to_string(i) + " differs in length");
        }
        return out;
    }
    static_assert(std::endian::native == std::endian::little, "binary latent files assume a little-endian host");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open " + path.string());
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t rows = 0, cols = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    in.read(reinterpret_cast<char*>(&rows), sizeof rows);
    in.read(reinterpret_cast<char*>(&cols), sizeof cols);
    if (!in || std::memcmp(magic, "FBLT", 4) != 0 || version != 1)
        throw InvalidArgument(path.string() + ": not a latent file (bad header)");
    for (std::uint64_t i = 0; i < rows; ++i) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(cols));
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(cols * sizeof(double)));
        if (!in) throw InvalidArgument(path.string() + ": truncated at row " + std::to_string(i));
        out.push_back(LatentVector{std::move(v)});
    }
    return out;
}

void write_latents(const fs::path& path, const std::vector<LatentVector>& latents) {
    if (path.extension() == ".json") {
        Json j = Json::array();
        for (const auto& l : latents) j.push_back(to_json(l.values));
        write_json_file(path, j);
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidArgument("cannot write " + path.string());
    const std::uint32_t version = 1;
    const std::uint64_t rows = latents.size();
    const std::uint64_t cols = latents.empty() ? 0 : latents.front().size();
    os.write("FBLT", 4);
    os.write(reinterpret_cast<const char*>(&version), sizeof version);
    os.write(reinterpret_cast<const char*>(&rows), sizeof rows);
    os.write(reinterpret_cast<const char*>(&cols), sizeof cols);
    for (const auto& l : latents) {
        if (l.size() != cols) throw DimensionMismatch("write_latents: latents differ in length");
        os.write(reinterpret_cast<const char*>(l.values.data()), static_cast<std::streamsize>(cols * sizeof(double)));
    }
}

std::vector<int> read_labels(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path.string());
    std::vector<int> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) continue;
        if (line != "0" && line != "1")
            throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": label must be 0 or 1");
        out.push_back(line == "1" ? 1 : 0);
    }
    return out;
}

void write_labels(const fs::path& path, const std::vector<int>& labels) {
    std::ofstream os(path);
    if (!os) throw InvalidArgument("cannot write " + path.string());
    for (int l : labels) os << l << '\n';
}

Json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw InvalidArgument(path.string() + ": " + e.what());
    }
}

void write_json_file(const fs::path& path, const Json& j) {
    std::ofstream os(path);
    if (!os) throw InvalidArgument("cannot write " + path.string());
    os << j.dump(2) << '\n';
}

}  // namespace facebo
