#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "facebo/analysis.hpp"
#include "facebo/directions.hpp"
#include "facebo/face_space.hpp"
#include "facebo/session.hpp"
#include "facebo/toy_generator.hpp"

namespace facebo {

using Json = nlohmann::json;

Json to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j, const std::string& field = "vector");

Json to_json(const Point& p);
Point point_from_json(const Json& j, const std::string& field = "point");

/// {"dimensions":[{"name","lower","upper","direction":[...]?}]}
Json to_json(const FaceSpace& space);
FaceSpace face_space_from_json(const Json& j);

/// One "dimensions" entry; how learned directions are exported.
Json dimension_fragment(const DirectionCoefficients& dir, double lower = -2.0, double upper = 2.0);

/// Every field is optional on input; missing ones take the defaults.
/// Invalid values raise ConfigError naming the field.
Json to_json(const SessionConfig& cfg);
SessionConfig session_config_from_json(const Json& j);

Json to_json(const Observation& o);
Observation observation_from_json(const Json& j);

Json to_json(const ResponseMap& map);
Json to_json(const SimilarityMatrix& m);
Json to_json(const ClusterResult& c);

Json to_json(const ToyGenerator& g);
ToyGenerator toy_generator_from_json(const Json& j);

/// Row-major grid. First line: "# dims=<name>:<lo>:<hi>,... resolution=<R> session=<id>";
/// then one CSV row per combination of all but the last dimension, with
/// <R> values along the last dimension.
void write_csv(std::ostream& os, const ResponseMap& map);
void write_csv(std::ostream& os, const SimilarityMatrix& m);

/// Latent matrices: a JSON array of arrays, or the binary layout
///   "FBLT" | u32 version=1 | u64 rows | u64 cols | rows*cols f64, little-endian.
/// The format is picked by extension (".json" vs anything else).
std::vector<LatentVector> read_latents(const std::filesystem::path& path);
void write_latents(const std::filesystem::path& path, const std::vector<LatentVector>& latents);

/// Newline-separated 0/1 labels; blank lines ignored.
std::vector<int> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const std::vector<int>& labels);

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace facebo
