#include "oms/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "oms/error.hpp"

namespace oms {

using nlohmann::json;

namespace {

json vector_or_null(const MultiModalFeature& f, Modality m) {
  if (!f.has(m)) return nullptr;
  const auto v = f.values(m);
  return json(std::vector<double>(v.begin(), v.end()));
}

[[noreturn]] void fail(std::string_view source, std::size_t line, const std::string& what) {
  throw ParseError(std::string(source) + ":" + std::to_string(line) + ": " + what);
}

std::optional<std::vector<double>> read_vector(const json& obj, const char* key,
                                               std::size_t dim, std::string_view source,
                                               std::size_t line) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  const json& arr = obj[key];
  if (!arr.is_array()) fail(source, line, std::string(key) + " must be an array or null");
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& x : arr) {
    if (!x.is_number()) fail(source, line, std::string(key) + " holds a non-numeric value");
    out.push_back(x.get<double>());
  }
  if (out.size() != dim) {
    fail(source, line,
         std::string(key) + " vector has length " + std::to_string(out.size()) + ", expected " +
             std::to_string(dim));
  }
  return out;
}

PortraitSet parse_header(const std::string& text, std::string_view source) {
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    fail(source, 1, std::string("malformed JSON: ") + e.what());
  }
  if (!header.is_object()) fail(source, 1, "header must be a JSON object");
  PortraitSet set;
  try {
    set.movie_id = header.at("movie_id").get<std::string>();
    const auto d = header.at("d").get<long long>();
    if (d <= 0) fail(source, 1, "d must be positive");
    set.dim = static_cast<std::size_t>(d);
    const json& cast = header.at("cast");
    if (!cast.is_array() || cast.empty()) fail(source, 1, "cast must be a non-empty array");
    std::unordered_set<std::string> ids;
    for (const auto& entry : cast) {
      const auto id = entry.at("cast_id").get<std::string>();
      if (!ids.insert(id).second) fail(source, 1, "duplicate cast id \"" + id + "\"");
      auto face = read_vector(entry, "face", set.dim, source, 1);
      if (!face) fail(source, 1, "portrait requires face feature (cast \"" + id + "\")");
      MultiModalFeature f(set.dim);
      f.set(Modality::kFace, std::move(*face));
      try {
        f = normalize_feature(std::move(f));
      } catch (const InvalidInput& e) {
        fail(source, 1, "cast \"" + id + "\": " + e.what());
      }
      set.casts.push_back(CastPortrait{id, std::move(f)});
    }
  } catch (const json::exception& e) {
    fail(source, 1, std::string("malformed header: ") + e.what());
  }
  return set;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

std::string write_manifest(const MovieStream& stream) {
  std::string out;
  json header;
  header["movie_id"] = stream.movie_id;
  header["d"] = stream.dim;
  json cast = json::array();
  for (const auto& c : stream.casts) {
    json entry;
    entry["cast_id"] = c.cast_id;
    entry["face"] = vector_or_null(c.feature, Modality::kFace);
    cast.push_back(std::move(entry));
  }
  header["cast"] = std::move(cast);
  out += header.dump();
  out += '\n';
  for (const auto& inst : stream.instances) {
    json line;
    line["instance_id"] = inst.id;
    line["t"] = inst.t;
    switch (inst.truth.kind) {
      case GroundTruth::Kind::kCast:
        line["cast_id"] = stream.casts.at(inst.truth.cast).cast_id;
        break;
      case GroundTruth::Kind::kOther:
        line["cast_id"] = nullptr;
        break;
      case GroundTruth::Kind::kUnlabeled:
        break;
    }
    line["face"] = vector_or_null(inst.feature, Modality::kFace);
    line["body"] = vector_or_null(inst.feature, Modality::kBody);
    line["audio"] = vector_or_null(inst.feature, Modality::kAudio);
    out += line.dump();
    out += '\n';
  }
  return out;
}

void save_manifest(const std::filesystem::path& path, const MovieStream& stream) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << write_manifest(stream);
}

MovieStream parse_manifest(std::string_view text, std::string_view source) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  // Header is the first non-empty line.
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty()) break;
  }
  if (line.empty()) throw ParseError(std::string(source) + ": empty manifest");
  if (line_no != 1) fail(source, line_no, "header must be the first line");

  PortraitSet header = parse_header(line, source);
  MovieStream stream;
  stream.movie_id = std::move(header.movie_id);
  stream.dim = header.dim;
  stream.casts = std::move(header.casts);

  std::unordered_set<std::string> ids;
  bool have_t = false;
  std::int64_t last_t = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      fail(source, line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) fail(source, line_no, "instance record must be a JSON object");
    Instance inst;
    try {
      inst.id = obj.at("instance_id").get<std::string>();
      inst.t = obj.at("t").get<std::int64_t>();
      if (obj.contains("cast_id")) {
        if (obj["cast_id"].is_null()) {
          inst.truth = GroundTruth::other();
        } else {
          const auto cast_id = obj["cast_id"].get<std::string>();
          const auto it = std::find_if(stream.casts.begin(), stream.casts.end(),
                                       [&](const CastPortrait& c) { return c.cast_id == cast_id; });
          if (it == stream.casts.end()) fail(source, line_no, "unknown cast id \"" + cast_id + "\"");
          inst.truth = GroundTruth::of(static_cast<std::size_t>(it - stream.casts.begin()));
        }
      }
    } catch (const json::exception& e) {
      fail(source, line_no, std::string("malformed instance record: ") + e.what());
    }
    if (!ids.insert(inst.id).second) fail(source, line_no, "duplicate instance id \"" + inst.id + "\"");
    if (have_t && inst.t <= last_t) fail(source, line_no, "t must strictly increase");
    have_t = true;
    last_t = inst.t;

    inst.feature = MultiModalFeature(stream.dim);
    for (Modality m : kModalities) {
      const std::string key(modality_name(m));
      auto v = read_vector(obj, key.c_str(), stream.dim, source, line_no);
      if (v) inst.feature.set(m, std::move(*v));
    }
    try {
      inst.feature = normalize_feature(std::move(inst.feature));
    } catch (const InvalidInput& e) {
      fail(source, line_no, e.what());
    }
    stream.instances.push_back(std::move(inst));
  }
  return stream;
}

MovieStream load_movie(const std::filesystem::path& path) {
  return parse_manifest(read_file(path), path.string());
}

PortraitSet load_portraits(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.empty()) {
    throw ParseError(path.string() + ":1: missing header line");
  }
  return parse_header(line, path.string());
}

std::vector<std::filesystem::path> list_manifests(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<MovieStream> load_movies(const std::filesystem::path& path_or_dir) {
  std::vector<MovieStream> movies;
  if (std::filesystem::is_directory(path_or_dir)) {
    for (const auto& p : list_manifests(path_or_dir)) movies.push_back(load_movie(p));
    if (movies.empty()) throw Error("no .jsonl manifests in " + path_or_dir.string());
  } else {
    movies.push_back(load_movie(path_or_dir));
  }
  return movies;
}

}  // namespace oms
