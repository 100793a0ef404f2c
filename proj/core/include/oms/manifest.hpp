#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "oms/memory_bank.hpp"
#include "oms/stream.hpp"

namespace oms {

/// JSON Lines manifest of one movie.
///
/// Line 1 (header):
///   {"movie_id": ..., "d": ..., "cast": [{"cast_id": ..., "face": [...]}, ...]}
/// Then one line per instance, in stream order:
///   {"instance_id": ..., "t": ..., "cast_id": "<id>" | null,
///    "face": [...] | null, "body": [...] | null, "audio": [...] | null}
/// "cast_id": null marks a distractor; omitting the key marks the instance
/// as unlabelled.
std::string write_manifest(const MovieStream& stream);
void save_manifest(const std::filesystem::path& path, const MovieStream& stream);

/// Parses and validates a manifest; vectors are normalized. Errors name the
/// source and line number.
MovieStream parse_manifest(std::string_view text, std::string_view source = "<manifest>");
MovieStream load_movie(const std::filesystem::path& path);

struct PortraitSet {
  std::string movie_id;
  std::size_t dim = 0;
  std::vector<CastPortrait> casts;
};

/// Reads only the header line of a manifest (or a header-only file).
PortraitSet load_portraits(const std::filesystem::path& path);

/// Every *.jsonl manifest in a directory, sorted by file name.
std::vector<std::filesystem::path> list_manifests(const std::filesystem::path& dir);
std::vector<MovieStream> load_movies(const std::filesystem::path& path_or_dir);

}  // namespace oms
