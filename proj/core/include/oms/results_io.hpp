#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "oms/engine.hpp"
#include "oms/evalkit.hpp"
#include "oms/memory_bank.hpp"

namespace oms {

// Per-movie output files written by `oms run`:
//   <movie>.rankings.csv  movie_id,cast_id,rank,instance_id,score
//   <movie>.trace.jsonl   header object, one object per step, flush object
//   <movie>.cache.csv     t,total_size,current_size
//   <movie>.memory.json   final memory snapshot (engine runs only)
// plus run.json with the method label and movie list.

std::string rankings_csv(const MovieResult& result);
std::string trace_jsonl(const MovieResult& result);
std::string cache_csv(const MovieResult& result);
/// {"movie_id", "d", "mu", "casts": [{"cast_id", "face": {"filled", "vector"}, ...}]}
std::string memory_snapshot_json(const std::string& movie_id, const MemoryBank& bank);

void write_movie_result(const std::filesystem::path& dir, const MovieResult& result);
void write_run_manifest(const std::filesystem::path& dir, const std::vector<MovieResult>& results);

/// Rebuilds a result from its rankings, trace and cache files. The final
/// memory snapshot is not read back.
MovieResult read_movie_result(const std::filesystem::path& dir, const std::string& movie_id);
std::vector<MovieResult> read_run(const std::filesystem::path& dir);

std::string eval_report_json(const EvalReport& report);
/// movie_id,k,index,t,recall
std::string recall_curves_csv(const EvalReport& report);

/// The fields of a saved report that `oms report` collates.
struct ReportSummary {
  std::string method;
  bool online = true;
  std::optional<double> mean_map;
  double mean_cache_size = 0.0;
  std::size_t movies = 0;
};
ReportSummary read_report_summary(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace oms
