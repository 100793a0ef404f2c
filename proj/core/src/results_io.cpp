#include "oms/results_io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "oms/error.hpp"

namespace oms {

using nlohmann::json;
namespace fs = std::filesystem;

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

namespace {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json truth_json(const GroundTruth& truth, const std::vector<std::string>& cast_ids) {
  switch (truth.kind) {
    case GroundTruth::Kind::kCast:
      return cast_ids.at(truth.cast);
    case GroundTruth::Kind::kOther:
      return nullptr;
    case GroundTruth::Kind::kUnlabeled:
      return "?";
  }
  return "?";
}

GroundTruth truth_from_json(const json& j, const std::vector<std::string>& cast_ids) {
  if (j.is_null()) return GroundTruth::other();
  const auto id = j.get<std::string>();
  if (id == "?") return GroundTruth::unlabeled();
  for (std::size_t k = 0; k < cast_ids.size(); ++k) {
    if (cast_ids[k] == id) return GroundTruth::of(k);
  }
  throw ParseError("trace names unknown cast \"" + id + "\"");
}

json score_json(const ScoreBreakdown& s) {
  return json{{"combined", s.combined},
              {"shared", json(std::vector<bool>(s.shared.begin(), s.shared.end()))},
              {"per_modality",
               json(std::vector<double>(s.per_modality.begin(), s.per_modality.end()))}};
}

ScoreBreakdown score_from_json(const json& j) {
  ScoreBreakdown s;
  s.combined = j.at("combined").get<double>();
  const auto shared = j.at("shared").get<std::vector<bool>>();
  const auto per = j.at("per_modality").get<std::vector<double>>();
  if (shared.size() != kModalityCount || per.size() != kModalityCount) {
    throw ParseError("score record needs three modalities");
  }
  for (std::size_t k = 0; k < kModalityCount; ++k) {
    s.shared[k] = shared[k];
    s.per_modality[k] = per[k];
    s.shared_modalities += shared[k] ? 1 : 0;
  }
  return s;
}

json scores_json(const std::vector<ScoreBreakdown>& scores) {
  json arr = json::array();
  for (const auto& s : scores) arr.push_back(score_json(s));
  return arr;
}

std::vector<ScoreBreakdown> scores_from_json(const json& j) {
  std::vector<ScoreBreakdown> out;
  for (const auto& s : j) out.push_back(score_from_json(s));
  return out;
}

json finalized_json(const FinalizedInstance& f, const std::vector<std::string>& cast_ids) {
  return json{{"instance_id", f.instance_id},
              {"truth", truth_json(f.truth, cast_ids)},
              {"arrival", f.arrival},
              {"finalized_at", f.finalized_at},
              {"how", std::string(finalization_name(f.how))},
              {"scores", scores_json(f.scores)}};
}

FinalizedInstance finalized_from_json(const json& j, const std::vector<std::string>& cast_ids) {
  FinalizedInstance f;
  f.instance_id = j.at("instance_id").get<std::string>();
  f.truth = truth_from_json(j.at("truth"), cast_ids);
  f.arrival = j.at("arrival").get<std::int64_t>();
  f.finalized_at = j.at("finalized_at").get<std::int64_t>();
  const auto how = j.at("how").get<std::string>();
  if (how == "immediate") {
    f.how = Finalization::kImmediate;
  } else if (how == "released") {
    f.how = Finalization::kReleased;
  } else if (how == "flushed") {
    f.how = Finalization::kFlushed;
  } else {
    throw ParseError("unknown finalization kind \"" + how + "\"");
  }
  f.scores = scores_from_json(j.at("scores"));
  return f;
}

ControllerKind kind_from_name(const std::string& name) {
  if (name == "manual") return ControllerKind::kManual;
  if (name == "learned") return ControllerKind::kLearned;
  if (name == "disabled") return ControllerKind::kDisabled;
  throw ParseError("unknown controller kind \"" + name + "\"");
}

json optional_stats_json(const UpdateStats& stats) {
  json j = json::object();
  for (Modality m : kModalities) {
    const auto& s = stats[index_of(m)];
    if (s) {
      j[std::string(modality_name(m))] = {{"mean", s->mean}, {"std", s->stddev}, {"count", s->count}};
    } else {
      j[std::string(modality_name(m))] = nullptr;
    }
  }
  return j;
}

json optional_double(const std::optional<double>& x) {
  return x ? json(*x) : json(nullptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

std::string rankings_csv(const MovieResult& result) {
  std::string out = "movie_id,cast_id,rank,instance_id,score\n";
  for (std::size_t j = 0; j < result.rankings.size(); ++j) {
    std::size_t rank = 1;
    for (const auto& entry : result.rankings[j]) {
      out += result.movie_id + ',' + result.cast_ids.at(j) + ',' + std::to_string(rank++) + ',' +
             entry.instance_id + ',' + format_double(entry.score) + '\n';
    }
  }
  return out;
}

std::string trace_jsonl(const MovieResult& result) {
  const auto& ids = result.cast_ids;
  std::string out;
  out += json{{"movie_id", result.movie_id},
              {"method", result.method},
              {"online", result.online},
              {"cast_ids", ids}}
             .dump();
  out += '\n';
  // Memory events are keyed by step so they can ride along on step lines.
  std::map<std::int64_t, const MemoryUpdateEvent*> events;
  for (const auto& e : result.update_log) events[e.step] = &e;
  for (const auto& step : result.trace.steps) {
    json j;
    j["t"] = step.t;
    j["instance_id"] = step.instance_id;
    j["truth"] = truth_json(step.truth, ids);
    j["kind"] = std::string(controller_kind_name(step.gates.kind));
    j["scores"] = scores_json(step.scores);
    std::vector<int> g1;
    for (bool b : step.gates.g1) g1.push_back(b ? 1 : 0);
    j["g1"] = g1;
    j["g2"] = step.gates.g2 ? json(*step.gates.g2 ? 1 : 0) : json(nullptr);
    json g3 = json::array();
    for (const auto& [id, bit] : step.gates.g3) g3.push_back(json::array({id, bit ? 1 : 0}));
    j["g3"] = std::move(g3);
    j["updated_cast"] = step.updated_cast ? json(ids.at(*step.updated_cast)) : json(nullptr);
    if (const auto it = events.find(step.t); it != events.end()) {
      const auto& e = *it->second;
      j["update"] = {{"cast", ids.at(e.cast)},
                     {"similarity", score_json(e.similarity)},
                     {"written", std::vector<bool>(e.written.begin(), e.written.end())}};
    }
    j["pushed"] = step.pushed;
    j["released"] = step.released;
    json fin = json::array();
    for (const auto& f : step.finalized) fin.push_back(finalized_json(f, ids));
    j["finalized"] = std::move(fin);
    out += j.dump();
    out += '\n';
  }
  json flush;
  flush["flush"] = true;
  flush["t"] = result.trace.flush_step;
  json fin = json::array();
  for (const auto& f : result.trace.flushed) fin.push_back(finalized_json(f, ids));
  flush["finalized"] = std::move(fin);
  out += flush.dump();
  out += '\n';
  return out;
}

std::string cache_csv(const MovieResult& result) {
  std::string out = "t,total_size,current_size\n";
  for (const auto& s : result.cache_series) {
    out += std::to_string(s.t) + ',' + std::to_string(s.total) + ',' + std::to_string(s.current) +
           '\n';
  }
  return out;
}

std::string memory_snapshot_json(const std::string& movie_id, const MemoryBank& bank) {
  json casts = json::array();
  for (std::size_t j = 0; j < bank.cast_count(); ++j) {
    json entry;
    entry["cast_id"] = bank.cast_id(j);
    for (Modality m : kModalities) {
      const auto v = bank.row(j).values(m);
      entry[std::string(modality_name(m))] = {
          {"filled", bank.filled(j, m)}, {"vector", std::vector<double>(v.begin(), v.end())}};
    }
    casts.push_back(std::move(entry));
  }
  return json{{"movie_id", movie_id},
              {"d", bank.dim()},
              {"mu", bank.options().mu},
              {"updates", bank.update_log().size()},
              {"casts", std::move(casts)}}
      .dump(1);
}

void write_movie_result(const fs::path& dir, const MovieResult& result) {
  fs::create_directories(dir);
  write_text_file(dir / (result.movie_id + ".rankings.csv"), rankings_csv(result));
  write_text_file(dir / (result.movie_id + ".trace.jsonl"), trace_jsonl(result));
  write_text_file(dir / (result.movie_id + ".cache.csv"), cache_csv(result));
  if (result.final_memory) {
    write_text_file(dir / (result.movie_id + ".memory.json"),
                    memory_snapshot_json(result.movie_id, *result.final_memory));
  }
}

void write_run_manifest(const fs::path& dir, const std::vector<MovieResult>& results) {
  json j;
  j["method"] = results.empty() ? std::string() : results.front().method;
  j["online"] = results.empty() ? true : results.front().online;
  std::vector<std::string> movies;
  for (const auto& r : results) movies.push_back(r.movie_id);
  j["movies"] = movies;
  write_text_file(dir / "run.json", j.dump(2) + "\n");
}

MovieResult read_movie_result(const fs::path& dir, const std::string& movie_id) {
  const fs::path trace_path = dir / (movie_id + ".trace.jsonl");
  MovieResult result;
  std::istringstream trace_in(read_text_file(trace_path));
  std::string line;
  std::size_t line_no = 0;
  auto where = [&] { return trace_path.string() + ":" + std::to_string(line_no) + ": "; };
  try {
    if (!std::getline(trace_in, line)) throw ParseError("empty trace");
    ++line_no;
    const json header = json::parse(line);
    result.movie_id = header.at("movie_id").get<std::string>();
    result.method = header.at("method").get<std::string>();
    result.online = header.at("online").get<bool>();
    result.cast_ids = header.at("cast_ids").get<std::vector<std::string>>();
    const auto& ids = result.cast_ids;
    while (std::getline(trace_in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const json j = json::parse(line);
      if (j.value("flush", false)) {
        result.trace.flush_step = j.at("t").get<std::int64_t>();
        for (const auto& f : j.at("finalized")) {
          result.trace.flushed.push_back(finalized_from_json(f, ids));
        }
        continue;
      }
      StepRecord step;
      step.t = j.at("t").get<std::int64_t>();
      step.instance_id = j.at("instance_id").get<std::string>();
      step.truth = truth_from_json(j.at("truth"), ids);
      step.gates.kind = kind_from_name(j.at("kind").get<std::string>());
      step.scores = scores_from_json(j.at("scores"));
      for (int b : j.at("g1").get<std::vector<int>>()) step.gates.g1.push_back(b != 0);
      if (!j.at("g2").is_null()) step.gates.g2 = j.at("g2").get<int>() != 0;
      for (const auto& pair : j.at("g3")) {
        step.gates.g3.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<int>() != 0);
      }
      if (!j.at("updated_cast").is_null()) {
        step.updated_cast = truth_from_json(j.at("updated_cast"), ids).cast;
      }
      if (j.contains("update")) {
        const json& u = j["update"];
        MemoryUpdateEvent e;
        e.step = step.t;
        e.cast = truth_from_json(u.at("cast"), ids).cast;
        e.similarity = score_from_json(u.at("similarity"));
        const auto written = u.at("written").get<std::vector<bool>>();
        for (std::size_t k = 0; k < kModalityCount && k < written.size(); ++k) {
          e.written[k] = written[k];
        }
        result.update_log.push_back(e);
      }
      step.pushed = j.at("pushed").get<bool>();
      step.released = j.at("released").get<std::vector<std::string>>();
      for (const auto& f : j.at("finalized")) step.finalized.push_back(finalized_from_json(f, ids));
      result.trace.steps.push_back(std::move(step));
    }
  } catch (const json::exception& e) {
    throw ParseError(where() + e.what());
  } catch (const ParseError& e) {
    throw ParseError(where() + e.what());
  }

  // Rankings come from the CSV so eval scores exactly what was emitted.
  const fs::path rank_path = dir / (movie_id + ".rankings.csv");
  std::istringstream rank_in(read_text_file(rank_path));
  result.rankings.assign(result.cast_ids.size(), {});
  line_no = 0;
  while (std::getline(rank_in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 5) {
      throw ParseError(rank_path.string() + ":" + std::to_string(line_no) +
                       ": expected 5 fields");
    }
    std::size_t j = result.cast_ids.size();
    for (std::size_t k = 0; k < result.cast_ids.size(); ++k) {
      if (result.cast_ids[k] == fields[1]) j = k;
    }
    if (j == result.cast_ids.size()) {
      throw ParseError(rank_path.string() + ":" + std::to_string(line_no) + ": unknown cast \"" +
                       fields[1] + "\"");
    }
    const auto rank = std::stoul(fields[2]);
    if (rank != result.rankings[j].size() + 1) {
      throw ParseError(rank_path.string() + ":" + std::to_string(line_no) +
                       ": ranks must be consecutive per cast");
    }
    result.rankings[j].push_back(RankedEntry{fields[3], std::stod(fields[4]), 0});
  }

  const fs::path cache_path = dir / (movie_id + ".cache.csv");
  if (fs::exists(cache_path)) {
    std::istringstream cache_in(read_text_file(cache_path));
    line_no = 0;
    while (std::getline(cache_in, line)) {
      ++line_no;
      if (line_no == 1 || line.empty()) continue;
      const auto fields = split_csv_line(line);
      if (fields.size() != 3) {
        throw ParseError(cache_path.string() + ":" + std::to_string(line_no) +
                         ": expected 3 fields");
      }
      result.cache_series.push_back(CacheSample{std::stoll(fields[0]), std::stoul(fields[1]),
                                                std::stoul(fields[2])});
    }
  }
  return result;
}

std::vector<MovieResult> read_run(const fs::path& dir) {
  const json meta = json::parse(read_text_file(dir / "run.json"));
  std::vector<MovieResult> results;
  for (const auto& id : meta.at("movies")) {
    results.push_back(read_movie_result(dir, id.get<std::string>()));
  }
  return results;
}

std::string eval_report_json(const EvalReport& report) {
  json movies = json::array();
  for (const auto& m : report.movies) {
    json query_ap = json::array();
    for (const auto& ap : m.query_ap) query_ap.push_back(optional_double(ap));
    json final_recall = json::object();
    for (const auto& [k, curve] : m.recall) {
      final_recall[std::to_string(k)] = curve.empty() ? json(nullptr) : json(curve.back().recall);
    }
    movies.push_back({{"movie_id", m.movie_id},
                      {"map", optional_double(m.map)},
                      {"query_ap", std::move(query_ap)},
                      {"instances", m.instances},
                      {"mean_cache_size", m.mean_cache_size},
                      {"final_recall", std::move(final_recall)},
                      {"update_stats", optional_stats_json(m.update_stats)}});
  }
  return json{{"method", report.method},
              {"online", report.online},
              {"mean_map", optional_double(report.mean_map)},
              {"mean_cache_size", report.mean_cache_size},
              {"update_stats", optional_stats_json(report.update_stats)},
              {"movies", std::move(movies)}}
             .dump(2) +
         "\n";
}

std::string recall_curves_csv(const EvalReport& report) {
  std::string out = "movie_id,k,index,t,recall\n";
  for (const auto& m : report.movies) {
    for (const auto& [k, curve] : m.recall) {
      for (std::size_t i = 0; i < curve.size(); ++i) {
        out += m.movie_id + ',' + std::to_string(k) + ',' + std::to_string(i) + ',' +
               std::to_string(curve[i].t) + ',' + format_double(curve[i].recall) + '\n';
      }
    }
  }
  return out;
}

ReportSummary read_report_summary(const fs::path& path) {
  try {
    const json j = json::parse(read_text_file(path));
    ReportSummary s;
    s.method = j.at("method").get<std::string>();
    s.online = j.at("online").get<bool>();
    if (!j.at("mean_map").is_null()) s.mean_map = j["mean_map"].get<double>();
    s.mean_cache_size = j.at("mean_cache_size").get<double>();
    s.movies = j.at("movies").size();
    return s;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace oms
