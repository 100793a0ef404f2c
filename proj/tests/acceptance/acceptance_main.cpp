// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Tolerances are fixed here, not tuned per run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oms/controller.hpp"
#include "oms/engine.hpp"
#include "oms/evalkit.hpp"
#include "oms/manifest.hpp"
#include "oms/qlearner.hpp"
#include "oms/qnetwork.hpp"
#include "oms/results_io.hpp"
#include "oms/synthetic.hpp"
#include "reference_sim.hpp"

#ifndef OMS_CLI_PATH
#error "OMS_CLI_PATH must point at the oms executable"
#endif

namespace fs = std::filesystem;
using namespace oms;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

constexpr std::uint64_t kBenchmarkSeeds[] = {0, 1, 2, 3, 4};
constexpr std::uint64_t kTrainingSeed = 100;

std::vector<MovieStream> benchmark(std::uint64_t seed) {
  SyntheticParams p;
  p.seed = seed;
  return generate_synthetic(p);
}

double mean_map(const std::vector<MovieResult>& results) {
  return evaluate(results).mean_map.value_or(0.0);
}

std::vector<MovieResult> run_all(const std::vector<MovieStream>& movies, const GatePolicy& policy,
                                 const EngineConfig& engine) {
  std::vector<MovieResult> out;
  for (const auto& m : movies) out.push_back(run_movie(m, policy, engine));
  return out;
}

EngineConfig engine_with(bool cache, bool face_only) {
  EngineConfig e;
  e.cache_enabled = cache;
  if (face_only) e.modalities = ModalityMask::face_only();
  return e;
}

/// Learned G1/G2 trained once with the default configuration on a
/// benchmark drawn from a seed outside the evaluation seeds.
const LearnedPolicy& learned_policy() {
  static const LearnedPolicy policy = [] {
    const auto start = Clock::now();
    const auto movies = benchmark(kTrainingSeed);
    const TrainConfig cfg;
    const auto out = train_agents(movies, cfg);
    std::cout << "[setup] trained G1/G2 on seed " << kTrainingSeed << " (" << cfg.epochs
              << " epochs x " << movies.size() << " movies) in " << fmt("%.1f", seconds_since(start))
              << " s\n";
    return LearnedPolicy(out.update.net, out.cache.net, cfg.state_mode, cfg.release);
  }();
  return policy;
}

// 1 -----------------------------------------------------------------------
Verdict trace_oracle() {
  oms_test::TempDir scratch("acceptance_oracle");
  const auto start = Clock::now();
  std::size_t learned = 0, updates = 0, pushes = 0, releases = 0, instances = 0;
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const bool is_learned = k % 2 == 1;
    auto c = oms_test::make_oracle_case(7000 + k, 200, is_learned, scratch.path());
    const auto result = run_movie(c.stream, *c.policy, c.engine);
    const auto ref = oms_test::reference_run(c.stream, c.ref);
    double diff = 0.0;
    if (const auto bad = oms_test::compare_trace(result, ref, 1e-9, &diff)) {
      return {false, "case " + std::to_string(k) + ": " + *bad};
    }
    worst = std::max(worst, diff);
    learned += is_learned;
    instances += c.stream.instances.size();
    for (const auto& st : result.trace.steps) {
      updates += st.updated_cast.has_value();
      pushes += st.pushed;
      releases += st.released.size();
    }
  }
  const double secs = seconds_since(start);
  std::ostringstream d;
  d << "100 movies (" << learned << " learned), " << instances << " steps, " << updates
    << " updates, " << pushes << " pushes, " << releases << " releases; max |dscore| "
    << fmt("%.1e", worst) << "; " << fmt("%.1f", secs) << " s (limit 60)";
  return {secs < 60.0, d.str()};
}

// 2 -----------------------------------------------------------------------
Verdict zero_noise() {
  SyntheticParams p;
  p.sigma = {0, 0, 0};
  p.drift = 0;
  p.presence = {1, 1, 1};
  const ManualPolicy manual(ManualControllerConfig{});
  const auto& learned = learned_policy();
  TwoStepConfig fba;
  fba.use_audio = true;

  struct Method {
    std::string name;
    std::function<MovieResult(const MovieStream&)> run;
  };
  const std::vector<Method> methods = {
      {"face_match", [](const MovieStream& m) { return face_match(m); }},
      {"two_step_fb", [](const MovieStream& m) { return two_step(m, TwoStepConfig{}); }},
      {"two_step_fba", [&](const MovieStream& m) { return two_step(m, fba); }},
      {"OMS", [&](const MovieStream& m) { return run_movie(m, manual, engine_with(false, true)); }},
      {"OMS-Q", [&](const MovieStream& m) { return run_movie(m, manual, engine_with(true, true)); }},
      {"OMS-M", [&](const MovieStream& m) { return run_movie(m, manual, engine_with(false, false)); }},
      {"OMS-MQ", [&](const MovieStream& m) { return run_movie(m, manual, engine_with(true, false)); }},
      {"OMS-R", [&](const MovieStream& m) { return run_movie(m, learned, engine_with(false, true)); }},
      {"OMS-RM", [&](const MovieStream& m) { return run_movie(m, learned, engine_with(false, false)); }},
      {"OMS-RMQ", [&](const MovieStream& m) { return run_movie(m, learned, engine_with(true, false)); }},
  };
  std::string failures;
  // Memory writes triggered by non-cast instances; diagnostic only.
  std::size_t foreign_writes = 0;
  for (std::uint64_t seed : kBenchmarkSeeds) {
    p.seed = seed;
    const auto movies = generate_synthetic(p);
    for (const auto& method : methods) {
      std::vector<MovieResult> results;
      for (const auto& m : movies) results.push_back(method.run(m));
      for (const auto& r : results) {
        for (const auto& st : r.trace.steps) {
          if (st.updated_cast && !st.truth.is_cast(*st.updated_cast)) ++foreign_writes;
        }
      }
      for (const auto& e : evaluate(results).movies) {
        if (!e.map || *e.map != 1.0) {
          failures += " " + method.name + "@" + e.movie_id + "=" + fmt("%.6f", e.map.value_or(-1));
        }
      }
    }
  }
  if (!failures.empty()) {
    return {false, "not exact:" + failures + " (" + std::to_string(foreign_writes) +
                       " memory writes from non-matching instances)"};
  }
  return {true, std::to_string(methods.size()) + " methods x 50 zero-noise movies, every mAP == 1.0"};
}

// 3 -----------------------------------------------------------------------
Verdict degeneration() {
  EngineConfig strict;
  strict.memory = {0.0, false};
  strict.cache_enabled = false;
  strict.modalities = ModalityMask::face_only();
  const DisabledPolicy off;
  std::size_t movies = 0, rows = 0;
  for (std::uint64_t seed : kBenchmarkSeeds) {
    for (const auto& movie : benchmark(seed)) {
      const auto a = run_movie(movie, off, strict);
      const auto b = face_match(movie);
      for (std::size_t j = 0; j < a.rankings.size(); ++j) {
        for (std::size_t r = 0; r < a.rankings[j].size(); ++r) {
          if (a.rankings[j][r].instance_id != b.rankings[j][r].instance_id ||
              a.rankings[j][r].score != b.rankings[j][r].score) {
            return {false, movie.movie_id + " cast " + std::to_string(j) + " rank " +
                               std::to_string(r) + " differs"};
          }
          ++rows;
        }
      }
      ++movies;
    }
  }
  return {true, std::to_string(movies) + " movies, " + std::to_string(rows) +
                    " ranking rows identical (ids and scores)"};
}

// 4, 6 --------------------------------------------------------------------
struct SeedScores {
  double face_match = 0, oms_plain = 0, oms_mq = 0, oms_q_face = 0, oms_rmq = 0;
};

const std::vector<SeedScores>& benchmark_scores() {
  static const std::vector<SeedScores> scores = [] {
    const ManualPolicy manual(ManualControllerConfig{});
    const auto& learned = learned_policy();
    std::vector<SeedScores> out;
    for (std::uint64_t seed : kBenchmarkSeeds) {
      const auto movies = benchmark(seed);
      SeedScores s;
      std::vector<MovieResult> fm;
      for (const auto& m : movies) fm.push_back(face_match(m));
      s.face_match = mean_map(fm);
      s.oms_plain = mean_map(run_all(movies, manual, engine_with(false, true)));
      s.oms_mq = mean_map(run_all(movies, manual, engine_with(true, false)));
      s.oms_q_face = mean_map(run_all(movies, manual, engine_with(true, true)));
      s.oms_rmq = mean_map(run_all(movies, learned, engine_with(true, false)));
      out.push_back(s);
    }
    return out;
  }();
  return scores;
}

Verdict table1_ordering() {
  const auto& s = benchmark_scores();
  SeedScores m;
  for (const auto& x : s) {
    m.face_match += x.face_match / 5;
    m.oms_plain += x.oms_plain / 5;
    m.oms_mq += x.oms_mq / 5;
    m.oms_rmq += x.oms_rmq / 5;
  }
  const double gap1 = 100 * (m.oms_mq - m.face_match);
  const double gap2 = 100 * (m.oms_rmq - m.oms_plain);
  std::ostringstream d;
  d << "face_match " << fmt("%.2f", 100 * m.face_match) << ", OMS manual (all modalities, cache) "
    << fmt("%.2f", 100 * m.oms_mq) << " [gap " << fmt("%+.2f", gap1) << "]; OMS face-only no cache "
    << fmt("%.2f", 100 * m.oms_plain) << ", OMS-RMQ manual-G3 " << fmt("%.2f", 100 * m.oms_rmq)
    << " [gap " << fmt("%+.2f", gap2) << "]; need both gaps >= 1.00";
  return {gap1 >= 1.0 && gap2 >= 1.0, d.str()};
}

Verdict modality_ablation() {
  const auto& s = benchmark_scores();
  bool ok = true;
  std::ostringstream d;
  for (std::size_t k = 0; k < s.size(); ++k) {
    ok = ok && s[k].oms_mq >= s[k].oms_q_face;
    d << (k ? "; " : "") << "seed " << kBenchmarkSeeds[k] << " " << fmt("%.2f", 100 * s[k].oms_mq)
      << " vs " << fmt("%.2f", 100 * s[k].oms_q_face);
  }
  return {ok, "face+body+audio vs face-only: " + d.str()};
}

// 5 -----------------------------------------------------------------------
Verdict tau_sweep() {
  const double taus[] = {0.0, 0.04, 0.08, 0.12, 0.16, 0.20};
  std::vector<double> sizes;
  std::vector<std::vector<MovieStream>> sets;
  for (std::uint64_t seed : kBenchmarkSeeds) sets.push_back(benchmark(seed));
  for (double tau : taus) {
    ManualControllerConfig c;
    c.tau = tau;
    const ManualPolicy policy(c);
    double total = 0;
    std::size_t n = 0;
    for (const auto& movies : sets) {
      for (const auto& r : run_all(movies, policy, EngineConfig{})) {
        total += r.mean_cache_size();
        ++n;
      }
    }
    sizes.push_back(total / static_cast<double>(n));
  }
  bool ok = true;
  std::ostringstream d;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (k > 0) ok = ok && sizes[k] <= sizes[k - 1];
    d << (k ? ", " : "") << "tau " << fmt("%.2f", taus[k]) << ": " << fmt("%.2f", sizes[k]);
  }
  ok = ok && *std::max_element(sizes.begin(), sizes.end()) == sizes[0];
  return {ok, "mean cache size " + d.str()};
}

// 7 -----------------------------------------------------------------------
// Batch MSE recomputed in long double straight from the flat parameters, so
// the finite differences do not inherit the library's forward pass or its
// double rounding.
long double wide_loss(const std::vector<long double>& p, std::size_t in, std::size_t hid,
                      const std::vector<Transition>& batch) {
  const std::size_t b1 = hid * in, w2 = b1 + hid, b2 = w2 + 2 * hid;
  long double loss = 0.0L;
  for (const auto& tr : batch) {
    const std::size_t a = static_cast<std::size_t>(tr.action);
    long double q = p[b2 + a];
    for (std::size_t h = 0; h < hid; ++h) {
      long double z = p[b1 + h];
      for (std::size_t i = 0; i < in; ++i) z += p[h * in + i] * tr.state.values[i];
      if (z > 0.0L) q += p[w2 + a * hid + h] * z;
    }
    const long double err = q - tr.ret;
    loss += err * err;
  }
  return loss / static_cast<long double>(batch.size());
}

Verdict qlearner_numerics() {
  // Central differences against the analytic gradient.
  Rng rng(2024);
  double worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    const std::size_t in = 1 + rng.index(12);
    auto net = QNetwork::random(in, 1 + rng.index(16), rng);
    for (auto& b : net.b1()) b = 0.1 * rng.normal();
    std::vector<Transition> batch;
    for (std::size_t k = 0; k < 1 + rng.index(6); ++k) {
      Transition t;
      t.state.values.resize(in);
      for (auto& x : t.state.values) x = rng.normal();
      t.action = static_cast<int>(rng.index(2));
      t.ret = 31 * rng.uniform();
      batch.push_back(t);
    }
    std::vector<double> grad(net.parameters().size());
    loss_and_gradient(net, batch, grad);
    std::vector<long double> p(net.parameters().begin(), net.parameters().end());
    constexpr long double eps = 1e-6L;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      const long double keep = p[i];
      p[i] = keep + eps;
      const long double up = wide_loss(p, in, net.hidden_dim(), batch);
      p[i] = keep - eps;
      const long double down = wide_loss(p, in, net.hidden_dim(), batch);
      p[i] = keep;
      const double numeric = static_cast<double>((up - down) / (2 * eps));
      worst = std::max(worst, std::abs(grad[i] - numeric) /
                                  std::max({std::abs(grad[i]), std::abs(numeric), 1e-4}));
    }
  }

  // Degenerate bandit: one state, action 1 pays 5, action 0 pays 0.
  Rng init(1);
  auto bandit = QNetwork::random(1, QNetwork::kDefaultHidden, init);
  std::vector<Transition> pulls(2);
  for (int a = 0; a < 2; ++a) {
    pulls[a].state.values = {1.0};
    pulls[a].action = a;
    pulls[a].ret = a == 1 ? 5.0 : 0.0;
  }
  for (int step = 0; step < 5000; ++step) q_train_step(bandit, pulls, TrainConfig{}.learning_rate);
  const double q1 = bandit.forward(std::vector<double>{1.0})[1];

  // Same seed, same checkpoint bytes.
  SyntheticParams p;
  p.movies = 2;
  p.instances = 150;
  p.seed = 55;
  const auto movies = generate_synthetic(p);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.iterations_per_movie = 50;
  cfg.seed = 9;
  const auto a = train_agents(movies, cfg);
  const auto b = train_agents(movies, cfg);
  const bool same = checkpoint_to_json(a.update) == checkpoint_to_json(b.update) &&
                    checkpoint_to_json(a.cache) == checkpoint_to_json(b.cache);

  std::ostringstream d;
  d << "max rel grad error " << fmt("%.2e", worst) << " (< 1e-4); bandit Q(.,1) = "
    << fmt("%.4f", q1) << " after 5000 steps (5 +- 0.1); checkpoints "
    << (same ? "bit-identical" : "DIFFER");
  return {worst < 1e-4 && std::abs(q1 - 5.0) <= 0.1 && same, d.str()};
}

// 8 -----------------------------------------------------------------------
Verdict metrics() {
  const double ap = *average_precision({true, false, true, false});
  const double hand = (1.0 / 1.0 + 2.0 / 3.0) / 2.0;
  const bool ap_ok = std::abs(ap - hand) <= 1e-9;

  const ManualPolicy policy(ManualControllerConfig{});
  bool monotone = true, conserved = true;
  std::size_t points = 0, pushes = 0;
  for (std::uint64_t seed : kBenchmarkSeeds) {
    for (const auto& movie : benchmark(seed)) {
      MovieRun run(movie, EngineConfig{}, policy);
      for (const auto& inst : movie.instances) {
        run.step(inst);
        const auto& c = run.cache();
        conserved = conserved &&
                    c.push_count() == c.released_count() + c.flushed_count() + c.size();
      }
      const std::size_t residue = run.cache().size();
      const std::size_t released = run.cache().released_count();
      const std::size_t pushed = run.cache().push_count();
      const auto result = std::move(run).finish();
      conserved = conserved && pushed == released + result.trace.flushed.size() &&
                  result.trace.flushed.size() == residue;
      pushes += pushed;
      std::vector<RecallPoint> prev;
      for (std::size_t k = 1; k <= movie.casts.size(); ++k) {
        const auto curve = recall_at_k_curve(result.trace, k);
        for (std::size_t i = 0; i < curve.size() && !prev.empty(); ++i) {
          monotone = monotone && curve[i].recall >= prev[i].recall;
          ++points;
        }
        prev = curve;
      }
    }
  }
  std::ostringstream d;
  d << "AP([1,0,1,0]) = " << fmt("%.12f", ap) << " (5/6 +- 1e-9); R@k monotone over " << points
    << " points: " << (monotone ? "yes" : "NO") << "; cache conservation over " << pushes
    << " pushes: " << (conserved ? "holds" : "BROKEN");
  return {ap_ok && monotone && conserved, d.str()};
}

// 9 -----------------------------------------------------------------------
Verdict end_to_end_cli() {
  oms_test::TempDir dir("acceptance_cli");
  const fs::path d = dir.path();
  const std::string oms = OMS_CLI_PATH;
  const auto q = [](const fs::path& p) { return "'" + p.string() + "'"; };
  const std::vector<std::string> commands = {
      oms + " simulate --seed 0 --out " + q(d / "data"),
      oms + " train --data " + q(d / "data") + " --out " + q(d / "ckpt") + " --epochs 1",
      oms + " run --data " + q(d / "data") + " --out " + q(d / "run") + " --config " +
          q(d / "ckpt" / "controller.json"),
      oms + " eval --results " + q(d / "run") + " --out " + q(d / "eval.json") + " --curves " +
          q(d / "recall.csv"),
      oms + " report " + q(d / "eval.json") + " --out " + q(d / "table.txt"),
  };
  const auto start = Clock::now();
  for (const auto& cmd : commands) {
    const std::string quiet = cmd + " > " + q(d / "log.txt") + " 2>&1";
    if (std::system(quiet.c_str()) != 0) {
      return {false, "command failed: " + cmd + ": " + read_text_file(d / "log.txt")};
    }
  }
  const double secs = seconds_since(start);

  std::vector<fs::path> expected = {d / "ckpt" / "g1.json", d / "ckpt" / "g2.json",
                                    d / "ckpt" / "train_log.csv", d / "ckpt" / "controller.json",
                                    d / "run" / "run.json", d / "eval.json", d / "recall.csv",
                                    d / "table.txt"};
  const auto manifests = list_manifests(d / "data");
  for (const auto& m : manifests) {
    const std::string id = m.stem().string();
    for (const char* ext : {".rankings.csv", ".trace.jsonl", ".cache.csv", ".memory.json"}) {
      expected.push_back(d / "run" / (id + ext));
    }
  }
  std::size_t missing = 0;
  std::string first_missing;
  for (const auto& f : expected) {
    if (!fs::exists(f) || fs::file_size(f) == 0) {
      if (missing++ == 0) first_missing = f.string();
    }
  }
  std::ostringstream out;
  out << "simulate -> train -> run -> eval -> report in " << fmt("%.1f", secs)
      << " s (limit 600); " << manifests.size() << " manifests, " << expected.size() - missing
      << "/" << expected.size() << " outputs present";
  if (missing) out << " (missing " << first_missing << ")";
  return {missing == 0 && manifests.size() == 10 && secs < 600.0, out.str()};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Verdict()> check;
  };
  const std::vector<Criterion> criteria = {
      {"trace-oracle equivalence", trace_oracle},
      {"zero-noise exactness", zero_noise},
      {"degeneration identity", degeneration},
      {"table-1 ordering", table1_ordering},
      {"cache-weight sweep", tau_sweep},
      {"modality ablation", modality_ablation},
      {"q-learner numerics", qlearner_numerics},
      {"metrics", metrics},
      {"end-to-end cli", end_to_end_cli},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Verdict v;
    try {
      v = criteria[k].check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << "AC" << k + 1 << " " << criteria[k].name
              << ": " << v.detail << std::endl;
  }
  std::cout << criteria.size() - static_cast<std::size_t>(failed) << "/" << criteria.size()
            << " acceptance criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
