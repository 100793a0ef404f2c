#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oms/controller.hpp"
#include "oms/engine.hpp"
#include "oms/feature.hpp"
#include "oms/rng.hpp"
#include "oms/stream.hpp"
#include "reference_sim.hpp"

namespace oms_test {

using Vec = std::vector<double>;

oms::MultiModalFeature feat(Vec face, std::optional<Vec> body = std::nullopt,
                            std::optional<Vec> audio = std::nullopt);
oms::MultiModalFeature unit_feat(Vec face, std::optional<Vec> body = std::nullopt,
                                 std::optional<Vec> audio = std::nullopt);
oms::CastPortrait portrait(std::string id, Vec face);

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "oms");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// A random movie plus a random engine setup, in both library and oracle
/// form. Learned cases load their networks from checkpoints on disk.
struct OracleCase {
  oms::MovieStream stream;
  oms::EngineConfig engine;
  std::unique_ptr<oms::GatePolicy> policy;
  RefConfig ref;
  bool learned = false;
};

OracleCase make_oracle_case(std::uint64_t seed, std::size_t max_instances, bool learned,
                            const std::filesystem::path& scratch);

}  // namespace oms_test
