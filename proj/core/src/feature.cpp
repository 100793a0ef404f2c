#include "oms/feature.hpp"

#include <cmath>
#include <string>

#include "oms/error.hpp"

namespace oms {

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::kFace:
      return "face";
    case Modality::kBody:
      return "body";
    case Modality::kAudio:
      return "audio";
  }
  return "unknown";
}

MultiModalFeature::MultiModalFeature(std::size_t dim) : dim_(dim) {
  for (auto& v : vectors_) v.assign(dim, 0.0);
}

MultiModalFeature MultiModalFeature::from_parts(std::size_t dim,
                                                std::optional<std::vector<double>> face,
                                                std::optional<std::vector<double>> body,
                                                std::optional<std::vector<double>> audio) {
  MultiModalFeature f(dim);
  if (face) f.set(Modality::kFace, std::move(*face));
  if (body) f.set(Modality::kBody, std::move(*body));
  if (audio) f.set(Modality::kAudio, std::move(*audio));
  return f;
}

std::size_t MultiModalFeature::present_count() const {
  std::size_t n = 0;
  for (bool p : present_) n += p ? 1 : 0;
  return n;
}

void MultiModalFeature::set(Modality m, std::vector<double> values) {
  if (values.size() != dim_) {
    throw DimensionError(std::string(modality_name(m)) + " vector has length " +
                         std::to_string(values.size()) + ", expected " +
                         std::to_string(dim_));
  }
  vectors_[index_of(m)] = std::move(values);
  present_[index_of(m)] = true;
}

void MultiModalFeature::clear(Modality m) {
  vectors_[index_of(m)].assign(dim_, 0.0);
  present_[index_of(m)] = false;
}

MultiModalFeature apply_mask(const MultiModalFeature& feature, const ModalityMask& mask) {
  MultiModalFeature out = feature;
  for (Modality m : kModalities) {
    if (!mask.allows(m) && out.has(m)) out.clear(m);
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("dot product of vectors with lengths " + std::to_string(a.size()) +
                         " and " + std::to_string(b.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

MultiModalFeature normalize_feature(MultiModalFeature raw) {
  for (Modality m : kModalities) {
    if (!raw.has(m)) continue;
    std::vector<double> v(raw.values(m).begin(), raw.values(m).end());
    for (double x : v) {
      if (!std::isfinite(x)) {
        throw InvalidInput("non-finite " + std::string(modality_name(m)) + " vector");
      }
    }
    const double norm = l2_norm(v);
    if (norm == 0.0) {
      throw InvalidInput("zero-norm " + std::string(modality_name(m)) + " vector");
    }
    // Vectors already at unit length are kept bit-for-bit, so normalizing
    // twice (e.g. generator then loader) is exact.
    if (std::abs(norm - 1.0) <= 1e-12) continue;
    for (double& x : v) x /= norm;
    raw.set(m, std::move(v));
  }
  return raw;
}

namespace {

void require_same_dim(const MultiModalFeature& a, const MultiModalFeature& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("feature dimensions differ: " + std::to_string(a.dim()) + " vs " +
                         std::to_string(b.dim()));
  }
}

}  // namespace

double concat_score(const MultiModalFeature& a, const MultiModalFeature& b) {
  require_same_dim(a, b);
  double total = 0.0;
  for (Modality m : kModalities) total += dot(a.values(m), b.values(m));
  return total;
}

ScoreBreakdown modality_scores(const MultiModalFeature& a, const MultiModalFeature& b) {
  require_same_dim(a, b);
  ScoreBreakdown s;
  double sum = 0.0;
  for (Modality m : kModalities) {
    const std::size_t i = index_of(m);
    if (!a.has(m) || !b.has(m)) continue;
    s.shared[i] = true;
    s.per_modality[i] = dot(a.values(m), b.values(m));
    sum += s.per_modality[i];
    ++s.shared_modalities;
  }
  if (s.shared_modalities > 0) s.combined = sum / s.shared_modalities;
  return s;
}

}  // namespace oms
