#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "oms/error.hpp"
#include "oms/feature.hpp"
#include "oms/rng.hpp"

using namespace oms;
using oms_test::feat;
using oms_test::unit_feat;
using oms_test::Vec;

namespace {

Vec random_vec(Rng& rng, std::size_t d) {
  Vec v(d);
  for (auto& x : v) x = rng.normal();
  return v;
}

MultiModalFeature random_feature(Rng& rng, std::size_t d) {
  MultiModalFeature f(d);
  for (Modality m : kModalities) {
    if (m == Modality::kFace || rng.bernoulli(0.6)) f.set(m, random_vec(rng, d));
  }
  return normalize_feature(f);
}

}  // namespace

TEST_CASE("normalize scales each present modality to unit length") {
  const auto f = normalize_feature(feat({3, 4}));
  CHECK(f.values(Modality::kFace)[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(f.values(Modality::kFace)[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK_FALSE(f.has(Modality::kBody));
  CHECK_FALSE(f.has(Modality::kAudio));
}

TEST_CASE("normalize leaves unit vectors alone") {
  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const auto f = random_feature(rng, 7);
    const auto g = normalize_feature(f);
    for (Modality m : kModalities) {
      for (std::size_t i = 0; i < 7; ++i) {
        CHECK(std::abs(f.values(m)[i] - g.values(m)[i]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("normalize rejects zero and non-finite vectors") {
  CHECK_THROWS_WITH_AS(normalize_feature(feat({0, 0})), "zero-norm face vector", InvalidInput);
  CHECK_THROWS_AS(normalize_feature(feat({1, 0}, Vec{0, 0})), InvalidInput);
  CHECK_THROWS_AS(normalize_feature(feat({NAN, 1})), InvalidInput);
}

TEST_CASE("feature construction checks lengths") {
  MultiModalFeature f(3);
  CHECK_THROWS_AS(f.set(Modality::kBody, {1, 2}), DimensionError);
  CHECK_THROWS_AS(feat({1, 2}, Vec{1, 2, 3}), DimensionError);
  f.set(Modality::kAudio, {1, 2, 3});
  CHECK(f.present_count() == 1);
  f.clear(Modality::kAudio);
  CHECK(f.present_count() == 0);
  CHECK(f.values(Modality::kAudio).size() == 3);
}

TEST_CASE("concat score examples") {
  const auto a = unit_feat({1, 2}, Vec{0, 1}, Vec{5, -1});
  CHECK(concat_score(a, a) == doctest::Approx(3.0).epsilon(1e-12));

  MultiModalFeature face_only(2), audio_only(2);
  face_only.set(Modality::kFace, {0.6, 0.8});
  audio_only.set(Modality::kAudio, {0.6, 0.8});
  CHECK(concat_score(face_only, audio_only) == 0.0);
}

TEST_CASE("concat score equals a hand-rolled dot product") {
  Rng rng(11);
  for (int k = 0; k < 50; ++k) {
    const auto a = random_feature(rng, 5);
    const auto b = random_feature(rng, 5);
    double expected = 0.0;
    for (Modality m : kModalities) {
      if (!a.has(m) || !b.has(m)) continue;
      for (std::size_t i = 0; i < 5; ++i) expected += a.values(m)[i] * b.values(m)[i];
    }
    CHECK(std::abs(concat_score(a, b) - expected) <= 1e-12);
  }
}

TEST_CASE("modality scores use the presence intersection") {
  const auto a = unit_feat({1, 2, 3}, Vec{3, 1, 0}, Vec{0, 0, 1});
  const auto s = modality_scores(a, a);
  for (double c : s.per_modality) CHECK(c == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.combined == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.shared_modalities == 3);

  const auto fb = unit_feat({1, 0, 0}, Vec{0, 1, 0});
  const auto face = unit_feat({1, 1, 0});
  const auto t = modality_scores(fb, face);
  CHECK(t.shared_modalities == 1);
  CHECK(t.combined == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(t.per_modality[1] == 0.0);
  CHECK_FALSE(t.shared[1]);
}

TEST_CASE("scores are symmetric and bounded") {
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    const auto a = random_feature(rng, 4);
    const auto b = random_feature(rng, 4);
    CHECK(concat_score(a, b) == concat_score(b, a));
    const auto ab = modality_scores(a, b);
    CHECK(ab == modality_scores(b, a));
    for (double c : ab.per_modality) CHECK(std::abs(c) <= 1.0 + 1e-9);
    CHECK(std::abs(ab.combined) <= 1.0 + 1e-9);
  }
}

TEST_CASE("absent modalities contribute nothing") {
  Rng rng(8);
  for (int k = 0; k < 50; ++k) {
    auto a = random_feature(rng, 6);
    const auto b = random_feature(rng, 6);
    a.clear(Modality::kAudio);
    const auto before = modality_scores(a, b);
    const double concat_before = concat_score(a, b);
    // Toggle the absent slot on and off again with a different payload.
    a.set(Modality::kAudio, random_vec(rng, 6));
    a.clear(Modality::kAudio);
    CHECK(modality_scores(a, b) == before);
    CHECK(concat_score(a, b) == concat_before);
  }
}

TEST_CASE("masking clears disallowed modalities") {
  const auto a = unit_feat({1, 0}, Vec{0, 1}, Vec{1, 1});
  const auto m = apply_mask(a, ModalityMask::face_only());
  CHECK(m.has(Modality::kFace));
  CHECK_FALSE(m.has(Modality::kBody));
  CHECK_FALSE(m.has(Modality::kAudio));
  CHECK(apply_mask(a, ModalityMask::all()) == a);
}

TEST_CASE("mismatched dimensions are rejected") {
  CHECK_THROWS_AS(modality_scores(unit_feat({1, 0}), unit_feat({1, 0, 0})), DimensionError);
  CHECK_THROWS_AS(concat_score(unit_feat({1, 0}), unit_feat({1, 0, 0})), DimensionError);
}
