#include "oms/synthetic.hpp"

#include <cmath>
#include <cstdio>

#include "oms/error.hpp"
#include "oms/rng.hpp"

namespace oms {

void SyntheticParams::validate() const {
  if (dim < 2) throw InvalidInput("synthetic dimension d must be at least 2");
  if (casts == 0) throw InvalidInput("synthetic movies need at least one cast");
  if (movies == 0) throw InvalidInput("number of movies must be positive");
  for (double s : sigma) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidInput("noise sigma must be >= 0");
  }
  for (double q : presence) {
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("presence probabilities must lie in [0, 1]");
  }
  if (!(drift >= 0.0) || !std::isfinite(drift)) throw InvalidInput("drift must be >= 0");
  if (!(distractor_fraction >= 0.0 && distractor_fraction <= 1.0)) {
    throw InvalidInput("distractor fraction must lie in [0, 1]");
  }
}

namespace {

std::vector<double> unit_gaussian(std::size_t dim, Rng& rng) {
  std::vector<double> v(dim);
  double norm = 0.0;
  while (norm == 0.0) {
    for (double& x : v) x = rng.normal();
    norm = l2_norm(v);
  }
  for (double& x : v) x /= norm;
  return v;
}

/// normalize(base + g), g ~ N(0, scale^2 I).
std::vector<double> perturb(const std::vector<double>& base, double scale, Rng& rng) {
  if (scale == 0.0) return base;
  std::vector<double> v = base;
  for (double& x : v) x += scale * rng.normal();
  const double norm = l2_norm(v);
  if (norm == 0.0) return base;
  for (double& x : v) x /= norm;
  return v;
}

using Prototype = std::array<std::vector<double>, kModalityCount>;

Prototype random_person(std::size_t dim, Rng& rng) {
  Prototype p;
  for (auto& v : p) v = unit_gaussian(dim, rng);
  return p;
}

std::string padded(const char* prefix, std::uint64_t a, int width) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%0*llu", prefix, width, static_cast<unsigned long long>(a));
  return buf;
}

MovieStream generate_movie(const SyntheticParams& params, std::size_t index, Rng rng) {
  MovieStream movie;
  movie.movie_id = "s" + std::to_string(params.seed) + "_" + padded("m", index, 3);
  movie.dim = params.dim;

  Rng cast_rng = rng.split("cast");
  std::vector<Prototype> people;
  for (std::size_t j = 0; j < params.casts; ++j) {
    people.push_back(random_person(params.dim, cast_rng));
    MultiModalFeature portrait(params.dim);
    portrait.set(Modality::kFace, people.back()[index_of(Modality::kFace)]);
    movie.casts.push_back(CastPortrait{padded("c", j, 2), std::move(portrait)});
  }

  Rng stream_rng = rng.split("stream");
  for (std::size_t t = 0; t < params.instances; ++t) {
    Instance inst;
    inst.id = movie.movie_id + "_" + padded("i", t, 4);
    inst.t = static_cast<std::int64_t>(t);
    const bool distractor = stream_rng.bernoulli(params.distractor_fraction);
    Prototype extra;
    const Prototype* person = nullptr;
    if (distractor) {
      extra = random_person(params.dim, stream_rng);
      person = &extra;
      inst.truth = GroundTruth::other();
    } else {
      const std::size_t j = stream_rng.index(params.casts);
      for (auto& proto : people[j]) proto = perturb(proto, params.drift, stream_rng);
      person = &people[j];
      inst.truth = GroundTruth::of(j);
    }
    // One appearance-quality draw per instance scales the noise of every
    // modality: some tracklets are clean, some are barely recognisable.
    const double quality = -std::log(1.0 - stream_rng.uniform());
    inst.feature = MultiModalFeature(params.dim);
    for (Modality m : kModalities) {
      const std::size_t k = index_of(m);
      auto v = perturb((*person)[k], params.sigma[k] * quality, stream_rng);
      if (stream_rng.bernoulli(params.presence[k])) inst.feature.set(m, std::move(v));
    }
    movie.instances.push_back(std::move(inst));
  }
  return movie;
}

}  // namespace

std::vector<MovieStream> generate_synthetic(const SyntheticParams& params) {
  params.validate();
  const Rng root(params.seed);
  std::vector<MovieStream> movies;
  movies.reserve(params.movies);
  for (std::size_t m = 0; m < params.movies; ++m) {
    movies.push_back(generate_movie(params, m, root.split("movie", m)));
  }
  return movies;
}

}  // namespace oms
