#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "crossrank/embedding_set.hpp"
#include "crossrank/error.hpp"
#include "crossrank/rng.hpp"

namespace crossrank {

/// One class whose gallery members lie on a great-circle arc: link k sits
/// at arc position (k-1) * link_spread radians, so consecutive links are
/// near neighbours while the query (placed behind link 1, off the arc)
/// is far from the terminal link.
struct ChainSpec {
  int class_id = 0;
  int length = 0;            // number of links, <= per_class_gallery
  double link_spread = 0.0;  // arc step between consecutive links, radians
};

/// Deterministic two-domain embedding generator. Identical specs produce
/// bit-identical sets: every random draw comes from one seeded stream in a
/// fixed order.
///
/// Geometry: class centroids are drawn as an orthonormal frame (plus one
/// in-plane chain direction and one shared query-offset direction), so
/// distances between unrelated classes concentrate near sqrt(2). Gallery
/// rows are centroid + spread * noise; queries are centroid + offset
/// along the shared direction + spread * noise. The chain class replaces
/// its gallery rows with exact arc points and anchors its queries behind
/// link 1, pointing away from the arc. Everything is L2-normalized.
struct SynthSpec {
  int n_classes = 0;
  int per_class_gallery = 0;
  int per_class_queries = 0;
  int dim = 0;
  double intra_class_spread = 0.0;
  double domain_offset_scale = 0.0;
  std::optional<ChainSpec> chain;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_classes < 1 || per_class_gallery < 1 || per_class_queries < 1)
      fail_validation("synth: all counts must be >= 1");
    if (intra_class_spread < 0 || domain_offset_scale < 0)
      fail_validation("synth: spreads must be >= 0");
    if (dim < 2 || dim < n_classes + 2)
      fail_validation("synth: dim " + std::to_string(dim) +
                      " too small to host " + std::to_string(n_classes) +
                      " well-separated class centroids");
    if (chain) {
      if (chain->class_id < 0 || chain->class_id >= n_classes)
        fail_validation("synth: chain class id out of range");
      if (chain->length < 1 || chain->length > per_class_gallery)
        fail_validation("synth: chain length must be in [1, per_class_gallery]");
      if (chain->link_spread < 0) fail_validation("synth: link spread must be >= 0");
    }
  }
};

struct SynthData {
  EmbeddingSet gallery;  // domain B
  EmbeddingSet queries;  // domain A
};

namespace detail {

inline void normalize_in_place(std::vector<double>& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n == 0.0) fail_validation("synth: degenerate zero vector");
  for (double& x : v) x /= n;
}

/// Rows of an orthonormal frame via Gram-Schmidt over fresh gaussian draws.
inline std::vector<std::vector<double>> orthonormal_frame(Rng& rng,
                                                          std::size_t count,
                                                          std::size_t dim) {
  std::vector<std::vector<double>> frame;
  frame.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> v = rng.gaussian_vector(dim);
    for (const auto& u : frame) {
      double dot = 0.0;
      for (std::size_t k = 0; k < dim; ++k) dot += v[k] * u[k];
      for (std::size_t k = 0; k < dim; ++k) v[k] -= dot * u[k];
    }
    normalize_in_place(v);
    frame.push_back(std::move(v));
  }
  return frame;
}

inline void push_row(EmbeddingSet& set, const std::vector<double>& row,
                     std::string id, int class_id) {
  for (double x : row) set.values.push_back(static_cast<float>(x));
  set.labels.push_back({std::move(id), class_id, "class_" + std::to_string(class_id)});
  ++set.count;
}

}  // namespace detail

inline SynthData generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t dim = static_cast<std::size_t>(spec.dim);

  // centroids, then the chain plane direction v, then the offset direction w
  const auto frame =
      detail::orthonormal_frame(rng, static_cast<std::size_t>(spec.n_classes) + 2, dim);
  const auto& v_dir = frame[spec.n_classes];
  const auto& w_dir = frame[spec.n_classes + 1];

  SynthData out;
  out.gallery.dim = dim;
  out.gallery.domain = Domain::B;
  out.queries.dim = dim;
  out.queries.domain = Domain::A;

  auto noisy = [&](const std::vector<double>& base, double scale) {
    std::vector<double> row(base);
    if (scale > 0)
      for (double& x : row) x += scale * rng.gaussian();
    detail::normalize_in_place(row);
    return row;
  };

  for (int c = 0; c < spec.n_classes; ++c) {
    const auto& centroid = frame[c];
    const bool chained = spec.chain && spec.chain->class_id == c;
    for (int k = 0; k < spec.per_class_gallery; ++k) {
      std::vector<double> row;
      if (chained && k < spec.chain->length) {
        const double theta = k * spec.chain->link_spread;
        row.resize(dim);
        for (std::size_t d = 0; d < dim; ++d)
          row[d] = std::cos(theta) * centroid[d] + std::sin(theta) * v_dir[d];
      } else {
        row = noisy(centroid, spec.intra_class_spread);
      }
      detail::push_row(out.gallery, row,
                       "g" + std::to_string(c) + "_" + std::to_string(k), c);
    }
  }

  for (int c = 0; c < spec.n_classes; ++c) {
    const bool chained = spec.chain && spec.chain->class_id == c;
    std::vector<double> base(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      // the chain query backs away from the arc so that far links end up
      // farther from it than unrelated classes are
      const double off = chained ? -spec.domain_offset_scale * v_dir[d]
                                 : spec.domain_offset_scale * w_dir[d];
      base[d] = frame[c][d] + off;
    }
    for (int k = 0; k < spec.per_class_queries; ++k)
      detail::push_row(out.queries, noisy(base, spec.intra_class_spread),
                       "q" + std::to_string(c) + "_" + std::to_string(k), c);
  }

  out.gallery.validate();
  out.queries.validate();
  return out;
}

}  // namespace crossrank
