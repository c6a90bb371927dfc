#include "semloc/blobs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semloc/errors.hpp"

namespace semloc {
namespace {

// Clipped-window sum over an integral image with S(v, u) = sum of mask[0..v)[0..u).
struct IntegralImage {
  explicit IntegralImage(const Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic,
                                            Eigen::RowMajor>& mask)
      : sums(mask.rows() + 1, mask.cols() + 1) {
    sums.setZero();
    for (Eigen::Index v = 0; v < mask.rows(); ++v) {
      int row_sum = 0;
      for (Eigen::Index u = 0; u < mask.cols(); ++u) {
        row_sum += mask(v, u);
        sums(v + 1, u + 1) = sums(v, u + 1) + row_sum;
      }
    }
  }

  int window_sum(int v0, int v1, int u0, int u1) const {  // inclusive bounds
    return sums(v1 + 1, u1 + 1) - sums(v0, u1 + 1) - sums(v1 + 1, u0) + sums(v0, u0);
  }

  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> sums;
};

using ByteMask = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

ByteMask close_mask(const ByteMask& mask, int radius) {
  const int h = static_cast<int>(mask.rows());
  const int w = static_cast<int>(mask.cols());
  const auto clamp_lo = [](int x) { return x < 0 ? 0 : x; };

  ByteMask dilated(h, w);
  {
    const IntegralImage integral(mask);
    for (int v = 0; v < h; ++v) {
      const int v0 = clamp_lo(v - radius), v1 = std::min(h - 1, v + radius);
      for (int u = 0; u < w; ++u) {
        const int u0 = clamp_lo(u - radius), u1 = std::min(w - 1, u + radius);
        dilated(v, u) = integral.window_sum(v0, v1, u0, u1) > 0 ? 1 : 0;
      }
    }
  }

  ByteMask closed(h, w);
  {
    const IntegralImage integral(dilated);
    for (int v = 0; v < h; ++v) {
      const int v0 = clamp_lo(v - radius), v1 = std::min(h - 1, v + radius);
      for (int u = 0; u < w; ++u) {
        const int u0 = clamp_lo(u - radius), u1 = std::min(w - 1, u + radius);
        const int area = (v1 - v0 + 1) * (u1 - u0 + 1);
        closed(v, u) = integral.window_sum(v0, v1, u0, u1) == area ? 1 : 0;
      }
    }
  }
  return closed;
}

struct DisjointSet {
  explicit DisjointSet(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

  size_t find(size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }

  void unite(size_t a, size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }

  std::vector<size_t> parent;
};

}  // namespace

LabelGrid smooth_labels(const LabelGrid& labels, int radius) {
  if (radius < 0) throw Error("smooth_labels: radius must be non-negative");
  if (radius == 0) return labels;

  std::vector<ClassId> classes;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const ClassId c = labels(i);
    if (c != 0 && std::find(classes.begin(), classes.end(), c) == classes.end()) {
      classes.push_back(c);
    }
  }
  std::sort(classes.begin(), classes.end());

  LabelGrid out(labels.rows(), labels.cols());
  out.setZero();
  ByteMask mask(labels.rows(), labels.cols());
  for (const ClassId c : classes) {
    for (Eigen::Index i = 0; i < labels.size(); ++i) mask(i) = labels(i) == c ? 1 : 0;
    const ByteMask closed = close_mask(mask, radius);
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
      if (closed(i)) out(i) = static_cast<std::uint16_t>(c);
    }
  }
  return out;
}

BlobExtraction extract_blobs(const SemanticFrame& frame, int min_blob_size,
                             const std::set<ClassId>& rejected_classes) {
  if (min_blob_size < 1) throw Error("extract_blobs: min_blob_size must be >= 1");
  const int h = frame.height();
  const int w = frame.width();
  const LabelGrid& labels = frame.labels;
  const LabelGrid* instances = frame.instances ? &*frame.instances : nullptr;

  const auto same_key = [&](int va, int ua, int vb, int ub) {
    if (labels(va, ua) != labels(vb, ub)) return false;
    return instances == nullptr || (*instances)(va, ua) == (*instances)(vb, ub);
  };

  // Scanline union-find over 4-neighborhoods.
  DisjointSet ds(static_cast<size_t>(h) * w);
  const auto idx = [w](int v, int u) { return static_cast<size_t>(v) * w + u; };
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (u > 0 && same_key(v, u, v, u - 1)) ds.unite(idx(v, u), idx(v, u - 1));
      if (v > 0 && same_key(v, u, v - 1, u)) ds.unite(idx(v, u), idx(v - 1, u));
    }
  }

  // Gather components in scanline order of their first pixel.
  std::vector<int> component_of(static_cast<size_t>(h) * w, -1);
  std::vector<Blob> components;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const size_t root = ds.find(idx(v, u));
      int& slot = component_of[root];
      if (slot < 0) {
        slot = static_cast<int>(components.size());
        Blob blob;
        blob.class_id = labels(v, u);
        if (instances) blob.instance_id = (*instances)(v, u);
        components.push_back(std::move(blob));
      }
      components[slot].pixel_u.push_back(u);
      components[slot].pixel_v.push_back(v);
    }
  }

  BlobExtraction result;
  for (Blob& blob : components) {
    if (blob.class_id == 0 || rejected_classes.count(blob.class_id)) continue;
    if (static_cast<int>(blob.size()) < min_blob_size) continue;

    double sum_u = 0.0, sum_v = 0.0;
    for (size_t i = 0; i < blob.size(); ++i) {
      sum_u += blob.pixel_u[i];
      sum_v += blob.pixel_v[i];
    }
    const auto n = static_cast<double>(blob.size());
    blob.center_px.x() = static_cast<int>(std::lround(sum_u / n));
    blob.center_px.y() = static_cast<int>(std::lround(sum_v / n));

    const double center_depth = frame.depth(blob.center_px.y(), blob.center_px.x());
    if (center_depth > 0.0) {
      blob.center_3d = back_project(frame, blob.center_px.x(), blob.center_px.y());
    } else {
      std::vector<double> valid;
      for (size_t i = 0; i < blob.size(); ++i) {
        const double d = frame.depth(blob.pixel_v[i], blob.pixel_u[i]);
        if (d > 0.0) valid.push_back(d);
      }
      if (valid.empty()) {
        ++result.dropped_no_depth;
        continue;
      }
      std::nth_element(valid.begin(), valid.begin() + (valid.size() - 1) / 2, valid.end());
      const double median = valid[(valid.size() - 1) / 2];
      blob.center_3d = back_project(frame, blob.center_px.x(), blob.center_px.y(), median);
    }
    result.blobs.push_back(std::move(blob));
  }
  return result;
}

int effective_min_blob_size(int reference_min_size, const CameraIntrinsics& cam) {
  const double scale = static_cast<double>(cam.width) * cam.height / (640.0 * 480.0);
  return std::max(1, static_cast<int>(std::lround(reference_min_size * scale)));
}

}  // namespace semloc
