#include "pixelforge/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "json.hpp"
#include "pixelforge/align.hpp"
#include "pixelforge/errors.hpp"

namespace pixelforge {

// ---- retrieval ---------------------------------------------------------------

std::size_t RetrievalResult::truth_rank() const {
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    if (ranking[i].id == truth) return i + 1;
  }
  return 0;
}

RetrievalResult rank_gallery(const Embedding& query, CompositionId truth, std::span<const GalleryItem> gallery) {
  RetrievalResult r;
  r.truth = truth;
  r.ranking.reserve(gallery.size());
  for (const auto& g : gallery) r.ranking.push_back({g.id, cosine_sim(query, g.embedding)});
  std::sort(r.ranking.begin(), r.ranking.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.id < b.id;
  });
  return r;
}

double recall_at_k(std::span<const RetrievalResult> results, std::size_t k) {
  if (results.empty()) throw ArgumentError("recall_at_k needs at least one query");
  if (k == 0) throw ArgumentError("recall_at_k needs k >= 1");
  std::size_t hits = 0;
  for (const auto& r : results) {
    const std::size_t rank = r.truth_rank();
    hits += (rank != 0 && rank <= k);
  }
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

double jaccard_relevance(const Composition& a, const Composition& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& x : a.atoms()) inter += std::binary_search(b.atoms().begin(), b.atoms().end(), x);
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double semantic_ndcg_at_k(std::span<const RetrievalResult> results, const RelevanceFn& relevance, std::size_t k) {
  if (k < 1) throw ArgumentError("nDCG needs k >= 1");
  if (results.empty()) throw ArgumentError("nDCG needs at least one query");
  double total = 0.0;
  std::vector<double> rel;
  for (const auto& r : results) {
    rel.clear();
    for (const auto& c : r.ranking) rel.push_back(relevance(r.truth, c.id));
    double dcg = 0.0;
    for (std::size_t i = 0; i < std::min(k, rel.size()); ++i) dcg += rel[i] / std::log2(static_cast<double>(i) + 2.0);
    std::sort(rel.begin(), rel.end(), std::greater<>());
    double ideal = 0.0;
    for (std::size_t i = 0; i < std::min(k, rel.size()); ++i) ideal += rel[i] / std::log2(static_cast<double>(i) + 2.0);
    total += ideal > 0.0 ? dcg / ideal : 1.0;
  }
  return total / static_cast<double>(results.size());
}

// ---- tags --------------------------------------------------------------------

namespace {

std::set<std::string> parent_keys(const Composition& c) {
  std::set<std::string> out;
  for (const auto& a : c.atoms()) out.insert(split_parent_child(a).parent);
  return out;
}

std::set<std::string> atom_set(const Composition& c) {
  std::set<std::string> out;
  for (const auto& a : c.atoms()) out.insert(a.rendered());
  return out;
}

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0;
  void add(const std::set<std::string>& pred, const std::set<std::string>& truth) {
    for (const auto& p : pred) (truth.count(p) ? tp : fp) += 1;
    for (const auto& t : truth) fn += (pred.count(t) == 0);
  }
  double f1() const {
    const std::size_t denom = 2 * tp + fp + fn;
    return denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
};

}  // namespace

ParentChildAccuracy parent_child_accuracy(std::span<const TagPrediction> predictions) {
  if (predictions.empty()) return {};
  std::size_t parent_hits = 0, child_hits = 0;
  for (const auto& p : predictions) {
    const auto tp = parent_keys(p.truth);
    bool parent = false, child = false;
    for (const auto& a : p.predicted.atoms()) {
      parent = parent || tp.count(a.key()) != 0;
      child = child || std::binary_search(p.truth.atoms().begin(), p.truth.atoms().end(), a);
    }
    parent_hits += parent;
    child_hits += child;
  }
  const auto n = static_cast<double>(predictions.size());
  return {static_cast<double>(parent_hits) / n, static_cast<double>(child_hits) / n};
}

double mixed_f1(std::span<const TagPrediction> predictions) {
  if (predictions.empty()) throw ArgumentError("mixed_f1 needs at least one prediction");
  Counts parents, atoms;
  for (const auto& p : predictions) {
    parents.add(parent_keys(p.predicted), parent_keys(p.truth));
    atoms.add(atom_set(p.predicted), atom_set(p.truth));
  }
  return 0.5 * (parents.f1() + atoms.f1());
}

double exact_match_at_1(std::span<const TagPrediction> predictions) {
  if (predictions.empty()) throw ArgumentError("exact_match_at_1 needs at least one prediction");
  std::size_t hits = 0;
  for (const auto& p : predictions) hits += (p.predicted == p.truth);
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double tag_overlap_f1_at_1(std::span<const TagPrediction> predictions) {
  if (predictions.empty()) throw ArgumentError("tag_overlap_f1_at_1 needs at least one prediction");
  double total = 0.0;
  for (const auto& p : predictions) {
    Counts c;
    c.add(atom_set(p.predicted), atom_set(p.truth));
    total += c.f1();
  }
  return total / static_cast<double>(predictions.size());
}

// ---- image quality -----------------------------------------------------------

namespace {

void check_same_shape(const Image& a, const Image& b) {
  if (a.channels != b.channels || a.height != b.height || a.width != b.width) {
    throw ArgumentError("images differ in shape");
  }
  if (a.data.empty()) throw ArgumentError("empty image");
}

constexpr std::size_t kWindow = 11;

std::array<double, kWindow> gaussian_window() {
  std::array<double, kWindow> w{};
  double s = 0.0;
  for (std::size_t i = 0; i < kWindow; ++i) {
    const double x = static_cast<double>(i) - 5.0;
    w[i] = std::exp(-(x * x) / (2.0 * 1.5 * 1.5));
    s += w[i];
  }
  for (auto& v : w) v /= s;
  return w;
}

// Valid-mode separable filtering of an h x w plane.
std::vector<double> filter_valid(const std::vector<double>& plane, std::size_t h, std::size_t w,
                                 const std::array<double, kWindow>& k) {
  const std::size_t ow = w - kWindow + 1, oh = h - kWindow + 1;
  std::vector<double> rows(h * ow, 0.0);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < ow; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < kWindow; ++i) s += k[i] * plane[r * w + c + i];
      rows[r * ow + c] = s;
    }
  }
  std::vector<double> out(oh * ow, 0.0);
  for (std::size_t r = 0; r < oh; ++r) {
    for (std::size_t c = 0; c < ow; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < kWindow; ++i) s += k[i] * rows[(r + i) * ow + c];
      out[r * ow + c] = s;
    }
  }
  return out;
}

}  // namespace

double ssim(const Image& a, const Image& b, double dynamic_range) {
  check_same_shape(a, b);
  if (a.height < kWindow || a.width < kWindow) throw ArgumentError("SSIM needs images of at least 11x11");
  const double c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
  const double c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);
  const auto k = gaussian_window();
  const std::size_t h = a.height, w = a.width, plane = h * w;
  double total = 0.0;
  std::vector<double> x(plane), y(plane), xx(plane), yy(plane), xy(plane);
  for (std::size_t ch = 0; ch < a.channels; ++ch) {
    for (std::size_t i = 0; i < plane; ++i) {
      x[i] = a.data[ch * plane + i];
      y[i] = b.data[ch * plane + i];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, h, w, k), my = filter_valid(y, h, w, k);
    const auto exx = filter_valid(xx, h, w, k), eyy = filter_valid(yy, h, w, k), exy = filter_valid(xy, h, w, k);
    double s = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double sx = exx[i] - mx[i] * mx[i];
      const double sy = eyy[i] - my[i] * my[i];
      const double sxy = exy[i] - mx[i] * my[i];
      s += ((2.0 * mx[i] * my[i] + c1) * (2.0 * sxy + c2)) /
           ((mx[i] * mx[i] + my[i] * my[i] + c1) * (sx + sy + c2));
    }
    total += s / static_cast<double>(mx.size());
  }
  return total / static_cast<double>(a.channels);
}

double psnr(const Image& a, const Image& b, double peak) {
  check_same_shape(a, b);
  double se = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    se += d * d;
  }
  if (se == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = se / static_cast<double>(a.data.size());
  return 10.0 * std::log10(peak * peak / mse);
}

// ---- Frechet -----------------------------------------------------------------

namespace {

void validate_stats(const GaussianStats& s) {
  const auto d = s.mean.size();
  if (s.covariance.rows() != d || s.covariance.cols() != d) throw ArgumentError("covariance shape mismatch");
  if (!s.covariance.allFinite() || !s.mean.allFinite()) throw NumericError("non-finite Gaussian statistics");
  if ((s.covariance - s.covariance.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw NumericError("covariance is not symmetric");
  }
}

// Eigenvalues clipped at zero; values below -1e-9 (relative to the spectrum) are an error.
Eigen::VectorXd clipped_eigenvalues(const Eigen::VectorXd& ev, const char* what) {
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  Eigen::VectorXd out = ev;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -1e-9 * scale) throw NumericError(std::string(what) + " is not positive semidefinite");
    out[i] = std::max(0.0, ev[i]);
  }
  return out;
}

}  // namespace

GaussianStats fit_gaussian(const Eigen::MatrixXd& features) {
  if (features.rows() < 2) throw ArgumentError("fit_gaussian needs at least two samples");
  if (!features.allFinite()) throw NumericError("non-finite features");
  GaussianStats s;
  s.mean = features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rowwise() - s.mean.transpose();
  s.covariance = (centered.transpose() * centered) / static_cast<double>(features.rows() - 1);
  s.covariance = 0.5 * (s.covariance + s.covariance.transpose()).eval();
  return s;
}

double frechet_distance(const GaussianStats& p, const GaussianStats& q) {
  validate_stats(p);
  validate_stats(q);
  if (p.mean.size() != q.mean.size()) throw ArgumentError("Frechet distance dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(p.covariance);
  if (ep.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  const Eigen::VectorXd lp = clipped_eigenvalues(ep.eigenvalues(), "first covariance");
  const Eigen::MatrixXd sqrt_p = ep.eigenvectors() * lp.cwiseSqrt().asDiagonal() * ep.eigenvectors().transpose();
  Eigen::MatrixXd inner = sqrt_p * q.covariance * sqrt_p;
  inner = 0.5 * (inner + inner.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ei(inner, Eigen::EigenvaluesOnly);
  if (ei.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  const Eigen::VectorXd li = clipped_eigenvalues(ei.eigenvalues(), "covariance product");
  const double trace_sqrt = li.cwiseSqrt().sum();
  const double d = (p.mean - q.mean).squaredNorm() + p.covariance.trace() + q.covariance.trace() - 2.0 * trace_sqrt;
  return std::max(0.0, d);
}

// ---- report ------------------------------------------------------------------

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  auto put = [&j](const char* key, const std::optional<double>& v) {
    if (!v) {
      j[key] = nullptr;
    } else if (std::isinf(*v)) {
      j[key] = *v > 0 ? "inf" : "-inf";
    } else {
      j[key] = *v;
    }
  };
  put("recall@1", recall_1);
  put("recall@5", recall_5);
  put("recall@10", recall_10);
  put("ndcg@20", ndcg_20);
  put("parent_acc", parent_acc);
  put("child_acc", child_acc);
  put("mixed_f1", mixed_f1);
  put("exact_match@1", exact_match_1);
  put("tag_overlap_f1@1", tag_overlap_f1_1);
  put("ssim_mean", ssim_mean);
  put("psnr_mean", psnr_mean);
  put("frechet", frechet);
  j["queries"] = queries;
  j["gallery_size"] = gallery_size;
  return j.dump(2);
}

}  // namespace pixelforge
