#include "gaussbound/smoother.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gaussbound {

int default_knn_k(Eigen::Index n, Eigen::Index d) {
  const double raw = std::ceil(std::pow(static_cast<double>(n), 4.0 / (4.0 + static_cast<double>(d))) / 2.0);
  const auto k = static_cast<Eigen::Index>(raw);
  return static_cast<int>(std::clamp<Eigen::Index>(k, std::min<Eigen::Index>(3, n), n));
}

namespace {

void check_inputs(const Matrix& x, VectorRef z) {
  if (x.rows() != z.size()) throw ParameterError("smoother: x and z lengths differ");
  if (x.rows() < 1 || x.cols() < 1) throw InsufficientDataError("smoother: empty predictor block");
  if (x.rows() > std::numeric_limits<std::int32_t>::max()) throw ParameterError("smoother: n too large");
}

int fallback_k_for(Eigen::Index n) {
  const int k = std::max(3, static_cast<int>(std::ceil(std::pow(static_cast<double>(n), 0.8) / 10.0)));
  return static_cast<int>(std::min<Eigen::Index>(k, n));
}

}  // namespace

ConditionalMean::ConditionalMean(Matrix x, SmootherConfig config) : x_(std::move(x)), config_(config) {
  const Eigen::Index n = x_.rows();
  if (n < 1 || x_.cols() < 1) throw InsufficientDataError("smoother: empty predictor block");
  if (!x_.allFinite()) throw DomainError("smoother: predictors must be finite");
  fallback_k_ = fallback_k_for(n);
  if (config_.kind == SmootherKind::Knn) {
    k_ = config_.k > 0 ? config_.k : default_knn_k(n, x_.cols());
    if (k_ > n) {
      throw ParameterError("knn smoother: k = " + std::to_string(k_) + " exceeds n = " + std::to_string(n));
    }
  } else {
    k_ = fallback_k_;
    if (config_.bandwidth > 0.0) {
      bandwidth_ = config_.bandwidth;
    } else {
      const Eigen::RowVectorXd mean = x_.colwise().mean();
      const double sd = std::sqrt((x_.rowwise() - mean).array().square().colwise().sum().mean() /
                                  static_cast<double>(std::max<Eigen::Index>(n - 1, 1)));
      bandwidth_ = (sd > 0.0 ? sd : 1.0) * std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(x_.cols()) + 4.0));
    }
    if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_)) throw ParameterError("kernel smoother: bandwidth must be > 0");
  }

  if (x_.cols() == 1) {
    order_.resize(static_cast<std::size_t>(n));
    std::iota(order_.begin(), order_.end(), 0);
    std::sort(order_.begin(), order_.end(), [&](std::int32_t a, std::int32_t b) {
      return x_(a, 0) < x_(b, 0) || (x_(a, 0) == x_(b, 0) && a < b);
    });
    position_.resize(order_.size());
    for (std::size_t p = 0; p < order_.size(); ++p) position_[order_[p]] = static_cast<std::int32_t>(p);
    sorted_.resize(order_.size());
    group_of_.resize(order_.size());
    for (std::size_t p = 0; p < order_.size(); ++p) {
      sorted_[p] = x_(order_[p], 0);
      if (p == 0 || sorted_[p] != sorted_[p - 1]) group_start_.push_back(static_cast<std::int32_t>(p));
      group_of_[p] = static_cast<std::int32_t>(group_start_.size()) - 1;
    }
    group_start_.push_back(static_cast<std::int32_t>(n));
    if (config_.kind == SmootherKind::Knn) {
      ranges_.resize(order_.size());
      for (std::size_t p = 0; p < order_.size(); ++p) {
        ranges_[p] = ranges_1d(sorted_[p], static_cast<std::int64_t>(p), k_);
      }
    }
  } else if (config_.kind == SmootherKind::Knn &&
             static_cast<double>(n) * static_cast<double>(k_) <= 5e7) {
    neighbors_.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(k_));
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto nb = neighbors_nd(x_.row(i), i, k_);
      std::copy(nb.begin(), nb.end(), neighbors_.begin() + i * k_);
    }
  }
}

ConditionalMean::RangeSet ConditionalMean::ranges_1d(double v, std::int64_t self_pos, int k) const {
  const auto groups = static_cast<std::int32_t>(group_start_.size()) - 1;
  auto gsize = [&](std::int32_t g) { return group_start_[g + 1] - group_start_[g]; };
  auto gval = [&](std::int32_t g) { return sorted_[group_start_[g]]; };

  RangeSet out;
  std::int32_t need = k;
  const auto pos = static_cast<std::int32_t>(std::lower_bound(sorted_.begin(), sorted_.end(), v) - sorted_.begin());
  std::int32_t gl;
  std::int32_t gr;
  std::int32_t mid_lo = pos;
  std::int32_t mid_hi = pos;
  if (pos < static_cast<std::int32_t>(sorted_.size()) && sorted_[pos] == v) {
    const std::int32_t g0 = group_of_[pos];
    const std::int32_t s = gsize(g0);
    const std::int32_t gs = group_start_[g0];
    if (s >= need) {
      if (self_pos < 0 || self_pos - gs < need) {
        out.push_back({gs, gs + need});
      } else {
        // Self plus the k-1 lowest-index others of its own value.
        out.push_back({gs, gs + need - 1});
        out.push_back({static_cast<std::int32_t>(self_pos), static_cast<std::int32_t>(self_pos) + 1});
      }
      return out;
    }
    need -= s;
    mid_lo = gs;
    mid_hi = gs + s;
    gl = g0 - 1;
    gr = g0 + 1;
  } else {
    gl = pos > 0 ? group_of_[pos - 1] : -1;
    gr = pos < static_cast<std::int32_t>(sorted_.size()) ? group_of_[pos] : groups;
  }

  while (need > 0) {
    const bool has_l = gl >= 0;
    const bool has_r = gr < groups;
    const double dl = has_l ? v - gval(gl) : std::numeric_limits<double>::infinity();
    const double dr = has_r ? gval(gr) - v : std::numeric_limits<double>::infinity();
    if (has_l && has_r && dl == dr) {
      const std::int32_t sl = gsize(gl);
      const std::int32_t sr = gsize(gr);
      if (sl + sr <= need) {
        need -= sl + sr;
        mid_lo = group_start_[gl];
        mid_hi = group_start_[gr + 1];
        --gl;
        ++gr;
        continue;
      }
      // Equidistant on both sides: lowest sample indices across the two runs.
      std::int32_t ml = 0;
      std::int32_t mr = 0;
      while (ml + mr < need) {
        const bool take_left = mr >= sr ||
                               (ml < sl && order_[group_start_[gl] + ml] < order_[group_start_[gr] + mr]);
        if (take_left) ++ml; else ++mr;
      }
      if (ml > 0) out.push_back({group_start_[gl], group_start_[gl] + ml});
      if (mr > 0) out.push_back({group_start_[gr], group_start_[gr] + mr});
      need = 0;
      break;
    }
    const std::int32_t g = dl < dr ? gl : gr;
    const std::int32_t s = gsize(g);
    if (s <= need) {
      need -= s;
      if (g == gl) {
        mid_lo = group_start_[g];
        --gl;
      } else {
        mid_hi = group_start_[g + 1];
        ++gr;
      }
      continue;
    }
    out.push_back({group_start_[g], group_start_[g] + need});
    need = 0;
  }
  if (mid_hi > mid_lo) out.push_back({mid_lo, mid_hi});
  return out;
}

std::vector<std::int32_t> ConditionalMean::neighbors_nd(const Eigen::Ref<const Eigen::RowVectorXd>& q,
                                                        Eigen::Index self, int k) const {
  const Eigen::Index n = x_.rows();
  std::vector<std::pair<double, std::int32_t>> cand;
  cand.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == self) continue;
    cand.emplace_back((x_.row(j) - q).squaredNorm(), static_cast<std::int32_t>(j));
  }
  std::vector<std::int32_t> out;
  out.reserve(static_cast<std::size_t>(k));
  std::size_t want = static_cast<std::size_t>(k);
  if (self >= 0) {
    out.push_back(static_cast<std::int32_t>(self));
    --want;
  }
  if (want > 0) {
    std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(want - 1), cand.end());
    for (std::size_t t = 0; t < want; ++t) out.push_back(cand[t].second);
  }
  return out;
}

double ConditionalMean::kernel_at(const Eigen::Ref<const Eigen::RowVectorXd>& q, VectorRef z,
                                  Eigen::Index self, bool& underflow) const {
  const double inv = 1.0 / (2.0 * bandwidth_ * bandwidth_);
  double num = 0.0;
  double den = 0.0;
  double other = 0.0;
  auto add = [&](Eigen::Index j, double d2) {
    const double w = std::exp(-d2 * inv);
    num += w * z[j];
    den += w;
    if (j != self) other += w;
  };
  if (x_.cols() == 1) {
    // exp(-d^2 / 2h^2) underflows to zero beyond ~38.6 h.
    const double reach = 38.7 * bandwidth_;
    const double v = q[0];
    auto lo = std::lower_bound(sorted_.begin(), sorted_.end(), v - reach) - sorted_.begin();
    auto hi = std::upper_bound(sorted_.begin(), sorted_.end(), v + reach) - sorted_.begin();
    for (auto p = lo; p < hi; ++p) {
      const double dx = sorted_[p] - v;
      add(order_[p], dx * dx);
    }
  } else {
    for (Eigen::Index j = 0; j < x_.rows(); ++j) add(j, (x_.row(j) - q).squaredNorm());
  }
  underflow = !(other > 0.0);
  return underflow ? 0.0 : num / den;
}

double ConditionalMean::knn_at(Eigen::Index row, const Eigen::Ref<const Eigen::RowVectorXd>& q,
                               VectorRef z, int k) const {
  double s = 0.0;
  if (x_.cols() == 1) {
    const std::int64_t self_pos = row >= 0 ? position_[row] : -1;
    for (const auto& r : ranges_1d(q[0], self_pos, k)) {
      for (auto t = r.begin; t < r.end; ++t) s += z[order_[t]];
    }
  } else {
    for (auto j : neighbors_nd(q, row, k)) s += z[j];
  }
  return s / k;
}

Vector ConditionalMean::smooth(VectorRef z, std::vector<Eigen::Index>* fallbacks) const {
  const Eigen::Index n = x_.rows();
  if (z.size() != n) throw ParameterError("smoother: z length differs from n");
  Vector out(n);
  if (config_.kind == SmootherKind::Kernel) {
    for (Eigen::Index i = 0; i < n; ++i) {
      bool underflow = false;
      out[i] = kernel_at(x_.row(i), z, i, underflow);
      if (underflow) {
        out[i] = knn_at(i, x_.row(i), z, fallback_k_);
        if (fallbacks) fallbacks->push_back(i);
      }
    }
    return out;
  }

  if (x_.cols() == 1) {
    std::vector<double> prefix(order_.size() + 1, 0.0);
    for (std::size_t p = 0; p < order_.size(); ++p) prefix[p + 1] = prefix[p] + z[order_[p]];
    const double inv_k = 1.0 / k_;
    for (std::size_t p = 0; p < order_.size(); ++p) {
      double s = 0.0;
      for (const auto& r : ranges_[p]) {
        if (r.end - r.begin <= 32) {
          for (auto t = r.begin; t < r.end; ++t) s += z[order_[t]];
        } else {
          s += prefix[r.end] - prefix[r.begin];
        }
      }
      out[order_[p]] = s * inv_k;
    }
    return out;
  }

  const double inv_k = 1.0 / k_;
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0.0;
    if (!neighbors_.empty()) {
      const std::int32_t* nb = neighbors_.data() + i * k_;
      for (int t = 0; t < k_; ++t) s += z[nb[t]];
    } else {
      for (auto j : neighbors_nd(x_.row(i), i, k_)) s += z[j];
    }
    out[i] = s * inv_k;
  }
  return out;
}

Vector ConditionalMean::predict(const Matrix& x_new, VectorRef z) const {
  if (x_new.cols() != x_.cols()) throw ParameterError("smoother predict: dimension mismatch");
  if (z.size() != x_.rows()) throw ParameterError("smoother predict: z length differs from n");
  Vector out(x_new.rows());
  for (Eigen::Index i = 0; i < x_new.rows(); ++i) {
    if (config_.kind == SmootherKind::Kernel) {
      bool underflow = false;
      out[i] = kernel_at(x_new.row(i), z, -1, underflow);
      if (!underflow) continue;
    }
    const int k = config_.kind == SmootherKind::Kernel ? fallback_k_ : k_;
    out[i] = knn_at(-1, x_new.row(i), z, k);
  }
  return out;
}

Vector knn_smooth(const Matrix& x, VectorRef z, int k) {
  check_inputs(x, z);
  if (k < 1) throw ParameterError("knn smoother: k must be >= 1");
  if (k > x.rows()) {
    throw ParameterError("knn smoother: k = " + std::to_string(k) + " exceeds n = " + std::to_string(x.rows()));
  }
  return ConditionalMean(x, {SmootherKind::Knn, k, 0.0})(z);
}

KernelSmoothResult kernel_smooth(const Matrix& x, VectorRef z, double bandwidth) {
  check_inputs(x, z);
  if (!(bandwidth > 0.0)) throw ParameterError("kernel smoother: bandwidth must be > 0");
  ConditionalMean cm(x, {SmootherKind::Kernel, 0, bandwidth});
  KernelSmoothResult res;
  res.fitted = cm.smooth(z, &res.fallback_points);
  return res;
}

}  // namespace gaussbound
