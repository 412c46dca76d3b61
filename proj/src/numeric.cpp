#include "treecomment/numeric.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace treecomment {

namespace kernels {

void matvec_serial(const Mat& m, std::span<const double> v, std::span<double> out) {
  for (int i = 0; i < m.rows; ++i) {
    const double* row = m.a.data() + static_cast<std::size_t>(i) * m.cols;
    double s = 0.0;
    for (int j = 0; j < m.cols; ++j) s += row[j] * v[j];
    out[i] = s;
  }
}

void matvec_parallel(const Mat& m, std::span<const double> v, std::span<double> out) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m.rows; ++i) {
    const double* row = m.a.data() + static_cast<std::size_t>(i) * m.cols;
    double s = 0.0;
    for (int j = 0; j < m.cols; ++j) s += row[j] * v[j];
    out[i] = s;
  }
}

void matvec_t_serial(const Mat& m, std::span<const double> v, std::span<double> out) {
  for (int j = 0; j < m.cols; ++j) {
    double s = 0.0;
    for (int i = 0; i < m.rows; ++i) s += m.a[static_cast<std::size_t>(i) * m.cols + j] * v[i];
    out[j] = s;
  }
}

void matvec_t_parallel(const Mat& m, std::span<const double> v, std::span<double> out) {
#pragma omp parallel for schedule(static)
  for (int j = 0; j < m.cols; ++j) {
    double s = 0.0;
    for (int i = 0; i < m.rows; ++i) s += m.a[static_cast<std::size_t>(i) * m.cols + j] * v[i];
    out[j] = s;
  }
}

void add_outer_serial(Mat& m, std::span<const double> g, std::span<const double> v) {
  for (int i = 0; i < m.rows; ++i) {
    double* row = m.a.data() + static_cast<std::size_t>(i) * m.cols;
    const double gi = g[i];
    for (int j = 0; j < m.cols; ++j) row[j] += gi * v[j];
  }
}

void add_outer_parallel(Mat& m, std::span<const double> g, std::span<const double> v) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m.rows; ++i) {
    double* row = m.a.data() + static_cast<std::size_t>(i) * m.cols;
    const double gi = g[i];
    for (int j = 0; j < m.cols; ++j) row[j] += gi * v[j];
  }
}

void axpy_serial(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void axpy_parallel(double a, std::span<const double> x, std::span<double> y) {
  const std::int64_t n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) y[i] += a * x[i];
}

}  // namespace kernels

namespace {

bool use_parallel(std::size_t work) {
  return work >= kernels::parallel_grain && max_threads() > 1;
}

}  // namespace

Vec matvec(const Mat& m, const Vec& v) {
  if (static_cast<std::size_t>(m.cols) != v.size()) {
    throw std::invalid_argument("matvec: dimension mismatch: matrix is " + std::to_string(m.rows) +
                                "x" + std::to_string(m.cols) + ", vector has length " +
                                std::to_string(v.size()));
  }
  Vec out(static_cast<std::size_t>(m.rows));
  if (use_parallel(m.size()))
    kernels::matvec_parallel(m, v, out);
  else
    kernels::matvec_serial(m, v, out);
  return out;
}

Vec matvec_t(const Mat& m, const Vec& v) {
  if (static_cast<std::size_t>(m.rows) != v.size()) {
    throw std::invalid_argument("matvec_t: dimension mismatch: matrix is " + std::to_string(m.rows) +
                                "x" + std::to_string(m.cols) + ", vector has length " +
                                std::to_string(v.size()));
  }
  Vec out(static_cast<std::size_t>(m.cols));
  if (use_parallel(m.size()))
    kernels::matvec_t_parallel(m, v, out);
  else
    kernels::matvec_t_serial(m, v, out);
  return out;
}

void add_outer(Mat& m, const Vec& g, const Vec& v) {
  if (static_cast<std::size_t>(m.rows) != g.size() || static_cast<std::size_t>(m.cols) != v.size()) {
    throw std::invalid_argument("add_outer: dimension mismatch: matrix is " +
                                std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                                ", outer product is " + std::to_string(g.size()) + "x" +
                                std::to_string(v.size()));
  }
  if (use_parallel(m.size()))
    kernels::add_outer_parallel(m, g, v);
  else
    kernels::add_outer_serial(m, g, v);
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("axpy: length mismatch: " + std::to_string(x.size()) + " vs " +
                                std::to_string(y.size()));
  }
  if (use_parallel(x.size()))
    kernels::axpy_parallel(a, x, y);
  else
    kernels::axpy_serial(a, x, y);
}

Vec relu(const Vec& v) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] > 0.0 ? v[i] : 0.0;
  return out;
}

Vec sigmoid(const Vec& v) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-v[i]));
  return out;
}

Vec tanh_vec(const Vec& v) {
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
  return out;
}

Vec softmax(const Vec& v) {
  if (v.empty()) throw std::invalid_argument("softmax: empty input");
  double mx = v[0];
  for (double x : v) mx = std::max(mx, x);
  Vec out(v.size());
  double z = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    z += out[i];
  }
  for (double& x : out) x /= z;
  return out;
}

double cross_entropy(const Vec& pred, int target) {
  if (target < 0 || static_cast<std::size_t>(target) >= pred.size()) {
    throw std::out_of_range("cross_entropy: target index " + std::to_string(target) +
                            " out of range for " + std::to_string(pred.size()) + " classes");
  }
  // ReLU-heavy nets can emit exact zeros early on; floor before the log.
  return -std::log(std::max(pred[static_cast<std::size_t>(target)], 1e-12));
}

namespace {

// Total order on doubles (sign-magnitude), so ties in the sort below can only
// be bitwise-identical values.
std::uint64_t sortable_bits(double x) {
  auto u = std::bit_cast<std::uint64_t>(x);
  return (u & 0x8000000000000000ull) ? ~u : (u | 0x8000000000000000ull);
}

}  // namespace

Vec accumulate_canonical(const std::vector<const Vec*>& terms) {
  if (terms.empty()) return {};
  const std::size_t dim = terms[0]->size();
  Vec out(dim, 0.0);
  if (terms.size() == 1) return *terms[0];
  std::vector<double> column(terms.size());
  for (std::size_t d = 0; d < dim; ++d) {
    for (std::size_t t = 0; t < terms.size(); ++t) column[t] = (*terms[t])[d];
    std::sort(column.begin(), column.end(),
              [](double a, double b) { return sortable_bits(a) < sortable_bits(b); });
    double s = 0.0;
    for (double x : column) s += x;
    out[d] = s;
  }
  return out;
}

void AdaGrad::init(const std::vector<NamedTensor>& params) {
  accum.clear();
  accum.reserve(params.size());
  for (const auto& p : params) accum.emplace_back(p.data->size(), 0.0);
}

void AdaGrad::step(const std::vector<NamedTensor>& params, const std::vector<NamedTensor>& grads) {
  if (params.size() != grads.size() || params.size() != accum.size()) {
    throw std::invalid_argument("adagrad: tensor list shape mismatch (" +
                                std::to_string(params.size()) + " params, " +
                                std::to_string(grads.size()) + " grads, " +
                                std::to_string(accum.size()) + " accumulators)");
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    Vec& p = *params[t].data;
    const Vec& g = *grads[t].data;
    Vec& acc = accum[t];
    if (p.size() != g.size() || p.size() != acc.size()) {
      throw std::invalid_argument("adagrad: shape mismatch in tensor '" + params[t].name + "'");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      acc[i] += g[i] * g[i];
      p[i] -= lr * g[i] / (std::sqrt(acc[i]) + eps);
    }
  }
}

std::vector<Vec> finite_diff_gradient(const std::function<double()>& loss,
                                      const std::vector<NamedTensor>& params, double h) {
  std::vector<Vec> grads;
  grads.reserve(params.size());
  for (const auto& p : params) {
    Vec g(p.data->size());
    for (std::size_t i = 0; i < p.data->size(); ++i) {
      const double saved = (*p.data)[i];
      (*p.data)[i] = saved + h;
      const double up = loss();
      (*p.data)[i] = saved - h;
      const double down = loss();
      (*p.data)[i] = saved;
      g[i] = (up - down) / (2.0 * h);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

Vec finite_diff_gradient(const std::function<double()>& loss, Vec& params, double h) {
  std::vector<NamedTensor> wrap{{"params", &params}};
  return finite_diff_gradient(loss, wrap, h)[0];
}

double rel_err(double a, double b) {
  const double denom = std::max({std::fabs(a), std::fabs(b), 1e-8});
  return std::fabs(a - b) / denom;
}

std::uint64_t Rng::next_u64() {
  // splitmix64
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int lo, int hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(next_u64() % span);
}

void init_uniform(const std::vector<NamedTensor>& params, Rng& rng, double scale) {
  for (const auto& p : params)
    for (double& x : *p.data) x = rng.uniform(-scale, scale);
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace treecomment
