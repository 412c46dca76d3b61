// Dense vector/matrix kernels, activations, loss, AdaGrad and the
// finite-difference gradient oracle. Everything is double precision.
//
// Each kernel ships in two versions: a serial reference and an OpenMP
// one. The parallel loops split work per output element and keep the
// per-element evaluation order identical to the serial code, so both
// versions produce bitwise-identical results; `kernels::parallel_grain`
// decides when the parallel path is worth taking.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace treecomment {

using Vec = std::vector<double>;

struct Mat {
  int rows = 0;
  int cols = 0;
  Vec a;  // row-major, rows*cols entries

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
  std::span<double> row(int r) { return {a.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }
  std::span<const double> row(int r) const { return {a.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)}; }
  std::size_t size() const { return a.size(); }
};

namespace kernels {

// Work sizes below this run serially; tests override it to force either path.
inline std::size_t parallel_grain = std::size_t{1} << 15;

void matvec_serial(const Mat& m, std::span<const double> v, std::span<double> out);
void matvec_parallel(const Mat& m, std::span<const double> v, std::span<double> out);

// out = m^T * v
void matvec_t_serial(const Mat& m, std::span<const double> v, std::span<double> out);
void matvec_t_parallel(const Mat& m, std::span<const double> v, std::span<double> out);

// m += g * v^T
void add_outer_serial(Mat& m, std::span<const double> g, std::span<const double> v);
void add_outer_parallel(Mat& m, std::span<const double> g, std::span<const double> v);

// y += a * x
void axpy_serial(double a, std::span<const double> x, std::span<double> y);
void axpy_parallel(double a, std::span<const double> x, std::span<double> y);

}  // namespace kernels

// Dispatching wrappers used by the models.
Vec matvec(const Mat& m, const Vec& v);
Vec matvec_t(const Mat& m, const Vec& v);
void add_outer(Mat& m, const Vec& g, const Vec& v);
void axpy(double a, std::span<const double> x, std::span<double> y);

Vec relu(const Vec& v);
Vec sigmoid(const Vec& v);
Vec tanh_vec(const Vec& v);
Vec softmax(const Vec& v);

// -log(pred[target]) with a 1e-12 probability floor.
double cross_entropy(const Vec& pred, int target);

// Sums `terms` in an order canonicalized by value, so the result does not
// depend on how the terms were ordered by the caller. Used by the tree
// encoder, where child order must not leak into the output bits.
Vec accumulate_canonical(const std::vector<const Vec*>& terms);

// A parameter or gradient tensor exposed for the optimizer, the gradient
// checker and the checkpoint writer. Shape bookkeeping stays with the owner.
struct NamedTensor {
  std::string name;
  Vec* data = nullptr;
};

struct AdaGrad {
  double lr = 0.05;
  double eps = 1e-8;
  std::vector<Vec> accum;

  void init(const std::vector<NamedTensor>& params);
  // accum += g^2; p -= lr * g / (sqrt(accum) + eps), per scalar.
  void step(const std::vector<NamedTensor>& params, const std::vector<NamedTensor>& grads);
};

// Central differences (f(x+h) - f(x-h)) / 2h for every scalar in `params`.
// `loss` is re-evaluated after each perturbation; params are restored.
std::vector<Vec> finite_diff_gradient(const std::function<double()>& loss,
                                      const std::vector<NamedTensor>& params, double h);
Vec finite_diff_gradient(const std::function<double()>& loss, Vec& params, double h);

// Relative error with denominator max(|a|, |b|, 1e-8).
double rel_err(double a, double b);

// Deterministic PRNG; does not depend on libstdc++ distribution internals.
struct Rng {
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  std::uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  int uniform_int(int lo, int hi);       // [lo, hi] inclusive

  template <class T>
  void shuffle(std::vector<T>& xs) {
    for (std::size_t i = xs.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<int>(i) - 1));
      std::swap(xs[i - 1], xs[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// Fills every tensor with uniform [-scale, scale) draws.
void init_uniform(const std::vector<NamedTensor>& params, Rng& rng, double scale = 0.1);

int max_threads();

}  // namespace treecomment
