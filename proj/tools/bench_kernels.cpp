// Benchmarks the serial reference kernels against their OpenMP variants and
// checks that both produce bitwise-identical results. Also times whole-tree
// encoding with the parallel path enabled vs forced off.
//
// Usage: bench_kernels [--min-ms N] [--sizes 64,256,1024,2048]

#include <chrono>
#include <cstdio>
#include <cstring>
#include <sstream>
#include <string>
#include <vector>

#include "treecomment/encoder.hpp"
#include "treecomment/numeric.hpp"
#include "treecomment/tree.hpp"

using namespace treecomment;

namespace {

volatile double g_sink = 0.0;

double now_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

// Milliseconds per call, measured over at least min_ms of wall time.
template <class F>
double time_op(F&& f, double min_ms) {
  f();  // warmup
  long iters = 1;
  for (;;) {
    const double t0 = now_ms();
    for (long i = 0; i < iters; ++i) f();
    const double elapsed = now_ms() - t0;
    if (elapsed >= min_ms) return elapsed / static_cast<double>(iters);
    iters = elapsed <= 0.0 ? iters * 8 : iters * 2;
  }
}

Vec random_vec(Rng& rng, std::size_t n) {
  Vec v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

Mat random_mat(Rng& rng, int r, int c) {
  Mat m(r, c);
  for (double& x : m.a) x = rng.uniform(-1.0, 1.0);
  return m;
}

struct Row {
  std::string name;
  int n = 0;
  double serial_ms = 0.0;
  double parallel_ms = 0.0;
  bool bitwise = false;
};

void print_row(const Row& r) {
  std::printf("%-10s %6d   %10.4f   %10.4f   %6.2fx   %s\n", r.name.c_str(), r.n, r.serial_ms,
              r.parallel_ms, r.serial_ms / r.parallel_ms, r.bitwise ? "identical" : "DIFFER");
}

bool same_bits(const Vec& a, const Vec& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

ParseNode bench_tree(int breadth, int depth) {
  if (depth == 0) return make_leaf("Identifier", "alpha");
  ParseNode n = make_node("Block");
  for (int i = 0; i < breadth; ++i) n.children.push_back(bench_tree(breadth, depth - 1));
  return n;
}

}  // namespace

int main(int argc, char** argv) {
  double min_ms = 200.0;
  std::vector<int> sizes{64, 256, 1024, 2048};
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--min-ms" && i + 1 < argc) {
      min_ms = std::stod(argv[++i]);
    } else if (arg == "--sizes" && i + 1 < argc) {
      sizes.clear();
      std::istringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) sizes.push_back(std::stoi(item));
    } else {
      std::fprintf(stderr, "usage: %s [--min-ms N] [--sizes 64,256,...]\n", argv[0]);
      return 1;
    }
  }

  std::printf("threads: %d\n", max_threads());
  std::printf("%-10s %6s   %10s   %10s   %7s   %s\n", "kernel", "n", "serial ms", "openmp ms",
              "speedup", "outputs");

  Rng rng(42);
  for (int n : sizes) {
    Mat m = random_mat(rng, n, n);
    Vec v = random_vec(rng, static_cast<std::size_t>(n));
    Vec g = random_vec(rng, static_cast<std::size_t>(n));
    Vec out_s(static_cast<std::size_t>(n)), out_p(static_cast<std::size_t>(n));

    Row r{"matvec", n, 0, 0, false};
    r.serial_ms = time_op([&] { kernels::matvec_serial(m, v, out_s); g_sink = out_s[0]; }, min_ms);
    r.parallel_ms =
        time_op([&] { kernels::matvec_parallel(m, v, out_p); g_sink = out_p[0]; }, min_ms);
    kernels::matvec_serial(m, v, out_s);
    kernels::matvec_parallel(m, v, out_p);
    r.bitwise = same_bits(out_s, out_p);
    print_row(r);

    r = Row{"matvec_t", n, 0, 0, false};
    r.serial_ms =
        time_op([&] { kernels::matvec_t_serial(m, v, out_s); g_sink = out_s[0]; }, min_ms);
    r.parallel_ms =
        time_op([&] { kernels::matvec_t_parallel(m, v, out_p); g_sink = out_p[0]; }, min_ms);
    kernels::matvec_t_serial(m, v, out_s);
    kernels::matvec_t_parallel(m, v, out_p);
    r.bitwise = same_bits(out_s, out_p);
    print_row(r);

    r = Row{"add_outer", n, 0, 0, false};
    Mat acc_s(n, n), acc_p(n, n);
    r.serial_ms = time_op([&] { kernels::add_outer_serial(acc_s, g, v); g_sink = acc_s.a[0]; },
                          min_ms);
    r.parallel_ms = time_op([&] { kernels::add_outer_parallel(acc_p, g, v); g_sink = acc_p.a[0]; },
                            min_ms);
    acc_s = Mat(n, n);
    acc_p = Mat(n, n);
    kernels::add_outer_serial(acc_s, g, v);
    kernels::add_outer_parallel(acc_p, g, v);
    r.bitwise = same_bits(acc_s.a, acc_p.a);
    print_row(r);

    r = Row{"axpy", n, 0, 0, false};
    const std::size_t len = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    Vec x = random_vec(rng, len);
    Vec ys(len, 0.0), yp(len, 0.0);
    r.serial_ms = time_op([&] { kernels::axpy_serial(0.5, x, ys); g_sink = ys[0]; }, min_ms);
    r.parallel_ms = time_op([&] { kernels::axpy_parallel(0.5, x, yp); g_sink = yp[0]; }, min_ms);
    ys.assign(len, 0.0);
    yp.assign(len, 0.0);
    kernels::axpy_serial(0.5, x, ys);
    kernels::axpy_parallel(0.5, x, yp);
    r.bitwise = same_bits(ys, yp);
    print_row(r);
  }

  // Whole-tree encoding: the dispatcher picks the OpenMP path when a node's
  // matvec is big enough; forcing the grain sky-high pins it to serial.
  const int dim = 256;
  ParseNode tree = bench_tree(4, 4);  // 341 nodes
  CodeRnnParams params = make_encoder_params({&tree}, dim);
  Rng prng(7);
  init_uniform(params.tensors(), prng);

  const std::size_t default_grain = kernels::parallel_grain;
  kernels::parallel_grain = ~std::size_t{0};
  Vec root_serial;
  const double enc_serial =
      time_op([&] { root_serial = encode(tree, params, TreeModel::Sum).root(); }, min_ms);
  kernels::parallel_grain = default_grain;
  Vec root_parallel;
  const double enc_parallel =
      time_op([&] { root_parallel = encode(tree, params, TreeModel::Sum).root(); }, min_ms);

  std::printf("%-10s %6d   %10.4f   %10.4f   %6.2fx   %s\n", "encode", node_count(tree) > 0
              ? static_cast<int>(node_count(tree)) : 0, enc_serial, enc_parallel,
              enc_serial / enc_parallel, same_bits(root_serial, root_parallel)
              ? "identical" : "DIFFER");
  return 0;
}
