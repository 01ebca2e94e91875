// Benchmark: parallel sampling/metric kernels against their serial
// reference implementations, verifying identical results along the way.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "sdp/dist.hpp"
#include "sdp/metrics.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

double time_ms(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void report(const char* name, double serial_ms, double parallel_ms, bool identical) {
  std::printf("%-24s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx   %s\n", name,
              serial_ms, parallel_ms, serial_ms / parallel_ms,
              identical ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t n = 1000000;
  if (argc > 1) n = std::stoull(argv[1]);
#ifdef _OPENMP
  std::printf("threads: %d, samples: %zu\n", omp_get_max_threads(), n);
#else
  std::printf("threads: 1 (no OpenMP), samples: %zu\n", n);
#endif

  const sdp::Distribution d =
      sdp::MarginalGaussian({0.0, 1.0, -1.0}, {1.0, 2.0, 0.5});
  const sdp::Distribution d2 =
      sdp::MarginalGaussian({0.5, 1.0, -1.0}, {1.0, 2.0, 0.5});

  std::vector<sdp::Vector> s_ser, s_par, t_par;
  const double samp_ser = time_ms([&] { s_ser = sdp::sample_chunked_serial(d, n, 7); });
  const double samp_par = time_ms([&] { s_par = sdp::sample_chunked(d, n, 7); });
  report("sample_chunked", samp_ser, samp_par, s_ser == s_par);

  t_par = sdp::sample_chunked(d2, n, 8);
  double tv_s = 0.0, tv_p = 0.0;
  const double tvb_ser = time_ms([&] { tv_s = sdp::tv_binned_serial(s_par, t_par); });
  const double tvb_par = time_ms([&] { tv_p = sdp::tv_binned(s_par, t_par); });
  report("tv_binned", tvb_ser, tvb_par, tv_s == tv_p);

  const std::size_t m = std::max<std::size_t>(n / 20, 1000);
  std::vector<sdp::Vector> a(s_par.begin(), s_par.begin() + m);
  std::vector<sdp::Vector> b(t_par.begin(), t_par.begin() + m);
  double w_s = 0.0, w_p = 0.0;
  const double sw_ser = time_ms([&] { w_s = sdp::sliced_w1_serial(a, b, 64, 9); });
  const double sw_par = time_ms([&] { w_p = sdp::sliced_w1(a, b, 64, 9); });
  report("sliced_w1", sw_ser, sw_par, w_s == w_p);

  return (s_ser == s_par && tv_s == tv_p && w_s == w_p) ? 0 : 1;
}
