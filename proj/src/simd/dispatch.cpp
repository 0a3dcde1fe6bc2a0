#include <atomic>
#include <stdexcept>
#include <string>

#include "fwbrw/simd/kernels.hpp"

namespace fwbrw::simd {

namespace {

bool cpu_has_avx2() {
#if defined(FWBRW_HAVE_AVX2) && (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

std::atomic<int>& active_slot() {
  static std::atomic<int> slot{static_cast<int>(best_isa())};
  return slot;
}

}  // namespace

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2: {
      static const bool has = cpu_has_avx2();
      return has;
    }
  }
  return false;
}

Isa best_isa() { return isa_supported(Isa::avx2) ? Isa::avx2 : Isa::scalar; }

Isa active_isa() { return static_cast<Isa>(active_slot().load(std::memory_order_relaxed)); }

void force_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::runtime_error("simd: instruction set '" + std::string(isa_name(isa)) + "' not available");
  }
  active_slot().store(static_cast<int>(isa), std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

#if defined(FWBRW_HAVE_AVX2)
#define FWBRW_DISPATCH(fn, ...) \
  (active_isa() == Isa::avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define FWBRW_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

std::size_t fw_euler_step(std::span<double> x, std::span<const double> normals, const EulerCoeffs& k) {
  if (normals.size() < x.size()) throw std::invalid_argument("fw_euler_step: fewer normals than sites");
  return FWBRW_DISPATCH(fw_euler_step, x, normals, k);
}

void mkv_chain_apply(std::span<const double> x, std::span<const double> p_in, std::span<double> p_out,
                     std::span<double> scratch_r, std::span<double> scratch_l, const ChainCoeffs& k) {
  const std::size_t n = x.size();
  if (n < 2 || p_in.size() != n || p_out.size() != n || scratch_r.size() != n || scratch_l.size() != n) {
    throw std::invalid_argument("mkv_chain_apply: mismatched buffer sizes");
  }
  FWBRW_DISPATCH(mkv_chain_apply, x, p_in, p_out, scratch_r, scratch_l, k);
}

double mkv_chain_max_rate(std::span<const double> x, const ChainCoeffs& k) {
  return FWBRW_DISPATCH(mkv_chain_max_rate, x, k);
}

double sum(std::span<const double> a) { return FWBRW_DISPATCH(sum, a); }

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  return FWBRW_DISPATCH(dot, a, b);
}

#undef FWBRW_DISPATCH

}  // namespace fwbrw::simd
