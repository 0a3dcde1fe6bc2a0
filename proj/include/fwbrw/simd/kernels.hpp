#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference
// implementation and an AVX2/FMA variant; the variant is chosen once at
// runtime from CPUID and can be pinned (tests compare the two).

#include <cstddef>
#include <span>
#include <string_view>

namespace fwbrw::simd {

enum class Isa { scalar, avx2 };

bool isa_supported(Isa isa);
Isa best_isa();
Isa active_isa();
// Pins the dispatch target; throws std::runtime_error if the CPU lacks it.
void force_isa(Isa isa);
std::string_view isa_name(Isa isa);

// One Euler-Maruyama step of
//   dx = [c (target - x) + sel x(1-x) + gain (1-x) - loss x] dt + sqrt(d x(1-x)) dW
// applied entrywise with dW = sqrt(dt) * normals[i], followed by clamping to
// [0,1]. Returns the number of entries that had to be clamped.
struct EulerCoeffs {
  double c = 0.0;
  double target = 0.0;
  double sel = 0.0;
  double gain = 0.0;
  double loss = 0.0;
  double d = 0.0;
  double dt = 0.0;
};

// Per-entry scalar update shared by every implementation path.
inline double euler_update(double x, double z, const EulerCoeffs& k, bool& clamped) {
  double var = x * (1.0 - x);
  if (var < 0.0) var = 0.0;
  const double drift = k.c * (k.target - x) + k.sel * var + k.gain * (1.0 - x) - k.loss * x;
  double next = x + drift * k.dt + __builtin_sqrt(k.d * var * k.dt) * z;
  clamped = false;
  if (next < 0.0) {
    next = 0.0;
    clamped = true;
  } else if (next > 1.0) {
    next = 1.0;
    clamped = true;
  }
  return next;
}

std::size_t fw_euler_step(std::span<double> x, std::span<const double> normals, const EulerCoeffs& k);

// Explicit step of the nearest-neighbour jump chain that discretizes the
// McKean-Vlasov forward equation on the nodes x_i = i h:
//   right rate  r_i = max(b_i, 0)/h + D_i/h^2,  left rate l_i = max(-b_i, 0)/h + D_i/h^2,
//   b_i = c (mean - x_i) + s x_i (1 - x_i),     D_i = (d/2) x_i (1 - x_i),
//   p_out_i = p_i + dt (r_{i-1} p_{i-1} + l_{i+1} p_{i+1} - (r_i + l_i) p_i),
// with no flow out of [0,1]. scratch_r / scratch_l receive r_i and l_i.
struct ChainCoeffs {
  double c = 0.0;
  double s = 0.0;
  double d = 0.0;
  double mean = 0.0;
  double h = 0.0;
  double dt = 0.0;
};

void mkv_chain_apply(std::span<const double> x, std::span<const double> p_in, std::span<double> p_out,
                     std::span<double> scratch_r, std::span<double> scratch_l, const ChainCoeffs& k);

// Largest total jump rate r_i + l_i; explicit steps need dt * rate <= 1.
double mkv_chain_max_rate(std::span<const double> x, const ChainCoeffs& k);

double sum(std::span<const double> a);
double dot(std::span<const double> a, std::span<const double> b);

namespace scalar {
std::size_t fw_euler_step(std::span<double> x, std::span<const double> normals, const EulerCoeffs& k);
void mkv_chain_apply(std::span<const double> x, std::span<const double> p_in, std::span<double> p_out,
                     std::span<double> scratch_r, std::span<double> scratch_l, const ChainCoeffs& k);
double mkv_chain_max_rate(std::span<const double> x, const ChainCoeffs& k);
double sum(std::span<const double> a);
double dot(std::span<const double> a, std::span<const double> b);
}  // namespace scalar

namespace avx2 {
std::size_t fw_euler_step(std::span<double> x, std::span<const double> normals, const EulerCoeffs& k);
void mkv_chain_apply(std::span<const double> x, std::span<const double> p_in, std::span<double> p_out,
                     std::span<double> scratch_r, std::span<double> scratch_l, const ChainCoeffs& k);
double mkv_chain_max_rate(std::span<const double> x, const ChainCoeffs& k);
double sum(std::span<const double> a);
double dot(std::span<const double> a, std::span<const double> b);
}  // namespace avx2

}  // namespace fwbrw::simd
