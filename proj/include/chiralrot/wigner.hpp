#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "chiralrot/error.hpp"
#include "chiralrot/rot_state.hpp"

// Wigner 3j symbols for integer angular momenta, evaluated exactly.
//
// The Racah sum is carried out on prime-factorised factorials: every term is
// brought to a common denominator so the sum is a single big integer, and the
// square-root prefactor stays a factorised rational. The only rounding happens
// in the final conversion to double.
namespace chiralrot::wigner {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

struct ThreeJArgs {
  int j1 = 0, j2 = 0, j3 = 0;
  int m1 = 0, m2 = 0, m3 = 0;

  constexpr bool valid() const {
    return j1 >= 0 && j2 >= 0 && j3 >= 0 && std::abs(m1) <= j1 &&
           std::abs(m2) <= j2 && std::abs(m3) <= j3;
  }
};

/// Exact value: sign * sqrt(square). sign is 0 for a vanishing symbol.
struct ExactThreeJ {
  int sign = 0;
  Rational square{0};

  double to_double() const {
    if (sign == 0) return 0.0;
    using Float = boost::multiprecision::cpp_bin_float_50;
    Float num(boost::multiprecision::numerator(square));
    Float den(boost::multiprecision::denominator(square));
    Float root = boost::multiprecision::sqrt(num / den);
    return sign * root.convert_to<double>();
  }
};

namespace detail {

inline std::vector<int> primes_upto(int n) {
  std::vector<int> primes;
  if (n < 2) return primes;
  std::vector<bool> composite(static_cast<std::size_t>(n) + 1, false);
  for (int p = 2; p <= n; ++p) {
    if (composite[p]) continue;
    primes.push_back(p);
    for (long long q = static_cast<long long>(p) * p; q <= n; q += p)
      composite[static_cast<std::size_t>(q)] = true;
  }
  return primes;
}

// Exponent of p in n! (Legendre's formula).
inline int factorial_exponent(int n, int p) {
  int e = 0;
  while (n > 0) {
    n /= p;
    e += n;
  }
  return e;
}

// Factorised rational: exponent per prime, aligned with a prime table.
class Factorised {
 public:
  explicit Factorised(const std::vector<int>& primes)
      : primes_(&primes), exps_(primes.size(), 0) {}

  void mul_factorial(int n) { add_factorial(n, +1); }
  void div_factorial(int n) { add_factorial(n, -1); }

  int exponent(std::size_t i) const { return exps_[i]; }
  void set_exponent(std::size_t i, int e) { exps_[i] = e; }
  std::size_t size() const { return exps_.size(); }

  BigInt positive_part() const { return part(+1); }
  BigInt negative_part() const { return part(-1); }

 private:
  void add_factorial(int n, int sgn) {
    for (std::size_t i = 0; i < exps_.size(); ++i) {
      int p = (*primes_)[i];
      if (p > n) break;
      exps_[i] += sgn * factorial_exponent(n, p);
    }
  }

  BigInt part(int sgn) const {
    BigInt result = 1;
    for (std::size_t i = 0; i < exps_.size(); ++i) {
      int e = sgn * exps_[i];
      if (e > 0) result *= boost::multiprecision::pow(BigInt((*primes_)[i]), e);
    }
    return result;
  }

  const std::vector<int>* primes_;
  std::vector<int> exps_;
};

inline bool triangle(int a, int b, int c) {
  return c >= std::abs(a - b) && c <= a + b;
}

}  // namespace detail

/// Exact 3j symbol. Invalid or non-coupling arguments give zero.
inline ExactThreeJ three_j_exact(const ThreeJArgs& a) {
  ExactThreeJ out;
  if (!a.valid()) return out;
  if (a.m1 + a.m2 + a.m3 != 0) return out;
  if (!detail::triangle(a.j1, a.j2, a.j3)) return out;
  const int jsum = a.j1 + a.j2 + a.j3;
  if (a.m1 == 0 && a.m2 == 0 && a.m3 == 0 && jsum % 2 != 0) return out;

  const int kmin = std::max({0, a.j2 - a.j3 - a.m1, a.j1 - a.j3 + a.m2});
  const int kmax = std::min({a.j1 + a.j2 - a.j3, a.j1 - a.m1, a.j2 + a.m2});
  if (kmin > kmax) return out;

  const auto primes = detail::primes_upto(jsum + 1);

  // Squared prefactor: triangle coefficient times the six (j +- m)!.
  detail::Factorised prefactor(primes);
  prefactor.mul_factorial(a.j1 + a.j2 - a.j3);
  prefactor.mul_factorial(a.j1 - a.j2 + a.j3);
  prefactor.mul_factorial(-a.j1 + a.j2 + a.j3);
  prefactor.div_factorial(jsum + 1);
  prefactor.mul_factorial(a.j1 + a.m1);
  prefactor.mul_factorial(a.j1 - a.m1);
  prefactor.mul_factorial(a.j2 + a.m2);
  prefactor.mul_factorial(a.j2 - a.m2);
  prefactor.mul_factorial(a.j3 + a.m3);
  prefactor.mul_factorial(a.j3 - a.m3);

  std::vector<detail::Factorised> denominators;
  denominators.reserve(static_cast<std::size_t>(kmax - kmin + 1));
  for (int k = kmin; k <= kmax; ++k) {
    detail::Factorised d(primes);
    d.mul_factorial(k);
    d.mul_factorial(a.j1 + a.j2 - a.j3 - k);
    d.mul_factorial(a.j1 - a.m1 - k);
    d.mul_factorial(a.j2 + a.m2 - k);
    d.mul_factorial(a.j3 - a.j2 + a.m1 + k);
    d.mul_factorial(a.j3 - a.j1 - a.m2 + k);
    denominators.push_back(std::move(d));
  }

  // Common denominator D = prod p^max_k(e_k); numerators D / d_k are integers.
  detail::Factorised common(primes);
  for (std::size_t i = 0; i < primes.size(); ++i) {
    int e = 0;
    for (const auto& d : denominators) e = std::max(e, d.exponent(i));
    common.set_exponent(i, e);
  }

  BigInt sum = 0;
  for (int k = kmin; k <= kmax; ++k) {
    const auto& d = denominators[static_cast<std::size_t>(k - kmin)];
    detail::Factorised ratio(primes);
    for (std::size_t i = 0; i < primes.size(); ++i)
      ratio.set_exponent(i, common.exponent(i) - d.exponent(i));
    BigInt term = ratio.positive_part();
    if (k % 2 == 0)
      sum += term;
    else
      sum -= term;
  }
  if (sum == 0) return out;

  // square = sum^2 * prefactor / D^2
  detail::Factorised scale(primes);
  for (std::size_t i = 0; i < primes.size(); ++i)
    scale.set_exponent(i, prefactor.exponent(i) - 2 * common.exponent(i));
  Rational square(BigInt(sum * sum * scale.positive_part()),
                  scale.negative_part());

  const int phase_exp = a.j1 - a.j2 - a.m3;
  const int phase = (phase_exp % 2 == 0) ? 1 : -1;
  out.sign = phase * (sum > 0 ? 1 : -1);
  out.square = square;
  return out;
}

namespace detail {

class ThreeJCache {
 public:
  static ThreeJCache& instance() {
    static ThreeJCache cache;
    return cache;
  }

  double get(const ThreeJArgs& a) {
    const auto key = pack(a);
    if (!key) return three_j_exact(a).to_double();
    {
      std::shared_lock lock(mutex_);
      if (auto it = table_.find(*key); it != table_.end()) return it->second;
    }
    const double value = three_j_exact(a).to_double();
    std::unique_lock lock(mutex_);
    table_.emplace(*key, value);
    return value;
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return table_.size();
  }

 private:
  // 10 bits per field; m is stored with an offset of 512.
  static std::optional<std::uint64_t> pack(const ThreeJArgs& a) {
    constexpr int limit = 511;
    for (int j : {a.j1, a.j2, a.j3})
      if (j > limit) return std::nullopt;
    std::uint64_t key = 0;
    for (int v : {a.j1, a.j2, a.j3, a.m1 + 512, a.m2 + 512, a.m3 + 512})
      key = (key << 10) | static_cast<std::uint64_t>(v);
    return key;
  }

  mutable std::shared_mutex mutex_;
  std::unordered_map<std::uint64_t, double> table_;
};

}  // namespace detail

/// Memoised floating-point 3j symbol; safe for concurrent callers.
inline double three_j(const ThreeJArgs& a) {
  if (!a.valid() || a.m1 + a.m2 + a.m3 != 0 ||
      !detail::triangle(a.j1, a.j2, a.j3))
    return 0.0;
  return detail::ThreeJCache::instance().get(a);
}

inline double three_j(int j1, int j2, int j3, int m1, int m2, int m3) {
  return three_j(ThreeJArgs{j1, j2, j3, m1, m2, m3});
}

struct RotIntegralArgs {
  RotState final_state;
  RotState initial_state;
  int sigma = 0;        // lab-frame helicity of the field
  int sigma_prime = 0;  // molecule-frame spherical component of the dipole
};

/// <Jf Kf Mf| D^{1*}_{sigma sigma'} |Ji Ki Mi> for normalised symmetric-top
/// states: a phase, sqrt((2Jf+1)(2Ji+1)) and two 3j symbols.
inline double rot_integral(const RotIntegralArgs& a) {
  const RotState& f = a.final_state;
  const RotState& i = a.initial_state;
  if (!f.valid() || !i.valid())
    throw Error(ErrorCode::InvalidArgument, "rot_integral: invalid |J K M> label");
  if (std::abs(a.sigma) > 1 || std::abs(a.sigma_prime) > 1)
    throw Error(ErrorCode::InvalidArgument,
                "rot_integral: sigma and sigma' must lie in {-1, 0, 1}");
  if (f.M != i.M + a.sigma || f.K != i.K + a.sigma_prime) return 0.0;
  if (std::abs(f.J - i.J) > 1) return 0.0;

  const double lab = three_j(f.J, 1, i.J, f.M, -a.sigma, -i.M);
  if (lab == 0.0) return 0.0;
  const double body = three_j(f.J, 1, i.J, f.K, -a.sigma_prime, -i.K);
  if (body == 0.0) return 0.0;

  const int phase_exp = -i.K + i.M + a.sigma_prime - a.sigma;
  const double phase = (phase_exp % 2 == 0) ? 1.0 : -1.0;
  return phase * std::sqrt(static_cast<double>((2 * f.J + 1) * (2 * i.J + 1))) *
         lab * body;
}

inline double rot_integral(const RotState& final_state,
                           const RotState& initial_state, int sigma,
                           int sigma_prime) {
  return rot_integral(RotIntegralArgs{final_state, initial_state, sigma, sigma_prime});
}

}  // namespace chiralrot::wigner
