#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include "qualbound/linalg.hpp"

namespace qualbound {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// One Philox4x32-10 block: a keyed bijection of the 128-bit counter.
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) noexcept;

/// Counter-based random stream.
///
/// The key is the 64-bit seed and the upper half of the counter is the 64-bit
/// stream id, so distinct (seed, stream_id) pairs index disjoint regions of the
/// Philox sequence. A Monte Carlo replicate owns stream_id = replicate index;
/// its draws therefore do not depend on which worker runs it.
///
/// Satisfies UniformRandomBitGenerator with 64-bit output.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  double normal();
  /// Chi-square with real, positive degrees of freedom.
  double chi_squared(double df);
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  PhiloxCounter buffer_{};
  int used_ = 4;  // 32-bit words of buffer_ already consumed
};

/// mean + chol * z with z i.i.d. standard normal.
Vector mvn_draw(const Vector& mean, const Matrix& chol, RngStream& rng);

enum class WishartMethod {
  automatic,      // outer products for integer df, Bartlett otherwise
  outer_product,  // requires integer df
  bartlett,
};

/// Draw from Wishart(df, L L^T) where `scale_chol` is L.
///
/// Integer df is realized as a sum of df outer products of N(0, L L^T) draws;
/// other df use the Bartlett decomposition with chi-distributed diagonal.
/// Throws DegenerateWishart when df < dim.
Matrix wishart_draw(double df, const Matrix& scale_chol, RngStream& rng,
                    WishartMethod method = WishartMethod::automatic);

}  // namespace qualbound
