#include "qualbound/rng.hpp"

#include <cmath>
#include <sstream>

#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "qualbound/error.hpp"

namespace qualbound {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) noexcept {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
    : seed_(seed), stream_id_(stream_id) {}

void RngStream::refill() noexcept {
  const PhiloxCounter ctr{static_cast<std::uint32_t>(block_),
                          static_cast<std::uint32_t>(block_ >> 32),
                          static_cast<std::uint32_t>(stream_id_),
                          static_cast<std::uint32_t>(stream_id_ >> 32)};
  const PhiloxKey key{static_cast<std::uint32_t>(seed_),
                      static_cast<std::uint32_t>(seed_ >> 32)};
  buffer_ = philox4x32_10(ctr, key);
  ++block_;
  used_ = 0;
}

RngStream::result_type RngStream::operator()() noexcept {
  if (used_ > 2) refill();
  const std::uint64_t lo = buffer_[used_];
  const std::uint64_t hi = buffer_[used_ + 1];
  used_ += 2;
  return (hi << 32) | lo;
}

double RngStream::uniform() noexcept {
  // 53 random bits, shifted by half an ulp so 0 is never returned.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  boost::random::normal_distribution<double> dist;
  return dist(*this);
}

double RngStream::chi_squared(double df) {
  boost::random::chi_squared_distribution<double> dist(df);
  return dist(*this);
}

std::uint64_t RngStream::below(std::uint64_t bound) noexcept {
  boost::random::uniform_int_distribution<std::uint64_t> dist(0, bound - 1);
  return dist(*this);
}

Vector mvn_draw(const Vector& mean, const Matrix& chol, RngStream& rng) {
  if (chol.rows() != mean.size() || chol.cols() != mean.size()) {
    fail(ErrorCode::InvalidParameter, "mvn_draw: dimension mismatch");
  }
  Vector z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + chol.triangularView<Eigen::Lower>() * z;
}

Matrix wishart_draw(double df, const Matrix& scale_chol, RngStream& rng,
                    WishartMethod method) {
  const Eigen::Index dim = scale_chol.rows();
  if (scale_chol.cols() != dim || dim == 0) {
    fail(ErrorCode::InvalidParameter, "wishart_draw: scale must be square");
  }
  if (!(df >= static_cast<double>(dim))) {
    std::ostringstream msg;
    msg << "wishart_draw: df " << df << " below dimension " << dim;
    fail(ErrorCode::DegenerateWishart, msg.str());
  }
  const bool integral = std::floor(df) == df;
  if (method == WishartMethod::automatic) {
    method = integral ? WishartMethod::outer_product : WishartMethod::bartlett;
  }
  if (method == WishartMethod::outer_product && !integral) {
    fail(ErrorCode::InvalidParameter,
         "wishart_draw: outer-product method needs integer df");
  }

  Matrix factor;  // A with W = L A A^T L^T
  if (method == WishartMethod::outer_product) {
    const auto count = static_cast<Eigen::Index>(df);
    Matrix z(dim, count);
    for (Eigen::Index c = 0; c < count; ++c)
      for (Eigen::Index r = 0; r < dim; ++r) z(r, c) = rng.normal();
    factor = std::move(z);
  } else {
    Matrix a = Matrix::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      a(i, i) = std::sqrt(rng.chi_squared(df - static_cast<double>(i)));
      for (Eigen::Index j = 0; j < i; ++j) a(i, j) = rng.normal();
    }
    factor = std::move(a);
  }
  const Matrix lf = scale_chol.triangularView<Eigen::Lower>() * factor;
  Matrix w = Matrix::Zero(dim, dim);
  w.selfadjointView<Eigen::Lower>().rankUpdate(lf);
  return w.selfadjointView<Eigen::Lower>();
}

}  // namespace qualbound
