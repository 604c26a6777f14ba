#include "pseal/rs.hpp"

#include <array>
#include <string>

#include "pseal/error.hpp"

namespace pseal::rs {

namespace {

struct Tables {
  std::array<std::uint8_t, 512> exp{};
  std::array<int, 256> log{};
  Tables() {
    unsigned x = 1;
    for (int i = 0; i < 255; ++i) {
      exp[i] = static_cast<std::uint8_t>(x);
      log[x] = i;
      x <<= 1;
      if (x & 0x100) x ^= kFieldPoly;
    }
    for (int i = 255; i < 512; ++i) exp[i] = exp[i - 255];
    log[0] = -1;
  }
};

const Tables& tables() {
  static const Tables t;
  return t;
}

// Polynomials below are stored lowest degree first.
using Poly = std::vector<std::uint8_t>;

std::uint8_t poly_eval(const Poly& p, std::uint8_t x) {
  std::uint8_t y = 0;
  for (size_t i = p.size(); i-- > 0;) y = static_cast<std::uint8_t>(gf_mul(y, x) ^ p[i]);
  return y;
}

void check_length(size_t data_len, int n_ec) {
  if (n_ec < 1 || n_ec > 254) fail(ErrorCode::kInvalidField, "n_ec must be in [1,254]");
  if (data_len + static_cast<size_t>(n_ec) > 255)
    fail(ErrorCode::kInvalidField, "codeword longer than 255 symbols");
}

}  // namespace

std::uint8_t gf_mul(std::uint8_t a, std::uint8_t b) {
  if (a == 0 || b == 0) return 0;
  const auto& t = tables();
  return t.exp[t.log[a] + t.log[b]];
}

std::uint8_t gf_inv(std::uint8_t a) {
  if (a == 0) fail(ErrorCode::kInvalidField, "zero has no inverse in GF(256)");
  const auto& t = tables();
  return t.exp[255 - t.log[a]];
}

std::uint8_t gf_pow(std::uint8_t a, int e) {
  if (e == 0) return 1;
  if (a == 0) return 0;
  const auto& t = tables();
  int l = static_cast<int>((static_cast<long long>(t.log[a]) * e) % 255);
  if (l < 0) l += 255;
  return t.exp[l];
}

std::uint8_t gf_exp(int e) {
  e %= 255;
  if (e < 0) e += 255;
  return tables().exp[e];
}

int gf_log(std::uint8_t a) {
  if (a == 0) fail(ErrorCode::kInvalidField, "log of zero in GF(256)");
  return tables().log[a];
}

Bytes generator(int n_ec) {
  // prod_{i<n_ec} (x - alpha^i), built highest degree first.
  Bytes g{1};
  for (int i = 0; i < n_ec; ++i) {
    Bytes next(g.size() + 1, 0);
    const std::uint8_t root = gf_exp(i);
    for (size_t j = 0; j < g.size(); ++j) {
      next[j] ^= g[j];
      next[j + 1] ^= gf_mul(g[j], root);
    }
    g = std::move(next);
  }
  return g;
}

Bytes encode(std::span<const std::uint8_t> data, int n_ec) {
  check_length(data.size(), n_ec);
  const Bytes g = generator(n_ec);
  Bytes rem(static_cast<size_t>(n_ec), 0);
  for (std::uint8_t d : data) {
    const std::uint8_t factor = d ^ rem[0];
    rem.erase(rem.begin());
    rem.push_back(0);
    for (int j = 0; j < n_ec; ++j) rem[j] ^= gf_mul(g[j + 1], factor);
  }
  return rem;
}

DecodeResult decode(std::span<const std::uint8_t> received, int n_ec) {
  if (received.size() <= static_cast<size_t>(n_ec)) fail(ErrorCode::kInvalidField, "codeword shorter than parity");
  check_length(received.size() - n_ec, n_ec);
  const int n = static_cast<int>(received.size());

  // r(x) = sum r[i] x^(n-1-i); syndromes S_j = r(alpha^j).
  Poly synd(static_cast<size_t>(n_ec), 0);
  bool clean = true;
  for (int j = 0; j < n_ec; ++j) {
    std::uint8_t s = 0;
    const std::uint8_t a = gf_exp(j);
    for (std::uint8_t r : received) s = static_cast<std::uint8_t>(gf_mul(s, a) ^ r);
    synd[j] = s;
    clean = clean && s == 0;
  }
  DecodeResult out;
  out.data.assign(received.begin(), received.end() - n_ec);
  if (clean) return out;

  // Berlekamp-Massey for the error locator Lambda.
  Poly lambda{1}, prev{1};
  int l = 0, m = 1;
  std::uint8_t b = 1;
  for (int k = 0; k < n_ec; ++k) {
    std::uint8_t d = synd[k];
    for (int i = 1; i <= l && i < static_cast<int>(lambda.size()); ++i) d ^= gf_mul(lambda[i], synd[k - i]);
    if (d == 0) {
      ++m;
      continue;
    }
    const std::uint8_t coef = gf_mul(d, gf_inv(b));
    Poly t = lambda;
    if (lambda.size() < prev.size() + m) lambda.resize(prev.size() + m, 0);
    for (size_t i = 0; i < prev.size(); ++i) lambda[i + m] ^= gf_mul(coef, prev[i]);
    if (2 * l <= k) {
      l = k + 1 - l;
      prev = std::move(t);
      b = d;
      m = 1;
    } else {
      ++m;
    }
  }
  while (lambda.size() > 1 && lambda.back() == 0) lambda.pop_back();
  const int n_err = static_cast<int>(lambda.size()) - 1;
  auto uncorrectable = [&](int estimate) {
    fail(ErrorCode::kUncorrectable,
         "uncorrectable codeword (estimated " + std::to_string(estimate) + " errors, capacity " +
             std::to_string(n_ec / 2) + ")");
  };
  if (n_err > n_ec / 2 || n_err != l) uncorrectable(std::max(n_err, n_ec / 2 + 1));

  // Chien search: position i is in error when Lambda(X_i^-1) = 0, X_i = alpha^(n-1-i).
  std::vector<int> positions;
  for (int i = 0; i < n; ++i)
    if (poly_eval(lambda, gf_exp(-(n - 1 - i))) == 0) positions.push_back(i);
  if (static_cast<int>(positions.size()) != n_err) uncorrectable(std::max(n_err, n_ec / 2 + 1));

  // Forney: Omega = S * Lambda mod x^n_ec, e = X * Omega(X^-1) / Lambda'(X^-1).
  Poly omega(static_cast<size_t>(n_ec), 0);
  for (int i = 0; i < n_ec; ++i)
    for (size_t j = 0; j < lambda.size() && j <= static_cast<size_t>(i); ++j)
      omega[i] ^= gf_mul(synd[i - j], lambda[j]);
  Poly dlambda(lambda.size() > 1 ? lambda.size() - 1 : 1, 0);
  for (size_t i = 1; i < lambda.size(); i += 2) dlambda[i - 1] = lambda[i];

  Bytes fixed(received.begin(), received.end());
  for (int pos : positions) {
    const std::uint8_t x = gf_exp(n - 1 - pos);
    const std::uint8_t xinv = gf_inv(x);
    const std::uint8_t den = poly_eval(dlambda, xinv);
    if (den == 0) uncorrectable(n_err);
    fixed[pos] ^= gf_mul(x, gf_mul(poly_eval(omega, xinv), gf_inv(den)));
  }

  for (int j = 0; j < n_ec; ++j) {
    std::uint8_t s = 0;
    const std::uint8_t a = gf_exp(j);
    for (std::uint8_t r : fixed) s = static_cast<std::uint8_t>(gf_mul(s, a) ^ r);
    if (s != 0) uncorrectable(n_ec / 2 + 1);
  }
  out.data.assign(fixed.begin(), fixed.end() - n_ec);
  out.corrected = n_err;
  return out;
}

}  // namespace pseal::rs
