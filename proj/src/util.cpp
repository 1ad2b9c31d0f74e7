#include "stlmine/util.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>

namespace stlmine {

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

double parse_double(std::string_view s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

double decimal_product(std::int64_t k, double q) {
  std::string qt = format_double(q);
  bool qneg = false;
  std::size_t i = 0;
  if (!qt.empty() && qt[0] == '-') {
    qneg = true;
    i = 1;
  }
  std::string digits;
  int exp10 = 0;
  int frac = 0;
  bool in_frac = false;
  for (; i < qt.size(); ++i) {
    char c = qt[i];
    if (c == '.') {
      in_frac = true;
      continue;
    }
    if (c == 'e' || c == 'E') {
      exp10 = std::stoi(qt.substr(i + 1));
      break;
    }
    digits.push_back(c);
    if (in_frac) ++frac;
  }
  exp10 -= frac;
  unsigned __int128 mantissa = 0;
  for (char c : digits) mantissa = mantissa * 10 + static_cast<unsigned>(c - '0');
  bool kneg = k < 0;
  unsigned long long ka =
      kneg ? 0ull - static_cast<unsigned long long>(k) : static_cast<unsigned long long>(k);
  unsigned __int128 product = mantissa * ka;
  std::string body;
  if (product == 0) body = "0";
  while (product != 0) {
    body.push_back(static_cast<char>('0' + static_cast<int>(product % 10)));
    product /= 10;
  }
  std::reverse(body.begin(), body.end());
  std::string text;
  if (exp10 >= 0) {
    text = body + std::string(static_cast<std::size_t>(exp10), '0');
  } else {
    std::size_t shift = static_cast<std::size_t>(-exp10);
    if (body.size() <= shift) {
      text = "0." + std::string(shift - body.size(), '0') + body;
    } else {
      text = body.substr(0, body.size() - shift) + "." + body.substr(body.size() - shift);
    }
  }
  if (qneg != kneg && body != "0") text = "-" + text;
  return parse_double(text);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
  };
  std::vector<std::thread> pool;
  std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  pool.reserve(count);
  for (std::size_t k = 0; k < count; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

}  // namespace stlmine
