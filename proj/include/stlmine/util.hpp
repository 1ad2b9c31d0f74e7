#pragma once

#include <charconv>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace stlmine {

/// Shortest decimal text that round-trips the double exactly.
std::string format_double(double v);

/// Locale-independent double parse of the full string. Throws std::invalid_argument.
double parse_double(std::string_view s);

/// The double nearest the exact decimal product k * q, where q is read back
/// from its shortest decimal text. Keeps quantum-grid arithmetic printable:
/// 72 * 0.001 yields 0.072, where the plain binary product is one ulp off
/// and renders as 0.07200000000000001.
double decimal_product(std::int64_t k, double q);

/// splitmix64 step; used to derive independent RNG streams from a base seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results must be written
/// to pre-sized slots keyed by i so the outcome is independent of scheduling.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace stlmine
