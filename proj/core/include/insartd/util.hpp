#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

namespace insartd {

/// splitmix64 step; the standard 64-bit mixer.
std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic sub-seed derivation: every consumer of randomness takes
/// the run seed plus a fixed stream tag, so stages never share a stream.
/// Tags in use: 1 = noise, 2 = outliers, 3 = truth maps, 4 = geometry.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Locale-independent shortest-round-trip formatting of a double.
std::string format_double(double v);

/// Parse a double written by format_double (or any plain decimal).
/// Throws std::invalid_argument on malformed input.
double parse_double(const std::string& s);

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Work items are
/// handed out via an atomic counter; outputs must go to disjoint slots.
/// workers <= 1 degenerates to a plain loop.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace insartd
