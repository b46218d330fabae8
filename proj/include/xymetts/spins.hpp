#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace xymetts {

// Computational-basis state of an N-site spin-1/2 chain.
// sites[i] is 0 (down) or 1 (up); site 0 maps to the least significant bit
// of the basis index used by the dense oracles.
using SpinConfiguration = std::vector<std::uint8_t>;

inline std::uint64_t basis_index(const SpinConfiguration& x) {
  std::uint64_t idx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    idx |= static_cast<std::uint64_t>(x[i] & 1u) << i;
  }
  return idx;
}

inline SpinConfiguration config_from_index(std::uint64_t idx, int n_sites) {
  SpinConfiguration x(static_cast<std::size_t>(n_sites));
  for (int i = 0; i < n_sites; ++i) {
    x[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((idx >> i) & 1u);
  }
  return x;
}

inline int count_up(const SpinConfiguration& x) {
  int n = 0;
  for (auto s : x) n += s;
  return n;
}

inline std::string to_string(const SpinConfiguration& x) {
  std::string s;
  s.reserve(x.size());
  for (auto v : x) s.push_back(v ? '1' : '0');
  return s;
}

}  // namespace xymetts
