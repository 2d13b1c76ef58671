#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dialsel/tensor.hpp"

namespace dialsel {

// Flat binary parameter file, little-endian throughout:
//   magic "DSELCKP1", u64 entry count,
//   per entry: u64 name length, name bytes, u64 rank, u64 dims[rank],
//   then all payloads in entry order as row-major float64.
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Tensor*>>& entries);

std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path);

}  // namespace dialsel
