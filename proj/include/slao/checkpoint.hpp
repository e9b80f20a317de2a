// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "slao/matrix.hpp"

namespace slao {

struct NamedTensor {
    std::string name;
    Matrix value;
};

// Binary checkpoint layout (all integers little-endian):
//   magic "SLAO" | u32 version (1) | u32 tensor count
//   per tensor: u16 name length | UTF-8 name | u64 rows | u64 cols
//               | rows*cols IEEE-754 doubles, row-major
// Round trips are bitwise exact by construction.
void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::string& path);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace slao
