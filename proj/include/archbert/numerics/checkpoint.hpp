#pragma once

#include <string>

#include "archbert/numerics/autodiff.hpp"

namespace archbert {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// "ABKT" file: version, then per parameter in name order
/// [name-len u32][name][rank u32][dims u32...][f32 LE data].
std::string checkpoint_bytes(const ParamStore& params);
ParamStore checkpoint_from_bytes(const std::string& bytes);

void save_checkpoint(const ParamStore& params, const std::string& path);
ParamStore load_checkpoint(const std::string& path);

/// Rounds every value through 32-bit floats, as a save/load round trip does.
void round_to_f32(ParamStore& params);

std::string read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::string& bytes);

}  // namespace archbert
