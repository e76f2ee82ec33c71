#pragma once

#include "uvm/neural.hpp"

#include <cstdint>
#include <iosfwd>

namespace uvm {

// Binary checkpoint primitives. Every integer and double is written
// little-endian regardless of host byte order; doubles go out as their
// IEEE-754 bit pattern, so round trips are bit-exact.
//
// Network record:
//   u32 in_dim | u32 hidden_dim | u32 out_dim | u64 param_count
//   f64[param_count] params (flat layout of Mlp::params())
//   f64[in_dim] input_shift | f64[in_dim] input_scale

inline constexpr std::uint32_t kCheckpointVersion = 1;
/// Bumped whenever the meaning of flat outputs changes (e.g. C-vine order).
inline constexpr std::uint32_t kOutputOrderingVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v);
void write_u64(std::ostream& os, std::uint64_t v);
void write_f64(std::ostream& os, double v);
std::uint32_t read_u32(std::istream& is);
std::uint64_t read_u64(std::istream& is);
double read_f64(std::istream& is);

void write_mlp(std::ostream& os, const Mlp& net);
Mlp read_mlp(std::istream& is);

}  // namespace uvm
