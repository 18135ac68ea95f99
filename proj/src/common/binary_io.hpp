#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

// Little-endian primitives shared by the FFAE/FFVQ/FFCK/FFOS containers.
namespace ffae::io {

void write_magic(std::ostream& out, std::string_view magic);
// Throws std::runtime_error naming `what` on mismatch.
void expect_magic(std::istream& in, std::string_view magic, std::string_view what);

void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f32(std::ostream& out, float v);
void write_f64(std::ostream& out, double v);
void write_string(std::ostream& out, std::string_view s);  // u32 length + bytes

std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
float read_f32(std::istream& in);
double read_f64(std::istream& in);
std::string read_string(std::istream& in);

}  // namespace ffae::io
