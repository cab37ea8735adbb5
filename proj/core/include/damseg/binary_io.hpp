#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace damseg::io {

// Little-endian primitives; readers throw FormatError on truncation.
void write_u16(std::ostream& out, std::uint16_t v);
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f64(std::ostream& out, double v);
void write_bytes(std::ostream& out, const std::string& bytes);

std::uint16_t read_u16(std::istream& in);
std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
double read_f64(std::istream& in);
std::string read_bytes(std::istream& in, std::size_t count);

}  // namespace damseg::io
