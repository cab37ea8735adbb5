#include "damseg/binary_io.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "damseg/errors.hpp"

namespace damseg::io {

namespace {

template <typename T>
void put(std::ostream& out, T v) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    unsigned char buf[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw FormatError("binary: unexpected end of data");
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
    return v;
}

}  // namespace

void write_u16(std::ostream& out, std::uint16_t v) { put(out, v); }
void write_u32(std::ostream& out, std::uint32_t v) { put(out, v); }
void write_u64(std::ostream& out, std::uint64_t v) { put(out, v); }
void write_f64(std::ostream& out, double v) { put(out, std::bit_cast<std::uint64_t>(v)); }
void write_bytes(std::ostream& out, const std::string& bytes) {
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::uint16_t read_u16(std::istream& in) { return get<std::uint16_t>(in); }
std::uint32_t read_u32(std::istream& in) { return get<std::uint32_t>(in); }
std::uint64_t read_u64(std::istream& in) { return get<std::uint64_t>(in); }
double read_f64(std::istream& in) { return std::bit_cast<double>(get<std::uint64_t>(in)); }
std::string read_bytes(std::istream& in, std::size_t count) {
    std::string s(count, '\0');
    if (count && !in.read(s.data(), static_cast<std::streamsize>(count))) {
        throw FormatError("binary: unexpected end of data");
    }
    return s;
}

}  // namespace damseg::io
