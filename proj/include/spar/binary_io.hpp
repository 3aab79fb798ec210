#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "spar/types.hpp"

// Little-endian primitives for the model and index files.
namespace spar::binary {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

template <typename T>
void write_pod(std::ostream& out, T value)
{
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in)
{
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
        throw FormatError("unexpected end of binary file");
    }
    return value;
}

inline void write_string(std::ostream& out, std::string_view s)
{
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in)
{
    auto len = read_pod<std::uint32_t>(in);
    std::string s(len, '\0');
    if (len > 0 && !in.read(s.data(), len)) {
        throw FormatError("unexpected end of binary file");
    }
    return s;
}

inline void write_magic(std::ostream& out, std::string_view magic) { out.write(magic.data(), 8); }

inline void expect_magic(std::istream& in, std::string_view magic)
{
    char buf[8] = {};
    if (!in.read(buf, 8) || std::string_view(buf, 8) != magic) {
        throw FormatError("bad magic, expected " + std::string(magic));
    }
}

}  // namespace spar::binary
