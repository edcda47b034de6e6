#include "terra_risk/raster_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "terra_risk/error.hpp"

namespace terra_risk {

namespace {

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for " + path.string());
}

void check_size(const std::filesystem::path& path, std::size_t got, std::size_t expected) {
    if (got != expected) {
        throw DataError(path.string() + ": expected " + std::to_string(expected) + " bytes, found " + std::to_string(got));
    }
}

}  // namespace

void write_f32(const std::filesystem::path& path, std::span<const float> values) {
    std::vector<unsigned char> bytes(values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto bits = std::bit_cast<std::uint32_t>(values[i]);
        for (int b = 0; b < 4; ++b) bytes[i * 4 + static_cast<std::size_t>(b)] = static_cast<unsigned char>(bits >> (8 * b));
    }
    write_bytes(path, bytes);
}

void write_f32(const std::filesystem::path& path, std::span<const double> values) {
    std::vector<float> narrowed(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) narrowed[i] = static_cast<float>(values[i]);
    write_f32(path, std::span<const float>(narrowed));
}

std::vector<float> read_f32(const std::filesystem::path& path, std::size_t expected_count) {
    const auto bytes = read_bytes(path);
    check_size(path, bytes.size(), expected_count * 4);
    std::vector<float> out(expected_count);
    for (std::size_t i = 0; i < expected_count; ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[i * 4 + static_cast<std::size_t>(b)]) << (8 * b);
        out[i] = std::bit_cast<float>(bits);
    }
    return out;
}

void write_u16(const std::filesystem::path& path, std::span<const std::uint16_t> values) {
    std::vector<unsigned char> bytes(values.size() * 2);
    for (std::size_t i = 0; i < values.size(); ++i) {
        bytes[i * 2] = static_cast<unsigned char>(values[i] & 0xFF);
        bytes[i * 2 + 1] = static_cast<unsigned char>(values[i] >> 8);
    }
    write_bytes(path, bytes);
}

std::vector<std::uint16_t> read_u16(const std::filesystem::path& path, std::size_t expected_count) {
    const auto bytes = read_bytes(path);
    check_size(path, bytes.size(), expected_count * 2);
    std::vector<std::uint16_t> out(expected_count);
    for (std::size_t i = 0; i < expected_count; ++i) {
        out[i] = static_cast<std::uint16_t>(bytes[i * 2] | (bytes[i * 2 + 1] << 8));
    }
    return out;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp.string());
        out << text;
        if (!out) throw DataError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw DataError("cannot move " + tmp.string() + " into place: " + ec.message());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace terra_risk
