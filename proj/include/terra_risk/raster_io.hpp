#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace terra_risk {

// Header-free little-endian rasters. Sizes are checked against the expected
// element count; a short or long file is a DataError.

void write_f32(const std::filesystem::path& path, std::span<const float> values);
void write_f32(const std::filesystem::path& path, std::span<const double> values);
std::vector<float> read_f32(const std::filesystem::path& path, std::size_t expected_count);

void write_u16(const std::filesystem::path& path, std::span<const std::uint16_t> values);
std::vector<std::uint16_t> read_u16(const std::filesystem::path& path, std::size_t expected_count);

/// Writes `text` to a sibling temp file and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace terra_risk
