#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "batchlens/imaging.hpp"

namespace batchlens::imaging {

/// Reads a binary PGM (P5, 8 or 16 bit) or a PNG into [0,1]. Gray inputs
/// yield one channel, color inputs three; alpha is dropped. When
/// `square_size` is set the result is bilinearly resized to that size.
Image load_image(const std::filesystem::path& path, std::optional<int> square_size = std::nullopt);

/// 8-bit outputs, values rounded to the nearest level.
void save_pgm(const Image& img, const std::filesystem::path& path);
void save_png(const Image& img, const std::filesystem::path& path);

struct ManifestEntry {
    std::string name;              // as written in the manifest
    std::filesystem::path resolved;
};

/// Newline-separated paths, relative entries resolved against the
/// manifest's directory. Blank lines and lines starting with '#' are skipped.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);

}  // namespace batchlens::imaging
