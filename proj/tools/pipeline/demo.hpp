#pragma once

#include <cstdint>
#include <filesystem>

namespace riskagg::pipeline {

/// Writes a small synthetic universe into `dir`: factors.csv (27 factors in
/// six categories plus a common market factor), categories.csv, assets.csv
/// (30 assets), and config.ini with three scenarios.
void write_demo(const std::filesystem::path& dir, std::uint64_t seed, int days = 1200);

}  // namespace riskagg::pipeline
