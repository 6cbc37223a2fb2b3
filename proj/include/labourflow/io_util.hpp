#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace labourflow::io {

// Shortest decimal representation that round-trips through double, so that
// writing and re-reading a checkpoint is lossless and byte-stable.
std::string format_double(double v);

std::optional<double> parse_double(std::string_view s);
std::optional<std::int64_t> parse_int(std::string_view s);

std::vector<std::string_view> split(std::string_view line, char sep);

// Calls fn(line_number, line) for every line (1-based, no trailing '\n').
// Throws Error if the file cannot be opened.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::size_t, std::string_view)>& fn);

std::string read_file(const std::filesystem::path& path);

// Write-temp-then-rename so a crashed run never leaves a truncated file.
void atomic_write(const std::filesystem::path& path, std::string_view content);

// Runs fn(chunk_index, begin, end) over [0, n) split into contiguous chunks,
// using up to `workers` threads. Chunk boundaries depend only on n and
// chunk_size, so callers that merge per-chunk results in chunk order get
// scheduling-independent output.
void parallel_chunks(std::size_t n, int workers, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

}  // namespace labourflow::io
