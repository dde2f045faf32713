#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>

namespace ppc {

/// Shortest decimal form of `v` that parses back to the same double.
/// Non-finite values render as "inf" / "-inf" (never NaN in engine output).
std::string format_double(double v);

/// Fixed 6-significant-digit rendering used in human-facing report text.
std::string format_sig6(double v);

/// splitmix64 mixer; the basis for all derived seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic seed for a named sub-stream: every generator in the engine
/// draws its seed from (master seed, path of indices) so runs are replayable
/// piecemeal and parallel workers never share a stream.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

std::string read_text_file(const std::filesystem::path& path);

/// Write via a sibling temp file and rename, so interrupted runs never leave
/// a truncated artifact behind.
void write_text_file_atomic(const std::filesystem::path& path, const std::string& content);

} // namespace ppc
