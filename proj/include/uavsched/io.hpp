#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "uavsched/instance.hpp"

namespace uavsched {

/// Instance text format:
///
///   uavsched v1
///   # rng mt19937_64 seed 7
///   vehicles 4
///   budget 2
///   depot 0.5 0.5
///   task 0.1 0.9
///   ...
///
/// '#' starts a comment anywhere on a line. Reals are written with 17
/// significant digits so a write/read cycle is exact.
std::string format_instance(const Instance& instance,
                            std::optional<std::uint64_t> seed = std::nullopt);
Instance parse_instance(std::string_view text);

/// Solution text format: one `route k: i1 i2 ...` line per vehicle.
std::string format_solution(const Solution& solution);
Solution parse_solution(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

Instance load_instance(const std::filesystem::path& path);
Solution load_solution(const std::filesystem::path& path);

// Shortest-roundtrip formatting for reals ("%.17g").
std::string format_real(double value);

}  // namespace uavsched
