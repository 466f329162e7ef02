#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace tabmoe::jsonio {

/// Canonical serialization: object keys sorted (nlohmann's default map), reals
/// printed with %.17g so every double round-trips and reruns are byte
/// identical. Throws NumericError on non-finite values.
std::string dump(const nlohmann::json& value);

/// Same, indented two spaces.
std::string dump_pretty(const nlohmann::json& value);

/// Parse with a ValidationError mentioning the path on failure.
nlohmann::json read_file(const std::filesystem::path& path);

/// Write via temp file + rename so readers never observe partial content.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

} // namespace tabmoe::jsonio
