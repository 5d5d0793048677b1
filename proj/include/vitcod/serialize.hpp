#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "vitcod/autoencoder.hpp"
#include "vitcod/hw_config.hpp"
#include "vitcod/maskgen.hpp"
#include "vitcod/simulator.hpp"

namespace vitcod {

using Json = nlohmann::ordered_json;

// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

// Whole-file read; IoError if unreadable.
std::string read_text(const std::filesystem::path& path);
// Parses JSON text, FormatError on malformed input.
Json parse_json(const std::string& text, const std::string& what);

Json to_json(const HwConfig& hw);
// Missing keys keep their defaults; unknown keys and bad types raise
// ConfigError. The result is validated.
HwConfig hw_from_json(const Json& j);
HwConfig load_hw(const std::filesystem::path& path);

Json to_json(const MaskResult& r);
// FormatError for malformed documents, DomainError if the mask breaks the
// split invariants.
MaskResult mask_from_json(const Json& j);

Json to_json(const AeModule& m);
AeModule ae_from_json(const Json& j);

Json to_json(const SimReport& r);
SimReport report_from_json(const Json& j);
// One row per phase plus a trailing "total" row.
std::string report_csv(const SimReport& r);

}  // namespace vitcod
