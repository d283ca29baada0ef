#pragma once

#include <flockadapt/engine.hpp>

#include <filesystem>
#include <string>
#include <string_view>

namespace flockadapt {

/// Parses and validates a scenario document. `source_name` seeds the default
/// scenario name and prefixes error messages. Every default substitution is
/// recorded in Scenario::notices.
Scenario load_scenario_text(std::string_view text, const std::string& source_name = "scenario");

Scenario load_scenario(const std::filesystem::path& path);

/// Serializes every effective parameter; loading the result reproduces the
/// scenario exactly.
std::string write_scenario(const Scenario& scenario);

/// Shortest round-trip decimal form, locale independent.
std::string format_number(double value);

} // namespace flockadapt
