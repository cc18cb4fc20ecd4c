#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "certdp/bounds.hpp"
#include "certdp/dp.hpp"
#include "certdp/inference.hpp"
#include "certdp/model.hpp"
#include "certdp/value_table.hpp"

namespace certdp::io {

// Shortest decimal text that parses back to exactly x.
std::string format_double(double x);

nlohmann::json to_json(const ModelSpec& spec);
// Missing keys keep their defaults; unknown keys and wrong types throw ConfigError.
ModelSpec model_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const BoundCertificate& cert);
BoundCertificate certificate_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SolveReport& report);

// Header `state,choice,value`, one row per knot x choice, choice-major.
std::string value_table_csv(const ValueTable& vtab);
ValueTable parse_value_table_csv(const std::string& text, const std::string& origin = "<memory>");

// Header `t,state,choice` with t starting at 1.
std::string panel_csv(const Panel& panel);
Panel parse_panel_csv(const std::string& text, const std::string& origin = "<memory>");

// File helpers. Failures throw IoError naming the path.
std::string read_text(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it into place.
void write_text(const std::filesystem::path& path, const std::string& content);
void ensure_directory(const std::filesystem::path& dir);
nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

// Rejects keys of `j` outside `allowed`, naming `where` in the message.
void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where);

}  // namespace certdp::io
