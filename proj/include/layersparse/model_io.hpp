#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "layersparse/network.hpp"

namespace layersparse {

// {"widths": [...], "activations": [{"kind": ..., "slope": ...}], "weights": [[row-major], ...]}
nlohmann::json network_to_json(const Network& net);
// `context` prefixes error messages (typically the file path).
Network network_from_json(const nlohmann::json& doc, const std::string& context = "model");

void save_model(const Network& net, const std::filesystem::path& path);
Network load_model(const std::filesystem::path& path);

// Parses text as JSON, turning syntax errors into ParseError with line/column.
nlohmann::json parse_json_text(const std::string& text, const std::string& context);
nlohmann::json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over `path`, so a failed
// write never leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace layersparse

namespace layersparse {

struct DataSet;

// CSV with header x1,...,xd,y and one sample per line.
std::string dataset_to_csv(const DataSet& data);
DataSet dataset_from_csv(const std::string& text, const std::string& context = "data");
void save_dataset(const DataSet& data, const std::filesystem::path& path);
DataSet load_dataset(const std::filesystem::path& path);

}  // namespace layersparse
