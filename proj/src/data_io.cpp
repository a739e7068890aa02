#include <cmath>
#include <cstdio>
#include <sstream>

#include "layersparse/errors.hpp"
#include "layersparse/model_io.hpp"
#include "layersparse/training.hpp"

namespace layersparse {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string full_precision(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string dataset_to_csv(const DataSet& data) {
  std::string out;
  for (std::size_t c = 0; c < data.dim(); ++c) out += "x" + std::to_string(c + 1) + ",";
  out += "y\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t c = 0; c < data.dim(); ++c) out += full_precision(data.inputs(i, c)) + ",";
    out += full_precision(data.targets[i]) + "\n";
  }
  return out;
}

DataSet dataset_from_csv(const std::string& text, const std::string& context) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  std::vector<double> inputs;
  std::vector<double> targets;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_line(line);
    if (columns == 0) {
      if (fields.size() < 2 || fields.back() != "y") {
        throw ParseError(context + ":" + std::to_string(line_no) +
                         ": header must be x1,...,xd,y");
      }
      columns = fields.size();
      continue;
    }
    if (fields.size() != columns) {
      throw ParseError(context + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(columns) + " fields, got " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < columns; ++c) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(fields[c], &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != fields[c].size() || !std::isfinite(v)) {
        throw ParseError(context + ":" + std::to_string(line_no) + ": field " +
                         std::to_string(c + 1) + " is not a finite number");
      }
      (c + 1 == columns ? targets : inputs).push_back(v);
    }
  }
  if (columns == 0) throw ParseError(context + ": empty data file");
  const std::size_t n = targets.size();
  return DataSet{Matrix(n, columns - 1, std::move(inputs)), std::move(targets)};
}

void save_dataset(const DataSet& data, const std::filesystem::path& path) {
  write_file_atomic(path, dataset_to_csv(data));
}

DataSet load_dataset(const std::filesystem::path& path) {
  return dataset_from_csv(read_text_file(path), path.string());
}

}  // namespace layersparse
