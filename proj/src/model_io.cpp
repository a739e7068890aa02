#include "layersparse/model_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "layersparse/errors.hpp"

namespace layersparse {

using nlohmann::json;

namespace {

json activation_to_json(const Activation& act) {
  switch (act.kind) {
    case ActivationKind::Identity:
      return {{"kind", "identity"}};
    case ActivationKind::ReLU:
      return {{"kind", "relu"}};
    case ActivationKind::LeakyReLU:
      return {{"kind", "leaky_relu"}, {"slope", act.slope}};
  }
  return {};
}

Activation activation_from_json(const json& node, const std::string& where) {
  if (!node.is_object() || !node.contains("kind") || !node["kind"].is_string()) {
    throw ParseError(where + ": expected an object with a string field \"kind\"");
  }
  for (const auto& [key, _] : node.items()) {
    if (key != "kind" && key != "slope") throw ParseError(where + ": unknown field \"" + key + "\"");
  }
  const auto kind = node["kind"].get<std::string>();
  if (kind == "identity") return Activation::identity();
  if (kind == "relu") return Activation::relu();
  if (kind == "leaky_relu") {
    if (!node.contains("slope") || !node["slope"].is_number()) {
      throw ParseError(where + ": leaky_relu needs a numeric \"slope\"");
    }
    const double slope = node["slope"].get<double>();
    if (!(slope > 0.0 && slope < 1.0)) {
      throw ValidationError(where + ": leaky_relu slope must lie in (0,1)");
    }
    return Activation::leaky_relu(slope);
  }
  throw ParseError(where + ": unknown activation kind \"" + kind + "\"");
}

}  // namespace

json network_to_json(const Network& net) {
  json doc;
  doc["widths"] = net.widths();
  json acts = json::array();
  for (const auto& a : net.activations()) acts.push_back(activation_to_json(a));
  doc["activations"] = std::move(acts);
  json weights = json::array();
  for (const auto& w : net.weights()) {
    weights.push_back(std::vector<double>(w.data().begin(), w.data().end()));
  }
  doc["weights"] = std::move(weights);
  return doc;
}

Network network_from_json(const json& doc, const std::string& context) {
  if (!doc.is_object()) throw ParseError(context + ": top level must be an object");
  for (const char* field : {"widths", "activations", "weights"}) {
    if (!doc.contains(field) || !doc[field].is_array()) {
      throw ParseError(context + ": missing array field \"" + field + "\"");
    }
  }
  for (const auto& [key, _] : doc.items()) {
    if (key != "widths" && key != "activations" && key != "weights") {
      throw ParseError(context + ": unknown field \"" + key + "\"");
    }
  }
  std::vector<std::size_t> widths;
  for (std::size_t i = 0; i < doc["widths"].size(); ++i) {
    const auto& v = doc["widths"][i];
    if (!v.is_number_integer() || v.get<long long>() <= 0) {
      throw ParseError(context + ": widths[" + std::to_string(i) + "] must be a positive integer");
    }
    widths.push_back(v.get<std::size_t>());
  }
  if (widths.size() < 2) throw ValidationError(context + ": widths needs at least two entries");
  if (widths.front() != 1) {
    throw ValidationError(context + ": widths[0] (output width p1) must be 1, got " +
                          std::to_string(widths.front()));
  }
  const std::size_t depth = widths.size() - 1;
  if (doc["activations"].size() != depth) {
    throw ValidationError(context + ": " + std::to_string(depth) + " layers need " +
                          std::to_string(depth) + " activations, got " +
                          std::to_string(doc["activations"].size()));
  }
  if (doc["weights"].size() != depth) {
    throw ValidationError(context + ": " + std::to_string(depth) + " layers need " +
                          std::to_string(depth) + " weight arrays, got " +
                          std::to_string(doc["weights"].size()));
  }
  std::vector<Activation> acts;
  std::vector<Matrix> weights;
  for (std::size_t j = 0; j < depth; ++j) {
    acts.push_back(
        activation_from_json(doc["activations"][j], context + ": activations[" + std::to_string(j) + "]"));
    const auto& arr = doc["weights"][j];
    const std::string where = context + ": weights[" + std::to_string(j) + "]";
    if (!arr.is_array()) throw ParseError(where + " must be an array");
    const std::size_t rows = widths[j];
    const std::size_t cols = widths[j + 1];
    if (arr.size() != rows * cols) {
      throw ParseError(where + ": expected " + std::to_string(rows * cols) + " numbers for a " +
                       std::to_string(rows) + "x" + std::to_string(cols) + " matrix, got " +
                       std::to_string(arr.size()));
    }
    std::vector<double> entries;
    entries.reserve(arr.size());
    for (std::size_t k = 0; k < arr.size(); ++k) {
      if (!arr[k].is_number()) {
        throw ParseError(where + "[" + std::to_string(k) + "] is not a number");
      }
      const double v = arr[k].get<double>();
      if (!std::isfinite(v)) throw ValidationError(where + "[" + std::to_string(k) + "] is not finite");
      entries.push_back(v);
    }
    weights.emplace_back(rows, cols, std::move(entries));
  }
  try {
    return Network(std::move(weights), std::move(acts));
  } catch (const Error& e) {
    throw ValidationError(context + ": " + e.what());
  }
}

json parse_json_text(const std::string& text, const std::string& context) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t limit = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < limit; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError(context + ":" + std::to_string(line) + ":" + std::to_string(column) +
                     ": invalid JSON (" + e.what() + ")");
  }
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json read_json_file(const std::filesystem::path& path) {
  return parse_json_text(read_text_file(path), path.string());
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParameterError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw ParameterError("failed writing " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

void save_model(const Network& net, const std::filesystem::path& path) {
  write_file_atomic(path, network_to_json(net).dump(2) + "\n");
}

Network load_model(const std::filesystem::path& path) {
  return network_from_json(read_json_file(path), path.string());
}

}  // namespace layersparse
